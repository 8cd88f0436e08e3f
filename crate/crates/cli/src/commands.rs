use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use specseg::colorimetry::{
    builtin_cmf, builtin_d65, gamma_lower_branch, gamma_upper_branch, reconstruct_rgb_pixel,
    ReconstructionOptions, GAMMA_KNEE,
};
use specseg::cube::{extract_pixel_dataset, render_rgb_with, resample_cube, LabeledCube};
use specseg::dataio::{
    census_mismatches, class_pixel_census, read_annotation, read_cube, write_annotation,
    write_cube, write_ppm,
};
use specseg::metrics::{image_based_accuracy, pool_confusions, ClassReport, ImagePrediction};
use specseg::pixelnet::{history_csv, predict_image, read_model, train, write_model};
use specseg::splitgen::{generate_split, validate_split};
use specseg::{
    AnnotatedImage, CameraModel, ClassRegistry, CommonGrid, DatasetManifest, LabelMap, PixelMode,
    SampledSpectrum, SplitConfig, SplitTag, TrainConfig,
};

pub fn convert(input: &Path, out: &Path, correction: bool) -> Result<()> {
    let cube = read_cube(input)?;
    let options = ReconstructionOptions {
        cmf_correction: correction,
        ..Default::default()
    };
    let rendered = render_rgb_with(&cube, options)?;
    write_ppm(out, &rendered.image)?;
    println!(
        "wrote {} ({}x{}), clipped channels: {}",
        out.display(),
        rendered.image.width,
        rendered.image.height,
        rendered.clipped_channels
    );
    if rendered.clamped_samples > 0 {
        println!("clamped reflectance samples: {}", rendered.clamped_samples);
    }
    Ok(())
}

pub fn resample(input: &Path, out: &Path) -> Result<()> {
    let cube = read_cube(input)?;
    let resampled = resample_cube(&cube, &CommonGrid::new())?;
    write_cube(out, &resampled)?;
    println!(
        "wrote {} ({}x{}x{})",
        out.display(),
        resampled.height(),
        resampled.width(),
        resampled.bands()
    );
    Ok(())
}

pub fn census(manifest: &Path, out: Option<&Path>, check_reference: bool) -> Result<()> {
    let registry = ClassRegistry::odsi();
    let m = DatasetManifest::read(manifest, &registry)?;
    let counts = class_pixel_census(&m, &registry);
    let mut csv = String::from("class,pixels,images\n");
    let width = registry
        .entries()
        .iter()
        .map(|e| e.name.len())
        .max()
        .unwrap_or(0);
    for c in &counts {
        let name = registry.name(c.class).unwrap_or("?");
        println!("{name:<width$}  {:>10}  {:>4}", c.pixels, c.images);
        let _ = writeln!(csv, "{name},{},{}", c.pixels, c.images);
    }
    if let Some(path) = out {
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    if check_reference {
        let diff = census_mismatches(&counts, &registry);
        if !diff.is_empty() {
            for (got, want) in &diff {
                eprintln!(
                    "{}: {} pixels / {} images, reference {} / {}",
                    registry.name(got.class).unwrap_or("?"),
                    got.pixels,
                    got.images,
                    want.pixels,
                    want.images
                );
            }
            bail!("{} classes differ from the reference census", diff.len());
        }
        println!("census matches the reference table");
    }
    Ok(())
}

pub fn split(
    manifest: &Path,
    out: &Path,
    seed: u64,
    test_probability: f64,
    report: Option<&Path>,
) -> Result<()> {
    let registry = ClassRegistry::odsi();
    let m = DatasetManifest::read(manifest, &registry)?;
    let cfg = SplitConfig::new(seed, test_probability)?;
    let outcome = generate_split(&m, &registry, &cfg)?;
    outcome.manifest.write(out)?;
    let mut text = validate_split(&outcome.manifest, &registry).to_string();
    for w in &outcome.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    print!("{text}");
    if let Some(path) = report {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load_cubes(images: &[&AnnotatedImage]) -> Result<Vec<specseg::SpectralCube>> {
    images
        .iter()
        .map(|img| read_cube(&img.cube_path).with_context(|| format!("image {}", img.image_id)))
        .collect()
}

pub fn train_pixel(
    manifest: &Path,
    mode: &str,
    out: &Path,
    history: Option<&Path>,
    cfg: &TrainConfig,
) -> Result<()> {
    let mode: PixelMode = mode.parse()?;
    let registry = ClassRegistry::odsi();
    let m = DatasetManifest::read(manifest, &registry)?;
    let images: Vec<&AnnotatedImage> = m.with_split(SplitTag::Train).collect();
    if images.is_empty() {
        bail!("manifest has no train images; run `split` first");
    }
    let cubes = load_cubes(&images)?;
    let labeled: Vec<LabeledCube> = images
        .iter()
        .zip(&cubes)
        .map(|(img, cube)| LabeledCube {
            image_id: &img.image_id,
            cube,
            labels: &img.labels,
        })
        .collect();
    let mut ds = extract_pixel_dataset(&labeled, mode)?;
    ds.retain_classes(registry.reporting_set());
    println!(
        "training {} on {} pixels from {} images",
        mode,
        ds.len(),
        images.len()
    );
    let outcome = train(&ds, cfg)?;
    write_model(out, &outcome.model)?;
    if let Some(path) = history {
        fs::write(path, history_csv(&outcome.history))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(last) = outcome.history.last() {
        println!(
            "epochs: {}, final mean loss: {:.6}, running accuracy: {:.4}",
            outcome.history.len(),
            last.mean_loss,
            last.running_accuracy
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn prediction_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}.csv"))
}

pub fn predict_pixel(manifest: &Path, model: &Path, out: &Path, all: bool) -> Result<()> {
    let registry = ClassRegistry::odsi();
    let m = DatasetManifest::read(manifest, &registry)?;
    let model = read_model(model)?;
    let images: Vec<&AnnotatedImage> = if all {
        m.images.iter().collect()
    } else {
        m.with_split(SplitTag::Test).collect()
    };
    if images.is_empty() {
        bail!("no images to predict; tag test images with `split` or pass --all");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for img in images {
        let cube = read_cube(&img.cube_path).with_context(|| format!("image {}", img.image_id))?;
        let pred = predict_image(&model, &img.image_id, &cube, &img.labels)?;
        write_annotation(&prediction_path(out, &img.image_id), &pred)?;
    }
    println!("wrote predictions to {}", out.display());
    Ok(())
}

pub fn eval(manifest: &Path, predictions: &Path, report: &Path) -> Result<()> {
    let registry = ClassRegistry::odsi();
    let m = DatasetManifest::read(manifest, &registry)?;
    let mut images: Vec<&AnnotatedImage> = m.with_split(SplitTag::Test).collect();
    let scope = if images.is_empty() {
        images = m.with_split(SplitTag::None).collect();
        "untagged"
    } else {
        "test"
    };
    if images.is_empty() {
        bail!("manifest has neither test nor untagged images to evaluate");
    }
    let predicted: Vec<LabelMap> = images
        .iter()
        .map(|img| {
            let path = prediction_path(predictions, &img.image_id);
            if !path.exists() {
                bail!(
                    "missing prediction file for image {}: {}",
                    img.image_id,
                    path.display()
                );
            }
            Ok(read_annotation(
                &path,
                img.labels.height(),
                img.labels.width(),
                &registry,
            )?)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<ImagePrediction> = images
        .iter()
        .zip(&predicted)
        .map(|(img, p)| ImagePrediction {
            image_id: &img.image_id,
            truth: &img.labels,
            predicted: p,
        })
        .collect();
    let reporting = registry.reporting_set();
    let confusions = pool_confusions(&pairs, reporting)?;
    let class_report = ClassReport::from_confusions(&confusions, &registry)?;
    let image_acc = image_based_accuracy(&pairs, reporting)?;

    let mut text = format!(
        "Evaluated {} {scope} images.\n\nClass-based results (%)\n",
        images.len()
    );
    text.push_str(&class_report.to_text());
    let _ = writeln!(
        text,
        "\nImage-based accuracy (%): {}",
        specseg::metrics::format_percent(image_acc)
    );
    fs::write(report, &text).with_context(|| format!("writing {}", report.display()))?;
    let csv_path = PathBuf::from(format!("{}.csv", report.display()));
    fs::write(&csv_path, class_report.to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    print!("{text}");
    Ok(())
}

pub fn selftest() -> Result<()> {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let cmf = builtin_cmf();
    let (peak_i, peak) = cmf
        .y_bar
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let peak_nm = cmf.wavelengths()[peak_i];
    check(
        "luminosity peak",
        peak_nm == 555.0 && (peak - 1.0).abs() < 1e-9,
        format!("y_bar max {peak} at {peak_nm} nm"),
    );

    let d65 = builtin_d65();
    let i560 = d65.spd.wavelengths().iter().position(|&w| w == 560.0);
    let v560 = i560.map(|i| d65.spd.values()[i]).unwrap_or(f64::NAN);
    check(
        "D65 at 560 nm",
        (v560 - 100.0).abs() < 1e-9,
        format!("{v560}"),
    );

    let gap = (gamma_upper_branch(GAMMA_KNEE) - gamma_lower_branch(GAMMA_KNEE)).abs();
    check(
        "gamma continuity",
        gap < 5e-4,
        format!("branch gap {gap:.3e} at the knee"),
    );

    let mut rgbs = Vec::new();
    for camera in CameraModel::ALL {
        let p = camera.profile();
        let flat = SampledSpectrum::constant(p.band_wavelengths_nm.clone(), 1.0)?;
        rgbs.push(reconstruct_rgb_pixel(&flat, &p.range)?.to_array());
    }
    let spread = rgbs[0]
        .iter()
        .zip(&rgbs[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        "flat white across cameras",
        spread < 0.02,
        format!("max channel difference {spread:.4}"),
    );

    if failures > 0 {
        bail!("{failures} self-test checks failed");
    }
    Ok(())
}
