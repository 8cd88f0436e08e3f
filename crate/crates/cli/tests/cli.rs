use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use specseg::dataio::{write_annotation, write_cube};
use specseg::{CameraModel, ClassId, ClassRegistry, LabelMap, SpectralCube};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specseg"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("HSCB_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn flat_cube(dir: &Path, name: &str, camera: CameraModel, value: f64) -> PathBuf {
    let wl = camera.profile().band_wavelengths_nm;
    let cube = SpectralCube::uniform(camera, 2, 3, wl, |_| value).unwrap();
    let path = dir.join(name);
    write_cube(&path, &cube).unwrap();
    path
}

/// Images whose pixels carry class-specific flat spectra, row `r` of image
/// `i` labelled with reporting class `(i + r) % 9`.
fn synthetic_dataset(dir: &Path, images: usize) -> PathBuf {
    let registry = ClassRegistry::odsi();
    let reporting = registry.reporting_set().to_vec();
    let (h, w) = (4, 4);
    let mut manifest = String::new();
    for i in 0..images {
        let camera = if i % 2 == 0 {
            CameraModel::SpecimIq
        } else {
            CameraModel::NuanceEx
        };
        let wl = camera.profile().band_wavelengths_nm;
        let mut labels = LabelMap::new(h, w);
        let mut data = Vec::new();
        for px in 0..h * w {
            let k = (i + px / w) % reporting.len();
            labels.insert(px, reporting[k]).unwrap();
            let level = 0.05 + 0.1 * k as f64;
            data.extend(
                wl.iter()
                    .map(|nm| level + 0.0001 * (nm - 700.0) * (k % 3) as f64),
            );
        }
        let cube = SpectralCube::new(camera, h, w, wl, data).unwrap();
        let id = format!("img{i:02}");
        write_cube(&dir.join(format!("{id}.hscb")), &cube).unwrap();
        write_annotation(&dir.join(format!("{id}.csv")), &labels).unwrap();
        manifest.push_str(&format!("{id}\t{id}.hscb\t{id}.csv\t{camera}\n"));
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, manifest).unwrap();
    path
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(
        code(&run(&["convert", "--in", "a", "--out", "b", "--bogus"])),
        2
    );
    assert_eq!(code(&run(&["split", "--manifest", "m"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_1() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&[
        "convert",
        "--in",
        p(&t.path().join("missing.hscb")),
        "--out",
        p(&t.path().join("x.ppm")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing.hscb"));

    let junk = t.path().join("junk.hscb");
    fs::write(&junk, b"XXXXjunk").unwrap();
    let o = run(&[
        "convert",
        "--in",
        p(&junk),
        "--out",
        p(&t.path().join("x.ppm")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("magic"));
}

#[test]
fn convert_flat_white_and_uncorrected_baseline() {
    let t = tempfile::tempdir().unwrap();
    let cube = flat_cube(t.path(), "white.hscb", CameraModel::NuanceEx, 1.0);
    let a = t.path().join("a.ppm");
    let b = t.path().join("b.ppm");
    let o = run(&["convert", "--in", p(&cube), "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("clipped channels:"));
    let o = run(&[
        "convert",
        "--in",
        p(&cube),
        "--out",
        p(&b),
        "--no-cmf-correction",
    ]);
    assert_eq!(code(&o), 0);

    let header = b"P6\n3 2\n255\n";
    let corrected = fs::read(&a).unwrap();
    let uncorrected = fs::read(&b).unwrap();
    assert!(corrected.starts_with(header));
    let pix = &corrected[header.len()..];
    assert_eq!(pix.len(), 18);
    assert!(pix.iter().all(|&v| v >= 242), "{pix:?}");
    let upix = &uncorrected[header.len()..];
    for k in 0..6 {
        assert!(upix[3 * k + 2] < pix[3 * k + 2]);
    }

    let again = t.path().join("a2.ppm");
    run(&["convert", "--in", p(&cube), "--out", p(&again)]);
    assert_eq!(fs::read(&again).unwrap(), corrected);
}

#[test]
fn resample_writes_common_grid() {
    let t = tempfile::tempdir().unwrap();
    let cube = flat_cube(t.path(), "s.hscb", CameraModel::SpecimIq, 0.25);
    let out = t.path().join("r.hscb");
    let o = run(&["resample", "--in", p(&cube), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = specseg::dataio::read_cube(&out).unwrap();
    assert_eq!(r.bands(), 170);
    assert!(r.data().iter().all(|&v| v == 0.25));
}

#[test]
fn pipeline_end_to_end() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let manifest = synthetic_dataset(d, 12);

    let o = run(&[
        "census",
        "--manifest",
        p(&manifest),
        "--out",
        p(&d.join("census.csv")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let census = fs::read_to_string(d.join("census.csv")).unwrap();
    assert!(census.starts_with("class,pixels,images\n"));
    assert_eq!(census.lines().count(), 36);
    assert_eq!(
        code(&run(&[
            "census",
            "--manifest",
            p(&manifest),
            "--check-reference"
        ])),
        1
    );

    let split = d.join("split.tsv");
    let o = run(&[
        "split",
        "--manifest",
        p(&manifest),
        "--out",
        p(&split),
        "--seed",
        "7",
        "--report",
        p(&d.join("split.txt")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(d.join("split.txt"))
        .unwrap()
        .contains("violations (0)"));
    let split2 = d.join("split2.tsv");
    run(&[
        "split",
        "--manifest",
        p(&manifest),
        "--out",
        p(&split2),
        "--seed",
        "7",
    ]);
    assert_eq!(fs::read(&split).unwrap(), fs::read(&split2).unwrap());
    assert_eq!(
        code(&run(&[
            "split",
            "--manifest",
            p(&manifest),
            "--out",
            p(&split2),
            "--test-probability",
            "1.5"
        ])),
        1
    );

    for mode in ["rgbpixel", "spixel"] {
        let model = d.join(format!("{mode}.pxnt"));
        let train = |out: &Path| {
            run(&[
                "train-pixel",
                "--manifest",
                p(&split),
                "--mode",
                mode,
                "--out",
                p(out),
                "--epochs",
                "5",
                "--seed",
                "3",
                "--history",
                p(&d.join("hist.csv")),
            ])
        };
        let o = train(&model);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let model2 = d.join(format!("{mode}2.pxnt"));
        train(&model2);
        assert_eq!(fs::read(&model).unwrap(), fs::read(&model2).unwrap());
        assert!(
            fs::read_to_string(d.join("hist.csv"))
                .unwrap()
                .lines()
                .count()
                == 6
        );

        let preds = d.join(format!("pred-{mode}"));
        let o = run(&[
            "predict-pixel",
            "--manifest",
            p(&split),
            "--model",
            p(&model),
            "--out",
            p(&preds),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let report = d.join(format!("report-{mode}.txt"));
        let o = run(&[
            "eval",
            "--manifest",
            p(&split),
            "--predictions",
            p(&preds),
            "--report",
            p(&report),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let text = fs::read_to_string(&report).unwrap();
        assert!(text.contains("Image-based accuracy"));
        let csv = fs::read_to_string(format!("{}.csv", report.display())).unwrap();
        assert!(csv.starts_with("class,sensitivity,specificity,accuracy,balanced_accuracy\n"));
        assert!(csv.lines().last().unwrap().starts_with("Average,"));
    }
    assert_eq!(
        code(&run(&[
            "train-pixel",
            "--manifest",
            p(&manifest),
            "--mode",
            "spixel",
            "--out",
            p(&d.join("m"))
        ])),
        1
    );
    assert_eq!(
        code(&run(&[
            "train-pixel",
            "--manifest",
            p(&split),
            "--mode",
            "rgbimage",
            "--out",
            p(&d.join("m"))
        ])),
        1
    );
}

fn write_predictions(
    dir: &Path,
    manifest_dir: &Path,
    images: usize,
    f: impl Fn(ClassId) -> ClassId,
) {
    let registry = ClassRegistry::odsi();
    fs::create_dir_all(dir).unwrap();
    for i in 0..images {
        let id = format!("img{i:02}");
        let labels = specseg::dataio::read_annotation(
            &manifest_dir.join(format!("{id}.csv")),
            4,
            4,
            &registry,
        )
        .unwrap();
        let mut pred = LabelMap::new(4, 4);
        for (&px, &c) in labels.iter() {
            pred.insert(px, f(c)).unwrap();
        }
        write_annotation(&dir.join(format!("{id}.csv")), &pred).unwrap();
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn eval_perfect_and_constant_predictions() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let manifest = synthetic_dataset(d, 9);

    let perfect = d.join("perfect");
    write_predictions(&perfect, d, 9, |c| c);
    let report = d.join("perfect.txt");
    let o = run(&[
        "eval",
        "--manifest",
        p(&manifest),
        "--predictions",
        p(&perfect),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for row in csv_rows(&PathBuf::from(format!("{}.csv", report.display()))) {
        assert_eq!(&row[1..], ["100.00"; 4], "{row:?}");
    }
    assert!(fs::read_to_string(&report)
        .unwrap()
        .contains("Image-based accuracy (%): 100.00"));

    let registry = ClassRegistry::odsi();
    let skin = registry.by_name("Skin").unwrap();
    let constant = d.join("constant");
    write_predictions(&constant, d, 9, |_| skin);
    let report = d.join("constant.txt");
    assert_eq!(
        code(&run(&[
            "eval",
            "--manifest",
            p(&manifest),
            "--predictions",
            p(&constant),
            "--report",
            p(&report)
        ])),
        0
    );
    for row in csv_rows(&PathBuf::from(format!("{}.csv", report.display()))) {
        match row[0].as_str() {
            "Skin" => assert_eq!(row[1], "100.00"),
            "Average" => {}
            _ => assert_eq!(row[1], "0.00", "{row:?}"),
        }
    }
}

#[test]
fn eval_four_pixel_fixture() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let registry = ClassRegistry::odsi();
    let a = registry.by_name("Skin").unwrap();
    let b = registry.by_name("Enamel").unwrap();
    let wl = CameraModel::SpecimIq.profile().band_wavelengths_nm;
    let cube = SpectralCube::uniform(CameraModel::SpecimIq, 1, 4, wl, |_| 0.5).unwrap();
    write_cube(&d.join("c.hscb"), &cube).unwrap();
    let mut truth = LabelMap::new(1, 4);
    let mut pred = LabelMap::new(1, 4);
    for (px, (t, p)) in [(a, a), (a, b), (b, b), (b, b)].into_iter().enumerate() {
        truth.insert(px, t).unwrap();
        pred.insert(px, p).unwrap();
    }
    write_annotation(&d.join("c.csv"), &truth).unwrap();
    fs::create_dir(d.join("pred")).unwrap();
    write_annotation(&d.join("pred/four.csv"), &pred).unwrap();
    fs::write(d.join("m.tsv"), "four\tc.hscb\tc.csv\tSpecimIQ\ttest\n").unwrap();

    let report = d.join("r.txt");
    let o = run(&[
        "eval",
        "--manifest",
        p(&d.join("m.tsv")),
        "--predictions",
        p(&d.join("pred")),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&PathBuf::from(format!("{}.csv", report.display())));
    let find = |name: &str| rows.iter().find(|r| r[0] == name).unwrap().clone();
    assert_eq!(find("Skin")[1..], ["50.00", "100.00", "75.00", "75.00"]);
    assert_eq!(find("Enamel")[1..], ["100.00", "50.00", "75.00", "75.00"]);
    assert_eq!(find("Average")[1..], ["75.00", "75.00", "75.00", "75.00"]);
    assert!(fs::read_to_string(&report)
        .unwrap()
        .contains("Image-based accuracy (%): 75.00"));

    fs::remove_file(d.join("pred/four.csv")).unwrap();
    let o = run(&[
        "eval",
        "--manifest",
        p(&d.join("m.tsv")),
        "--predictions",
        p(&d.join("pred")),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("four"));
}

#[test]
fn selftest_and_thread_variable() {
    let o = run(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(
        String::from_utf8_lossy(&o.stdout).matches("PASS").count(),
        4
    );

    let bad = bin()
        .arg("selftest")
        .env("HSCB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
    let two = bin()
        .arg("selftest")
        .env("HSCB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&two), 0);
    let auto = bin()
        .arg("selftest")
        .env("HSCB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&auto), 0);
}
