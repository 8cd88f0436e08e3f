//! Reflectance cubes, camera profiles, the common band grid and RGB rendering.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::colorimetry::{CameraRangeSpec, ReconstructionOptions, Reconstructor};
use crate::dataio::{ClassId, LabelMap};
use crate::error::{Error, Result};
use crate::spectra::{check_increasing, LinearResampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CameraModel {
    NuanceEx,
    SpecimIq,
}

impl CameraModel {
    pub const ALL: [CameraModel; 2] = [CameraModel::NuanceEx, CameraModel::SpecimIq];

    /// Name used in containers and manifests.
    pub fn name(self) -> &'static str {
        match self {
            CameraModel::NuanceEx => "NuanceEX",
            CameraModel::SpecimIq => "SpecimIQ",
        }
    }

    pub fn profile(self) -> CameraProfile {
        match self {
            CameraModel::NuanceEx => CameraProfile {
                model: self,
                band_wavelengths_nm: (0..51).map(|k| 450.0 + 10.0 * k as f64).collect(),
                range: CameraRangeSpec::nuance_ex(),
            },
            CameraModel::SpecimIq => CameraProfile {
                model: self,
                band_wavelengths_nm: (0..204).map(|k| 400.0 + 600.0 * k as f64 / 203.0).collect(),
                range: CameraRangeSpec::specim_iq(),
            },
        }
    }
}

impl fmt::Display for CameraModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CameraModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CameraModel::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Format(format!("unknown camera {s:?}")))
    }
}

/// Native band layout of a camera.
///
/// The Specim IQ layout is 204 evenly spaced bands over 400–1000 nm; files
/// that list their own wavelengths override it.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraProfile {
    pub model: CameraModel,
    pub band_wavelengths_nm: Vec<f64>,
    pub range: CameraRangeSpec,
}

/// `H x W x C` reflectance, band-interleaved by pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    height: usize,
    width: usize,
    wavelengths_nm: Vec<f64>,
    data: Vec<f64>,
    camera: CameraModel,
    clamped_on_ingest: usize,
}

impl SpectralCube {
    /// Builds a cube, clamping reflectance into `[0, 1]`. NaN is rejected.
    pub fn new(
        camera: CameraModel,
        height: usize,
        width: usize,
        wavelengths_nm: Vec<f64>,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!("empty cube {height}x{width}")));
        }
        if wavelengths_nm.is_empty() {
            return Err(Error::invalid("cube has no bands"));
        }
        check_increasing(&wavelengths_nm)?;
        let expected = height * width * wavelengths_nm.len();
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "cube {height}x{width}x{} needs {expected} values, got {}",
                wavelengths_nm.len(),
                data.len()
            )));
        }
        let mut clamped = 0;
        for (i, v) in data.iter_mut().enumerate() {
            if v.is_nan() {
                return Err(Error::invalid(format!("NaN reflectance at value {i}")));
            }
            if !(0.0..=1.0).contains(v) {
                *v = v.clamp(0.0, 1.0);
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::warn!("clamped {clamped} reflectance values into [0, 1]");
        }
        Ok(Self {
            height,
            width,
            wavelengths_nm,
            data,
            camera,
            clamped_on_ingest: clamped,
        })
    }

    /// Cube on the camera's native bands.
    pub fn native(
        camera: CameraModel,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            camera,
            height,
            width,
            camera.profile().band_wavelengths_nm,
            data,
        )
    }

    /// Every pixel carries the same spectrum.
    pub fn uniform(
        camera: CameraModel,
        height: usize,
        width: usize,
        wavelengths_nm: Vec<f64>,
        spectrum: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let px: Vec<f64> = wavelengths_nm.iter().map(|&w| spectrum(w)).collect();
        let data = px.repeat(height * width);
        Self::new(camera, height, width, wavelengths_nm, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.wavelengths_nm.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn camera(&self) -> CameraModel {
        self.camera
    }

    pub fn clamped_on_ingest(&self) -> usize {
        self.clamped_on_ingest
    }

    /// Spectrum of the pixel at flat index `row * width + col`.
    pub fn pixel(&self, index: usize) -> &[f64] {
        let c = self.bands();
        &self.data[index * c..(index + 1) * c]
    }

    pub fn pixel_at(&self, row: usize, col: usize) -> &[f64] {
        self.pixel(row * self.width + col)
    }

    pub fn is_native(&self) -> bool {
        self.wavelengths_nm == self.camera.profile().band_wavelengths_nm
    }

    /// Captured range as given by the first and last band.
    pub fn range_spec(&self) -> CameraRangeSpec {
        let mut spec = self.camera.profile().range;
        spec.captured_min_nm = self.wavelengths_nm[0];
        spec.captured_max_nm = self.wavelengths_nm[self.wavelengths_nm.len() - 1];
        spec
    }
}

/// 170 evenly spaced bands over 450–950 nm, both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonGrid {
    wavelengths_nm: Vec<f64>,
}

impl CommonGrid {
    pub const LEN: usize = 170;
    pub const MIN_NM: f64 = 450.0;
    pub const MAX_NM: f64 = 950.0;

    pub fn new() -> Self {
        let span = Self::MAX_NM - Self::MIN_NM;
        let last = (Self::LEN - 1) as f64;
        Self {
            wavelengths_nm: (0..Self::LEN)
                .map(|k| Self::MIN_NM + k as f64 * span / last)
                .collect(),
        }
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }
}

impl Default for CommonGrid {
    fn default() -> Self {
        Self::new()
    }
}

/// Linearly resamples every pixel onto the common grid.
pub fn resample_cube(cube: &SpectralCube, grid: &CommonGrid) -> Result<SpectralCube> {
    let target = grid.wavelengths();
    let (lo, hi) = (target[0], target[target.len() - 1]);
    let src = cube.wavelengths();
    if src[0] > lo || src[src.len() - 1] < hi {
        return Err(Error::invalid(format!(
            "cube bands {}..{} nm do not cover the grid range {lo}..{hi} nm",
            src[0],
            src[src.len() - 1]
        )));
    }
    let plan = LinearResampler::new(src, target)?;
    let c_in = cube.bands();
    let c_out = target.len();
    let mut out = vec![0.0; cube.pixel_count() * c_out];
    out.par_chunks_mut(c_out)
        .zip(cube.data().par_chunks(c_in))
        .for_each(|(dst, px)| plan.apply_into(px, dst));
    SpectralCube::new(
        cube.camera(),
        cube.height(),
        cube.width(),
        target.to_vec(),
        out,
    )
}

/// Gamma-encoded sRGB image, row-major, channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    /// 8-bit channels, `round(255 v)` with halves rounded up.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub image: RgbImage,
    /// Linear channels clipped into `[0, 1]` before gamma.
    pub clipped_channels: u64,
    /// Reflectance samples clamped into `[0, 1]` during integration.
    pub clamped_samples: u64,
}

pub fn render_rgb(cube: &SpectralCube) -> Result<RenderedImage> {
    render_rgb_with(cube, ReconstructionOptions::default())
}

/// Reconstructs every pixel on the cube's own bands.
pub fn render_rgb_with(
    cube: &SpectralCube,
    options: ReconstructionOptions,
) -> Result<RenderedImage> {
    let rec = Reconstructor::new(&cube.range_spec(), options)?;
    let weights = rec.weights(cube.wavelengths())?;
    let pixels = cube
        .data()
        .par_chunks(cube.bands())
        .map(|px| rec.pixel(&weights, px))
        .collect::<Result<Vec<_>>>()?;
    let clipped_channels = pixels.iter().map(|p| p.clipped_channels as u64).sum();
    let clamped_samples = pixels.iter().map(|p| p.clamped_samples as u64).sum();
    Ok(RenderedImage {
        image: RgbImage {
            height: cube.height(),
            width: cube.width(),
            pixels: pixels.into_iter().map(|p| p.rgb.to_array()).collect(),
        },
        clipped_channels,
        clamped_samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelMode {
    /// Rendered sRGB, 3 features.
    RgbPixel,
    /// Reflectance on the common grid, 170 features.
    SpectralPixel,
}

impl PixelMode {
    pub fn name(self) -> &'static str {
        match self {
            PixelMode::RgbPixel => "rgbpixel",
            PixelMode::SpectralPixel => "spixel",
        }
    }

    pub fn feature_width(self) -> usize {
        match self {
            PixelMode::RgbPixel => 3,
            PixelMode::SpectralPixel => CommonGrid::LEN,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            PixelMode::RgbPixel => 0,
            PixelMode::SpectralPixel => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PixelMode::RgbPixel),
            1 => Some(PixelMode::SpectralPixel),
            _ => None,
        }
    }
}

impl fmt::Display for PixelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PixelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgbpixel" => Ok(PixelMode::RgbPixel),
            "spixel" => Ok(PixelMode::SpectralPixel),
            other => Err(Error::invalid(format!(
                "unknown pixel mode {other:?}, expected rgbpixel or spixel"
            ))),
        }
    }
}

/// A cube with its sparse labels.
#[derive(Debug, Clone, Copy)]
pub struct LabeledCube<'a> {
    pub image_id: &'a str,
    pub cube: &'a SpectralCube,
    pub labels: &'a LabelMap,
}

/// Row-major feature table, one row per annotated pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDataset {
    pub mode: PixelMode,
    pub feature_width: usize,
    pub features: Vec<f64>,
    pub labels: Vec<ClassId>,
    /// `(image index, flat pixel index)` of each row.
    pub origins: Vec<(usize, usize)>,
    pub image_ids: Vec<String>,
    pub skipped_images: Vec<String>,
}

impl PixelDataset {
    pub fn empty(mode: PixelMode) -> Self {
        Self {
            mode,
            feature_width: mode.feature_width(),
            features: Vec::new(),
            labels: Vec::new(),
            origins: Vec::new(),
            image_ids: Vec::new(),
            skipped_images: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_width..(i + 1) * self.feature_width]
    }

    /// Keeps only rows whose class is in `classes`.
    pub fn retain_classes(&mut self, classes: &[ClassId]) {
        let w = self.feature_width;
        let keep: Vec<bool> = self.labels.iter().map(|c| classes.contains(c)).collect();
        let mut features = Vec::with_capacity(self.features.len());
        for (i, &k) in keep.iter().enumerate() {
            if k {
                features.extend_from_slice(&self.features[i * w..(i + 1) * w]);
            }
        }
        self.features = features;
        let mut it = keep.iter();
        self.labels.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.origins.retain(|_| *it.next().unwrap());
    }
}

/// Builds per-pixel features from annotated cubes.
///
/// Native cubes are resampled to the common grid for
/// [`PixelMode::SpectralPixel`] and rendered for [`PixelMode::RgbPixel`].
/// Unannotated pixels are skipped; images without any label are skipped with
/// a warning.
pub fn extract_pixel_dataset(images: &[LabeledCube<'_>], mode: PixelMode) -> Result<PixelDataset> {
    let grid = CommonGrid::new();
    let mut ds = PixelDataset::empty(mode);
    for (image_index, img) in images.iter().enumerate() {
        ds.image_ids.push(img.image_id.to_string());
        if img.labels.is_empty() {
            log::warn!("image {} has no annotated pixels, skipped", img.image_id);
            ds.skipped_images.push(img.image_id.to_string());
            continue;
        }
        if img.labels.height() != img.cube.height() || img.labels.width() != img.cube.width() {
            return Err(Error::Validation(format!(
                "image {}: labels are {}x{} but cube is {}x{}",
                img.image_id,
                img.labels.height(),
                img.labels.width(),
                img.cube.height(),
                img.cube.width()
            )));
        }
        match mode {
            PixelMode::SpectralPixel => {
                let resampled;
                let cube = if img.cube.wavelengths() == grid.wavelengths() {
                    img.cube
                } else {
                    resampled = resample_cube(img.cube, &grid)?;
                    &resampled
                };
                for (&pixel, &class) in img.labels.iter() {
                    ds.features.extend_from_slice(cube.pixel(pixel));
                    ds.labels.push(class);
                    ds.origins.push((image_index, pixel));
                }
            }
            PixelMode::RgbPixel => {
                let rendered = render_rgb(img.cube)?;
                for (&pixel, &class) in img.labels.iter() {
                    ds.features.extend_from_slice(&rendered.image.pixels[pixel]);
                    ds.labels.push(class);
                    ds.origins.push((image_index, pixel));
                }
            }
        }
    }
    Ok(ds)
}
