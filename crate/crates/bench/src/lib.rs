//! Synthetic inputs shared by the benchmarks.

use specseg::{CameraModel, ClassId, PixelDataset, PixelMode, SpectralCube};

/// A smooth reflectance cube with a per-pixel tilt, on the camera's native bands.
pub fn synthetic_cube(camera: CameraModel, height: usize, width: usize) -> SpectralCube {
    let wl = camera.profile().band_wavelengths_nm;
    let n = (height * width) as f64;
    let mut data = Vec::with_capacity(height * width * wl.len());
    for pixel in 0..height * width {
        let t = pixel as f64 / n;
        data.extend(
            wl.iter()
                .map(|nm| (0.2 + 0.6 * t + 0.0002 * (nm - 700.0)).clamp(0.0, 1.0)),
        );
    }
    SpectralCube::new(camera, height, width, wl, data).expect("synthetic cube is valid")
}

/// Three flat-spectrum classes on the common grid.
pub fn separable_dataset(rows: usize) -> PixelDataset {
    let mut ds = PixelDataset::empty(PixelMode::SpectralPixel);
    for i in 0..rows {
        let k = (i % 3) as u16;
        let jitter = ((i * 7919) % 101) as f64 / 101.0 * 0.02;
        ds.features.extend(std::iter::repeat_n(
            0.2 * k as f64 + jitter,
            ds.feature_width,
        ));
        ds.labels.push(ClassId(k));
        ds.origins.push((0, i));
    }
    ds
}
