//! Reflectance to sRGB reconstruction.
//!
//! A reflectance spectrum `f` is weighted by the colour matching functions and
//! the illuminant `g` (D65), integrated over the camera's own band
//! wavelengths, normalized by `N = ∫ ȳ g dλ`, mapped to linear sRGB and gamma
//! encoded.
//!
//! Cameras that start capturing above 380 nm lose the short-wavelength part
//! of the matching functions, mostly of `z̄`, which tints renders yellow.
//! [`fold_correct_cmf`] mirrors the missing part of each matching function
//! about the first captured wavelength and adds it back on top of the
//! captured range, so the total weight of every channel is preserved.

pub mod tables;

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::spectra::{pchip_fit, trapz_weights, Interpolant, SampledSpectrum};

use tables::{CIE1931_2DEG, D65_SPD, TABLE_LEN, TABLE_START_NM, TABLE_STEP_NM};

/// Start of the CIE 1931 support; the lower edge of every fold window.
pub const CMF_SUPPORT_MIN_NM: f64 = 380.0;

/// Linear sRGB from CIE XYZ, rows R, G, B.
pub const XYZ_TO_LINEAR_SRGB: [[f64; 3]; 3] = [
    [3.2406255, -1.5372080, -0.4986286],
    [-0.9689307, 1.8757561, 0.0415175],
    [0.0557101, -0.2040211, 1.0569959],
];

/// Knee of the piecewise gamma curve.
pub const GAMMA_KNEE: f64 = 0.0031308;
/// Exponent of the upper gamma branch.
pub const GAMMA_EXPONENT: f64 = 0.416;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmfLabel {
    Original,
    CorrectedNuanceEx,
    CorrectedSpecimIq,
    /// Folded about a boundary that matches neither built-in camera.
    CorrectedOther,
}

/// The three colour matching channels on one wavelength grid.
#[derive(Debug, Clone)]
pub struct CmfSet {
    pub x_bar: SampledSpectrum,
    pub y_bar: SampledSpectrum,
    pub z_bar: SampledSpectrum,
    /// `ȳ` of the uncorrected observer. The XYZ normalizer always integrates
    /// this channel unless told otherwise, so it survives correction.
    pub reference_y: SampledSpectrum,
    pub label: CmfLabel,
}

impl CmfSet {
    pub fn new(
        x_bar: SampledSpectrum,
        y_bar: SampledSpectrum,
        z_bar: SampledSpectrum,
        label: CmfLabel,
    ) -> Result<Self> {
        if x_bar.wavelengths() != y_bar.wavelengths() || x_bar.wavelengths() != z_bar.wavelengths()
        {
            return Err(Error::invalid(
                "CMF channels must share one wavelength grid",
            ));
        }
        for (name, ch) in [("x_bar", &x_bar), ("y_bar", &y_bar), ("z_bar", &z_bar)] {
            if ch.values().iter().any(|&v| v < 0.0) {
                return Err(Error::invalid(format!("{name} has negative values")));
            }
        }
        Ok(Self {
            reference_y: y_bar.clone(),
            x_bar,
            y_bar,
            z_bar,
            label,
        })
    }

    pub fn wavelengths(&self) -> &[f64] {
        self.x_bar.wavelengths()
    }

    pub fn channels(&self) -> [&SampledSpectrum; 3] {
        [&self.x_bar, &self.y_bar, &self.z_bar]
    }
}

#[derive(Debug, Clone)]
pub struct Illuminant {
    pub spd: SampledSpectrum,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyzColor {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl XyzColor {
    pub fn scaled(self, s: f64) -> Self {
        Self {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgbColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    /// `true` while the channels are linear, `false` once gamma encoded.
    pub linear: bool,
}

impl RgbColor {
    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

/// Wavelength range a camera captures, relative to the CMF support start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRangeSpec {
    pub captured_min_nm: f64,
    pub captured_max_nm: f64,
    pub reference_min_nm: f64,
}

impl CameraRangeSpec {
    pub fn new(captured_min_nm: f64, captured_max_nm: f64) -> Result<Self> {
        if !(captured_min_nm.is_finite() && captured_max_nm.is_finite())
            || captured_max_nm <= captured_min_nm
        {
            return Err(Error::invalid(format!(
                "bad captured range [{captured_min_nm}, {captured_max_nm}]"
            )));
        }
        Ok(Self {
            captured_min_nm,
            captured_max_nm,
            reference_min_nm: CMF_SUPPORT_MIN_NM,
        })
    }

    pub fn nuance_ex() -> Self {
        Self {
            captured_min_nm: 450.0,
            captured_max_nm: 950.0,
            reference_min_nm: CMF_SUPPORT_MIN_NM,
        }
    }

    pub fn specim_iq() -> Self {
        Self {
            captured_min_nm: 400.0,
            captured_max_nm: 1000.0,
            reference_min_nm: CMF_SUPPORT_MIN_NM,
        }
    }

    pub fn has_missing_range(&self) -> bool {
        self.captured_min_nm > self.reference_min_nm
    }

    /// `[L, L + (L - reference_min)]`, the wavelengths receiving folded weight.
    pub fn fold_window(&self) -> (f64, f64) {
        let l = self.captured_min_nm;
        (l, l + (l - self.reference_min_nm))
    }
}

fn table_wavelengths() -> Vec<f64> {
    (0..TABLE_LEN)
        .map(|i| TABLE_START_NM + TABLE_STEP_NM * i as f64)
        .collect()
}

/// CIE 1931 2° observer, 380–830 nm at 5 nm.
pub fn builtin_cmf() -> CmfSet {
    static CMF: OnceLock<CmfSet> = OnceLock::new();
    CMF.get_or_init(|| {
        let wl = table_wavelengths();
        let channel = |c: usize| {
            SampledSpectrum::new(wl.clone(), CIE1931_2DEG.iter().map(|r| r[c]).collect())
                .expect("embedded CMF table is well formed")
        };
        CmfSet::new(channel(0), channel(1), channel(2), CmfLabel::Original)
            .expect("embedded CMF table is non-negative")
    })
    .clone()
}

/// CIE D65 relative spectral power, 380–830 nm at 5 nm, 100 at 560 nm.
pub fn builtin_d65() -> Illuminant {
    static D65: OnceLock<Illuminant> = OnceLock::new();
    D65.get_or_init(|| Illuminant {
        spd: SampledSpectrum::new(table_wavelengths(), D65_SPD.to_vec())
            .expect("embedded D65 table is well formed"),
        name: "D65".to_string(),
    })
    .clone()
}

/// Adds to each channel its mirror image about the first captured wavelength.
///
/// With `L = camera.captured_min_nm` every channel becomes
/// `c̄ₙ(λ) = c̄(λ) + c̄(2L − λ)` for `L ≤ λ ≤ 2L − 380` and stays `c̄(λ)`
/// elsewhere. Samples below `L` are kept on the grid; cubes from that camera
/// never sample them. `L` and the window end are inserted into the grid when
/// missing so the correction has sharp edges.
pub fn fold_correct_cmf(cmf: &CmfSet, camera: &CameraRangeSpec) -> Result<CmfSet> {
    if cmf.label != CmfLabel::Original {
        return Err(Error::invalid(format!(
            "fold correction expects the original CMF, got {:?}",
            cmf.label
        )));
    }
    if !camera.has_missing_range() {
        return Ok(cmf.clone());
    }
    let (lo, hi) = camera.fold_window();
    let l = camera.captured_min_nm;

    let mut grid = cmf.wavelengths().to_vec();
    for edge in [lo, hi] {
        if edge > grid[0] && edge < grid[grid.len() - 1] && !grid.contains(&edge) {
            let pos = grid.partition_point(|&w| w < edge);
            grid.insert(pos, edge);
        }
    }

    let fold = |channel: &SampledSpectrum| -> Result<SampledSpectrum> {
        let interp = pchip_fit(channel)?;
        let values = grid
            .iter()
            .map(|&w| {
                let base = interp.evaluate(w)?;
                if (lo..=hi).contains(&w) {
                    Ok(base + interp.evaluate(2.0 * l - w)?)
                } else {
                    Ok(base)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        SampledSpectrum::new(grid.clone(), values)
    };

    let label = if l == 450.0 {
        CmfLabel::CorrectedNuanceEx
    } else if l == 400.0 {
        CmfLabel::CorrectedSpecimIq
    } else {
        CmfLabel::CorrectedOther
    };
    Ok(CmfSet {
        x_bar: fold(&cmf.x_bar)?,
        y_bar: fold(&cmf.y_bar)?,
        z_bar: fold(&cmf.z_bar)?,
        reference_y: cmf.reference_y.clone(),
        label,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct XyzOptions {
    /// Integrate the corrected `ȳₙ` instead of the original `ȳ` in the
    /// normalizer. Off by default.
    pub normalize_with_corrected_y: bool,
}

/// Per-band integration weights for one band layout.
///
/// `X = Σ f_i · wx_i` and likewise for `Y`, `Z`, where each weight folds in
/// the interpolated matching function, the interpolated illuminant, the
/// trapezoid weight of band `i` and `1/N`. Bands outside the CMF or
/// illuminant support carry zero weight.
#[derive(Debug, Clone)]
pub struct TristimulusWeights {
    wavelengths_nm: Vec<f64>,
    weights: [Vec<f64>; 3],
    normalizer: f64,
}

impl TristimulusWeights {
    pub fn new(
        band_wavelengths_nm: &[f64],
        cmf: &CmfSet,
        illuminant: &Illuminant,
        options: XyzOptions,
    ) -> Result<Self> {
        if band_wavelengths_nm.len() < 2 {
            return Err(Error::invalid(
                "reflectance needs at least 2 bands to integrate",
            ));
        }
        crate::spectra::check_increasing(band_wavelengths_nm)?;

        let g = sample_zero_padded(&pchip_fit(&illuminant.spd)?, band_wavelengths_nm);
        let channels = [
            sample_zero_padded(&pchip_fit(&cmf.x_bar)?, band_wavelengths_nm),
            sample_zero_padded(&pchip_fit(&cmf.y_bar)?, band_wavelengths_nm),
            sample_zero_padded(&pchip_fit(&cmf.z_bar)?, band_wavelengths_nm),
        ];
        let norm_channel = if options.normalize_with_corrected_y {
            channels[1].clone()
        } else {
            sample_zero_padded(&pchip_fit(&cmf.reference_y)?, band_wavelengths_nm)
        };

        let tau = trapz_weights(band_wavelengths_nm);
        let normalizer: f64 = norm_channel
            .iter()
            .zip(&g)
            .zip(&tau)
            .map(|((y, g), t)| y * g * t)
            .sum();
        if normalizer.is_nan() || normalizer <= 0.0 {
            return Err(Error::invalid(format!(
                "bands {}..{} nm do not overlap the colour matching support",
                band_wavelengths_nm[0],
                band_wavelengths_nm[band_wavelengths_nm.len() - 1]
            )));
        }

        let weights = channels.map(|c| {
            c.iter()
                .zip(&g)
                .zip(&tau)
                .map(|((c, g), t)| c * g * t / normalizer)
                .collect()
        });
        Ok(Self {
            wavelengths_nm: band_wavelengths_nm.to_vec(),
            weights,
            normalizer,
        })
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    /// `N` as integrated on these bands.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn band_count(&self) -> usize {
        self.wavelengths_nm.len()
    }

    /// Integrates one reflectance vector, clamping each value into `[0, 1]`.
    /// Returns the colour and the number of clamped samples.
    pub fn integrate(&self, reflectance: &[f64]) -> Result<(XyzColor, usize)> {
        if reflectance.len() != self.wavelengths_nm.len() {
            return Err(Error::invalid(format!(
                "reflectance has {} bands, weights expect {}",
                reflectance.len(),
                self.wavelengths_nm.len()
            )));
        }
        let mut clamped = 0;
        let mut acc = [0.0f64; 3];
        for (i, &f) in reflectance.iter().enumerate() {
            let f = if f.is_nan() {
                return Err(Error::invalid(format!("NaN reflectance at band {i}")));
            } else if !(0.0..=1.0).contains(&f) {
                clamped += 1;
                f.clamp(0.0, 1.0)
            } else {
                f
            };
            for (a, w) in acc.iter_mut().zip(&self.weights) {
                *a += f * w[i];
            }
        }
        Ok((
            XyzColor {
                x: acc[0],
                y: acc[1],
                z: acc[2],
            },
            clamped,
        ))
    }
}

fn sample_zero_padded(interp: &Interpolant, at: &[f64]) -> Vec<f64> {
    at.iter().map(|&w| interp.evaluate_or_zero(w)).collect()
}

/// Tristimulus values of a reflectance spectrum with default options.
pub fn spectrum_to_xyz(
    reflectance: &SampledSpectrum,
    cmf: &CmfSet,
    illuminant: &Illuminant,
) -> Result<XyzColor> {
    spectrum_to_xyz_with(reflectance, cmf, illuminant, XyzOptions::default()).map(|(c, _)| c)
}

/// Like [`spectrum_to_xyz`], also returning the count of reflectance samples
/// clamped into `[0, 1]`.
pub fn spectrum_to_xyz_with(
    reflectance: &SampledSpectrum,
    cmf: &CmfSet,
    illuminant: &Illuminant,
    options: XyzOptions,
) -> Result<(XyzColor, usize)> {
    TristimulusWeights::new(reflectance.wavelengths(), cmf, illuminant, options)?
        .integrate(reflectance.values())
}

/// Matrix product without clipping.
pub fn xyz_to_linear_rgb_unclipped(xyz: XyzColor) -> [f64; 3] {
    let v = xyz.to_array();
    XYZ_TO_LINEAR_SRGB.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

/// Linear sRGB clipped to `[0, 1]`, with the number of clipped channels.
pub fn xyz_to_linear_rgb(xyz: XyzColor) -> (RgbColor, u32) {
    let raw = xyz_to_linear_rgb_unclipped(xyz);
    let mut clipped = 0;
    let [r, g, b] = raw.map(|c| {
        if (0.0..=1.0).contains(&c) {
            c
        } else {
            clipped += 1;
            c.clamp(0.0, 1.0)
        }
    });
    (
        RgbColor {
            r,
            g,
            b,
            linear: true,
        },
        clipped,
    )
}

pub fn gamma_encode(channel: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&channel) {
        return Err(Error::invalid(format!(
            "gamma input {channel} outside [0, 1]"
        )));
    }
    Ok(gamma_curve(channel))
}

/// The upper branch alone, for inspecting the knee.
pub fn gamma_upper_branch(x: f64) -> f64 {
    1.055 * x.powf(GAMMA_EXPONENT) - 0.055
}

/// The lower branch alone.
pub fn gamma_lower_branch(x: f64) -> f64 {
    12.92 * x
}

fn gamma_curve(x: f64) -> f64 {
    if x <= GAMMA_KNEE {
        gamma_lower_branch(x)
    } else {
        gamma_upper_branch(x)
    }
}

pub fn gamma_encode_rgb(rgb: RgbColor) -> Result<RgbColor> {
    if !rgb.linear {
        return Err(Error::invalid("colour is already gamma encoded"));
    }
    Ok(RgbColor {
        r: gamma_encode(rgb.r)?,
        g: gamma_encode(rgb.g)?,
        b: gamma_encode(rgb.b)?,
        linear: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconstructionOptions {
    /// Apply the fold correction for the camera's missing range.
    pub cmf_correction: bool,
    pub xyz: XyzOptions,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            cmf_correction: true,
            xyz: XyzOptions::default(),
        }
    }
}

/// Result of reconstructing one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedPixel {
    pub rgb: RgbColor,
    pub clipped_channels: u32,
    pub clamped_samples: usize,
}

/// Reusable reconstruction state for one camera range: the (optionally
/// corrected) observer and the illuminant.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    cmf: CmfSet,
    illuminant: Illuminant,
    options: ReconstructionOptions,
}

impl Reconstructor {
    pub fn new(camera: &CameraRangeSpec, options: ReconstructionOptions) -> Result<Self> {
        let original = builtin_cmf();
        let cmf = if options.cmf_correction {
            fold_correct_cmf(&original, camera)?
        } else {
            original
        };
        Ok(Self {
            cmf,
            illuminant: builtin_d65(),
            options,
        })
    }

    pub fn cmf(&self) -> &CmfSet {
        &self.cmf
    }

    pub fn weights(&self, band_wavelengths_nm: &[f64]) -> Result<TristimulusWeights> {
        TristimulusWeights::new(
            band_wavelengths_nm,
            &self.cmf,
            &self.illuminant,
            self.options.xyz,
        )
    }

    /// XYZ, clip to linear sRGB, gamma encode.
    pub fn pixel(
        &self,
        weights: &TristimulusWeights,
        reflectance: &[f64],
    ) -> Result<ReconstructedPixel> {
        let (xyz, clamped_samples) = weights.integrate(reflectance)?;
        let (linear, clipped_channels) = xyz_to_linear_rgb(xyz);
        Ok(ReconstructedPixel {
            rgb: gamma_encode_rgb(linear)?,
            clipped_channels,
            clamped_samples,
        })
    }
}

/// Full reconstruction of one reflectance spectrum with the fold correction.
pub fn reconstruct_rgb_pixel(
    reflectance: &SampledSpectrum,
    camera: &CameraRangeSpec,
) -> Result<RgbColor> {
    reconstruct_rgb_pixel_with(reflectance, camera, ReconstructionOptions::default()).map(|p| p.rgb)
}

pub fn reconstruct_rgb_pixel_with(
    reflectance: &SampledSpectrum,
    camera: &CameraRangeSpec,
    options: ReconstructionOptions,
) -> Result<ReconstructedPixel> {
    let rec = Reconstructor::new(camera, options)?;
    let weights = rec.weights(reflectance.wavelengths())?;
    rec.pixel(&weights, reflectance.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{trapz, trapz_xy};

    fn value_at(s: &SampledSpectrum, nm: f64) -> f64 {
        let i = s.wavelengths().iter().position(|&w| w == nm).unwrap();
        s.values()[i]
    }

    fn nuance_bands() -> Vec<f64> {
        (0..51).map(|k| 450.0 + 10.0 * k as f64).collect()
    }

    fn specim_bands() -> Vec<f64> {
        (0..204).map(|k| 400.0 + 600.0 * k as f64 / 203.0).collect()
    }

    fn full_bands() -> Vec<f64> {
        (0..91).map(|k| 380.0 + 5.0 * k as f64).collect()
    }

    #[test]
    fn cmf_table_sanity() {
        let cmf = builtin_cmf();
        assert_eq!(cmf.wavelengths().len(), 91);
        assert!((value_at(&cmf.y_bar, 555.0) - 1.0).abs() < 1e-9);
        assert!(value_at(&cmf.x_bar, 830.0) < 1e-4);
        for ch in cmf.channels() {
            assert!(ch.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn d65_table_sanity() {
        let d65 = builtin_d65();
        assert_eq!(value_at(&d65.spd, 560.0), 100.0);
        assert!(d65.spd.values().iter().all(|&v| v >= 0.0));
        assert_eq!(d65.spd.wavelengths().len(), d65.spd.values().len());
        assert_eq!(d65.spd.min_wavelength(), 380.0);
        assert_eq!(d65.spd.max_wavelength(), 830.0);
    }

    #[test]
    fn fold_examples_nuance() {
        let cmf = builtin_cmf();
        let c = fold_correct_cmf(&cmf, &CameraRangeSpec::nuance_ex()).unwrap();
        assert_eq!(c.label, CmfLabel::CorrectedNuanceEx);
        assert_eq!(value_at(&c.x_bar, 450.0), 2.0 * value_at(&cmf.x_bar, 450.0));
        assert_eq!(value_at(&c.x_bar, 600.0), value_at(&cmf.x_bar, 600.0));
        // 490 mirrors onto 410
        assert_eq!(
            value_at(&c.z_bar, 490.0),
            value_at(&cmf.z_bar, 490.0) + value_at(&cmf.z_bar, 410.0)
        );
    }

    #[test]
    fn fold_leaves_everything_past_window_untouched() {
        let cmf = builtin_cmf();
        for cam in [CameraRangeSpec::nuance_ex(), CameraRangeSpec::specim_iq()] {
            let c = fold_correct_cmf(&cmf, &cam).unwrap();
            let (_, hi) = cam.fold_window();
            for (orig, corr) in cmf.channels().iter().zip(c.channels()) {
                for (i, &w) in corr.wavelengths().iter().enumerate() {
                    if w > hi {
                        assert_eq!(corr.values()[i], value_at(orig, w));
                    }
                }
            }
        }
    }

    #[test]
    fn fold_conserves_weight() {
        let cmf = builtin_cmf();
        for cam in [CameraRangeSpec::nuance_ex(), CameraRangeSpec::specim_iq()] {
            let c = fold_correct_cmf(&cmf, &cam).unwrap();
            for (orig, corr) in cmf.channels().iter().zip(c.channels()) {
                let full = trapz(orig);
                let start = corr
                    .wavelengths()
                    .iter()
                    .position(|&w| w >= cam.captured_min_nm)
                    .unwrap();
                let captured = trapz_xy(&corr.wavelengths()[start..], &corr.values()[start..]);
                assert!(
                    ((captured - full) / full).abs() < 0.01,
                    "{captured} vs {full}"
                );
            }
        }
    }

    #[test]
    fn fold_is_noop_without_missing_range() {
        let cmf = builtin_cmf();
        let cam = CameraRangeSpec::new(380.0, 830.0).unwrap();
        let c = fold_correct_cmf(&cmf, &cam).unwrap();
        assert_eq!(c.label, CmfLabel::Original);
        assert_eq!(c.z_bar, cmf.z_bar);
    }

    #[test]
    fn fold_rejects_already_corrected() {
        let c = fold_correct_cmf(&builtin_cmf(), &CameraRangeSpec::nuance_ex()).unwrap();
        assert!(fold_correct_cmf(&c, &CameraRangeSpec::nuance_ex()).is_err());
    }

    #[test]
    fn fold_off_grid_boundary_inserts_edges() {
        let cam = CameraRangeSpec::new(452.5, 950.0).unwrap();
        let c = fold_correct_cmf(&builtin_cmf(), &cam).unwrap();
        assert_eq!(c.label, CmfLabel::CorrectedOther);
        assert!(c.wavelengths().contains(&452.5));
        assert!(c.wavelengths().contains(&525.0));
    }

    #[test]
    fn xyz_examples() {
        let cmf = builtin_cmf();
        let d65 = builtin_d65();
        let ones = SampledSpectrum::constant(full_bands(), 1.0).unwrap();
        let xyz = spectrum_to_xyz(&ones, &cmf, &d65).unwrap();
        assert!((xyz.y - 1.0).abs() < 1e-6);

        let zeros = SampledSpectrum::constant(full_bands(), 0.0).unwrap();
        let xyz = spectrum_to_xyz(&zeros, &cmf, &d65).unwrap();
        assert_eq!(xyz.to_array(), [0.0; 3]);

        let half = SampledSpectrum::constant(specim_bands(), 0.5).unwrap();
        let xyz = spectrum_to_xyz(&half, &cmf, &d65).unwrap();
        assert!((xyz.y - 0.5).abs() < 1e-6);
    }

    #[test]
    fn xyz_integral_matches_direct_trapezoid() {
        // route 2: build the integrand explicitly and run the composite rule
        let cmf = fold_correct_cmf(&builtin_cmf(), &CameraRangeSpec::nuance_ex()).unwrap();
        let d65 = builtin_d65();
        let bands = nuance_bands();
        let f = SampledSpectrum::from_fn(bands.clone(), |w| 0.3 + 0.2 * (w / 37.0).sin()).unwrap();
        let xyz = spectrum_to_xyz(&f, &cmf, &d65).unwrap();

        let on_bands = |s: &SampledSpectrum| -> Vec<f64> {
            let p = pchip_fit(s).unwrap();
            bands
                .iter()
                .map(|&w| p.evaluate(w).unwrap_or(0.0))
                .collect()
        };
        let g = on_bands(&d65.spd);
        let ybar = on_bands(&cmf.reference_y);
        let n = trapz_xy(
            &bands,
            &ybar.iter().zip(&g).map(|(a, b)| a * b).collect::<Vec<_>>(),
        );
        let want: Vec<f64> = cmf
            .channels()
            .iter()
            .map(|ch| {
                let c = on_bands(ch);
                let integrand: Vec<f64> = (0..bands.len())
                    .map(|i| c[i] * f.values()[i] * g[i])
                    .collect();
                trapz_xy(&bands, &integrand) / n
            })
            .collect();
        for (got, want) in xyz.to_array().iter().zip(&want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn xyz_rejects_single_band_and_counts_clamps() {
        let cmf = builtin_cmf();
        let d65 = builtin_d65();
        assert!(TristimulusWeights::new(&[500.0], &cmf, &d65, XyzOptions::default()).is_err());
        let s = SampledSpectrum::new(vec![500.0, 510.0, 520.0], vec![1.5, -0.1, 0.5]).unwrap();
        let (_, clamped) = spectrum_to_xyz_with(&s, &cmf, &d65, XyzOptions::default()).unwrap();
        assert_eq!(clamped, 2);
    }

    #[test]
    fn corrected_normalizer_option() {
        let cmf = fold_correct_cmf(&builtin_cmf(), &CameraRangeSpec::nuance_ex()).unwrap();
        let d65 = builtin_d65();
        let ones = SampledSpectrum::constant(nuance_bands(), 1.0).unwrap();
        let opts = XyzOptions {
            normalize_with_corrected_y: true,
        };
        let (xyz, _) = spectrum_to_xyz_with(&ones, &cmf, &d65, opts).unwrap();
        assert!((xyz.y - 1.0).abs() < 1e-12);
        let xyz = spectrum_to_xyz(&ones, &cmf, &d65).unwrap();
        assert!(xyz.y > 1.0);
    }

    #[test]
    fn matrix_examples() {
        let (black, clipped) = xyz_to_linear_rgb(XyzColor {
            x: 0.0,
            y: 0.0,
            z: 0.0,
        });
        assert_eq!(black.to_array(), [0.0; 3]);
        assert_eq!(clipped, 0);

        let white = xyz_to_linear_rgb_unclipped(XyzColor {
            x: 0.95047,
            y: 1.0,
            z: 1.08883,
        });
        for c in white {
            assert!((c - 1.0).abs() < 1e-3, "{white:?}");
        }

        let red = xyz_to_linear_rgb_unclipped(XyzColor {
            x: 0.4124,
            y: 0.2126,
            z: 0.0193,
        });
        assert!((red[0] - 1.0).abs() < 5e-3);
        assert!(red[1].abs() < 5e-3 && red[2].abs() < 5e-3, "{red:?}");

        // r = 6.48, g = -1.94, b = 0.11: two channels out of range
        let (_, clipped) = xyz_to_linear_rgb(XyzColor {
            x: 2.0,
            y: 0.0,
            z: 0.0,
        });
        assert_eq!(clipped, 2);
        // r = 5.49, g = -1.85, b = 2.23
        let (_, clipped) = xyz_to_linear_rgb(XyzColor {
            x: 2.0,
            y: 0.0,
            z: 2.0,
        });
        assert_eq!(clipped, 3);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_encode(0.0).unwrap(), 0.0);
        assert!((gamma_encode(1.0).unwrap() - 1.0).abs() < 1e-12);
        let lower = gamma_lower_branch(GAMMA_KNEE);
        let upper = gamma_upper_branch(GAMMA_KNEE);
        assert!((lower - 0.040450).abs() < 1e-6);
        assert!((upper - lower).abs() < 5e-4, "{lower} vs {upper}");
        assert!(gamma_encode(-0.01).is_err());
        assert!(gamma_encode(1.01).is_err());
        assert!(gamma_encode(f64::NAN).is_err());
    }

    #[test]
    fn gamma_strictly_increasing() {
        let mut prev = gamma_encode(0.0).unwrap();
        for k in 1..=10_000 {
            let v = gamma_encode(k as f64 / 10_000.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn reconstruct_examples() {
        let white_iq = reconstruct_rgb_pixel(
            &SampledSpectrum::constant(specim_bands(), 1.0).unwrap(),
            &CameraRangeSpec::specim_iq(),
        )
        .unwrap();
        assert!(!white_iq.linear);
        for c in white_iq.to_array() {
            assert!((0.95..=1.0).contains(&c), "{white_iq:?}");
        }

        let white_nu = reconstruct_rgb_pixel(
            &SampledSpectrum::constant(nuance_bands(), 1.0).unwrap(),
            &CameraRangeSpec::nuance_ex(),
        )
        .unwrap();
        for (a, b) in white_nu.to_array().iter().zip(white_iq.to_array()) {
            assert!((a - b).abs() < 0.02);
        }

        let black = reconstruct_rgb_pixel(
            &SampledSpectrum::constant(nuance_bands(), 0.0).unwrap(),
            &CameraRangeSpec::nuance_ex(),
        )
        .unwrap();
        assert_eq!(black.to_array(), [0.0; 3]);
    }

    #[test]
    fn uncorrected_nuance_is_yellow() {
        let opts = ReconstructionOptions {
            cmf_correction: false,
            ..Default::default()
        };
        let nu = reconstruct_rgb_pixel_with(
            &SampledSpectrum::constant(nuance_bands(), 1.0).unwrap(),
            &CameraRangeSpec::nuance_ex(),
            opts,
        )
        .unwrap();
        let iq = reconstruct_rgb_pixel_with(
            &SampledSpectrum::constant(specim_bands(), 1.0).unwrap(),
            &CameraRangeSpec::specim_iq(),
            opts,
        )
        .unwrap();
        assert!(nu.rgb.b < iq.rgb.b - 0.1, "{nu:?} {iq:?}");
    }

    #[test]
    fn full_range_cube_differs_only_in_window() {
        // a synthetic capture of 380..=830 at 5 nm, pretending the camera
        // started at 400: the corrected weights differ only inside the fold
        // window
        let bands = full_bands();
        let cam = CameraRangeSpec::specim_iq();
        let d65 = builtin_d65();
        let orig =
            TristimulusWeights::new(&bands, &builtin_cmf(), &d65, XyzOptions::default()).unwrap();
        let corr = TristimulusWeights::new(
            &bands,
            &fold_correct_cmf(&builtin_cmf(), &cam).unwrap(),
            &d65,
            XyzOptions::default(),
        )
        .unwrap();
        let (lo, hi) = cam.fold_window();
        for (i, &w) in bands.iter().enumerate() {
            for c in 0..3 {
                if w < lo || w > hi {
                    assert_eq!(orig.weights[c][i], corr.weights[c][i], "band {w}");
                }
            }
        }
    }
}
