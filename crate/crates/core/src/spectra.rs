//! Sampled spectral functions, shape-preserving cubic interpolation and
//! trapezoidal quadrature.

use crate::error::{Error, Result};

/// A real function sampled at strictly increasing wavelengths (nm).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    wavelengths_nm: Vec<f64>,
    values: Vec<f64>,
}

impl SampledSpectrum {
    pub fn new(wavelengths_nm: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} wavelengths but {} values",
                wavelengths_nm.len(),
                values.len()
            )));
        }
        if wavelengths_nm.len() < 2 {
            return Err(Error::invalid("a spectrum needs at least 2 samples"));
        }
        check_increasing(&wavelengths_nm)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at sample {i}")));
        }
        Ok(Self {
            wavelengths_nm,
            values,
        })
    }

    /// Samples `f` at each wavelength.
    pub fn from_fn(wavelengths_nm: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = wavelengths_nm.iter().map(|&w| f(w)).collect();
        Self::new(wavelengths_nm, values)
    }

    pub fn constant(wavelengths_nm: Vec<f64>, value: f64) -> Result<Self> {
        Self::from_fn(wavelengths_nm, |_| value)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_wavelength(&self) -> f64 {
        self.wavelengths_nm[0]
    }

    pub fn max_wavelength(&self) -> f64 {
        self.wavelengths_nm[self.wavelengths_nm.len() - 1]
    }

    /// Pointwise map over the values, keeping the wavelengths.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.wavelengths_nm.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.wavelengths_nm, self.values)
    }
}

pub(crate) fn check_increasing(xs: &[f64]) -> Result<()> {
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite wavelength at index {i}"
        )));
    }
    if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "wavelengths not strictly increasing at index {}: {} then {}",
            i + 1,
            xs[i],
            xs[i + 1]
        )));
    }
    Ok(())
}

/// Piecewise cubic Hermite interpolant with shape-preserving slopes.
///
/// Each interval `[x_i, x_{i+1}]` stores `[c0, c1, c2, c3]` for
/// `p(x) = c0 + c1 t + c2 t^2 + c3 t^3` with `t = x - x_i`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    nodes: SampledSpectrum,
    slopes: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
}

/// Fits a PCHIP interpolant.
///
/// Interior slopes use the weighted harmonic mean of the neighbouring secant
/// slopes and vanish at local extrema. End slopes use the one-sided
/// three-point formula, clamped so the endpoint interval stays monotone.
pub fn pchip_fit(samples: &SampledSpectrum) -> Result<Interpolant> {
    let x = samples.wavelengths();
    let y = samples.values();
    if x.len() < 2 {
        return Err(Error::invalid("PCHIP needs at least 2 nodes"));
    }

    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
    } else {
        for k in 1..n - 1 {
            let (dl, dr) = (delta[k - 1], delta[k]);
            if dl == 0.0 || dr == 0.0 || dl.signum() != dr.signum() {
                d[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / dl + w2 / dr);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }

    let coeffs = (0..n - 1)
        .map(|i| {
            let hi = h[i];
            let c2 = (3.0 * delta[i] - 2.0 * d[i] - d[i + 1]) / hi;
            let c3 = (d[i] + d[i + 1] - 2.0 * delta[i]) / (hi * hi);
            [y[i], d[i], c2, c3]
        })
        .collect();

    Ok(Interpolant {
        nodes: samples.clone(),
        slopes: d,
        coeffs,
    })
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

impl Interpolant {
    pub fn nodes(&self) -> &SampledSpectrum {
        &self.nodes
    }

    /// Hermite slopes at the nodes.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn coefficients(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    /// Index of the interval containing `x`, or an exact node hit.
    fn locate(&self, x: f64) -> Result<Located> {
        let xs = self.nodes.wavelengths();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        if !(lo..=hi).contains(&x) {
            return Err(Error::OutOfRange {
                wavelength_nm: x,
                min_nm: lo,
                max_nm: hi,
            });
        }
        match xs.binary_search_by(|probe| probe.total_cmp(&x)) {
            Ok(i) => Ok(Located::Node(i)),
            Err(i) => Ok(Located::Interval(i - 1)),
        }
    }

    pub fn evaluate(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(match self.locate(wavelength_nm)? {
            Located::Node(i) => self.nodes.values()[i],
            Located::Interval(i) => {
                let t = wavelength_nm - self.nodes.wavelengths()[i];
                let [c0, c1, c2, c3] = self.coeffs[i];
                c0 + t * (c1 + t * (c2 + t * c3))
            }
        })
    }

    /// First derivative; at a node this is the fitted Hermite slope.
    pub fn derivative(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(match self.locate(wavelength_nm)? {
            Located::Node(i) => self.slopes[i],
            Located::Interval(i) => {
                let t = wavelength_nm - self.nodes.wavelengths()[i];
                let [_, c1, c2, c3] = self.coeffs[i];
                c1 + t * (2.0 * c2 + 3.0 * t * c3)
            }
        })
    }

    /// Evaluates at every wavelength, failing on the first out-of-range one.
    pub fn evaluate_many(&self, wavelengths_nm: &[f64]) -> Result<Vec<f64>> {
        wavelengths_nm.iter().map(|&w| self.evaluate(w)).collect()
    }

    /// Evaluates inside the node range and returns 0 outside it.
    pub fn evaluate_or_zero(&self, wavelength_nm: f64) -> f64 {
        self.evaluate(wavelength_nm).unwrap_or(0.0)
    }
}

enum Located {
    Node(usize),
    Interval(usize),
}

pub fn evaluate(interp: &Interpolant, wavelength_nm: f64) -> Result<f64> {
    interp.evaluate(wavelength_nm)
}

/// Composite trapezoidal rule over the sample points.
pub fn trapz(samples: &SampledSpectrum) -> f64 {
    trapz_xy(samples.wavelengths(), samples.values())
}

/// Composite trapezoidal rule over paired slices of equal length.
pub fn trapz_xy(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (yw[0] + yw[1]) * (xw[1] - xw[0]))
        .sum()
}

/// Per-sample weights `w` such that `trapz_xy(x, y) == sum(w_i * y_i)` up to
/// rounding.
pub fn trapz_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (x[i + 1] - x[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// Linear interpolation of `samples` onto `grid_nm`, clamping grid points
/// outside the sample range to the nearest endpoint value.
pub fn resample_to_grid(samples: &SampledSpectrum, grid_nm: &[f64]) -> Result<SampledSpectrum> {
    if grid_nm.is_empty() {
        return Err(Error::invalid("empty resampling grid"));
    }
    check_increasing(grid_nm)?;
    let plan = LinearResampler::new(samples.wavelengths(), grid_nm)?;
    let values = plan.apply(samples.values());
    // a single-point grid cannot form a SampledSpectrum, so build it directly
    Ok(SampledSpectrum {
        wavelengths_nm: grid_nm.to_vec(),
        values,
    })
}

/// Precomputed linear resampling from one wavelength list to another.
///
/// Reusing the plan across pixels that share band wavelengths avoids
/// repeating the interval search per pixel.
#[derive(Debug, Clone)]
pub struct LinearResampler {
    source_len: usize,
    // (left source index, weight of the right neighbour)
    taps: Vec<(usize, f64)>,
}

impl LinearResampler {
    pub fn new(source_nm: &[f64], grid_nm: &[f64]) -> Result<Self> {
        if source_nm.is_empty() {
            return Err(Error::invalid("empty source wavelengths"));
        }
        check_increasing(source_nm)?;
        let n = source_nm.len();
        let taps = grid_nm
            .iter()
            .map(|&g| {
                if g <= source_nm[0] {
                    (0, 0.0)
                } else if g >= source_nm[n - 1] {
                    (n - 1, 0.0)
                } else {
                    match source_nm.binary_search_by(|p| p.total_cmp(&g)) {
                        Ok(i) => (i, 0.0),
                        Err(i) => {
                            let (x0, x1) = (source_nm[i - 1], source_nm[i]);
                            (i - 1, (g - x0) / (x1 - x0))
                        }
                    }
                }
            })
            .collect();
        Ok(Self {
            source_len: n,
            taps,
        })
    }

    pub fn output_len(&self) -> usize {
        self.taps.len()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.taps.len()];
        self.apply_into(values, &mut out);
        out
    }

    pub fn apply_into(&self, values: &[f64], out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.source_len);
        for (o, &(i, t)) in out.iter_mut().zip(&self.taps) {
            *o = if t == 0.0 {
                values[i]
            } else {
                (1.0 - t) * values[i] + t * values[i + 1]
            };
        }
    }
}
