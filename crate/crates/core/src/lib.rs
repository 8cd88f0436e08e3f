//! Hyperspectral reflectance processing for tissue segmentation studies.
//!
//! The crate covers the full pixel-level pipeline:
//!
//! * [`spectra`]: sampled spectra, PCHIP interpolation, trapezoidal quadrature
//!   and linear band resampling.
//! * [`colorimetry`]: CIE 1931 observer, D65, the fold correction that
//!   compensates colour matching weight lost to bands a camera never captured,
//!   XYZ integration, sRGB conversion and gamma encoding.
//! * [`cube`]: the reflectance cube model, the two camera profiles, the
//!   170-band common grid and whole-image rendering.
//! * [`dataio`]: the `HSCB` cube container, sparse annotations, the class
//!   registry and dataset manifests.
//! * [`splitgen`]: reproducible train/test split generation that keeps every
//!   class represented in training.
//! * [`metrics`]: pooled class-based confusion metrics and image-based accuracy.
//! * [`pixelnet`]: a small per-pixel classifier trained by mini-batch gradient
//!   descent.

pub mod colorimetry;
pub mod cube;
pub mod dataio;
mod error;
pub mod metrics;
pub mod pixelnet;
pub mod spectra;
pub mod splitgen;

pub use colorimetry::{CameraRangeSpec, CmfLabel, CmfSet, Illuminant, RgbColor, XyzColor};
pub use cube::{
    CameraModel, CameraProfile, CommonGrid, PixelDataset, PixelMode, RgbImage, SpectralCube,
};
pub use dataio::{AnnotatedImage, ClassId, ClassRegistry, DatasetManifest, LabelMap, SplitTag};
pub use error::{Error, Result};
pub use metrics::{ClassConfusion, ClassMetrics};
pub use pixelnet::{PixelClassifierModel, TrainConfig};
pub use spectra::{Interpolant, SampledSpectrum};
pub use splitgen::SplitConfig;
