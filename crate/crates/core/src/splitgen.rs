//! Train/test split generation in which every class present in the dataset
//! reaches the training set.
//!
//! Phase 1 walks the registry in order. For each class one 64-bit value is
//! drawn from the generator, whether or not it is used. If the class occurs in
//! no image it is unrepresentable. If one of its images is already tagged
//! train the class is satisfied. Otherwise the drawn value picks one of its
//! images uniformly (Lemire multiply-shift) and tags it train.
//!
//! Phase 2 visits the remaining images in manifest order, draws
//! `u = (next >> 11) * 2^-53` and tags the image test when `u < p`, train
//! otherwise.
//!
//! The generator is SplitMix64, so a seed gives the same split on any
//! platform and in any implementation of the same procedure.

use std::collections::BTreeSet;
use std::fmt;

use crate::dataio::{ClassId, ClassRegistry, DatasetManifest, SplitTag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub seed: u64,
    pub test_probability: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            test_probability: 0.5,
        }
    }
}

impl SplitConfig {
    pub fn new(seed: u64, test_probability: f64) -> Result<Self> {
        let cfg = Self {
            seed,
            test_probability,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_probability > 0.0 && self.test_probability < 1.0) {
            return Err(Error::invalid(format!(
                "test probability must lie in (0, 1), got {}",
                self.test_probability
            )));
        }
        Ok(())
    }
}

/// SplitMix64 (Steele, Lea and Flood).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Maps a uniform `u64` onto `0..n`.
fn pick_index(r: u64, n: usize) -> usize {
    ((r as u128 * n as u128) >> 64) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub manifest: DatasetManifest,
    /// Registry classes that occur in no image.
    pub unrepresentable: Vec<ClassId>,
    pub warnings: Vec<String>,
}

/// Tags every image of `manifest` train or test. Existing tags are discarded.
pub fn generate_split(
    manifest: &DatasetManifest,
    registry: &ClassRegistry,
    cfg: &SplitConfig,
) -> Result<SplitOutcome> {
    cfg.validate()?;
    if manifest.is_empty() {
        return Err(Error::invalid("cannot split an empty manifest"));
    }
    let mut out = manifest.clone();
    for img in &mut out.images {
        img.split = SplitTag::None;
    }
    let classes: Vec<BTreeSet<ClassId>> = out.images.iter().map(|i| i.classes()).collect();
    let mut rng = SplitMix64::new(cfg.seed);
    let mut unrepresentable = Vec::new();
    let mut warnings = Vec::new();

    for class in registry.ids() {
        let r = rng.next_u64();
        let holders: Vec<usize> = (0..classes.len())
            .filter(|&i| classes[i].contains(&class))
            .collect();
        if holders.is_empty() {
            unrepresentable.push(class);
            continue;
        }
        if holders
            .iter()
            .any(|&i| out.images[i].split == SplitTag::Train)
        {
            continue;
        }
        let chosen = holders[pick_index(r, holders.len())];
        out.images[chosen].split = SplitTag::Train;
    }

    for img in &mut out.images {
        if img.split == SplitTag::None {
            img.split = if rng.next_f64() < cfg.test_probability {
                SplitTag::Test
            } else {
                SplitTag::Train
            };
        }
    }

    if !unrepresentable.is_empty() {
        let names: Vec<&str> = unrepresentable
            .iter()
            .map(|&c| registry.name(c).unwrap_or("?"))
            .collect();
        let msg = format!(
            "{} classes occur in no image and cannot be represented: {}",
            names.len(),
            names.join(", ")
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if out.with_split(SplitTag::Test).next().is_none() {
        let msg = "test set is empty".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(SplitOutcome {
        manifest: out,
        unrepresentable,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    /// Classes that occur in the dataset but in no train image.
    pub violations: Vec<ClassId>,
    pub unrepresentable: Vec<ClassId>,
    /// Classes that occur in the dataset but in no test image.
    pub absent_from_test: Vec<ClassId>,
    pub train_images: usize,
    pub test_images: usize,
    pub untagged_images: usize,
    class_names: Vec<(ClassId, String)>,
}

impl SplitReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Fraction of tagged images that are test.
    pub fn test_fraction(&self) -> f64 {
        let tagged = self.train_images + self.test_images;
        if tagged == 0 {
            0.0
        } else {
            self.test_images as f64 / tagged as f64
        }
    }

    fn names(&self, ids: &[ClassId]) -> String {
        if ids.is_empty() {
            return "none".into();
        }
        ids.iter()
            .map(|id| {
                self.class_names
                    .iter()
                    .find(|(c, _)| c == id)
                    .map(|(_, n)| n.as_str())
                    .unwrap_or("?")
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for SplitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "train images: {}", self.train_images)?;
        writeln!(f, "test images: {}", self.test_images)?;
        if self.untagged_images > 0 {
            writeln!(f, "untagged images: {}", self.untagged_images)?;
        }
        writeln!(f, "realized test fraction: {:.4}", self.test_fraction())?;
        writeln!(
            f,
            "violations ({}): {}",
            self.violations.len(),
            self.names(&self.violations)
        )?;
        writeln!(
            f,
            "unrepresentable ({}): {}",
            self.unrepresentable.len(),
            self.names(&self.unrepresentable)
        )?;
        writeln!(
            f,
            "absent from test ({}): {}",
            self.absent_from_test.len(),
            self.names(&self.absent_from_test)
        )
    }
}

pub fn validate_split(manifest: &DatasetManifest, registry: &ClassRegistry) -> SplitReport {
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    let mut any = BTreeSet::new();
    let (mut n_train, mut n_test, mut n_none) = (0, 0, 0);
    for img in &manifest.images {
        let cls = img.classes();
        any.extend(cls.iter().copied());
        match img.split {
            SplitTag::Train => {
                n_train += 1;
                train.extend(cls);
            }
            SplitTag::Test => {
                n_test += 1;
                test.extend(cls);
            }
            SplitTag::None => n_none += 1,
        }
    }
    let mut report = SplitReport {
        violations: Vec::new(),
        unrepresentable: Vec::new(),
        absent_from_test: Vec::new(),
        train_images: n_train,
        test_images: n_test,
        untagged_images: n_none,
        class_names: registry
            .entries()
            .iter()
            .map(|e| (e.id, e.name.clone()))
            .collect(),
    };
    for id in registry.ids() {
        if !any.contains(&id) {
            report.unrepresentable.push(id);
            continue;
        }
        if !train.contains(&id) {
            report.violations.push(id);
        }
        if !test.contains(&id) {
            report.absent_from_test.push(id);
        }
    }
    report
}
