//! Class-based (pooled one-vs-rest) and image-based evaluation.
//!
//! Only pixels whose ground truth lies in the reporting set take part in
//! either protocol. A class with an undefined ratio (for example no positive
//! pixels in the pool) gets 0 for that metric and is flagged degenerate;
//! degenerate classes are left out of the class average.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataio::{ClassId, ClassRegistry, LabelMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassConfusion {
    pub class: ClassId,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ClassConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub degenerate: bool,
}

impl ClassMetrics {
    pub fn new(sensitivity: f64, specificity: f64, accuracy: f64) -> Self {
        Self {
            sensitivity,
            specificity,
            accuracy,
            balanced_accuracy: (sensitivity + specificity) / 2.0,
            degenerate: false,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [
            self.sensitivity,
            self.specificity,
            self.accuracy,
            self.balanced_accuracy,
        ]
    }
}

/// Ground truth and prediction for one test image.
#[derive(Debug, Clone, Copy)]
pub struct ImagePrediction<'a> {
    pub image_id: &'a str,
    pub truth: &'a LabelMap,
    pub predicted: &'a LabelMap,
}

fn checked_pairs<'a>(
    img: &ImagePrediction<'a>,
    reporting: &'a [ClassId],
) -> impl Iterator<Item = Result<(ClassId, ClassId)>> + 'a {
    let id = img.image_id;
    let predicted = img.predicted;
    let width = img.truth.width();
    img.truth
        .iter()
        .filter(move |(_, c)| reporting.contains(c))
        .map(move |(&p, &t)| match predicted.get(p) {
            Some(pr) => Ok((t, pr)),
            None => Err(Error::Validation(format!(
                "image {id}: no prediction for annotated pixel ({}, {})",
                p / width,
                p % width
            ))),
        })
}

/// One-vs-rest confusion counts per reporting class over all annotated
/// pixels of all images, pooled as one set.
pub fn pool_confusions(
    images: &[ImagePrediction<'_>],
    reporting: &[ClassId],
) -> Result<Vec<ClassConfusion>> {
    // (truth, predicted) pair counts, merged in image order
    let per_image: Vec<Result<BTreeMap<(ClassId, ClassId), u64>>> = images
        .par_iter()
        .map(|img| {
            let mut m = BTreeMap::new();
            for pair in checked_pairs(img, reporting) {
                *m.entry(pair?).or_default() += 1;
            }
            Ok(m)
        })
        .collect();
    let mut pairs: BTreeMap<(ClassId, ClassId), u64> = BTreeMap::new();
    for m in per_image {
        for (k, v) in m? {
            *pairs.entry(k).or_default() += v;
        }
    }
    Ok(reporting
        .iter()
        .map(|&class| {
            let mut c = ClassConfusion {
                class,
                ..Default::default()
            };
            for (&(t, p), &n) in &pairs {
                match (t == class, p == class) {
                    (true, true) => c.tp += n,
                    (true, false) => c.fn_ += n,
                    (false, true) => c.fp += n,
                    (false, false) => c.tn += n,
                }
            }
            c
        })
        .collect())
}

pub fn class_metrics(conf: &ClassConfusion) -> Result<ClassMetrics> {
    let total = conf.total();
    if total == 0 {
        return Err(Error::invalid(format!(
            "class {}: confusion counts are all zero",
            conf.class
        )));
    }
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let sens = ratio(conf.tp, conf.tp + conf.fn_);
    let spec = ratio(conf.tn, conf.tn + conf.fp);
    let acc = (conf.tp + conf.tn) as f64 / total as f64;
    let mut m = ClassMetrics::new(sens, spec, acc);
    m.degenerate = degenerate;
    Ok(m)
}

/// Unweighted mean per metric over the non-degenerate entries.
pub fn average_class_metrics(metrics: &[ClassMetrics]) -> Result<ClassMetrics> {
    let used: Vec<&ClassMetrics> = metrics.iter().filter(|m| !m.degenerate).collect();
    if used.is_empty() {
        return Err(Error::invalid("no non-degenerate class metrics to average"));
    }
    let n = used.len() as f64;
    let mut sums = [0.0; 4];
    for m in &used {
        for (s, v) in sums.iter_mut().zip(m.to_array()) {
            *s += v;
        }
    }
    Ok(ClassMetrics {
        sensitivity: sums[0] / n,
        specificity: sums[1] / n,
        accuracy: sums[2] / n,
        balanced_accuracy: sums[3] / n,
        degenerate: false,
    })
}

/// Mean over images of the per-image fraction of correctly predicted
/// reporting-class pixels. Images without such pixels are skipped.
pub fn image_based_accuracy(images: &[ImagePrediction<'_>], reporting: &[ClassId]) -> Result<f64> {
    let mut sum = 0.0;
    let mut eligible = 0usize;
    for img in images {
        let (mut hit, mut n) = (0u64, 0u64);
        for pair in checked_pairs(img, reporting) {
            let (t, p) = pair?;
            n += 1;
            hit += u64::from(t == p);
        }
        if n > 0 {
            sum += hit as f64 / n as f64;
            eligible += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::invalid(
            "no test image has an annotated reporting-class pixel",
        ));
    }
    Ok(sum / eligible as f64)
}

/// `fraction * 100` rounded half up to 2 decimals.
///
/// Before rounding, the scaled value is snapped to a 1e-6 grid (in units of
/// 0.01 percentage points) so that binary noise around a decimal tie such as
/// `0.33685` rounds as written.
pub fn percent_2dp(fraction: f64) -> f64 {
    let scaled = fraction.abs() * 10_000.0;
    let snapped = (scaled * 1e6).round() / 1e6;
    ((snapped + 0.5).floor() / 100.0).copysign(fraction)
}

pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}", percent_2dp(fraction))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub rows: Vec<(ClassId, String, ClassConfusion, ClassMetrics)>,
    pub average: ClassMetrics,
}

impl ClassReport {
    pub fn from_confusions(
        confusions: &[ClassConfusion],
        registry: &ClassRegistry,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(confusions.len());
        for c in confusions {
            let name = registry
                .name(c.class)
                .map(str::to_string)
                .unwrap_or_else(|| c.class.to_string());
            rows.push((c.class, name, *c, class_metrics(c)?));
        }
        let metrics: Vec<ClassMetrics> = rows.iter().map(|r| r.3).collect();
        let average = average_class_metrics(&metrics)?;
        Ok(Self { rows, average })
    }

    pub fn degenerate_classes(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.3.degenerate)
            .map(|r| r.1.as_str())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.1.len())
            .max()
            .unwrap_or(0)
            .max("Average".len());
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>11}  {:>11}  {:>8}  {:>17}",
            "Class", "Sensitivity", "Specificity", "Accuracy", "Balanced accuracy"
        );
        let line = |s: &mut String, name: &str, m: &ClassMetrics, mark: &str| {
            let [a, b, c, d] = m.to_array().map(format_percent);
            let _ = writeln!(s, "{name:<width$}  {a:>11}  {b:>11}  {c:>8}  {d:>17}{mark}");
        };
        for (_, name, _, m) in &self.rows {
            line(&mut s, name, m, if m.degenerate { "  *" } else { "" });
        }
        line(&mut s, "Average", &self.average, "");
        if self.rows.iter().any(|r| r.3.degenerate) {
            s.push_str("* degenerate (class absent from the pool), excluded from the average\n");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,sensitivity,specificity,accuracy,balanced_accuracy\n");
        let mut line = |name: &str, m: &ClassMetrics| {
            let [a, b, c, d] = m.to_array().map(format_percent);
            let _ = writeln!(s, "{},{a},{b},{c},{d}", csv_field(name));
        };
        for (_, name, _, m) in &self.rows {
            line(name, m);
        }
        line("Average", &self.average);
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
