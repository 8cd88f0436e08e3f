//! File formats and dataset bookkeeping.
//!
//! # `HSCB` cube container
//!
//! All integers and floats little-endian:
//!
//! | field        | type                                  |
//! |--------------|---------------------------------------|
//! | magic        | `b"HSCB"`                             |
//! | version      | `u16` (currently 1)                   |
//! | camera name  | `u16` byte length, then UTF-8 bytes   |
//! | height       | `u32`                                 |
//! | width        | `u32`                                 |
//! | bands        | `u32`                                 |
//! | wavelengths  | `bands` x `f64`, nm                   |
//! | reflectance  | `height*width*bands` x `f32`, band-interleaved by pixel |
//!
//! Reflectance is held as `f64` in memory and narrowed to `f32` on write, so
//! a round trip is bit-exact for values that are representable in `f32`.
//!
//! # Annotations
//!
//! Text, one `row,col,class_id` record per line. Blank lines and lines
//! starting with `#` are ignored. Prediction files use the same format.
//!
//! # Manifests
//!
//! Text, one image per line:
//! `image_id<TAB>cube_path<TAB>annotation_path<TAB>camera[<TAB>split]`,
//! where `split` is `train`, `test` or `none` (the default). Relative paths
//! resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cube::{CameraModel, RgbImage, SpectralCube};
use crate::error::{Error, Result};

pub const CUBE_MAGIC: &[u8; 4] = b"HSCB";
pub const CUBE_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub u16);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Classes in descending order of annotated pixel count, with the full
/// dataset's pixel and image counts.
const ODSI_CLASSES: [(&str, u64, u32); 35] = [
    ("Skin", 18993686, 137),
    ("Out of focus area", 8454491, 116),
    ("Oral mucosa", 7917543, 117),
    ("Enamel", 4913805, 158),
    ("Tongue", 4081689, 53),
    ("Lip", 3920600, 134),
    ("Hard palate", 2375998, 54),
    ("Specular reflection", 1931845, 179),
    ("Attached gingiva", 1922545, 89),
    ("Soft palate", 1398594, 43),
    ("Hair", 1383970, 40),
    ("Marginal gingiva", 804393, 97),
    ("Prosthetics", 755554, 24),
    ("Shadow/Noise", 732209, 61),
    ("Plastic", 255017, 68),
    ("Metal", 196682, 52),
    ("Gingivitis", 161874, 39),
    ("Attrition/Erosion", 100919, 36),
    ("Inflammation", 81098, 10),
    ("Pigmentation", 43144, 2),
    ("Calculus", 28615, 27),
    ("Initial caries", 22008, 30),
    ("Stain", 19428, 46),
    ("Fluorosis", 17872, 2),
    ("Microfracture", 14759, 17),
    ("Root", 13962, 17),
    ("Plaque", 10024, 8),
    ("Dentine caries", 6616, 16),
    ("Ulcer", 5552, 11),
    ("Leukoplakia", 4623, 7),
    ("Blood vessel", 3667, 8),
    ("Mole", 2791, 10),
    ("Malignant lesion", 1304, 1),
    ("Fibroma", 593, 1),
    ("Makeup", 406, 2),
];

/// Tissue classes with at least one million annotated pixels, in report order.
const REPORTING_CLASSES: [&str; 9] = [
    "Attached gingiva",
    "Enamel",
    "Hair",
    "Hard palate",
    "Lip",
    "Oral mucosa",
    "Skin",
    "Soft palate",
    "Tongue",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEntry {
    pub id: ClassId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRegistry {
    entries: Vec<ClassEntry>,
    reporting: Vec<ClassId>,
}

impl ClassRegistry {
    /// The 35 dental classes, ids `0..35` in descending pixel-count order.
    pub fn odsi() -> Self {
        let entries: Vec<ClassEntry> = ODSI_CLASSES
            .iter()
            .enumerate()
            .map(|(i, (name, _, _))| ClassEntry {
                id: ClassId(i as u16),
                name: (*name).to_string(),
            })
            .collect();
        let reporting = REPORTING_CLASSES
            .iter()
            .map(|n| {
                entries
                    .iter()
                    .find(|e| e.name == *n)
                    .map(|e| e.id)
                    .expect("reporting class is registered")
            })
            .collect();
        Self { entries, reporting }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .map(|e| e.name.as_str())
    }

    pub fn by_name(&self, name: &str) -> Option<ClassId> {
        self.entries
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
            .map(|e| e.id)
    }

    /// The classes all reported metrics are restricted to.
    pub fn reporting_set(&self) -> &[ClassId] {
        &self.reporting
    }

    /// Pixel and image counts of the full annotated dataset, in registry
    /// order.
    pub fn reference_census(&self) -> Vec<ClassCount> {
        self.entries
            .iter()
            .zip(ODSI_CLASSES.iter())
            .map(|(e, (_, px, im))| ClassCount {
                class: e.id,
                pixels: *px,
                images: *im,
            })
            .collect()
    }
}

/// Sparse per-pixel class labels of one `height x width` image, keyed by flat
/// pixel index `row * width + col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: BTreeMap<usize, ClassId>,
    duplicates: usize,
}

impl LabelMap {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            labels: BTreeMap::new(),
            duplicates: 0,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of records that overwrote an earlier label for the same pixel.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn get(&self, pixel: usize) -> Option<ClassId> {
        self.labels.get(&pixel).copied()
    }

    /// Inserts a label, last write wins. Returns the previous label.
    pub fn insert(&mut self, pixel: usize, class: ClassId) -> Result<Option<ClassId>> {
        if pixel >= self.height * self.width {
            return Err(Error::Validation(format!(
                "pixel index {pixel} outside {}x{} image",
                self.height, self.width
            )));
        }
        let prev = self.labels.insert(pixel, class);
        if prev.is_some() {
            self.duplicates += 1;
        }
        Ok(prev)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &ClassId)> {
        self.labels.iter()
    }

    pub fn classes(&self) -> BTreeSet<ClassId> {
        self.labels.values().copied().collect()
    }

    pub fn count_of(&self, class: ClassId) -> usize {
        self.labels.values().filter(|&&c| c == class).count()
    }

    /// Renders the `row,col,class_id` text form, in pixel order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (&p, c) in &self.labels {
            s.push_str(&format!("{},{},{}\n", p / self.width, p % self.width, c));
        }
        s
    }
}

pub fn parse_annotation(
    text: &str,
    height: usize,
    width: usize,
    registry: &ClassRegistry,
    source: &Path,
) -> Result<LabelMap> {
    let mut map = LabelMap::new(height, width);
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(format!(
                "expected row,col,class_id but found {} fields",
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| parse_err(format!("{what} {s:?} is not a non-negative integer")))
        };
        let row = num(fields[0], "row")? as usize;
        let col = num(fields[1], "col")? as usize;
        let class = num(fields[2], "class_id")?;
        let class = u16::try_from(class)
            .ok()
            .map(ClassId)
            .filter(|c| registry.contains(*c))
            .ok_or_else(|| {
                Error::Validation(format!(
                    "{}:{line_no}: class {class} is not in the registry",
                    source.display()
                ))
            })?;
        if row >= height || col >= width {
            return Err(Error::Validation(format!(
                "{}:{line_no}: pixel ({row}, {col}) outside {height}x{width} image",
                source.display()
            )));
        }
        map.insert(row * width + col, class)?;
    }
    if map.duplicates > 0 {
        log::warn!(
            "{}: {} duplicate pixel labels, last one kept",
            source.display(),
            map.duplicates
        );
    }
    Ok(map)
}

pub fn read_annotation(
    path: &Path,
    height: usize,
    width: usize,
    registry: &ClassRegistry,
) -> Result<LabelMap> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading annotation {}", path.display()), e))?;
    parse_annotation(&text, height, width, registry, path)
}

pub fn write_annotation(path: &Path, labels: &LabelMap) -> Result<()> {
    fs::write(path, labels.to_text())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeHeader {
    pub camera: CameraModel,
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    /// Byte offset of the wavelength table.
    pub payload_offset: usize,
}

impl CubeHeader {
    pub fn expected_len(&self) -> u64 {
        self.payload_offset as u64
            + 8 * self.bands as u64
            + 4 * (self.height as u64 * self.width as u64 * self.bands as u64)
    }
}

pub fn encode_cube(cube: &SpectralCube) -> Result<Vec<u8>> {
    let name = cube.camera().name().as_bytes();
    let dim = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} exceeds u32")))
    };
    let (h, w, c) = (
        dim(cube.height(), "height")?,
        dim(cube.width(), "width")?,
        dim(cube.bands(), "band count")?,
    );
    let mut out =
        Vec::with_capacity(4 + 2 + 2 + name.len() + 12 + 8 * c as usize + 4 * cube.data().len());
    out.extend_from_slice(CUBE_MAGIC);
    out.extend_from_slice(&CUBE_VERSION.to_le_bytes());
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name);
    for v in [h, w, c] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &wl in cube.wavelengths() {
        out.extend_from_slice(&wl.to_le_bytes());
    }
    for &v in cube.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    expected_total: u64,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Corruption {
                offset: self.pos as u64,
                expected: self.expected_total.max((self.pos + n) as u64),
                actual: self.buf.len() as u64,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses the fixed-size header without touching the payload.
pub fn decode_cube_header(buf: &[u8]) -> Result<CubeHeader> {
    let mut r = Reader {
        buf,
        pos: 0,
        expected_total: 0,
    };
    let magic = r.take(4)?;
    if magic != CUBE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"HSCB\"",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u16()?;
    if version != CUBE_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version}, expected {CUBE_VERSION}"
        )));
    }
    let name_len = r.u16()? as usize;
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| Error::Format("camera name is not valid UTF-8".into()))?;
    let camera: CameraModel = name.parse()?;
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let bands = r.u32()? as usize;
    if height == 0 || width == 0 || bands == 0 {
        return Err(Error::Format(format!(
            "degenerate dimensions {height}x{width}x{bands}"
        )));
    }
    Ok(CubeHeader {
        camera,
        height,
        width,
        bands,
        payload_offset: r.pos,
    })
}

pub fn decode_cube(buf: &[u8]) -> Result<SpectralCube> {
    let header = decode_cube_header(buf)?;
    let expected = header.expected_len();
    let mut r = Reader {
        buf,
        pos: header.payload_offset,
        expected_total: expected,
    };
    let wl_bytes = r.take(8 * header.bands)?;
    let wavelengths: Vec<f64> = wl_bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let count = header.height * header.width * header.bands;
    let data_bytes = r.take(4 * count)?;
    if r.pos != buf.len() {
        return Err(Error::Corruption {
            offset: r.pos as u64,
            expected,
            actual: buf.len() as u64,
        });
    }
    let data: Vec<f64> = data_bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    SpectralCube::new(
        header.camera,
        header.height,
        header.width,
        wavelengths,
        data,
    )
    .map_err(|e| Error::Format(format!("invalid cube payload: {e}")))
}

pub fn write_cube(path: &Path, cube: &SpectralCube) -> Result<()> {
    let bytes = encode_cube(cube)?;
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_cube(path: &Path) -> Result<SpectralCube> {
    let bytes =
        fs::read(path).map_err(|e| Error::io(format!("reading cube {}", path.display()), e))?;
    decode_cube(&bytes)
}

pub fn read_cube_header(path: &Path) -> Result<CubeHeader> {
    use std::io::Read;
    let mut f = fs::File::open(path)
        .map_err(|e| Error::io(format!("opening cube {}", path.display()), e))?;
    // magic + version + name length + at most 64 KiB of name + 3 dims
    let mut buf = Vec::new();
    std::io::Read::by_ref(&mut f)
        .take(4 + 2 + 2 + u16::MAX as u64 + 12)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(format!("reading cube {}", path.display()), e))?;
    decode_cube_header(&buf)
}

/// Binary PPM (`P6`, maxval 255).
pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.to_u8());
    out
}

pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<()> {
    fs::write(path, encode_ppm(image))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Test,
    #[default]
    None,
}

impl SplitTag {
    pub fn name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
            SplitTag::None => "none",
        }
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitTag::Train),
            "test" => Ok(SplitTag::Test),
            "none" | "" => Ok(SplitTag::None),
            other => Err(Error::invalid(format!("unknown split tag {other:?}"))),
        }
    }
}

/// One manifest row with its loaded labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub cube_path: PathBuf,
    pub annotation_path: PathBuf,
    pub camera: CameraModel,
    pub labels: LabelMap,
    pub split: SplitTag,
}

impl AnnotatedImage {
    pub fn classes(&self) -> BTreeSet<ClassId> {
        self.labels.classes()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub images: Vec<AnnotatedImage>,
}

impl DatasetManifest {
    pub fn new(images: Vec<AnnotatedImage>) -> Self {
        Self { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn with_split(&self, split: SplitTag) -> impl Iterator<Item = &AnnotatedImage> {
        self.images.iter().filter(move |i| i.split == split)
    }

    /// Reads a manifest and every annotation it references. Image
    /// dimensions come from each cube's header.
    pub fn read(path: &Path, registry: &ClassRegistry) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let mut images = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(parse_err(format!(
                    "expected 4 or 5 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let image_id = fields[0].to_string();
            if !seen.insert(image_id.clone()) {
                return Err(parse_err(format!("duplicate image id {image_id:?}")));
            }
            let camera: CameraModel = fields[3]
                .parse()
                .map_err(|e: Error| parse_err(e.to_string()))?;
            let split = match fields.get(4) {
                Some(s) => s.parse().map_err(|e: Error| parse_err(e.to_string()))?,
                None => SplitTag::None,
            };
            let cube_path = base.join(fields[1]);
            let annotation_path = base.join(fields[2]);
            let with_id = |e: Error| Error::Validation(format!("image {image_id}: {e}"));
            let header = read_cube_header(&cube_path).map_err(with_id)?;
            if header.camera != camera {
                return Err(Error::Validation(format!(
                    "image {image_id}: manifest says {camera} but cube says {}",
                    header.camera
                )));
            }
            let labels = read_annotation(&annotation_path, header.height, header.width, registry)
                .map_err(with_id)?;
            images.push(AnnotatedImage {
                image_id,
                cube_path,
                annotation_path,
                camera,
                labels,
                split,
            });
        }
        Ok(Self { images })
    }

    /// Manifest text with paths relative to `base` where possible.
    pub fn to_text(&self, base: &Path) -> String {
        let rel = |p: &Path| -> String {
            p.strip_prefix(base)
                .unwrap_or(p)
                .to_string_lossy()
                .into_owned()
        };
        let mut s = String::new();
        for img in &self.images {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                img.image_id,
                rel(&img.cube_path),
                rel(&img.annotation_path),
                img.camera,
                img.split.name()
            ));
        }
        s
    }

    /// Writes the manifest. Paths are written relative to the output's
    /// directory when they live under it, absolute otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let abs_base = std::path::absolute(base).unwrap_or_else(|_| base.to_path_buf());
        let mut images = self.images.clone();
        for img in &mut images {
            for p in [&mut img.cube_path, &mut img.annotation_path] {
                if let Ok(a) = std::path::absolute(&*p) {
                    *p = a;
                }
            }
        }
        let text = DatasetManifest { images }.to_text(&abs_base);
        fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCount {
    pub class: ClassId,
    pub pixels: u64,
    pub images: u32,
}

/// Annotated pixel and image counts per registry class, in registry order.
pub fn class_pixel_census(manifest: &DatasetManifest, registry: &ClassRegistry) -> Vec<ClassCount> {
    let mut counts: BTreeMap<ClassId, (u64, u32)> = registry.ids().map(|id| (id, (0, 0))).collect();
    for img in &manifest.images {
        let mut per_image: BTreeMap<ClassId, u64> = BTreeMap::new();
        for (_, &c) in img.labels.iter() {
            *per_image.entry(c).or_default() += 1;
        }
        for (c, n) in per_image {
            let e = counts.entry(c).or_default();
            e.0 += n;
            e.1 += 1;
        }
    }
    registry
        .ids()
        .map(|id| {
            let (pixels, images) = counts[&id];
            ClassCount {
                class: id,
                pixels,
                images,
            }
        })
        .collect()
}

/// Classes whose census pixel count reaches `min_pixels`.
pub fn classes_with_at_least(census: &[ClassCount], min_pixels: u64) -> Vec<ClassId> {
    census
        .iter()
        .filter(|c| c.pixels >= min_pixels)
        .map(|c| c.class)
        .collect()
}

/// Rows where `census` differs from the registry's reference counts.
pub fn census_mismatches(
    census: &[ClassCount],
    registry: &ClassRegistry,
) -> Vec<(ClassCount, ClassCount)> {
    registry
        .reference_census()
        .into_iter()
        .filter_map(|want| {
            let got = census
                .iter()
                .find(|c| c.class == want.class)
                .copied()
                .unwrap_or(ClassCount {
                    class: want.class,
                    pixels: 0,
                    images: 0,
                });
            (got != want).then_some((got, want))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reg() -> ClassRegistry {
        ClassRegistry::odsi()
    }

    #[test]
    fn registry_shape() {
        let r = reg();
        assert_eq!(r.len(), 35);
        assert_eq!(r.reporting_set().len(), 9);
        let names: BTreeSet<&str> = r
            .reporting_set()
            .iter()
            .map(|&c| r.name(c).unwrap())
            .collect();
        for n in [
            "Skin",
            "Oral mucosa",
            "Enamel",
            "Tongue",
            "Lip",
            "Hard palate",
            "Attached gingiva",
            "Soft palate",
            "Hair",
        ] {
            assert!(names.contains(n), "{n}");
        }
        let hair = r.by_name("hair").unwrap();
        let row = r.reference_census()[hair.0 as usize];
        assert_eq!((row.pixels, row.images), (1_383_970, 40));
        let fibroma = r.by_name("Fibroma").unwrap();
        assert_eq!(r.reference_census()[fibroma.0 as usize].images, 1);
    }

    #[test]
    fn reporting_set_is_the_million_pixel_tissues() {
        let r = reg();
        let big = classes_with_at_least(&r.reference_census(), 1_000_000);
        assert_eq!(big.len(), 11);
        for c in r.reporting_set() {
            assert!(big.contains(c));
        }
        let non_tissue: Vec<&str> = big
            .iter()
            .filter(|c| !r.reporting_set().contains(c))
            .map(|&c| r.name(c).unwrap())
            .collect();
        assert_eq!(non_tissue, vec!["Out of focus area", "Specular reflection"]);
    }

    #[test]
    fn annotation_examples() {
        let p = Path::new("a.csv");
        let m = parse_annotation("0,0,3\n1,2,7", 2, 3, &reg(), p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.get(5), Some(ClassId(7)));

        assert!(matches!(
            parse_annotation("0,0,99", 2, 3, &reg(), p),
            Err(Error::Validation(_))
        ));
        assert!(parse_annotation("", 2, 3, &reg(), p).unwrap().is_empty());

        match parse_annotation("0,0,3\n\n1,x,2", 2, 3, &reg(), p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_annotation("0,0", 2, 3, &reg(), p),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_annotation("2,0,1", 2, 3, &reg(), p),
            Err(Error::Validation(_))
        ));

        let m = parse_annotation("0,0,3\n0,0,4\n", 2, 3, &reg(), p).unwrap();
        assert_eq!(m.duplicates(), 1);
        assert_eq!(m.get(0), Some(ClassId(4)));
    }

    #[test]
    fn annotation_text_round_trip() {
        let m = parse_annotation("1,2,7\n0,0,3\n", 2, 3, &reg(), Path::new("x")).unwrap();
        let again = parse_annotation(&m.to_text(), 2, 3, &reg(), Path::new("x")).unwrap();
        assert_eq!(m, again);
    }

    fn random_cube(camera: CameraModel, h: usize, w: usize, seed: u64) -> SpectralCube {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bands = camera.profile().band_wavelengths_nm;
        let data = (0..h * w * bands.len())
            .map(|_| rng.random::<f32>() as f64)
            .collect();
        SpectralCube::new(camera, h, w, bands, data).unwrap()
    }

    #[test]
    fn cube_round_trip_4x5x51() {
        let c = random_cube(CameraModel::NuanceEx, 4, 5, 7);
        let back = decode_cube(&encode_cube(&c).unwrap()).unwrap();
        assert_eq!(back.height(), 4);
        assert_eq!(back.width(), 5);
        assert_eq!(back.bands(), 51);
        assert_eq!(back, c);
    }

    #[test]
    fn cube_errors() {
        let c = random_cube(CameraModel::SpecimIq, 2, 2, 1);
        let mut bytes = encode_cube(&c).unwrap();

        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_cube(&bad), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_cube(&bad), Err(Error::Format(_))));

        let full = bytes.len() as u64;
        bytes.truncate(bytes.len() - 10);
        match decode_cube(&bytes) {
            Err(Error::Corruption {
                expected, actual, ..
            }) => {
                assert_eq!(expected, full);
                assert_eq!(actual, full - 10);
            }
            other => panic!("{other:?}"),
        }

        // truncated inside the wavelength table
        let short = &encode_cube(&c).unwrap()[..40];
        match decode_cube(short) {
            Err(Error::Corruption { offset, actual, .. }) => {
                assert!(offset < 40);
                assert_eq!(actual, 40);
            }
            other => panic!("{other:?}"),
        }

        let mut long = encode_cube(&c).unwrap();
        long.push(0);
        assert!(matches!(decode_cube(&long), Err(Error::Corruption { .. })));
    }

    #[test]
    fn cube_layout_is_little_endian() {
        let c = SpectralCube::new(
            CameraModel::NuanceEx,
            1,
            1,
            vec![450.0, 460.0],
            vec![0.5, 0.25],
        )
        .unwrap();
        let b = encode_cube(&c).unwrap();
        assert_eq!(&b[..4], b"HSCB");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..8], &[8, 0]);
        assert_eq!(&b[8..16], b"NuanceEX");
        assert_eq!(&b[16..20], &1u32.to_le_bytes());
        assert_eq!(&b[24..28], &2u32.to_le_bytes());
        assert_eq!(&b[28..36], &450.0f64.to_le_bytes());
        assert_eq!(&b[44..48], &0.5f32.to_le_bytes());
        assert_eq!(b.len(), 52);
    }

    #[test]
    fn ppm_header_and_rounding() {
        let img = RgbImage {
            height: 1,
            width: 2,
            pixels: vec![[1.0, 0.0, 0.5], [0.25, 0.998, 0.002]],
        };
        let b = encode_ppm(&img);
        assert!(b.starts_with(b"P6\n2 1\n255\n"));
        assert_eq!(&b[11..], &[255, 0, 128, 64, 254, 1]);
    }

    #[test]
    fn census_counts() {
        let r = reg();
        let enamel = r.by_name("Enamel").unwrap();
        let mk = |id: &str| {
            let mut l = LabelMap::new(3, 3);
            for p in 0..5 {
                l.insert(p, enamel).unwrap();
            }
            AnnotatedImage {
                image_id: id.into(),
                cube_path: PathBuf::new(),
                annotation_path: PathBuf::new(),
                camera: CameraModel::NuanceEx,
                labels: l,
                split: SplitTag::None,
            }
        };
        let m = DatasetManifest::new(vec![mk("a"), mk("b")]);
        let census = class_pixel_census(&m, &r);
        assert_eq!(census.len(), 35);
        let row = census[enamel.0 as usize];
        assert_eq!((row.pixels, row.images), (10, 2));
        let hair = r.by_name("Hair").unwrap();
        assert_eq!(census[hair.0 as usize].pixels, 0);
        assert_eq!(census[hair.0 as usize].images, 0);
        assert_eq!(census_mismatches(&census, &r).len(), 35);
        assert!(census_mismatches(&r.reference_census(), &r).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn census_is_order_invariant(order in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
            let r = reg();
            let imgs: Vec<AnnotatedImage> = (0..6u16)
                .map(|k| {
                    let mut l = LabelMap::new(4, 4);
                    for p in 0..(k as usize + 3) {
                        l.insert(p, ClassId((k * 7 + p as u16) % 35)).unwrap();
                    }
                    AnnotatedImage {
                        image_id: format!("i{k}"),
                        cube_path: PathBuf::new(),
                        annotation_path: PathBuf::new(),
                        camera: CameraModel::SpecimIq,
                        labels: l,
                        split: SplitTag::None,
                    }
                })
                .collect();
            let a = class_pixel_census(&DatasetManifest::new(imgs.clone()), &r);
            let shuffled = order.iter().map(|&i| imgs[i].clone()).collect();
            let b = class_pixel_census(&DatasetManifest::new(shuffled), &r);
            prop_assert_eq!(a, b);
        }
    }
}
