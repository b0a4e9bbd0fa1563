//! Image manifests, seeded splits and batched feature streaming.
//!
//! A manifest is a JSON-lines file: one header object (`format`, `classes`,
//! `count`, `checksum`) followed by one `{"path", "label", "source"}` object
//! per image. The checksum is the SHA-256 of the entry lines as written.
//!
//! Cached features live in a flat directory of `<sha256>.amra` files (f32),
//! keyed by image path, spec string, ingest size and perturbation seed.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread::JoinHandle;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::io::{tensor_read, tensor_write, Dtype, Tensor};
use crate::perturb::{derive_seed, perturb_pipeline, resize_bilinear, Perturbation};
use crate::spec::TransformSpec;
use crate::tensor::ImageTensor;

const MANIFEST_FORMAT: &str = "amra-manifest/1";
const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: usize,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    classes: Vec<String>,
    count: usize,
    checksum: String,
}

impl Manifest {
    /// Validates labels and path uniqueness.
    pub fn new(classes: Vec<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.label >= classes.len() {
                return Err(Error::Argument(format!(
                    "{}: label {} but only {} classes",
                    e.path,
                    e.label,
                    classes.len()
                )));
            }
            if !seen.insert(e.path.as_str()) {
                return Err(Error::Argument(format!("duplicate manifest path {}", e.path)));
            }
        }
        Ok(Manifest { classes, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn entry_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes"))
            .collect()
    }

    /// SHA-256 (hex) of the entry lines.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for line in self.entry_lines() {
            h.update(line.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let header = Header {
            format: MANIFEST_FORMAT.into(),
            classes: self.classes.clone(),
            count: self.len(),
            checksum: self.checksum(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for line in self.entry_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let bad = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
        let first = lines
            .next()
            .ok_or_else(|| bad("empty manifest".into()))?
            .map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| bad(format!("header: {e}")))?;
        if header.format != MANIFEST_FORMAT {
            return Err(bad(format!("unknown format {:?}", header.format)));
        }
        let mut entries = Vec::with_capacity(header.count);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", i + 2)))?,
            );
        }
        let m = Manifest::new(header.classes, entries)?;
        if m.len() != header.count || m.checksum() != header.checksum {
            return Err(Error::Corruption(format!(
                "{}: entries do not match the header checksum",
                path.display()
            )));
        }
        Ok(m)
    }
}

/// Outcome of scanning class directories.
#[derive(Debug, Clone)]
pub struct ManifestBuild {
    pub manifest: Manifest,
    /// Files with an image extension that could not be decoded.
    pub skipped: Vec<PathBuf>,
}

/// One class per directory (label = position, class name = directory
/// name). Files are sorted lexicographically per directory.
pub fn build_manifest<P: AsRef<Path>>(dirs: &[P]) -> Result<ManifestBuild> {
    let mut classes = Vec::new();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (label, dir) in dirs.iter().enumerate() {
        let dir = dir.as_ref();
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("class{label}"));
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension().is_some_and(|x| {
                        IMAGE_EXTENSIONS.contains(&x.to_string_lossy().to_lowercase().as_str())
                    })
            })
            .collect();
        files.sort();
        let before = entries.len();
        for f in files {
            if image::image_dimensions(&f).is_err() {
                log::warn!("skipping unreadable image {}", f.display());
                skipped.push(f);
                continue;
            }
            entries.push(ManifestEntry {
                path: f.to_string_lossy().into_owned(),
                label,
                source: name.clone(),
            });
        }
        if entries.len() == before {
            return Err(Error::Argument(format!(
                "class directory {} has no readable images",
                dir.display()
            )));
        }
        classes.push(name);
    }
    Ok(ManifestBuild {
        manifest: Manifest::new(classes, entries)?,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Train, validation and test fractions.
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            fractions: [2.0 / 3.0, 2.0 / 15.0, 1.0 / 5.0],
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.fractions.iter().sum();
        if self.fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "split fractions {:?} must be non-negative and sum to 1",
                self.fractions
            )));
        }
        Ok(())
    }

    /// Split sizes for `n` items: train and val rounded, test the remainder.
    pub fn sizes(&self, n: usize) -> Result<[usize; 3]> {
        self.validate()?;
        let tr = (n as f64 * self.fractions[0]).round() as usize;
        let va = ((n as f64 * self.fractions[1]).round() as usize).min(n - tr.min(n));
        let tr = tr.min(n);
        let sizes = [tr, va, n - tr - va];
        if let Some(i) = (0..3).find(|&i| sizes[i] == 0 && self.fractions[i] > 0.0) {
            return Err(Error::Argument(format!(
                "{n} items leave the {} split empty",
                ["train", "validation", "test"][i]
            )));
        }
        Ok(sizes)
    }
}

/// Seeded shuffle of item indices, cut into train/val/test.
pub fn split_indices(n: usize, cfg: &SplitConfig) -> Result<[Vec<usize>; 3]> {
    let [tr, va, _] = cfg.sizes(n)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let test = idx.split_off(tr + va);
    let val = idx.split_off(tr);
    Ok([idx, val, test])
}

/// Seeded global shuffle, then contiguous slicing (not stratified).
pub fn split(manifest: &Manifest, cfg: &SplitConfig) -> Result<[Manifest; 3]> {
    let parts = split_indices(manifest.len(), cfg)?;
    Ok(parts.map(|idx| Manifest {
        classes: manifest.classes.clone(),
        entries: idx.iter().map(|&i| manifest.entries[i].clone()).collect(),
    }))
}

/// Decodes PNG/JPEG into 1 (gray) or 3 (RGB) channels, optionally resizing
/// to `size × size` (bilinear).
pub fn load_image(path: impl AsRef<Path>, size: Option<usize>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let tensor = if img.color().has_color() {
        let data = img.to_rgb8().into_raw().into_iter().map(f64::from).collect();
        ImageTensor::new(h, w, 3, data)?
    } else {
        let data = img.to_luma8().into_raw().into_iter().map(f64::from).collect();
        ImageTensor::new(h, w, 1, data)?
    };
    Ok(match size {
        Some(s) if (h, w) != (s, s) => resize_bilinear(&tensor, s, s),
        _ => tensor,
    })
}

/// Writes an 8-bit PNG (values rounded and clipped); 1 or 3 channels.
pub fn save_png(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w, c) = img.shape();
    let bytes: Vec<u8> = img.data().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let color = match c {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        _ => return Err(Error::Shape(format!("PNG needs 1 or 3 channels, got {c}"))),
    };
    image::save_buffer_with_format(path, &bytes, w as u32, h as u32, color, image::ImageFormat::Png)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub batch: usize,
    /// Resize images to `size × size` at ingest.
    pub size: Option<usize>,
    /// Apply the perturbation protocol with this global seed.
    pub perturb_seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    /// Worker threads for decode + transform.
    pub jobs: usize,
    /// Batches buffered ahead of the consumer.
    pub queue: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            batch: 128,
            size: None,
            perturb_seed: None,
            cache_dir: None,
            jobs: 1,
            queue: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Features, rounded through f32.
    pub features: Vec<ImageTensor>,
    pub labels: Vec<usize>,
    /// Manifest positions of the samples.
    pub indices: Vec<usize>,
    pub perturbations: Vec<Perturbation>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Iterator over batches, fed by a producer thread through a bounded queue.
pub struct BatchStream {
    rx: Option<Receiver<Result<Batch>>>,
    worker: Option<JoinHandle<()>>,
    skipped: Arc<AtomicUsize>,
}

impl BatchStream {
    /// Entries dropped so far because they failed to decode.
    pub fn skipped(&self) -> usize {
        self.skipped.load(Ordering::SeqCst)
    }
}

impl Iterator for BatchStream {
    type Item = Result<Batch>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.rx.as_ref()?.recv().ok();
        if item.is_none() {
            self.rx = None;
            if let Some(w) = self.worker.take() {
                let _ = w.join();
            }
        }
        item
    }
}

impl Drop for BatchStream {
    fn drop(&mut self) {
        // Closing the channel makes the producer's next send fail.
        self.rx = None;
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

/// Cache key for one feature tensor.
pub fn cache_key(path: &str, spec: &TransformSpec, size: Option<usize>, perturb_seed: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(path.as_bytes());
    h.update(b"\0");
    h.update(spec.to_string().as_bytes());
    h.update(b"\0");
    h.update(format!("{size:?}/{perturb_seed:?}").as_bytes());
    hex::encode(h.finalize())
}

fn round_f32(img: ImageTensor) -> Result<ImageTensor> {
    let (h, w, c) = img.shape();
    let data = img.into_data().into_iter().map(|v| v as f32 as f64).collect();
    ImageTensor::new(h, w, c, data)
}

struct Item {
    features: ImageTensor,
    perturbation: Perturbation,
}

fn process(index: usize, entry: &ManifestEntry, spec: &TransformSpec, cfg: &StreamConfig) -> Result<Item> {
    let key = cfg
        .cache_dir
        .as_ref()
        .map(|d| d.join(format!("{}.amra", cache_key(&entry.path, spec, cfg.size, cfg.perturb_seed))));
    let perturbation_of = |img: &ImageTensor| -> Result<(ImageTensor, Perturbation)> {
        match cfg.perturb_seed {
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
                perturb_pipeline(img, &mut rng)
            }
            None => Ok((img.clone(), Perturbation::None)),
        }
    };
    if let Some(path) = &key {
        if path.exists() {
            match tensor_read(path).and_then(|t| {
                let p = t
                    .layout
                    .as_ref()
                    .and_then(|l| l.meta.get("perturbation"))
                    .and_then(|v| serde_json::from_str::<Perturbation>(v).ok())
                    .unwrap_or(Perturbation::None);
                Ok((t.into_image()?, p))
            }) {
                Ok((features, perturbation)) => return Ok(Item { features, perturbation }),
                Err(e) => log::warn!("recomputing corrupt cache entry {}: {e}", path.display()),
            }
        }
    }
    let img = load_image(&entry.path, cfg.size)?;
    let (img, perturbation) = perturbation_of(&img)?;
    let features = round_f32(extract_features(&img, spec)?)?;
    if let Some(path) = &key {
        let mut t = Tensor::from(&features).with_dtype(Dtype::F32);
        let (h, w, _) = features.shape();
        let mut layout = crate::layout::SubbandLayout::single(spec.clone(), "features", h, w);
        layout.meta.insert(
            "perturbation".into(),
            serde_json::to_string(&perturbation).expect("perturbation serializes"),
        );
        t.layout = Some(layout);
        // A failed cache write only costs a recomputation later.
        if let Err(e) = tensor_write(&t, path) {
            log::warn!("cannot write cache entry {}: {e}", path.display());
        }
    }
    Ok(Item { features, perturbation })
}

/// Streams features in manifest order: decode → (perturb) → features,
/// batched to `cfg.batch` (last batch may be short). Entries that fail to
/// decode are skipped and counted; any other error ends the stream.
pub fn stream_batches(manifest: &Manifest, spec: &TransformSpec, cfg: &StreamConfig) -> Result<BatchStream> {
    if cfg.batch == 0 {
        return Err(Error::Argument("batch size must be at least 1".into()));
    }
    spec.validate()?;
    if let Some(dir) = &cfg.cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("worker pool: {e}")))?;
    let (tx, rx) = sync_channel(cfg.queue.max(1));
    let skipped = Arc::new(AtomicUsize::new(0));
    let entries = manifest.entries.clone();
    let (spec, cfg, skip) = (spec.clone(), cfg.clone(), skipped.clone());
    let worker = std::thread::spawn(move || {
        let mut pending = Batch {
            features: Vec::new(),
            labels: Vec::new(),
            indices: Vec::new(),
            perturbations: Vec::new(),
        };
        let chunk = cfg.batch.max(cfg.jobs);
        for (c, group) in entries.chunks(chunk).enumerate() {
            let base = c * chunk;
            let results: Vec<Result<Item>> = pool.install(|| {
                group
                    .par_iter()
                    .enumerate()
                    .map(|(i, e)| process(base + i, e, &spec, &cfg))
                    .collect()
            });
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Ok(item) => {
                        pending.features.push(item.features);
                        pending.labels.push(group[i].label);
                        pending.indices.push(base + i);
                        pending.perturbations.push(item.perturbation);
                    }
                    Err(Error::Decode { path, reason }) => {
                        log::warn!("skipping {}: {reason}", path.display());
                        skip.fetch_add(1, Ordering::SeqCst);
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        return;
                    }
                }
                if pending.len() == cfg.batch {
                    let full = std::mem::replace(
                        &mut pending,
                        Batch {
                            features: Vec::new(),
                            labels: Vec::new(),
                            indices: Vec::new(),
                            perturbations: Vec::new(),
                        },
                    );
                    if tx.send(Ok(full)).is_err() {
                        return;
                    }
                }
            }
        }
        if !pending.is_empty() {
            let _ = tx.send(Ok(pending));
        }
    });
    Ok(BatchStream {
        rx: Some(rx),
        worker: Some(worker),
        skipped,
    })
}

/// Writes `path,label,kind,parameter` rows for streamed samples.
pub fn write_perturbation_csv(
    rows: &[(String, usize, Perturbation)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("path,label,perturbation,parameter\n");
    for (p, label, pert) in rows {
        out.push_str(&format!("{p},{label},{},{}\n", pert.name(), pert.parameter()));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
