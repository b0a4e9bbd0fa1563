//! Command-line front end. Exit codes: 0 success, 1 runtime error, 2 usage
//! error (bad flag or spec).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analysis::{self, PatternKind, DEFAULT_TOL};
use crate::classifier::{self, Dataset, TrainConfig};
use crate::dataset::{self, load_image, save_png, Manifest, SplitConfig, StreamConfig};
use crate::error::{Error, Result};
use crate::io::{tensor_read, write_coefficients, write_image, Dtype};
use crate::perturb::{self, Perturbation};
use crate::spec::{TransformSpec, SPEC_HELP};
use crate::synth::{self, SynthConfig};
use crate::tensor::ImageTensor;
use crate::transforms;

pub const CACHE_ENV: &str = "AMRA_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "amra", version, about = "Multiresolution transforms and GAN source identification", after_help = SPEC_HELP)]
pub struct Cli {
    /// Worker threads (1 = deterministic single-threaded baseline).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward (or inverse) transform of one image into an AMRA file.
    #[command(after_help = SPEC_HELP)]
    Transform(TransformArgs),
    /// Count nonzero coefficients per block (CSV).
    #[command(after_help = SPEC_HELP)]
    Sparsity(SparsityArgs),
    /// Average transformed coefficients of an image set.
    #[command(after_help = SPEC_HELP)]
    Fingerprint(FingerprintArgs),
    /// Principal components of per-image features (CSV).
    #[command(after_help = SPEC_HELP)]
    Pca(PcaArgs),
    /// Apply one perturbation, or the random protocol, to an image.
    Perturb(PerturbArgs),
    /// Train the CNN for each seed and report max and mean ± std accuracy.
    #[command(after_help = SPEC_HELP)]
    Train(TrainArgs),
    /// Evaluate a checkpoint on a manifest.
    #[command(after_help = SPEC_HELP)]
    Evaluate(EvaluateArgs),
    /// Generate a piecewise-constant test pattern.
    Pattern(PatternArgs),
    /// Build a manifest from one directory per class, optionally split it.
    Manifest(ManifestArgs),
    /// Write the synthetic two-source image set (real/ and fake/).
    Synth(SynthArgs),
}

fn parse_spec(s: &str) -> std::result::Result<TransformSpec, String> {
    s.parse::<TransformSpec>().map_err(|e| e.to_string())
}

fn parse_perturb(s: &str) -> std::result::Result<u64, String> {
    let v = s.strip_prefix("seed=").unwrap_or(s);
    v.parse::<u64>()
        .map_err(|_| format!("`{s}`: expected seed=<u64>"))
}

fn parse_split(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("`{s}`: expected three comma-separated fractions"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p
            .trim()
            .parse()
            .map_err(|_| format!("`{p}`: not a number"))?;
    }
    let cfg = SplitConfig { fractions: out, seed: 0 };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(out)
}

/// Seed list argument: `0,1,2` or a half-open range `0..5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.parse().map_err(|_| format!("`{a}`: not a seed"))?;
        let b: u64 = b.parse().map_err(|_| format!("`{b}`: not a seed"))?;
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("`{p}`: not a seed")))
        .collect::<std::result::Result<_, _>>()
        .map(SeedList)
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_parser = parse_spec)]
    pub spec: Option<TransformSpec>,
    /// PNG/JPEG/AMRA image, or AMRA coefficients with --inverse.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reconstruct an image from an AMRA coefficient file.
    #[arg(long)]
    pub inverse: bool,
    /// Apply block-wise normalization to the output (as the spec's bn flag).
    #[arg(long)]
    pub normalize: bool,
    /// Store values as f32 instead of f64.
    #[arg(long)]
    pub f32: bool,
    /// Resize the input to size × size first.
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[arg(long, value_parser = parse_spec)]
    pub spec: TransformSpec,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Relative threshold: counts |c| > tol · max|c|.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    #[arg(long, value_parser = parse_spec)]
    pub spec: TransformSpec,
    /// Images or directories of images.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long, value_parser = parse_spec)]
    pub spec: TransformSpec,
    /// Manifest (JSON lines) of the images.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Only use finest-detail blocks (`d1` factors) of the raw transform.
    #[arg(long)]
    pub finest: bool,
    #[arg(long)]
    pub size: Option<usize>,
    /// CSV of per-image coordinates (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PerturbKind {
    Blur,
    Crop,
    Jpeg,
    Noise,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fixed perturbation; without it the random protocol is applied.
    #[arg(long, value_enum)]
    pub kind: Option<PerturbKind>,
    /// Kernel size, crop percent, JPEG quality or noise variance.
    #[arg(long)]
    pub param: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Manifest (JSON lines) of all images.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Ingest size (images are resized to size × size; 0 keeps them).
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Apply the perturbation protocol, e.g. `seed=0`.
    #[arg(long, value_parser = parse_perturb)]
    pub perturb: Option<u64>,
    /// Feature cache directory.
    #[arg(long, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = parse_spec)]
    pub spec: TransformSpec,
    #[command(flatten)]
    pub data: DataArgs,
    /// Train/validation/test fractions.
    #[arg(long, value_parser = parse_split, default_value = "0.6666666666666666,0.13333333333333333,0.2")]
    pub split: [f64; 3],
    /// Seed of the dataset split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training seeds: `0,1,2` or `0..5`.
    #[arg(long, value_parser = parse_seeds, default_value = "0..5")]
    pub seeds: SeedList,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Directory for checkpoints, histories and summary.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_parser = parse_spec)]
    pub spec: TransformSpec,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Write per-image perturbation records (CSV) here.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternName {
    IsoSquares,
    AnisoRects,
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    #[arg(long, value_enum)]
    pub kind: PatternName,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `.png` or `.amra`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// One directory per class; label = position.
    #[arg(long = "class", required = true, num_args = 1..)]
    pub classes: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write `<out>.train/.val/.test` with these fractions.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<[f64; 3]>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` and runs; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Spec { .. } | Error::Argument(_) => 2,
                _ => 1,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs.max(1);
    // Ignore "already initialized" when called repeatedly in-process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    match cli.command {
        Command::Transform(a) => transform(a),
        Command::Sparsity(a) => sparsity(a),
        Command::Fingerprint(a) => fingerprint(a),
        Command::Pca(a) => pca(a, jobs),
        Command::Perturb(a) => perturb_cmd(a),
        Command::Train(a) => train(a, jobs),
        Command::Evaluate(a) => evaluate(a, jobs),
        Command::Pattern(a) => pattern(a),
        Command::Manifest(a) => manifest(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn is_amra(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("amra"))
}

/// Reads a PNG/JPEG or AMRA image.
pub fn read_image(path: &Path, size: Option<usize>) -> Result<ImageTensor> {
    if is_amra(path) {
        let img = tensor_read(path)?.into_image()?;
        Ok(match size {
            Some(s) if img.shape().0 != s || img.shape().1 != s => perturb::resize_bilinear(&img, s, s),
            _ => img,
        })
    } else {
        load_image(path, size)
    }
}

fn write_any_image(img: &ImageTensor, path: &Path, dtype: Dtype) -> Result<()> {
    if is_amra(path) {
        write_image(img, path, dtype)
    } else {
        save_png(img, path)
    }
}

fn transform(a: TransformArgs) -> Result<()> {
    let dtype = if a.f32 { Dtype::F32 } else { Dtype::F64 };
    if a.inverse {
        let coeffs = tensor_read(&a.input)?.into_coefficients()?;
        if let Some(spec) = &a.spec {
            if *spec != coeffs.layout.spec {
                return Err(Error::Argument(format!(
                    "--spec {spec} does not match the file's spec {}",
                    coeffs.layout.spec
                )));
            }
        }
        let img = transforms::inverse(&coeffs)?;
        return write_any_image(&img, &a.out, dtype);
    }
    let spec = a
        .spec
        .ok_or_else(|| Error::Argument("--spec is required for a forward transform".into()))?;
    let img = read_image(&a.input, a.size)?;
    let mut coeffs = transforms::forward(&img, &spec)?;
    if a.normalize {
        coeffs = crate::features::blockwise_normalize(&coeffs);
    }
    write_coefficients(&coeffs, &a.out, dtype)
}

fn sparsity(a: SparsityArgs) -> Result<()> {
    if !(a.tol >= 0.0) {
        return Err(Error::Argument(format!("tolerance {} must be non-negative", a.tol)));
    }
    let img = read_image(&a.input, None)?;
    let c = transforms::forward(&img, &a.spec)?;
    let counts = analysis::sparsity_count(&c, a.tol);
    let mut csv = String::from("block,count\n");
    for (name, n) in &counts.per_block {
        csv.push_str(&format!("{name},{n}\n"));
    }
    csv.push_str(&format!("total,{}\n", counts.total));
    emit(&csv, a.out.as_deref())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn collect_images(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|x| {
                        matches!(x.to_string_lossy().to_lowercase().as_str(), "png" | "jpg" | "jpeg" | "amra")
                    })
                })
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn fingerprint(a: FingerprintArgs) -> Result<()> {
    let files = collect_images(&a.input)?;
    let fp = analysis::average_fingerprint(files.iter().map(|f| read_image(f, a.size)), &a.spec)?;
    write_coefficients(&fp, &a.out, Dtype::F64)?;
    println!("{}", json!({ "images": files.len(), "out": a.out }));
    Ok(())
}

fn pca(a: PcaArgs, jobs: usize) -> Result<()> {
    let manifest = Manifest::read_jsonl(&a.manifest)?;
    let size = a.size;
    let mut features = Vec::with_capacity(manifest.len());
    let mut rows = Vec::with_capacity(manifest.len());
    if a.finest {
        for e in &manifest.entries {
            let img = load_image(&e.path, size)?;
            let c = transforms::forward(&img, &a.spec)?;
            features.push(analysis::block_values(&c, analysis::is_finest_detail));
            rows.push((e.path.clone(), e.label));
        }
    } else {
        let cfg = StreamConfig {
            batch: 64,
            size,
            jobs,
            ..Default::default()
        };
        for batch in dataset::stream_batches(&manifest, &a.spec, &cfg)? {
            let batch = batch?;
            for ((f, &l), &i) in batch.features.iter().zip(&batch.labels).zip(&batch.indices) {
                features.push(f.data().to_vec());
                rows.push((manifest.entries[i].path.clone(), l));
            }
        }
    }
    if features.first().is_some_and(|f| f.is_empty()) {
        return Err(Error::Argument("the spec has no finest-detail blocks".into()));
    }
    let p = analysis::pca_project(&features, a.k)?;
    let mut csv = String::from("path,label");
    for j in 0..a.k {
        csv.push_str(&format!(",pc{}", j + 1));
    }
    csv.push('\n');
    for ((path, label), coords) in rows.iter().zip(&p.coordinates) {
        csv.push_str(&format!("{path},{label}"));
        for v in coords {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    emit(&csv, a.out.as_deref())?;
    eprintln!(
        "{}",
        json!({ "explained_variance_ratio": p.explained_variance_ratio })
    );
    Ok(())
}

fn perturb_cmd(a: PerturbArgs) -> Result<()> {
    let img = read_image(&a.input, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let need = |name: &str| {
        a.param
            .ok_or_else(|| Error::Argument(format!("--param is required for {name}")))
    };
    let p = match a.kind {
        None => perturb::sample_perturbation(&mut rng),
        Some(PerturbKind::Blur) => Perturbation::Blur {
            kernel: need("blur")? as usize,
        },
        Some(PerturbKind::Crop) => Perturbation::Crop {
            percent: need("crop")?,
        },
        Some(PerturbKind::Jpeg) => Perturbation::Jpeg {
            quality: need("jpeg")? as u8,
        },
        Some(PerturbKind::Noise) => Perturbation::Noise {
            variance: need("noise")?,
        },
    };
    let out = p.apply(&img, &mut rng)?;
    write_any_image(&out, &a.out, Dtype::F64)?;
    println!("{}", serde_json::to_string(&p).expect("perturbation serializes"));
    Ok(())
}

fn stream_config(d: &DataArgs, jobs: usize) -> StreamConfig {
    StreamConfig {
        batch: 64,
        size: (d.size > 0).then_some(d.size),
        perturb_seed: d.perturb,
        cache_dir: d.cache_dir.clone(),
        jobs,
        queue: 2,
    }
}

/// Streams a manifest into an in-memory f32 dataset.
pub fn load_features(
    manifest: &Manifest,
    spec: &TransformSpec,
    cfg: &StreamConfig,
) -> Result<(Dataset<f32>, Vec<(String, usize, Perturbation)>)> {
    let mut ds: Option<Dataset<f32>> = None;
    let mut records = Vec::new();
    let mut stream = dataset::stream_batches(manifest, spec, cfg)?;
    for batch in stream.by_ref() {
        let batch = batch?;
        for (((f, &l), &i), p) in batch
            .features
            .iter()
            .zip(&batch.labels)
            .zip(&batch.indices)
            .zip(&batch.perturbations)
        {
            let d = ds.get_or_insert_with(|| {
                let (h, w, c) = f.shape();
                Dataset::new((c, h, w))
            });
            d.push(f, l)?;
            records.push((manifest.entries[i].path.clone(), l, *p));
        }
    }
    if stream.skipped() > 0 {
        log::warn!("{} images could not be decoded and were skipped", stream.skipped());
    }
    let ds = ds.ok_or_else(|| Error::Argument("no usable images in the manifest".into()))?;
    Ok((ds, records))
}

fn train(a: TrainArgs, jobs: usize) -> Result<()> {
    let manifest = Manifest::read_jsonl(&a.data.manifest)?;
    let split_cfg = SplitConfig {
        fractions: a.split,
        seed: a.seed,
    };
    let [tr, va, te] = dataset::split(&manifest, &split_cfg)?;
    let scfg = stream_config(&a.data, jobs);
    let (train_ds, _) = load_features(&tr, &a.spec, &scfg)?;
    let (val_ds, _) = load_features(&va, &a.spec, &scfg)?;
    let (test_ds, _) = load_features(&te, &a.spec, &scfg)?;
    let cfg = TrainConfig {
        batch: a.batch,
        lr: a.lr,
        epochs: a.epochs,
        seeds: a.seeds.0.clone(),
        ..Default::default()
    };
    cfg.validate()?;
    if cfg.seeds.is_empty() {
        return Err(Error::Argument("--seeds is empty".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let classes = manifest.classes.len();
    let mut accs = Vec::new();
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let res = classifier::train(&train_ds, Some(&val_ds), classes, &cfg, seed)?;
        let acc = classifier::evaluate(&res.params, &test_ds)? * 100.0;
        let dir = a.out.join(format!("seed{seed}"));
        classifier::save_checkpoint(
            &res.params,
            &dir,
            json!({ "spec": a.spec.to_string(), "seed": seed, "classes": manifest.classes }),
        )?;
        classifier::write_history_csv(&res.history, dir.join("history.csv"))?;
        runs.push(json!({ "seed": seed, "test_accuracy": acc, "checkpoint": dir }));
        accs.push(acc);
    }
    let stats = classifier::multi_seed_stats(&accs)?;
    let summary = json!({
        "spec": a.spec.to_string(),
        "method": a.spec.method_name(),
        "params": classifier::init_params::<f32>(0, train_ds.shape, classes)?.num_params(),
        "splits": [tr.len(), va.len(), te.len()],
        "runs": runs,
        "max": stats.max,
        "mean": stats.mean,
        "std": stats.std,
        "single_run": stats.single_run,
        "table": stats.to_string(),
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let path = a.out.join("summary.json");
    fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    println!("{text}");
    Ok(())
}

fn evaluate(a: EvaluateArgs, jobs: usize) -> Result<()> {
    let manifest = Manifest::read_jsonl(&a.data.manifest)?;
    let (params, _) = classifier::load_checkpoint::<f32>(&a.checkpoint)?;
    let (ds, records) = load_features(&manifest, &a.spec, &stream_config(&a.data, jobs))?;
    let acc = classifier::evaluate(&params, &ds)?;
    if let Some(path) = &a.records {
        dataset::write_perturbation_csv(&records, path)?;
    }
    println!(
        "{}",
        json!({ "spec": a.spec.to_string(), "samples": ds.len(), "accuracy": acc * 100.0 })
    );
    Ok(())
}

fn pattern(a: PatternArgs) -> Result<()> {
    let kind = match a.kind {
        PatternName::IsoSquares => PatternKind::IsoSquares { grid: a.grid },
        PatternName::AnisoRects => PatternKind::AnisoRects {
            count: a.count,
            seed: a.seed,
        },
    };
    let img = analysis::generate_pattern(kind, a.n)?;
    write_any_image(&img, &a.out, Dtype::F64)
}

fn manifest(a: ManifestArgs) -> Result<()> {
    let built = dataset::build_manifest(&a.classes)?;
    built.manifest.write_jsonl(&a.out)?;
    let mut report = json!({
        "entries": built.manifest.len(),
        "classes": built.manifest.classes,
        "skipped": built.skipped.len(),
        "checksum": built.manifest.checksum(),
    });
    if let Some(fractions) = a.split {
        let parts = dataset::split(&built.manifest, &SplitConfig { fractions, seed: a.seed })?;
        for (part, name) in parts.iter().zip(["train", "val", "test"]) {
            let mut p = a.out.clone().into_os_string();
            p.push(format!(".{name}"));
            part.write_jsonl(PathBuf::from(p))?;
        }
        report["splits"] = json!(parts.each_ref().map(Manifest::len));
    }
    println!("{report}");
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        size: a.size,
        ..Default::default()
    };
    let (images, labels) = synth::two_source_dataset(&cfg, a.per_class, a.seed)?;
    for name in ["real", "fake"] {
        let d = a.out.join(name);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    for (i, (img, &l)) in images.iter().zip(&labels).enumerate() {
        let name = if l == 0 { "real" } else { "fake" };
        save_png(img, a.out.join(name).join(format!("{:05}.png", i % a.per_class)))?;
    }
    println!("{}", json!({ "images": images.len(), "out": a.out }));
    Ok(())
}
