use std::fs;
use std::path::Path;

use amra::analysis::{average_fingerprint, block_values, is_finest_detail, pca_project, threshold_accuracy};
use amra::classifier::{evaluate, train, Dataset, TrainConfig};
use amra::dataset::{build_manifest, save_png, stream_batches, Manifest, StreamConfig};
use amra::perturb::{add_noise, perturb_pipeline, random_crop, Perturbation};
use amra::synth::{two_source_dataset, SynthConfig};
use amra::transforms::forward;
use amra::{ImageTensor, TransformSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write_images(dir: &Path, n: usize, seed: u64) {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let img = ImageTensor::from_fn(16, 16, 3, |_, _, _| rng.random_range(0..=255) as f64);
        save_png(&img, dir.join(format!("img{i:02}.png"))).unwrap();
    }
}

fn class_dirs(root: &Path, per_class: usize) -> Vec<std::path::PathBuf> {
    let dirs = vec![root.join("real"), root.join("fake")];
    for (i, d) in dirs.iter().enumerate() {
        write_images(d, per_class, i as u64);
    }
    dirs
}

fn collect(manifest: &Manifest, spec: &TransformSpec, cfg: &StreamConfig) -> Vec<amra::dataset::Batch> {
    stream_batches(manifest, spec, cfg)
        .unwrap()
        .collect::<amra::Result<Vec<_>>>()
        .unwrap()
}

#[test]
fn manifest_from_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = class_dirs(tmp.path(), 3);
    fs::write(dirs[0].join("broken.png"), b"not a png").unwrap();
    fs::write(dirs[1].join("notes.txt"), b"ignored").unwrap();

    let build = build_manifest(&dirs).unwrap();
    assert_eq!(build.manifest.classes, ["real", "fake"]);
    assert_eq!(build.manifest.len(), 6);
    assert_eq!(build.skipped.len(), 1);
    let labels: Vec<usize> = build.manifest.entries.iter().map(|e| e.label).collect();
    assert_eq!(labels, [0, 0, 0, 1, 1, 1]);

    let again = build_manifest(&dirs).unwrap();
    assert_eq!(build.manifest.checksum(), again.manifest.checksum());

    let path = tmp.path().join("manifest.jsonl");
    build.manifest.write_jsonl(&path).unwrap();
    assert_eq!(Manifest::read_jsonl(&path).unwrap(), build.manifest);

    // Tampering is caught by the checksum.
    let text = fs::read_to_string(&path).unwrap().replace("img00", "img99");
    fs::write(&path, text).unwrap();
    assert!(matches!(Manifest::read_jsonl(&path), Err(amra::Error::Corruption(_))));

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert!(build_manifest(&[&dirs[0], &empty]).is_err());
}

#[test]
fn streaming_batches_and_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = class_dirs(tmp.path(), 5);
    let manifest = build_manifest(&dirs).unwrap().manifest;
    let spec: TransformSpec = "kind=fswt,wavelet=db3,level=2".parse().unwrap();

    let mut cfg = StreamConfig {
        batch: 4,
        jobs: 3,
        ..Default::default()
    };
    let plain = collect(&manifest, &spec, &cfg);
    assert_eq!(plain.iter().map(|b| b.len()).collect::<Vec<_>>(), [4, 4, 2]);
    let order: Vec<usize> = plain.iter().flat_map(|b| b.indices.clone()).collect();
    assert_eq!(order, (0..10).collect::<Vec<_>>());

    cfg.cache_dir = Some(tmp.path().join("cache"));
    let cold = collect(&manifest, &spec, &cfg);
    let warm = collect(&manifest, &spec, &cfg);
    assert_eq!(cold, plain);
    assert_eq!(warm, cold);

    let entries: Vec<_> = fs::read_dir(tmp.path().join("cache")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 10);
    fs::write(&entries[0], b"garbage").unwrap();
    assert_eq!(collect(&manifest, &spec, &cfg), cold);

    // Perturbed streams are reproducible and recorded.
    cfg.cache_dir = None;
    cfg.perturb_seed = Some(7);
    let a = collect(&manifest, &spec, &cfg);
    cfg.jobs = 1;
    let b = collect(&manifest, &spec, &cfg);
    assert_eq!(a, b);
}

#[test]
fn crop_scales_a_centred_disk() {
    let n = 128;
    let radius = 20.0;
    let disk = ImageTensor::from_fn(n, n, 1, |r, c, _| {
        let (y, x) = (r as f64 - 63.5, c as f64 - 63.5);
        if (x * x + y * y).sqrt() <= radius { 255.0 } else { 0.0 }
    });
    let cropped = random_crop(&disk, 20.0).unwrap();
    let area = cropped.data().iter().filter(|&&v| v > 127.5).count() as f64;
    let measured = (area / std::f64::consts::PI).sqrt();
    let expected = radius / 0.8;
    assert!((measured - expected).abs() < 1.0, "radius {measured}, expected {expected}");
}

#[test]
fn noise_has_the_requested_variance() {
    let img = ImageTensor::from_fn(128, 128, 1, |_, _, _| 128.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy = add_noise(&img, 5.0, &mut rng).unwrap();
    let n = noisy.data().len() as f64;
    let var = noisy.data().iter().map(|v| (v - 128.0).powi(2)).sum::<f64>() / n;
    // Rounding to integers adds about 1/12 to the variance.
    let std = var.sqrt();
    assert!(std >= 0.8 * 5f64.sqrt() && std <= 1.2 * 5f64.sqrt(), "std {std}");
}

#[test]
fn half_of_all_images_stay_unperturbed() {
    let img = ImageTensor::from_fn(8, 8, 3, |r, c, ch| ((r * 31 + c * 7 + ch) % 256) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 4000;
    let mut none = 0;
    for _ in 0..trials {
        let (out, p) = perturb_pipeline(&img, &mut rng).unwrap();
        assert_eq!(out.shape(), img.shape());
        if p == Perturbation::None {
            none += 1;
            assert_eq!(out, img);
        }
    }
    let frac = none as f64 / trials as f64;
    assert!((0.48..=0.52).contains(&frac), "unperturbed fraction {frac}");
}

#[test]
fn fingerprints() {
    let spec: TransformSpec = "kind=fswt,wavelet=db3,level=2".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = ImageTensor::from_fn(32, 32, 1, |_, _, _| rng.random_range(-1.0..1.0));
    let neg = x.map(|v| -v);
    let f = average_fingerprint([Ok(x), Ok(neg)], &spec).unwrap();
    assert!(f.data.iter().all(|&v| v == 0.0));

    // The mean of N white-noise transforms shrinks like 1/√N.
    let n = 100;
    let mut sum: Option<Vec<f64>> = None;
    let mut single = 0.0;
    for i in 0..n {
        let img = ImageTensor::from_fn(32, 32, 1, |_, _, _| rng.random_range(-1.0..1.0));
        let c = forward(&img, &spec).unwrap();
        if i == 0 {
            single = c.norm();
        }
        match &mut sum {
            None => sum = Some(c.data),
            Some(s) => s.iter_mut().zip(&c.data).for_each(|(a, b)| *a += b),
        }
    }
    let mean_norm = sum.unwrap().iter().map(|v| (v / n as f64).powi(2)).sum::<f64>().sqrt();
    let shrink = mean_norm / single;
    assert!((0.05..=0.2).contains(&shrink), "shrink {shrink}");
}

#[test]
fn pca_separates_upsampling_traces() {
    let cfg = SynthConfig {
        size: 32,
        ..Default::default()
    };
    let (images, labels) = two_source_dataset(&cfg, 40, 2).unwrap();
    let spec: TransformSpec = "kind=fswt,wavelet=db3,level=3,boundary=reflect,bn=false".parse().unwrap();
    let feats: Vec<Vec<f64>> = images
        .iter()
        .map(|img| block_values(&forward(img, &spec).unwrap(), is_finest_detail))
        .collect();
    let pca = pca_project(&feats, 3).unwrap();
    let flags: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
    let best = (0..3)
        .map(|k| {
            let v: Vec<f64> = pca.coordinates.iter().map(|c| c[k]).collect();
            threshold_accuracy(&v, &flags)
        })
        .fold(0.0, f64::max);
    assert!(best >= 0.9, "best component accuracy {best}");
    assert_eq!(threshold_accuracy(&[0.0, 1.0, 2.0, 3.0], &[false, false, true, true]), 1.0);
}

#[test]
fn training_is_deterministic() {
    let cfg = SynthConfig {
        size: 16,
        ..Default::default()
    };
    let (images, labels) = two_source_dataset(&cfg, 16, 0).unwrap();
    let spec: TransformSpec = "kind=fswt,wavelet=haar,level=2".parse().unwrap();
    let feats: Vec<ImageTensor> = images.iter().map(|i| amra::extract_features(i, &spec).unwrap()).collect();
    let data = Dataset::<f64>::from_images(&feats, &labels).unwrap();
    let tc = TrainConfig {
        batch: 8,
        epochs: 2,
        ..Default::default()
    };
    let a = train(&data, Some(&data), 2, &tc, 3).unwrap();
    let b = train(&data, Some(&data), 2, &tc, 3).unwrap();
    assert_eq!(a.step_losses, b.step_losses);
    assert_eq!(a.params, b.params);
    assert_eq!(a.history.len(), 2);
    assert!(evaluate(&a.params, &data).unwrap() >= 0.0);
}
