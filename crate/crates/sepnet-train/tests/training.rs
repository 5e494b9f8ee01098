use std::path::Path;

use sepnet_data::manifest::{DatasetManifest, Split};
use sepnet_data::{build_manifest, generate_blob_dataset, load_batch, split_dataset, Batch, SplitSpec};
use sepnet_kernels::{Rng, Tensor};
use sepnet_model::{build_model, Head, ModelConfig, Variant};
use sepnet_train::{
    apply_gradients, evaluate, fit, predict, render_metrics, run_epoch, zero_velocity,
    TrainConfig, TrainState,
};
use tempfile::tempdir;

fn tiny_config() -> ModelConfig {
    ModelConfig {
        variant: Variant::Separable,
        alpha: 0.25,
        resolution: 32,
        depth_multiplier: 1,
        head: Head::Transfer,
    }
}

fn random_batch(seed: u64, n: usize) -> Batch {
    let mut rng = Rng::new(seed);
    let data: Vec<f32> = (0..n * 32 * 32 * 3).map(|_| rng.uniform() * 2.0 - 1.0).collect();
    Batch {
        images: Tensor::new(vec![n, 32, 32, 3], data).unwrap(),
        labels: (0..n).map(|i| i % 2).collect(),
    }
}

/// 24 images, 32x32, split 16/4/4, written under `dir`.
fn small_dataset(dir: &Path, seed: u64) -> DatasetManifest {
    generate_blob_dataset(dir, 32, 12, seed).unwrap();
    let manifest = build_manifest(dir).unwrap();
    split_dataset(&manifest, SplitSpec::Counts { train: 8, val: 2, test: 2 }, 3).unwrap()
}

#[test]
fn loss_strictly_decreases_over_the_first_five_steps() {
    let mut model = build_model(&tiny_config(), 0).unwrap();
    let mut velocity = zero_velocity(&mut model);
    let mut rng = Rng::new(1);
    let batch = random_batch(7, 8);
    let mut losses = Vec::new();
    for _ in 0..5 {
        let step = model.train_step_grads(&batch.images, &batch.labels, &mut rng).unwrap();
        apply_gradients(&mut model, &step.grads, &mut velocity, 0.01, 0.9).unwrap();
        losses.push(step.loss);
    }
    for pair in losses.windows(2) {
        assert!(pair[1] < pair[0], "loss went up: {losses:?}");
    }
}

#[test]
fn sixteen_images_overfit_to_full_train_accuracy() {
    let dir = tempdir().unwrap();
    generate_blob_dataset(dir.path(), 32, 8, 909).unwrap();
    let manifest = build_manifest(dir.path()).unwrap();
    let plan: Vec<usize> = (0..16).collect();
    let batch = load_batch(&manifest, dir.path(), &plan, 32).unwrap();

    let model = build_model(&tiny_config(), 5).unwrap();
    let out = tempdir().unwrap();
    let config = TrainConfig { batch_size: 16, ..TrainConfig::default() };
    let mut state = TrainState::new(model, config, out.path().join("best.ckpt")).unwrap();

    let mut reached = None;
    for epoch in 1..=200 {
        let record = run_epoch(
            &mut state,
            std::slice::from_ref(&batch),
            std::slice::from_ref(&batch),
        )
        .unwrap();
        if record.train_accuracy == 1.0 {
            reached = Some(epoch);
            break;
        }
    }
    assert!(reached.is_some(), "never memorized 16 images in 200 epochs");
}

#[test]
fn fit_records_history_and_reloads_the_best_checkpoint() {
    let data = tempdir().unwrap();
    let manifest = small_dataset(data.path(), 77);
    let out = tempdir().unwrap();
    let config = TrainConfig { batch_size: 8, epochs: 3, seed: 21, ..TrainConfig::default() };
    let model = build_model(&tiny_config(), 13).unwrap();
    let state = fit(model, &manifest, data.path(), &config, out.path(), None).unwrap();

    assert_eq!(state.history.len(), 3);
    for (i, record) in state.history.iter().enumerate() {
        assert_eq!(record.epoch, i + 1);
        assert!(record.wall_seconds > 0.0);
        assert!((0.0..=1.0).contains(&record.train_accuracy));
        assert!((0.0..=1.0).contains(&record.val_accuracy));
        assert!(record.train_loss >= 0.0 && record.val_loss >= 0.0);
    }
    // Learning rate never rises and respects the floor.
    for pair in state.history.windows(2) {
        assert!(pair[1].learning_rate <= pair[0].learning_rate);
    }
    assert!(state.history.iter().all(|r| r.learning_rate >= config.lr_floor));

    // The returned model IS the best checkpoint: re-evaluating it on the
    // validation split reproduces the recorded best accuracy bit-for-bit.
    let best_recorded = state
        .history
        .iter()
        .map(|r| r.val_accuracy)
        .fold(f32::NEG_INFINITY, f32::max);
    assert_eq!(state.best_val_accuracy, best_recorded);
    let val_plan = manifest.split_indices(Split::Val);
    let val_batch = load_batch(&manifest, data.path(), &val_plan, 32).unwrap();
    let verdict = evaluate(&state.model, std::slice::from_ref(&val_batch)).unwrap();
    assert_eq!(verdict.accuracy.to_bits(), best_recorded.to_bits());

    // The checkpoint metadata records the same accuracy exactly.
    let (_, metadata) = sepnet_model::load_checkpoint(&state.best_checkpoint).unwrap();
    assert_eq!(metadata["val_accuracy"].parse::<f32>().unwrap().to_bits(), best_recorded.to_bits());
}

#[test]
fn fit_is_deterministic_for_a_fixed_seed_and_any_thread_count() {
    let data = tempdir().unwrap();
    let manifest = small_dataset(data.path(), 42);
    let config = TrainConfig { batch_size: 8, epochs: 2, seed: 9, ..TrainConfig::default() };

    let run = |threads: Option<usize>| -> (String, Vec<u8>) {
        let out = tempdir().unwrap();
        let model = build_model(&tiny_config(), 4).unwrap();
        let state = match threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| fit(model, &manifest, data.path(), &config, out.path(), None))
                .unwrap(),
            None => fit(model, &manifest, data.path(), &config, out.path(), None).unwrap(),
        };
        let metrics = render_metrics(&state.history);
        let checkpoint = std::fs::read(&state.best_checkpoint).unwrap();
        (metrics, checkpoint)
    };

    let (metrics_a, ckpt_a) = run(None);
    let (metrics_b, ckpt_b) = run(None);
    assert_eq!(metrics_a, metrics_b, "same seed, different history");
    assert_eq!(ckpt_a, ckpt_b, "same seed, different checkpoint bytes");

    let (metrics_c, ckpt_c) = run(Some(1));
    assert_eq!(metrics_a, metrics_c, "thread count changed the history");
    assert_eq!(ckpt_a, ckpt_c, "thread count changed the checkpoint");
}

#[test]
fn fit_refuses_a_manifest_missing_a_split_before_touching_anything() {
    let data = tempdir().unwrap();
    generate_blob_dataset(data.path(), 32, 4, 50).unwrap();
    let manifest = build_manifest(data.path()).unwrap();
    let manifest =
        split_dataset(&manifest, SplitSpec::Counts { train: 3, val: 1, test: 0 }, 1).unwrap();
    let out = tempdir().unwrap();
    let model = build_model(&tiny_config(), 2).unwrap();
    let err = fit(model, &manifest, data.path(), &TrainConfig::default(), out.path(), None)
        .unwrap_err();
    assert!(err.to_string().contains("test"), "{err}");
    assert!(!out.path().join("best.ckpt").exists());
}

#[test]
fn zero_epochs_returns_the_initialized_model_untouched() {
    let data = tempdir().unwrap();
    let manifest = small_dataset(data.path(), 31);
    let out = tempdir().unwrap();
    let config = TrainConfig { epochs: 0, batch_size: 8, ..TrainConfig::default() };
    let state = fit(
        build_model(&tiny_config(), 88).unwrap(),
        &manifest,
        data.path(),
        &config,
        out.path(),
        None,
    )
    .unwrap();
    assert!(state.history.is_empty());
    assert!(!out.path().join("best.ckpt").exists());

    let fresh = build_model(&tiny_config(), 88).unwrap();
    for ((name_a, a), (name_b, b)) in fresh.state().iter().zip(state.model.state()) {
        assert_eq!(name_a, &name_b);
        assert_eq!(a.data(), b.data(), "{name_a} changed with zero epochs");
    }
}

#[test]
fn interactive_prompt_extends_training_until_zero() {
    let data = tempdir().unwrap();
    let manifest = small_dataset(data.path(), 64);
    let out = tempdir().unwrap();
    let config = TrainConfig {
        batch_size: 8,
        epochs: 2,
        interactive: true,
        ..TrainConfig::default()
    };

    let mut script = vec![Some(3), Some(0)].into_iter();
    let mut ask = move || script.next().flatten();
    let state = fit(
        build_model(&tiny_config(), 6).unwrap(),
        &manifest,
        data.path(),
        &config,
        out.path(),
        Some(&mut ask),
    )
    .unwrap();
    assert_eq!(state.history.len(), 2 + 3);

    // End of input behaves like answering zero.
    let mut eof = || None;
    let state = fit(
        build_model(&tiny_config(), 6).unwrap(),
        &manifest,
        data.path(),
        &config,
        tempdir().unwrap().path(),
        Some(&mut eof),
    )
    .unwrap();
    assert_eq!(state.history.len(), 2);

    // Interactive mode without a prompt is refused up front.
    let err = fit(
        build_model(&tiny_config(), 6).unwrap(),
        &manifest,
        data.path(),
        &config,
        out.path(),
        None,
    )
    .unwrap_err();
    assert!(err.to_string().contains("prompt"), "{err}");

    // A non-interactive run never consults the prompt.
    let mut deny = || -> Option<usize> { panic!("prompt consulted in non-interactive run") };
    let quiet = TrainConfig { interactive: false, epochs: 1, batch_size: 8, ..TrainConfig::default() };
    fit(
        build_model(&tiny_config(), 6).unwrap(),
        &manifest,
        data.path(),
        &quiet,
        tempdir().unwrap().path(),
        Some(&mut deny),
    )
    .unwrap();
}

#[test]
fn evaluation_confusion_matrix_accounts_for_every_sample() {
    let dir = tempdir().unwrap();
    generate_blob_dataset(dir.path(), 32, 8, 909).unwrap();
    let manifest = build_manifest(dir.path()).unwrap();
    let plan: Vec<usize> = (0..16).collect();
    let batch = load_batch(&manifest, dir.path(), &plan, 32).unwrap();

    // Memorize the batch, then grade it.
    let out = tempdir().unwrap();
    let config = TrainConfig { batch_size: 16, ..TrainConfig::default() };
    let mut state =
        TrainState::new(build_model(&tiny_config(), 5).unwrap(), config, out.path().join("c")).unwrap();
    for _ in 0..200 {
        let record = run_epoch(
            &mut state,
            std::slice::from_ref(&batch),
            std::slice::from_ref(&batch),
        )
        .unwrap();
        if record.train_accuracy == 1.0 {
            break;
        }
    }

    let verdict = evaluate(&state.model, std::slice::from_ref(&batch)).unwrap();
    let total: usize = verdict.confusion.iter().flatten().sum();
    assert_eq!(total, 16);
    if verdict.accuracy == 1.0 {
        assert_eq!(verdict.confusion[0][1] + verdict.confusion[1][0], 0);
    }

    // Flipping every label inverts the verdict.
    let flipped = Batch {
        images: batch.images.clone(),
        labels: batch.labels.iter().map(|&l| 1 - l).collect(),
    };
    let wrong = evaluate(&state.model, std::slice::from_ref(&flipped)).unwrap();
    assert!((verdict.accuracy + wrong.accuracy - 1.0).abs() < 1e-6);

    // Prediction on a single file agrees with evaluation's decision.
    let path = dir.path().join(&manifest.entries[0].path);
    let (class, probs) = predict(&state.model, &path).unwrap();
    assert_eq!(probs.len(), 2);
    assert!((probs.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    let single = load_batch(&manifest, dir.path(), &[0], 32).unwrap();
    let one = evaluate(&state.model, std::slice::from_ref(&single)).unwrap();
    let label = manifest.entries[0].label as usize;
    let evaluated_decision = if one.accuracy == 1.0 { label } else { 1 - label };
    assert_eq!(class, evaluated_decision);
}

#[test]
fn evaluation_rejects_misuse() {
    let wide = ModelConfig {
        head: Head::Linear { classes: 3 },
        ..tiny_config()
    };
    let model = build_model(&wide, 1).unwrap();
    let err = evaluate(&model, &[]).unwrap_err();
    assert!(err.to_string().contains("binary"), "{err}");

    let binary = build_model(&tiny_config(), 1).unwrap();
    let err = evaluate(&binary, &[]).unwrap_err();
    assert!(err.to_string().contains("at least one sample"), "{err}");

    let missing = predict(&binary, Path::new("/nonexistent/img.png")).unwrap_err();
    assert!(missing.to_string().contains("img.png"), "{missing}");
}

#[test]
fn model_updates_change_parameters_but_not_the_architecture() {
    let mut model = build_model(&tiny_config(), 0).unwrap();
    let mut velocity = zero_velocity(&mut model);
    let mut rng = Rng::new(2);
    let batch = random_batch(3, 4);
    let before: Vec<Vec<f32>> = model.state().iter().map(|(_, t)| t.data().to_vec()).collect();
    let step = model.train_step_grads(&batch.images, &batch.labels, &mut rng).unwrap();
    apply_gradients(&mut model, &step.grads, &mut velocity, 0.01, 0.9).unwrap();
    let after: Vec<Vec<f32>> = model.state().iter().map(|(_, t)| t.data().to_vec()).collect();
    assert_eq!(before.len(), after.len());
    assert_ne!(before, after);
}
