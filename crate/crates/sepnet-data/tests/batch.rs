use sepnet_data::manifest::{DatasetManifest, ManifestEntry, Split};
use sepnet_data::{
    build_manifest, epoch_plan, generate_blob_dataset, load_batch, split_dataset, SplitSpec,
};
use sepnet_kernels::Rng;
use tempfile::tempdir;

fn synthetic_manifest(per_split: &[(Split, usize)]) -> DatasetManifest {
    let mut entries = Vec::new();
    for &(split, count) in per_split {
        for _ in 0..count {
            let id = entries.len();
            entries.push(ManifestEntry {
                path: format!("{split}/img{id:04}.png"),
                label: (id % 2) as u8,
                split: Some(split),
                content_hash: format!("{id:064x}"),
                phash: (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            });
        }
    }
    DatasetManifest::new(entries).unwrap()
}

#[test]
fn plan_chunks_full_batches_and_keeps_the_short_tail() {
    let manifest = synthetic_manifest(&[(Split::Train, 300), (Split::Val, 10)]);
    let mut rng = Rng::new(1);
    let plan = epoch_plan(&manifest, Split::Train, 80, &mut rng).unwrap();
    let sizes: Vec<usize> = plan.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![80, 80, 80, 60]);
}

#[test]
fn every_entry_appears_exactly_once_per_epoch() {
    let manifest = synthetic_manifest(&[(Split::Train, 157), (Split::Test, 31)]);
    let mut rng = Rng::new(9);
    let plan = epoch_plan(&manifest, Split::Train, 32, &mut rng).unwrap();
    let mut seen: Vec<usize> = plan.into_iter().flatten().collect();
    seen.sort_unstable();
    let expected: Vec<usize> = manifest.split_indices(Split::Train);
    assert_eq!(seen, expected);
}

#[test]
fn plans_are_deterministic_in_the_seed_and_vary_across_epochs() {
    let manifest = synthetic_manifest(&[(Split::Train, 120)]);
    let mut rng_a = Rng::new(7);
    let mut rng_b = Rng::new(7);
    let first_a = epoch_plan(&manifest, Split::Train, 16, &mut rng_a).unwrap();
    let first_b = epoch_plan(&manifest, Split::Train, 16, &mut rng_b).unwrap();
    assert_eq!(first_a, first_b);
    // Drawing the second epoch from the same stream reshuffles.
    let second_a = epoch_plan(&manifest, Split::Train, 16, &mut rng_a).unwrap();
    assert_ne!(first_a, second_a);
    // A different seed shuffles differently.
    let mut rng_c = Rng::new(8);
    let first_c = epoch_plan(&manifest, Split::Train, 16, &mut rng_c).unwrap();
    assert_ne!(first_a, first_c);
}

#[test]
fn zero_batch_size_and_empty_splits_are_errors() {
    let manifest = synthetic_manifest(&[(Split::Train, 4)]);
    let mut rng = Rng::new(1);
    let err = epoch_plan(&manifest, Split::Train, 0, &mut rng).unwrap_err();
    assert!(err.to_string().contains("batch size"));
    let err = epoch_plan(&manifest, Split::Val, 8, &mut rng).unwrap_err();
    assert!(err.to_string().contains("val"), "{err}");
}

#[test]
fn loaded_batches_carry_normalized_pixels_and_manifest_labels() {
    let dir = tempdir().unwrap();
    generate_blob_dataset(dir.path(), 24, 6, 404).unwrap();
    let manifest = build_manifest(dir.path()).unwrap();
    let manifest = split_dataset(
        &manifest,
        SplitSpec::Counts { train: 4, val: 1, test: 1 },
        11,
    )
    .unwrap();

    let mut rng = Rng::new(3);
    let plan = epoch_plan(&manifest, Split::Train, 3, &mut rng).unwrap();
    assert_eq!(plan.iter().map(Vec::len).sum::<usize>(), 8);
    for chunk in &plan {
        let batch = load_batch(&manifest, dir.path(), chunk, 24).unwrap();
        assert_eq!(batch.images.shape(), &[chunk.len(), 24, 24, 3]);
        assert_eq!(batch.len(), chunk.len());
        for (&index, &label) in chunk.iter().zip(&batch.labels) {
            assert_eq!(manifest.entries[index].label as usize, label);
        }
        for &v in batch.images.data() {
            assert!((-1.0..=1.0).contains(&v), "pixel {v} out of range");
        }
    }
}

#[test]
fn resolution_request_resizes_on_load() {
    let dir = tempdir().unwrap();
    generate_blob_dataset(dir.path(), 32, 2, 17).unwrap();
    let manifest = build_manifest(dir.path()).unwrap();
    let batch = load_batch(&manifest, dir.path(), &[0, 1], 16).unwrap();
    assert_eq!(batch.images.shape(), &[2, 16, 16, 3]);
}

#[test]
fn batch_bytes_do_not_depend_on_the_decoder_thread_count() {
    let dir = tempdir().unwrap();
    generate_blob_dataset(dir.path(), 20, 8, 99).unwrap();
    let manifest = build_manifest(dir.path()).unwrap();
    let plan: Vec<usize> = (0..manifest.entries.len()).collect();

    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| load_batch(&manifest, dir.path(), &plan, 20))
        .unwrap();
    let wide = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| load_batch(&manifest, dir.path(), &plan, 20))
        .unwrap();

    assert_eq!(single.labels, wide.labels);
    let a: &[f32] = single.images.data();
    let b: &[f32] = wide.images.data();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn missing_file_on_disk_surfaces_the_path() {
    let manifest = synthetic_manifest(&[(Split::Train, 2)]);
    let dir = tempdir().unwrap();
    let err = load_batch(&manifest, dir.path(), &[0], 16).unwrap_err();
    assert!(err.to_string().contains("img0000.png"), "{err}");
}
