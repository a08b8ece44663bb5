use std::io::Write;

use stocfl::datagen::{
    load_idx, make_base_dataset, parse_idx_images, parse_idx_labels, partition_hybrid, partition_iid,
    partition_pathological, partition_rotated, partition_shifted, random_orthogonal, rotation_matrices,
    train_test_split, DataError, IMAGES_MAGIC, LABELS_MAGIC,
};

fn base(seed: u64, n: usize) -> stocfl::BaseDatasetF64 {
    make_base_dataset(seed, n, 6, 4, 3.0).unwrap()
}

#[test]
fn base_is_balanced_and_seeded() {
    let a = base(1, 103);
    let mut counts = [0usize; 4];
    for &y in a.data().labels() {
        counts[y] += 1;
    }
    assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    assert_eq!(a, base(1, 103));
    assert_ne!(a, base(2, 103));
}

#[test]
fn class_means_sit_at_the_separation_radius() {
    let b = make_base_dataset::<f64>(3, 8000, 5, 2, 6.0).unwrap();
    for class in 0..2 {
        let rows: Vec<&[f64]> = b.data().rows().filter(|&(_, y)| y == class).map(|(x, _)| x).collect();
        let mean: Vec<f64> = (0..5).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect();
        let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 6.0).abs() < 0.2, "class {class} mean norm {norm}");
    }
}

#[test]
fn orthogonal_matrices_are_orthogonal() {
    for d in [2, 5, 20] {
        let q = random_orthogonal::<f64>(d, d as u64);
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|k| q[i * d + k] * q[j * d + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }
    let qs = rotation_matrices::<f64>(3, 3, 9);
    assert_eq!(qs[0], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert_ne!(qs[1], qs[2]);
}

#[test]
fn rotated_keeps_labels_and_cluster_zero_is_untouched() {
    let b = base(4, 240);
    let rot = partition_rotated(&b, 3, 4, 11).unwrap();
    let iid = partition_iid(&b, 12, 11).unwrap();
    assert_eq!(rot.num_clients(), 12);
    assert_eq!(rot.num_clusters, 3);
    assert_eq!(rot.true_cluster, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    for c in 0..12 {
        assert_eq!(rot.train[c].labels(), iid.train[c].labels());
        if c < 4 {
            assert_eq!(rot.train[c], iid.train[c]);
        } else {
            assert_ne!(rot.train[c].features(), iid.train[c].features());
            // orthogonal maps preserve row norms
            for (a, b) in rot.train[c].rows().zip(iid.train[c].rows()) {
                let na: f64 = a.0.iter().map(|v| v * v).sum();
                let nb: f64 = b.0.iter().map(|v| v * v).sum();
                assert!((na - nb).abs() < 1e-9 * nb.max(1.0));
            }
        }
    }
    assert!(matches!(partition_rotated(&b, 1, 4, 0), Err(DataError::InvalidParams(_))));
}

#[test]
fn shifted_relabels_and_keeps_features() {
    let b = base(5, 200);
    let s = partition_shifted(&b, &[0, 1, -1], 5, 2).unwrap();
    let iid = partition_iid(&b, 15, 2).unwrap();
    for c in 0..15 {
        let shift = [0i64, 1, -1][c / 5];
        assert_eq!(s.train[c].features(), iid.train[c].features());
        for (&y, &y0) in s.train[c].labels().iter().zip(iid.train[c].labels()) {
            assert_eq!(y as i64, (y0 as i64 + shift).rem_euclid(4));
        }
    }
}

#[test]
fn pathological_groups_hold_only_their_labels() {
    let b = base(6, 400);
    let groups = vec![vec![0, 1], vec![2], vec![3]];
    let p = partition_pathological(&b, &groups, 3, 8).unwrap();
    assert_eq!(p.num_clients(), 9);
    for c in 0..9 {
        let g = p.true_cluster[c];
        assert!(p.train[c].labels().iter().all(|y| groups[g].contains(y)));
    }
    // every sample of a covered label lands in exactly one client
    let total: usize = p.train.iter().map(|s| s.len()).sum();
    assert_eq!(total, 400);
    assert!(partition_pathological(&b, &[vec![0, 1], vec![1]], 2, 0).is_err());
}

#[test]
fn hybrid_concatenates_domains() {
    let a = base(7, 60);
    let b = make_base_dataset::<f64>(8, 90, 6, 4, 3.0).unwrap();
    let h = partition_hybrid(&a, &b, 3, 1).unwrap();
    assert_eq!(h.true_cluster, vec![0, 0, 0, 1, 1, 1]);
    assert_eq!(h.train[..3].iter().map(|s| s.len()).sum::<usize>(), 60);
    assert_eq!(h.train[3..].iter().map(|s| s.len()).sum::<usize>(), 90);
    let wrong = make_base_dataset::<f64>(8, 90, 5, 4, 3.0).unwrap();
    assert!(matches!(partition_hybrid(&a, &wrong, 3, 1), Err(DataError::DimMismatch(6, 5))));
}

#[test]
fn too_many_clients_is_an_error() {
    assert!(matches!(partition_iid(&base(9, 10), 11, 0), Err(DataError::EmptyClient { .. })));
}

#[test]
fn split_sizes_and_determinism() {
    let s = partition_iid(&base(10, 120), 2, 0).unwrap();
    let split = train_test_split(&s, 10.0 / 60.0, 3).unwrap();
    for c in 0..2 {
        assert_eq!(split.train[c].len(), 50);
        assert_eq!(split.test[c].len(), 10);
    }
    assert_eq!(split, train_test_split(&s, 10.0 / 60.0, 3).unwrap());
    assert!(train_test_split(&split, 0.5, 3).is_err());
    assert!(train_test_split(&s, 1.0, 3).is_err());
}

#[test]
fn hold_out_takes_the_last_clients_of_each_cluster() {
    let b = base(11, 240);
    let s = partition_shifted(&b, &[0, 2], 6, 0).unwrap();
    let (keep, held) = s.hold_out(2).unwrap();
    assert_eq!(keep.true_cluster, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    assert_eq!(held.true_cluster, vec![0, 0, 1, 1]);
    assert_eq!(held.train[0], s.train[4]);
    assert_eq!(held.train[3], s.train[11]);
}

fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [IMAGES_MAGIC, count, rows, cols] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[test]
fn idx_parsing() {
    let img = parse_idx_images(&idx_images(2, 2, 2, &[0, 255, 1, 2, 3, 4, 5, 6])).unwrap();
    assert_eq!((img.count, img.rows, img.cols), (2, 2, 2));
    assert_eq!(img.pixels[1], 255);
    assert_eq!(parse_idx_labels(&idx_labels(&[3, 1])).unwrap(), vec![3, 1]);

    assert!(matches!(
        parse_idx_images(&idx_labels(&[1])),
        Err(DataError::BadMagic { expected: IMAGES_MAGIC, .. })
    ));
    assert!(matches!(
        parse_idx_images(&idx_images(2, 2, 2, &[0; 7])),
        Err(DataError::Truncated { needed: 24, available: 23 })
    ));
    assert!(matches!(parse_idx_labels(&[0, 0]), Err(DataError::Truncated { .. })));
}

#[test]
fn idx_files_load_scaled() {
    let dir = tempfile::tempdir().unwrap();
    let ip = dir.path().join("img");
    let lp = dir.path().join("lab");
    std::fs::File::create(&ip)
        .unwrap()
        .write_all(&idx_images(3, 1, 2, &[0, 255, 51, 102, 0, 0]))
        .unwrap();
    std::fs::File::create(&lp).unwrap().write_all(&idx_labels(&[0, 2, 1])).unwrap();
    let b = load_idx::<f64>(&ip, &lp).unwrap();
    assert_eq!(b.num_classes(), 3);
    assert_eq!(b.dim(), 2);
    assert_eq!(b.data().row(0), &[0.0, 1.0]);
    assert_eq!(b.data().row(1), &[0.2, 0.4]);

    std::fs::File::create(&lp).unwrap().write_all(&idx_labels(&[0, 2])).unwrap();
    assert!(matches!(load_idx::<f64>(&ip, &lp), Err(DataError::CountMismatch { images: 3, labels: 2 })));
    assert!(matches!(load_idx::<f64>(dir.path().join("nope"), &lp), Err(DataError::Io { .. })));
}
