use occkit_core::edge::{edge_magnitude, extract_pseudo_edges, EdgeKernel, KernelKind, LabelMap};
use occkit_core::rng::SplitMix64;
use occkit_oracles::{dense_magnitude, reference_taps};
use proptest::prelude::*;

const KINDS: [KernelKind; 3] = [KernelKind::Sobel, KernelKind::Prewitt, KernelKind::Laplacian];
const SIZES: [usize; 3] = [3, 5, 7];

fn random_labels(rng: &mut SplitMix64, rows: usize, cols: usize, classes: u64) -> LabelMap {
    let data = (0..rows * cols).map(|_| rng.below(classes) as u32).collect();
    LabelMap::new(rows, cols, data).unwrap()
}

/// Left half `a`, right half `b`, step between columns `cols/2 - 1` and `cols/2`.
fn vertical_step(rows: usize, cols: usize, a: u32, b: u32) -> LabelMap {
    let data = (0..rows * cols).map(|i| if i % cols < cols / 2 { a } else { b }).collect();
    LabelMap::new(rows, cols, data).unwrap()
}

fn edge_columns(labels: &LabelMap, kernel: &EdgeKernel) -> Vec<usize> {
    let e = extract_pseudo_edges(labels, kernel);
    (0..e.width()).filter(|&c| (0..e.height()).any(|r| e.get(r, c) == 1.0)).collect()
}

#[test]
fn taps_match_reference_construction() {
    for kind in KINDS {
        for size in SIZES {
            let k = EdgeKernel::new(kind, size).unwrap();
            let (rx, ry) = reference_taps(kind, size);
            assert_eq!(k.taps_x(), &rx[..], "{kind:?} {size}");
            if kind != KernelKind::Laplacian {
                assert_eq!(k.taps_y(), &ry[..], "{kind:?} {size}");
            }
        }
    }
}

#[test]
fn every_kernel_matches_dense_convolution() {
    let mut rng = SplitMix64::new(3);
    for kind in KINDS {
        for size in SIZES {
            let k = EdgeKernel::new(kind, size).unwrap();
            for (rows, cols, classes) in [(17, 23, 2), (9, 9, 5), (31, 12, 18), (4, 3, 3), (1, 8, 4)] {
                let labels = random_labels(&mut rng, rows, cols, classes);
                // integer taps and labels: every order of summation is exact
                assert_eq!(edge_magnitude(&labels, &k), dense_magnitude(&labels, &k), "{kind:?} {size}");
                let binary: Vec<f64> = dense_magnitude(&labels, &k)
                    .iter()
                    .map(|&m| if m > 0.0 { 1.0 } else { 0.0 })
                    .collect();
                assert_eq!(extract_pseudo_edges(&labels, &k).values(), &binary[..]);
            }
        }
    }
}

#[test]
fn constant_maps_have_no_edges() {
    for kind in KINDS {
        for size in SIZES {
            let k = EdgeKernel::new(kind, size).unwrap();
            for v in [0, 7, 17] {
                let labels = LabelMap::new(6, 11, vec![v; 66]).unwrap();
                assert!(extract_pseudo_edges(&labels, &k).values().iter().all(|&e| e == 0.0));
            }
        }
    }
}

#[test]
fn vertical_step_marks_adjacent_columns() {
    let labels = vertical_step(8, 10, 3, 11);
    for kind in [KernelKind::Sobel, KernelKind::Prewitt] {
        let k = EdgeKernel::new(kind, 3).unwrap();
        assert_eq!(edge_columns(&labels, &k), vec![4, 5], "{kind:?}");
        let e = extract_pseudo_edges(&labels, &k);
        for r in 0..8 {
            assert_eq!(e.get(r, 4), 1.0);
            assert_eq!(e.get(r, 5), 1.0);
        }
    }
    // wider kernels reach size/2 columns to either side
    for size in [5, 7] {
        let k = EdgeKernel::new(KernelKind::Sobel, size).unwrap();
        let h = size / 2;
        assert_eq!(edge_columns(&labels, &k), (5 - h..5 + h).collect::<Vec<_>>());
    }
    let lap = EdgeKernel::new(KernelKind::Laplacian, 3).unwrap();
    assert_eq!(edge_columns(&labels, &lap), vec![4, 5]);
}

#[test]
fn three_label_windows_can_cancel() {
    // Sobel x: right column 1+2+1 = 4, left column 2+0+2 = 4. y: rows equal.
    let labels = LabelMap::new(3, 3, vec![2, 0, 1, 0, 0, 1, 2, 0, 1]).unwrap();
    let k = EdgeKernel::sobel3();
    assert_eq!(extract_pseudo_edges(&labels, &k).get(1, 1), 0.0);
    let relabeled = LabelMap::new(3, 3, vec![2, 5, 1, 5, 5, 1, 2, 5, 1]).unwrap();
    assert_eq!(extract_pseudo_edges(&relabeled, &k).get(1, 1), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_label_maps_are_relabel_invariant(
        seed in any::<u64>(),
        a in 0u32..1000,
        b in 0u32..1000,
        kind in 0usize..3,
        size in 0usize..3,
    ) {
        prop_assume!(a != b);
        let k = EdgeKernel::new(KINDS[kind], SIZES[size]).unwrap();
        let mut rng = SplitMix64::new(seed);
        let base = random_labels(&mut rng, 12, 15, 2);
        let relabeled = LabelMap::new(12, 15, base.data().iter().map(|&v| if v == 0 { a } else { b }).collect()).unwrap();
        let (e0, e1) = (extract_pseudo_edges(&base, &k), extract_pseudo_edges(&relabeled, &k));
        prop_assert_eq!(e0.values(), e1.values());
    }

    #[test]
    fn edges_only_where_labels_vary(seed in any::<u64>(), kind in 0usize..3, size in 0usize..3) {
        let k = EdgeKernel::new(KINDS[kind], SIZES[size]).unwrap();
        let mut rng = SplitMix64::new(seed);
        let labels = random_labels(&mut rng, 10, 10, 3);
        let e = extract_pseudo_edges(&labels, &k);
        let h = SIZES[size] as isize / 2;
        for r in 0..10isize {
            for c in 0..10isize {
                if e.get(r as usize, c as usize) == 1.0 {
                    let centre = labels.get(r as usize, c as usize);
                    let varies = (-h..=h).any(|i| (-h..=h).any(|j| {
                        let rr = (r + i).clamp(0, 9) as usize;
                        let cc = (c + j).clamp(0, 9) as usize;
                        labels.get(rr, cc) != centre
                    }));
                    prop_assert!(varies);
                }
            }
        }
    }
}
