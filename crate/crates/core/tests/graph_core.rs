use epictrl::graph::{classify_edges, fiedler_vector, karate, spectral_bisection, StaticGraph};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn two_triangles() -> StaticGraph {
    StaticGraph::new(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap()
}

fn brute_min_cut(g: &StaticGraph) -> (usize, Vec<u32>) {
    let n = g.n();
    let mut best = (usize::MAX, Vec::new());
    for mask in 1u32..(1 << n) - 1 {
        let cut = g.edges().iter().filter(|&&(i, j)| (mask >> i & 1) != (mask >> j & 1)).count();
        if cut < best.0 {
            best = (cut, vec![mask]);
        } else if cut == best.0 {
            best.1.push(mask);
        }
    }
    best
}

#[test]
fn bridged_triangles_split_at_bridge() {
    let g = two_triangles();
    let p = spectral_bisection(&g).unwrap();
    let (min_cut, masks) = brute_min_cut(&g);
    assert_eq!(p.cut_size(&g), min_cut);
    let mask: u32 = (0..6).filter(|&i| p.cluster_of[i] == 1).map(|i| 1 << i).sum();
    assert!(masks.contains(&mask));
    assert_eq!(p.members(1), vec![0, 1, 2]);
}

#[test]
fn path_fiedler_matches_dense_eigensolver() {
    let g = StaticGraph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let a = g.adjacency();
    let lap = DMatrix::from_diagonal(&a.column_sum()) - a;
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut oracle: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();
    if oracle[0] < 0.0 {
        oracle.iter_mut().for_each(|x| *x = -*x);
    }
    let ours = fiedler_vector(&g);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10, "{ours:?} vs {oracle:?}");
    }
    let p = spectral_bisection(&g).unwrap();
    assert_eq!(p.members(1), vec![0, 1]);
    assert_eq!(p.members(2), vec![2, 3]);
}

#[test]
fn karate_cut_matches_class_three() {
    let g = karate();
    assert_eq!(g.adjacency().sum(), 156.0);
    let p = spectral_bisection(&g).unwrap();
    let c = classify_edges(&g, &p).unwrap();
    assert_eq!(p.cut_size(&g), c.count(3));
    assert_eq!(c.count(1) + c.count(2) + c.count(3), 78);
    assert!(!p.members(1).is_empty() && !p.members(2).is_empty());
}

#[test]
fn single_cross_edge_and_inner_triangle() {
    let g = StaticGraph::new(2, [(0, 1)]).unwrap();
    let p = epictrl::graph::Partition { cluster_of: vec![1, 2] };
    assert_eq!(classify_edges(&g, &p).unwrap().class_of, vec![3]);
    let tri = StaticGraph::new(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let p = epictrl::graph::Partition {
        cluster_of: vec![1, 1, 1, 2],
    };
    assert_eq!(classify_edges(&tri, &p).unwrap().class_of, vec![1, 1, 1]);
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn random_graph() -> impl Strategy<Value = StaticGraph> {
    (2usize..12).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            StaticGraph::new(n, edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn adjacency_symmetric_zero_diagonal(g in random_graph()) {
        let a = g.adjacency();
        prop_assert_eq!(&a, &a.transpose());
        prop_assert!(a.diagonal().iter().all(|&x| x == 0.0));
        prop_assert_eq!(a.sum(), 2.0 * g.edge_count() as f64);
    }

    #[test]
    fn classes_partition_edges(g in random_graph(), labels in proptest::collection::vec(1u8..=2, 12)) {
        let p = epictrl::graph::Partition { cluster_of: labels[..g.n()].to_vec() };
        let c = classify_edges(&g, &p).unwrap();
        prop_assert_eq!(c.count(1) + c.count(2) + c.count(3), g.edge_count());
        for (k, &(i, j)) in g.edges().iter().enumerate() {
            prop_assert_eq!(c.class_of[k] == 3, p.cluster_of[i] != p.cluster_of[j]);
        }
    }

    #[test]
    fn karate_bisection_relabel_invariant(perm in permutation(34)) {
        let g = karate();
        let base = spectral_bisection(&g).unwrap();
        let relabelled = spectral_bisection(&g.permuted(&perm).unwrap()).unwrap();
        let same = (0..34).all(|i| relabelled.cluster_of[perm[i]] == base.cluster_of[i]);
        let swapped = (0..34).all(|i| relabelled.cluster_of[perm[i]] != base.cluster_of[i]);
        prop_assert!(same || swapped);
    }
}
