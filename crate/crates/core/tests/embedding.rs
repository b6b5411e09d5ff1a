use std::collections::{BTreeMap, BTreeSet};

use gcnboost_core::embed::{
    assemble_initial_features, next_step, node2vec_walks, project_rows, train_skipgram,
    transition_weights, walks_on, FeatureSources, InitScheme, ProjectionMethod, SkipGramParams,
    WalkParams,
};
use gcnboost_core::graph::{extend_kg, NeighborLists, NodeId, PseudoLabels};
use gcnboost_core::linalg::Matrix;
use gcnboost_core::seed::{derive_seed, rng};
use gcnboost_core::synth::{generate_synthetic, SyntheticSpec};
use gcnboost_core::{graph::build_kg, Dataset};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Two triangles joined by a bridge, plus a tail.
fn fixed_graph() -> NeighborLists {
    let pairs = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6), (5, 6), (6, 7), (7, 8), (8, 9), (1, 9)];
    let edges: BTreeSet<_> = pairs.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect();
    NeighborLists::from_edges(10, &edges)
}

/// Unnormalized second-order weights written out from the definition.
fn expected_distribution(lists: &NeighborLists, prev: usize, cur: usize, p: f64, q: f64) -> BTreeMap<usize, f64> {
    let mut w: BTreeMap<usize, f64> = lists
        .neighbors(cur)
        .iter()
        .map(|&x| {
            let weight = if x == prev {
                1.0 / p
            } else if lists.has_edge(x, prev) {
                1.0
            } else {
                1.0 / q
            };
            (x, weight)
        })
        .collect();
    let total: f64 = w.values().sum();
    w.values_mut().for_each(|v| *v /= total);
    w
}

#[test]
fn second_order_transitions_match_the_analytic_distribution() {
    let lists = fixed_graph();
    for (p, q) in [(1.0, 1.0), (0.25, 4.0), (4.0, 0.5)] {
        let params = WalkParams {
            return_bias: p,
            inout_bias: q,
            walk_length: 20,
            walks_per_node: 1000,
            seed: 9,
        };
        let corpus = walks_on(&lists, &params).unwrap();
        let mut counts: BTreeMap<(usize, usize), BTreeMap<usize, usize>> = BTreeMap::new();
        let mut steps = 0;
        for walk in &corpus.walks {
            for t in walk.windows(3) {
                *counts.entry((t[0].0, t[1].0)).or_default().entry(t[2].0).or_default() += 1;
                steps += 1;
            }
        }
        assert!(steps >= 10_000);
        for ((prev, cur), next) in &counts {
            let total: usize = next.values().sum();
            if total < 5000 {
                continue;
            }
            let expected = expected_distribution(&lists, *prev, *cur, p, q);
            let l1: f64 = expected
                .iter()
                .map(|(x, e)| (e - *next.get(x).unwrap_or(&0) as f64 / total as f64).abs())
                .sum();
            assert!(l1 < 0.05, "p={p} q={q} context ({prev},{cur}) L1 {l1}");
        }

        // Weights exposed by the walker agree with the definition.
        let w = transition_weights(&lists, Some(1), 2, &params);
        let total: f64 = w.iter().map(|&(_, v)| v).sum();
        let expected = expected_distribution(&lists, 1, 2, p, q);
        for (x, v) in w {
            assert!((v / total - expected[&x]).abs() < 1e-12);
        }
    }
}

#[test]
fn single_context_sampling() {
    let lists = fixed_graph();
    let params = WalkParams {
        return_bias: 0.5,
        inout_bias: 2.0,
        ..WalkParams::default()
    };
    let mut r = rng(17);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let n = 20_000;
    for _ in 0..n {
        *counts.entry(next_step(&lists, Some(3), 4, &params, &mut r).unwrap()).or_default() += 1;
    }
    let expected = expected_distribution(&lists, 3, 4, 0.5, 2.0);
    let l1: f64 = expected
        .iter()
        .map(|(x, e)| (e - *counts.get(x).unwrap_or(&0) as f64 / n as f64).abs())
        .sum();
    assert!(l1 < 0.05, "L1 {l1}");
}

#[test]
fn random_projection_roughly_preserves_distances() {
    let mut r = rng(5);
    let raw = Matrix::from_vec(50, 2048, (0..50 * 2048).map(|_| r.random_range(-1.0..1.0)).collect());
    let projected = project_rows(&raw, 128, ProjectionMethod::SeededRandomProjection, 11).unwrap();
    let dist = |m: &Matrix, i: usize, j: usize| -> f64 {
        m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let mut distortion = Vec::new();
    for i in 0..50 {
        for j in i + 1..50 {
            distortion.push((dist(&projected, i, j) / dist(&raw, i, j) - 1.0).abs());
        }
    }
    distortion.sort_by(f64::total_cmp);
    let median = distortion[distortion.len() / 2];
    assert!(median < 0.25, "median distortion {median}");
}

fn small_dataset() -> Dataset {
    let mut spec = SyntheticSpec::easy();
    spec.train = 30;
    spec.validation = 10;
    spec.test = 10;
    spec.feature_dim = 12;
    generate_synthetic(&spec, 4).unwrap()
}

fn small_params(seed: u64) -> (WalkParams, SkipGramParams) {
    (
        WalkParams { walk_length: 10, walks_per_node: 4, seed, ..WalkParams::default() },
        SkipGramParams { dim: 8, epochs: 1, seed, ..SkipGramParams::default() },
    )
}

#[test]
fn n2v_plus_random_without_test_nodes_is_the_embedding_table() {
    let ds = small_dataset();
    let arts: Vec<_> = ds.graph_artworks().cloned().collect();
    let kg = build_kg(&ds.categories, &arts, &ds.assignments, &ds.links).unwrap();
    let ekg = extend_kg(&kg, &[], &BTreeSet::new(), &PseudoLabels::new()).unwrap();
    let (walk, sg) = small_params(2);
    let table = train_skipgram(&node2vec_walks(&ekg, &walk).unwrap(), &sg).unwrap();
    let sources = FeatureSources {
        node2vec: Some(&table),
        visual: None,
        projection: ProjectionMethod::SeededRandomProjection,
    };
    let h0 = assemble_initial_features(&ekg, InitScheme::N2vPlusRandom, &sources, 8, 0).unwrap();
    for node in ekg.nodes() {
        assert_eq!(h0.as_matrix().row(node.id().0), table.get(node.id()).unwrap());
    }
}

#[test]
fn visual_rows_are_an_independent_projection() {
    let ds = small_dataset();
    let arts: Vec<_> = ds.graph_artworks().cloned().collect();
    let kg = build_kg(&ds.categories, &arts, &ds.assignments, &ds.links).unwrap();
    let test: Vec<_> = ds.test_artworks().cloned().collect();
    let used: BTreeSet<_> = [gcnboost_core::CategoryId(0)].into();
    let pseudo: PseudoLabels = ds
        .truth
        .iter()
        .filter(|a| a.category.0 == 0)
        .map(|a| (a.artwork.clone(), [(a.category, a.value.clone())].into()))
        .collect();
    let ekg = extend_kg(&kg, &test, &used, &pseudo).unwrap();
    let (walk, sg) = small_params(3);
    let table = train_skipgram(&node2vec_walks(&ekg, &walk).unwrap(), &sg).unwrap();
    let sources = FeatureSources {
        node2vec: Some(&table),
        visual: Some(&ds.features),
        projection: ProjectionMethod::SeededRandomProjection,
    };
    let seed = 77;
    let h0 = assemble_initial_features(&ekg, InitScheme::VisualPlusN2v, &sources, 8, seed).unwrap();

    let d = 8;
    let mut r = rng(derive_seed(seed, "projection"));
    let basis: Vec<f64> = (0..ds.features.cols() * d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            z / (d as f64).sqrt()
        })
        .collect();
    for node in ekg.nodes() {
        let row = h0.as_matrix().row(node.id().0);
        match node.as_artwork() {
            Some(a) => {
                let raw = ds.features.row(a.feature_ref.unwrap());
                for j in 0..d {
                    let v: f64 = (0..raw.len()).map(|k| raw[k] * basis[k * d + j]).sum();
                    assert!((row[j] - v).abs() < 1e-9);
                }
            }
            None => assert_eq!(row, table.get(node.id()).unwrap()),
        }
    }
}

#[test]
fn walks_follow_edges_and_are_seeded() {
    let lists = fixed_graph();
    let params = WalkParams { walk_length: 15, walks_per_node: 3, seed: 1, ..WalkParams::default() };
    let a = walks_on(&lists, &params).unwrap();
    assert_eq!(a, walks_on(&lists, &params).unwrap());
    assert_eq!(a.walks.len(), 30);
    for walk in &a.walks {
        assert_eq!(walk.len(), 15);
        assert!(walk.windows(2).all(|w| lists.has_edge(w[0].0, w[1].0)));
    }
    let b = walks_on(&lists, &WalkParams { seed: 2, ..params }).unwrap();
    assert_ne!(a, b);
}
