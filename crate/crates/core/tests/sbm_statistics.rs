use crsp::datasets::{block_assignment, generate_sbm, sbm_views, SbmParams};

fn params(seed: u64, m: usize) -> SbmParams {
    SbmParams {
        n: 500,
        k: 3,
        c: 10.0,
        lambda: 0.9,
        m,
        seed,
    }
}

#[derive(Default)]
struct Tally {
    trials: f64,
    hits: f64,
}

impl Tally {
    fn assert_matches(&self, p: f64, what: &str) {
        let freq = self.hits / self.trials;
        let se = (p * (1.0 - p) / self.trials).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "{what}: frequency {freq} vs {p} (se {se})");
    }
}

#[test]
fn edge_frequencies_match_block_probabilities() {
    let blocks = block_assignment(500, 3);
    let (mut intra, mut inter) = (Tally::default(), Tally::default());
    for seed in 0..20 {
        let (views, _) = sbm_views(&params(seed, 1)).unwrap();
        let w = views[0].weights();
        for i in 0..500 {
            for j in (i + 1)..500 {
                let tally = if blocks[i] == blocks[j] { &mut intra } else { &mut inter };
                tally.trials += 1.0;
                tally.hits += w[(i, j)];
            }
        }
    }
    intra.assert_matches(10.0 / 500.0, "intra");
    inter.assert_matches(10.0 * 0.1 / 500.0, "inter");
}

#[test]
fn views_are_independent() {
    // joint edge frequency in views 0 and 1 against the product of marginals
    let blocks = block_assignment(500, 3);
    let p = 10.0 / 500.0;
    let mut joint = Tally::default();
    for seed in 0..20 {
        let (views, _) = sbm_views(&params(seed, 2)).unwrap();
        let (a, b) = (views[0].weights(), views[1].weights());
        for i in 0..500 {
            for j in (i + 1)..500 {
                if blocks[i] == blocks[j] {
                    joint.trials += 1.0;
                    joint.hits += a[(i, j)] * b[(i, j)];
                }
            }
        }
    }
    joint.assert_matches(p * p, "joint intra");
}

#[test]
fn adding_views_keeps_earlier_views() {
    let (two, _) = sbm_views(&params(3, 2)).unwrap();
    let (four, _) = sbm_views(&params(3, 4)).unwrap();
    assert_eq!(two[..], four[..2]);
}

#[test]
fn generation_is_deterministic_and_culled() {
    let a = generate_sbm(&params(11, 3)).unwrap();
    let b = generate_sbm(&params(11, 3)).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.kept, b.kept);
    assert!(a.graph.ensure_valid().is_ok());
    assert_eq!(a.labels.len(), a.graph.n());
}

#[test]
fn full_separation_has_no_inter_block_edges() {
    let mut p = params(5, 2);
    p.lambda = 1.0;
    let blocks = block_assignment(500, 3);
    let (views, _) = sbm_views(&p).unwrap();
    for view in &views {
        let w = view.weights();
        for i in 0..500 {
            for j in 0..500 {
                if blocks[i] != blocks[j] {
                    assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
    }
}
