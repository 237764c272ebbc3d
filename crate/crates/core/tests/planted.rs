use contrarian::graph::top_k_hubs;
use contrarian::layout::{compute_layout, LayoutConfig};
use contrarian::partition::{partition, SpectralConfig};
use contrarian::polarimeter::{Polarization, SolverConfig};
use contrarian::{synth_polarized_graph, HubSet, Side, SideAssignment};

const N: usize = 200;
const P_IN: f64 = 0.3;
const P_OUT: f64 = 0.01;
const SEED: u64 = 7;

fn agreement(found: &SideAssignment, planted: &SideAssignment) -> f64 {
    let same = planted
        .iter()
        .filter(|(u, s)| found.side_of(u.as_str()) == Some(*s))
        .count();
    let best = same.max(planted.len() - same);
    best as f64 / planted.len() as f64
}

#[test]
fn cross_block_edges_follow_the_binomial() {
    let (g, planted) = synth_polarized_graph(N, P_IN, P_OUT, SEED).unwrap();
    let cross = g
        .edges()
        .filter(|&(s, t, _)| planted.side_of(g.user(s).as_str()) != planted.side_of(g.user(t).as_str()))
        .count() as f64;
    let pairs = (N / 2 * N / 2) as f64;
    let mean = pairs * P_OUT;
    let sd = (pairs * P_OUT * (1.0 - P_OUT)).sqrt();
    assert!(
        (cross - mean).abs() <= 3.0 * sd,
        "cross edges {cross}, expected {mean} ± {}",
        3.0 * sd
    );

    let within = g.edge_count() as f64 - cross;
    let within_pairs = 2.0 * ((N / 2) * (N / 2 - 1) / 2) as f64;
    let sd_in = (within_pairs * P_IN * (1.0 - P_IN)).sqrt();
    assert!((within - within_pairs * P_IN).abs() <= 3.0 * sd_in);
}

#[test]
fn spectral_split_recovers_planted_blocks() {
    let (g, planted) = synth_polarized_graph(N, P_IN, P_OUT, SEED).unwrap();
    assert!(g.is_connected());
    for seed in 0..5 {
        let found = partition::<f64>(
            &g,
            &SpectralConfig {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let a = agreement(&found, &planted);
        assert!(a >= 0.95, "seed {seed}: agreement {a}");
    }
}

#[test]
fn polarization_signs_separate_blocks() {
    let (g, planted) = synth_polarized_graph(N, P_IN, P_OUT, SEED).unwrap();
    let (hx, hy) = top_k_hubs(&g, &planted, 10).unwrap();
    let pol = Polarization::<f64>::compute(&g, &hx, &hy, &SolverConfig::default()).unwrap();
    for side in [Side::X, Side::Y] {
        let members: Vec<_> = planted.members(side).collect();
        let negative = members
            .iter()
            .filter(|u| pol.profile.rho(u.as_str()).unwrap() < 0.0)
            .count() as f64;
        let frac = negative / members.len() as f64;
        // side X is closer to its own hubs, so its percentile difference is negative
        match side {
            Side::X => assert!(frac >= 0.95, "block X negative fraction {frac}"),
            Side::Y => assert!(frac <= 0.05, "block Y negative fraction {frac}"),
        }
    }

    let swapped = Polarization::<f64>::compute(
        &g,
        &HubSet {
            side: Side::X,
            members: hy.members.clone(),
        },
        &HubSet {
            side: Side::Y,
            members: hx.members.clone(),
        },
        &SolverConfig::default(),
    )
    .unwrap();
    for (u, p) in pol.profile.iter() {
        assert_eq!(swapped.profile.rho(u.as_str()).unwrap(), -p.rho);
    }
}

#[test]
fn layout_separates_blocks() {
    let (g, planted) = synth_polarized_graph(N, P_IN, P_OUT, SEED).unwrap();
    for seed in 0..5 {
        let layout = compute_layout::<f64>(
            &g,
            &LayoutConfig {
                seed,
                ..Default::default()
            },
        );
        let mut centroid = [[0.0; 2]; 2];
        let mut count = [0usize; 2];
        for (u, p) in layout.iter() {
            let b = planted.side_of(u.as_str()).unwrap() as usize;
            centroid[b][0] += p[0];
            centroid[b][1] += p[1];
            count[b] += 1;
        }
        for b in 0..2 {
            centroid[b][0] /= count[b] as f64;
            centroid[b][1] /= count[b] as f64;
        }
        let spread: f64 = layout
            .iter()
            .map(|(u, p)| {
                let c = centroid[planted.side_of(u.as_str()).unwrap() as usize];
                ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
            })
            .sum::<f64>()
            / layout.len() as f64;
        let between = ((centroid[0][0] - centroid[1][0]).powi(2) + (centroid[0][1] - centroid[1][1]).powi(2)).sqrt();
        assert!(
            between > spread,
            "seed {seed}: centroid distance {between} vs spread {spread}"
        );
    }
}

#[test]
fn synthetic_dataset_end_to_end() {
    use contrarian::recommend::AggregationConfig;
    use contrarian::{
        analyze, recommend, synth_dataset, AnalysisConfig, FactorWeights, RuleBasedExtractor, SynthConfig,
    };

    let data = synth_dataset(&SynthConfig::default()).unwrap();
    let a = analyze::<f64>(
        &data.graph,
        &data.shares,
        &data.texts,
        None,
        &RuleBasedExtractor,
        None,
        &AnalysisConfig::default(),
    )
    .unwrap();
    assert_eq!(a.graph.len(), N);
    assert_eq!(a.excluded.len(), 3);
    assert!(!a.items.excluded.is_empty(), "lurker-only items are dropped");
    assert!(agreement(&a.sides, &data.planted) >= 0.95);

    let lists = a.all_factor_lists().unwrap();
    assert_eq!(lists.len(), N);
    let with_l1 = lists.iter().filter(|l| !l.lists[0].is_empty()).count();
    assert!(with_l1 >= N - 20, "only {with_l1} users have an L1 list");

    let w = FactorWeights::<f64>::default();
    let cfg = AggregationConfig::default();
    for l in lists.iter().take(20) {
        let rec = recommend(l, &w, 3, &cfg, &a.shares).unwrap();
        assert_eq!(rec.items.len(), 3);
    }
}
