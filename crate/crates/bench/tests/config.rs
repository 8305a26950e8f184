use std::path::PathBuf;

use pnp_bench::config::{Auto, DenoiserChoice, ModelChoice};
use pnp_bench::{ExperimentConfig, PhantomKind};
use pnp_core::{Algorithm, Sampling, Shape};
use proptest::prelude::*;

#[test]
fn shipped_default_file_matches_default() {
    let text = include_str!("../configs/default.conf");
    let cfg = ExperimentConfig::parse(text).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    let positive = || prop_oneof![0.001f64..1e3, Just(1.0), (1u32..1000).prop_map(f64::from)];
    let auto = move || prop_oneof![Just(Auto::Auto), positive().prop_map(Auto::Value)];
    let problem = (
        prop_oneof![Just(ModelChoice::GaussianCs), Just(ModelChoice::Blur)],
        prop_oneof![
            (1usize..500).prop_map(Shape::Flat),
            (1usize..40, 1usize..40).prop_map(|(h, w)| Shape::Grid { height: h, width: w })
        ],
        1usize..300,
        1usize..60,
        0.0f64..1.0,
        prop::sample::select(PhantomKind::ALL.to_vec()),
        0.001f64..=1.0,
        1usize..20,
        positive(),
        0usize..5,
    );
    let rest = (
        prop::sample::select(vec![
            DenoiserChoice::Identity,
            DenoiserChoice::SoftThreshold,
            DenoiserChoice::SoftThresholdDct,
            DenoiserChoice::GaussianSmooth,
        ]),
        0.0f64..10.0,
        auto(),
        auto(),
        1usize..60,
        1usize..1_000_000,
        prop_oneof![Just(Sampling::Uniform), Just(Sampling::Cyclic)],
        prop::sample::subsequence(Algorithm::ALL.to_vec(), 0..=4).prop_shuffle(),
        prop::collection::vec(positive(), 0..4),
        prop::collection::vec(any::<u64>(), 0..6),
        "[a-z][a-z0-9_/.-]{0,20}",
        any::<bool>(),
    );
    (problem, rest).prop_map(|(p, r)| {
        let mut c = ExperimentConfig::default();
        c.problem.model = p.0;
        c.problem.shape = p.1;
        c.problem.m = p.2;
        c.problem.k = p.3;
        c.problem.noise_sigma = p.4;
        c.problem.phantom = p.5;
        c.problem.sparsity = p.6;
        c.problem.block = p.7;
        c.problem.blur_sigma = p.8;
        c.problem.blur_radius = p.9;
        c.denoiser.kind = r.0;
        c.denoiser.sigma = r.1;
        c.solver.gamma = r.2;
        c.solver.admm_rho = r.3;
        c.solver.minibatch = r.4;
        c.solver.max_iters = r.5;
        c.solver.sampling = r.6;
        c.experiment.algorithms = r.7;
        c.experiment.budgets = r.8;
        c.experiment.seeds = r.9;
        c.experiment.output = PathBuf::from(r.10);
        c.experiment.timing = r.11;
        c
    })
}

proptest! {
    #[test]
    fn parse_inverts_emit(cfg in arb_config()) {
        let text = cfg.emit();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }
}
