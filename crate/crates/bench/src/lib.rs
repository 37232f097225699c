//! Shared fixtures for the criterion benches.

use uqd_core::bne::{grid_for_targets, linspace, BneConfig, BneData, Nesting, SamplerConfig};
use uqd_core::simgen::{generate, Scenario, ScenarioKind};
use uqd_core::{Dataset, Kernel, Mat, PosteriorEnsemble, ProbVector, RngStream};

/// Seeded 1-d regression data from the smooth demo scenario.
pub fn gp_data(n: usize) -> Dataset {
    generate(&Scenario::new(ScenarioKind::Fig7GpDemo, n, 7))
}

pub fn gp_kernel() -> Kernel {
    Kernel::rbf(1.0, 0.8).expect("valid kernel")
}

/// `m` random members over `c` classes.
pub fn random_ensemble(c: usize, m: usize, seed: u64) -> PosteriorEnsemble {
    let mut rng = RngStream::new(seed, 0);
    let members = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..c).map(|_| rng.uniform() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            ProbVector::new(raw.iter().map(|v| v / s).collect()).expect("normalized")
        })
        .collect();
    PosteriorEnsemble::uniform(members).expect("non-empty")
}

/// Residual-bump data with the identity as the single base model.
pub fn bne_problem(n: usize, n_samples: usize) -> (BneConfig, BneData) {
    let d = generate(&Scenario::new(ScenarioKind::ResidualBump, n, 5));
    let xs = d.features().col_to_vec(0);
    let noise: f64 = 0.09;
    let cfg = BneConfig {
        prior_beta_variance: 4.0,
        kernel_delta: Kernel::rbf(1.0, 0.3).expect("valid kernel"),
        kernel_g: Kernel::rbf(0.1, 1.5).expect("valid kernel"),
        noise_variance: noise,
        y_grid: grid_for_targets(d.target(), noise.sqrt(), 4.0, 121),
        knots: Mat::column(&linspace(-2.0, 2.0, 8)).expect("finite"),
        warp_points: linspace(-3.0, 3.0, 7),
        sampler: SamplerConfig::new(n_samples, 3),
        nesting: Nesting::M2,
    };
    let data = BneData::new(
        d.features().clone(),
        d.target().to_vec(),
        Mat::column(&xs).expect("finite"),
    )
    .expect("consistent shapes");
    (cfg, data)
}
