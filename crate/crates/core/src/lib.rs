//! Simultaneous two-sample tests of mean vectors and covariance matrices
//! for high-dimensional data.
//!
//! The primary test combines the spectrum of the Fisher-type matrix
//! `B = A1 (A1 + A2)^-1` with a pooled quadratic form in the mean
//! difference into a single log-likelihood-ratio style statistic, then
//! standardizes it against a limiting normal law whose centering and
//! variance are closed-form functions of the dimension ratios `p/n1`,
//! `p/n2` and the entries' fourth cumulants. It is designed for the
//! regime where `p` is comparable to the sample sizes and may exceed
//! either of them, as long as `p < n1 + n2`.
//!
//! An L2-norm-based comparator test (Hyodo & Nishiyama, 2018) and a
//! deterministic Monte Carlo harness for size/power studies are included.
//!
//! ```
//! use meancov::{run_ml_test, MomentMode, SampleSet, TestConfig};
//! use nalgebra::DMatrix;
//! use rand::{Rng, SeedableRng};
//!
//! // Two small samples from the same population.
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, p: usize| {
//!     DMatrix::from_fn(n, p, |_, _| rng.gen::<f64>() - 0.5)
//! };
//! let s1 = SampleSet::new(draw(&mut rng, 40, 12), "sample1")?;
//! let s2 = SampleSet::new(draw(&mut rng, 50, 12), "sample2")?;
//!
//! let cfg = TestConfig {
//!     moment_mode: MomentMode::Estimate,
//!     ..TestConfig::default()
//! };
//! let report = run_ml_test(&s1, &s2, &cfg)?;
//! assert_eq!(report.reject, report.p_value < cfg.alpha);
//! # Ok::<(), meancov::Error>(())
//! ```

pub mod calibration;
pub mod error;
pub mod guide;
pub mod hn;
pub mod mltest;
pub mod sim;
pub mod spectral;

pub use calibration::{
    centering, dimension_ratios, ell, psi, u_term, v_term, CenteringTerms, DimensionRatios,
    MomentParams, MomentSource,
};
pub use error::{Error, Result};
pub use hn::{hn_ingredients, run_hn_test, HnIngredients};
pub use mltest::{
    estimate_fourth_cumulants, ml_statistic, p_value, run_ml_test, standardize, zh_statistic,
    MlDetail, MomentMode, Tail, TestConfig, TestKind, TestReport,
};
pub use sim::{
    generate_pair, ks_distance_to_normal, null_histogram, reproduce_table, run_replications,
    split_seed, standardized_gamma_stream, CellSpec, EntryDistribution, ModelKind, NullHistogram,
    ScenarioResult, SimulationModel, TableId, TableRow, TestSelection,
};
pub use spectral::{
    compute_moments, fisher_and_hotelling, fisher_spectrum, hotelling_term, FisherSpectrum,
    QuadraticTerm, SampleMoments, SampleSet,
};
