//! Data generation for the two benchmark designs, a seeded replication
//! engine, and size/power estimation.
//!
//! Replications are independent work units: replication `r` derives its
//! own RNG from a counter-based split of the master seed, so results are
//! bit-identical for a fixed `(model, reps, seed)` regardless of how many
//! worker threads execute them.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{centering, dimension_ratios, CenteringTerms, DimensionRatios, MomentParams};
use crate::error::{Error, Result};
use crate::hn;
use crate::mltest::{ml_statistic, p_value, standardize, zh_statistic, Tail, TestConfig, TestKind};
use crate::spectral::{compute_moments, fisher_and_hotelling, SampleSet};

/// Entry distribution of the standardized variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    /// Gamma with shape 4 and rate 2, shifted by -2: mean 0, variance 1,
    /// fourth cumulant 3/2.
    Gamma42,
    /// Standard normal: fourth cumulant 0.
    Gaussian,
}

impl EntryDistribution {
    /// The true fourth cumulant of the standardized entries.
    pub fn beta_true(self) -> f64 {
        match self {
            EntryDistribution::Gamma42 => 1.5,
            EntryDistribution::Gaussian => 0.0,
        }
    }
}

/// The two benchmark designs.
///
/// Model I is a covariance-scaling alternative: common zero means,
/// `Sigma2 = diag(p^2, 1, .., 1)` and `Sigma1 = (1 + a/n1) Sigma2`
/// (`a = 0` is the null). Model II is a mean-shift alternative with equal
/// covariances `diag(p^2, 1, .., 1)` and means `(1, p, .., p)` versus
/// `(1, p+1, .., p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModelKind {
    ModelI { a: f64 },
    ModelII,
}

/// A fully specified simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationModel {
    pub kind: ModelKind,
    /// Degrees of freedom of sample 1; the sample has `n1 + 1` observations.
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub distribution: EntryDistribution,
}

impl SimulationModel {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidConfig {
                msg: format!(
                    "degrees of freedom must be at least 2, got n1 = {}, n2 = {}",
                    self.n1, self.n2
                ),
            });
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig {
                msg: "dimension p must be at least 1".into(),
            });
        }
        if self.p >= self.n1 + self.n2 {
            return Err(Error::Dimension {
                p: self.p,
                n: self.n1 + self.n2,
            });
        }
        if let ModelKind::ModelI { a } = self.kind {
            if 1.0 + a / self.n1 as f64 <= 0.0 {
                return Err(Error::InvalidConfig {
                    msg: format!("Model I scale 1 + a/n1 must be positive, got a = {a}"),
                });
            }
        }
        Ok(())
    }

    pub fn beta_true(&self) -> f64 {
        self.distribution.beta_true()
    }

    /// The covariance-scaling parameter, when the model has one.
    pub fn a(&self) -> Option<f64> {
        match self.kind {
            ModelKind::ModelI { a } => Some(a),
            ModelKind::ModelII => None,
        }
    }
}

/// Counter-based seed split: derives the seed of work unit `index` from a
/// master seed. SplitMix64 finalizer over a golden-ratio stride.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x243F_6A88_85A3_08D3);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Infinite stream of i.i.d. draws from the standardized Gamma entry
/// distribution (mean 0, variance 1, fourth cumulant 3/2), deterministic
/// in the seed.
pub fn standardized_gamma_stream(seed: u64) -> impl Iterator<Item = f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(4.0, 0.5).expect("valid shape/scale");
    std::iter::from_fn(move || Some(gamma.sample(&mut rng) - 2.0))
}

/// Generates one pair of samples from the model; `N_t = n_t + 1`
/// observations each so the configured sizes are degrees of freedom.
pub fn generate_pair(model: &SimulationModel, rep_seed: u64) -> Result<(SampleSet, SampleSet)> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    let p = model.p;
    // Sigma^(1/2) diagonals and mean vectors for both samples.
    let mut sig1 = vec![1.0; p];
    let mut sig2 = vec![1.0; p];
    sig1[0] = p as f64;
    sig2[0] = p as f64;
    let mut mu1 = vec![0.0; p];
    let mut mu2 = vec![0.0; p];
    match model.kind {
        ModelKind::ModelI { a } => {
            let scale = (1.0 + a / model.n1 as f64).sqrt();
            for v in sig1.iter_mut() {
                *v *= scale;
            }
        }
        ModelKind::ModelII => {
            mu1[0] = 1.0;
            mu2[0] = 1.0;
            for j in 1..p {
                mu1[j] = p as f64;
                mu2[j] = p as f64 + 1.0;
            }
        }
    }
    let gamma = Gamma::new(4.0, 0.5).expect("valid shape/scale");
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        match model.distribution {
            EntryDistribution::Gamma42 => gamma.sample(rng) - 2.0,
            EntryDistribution::Gaussian => StandardNormal.sample(rng),
        }
    };
    let fill = |rng: &mut ChaCha8Rng, n_obs: usize, sig: &[f64], mu: &[f64]| {
        let mut m = DMatrix::zeros(n_obs, p);
        for i in 0..n_obs {
            for j in 0..p {
                m[(i, j)] = draw(rng) * sig[j] + mu[j];
            }
        }
        m
    };
    let x1 = fill(&mut rng, model.n1 + 1, &sig1, &mu1);
    let x2 = fill(&mut rng, model.n2 + 1, &sig2, &mu2);
    Ok((
        SampleSet::new(x1, "sample1")?,
        SampleSet::new(x2, "sample2")?,
    ))
}

/// Which tests a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestSelection {
    pub ml: bool,
    pub hn: bool,
}

impl TestSelection {
    pub fn both() -> Self {
        Self { ml: true, hn: true }
    }
    pub fn ml_only() -> Self {
        Self { ml: true, hn: false }
    }
    pub fn hn_only() -> Self {
        Self { ml: false, hn: true }
    }
}

/// Aggregated outcome of a replicated scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub rejection_rate_ml: Option<f64>,
    pub rejection_rate_hn: Option<f64>,
    /// Standardized scores of the likelihood-ratio test, one per
    /// replication in replication order; present when the ML test ran.
    pub z_scores: Option<Vec<f64>>,
    pub replications: usize,
    pub seed: u64,
    /// Wall-clock duration; diagnostic only, never part of deterministic
    /// output files.
    pub runtime_ms: u64,
}

struct RepOutcome {
    z: f64,
    ml_reject: bool,
    hn_reject: bool,
}

/// Runs `reps` independent replications of the scenario and aggregates
/// rejection rates. Fourth cumulants are supplied as known, equal to the
/// entry distribution's true value. The result is identical for a fixed
/// `(model, reps, seed, cfg)` no matter how many rayon workers run it.
pub fn run_replications(
    model: &SimulationModel,
    reps: usize,
    seed: u64,
    cfg: &TestConfig,
    tests: TestSelection,
) -> Result<ScenarioResult> {
    model.validate()?;
    cfg.validate()?;
    if reps == 0 {
        return Err(Error::InvalidConfig {
            msg: "reps must be at least 1".into(),
        });
    }
    if !tests.ml && !tests.hn {
        return Err(Error::InvalidConfig {
            msg: "at least one test must be selected".into(),
        });
    }
    let started = std::time::Instant::now();
    // The calibration constants are shared by every replication.
    let beta = model.beta_true();
    let betas = MomentParams::known(beta, beta)?;
    let ratios = dimension_ratios(model.n1, model.n2, model.p)?;
    let cent = centering(&ratios, &betas)?;

    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            run_once(model, split_seed(seed, r as u64), cfg, tests, &ratios, &cent).map_err(
                |e| Error::Replication {
                    rep: r,
                    rep_seed: split_seed(seed, r as u64),
                    source: Box::new(e),
                },
            )
        })
        .collect();

    let mut ml_rejects = 0usize;
    let mut hn_rejects = 0usize;
    let mut z_scores = Vec::with_capacity(if tests.ml { reps } else { 0 });
    for outcome in outcomes {
        let o = outcome?;
        if tests.ml {
            z_scores.push(o.z);
            ml_rejects += o.ml_reject as usize;
        }
        if tests.hn {
            hn_rejects += o.hn_reject as usize;
        }
    }
    Ok(ScenarioResult {
        rejection_rate_ml: tests.ml.then(|| ml_rejects as f64 / reps as f64),
        rejection_rate_hn: tests.hn.then(|| hn_rejects as f64 / reps as f64),
        z_scores: tests.ml.then_some(z_scores),
        replications: reps,
        seed,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

fn run_once(
    model: &SimulationModel,
    rep_seed: u64,
    cfg: &TestConfig,
    tests: TestSelection,
    ratios: &DimensionRatios,
    cent: &CenteringTerms,
) -> Result<RepOutcome> {
    let (s1, s2) = generate_pair(model, rep_seed)?;
    let m1 = compute_moments(&s1)?;
    let m2 = compute_moments(&s2)?;
    let mut out = RepOutcome {
        z: f64::NAN,
        ml_reject: false,
        hn_reject: false,
    };
    if tests.ml {
        let (spectrum, quad) = fisher_and_hotelling(&m1, &m2)?;
        let zh = zh_statistic(&spectrum, ratios)?;
        let l = ml_statistic(zh, &quad);
        let (z, _) = standardize(l, cent, ratios)?;
        out.z = z;
        out.ml_reject = p_value(z, cfg.tail) < cfg.alpha;
    }
    if tests.hn {
        let ing = hn::ingredients_from_moments(&m1, &m2)?;
        let report = hn::report_from_ingredients(ing, cfg);
        out.hn_reject = report.reject;
    }
    Ok(out)
}

/// The three published reference tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    /// Empirical sizes: Model I with `a = 0` over the 16-cell grid.
    T1,
    /// Empirical powers: Model I over the grid with four values of `a` per cell.
    T2,
    /// Empirical powers: Model II over the 16-cell grid.
    T3,
}

/// Size triples `(n1, n2, p)` spanning all four ratio regimes
/// (`y1 >< 1` crossed with `y2 >< 1`), four scales each.
pub const SIZE_GRID: [[(usize, usize, usize); 4]; 4] = [
    [(25, 35, 40), (50, 70, 80), (100, 140, 160), (200, 280, 320)],
    [(25, 35, 30), (50, 70, 60), (100, 140, 120), (200, 280, 240)],
    [(35, 25, 30), (70, 50, 60), (140, 100, 120), (280, 200, 240)],
    [(25, 35, 20), (50, 70, 40), (100, 140, 80), (200, 280, 160)],
];

/// Scale factors for the covariance alternative: the first three regimes
/// use small `a`, the dimension-deficient-free regime uses a coarser grid.
pub const T2_A_VALUES: [[f64; 4]; 4] = [
    [5.0, 10.0, 15.0, 20.0],
    [5.0, 10.0, 15.0, 20.0],
    [5.0, 10.0, 15.0, 20.0],
    [20.0, 40.0, 60.0, 80.0],
];

/// One scenario cell of a reference table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellSpec {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub a: Option<f64>,
    pub model: &'static str,
}

impl TableId {
    /// The cells of the table, in the published row order (regimes top to
    /// bottom, sizes left to right, then `a` values where applicable).
    pub fn cells(self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        match self {
            TableId::T1 => {
                for regime in SIZE_GRID.iter() {
                    for &(n1, n2, p) in regime {
                        cells.push(CellSpec {
                            n1,
                            n2,
                            p,
                            a: Some(0.0),
                            model: "I",
                        });
                    }
                }
            }
            TableId::T2 => {
                for (regime, a_values) in SIZE_GRID.iter().zip(T2_A_VALUES.iter()) {
                    for &(n1, n2, p) in regime {
                        for &a in a_values {
                            cells.push(CellSpec {
                                n1,
                                n2,
                                p,
                                a: Some(a),
                                model: "I",
                            });
                        }
                    }
                }
            }
            TableId::T3 => {
                for regime in SIZE_GRID.iter() {
                    for &(n1, n2, p) in regime {
                        cells.push(CellSpec {
                            n1,
                            n2,
                            p,
                            a: None,
                            model: "II",
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn index(self) -> u8 {
        match self {
            TableId::T1 => 1,
            TableId::T2 => 2,
            TableId::T3 => 3,
        }
    }
}

/// One emitted rate: a table cell crossed with a test.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub a: Option<f64>,
    pub test: TestKind,
    pub reps: usize,
    /// Per-cell seed derived from the master seed by cell index.
    pub seed: u64,
    pub rate: f64,
    /// Diagnostic only; excluded from deterministic outputs.
    pub runtime_ms: u64,
}

/// Reproduces a reference table: iterates the table's cell grid, runs both
/// tests on every cell, and emits one row per cell and test, keyed like
/// the published layout.
pub fn reproduce_table(
    table: TableId,
    reps: usize,
    seed: u64,
    cfg: &TestConfig,
    distribution: EntryDistribution,
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (idx, cell) in table.cells().into_iter().enumerate() {
        let model = SimulationModel {
            kind: match cell.model {
                "I" => ModelKind::ModelI {
                    a: cell.a.unwrap_or(0.0),
                },
                _ => ModelKind::ModelII,
            },
            n1: cell.n1,
            n2: cell.n2,
            p: cell.p,
            distribution,
        };
        let cell_seed = split_seed(seed, idx as u64);
        let result = run_replications(&model, reps, cell_seed, cfg, TestSelection::both())
            .map_err(|e| Error::InvalidConfig {
                msg: format!(
                    "table {} cell (n1={}, n2={}, p={}, a={:?}) failed: {e}",
                    table.index(),
                    cell.n1,
                    cell.n2,
                    cell.p,
                    cell.a
                ),
            })?;
        for (test, rate) in [
            (TestKind::Ml, result.rejection_rate_ml.unwrap()),
            (TestKind::Hn, result.rejection_rate_hn.unwrap()),
        ] {
            rows.push(TableRow {
                n1: cell.n1,
                n2: cell.n2,
                p: cell.p,
                a: cell.a,
                test,
                reps,
                seed: cell_seed,
                rate,
                runtime_ms: result.runtime_ms,
            });
        }
    }
    Ok(rows)
}

/// Null z-scores with distribution diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct NullHistogram {
    pub z_scores: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Sup distance between the empirical CDF of the scores and the
    /// standard normal CDF.
    pub sup_distance: f64,
}

/// Runs the null configuration (Model I, `a = 0`) and returns the
/// standardized scores for external plotting, together with their
/// empirical-CDF sup-distance to the standard normal.
pub fn null_histogram(
    n1: usize,
    n2: usize,
    p: usize,
    reps: usize,
    seed: u64,
    cfg: &TestConfig,
    distribution: EntryDistribution,
) -> Result<NullHistogram> {
    let model = SimulationModel {
        kind: ModelKind::ModelI { a: 0.0 },
        n1,
        n2,
        p,
        distribution,
    };
    let result = run_replications(&model, reps, seed, cfg, TestSelection::ml_only())?;
    let z = result.z_scores.expect("ml selected");
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let variance = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / z.len() as f64;
    let sup_distance = ks_distance_to_normal(&z);
    Ok(NullHistogram {
        z_scores: z,
        mean,
        variance,
        sup_distance,
    })
}

/// Kolmogorov–Smirnov sup distance between the empirical CDF of `values`
/// and the standard normal CDF.
pub fn ks_distance_to_normal(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, z) in sorted.iter().enumerate() {
        let phi = p_value(*z, Tail::Lower);
        d = d.max(phi - i as f64 / m).max((i + 1) as f64 / m - phi);
    }
    d
}
