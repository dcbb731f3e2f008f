//! Sample moments, the Fisher-type matrix spectrum, and the pooled
//! quadratic form in the mean difference.
//!
//! For two samples with scatter matrices `A1` and `A2` the Fisher-type
//! matrix is `B = A1 (A1 + A2)^-1`. Its eigenvalues live in `[0, 1]`;
//! when `p` exceeds a sample's degrees of freedom the boundary picks up
//! structural eigenvalues (`p - n1` zeros, `p - n2` ones). Everything here
//! is computed through the symmetric-definite pencil `(A1, A1 + A2)`,
//! reduced by the Cholesky factor of the pooled scatter, so the spectrum
//! stays real and inside `[0, 1]` up to roundoff.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};

/// One population's observations: rows are observations, columns are variables.
#[derive(Debug, Clone)]
pub struct SampleSet {
    observations: DMatrix<f64>,
    label: String,
}

impl SampleSet {
    /// Validates shape and finiteness; `label` is used in error messages.
    pub fn new(observations: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if observations.nrows() < 2 {
            return Err(Error::DegenerateSample {
                label,
                rows: observations.nrows(),
            });
        }
        if observations.ncols() == 0 {
            return Err(Error::InvalidConfig {
                msg: format!("sample '{label}' has no columns; p >= 1 is required"),
            });
        }
        for j in 0..observations.ncols() {
            for i in 0..observations.nrows() {
                if !observations[(i, j)].is_finite() {
                    return Err(Error::NonFiniteInput { label, row: i, col: j });
                }
            }
        }
        Ok(Self { observations, label })
    }

    /// Builds a sample from row slices, checking rectangularity.
    pub fn from_rows(rows: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if rows.is_empty() {
            return Err(Error::DegenerateSample { label, rows: 0 });
        }
        let p = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::InvalidConfig {
                    msg: format!(
                        "sample '{label}' is ragged: row {i} has {} fields, expected {p}",
                        r.len()
                    ),
                });
            }
        }
        let m = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(m, label)
    }

    pub fn n_observations(&self) -> usize {
        self.observations.nrows()
    }

    pub fn dim(&self) -> usize {
        self.observations.ncols()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.observations
    }
}

/// First and second moments of one sample.
#[derive(Debug, Clone)]
pub struct SampleMoments {
    /// Column mean vector.
    pub mean: DVector<f64>,
    /// Centered cross-product matrix `A = sum_i (x_i - mean)(x_i - mean)'`.
    pub scatter: DMatrix<f64>,
    /// Degrees of freedom `n = N - 1`.
    pub df: usize,
    /// Sample covariance `S = A / n`.
    pub covariance: DMatrix<f64>,
    label: String,
    // Centered observations, kept so downstream spectral work can use the
    // low-rank Gram form when p exceeds the sample size.
    pub(crate) centered: DMatrix<f64>,
}

impl SampleMoments {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.scatter.nrows()
    }

    /// Number of observations `N = df + 1`.
    pub fn n_observations(&self) -> usize {
        self.df + 1
    }
}

/// Mean, scatter, degrees of freedom and covariance of a sample.
pub fn compute_moments(sample: &SampleSet) -> Result<SampleMoments> {
    let x = &sample.observations;
    let (n_obs, p) = (x.nrows(), x.ncols());
    let mean = DVector::from_fn(p, |j, _| x.column(j).sum() / n_obs as f64);
    let mut centered = x.clone();
    for j in 0..p {
        let m = mean[j];
        for i in 0..n_obs {
            centered[(i, j)] -= m;
        }
    }
    let mut scatter = centered.transpose() * &centered;
    symmetrize(&mut scatter);
    let df = n_obs - 1;
    let covariance = &scatter / df as f64;
    Ok(SampleMoments {
        mean,
        scatter,
        df,
        covariance,
        label: sample.label.clone(),
        centered,
    })
}

/// Spectrum of the Fisher-type matrix with clamped-boundary bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct FisherSpectrum {
    /// Eigenvalues strictly inside `(0, 1)` after clamping, ascending.
    pub interior: Vec<f64>,
    /// Multiplicity clamped to 0 (equals `max(p - n1, 0)` for data in general position).
    pub zero_count: usize,
    /// Multiplicity clamped to 1 (equals `max(p - n2, 0)`).
    pub one_count: usize,
    /// Threshold used to clamp the boundary.
    pub clamp_tolerance: f64,
}

impl FisherSpectrum {
    pub fn dim(&self) -> usize {
        self.interior.len() + self.zero_count + self.one_count
    }
}

/// Pooled-scatter quadratic form in the mean difference, with its
/// probability limit under the null for diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadraticTerm {
    /// `t_n = (n1 n2 / n) d' (A1 + A2)^-1 d`, `d = mean1 - mean2`.
    pub t_n: f64,
    /// `r_n / (1 - r_n)`.
    pub limit: f64,
}

/// Eigenvalues of `B = A1 (A1 + A2)^-1`, classified as zero / interior / one.
pub fn fisher_spectrum(m1: &SampleMoments, m2: &SampleMoments) -> Result<FisherSpectrum> {
    let (chol, _) = pooled_cholesky(m1, m2)?;
    spectrum_with(m1, m2, &chol)
}

/// The quadratic form `T_n`, solved through the pooled Cholesky factor.
pub fn hotelling_term(m1: &SampleMoments, m2: &SampleMoments) -> Result<QuadraticTerm> {
    let (chol, _) = pooled_cholesky(m1, m2)?;
    Ok(hotelling_with(m1, m2, &chol))
}

/// Computes both spectral pieces off one pooled factorization.
pub fn fisher_and_hotelling(
    m1: &SampleMoments,
    m2: &SampleMoments,
) -> Result<(FisherSpectrum, QuadraticTerm)> {
    let (chol, _) = pooled_cholesky(m1, m2)?;
    let spectrum = spectrum_with(m1, m2, &chol)?;
    let quad = hotelling_with(m1, m2, &chol);
    Ok((spectrum, quad))
}

fn pooled_cholesky(
    m1: &SampleMoments,
    m2: &SampleMoments,
) -> Result<(Cholesky<f64, Dyn>, usize)> {
    if m1.dim() != m2.dim() {
        return Err(Error::ColumnMismatch {
            p1: m1.dim(),
            p2: m2.dim(),
        });
    }
    let p = m1.dim();
    let n = m1.df + m2.df;
    if p >= n {
        return Err(Error::Dimension { p, n });
    }
    let pooled = &m1.scatter + &m2.scatter;
    let chol = Cholesky::new(pooled).ok_or(Error::IllConditioned)?;
    Ok((chol, p))
}

fn hotelling_with(m1: &SampleMoments, m2: &SampleMoments, chol: &Cholesky<f64, Dyn>) -> QuadraticTerm {
    let p = m1.dim();
    let (n1, n2) = (m1.df as f64, m2.df as f64);
    let n = n1 + n2;
    let mut d = &m1.mean - &m2.mean;
    // One triangular solve gives d' (L L')^-1 d = ||L^-1 d||^2.
    chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut d);
    let t_n = n1 * n2 / n * d.norm_squared();
    let r = p as f64 / n;
    QuadraticTerm {
        t_n,
        limit: r / (1.0 - r),
    }
}

fn spectrum_with(
    m1: &SampleMoments,
    m2: &SampleMoments,
    chol: &Cholesky<f64, Dyn>,
) -> Result<FisherSpectrum> {
    let p = m1.dim();
    let (big_n1, big_n2) = (m1.n_observations(), m2.n_observations());

    // Pick the smallest symmetric eigenproblem that carries the spectrum:
    // the p x p reduced pencil, or a sample's Gram matrix when p is larger
    // than that sample.
    let mut eigenvalues: Vec<f64> = if p <= big_n1.min(big_n2) {
        let mut w = m1.scatter.clone();
        chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut w);
        let mut wt = w.transpose();
        chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut wt);
        symmetrize(&mut wt);
        wt.symmetric_eigenvalues().iter().copied().collect()
    } else if big_n1 <= big_n2 {
        // Nonzero eigenvalues of B equal those of Y1 Y1' with Y1 = C1 L^-T;
        // the remaining p - N1 eigenvalues are structural zeros.
        let mut evs = gram_eigenvalues(&m1.centered, chol);
        evs.extend(std::iter::repeat(0.0).take(p - big_n1));
        evs
    } else {
        // Same trick on sample 2 yields the spectrum of I - B.
        let mut evs: Vec<f64> = gram_eigenvalues(&m2.centered, chol)
            .into_iter()
            .map(|w| 1.0 - w)
            .collect();
        evs.extend(std::iter::repeat(1.0).take(p - big_n2));
        evs
    };
    debug_assert_eq!(eigenvalues.len(), p);
    eigenvalues.sort_unstable_by(|a, b| a.total_cmp(b));
    classify(eigenvalues, m1.df, m2.df)
}

fn gram_eigenvalues(centered: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>) -> Vec<f64> {
    let mut yt = centered.transpose(); // p x N
    chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut yt);
    let mut g = yt.transpose() * &yt; // N x N
    symmetrize(&mut g);
    g.symmetric_eigenvalues().iter().copied().collect()
}

/// Clamp policy: eigenvalues within `tol` of a boundary are assigned to it,
/// with `tol = max(p * eps * max|lambda|, 1e-10)`. The boundary multiplicities
/// must then match the rank-forced counts exactly; a mismatch signals data
/// that violate the general-position assumption and is a hard error.
fn classify(eigenvalues: Vec<f64>, n1: usize, n2: usize) -> Result<FisherSpectrum> {
    let p = eigenvalues.len();
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = (p as f64 * f64::EPSILON * max_abs).max(1e-10);
    let (mut zeros, mut ones) = (0usize, 0usize);
    let mut interior = Vec::with_capacity(p);
    for &ev in &eigenvalues {
        if ev < -10.0 * tol || ev > 1.0 + 10.0 * tol {
            return Err(Error::EigenvalueRange {
                value: ev,
                tolerance: tol,
            });
        }
        if ev <= tol {
            zeros += 1;
        } else if ev >= 1.0 - tol {
            ones += 1;
        } else {
            interior.push(ev);
        }
    }
    let zero_expected = p.saturating_sub(n1);
    let one_expected = p.saturating_sub(n2);
    if zeros != zero_expected {
        return Err(Error::EigenvalueCount {
            boundary: "zero",
            observed: zeros,
            expected: zero_expected,
        });
    }
    if ones != one_expected {
        return Err(Error::EigenvalueCount {
            boundary: "one",
            observed: ones,
            expected: one_expected,
        });
    }
    Ok(FisherSpectrum {
        interior,
        zero_count: zeros,
        one_count: ones,
        clamp_tolerance: tol,
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
