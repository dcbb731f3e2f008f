//! The L2-norm-based simultaneous comparator test of Hyodo & Nishiyama
//! (2018): a mean-difference part and a covariance-difference part, each
//! standardized by an estimated null variance and combined as a sum of two
//! asymptotically independent standard normal components. Rejection is
//! one-sided upper.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mltest::{p_value, Tail, TestConfig, TestKind, TestReport};
use crate::spectral::{compute_moments, SampleMoments, SampleSet};

/// Ingredients of the comparator statistic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HnIngredients {
    /// Unbiased estimate of the squared Euclidean distance between means.
    pub delta2_hat: f64,
    /// Unbiased estimate of the squared Frobenius distance between covariances.
    pub frob2_hat: f64,
    /// Null variance estimate for the mean part.
    pub sigma10_2: f64,
    /// Null variance estimate for the covariance part.
    pub sigma20_2: f64,
    /// Per-sample unbiased Frobenius-norm estimates of `||Sigma_t||_F^2`.
    pub frobenius_hat: [f64; 2],
    /// Per-sample fourth-power terms `K_t`.
    pub k_term: [f64; 2],
    /// `tr(S1 S2)`.
    pub tr_s1_s2: f64,
}

/// Computes every ingredient of the comparator from the two samples.
///
/// Requires at least 4 observations per sample; the unbiased Frobenius
/// estimator divides by `N - 3`.
pub fn hn_ingredients(s1: &SampleSet, s2: &SampleSet) -> Result<HnIngredients> {
    if s1.dim() != s2.dim() {
        return Err(Error::ColumnMismatch {
            p1: s1.dim(),
            p2: s2.dim(),
        });
    }
    let m1 = compute_moments(s1)?;
    let m2 = compute_moments(s2)?;
    ingredients_from_moments(&m1, &m2)
}

pub(crate) fn ingredients_from_moments(
    m1: &SampleMoments,
    m2: &SampleMoments,
) -> Result<HnIngredients> {
    for m in [m1, m2] {
        if m.n_observations() < 4 {
            return Err(Error::SampleTooSmall {
                label: m.label().to_string(),
                rows: m.n_observations(),
                required: 4,
            });
        }
    }
    let (f1, k1) = frobenius_hat(m1);
    let (f2, k2) = frobenius_hat(m2);
    let (big_n1, big_n2) = (m1.n_observations() as f64, m2.n_observations() as f64);
    let tr_s1_s2 = m1.covariance.dot(&m2.covariance);
    let mean_diff = &m1.mean - &m2.mean;
    let delta2_hat =
        mean_diff.norm_squared() - m1.covariance.trace() / big_n1 - m2.covariance.trace() / big_n2;
    let frob2_hat = f1 + f2 - 2.0 * tr_s1_s2;
    let sigma10_2 = 2.0 * f1 / (big_n1 * big_n1)
        + 2.0 * f2 / (big_n2 * big_n2)
        + 4.0 * tr_s1_s2 / (big_n1 * big_n2);
    let sigma20_2 = 4.0 * f1 * f1 / (big_n1 * big_n1)
        + 4.0 * f2 * f2 / (big_n2 * big_n2)
        + 8.0 * tr_s1_s2 * tr_s1_s2 / (big_n1 * big_n2);
    for (name, v) in [("sigma10^2", sigma10_2), ("sigma20^2", sigma20_2)] {
        if !(v > 0.0) {
            return Err(Error::DegenerateVariance { name, value: v });
        }
    }
    Ok(HnIngredients {
        delta2_hat,
        frob2_hat,
        sigma10_2,
        sigma20_2,
        frobenius_hat: [f1, f2],
        k_term: [k1, k2],
        tr_s1_s2,
    })
}

// Unbiased estimate of ||Sigma||_F^2 and the fourth-power term K.
fn frobenius_hat(m: &SampleMoments) -> (f64, f64) {
    let big_n = m.n_observations() as f64;
    let k: f64 = m
        .centered
        .row_iter()
        .map(|r| {
            let sq = r.norm_squared();
            sq * sq
        })
        .sum::<f64>()
        / (big_n - 1.0);
    let tr_s = m.covariance.trace();
    let tr_s2 = m.covariance.dot(&m.covariance);
    let f = (big_n - 1.0) / (big_n * (big_n - 2.0) * (big_n - 3.0))
        * ((big_n - 1.0) * (big_n - 2.0) * tr_s2 + tr_s * tr_s - big_n * k);
    (f, k)
}

/// The comparator statistic and decision: `HN = delta2/sigma10 + frob2/sigma20`,
/// rejecting when `HN > sqrt(2) z_alpha`, i.e. `1 - Phi(HN / sqrt 2) < alpha`.
pub fn run_hn_test(s1: &SampleSet, s2: &SampleSet, cfg: &TestConfig) -> Result<TestReport> {
    cfg.validate()?;
    let ing = hn_ingredients(s1, s2)?;
    Ok(report_from_ingredients(ing, cfg))
}

pub(crate) fn report_from_ingredients(ing: HnIngredients, cfg: &TestConfig) -> TestReport {
    let stat = ing.delta2_hat / ing.sigma10_2.sqrt() + ing.frob2_hat / ing.sigma20_2.sqrt();
    let z = stat / std::f64::consts::SQRT_2;
    // Upper tail by construction, regardless of the configured tail for
    // the likelihood-ratio test.
    let p = p_value(-z, Tail::Lower);
    TestReport {
        test: TestKind::Hn,
        statistic: stat,
        z_score: z,
        p_value: p,
        reject: p < cfg.alpha,
        alpha: cfg.alpha,
        tail: cfg.tail,
        ml: None,
        hn: Some(ing),
        warnings: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sample(n: usize, p: usize, seed: u64, label: &str) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SampleSet::new(
            DMatrix::from_fn(n, p, |_, _| rng.gen::<f64>() * 2.0 - 1.0),
            label,
        )
        .unwrap()
    }

    /// Text-book evaluation with scalar loops only; no matrix algebra.
    fn scalar_oracle(x1: &SampleSet, x2: &SampleSet) -> HnIngredients {
        let oracle_one = |s: &SampleSet| {
            let x = s.observations();
            let (n, p) = (x.nrows(), x.ncols());
            let nf = n as f64;
            let mut mean = vec![0.0; p];
            for j in 0..p {
                for i in 0..n {
                    mean[j] += x[(i, j)];
                }
                mean[j] /= nf;
            }
            let mut s_mat = vec![vec![0.0; p]; p];
            for a in 0..p {
                for b in 0..p {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]);
                    }
                    s_mat[a][b] = acc / (nf - 1.0);
                }
            }
            let mut k = 0.0;
            for i in 0..n {
                let mut sq = 0.0;
                for j in 0..p {
                    sq += (x[(i, j)] - mean[j]) * (x[(i, j)] - mean[j]);
                }
                k += sq * sq;
            }
            k /= nf - 1.0;
            let mut tr_s = 0.0;
            let mut tr_s2 = 0.0;
            for a in 0..p {
                tr_s += s_mat[a][a];
                for b in 0..p {
                    tr_s2 += s_mat[a][b] * s_mat[b][a];
                }
            }
            let f = (nf - 1.0) / (nf * (nf - 2.0) * (nf - 3.0))
                * ((nf - 1.0) * (nf - 2.0) * tr_s2 + tr_s * tr_s - nf * k);
            (mean, s_mat, k, f, tr_s)
        };
        let (mean1, s1m, k1, f1, tr1) = oracle_one(x1);
        let (mean2, s2m, k2, f2, tr2) = oracle_one(x2);
        let p = mean1.len();
        let (n1, n2) = (
            x1.n_observations() as f64,
            x2.n_observations() as f64,
        );
        let mut d2 = 0.0;
        for j in 0..p {
            d2 += (mean1[j] - mean2[j]) * (mean1[j] - mean2[j]);
        }
        let mut tr12 = 0.0;
        for a in 0..p {
            for b in 0..p {
                tr12 += s1m[a][b] * s2m[b][a];
            }
        }
        HnIngredients {
            delta2_hat: d2 - tr1 / n1 - tr2 / n2,
            frob2_hat: f1 + f2 - 2.0 * tr12,
            sigma10_2: 2.0 * f1 / (n1 * n1) + 2.0 * f2 / (n2 * n2) + 4.0 * tr12 / (n1 * n2),
            sigma20_2: 4.0 * f1 * f1 / (n1 * n1)
                + 4.0 * f2 * f2 / (n2 * n2)
                + 8.0 * tr12 * tr12 / (n1 * n2),
            frobenius_hat: [f1, f2],
            k_term: [k1, k2],
            tr_s1_s2: tr12,
        }
    }

    fn assert_ingredients_match(a: &HnIngredients, b: &HnIngredients, tol: f64) {
        assert_relative_eq!(a.delta2_hat, b.delta2_hat, max_relative = tol, epsilon = tol);
        assert_relative_eq!(a.frob2_hat, b.frob2_hat, max_relative = tol, epsilon = tol);
        assert_relative_eq!(a.sigma10_2, b.sigma10_2, max_relative = tol);
        assert_relative_eq!(a.sigma20_2, b.sigma20_2, max_relative = tol);
        assert_relative_eq!(a.frobenius_hat[0], b.frobenius_hat[0], max_relative = tol);
        assert_relative_eq!(a.frobenius_hat[1], b.frobenius_hat[1], max_relative = tol);
        assert_relative_eq!(a.k_term[0], b.k_term[0], max_relative = tol);
        assert_relative_eq!(a.tr_s1_s2, b.tr_s1_s2, max_relative = tol);
    }

    #[test]
    fn identical_samples_match_scalar_oracle() {
        let s = random_sample(9, 4, 7, "s");
        let got = hn_ingredients(&s, &s).unwrap();
        let want = scalar_oracle(&s, &s);
        assert_ingredients_match(&got, &want, 1e-10);
        // With identical data the covariance part uses identical S, so the
        // Frobenius estimates coincide across samples.
        assert_eq!(got.frobenius_hat[0], got.frobenius_hat[1]);
    }

    #[test]
    fn univariate_arithmetic_case() {
        // Samples {0,2,4,6} and {1,3,5,7}: every quantity reduces to scalar
        // arithmetic. Frozen from an exact rational evaluation:
        // f_t = 104/3, tr(S1 S2) = 400/9, delta2 = -7/3,
        // sigma10^2 = 178/9, sigma20^2 = 128672/81.
        let s1 = SampleSet::from_rows(&[vec![0.0], vec![2.0], vec![4.0], vec![6.0]], "s1").unwrap();
        let s2 = SampleSet::from_rows(&[vec![1.0], vec![3.0], vec![5.0], vec![7.0]], "s2").unwrap();
        let got = hn_ingredients(&s1, &s2).unwrap();
        assert_relative_eq!(got.frobenius_hat[0], 104.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(got.frobenius_hat[1], 104.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(got.tr_s1_s2, 400.0 / 9.0, max_relative = 1e-13);
        assert_relative_eq!(got.delta2_hat, -7.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(got.frob2_hat, -176.0 / 9.0, max_relative = 1e-13);
        assert_relative_eq!(got.sigma10_2, 178.0 / 9.0, max_relative = 1e-13);
        assert_relative_eq!(got.sigma20_2, 128672.0 / 81.0, max_relative = 1e-13);
        let want = scalar_oracle(&s1, &s2);
        assert_ingredients_match(&got, &want, 1e-12);
    }

    #[test]
    fn random_instances_match_scalar_oracle() {
        for seed in 0..6 {
            let s1 = random_sample(5 + (seed as usize % 3) * 3, 1 + seed as usize % 5, seed, "s1");
            let s2 = random_sample(7, s1.dim(), 1000 + seed, "s2");
            let got = hn_ingredients(&s1, &s2).unwrap();
            let want = scalar_oracle(&s1, &s2);
            assert_ingredients_match(&got, &want, 1e-10);
        }
    }

    #[test]
    fn small_samples_are_rejected() {
        let s1 = random_sample(3, 2, 5, "s1");
        let s2 = random_sample(8, 2, 6, "s2");
        assert!(matches!(
            hn_ingredients(&s1, &s2),
            Err(Error::SampleTooSmall { required: 4, .. })
        ));
    }

    #[test]
    fn statistic_is_exactly_swap_invariant() {
        let s1 = random_sample(10, 3, 15, "s1");
        let s2 = random_sample(12, 3, 16, "s2");
        let cfg = TestConfig::default();
        let a = run_hn_test(&s1, &s2, &cfg).unwrap();
        let b = run_hn_test(&s2, &s1, &cfg).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn orthogonal_rotation_leaves_statistic_unchanged() {
        let s1 = random_sample(12, 4, 25, "s1");
        let s2 = random_sample(14, 4, 26, "s2");
        // Build an orthogonal Q from the QR of a random matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let m = DMatrix::from_fn(4, 4, |_, _| rng.gen::<f64>() - 0.5);
        let q = m.qr().q();
        let rotate = |s: &SampleSet| {
            SampleSet::new(s.observations() * q.transpose(), s.label()).unwrap()
        };
        let cfg = TestConfig::default();
        let a = run_hn_test(&s1, &s2, &cfg).unwrap();
        let b = run_hn_test(&rotate(&s1), &rotate(&s2), &cfg).unwrap();
        assert_relative_eq!(a.statistic, b.statistic, max_relative = 1e-8);
    }

    #[test]
    fn decision_matches_threshold_form() {
        // reject iff HN > sqrt(2) z_alpha.
        let s1 = random_sample(10, 5, 35, "s1");
        let s2 = random_sample(11, 5, 36, "s2");
        let cfg = TestConfig::default();
        let r = run_hn_test(&s1, &s2, &cfg).unwrap();
        let z_alpha = 1.6448536269514722;
        assert_eq!(
            r.reject,
            r.statistic > std::f64::consts::SQRT_2 * z_alpha,
        );
    }
}
