//! Dimension ratios and the deterministic centering constants of the
//! limiting null distribution.
//!
//! The standardization of the test statistic uses three constants built
//! from the ratios `y1 = p/n1`, `y2 = p/n2`: a per-dimension centering
//! `l_n`, an order-one correction `mu_n`, and a variance `nu_n^2`. Each
//! carries indicator terms that switch on only when a ratio exceeds 1,
//! i.e. when the corresponding sample is dimension-deficient and the
//! spectrum picks up boundary mass. All logarithms are natural.
//!
//! The helper functions [`ell`], [`u_term`], [`v_term`] and [`psi`]
//! recompute their weights from their own arguments (`c1 = yb/(ya+yb)`),
//! so that calling them with swapped arguments yields the mirrored term.
//! This convention is what makes the final statistic invariant under
//! exchanging the two samples.

use serde::Serialize;

use crate::error::{Error, Result};

/// Dimension-to-degrees-of-freedom ratios and derived quantities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DimensionRatios {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    /// `n1 + n2`.
    pub n: usize,
    /// `p / n1`.
    pub y1: f64,
    /// `p / n2`.
    pub y2: f64,
    /// `p / n`.
    pub r_n: f64,
    /// `sqrt(y1 + y2 - y1 y2)`, positive whenever `r_n < 1`.
    pub h: f64,
    /// `n1 / n`.
    pub c1: f64,
    /// `n2 / n`, stored as `1 - c1` so the pair sums to one exactly.
    pub c2: f64,
    pub y1_gt_1: bool,
    pub y2_gt_1: bool,
    /// Set when `min(|y1-1|, |y2-1|) < 0.05`; the variance inflates and
    /// the test becomes unstable near a unit ratio.
    pub near_unity: bool,
}

/// Near-unity instability warning threshold on `|y - 1|`.
pub const NEAR_UNITY_MARGIN: f64 = 0.05;

/// Computes all ratio quantities for degrees of freedom `n1`, `n2` and
/// dimension `p`.
///
/// Requires `n1, n2 >= 2`, `1 <= p < n1 + n2` and `p != n1`, `p != n2`
/// (a unit ratio breaks the limiting distribution).
pub fn dimension_ratios(n1: usize, n2: usize, p: usize) -> Result<DimensionRatios> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidConfig {
            msg: format!("degrees of freedom must be at least 2, got n1 = {n1}, n2 = {n2}"),
        });
    }
    if p == 0 {
        return Err(Error::InvalidConfig {
            msg: "dimension p must be at least 1".into(),
        });
    }
    let n = n1 + n2;
    if p >= n {
        return Err(Error::Dimension { p, n });
    }
    if p == n1 || p == n2 {
        return Err(Error::AssumptionViolation {
            what: format!("y = p/n equals 1 exactly (p = {p}, n1 = {n1}, n2 = {n2})"),
        });
    }
    let y1 = p as f64 / n1 as f64;
    let y2 = p as f64 / n2 as f64;
    let r_n = p as f64 / n as f64;
    let h2 = y1 + y2 - y1 * y2;
    let c1 = n1 as f64 / n as f64;
    let near_unity = (y1 - 1.0).abs().min((y2 - 1.0).abs()) < NEAR_UNITY_MARGIN;
    Ok(DimensionRatios {
        n1,
        n2,
        p,
        n,
        y1,
        y2,
        r_n,
        h: h2.sqrt(),
        c1,
        c2: 1.0 - c1,
        y1_gt_1: y1 > 1.0,
        y2_gt_1: y2 > 1.0,
        near_unity,
    })
}

/// Fourth cumulants `beta = E z^4 - 3` of the standardized entries.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentParams {
    pub beta1: f64,
    pub beta2: f64,
    pub source: MomentSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Known,
    Estimated,
}

impl MomentParams {
    /// Known cumulants; each must respect the kurtosis lower bound -2.
    pub fn known(beta1: f64, beta2: f64) -> Result<Self> {
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !b.is_finite() || b < -2.0 {
                return Err(Error::InvalidConfig {
                    msg: format!("{name} = {b} violates the kurtosis bound beta >= -2"),
                });
            }
        }
        Ok(Self {
            beta1,
            beta2,
            source: MomentSource::Known,
        })
    }

    pub(crate) fn estimated(beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            source: MomentSource::Estimated,
        }
    }

    /// The Gaussian case.
    pub fn gaussian() -> Self {
        Self {
            beta1: 0.0,
            beta2: 0.0,
            source: MomentSource::Known,
        }
    }
}

/// Centering and variance constants of the limiting null distribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CenteringTerms {
    pub l_n: f64,
    pub mu_n: f64,
    pub nu_n2: f64,
    pub nu_n: f64,
}

fn validate_pair(ya: f64, yb: f64) -> Result<()> {
    for y in [ya, yb] {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::AssumptionViolation {
                what: format!("ratio argument {y} must be positive and finite"),
            });
        }
        if y == 1.0 {
            return Err(Error::AssumptionViolation {
                what: "ratio argument equals 1 exactly".into(),
            });
        }
    }
    Ok(())
}

fn h2_of(ya: f64, yb: f64) -> Result<f64> {
    let h2 = ya + yb - ya * yb;
    if h2 <= 0.0 {
        return Err(Error::AssumptionViolation {
            what: format!("h^2 = {h2} must be positive; the pair (ya, yb) = ({ya}, {yb}) is not an admissible ratio pair"),
        });
    }
    Ok(h2)
}

/// The indicator-gated log term paired with `l_n`; exactly zero when `ya <= 1`.
pub fn ell(ya: f64, yb: f64) -> Result<f64> {
    validate_pair(ya, yb)?;
    if ya < 1.0 {
        return Ok(0.0);
    }
    let h2 = h2_of(ya, yb)?;
    let c1 = yb / (ya + yb);
    let log_h = 0.5 * h2.ln();
    Ok(2.0 * c1 * h2 / (ya * yb) * log_h
        - c1 * (1.0 + yb) / yb * ya.ln()
        - c1 * (1.0 - ya) / ya * yb.ln())
}

/// The indicator-gated term entering `mu_n`; exactly zero when `ya <= 1`.
pub fn u_term(ya: f64, yb: f64) -> Result<f64> {
    validate_pair(ya, yb)?;
    if ya < 1.0 {
        return Ok(0.0);
    }
    let h2 = h2_of(ya, yb)?;
    let c1 = yb / (ya + yb);
    Ok(c1 * (ya.ln() - 0.5 * h2.ln()))
}

/// The indicator-gated term entering `nu_n^2`; exactly zero when `ya <= 1`.
pub fn v_term(ya: f64, yb: f64) -> Result<f64> {
    validate_pair(ya, yb)?;
    if ya < 1.0 {
        return Ok(0.0);
    }
    let h2 = h2_of(ya, yb)?;
    let s = ya + yb;
    let c1 = yb / s;
    let c2 = ya / s;
    Ok(2.0 * c1 * ya.ln() - 2.0 * c1 * (c1 + 2.0 * c2) * 0.5 * h2.ln())
}

/// The closed-form weight multiplying a fourth cumulant in `mu_n`.
///
/// Both indicator pairs are evaluated: the `yb` bracket switches between a
/// `yb^4` term (`yb < 1`) and an `h^2`-weighted term (`yb > 1`), and
/// likewise for the `ya` bracket.
pub fn psi(ya: f64, yb: f64) -> Result<f64> {
    validate_pair(ya, yb)?;
    let h2 = h2_of(ya, yb)?;
    let s = ya + yb;
    let c1 = yb / s;
    let c2 = ya / s;
    let b_side = if yb < 1.0 {
        yb.powi(4)
    } else {
        h2 * (2.0 * yb * yb - h2)
    };
    let a_side = if ya < 1.0 {
        ya.powi(3) * (ya + 2.0 * yb)
    } else {
        h2 * (ya + yb + ya * yb)
    };
    Ok(c2 * ya * ya * b_side - c1 * yb * yb * a_side)
}

/// Evaluates `l_n`, `mu_n` and `nu_n^2` for the given ratios and fourth
/// cumulants. Fails if the variance comes out non-positive, which signals
/// an assumption violation upstream.
pub fn centering(ratios: &DimensionRatios, moments: &MomentParams) -> Result<CenteringTerms> {
    let (y1, y2) = (ratios.y1, ratios.y2);
    let (c1, c2) = (ratios.c1, ratios.c2);
    let (b1, b2) = (moments.beta1, moments.beta2);
    let s = y1 + y2;
    let h2 = y1 + y2 - y1 * y2;
    let log_h = 0.5 * h2.ln();
    let log_s = s.ln();
    let log_a1 = (1.0 - y1).abs().ln();
    let log_a2 = (1.0 - y2).abs().ln();
    let d1 = ratios.y1_gt_1;
    let d2 = ratios.y2_gt_1;

    let l_n = c2 * y1.ln() + c1 * y2.ln() + 2.0 * h2 / (y1 * y2) * log_h
        - s / (y1 * y2) * log_s
        - c1 * (1.0 - y1).abs() / y1 * log_a1
        - c2 * (1.0 - y2).abs() / y2 * log_a2
        - ell(y1, y2)?
        - ell(y2, y1)?;

    let mu_n = 0.5 * log_s + 0.5 * c1 * log_a1 + 0.5 * c2 * log_a2 - log_h
        - u_term(y1, y2)?
        - u_term(y2, y1)?
        + b1 * psi(y1, y2)? / (2.0 * y1 * y2 * y2 * s * s)
        + b2 * psi(y2, y1)? / (2.0 * y2 * y1 * y1 * s * s);

    let cross = if d1 && d2 { 4.0 * c1 * c2 * log_h } else { 0.0 };
    let bracket = {
        let t1 = if d1 { (y1 - 1.0) * y2 * y2 } else { 0.0 };
        let t2 = if d2 { (y2 - 1.0) * y1 * y1 } else { 0.0 };
        t1 - t2
    };
    let nu_n2 = 4.0 * log_h - 2.0 * c1 * c1 * log_a1 - 2.0 * c2 * c2 * log_a2 - 2.0 * log_s
        + 2.0 * (v_term(y1, y2)? + v_term(y2, y1)? + cross)
        + (y1 * b1 + y2 * b2) / (y1 * y1 * y2 * y2 * s * s) * bracket * bracket;

    if !(nu_n2 > 0.0) {
        return Err(Error::Calibration { nu2: nu_n2 });
    }
    let terms = CenteringTerms {
        l_n,
        mu_n,
        nu_n2,
        nu_n: nu_n2.sqrt(),
    };
    if !(terms.l_n.is_finite() && terms.mu_n.is_finite() && terms.nu_n2.is_finite()) {
        return Err(Error::NonFiniteResult {
            context: "centering terms",
        });
    }
    Ok(terms)
}
