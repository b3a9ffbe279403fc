//! Exact index arithmetic for the weighted mixed-norm regularity criteria.
//!
//! Everything in this module is rational arithmetic: no floating point is
//! involved in any verdict, so region boundaries (strict versus non-strict
//! inequalities) are decided exactly.

mod criteria;
mod estimates;
mod exponent;
mod initial_data;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use criteria::{check_global_criterion, check_local_criterion, check_scaling, check_yz_criterion};
pub use estimates::{admissible_estimate, EstimateKind};
pub use exponent::{
    format_rational, int, parse_rational, rat, serde_rational, ExtRat, Exponent, Rational,
};
pub use initial_data::{check_initial_data_conditions, InitialDataVariant};

/// Criterion index set `(n, alpha, s, p, ptilde)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexTuple {
    pub n: u32,
    #[serde(with = "serde_rational")]
    pub alpha: Rational,
    pub s: Exponent,
    pub p: Exponent,
    pub ptilde: Exponent,
}

impl IndexTuple {
    pub fn new(n: u32, alpha: Rational, s: Exponent, p: Exponent, ptilde: Exponent) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension n = {n} must be at least 2")));
        }
        Ok(IndexTuple { n, alpha, s, p, ptilde })
    }

    /// Time exponent forced by the scaling relation `2/s + n/p = 1 - alpha`,
    /// or `None` when that would not be an exponent in `[1, INF]`.
    pub fn scaling_time_exponent(n: u32, alpha: Rational, p: Exponent) -> Option<Exponent> {
        let two_over_s = Rational::one() - alpha - int(n as i128) * p.recip();
        if two_over_s < Rational::zero() {
            return None;
        }
        let s = if two_over_s.is_zero() {
            ExtRat::Inf
        } else {
            ExtRat::Finite(int(2) / two_over_s)
        };
        Exponent::new(s).ok()
    }
}

/// Source/target indices of a weighted kernel estimate.
///
/// `s` is the time exponent of the source norm; it is only consulted by the
/// Duhamel estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateIndices {
    pub n: u32,
    #[serde(with = "serde_rational")]
    pub alpha: Rational,
    #[serde(with = "serde_rational")]
    pub beta: Rational,
    pub p: Exponent,
    pub ptilde: Exponent,
    pub q: Exponent,
    pub qtilde: Exponent,
    pub r: Exponent,
    pub eta: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Exponent>,
}

impl EstimateIndices {
    /// Indices for a pure decay estimate (time exponent `r = INF`).
    pub fn decay(
        n: u32,
        (alpha, p, ptilde): (Rational, Exponent, Exponent),
        (beta, q, qtilde): (Rational, Exponent, Exponent),
        eta: u32,
    ) -> Self {
        EstimateIndices { n, alpha, beta, p, ptilde, q, qtilde, r: Exponent::INF, eta, s: None }
    }

    pub fn with_r(mut self, r: Exponent) -> Self {
        self.r = r;
        self
    }

    pub fn with_s(mut self, s: Exponent) -> Self {
        self.s = Some(s);
        self
    }

    pub fn lambda_source(&self) -> Rational {
        lambda(self.alpha, self.p, self.ptilde, self.n)
    }

    pub fn lambda_target(&self) -> Rational {
        lambda(self.beta, self.q, self.qtilde, self.n)
    }

    /// `Lambda_{alpha,beta} = Lambda(alpha,p,ptilde) - Lambda(beta,q,qtilde)`.
    pub fn lambda_gap(&self) -> Rational {
        self.lambda_source() - self.lambda_target()
    }

    /// Heat decay rate `(|eta| + n/p - n/q + alpha - beta)/2`.
    pub fn heat_rate(&self) -> Rational {
        let n = int(self.n as i128);
        (int(self.eta as i128) + n * self.p.recip() - n * self.q.recip() + self.alpha - self.beta)
            / int(2)
    }

    /// Oseen decay rate `(1 + |eta| + n/p - n/q + alpha - beta)/2`.
    pub fn oseen_rate(&self) -> Rational {
        self.heat_rate() + rat(1, 2)
    }
}

/// Branch of a theorem that licensed (or was tested against) an index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseLabel {
    NegAlpha,
    NonnegAlpha,
    YzMain,
    YzLinf,
    YzSmall,
    None,
}

/// Verdict of an admissibility check.
///
/// `violations` holds stable condition identifiers (see [`violation`]);
/// `derived` holds the exact quantities computed along the way.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub case_label: CaseLabel,
    pub violations: Vec<String>,
    pub derived: BTreeMap<String, ExtRat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Admissibility {
    pub(crate) fn from_parts(
        case: CaseLabel,
        violations: Vec<String>,
        derived: BTreeMap<String, ExtRat>,
        notes: Vec<String>,
    ) -> Self {
        let admissible = violations.is_empty();
        Admissibility {
            admissible,
            case_label: if admissible { case } else { CaseLabel::None },
            violations,
            derived,
            notes,
        }
    }

    pub fn has_violation(&self, id: &str) -> bool {
        self.violations.iter().any(|v| v == id)
    }
}

/// Stable identifiers for every named theorem condition.
pub mod violation {
    pub const DIMENSION: &str = "n >= 3";
    pub const SCALING: &str = "scaling";
    pub const ALPHA_LOWER: &str = "alpha lower bound";
    pub const ALPHA_UPPER: &str = "alpha < 1";
    pub const ALPHA_RANGE: &str = "alpha range";
    pub const S_RANGE: &str = "s range";
    pub const P_RANGE: &str = "p range";
    pub const PTILDE_G: &str = "ptilde >= ptilde_G";
    pub const PTILDE_L: &str = "ptilde >= ptilde_L";
    pub const PTILDE_L_STRICT: &str = "ptilde > ptilde_L (strict inequality)";
    pub const P_LE_Q: &str = "p <= q";
    pub const PTILDE_LE_QTILDE: &str = "ptilde <= qtilde";
    pub const BETA_INTEGRABLE: &str = "beta > -n/q";
    pub const ALPHA_INTEGRABLE: &str = "alpha < n/p'";
    pub const LAMBDA_ORDERING: &str = "Lambda ordering";
    pub const LAMBDA_NEGATIVE: &str = "Lambda_{alpha,beta} < 0";
    pub const RATE_NONNEG: &str = "decay rate >= 0";
    pub const RATE_POSITIVE: &str = "decay rate > 0";
    pub const Q_UPPER: &str = "q < np/((|eta|+alpha-beta)p+n-2)";
    pub const R_RANGE: &str = "p < r < inf";
    pub const OMEGA_BALANCE: &str = "Omega balance";
    pub const DUHAMEL_P: &str = "2 <= p <= 2q";
    pub const DUHAMEL_S: &str = "2 < s < 2r < inf";
    pub const DUHAMEL_PTILDE: &str = "2 <= ptilde <= 2qtilde";
    pub const DUHAMEL_ALPHA: &str = "alpha < n/2 - n/p";
    pub const DUHAMEL_LAMBDA: &str = "2 Lambda_alpha >= Lambda_beta";
    pub const MISSING_S: &str = "source time exponent s given";
    pub const ALPHA0_SCALING: &str = "alpha0 scaling";
    pub const ALPHA0_RANGE: &str = "alpha0 range";
    pub const PTILDE0_BOUND: &str = "ptilde0 bound";
    pub const P0_RANGE: &str = "p0 range";
    pub const LAMBDA0_NONNEG: &str = "Lambda(alpha0,p0,ptilde0) >= 0";
}

/// `Lambda(alpha, p, ptilde) = alpha + (n-1)/p - (n-1)/ptilde`.
pub fn lambda(alpha: Rational, p: Exponent, ptilde: Exponent, n: u32) -> Rational {
    let nm1 = int(n as i128 - 1);
    alpha + nm1 * p.recip() - nm1 * ptilde.recip()
}

/// `Omega(alpha, p, s) = alpha + n/p + 2/s`.
pub fn omega(alpha: Rational, p: Exponent, s: Exponent, n: u32) -> Rational {
    alpha + int(n as i128) * p.recip() + int(2) * s.recip()
}

/// The raw ratio `(n-1)p / (alpha p + n - 1)`, without domain checks.
///
/// Returns `INF` when the denominator is not positive (the endpoint where
/// angular `L^INF` is required). For `p = INF` the limit `(n-1)/alpha` is used
/// when `alpha > 0`.
pub fn ptilde_g_ratio(alpha: Rational, p: Exponent, n: u32) -> ExtRat {
    let nm1 = int(n as i128 - 1);
    match p.as_finite() {
        Some(p) => {
            let den = alpha * p + nm1;
            if den <= Rational::zero() {
                ExtRat::Inf
            } else {
                ExtRat::Finite(nm1 * p / den)
            }
        }
        None => {
            if alpha > Rational::zero() {
                ExtRat::Finite(nm1 / alpha)
            } else {
                ExtRat::Inf
            }
        }
    }
}

/// Minimal angular exponent for global regularity.
pub fn ptilde_g(alpha: Rational, p: Exponent, n: u32) -> Result<ExtRat> {
    let lo = int(1 - n as i128) / int(2);
    if !(alpha > lo && alpha < rat(1, 2)) {
        return Err(Error::Domain(format!(
            "ptilde_G needs (1-n)/2 < alpha < 1/2, got alpha = {}",
            format_rational(&alpha)
        )));
    }
    let ratio = ptilde_g_ratio(alpha, p, n);
    if alpha < Rational::zero() {
        Ok(ratio.max(ExtRat::Finite(int(2 * n as i128))))
    } else {
        Ok(ratio)
    }
}

/// Minimal angular exponent for regularity at the weight centre.
pub fn ptilde_l(alpha: Rational, p: Exponent, n: u32) -> Result<ExtRat> {
    if !(alpha >= rat(-1, 2) && alpha < Rational::one()) {
        return Err(Error::Domain(format!(
            "ptilde_L needs -1/2 <= alpha < 1, got alpha = {}",
            format_rational(&alpha)
        )));
    }
    let two_nm1 = int(2 * (n as i128 - 1));
    // Coefficient of p in the denominator.
    let c = if alpha < Rational::zero() {
        int(2) * alpha + Rational::one()
    } else {
        Rational::one()
    };
    Ok(match p.as_finite() {
        Some(p) => ExtRat::Finite(two_nm1 * p / (c * p + two_nm1)),
        None if c.is_zero() => ExtRat::Inf,
        None => ExtRat::Finite(two_nm1 / c),
    })
}
