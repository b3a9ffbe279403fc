use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::violation as v;
use super::{int, omega, Admissibility, CaseLabel, EstimateIndices, ExtRat, Exponent, Rational};

/// Which weighted kernel estimate an index set is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimateKind {
    HeatDecay,
    OseenDecay,
    Localized,
    Integral,
    Duhamel,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 5] = [
        EstimateKind::HeatDecay,
        EstimateKind::OseenDecay,
        EstimateKind::Localized,
        EstimateKind::Integral,
        EstimateKind::Duhamel,
    ];
}

/// Checks the hypotheses of the weighted estimate `kind` for `e`.
///
/// The derived map carries `rate` (decay exponent of `t`), `Lambda_alpha_beta`
/// and, for the localized estimate, `R_exponent = -Lambda_alpha_beta`.
pub fn admissible_estimate(kind: EstimateKind, e: &EstimateIndices) -> Admissibility {
    let mut violations: Vec<String> = Vec::new();
    let mut derived = BTreeMap::new();
    let mut req = |ok: bool, id: &str| {
        if !ok {
            violations.push(id.to_string());
        }
    };
    let n = int(e.n as i128);
    let eta = int(e.eta as i128);
    let gap = e.lambda_gap();
    derived.insert("Lambda_alpha_beta".to_string(), ExtRat::Finite(gap));

    req(e.n >= 2, "n >= 2");
    // beta > -n/q; alpha < n/p'
    req(e.beta > -(n * e.q.recip()), v::BETA_INTEGRABLE);

    match kind {
        EstimateKind::HeatDecay | EstimateKind::OseenDecay | EstimateKind::Localized => {
            req(e.p <= e.q, v::P_LE_Q);
            req(e.ptilde <= e.qtilde, v::PTILDE_LE_QTILDE);
            req(e.alpha < n * e.p.conjugate_recip(), v::ALPHA_INTEGRABLE);
            if kind == EstimateKind::Localized {
                req(gap < Rational::zero(), v::LAMBDA_NEGATIVE);
                derived.insert("R_exponent".to_string(), ExtRat::Finite(-gap));
            } else {
                req(gap >= Rational::zero(), v::LAMBDA_ORDERING);
            }
            if kind == EstimateKind::OseenDecay {
                let rate = e.oseen_rate();
                req(rate > Rational::zero(), v::RATE_POSITIVE);
                derived.insert("rate".to_string(), ExtRat::Finite(rate));
            } else {
                let rate = e.heat_rate();
                req(rate >= Rational::zero(), v::RATE_NONNEG);
                derived.insert("rate".to_string(), ExtRat::Finite(rate));
            }
        }
        EstimateKind::Integral => {
            req(e.p <= e.q, v::P_LE_Q);
            req(e.ptilde <= e.qtilde, v::PTILDE_LE_QTILDE);
            req(e.alpha < n * e.p.conjugate_recip(), v::ALPHA_INTEGRABLE);
            // q < np/((|eta|+alpha-beta)p + n - 2); no bound when the denominator is <= 0
            let q_ok = match e.p.as_finite() {
                Some(p) => {
                    let den = (eta + e.alpha - e.beta) * p + n - int(2);
                    den <= Rational::zero() || e.q.value() < ExtRat::Finite(n * p / den)
                }
                None => {
                    let c = eta + e.alpha - e.beta;
                    c <= Rational::zero() || e.q.value() < ExtRat::Finite(n / c)
                }
            };
            req(q_ok, v::Q_UPPER);
            req(e.p < e.r && !e.r.is_inf(), v::R_RANGE);
            let lhs = eta + omega(e.alpha, e.p, Exponent::INF, e.n);
            let rhs = omega(e.beta, e.q, e.r, e.n);
            req(lhs == rhs, v::OMEGA_BALANCE);
            req(gap >= Rational::zero(), v::LAMBDA_ORDERING);
        }
        EstimateKind::Duhamel => {
            let two = Exponent::int(2);
            let p_ok = e.p >= two && e.p.value() <= e.q.value().scale(int(2));
            req(p_ok, v::DUHAMEL_P);
            let pt_ok = e.ptilde >= two && e.ptilde.value() <= e.qtilde.value().scale(int(2));
            req(pt_ok, v::DUHAMEL_PTILDE);
            req(e.alpha < n / int(2) - n * e.p.recip(), v::DUHAMEL_ALPHA);
            match e.s {
                Some(s) => {
                    let s_ok = s > two && !e.r.is_inf() && s.value() < e.r.value().scale(int(2));
                    req(s_ok, v::DUHAMEL_S);
                    let lhs = int(2) * omega(e.alpha, e.p, s, e.n);
                    let rhs = omega(e.beta, e.q, e.r, e.n) + Rational::one() - eta;
                    req(lhs == rhs, v::OMEGA_BALANCE);
                }
                None => req(false, v::MISSING_S),
            }
            let two_lambda = int(2) * e.lambda_source() - e.lambda_target();
            req(two_lambda >= Rational::zero(), v::DUHAMEL_LAMBDA);
        }
    }
    let case = if e.alpha < Rational::zero() { CaseLabel::NegAlpha } else { CaseLabel::NonnegAlpha };
    Admissibility::from_parts(case, violations, derived, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{rat, violation as v};

    fn e(v: i128) -> Exponent {
        Exponent::int(v)
    }

    #[test]
    fn heat_l2_to_l6() {
        let ix = EstimateIndices::decay(3, (int(0), e(2), e(2)), (int(0), e(6), e(6)), 0);
        let a = admissible_estimate(EstimateKind::HeatDecay, &ix);
        assert!(a.admissible, "{:?}", a.violations);
        assert_eq!(a.derived["rate"], ExtRat::Finite(rat(1, 2)));
    }

    #[test]
    fn weighted_heat_case() {
        let ix = EstimateIndices::decay(3, (rat(-1, 2), e(2), e(4)), (int(0), e(6), e(6)), 0);
        let a = admissible_estimate(EstimateKind::HeatDecay, &ix);
        assert!(a.admissible, "{:?}", a.violations);
        assert_eq!(a.derived["rate"], ExtRat::Finite(rat(1, 4)));
    }

    #[test]
    fn lambda_ordering_violation() {
        // Lambda source = 0, Lambda target = 2/6 - 2/12 > 0
        let ix = EstimateIndices::decay(3, (int(0), e(2), e(2)), (int(0), e(6), e(12)), 0);
        let a = admissible_estimate(EstimateKind::HeatDecay, &ix);
        assert_eq!(a.violations, vec![v::LAMBDA_ORDERING.to_string()]);
        let a = admissible_estimate(EstimateKind::Localized, &ix);
        assert!(a.admissible);
        assert_eq!(a.derived["R_exponent"], ExtRat::Finite(rat(1, 6)));
    }

    #[test]
    fn oseen_rate_is_half_more() {
        let ix = EstimateIndices::decay(3, (int(0), e(2), e(2)), (int(0), e(2), e(2)), 0);
        let a = admissible_estimate(EstimateKind::OseenDecay, &ix);
        assert!(a.admissible);
        assert_eq!(a.derived["rate"], ExtRat::Finite(rat(1, 2)));
        let a = admissible_estimate(EstimateKind::HeatDecay, &ix);
        assert_eq!(a.derived["rate"], ExtRat::Finite(int(0)));
    }

    #[test]
    fn integral_balance() {
        // 3/2 = 3/4 + 2/r  =>  r = 8/3
        let ix = EstimateIndices::decay(3, (int(0), e(2), e(2)), (int(0), e(4), e(4)), 0)
            .with_r(Exponent::frac(8, 3));
        let a = admissible_estimate(EstimateKind::Integral, &ix);
        assert!(a.admissible, "{:?}", a.violations);
        let bad = ix.with_r(e(4));
        let a = admissible_estimate(EstimateKind::Integral, &bad);
        assert!(a.has_violation(v::OMEGA_BALANCE));
    }

    #[test]
    fn integral_l2_l6_r4_is_not_balanced() {
        // 3/2 = 1/2 + 2/r forces r = 2, which then violates p < r and q < 3p.
        let ix = EstimateIndices::decay(3, (int(0), e(2), e(2)), (int(0), e(6), e(6)), 0).with_r(e(4));
        let a = admissible_estimate(EstimateKind::Integral, &ix);
        assert!(a.has_violation(v::OMEGA_BALANCE));
        assert!(a.has_violation(v::Q_UPPER));
    }

    #[test]
    fn duhamel_special_case() {
        let ix = EstimateIndices::decay(3, (int(0), e(5), e(5)), (int(0), e(5), e(5)), 0)
            .with_r(e(5))
            .with_s(e(5));
        let a = admissible_estimate(EstimateKind::Duhamel, &ix);
        assert!(a.admissible, "{:?}", a.violations);
        let a = admissible_estimate(EstimateKind::Duhamel, &ix.with_r(e(5)).with_s(e(4)));
        assert!(a.has_violation(v::OMEGA_BALANCE));
        let mut missing = ix;
        missing.s = None;
        assert!(admissible_estimate(EstimateKind::Duhamel, &missing).has_violation(v::MISSING_S));
    }

    #[test]
    fn alpha_integrability() {
        // alpha < n/p' = 3/2 for p = 2
        let ix = EstimateIndices::decay(3, (rat(3, 2), e(2), e(2)), (int(0), e(6), e(6)), 0);
        let a = admissible_estimate(EstimateKind::HeatDecay, &ix);
        assert!(a.has_violation(v::ALPHA_INTEGRABLE));
    }
}
