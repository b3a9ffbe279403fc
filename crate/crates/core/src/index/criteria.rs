use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::violation as v;
use super::{int, ptilde_g, ptilde_l, rat, Admissibility, CaseLabel, ExtRat, IndexTuple, Rational};

/// `2/s + n/p == 1 - alpha`, exactly.
pub fn check_scaling(t: &IndexTuple) -> bool {
    int(2) * t.s.recip() + int(t.n as i128) * t.p.recip() == Rational::one() - t.alpha
}

struct Checker {
    violations: Vec<String>,
    derived: BTreeMap<String, ExtRat>,
    notes: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Checker { violations: Vec::new(), derived: BTreeMap::new(), notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, id: &str) {
        if !ok {
            self.violations.push(id.to_string());
        }
    }

    fn finish(self, case: CaseLabel) -> Admissibility {
        Admissibility::from_parts(case, self.violations, self.derived, self.notes)
    }
}

/// Time-exponent condition shared by both criteria in the negative-weight case:
/// `max(2, 2/(1-alpha)) < s < INF` or `s = 2/(1-alpha)`.
fn s_condition_neg(t: &IndexTuple) -> bool {
    let one_minus = Rational::one() - t.alpha;
    let endpoint = ExtRat::Finite(int(2) / one_minus);
    let lower = endpoint.max(ExtRat::Finite(int(2)));
    let s = t.s.value();
    (s > lower && !s.is_inf()) || s == endpoint
}

/// `2/(1-alpha) <= s < INF`.
fn s_condition_nonneg(t: &IndexTuple) -> bool {
    if t.alpha >= Rational::one() {
        return false;
    }
    let endpoint = ExtRat::Finite(int(2) / (Rational::one() - t.alpha));
    let s = t.s.value();
    s >= endpoint && !s.is_inf()
}

/// Weighted Serrin-type criterion with three branches.
///
/// Branch (iii) additionally needs a smallness constant that is not
/// quantified, so an admissible `YZ_SMALL` verdict carries a note saying so.
pub fn check_yz_criterion(t: &IndexTuple) -> Admissibility {
    let one = Rational::one();
    let one_minus = one - t.alpha;
    let n = int(t.n as i128);
    let mut c = Checker::new();
    c.require(t.n >= 3, v::DIMENSION);

    let case = if t.s.is_inf() {
        // (iii) sup_t || |x|^alpha u ||_{L^{n/(1-alpha)}} < eps
        c.require(t.alpha >= -one, v::ALPHA_LOWER);
        c.require(t.alpha <= one, v::ALPHA_RANGE);
        let ok_p = if one_minus.is_zero() {
            t.p.is_inf()
        } else {
            t.p.value() == ExtRat::Finite(n / one_minus)
        };
        c.require(ok_p, v::P_RANGE);
        c.notes.push("smallness constant epsilon additionally required".to_string());
        CaseLabel::YzSmall
    } else if t.p.is_inf() {
        // (ii) s = 2/(1-alpha), p = INF
        c.require(t.alpha > -one, v::ALPHA_LOWER);
        c.require(t.alpha < one, v::ALPHA_UPPER);
        let ok_s = !one_minus.is_zero() && t.s.value() == ExtRat::Finite(int(2) / one_minus);
        c.require(ok_s, v::S_RANGE);
        CaseLabel::YzLinf
    } else {
        // (i) the scaling-invariant main branch
        c.require(check_scaling(t), v::SCALING);
        c.require(t.alpha >= -one, v::ALPHA_LOWER);
        c.require(t.alpha < one, v::ALPHA_UPPER);
        if t.alpha < one {
            c.require(t.s.value() > ExtRat::Finite(int(2) / one_minus), v::S_RANGE);
            c.require(t.p.value() > ExtRat::Finite(n / one_minus), v::P_RANGE);
        }
        CaseLabel::YzMain
    };
    c.finish(case)
}

/// Global criterion with angular integrability `ptilde >= ptilde_G`.
///
/// In the negative-weight case the condition on `p` reads
/// `max(2, n/(1-alpha)) < p <= (1-n)/alpha` or `p = 2`; the `p = 2` branch is
/// accepted with the same scaling and time-exponent conditions.
pub fn check_global_criterion(t: &IndexTuple) -> Admissibility {
    let n = int(t.n as i128);
    let one = Rational::one();
    let mut c = Checker::new();
    c.require(t.n >= 3, v::DIMENSION);
    c.require(check_scaling(t), v::SCALING);

    let case = if t.alpha < Rational::zero() {
        c.require(t.alpha > (one - n) / int(2), v::ALPHA_RANGE);
        let lower = ExtRat::Finite((n / (one - t.alpha)).max(int(2)));
        let upper = ExtRat::Finite((one - n) / t.alpha);
        let p = t.p.value();
        let p_is_two = p == ExtRat::Finite(int(2));
        if p_is_two {
            c.notes.push("p = 2 branch".to_string());
        }
        c.require((p > lower && p <= upper) || p_is_two, v::P_RANGE);
        c.require(s_condition_neg(t), v::S_RANGE);
        CaseLabel::NegAlpha
    } else {
        c.require(t.alpha < rat(1, 2), v::ALPHA_RANGE);
        c.require(t.p.value() > ExtRat::Finite(int(2) * n), v::P_RANGE);
        c.require(s_condition_nonneg(t), v::S_RANGE);
        CaseLabel::NonnegAlpha
    };

    match ptilde_g(t.alpha, t.p, t.n) {
        Ok(pg) => {
            c.derived.insert("ptilde_G".to_string(), pg);
            if pg.is_inf() {
                c.notes.push("endpoint: angular L-infinity required".to_string());
            }
            c.require(t.ptilde.value() >= pg, v::PTILDE_G);
        }
        Err(_) => c.require(false, v::PTILDE_G),
    }
    c.finish(case)
}

/// Local criterion (regularity on the weight centre) with `ptilde` versus
/// `ptilde_L`; the inequality is strict for non-negative weights.
pub fn check_local_criterion(t: &IndexTuple) -> Admissibility {
    let n = int(t.n as i128);
    let one = Rational::one();
    let mut c = Checker::new();
    c.require(t.n >= 3, v::DIMENSION);
    c.require(check_scaling(t), v::SCALING);

    let neg = t.alpha < Rational::zero();
    let case = if neg {
        c.require(t.alpha >= rat(-1, 2), v::ALPHA_RANGE);
        c.require(t.p.value() > ExtRat::Finite(n), v::P_RANGE);
        c.require(s_condition_neg(t), v::S_RANGE);
        CaseLabel::NegAlpha
    } else {
        c.require(t.alpha < one, v::ALPHA_RANGE);
        if t.alpha < one {
            c.require(t.p.value() > ExtRat::Finite(n / (one - t.alpha)), v::P_RANGE);
            c.require(s_condition_nonneg(t), v::S_RANGE);
        }
        CaseLabel::NonnegAlpha
    };

    match ptilde_l(t.alpha, t.p, t.n) {
        Ok(pl) => {
            c.derived.insert("ptilde_L".to_string(), pl);
            if neg {
                c.require(t.ptilde.value() >= pl, v::PTILDE_L);
            } else {
                c.require(t.ptilde.value() > pl, v::PTILDE_L_STRICT);
            }
        }
        Err(_) => c.require(false, if neg { v::PTILDE_L } else { v::PTILDE_L_STRICT }),
    }
    c.finish(case)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Exponent;

    fn tuple(n: u32, alpha: Rational, s: Exponent, p: Exponent, pt: Exponent) -> IndexTuple {
        IndexTuple::new(n, alpha, s, p, pt).unwrap()
    }

    #[test]
    fn scaling_examples() {
        let e = Exponent::int;
        assert!(check_scaling(&tuple(3, rat(-2, 3), e(3), e(3), Exponent::INF)));
        assert!(check_scaling(&tuple(3, int(0), Exponent::INF, e(3), e(3))));
        assert!(check_scaling(&tuple(3, int(0), e(8), e(4), e(4))));
        assert!(!check_scaling(&tuple(3, int(0), e(8), e(5), e(4))));
    }

    #[test]
    fn yz_main_examples() {
        let e = Exponent::int;
        let a = check_yz_criterion(&tuple(3, int(0), e(8), e(4), e(4)));
        assert!(a.admissible);
        assert_eq!(a.case_label, CaseLabel::YzMain);
        let a = check_yz_criterion(&tuple(3, rat(-2, 3), e(3), e(3), e(3)));
        assert!(a.admissible, "{:?}", a.violations);
        let a = check_yz_criterion(&tuple(3, int(1), e(8), e(4), e(4)));
        assert!(!a.admissible);
        assert!(a.has_violation(v::ALPHA_UPPER));
    }

    #[test]
    fn yz_other_branches() {
        let e = Exponent::int;
        // s = 2/(1-alpha) = 4 with alpha = 1/2, p = INF
        let a = check_yz_criterion(&tuple(3, rat(1, 2), e(4), Exponent::INF, e(2)));
        assert_eq!(a.case_label, CaseLabel::YzLinf);
        // s = INF, p = n/(1-alpha) = 3
        let a = check_yz_criterion(&tuple(3, int(0), Exponent::INF, e(3), e(3)));
        assert_eq!(a.case_label, CaseLabel::YzSmall);
        assert!(!a.notes.is_empty());
        let a = check_yz_criterion(&tuple(3, int(1), Exponent::INF, e(3), e(3)));
        assert!(a.has_violation(v::P_RANGE));
        let a = check_yz_criterion(&tuple(3, int(1), Exponent::INF, Exponent::INF, e(3)));
        assert!(a.admissible);
    }

    #[test]
    fn global_examples() {
        let e = Exponent::int;
        let a = check_global_criterion(&tuple(3, rat(-2, 3), e(3), e(3), Exponent::INF));
        assert!(a.admissible, "{:?}", a.violations);
        assert_eq!(a.case_label, CaseLabel::NegAlpha);
        assert_eq!(a.derived["ptilde_G"], ExtRat::Inf);

        let a = check_global_criterion(&tuple(3, rat(-2, 3), e(3), e(3), e(100)));
        assert!(!a.admissible);
        assert_eq!(a.violations, vec![v::PTILDE_G.to_string()]);

        let a = check_global_criterion(&tuple(3, int(0), Exponent::frac(16, 5), e(8), e(8)));
        assert!(a.admissible, "{:?}", a.violations);
        assert_eq!(a.case_label, CaseLabel::NonnegAlpha);
        // non-strict: ptilde just below fails
        let a = check_global_criterion(&tuple(3, int(0), Exponent::frac(16, 5), e(8), Exponent::frac(79, 10)));
        assert!(a.has_violation(v::PTILDE_G));
    }

    #[test]
    fn global_p_equal_two_branch() {
        // p = 2 satisfies the p-condition; scaling then has no solution for n = 3.
        let t = tuple(3, rat(-1, 4), Exponent::int(4), Exponent::int(2), Exponent::INF);
        let a = check_global_criterion(&t);
        assert!(!a.has_violation(v::P_RANGE));
        assert!(a.has_violation(v::SCALING));
        assert!(a.notes.iter().any(|n| n == "p = 2 branch"));
    }

    #[test]
    fn local_examples() {
        let e = Exponent::int;
        let a = check_local_criterion(&tuple(3, rat(-1, 2), Exponent::frac(8, 3), e(4), e(4)));
        assert!(a.admissible, "{:?}", a.violations);
        assert_eq!(a.case_label, CaseLabel::NegAlpha);

        let s = IndexTuple::scaling_time_exponent(3, int(0), e(8)).unwrap();
        let a = check_local_criterion(&tuple(3, int(0), s, e(8), Exponent::frac(8, 3)));
        assert!(!a.admissible);
        assert_eq!(a.violations, vec![v::PTILDE_L_STRICT.to_string()]);
        let a = check_local_criterion(&tuple(3, int(0), s, e(8), e(3)));
        assert!(a.admissible);

        let a = check_local_criterion(&tuple(3, rat(-1, 2), Exponent::frac(8, 3), e(4), e(3)));
        assert_eq!(a.violations, vec![v::PTILDE_L.to_string()]);
    }

    #[test]
    fn dimension_two_rejected() {
        let e = Exponent::int;
        let a = check_global_criterion(&tuple(2, int(0), e(8), e(8), e(8)));
        assert!(a.has_violation(v::DIMENSION));
    }
}
