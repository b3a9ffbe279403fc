use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::violation as v;
use super::{
    check_global_criterion, check_local_criterion, int, lambda, ptilde_g, Admissibility, CaseLabel,
    ExtRat, Exponent, IndexTuple, Rational,
};

/// Which refined theorem the initial-data conditions belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InitialDataVariant {
    Global,
    Local,
}

/// Conditions on a weighted datum `|x|^alpha0 u0 in L^p0 L^ptilde0` under which
/// the global or local criterion for `t` still applies.
///
/// Violations of the underlying criterion are reported with the prefix
/// `"criterion: "`.
pub fn check_initial_data_conditions(
    variant: InitialDataVariant,
    alpha0: Rational,
    p0: Exponent,
    ptilde0: Exponent,
    t: &IndexTuple,
) -> Admissibility {
    let n = int(t.n as i128);
    let one = Rational::one();
    let two = int(2);
    let mut violations = Vec::new();
    let mut derived = BTreeMap::new();
    let mut notes = Vec::new();

    let base = match variant {
        InitialDataVariant::Global => check_global_criterion(t),
        InitialDataVariant::Local => check_local_criterion(t),
    };
    violations.extend(base.violations.iter().map(|s| format!("criterion: {s}")));
    notes.extend(base.notes.iter().cloned());
    for (k, val) in &base.derived {
        derived.insert(k.clone(), *val);
    }

    let mut req = |ok: bool, id: &str| {
        if !ok {
            violations.push(id.to_string());
        }
    };
    req(alpha0 == one - n * p0.recip(), v::ALPHA0_SCALING);
    let p0v = p0.value();
    let neg = t.alpha < Rational::zero();

    match variant {
        InitialDataVariant::Global => {
            let lo = (two - n) / two;
            let hi = two / (two + n);
            req(alpha0 >= lo && alpha0 < hi, v::ALPHA0_RANGE);
            // the reference exponent is ptilde_G for negative weights and p otherwise
            let reference = if neg {
                ptilde_g(t.alpha, t.p, t.n).unwrap_or(ExtRat::Inf)
            } else {
                t.p.value()
            };
            let half = reference.scale(Rational::new(1, 2));
            req(ptilde0.value() <= half, v::PTILDE0_BOUND);
            let mut ok = p0v >= ExtRat::Finite(two) && p0v <= half;
            let two_n = ExtRat::Finite(two * n);
            if reference > two_n {
                let cap = match reference.as_finite() {
                    Some(r) => ExtRat::Finite(two * r / (r - two * n)),
                    None => ExtRat::Finite(two),
                };
                derived.insert("p0_upper".to_string(), cap);
                ok &= p0v < cap;
            }
            req(ok, v::P0_RANGE);
        }
        InitialDataVariant::Local => {
            let (lo, hi) = if neg {
                (one - n, (two - n) / (two + n))
            } else {
                let c = one - t.alpha;
                (one - c * n, one - c * two * n / (two + n))
            };
            req(alpha0 >= lo && alpha0 < hi, v::ALPHA0_RANGE);
            let half = t.p.value().scale(Rational::new(1, 2));
            req(ptilde0.value() <= half, v::PTILDE0_BOUND);
            let mut ok = p0v <= half;
            if neg {
                ok &= p0v >= ExtRat::Finite(one);
                if t.p.value() > ExtRat::Finite(n) {
                    let cap = match t.p.as_finite() {
                        Some(p) => ExtRat::Finite(p / (p - n)),
                        None => ExtRat::Finite(one),
                    };
                    derived.insert("p0_upper".to_string(), cap);
                    ok &= p0v < cap;
                }
            } else if t.alpha < one {
                let c = one - t.alpha;
                ok &= p0v >= ExtRat::Finite(one / c);
                let cap = match t.p.as_finite() {
                    Some(p) if c * p - n > Rational::zero() => ExtRat::Finite(p / (c * p - n)),
                    Some(_) => ExtRat::Inf,
                    None => ExtRat::Finite(one / c),
                };
                derived.insert("p0_upper".to_string(), cap);
                ok &= p0v < cap;
            }
            req(ok, v::P0_RANGE);
            let l0 = lambda(alpha0, p0, ptilde0, t.n);
            derived.insert("Lambda0".to_string(), ExtRat::Finite(l0));
            req(l0 >= Rational::zero(), v::LAMBDA0_NONNEG);
        }
    }
    let case = if base.admissible { base.case_label } else { CaseLabel::None };
    Admissibility::from_parts(case, violations, derived, notes)
}
