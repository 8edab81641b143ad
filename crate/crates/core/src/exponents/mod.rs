//! Exact exponent bookkeeping over `(d, b, α)`: critical indices,
//! admissible pairs, well-posedness regimes and the feasibility checks
//! behind the local and scattering estimates.

mod lemmas;
mod value;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lemmas::{
    evaluate_witness, lemma_local_pairs, lemma_scattering_pairs, lemma_weighted_pairs, Condition, FeasibilityReport,
    LabeledPair, Lemma, SEARCH_DEPTH,
};
pub use value::{
    dyadic, format_rational, int, parse_rational, ratio, rational_serde, rational_to_f64, Exponent, ProblemParams,
    Rational, Sign,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExponentError {
    #[error("cannot parse rational or exponent from {0:?}")]
    Parse(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("q = {q} outside the decay range for d = {d}: {range}")]
    QOutOfRange { d: u32, q: String, range: String },
}

/// Candidate Strichartz pair `(p, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: Exponent,
    pub q: Exponent,
}

impl ExponentPair {
    pub fn new(p: Exponent, q: Exponent) -> Self {
        ExponentPair { p, q }
    }

    /// Completes `q` to the admissible pair `(p, q)` in dimension `d`, if
    /// the resulting `p` lies in `[2, ∞]`.
    pub fn from_q(d: u32, q: Exponent) -> Option<Self> {
        let d = int(d as i64);
        let two_over_p = &d / int(2) - &d * q.reciprocal();
        if two_over_p.is_negative() || two_over_p > Rational::one() {
            return None;
        }
        let p = Exponent::from_reciprocal(two_over_p / int(2))?;
        Some(ExponentPair { p, q })
    }
}

/// `d/2 − (2−b)/α`.
pub fn critical_sobolev(params: &ProblemParams) -> Rational {
    params.d_rational() / int(2) - (int(2) - &params.b) / &params.alpha
}

/// Mass-critical power `(4−2b)/d`.
pub fn mass_critical(d: u32, b: &Rational) -> Rational {
    (int(4) - int(2) * b) / int(d as i64)
}

/// Energy-critical power `(4−2b)/(d−2)`, infinite for `d ≤ 2`.
pub fn energy_critical(d: u32, b: &Rational) -> Exponent {
    if d <= 2 {
        Exponent::Infinite
    } else {
        Exponent::Finite((int(4) - int(2) * b) / int(d as i64 - 2))
    }
}

/// `(α_⋆, α^⋆)`.
pub fn alpha_thresholds(params: &ProblemParams) -> (Rational, Exponent) {
    (mass_critical(params.d, &params.b), energy_critical(params.d, &params.b))
}

/// `2/p + d/q = d/2` with `(p, q, d) ≠ (2, ∞, 2)`; pairs outside `[2, ∞]`
/// are never admissible.
pub fn is_admissible(pair: &ExponentPair, d: u32) -> bool {
    let two = Exponent::from_int(2);
    if pair.p < two || pair.q < two {
        return false;
    }
    if d == 2 && pair.p == two && pair.q.is_infinite() {
        return false;
    }
    let d = int(d as i64);
    int(2) * pair.p.reciprocal() + &d * pair.q.reciprocal() == d / int(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    UnitBall,
    Complement,
}

/// Whether `|x|^{-b}` lies in `L^γ` of the unit ball or of its complement.
pub fn singularity_integrability(d: u32, gamma: &Exponent, b: &Rational, region: Region) -> bool {
    let d_over_gamma = int(d as i64) * gamma.reciprocal();
    match region {
        Region::UnitBall => &d_over_gamma > b,
        Region::Complement => &d_over_gamma < b,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LwpBranch {
    D4plus,
    D3smallB,
    D3midB,
    D2,
    /// No local well-posedness branch applies.
    Uncovered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassClass {
    Subcritical,
    Critical,
    Intercritical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub lwp_branch: LwpBranch,
    pub mass_class: MassClass,
    #[serde(with = "rational_serde")]
    pub critical_sobolev: Rational,
}

/// H¹ local well-posedness branch plus mass classification.
///
/// `Intercritical` covers every α above α_⋆; whether α also stays below
/// α^⋆ is what the branch records.
pub fn lwp_regime(params: &ProblemParams) -> Regime {
    let (lower, upper) = alpha_thresholds(params);
    let alpha = &params.alpha;
    let below_upper = Exponent::Finite(alpha.clone()) < upper;
    let b = &params.b;
    let lwp_branch = match params.d {
        d if d >= 4 && below_upper => LwpBranch::D4plus,
        3 if b < &int(1) && below_upper => LwpBranch::D3smallB,
        3 if b >= &int(1) && b < &ratio(3, 2) => {
            let cap = (int(6) - int(4) * b) / (int(2) * b - int(1));
            if alpha < &cap {
                LwpBranch::D3midB
            } else {
                LwpBranch::Uncovered
            }
        }
        2 if b < &int(1) => LwpBranch::D2,
        _ => LwpBranch::Uncovered,
    };
    let mass_class = match alpha.cmp(&lower) {
        std::cmp::Ordering::Less => MassClass::Subcritical,
        std::cmp::Ordering::Equal => MassClass::Critical,
        std::cmp::Ordering::Greater => MassClass::Intercritical,
    };
    Regime { lwp_branch, mass_class, critical_sobolev: critical_sobolev(params) }
}

/// Bisection width for the Strauss root.
const STRAUSS_WIDTH: f64 = 1.0 / (1u64 << 48) as f64;

/// Positive root of `dα² + (d−2+2b)α + 2b−4`, by bisection.
pub fn strauss_exponent(d: u32, b: f64) -> f64 {
    let d = d as f64;
    let f = |a: f64| d * a * a + (d - 2.0 + 2.0 * b) * a + 2.0 * b - 4.0;
    // f(0) = 2b − 4 < 0 and f((4−2b)/d) > 0, so the root is bracketed.
    let mut lo = 0.0_f64;
    let mut hi = (4.0 - 2.0 * b) / d;
    while hi - lo > STRAUSS_WIDTH {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Checks `q` against the decay range: `[2, 2d/(d−2)]` for `d ≥ 3`,
/// `[2, ∞)` for `d = 2`, `[2, ∞]` for `d = 1`.
pub fn check_decay_q(d: u32, q: &Exponent) -> Result<(), ExponentError> {
    let out_of_range = |range: String| ExponentError::QOutOfRange { d, q: q.to_string(), range };
    if q < &Exponent::from_int(2) {
        return Err(out_of_range("q >= 2".into()));
    }
    match d {
        1 => Ok(()),
        2 if q.is_infinite() => Err(out_of_range("2 <= q < inf".into())),
        2 => Ok(()),
        _ => {
            let top = Exponent::Finite(ratio(2 * d as i64, d as i64 - 2));
            if q > &top {
                Err(out_of_range(format!("2 <= q <= {top}")))
            } else {
                Ok(())
            }
        }
    }
}

/// Exponent `e` in `‖u(t)‖_q ≲ t^{-e}`.
pub fn decay_exponent(params: &ProblemParams, q: &Exponent) -> Result<Rational, ExponentError> {
    check_decay_q(params.d, q)?;
    let d_r = params.d_rational();
    let spread = ratio(1, 2) - q.reciprocal();
    if params.alpha >= mass_critical(params.d, &params.b) {
        Ok(d_r * spread)
    } else {
        let rate = &d_r * (int(2) * &params.b + &d_r * &params.alpha) / int(4);
        Ok(rate * spread)
    }
}
