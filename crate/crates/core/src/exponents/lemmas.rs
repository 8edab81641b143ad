//! Exponent constructions behind the local, scattering and weighted
//! estimates, with a deterministic dyadic witness search for `(ε, τ)`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::value::{dyadic, int, ratio, rational_serde, Exponent, ProblemParams, Rational};
use super::{energy_critical, mass_critical, ExponentPair};

/// Largest `k` tried for `ε = 2^-k` and `τ = 2^-k`.
pub const SEARCH_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Local,
    Scattering,
    Weighted,
}

impl std::str::FromStr for Lemma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Lemma::Local),
            "scattering" => Ok(Lemma::Scattering),
            "weighted" => Ok(Lemma::Weighted),
            other => Err(format!("unknown lemma {other:?} (expected local, scattering or weighted)")),
        }
    }
}

/// One named inequality with its exact margin. Strict conditions hold
/// iff `margin > 0`, non-strict ones iff `margin ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub holds: bool,
    #[serde(with = "rational_serde")]
    pub margin: Rational,
}

impl Condition {
    pub fn strict(id: impl Into<String>, margin: Rational) -> Self {
        Condition { id: id.into(), holds: margin.is_positive(), margin }
    }

    pub fn non_strict(id: impl Into<String>, margin: Rational) -> Self {
        Condition { id: id.into(), holds: !margin.is_negative(), margin }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub label: String,
    pub pair: ExponentPair,
    /// `αp/(p−2)`, the companion time exponent, where the estimate uses one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<Exponent>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub lemma: Lemma,
    pub params: ProblemParams,
    pub feasible: bool,
    #[serde(with = "rational_serde")]
    pub witness_epsilon: Rational,
    #[serde(with = "rational_serde")]
    pub witness_tau: Rational,
    pub pairs: Vec<LabeledPair>,
    pub conditions: Vec<Condition>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn condition(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

struct Candidate {
    conditions: Vec<Condition>,
    /// Labelled `q` values; the matching `p` comes from admissibility.
    qs: Vec<(String, Rational)>,
}

type WitnessFn = Box<dyn Fn(&Rational, &Rational) -> Candidate>;

struct Construction {
    hypotheses: Vec<Condition>,
    /// Parameter-only conditions: the witness inequalities at `ε = τ = 0`.
    /// Requiring them keeps exact boundary cases infeasible.
    core: Vec<Condition>,
    uses_tau: bool,
    with_m: bool,
    fixed_qs: Vec<(String, Rational)>,
    notes: Vec<String>,
    witness: WitnessFn,
}

impl Construction {
    fn unsupported(id: &str, margin: Rational) -> Self {
        Construction {
            hypotheses: vec![Condition::strict(id, margin)],
            core: vec![],
            uses_tau: false,
            with_m: false,
            fixed_qs: vec![],
            notes: vec![],
            witness: Box::new(|_, _| Candidate { conditions: vec![], qs: vec![] }),
        }
    }
}

/// Exponents for the local-in-time nonlinear estimate.
pub fn lemma_local_pairs(params: &ProblemParams) -> FeasibilityReport {
    run(Lemma::Local, params, local_construction(params))
}

/// Exponents for the global scattering estimate.
pub fn lemma_scattering_pairs(params: &ProblemParams) -> FeasibilityReport {
    run(Lemma::Scattering, params, scattering_construction(params, Window::Scattering))
}

/// Exponents for the estimate on `(x + 2it∇)u`, which needs `p < α+1`.
pub fn lemma_weighted_pairs(params: &ProblemParams) -> FeasibilityReport {
    run(Lemma::Weighted, params, scattering_construction(params, Window::Weighted))
}

/// Evaluates a lemma's witness conditions at a caller-supplied `(ε, τ)`.
pub fn evaluate_witness(lemma: Lemma, params: &ProblemParams, epsilon: &Rational, tau: &Rational) -> Vec<Condition> {
    let construction = match lemma {
        Lemma::Local => local_construction(params),
        Lemma::Scattering => scattering_construction(params, Window::Scattering),
        Lemma::Weighted => scattering_construction(params, Window::Weighted),
    };
    (construction.witness)(epsilon, tau).conditions
}

fn run(lemma: Lemma, params: &ProblemParams, c: Construction) -> FeasibilityReport {
    let mut report = FeasibilityReport {
        lemma,
        params: params.clone(),
        feasible: false,
        witness_epsilon: Rational::zero(),
        witness_tau: Rational::zero(),
        pairs: vec![],
        conditions: c.hypotheses.iter().chain(c.core.iter()).cloned().collect(),
        reason: None,
        notes: c.notes.clone(),
    };
    if let Some(bad) = c.hypotheses.iter().find(|h| !h.holds) {
        report.reason = Some(format!("hypothesis {} fails", bad.id));
        return report;
    }
    if let Some(bad) = c.core.iter().find(|h| !h.holds) {
        report.reason = Some(format!("limit condition {} fails at epsilon = tau = 0", bad.id));
        return report;
    }

    let taus: Vec<Rational> =
        if c.uses_tau { (1..=SEARCH_DEPTH).map(dyadic).collect() } else { vec![Rational::zero()] };
    for k in 1..=SEARCH_DEPTH {
        let eps = dyadic(k);
        for tau in &taus {
            let cand = (c.witness)(&eps, tau);
            if cand.conditions.iter().all(|x| x.holds) {
                report.feasible = true;
                report.witness_epsilon = eps.clone();
                report.witness_tau = tau.clone();
                report.conditions.extend(cand.conditions);
                report.conditions.push(Condition::strict("witness_found", eps));
                report.pairs = cand
                    .qs
                    .iter()
                    .chain(c.fixed_qs.iter())
                    .map(|(label, q)| labeled_pair(params, label, q, c.with_m))
                    .collect();
                return report;
            }
        }
    }

    let deepest = dyadic(SEARCH_DEPTH);
    let tau = if c.uses_tau { deepest.clone() } else { Rational::zero() };
    let cand = (c.witness)(&deepest, &tau);
    let failing = cand.conditions.iter().find(|x| !x.holds).map(|x| x.id.clone());
    report.conditions.extend(cand.conditions);
    report.conditions.push(Condition::strict("witness_found", Rational::zero()));
    report.reason = Some(match failing {
        Some(id) => format!("no witness with epsilon, tau >= 2^-{SEARCH_DEPTH}; {id} still fails"),
        None => format!("no witness with epsilon, tau >= 2^-{SEARCH_DEPTH}"),
    });
    report
}

fn labeled_pair(params: &ProblemParams, label: &str, q: &Rational, with_m: bool) -> LabeledPair {
    let pair = ExponentPair::from_q(params.d, Exponent::Finite(q.clone()))
        .expect("witness conditions keep q inside the admissible range");
    let m = with_m.then(|| match &pair.p {
        Exponent::Infinite => Exponent::Finite(params.alpha.clone()),
        Exponent::Finite(p) => Exponent::Finite(&params.alpha * p / (p - int(2))),
    });
    LabeledPair { label: label.to_string(), pair, m }
}

/// Appends `lower < q` (or `≤`) and `q < upper` checks for one exponent.
fn q_bounds(
    out: &mut Vec<Condition>,
    name: &str,
    q: &Rational,
    lower: i64,
    lower_strict: bool,
    upper: Option<Rational>,
) {
    let lo_margin = q - int(lower);
    out.push(if lower_strict {
        Condition::strict(format!("{name}_gt_{lower}"), lo_margin)
    } else {
        Condition::non_strict(format!("{name}_ge_{lower}"), lo_margin)
    });
    if let Some(upper) = upper {
        out.push(Condition::strict(format!("{name}_below_upper"), upper - q));
    }
}

fn sobolev_endpoint(d: u32) -> Rational {
    ratio(2 * d as i64, d as i64 - 2)
}

fn below_energy_critical(params: &ProblemParams) -> Condition {
    let gap = match energy_critical(params.d, &params.b) {
        Exponent::Finite(top) => top - &params.alpha,
        Exponent::Infinite => int(1),
    };
    Condition::strict("alpha_lt_energy_critical", gap)
}

fn at_least_mass_critical(params: &ProblemParams) -> Condition {
    Condition::non_strict("alpha_ge_mass_critical", &params.alpha - mass_critical(params.d, &params.b))
}

fn local_construction(params: &ProblemParams) -> Construction {
    let d = params.d;
    let b = params.b.clone();
    let a = params.alpha.clone();
    match d {
        1 => Construction::unsupported("dimension_at_least_2", int(d as i64 - 2)),
        2 => {
            let hypotheses = vec![Condition::strict("b_lt_1", int(1) - &b)];
            let q2 = &a + int(2);
            Construction {
                hypotheses,
                core: vec![],
                uses_tau: true,
                with_m: false,
                fixed_qs: vec![("q2".into(), q2)],
                notes: vec![],
                witness: Box::new(move |eps, tau| {
                    let mut conditions = vec![Condition::strict("tau_lt_1", int(1) - tau)];
                    let mut qs = vec![];
                    let bases = [("q1_a", int(1) - &b - &a * tau), ("q1_b", int(1) - &b - (&a + int(1)) * tau)];
                    for (name, base) in bases {
                        conditions.push(Condition::strict(format!("{name}_base_positive"), base.clone()));
                        if base.is_positive() {
                            let q = int(2) / base + eps;
                            q_bounds(&mut conditions, name, &q, 2, true, None);
                            qs.push((name.to_string(), q));
                        } else {
                            conditions.push(Condition::strict(format!("{name}_gt_2"), Rational::zero()));
                        }
                    }
                    Candidate { conditions, qs }
                }),
            }
        }
        3 if b >= int(1) => local_construction_d3_mid(params),
        _ => {
            let dr = int(d as i64);
            let mut hypotheses = vec![];
            if d == 3 {
                hypotheses.push(Condition::strict("b_lt_1", int(1) - &b));
            }
            hypotheses.push(below_energy_critical(params));
            let gap = int(4) - int(2) * &b - (&dr - int(2)) * &a;
            let core = vec![
                Condition::strict("theta1_core_positive", gap.clone()),
                Condition::strict("b_lt_d_minus_2", &dr - int(2) - &b),
                Condition::strict("theta2_positive", int(1) - (&dr - int(2)) * &a / int(4)),
            ];
            let q2 = &dr * (&a + int(2)) / (&dr + &a);
            let upper = sobolev_endpoint(d);
            Construction {
                hypotheses,
                core,
                uses_tau: false,
                with_m: false,
                fixed_qs: vec![("q2".into(), q2)],
                notes: vec![],
                witness: Box::new(move |eps, _tau| {
                    let base = &dr * (&a + int(2)) / (&dr + &a - &b);
                    let q1 = base + eps;
                    let mut conditions = vec![];
                    q_bounds(&mut conditions, "q1", &q1, 2, true, Some(upper.clone()));
                    conditions.push(Condition::strict("q1_lt_d", &dr - &q1));
                    let theta1 = &dr * (&a + int(2)) * &gap + eps * (&dr + &a - &b) * (int(4) - &dr * (&a + int(2)));
                    conditions.push(Condition::strict("theta1_positive", theta1));
                    Candidate { conditions, qs: vec![("q1".into(), q1)] }
                }),
            }
        }
    }
}

fn local_construction_d3_mid(params: &ProblemParams) -> Construction {
    let b = params.b.clone();
    let a = params.alpha.clone();
    let cap = (int(6) - int(4) * &b) / (int(2) * &b - int(1));
    let hypotheses = vec![
        Condition::non_strict("b_ge_1", &b - int(1)),
        Condition::strict("b_lt_3_2", ratio(3, 2) - &b),
        Condition::strict("alpha_lt_6m4b_over_2bm1", cap - &a),
    ];
    let f0 = int(8) - int(4) * &b - int(2) * &b * &a;
    let g0 = int(6) - int(4) * &b + &a * (int(1) - int(2) * &b);
    let core = vec![
        Condition::strict("f0_positive", f0.clone()),
        Condition::strict("g0_positive", g0.clone()),
        Condition::strict("theta2_positive", int(1) - &a / int(4)),
    ];
    let q2 = int(3) * (&a + int(2)) / (int(3) + &a);
    Construction {
        hypotheses,
        core,
        uses_tau: true,
        with_m: false,
        fixed_qs: vec![("q2".into(), q2)],
        notes: vec![],
        witness: Box::new(move |eps, tau| {
            let slope = int(2) + int(3) * &a;
            let qa = int(3) * (int(2) + &a * tau) / (int(3) - &b) + eps;
            let qb = int(3) * (int(1) + (&a + int(1)) * tau) / (int(2) - &b) + eps;
            let mut conditions = vec![Condition::strict("tau_lt_1", int(1) - tau)];
            q_bounds(&mut conditions, "q1_a", &qa, 3, false, Some(int(6)));
            let f = int(3) * (&f0 - &a * tau * &slope) - eps * (int(3) - &b) * &slope;
            conditions.push(Condition::strict("f_tau_positive", f));
            q_bounds(&mut conditions, "q1_b", &qb, 3, false, Some(int(6)));
            let g = int(3) * (&g0 - (&a + int(1)) * tau * &slope) - eps * (int(2) - &b) * &slope;
            conditions.push(Condition::strict("g_tau_positive", g));
            Candidate { conditions, qs: vec![("q1_a".into(), qa), ("q1_b".into(), qb)] }
        }),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Window {
    /// `p < 2α+2`.
    Scattering,
    /// `p < α+1`.
    Weighted,
}

/// `d²α³ + 4bdα² + (4d−8+4b²)α + 8b−16`.
fn subcritical_cubic(d: &Rational, b: &Rational, a: &Rational) -> Rational {
    d * d * a * a * a + int(4) * b * d * a * a + (int(4) * d - int(8) + int(4) * b * b) * a + int(8) * b - int(16)
}

fn scattering_construction(params: &ProblemParams, window: Window) -> Construction {
    let d = params.d;
    let dr = int(d as i64);
    let b = params.b.clone();
    let a = params.alpha.clone();
    let weighted = window == Window::Weighted;

    if d == 1 {
        return Construction::unsupported("dimension_at_least_2", int(-1));
    }
    if weighted && d >= 4 {
        return Construction::unsupported("dimension_at_most_3", int(3 - d as i64));
    }
    if d == 2 && b >= int(1) {
        // The construction below divides by 1−b.
        return Construction::unsupported("b_lt_1", int(1) - &b);
    }

    let mut hypotheses = vec![];
    let mut notes = vec![];
    // Quadratic whose positivity is the ε = τ = 0 form of the window
    // condition, and the ε/τ coefficients of its perturbation.
    let (quad, tau_coeff, eps_coeff, base_q, lower, upper, scale): (
        Rational,
        Rational,
        Rational,
        Rational,
        i64,
        Option<Rational>,
        Rational,
    );
    match (d, weighted) {
        (2, false) => {
            hypotheses.push(Condition::strict("b_lt_1", int(1) - &b));
            hypotheses.push(at_least_mass_critical(params));
            quad = &a * &a + &b * &a + &b - int(1);
            tau_coeff = a.clone();
            eps_coeff = &a * (int(1) - &b);
            base_q = int(2) * (&a + int(1)) / (int(1) - &b);
            lower = 2;
            upper = None;
            scale = int(2);
        }
        (2, true) => {
            hypotheses.push(Condition::strict("b_lt_1", int(1) - &b));
            hypotheses.push(at_least_mass_critical(params));
            quad = &a * &a + (&b - int(1)) * &a + &b - int(2);
            tau_coeff = &a - int(1);
            eps_coeff = (int(1) - &b) * (&a - int(1));
            base_q = int(2) * (&a + int(1)) / (int(1) - &b);
            lower = 2;
            upper = None;
            scale = int(2);
            notes.push(format!(
                "quadratic alpha^2+(b-1)alpha+b-2 has positive root 2-b = {}, the d=2 mass-critical power; \
                 the weaker bound alpha > 1-b does not make it positive, so it is evaluated exactly as written",
                super::format_rational(&(int(2) - &b))
            ));
        }
        (3, false) => {
            hypotheses.push(Condition::strict("b_lt_5_4", ratio(5, 4) - &b));
            hypotheses.push(at_least_mass_critical(params));
            hypotheses.push(Condition::strict("alpha_lt_3m2b", int(3) - int(2) * &b - &a));
            quad = int(3) * &a * &a + int(2) * &b * &a + int(2) * &b - int(3);
            tau_coeff = int(3) * &a + int(1);
            eps_coeff = (int(2) - &b) * (int(3) * &a + int(1));
            base_q = int(3) * (&a + int(1)) / (int(2) - &b);
            lower = 3;
            upper = Some(int(6));
            scale = int(3);
        }
        (3, true) => {
            hypotheses.push(Condition::strict("b_lt_1", int(1) - &b));
            hypotheses.push(Condition::strict("alpha_gt_5m2b_over_3", &a - (int(5) - int(2) * &b) / int(3)));
            hypotheses.push(Condition::strict("alpha_lt_3m2b", int(3) - int(2) * &b - &a));
            quad = int(3) * &a * &a + int(2) * (&b - int(1)) * &a + int(2) * &b - int(5);
            tau_coeff = int(3) * &a - int(1);
            eps_coeff = (int(2) - &b) * (int(3) * &a - int(1));
            base_q = int(3) * (&a + int(1)) / (int(2) - &b);
            lower = 3;
            upper = Some(int(6));
            scale = int(3);
        }
        _ => {
            hypotheses.push(at_least_mass_critical(params));
            hypotheses.push(below_energy_critical(params));
            quad = &dr * &a * &a + (&dr - int(2) + int(2) * &b) * &a + int(2) * &b - int(4);
            tau_coeff = Rational::zero();
            eps_coeff = (&dr - &b) * (&dr * (&a + int(1)) - int(2));
            base_q = &dr * (&a + int(2)) / (&dr - &b);
            lower = 2;
            upper = Some(sobolev_endpoint(d));
            scale = dr.clone();
        }
    }

    let mut core = vec![Condition::strict("quadratic_positive", quad.clone())];
    if !weighted {
        core.push(Condition::strict("subcritical_cubic_positive", subcritical_cubic(&dr, &b, &a)));
    }
    let uses_tau = d <= 3;
    let high_dim = d >= 4;
    Construction {
        hypotheses,
        core,
        uses_tau,
        with_m: true,
        fixed_qs: vec![],
        notes,
        witness: Box::new(move |eps, tau| {
            let mut conditions = vec![];
            if uses_tau {
                conditions.push(Condition::strict("tau_lt_1", int(1) - tau));
            }
            let shifted = if uses_tau {
                // q = scale'·(α+1+τ)/(…): the τ shift enters the numerator.
                &base_q + &base_q * tau / (&a + int(1))
            } else {
                base_q.clone()
            };
            let mut qs = vec![];
            for (name, sign) in [("q1", int(1)), ("q2", int(-1))] {
                let q = &shifted + &sign * eps;
                q_bounds(&mut conditions, name, &q, lower, true, upper.clone());
                if high_dim {
                    conditions.push(Condition::strict(format!("{name}_lt_d"), &dr - &q));
                }
                let margin = &scale * (&quad + &tau_coeff * tau) + &sign * eps * &eps_coeff;
                conditions.push(Condition::strict(format!("{name}_window_positive"), margin));
                qs.push((name.to_string(), q));
            }
            Candidate { conditions, qs }
        }),
    }
}
