//! Brute-force reference for the exponent engine.
//!
//! Each lemma is restated from its construction: pick `q` from `(ε, τ)`,
//! complete it to an admissible `p` through `2/p = d/2 − d/q`, and test the
//! raw requirement on `p` (`p > α+2`, `p < 2α+2` or `p < α+1`) together with
//! the range of `q`. Nothing here uses the engine's polynomial forms.
//!
//! "ε small enough and τ close to 0" is read literally: a point is feasible
//! when the inequalities hold at every `(2^-i, 2^-j)` with
//! `CORNER_FROM <= i, j <= CORNER_TO`, in either order of magnitude.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub const CORNER_FROM: u32 = 14;
pub const CORNER_TO: u32 = 20;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn two_pow_neg(k: u32) -> Q {
    Q::new(BigInt::one(), BigInt::one() << k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Local,
    Scattering,
    Weighted,
}

/// `2/p` of the admissible pair with spatial exponent `q`.
fn two_over_p(d: &Q, qv: &Q) -> Q {
    d / q(2, 1) - d / qv
}

fn corner() -> Vec<Q> {
    (CORNER_FROM..=CORNER_TO).map(two_pow_neg).collect()
}

/// Every `(ε, τ)` in the corner satisfies `check`.
fn holds_on_corner(uses_tau: bool, check: impl Fn(&Q, &Q) -> bool) -> bool {
    let c = corner();
    let taus = if uses_tau { c.clone() } else { vec![Q::zero()] };
    c.iter().all(|e| taus.iter().all(|t| check(e, t)))
}

pub fn mass_critical(d: u32, b: &Q) -> Q {
    (q(4, 1) - q(2, 1) * b) / q(d as i64, 1)
}

/// `None` stands for `+∞` (d ≤ 2).
pub fn energy_critical(d: u32, b: &Q) -> Option<Q> {
    (d >= 3).then(|| (q(4, 1) - q(2, 1) * b) / q(d as i64 - 2, 1))
}

fn below_energy_critical(d: u32, b: &Q, a: &Q) -> bool {
    energy_critical(d, b).is_none_or(|top| a < &top)
}

pub fn feasible(which: Which, d: u32, b: &Q, a: &Q) -> bool {
    match which {
        Which::Local => local(d, b, a),
        Which::Scattering => window(d, b, a, false),
        Which::Weighted => window(d, b, a, true),
    }
}

fn local(d: u32, b: &Q, a: &Q) -> bool {
    let one = Q::one();
    let two = q(2, 1);
    let dq = q(d as i64, 1);
    // θ > 0 for a pair means p > α+2, i.e. 2/p < 2/(α+2).
    let theta_ok = |qv: &Q| two_over_p(&dq, qv) < &two / (a + &two);
    match d {
        1 => false,
        2 => {
            if b >= &one {
                return false;
            }
            holds_on_corner(true, |e, t| {
                let bases = [&one - b - a * t, &one - b - (a + &one) * t];
                t < &one && bases.iter().all(|base| base > &Q::zero() && &two / base + e > two)
            })
        }
        3 if b >= &one => {
            let cap = (q(6, 1) - q(4, 1) * b) / (q(2, 1) * b - &one);
            if !(b < &q(3, 2) && a < &cap) {
                return false;
            }
            let three = q(3, 1);
            let six = q(6, 1);
            let q2 = &three * (a + &two) / (&three + a);
            if !theta_ok(&q2) {
                return false;
            }
            holds_on_corner(true, |e, t| {
                let qa = &three * (&two + a * t) / (&three - b) + e;
                let qb = &three * (&one + (a + &one) * t) / (&two - b) + e;
                t < &one && [qa, qb].iter().all(|qv| qv >= &three && qv < &six && theta_ok(qv))
            })
        }
        _ => {
            if !below_energy_critical(d, b, a) {
                return false;
            }
            let upper = q(2 * d as i64, d as i64 - 2);
            let q2 = &dq * (a + &two) / (&dq + a);
            if !theta_ok(&q2) {
                return false;
            }
            holds_on_corner(false, |e, _| {
                let q1 = &dq * (a + &two) / (&dq + a - b) + e;
                q1 > two && q1 < upper && q1 < dq && theta_ok(&q1)
            })
        }
    }
}

/// Scattering (`p < 2α+2`) or weighted (`p < α+1`) window.
fn window(d: u32, b: &Q, a: &Q, weighted: bool) -> bool {
    let one = Q::one();
    let two = q(2, 1);
    let dq = q(d as i64, 1);
    let lower_mass = a >= &mass_critical(d, b);
    let in_window = |qv: &Q| {
        let lhs = two_over_p(&dq, qv);
        if weighted {
            lhs > &two / (a + &one)
        } else {
            lhs > &one / (a + &one)
        }
    };
    match d {
        1 => false,
        2 => {
            if !(b < &one && lower_mass) {
                return false;
            }
            holds_on_corner(true, |e, t| {
                let centre = &two * (a + &one + t) / (&one - b);
                t < &one && [&centre + e, &centre - e].iter().all(|qv| qv > &two && in_window(qv))
            })
        }
        3 => {
            let hyp = if weighted {
                b < &one && a > &((q(5, 1) - &two * b) / q(3, 1)) && a < &(q(3, 1) - &two * b)
            } else {
                b < &q(5, 4) && lower_mass && a < &(q(3, 1) - &two * b)
            };
            if !hyp {
                return false;
            }
            let three = q(3, 1);
            let six = q(6, 1);
            holds_on_corner(true, |e, t| {
                let centre = &three * (a + &one + t) / (&two - b);
                t < &one && [&centre + e, &centre - e].iter().all(|qv| qv > &three && qv < &six && in_window(qv))
            })
        }
        _ => {
            if weighted || !(lower_mass && below_energy_critical(d, b, a)) {
                return false;
            }
            let upper = q(2 * d as i64, d as i64 - 2);
            holds_on_corner(false, |e, _| {
                let centre = &dq * (a + &two) / (&dq - b);
                [&centre + e, &centre - e].iter().all(|qv| qv > &two && qv < &upper && qv < &dq && in_window(qv))
            })
        }
    }
}

/// Closed-form positive root of `dα² + (d−2+2b)α + 2b−4`.
pub fn strauss_closed_form(d: u32, b: f64) -> f64 {
    let d = d as f64;
    (2.0 - d - 2.0 * b + (d * d + 12.0 * d + 4.0 + 4.0 * b * (b - 2.0 - d)).sqrt()) / (2.0 * d)
}

/// The 495 interior grid points `d ∈ {2,3,4}`, `b = k/8` (k = 1..=11),
/// `α = j/6` (j = 1..=15).
pub fn grid_points() -> Vec<(u32, Q, Q)> {
    let mut out = Vec::new();
    for d in 2..=4u32 {
        for k in 1..=11 {
            for j in 1..=15 {
                out.push((d, q(k, 8), q(j, 6)));
            }
        }
    }
    out
}

/// Parameters where a defining quadratic or a strict hypothesis is
/// exactly zero, with the lemma it sits on.
pub fn boundary_points() -> Vec<(Which, u32, Q, Q)> {
    vec![
        // α²+(b−1)α+b−2 = 0 at α = 2−b, the mass-critical power.
        (Which::Weighted, 2, q(1, 3), q(5, 3)),
        // 3α²+2(b−1)α+2b−5 = 0 at α = (5−2b)/3.
        (Which::Weighted, 3, q(1, 3), q(13, 9)),
        // α²+bα+b−1 = 0 at α = 1−b.
        (Which::Scattering, 2, q(1, 3), q(2, 3)),
        // 4α²+(2+2b)α+2b−4 = 0 at b = 2/3, α = 1/2.
        (Which::Scattering, 4, q(2, 3), q(1, 2)),
        // 4−2b−(d−2)α = 0: α at the energy-critical power.
        (Which::Local, 4, q(1, 3), q(5, 3)),
    ]
}

/// Sum of a few Gaussian packets with seeded random centres, widths,
/// momenta and phases, all well inside the box so the field is resolved.
pub fn random_packets(grid: &inls::grid::Grid, seed: u64) -> inls::grid::ComplexField {
    use inls::grid::{gaussian_data, GaussianSpec};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.d();
    let reach = grid.extent() / 20.0;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for _ in 0..rng.gen_range(1..=3) {
        let spec = GaussianSpec {
            amplitude: rng.gen_range(0.2..1.5),
            sigma: rng.gen_range(0.6..0.95),
            center: (0..d).map(|_| rng.gen_range(-reach..reach)).collect(),
            momentum: (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        };
        let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let packet = gaussian_data(grid, &spec).expect("packet fits the box");
        for (v, p) in values.iter_mut().zip(packet.values()) {
            *v += phase * p;
        }
    }
    inls::grid::ComplexField::from_values(grid, values).expect("same grid")
}

/// Grid on which [`random_packets`] and its chirped transforms are resolved.
pub fn transform_grid(d: usize) -> inls::grid::Grid {
    let (extent, n) = [(0.0, 0), (40.0, 512), (20.0, 128), (16.0, 64)][d];
    inls::grid::Grid::new(d, extent, n).unwrap()
}

/// Largest relative gaps in `‖v‖_q = ‖u‖_q` (over `q ∈ {2, 10/3, 4, ∞}`)
/// and in `‖(x+2it∇)u‖ = 2|t|‖∇v‖` for one field at one time.
pub fn transform_identity_gaps(u: &inls::grid::ComplexField, t: f64) -> (f64, f64) {
    use inls::exponents::Exponent;
    use inls::observables::{lq_norm, v_transform, weighted_norm_sq};

    let v = v_transform(u, t).unwrap();
    let lq_gap = ["2", "10/3", "4", "inf"]
        .iter()
        .map(|s| {
            let e: Exponent = s.parse().unwrap();
            let (a, b) = (lq_norm(u, &e), lq_norm(&v, &e));
            ((a - b) / a).abs()
        })
        .fold(0.0, f64::max);
    let lhs = weighted_norm_sq(u, t).sqrt();
    let grad_v: f64 = v.gradient().iter().map(|g| g.norm_sq()).sum::<f64>().sqrt();
    let rhs = 2.0 * t.abs() * grad_v;
    (lq_gap, ((lhs - rhs) / lhs).abs())
}
