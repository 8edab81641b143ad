//! Conserved and monitored quantities of a field, the virial and
//! pseudo-conformal residuals of a time series, decay-slope fits and
//! windowed space-time norms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{
    decay_exponent, is_admissible, mass_critical, ratio, rational_to_f64, Exponent, ExponentError, ExponentPair,
    ProblemParams,
};
use crate::grid::{ComplexField, SingularWeight};
use crate::par;
use crate::solver::SolverState;

/// Largest spread between consecutive sample spacings treated as uniform.
pub const UNIFORM_SPACING_TOL: f64 = 1e-12;

/// Decay fits ignore samples before this time.
pub const DECAY_FIT_START: f64 = 1.0;

pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("sample spacing {spacing} at index {index} differs from {expected} by more than {UNIFORM_SPACING_TOL:e}")]
    NonUniform { index: usize, spacing: f64, expected: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("v-transform undefined at t = 0")]
    ZeroTime,
    #[error("fit window holds {got} samples with t >= {DECAY_FIT_START}, need {MIN_FIT_SAMPLES}")]
    WindowTooShort { got: usize },
    #[error("alpha = {alpha} is not below the mass-critical power {critical}")]
    WrongRegime { alpha: String, critical: String },
    #[error("({p}, {q}) is not admissible in d = {d}")]
    NotAdmissible { p: String, q: String, d: u32 },
    #[error("q = {0} was not recorded in this series")]
    UnknownQ(String),
    #[error("series must start at t = 0, starts at {0}")]
    NotFromZero(f64),
    #[error("sample times must increase strictly (index {0})")]
    NonIncreasing(usize),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

/// One timestamped record of the monitored quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSample {
    pub t: f64,
    pub mass: f64,
    pub kinetic: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub energy: f64,
    pub variance: f64,
    pub weighted_norm_sq: f64,
    pub pc_quantity: f64,
    pub lq_norms: Vec<(Exponent, f64)>,
    pub h1_norm: f64,
}

impl ObservableSample {
    pub fn lq(&self, q: &Exponent) -> Option<f64> {
        self.lq_norms.iter().find(|(r, _)| r == q).map(|(_, v)| *v)
    }
}

/// Which `L^q` norms to record.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpec {
    pub q_list: Vec<Exponent>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { q_list: vec![Exponent::from_int(2), Exponent::from_int(4), Exponent::Infinite] }
    }
}

/// `‖u‖²` as `h^d Σ|u|²`.
pub fn mass(field: &ComplexField) -> f64 {
    field.norm_sq()
}

/// `‖∇u‖²`, evaluated in Fourier space.
pub fn kinetic(field: &ComplexField) -> f64 {
    kinetic_from_spectrum(field, &field.spectrum())
}

fn kinetic_from_spectrum(field: &ComplexField, coeffs: &[Complex64]) -> f64 {
    let grid = field.grid();
    let scale = grid.cell_volume() / grid.len() as f64;
    scale * par::sum_indexed(coeffs.len(), |i| grid.k_sq(i) * coeffs[i].norm_sqr())
}

/// `G = (1/(α+2)) ∫ W |u|^{α+2}`.
pub fn potential_g(field: &ComplexField, weight: &SingularWeight, alpha: f64) -> f64 {
    let v = field.values();
    let w = weight.values();
    let half = 0.5 * (alpha + 2.0);
    let sum = par::sum_indexed(v.len(), |i| w[i] * v[i].norm_sqr().powf(half));
    field.grid().cell_volume() * sum / (alpha + 2.0)
}

/// `E = ‖∇u‖²/2 − μG`.
pub fn energy(field: &ComplexField, weight: &SingularWeight, params: &ProblemParams) -> f64 {
    0.5 * kinetic(field) - params.mu.value() * potential_g(field, weight, params.alpha_f64())
}

/// `‖xu‖²`.
pub fn variance(field: &ComplexField) -> f64 {
    let grid = field.grid();
    let v = field.values();
    grid.cell_volume() * par::sum_indexed(v.len(), |i| grid.radius_sq(i) * v[i].norm_sqr())
}

/// `max |u|`.
pub fn sup_norm(field: &ComplexField) -> f64 {
    let v = field.values();
    par::max_indexed(v.len(), |i| v[i].norm())
}

/// Discrete `‖u‖_q` with `h^{d/q}` weighting; `q = ∞` is the grid maximum.
pub fn lq_norm(field: &ComplexField, q: &Exponent) -> f64 {
    match q {
        Exponent::Infinite => sup_norm(field),
        Exponent::Finite(r) => {
            let q = rational_to_f64(r);
            let v = field.values();
            let sum = par::sum_indexed(v.len(), |i| v[i].norm_sqr().powf(0.5 * q));
            (field.grid().cell_volume() * sum).powf(1.0 / q)
        }
    }
}

/// Components `x_j u + 2it ∂_j u` of `(x + 2it∇)u`.
pub fn weighted_field(field: &ComplexField, t: f64) -> Vec<ComplexField> {
    let grid = field.grid().clone();
    let grads = if t == 0.0 { Vec::new() } else { field.gradient() };
    let u = field.values();
    (0..grid.d())
        .map(|axis| {
            let values = par::map_collect(u.len(), |i| {
                let xu = u[i] * grid.point(i)[axis];
                if t == 0.0 {
                    xu
                } else {
                    xu + Complex64::new(0.0, 2.0 * t) * grads[axis].values()[i]
                }
            });
            ComplexField::from_values(&grid, values).expect("same grid")
        })
        .collect()
}

/// `‖(x + 2it∇)u‖²`, summed over components.
pub fn weighted_norm_sq(field: &ComplexField, t: f64) -> f64 {
    weighted_field(field, t).iter().map(|c| c.norm_sq()).sum()
}

/// `‖(x + 2it∇)u‖_q` of the vector field, pointwise Euclidean in components.
pub fn weighted_lq_norm(field: &ComplexField, t: f64, q: &Exponent) -> f64 {
    let comps = weighted_field(field, t);
    let grid = field.grid();
    let len = grid.len();
    let modulus_sq = |i: usize| comps.iter().map(|c| c.values()[i].norm_sqr()).sum::<f64>();
    match q {
        Exponent::Infinite => par::max_indexed(len, |i| modulus_sq(i).sqrt()),
        Exponent::Finite(r) => {
            let q = rational_to_f64(r);
            let sum = par::sum_indexed(len, |i| modulus_sq(i).powf(0.5 * q));
            (grid.cell_volume() * sum).powf(1.0 / q)
        }
    }
}

/// `v = e^{-i|x|²/(4t)} u`.
pub fn v_transform(field: &ComplexField, t: f64) -> Result<ComplexField, ObservableError> {
    if t == 0.0 {
        return Err(ObservableError::ZeroTime);
    }
    let grid = field.grid().clone();
    let u = field.values();
    let values = par::map_collect(u.len(), |i| u[i] * Complex64::from_polar(1.0, -grid.radius_sq(i) / (4.0 * t)));
    Ok(ComplexField::from_values(&grid, values).expect("same grid"))
}

/// All monitored quantities of `field` at time `t`. `coupling` is the
/// coefficient of the integrated nonlinearity (`μ`, or 0 for free runs).
pub fn sample_field(
    t: f64,
    field: &ComplexField,
    weight: &SingularWeight,
    alpha: f64,
    coupling: f64,
    spec: &SampleSpec,
) -> ObservableSample {
    let coeffs = field.spectrum();
    let mass = mass(field);
    let kinetic = kinetic_from_spectrum(field, &coeffs);
    let g = potential_g(field, weight, alpha);
    let weighted = weighted_norm_sq(field, t);
    ObservableSample {
        t,
        mass,
        kinetic,
        g,
        energy: 0.5 * kinetic - coupling * g,
        variance: variance(field),
        weighted_norm_sq: weighted,
        pc_quantity: weighted - 8.0 * coupling * t * t * g,
        lq_norms: spec.q_list.iter().map(|q| (q.clone(), lq_norm(field, q))).collect(),
        h1_norm: (mass + kinetic).sqrt(),
    }
}

pub fn sample(state: &SolverState, spec: &SampleSpec) -> ObservableSample {
    sample_field(state.t(), state.field(), state.weight(), state.params().alpha_f64(), state.coupling(), spec)
}

/// Ordered samples of one run together with the data the residuals need.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub params: ProblemParams,
    /// Coefficient of the integrated nonlinearity: `μ`, or 0 for free runs.
    pub coupling: f64,
    pub samples: Vec<ObservableSample>,
    /// `‖xu₀‖²`, taken from the first sample.
    pub initial_weighted: f64,
}

impl TimeSeries {
    pub fn new(params: ProblemParams, coupling: f64, samples: Vec<ObservableSample>) -> Result<Self, ObservableError> {
        if samples.is_empty() {
            return Err(ObservableError::TooFewSamples { needed: 1, got: 0 });
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(ObservableError::NonIncreasing(i + 1));
            }
        }
        let initial_weighted = samples[0].weighted_norm_sq;
        Ok(TimeSeries { params, coupling, samples, initial_weighted })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// `dα + 2b − 4`.
    fn virial_coefficient(&self) -> f64 {
        let d = self.params.d as f64;
        d * self.params.alpha_f64() + 2.0 * self.params.b_f64() - 4.0
    }

    /// Common spacing of the samples, checked to be uniform.
    pub fn uniform_spacing(&self) -> Result<f64, ObservableError> {
        uniform_spacing(&self.times())
    }
}

pub fn uniform_spacing(times: &[f64]) -> Result<f64, ObservableError> {
    if times.len() < 2 {
        return Err(ObservableError::TooFewSamples { needed: 2, got: times.len() });
    }
    let expected = times[1] - times[0];
    for (i, pair) in times.windows(2).enumerate() {
        let spacing = pair[1] - pair[0];
        if (spacing - expected).abs() > UNIFORM_SPACING_TOL {
            return Err(ObservableError::NonUniform { index: i, spacing, expected });
        }
    }
    Ok(expected)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub t: f64,
    pub residual: f64,
    /// `residual` divided by the natural scale of the identity.
    pub relative: f64,
}

/// `V'' − 16E₀ + 4μ(dα+2b−4)G` at interior samples, with `V''` from the
/// central second difference of the variance. Relative values are scaled
/// by `16|E₀|`.
pub fn virial_residual(series: &TimeSeries) -> Result<Vec<ResidualPoint>, ObservableError> {
    let s = &series.samples;
    if s.len() < 3 {
        return Err(ObservableError::TooFewSamples { needed: 3, got: s.len() });
    }
    let dt = series.uniform_spacing()?;
    let e0 = s[0].energy;
    let coeff = 4.0 * series.coupling * series.virial_coefficient();
    let scale = 16.0 * e0.abs();
    Ok((1..s.len() - 1)
        .map(|i| {
            let second = (s[i + 1].variance - 2.0 * s[i].variance + s[i - 1].variance) / (dt * dt);
            let residual = second - 16.0 * e0 + coeff * s[i].g;
            ResidualPoint { t: s[i].t, residual, relative: residual / scale }
        })
        .collect())
}

/// `f(t) − [‖xu₀‖² − 4μ(4−2b−dα) ∫₀ᵗ sG(s) ds]` with `f = ‖(x+2it∇)u‖² − 8μt²G`
/// and the integral by the trapezoid rule over the samples. Relative values
/// are scaled by `‖xu₀‖²`.
pub fn pseudoconformal_residual(series: &TimeSeries) -> Result<Vec<ResidualPoint>, ObservableError> {
    let s = &series.samples;
    if s[0].t != 0.0 {
        return Err(ObservableError::NotFromZero(s[0].t));
    }
    let coeff = -4.0 * series.coupling * -series.virial_coefficient();
    let scale = series.initial_weighted;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        if i > 0 {
            let h = s[i].t - s[i - 1].t;
            integral += 0.5 * h * (s[i].t * s[i].g + s[i - 1].t * s[i - 1].g);
        }
        let residual = s[i].pc_quantity - (series.initial_weighted + coeff * integral);
        out.push(ResidualPoint { t: s[i].t, residual, relative: residual / scale });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ intercept + slope·x` with the slope's
/// standard error.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if xs.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LineFit { slope, intercept, stderr, points: xs.len() }
}

fn log_log_fit<F>(series: &TimeSeries, window: (f64, f64), value: F) -> Result<LineFit, ObservableError>
where
    F: Fn(&ObservableSample) -> f64,
{
    let start = window.0.max(DECAY_FIT_START);
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .samples
        .iter()
        .filter(|s| s.t >= start && s.t <= window.1)
        .map(|s| (s.t.ln(), value(s).ln()))
        .filter(|(_, y)| y.is_finite())
        .unzip();
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(ObservableError::WindowTooShort { got: xs.len() });
    }
    Ok(least_squares(&xs, &ys))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub stderr: f64,
    /// Minus the decay exponent for this `q`.
    pub target: f64,
    pub points: usize,
}

/// Slope of `log ‖u(t)‖_q` against `log t` over `window ∩ [1, ∞)`.
/// Free runs are compared with the linear dispersive rate.
pub fn decay_fit(series: &TimeSeries, q: &Exponent, window: (f64, f64)) -> Result<DecayFit, ObservableError> {
    if series.samples[0].lq(q).is_none() {
        return Err(ObservableError::UnknownQ(q.to_string()));
    }
    let exponent = if series.coupling == 0.0 {
        let mut dispersive = series.params.clone();
        dispersive.alpha = mass_critical(dispersive.d, &dispersive.b);
        decay_exponent(&dispersive, q)?
    } else {
        decay_exponent(&series.params, q)?
    };
    let fit = log_log_fit(series, window, |s| s.lq(q).unwrap_or(f64::NAN))?;
    Ok(DecayFit { slope: fit.slope, stderr: fit.stderr, target: -rational_to_f64(&exponent), points: fit.points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GDecayFit {
    pub g_slope: f64,
    pub g_target: f64,
    /// Slope of `log ‖∇v‖` with `‖∇v‖ = ‖(x+2it∇)u‖/(2t)`.
    pub grad_v_slope: f64,
    pub grad_v_target: f64,
    pub points: usize,
}

/// Log-log slopes of `G(t)` and `‖∇v(t)‖` below the mass-critical power.
pub fn g_decay_fit(series: &TimeSeries, window: (f64, f64)) -> Result<GDecayFit, ObservableError> {
    let p = &series.params;
    let critical = mass_critical(p.d, &p.b);
    if p.alpha >= critical {
        return Err(ObservableError::WrongRegime {
            alpha: crate::exponents::format_rational(&p.alpha),
            critical: crate::exponents::format_rational(&critical),
        });
    }
    let rate = rational_to_f64(&(ratio(2, 1) * &p.b + p.d_rational() * &p.alpha));
    let g = log_log_fit(series, window, |s| s.g)?;
    let grad_v = log_log_fit(series, window, |s| s.weighted_norm_sq.sqrt() / (2.0 * s.t))?;
    Ok(GDecayFit {
        g_slope: g.slope,
        g_target: -rate / 2.0,
        grad_v_slope: grad_v.slope,
        grad_v_target: -rate / 4.0,
        points: g.points,
    })
}

/// `(Σ_{t∈[a,b)} ‖·‖^p Δt)^{1/p}` over `(t, norm)` samples at uniform
/// spacing `dt`; `p = ∞` gives the window maximum. Empty windows give 0.
pub fn mixed_norm(samples: &[(f64, f64)], p: &Exponent, window: (f64, f64), dt: f64) -> f64 {
    let inside = samples.iter().filter(|(t, _)| *t >= window.0 && *t < window.1).map(|(_, v)| *v);
    match p {
        Exponent::Infinite => inside.fold(0.0, f64::max),
        Exponent::Finite(r) => {
            let p = rational_to_f64(r);
            let sum: f64 = inside.map(|v| v.powf(p) * dt).sum();
            sum.powf(1.0 / p)
        }
    }
}

/// Which field a windowed Strichartz norm is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTarget {
    U,
    /// `w = (x + 2it∇)u`.
    W,
}

/// `‖·‖_{L^p([a,b); L^q)}` over stored snapshots, for an admissible pair.
pub fn strichartz_window_norm(
    snapshots: &[(f64, ComplexField)],
    pair: &ExponentPair,
    window: (f64, f64),
    target: NormTarget,
) -> Result<f64, ObservableError> {
    let Some((_, first)) = snapshots.first() else {
        return Err(ObservableError::TooFewSamples { needed: 1, got: 0 });
    };
    let d = first.grid().d() as u32;
    if !is_admissible(pair, d) {
        return Err(ObservableError::NotAdmissible { p: pair.p.to_string(), q: pair.q.to_string(), d });
    }
    let times: Vec<f64> = snapshots.iter().map(|(t, _)| *t).collect();
    let dt = if times.len() > 1 { uniform_spacing(&times)? } else { 1.0 };
    let norms: Vec<(f64, f64)> = snapshots
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t < window.1)
        .map(|(t, f)| {
            let v = match target {
                NormTarget::U => lq_norm(f, &pair.q),
                NormTarget::W => weighted_lq_norm(f, *t, &pair.q),
            };
            (*t, v)
        })
        .collect();
    Ok(mixed_norm(&norms, &pair.p, window, dt))
}
