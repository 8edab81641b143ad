//! Strang-split pseudo-spectral integrator for
//! `i u_t + Δu + μ |x|^{-b} |u|^α u = 0`.
//!
//! The nonlinear flow `i u_t = -μ W |u|^α u` keeps `|u|` fixed pointwise, so
//! its exact solution is a phase rotation; the linear flow is diagonal in
//! Fourier space. One step is `N(dt/2) ∘ L(dt) ∘ N(dt/2)`.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use thiserror::Error;

use crate::exponents::ProblemParams;
use crate::grid::{ComplexField, GridError, SingularWeight};
use crate::observables::{self, ObservableSample, SampleSpec};
use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("boundary contamination at t = {t}: mass fraction {fraction:e} beyond |x_i| > L/4 exceeds {limit:e}")]
    BoundaryContamination { t: f64, fraction: f64, limit: f64 },
    #[error("spectral tail at t = {t}: top-octave power fraction {fraction:e} exceeds {limit:e}")]
    SpectralTail { t: f64, fraction: f64, limit: f64 },
    #[error("overflow at t = {t}: {detail}")]
    Overflow { t: f64, detail: String },
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("t_final = {t_final} is not reachable from t = {t} in whole steps of {dt}")]
    Horizon { t: f64, t_final: f64, dt: f64 },
    #[error("weight and field live on different grids")]
    GridMismatch,
}

/// `e^{iθ}` with the smaller component recomputed from the larger one, so
/// that `|e^{iθ}|² = 1` to far below one ulp whenever `θ` is small. Plain
/// `(cos θ, sin θ)` is off by up to an ulp in modulus, and since the same
/// factors are applied every step that error accumulates as a mass drift.
pub fn unit_phase(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    if c.abs() >= s.abs() {
        Complex64::new(c, f64::mul_add(-c, c, 1.0).max(0.0).sqrt().copysign(s))
    } else {
        Complex64::new(f64::mul_add(-s, s, 1.0).max(0.0).sqrt().copysign(c), s)
    }
}

impl From<GridError> for SolverError {
    fn from(e: GridError) -> Self {
        SolverError::InvalidStep(e.to_string())
    }
}

/// Thresholds of the numerical monitors run at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Guards {
    /// Largest tolerated mass fraction in the band where some `|x_i| > L/4`.
    pub boundary_fraction: f64,
    /// Largest tolerated fraction of `Σ|û|²` in modes with some `|m_i| ≥ n/4`.
    pub spectral_tail: f64,
    /// Largest tolerated growth of `‖u‖_∞` over its initial value.
    pub sup_growth: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards { boundary_fraction: 1e-8, spectral_tail: 1e-6, sup_growth: 1e6 }
    }
}

impl Guards {
    /// Monitors that never fire; used by tests probing raw dynamics.
    pub fn disabled() -> Self {
        Guards { boundary_fraction: f64::INFINITY, spectral_tail: f64::INFINITY, sup_growth: f64::INFINITY }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SolverOptions {
    /// Drop the nonlinear term (free Schrödinger evolution).
    pub free: bool,
    pub guards: Guards,
}

/// Time, field and the fixed data of one evolution.
#[derive(Clone, Debug)]
pub struct SolverState {
    t0: f64,
    steps: i64,
    dt: f64,
    field: ComplexField,
    params: ProblemParams,
    weight: SingularWeight,
    alpha: f64,
    coupling: f64,
    propagator: Vec<Complex64>,
    options: SolverOptions,
    initial_sup: f64,
}

impl SolverState {
    pub fn new(
        field: ComplexField,
        params: ProblemParams,
        weight: SingularWeight,
        dt: f64,
        t0: f64,
        options: SolverOptions,
    ) -> Result<Self, SolverError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SolverError::InvalidStep(format!("dt = {dt} must be positive")));
        }
        if !(t0.is_finite() && t0 >= 0.0) {
            return Err(SolverError::InvalidStep(format!("t0 = {t0} must be nonnegative")));
        }
        if weight.grid() != field.grid() {
            return Err(SolverError::GridMismatch);
        }
        if !field.is_finite() {
            return Err(SolverError::Overflow { t: t0, detail: "initial field is not finite".into() });
        }
        let grid = field.grid().clone();
        let propagator = par::map_collect(grid.len(), |i| unit_phase(-grid.k_sq(i) * dt));
        let coupling = if options.free { 0.0 } else { params.mu.value() };
        let initial_sup = observables::sup_norm(&field);
        Ok(SolverState {
            t0,
            steps: 0,
            dt,
            alpha: params.alpha_f64(),
            field,
            params,
            weight,
            coupling,
            propagator,
            options,
            initial_sup,
        })
    }

    /// Current time `t0 + steps·dt`, computed without accumulation.
    pub fn t(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> i64 {
        self.steps
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn weight(&self) -> &SingularWeight {
        &self.weight
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// Coefficient of the nonlinear term actually integrated: `μ`, or 0 for
    /// free evolution.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `û ← e^{-i|k|²τ} û`.
    pub fn linear_substep(&mut self, tau: f64) {
        if tau == 0.0 {
            return;
        }
        let grid = self.field.grid().clone();
        let mut coeffs = self.field.spectrum();
        par::for_each_mut(&mut coeffs, |i, c| *c *= unit_phase(-grid.k_sq(i) * tau));
        self.field = ComplexField::from_spectrum(&grid, coeffs);
    }

    fn linear_full_step(&mut self) {
        let grid = self.field.grid().clone();
        let values = self.field.values_mut();
        grid.forward(values);
        let prop = &self.propagator;
        par::for_each_mut(values, |i, c| *c *= prop[i]);
        grid.inverse(values);
    }

    /// `u ← u·exp(iμ W |u|^α τ)`, the exact flow of the nonlinear part.
    pub fn nonlinear_substep(&mut self, tau: f64) -> Result<(), SolverError> {
        if tau == 0.0 || self.coupling == 0.0 {
            return Ok(());
        }
        let scale = self.coupling * tau;
        let half_alpha = 0.5 * self.alpha;
        let w = self.weight.values();
        let blown = AtomicBool::new(false);
        par::for_each_mut(self.field.values_mut(), |i, u| {
            let phase = scale * w[i] * u.norm_sqr().powf(half_alpha);
            if !phase.is_finite() {
                blown.store(true, Ordering::Relaxed);
                return;
            }
            *u *= unit_phase(phase);
        });
        if blown.load(Ordering::Relaxed) {
            return Err(SolverError::Overflow { t: self.t(), detail: "|u|^alpha is not finite".into() });
        }
        Ok(())
    }

    /// One Strang step of the configured `dt`.
    pub fn strang_step(&mut self) -> Result<(), SolverError> {
        let half = 0.5 * self.dt;
        self.nonlinear_substep(half)?;
        self.linear_full_step();
        self.nonlinear_substep(half)?;
        self.steps += 1;
        Ok(())
    }

    /// One Strang step of `±dt`; the negative sign undoes [`Self::strang_step`]
    /// up to rounding.
    pub fn strang_step_signed(&mut self, forward: bool) -> Result<(), SolverError> {
        if forward {
            return self.strang_step();
        }
        let half = -0.5 * self.dt;
        self.nonlinear_substep(half)?;
        self.linear_substep(-self.dt);
        self.nonlinear_substep(half)?;
        self.steps -= 1;
        Ok(())
    }

    /// Checks the boundary, spectral-tail and growth monitors.
    pub fn check_guards(&self) -> Result<(), SolverError> {
        let t = self.t();
        let guards = &self.options.guards;
        if !self.field.is_finite() {
            return Err(SolverError::Overflow { t, detail: "field is not finite".into() });
        }
        let sup = observables::sup_norm(&self.field);
        if sup > guards.sup_growth * self.initial_sup {
            return Err(SolverError::Overflow {
                t,
                detail: format!("sup norm {sup:e} exceeds {:e} x initial {:e}", guards.sup_growth, self.initial_sup),
            });
        }
        let fraction = boundary_fraction(&self.field);
        if fraction > guards.boundary_fraction {
            return Err(SolverError::BoundaryContamination { t, fraction, limit: guards.boundary_fraction });
        }
        let fraction = spectral_tail_fraction(&self.field);
        if fraction > guards.spectral_tail {
            return Err(SolverError::SpectralTail { t, fraction, limit: guards.spectral_tail });
        }
        Ok(())
    }

    /// Number of whole steps from the current time to `t_final`.
    pub fn steps_until(&self, t_final: f64) -> Result<u64, SolverError> {
        let span = (t_final - self.t()) / self.dt;
        let rounded = span.round();
        if !(span.is_finite() && rounded >= 0.0 && (span - rounded).abs() <= 1e-6) {
            return Err(SolverError::Horizon { t: self.t(), t_final, dt: self.dt });
        }
        Ok(rounded as u64)
    }

    /// Steps to `t_final`, calling `visit` at the start, after every
    /// `sample_every` steps, and at the end. Guards run before each visit.
    pub fn evolve_with<F>(&mut self, t_final: f64, sample_every: u64, mut visit: F) -> Result<(), SolverError>
    where
        F: FnMut(&SolverState) -> Result<(), SolverError>,
    {
        if sample_every == 0 {
            return Err(SolverError::InvalidStep("sample_every must be positive".into()));
        }
        let total = self.steps_until(t_final)?;
        self.check_guards()?;
        visit(self)?;
        for k in 1..=total {
            self.strang_step()?;
            if k % sample_every == 0 || k == total {
                self.check_guards()?;
                visit(self)?;
            }
        }
        Ok(())
    }

    /// Evolves to `t_final` and returns the observable samples taken along
    /// the way. On a guard failure the samples gathered so far come back
    /// with the error.
    pub fn evolve(
        &mut self,
        t_final: f64,
        sample_every: u64,
        spec: &SampleSpec,
    ) -> Result<Vec<ObservableSample>, EvolveError> {
        let mut samples = Vec::new();
        let result = self.evolve_with(t_final, sample_every, |s| {
            samples.push(observables::sample(s, spec));
            Ok(())
        });
        match result {
            Ok(()) => Ok(samples),
            Err(error) => Err(EvolveError { error, samples }),
        }
    }
}

#[derive(Debug, Error)]
#[error("{error}")]
pub struct EvolveError {
    pub error: SolverError,
    pub samples: Vec<ObservableSample>,
}

/// Mass fraction at points where some `|x_i| > L/4`.
pub fn boundary_fraction(field: &ComplexField) -> f64 {
    let grid = field.grid();
    let quarter = grid.extent() / 4.0;
    let v = field.values();
    let d = grid.d();
    let outer = par::sum_indexed(v.len(), |i| {
        let x = grid.point(i);
        if x[..d].iter().any(|c| c.abs() > quarter) {
            v[i].norm_sqr()
        } else {
            0.0
        }
    });
    let total = par::sum_indexed(v.len(), |i| v[i].norm_sqr());
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Fraction of spectral power `Σ|û|²` in modes with some `|m_i| ≥ n/4`.
pub fn spectral_tail_fraction(field: &ComplexField) -> f64 {
    let grid = field.grid();
    let coeffs = field.spectrum();
    let n = grid.n();
    let d = grid.d();
    let tail = par::sum_indexed(coeffs.len(), |i| {
        let m = grid.multi_index(i);
        let high = m[..d].iter().any(|&j| {
            let signed = if j < n / 2 { j } else { n - j };
            signed >= n / 4
        });
        if high {
            coeffs[i].norm_sqr()
        } else {
            0.0
        }
    });
    let total = par::sum_indexed(coeffs.len(), |i| coeffs[i].norm_sqr());
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}
