//! Verdicts over a finished run directory.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::exponents::{mass_critical, Exponent, ExponentPair};
use crate::observables::{decay_fit, g_decay_fit, mixed_norm, pseudoconformal_residual, virial_residual, TimeSeries};
use crate::scattering::cauchy_defect;

use super::{load_checkpoints, load_config, read_series, RunError, CONFIG_FILE, SERIES_FILE};

/// Relative residual bound for the virial and pseudo-conformal identities.
pub const IDENTITY_TOL: f64 = 1e-3;
/// Time range over which the identities are checked.
pub const IDENTITY_WINDOW: (f64, f64) = (0.2, 2.0);
/// Relative slack on a decay slope that is expected to be attained.
pub const SLOPE_REL_TOL: f64 = 0.15;
/// Absolute slack on a slope whose target is 0 (conserved `L²` norm).
pub const SLOPE_ABS_TOL: f64 = 0.02;
/// One-sided slack on the `G` decay bound.
pub const G_SLOPE_TOL: f64 = 0.2;
/// Last over first consecutive Cauchy defect must fall below this.
pub const DEFECT_RATIO: f64 = 0.5;
/// Below this every defect counts as zero (free evolution).
pub const DEFECT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Virial,
    Pseudoconformal,
    Decay,
    Gdecay,
    Scatter,
    Strichartz,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] = [
        ReportKind::Virial,
        ReportKind::Pseudoconformal,
        ReportKind::Decay,
        ReportKind::Gdecay,
        ReportKind::Scatter,
        ReportKind::Strichartz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Virial => "virial",
            ReportKind::Pseudoconformal => "pseudoconformal",
            ReportKind::Decay => "decay",
            ReportKind::Gdecay => "gdecay",
            ReportKind::Scatter => "scatter",
            ReportKind::Strichartz => "strichartz",
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown report kind {s:?}; expected one of virial, pseudoconformal, decay, gdecay, scatter, strichartz"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub kind: ReportKind,
    pub pass: bool,
    /// Whether the run is defocusing, the only case the identities and
    /// decay statements are claimed for.
    pub defocusing: bool,
    pub details: Value,
}

/// Computes the `kind` verdict for the run in `run_dir` and writes it to
/// `report_<kind>.json` there.
pub fn run_report(run_dir: &Path, kind: ReportKind) -> Result<Verdict, RunError> {
    let config = load_config(&run_dir.join(CONFIG_FILE))?;
    let (_, samples) = read_series(&run_dir.join(SERIES_FILE))?;
    let series = TimeSeries::new(config.params(), config.coupling(), samples)?;
    let horizon = series.samples.last().map(|s| s.t).unwrap_or(0.0);
    let (pass, details) = match kind {
        ReportKind::Virial => virial(&series, horizon)?,
        ReportKind::Pseudoconformal => pseudoconformal(&series, horizon)?,
        ReportKind::Decay => decay(&series, &config.q_list, horizon)?,
        ReportKind::Gdecay => gdecay(&series, horizon)?,
        ReportKind::Scatter => scatter(run_dir)?,
        ReportKind::Strichartz => strichartz(&series, &config.q_list, horizon)?,
    };
    let verdict = Verdict { kind, pass, defocusing: config.coupling() < 0.0, details };
    super::write_json(&run_dir.join(format!("report_{kind}.json")), &verdict)?;
    Ok(verdict)
}

fn window_max(points: impl Iterator<Item = (f64, f64)>, window: (f64, f64)) -> f64 {
    points.filter(|(t, _)| *t >= window.0 - 1e-9 && *t <= window.1 + 1e-9).map(|(_, v)| v.abs()).fold(0.0, f64::max)
}

fn virial(series: &TimeSeries, horizon: f64) -> Result<(bool, Value), RunError> {
    let window = (IDENTITY_WINDOW.0, IDENTITY_WINDOW.1.min(horizon));
    let points = virial_residual(series)?;
    let max_rel = window_max(points.iter().map(|p| (p.t, p.relative)), window);
    Ok((
        max_rel < IDENTITY_TOL,
        json!({ "window": [window.0, window.1], "max_relative_residual": max_rel, "tolerance": IDENTITY_TOL }),
    ))
}

fn pseudoconformal(series: &TimeSeries, horizon: f64) -> Result<(bool, Value), RunError> {
    let p = &series.params;
    let conserved = series.coupling == 0.0 || p.alpha == mass_critical(p.d, &p.b);
    let window = (0.0, IDENTITY_WINDOW.1.min(horizon));
    let f0 = series.samples[0].pc_quantity;
    let drift = window_max(series.samples.iter().map(|s| (s.t, (s.pc_quantity - f0) / f0)), window);
    let points = pseudoconformal_residual(series)?;
    let max_rel = window_max(points.iter().map(|p| (p.t, p.relative)), window);
    let pass = if conserved { drift < IDENTITY_TOL } else { max_rel < IDENTITY_TOL };
    Ok((
        pass,
        json!({
            "conserved": conserved,
            "window": [window.0, window.1],
            "max_relative_drift": drift,
            "max_relative_residual": max_rel,
            "tolerance": IDENTITY_TOL,
        }),
    ))
}

/// Fit window for large-time statements: from 2 when the run is long
/// enough to leave eight sample times, from 1 otherwise.
fn fit_window(horizon: f64) -> (f64, f64) {
    if horizon >= 4.0 {
        (2.0, horizon)
    } else {
        (1.0, horizon)
    }
}

fn slope_ok(slope: f64, target: f64, one_sided: bool) -> bool {
    let tol = SLOPE_ABS_TOL.max(SLOPE_REL_TOL * target.abs());
    if one_sided && target != 0.0 {
        slope <= target + tol
    } else {
        (slope - target).abs() <= tol
    }
}

fn decay(series: &TimeSeries, q_list: &[Exponent], horizon: f64) -> Result<(bool, Value), RunError> {
    let p = &series.params;
    // Below the mass-critical power only an upper bound on the rate is known.
    let one_sided = series.coupling != 0.0 && p.alpha < mass_critical(p.d, &p.b);
    let window = fit_window(horizon);
    let mut pass = true;
    let mut fits = Vec::new();
    for q in q_list {
        let fit = decay_fit(series, q, window)?;
        let ok = slope_ok(fit.slope, fit.target, one_sided);
        pass &= ok;
        fits.push(json!({
            "q": q.to_string(),
            "slope": fit.slope,
            "stderr": fit.stderr,
            "target": fit.target,
            "points": fit.points,
            "pass": ok,
        }));
    }
    Ok((pass, json!({ "window": [window.0, window.1], "one_sided": one_sided, "fits": fits })))
}

fn gdecay(series: &TimeSeries, horizon: f64) -> Result<(bool, Value), RunError> {
    let window = fit_window(horizon);
    let fit = g_decay_fit(series, window)?;
    let pass = fit.g_slope <= fit.g_target + G_SLOPE_TOL;
    Ok((pass, json!({ "window": [window.0, window.1], "fit": fit, "tolerance": G_SLOPE_TOL })))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn scatter(run_dir: &Path) -> Result<(bool, Value), RunError> {
    let snapshots = load_checkpoints(run_dir)?;
    let times: Vec<f64> = snapshots.iter().map(|(t, _)| *t).collect();
    let report = cauchy_defect(&snapshots, &times)?;
    let (h1, sigma): (Vec<f64>, Vec<f64>) = report.consecutive().into_iter().unzip();
    let ratio = |v: &[f64]| v[v.len() - 1] / v[0];
    let vanishing = h1.iter().chain(&sigma).all(|d| *d < DEFECT_FLOOR);
    let pass = vanishing
        || (strictly_decreasing(&h1)
            && strictly_decreasing(&sigma)
            && ratio(&h1) < DEFECT_RATIO
            && ratio(&sigma) < DEFECT_RATIO);
    Ok((
        pass,
        json!({
            "checkpoints": times,
            "consecutive_h1": h1,
            "consecutive_sigma": sigma,
            "h1_ratio": ratio(&h1),
            "sigma_ratio": ratio(&sigma),
            "ratio_limit": DEFECT_RATIO,
            "h1_defects": report.h1_defects,
            "sigma_defects": report.sigma_defects,
        }),
    ))
}

/// Windowed mixed norms from the recorded `L^q` columns: `u` over dyadic
/// windows `[2^k, 2^{k+1})` for every admissible pair the columns allow,
/// and `w = (x+2it∇)u` in `L^∞_t L²_x` over unit windows.
fn strichartz(series: &TimeSeries, q_list: &[Exponent], horizon: f64) -> Result<(bool, Value), RunError> {
    let d = series.params.d;
    let dt = series.uniform_spacing()?;
    let slack = 0.5 * dt;
    let mut dyadic = Vec::new();
    let mut a = 2.0;
    while 2.0 * a <= horizon + slack {
        dyadic.push((a, 2.0 * a));
        a *= 2.0;
    }
    let mut pass = true;
    let mut u_norms = Vec::new();
    for q in q_list {
        let Some(pair) = ExponentPair::from_q(d, q.clone()) else { continue };
        let points: Vec<(f64, f64)> = series.samples.iter().map(|s| (s.t, s.lq(q).unwrap_or(f64::NAN))).collect();
        let norms: Vec<f64> = dyadic.iter().map(|w| mixed_norm(&points, &pair.p, *w, dt)).collect();
        let finite = norms.iter().all(|v| v.is_finite());
        // q = 2 is the conserved mass; only the dispersive pairs must decrease.
        let dispersive = q > &Exponent::from_int(2);
        let ok = finite && (!dispersive || strictly_decreasing(&norms));
        pass &= ok;
        u_norms.push(json!({ "p": pair.p.to_string(), "q": q.to_string(), "norms": norms, "pass": ok }));
    }
    let w_points: Vec<(f64, f64)> = series.samples.iter().map(|s| (s.t, s.weighted_norm_sq.sqrt())).collect();
    let unit: Vec<(f64, f64)> =
        (0..).map(|j| (j as f64, j as f64 + 1.0)).take_while(|w| w.1 <= horizon + slack).collect();
    let w_norms: Vec<f64> = unit.iter().map(|w| mixed_norm(&w_points, &Exponent::Infinite, *w, dt)).collect();
    let w_finite = w_norms.iter().all(|v| v.is_finite());
    pass &= w_finite;
    Ok((
        pass,
        json!({
            "u_windows": dyadic.iter().map(|w| [w.0, w.1]).collect::<Vec<_>>(),
            "u_norms": u_norms,
            "w_windows": unit.iter().map(|w| [w.0, w.1]).collect::<Vec<_>>(),
            "w_norms": w_norms,
            "w_finite": w_finite,
        }),
    ))
}
