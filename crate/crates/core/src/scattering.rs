//! Backward free propagation `ψ(t) = e^{-itΔ}u(t)` and the Cauchy defects
//! of `ψ` between checkpoints, in `H¹` and in `Σ = H¹ ∩ L²(|x|²dx)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::grid::ComplexField;
use crate::observables::{kinetic, mass, variance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    #[error("need at least {needed} checkpoints, got {got}")]
    TooFewCheckpoints { needed: usize, got: usize },
    #[error("checkpoints must increase strictly")]
    NotIncreasing,
    #[error("checkpoint t = {t} has no stored field (simulated horizon {horizon})")]
    HorizonExceeded { t: f64, horizon: f64 },
}

/// Two stored times closer than this are the same checkpoint.
const TIME_MATCH: f64 = 1e-9;

/// `e^{-itΔ}` applied to `field`, i.e. the Fourier multiplier `e^{+i|k|²t}`.
pub fn free_propagate_back(field: &ComplexField, t: f64) -> ComplexField {
    if t == 0.0 {
        return field.clone();
    }
    field.apply_multiplier(|k| Complex64::from_polar(1.0, (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * t))
}

/// `e^{itΔ}`, the forward free flow.
pub fn free_propagate(field: &ComplexField, t: f64) -> ComplexField {
    free_propagate_back(field, -t)
}

/// `√(‖u‖² + ‖∇u‖²)`.
pub fn h1_norm(field: &ComplexField) -> f64 {
    (mass(field) + kinetic(field)).sqrt()
}

/// `‖u‖_{H¹} + ‖xu‖`.
pub fn sigma_norm(field: &ComplexField) -> f64 {
    h1_norm(field) + variance(field).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatterReport {
    pub checkpoints: Vec<f64>,
    /// `‖ψ(tᵢ) − ψ(tⱼ)‖_{H¹}`.
    pub h1_defects: Vec<Vec<f64>>,
    /// `‖ψ(tᵢ) − ψ(tⱼ)‖_Σ`.
    pub sigma_defects: Vec<Vec<f64>>,
    /// `ψ` at the last checkpoint.
    #[serde(skip)]
    pub state_estimate: ComplexField,
}

impl ScatterReport {
    /// Defects between consecutive checkpoints, `(H¹, Σ)`.
    pub fn consecutive(&self) -> Vec<(f64, f64)> {
        (1..self.checkpoints.len()).map(|i| (self.h1_defects[i - 1][i], self.sigma_defects[i - 1][i])).collect()
    }
}

/// Cauchy defects of `ψ` over `checkpoints`, using fields stored at those
/// times in `snapshots`.
pub fn cauchy_defect(snapshots: &[(f64, ComplexField)], checkpoints: &[f64]) -> Result<ScatterReport, ScatterError> {
    if checkpoints.len() < 3 {
        return Err(ScatterError::TooFewCheckpoints { needed: 3, got: checkpoints.len() });
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScatterError::NotIncreasing);
    }
    let horizon = snapshots.iter().map(|(t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    let mut psi: Vec<ComplexField> = checkpoints
        .iter()
        .map(|&t| {
            snapshots
                .iter()
                .find(|(s, _)| (s - t).abs() <= TIME_MATCH * t.abs().max(1.0))
                .map(|(s, f)| free_propagate_back(f, *s))
                .ok_or(ScatterError::HorizonExceeded { t, horizon })
        })
        .collect::<Result<_, _>>()?;
    let k = psi.len();
    let mut h1 = vec![vec![0.0; k]; k];
    let mut sigma = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let diff = psi[i].sub(&psi[j]);
            let a = h1_norm(&diff);
            let s = a + variance(&diff).sqrt();
            h1[i][j] = a;
            h1[j][i] = a;
            sigma[i][j] = s;
            sigma[j][i] = s;
        }
    }
    let state_estimate = psi.pop().expect("at least three checkpoints");
    Ok(ScatterReport { checkpoints: checkpoints.to_vec(), h1_defects: h1, sigma_defects: sigma, state_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_data, GaussianSpec, Grid};
    use std::f64::consts::PI;

    fn gaussian() -> ComplexField {
        let g = Grid::new(1, 64.0, 1024).unwrap();
        gaussian_data(&g, &GaussianSpec::centered(1, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn back_and_forth_is_identity() {
        let u = gaussian();
        assert_eq!(free_propagate_back(&u, 0.0).max_abs_diff(&u), 0.0);
        let there = free_propagate(&u, 1.3);
        assert!(free_propagate_back(&there, 1.3).max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn sigma_norm_of_gaussian() {
        let u = gaussian();
        let expected = (PI.sqrt() * 1.5).sqrt() + (PI.sqrt() / 2.0).sqrt();
        assert!((sigma_norm(&u) - expected).abs() < 1e-8);
        let mut scaled = u.clone();
        scaled.scale(Complex64::new(3.0, 0.0));
        assert!((sigma_norm(&scaled) - 3.0 * sigma_norm(&u)).abs() < 1e-12);
        assert_eq!(sigma_norm(&ComplexField::zeros(u.grid())), 0.0);
    }

    #[test]
    fn free_snapshots_have_no_defect() {
        let u = gaussian();
        let times = [0.5, 1.0, 2.0];
        let snaps: Vec<_> = times.iter().map(|&t| (t, free_propagate(&u, t))).collect();
        let r = cauchy_defect(&snaps, &times).unwrap();
        for i in 0..3 {
            assert_eq!(r.h1_defects[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(r.h1_defects[i][j], r.h1_defects[j][i]);
                assert!(r.sigma_defects[i][j] < 1e-12);
            }
        }
        assert!(r.state_estimate.max_abs_diff(&u) < 1e-12);
        assert!(matches!(cauchy_defect(&snaps, &[0.5, 1.0, 4.0]), Err(ScatterError::HorizonExceeded { .. })));
        assert!(cauchy_defect(&snaps, &[0.5, 1.0]).is_err());
    }
}
