//! The eigenfunction lower bound on the mixing time.
//!
//! Given an eigenfunction with `gamma = 1 - Re(lambda) <= 1/2`, start value
//! `psi_max` and a bound `r` on the conditional second moment of one-step
//! increments, the distribution after
//!
//! ```text
//! t <= (ln psi_max + (1/2) ln(gamma * epsilon / (4 r))) / (-ln(1 - gamma))
//! ```
//!
//! steps is still at total variation distance at least `1 - epsilon` from
//! uniform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shuffle::{ShuffleKind, ShuffleSpec};
use crate::spectral::{solve_with, SolverOptions};

/// Largest `t` covered by the lower bound, clamped at 0.
pub fn lower_bound_time(psi_max: f64, gamma: f64, r: f64, epsilon: f64) -> Result<u64> {
    if !(psi_max > 0.0 && psi_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "psi_max must be positive, got {psi_max}"
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "r must be positive, got {r}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if gamma > 0.5 {
        return Err(Error::LemmaInapplicable { gamma });
    }
    let numerator = psi_max.ln() + 0.5 * (gamma * epsilon / (4.0 * r)).ln();
    if numerator <= 0.0 {
        return Ok(0);
    }
    let t = numerator / -(-gamma).ln_1p();
    Ok(t.floor() as u64)
}

/// Leading constant `c` in `c * n^3 ln n` for each shuffle.
pub fn reference_constant(kind: &ShuffleKind) -> f64 {
    match *kind {
        ShuffleKind::Rudvalis { p } => (1.0 - p) / p / (8.0 * PI * PI),
        ShuffleKind::ShiftOrSwap => 1.0 / (2.0 * PI * PI),
        ShuffleKind::Symmetrized => 1.0 / (PI * PI),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub spec: ShuffleSpec,
    pub epsilon: f64,
    pub psi_max: f64,
    pub gamma: f64,
    pub r: f64,
    pub t_lower: u64,
    /// `t_lower / (n^3 ln n)`.
    pub theorem_constant: f64,
    pub reference_constant: f64,
    /// `|theorem_constant / reference_constant - 1|`.
    pub deviation: f64,
}

impl BoundReport {
    pub fn new(spec: ShuffleSpec, epsilon: f64, psi_max: f64, gamma: f64, r: f64) -> Result<Self> {
        let t_lower = lower_bound_time(psi_max, gamma, r, epsilon)?;
        let n = spec.n as f64;
        let theorem_constant = t_lower as f64 / (n.powi(3) * n.ln());
        let reference_constant = reference_constant(&spec.kind);
        Ok(BoundReport {
            spec,
            epsilon,
            psi_max,
            gamma,
            r,
            t_lower,
            theorem_constant,
            reference_constant,
            deviation: (theorem_constant / reference_constant - 1.0).abs(),
        })
    }
}

/// Runs the spectral solver for `spec` and evaluates the bound.
pub fn bound_report(spec: &ShuffleSpec, epsilon: f64, opts: &SolverOptions) -> Result<BoundReport> {
    let es = solve_with(spec, opts)?;
    BoundReport::new(*spec, epsilon, es.psi_max, es.gamma, es.r_bound)
}

/// One report per deck size along an increasing grid.
pub fn theorem_constants(
    kind: ShuffleKind,
    epsilon: f64,
    grid: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<BoundReport>> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n-grid must be strictly increasing".into(),
        ));
    }
    grid.iter()
        .map(|&n| bound_report(&ShuffleSpec::new(kind, n)?, epsilon, opts))
        .collect()
}
