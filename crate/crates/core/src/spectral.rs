//! Eigenfunctions of the lifted chains.
//!
//! For each shuffle the lifted chain has an eigenfunction of the form
//! `Psi(X, Y) = sum over cards of v(x_card) * w^z_card` with `w = exp(2 pi i / n)`
//! and `z_card = (x_card - x0_card + y) mod n`. The single-card profile `v`
//! and eigenvalue `lambda` are found here:
//!
//! * Rudvalis(p): `v = (lambda^(n-2), ..., lambda, 1, chi)`, `lambda` a root
//!   of `lambda^n - p w lambda^(n-1) - p w^-1 lambda - 1 + 2p` near 1.
//! * shift-or-swap: `v = (mu^(n-2), ..., mu, 1, chi)` with `mu = 2 lambda - 1`.
//! * symmetrized: `v(x) = cos(theta s) + i delta sin(theta s)` for the centred
//!   index `s = x - (n + 1) / 2`, `lambda = (1 + cos theta) / 2`.
//!
//! Roots near 1 are computed in the shifted variable `e = lambda - 1` so the
//! spectral gap `gamma = -Re(e)` keeps full relative precision at large `n`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cexpm1, clog1p, dense_eigenvalues, max_real_part, root_of_unity};
use crate::shuffle::{Deck, MoveDistribution, ShuffleKind, ShuffleSpec};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Tolerances and limits for the root finders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Accepted root residual is `residual_tol * n`.
    pub residual_tol: f64,
    /// Agreement required between the two boundary expressions for `chi` or `delta`.
    pub consistency_tol: f64,
    /// Largest `n` for which the dense eigen-decomposition fallback is attempted.
    pub fallback_max_n: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 100,
            residual_tol: 1e-12,
            consistency_tol: 1e-9,
            fallback_max_n: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMethod {
    Newton,
    Bisection,
    DenseFallback,
}

/// Shuffle-specific parameters of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxParams {
    Chi { chi: Complex64 },
    ThetaDelta { theta: f64, delta: f64 },
}

/// One geometric component `coeff * exp(log_ratio * x)` of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub coeff: Complex64,
    pub log_ratio: Complex64,
}

/// `v(x) = sum_k coeff_k * exp(log_ratio_k * x)` for `1 <= x <= span`; positions
/// above `span` take their value from the profile table. Shifts act on this
/// range by multiplying each mode sum by a constant, which is what makes O(1)
/// incremental evaluation of `Psi` possible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalForm {
    pub modes: Vec<Mode>,
    pub span: usize,
}

impl ModalForm {
    pub fn eval(&self, x: usize) -> Complex64 {
        self.modes
            .iter()
            .map(|m| m.coeff * (m.log_ratio * x as f64).exp())
            .sum()
    }
}

/// Eigenvalue, profile and derived constants for one shuffle at one deck size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub spec: ShuffleSpec,
    pub lambda: Complex64,
    /// `lambda - 1`, carried separately for precision.
    pub lambda_minus_one: Complex64,
    /// `v[x - 1]` is the profile at position `x`.
    pub v: Vec<Complex64>,
    pub w: Complex64,
    pub aux: AuxParams,
    /// `1 - Re(lambda)`.
    pub gamma: f64,
    pub psi_max: f64,
    pub r_bound: f64,
    pub modal: ModalForm,
    pub method: RootMethod,
    pub iterations: usize,
}

impl EigenSystem {
    fn assemble(
        spec: ShuffleSpec,
        e: Complex64,
        v: Vec<Complex64>,
        aux: AuxParams,
        modal: ModalForm,
        method: RootMethod,
        iterations: usize,
    ) -> Self {
        let n = spec.n;
        let mut es = EigenSystem {
            spec,
            lambda: ONE + e,
            lambda_minus_one: e,
            v,
            w: root_of_unity(1, n),
            aux,
            gamma: -e.re,
            psi_max: 0.0,
            r_bound: 0.0,
            modal,
            method,
            iterations,
        };
        es.psi_max = psi_max(&es);
        es.r_bound = r_bound(&es);
        es
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// Profile at the 1-based position `x`.
    pub fn profile(&self, x: usize) -> Complex64 {
        self.v[x - 1]
    }

    /// `w^k` for any integer `k`.
    pub fn phase(&self, k: i64) -> Complex64 {
        root_of_unity(k, self.n())
    }

    /// Value of the chosen root parameter `chi`, if this shuffle has one.
    pub fn chi(&self) -> Option<Complex64> {
        match self.aux {
            AuxParams::Chi { chi } => Some(chi),
            AuxParams::ThetaDelta { .. } => None,
        }
    }
}

/// Single-card transition operator with swap transitions weighted by `w^dz`.
///
/// Rows are indexed by the current position and columns by the next
/// position (both 0-based here), so that `Psi(x, z) = v(x) w^z` is an
/// eigenfunction with eigenvalue `lambda` exactly when `M v = lambda v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedMatrix {
    pub matrix: DMatrix<Complex64>,
}

impl TwistedMatrix {
    pub fn new(n: usize, moves: &MoveDistribution, w: Complex64) -> Self {
        let mut matrix = DMatrix::zeros(n, n);
        for (mv, q) in moves.iter() {
            for x in 1..=n {
                let (next, dz) = mv.card_transition(x, n);
                matrix[(x - 1, next - 1)] += w.powi(dz as i32) * q;
            }
        }
        TwistedMatrix { matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        (0..n)
            .map(|r| (0..n).map(|c| self.matrix[(r, c)] * v[c]).sum())
            .collect()
    }

    pub fn eigenvalues(&self) -> Option<Vec<Complex64>> {
        dense_eigenvalues(&self.matrix)
    }

    /// Sums over the current-position index, one per next position.
    pub fn column_sums(&self) -> Vec<Complex64> {
        (0..self.n())
            .map(|c| self.matrix.column(c).iter().sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<Complex64> {
        (0..self.n())
            .map(|r| self.matrix.row(r).iter().sum())
            .collect()
    }
}

pub fn build_twisted_matrix(spec: &ShuffleSpec) -> TwistedMatrix {
    TwistedMatrix::new(spec.n, &spec.moves(), root_of_unity(1, spec.n))
}

/// Newton iteration in the shifted variable. Stops once the step is
/// negligible relative to the iterate; `None` on divergence or exhaustion.
fn newton<F>(eval: F, start: Complex64, max_iter: usize) -> Option<(Complex64, usize)>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let mut e = start;
    for k in 1..=max_iter {
        let (f, df) = eval(e);
        if !(f.re.is_finite() && f.im.is_finite()) || df.norm() == 0.0 {
            return None;
        }
        let step = f / df;
        e -= step;
        if !(e.re.is_finite() && e.im.is_finite()) {
            return None;
        }
        if step.norm() <= 1e-14 * e.norm() || f.norm() == 0.0 {
            return Some((e, k));
        }
    }
    None
}

fn dense_top_eigenvalue(spec: &ShuffleSpec, opts: &SolverOptions) -> Result<Complex64> {
    if spec.n > opts.fallback_max_n {
        return Err(Error::NoRoot(format!(
            "root finder failed and n = {} exceeds the dense fallback limit {}",
            spec.n, opts.fallback_max_n
        )));
    }
    let ev = build_twisted_matrix(spec)
        .eigenvalues()
        .ok_or_else(|| Error::NoRoot("dense eigen-decomposition did not converge".into()))?;
    max_real_part(&ev).ok_or_else(|| Error::NoRoot("empty spectrum".into()))
}

/// `f(1 + e)` and `f'(1 + e)` for the Rudvalis polynomial, written in terms of
/// `expm1`/`log1p` so every term stays small near `e = 0`.
fn rudvalis_poly(n: usize, p: f64, w: Complex64, e: Complex64) -> (Complex64, Complex64) {
    let nf = n as f64;
    let l = clog1p(e);
    let lam_n_m1 = cexpm1(l * nf); // lambda^n - 1
    let lam_nm1_m1 = cexpm1(l * (nf - 1.0)); // lambda^(n-1) - 1
    let four_sin2 = 4.0 * (PI / nf).sin().powi(2);
    let winv = w.conj();
    let f = lam_n_m1 - w * p * lam_nm1_m1 - winv * p * e + p * four_sin2;
    let lam_nm2 = (l * (nf - 2.0)).exp();
    let df = (ONE + lam_nm1_m1) * nf - w * p * (nf - 1.0) * lam_nm2 - winv * p;
    (f, df)
}

fn rudvalis_chi(n: usize, p: f64, w: Complex64, e: Complex64) -> (Complex64, Complex64) {
    let lam_nm1 = ONE + cexpm1(clog1p(e) * (n as f64 - 1.0));
    let first = (lam_nm1 - w.conj() * p) / (1.0 - p);
    let second = Complex64::new(1.0 - p, 0.0) / (ONE + e - w * p);
    (first, second)
}

/// Eigen-system of the lifted Rudvalis shuffle with swap probability `p`.
pub fn solve_rudvalis(n: usize, p: f64) -> Result<EigenSystem> {
    solve_rudvalis_with(n, p, &SolverOptions::default())
}

pub fn solve_rudvalis_with(n: usize, p: f64, opts: &SolverOptions) -> Result<EigenSystem> {
    let spec = ShuffleSpec::rudvalis(n, p)?;
    if n < 4 {
        return Err(Error::InvalidSpec(format!(
            "rudvalis solver needs n >= 4, got {n}"
        )));
    }
    let w = root_of_unity(1, n);
    let eval = |e| rudvalis_poly(n, p, w, e);
    let accept = |e: Complex64| -> bool {
        let (f, _) = eval(e);
        let (c1, c2) = rudvalis_chi(n, p, w, e);
        f.norm() < opts.residual_tol * n as f64
            && (c1 - c2).norm() < opts.consistency_tol
            && e.re < 0.0
            && (ONE + e).norm() < 1.0
    };

    let (e, method, iters) = match newton(eval, Complex64::new(0.0, 0.0), opts.max_iter) {
        Some((e, k)) if accept(e) => (e, RootMethod::Newton, k),
        _ => {
            let top = dense_top_eigenvalue(&spec, opts)?;
            let (e, k) = newton(eval, top - ONE, opts.max_iter).unwrap_or((top - ONE, 0));
            if !accept(e) {
                return Err(Error::NoRoot(format!(
                    "rudvalis n = {n}, p = {p}: no acceptable root near 1"
                )));
            }
            (e, RootMethod::DenseFallback, k)
        }
    };

    let (chi, _) = rudvalis_chi(n, p, w, e);
    let l = clog1p(e);
    let nf = n as f64;
    let mut v: Vec<Complex64> = (1..n).map(|x| (l * (nf - 1.0 - x as f64)).exp()).collect();
    v.push(chi);
    let modal = ModalForm {
        modes: vec![Mode {
            coeff: (l * (nf - 1.0)).exp(),
            log_ratio: -l,
        }],
        span: n - 1,
    };
    Ok(EigenSystem::assemble(
        spec,
        e,
        v,
        AuxParams::Chi { chi },
        modal,
        method,
        iters,
    ))
}

/// `g(1 + e)` and its derivative for the equation obtained by equating the
/// two boundary expressions for `chi`:
/// `4 lambda^2 mu^(n-2) - (1 + w^-1)(1 + w mu^(n-2))`, `mu = 2 lambda - 1`.
fn shift_or_swap_eq(n: usize, w: Complex64, e: Complex64) -> (Complex64, Complex64) {
    let nf = n as f64;
    let lmu = clog1p(e * 2.0);
    let m = cexpm1(lmu * (nf - 2.0)); // mu^(n-2) - 1
    let four_sin2 = 4.0 * (PI / nf).sin().powi(2);
    let poly = -w + 3.0 + e * 8.0 + e * e * 4.0; // 4 lambda^2 - 1 - w
    let g = e * 8.0 + e * e * 4.0 + m * poly + four_sin2;
    let dm = (lmu * (nf - 3.0)).exp() * (2.0 * (nf - 2.0));
    let dg = (ONE + e) * 8.0 * (ONE + m) + dm * poly;
    (g, dg)
}

fn shift_or_swap_chi(n: usize, w: Complex64, e: Complex64) -> (Complex64, Complex64) {
    let mu_nm2 = ONE + cexpm1(clog1p(e * 2.0) * (n as f64 - 2.0));
    let lam = ONE + e;
    let first = lam * 2.0 * mu_nm2 / (ONE + w.conj());
    let second = (ONE + w * mu_nm2) / (lam * 2.0);
    (first, second)
}

/// Eigen-system of the lifted shift-or-swap shuffle.
pub fn solve_shift_or_swap(n: usize) -> Result<EigenSystem> {
    solve_shift_or_swap_with(n, &SolverOptions::default())
}

pub fn solve_shift_or_swap_with(n: usize, opts: &SolverOptions) -> Result<EigenSystem> {
    let spec = ShuffleSpec::shift_or_swap(n)?;
    if n < 5 {
        return Err(Error::InvalidSpec(format!(
            "shift-or-swap solver needs n >= 5, got {n}"
        )));
    }
    let w = root_of_unity(1, n);
    let eval = |e| shift_or_swap_eq(n, w, e);
    let accept = |e: Complex64| -> bool {
        let (g, _) = eval(e);
        let (c1, c2) = shift_or_swap_chi(n, w, e);
        g.norm() < opts.residual_tol * n as f64
            && (c1 - c2).norm() < opts.consistency_tol
            && e.re < 0.0
            && (ONE + e).norm() < 1.0
    };

    let (e, method, iters) = match newton(eval, Complex64::new(0.0, 0.0), opts.max_iter) {
        Some((e, k)) if accept(e) => (e, RootMethod::Newton, k),
        _ => {
            let top = dense_top_eigenvalue(&spec, opts)?;
            let (e, k) = newton(eval, top - ONE, opts.max_iter).unwrap_or((top - ONE, 0));
            if !accept(e) {
                return Err(Error::NoRoot(format!(
                    "shift-or-swap n = {n}: no acceptable root near 1"
                )));
            }
            (e, RootMethod::DenseFallback, k)
        }
    };

    let (chi, _) = shift_or_swap_chi(n, w, e);
    let lmu = clog1p(e * 2.0);
    let nf = n as f64;
    let mut v: Vec<Complex64> = (1..n)
        .map(|x| (lmu * (nf - 1.0 - x as f64)).exp())
        .collect();
    v.push(chi);
    let modal = ModalForm {
        modes: vec![Mode {
            coeff: (lmu * (nf - 1.0)).exp(),
            log_ratio: -lmu,
        }],
        span: n - 1,
    };
    Ok(EigenSystem::assemble(
        spec,
        e,
        v,
        AuxParams::Chi { chi },
        modal,
        method,
        iters,
    ))
}

/// Boundary equation for the symmetrized profile, as a function of `theta`.
pub fn symmetrized_equation(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    let c = (2.0 * PI / nf).cos();
    (0.5 + c) * ((nf - 1.0) * theta).sin() - 0.5 * ((nf + 1.0) * theta).sin() - (nf * theta).sin()
        + (1.0 + c) * theta.sin()
}

fn symmetrized_equation_derivative(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    let c = (2.0 * PI / nf).cos();
    (0.5 + c) * (nf - 1.0) * ((nf - 1.0) * theta).cos()
        - 0.5 * (nf + 1.0) * ((nf + 1.0) * theta).cos()
        - nf * (nf * theta).cos()
        + (1.0 + c) * theta.cos()
}

/// The two expressions for `delta` obtained from the real and imaginary parts
/// of the boundary constraint. They agree exactly at roots of
/// [`symmetrized_equation`].
pub fn symmetrized_deltas(n: usize, theta: f64) -> (f64, f64) {
    let nf = n as f64;
    let (s, c) = (2.0 * PI / nf).sin_cos();
    let kappa = 2.0 * (PI / nf).sin().powi(2); // 1 - cos(2 pi / n)
    let a = theta * (nf - 1.0) / 2.0;
    // cos(2pi/n) cos(a) - cos(a + theta), rearranged to avoid cancellation
    let num = 2.0 * (a + theta / 2.0).sin() * (theta / 2.0).sin() - kappa * a.cos();
    let from_real = num / (-s * a.sin());
    let from_imag = s * a.cos() / ((2.0 + c) * a.sin() + (a + theta).sin());
    (from_real, from_imag)
}

/// Smallest positive root of [`symmetrized_equation`], found by scanning for
/// the first sign change up to `2 theta_hat` (then `4 theta_hat`) and refining
/// by bisection with a final guarded Newton step.
fn symmetrized_theta(n: usize, opts: &SolverOptions) -> Result<(f64, usize)> {
    let theta_hat = SQRT_2 * PI * (n as f64).powf(-1.5);
    let f = |t| symmetrized_equation(n, t);
    const GRID: usize = 512;
    let mut bracket = None;
    'widen: for reach in [2.0, 4.0] {
        let hi = reach * theta_hat;
        let mut prev = (hi / GRID as f64, f(hi / GRID as f64));
        for k in 2..=GRID {
            let t = hi * k as f64 / GRID as f64;
            let ft = f(t);
            if prev.1 == 0.0 {
                bracket = Some((prev.0, prev.0));
                break 'widen;
            }
            if prev.1.signum() != ft.signum() {
                bracket = Some((prev.0, t));
                break 'widen;
            }
            prev = (t, ft);
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::NoRoot(format!(
            "symmetrized n = {n}: no sign change below 4 * theta_hat"
        ))
    })?;
    let mut iters = 0;
    let mut flo = f(lo);
    while hi - lo > 4.0 * f64::EPSILON * hi && iters < 4 * opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    let mut theta = 0.5 * (lo + hi);
    let d = symmetrized_equation_derivative(n, theta);
    if d != 0.0 {
        let polished = theta - f(theta) / d;
        if polished >= lo && polished <= hi {
            theta = polished;
        }
    }
    Ok((theta, iters))
}

/// Eigen-system of the lifted symmetrized shuffle (odd `n >= 5`).
pub fn solve_symmetrized(n: usize) -> Result<EigenSystem> {
    solve_symmetrized_with(n, &SolverOptions::default())
}

pub fn solve_symmetrized_with(n: usize, opts: &SolverOptions) -> Result<EigenSystem> {
    let spec = ShuffleSpec::symmetrized(n)?;
    if n < 5 {
        return Err(Error::InvalidSpec(format!(
            "symmetrized solver needs n >= 5, got {n}"
        )));
    }
    let (theta, iters) = symmetrized_theta(n, opts)?;
    if theta <= 0.0 {
        return Err(Error::NoRoot(
            "symmetrized: root collapsed to theta = 0".into(),
        ));
    }
    let (d_real, d_imag) = symmetrized_deltas(n, theta);
    if !((d_real - d_imag).abs() < opts.consistency_tol) {
        return Err(Error::NoRoot(format!(
            "symmetrized n = {n}: delta expressions disagree ({d_real} vs {d_imag})"
        )));
    }
    let delta = d_imag;
    let centre = (n as f64 + 1.0) / 2.0;
    let v: Vec<Complex64> = (1..=n)
        .map(|x| {
            let s = x as f64 - centre;
            Complex64::new((theta * s).cos(), delta * (theta * s).sin())
        })
        .collect();
    let i_theta = Complex64::new(0.0, theta);
    let modal = ModalForm {
        modes: vec![
            Mode {
                coeff: (-i_theta * centre).exp() * (0.5 * (1.0 + delta)),
                log_ratio: i_theta,
            },
            Mode {
                coeff: (i_theta * centre).exp() * (0.5 * (1.0 - delta)),
                log_ratio: -i_theta,
            },
        ],
        span: n,
    };
    let e = Complex64::new(-(theta / 2.0).sin().powi(2), 0.0);
    Ok(EigenSystem::assemble(
        spec,
        e,
        v,
        AuxParams::ThetaDelta { theta, delta },
        modal,
        RootMethod::Bisection,
        iters,
    ))
}

/// Dispatches to the solver for `spec.kind`.
pub fn solve(spec: &ShuffleSpec) -> Result<EigenSystem> {
    solve_with(spec, &SolverOptions::default())
}

pub fn solve_with(spec: &ShuffleSpec, opts: &SolverOptions) -> Result<EigenSystem> {
    match spec.kind {
        ShuffleKind::Rudvalis { p } => solve_rudvalis_with(spec.n, p, opts),
        ShuffleKind::ShiftOrSwap => solve_shift_or_swap_with(spec.n, opts),
        ShuffleKind::Symmetrized => solve_symmetrized_with(spec.n, opts),
    }
}

/// Per-position eigen-residual `|E[v(x') w^dz] - lambda v(x)|`.
pub fn eigen_residuals(es: &EigenSystem) -> Vec<f64> {
    let n = es.n();
    let moves = es.spec.moves();
    (1..=n)
        .map(|x| {
            let mean: Complex64 = moves
                .iter()
                .map(|(mv, q)| {
                    let (next, dz) = mv.card_transition(x, n);
                    es.profile(next) * es.phase(dz) * q
                })
                .sum();
            (mean - es.lambda * es.profile(x)).norm()
        })
        .collect()
}

/// Largest one-step eigen-residual over single-card states. Phase symmetry
/// reduces the check to `z = 0`.
pub fn verify_eigensystem(es: &EigenSystem) -> f64 {
    eigen_residuals(es).into_iter().fold(0.0, f64::max)
}

/// `Psi` at a lifted state. `x0[c - 1]` is the initial position of card `c`.
pub fn psi_eval(deck: &Deck, y: usize, x0: &[usize], es: &EigenSystem) -> Complex64 {
    let n = es.n() as i64;
    deck.order()
        .iter()
        .enumerate()
        .map(|(i, &card)| {
            let x = i + 1;
            let z = (x as i64 - x0[card as usize - 1] as i64 + y as i64).rem_euclid(n);
            es.profile(x) * es.phase(z)
        })
        .sum()
}

/// `|sum_x v(x)|`, the modulus of `Psi` at the start where every phase is 1.
pub fn psi_max(es: &EigenSystem) -> f64 {
    es.v.iter().sum::<Complex64>().norm()
}

/// Sum over positions of the worst-case `|Delta Psi_card|` for one move.
/// Every move permutes positions, so this bounds `|Delta Psi|` at any state.
pub fn move_increment_bound(es: &EigenSystem, mv: crate::shuffle::Move) -> f64 {
    let n = es.n();
    (1..=n)
        .map(|x| {
            let (next, dz) = mv.card_transition(x, n);
            (es.profile(next) * es.phase(dz) - es.profile(x)).norm()
        })
        .sum()
}

/// Certified bound on `max_state E[|Delta Psi|^2 | state]`.
pub fn r_bound(es: &EigenSystem) -> f64 {
    es.spec
        .moves()
        .iter()
        .map(|(mv, q)| q * move_increment_bound(es, mv).powi(2))
        .sum()
}
