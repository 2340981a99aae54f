//! Seeded simulation of the lifted chains at deck sizes beyond exact reach.
//!
//! Every trial draws from its own PCG stream derived from `(seed, trial)`, so
//! a batch is reproducible and independent of evaluation order.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shuffle::{Deck, LiftedState, Move, MoveDistribution, ShuffleKind, ShuffleSpec};
use crate::spectral::{psi_eval, EigenSystem};

/// Steps between full recomputations of an incrementally tracked `Psi`.
pub const RENORMALIZE_EVERY: u64 = 10_000;

/// Stream reserved for stationary samples.
const STATIONARY_STREAM: u64 = u64::MAX;

/// Stream reserved for sampled states in [`increment_moment_estimate`].
const INCREMENT_STREAM: u64 = u64::MAX - 1;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// PCG-64 generator for one trial: the state mixes `(seed, trial)` and the
/// trial index selects the stream.
pub fn trial_rng(seed: u64, trial: u64) -> Pcg64 {
    let hi = splitmix64(seed ^ splitmix64(trial));
    let lo = splitmix64(hi ^ 0x6a09_e667_f3bc_c908);
    let state = ((hi as u128) << 64) | lo as u128;
    Pcg64::new(state, trial as u128)
}

/// Inverse-CDF sampler on raw 64-bit draws.
#[derive(Debug, Clone)]
struct MoveSampler {
    moves: Vec<Move>,
    thresholds: Vec<u64>,
}

impl MoveSampler {
    fn new(dist: &MoveDistribution) -> Self {
        let mut acc = 0.0;
        let mut moves = Vec::new();
        let mut thresholds = Vec::new();
        for (mv, q) in dist.iter() {
            acc += q;
            moves.push(mv);
            thresholds.push(if acc >= 1.0 {
                u64::MAX
            } else {
                (acc * 18_446_744_073_709_551_616.0) as u64
            });
        }
        MoveSampler { moves, thresholds }
    }

    #[inline]
    fn sample<R: RngCore>(&self, rng: &mut R) -> Move {
        let u = rng.next_u64();
        for (i, &thr) in self.thresholds.iter().enumerate() {
            if u < thr {
                return self.moves[i];
            }
        }
        self.moves[self.moves.len() - 1]
    }
}

/// Lifted state held as a ring buffer so shifts cost O(1).
#[derive(Debug, Clone)]
pub struct RingWalker {
    buf: Vec<u32>,
    offset: usize,
    y: usize,
}

impl RingWalker {
    pub fn new(state: &LiftedState) -> Self {
        RingWalker {
            buf: state.deck.order().to_vec(),
            offset: 0,
            y: state.y,
        }
    }

    pub fn n(&self) -> usize {
        self.buf.len()
    }

    pub fn y(&self) -> usize {
        self.y
    }

    #[inline]
    fn slot(&self, x: usize) -> usize {
        let i = self.offset + x - 1;
        if i >= self.buf.len() {
            i - self.buf.len()
        } else {
            i
        }
    }

    /// Card at the 1-based position `x`.
    #[inline]
    pub fn card_at(&self, x: usize) -> u32 {
        self.buf[self.slot(x)]
    }

    #[inline]
    fn shift_left(&mut self) {
        let n = self.buf.len();
        self.offset += 1;
        if self.offset == n {
            self.offset = 0;
        }
        self.y += 1;
        if self.y == n {
            self.y = 0;
        }
    }

    #[inline]
    fn swap_ends(&mut self) {
        let (a, b) = (self.slot(1), self.slot(self.buf.len()));
        self.buf.swap(a, b);
    }

    #[inline]
    pub fn apply(&mut self, mv: Move) {
        let n = self.buf.len();
        match mv {
            Move::Hold => {}
            Move::ShiftLeft => self.shift_left(),
            Move::ShiftRight => {
                self.offset = if self.offset == 0 {
                    n - 1
                } else {
                    self.offset - 1
                };
                self.y = if self.y == 0 { n - 1 } else { self.y - 1 };
            }
            Move::Swap => self.swap_ends(),
            Move::SwapThenShiftLeft => {
                self.swap_ends();
                self.shift_left();
            }
        }
    }

    pub fn to_state(&self) -> LiftedState {
        let order = (1..=self.n()).map(|x| self.card_at(x)).collect();
        LiftedState {
            deck: Deck::from_order(order).expect("ring buffer holds a permutation"),
            y: self.y,
        }
    }
}

/// `Psi` maintained in O(1) per step.
///
/// Positions inside the profile's geometric span contribute through one
/// running sum per mode; a shift multiplies every such sum by a constant.
/// Only the cards near the ends of the deck, which can leave the span or be
/// swapped, are removed and re-added explicitly.
#[derive(Debug, Clone)]
pub struct PsiTracker<'a> {
    es: &'a EigenSystem,
    walker: RingWalker,
    x0: Vec<usize>,
    coeffs: Vec<Complex64>,
    /// `ratio_pow[k][x]` for `x` in `0..=n`.
    ratio_pow: Vec<Vec<Complex64>>,
    ratio: Vec<Complex64>,
    ratio_inv: Vec<Complex64>,
    phases: Vec<Complex64>,
    mode_sums: Vec<Complex64>,
    outside: Complex64,
    steps: u64,
}

impl<'a> PsiTracker<'a> {
    /// Starts tracking from `state`; `x0` gives each card's initial position.
    pub fn new(es: &'a EigenSystem, state: &LiftedState, x0: Vec<usize>) -> Self {
        let n = es.n();
        let modal = &es.modal;
        let ratio_pow = modal
            .modes
            .iter()
            .map(|m| (0..=n).map(|x| (m.log_ratio * x as f64).exp()).collect())
            .collect();
        let mut tracker = PsiTracker {
            es,
            walker: RingWalker::new(state),
            x0,
            coeffs: modal.modes.iter().map(|m| m.coeff).collect(),
            ratio_pow,
            ratio: modal.modes.iter().map(|m| m.log_ratio.exp()).collect(),
            ratio_inv: modal.modes.iter().map(|m| (-m.log_ratio).exp()).collect(),
            phases: (0..n as i64).map(|k| es.phase(k)).collect(),
            mode_sums: vec![Complex64::new(0.0, 0.0); modal.modes.len()],
            outside: Complex64::new(0.0, 0.0),
            steps: 0,
        };
        tracker.recompute();
        tracker
    }

    fn recompute(&mut self) {
        self.mode_sums
            .iter_mut()
            .for_each(|s| *s = Complex64::new(0.0, 0.0));
        self.outside = Complex64::new(0.0, 0.0);
        for x in 1..=self.walker.n() {
            let card = self.walker.card_at(x);
            self.contribute(card, x, 1.0);
        }
    }

    #[inline]
    fn contribute(&mut self, card: u32, x: usize, sign: f64) {
        let n = self.walker.n() as i64;
        let z =
            (x as i64 - self.x0[card as usize - 1] as i64 + self.walker.y() as i64).rem_euclid(n);
        let phase = self.phases[z as usize] * sign;
        if x <= self.es.modal.span {
            for (k, s) in self.mode_sums.iter_mut().enumerate() {
                *s += self.ratio_pow[k][x] * phase;
            }
        } else {
            self.outside += self.es.profile(x) * phase;
        }
    }

    pub fn psi(&self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&self.mode_sums)
            .map(|(c, s)| c * s)
            .sum::<Complex64>()
            + self.outside
    }

    pub fn state(&self) -> LiftedState {
        self.walker.to_state()
    }

    pub fn apply(&mut self, mv: Move) {
        let n = self.walker.n();
        let mut edge = [(0u32, 0usize); 4];
        let mut count = 0;
        for x in [1, 2, n - 1, n] {
            if edge[..count].iter().any(|&(_, seen)| seen == x) {
                continue;
            }
            let card = self.walker.card_at(x);
            self.contribute(card, x, -1.0);
            edge[count] = (card, x);
            count += 1;
        }
        self.walker.apply(mv);
        let factor = match mv.shift_delta() {
            1 => Some(&self.ratio_inv),
            -1 => Some(&self.ratio),
            _ => None,
        };
        if let Some(f) = factor {
            for (s, r) in self.mode_sums.iter_mut().zip(f) {
                *s *= r;
            }
        }
        for &(card, x) in &edge[..count] {
            let (next, _) = mv.card_transition(x, n);
            self.contribute(card, next, 1.0);
        }
        self.steps += 1;
        if self.steps % RENORMALIZE_EVERY == 0 {
            self.recompute();
        }
    }
}

/// `Psi_t` from independent trajectories started at the reference deck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatch {
    pub spec: ShuffleSpec,
    pub es: EigenSystem,
    pub t: u64,
    pub trials: usize,
    pub seed: u64,
    pub samples: Vec<Complex64>,
}

impl TrialBatch {
    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance `E|Psi - mean|^2`.
    pub fn variance(&self) -> f64 {
        let m = self.samples.len();
        if m < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.samples
            .iter()
            .map(|s| (s - mean).norm_sqr())
            .sum::<f64>()
            / (m - 1) as f64
    }

    /// Standard error of the sample mean (modulus).
    pub fn standard_error(&self) -> f64 {
        (self.variance() / self.samples.len() as f64).sqrt()
    }
}

fn run_trial(
    spec: &ShuffleSpec,
    sampler: &MoveSampler,
    t: u64,
    seed: u64,
    trial: u64,
) -> RingWalker {
    let mut rng = trial_rng(seed, trial);
    let mut walker = RingWalker::new(&LiftedState::start(spec.n));
    for _ in 0..t {
        walker.apply(sampler.sample(&mut rng));
    }
    walker
}

/// Simulates `trials` trajectories of length `t` and records `Psi_t`.
pub fn sample_psi(es: &EigenSystem, t: u64, trials: usize, seed: u64) -> TrialBatch {
    let spec = es.spec;
    let sampler = MoveSampler::new(&spec.moves());
    let x0 = Deck::identity(spec.n).positions();
    let samples = (0..trials as u64)
        .map(|trial| {
            let state = run_trial(&spec, &sampler, t, seed, trial).to_state();
            psi_eval(&state.deck, state.y, &x0, es)
        })
        .collect();
    TrialBatch {
        spec,
        es: es.clone(),
        t,
        trials,
        seed,
        samples,
    }
}

/// One trajectory with `Psi` tracked incrementally, recorded every `every` steps.
pub fn psi_path(
    es: &EigenSystem,
    t: u64,
    every: u64,
    seed: u64,
    trial: u64,
) -> Vec<(u64, Complex64)> {
    let spec = es.spec;
    let sampler = MoveSampler::new(&spec.moves());
    let start = LiftedState::start(spec.n);
    let mut tracker = PsiTracker::new(es, &start, start.deck.positions());
    let mut rng = trial_rng(seed, trial);
    let every = every.max(1);
    let mut out = vec![(0, tracker.psi())];
    for step in 1..=t {
        tracker.apply(sampler.sample(&mut rng));
        if step % every == 0 || step == t {
            out.push((step, tracker.psi()));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub t: u64,
    pub epsilon: f64,
    /// `sqrt(R / (gamma * epsilon))`.
    pub threshold: f64,
    /// Fraction of time-`t` samples with `|Psi| >= threshold`.
    pub p_time_t: f64,
    /// Fraction of stationary samples with `|Psi| >= threshold`.
    pub p_stationary: f64,
    /// `p_time_t - p_stationary`, a lower estimate of total variation.
    pub empirical_bound: f64,
}

/// `|Psi|` at `count` exactly stationary states: uniform decks with a
/// uniform counter (for Rudvalis the counter is `t mod n`).
pub fn stationary_psi_abs(es: &EigenSystem, t: u64, count: usize, seed: u64) -> Vec<f64> {
    let n = es.n();
    let mut rng = trial_rng(seed, STATIONARY_STREAM);
    let x0 = Deck::identity(n).positions();
    let mut order: Vec<u32> = (1..=n as u32).collect();
    (0..count)
        .map(|_| {
            order.shuffle(&mut rng);
            let y = match es.spec.kind {
                ShuffleKind::Rudvalis { .. } => (t % n as u64) as usize,
                _ => rng.gen_range(0..n),
            };
            let deck = Deck::from_order(order.clone()).expect("shuffled permutation");
            psi_eval(&deck, y, &x0, es).norm()
        })
        .collect()
}

/// `E[|Delta Psi|^2 | state]`, computed exactly over the move distribution.
pub fn increment_moment(es: &EigenSystem, state: &LiftedState) -> f64 {
    let x0 = Deck::identity(es.n()).positions();
    let here = psi_eval(&state.deck, state.y, &x0, es);
    es.spec
        .moves()
        .iter()
        .map(|(mv, q)| {
            let mut next = state.clone();
            next.apply(mv);
            q * (psi_eval(&next.deck, next.y, &x0, es) - here).norm_sqr()
        })
        .sum()
}

/// Largest conditional increment moment seen over the start state and
/// `samples` uniformly random lifted states. This is a sampled lower
/// estimate of the maximum that `r_bound` certifies from above.
pub fn increment_moment_estimate(es: &EigenSystem, samples: usize, seed: u64) -> f64 {
    let n = es.n();
    let mut rng = trial_rng(seed, INCREMENT_STREAM);
    let mut order: Vec<u32> = (1..=n as u32).collect();
    let mut best = increment_moment(es, &LiftedState::start(n));
    for _ in 0..samples {
        order.shuffle(&mut rng);
        let state = LiftedState {
            deck: Deck::from_order(order.clone()).expect("shuffled permutation"),
            y: rng.gen_range(0..n),
        };
        best = best.max(increment_moment(es, &state));
    }
    best
}

/// Distinguishing experiment on the event `{|Psi| >= sqrt(R / (gamma epsilon))}`.
pub fn separation_test(
    batch: &TrialBatch,
    stationary_samples: usize,
    epsilon: f64,
) -> Result<SeparationReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if batch.samples.is_empty() || stationary_samples == 0 {
        return Err(Error::InvalidParameter(
            "need at least one sample on each side".into(),
        ));
    }
    let es = &batch.es;
    let threshold = (es.r_bound / (es.gamma * epsilon)).sqrt();
    let hits = batch
        .samples
        .iter()
        .filter(|s| s.norm() >= threshold)
        .count();
    let p_time_t = hits as f64 / batch.samples.len() as f64;
    let stationary = stationary_psi_abs(es, batch.t, stationary_samples, batch.seed);
    let p_stationary =
        stationary.iter().filter(|&&a| a >= threshold).count() as f64 / stationary_samples as f64;
    Ok(SeparationReport {
        t: batch.t,
        epsilon,
        threshold,
        p_time_t,
        p_stationary,
        empirical_bound: p_time_t - p_stationary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub shifts: u64,
    pub odd: u64,
    pub fraction_odd: f64,
}

/// Runs shift-or-swap until `total_shifts` shifts have occurred and records
/// how often the number of swaps since the previous shift was odd.
pub fn coupling_parity(n: usize, total_shifts: u64, seed: u64) -> Result<ParityReport> {
    let spec = ShuffleSpec::shift_or_swap(n)?;
    let sampler = MoveSampler::new(&spec.moves());
    let mut rng = trial_rng(seed, 0);
    let (mut shifts, mut odd, mut swaps) = (0u64, 0u64, 0u64);
    while shifts < total_shifts {
        match sampler.sample(&mut rng) {
            Move::Swap => swaps += 1,
            _ => {
                shifts += 1;
                odd += swaps % 2;
                swaps = 0;
            }
        }
    }
    Ok(ParityReport {
        shifts,
        odd,
        fraction_odd: if shifts == 0 {
            0.0
        } else {
            odd as f64 / shifts as f64
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub steps: usize,
    pub shift_epochs: usize,
    /// Epochs collapsed into a swap-then-shift-left Rudvalis move.
    pub odd_epochs: usize,
    pub mismatched_epochs: usize,
    pub first_mismatch: Option<usize>,
    /// An odd number of swaps followed the last shift.
    pub pending_swap: bool,
    /// Final decks agree once the pending swap is applied.
    pub final_match: bool,
}

impl EquivalenceReport {
    pub fn matched(&self) -> bool {
        self.mismatched_epochs == 0 && self.final_match
    }
}

/// Replays a shift-or-swap move sequence alongside the Rudvalis chain that
/// takes swap-then-shift-left when an odd number of swaps preceded a shift,
/// and shift-left otherwise, comparing decks at every shift.
pub fn compare_with_rudvalis(n: usize, moves: &[Move]) -> Result<EquivalenceReport> {
    if moves
        .iter()
        .any(|m| !matches!(m, Move::ShiftLeft | Move::Swap))
    {
        return Err(Error::InvalidParameter(
            "shift-or-swap sequences use only shift-left and swap".into(),
        ));
    }
    let mut sos = Deck::identity(n);
    let mut rud = Deck::identity(n);
    let mut report = EquivalenceReport {
        n,
        steps: moves.len(),
        shift_epochs: 0,
        odd_epochs: 0,
        mismatched_epochs: 0,
        first_mismatch: None,
        pending_swap: false,
        final_match: false,
    };
    let mut pending = false;
    for &mv in moves {
        sos.apply(mv);
        if mv == Move::Swap {
            pending = !pending;
            continue;
        }
        rud.apply(if pending {
            Move::SwapThenShiftLeft
        } else {
            Move::ShiftLeft
        });
        report.odd_epochs += pending as usize;
        pending = false;
        if sos != rud {
            report.mismatched_epochs += 1;
            report.first_mismatch.get_or_insert(report.shift_epochs);
        }
        report.shift_epochs += 1;
    }
    report.pending_swap = pending;
    if pending {
        rud.apply(Move::Swap);
    }
    report.final_match = sos == rud;
    Ok(report)
}

/// Random shift-or-swap trajectory of length `t`, compared with Rudvalis(1/3).
pub fn shift_count_equivalence(n: usize, t: usize, seed: u64) -> Result<EquivalenceReport> {
    let spec = ShuffleSpec::shift_or_swap(n)?;
    let sampler = MoveSampler::new(&spec.moves());
    let mut rng = trial_rng(seed, 0);
    let moves: Vec<Move> = (0..t).map(|_| sampler.sample(&mut rng)).collect();
    compare_with_rudvalis(n, &moves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{solve_rudvalis, solve_symmetrized};

    #[test]
    fn ring_walker_matches_deck() {
        let spec = ShuffleSpec::symmetrized(7).unwrap();
        let sampler = MoveSampler::new(&spec.moves());
        let mut rng = trial_rng(5, 0);
        let mut state = LiftedState::start(7);
        let mut walker = RingWalker::new(&state);
        for _ in 0..500 {
            let mv = sampler.sample(&mut rng);
            state.apply(mv);
            walker.apply(mv);
            assert_eq!(walker.to_state(), state);
        }
        let mut s = LiftedState::start(5);
        let mut w = RingWalker::new(&s);
        s.apply(Move::SwapThenShiftLeft);
        w.apply(Move::SwapThenShiftLeft);
        assert_eq!(w.to_state(), s);
    }

    #[test]
    fn sampler_frequencies() {
        let spec = ShuffleSpec::rudvalis(5, 0.3).unwrap();
        let sampler = MoveSampler::new(&spec.moves());
        let mut rng = trial_rng(1, 1);
        let k = 200_000;
        let hits = (0..k)
            .filter(|_| sampler.sample(&mut rng) == Move::SwapThenShiftLeft)
            .count();
        assert!((hits as f64 / k as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn time_zero_samples_equal_start_value() {
        let es = solve_rudvalis(12, 0.5).unwrap();
        let batch = sample_psi(&es, 0, 5, 9);
        let start: Complex64 = es.v.iter().sum();
        assert!(batch.samples.iter().all(|&s| s == start));
    }

    #[test]
    fn tracker_follows_full_recomputation() {
        let es = solve_symmetrized(9).unwrap();
        let start = LiftedState::start(9);
        let x0 = start.deck.positions();
        let mut tracker = PsiTracker::new(&es, &start, x0.clone());
        let mut rng = trial_rng(2, 3);
        let moves = es.spec.moves();
        for _ in 0..2000 {
            tracker.apply(moves.sample(&mut rng));
            let s = tracker.state();
            assert!((tracker.psi() - psi_eval(&s.deck, s.y, &x0, &es)).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_swap_sequence_is_pure_shifting() {
        let moves = vec![Move::ShiftLeft; 17];
        let r = compare_with_rudvalis(6, &moves).unwrap();
        assert!(r.matched());
        assert_eq!(r.shift_epochs, 17);
        assert_eq!(r.odd_epochs, 0);
        assert!(compare_with_rudvalis(6, &[Move::Hold]).is_err());
    }

    #[test]
    fn trailing_swap_is_pending() {
        let r = compare_with_rudvalis(5, &[Move::Swap, Move::ShiftLeft, Move::Swap]).unwrap();
        assert_eq!(r.odd_epochs, 1);
        assert!(r.pending_swap);
        assert!(r.matched());
    }
}
