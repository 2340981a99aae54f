//! Exact distributions for small decks.
//!
//! Lifted states are indexed `rank(deck) * n + y` with permutations ranked
//! by Lehmer code. Evolution scatters probability mass over at most four
//! successors per state in ascending state order and a fixed move order, so
//! results are bitwise reproducible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{factorial, rank, unrank};
use crate::shuffle::{Deck, LiftedState, ShuffleSpec};
use crate::spectral::{psi_eval, EigenSystem};

/// Default cap on `n! * n`.
pub const STATE_CAP: u64 = 1_000_000;

/// Largest deck for the single-card position chain.
pub const MAX_CARD_N: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// Lifted states `(deck, y)`, index `rank(deck) * n + y`.
    Lifted { n: usize },
    /// Positions `1..=n` of one card, index `x - 1`.
    Positions { n: usize },
}

/// A probability vector over an enumerated domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistVector {
    pub domain: Domain,
    pub probs: Vec<f64>,
}

impl DistVector {
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal law of the deck (lifted domain) or the distribution itself
    /// (position domain).
    pub fn primary_marginal(&self) -> Vec<f64> {
        match self.domain {
            Domain::Lifted { n } => self.probs.chunks(n).map(|c| c.iter().sum()).collect(),
            Domain::Positions { .. } => self.probs.clone(),
        }
    }

    /// Marginal law of the shift counter; `None` outside the lifted domain.
    pub fn y_marginal(&self) -> Option<Vec<f64>> {
        match self.domain {
            Domain::Lifted { n } => {
                let mut out = vec![0.0; n];
                for (i, p) in self.probs.iter().enumerate() {
                    out[i % n] += p;
                }
                Some(out)
            }
            Domain::Positions { .. } => None,
        }
    }
}

/// Total variation distance from uniform of the deck marginal (lifted
/// domain) or of the position law.
pub fn tv_to_uniform(dist: &DistVector) -> f64 {
    let marginal = dist.primary_marginal();
    let u = 1.0 / marginal.len() as f64;
    0.5 * marginal.iter().map(|p| (p - u).abs()).sum::<f64>()
}

/// The full lifted chain on `n! * n` states.
#[derive(Debug, Clone)]
pub struct LiftedChain {
    spec: ShuffleSpec,
    n: usize,
    /// Per move: probability, counter increment and the successor rank of every rank.
    moves: Vec<(f64, i64, Vec<u32>)>,
}

impl LiftedChain {
    pub fn new(spec: &ShuffleSpec) -> Result<Self> {
        Self::with_cap(spec, STATE_CAP)
    }

    pub fn with_cap(spec: &ShuffleSpec, cap: u64) -> Result<Self> {
        let n = spec.n;
        let states = if n <= 20 {
            factorial(n).saturating_mul(n as u64)
        } else {
            u64::MAX
        };
        if states > cap {
            return Err(Error::StateSpaceCap { states, cap });
        }
        let nperm = factorial(n) as usize;
        let moves = spec
            .moves()
            .iter()
            .map(|(mv, q)| {
                let next: Vec<u32> = (0..nperm)
                    .map(|r| {
                        let mut d =
                            Deck::from_order(unrank(r, n)).expect("unrank gives a permutation");
                        d.apply(mv);
                        rank(d.order()) as u32
                    })
                    .collect();
                (q, mv.shift_delta(), next)
            })
            .collect();
        Ok(LiftedChain {
            spec: *spec,
            n,
            moves,
        })
    }

    pub fn spec(&self) -> &ShuffleSpec {
        &self.spec
    }

    pub fn num_states(&self) -> usize {
        factorial(self.n) as usize * self.n
    }

    pub fn index(&self, state: &LiftedState) -> usize {
        rank(state.deck.order()) * self.n + state.y
    }

    pub fn state(&self, idx: usize) -> LiftedState {
        let deck = Deck::from_order(unrank(idx / self.n, self.n)).expect("valid rank");
        LiftedState {
            deck,
            y: idx % self.n,
        }
    }

    pub fn point_mass(&self, state: &LiftedState) -> DistVector {
        let mut probs = vec![0.0; self.num_states()];
        probs[self.index(state)] = 1.0;
        DistVector {
            domain: Domain::Lifted { n: self.n },
            probs,
        }
    }

    pub fn step(&self, dist: &DistVector) -> DistVector {
        let n = self.n;
        let mut out = vec![0.0; dist.probs.len()];
        for (idx, &mass) in dist.probs.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let (r, y) = (idx / n, idx % n);
            for (q, dy, next) in &self.moves {
                let ny = (y as i64 + dy).rem_euclid(n as i64) as usize;
                out[next[r] as usize * n + ny] += q * mass;
            }
        }
        DistVector {
            domain: dist.domain,
            probs: out,
        }
    }

    pub fn evolve(&self, start: &LiftedState, t: usize) -> DistVector {
        let mut dist = self.point_mass(start);
        for _ in 0..t {
            dist = self.step(&dist);
        }
        dist
    }

    /// `Psi` at every lifted state, with `x0` taken from `start`'s deck.
    pub fn psi_table(&self, es: &EigenSystem, start: &Deck) -> Vec<Complex64> {
        let x0 = start.positions();
        (0..self.num_states())
            .map(|idx| {
                let s = self.state(idx);
                psi_eval(&s.deck, s.y, &x0, es)
            })
            .collect()
    }
}

/// Exact `t`-step distribution from the reference deck with `y = 0`.
pub fn evolve_full(spec: &ShuffleSpec, t: usize) -> Result<DistVector> {
    let chain = LiftedChain::new(spec)?;
    Ok(chain.evolve(&LiftedState::start(spec.n), t))
}

/// Exact first and second moments of `Psi_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiMoments {
    pub t: usize,
    pub mean: Complex64,
    /// `E[|Psi_t|^2]`.
    pub second_abs_moment: f64,
    pub variance: f64,
    /// Total variation of the deck marginal from uniform.
    pub tv: f64,
}

fn moments_at(t: usize, dist: &DistVector, psi: &[Complex64]) -> PsiMoments {
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for (p, v) in dist.probs.iter().zip(psi) {
        mean += v * p;
        second += p * v.norm_sqr();
    }
    PsiMoments {
        t,
        mean,
        second_abs_moment: second,
        variance: (second - mean.norm_sqr()).max(0.0),
        tv: tv_to_uniform(dist),
    }
}

/// Moments of `Psi_t` for `t = 0..=t_max` from `start` (with `y` as given).
pub fn psi_moment_series(
    chain: &LiftedChain,
    es: &EigenSystem,
    start: &LiftedState,
    t_max: usize,
) -> Vec<PsiMoments> {
    let psi = chain.psi_table(es, &start.deck);
    let mut dist = chain.point_mass(start);
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(moments_at(0, &dist, &psi));
    for t in 1..=t_max {
        dist = chain.step(&dist);
        out.push(moments_at(t, &dist, &psi));
    }
    out
}

/// `(E[Psi_t], E[|Psi_t|^2])` from the reference start.
pub fn psi_moments_exact(
    spec: &ShuffleSpec,
    es: &EigenSystem,
    t: usize,
) -> Result<(Complex64, f64)> {
    if es.spec != *spec {
        return Err(Error::InvalidParameter(
            "eigen-system was built for a different shuffle".into(),
        ));
    }
    let chain = LiftedChain::new(spec)?;
    let last = psi_moment_series(&chain, es, &LiftedState::start(spec.n), t)
        .pop()
        .expect("series is never empty");
    Ok((last.mean, last.second_abs_moment))
}

/// The position of one card is itself a Markov chain on `1..=n`.
#[derive(Debug, Clone)]
pub struct CardChain {
    n: usize,
    moves: Vec<(f64, Vec<usize>)>,
}

impl CardChain {
    pub fn new(spec: &ShuffleSpec) -> Result<Self> {
        if spec.n > MAX_CARD_N {
            return Err(Error::StateSpaceCap {
                states: spec.n as u64,
                cap: MAX_CARD_N as u64,
            });
        }
        let n = spec.n;
        let moves = spec
            .moves()
            .iter()
            .map(|(mv, q)| (q, (1..=n).map(|x| mv.card_transition(x, n).0 - 1).collect()))
            .collect();
        Ok(CardChain { n, moves })
    }

    /// Law of a card that starts at position `x0`.
    pub fn start(&self, x0: usize) -> DistVector {
        let mut probs = vec![0.0; self.n];
        probs[x0 - 1] = 1.0;
        DistVector {
            domain: Domain::Positions { n: self.n },
            probs,
        }
    }

    pub fn step(&self, dist: &DistVector) -> DistVector {
        let mut out = vec![0.0; self.n];
        for (q, dest) in &self.moves {
            for (x, &p) in dist.probs.iter().enumerate() {
                out[dest[x]] += q * p;
            }
        }
        DistVector {
            domain: dist.domain,
            probs: out,
        }
    }
}

/// Exact total variation of the top card's position from uniform at each
/// time in `t_grid` (must be nondecreasing).
pub fn single_card_tv_curve(spec: &ShuffleSpec, t_grid: &[u64]) -> Result<Vec<(u64, f64)>> {
    if t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "t-grid must be nondecreasing".into(),
        ));
    }
    let chain = CardChain::new(spec)?;
    let mut dist = chain.start(1);
    let mut t = 0u64;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            dist = chain.step(&dist);
            t += 1;
        }
        out.push((t, tv_to_uniform(&dist)));
    }
    Ok(out)
}

/// First `t` at which the top card's position is within `threshold` of
/// uniform, or `None` if that does not happen by `max_t`.
pub fn single_card_mixing_time(
    spec: &ShuffleSpec,
    threshold: f64,
    max_t: u64,
) -> Result<Option<u64>> {
    let chain = CardChain::new(spec)?;
    let mut dist = chain.start(1);
    for t in 0..=max_t {
        if tv_to_uniform(&dist) < threshold {
            return Ok(Some(t));
        }
        dist = chain.step(&dist);
    }
    Ok(None)
}
