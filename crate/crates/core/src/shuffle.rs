//! Decks, elementary moves, the three shuffle distributions and the lifted
//! chain `(X_t, Y_t)`.
//!
//! Positions are 1-based at every public boundary: position 1 is the top of
//! the deck and position `n` the bottom. Card labels are `1..=n`; the
//! reference deck has card `c` at position `c`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An elementary rearrangement of the deck.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Move {
    /// Top card to the bottom.
    ShiftLeft,
    /// Bottom card to the top.
    ShiftRight,
    /// Exchange the top and bottom cards.
    Swap,
    Hold,
    /// `Swap` followed by `ShiftLeft`: the top card lands second from the bottom.
    SwapThenShiftLeft,
}

impl Move {
    pub const ALL: [Move; 5] = [
        Move::ShiftLeft,
        Move::ShiftRight,
        Move::Swap,
        Move::Hold,
        Move::SwapThenShiftLeft,
    ];

    /// Net contribution to the lifted shift counter `y`.
    pub fn shift_delta(self) -> i64 {
        match self {
            Move::ShiftLeft | Move::SwapThenShiftLeft => 1,
            Move::ShiftRight => -1,
            Move::Swap | Move::Hold => 0,
        }
    }

    pub fn involves_swap(self) -> bool {
        matches!(self, Move::Swap | Move::SwapThenShiftLeft)
    }

    pub fn is_shift(self) -> bool {
        self.shift_delta() != 0
    }

    pub fn label(self) -> &'static str {
        match self {
            Move::ShiftLeft => "shift-left",
            Move::ShiftRight => "shift-right",
            Move::Swap => "swap",
            Move::Hold => "hold",
            Move::SwapThenShiftLeft => "swap-then-shift-left",
        }
    }

    /// Where a card at position `x` goes, and the change of its phase `z`.
    ///
    /// The phase only moves when the card takes part in a swap: a card leaving
    /// position 1 through a swap loses one unit, a card leaving position `n`
    /// gains one. Shifts move the card and the counter `y` together.
    pub fn card_transition(self, x: usize, n: usize) -> (usize, i64) {
        debug_assert!((1..=n).contains(&x));
        match self {
            Move::Hold => (x, 0),
            Move::ShiftLeft => (if x == 1 { n } else { x - 1 }, 0),
            Move::ShiftRight => (if x == n { 1 } else { x + 1 }, 0),
            Move::Swap => {
                if x == 1 {
                    (n, -1)
                } else if x == n {
                    (1, 1)
                } else {
                    (x, 0)
                }
            }
            Move::SwapThenShiftLeft => {
                let (mid, dz) = Move::Swap.card_transition(x, n);
                let (end, dz2) = Move::ShiftLeft.card_transition(mid, n);
                (end, dz + dz2)
            }
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An ordering of the cards `1..=n`; `order()[i]` is the card at position `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Deck {
    order: Vec<u32>,
}

impl Deck {
    /// The reference deck: card `c` at position `c`.
    pub fn identity(n: usize) -> Self {
        Deck {
            order: (1..=n as u32).collect(),
        }
    }

    pub fn from_order(order: Vec<u32>) -> Result<Self> {
        let n = order.len();
        if n < 3 {
            return Err(Error::InvalidSpec(format!("deck size {n} < 3")));
        }
        let mut seen = vec![false; n + 1];
        for &c in &order {
            let c = c as usize;
            if c == 0 || c > n || seen[c] {
                return Err(Error::InvalidSpec(format!(
                    "deck is not a permutation of 1..={n}"
                )));
            }
            seen[c] = true;
        }
        Ok(Deck { order })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Card at the 1-based position `x`.
    pub fn card_at(&self, x: usize) -> u32 {
        self.order[x - 1]
    }

    /// `positions()[c - 1]` is the 1-based position of card `c`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &c) in self.order.iter().enumerate() {
            pos[c as usize - 1] = i + 1;
        }
        pos
    }

    pub fn apply(&mut self, mv: Move) {
        let n = self.order.len();
        match mv {
            Move::Hold => {}
            Move::ShiftLeft => self.order.rotate_left(1),
            Move::ShiftRight => self.order.rotate_right(1),
            Move::Swap => self.order.swap(0, n - 1),
            Move::SwapThenShiftLeft => {
                self.order.swap(0, n - 1);
                self.order.rotate_left(1);
            }
        }
    }
}

/// Returns the deck after `mv`.
pub fn apply_move(deck: &Deck, mv: Move) -> Deck {
    let mut next = deck.clone();
    next.apply(mv);
    next
}

/// Which of the three shuffles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShuffleKind {
    /// `SwapThenShiftLeft` with probability `p`, `ShiftLeft` otherwise.
    Rudvalis { p: f64 },
    /// `ShiftLeft` or `Swap`, each with probability 1/2.
    ShiftOrSwap,
    /// `ShiftLeft`, `ShiftRight`, `Swap`, `Hold`, each with probability 1/4.
    Symmetrized,
}

impl ShuffleKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShuffleKind::Rudvalis { .. } => "rudvalis",
            ShuffleKind::ShiftOrSwap => "shift-or-swap",
            ShuffleKind::Symmetrized => "symmetrized",
        }
    }
}

/// A probability distribution over moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveDistribution(Vec<(Move, f64)>);

impl MoveDistribution {
    pub fn new(entries: Vec<(Move, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSpec("empty move distribution".into()));
        }
        if entries.iter().any(|&(_, q)| !(q > 0.0 && q <= 1.0)) {
            return Err(Error::InvalidSpec(
                "move probabilities must lie in (0, 1]".into(),
            ));
        }
        let total: f64 = entries.iter().map(|&(_, q)| q).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "move probabilities sum to {total}, not 1"
            )));
        }
        Ok(MoveDistribution(entries))
    }

    pub fn entries(&self) -> &[(Move, f64)] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Move, f64)> + '_ {
        self.0.iter().copied()
    }

    /// Inverse-CDF lookup for `u` in `[0, 1)`.
    pub fn pick(&self, u: f64) -> Move {
        let mut acc = 0.0;
        for &(mv, q) in &self.0 {
            acc += q;
            if u < acc {
                return mv;
            }
        }
        self.0[self.0.len() - 1].0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Move {
        if self.0.len() == 1 {
            return self.0[0].0;
        }
        self.pick(rng.gen::<f64>())
    }
}

/// A shuffle together with the deck size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShuffleSpec {
    #[serde(flatten)]
    pub kind: ShuffleKind,
    pub n: usize,
}

impl ShuffleSpec {
    pub fn new(kind: ShuffleKind, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSpec(format!(
                "deck size must be at least 3, got {n}"
            )));
        }
        match kind {
            ShuffleKind::Rudvalis { p } if !(p > 0.0 && p < 1.0) => {
                return Err(Error::InvalidSpec(format!(
                    "rudvalis requires 0 < p < 1, got {p}"
                )))
            }
            ShuffleKind::Symmetrized if n % 2 == 0 => {
                return Err(Error::InvalidSpec(format!(
                    "symmetrized shuffle requires odd n, got {n}"
                )))
            }
            _ => {}
        }
        Ok(ShuffleSpec { kind, n })
    }

    pub fn rudvalis(n: usize, p: f64) -> Result<Self> {
        Self::new(ShuffleKind::Rudvalis { p }, n)
    }

    pub fn shift_or_swap(n: usize) -> Result<Self> {
        Self::new(ShuffleKind::ShiftOrSwap, n)
    }

    pub fn symmetrized(n: usize) -> Result<Self> {
        Self::new(ShuffleKind::Symmetrized, n)
    }

    pub fn moves(&self) -> MoveDistribution {
        let entries = match self.kind {
            ShuffleKind::Rudvalis { p } => {
                vec![(Move::SwapThenShiftLeft, p), (Move::ShiftLeft, 1.0 - p)]
            }
            ShuffleKind::ShiftOrSwap => vec![(Move::ShiftLeft, 0.5), (Move::Swap, 0.5)],
            ShuffleKind::Symmetrized => vec![
                (Move::ShiftLeft, 0.25),
                (Move::ShiftRight, 0.25),
                (Move::Swap, 0.25),
                (Move::Hold, 0.25),
            ],
        };
        MoveDistribution(entries)
    }

    /// Even-n shift-or-swap alternates permutation sign every step, so its
    /// distribution never approaches uniform.
    pub fn is_sign_periodic(&self) -> bool {
        matches!(self.kind, ShuffleKind::ShiftOrSwap) && self.n % 2 == 0
    }

    /// Human-readable caveats about this configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.is_sign_periodic() {
            out.push(format!(
                "shift-or-swap with even n = {} is sign-periodic; total variation to uniform does not tend to 0",
                self.n
            ));
        }
        out
    }
}

/// State of the lifted chain: the deck plus the net shift count mod `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedState {
    pub deck: Deck,
    pub y: usize,
}

impl LiftedState {
    pub fn start(n: usize) -> Self {
        LiftedState {
            deck: Deck::identity(n),
            y: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.deck.len()
    }

    pub fn apply(&mut self, mv: Move) {
        let n = self.n() as i64;
        self.deck.apply(mv);
        self.y = (self.y as i64 + mv.shift_delta()).rem_euclid(n) as usize;
    }

    /// Samples a move from `moves`, applies it and returns it.
    pub fn step<R: Rng + ?Sized>(&mut self, moves: &MoveDistribution, rng: &mut R) -> Move {
        let mv = moves.sample(rng);
        self.apply(mv);
        mv
    }
}

/// One step of the lifted chain.
pub fn step_lifted<R: Rng + ?Sized>(
    state: &LiftedState,
    spec: &ShuffleSpec,
    rng: &mut R,
) -> (LiftedState, Move) {
    let mut next = state.clone();
    let mv = next.step(&spec.moves(), rng);
    (next, mv)
}

/// Position and phase of a single tracked card.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardPhase {
    /// Current position, `1..=n`.
    pub x: usize,
    /// `(x - x0 + y) mod n`, in `0..n`.
    pub z: usize,
    /// Initial position.
    pub x0: usize,
}

impl CardPhase {
    pub fn new(x0: usize) -> Self {
        CardPhase { x: x0, z: 0, x0 }
    }

    /// Phase implied by a lifted state: `(x - x0 + y) mod n`.
    pub fn expected_z(x: usize, x0: usize, y: usize, n: usize) -> usize {
        (x as i64 - x0 as i64 + y as i64).rem_euclid(n as i64) as usize
    }
}

pub fn card_phase_update(c: CardPhase, mv: Move, n: usize) -> CardPhase {
    let (x, dz) = mv.card_transition(c.x, n);
    CardPhase {
        x,
        z: (c.z as i64 + dz).rem_euclid(n as i64) as usize,
        x0: c.x0,
    }
}

/// A recorded run of the lifted chain. `steps[i]` holds the state after the
/// `i`-th move together with that move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: LiftedState,
    pub steps: Vec<(LiftedState, Move)>,
}

impl Trajectory {
    pub fn simulate<R: Rng + ?Sized>(
        spec: &ShuffleSpec,
        start: LiftedState,
        t: usize,
        rng: &mut R,
    ) -> Self {
        let moves = spec.moves();
        let mut state = start.clone();
        let mut steps = Vec::with_capacity(t);
        for _ in 0..t {
            let mv = state.step(&moves, rng);
            steps.push((state.clone(), mv));
        }
        Trajectory { start, steps }
    }
}

/// Checks that the incrementally maintained phase of `card` agrees with
/// `(x - x0 + y) mod n` at every recorded state.
pub fn track_consistency(traj: &Trajectory, card: u32) -> bool {
    let n = traj.start.n();
    let x0 = traj.start.deck.positions()[card as usize - 1];
    let mut phase = CardPhase::new(x0);
    if traj.start.y != 0 {
        phase.z = CardPhase::expected_z(x0, x0, traj.start.y, n);
    }
    for (state, mv) in &traj.steps {
        phase = card_phase_update(phase, *mv, n);
        let x = state.deck.positions()[card as usize - 1];
        if x != phase.x || phase.z != CardPhase::expected_z(x, x0, state.y, n) {
            return false;
        }
    }
    true
}
