//! Dense oracle shared by integration tests: every lifted state enumerated
//! directly and the transition matrix multiplied out in full.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rudvalis_core::exact::LiftedChain;
use rudvalis_core::{Deck, LiftedState, Move, ShuffleSpec};

/// Every permutation of 1..=n by recursive insertion; order is irrelevant.
pub fn permutations(n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n as u32);
            out.push(q);
        }
    }
    out
}

/// Moves written out directly on vectors, independent of `Deck::apply`.
pub fn oracle_move(order: &[u32], y: usize, mv: Move) -> (Vec<u32>, usize) {
    let n = order.len();
    let mut o = order.to_vec();
    let shift_left = |o: &mut Vec<u32>| {
        let top = o.remove(0);
        o.push(top);
    };
    let mut y = y as i64;
    match mv {
        Move::Hold => {}
        Move::ShiftLeft => {
            shift_left(&mut o);
            y += 1;
        }
        Move::ShiftRight => {
            let bottom = o.pop().unwrap();
            o.insert(0, bottom);
            y -= 1;
        }
        Move::Swap => o.swap(0, n - 1),
        Move::SwapThenShiftLeft => {
            o.swap(0, n - 1);
            shift_left(&mut o);
            y += 1;
        }
    }
    (o, y.rem_euclid(n as i64) as usize)
}

pub struct DenseOracle {
    states: Vec<(Vec<u32>, usize)>,
    matrix: DMatrix<f64>,
}

impl DenseOracle {
    pub fn new(spec: &ShuffleSpec) -> Self {
        let n = spec.n;
        let states: Vec<(Vec<u32>, usize)> = permutations(n)
            .into_iter()
            .flat_map(|p| (0..n).map(move |y| (p.clone(), y)))
            .collect();
        let index: HashMap<_, _> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let mut matrix = DMatrix::zeros(states.len(), states.len());
        for (i, (o, y)) in states.iter().enumerate() {
            for &(mv, q) in spec.moves().entries() {
                let j = index[&oracle_move(o, *y, mv)];
                matrix[(i, j)] += q;
            }
        }
        DenseOracle { states, matrix }
    }

    /// Row vector `e_start * P^t`, reported against the chain's own indexing.
    pub fn distribution(&self, chain: &LiftedChain, t: usize) -> Vec<f64> {
        let start = self
            .states
            .iter()
            .position(|(o, y)| *y == 0 && o.iter().enumerate().all(|(i, &c)| c as usize == i + 1))
            .unwrap();
        let mut row = DMatrix::zeros(1, self.states.len());
        row[(0, start)] = 1.0;
        for _ in 0..t {
            row = &row * &self.matrix;
        }
        let mut out = vec![0.0; self.states.len()];
        for (i, (o, y)) in self.states.iter().enumerate() {
            let s = LiftedState {
                deck: Deck::from_order(o.clone()).unwrap(),
                y: *y,
            };
            out[chain.index(&s)] = row[(0, i)];
        }
        out
    }
}
