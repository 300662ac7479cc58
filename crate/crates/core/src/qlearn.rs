//! The 4×4 Q-table arbitrating between the four operators.
//!
//! Rows are states and columns actions, both indexed by [`OperatorKind`].
//! Taking action `a` moves the agent into state `a`, so the lookahead term of
//! an update is the maximum of row `a`.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{config_err, Result};
use crate::num::Real;
use crate::operators::OperatorKind;

const N: usize = 4;

/// Default discount factor.
pub const DEFAULT_GAMMA: f64 = 0.8;

/// Learning rate `1 − 0.9·t/T`, falling from 1.0 to 0.1.
pub fn alpha<F: Real>(t: u32, max_t: u32) -> F {
    debug_assert!(max_t >= 1 && t <= max_t);
    F::one() - F::lit(0.9) * F::lit(t as f64) / F::lit(max_t as f64)
}

/// `+1` on strict improvement, `−1` otherwise.
pub fn reward<F: Real>(old_fitness: u64, new_fitness: u64) -> F {
    if new_fitness > old_fitness {
        F::one()
    } else {
        -F::one()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable<F> {
    q: [[F; N]; N],
    gamma: F,
    state: OperatorKind,
}

impl<F: Real> QTable<F> {
    /// All-zero table starting in `state`.
    pub fn new(gamma: F, state: OperatorKind) -> Result<Self> {
        if !(gamma >= F::zero() && gamma <= F::one()) {
            return config_err(format!("gamma must lie in [0, 1], got {gamma}"));
        }
        Ok(Self { q: [[F::zero(); N]; N], gamma, state })
    }

    /// All-zero table in a uniformly random starting state.
    pub fn with_random_state<R: Rng + ?Sized>(gamma: F, rng: &mut R) -> Result<Self> {
        Self::new(gamma, random_operator(rng))
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn state(&self) -> OperatorKind {
        self.state
    }

    pub fn set_state(&mut self, state: OperatorKind) {
        self.state = state;
    }

    pub fn entry(&self, s: OperatorKind, a: OperatorKind) -> F {
        self.q[s.index()][a.index()]
    }

    pub fn set_entry(&mut self, s: OperatorKind, a: OperatorKind, value: F) {
        self.q[s.index()][a.index()] = value;
    }

    pub fn row(&self, s: OperatorKind) -> [F; N] {
        self.q[s.index()]
    }

    /// Zeroes every entry and moves to `state`.
    pub fn reset(&mut self, state: OperatorKind) {
        self.q = [[F::zero(); N]; N];
        self.state = state;
    }

    fn row_max(&self, s: OperatorKind) -> F {
        self.q[s.index()].iter().copied().fold(F::neg_infinity(), F::max)
    }

    /// `q[s][a] += α·(r + γ·max q[a][·] − q[s][a])`; the agent moves to `a`.
    /// Returns the new entry.
    pub fn update(&mut self, s: OperatorKind, a: OperatorKind, r: F, alpha: F) -> F {
        let lookahead = self.row_max(a);
        let old = self.q[s.index()][a.index()];
        // (1 − α)·old + α·target; exact at α = 0 and α = 1
        let new = (F::one() - alpha) * old + alpha * (r + self.gamma * lookahead);
        self.q[s.index()][a.index()] = new;
        self.state = a;
        new
    }

    /// Greedy action for state `s`, ties broken uniformly at random.
    pub fn best_action<R: Rng + ?Sized>(&self, s: OperatorKind, rng: &mut R) -> OperatorKind {
        let max = self.row_max(s);
        let ties: Vec<OperatorKind> =
            OperatorKind::ALL.into_iter().filter(|a| self.q[s.index()][a.index()] == max).collect();
        *ties.choose(rng).expect("a row always has a maximum")
    }

    /// Row-major snapshot of all 16 entries as `f64`.
    pub fn snapshot(&self) -> [f64; N * N] {
        let mut out = [0.0; N * N];
        for (i, v) in self.q.iter().flatten().enumerate() {
            out[i] = v.to_f64_lossy();
        }
        out
    }
}

/// Column names for [`QTable::snapshot`], e.g. `q_si_co`.
pub fn snapshot_columns() -> Vec<String> {
    OperatorKind::ALL
        .iter()
        .flat_map(|s| OperatorKind::ALL.iter().map(move |a| format!("q_{}_{}", s.tag(), a.tag())))
        .collect()
}

pub(crate) fn random_operator<R: Rng + ?Sized>(rng: &mut R) -> OperatorKind {
    OperatorKind::ALL[rng.random_range(0..N)]
}
