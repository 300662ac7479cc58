//! Search drivers: the plain sine-cosine baseline and the Q-learning
//! arbitrated variant, both wrapped in a greedy one-row-at-a-time suite
//! construction.
//!
//! Each greedy round starts a fresh random population and searches for the
//! row that covers the most still-uncovered tuples. The best row found is
//! appended to the suite and the tuples it covers are deleted. Rounds repeat
//! until the store is empty.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::model::{CAConfig, TestCase, TestSuite, TupleStore};
use crate::num::Real;
use crate::operators::{
    cosine_update, crossover_update, levy_update, sine_update, OperatorKind, ScheduleParams,
};
use crate::qlearn::{self, random_operator, QTable};
use crate::tuplegen::build_store;

/// Which driver picks the operator for each move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Sine or cosine chosen by a fair coin per move.
    Sca,
    /// Operator chosen by the Q-table among all four.
    Qlsca,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Sca, Strategy::Qlsca];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sca => "sca",
            Strategy::Qlsca => "qlsca",
        }
    }

    /// Column label used in published tables.
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Sca => "SCA",
            Strategy::Qlsca => "QLSCA",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sca" => Ok(Strategy::Sca),
            "qlsca" => Ok(Strategy::Qlsca),
            other => config_err(format!("unknown strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig<F> {
    pub population_size: usize,
    pub sched: ScheduleParams<F>,
    pub gamma: F,
    pub seed: u64,
    /// Zero the Q-table at the start of every greedy round instead of
    /// letting it learn across the whole run.
    pub qtable_reset_per_round: bool,
    /// Stop a round as soon as a row reaches the best possible fitness.
    pub early_exit: bool,
    /// Record best fitness per (round, iteration).
    pub record_trace: bool,
    /// Attach a Q-table snapshot to every trace point.
    pub record_qtable: bool,
    /// Carry the population from one greedy round into the next (rescored
    /// against the shrunken store) instead of drawing a fresh one.
    pub carry_population: bool,
}

impl<F: Real> EngineConfig<F> {
    pub fn new(population_size: usize, sched: ScheduleParams<F>, gamma: F, seed: u64) -> Result<Self> {
        let cfg = Self {
            population_size,
            sched,
            gamma,
            seed,
            qtable_reset_per_round: false,
            early_exit: true,
            record_trace: true,
            record_qtable: false,
            carry_population: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return config_err("population size must be at least 2");
        }
        if !(self.gamma >= F::zero() && self.gamma <= F::one()) {
            return config_err(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        Ok(())
    }

    pub fn max_iterations(&self) -> u32 {
        self.sched.max_iterations()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl<F: Real> Default for EngineConfig<F> {
    fn default() -> Self {
        Self::new(40, ScheduleParams::default(), F::lit(qlearn::DEFAULT_GAMMA), 0).expect("defaults are valid")
    }
}

/// Applications per operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorCounts(pub [u64; 4]);

impl OperatorCounts {
    pub fn get(&self, op: OperatorKind) -> u64 {
        self.0[op.index()]
    }

    pub fn record(&mut self, op: OperatorKind) {
        self.0[op.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn add(&mut self, other: &OperatorCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }

    /// Share of each operator; all zero when nothing was applied.
    pub fn fractions(&self) -> [f64; 4] {
        let total = self.total();
        if total == 0 {
            return [0.0; 4];
        }
        self.0.map(|c| c as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub round: u32,
    pub iteration: u32,
    pub best_fitness: u64,
    pub qtable: Option<Box<[f64; 16]>>,
}

/// Outcome of one generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub suite: TestSuite,
    pub size: usize,
    pub wall_millis: u64,
    pub rounds: u32,
    /// Rounds where the search found nothing and a row was synthesized
    /// from an uncovered tuple.
    pub fallback_count: u32,
    pub convergence: Vec<TracePoint>,
    pub operator_counts: OperatorCounts,
}

impl RunReport {
    /// Equality on everything except the wall time.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        RunReport { wall_millis: 0, ..self.clone() } == RunReport { wall_millis: 0, ..other.clone() }
    }
}

/// Candidate rows with cached fitness and the best row seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<TestCase>,
    fitness: Vec<u64>,
    best: TestCase,
    best_fitness: u64,
}

impl Population {
    /// Scores `members` against `store`.
    pub fn from_members(members: Vec<TestCase>, store: &TupleStore) -> Self {
        assert!(!members.is_empty(), "population needs at least one member");
        let fitness: Vec<u64> = members.iter().map(|m| store.fitness_unchecked(m.values())).collect();
        let (i, &best_fitness) =
            fitness.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("non-empty");
        Self { best: members[i].clone(), members, fitness, best_fitness }
    }

    pub fn random<R: Rng + ?Sized>(config: &CAConfig, store: &TupleStore, size: usize, rng: &mut R) -> Self {
        Self::from_members((0..size).map(|_| config.random_row(rng)).collect(), store)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[TestCase] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &TestCase {
        &self.members[i]
    }

    pub fn fitness_of(&self, i: usize) -> u64 {
        self.fitness[i]
    }

    pub fn best(&self) -> &TestCase {
        &self.best
    }

    pub fn best_fitness(&self) -> u64 {
        self.best_fitness
    }

    /// Recomputes every fitness against `store` and re-elects the elite.
    pub fn rescore(&mut self, store: &TupleStore) {
        *self = Self::from_members(std::mem::take(&mut self.members), store);
    }

    /// Replaces member `i` and refreshes the elite.
    pub fn replace(&mut self, i: usize, row: TestCase, fitness: u64) {
        if fitness > self.best_fitness {
            self.best = row.clone();
            self.best_fitness = fitness;
        }
        self.members[i] = row;
        self.fitness[i] = fitness;
    }
}

/// Produces the next position of a member for a given operator.
pub trait Mover<F: Real> {
    #[allow(clippy::too_many_arguments)]
    fn apply<R: Rng + ?Sized>(
        &mut self,
        op: OperatorKind,
        member: usize,
        pop: &Population,
        config: &CAConfig,
        sched: &ScheduleParams<F>,
        r1: F,
        rng: &mut R,
    ) -> Result<TestCase>;
}

/// The four operators as defined in [`crate::operators`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardMover;

impl<F: Real> Mover<F> for StandardMover {
    fn apply<R: Rng + ?Sized>(
        &mut self,
        op: OperatorKind,
        member: usize,
        pop: &Population,
        config: &CAConfig,
        sched: &ScheduleParams<F>,
        r1: F,
        rng: &mut R,
    ) -> Result<TestCase> {
        let x = pop.member(member);
        match op {
            OperatorKind::Sine => sine_update(x, pop.best(), config, r1, rng),
            OperatorKind::Cosine => cosine_update(x, pop.best(), config, r1, rng),
            OperatorKind::LevyFlight => levy_update(x, config, rng, sched),
            OperatorKind::Crossover => {
                if pop.len() < 2 {
                    return Ok(x.clone());
                }
                let mut partner = rng.random_range(0..pop.len() - 1);
                if partner >= member {
                    partner += 1;
                }
                Ok(crossover_update(x, pop.member(partner), rng))
            }
        }
    }
}

/// `true` (explore) with probability `min(1, 1/√iteration)`.
///
/// # Panics
/// If `iteration` is 0; iterations count from 1.
pub fn explore_gate<R: Rng + ?Sized>(iteration: u32, rng: &mut R) -> bool {
    assert!(iteration >= 1, "iterations are 1-based");
    rng.random::<f64>() < 1.0 / (iteration as f64).sqrt()
}

/// One state-action step of the Q-learning driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<F> {
    pub state: OperatorKind,
    pub action: OperatorKind,
    pub reward: F,
    pub fitness_before: u64,
    pub fitness_after: u64,
}

/// Per-round search state shared by the explore and exploit steps.
pub struct RowSearch<'a, F: Real, M> {
    config: &'a CAConfig,
    engine: &'a EngineConfig<F>,
    store: &'a TupleStore,
    mover: &'a mut M,
    pub counts: OperatorCounts,
}

impl<'a, F: Real, M: Mover<F>> RowSearch<'a, F, M> {
    pub fn new(engine: &'a EngineConfig<F>, store: &'a TupleStore, mover: &'a mut M) -> Self {
        Self { config: store.config(), engine, store, mover, counts: OperatorCounts::default() }
    }

    fn mv<R: Rng + ?Sized>(&mut self, op: OperatorKind, pop: &mut Population, member: usize, r1: F, rng: &mut R) -> Result<(u64, u64)> {
        let before = pop.fitness_of(member);
        let next = self.mover.apply(op, member, pop, self.config, &self.engine.sched, r1, rng)?;
        let after = self.store.fitness_unchecked(next.values());
        pop.replace(member, next, after);
        self.counts.record(op);
        Ok((before, after))
    }

    #[allow(clippy::too_many_arguments)]
    fn transition<R: Rng + ?Sized>(
        &mut self,
        pop: &mut Population,
        member: usize,
        table: &mut QTable<F>,
        state: OperatorKind,
        r1: F,
        alpha: F,
        rng: &mut R,
    ) -> Result<Transition<F>> {
        let action = table.best_action(state, rng);
        let (fitness_before, fitness_after) = self.mv(action, pop, member, r1, rng)?;
        let reward = qlearn::reward(fitness_before, fitness_after);
        table.update(state, action, reward, alpha);
        Ok(Transition { state, action, reward, fitness_before, fitness_after })
    }

    /// Visits all four states in random order; from each, takes the greedy
    /// action on `member` and updates the table.
    pub fn explore_episode<R: Rng + ?Sized>(
        &mut self,
        pop: &mut Population,
        member: usize,
        table: &mut QTable<F>,
        r1: F,
        alpha: F,
        rng: &mut R,
    ) -> Result<[Transition<F>; 4]> {
        let mut order = OperatorKind::ALL;
        order.shuffle(rng);
        let mut out = [None; 4];
        for (slot, state) in out.iter_mut().zip(order) {
            table.set_state(state);
            *slot = Some(self.transition(pop, member, table, state, r1, alpha, rng)?);
        }
        Ok(out.map(|t| t.expect("filled")))
    }

    /// A single greedy transition from the table's current state.
    pub fn exploit_step<R: Rng + ?Sized>(
        &mut self,
        pop: &mut Population,
        member: usize,
        table: &mut QTable<F>,
        r1: F,
        alpha: F,
        rng: &mut R,
    ) -> Result<Transition<F>> {
        let state = table.state();
        self.transition(pop, member, table, state, r1, alpha, rng)
    }

    fn start_population<R: Rng + ?Sized>(&self, carried: Option<Population>, rng: &mut R) -> Population {
        match carried {
            Some(mut pop) => {
                pop.rescore(self.store);
                pop
            }
            None => Population::random(self.config, self.store, self.engine.population_size, rng),
        }
    }

    fn trace_point(&self, trace: &mut Vec<TracePoint>, round: u32, iteration: u32, pop: &Population, table: Option<&QTable<F>>) {
        if self.engine.record_trace {
            trace.push(TracePoint {
                round,
                iteration,
                best_fitness: pop.best_fitness(),
                qtable: table.filter(|_| self.engine.record_qtable).map(|t| Box::new(t.snapshot())),
            });
        }
    }

    /// Runs one greedy round of the Q-learning driver and returns the final
    /// population; its elite is the selected row.
    pub fn qlsca_round<R: Rng + ?Sized>(
        &mut self,
        table: &mut QTable<F>,
        rng: &mut R,
        round: u32,
        trace: &mut Vec<TracePoint>,
        carried: Option<Population>,
    ) -> Result<Population> {
        let mut pop = self.start_population(carried, rng);
        let ceiling = self.store.live_buckets();
        let max_t = self.engine.max_iterations();
        for iteration in 1..=max_t {
            let r1 = self.engine.sched.radius(iteration);
            let alpha = qlearn::alpha(iteration, max_t);
            for member in 0..pop.len() {
                if explore_gate(iteration, rng) {
                    self.explore_episode(&mut pop, member, table, r1, alpha, rng)?;
                } else {
                    self.exploit_step(&mut pop, member, table, r1, alpha, rng)?;
                }
                if self.engine.early_exit && pop.best_fitness() >= ceiling {
                    break;
                }
            }
            self.trace_point(trace, round, iteration, &pop, Some(table));
            if self.engine.early_exit && pop.best_fitness() >= ceiling {
                break;
            }
        }
        Ok(pop)
    }

    /// One greedy round of the baseline: each move is sine or cosine by a
    /// fair coin.
    pub fn sca_round<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        round: u32,
        trace: &mut Vec<TracePoint>,
        carried: Option<Population>,
    ) -> Result<Population> {
        let mut pop = self.start_population(carried, rng);
        let ceiling = self.store.live_buckets();
        for iteration in 1..=self.engine.max_iterations() {
            let r1 = self.engine.sched.radius(iteration);
            for member in 0..pop.len() {
                let op = if rng.random::<f64>() < 0.5 { OperatorKind::Sine } else { OperatorKind::Cosine };
                self.mv(op, &mut pop, member, r1, rng)?;
                if self.engine.early_exit && pop.best_fitness() >= ceiling {
                    break;
                }
            }
            self.trace_point(trace, round, iteration, &pop, None);
            if self.engine.early_exit && pop.best_fitness() >= ceiling {
                break;
            }
        }
        Ok(pop)
    }
}

/// Runs one Q-learning round against `store` and returns the selected row.
pub fn qlsca_select_row<F: Real, R: Rng + ?Sized>(
    store: &TupleStore,
    engine: &EngineConfig<F>,
    table: &mut QTable<F>,
    rng: &mut R,
) -> Result<TestCase> {
    let mut mover = StandardMover;
    let mut search = RowSearch::new(engine, store, &mut mover);
    let pop = search.qlsca_round(table, rng, 1, &mut Vec::new(), None)?;
    Ok(pop.best().clone())
}

/// A row covering `tuple`, with don't-care positions drawn at random.
fn synthesize_row<R: Rng + ?Sized>(config: &CAConfig, tuple: &crate::model::InteractionTuple, rng: &mut R) -> TestCase {
    TestCase(
        tuple
            .assignment
            .iter()
            .zip(config.cardinalities())
            .map(|(slot, &v)| slot.unwrap_or_else(|| rng.random_range(0..v)))
            .collect(),
    )
}

/// Builds a complete suite with the standard operators.
pub fn generate<F: Real>(config: &CAConfig, engine: &EngineConfig<F>, strategy: Strategy) -> Result<RunReport> {
    generate_with(config, engine, strategy, &mut StandardMover)
}

/// Builds a complete suite; `mover` supplies the operator implementations.
pub fn generate_with<F: Real, M: Mover<F>>(
    config: &CAConfig,
    engine: &EngineConfig<F>,
    strategy: Strategy,
    mover: &mut M,
) -> Result<RunReport> {
    engine.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(engine.seed);
    let mut store = build_store(config)?;
    let mut table = QTable::with_random_state(engine.gamma, &mut rng)?;
    let mut suite = TestSuite::new(config.clone());
    let mut trace = Vec::new();
    let mut counts = OperatorCounts::default();
    let mut rounds = 0u32;
    let mut fallback_count = 0u32;
    let mut carried: Option<Population> = None;

    while !store.is_empty() {
        rounds += 1;
        if strategy == Strategy::Qlsca && engine.qtable_reset_per_round && rounds > 1 {
            table.reset(random_operator(&mut rng));
        }
        let pop = {
            let mut search = RowSearch::new(engine, &store, mover);
            let pop = match strategy {
                Strategy::Qlsca => search.qlsca_round(&mut table, &mut rng, rounds, &mut trace, carried.take())?,
                Strategy::Sca => search.sca_round(&mut rng, rounds, &mut trace, carried.take())?,
            };
            counts.add(&search.counts);
            pop
        };
        let row = if pop.best_fitness() == 0 {
            fallback_count += 1;
            let tuple = store.first_uncovered().expect("store is not empty");
            synthesize_row(config, &tuple, &mut rng)
        } else {
            pop.best().clone()
        };
        let removed = store.remove_covered(&row)?;
        if removed == 0 {
            return Err(Error::Verification(format!("round {rounds} selected a row covering nothing")));
        }
        suite.push(row);
        if engine.carry_population {
            carried = Some(pop);
        }
    }

    Ok(RunReport {
        strategy,
        seed: engine.seed,
        size: suite.len(),
        suite,
        wall_millis: started.elapsed().as_millis() as u64,
        rounds,
        fallback_count,
        convergence: trace,
        operator_counts: counts,
    })
}
