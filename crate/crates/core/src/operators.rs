//! Position-update operators: sine, cosine, Lévy flight and single-cut
//! crossover, plus the radius schedule and the absorbing-wall clamp.
//!
//! Operators compute real-valued positions and map them back onto the
//! discrete parameter ranges with [`clamp_absorbing`], so every result is a
//! valid row.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{config_err, Error, Result};
use crate::model::{CAConfig, TestCase};
use crate::num::Real;

/// The four search operators. The discriminant doubles as the Q-table index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    Sine = 0,
    Cosine = 1,
    LevyFlight = 2,
    Crossover = 3,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 4] =
        [OperatorKind::Sine, OperatorKind::Cosine, OperatorKind::LevyFlight, OperatorKind::Crossover];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Sine => "sine",
            OperatorKind::Cosine => "cosine",
            OperatorKind::LevyFlight => "levy",
            OperatorKind::Crossover => "crossover",
        }
    }

    /// Two-letter tag used in Q-table column names.
    pub fn tag(self) -> &'static str {
        match self {
            OperatorKind::Sine => "si",
            OperatorKind::Cosine => "co",
            OperatorKind::LevyFlight => "lf",
            OperatorKind::Crossover => "cx",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mantegna's scale for the numerator Gaussian of a Lévy step with
/// exponent `beta`.
pub fn mantegna_sigma_u(beta: f64) -> f64 {
    let num = gamma(1.0 + beta) * (std::f64::consts::PI * beta / 2.0).sin();
    let den = gamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    (num / den).abs().powf(1.0 / beta)
}

/// Radius magnitude, iteration budget and Lévy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams<F> {
    magnitude: F,
    max_iterations: u32,
    beta: F,
    sigma_u: F,
    sigma_v: F,
}

impl<F: Real> ScheduleParams<F> {
    pub const DEFAULT_MAGNITUDE: f64 = 3.0;
    pub const DEFAULT_BETA: f64 = 1.5;

    pub fn new(magnitude: F, max_iterations: u32, beta: F) -> Result<Self> {
        if magnitude <= F::zero() || !magnitude.is_finite() {
            return config_err(format!("magnitude must be positive, got {magnitude}"));
        }
        if max_iterations < 1 {
            return config_err("max_iterations must be at least 1");
        }
        if !(beta > F::one() && beta <= F::lit(2.0)) {
            return config_err(format!("beta must lie in (1, 2], got {beta}"));
        }
        let sigma_u = F::lit(mantegna_sigma_u(beta.to_f64_lossy()));
        Ok(Self { magnitude, max_iterations, beta, sigma_u, sigma_v: F::one() })
    }

    pub fn magnitude(&self) -> F {
        self.magnitude
    }

    pub fn max_iterations(&self) -> u32 {
        self.max_iterations
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn sigma_u(&self) -> F {
        self.sigma_u
    }

    pub fn sigma_v(&self) -> F {
        self.sigma_v
    }

    /// `M·(1 − t/T)`.
    ///
    /// # Panics
    /// If `t > T`.
    pub fn radius(&self, t: u32) -> F {
        assert!(t <= self.max_iterations, "iteration {t} beyond budget {}", self.max_iterations);
        self.magnitude * (F::one() - F::lit(t as f64) / F::lit(self.max_iterations as f64))
    }
}

impl<F: Real> Default for ScheduleParams<F> {
    fn default() -> Self {
        Self::new(F::lit(Self::DEFAULT_MAGNITUDE), 100, F::lit(Self::DEFAULT_BETA)).expect("defaults are valid")
    }
}

/// Rounds half away from zero, then wraps into `[0, cardinality)`.
pub fn clamp_absorbing<F: Real>(value: F, cardinality: u32) -> Result<u32> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value.to_f64_lossy()));
    }
    debug_assert!(cardinality >= 2);
    let v = F::lit(cardinality as f64);
    let mut wrapped = value.round() % v;
    if wrapped < F::zero() {
        wrapped = wrapped + v;
    }
    Ok(wrapped.to_u32().expect("wrapped value is in range"))
}

/// Which trigonometric branch of the sine-cosine update to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Sine,
    Cosine,
}

/// One dimension of the sine or cosine update:
/// `x + r1·wave(r2)·|r3·best − x|`.
pub fn wave_displace<F: Real>(wave: Wave, x: F, best: F, r1: F, r2: F, r3: F) -> F {
    let w = match wave {
        Wave::Sine => r2.sin(),
        Wave::Cosine => r2.cos(),
    };
    x + r1 * w * (r3 * best - x).abs()
}

/// Sine or cosine update with caller-supplied `(r2, r3)` per dimension.
pub fn wave_update_with<F: Real>(
    wave: Wave,
    x: &TestCase,
    best: &TestCase,
    config: &CAConfig,
    r1: F,
    draws: &[(F, F)],
) -> Result<TestCase> {
    let values = x
        .values()
        .iter()
        .zip(best.values())
        .zip(config.cardinalities())
        .zip(draws)
        .map(|(((&xi, &bi), &v), &(r2, r3))| {
            let real = wave_displace(wave, F::lit(xi as f64), F::lit(bi as f64), r1, r2, r3);
            clamp_absorbing(real, v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestCase(values))
}

fn draw_phase<F: Real, R: Rng + ?Sized>(rng: &mut R) -> (F, F) {
    let r2 = F::lit(rng.random::<f64>() * std::f64::consts::TAU);
    let r3 = F::lit(rng.random::<f64>() * 2.0);
    (r2, r3)
}

fn wave_update<F: Real, R: Rng + ?Sized>(
    wave: Wave,
    x: &TestCase,
    best: &TestCase,
    config: &CAConfig,
    r1: F,
    rng: &mut R,
) -> Result<TestCase> {
    let draws: Vec<(F, F)> = (0..x.len()).map(|_| draw_phase(rng)).collect();
    wave_update_with(wave, x, best, config, r1, &draws)
}

/// Sine update with `r2 ∈ [0, 2π)` and `r3 ∈ [0, 2)` drawn per dimension.
pub fn sine_update<F: Real, R: Rng + ?Sized>(
    x: &TestCase,
    best: &TestCase,
    config: &CAConfig,
    r1: F,
    rng: &mut R,
) -> Result<TestCase> {
    wave_update(Wave::Sine, x, best, config, r1, rng)
}

/// Cosine update; same draws as [`sine_update`].
pub fn cosine_update<F: Real, R: Rng + ?Sized>(
    x: &TestCase,
    best: &TestCase,
    config: &CAConfig,
    r1: F,
    rng: &mut R,
) -> Result<TestCase> {
    wave_update(Wave::Cosine, x, best, config, r1, rng)
}

/// `u / |v|^(1/β)`.
pub fn levy_step_from<F: Real>(u: F, v: F, beta: F) -> F {
    u / v.abs().powf(F::one() / beta)
}

/// Draws a Lévy step with `u ~ N(0, σ_u²)` and `v ~ N(0, σ_v²)`.
/// A `v` of exactly zero is redrawn.
pub fn levy_step<F: Real, R: Rng + ?Sized>(rng: &mut R, sched: &ScheduleParams<F>) -> F {
    let u = sched.sigma_u * F::lit(StandardNormal.sample(rng));
    let v = loop {
        let v = sched.sigma_v * F::lit(StandardNormal.sample(rng));
        if v != F::zero() {
            break v;
        }
    };
    levy_step_from(u, v, sched.beta)
}

/// Adds caller-supplied steps to each dimension and clamps.
pub fn levy_update_with<F: Real>(x: &TestCase, config: &CAConfig, steps: &[F]) -> Result<TestCase> {
    let values = x
        .values()
        .iter()
        .zip(config.cardinalities())
        .zip(steps)
        .map(|((&xi, &v), &step)| clamp_absorbing(F::lit(xi as f64) + step, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestCase(values))
}

/// Lévy flight: an independent step per dimension, added to the position.
pub fn levy_update<F: Real, R: Rng + ?Sized>(
    x: &TestCase,
    config: &CAConfig,
    rng: &mut R,
    sched: &ScheduleParams<F>,
) -> Result<TestCase> {
    let steps: Vec<F> = (0..x.len()).map(|_| levy_step(rng, sched)).collect();
    levy_update_with(x, config, &steps)
}

/// Copies positions `[0, cut)` from `xj` over `xi`.
pub fn crossover_at(xi: &TestCase, xj: &TestCase, cut: usize) -> TestCase {
    let cut = cut.min(xi.len());
    TestCase(xj.values()[..cut].iter().chain(&xi.values()[cut..]).copied().collect())
}

/// Single-cut crossover with the cut drawn uniformly from `0..=k`.
pub fn crossover_update<R: Rng + ?Sized>(xi: &TestCase, xj: &TestCase, rng: &mut R) -> TestCase {
    let cut = rng.random_range(0..=xi.len());
    crossover_at(xi, xj, cut)
}
