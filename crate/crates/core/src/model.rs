//! Domain types: problem configuration, test cases, interaction tuples, the
//! uncovered-tuple store and test suites.
//!
//! Parameter values are 0-based everywhere. Bit `i` of a [`Mask`] selects
//! parameter `i`; when a mask is written as a string the leftmost character
//! is parameter 0, so `"1001"` over four parameters selects the first and
//! the last one.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Parameter-combination mask; bit `i` set means parameter `i` participates.
pub type Mask = u64;

/// Upper limit on the parameter count so that every mask fits in a [`Mask`]
/// and `1 << k` does not overflow.
pub const MAX_PARAMETERS: usize = 63;

/// A covering array problem instance: strength `t` and one cardinality per
/// parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CAConfig {
    strength: usize,
    cardinalities: Vec<u32>,
}

impl CAConfig {
    pub fn new(strength: usize, cardinalities: Vec<u32>) -> Result<Self> {
        let k = cardinalities.len();
        if k < 2 {
            return config_err(format!("need at least 2 parameters, got {k}"));
        }
        if k > MAX_PARAMETERS {
            return config_err(format!("at most {MAX_PARAMETERS} parameters are supported, got {k}"));
        }
        if strength < 2 {
            return config_err(format!("strength must be at least 2, got {strength}"));
        }
        if strength > k {
            return config_err(format!("strength {strength} exceeds parameter count {k}"));
        }
        if let Some((i, v)) = cardinalities.iter().enumerate().find(|(_, &v)| v < 2) {
            return config_err(format!("parameter {i} has cardinality {v}; need at least 2"));
        }
        Ok(Self { strength, cardinalities })
    }

    /// Uniform configuration `CA(t, v^k)`.
    pub fn uniform(strength: usize, cardinality: u32, parameters: usize) -> Result<Self> {
        Self::new(strength, vec![cardinality; parameters])
    }

    pub fn strength(&self) -> usize {
        self.strength
    }

    /// Number of parameters `k`.
    pub fn parameters(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[u32] {
        &self.cardinalities
    }

    pub fn cardinality(&self, parameter: usize) -> u32 {
        self.cardinalities[parameter]
    }

    pub fn is_uniform(&self) -> bool {
        self.cardinalities.windows(2).all(|w| w[0] == w[1])
    }

    /// `C(k, t)`: the number of tuples a single row can cover.
    pub fn tuples_per_row(&self) -> u64 {
        binomial(self.parameters() as u64, self.strength as u64)
    }

    /// Number of t-way interaction tuples: the sum over all t-subsets of the
    /// product of their cardinalities, computed as the elementary symmetric
    /// polynomial of degree t.
    pub fn total_tuples(&self) -> Result<u64> {
        let t = self.strength;
        let mut e = vec![0u64; t + 1];
        e[0] = 1;
        for &v in &self.cardinalities {
            for j in (1..=t).rev() {
                let term = e[j - 1].checked_mul(v as u64).ok_or(Error::Overflow)?;
                e[j] = e[j].checked_add(term).ok_or(Error::Overflow)?;
            }
        }
        Ok(e[t])
    }

    /// Number of exhaustive test cases, `None` if it overflows.
    pub fn exhaustive_size(&self) -> Option<u64> {
        self.cardinalities.iter().try_fold(1u64, |acc, &v| acc.checked_mul(v as u64))
    }

    /// Checks that `values` is a well-formed row for this configuration.
    pub fn check_row(&self, values: &[u32]) -> Result<()> {
        if values.len() != self.parameters() {
            return config_err(format!(
                "row has {} values, configuration has {} parameters",
                values.len(),
                self.parameters()
            ));
        }
        for (i, (&x, &v)) in values.iter().zip(&self.cardinalities).enumerate() {
            if x >= v {
                return config_err(format!("value {x} of parameter {i} is outside [0, {})", v));
            }
        }
        Ok(())
    }

    /// Uniformly random row.
    pub fn random_row<R: Rng + ?Sized>(&self, rng: &mut R) -> TestCase {
        TestCase(self.cardinalities.iter().map(|&v| rng.random_range(0..v)).collect())
    }

    /// Exponent notation, e.g. `CA(2,3^13)` or `MCA(2,5^1 3^8 2^2)`.
    /// Consecutive equal cardinalities are grouped.
    pub fn notation(&self) -> String {
        let mut groups: Vec<(u32, usize)> = Vec::new();
        for &v in &self.cardinalities {
            match groups.last_mut() {
                Some((last, n)) if *last == v => *n += 1,
                _ => groups.push((v, 1)),
            }
        }
        let body = groups.iter().map(|(v, n)| format!("{v}^{n}")).collect::<Vec<_>>().join(" ");
        let prefix = if self.is_uniform() { "CA" } else { "MCA" };
        format!("{prefix}({},{body})", self.strength)
    }
}

impl fmt::Display for CAConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.notation())
    }
}

/// `C(n, r)` with saturating arithmetic.
pub fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

/// One row of a covering array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TestCase(pub Vec<u32>);

impl TestCase {
    pub fn new(config: &CAConfig, values: Vec<u32>) -> Result<Self> {
        config.check_row(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for TestCase {
    fn from(values: Vec<u32>) -> Self {
        Self(values)
    }
}

/// A t-way interaction: which parameters participate, and a value for each
/// participating parameter. `None` marks a don't-care position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InteractionTuple {
    pub mask: Mask,
    pub assignment: Vec<Option<u32>>,
}

impl InteractionTuple {
    /// Builds a tuple from its assignment; the mask is derived from which
    /// positions are concrete.
    pub fn from_assignment(assignment: Vec<Option<u32>>) -> Self {
        let mask = assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_some())
            .fold(0, |m, (i, _)| m | (1 << i));
        Self { mask, assignment }
    }

    pub fn strength(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Checks the tuple against a configuration's invariants.
    pub fn check(&self, config: &CAConfig) -> Result<()> {
        if self.assignment.len() != config.parameters() {
            return config_err("tuple length does not match the parameter count");
        }
        if self.strength() != config.strength() {
            return config_err("tuple mask popcount differs from the strength");
        }
        for (i, slot) in self.assignment.iter().enumerate() {
            let selected = self.mask >> i & 1 == 1;
            match slot {
                Some(x) if !selected || *x >= config.cardinality(i) => {
                    return config_err(format!("bad concrete value at parameter {i}"))
                }
                None if selected => return config_err(format!("missing value at parameter {i}")),
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for InteractionTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, slot) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match slot {
                Some(x) => write!(f, "{x}")?,
                None => f.write_str("*")?,
            }
        }
        f.write_str("]")
    }
}

/// Renders a mask with parameter 0 leftmost.
pub fn mask_to_string(mask: Mask, parameters: usize) -> String {
    (0..parameters).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Parses a mask written with parameter 0 leftmost.
pub fn parse_mask(text: &str) -> Result<Mask> {
    if text.len() > MAX_PARAMETERS {
        return config_err("mask too long");
    }
    text.chars().enumerate().try_fold(0, |m, (i, c)| match c {
        '1' => Ok(m | 1 << i),
        '0' => Ok(m),
        _ => Err(Error::Parse { position: i, message: format!("unexpected '{c}' in mask") }),
    })
}

/// Does `row` agree with `tuple` on every participating parameter?
pub fn covers(row: &TestCase, tuple: &InteractionTuple) -> Result<bool> {
    if row.len() != tuple.assignment.len() {
        return config_err(format!(
            "row has {} values, tuple has {} positions",
            row.len(),
            tuple.assignment.len()
        ));
    }
    Ok(row.0.iter().zip(&tuple.assignment).all(|(x, slot)| slot.is_none_or(|a| a == *x)))
}

/// Uncovered assignments for one parameter combination.
///
/// Assignments are stored as mixed-radix codes over the participating
/// parameters (first participating parameter is the least significant
/// digit). The code space is dense, so the set is a bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bucket {
    mask: Mask,
    positions: Vec<usize>,
    radices: Vec<u32>,
    strides: Vec<u64>,
    bits: Vec<u64>,
    len: u64,
}

impl Bucket {
    /// A bucket holding every assignment of the parameters in `mask`.
    pub(crate) fn full(config: &CAConfig, mask: Mask) -> Result<Self> {
        let positions: Vec<usize> = (0..config.parameters()).filter(|i| mask >> i & 1 == 1).collect();
        let radices: Vec<u32> = positions.iter().map(|&p| config.cardinality(p)).collect();
        let mut strides = Vec::with_capacity(radices.len());
        let mut capacity: u64 = 1;
        for &r in &radices {
            strides.push(capacity);
            capacity = capacity.checked_mul(r as u64).ok_or(Error::Overflow)?;
        }
        let words = usize::try_from(capacity.div_ceil(64)).map_err(|_| Error::Overflow)?;
        let mut bits = vec![u64::MAX; words];
        let tail = capacity % 64;
        if tail != 0 {
            bits[words - 1] = (1u64 << tail) - 1;
        }
        Ok(Self { mask, positions, radices, strides, bits, len: capacity })
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }

    /// Parameters participating in this combination, ascending.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Number of uncovered assignments left.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Size of the full code space.
    pub fn capacity(&self) -> u64 {
        self.radices.iter().map(|&r| r as u64).product()
    }

    #[inline]
    fn code_of(&self, row: &[u32]) -> u64 {
        self.positions.iter().zip(&self.strides).map(|(&p, &s)| row[p] as u64 * s).sum()
    }

    #[inline]
    fn test(&self, code: u64) -> bool {
        self.bits[(code / 64) as usize] >> (code % 64) & 1 == 1
    }

    /// Is the projection of `row` onto this combination still uncovered?
    #[inline]
    pub fn contains_row(&self, row: &[u32]) -> bool {
        self.len > 0 && self.test(self.code_of(row))
    }

    /// Removes the projection of `row`; returns whether it was present.
    fn remove_row(&mut self, row: &[u32]) -> bool {
        if self.len == 0 {
            return false;
        }
        let code = self.code_of(row);
        let (w, b) = ((code / 64) as usize, code % 64);
        if self.bits[w] >> b & 1 == 1 {
            self.bits[w] &= !(1 << b);
            self.len -= 1;
            true
        } else {
            false
        }
    }

    fn encode(&self, tuple: &InteractionTuple) -> Option<u64> {
        let mut code = 0;
        for (&p, (&s, &r)) in self.positions.iter().zip(self.strides.iter().zip(&self.radices)) {
            let x = (*tuple.assignment.get(p)?)?;
            if x >= r {
                return None;
            }
            code += x as u64 * s;
        }
        Some(code)
    }

    fn decode(&self, mut code: u64, parameters: usize) -> InteractionTuple {
        let mut assignment = vec![None; parameters];
        for (&p, &r) in self.positions.iter().zip(&self.radices) {
            assignment[p] = Some((code % r as u64) as u32);
            code /= r as u64;
        }
        InteractionTuple { mask: self.mask, assignment }
    }

    fn codes(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as u64;
                word &= word - 1;
                Some(w as u64 * 64 + b)
            })
        })
    }
}

/// Hash-indexed set of uncovered interaction tuples, keyed by mask.
///
/// Buckets are kept in ascending mask order so that iteration (and
/// therefore every run) is deterministic; the hash index maps a mask to its
/// bucket.
#[derive(Debug, Clone)]
pub struct TupleStore {
    config: CAConfig,
    buckets: Vec<Bucket>,
    index: HashMap<Mask, usize>,
    remaining: u64,
}

impl TupleStore {
    pub(crate) fn from_buckets(config: CAConfig, buckets: Vec<Bucket>) -> Self {
        let index = buckets.iter().enumerate().map(|(i, b)| (b.mask, i)).collect();
        let remaining = buckets.iter().map(Bucket::len).sum();
        Self { config, buckets, index, remaining }
    }

    pub fn config(&self) -> &CAConfig {
        &self.config
    }

    /// Number of uncovered tuples.
    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn bucket(&self, mask: Mask) -> Option<&Bucket> {
        self.index.get(&mask).map(|&i| &self.buckets[i])
    }

    /// Buckets that still hold at least one tuple. A row covers at most one
    /// tuple per bucket, so this bounds the best achievable fitness.
    pub fn live_buckets(&self) -> u64 {
        self.buckets.iter().filter(|b| !b.is_empty()).count() as u64
    }

    pub fn contains(&self, tuple: &InteractionTuple) -> bool {
        self.bucket(tuple.mask)
            .and_then(|b| b.encode(tuple).map(|code| b.test(code)))
            .unwrap_or(false)
    }

    /// Number of uncovered tuples `row` covers. Does not modify the store.
    pub fn fitness(&self, row: &TestCase) -> Result<u64> {
        self.config.check_row(row.values())?;
        Ok(self.fitness_unchecked(row.values()))
    }

    #[inline]
    pub(crate) fn fitness_unchecked(&self, row: &[u32]) -> u64 {
        self.buckets.iter().filter(|b| b.contains_row(row)).count() as u64
    }

    /// Deletes every tuple `row` covers and returns how many were deleted.
    pub fn remove_covered(&mut self, row: &TestCase) -> Result<u64> {
        self.config.check_row(row.values())?;
        let removed = self.buckets.iter_mut().filter_map(|b| b.remove_row(row.values()).then_some(())).count() as u64;
        self.remaining -= removed;
        Ok(removed)
    }

    /// Some uncovered tuple, the first in mask then code order.
    pub fn first_uncovered(&self) -> Option<InteractionTuple> {
        let k = self.config.parameters();
        self.buckets
            .iter()
            .find(|b| !b.is_empty())
            .and_then(|b| b.codes().next().map(|code| b.decode(code, k)))
    }

    /// Every uncovered tuple, in mask then code order.
    pub fn iter(&self) -> impl Iterator<Item = InteractionTuple> + '_ {
        let k = self.config.parameters();
        self.buckets.iter().flat_map(move |b| b.codes().map(move |code| b.decode(code, k)))
    }
}

/// An ordered list of rows for one configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub config: CAConfig,
    pub rows: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(config: CAConfig) -> Self {
        Self { config, rows: Vec::new() }
    }

    pub fn with_rows(config: CAConfig, rows: Vec<TestCase>) -> Self {
        Self { config, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TestCase) {
        self.rows.push(row);
    }
}
