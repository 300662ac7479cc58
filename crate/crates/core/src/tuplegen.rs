//! Generation of all t-way interaction tuples for a configuration.
//!
//! Every k-bit mask with exactly t ones names one parameter combination;
//! each combination gets a bucket holding the full Cartesian product of its
//! parameters' values.

use crate::error::{config_err, Result};
use crate::model::{Bucket, CAConfig, Mask, TupleStore, MAX_PARAMETERS};

/// Yields every k-bit mask with exactly t bits set, in ascending order.
///
/// The sequence is the same as scanning `1..2^k` and keeping the masks whose
/// popcount is t; the cursor jumps straight to the next such mask.
#[derive(Debug, Clone)]
pub struct MaskEnumerator {
    k: usize,
    t: usize,
    current: Option<Mask>,
}

impl MaskEnumerator {
    pub fn new(k: usize, t: usize) -> Result<Self> {
        if t > k {
            return config_err(format!("strength {t} exceeds parameter count {k}"));
        }
        if k > MAX_PARAMETERS {
            return config_err(format!("at most {MAX_PARAMETERS} parameters are supported"));
        }
        if t == 0 {
            return config_err("strength must be positive");
        }
        Ok(Self { k, t, current: Some((1 << t) - 1) })
    }

    pub fn parameters(&self) -> usize {
        self.k
    }

    pub fn strength(&self) -> usize {
        self.t
    }
}

impl Iterator for MaskEnumerator {
    type Item = Mask;

    fn next(&mut self) -> Option<Mask> {
        let mask = self.current?;
        // next integer with the same popcount
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        let next = (((ripple ^ mask) >> 2) / low) | ripple;
        self.current = (next < 1 << self.k).then_some(next);
        Some(mask)
    }
}

/// All masks of popcount `t` over `k` parameters, ascending.
pub fn enumerate_masks(k: usize, t: usize) -> Result<Vec<Mask>> {
    Ok(MaskEnumerator::new(k, t)?.collect())
}

/// Builds the uncovered-tuple store holding every t-way tuple of `config`.
///
/// Refuses with [`crate::Error::Overflow`] if the tuple count does not fit
/// the platform's integer width.
pub fn build_store(config: &CAConfig) -> Result<TupleStore> {
    let total = config.total_tuples()?;
    usize::try_from(total).map_err(|_| crate::Error::Overflow)?;
    let buckets = MaskEnumerator::new(config.parameters(), config.strength())?
        .map(|mask| Bucket::full(config, mask))
        .collect::<Result<Vec<_>>>()?;
    let store = TupleStore::from_buckets(config.clone(), buckets);
    debug_assert_eq!(store.remaining(), total);
    Ok(store)
}
