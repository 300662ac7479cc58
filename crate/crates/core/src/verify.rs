//! Brute-force coverage checking.
//!
//! Nothing here goes through the tuple store: parameter subsets are
//! enumerated recursively and value products with an odometer, and every
//! row's projection is counted directly.

use std::collections::{BTreeMap, HashMap};

use crate::model::{CAConfig, InteractionTuple, TestSuite};

/// A row that does not fit the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowViolation {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    /// Every t-way tuple is covered at least once.
    pub complete: bool,
    pub missing: Vec<InteractionTuple>,
    /// How many rows cover each tuple (covered tuples only).
    pub redundancy: BTreeMap<InteractionTuple, u64>,
    /// Malformed rows; they are excluded from coverage counting.
    pub violations: Vec<RowViolation>,
}

impl VerifyReport {
    /// Complete and free of malformed rows.
    pub fn is_valid(&self) -> bool {
        self.complete && self.violations.is_empty()
    }
}

fn subsets(k: usize, t: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for i in start..=k - (t - cur.len()) {
            cur.push(i);
            rec(i + 1, k, t, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, t, &mut Vec::with_capacity(t), &mut out);
    out
}

/// Checks that every t-way tuple of the suite's configuration appears in
/// some row.
pub fn verify_suite(suite: &TestSuite) -> VerifyReport {
    let cfg = &suite.config;
    let k = cfg.parameters();
    let mut violations = Vec::new();
    let rows: Vec<&[u32]> = suite
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, row)| {
            let v = row.values();
            let reason = if v.len() != k {
                Some(format!("expected {k} values, found {}", v.len()))
            } else {
                v.iter()
                    .zip(cfg.cardinalities())
                    .position(|(&x, &card)| x >= card)
                    .map(|p| format!("parameter {p} value {} out of range [0, {})", v[p], cfg.cardinality(p)))
            };
            match reason {
                Some(reason) => {
                    violations.push(RowViolation { row: i, reason });
                    None
                }
                None => Some(v),
            }
        })
        .collect();

    let mut missing = Vec::new();
    let mut redundancy = BTreeMap::new();
    for subset in subsets(k, cfg.strength()) {
        let mut seen: HashMap<Vec<u32>, u64> = HashMap::new();
        for row in &rows {
            *seen.entry(subset.iter().map(|&p| row[p]).collect()).or_default() += 1;
        }
        let mut digits = vec![0u32; subset.len()];
        loop {
            let mut assignment = vec![None; k];
            for (&p, &d) in subset.iter().zip(&digits) {
                assignment[p] = Some(d);
            }
            let tuple = InteractionTuple::from_assignment(assignment);
            match seen.get(&digits) {
                Some(&n) => {
                    redundancy.insert(tuple, n);
                }
                None => missing.push(tuple),
            }
            // odometer over the subset's value product
            let mut j = 0;
            while j < digits.len() {
                digits[j] += 1;
                if digits[j] < cfg.cardinality(subset[j]) {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
            if j == digits.len() {
                break;
            }
        }
    }

    VerifyReport { complete: missing.is_empty(), missing, redundancy, violations }
}

/// Largest product of `t` cardinalities; no covering array can be smaller.
pub fn size_lower_bound(config: &CAConfig) -> u64 {
    let mut v: Vec<u64> = config.cardinalities().iter().map(|&x| x as u64).collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v.iter().take(config.strength()).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TestCase;

    pub(crate) fn pizza_suite() -> TestSuite {
        // sizes Large/Medium/Personal → 0/1/2, False/True → 0/1
        let rows = [
            [1, 0, 1, 0],
            [0, 1, 1, 1],
            [2, 0, 0, 1],
            [1, 1, 0, 0],
            [0, 0, 0, 0],
            [2, 1, 1, 0],
            [1, 1, 1, 1],
        ];
        TestSuite::with_rows(
            CAConfig::new(2, vec![3, 2, 2, 2]).unwrap(),
            rows.iter().map(|r| TestCase(r.to_vec())).collect(),
        )
    }

    #[test]
    fn pizza_table_is_complete() {
        let r = verify_suite(&pizza_suite());
        assert!(r.complete && r.is_valid());
        assert_eq!(r.redundancy.len(), 30);
        assert_eq!(r.redundancy.values().sum::<u64>(), 7 * 6);
    }

    #[test]
    fn pizza_without_last_row_misses_medium_with_mayo() {
        let mut s = pizza_suite();
        s.rows.pop();
        let r = verify_suite(&s);
        assert!(!r.complete);
        let medium_mayo = InteractionTuple::from_assignment(vec![Some(1), None, None, Some(1)]);
        assert!(r.missing.contains(&medium_mayo));
    }

    #[test]
    fn empty_suite_misses_everything() {
        let cfg = CAConfig::new(3, vec![4, 3, 2, 2, 3]).unwrap();
        let r = verify_suite(&TestSuite::new(cfg.clone()));
        assert!(!r.complete);
        assert_eq!(r.missing.len() as u64, cfg.total_tuples().unwrap());
    }

    #[test]
    fn malformed_rows_are_violations() {
        let mut s = pizza_suite();
        s.rows.push(TestCase(vec![3, 0, 0, 0]));
        s.rows.push(TestCase(vec![0, 0]));
        let r = verify_suite(&s);
        assert!(r.complete);
        assert_eq!(r.violations.len(), 2);
        assert!(!r.is_valid());
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(size_lower_bound(&CAConfig::new(2, vec![3, 2, 2, 2]).unwrap()), 6);
        assert_eq!(size_lower_bound(&CAConfig::uniform(2, 10, 5).unwrap()), 100);
        assert_eq!(size_lower_bound(&CAConfig::new(3, vec![2, 3, 4]).unwrap()), 24);
    }

    #[test]
    fn lower_bound_is_max_subset_product() {
        let cfg = CAConfig::new(3, vec![2, 7, 3, 5, 4, 6]).unwrap();
        let brute = subsets(6, 3)
            .iter()
            .map(|s| s.iter().map(|&p| cfg.cardinality(p) as u64).product::<u64>())
            .max()
            .unwrap();
        assert_eq!(size_lower_bound(&cfg), brute);
    }
}
