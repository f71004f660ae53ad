//! Level-balance theory for first-order designs with N ≡ 2 (mod 4).
//!
//! In this run-size class a column with an odd number of +1s can be level
//! balanced, while a column with an even number of +1s has a column sum of
//! ±2 at best. If XᵀX splits into two blocks of the form `(N±2)I ∓ 2J` (the
//! intercept together with the `m − n₁` non-level-balanced factors, and the
//! `n₁` level-balanced factors) with zeros between them, the first-order Q_B
//! is
//!
//! ```text
//! [4π₁u + 4π₁²(u² + n₁² − m)] / N²,   u = m − n₁.
//! ```
//!
//! Minimizing over `n₁` yields `K` ranges of π₁ with endpoints
//! `α_k = 1/(2m + 2 − 4k)`; on the k-th range the optimum has `k − 1`
//! non-level-balanced factors.

use std::fmt;

use num_traits::Zero;

use crate::design::{Design, InfoMatrix, ModelOrder, Term};
use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BalanceInterval {
    /// 1-based interval number.
    pub k: usize,
    pub lo: Rational,
    pub hi: Rational,
    pub non_level_balanced: usize,
    pub level_balanced: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceIntervals {
    pub runs: usize,
    pub factors: usize,
    /// α₀ = 0 < α₁ < … < α_K = 1.
    pub endpoints: Vec<Rational>,
}

impl BalanceIntervals {
    /// Number of intervals K.
    pub fn len(&self) -> usize {
        self.endpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior_endpoints(&self) -> &[Rational] {
        &self.endpoints[1..self.endpoints.len() - 1]
    }

    pub fn intervals(&self) -> Vec<BalanceInterval> {
        self.endpoints
            .windows(2)
            .enumerate()
            .map(|(i, w)| BalanceInterval {
                k: i + 1,
                lo: w[0],
                hi: w[1],
                non_level_balanced: i,
                level_balanced: self.factors - i,
            })
            .collect()
    }

    /// The interval `(α_{k−1}, α_k]` containing π₁ (the first interval also
    /// contains 0). At an interior endpoint both neighbouring splits are
    /// optimal; the one with fewer non-level-balanced factors is returned.
    pub fn interval_for(&self, pi1: f64) -> Result<BalanceInterval> {
        if !(0.0..=1.0).contains(&pi1) {
            return Err(Error::InvalidArgument(format!(
                "pi1 must lie in [0, 1], got {pi1}"
            )));
        }
        let all = self.intervals();
        Ok(*all
            .iter()
            .find(|iv| pi1 <= to_f64(iv.hi))
            .unwrap_or(all.last().expect("at least one interval")))
    }
}

impl fmt::Display for BalanceIntervals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for iv in self.intervals() {
            writeln!(
                f,
                "k={} pi1 in [{}, {}]: {} non-level-balanced, {} level-balanced",
                iv.k, iv.lo, iv.hi, iv.non_level_balanced, iv.level_balanced
            )?;
        }
        Ok(())
    }
}

pub(crate) fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn check_congruence(runs: usize) -> Result<()> {
    if runs % 4 != 2 {
        return Err(Error::BadCongruence { runs });
    }
    Ok(())
}

/// The interval table for N ≡ 2 (mod 4) and 1 ≤ m ≤ N − 1.
pub fn balance_intervals(runs: usize, factors: usize) -> Result<BalanceIntervals> {
    check_congruence(runs)?;
    if factors == 0 || factors >= runs {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= m <= N - 1, got m = {factors} with N = {runs}"
        )));
    }
    let m = factors as i64;
    let k_count = if factors % 2 == 1 {
        factors.div_ceil(2)
    } else {
        factors / 2 + 1
    };
    let mut endpoints = vec![Rational::zero()];
    endpoints.extend((1..k_count as i64).map(|k| Rational::new(1, 2 * m + 2 - 4 * k)));
    endpoints.push(Rational::from_integer(1));
    Ok(BalanceIntervals {
        runs,
        factors,
        endpoints,
    })
}

/// Interval table for saturated 10-run main-effects designs (m = 9), as
/// established for conference-matrix constructions: `(0,1/16]`,
/// `[1/16,1/12]`, `[1/12,1/8]`, `[1/8,1/4]`, `[1/4,1]` with 9, 8, 7, 6 and 5
/// level-balanced factors.
pub fn saturated_n10_intervals() -> BalanceIntervals {
    BalanceIntervals {
        runs: 10,
        factors: 9,
        endpoints: vec![
            Rational::zero(),
            Rational::new(1, 16),
            Rational::new(1, 12),
            Rational::new(1, 8),
            Rational::new(1, 4),
            Rational::from_integer(1),
        ],
    }
}

/// Whether `n₁` level-balanced factors lies in the range covered by the
/// block-pattern optimality result: `⌈m/2⌉ ≤ n₁ ≤ m`.
pub fn lemma_feasible(factors: usize, n1: usize) -> bool {
    factors.div_ceil(2) <= n1 && n1 <= factors
}

/// Q_B of a design whose XᵀX has the two-block form, for any `0 ≤ n₁ ≤ m`
/// (see [`lemma_feasible`] for the range where the form is known optimal).
pub fn qb_block_value(runs: usize, factors: usize, n1: usize, pi1: f64) -> f64 {
    let (n, m, n1) = (runs as f64, factors as f64, n1 as f64);
    let u = m - n1;
    (4.0 * pi1 * u + 4.0 * pi1 * pi1 * (u * u + n1 * n1 - m)) / (n * n)
}

/// Exact rational version of [`qb_block_value`].
pub fn qb_block_value_exact(runs: usize, factors: usize, n1: usize, pi1: Rational) -> Rational {
    let (n, m, n1) = (runs as i64, factors as i64, n1 as i64);
    let u = m - n1;
    let four = Rational::from_integer(4);
    (four * pi1 * u + four * pi1 * pi1 * (u * u + n1 * n1 - m)) / (n * n)
}

/// Observed sign of the off-diagonal entries within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSign {
    /// Fewer than two members: no off-diagonal entries.
    Empty,
    Positive,
    Negative,
    Mixed,
}

/// An XᵀX entry that breaks the two-block pattern. Indices are XᵀX rows
/// (0 = intercept, `j` = factor `j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternReport {
    pub matches: bool,
    /// Number of level-balanced factors (column sum 0).
    pub n1: usize,
    /// Factors grouped with the intercept (column sum ≡ 2 mod 4), 1-based.
    pub intercept_block: Vec<usize>,
    /// Factors with column sum ≡ 0 mod 4, 1-based.
    pub balanced_block: Vec<usize>,
    pub intercept_block_sign: BlockSign,
    pub balanced_block_sign: BlockSign,
    pub violations: Vec<Violation>,
}

impl fmt::Display for PatternReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "matches: {}", self.matches)?;
        writeln!(
            f,
            "level-balanced factors: {} of {}",
            self.n1,
            self.intercept_block.len() + self.balanced_block.len()
        )?;
        writeln!(
            f,
            "intercept block: {:?} (signs {:?})",
            self.intercept_block, self.intercept_block_sign
        )?;
        writeln!(
            f,
            "balanced block: {:?} (signs {:?})",
            self.balanced_block, self.balanced_block_sign
        )?;
        for v in &self.violations {
            let label = |i: usize| {
                if i == 0 {
                    Term::Intercept.to_string()
                } else {
                    Term::Main(i - 1).to_string()
                }
            };
            writeln!(
                f,
                "violation: a({}, {}) = {}",
                label(v.i),
                label(v.j),
                v.value
            )?;
        }
        Ok(())
    }
}

/// Checks a design's first-order XᵀX against the two-block pattern.
pub fn verify_block_pattern(d: &Design) -> Result<PatternReport> {
    check_congruence(d.runs())?;
    verify_info_pattern(&d.information_matrix(ModelOrder::FirstOrder))
}

/// Checks a first-order XᵀX (intercept first) against the two-block pattern.
///
/// Factors are grouped by column sum: `≡ 2 (mod 4)` joins the intercept's
/// block, `≡ 0 (mod 4)` forms the other. Within a block every off-diagonal
/// entry must have magnitude 2, and every entry between blocks must be 0.
/// Which sign each block carries is not prescribed; the observed signs are
/// reported per block.
pub fn verify_info_pattern(im: &InfoMatrix) -> Result<PatternReport> {
    check_congruence(im.runs())?;
    let dim = im.dim();
    let in_intercept_block: Vec<bool> = (0..dim)
        .map(|i| i == 0 || im.get(0, i).rem_euclid(4) == 2)
        .collect();
    let mut violations = Vec::new();
    let mut signs = [(false, false); 2];
    for i in 0..dim {
        for j in i + 1..dim {
            let a = im.get(i, j);
            let same = in_intercept_block[i] == in_intercept_block[j];
            if same {
                let block = usize::from(!in_intercept_block[i]);
                if a > 0 {
                    signs[block].0 = true;
                } else if a < 0 {
                    signs[block].1 = true;
                }
            }
            let ok = if same { a.abs() == 2 } else { a == 0 };
            if !ok {
                violations.push(Violation { i, j, value: a });
            }
        }
    }
    let sign = |(pos, neg)| match (pos, neg) {
        (false, false) => BlockSign::Empty,
        (true, false) => BlockSign::Positive,
        (false, true) => BlockSign::Negative,
        (true, true) => BlockSign::Mixed,
    };
    let (intercept_block, balanced_block): (Vec<usize>, Vec<usize>) =
        (1..dim).partition(|&j| in_intercept_block[j]);
    Ok(PatternReport {
        matches: violations.is_empty(),
        n1: (1..dim).filter(|&j| im.get(0, j) == 0).count(),
        intercept_block,
        balanced_block,
        intercept_block_sign: sign(signs[0]),
        balanced_block_sign: sign(signs[1]),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::qb_first_order;
    use crate::wordcounts::word_counts;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn fourteen_run_table() {
        let t = balance_intervals(14, 12).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(
            t.interior_endpoints(),
            &[r(1, 22), r(1, 18), r(1, 14), r(1, 10), r(1, 6), r(1, 2)]
        );
        let last = *t.intervals().last().unwrap();
        assert_eq!(last.lo, r(1, 2));
        assert_eq!(last.non_level_balanced, 6);
        assert_eq!(t.interval_for(0.3).unwrap().non_level_balanced, 5);
        assert_eq!(t.interval_for(0.0).unwrap().k, 1);
        assert_eq!(t.interval_for(1.0).unwrap().k, 7);
    }

    #[test]
    fn odd_m_table_and_saturated_fixture_agree() {
        assert_eq!(balance_intervals(10, 9).unwrap(), saturated_n10_intervals());
    }

    #[test]
    fn congruence_and_range_errors() {
        assert_eq!(
            balance_intervals(12, 5),
            Err(Error::BadCongruence { runs: 12 })
        );
        assert!(balance_intervals(14, 14).is_err());
        assert!(balance_intervals(14, 0).is_err());
    }

    #[test]
    fn fully_balanced_value() {
        for pi in [0.05, 0.5, 1.0] {
            let v = qb_block_value(14, 12, 12, pi);
            assert!((v - 4.0 * pi * pi * (144.0 - 12.0) / 196.0).abs() < 1e-15);
        }
    }

    #[test]
    fn argmin_at_fourteen_runs() {
        let best = (0..=12)
            .min_by(|&a, &b| {
                qb_block_value(14, 12, a, 0.3).total_cmp(&qb_block_value(14, 12, b, 0.3))
            })
            .unwrap();
        assert_eq!(best, 7);
    }

    #[test]
    fn endpoints_are_exact_ties() {
        let t = balance_intervals(22, 15).unwrap();
        for (k, &alpha) in t.interior_endpoints().iter().enumerate() {
            let n1 = 15 - k;
            assert_eq!(
                qb_block_value_exact(22, 15, n1, alpha),
                qb_block_value_exact(22, 15, n1 - 1, alpha)
            );
        }
    }

    #[test]
    fn lemma_range() {
        assert!(lemma_feasible(9, 5) && !lemma_feasible(9, 4));
        assert!(lemma_feasible(12, 6) && !lemma_feasible(12, 5));
        assert!(!lemma_feasible(12, 13));
    }

    #[test]
    fn orthogonal_pair_of_balanced_factors_violates() {
        // Two level-balanced factors in 6 runs must have |a_12| = 2.
        let im = InfoMatrix::new(6, 3, vec![6, 0, 0, 0, 6, 0, 0, 0, 6]).unwrap();
        let rep = verify_info_pattern(&im).unwrap();
        assert!(!rep.matches);
        assert_eq!(
            rep.violations,
            vec![Violation {
                i: 1,
                j: 2,
                value: 0
            }]
        );
    }

    #[test]
    fn six_run_pattern_and_block_value() {
        // Factor 1: column sum 2 (intercept block); factors 2, 3: balanced.
        let d = Design::parse("1 1 1\n1 1 -1\n1 -1 1\n1 -1 -1\n-1 1 1\n-1 -1 -1").unwrap();
        let rep = verify_block_pattern(&d).unwrap();
        let w = word_counts(&d, 2).unwrap();
        assert!(rep.matches, "{rep}");
        assert_eq!(rep.n1, 2);
        for pi in [0.1, 0.4, 0.9] {
            assert!((qb_first_order(&w, pi) - qb_block_value(6, 3, rep.n1, pi)).abs() < 1e-12);
        }
        assert_eq!(rep.intercept_block, vec![1]);
        assert_eq!(rep.balanced_block, vec![2, 3]);
    }

    #[test]
    fn rejects_wrong_run_size() {
        let d = Design::full_factorial(3).unwrap();
        assert_eq!(
            verify_block_pattern(&d),
            Err(Error::BadCongruence { runs: 8 })
        );
    }
}
