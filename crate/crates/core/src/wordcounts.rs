//! J-characteristics and generalized word counts.
//!
//! For a factor subset `s`, `J_s = Σ_i Π_{j∈s} x_ij` and `R(s) = (J_s/N)²`.
//! The word count `b_k` is the sum of `R(s)` over all k-subsets; it is kept as
//! the exact integer `S_k = Σ J_s²` over the fixed denominator `N²`.

use std::collections::HashMap;
use std::fmt;

use crate::design::{check_subset, Design, InfoMatrix, Term};
use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordCounts {
    runs: usize,
    factors: usize,
    /// `sums[k - 1] = S_k`.
    sums: Vec<i64>,
}

impl WordCounts {
    pub fn from_sums(runs: usize, factors: usize, sums: Vec<i64>) -> Self {
        Self {
            runs,
            factors,
            sums,
        }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    /// Largest word length available.
    pub fn k_max(&self) -> usize {
        self.sums.len()
    }

    /// `S_k = N²·b_k`, if computed.
    pub fn s(&self, k: usize) -> Option<i64> {
        k.checked_sub(1).and_then(|i| self.sums.get(i)).copied()
    }

    /// The common denominator `N²`.
    pub fn denominator(&self) -> i64 {
        (self.runs * self.runs) as i64
    }

    /// Exact `b_k` (reduced), if computed.
    pub fn b(&self, k: usize) -> Option<Rational> {
        self.s(k).map(|s| Rational::new(s, self.denominator()))
    }

    pub fn b_f64(&self, k: usize) -> Option<f64> {
        self.s(k).map(|s| s as f64 / self.denominator() as f64)
    }

    /// `b_k` as a double, taking absent word lengths beyond the number of
    /// factors as 0 (no such subsets exist).
    pub(crate) fn b_f64_or_zero(&self, k: usize) -> f64 {
        match self.b_f64(k) {
            Some(b) => b,
            None if k > self.factors => 0.0,
            None => panic!(
                "word count b{k} was not computed (k_max = {})",
                self.k_max()
            ),
        }
    }

    /// All computed `b_k`, k = 1..=k_max.
    pub fn bs(&self) -> Vec<Rational> {
        (1..=self.k_max()).filter_map(|k| self.b(k)).collect()
    }
}

impl fmt::Display for WordCounts {
    /// `(b1, b2, …)` with reduced fractions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.bs().iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `J_s` for a nonempty set of distinct 0-based factor indices.
pub fn j_characteristic(d: &Design, subset: &[usize]) -> Result<i64> {
    check_subset(subset, d.factors())?;
    Ok(d.rows()
        .map(|r| subset.iter().map(|&j| i64::from(r[j])).product::<i64>())
        .sum())
}

/// Word counts for k = 1..=k_max by exhaustive subset enumeration.
pub fn word_counts(d: &Design, k_max: usize) -> Result<WordCounts> {
    if k_max == 0 || k_max > d.factors() {
        return Err(Error::InvalidArgument(format!(
            "k_max must be in 1..={}, got {k_max}",
            d.factors()
        )));
    }
    let mut sums = vec![0i64; k_max];
    for_each_subset(d, k_max, |subset, j| sums[subset.len() - 1] += j * j);
    Ok(WordCounts::from_sums(d.runs(), d.factors(), sums))
}

/// Word counts up to `min(4, m)`, enough for both closed-form Q_B variants.
pub fn word_counts_default(d: &Design) -> WordCounts {
    word_counts(d, d.factors().min(4)).expect("default k_max is always in range")
}

/// Per-subset contribution to `b_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetTerm {
    /// 0-based factor indices in increasing order.
    pub subset: Vec<usize>,
    pub j: i64,
    pub runs: usize,
}

impl fmt::Display for SubsetTerm {
    /// `s1,s2,…,sk J=<int> R=<J²>/<N²>` with 1-based factor numbers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.subset.iter().map(|s| (s + 1).to_string()).collect();
        write!(
            f,
            "{} J={} R={}/{}",
            ids.join(","),
            self.j,
            self.j * self.j,
            self.runs * self.runs
        )
    }
}

/// Every k-subset in lexicographic order with its J-characteristic.
pub fn subset_diagnostics(d: &Design, k: usize) -> Result<Vec<SubsetTerm>> {
    if k == 0 || k > d.factors() {
        return Err(Error::InvalidArgument(format!(
            "subset size must be in 1..={}, got {k}",
            d.factors()
        )));
    }
    let mut out = Vec::new();
    for_each_subset(d, k, |subset, j| {
        if subset.len() == k {
            out.push(SubsetTerm {
                subset: subset.to_vec(),
                j,
                runs: d.runs(),
            });
        }
    });
    Ok(out)
}

/// Calls `f(subset, J_s)` for every nonempty subset of size ≤ `k_max`, in
/// lexicographic order, reusing running column products along each prefix.
fn for_each_subset(d: &Design, k_max: usize, mut f: impl FnMut(&[usize], i64)) {
    let n = d.runs();
    let columns: Vec<Vec<i64>> = (0..d.factors())
        .map(|j| d.column(j).map(i64::from).collect())
        .collect();
    let mut stack = vec![vec![1i64; n]; k_max + 1];
    let mut subset = Vec::with_capacity(k_max);

    fn recurse(
        start: usize,
        columns: &[Vec<i64>],
        stack: &mut [Vec<i64>],
        subset: &mut Vec<usize>,
        k_max: usize,
        f: &mut dyn FnMut(&[usize], i64),
    ) {
        let depth = subset.len();
        for j in start..columns.len() {
            let (lower, upper) = stack.split_at_mut(depth + 1);
            let prefix = &lower[depth];
            let next = &mut upper[0];
            let mut sum = 0;
            for ((out, &p), &x) in next.iter_mut().zip(prefix).zip(&columns[j]) {
                *out = p * x;
                sum += *out;
            }
            subset.push(j);
            f(subset, sum);
            if depth + 1 < k_max {
                recurse(j + 1, columns, stack, subset, k_max, f);
            }
            subset.pop();
        }
    }

    recurse(0, &columns, &mut stack, &mut subset, k_max, &mut f);
}

/// Recovers word counts from an information-matrix listing.
///
/// Entry `(r, c)` of XᵀX equals `J_s` for `s` the symmetric difference of the
/// factor sets of terms `r` and `c`. Every entry naming the same `s` must
/// agree (otherwise the listing cannot come from any ±1 design); the result
/// covers the word lengths for which every k-subset of the factors occurs.
pub fn word_counts_from_info_matrix(im: &InfoMatrix, terms: &[Term]) -> Result<WordCounts> {
    if terms.len() != im.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} terms for a {1}x{1} information matrix",
            terms.len(),
            im.dim()
        )));
    }
    let factors = terms
        .iter()
        .flat_map(|t| t.factors())
        .max()
        .map_or(0, |f| f + 1);
    if factors == 0 || factors > 63 {
        return Err(Error::InvalidArgument(
            "term list must involve between 1 and 63 factors".into(),
        ));
    }
    let mut js: HashMap<u64, i64> = HashMap::new();
    for (r, tr) in terms.iter().enumerate() {
        for (c, tc) in terms.iter().enumerate() {
            let s = tr.mask() ^ tc.mask();
            let v = im.get(r, c);
            match js.get(&s) {
                Some(&prev) if prev != v => {
                    return Err(Error::InconsistentListing(format!(
                        "entry ({}, {}) = {v} but another entry for the same word gives {prev}",
                        r + 1,
                        c + 1
                    )))
                }
                Some(_) => {}
                None => {
                    js.insert(s, v);
                }
            }
        }
    }
    if js.get(&0).copied() != Some(im.runs() as i64) {
        return Err(Error::InconsistentListing("diagonal differs from N".into()));
    }
    let mut sums = Vec::new();
    for k in 1..=factors.min(63) {
        let (count, sum) = js
            .iter()
            .filter(|(s, _)| s.count_ones() as usize == k)
            .fold((0u64, 0i64), |(c, acc), (_, &j)| (c + 1, acc + j * j));
        if count != binomial(factors as u64, k as u64) {
            break;
        }
        sums.push(sum);
    }
    if sums.is_empty() {
        return Err(Error::InconsistentListing(
            "listing does not determine any complete word length".into(),
        ));
    }
    Ok(WordCounts::from_sums(im.runs(), factors, sums))
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
