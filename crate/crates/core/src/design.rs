//! Two-level designs, model terms, model matrices and information matrices.
//!
//! Factor indices are 0-based throughout the library API. Human-facing output
//! (term labels, diagnostics, error positions) is 1-based.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// An N×m matrix of ±1 settings, stored row-major.
///
/// Duplicate rows are allowed. Values are immutable once constructed apart
/// from the explicit permutation / sign-switch constructors, which return new
/// designs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Design {
    runs: usize,
    factors: usize,
    entries: Vec<i8>,
}

/// Per-column level imbalance `|column sum|` plus summary counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceProfile {
    pub imbalance: Vec<usize>,
    pub n_balanced: usize,
    pub n_unbalanced: usize,
}

impl Design {
    /// Builds a design from row-major entries, validating shape and values.
    pub fn new(runs: usize, factors: usize, entries: Vec<i8>) -> Result<Self> {
        if runs == 0 {
            return Err(Error::Empty);
        }
        if runs < 2 || factors < 1 {
            return Err(Error::TooSmall {
                runs,
                factors,
                min_runs: 2,
                min_factors: 1,
            });
        }
        if entries.len() != runs * factors {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {runs}x{factors} design",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|&x| x != 1 && x != -1) {
            return Err(Error::NonBinaryEntry {
                row: pos / factors + 1,
                col: pos % factors + 1,
            });
        }
        Ok(Self {
            runs,
            factors,
            entries,
        })
    }

    pub fn from_rows<R: AsRef<[i8]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty)?.as_ref().len();
        let mut entries = Vec::with_capacity(rows.len() * first);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != first {
                return Err(Error::RaggedRows {
                    row: r + 1,
                    expected: first,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(rows.len(), first, entries)
    }

    /// Parses a design from text.
    ///
    /// Tokens are separated by whitespace and/or commas; `#` starts a comment.
    /// A single header line of factor labels is skipped if it is the first
    /// non-blank line and contains a token that is not an integer. Error
    /// positions count data rows and columns from 1.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<i8>> = Vec::new();
        let mut seen_line = false;
        for line in text.lines() {
            let content = line.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            if tokens.is_empty() {
                continue;
            }
            let is_header = !seen_line && tokens.iter().any(|t| t.parse::<i64>().is_err());
            seen_line = true;
            if is_header {
                continue;
            }
            let row_no = rows.len() + 1;
            let row = tokens
                .iter()
                .enumerate()
                .map(|(c, t)| match t.parse::<i64>() {
                    Ok(1) => Ok(1),
                    Ok(-1) => Ok(-1),
                    _ => Err(Error::NonBinaryEntry {
                        row: row_no,
                        col: c + 1,
                    }),
                })
                .collect::<Result<Vec<i8>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::RaggedRows {
                        row: row_no,
                        expected: first.len(),
                        found: row.len(),
                    });
                }
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    /// i.i.d. uniform ±1 entries drawn row-major from [`SplitMix64`] seeded
    /// with `seed`; an entry is +1 when the top bit of its draw is set.
    pub fn random(runs: usize, factors: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let entries = (0..runs * factors).map(|_| rng.next_sign()).collect();
        Self::new(runs, factors, entries)
    }

    /// The 2^k full factorial in standard order (first factor alternates fastest).
    pub fn full_factorial(k: usize) -> Result<Self> {
        if k == 0 || k > 20 {
            return Err(Error::InvalidArgument(format!(
                "full factorial needs 1..=20 factors, got {k}"
            )));
        }
        let runs = 1usize << k;
        let entries = (0..runs)
            .flat_map(|r| (0..k).map(move |j| if (r >> j) & 1 == 1 { 1 } else { -1 }))
            .collect();
        Self::new(runs, k, entries)
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.factors + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.factors..(row + 1) * self.factors]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks_exact(self.factors)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = i8> + '_ {
        self.rows().map(move |r| r[col])
    }

    pub fn column_sum(&self, col: usize) -> i64 {
        self.column(col).map(i64::from).sum()
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn balance_profile(&self) -> BalanceProfile {
        let imbalance: Vec<usize> = (0..self.factors)
            .map(|j| self.column_sum(j).unsigned_abs() as usize)
            .collect();
        let n_balanced = imbalance.iter().filter(|&&v| v == 0).count();
        BalanceProfile {
            n_unbalanced: imbalance.len() - n_balanced,
            n_balanced,
            imbalance,
        }
    }

    /// The design restricted to `cols` (0-based, in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        check_subset(cols, self.factors)?;
        let entries = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        Self::new(self.runs, cols.len(), entries)
    }

    /// Row `r` of the result is row `perm[r]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.runs)?;
        let entries = perm
            .iter()
            .flat_map(|&r| self.row(r).iter().copied())
            .collect();
        Self::new(self.runs, self.factors, entries)
    }

    /// Column `c` of the result is column `perm[c]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.factors)?;
        self.select_columns(perm)
    }

    /// Multiplies every entry of column `col` by −1.
    pub fn negate_column(&self, col: usize) -> Result<Self> {
        check_subset(&[col], self.factors)?;
        let mut out = self.clone();
        for r in 0..self.runs {
            out.entries[r * self.factors + col] *= -1;
        }
        Ok(out)
    }

    #[inline]
    pub(crate) fn flip(&mut self, row: usize, col: usize) {
        self.entries[row * self.factors + col] *= -1;
    }

    pub fn model_matrix(&self, order: ModelOrder) -> ModelMatrix {
        ModelMatrix::new(self, order)
    }

    pub fn information_matrix(&self, order: ModelOrder) -> InfoMatrix {
        self.model_matrix(order).information_matrix()
    }
}

impl fmt::Display for Design {
    /// One run per line, entries `1` / `-1` separated by single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let mut first = true;
            for &x in row {
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

pub(crate) fn check_subset(subset: &[usize], factors: usize) -> Result<()> {
    let bad = || Error::BadSubset {
        subset: subset.to_vec(),
        factors,
    };
    if subset.is_empty() {
        return Err(bad());
    }
    let mut seen = vec![false; factors];
    for &j in subset {
        if j >= factors || std::mem::replace(&mut seen[j], true) {
            return Err(bad());
        }
    }
    Ok(())
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation of length {} for {n} items",
            perm.len()
        )));
    }
    check_subset(perm, n)
}

/// Which maximal model a design is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelOrder {
    FirstOrder,
    SecondOrder,
}

impl ModelOrder {
    /// Number of non-intercept terms v: m, or m + C(m,2).
    pub fn n_terms(self, factors: usize) -> usize {
        match self {
            Self::FirstOrder => factors,
            Self::SecondOrder => factors + factors * factors.saturating_sub(1) / 2,
        }
    }

    /// Intercept, main effects, then (for second order) interactions in
    /// lexicographic order (0,1), (0,2), …, (m−2,m−1).
    pub fn terms(self, factors: usize) -> Vec<Term> {
        let mut terms = Vec::with_capacity(self.n_terms(factors) + 1);
        terms.push(Term::Intercept);
        terms.extend((0..factors).map(Term::Main));
        if self == Self::SecondOrder {
            for i in 0..factors {
                for j in i + 1..factors {
                    terms.push(Term::Interaction(i, j));
                }
            }
        }
        terms
    }

    /// Largest word length the closed-form Q_B for this order depends on.
    pub fn max_word_length(self) -> usize {
        match self {
            Self::FirstOrder => 2,
            Self::SecondOrder => 4,
        }
    }
}

impl FromStr for ModelOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "first" | "first-order" => Ok(Self::FirstOrder),
            "2" | "second" | "second-order" => Ok(Self::SecondOrder),
            _ => Err(Error::InvalidArgument(format!("unknown model order `{s}`"))),
        }
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FirstOrder => "first-order",
            Self::SecondOrder => "second-order",
        })
    }
}

/// A model term; factor indices are 0-based and interactions have `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Intercept,
    Main(usize),
    Interaction(usize, usize),
}

impl Term {
    /// Set of factors whose product forms this term's column, as a bitmask.
    pub fn mask(self) -> u64 {
        match self {
            Self::Intercept => 0,
            Self::Main(i) => 1 << i,
            Self::Interaction(i, j) => (1 << i) | (1 << j),
        }
    }

    pub fn factors(self) -> impl Iterator<Item = usize> {
        let (a, b) = match self {
            Self::Intercept => (None, None),
            Self::Main(i) => (Some(i), None),
            Self::Interaction(i, j) => (Some(i), Some(j)),
        };
        a.into_iter().chain(b)
    }

    fn max_factor(self) -> Option<usize> {
        self.factors().max()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Intercept => f.write_str("1"),
            Self::Main(i) => write!(f, "x{}", i + 1),
            Self::Interaction(i, j) => write!(f, "x{}:x{}", i + 1, j + 1),
        }
    }
}

/// Model matrix X with one ±1 column per term, stored column-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMatrix {
    runs: usize,
    terms: Vec<Term>,
    columns: Vec<i8>,
}

impl ModelMatrix {
    pub fn new(d: &Design, order: ModelOrder) -> Self {
        Self::build(d, order.terms(d.factors()))
    }

    /// Model matrix for an arbitrary term list. Fails if a term refers to a
    /// factor outside the design or is a malformed interaction.
    pub fn with_terms(d: &Design, terms: &[Term]) -> Result<Self> {
        for &t in terms {
            let ok = match t {
                Term::Interaction(i, j) => i < j,
                _ => true,
            } && t.max_factor().is_none_or(|f| f < d.factors());
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "term {t} is not valid for a design with {} factors",
                    d.factors()
                )));
            }
        }
        Ok(Self::build(d, terms.to_vec()))
    }

    fn build(d: &Design, terms: Vec<Term>) -> Self {
        let n = d.runs();
        let mut columns = Vec::with_capacity(n * terms.len());
        for &t in &terms {
            columns.extend(d.rows().map(|r| match t {
                Term::Intercept => 1,
                Term::Main(i) => r[i],
                Term::Interaction(i, j) => r[i] * r[j],
            }));
        }
        Self {
            runs: n,
            terms,
            columns,
        }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn n_columns(&self) -> usize {
        self.terms.len()
    }

    pub fn column(&self, c: usize) -> &[i8] {
        &self.columns[c * self.runs..(c + 1) * self.runs]
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.columns[col * self.runs + row]
    }

    /// XᵀX in exact integer arithmetic.
    pub fn information_matrix(&self) -> InfoMatrix {
        let p = self.n_columns();
        let mut a = vec![0i64; p * p];
        for i in 0..p {
            let ci = self.column(i);
            for j in i..p {
                let dot: i64 = ci
                    .iter()
                    .zip(self.column(j))
                    .map(|(&x, &y)| i64::from(x * y))
                    .sum();
                a[i * p + j] = dot;
                a[j * p + i] = dot;
            }
        }
        InfoMatrix {
            runs: self.runs,
            dim: p,
            a,
        }
    }
}

/// Integer information matrix XᵀX (rows/columns in term order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoMatrix {
    runs: usize,
    dim: usize,
    a: Vec<i64>,
}

impl InfoMatrix {
    /// Validates symmetry, a constant diagonal N, matching parity and |a_ij| ≤ N.
    pub fn new(runs: usize, dim: usize, a: Vec<i64>) -> Result<Self> {
        if a.len() != dim * dim || dim == 0 {
            return Err(Error::BadInfoMatrix(format!(
                "{} entries for a {dim}x{dim} matrix",
                a.len()
            )));
        }
        let n = runs as i64;
        for i in 0..dim {
            for j in 0..dim {
                let v = a[i * dim + j];
                if v != a[j * dim + i] {
                    return Err(Error::BadInfoMatrix(format!(
                        "not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && v != n {
                    return Err(Error::BadInfoMatrix(format!(
                        "diagonal entry {} is {v}, expected {n}",
                        i + 1
                    )));
                }
                if v.abs() > n || (v - n).rem_euclid(2) != 0 {
                    return Err(Error::BadInfoMatrix(format!(
                        "entry ({}, {}) = {v} is impossible for N = {n}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { runs, dim, a })
    }

    /// Parses a square whitespace-separated integer matrix; N is read off the
    /// diagonal. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<i64>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(r, l)| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<i64>().map_err(|_| {
                            Error::BadInfoMatrix(format!("row {}: `{t}` is not an integer", r + 1))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty);
        }
        if let Some(r) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::BadInfoMatrix(format!(
                "row {} has {} entries, expected {dim}",
                r + 1,
                rows[r].len()
            )));
        }
        let runs = usize::try_from(rows[0][0])
            .map_err(|_| Error::BadInfoMatrix("negative diagonal".into()))?;
        Self::new(runs, dim, rows.concat())
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Number of rows/columns (v + 1).
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.a[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows and columns `idx` (in that order) of this matrix.
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "index out of range for a {0}x{0} matrix",
                self.dim
            )));
        }
        let a = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| self.get(i, j)))
            .collect();
        Self::new(self.runs, idx.len(), a)
    }
}

impl fmt::Display for InfoMatrix {
    /// Right-aligned integer rows, one matrix row per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .a
            .iter()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        for i in 0..self.dim {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:>width$}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}
