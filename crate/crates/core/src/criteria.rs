//! Design criteria: Q_B in its general and closed forms, model-prior sums,
//! E(s²), UE(s²) and A_s efficiency.
//!
//! Under exchangeable priors with marginality, the probability that a set of
//! terms is contained in the best model is `π₁^f · π₂^t`, where `f` counts the
//! distinct factors involved and `t` the distinct interactions. The six
//! weights that Q_B needs are the [`XiWeights`].

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::design::{Design, InfoMatrix, ModelMatrix, ModelOrder, Term};
use crate::error::{Error, Result};
use crate::wordcounts::{word_counts, WordCounts};
use crate::Rational;

/// Reciprocal condition number below which DᵀQ₀D is declared singular.
pub const RCOND_THRESHOLD: f64 = 1e-10;

/// Exchangeable model prior: π₁ for each main effect, π₂ for each interaction
/// given both parents are present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub pi1: f64,
    pub pi2: f64,
    pub order: ModelOrder,
}

impl Prior {
    pub fn new(pi1: f64, pi2: f64, order: ModelOrder) -> Result<Self> {
        for (name, v) in [("pi1", pi1), ("pi2", pi2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(Self { pi1, pi2, order })
    }

    pub fn first_order(pi1: f64) -> Result<Self> {
        Self::new(pi1, 0.0, ModelOrder::FirstOrder)
    }

    pub fn second_order(pi1: f64, pi2: f64) -> Result<Self> {
        Self::new(pi1, pi2, ModelOrder::SecondOrder)
    }

    /// Coefficients `c_k` with `Q_B = Σ_k c_k b_k`, k = 1..4, for `m` factors.
    pub fn qb_coefficients(&self, m: usize) -> [f64; 4] {
        let (p1, p2) = (self.pi1, self.pi2);
        match self.order {
            ModelOrder::FirstOrder => [p1, 2.0 * p1 * p1, 0.0, 0.0],
            ModelOrder::SecondOrder => {
                let m = m as f64;
                [
                    p1 + 2.0 * (m - 1.0) * p1 * p1 * p2,
                    2.0 * p1 * p1 + p1 * p1 * p2 + 2.0 * (m - 2.0) * p1.powi(3) * p2 * p2,
                    6.0 * p1.powi(3) * p2,
                    6.0 * p1.powi(4) * p2 * p2,
                ]
            }
        }
    }
}

/// Closed-form prior sums ξ_st: the probability that the best model contains
/// a particular configuration of terms spanning `s` factors and `t`
/// interactions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiWeights {
    pub xi10: f64,
    pub xi20: f64,
    pub xi21: f64,
    pub xi31: f64,
    pub xi32: f64,
    pub xi42: f64,
}

impl XiWeights {
    pub fn new(pi1: f64, pi2: f64) -> Self {
        Self {
            xi10: pi1,
            xi20: pi1 * pi1,
            xi21: pi1 * pi1 * pi2,
            xi31: pi1.powi(3) * pi2,
            xi32: pi1.powi(3) * pi2 * pi2,
            xi42: pi1.powi(4) * pi2 * pi2,
        }
    }

    pub fn from_prior(p: &Prior) -> Self {
        match p.order {
            ModelOrder::FirstOrder => Self::new(p.pi1, 0.0),
            ModelOrder::SecondOrder => Self::new(p.pi1, p.pi2),
        }
    }

    /// Prior probability that term `t` is in the best model (`p_i0`).
    pub fn single(&self, t: Term) -> f64 {
        match t {
            Term::Intercept => 1.0,
            Term::Main(_) => self.xi10,
            Term::Interaction(..) => self.xi21,
        }
    }

    /// Prior probability that distinct terms `a` and `b` are both in the best
    /// model (`p_ij`).
    pub fn pair(&self, a: Term, b: Term) -> f64 {
        use Term::*;
        let shared = (a.mask() & b.mask()).count_ones();
        match (a, b) {
            (Intercept, t) | (t, Intercept) => self.single(t),
            (Main(_), Main(_)) => self.xi20,
            (Main(_), Interaction(..)) | (Interaction(..), Main(_)) => {
                if shared == 1 {
                    self.xi21
                } else {
                    self.xi31
                }
            }
            (Interaction(..), Interaction(..)) => {
                if shared == 1 {
                    self.xi32
                } else {
                    self.xi42
                }
            }
        }
    }
}

/// Prior sums `p_i0` and `p_ij` over the non-intercept terms of a maximal
/// model, indexed consistently with rows/columns 1..=v of its XᵀX.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSums {
    terms: Vec<Term>,
    p0: Vec<f64>,
    p: Vec<f64>,
    total: f64,
}

impl PriorSums {
    /// Closed-form sums from the ξ weights.
    pub fn exchangeable(m: usize, prior: &Prior) -> Self {
        let xi = XiWeights::from_prior(prior);
        let terms: Vec<Term> = prior.order.terms(m).into_iter().skip(1).collect();
        let v = terms.len();
        let p0 = terms.iter().map(|&t| xi.single(t)).collect();
        let mut p = vec![0.0; v * v];
        for (i, &a) in terms.iter().enumerate() {
            for (j, &b) in terms.iter().enumerate() {
                if i != j {
                    p[i * v + j] = xi.pair(a, b);
                }
            }
        }
        Self {
            terms,
            p0,
            p,
            total: 1.0,
        }
    }

    /// Brute-force sums by enumerating every model that respects marginality
    /// and adding its prior probability
    /// `π₁^a (1−π₁)^(m−a) π₂^a₂ (1−π₂)^(C(a,2)−a₂)` to every term and term
    /// pair it contains.
    pub fn oracle(m: usize, prior: &Prior) -> Result<Self> {
        let limit = match prior.order {
            ModelOrder::FirstOrder => 12,
            ModelOrder::SecondOrder => 6,
        };
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one factor".into()));
        }
        if m > limit {
            return Err(Error::TooLarge(format!(
                "{} model space with m = {m} (limit {limit})",
                prior.order
            )));
        }
        let terms: Vec<Term> = prior.order.terms(m).into_iter().skip(1).collect();
        let v = terms.len();
        let index = |t: Term| match t {
            Term::Main(i) => i,
            Term::Interaction(i, j) => m + i * (2 * m - i - 1) / 2 + (j - i - 1),
            Term::Intercept => unreachable!(),
        };
        let (p1, p2) = (prior.pi1, prior.pi2);

        // One accumulator per factor subset, reduced in subset order so the
        // result does not depend on the thread schedule.
        let chunks: Vec<(Vec<f64>, f64)> = (0u32..1 << m)
            .into_par_iter()
            .map(|fmask| {
                let mut acc = vec![0.0; v + v * v];
                let mut total = 0.0;
                let factors: Vec<usize> = (0..m).filter(|b| fmask >> b & 1 == 1).collect();
                let a = factors.len() as i32;
                let base = p1.powi(a) * (1.0 - p1).powi(m as i32 - a);
                let mains: Vec<usize> = factors.iter().map(|&i| index(Term::Main(i))).collect();
                let pairs: Vec<usize> = match prior.order {
                    ModelOrder::FirstOrder => Vec::new(),
                    ModelOrder::SecondOrder => factors
                        .iter()
                        .enumerate()
                        .flat_map(|(x, &i)| {
                            factors[x + 1..]
                                .iter()
                                .map(move |&j| index(Term::Interaction(i, j)))
                        })
                        .collect(),
                };
                let c2 = pairs.len() as i32;
                let mut model = Vec::with_capacity(mains.len() + pairs.len());
                for imask in 0u64..1 << c2 {
                    let a2 = imask.count_ones() as i32;
                    let prob = base * p2.powi(a2) * (1.0 - p2).powi(c2 - a2);
                    model.clear();
                    model.extend_from_slice(&mains);
                    model.extend(
                        pairs
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| imask >> b & 1 == 1)
                            .map(|(_, &t)| t),
                    );
                    total += prob;
                    for &t in &model {
                        acc[t] += prob;
                        for &u in &model {
                            if u != t {
                                acc[v + t * v + u] += prob;
                            }
                        }
                    }
                }
                (acc, total)
            })
            .collect();

        let mut acc = vec![0.0; v + v * v];
        let mut total = 0.0;
        for (chunk, t) in chunks {
            for (a, c) in acc.iter_mut().zip(chunk) {
                *a += c;
            }
            total += t;
        }
        let p = acc.split_off(v);
        Ok(Self {
            terms,
            p0: acc,
            p,
            total,
        })
    }

    /// Non-intercept terms, in the order of XᵀX rows 1..=v.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `p_i0` for non-intercept term index `i` (0-based).
    pub fn p0(&self, i: usize) -> f64 {
        self.p0[i]
    }

    /// `p_ij` for non-intercept term indices `i ≠ j` (0-based).
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.terms.len() + j]
    }

    /// Total prior probability over the enumerated model space (1 for the
    /// closed form).
    pub fn total_probability(&self) -> f64 {
        self.total
    }
}

/// `π₁ b₁ + 2 π₁² b₂`.
pub fn qb_first_order(w: &WordCounts, pi1: f64) -> f64 {
    pi1 * w.b_f64_or_zero(1) + 2.0 * pi1 * pi1 * w.b_f64_or_zero(2)
}

/// The second-order closed form `Σ_k c_k b_k` (see [`Prior::qb_coefficients`]);
/// word lengths beyond the number of factors contribute 0.
pub fn qb_second_order(w: &WordCounts, pi1: f64, pi2: f64) -> f64 {
    let c = Prior {
        pi1,
        pi2,
        order: ModelOrder::SecondOrder,
    }
    .qb_coefficients(w.factors());
    (1..=4).map(|k| c[k - 1] * w.b_f64_or_zero(k)).sum()
}

/// Closed-form Q_B for the prior's maximal model.
pub fn qb(w: &WordCounts, prior: &Prior) -> f64 {
    match prior.order {
        ModelOrder::FirstOrder => qb_first_order(w, prior.pi1),
        ModelOrder::SecondOrder => qb_second_order(w, prior.pi1, prior.pi2),
    }
}

/// Exact first-order Q_B for a rational π₁.
pub fn qb_first_order_exact(w: &WordCounts, pi1: Rational) -> Rational {
    let b = |k| w.b(k).unwrap_or_else(|| Rational::from_integer(0));
    pi1 * b(1) + Rational::from_integer(2) * pi1 * pi1 * b(2)
}

/// Q_B from an information matrix and prior sums:
/// `Σ_i p_i0 a_i0²/N² + Σ_{i≠j} p_ij a_ij²/N²` over non-intercept terms.
pub fn qb_general(im: &InfoMatrix, ps: &PriorSums) -> Result<f64> {
    let v = ps.len();
    if im.dim() != v + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} information matrix against {v} prior-sum terms",
            im.dim(),
            im.dim()
        )));
    }
    let sq = |x: i64| (x * x) as f64;
    let mut total = 0.0;
    for i in 0..v {
        total += ps.p0(i) * sq(im.get(i + 1, 0));
        for j in 0..v {
            if i != j {
                total += ps.p(i, j) * sq(im.get(i + 1, j + 1));
            }
        }
    }
    let n = im.runs() as f64;
    Ok(total / (n * n))
}

/// E(s²) summary: whether the design is level-balanced (b₁ = 0) and the
/// conventional `Σ_{i<j} s_ij² / C(m,2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Es2 {
    pub b1_zero: bool,
    pub value: f64,
}

pub fn es2(d: &Design) -> Result<Es2> {
    let m = d.factors();
    if m < 2 {
        return Err(Error::InvalidArgument(
            "E(s^2) needs at least two factors".into(),
        ));
    }
    let w = word_counts(d, 2)?;
    let pairs = (m * (m - 1) / 2) as f64;
    Ok(Es2 {
        b1_zero: w.s(1) == Some(0),
        value: w.s(2).unwrap_or(0) as f64 / pairs,
    })
}

/// UE(s²) up to scaling: `b₁ + b₂`.
pub fn ue_s2(d: &Design) -> Rational {
    let w = word_counts(d, d.factors().min(2)).expect("k_max is in range");
    w.bs().into_iter().sum()
}

/// Outcome of an A_s evaluation: singular DᵀQ₀D is a normal result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsOutcome {
    Estimable(f64),
    NonEstimable,
}

impl AsOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Estimable(v) => Some(v),
            Self::NonEstimable => None,
        }
    }

    /// Efficiency with non-estimable models scored as 0.
    pub fn value_or_zero(self) -> f64 {
        self.value().unwrap_or(0.0)
    }

    pub fn is_estimable(self) -> bool {
        matches!(self, Self::Estimable(_))
    }
}

/// A_s efficiency `p / (N · tr((DᵀQ₀D)⁻¹))` of the model with the given
/// terms plus an intercept. The intercept is implied and ignored if listed.
pub fn as_efficiency(d: &Design, terms: &[Term]) -> Result<AsOutcome> {
    let mut with_intercept = vec![Term::Intercept];
    with_intercept.extend(terms.iter().copied().filter(|&t| t != Term::Intercept));
    if with_intercept.len() == 1 {
        return Err(Error::InvalidArgument(
            "A_s needs at least one non-intercept term".into(),
        ));
    }
    let im = ModelMatrix::with_terms(d, &with_intercept)?.information_matrix();
    let idx: Vec<usize> = (1..with_intercept.len()).collect();
    Ok(as_efficiency_from_info(&im, &idx))
}

/// A_s of the intercept + all main effects model.
pub fn main_effects_as(d: &Design) -> AsOutcome {
    let terms: Vec<Term> = (0..d.factors()).map(Term::Main).collect();
    as_efficiency(d, &terms).expect("main-effect terms are always valid")
}

/// A_s of the model made of the intercept (row/column 0 of `im`) and the
/// terms at rows `idx` of `im`.
///
/// Works with `DᵀQ₀D / N = G/N − s̄ s̄ᵀ`, where G is the block of XᵀX for the
/// chosen terms and s̄ their column means (intercept row over N), whose
/// inverse trace is `N · tr((DᵀQ₀D)⁻¹)`. The symmetric eigendecomposition
/// provides both the reciprocal condition number (λ_min/λ_max), used for the
/// estimability decision, and the trace of the inverse (Σ 1/λ).
pub(crate) fn as_efficiency_from_info(im: &InfoMatrix, idx: &[usize]) -> AsOutcome {
    let p = idx.len();
    let n = im.runs() as f64;
    let means: Vec<f64> = idx.iter().map(|&i| im.get(0, i) as f64 / n).collect();
    let scaled = DMatrix::from_fn(p, p, |a, b| {
        im.get(idx[a], idx[b]) as f64 / n - means[a] * means[b]
    });
    let eig = SymmetricEigen::new(scaled);
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
    if hi.is_nan() || hi <= 0.0 || lo / hi < RCOND_THRESHOLD {
        return AsOutcome::NonEstimable;
    }
    let trace: f64 = eig.eigenvalues.iter().map(|l| 1.0 / l).sum();
    AsOutcome::Estimable(p as f64 / trace)
}
