//! Coordinate exchange for Q_B with incremental word-count updates and
//! deterministic multi-restart.
//!
//! Negating entry `(i, j)` changes `J_s` to `J_s − 2p` for every subset `s`
//! containing `j`, where `p = Π_{l∈s} x_il` before the flip, so
//! `ΔS_k = Σ_{s∋j, |s|=k} (4 − 4·p·J_s)`. Only the subsets through `j` are
//! touched and `S_k` stays exact.

use std::fmt;

use rayon::prelude::*;

use crate::criteria::{self, main_effects_as, AsOutcome, Prior};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::rng::restart_seed;
use crate::wordcounts::{word_counts, word_counts_default, WordCounts};

/// Restarts whose final Q_B lies within this distance of the best are ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Word {
    members: [u8; 4],
    len: u8,
}

/// Cached J-characteristics of every word up to the length the prior's
/// closed-form Q_B depends on.
#[derive(Debug, Clone)]
pub struct QbState {
    design: Design,
    coefficients: [f64; 4],
    words: Vec<Word>,
    j: Vec<i64>,
    /// Word indices containing each factor.
    through: Vec<Vec<u32>>,
    sums: [i64; 4],
    k_max: usize,
}

impl QbState {
    pub fn new(design: Design, prior: &Prior) -> Self {
        let m = design.factors();
        let k_max = prior.order.max_word_length().min(m);
        let mut words = Vec::new();
        let mut current = Vec::with_capacity(k_max);
        enumerate_words(m, k_max, 0, &mut current, &mut words);
        let mut through = vec![Vec::new(); m];
        for (w, word) in words.iter().enumerate() {
            for &f in &word.members[..word.len as usize] {
                through[f as usize].push(w as u32);
            }
        }
        let j: Vec<i64> = words
            .iter()
            .map(|w| design.rows().map(|r| word_product(r, w)).sum())
            .collect();
        let mut sums = [0i64; 4];
        for (w, &jv) in words.iter().zip(&j) {
            sums[w.len as usize - 1] += jv * jv;
        }
        Self {
            coefficients: prior.qb_coefficients(m),
            design,
            words,
            j,
            through,
            sums,
            k_max,
        }
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn into_design(self) -> Design {
        self.design
    }

    pub fn word_counts(&self) -> WordCounts {
        WordCounts::from_sums(
            self.design.runs(),
            self.design.factors(),
            self.sums[..self.k_max].to_vec(),
        )
    }

    fn qb_of(&self, sums: &[i64; 4]) -> f64 {
        let n2 = (self.design.runs() * self.design.runs()) as f64;
        (0..4)
            .map(|k| self.coefficients[k] * (sums[k] as f64 / n2))
            .sum()
    }

    pub fn qb(&self) -> f64 {
        self.qb_of(&self.sums)
    }

    fn sums_after_flip(&self, row: usize, col: usize) -> [i64; 4] {
        let r = self.design.row(row);
        let mut sums = self.sums;
        for &w in &self.through[col] {
            let word = &self.words[w as usize];
            let p = word_product(r, word);
            sums[word.len as usize - 1] += 4 - 4 * p * self.j[w as usize];
        }
        sums
    }

    /// Q_B after negating entry `(row, col)` minus the current Q_B.
    pub fn delta(&self, row: usize, col: usize) -> f64 {
        self.qb_of(&self.sums_after_flip(row, col)) - self.qb()
    }

    /// Negates entry `(row, col)` and updates the cached state.
    pub fn flip(&mut self, row: usize, col: usize) {
        let r = self.design.row(row).to_vec();
        for &w in &self.through[col] {
            let word = &self.words[w as usize];
            let p = word_product(&r, word);
            let j = &mut self.j[w as usize];
            self.sums[word.len as usize - 1] += 4 - 4 * p * *j;
            *j -= 2 * p;
        }
        self.design.flip(row, col);
    }

    fn debug_check(&self) {
        if cfg!(debug_assertions) && self.k_max > 0 {
            let fresh = word_counts(&self.design, self.k_max).expect("k_max within range");
            debug_assert_eq!(fresh, self.word_counts(), "incremental state drifted");
        }
    }
}

fn enumerate_words(
    m: usize,
    k_max: usize,
    start: usize,
    current: &mut Vec<u8>,
    out: &mut Vec<Word>,
) {
    for f in start..m {
        current.push(f as u8);
        let mut members = [0u8; 4];
        members[..current.len()].copy_from_slice(current);
        out.push(Word {
            members,
            len: current.len() as u8,
        });
        if current.len() < k_max {
            enumerate_words(m, k_max, f + 1, current, out);
        }
        current.pop();
    }
}

#[inline]
fn word_product(row: &[i8], w: &Word) -> i64 {
    w.members[..w.len as usize]
        .iter()
        .map(|&f| i64::from(row[f as usize]))
        .product()
}

/// `Q_B(d with (row, col) negated) − Q_B(d)` for the prior's closed form.
pub fn qb_delta(d: &Design, row: usize, col: usize, prior: &Prior) -> Result<f64> {
    if row >= d.runs() || col >= d.factors() {
        return Err(Error::InvalidArgument(format!(
            "coordinate ({row}, {col}) outside a {}x{} design",
            d.runs(),
            d.factors()
        )));
    }
    Ok(QbState::new(d.clone(), prior).delta(row, col))
}

/// Result of one coordinate-exchange descent.
#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    pub design: Design,
    pub qb: f64,
    pub sweeps: usize,
    pub accepted: usize,
}

/// Sweeps coordinates row-major, accepting any flip that lowers Q_B by more
/// than `epsilon` (first improvement). A sweep that accepts nothing is stale.
/// `max_stale_sweeps` (T) caps consecutive stale sweeps; because the scan is
/// deterministic, the first stale sweep is already a fixed point and a 1-flip
/// local optimum, so the search always ends there.
pub fn coordinate_exchange(
    start: Design,
    prior: &Prior,
    max_stale_sweeps: usize,
    epsilon: f64,
) -> Descent {
    let mut state = QbState::new(start, prior);
    let (n, m) = (state.design.runs(), state.design.factors());
    let mut qb = state.qb();
    let mut sweeps = 0;
    let mut accepted = 0;
    debug_assert!(max_stale_sweeps >= 1);
    loop {
        sweeps += 1;
        let mut improved = false;
        for i in 0..n {
            for j in 0..m {
                let candidate = state.qb_of(&state.sums_after_flip(i, j));
                if candidate < qb - epsilon {
                    state.flip(i, j);
                    state.debug_check();
                    qb = candidate;
                    accepted += 1;
                    improved = true;
                }
            }
        }
        // A stale sweep leaves the design unchanged, so every later sweep
        // would repeat it; stopping here honours any cap T >= 1.
        if !improved {
            break;
        }
    }
    Descent {
        qb,
        design: state.into_design(),
        sweeps,
        accepted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub runs: usize,
    pub factors: usize,
    pub prior: Prior,
    pub restarts: usize,
    pub seed: u64,
    pub max_stale_sweeps: usize,
    pub epsilon: f64,
    pub tiebreak_as: bool,
}

impl OptimizerConfig {
    /// Defaults: 100 restarts, seed 0, T = 2, ε = 1e−9, A_s tie-break on.
    pub fn new(runs: usize, factors: usize, prior: Prior) -> Self {
        Self {
            runs,
            factors,
            prior,
            restarts: 100,
            seed: 0,
            max_stale_sweeps: 2,
            epsilon: 1e-9,
            tiebreak_as: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.runs < 2 || self.factors < 1 {
            return bad(format!(
                "need at least 2 runs and 1 factor, got {}x{}",
                self.runs, self.factors
            ));
        }
        if self.factors > u8::MAX as usize {
            return bad(format!(
                "at most 255 factors supported, got {}",
                self.factors
            ));
        }
        if self.restarts < 1 {
            return bad("restarts must be at least 1".into());
        }
        if self.max_stale_sweeps < 1 {
            return bad("max_stale_sweeps must be at least 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartLog {
    pub index: usize,
    pub seed: u64,
    pub initial_qb: f64,
    pub qb: f64,
    pub sweeps: usize,
}

impl fmt::Display for RestartLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "restart={} seed={} qb={} sweeps={}",
            self.index, self.seed, self.qb, self.sweeps
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best: Design,
    pub qb: f64,
    pub word_counts: WordCounts,
    pub restart_log: Vec<RestartLog>,
    pub n_level_balanced: usize,
    /// Index of the restart that produced `best`.
    pub best_restart: usize,
    /// A_s of the intercept + main-effects model of `best`.
    pub main_effects_as: AsOutcome,
}

/// Runs `cfg.restarts` independent descents from random designs (restart `k`
/// uses seed `restart_seed(cfg.seed, k)`) and returns the lowest-Q_B design.
/// Restarts within [`TIE_TOLERANCE`] of the best are ranked by main-effects
/// A_s (non-estimable last) when `tiebreak_as` is set, then by restart index,
/// so the result does not depend on the parallel schedule.
pub fn multi_restart(cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    let runs: Vec<(Design, RestartLog)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let seed = restart_seed(cfg.seed, k as u64);
            let start = Design::random(cfg.runs, cfg.factors, seed).expect("validated shape");
            let initial_qb = QbState::new(start.clone(), &cfg.prior).qb();
            let out = coordinate_exchange(start, &cfg.prior, cfg.max_stale_sweeps, cfg.epsilon);
            let log = RestartLog {
                index: k,
                seed,
                initial_qb,
                qb: out.qb,
                sweeps: out.sweeps,
            };
            (out.design, log)
        })
        .collect();

    let min_qb = runs.iter().map(|(_, l)| l.qb).fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..runs.len())
        .filter(|&k| runs[k].1.qb <= min_qb + TIE_TOLERANCE)
        .collect();
    let as_of = |k: usize| main_effects_as(&runs[k].0);
    let best_restart = if cfg.tiebreak_as && tied.len() > 1 {
        let score = |a: AsOutcome| a.value().unwrap_or(f64::NEG_INFINITY);
        let mut best = tied[0];
        let mut best_as = score(as_of(best));
        for &k in &tied[1..] {
            let s = score(as_of(k));
            if s > best_as + 1e-12 {
                best = k;
                best_as = s;
            }
        }
        best
    } else {
        tied[0]
    };

    let best = runs[best_restart].0.clone();
    let word_counts = word_counts_default(&best);
    Ok(OptResult {
        qb: criteria::qb(&word_counts, &cfg.prior),
        n_level_balanced: best.balance_profile().n_balanced,
        main_effects_as: as_of(best_restart),
        word_counts,
        best,
        best_restart,
        restart_log: runs.into_iter().map(|(_, l)| l).collect(),
    })
}
