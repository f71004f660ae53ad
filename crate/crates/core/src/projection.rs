//! Projection estimability: for every f-factor projection and every choice of
//! `t` of its two-factor interactions, fit intercept + f main effects + those
//! interactions and record A_s, or non-estimability.

use std::fmt::Write as _;

use itertools::Itertools;
use rayon::prelude::*;

use crate::criteria::as_efficiency_from_info;
use crate::design::{Design, ModelOrder};
use crate::error::{Error, Result};
use crate::wordcounts::binomial;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionRow {
    pub f: usize,
    pub t: usize,
    pub n_models: u64,
    pub no_est: u64,
    /// Mean A_s over all models, non-estimable ones counted as 0.
    pub mean_as: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub rows: Vec<ProjectionRow>,
}

impl ProjectionReport {
    pub fn get(&self, f: usize, t: usize) -> Option<&ProjectionRow> {
        self.rows.iter().find(|r| r.f == f && r.t == t)
    }

    /// `f,t,n_models,no_est,mean_as` with mean_as to `decimals` places.
    pub fn to_csv(&self, decimals: usize) -> String {
        let mut out = String::from("f,t,n_models,no_est,mean_as\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.*}",
                r.f, r.t, r.n_models, r.no_est, decimals, r.mean_as
            );
        }
        out
    }
}

/// Which interaction counts to tabulate for each projection size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionRange {
    pub t_min: usize,
    /// Upper bound on `t`; by default models are limited to at most N − 1
    /// non-intercept terms, i.e. `t ≤ min(C(f,2), N − 1 − f)`.
    pub t_max: Option<usize>,
}

impl Default for InteractionRange {
    fn default() -> Self {
        Self {
            t_min: 1,
            t_max: None,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    n_models: u64,
    no_est: u64,
    sum: CompensatedSum,
}

/// Tabulates every (f, t) cell for the requested projection sizes.
pub fn projection_report(
    d: &Design,
    f_values: &[usize],
    range: InteractionRange,
) -> Result<ProjectionReport> {
    let m = d.factors();
    let mut rows = Vec::new();
    for &f in f_values {
        if f == 0 || f > m {
            return Err(Error::InvalidArgument(format!(
                "projection size {f} outside 1..={m}"
            )));
        }
        let pairs = f * (f - 1) / 2;
        let t_cap = pairs.min((d.runs() - 1).saturating_sub(f));
        let t_max = range.t_max.map_or(t_cap, |t| t.min(pairs));
        if range.t_min > t_max {
            continue;
        }
        let ts: Vec<usize> = (range.t_min..=t_max).collect();

        // One row of cells per factor subset; folded in subset order so the
        // totals do not depend on the thread schedule.
        let subsets: Vec<Vec<usize>> = (0..m).combinations(f).collect();
        let per_subset: Vec<Vec<Cell>> = subsets
            .par_iter()
            .map(|cols| {
                let proj = d.select_columns(cols).expect("valid column subset");
                // Intercept, f mains, C(f,2) interactions.
                let im = proj.information_matrix(ModelOrder::SecondOrder);
                let interactions: Vec<usize> = (1 + f..1 + f + pairs).collect();
                ts.iter()
                    .map(|&t| {
                        let mut cell = Cell::default();
                        let mut idx: Vec<usize> = (1..=f).collect();
                        for chosen in interactions.iter().copied().combinations(t) {
                            idx.truncate(f);
                            idx.extend(chosen);
                            let outcome = as_efficiency_from_info(&im, &idx);
                            cell.n_models += 1;
                            if !outcome.is_estimable() {
                                cell.no_est += 1;
                            }
                            cell.sum.add(outcome.value_or_zero());
                        }
                        cell
                    })
                    .collect()
            })
            .collect();

        for (c, &t) in ts.iter().enumerate() {
            let mut total = Cell::default();
            for cells in &per_subset {
                total.n_models += cells[c].n_models;
                total.no_est += cells[c].no_est;
                total.sum.add(cells[c].sum.value());
            }
            debug_assert_eq!(
                total.n_models,
                binomial(m as u64, f as u64) * binomial(pairs as u64, t as u64)
            );
            rows.push(ProjectionRow {
                f,
                t,
                n_models: total.n_models,
                no_est: total.no_est,
                mean_as: total.sum.value() / total.n_models as f64,
            });
        }
    }
    Ok(ProjectionReport { rows })
}
