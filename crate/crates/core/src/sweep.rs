//! Q_B of several designs over a grid of π₁ values, with the points where the
//! best design changes.

use std::fmt::Write as _;

use crate::criteria::{qb, Prior};
use crate::design::ModelOrder;
use crate::error::{Error, Result};
use crate::wordcounts::WordCounts;
use crate::Rational;

/// Designs whose Q_B differs by at most this much are tied for the argmin.
pub const ARGMIN_TOLERANCE: f64 = 1e-12;

/// Grid `lo, lo + step, …` up to and including `hi` (within rounding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl SweepGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "grid needs 0 <= lo < hi <= 1, got [{lo}, {hi}]"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid step must be positive, got {step}"
            )));
        }
        Ok(Self { lo, hi, step })
    }

    /// Grid points `lo + i·step`, computed by multiplication so errors do
    /// not accumulate.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| (self.lo + i as f64 * self.step).min(self.hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pi1: f64,
    pub qb: Vec<f64>,
    /// `min_d' Q_B(d') / Q_B(d)`; 1 when both are 0, 0 when only the minimum is.
    pub relative_efficiency: Vec<f64>,
    /// Lowest-index design within [`ARGMIN_TOLERANCE`] of the minimum.
    pub argmin: usize,
}

/// A change of argmin between consecutive grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub before: f64,
    pub after: f64,
    pub from: usize,
    pub to: usize,
}

impl Crossover {
    /// Midpoint of the two grid points that bracket the change.
    pub fn location(&self) -> f64 {
        0.5 * (self.before + self.after)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub crossovers: Vec<Crossover>,
}

impl Sweep {
    /// CSV with `pi1`, one `qb_<label>` and one `releff_<label>` column per
    /// design, and the argmin label; values to `digits` significant digits.
    pub fn to_csv(&self, labels: &[String], digits: usize) -> String {
        let mut out = String::from("pi1");
        for l in labels {
            let _ = write!(out, ",qb_{l}");
        }
        for l in labels {
            let _ = write!(out, ",releff_{l}");
        }
        out.push_str(",best\n");
        for r in &self.rows {
            let _ = write!(out, "{}", format_sig(r.pi1, digits));
            for v in r.qb.iter().chain(&r.relative_efficiency) {
                let _ = write!(out, ",{}", format_sig(*v, digits));
            }
            let _ = writeln!(out, ",{}", labels[r.argmin]);
        }
        out
    }
}

/// Formats with `digits` significant digits, without exponent for ordinary
/// magnitudes and without trailing zeros.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Evaluates every design's closed-form Q_B at each grid point.
pub fn sweep(
    designs: &[WordCounts],
    grid: &SweepGrid,
    order: ModelOrder,
    pi2: f64,
) -> Result<Sweep> {
    if designs.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one design".into(),
        ));
    }
    let rows: Vec<SweepRow> = grid
        .points()
        .into_iter()
        .map(|pi1| {
            let prior = Prior::new(pi1, pi2, order)?;
            let qbs: Vec<f64> = designs.iter().map(|w| qb(w, &prior)).collect();
            let min = qbs.iter().copied().fold(f64::INFINITY, f64::min);
            let argmin = qbs
                .iter()
                .position(|&q| q <= min + ARGMIN_TOLERANCE)
                .expect("nonempty");
            let relative_efficiency = qbs
                .iter()
                .map(|&q| match (min == 0.0, q == 0.0) {
                    (true, true) => 1.0,
                    (true, false) => 0.0,
                    _ => min / q,
                })
                .collect();
            Ok(SweepRow {
                pi1,
                qb: qbs,
                relative_efficiency,
                argmin,
            })
        })
        .collect::<Result<_>>()?;
    let crossovers = rows
        .windows(2)
        .filter(|w| w[0].argmin != w[1].argmin)
        .map(|w| Crossover {
            before: w[0].pi1,
            after: w[1].pi1,
            from: w[0].argmin,
            to: w[1].argmin,
        })
        .collect();
    Ok(Sweep { rows, crossovers })
}

/// The nonzero π₁ in (0, 1] at which two designs have equal first-order Q_B:
/// `π₁ = −Δb₁ / (2Δb₂)`.
pub fn exact_first_order_crossover(a: &WordCounts, b: &WordCounts) -> Option<Rational> {
    let db1 = a.b(1)? - b.b(1)?;
    let db2 = a.b(2)? - b.b(2)?;
    if db2 == Rational::from_integer(0) {
        return None;
    }
    let pi = -db1 / (Rational::from_integer(2) * db2);
    (pi > Rational::from_integer(0) && pi <= Rational::from_integer(1)).then_some(pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wc(s1: i64, s2: i64) -> WordCounts {
        WordCounts::from_sums(12, 14, vec![s1, s2])
    }

    #[test]
    fn grid_points_hit_both_ends() {
        let g = SweepGrid::new(0.1, 0.8, 0.001).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 701);
        assert!((p[100] - 0.2).abs() < 1e-12);
        assert_eq!(*p.last().unwrap(), 0.8);
        assert!(SweepGrid::new(0.5, 0.5, 0.1).is_err());
        assert!(SweepGrid::new(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn identical_designs_have_unit_efficiency_and_no_crossovers() {
        let w = wc(32, 304);
        let s = sweep(
            &[w.clone(), w],
            &SweepGrid::new(0.0, 1.0, 0.1).unwrap(),
            ModelOrder::FirstOrder,
            0.0,
        )
        .unwrap();
        assert!(s
            .rows
            .iter()
            .all(|r| r.relative_efficiency == vec![1.0, 1.0] && r.argmin == 0));
        assert!(s.crossovers.is_empty());
    }

    #[test]
    fn exact_tie_between_level_balanced_and_unbalanced() {
        // (0, 8/3) against (2/9, 19/9): 2π/9 = 2π²(8/3 − 19/9) ⇒ π = 1/5.
        let d1 = wc(0, 384);
        let d2 = wc(32, 304);
        assert_eq!(
            exact_first_order_crossover(&d1, &d2),
            Some(Rational::new(1, 5))
        );
        assert_eq!(exact_first_order_crossover(&d1, &d1), None);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.213333333, 6), "0.213333");
        assert_eq!(format_sig(12.5, 6), "12.5");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(1234567.0, 6), "1234567");
        assert_eq!(format_sig(1e-7, 3), "1.00e-7");
    }
}
