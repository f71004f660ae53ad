//! Property tests for the invariants of every module.

use proptest::prelude::*;

use qbdesign::criteria::{
    qb_first_order, qb_first_order_exact, qb_general, Prior, PriorSums, XiWeights,
};
use qbdesign::design::{Design, InfoMatrix, ModelMatrix, ModelOrder, Term};
use qbdesign::optimizer::{coordinate_exchange, multi_restart, qb_delta, OptimizerConfig, QbState};
use qbdesign::projection::{projection_report, InteractionRange};
use qbdesign::rng::SplitMix64;
use qbdesign::sweep::{sweep, SweepGrid};
use qbdesign::theory::{
    balance_intervals, qb_block_value, qb_block_value_exact, verify_block_pattern,
};
use qbdesign::wordcounts::{word_counts, word_counts_default, WordCounts};
use qbdesign::Rational;

fn design(max_runs: usize, max_factors: usize) -> impl Strategy<Value = Design> {
    (2..=max_runs, 1..=max_factors, any::<u64>())
        .prop_map(|(n, m, seed)| Design::random(n, m, seed).unwrap())
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn order() -> impl Strategy<Value = ModelOrder> {
    prop_oneof![Just(ModelOrder::FirstOrder), Just(ModelOrder::SecondOrder)]
}

fn prob() -> impl Strategy<Value = f64> {
    (0u32..=1000).prop_map(|i| f64::from(i) / 1000.0)
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // ---- design ----

    #[test]
    fn information_matrix_is_symmetric_with_diagonal_n(d in design(16, 7), o in order()) {
        let im = d.information_matrix(o);
        let n = d.runs() as i64;
        prop_assert_eq!(im.dim(), o.n_terms(d.factors()) + 1);
        for i in 0..im.dim() {
            prop_assert_eq!(im.get(i, i), n);
            for j in 0..im.dim() {
                prop_assert_eq!(im.get(i, j), im.get(j, i));
                prop_assert!(im.get(i, j).abs() <= n);
                prop_assert_eq!((im.get(i, j) - n).rem_euclid(2), 0);
            }
        }
    }

    #[test]
    fn model_matrix_columns_follow_their_terms(d in design(12, 6)) {
        let mm = ModelMatrix::new(&d, ModelOrder::SecondOrder);
        for (c, t) in mm.terms().iter().enumerate() {
            for r in 0..d.runs() {
                let expected = match *t {
                    Term::Intercept => 1,
                    Term::Main(i) => d.get(r, i),
                    Term::Interaction(i, j) => d.get(r, i) * d.get(r, j),
                };
                prop_assert_eq!(mm.get(r, c), expected);
            }
        }
        let m = d.factors();
        prop_assert_eq!(ModelOrder::FirstOrder.n_terms(m), m);
        prop_assert_eq!(ModelOrder::SecondOrder.n_terms(m), m + m * (m - 1) / 2);
    }

    #[test]
    fn row_permutation_preserves_information_matrix(
        (d, perm) in design(14, 6).prop_flat_map(|d| { let n = d.runs(); (Just(d), permutation(n)) }),
        o in order(),
    ) {
        let p = d.permute_rows(&perm).unwrap();
        prop_assert_eq!(p.information_matrix(o), d.information_matrix(o));
    }

    #[test]
    fn column_permutation_permutes_main_effect_block(
        (d, perm) in design(14, 6).prop_flat_map(|d| { let m = d.factors(); (Just(d), permutation(m)) }),
    ) {
        // Column c of the permuted design is column perm[c] of the original.
        let p = d.permute_columns(&perm).unwrap();
        let (a, b) = (d.information_matrix(ModelOrder::FirstOrder), p.information_matrix(ModelOrder::FirstOrder));
        for i in 0..=d.factors() {
            for j in 0..=d.factors() {
                let map = |k: usize| if k == 0 { 0 } else { perm[k - 1] + 1 };
                prop_assert_eq!(b.get(i, j), a.get(map(i), map(j)));
            }
        }
    }

    #[test]
    fn parse_serialize_round_trip(d in design(12, 8)) {
        let text = d.to_string();
        let back = Design::parse(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(&back.to_string(), &text);
        let csv = text.replace(' ', ",");
        prop_assert_eq!(Design::parse(&csv).unwrap(), d);
    }

    #[test]
    fn info_matrix_listing_round_trips(d in design(10, 4), o in order()) {
        let im = d.information_matrix(o);
        prop_assert_eq!(InfoMatrix::parse(&im.to_string()).unwrap(), im);
    }

    // ---- wordcounts ----

    #[test]
    fn word_counts_are_bounded(d in design(16, 7)) {
        let m = d.factors();
        let w = word_counts(&d, m).unwrap();
        for k in 1..=m {
            let s = w.s(k).unwrap();
            prop_assert!(s >= 0);
            let b = w.b(k).unwrap();
            prop_assert!(b >= Rational::from_integer(0));
            prop_assert!(b <= Rational::from_integer(binomial(m, k)));
        }
    }

    #[test]
    fn word_counts_invariant_under_symmetries(
        (d, rows, cols, c) in design(14, 6).prop_flat_map(|d| {
            let (n, m) = (d.runs(), d.factors());
            (Just(d), permutation(n), permutation(m), 0..m)
        }),
    ) {
        let m = d.factors();
        let base = word_counts(&d, m).unwrap();
        prop_assert_eq!(&word_counts(&d.permute_rows(&rows).unwrap(), m).unwrap(), &base);
        prop_assert_eq!(&word_counts(&d.permute_columns(&cols).unwrap(), m).unwrap(), &base);
        prop_assert_eq!(&word_counts(&d.negate_column(c).unwrap(), m).unwrap(), &base);
    }

    #[test]
    fn b2_equals_scaled_off_diagonal_sum(d in design(16, 7).prop_filter("m >= 2", |d| d.factors() >= 2)) {
        let im = d.information_matrix(ModelOrder::FirstOrder);
        let mut sum = 0i64;
        for i in 1..im.dim() {
            for j in i + 1..im.dim() {
                sum += im.get(i, j).pow(2);
            }
        }
        let n2 = (d.runs() * d.runs()) as i64;
        prop_assert_eq!(word_counts(&d, 2).unwrap().b(2).unwrap(), Rational::new(sum, n2));
    }

    #[test]
    fn b1_vanishes_iff_all_columns_balanced(d in design(12, 6)) {
        let balanced = (0..d.factors()).all(|c| d.column_sum(c) == 0);
        let b1 = word_counts(&d, 1).unwrap().b(1).unwrap();
        prop_assert_eq!(b1 == Rational::from_integer(0), balanced);
        prop_assert_eq!(d.balance_profile().n_balanced == d.factors(), balanced);
    }

    #[test]
    fn replicated_full_factorial_has_no_words(k in 1usize..=5, reps in 1usize..=3) {
        let ff = Design::full_factorial(k).unwrap();
        let rows: Vec<Vec<i8>> = (0..reps).flat_map(|_| ff.rows().map(<[i8]>::to_vec).collect::<Vec<_>>()).collect();
        let d = Design::from_rows(&rows).unwrap();
        let w = word_counts(&d, k).unwrap();
        prop_assert!(w.bs().iter().all(|b| *b == Rational::from_integer(0)));
    }

    // ---- criteria ----

    #[test]
    fn xi_weights_match_closed_forms(p1 in prob(), p2 in prob()) {
        let xi = XiWeights::new(p1, p2);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-15;
        prop_assert!(close(xi.xi10, p1));
        prop_assert!(close(xi.xi20, p1 * p1));
        prop_assert!(close(xi.xi21, p1 * p1 * p2));
        prop_assert!(close(xi.xi31, p1.powi(3) * p2));
        prop_assert!(close(xi.xi32, p1.powi(3) * p2 * p2));
        prop_assert!(close(xi.xi42, p1.powi(4) * p2 * p2));
        for v in [xi.xi10, xi.xi20, xi.xi21, xi.xi31, xi.xi32, xi.xi42] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn pair_probabilities_do_not_exceed_singles(m in 2usize..=4, p1 in prob(), p2 in prob(), o in order()) {
        let prior = Prior::new(p1, p2, o).unwrap();
        let ps = PriorSums::oracle(m, &prior).unwrap();
        let ex = PriorSums::exchangeable(m, &prior);
        for i in 0..ps.len() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ps.p0(i)));
            prop_assert!((ps.p0(i) - ex.p0(i)).abs() <= 1e-12);
            for j in 0..ps.len() {
                if i != j {
                    prop_assert!(ps.p(i, j) >= 0.0);
                    prop_assert!(ps.p(i, j) <= ps.p0(i).min(ps.p0(j)) + 1e-12);
                    prop_assert!((ps.p(i, j) - ex.p(i, j)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn general_qb_is_nonnegative_and_zero_only_without_aliasing(
        d in design(12, 5), p1 in prob(), p2 in prob(), o in order(),
    ) {
        let prior = Prior::new(p1, p2, o).unwrap();
        let ps = PriorSums::exchangeable(d.factors(), &prior);
        let im = d.information_matrix(o);
        let q = qb_general(&im, &ps).unwrap();
        prop_assert!(q >= 0.0);
        // Entry (r, c) of XᵀX is weighted by p0(c−1) on the intercept row and
        // p(r−1, c−1) elsewhere.
        let weighted_alias = (0..im.dim()).any(|r| (0..im.dim()).any(|c| {
            if r == c || im.get(r, c) == 0 { return false; }
            let w = match (r, c) {
                (0, c) => ps.p0(c - 1),
                (r, 0) => ps.p0(r - 1),
                (r, c) => ps.p(r - 1, c - 1),
            };
            w > 0.0
        }));
        prop_assert_eq!(q == 0.0, !weighted_alias);
    }

    #[test]
    fn first_order_qb_is_monotone_in_word_counts(
        s1 in 0i64..500, s2 in 0i64..500, add1 in 0i64..50, add2 in 0i64..50, p1 in (1u32..=1000).prop_map(|i| f64::from(i) / 1000.0),
    ) {
        let base = WordCounts::from_sums(12, 14, vec![s1, s2]);
        let up = WordCounts::from_sums(12, 14, vec![s1 + add1, s2 + add2]);
        prop_assert!(qb_first_order(&up, p1) >= qb_first_order(&base, p1));
    }

    #[test]
    fn exact_and_double_argmins_agree(
        ds in prop::collection::vec((0u64..1000).prop_map(|s| Design::random(12, 8, s).unwrap()), 2..6),
        num in 1i64..=1000,
    ) {
        let ws: Vec<WordCounts> = ds.iter().map(|d| word_counts(d, 2).unwrap()).collect();
        let exact: Vec<Rational> = ws.iter().map(|w| qb_first_order_exact(w, Rational::new(num, 1000))).collect();
        let exact_min = exact.iter().min().unwrap();
        let exact_arg = exact.iter().position(|q| q == exact_min).unwrap();
        let float: Vec<f64> = ws.iter().map(|w| qb_first_order(w, num as f64 / 1000.0)).collect();
        let float_min = float.iter().copied().fold(f64::INFINITY, f64::min);
        let float_arg = float.iter().position(|&q| q <= float_min + 1e-12).unwrap();
        prop_assert_eq!(exact_arg, float_arg);
    }

    // ---- optimizer ----

    #[test]
    fn descent_output_is_a_local_optimum(
        d in design(12, 6), p1 in prob(), p2 in prob(), o in order(),
    ) {
        let prior = Prior::new(p1, p2, o).unwrap();
        let initial = QbState::new(d.clone(), &prior).qb();
        let out = coordinate_exchange(d, &prior, 2, 1e-9);
        prop_assert!(out.qb <= initial);
        for r in 0..out.design.runs() {
            for c in 0..out.design.factors() {
                prop_assert!(qb_delta(&out.design, r, c, &prior).unwrap() >= -1e-9);
            }
        }
    }

    #[test]
    fn incremental_state_tracks_recomputation(
        d in design(12, 6), flips in prop::collection::vec((any::<usize>(), any::<usize>()), 1..30),
        p1 in prob(), p2 in prob(), o in order(),
    ) {
        let prior = Prior::new(p1, p2, o).unwrap();
        let mut state = QbState::new(d, &prior);
        for (r, c) in flips {
            let (r, c) = (r % state.design().runs(), c % state.design().factors());
            let predicted = state.qb() + state.delta(r, c);
            state.flip(r, c);
            let fresh = QbState::new(state.design().clone(), &prior);
            prop_assert_eq!(state.word_counts(), fresh.word_counts());
            prop_assert!((state.qb() - fresh.qb()).abs() <= 1e-10);
            prop_assert!((predicted - fresh.qb()).abs() <= 1e-10);
        }
    }

    // ---- theory ----

    #[test]
    fn interval_table_shape(q in 0usize..8, m_seed in any::<usize>()) {
        let n = 4 * q + 2;
        let m = 1 + m_seed % (n - 1);
        let t = balance_intervals(n, m).unwrap();
        let k = if m % 2 == 1 { m.div_ceil(2) } else { m / 2 + 1 };
        prop_assert_eq!(t.len(), k);
        prop_assert!(t.endpoints.windows(2).all(|w| w[0] < w[1]));
        // Adjacent splits tie exactly at every interior endpoint.
        for (i, &a) in t.interior_endpoints().iter().enumerate() {
            let lhs = qb_block_value_exact(n, m, m - i, a);
            let rhs = qb_block_value_exact(n, m, m - i - 1, a);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn block_pattern_determines_qb(d in design(14, 8), p1 in prob()) {
        let runs = d.runs();
        prop_assume!(runs % 4 == 2);
        let report = verify_block_pattern(&d).unwrap();
        prop_assert_eq!(report.matches, report.violations.is_empty());
        if report.matches {
            let q = qb_first_order(&word_counts_default(&d), p1);
            let block = qb_block_value(runs, d.factors(), report.n1, p1);
            prop_assert!((q - block).abs() <= 1e-12);
        }
    }

    // ---- sweep ----

    #[test]
    fn sweep_efficiencies_are_normalized(
        ds in prop::collection::vec((0u64..1000).prop_map(|s| Design::random(10, 6, s).unwrap()), 1..5),
        o in order(), p2 in prob(),
    ) {
        let ws: Vec<WordCounts> = ds.iter().map(word_counts_default).collect();
        let grid = SweepGrid::new(0.0, 1.0, 0.05).unwrap();
        let s = sweep(&ws, &grid, o, p2).unwrap();
        prop_assert_eq!(s.rows.len(), grid.points().len());
        for row in &s.rows {
            prop_assert!(row.relative_efficiency.iter().all(|e| (0.0..=1.0 + 1e-12).contains(e)));
            prop_assert!((row.relative_efficiency[row.argmin] - 1.0).abs() <= 1e-9);
        }
        for c in &s.crossovers {
            prop_assert!(c.before < c.after && c.from != c.to);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn projection_counts_and_ranges(d in design(16, 5).prop_filter("room for models", |d| d.runs() >= 6 && d.factors() >= 2)) {
        let fs: Vec<usize> = (2..=d.factors().min(4)).collect();
        let rep = projection_report(&d, &fs, InteractionRange::default()).unwrap();
        for r in &rep.rows {
            let pairs = r.f * (r.f - 1) / 2;
            prop_assert_eq!(
                r.n_models as i64,
                binomial(d.factors(), r.f) * binomial(pairs, r.t)
            );
            prop_assert!(r.no_est <= r.n_models);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.mean_as));
            prop_assert!(r.t + r.f < d.runs());
        }
    }

    #[test]
    fn multi_restart_is_schedule_independent(seed in any::<u64>(), p1 in prob(), o in order(), p2 in prob()) {
        let mut cfg = OptimizerConfig::new(8, 5, Prior::new(p1, p2, o).unwrap());
        cfg.restarts = 12;
        cfg.seed = seed;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| multi_restart(&cfg).unwrap())
        };
        let one = run(1);
        let four = run(4);
        prop_assert_eq!(&one, &four);
        prop_assert!((one.qb - qbdesign::criteria::qb(&one.word_counts, &cfg.prior)).abs() <= 1e-12);
        prop_assert!(one.restart_log.iter().all(|l| one.qb <= l.initial_qb + 1e-12));
    }
}

#[test]
fn mains_only_projections_of_an_orthogonal_design_are_fully_efficient() {
    let d = Design::full_factorial(4).unwrap();
    let rep = projection_report(
        &d,
        &[1, 2, 3, 4],
        InteractionRange {
            t_min: 0,
            t_max: Some(0),
        },
    )
    .unwrap();
    assert!(rep
        .rows
        .iter()
        .all(|r| r.no_est == 0 && (r.mean_as - 1.0).abs() < 1e-12));
}

#[test]
fn splitmix_streams_are_reproducible() {
    let mut a = SplitMix64::new(42);
    let first: Vec<u64> = (0..5).map(|_| a.next()).collect();
    let mut b = SplitMix64::new(42);
    assert_eq!(first, (0..5).map(|_| b.next()).collect::<Vec<_>>());
    assert_eq!(
        Design::random(6, 3, 9).unwrap(),
        Design::random(6, 3, 9).unwrap()
    );
}
