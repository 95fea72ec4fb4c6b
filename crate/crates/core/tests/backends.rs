mod common;

use common::{
    oracle_points, oracle_rows, random_lp, random_mixed, random_pure, to_lp, RandomLp, TestRng,
};
use invmilo::lp::{solve_lp, LpOutcome};
use invmilo::milp::{solve_milp, MilpStatus, StopPolicy};
use invmilo::model::Tolerances;
use invmilo_oracle::{dot, integer_points, lp_min, mixed_min, Ge};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn lp_matches_vertex_enumeration_with_valid_duals() {
    let mut rng = TestRng::seed_from_u64(2024);
    let tol = Tolerances::default();
    let mut optimal = 0;
    for case in 0..200 {
        let r = random_lp(&mut rng);
        let expected = lp_min(&r.c, &r.rows, &r.lower, &r.upper);
        let got = solve_lp(&to_lp(&r), &tol).unwrap();
        match (expected, got) {
            (None, LpOutcome::Infeasible) => {}
            (Some(v), LpOutcome::Optimal(s)) => {
                optimal += 1;
                let scale = 1.0f64.max(v.abs());
                assert!(
                    (s.objective - v).abs() <= 1e-7 * scale,
                    "case {case}: {} vs {v}",
                    s.objective
                );
                assert!((dot(&r.c, &s.x) - s.objective).abs() <= 1e-7 * scale);
                for (i, g) in r.rows.iter().enumerate() {
                    let y = s.duals[i];
                    assert!(y >= -1e-7, "case {case}: negative dual {y}");
                    assert!(g.holds(&s.x, 1e-7));
                    assert!(
                        (y * (dot(&g.a, &s.x) - g.b)).abs() <= 1e-6,
                        "case {case}: slackness"
                    );
                }
                let mut dual_obj = 0.0;
                for j in 0..r.c.len() {
                    let ya: f64 = r.rows.iter().zip(&s.duals).map(|(g, y)| y * g.a[j]).sum();
                    let d = r.c[j] - ya;
                    assert!(
                        (d - s.reduced_costs[j]).abs() <= 1e-7,
                        "case {case}: reduced cost {j}"
                    );
                    let at_lo = (s.x[j] - r.lower[j]).abs() <= 1e-7;
                    let at_hi = (s.x[j] - r.upper[j]).abs() <= 1e-7;
                    if !at_lo && !at_hi {
                        assert!(d.abs() <= 1e-7, "case {case}: basic column {j} has d = {d}");
                    } else if at_lo && !at_hi {
                        assert!(d >= -1e-7);
                    } else if at_hi && !at_lo {
                        assert!(d <= 1e-7);
                    }
                    dual_obj += d * if d >= 0.0 { r.lower[j] } else { r.upper[j] };
                }
                dual_obj += r
                    .rows
                    .iter()
                    .zip(&s.duals)
                    .map(|(g, y)| y * g.b)
                    .sum::<f64>();
                assert!(
                    (dual_obj - v).abs() <= 1e-6 * scale,
                    "case {case}: duality gap"
                );
            }
            (e, g) => panic!("case {case}: oracle {e:?}, solver {g:?}"),
        }
    }
    assert!(optimal >= 150);
}

#[test]
fn pure_milp_matches_enumeration() {
    let mut rng = TestRng::seed_from_u64(7);
    let tol = Tolerances::default();
    for case in 0..100 {
        let inst = random_pure(&mut rng, "p");
        let p = &inst.problem;
        let c: Vec<f64> = (0..p.n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let pts = integer_points(&oracle_rows(p), &p.lower, &p.upper);
        let expected = pts
            .iter()
            .map(|x| dot(&c, x))
            .min_by(f64::total_cmp)
            .unwrap();
        let out = solve_milp(p, &c, &StopPolicy::default(), &tol).unwrap();
        assert_eq!(out.status, MilpStatus::Optimal, "case {case}");
        let got = out.objective.unwrap();
        assert!(
            (got - expected).abs() <= 1e-6,
            "case {case}: {got} vs {expected}"
        );
        assert!(p.is_feasible(out.x.as_ref().unwrap(), &tol));
    }
}

#[test]
fn mixed_milp_matches_residual_lp_oracle() {
    let mut rng = TestRng::seed_from_u64(8);
    let tol = Tolerances::default();
    for case in 0..50 {
        let inst = random_mixed(&mut rng, "m");
        let p = &inst.problem;
        let c: Vec<f64> = (0..p.n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let expected = mixed_min(&c, &oracle_rows(p), &p.lower, &p.upper, &p.is_integer).unwrap();
        let out = solve_milp(p, &c, &StopPolicy::default(), &tol).unwrap();
        assert_eq!(out.status, MilpStatus::Optimal, "case {case}");
        let got = out.objective.unwrap();
        assert!(
            (got - expected).abs() <= 1e-6,
            "case {case}: {got} vs {expected}"
        );
    }
}

#[test]
fn ge_normalization_preserves_enumerated_sets() {
    let mut rng = TestRng::seed_from_u64(9);
    let tol = Tolerances::default();
    for _ in 0..60 {
        let inst = random_pure(&mut rng, "g");
        let p = &inst.problem;
        let ge: Vec<Ge> = p
            .ge_rows()
            .into_iter()
            .map(|r| Ge::new(r.coeffs, r.rhs))
            .collect();
        let via_ge = integer_points(&ge, &p.lower, &p.upper);
        let via_rows: Vec<Vec<f64>> = integer_points(&[], &p.lower, &p.upper)
            .into_iter()
            .filter(|x| p.is_feasible(x, &tol))
            .collect();
        assert_eq!(via_ge, via_rows);
        assert_eq!(via_ge, oracle_points(p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_optimum_lower_bounds_every_vertex(
        c in prop::collection::vec(-5.0f64..5.0, 3),
        a in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 3), 1..4),
        slack in prop::collection::vec(0.0f64..2.0, 4),
    ) {
        let lower = vec![0.0; 3];
        let upper = vec![2.0; 3];
        let anchor = [1.0, 1.0, 1.0];
        let rows: Vec<Ge> = a
            .iter()
            .zip(&slack)
            .map(|(a, s)| Ge::new(a.clone(), dot(a, &anchor) - s))
            .collect();
        let lp = to_lp(&RandomLp { c: c.clone(), rows: rows.clone(), lower: lower.clone(), upper: upper.clone() });
        let s = solve_lp(&lp, &Tolerances::default()).unwrap();
        let s = s.optimal().expect("anchor is feasible");
        for v in invmilo_oracle::vertices(&rows, &lower, &upper) {
            prop_assert!(s.objective <= dot(&c, &v) + 1e-7);
        }
    }

    #[test]
    fn milp_optimum_is_attained_and_minimal(seed in any::<u64>()) {
        let mut rng = TestRng::seed_from_u64(seed);
        let inst = random_pure(&mut rng, "q");
        let p = &inst.problem;
        let c: Vec<f64> = (0..p.n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let out = solve_milp(p, &c, &StopPolicy::default(), &Tolerances::default()).unwrap();
        let x = out.x.unwrap();
        prop_assert!((dot(&c, &x) - out.objective.unwrap()).abs() <= 1e-9);
        for y in oracle_points(p) {
            prop_assert!(out.objective.unwrap() <= dot(&c, &y) + 1e-6);
        }
    }
}
