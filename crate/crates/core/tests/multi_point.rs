mod common;

use common::{hexagon, knapsack, oracle_points, random_pure, TestRng};
use invmilo::driver::{preset, solve_inverse, solve_inverse_multi, Limits, Variant, VariantConfig};
use invmilo::master::{solve_master_multi, MasterConfig, PointData};
use invmilo::model::{CutPool, InverseInstance, Tolerances};
use rand::{Rng, SeedableRng};

fn presets() -> Vec<VariantConfig> {
    Variant::ALL
        .iter()
        .map(|v| preset(v.name()).unwrap())
        .collect()
}

fn retarget(inst: &InverseInstance, x_hat: Vec<f64>, k: usize) -> InverseInstance {
    InverseInstance::new(
        inst.problem.clone(),
        inst.c0.clone(),
        x_hat,
        format!("{}_{k}", inst.label),
    )
}

fn multi_fixtures() -> Vec<Vec<InverseInstance>> {
    let k = knapsack();
    let f = hexagon();
    let mut out = vec![
        vec![
            retarget(&k, vec![1.0, 1.0], 0),
            retarget(&k, vec![2.0, 0.0], 1),
            retarget(&k, vec![0.0, 3.0], 2),
        ],
        vec![
            retarget(&f, vec![3.0, 9.0], 0),
            retarget(&f, vec![6.0, 8.0], 1),
        ],
    ];
    // Same c0, different regions.
    let mut tight = k.clone();
    tight.problem.upper = vec![2.0, 2.0];
    tight.x_hat = vec![2.0, 2.0];
    out.push(vec![k.clone(), tight]);
    let mut rng = TestRng::seed_from_u64(41);
    for i in 0..4 {
        let base = random_pure(&mut rng, &format!("m{i}"));
        let pts = oracle_points(&base.problem);
        let d = rng.gen_range(2..=3);
        out.push(
            (0..d)
                .map(|j| retarget(&base, pts[rng.gen_range(0..pts.len())].clone(), j))
                .collect(),
        );
    }
    out
}

fn oracle_multi(insts: &[InverseInstance], lambda: Option<f64>) -> f64 {
    let pools: Vec<CutPool> = insts
        .iter()
        .map(|i| CutPool::from_points(oracle_points(&i.problem)))
        .collect();
    let data: Vec<PointData<'_>> = insts
        .iter()
        .zip(&pools)
        .map(|(i, pool)| PointData {
            x_hat: &i.x_hat,
            pool,
            problem: &i.problem,
        })
        .collect();
    solve_master_multi(
        &insts[0].c0,
        &data,
        lambda,
        &MasterConfig::default(),
        &Tolerances::default(),
    )
    .unwrap()
    .objective
}

#[test]
fn single_point_reductions() {
    let mut rng = TestRng::seed_from_u64(42);
    let mut singles = vec![knapsack(), hexagon()];
    for i in 0..6 {
        singles.push(random_pure(&mut rng, &format!("s{i}")));
    }
    for inst in &singles {
        for v in presets() {
            let single = solve_inverse(inst, &v, &Limits::default()).unwrap();
            let multi =
                solve_inverse_multi(std::slice::from_ref(inst), None, 1, &v, &Limits::default())
                    .unwrap();
            assert_eq!(
                multi.objective.to_bits(),
                single.objective.to_bits(),
                "{}",
                inst.label
            );
            assert_eq!(multi.c_star, single.c_star);
            for lambda in [1.0, 2.5] {
                let reg = solve_inverse_multi(
                    std::slice::from_ref(inst),
                    Some(lambda),
                    1,
                    &v,
                    &Limits::default(),
                )
                .unwrap();
                assert!(
                    (reg.objective - single.objective).abs() <= 1e-6,
                    "{}",
                    inst.label
                );
            }
        }
    }
}

#[test]
fn zero_weight_costs_nothing() {
    for group in multi_fixtures() {
        let r = solve_inverse_multi(
            &group,
            Some(0.0),
            1,
            &preset("CPTR").unwrap(),
            &Limits::default(),
        )
        .unwrap();
        assert!(r.objective.abs() <= 1e-9);
        assert_eq!(r.c_star, group[0].c0);
    }
}

#[test]
fn v_star_does_not_change_the_optimum() {
    for group in multi_fixtures() {
        for lambda in [None, Some(0.5), Some(2.0)] {
            let expected = oracle_multi(&group, lambda);
            for v in presets() {
                let one = solve_inverse_multi(&group, lambda, 1, &v, &Limits::default()).unwrap();
                let all = solve_inverse_multi(&group, lambda, group.len(), &v, &Limits::default())
                    .unwrap();
                assert!((one.objective - all.objective).abs() <= 1e-6);
                assert!(
                    (one.objective - expected).abs() <= 1e-6,
                    "{} {} {lambda:?}: {} vs {expected}",
                    group[0].label,
                    v.name,
                    one.objective
                );
                assert!(one.master_calls >= all.master_calls);
            }
        }
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let v = preset("CP").unwrap();
    assert!(solve_inverse_multi(&[], None, 1, &v, &Limits::default()).is_err());
    let k = knapsack();
    assert!(
        solve_inverse_multi(std::slice::from_ref(&k), None, 2, &v, &Limits::default()).is_err()
    );
    let mut other = k.clone();
    other.c0 = vec![0.0, 0.0];
    assert!(solve_inverse_multi(&[k, other], None, 1, &v, &Limits::default()).is_err());
}
