mod common;

use std::path::Path;

use common::{
    bounded_fixtures, hexagon, knapsack, oracle_points, pair, random_mixed, random_pure, TestRng,
};
use invmilo::bench::{
    generate_instances, performance_profile, read_bench_csv, run_bench, theta_grid,
    write_bench_csv, write_profile_csv, BenchRow, CurveKind, Generated,
};
use invmilo::driver::{preset, Variant, VariantConfig};
use invmilo::files::{instance_from_str, instance_to_string, read_instance, write_instance};
use invmilo::model::{validate_instance, Tolerances};
use invmilo::mps::parse_mps;
use proptest::prelude::*;
use rand::SeedableRng;

const KNAPSACK_MPS: &str = "\
NAME          KNAP
ROWS
 N  cost
 G  cover
COLUMNS
    MARKER                 'MARKER'                 'INTORG'
    x1        cost         1   cover        1
    x2        cost         2   cover        1
    MARKER                 'MARKER'                 'INTEND'
RHS
    rhs       cover        2
BOUNDS
 UP bnd       x1           3
 UP bnd       x2           3
ENDATA
";

/// `2 <= x1 + x2 <= 3` written as a G row with range 1.
const RANGED_MPS: &str = "\
NAME RANGED
ROWS
 N obj
 G band
COLUMNS
 MARKER MARKER INTORG
 x1 obj 1 band 1
 x2 obj 1 band 1
 MARKER MARKER INTEND
RHS
 rhs band 2
RANGES
 rng band 1
BOUNDS
 UP bnd x1 3
 UP bnd x2 3
ENDATA
";

fn presets() -> Vec<VariantConfig> {
    Variant::ALL
        .iter()
        .map(|v| preset(v.name()).unwrap())
        .collect()
}

#[test]
fn mps_fixtures_enumerate_to_hand_grids() {
    let p = parse_mps(KNAPSACK_MPS).unwrap();
    assert_eq!(oracle_points(&p), oracle_points(&knapsack().problem));
    assert_eq!(p.objective, vec![1.0, 2.0]);
    let r = parse_mps(RANGED_MPS).unwrap();
    let mut grid = Vec::new();
    for a in 0..=3 {
        for b in 0..=3 {
            if (2..=3).contains(&(a + b)) {
                grid.push(vec![a as f64, b as f64]);
            }
        }
    }
    assert_eq!(oracle_points(&r), grid);
}

#[test]
fn generated_instances_validate_and_repeat() {
    let mut rng = TestRng::seed_from_u64(51);
    let mut problems: Vec<_> = bounded_fixtures().into_iter().map(|i| i.problem).collect();
    for k in 0..6 {
        problems.push(random_pure(&mut rng, &format!("g{k}")).problem);
        problems.push(random_mixed(&mut rng, &format!("h{k}")).problem);
    }
    for p in problems {
        let first = generate_instances(&p, 3, None, 10, 3).unwrap();
        assert_eq!(first, generate_instances(&p, 3, None, 10, 3).unwrap());
        let Generated::Instances(list) = first else {
            panic!("{} dropped", p.name);
        };
        for inst in &list {
            assert!(validate_instance(inst, &Tolerances::default())
                .unwrap()
                .is_ok());
            assert_eq!(inst.c0, p.objective);
        }
    }
}

#[test]
fn instance_files_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    for inst in bounded_fixtures() {
        let path = dir.path().join(format!("{}.json", inst.label));
        write_instance(&path, &inst).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
    }
}

fn bench_rows() -> Vec<BenchRow> {
    run_bench(&[pair(), knapsack(), hexagon()], &presets(), None)
}

#[test]
fn bench_tables_are_consistent() {
    let rows = bench_rows();
    assert_eq!(rows.len(), 15);
    for r in &rows {
        assert!(r.solved());
        assert!(r.total_s >= 0.0 && r.cutgen_s >= 0.0 && r.master_s >= 0.0);
        assert!(r.total_s >= (r.cutgen_s + r.master_s) * 0.95, "{r:?}");
    }
    let mut buf = Vec::new();
    write_bench_csv(&rows, &mut buf, true).unwrap();
    assert_eq!(read_bench_csv(&buf[..]).unwrap(), rows);
    let mut zeroed = Vec::new();
    write_bench_csv(&rows, &mut zeroed, false).unwrap();
    let mut again = Vec::new();
    write_bench_csv(&bench_rows(), &mut again, false).unwrap();
    assert_eq!(zeroed, again);
}

#[test]
fn profile_curves_are_monotone_and_bounded() {
    let rows = bench_rows();
    let prof = performance_profile(&rows);
    let instances = 3.0;
    for v in presets() {
        let cum: Vec<_> = prof
            .iter()
            .filter(|p| p.variant == v.name && p.kind == CurveKind::Cumulative)
            .collect();
        assert_eq!(cum.len(), 3);
        for w in cum.windows(2) {
            assert!(w[1].x >= w[0].x && w[1].y >= w[0].y);
        }
        let ratio: Vec<_> = prof
            .iter()
            .filter(|p| p.variant == v.name && p.kind == CurveKind::Ratio)
            .collect();
        assert_eq!(ratio.len(), theta_grid().len());
        for w in ratio.windows(2) {
            assert!(w[1].x > w[0].x && w[1].y >= w[0].y);
        }
        assert!(ratio
            .iter()
            .all(|p| p.y <= 1.0 && cum.iter().all(|c| c.y <= instances)));
    }
    let mut out = Vec::new();
    write_profile_csv(&prof, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 1 + prof.len());
    assert_eq!(prof.len(), 5 * 3 + 5 * 41);
}

#[test]
fn profile_matches_hand_table() {
    let mk = |i: &str, v: &str, t: f64, ok: bool| BenchRow {
        instance: i.into(),
        variant: v.into(),
        status: if ok { "Optimal" } else { "TimeLimit" }.into(),
        objective: 0.0,
        iterations: 0,
        cuts: 0,
        total_s: t,
        cutgen_s: 0.0,
        master_s: 0.0,
    };
    let rows = vec![
        mk("a", "A", 1.0, true),
        mk("a", "B", 2.0, true),
        mk("b", "A", 4.0, true),
        mk("b", "B", 1.0, true),
        mk("c", "A", 3.0, true),
        mk("c", "B", 9.0, false),
    ];
    // Best times: a 1, b 1, c 3. Ratios: A = (1, 4, 1), B = (2, 1, unsolved).
    let prof = performance_profile(&rows);
    let at = |v: &str, theta: f64| {
        prof.iter()
            .find(|p| p.variant == v && p.kind == CurveKind::Ratio && (p.x - theta).abs() < 1e-12)
            .unwrap()
            .y
    };
    let third = 1.0 / 3.0;
    assert!((at("A", 1.0) - 2.0 * third).abs() < 1e-12);
    assert!((at("B", 1.0) - third).abs() < 1e-12);
    assert!((at("A", 2.0) - 2.0 * third).abs() < 1e-12);
    assert!((at("B", 2.0) - 2.0 * third).abs() < 1e-12);
    assert!((at("A", 4.0) - 1.0).abs() < 1e-12);
    assert!((at("B", 1024.0) - 2.0 * third).abs() < 1e-12);
    let cum_a: Vec<(f64, f64)> = prof
        .iter()
        .filter(|p| p.variant == "A" && p.kind == CurveKind::Cumulative)
        .map(|p| (p.x, p.y))
        .collect();
    assert_eq!(cum_a, vec![(1.0, 1.0), (3.0, 2.0), (4.0, 3.0)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_round_trips(seed in any::<u64>(), mixed in any::<bool>()) {
        let mut rng = TestRng::seed_from_u64(seed);
        let inst = if mixed { random_mixed(&mut rng, "x") } else { random_pure(&mut rng, "x") };
        let text = instance_to_string(&inst);
        let back = instance_from_str(&text, Path::new(".")).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(instance_to_string(&back), text);
    }
}
