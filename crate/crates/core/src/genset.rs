//! Brute-force checks of generator sets on enumerable forward regions.
//!
//! For a finite region `X` and a target `x_hat`, a set `G` generates the
//! inverse-feasible cone `C(x_hat, X)` exactly when the cones spanned by the
//! rays `x - x_hat` over `X` and over `G` coincide. Cone membership is an LP
//! feasibility question; refutations come with a cost vector that replays the
//! difference between the two inverse-feasible sets.

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpOutcome};
use crate::model::{ForwardProblem, GeRow, Tolerances};

pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1_000_000;

const POINT_TOL: f64 = 1e-9;
// Keeps the smallest sample offset (about 1e-4 of the nearest distance) far
// above the LP feasibility tolerance.
const HALVINGS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedRegion {
    /// Lexicographically sorted feasible points.
    pub points: Vec<Vec<f64>>,
    pub problem: ForwardProblem,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GensetError {
    #[error("variable {var} has an infinite bound")]
    UnboundedBox { var: usize },
    #[error("variable {var} is continuous; only pure-integer regions can be enumerated")]
    NotPureInteger { var: usize },
    #[error("bound box holds {volume} points, above the limit of {limit}")]
    TooLarge { volume: f64, limit: u64 },
    #[error("generator {index} is not a point of the region")]
    GNotSubsetOfX { index: usize },
    #[error("point has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("cone test and its separating LP disagree on ray {ray:?}")]
    Inconclusive { ray: Vec<f64> },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Every feasible point of a bounded pure-integer problem.
pub fn enumerate_feasible(
    problem: &ForwardProblem,
    limit: u64,
) -> Result<EnumeratedRegion, GensetError> {
    let n = problem.n;
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut volume = 1.0f64;
    for j in 0..n {
        if !problem.is_integer[j] {
            return Err(GensetError::NotPureInteger { var: j });
        }
        if !problem.lower[j].is_finite() || !problem.upper[j].is_finite() {
            return Err(GensetError::UnboundedBox { var: j });
        }
        let l = (problem.lower[j] - 1e-6).ceil() as i64;
        let u = (problem.upper[j] + 1e-6).floor() as i64;
        volume *= (u - l + 1).max(0) as f64;
        lo.push(l);
        hi.push(u);
    }
    if volume > limit as f64 {
        return Err(GensetError::TooLarge { volume, limit });
    }
    let mut points = Vec::new();
    if volume == 0.0 {
        return Ok(EnumeratedRegion {
            points,
            problem: problem.clone(),
        });
    }
    let tol = Tolerances::default();
    let mut cur = lo.clone();
    'outer: loop {
        let x: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        if problem.is_feasible(&x, &tol) {
            points.push(x);
        }
        for j in (0..n).rev() {
            if cur[j] < hi[j] {
                cur[j] += 1;
                cur[j + 1..].copy_from_slice(&lo[j + 1..]);
                continue 'outer;
            }
        }
        break;
    }
    Ok(EnumeratedRegion {
        points,
        problem: problem.clone(),
    })
}

fn lp_tol() -> Tolerances {
    Tolerances {
        feasibility: 1e-8,
        ..Tolerances::default()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= POINT_TOL)
}

/// Adds `sum_k col_k[j] * lambda_k = rhs_j` as two `>=` rows.
fn push_equalities(rows: &mut Vec<GeRow>, cols: &[Vec<f64>], rhs: &[f64]) {
    for (j, &r) in rhs.iter().enumerate() {
        let coeffs: Vec<f64> = cols.iter().map(|c| c[j]).collect();
        rows.push(GeRow {
            coeffs: coeffs.iter().map(|v| -v).collect(),
            rhs: -r,
        });
        rows.push(GeRow { coeffs, rhs: r });
    }
}

fn feasible(lp: &LinearProgram) -> Result<bool, GensetError> {
    Ok(match solve_lp(lp, &lp_tol())? {
        LpOutcome::Optimal(_) | LpOutcome::Unbounded { .. } => true,
        LpOutcome::Infeasible => false,
    })
}

/// True if `target` is a convex combination of `points`.
pub fn in_convex_hull(target: &[f64], points: &[Vec<f64>]) -> Result<bool, GensetError> {
    if points.is_empty() {
        return Ok(false);
    }
    let k = points.len();
    let mut rows = Vec::new();
    push_equalities(&mut rows, points, target);
    push_equalities(&mut rows, &vec![vec![1.0]; k], &[1.0]);
    let lp = LinearProgram::new(vec![0.0; k], rows, vec![0.0; k], vec![f64::INFINITY; k]);
    feasible(&lp)
}

/// True if `ray` is a nonnegative combination of `generators`.
pub fn in_cone(ray: &[f64], generators: &[Vec<f64>]) -> Result<bool, GensetError> {
    if generators.is_empty() {
        return Ok(ray.iter().all(|v| v.abs() <= POINT_TOL));
    }
    let k = generators.len();
    let mut rows = Vec::new();
    push_equalities(&mut rows, generators, ray);
    let lp = LinearProgram::new(vec![0.0; k], rows, vec![0.0; k], vec![f64::INFINITY; k]);
    feasible(&lp)
}

/// A cost vector `c` with `c . g >= 0` for every generator and `c . ray <= -1`,
/// of least 1-norm; `None` when `ray` lies in the cone.
pub fn separating_direction(
    ray: &[f64],
    generators: &[Vec<f64>],
) -> Result<Option<Vec<f64>>, GensetError> {
    let n = ray.len();
    let widen = |a: &[f64]| -> Vec<f64> { a.iter().copied().chain(a.iter().map(|v| -v)).collect() };
    let mut rows: Vec<GeRow> = generators
        .iter()
        .map(|g| GeRow {
            coeffs: widen(g),
            rhs: 0.0,
        })
        .collect();
    rows.push(GeRow {
        coeffs: widen(ray).into_iter().map(|v| -v).collect(),
        rhs: 1.0,
    });
    let lp = LinearProgram::new(
        vec![1.0; 2 * n],
        rows,
        vec![0.0; 2 * n],
        vec![f64::INFINITY; 2 * n],
    );
    Ok(match solve_lp(&lp, &lp_tol())? {
        LpOutcome::Optimal(s) => Some((0..n).map(|j| s.x[j] - s.x[n + j]).collect()),
        _ => None,
    })
}

/// Points of `points` that are not convex combinations of the others.
pub fn extreme_points(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, GensetError> {
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !uniq.iter().any(|q| same_point(p, q)) {
            uniq.push(p.clone());
        }
    }
    let mut out = Vec::new();
    for (i, p) in uniq.iter().enumerate() {
        let others: Vec<Vec<f64>> = uniq
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, q)| q.clone())
            .collect();
        if !in_convex_hull(p, &others)? {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// `c . x_hat <= c . x` for every point, with `1e-9` slack.
pub fn is_inverse_feasible(c: &[f64], x_hat: &[f64], points: &[Vec<f64>]) -> bool {
    let base = dot(c, x_hat);
    points.iter().all(|x| base <= dot(c, x) + 1e-9)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessSide {
    /// `direction` is inverse-feasible over `G` but `point` (in the region) beats `x_hat`.
    RegionPointUncovered,
    /// `direction` is inverse-feasible over the region but `point` (in `G`) beats `x_hat`.
    GeneratorOutsideRegionCone,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub direction: Vec<f64>,
    pub point: Vec<f64>,
    pub side: WitnessSide,
}

impl Witness {
    /// Re-checks the refutation from scratch.
    pub fn replay(&self, g: &[Vec<f64>], x_hat: &[f64], region: &[Vec<f64>]) -> bool {
        let c = &self.direction;
        let beats = dot(c, x_hat) - dot(c, &self.point) > 1e-9;
        match self.side {
            WitnessSide::RegionPointUncovered => {
                beats
                    && region.iter().any(|x| same_point(x, &self.point))
                    && is_inverse_feasible(c, x_hat, g)
            }
            WitnessSide::GeneratorOutsideRegionCone => {
                beats
                    && g.iter().any(|x| same_point(x, &self.point))
                    && is_inverse_feasible(c, x_hat, region)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorVerdict {
    pub is_generator: bool,
    pub witness: Option<Witness>,
    /// Outcome of the sampled ball check, when it was run, compared with the
    /// cone verdict.
    pub advisory_agrees: Option<bool>,
}

/// Rays `p - x_hat` scaled to unit 1-norm; zero rays dropped.
fn unit_rays(points: &[Vec<f64>], x_hat: &[f64]) -> Vec<(usize, Vec<f64>)> {
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let r: Vec<f64> = p.iter().zip(x_hat).map(|(a, b)| a - b).collect();
            let norm: f64 = r.iter().map(|v| v.abs()).sum();
            (norm > POINT_TOL).then(|| (i, r.iter().map(|v| v / norm).collect()))
        })
        .collect()
}

fn check_dims(sets: &[&[Vec<f64>]], n: usize) -> Result<(), GensetError> {
    for set in sets {
        if let Some(p) = set.iter().find(|p| p.len() != n) {
            return Err(GensetError::DimensionMismatch {
                got: p.len(),
                expected: n,
            });
        }
    }
    Ok(())
}

/// First ray of `from` outside the cone of `into`, with a separating cost.
fn uncovered(
    from: &[Vec<f64>],
    into: &[Vec<f64>],
    x_hat: &[f64],
) -> Result<Option<(usize, Vec<f64>)>, GensetError> {
    let gens: Vec<Vec<f64>> = unit_rays(into, x_hat).into_iter().map(|(_, r)| r).collect();
    for (i, ray) in unit_rays(from, x_hat) {
        if !in_cone(&ray, &gens)? {
            // c . g >= 0 on generator rays means c . (x_hat - g) <= 0.
            let c = separating_direction(&ray, &gens)?
                .ok_or_else(|| GensetError::Inconclusive { ray: ray.clone() })?;
            return Ok(Some((i, c)));
        }
    }
    Ok(None)
}

/// Cone equality between the rays of `g` and of the region, both ways.
pub fn is_generator_set(
    g: &[Vec<f64>],
    x_hat: &[f64],
    region: &EnumeratedRegion,
) -> Result<GeneratorVerdict, GensetError> {
    check_dims(&[g, &region.points], x_hat.len())?;
    if let Some((i, c)) = uncovered(&region.points, g, x_hat)? {
        return Ok(GeneratorVerdict {
            is_generator: false,
            witness: Some(Witness {
                direction: c,
                point: region.points[i].clone(),
                side: WitnessSide::RegionPointUncovered,
            }),
            advisory_agrees: None,
        });
    }
    if let Some((i, c)) = uncovered(g, &region.points, x_hat)? {
        return Ok(GeneratorVerdict {
            is_generator: false,
            witness: Some(Witness {
                direction: c,
                point: g[i].clone(),
                side: WitnessSide::GeneratorOutsideRegionCone,
            }),
            advisory_agrees: None,
        });
    }
    Ok(GeneratorVerdict {
        is_generator: true,
        witness: None,
        advisory_agrees: None,
    })
}

/// For `G` inside the region only one inclusion is needed: every region ray
/// must lie in the cone of `G`. The sampled ball check runs alongside and its
/// agreement is reported.
pub fn is_forward_feasible_generator_set(
    g: &[Vec<f64>],
    x_hat: &[f64],
    region: &EnumeratedRegion,
) -> Result<GeneratorVerdict, GensetError> {
    check_dims(&[g, &region.points], x_hat.len())?;
    for (index, p) in g.iter().enumerate() {
        if !region.points.iter().any(|x| same_point(x, p)) {
            return Err(GensetError::GNotSubsetOfX { index });
        }
    }
    let ball = ball_check(g, x_hat, &region.points)?;
    let (is_generator, witness) = match uncovered(&region.points, g, x_hat)? {
        Some((i, c)) => (
            false,
            Some(Witness {
                direction: c,
                point: region.points[i].clone(),
                side: WitnessSide::RegionPointUncovered,
            }),
        ),
        None => (true, None),
    };
    Ok(GeneratorVerdict {
        is_generator,
        witness,
        advisory_agrees: Some(ball == is_generator),
    })
}

/// Sampled form of the ball criterion: points at 1-norm distance `eps` from
/// `x_hat` toward each region point must lie in `conv(G ∪ {x_hat})`. `eps`
/// starts at half the smallest distance from `x_hat` to another region point
/// and is halved until the samples pass or the halvings run out.
pub fn ball_check(g: &[Vec<f64>], x_hat: &[f64], points: &[Vec<f64>]) -> Result<bool, GensetError> {
    let dirs = unit_rays(points, x_hat);
    if dirs.is_empty() {
        return Ok(true);
    }
    let min_dist = points
        .iter()
        .map(|p| p.iter().zip(x_hat).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .filter(|&d| d > POINT_TOL)
        .fold(f64::INFINITY, f64::min);
    let mut hull: Vec<Vec<f64>> = g.to_vec();
    hull.push(x_hat.to_vec());
    let mut eps = min_dist / 2.0;
    for _ in 0..=HALVINGS {
        let mut all_in = true;
        for (_, d) in &dirs {
            let y: Vec<f64> = x_hat.iter().zip(d).map(|(a, b)| a + eps * b).collect();
            if !in_convex_hull(&y, &hull)? {
                all_in = false;
                break;
            }
        }
        if all_in {
            return Ok(true);
        }
        eps /= 2.0;
    }
    Ok(false)
}
