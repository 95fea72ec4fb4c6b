//! Brute-force reference oracles for the invmilo test suites.
//!
//! Everything here works on plain vectors and avoids the simplex code under
//! test: LP optima come from vertex enumeration (every basic point is the
//! solution of an `n x n` system of active constraints), and integer regions
//! come from walking the bound box.

/// A constraint `a . x >= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ge {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Ge {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }

    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        dot(&self.a, x) >= self.b - tol
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the square system `m x = rhs`; `None` if (numerically) singular.
pub fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(p, c);
        rhs.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..n {
                        m[r][k] -= f * m[c][k];
                    }
                    rhs[r] -= f * rhs[c];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn for_each_subset(total: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > total {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + total - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All vertices of `{ x : rows, lower <= x <= upper }` with finite bounds.
pub fn vertices(rows: &[Ge], lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = lower.len();
    if n == 0 {
        return vec![vec![]];
    }
    let mut all: Vec<Ge> = rows.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        all.push(Ge::new(e.clone(), lower[j]));
        e[j] = -1.0;
        all.push(Ge::new(e, -upper[j]));
    }
    let scale = all.iter().fold(1.0f64, |acc, g| acc.max(g.b.abs()));
    let tol = 1e-9 * scale;
    let mut out: Vec<Vec<f64>> = Vec::new();
    for_each_subset(all.len(), n, |sel| {
        let m: Vec<Vec<f64>> = sel.iter().map(|&i| all[i].a.clone()).collect();
        let rhs: Vec<f64> = sel.iter().map(|&i| all[i].b).collect();
        if let Some(x) = solve_square(m, rhs) {
            if all.iter().all(|g| g.holds(&x, tol))
                && !out
                    .iter()
                    .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9 * scale))
            {
                out.push(x);
            }
        }
    });
    out
}

/// Minimum of `c . x` over a bounded polyhedron, `None` when it is empty.
pub fn lp_min(c: &[f64], rows: &[Ge], lower: &[f64], upper: &[f64]) -> Option<f64> {
    vertices(rows, lower, upper)
        .iter()
        .map(|v| dot(c, v))
        .min_by(f64::total_cmp)
}

/// Every integer point of the box `[lower, upper]` satisfying `rows`,
/// in lexicographic order.
pub fn integer_points(rows: &[Ge], lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = lower.len();
    let lo: Vec<i64> = lower.iter().map(|v| v.ceil() as i64).collect();
    let hi: Vec<i64> = upper.iter().map(|v| v.floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = lo.clone();
    loop {
        let x: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        if rows.iter().all(|g| g.holds(&x, 1e-9)) {
            out.push(x);
        }
        let mut j = n;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < hi[j] {
                cur[j] += 1;
                for k in j + 1..n {
                    cur[k] = lo[k];
                }
                break;
            }
        }
    }
}

/// A finite superset of the extreme points of a bounded mixed-integer region:
/// every integer assignment of the integer variables combined with every
/// vertex of the residual polyhedron over the continuous ones.
pub fn mixed_candidates(
    rows: &[Ge],
    lower: &[f64],
    upper: &[f64],
    is_integer: &[bool],
) -> Vec<Vec<f64>> {
    let n = lower.len();
    let int_idx: Vec<usize> = (0..n).filter(|&j| is_integer[j]).collect();
    let cont_idx: Vec<usize> = (0..n).filter(|&j| !is_integer[j]).collect();
    let int_lo: Vec<f64> = int_idx.iter().map(|&j| lower[j]).collect();
    let int_hi: Vec<f64> = int_idx.iter().map(|&j| upper[j]).collect();
    let mut out = Vec::new();
    for z in integer_points(&[], &int_lo, &int_hi) {
        let residual: Vec<Ge> = rows
            .iter()
            .map(|g| {
                let fixed: f64 = int_idx.iter().zip(&z).map(|(&j, v)| g.a[j] * v).sum();
                Ge::new(cont_idx.iter().map(|&j| g.a[j]).collect(), g.b - fixed)
            })
            .collect();
        let clo: Vec<f64> = cont_idx.iter().map(|&j| lower[j]).collect();
        let chi: Vec<f64> = cont_idx.iter().map(|&j| upper[j]).collect();
        if cont_idx.is_empty() {
            if residual.iter().all(|g| g.b <= 1e-9) {
                out.push(z.clone());
            }
            continue;
        }
        for v in vertices(&residual, &clo, &chi) {
            let mut x = vec![0.0; n];
            for (&j, val) in int_idx.iter().zip(&z) {
                x[j] = *val;
            }
            for (&j, val) in cont_idx.iter().zip(&v) {
                x[j] = *val;
            }
            out.push(x);
        }
    }
    out
}

/// Minimum of `c . x` over a bounded mixed-integer region.
pub fn mixed_min(
    c: &[f64],
    rows: &[Ge],
    lower: &[f64],
    upper: &[f64],
    is_integer: &[bool],
) -> Option<f64> {
    mixed_candidates(rows, lower, upper, is_integer)
        .iter()
        .map(|x| dot(c, x))
        .min_by(f64::total_cmp)
}

/// Minimum of `sum_j |c_j - c0_j|` subject to `c . d_k <= 0` for every `d_k`,
/// solved by enumerating candidate `c` as vertices of the 2n-dimensional
/// epigraph LP. Only suitable for tiny `n` and few directions.
pub fn inverse_min_small(c0: &[f64], dirs: &[Vec<f64>], box_radius: f64) -> Option<f64> {
    // Variables (c, t) with t_j >= c_j - c0_j, t_j >= c0_j - c_j, -d.c >= 0.
    let n = c0.len();
    let mut rows = Vec::new();
    for j in 0..n {
        let mut a = vec![0.0; 2 * n];
        a[n + j] = 1.0;
        a[j] = -1.0;
        rows.push(Ge::new(a.clone(), -c0[j]));
        a[j] = 1.0;
        rows.push(Ge::new(a, c0[j]));
    }
    for d in dirs {
        let mut a: Vec<f64> = d.iter().map(|v| -v).collect();
        a.resize(2 * n, 0.0);
        rows.push(Ge::new(a, 0.0));
    }
    let mut lower = vec![-box_radius; n];
    lower.extend(vec![0.0; n]);
    let mut upper = vec![box_radius; n];
    upper.extend(vec![2.0 * box_radius; n]);
    let mut cost = vec![0.0; n];
    cost.extend(vec![1.0; n]);
    lp_min(&cost, &rows, &lower, &upper)
}
