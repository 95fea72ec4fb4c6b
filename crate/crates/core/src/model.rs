//! Problem and instance data shared by every solver component.
//!
//! A [`ForwardProblem`] describes the mixed-integer region
//! `X = { x : rows hold, lower <= x <= upper, x_j integer for is_integer[j] }`.
//! Rows keep their original relation so files round-trip exactly; solver
//! code asks for the `>=`-normalized view with [`ForwardProblem::ge_rows`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row relation as written by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "=",
        })
    }
}

/// One linear constraint `sum_j coeffs[j].1 * x[coeffs[j].0]  rel  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A row in `a . x >= rhs` form, dense over the variable count.
#[derive(Clone, Debug, PartialEq)]
pub struct GeRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl GeRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("row {row} references variable {index} but the problem has {n} variables")]
    IndexOutOfRange { row: usize, index: usize, n: usize },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
}

/// Constraint data of the forward problem `min c.x s.t. x in X`.
///
/// `objective` is the problem's own cost vector (all zeros when the source
/// carries none). It is not part of `X`; the instance generator uses it as
/// the reference cost.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardProblem {
    pub name: String,
    pub n: usize,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub is_integer: Vec<bool>,
    pub objective: Vec<f64>,
}

impl ForwardProblem {
    /// Builds and checks a problem. Bounds use `f64::INFINITY` /
    /// `f64::NEG_INFINITY` for missing limits.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        rows: Vec<Row>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        is_integer: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let p = Self {
            name: name.into(),
            n,
            rows,
            lower,
            upper,
            is_integer,
            objective: vec![0.0; n],
        };
        p.check()?;
        Ok(p)
    }

    pub fn with_objective(mut self, objective: Vec<f64>) -> Result<Self, ModelError> {
        self.objective = objective;
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let n = self.n;
        for (what, len) in [
            ("lower bounds", self.lower.len()),
            ("upper bounds", self.upper.len()),
            ("integrality mask", self.is_integer.len()),
            ("objective", self.objective.len()),
        ] {
            if len != n {
                return Err(ModelError::DimensionMismatch {
                    what,
                    got: len,
                    expected: n,
                });
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(ModelError::IndexOutOfRange {
                        row: r,
                        index: j,
                        n,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite {
                        what: "row coefficients",
                    });
                }
            }
            if !row.rhs.is_finite() {
                return Err(ModelError::NonFinite { what: "row rhs" });
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(ModelError::NonFinite { what: "bounds" });
            }
            if l > u {
                return Err(ModelError::InvertedBounds {
                    var: j,
                    lower: l,
                    upper: u,
                });
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { what: "objective" });
        }
        Ok(())
    }

    /// Number of continuous variables.
    pub fn continuous_count(&self) -> usize {
        self.is_integer.iter().filter(|b| !**b).count()
    }

    /// Rows in `>=` form. An equality row becomes two rows.
    pub fn ge_rows(&self) -> Vec<GeRow> {
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut dense = vec![0.0; self.n];
            for &(j, a) in &row.coeffs {
                dense[j] += a;
            }
            match row.relation {
                Relation::Ge => out.push(GeRow {
                    coeffs: dense,
                    rhs: row.rhs,
                }),
                Relation::Le => out.push(GeRow {
                    coeffs: dense.iter().map(|a| -a).collect(),
                    rhs: -row.rhs,
                }),
                Relation::Eq => {
                    out.push(GeRow {
                        coeffs: dense.iter().map(|a| -a).collect(),
                        rhs: -row.rhs,
                    });
                    out.push(GeRow {
                        coeffs: dense,
                        rhs: row.rhs,
                    });
                }
            }
        }
        out
    }

    /// `>=` rows followed by one row per finite variable bound
    /// (`x_j >= l_j`, then `-x_j >= -u_j`). This is the monolithic `A x >= b`
    /// description used by the duality constraints of the master problem.
    pub fn ge_rows_with_bounds(&self) -> Vec<GeRow> {
        let mut out = self.ge_rows();
        for j in 0..self.n {
            if self.lower[j].is_finite() {
                let mut a = vec![0.0; self.n];
                a[j] = 1.0;
                out.push(GeRow {
                    coeffs: a,
                    rhs: self.lower[j],
                });
            }
            if self.upper[j].is_finite() {
                let mut a = vec![0.0; self.n];
                a[j] = -1.0;
                out.push(GeRow {
                    coeffs: a,
                    rhs: -self.upper[j],
                });
            }
        }
        out
    }

    /// True when every variable has finite bounds.
    pub fn is_bounded_box(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Checks rows, bounds and integrality of `x` (length `n`).
    pub fn is_feasible(&self, x: &[f64], tol: &Tolerances) -> bool {
        self.violations(x, tol).is_empty()
    }

    pub(crate) fn violations(&self, x: &[f64], tol: &Tolerances) -> Vec<Violation> {
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            let lhs = row.activity(x);
            let residual = match row.relation {
                Relation::Ge => row.rhs - lhs,
                Relation::Le => lhs - row.rhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            if residual > tol.feasibility {
                out.push(Violation::Row { row: r, residual });
            }
        }
        for j in 0..self.n {
            if self.lower[j] - x[j] > tol.feasibility {
                out.push(Violation::LowerBound {
                    var: j,
                    residual: self.lower[j] - x[j],
                });
            }
            if x[j] - self.upper[j] > tol.feasibility {
                out.push(Violation::UpperBound {
                    var: j,
                    residual: x[j] - self.upper[j],
                });
            }
            if self.is_integer[j] && (x[j] - x[j].round()).abs() > tol.integrality {
                out.push(Violation::Integrality {
                    var: j,
                    value: x[j],
                });
            }
        }
        out
    }
}

/// Numerical tolerances shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Absolute slack allowed on row and bound residuals.
    pub feasibility: f64,
    /// Distance from the nearest integer accepted as integral.
    pub integrality: f64,
    /// Reduced-cost threshold for simplex pricing.
    pub optimality: f64,
    /// Absolute gap at which branch-and-bound declares optimality.
    pub mip_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            integrality: 1e-6,
            optimality: 1e-9,
            mip_gap: 1e-6,
        }
    }
}

/// An inverse problem: find the cost vector closest to `c0` in 1-norm that
/// makes `x_hat` optimal over the forward region.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseInstance {
    pub problem: ForwardProblem,
    pub c0: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub label: String,
}

impl InverseInstance {
    pub fn new(
        problem: ForwardProblem,
        c0: Vec<f64>,
        x_hat: Vec<f64>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            problem,
            c0,
            x_hat,
            label: label.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Row { row: usize, residual: f64 },
    LowerBound { var: usize, residual: f64 },
    UpperBound { var: usize, residual: f64 },
    Integrality { var: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Row { row, residual } => write!(f, "row {row} violated by {residual}"),
            Violation::LowerBound { var, residual } => {
                write!(f, "variable {var} below its lower bound by {residual}")
            }
            Violation::UpperBound { var, residual } => {
                write!(f, "variable {var} above its upper bound by {residual}")
            }
            Violation::Integrality { var, value } => {
                write!(f, "variable {var} = {value} is not integral")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `x_hat` is forward-feasible. Length mismatches are errors;
/// infeasibility is reported in the returned list.
pub fn validate_instance(
    inst: &InverseInstance,
    tol: &Tolerances,
) -> Result<ValidationReport, ModelError> {
    let n = inst.problem.n;
    inst.problem.check()?;
    if inst.c0.len() != n {
        return Err(ModelError::DimensionMismatch {
            what: "c0",
            got: inst.c0.len(),
            expected: n,
        });
    }
    if inst.x_hat.len() != n {
        return Err(ModelError::DimensionMismatch {
            what: "x_hat",
            got: inst.x_hat.len(),
            expected: n,
        });
    }
    if inst.c0.iter().chain(&inst.x_hat).any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite {
            what: "c0 or x_hat",
        });
    }
    Ok(ValidationReport {
        violations: inst.problem.violations(&inst.x_hat, tol),
    })
}

/// Size of a trust region; `Infinite` means the region was removed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionSize {
    Finite(f64),
    Infinite,
}

impl RegionSize {
    pub fn finite(self) -> Option<f64> {
        match self {
            RegionSize::Finite(p) => Some(p),
            RegionSize::Infinite => None,
        }
    }
}

impl fmt::Display for RegionSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionSize::Finite(p) => write!(f, "{p}"),
            RegionSize::Infinite => f.write_str("inf"),
        }
    }
}

/// The 1-norm ball `{ y : ||x_hat - y||_1 <= p, y_j = x_hat_j for j not in S }`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrustRegion {
    pub center: Vec<f64>,
    pub size: RegionSize,
    /// Sorted coordinates allowed to move. All coordinates when `size` is
    /// infinite.
    pub active_dims: Vec<usize>,
}

impl TrustRegion {
    pub fn finite(center: Vec<f64>, p: f64) -> Self {
        let n = center.len();
        Self {
            center,
            size: RegionSize::Finite(p),
            active_dims: (0..n).collect(),
        }
    }

    pub fn infinite(center: Vec<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            size: RegionSize::Infinite,
            active_dims: (0..n).collect(),
        }
    }

    pub fn with_dims(center: Vec<f64>, p: f64, mut dims: Vec<usize>) -> Self {
        dims.sort_unstable();
        dims.dedup();
        Self {
            center,
            size: RegionSize::Finite(p),
            active_dims: dims,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.size, RegionSize::Infinite)
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.active_dims.len() == self.center.len()
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        match self.size {
            RegionSize::Infinite => true,
            RegionSize::Finite(p) => {
                let mut dist = 0.0;
                for (j, (c, v)) in self.center.iter().zip(y).enumerate() {
                    let d = (c - v).abs();
                    if self.active_dims.binary_search(&j).is_err() && d > tol {
                        return false;
                    }
                    dist += d;
                }
                dist <= p + tol
            }
        }
    }
}

/// How a cut point was produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutOrigin {
    /// Optimal point of the cut generation problem over a finite trust region.
    TrustRegion(f64),
    /// Optimal point over the whole forward region.
    FullRegion,
    /// Incumbent returned by the early-stop rule.
    EarlyStop,
    /// Incumbent whose violation exceeded the large-violation threshold.
    UnboundedEscape,
}

impl fmt::Display for CutOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutOrigin::TrustRegion(p) => write!(f, "trust_region({p})"),
            CutOrigin::FullRegion => f.write_str("full_region"),
            CutOrigin::EarlyStop => f.write_str("early_stop"),
            CutOrigin::UnboundedEscape => f.write_str("unbounded_escape"),
        }
    }
}

/// A forward-feasible point inducing the constraint `c . (x_hat - point) <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    pub point: Vec<f64>,
    pub violation: f64,
    pub origin: CutOrigin,
}

/// Ordered collection of cuts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutPool {
    cuts: Vec<Cut>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: impl IntoIterator<Item = Vec<f64>>) -> Self {
        Self {
            cuts: points
                .into_iter()
                .map(|point| Cut {
                    point,
                    violation: 0.0,
                    origin: CutOrigin::FullRegion,
                })
                .collect(),
        }
    }

    pub fn push(&mut self, cut: Cut) {
        self.cuts.push(cut);
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.cuts.iter().map(|c| c.point.as_slice())
    }

    /// True if a stored point equals `x` within `tol` in every coordinate.
    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.points()
            .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol))
    }
}

/// State carried between cut generation calls.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoSet {
    pub trust_region: TrustRegion,
    pub outer_index: usize,
    /// Consecutive empty low-dimensional regions (dimensionality reduction only).
    pub empty_counter: usize,
}

impl InfoSet {
    pub fn new(trust_region: TrustRegion) -> Self {
        Self {
            trust_region,
            outer_index: 0,
            empty_counter: 0,
        }
    }
}
