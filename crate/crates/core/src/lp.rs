//! Dense linear programs and a two-phase tableau simplex.
//!
//! Problems are stated as
//!
//! ```text
//! minimise    c·x
//! subject to  A_eq x = b_eq
//!             A_le x ≤ b_le
//!             lb ≤ x ≤ ub
//! ```
//!
//! and solved with a dense two-phase primal simplex using Bland's smallest
//! index rule for both the entering and the leaving variable, so the method
//! terminates on degenerate programs. Once an optimal basis is found the basic
//! values are recomputed from the original (unpivoted) rows with a fresh
//! partial-pivoting elimination, which removes most of the drift that
//! accumulates over thousands of tableau updates. A solution is only reported
//! as optimal after it has been re-checked against the caller's rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries at or below this magnitude are never used as pivots.
const PIVOT_TOL: f64 = 1e-9;
/// Below this magnitude a column entry is treated as structurally zero.
const TINY: f64 = 1e-12;
/// A reduced cost must be below `-DJ_TOL` for the column to enter.
const DJ_TOL: f64 = 1e-10;

/// One linear row `coeffs · x (= | ≤) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub cost: Vec<f64>,
    pub eq_rows: Vec<Constraint>,
    /// Rows read as `coeffs · x ≤ rhs`.
    pub ineq_rows: Vec<Constraint>,
    pub lower_bounds: Vec<f64>,
    /// `None` means every variable is unbounded above.
    pub upper_bounds: Option<Vec<f64>>,
}

impl LinearProgram {
    /// A program with the given cost, no rows and `x ≥ 0`.
    pub fn new(cost: Vec<f64>) -> Self {
        let num_vars = cost.len();
        Self {
            num_vars,
            cost,
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            lower_bounds: vec![0.0; num_vars],
            upper_bounds: None,
        }
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.eq_rows.push(Constraint::new(coeffs, rhs));
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.ineq_rows.push(Constraint::new(coeffs, rhs));
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) {
        let neg = coeffs.into_iter().map(|a| -a).collect();
        self.ineq_rows.push(Constraint::new(neg, -rhs));
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        let bad = |msg: String| Err(Error::MalformedProgram(msg));
        if self.cost.len() != n {
            return bad(format!("cost has {} entries, expected {n}", self.cost.len()));
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return bad("cost contains a non-finite entry".into());
        }
        for (kind, rows) in [("equality", &self.eq_rows), ("inequality", &self.ineq_rows)] {
            for (i, row) in rows.iter().enumerate() {
                if row.coeffs.len() != n {
                    return bad(format!("{kind} row {i} has {} coefficients, expected {n}", row.coeffs.len()));
                }
                if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                    return bad(format!("{kind} row {i} contains a non-finite entry"));
                }
            }
        }
        if self.lower_bounds.len() != n {
            return bad(format!("lower_bounds has {} entries, expected {n}", self.lower_bounds.len()));
        }
        if self.lower_bounds.iter().any(|l| !l.is_finite()) {
            return bad("lower bounds must be finite".into());
        }
        if let Some(ub) = &self.upper_bounds {
            if ub.len() != n {
                return bad(format!("upper_bounds has {} entries, expected {n}", ub.len()));
            }
            for (i, (l, u)) in self.lower_bounds.iter().zip(ub).enumerate() {
                if u.is_nan() || *u == f64::NEG_INFINITY || l > u {
                    return bad(format!("bounds of variable {i} are inconsistent ({l} > {u})"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Number of simplex pivots over both phases.
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        Self { status, x: None, objective: None, pivots }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub opt_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feas_tol: 1e-8, opt_tol: 1e-7 }
    }
}

/// Raw violation measures of a point; no tolerance is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    pub max_bound_violation: f64,
    pub objective: f64,
}

impl Residuals {
    pub fn max_violation(&self) -> f64 {
        self.max_eq_residual.max(self.max_ineq_violation).max(self.max_bound_violation)
    }
}

pub fn check_point(lp: &LinearProgram, x: &[f64]) -> Result<Residuals> {
    lp.validate()?;
    if x.len() != lp.num_vars {
        return Err(Error::MalformedProgram(format!(
            "point has {} entries, program has {} variables",
            x.len(),
            lp.num_vars
        )));
    }
    let max_eq_residual = lp.eq_rows.iter().map(|r| (r.eval(x) - r.rhs).abs()).fold(0.0, f64::max);
    let max_ineq_violation = lp.ineq_rows.iter().map(|r| (r.eval(x) - r.rhs).max(0.0)).fold(0.0, f64::max);
    let mut max_bound_violation = x.iter().zip(&lp.lower_bounds).map(|(v, l)| (l - v).max(0.0)).fold(0.0, f64::max);
    if let Some(ub) = &lp.upper_bounds {
        for (v, u) in x.iter().zip(ub) {
            max_bound_violation = max_bound_violation.max(v - u);
        }
    }
    Ok(Residuals { max_eq_residual, max_ineq_violation, max_bound_violation, objective: lp.objective_at(x) })
}

pub fn solve_lp(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution> {
    lp.validate()?;
    let std = match StandardForm::build(lp, tol.feas_tol) {
        Some(std) => std,
        None => return Ok(LpSolution::without_point(LpStatus::Infeasible, 0)),
    };
    let mut tab = Tableau::phase_one(&std);

    tab.run()?;
    if tab.phase_one_infeasibility() > tol.feas_tol {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.pivots));
    }
    let kept_rows = tab.expel_artificials(std.cols);
    let mut tab = tab.phase_two(&std.cost);
    if tab.run()? == Outcome::Unbounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.pivots));
    }

    let mut y = vec![0.0; std.cols];
    for (r, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(r).max(0.0);
    }
    if let Some(refined) = std.refine(&tab.basis, &kept_rows) {
        y = refined;
    }

    let x: Vec<f64> = (0..lp.num_vars).map(|i| y[i] + lp.lower_bounds[i]).collect();
    let res = check_point(lp, &x)?;
    if res.max_violation() > tol.feas_tol {
        return Err(Error::NumericalFailure(format!(
            "optimal basis violates the program by {:.3e} (tolerance {:.1e})",
            res.max_violation(),
            tol.feas_tol
        )));
    }
    Ok(LpSolution { status: LpStatus::Optimal, objective: Some(res.objective), x: Some(x), pivots: tab.pivots })
}

/// `A y = b, y ≥ 0` with `b ≥ 0` and every row scaled to unit max-norm.
/// Variables are the shifted originals `y = x - lb` followed by slacks.
struct StandardForm {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    cols: usize,
}

impl StandardForm {
    /// Returns `None` when a row reduces to `0 = b` with `b` nonzero.
    fn build(lp: &LinearProgram, feas_tol: f64) -> Option<Self> {
        let n = lp.num_vars;
        let lb = &lp.lower_bounds;
        let finite_ub: Vec<(usize, f64)> =
            lp.upper_bounds.iter().flatten().enumerate().filter(|(_, u)| u.is_finite()).map(|(i, u)| (i, *u)).collect();
        let num_slack = lp.ineq_rows.len() + finite_ub.len();
        let cols = n + num_slack;

        let shifted = |row: &Constraint| row.rhs - row.eval(lb);
        let mut raw: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &lp.eq_rows {
            let mut a = row.coeffs.clone();
            a.resize(cols, 0.0);
            raw.push((a, shifted(row)));
        }
        for (s, row) in lp.ineq_rows.iter().enumerate() {
            let mut a = row.coeffs.clone();
            a.resize(cols, 0.0);
            a[n + s] = 1.0;
            raw.push((a, shifted(row)));
        }
        for (s, &(i, u)) in finite_ub.iter().enumerate() {
            let mut a = vec![0.0; cols];
            a[i] = 1.0;
            a[n + lp.ineq_rows.len() + s] = 1.0;
            raw.push((a, u - lb[i]));
        }

        let mut rows = Vec::with_capacity(raw.len());
        let mut rhs = Vec::with_capacity(raw.len());
        for (mut a, mut b) in raw {
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale <= TINY {
                if b.abs() > feas_tol {
                    return None;
                }
                continue;
            }
            let inv = if b < 0.0 { -1.0 / scale } else { 1.0 / scale };
            a.iter_mut().for_each(|v| *v *= inv);
            b *= inv;
            rows.push(a);
            rhs.push(b);
        }

        let mut cost = lp.cost.clone();
        cost.resize(cols, 0.0);
        Some(Self { rows, rhs, cost, cols })
    }

    /// Picks, for as many rows as possible, a column whose only nonzero is a
    /// positive entry in that row. Such a column can start in the basis
    /// without an artificial variable.
    fn crash_basis(&self) -> Vec<Option<usize>> {
        let m = self.rows.len();
        let mut owner: Vec<Option<usize>> = vec![None; m];
        let mut count = vec![0usize; self.cols];
        let mut last_row = vec![0usize; self.cols];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    count[j] += 1;
                    last_row[j] = i;
                }
            }
        }
        for j in (0..self.cols).rev() {
            let i = last_row[j];
            if count[j] == 1 && owner[i].is_none() && self.rows[i][j] > PIVOT_TOL {
                owner[i] = Some(j);
            }
        }
        owner
    }

    /// Recomputes the basic values from the original rows.
    fn refine(&self, basis: &[usize], kept_rows: &[usize]) -> Option<Vec<f64>> {
        let m = basis.len();
        if m == 0 {
            return Some(vec![0.0; self.cols]);
        }
        let mut mat: Vec<Vec<f64>> =
            kept_rows.iter().map(|&r| basis.iter().map(|&b| self.rows[r][b]).collect()).collect();
        let mut rhs: Vec<f64> = kept_rows.iter().map(|&r| self.rhs[r]).collect();
        let sol = gauss_solve(&mut mat, &mut rhs)?;
        if sol.iter().any(|v| !v.is_finite() || *v < -1e-9) {
            return None;
        }
        let mut y = vec![0.0; self.cols];
        for (&b, v) in basis.iter().zip(sol) {
            y[b] = v.max(0.0);
        }
        Some(y)
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()).then(j.cmp(&i)))?;
        if a[piv][col].abs() <= TINY {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (head, tail) = a.split_at_mut(col + 1);
        let prow = &head[col];
        for (k, row) in tail.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            if f != 0.0 {
                for c in col..m {
                    row[c] -= f * prow[c];
                }
                b[col + 1 + k] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|c| a[i][c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: usize,
    /// Column count excluding the right-hand side.
    cols: usize,
    /// Row-major, `cols + 1` entries per row; the last is the rhs.
    data: Vec<f64>,
    /// Reduced costs followed by the negated objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Original row index of each tableau row.
    origin: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn phase_one(std: &StandardForm) -> Self {
        let m = std.rows.len();
        let crash = std.crash_basis();
        let num_art = crash.iter().filter(|c| c.is_none()).count();
        let cols = std.cols + num_art;
        let w = cols + 1;
        let mut data = vec![0.0; m * w];
        let mut basis = Vec::with_capacity(m);
        let mut obj = vec![0.0; w];
        let mut next_art = std.cols;
        for (i, row) in std.rows.iter().enumerate() {
            let line = &mut data[i * w..(i + 1) * w];
            line[..std.cols].copy_from_slice(row);
            line[cols] = std.rhs[i];
            match crash[i] {
                Some(j) => {
                    let inv = 1.0 / line[j];
                    line.iter_mut().for_each(|v| *v *= inv);
                    line[j] = 1.0;
                    basis.push(j);
                }
                None => {
                    line[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                    for c in 0..std.cols {
                        obj[c] -= line[c];
                    }
                    obj[cols] -= line[cols];
                }
            }
        }
        Self { rows: m, cols, data, obj, basis, origin: (0..m).collect(), pivots: 0 }
    }

    fn phase_one_infeasibility(&self) -> f64 {
        -self.obj[self.cols]
    }

    /// Pivots basic artificials out of the basis after phase one; rows where
    /// that is impossible are linearly dependent and get dropped. Returns the
    /// original indices of the surviving rows.
    fn expel_artificials(&mut self, real_cols: usize) -> Vec<usize> {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] < real_cols {
                r += 1;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for c in 0..real_cols {
                let a = self.at(r, c).abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((c, a));
                }
            }
            match best {
                Some((c, _)) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => self.drop_row(r),
            }
        }
        self.origin.clone()
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width();
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.origin.remove(r);
        self.rows -= 1;
    }

    /// Truncates the artificial columns and installs the true cost row.
    fn phase_two(self, cost: &[f64]) -> Self {
        let cols = cost.len();
        let w_old = self.width();
        let w = cols + 1;
        let mut data = vec![0.0; self.rows * w];
        for r in 0..self.rows {
            let src = &self.data[r * w_old..(r + 1) * w_old];
            let dst = &mut data[r * w..(r + 1) * w];
            dst[..cols].copy_from_slice(&src[..cols]);
            dst[cols] = src[self.cols];
        }
        let mut obj = vec![0.0; w];
        obj[..cols].copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let line = &data[r * w..(r + 1) * w];
                for c in 0..w {
                    obj[c] -= cb * line[c];
                }
            }
        }
        for &b in &self.basis {
            obj[b] = 0.0;
        }
        Self { rows: self.rows, cols, data, obj, basis: self.basis, origin: self.origin, pivots: self.pivots }
    }

    fn run(&mut self) -> Result<Outcome> {
        let limit = 200_000 + 50 * (self.rows + self.cols);
        loop {
            if self.pivots > limit {
                return Err(Error::NumericalFailure(format!("no convergence after {} pivots", self.pivots)));
            }
            // Bland: smallest improving column.
            let Some(q) = (0..self.cols).find(|&c| self.obj[c] < -DJ_TOL) else {
                return Ok(Outcome::Optimal);
            };
            // Bland: among minimum ratios, smallest basic index leaves.
            let mut leave: Option<(usize, f64)> = None;
            let mut saw_tiny = false;
            for r in 0..self.rows {
                let a = self.at(r, q);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let slack = 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio - slack || (ratio <= lratio + slack && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                } else if a > TINY {
                    saw_tiny = true;
                }
            }
            match leave {
                Some((p, _)) => self.pivot(p, q),
                None if saw_tiny => {
                    return Err(Error::NumericalFailure(format!("column {q} has only pivots below {PIVOT_TOL:e}")))
                }
                None => return Ok(Outcome::Unbounded),
            }
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width();
        let inv = 1.0 / self.data[p * w + q];
        let mut prow: Vec<f64> = self.data[p * w..(p + 1) * w].to_vec();
        prow.iter_mut().for_each(|v| *v *= inv);
        prow[q] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&c| prow[c] != 0.0).collect();

        for r in 0..self.rows {
            if r == p {
                continue;
            }
            let line = &mut self.data[r * w..(r + 1) * w];
            let f = line[q];
            if f != 0.0 {
                for &c in &nz {
                    line[c] -= f * prow[c];
                }
                line[q] = 0.0;
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for &c in &nz {
                self.obj[c] -= f * prow[c];
            }
            self.obj[q] = 0.0;
        }
        self.data[p * w..(p + 1) * w].copy_from_slice(&prow);
        self.basis[p] = q;
        self.pivots += 1;
    }
}
