//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are taken in the form
//!
//! ```text
//! minimize    c·x
//! subject to  A_eq x = b_eq
//!             A_ub x <= b_ub
//!             x >= 0
//! ```
//!
//! Phase 1 minimizes the sum of artificial variables; phase 2 optimizes the
//! real objective from the feasible basis found. Bland's smallest-index rule
//! for both entering and leaving variables rules out cycling.

use crate::error::{Error, Result};

pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
const PIVOT_TOLERANCE: f64 = 1e-11;
const COST_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_matrix: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, ..Default::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ub_matrix.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::MalformedProgram("no variables".into()));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() || self.ub_matrix.len() != self.ub_rhs.len() {
            return Err(Error::MalformedProgram("row count and rhs length differ".into()));
        }
        let rows = self.eq_matrix.iter().chain(&self.ub_matrix);
        if let Some(bad) = rows.clone().find(|r| r.len() != n) {
            return Err(Error::MalformedProgram(format!("row of width {} for {n} variables", bad.len())));
        }
        let all = self.objective.iter().chain(rows.flatten()).chain(&self.eq_rhs).chain(&self.ub_rhs);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::MalformedProgram("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Largest violation of any constraint (including `x >= 0`) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let eq = self.eq_matrix.iter().zip(&self.eq_rhs).map(|(r, b)| (dot(r) - b).abs());
        let ub = self.ub_matrix.iter().zip(&self.ub_rhs).map(|(r, b)| (dot(r) - b).max(0.0));
        let lb = x.iter().map(|v| (-v).max(0.0));
        eq.chain(ub).chain(lb).fold(0.0, f64::max)
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

struct Tableau {
    /// `rows x (cols + 1)`, last column the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.a[r][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (r, line) in self.a.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Reduced costs of `cost` against the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.a[r][j];
                }
            }
        }
        d
    }

    /// Runs Bland-rule iterations over columns in `allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool> {
        let max_iterations = 50_000 + 100 * (self.cols + self.a.len());
        for _ in 0..max_iterations {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..self.cols).find(|&j| allowed[j] && d[j] < -COST_TOLERANCE) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let coef = self.a[r][enter];
                if coef > PIVOT_TOLERANCE {
                    let ratio = self.rhs(r).max(0.0) / coef;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, enter);
            if self.a[row].iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalBreakdown("non-finite tableau entry".into()));
            }
        }
        Err(Error::NumericalBreakdown(format!("no convergence in {max_iterations} pivots")))
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();
    let m_eq = lp.eq_matrix.len();
    let m_ub = lp.ub_matrix.len();
    let m = m_eq + m_ub;
    // columns: originals, one slack per <= row, one artificial per row
    let slack0 = n;
    let art0 = n + m_ub;
    let cols = art0 + m;
    let mut a = vec![vec![0.0; cols + 1]; m];
    for (r, (row, &b)) in lp.eq_matrix.iter().zip(&lp.eq_rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[r][j] = sign * row[j];
        }
        a[r][cols] = sign * b;
    }
    for (i, (row, &b)) in lp.ub_matrix.iter().zip(&lp.ub_rhs).enumerate() {
        let r = m_eq + i;
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[r][j] = sign * row[j];
        }
        a[r][slack0 + i] = sign;
        a[r][cols] = sign * b;
    }
    for (r, line) in a.iter_mut().enumerate() {
        line[art0 + r] = 1.0;
    }
    let mut t = Tableau { a, basis: (art0..art0 + m).collect(), cols };

    let mut phase1 = vec![0.0; cols];
    phase1[art0..].iter_mut().for_each(|c| *c = 1.0);
    let everything = vec![true; cols];
    t.optimize(&phase1, &everything)?;
    let infeasibility: f64 = (0..m).filter(|&r| t.basis[r] >= art0).map(|r| t.rhs(r)).sum();
    let scale = 1.0 + lp.eq_rhs.iter().chain(&lp.ub_rhs).map(|b| b.abs()).fold(0.0, f64::max);
    if infeasibility > FEASIBILITY_TOLERANCE * scale {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive remaining (zero-level) artificials out of the basis; rows with no
    // usable pivot are redundant and dropped.
    let mut r = 0;
    while r < t.a.len() {
        if t.basis[r] >= art0 {
            match (0..art0).find(|&j| t.a[r][j].abs() > 1e-9) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.a.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(&lp.objective);
    let mut allowed = vec![true; cols];
    allowed[art0..].iter_mut().for_each(|x| *x = false);
    if !t.optimize(&phase2, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(r).max(0.0);
        }
    }
    let objective = lp.objective_at(&x);
    if lp.max_violation(&x) > 1e-6 * scale {
        return Err(Error::NumericalBreakdown(format!(
            "solution violates constraints by {}",
            lp.max_violation(&x)
        )));
    }
    Ok(LpOutcome::Optimal { x, objective })
}
