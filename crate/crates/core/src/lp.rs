//! Float linear programs on top of the `clarabel` interior-point solver.
//!
//! Problems are `min c·x` over `x ≥ 0` with `≤`, `≥` and `=` rows. Duals use
//! the textbook sign convention: at an optimum the reduced costs
//! `c_j − Σ_r y_r a_rj` are non-negative, `y_r ≥ 0` on `≥` rows and
//! `y_r ≤ 0` on `≤` rows.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient `cost`.
    pub fn var(&mut self, cost: f64) -> usize {
        self.objective.push(cost);
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> usize {
        self.rows.push((coeffs, cmp, rhs));
        self.rows.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.num_vars;
        // Equality rows first (zero cone), then inequalities and `x ≥ 0` (non-negative cone).
        let order: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.rows[r].1 == Cmp::Eq)
            .chain((0..self.rows.len()).filter(|&r| self.rows[r].1 != Cmp::Eq))
            .collect();
        let n_eq = order.iter().take_while(|&&r| self.rows[r].1 == Cmp::Eq).count();
        let m = order.len() + n;
        let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::with_capacity(m);
        for (pos, &r) in order.iter().enumerate() {
            let (coeffs, cmp, rhs) = &self.rows[r];
            let sign = if *cmp == Cmp::Ge { -1.0 } else { 1.0 };
            for &(j, a) in coeffs {
                if j >= n {
                    return Err(Error::Internal(format!("lp row {r} refers to variable {j} of {n}")));
                }
                ri.push(pos);
                ci.push(j);
                vals.push(sign * a);
            }
            b.push(sign * rhs);
        }
        for j in 0..n {
            ri.push(order.len() + j);
            ci.push(j);
            vals.push(-1.0);
            b.push(0.0);
        }
        let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if n_eq > 0 {
            cones.push(ZeroConeT(n_eq));
        }
        if m > n_eq {
            cones.push(NonnegativeConeT(m - n_eq));
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(400)
            .build()
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let mut solver =
            DefaultSolver::new(&p, &self.objective, &a, &b, &cones, settings).map_err(|e| Error::Solver(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => LpStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => LpStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => LpStatus::Unbounded,
            other => return Err(Error::Solver(format!("solver stopped with status {other:?}"))),
        };
        let mut duals = vec![0.0; self.rows.len()];
        for (pos, &r) in order.iter().enumerate() {
            let z = sol.z[pos];
            duals[r] = match self.rows[r].1 {
                Cmp::Ge => z,
                Cmp::Le | Cmp::Eq => -z,
            };
        }
        let x = sol.x.iter().map(|&v| v.max(0.0)).collect();
        Ok(LpSolution { status, x, duals, value: sol.obj_val })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_min_problem_and_duals() {
        // min x + 2y s.t. x + y ≥ 1, x ≤ 0.25.
        let mut lp = LinearProgram::new();
        let x = lp.var(1.0);
        let y = lp.var(2.0);
        let cover = lp.row(vec![(x, 1.0), (y, 1.0)], Cmp::Ge, 1.0);
        let cap = lp.row(vec![(x, 1.0)], Cmp::Le, 0.25);
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.75).abs() < 1e-6);
        assert!((s.x[x] - 0.25).abs() < 1e-6);
        // Relaxing the cover row by one costs 2, relaxing the cap saves 1.
        assert!((s.duals[cover] - 2.0).abs() < 1e-6);
        assert!((s.duals[cap] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn equality_dual_sign() {
        // min x s.t. x = 3: increasing the rhs increases the value.
        let mut lp = LinearProgram::new();
        let x = lp.var(1.0);
        let r = lp.row(vec![(x, 1.0)], Cmp::Eq, 3.0);
        let s = lp.solve().unwrap();
        assert!((s.value - 3.0).abs() < 1e-6);
        assert!((s.duals[r] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.var(1.0);
        lp.row(vec![(x, 1.0)], Cmp::Ge, 2.0);
        lp.row(vec![(x, 1.0)], Cmp::Le, 1.0);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
        let mut lp = LinearProgram::new();
        let x = lp.var(-1.0);
        lp.row(vec![(x, 1.0)], Cmp::Ge, 0.0);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
    }
}
