//! Dense two-phase simplex over exact rationals with Bland's rule.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, BigRational)>,
    pub sense: Sense,
    pub rhs: BigRational,
}

/// `max c·x` subject to rows and `x ≥ 0`.
#[derive(Debug, Clone, Default)]
pub struct RationalLp {
    pub num_vars: usize,
    pub rows: Vec<Row>,
    pub objective: Vec<(usize, BigRational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<BigRational>, value: BigRational },
    Infeasible,
    Unbounded,
}

pub fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact rational value of a float.
pub fn rat_f64(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

impl RationalLp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn row(&mut self, coeffs: Vec<(usize, BigRational)>, sense: Sense, rhs: BigRational) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    t: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    n_struct: usize,
    n_total: usize,
    artificial_from: usize,
}

impl Tableau {
    fn build(lp: &RationalLp) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars;
        let mut slack_cols = 0;
        let mut art_cols = 0;
        let mut norm: Vec<(Vec<BigRational>, Sense, BigRational)> = Vec::with_capacity(m);
        for row in &lp.rows {
            let mut dense = vec![BigRational::zero(); n];
            for (j, c) in &row.coeffs {
                dense[*j] += c;
            }
            let (mut sense, mut rhs) = (row.sense, row.rhs.clone());
            if rhs.is_negative() {
                dense.iter_mut().for_each(|c| *c = -c.clone());
                rhs = -rhs;
                sense = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            if sense != Sense::Eq {
                slack_cols += 1;
            }
            if sense != Sense::Le {
                art_cols += 1;
            }
            norm.push((dense, sense, rhs));
        }
        let artificial_from = n + slack_cols;
        let n_total = artificial_from + art_cols;
        let mut t = vec![vec![BigRational::zero(); n_total + 1]; m + 1];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (n, artificial_from);
        for (i, (dense, sense, rhs)) in norm.into_iter().enumerate() {
            t[i][..n].clone_from_slice(&dense);
            t[i][n_total] = rhs;
            match sense {
                Sense::Le => {
                    t[i][s] = BigRational::one();
                    basis[i] = s;
                    s += 1;
                }
                Sense::Ge => {
                    t[i][s] = -BigRational::one();
                    s += 1;
                    t[i][a] = BigRational::one();
                    basis[i] = a;
                    a += 1;
                }
                Sense::Eq => {
                    t[i][a] = BigRational::one();
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        Tableau { t, basis, n_struct: n, n_total, artificial_from }
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    /// Sets the objective row to reduced costs of `min cost·x` for the current basis.
    fn price(&mut self, cost: &[BigRational]) {
        let m = self.m();
        let mut obj: Vec<BigRational> = cost.to_vec();
        obj.push(BigRational::zero());
        for i in 0..m {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.n_total {
                let v = &self.t[i][j] * &cb;
                obj[j] -= v;
            }
        }
        self.t[m] = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.t.len() {
            if i == r || self.t[i][c].is_zero() {
                continue;
            }
            let f = self.t[i][c].clone();
            for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the priced objective over columns `< allowed`. Returns false when unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let m = self.m();
        loop {
            let Some(c) = (0..allowed).find(|&j| self.t[m][j].is_negative()) else { return true };
            let mut best: Option<(usize, BigRational)> = None;
            for i in 0..m {
                if self.t[i][c].is_positive() {
                    let ratio = &self.t[i][self.n_total] / &self.t[i][c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c);
        }
    }

    fn run(mut self, lp: &RationalLp) -> LpOutcome {
        let m = self.m();
        let mut phase1 = vec![BigRational::zero(); self.n_total];
        for c in phase1.iter_mut().skip(self.artificial_from) {
            *c = BigRational::one();
        }
        self.price(&phase1);
        self.optimize(self.n_total);
        if self.t[m][self.n_total].is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificial variables out of the basis.
        let mut i = 0;
        while i < self.m() {
            if self.basis[i] >= self.artificial_from {
                if let Some(c) = (0..self.artificial_from).find(|&j| !self.t[i][j].is_zero()) {
                    self.pivot(i, c);
                } else {
                    self.t.remove(i);
                    self.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        let mut cost = vec![BigRational::zero(); self.n_total];
        for (j, c) in &lp.objective {
            cost[*j] -= c;
        }
        self.price(&cost);
        if !self.optimize(self.artificial_from) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![BigRational::zero(); self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.t[i][self.n_total].clone();
            }
        }
        let value = lp.objective.iter().fold(BigRational::zero(), |acc, (j, c)| acc + c * &x[*j]);
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_max_problem() {
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6.
        let mut lp = RationalLp::new();
        let x = lp.var();
        let y = lp.var();
        lp.row(vec![(x, rat(1)), (y, rat(2))], Sense::Le, rat(4));
        lp.row(vec![(x, rat(3)), (y, rat(1))], Sense::Le, rat(6));
        lp.objective = vec![(x, rat(1)), (y, rat(1))];
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, BigRational::new(14.into(), 5.into())),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = RationalLp::new();
        let x = lp.var();
        lp.row(vec![(x, rat(1))], Sense::Ge, rat(2));
        lp.row(vec![(x, rat(1))], Sense::Le, rat(1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = RationalLp::new();
        let x = lp.var();
        lp.row(vec![(x, rat(1))], Sense::Ge, rat(2));
        lp.objective = vec![(x, rat(1))];
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_with_negative_rhs() {
        let mut lp = RationalLp::new();
        let x = lp.var();
        let y = lp.var();
        lp.row(vec![(x, rat(-1)), (y, rat(1))], Sense::Eq, rat(-3));
        lp.objective = vec![(y, rat(-1))];
        match lp.solve() {
            LpOutcome::Optimal { x: sol, .. } => {
                assert_eq!(sol[0], rat(3));
                assert_eq!(sol[1], rat(0));
            }
            o => panic!("{o:?}"),
        }
    }
}
