//! Dense two-phase simplex over exact rationals.
//!
//! Only intended for the tiny programs that come out of pattern covers
//! (tens of variables and constraints). Bland's rule is used for both entering
//! and leaving variables, so the method terminates on degenerate programs. The
//! returned point is always a basic feasible solution, i.e. an extreme point of
//! the feasible region.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub relation: Relation,
    pub rhs: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub value: BigRational,
    pub x: Vec<BigRational>,
}

/// `minimize objective · x` subject to `constraints`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Constraint>,
}

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![BigRational::zero(); n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<BigRational>, relation: Relation, rhs: BigRational) {
        debug_assert_eq!(coeffs.len(), self.n_vars());
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn minimize(&self) -> Result<LpSolution, LpError> {
        Tableau::build(self).solve()
    }
}

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side.
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    n_orig: usize,
    n_cols: usize,
    first_artificial: usize,
    objective: Vec<BigRational>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let m = lp.constraints.len();
        // Normalize to nonnegative right-hand sides.
        let normalized: Vec<Constraint> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs.is_negative() {
                    Constraint {
                        coeffs: c.coeffs.iter().map(|a| -a).collect(),
                        relation: match c.relation {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -&c.rhs,
                    }
                } else {
                    c.clone()
                }
            })
            .collect();
        let n_slack = normalized.iter().filter(|c| c.relation != Relation::Eq).count();
        let n_art = normalized.iter().filter(|c| c.relation != Relation::Le).count();
        let first_artificial = n + n_slack;
        let n_cols = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (n, first_artificial);
        for c in &normalized {
            let mut row = vec![BigRational::zero(); n_cols + 1];
            row[..n].clone_from_slice(&c.coeffs);
            row[n_cols] = c.rhs.clone();
            match c.relation {
                Relation::Le => {
                    row[slack] = BigRational::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -BigRational::one();
                    slack += 1;
                    row[art] = BigRational::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = BigRational::one();
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            n_orig: n,
            n_cols,
            first_artificial,
            objective: lp.objective.clone(),
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs for the cost vector `cost` over the first `active` columns.
    fn reduced_costs(&self, cost: &[BigRational], active: usize) -> Vec<BigRational> {
        let mut reduced: Vec<BigRational> = cost[..active].to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, rc) in reduced.iter_mut().enumerate() {
                if !row[j].is_zero() {
                    *rc -= cb * &row[j];
                }
            }
        }
        reduced
    }

    /// Runs simplex iterations minimizing `cost`, allowing only columns `< active` to enter.
    fn optimize(&mut self, cost: &[BigRational], active: usize) -> Result<(), LpError> {
        loop {
            let reduced = self.reduced_costs(cost, active);
            let Some(enter) = (0..active).find(|&j| reduced[j].is_negative()) else {
                return Ok(());
            };
            let rhs = self.n_cols;
            let mut leave: Option<(usize, BigRational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, enter);
        }
    }

    fn solve(mut self) -> Result<LpSolution, LpError> {
        let rhs = self.n_cols;
        if self.first_artificial < self.n_cols {
            let mut phase1 = vec![BigRational::zero(); self.n_cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = BigRational::one();
            }
            self.optimize(&phase1, self.n_cols)?;
            let infeasibility: BigRational = self
                .rows
                .iter()
                .zip(&self.basis)
                .filter(|(_, &b)| b >= self.first_artificial)
                .map(|(row, _)| row[rhs].clone())
                .sum();
            if infeasibility.is_positive() {
                return Err(LpError::Infeasible);
            }
            // Drive zero-level artificials out of the basis, dropping redundant rows.
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.rows.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![BigRational::zero(); self.n_cols];
        cost[..self.n_orig].clone_from_slice(&self.objective);
        self.optimize(&cost, self.first_artificial)?;

        let mut x = vec![BigRational::zero(); self.n_orig];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_orig {
                x[b] = row[rhs].clone();
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { value, x })
    }
}
