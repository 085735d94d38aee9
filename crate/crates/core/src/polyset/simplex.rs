//! Exact two-phase simplex over rationals.
//!
//! Problems are given as: maximize c.y subject to rows a.y <= b, with y free
//! (unrestricted sign). Free variables are split as y = u - v internally.
//! Bland's rule guarantees termination.

use super::linalg::{rat_int, Rat};
use num::Zero;

#[derive(Clone, Debug, PartialEq)]
pub enum SimplexResult {
    Infeasible,
    Unbounded,
    /// Optimal objective value and one optimal point.
    Optimal(Rat, Vec<Rat>),
}

struct Tableau {
    // rows x cols; last col is rhs, each row is an equality over all vars.
    t: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    ncols: usize, // structural + slack + artificial count
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col].clone();
        for x in self.t[row].iter_mut() {
            *x = &*x / &piv;
        }
        for r in 0..self.t.len() {
            if r != row && !self.t[r][col].is_zero() {
                let f = self.t[r][col].clone();
                for j in 0..=self.ncols {
                    let d = &f * &self.t[row][j];
                    self.t[r][j] = &self.t[r][j] - d;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations maximizing `obj` (a row of reduced costs is
    /// maintained by the caller as cost[j] over columns, plus constant).
    /// Returns None on unboundedness.
    fn optimize(&mut self, cost: &mut Vec<Rat>, allowed: usize) -> Option<()> {
        loop {
            // Bland: smallest index with positive reduced cost.
            let Some(col) = (0..allowed).find(|&j| cost[j] > rat_int(0)) else {
                return Some(());
            };
            // Ratio test, Bland tie-break on basis variable index.
            let mut best: Option<(Rat, usize)> = None;
            for r in 0..self.t.len() {
                if self.t[r][col] > rat_int(0) {
                    let ratio = &self.t[r][self.ncols] / &self.t[r][col];
                    let better = match &best {
                        None => true,
                        Some((br, brow)) => {
                            ratio < *br || (ratio == *br && self.basis[r] < self.basis[*brow])
                        }
                    };
                    if better {
                        best = Some((ratio, r));
                    }
                }
            }
            let (_, row) = best?;
            self.pivot(row, col);
            // Update reduced costs: cost -= cost[col] * pivot_row.
            let f = cost[col].clone();
            for j in 0..=self.ncols {
                let d = &f * &self.t[row][j];
                cost[j] = &cost[j] - d;
            }
        }
    }
}

/// Maximize c.y subject to a[i].y <= b[i], y free.
pub fn maximize(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> SimplexResult {
    let nfree = c.len();
    let m = a.len();
    let nsplit = 2 * nfree;
    let nslack = m;
    // Columns: split vars, slacks, then artificials as needed.
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut need_art = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let mut r: Vec<Rat> = Vec::with_capacity(nsplit + nslack + 1);
        for j in 0..nfree {
            r.push(row[j].clone());
        }
        for j in 0..nfree {
            r.push(-row[j].clone());
        }
        for k in 0..nslack {
            r.push(if k == i { rat_int(1) } else { rat_int(0) });
        }
        r.push(b[i].clone());
        if b[i] < rat_int(0) {
            for x in r.iter_mut() {
                *x = -x.clone();
            }
            need_art.push(i);
        }
        rows.push(r);
    }
    let nart = need_art.len();
    let ncols = nsplit + nslack + nart;
    let mut basis = vec![0usize; m];
    for (ai, &i) in need_art.iter().enumerate() {
        for (r, row) in rows.iter_mut().enumerate() {
            row.insert(nsplit + nslack + ai, if r == i { rat_int(1) } else { rat_int(0) });
        }
    }
    // Rhs must sit at index ncols.
    for row in rows.iter_mut() {
        debug_assert_eq!(row.len(), ncols + 1);
    }
    let mut ai = 0;
    for i in 0..m {
        if need_art.contains(&i) {
            basis[i] = nsplit + nslack + ai;
            ai += 1;
        } else {
            basis[i] = nsplit + i;
        }
    }
    let mut tab = Tableau { t: rows, basis, ncols };

    if nart > 0 {
        // Phase 1: maximize -(sum of artificials).
        let mut cost = vec![rat_int(0); ncols + 1];
        for j in nsplit + nslack..ncols {
            cost[j] = rat_int(-1);
        }
        // Price out the artificial basis.
        for r in 0..m {
            if tab.basis[r] >= nsplit + nslack {
                for j in 0..=ncols {
                    let d = tab.t[r][j].clone();
                    cost[j] = &cost[j] + d;
                }
            }
        }
        tab.optimize(&mut cost, ncols).expect("phase 1 is bounded");
        // cost[ncols] tracks the negated objective; a positive residual means
        // some artificial is stuck at a nonzero value.
        if cost[ncols] > rat_int(0) {
            return SimplexResult::Infeasible;
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= nsplit + nslack {
                if let Some(col) = (0..nsplit + nslack).find(|&j| !tab.t[r][j].is_zero()) {
                    tab.pivot(r, col);
                }
            }
        }
    }

    // Phase 2 over structural + slack columns only.
    let mut cost = vec![rat_int(0); ncols + 1];
    for j in 0..nfree {
        cost[j] = c[j].clone();
        cost[nfree + j] = -c[j].clone();
    }
    for r in 0..m {
        let bv = tab.basis[r];
        if bv < nsplit + nslack && !cost[bv].is_zero() {
            let f = cost[bv].clone();
            for j in 0..=ncols {
                let d = &f * &tab.t[r][j];
                cost[j] = &cost[j] - d;
            }
        }
    }
    if tab.optimize(&mut cost, nsplit + nslack).is_none() {
        return SimplexResult::Unbounded;
    }
    let mut point = vec![rat_int(0); nfree];
    for r in 0..m {
        let bv = tab.basis[r];
        if bv < nfree {
            point[bv] = &point[bv] + &tab.t[r][ncols];
        } else if bv < nsplit {
            point[bv - nfree] = &point[bv - nfree] - &tab.t[r][ncols];
        }
    }
    SimplexResult::Optimal(-cost[ncols].clone(), point)
}
