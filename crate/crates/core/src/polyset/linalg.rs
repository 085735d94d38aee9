//! Exact rational linear algebra: row reduction, rank, inverse, null space,
//! and canonical subspace representation.

use num::{BigRational, Zero};

pub type Rat = BigRational;
pub type Matrix = Vec<Vec<Rat>>;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Reduced row echelon form in place. Returns the pivot column of each
/// nonzero row, in order.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = &*x / &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] = &m[i][j] - d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut w = m.clone();
    rref(&mut w).len()
}

/// Inverse of a square matrix, or None if singular.
pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut aug: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { rat_int(1) } else { rat_int(0) });
            }
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn determinant(m: &Matrix) -> Rat {
    let n = m.len();
    let mut w = m.clone();
    let mut det = rat_int(1);
    for c in 0..n {
        let Some(pr) = (c..n).find(|&i| !w[i][c].is_zero()) else {
            return rat_int(0);
        };
        if pr != c {
            w.swap(c, pr);
            det = -det;
        }
        det = &det * &w[c][c];
        let piv = w[c][c].clone();
        for i in c + 1..n {
            if !w[i][c].is_zero() {
                let f = &w[i][c] / &piv;
                for j in c..n {
                    let d = &f * &w[c][j];
                    w[i][j] = &w[i][j] - d;
                }
            }
        }
    }
    det
}

/// Basis of the null space of `m` (vectors of length = column count).
pub fn null_space(m: &Matrix) -> Vec<Vec<Rat>> {
    if m.is_empty() {
        return vec![];
    }
    let cols = m[0].len();
    let mut w = m.clone();
    let pivots = rref(&mut w);
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![rat_int(0); cols];
        v[free] = rat_int(1);
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -w[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solve m * x = b exactly. Returns None when inconsistent; when the system
/// is underdetermined an arbitrary solution (free variables at zero) is given.
pub fn solve(m: &Matrix, b: &[Rat]) -> Option<Vec<Rat>> {
    let cols = if m.is_empty() { 0 } else { m[0].len() };
    let mut aug: Matrix = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    // A pivot in the augmented column means 0 = 1.
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![rat_int(0); cols];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = aug[row][cols].clone();
    }
    Some(x)
}

/// A linear subspace of Q^n, stored as a canonical (rref) row basis so that
/// equal subspaces compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subspace {
    pub ambient: usize,
    pub basis: Vec<Vec<Rat>>,
}

impl Subspace {
    pub fn from_vectors(ambient: usize, vecs: &[Vec<Rat>]) -> Subspace {
        let mut m: Matrix = vecs.to_vec();
        let pivots = rref(&mut m);
        m.truncate(pivots.len());
        Subspace { ambient, basis: m }
    }

    pub fn zero(ambient: usize) -> Subspace {
        Subspace { ambient, basis: vec![] }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut vecs = self.basis.clone();
        vecs.extend(other.basis.iter().cloned());
        Subspace::from_vectors(self.ambient, &vecs)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        let mut m = self.basis.clone();
        m.push(v.to_vec());
        rank(&m) == self.dim()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| rat_int(x)).collect()).collect()
    }

    #[test]
    fn rank_and_inverse() {
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank(&m(&[&[1, 0], &[0, 1]])), 2);
        let inv = inverse(&m(&[&[1, 1], &[1, -1]])).unwrap();
        assert_eq!(inv[0][0], Rat::new(1.into(), 2.into()));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn null_space_of_projection() {
        // (i,j,k) -> (i,j) has kernel spanned by e_k.
        let ns = null_space(&m(&[&[1, 0, 0], &[0, 1, 0]]));
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0], vec![rat_int(0), rat_int(0), rat_int(1)]);
    }

    #[test]
    fn subspace_canonical_equality() {
        let a = Subspace::from_vectors(2, &[vec![rat_int(2), rat_int(2)]]);
        let b = Subspace::from_vectors(2, &[vec![rat_int(1), rat_int(1)]]);
        assert_eq!(a, b);
        assert_eq!(a.sum(&Subspace::from_vectors(2, &[vec![rat_int(1), rat_int(0)]])).dim(), 2);
    }

    #[test]
    fn determinant_signs() {
        assert_eq!(determinant(&m(&[&[1, 1], &[1, -1]])), rat_int(-2));
        assert_eq!(determinant(&m(&[&[1, 0], &[0, 1]])), rat_int(1));
    }
}
