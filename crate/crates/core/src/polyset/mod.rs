//! Parametric integer sets and affine relations.
//!
//! Sets are finite unions of polyhedra over named integer dimensions, with
//! symbolic parameters appearing affinely in the constraints. Relations pair
//! an input and an output tuple. Projection uses exact rational
//! Fourier-Motzkin elimination, which can over-approximate the integer
//! projection; every consumer of a projection here tolerates that direction.

pub mod count;
pub mod linalg;
pub mod parse;
pub mod simplex;

use self::linalg::{rat_int, Matrix, Rat};
use self::simplex::{maximize, SimplexResult};
use num::{BigInt, One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;

pub use self::linalg::Subspace;

#[derive(thiserror::Error, Debug, Clone)]
pub enum PolyError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("set is unbounded under the given binding")]
    Unbounded,
    #[error("set is empty")]
    Empty,
    #[error("no binding for parameter {0}")]
    MissingParam(String),
    #[error("cardinality does not grow polynomially in the parameters")]
    NonPolynomial,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Other(String),
}

pub type PResult<T> = Result<T, PolyError>;

/// Ordered list of symbolic parameter names shared by a set or relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ParamSpace {
    pub names: Vec<String>,
}

impl ParamSpace {
    pub fn new(names: &[&str]) -> ParamSpace {
        ParamSpace { names: names.iter().map(|s| s.to_string()).collect() }
    }
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Parameter values for concrete evaluation.
pub type Binding = HashMap<String, i64>;

pub fn binding(pairs: &[(&str, i64)]) -> Binding {
    pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
}

/// dims . x + params . p + constant, compared against zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinExpr {
    pub dims: Vec<Rat>,
    pub params: Vec<Rat>,
    pub constant: Rat,
}

impl LinExpr {
    pub fn zero(ndims: usize, nparams: usize) -> LinExpr {
        LinExpr {
            dims: vec![rat_int(0); ndims],
            params: vec![rat_int(0); nparams],
            constant: rat_int(0),
        }
    }

    pub fn scaled(&self, f: &Rat) -> LinExpr {
        LinExpr {
            dims: self.dims.iter().map(|c| c * f).collect(),
            params: self.params.iter().map(|c| c * f).collect(),
            constant: &self.constant * f,
        }
    }

    pub fn plus(&self, other: &LinExpr) -> LinExpr {
        LinExpr {
            dims: self.dims.iter().zip(&other.dims).map(|(a, b)| a + b).collect(),
            params: self.params.iter().zip(&other.params).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &other.constant,
        }
    }

    pub fn is_const(&self) -> bool {
        self.dims.iter().all(Rat::is_zero) && self.params.iter().all(Rat::is_zero)
    }

    /// Scales to coprime integer coefficients, keeping the sign.
    pub fn int_normalized(&self) -> LinExpr {
        let mut lcm = BigInt::one();
        let mut gcd = BigInt::zero();
        for c in self.dims.iter().chain(&self.params).chain(std::iter::once(&self.constant)) {
            lcm = num::integer::lcm(lcm, c.denom().clone());
        }
        let scaled = self.scaled(&Rat::from_integer(lcm));
        for c in scaled.dims.iter().chain(&scaled.params).chain(std::iter::once(&scaled.constant))
        {
            gcd = num::integer::gcd(gcd, c.numer().abs());
        }
        if gcd.is_zero() || gcd.is_one() {
            scaled
        } else {
            scaled.scaled(&Rat::new(BigInt::one(), gcd))
        }
    }

    fn substitute_params(&self, values: &[i64]) -> LinExpr {
        let mut constant = self.constant.clone();
        for (c, v) in self.params.iter().zip(values) {
            constant += c * rat_int(*v);
        }
        LinExpr { dims: self.dims.clone(), params: vec![], constant }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstrOp {
    /// expr >= 0
    Ge,
    /// expr == 0
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub expr: LinExpr,
    pub op: ConstrOp,
}

/// A single conjunctive piece: a rational polyhedron whose integer points are
/// meant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyhedron {
    pub ndims: usize,
    pub nparams: usize,
    pub cs: Vec<Constraint>,
}

impl Polyhedron {
    pub fn universe(ndims: usize, nparams: usize) -> Polyhedron {
        Polyhedron { ndims, nparams, cs: vec![] }
    }

    pub fn conjoin(&self, other: &Polyhedron) -> Polyhedron {
        debug_assert_eq!((self.ndims, self.nparams), (other.ndims, other.nparams));
        let mut cs = self.cs.clone();
        cs.extend(other.cs.iter().cloned());
        Polyhedron { ndims: self.ndims, nparams: self.nparams, cs }
    }

    /// Rows (a, b) of a.y <= b over the joint (dims, params) variable vector.
    fn lp_rows(&self) -> (Vec<Vec<Rat>>, Vec<Rat>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for c in &self.cs {
            let mut row: Vec<Rat> = c.expr.dims.iter().map(|x| -x.clone()).collect();
            row.extend(c.expr.params.iter().map(|x| -x.clone()));
            a.push(row.clone());
            b.push(c.expr.constant.clone());
            if c.op == ConstrOp::Eq {
                a.push(row.iter().map(|x| -x.clone()).collect());
                b.push(-c.expr.constant.clone());
            }
        }
        (a, b)
    }

    /// Rational feasibility with parameters treated as free variables.
    pub fn feasible(&self) -> bool {
        let (a, b) = self.lp_rows();
        let c = vec![rat_int(0); self.ndims + self.nparams];
        !matches!(maximize(&a, &b, &c), SimplexResult::Infeasible)
    }

    pub fn maximize_expr(&self, e: &LinExpr) -> SimplexResult {
        let (a, b) = self.lp_rows();
        let mut c: Vec<Rat> = e.dims.clone();
        c.extend(e.params.iter().cloned());
        match maximize(&a, &b, &c) {
            SimplexResult::Optimal(v, p) => SimplexResult::Optimal(v + &e.constant, p),
            other => other,
        }
    }

    /// Drops inequalities implied by the remaining constraints.
    fn prune_redundant(&self) -> Polyhedron {
        let mut kept: Vec<Constraint> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for c in &self.cs {
            let n = c.expr.int_normalized();
            if n.is_const() {
                if (c.op == ConstrOp::Ge && n.constant >= rat_int(0))
                    || (c.op == ConstrOp::Eq && n.constant.is_zero())
                {
                    continue;
                }
                // Contradiction: canonical empty piece.
                return Polyhedron {
                    ndims: self.ndims,
                    nparams: self.nparams,
                    cs: vec![Constraint {
                        expr: LinExpr {
                            constant: rat_int(-1),
                            ..LinExpr::zero(self.ndims, self.nparams)
                        },
                        op: ConstrOp::Ge,
                    }],
                };
            }
            let key = (format!("{:?}", n.dims), format!("{:?}", n.params), n.constant.clone(), c.op);
            if seen.insert(key) {
                kept.push(Constraint { expr: n, op: c.op });
            }
        }
        // LP-based pruning of inequalities only.
        let mut i = 0;
        while i < kept.len() {
            if kept[i].op == ConstrOp::Ge && kept.len() > 1 {
                let mut rest = kept.clone();
                let c = rest.remove(i);
                let p = Polyhedron { ndims: self.ndims, nparams: self.nparams, cs: rest.clone() };
                let neg = c.expr.scaled(&rat_int(-1));
                match p.maximize_expr(&neg) {
                    SimplexResult::Optimal(v, _) if v <= rat_int(0) => {
                        kept.remove(i);
                        continue;
                    }
                    SimplexResult::Infeasible => {}
                    _ => {}
                }
            }
            i += 1;
        }
        Polyhedron { ndims: self.ndims, nparams: self.nparams, cs: kept }
    }

    /// Fourier-Motzkin elimination of one dimension; the column is removed.
    fn eliminate_dim(&self, j: usize) -> Polyhedron {
        let drop_col = |e: &LinExpr| -> LinExpr {
            let mut dims = e.dims.clone();
            dims.remove(j);
            LinExpr { dims, params: e.params.clone(), constant: e.constant.clone() }
        };
        // Prefer substitution through an equality involving j.
        if let Some(pos) =
            self.cs.iter().position(|c| c.op == ConstrOp::Eq && !c.expr.dims[j].is_zero())
        {
            let eq = &self.cs[pos];
            let a = eq.expr.dims[j].clone();
            let mut cs = Vec::new();
            for (i, c) in self.cs.iter().enumerate() {
                if i == pos {
                    continue;
                }
                let g = &c.expr.dims[j];
                let e = if g.is_zero() {
                    c.expr.clone()
                } else {
                    c.expr.plus(&eq.expr.scaled(&(-(g / &a))))
                };
                cs.push(Constraint { expr: drop_col(&e), op: c.op });
            }
            return Polyhedron { ndims: self.ndims - 1, nparams: self.nparams, cs }
                .prune_redundant();
        }
        let mut lows = Vec::new();
        let mut ups = Vec::new();
        let mut cs = Vec::new();
        for c in &self.cs {
            let g = &c.expr.dims[j];
            if g.is_zero() {
                cs.push(Constraint { expr: drop_col(&c.expr), op: c.op });
            } else if *g > rat_int(0) {
                lows.push(c.expr.clone());
            } else {
                ups.push(c.expr.clone());
            }
        }
        for lo in &lows {
            for up in &ups {
                // lo has positive, up negative coefficient on j.
                let e = lo.scaled(&-up.dims[j].clone()).plus(&up.scaled(&lo.dims[j].clone()));
                debug_assert!(e.dims[j].is_zero());
                cs.push(Constraint { expr: drop_col(&e), op: ConstrOp::Ge });
            }
        }
        Polyhedron { ndims: self.ndims - 1, nparams: self.nparams, cs }.prune_redundant()
    }

    pub fn eliminate_dims(&self, idxs: &[usize]) -> Polyhedron {
        let mut sorted = idxs.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut p = self.clone();
        for &j in sorted.iter().rev() {
            p = p.eliminate_dim(j);
        }
        p
    }

    pub fn substitute_params(&self, values: &[i64]) -> Polyhedron {
        Polyhedron {
            ndims: self.ndims,
            nparams: 0,
            cs: self
                .cs
                .iter()
                .map(|c| Constraint { expr: c.expr.substitute_params(values), op: c.op })
                .collect(),
        }
    }

    /// Equality constraints (explicit and implicit) of the rational hull.
    fn affine_hull_equalities(&self) -> Vec<LinExpr> {
        let mut eqs: Vec<LinExpr> = Vec::new();
        for c in &self.cs {
            match c.op {
                ConstrOp::Eq => eqs.push(c.expr.clone()),
                ConstrOp::Ge => {
                    if let SimplexResult::Optimal(v, _) = self.maximize_expr(&c.expr) {
                        if v.is_zero() {
                            eqs.push(c.expr.clone());
                        }
                    }
                }
            }
        }
        eqs
    }

    /// Applies the change of variables x = m * u to the dimension block.
    fn change_basis(&self, m: &Matrix) -> Polyhedron {
        let cs = self
            .cs
            .iter()
            .map(|c| {
                let dims: Vec<Rat> = (0..self.ndims)
                    .map(|u| {
                        (0..self.ndims)
                            .map(|x| &c.expr.dims[x] * &m[x][u])
                            .fold(rat_int(0), |a, b| a + b)
                    })
                    .collect();
                Constraint {
                    expr: LinExpr {
                        dims,
                        params: c.expr.params.clone(),
                        constant: c.expr.constant.clone(),
                    },
                    op: c.op,
                }
            })
            .collect();
        Polyhedron { ndims: self.ndims, nparams: self.nparams, cs }
    }
}

/// Union of polyhedral pieces over one named tuple.
#[derive(Clone, Debug)]
pub struct IntSet {
    pub params: ParamSpace,
    pub tag: String,
    pub ndims: usize,
    pub pieces: Vec<Polyhedron>,
}

/// Union of polyhedral pieces over an (input tuple, output tuple) pair; the
/// dimension block of each piece is the input dims followed by output dims.
#[derive(Clone, Debug)]
pub struct AffRelation {
    pub params: ParamSpace,
    pub in_tag: String,
    pub out_tag: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub pieces: Vec<Polyhedron>,
}

/// x -> a.x + b.params + c on some guard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMapForm {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vec<Rat>,
}

impl AffineMapForm {
    pub fn in_dim(&self) -> usize {
        if self.a.is_empty() {
            0
        } else {
            self.a[0].len()
        }
    }
    pub fn out_dim(&self) -> usize {
        self.a.len()
    }
    pub fn is_invertible(&self) -> bool {
        self.in_dim() == self.out_dim() && !linalg::determinant(&self.a).is_zero()
    }
}

impl IntSet {
    pub fn universe(params: ParamSpace, tag: &str, ndims: usize) -> IntSet {
        let np = params.names.len();
        IntSet { params, tag: tag.to_string(), ndims, pieces: vec![Polyhedron::universe(ndims, np)] }
    }

    fn check_shape(&self, other: &IntSet) -> PResult<()> {
        if self.ndims != other.ndims || self.params != other.params {
            return Err(PolyError::Shape(format!(
                "{}[{}] vs {}[{}]",
                self.tag, self.ndims, other.tag, other.ndims
            )));
        }
        Ok(())
    }

    fn pruned(mut self) -> IntSet {
        self.pieces.retain(|p| p.feasible());
        self
    }

    pub fn is_rationally_empty(&self) -> bool {
        self.pieces.iter().all(|p| !p.feasible())
    }

    pub fn intersect(&self, other: &IntSet) -> PResult<IntSet> {
        self.check_shape(other)?;
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                pieces.push(a.conjoin(b).prune_redundant());
            }
        }
        Ok(IntSet { params: self.params.clone(), tag: self.tag.clone(), ndims: self.ndims, pieces }
            .pruned())
    }

    /// Integer set difference; exact because complements are taken on
    /// integer-normalized constraints.
    pub fn subtract(&self, other: &IntSet) -> PResult<IntSet> {
        self.check_shape(other)?;
        let mut current = self.pieces.clone();
        for q in &other.pieces {
            // Expand q into inequalities.
            let mut qs: Vec<LinExpr> = Vec::new();
            for c in &q.cs {
                let n = c.expr.int_normalized();
                match c.op {
                    ConstrOp::Ge => qs.push(n),
                    ConstrOp::Eq => {
                        qs.push(n.clone());
                        qs.push(n.scaled(&rat_int(-1)));
                    }
                }
            }
            let mut next = Vec::new();
            for p in current {
                let mut prefix = p.clone();
                for qe in &qs {
                    // piece satisfying the prefix but violating qe: qe <= -1.
                    let mut neg = qe.scaled(&rat_int(-1));
                    neg.constant -= rat_int(1);
                    let mut piece = prefix.clone();
                    piece.cs.push(Constraint { expr: neg, op: ConstrOp::Ge });
                    let piece = piece.prune_redundant();
                    if piece.feasible() {
                        next.push(piece);
                    }
                    prefix.cs.push(Constraint { expr: qe.clone(), op: ConstrOp::Ge });
                }
            }
            current = next;
        }
        Ok(IntSet {
            params: self.params.clone(),
            tag: self.tag.clone(),
            ndims: self.ndims,
            pieces: current,
        })
    }

    /// Projects away the dimensions in `idxs` (rational elimination; may
    /// over-approximate the integer projection).
    pub fn project_out(&self, idxs: &[usize]) -> IntSet {
        let pieces: Vec<Polyhedron> = self.pieces.iter().map(|p| p.eliminate_dims(idxs)).collect();
        let mut sorted = idxs.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        IntSet {
            params: self.params.clone(),
            tag: self.tag.clone(),
            ndims: self.ndims - sorted.len(),
            pieces,
        }
        .pruned()
    }

    /// Keeps only the listed dimensions, in their current order.
    pub fn project_onto(&self, keep: &[usize]) -> IntSet {
        let drop: Vec<usize> = (0..self.ndims).filter(|i| !keep.contains(i)).collect();
        self.project_out(&drop)
    }

    pub fn change_basis(&self, m: &Matrix) -> IntSet {
        IntSet {
            params: self.params.clone(),
            tag: self.tag.clone(),
            ndims: self.ndims,
            pieces: self.pieces.iter().map(|p| p.change_basis(m)).collect(),
        }
    }

    pub fn card_at(&self, b: &Binding) -> PResult<u128> {
        count::card_at(self, b)
    }

    pub fn enumerate_at(&self, b: &Binding, cap: usize) -> PResult<Vec<Vec<i64>>> {
        count::enumerate_at(self, b, cap)
    }

    pub fn card_leading(&self) -> PResult<LeadingForm> {
        count::card_leading(self)
    }

    /// Dimension of the set for large parameter values: the affine-hull rank
    /// of the rational relaxation, maximized over pieces and over a couple of
    /// probe bindings to dodge degenerate parameter values.
    pub fn dim_of(&self) -> PResult<usize> {
        let mut best: Option<usize> = None;
        for probe in [100i64, 101] {
            let values = vec![probe; self.params.names.len()];
            for piece in &self.pieces {
                let p = piece.substitute_params(&values);
                if !p.feasible() {
                    continue;
                }
                let eqs = p.affine_hull_equalities();
                let m: Matrix = eqs.iter().map(|e| e.dims.clone()).collect();
                let d = self.ndims - linalg::rank(&m);
                best = Some(best.map_or(d, |b| b.max(d)));
            }
        }
        best.ok_or(PolyError::Empty)
    }
}

impl AffRelation {
    fn piece_dims(&self) -> usize {
        self.in_dim + self.out_dim
    }

    pub fn inverse(&self) -> AffRelation {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let cs = p
                    .cs
                    .iter()
                    .map(|c| {
                        let mut dims = c.expr.dims[self.in_dim..].to_vec();
                        dims.extend_from_slice(&c.expr.dims[..self.in_dim]);
                        Constraint {
                            expr: LinExpr {
                                dims,
                                params: c.expr.params.clone(),
                                constant: c.expr.constant.clone(),
                            },
                            op: c.op,
                        }
                    })
                    .collect();
                Polyhedron { ndims: p.ndims, nparams: p.nparams, cs }
            })
            .collect();
        AffRelation {
            params: self.params.clone(),
            in_tag: self.out_tag.clone(),
            out_tag: self.in_tag.clone(),
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            pieces,
        }
    }

    pub fn domain(&self) -> IntSet {
        let drop: Vec<usize> = (self.in_dim..self.piece_dims()).collect();
        IntSet {
            params: self.params.clone(),
            tag: self.in_tag.clone(),
            ndims: self.in_dim,
            pieces: self.pieces.iter().map(|p| p.eliminate_dims(&drop)).collect(),
        }
        .pruned()
    }

    pub fn image(&self) -> IntSet {
        let drop: Vec<usize> = (0..self.in_dim).collect();
        IntSet {
            params: self.params.clone(),
            tag: self.out_tag.clone(),
            ndims: self.out_dim,
            pieces: self.pieces.iter().map(|p| p.eliminate_dims(&drop)).collect(),
        }
        .pruned()
    }

    pub fn apply(&self, s: &IntSet) -> PResult<IntSet> {
        if s.ndims != self.in_dim || s.params != self.params {
            return Err(PolyError::Shape(format!(
                "apply: relation takes {}[{}], got {}[{}]",
                self.in_tag, self.in_dim, s.tag, s.ndims
            )));
        }
        let mut pieces = Vec::new();
        for rp in &self.pieces {
            for sp in &s.pieces {
                // Lift the set constraints onto the input block.
                let lifted: Vec<Constraint> = sp
                    .cs
                    .iter()
                    .map(|c| {
                        let mut dims = c.expr.dims.clone();
                        dims.extend(vec![rat_int(0); self.out_dim]);
                        Constraint {
                            expr: LinExpr {
                                dims,
                                params: c.expr.params.clone(),
                                constant: c.expr.constant.clone(),
                            },
                            op: c.op,
                        }
                    })
                    .collect();
                let mut joint = rp.clone();
                joint.cs.extend(lifted);
                let drop: Vec<usize> = (0..self.in_dim).collect();
                pieces.push(joint.eliminate_dims(&drop));
            }
        }
        Ok(IntSet {
            params: self.params.clone(),
            tag: self.out_tag.clone(),
            ndims: self.out_dim,
            pieces,
        }
        .pruned())
    }

    /// r2 after r1 (this = r2 applied to the image of r1).
    pub fn compose_after(&self, r1: &AffRelation) -> PResult<AffRelation> {
        if r1.out_dim != self.in_dim || r1.params != self.params {
            return Err(PolyError::Shape(format!(
                "compose: {}[{}] -> {}[{}] then {}[{}] -> {}[{}]",
                r1.in_tag,
                r1.in_dim,
                r1.out_tag,
                r1.out_dim,
                self.in_tag,
                self.in_dim,
                self.out_tag,
                self.out_dim
            )));
        }
        let mid = r1.out_dim;
        let total = r1.in_dim + mid + self.out_dim;
        let np = self.params.names.len();
        let mut pieces = Vec::new();
        for p1 in &r1.pieces {
            for p2 in &self.pieces {
                let mut cs = Vec::new();
                for c in &p1.cs {
                    let mut dims = c.expr.dims.clone();
                    dims.extend(vec![rat_int(0); self.out_dim]);
                    cs.push(Constraint {
                        expr: LinExpr {
                            dims,
                            params: c.expr.params.clone(),
                            constant: c.expr.constant.clone(),
                        },
                        op: c.op,
                    });
                }
                for c in &p2.cs {
                    let mut dims = vec![rat_int(0); r1.in_dim];
                    dims.extend(c.expr.dims.iter().cloned());
                    cs.push(Constraint {
                        expr: LinExpr {
                            dims,
                            params: c.expr.params.clone(),
                            constant: c.expr.constant.clone(),
                        },
                        op: c.op,
                    });
                }
                let joint = Polyhedron { ndims: total, nparams: np, cs };
                let drop: Vec<usize> = (r1.in_dim..r1.in_dim + mid).collect();
                let piece = joint.eliminate_dims(&drop);
                if piece.feasible() {
                    pieces.push(piece);
                }
            }
        }
        Ok(AffRelation {
            params: self.params.clone(),
            in_tag: r1.in_tag.clone(),
            out_tag: self.out_tag.clone(),
            in_dim: r1.in_dim,
            out_dim: self.out_dim,
            pieces,
        })
    }

    /// The unique affine map x -> a.x + b.p + c agreeing with the relation on
    /// its whole domain, if one exists.
    pub fn as_affine_map(&self) -> Option<AffineMapForm> {
        let mut found: Option<AffineMapForm> = None;
        for p in &self.pieces {
            if !p.feasible() {
                continue;
            }
            let eqs = p.affine_hull_equalities();
            // Columns: out dims first so rref solves for them.
            let cols = self.out_dim + self.in_dim + p.nparams + 1;
            let mut m: Matrix = eqs
                .iter()
                .map(|e| {
                    let mut row: Vec<Rat> = e.dims[self.in_dim..].to_vec();
                    row.extend_from_slice(&e.dims[..self.in_dim]);
                    row.extend(e.params.iter().cloned());
                    row.push(e.constant.clone());
                    row
                })
                .collect();
            let pivots = linalg::rref(&mut m);
            m.truncate(pivots.len());
            let mut a = vec![vec![rat_int(0); self.in_dim]; self.out_dim];
            let mut b = vec![vec![rat_int(0); p.nparams]; self.out_dim];
            let mut c = vec![rat_int(0); self.out_dim];
            for j in 0..self.out_dim {
                let Some(row) = pivots.iter().position(|&pv| pv == j) else {
                    return None;
                };
                // The row must not involve other output dims.
                if (0..self.out_dim).any(|k| k != j && !m[row][k].is_zero()) {
                    return None;
                }
                for i in 0..self.in_dim {
                    a[j][i] = -m[row][self.out_dim + i].clone();
                }
                for i in 0..p.nparams {
                    b[j][i] = -m[row][self.out_dim + self.in_dim + i].clone();
                }
                c[j] = -m[row][cols - 1].clone();
                let _ = cols;
            }
            let form = AffineMapForm { a, b, c };
            match &found {
                None => found = Some(form),
                Some(f) if *f == form => {}
                Some(_) => return None,
            }
        }
        found
    }

    /// Some(b) iff the relation is x -> x + b with a constant vector b.
    pub fn as_translation(&self) -> Option<Vec<Rat>> {
        let f = self.as_affine_map()?;
        if f.in_dim() != f.out_dim() {
            return None;
        }
        let n = f.in_dim();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { rat_int(1) } else { rat_int(0) };
                if f.a[i][j] != want {
                    return None;
                }
            }
            if f.b[i].iter().any(|x| !x.is_zero()) {
                return None;
            }
        }
        Some(f.c)
    }

    pub fn is_rationally_empty(&self) -> bool {
        self.pieces.iter().all(|p| !p.feasible())
    }

    /// Applies x = m * u simultaneously to both tuple blocks (endorelations).
    pub fn change_basis(&self, m: &Matrix) -> PResult<AffRelation> {
        if self.in_dim != self.out_dim {
            return Err(PolyError::Shape("change_basis needs an endorelation".into()));
        }
        let n = self.in_dim;
        let mut big = vec![vec![rat_int(0); 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                big[i][j] = m[i][j].clone();
                big[n + i][n + j] = m[i][j].clone();
            }
        }
        Ok(AffRelation {
            pieces: self.pieces.iter().map(|p| p.change_basis(&big)).collect(),
            ..self.clone()
        })
    }
}

/// Kernel of the linear part of an affine map, as a subspace of the input.
pub fn kernel_basis(f: &AffineMapForm) -> Subspace {
    let ns = linalg::null_space(&f.a);
    Subspace::from_vectors(f.in_dim(), &ns)
}

/// Leading homogeneous form of a counting polynomial, normalized to coprime
/// positive integer coefficients: `N*T`, `N+T`, `N^2`, ...
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeadingForm {
    pub params: Vec<String>,
    /// (coefficient, exponent per param), sorted descending by exponents.
    pub terms: Vec<(BigInt, Vec<u32>)>,
}

impl LeadingForm {
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn monomial(params: &[&str], exps: &[u32]) -> LeadingForm {
        LeadingForm {
            params: params.iter().map(|s| s.to_string()).collect(),
            terms: vec![(BigInt::one(), exps.to_vec())],
        }
    }

    pub fn is_single_monomial(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one()
    }

    pub fn eval_f64(&self, b: &Binding) -> f64 {
        self.terms
            .iter()
            .map(|(c, exps)| {
                let mut v = c.to_string().parse::<f64>().unwrap_or(f64::NAN);
                for (p, e) in self.params.iter().zip(exps) {
                    v *= (b.get(p).copied().unwrap_or(0) as f64).powi(*e as i32);
                }
                v
            })
            .sum()
    }
}

impl fmt::Display for LeadingForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (c, exps) in &self.terms {
            let mut factors = Vec::new();
            if !c.is_one() || exps.iter().all(|&e| e == 0) {
                factors.push(c.to_string());
            }
            for (p, &e) in self.params.iter().zip(exps) {
                match e {
                    0 => {}
                    1 => factors.push(p.clone()),
                    _ => factors.push(format!("{p}^{e}")),
                }
            }
            parts.push(factors.join("*"));
        }
        write!(f, "{}", parts.join("+"))
    }
}

/// Canonical text for a set, used by reports and traces.
impl fmt::Display for IntSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] -> {{ ", self.params.names.join(","))?;
        let names: Vec<String> = (0..self.ndims).map(|i| format!("i{i}")).collect();
        let parts: Vec<String> =
            self.pieces.iter().map(|p| render_piece(&self.tag, p, &names, &self.params)).collect();
        write!(f, "{} }}", parts.join("; "))
    }
}

impl fmt::Display for AffRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] -> {{ ", self.params.names.join(","))?;
        let mut names: Vec<String> = (0..self.in_dim).map(|i| format!("i{i}")).collect();
        names.extend((0..self.out_dim).map(|i| format!("o{i}")));
        let parts: Vec<String> = self
            .pieces
            .iter()
            .map(|p| {
                let ins = names[..self.in_dim].join(",");
                let outs = names[self.in_dim..].join(",");
                let cons = render_constraints(p, &names, &self.params);
                let head = format!("{}[{}] -> {}[{}]", self.in_tag, ins, self.out_tag, outs);
                if cons.is_empty() {
                    head
                } else {
                    format!("{head} : {cons}")
                }
            })
            .collect();
        write!(f, "{} }}", parts.join("; "))
    }
}

fn render_piece(tag: &str, p: &Polyhedron, names: &[String], params: &ParamSpace) -> String {
    let cons = render_constraints(p, names, params);
    let head = format!("{}[{}]", tag, names.join(","));
    if cons.is_empty() {
        head
    } else {
        format!("{head} : {cons}")
    }
}

fn render_constraints(p: &Polyhedron, names: &[String], params: &ParamSpace) -> String {
    let term = |c: &Rat, n: &str, first: bool| -> String {
        let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
        let a = c.abs();
        if a.is_one() {
            format!("{sign}{n}")
        } else {
            format!("{sign}{a}*{n}")
        }
    };
    p.cs.iter()
        .map(|c| {
            let e = c.expr.int_normalized();
            let mut s = String::new();
            for (i, co) in e.dims.iter().enumerate() {
                if !co.is_zero() {
                    s += &term(co, &names[i], s.is_empty());
                }
            }
            for (i, co) in e.params.iter().enumerate() {
                if !co.is_zero() {
                    s += &term(co, &params.names[i], s.is_empty());
                }
            }
            if s.is_empty() {
                s = "0".into();
            }
            let op = if c.op == ConstrOp::Eq { "=" } else { ">=" };
            format!("{s}{op}{}", -&e.constant)
        })
        .collect::<Vec<_>>()
        .join(" and ")
}

/// frontier(d, r) = d minus r applied to d.
pub fn frontier(d: &IntSet, r: &AffRelation) -> PResult<IntSet> {
    d.subtract(&r.apply(d)?)
}

pub(crate) fn ipiece_binding_values(params: &ParamSpace, b: &Binding) -> PResult<Vec<i64>> {
    params
        .names
        .iter()
        .map(|n| b.get(n).copied().ok_or_else(|| PolyError::MissingParam(n.clone())))
        .collect()
}
