//! Parametric exponent linear programs.
//!
//! Given a full-dimensional domain D and a compatible set of projection
//! subspaces K, builds the LP over exponent variables x_1..x_d (one per base
//! vector): maximize Theta = sum x_i subject to unit constraints per subspace
//! and degenerate-case constraints per proper subset of the base, with
//! right-hand sides affine in the symbols log_S(arg). The LP is solved
//! exactly and parametrically by enumerating dual-feasible bases; each basis
//! yields one case whose region is the basis' primal-feasibility polyhedron
//! in the log-term orthant. Cases assemble into a piecewise I/O lower bound
//! Omega(|D|*S/S^Theta) - Omega(F).

use crate::asymbound::{AsymBound, Base, BoundCase, Monomial, RegionAtom};
use crate::polyset::linalg::{inverse, rank, rat_int, Matrix, Rat, Subspace};
use crate::polyset::simplex::{maximize, SimplexResult};
use crate::polyset::{IntSet, LeadingForm, PResult, PolyError};
use itertools::Itertools;
use num::{BigInt, One, Signed, Zero};
use std::collections::BTreeSet;
use std::fmt;

/// The symbol log_S(arg) for a positive leading form `arg`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogTerm(pub LeadingForm);

impl fmt::Display for LogTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log_S({})", self.0)
    }
}

/// Affine expression c0 + sum coefs[j] * t_j over the log-term vector t.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aff {
    pub c0: Rat,
    pub coefs: Vec<Rat>,
}

impl Aff {
    pub fn constant(c: Rat, nterms: usize) -> Aff {
        Aff { c0: c, coefs: vec![rat_int(0); nterms] }
    }

    pub fn zero(nterms: usize) -> Aff {
        Aff::constant(rat_int(0), nterms)
    }

    pub fn add(&self, o: &Aff) -> Aff {
        Aff {
            c0: &self.c0 + &o.c0,
            coefs: self.coefs.iter().zip(&o.coefs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Aff) -> Aff {
        Aff {
            c0: &self.c0 - &o.c0,
            coefs: self.coefs.iter().zip(&o.coefs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Rat) -> Aff {
        Aff { c0: &self.c0 * s, coefs: self.coefs.iter().map(|c| c * s).collect() }
    }

    pub fn is_constant(&self) -> bool {
        self.coefs.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, t: &[Rat]) -> Rat {
        let mut v = self.c0.clone();
        for (c, x) in self.coefs.iter().zip(t) {
            v += c * x;
        }
        v
    }

    fn render(&self, terms: &[LogTerm]) -> String {
        let mut parts = Vec::new();
        if !self.c0.is_zero() {
            parts.push(self.c0.to_string());
        }
        for (c, t) in self.coefs.iter().zip(terms) {
            if c.is_zero() {
                continue;
            }
            if c.is_one() {
                parts.push(t.to_string());
            } else {
                parts.push(format!("{c}*{t}"));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// One row: sum of the listed variables (coefficient 1) <= rhs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpConstraint {
    pub vars: Vec<usize>,
    pub rhs: Aff,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpLP {
    pub dim: usize,
    pub terms: Vec<LogTerm>,
    pub constraints: Vec<LpConstraint>,
}

impl fmt::Display for ExpLP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "maximize x1 + .. + x{}", self.dim)?;
        for c in &self.constraints {
            let lhs: Vec<String> = c.vars.iter().map(|i| format!("x{}", i + 1)).collect();
            writeln!(f, "  {} <= {}", lhs.join(" + "), c.rhs.render(&self.terms))?;
        }
        Ok(())
    }
}

/// Build artifacts beyond the LP itself, kept for bound assembly: the domain
/// in base coordinates and the base-vector membership of each subspace.
#[derive(Clone, Debug)]
pub struct LpBuild {
    pub lp: ExpLP,
    pub base: Vec<Vec<Rat>>,
    pub d_based: IntSet,
    pub card_d: LeadingForm,
    /// Per subspace, the indices of base vectors it contains.
    pub k_members: Vec<Vec<usize>>,
}

/// A basis of the whole space such that every given subspace is spanned by a
/// subset of it, or None if the greedy construction fails. Subspaces are
/// processed by increasing dimension; the basis is completed with canonical
/// unit vectors.
pub fn base_of(ks: &[Subspace], ambient: usize) -> Option<Vec<Vec<Rat>>> {
    let mut order: Vec<&Subspace> = ks.iter().collect();
    order.sort_by_key(|k| k.dim());
    let mut b: Vec<Vec<Rat>> = Vec::new();
    for k in order {
        let inside: Vec<Vec<Rat>> = b.iter().filter(|v| k.contains(v)).cloned().collect();
        let mut span = Subspace::from_vectors(ambient, &inside);
        for v in &k.basis {
            if span.dim() == k.dim() {
                break;
            }
            if span.contains(v) {
                continue;
            }
            let mut cand = b.clone();
            cand.push(v.clone());
            if rank(&cand) == b.len() + 1 {
                b.push(v.clone());
                span = span.sum(&Subspace::from_vectors(ambient, &[v.clone()]));
            }
        }
        if span.dim() != k.dim() {
            return None;
        }
    }
    for i in 0..ambient {
        if b.len() == ambient {
            break;
        }
        let mut unit = vec![rat_int(0); ambient];
        unit[i] = rat_int(1);
        let mut cand = b.clone();
        cand.push(unit.clone());
        if rank(&cand) == b.len() + 1 {
            b.push(unit);
        }
    }
    if b.len() != ambient {
        return None;
    }
    // Canonical order: by leading axis, then lexicographically descending.
    // Which subsets span which subspace is order-independent.
    b.sort_by(|u, v| {
        let lu = u.iter().position(|x| !x.is_zero());
        let lv = v.iter().position(|x| !x.is_zero());
        lu.cmp(&lv).then_with(|| v.partial_cmp(u).unwrap())
    });
    Some(b)
}

/// Splits the log of a cardinality form into an affine combination of log
/// terms: a single monomial becomes a sum of per-parameter terms (constant
/// coefficients dropped, they vanish asymptotically); a multi-term form
/// becomes one composite term.
fn log_of_form(form: &LeadingForm, terms: &mut Vec<LogTerm>) -> Aff {
    let mut parts: Vec<(Rat, LogTerm)> = Vec::new();
    if form.terms.len() == 1 {
        let (_, exps) = &form.terms[0];
        for (p, &e) in form.params.iter().zip(exps) {
            if e > 0 {
                let arg = LeadingForm {
                    params: form.params.clone(),
                    terms: vec![(
                        BigInt::one(),
                        form.params.iter().map(|q| if q == p { 1 } else { 0 }).collect(),
                    )],
                };
                parts.push((rat_int(e as i64), LogTerm(arg)));
            }
        }
    } else {
        parts.push((rat_int(1), LogTerm(form.clone())));
    }
    let mut aff = Aff::zero(terms.len());
    for (c, t) in parts {
        let idx = match terms.iter().position(|x| *x == t) {
            Some(i) => i,
            None => {
                terms.push(t);
                aff.coefs.push(rat_int(0));
                terms.len() - 1
            }
        };
        aff.coefs[idx] += c;
    }
    aff
}

fn pad_terms(lp: &mut ExpLP) {
    let n = lp.terms.len();
    for c in &mut lp.constraints {
        c.rhs.coefs.resize(n, rat_int(0));
    }
}

pub fn build_lp(d: &IntSet, ks: &[Subspace]) -> PResult<LpBuild> {
    let dim = d.ndims;
    let base = base_of(ks, dim)
        .ok_or_else(|| PolyError::Other("subspaces admit no common base".into()))?;
    // x = M u with column j = base vector j, so coordinate j of u measures
    // the component along base vector j.
    let m: Matrix =
        (0..dim).map(|r| (0..dim).map(|c| base[c][r].clone()).collect()).collect();
    if inverse(&m).is_none() {
        return Err(PolyError::Other("base is singular".into()));
    }
    let d_based = d.change_basis(&m);
    let card_d = d.card_leading()?;

    let mut terms: Vec<LogTerm> = Vec::new();
    let mut constraints: Vec<LpConstraint> = Vec::new();
    let mut k_members: Vec<Vec<usize>> = Vec::new();
    for k in ks {
        let members: Vec<usize> = (0..dim).filter(|&i| k.contains(&base[i])).collect();
        let outside: Vec<usize> = (0..dim).filter(|i| !members.contains(i)).collect();
        constraints.push(LpConstraint { vars: outside, rhs: Aff::constant(rat_int(1), 0) });
        k_members.push(members);
    }
    for sub in (0..dim).powerset() {
        if sub.is_empty() || sub.len() == dim {
            continue;
        }
        let proj = d_based.project_onto(&sub);
        let card = proj.card_leading()?;
        let rhs = log_of_form(&card, &mut terms);
        constraints.push(LpConstraint { vars: sub, rhs });
    }
    let mut lp = ExpLP { dim, terms, constraints };
    pad_terms(&mut lp);
    if lp.terms.len() > 4 {
        return Err(PolyError::Other("parametric arity exceeded".into()));
    }
    Ok(LpBuild { lp, base, d_based, card_d, k_members })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlpCase {
    /// Conjunction of `aff >= 0` conditions over the log terms.
    pub region: Vec<Aff>,
    pub assign: Vec<Aff>,
    pub theta: Aff,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseSolution {
    pub terms: Vec<LogTerm>,
    pub cases: Vec<PlpCase>,
}

impl fmt::Display for PiecewiseSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            let conds: Vec<String> = c
                .region
                .iter()
                .map(|a| {
                    let mut pos = a.clone();
                    let shift = -&pos.c0;
                    pos.c0 = rat_int(0);
                    format!("{} >= {}", pos.render(&self.terms), shift)
                })
                .collect();
            let assigns: Vec<String> = c
                .assign
                .iter()
                .enumerate()
                .map(|(i, a)| format!("x{}={}", i + 1, a.render(&self.terms)))
                .collect();
            if conds.is_empty() {
                writeln!(f, "{}", assigns.join(", "))?;
            } else {
                writeln!(f, "if {} then {}", conds.join(" and "), assigns.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Dense row form of the LP including the implicit x >= 0 rows.
fn dense_rows(lp: &ExpLP) -> (Vec<Vec<Rat>>, Vec<Aff>) {
    let d = lp.dim;
    let nt = lp.terms.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![rat_int(0); d];
        for &v in &c.vars {
            row[v] = rat_int(1);
        }
        rows.push(row);
        rhs.push(c.rhs.clone());
    }
    for i in 0..d {
        let mut row = vec![rat_int(0); d];
        row[i] = rat_int(-1);
        rows.push(row);
        rhs.push(Aff::zero(nt));
    }
    (rows, rhs)
}

/// Nonemptiness of an affine region intersected with the orthant t >= 0.
fn region_nonempty(region: &[Aff], nterms: usize) -> bool {
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    for atom in region {
        a.push(atom.coefs.iter().map(|c| -c).collect());
        b.push(atom.c0.clone());
    }
    for i in 0..nterms {
        let mut row = vec![rat_int(0); nterms];
        row[i] = rat_int(-1);
        a.push(row);
        b.push(rat_int(0));
    }
    !matches!(maximize(&a, &b, &vec![rat_int(0); nterms]), SimplexResult::Infeasible)
}

/// Whether every point of `inner` (within the orthant) satisfies `atom >= 0`.
fn atom_implied(inner: &[Aff], atom: &Aff, nterms: usize) -> bool {
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    for x in inner {
        a.push(x.coefs.iter().map(|c| -c).collect());
        b.push(x.c0.clone());
    }
    for i in 0..nterms {
        let mut row = vec![rat_int(0); nterms];
        row[i] = rat_int(-1);
        a.push(row);
        b.push(rat_int(0));
    }
    let obj: Vec<Rat> = atom.coefs.iter().map(|c| -c).collect();
    match maximize(&a, &b, &obj) {
        SimplexResult::Optimal(v, _) => v <= atom.c0,
        SimplexResult::Infeasible => true,
        SimplexResult::Unbounded => false,
    }
}

pub fn solve_plp(lp: &ExpLP) -> PResult<PiecewiseSolution> {
    if lp.terms.len() > 4 {
        return Err(PolyError::Other("parametric arity exceeded".into()));
    }
    let d = lp.dim;
    let nt = lp.terms.len();
    let (rows, rhs) = dense_rows(lp);
    let ones = vec![rat_int(1); d];

    let mut cases: Vec<PlpCase> = Vec::new();
    for combo in (0..rows.len()).combinations(d) {
        let bmat: Matrix = combo.iter().map(|&r| rows[r].clone()).collect();
        let binv = match inverse(&bmat) {
            Some(i) => i,
            None => continue,
        };
        // Dual feasibility: lambda = B^{-T} 1 >= 0, independent of t.
        let lambda: Vec<Rat> = (0..d)
            .map(|j| (0..d).map(|i| &binv[i][j] * &ones[i]).sum())
            .collect();
        if lambda.iter().any(|l| l.is_negative()) {
            continue;
        }
        // x(t) = B^{-1} rhs_B(t), affine in t.
        let x: Vec<Aff> = (0..d)
            .map(|i| {
                let mut acc = Aff::zero(nt);
                for (j, &r) in combo.iter().enumerate() {
                    acc = acc.add(&rhs[r].scale(&binv[i][j]));
                }
                acc
            })
            .collect();
        // Primal feasibility of the non-basic rows defines the region.
        let mut region: Vec<Aff> = Vec::new();
        let mut empty = false;
        for r in 0..rows.len() {
            if combo.contains(&r) {
                continue;
            }
            let mut lhs = Aff::zero(nt);
            for i in 0..d {
                lhs = lhs.add(&x[i].scale(&rows[r][i]));
            }
            let slack = rhs[r].sub(&lhs);
            if slack.is_constant() {
                if slack.c0.is_negative() {
                    empty = true;
                    break;
                }
                continue;
            }
            if !region.contains(&slack) {
                region.push(slack);
            }
        }
        if empty || !region_nonempty(&region, nt) {
            continue;
        }
        let theta = x.iter().fold(Aff::zero(nt), |a, b| a.add(b));
        cases.push(PlpCase { region, assign: x, theta });
    }
    if cases.is_empty() {
        return Err(PolyError::Unbounded);
    }
    // Drop any case whose region sits inside another case's region; both are
    // optimal there, so the larger region subsumes it.
    cases.sort_by_key(|c| {
        (c.region.len(), format!("{:?}", c.region), format!("{:?}", c.assign))
    });
    let mut kept: Vec<PlpCase> = Vec::new();
    'outer: for c in cases {
        for k in &kept {
            if k.region.iter().all(|atom| atom_implied(&c.region, atom, nt)) {
                continue 'outer;
            }
        }
        kept.retain(|k| !c.region.iter().all(|atom| atom_implied(&k.region, atom, nt)));
        kept.push(c);
    }
    kept.sort_by_key(|c| (c.region.len(), format!("{:?}", c.region)));
    Ok(PiecewiseSolution { terms: lp.terms.clone(), cases: kept })
}

/// Case selected for a binding: first case (canonical order) whose region
/// holds; boundaries are consistent because adjacent optima agree there.
pub fn select_case<'a>(sol: &'a PiecewiseSolution, t: &[Rat]) -> Option<&'a PlpCase> {
    sol.cases.iter().find(|c| c.region.iter().all(|a| !a.eval(t).is_negative()))
}

/// Cross-checks the parametric solution against a plain rational-simplex
/// solve of the instantiated LP at a log-term binding (all values >= 0).
pub fn verify_numeric(lp: &ExpLP, sol: &PiecewiseSolution, t: &[Rat]) -> bool {
    if t.len() != lp.terms.len() || t.iter().any(|v| v.is_negative()) {
        return false;
    }
    let case = match select_case(sol, t) {
        Some(c) => c,
        None => return false,
    };
    let (rows, rhs) = dense_rows(lp);
    let b: Vec<Rat> = rhs.iter().map(|a| a.eval(t)).collect();
    // Assignment must be feasible at the binding.
    let x: Vec<Rat> = case.assign.iter().map(|a| a.eval(t)).collect();
    for (row, bound) in rows.iter().zip(&b) {
        let lhs: Rat = row.iter().zip(&x).map(|(c, v)| c * v).sum();
        if lhs > *bound {
            return false;
        }
    }
    let opt = match maximize(&rows, &b, &vec![rat_int(1); lp.dim]) {
        SimplexResult::Optimal(v, _) => v,
        _ => return false,
    };
    let diff = case.theta.eval(t) - opt;
    let tol = Rat::new(BigInt::one(), BigInt::from(1_000_000_000u64));
    diff.abs() <= tol
}

fn monomials_of_form(form: &LeadingForm) -> Vec<Monomial> {
    Monomial::from_form(form, rat_int(1))
}

/// Monomial for carddform^1 * S^{1 - theta(t)} where S^{t_j} = arg_j.
fn scaled_cell_monomials(
    card: &LeadingForm,
    theta: &Aff,
    terms: &[LogTerm],
) -> Vec<Monomial> {
    let s_exp = rat_int(1) - &theta.c0;
    let mut scale = Monomial::base(Base::Cache, s_exp);
    for (c, t) in theta.coefs.iter().zip(terms) {
        if c.is_zero() {
            continue;
        }
        for m in Monomial::from_form(&t.0, -c) {
            scale = scale.mul(&m);
        }
    }
    monomials_of_form(card).into_iter().map(|m| m.mul(&scale)).collect()
}

/// Assembles the piecewise bound Omega(|D|*S/S^Theta) - Omega(F), where F
/// sums the projections of D onto the complement coordinates of each
/// subspace (the tagged frontier counts).
pub fn assemble_bound(build: &LpBuild, sol: &PiecewiseSolution) -> PResult<AsymBound> {
    let dim = build.lp.dim;
    let mut f_terms: BTreeSet<Monomial> = BTreeSet::new();
    for members in &build.k_members {
        let keep: Vec<usize> = (0..dim).filter(|i| !members.contains(i)).collect();
        if keep.is_empty() {
            continue;
        }
        let card = build.d_based.project_onto(&keep).card_leading()?;
        f_terms.extend(monomials_of_form(&card));
    }
    let mut cases = Vec::new();
    for c in &sol.cases {
        let region: Vec<RegionAtom> = c
            .region
            .iter()
            .map(|a| RegionAtom {
                terms: a
                    .coefs
                    .iter()
                    .zip(&sol.terms)
                    .filter(|(co, _)| !co.is_zero())
                    .map(|(co, t)| (co.clone(), t.0.clone()))
                    .collect(),
                constant: a.c0.clone(),
                ge: true,
            })
            .collect();
        let pos = scaled_cell_monomials(&build.card_d, &c.theta, &sol.terms);
        cases.push(BoundCase {
            region,
            pos: pos.into_iter().collect(),
            neg: f_terms.clone(),
        });
    }
    Ok(AsymBound { cases }.simplify())
}

/// Convenience wrapper: Algorithm "solve" end to end.
pub fn solve(d: &IntSet, ks: &[Subspace]) -> PResult<AsymBound> {
    let build = build_lp(d, ks)?;
    let sol = solve_plp(&build.lp)?;
    assemble_bound(&build, &sol)
}
