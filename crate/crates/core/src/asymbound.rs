//! Piecewise asymptotic lower bounds.
//!
//! A bound is a list of cases; each case has a region (conjunction of affine
//! conditions on log_S terms) and a value Omega(sum of positive monomials -
//! sum of negative monomials). Monomials have rational exponents over
//! parameters, the cache-size symbol S, and composite forms such as N+T.

use crate::polyset::linalg::{rat_int, Rat};
use crate::polyset::simplex::{maximize, SimplexResult};
use crate::polyset::{Binding, LeadingForm};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    Param(String),
    Form(LeadingForm),
    Cache,
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Param(p) => write!(f, "{p}"),
            Base::Form(w) if w.terms.len() > 1 => write!(f, "({w})"),
            Base::Form(w) => write!(f, "{w}"),
            Base::Cache => write!(f, "S"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub exps: BTreeMap<Base, Rat>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn base(b: Base, e: Rat) -> Monomial {
        let mut m = Monomial::one();
        m.set(b, e);
        m
    }

    pub fn param(name: &str, e: i64) -> Monomial {
        Monomial::base(Base::Param(name.into()), rat_int(e))
    }

    pub fn set(&mut self, b: Base, e: Rat) {
        if e.is_zero() {
            self.exps.remove(&b);
        } else {
            self.exps.insert(b, e);
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.clone();
        for (b, e) in &other.exps {
            let cur = m.exps.get(b).cloned().unwrap_or_else(|| rat_int(0));
            m.set(b.clone(), cur + e);
        }
        m
    }

    /// A form with several terms enters as a sum of monomials when the
    /// exponent is a positive integer, otherwise as a composite base.
    pub fn from_form(form: &LeadingForm, e: Rat) -> Vec<Monomial> {
        if form.terms.len() == 1 {
            let (_, exps) = &form.terms[0];
            let mut m = Monomial::one();
            for (p, &k) in form.params.iter().zip(exps) {
                if k > 0 {
                    m.set(Base::Param(p.clone()), &e * rat_int(k as i64));
                }
            }
            return vec![m];
        }
        if form.terms.len() > 1 && e.denom().is_one() && e.numer().is_positive() && e.is_one() {
            // Expand a sum taken to the first power.
            return form
                .terms
                .iter()
                .map(|(_, exps)| {
                    let mut m = Monomial::one();
                    for (p, &k) in form.params.iter().zip(exps) {
                        if k > 0 {
                            m.set(Base::Param(p.clone()), rat_int(k as i64));
                        }
                    }
                    m
                })
                .collect();
        }
        vec![Monomial::base(Base::Form(form.clone()), e)]
    }

    /// Componentwise comparison over the union of bases.
    pub fn dominated_by(&self, other: &Monomial) -> bool {
        let keys: BTreeSet<&Base> = self.exps.keys().chain(other.exps.keys()).collect();
        keys.into_iter().all(|k| {
            let a = self.exps.get(k).cloned().unwrap_or_else(|| rat_int(0));
            let b = other.exps.get(k).cloned().unwrap_or_else(|| rat_int(0));
            a <= b
        })
    }

    pub fn eval_f64(&self, b: &Binding, s: f64) -> f64 {
        self.exps
            .iter()
            .map(|(base, e)| {
                let v = match base {
                    Base::Param(p) => b.get(p).copied().unwrap_or(0) as f64,
                    Base::Form(w) => w.eval_f64(b),
                    Base::Cache => s,
                };
                let ef = e.numer().to_string().parse::<f64>().unwrap()
                    / e.denom().to_string().parse::<f64>().unwrap();
                v.powf(ef)
            })
            .product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .exps
            .iter()
            .map(|(b, e)| if e.is_one() { format!("{b}") } else { format!("{b}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// sum of coef * log_S(form) + constant, compared against zero.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionAtom {
    pub terms: Vec<(Rat, LeadingForm)>,
    pub constant: Rat,
    /// true: expression >= 0 (closed side); false: expression < 0.
    pub ge: bool,
}

impl RegionAtom {
    pub fn eval(&self, b: &Binding, s: f64) -> bool {
        let mut v = self.constant.numer().to_string().parse::<f64>().unwrap()
            / self.constant.denom().to_string().parse::<f64>().unwrap();
        for (c, form) in &self.terms {
            let cf = c.numer().to_string().parse::<f64>().unwrap()
                / c.denom().to_string().parse::<f64>().unwrap();
            v += cf * form.eval_f64(b).ln() / s.ln();
        }
        if self.ge {
            v >= -1e-12
        } else {
            v < -1e-12
        }
    }
}

impl fmt::Display for RegionAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lhs = String::new();
        for (c, form) in &self.terms {
            if !lhs.is_empty() {
                lhs += " + ";
            }
            if c.is_one() {
                lhs += &format!("log_S({form})");
            } else {
                lhs += &format!("{c}*log_S({form})");
            }
        }
        if lhs.is_empty() {
            lhs = "0".into();
        }
        let op = if self.ge { ">=" } else { "<" };
        write!(f, "{lhs} {op} {}", -&self.constant)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundCase {
    pub region: Vec<RegionAtom>,
    pub pos: BTreeSet<Monomial>,
    pub neg: BTreeSet<Monomial>,
}

impl BoundCase {
    fn value_string(&self) -> String {
        let mut s = String::new();
        for m in &self.pos {
            if !s.is_empty() {
                s += " + ";
            }
            s += &m.to_string();
        }
        if s.is_empty() {
            s = "0".into();
        }
        for m in &self.neg {
            s += &format!(" - {m}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AsymBound {
    pub cases: Vec<BoundCase>,
}

impl AsymBound {
    /// The zero bound, valid everywhere.
    pub fn zero() -> AsymBound {
        AsymBound {
            cases: vec![BoundCase { region: vec![], pos: BTreeSet::new(), neg: BTreeSet::new() }],
        }
    }

    pub fn single(
        region: Vec<RegionAtom>,
        pos: impl IntoIterator<Item = Monomial>,
        neg: impl IntoIterator<Item = Monomial>,
    ) -> AsymBound {
        AsymBound {
            cases: vec![BoundCase {
                region,
                pos: pos.into_iter().collect(),
                neg: neg.into_iter().collect(),
            }],
        }
    }

    /// Drops monomials dominated componentwise by another monomial of the
    /// same sign within each case.
    pub fn simplify(&self) -> AsymBound {
        let reduce = |set: &BTreeSet<Monomial>| -> BTreeSet<Monomial> {
            set.iter()
                .filter(|m| {
                    !set.iter().any(|o| *o != **m && m.dominated_by(o) && !o.dominated_by(m))
                })
                .cloned()
                .collect()
        };
        let mut cases: Vec<BoundCase> = self
            .cases
            .iter()
            .map(|c| {
                let mut region = c.region.clone();
                region.sort();
                region.dedup();
                BoundCase { region, pos: reduce(&c.pos), neg: reduce(&c.neg) }
            })
            .collect();
        let mut seen = Vec::new();
        cases.retain(|c| {
            if seen.contains(c) {
                false
            } else {
                seen.push(c.clone());
                true
            }
        });
        AsymBound { cases }
    }

    /// Pairwise case combination: regions are conjoined (empty conjunctions
    /// are pruned), values added as monomial-set unions.
    pub fn add(&self, other: &AsymBound) -> AsymBound {
        let mut cases = Vec::new();
        for a in &self.cases {
            for b in &other.cases {
                let mut region = a.region.clone();
                for atom in &b.region {
                    if !region.contains(atom) {
                        region.push(atom.clone());
                    }
                }
                if !region_feasible(&region) {
                    continue;
                }
                cases.push(BoundCase {
                    region,
                    pos: a.pos.union(&b.pos).cloned().collect(),
                    neg: a.neg.union(&b.neg).cloned().collect(),
                });
            }
        }
        AsymBound { cases }.simplify()
    }

    pub fn scale_by(&self, m: &Monomial) -> AsymBound {
        AsymBound {
            cases: self
                .cases
                .iter()
                .map(|c| BoundCase {
                    region: c.region.clone(),
                    pos: c.pos.iter().map(|x| x.mul(m)).collect(),
                    neg: c.neg.iter().map(|x| x.mul(m)).collect(),
                })
                .collect(),
        }
    }

    /// Subtracts tag counts (each a sum of monomials) in every case.
    pub fn subtract_tags(&self, forms: &[LeadingForm]) -> AsymBound {
        let mut extra: BTreeSet<Monomial> = BTreeSet::new();
        for f in forms {
            extra.extend(Monomial::from_form(f, rat_int(1)));
        }
        AsymBound {
            cases: self
                .cases
                .iter()
                .map(|c| BoundCase {
                    region: c.region.clone(),
                    pos: c.pos.clone(),
                    neg: c.neg.union(&extra).cloned().collect(),
                })
                .collect(),
        }
        .simplify()
    }

    /// Evaluates the bound at a binding; cases are scanned in canonical order
    /// and the first whose region holds (closed on the >= side) wins.
    pub fn eval_at(&self, b: &Binding, s: f64) -> f64 {
        let mut ordered = self.cases.clone();
        ordered.sort_by_key(|c| c.region.iter().map(|a| a.to_string()).collect::<Vec<_>>());
        for c in &ordered {
            if c.region.iter().all(|a| a.eval(b, s)) {
                let p: f64 = c.pos.iter().map(|m| m.eval_f64(b, s)).sum();
                let n: f64 = c.neg.iter().map(|m| m.eval_f64(b, s)).sum();
                return p - n;
            }
        }
        0.0
    }

    pub fn render(&self) -> String {
        let mut lines = Vec::new();
        for c in &self.cases {
            let mut line = format!("Omega( {} )", c.value_string());
            if !c.region.is_empty() {
                let conds: Vec<String> = c.region.iter().map(|a| a.to_string()).collect();
                line += &format!(" when {}", conds.join(" and "));
            }
            lines.push(line);
        }
        lines.sort();
        lines.join("\n")
    }
}

/// Feasibility of a region over nonnegative log-term variables; the closed
/// relaxation is used, so only certainly-empty regions are pruned.
fn region_feasible(region: &[RegionAtom]) -> bool {
    let mut forms: Vec<&LeadingForm> = Vec::new();
    for a in region {
        for (_, f) in &a.terms {
            if !forms.contains(&&*f) {
                forms.push(f);
            }
        }
    }
    let n = forms.len();
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for a in region {
        // expr >= 0  ->  -expr <= constant ; expr < 0 -> expr <= -constant.
        let mut row = vec![rat_int(0); n];
        for (c, f) in &a.terms {
            let i = forms.iter().position(|x| *x == f).unwrap();
            row[i] = if a.ge { -c.clone() } else { c.clone() };
        }
        rows.push(row);
        rhs.push(if a.ge { a.constant.clone() } else { -&a.constant });
    }
    for i in 0..n {
        let mut row = vec![rat_int(0); n];
        row[i] = rat_int(-1);
        rows.push(row);
        rhs.push(rat_int(0));
    }
    let obj = vec![rat_int(0); n];
    !matches!(maximize(&rows, &rhs, &obj), SimplexResult::Infeasible)
}
