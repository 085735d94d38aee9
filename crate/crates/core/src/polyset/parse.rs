//! Text notation for sets and relations.
//!
//! `[N,T] -> { S2[t,i] -> S2[t+1,i+1] : 1<=t<T-1 and 1<=i<N-2 ; ... }`
//!
//! Disjuncts are separated by `;`. Conditions are `and`-separated chains of
//! affine comparisons with <=, <, >=, > or =. Tuple slots may be fresh
//! variable names or affine expressions over already-bound names.

use super::linalg::{rat_int, Rat};
use super::{ConstrOp, Constraint, IntSet, LinExpr, PResult, ParamSpace, PolyError, Polyhedron};
use num::Zero;
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(String),
}

fn tokenize(text: &str) -> PResult<Vec<Tok>> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            toks.push(Tok::Int(s.parse().map_err(|_| PolyError::Parse(format!("bad integer {s}")))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            toks.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
            if two == "->" || two == "<=" || two == ">=" {
                toks.push(Tok::Sym(two));
                i += 2;
            } else if "[]{}(),:;<>=+-*".contains(c) {
                toks.push(Tok::Sym(c.to_string()));
                i += 1;
            } else {
                return Err(PolyError::Parse(format!("unexpected character '{c}'")));
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

#[derive(Clone, Copy)]
enum VarRef {
    Dim(usize),
    Param(usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> PResult<Tok> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| PolyError::Parse("unexpected end".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat_sym(&mut self, s: &str) -> PResult<()> {
        match self.next()? {
            Tok::Sym(x) if x == s => Ok(()),
            t => Err(PolyError::Parse(format!("expected '{s}', found {t:?}"))),
        }
    }

    fn try_sym(&mut self, s: &str) -> bool {
        if self.peek() == Some(&Tok::Sym(s.to_string())) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            t => Err(PolyError::Parse(format!("expected identifier, found {t:?}"))),
        }
    }

    fn param_header(&mut self) -> PResult<Vec<String>> {
        let mut names = Vec::new();
        if self.peek() == Some(&Tok::Sym("[".into())) {
            self.eat_sym("[")?;
            if !self.try_sym("]") {
                loop {
                    names.push(self.ident()?);
                    if !self.try_sym(",") {
                        break;
                    }
                }
                self.eat_sym("]")?;
            }
            self.eat_sym("->")?;
        }
        Ok(names)
    }

    /// Affine expression over bound names; ndims fixes the vector width.
    fn expr(&mut self, vars: &HashMap<String, VarRef>, ndims: usize, nparams: usize) -> PResult<LinExpr> {
        let mut e = LinExpr::zero(ndims, nparams);
        let mut sign = rat_int(1);
        let mut first = true;
        loop {
            if self.try_sym("-") {
                sign = -sign;
            } else if self.try_sym("+") {
            } else if !first {
                break;
            }
            // term: INT [* IDENT] | IDENT
            match self.next()? {
                Tok::Int(n) => {
                    let coef = &sign * rat_int(n);
                    if self.try_sym("*") {
                        let name = self.ident()?;
                        add_var(&mut e, vars, &name, &coef)?;
                    } else {
                        e.constant += coef;
                    }
                }
                Tok::Ident(name) => {
                    add_var(&mut e, vars, &name, &sign)?;
                }
                t => return Err(PolyError::Parse(format!("expected term, found {t:?}"))),
            }
            sign = rat_int(1);
            first = false;
            match self.peek() {
                Some(Tok::Sym(s)) if s == "+" || s == "-" => {}
                _ => break,
            }
        }
        Ok(e)
    }

    /// cond := atom (and atom)*, atom := expr (op expr)+
    fn condition(
        &mut self,
        vars: &HashMap<String, VarRef>,
        ndims: usize,
        nparams: usize,
        cs: &mut Vec<Constraint>,
    ) -> PResult<()> {
        loop {
            let mut lhs = self.expr(vars, ndims, nparams)?;
            let mut any = false;
            loop {
                let op = match self.peek() {
                    Some(Tok::Sym(s)) if ["<=", "<", ">=", ">", "="].contains(&s.as_str()) => {
                        s.clone()
                    }
                    _ => break,
                };
                self.pos += 1;
                let rhs = self.expr(vars, ndims, nparams)?;
                // lhs OP rhs as (expr >= 0) or (expr == 0).
                let diff = rhs.plus(&lhs.scaled(&rat_int(-1)));
                let c = match op.as_str() {
                    "<=" => Constraint { expr: diff, op: ConstrOp::Ge },
                    "<" => {
                        let mut d = diff;
                        d.constant -= rat_int(1);
                        Constraint { expr: d, op: ConstrOp::Ge }
                    }
                    ">=" => Constraint { expr: diff.scaled(&rat_int(-1)), op: ConstrOp::Ge },
                    ">" => {
                        let mut d = diff.scaled(&rat_int(-1));
                        d.constant -= rat_int(1);
                        Constraint { expr: d, op: ConstrOp::Ge }
                    }
                    _ => Constraint { expr: diff, op: ConstrOp::Eq },
                };
                cs.push(c);
                lhs = rhs;
                any = true;
            }
            if !any {
                return Err(PolyError::Parse("comparison expected".into()));
            }
            match self.peek() {
                Some(Tok::Ident(s)) if s == "and" => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        Ok(())
    }

    /// Parses `Tag[slot,...]`; returns (tag, raw slot token ranges).
    fn tuple(&mut self) -> PResult<(String, Vec<(usize, usize)>)> {
        let tag = self.ident()?;
        self.eat_sym("[")?;
        let mut slots = Vec::new();
        if !self.try_sym("]") {
            loop {
                let start = self.pos;
                let mut depth = 0;
                loop {
                    match self.peek() {
                        Some(Tok::Sym(s)) if s == "(" || s == "[" => depth += 1,
                        Some(Tok::Sym(s)) if s == ")" && depth > 0 => depth -= 1,
                        Some(Tok::Sym(s)) if (s == "," || s == "]") && depth == 0 => break,
                        None => return Err(PolyError::Parse("unterminated tuple".into())),
                        _ => {}
                    }
                    self.pos += 1;
                }
                slots.push((start, self.pos));
                if !self.try_sym(",") {
                    self.eat_sym("]")?;
                    break;
                }
            }
        }
        Ok((tag, slots))
    }
}

fn add_var(e: &mut LinExpr, vars: &HashMap<String, VarRef>, name: &str, coef: &Rat) -> PResult<()> {
    match vars.get(name) {
        Some(VarRef::Dim(i)) => e.dims[*i] += coef,
        Some(VarRef::Param(i)) => e.params[*i] += coef,
        None => return Err(PolyError::Parse(format!("unknown variable {name}"))),
    }
    Ok(())
}

/// Binds tuple slots: fresh identifiers become dimension variables, anything
/// else becomes an anonymous dimension pinned by an equality constraint.
fn bind_slots(
    p: &mut Parser,
    slots: &[(usize, usize)],
    offset: usize,
    vars: &mut HashMap<String, VarRef>,
    pending_eq: &mut Vec<(usize, (usize, usize))>,
) {
    for (si, &(start, end)) in slots.iter().enumerate() {
        let dim = offset + si;
        if end - start == 1 {
            if let Tok::Ident(name) = &p.toks[start] {
                if !vars.contains_key(name) {
                    vars.insert(name.clone(), VarRef::Dim(dim));
                    continue;
                }
            }
        }
        pending_eq.push((dim, (start, end)));
    }
}

fn finish_equalities(
    p: &mut Parser,
    pending: &[(usize, (usize, usize))],
    vars: &HashMap<String, VarRef>,
    ndims: usize,
    nparams: usize,
    cs: &mut Vec<Constraint>,
) -> PResult<()> {
    for &(dim, (start, end)) in pending {
        let save = p.pos;
        p.pos = start;
        let e = p.expr(vars, ndims, nparams)?;
        if p.pos != end {
            return Err(PolyError::Parse("malformed tuple slot".into()));
        }
        p.pos = save;
        let mut diff = e;
        diff.dims[dim] -= rat_int(1);
        cs.push(Constraint { expr: diff.scaled(&rat_int(-1)), op: ConstrOp::Eq });
    }
    Ok(())
}

pub fn parse_set(text: &str) -> PResult<IntSet> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let params = ParamSpace { names: p.param_header()? };
    let nparams = params.names.len();
    p.eat_sym("{")?;
    let mut pieces: Vec<Polyhedron> = Vec::new();
    let mut shape: Option<(String, usize)> = None;
    loop {
        let (tag, slots) = p.tuple()?;
        let ndims = slots.len();
        match &shape {
            None => shape = Some((tag.clone(), ndims)),
            Some((t, d)) => {
                if *t != tag || *d != ndims {
                    return Err(PolyError::Parse("disjuncts disagree on the tuple shape".into()));
                }
            }
        }
        let mut vars: HashMap<String, VarRef> = params
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), VarRef::Param(i)))
            .collect();
        let mut pending = Vec::new();
        bind_slots(&mut p, &slots, 0, &mut vars, &mut pending);
        let mut cs = Vec::new();
        finish_equalities(&mut p, &pending, &vars, ndims, nparams, &mut cs)?;
        if p.try_sym(":") {
            p.condition(&vars, ndims, nparams, &mut cs)?;
        }
        pieces.push(Polyhedron { ndims, nparams, cs });
        if p.try_sym(";") {
            continue;
        }
        p.eat_sym("}")?;
        break;
    }
    let (tag, ndims) = shape.unwrap();
    if p.peek().is_some() {
        return Err(PolyError::Parse("trailing input after set".into()));
    }
    Ok(IntSet { params, tag, ndims, pieces })
}

pub fn parse_relation(text: &str) -> PResult<super::AffRelation> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let params = ParamSpace { names: p.param_header()? };
    let nparams = params.names.len();
    p.eat_sym("{")?;
    let mut pieces: Vec<Polyhedron> = Vec::new();
    let mut shape: Option<(String, usize, String, usize)> = None;
    loop {
        let (in_tag, in_slots) = p.tuple()?;
        p.eat_sym("->")?;
        let (out_tag, out_slots) = p.tuple()?;
        let (ind, outd) = (in_slots.len(), out_slots.len());
        match &shape {
            None => shape = Some((in_tag.clone(), ind, out_tag.clone(), outd)),
            Some(s) => {
                if *s != (in_tag.clone(), ind, out_tag.clone(), outd) {
                    return Err(PolyError::Parse("disjuncts disagree on the tuple shapes".into()));
                }
            }
        }
        let ndims = ind + outd;
        let mut vars: HashMap<String, VarRef> = params
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), VarRef::Param(i)))
            .collect();
        let mut pending = Vec::new();
        bind_slots(&mut p, &in_slots, 0, &mut vars, &mut pending);
        bind_slots(&mut p, &out_slots, ind, &mut vars, &mut pending);
        let mut cs = Vec::new();
        finish_equalities(&mut p, &pending, &vars, ndims, nparams, &mut cs)?;
        if p.try_sym(":") {
            p.condition(&vars, ndims, nparams, &mut cs)?;
        }
        pieces.push(Polyhedron { ndims, nparams, cs });
        if p.try_sym(";") {
            continue;
        }
        p.eat_sym("}")?;
        break;
    }
    let (in_tag, in_dim, out_tag, out_dim) = shape.unwrap();
    if p.peek().is_some() {
        return Err(PolyError::Parse("trailing input after relation".into()));
    }
    Ok(super::AffRelation { params, in_tag, out_tag, in_dim, out_dim, pieces })
}

/// Re-expresses the set over a (super)space of parameters.
pub fn align_set_params(s: &IntSet, target: &ParamSpace) -> PResult<IntSet> {
    let map: Vec<usize> = s
        .params
        .names
        .iter()
        .map(|n| target.index(n).ok_or_else(|| PolyError::Parse(format!("unknown parameter {n}"))))
        .collect::<PResult<_>>()?;
    let remap = |p: &Polyhedron| -> Polyhedron {
        let cs = p
            .cs
            .iter()
            .map(|c| {
                let mut params = vec![rat_int(0); target.names.len()];
                for (i, co) in c.expr.params.iter().enumerate() {
                    if !co.is_zero() {
                        params[map[i]] = co.clone();
                    }
                }
                Constraint {
                    expr: LinExpr {
                        dims: c.expr.dims.clone(),
                        params,
                        constant: c.expr.constant.clone(),
                    },
                    op: c.op,
                }
            })
            .collect();
        Polyhedron { ndims: p.ndims, nparams: target.names.len(), cs }
    };
    Ok(IntSet {
        params: target.clone(),
        tag: s.tag.clone(),
        ndims: s.ndims,
        pieces: s.pieces.iter().map(remap).collect(),
    })
}

pub fn align_relation_params(
    r: &super::AffRelation,
    target: &ParamSpace,
) -> PResult<super::AffRelation> {
    let map: Vec<usize> = r
        .params
        .names
        .iter()
        .map(|n| target.index(n).ok_or_else(|| PolyError::Parse(format!("unknown parameter {n}"))))
        .collect::<PResult<_>>()?;
    let remap = |p: &Polyhedron| -> Polyhedron {
        let cs = p
            .cs
            .iter()
            .map(|c| {
                let mut params = vec![rat_int(0); target.names.len()];
                for (i, co) in c.expr.params.iter().enumerate() {
                    if !co.is_zero() {
                        params[map[i]] = co.clone();
                    }
                }
                Constraint {
                    expr: LinExpr {
                        dims: c.expr.dims.clone(),
                        params,
                        constant: c.expr.constant.clone(),
                    },
                    op: c.op,
                }
            })
            .collect();
        Polyhedron { ndims: p.ndims, nparams: target.names.len(), cs }
    };
    Ok(super::AffRelation {
        params: target.clone(),
        in_tag: r.in_tag.clone(),
        out_tag: r.out_tag.clone(),
        in_dim: r.in_dim,
        out_dim: r.out_dim,
        pieces: r.pieces.iter().map(remap).collect(),
    })
}
