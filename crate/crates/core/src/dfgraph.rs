//! Program specifications and their data-flow graphs.
//!
//! Parses the program file format (parameters, statement domains, edges with
//! affine relations, optional decomposition hints), classifies edges into the
//! families the path analysis consumes, and instantiates concrete CDAGs at a
//! parameter binding.

use crate::pebblelab::Cdag;
use crate::polyset::parse::{align_relation_params, align_set_params, parse_relation, parse_set};
use crate::polyset::{AffRelation, Binding, IntSet, PResult, ParamSpace, PolyError};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Input,
    Compute,
    Output,
    ComputeOutput,
}

impl Role {
    pub fn is_input(self) -> bool {
        self == Role::Input
    }

    pub fn is_output(self) -> bool {
        matches!(self, Role::Output | Role::ComputeOutput)
    }
}

#[derive(Clone, Debug)]
pub struct Statement {
    pub name: String,
    pub domain: IntSet,
    pub role: Role,
}

#[derive(Clone, Debug)]
pub struct EdgeDef {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub rel: AffRelation,
}

#[derive(Clone, Debug)]
pub struct ProgramSpec {
    pub params: ParamSpace,
    pub statements: Vec<Statement>,
    pub edges: Vec<EdgeDef>,
    /// Decomposition hints: named statement groups.
    pub groups: Vec<(String, Vec<String>)>,
    /// `repeat W { g1; g2 }`: the named groups' bounds sum, scaled by W.
    pub repeats: Vec<(String, Vec<String>)>,
}

impl ProgramSpec {
    pub fn statement(&self, name: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    /// Invertible affine map; member of F_I.
    Injective,
    /// dim(domain) = dim(image) - 1; member of F_B.
    Broadcast1,
    /// dim(domain) < dim(image) - 1; member of F_BB.
    BroadcastK,
    /// Image not representative of the target domain; ignored by analysis.
    Skipped,
    /// None of the above (non-invertible, no broadcast deficit).
    Other,
}

#[derive(Clone, Debug)]
pub struct ClassifiedEdge {
    pub def: EdgeDef,
    pub class: EdgeClass,
}

#[derive(Clone, Debug)]
pub struct DataFlowGraph {
    pub spec: ProgramSpec,
    pub edges: Vec<ClassifiedEdge>,
}

fn perr(line: usize, msg: &str) -> PolyError {
    PolyError::Parse(format!("line {line}: {msg}"))
}

/// Splits the text into top-level `;`-terminated chunks, tracking brace
/// depth so disjunct separators inside `{ }` are left alone. `#` comments
/// run to end of line.
fn chunks(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    let mut line = 1usize;
    let mut start = 1usize;
    let mut comment = false;
    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
            comment = false;
        }
        if comment {
            continue;
        }
        match ch {
            '#' => comment = true,
            '{' => {
                depth += 1;
                cur.push(ch);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            ';' if depth == 0 => {
                if !cur.trim().is_empty() {
                    out.push((start, cur.trim().to_string()));
                }
                cur.clear();
                start = line;
            }
            _ => {
                if cur.trim().is_empty() && !ch.is_whitespace() {
                    start = line;
                }
                cur.push(ch);
            }
        }
    }
    if !cur.trim().is_empty() {
        out.push((start, cur.trim().to_string()));
    }
    out
}

/// The body between the first `{` and its matching `}`.
fn braced(chunk: &str, line: usize) -> PResult<(&str, &str)> {
    let open = chunk.find('{').ok_or_else(|| perr(line, "expected '{'"))?;
    let mut depth = 0usize;
    for (i, ch) in chunk.char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok((&chunk[..open], &chunk[open + 1..i]));
                }
            }
            _ => {}
        }
    }
    Err(perr(line, "unbalanced braces"))
}

fn ident_list(body: &str) -> Vec<String> {
    body.split(|c| c == ',' || c == ';')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_program(text: &str) -> PResult<ProgramSpec> {
    let mut params = ParamSpace { names: Vec::new() };
    let mut statements: Vec<Statement> = Vec::new();
    let mut edges: Vec<EdgeDef> = Vec::new();
    let mut groups = Vec::new();
    let mut repeats = Vec::new();
    for (line, chunk) in chunks(text) {
        let kw = chunk.split_whitespace().next().unwrap_or("");
        let rest = chunk[kw.len()..].trim();
        match kw {
            "params" => {
                params.names.extend(ident_list(rest));
            }
            "input" | "stmt" => {
                let (head, body) = braced(&chunk, line)?;
                let name = head
                    .split_whitespace()
                    .nth(1)
                    .ok_or_else(|| perr(line, "statement needs a name"))?
                    .to_string();
                let set = parse_set(body.trim()).map_err(|e| {
                    perr(line, &format!("in domain of {name}: {e}"))
                })?;
                if set.tag != name {
                    return Err(perr(
                        line,
                        &format!("domain tuple is named {}, statement is {name}", set.tag),
                    ));
                }
                let domain = align_set_params(&set, &params)?;
                if statements.iter().any(|s| s.name == name) {
                    return Err(perr(line, &format!("duplicate statement {name}")));
                }
                let role = if kw == "input" { Role::Input } else { Role::Compute };
                statements.push(Statement { name, domain, role });
            }
            "output" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let target = match parts.as_slice() {
                    [_, "from", stmt] => *stmt,
                    [stmt] => *stmt,
                    _ => return Err(perr(line, "expected `output <name> from <stmt>`")),
                };
                let s = statements
                    .iter_mut()
                    .find(|s| s.name == target)
                    .ok_or_else(|| perr(line, &format!("unknown statement {target}")))?;
                s.role = match s.role {
                    Role::Input => {
                        return Err(perr(line, &format!("{target} is an input")));
                    }
                    Role::Compute => Role::ComputeOutput,
                    r => r,
                };
            }
            "edge" => {
                let colon = rest.find(':').ok_or_else(|| perr(line, "expected ':'"))?;
                let name = rest[..colon].trim().to_string();
                if name.is_empty() {
                    return Err(perr(line, "edge needs a name"));
                }
                let rel = parse_relation(rest[colon + 1..].trim())
                    .map_err(|e| perr(line, &format!("in edge {name}: {e}")))?;
                let rel = align_relation_params(&rel, &params)?;
                if rel.pieces.len() > 8 {
                    return Err(perr(line, &format!("edge {name}: too many disjunctions")));
                }
                let src = rel.in_tag.clone();
                let dst = rel.out_tag.clone();
                for end in [&src, &dst] {
                    if !statements.iter().any(|s| s.name == *end) {
                        return Err(perr(line, &format!("unknown statement {end}")));
                    }
                }
                // Disjunctive relations become one edge per disjunct.
                if rel.pieces.len() > 1 {
                    for (i, piece) in rel.pieces.iter().enumerate() {
                        edges.push(EdgeDef {
                            name: format!("{name}.{}", i + 1),
                            src: src.clone(),
                            dst: dst.clone(),
                            rel: AffRelation { pieces: vec![piece.clone()], ..rel.clone() },
                        });
                    }
                } else {
                    edges.push(EdgeDef { name, src, dst, rel });
                }
            }
            "group" => {
                let (head, body) = braced(&chunk, line)?;
                let name = head
                    .split_whitespace()
                    .nth(1)
                    .ok_or_else(|| perr(line, "group needs a name"))?
                    .to_string();
                let members = ident_list(body);
                for m in &members {
                    if !statements.iter().any(|s| s.name == *m) {
                        return Err(perr(line, &format!("unknown statement {m}")));
                    }
                }
                groups.push((name, members));
            }
            "repeat" => {
                let (head, body) = braced(&chunk, line)?;
                let factor = head
                    .split_whitespace()
                    .nth(1)
                    .ok_or_else(|| perr(line, "repeat needs a parameter"))?
                    .to_string();
                if !params.names.contains(&factor) {
                    return Err(perr(line, &format!("unknown parameter {factor}")));
                }
                let names = ident_list(body);
                for g in &names {
                    if !groups.iter().any(|(n, _)| n == g) {
                        return Err(perr(line, &format!("unknown group {g}")));
                    }
                }
                repeats.push((factor, names));
            }
            other => return Err(perr(line, &format!("unknown directive `{other}`"))),
        }
    }
    if statements.is_empty() {
        return Err(PolyError::Parse("no statements declared".into()));
    }
    Ok(ProgramSpec { params, statements, edges, groups, repeats })
}

/// Classifies one relation against its target statement domain.
pub fn classify_relation(rel: &AffRelation, dst_domain: &IntSet) -> PResult<EdgeClass> {
    let image = rel.image();
    let img_dim = match image.dim_of() {
        Ok(d) => d,
        Err(PolyError::Empty) => return Ok(EdgeClass::Skipped),
        Err(e) => return Err(e),
    };
    let dst_dim = dst_domain.dim_of()?;
    if img_dim < dst_dim {
        return Ok(EdgeClass::Skipped);
    }
    if let Some(f) = rel.as_affine_map() {
        if f.is_invertible() {
            return Ok(EdgeClass::Injective);
        }
    }
    let dom_dim = rel.domain().dim_of()?;
    if dom_dim + 1 == img_dim {
        return Ok(EdgeClass::Broadcast1);
    }
    if dom_dim + 1 < img_dim {
        return Ok(EdgeClass::BroadcastK);
    }
    Ok(EdgeClass::Other)
}

pub fn classify_edges(spec: &ProgramSpec) -> PResult<DataFlowGraph> {
    let mut edges = Vec::new();
    for def in &spec.edges {
        let dst = spec
            .statement(&def.dst)
            .ok_or_else(|| PolyError::Other(format!("unknown statement {}", def.dst)))?;
        let class = classify_relation(&def.rel, &dst.domain)?;
        edges.push(ClassifiedEdge { def: def.clone(), class });
    }
    Ok(DataFlowGraph { spec: spec.clone(), edges })
}

fn point_name(stmt: &str, pt: &[i64]) -> String {
    let coords: Vec<String> = pt.iter().map(|x| x.to_string()).collect();
    format!("{stmt}({})", coords.join(","))
}

/// Concrete CDAG at a full parameter binding: one vertex per integer point
/// of each statement domain, one edge per related point pair.
pub fn instantiate(spec: &ProgramSpec, b: &Binding, cap: usize) -> PResult<Cdag> {
    for p in &spec.params.names {
        if !b.contains_key(p) {
            return Err(PolyError::MissingParam(p.clone()));
        }
    }
    let mut g = Cdag::new();
    let mut total = 0usize;
    for s in &spec.statements {
        let pts = s.domain.enumerate_at(b, cap.saturating_sub(total))?;
        total += pts.len();
        if total > cap {
            return Err(PolyError::Other(format!("vertex cap {cap} exceeded")));
        }
        for pt in &pts {
            g.add_vertex(&point_name(&s.name, pt), s.role.is_input(), s.role.is_output());
        }
    }
    for e in &spec.edges {
        // Enumerate the joint (in, out) tuples of the relation directly.
        let joint = IntSet {
            params: e.rel.params.clone(),
            tag: e.name.clone(),
            ndims: e.rel.in_dim + e.rel.out_dim,
            pieces: e.rel.pieces.clone(),
        };
        for pair in joint.enumerate_at(b, cap * cap)? {
            let (pi, po) = pair.split_at(e.rel.in_dim);
            let src = g
                .vertex(&point_name(&e.src, pi))
                .ok_or_else(|| PolyError::Other(format!("edge {} leaves {}", e.name, e.src)))?;
            let dst = g
                .vertex(&point_name(&e.dst, po))
                .ok_or_else(|| PolyError::Other(format!("edge {} leaves {}", e.name, e.dst)))?;
            g.add_edge(src, dst);
        }
    }
    if !g.is_acyclic() {
        return Err(PolyError::Other("instantiated graph has a cycle".into()));
    }
    Ok(g)
}

/// The statement subsets to analyze: one per declared group, plus a catch-all
/// of ungrouped statements; with no hints, a single whole-program group.
pub fn analysis_groups(spec: &ProgramSpec) -> Vec<(String, BTreeSet<String>)> {
    if spec.groups.is_empty() {
        return vec![(
            "program".to_string(),
            spec.statements.iter().map(|s| s.name.clone()).collect(),
        )];
    }
    let mut out: Vec<(String, BTreeSet<String>)> = spec
        .groups
        .iter()
        .map(|(n, ms)| (n.clone(), ms.iter().cloned().collect()))
        .collect();
    let grouped: BTreeSet<&String> = spec.groups.iter().flat_map(|(_, m)| m).collect();
    let rest: BTreeSet<String> = spec
        .statements
        .iter()
        .filter(|s| !grouped.contains(&s.name) && !s.role.is_input())
        .map(|s| s.name.clone())
        .collect();
    if !rest.is_empty() {
        out.push(("rest".to_string(), rest));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_unknown_statement_in_edge() {
        let text = "params N;\nstmt A { [N] -> { A[i] : 0<=i<N } };\n\
                    edge e1 : [N] -> { A[i] -> B[i] : 0<=i<N };";
        assert!(parse_program(text).is_err());
    }

    #[test]
    fn empty_program_is_an_error() {
        assert!(parse_program("params N;").is_err());
    }
}
