//! Per-vertex path analysis over a classified data-flow graph.
//!
//! For each vertex we enumerate injective circuits and broadcast paths,
//! accumulate compatible projection subspaces into cliques, and once the
//! directions span the vertex's domain, build and solve the exponent LP to
//! obtain an asymptotic I/O lower bound. Vertex bounds sum into the graph
//! bound.

use crate::asymbound::{AsymBound, Monomial};
use crate::dfgraph::{DataFlowGraph, EdgeClass};
use crate::paramlp::{base_of, solve};
use crate::polyset::linalg::{determinant, Matrix, Rat, Subspace};
use crate::polyset::{binding, kernel_basis, AffRelation, IntSet, PResult, PolyError};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    Circuit,
    Broadcast,
}

#[derive(Clone, Debug)]
pub struct Path {
    /// Indices into the graph's edge list, in traversal order.
    pub edges: Vec<usize>,
    pub relation: AffRelation,
    pub kind: PathKind,
}

impl Path {
    pub fn vertices(&self, g: &DataFlowGraph) -> BTreeSet<String> {
        let mut vs = BTreeSet::new();
        for &e in &self.edges {
            vs.insert(g.edges[e].def.src.clone());
            vs.insert(g.edges[e].def.dst.clone());
        }
        vs
    }

    pub fn edge_names(&self, g: &DataFlowGraph) -> Vec<String> {
        self.edges.iter().map(|&e| g.edges[e].def.name.clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct CliqueEntry {
    pub k: Subspace,
    pub ks: Vec<Subspace>,
    pub d: IntSet,
    pub t: BTreeSet<String>,
    pub order: usize,
}

#[derive(Clone, Debug)]
pub struct VertexAnalysis {
    pub vertex: String,
    pub dim: usize,
    pub domain: IntSet,
    pub subspaces: Vec<Subspace>,
    pub clique: Vec<CliqueEntry>,
    pub chosen: Option<usize>,
    pub complexity: Option<AsymBound>,
}

#[derive(Clone, Copy, Debug)]
pub struct AnalyzeOpts {
    pub max_circuit: usize,
    pub trace: bool,
}

impl Default for AnalyzeOpts {
    fn default() -> Self {
        AnalyzeOpts { max_circuit: 4, trace: false }
    }
}

fn compose_path(g: &DataFlowGraph, edges: &[usize]) -> PResult<AffRelation> {
    let mut rel = g.edges[edges[0]].def.rel.clone();
    for &e in &edges[1..] {
        rel = g.edges[e].def.rel.compose_after(&rel)?;
    }
    Ok(rel)
}

fn injective_edges(g: &DataFlowGraph, within: &BTreeSet<String>) -> Vec<usize> {
    (0..g.edges.len())
        .filter(|&i| {
            g.edges[i].class == EdgeClass::Injective
                && within.contains(&g.edges[i].def.src)
                && within.contains(&g.edges[i].def.dst)
        })
        .collect()
}

/// All simple circuits through `v` over injective edges, shortest first,
/// edges tried in declaration order within each length.
pub fn enumerate_circuits(
    g: &DataFlowGraph,
    v: &str,
    within: &BTreeSet<String>,
    max_len: usize,
) -> PResult<Vec<Path>> {
    let fi = injective_edges(g, within);
    let mut out = Vec::new();
    // Depth-first over edge declaration order yields length-lexicographic
    // order after the sort below; the sort is stable so declaration order is
    // kept within a length class.
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(
        g: &DataFlowGraph,
        fi: &[usize],
        v: &str,
        at: &str,
        seen: &mut BTreeSet<String>,
        stack: &mut Vec<usize>,
        max_len: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        for &e in fi {
            if g.edges[e].def.src != at {
                continue;
            }
            let dst = &g.edges[e].def.dst;
            if dst == v {
                let mut c = stack.clone();
                c.push(e);
                out.push(c);
                continue;
            }
            if stack.len() + 1 >= max_len || seen.contains(dst) {
                continue;
            }
            seen.insert(dst.clone());
            stack.push(e);
            dfs(g, fi, v, dst, seen, stack, max_len, out);
            stack.pop();
            seen.remove(dst);
        }
    }
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let mut seen = BTreeSet::new();
    seen.insert(v.to_string());
    dfs(g, &fi, v, v, &mut seen, &mut stack, max_len, &mut raw);
    raw.sort_by_key(|c| c.len());
    for edges in raw {
        let relation = compose_path(g, &edges)?;
        out.push(Path { edges, relation, kind: PathKind::Circuit });
    }
    Ok(out)
}

/// Cycle-free paths ending at `v` whose first edge is from the named
/// broadcast family and whose remaining edges are injective.
pub fn enumerate_broadcast_paths(
    g: &DataFlowGraph,
    v: &str,
    family: EdgeClass,
    within: &BTreeSet<String>,
    max_len: usize,
) -> PResult<Vec<Path>> {
    let fi = injective_edges(g, within);
    let firsts: Vec<usize> = (0..g.edges.len())
        .filter(|&i| g.edges[i].class == family && within.contains(&g.edges[i].def.dst))
        .collect();
    // Build injective suffixes backwards from v.
    let mut raw: Vec<Vec<usize>> = Vec::new();
    for &first in &firsts {
        // suffix stack holds injective edges ending at v, in order.
        fn back(
            g: &DataFlowGraph,
            fi: &[usize],
            first: usize,
            need: &str,
            seen: &mut BTreeSet<String>,
            suffix: &mut Vec<usize>,
            max_len: usize,
            raw: &mut Vec<Vec<usize>>,
        ) {
            if g.edges[first].def.dst == need && !seen.contains(&g.edges[first].def.src) {
                let mut p = vec![first];
                p.extend(suffix.iter().rev());
                raw.push(p);
            }
            if suffix.len() + 2 > max_len {
                return;
            }
            for &e in fi {
                if g.edges[e].def.dst != need || seen.contains(&g.edges[e].def.src) {
                    continue;
                }
                seen.insert(g.edges[e].def.src.clone());
                suffix.push(e);
                back(g, fi, first, &g.edges[e].def.src, seen, suffix, max_len, raw);
                suffix.pop();
                seen.remove(&g.edges[e].def.src);
            }
        }
        let mut seen = BTreeSet::new();
        seen.insert(v.to_string());
        let mut suffix = Vec::new();
        back(g, &fi, first, v, &mut seen, &mut suffix, max_len, &mut raw);
    }
    raw.sort_by_key(|p| p.len());
    let mut out = Vec::new();
    for edges in raw {
        let relation = compose_path(g, &edges)?;
        out.push(Path { edges, relation, kind: PathKind::Broadcast });
    }
    Ok(out)
}

/// Adds the direction subspace of one path to the vertex's cliques.
/// Returns true once some entry spans the vertex domain (the caller keeps
/// enumerating regardless; selection happens in `best`).
pub fn try_add(
    va: &mut VertexAnalysis,
    kprime: &Subspace,
    path_image: &IntSet,
    path_vertices: &BTreeSet<String>,
) -> PResult<bool> {
    if kprime.dim() == 0 || va.subspaces.contains(kprime) {
        return Ok(false);
    }
    va.subspaces.push(kprime.clone());
    let mut spanned = false;
    let mut additions: Vec<CliqueEntry> = Vec::new();
    let order_base = va.clique.len();
    // The empty entry first, then existing entries.
    for slot in std::iter::once(None).chain((0..va.clique.len()).map(Some)) {
        let (k, ks, d, t) = match slot {
            None => (Subspace::zero(kprime.ambient), vec![], None, BTreeSet::new()),
            Some(i) => {
                let e = &va.clique[i];
                (e.k.clone(), e.ks.clone(), Some(e.d.clone()), e.t.clone())
            }
        };
        let ksum = k.sum(kprime);
        if ksum.dim() <= k.dim() {
            continue;
        }
        let mut ks2 = ks.clone();
        ks2.push(kprime.clone());
        if base_of(&ks2, kprime.ambient).is_none() {
            continue;
        }
        let d2 = match &d {
            None => path_image.clone(),
            Some(dd) => path_image.intersect(dd)?,
        };
        let d2dim = match d2.dim_of() {
            Ok(x) => x,
            Err(PolyError::Empty) => continue,
            Err(e) => return Err(e),
        };
        if d2dim != va.dim {
            continue;
        }
        let mut t2 = t.clone();
        t2.extend(path_vertices.iter().cloned());
        if ksum.dim() >= va.dim {
            spanned = true;
        }
        additions.push(CliqueEntry {
            k: ksum,
            ks: ks2,
            d: d2,
            t: t2,
            order: order_base + additions.len(),
        });
    }
    va.clique.extend(additions);
    Ok(spanned)
}

/// Reference binding for comparing piecewise bounds inside the sort key:
/// every parameter at 100, the cache at sqrt of that.
fn reference_value(b: &AsymBound, params: &[String]) -> f64 {
    let bd = binding(&params.iter().map(|p| (p.as_str(), 100i64)).collect::<Vec<_>>());
    b.eval_at(&bd, 10.0)
}

pub fn base_det(ks: &[Subspace], ambient: usize) -> Rat {
    match base_of(ks, ambient) {
        Some(b) => {
            let m: Matrix = (0..ambient)
                .map(|r| (0..ambient).map(|c| b[c][r].clone()).collect())
                .collect();
            determinant(&m)
        }
        None => Rat::from_integer(0.into()),
    }
}

/// Selects the best clique entry and fixes the vertex complexity. Entries
/// compare by (dim D, dim k, -sum dim k_i, bound value at the reference
/// binding, -|T|), with the base determinant magnitude and then creation
/// order as tiebreaks. A vertex with no spanning entry gets the zero bound.
pub fn best(va: &mut VertexAnalysis, params: &[String]) -> PResult<AsymBound> {
    let mut scored: Vec<(Vec<f64>, usize, AsymBound)> = Vec::new();
    for e in &va.clique {
        if e.k.dim() < va.dim {
            continue;
        }
        // Skewed bases can blow up the number of distinct size terms past
        // what the piecewise solver handles; such entries are never better
        // than an axis-aligned competitor, so drop them.
        let bound = match solve(&e.d, &e.ks) {
            Ok(b) => b,
            Err(PolyError::Other(msg)) if msg.contains("arity") => continue,
            Err(e) => return Err(e),
        };
        let ddim = e.d.dim_of().unwrap_or(0) as f64;
        let kd = e.k.dim() as f64;
        let sumk: usize = e.ks.iter().map(|k| k.dim()).sum();
        let val = reference_value(&bound, params);
        let det = base_det(&e.ks, e.k.ambient);
        let detf = det.numer().to_string().parse::<f64>().unwrap().abs()
            / det.denom().to_string().parse::<f64>().unwrap();
        let key = vec![ddim, kd, -(sumk as f64), val, -(e.t.len() as f64), detf];
        scored.push((key, e.order, bound));
    }
    let pick = scored.into_iter().max_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1))
    });
    let bound = match pick {
        Some((_, order, b)) => {
            va.chosen = Some(order);
            b
        }
        None => AsymBound::zero(),
    };
    va.complexity = Some(bound.clone());
    Ok(bound)
}

#[derive(Clone, Debug)]
pub struct GraphAnalysis {
    pub per_vertex: Vec<(String, AsymBound)>,
    pub vertices: Vec<VertexAnalysis>,
    pub total: AsymBound,
    pub trace: Vec<String>,
}

/// Runs the per-vertex analysis over the given statement subset (circuits and
/// injective suffixes stay inside the subset; broadcast first edges may enter
/// from outside, mirroring tagged sub-CDAG inputs).
pub fn analyze_vertices(
    g: &DataFlowGraph,
    subset: &BTreeSet<String>,
    opts: &AnalyzeOpts,
) -> PResult<GraphAnalysis> {
    let params = g.spec.params.names.clone();
    let mut per_vertex = Vec::new();
    let mut vertices = Vec::new();
    let mut trace = Vec::new();
    let mut total = AsymBound::zero();
    for stmt in &g.spec.statements {
        if !subset.contains(&stmt.name) || stmt.role.is_input() {
            continue;
        }
        let vdim = match stmt.domain.dim_of() {
            Ok(d) => d,
            Err(PolyError::Empty) => continue,
            Err(e) => return Err(e),
        };
        let mut va = VertexAnalysis {
            vertex: stmt.name.clone(),
            dim: vdim,
            domain: stmt.domain.clone(),
            subspaces: Vec::new(),
            clique: Vec::new(),
            chosen: None,
            complexity: None,
        };
        for p in enumerate_circuits(g, &stmt.name, subset, opts.max_circuit)? {
            let names = p.edge_names(g).join(",");
            let Some(b) = p.relation.as_translation() else {
                if opts.trace {
                    trace.push(format!("{}: circuit ({names}) rejected: not a translation", stmt.name));
                }
                continue;
            };
            if p.relation.image().dim_of().unwrap_or(0) < vdim {
                if opts.trace {
                    trace.push(format!("{}: circuit ({names}) rejected: low-dimensional image", stmt.name));
                }
                continue;
            }
            let k = Subspace::from_vectors(stmt.domain.ndims, &[b.clone()]);
            let added = try_add(&mut va, &k, &p.relation.image(), &p.vertices(g))?;
            if opts.trace {
                let bb: Vec<String> = b.iter().map(|x| x.to_string()).collect();
                trace.push(format!(
                    "{}: circuit ({names}) direction ({}) {}",
                    stmt.name,
                    bb.join(","),
                    if added { "spans" } else { "accepted" }
                ));
            }
        }
        for family in [EdgeClass::Broadcast1, EdgeClass::BroadcastK] {
            for p in enumerate_broadcast_paths(g, &stmt.name, family, subset, opts.max_circuit)? {
                let names = p.edge_names(g).join(",");
                let Some(f) = p.relation.inverse().as_affine_map() else {
                    if opts.trace {
                        trace.push(format!(
                            "{}: path ({names}) rejected: inverse is not an affine map",
                            stmt.name
                        ));
                    }
                    continue;
                };
                if p.relation.image().dim_of().unwrap_or(0) < vdim {
                    if opts.trace {
                        trace.push(format!("{}: path ({names}) rejected: low-dimensional image", stmt.name));
                    }
                    continue;
                }
                let k = kernel_basis(&f);
                let added = try_add(&mut va, &k, &p.relation.image(), &p.vertices(g))?;
                if opts.trace {
                    trace.push(format!(
                        "{}: broadcast path ({names}) kernel dim {} {}",
                        stmt.name,
                        k.dim(),
                        if added { "spans" } else { "considered" }
                    ));
                }
            }
        }
        let bound = best(&mut va, &params)?;
        if opts.trace {
            trace.push(format!("{}: bound {}", stmt.name, bound.render().replace('\n', " | ")));
        }
        total = total.add(&bound);
        per_vertex.push((stmt.name.clone(), bound));
        vertices.push(va);
    }
    Ok(GraphAnalysis { per_vertex, vertices, total: total.simplify(), trace })
}

pub fn analyze_graph(g: &DataFlowGraph, opts: &AnalyzeOpts) -> PResult<GraphAnalysis> {
    let all: BTreeSet<String> = g.spec.statements.iter().map(|s| s.name.clone()).collect();
    analyze_vertices(g, &all, opts)
}

#[derive(Clone, Debug)]
pub struct ProgramAnalysis {
    pub groups: Vec<(String, GraphAnalysis)>,
    pub total: AsymBound,
}

/// Analyzes each declared group separately, scales a group's bound by the
/// parameter of every repeat block containing it, and sums the results.
pub fn analyze_program(g: &DataFlowGraph, opts: &AnalyzeOpts) -> PResult<ProgramAnalysis> {
    let mut groups = Vec::new();
    let mut total = AsymBound::zero();
    for (name, members) in crate::dfgraph::analysis_groups(&g.spec) {
        let ga = analyze_vertices(g, &members, opts)?;
        let mut scaled = ga.total.clone();
        for (param, body) in &g.spec.repeats {
            if body.iter().any(|b| b == &name) {
                scaled = scaled.scale_by(&Monomial::param(param, 1));
            }
        }
        total = total.add(&scaled);
        groups.push((name, ga));
    }
    Ok(ProgramAnalysis { groups, total: total.simplify() })
}
