//! Command-line front door: analysis runs, pebble-game oracle runs,
//! concrete instantiation, and a seeded self-check suite. One command per
//! process; reports are byte-deterministic for a given input and flag set.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dfgraph::{classify_edges, instantiate, parse_program, DataFlowGraph};
use crate::pathfind::{analyze_program, AnalyzeOpts};
use crate::pebblelab::game::{
    hmin_bruteforce, min_io, partition_from_calculation, tag, verify_partition,
    PartitionKind, SearchLimits, TagSet, Variant,
};
use crate::pebblelab::Cdag;
use crate::polyset::{Binding, PResult, PolyError};

#[derive(Parser)]
#[command(name = "iobound", version, about = "Parametric I/O lower bounds for affine loop programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Derive the symbolic I/O lower bound of a program file.
    Analyze {
        /// Program file to analyze.
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Find an optimal calculation for a concrete CDAG file.
    Pebble {
        /// CDAG file (lines `v <name> [input] [output]` and `e <src> <dst>`).
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build and verify a partition from an optimal calculation.
    Partition {
        /// CDAG file.
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Expand a program file into a concrete CDAG at a full binding.
    Instantiate {
        /// Program file.
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the internal cross-validation suites.
    Check {
        /// Seed for the random-graph suites.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantFlag {
    Std,
    Nr,
}

#[derive(Args)]
struct Common {
    /// Parameter binding, repeatable: --set N=5.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Fast-memory capacity for pebble runs.
    #[arg(long)]
    s: Option<usize>,
    /// Pebble-game variant.
    #[arg(long, value_enum, default_value_t = VariantFlag::Std)]
    variant: VariantFlag,
    /// Disallow the sliding form of the compute rule.
    #[arg(long)]
    no_slide: bool,
    /// Longest circuit or path considered per vertex.
    #[arg(long, default_value_t = 4)]
    max_circuit: usize,
    /// Print the per-vertex search trace.
    #[arg(long)]
    trace: bool,
    /// Mirror the report to this path as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Largest CDAG accepted by the exact oracle / instantiation.
    #[arg(long, default_value_t = 14)]
    vertex_cap: usize,
    /// Search-state budget before the oracle falls back to a greedy bound.
    #[arg(long, default_value_t = 20_000_000)]
    budget: u64,
}

impl Common {
    fn binding(&self) -> Result<Binding, String> {
        let mut b = Binding::new();
        for pair in &self.set {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| format!("--set expects NAME=VALUE, got {pair}"))?;
            let v: i64 = value.parse().map_err(|_| format!("--set {pair}: bad integer"))?;
            if v <= 0 {
                return Err(format!("--set {pair}: bindings must be positive"));
            }
            b.insert(name.to_string(), v);
        }
        Ok(b)
    }

    fn variant(&self) -> Variant {
        match self.variant {
            VariantFlag::Std => Variant::Std,
            VariantFlag::Nr => Variant::Nr,
        }
    }

    fn limits(&self) -> SearchLimits {
        SearchLimits { vertex_cap: self.vertex_cap, budget: self.budget }
    }
}

/// Machine-readable mirror of a command's human output.
#[derive(Serialize, Default)]
pub struct Report {
    pub command: String,
    pub input: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pebble: Option<PebbleReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partition: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckLine>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<String>,
}

#[derive(Serialize)]
pub struct GroupReport {
    pub name: String,
    pub vertices: Vec<VertexReport>,
    pub bound: Vec<String>,
}

#[derive(Serialize)]
pub struct VertexReport {
    pub vertex: String,
    pub dim: usize,
    pub candidate_sets: usize,
    pub bound: Vec<String>,
}

#[derive(Serialize)]
pub struct PebbleReport {
    pub s: usize,
    pub variant: String,
    pub q: usize,
    pub optimal: bool,
    pub witness: String,
}

#[derive(Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn bound_lines(b: &crate::asymbound::AsymBound) -> Vec<String> {
    b.render().lines().map(str::to_string).collect()
}

fn exit_code_for(e: &PolyError) -> i32 {
    match e {
        PolyError::Other(m) if m.contains("cap") || m.contains("budget") => 3,
        _ => 2,
    }
}

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (result, common) = match &cli.command {
        Cmd::Analyze { path, common } => (cmd_analyze(path, common), common),
        Cmd::Pebble { path, common } => (cmd_pebble(path, common), common),
        Cmd::Partition { path, common } => (cmd_partition(path, common), common),
        Cmd::Instantiate { path, common } => (cmd_instantiate(path, common), common),
        Cmd::Check { seed, common } => (cmd_check(*seed, common), common),
    };
    match result {
        Ok((text, report, code)) => {
            print!("{text}");
            if let Some(p) = &common.json {
                let body = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = fs::write(p, body + "\n") {
                    eprintln!("error: cannot write {}: {e}", p.display());
                    return 2;
                }
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn read_input(path: &PathBuf) -> PResult<String> {
    fs::read_to_string(path)
        .map_err(|e| PolyError::Other(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &PathBuf) -> PResult<DataFlowGraph> {
    let spec = parse_program(&read_input(path)?)?;
    classify_edges(&spec)
}

type CmdResult = PResult<(String, Report, i32)>;

fn cmd_analyze(path: &PathBuf, common: &Common) -> CmdResult {
    let g = load_program(path)?;
    let opts = AnalyzeOpts { max_circuit: common.max_circuit, trace: common.trace };
    let analysis = analyze_program(&g, &opts)?;
    let mut report = Report {
        command: "analyze".into(),
        input: path.display().to_string(),
        total: Some(bound_lines(&analysis.total)),
        ..Report::default()
    };
    if g.edges.is_empty() {
        report.warnings.push("program has no data-flow edges; the bound is zero".into());
    }
    let mut text = String::new();
    for (name, ga) in &analysis.groups {
        writeln!(text, "group {name}").unwrap();
        let mut vertices = Vec::new();
        for va in &ga.vertices {
            let bound = va.complexity.clone().unwrap_or_else(crate::asymbound::AsymBound::zero);
            writeln!(text, "  {} (dim {}, {} candidate sets)", va.vertex, va.dim, va.clique.len())
                .unwrap();
            for line in bound_lines(&bound) {
                writeln!(text, "    {line}").unwrap();
            }
            vertices.push(VertexReport {
                vertex: va.vertex.clone(),
                dim: va.dim,
                candidate_sets: va.clique.len(),
                bound: bound_lines(&bound),
            });
        }
        for line in bound_lines(&ga.total) {
            writeln!(text, "  group bound: {line}").unwrap();
        }
        report.trace.extend(ga.trace.iter().cloned());
        report.groups.push(GroupReport {
            name: name.clone(),
            vertices,
            bound: bound_lines(&ga.total),
        });
    }
    writeln!(text, "total:").unwrap();
    for line in bound_lines(&analysis.total) {
        writeln!(text, "  {line}").unwrap();
    }
    for w in &report.warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    if common.trace {
        for t in &report.trace {
            writeln!(text, "trace: {t}").unwrap();
        }
    }
    Ok((text, report, 0))
}

fn require_s(common: &Common) -> PResult<usize> {
    common.s.ok_or_else(|| PolyError::Other("this command needs --s".into()))
}

fn cmd_pebble(path: &PathBuf, common: &Common) -> CmdResult {
    let g = Cdag::parse(&read_input(path)?)?;
    let s = require_s(common)?;
    let r = min_io(&g, s, common.variant(), !common.no_slide, &common.limits())?;
    let mut text = String::new();
    writeln!(text, "q = {} ({})", r.q, if r.optimal { "optimal" } else { "upper bound only" })
        .unwrap();
    writeln!(text, "witness: {}", r.witness.render(&g)).unwrap();
    let mut report = Report {
        command: "pebble".into(),
        input: path.display().to_string(),
        pebble: Some(PebbleReport {
            s,
            variant: format!("{:?}", common.variant()),
            q: r.q,
            optimal: r.optimal,
            witness: r.witness.render(&g),
        }),
        ..Report::default()
    };
    if !r.optimal {
        report.warnings.push("search budget exhausted; greedy schedule reported".into());
        writeln!(text, "warning: search budget exhausted; greedy schedule reported").unwrap();
    }
    Ok((text, report, 0))
}

fn cmd_partition(path: &PathBuf, common: &Common) -> CmdResult {
    let g = Cdag::parse(&read_input(path)?)?;
    let s = require_s(common)?;
    let r = min_io(&g, s, Variant::Nr, !common.no_slide, &common.limits())?;
    let part = partition_from_calculation(&g, s, &r.witness, !common.no_slide)?;
    let violations = verify_partition(&g, &part, 2 * s, PartitionKind::Nr)?;
    let mut text = String::new();
    writeln!(text, "q = {}, h = {}", r.q, part.h()).unwrap();
    let mut subsets = Vec::new();
    for (i, sub) in part.subsets.iter().enumerate() {
        let names: Vec<String> = sub.iter().map(|&v| g.names[v].clone()).collect();
        writeln!(text, "subset {i}: {}", names.join(" ")).unwrap();
        subsets.push(names);
    }
    let code = if violations.is_empty() {
        writeln!(text, "partition verifies as a {}-partition", 2 * s).unwrap();
        0
    } else {
        for v in &violations {
            writeln!(text, "violation: {v}").unwrap();
        }
        4
    };
    let report = Report {
        command: "partition".into(),
        input: path.display().to_string(),
        partition: subsets,
        warnings: violations,
        ..Report::default()
    };
    Ok((text, report, code))
}

fn cmd_instantiate(path: &PathBuf, common: &Common) -> CmdResult {
    let g = load_program(path)?;
    let b = common.binding().map_err(PolyError::Other)?;
    // Instantiation serves inspection, not the exact oracle, so the default
    // cap is far larger than the oracle's.
    let cap = if common.vertex_cap == 14 { 100_000 } else { common.vertex_cap };
    let cdag = instantiate(&g.spec, &b, cap)?;
    let mut text = String::new();
    for v in 0..cdag.len() {
        let mut line = format!("v {}", cdag.names[v]);
        if cdag.inputs.contains(&v) {
            line += " input";
        }
        if cdag.outputs.contains(&v) {
            line += " output";
        }
        writeln!(text, "{line}").unwrap();
    }
    for v in 0..cdag.len() {
        for &w in &cdag.succs[v] {
            writeln!(text, "e {} {}", cdag.names[v], cdag.names[w]).unwrap();
        }
    }
    let report = Report {
        command: "instantiate".into(),
        input: path.display().to_string(),
        total: Some(vec![format!("{} vertices", cdag.len())]),
        ..Report::default()
    };
    Ok((text, report, 0))
}

/// A random connected-ish DAG with forward edges only; sources are inputs
/// and sinks are outputs, so every graph is standard-valid.
fn random_dag(rng: &mut ChaCha8Rng, n: usize) -> Cdag {
    let mut g = Cdag::new();
    for v in 0..n {
        g.add_vertex(&format!("n{v}"), false, false);
    }
    for v in 0..n {
        for w in v + 1..n {
            if rng.gen_bool(0.4) {
                g.add_edge(v, w);
            }
        }
    }
    for v in 0..n {
        if g.preds[v].is_empty() {
            g.inputs.insert(v);
        }
        if g.succs[v].is_empty() {
            g.outputs.insert(v);
        }
    }
    g
}

struct CheckCtx {
    lines: Vec<CheckLine>,
    failed: bool,
}

impl CheckCtx {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        self.failed |= !pass;
        self.lines.push(CheckLine { name: name.into(), pass, detail });
    }
}

fn check_theorems(rng: &mut ChaCha8Rng, ctx: &mut CheckCtx, graphs: usize) {
    let limits = SearchLimits::default();
    let mut violations = Vec::new();
    let mut tested = 0usize;
    for gi in 0..graphs {
        let n = rng.gen_range(4..=8);
        let g = random_dag(rng, n);
        for s in [2usize, 3] {
            let std = min_io(&g, s, Variant::Std, true, &limits);
            let nr = min_io(&g, s, Variant::Nr, true, &limits);
            let noslide = min_io(&g, s, Variant::Nr, false, &limits);
            let (Ok(std), Ok(nr), Ok(noslide)) = (std, nr, noslide) else {
                continue;
            };
            if !(std.optimal && nr.optimal && noslide.optimal) {
                continue;
            }
            tested += 1;
            if nr.q < std.q {
                violations.push(format!("graph {gi} S={s}: NR optimum below the standard one"));
            }
            if noslide.q < nr.q {
                violations.push(format!("graph {gi} S={s}: forbidding slides lowered the optimum"));
            }
            for (kind, q, label) in
                [(PartitionKind::Hk, std.q, "standard"), (PartitionKind::Nr, nr.q, "no-recompute")]
            {
                match hmin_bruteforce(&g, 2 * s, kind) {
                    Ok(h) => {
                        if q + s < s * h {
                            violations.push(format!(
                                "graph {gi} S={s} {label}: q={q} below S*(hmin-1)={}",
                                s * (h - 1)
                            ));
                        }
                    }
                    Err(_) => continue,
                }
            }
            match partition_from_calculation(&g, s, &nr.witness, true) {
                Ok(part) => match verify_partition(&g, &part, 2 * s, PartitionKind::Nr) {
                    Ok(v) if v.is_empty() => {}
                    Ok(v) => violations
                        .push(format!("graph {gi} S={s}: witness partition rejected: {}", v[0])),
                    Err(e) => violations.push(format!("graph {gi} S={s}: verify failed: {e}")),
                },
                Err(e) => {
                    violations.push(format!("graph {gi} S={s}: witness not partitionable: {e}"))
                }
            }
        }
    }
    ctx.record(
        "pebble theorems on random graphs",
        violations.is_empty(),
        if violations.is_empty() {
            format!("{tested} graph/S combinations, no violations")
        } else {
            violations.join("; ")
        },
    );
}

fn check_tagging(rng: &mut ChaCha8Rng, ctx: &mut CheckCtx, graphs: usize) {
    let limits = SearchLimits::default();
    let mut violations = Vec::new();
    let mut tested = 0usize;
    for gi in 0..graphs {
        let n = rng.gen_range(4..=7);
        let mut g = random_dag(rng, n);
        // Leave some sources unlabeled: only sources may be tagged as inputs,
        // and the no-recompute game computes a source with a free R3.
        let sources: Vec<usize> = g.inputs.iter().copied().collect();
        let mut t = TagSet::default();
        for v in sources {
            if g.inputs.len() > 1 && !g.outputs.contains(&v) && rng.gen_bool(0.5) {
                g.inputs.remove(&v);
                t.loads.insert(v);
            }
        }
        for v in 0..n {
            if !g.inputs.contains(&v) && !g.outputs.contains(&v) && rng.gen_bool(0.3) {
                t.stores.insert(v);
            }
        }
        let tagged = tag(&g, &t);
        for s in [2usize, 3] {
            let (Ok(plain), Ok(relabeled)) = (
                min_io(&g, s, Variant::Nr, true, &limits),
                min_io(&tagged, s, Variant::Nr, true, &limits),
            ) else {
                continue;
            };
            if !(plain.optimal && relabeled.optimal) {
                continue;
            }
            tested += 1;
            let slack = t.loads.len() + t.stores.len();
            if relabeled.q > plain.q + slack || plain.q > relabeled.q {
                violations.push(format!(
                    "graph {gi} S={s}: q={} q'={} with {} tags",
                    plain.q, relabeled.q, slack
                ));
            }
        }
    }
    ctx.record(
        "tagging inequalities",
        violations.is_empty(),
        if violations.is_empty() {
            format!("{tested} graph/S combinations, no violations")
        } else {
            violations.join("; ")
        },
    );
}

fn check_analyzer_vs_oracle(ctx: &mut CheckCtx) {
    let result = (|| -> PResult<String> {
        let text = include_str!("../../../programs/jacobi1d.prog");
        let spec = parse_program(text)?;
        let g = classify_edges(&spec)?;
        let analysis = analyze_program(&g, &AnalyzeOpts::default())?;
        let mut b = Binding::new();
        b.insert("T".into(), 3);
        b.insert("N".into(), 5);
        let s = 3usize;
        let cdag = instantiate(&spec, &b, 64)?;
        let limits = SearchLimits { vertex_cap: 24, budget: 50_000_000 };
        let oracle = min_io(&cdag, s, Variant::Nr, true, &limits)?;
        let predicted = analysis.total.eval_at(&b, s as f64);
        if oracle.optimal && predicted > oracle.q as f64 + 1e-9 {
            return Err(PolyError::Other(format!(
                "analyzer predicts {predicted} but the oracle needs only {}",
                oracle.q
            )));
        }
        let compute = cdag.len() - cdag.inputs.len();
        let mut detail = format!(
            "stencil at T=3 N=5 S=3: analyzer {predicted:.1} <= oracle {}{}",
            oracle.q,
            if oracle.optimal { "" } else { " (upper bound)" }
        );
        if compute <= 10 {
            let hmin = hmin_bruteforce(&cdag, 2 * s, PartitionKind::Nr)?;
            if oracle.optimal && oracle.q + s < s * hmin {
                return Err(PolyError::Other(format!(
                    "oracle q={} below S*(hmin-1)={}",
                    oracle.q,
                    s * (hmin - 1)
                )));
            }
            write!(detail, "; S*(hmin-1)={}", s * (hmin - 1)).unwrap();
        }
        Ok(detail)
    })();
    match result {
        Ok(detail) => ctx.record("analyzer vs oracle", true, detail),
        Err(e) => ctx.record("analyzer vs oracle", false, e.to_string()),
    }
}

fn cmd_check(seed: u64, common: &Common) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = CheckCtx { lines: Vec::new(), failed: false };
    check_theorems(&mut rng, &mut ctx, 40);
    check_tagging(&mut rng, &mut ctx, 25);
    check_analyzer_vs_oracle(&mut ctx);
    let mut text = String::new();
    for l in &ctx.lines {
        writeln!(text, "{} {} — {}", if l.pass { "ok  " } else { "FAIL" }, l.name, l.detail)
            .unwrap();
    }
    let code = if ctx.failed { 4 } else { 0 };
    writeln!(text, "{}", if ctx.failed { "check failed" } else { "all checks passed" }).unwrap();
    let report = Report {
        command: "check".into(),
        input: format!("seed {seed}"),
        checks: ctx.lines,
        ..Report::default()
    };
    let _ = common;
    Ok((text, report, code))
}
