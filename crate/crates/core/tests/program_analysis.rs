//! End-to-end analysis of the bundled example programs: parse, classify,
//! enumerate paths, solve the exponent LPs, and check the resulting bounds
//! at concrete parameter bindings.

use std::collections::BTreeSet;

use iobound::dfgraph::{classify_edges, instantiate, parse_program, DataFlowGraph};
use iobound::paramlp::build_lp;
use iobound::pathfind::{
    analyze_graph, analyze_program, base_det, enumerate_circuits, AnalyzeOpts, CliqueEntry,
    GraphAnalysis,
};
use iobound::polyset::binding;

fn load(name: &str) -> DataFlowGraph {
    let path = format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    classify_edges(&parse_program(&text).unwrap()).unwrap()
}

fn chosen<'a>(ga: &'a GraphAnalysis, v: &str) -> &'a CliqueEntry {
    let va = ga.vertices.iter().find(|x| x.vertex == v).unwrap();
    let ord = va.chosen.expect("no clique entry selected");
    va.clique.iter().find(|e| e.order == ord).unwrap()
}

#[test]
fn stencil_circuits_and_bound() {
    let g = load("jacobi1d.prog");
    let all: BTreeSet<String> = g.spec.statements.iter().map(|s| s.name.clone()).collect();

    let circuits = enumerate_circuits(&g, "S2", &all, 4).unwrap();
    assert_eq!(circuits.len(), 3);
    let dirs: BTreeSet<String> = circuits
        .iter()
        .map(|p| {
            let b = p.relation.as_translation().unwrap();
            b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        })
        .collect();
    let want: BTreeSet<String> =
        ["1,1", "1,0", "1,-1"].iter().map(|s| s.to_string()).collect();
    assert_eq!(dirs, want);

    let ga = analyze_graph(&g, &AnalyzeOpts::default()).unwrap();
    let b = binding(&[("T", 100), ("N", 100)]);
    let s1 = &ga.per_vertex.iter().find(|(n, _)| n == "S1").unwrap().1;
    assert_eq!(s1.eval_at(&b, 10.0), 0.0);

    // The two skewed circuit directions win the determinant tiebreak.
    let e = chosen(&ga, "S2");
    assert_eq!(e.ks.len(), 2);
    let det = base_det(&e.ks, 2);
    assert_eq!(det.to_string(), "-2");

    // Their LP: two unit rows plus one composite size bound per variable.
    let build = build_lp(&e.d, &e.ks).unwrap();
    let lp = &build.lp;
    assert_eq!(lp.terms.len(), 1);
    assert_eq!(lp.constraints.len(), 4);
    assert_eq!(lp.constraints[0].vars, vec![1]);
    assert_eq!(lp.constraints[1].vars, vec![0]);
    assert!(lp.constraints[0].rhs.is_constant());
    assert_eq!(lp.constraints[2].vars, vec![0]);
    assert_eq!(lp.constraints[3].vars, vec![1]);
    assert!(!lp.constraints[2].rhs.is_constant());
    assert_eq!(lp.constraints[2].rhs, lp.constraints[3].rhs);

    // N*T/S - (N+T) when the cache is small, scaled form otherwise.
    assert_eq!(ga.total.eval_at(&b, 10.0), 800.0);
    assert_eq!(ga.total.eval_at(&b, 40000.0), 9800.0);
}

#[test]
fn scaled_matmul_lp_and_bound() {
    let g = load("matmul_scaled.prog");
    let ga = analyze_graph(&g, &AnalyzeOpts::default()).unwrap();

    let e = chosen(&ga, "S1");
    assert_eq!(e.ks.len(), 3);
    assert!(e.ks.iter().all(|k| k.dim() == 1));

    let build = build_lp(&e.d, &e.ks).unwrap();
    let lp = &build.lp;
    assert_eq!(lp.terms.len(), 1);
    assert_eq!(lp.constraints.len(), 9);
    let units: BTreeSet<Vec<usize>> =
        lp.constraints[..3].iter().map(|c| c.vars.clone()).collect();
    let want: BTreeSet<Vec<usize>> =
        [vec![0, 1], vec![0, 2], vec![1, 2]].into_iter().collect();
    assert_eq!(units, want);
    assert!(lp.constraints[..3].iter().all(|c| c.rhs.is_constant()));
    let single = lp.constraints[3].rhs.clone();
    for c in &lp.constraints[3..6] {
        assert_eq!(c.vars.len(), 1);
        assert_eq!(c.rhs, single);
    }
    let double = single.add(&single);
    for c in &lp.constraints[6..9] {
        assert_eq!(c.vars.len(), 2);
        assert_eq!(c.rhs, double);
    }

    // N^3/sqrt(S) - N^2 at N=100, S=16.
    let b = binding(&[("N", 100)]);
    assert_eq!(ga.total.eval_at(&b, 16.0), 240_000.0);
}

#[test]
fn in_place_sweep_bound() {
    let g = load("seidel.prog");
    let ga = analyze_graph(&g, &AnalyzeOpts::default()).unwrap();

    let e = chosen(&ga, "S4");
    assert_eq!(e.ks.len(), 3);
    assert_eq!(base_det(&e.ks, 3).to_string(), "1");

    // N^2*T/sqrt(S) - N^2 - N*T at N=100, T=50, S=16.
    let b = binding(&[("T", 50), ("N", 100)]);
    assert_eq!(ga.total.eval_at(&b, 16.0), 110_000.0);
}

#[test]
fn grouped_repeat_scales_the_sum() {
    let g = load("composite.prog");
    let pa = analyze_program(&g, &AnalyzeOpts::default()).unwrap();
    let names: Vec<&str> = pa.groups.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["matmul", "seidel"]);

    // W * (N^3/sqrt(S) + N^2*T/sqrt(S) - N^2 - N*T) at W=3, N=100, T=50, S=16.
    let b = binding(&[("W", 3), ("N", 100), ("T", 50)]);
    assert_eq!(pa.total.eval_at(&b, 16.0), 1_080_000.0);
}

#[test]
fn pairwise_force_bound_and_instance() {
    let g = load("nbody.prog");
    let ga = analyze_graph(&g, &AnalyzeOpts::default()).unwrap();

    let e = chosen(&ga, "S");
    assert_eq!(e.ks.len(), 2);

    // N^2/S - N at N=100, S=10.
    let b = binding(&[("N", 100)]);
    assert_eq!(ga.total.eval_at(&b, 10.0), 900.0);

    let small = binding(&[("N", 4)]);
    let cdag = instantiate(&g.spec, &small, 100_000).unwrap();
    let compute = cdag.names.iter().filter(|n| n.starts_with("S(")).count();
    assert_eq!(compute, 12);
}

#[test]
fn accumulating_kernel_bound() {
    let g = load("matvec.prog");
    let ga = analyze_graph(&g, &AnalyzeOpts::default()).unwrap();

    // N^3/S - N^2 at N=100, S=10.
    let b = binding(&[("N", 100)]);
    assert_eq!(ga.total.eval_at(&b, 10.0), 90_000.0);
}

#[test]
fn classification_and_analysis_are_deterministic() {
    // Re-parsing and re-classifying the same text yields identical edge
    // classes, and two independent analyses render identical bytes.
    let path = format!("{}/../../programs/jacobi1d.prog", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    let g1 = classify_edges(&parse_program(&text).unwrap()).unwrap();
    let g2 = classify_edges(&parse_program(&text).unwrap()).unwrap();
    let classes = |g: &DataFlowGraph| -> Vec<String> {
        g.edges.iter().map(|e| format!("{} {:?}", e.def.name, e.class)).collect()
    };
    assert_eq!(classes(&g1), classes(&g2));

    let a1 = analyze_graph(&g1, &AnalyzeOpts::default()).unwrap();
    let a2 = analyze_graph(&g2, &AnalyzeOpts::default()).unwrap();
    assert_eq!(a1.total.render(), a2.total.render());
}
