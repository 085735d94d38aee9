//! End-to-end exponent-LP checks on two worked domains: a 2D stencil domain
//! with diagonal projection directions, and a 3D cube with axis-aligned
//! projections. The parametric solutions are cross-checked against a plain
//! rational simplex at many bindings.

use iobound::asymbound::{Base, Monomial};
use iobound::paramlp::{
    assemble_bound, build_lp, select_case, solve_plp, verify_numeric, Aff,
};
use iobound::polyset::linalg::{rat_int, Rat, Subspace};
use iobound::polyset::binding;
use iobound::polyset::parse::parse_set;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn span(vecs: &[&[i64]]) -> Subspace {
    let ambient = vecs[0].len();
    let vs: Vec<Vec<Rat>> =
        vecs.iter().map(|v| v.iter().map(|&x| rat_int(x)).collect()).collect();
    Subspace::from_vectors(ambient, &vs)
}

#[test]
fn stencil_lp_constraints_and_cases() {
    let d = parse_set("[T,N] -> { S2[t,i] : 2<=t<T and 2<=i<N-1 }").unwrap();
    let ks = [span(&[&[1, 1]]), span(&[&[1, -1]])];
    let build = build_lp(&d, &ks).unwrap();

    // Two unit constraints x2<=1, x1<=1 and two degenerate ones
    // x1<=log_S(N+T), x2<=log_S(N+T).
    assert_eq!(build.lp.constraints.len(), 4);
    assert_eq!(build.lp.terms.len(), 1);
    assert_eq!(build.lp.terms[0].0.to_string(), "T+N");
    let unit: Vec<&[usize]> =
        build.lp.constraints[..2].iter().map(|c| c.vars.as_slice()).collect();
    assert_eq!(unit, vec![&[1][..], &[0][..]]);
    for c in &build.lp.constraints[..2] {
        assert_eq!(c.rhs, Aff::constant(rat_int(1), 1));
    }
    for c in &build.lp.constraints[2..] {
        assert_eq!(c.vars.len(), 1);
        assert_eq!(c.rhs.c0, rat_int(0));
        assert_eq!(c.rhs.coefs, vec![rat_int(1)]);
    }

    let sol = solve_plp(&build.lp).unwrap();
    assert_eq!(sol.cases.len(), 2);
    // t >= 1: both variables saturate at 1; t < 1: both equal t.
    let high = select_case(&sol, &[rat_int(5)]).unwrap();
    assert_eq!(high.theta.eval(&[rat_int(5)]), rat_int(2));
    let t7 = Rat::new(7.into(), 10.into());
    let low = select_case(&sol, &[t7.clone()]).unwrap();
    assert_eq!(low.theta.eval(&[t7]), Rat::new(7.into(), 5.into()));

    let bound = assemble_bound(&build, &sol).unwrap();
    // Large case evaluates to N*T/S - (N+T): at N=T=100, S=10 that is 800.
    let v = bound.eval_at(&binding(&[("N", 100), ("T", 100)]), 10.0);
    assert!((v - 800.0).abs() < 1e-6, "got {v}");
    // Small-cache case: S = (N+T)^2 makes log_S(N+T) = 1/2, so U = N+T and
    // the bound is N*T*S/(N+T)^2 - (N+T) = 100*100*40000/40000 - 200.
    let v = bound.eval_at(&binding(&[("N", 100), ("T", 100)]), 40000.0);
    assert!((v - 9800.0).abs() < 1e-6, "got {v}");
}

#[test]
fn cube_lp_axis_projections() {
    let d = parse_set("[N] -> { S[i,j,k] : 0<=i<N and 0<=j<N and 0<=k<N }").unwrap();
    let ks = [span(&[&[0, 0, 1]]), span(&[&[0, 1, 0]]), span(&[&[1, 0, 0], &[0, 1, 0]])];
    let build = build_lp(&d, &ks).unwrap();
    // Unit rows: x1+x2<=1, x1+x3<=1, x3<=1 (base vectors are canonical).
    let unit: Vec<Vec<usize>> =
        build.lp.constraints[..3].iter().map(|c| c.vars.clone()).collect();
    assert_eq!(unit, vec![vec![0, 1], vec![0, 2], vec![2]]);

    let sol = solve_plp(&build.lp).unwrap();
    // For log_S(N) >= 1 the optimum is 2 at (0,1,1).
    let c = select_case(&sol, &[rat_int(3)]).unwrap();
    assert_eq!(c.theta.eval(&[rat_int(3)]), rat_int(2));
    let x: Vec<Rat> = c.assign.iter().map(|a| a.eval(&[rat_int(3)])).collect();
    assert_eq!(x, vec![rat_int(0), rat_int(1), rat_int(1)]);

    // Bound's dominant term is N^3/S.
    let bound = assemble_bound(&build, &sol).unwrap();
    let mut expect = Monomial::param("N", 3);
    expect.set(Base::Cache, rat_int(-1));
    let big = bound
        .cases
        .iter()
        .find(|case| case.pos.contains(&expect))
        .expect("case with N^3/S term");
    assert!(big.pos.len() == 1);
}

#[test]
fn parametric_solution_matches_simplex_on_grid() {
    let d = parse_set("[T,N] -> { S2[t,i] : 2<=t<T and 2<=i<N-1 }").unwrap();
    let ks = [span(&[&[1, 1]]), span(&[&[1, -1]])];
    let build = build_lp(&d, &ks).unwrap();
    let sol = solve_plp(&build.lp).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let t = Rat::new(rng.gen_range(0..400).into(), 100.into());
        assert!(verify_numeric(&build.lp, &sol, &[t.clone()]), "mismatch at t={t}");
    }
}
