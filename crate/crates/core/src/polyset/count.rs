//! Exact point counting and enumeration at concrete parameter bindings, and
//! the leading-form fit of a set's counting function.
//!
//! Counting recurses over the outermost dimension (bounds obtained by integer
//! Fourier-Motzkin), with a closed-form interval at the innermost level.
//! Unions are handled by inclusion-exclusion over the pieces.

use super::{
    ipiece_binding_values, Binding, ConstrOp, IntSet, LeadingForm, PResult, PolyError, Polyhedron,
};
use num::{BigInt, BigRational, One, Signed, Zero};
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
struct IRow {
    coeffs: Vec<i128>,
    k: i128,
    eq: bool,
}

impl IRow {
    fn normalized(mut self) -> IRow {
        let mut g: i128 = self.k.abs();
        for c in &self.coeffs {
            g = gcd(g, c.abs());
        }
        if g > 1 {
            for c in self.coeffs.iter_mut() {
                *c /= g;
            }
            self.k /= g;
        }
        self
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn to_irows(p: &Polyhedron, param_values: &[i64]) -> PResult<Vec<IRow>> {
    let sub = p.substitute_params(param_values);
    let mut rows = Vec::new();
    for c in &sub.cs {
        let n = c.expr.int_normalized();
        let as_i128 = |r: &BigRational| -> PResult<i128> {
            debug_assert!(r.denom().is_one());
            r.numer().to_string().parse::<i128>().map_err(|_| {
                PolyError::Other("constraint coefficient exceeds the supported range".into())
            })
        };
        let coeffs: Vec<i128> = n.dims.iter().map(&as_i128).collect::<PResult<_>>()?;
        rows.push(IRow { coeffs, k: as_i128(&n.constant)?, eq: c.op == ConstrOp::Eq });
    }
    Ok(rows)
}

/// Integer FM elimination of variable `j`; equalities are expanded first.
fn fm_once(rows: &[IRow], j: usize) -> PResult<Vec<IRow>> {
    let mut ineqs: Vec<IRow> = Vec::new();
    for r in rows {
        if r.eq {
            ineqs.push(IRow { eq: false, ..r.clone() });
            ineqs.push(IRow {
                coeffs: r.coeffs.iter().map(|c| -c).collect(),
                k: -r.k,
                eq: false,
            });
        } else {
            ineqs.push(r.clone());
        }
    }
    let mut out = Vec::new();
    let (mut lows, mut ups) = (Vec::new(), Vec::new());
    for r in ineqs {
        match r.coeffs[j].signum() {
            0 => {
                let mut coeffs = r.coeffs.clone();
                coeffs.remove(j);
                out.push(IRow { coeffs, k: r.k, eq: false });
            }
            1 => lows.push(r),
            _ => ups.push(r),
        }
    }
    for lo in &lows {
        for up in &ups {
            let (a, b) = (lo.coeffs[j], -up.coeffs[j]);
            let mut coeffs: Vec<i128> = lo
                .coeffs
                .iter()
                .zip(&up.coeffs)
                .map(|(l, u)| {
                    b.checked_mul(*l)
                        .zip(a.checked_mul(*u))
                        .and_then(|(x, y)| x.checked_add(y))
                        .ok_or(())
                })
                .collect::<Result<_, _>>()
                .map_err(|_| PolyError::Other("overflow in projection".into()))?;
            let k = b * lo.k + a * up.k;
            coeffs.remove(j);
            out.push(IRow { coeffs, k, eq: false }.normalized());
        }
    }
    if out.len() > 20_000 {
        return Err(PolyError::Other("projection explosion".into()));
    }
    Ok(out)
}

/// Bounds for variable 0 after eliminating all the others. Ok(None) means the
/// rational relaxation is already infeasible.
fn var0_bounds(rows: &[IRow], d: usize) -> PResult<Option<(i128, i128)>> {
    let mut cur = rows.to_vec();
    for j in (1..d).rev() {
        cur = fm_once(&cur, j)?;
    }
    let (mut lo, mut hi): (Option<i128>, Option<i128>) = (None, None);
    for r in &cur {
        let (c, k) = (r.coeffs[0], r.k);
        let tighten = |lo: &mut Option<i128>, hi: &mut Option<i128>, c: i128, k: i128| {
            // c*x + k >= 0
            if c > 0 {
                let b = (-k).div_euclid(c) + if (-k).rem_euclid(c) > 0 { 1 } else { 0 };
                *lo = Some(lo.map_or(b, |x| x.max(b)));
            } else if c < 0 {
                let b = k.div_euclid(-c);
                *hi = Some(hi.map_or(b, |x| x.min(b)));
            }
        };
        if c == 0 {
            let bad = if r.eq { k != 0 } else { k < 0 };
            if bad {
                return Ok(None);
            }
            continue;
        }
        tighten(&mut lo, &mut hi, c, k);
        if r.eq {
            tighten(&mut lo, &mut hi, -c, -k);
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) => Ok(Some((l, h))),
        _ => Err(PolyError::Unbounded),
    }
}

fn substitute_var0(rows: &[IRow], v: i128) -> Vec<IRow> {
    rows.iter()
        .map(|r| IRow { coeffs: r.coeffs[1..].to_vec(), k: r.k + r.coeffs[0] * v, eq: r.eq })
        .collect()
}

fn count_rows(rows: &[IRow], d: usize) -> PResult<u128> {
    if d == 0 {
        let ok = rows.iter().all(|r| if r.eq { r.k == 0 } else { r.k >= 0 });
        return Ok(ok as u128);
    }
    let Some((lo, hi)) = var0_bounds(rows, d)? else {
        return Ok(0);
    };
    if lo > hi {
        return Ok(0);
    }
    if d == 1 {
        return Ok((hi - lo + 1) as u128);
    }
    let mut total: u128 = 0;
    for v in lo..=hi {
        total += count_rows(&substitute_var0(rows, v), d - 1)?;
    }
    Ok(total)
}

fn enumerate_rows(
    rows: &[IRow],
    d: usize,
    prefix: &mut Vec<i64>,
    out: &mut BTreeSet<Vec<i64>>,
    cap: usize,
) -> PResult<()> {
    if d == 0 {
        if rows.iter().all(|r| if r.eq { r.k == 0 } else { r.k >= 0 }) {
            out.insert(prefix.clone());
            if out.len() > cap {
                return Err(PolyError::Other("point cap exceeded".into()));
            }
        }
        return Ok(());
    }
    let Some((lo, hi)) = var0_bounds(rows, d)? else {
        return Ok(());
    };
    for v in lo..=hi {
        prefix.push(v as i64);
        enumerate_rows(&substitute_var0(rows, v), d - 1, prefix, out, cap)?;
        prefix.pop();
    }
    Ok(())
}

/// Exact number of integer points under a full parameter binding.
pub fn card_at(s: &IntSet, b: &Binding) -> PResult<u128> {
    let values = ipiece_binding_values(&s.params, b)?;
    let ipieces: Vec<Vec<IRow>> =
        s.pieces.iter().map(|p| to_irows(p, &values)).collect::<PResult<_>>()?;
    // Inclusion-exclusion; intersections that are already empty are pruned
    // together with all of their supersets.
    fn go(ipieces: &[Vec<IRow>], start: usize, conj: &[IRow], sign: i128, d: usize, acc: &mut i128) -> PResult<()> {
        for i in start..ipieces.len() {
            let mut c = conj.to_vec();
            c.extend(ipieces[i].iter().cloned());
            let n = count_rows(&c, d)? as i128;
            if n == 0 {
                continue;
            }
            *acc += sign * n;
            go(ipieces, i + 1, &c, -sign, d, acc)?;
        }
        Ok(())
    }
    let mut acc = 0i128;
    go(&ipieces, 0, &[], 1, s.ndims, &mut acc)?;
    Ok(acc as u128)
}

/// All integer points under a binding, deduplicated across pieces.
pub fn enumerate_at(s: &IntSet, b: &Binding, cap: usize) -> PResult<Vec<Vec<i64>>> {
    let values = ipiece_binding_values(&s.params, b)?;
    let mut out = BTreeSet::new();
    for p in &s.pieces {
        let rows = to_irows(p, &values)?;
        enumerate_rows(&rows, s.ndims, &mut Vec::new(), &mut out, cap)?;
    }
    Ok(out.into_iter().collect())
}

/// Leading homogeneous form of the counting function, found by exact
/// polynomial interpolation on a strided grid. The stride keeps every sample
/// in the same residue class, so the piecewise-periodic parts introduced by
/// skewed bases stay constant and the fit is exact; a held-out sample guards
/// against non-polynomial growth.
pub fn card_leading(s: &IntSet) -> PResult<LeadingForm> {
    const B0: i64 = 120;
    const STRIDE: i64 = 12;
    let names = s.params.names.clone();
    let m = names.len();
    let deg = s.ndims as u32;
    // Multi-indices of total degree <= deg: both the sample grid offsets and
    // the monomial basis.
    let mut idxs: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..m {
        idxs = idxs
            .into_iter()
            .flat_map(|v| {
                (0..=deg).filter_map(move |e| {
                    let t: u32 = v.iter().sum::<u32>() + e;
                    if t <= deg {
                        let mut w = v.clone();
                        w.push(e);
                        Some(w)
                    } else {
                        None
                    }
                })
            })
            .collect();
    }
    let bind = |alpha: &[u32]| -> Binding {
        names
            .iter()
            .zip(alpha)
            .map(|(n, &a)| (n.clone(), B0 + STRIDE * a as i64))
            .collect()
    };
    let mut samples = Vec::with_capacity(idxs.len());
    for alpha in &idxs {
        samples.push(card_at(s, &bind(alpha))? as i64);
    }
    if m == 0 {
        return if samples[0] == 0 {
            Err(PolyError::Empty)
        } else {
            Ok(LeadingForm { params: names, terms: vec![(BigInt::one(), vec![])] })
        };
    }
    // Vandermonde solve: sum_t coef[t] * prod_i p_i(alpha)^(e_t) = count.
    let vm: Vec<Vec<BigRational>> = idxs
        .iter()
        .map(|alpha| {
            idxs.iter()
                .map(|e| {
                    let mut v = BigRational::one();
                    for i in 0..m {
                        let p = BigRational::from_integer((B0 + STRIDE * alpha[i] as i64).into());
                        for _ in 0..e[i] {
                            v = v * &p;
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let rhs: Vec<BigRational> =
        samples.iter().map(|&c| BigRational::from_integer(c.into())).collect();
    let coefs = super::linalg::solve(&vm, &rhs)
        .ok_or_else(|| PolyError::Other("interpolation system is singular".into()))?;
    // Held-out check.
    let hold: Vec<u32> = (0..m).map(|_| deg + 1).collect();
    let actual = card_at(s, &bind(&hold))? as i64;
    let mut predicted = BigRational::zero();
    for (c, e) in coefs.iter().zip(&idxs) {
        let mut v = c.clone();
        for i in 0..m {
            let p = BigRational::from_integer((B0 + STRIDE * (deg + 1) as i64).into());
            for _ in 0..e[i] {
                v = v * &p;
            }
        }
        predicted += v;
    }
    if predicted != BigRational::from_integer(actual.into()) {
        return Err(PolyError::NonPolynomial);
    }
    if samples.iter().all(|&c| c == 0) {
        return Err(PolyError::Empty);
    }
    let top = coefs
        .iter()
        .zip(&idxs)
        .filter(|(c, _)| !c.is_zero())
        .map(|(_, e)| e.iter().sum::<u32>())
        .max()
        .unwrap_or(0);
    let mut terms: Vec<(BigRational, Vec<u32>)> = coefs
        .iter()
        .zip(&idxs)
        .filter(|(c, e)| !c.is_zero() && e.iter().sum::<u32>() == top)
        .map(|(c, e)| (c.clone(), e.clone()))
        .collect();
    if terms.iter().any(|(c, _)| c.is_negative()) {
        return Err(PolyError::NonPolynomial);
    }
    // Normalize to coprime positive integer coefficients.
    let mut lcm = BigInt::one();
    for (c, _) in &terms {
        lcm = num::integer::lcm(lcm, c.denom().clone());
    }
    let mut ints: Vec<(BigInt, Vec<u32>)> = terms
        .drain(..)
        .map(|(c, e)| ((c * BigRational::from_integer(lcm.clone())).numer().clone(), e))
        .collect();
    let mut g = BigInt::zero();
    for (c, _) in &ints {
        g = num::integer::gcd(g, c.clone());
    }
    if !g.is_zero() && !g.is_one() {
        for (c, _) in ints.iter_mut() {
            *c = &*c / &g;
        }
    }
    ints.sort_by(|a, b| b.1.cmp(&a.1));
    Ok(LeadingForm { params: names, terms: ints })
}
