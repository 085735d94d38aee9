//! The red/blue pebble game itself: move-list validation, exhaustive
//! optimal-I/O search, calculation-derived partitions and their checks,
//! decomposition into sub-CDAGs and input/output tagging.
//!
//! Two variants are supported. The standard game allows refiring a vertex
//! (recomputation); the no-recompute (NR) game fires each vertex at most
//! once. Labels are flexible: a predecessor-free vertex that is not an
//! input starts without a blue pebble but may fire freely, and a
//! successor-free vertex that is not an output needs no final blue pebble.
//! A complete calculation fires every compute vertex and ends with blue
//! pebbles on all outputs.

use super::Cdag;
use crate::polyset::{PResult, PolyError};
use itertools::Itertools;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    R1,
    R2,
    R3,
    R4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub vertex: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Calculation {
    pub moves: Vec<Move>,
}

impl Calculation {
    /// The paper's q: number of R1 and R2 moves.
    pub fn io_count(&self) -> usize {
        self.moves.iter().filter(|m| matches!(m.kind, MoveKind::R1 | MoveKind::R2)).count()
    }

    /// Parses `R1_2, R3_6, ...`; separators are whitespace, commas, braces.
    pub fn parse(text: &str, g: &Cdag) -> PResult<Calculation> {
        let mut moves = Vec::new();
        for tok in text.split(|c: char| c.is_whitespace() || "{},".contains(c)) {
            if tok.is_empty() {
                continue;
            }
            let (kind, rest) = match tok {
                _ if tok.starts_with("R1_") => (MoveKind::R1, &tok[3..]),
                _ if tok.starts_with("R2_") => (MoveKind::R2, &tok[3..]),
                _ if tok.starts_with("R3_") => (MoveKind::R3, &tok[3..]),
                _ if tok.starts_with("R4_") => (MoveKind::R4, &tok[3..]),
                _ => return Err(PolyError::Parse(format!("bad move token {tok}"))),
            };
            let vertex = g
                .vertex(rest)
                .ok_or_else(|| PolyError::Parse(format!("unknown vertex {rest}")))?;
            moves.push(Move { kind, vertex });
        }
        Ok(Calculation { moves })
    }

    pub fn render(&self, g: &Cdag) -> String {
        let parts: Vec<String> = self
            .moves
            .iter()
            .map(|m| {
                let k = match m.kind {
                    MoveKind::R1 => "R1",
                    MoveKind::R2 => "R2",
                    MoveKind::R3 => "R3",
                    MoveKind::R4 => "R4",
                };
                format!("{k}_{}", g.names[m.vertex])
            })
            .collect();
        parts.join(" ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Std,
    Nr,
}

/// Whether every source is an input and every sink an output (the
/// precondition of the original game; flexible labeling drops it).
pub fn standard_valid(g: &Cdag) -> bool {
    (0..g.len()).all(|v| {
        (!g.preds[v].is_empty() || g.inputs.contains(&v))
            && (!g.succs[v].is_empty() || g.outputs.contains(&v))
    })
}

fn mask(set: &BTreeSet<usize>) -> u32 {
    set.iter().fold(0u32, |m, &v| m | (1 << v))
}

struct World {
    n: usize,
    inputs: u32,
    outputs: u32,
    compute: u32,
    preds: Vec<u32>,
    succs: Vec<u32>,
}

impl World {
    fn new(g: &Cdag, cap: usize) -> PResult<World> {
        if g.len() > cap || g.len() > 32 {
            return Err(PolyError::Other(format!(
                "CDAG has {} vertices, cap is {}",
                g.len(),
                cap.min(32)
            )));
        }
        let inputs = mask(&g.inputs);
        Ok(World {
            n: g.len(),
            inputs,
            outputs: mask(&g.outputs),
            compute: ((1u64 << g.len()) - 1) as u32 & !inputs,
            preds: g.preds.iter().map(|p| p.iter().fold(0, |m, &v| m | (1 << v))).collect(),
            succs: g.succs.iter().map(|p| p.iter().fold(0, |m, &v| m | (1 << v))).collect(),
        })
    }

    fn complete(&self, blue: u32, fired: u32) -> bool {
        blue & self.outputs == self.outputs && fired & self.compute == self.compute
    }
}

/// Strictly simulates a move list and returns its I/O count. The donor of a
/// slide is not part of the move notation, so all donor choices (including
/// not sliding) are explored; the calculation is valid if any choice works.
pub fn validate_calculation(
    g: &Cdag,
    s: usize,
    calc: &Calculation,
    variant: Variant,
    allow_slide: bool,
) -> PResult<usize> {
    if s == 0 {
        return Err(PolyError::Other("need at least one red pebble".into()));
    }
    let w = World::new(g, 32)?;
    let mut deepest: (usize, String) = (0, "empty calculation".into());
    if run(&w, s, &calc.moves, 0, 0, w.inputs, 0, variant, allow_slide, &mut deepest) {
        return Ok(calc.io_count());
    }
    Err(PolyError::Other(format!("move {}: {}", deepest.0 + 1, deepest.1)))
}

#[allow(clippy::too_many_arguments)]
fn run(
    w: &World,
    s: usize,
    moves: &[Move],
    i: usize,
    red: u32,
    blue: u32,
    fired: u32,
    variant: Variant,
    allow_slide: bool,
    deepest: &mut (usize, String),
) -> bool {
    let fail = |i: usize, msg: String, deepest: &mut (usize, String)| {
        if i >= deepest.0 {
            *deepest = (i, msg);
        }
        false
    };
    if i == moves.len() {
        if blue & w.outputs != w.outputs {
            return fail(i.saturating_sub(1), "ends without blue on all outputs".into(), deepest);
        }
        if fired & w.compute != w.compute {
            return fail(i.saturating_sub(1), "ends with unfired compute vertices".into(), deepest);
        }
        return true;
    }
    let m = moves[i];
    let b = 1u32 << m.vertex;
    match m.kind {
        MoveKind::R1 => {
            if blue & b == 0 {
                return fail(i, "R1 on a vertex without a blue pebble".into(), deepest);
            }
            let nr = red | b;
            if nr.count_ones() as usize > s {
                return fail(i, "R1 exceeds the red pebble budget".into(), deepest);
            }
            run(w, s, moves, i + 1, nr, blue, fired, variant, allow_slide, deepest)
        }
        MoveKind::R2 => {
            if red & b == 0 {
                return fail(i, "R2 on a vertex without a red pebble".into(), deepest);
            }
            run(w, s, moves, i + 1, red, blue | b, fired, variant, allow_slide, deepest)
        }
        MoveKind::R4 => {
            if red & b == 0 {
                return fail(i, "R4 on a vertex without a red pebble".into(), deepest);
            }
            run(w, s, moves, i + 1, red & !b, blue, fired, variant, allow_slide, deepest)
        }
        MoveKind::R3 => {
            if w.compute & b == 0 {
                return fail(i, "R3 on an input vertex".into(), deepest);
            }
            if w.preds[m.vertex] & red != w.preds[m.vertex] {
                return fail(i, "R3 with an unpebbled predecessor".into(), deepest);
            }
            if variant == Variant::Nr && fired & b != 0 {
                return fail(i, "R3 refires a vertex (NR)".into(), deepest);
            }
            let nf = fired | b;
            let plain = red | b;
            if (plain.count_ones() as usize) <= s
                && run(w, s, moves, i + 1, plain, blue, nf, variant, allow_slide, deepest)
            {
                return true;
            }
            if !allow_slide {
                if (plain.count_ones() as usize) > s {
                    return fail(i, "R3 exceeds the red pebble budget".into(), deepest);
                }
                return false;
            }
            let mut donors = w.preds[m.vertex] & red;
            while donors != 0 {
                let d = donors & donors.wrapping_neg();
                donors &= donors - 1;
                let nr = (red & !d) | b;
                if run(w, s, moves, i + 1, nr, blue, nf, variant, allow_slide, deepest) {
                    return true;
                }
            }
            if (plain.count_ones() as usize) > s && w.preds[m.vertex] & red == 0 {
                return fail(i, "R3 exceeds the red pebble budget".into(), deepest);
            }
            false
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub vertex_cap: usize,
    /// Maximum number of search-state expansions before giving up on
    /// exactness and falling back to a greedy upper bound.
    pub budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { vertex_cap: 14, budget: 20_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct MinIo {
    pub q: usize,
    pub optimal: bool,
    pub witness: Calculation,
}

fn key(red: u32, blue: u32, fired: u32) -> u128 {
    red as u128 | ((blue as u128) << 32) | ((fired as u128) << 64)
}

/// Exact optimal I/O by A* over game states (red, blue, fired). R1/R2 cost
/// one, R3/R4 are free. The heuristic counts outputs still needing a store
/// plus inputs that are not red but still feed an unfired vertex; both are
/// unavoidable I/O, so it is admissible.
pub fn min_io(
    g: &Cdag,
    s: usize,
    variant: Variant,
    allow_slide: bool,
    limits: &SearchLimits,
) -> PResult<MinIo> {
    if s == 0 {
        return Err(PolyError::Other("need at least one red pebble".into()));
    }
    let w = World::new(g, limits.vertex_cap)?;
    let canon = |red: u32, blue: u32, fired: u32| -> (u32, u32, u32) {
        let mut feeds_unfired = 0u32;
        for v in 0..w.n {
            if w.succs[v] & !fired != 0 && w.succs[v] & w.compute & !fired != 0 {
                feeds_unfired |= 1 << v;
            }
        }
        let pending_out = w.outputs & !blue;
        match variant {
            // Recomputation keeps old values potentially reusable; only the
            // firing history bounds what is safe to forget.
            Variant::Std => {
                let has_succ =
                    (0..w.n).fold(0u32, |m, v| if w.succs[v] != 0 { m | (1 << v) } else { m });
                (red, blue & (w.outputs | has_succ), fired)
            }
            Variant::Nr => {
                (red & (feeds_unfired | pending_out), blue & (feeds_unfired | w.outputs), fired)
            }
        }
    };
    let heuristic = |red: u32, blue: u32, fired: u32| -> u32 {
        let mut h = (w.outputs & !blue).count_ones();
        let mut ins = w.inputs & !red;
        while ins != 0 {
            let v = ins.trailing_zeros() as usize;
            ins &= ins - 1;
            if w.succs[v] & w.compute & !fired != 0 {
                h += 1;
            }
        }
        h
    };

    let (r0, b0, f0) = canon(0, w.inputs, 0);
    let start = key(r0, b0, f0);
    let mut dist: HashMap<u128, u32> = HashMap::new();
    // Parent links carry the red set right after the move, before
    // canonicalization, so dropped pebbles become explicit R4s on replay.
    let mut parent: HashMap<u128, (u128, Move, u32)> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(u32, u128)>> = BinaryHeap::new();
    dist.insert(start, 0);
    heap.push(Reverse((heuristic(r0, b0, f0), start)));
    let mut pops: u64 = 0;

    let push = |cur: u128,
                    cost: u32,
                    mv: Move,
                    red: u32,
                    blue: u32,
                    fired: u32,
                    step: u32,
                    dist: &mut HashMap<u128, u32>,
                    parent: &mut HashMap<u128, (u128, Move, u32)>,
                    heap: &mut BinaryHeap<Reverse<(u32, u128)>>| {
        let (r, b, f) = canon(red, blue, fired);
        let k = key(r, b, f);
        let nc = cost + step;
        if dist.get(&k).map_or(true, |&d| nc < d) {
            dist.insert(k, nc);
            parent.insert(k, (cur, mv, red));
            heap.push(Reverse((nc + heuristic(r, b, f), k)));
        }
    };

    while let Some(Reverse((f_est, k))) = heap.pop() {
        let red = (k & 0xffff_ffff) as u32;
        let blue = ((k >> 32) & 0xffff_ffff) as u32;
        let fired = ((k >> 64) & 0xffff_ffff) as u32;
        let cost = dist[&k];
        if f_est > cost + heuristic(red, blue, fired) {
            continue;
        }
        if w.complete(blue, fired) {
            let mut moves = Vec::new();
            let mut at = k;
            while at != start {
                let (prev, mv, raw_red) = parent[&at];
                // Pebbles the canonical form discarded must be deleted
                // explicitly, or the move list is not replayable.
                let canon_red = (at & 0xffff_ffff) as u32;
                let mut dropped = raw_red & !canon_red;
                while dropped != 0 {
                    let d = dropped.trailing_zeros() as usize;
                    dropped &= dropped - 1;
                    moves.push(Move { kind: MoveKind::R4, vertex: d });
                }
                moves.push(mv);
                at = prev;
            }
            moves.reverse();
            return Ok(MinIo {
                q: cost as usize,
                optimal: true,
                witness: Calculation { moves },
            });
        }
        pops += 1;
        if pops > limits.budget {
            let (q, witness) = greedy_schedule(g, &w, s)?;
            return Ok(MinIo { q, optimal: false, witness });
        }
        for v in 0..w.n {
            let b = 1u32 << v;
            let mv = |kind| Move { kind, vertex: v };
            if blue & b != 0 && red & b == 0 && (red.count_ones() as usize) < s {
                push(k, cost, mv(MoveKind::R1), red | b, blue, fired, 1, &mut dist, &mut parent, &mut heap);
            }
            if red & b != 0 && blue & b == 0 {
                push(k, cost, mv(MoveKind::R2), red, blue | b, fired, 1, &mut dist, &mut parent, &mut heap);
            }
            if red & b != 0 {
                push(k, cost, mv(MoveKind::R4), red & !b, blue, fired, 0, &mut dist, &mut parent, &mut heap);
            }
            let fireable = w.compute & b != 0
                && w.preds[v] & red == w.preds[v]
                && red & b == 0
                && !(variant == Variant::Nr && fired & b != 0);
            if fireable {
                if (red.count_ones() as usize) < s {
                    push(k, cost, mv(MoveKind::R3), red | b, blue, fired | b, 0, &mut dist, &mut parent, &mut heap);
                }
                if allow_slide {
                    let mut donors = w.preds[v] & red;
                    while donors != 0 {
                        let d = donors & donors.wrapping_neg();
                        donors &= donors - 1;
                        push(k, cost, mv(MoveKind::R3), (red & !d) | b, blue, fired | b, 0, &mut dist, &mut parent, &mut heap);
                    }
                }
            }
        }
    }
    Err(PolyError::Other("no complete calculation exists at this S".into()))
}

/// Load-fire-store-evict schedule in topological order; valid whenever every
/// in-degree is below S, and an upper bound on the optimum.
fn greedy_schedule(g: &Cdag, w: &World, s: usize) -> PResult<(usize, Calculation)> {
    let mut moves = Vec::new();
    let mut q = 0;
    for v in g.topo_order() {
        if w.compute & (1 << v) == 0 {
            continue;
        }
        if g.preds[v].len() + 1 > s {
            return Err(PolyError::Other("budget exhausted and fan-in exceeds S".into()));
        }
        for &p in &g.preds[v] {
            moves.push(Move { kind: MoveKind::R1, vertex: p });
            q += 1;
        }
        moves.push(Move { kind: MoveKind::R3, vertex: v });
        if g.outputs.contains(&v) || !g.succs[v].is_empty() {
            moves.push(Move { kind: MoveKind::R2, vertex: v });
            q += 1;
        }
        for &p in &g.preds[v] {
            moves.push(Move { kind: MoveKind::R4, vertex: p });
        }
        moves.push(Move { kind: MoveKind::R4, vertex: v });
    }
    Ok((q, Calculation { moves }))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    pub subsets: Vec<BTreeSet<usize>>,
}

impl Partition {
    pub fn h(&self) -> usize {
        self.subsets.len()
    }
}

#[derive(Clone, Debug, Default)]
pub struct TagSet {
    pub loads: BTreeSet<usize>,
    pub stores: BTreeSet<usize>,
}

/// Splits an NR-valid calculation into h = ceil(q/S) consecutive blocks,
/// the first h-1 holding exactly S I/O moves each; subset i collects the
/// vertices fired in block i. The result is a valid 2S partition.
pub fn partition_from_calculation(
    g: &Cdag,
    s: usize,
    calc: &Calculation,
    allow_slide: bool,
) -> PResult<Partition> {
    let q = validate_calculation(g, s, calc, Variant::Nr, allow_slide)?;
    let h = if q == 0 { 1 } else { q.div_ceil(s) };
    let mut subsets = vec![BTreeSet::new(); h];
    let mut io_seen = 0usize;
    for m in &calc.moves {
        match m.kind {
            MoveKind::R1 | MoveKind::R2 => io_seen += 1,
            MoveKind::R3 => {
                subsets[(io_seen / s).min(h - 1)].insert(m.vertex);
            }
            MoveKind::R4 => {}
        }
    }
    Ok(Partition { subsets })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionKind {
    /// Original definition: bounded dominator and minimum sets.
    Hk,
    /// No-recompute definition: bounded In and Out sets.
    Nr,
}

/// Checks P1-P4; returns the list of violations (empty means valid). The
/// dominator condition is checked by brute force over subsets of the part's
/// ancestors, which is capped at 20 candidates.
pub fn verify_partition(
    g: &Cdag,
    part: &Partition,
    s_bound: usize,
    kind: PartitionKind,
) -> PResult<Vec<String>> {
    let mut violations = Vec::new();
    let required: BTreeSet<usize> = match kind {
        PartitionKind::Hk => (0..g.len()).collect(),
        PartitionKind::Nr => (0..g.len()).filter(|v| !g.inputs.contains(v)).collect(),
    };
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for (i, sub) in part.subsets.iter().enumerate() {
        for &v in sub {
            if !seen.insert(v) {
                violations.push(format!("P1: vertex {} in two subsets", g.names[v]));
            }
            if !required.contains(&v) {
                violations.push(format!("P1: vertex {} outside the required set", g.names[v]));
            }
        }
        let _ = i;
    }
    if seen != required {
        violations.push("P1: subsets do not cover the required set".into());
    }

    // P2: the quotient graph over subsets must be acyclic.
    let owner: HashMap<usize, usize> = part
        .subsets
        .iter()
        .enumerate()
        .flat_map(|(i, sub)| sub.iter().map(move |&v| (v, i)))
        .collect();
    let h = part.subsets.len();
    let mut qsucc: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); h];
    for v in 0..g.len() {
        let (Some(&a), _) = (owner.get(&v), ()) else { continue };
        for &wv in &g.succs[v] {
            if let Some(&b) = owner.get(&wv) {
                if a != b {
                    qsucc[a].insert(b);
                }
            }
        }
    }
    if !acyclic(&qsucc) {
        violations.push("P2: cyclic dependence between subsets".into());
    }

    for (i, sub) in part.subsets.iter().enumerate() {
        match kind {
            PartitionKind::Nr => {
                let inset: BTreeSet<usize> = (0..g.len())
                    .filter(|v| !sub.contains(v) && g.succs[*v].iter().any(|w| sub.contains(w)))
                    .collect();
                if inset.len() > s_bound {
                    violations.push(format!("P3: subset {i} has |In| = {}", inset.len()));
                }
                let outset: BTreeSet<usize> = sub
                    .iter()
                    .filter(|&&v| {
                        g.outputs.contains(&v) || g.succs[v].iter().any(|w| !sub.contains(w))
                    })
                    .copied()
                    .collect();
                if outset.len() > s_bound {
                    violations.push(format!("P4: subset {i} has |Out| = {}", outset.len()));
                }
            }
            PartitionKind::Hk => {
                if !has_small_dominator(g, sub, s_bound)? {
                    violations.push(format!("P3: subset {i} has no dominator of size {s_bound}"));
                }
                let minset: BTreeSet<usize> = sub
                    .iter()
                    .filter(|&&v| g.succs[v].iter().all(|w| !sub.contains(w)))
                    .copied()
                    .collect();
                if minset.len() > s_bound {
                    violations.push(format!("P4: subset {i} has |Min| = {}", minset.len()));
                }
            }
        }
    }
    Ok(violations)
}

fn acyclic(succ: &[BTreeSet<usize>]) -> bool {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for ss in succ {
        for &w in ss {
            indeg[w] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut done = 0;
    while let Some(v) = ready.pop() {
        done += 1;
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    done == n
}

/// Brute-force dominator search: some set D of at most `s` vertices such
/// that every path from an input to the subset passes through D.
fn has_small_dominator(g: &Cdag, sub: &BTreeSet<usize>, s: usize) -> PResult<bool> {
    let mut ancestors: BTreeSet<usize> = sub.clone();
    let mut stack: Vec<usize> = sub.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for &p in &g.preds[v] {
            if ancestors.insert(p) {
                stack.push(p);
            }
        }
    }
    let cand: Vec<usize> = ancestors.into_iter().collect();
    if cand.len() > 20 {
        return Err(PolyError::Other(format!(
            "dominator candidates {} exceed the brute-force cap",
            cand.len()
        )));
    }
    let dominates = |d: &BTreeSet<usize>| -> bool {
        // BFS from inputs avoiding D; no vertex of the subset may be reached.
        let mut reach: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<usize> = Vec::new();
        for &i in &g.inputs {
            if !d.contains(&i) {
                reach.insert(i);
                stack.push(i);
            }
        }
        while let Some(v) = stack.pop() {
            if sub.contains(&v) {
                return false;
            }
            for &w in &g.succs[v] {
                if !d.contains(&w) && reach.insert(w) {
                    stack.push(w);
                }
            }
        }
        true
    };
    if dominates(&BTreeSet::new()) {
        return Ok(true);
    }
    for size in 1..=s.min(cand.len()) {
        for combo in cand.iter().combinations(size) {
            let d: BTreeSet<usize> = combo.into_iter().copied().collect();
            if dominates(&d) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Minimal number of subsets over all valid partitions, by enumerating set
/// partitions with an increasing block count; per-subset feasibility is
/// memoized since subsets recur across partitions.
pub fn hmin_bruteforce(g: &Cdag, s_bound: usize, kind: PartitionKind) -> PResult<usize> {
    let elems: Vec<usize> = match kind {
        PartitionKind::Hk => (0..g.len()).collect(),
        PartitionKind::Nr => (0..g.len()).filter(|v| !g.inputs.contains(v)).collect(),
    };
    let n = elems.len();
    if n > 10 {
        return Err(PolyError::Other(format!("{n} vertices exceed the enumeration cap")));
    }
    if n == 0 {
        return Ok(0);
    }
    let mut feasible: HashMap<u32, bool> = HashMap::new();
    let mut subset_ok = |bits: u32| -> PResult<bool> {
        if let Some(&ok) = feasible.get(&bits) {
            return Ok(ok);
        }
        let sub: BTreeSet<usize> =
            (0..n).filter(|i| bits & (1 << i) != 0).map(|i| elems[i]).collect();
        let ok = match kind {
            PartitionKind::Nr => {
                let inset = (0..g.len())
                    .filter(|v| !sub.contains(v) && g.succs[*v].iter().any(|w| sub.contains(w)))
                    .count();
                let outset = sub
                    .iter()
                    .filter(|&&v| {
                        g.outputs.contains(&v) || g.succs[v].iter().any(|w| !sub.contains(w))
                    })
                    .count();
                inset <= s_bound && outset <= s_bound
            }
            PartitionKind::Hk => {
                let minset = sub
                    .iter()
                    .filter(|&&v| g.succs[v].iter().all(|w| !sub.contains(w)))
                    .count();
                minset <= s_bound && has_small_dominator(g, &sub, s_bound)?
            }
        };
        feasible.insert(bits, ok);
        Ok(ok)
    };

    for h in 1..=n {
        // Restricted-growth enumeration of partitions into at most h blocks;
        // blocks are built as bitsets over the element indices.
        let mut assign = vec![0usize; n];
        'next: loop {
            let blocks_used = assign.iter().copied().max().unwrap() + 1;
            if blocks_used <= h {
                let mut blocks = vec![0u32; blocks_used];
                for (i, &a) in assign.iter().enumerate() {
                    blocks[a] |= 1 << i;
                }
                let mut all_ok = true;
                for &b in &blocks {
                    if !subset_ok(b)? {
                        all_ok = false;
                        break;
                    }
                }
                if all_ok && quotient_acyclic(g, &elems, &assign, blocks_used) {
                    return Ok(blocks_used.max(1));
                }
            }
            // advance restricted-growth string
            for i in (1..n).rev() {
                let prefix_max = assign[..i].iter().copied().max().unwrap();
                if assign[i] <= prefix_max && assign[i] + 1 <= h - 1 {
                    assign[i] += 1;
                    for a in assign[i + 1..].iter_mut() {
                        *a = 0;
                    }
                    continue 'next;
                }
                assign[i] = 0;
            }
            break;
        }
    }
    Err(PolyError::Other("no valid partition exists".into()))
}

fn quotient_acyclic(g: &Cdag, elems: &[usize], assign: &[usize], blocks: usize) -> bool {
    let owner: HashMap<usize, usize> =
        elems.iter().enumerate().map(|(i, &v)| (v, assign[i])).collect();
    let mut qsucc: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); blocks];
    for (&v, &a) in &owner {
        for &w in &g.succs[v] {
            if let Some(&b) = owner.get(&w) {
                if a != b {
                    qsucc[a].insert(b);
                }
            }
        }
    }
    acyclic(&qsucc)
}

/// Induced sub-CDAGs of a disjoint cover (the decomposition theorem's
/// construction; labels are inherited, not re-derived).
pub fn decompose(g: &Cdag, parts: &[BTreeSet<usize>]) -> PResult<Vec<Cdag>> {
    let mut seen = BTreeSet::new();
    for p in parts {
        for &v in p {
            if v >= g.len() || !seen.insert(v) {
                return Err(PolyError::Other("not a disjoint partition".into()));
            }
        }
    }
    if seen.len() != g.len() {
        return Err(PolyError::Other("partition does not cover the graph".into()));
    }
    Ok(parts.iter().map(|p| g.induced(p)).collect())
}

/// Relabels the given vertices as inputs/outputs (idempotent union).
pub fn tag(g: &Cdag, t: &TagSet) -> Cdag {
    let mut out = g.clone();
    out.inputs.extend(t.loads.iter().copied());
    out.outputs.extend(t.stores.iter().copied());
    out
}

/// Adds every source to the inputs and every sink to the outputs — the
/// labeling the original game forces on a CDAG analyzed in isolation.
pub fn standardize(g: &Cdag) -> Cdag {
    let mut out = g.clone();
    for v in 0..g.len() {
        if g.preds[v].is_empty() {
            out.inputs.insert(v);
        }
        if g.succs[v].is_empty() {
            out.outputs.insert(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Cdag {
        Cdag::parse("v a input\nv b\nv c\nv d output\ne a b\ne b c\ne c d\n").unwrap()
    }

    #[test]
    fn trivial_vertex_costs_two() {
        let g = Cdag::parse("v a input\nv b output\ne a b\n").unwrap();
        let r = min_io(&g, 2, Variant::Std, true, &SearchLimits::default()).unwrap();
        assert_eq!(r.q, 2);
        assert!(r.optimal);
        let q = validate_calculation(&g, 2, &r.witness, Variant::Std, true).unwrap();
        assert_eq!(q, 2);
    }

    #[test]
    fn unpebbled_predecessor_is_rejected() {
        let g = chain();
        let calc = Calculation::parse("R3_b", &g).unwrap();
        let err = validate_calculation(&g, 2, &calc, Variant::Std, true).unwrap_err();
        assert!(err.to_string().contains("predecessor"));
    }

    #[test]
    fn slide_saves_a_pebble_on_a_chain() {
        let g = chain();
        let with = min_io(&g, 2, Variant::Nr, true, &SearchLimits::default()).unwrap();
        let without = min_io(&g, 2, Variant::Nr, false, &SearchLimits::default()).unwrap();
        assert_eq!(with.q, 2);
        assert!(without.q >= with.q);
    }

    #[test]
    fn partition_of_a_calculation_verifies() {
        let g = chain();
        let r = min_io(&g, 2, Variant::Nr, true, &SearchLimits::default()).unwrap();
        let part = partition_from_calculation(&g, 2, &r.witness, true).unwrap();
        let v = verify_partition(&g, &part, 4, PartitionKind::Nr).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn chain_hmin_under_tight_out_bound() {
        // 4 compute vertices, all stored, 2S = 2: the Out bound forces a
        // split into two halves.
        let g = Cdag::parse(
            "v i input\nv a output\nv b output\nv c output\nv d output\n\
             e i a\ne a b\ne b c\ne c d\n",
        )
        .unwrap();
        let h = hmin_bruteforce(&g, 2, PartitionKind::Nr).unwrap();
        assert_eq!(h, 2);
    }
}
