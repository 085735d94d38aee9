//! Pebble-game oracle on the two worked CDAG examples: move-list
//! validation, exhaustive optima, and the decomposition anomaly.

use std::collections::BTreeSet;

use iobound::pebblelab::game::{
    decompose, min_io, partition_from_calculation, standardize, validate_calculation,
    verify_partition, Calculation, PartitionKind, SearchLimits, Variant,
};
use iobound::pebblelab::Cdag;

fn load(name: &str) -> Cdag {
    let path = format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"));
    Cdag::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const CHEAP: &str = "R1_2 R1_3 R3_6 R4_2 R1_1 R3_9 R4_1 R4_6 R1_4 R3_7 R4_3 R3_10 \
                     R4_9 R4_7 R1_5 R3_8 R4_4 R4_5 R3_11 R2_11";
const COSTLY: &str = "R1_2 R1_3 R3_6 R4_2 R1_4 R2_6 R3_7 R4_3 R1_5 R2_7 R3_8 R2_8 \
                      R1_1 R1_6 R3_9 R4_1 R4_6 R1_7 R3_10 R4_7 R4_9 R1_8 R3_11 R2_11";

fn minimal_valid_s(g: &Cdag, calc: &Calculation) -> Option<(usize, usize)> {
    (1..=8).find_map(|s| {
        validate_calculation(g, s, calc, Variant::Std, true).ok().map(|q| (s, q))
    })
}

#[test]
fn listed_calculations_validate_at_their_minimal_cap() {
    let g = load("sumreduce.cdag");
    let cheap = Calculation::parse(CHEAP, &g).unwrap();
    let costly = Calculation::parse(COSTLY, &g).unwrap();

    // Both schedules momentarily hold more than three red pebbles, so they
    // fail at S=3 and validate at the smallest sufficient capacity.
    assert!(validate_calculation(&g, 3, &cheap, Variant::Std, true).is_err());
    assert_eq!(minimal_valid_s(&g, &cheap), Some((4, 6)));
    assert_eq!(minimal_valid_s(&g, &costly), Some((6, 12)));

    // Both fire each vertex once, so they are also NR-valid.
    assert_eq!(validate_calculation(&g, 4, &cheap, Variant::Nr, true).unwrap(), 6);
}

#[test]
fn sumreduce_optimum_is_six() {
    let g = load("sumreduce.cdag");
    let r = min_io(&g, 3, Variant::Std, true, &SearchLimits::default()).unwrap();
    assert!(r.optimal);
    assert_eq!(r.q, 6);
    assert_eq!(validate_calculation(&g, 3, &r.witness, Variant::Std, true).unwrap(), 6);

    // Restricting recomputation cannot lower the optimum.
    let nr = min_io(&g, 3, Variant::Nr, true, &SearchLimits::default()).unwrap();
    assert!(nr.optimal && nr.q >= 6);
}

#[test]
fn calculation_partition_passes_the_checker() {
    let g = load("sumreduce.cdag");
    let r = min_io(&g, 4, Variant::Nr, true, &SearchLimits::default()).unwrap();
    let part = partition_from_calculation(&g, 4, &r.witness, true).unwrap();
    assert_eq!(part.h(), (r.q + 3) / 4);
    let v = verify_partition(&g, &part, 8, PartitionKind::Nr).unwrap();
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn decomposition_anomaly() {
    let g = load("fourstage.cdag");
    let limits = SearchLimits { vertex_cap: 32, ..Default::default() };

    let whole = min_io(&g, 2, Variant::Nr, true, &limits).unwrap();
    assert!(whole.optimal);
    assert_eq!(whole.q, 12);

    let first: BTreeSet<usize> = (0..g.len())
        .filter(|&v| {
            let n = &g.names[v];
            n.starts_with('a') || n.starts_with('b') || n.starts_with("s1") || n.starts_with("s2")
        })
        .collect();
    let second: BTreeSet<usize> = (0..g.len()).filter(|v| !first.contains(v)).collect();
    let subs = decompose(&g, &[first, second]).unwrap();

    // Forced relabeling (sources become inputs, sinks outputs) makes the
    // sub-optima sum exceed the whole-graph optimum.
    let std_sum: usize = subs
        .iter()
        .map(|c| min_io(&standardize(c), 2, Variant::Nr, true, &limits).unwrap().q)
        .sum();
    assert_eq!(std_sum, 20);

    // Flexible labeling keeps the sum a valid lower bound.
    let flex_sum: usize = subs
        .iter()
        .map(|c| min_io(c, 2, Variant::Nr, true, &limits).unwrap().q)
        .sum();
    assert!(flex_sum <= whole.q);
    assert_eq!(flex_sum, 12);
}
