#![allow(dead_code)]

use mettle::gf2::{build_system, ge_solve, Row, LinearSystem, DEFAULT_BOUND};
use mettle::lt::{lt_decode, LtCode, LtParams};
use mettle::{derive_edge_set, encode_all, BallStatus, CodeParams, CodedSymbol, Decoder, EdgeSet, Overhead};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_payloads(rng: &mut impl Rng, k: usize, size: usize) -> Vec<Vec<u8>> {
    (0..k).map(|_| (0..size).map(|_| rng.gen()).collect()).collect()
}

/// Encodes, erases each bin with probability `erase`, and decodes.
pub struct Instance {
    pub params: CodeParams,
    pub payloads: Vec<Vec<u8>>,
    pub coded: Vec<CodedSymbol>,
    pub received: Vec<CodedSymbol>,
    pub decoded: Vec<Option<(Vec<u8>, f64)>>,
    pub statuses: Vec<BallStatus>,
}

pub fn run_instance(params: CodeParams, payloads: Vec<Vec<u8>>, erased: impl Fn(u64) -> bool) -> Instance {
    let coded = encode_all(params, payloads.iter().map(Vec::as_slice)).unwrap();
    let mut decoder = Decoder::new(params, payloads.len() as u64).unwrap();
    let mut decoded = vec![None; payloads.len()];
    let mut received = Vec::new();
    for sym in &coded {
        if erased(sym.bin_index) {
            decoder.mark_erased(sym.bin_index).unwrap();
        } else {
            received.push(sym.clone());
            for d in decoder.push(sym.clone()).unwrap() {
                assert!(decoded[d.position as usize].is_none(), "ball {} decoded twice", d.position);
                decoded[d.position as usize] = Some((d.payload, d.latency));
            }
        }
    }
    decoder.close();
    let statuses = decoder.final_statuses().unwrap();
    Instance { params, payloads, coded, received, decoded, statuses }
}

pub fn edge_sets(params: &CodeParams, k: usize) -> Vec<EdgeSet> {
    (0..k as u64).map(|x| derive_edge_set(x, params)).collect()
}

/// A random small METTLE instance with random erasures.
pub fn random_mettle_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=64usize);
    let params = CodeParams::new(
        Overhead::new(rng.gen_range(1..=10), rng.gen_range(10..=20)).unwrap(),
        rng.gen_range(4..=12),
        rng.gen_range(2..=5),
        rng.gen(),
        rng.gen_range(1..=6),
    )
    .unwrap();
    let payloads = random_payloads(&mut rng, k, params.symbol_size);
    let eps: f64 = rng.gen_range(0.0..0.5);
    let pattern: Vec<bool> = (0..4096).map(|_| rng.gen_bool(eps)).collect();
    run_instance(params, payloads, move |b| pattern[b as usize % pattern.len()])
}

/// Checks peeling ⊆ oracle with payload agreement; returns (peeled, oracle) counts.
pub fn check_mettle_against_oracle(inst: &Instance) -> (usize, usize) {
    let sets = edge_sets(&inst.params, inst.payloads.len());
    let system = build_system(&sets, &inst.received, DEFAULT_BOUND).unwrap();
    let solution = ge_solve(&system);
    assert_eq!(ge_solve(&system), solution, "oracle is not idempotent");
    check_assignment(&system, &solution.values);
    for (x, got) in inst.decoded.iter().enumerate() {
        if let Some((payload, _)) = got {
            assert_eq!(payload, &inst.payloads[x], "peeling decoded ball {x} wrongly");
            assert_eq!(solution.values[x].as_ref(), Some(payload), "ball {x} peeled but oracle disagrees");
        }
    }
    for (x, value) in solution.values.iter().enumerate() {
        if let Some(v) = value {
            assert_eq!(v, &inst.payloads[x], "oracle decoded ball {x} wrongly");
        }
    }
    (inst.decoded.iter().flatten().count(), solution.decoded_count())
}

/// Every row whose balls are all determined XORs back to its payload.
pub fn check_assignment(system: &LinearSystem, values: &[Option<Vec<u8>>]) {
    for Row { balls, payload, bin_index } in &system.rows {
        if balls.iter().all(|&b| values[b].is_some()) {
            let mut acc = vec![0u8; payload.len()];
            for &b in balls {
                for (a, v) in acc.iter_mut().zip(values[b].as_ref().unwrap()) {
                    *a ^= v;
                }
            }
            assert_eq!(&acc, payload, "row for bin {bin_index} inconsistent");
        }
    }
}

/// Random LT instance checked against the oracle; returns (peeled, oracle).
pub fn check_lt_against_oracle(seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=64usize);
    let params = LtParams::with_defaults(k, rng.gen()).unwrap();
    let code = LtCode::new(params);
    let block = random_payloads(&mut rng, k, 4);
    let sent = rng.gen_range(0..=2 * k as u64);
    let eps: f64 = rng.gen_range(0.0..0.4);
    let received: Vec<CodedSymbol> = (0..sent)
        .filter(|_| !rng.gen_bool(eps))
        .map(|i| code.encode_symbol(&block, i).unwrap())
        .collect();
    let peeled = lt_decode(&received, &params);
    let rows = received
        .iter()
        .map(|s| Row { bin_index: s.bin_index, balls: code.neighbors(s.bin_index), payload: s.payload.clone() })
        .collect();
    let system = LinearSystem::from_rows(k, rows, DEFAULT_BOUND).unwrap();
    let solution = ge_solve(&system);
    check_assignment(&system, &solution.values);
    for (x, got) in peeled.values.iter().enumerate() {
        if let Some(v) = got {
            assert_eq!(v, &block[x], "LT peeling decoded symbol {x} wrongly");
            assert_eq!(solution.values[x].as_ref(), Some(v), "LT symbol {x} peeled but oracle disagrees");
        }
    }
    assert_eq!(peeled.success, peeled.values.iter().all(Option::is_some));
    (peeled.values.iter().flatten().count(), solution.decoded_count())
}
