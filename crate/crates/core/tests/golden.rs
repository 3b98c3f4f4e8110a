//! Vectors frozen from `tests/reference/golden.py`, an independent
//! implementation of the keyed stream, edge derivation and LT neighbors.

use mettle::lt::{LtCode, LtParams};
use mettle::{derive_edge_set, encode_all, CodeParams, Overhead};

fn params(num: u64, den: u64, w: u64, l: usize, seed: u64, size: usize) -> CodeParams {
    CodeParams::new(Overhead::new(num, den).unwrap(), w, l, seed, size).unwrap()
}

fn ref_payload(x: u64) -> Vec<u8> {
    (0..4u64).map(|j| ((x * 37 + j * 11 + 5) & 0xFF) as u8).collect()
}

const GRAPH: [[u64; 3]; 10] = [
    [0, 2, 4],
    [1, 2, 6],
    [3, 5, 7],
    [4, 5, 7],
    [6, 9, 10],
    [7, 10, 12],
    [9, 11, 13],
    [10, 14, 15],
    [12, 15, 14],
    [13, 16, 18],
];

const BINS: [&str; 19] = [
    "05101b26", "2a35404b", "2f255b6d", "4f5a6570", "716f91b3", "3b25efe5", "b391eff1", "85ec3b3a",
    "00000000", "7a4a56be", "2f7e654c", "e3eef904", "93f19791", "b1b39177", "252b5d67", "252b5d67",
    "525d6873", "00000000", "525d6873",
];

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn edge_set_vectors() {
    assert_eq!(derive_edge_set(5, &params(1, 2, 4, 3, 42, 1)).bins(), &[7, 10, 9]);
    assert_eq!(derive_edge_set(0, &params(1, 5, 600, 4, 1, 1)).bins(), &[0, 343, 539, 629]);
    assert_eq!(
        derive_edge_set(123_456, &params(11, 200, 600, 4, 99, 1)).bins(),
        &[130_246, 130_569, 130_713, 130_795]
    );
}

#[test]
fn small_graph_matches_reference() {
    let p = params(1, 2, 3, 3, 7, 4);
    for (x, bins) in GRAPH.iter().enumerate() {
        assert_eq!(derive_edge_set(x as u64, &p).bins(), bins, "ball {x}");
    }
}

#[test]
fn encoder_matches_reference_bins() {
    let p = params(1, 2, 3, 3, 7, 4);
    let payloads: Vec<Vec<u8>> = (0..10).map(ref_payload).collect();
    let coded = encode_all(p, payloads.iter().map(Vec::as_slice)).unwrap();
    let got: Vec<String> = coded.iter().map(|s| hex(&s.payload)).collect();
    assert_eq!(got, BINS);
    assert!(coded.iter().enumerate().all(|(i, s)| s.bin_index == i as u64));
}

#[test]
fn brute_force_xor_matches_reference_bins() {
    let mut bins = vec![vec![0u8; 4]; 19];
    for (x, edges) in GRAPH.iter().enumerate() {
        for &b in edges {
            for (d, s) in bins[b as usize].iter_mut().zip(ref_payload(x as u64)) {
                *d ^= s;
            }
        }
    }
    let got: Vec<String> = bins.iter().map(|b| hex(b)).collect();
    assert_eq!(got, BINS);
}

#[test]
fn lt_neighbor_vectors() {
    let code = LtCode::new(LtParams::with_defaults(8, 3).unwrap());
    let expected: [&[usize]; 12] = [
        &[7],
        &[1, 5],
        &[0, 2],
        &[0, 3],
        &[3],
        &[0, 1, 5, 7],
        &[0],
        &[3, 6],
        &[1, 5],
        &[2, 6],
        &[6, 7],
        &[1],
    ];
    for (i, want) in expected.iter().enumerate() {
        assert_eq!(code.neighbors(i as u64), *want, "coded symbol {i}");
    }
}
