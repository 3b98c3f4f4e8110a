//! Maximum-likelihood reference decoder: Gaussian elimination over GF(2).
//!
//! Only meant for small instances in tests. A ball counts as decoded when
//! the received rows pin its value uniquely.

use crate::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::symbol::{xor_into, CodedSymbol};

pub const DEFAULT_BOUND: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub bin_index: u64,
    /// Ball indices XORed into this row, sorted.
    pub balls: Vec<usize>,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub num_balls: usize,
    pub rows: Vec<Row>,
}

impl LinearSystem {
    pub fn from_rows(num_balls: usize, rows: Vec<Row>, bound: usize) -> Result<Self> {
        if num_balls > bound {
            return Err(Error::InstanceTooLarge { balls: num_balls, bound });
        }
        if let Some(bad) = rows.iter().flat_map(|r| &r.balls).find(|&&b| b >= num_balls) {
            return Err(Error::InvalidParams(format!("row references ball {bad} of {num_balls}")));
        }
        Ok(Self { num_balls, rows })
    }
}

/// One row per received bin, listing every ball whose edge set hits it.
/// `edge_sets[x]` must be the edge set of ball `x`.
pub fn build_system(edge_sets: &[EdgeSet], received: &[CodedSymbol], bound: usize) -> Result<LinearSystem> {
    if edge_sets.len() > bound {
        return Err(Error::InstanceTooLarge { balls: edge_sets.len(), bound });
    }
    let rows = received
        .iter()
        .map(|sym| Row {
            bin_index: sym.bin_index,
            balls: edge_sets
                .iter()
                .enumerate()
                .filter(|(_, e)| e.contains(sym.bin_index))
                .map(|(x, _)| x)
                .collect(),
            payload: sym.payload.clone(),
        })
        .collect();
    LinearSystem::from_rows(edge_sets.len(), rows, bound)
}

/// `values[x]` is `Some(payload)` when ball `x` is uniquely determined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<Option<Vec<u8>>>,
}

impl Solution {
    pub fn decoded(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter_map(|(x, v)| v.as_ref().map(|_| x))
    }

    pub fn decoded_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

struct BitRow {
    bits: Vec<u64>,
    payload: Vec<u8>,
}

impl BitRow {
    fn get(&self, col: usize) -> bool {
        self.bits[col / 64] >> (col % 64) & 1 == 1
    }

    fn add(&mut self, other: &BitRow) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= *b;
        }
        if self.payload.len() < other.payload.len() {
            self.payload.resize(other.payload.len(), 0);
        }
        xor_into(&mut self.payload[..other.payload.len()], &other.payload);
    }
}

/// Reduces the system to reduced row echelon form. A pivot variable whose
/// row has no other set column is determined; everything else is free or
/// depends on a free variable.
pub fn ge_solve(system: &LinearSystem) -> Solution {
    let n = system.num_balls;
    let words = n.div_ceil(64).max(1);
    let mut rows: Vec<BitRow> = system
        .rows
        .iter()
        .map(|r| {
            let mut bits = vec![0u64; words];
            for &b in &r.balls {
                bits[b / 64] ^= 1 << (b % 64);
            }
            BitRow { bits, payload: r.payload.clone() }
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next_row = 0;
    for col in 0..n {
        let Some(found) = (next_row..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(next_row, found);
        let (head, rest) = rows.split_at_mut(next_row);
        let (pivot, tail) = rest.split_first_mut().expect("pivot row exists");
        for row in head.iter_mut().chain(tail.iter_mut()) {
            if row.get(col) {
                row.add(pivot);
            }
        }
        pivots.push((next_row, col));
        next_row += 1;
    }

    let mut values = vec![None; n];
    for (r, col) in pivots {
        let row = &rows[r];
        let only_pivot = row
            .bits
            .iter()
            .enumerate()
            .all(|(w, &word)| if w == col / 64 { word == 1 << (col % 64) } else { word == 0 });
        if only_pivot {
            values[col] = Some(row.payload.clone());
        }
    }
    Solution { values }
}
