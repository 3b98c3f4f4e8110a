//! Packet trace format: a sequence of records, each a little-endian `u64`
//! bin index, a little-endian `u32` payload length, then the payload.
//! Lost bins are simply absent; readers infer them from index gaps.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::symbol::CodedSymbol;

pub const HEADER_LEN: usize = 12;

pub fn write_symbol<W: Write>(out: &mut W, symbol: &CodedSymbol) -> io::Result<()> {
    let len = u32::try_from(symbol.payload.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "payload longer than u32::MAX"))?;
    out.write_all(&symbol.bin_index.to_le_bytes())?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&symbol.payload)
}

pub fn encode_symbol(symbol: &CodedSymbol) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + symbol.payload.len());
    write_symbol(&mut buf, symbol).expect("writing to a Vec cannot fail");
    buf
}

/// Reads one record; `Ok(None)` at a clean end of input.
pub fn read_symbol<R: Read>(input: &mut R) -> Result<Option<CodedSymbol>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match input.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Trace(format!("truncated header ({filled} of {HEADER_LEN} bytes)"))),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::Trace(e.to_string())),
        }
    }
    let bin_index = u64::from_le_bytes(header[..8].try_into().unwrap());
    let len = u32::from_le_bytes(header[8..].try_into().unwrap()) as usize;
    let mut payload = vec![0u8; len];
    input
        .read_exact(&mut payload)
        .map_err(|e| Error::Trace(format!("truncated payload for bin {bin_index}: {e}")))?;
    Ok(Some(CodedSymbol { bin_index, payload }))
}

/// Iterates over the records of a trace.
pub struct TraceReader<R> {
    input: R,
}

impl<R: Read> TraceReader<R> {
    pub fn new(input: R) -> Self {
        Self { input }
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<CodedSymbol>;

    fn next(&mut self) -> Option<Self::Item> {
        read_symbol(&mut self.input).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_little_endian() {
        let sym = CodedSymbol { bin_index: 0x0102_0304_0506_0708, payload: vec![0xaa, 0xbb] };
        assert_eq!(
            encode_symbol(&sym),
            vec![8, 7, 6, 5, 4, 3, 2, 1, 2, 0, 0, 0, 0xaa, 0xbb]
        );
    }

    #[test]
    fn truncated_input_is_an_error() {
        let bytes = encode_symbol(&CodedSymbol { bin_index: 5, payload: vec![1, 2, 3] });
        for cut in 1..bytes.len() {
            assert!(read_symbol(&mut &bytes[..cut]).is_err(), "cut at {cut}");
        }
        assert_eq!(read_symbol(&mut &[][..]).unwrap(), None);
    }

    proptest! {
        #[test]
        fn trace_round_trip(records in prop::collection::vec((any::<u64>(), prop::collection::vec(any::<u8>(), 0..40)), 0..20)) {
            let symbols: Vec<CodedSymbol> = records.into_iter().map(|(bin_index, payload)| CodedSymbol { bin_index, payload }).collect();
            let mut buf = Vec::new();
            for s in &symbols {
                write_symbol(&mut buf, s).unwrap();
            }
            let back: Vec<CodedSymbol> = TraceReader::new(&buf[..]).collect::<Result<_>>().unwrap();
            prop_assert_eq!(back, symbols);
        }
    }
}
