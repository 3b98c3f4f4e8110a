/// A source packet ("ball") at its stream position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSymbol {
    pub position: u64,
    pub payload: Vec<u8>,
}

/// A coded packet ("bin"): the XOR of every ball thrown into `bin_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSymbol {
    pub bin_index: u64,
    pub payload: Vec<u8>,
}

#[inline]
pub(crate) fn xor_into(dst: &mut [u8], src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}
