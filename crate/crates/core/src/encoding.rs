//! Bit-exact byte encodings shared by hashing, HMAC inputs and the wire.
//!
//! Integers are 8-byte big-endian; matrices are two 4-byte big-endian
//! dimensions followed by their entries in row-major order.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const VALUE_WIDTH: usize = 8;

pub fn canonical_bytes<'a, I>(values: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = &'a BigUint>,
{
    let values = values.into_iter();
    let mut out = Vec::with_capacity(values.size_hint().0 * VALUE_WIDTH);
    for v in values {
        let v = v
            .to_u64()
            .ok_or_else(|| Error::Serialization(format!("value {v} does not fit in 8 bytes")))?;
        out.extend_from_slice(&v.to_be_bytes());
    }
    Ok(out)
}

/// Inverse of [`canonical_bytes`].
pub fn decode_values(bytes: &[u8]) -> Result<Vec<BigUint>> {
    if bytes.len() % VALUE_WIDTH != 0 {
        return Err(Error::protocol(format!(
            "{} bytes is not a whole number of {VALUE_WIDTH}-byte values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(VALUE_WIDTH)
        .map(|c| BigUint::from(u64::from_be_bytes(c.try_into().expect("chunk width"))))
        .collect())
}

pub fn encode_matrix(matrix: &Matrix, out: &mut Vec<u8>) -> Result<()> {
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| Error::Serialization(format!("dimension {n} exceeds u32")))
    };
    out.extend_from_slice(&dim(matrix.rows())?.to_be_bytes());
    out.extend_from_slice(&dim(matrix.cols())?.to_be_bytes());
    out.extend_from_slice(&canonical_bytes(matrix.entries())?);
    Ok(())
}

pub fn matrix_bytes(matrix: &Matrix) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    encode_matrix(matrix, &mut out)?;
    Ok(out)
}

/// Sequential reader over a byte slice; every short read is a protocol error.
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::protocol(format!(
                "truncated payload: wanted {n} bytes, {} left",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("width")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("width")))
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("width"))
    }

    /// Reads a dimension-prefixed matrix whose entries must be below `modulus`.
    pub fn matrix(&mut self, modulus: &BigUint) -> Result<Matrix> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let count = rows
            .checked_mul(cols)
            .filter(|c| c.checked_mul(VALUE_WIDTH).is_some_and(|b| b <= self.buf.len()))
            .ok_or_else(|| Error::protocol(format!("matrix {rows}x{cols} exceeds the payload")))?;
        let entries = decode_values(self.take(count * VALUE_WIDTH)?)?;
        Matrix::new(rows, cols, entries, modulus.clone()).map_err(|e| Error::protocol(e.to_string()))
    }

    pub fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }

    pub fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::protocol(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn examples() {
        assert_eq!(canonical_bytes(&[big(0)]).unwrap(), vec![0u8; 8]);
        let bytes = canonical_bytes(&[big(1), big(256)]).unwrap();
        assert_eq!(bytes, [0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0]);
    }

    #[test]
    fn rejects_wide_values() {
        let wide = BigUint::from(u64::MAX) + 1u32;
        assert!(matches!(canonical_bytes(&[wide]), Err(Error::Serialization(_))));
    }

    #[test]
    fn matrix_round_trip_and_truncation() {
        let p = big(65537);
        let m = Matrix::from_rows(&[[1u64, 2, 3], [4, 5, 65536]], &p).unwrap();
        let bytes = matrix_bytes(&m).unwrap();
        assert_eq!(bytes.len(), 8 + 6 * 8);
        let mut r = Reader::new(&bytes);
        assert_eq!(r.matrix(&p).unwrap(), m);
        r.finish().unwrap();

        let mut r = Reader::new(&bytes[..bytes.len() - 1]);
        assert!(r.matrix(&p).is_err());
        // entries above the modulus are rejected
        let mut r = Reader::new(&bytes);
        assert!(r.matrix(&big(7)).is_err());
    }

    proptest! {
        #[test]
        fn injective_on_fixed_length(a in proptest::collection::vec(any::<u64>(), 4),
                                     b in proptest::collection::vec(any::<u64>(), 4)) {
            let ea = canonical_bytes(&a.iter().copied().map(big).collect::<Vec<_>>()).unwrap();
            let eb = canonical_bytes(&b.iter().copied().map(big).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(a == b, ea == eb);
            prop_assert_eq!(decode_values(&ea).unwrap(), a.into_iter().map(big).collect::<Vec<_>>());
        }
    }
}
