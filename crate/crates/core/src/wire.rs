//! Framed messages exchanged between two processes.
//!
//! ```text
//! "MPFX" | version (1) | kind (1) | payload_len (4, big-endian) | payload
//! ```

use std::io::Read;

use num_bigint::BigUint;

use crate::encoding::{encode_matrix, Reader};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAGIC: [u8; 4] = *b"MPFX";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameKind {
    Setup = 0x01,
    TokenList = 0x02,
    KemCloseB = 0x03,
    KemEncapMsg = 0x04,
    Error = 0x05,
    /// Key-confirmation tag exchanged at the end of a KEM run.
    KeyConfirm = 0x06,
}

impl TryFrom<u8> for FrameKind {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            0x01 => FrameKind::Setup,
            0x02 => FrameKind::TokenList,
            0x03 => FrameKind::KemCloseB,
            0x04 => FrameKind::KemEncapMsg,
            0x05 => FrameKind::Error,
            0x06 => FrameKind::KeyConfirm,
            other => return Err(Error::Frame(format!("unknown frame kind 0x{other:02x}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameKind, payload: Vec<u8>) -> Self {
        Self { kind, payload }
    }

    pub fn error(message: &str) -> Self {
        Self::new(FrameKind::Error, message.as_bytes().to_vec())
    }
}

pub fn encode_frame(kind: FrameKind, payload: &[u8]) -> Result<Vec<u8>> {
    let len = u32::try_from(payload.len())
        .map_err(|_| Error::Frame(format!("payload of {} bytes is too large", payload.len())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(kind as u8);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

fn parse_header(header: &[u8; HEADER_LEN]) -> Result<(FrameKind, usize)> {
    if header[..4] != MAGIC {
        return Err(Error::Frame("bad magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::Frame(format!("unsupported version {}", header[4])));
    }
    let kind = FrameKind::try_from(header[5])?;
    let len = u32::from_be_bytes(header[6..10].try_into().expect("width")) as usize;
    Ok((kind, len))
}

/// Decodes exactly one frame; trailing bytes are an error.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| Error::Frame(format!("truncated header ({} bytes)", bytes.len())))?;
    let (kind, len) = parse_header(header)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != len {
        return Err(Error::Frame(format!(
            "declared payload length {len} but {} bytes present",
            body.len()
        )));
    }
    Ok(Frame::new(kind, body.to_vec()))
}

/// Upper bound on payloads accepted from a stream.
pub const MAX_STREAM_PAYLOAD: usize = 64 << 20;

/// Reads one frame from a byte stream.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Frame> {
    let mut header = [0u8; HEADER_LEN];
    reader.read_exact(&mut header)?;
    let (kind, len) = parse_header(&header)?;
    if len > MAX_STREAM_PAYLOAD {
        return Err(Error::Frame(format!("payload length {len} exceeds the stream limit")));
    }
    let mut payload = vec![0u8; len];
    reader.read_exact(&mut payload)?;
    Ok(Frame::new(kind, payload))
}

/// Payload of a token-list frame: a 4-byte count followed by that many
/// dimension-prefixed matrices.
pub fn encode_matrices(matrices: &[&Matrix]) -> Result<Vec<u8>> {
    let count = u32::try_from(matrices.len()).map_err(|_| Error::Serialization("too many matrices".into()))?;
    let mut out = count.to_be_bytes().to_vec();
    for m in matrices {
        encode_matrix(m, &mut out)?;
    }
    Ok(out)
}

pub fn decode_matrices(payload: &[u8], modulus: &BigUint) -> Result<Vec<Matrix>> {
    let mut r = Reader::new(payload);
    let count = r.u32()? as usize;
    let mut out = Vec::new();
    for _ in 0..count {
        out.push(r.matrix(modulus)?);
    }
    r.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_malformed() {
        let good = encode_frame(FrameKind::TokenList, b"abc").unwrap();
        assert_eq!(decode_frame(&good).unwrap(), Frame::new(FrameKind::TokenList, b"abc".to_vec()));

        assert!(matches!(decode_frame(&good[..good.len() - 1]), Err(Error::Frame(_))));
        assert!(matches!(decode_frame(&good[..5]), Err(Error::Frame(_))));

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_frame(&bad), Err(Error::Frame(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode_frame(&bad), Err(Error::Frame(_))));
        let mut bad = good;
        bad[5] = 0x7f;
        assert!(matches!(decode_frame(&bad), Err(Error::Frame(_))));
    }

    #[test]
    fn stream_reader_consumes_one_frame() {
        let mut bytes = encode_frame(FrameKind::Error, b"nope").unwrap();
        bytes.extend(encode_frame(FrameKind::KeyConfirm, &[7; 64]).unwrap());
        let mut cursor = std::io::Cursor::new(bytes);
        assert_eq!(read_frame(&mut cursor).unwrap().kind, FrameKind::Error);
        assert_eq!(read_frame(&mut cursor).unwrap().payload, vec![7; 64]);
        assert!(read_frame(&mut cursor).is_err());
    }

    #[test]
    fn matrix_list_payload() {
        let p = BigUint::from(97u32);
        let a = Matrix::from_rows(&[[1u64, 2], [3, 4]], &p).unwrap();
        let b = Matrix::from_rows(&[[5u64, 6, 7]], &p).unwrap();
        let bytes = encode_matrices(&[&a, &b]).unwrap();
        assert_eq!(decode_matrices(&bytes, &p).unwrap(), vec![a, b]);
        assert!(decode_matrices(&bytes[..bytes.len() - 3], &p).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(kind in 1u8..=6, payload in proptest::collection::vec(any::<u8>(), 0..512)) {
            let kind = FrameKind::try_from(kind).unwrap();
            let bytes = encode_frame(kind, &payload).unwrap();
            prop_assert_eq!(decode_frame(&bytes).unwrap(), Frame::new(kind, payload));
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = decode_frame(&bytes);
            let _ = decode_matrices(&bytes, &BigUint::from(65537u32));
        }
    }
}
