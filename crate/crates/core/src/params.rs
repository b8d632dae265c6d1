//! Parameter-set files shared by both parties.
//!
//! The primary form is versioned JSON:
//!
//! ```json
//! {
//!   "format": "mpfkap-params",
//!   "version": 1,
//!   "protocol": "rdmpf",
//!   "p": 65537,
//!   "dim": 5, "exp_max": 10000, "rounds": 2, "sigma": 1,
//!   "hash_input": "key-list",
//!   "w": [[...]], "base_xu": [[...]], "base_yv": [[...]],
//!   "seed": 7
//! }
//! ```
//!
//! An `rmpf` set carries `rows`, `cols`, `base`, `x` and `y` instead. The
//! binary mirror is the same data in a `Setup` frame (see [`crate::wire`]).

use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::encoding::{encode_matrix, Reader};
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::matrix::Matrix;
use crate::rdmpf::{RdmpfSetup, SessionHashInput};
use crate::rmpf::RmpfSetup;
use crate::wire::{decode_frame, encode_frame, FrameKind, MAGIC};

pub const FORMAT: &str = "mpfkap-params";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashInputName {
    #[default]
    KeyList,
    TranscriptAndKeys,
}

impl From<HashInputName> for SessionHashInput {
    fn from(h: HashInputName) -> Self {
        match h {
            HashInputName::KeyList => SessionHashInput::KeyList,
            HashInputName::TranscriptAndKeys => SessionHashInput::TranscriptAndKeys,
        }
    }
}

impl From<SessionHashInput> for HashInputName {
    fn from(h: SessionHashInput) -> Self {
        match h {
            SessionHashInput::KeyList => HashInputName::KeyList,
            SessionHashInput::TranscriptAndKeys => HashInputName::TranscriptAndKeys,
        }
    }
}

type Rows = Vec<Vec<u64>>;

/// An integer stored as a plain JSON number: anything in `i64::MIN..=u64::MAX`.
mod word {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &i128, s: S) -> Result<S::Ok, S::Error> {
        if let Ok(u) = u64::try_from(*v) {
            s.serialize_u64(u)
        } else if let Ok(i) = i64::try_from(*v) {
            s.serialize_i64(i)
        } else {
            Err(serde::ser::Error::custom("integer out of range"))
        }
    }

    struct WordVisitor;

    impl Visitor<'_> for WordVisitor {
        type Value = i128;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an integer between -2^63 and 2^64 - 1")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<i128, E> {
            Ok(v.into())
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<i128, E> {
            Ok(v.into())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i128, D::Error> {
        d.deserialize_any(WordVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum ProtocolParams {
    Rmpf {
        p: u64,
        rows: usize,
        cols: usize,
        base: Rows,
        x: Rows,
        y: Rows,
    },
    Rdmpf {
        p: u64,
        dim: usize,
        exp_max: u64,
        rounds: usize,
        #[serde(with = "word")]
        sigma: i128,
        #[serde(default)]
        hash_input: HashInputName,
        w: Rows,
        base_xu: Rows,
        base_yv: Rows,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSet {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub protocol: ProtocolParams,
    /// Seed the public matrices were sampled from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A validated setup for either protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Setup {
    Rmpf(RmpfSetup),
    Rdmpf(RdmpfSetup),
}

impl Setup {
    pub fn floor_warnings(&self) -> Vec<String> {
        match self {
            Setup::Rmpf(s) => s.floor_warnings(),
            Setup::Rdmpf(s) => s.floor_warnings(),
        }
    }
}

fn rows_of(m: &Matrix) -> Result<Rows> {
    m.to_u64_rows()
        .ok_or_else(|| Error::Serialization("matrix entries must fit in 8 bytes".into()))
}

fn p_u64(params: &FieldParams) -> Result<u64> {
    params
        .p()
        .to_u64()
        .ok_or_else(|| Error::Serialization("p must be below 2^64 to be written to a file".into()))
}

fn matrix(name: &str, rows: &Rows, expect: (usize, usize), p: &BigUint) -> Result<Matrix> {
    let m = Matrix::from_rows(rows, p).map_err(|e| Error::param(format!("{name}: {e}")))?;
    if (m.rows(), m.cols()) != expect {
        return Err(Error::param(format!(
            "{name} is {}x{}, header says {}x{}",
            m.rows(),
            m.cols(),
            expect.0,
            expect.1
        )));
    }
    Ok(m)
}

impl ParamSet {
    pub fn new(protocol: ProtocolParams, seed: Option<u64>) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            protocol,
            seed,
        }
    }

    pub fn from_rmpf(setup: &RmpfSetup, seed: Option<u64>) -> Result<Self> {
        Ok(Self::new(
            ProtocolParams::Rmpf {
                p: p_u64(setup.params())?,
                rows: setup.rows(),
                cols: setup.cols(),
                base: rows_of(setup.base())?,
                x: rows_of(setup.x())?,
                y: rows_of(setup.y())?,
            },
            seed,
        ))
    }

    pub fn from_rdmpf(setup: &RdmpfSetup, seed: Option<u64>) -> Result<Self> {
        Ok(Self::new(
            ProtocolParams::Rdmpf {
                p: p_u64(setup.params())?,
                dim: setup.dim(),
                exp_max: setup
                    .exp_max()
                    .to_u64()
                    .ok_or_else(|| Error::Serialization("expMax must fit in 8 bytes".into()))?,
                rounds: setup.rounds(),
                sigma: setup.sigma().to_i128().expect("sigma is below p"),
                hash_input: setup.hash_input().into(),
                w: rows_of(setup.w())?,
                base_xu: rows_of(setup.base_xu())?,
                base_yv: rows_of(setup.base_yv())?,
            },
            seed,
        ))
    }

    pub fn from_setup(setup: &Setup, seed: Option<u64>) -> Result<Self> {
        match setup {
            Setup::Rmpf(s) => Self::from_rmpf(s, seed),
            Setup::Rdmpf(s) => Self::from_rdmpf(s, seed),
        }
    }

    /// Validates the set against its protocol's setup invariants.
    pub fn to_setup(&self) -> Result<Setup> {
        if self.format != FORMAT {
            return Err(Error::param(format!("unknown parameter format {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::param(format!("unsupported parameter version {}", self.version)));
        }
        match &self.protocol {
            ProtocolParams::Rmpf { p, rows, cols, base, x, y } => {
                let field = FieldParams::from_u64(*p)?;
                let pm = field.p().clone();
                let shape = (*rows, *cols);
                Ok(Setup::Rmpf(RmpfSetup::new(
                    field,
                    matrix("base", base, shape, &pm)?,
                    matrix("x", x, shape, &pm)?,
                    matrix("y", y, shape, &pm)?,
                )?))
            }
            ProtocolParams::Rdmpf {
                p,
                dim,
                exp_max,
                rounds,
                sigma,
                hash_input,
                w,
                base_xu,
                base_yv,
            } => {
                let field = FieldParams::from_u64(*p)?;
                let pm = field.p().clone();
                let q = field.exp_modulus().clone();
                let shape = (*dim, *dim);
                let sigma = {
                    let qi = i128::from(*p) - 1;
                    BigUint::from(sigma.rem_euclid(qi) as u128)
                };
                let setup = RdmpfSetup::new(
                    field,
                    matrix("w", w, shape, &pm)?,
                    matrix("base_xu", base_xu, shape, &pm)?,
                    matrix("base_yv", base_yv, shape, &pm)?,
                    BigUint::from(*exp_max),
                    *rounds,
                )?
                .with_sigma(&(sigma % q))
                .with_hash_input((*hash_input).into());
                Ok(Setup::Rdmpf(setup))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param(format!("parameter file: {e}")))
    }

    /// The binary mirror: a `Setup` frame.
    pub fn to_binary(&self) -> Result<Vec<u8>> {
        let setup = self.to_setup()?;
        let mut out = Vec::new();
        match (&setup, &self.protocol) {
            (Setup::Rmpf(s), ProtocolParams::Rmpf { p, rows, cols, .. }) => {
                out.push(1);
                out.extend_from_slice(&p.to_be_bytes());
                out.extend_from_slice(&(*rows as u32).to_be_bytes());
                out.extend_from_slice(&(*cols as u32).to_be_bytes());
                for m in [s.base(), s.x(), s.y()] {
                    encode_matrix(m, &mut out)?;
                }
            }
            (
                Setup::Rdmpf(s),
                ProtocolParams::Rdmpf {
                    p,
                    dim,
                    exp_max,
                    rounds,
                    sigma,
                    hash_input,
                    ..
                },
            ) => {
                out.push(2);
                out.extend_from_slice(&p.to_be_bytes());
                out.extend_from_slice(&(*dim as u32).to_be_bytes());
                out.extend_from_slice(&exp_max.to_be_bytes());
                out.extend_from_slice(&(*rounds as u32).to_be_bytes());
                out.extend_from_slice(&sigma.to_be_bytes());
                out.push(match hash_input {
                    HashInputName::KeyList => 0,
                    HashInputName::TranscriptAndKeys => 1,
                });
                for m in [s.w(), s.base_xu(), s.base_yv()] {
                    encode_matrix(m, &mut out)?;
                }
            }
            _ => unreachable!("setup built from these params"),
        }
        match self.seed {
            Some(seed) => {
                out.push(1);
                out.extend_from_slice(&seed.to_be_bytes());
            }
            None => out.push(0),
        }
        encode_frame(FrameKind::Setup, &out)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let frame = decode_frame(bytes)?;
        if frame.kind != FrameKind::Setup {
            return Err(Error::param(format!("expected a setup frame, got {:?}", frame.kind)));
        }
        let mut r = Reader::new(&frame.payload);
        let tag = r.u8()?;
        let p = r.u64()?;
        let pm = BigUint::from(p);
        let protocol = match tag {
            1 => {
                let rows = r.u32()? as usize;
                let cols = r.u32()? as usize;
                let mut next = || -> Result<Rows> { rows_of(&r.matrix(&pm)?) };
                let (base, x, y) = (next()?, next()?, next()?);
                ProtocolParams::Rmpf { p, rows, cols, base, x, y }
            }
            2 => {
                let dim = r.u32()? as usize;
                let exp_max = r.u64()?;
                let rounds = r.u32()? as usize;
                let sigma = i128::from_be_bytes(r.array::<16>()?);
                let hash_input = match r.u8()? {
                    0 => HashInputName::KeyList,
                    1 => HashInputName::TranscriptAndKeys,
                    other => return Err(Error::param(format!("unknown hash input tag {other}"))),
                };
                let mut next = || -> Result<Rows> { rows_of(&r.matrix(&pm)?) };
                let (w, base_xu, base_yv) = (next()?, next()?, next()?);
                ProtocolParams::Rdmpf {
                    p,
                    dim,
                    exp_max,
                    rounds,
                    sigma,
                    hash_input,
                    w,
                    base_xu,
                    base_yv,
                }
            }
            other => return Err(Error::param(format!("unknown protocol tag {other}"))),
        };
        let seed = match r.u8()? {
            0 => None,
            _ => Some(r.u64()?),
        };
        r.finish()?;
        Ok(Self::new(protocol, seed))
    }

    /// Writes `path` as JSON and `path` + `.bin` as the binary mirror.
    pub fn write_files(&self, path: &Path) -> Result<()> {
        let cannot = |e: std::io::Error| Error::param(format!("cannot write {}: {e}", path.display()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(cannot)?;
        }
        fs::write(path, self.to_json()? + "\n").map_err(cannot)?;
        fs::write(binary_path(path), self.to_binary()?).map_err(cannot)?;
        Ok(())
    }

    /// Loads either form, detected by the frame magic.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .map_err(|e| Error::param(format!("cannot read {}: {e}", path.display())))?;
        if bytes.starts_with(&MAGIC) {
            Self::from_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes).map_err(|_| Error::param("parameter file is not UTF-8"))?;
            Self::from_json(&text)
        }
    }
}

pub fn binary_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".bin");
    name.into()
}
