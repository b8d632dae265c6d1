//! Key encapsulation on top of the multi-round rank-deficient agreement.
//!
//! Token lists never travel in the clear: each is XOR-masked with an
//! HMAC-SHA3-512 keystream keyed by the shared root nonce `eta0`. Alice then
//! encapsulates a fresh 512-bit key under the session key she derives.
//!
//! ```text
//! Bob    -> Alice : close_b = tokens_B ^ stream(eta0, auth)
//! Alice  -> Bob   : encap   = K ^ HMAC(session_A, auth ^ eta_m)
//!                   close_a = tokens_A ^ stream(eta0, auth ^ eta_m)
//!                   eta_m
//! ```
//!
//! where `auth = authA || authB`.

use num_bigint::BigUint;
use rand::Rng;
use sha3::{Digest, Sha3_512};

use crate::encoding::{canonical_bytes, decode_values, VALUE_WIDTH};
use crate::error::{Error, Result};
use crate::rdmpf::{RdmpfParty, RdmpfSetup, Role, SessionKey};

/// SHA3-512 rate in bytes.
const HMAC_BLOCK: usize = 72;
pub const TAG_LEN: usize = 64;
pub const NONCE_LEN: usize = 64;
pub const AUTH_LEN: usize = 32;

/// HMAC instantiated with SHA3-512.
pub fn hmac512(key: &[u8], msg: &[u8]) -> [u8; TAG_LEN] {
    let mut block = [0u8; HMAC_BLOCK];
    if key.len() > HMAC_BLOCK {
        block[..TAG_LEN].copy_from_slice(&Sha3_512::digest(key));
    } else {
        block[..key.len()].copy_from_slice(key);
    }
    let pad = |byte: u8| block.map(|b| b ^ byte);

    let inner = Sha3_512::new()
        .chain_update(pad(0x36))
        .chain_update(msg)
        .finalize();
    Sha3_512::new()
        .chain_update(pad(0x5c))
        .chain_update(inner)
        .finalize()
        .into()
}

/// `HMAC(key, context || 0) || HMAC(key, context || 1) || ...` truncated to
/// `length`; counters are 8-byte big-endian.
pub fn mask_stream(key: &[u8], context: &[u8], length: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(length + TAG_LEN);
    let mut msg = Vec::with_capacity(context.len() + 8);
    let mut counter: u64 = 0;
    while out.len() < length {
        msg.clear();
        msg.extend_from_slice(context);
        msg.extend_from_slice(&counter.to_be_bytes());
        out.extend_from_slice(&hmac512(key, &msg));
        counter += 1;
    }
    out.truncate(length);
    out
}

fn xor_in_place(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn xor64(a: &[u8; 64], b: &[u8; 64]) -> [u8; 64] {
    std::array::from_fn(|i| a[i] ^ b[i])
}

/// Shared KEM configuration: the secret root nonce and both public tags.
#[derive(Clone, PartialEq, Eq)]
pub struct KemContext {
    pub eta0: [u8; NONCE_LEN],
    pub auth_a: [u8; AUTH_LEN],
    pub auth_b: [u8; AUTH_LEN],
}

impl std::fmt::Debug for KemContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KemContext")
            .field("eta0", &"<secret>")
            .field("auth_a", &hex(&self.auth_a))
            .field("auth_b", &hex(&self.auth_b))
            .finish()
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl KemContext {
    pub fn new(eta0: [u8; NONCE_LEN], auth_a: [u8; AUTH_LEN], auth_b: [u8; AUTH_LEN]) -> Self {
        Self { eta0, auth_a, auth_b }
    }

    /// Builds a context from a raw nonce slice, checking its length.
    pub fn from_slices(eta0: &[u8], auth_a: &[u8], auth_b: &[u8]) -> Result<Self> {
        let arr = |name: &str, s: &[u8], n: usize| {
            if s.len() == n {
                Ok(s.to_vec())
            } else {
                Err(Error::param(format!("{name} must be {n} bytes, got {}", s.len())))
            }
        };
        Ok(Self {
            eta0: arr("eta0", eta0, NONCE_LEN)?.try_into().expect("len"),
            auth_a: arr("authA", auth_a, AUTH_LEN)?.try_into().expect("len"),
            auth_b: arr("authB", auth_b, AUTH_LEN)?.try_into().expect("len"),
        })
    }

    /// `authA || authB`
    pub fn auth(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..AUTH_LEN].copy_from_slice(&self.auth_a);
        out[AUTH_LEN..].copy_from_slice(&self.auth_b);
        out
    }
}

/// Alice's reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KemMessage {
    pub encap: [u8; TAG_LEN],
    pub close_a: Vec<u8>,
    pub eta_m: [u8; NONCE_LEN],
}

/// Bob's pending state between `kem_initiate` and `kem_decapsulate`.
#[derive(Debug, Clone)]
pub struct BobState {
    ctx: KemContext,
    party: RdmpfParty,
}

/// 512-bit encapsulated key.
pub type SharedKey = [u8; 64];

fn token_bytes(party: &RdmpfParty) -> Result<Vec<u8>> {
    canonical_bytes(&party.token_list())
}

fn unmask_tokens(masked: &[u8], stream: &[u8], setup: &RdmpfSetup) -> Result<Vec<BigUint>> {
    let expected = setup.token_list_len() * VALUE_WIDTH;
    if masked.len() != expected {
        return Err(Error::protocol(format!(
            "masked token list is {} bytes, expected {expected}",
            masked.len()
        )));
    }
    let mut plain = masked.to_vec();
    xor_in_place(&mut plain, stream);
    decode_values(&plain)
}

/// Bob: generate every round and mask the token list.
pub fn kem_initiate<R: Rng + ?Sized>(
    ctx: &KemContext,
    setup: &RdmpfSetup,
    rng: &mut R,
) -> Result<(BobState, Vec<u8>)> {
    let party = RdmpfParty::start(setup, Role::Bob, rng)?;
    let mut close_b = token_bytes(&party)?;
    let stream = mask_stream(&ctx.eta0, &ctx.auth(), close_b.len());
    xor_in_place(&mut close_b, &stream);
    Ok((
        BobState {
            ctx: ctx.clone(),
            party,
        },
        close_b,
    ))
}

/// Alice: recover Bob's tokens, run her rounds and encapsulate a random key.
pub fn kem_encapsulate<R: Rng + ?Sized>(
    ctx: &KemContext,
    setup: &RdmpfSetup,
    close_b: &[u8],
    rng: &mut R,
) -> Result<(SharedKey, KemMessage)> {
    let mut eta_m = [0u8; NONCE_LEN];
    rng.fill(&mut eta_m[..]);
    let mut key = [0u8; 64];
    rng.fill(&mut key[..]);
    let party = RdmpfParty::start(setup, Role::Alice, rng)?;
    encapsulate_with(ctx, party, close_b, eta_m, key)
}

/// Encapsulation with a prepared party, nonce and key.
pub fn encapsulate_with(
    ctx: &KemContext,
    party: RdmpfParty,
    close_b: &[u8],
    eta_m: [u8; NONCE_LEN],
    key: SharedKey,
) -> Result<(SharedKey, KemMessage)> {
    let setup = party.setup();
    let auth = ctx.auth();
    let stream_b = mask_stream(&ctx.eta0, &auth, close_b.len());
    let peer_tokens = unmask_tokens(close_b, &stream_b, setup)?;
    let session = party.finish(&peer_tokens)?;

    let bound = xor64(&auth, &eta_m);
    let mut close_a = token_bytes(&party)?;
    let stream_a = mask_stream(&ctx.eta0, &bound, close_a.len());
    xor_in_place(&mut close_a, &stream_a);

    let encap = xor64(&key, &hmac512(session.key.as_bytes(), &bound));
    Ok((key, KemMessage { encap, close_a, eta_m }))
}

/// Bob: recover Alice's tokens, derive the session key and unwrap `K`.
pub fn kem_decapsulate(state: &BobState, message: &KemMessage) -> Result<SharedKey> {
    let bound = xor64(&state.ctx.auth(), &message.eta_m);
    let stream = mask_stream(&state.ctx.eta0, &bound, message.close_a.len());
    let peer_tokens = unmask_tokens(&message.close_a, &stream, state.party.setup())?;
    let SessionKey(session) = state.party.finish(&peer_tokens)?.key;
    Ok(xor64(&message.encap, &hmac512(&session, &bound)))
}

impl BobState {
    pub fn party(&self) -> &RdmpfParty {
        &self.party
    }

    /// Rebuilds the state around an externally prepared party.
    pub fn with_party(ctx: &KemContext, party: RdmpfParty) -> Result<(Self, Vec<u8>)> {
        let mut close_b = token_bytes(&party)?;
        let stream = mask_stream(&ctx.eta0, &ctx.auth(), close_b.len());
        xor_in_place(&mut close_b, &stream);
        Ok((
            Self {
                ctx: ctx.clone(),
                party,
            },
            close_b,
        ))
    }
}

/// Wire layout of [`KemMessage`]: `encap || eta_m || close_a`.
impl KemMessage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TAG_LEN + NONCE_LEN + self.close_a.len());
        out.extend_from_slice(&self.encap);
        out.extend_from_slice(&self.eta_m);
        out.extend_from_slice(&self.close_a);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < TAG_LEN + NONCE_LEN {
            return Err(Error::protocol("encapsulation message is truncated"));
        }
        Ok(Self {
            encap: bytes[..TAG_LEN].try_into().expect("len"),
            eta_m: bytes[TAG_LEN..TAG_LEN + NONCE_LEN].try_into().expect("len"),
            close_a: bytes[TAG_LEN + NONCE_LEN..].to_vec(),
        })
    }
}
