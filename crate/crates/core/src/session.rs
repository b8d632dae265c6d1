//! Runs a full handshake or KEM exchange for one party over a [`Channel`].

use num_bigint::BigUint;
use rand::Rng;

use crate::encoding::matrix_bytes;
use crate::error::{Error, Result};
use crate::kem::{
    encapsulate_with, hmac512, kem_decapsulate, BobState, KemContext, KemMessage, SharedKey, NONCE_LEN,
    TAG_LEN,
};
use crate::matrix::Matrix;
use crate::params::Setup;
use crate::rdmpf::{RdmpfParty, RdmpfSetup, Role, SessionOutcome};
use crate::rmpf::{rmpf_derive_key, rmpf_keygen, rmpf_keygen_with, RmpfPrivate, RmpfSetup};
use crate::token::Token;
use crate::transport::Channel;
use crate::wire::{decode_matrices, encode_matrices, Frame, FrameKind};

/// Fixed secrets, used only for reproducing published runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Injection {
    #[default]
    None,
    /// Protocol 1 scalars `(lambda, omega)`.
    Rmpf { lambda: u64, omega: u64 },
    /// Protocol 2 `(left, right)` exponents, one pair per round.
    Rdmpf(Vec<(u64, u64)>),
}

#[derive(Debug, Clone)]
pub enum HandshakeOutput {
    Rmpf { token: Token, peer_token: Token, key: Matrix },
    Rdmpf(SessionOutcome),
}

impl HandshakeOutput {
    /// The bytes a caller should treat as the shared secret: the canonical
    /// key matrix for the rectangular protocol, the 64-byte session digest
    /// for the rank-deficient one.
    pub fn key_bytes(&self) -> Result<Vec<u8>> {
        match self {
            HandshakeOutput::Rmpf { key, .. } => matrix_bytes(key),
            HandshakeOutput::Rdmpf(outcome) => Ok(outcome.key.as_bytes().to_vec()),
        }
    }

    pub fn key_matrices(&self) -> Vec<&Matrix> {
        match self {
            HandshakeOutput::Rmpf { key, .. } => vec![key],
            HandshakeOutput::Rdmpf(outcome) => outcome.round_keys.iter().collect(),
        }
    }
}

/// Receives one frame, turning a peer `Error` frame into [`Error::Peer`].
pub fn expect_frame<C: Channel + ?Sized>(channel: &mut C, kind: FrameKind) -> Result<Vec<u8>> {
    let frame = channel.recv()?;
    match frame.kind {
        k if k == kind => Ok(frame.payload),
        FrameKind::Error => Err(Error::Peer(String::from_utf8_lossy(&frame.payload).into_owned())),
        other => Err(Error::protocol(format!("expected a {kind:?} frame, got {other:?}"))),
    }
}

/// Runs `body`; if it fails with anything but a transport problem, tells the
/// peer before returning the error.
fn reporting<C, T>(channel: &mut C, body: impl FnOnce(&mut C) -> Result<T>) -> Result<T>
where
    C: Channel + ?Sized,
{
    let result = body(channel);
    if let Err(e) = &result {
        if !matches!(e, Error::Transport(_) | Error::Timeout(_) | Error::Peer(_)) {
            let _ = channel.send(&Frame::error(&e.to_string()));
        }
    }
    result
}

/// Alice sends first and then waits; Bob waits and then replies.
fn swap<C: Channel + ?Sized>(channel: &mut C, role: Role, kind: FrameKind, payload: Vec<u8>) -> Result<Vec<u8>> {
    match role {
        Role::Alice => {
            channel.send(&Frame::new(kind, payload))?;
            expect_frame(channel, kind)
        }
        Role::Bob => {
            let peer = expect_frame(channel, kind)?;
            channel.send(&Frame::new(kind, payload))?;
            Ok(peer)
        }
    }
}

fn rmpf_party<R: Rng + ?Sized>(setup: &RmpfSetup, rng: &mut R, injection: &Injection) -> Result<(RmpfPrivate, Token)> {
    match injection {
        Injection::None => rmpf_keygen(setup, rng),
        Injection::Rmpf { lambda, omega } => rmpf_keygen_with(setup, BigUint::from(*lambda), BigUint::from(*omega)),
        Injection::Rdmpf(_) => Err(Error::param("round exponents given for the rectangular protocol")),
    }
}

fn rdmpf_party<R: Rng + ?Sized>(
    setup: &RdmpfSetup,
    role: Role,
    rng: &mut R,
    injection: &Injection,
) -> Result<RdmpfParty> {
    match injection {
        Injection::None => RdmpfParty::start(setup, role, rng),
        Injection::Rdmpf(pairs) => RdmpfParty::from_exponents(setup, role, pairs),
        Injection::Rmpf { .. } => Err(Error::param("scalar secrets given for the rank-deficient protocol")),
    }
}

/// Token list from a `TokenList` payload, checked against the setup.
fn token_values(payload: &[u8], setup: &RdmpfSetup) -> Result<Vec<BigUint>> {
    let matrices = decode_matrices(payload, setup.params().p())?;
    if matrices.len() != setup.rounds() || matrices.iter().any(|m| m.rows() != setup.dim() || m.cols() != setup.dim()) {
        return Err(Error::protocol(format!(
            "peer sent {} token matrices, expected {} of size {d}x{d}",
            matrices.len(),
            setup.rounds(),
            d = setup.dim()
        )));
    }
    Ok(matrices.iter().flat_map(|m| m.entries().iter().cloned()).collect())
}

/// One party's handshake: generate, exchange one `TokenList` frame each way,
/// derive.
pub fn run_handshake<C, R>(
    channel: &mut C,
    role: Role,
    setup: &Setup,
    rng: &mut R,
    injection: &Injection,
) -> Result<HandshakeOutput>
where
    C: Channel + ?Sized,
    R: Rng + ?Sized,
{
    reporting(channel, |channel| match setup {
        Setup::Rmpf(setup) => {
            let (private, token) = rmpf_party(setup, rng, injection)?;
            let payload = encode_matrices(&[token.matrix()])?;
            let reply = swap(channel, role, FrameKind::TokenList, payload)?;
            let mut matrices = decode_matrices(&reply, setup.params().p())?;
            if matrices.len() != 1 {
                return Err(Error::protocol(format!("peer sent {} token matrices, expected 1", matrices.len())));
            }
            let peer_token = Token::new(matrices.remove(0));
            let key = rmpf_derive_key(&private, &peer_token, setup)?;
            Ok(HandshakeOutput::Rmpf { token, peer_token, key })
        }
        Setup::Rdmpf(setup) => {
            let party = rdmpf_party(setup, role, rng, injection)?;
            let tokens: Vec<&Matrix> = party.tokens().iter().map(Token::matrix).collect();
            let payload = encode_matrices(&tokens)?;
            let reply = swap(channel, role, FrameKind::TokenList, payload)?;
            let peer = token_values(&reply, setup)?;
            Ok(HandshakeOutput::Rdmpf(party.finish(&peer)?))
        }
    })
}

const CONFIRM_BOB: &[u8] = b"mpfkap key confirmation: bob";
const CONFIRM_ALICE: &[u8] = b"mpfkap key confirmation: alice";

fn confirm_tag(key: &SharedKey, role: Role) -> [u8; TAG_LEN] {
    hmac512(
        key,
        match role {
            Role::Alice => CONFIRM_ALICE,
            Role::Bob => CONFIRM_BOB,
        },
    )
}

fn tags_equal(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn check_confirm<C: Channel + ?Sized>(channel: &mut C, key: &SharedKey, peer: Role) -> Result<()> {
    let tag = expect_frame(channel, FrameKind::KeyConfirm)?;
    if !tags_equal(&tag, &confirm_tag(key, peer)) {
        return Err(Error::protocol("key confirmation failed"));
    }
    Ok(())
}

/// One party's KEM exchange:
///
/// ```text
/// Bob   -> Alice  KemCloseB     masked token list
/// Alice -> Bob    KemEncapMsg   encap || eta_m || masked token list
/// Bob   -> Alice  KeyConfirm    HMAC(K, bob label)
/// Alice -> Bob    KeyConfirm    HMAC(K, alice label)
/// ```
///
/// The returned key has been confirmed by the peer.
pub fn run_kem<C, R>(
    channel: &mut C,
    role: Role,
    setup: &RdmpfSetup,
    ctx: &KemContext,
    rng: &mut R,
    injection: &Injection,
) -> Result<SharedKey>
where
    C: Channel + ?Sized,
    R: Rng + ?Sized,
{
    reporting(channel, |channel| match role {
        Role::Bob => {
            let party = rdmpf_party(setup, Role::Bob, rng, injection)?;
            let (state, close_b) = BobState::with_party(ctx, party)?;
            channel.send(&Frame::new(FrameKind::KemCloseB, close_b))?;
            let message = KemMessage::from_bytes(&expect_frame(channel, FrameKind::KemEncapMsg)?)?;
            let key = kem_decapsulate(&state, &message)?;
            channel.send(&Frame::new(FrameKind::KeyConfirm, confirm_tag(&key, Role::Bob).to_vec()))?;
            check_confirm(channel, &key, Role::Alice)?;
            Ok(key)
        }
        Role::Alice => {
            let close_b = expect_frame(channel, FrameKind::KemCloseB)?;
            let mut eta_m = [0u8; NONCE_LEN];
            rng.fill(&mut eta_m[..]);
            let mut key = [0u8; 64];
            rng.fill(&mut key[..]);
            let party = rdmpf_party(setup, Role::Alice, rng, injection)?;
            let (key, message) = encapsulate_with(ctx, party, &close_b, eta_m, key)?;
            channel.send(&Frame::new(FrameKind::KemEncapMsg, message.to_bytes()))?;
            check_confirm(channel, &key, Role::Bob)?;
            channel.send(&Frame::new(FrameKind::KeyConfirm, confirm_tag(&key, Role::Alice).to_vec()))?;
            Ok(key)
        }
    })
}
