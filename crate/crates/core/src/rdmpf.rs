//! Multi-round key agreement over rank-deficient square matrices.
//!
//! Every round each party raises the two shared rank-deficient bases to
//! secret powers (in `Z_{p-1}`), applies the double-sided power action to the
//! full-rank nucleus `W`, and publishes the result. All round tokens travel as
//! one concatenated list; each side then derives the per-round keys from the
//! peer's list and hashes the concatenated keys into a 512-bit session key.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::Rng;
use sha3::{Digest, Sha3_512};

use crate::action::double_action;
use crate::encoding::canonical_bytes;
use crate::error::{Error, Result};
use crate::field::{reduce_signed, uniform_range, FieldParams};
use crate::matrix::{mat_pow_mod, nilpotent_factor, passes_order_probe, rank_mod_p, Matrix};
use crate::sample::{sample_matrix, DependentRow, SampleMode};
use crate::token::Token;

/// Consecutive zero-token draws tolerated before a setup is declared degenerate.
pub const MAX_ROUND_RESTARTS: u32 = 64;

/// Exponents probed by the base-order smoke check.
const ORDER_PROBES: [u64; 5] = [2, 3, 4, 5, 6];
const GENERATE_ATTEMPTS: usize = 64;

/// What the session key digest is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SessionHashInput {
    /// The concatenated per-round keys.
    #[default]
    KeyList,
    /// Alice's token list, then Bob's token list, then the key list. Binds the
    /// public transcript into the key.
    TranscriptAndKeys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        })
    }
}

/// Shared public parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdmpfSetup {
    params: FieldParams,
    w: Matrix,
    base_xu: Matrix,
    base_yv: Matrix,
    exp_max: BigUint,
    rounds: usize,
    sigma: BigUint,
    hash_input: SessionHashInput,
}

impl RdmpfSetup {
    pub fn new(
        params: FieldParams,
        w: Matrix,
        base_xu: Matrix,
        base_yv: Matrix,
        exp_max: BigUint,
        rounds: usize,
    ) -> Result<Self> {
        let dim = w.rows();
        let p = params.p().clone();
        for (name, mat) in [("W", &w), ("BaseXU", &base_xu), ("BaseYV", &base_yv)] {
            if mat.rows() != dim || mat.cols() != dim {
                return Err(Error::param(format!(
                    "{name} is {}x{}, expected {dim}x{dim}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if *mat.modulus() != p {
                return Err(Error::param(format!("{name} is not reduced modulo p")));
            }
        }
        if rank_mod_p(&w, &p)?.rank != dim {
            return Err(Error::param("W must have full rank"));
        }
        for (name, mat) in [("BaseXU", &base_xu), ("BaseYV", &base_yv)] {
            if rank_mod_p(mat, &p)?.rank >= dim {
                return Err(Error::param(format!("{name} must be rank-deficient")));
            }
            let exponents = mat.with_modulus(params.exp_modulus())?;
            if let Some(g) = nilpotent_factor(&exponents, params.exp_modulus())? {
                return Err(Error::param(format!(
                    "{name} is nilpotent modulo {g}, a factor of p - 1; its powers lose those exponent bits"
                )));
            }
        }
        if exp_max < BigUint::from(2u32) {
            return Err(Error::param("expMax must be at least 2"));
        }
        if rounds == 0 {
            return Err(Error::param("rounds must be at least 1"));
        }
        Ok(Self {
            params,
            w,
            base_xu,
            base_yv,
            exp_max,
            rounds,
            sigma: BigUint::one(),
            hash_input: SessionHashInput::default(),
        })
    }

    /// Samples a zero-free full-rank `W` and two rank-deficient bases (one
    /// duplicated row each) whose powers are not trivially periodic.
    pub fn generate<R: Rng + ?Sized>(
        params: FieldParams,
        dim: usize,
        exp_max: BigUint,
        rounds: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("dim must be at least 2"));
        }
        let p = params.p().clone();
        let q = params.exp_modulus().clone();
        let w = (0..GENERATE_ATTEMPTS)
            .map(|_| sample_matrix(dim, dim, &p, rng, SampleMode::UnitEntries))
            .find(|m| matches!(m, Ok(m) if rank_mod_p(m, &p).map(|r| r.rank == dim).unwrap_or(false)))
            .ok_or_else(|| Error::param("could not sample a full-rank W"))??;
        let mut base = || -> Result<Matrix> {
            for _ in 0..GENERATE_ATTEMPTS {
                let m = sample_matrix(dim, dim, &p, rng, SampleMode::RankDeficient(DependentRow::Duplicate))?;
                if passes_order_probe(&m, &q, &ORDER_PROBES)? && nilpotent_factor(&m.with_modulus(&q)?, &q)?.is_none() {
                    return Ok(m);
                }
            }
            Err(Error::param("could not sample a base with a non-trivial power period"))
        };
        let (base_xu, base_yv) = (base()?, base()?);
        Self::new(params, w, base_xu, base_yv, exp_max, rounds)
    }

    /// Sets the shared exponent scale, reduced modulo `p - 1`.
    pub fn with_sigma(mut self, sigma: &BigUint) -> Self {
        self.sigma = sigma % self.params.exp_modulus();
        self
    }

    /// Sets a signed exponent scale, reduced into `[0, p-1)`.
    pub fn with_signed_sigma(self, sigma: i64) -> Self {
        let reduced = reduce_signed(sigma, self.params.exp_modulus());
        self.with_sigma(&reduced)
    }

    pub fn with_hash_input(mut self, hash_input: SessionHashInput) -> Self {
        self.hash_input = hash_input;
        self
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn base_xu(&self) -> &Matrix {
        &self.base_xu
    }

    pub fn base_yv(&self) -> &Matrix {
        &self.base_yv
    }

    pub fn exp_max(&self) -> &BigUint {
        &self.exp_max
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn sigma(&self) -> &BigUint {
        &self.sigma
    }

    pub fn hash_input(&self) -> SessionHashInput {
        self.hash_input
    }

    /// Number of values in one party's concatenated token list.
    pub fn token_list_len(&self) -> usize {
        self.rounds * self.dim() * self.dim()
    }

    pub fn floor_warnings(&self) -> Vec<String> {
        let mut out = crate::rmpf::floor_warnings(self.params.p(), self.dim());
        let shared = self.sigma.gcd(self.params.exp_modulus());
        if !shared.is_one() {
            out.push(format!("sigma shares the factor {shared} with p-1; keys lose entropy"));
        }
        out
    }
}

/// `Q_ij = prod_k prod_l W_kl ^ (sigma * X_ik * Y_lj mod (p-1)) (mod p)` over
/// square matrices of one dimension.
pub fn rdmpf(xe: &Matrix, w: &Matrix, ye: &Matrix, sigma: &BigUint) -> Result<Matrix> {
    let dim = w.rows();
    for m in [xe, w, ye] {
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::param(format!(
                "all matrices must be {dim}x{dim}, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
    }
    double_action(xe, w, ye, sigma, dim)
}

/// One round's secret exponents and the powered bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdmpfRoundPrivate {
    pub rand_left: BigUint,
    pub rand_right: BigUint,
    /// `BaseXU ^ rand_left mod (p-1)`
    pub left: Matrix,
    /// `BaseYV ^ rand_right mod (p-1)`
    pub right: Matrix,
}

/// Builds a round from given exponents. Returns [`Error::RestartRequired`]
/// when the resulting token has a zero entry.
pub fn rdmpf_round_keygen_with(
    setup: &RdmpfSetup,
    rand_left: BigUint,
    rand_right: BigUint,
) -> Result<(RdmpfRoundPrivate, Token)> {
    let q = setup.params.exp_modulus();
    let left = mat_pow_mod(&setup.base_xu, &rand_left, q)?;
    let right = mat_pow_mod(&setup.base_yv, &rand_right, q)?;
    let token = Token::new(rdmpf(&left, &setup.w, &right, &setup.sigma)?);
    token.ensure_zero_free()?;
    Ok((
        RdmpfRoundPrivate {
            rand_left,
            rand_right,
            left,
            right,
        },
        token,
    ))
}

/// Draws both exponents from `[1, expMax]`, restarting the round while the
/// token contains a zero.
pub fn rdmpf_round_keygen<R: Rng + ?Sized>(
    setup: &RdmpfSetup,
    rng: &mut R,
) -> Result<(RdmpfRoundPrivate, Token)> {
    let low = BigUint::one();
    let high = &setup.exp_max + 1u32;
    for attempt in 0..MAX_ROUND_RESTARTS {
        let rand_left = uniform_range(rng, &low, &high);
        let rand_right = uniform_range(rng, &low, &high);
        match rdmpf_round_keygen_with(setup, rand_left, rand_right) {
            Err(Error::RestartRequired) => {
                log::debug!("round restarted after zero token (attempt {})", attempt + 1);
            }
            other => return other,
        }
    }
    Err(Error::DegenerateSetup(MAX_ROUND_RESTARTS))
}

pub fn rdmpf_round_key(private: &RdmpfRoundPrivate, peer: &Token, setup: &RdmpfSetup) -> Result<Matrix> {
    let t = peer.matrix();
    if t.rows() != setup.dim() || t.cols() != setup.dim() || t.modulus() != setup.params.p() {
        return Err(Error::protocol("peer token has the wrong shape or modulus"));
    }
    peer.ensure_zero_free()?;
    rdmpf(&private.left, t, &private.right, &setup.sigma)
}

/// 512-bit session key.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SessionKey(pub [u8; 64]);

impl SessionKey {
    pub fn as_bytes(&self) -> &[u8; 64] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey({}..)", &self.to_hex()[..16])
    }
}

/// The per-session lists, each flattened row-major, rounds in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionTranscript {
    pub token_list: Vec<BigUint>,
    pub peer_token_list: Vec<BigUint>,
    pub key_list: Vec<BigUint>,
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub round_keys: Vec<Matrix>,
    pub transcript: SessionTranscript,
    pub key: SessionKey,
}

/// One party's side of a session: all rounds generated up front, then
/// finished once the peer's concatenated token list arrives.
#[derive(Debug, Clone)]
pub struct RdmpfParty {
    setup: RdmpfSetup,
    role: Role,
    privates: Vec<RdmpfRoundPrivate>,
    tokens: Vec<Token>,
}

impl RdmpfParty {
    pub fn start<R: Rng + ?Sized>(setup: &RdmpfSetup, role: Role, rng: &mut R) -> Result<Self> {
        let (privates, tokens) = (0..setup.rounds)
            .map(|_| rdmpf_round_keygen(setup, rng))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self {
            setup: setup.clone(),
            role,
            privates,
            tokens,
        })
    }

    /// Uses fixed `(left, right)` exponents per round instead of drawing them.
    pub fn from_exponents(setup: &RdmpfSetup, role: Role, exponents: &[(u64, u64)]) -> Result<Self> {
        if exponents.len() != setup.rounds {
            return Err(Error::param(format!(
                "{} exponent pairs given for {} rounds",
                exponents.len(),
                setup.rounds
            )));
        }
        let (privates, tokens) = exponents
            .iter()
            .map(|&(l, r)| rdmpf_round_keygen_with(setup, BigUint::from(l), BigUint::from(r)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self {
            setup: setup.clone(),
            role,
            privates,
            tokens,
        })
    }

    pub fn setup(&self) -> &RdmpfSetup {
        &self.setup
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn privates(&self) -> &[RdmpfRoundPrivate] {
        &self.privates
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// All round tokens concatenated row by row.
    pub fn token_list(&self) -> Vec<BigUint> {
        self.tokens
            .iter()
            .flat_map(|t| t.matrix().entries().iter().cloned())
            .collect()
    }

    /// Parses the peer list round by round, derives each round key and the
    /// session key.
    pub fn finish(&self, peer_list: &[BigUint]) -> Result<SessionOutcome> {
        let setup = &self.setup;
        let expected = setup.token_list_len();
        if peer_list.len() != expected {
            return Err(Error::protocol(format!(
                "peer token list has {} values, expected {expected}",
                peer_list.len()
            )));
        }
        let p = setup.params.p();
        if let Some(bad) = peer_list.iter().find(|v| *v >= p) {
            return Err(Error::protocol(format!("peer token value {bad} is not below p")));
        }
        let dim = setup.dim();
        let round_keys = peer_list
            .chunks_exact(dim * dim)
            .zip(&self.privates)
            .map(|(chunk, private)| {
                let token = Token::new(Matrix::new(dim, dim, chunk.to_vec(), p.clone())?);
                rdmpf_round_key(private, &token, setup)
            })
            .collect::<Result<Vec<_>>>()?;

        let key_list: Vec<BigUint> = round_keys
            .iter()
            .flat_map(|k| k.entries().iter().cloned())
            .collect();
        let transcript = SessionTranscript {
            token_list: self.token_list(),
            peer_token_list: peer_list.to_vec(),
            key_list,
        };
        let key = session_digest(&transcript, self.role, setup.hash_input)?;
        Ok(SessionOutcome {
            round_keys,
            transcript,
            key,
        })
    }
}

fn session_digest(t: &SessionTranscript, role: Role, input: SessionHashInput) -> Result<SessionKey> {
    let mut hasher = Sha3_512::new();
    match input {
        SessionHashInput::KeyList => hasher.update(canonical_bytes(&t.key_list)?),
        SessionHashInput::TranscriptAndKeys => {
            let (a, b) = match role {
                Role::Alice => (&t.token_list, &t.peer_token_list),
                Role::Bob => (&t.peer_token_list, &t.token_list),
            };
            hasher.update(canonical_bytes(a)?);
            hasher.update(canonical_bytes(b)?);
            hasher.update(canonical_bytes(&t.key_list)?);
        }
    }
    Ok(SessionKey(hasher.finalize().into()))
}

/// SHA3-512 of the canonical encoding of a key list.
pub fn key_list_digest(key_list: &[BigUint]) -> Result<SessionKey> {
    Ok(SessionKey(Sha3_512::digest(canonical_bytes(key_list)?).into()))
}

/// Runs one party's whole session. `exchange` sends this party's token list
/// and returns the peer's.
pub fn rdmpf_session<R, F>(setup: &RdmpfSetup, role: Role, rng: &mut R, exchange: F) -> Result<SessionKey>
where
    R: Rng + ?Sized,
    F: FnOnce(Vec<BigUint>) -> Result<Vec<BigUint>>,
{
    let party = RdmpfParty::start(setup, role, rng)?;
    let peer = exchange(party.token_list())?;
    Ok(party.finish(&peer)?.key)
}
