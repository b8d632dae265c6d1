use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha3::{Digest, Sha3_256};

use mpfkap::bench::{bench_rdmpf, bench_report, table1_grid, BenchPoint};
use mpfkap::field::{random_prime, FieldParams};
use mpfkap::kem::{KemContext, NONCE_LEN};
use mpfkap::params::{binary_path, ParamSet, ProtocolParams, Setup};
use mpfkap::rdmpf::{RdmpfSetup, Role, SessionHashInput};
use mpfkap::rmpf::RmpfSetup;
use mpfkap::session::{run_handshake, run_kem, HandshakeOutput, Injection};
use mpfkap::transport::{Channel, FileChannel, TcpChannel};
use mpfkap::{vectors, Error};

const TEST_SEED_VAR: &str = "MPFKAP_TEST_SEED";

#[derive(Parser)]
#[command(name = "mpfkap", version, about = "Matrix power function key agreement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a parameter set and write it as JSON plus a binary mirror.
    Setup(SetupArgs),
    /// Run one side of a key agreement.
    Handshake(HandshakeArgs),
    /// Run one side of a key encapsulation.
    Kem(KemArgs),
    /// Time the double action over a parameter grid.
    Bench(BenchArgs),
    /// Recompute the built-in known-answer values.
    Vectors,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Rmpf,
    Rdmpf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    RmpfPublished,
    RdmpfPublished,
}

#[derive(Clone, Copy, ValueEnum)]
enum HashInputArg {
    KeyList,
    TranscriptAndKeys,
}

#[derive(Args)]
struct SetupArgs {
    #[arg(long, value_enum, required_unless_present = "fixture")]
    protocol: Option<Protocol>,
    /// Prime modulus.
    #[arg(long, conflicts_with = "p_bits")]
    p: Option<u64>,
    /// Draw a random prime of this many bits instead (at most 64).
    #[arg(long)]
    p_bits: Option<u64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    exp_max: u64,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    sigma: i64,
    #[arg(long, value_enum, default_value = "key-list")]
    hash_input: HashInputArg,
    /// Seed for sampling the public matrices.
    #[arg(long)]
    seed: Option<u64>,
    /// Write a built-in published parameter set instead of sampling one.
    #[arg(long, value_enum, conflicts_with_all = ["protocol", "p", "p_bits", "rows", "cols", "dim"])]
    fixture: Option<Fixture>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransportArgs {
    #[arg(long, value_enum)]
    role: RoleArg,
    /// Exchange frames as files in this directory.
    #[arg(long, group = "transport", required = true)]
    file_dir: Option<PathBuf>,
    /// Wait for the peer on this TCP address.
    #[arg(long, group = "transport")]
    listen: Option<SocketAddr>,
    /// Connect to the peer at this TCP address.
    #[arg(long, group = "transport")]
    connect: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// Deterministic randomness from MPFKAP_TEST_SEED; enables secret injection.
    #[arg(long)]
    test_mode: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Alice,
    Bob,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Alice => Role::Alice,
            RoleArg::Bob => Role::Bob,
        }
    }
}

#[derive(Args)]
struct HandshakeArgs {
    /// Parameter file (JSON or binary).
    #[arg(long)]
    params: PathBuf,
    #[command(flatten)]
    transport: TransportArgs,
    /// Write the shared key bytes here.
    #[arg(long)]
    key_out: Option<PathBuf>,
    /// Print the key matrices as well as the key.
    #[arg(long)]
    dump: bool,
    /// Fixed scalars "lambda,omega" for the rectangular protocol (test mode).
    #[arg(long, conflicts_with = "inject_exponents")]
    inject_scalars: Option<String>,
    /// Fixed round exponents "l1,r1;l2,r2;..." for the rank-deficient protocol (test mode).
    #[arg(long)]
    inject_exponents: Option<String>,
}

#[derive(Args)]
struct KemArgs {
    #[arg(long)]
    params: PathBuf,
    #[command(flatten)]
    transport: TransportArgs,
    /// File holding the 64-byte pre-shared nonce.
    #[arg(long)]
    eta0: PathBuf,
    /// Identity of the encapsulating side.
    #[arg(long)]
    auth_a: String,
    /// Identity of the decapsulating side.
    #[arg(long)]
    auth_b: String,
    #[arg(long)]
    key_out: Option<PathBuf>,
    /// Fixed round exponents "l1,r1;l2,r2;..." (test mode).
    #[arg(long)]
    inject_exponents: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Extra grid points "dim,p,expMax"; the default grid is used when absent.
    #[arg(long = "point")]
    points: Vec<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn param_err(msg: impl Into<String>) -> anyhow::Error {
    Error::param(msg).into()
}

fn parse_pair(s: &str) -> anyhow::Result<(u64, u64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| param_err(format!("expected \"a,b\", got {s:?}")))?;
    let num = |v: &str| v.trim().parse::<u64>().map_err(|e| param_err(format!("{v:?}: {e}")));
    Ok((num(a)?, num(b)?))
}

fn print_warnings(setup: &Setup) {
    for w in setup.floor_warnings() {
        eprintln!("warning: {w}");
    }
}

fn cmd_setup(args: SetupArgs) -> anyhow::Result<()> {
    let mut rng = match args.seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed),
        None => ChaCha20Rng::from_entropy(),
    };
    let setup = match (args.fixture, args.protocol) {
        (Some(Fixture::RmpfPublished), _) => Setup::Rmpf(vectors::rmpf::setup()),
        (Some(Fixture::RdmpfPublished), _) => Setup::Rdmpf(vectors::rdmpf::setup()),
        (None, protocol) => {
            let field = match (args.p, args.p_bits) {
                (Some(p), _) => FieldParams::from_u64(p)?,
                (None, bits) => {
                    let bits = bits.unwrap_or(64);
                    if bits > 64 {
                        bail!(param_err("parameter files hold primes of at most 64 bits"));
                    }
                    FieldParams::new(random_prime(bits, &mut rng)?)?
                }
            };
            match protocol.expect("clap requires a protocol") {
                Protocol::Rmpf => {
                    let (Some(rows), Some(cols)) = (args.rows, args.cols) else {
                        bail!(param_err("--rows and --cols are required for rmpf"));
                    };
                    Setup::Rmpf(RmpfSetup::generate(field, rows, cols, &mut rng)?)
                }
                Protocol::Rdmpf => {
                    let dim = args.dim.ok_or_else(|| param_err("--dim is required for rdmpf"))?;
                    let hash = match args.hash_input {
                        HashInputArg::KeyList => SessionHashInput::KeyList,
                        HashInputArg::TranscriptAndKeys => SessionHashInput::TranscriptAndKeys,
                    };
                    let setup = RdmpfSetup::generate(field, dim, args.exp_max.into(), args.rounds, &mut rng)?
                        .with_signed_sigma(args.sigma)
                        .with_hash_input(hash);
                    Setup::Rdmpf(setup)
                }
            }
        }
    };
    print_warnings(&setup);
    let mut set = ParamSet::from_setup(&setup, args.seed)?;
    if let (None, ProtocolParams::Rdmpf { sigma, .. }) = (args.fixture, &mut set.protocol) {
        // keep the sign as given
        *sigma = args.sigma.into();
    }
    set.write_files(&args.out)?;
    println!("wrote {} and {}", args.out.display(), binary_path(&args.out).display());
    Ok(())
}

fn load_setup(path: &Path) -> anyhow::Result<Setup> {
    let setup = ParamSet::load(path)?.to_setup()?;
    print_warnings(&setup);
    Ok(setup)
}

fn open_channel(t: &TransportArgs) -> anyhow::Result<Box<dyn Channel>> {
    let timeout = Duration::from_millis(t.timeout_ms);
    let role = Role::from(t.role);
    Ok(if let Some(dir) = &t.file_dir {
        Box::new(FileChannel::new(dir, role, timeout)?)
    } else if let Some(addr) = t.listen {
        info!("listening on {addr}");
        Box::new(TcpChannel::listen(addr, timeout)?)
    } else if let Some(addr) = &t.connect {
        info!("connecting to {addr}");
        Box::new(TcpChannel::connect(addr.as_str(), timeout)?)
    } else {
        unreachable!("clap requires one transport")
    })
}

fn session_rng(t: &TransportArgs) -> anyhow::Result<ChaCha20Rng> {
    if !t.test_mode {
        return Ok(ChaCha20Rng::from_entropy());
    }
    let seed: u64 = match std::env::var(TEST_SEED_VAR) {
        Ok(v) => v
            .parse()
            .map_err(|e| param_err(format!("{TEST_SEED_VAR}={v:?}: {e}")))?,
        Err(_) => 0,
    };
    warn!("test mode: randomness is derived from {TEST_SEED_VAR}={seed}");
    let stream = match Role::from(t.role) {
        Role::Alice => 0,
        Role::Bob => 1,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok(rng)
}

fn injection(t: &TransportArgs, scalars: Option<&str>, exponents: Option<&str>) -> anyhow::Result<Injection> {
    if (scalars.is_some() || exponents.is_some()) && !t.test_mode {
        bail!(param_err("secret injection requires --test-mode"));
    }
    if let Some(s) = scalars {
        let (lambda, omega) = parse_pair(s)?;
        return Ok(Injection::Rmpf { lambda, omega });
    }
    if let Some(s) = exponents {
        let pairs = s.split(';').map(parse_pair).collect::<anyhow::Result<Vec<_>>>()?;
        return Ok(Injection::Rdmpf(pairs));
    }
    Ok(Injection::None)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_handshake(args: HandshakeArgs) -> anyhow::Result<()> {
    let setup = load_setup(&args.params)?;
    let inject = injection(&args.transport, args.inject_scalars.as_deref(), args.inject_exponents.as_deref())?;
    let mut rng = session_rng(&args.transport)?;
    let mut channel = open_channel(&args.transport)?;
    let out = run_handshake(&mut channel, args.transport.role.into(), &setup, &mut rng, &inject)?;
    let key = out.key_bytes()?;
    if args.dump {
        match &out {
            HandshakeOutput::Rmpf { token, peer_token, key } => {
                println!("token:\n{}", token.matrix());
                println!("peer token:\n{}", peer_token.matrix());
                println!("key matrix:\n{key}");
            }
            HandshakeOutput::Rdmpf(outcome) => {
                for (i, k) in outcome.round_keys.iter().enumerate() {
                    println!("round {} key:\n{k}", i + 1);
                }
            }
        }
    }
    println!("key: {}", hex(&key));
    if let Some(path) = &args.key_out {
        fs::write(path, &key).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_kem(args: KemArgs) -> anyhow::Result<()> {
    let Setup::Rdmpf(setup) = load_setup(&args.params)? else {
        bail!(param_err("key encapsulation needs an rdmpf parameter set"));
    };
    let eta0 = fs::read(&args.eta0).map_err(|e| param_err(format!("cannot read {}: {e}", args.eta0.display())))?;
    if eta0.len() != NONCE_LEN {
        bail!(param_err(format!("eta0 must be {NONCE_LEN} bytes, {} has {}", args.eta0.display(), eta0.len())));
    }
    let ctx = KemContext::from_slices(
        &eta0,
        &Sha3_256::digest(args.auth_a.as_bytes()),
        &Sha3_256::digest(args.auth_b.as_bytes()),
    )?;
    let inject = injection(&args.transport, None, args.inject_exponents.as_deref())?;
    let mut rng = session_rng(&args.transport)?;
    let mut channel = open_channel(&args.transport)?;
    let key = run_kem(&mut channel, args.transport.role.into(), &setup, &ctx, &mut rng, &inject)?;
    println!("key: {}", hex(&key));
    if let Some(path) = &args.key_out {
        fs::write(path, key).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let grid = if args.points.is_empty() {
        table1_grid()
    } else {
        args.points
            .iter()
            .map(|s| {
                let v: Vec<u64> = s
                    .split(',')
                    .map(|x| x.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|e| param_err(format!("{s:?}: {e}")))?;
                match v[..] {
                    [dim, p, e] => Ok(BenchPoint::new(dim as usize, p, e)),
                    _ => Err(param_err(format!("expected \"dim,p,expMax\", got {s:?}"))),
                }
            })
            .collect::<anyhow::Result<Vec<_>>>()?
    };
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let records = bench_rdmpf(&grid, args.trials, &mut rng)?;
    let (csv, text) = bench_report(&records, grid[0])?;
    match &args.csv {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            print!("{text}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_vectors() -> anyhow::Result<()> {
    let checks = vectors::run_all();
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        match &c.detail {
            Some(d) => println!("{status} {} ({d})", c.name),
            None => println!("{status} {}", c.name),
        }
        failed += usize::from(!c.passed);
    }
    println!("{} checks, {failed} failed", checks.len());
    if failed > 0 {
        bail!(Error::protocol(format!("{failed} known-answer checks failed")));
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map_or(1, |e| e.class().exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Setup(a) => cmd_setup(a),
        Command::Handshake(a) => cmd_handshake(a),
        Command::Kem(a) => cmd_kem(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Vectors => cmd_vectors(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
