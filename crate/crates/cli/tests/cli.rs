use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_mpfkap");

const GOLDEN: &str = "549c7058752f9f968d168197c52c7ad4765e58e96edee1041b2f110cb7cc9bc6\
1100fb41b5b9638088a2f9eff3ed973a45b179a982872d770f23a9bc6569d2f3";

fn cmd(args: &[&str]) -> Command {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("MPFKAP_TEST_SEED").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    cmd(args).output().unwrap()
}

fn spawn(args: &[&str]) -> Child {
    cmd(args).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn key_line(o: &Output) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("key: "))
        .unwrap_or_else(|| panic!("no key line in {:?}", stdout(o)))
        .to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn setup_rdmpf(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = dir.join(name);
    let mut args = vec!["setup", "--protocol", "rdmpf", "--p", "65537", "--dim", "4", "--rounds", "2", "--seed", "11"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", path(&out)]);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path(&out).to_string()
}

#[test]
fn seeded_setup_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = setup_rdmpf(dir.path(), "a.json", &[]);
    let b = setup_rdmpf(dir.path(), "b.json", &[]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(format!("{a}.bin")).unwrap(), std::fs::read(format!("{b}.bin")).unwrap());
    let c = setup_rdmpf(dir.path(), "c.json", &["--sigma", "-5"]);
    let json = std::fs::read_to_string(c).unwrap();
    assert!(json.contains("\"sigma\": -5"), "{json}");
}

#[test]
fn setup_rejects_wide_rectangles_and_warns_below_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["setup", "--protocol", "rmpf", "--p", "7", "--rows", "2", "--cols", "2", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = run(&["setup", "--protocol", "rmpf", "--p", "65537", "--rows", "5", "--cols", "3", "--out", path(&out)]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning") && err.contains("64"), "{err}");

    let o = run(&["setup", "--protocol", "rdmpf", "--p", "65536", "--dim", "3", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn published_rdmpf_run_over_files() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    assert!(run(&["setup", "--fixture", "rdmpf-published", "--out", path(&params)]).status.success());
    let frames = dir.path().join("frames");
    let bin = format!("{}.bin", path(&params));
    let alice = spawn(&[
        "handshake", "--params", path(&params), "--role", "alice", "--file-dir", path(&frames),
        "--test-mode", "--inject-exponents", "4267,4651;6171,2414", "--dump",
    ]);
    let bob = run(&[
        "handshake", "--params", &bin, "--role", "bob", "--file-dir", path(&frames),
        "--test-mode", "--inject-exponents", "6066,8472;7574,1456",
    ]);
    let alice = alice.wait_with_output().unwrap();
    assert!(alice.status.success() && bob.status.success());
    assert_eq!(key_line(&alice), GOLDEN);
    assert_eq!(key_line(&bob), GOLDEN);
    let dump = stdout(&alice);
    assert!(dump.contains("round 1 key:\n20743 10836 64775 35222 44472"), "{dump}");
    assert!(dump.contains("19481 30394 40594 46821 12282"), "{dump}");
}

#[test]
fn published_rmpf_run_over_files() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    assert!(run(&["setup", "--fixture", "rmpf-published", "--out", path(&params)]).status.success());
    let frames = dir.path().join("frames");
    let alice = spawn(&[
        "handshake", "--params", path(&params), "--role", "alice", "--file-dir", path(&frames),
        "--test-mode", "--inject-scalars", "60308,36605",
    ]);
    let bob = run(&[
        "handshake", "--params", path(&params), "--role", "bob", "--file-dir", path(&frames),
        "--test-mode", "--inject-scalars", "25401,64763",
    ]);
    let alice = alice.wait_with_output().unwrap();
    assert!(alice.status.success() && bob.status.success());
    assert_eq!(key_line(&alice), key_line(&bob));
}

#[test]
fn tcp_and_file_sessions_agree() {
    let dir = tempfile::tempdir().unwrap();
    let params = setup_rdmpf(dir.path(), "p.json", &[]);
    let port = free_port().to_string();
    let listen = format!("127.0.0.1:{port}");
    let common = ["--params", params.as_str(), "--test-mode"];

    let mut a_args = vec!["handshake", "--role", "alice", "--listen", &listen];
    a_args.extend_from_slice(&common);
    let alice = cmd(&a_args).env("MPFKAP_TEST_SEED", "42").stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    let mut b_args = vec!["handshake", "--role", "bob", "--connect", &listen];
    b_args.extend_from_slice(&common);
    let bob = cmd(&b_args).env("MPFKAP_TEST_SEED", "42").output().unwrap();
    let alice = alice.wait_with_output().unwrap();
    assert!(alice.status.success() && bob.status.success(), "{}", String::from_utf8_lossy(&bob.stderr));
    let tcp_key = key_line(&alice);
    assert_eq!(tcp_key, key_line(&bob));

    let frames = dir.path().join("frames");
    let mut a_args = vec!["handshake", "--role", "alice", "--file-dir", path(&frames)];
    a_args.extend_from_slice(&common);
    let alice = cmd(&a_args).env("MPFKAP_TEST_SEED", "42").stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    let mut b_args = vec!["handshake", "--role", "bob", "--file-dir", path(&frames)];
    b_args.extend_from_slice(&common);
    let bob = cmd(&b_args).env("MPFKAP_TEST_SEED", "42").output().unwrap();
    let alice = alice.wait_with_output().unwrap();
    assert_eq!(key_line(&alice), tcp_key);
    assert_eq!(key_line(&bob), tcp_key);
}

#[test]
fn absent_peer_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let params = setup_rdmpf(dir.path(), "p.json", &[]);
    let frames = dir.path().join("frames");
    let o = run(&["handshake", "--params", &params, "--role", "bob", "--file-dir", path(&frames), "--timeout-ms", "200"]);
    assert_eq!(o.status.code(), Some(4));
    let addr = format!("127.0.0.1:{}", free_port());
    let o = run(&["handshake", "--params", &params, "--role", "alice", "--listen", &addr, "--timeout-ms", "200"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn injection_requires_test_mode() {
    let dir = tempfile::tempdir().unwrap();
    let params = setup_rdmpf(dir.path(), "p.json", &[]);
    let frames = dir.path().join("frames");
    let o = run(&[
        "handshake", "--params", &params, "--role", "bob", "--file-dir", path(&frames),
        "--inject-exponents", "1,2;3,4",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

fn kem_pair(dir: &Path, params: &str, eta_a: &Path, eta_b: &Path) -> (Output, Output) {
    let frames = dir.join("kem");
    let (ka, kb) = (dir.join("k.alice"), dir.join("k.bob"));
    let alice = spawn(&[
        "kem", "--params", params, "--role", "alice", "--file-dir", path(&frames), "--eta0", path(eta_a),
        "--auth-a", "alice@example", "--auth-b", "bob@example", "--key-out", path(&ka), "--timeout-ms", "5000",
    ]);
    let bob = run(&[
        "kem", "--params", params, "--role", "bob", "--file-dir", path(&frames), "--eta0", path(eta_b),
        "--auth-a", "alice@example", "--auth-b", "bob@example", "--key-out", path(&kb), "--timeout-ms", "5000",
    ]);
    (alice.wait_with_output().unwrap(), bob)
}

#[test]
fn kem_loopback_and_nonce_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let params = setup_rdmpf(dir.path(), "p.json", &[]);
    let eta = dir.path().join("eta0");
    std::fs::write(&eta, [0x5a; 64]).unwrap();
    let (a, b) = kem_pair(dir.path(), &params, &eta, &eta);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    assert_eq!(key_line(&a), key_line(&b));
    let ka = std::fs::read(dir.path().join("k.alice")).unwrap();
    assert_eq!(ka.len(), 64);
    assert_eq!(ka, std::fs::read(dir.path().join("k.bob")).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let params = setup_rdmpf(dir.path(), "p.json", &[]);
    let (ea, eb) = (dir.path().join("ea"), dir.path().join("eb"));
    std::fs::write(&ea, [1; 64]).unwrap();
    std::fs::write(&eb, [2; 64]).unwrap();
    let (a, b) = kem_pair(dir.path(), &params, &ea, &eb);
    assert_eq!((a.status.code(), b.status.code()), (Some(3), Some(3)));
    assert!(!dir.path().join("k.alice").exists() && !dir.path().join("k.bob").exists());
}

#[test]
fn kem_rejects_short_nonce() {
    let dir = tempfile::tempdir().unwrap();
    let params = setup_rdmpf(dir.path(), "p.json", &[]);
    let eta = dir.path().join("eta0");
    std::fs::write(&eta, [1; 63]).unwrap();
    let o = run(&[
        "kem", "--params", &params, "--role", "bob", "--file-dir", path(&dir.path().join("f")), "--eta0", path(&eta),
        "--auth-a", "a", "--auth-b", "b",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn vectors_and_bench_commands() {
    let o = run(&["vectors"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 failed"));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = run(&["bench", "--trials", "10", "--point", "3,997,100", "--point", "4,997,100", "--csv", path(&csv)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("dim,p,expMax,trials,mean_s,ratio_vs_baseline\n"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(run(&["bench", "--trials", "3"]).status.code(), Some(2));
}
