//! `nilm` — command-line front end for the nilpotent-matrix toy
//! cryptosystem: key generation, encryption, decryption, attacks, the
//! claimed-work estimate, a built-in worked example, and a two-peer TCP
//! demo.
//!
//! Exit codes: 0 success, 2 usage error, 3 crypto/parameter error,
//! 4 I/O error, 5 integrity/decode error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use nilm_core::codec::{
    decrypt_message, digits_of_decimal, digits_to_decimal, encrypt_message, DigitMessage,
};
use nilm_core::cryptanalysis::{
    brute_force_shared_secret, kpa_decrypt, kpa_recover_nilpotent, work_estimate, AttackReport,
    Recovered,
};
use nilm_core::fileformat::{ciphertext_from_bytes, ciphertext_to_bytes, KeyFile};
use nilm_core::keyschedule::{build_shared_key, SchemeParams, SharedMatrixKey};
use nilm_core::modular::{dh_public, dh_shared, DHParams};
use nilm_core::netpeer::{recv_ciphertext, run_handshake, send_ciphertext, Role, DEFAULT_PORT};
use nilm_core::{Ciphertext, Error as CoreError};

#[derive(Parser)]
#[command(name = "nilm", version, about = "Nilpotent-matrix toy cryptosystem", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key file (prime modulus, public base, secret exponent)
    Keygen(KeygenArgs),
    /// Print the public value of a key file
    Pubkey(PubkeyArgs),
    /// Encrypt a message for a peer's public value
    Encrypt(EncryptArgs),
    /// Decrypt a ciphertext file
    Decrypt(DecryptArgs),
    /// Print the claimed work estimate for a parameter set
    Estimate(EstimateArgs),
    /// Known-plaintext attack: recover the secret matrix from one crib
    AttackKpa(AttackKpaArgs),
    /// Exhaustive search over the scalar shared secret
    AttackBrute(AttackBruteArgs),
    /// Run the built-in worked example at tiny parameters
    DemoPaper,
    /// Wait for a peer, run the handshake, then send or receive one message
    PeerListen(PeerListenArgs),
    /// Connect to a peer, run the handshake, then send or receive one message
    PeerConnect(PeerConnectArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("secret_source").args(["secret", "seed"])))]
struct KeygenArgs {
    /// Prime modulus
    #[arg(long)]
    p: u64,
    /// Public base in [2, p-2]
    #[arg(long)]
    x: u64,
    /// Secret exponent in [1, p-1]; drawn at random when omitted
    #[arg(long)]
    secret: Option<u64>,
    /// Seed for the random secret draw (reproducible)
    #[arg(long)]
    seed: Option<u64>,
    /// Output key file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PubkeyArgs {
    /// Key file
    #[arg(long)]
    key: PathBuf,
}

#[derive(Args)]
struct SchemeArgs {
    /// Block dimension n (each block carries n-1 digits)
    #[arg(long)]
    n: usize,
    /// Message radix
    #[arg(long, default_value_t = 256)]
    base: u64,
    /// Conjugator shift epsilon
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Digit offset applied before taking logarithms
    #[arg(long, default_value_t = 1)]
    offset: u32,
}

#[derive(Args)]
#[command(group(ArgGroup::new("message").required(true).args(["in_file", "int"])))]
struct EncryptArgs {
    /// Key file
    #[arg(long)]
    key: PathBuf,
    /// Peer's public value
    #[arg(long)]
    peer: u64,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Message as a byte file (requires base 256)
    #[arg(long = "in", value_name = "BYTES_FILE")]
    in_file: Option<PathBuf>,
    /// Message as a decimal integer of any length
    #[arg(long, value_name = "M")]
    int: Option<String>,
    /// Output ciphertext file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("sink").required(true).args(["out", "print_int"])))]
struct DecryptArgs {
    /// Key file
    #[arg(long)]
    key: PathBuf,
    /// Peer's public value
    #[arg(long)]
    peer: u64,
    /// Ciphertext file
    #[arg(long = "in", value_name = "CT")]
    in_file: PathBuf,
    /// Write plaintext bytes here (requires base 256)
    #[arg(long, value_name = "BYTES_FILE")]
    out: Option<PathBuf>,
    /// Print the plaintext as a decimal integer
    #[arg(long)]
    print_int: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 256)]
    base: u64,
}

#[derive(Args)]
struct AttackKpaArgs {
    /// Ciphertext file
    #[arg(long)]
    cipher: PathBuf,
    /// Known plaintext digits, comma-separated, starting at digit 0
    #[arg(long, value_name = "DIGITS")]
    plain: String,
    /// Emit the report as a single JSON object
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AttackBruteArgs {
    /// Ciphertext file
    #[arg(long)]
    cipher: PathBuf,
    /// Public base of the exchange (the ciphertext carries the rest)
    #[arg(long)]
    x: u64,
    /// Optional crib: known leading plaintext digits, comma-separated
    #[arg(long, value_name = "DIGITS")]
    plain: Option<String>,
    /// Emit the report as a single JSON object
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("message").args(["in_file", "int"])))]
struct PeerSessionArgs {
    /// Key file
    #[arg(long)]
    key: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Send this byte file after the handshake (requires base 256)
    #[arg(long = "in", value_name = "BYTES_FILE")]
    in_file: Option<PathBuf>,
    /// Send this decimal integer after the handshake
    #[arg(long, value_name = "M")]
    int: Option<String>,
    /// When receiving, write the plaintext here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PeerListenArgs {
    #[arg(long, default_value = "0.0.0.0")]
    host: String,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Serve one session and exit
    #[arg(long)]
    once: bool,
    #[command(flatten)]
    session: PeerSessionArgs,
}

#[derive(Args)]
struct PeerConnectArgs {
    #[arg(long)]
    host: String,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[command(flatten)]
    session: PeerSessionArgs,
}

enum CliError {
    Usage(String),
    Io(String, std::io::Error),
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(what, err) => write!(f, "{what}: {err}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(..) => 4,
            CliError::Core(err) => match err {
                CoreError::CorruptCiphertext(_)
                | CoreError::DigitOutOfRange(_)
                | CoreError::ParamMismatch(_)
                | CoreError::TruncatedFrame
                | CoreError::TrailingBytes
                | CoreError::OversizedFrame(_)
                | CoreError::UnknownKind(_) => 5,
                CoreError::ConnectionError(_) => 4,
                _ => 3,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() {
    // Die quietly on a closed pipe (e.g. `nilm ... | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Keygen(args) => cmd_keygen(args),
        Command::Pubkey(args) => cmd_pubkey(args),
        Command::Encrypt(args) => cmd_encrypt(args),
        Command::Decrypt(args) => cmd_decrypt(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::AttackKpa(args) => cmd_attack_kpa(args),
        Command::AttackBrute(args) => cmd_attack_brute(args),
        Command::DemoPaper => cmd_demo_paper(),
        Command::PeerListen(args) => cmd_peer_listen(args),
        Command::PeerConnect(args) => cmd_peer_connect(args),
    }
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Io(format!("reading {}", path.display()), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}", path.display()), e))
}

fn load_key(path: &Path) -> CliResult<KeyFile> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| CliError::Usage(format!("{} is not UTF-8 text", path.display())))?;
    Ok(KeyFile::parse(&text)?)
}

fn load_ciphertext(path: &Path) -> CliResult<Ciphertext> {
    Ok(ciphertext_from_bytes(&read_file(path)?)?)
}

fn parse_digit_list(text: &str) -> CliResult<Vec<u64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("not a digit list entry: {part:?}")))
        })
        .collect()
}

fn parse_decimal(text: &str) -> CliResult<&str> {
    let trimmed = text.trim();
    if trimmed.is_empty() || !trimmed.bytes().all(|b| b.is_ascii_digit()) {
        return Err(CliError::Usage(format!(
            "message must be a non-negative decimal integer, got {trimmed:?}"
        )));
    }
    Ok(trimmed)
}

fn cmd_keygen(args: KeygenArgs) -> CliResult<()> {
    let params = DHParams::new(args.p, args.x)?;
    let secret = match args.secret {
        Some(secret) => secret,
        None => {
            let mut rng = match args.seed {
                Some(seed) => ChaCha20Rng::seed_from_u64(seed),
                None => ChaCha20Rng::from_os_rng(),
            };
            rng.random_range(1..args.p)
        }
    };
    let key = KeyFile::new(params, secret)?;
    write_file(&args.out, key.render().as_bytes())?;
    eprintln!("wrote key file {}", args.out.display());
    Ok(())
}

fn cmd_pubkey(args: PubkeyArgs) -> CliResult<()> {
    let key = load_key(&args.key)?;
    println!("{}", dh_public(&key.params, key.secret)?);
    Ok(())
}

fn scheme_params(key: &KeyFile, scheme: &SchemeArgs) -> CliResult<SchemeParams> {
    Ok(SchemeParams::new(
        scheme.n,
        key.params,
        scheme.base,
        scheme.epsilon,
        scheme.offset,
    )?)
}

fn message_from_args(
    in_file: &Option<PathBuf>,
    int: &Option<String>,
    base: u64,
) -> CliResult<DigitMessage> {
    match (in_file, int) {
        (Some(path), None) => {
            if base != 256 {
                return Err(CliError::Usage(
                    "byte-file input requires --base 256".to_string(),
                ));
            }
            Ok(DigitMessage::from_bytes(&read_file(path)?))
        }
        (None, Some(decimal)) => Ok(digits_of_decimal(parse_decimal(decimal)?, base)?),
        _ => Err(CliError::Usage(
            "exactly one of --in or --int is required".to_string(),
        )),
    }
}

fn derive_key_for(key: &KeyFile, peer: u64, params: &SchemeParams) -> CliResult<SharedMatrixKey> {
    let shared = dh_shared(&key.params, key.secret, peer)?;
    Ok(build_shared_key(shared, params)?)
}

fn cmd_encrypt(args: EncryptArgs) -> CliResult<()> {
    let key = load_key(&args.key)?;
    let params = scheme_params(&key, &args.scheme)?;
    let msg = message_from_args(&args.in_file, &args.int, params.base_a)?;
    let shared = derive_key_for(&key, args.peer, &params)?;
    let ct = encrypt_message(&msg, &shared, &params)?;
    write_file(&args.out, &ciphertext_to_bytes(&ct))?;
    eprintln!(
        "encrypted {} digits into {} blocks ({})",
        ct.digit_count,
        ct.blocks.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_decrypt(args: DecryptArgs) -> CliResult<()> {
    let key = load_key(&args.key)?;
    let ct = load_ciphertext(&args.in_file)?;
    // The ciphertext echoes every public parameter; only the modulus must
    // agree with the key file.
    if ct.echo.p != key.params.modulus() {
        return Err(CoreError::ParamMismatch("prime modulus p".to_string()).into());
    }
    let params = SchemeParams::new(
        ct.echo.n as usize,
        key.params,
        ct.echo.base_a,
        ct.echo.epsilon,
        ct.echo.offset,
    )?;
    let shared = derive_key_for(&key, args.peer, &params)?;
    let msg = decrypt_message(&ct, &shared, &params)?;
    emit_plaintext(&msg, &args.out, args.print_int)
}

fn emit_plaintext(msg: &DigitMessage, out: &Option<PathBuf>, print_int: bool) -> CliResult<()> {
    if print_int {
        println!("{}", digits_to_decimal(msg));
        return Ok(());
    }
    match out {
        Some(path) => {
            if msg.base() != 256 {
                return Err(CliError::Usage(
                    "byte-file output requires a base-256 ciphertext; use --print-int".to_string(),
                ));
            }
            write_file(path, &msg.to_bytes()?)
        }
        None => {
            if msg.base() == 256 {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(&msg.to_bytes()?)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Io("writing stdout".to_string(), e))
            } else {
                println!("{}", digits_to_decimal(msg));
                Ok(())
            }
        }
    }
}

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    println!("{}", work_estimate(args.n, args.epsilon, args.base)?);
    Ok(())
}

fn report_to_json(report: &AttackReport) -> serde_json::Value {
    let recovered = match &report.recovered {
        None => serde_json::Value::Null,
        Some(Recovered::SharedSecrets(candidates)) => serde_json::json!(candidates),
        Some(Recovered::Nilpotent(m)) => {
            let rows: Vec<Vec<f64>> = (0..m.dim())
                .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
                .collect();
            serde_json::json!(rows)
        }
    };
    serde_json::json!({
        "method": report.method,
        "trials": report.trials,
        "elapsed_seconds": report.elapsed.as_secs_f64(),
        "recovered": recovered,
        "estimate": report.estimate,
    })
}

fn emit_report(report: &AttackReport, json: bool) {
    if json {
        println!("{}", report_to_json(report));
    } else {
        println!("{report}");
    }
}

fn cmd_attack_kpa(args: AttackKpaArgs) -> CliResult<()> {
    let ct = load_ciphertext(&args.cipher)?;
    if ct.blocks.is_empty() {
        return Err(CoreError::InvalidParams("ciphertext has no blocks to attack").into());
    }
    let crib = parse_digit_list(&args.plain)?;
    let capacity = ct.echo.n as usize - 1;
    let first_len = (ct.digit_count as usize).min(capacity);
    if crib.len() < first_len {
        return Err(CliError::Usage(format!(
            "crib must cover the whole first block ({first_len} digits)"
        )));
    }

    let started = Instant::now();
    let recovered = kpa_recover_nilpotent(&ct.blocks[0], &crib[..first_len], ct.echo.offset)?;
    let plaintext = kpa_decrypt(&ct, &recovered, ct.echo.offset, ct.echo.base_a)?;
    let report = AttackReport {
        method: "known-plaintext-reversion",
        trials: 1,
        elapsed: started.elapsed(),
        recovered: Some(Recovered::Nilpotent(recovered)),
        estimate: work_estimate(ct.echo.n as usize, ct.echo.epsilon, ct.echo.base_a)?,
    };
    if !args.json {
        println!("decoded digits: {:?}", plaintext.digits());
    }
    emit_report(&report, args.json);
    Ok(())
}

fn cmd_attack_brute(args: AttackBruteArgs) -> CliResult<()> {
    let ct = load_ciphertext(&args.cipher)?;
    let dh = DHParams::new(ct.echo.p, args.x)?;
    let params = SchemeParams::new(
        ct.echo.n as usize,
        dh,
        ct.echo.base_a,
        ct.echo.epsilon,
        ct.echo.offset,
    )?;
    let crib = match &args.plain {
        Some(text) => Some(parse_digit_list(text)?),
        None => None,
    };
    let capacity = params.block_capacity();
    let first_len = (ct.digit_count as usize).min(capacity);
    let crib_slice = crib.as_deref().map(|c| &c[..c.len().min(first_len)]);
    let report = brute_force_shared_secret(&ct, &params, crib_slice)?;
    emit_report(&report, args.json);
    Ok(())
}

fn cmd_demo_paper() -> CliResult<()> {
    println!("worked example at desk scale\n");

    let msg = nilm_core::codec::digits_of(56, 4)?;
    println!("message M = 56 in base 4");
    println!("digits (little-endian): {:?}", msg.digits());
    println!("offset-0 encoding skips the zero digit; block digits: [2, 3]\n");

    let key = SharedMatrixKey::unconcealed(3)?;
    println!("carrier X (3x3 shift block):");
    print!("{}", key.nilpotent);

    let params = SchemeParams::new(3, DHParams::new(7, 4)?, 4, 1.0, 0)?;
    let block_msg = DigitMessage::new(4, vec![2, 3])?;
    let ct = encrypt_message(&block_msg, &key, &params)?;
    println!("\nencoded block, ln(2) and ln(3) on the superdiagonals:");
    print!("{}", ct.blocks[0]);
    println!("ln(2) = {}", 2.0f64.ln());
    println!("ln(3) = {}", 3.0f64.ln());

    let decoded = decrypt_message(&ct, &key, &params)?;
    println!("decoded digits: {:?}\n", decoded.digits());

    let dh = DHParams::new(7, 4)?;
    let alice_public = dh_public(&dh, 2)?;
    let bob_public = dh_public(&dh, 4)?;
    let shared = dh_shared(&dh, 2, bob_public)?;
    println!("key exchange: p = 7, x = 4, secrets a = 2, b = 4");
    println!("A = {alice_public}");
    println!("B = {bob_public}");
    println!("K = {shared}");
    Ok(())
}

fn run_session(stream: &mut TcpStream, role: Role, session: &PeerSessionArgs) -> CliResult<()> {
    let key = load_key(&session.key)?;
    let params = scheme_params(&key, &session.scheme)?;
    let shared = run_handshake(role, stream, &params, key.secret)?;
    eprintln!(
        "handshake complete (n = {}, p = {})",
        params.n,
        key.params.modulus()
    );

    let sending = session.in_file.is_some() || session.int.is_some();
    if sending {
        let msg = message_from_args(&session.in_file, &session.int, params.base_a)?;
        let ct = encrypt_message(&msg, &shared, &params)?;
        send_ciphertext(stream, &ct)?;
        eprintln!(
            "sent {} digits in {} blocks",
            ct.digit_count,
            ct.blocks.len()
        );
    } else {
        let ct = recv_ciphertext(stream)?;
        let msg = decrypt_message(&ct, &shared, &params)?;
        eprintln!("received {} digits", msg.digit_count());
        emit_plaintext(&msg, &session.out, false)?;
    }
    Ok(())
}

fn cmd_peer_listen(args: PeerListenArgs) -> CliResult<()> {
    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .map_err(|e| CliError::Io(format!("binding {}:{}", args.host, args.port), e))?;
    let local = listener
        .local_addr()
        .map_err(|e| CliError::Io("querying local address".to_string(), e))?;
    eprintln!("listening on {local}");

    for incoming in listener.incoming() {
        let mut stream =
            incoming.map_err(|e| CliError::Io("accepting connection".to_string(), e))?;
        let outcome = run_session(&mut stream, Role::Responder, &args.session);
        if args.once {
            return outcome;
        }
        if let Err(err) = outcome {
            eprintln!("session error: {err}");
        }
    }
    Ok(())
}

fn cmd_peer_connect(args: PeerConnectArgs) -> CliResult<()> {
    let mut stream = TcpStream::connect((args.host.as_str(), args.port))
        .map_err(|e| CliError::Io(format!("connecting to {}:{}", args.host, args.port), e))?;
    run_session(&mut stream, Role::Initiator, &args.session)
}
