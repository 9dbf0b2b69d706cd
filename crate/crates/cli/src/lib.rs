//! The `e8kem` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O or format error, 4 verification
//! mismatch.

pub mod net;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::rngs::OsRng;
use rand::RngCore;
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake128;

use e8kem::analysis::{Analyzer, Grouping, Mode, BLOCK_TERMS};
use e8kem::codec::{self, FileKind, KatRecord};
use e8kem::estimator::{dual_cost, primal_cost, COMPARISON};
use e8kem::kem;
use e8kem::{Params, Preset};

pub const SEED_ENV: &str = "E8KEM_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<e8kem::Error> for CliError {
    fn from(e: e8kem::Error) -> Self {
        match e {
            e8kem::Error::InvalidParams(_) | e8kem::Error::UnknownPreset(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Io(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "e8kem",
    version,
    about = "Module-LWE key exchange with E8 reconciliation"
)]
pub struct Cli {
    /// Parameter preset, e.g. e8kem-2048-p5 (see `e8kem params`).
    #[arg(long, global = true, default_value = "e8kem-2048-p5")]
    pub preset: String,

    /// Allow E8KEM_SEED to replace OS entropy. Never use for real keys.
    #[arg(long, global = true)]
    pub insecure_deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a key pair to <out>.pk and <out>.sk.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
    /// Encapsulate to a public key; writes <out>.ct and <out>.key.
    Encaps {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the key from a secret key and a ciphertext.
    Decaps {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate known-answer records.
    KatGen {
        #[arg(long)]
        out: PathBuf,
        /// Records per preset.
        #[arg(long, default_value_t = 1)]
        count: u32,
        /// Cover every preset instead of only --preset.
        #[arg(long)]
        all: bool,
    },
    /// Replay known-answer records.
    KatVerify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Accept connections and run the server side of the exchange.
    ExchangeServer {
        #[arg(long)]
        listen: String,
        /// Connections to serve before exiting.
        #[arg(long, default_value_t = 1)]
        connections: u32,
    },
    /// Connect to a server and run the client side of the exchange.
    ExchangeClient {
        #[arg(long)]
        connect: String,
    },
    /// Print the failure-probability bound.
    AnalyzePe {
        #[arg(long, default_value = "float")]
        mode: Mode,
        /// Cover every preset instead of only --preset.
        #[arg(long)]
        all: bool,
        /// Group relevant vectors by orbit instead of by type.
        #[arg(long)]
        orbits: bool,
        /// Number of block terms summed.
        #[arg(long, default_value_t = BLOCK_TERMS)]
        terms: usize,
    },
    /// Print primal and dual attack costs.
    EstimateSecurity {
        /// Cover the comparison schemes instead of only --preset.
        #[arg(long)]
        all: bool,
    },
    /// List presets and their sizes.
    Params,
}

/// Where randomness comes from.
#[derive(Clone, Debug)]
pub enum Entropy {
    Os,
    Deterministic(Vec<u8>),
}

impl Entropy {
    /// `seed` is the value of E8KEM_SEED, if set.
    pub fn from_env(seed: Option<OsString>, allowed: bool) -> Result<Self, CliError> {
        match (seed, allowed) {
            (None, _) => Ok(Entropy::Os),
            (Some(_), false) => Err(CliError::Usage(format!(
                "{SEED_ENV} is set; pass --insecure-deterministic to use it"
            ))),
            (Some(hex_seed), true) => {
                let text = hex_seed
                    .into_string()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV} is not valid text")))?;
                let bytes = hex::decode(text.trim())
                    .map_err(|e| CliError::Usage(format!("{SEED_ENV}: {e}")))?;
                Ok(Entropy::Deterministic(bytes))
            }
        }
    }

    /// Fresh bytes for one purpose; deterministic sources key them by `label`.
    pub fn fill<const LEN: usize>(&self, label: &str) -> [u8; LEN] {
        let mut out = [0u8; LEN];
        match self {
            Entropy::Os => OsRng.fill_bytes(&mut out),
            Entropy::Deterministic(seed) => {
                let mut xof = Shake128::default();
                xof.update(seed);
                xof.update(label.as_bytes());
                xof.finalize_xof().read(&mut out);
            }
        }
        out
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn check_params(found: Params, expected: &Params, path: &Path) -> Result<(), CliError> {
    if found != *expected {
        return Err(CliError::Usage(format!(
            "{} holds {found}, but --preset selects {expected}",
            path.display()
        )));
    }
    Ok(())
}

pub fn run(cli: Cli, entropy: Entropy, out: &mut impl Write) -> Result<(), CliError> {
    let params = Params::preset(&cli.preset)?;
    match cli.command {
        Command::Keygen { out: base } => {
            let (pk, state) = kem::gen(&entropy.fill("keygen"), &params);
            write(
                &with_ext(&base, "pk"),
                &codec::write_file(
                    FileKind::PublicKey,
                    &params,
                    &codec::encode_msg1(&pk, &params),
                ),
            )?;
            write(
                &with_ext(&base, "sk"),
                &codec::write_file(FileKind::SecretKey, &params, &codec::encode_secret(&state)),
            )?;
            writeln!(
                out,
                "wrote {} and {}",
                with_ext(&base, "pk").display(),
                with_ext(&base, "sk").display()
            )?;
        }
        Command::Encaps { input, out: base } => {
            let bytes = read(&input)?;
            let (found, payload) = codec::read_file(&bytes, FileKind::PublicKey)?;
            check_params(found, &params, &input)?;
            let pk = codec::decode_msg1(payload, &params)?;
            let result = kem::encaps(&pk, &entropy.fill("encaps"), &params)?;
            let ct = codec::encode_msg2(&result.ciphertext, &params);
            write(
                &with_ext(&base, "ct"),
                &codec::write_file(FileKind::Ciphertext, &params, &ct),
            )?;
            write(
                &with_ext(&base, "key"),
                &codec::write_file(FileKind::SharedKey, &params, result.key.as_bytes()),
            )?;
            writeln!(out, "{}", result.key.to_hex())?;
        }
        Command::Decaps {
            input,
            ct,
            out: key_out,
        } => {
            let sk_bytes = read(&input)?;
            let (found, payload) = codec::read_file(&sk_bytes, FileKind::SecretKey)?;
            check_params(found, &params, &input)?;
            let state = codec::decode_secret(payload, &params)?;
            let ct_bytes = read(&ct)?;
            let (found, payload) = codec::read_file(&ct_bytes, FileKind::Ciphertext)?;
            check_params(found, &params, &ct)?;
            let ciphertext = codec::decode_msg2(payload, &params)?;
            let key = kem::decaps(&state, &ciphertext)?;
            if let Some(path) = key_out {
                write(
                    &path,
                    &codec::write_file(FileKind::SharedKey, &params, key.as_bytes()),
                )?;
            }
            writeln!(out, "{}", key.to_hex())?;
        }
        Command::KatGen {
            out: path,
            count,
            all,
        } => {
            let sets: Vec<Params> = if all {
                Preset::ALL.iter().map(Preset::params).collect()
            } else {
                vec![params]
            };
            let mut records = Vec::new();
            let mut index = 0;
            for set in &sets {
                for _ in 0..count {
                    records.push(KatRecord::generate(set, &codec::kat_seed(index))?);
                    index += 1;
                }
            }
            write(&path, codec::kat_write(&records).as_bytes())?;
            writeln!(out, "wrote {} records to {}", records.len(), path.display())?;
        }
        Command::KatVerify { input } => {
            let text = String::from_utf8(read(&input)?)
                .map_err(|_| CliError::Io(format!("{}: not UTF-8", input.display())))?;
            let records = codec::kat_read(&text)?;
            let mut failures = 0;
            for (i, record) in records.iter().enumerate() {
                let bad = record.replay()?;
                if !bad.is_empty() {
                    failures += 1;
                    writeln!(
                        out,
                        "record {i} ({}): mismatch in {}",
                        record.params,
                        bad.join(", ")
                    )?;
                }
            }
            if failures > 0 {
                return Err(CliError::Mismatch(format!(
                    "{failures} of {} records do not replay",
                    records.len()
                )));
            }
            writeln!(out, "{} records verified", records.len())?;
        }
        Command::ExchangeServer {
            listen,
            connections,
        } => {
            let listener = TcpListener::bind(&listen)
                .map_err(|e| CliError::Io(format!("bind {listen}: {e}")))?;
            for i in 0..connections {
                let seed = entropy.fill::<{ kem::GEN_ENTROPY_BYTES }>(&format!("server/{i}"));
                let transcript = net::serve_one(&listener, &params, &seed)?;
                writeln!(out, "{}", transcript.key.to_hex())?;
                out.flush()?;
            }
        }
        Command::ExchangeClient { connect } => {
            let transcript = net::connect(&connect, &params, &entropy.fill("client"))
                .map_err(|e| CliError::Io(format!("connect {connect}: {e}")))?;
            writeln!(out, "{}", transcript.key.to_hex())?;
        }
        Command::AnalyzePe {
            mode,
            all,
            orbits,
            terms,
        } => {
            let grouping = if orbits {
                Grouping::Orbits
            } else {
                Grouping::Types
            };
            let mut analyzer = Analyzer::new(mode).with_grouping(grouping);
            let sets: Vec<Params> = if all {
                Preset::ALL.iter().map(Preset::params).collect()
            } else {
                vec![params]
            };
            for set in &sets {
                let report = analyzer.pe_bound_terms(set, terms)?;
                writeln!(out, "{report}")?;
                out.flush()?;
            }
        }
        Command::EstimateSecurity { all } => {
            let schemes: Vec<(String, e8kem::estimator::LweInstance)> = if all {
                COMPARISON
                    .iter()
                    .map(|s| (s.name.to_string(), s.instance()))
                    .collect()
            } else {
                vec![(
                    params.to_string(),
                    e8kem::estimator::LweInstance::from_params(&params),
                )]
            };
            for (name, inst) in schemes {
                writeln!(out, "{name} ({})", format_instance(&inst))?;
                writeln!(out, "  {}", primal_cost(&inst)?)?;
                writeln!(out, "  {}", dual_cost(&inst)?)?;
            }
        }
        Command::Params => {
            for preset in Preset::ALL {
                let p = preset.params();
                writeln!(
                    out,
                    "{:<15} {p} msg1={}B msg2={}B hint={}B",
                    preset.name(),
                    codec::msg1_bytes(&p),
                    codec::msg2_bytes(&p),
                    codec::hint_bytes(&p),
                )?;
            }
        }
    }
    Ok(())
}

fn format_instance(inst: &e8kem::estimator::LweInstance) -> String {
    format!("q={} n={} sigma={:.4}", inst.q, inst.n, inst.sigma)
}
