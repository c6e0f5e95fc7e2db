use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vanet_core::certs::{CertKind, Certificate, ReasonCode};
use vanet_core::crypto::{CryptoProvider, DigestBackend};
use vanet_core::messages::WireMessage;
use vanet_core::protocol::{ca_issuer, vehicle_key_seed};
use vanet_core::selftest;
use vanet_core::sim::{self, Mode, SimConfig};

#[derive(Parser)]
#[command(name = "vanet", version, about = "Adversary-list revocation simulator and certificate tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write events.jsonl and metrics.csv
    Run {
        /// Scenario JSON; the canonical scenario is used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Print every vehicle's adversary list at the end of the run
        #[arg(long)]
        show_al: bool,
    },
    /// Run the scenario in both modes and report revocation overhead
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Entries preloaded into the baseline CRL
        #[arg(long)]
        crl_size: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Issue a certificate with the deployment CA key and dump it
    Cert {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        vehicle: u64,
        #[arg(long, default_value_t = 0)]
        issued: u64,
        /// Reason code 1-4, adversary certificates only
        #[arg(long)]
        reason: Option<u8>,
    },
    /// Decode a certificate or wire message given as hex or a binary file
    Decode {
        /// Hex string
        input: Option<String>,
        #[arg(long, conflicts_with = "input")]
        file: Option<PathBuf>,
        #[arg(long = "as", value_enum, default_value_t = DecodeAs::Cert)]
        as_: DecodeAs,
    },
    /// Run the receive truth table and the adversary-list replay check
    Selftest {
        #[arg(long, default_value_t = 10_000)]
        ops: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    AdversaryList,
    CrlBaseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Vc,
    Ac,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeAs {
    Cert,
    Wire,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), String> {
    match cmd {
        Command::Run {
            config,
            seed,
            mode,
            out,
            show_al,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::AdversaryList => Mode::AdversaryList,
                    ModeArg::CrlBaseline => Mode::CrlBaseline,
                };
            }
            cmd_run(&cfg, &out, show_al)
        }
        Command::Compare {
            config,
            seed,
            crl_size,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = crl_size {
                cfg.crl_seed_size = n;
            }
            cmd_compare(&cfg, &out)
        }
        Command::Cert {
            kind,
            vehicle,
            issued,
            reason,
        } => cmd_cert(kind, vehicle, issued, reason),
        Command::Decode { input, file, as_ } => {
            let bytes = match (input, file) {
                (Some(hex_text), None) => parse_hex(&hex_text)?,
                (None, Some(path)) => fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?,
                _ => return Err("give a hex string or --file".into()),
            };
            cmd_decode(&bytes, as_)
        }
        Command::Selftest { ops } => cmd_selftest(ops),
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, String> {
    match path {
        None => Ok(SimConfig::canonical()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            SimConfig::from_json(&text).map_err(|e| e.to_string())
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

fn cmd_run(cfg: &SimConfig, out: &Path, show_al: bool) -> Result<(), String> {
    let result = sim::simulate(cfg).map_err(|e| e.to_string())?;
    let events = write(out, "events.jsonl", &result.log.to_jsonl())?;
    let metrics = write(out, "metrics.csv", &result.metrics.to_csv())?;
    let m = &result.metrics;
    println!("mode {}", cfg.mode.label());
    println!("events {} -> {}", result.log.len(), events.display());
    println!("metrics -> {}", metrics.display());
    println!("revocation bytes {}", m.revocation_bytes());
    println!("total bytes {}", m.total_channel_bytes());
    println!("decryptions {}", m.total_decrypts());
    match m.time_to_isolation_s() {
        Some(s) => println!("time to isolation {s:.3} s"),
        None => println!("time to isolation none"),
    }
    let crl: Vec<String> = m
        .crl
        .iter()
        .take(10)
        .map(|e| format!("{{{}, {}, {}}}", e.accused_id, e.timestamp, e.reason.code()))
        .collect();
    let more = if m.crl.len() > 10 { " ..." } else { "" };
    println!("crl [{}]{more} ({} entries)", crl.join(", "), m.crl.len());
    if show_al {
        for (id, al) in &result.final_state.adversary_lists {
            println!("al vehicle:{id} {al:?}");
        }
    }
    Ok(())
}

fn cmd_compare(cfg: &SimConfig, out: &Path) -> Result<(), String> {
    let al = sim::simulate(&cfg.with_mode(Mode::AdversaryList)).map_err(|e| e.to_string())?;
    let crl = sim::simulate(&cfg.with_mode(Mode::CrlBaseline)).map_err(|e| e.to_string())?;
    let report = sim::compare(&al.metrics, &crl.metrics).map_err(|e| e.to_string())?;
    let text = report.to_text();
    print!("{text}");
    write(out, "comparison.txt", &text)?;
    write(out, "metrics_adversary_list.csv", &al.metrics.to_csv())?;
    write(out, "metrics_crl_baseline.csv", &crl.metrics.to_csv())?;
    let csv = format!(
        "name,value,unit\nrevocation_bytes.adversary_list,{},bytes\nrevocation_bytes.crl_baseline,{},bytes\nbyte_ratio,{},ratio\n",
        report.al_revocation_bytes,
        report.crl_revocation_bytes,
        report.byte_ratio().map_or_else(|| "none".to_string(), |r| format!("{r:.4}")),
    );
    write(out, "comparison.csv", &csv)?;
    Ok(())
}

fn cmd_cert(kind: KindArg, vehicle: u64, issued: u64, reason: Option<u8>) -> Result<(), String> {
    let crypto = DigestBackend;
    let kind = match kind {
        KindArg::Vc => CertKind::Valid,
        KindArg::Ac => CertKind::Adversary,
        KindArg::Identity => CertKind::Identity,
    };
    let reason = match (kind, reason) {
        (CertKind::Adversary, None) => Some(ReasonCode::BogusTrafficInformation),
        (_, Some(code)) => Some(ReasonCode::from_code(code).map_err(|e| e.to_string())?),
        (_, None) => None,
    };
    let subject = crypto.generate_keypair(vehicle_key_seed(vehicle));
    let cert = ca_issuer(&crypto)
        .issue(&crypto, kind, vehicle, subject.fingerprint, issued, reason)
        .map_err(|e| e.to_string())?;
    println!("{}", cert.dump());
    Ok(())
}

fn parse_hex(text: &str) -> Result<Vec<u8>, String> {
    let clean: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    hex::decode(&clean).map_err(|e| match e {
        hex::FromHexError::InvalidHexCharacter { c, index } => {
            format!("invalid hex character {c:?} at byte offset {}", index / 2)
        }
        hex::FromHexError::OddLength => format!("odd number of hex digits; byte offset {} is incomplete", clean.len() / 2),
        other => other.to_string(),
    })
}

fn cmd_decode(bytes: &[u8], as_: DecodeAs) -> Result<(), String> {
    match as_ {
        DecodeAs::Cert => {
            let cert = Certificate::decode(bytes).map_err(|e| e.to_string())?;
            println!("{}", cert.dump());
            if let Err(why) = cert.check_invariants() {
                println!("warning: {why}");
            }
        }
        DecodeAs::Wire => {
            let msg = WireMessage::decode_wire(bytes).map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&msg.to_json()).map_err(|e| e.to_string())?;
            println!("{json}");
        }
    }
    Ok(())
}

fn cmd_selftest(ops: usize) -> Result<(), String> {
    let mut failed = 0;
    for row in selftest::truth_table() {
        let ok = row.passed();
        if !ok {
            failed += 1;
        }
        println!(
            "{} receive {} -> {} (decrypts {})",
            if ok { "ok  " } else { "FAIL" },
            row.case.label(),
            row.actual.decision.label(),
            row.actual.decrypts
        );
    }
    match selftest::replay_check(&selftest::random_ops(0, ops)) {
        Ok(()) => println!("ok   adversary list replay {ops} ops"),
        Err(e) => {
            failed += 1;
            println!("FAIL adversary list replay: {e}");
        }
    }
    if failed > 0 {
        return Err(format!("{failed} self-test checks failed"));
    }
    println!("selftest passed");
    Ok(())
}
