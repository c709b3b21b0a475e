//! Batch front end: generate seeded test algebras and maps, run the lemma
//! suite, linear extensions, and decompositions, and emit JSON reports.
//!
//! Exit codes: 0 when every verdict passes, 1 on mathematical failures,
//! 2 on usage or schema errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use seqeff::algebra::{AlgebraSpec, ToleranceConfig};
use seqeff::analyzer::{decompose, lemma_suite, Verdict};
use seqeff::error::Error as SeqError;
use seqeff::extension::extend_to_linear;
use seqeff::linalg::random_unitary_with;
use seqeff::morphisms::{
    build_map, parse_descriptor_json, DirectSumPart, MapDescriptor, SequentialMapOracle,
};
use seqeff::selftest;

#[derive(Parser)]
#[command(
    name = "seqeff",
    about = "Effect-algebra toolkit: generate, check, extend, and decompose sequential isomorphisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Algebra spec JSON ({"blocks": [...]}; a generated pair file also works).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Map descriptor JSON (bare descriptor or a generated pair file).
    #[arg(long, global = true)]
    map: Option<PathBuf>,

    /// Output path for the report (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed for all randomized sampling.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Randomized trials per check.
    #[arg(long, global = true, default_value_t = 200)]
    trials: usize,

    /// Equality tolerance; the positivity tolerance is tol/10.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random algebra spec and matching map descriptor pair.
    Gen,
    /// Run the structural lemma suite against a map.
    Check,
    /// Extend an effect-level map to a linear operator and report diagnostics.
    Extend,
    /// Blindly decompose a map into scalar, multiplicative, and
    /// antimultiplicative parts.
    Decompose,
    /// Run the built-in acceptance suite.
    Selftest,
}

#[derive(Serialize)]
struct ReportEnvelope<T: Serialize> {
    command: &'static str,
    seed: u64,
    trials: usize,
    tol: f64,
    timestamp: u64,
    report: T,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_report<T: Serialize>(
    out: &Option<PathBuf>,
    command: &'static str,
    cli_seed: u64,
    cli_trials: usize,
    cli_tol: f64,
    report: T,
) -> Result<(), String> {
    let envelope = ReportEnvelope {
        command,
        seed: cli_seed,
        trials: cli_trials,
        tol: cli_tol,
        timestamp: now_unix(),
        report,
    };
    let json = serde_json::to_string_pretty(&envelope).map_err(|e| e.to_string())?;
    match out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| e.to_string()),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Loads the spec file, accepting either a bare spec or a generated pair.
fn load_spec(path: &Path) -> Result<AlgebraSpec, String> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))?;
    let spec_value = if value.get("spec").is_some() {
        value["spec"].clone()
    } else {
        value
    };
    serde_json::from_value(spec_value).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_oracle(
    spec_path: &Path,
    map_path: &Path,
) -> Result<(AlgebraSpec, MapDescriptor, SequentialMapOracle), String> {
    let spec = load_spec(spec_path)?;
    let text = read_file(map_path)?;
    let (implied, descriptor) =
        parse_descriptor_json(&text).map_err(|e| format!("{}: {e}", map_path.display()))?;
    if implied != spec {
        return Err(format!(
            "spec {:?} does not match the map's source {:?}",
            spec.blocks(),
            implied.blocks()
        ));
    }
    let oracle = build_map(&descriptor).map_err(|e| e.to_string())?;
    Ok((spec, descriptor, oracle))
}

/// Random spec within `[1,1,3,3]`-scale dims and a random size-preserving
/// descriptor over it.
fn generate_pair(seed: u64) -> (AlgebraSpec, MapDescriptor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=4);
    let blocks: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3)).collect();
    let spec = AlgebraSpec::new(blocks.clone()).unwrap();

    // Random bijection pairing blocks of equal size.
    let mut corr = vec![0usize; k];
    for size in 1..=3usize {
        let members: Vec<usize> = (0..k).filter(|&b| blocks[b] == size).collect();
        let mut targets = members.clone();
        for i in (1..targets.len()).rev() {
            let j = rng.random_range(0..=i);
            targets.swap(i, j);
        }
        for (&b, &t) in members.iter().zip(&targets) {
            corr[b] = t;
        }
    }

    let mut parts = Vec::new();
    let scalars: Vec<usize> = (0..k).filter(|&b| blocks[b] == 1).collect();
    if !scalars.is_empty() {
        let exponents: Vec<f64> = scalars
            .iter()
            .map(|_| 0.4 + 2.1 * rng.random::<f64>())
            .collect();
        parts.push(DirectSumPart {
            source_blocks: scalars.clone(),
            target_blocks: scalars.iter().map(|&b| corr[b]).collect(),
            map: MapDescriptor::Power { exponents },
        });
    }
    for b in 0..k {
        if blocks[b] == 1 {
            continue;
        }
        let u = random_unitary_with(blocks[b], &mut rng);
        let map = if rng.random() {
            MapDescriptor::Transpose {
                perm: vec![0],
                unitaries: vec![u],
            }
        } else {
            MapDescriptor::Unitary {
                perm: vec![0],
                unitaries: vec![u],
            }
        };
        parts.push(DirectSumPart {
            source_blocks: vec![b],
            target_blocks: vec![corr[b]],
            map,
        });
    }
    (spec, MapDescriptor::DirectSum { parts })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = ToleranceConfig {
        eq_tol: cli.tol,
        psd_tol: cli.tol / 10.0,
        trials: cli.trials,
        seed: cli.seed,
    };
    if cfg.validate().is_err() {
        return usage_error("tolerances must be positive and trials nonzero");
    }

    match cli.command {
        Command::Gen => {
            let Some(out) = cli.out.as_ref() else {
                return usage_error("gen requires --out");
            };
            let (spec, map) = generate_pair(cli.seed);
            #[derive(Serialize)]
            struct Pair<'a> {
                spec: &'a AlgebraSpec,
                map: &'a MapDescriptor,
            }
            let json = match serde_json::to_string_pretty(&Pair {
                spec: &spec,
                map: &map,
            }) {
                Ok(j) => j,
                Err(e) => return usage_error(&e.to_string()),
            };
            if let Err(e) = std::fs::write(out, json + "\n") {
                return usage_error(&format!("{}: {e}", out.display()));
            }
            println!(
                "wrote spec {:?} and map to {}",
                spec.blocks(),
                out.display()
            );
            ExitCode::SUCCESS
        }

        Command::Check => {
            let (Some(spec_path), Some(map_path)) = (cli.spec.as_ref(), cli.map.as_ref()) else {
                return usage_error("check requires --spec and --map");
            };
            let (_, _, oracle) = match load_oracle(spec_path, map_path) {
                Ok(v) => v,
                Err(e) => return usage_error(&e),
            };
            let report = match lemma_suite(&oracle, &cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let all_pass = report.all_pass();
            for entry in &report.entries {
                println!(
                    "{} {} (residual {:.3e}{})",
                    if entry.pass { "pass" } else { "FAIL" },
                    entry.name,
                    entry.max_residual,
                    if entry.skipped { ", skipped" } else { "" }
                );
            }
            if let Err(e) = write_report(&cli.out, "check", cli.seed, cli.trials, cli.tol, report) {
                return usage_error(&e);
            }
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }

        Command::Extend => {
            let (Some(spec_path), Some(map_path)) = (cli.spec.as_ref(), cli.map.as_ref()) else {
                return usage_error("extend requires --spec and --map");
            };
            let (_, _, oracle) = match load_oracle(spec_path, map_path) {
                Ok(v) => v,
                Err(e) => return usage_error(&e),
            };
            #[derive(Serialize)]
            #[serde(tag = "status", rename_all = "snake_case")]
            enum ExtendReport {
                Extended {
                    coordinate_dim: usize,
                    diagnostics: seqeff::extension::ExtensionDiagnostics,
                },
                NotEIsomorphism {
                    additivity_residual: f64,
                },
                Error {
                    message: String,
                },
            }
            let (report, code) = match extend_to_linear(&oracle, &cfg) {
                Ok(ext) => (
                    ExtendReport::Extended {
                        coordinate_dim: ext.coordinate_dim(),
                        diagnostics: ext.diagnostics,
                    },
                    ExitCode::SUCCESS,
                ),
                Err(SeqError::NotEIsomorphism { residual }) => (
                    ExtendReport::NotEIsomorphism {
                        additivity_residual: residual,
                    },
                    ExitCode::from(1),
                ),
                Err(e) => (
                    ExtendReport::Error {
                        message: e.to_string(),
                    },
                    ExitCode::from(1),
                ),
            };
            if let Err(e) = write_report(&cli.out, "extend", cli.seed, cli.trials, cli.tol, report)
            {
                return usage_error(&e);
            }
            code
        }

        Command::Decompose => {
            let (Some(spec_path), Some(map_path)) = (cli.spec.as_ref(), cli.map.as_ref()) else {
                return usage_error("decompose requires --spec and --map");
            };
            let (_, _, oracle) = match load_oracle(spec_path, map_path) {
                Ok(v) => v,
                Err(e) => return usage_error(&e),
            };
            let report = match decompose(&oracle, &cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let decomposed = report.verdict == Verdict::Decomposed;
            println!(
                "verdict: {}",
                match &report.verdict {
                    Verdict::Decomposed => "decomposed".to_string(),
                    Verdict::Partial { reason } => format!("partial ({reason})"),
                    Verdict::Failed { reason } => format!("failed ({reason})"),
                }
            );
            if let Err(e) =
                write_report(&cli.out, "decompose", cli.seed, cli.trials, cli.tol, report)
            {
                return usage_error(&e);
            }
            if decomposed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }

        Command::Selftest => {
            let results = selftest::run_all(cli.seed);
            let all_pass = results.iter().all(|r| r.pass);
            for r in &results {
                println!("{}", r.line());
            }
            if let Err(e) = write_report(
                &cli.out, "selftest", cli.seed, cli.trials, cli.tol, &results,
            ) {
                return usage_error(&e);
            }
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
