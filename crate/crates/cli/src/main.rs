//! `expguard`: coverage campaigns, overhead benchmarks and protocol demos.
//!
//! Exit status: 0 on success, 1 when a demo detects a fault, 2 on usage or
//! runtime errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use expguard_core::bench::{run_bench, BenchConfig};
use expguard_core::campaign::{
    run_campaign, CampaignConfig, Scheme, DEFAULT_ITERATIONS, DEFAULT_MODULUS_BITS,
    DEFAULT_POOL_SIZE,
};
use expguard_core::demos::{
    dh_exchange, fixtures, rsa_roundtrip, DemoOptions, DhParams, ExponentOrder, FaultPlan, Fixture,
    RsaKeyPair,
};
use expguard_core::fault::{make_hooks, FaultKind, FaultModel, FaultTarget};
use expguard_core::{Error, Rng};

const DEMO_FAULT_STREAM: u64 = 0x6661_756c;

#[derive(Parser)]
#[command(
    name = "expguard",
    version,
    about = "Fault-detecting modular exponentiation: coverage, overhead and demos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo fault coverage: detection and escape rates per (target, l) cell.
    ///
    /// Every trial draws an RSA-style modulus from a seeded pool, a fresh unit
    /// base and a random exponent, injects one fault into the encoded operands
    /// named by the target, runs the protection scheme and classifies the
    /// verdict against a fault-free reference.
    Simulate(SimulateArgs),
    /// Wall-clock overhead of Scheme 2 over the unprotected exponentiation, per l.
    ///
    /// Each repetition times the unprotected flow and every protected flow back
    /// to back on the same input. The overhead for l is the median over
    /// repetitions of (protected - unprotected) / unprotected. Runs on one thread.
    Bench(BenchArgs),
    /// Diffie-Hellman or textbook RSA with every exponentiation protected by Scheme 2.
    Demo(DemoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Output format: aligned text, JSON or CSV.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Modulus size in bits; bases and exponents are drawn at this size.
    #[arg(long, default_value_t = DEFAULT_MODULUS_BITS)]
    bits: u64,
    /// Width of the random encoding coefficients, in bits.
    #[arg(long = "k-bits", default_value_t = 50)]
    k_bits: u64,
    /// Comma-separated window sizes l (low exponent bits recomputed by Scheme 2).
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,128")]
    l: Vec<u64>,
    /// Trials per (target, l) cell.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: u64,
    /// Campaign seed; every trial stream is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fault model: none, total-random, single-bit, k-random or k-burst.
    #[arg(long, default_value = "total-random", value_parser = parse_kind)]
    model: FaultKind,
    /// Comma-separated targets: x1, y1, x2, y2, c1 = (x1,y1), c2 = (x2,y2), c3 = all four.
    #[arg(long, value_delimiter = ',', default_value = "x1", value_parser = parse_target)]
    targets: Vec<FaultTarget>,
    /// Number of flipped bits k; required by k-random and k-burst, rejected otherwise.
    #[arg(long)]
    faults: Option<u64>,
    /// Protection scheme: 1 = full recomputation, 2 = partial recomputation.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    scheme: u8,
    /// Distinct moduli shared by the trials of the campaign.
    #[arg(long = "modulus-pool", default_value_t = DEFAULT_POOL_SIZE)]
    modulus_pool: usize,
    /// Worker threads (default: one per logical CPU). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BenchArgs {
    /// Modulus size in bits.
    #[arg(long, default_value_t = 2048)]
    bits: u64,
    /// Comma-separated window sizes l.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,128,256")]
    l: Vec<u64>,
    /// Timed repetitions; each times every flow once, back to back.
    #[arg(long, default_value_t = 1000)]
    repetitions: usize,
    /// Untimed repetitions before measuring.
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    /// Calls per timed sample.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Distinct random (base, exponent) pairs cycled through by the samples.
    #[arg(long, default_value_t = 16)]
    inputs: usize,
    /// Width of the random encoding coefficients, in bits.
    #[arg(long = "k-bits", default_value_t = 50)]
    k_bits: u64,
    /// Seed for the modulus, the inputs and the encodings.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format: aligned text or JSON.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Dh,
    Rsa,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    /// Reduce and encode exponents with φ(N).
    Totient,
    /// Reduce and encode exponents with e·d − 1 (key pair only).
    KeyMultiple,
}

#[derive(Args)]
struct DemoArgs {
    /// Protocol to run.
    #[arg(value_enum)]
    protocol: Protocol,
    /// Built-in fixture (dh: 23; rsa: 3233, 2048) or a path to a `key = value` file;
    /// defaults to 23 for dh and 3233 for rsa.
    #[arg(long)]
    fixture: Option<String>,
    /// Window size l used by every protected exponentiation.
    #[arg(long, default_value_t = 128)]
    l: u64,
    /// Width of the random encoding coefficients, in bits.
    #[arg(long = "k-bits", default_value_t = 50)]
    k_bits: u64,
    /// Seed for encodings and injected faults.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// RSA exponent order.
    #[arg(long, value_enum, default_value = "totient")]
    order: Order,
    /// Inject a fault into this exponentiation (0-based step); off by default.
    #[arg(long = "fault-step")]
    fault_step: Option<usize>,
    /// Fault model for --fault-step: total-random, single-bit, k-random or k-burst.
    #[arg(long, default_value = "single-bit", value_parser = parse_kind)]
    model: FaultKind,
    /// Operands disturbed by --fault-step: x1, y1, x2, y2, c1, c2 or c3.
    #[arg(long, default_value = "x1", value_parser = parse_target)]
    target: FaultTarget,
    /// Number of flipped bits k for k-random and k-burst.
    #[arg(long)]
    faults: Option<u64>,
    /// Output format: aligned text or JSON.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<FaultKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_target(s: &str) -> Result<FaultTarget, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn fault_model(kind: FaultKind, faults: Option<u64>) -> anyhow::Result<FaultModel> {
    if faults.is_some() && !kind.takes_k() {
        bail!("--faults only applies to k-random and k-burst, not {kind}");
    }
    Ok(FaultModel::new(kind, faults)?)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let config = CampaignConfig {
        modulus_bits: args.bits,
        k_bits: args.k_bits,
        l_values: args.l,
        fault_model: fault_model(args.model, args.faults)?,
        targets: args.targets,
        iterations: args.iterations,
        seed: args.seed,
        scheme: if args.scheme == 1 {
            Scheme::Full
        } else {
            Scheme::Partial
        },
        modulus_pool: args.modulus_pool,
    };
    config.validate()?;
    let run = || run_campaign(&config);
    let report = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the worker pool")?
            .install(run)?,
        None => run()?,
    };
    let text = match args.output.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(args.output.out.as_deref(), &text)
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let config = BenchConfig {
        modulus_bits: args.bits,
        l_values: args.l,
        repetitions: args.repetitions,
        warmup: args.warmup,
        batch: args.batch,
        inputs: args.inputs,
        k_bits: args.k_bits,
        seed: args.seed,
    };
    let report = run_bench(&config)?;
    let text = match args.format {
        Format::Text => report.to_table(),
        Format::Json => report.to_json(),
        Format::Csv => bail!("bench supports --format text or json"),
    };
    emit(args.out.as_deref(), &text)
}

enum DemoStatus {
    Ok,
    FaultDetected,
}

fn load_fixture(protocol: &str, name: &str) -> anyhow::Result<Fixture> {
    let text = match fixtures::builtin(protocol, name) {
        Some(text) => text.to_string(),
        None => fs::read_to_string(name).with_context(|| {
            format!(
                "--fixture {name:?} is neither a built-in {protocol} fixture nor a readable file"
            )
        })?,
    };
    Ok(Fixture::parse(&text)?)
}

fn demo(args: DemoArgs) -> anyhow::Result<DemoStatus> {
    if args.format == Format::Csv {
        bail!("demo supports --format text or json");
    }
    let opts = DemoOptions {
        l: args.l,
        k_bits: args.k_bits,
    };
    let model = fault_model(args.model, args.faults)?;
    let mut hooks = make_hooks(
        model,
        args.target,
        Rng::derive(args.seed, &[DEMO_FAULT_STREAM]),
    );
    let plan = args.fault_step.map(|step| FaultPlan {
        step,
        hooks: &mut hooks,
    });
    let mut rng = Rng::new(args.seed);
    let fault_desc = match args.fault_step {
        Some(step) => format!("fault-step={step} model={model} target={}", args.target),
        None => "fault-step=none".to_string(),
    };

    let (header, outcome) = match args.protocol {
        Protocol::Dh => {
            let name = args.fixture.as_deref().unwrap_or("23");
            let fixture = load_fixture("dh", name)?;
            let params = DhParams::from_fixture(&fixture, &mut rng)?;
            let header = format!(
                "# expguard demo dh fixture={name} l={} k-bits={} seed={} {fault_desc}",
                opts.l, opts.k_bits, args.seed
            );
            let outcome = dh_exchange(
                &params,
                fixture.get("secret_a")?,
                fixture.get("secret_b")?,
                opts,
                &mut rng,
                plan,
            )
            .map(|o| match args.format {
                Format::Json => serde_json::to_string_pretty(&o).expect("serializable") + "\n",
                _ => {
                    let mut s = format!(
                        "public_a = {}\npublic_b = {}\nshared_a = {}\nshared_b = {}\n",
                        o.public_a, o.public_b, o.shared_a, o.shared_b
                    );
                    for v in &o.verdicts {
                        s += &format!("{v}\n");
                    }
                    s
                }
            });
            (header, outcome)
        }
        Protocol::Rsa => {
            let name = args.fixture.as_deref().unwrap_or("3233");
            let fixture = load_fixture("rsa", name)?;
            let keys = RsaKeyPair::from_fixture(&fixture)?;
            let order = match args.order {
                Order::Totient => ExponentOrder::Totient,
                Order::KeyMultiple => ExponentOrder::KeyMultiple,
            };
            let header = format!(
                "# expguard demo rsa fixture={name} order={} l={} k-bits={} seed={} {fault_desc}",
                match args.order {
                    Order::Totient => "totient",
                    Order::KeyMultiple => "key-multiple",
                },
                opts.l,
                opts.k_bits,
                args.seed
            );
            let outcome =
                rsa_roundtrip(&keys, fixture.get("message")?, order, opts, &mut rng, plan).map(
                    |o| match args.format {
                        Format::Json => {
                            serde_json::to_string_pretty(&o).expect("serializable") + "\n"
                        }
                        _ => {
                            let mut s = format!(
                                "ciphertext = {}\nrecovered = {}\n",
                                o.ciphertext, o.recovered
                            );
                            for v in &o.verdicts {
                                s += &format!("{v}\n");
                            }
                            s
                        }
                    },
                );
            (header, outcome)
        }
    };

    match outcome {
        Ok(body) => {
            let body = match args.format {
                Format::Json => body,
                _ => format!("{header}\n{body}"),
            };
            emit(args.out.as_deref(), &body)?;
            Ok(DemoStatus::Ok)
        }
        Err(Error::FaultDetected { step, detail }) => {
            let text = match args.format {
                Format::Json => {
                    serde_json::json!({ "fault_detected": { "step": step, "detail": detail.to_string() } })
                        .to_string()
                        + "\n"
                }
                _ => format!("{header}\nFAULT_DETECTED at step {step}: {detail}\n"),
            };
            emit(args.out.as_deref(), &text)?;
            Ok(DemoStatus::FaultDetected)
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Simulate(args) => simulate(args).map(|_| DemoStatus::Ok),
        Command::Bench(args) => bench(args).map(|_| DemoStatus::Ok),
        Command::Demo(args) => demo(args),
    };
    match status {
        Ok(DemoStatus::Ok) => ExitCode::SUCCESS,
        Ok(DemoStatus::FaultDetected) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
