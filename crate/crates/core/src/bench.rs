//! Wall-clock overhead of Scheme 2 against the unprotected exponentiation.
//!
//! Both flows run on the same fixed inputs. The unprotected flow is a single
//! instrumented pass (base and exponent reductions included) with no
//! encoding, no second round and no comparison.
//!
//! Each repetition times the unprotected flow and then every protected flow
//! back to back on the same input, so all samples of a repetition see the
//! same machine speed. The reported overhead for `l` is the median over
//! repetitions of `(protected − unprotected) / unprotected`; per-flow median
//! times and the overhead of those medians are reported alongside.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encoding::DEFAULT_K_BITS;
use crate::primes::RsaModulus;
use crate::protection::{scheme2_partial, NoFault};
use crate::{modexp_instrumented, Error, ModulusContext, Nat, Result, Rng};

const BENCH_STREAM: u64 = 0x6265_6e63;
const ENCODING_STREAM: u64 = 0x0065_6e63;
/// A sample must last at least this many timer ticks.
const MIN_TICKS_PER_SAMPLE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub modulus_bits: u64,
    pub l_values: Vec<u64>,
    pub repetitions: usize,
    pub warmup: usize,
    /// Calls per timed sample.
    pub batch: usize,
    /// Distinct (base, exponent) pairs cycled through by the samples.
    pub inputs: usize,
    pub k_bits: u64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            modulus_bits: 2048,
            l_values: vec![10, 20, 50, 128, 256],
            repetitions: 1000,
            warmup: 3,
            batch: 1,
            inputs: 16,
            k_bits: DEFAULT_K_BITS,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.modulus_bits < 16 {
            return bad(format!(
                "modulus of {} bits is too small (min 16)",
                self.modulus_bits
            ));
        }
        if self.repetitions < 10 {
            return bad("at least 10 repetitions are needed for a reportable median".into());
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        if self.inputs == 0 {
            return bad("at least one input is required".into());
        }
        if self.l_values.is_empty() {
            return bad("at least one l value is required".into());
        }
        if let Some(l) = self
            .l_values
            .iter()
            .find(|&&l| l == 0 || l > self.modulus_bits)
        {
            return bad(format!("l = {l} outside [1, {}]", self.modulus_bits));
        }
        if self.k_bits == 0 {
            return bad("k-bits must be at least 1".into());
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "bits={} l={} repetitions={} warmup={} batch={} inputs={} k-bits={} seed={}",
            self.modulus_bits,
            self.l_values
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.repetitions,
            self.warmup,
            self.batch,
            self.inputs,
            self.k_bits,
            self.seed
        )
    }
}

/// Median and interquartile range of per-call times, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median_ns: f64,
    pub iqr_ns: f64,
}

impl Summary {
    pub fn of(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        Summary {
            median_ns: quantile(&s, 0.5),
            iqr_ns: quantile(&s, 0.75) - quantile(&s, 0.25),
        }
    }
}

/// Linear interpolation between closest ranks; `sorted` must be nonempty.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub l: u64,
    pub unprotected: Summary,
    pub protected: Summary,
    /// Median of the per-repetition overheads.
    pub overhead_percent: f64,
    pub overhead_iqr_percent: f64,
    /// Overhead of the median times, `(protected − unprotected) / unprotected`.
    pub unpaired_overhead_percent: f64,
}

/// Least-squares fit `overhead ≈ intercept + slope · l / modulus_bits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
    pub residuals: Vec<f64>,
}

impl AffineFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let n = xs.len() as f64;
        if xs.len() < 2 {
            return None;
        }
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residuals = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| y - (intercept + slope * x))
            .collect();
        Some(AffineFit {
            intercept,
            slope,
            residuals,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub timer_resolution_ns: u64,
    pub environment: String,
    pub fit: Option<AffineFit>,
}

struct Input {
    index: u64,
    base: Nat,
    exponent: Nat,
}

fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..1000 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

/// Pins the calling thread to the CPU it is running on.
#[cfg(target_os = "linux")]
fn pin_current_thread() -> std::result::Result<usize, String> {
    // SAFETY: sched_getcpu has no preconditions; the cpu_set_t is zeroed
    // before use and only read by sched_setaffinity.
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return Err("sched_getcpu failed".into());
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            return Err("sched_setaffinity failed".into());
        }
        Ok(cpu as usize)
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_current_thread() -> std::result::Result<usize, String> {
    Err("thread pinning not supported on this platform".into())
}

fn unprotected(ctx: &ModulusContext, inputs: &[&Input], l: u64) {
    for i in inputs {
        black_box(modexp_instrumented(&i.base, &i.exponent, ctx, l).expect("unit base"));
    }
}

fn protected(ctx: &ModulusContext, inputs: &[&Input], l: u64, k_bits: u64, seed: u64) {
    for i in inputs {
        let mut rng = Rng::derive(seed, &[ENCODING_STREAM, i.index]);
        black_box(
            scheme2_partial(&i.base, &i.exponent, ctx, l, &mut rng, k_bits, &mut NoFault)
                .expect("valid inputs"),
        );
    }
}

fn time_ns(batch: usize, f: impl FnOnce()) -> f64 {
    let t = Instant::now();
    f();
    t.elapsed().as_nanos() as f64 / batch as f64
}

/// Runs on the calling thread only; call it from a quiet process.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let pinned = pin_current_thread();

    let mut rng = Rng::derive(config.seed, &[BENCH_STREAM]);
    let ctx = RsaModulus::generate(config.modulus_bits, &mut rng)?.context();
    let inputs: Vec<Input> = (0..config.inputs as u64)
        .map(|index| {
            let base = loop {
                let x = rng.nat_below(ctx.modulus());
                if ctx.is_unit(&x) {
                    break x;
                }
            };
            Input {
                index,
                base,
                exponent: rng.bits(config.modulus_bits),
            }
        })
        .collect();
    let sample_inputs = |rep: usize| -> Vec<&Input> {
        (0..config.batch)
            .map(|j| &inputs[(rep * config.batch + j) % inputs.len()])
            .collect()
    };
    let baseline_l = *config.l_values.iter().min().expect("validated");

    for rep in 0..config.warmup {
        let batch = sample_inputs(rep);
        unprotected(&ctx, &batch, baseline_l);
        for &l in &config.l_values {
            protected(&ctx, &batch, l, config.k_bits, config.seed);
        }
    }

    let resolution = timer_resolution();
    let mut base_samples = Vec::with_capacity(config.repetitions);
    let mut prot_samples = vec![Vec::with_capacity(config.repetitions); config.l_values.len()];
    let mut overheads = vec![Vec::with_capacity(config.repetitions); config.l_values.len()];
    for rep in 0..config.repetitions {
        let batch = sample_inputs(rep);
        let base = time_ns(config.batch, || unprotected(&ctx, &batch, baseline_l));
        base_samples.push(base);
        for ((slot, ratios), &l) in prot_samples
            .iter_mut()
            .zip(&mut overheads)
            .zip(&config.l_values)
        {
            let t = time_ns(config.batch, || {
                protected(&ctx, &batch, l, config.k_bits, config.seed)
            });
            slot.push(t);
            ratios.push((t - base) / base * 100.0);
        }
    }

    let unprotected = Summary::of(&base_samples);
    let sample_ns = (unprotected.median_ns * config.batch as f64) as u64;
    let resolution_ns = resolution.as_nanos().max(1) as u64;
    if sample_ns < resolution_ns * MIN_TICKS_PER_SAMPLE {
        return Err(Error::TimerTooCoarse {
            resolution_ns,
            sample_ns,
        });
    }

    let rows: Vec<BenchRow> = config
        .l_values
        .iter()
        .zip(prot_samples.iter().zip(&overheads))
        .map(|(&l, (samples, ratios))| {
            let protected = Summary::of(samples);
            let overhead = Summary::of(ratios);
            BenchRow {
                l,
                unprotected,
                protected,
                overhead_percent: overhead.median_ns,
                overhead_iqr_percent: overhead.iqr_ns,
                unpaired_overhead_percent: (protected.median_ns - unprotected.median_ns)
                    / unprotected.median_ns
                    * 100.0,
            }
        })
        .collect();
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| r.l as f64 / config.modulus_bits as f64)
        .collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.overhead_percent).collect();

    let environment = format!(
        "{} {} logical-cpus={} {}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(0, |n| n.get()),
        match pinned {
            Ok(cpu) => format!("pinned-to-cpu={cpu}"),
            Err(why) => format!("unpinned ({why})"),
        }
    );
    Ok(BenchReport {
        config: config.clone(),
        rows,
        timer_resolution_ns: resolution_ns,
        environment,
        fit: AffineFit::fit(&xs, &ys),
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// Aligned table: l, unprotected, protected, overhead.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# expguard bench {}", self.config.describe());
        let _ = writeln!(
            out,
            "# timer resolution {} ns; {}",
            self.timer_resolution_ns, self.environment
        );
        let _ = writeln!(
            out,
            "# medians of {} paired samples x {} calls; wall-clock on this host, so tolerance bands are engineering judgments",
            self.config.repetitions, self.config.batch
        );
        let _ = writeln!(
            out,
            "{:>6} {:>18} {:>18} {:>10} {:>14} {:>10}",
            "l", "unprotected (us)", "protected (us)", "overhead", "iqr overhead", "unpaired"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>6} {:>18.1} {:>18.1} {:>9.2}% {:>13.2}% {:>9.2}%",
                r.l,
                r.unprotected.median_ns / 1e3,
                r.protected.median_ns / 1e3,
                r.overhead_percent,
                r.overhead_iqr_percent,
                r.unpaired_overhead_percent
            );
        }
        if let Some(fit) = &self.fit {
            let residuals: Vec<String> = fit.residuals.iter().map(|r| format!("{r:+.2}")).collect();
            let _ = writeln!(
                out,
                "# fit: overhead% = {:.2} + {:.2} * l/bits; residuals [{}]",
                fit.intercept,
                fit.slope,
                residuals.join(", ")
            );
        }
        out
    }
}
