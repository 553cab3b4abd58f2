//! Monte-Carlo error-coverage campaigns.
//!
//! A campaign sweeps every `(target, l)` cell for one fault model. Each
//! trial draws a fresh base and exponent against a modulus from a seeded
//! pool, injects the fault through the protection hooks, runs the configured
//! scheme and classifies the verdict against a fault-free reference.
//!
//! Trial `t` of a cell uses the stream
//! `Rng::derive(seed, [kind, k, target, l, t])`; the modulus pool uses
//! `Rng::derive(seed, [POOL_STREAM, modulus_bits, i])`. Results therefore do
//! not depend on thread count or execution order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::encoding::DEFAULT_K_BITS;
use crate::fault::{make_hooks, Change, FaultModel, FaultTarget, InjectionRecord};
use crate::primes::RsaModulus;
use crate::protection::{scheme1_full, scheme2_partial, Operand, Verdict};
use crate::{modexp_plain, Error, ModulusContext, Nat, Result, Rng};

pub const DEFAULT_MODULUS_BITS: u64 = 2048;
pub const DEFAULT_ITERATIONS: u64 = 1000;
pub const DEFAULT_POOL_SIZE: usize = 16;
const POOL_STREAM: u64 = 0x706f_6f6c;
const BASE_ATTEMPTS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "1")]
    Full,
    #[serde(rename = "2")]
    Partial,
}

impl Scheme {
    pub fn number(self) -> u8 {
        match self {
            Scheme::Full => 1,
            Scheme::Partial => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub modulus_bits: u64,
    pub k_bits: u64,
    pub l_values: Vec<u64>,
    pub fault_model: FaultModel,
    pub targets: Vec<FaultTarget>,
    pub iterations: u64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Number of distinct moduli trials draw from.
    pub modulus_pool: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            modulus_bits: DEFAULT_MODULUS_BITS,
            k_bits: DEFAULT_K_BITS,
            l_values: vec![10, 20, 50, 128],
            fault_model: FaultModel::total_random(),
            targets: vec![FaultTarget::X1],
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            scheme: Scheme::Partial,
            modulus_pool: DEFAULT_POOL_SIZE,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.modulus_bits < 16 {
            return bad(format!(
                "modulus of {} bits is too small (min 16)",
                self.modulus_bits
            ));
        }
        if self.k_bits == 0 {
            return bad("k-bits must be at least 1".into());
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
        if self.targets.is_empty() {
            return bad("at least one target is required".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.modulus_pool == 0 {
            return bad("modulus pool must hold at least one modulus".into());
        }
        Ok(())
    }

    /// One-line `key=value` rendering of the effective configuration.
    pub fn describe(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        format!(
            "model={} k={} targets={} l={} bits={} k-bits={} iterations={} seed={} scheme={} modulus-pool={}",
            self.fault_model.label(),
            self.fault_model.k().map_or("-".to_string(), |k| k.to_string()),
            join(self.targets.iter().map(|t| t.to_string()).collect()),
            join(self.l_values.iter().map(|l| l.to_string()).collect()),
            self.modulus_bits,
            self.k_bits,
            self.iterations,
            self.seed,
            self.scheme.number(),
            self.modulus_pool,
        )
    }
}

/// Moduli with known totients shared by all trials of a campaign.
///
/// Pools are cached per process, keyed by `(seed, modulus_bits, size)`.
pub fn modulus_pool(seed: u64, modulus_bits: u64, size: usize) -> Result<Arc<Vec<ModulusContext>>> {
    type Cache = Mutex<HashMap<(u64, u64, usize), Arc<Vec<ModulusContext>>>>;
    static POOLS: OnceLock<Cache> = OnceLock::new();
    let key = (seed, modulus_bits, size);
    let cache = POOLS.get_or_init(Default::default);
    if let Some(pool) = cache.lock().expect("pool cache poisoned").get(&key) {
        return Ok(Arc::clone(pool));
    }
    let pool = Arc::new(generate_pool(seed, modulus_bits, size)?);
    cache
        .lock()
        .expect("pool cache poisoned")
        .insert(key, Arc::clone(&pool));
    Ok(pool)
}

fn generate_pool(seed: u64, modulus_bits: u64, size: usize) -> Result<Vec<ModulusContext>> {
    (0..size as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::derive(seed, &[POOL_STREAM, modulus_bits, i]);
            RsaModulus::generate(modulus_bits, &mut rng).map(|m| m.context())
        })
        .collect()
}

/// Everything a single trial needs besides its random stream.
#[derive(Debug, Clone, Copy)]
pub struct TrialParams {
    pub model: FaultModel,
    pub target: FaultTarget,
    pub l: u64,
    pub k_bits: u64,
    pub modulus_bits: u64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Detected,
    AcceptedBenign,
    AcceptedCorrupt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub classification: Classification,
    pub fault_audit: Vec<InjectionRecord>,
    /// False when every injection left its operand unchanged (a random
    /// replacement that drew the original value). Still counted as injected.
    pub effective: bool,
}

pub fn run_trial(
    params: &TrialParams,
    pool: &[ModulusContext],
    rng: &mut Rng,
) -> Result<TrialOutcome> {
    let ctx = pool
        .get(rng.below(pool.len().max(1) as u64) as usize)
        .ok_or_else(|| Error::InvalidConfig("empty modulus pool".into()))?;
    let base = sample_unit(ctx, rng)?;
    let exponent = rng.bits(params.modulus_bits);
    let mut hooks = make_hooks(params.model, params.target, rng.fork());

    let (verdict, transcript) = match params.scheme {
        Scheme::Full => scheme1_full(&base, &exponent, ctx, rng, params.k_bits, &mut hooks)?,
        Scheme::Partial => scheme2_partial(
            &base,
            &exponent,
            ctx,
            params.l,
            rng,
            params.k_bits,
            &mut hooks,
        )?,
    };
    let fault_audit = hooks.into_records();
    let effective = fault_audit.iter().any(|r| match &r.change {
        Change::Unchanged => false,
        Change::Replaced { value } => {
            let original = match r.operand {
                Some(Operand::X1) => &transcript.encodings[0].encoded_base,
                Some(Operand::Y1) => &transcript.encodings[0].encoded_exponent,
                Some(Operand::X2) => &transcript.encodings[1].encoded_base,
                Some(Operand::Y2) => &transcript.encodings[1].encoded_exponent,
                None => return true,
            };
            value != original
        }
        Change::Flipped { .. } | Change::Burst { .. } => true,
    });

    let classification = match verdict {
        Verdict::FaultDetected(_) => Classification::Detected,
        Verdict::Accepted(output) => {
            let golden = modexp_plain(&base, &(&exponent % ctx.totient()), ctx.modulus())?;
            if output == golden {
                Classification::AcceptedBenign
            } else {
                Classification::AcceptedCorrupt
            }
        }
    };
    Ok(TrialOutcome {
        classification,
        fault_audit,
        effective,
    })
}

fn sample_unit(ctx: &ModulusContext, rng: &mut Rng) -> Result<Nat> {
    for _ in 0..BASE_ATTEMPTS {
        let x = rng.nat_below(ctx.modulus());
        if ctx.is_unit(&x) {
            return Ok(x);
        }
    }
    Err(Error::InstanceSampling(BASE_ATTEMPTS))
}

/// Rate rendered with exactly four fractional digits in every format.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Deserialize)]
pub struct Rate(pub f64);

impl Rate {
    fn of(num: u64, den: u64) -> Self {
        Rate(if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        })
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = serde_json::value::RawValue::from_string(self.to_string())
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub model: String,
    pub target: FaultTarget,
    pub l: u64,
    pub k: Option<u64>,
    pub injected: u64,
    pub detected: u64,
    pub benign: u64,
    pub corrupt: u64,
    pub detection_rate: Rate,
    pub escape_rate: Rate,
}

impl CellStats {
    fn from_counts(model: &FaultModel, target: FaultTarget, l: u64, counts: [u64; 3]) -> Self {
        let [detected, benign, corrupt] = counts;
        let injected = detected + benign + corrupt;
        CellStats {
            model: model.label().to_string(),
            target,
            l,
            k: model.k(),
            injected,
            detected,
            benign,
            corrupt,
            detection_rate: Rate::of(detected, injected),
            escape_rate: Rate::of(corrupt, injected),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub cells: Vec<CellStats>,
}

pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    config.validate()?;
    let pool = modulus_pool(config.seed, config.modulus_bits, config.modulus_pool)?;
    let [kind, k] = config.fault_model.stream_key();
    let mut cells = Vec::with_capacity(config.targets.len() * config.l_values.len());
    for &target in &config.targets {
        for &l in &config.l_values {
            let params = TrialParams {
                model: config.fault_model,
                target,
                l,
                k_bits: config.k_bits,
                modulus_bits: config.modulus_bits,
                scheme: config.scheme,
            };
            let counts = (0..config.iterations)
                .into_par_iter()
                .map(|t| {
                    let mut rng = Rng::derive(config.seed, &[kind, k, target.code(), l, t]);
                    run_trial(&params, &pool, &mut rng).map(|o| tally(o.classification))
                })
                .try_reduce(
                    || [0; 3],
                    |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]),
                )
                .map_err(|e| Error::Cell {
                    cell: format!("{} {target} l={l}", config.fault_model),
                    source: Box::new(e),
                })?;
            cells.push(CellStats::from_counts(
                &config.fault_model,
                target,
                l,
                counts,
            ));
        }
    }
    Ok(CampaignReport {
        config: config.clone(),
        cells,
    })
}

fn tally(c: Classification) -> [u64; 3] {
    match c {
        Classification::Detected => [1, 0, 0],
        Classification::AcceptedBenign => [0, 1, 0],
        Classification::AcceptedCorrupt => [0, 0, 1],
    }
}

pub const CSV_COLUMNS: [&str; 10] = [
    "model",
    "target",
    "l",
    "k",
    "injected",
    "detected",
    "benign",
    "corrupt",
    "detection_rate",
    "escape_rate",
];

impl CampaignReport {
    pub fn cell(&self, target: FaultTarget, l: u64) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.target == target && c.l == l)
    }

    fn header(&self) -> String {
        format!("# expguard simulate {}\n", self.config.describe())
    }

    /// Comment header (`#` lines) followed by one CSV row per cell.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for c in &self.cells {
            w.write_record([
                c.model.clone(),
                c.target.to_string(),
                c.l.to_string(),
                c.k.map(|k| k.to_string()).unwrap_or_default(),
                c.injected.to_string(),
                c.detected.to_string(),
                c.benign.to_string(),
                c.corrupt.to_string(),
                c.detection_rate.to_string(),
                c.escape_rate.to_string(),
            ])
            .expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii");
        self.header() + &body
    }

    /// Nested `model → target → l → stats`, with the configuration echoed.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Stats<'a> {
            k: Option<u64>,
            injected: u64,
            detected: u64,
            benign: u64,
            corrupt: u64,
            detection_rate: &'a Rate,
            escape_rate: &'a Rate,
        }
        let mut results: IndexMap<&str, IndexMap<String, IndexMap<String, Stats>>> =
            IndexMap::new();
        for c in &self.cells {
            results
                .entry(c.model.as_str())
                .or_default()
                .entry(c.target.to_string())
                .or_default()
                .insert(
                    c.l.to_string(),
                    Stats {
                        k: c.k,
                        injected: c.injected,
                        detected: c.detected,
                        benign: c.benign,
                        corrupt: c.corrupt,
                        detection_rate: &c.detection_rate,
                        escape_rate: &c.escape_rate,
                    },
                );
        }
        #[derive(Serialize)]
        struct Doc<'a, R> {
            config: &'a CampaignConfig,
            seed: u64,
            results: R,
        }
        let doc = Doc {
            config: &self.config,
            seed: self.config.seed,
            results,
        };
        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        let _ = writeln!(
            out,
            "{:<13} {:<6} {:>5} {:>4} {:>9} {:>9} {:>7} {:>8} {:>10} {:>8}",
            "model",
            "target",
            "l",
            "k",
            "injected",
            "detected",
            "benign",
            "corrupt",
            "detection",
            "escape"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<13} {:<6} {:>5} {:>4} {:>9} {:>9} {:>7} {:>8} {:>9.2}% {:>7.2}%",
                c.model,
                c.target,
                c.l,
                c.k.map_or("-".to_string(), |k| k.to_string()),
                c.injected,
                c.detected,
                c.benign,
                c.corrupt,
                c.detection_rate.0 * 100.0,
                c.escape_rate.0 * 100.0,
            );
        }
        out
    }
}
