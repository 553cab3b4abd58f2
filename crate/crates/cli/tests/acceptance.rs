//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Campaign, benchmark and demo criteria run the `expguard` binary end to
//! end; the oracle and fault-model criteria call the library directly. Pass
//! criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p expguard-cli --test acceptance -- 7 8 9`.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use expguard_core::fault::{apply_fault_recorded, Change, FaultModel};
use expguard_core::{
    modexp_instrumented, modexp_partial, modexp_plain, popcount, ModulusContext, Nat, Rng,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const K_VALUES: [u64; 6] = [3, 5, 15, 25, 75, 128];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn expguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expguard"))
        .args(args)
        .output()
        .expect("expguard runs")
}

fn stdout_of(args: &[&str]) -> Result<String, String> {
    let out = expguard(args);
    if !out.status.success() {
        return Err(format!(
            "expguard {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
struct Cell {
    model: String,
    target: String,
    l: u64,
    k: Option<u64>,
    injected: u64,
    detected: u64,
    benign: u64,
    corrupt: u64,
    detection_rate: f64,
}

fn parse_csv(text: &str) -> Vec<Cell> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r.expect("well-formed csv");
            Cell {
                model: r[0].to_string(),
                target: r[1].to_string(),
                l: r[2].parse().unwrap(),
                k: r[3].parse().ok(),
                injected: r[4].parse().unwrap(),
                detected: r[5].parse().unwrap(),
                benign: r[6].parse().unwrap(),
                corrupt: r[7].parse().unwrap(),
                detection_rate: r[8].parse().unwrap(),
            }
        })
        .collect()
}

fn simulate(args: &[&str]) -> Result<(String, Vec<Cell>), String> {
    let mut full = vec![
        "simulate",
        "--bits",
        "2048",
        "--iterations",
        "1000",
        "--format",
        "csv",
    ];
    full.extend_from_slice(args);
    let text = stdout_of(&full)?;
    let cells = parse_csv(&text);
    Ok((text, cells))
}

fn find<'a>(cells: &'a [Cell], target: &str, l: u64) -> &'a Cell {
    cells
        .iter()
        .find(|c| c.target == target && c.l == l)
        .unwrap_or_else(|| panic!("no cell {target} l={l}"))
}

/// Checks `rate ≥ floor` for each listed `l`; returns (all passed, summary).
fn floors(cells: &[Cell], target: &str, bounds: &[(u64, f64)]) -> (bool, String) {
    let mut ok = true;
    let parts: Vec<String> = bounds
        .iter()
        .map(|&(l, floor)| {
            let rate = find(cells, target, l).detection_rate;
            let hit = rate >= floor;
            ok &= hit;
            format!("l={l} {rate:.4}{}{floor}", if hit { ">=" } else { "<" })
        })
        .collect();
    (ok, parts.join(", "))
}

/// Campaign outputs shared between criteria.
#[derive(Default)]
struct Runs {
    criterion1: Option<Result<String, String>>,
    per_model: BTreeMap<String, Result<Vec<Cell>, String>>,
}

const CRITERION1: [&str; 8] = [
    "--model",
    "total-random",
    "--targets",
    "x1",
    "--l",
    "10,20,50,128",
    "--seed",
    "42",
];

fn criterion1_csv(runs: &mut Runs) -> Result<String, String> {
    runs.criterion1
        .get_or_insert_with(|| {
            let mut args = CRITERION1.to_vec();
            args.extend(["--threads", "1"]);
            simulate(&args).map(|(text, _)| text)
        })
        .clone()
}

fn c1(runs: &mut Runs) -> Verdict {
    match criterion1_csv(runs) {
        Err(e) => verdict(false, e),
        Ok(text) => {
            let cells = parse_csv(&text);
            let (low_ok, low) = floors(&cells, "x1", &[(10, 0.981)]);
            let exact: Vec<&Cell> = [20, 50, 128]
                .iter()
                .map(|&l| find(&cells, "x1", l))
                .collect();
            let exact_ok = exact
                .iter()
                .all(|c| c.detected == c.injected && c.injected == 1000);
            let exact_desc: Vec<String> = exact
                .iter()
                .map(|c| format!("l={} {:.4}", c.l, c.detection_rate))
                .collect();
            verdict(
                low_ok && exact_ok,
                format!(
                    "total-random x1: {low}; {} (must be 1.0000)",
                    exact_desc.join(", ")
                ),
            )
        }
    }
}

fn c2() -> Verdict {
    match simulate(&[
        "--model",
        "single-bit",
        "--targets",
        "y1",
        "--l",
        "10,20,50,128",
        "--seed",
        "42",
    ]) {
        Err(e) => verdict(false, e),
        Ok((_, cells)) => {
            let (ok, desc) = floors(
                &cells,
                "y1",
                &[(10, 0.97), (20, 0.98), (50, 0.98), (128, 0.995)],
            );
            verdict(ok, format!("single-bit y1: {desc}"))
        }
    }
}

fn model_args(model: &str, k: Option<u64>) -> Vec<String> {
    let mut args = vec!["--model".to_string(), model.to_string()];
    if let Some(k) = k {
        args.extend(["--faults".to_string(), k.to_string()]);
    }
    args
}

fn all_models() -> Vec<(String, Option<u64>)> {
    let mut models = vec![
        ("total-random".to_string(), None),
        ("single-bit".to_string(), None),
    ];
    for kind in ["k-random", "k-burst"] {
        models.extend(K_VALUES.iter().map(|&k| (kind.to_string(), Some(k))));
    }
    models
}

fn label(model: &str, k: Option<u64>) -> String {
    match k {
        Some(k) => format!("{model}(k={k})"),
        None => model.to_string(),
    }
}

/// One campaign per model covering the composite targets and, for the
/// k-parameterized models, y1; cells are independent of which other targets
/// share the run.
fn model_cells(runs: &mut Runs, model: &str, k: Option<u64>) -> Result<Vec<Cell>, String> {
    runs.per_model
        .entry(label(model, k))
        .or_insert_with(|| {
            let targets = if k.is_some() {
                "y1,c1,c2,c3"
            } else {
                "c1,c2,c3"
            };
            let mut args = model_args(model, k);
            args.extend(["--targets", targets, "--l", "20,50", "--seed", "42"].map(String::from));
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            simulate(&args).map(|(_, cells)| cells)
        })
        .clone()
}

fn c3(runs: &mut Runs) -> Verdict {
    let mut failures = Vec::new();
    let mut cells_checked = 0;
    for (model, k) in all_models() {
        match model_cells(runs, &model, k) {
            Err(e) => failures.push(e),
            Ok(cells) => {
                for c in cells.iter().filter(|c| c.target.starts_with('c')) {
                    cells_checked += 1;
                    if c.injected != 1000 || c.detected != c.injected {
                        failures.push(format!(
                            "{} {} l={} {:.4}",
                            label(&c.model, c.k),
                            c.target,
                            c.l,
                            c.detection_rate
                        ));
                    }
                }
            }
        }
    }
    let pass = failures.is_empty() && cells_checked == all_models().len() * 6;
    let detail = if failures.is_empty() {
        format!("{cells_checked} composite cells, all 1000/1000 detected")
    } else {
        format!(
            "{} of {cells_checked} cells below 1.0000: {}",
            failures.len(),
            failures.join("; ")
        )
    };
    verdict(pass, detail)
}

fn c4(runs: &mut Runs) -> Verdict {
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (model, k) in all_models().into_iter().filter(|(_, k)| k.is_some()) {
        match model_cells(runs, &model, k) {
            Err(e) => failures.push(e),
            Ok(cells) => {
                let (ok, desc) = floors(&cells, "y1", &[(20, 0.955), (50, 0.97)]);
                rows.push(format!("{}: {desc}", label(&model, k)));
                if !ok {
                    failures.push(label(&model, k));
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "y1 floors; failing: [{}]; {}",
            failures.join(", "),
            rows.join("; ")
        ),
    )
}

fn c5() -> Verdict {
    let text = match stdout_of(&[
        "bench",
        "--bits",
        "2048",
        "--l",
        "10,20,50,128,256",
        "--format",
        "json",
    ]) {
        Ok(t) => t,
        Err(e) => return verdict(false, e),
    };
    let report: serde_json::Value = serde_json::from_str(&text).expect("bench json");
    let rows: Vec<(u64, f64)> = report["rows"]
        .as_array()
        .expect("rows")
        .iter()
        .map(|r| {
            (
                r["l"].as_u64().unwrap(),
                r["overhead_percent"].as_f64().unwrap(),
            )
        })
        .collect();
    let at = |l: u64| {
        rows.iter()
            .find(|r| r.0 == l)
            .map(|r| r.1)
            .unwrap_or(f64::NAN)
    };
    let increasing = rows.windows(2).all(|w| w[1].1 > w[0].1);
    let band = (5.0..=15.0).contains(&at(128));
    let low = at(10) < 5.0;
    let desc: Vec<String> = rows.iter().map(|(l, o)| format!("l={l} {o:.2}%")).collect();
    verdict(
        increasing && band && low,
        format!(
            "overhead {} (strictly increasing: {increasing}, l=128 in [5,15]: {band}, l=10 < 5: {low})",
            desc.join(", ")
        ),
    )
}

fn c6() -> Verdict {
    match simulate(&[
        "--model",
        "none",
        "--targets",
        "x1",
        "--l",
        "128",
        "--seed",
        "6",
    ]) {
        Err(e) => verdict(false, e),
        Ok((_, cells)) => {
            let c = find(&cells, "x1", 128);
            verdict(
                c.injected == 1000 && c.benign == 1000 && c.detected == 0 && c.corrupt == 0,
                format!(
                    "fault-free scheme 2 at 2048 bits: {} accepted with golden result, {} detected, {} corrupt",
                    c.benign, c.detected, c.corrupt
                ),
            )
        }
    }
}

fn naive_pow(x: u64, y: u64, n: u64) -> u64 {
    (0..y).fold(1 % n, |acc, _| acc * x % n)
}

fn c7() -> Verdict {
    let mut mismatches = 0;
    let mut checked = 0;
    for n in [2u64, 3, 5, 7, 9, 15, 21, 35, 77] {
        for x in 0..64u64 {
            for y in 0..64u64 {
                checked += 1;
                let got = modexp_plain(&Nat::from(x), &Nat::from(y), &Nat::from(n)).unwrap();
                if got != Nat::from(naive_pow(x, y, n)) {
                    mismatches += 1;
                }
            }
        }
    }
    let ctx = |n: u32, phi: u32| ModulusContext::new(Nat::from(n), Nat::from(phi)).unwrap();
    let n = |v: u32| Nat::from(v);
    let traces = [
        (
            modexp_instrumented(&n(3), &n(5), &ctx(7, 6), 2).unwrap(),
            (n(5), n(3), 2),
        ),
        (
            modexp_instrumented(&n(3), &n(17), &ctx(7, 6), 2).unwrap(),
            (n(5), n(3), 2),
        ),
        (
            modexp_instrumented(&n(2), &n(0), &ctx(9, 6), 4).unwrap(),
            (n(1), n(1), 0),
        ),
    ];
    let traces_ok = traces
        .iter()
        .all(|(o, (r, p, hw))| (&o.result, &o.result_partial, o.hamming_weight) == (r, p, *hw));
    let partials = [
        (
            modexp_partial(&n(3), &n(29), &ctx(7, 6), 2).unwrap(),
            (n(3), 2),
        ),
        (
            modexp_partial(&n(5), &n(6), &ctx(7, 6), 3).unwrap(),
            (n(1), 0),
        ),
        (
            modexp_partial(&n(10), &n(7), &ctx(21, 12), 1).unwrap(),
            (n(10), 3),
        ),
    ];
    let partials_ok = partials
        .iter()
        .all(|(o, (p, hw))| (&o.partial, o.hamming_weight) == (p, *hw));
    let popcount_ok = popcount(&n(13)) == 3 && popcount(&n(0)) == 0 && popcount(&(n(1) << 50)) == 1;
    verdict(
        mismatches == 0 && traces_ok && partials_ok && popcount_ok,
        format!(
            "{checked} grid points, {mismatches} mismatches; hand traces {}; partial examples {}; popcount {}",
            ok_word(traces_ok),
            ok_word(partials_ok),
            ok_word(popcount_ok)
        ),
    )
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "match"
    } else {
        "MISMATCH"
    }
}

/// Flipped positions as a sorted list, derived from the XOR of input and output.
fn flipped(a: &Nat, b: &Nat) -> Vec<u64> {
    let d = a ^ b;
    (0..d.bits()).filter(|&i| d.bit(i)).collect()
}

fn fault_case(kind: &str, w: u64, k: u64, v: &Nat, seed: u64) -> Result<(), TestCaseError> {
    let model = match kind {
        "total-random" => FaultModel::total_random(),
        "single-bit" => FaultModel::single_bit(),
        "k-random" => FaultModel::k_random(k).unwrap(),
        _ => FaultModel::k_burst(k).unwrap(),
    }
    .with_width(w)
    .unwrap();
    let (out, record) = apply_fault_recorded(&model, v, &mut Rng::new(seed));
    let (again, _) = apply_fault_recorded(&model, v, &mut Rng::new(seed));
    prop_assert_eq!(&out, &again, "reproducibility");
    prop_assert!(out.bits() <= w, "domain");
    let pos = flipped(v, &out);
    match kind {
        "single-bit" => prop_assert_eq!(pos.len(), 1),
        "k-random" => {
            prop_assert_eq!(pos.len() as u64, k);
            prop_assert_eq!(
                record.change,
                Change::Flipped {
                    positions: pos.clone()
                }
            );
        }
        "k-burst" => {
            let len = pos.len() as u64;
            prop_assert!((1..=k).contains(&len), "burst length {len}");
            prop_assert!(pos.windows(2).all(|p| p[1] == p[0] + 1), "contiguous");
            prop_assert!(
                len == k || pos[pos.len() - 1] == w - 1,
                "short only at the top"
            );
        }
        _ => {}
    }
    Ok(())
}

fn c8() -> Verdict {
    let strategy = (
        1u64..=2100,
        1u64..=256,
        prop::collection::vec(any::<u32>(), 66),
        any::<u64>(),
    )
        .prop_map(|(w, k, digits, seed)| {
            let v = Nat::new(digits) & ((Nat::from(1u8) << w) - 1u8);
            (w, k.min(w), v, seed)
        });
    let mut lines = Vec::new();
    let mut pass = true;
    for kind in ["total-random", "single-bit", "k-random", "k-burst"] {
        let mut runner = TestRunner::new(Config {
            cases: 10_000,
            failure_persistence: None,
            ..Config::default()
        });
        let result = runner.run(&strategy, |(w, k, v, seed)| {
            fault_case(kind, w, k, &v, seed)
        });
        match result {
            Ok(()) => lines.push(format!("{kind} 10000 cases ok")),
            Err(e) => {
                pass = false;
                lines.push(format!("{kind} violation: {e}"));
            }
        }
    }
    verdict(pass, lines.join(", "))
}

fn c9() -> Verdict {
    let dh = expguard(&["demo", "dh", "--fixture", "23"]);
    let rsa = expguard(&["demo", "rsa", "--fixture", "3233"]);
    let dh_text = String::from_utf8_lossy(&dh.stdout);
    let rsa_text = String::from_utf8_lossy(&rsa.stdout);
    let has = |text: &str, line: &str| text.lines().any(|l| l.trim() == line);
    let accepted = |text: &str, steps: usize| {
        text.lines().filter(|l| l.ends_with(": ACCEPTED")).count() == steps
    };
    let dh_ok = dh.status.success()
        && has(&dh_text, "public_a = 8")
        && has(&dh_text, "public_b = 19")
        && has(&dh_text, "shared_a = 2")
        && has(&dh_text, "shared_b = 2")
        && accepted(&dh_text, 4);
    let rsa_ok = rsa.status.success()
        && has(&rsa_text, "ciphertext = 2790")
        && has(&rsa_text, "recovered = 65")
        && accepted(&rsa_text, 2);
    verdict(
        dh_ok && rsa_ok,
        format!(
            "dh P=23: shared secret 2 on both sides, 4 ACCEPTED: {dh_ok}; rsa 3233: 2790 -> 65, 2 ACCEPTED: {rsa_ok}"
        ),
    )
}

fn c10(runs: &mut Runs) -> Verdict {
    let first = match criterion1_csv(runs) {
        Ok(t) => t,
        Err(e) => return verdict(false, e),
    };
    let mut again_args = CRITERION1.to_vec();
    again_args.extend(["--threads", "1"]);
    let mut eight_args = CRITERION1.to_vec();
    eight_args.extend(["--threads", "8"]);
    let (again, eight) = match (simulate(&again_args), simulate(&eight_args)) {
        (Ok((a, _)), Ok((b, _))) => (a, b),
        (Err(e), _) | (_, Err(e)) => return verdict(false, e),
    };
    let repeat = first == again;
    let threads = first == eight;
    verdict(
        repeat && threads,
        format!(
            "seed 42 repeated: {}; --threads 1 vs --threads 8: {}",
            if repeat {
                "byte-identical"
            } else {
                "DIFFERENT"
            },
            if threads {
                "byte-identical"
            } else {
                "DIFFERENT"
            }
        ),
    )
}

type Check = dyn Fn(&mut Runs) -> Verdict;

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut runs = Runs::default();
    let criteria: [(u32, &str, &Check); 10] = [
        (7, "oracle equivalence", &|_| c7()),
        (8, "fault-model properties", &|_| c8()),
        (9, "protocol demos", &|_| c9()),
        (6, "completeness", &|_| c6()),
        (1, "total-random x1 coverage", &c1),
        (10, "determinism", &c10),
        (2, "single-bit y1 coverage", &|_| c2()),
        (5, "overhead shape", &|_| c5()),
        (3, "composite targets", &c3),
        (4, "y1 coverage floor", &c4),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (n, name, check) in criteria {
        if !wanted(n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = check(&mut runs);
        println!(
            "[{}] criterion {n:>2} {name}: {} ({:.0}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().ok();
        if !v.pass {
            failed.push(n);
        }
    }
    println!(
        "acceptance: {} of {ran} criteria passed; failed: {failed:?}",
        ran - failed.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
