//! Bit-distance, contiguity, domain and reproducibility of every fault model.

use expguard_core::fault::{
    apply_fault, apply_fault_recorded, make_hooks, Change, FaultModel, FaultTarget,
};
use expguard_core::protection::{FaultHooks, Operand};
use expguard_core::{Nat, Rng};
use proptest::prelude::*;

const CASES: u32 = 10_000;

/// Widths 1..=2100 bits and a value below `2^width`.
fn operand() -> impl Strategy<Value = (u64, Nat)> {
    (1u64..=2100, prop::collection::vec(any::<u32>(), 66)).prop_map(|(w, digits)| {
        let v = Nat::new(digits) & ((Nat::from(1u8) << w) - 1u8);
        (w, v)
    })
}

/// `Some((lowest, count))` when the set bits of `mask` form one contiguous run.
fn single_run(mask: &Nat) -> Option<(u64, u64)> {
    let low = mask.trailing_zeros()?;
    let run = mask >> low;
    let count = run.count_ones();
    (run == (Nat::from(1u8) << count) - 1u8).then_some((low, count))
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(CASES)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn single_bit_flips_exactly_one_bit((w, v) in operand(), seed: u64) {
        let m = FaultModel::single_bit().with_width(w).unwrap();
        let out = apply_fault(&m, &v, &mut Rng::new(seed));
        prop_assert_eq!((&out ^ &v).count_ones(), 1);
        prop_assert!(out.bits() <= w);
        prop_assert_eq!(&out, &apply_fault(&m, &v, &mut Rng::new(seed)));
    }

    #[test]
    fn k_random_flips_exactly_k_distinct_bits((w, v) in operand(), k in 1u64..=256, seed: u64) {
        let k = k.min(w);
        let m = FaultModel::k_random(k).unwrap().with_width(w).unwrap();
        let (out, record) = apply_fault_recorded(&m, &v, &mut Rng::new(seed));
        prop_assert_eq!((&out ^ &v).count_ones(), k);
        prop_assert!(out.bits() <= w);
        match record.change {
            Change::Flipped { positions } => {
                prop_assert_eq!(positions.len() as u64, k);
                prop_assert!(positions.iter().all(|&p| p < w));
            }
            other => prop_assert!(false, "unexpected record {:?}", other),
        }
        prop_assert_eq!(&out, &apply_fault(&m, &v, &mut Rng::new(seed)));
    }

    #[test]
    fn k_burst_flips_one_contiguous_run((w, v) in operand(), k in 1u64..=256, seed: u64) {
        let k = k.min(w);
        let m = FaultModel::k_burst(k).unwrap().with_width(w).unwrap();
        let (out, record) = apply_fault_recorded(&m, &v, &mut Rng::new(seed));
        let (low, count) = single_run(&(&out ^ &v)).expect("nonzero contiguous mask");
        prop_assert!((1..=k).contains(&count));
        // Shorter than k only when truncated at the top of the domain.
        prop_assert!(count == k || low + count == w);
        prop_assert!(out.bits() <= w);
        prop_assert_eq!(record.change, Change::Burst { start: low, len: count });
        prop_assert_eq!(&out, &apply_fault(&m, &v, &mut Rng::new(seed)));
    }

    #[test]
    fn total_random_stays_in_domain((w, v) in operand(), seed: u64) {
        let m = FaultModel::total_random().with_width(w).unwrap();
        let out = apply_fault(&m, &v, &mut Rng::new(seed));
        prop_assert!(out.bits() <= w);
        prop_assert_eq!(&out, &apply_fault(&m, &v, &mut Rng::new(seed)));
    }

    #[test]
    fn default_domain_is_operand_width((_w, v) in operand(), seed: u64) {
        let w = v.bits().max(1);
        for m in [FaultModel::single_bit(), FaultModel::k_burst(5).unwrap(), FaultModel::total_random()] {
            let (out, record) = apply_fault_recorded(&m, &v, &mut Rng::new(seed));
            prop_assert_eq!(record.width_bits, w);
            prop_assert!(out.bits() <= w);
        }
    }
}

#[test]
fn hooks_touch_exactly_the_targeted_operands() {
    let models = [
        FaultModel::total_random(),
        FaultModel::single_bit(),
        FaultModel::k_random(5).unwrap(),
        FaultModel::k_burst(5).unwrap(),
    ];
    let mut rng = Rng::new(9);
    for model in models {
        for target in FaultTarget::ALL {
            for _ in 0..20 {
                let mut hooks = make_hooks(model, target, rng.fork());
                for op in Operand::ALL {
                    let v: Nat = rng.bits(300) | (Nat::from(1u8) << 299);
                    let out = hooks.inject(op, v.clone());
                    if !target.covers(op) {
                        assert_eq!(out, v, "{model} {target} touched {op:?}");
                    } else if model != FaultModel::total_random() {
                        assert_ne!(out, v, "{model} {target} skipped {op:?}");
                    }
                }
                assert_eq!(hooks.records().len(), target.operands().len());
            }
        }
    }
}

#[test]
fn composite_operands_get_independent_faults() {
    let mut hooks = make_hooks(FaultModel::single_bit(), FaultTarget::C3, Rng::new(4));
    let v: Nat = Nat::from(1u8) << 2047;
    let outs: Vec<Nat> = Operand::ALL
        .iter()
        .map(|&op| hooks.inject(op, v.clone()))
        .collect();
    let distinct: std::collections::BTreeSet<_> = outs.iter().collect();
    assert!(distinct.len() > 1);
}
