//! Diffie-Hellman and RSA demos against modexp_plain.

use expguard_core::demos::{
    dh_exchange, fixtures, rsa_roundtrip, DemoOptions, DhParams, ExponentOrder, Fixture, RsaKeyPair,
};
use expguard_core::{modexp_plain, Nat, Rng};
use num_integer::Integer;
use num_traits::One;

#[test]
fn dh_shared_secrets_agree_with_direct_exponentiation() {
    let primes: Vec<Nat> = Fixture::parse(fixtures::DH_SAFE_PRIMES)
        .unwrap()
        .all("prime")
        .cloned()
        .collect();
    assert!(primes.len() >= 10);
    let mut rng = Rng::new(50);
    for case in 0..50 {
        let p = primes[rng.below(primes.len() as u64) as usize].clone();
        let order = &p - 1u8;
        let g = Nat::from(2u8) + rng.nat_below(&(&p - 2u8));
        let a = Nat::one() + rng.nat_below(&(&order - 1u8));
        let b = Nat::one() + rng.nat_below(&(&order - 1u8));
        let params = DhParams::new(p.clone(), g.clone(), &mut rng).unwrap();
        let out = dh_exchange(&params, &a, &b, DemoOptions::default(), &mut rng, None).unwrap();
        let expected = modexp_plain(&g, &((&a * &b) % &order), &p).unwrap();
        assert_eq!(out.shared_a, expected, "case {case}");
        assert_eq!(out.shared_b, expected, "case {case}");
        assert!(out.verdicts.iter().all(|v| v.verdict.is_accepted()));
    }
}

#[test]
fn rsa_round_trips_random_messages() {
    let mut rng = Rng::new(51);
    for fixture in [fixtures::RSA_3233, fixtures::RSA_2048] {
        let keys = RsaKeyPair::from_fixture(&Fixture::parse(fixture).unwrap()).unwrap();
        let mut sent = 0;
        while sent < 50 {
            let m = rng.nat_below(keys.modulus());
            if m.bits() == 0 || !m.gcd(keys.modulus()).is_one() {
                continue;
            }
            sent += 1;
            let by_phi = rsa_roundtrip(
                &keys,
                &m,
                ExponentOrder::Totient,
                DemoOptions::default(),
                &mut rng,
                None,
            )
            .unwrap();
            let by_key = rsa_roundtrip(
                &keys,
                &m,
                ExponentOrder::KeyMultiple,
                DemoOptions::default(),
                &mut rng,
                None,
            )
            .unwrap();
            assert_eq!(by_phi.recovered, m);
            assert_eq!(
                by_phi.ciphertext,
                m.modpow(keys.public_exponent(), keys.modulus())
            );
            assert_eq!(by_key.ciphertext, by_phi.ciphertext);
            assert_eq!(by_key.recovered, by_phi.recovered);
        }
    }
}

#[test]
fn key_multiple_is_a_multiple_of_the_totient() {
    for fixture in [fixtures::RSA_3233, fixtures::RSA_2048] {
        let keys = RsaKeyPair::from_fixture(&Fixture::parse(fixture).unwrap()).unwrap();
        let phi = keys.totient().unwrap();
        assert!((keys.totient_multiple() % phi).bits() == 0);
    }
}
