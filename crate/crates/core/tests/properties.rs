use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use mpfkap::encoding::canonical_bytes;
use mpfkap::field::{mod_pow, FieldParams};
use mpfkap::kem::{kem_decapsulate, kem_encapsulate, kem_initiate, mask_stream, KemContext};
use mpfkap::matrix::{mat_mul_mod, mat_pow_mod};
use mpfkap::params::{ParamSet, Setup};
use mpfkap::rdmpf::{key_list_digest, RdmpfParty, RdmpfSetup, Role};
use mpfkap::rmpf::{rmpf_derive_key, rmpf_keygen, RmpfSetup};

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn rdmpf_setup(seed: u64, dim: usize, rounds: usize) -> RdmpfSetup {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    RdmpfSetup::generate(FieldParams::from_u64(65537).unwrap(), dim, big(5000), rounds, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangular_agreement(seed in any::<u64>(), big_case in any::<bool>()) {
        let (m, n, p) = if big_case { (5, 3, 65537) } else { (3, 2, 7) };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let setup = RmpfSetup::generate(FieldParams::from_u64(p).unwrap(), m, n, &mut rng).unwrap();
        let (pa, ta) = rmpf_keygen(&setup, &mut rng).unwrap();
        let (pb, tb) = rmpf_keygen(&setup, &mut rng).unwrap();
        prop_assert_eq!(rmpf_derive_key(&pa, &tb, &setup).unwrap(), rmpf_derive_key(&pb, &ta, &setup).unwrap());
    }

    #[test]
    fn rank_deficient_rounds_agree_and_powers_commute(seed in any::<u64>(), dim in 2usize..5, rounds in 1usize..4) {
        let setup = rdmpf_setup(seed, dim, rounds);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 1);
        let alice = RdmpfParty::start(&setup, Role::Alice, &mut rng).unwrap();
        let bob = RdmpfParty::start(&setup, Role::Bob, &mut rng).unwrap();
        let q = setup.params().exp_modulus();
        for (a, b) in alice.privates().iter().zip(bob.privates()) {
            prop_assert_eq!(mat_mul_mod(&a.left, &b.left, q).unwrap(), mat_mul_mod(&b.left, &a.left, q).unwrap());
            prop_assert_eq!(mat_mul_mod(&a.right, &b.right, q).unwrap(), mat_mul_mod(&b.right, &a.right, q).unwrap());
        }
        let ka = alice.finish(&bob.token_list()).unwrap();
        let kb = bob.finish(&alice.token_list()).unwrap();
        prop_assert_eq!(&ka.round_keys, &kb.round_keys);
        prop_assert_eq!(ka.key, kb.key);
        prop_assert_eq!(ka.transcript.key_list.len(), rounds * dim * dim);
    }

    #[test]
    fn digest_changes_with_any_list_element(seed in any::<u64>(), idx in 0usize..18, delta in 1u64..1000) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let list: Vec<BigUint> = (0..18).map(|_| big(rng.gen_range(0..65537))).collect();
        let mut other = list.clone();
        other[idx] = (&other[idx] + delta) % 65537u32;
        prop_assert_ne!(key_list_digest(&list).unwrap(), key_list_digest(&other).unwrap());
        prop_assert_eq!(key_list_digest(&list).unwrap(), key_list_digest(&list.clone()).unwrap());
    }

    #[test]
    fn kem_recovers_key(seed in any::<u64>(), dim in prop::sample::select(vec![3usize, 5]), rounds in 1usize..4) {
        let setup = rdmpf_setup(seed, dim, rounds);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 2);
        let mut eta0 = [0u8; 64];
        rng.fill(&mut eta0[..]);
        let ctx = KemContext::new(eta0, [5; 32], [6; 32]);
        let (state, close_b) = kem_initiate(&ctx, &setup, &mut rng).unwrap();
        prop_assert_eq!(close_b.len(), rounds * dim * dim * 8);
        let (k, msg) = kem_encapsulate(&ctx, &setup, &close_b, &mut rng).unwrap();
        prop_assert_eq!(kem_decapsulate(&state, &msg).unwrap(), k);

        // the wire carries the keystream XOR the tokens, nothing else
        let tokens = canonical_bytes(&state.party().token_list()).unwrap();
        let stream = mask_stream(&eta0, &ctx.auth(), close_b.len());
        let recovered: Vec<u8> = close_b.iter().zip(&tokens).map(|(a, b)| a ^ b).collect();
        prop_assert_eq!(recovered, stream);
    }

    #[test]
    fn masking_is_an_involution(key in prop::collection::vec(any::<u8>(), 0..100),
                                ctx in prop::collection::vec(any::<u8>(), 0..100),
                                data in prop::collection::vec(any::<u8>(), 0..300)) {
        let stream = mask_stream(&key, &ctx, data.len());
        let masked: Vec<u8> = data.iter().zip(&stream).map(|(a, b)| a ^ b).collect();
        let unmasked: Vec<u8> = masked.iter().zip(&stream).map(|(a, b)| a ^ b).collect();
        prop_assert_eq!(unmasked, data);
    }

    #[test]
    fn fermat_reduction(a in 1u64..65537, e in any::<u64>()) {
        for p in [7u64, 65537] {
            let a = big(a % p).max(big(1));
            let p = big(p);
            let q = &p - 1u32;
            prop_assert_eq!(mod_pow(&a, &big(e), &p).unwrap(), mod_pow(&a, &(big(e) % &q), &p).unwrap());
        }
    }

    #[test]
    fn generated_parameter_files_round_trip(seed in any::<u64>(), sigma in any::<i64>()) {
        let setup = Setup::Rdmpf(rdmpf_setup(seed, 3, 2).with_signed_sigma(sigma));
        let set = ParamSet::from_setup(&setup, Some(seed)).unwrap();
        let json = ParamSet::from_json(&set.to_json().unwrap()).unwrap();
        let bin = ParamSet::from_binary(&set.to_binary().unwrap()).unwrap();
        prop_assert_eq!(&json, &set);
        prop_assert_eq!(&bin, &set);
        prop_assert_eq!(json.to_setup().unwrap(), setup);
    }

    #[test]
    fn exponent_bases_never_collapse(seed in any::<u64>(), dim in 2usize..6) {
        let setup = rdmpf_setup(seed, dim, 1);
        let q = setup.params().exp_modulus();
        for base in [setup.base_xu(), setup.base_yv()] {
            let high = mat_pow_mod(base, &big(4999), q).unwrap();
            prop_assert!(high.entries().iter().any(|e| *e != big(0)));
        }
    }
}

#[test]
fn nonce_changes_both_masks() {
    let setup = rdmpf_setup(3, 3, 1);
    let ctx = KemContext::new([9; 64], [1; 32], [2; 32]);
    let party = RdmpfParty::start(&setup, Role::Alice, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
    let bob = RdmpfParty::start(&setup, Role::Bob, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    let (_, close_b) = mpfkap::kem::BobState::with_party(&ctx, bob).unwrap();
    let run = |eta_m: [u8; 64]| mpfkap::kem::encapsulate_with(&ctx, party.clone(), &close_b, eta_m, [7; 64]).unwrap().1;
    let (m1, m2) = (run([0; 64]), run([1; 64]));
    assert_ne!(m1.close_a, m2.close_a);
    assert_ne!(m1.encap, m2.encap);
}
