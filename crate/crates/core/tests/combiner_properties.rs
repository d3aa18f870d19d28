//! Exhaustive and randomized properties of the key combiners: perfect
//! secrecy of threshold sharing over GF(17), reconstruction correctness over
//! GF(2^8), and the XOR combiner's output distribution.

use hybrid_keynet_core::combiners::{
    reconstruct, share_secret, share_symbols, xor_combine, KeyMaterial,
};
use hybrid_keynet_core::field::{Field, Gf17};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Enumerate every coefficient vector in GF(17)^(t-1).
fn coefficient_vectors(t: usize) -> Vec<Vec<Gf17>> {
    let mut out = vec![Vec::new()];
    for _ in 1..t {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                Gf17::all().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}

/// Perfect secrecy, exhaustively: for every (t-1)-subset of shares, the view
/// determines nothing — each view co-occurs with every secret exactly the
/// same number of times. Zero tolerance: exact count equality.
#[test]
fn gf17_any_t_minus_1_shares_are_uniform_over_secrets() {
    for (t, n) in [(2usize, 3usize), (2, 4), (3, 3), (3, 4)] {
        for subset in index_subsets(n, t - 1) {
            let mut counts: BTreeMap<Vec<u16>, [u64; 17]> = BTreeMap::new();
            for secret in Gf17::all() {
                for coeffs in coefficient_vectors(t) {
                    let mut feed = coeffs.iter().copied();
                    let shares = share_symbols(&[secret], t, n, || {
                        feed.next().expect("enough coefficients")
                    })
                    .unwrap();
                    let view: Vec<u16> =
                        subset.iter().map(|&i| shares[i].payload[0].index()).collect();
                    counts.entry(view).or_insert([0; 17])[secret.index() as usize] += 1;
                }
            }
            for (view, per_secret) in &counts {
                let first = per_secret[0];
                assert!(first > 0, "t={t} n={n} view {view:?} never occurs");
                assert!(
                    per_secret.iter().all(|&c| c == first),
                    "t={t} n={n} subset {subset:?} view {view:?} skews secrets: {per_secret:?}"
                );
            }
        }
    }
}

/// Reconstruction correctness over the production byte field: 1000 random
/// (secret, seed, t, n <= 6) cases, every t-subset reconstructs exactly.
#[test]
fn gf256_every_t_subset_reconstructs() {
    let mut rng = StdRng::seed_from_u64(20_240_817);
    for case in 0..1000 {
        let n = rng.gen_range(1..=6usize);
        let t = rng.gen_range(1..=n);
        let len = rng.gen_range(1..=32usize);
        let secret_bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let secret = KeyMaterial::new(secret_bytes, "case").unwrap();
        let mut stream = ChaCha12Rng::seed_from_u64(rng.gen());
        let shares = share_secret(&secret, t, n, &mut stream).unwrap();
        for subset in index_subsets(n, t) {
            let chosen: Vec<_> = subset.iter().map(|&i| shares[i].clone()).collect();
            let rec = reconstruct(&chosen).unwrap();
            assert_eq!(rec.bytes(), secret.bytes(), "case {case}: t={t} n={n} {subset:?}");
        }
    }
}

/// XOR output distribution at 4-bit desk scale: with one input swept
/// uniformly and the others held fixed, the output sweeps uniformly.
#[test]
fn xor_output_uniform_when_any_input_uniform() {
    for b in 0u8..16 {
        for c in 0u8..16 {
            let mut hits = [0u32; 16];
            for a in 0u8..16 {
                let out = xor_combine(&[
                    KeyMaterial::new(vec![a], "a").unwrap(),
                    KeyMaterial::new(vec![b], "b").unwrap(),
                    KeyMaterial::new(vec![c], "c").unwrap(),
                ])
                .unwrap();
                hits[out.bytes()[0] as usize] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1), "b={b} c={c}: {hits:?}");
        }
    }
}

proptest! {
    /// Round trip for arbitrary secrets and parameters through the byte API.
    #[test]
    fn share_then_reconstruct_round_trips(
        secret in proptest::collection::vec(any::<u8>(), 1..24),
        t_raw in 1usize..6,
        extra in 0usize..4,
        seed in any::<u64>(),
    ) {
        let t = t_raw;
        let n = t + extra;
        let km = KeyMaterial::new(secret.clone(), "prop").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let shares = share_secret(&km, t, n, &mut rng).unwrap();
        let rec = reconstruct(&shares[..t]).unwrap();
        prop_assert_eq!(rec.bytes(), &secret[..]);
    }

    /// XOR combining is associative and commutative on the bits.
    #[test]
    fn xor_combine_order_independent(
        (a, b) in (1usize..16).prop_flat_map(|n| (
            proptest::collection::vec(any::<u8>(), n),
            proptest::collection::vec(any::<u8>(), n),
        )),
    ) {
        let ka = KeyMaterial::new(a, "a").unwrap();
        let kb = KeyMaterial::new(b, "b").unwrap();
        let ab = xor_combine(&[ka.clone(), kb.clone()]).unwrap();
        let ba = xor_combine(&[kb, ka]).unwrap();
        prop_assert_eq!(ab.bytes(), ba.bytes());
    }
}
