//! Key-forwarding algebra shared by the protocol engine and the desk-scale
//! exhaustive analyses, generic over the symbol field.
//!
//! Over GF(2^8) these are plain byte XORs; the generic form lets the same
//! code run on 4-bit symbols where distributions can be enumerated.

use crate::field::Field;

/// Messages published by the relay chain: node i joins links i and i+1 and
/// announces k_i + k_{i+1}.
pub fn relay_messages<F: Field>(link_keys: &[Vec<F>]) -> Vec<Vec<F>> {
    link_keys
        .windows(2)
        .map(|pair| {
            pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(&a, &b)| a.add(b))
                .collect()
        })
        .collect()
}

/// Receiver-side reconstruction: starting from the last segment key, peel
/// the relay messages back to the first segment key.
pub fn relay_receiver_key<F: Field>(last_key: &[F], messages: &[Vec<F>]) -> Vec<F> {
    let mut acc = last_key.to_vec();
    for msg in messages.iter().rev() {
        acc = msg.iter().zip(&acc).map(|(&c, &k)| c.sub(k)).collect();
    }
    acc
}

/// Element-wise sum of equal-length keys (XOR combining in char-2 fields).
pub fn combine_sum<F: Field>(keys: &[Vec<F>]) -> Vec<F> {
    let len = keys.first().map_or(0, Vec::len);
    (0..len)
        .map(|i| keys.iter().fold(F::ZERO, |acc, k| acc.add(k[i])))
        .collect()
}

pub fn otp_encrypt<F: Field>(pad: &[F], plain: &[F]) -> Vec<F> {
    plain.iter().zip(pad).map(|(&p, &k)| p.add(k)).collect()
}

pub fn otp_decrypt<F: Field>(pad: &[F], cipher: &[F]) -> Vec<F> {
    cipher.iter().zip(pad).map(|(&c, &k)| c.sub(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Gf16, Gf256};

    #[test]
    fn relay_round_trip_over_bytes() {
        let keys: Vec<Vec<Gf256>> = vec![
            vec![Gf256(0x12), Gf256(0x34)],
            vec![Gf256(0xab), Gf256(0xcd)],
            vec![Gf256(0x55), Gf256(0xaa)],
        ];
        let msgs = relay_messages(&keys);
        assert_eq!(msgs.len(), 2);
        assert_eq!(relay_receiver_key(&keys[2], &msgs), keys[0]);
    }

    #[test]
    fn relay_round_trip_exhaustive_over_nibbles() {
        use crate::field::Field as _;
        for a in Gf16::all() {
            for b in Gf16::all() {
                for c in Gf16::all() {
                    let keys = vec![vec![a], vec![b], vec![c]];
                    let msgs = relay_messages(&keys);
                    assert_eq!(relay_receiver_key(&keys[2], &msgs), keys[0]);
                }
            }
        }
    }

    #[test]
    fn otp_round_trip() {
        let pad = vec![Gf256(9), Gf256(200)];
        let plain = vec![Gf256(1), Gf256(2)];
        assert_eq!(otp_decrypt(&pad, &otp_encrypt(&pad, &plain)), plain);
    }
}
