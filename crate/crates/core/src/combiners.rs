//! Key-combination primitives: the bitwise XOR combiner and threshold
//! (Shamir) secret sharing.
//!
//! Sharing is byte-wise over GF(2^8): each secret byte gets its own random
//! degree-(t-1) polynomial with the byte as constant term, and share `j`
//! carries the evaluations at x = j. The polynomial algebra is generic over
//! [`crate::field::Field`] so the exhaustive secrecy tests can run the same
//! code over GF(17) and GF(16).

use crate::field::{interpolate_at_zero, poly_eval, Field, Gf256};
use rand_core::RngCore;
use thiserror::Error;

/// A finite key bit string held by a party, tagged with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    bits: Vec<u8>,
    origin: String,
}

impl KeyMaterial {
    /// Build key material from bytes. `origin` must be nonempty (a link id
    /// or protocol session id).
    pub fn new(bits: Vec<u8>, origin: impl Into<String>) -> Result<Self, CombineError> {
        let origin = origin.into();
        if origin.is_empty() {
            return Err(CombineError::EmptyOrigin);
        }
        Ok(KeyMaterial { bits, origin })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn length_bits(&self) -> usize {
        self.bits.len() * 8
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CombineError {
    #[error("key material origin must be nonempty")]
    EmptyOrigin,
    #[error("cannot combine an empty key list")]
    EmptyInput,
    #[error("key length mismatch: {0} bits vs {1} bits")]
    LengthMismatch(usize, usize),
}

/// Bitwise XOR of all inputs. Commutative and associative in the key bits;
/// the origin tag records every contributing origin in input order.
pub fn xor_combine(keys: &[KeyMaterial]) -> Result<KeyMaterial, CombineError> {
    let first = keys.first().ok_or(CombineError::EmptyInput)?;
    if keys.len() == 1 {
        return Ok(first.clone());
    }
    let mut bits = first.bits.clone();
    for key in &keys[1..] {
        if key.bits.len() != bits.len() {
            return Err(CombineError::LengthMismatch(
                bits.len() * 8,
                key.bits.len() * 8,
            ));
        }
        for (b, k) in bits.iter_mut().zip(&key.bits) {
            *b ^= k;
        }
    }
    let origins: Vec<&str> = keys.iter().map(|k| k.origin.as_str()).collect();
    Ok(KeyMaterial {
        bits,
        origin: format!("xor({})", origins.join(",")),
    })
}

/// Scheme parameters a share belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShareScheme {
    pub threshold: u8,
    pub share_count: u8,
    pub field_tag: u8,
}

/// Wire field tag for the production byte field GF(2^8).
pub const FIELD_TAG_GF256: u8 = 1;
/// Wire scheme version.
pub const SHARE_WIRE_VERSION: u8 = 1;

/// One share of a byte-wise Shamir sharing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretShare {
    pub index: u8,
    pub payload: Vec<u8>,
    pub scheme: ShareScheme,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShareError {
    #[error("threshold/share-count out of bounds: t={t}, n={n} (need 1 <= t <= n <= 255)")]
    BadParameters { t: usize, n: usize },
    #[error("need at least {needed} shares, got {got}")]
    NotEnoughShares { needed: usize, got: usize },
    #[error("duplicate indices")]
    DuplicateIndices,
    #[error("mixed scheme tags")]
    MixedSchemes,
    #[error("share payload lengths differ")]
    UnequalLengths,
    #[error("share wire encoding malformed: {0}")]
    MalformedWire(String),
}

/// A share over an arbitrary field, used by the generic algebra and the
/// desk-scale analyses. `x` is the nonzero evaluation point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldShare<F> {
    pub x: F,
    pub payload: Vec<F>,
}

/// Shamir-share a symbol string: one polynomial per symbol, constant term
/// the secret symbol, higher coefficients drawn from `next_coeff` in
/// symbol-major order (all coefficients of symbol 0, then symbol 1, ...).
pub fn share_symbols<F: Field>(
    secret: &[F],
    t: usize,
    n: usize,
    mut next_coeff: impl FnMut() -> F,
) -> Result<Vec<FieldShare<F>>, ShareError> {
    if t < 1 || t > n || n > (F::ORDER - 1) as usize {
        return Err(ShareError::BadParameters { t, n });
    }
    let mut shares: Vec<FieldShare<F>> = (1..=n)
        .map(|j| FieldShare {
            x: F::from_index(j as u16),
            payload: Vec::with_capacity(secret.len()),
        })
        .collect();
    let mut coeffs = Vec::with_capacity(t);
    for &sym in secret {
        coeffs.clear();
        coeffs.push(sym);
        for _ in 1..t {
            coeffs.push(next_coeff());
        }
        for share in &mut shares {
            share.payload.push(poly_eval(&coeffs, share.x));
        }
    }
    Ok(shares)
}

/// Reconstruct the secret symbols from at least `t` shares of one sharing by
/// Lagrange interpolation at x = 0. The caller guarantees the shares belong
/// together; index and length checks are still enforced.
pub fn reconstruct_symbols<F: Field>(
    shares: &[FieldShare<F>],
    t: usize,
) -> Result<Vec<F>, ShareError> {
    if shares.len() < t {
        return Err(ShareError::NotEnoughShares { needed: t, got: shares.len() });
    }
    let len = shares[0].payload.len();
    if shares.iter().any(|s| s.payload.len() != len) {
        return Err(ShareError::UnequalLengths);
    }
    for (i, a) in shares.iter().enumerate() {
        for b in &shares[i + 1..] {
            if a.x == b.x {
                return Err(ShareError::DuplicateIndices);
            }
        }
    }
    let mut secret = Vec::with_capacity(len);
    for pos in 0..len {
        let points: Vec<(F, F)> = shares.iter().map(|s| (s.x, s.payload[pos])).collect();
        secret.push(interpolate_at_zero(&points));
    }
    Ok(secret)
}

fn gf256_slice(bytes: &[u8]) -> Vec<Gf256> {
    bytes.iter().map(|&b| Gf256(b)).collect()
}

fn byte_slice(symbols: &[Gf256]) -> Vec<u8> {
    symbols.iter().map(|s| s.0).collect()
}

/// Split a secret into `n` byte-wise GF(2^8) shares, any `t` of which
/// reconstruct it. Coefficients come from the seeded stream, so the sharing
/// is replayable.
pub fn share_secret<R: RngCore>(
    secret: &KeyMaterial,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SecretShare>, ShareError> {
    if n > 255 {
        return Err(ShareError::BadParameters { t, n });
    }
    let symbols = gf256_slice(secret.bytes());
    let shares = share_symbols(&symbols, t, n, || Gf256::sample(rng))?;
    let scheme = ShareScheme {
        threshold: t as u8,
        share_count: n as u8,
        field_tag: FIELD_TAG_GF256,
    };
    Ok(shares
        .into_iter()
        .map(|s| SecretShare {
            index: s.x.0,
            payload: byte_slice(&s.payload),
            scheme,
        })
        .collect())
}

/// Recover the secret from at least `t` shares of one scheme instance.
pub fn reconstruct(shares: &[SecretShare]) -> Result<KeyMaterial, ShareError> {
    let first = shares.first().ok_or(ShareError::NotEnoughShares { needed: 1, got: 0 })?;
    let scheme = first.scheme;
    if shares.iter().any(|s| s.scheme != scheme) {
        return Err(ShareError::MixedSchemes);
    }
    let field_shares: Vec<FieldShare<Gf256>> = shares
        .iter()
        .map(|s| FieldShare { x: Gf256(s.index), payload: gf256_slice(&s.payload) })
        .collect();
    let symbols = reconstruct_symbols(&field_shares, scheme.threshold as usize)?;
    KeyMaterial::new(byte_slice(&symbols), "reconstructed")
        .map_err(|_| ShareError::MalformedWire("empty origin".into()))
}

/// Wire encoding: version, t, n, index, field tag, payload bytes.
pub fn encode_share(share: &SecretShare) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + share.payload.len());
    out.push(SHARE_WIRE_VERSION);
    out.push(share.scheme.threshold);
    out.push(share.scheme.share_count);
    out.push(share.index);
    out.push(share.scheme.field_tag);
    out.extend_from_slice(&share.payload);
    out
}

/// Bytes of wire header preceding the payload.
pub const SHARE_WIRE_HEADER_LEN: usize = 5;

pub fn decode_share(bytes: &[u8]) -> Result<SecretShare, ShareError> {
    if bytes.len() < SHARE_WIRE_HEADER_LEN {
        return Err(ShareError::MalformedWire(format!(
            "{} bytes is shorter than the {SHARE_WIRE_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if bytes[0] != SHARE_WIRE_VERSION {
        return Err(ShareError::MalformedWire(format!("unknown version {}", bytes[0])));
    }
    let scheme = ShareScheme {
        threshold: bytes[1],
        share_count: bytes[2],
        field_tag: bytes[4],
    };
    if scheme.field_tag != FIELD_TAG_GF256 {
        return Err(ShareError::MalformedWire(format!(
            "unknown field tag {}",
            scheme.field_tag
        )));
    }
    if scheme.threshold == 0 || scheme.threshold > scheme.share_count {
        return Err(ShareError::MalformedWire(format!(
            "bad scheme bounds t={} n={}",
            scheme.threshold, scheme.share_count
        )));
    }
    if bytes[3] == 0 || bytes[3] > scheme.share_count {
        return Err(ShareError::MalformedWire(format!("bad share index {}", bytes[3])));
    }
    Ok(SecretShare {
        index: bytes[3],
        payload: bytes[SHARE_WIRE_HEADER_LEN..].to_vec(),
        scheme,
    })
}
