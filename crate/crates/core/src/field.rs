//! Small finite fields used by the key combiners.
//!
//! One generic [`Field`] trait backs three instantiations: [`Gf256`] is the
//! production byte field for secret sharing, [`Gf16`] carries the 4-bit
//! desk-scale analyses where distributions are enumerated exhaustively, and
//! [`Gf17`] is the prime-field variant used by the exact secrecy tests.
//! Keeping them behind one trait means the sharing algebra is written once
//! and exercised at every scale.

use rand_core::RngCore;

/// A finite field small enough to index by `u16`.
///
/// Elements are identified with indices `0..ORDER`; `from_index`/`index`
/// round-trip. Arithmetic never leaves the field.
pub trait Field: Copy + Clone + Eq + PartialEq + core::fmt::Debug {
    /// Number of field elements.
    const ORDER: u16;
    const ZERO: Self;
    const ONE: Self;

    fn from_index(i: u16) -> Self;
    fn index(self) -> u16;

    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;

    /// Multiplicative inverse; `None` for zero.
    fn inv(self) -> Option<Self>;

    /// Draw a uniform element from a byte stream. Deterministic given the
    /// stream; rejection sampling where the order does not divide 256.
    fn sample<R: RngCore>(rng: &mut R) -> Self;

    fn div(self, rhs: Self) -> Self {
        self.mul(rhs.inv().expect("division by zero field element"))
    }

    /// Iterate every element, in index order.
    fn all() -> FieldIter<Self> {
        FieldIter { next: 0, _marker: core::marker::PhantomData }
    }
}

pub struct FieldIter<F> {
    next: u16,
    _marker: core::marker::PhantomData<F>,
}

impl<F: Field> Iterator for FieldIter<F> {
    type Item = F;
    fn next(&mut self) -> Option<F> {
        if self.next >= F::ORDER {
            return None;
        }
        let e = F::from_index(self.next);
        self.next += 1;
        Some(e)
    }
}

fn next_byte<R: RngCore>(rng: &mut R) -> u8 {
    let mut b = [0u8; 1];
    rng.fill_bytes(&mut b);
    b[0]
}

/// GF(2^8) with reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11b), the
/// conventional byte field. Addition is XOR.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Gf256(pub u8);

fn gf256_mul(a: u8, b: u8) -> u8 {
    let mut a = a;
    let mut b = b;
    let mut r = 0u8;
    for _ in 0..8 {
        if b & 1 != 0 {
            r ^= a;
        }
        b >>= 1;
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= 0x1b;
        }
    }
    r
}

impl Field for Gf256 {
    const ORDER: u16 = 256;
    const ZERO: Self = Gf256(0);
    const ONE: Self = Gf256(1);

    fn from_index(i: u16) -> Self {
        Gf256(i as u8)
    }
    fn index(self) -> u16 {
        self.0 as u16
    }
    fn add(self, rhs: Self) -> Self {
        Gf256(self.0 ^ rhs.0)
    }
    fn sub(self, rhs: Self) -> Self {
        Gf256(self.0 ^ rhs.0)
    }
    fn mul(self, rhs: Self) -> Self {
        Gf256(gf256_mul(self.0, rhs.0))
    }
    fn inv(self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        // a^254 in a field of order 256.
        let mut z = self.0;
        for _ in 0..6 {
            z = gf256_mul(z, z);
            z = gf256_mul(z, self.0);
        }
        Some(Gf256(gf256_mul(z, z)))
    }
    fn sample<R: RngCore>(rng: &mut R) -> Self {
        Gf256(next_byte(rng))
    }
}

/// GF(2^4) with reduction polynomial x^4 + x + 1 (0x13). The 4-bit field for
/// desk-scale exhaustive analyses; elements live in the low nibble.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Gf16(pub u8);

fn gf16_mul(a: u8, b: u8) -> u8 {
    let mut a = a & 0x0f;
    let mut b = b & 0x0f;
    let mut r = 0u8;
    for _ in 0..4 {
        if b & 1 != 0 {
            r ^= a;
        }
        b >>= 1;
        let carry = a & 0x08 != 0;
        a = (a << 1) & 0x0f;
        if carry {
            a ^= 0x03;
        }
    }
    r
}

impl Field for Gf16 {
    const ORDER: u16 = 16;
    const ZERO: Self = Gf16(0);
    const ONE: Self = Gf16(1);

    fn from_index(i: u16) -> Self {
        Gf16((i as u8) & 0x0f)
    }
    fn index(self) -> u16 {
        self.0 as u16
    }
    fn add(self, rhs: Self) -> Self {
        Gf16(self.0 ^ rhs.0)
    }
    fn sub(self, rhs: Self) -> Self {
        Gf16(self.0 ^ rhs.0)
    }
    fn mul(self, rhs: Self) -> Self {
        Gf16(gf16_mul(self.0, rhs.0))
    }
    fn inv(self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        // Order 16: a^14 is the inverse; the field is tiny, scan instead.
        (1..16u8).map(Gf16).find(|&c| self.mul(c) == Gf16(1))
    }
    fn sample<R: RngCore>(rng: &mut R) -> Self {
        Gf16(next_byte(rng) & 0x0f)
    }
}

/// The prime field GF(17), used by the exhaustive perfect-secrecy checks.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Gf17(pub u8);

impl Field for Gf17 {
    const ORDER: u16 = 17;
    const ZERO: Self = Gf17(0);
    const ONE: Self = Gf17(1);

    fn from_index(i: u16) -> Self {
        Gf17((i % 17) as u8)
    }
    fn index(self) -> u16 {
        self.0 as u16
    }
    fn add(self, rhs: Self) -> Self {
        Gf17((self.0 + rhs.0) % 17)
    }
    fn sub(self, rhs: Self) -> Self {
        Gf17((self.0 + 17 - rhs.0) % 17)
    }
    fn mul(self, rhs: Self) -> Self {
        Gf17(((self.0 as u16 * rhs.0 as u16) % 17) as u8)
    }
    fn inv(self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        (1..17u8).map(Gf17).find(|&c| self.mul(c) == Gf17(1))
    }
    fn sample<R: RngCore>(rng: &mut R) -> Self {
        // Rejection sampling: accept bytes below 238 = 14 * 17.
        loop {
            let b = next_byte(rng);
            if b < 238 {
                return Gf17(b % 17);
            }
        }
    }
}

/// Evaluate the polynomial with the given coefficients (constant term first)
/// at `x`, by Horner's rule.
pub fn poly_eval<F: Field>(coeffs: &[F], x: F) -> F {
    let mut acc = F::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

/// Lagrange interpolation at x = 0 from distinct-abscissa points.
pub fn interpolate_at_zero<F: Field>(points: &[(F, F)]) -> F {
    let mut acc = F::ZERO;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut num = F::ONE;
        let mut den = F::ONE;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            num = num.mul(xj);
            den = den.mul(xj.sub(xi));
        }
        acc = acc.add(yi.mul(num.div(den)));
    }
    acc
}
