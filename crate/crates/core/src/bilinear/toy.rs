//! Transparent toy realization of the bilinear suite.
//!
//! `G1` and `G2` are `Z/qZ` under addition with `P1 = P2 = 1`. `GT` is stored
//! by exponent: the element `e(P1, P2)^k` is represented by `k`, so the
//! pairing is the modular product and `GT` multiplication is exponent
//! addition. `psi` is the identity on residues.

use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, RngCore};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use super::{domain, BackendId, BilinearSuite, GroupElement, ScalarField, TargetElement};
use crate::error::{Error, Result};

pub const DEFAULT_TOY_MODULUS: u64 = 1009;

const MAX_MODULUS: u64 = 1 << 62;

#[inline]
fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

#[inline]
fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn width_for(q: u64) -> usize {
    let bits = 64 - (q - 1).leading_zeros() as usize;
    bits.div_ceil(8).max(1)
}

fn encode(v: u64, width: usize) -> Vec<u8> {
    v.to_be_bytes()[8 - width..].to_vec()
}

fn decode(bytes: &[u8], width: usize, q: u64) -> Result<u64> {
    if bytes.len() != width {
        return Err(Error::encoding(format!("expected {width} bytes, got {}", bytes.len())));
    }
    let v = bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64);
    if v >= q {
        return Err(Error::encoding(format!("residue {v} out of range for q = {q}")));
    }
    Ok(v)
}

macro_rules! residue_type {
    ($name:ident) => {
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name {
            v: u64,
            q: u64,
        }

        impl $name {
            pub fn value(&self) -> u64 {
                self.v
            }

            pub fn modulus(&self) -> u64 {
                self.q
            }

            #[inline]
            fn same_suite(&self, other: &Self) {
                assert_eq!(self.q, other.q, "mixed toy moduli in {}", stringify!($name));
            }
        }

        impl Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({} mod {})", stringify!($name), self.v, self.q)
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                self.same_suite(&rhs);
                Self { v: add_mod(self.v, rhs.v, self.q), q: self.q }
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                self.same_suite(&rhs);
                Self { v: sub_mod(self.v, rhs.v, self.q), q: self.q }
            }
        }

        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                Self { v: sub_mod(0, self.v, self.q), q: self.q }
            }
        }
    };
}

residue_type!(ToyScalar);
residue_type!(ToyG1);
residue_type!(ToyG2);

impl Mul for ToyScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.same_suite(&rhs);
        Self { v: mul_mod(self.v, rhs.v, self.q), q: self.q }
    }
}

impl ScalarField for ToyScalar {
    fn is_zero(&self) -> bool {
        self.v == 0
    }

    fn invert(&self) -> Option<Self> {
        if self.v == 0 {
            return None;
        }
        // q is prime: x^(q-2) = x^(-1)
        Some(Self { v: pow_mod(self.v, self.q - 2, self.q), q: self.q })
    }

    fn to_bytes(&self) -> Vec<u8> {
        encode(self.v, width_for(self.q))
    }
}

macro_rules! group_impl {
    ($name:ident) => {
        impl GroupElement<ToyScalar> for $name {
            fn mul(&self, k: &ToyScalar) -> Self {
                assert_eq!(self.q, k.q, "mixed toy moduli in scalar multiplication");
                Self { v: mul_mod(self.v, k.v, self.q), q: self.q }
            }

            fn is_identity(&self) -> bool {
                self.v == 0
            }

            fn to_bytes(&self) -> Vec<u8> {
                encode(self.v, width_for(self.q))
            }
        }
    };
}

group_impl!(ToyG1);
group_impl!(ToyG2);

/// `e(P1, P2)^exp`, stored by exponent.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToyGt {
    exp: u64,
    q: u64,
}

impl ToyGt {
    pub fn exponent(&self) -> u64 {
        self.exp
    }
}

impl Debug for ToyGt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ToyGt(g^{} mod {})", self.exp, self.q)
    }
}

impl Mul for ToyGt {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.q, rhs.q, "mixed toy moduli in GT");
        Self { exp: add_mod(self.exp, rhs.exp, self.q), q: self.q }
    }
}

impl TargetElement<ToyScalar> for ToyGt {
    fn pow(&self, k: &ToyScalar) -> Self {
        assert_eq!(self.q, k.q, "mixed toy moduli in GT exponentiation");
        Self { exp: mul_mod(self.exp, k.v, self.q), q: self.q }
    }

    fn is_identity(&self) -> bool {
        self.exp == 0
    }

    fn to_bytes(&self) -> Vec<u8> {
        encode(self.exp, width_for(self.q))
    }
}

/// The toy suite: modulus plus the seed that keys its hash functions.
#[derive(Clone, PartialEq, Eq)]
pub struct ToySuite {
    q: u64,
    width: usize,
    seed: Vec<u8>,
}

impl Debug for ToySuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

impl Default for ToySuite {
    fn default() -> Self {
        Self::new(DEFAULT_TOY_MODULUS, Vec::new()).expect("1009 is prime")
    }
}

impl ToySuite {
    pub fn new(q: u64, seed: impl Into<Vec<u8>>) -> Result<Self> {
        if !(3..MAX_MODULUS).contains(&q) || !is_prime(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Self { q, width: width_for(q), seed: seed.into() })
    }

    pub fn with_seed(&self, seed: impl Into<Vec<u8>>) -> Self {
        Self { seed: seed.into(), ..self.clone() }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn seed(&self) -> &[u8] {
        &self.seed
    }

    pub fn scalar(&self, v: u64) -> ToyScalar {
        ToyScalar { v: v % self.q, q: self.q }
    }

    pub fn g1(&self, v: u64) -> ToyG1 {
        ToyG1 { v: v % self.q, q: self.q }
    }

    pub fn g2(&self, v: u64) -> ToyG2 {
        ToyG2 { v: v % self.q, q: self.q }
    }

    pub fn gt(&self, exp: u64) -> ToyGt {
        ToyGt { exp: exp % self.q, q: self.q }
    }

    /// Documented hash rule: SHAKE256(prefix || len(seed) || seed || input),
    /// first 16 output bytes read big-endian, reduced into `[1, q)`.
    pub fn hash_residue(&self, prefix: u8, input: &[u8]) -> u64 {
        let mut reader = self.xof(prefix, input);
        let mut buf = [0u8; 16];
        reader.read(&mut buf);
        self.nonzero_from(&buf)
    }

    fn xof(&self, prefix: u8, input: &[u8]) -> impl XofReader {
        let mut h = Shake256::default();
        h.update(&[prefix]);
        h.update(&(self.seed.len() as u32).to_be_bytes());
        h.update(&self.seed);
        h.update(input);
        h.finalize_xof()
    }

    fn nonzero_from(&self, bytes: &[u8]) -> u64 {
        let take = bytes.len().min(16);
        let wide = bytes[..take].iter().fold(0u128, |acc, b| (acc << 8) | *b as u128);
        (wide % (self.q as u128 - 1)) as u64 + 1
    }

    fn check(&self, q: u64) -> Result<()> {
        if q == self.q {
            Ok(())
        } else {
            Err(Error::BackendMismatch)
        }
    }
}

impl BilinearSuite for ToySuite {
    type Scalar = ToyScalar;
    type G1 = ToyG1;
    type G2 = ToyG2;
    type Gt = ToyGt;

    fn backend_id(&self) -> BackendId {
        BackendId::Toy
    }

    fn descriptor(&self) -> String {
        format!("toy(q={},seed={})", self.q, hex::encode(&self.seed))
    }

    fn p1(&self) -> ToyG1 {
        self.g1(1)
    }

    fn p2(&self) -> ToyG2 {
        self.g2(1)
    }

    fn g1_identity(&self) -> ToyG1 {
        self.g1(0)
    }

    fn g2_identity(&self) -> ToyG2 {
        self.g2(0)
    }

    fn gt_identity(&self) -> ToyGt {
        self.gt(0)
    }

    fn scalar_from_u64(&self, v: u64) -> ToyScalar {
        self.scalar(v)
    }

    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> ToyScalar {
        self.scalar(rng.gen_range(1..self.q))
    }

    fn scalar_from_uniform_bytes(&self, bytes: &[u8]) -> ToyScalar {
        self.scalar(self.nonzero_from(bytes))
    }

    fn pair(&self, x: &ToyG1, y: &ToyG2) -> Result<ToyGt> {
        self.check(x.q)?;
        self.check(y.q)?;
        Ok(self.gt(mul_mod(x.v, y.v, self.q)))
    }

    fn psi(&self, y: &ToyG2) -> Result<ToyG1> {
        self.check(y.q)?;
        Ok(self.g1(y.v))
    }

    fn hash_to_g1(&self, label: &[u8]) -> ToyG1 {
        self.g1(self.hash_residue(domain::H1, label))
    }

    fn hash_to_g2(&self, label: &[u8]) -> ToyG2 {
        self.g2(self.hash_residue(domain::H2, label))
    }

    fn hash_to_scalar(&self, data: &[u8]) -> ToyScalar {
        self.scalar(self.hash_residue(domain::H3, data))
    }

    fn mask_bytes(&self, w: &ToyGt, out_len_bits: usize) -> Vec<u8> {
        let mut out = vec![0u8; out_len_bits.div_ceil(8)];
        if out.is_empty() {
            return out;
        }
        self.xof(domain::H5, &w.to_bytes()).read(&mut out);
        let spare = out.len() * 8 - out_len_bits;
        if let Some(last) = out.last_mut() {
            *last &= 0xffu8 << spare;
        }
        out
    }

    fn scalar_len(&self) -> usize {
        self.width
    }

    fn g1_len(&self) -> usize {
        self.width
    }

    fn g2_len(&self) -> usize {
        self.width
    }

    fn gt_len(&self) -> usize {
        self.width
    }

    fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<ToyScalar> {
        decode(bytes, self.width, self.q).map(|v| self.scalar(v))
    }

    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<ToyG1> {
        decode(bytes, self.width, self.q).map(|v| self.g1(v))
    }

    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<ToyG2> {
        decode(bytes, self.width, self.q).map(|v| self.g2(v))
    }

    fn gt_from_bytes(&self, bytes: &[u8]) -> Result<ToyGt> {
        decode(bytes, self.width, self.q).map(|v| self.gt(v))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn pairing_of_small_residues() {
        let s = ToySuite::default();
        assert_eq!(s.pair(&s.g1(6), &s.g2(28)).unwrap().exponent(), 168);
        assert!(s.pair(&s.g1_identity(), &s.g2(28)).unwrap().is_identity());
        assert!(!s.pair(&s.p1(), &s.p2()).unwrap().is_identity());
    }

    #[test]
    fn mixed_moduli_are_rejected() {
        let a = ToySuite::default();
        let b = ToySuite::new(1013, Vec::new()).unwrap();
        assert_eq!(a.pair(&a.g1(2), &b.g2(3)), Err(Error::BackendMismatch));
        assert_eq!(a.psi(&b.g2(3)), Err(Error::BackendMismatch));
    }

    #[test]
    fn psi_is_identity_on_residues() {
        let s = ToySuite::default();
        assert_eq!(s.psi(&s.g2(7)).unwrap(), s.g1(7));
        assert_eq!(s.psi(&s.p2()).unwrap(), s.p1());
    }

    #[test]
    fn modulus_validation() {
        assert_eq!(ToySuite::new(1000, Vec::new()), Err(Error::InvalidModulus(1000)));
        assert_eq!(ToySuite::new(2, Vec::new()), Err(Error::InvalidModulus(2)));
        assert!(ToySuite::new((1 << 61) - 1, Vec::new()).is_ok());
        assert_eq!(ToySuite::new((1 << 61) - 1, Vec::new()).unwrap().scalar_len(), 8);
    }

    #[test]
    fn scalar_encoding_is_fixed_width_big_endian() {
        let s = ToySuite::default();
        assert_eq!(s.scalar(147).to_bytes(), vec![0x00, 0x93]);
        assert!(s.scalar_from_bytes(&[0x03, 0xf1]).is_err()); // 1009 itself
        assert!(s.g1_from_bytes(&[0x00]).is_err());
        assert_eq!(s.g1_from_bytes(&[0x03, 0xf0]).unwrap(), s.g1(1008));
    }

    #[test]
    fn hash_rule_is_reproducible() {
        let s = ToySuite::new(1009, b"seed".to_vec()).unwrap();
        let mut h = Shake256::default();
        h.update(&[0x01]);
        h.update(&4u32.to_be_bytes());
        h.update(b"seed");
        h.update(b"LTP-A");
        let mut buf = [0u8; 16];
        h.finalize_xof().read(&mut buf);
        let expected = (u128::from_be_bytes(buf) % 1008) as u64 + 1;
        assert_eq!(s.hash_to_g1(b"LTP-A").value(), expected);
        assert_ne!(s.hash_to_g1(b"x").value(), s.hash_to_g2(b"x").value());
    }

    #[test]
    fn mask_length_and_padding() {
        let s = ToySuite::default();
        let w = s.gt(168);
        assert!(s.mask_bytes(&w, 0).is_empty());
        assert_eq!(s.mask_bytes(&w, 272).len(), 34);
        let m = s.mask_bytes(&w, 13);
        assert_eq!(m.len(), 2);
        assert_eq!(m[1] & 0b0000_0111, 0);
        assert_eq!(&s.mask_bytes(&w, 272)[..1], &m[..1]);
    }

    #[test]
    fn inverse_and_random_nonzero() {
        let s = ToySuite::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = s.random_nonzero_scalar(&mut rng);
            assert!(!x.is_zero());
            assert_eq!(x * x.invert().unwrap(), s.scalar(1));
        }
        assert!(s.scalar(0).invert().is_none());
        assert_eq!(s.scalar(5).invert().unwrap().value(), 202);
    }
}
