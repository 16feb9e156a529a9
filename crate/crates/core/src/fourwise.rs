//! Four-wise independent ±1 vectors from cubic polynomials over GF(2^k).
//!
//! `sign(i) = (-1)^{lowbit(a₃i³ + a₂i² + a₁i + a₀)}` with uniform
//! coefficients. Evaluations at four distinct points are uniform and
//! independent over the field, and every field bit is exactly balanced,
//! so products of signs at distinct points have mean exactly zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::rng::rng_from;

/// A binary extension field `GF(2)[x]/(f)` with `deg f ≤ 64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryField {
    degree: u32,
    /// `f` without its leading `x^degree` term.
    reduction: u64,
}

const FIELDS: [(u32, u64); 5] = [
    (5, 0b101),                    // x^5 + x^2 + 1
    (8, 0x1b),                     // x^8 + x^4 + x^3 + x + 1
    (16, 0x2b),                    // x^16 + x^5 + x^3 + x + 1
    (32, 0x8d),                    // x^32 + x^7 + x^3 + x^2 + 1
    (64, 0x1b),                    // x^64 + x^4 + x^3 + x + 1
];

impl BinaryField {
    pub fn with_degree(degree: u32) -> Result<Self> {
        match FIELDS.iter().find(|(d, _)| *d == degree) {
            Some(&(degree, reduction)) => Ok(Self { degree, reduction }),
            None => contract(format!("no built-in field of degree {degree}")),
        }
    }

    /// The smallest built-in field of degree ≥ 8 with at least `n` elements.
    pub fn for_len(n: usize) -> Self {
        let &(degree, reduction) = FIELDS[1..]
            .iter()
            .find(|(d, _)| *d == 64 || (n as u128) <= 1u128 << d)
            .expect("degree 64 always fits");
        Self { degree, reduction }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn size(&self) -> u128 {
        1u128 << self.degree
    }

    fn mask(&self) -> u64 {
        if self.degree == 64 {
            u64::MAX
        } else {
            (1u64 << self.degree) - 1
        }
    }

    /// Multiplication by `x`.
    fn xtime(&self, a: u64) -> u64 {
        let carry = (a >> (self.degree - 1)) & 1;
        let shifted = (a << 1) & self.mask();
        if carry == 1 {
            shifted ^ self.reduction
        } else {
            shifted
        }
    }

    pub fn mul(&self, a: u64, mut b: u64) -> u64 {
        let mut a = a & self.mask();
        let mut acc = 0;
        b &= self.mask();
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            a = self.xtime(a);
            b >>= 1;
        }
        acc
    }

    pub fn random_element(&self, rng: &mut impl Rng) -> u64 {
        rng.random::<u64>() & self.mask()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourWiseSigns {
    n: usize,
    field: BinaryField,
    coeffs: [u64; 4],
}

impl FourWiseSigns {
    pub fn new(n: usize, seed: u64) -> Self {
        Self::in_field(BinaryField::for_len(n), n, seed).expect("field fits n")
    }

    pub fn in_field(field: BinaryField, n: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from(seed);
        let coeffs = std::array::from_fn(|_| field.random_element(&mut rng));
        Self::from_coeffs(field, n, coeffs)
    }

    pub fn from_coeffs(field: BinaryField, n: usize, coeffs: [u64; 4]) -> Result<Self> {
        if n as u128 > field.size() {
            return contract(format!("length {n} exceeds field size {}", field.size()));
        }
        Ok(Self { n, field, coeffs })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn field(&self) -> BinaryField {
        self.field
    }

    pub fn coeffs(&self) -> [u64; 4] {
        self.coeffs
    }

    /// Polynomial value at `i`.
    pub fn hash(&self, i: usize) -> u64 {
        let x = i as u64;
        let f = &self.field;
        let [a0, a1, a2, a3] = self.coeffs;
        f.mul(f.mul(f.mul(a3, x) ^ a2, x) ^ a1, x) ^ a0
    }

    pub fn sign(&self, i: usize) -> i8 {
        if self.hash(i) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn to_vec(&self) -> Vec<i8> {
        (0..self.n).map(|i| self.sign(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clmul_mod(a: u128, b: u128, f: u128, deg: u32) -> u128 {
        let mut acc = 0u128;
        let mut a = a;
        for bit in 0..deg {
            if (b >> bit) & 1 == 1 {
                acc ^= a;
            }
            a <<= 1;
            if (a >> deg) & 1 == 1 {
                a ^= f;
            }
        }
        acc
    }

    fn poly_deg(a: u128) -> i32 {
        127 - a.leading_zeros() as i32
    }

    fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            while a != 0 && poly_deg(a) >= poly_deg(b) {
                a ^= b << (poly_deg(a) - poly_deg(b));
            }
            std::mem::swap(&mut a, &mut b);
        }
        a
    }

    // Rabin: f of degree k is irreducible iff x^(2^k) ≡ x mod f and
    // gcd(x^(2^(k/p)) − x, f) = 1 for every prime p | k.
    fn rabin_irreducible(deg: u32, reduction: u64) -> bool {
        let f = (1u128 << deg) | reduction as u128;
        let frob = |steps: u32| (0..steps).fold(2u128, |h, _| clmul_mod(h, h, f, deg));
        let primes: Vec<u32> = (2..=deg).filter(|p| deg % p == 0 && (2..*p).all(|d| p % d != 0)).collect();
        frob(deg) == 2 && primes.iter().all(|p| poly_gcd(f, frob(deg / p) ^ 2) == 1)
    }

    #[test]
    fn built_in_moduli_are_irreducible() {
        for (deg, red) in FIELDS {
            assert!(rabin_irreducible(deg, red), "degree {deg}");
        }
        assert!(!rabin_irreducible(8, 0b1)); // x^8 + 1 = (x + 1)^8
    }

    #[test]
    fn multiplication_matches_reference() {
        for (deg, _) in FIELDS {
            let field = BinaryField::with_degree(deg).unwrap();
            let f = (1u128 << deg) | field.reduction as u128;
            let mut rng = rng_from(deg as u64);
            for _ in 0..500 {
                let a = field.random_element(&mut rng);
                let b = field.random_element(&mut rng);
                assert_eq!(field.mul(a, b) as u128, clmul_mod(a as u128, b as u128, f, deg));
            }
        }
        let gf256 = BinaryField::with_degree(8).unwrap();
        assert_eq!(gf256.mul(0x57, 0x83), 0xc1);
    }

    #[test]
    fn field_selection() {
        assert_eq!(BinaryField::for_len(1).degree(), 8);
        assert_eq!(BinaryField::for_len(256).degree(), 8);
        assert_eq!(BinaryField::for_len(257).degree(), 16);
        assert_eq!(BinaryField::for_len(1 << 20).degree(), 32);
        assert_eq!(BinaryField::for_len(usize::MAX).degree(), 64);
    }

    #[test]
    fn deterministic_and_in_range() {
        let a = FourWiseSigns::new(40, 7);
        assert_eq!(a, FourWiseSigns::new(40, 7));
        assert_ne!(a.to_vec(), FourWiseSigns::new(40, 8).to_vec());
        assert!(a.to_vec().iter().all(|&s| s == 1 || s == -1));
        let small = BinaryField::with_degree(5).unwrap();
        assert!(FourWiseSigns::in_field(small, 33, 0).is_err());
    }

    // Every seed of the degree-5 family, every set of up to four distinct
    // points among 32: the sign product is +1 on exactly half the seeds.
    #[test]
    fn exhaustive_four_wise_independence() {
        let field = BinaryField::with_degree(5).unwrap();
        let n = 32;
        let seeds = 1usize << 20;
        let words = seeds / 64;
        let mut bits = vec![vec![0u64; words]; n];
        for s in 0..seeds {
            let coeffs = std::array::from_fn(|j| ((s >> (5 * j)) & 31) as u64);
            let h = FourWiseSigns::from_coeffs(field, n, coeffs).unwrap();
            for (i, row) in bits.iter_mut().enumerate() {
                row[s / 64] |= (h.hash(i) & 1) << (s % 64);
            }
        }
        let balanced = |rows: &[usize]| {
            let ones: u32 = (0..words)
                .map(|w| rows.iter().fold(0u64, |acc, &r| acc ^ bits[r][w]).count_ones())
                .sum();
            ones as usize * 2 == seeds
        };
        for a in 0..n {
            assert!(balanced(&[a]));
            for b in a + 1..n {
                assert!(balanced(&[a, b]));
                for c in b + 1..n {
                    assert!(balanced(&[a, b, c]));
                    for d in c + 1..n {
                        assert!(balanced(&[a, b, c, d]), "({a}, {b}, {c}, {d})");
                    }
                }
            }
        }
    }
}
