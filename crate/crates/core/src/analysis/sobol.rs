//! Sobol sequence with hash-driven Owen scrambling.
//!
//! Dimension 0 is the base-2 radical inverse. Higher dimensions use
//! primitive polynomials over GF(2) in increasing (degree, coefficient)
//! order; the first twenty take the Joe-Kuo initial direction numbers and
//! later ones fall back to seeded odd initial values. Points are indexed
//! directly (not in Gray-code order), so point `i` of dimension 0 is the
//! bit reversal of `i`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

const BITS: usize = 32;

/// Initial direction numbers `m_1..m_s` for dimensions 1..=20.
const JOE_KUO_INIT: [&[u32]; 20] = [
    &[1],
    &[1, 3],
    &[1, 3, 1],
    &[1, 1, 1],
    &[1, 1, 3, 3],
    &[1, 3, 5, 13],
    &[1, 1, 5, 5, 17],
    &[1, 1, 5, 5, 5],
    &[1, 1, 7, 11, 19],
    &[1, 1, 5, 1, 1],
    &[1, 1, 1, 3, 11],
    &[1, 3, 5, 5, 31],
    &[1, 3, 3, 9, 7, 49],
    &[1, 1, 1, 15, 21, 21],
    &[1, 3, 1, 13, 27, 49],
    &[1, 1, 1, 15, 7, 5],
    &[1, 3, 1, 15, 13, 25],
    &[1, 1, 5, 5, 19, 61],
    &[1, 3, 7, 11, 23, 15, 103],
    &[1, 3, 7, 13, 13, 15, 69],
];

/// A primitive polynomial `x^degree + ... + 1`; `inner` holds the
/// coefficients of `x^(degree-1) .. x^1`, most significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Primitive {
    pub degree: u32,
    pub inner: u32,
}

fn poly_mulmod(a: u64, b: u64, modulus: u64, degree: u32) -> u64 {
    let mut acc = 0u64;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> degree & 1 == 1 {
            a ^= modulus;
        }
    }
    acc
}

fn x_pow_mod(exp: u64, modulus: u64, degree: u32) -> u64 {
    let mut result = 1u64;
    let mut base = 2u64; // the polynomial x
    if degree == 1 {
        base = poly_mulmod(1, 2, modulus, degree);
    }
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(result, base, modulus, degree);
        }
        base = poly_mulmod(base, base, modulus, degree);
        e >>= 1;
    }
    result
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_primitive(degree: u32, inner: u32) -> bool {
    let modulus = (1u64 << degree) | ((inner as u64) << 1) | 1;
    let order = (1u64 << degree) - 1;
    if x_pow_mod(order, modulus, degree) != 1 {
        return false;
    }
    prime_factors(order)
        .into_iter()
        .all(|f| x_pow_mod(order / f, modulus, degree) != 1)
}

/// The first `count` primitive polynomials in (degree, coefficient) order.
pub fn primitive_polynomials(count: usize) -> Vec<Primitive> {
    let mut out = Vec::with_capacity(count);
    let mut degree = 1;
    while out.len() < count && degree < 32 {
        for inner in 0..(1u32 << (degree - 1)) {
            if out.len() == count {
                break;
            }
            if is_primitive(degree, inner) {
                out.push(Primitive { degree, inner });
            }
        }
        degree += 1;
    }
    out
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Direction vectors for a fixed number of dimensions.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(invalid!("Sobol sequence needs at least one dimension"));
        }
        let mut directions = Vec::with_capacity(dims);
        let mut first = [0u32; BITS];
        for (j, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - j);
        }
        directions.push(first);
        for (d, poly) in primitive_polynomials(dims - 1).into_iter().enumerate() {
            let s = poly.degree as usize;
            let mut m = [0u32; BITS];
            match JOE_KUO_INIT.get(d) {
                Some(init) if init.len() == s => m[..s].copy_from_slice(init),
                _ => {
                    for (k, slot) in m[..s].iter_mut().enumerate() {
                        let h = splitmix((d as u64) << 8 | k as u64) as u32;
                        *slot = (h & ((1u32 << (k + 1)) - 1)) | 1;
                    }
                }
            }
            for k in s..BITS {
                let mut next = m[k - s] ^ (m[k - s] << s);
                for i in 1..s {
                    let bit = (poly.inner >> (s - 1 - i)) & 1;
                    if bit == 1 {
                        next ^= m[k - i] << i;
                    }
                }
                m[k] = next;
            }
            let mut v = [0u32; BITS];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = m[k] << (BITS - 1 - k);
            }
            directions.push(v);
        }
        if directions.len() != dims {
            return Err(invalid!("cannot build {dims} Sobol dimensions"));
        }
        Ok(Self { directions })
    }

    pub fn dims(&self) -> usize {
        self.directions.len()
    }

    /// Unscrambled 32-bit digits of point `index` in dimension `dim`.
    pub fn bits(&self, index: u32, dim: usize) -> u32 {
        let v = &self.directions[dim];
        let mut x = 0;
        let mut i = index;
        let mut j = 0;
        while i != 0 {
            if i & 1 == 1 {
                x ^= v[j];
            }
            i >>= 1;
            j += 1;
        }
        x
    }

    /// Unscrambled point in `[0, 1)^dims`.
    pub fn point(&self, index: u32) -> Vec<f64> {
        (0..self.dims()).map(|d| to_unit(self.bits(index, d))).collect()
    }

    /// Owen-scrambled point in `[0, 1)^dims`.
    pub fn scrambled_point(&self, index: u32, seed: u64) -> Vec<f64> {
        (0..self.dims())
            .map(|d| to_unit(owen_scramble(self.bits(index, d), d as u64, seed)))
            .collect()
    }
}

fn to_unit(bits: u32) -> f64 {
    bits as f64 / (1u64 << BITS) as f64
}

/// Nested uniform scramble: the flip of each digit depends on the seed,
/// the dimension and all more significant original digits.
pub fn owen_scramble(x: u32, dim: u64, seed: u64) -> u32 {
    let base = splitmix(seed ^ splitmix(dim.wrapping_add(0x5851_f42d_4c95_7f2d)));
    let mut out = 0u32;
    for j in 0..BITS {
        let prefix = if j == 0 { 0 } else { (x >> (BITS - j)) as u64 };
        let h = splitmix(base ^ (((j as u64) << 32) | prefix).wrapping_mul(0x2545_f491_4f6c_dd1d));
        let bit = (x >> (BITS - 1 - j)) & 1;
        out |= (bit ^ (h as u32 & 1)) << (BITS - 1 - j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn first_dimension_is_radical_inverse() {
        let s = Sobol::new(4).unwrap();
        for m in 0..10u32 {
            for i in 0..(1u32 << m) {
                let expected = i.reverse_bits() as f64 / 4294967296.0;
                assert_eq!(s.point(i)[0], expected);
            }
        }
        assert_eq!(s.point(1)[0], 0.5);
        assert_eq!(s.point(2)[0], 0.25);
        assert_eq!(s.point(3)[0], 0.75);
    }

    #[test]
    fn polynomial_order_matches_reference_table() {
        let polys = primitive_polynomials(20);
        let expected = [
            (1, 0),
            (2, 1),
            (3, 1),
            (3, 2),
            (4, 1),
            (4, 4),
            (5, 2),
            (5, 4),
            (5, 7),
            (5, 11),
            (5, 13),
            (5, 14),
            (6, 1),
            (6, 13),
            (6, 16),
            (6, 19),
            (6, 22),
            (6, 25),
            (7, 1),
            (7, 4),
        ];
        let got: Vec<(u32, u32)> = polys.iter().map(|p| (p.degree, p.inner)).collect();
        assert_eq!(got, expected.to_vec());
        for (init, p) in JOE_KUO_INIT.iter().zip(&polys) {
            assert_eq!(init.len(), p.degree as usize);
            for (k, m) in init.iter().enumerate() {
                assert!(m % 2 == 1 && *m < (1 << (k + 1)));
            }
        }
    }

    #[test]
    fn every_dimension_is_stratified() {
        let s = Sobol::new(64).unwrap();
        for d in 0..s.dims() {
            for m in [1u32, 4, 8] {
                let n = 1u32 << m;
                let mut seen = vec![false; n as usize];
                for i in 0..n {
                    let cell = (s.bits(i, d) >> (32 - m)) as usize;
                    assert!(!seen[cell], "dimension {d} repeats cell {cell} at 2^{m}");
                    seen[cell] = true;
                }
            }
        }
    }

    #[test]
    fn scrambling_preserves_stratification_and_is_seeded() {
        let s = Sobol::new(3).unwrap();
        let n = 256u32;
        for d in 0..3 {
            let mut seen = vec![false; n as usize];
            for i in 0..n {
                let x = s.scrambled_point(i, 42)[d];
                let cell = (x * n as f64) as usize;
                assert!(!seen[cell]);
                seen[cell] = true;
            }
        }
        assert_eq!(s.scrambled_point(5, 1), s.scrambled_point(5, 1));
        assert_ne!(s.scrambled_point(5, 1), s.scrambled_point(5, 2));
    }

    #[test]
    fn two_dimensional_projection_is_stratified() {
        // (0, 2)-sequence property of the first two dimensions
        let s = Sobol::new(2).unwrap();
        for m in 1..8u32 {
            let n = 1u32 << m;
            for split in 0..=m {
                let mut seen = vec![false; n as usize];
                for i in 0..n {
                    let top = |x: u32, k: u32| if k == 0 { 0 } else { x >> (32 - k) };
                    let a = top(s.bits(i, 0), split);
                    let b = top(s.bits(i, 1), m - split);
                    let cell = ((a as usize) << (m - split)) | b as usize;
                    assert!(!seen[cell]);
                    seen[cell] = true;
                }
            }
        }
    }
}
