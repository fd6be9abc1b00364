//! Arithmetic in GF(2^w), 1 <= w <= 16, via log/antilog tables.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Primitive reduction polynomials, indexed by `w - 1`, with the `x^w` term.
const PRIMITIVE_POLYS: [u32; 16] = [
    0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

pub const DEFAULT_W: u32 = 8;

/// Identifies a characteristic-2 field by extension degree and reduction
/// polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub w: u32,
    pub poly: u32,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self::new(DEFAULT_W).expect("default degree is valid")
    }
}

impl FieldSpec {
    pub fn new(w: u32) -> Result<Self> {
        if !(1..=16).contains(&w) {
            return Err(invalid(format!("field degree w={w} outside [1, 16]")));
        }
        Ok(Self {
            w,
            poly: PRIMITIVE_POLYS[w as usize - 1],
        })
    }

    /// GF(2^8) unless more than 255 colors are needed, then GF(2^16).
    pub fn for_colors(n_colors: usize) -> Result<Self> {
        if n_colors <= 255 {
            Self::new(8)
        } else if n_colors <= 65535 {
            Self::new(16)
        } else {
            Err(invalid(format!(
                "{n_colors} colors exceed what GF(2^16) supports"
            )))
        }
    }

    pub fn size(&self) -> usize {
        1 << self.w
    }

    /// Shared arithmetic tables for this field, built on first use.
    pub fn field(&self) -> &'static Field {
        static TABLES: [OnceLock<Field>; 16] = [const { OnceLock::new() }; 16];
        assert_eq!(
            self.poly,
            PRIMITIVE_POLYS[self.w as usize - 1],
            "only the built-in primitive polynomials are supported"
        );
        TABLES[self.w as usize - 1].get_or_init(|| Field::build(self.w))
    }

    /// Validates a deserialized spec.
    pub fn validate(&self) -> Result<()> {
        let expect = Self::new(self.w)?;
        if expect.poly != self.poly {
            return Err(invalid(format!(
                "unsupported reduction polynomial {:#x} for w={}",
                self.poly, self.w
            )));
        }
        Ok(())
    }
}

/// Log/antilog tables of GF(2^w).
#[derive(Debug)]
pub struct Field {
    w: u32,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Field {
    fn build(w: u32) -> Self {
        let size = 1usize << w;
        let order = size - 1;
        let poly = PRIMITIVE_POLYS[w as usize - 1];
        let mut exp = vec![0u16; 2 * order.max(1)];
        let mut log = vec![0u16; size];
        let mut x: u32 = 1;
        for (e, slot) in exp.iter_mut().take(order).enumerate() {
            *slot = x as u16;
            assert!(
                e == 0 || x != 1,
                "polynomial {poly:#x} is not primitive for w={w}"
            );
            log[x as usize] = e as u16;
            x <<= 1;
            if x & (1 << w) != 0 {
                x ^= poly;
            }
        }
        for e in order..exp.len() {
            exp[e] = exp[e - order];
        }
        Self { w, order, exp, log }
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn size(&self) -> usize {
        self.order + 1
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "zero has no inverse");
        self.exp[(self.order - self.log[a as usize] as usize) % self.order]
    }

    #[inline]
    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: u16, e: usize) -> u16 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] as usize * e) % self.order]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_builds() {
        for w in 1..=16 {
            let f = FieldSpec::new(w).unwrap().field();
            assert_eq!(f.size(), 1 << w);
        }
        assert!(FieldSpec::new(0).is_err());
        assert!(FieldSpec::new(17).is_err());
    }

    #[test]
    fn gf256_known_products() {
        let f = FieldSpec::new(8).unwrap().field();
        // table lookups against carry-less multiplication
        for (a, b) in [(0x53u16, 0xCAu16), (2, 0x80), (0xFF, 0xFF), (7, 9)] {
            assert_eq!(f.mul(a, b), slow_mul(a, b, 8, 0x11D));
        }
    }

    fn slow_mul(a: u16, b: u16, w: u32, poly: u32) -> u16 {
        let mut acc: u32 = 0;
        for bit in 0..w {
            if b >> bit & 1 == 1 {
                acc ^= (a as u32) << bit;
            }
        }
        for bit in (w..2 * w).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= poly << (bit - w);
            }
        }
        acc as u16
    }

    #[test]
    fn field_axioms_small_fields() {
        for w in 1..=8 {
            let spec = FieldSpec::new(w).unwrap();
            let f = spec.field();
            let n = spec.size() as u16;
            for a in 0..n {
                assert_eq!(f.add(a, a), 0);
                for b in 1..n {
                    assert_eq!(f.mul(f.mul(a, b), f.inv(b)), a);
                    assert_eq!(f.mul(a, b), slow_mul(a, b, w, spec.poly));
                }
            }
        }
    }

    #[test]
    fn promotion_for_many_colors() {
        assert_eq!(FieldSpec::for_colors(255).unwrap().w, 8);
        assert_eq!(FieldSpec::for_colors(256).unwrap().w, 16);
        assert!(FieldSpec::for_colors(70_000).is_err());
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let f = FieldSpec::new(16).unwrap().field();
        let a = 0x1234;
        let mut acc = 1u16;
        for e in 0..40 {
            assert_eq!(f.pow(a, e), acc);
            acc = f.mul(acc, a);
        }
    }
}
