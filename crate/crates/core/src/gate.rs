//! The 16 two-input Boolean functions.
//!
//! Code `n` encodes the truth table as the binary expansion of `n`: bit
//! `2a + b` of the code is the output for inputs `(a, b)`, so the rows
//! `(0,0), (0,1), (1,0), (1,1)` map to bits 0..3. AND is code 8, OR 14,
//! XOR 6, the projection `f(a,b) = a` is 12 and `f(a,b) = b` is 10.

use core::fmt;

use crate::error::{Error, Result};

pub const NUM_GATE_FUNCTIONS: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateTruthTable(u8);

impl GateTruthTable {
    pub const FALSE: Self = Self(0);
    pub const NOR: Self = Self(1);
    pub const AND: Self = Self(8);
    pub const XOR: Self = Self(6);
    pub const NAND: Self = Self(7);
    pub const XNOR: Self = Self(9);
    pub const OR: Self = Self(14);
    pub const TRUE: Self = Self(15);
    /// `f(a, b) = a`
    pub const A: Self = Self(12);
    /// `f(a, b) = b`
    pub const B: Self = Self(10);
    pub const NOT_A: Self = Self(3);
    pub const NOT_B: Self = Self(5);

    pub fn from_code(code: u8) -> Result<Self> {
        if (code as usize) < NUM_GATE_FUNCTIONS {
            Ok(Self(code))
        } else {
            Err(Error::structural("gate code must be < 16"))
        }
    }

    /// All 16 tables in code order.
    pub fn all() -> impl Iterator<Item = GateTruthTable> {
        (0..NUM_GATE_FUNCTIONS as u8).map(GateTruthTable)
    }

    #[inline]
    pub fn code(self) -> u8 {
        self.0
    }

    /// Table bits in row order `(0,0), (0,1), (1,0), (1,1)`.
    pub fn bits(self) -> [bool; 4] {
        core::array::from_fn(|i| (self.0 >> i) & 1 == 1)
    }

    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        (self.0 >> ((a as u8) << 1 | b as u8)) & 1 == 1
    }

    #[inline]
    pub fn eval_f64(self, a: bool, b: bool) -> f64 {
        self.eval(a, b) as u8 as f64
    }

    /// Evaluates the gate on 64 samples at once.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        let t = self.0;
        let m = |i: u8| 0u64.wrapping_sub(((t >> i) & 1) as u64);
        (!a & !b & m(0)) | (!a & b & m(1)) | (a & !b & m(2)) | (a & b & m(3))
    }

    /// Multilinear extension: the unique polynomial of degree one in each
    /// argument that agrees with the table on `{0,1}^2`.
    pub fn eval_multilinear(self, a: f64, b: f64) -> f64 {
        let [t00, t01, t10, t11] = self.bits().map(|v| v as u8 as f64);
        (1.0 - a) * (1.0 - b) * t00 + (1.0 - a) * b * t01 + a * (1.0 - b) * t10 + a * b * t11
    }

    pub fn is_constant(self) -> Option<bool> {
        match self.0 {
            0 => Some(false),
            15 => Some(true),
            _ => None,
        }
    }

    /// True for the two pass-through tables (`a` and `b`), i.e. learned skip
    /// connections.
    pub fn is_projection(self) -> bool {
        self == Self::A || self == Self::B
    }
}

impl fmt::Debug for GateTruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.0 {
            0 => "FALSE",
            1 => "NOR",
            2 => "B_AND_NOT_A",
            3 => "NOT_A",
            4 => "A_AND_NOT_B",
            5 => "NOT_B",
            6 => "XOR",
            7 => "NAND",
            8 => "AND",
            9 => "XNOR",
            10 => "B",
            11 => "A_IMPLIES_B",
            12 => "A",
            13 => "B_IMPLIES_A",
            14 => "OR",
            _ => "TRUE",
        };
        write!(f, "{name}({})", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_codes_match_tables() {
        let t = |g: GateTruthTable| [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(a, b)| g.eval(a == 1, b == 1));
        assert_eq!(t(GateTruthTable::AND), [false, false, false, true]);
        assert_eq!(t(GateTruthTable::OR), [false, true, true, true]);
        assert_eq!(t(GateTruthTable::XOR), [false, true, true, false]);
        assert_eq!(t(GateTruthTable::A), [false, false, true, true]);
        assert_eq!(t(GateTruthTable::B), [false, true, false, true]);
        assert_eq!(t(GateTruthTable::NOT_A), [true, true, false, false]);
        assert!(GateTruthTable::from_code(16).is_err());
    }

    #[test]
    fn word_eval_matches_scalar() {
        let a = 0b1100u64;
        let b = 0b1010u64;
        for g in GateTruthTable::all() {
            let w = g.eval_word(a, b);
            for i in 0..4 {
                let expect = g.eval((a >> i) & 1 == 1, (b >> i) & 1 == 1);
                assert_eq!((w >> i) & 1 == 1, expect, "{g:?} row {i}");
            }
            // every code is its own table over the 4 rows when a=1100, b=1010
            assert_eq!(
                w & 0xF,
                [0, 1, 2, 3].iter().fold(0, |acc, &i| {
                    let row = ((a >> i) & 1) << 1 | ((b >> i) & 1);
                    acc | ((g.code() as u64 >> row) & 1) << i
                })
            );
        }
    }

    #[test]
    fn multilinear_agrees_on_corners() {
        for g in GateTruthTable::all() {
            for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
                let v = g.eval_multilinear(a as u8 as f64, b as u8 as f64);
                assert_eq!(v, g.eval_f64(a, b));
            }
        }
    }
}
