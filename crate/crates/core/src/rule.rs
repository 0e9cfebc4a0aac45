//! Linear local rules over Z_m and their formal power series.
//!
//! A rule on the neighborhood `[-l, r]` is `f(x_{-l}, ..., x_r) = Σ λ_i x_i mod m`.
//! Its series is `F(X) = Σ λ_i X^{-i}`; composing two cellular automata multiplies
//! their series and iterating a rule raises the series to a power.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest neighborhood `iterate`/`compose` will produce by default.
pub const DEFAULT_MAX_RULE_WIDTH: usize = 1 << 16;

/// Permutativity of a local rule at its extreme variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PermutativityClass {
    None,
    LeftOnly,
    RightOnly,
    Bipermutative,
}

impl PermutativityClass {
    fn from_ends(left: bool, right: bool) -> Self {
        match (left, right) {
            (true, true) => Self::Bipermutative,
            (true, false) => Self::LeftOnly,
            (false, true) => Self::RightOnly,
            (false, false) => Self::None,
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, Self::LeftOnly | Self::Bipermutative)
    }

    pub fn is_right(self) -> bool {
        matches!(self, Self::RightOnly | Self::Bipermutative)
    }
}

impl fmt::Display for PermutativityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "non-permutative",
            Self::LeftOnly => "left-permutative only",
            Self::RightOnly => "right-permutative only",
            Self::Bipermutative => "bipermutative",
        })
    }
}

/// JSON shape of a rule: `{"m":2,"l":1,"r":1,"coeffs":[1,0,1]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleLiteral {
    pub m: u64,
    pub l: usize,
    pub r: usize,
    pub coeffs: Vec<i64>,
}

/// A linear local rule `Σ_{i=-l}^{r} λ_i x_i mod m`.
///
/// Coefficients are canonical residues. The neighborhood always contains offset 0 and
/// is trimmed so that a nonzero rule has a nonzero coefficient at each end unless that
/// end is offset 0 itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RuleLiteral", into = "RuleLiteral")]
pub struct LocalRule {
    m: u32,
    l: usize,
    r: usize,
    coeffs: Vec<u32>,
}

impl TryFrom<RuleLiteral> for LocalRule {
    type Error = Error;

    fn try_from(lit: RuleLiteral) -> Result<Self> {
        LocalRule::new(lit.m, lit.l, lit.r, &lit.coeffs)
    }
}

impl From<LocalRule> for RuleLiteral {
    fn from(rule: LocalRule) -> Self {
        RuleLiteral {
            m: rule.m as u64,
            l: rule.l,
            r: rule.r,
            coeffs: rule.coeffs.iter().map(|&c| c as i64).collect(),
        }
    }
}

pub(crate) fn check_modulus(m: u64) -> Result<u32> {
    if m < 2 || m > u32::MAX as u64 {
        return Err(Error::InvalidModulus(m));
    }
    Ok(m as u32)
}

impl LocalRule {
    /// Builds a rule from coefficients listed left to right for offsets `-l..=r`.
    /// Coefficients are reduced mod `m`; zero ends are trimmed back toward offset 0.
    pub fn new(m: u64, l: usize, r: usize, coeffs: &[i64]) -> Result<Self> {
        let m = check_modulus(m)?;
        let expected = l + r + 1;
        if coeffs.len() != expected {
            return Err(Error::CoefficientCount {
                l,
                r,
                expected,
                got: coeffs.len(),
            });
        }
        let reduced = coeffs
            .iter()
            .map(|&c| c.rem_euclid(m as i64) as u32)
            .collect();
        Ok(Self::trimmed(m, l, r, reduced))
    }

    fn trimmed(m: u32, mut l: usize, mut r: usize, mut coeffs: Vec<u32>) -> Self {
        while l > 0 && coeffs[0] == 0 {
            coeffs.remove(0);
            l -= 1;
        }
        while r > 0 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
            r -= 1;
        }
        Self { m, l, r, coeffs }
    }

    /// The identity map, `λ_0 = 1`.
    pub fn identity(m: u64) -> Result<Self> {
        Self::new(m, 0, 0, &[1])
    }

    /// Elementary rule 90: `x_{-1} + x_1 mod 2`.
    pub fn rule90() -> Self {
        Self {
            m: 2,
            l: 1,
            r: 1,
            coeffs: vec![1, 0, 1],
        }
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn left_radius(&self) -> usize {
        self.l
    }

    pub fn right_radius(&self) -> usize {
        self.r
    }

    /// `l + r + 1`.
    pub fn width(&self) -> usize {
        self.l + self.r + 1
    }

    /// Coefficients for offsets `-l..=r`.
    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    /// `λ_offset`, zero outside the neighborhood.
    pub fn coeff(&self, offset: i64) -> u32 {
        let idx = offset + self.l as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            0
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn to_literal(&self) -> RuleLiteral {
        self.clone().into()
    }

    /// Evaluates the local rule on a window of exactly `l + r + 1` symbols.
    pub fn eval(&self, window: &[u32]) -> u32 {
        debug_assert_eq!(window.len(), self.coeffs.len());
        let m = self.m as u64;
        let sum = window
            .iter()
            .zip(&self.coeffs)
            .fold(0u64, |acc, (&x, &c)| (acc + x as u64 * c as u64) % m);
        sum as u32
    }

    /// Permutative in variable `offset` iff `gcd(λ_offset, m) = 1`.
    pub fn is_permutative_at(&self, offset: i64) -> bool {
        self.coeff(offset).gcd(&self.m) == 1
    }

    pub fn classify(&self) -> PermutativityClass {
        PermutativityClass::from_ends(
            self.is_permutative_at(-(self.l as i64)),
            self.is_permutative_at(self.r as i64),
        )
    }

    /// Checks permutativity in variable `offset` by tabulating the local rule: for every
    /// assignment of the other variables, `x_offset ↦ f(..)` must be a bijection of Z_m.
    pub fn brute_force_permutative(&self, offset: i64, cap: u128) -> Result<bool> {
        if offset < -(self.l as i64) || offset > self.r as i64 {
            return Err(Error::OffsetOutOfRange {
                offset,
                l: self.l,
                r: self.r,
            });
        }
        let width = self.width();
        let required = (self.m as u128)
            .checked_pow(width as u32)
            .unwrap_or(u128::MAX);
        if required > cap {
            return Err(Error::CapExceeded { required, cap });
        }
        let m = self.m as usize;
        let pos = (offset + self.l as i64) as usize;
        let mut window = vec![0u32; width];
        let mut others = vec![0u32; width - 1];
        let mut seen = vec![false; m];
        loop {
            let mut k = 0;
            for (i, slot) in window.iter_mut().enumerate() {
                if i != pos {
                    *slot = others[k];
                    k += 1;
                }
            }
            seen.iter_mut().for_each(|s| *s = false);
            for v in 0..self.m {
                window[pos] = v;
                let out = self.eval(&window) as usize;
                if seen[out] {
                    return Ok(false);
                }
                seen[out] = true;
            }
            if !odometer(&mut others, self.m) {
                return Ok(true);
            }
        }
    }

    pub fn to_laurent(&self) -> LaurentPoly {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(idx, &c)| (self.l as i64 - idx as i64, c))
            .collect();
        LaurentPoly { m: self.m, terms }
    }

    /// Inverse of [`LocalRule::to_laurent`]. The zero series maps to the zero rule on `[0, 0]`.
    pub fn from_laurent(poly: &LaurentPoly) -> Self {
        let (Some(&lo_exp), Some(&hi_exp)) = (poly.terms.keys().next(), poly.terms.keys().last())
        else {
            return Self {
                m: poly.m,
                l: 0,
                r: 0,
                coeffs: vec![0],
            };
        };
        let l = hi_exp.max(0) as usize;
        let r = (-lo_exp).max(0) as usize;
        let mut coeffs = vec![0u32; l + r + 1];
        for (&exp, &c) in &poly.terms {
            coeffs[(l as i64 - exp) as usize] = c;
        }
        Self::trimmed(poly.m, l, r, coeffs)
    }

    /// Local rule of `T^n`, computed as `F(X)^n mod m`.
    pub fn iterate(&self, n: u64) -> Result<Self> {
        self.iterate_with_limit(n, DEFAULT_MAX_RULE_WIDTH)
    }

    pub fn iterate_with_limit(&self, n: u64, max_width: usize) -> Result<Self> {
        assert!(n >= 1, "iteration count must be at least 1");
        let width = (self.l as u128 + self.r as u128) * n as u128 + 1;
        if width > max_width as u128 {
            return Err(Error::SupportTooWide {
                width,
                max: max_width,
            });
        }
        Ok(Self::from_laurent(&self.to_laurent().pow(n)))
    }

    /// Rule whose series is `F_self · F_other`, i.e. the local rule of `T_self ∘ T_other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.compose_with_limit(other, DEFAULT_MAX_RULE_WIDTH)
    }

    pub fn compose_with_limit(&self, other: &Self, max_width: usize) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::ModulusMismatch(self.m, other.m));
        }
        let width = (self.l + other.l + self.r + other.r) as u128 + 1;
        if width > max_width as u128 {
            return Err(Error::SupportTooWide {
                width,
                max: max_width,
            });
        }
        Ok(Self::from_laurent(
            &self.to_laurent().mul(&other.to_laurent()),
        ))
    }
}

impl fmt::Display for LocalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lit = serde_json::to_string(&self.to_literal()).map_err(|_| fmt::Error)?;
        f.write_str(&lit)
    }
}

/// Advances `digits` as a base-`m` counter, last digit fastest. Returns false on wraparound.
pub(crate) fn odometer(digits: &mut [u32], m: u32) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < m {
            return true;
        }
        *d = 0;
    }
    false
}

/// A finite Laurent polynomial in `X` with coefficients in Z_m. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    m: u32,
    terms: BTreeMap<i64, u32>,
}

impl LaurentPoly {
    pub fn one(m: u32) -> Self {
        Self {
            m,
            terms: BTreeMap::from([(0, 1 % m)]),
        }
    }

    /// Builds from `(exponent, coefficient)` pairs, reducing mod `m` and summing duplicates.
    pub fn from_terms(m: u32, terms: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
        for (exp, c) in terms {
            let c = c.rem_euclid(m as i64) as u64;
            let e = acc.entry(exp).or_insert(0);
            *e = (*e + c) % m as u64;
        }
        let terms = acc
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(e, c)| (e, c as u32))
            .collect();
        Self { m, terms }
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn terms(&self) -> &BTreeMap<i64, u32> {
        &self.terms
    }

    pub fn coeff(&self, exp: i64) -> u32 {
        self.terms.get(&exp).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.m, "modulus mismatch");
        let m = self.m as u64;
        let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
        for (&ea, &ca) in &self.terms {
            for (&eb, &cb) in &other.terms {
                let e = acc.entry(ea + eb).or_insert(0);
                *e = (*e + ca as u64 * cb as u64) % m;
            }
        }
        let terms = acc
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(e, c)| (e, c as u32))
            .collect();
        Self { m: self.m, terms }
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Self {
        let mut result = Self::one(self.m);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }
}
