//! The block map of a linear local rule on finite words.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::entropy::PartitionSpec;
use crate::error::{Error, Result};
use crate::rule::{odometer, LocalRule};

/// A finite block of symbols starting at coordinate `start`.
///
/// Also read as the cylinder set of configurations agreeing with `symbols` on
/// `[start, start + len - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub start: i64,
    pub symbols: Vec<u32>,
}

impl Word {
    pub fn new(start: i64, symbols: Vec<u32>) -> Self {
        Self { start, symbols }
    }

    pub fn zeros(start: i64, len: usize) -> Self {
        Self {
            start,
            symbols: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Last covered coordinate; `start - 1` for the empty word.
    pub fn end(&self) -> i64 {
        self.start + self.symbols.len() as i64 - 1
    }

    pub fn get(&self, coord: i64) -> Option<u32> {
        let idx = coord - self.start;
        if idx < 0 {
            return None;
        }
        self.symbols.get(idx as usize).copied()
    }

    /// The sub-word on `[a, b]`, if covered.
    pub fn restrict(&self, a: i64, b: i64) -> Option<Word> {
        if a < self.start || b > self.end() || b < a {
            return None;
        }
        let lo = (a - self.start) as usize;
        let hi = (b - self.start) as usize;
        Some(Word::new(a, self.symbols[lo..=hi].to_vec()))
    }

    pub fn check_alphabet(&self, m: u32) -> Result<()> {
        match self.symbols.iter().find(|&&s| s >= m) {
            Some(&symbol) => Err(Error::InvalidSymbol { symbol, m }),
            None => Ok(()),
        }
    }

    /// Pointwise sum mod `m` of two words on the same support.
    pub fn add(&self, other: &Word, m: u32) -> Word {
        assert_eq!(self.start, other.start);
        assert_eq!(self.len(), other.len());
        let symbols = self
            .symbols
            .iter()
            .zip(&other.symbols)
            .map(|(&a, &b)| ((a as u64 + b as u64) % m as u64) as u32)
            .collect();
        Word::new(self.start, symbols)
    }

    /// The symbols as a base-`m` integer, most significant first, if it fits in 128 bits.
    pub fn pack(&self, m: u32) -> Option<u128> {
        pack_digits(&self.symbols, m)
    }

    /// Symbols as a digit string; comma separated when `m > 10`.
    pub fn digits(&self, m: u32) -> String {
        if m <= 10 {
            self.symbols
                .iter()
                .map(|s| char::from(b'0' + *s as u8))
                .collect()
        } else {
            self.symbols
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.symbols.iter().max().map_or(2, |&s| s + 1);
        write!(
            f,
            "[{}..{}] {}",
            self.start,
            self.end(),
            self.digits(m.max(2))
        )
    }
}

/// Parses `digits@start`, e.g. `010@-1` or `3,11,0@0`. A missing `@start` means start 0.
impl FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (body, start) = match s.rsplit_once('@') {
            Some((b, st)) => {
                let start = st
                    .trim()
                    .parse::<i64>()
                    .map_err(|e| format!("bad start {st:?}: {e}"))?;
                (b.trim(), start)
            }
            None => (s.trim(), 0),
        };
        let symbols = if body.contains(',') {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|e| format!("bad symbol {t:?}: {e}"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?
        } else {
            body.chars()
                .map(|c| c.to_digit(10).ok_or_else(|| format!("bad symbol {c:?}")))
                .collect::<std::result::Result<Vec<_>, _>>()?
        };
        Ok(Word::new(start, symbols))
    }
}

/// Base-`m` packing of a digit string, most significant first. `None` on overflow.
pub fn pack_digits(digits: &[u32], m: u32) -> Option<u128> {
    digits.iter().try_fold(0u128, |acc, &d| {
        acc.checked_mul(m as u128)?.checked_add(d as u128)
    })
}

/// `(Tx)_n = Σ λ_i src[n + i]` for every `n` with a full neighborhood inside `src`.
pub(crate) fn apply_slice(rule: &LocalRule, src: &[u32], dst: &mut Vec<u32>) {
    let w = rule.width();
    dst.clear();
    if src.len() < w {
        return;
    }
    dst.extend(src.windows(w).map(|win| rule.eval(win)));
}

/// Applies the block map. The result starts at `w.start + l` and is `l + r` symbols shorter.
pub fn apply(rule: &LocalRule, w: &Word) -> Result<Word> {
    w.check_alphabet(rule.modulus())?;
    if w.len() < rule.width() {
        return Err(Error::WordTooShort {
            len: w.len(),
            needed: rule.width(),
        });
    }
    let mut out = Vec::with_capacity(w.len() + 1 - rule.width());
    apply_slice(rule, &w.symbols, &mut out);
    Ok(Word::new(w.start + rule.left_radius() as i64, out))
}

/// A finite space-time diagram: `rows[k]` is `T^k` applied to `rows[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTime {
    pub rows: Vec<Word>,
}

impl SpaceTime {
    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }
}

pub fn space_time(rule: &LocalRule, w: &Word, steps: usize) -> Result<SpaceTime> {
    w.check_alphabet(rule.modulus())?;
    let needed = steps * (rule.width() - 1) + 1;
    if w.len() < needed {
        return Err(Error::WordTooShort {
            len: w.len(),
            needed,
        });
    }
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(w.clone());
    for _ in 0..steps {
        let next = apply(rule, rows.last().unwrap())?;
        rows.push(next);
    }
    Ok(SpaceTime { rows })
}

fn pow_u128(m: u32, k: usize) -> u128 {
    (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX)
}

pub(crate) fn check_cap(m: u32, cells: usize, cap: u128) -> Result<u128> {
    let required = pow_u128(m, cells);
    if required > cap {
        return Err(Error::CapExceeded { required, cap });
    }
    Ok(required)
}

fn mod_inverse(a: u32, m: u32) -> Option<u64> {
    let eg = (a as i64).extended_gcd(&(m as i64));
    (eg.gcd == 1).then(|| eg.x.rem_euclid(m as i64) as u64)
}

/// All words `u` on `[c.start - l, c.end() + r]` with `apply(rule, u) = c`, in lexicographic order.
///
/// These are the cylinders whose disjoint union is `T^{-1}` of the cylinder `c`. When an end
/// coefficient is a unit, the `l + r` symbols at the opposite edge are chosen freely and the
/// rest are solved one at a time, so exactly `m^(l + r)` words are produced. Otherwise every
/// word on the window is tested.
pub fn preimage_cylinders(rule: &LocalRule, c: &Word, cap: u128) -> Result<Vec<Word>> {
    let m = rule.modulus();
    c.check_alphabet(m)?;
    let (l, r) = (rule.left_radius(), rule.right_radius());
    let span = l + r;
    let k = c.len();
    let len = k + span;
    let start = c.start - l as i64;
    let mm = m as u64;
    let coeff = |t: usize| rule.coeffs()[t] as u64;

    let class = rule.classify();
    let mut out = Vec::new();
    if class.is_right() || class.is_left() {
        check_cap(m, span, cap)?;
        let solve_right = class.is_right();
        let inv = if solve_right {
            mod_inverse(rule.coeffs()[span], m)
        } else {
            mod_inverse(rule.coeffs()[0], m)
        }
        .expect("unit end coefficient");
        let mut free = vec![0u32; span];
        let mut u = vec![0u32; len];
        loop {
            if solve_right {
                u[..span].copy_from_slice(&free);
                for j in 0..k {
                    let partial: u64 =
                        (0..span).fold(0, |acc, t| (acc + coeff(t) * u[j + t] as u64) % mm);
                    let rhs = (c.symbols[j] as u64 + mm - partial) % mm;
                    u[j + span] = (rhs * inv % mm) as u32;
                }
            } else {
                u[k..].copy_from_slice(&free);
                for j in (0..k).rev() {
                    let partial: u64 =
                        (1..=span).fold(0, |acc, t| (acc + coeff(t) * u[j + t] as u64) % mm);
                    let rhs = (c.symbols[j] as u64 + mm - partial) % mm;
                    u[j] = (rhs * inv % mm) as u32;
                }
            }
            out.push(Word::new(start, u.clone()));
            if !odometer(&mut free, m) {
                break;
            }
        }
        out.sort();
    } else {
        check_cap(m, len, cap)?;
        let mut u = vec![0u32; len];
        let mut image = Vec::with_capacity(k);
        loop {
            apply_slice(rule, &u, &mut image);
            if image == c.symbols {
                out.push(Word::new(start, u.clone()));
            }
            if !odometer(&mut u, m) {
                break;
            }
        }
    }
    Ok(out)
}

/// Row `k` of the itinerary is the base-partition atom containing `T^k(w)`, for `k < steps`.
/// Atoms are labelled by the symbols on the base window (a single symbol for the zero-time
/// partition).
pub fn itinerary(
    rule: &LocalRule,
    w: &Word,
    base: &PartitionSpec,
    steps: usize,
) -> Result<Vec<Vec<u32>>> {
    w.check_alphabet(rule.modulus())?;
    if steps == 0 {
        return Ok(Vec::new());
    }
    let (a, b) = base.window_bounds();
    let (dep_a, dep_b) = base.dependency_window(rule, steps);
    let needed = (dep_b - dep_a + 1) as usize;
    if w.len() < needed {
        return Err(Error::WordTooShort {
            len: w.len(),
            needed,
        });
    }
    if w.start > dep_a || w.end() < dep_b {
        return Err(Error::WindowNotCovered {
            a: dep_a,
            b: dep_b,
            start: w.start,
            end: w.end(),
        });
    }
    let mut row = w.restrict(dep_a, dep_b).expect("covered");
    let mut labels = Vec::with_capacity(steps);
    for k in 0..steps {
        labels.push(row.restrict(a, b).expect("covered").symbols);
        if k + 1 < steps {
            row = apply(rule, &row)?;
        }
    }
    Ok(labels)
}
