//! Partition entropies, exact join entropies by itinerary grouping, and the closed-form
//! entropy of a bipermutative linear cellular automaton under a Markov measure.
//!
//! The join `∨_{k<n} T^{-k} α` of a cylinder partition `α` on `[a, b]` is determined by the
//! coordinates `[a - (n-1)l, b + (n-1)r]` (the dependency window). [`join_entropy`] enumerates
//! every word on that window, computes its itinerary through `α`, and sums cylinder measures
//! per itinerary class. The result is exact up to floating-point rounding.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use rayon::prelude::*;

use crate::ca::{apply_slice, check_cap, pack_digits, preimage_cylinders, Word};
use crate::error::{Error, Result};
use crate::measure::{neg_p_ln_p, LogBase, MarkovMeasure};
use crate::rule::{odometer, LocalRule};

/// Words per enumeration block. Blocks are the unit of parallel work and are merged in
/// index order, so results do not depend on the thread count.
const BLOCK: u128 = 1 << 12;

/// Base partition for entropy joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionSpec {
    /// `{x : x_0 = i}` for each symbol `i`.
    ZeroTime,
    /// Cylinders on coordinates `[a, b]`.
    Window { a: i64, b: i64 },
}

impl PartitionSpec {
    pub fn window(a: i64, b: i64) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidWindow { a, b });
        }
        Ok(Self::Window { a, b })
    }

    /// `Window(-l, r - 1)`, whose joins are exactly the cylinder partitions on
    /// `[-nl, nr - 1]`. Falls back to the zero-time partition when `l + r = 0`.
    pub fn default_for(rule: &LocalRule) -> Self {
        let (l, r) = (rule.left_radius() as i64, rule.right_radius() as i64);
        if l + r == 0 {
            Self::ZeroTime
        } else {
            Self::Window { a: -l, b: r - 1 }
        }
    }

    /// Coordinates the partition reads.
    pub fn window_bounds(&self) -> (i64, i64) {
        match *self {
            Self::ZeroTime => (0, 0),
            Self::Window { a, b } => (a, b),
        }
    }

    pub fn width(&self) -> usize {
        let (a, b) = self.window_bounds();
        (b - a + 1) as usize
    }

    /// Coordinates that determine the atom of `∨_{k<n} T^{-k}` of this partition.
    pub fn dependency_window(&self, rule: &LocalRule, n: usize) -> (i64, i64) {
        let (a, b) = self.window_bounds();
        let steps = n.saturating_sub(1) as i64;
        (
            a - steps * rule.left_radius() as i64,
            b + steps * rule.right_radius() as i64,
        )
    }

    /// The atoms as cylinders, in lexicographic order.
    pub fn atoms(&self, m: u32) -> Vec<Word> {
        let (a, _) = self.window_bounds();
        let mut digits = vec![0u32; self.width()];
        let mut out = Vec::new();
        loop {
            out.push(Word::new(a, digits.clone()));
            if !odometer(&mut digits, m) {
                return out;
            }
        }
    }
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroTime => f.write_str("zero-time"),
            Self::Window { a, b } => write!(f, "window:{a},{b}"),
        }
    }
}

/// Parses `zero-time` or `window:a,b`.
impl FromStr for PartitionSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "zero-time" {
            return Ok(Self::ZeroTime);
        }
        let body = s
            .strip_prefix("window:")
            .ok_or_else(|| format!("unknown partition {s:?}; expected zero-time or window:a,b"))?;
        let (a, b) = body
            .split_once(',')
            .ok_or_else(|| format!("window needs two bounds: {s:?}"))?;
        let a = a
            .trim()
            .parse::<i64>()
            .map_err(|e| format!("bad bound {a:?}: {e}"))?;
        let b = b
            .trim()
            .parse::<i64>()
            .map_err(|e| format!("bad bound {b:?}: {e}"))?;
        Self::window(a, b).map_err(|e| e.to_string())
    }
}

/// `-Σ μ(A) ln μ(A)` over atoms given as disjoint unions of cylinders.
pub fn partition_entropy(mu: &MarkovMeasure, atoms: &[Vec<Word>]) -> Result<f64> {
    let measures: Vec<f64> = atoms
        .iter()
        .map(|atom| atom.iter().map(|w| mu.cylinder_measure(w)).sum())
        .collect();
    let total: f64 = measures.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotAPartition(total));
    }
    Ok(measures.into_iter().map(neg_p_ln_p).sum())
}

fn check_alphabet(rule: &LocalRule, mu: &MarkovMeasure) -> Result<()> {
    if mu.alphabet_size() as u32 != rule.modulus() {
        return Err(Error::ModulusMismatch(
            rule.modulus(),
            mu.alphabet_size() as u32,
        ));
    }
    Ok(())
}

/// Itinerary classes of every word on the dependency window, sorted by itinerary.
struct ClassTable {
    /// Total measure per class (zero when no measure was supplied).
    measures: Vec<f64>,
    words: u128,
    window: (i64, i64),
}

fn group_itineraries(
    rule: &LocalRule,
    base: &PartitionSpec,
    n: usize,
    cap: u128,
    mu: Option<&MarkovMeasure>,
) -> Result<ClassTable> {
    assert!(n >= 1, "join depth must be at least 1");
    let m = rule.modulus();
    let window = base.dependency_window(rule, n);
    let cells = (window.1 - window.0 + 1) as usize;
    let words = check_cap(m, cells, cap)?;
    let key_len = n * base.width();
    let packable = (m as u128).checked_pow(key_len as u32).is_some();
    let measures = if packable {
        group_with(rule, base, n, window, words, mu, |it| {
            pack_digits(it, m).expect("fits")
        })
    } else {
        group_with(rule, base, n, window, words, mu, <[u32]>::to_vec)
    };
    Ok(ClassTable {
        measures,
        words,
        window,
    })
}

fn group_with<K, F>(
    rule: &LocalRule,
    base: &PartitionSpec,
    n: usize,
    window: (i64, i64),
    words: u128,
    mu: Option<&MarkovMeasure>,
    key: F,
) -> Vec<f64>
where
    K: Hash + Eq + Ord + Send,
    F: Fn(&[u32]) -> K + Sync,
{
    let m = rule.modulus();
    let cells = (window.1 - window.0 + 1) as usize;
    let (a, _) = base.window_bounds();
    let bw = base.width();
    let l = rule.left_radius() as i64;
    let blocks = words.div_ceil(BLOCK);

    let partials: Vec<HashMap<K, f64>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let first = blk * BLOCK;
            let count = BLOCK.min(words - first);
            let mut digits = vec![0u32; cells];
            let mut rest = first;
            for d in digits.iter_mut().rev() {
                *d = (rest % m as u128) as u32;
                rest /= m as u128;
            }
            let mut cur = Vec::with_capacity(cells);
            let mut next = Vec::with_capacity(cells);
            let mut itin = Vec::with_capacity(n * bw);
            let mut map = HashMap::new();
            for _ in 0..count {
                itin.clear();
                cur.clear();
                cur.extend_from_slice(&digits);
                for k in 0..n {
                    let row_start = window.0 + k as i64 * l;
                    let off = (a - row_start) as usize;
                    itin.extend_from_slice(&cur[off..off + bw]);
                    if k + 1 < n {
                        apply_slice(rule, &cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                    }
                }
                let weight = mu.map_or(0.0, |mu| mu.cylinder(&digits));
                *map.entry(key(&itin)).or_insert(0.0) += weight;
                odometer(&mut digits, m);
            }
            map
        })
        .collect();

    let mut merged: HashMap<K, f64> = HashMap::new();
    for part in partials {
        // per-key sums are accumulated in block order; iteration order within a block
        // does not touch any single key's sum
        for (k, v) in part {
            *merged.entry(k).or_insert(0.0) += v;
        }
    }
    let mut classes: Vec<(K, f64)> = merged.into_iter().collect();
    classes.sort_unstable_by(|x, y| x.0.cmp(&y.0));
    classes.into_iter().map(|(_, v)| v).collect()
}

/// Exact entropy of `∨_{k<n} T^{-k} α`.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinEntropy {
    /// In nats.
    pub entropy: f64,
    /// Itinerary classes with positive measure.
    pub atom_count: usize,
    pub words: u128,
    pub window: (i64, i64),
}

pub fn join_entropy(
    rule: &LocalRule,
    mu: &MarkovMeasure,
    base: &PartitionSpec,
    n: usize,
    cap: u128,
) -> Result<JoinEntropy> {
    check_alphabet(rule, mu)?;
    let table = group_itineraries(rule, base, n, cap, Some(mu))?;
    let positive = table.measures.iter().filter(|&&p| p > 0.0);
    Ok(JoinEntropy {
        entropy: positive.clone().map(|&p| neg_p_ln_p(p)).sum(),
        atom_count: positive.count(),
        words: table.words,
        window: table.window,
    })
}

/// Join entropies for `n = 1..=n_max` with rate estimators. Entropies are in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySequence {
    pub n_max: usize,
    /// `h[n-1]` is the entropy of the `n`-fold join.
    pub h: Vec<f64>,
    /// `h[n] - h[n-1]`; `None` for `n = 1`.
    pub diffs: Vec<Option<f64>>,
    /// `h[n] / n`.
    pub ratios: Vec<f64>,
    pub atom_counts: Vec<usize>,
    /// The enumeration cap stopped the sequence before `n_max`.
    pub truncated: bool,
    pub stationary: bool,
}

impl EntropySequence {
    /// Depths actually computed.
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn last_diff(&self) -> Option<f64> {
        self.diffs.last().copied().flatten()
    }

    /// All entropy values rescaled to `base`.
    pub fn in_base(&self, base: LogBase, m: u32) -> Self {
        let conv = |x: f64| base.from_nats(x, m);
        Self {
            h: self.h.iter().map(|&x| conv(x)).collect(),
            diffs: self.diffs.iter().map(|d| d.map(conv)).collect(),
            ratios: self.ratios.iter().map(|&x| conv(x)).collect(),
            ..self.clone()
        }
    }
}

pub fn entropy_sequence(
    rule: &LocalRule,
    mu: &MarkovMeasure,
    base: &PartitionSpec,
    n_max: usize,
    cap: u128,
) -> Result<EntropySequence> {
    check_alphabet(rule, mu)?;
    let mut seq = EntropySequence {
        n_max,
        h: Vec::new(),
        diffs: Vec::new(),
        ratios: Vec::new(),
        atom_counts: Vec::new(),
        truncated: false,
        stationary: mu.is_stationary(),
    };
    for n in 1..=n_max {
        let join = match join_entropy(rule, mu, base, n, cap) {
            Ok(j) => j,
            Err(e) if e.is_cap() => {
                seq.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        seq.diffs.push(seq.h.last().map(|prev| join.entropy - prev));
        seq.ratios.push(join.entropy / n as f64);
        seq.h.push(join.entropy);
        seq.atom_counts.push(join.atom_count);
    }
    Ok(seq)
}

fn require_bipermutative(rule: &LocalRule) -> Result<()> {
    let class = rule.classify();
    if !(class.is_left() && class.is_right()) {
        return Err(Error::NotBipermutative {
            left: class.is_left(),
            right: class.is_right(),
        });
    }
    Ok(())
}

/// `(l + r) · (-Σ π_i p_ij log p_ij)` for a bipermutative rule.
pub fn closed_form_entropy(rule: &LocalRule, mu: &MarkovMeasure, base: LogBase) -> Result<f64> {
    require_bipermutative(rule)?;
    check_alphabet(rule, mu)?;
    let span = (rule.left_radius() + rule.right_radius()) as f64;
    Ok(span * mu.entropy_rate(base))
}

/// `(l + r) log m`, the closed form under the uniform measure.
pub fn uniform_closed_form(rule: &LocalRule, base: LogBase) -> Result<f64> {
    require_bipermutative(rule)?;
    let m = rule.modulus();
    let span = (rule.left_radius() + rule.right_radius()) as f64;
    Ok(base.from_nats(span * (m as f64).ln(), m))
}

/// Result of comparing `μ(T^{-1}C)` with `μ(C)` over all short cylinders.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub max_deviation: f64,
    /// Cylinder attaining `max_deviation` (first in enumeration order).
    pub worst: Option<Word>,
    pub cylinders_checked: usize,
    pub preserved: bool,
    pub stationary: bool,
}

pub fn check_invariance(
    rule: &LocalRule,
    mu: &MarkovMeasure,
    max_len: usize,
    tol: f64,
    cap: u128,
) -> Result<InvarianceReport> {
    check_alphabet(rule, mu)?;
    let m = rule.modulus();
    let mut max_deviation = 0.0f64;
    let mut worst = None;
    let mut checked = 0;
    for len in 1..=max_len {
        for c in (PartitionSpec::Window {
            a: 0,
            b: len as i64 - 1,
        })
        .atoms(m)
        {
            let pulled: f64 = preimage_cylinders(rule, &c, cap)?
                .iter()
                .map(|u| mu.cylinder_measure(u))
                .sum();
            let dev = (pulled - mu.cylinder_measure(&c)).abs();
            if dev > max_deviation {
                max_deviation = dev;
                worst = Some(c);
            }
            checked += 1;
        }
    }
    Ok(InvarianceReport {
        max_deviation,
        worst,
        cylinders_checked: checked,
        preserved: max_deviation <= tol,
        stationary: mu.is_stationary(),
    })
}

/// Whether the `n`-fold join separates every word on its dependency window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorProbe {
    pub injective: bool,
    pub classes: usize,
    pub words: u128,
    pub window: (i64, i64),
}

pub fn generator_probe(
    rule: &LocalRule,
    base: &PartitionSpec,
    n: usize,
    cap: u128,
) -> Result<GeneratorProbe> {
    let table = group_itineraries(rule, base, n, cap, None)?;
    let classes = table.measures.len();
    Ok(GeneratorProbe {
        injective: classes as u128 == table.words,
        classes,
        words: table.words,
        window: table.window,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::f64::consts::LN_2;

    use super::*;
    use crate::ca::itinerary;
    use crate::measure::StochasticMatrix;

    const CAP: u128 = 1 << 24;

    fn two_state() -> MarkovMeasure {
        let p = StochasticMatrix::new(vec![vec![0.9, 0.1], vec![0.8, 0.2]]).unwrap();
        MarkovMeasure::new(p, None).unwrap()
    }

    /// Slow oracle: build every word as a `Word`, compute its itinerary with
    /// `ca::itinerary`, group in an ordered map.
    fn oracle_join(
        rule: &LocalRule,
        mu: &MarkovMeasure,
        base: &PartitionSpec,
        n: usize,
    ) -> (f64, usize) {
        let (lo, hi) = base.dependency_window(rule, n);
        let words = PartitionSpec::Window { a: lo, b: hi }.atoms(rule.modulus());
        let mut classes: BTreeMap<Vec<Vec<u32>>, f64> = BTreeMap::new();
        for w in &words {
            let it = itinerary(rule, w, base, n).unwrap();
            *classes.entry(it).or_default() += mu.cylinder_measure(w);
        }
        let pos: Vec<f64> = classes.into_values().filter(|&p| p > 0.0).collect();
        (pos.iter().map(|&p| -p * p.ln()).sum(), pos.len())
    }

    #[test]
    fn partition_parsing() {
        assert_eq!(
            "zero-time".parse::<PartitionSpec>().unwrap(),
            PartitionSpec::ZeroTime
        );
        assert_eq!(
            "window:-1,0".parse::<PartitionSpec>().unwrap(),
            PartitionSpec::Window { a: -1, b: 0 }
        );
        assert!("window:1,0".parse::<PartitionSpec>().is_err());
        assert!("cells".parse::<PartitionSpec>().is_err());
        assert_eq!(
            PartitionSpec::Window { a: -2, b: 3 }.to_string(),
            "window:-2,3"
        );
        assert_eq!(
            PartitionSpec::default_for(&LocalRule::rule90()),
            PartitionSpec::Window { a: -1, b: 0 }
        );
        assert_eq!(
            PartitionSpec::default_for(&LocalRule::identity(3).unwrap()),
            PartitionSpec::ZeroTime
        );
    }

    #[test]
    fn partition_entropy_examples() {
        let atoms = |m| -> Vec<Vec<Word>> {
            PartitionSpec::ZeroTime
                .atoms(m)
                .into_iter()
                .map(|w| vec![w])
                .collect()
        };
        for m in 2..=5 {
            let h =
                partition_entropy(&MarkovMeasure::uniform(m).unwrap(), &atoms(m as u32)).unwrap();
            assert!((h - (m as f64).ln()).abs() < 1e-12);
        }
        let mu = MarkovMeasure::bernoulli(&[0.7, 0.3]).unwrap();
        let h = partition_entropy(&mu, &atoms(2)).unwrap();
        assert!((h - 0.610_864_302_054_893_5).abs() < 1e-12);
        let whole = vec![PartitionSpec::ZeroTime.atoms(2)];
        assert_eq!(partition_entropy(&mu, &whole).unwrap(), 0.0);
        let half = vec![vec![Word::new(0, vec![0])]];
        assert!(matches!(
            partition_entropy(&mu, &half),
            Err(Error::NotAPartition(_))
        ));
    }

    #[test]
    fn join_entropy_examples() {
        let r90 = LocalRule::rule90();
        let uniform = MarkovMeasure::uniform(2).unwrap();
        let j = join_entropy(
            &r90,
            &uniform,
            &PartitionSpec::Window { a: -1, b: 0 },
            3,
            CAP,
        )
        .unwrap();
        assert!((j.entropy - 6.0 * LN_2).abs() < 1e-12);
        assert_eq!(j.atom_count, 64);
        assert_eq!(j.window, (-3, 2));
        let j = join_entropy(&r90, &uniform, &PartitionSpec::ZeroTime, 2, CAP).unwrap();
        assert!((j.entropy - 2.0 * LN_2).abs() < 1e-12);
        assert_eq!(j.atom_count, 4);
        let mu = two_state();
        let j = join_entropy(&r90, &mu, &PartitionSpec::ZeroTime, 1, CAP).unwrap();
        assert_eq!(j.entropy, mu.symbol_entropy());
    }

    #[test]
    fn join_entropy_matches_slow_oracle() {
        let rules = [
            LocalRule::rule90(),
            LocalRule::new(3, 1, 1, &[1, 2, 2]).unwrap(),
            LocalRule::new(4, 1, 1, &[1, 1, 2]).unwrap(),
            LocalRule::new(3, 0, 2, &[2, 0, 1]).unwrap(),
        ];
        for rule in &rules {
            let m = rule.modulus() as usize;
            let mut rows = vec![vec![0.0; m]; m];
            for (i, row) in rows.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = (1 + i + 2 * j) as f64;
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= s);
            }
            let mu = MarkovMeasure::new(StochasticMatrix::new(rows).unwrap(), None).unwrap();
            for base in [
                PartitionSpec::ZeroTime,
                PartitionSpec::Window { a: -1, b: 0 },
            ] {
                for n in 1..=3 {
                    let j = join_entropy(rule, &mu, &base, n, CAP).unwrap();
                    let (h, count) = oracle_join(rule, &mu, &base, n);
                    assert!((j.entropy - h).abs() < 1e-12, "{rule} {base} n={n}");
                    assert_eq!(j.atom_count, count);
                }
            }
        }
    }

    #[test]
    fn unpackable_keys_take_the_slow_path() {
        // 3 * 81 digits base 2 overflow a u128 key
        let r = LocalRule::new(2, 0, 0, &[1]).unwrap();
        let base = PartitionSpec::Window { a: 0, b: 80 };
        assert!(matches!(
            join_entropy(&r, &MarkovMeasure::uniform(2).unwrap(), &base, 3, CAP),
            Err(Error::CapExceeded { .. })
        ));
        let base = PartitionSpec::Window { a: 0, b: 15 };
        let j = join_entropy(&r, &MarkovMeasure::uniform(2).unwrap(), &base, 9, CAP).unwrap();
        assert_eq!(j.atom_count, 1 << 16);
        assert!((j.entropy - 16.0 * LN_2).abs() < 1e-9);
    }

    #[test]
    fn sequence_examples() {
        let r90 = LocalRule::rule90();
        let uniform = MarkovMeasure::uniform(2).unwrap();
        let seq = entropy_sequence(
            &r90,
            &uniform,
            &PartitionSpec::Window { a: -1, b: 0 },
            4,
            CAP,
        )
        .unwrap();
        assert_eq!(seq.diffs[0], None);
        for d in &seq.diffs[1..] {
            assert!((d.unwrap() - 2.0 * LN_2).abs() < 1e-12);
        }
        assert!(!seq.truncated);
        let one = entropy_sequence(&r90, &uniform, &PartitionSpec::ZeroTime, 1, CAP).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one.h[0] - LN_2).abs() < 1e-15);
    }

    #[test]
    fn sequence_truncates_at_cap() {
        let r90 = LocalRule::rule90();
        let uniform = MarkovMeasure::uniform(2).unwrap();
        // window sizes 2, 4, 6, ...; cap 2^5 allows n = 1, 2
        let seq = entropy_sequence(
            &r90,
            &uniform,
            &PartitionSpec::Window { a: -1, b: 0 },
            5,
            32,
        )
        .unwrap();
        assert!(seq.truncated);
        assert_eq!(seq.len(), 2);
        assert!(matches!(
            join_entropy(
                &r90,
                &uniform,
                &PartitionSpec::Window { a: -1, b: 0 },
                3,
                32
            ),
            Err(Error::CapExceeded {
                required: 64,
                cap: 32
            })
        ));
    }

    #[test]
    fn bipermutative_window_sequence_is_exact() {
        let mut rules = vec![LocalRule::rule90()];
        for mid in 0..3 {
            for (a, c) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                rules.push(LocalRule::new(3, 1, 1, &[a, mid, c]).unwrap());
            }
        }
        for rule in rules {
            let m = rule.modulus() as usize;
            let mut rows = vec![vec![0.0; m]; m];
            for (i, row) in rows.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = ((i * 7 + j * 3) % 5 + 1) as f64;
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= s);
            }
            for mu in [
                MarkovMeasure::new(StochasticMatrix::new(rows).unwrap(), None).unwrap(),
                MarkovMeasure::uniform(m).unwrap(),
            ] {
                let base = PartitionSpec::default_for(&rule);
                let seq = entropy_sequence(&rule, &mu, &base, 4, CAP).unwrap();
                let rate = mu.entropy_rate(LogBase::Natural);
                let closed = closed_form_entropy(&rule, &mu, LogBase::Natural).unwrap();
                for n in 1..=4 {
                    assert_eq!(seq.atom_counts[n - 1], m.pow(2 * n as u32));
                    let expected = mu.symbol_entropy() + (2 * n - 1) as f64 * rate;
                    assert!((seq.h[n - 1] - expected).abs() < 1e-9, "{rule} n={n}");
                    if n >= 2 {
                        assert!((seq.diffs[n - 1].unwrap() - closed).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn sequence_monotone_and_bounded() {
        let rule = LocalRule::new(4, 1, 1, &[2, 1, 2]).unwrap();
        let p = StochasticMatrix::new(vec![
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.7, 0.1, 0.1, 0.1],
        ])
        .unwrap();
        let mu = MarkovMeasure::new(p, None).unwrap();
        for base in [
            PartitionSpec::ZeroTime,
            PartitionSpec::Window { a: -1, b: 0 },
        ] {
            let seq = entropy_sequence(&rule, &mu, &base, 4, CAP).unwrap();
            let atoms = 4f64.powi(base.width() as i32);
            for n in 0..seq.len() {
                assert!(seq.h[n] <= (seq.atom_counts[n] as f64).ln() + 1e-12);
                assert!(seq.h[n] <= (n + 1) as f64 * atoms.ln() + 1e-12);
                if n > 0 {
                    assert!(seq.h[n] >= seq.h[n - 1] - 1e-12);
                    assert!(seq.atom_counts[n] >= seq.atom_counts[n - 1]);
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let r90 = LocalRule::rule90();
        let uniform = MarkovMeasure::uniform(2).unwrap();
        assert!(
            (closed_form_entropy(&r90, &uniform, LogBase::Natural).unwrap() - 2.0 * LN_2).abs()
                < 1e-15
        );
        let mu = MarkovMeasure::new(
            StochasticMatrix::new(vec![vec![0.9, 0.1], vec![0.8, 0.2]]).unwrap(),
            Some(vec![8.0 / 9.0, 1.0 / 9.0]),
        )
        .unwrap();
        let h = closed_form_entropy(&r90, &mu, LogBase::Natural).unwrap();
        assert!((h - 0.689_125_824_593_283).abs() < 1e-12);
        let bad = LocalRule::new(4, 1, 1, &[1, 1, 2]).unwrap();
        assert_eq!(
            closed_form_entropy(&bad, &MarkovMeasure::uniform(4).unwrap(), LogBase::Natural),
            Err(Error::NotBipermutative {
                left: true,
                right: false
            })
        );
        assert!(uniform_closed_form(&bad, LogBase::Natural).is_err());
    }

    #[test]
    fn uniform_closed_form_examples() {
        assert_eq!(
            uniform_closed_form(&LocalRule::rule90(), LogBase::Natural).unwrap(),
            2.0 * LN_2
        );
        let r = LocalRule::new(3, 0, 1, &[1, 1]).unwrap();
        let h = uniform_closed_form(&r, LogBase::Natural).unwrap();
        assert_eq!(h, 3f64.ln());
        let seq = entropy_sequence(
            &r,
            &MarkovMeasure::uniform(3).unwrap(),
            &PartitionSpec::default_for(&r),
            4,
            CAP,
        )
        .unwrap();
        assert!((seq.diffs[3].unwrap() - h).abs() < 1e-9);
        let wide = LocalRule::new(2, 2, 2, &[1, 0, 1, 1, 1]).unwrap();
        let h = uniform_closed_form(&wide, LogBase::Natural).unwrap();
        assert_eq!(h, 4.0 * LN_2);
        let seq = entropy_sequence(
            &wide,
            &MarkovMeasure::uniform(2).unwrap(),
            &PartitionSpec::default_for(&wide),
            3,
            CAP,
        )
        .unwrap();
        assert!((seq.diffs[1].unwrap() - h).abs() < 1e-9);
        assert!((seq.diffs[2].unwrap() - h).abs() < 1e-9);
    }

    #[test]
    fn uniform_closed_form_matches_markov_route() {
        for m in 2..=7u64 {
            for (l, r) in [(1, 1), (0, 1), (2, 1)] {
                let mut c = vec![0i64; l + r + 1];
                c[0] = 1;
                c[l + r] = 1;
                let rule = LocalRule::new(m, l, r, &c).unwrap();
                let mu = MarkovMeasure::uniform(m as usize).unwrap();
                let a = closed_form_entropy(&rule, &mu, LogBase::Natural).unwrap();
                let b = uniform_closed_form(&rule, LogBase::Natural).unwrap();
                // equal up to rounding of the m^2-term sum
                assert!((a - b).abs() <= 4.0 * f64::EPSILON * b, "m={m}: {a} vs {b}");
                if m.is_power_of_two() {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn base_conversion() {
        let r90 = LocalRule::rule90();
        let mu = two_state();
        let nats = closed_form_entropy(&r90, &mu, LogBase::Natural).unwrap();
        let bits = closed_form_entropy(&r90, &mu, LogBase::Two).unwrap();
        assert!((bits - nats / LN_2).abs() < 1e-12);
        assert!((uniform_closed_form(&r90, LogBase::Two).unwrap() - 2.0).abs() < 1e-12);
        let r3 = LocalRule::new(3, 1, 1, &[1, 0, 1]).unwrap();
        assert!((uniform_closed_form(&r3, LogBase::Alphabet).unwrap() - 2.0).abs() < 1e-12);
        let seq = entropy_sequence(&r90, &mu, &PartitionSpec::ZeroTime, 3, CAP).unwrap();
        let in_bits = seq.in_base(LogBase::Two, 2);
        for (b, n) in in_bits.h.iter().zip(&seq.h) {
            assert!((b - n / LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn invariance_examples() {
        let r90 = LocalRule::rule90();
        let rep =
            check_invariance(&r90, &MarkovMeasure::uniform(2).unwrap(), 4, 1e-12, CAP).unwrap();
        assert!(rep.preserved);
        assert!(rep.max_deviation <= 1e-12);
        assert_eq!(rep.cylinders_checked, 2 + 4 + 8 + 16);
        let rep = check_invariance(&r90, &two_state(), 3, 1e-12, CAP).unwrap();
        assert!(!rep.preserved);
        assert!(rep.max_deviation > 1e-3);
        assert!(rep.worst.is_some());
        let id = LocalRule::identity(2).unwrap();
        let rep = check_invariance(&id, &two_state(), 4, 0.0, CAP).unwrap();
        assert!(rep.preserved);
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn uniform_measures_are_invariant() {
        // constant-row matrices: the uniform Bernoulli measure on Z_2 and Z_3
        let r3 = LocalRule::new(3, 1, 1, &[1, 0, 1]).unwrap();
        for (rule, m) in [(LocalRule::rule90(), 2), (r3, 3)] {
            let rep = check_invariance(&rule, &MarkovMeasure::uniform(m).unwrap(), 4, 1e-10, CAP)
                .unwrap();
            assert!(rep.preserved, "{rule}");
        }
    }

    #[test]
    fn probe_examples() {
        let r90 = LocalRule::rule90();
        let p = generator_probe(&r90, &PartitionSpec::Window { a: -1, b: 0 }, 3, CAP).unwrap();
        assert!(p.injective);
        assert_eq!((p.classes, p.words), (64, 64));
        let p = generator_probe(&r90, &PartitionSpec::ZeroTime, 3, CAP).unwrap();
        assert!(!p.injective);
        assert!(p.classes <= 8);
        assert_eq!(p.words, 32);
        let p = generator_probe(&r90, &PartitionSpec::Window { a: -1, b: 1 }, 1, CAP).unwrap();
        assert!(p.injective);
    }

    #[test]
    fn permutation_measure_has_no_entropy() {
        let perm = MarkovMeasure::new(
            StochasticMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            None,
        )
        .unwrap();
        let r90 = LocalRule::rule90();
        assert_eq!(
            closed_form_entropy(&r90, &perm, LogBase::Natural).unwrap(),
            0.0
        );
        let seq =
            entropy_sequence(&r90, &perm, &PartitionSpec::Window { a: -1, b: 0 }, 4, CAP).unwrap();
        assert!(seq.atom_counts.iter().all(|&c| c <= 2));
        assert!(seq.diffs[1..].iter().all(|d| d.unwrap().abs() < 1e-12));
    }
}
