//! Stochastic matrices and the Markov measures they define on cylinder sets.

use serde::{Deserialize, Serialize};

use crate::ca::Word;
use crate::error::{Error, Result};

/// Row sums and probability vectors must equal 1 within this.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// `‖πP − π‖_∞` above this marks a measure as nonstationary.
pub const STATIONARITY_TOL: f64 = 1e-9;
pub const DEFAULT_POWER_TOL: f64 = 1e-12;
pub const DEFAULT_POWER_ITERS: usize = 1_000_000;

/// Logarithm base for reported entropies. Values are computed in nats and converted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    /// Base `m`, the alphabet size.
    Alphabet,
}

impl LogBase {
    pub fn from_nats(self, nats: f64, m: u32) -> f64 {
        match self {
            LogBase::Natural => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
            LogBase::Alphabet => nats / (m as f64).ln(),
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            LogBase::Natural => "nats",
            LogBase::Two => "bits",
            LogBase::Alphabet => "base-m",
        }
    }
}

/// `-p ln p` with `0 ln 0 = 0`.
pub(crate) fn neg_p_ln_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

fn check_distribution(v: &[f64], what: &str) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has invalid entry {x}"
        )));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!("{what} sums to {sum}")));
    }
    Ok(())
}

/// An `m × m` row-stochastic matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::InvalidMatrix(format!(
                "need at least 2 states, got {m}"
            )));
        }
        let mut entries = Vec::with_capacity(m * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            check_distribution(&row, &format!("row {i}")).map_err(|e| {
                Error::InvalidMatrix(e.to_string().replace("invalid probability vector: ", ""))
            })?;
            entries.extend(row);
        }
        Ok(Self { m, entries })
    }

    /// The matrix with every row equal to `p`.
    pub fn repeated_row(p: &[f64]) -> Result<Self> {
        Self::new(vec![p.to_vec(); p.len()])
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    /// Columns also sum to 1 within `tol`.
    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        (0..self.m).all(|j| ((0..self.m).map(|i| self.get(i, j)).sum::<f64>() - 1.0).abs() <= tol)
    }

    /// Number of closed communicating classes of the transition graph. The stationary
    /// vector is unique iff this is 1.
    pub fn closed_class_count(&self) -> usize {
        let m = self.m;
        let mut reach: Vec<Vec<bool>> = (0..m)
            .map(|i| (0..m).map(|j| i == j || self.get(i, j) > 0.0).collect())
            .collect();
        for k in 0..m {
            for i in 0..m {
                if reach[i][k] {
                    let via = reach[k].clone();
                    for (r, v) in reach[i].iter_mut().zip(via) {
                        *r |= v;
                    }
                }
            }
        }
        let closed: Vec<usize> = (0..m)
            .filter(|&i| (0..m).all(|j| !reach[i][j] || reach[j][i]))
            .collect();
        // count classes by their smallest member
        closed
            .iter()
            .filter(|&&i| {
                closed
                    .iter()
                    .all(|&j| j >= i || !(reach[i][j] && reach[j][i]))
            })
            .count()
    }
}

/// Output of [`stationary_vector`].
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    /// False when the chain has several closed classes, so other stationary vectors exist.
    pub unique: bool,
    pub iterations: usize,
}

/// Power iteration from the uniform vector until `‖πP − π‖_∞ <= tol`.
pub fn stationary_vector(p: &StochasticMatrix, tol: f64, max_iters: usize) -> Result<Stationary> {
    let m = p.size();
    let mut pi = vec![1.0 / m as f64; m];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iters {
        let next = p.left_mul(&pi);
        residual = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok(Stationary {
                pi,
                unique: p.closed_class_count() == 1,
                iterations: it,
            });
        }
        let total: f64 = next.iter().sum();
        pi = next.into_iter().map(|x| x / total).collect();
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual,
    })
}

/// JSON shape of a measure: `{"P": [[...], ...], "pi": [...]}` with `pi` optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

/// The Markov measure `μ_{πP}`: `μ([i_0..i_k]) = π_{i_0} p_{i_0 i_1} ⋯ p_{i_{k-1} i_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    p: StochasticMatrix,
    pi: Vec<f64>,
    stationary: bool,
    unique: bool,
}

impl MarkovMeasure {
    /// Pairs `P` with `pi`, or with its stationary vector when `pi` is `None`. A supplied `pi`
    /// that is not stationary is accepted and flagged via [`MarkovMeasure::is_stationary`].
    pub fn new(p: StochasticMatrix, pi: Option<Vec<f64>>) -> Result<Self> {
        match pi {
            None => {
                let st = stationary_vector(&p, DEFAULT_POWER_TOL, DEFAULT_POWER_ITERS)?;
                Ok(Self {
                    p,
                    pi: st.pi,
                    stationary: true,
                    unique: st.unique,
                })
            }
            Some(pi) => {
                if pi.len() != p.size() {
                    return Err(Error::InvalidDistribution(format!(
                        "pi has {} entries, matrix has {} states",
                        pi.len(),
                        p.size()
                    )));
                }
                check_distribution(&pi, "pi")?;
                let residual = p
                    .left_mul(&pi)
                    .iter()
                    .zip(&pi)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let unique = p.closed_class_count() == 1;
                Ok(Self {
                    p,
                    pi,
                    stationary: residual <= STATIONARITY_TOL,
                    unique,
                })
            }
        }
    }

    pub fn from_spec(spec: MeasureSpec) -> Result<Self> {
        Self::new(StochasticMatrix::new(spec.p)?, spec.pi)
    }

    /// i.i.d. measure: every row of `P` is `p` and `π = p`.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        check_distribution(p, "p")?;
        let matrix = StochasticMatrix::repeated_row(p)?;
        let unique = matrix.closed_class_count() == 1;
        Ok(Self {
            p: matrix,
            pi: p.to_vec(),
            stationary: true,
            unique,
        })
    }

    /// Uniform Bernoulli measure on `Z_m`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::bernoulli(&vec![1.0 / m as f64; m])
    }

    pub fn matrix(&self) -> &StochasticMatrix {
        &self.p
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn alphabet_size(&self) -> usize {
        self.p.size()
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn has_unique_stationary(&self) -> bool {
        self.unique
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.p.is_doubly_stochastic(tol)
    }

    /// Measure of the cylinder with the given symbols. Position is irrelevant; the empty
    /// cylinder is the whole space.
    ///
    /// # Panics
    /// If a symbol is outside the alphabet.
    pub fn cylinder(&self, symbols: &[u32]) -> f64 {
        let Some((&first, _)) = symbols.split_first() else {
            return 1.0;
        };
        let mut prob = self.pi[first as usize];
        for pair in symbols.windows(2) {
            if prob == 0.0 {
                break;
            }
            prob *= self.p.get(pair[0] as usize, pair[1] as usize);
        }
        prob
    }

    pub fn cylinder_measure(&self, w: &Word) -> f64 {
        self.cylinder(&w.symbols)
    }

    /// `-Σ π_i ln π_i`, the entropy of the one-symbol partition.
    pub fn symbol_entropy(&self) -> f64 {
        self.pi.iter().map(|&p| neg_p_ln_p(p)).sum()
    }

    /// `-Σ_{i,j} π_i p_ij log p_ij` in the requested base.
    pub fn entropy_rate(&self, base: LogBase) -> f64 {
        let nats: f64 = (0..self.p.size())
            .map(|i| self.pi[i] * self.p.row(i).iter().map(|&p| neg_p_ln_p(p)).sum::<f64>())
            .sum();
        base.from_nats(nats, self.p.size() as u32)
    }
}
