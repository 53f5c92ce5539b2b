//! Quantum-number tuples and their enumeration below an energy ceiling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ordered Bethe quantum numbers `1 ≤ b₁ ≤ b₂ ≤ … ≤ b_n` of one segment state.
///
/// The empty tuple is the vacuum. Text form is `b1-b2-...` (empty string for
/// the vacuum).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct QuantumNumbers(Vec<u32>);

impl QuantumNumbers {
    pub fn new(b: Vec<u32>) -> Result<Self> {
        if b.first().is_some_and(|&b1| b1 < 1) {
            return Err(Error::InvalidArgument("quantum numbers start at 1".into()));
        }
        if b.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(format!(
                "quantum numbers must be non-decreasing: {b:?}"
            )));
        }
        Ok(Self(b))
    }

    pub fn vacuum() -> Self {
        Self(Vec::new())
    }

    /// The ground tuple `(1, 1, …, 1)`.
    pub fn ground(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum_of_squares(&self) -> u64 {
        self.0.iter().map(|&b| u64::from(b) * u64::from(b)).sum()
    }

    /// Energy at `g = 0` in a segment of length `ell`: `(π²/2ℓ²) Σ b²`.
    pub fn free_energy(&self, ell: f64) -> f64 {
        PI * PI / (2.0 * ell * ell) * self.sum_of_squares() as f64
    }

    /// Fermionic image `m_α = b_α + α − 1` (strictly increasing).
    pub fn fermionic(&self) -> Vec<u32> {
        self.0.iter().enumerate().map(|(i, &b)| b + i as u32).collect()
    }

    /// Inverse of [`fermionic`](Self::fermionic).
    pub fn from_fermionic(m: &[u32]) -> Result<Self> {
        if m.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "fermionic numbers must be strictly increasing: {m:?}"
            )));
        }
        Self::new(m.iter().enumerate().map(|(i, &x)| x - i as u32).collect())
    }

    /// Runs of equal quantum numbers, as `(start, len)` index ranges.
    pub fn groups(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.0.len() {
            if i == self.0.len() || self.0[i] != self.0[start] {
                out.push((start, i - start));
                start = i;
            }
        }
        out
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.windows(2).any(|w| w[0] == w[1])
    }
}

impl fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for QuantumNumbers {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::vacuum());
        }
        let b = s
            .split('-')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad tuple entry {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(b)
    }
}

/// Largest admissible `Σ b²` for ceiling `e_max` in a segment of length `ell`.
fn square_budget(e_max: f64, ell: f64) -> u64 {
    let budget = e_max * 2.0 * ell * ell / (PI * PI);
    if budget < 0.0 {
        return 0;
    }
    // absorb rounding in e_max = c·ε₁ style inputs
    (budget * (1.0 + 1e-12) + 1e-9).floor().min(u64::MAX as f64 / 2.0) as u64
}

fn check_args(e_max: f64, ell: f64) -> Result<()> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {ell}")));
    }
    if !(e_max > 0.0) {
        return Err(Error::InvalidArgument(format!("energy ceiling must be positive, got {e_max}")));
    }
    Ok(())
}

/// Every non-decreasing tuple of length `n` whose free energy is at most
/// `e_max`, sorted by free energy (ties lexicographic). `n = 0` yields the
/// vacuum alone.
pub fn enumerate_tuples(n: usize, e_max: f64, ell: f64) -> Result<Vec<QuantumNumbers>> {
    check_args(e_max, ell)?;
    let budget = square_budget(e_max, ell);
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    walk(n, 1, budget, &mut cur, &mut out);
    sort_by_energy(&mut out);
    Ok(out.into_iter().map(QuantumNumbers).collect())
}

fn sort_by_energy(v: &mut [Vec<u32>]) {
    v.sort_by(|a, b| {
        let sa: u64 = a.iter().map(|&x| u64::from(x).pow(2)).sum();
        let sb: u64 = b.iter().map(|&x| u64::from(x).pow(2)).sum();
        sa.cmp(&sb).then_with(|| a.cmp(b))
    });
}

fn walk(remaining: usize, lo: u32, budget: u64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if remaining == 0 {
        out.push(cur.clone());
        return;
    }
    let mut b = lo;
    loop {
        // cheapest completion: all remaining entries as small as allowed
        let b64 = u64::from(b);
        let min_rest = remaining as u64 * b64 * b64;
        if min_rest > budget {
            break;
        }
        cur.push(b);
        walk(remaining - 1, b, budget - b64 * b64, cur, out);
        cur.pop();
        b += 1;
    }
}
