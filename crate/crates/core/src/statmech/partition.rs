use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// A partition function kept as `Z = exp(−shift/kT) · sum`, with `shift` the
/// lowest energy that entered the sum so that `sum ≥ 1`.
///
/// Products add shifts and multiply sums; ratios never exponentiate a
/// difference of large energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPartition {
    pub shift: f64,
    pub sum: f64,
    pub kt: f64,
}

impl LogPartition {
    /// `Z = 1`, the vacuum segment.
    pub fn unit(kt: f64) -> Self {
        Self { shift: 0.0, sum: 1.0, kt }
    }

    pub fn ln(&self) -> f64 {
        -self.shift / self.kt + self.sum.ln()
    }

    /// `Z` itself; may under- or overflow at extreme `E/kT`.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    pub fn times(&self, other: &Self) -> Self {
        Self { shift: self.shift + other.shift, sum: self.sum * other.sum, kt: self.kt }
    }

    /// `ln(self / other)`.
    pub fn log_ratio(&self, other: &Self) -> f64 {
        -(self.shift - other.shift) / self.kt + (self.sum / other.sum).ln()
    }

    /// `Σ Z_i` of partition functions at a common temperature.
    ///
    /// Terms are added in ascending order of value so the result does not
    /// depend on the order of `parts`.
    pub fn sum_of(parts: &[LogPartition]) -> Option<Self> {
        let first = parts.first()?;
        let kt = first.kt;
        let shift = parts.iter().map(|p| p.shift).fold(f64::INFINITY, f64::min);
        let mut terms: Vec<f64> = parts.iter().map(|p| p.sum * (-(p.shift - shift) / kt).exp()).collect();
        terms.sort_by(f64::total_cmp);
        let mut acc = CompensatedSum::new();
        for t in terms {
            acc.add(t);
        }
        Some(Self { shift, sum: acc.value(), kt })
    }
}

/// `Z = Σ_j exp(−E_j/kT)` for a list of level energies.
///
/// Levels are summed in ascending order, relative to the lowest one, with
/// compensated summation; the lowest energy is carried as the shift.
pub fn partition_function(energies: &[f64], kt: f64) -> Result<LogPartition> {
    if !(kt > 0.0) || !kt.is_finite() {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {kt}")));
    }
    if energies.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let shift = sorted[0];
    let mut acc = CompensatedSum::new();
    for e in sorted {
        acc.add((-(e - shift) / kt).exp());
    }
    Ok(LogPartition { shift, sum: acc.value(), kt })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_is_one() {
        let z = partition_function(&[0.0], 3.0).unwrap();
        assert_eq!(z.value(), 1.0);
    }

    #[test]
    fn two_levels() {
        let eps = 2.5;
        let z = partition_function(&[eps, 0.0], eps).unwrap();
        assert!((z.value() - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((z.value() - 1.36788).abs() < 1e-5);
        let frozen = partition_function(&[0.0, eps], eps / 100.0).unwrap();
        assert!((frozen.value() - 1.0).abs() <= (-100.0f64).exp() * 1.0001);
    }

    #[test]
    fn deep_ground_state_does_not_underflow() {
        let z = partition_function(&[1e4, 1e4 + 1e-3], 1e-3).unwrap();
        assert!((z.ln() - (-1e7 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-8);
        let w = partition_function(&[2e4], 1e-3).unwrap();
        assert!((z.log_ratio(&w) - 1e7 - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-8);
    }

    #[test]
    fn errors() {
        assert!(matches!(partition_function(&[], 1.0), Err(Error::InvalidArgument(_))));
        assert!(partition_function(&[0.0], 0.0).is_err());
    }

    #[test]
    fn sum_is_order_free() {
        let a = partition_function(&[0.1, 0.7], 0.3).unwrap();
        let b = partition_function(&[-0.4], 0.3).unwrap();
        let c = partition_function(&[5.0, 6.0, 9.0], 0.3).unwrap();
        let s1 = LogPartition::sum_of(&[a, b, c]).unwrap();
        let s2 = LogPartition::sum_of(&[c, a, b]).unwrap();
        assert_eq!(s1, s2);
        let direct = a.value() + b.value() + c.value();
        assert!((s1.value() - direct).abs() < 1e-14 * direct);
    }
}
