use std::io::{self, Write};

use super::protocol::{Mode, Protocol};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::statmech::{LogPartition, ThermalContext};
use crate::units::{delta_eps, Coupling, EPS1};

/// `−Σ p_n ln p_n` in nats, with `0 ln 0 = 0`.
pub fn shannon_information(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    let mut acc = CompensatedSum::new();
    for &x in p {
        if x > 0.0 {
            acc.add(-x * x.ln());
        }
    }
    Ok(acc.value())
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Per-outcome summands `−kT p_n ln(p_n / p_n^rem)` of the cycle work.
pub fn work_terms(p_ins: &[f64], p_rem: &[f64], kt: f64) -> Result<Vec<f64>> {
    if p_ins.len() != p_rem.len() {
        return Err(Error::InvalidArgument(format!(
            "{} insertion probabilities but {} removal probabilities",
            p_ins.len(),
            p_rem.len()
        )));
    }
    Ok(p_ins
        .iter()
        .zip(p_rem)
        .map(|(&p, &q)| if p > 0.0 { -kt * p * (p / q).ln() } else { 0.0 })
        .collect())
}

/// Cycle work `W = −kT Σ p_n ln(p_n / p_n^rem)`.
pub fn work_from_probabilities(p_ins: &[f64], p_rem: &[f64], kt: f64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for t in work_terms(p_ins, p_rem, kt)? {
        acc.add(t);
    }
    Ok(acc.value())
}

/// Optimal driven-engine work for `N = 2, 3` as a function of
/// `p₀(L/2, g^ins)` alone: `−kT [2p₀ ln 2p₀ + (1 − 2p₀) ln(1 − 2p₀)]`.
pub fn n23_curve(p0: f64, kt: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&p0) {
        return Err(Error::InvalidArgument(format!("p0 must lie in [0, 1/2], got {p0}")));
    }
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    Ok(-kt * (xlnx(2.0 * p0) + xlnx(1.0 - 2.0 * p0)))
}

/// Work of the five quasi-static stages: insertion, barrier shift, coupling
/// change, removal and coupling reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWorks {
    pub insertion: f64,
    pub shift: f64,
    pub tune: f64,
    pub removal: f64,
    pub reset: f64,
}

impl StepWorks {
    pub fn as_array(&self) -> [f64; 5] {
        [self.insertion, self.shift, self.tune, self.removal, self.reset]
    }

    pub fn total(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for x in self.as_array() {
            acc.add(x);
        }
        acc.value()
    }
}

/// Outcome of one engine cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkReport {
    pub protocol: Protocol,
    pub kt: f64,
    pub work: f64,
    pub information: f64,
    pub p_ins: Vec<f64>,
    /// `p_n(ℓ_n^rem, g_n^rem)` for each outcome `n`.
    pub p_rem: Vec<f64>,
    pub steps: StepWorks,
    pub ratio_ln2: f64,
    pub ratio_ln_outcomes: f64,
    pub truncation_bound: f64,
}

impl WorkReport {
    pub fn n_particles(&self) -> usize {
        self.protocol.n_particles()
    }

    pub fn mode(&self) -> Mode {
        self.protocol.mode()
    }

    pub fn g_ins(&self) -> Coupling {
        self.protocol.insertion().coupling
    }
}

/// Work per cycle with its stage decomposition.
///
/// Every partition function is taken from converged thermal tables, and the
/// same values feed both the cycle formula and the stages, so the shared
/// open-box terms cancel.
pub fn cycle_work(ctx: &ThermalContext, protocol: &Protocol, kt: f64) -> Result<WorkReport> {
    let n_total = protocol.n_particles();
    let ins = protocol.insertion();
    let t_ins = ctx.probabilities(n_total, ins.ell, ins.coupling, kt)?;
    let z_open_ins = ctx.full_box(n_total, ins.coupling, kt)?;
    let mut bound = t_ins.truncation_error_bound.max(z_open_ins.tail_bound);

    let mut p_rem = Vec::with_capacity(n_total + 1);
    let mut shift = CompensatedSum::new();
    let mut tune = CompensatedSum::new();
    let mut removal = CompensatedSum::new();
    let mut reset = CompensatedSum::new();
    let mut work = CompensatedSum::new();
    for (n, setting) in protocol.branches().iter().enumerate() {
        let p = t_ins.p[n];
        let t_rem = ctx.probabilities(n_total, setting.ell, setting.coupling, kt)?;
        let t_moved = ctx.probabilities(n_total, setting.ell, ins.coupling, kt)?;
        let z_open_rem = ctx.full_box(n_total, setting.coupling, kt)?;
        bound = bound
            .max(t_rem.truncation_error_bound)
            .max(t_moved.truncation_error_bound)
            .max(z_open_rem.tail_bound);
        p_rem.push(t_rem.p[n]);
        // ln(p / p_rem) from the partition functions, safe when p_rem underflows
        if p > 0.0 {
            let ln_p = t_ins.z_sector[n].log_ratio(&t_ins.z_total);
            let ln_q = t_rem.z_sector[n].log_ratio(&t_rem.z_total);
            work.add(-kt * p * (ln_p - ln_q));
        }
        let z_moved: &LogPartition = &t_moved.z_sector[n];
        shift.add(kt * p * z_moved.log_ratio(&t_ins.z_sector[n]));
        tune.add(kt * p * t_rem.z_sector[n].log_ratio(z_moved));
        removal.add(kt * p * z_open_rem.z.log_ratio(&t_rem.z_total));
        reset.add(kt * p * z_open_ins.z.log_ratio(&z_open_rem.z));
    }
    let steps = StepWorks {
        insertion: kt * t_ins.z_total.log_ratio(&z_open_ins.z),
        shift: shift.value(),
        tune: tune.value(),
        removal: removal.value(),
        reset: reset.value(),
    };
    let work = work.value();
    let information = shannon_information(&t_ins.p)?;
    Ok(WorkReport {
        protocol: protocol.clone(),
        kt,
        work,
        information,
        ratio_ln2: work / (kt * std::f64::consts::LN_2),
        ratio_ln_outcomes: work / (kt * ((n_total + 1) as f64).ln()),
        p_ins: t_ins.p,
        p_rem,
        steps,
        truncation_bound: bound,
    })
}

/// The five stage works of [`cycle_work`].
pub fn step_decomposition(ctx: &ThermalContext, protocol: &Protocol, kt: f64) -> Result<StepWorks> {
    Ok(cycle_work(ctx, protocol, kt)?.steps)
}

/// Header of the work-report CSV with `p_rem` columns for up to `max_n`
/// particles.
pub fn work_csv_header(max_n: usize) -> String {
    let mut h = String::from("N,kT,mode,g_ins,W,I,W_over_ln2,W_over_lnNp1");
    for n in 0..=max_n {
        h.push_str(&format!(",p_rem_{n}"));
    }
    h.push_str(",step_i,step_ii1,step_ii2,step_iii,step_iv,kT_over_dN,trunc_bound");
    h
}

impl WorkReport {
    /// One CSV row; energies and `kT` in units of `ε₁`, `p_rem` padded with
    /// empty cells up to `max_n`.
    pub fn write_csv_row<W: Write>(&self, w: &mut W, max_n: usize) -> io::Result<()> {
        let n_total = self.n_particles();
        write!(
            w,
            "{},{},{},{},{},{},{},{}",
            n_total,
            self.kt / EPS1,
            self.mode(),
            self.g_ins(),
            self.work / EPS1,
            self.information,
            self.ratio_ln2,
            self.ratio_ln_outcomes
        )?;
        for n in 0..=max_n {
            match self.p_rem.get(n) {
                Some(p) => write!(w, ",{p}")?,
                None => write!(w, ",")?,
            }
        }
        for s in self.steps.as_array() {
            write!(w, ",{}", s / EPS1)?;
        }
        writeln!(w, ",{},{:e}", self.kt / delta_eps(n_total), self.truncation_bound)
    }
}

pub fn write_work_csv<W: Write>(w: &mut W, reports: &[WorkReport]) -> io::Result<()> {
    let max_n = reports.iter().map(WorkReport::n_particles).max().unwrap_or(0);
    writeln!(w, "{}", work_csv_header(max_n))?;
    for r in reports {
        r.write_csv_row(w, max_n)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn information_examples() {
        assert!((shannon_information(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_information(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let i = shannon_information(&[0.25, 0.5, 0.25]).unwrap();
        assert!((i - 1.5 * LN_2).abs() < 1e-15);
        assert!((i - 1.03972).abs() < 1e-5);
        assert!(shannon_information(&[0.5, 0.4]).is_err());
        assert!(shannon_information(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn curve_examples() {
        assert!((n23_curve(0.25, 1.0).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(n23_curve(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(n23_curve(0.0, 1.0).unwrap(), 0.0);
        assert!(n23_curve(0.6, 1.0).is_err());
        assert!(n23_curve(-0.1, 1.0).is_err());
    }

    #[test]
    fn reversible_removal_gives_information() {
        let p = [0.2, 0.5, 0.3];
        let w = work_from_probabilities(&p, &[1.0; 3], 2.0).unwrap();
        assert!((w - 2.0 * shannon_information(&p).unwrap()).abs() < 1e-15);
        assert_eq!(work_from_probabilities(&p, &p, 2.0).unwrap(), 0.0);
        assert!(work_from_probabilities(&p, &[1.0; 2], 1.0).is_err());
    }

    #[test]
    fn header_columns() {
        assert_eq!(
            work_csv_header(1),
            "N,kT,mode,g_ins,W,I,W_over_ln2,W_over_lnNp1,p_rem_0,p_rem_1,step_i,step_ii1,step_ii2,step_iii,step_iv,kT_over_dN,trunc_bound"
        );
    }
}
