//! Root finding for the hard-wall Bethe equations
//!
//! ```text
//! ℓ k_α = π b_α + Σ_{β≠α} [atan(g/(k_α − k_β)) + atan(g/(k_α + k_β))]
//! ```
//!
//! The raw form jumps by `π` whenever two roots pass each other. Using
//! `atan(x) + atan(1/x) = ±π/2`, the system is rewritten so each residual is
//! smooth in the roots:
//!
//! * `g > 0`: `ℓ k_α − π m_α + Σ_β [atan((k_α−k_β)/g) + atan((k_α+k_β)/g)]` with
//!   the fermionic integers `m_α = b_α + α − 1`. This is the gradient of a
//!   strictly convex function, so the root is unique.
//! * `g < 0`: pairs from different runs of equal `b` use the same rewriting
//!   (with the sign fixed by `b_α − b_β`). Pairs inside a run keep the raw
//!   form, because their differences are imaginary (conjugate pairs and
//!   strings) and the rewritten form would sit on a branch cut.
//!
//! Both forms have the same Jacobian, which is symmetric.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::tuples::QuantumNumbers;
use crate::error::{Error, Result};

/// Knobs for [`solve_bethe`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Euclidean norm of the residual vector accepted as converged.
    pub tolerance: f64,
    /// Trust-region iterations per solve (per continuation step).
    pub max_iterations: usize,
    /// Allow complex conjugate roots for attractive coupling.
    pub complex_pairs: bool,
    /// Largest `|g|` accepted for `g < 0` when `complex_pairs` is off.
    pub attraction_window: f64,
    /// When set, couplings at or above this value use the free-fermion
    /// spectrum instead of the Bethe equations (flagged on the spectrum).
    pub tonks_surrogate: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
            complex_pairs: true,
            attraction_window: 0.1,
            tonks_surrogate: None,
        }
    }
}

/// Converged quasi-momenta of one Bethe state.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheRoots {
    /// Roots in tuple order, each with non-negative real part.
    pub k: Vec<Complex64>,
    pub residual_norm: f64,
    /// `½ Σ k²` (real for every admissible solution).
    pub energy: f64,
    pub iterations: usize,
}

impl BetheRoots {
    pub fn is_real(&self) -> bool {
        self.k.iter().all(|z| z.im == 0.0)
    }

    /// Real parts of the roots.
    pub fn real(&self) -> Vec<f64> {
        self.k.iter().map(|z| z.re).collect()
    }
}

/// Solve the Bethe equations for tuple `b` at coupling `g` in a segment of
/// length `ell`.
///
/// `g = 0` and single-particle tuples are answered analytically with
/// `k_α = π b_α/ℓ`. Otherwise the best of the supplied `guess`, a
/// weak-coupling guess and a strong-coupling guess seeds a
/// Levenberg–Marquardt trust-region iteration; for attraction, and as a
/// fallback for repulsion, the roots are continued in `g` from the
/// weak-coupling end.
pub fn solve_bethe(
    b: &QuantumNumbers,
    g: f64,
    ell: f64,
    guess: Option<&[Complex64]>,
    cfg: &SolverConfig,
) -> Result<BetheRoots> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {ell}")));
    }
    if !g.is_finite() {
        return Err(Error::InvalidArgument(format!("coupling must be finite, got {g}")));
    }
    if let Some(k) = guess {
        if k.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "guess has {} roots for a {}-particle tuple",
                k.len(),
                b.len()
            )));
        }
    }
    let n = b.len();
    if n == 0 || n == 1 || g == 0.0 {
        let k: Vec<Complex64> = b
            .as_slice()
            .iter()
            .map(|&bi| Complex64::new(PI * f64::from(bi) / ell, 0.0))
            .collect();
        let energy = 0.5 * k.iter().map(|z| z.re * z.re).sum::<f64>();
        return Ok(BetheRoots { k, residual_norm: 0.0, energy, iterations: 0 });
    }
    if g > 0.0 {
        solve_repulsive(b, g, ell, guess, cfg)
    } else {
        if !cfg.complex_pairs {
            if b.is_degenerate() {
                return Err(Error::RegimeUnsupported {
                    tuple: b.clone(),
                    coupling: g,
                    reason: "repeated quantum numbers form complex pairs under attraction; enable complex-pair mode".into(),
                });
            }
            if -g > cfg.attraction_window {
                return Err(Error::RegimeUnsupported {
                    tuple: b.clone(),
                    coupling: g,
                    reason: format!("|g| exceeds the weak-attraction window {}", cfg.attraction_window),
                });
            }
        }
        solve_attractive(b, g, ell, guess, cfg)
    }
}

/// Residual and Jacobian of the branch-safe system for one `(b, g, ℓ)`.
struct BetheSystem {
    ell: f64,
    g: f64,
    /// Constant part of each residual (`−π m_α` or `−π b_α ± π/2 …`).
    offset: Vec<f64>,
    /// `same_run[α][β]`: both indices in a run of equal `b` (used for `g < 0`).
    same_run: Vec<Vec<bool>>,
}

impl BetheSystem {
    fn new(b: &QuantumNumbers, g: f64, ell: f64) -> Self {
        let bs = b.as_slice();
        let n = bs.len();
        let same_run = (0..n).map(|a| (0..n).map(|c| bs[a] == bs[c]).collect()).collect();
        let offset = if g > 0.0 {
            b.fermionic().iter().map(|&m| -PI * f64::from(m)).collect()
        } else {
            (0..n)
                .map(|a| {
                    let cross: f64 = (0..n)
                        .filter(|&c| bs[c] != bs[a])
                        .map(|c| if bs[a] > bs[c] { FRAC_PI_2 } else { -FRAC_PI_2 })
                        .sum();
                    -PI * f64::from(bs[a]) + cross
                })
                .collect()
        };
        Self { ell, g, offset, same_run }
    }

    fn eval<T>(&self, k: &DVector<T>) -> (DVector<T>, DMatrix<T>)
    where
        T: ComplexField<RealField = f64> + Copy,
    {
        let n = k.len();
        let g = T::from_real(self.g);
        let g2 = g * g;
        let ell = T::from_real(self.ell);
        let mut f = DVector::<T>::zeros(n);
        let mut jac = DMatrix::<T>::zeros(n, n);
        for a in 0..n {
            let mut fa = ell * k[a] + T::from_real(self.offset[a]);
            let mut diag = ell;
            for c in 0..n {
                if c == a {
                    continue;
                }
                let dif = k[a] - k[c];
                let sum = k[a] + k[c];
                if self.g > 0.0 {
                    fa += (dif / g).atan() + (sum / g).atan();
                } else {
                    if self.same_run[a][c] {
                        fa -= (g / dif).atan();
                    } else {
                        fa += (dif / g).atan();
                    }
                    fa -= (g / sum).atan();
                }
                let wd = g / (g2 + dif * dif);
                let ws = g / (g2 + sum * sum);
                diag += wd + ws;
                jac[(a, c)] = ws - wd;
            }
            jac[(a, a)] = diag;
            f[a] = fa;
        }
        (f, jac)
    }
}

struct LmOutcome<T: nalgebra::Scalar> {
    x: DVector<T>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Levenberg–Marquardt with Nielsen's damping update. The damping parameter
/// acts as the inverse trust-region radius.
fn levenberg_marquardt<T, F>(mut x: DVector<T>, eval: F, tol: f64, max_iter: usize) -> LmOutcome<T>
where
    T: ComplexField<RealField = f64> + Copy,
    F: Fn(&DVector<T>) -> (DVector<T>, DMatrix<T>),
{
    let (mut f, mut jac) = eval(&x);
    let mut fnorm = f.norm();
    if !fnorm.is_finite() {
        return LmOutcome { x, residual: f64::INFINITY, iterations: 0, converged: false };
    }
    let mut a = jac.adjoint() * &jac;
    let mut grad = jac.adjoint() * &f;
    let max_diag = (0..a.nrows()).map(|i| a[(i, i)].real()).fold(0.0, f64::max);
    let mut mu = 1e-8 * max_diag.max(1e-300);
    let mut nu = 2.0;
    let mut iter = 0;
    while iter < max_iter {
        if fnorm <= tol {
            return LmOutcome { x, residual: fnorm, iterations: iter, converged: true };
        }
        iter += 1;
        let mut damped = a.clone();
        for i in 0..damped.nrows() {
            damped[(i, i)] += T::from_real(mu);
        }
        let Some(h) = damped.lu().solve(&(-&grad)) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        if h.norm() <= 1e-15 * (x.norm() + 1e-15) {
            break;
        }
        let x_new = &x + &h;
        let (f_new, jac_new) = eval(&x_new);
        let fnew_norm = f_new.norm();
        let predicted = (h.adjoint() * (&h * T::from_real(mu) - &grad))[(0, 0)].real();
        let rho = if fnew_norm.is_finite() && predicted > 0.0 {
            (fnorm * fnorm - fnew_norm * fnew_norm) / predicted
        } else {
            -1.0
        };
        if rho > 0.0 {
            x = x_new;
            f = f_new;
            jac = jac_new;
            fnorm = fnew_norm;
            a = jac.adjoint() * &jac;
            grad = jac.adjoint() * &f;
            mu *= f64::max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
            if !mu.is_finite() {
                break;
            }
        }
    }
    LmOutcome { x, residual: fnorm, iterations: iter, converged: fnorm <= tol }
}

/// Zeros of the physicists' Hermite polynomial `H_m`, ascending
/// (Golub–Welsch eigenvalues of the Jacobi matrix).
pub(crate) fn hermite_zeros(m: usize) -> Vec<f64> {
    match m {
        0 => return Vec::new(),
        1 => return vec![0.0],
        _ => {}
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        let off = (i as f64 / 2.0).sqrt();
        t[(i, i - 1)] = off;
        t[(i - 1, i)] = off;
    }
    let mut z: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    z.sort_by(f64::total_cmp);
    z
}

/// Leading-order roots for small `|g|`: free roots, with each run of `m`
/// equal quantum numbers split by `√(g/ℓ)` times the zeros of `H_m`.
fn weak_guess(b: &QuantumNumbers, g: f64, ell: f64) -> Vec<Complex64> {
    let scale = Complex64::new(g / ell, 0.0).sqrt();
    let bs = b.as_slice();
    let mut k = vec![Complex64::new(0.0, 0.0); bs.len()];
    for (start, len) in b.groups() {
        let centre = PI * f64::from(bs[start]) / ell;
        for (j, h) in hermite_zeros(len).into_iter().enumerate() {
            k[start + j] = Complex64::new(centre, 0.0) + scale * h;
        }
    }
    k
}

/// First-order strong-coupling roots `k_α = π m_α / (ℓ + 2(n−1)/g)`.
fn strong_guess(b: &QuantumNumbers, g: f64, ell: f64) -> Vec<f64> {
    let n = b.len() as f64;
    let eff = ell + 2.0 * (n - 1.0) / g;
    b.fermionic().iter().map(|&m| PI * f64::from(m) / eff).collect()
}

fn finish(b: &QuantumNumbers, g: f64, k: Vec<Complex64>, residual: f64, iterations: usize) -> Result<BetheRoots> {
    let k: Vec<Complex64> = k.into_iter().map(|z| if z.re < 0.0 { -z } else { z }).collect();
    let e: Complex64 = k.iter().map(|z| z * z).sum::<Complex64>() * 0.5;
    if !e.re.is_finite() || e.im.abs() > 1e-8 * e.re.abs().max(1.0) {
        return Err(Error::SolverFailure { tuple: b.clone(), coupling: g, residual });
    }
    Ok(BetheRoots { k, residual_norm: residual, energy: e.re, iterations })
}

fn repulsive_ok(k: &DVector<f64>) -> bool {
    k.iter().all(|&x| x > 0.0 && x.is_finite()) && k.as_slice().windows(2).all(|w| w[0] < w[1])
}

fn solve_repulsive(
    b: &QuantumNumbers,
    g: f64,
    ell: f64,
    guess: Option<&[Complex64]>,
    cfg: &SolverConfig,
) -> Result<BetheRoots> {
    let sys = BetheSystem::new(b, g, ell);
    let eval = |k: &DVector<f64>| sys.eval(k);
    let mut candidates: Vec<DVector<f64>> = Vec::with_capacity(3);
    if let Some(k) = guess {
        if k.iter().all(|z| z.im == 0.0) {
            candidates.push(DVector::from_iterator(k.len(), k.iter().map(|z| z.re)));
        }
    }
    candidates.push(DVector::from_iterator(b.len(), weak_guess(b, g, ell).iter().map(|z| z.re)));
    candidates.push(DVector::from_vec(strong_guess(b, g, ell)));
    let start = candidates
        .into_iter()
        .map(|k| {
            let r = eval(&k).0.norm();
            (k, if r.is_finite() { r } else { f64::INFINITY })
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .expect("at least two candidates");

    let out = levenberg_marquardt(start, eval, cfg.tolerance, cfg.max_iterations);
    let mut best = out.residual;
    if out.converged && repulsive_ok(&out.x) {
        let k = out.x.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        return finish(b, g, k, out.residual, out.iterations);
    }

    // fallback: continue from the weak-coupling end
    let g0 = g.min(1e-4);
    let k0 = DVector::from_iterator(b.len(), weak_guess(b, g0, ell).iter().map(|z| z.re));
    let res = march(g0, k0, g, cfg, |gi, k| {
        let s = BetheSystem::new(b, gi, ell);
        let o = levenberg_marquardt(k.clone(), |x: &DVector<f64>| s.eval(x), cfg.tolerance, cfg.max_iterations);
        best = o.residual;
        (o.converged && repulsive_ok(&o.x)).then_some((o.x, o.residual, o.iterations))
    });
    match res {
        Some((k, r, it)) => finish(b, g, k.iter().map(|&x| Complex64::new(x, 0.0)).collect(), r, it),
        None => Err(Error::SolverFailure { tuple: b.clone(), coupling: g, residual: best }),
    }
}

/// Reasons a converged attractive solution is outside the supported regime.
const COLLISION: &str = "roots with different quantum numbers collided";

fn attractive_violation(b: &QuantumNumbers, k: &DVector<Complex64>, ell: f64) -> Option<&'static str> {
    let scale = PI / ell;
    if k.iter().any(|z| !(z.re > 0.0) || !z.is_finite()) {
        return Some("a root left the positive half-plane");
    }
    for (i, z) in k.iter().enumerate() {
        if z.im.abs() > 1e-8 * scale && !k.iter().enumerate().any(|(j, w)| j != i && (w - z.conj()).norm() < 1e-6 * scale) {
            return Some("a complex root has no conjugate partner");
        }
    }
    if !cross_run_pairs(b, k, 1e-6 * scale).is_empty() {
        return Some(COLLISION);
    }
    None
}

/// Pairs of roots from different runs of `b` closer than `tol`.
fn cross_run_pairs(b: &QuantumNumbers, k: &DVector<Complex64>, tol: f64) -> Vec<(usize, usize)> {
    let groups = b.groups();
    let mut out = Vec::new();
    for (i, &(s1, l1)) in groups.iter().enumerate() {
        for &(s2, l2) in &groups[i + 1..] {
            for a in s1..s1 + l1 {
                for c in s2..s2 + l2 {
                    if (k[a] - k[c]).norm() < tol {
                        out.push((a, c));
                    }
                }
            }
        }
    }
    out
}

/// Reseed roots from different runs that have merged as a conjugate pair.
///
/// Past the merger the pair's relative momentum is `iq` with `0 < q < |g|`,
/// and the residual is monotone on the approach from `q ≈ |g|`, so the seed
/// sits near that end.
fn split_merged(b: &QuantumNumbers, k: &DVector<Complex64>, g: f64, ell: f64) -> Option<DVector<Complex64>> {
    let pairs = cross_run_pairs(b, k, 0.05 * PI / ell);
    if pairs.is_empty() {
        return None;
    }
    let mut seed = k.clone();
    let mut used = vec![false; k.len()];
    for (a, c) in pairs {
        if used[a] || used[c] {
            continue;
        }
        used[a] = true;
        used[c] = true;
        let m = 0.5 * (k[a].re + k[c].re);
        let half = 0.45 * g.abs();
        seed[a] = Complex64::new(m, -half);
        seed[c] = Complex64::new(m, half);
    }
    Some(seed)
}

fn solve_attractive(
    b: &QuantumNumbers,
    g: f64,
    ell: f64,
    guess: Option<&[Complex64]>,
    cfg: &SolverConfig,
) -> Result<BetheRoots> {
    let mut best = f64::INFINITY;
    let mut violation: Option<&'static str> = None;
    if let Some(k) = guess {
        let sys = BetheSystem::new(b, g, ell);
        let start = DVector::from_column_slice(k);
        let o = levenberg_marquardt(start, |x: &DVector<Complex64>| sys.eval(x), cfg.tolerance, cfg.max_iterations);
        best = o.residual;
        if o.converged && attractive_violation(b, &o.x, ell).is_none() {
            return finish(b, g, o.x.iter().copied().collect(), o.residual, o.iterations);
        }
    }

    let g0 = -(g.abs().min(1e-4));
    let k0 = DVector::from_vec(weak_guess(b, g0, ell));
    let res = march(g0, k0, g, cfg, |gi, k| {
        let s = BetheSystem::new(b, gi, ell);
        let lm = |start: DVector<Complex64>| {
            levenberg_marquardt(start, |x: &DVector<Complex64>| s.eval(x), cfg.tolerance, cfg.max_iterations)
        };
        let o = lm(k.clone());
        best = best.min(o.residual);
        let v = if o.converged { attractive_violation(b, &o.x, ell) } else { Some(COLLISION) };
        let Some(v) = v else {
            violation = None;
            return Some((o.x, o.residual, o.iterations));
        };
        if v == COLLISION {
            if let Some(seed) = split_merged(b, &o.x, gi, ell) {
                let o2 = lm(seed);
                best = best.min(o2.residual);
                if o2.converged && attractive_violation(b, &o2.x, ell).is_none() {
                    violation = None;
                    return Some((o2.x, o2.residual, o.iterations + o2.iterations));
                }
            }
        }
        if o.converged {
            violation = Some(v);
        }
        None
    });
    match (res, violation) {
        (Some((k, r, it)), _) => finish(b, g, k.iter().copied().collect(), r, it),
        (None, Some(reason)) => Err(Error::RegimeUnsupported {
            tuple: b.clone(),
            coupling: g,
            reason: reason.into(),
        }),
        (None, None) => Err(Error::SolverFailure { tuple: b.clone(), coupling: g, residual: best }),
    }
}

/// Continue a solution from `g0` to `target` (same sign) in steps of
/// `ln|g|`, with a secant predictor and step halving on failure.
fn march<T, S>(g0: f64, k0: DVector<T>, target: f64, cfg: &SolverConfig, mut solve_at: S) -> Option<(DVector<T>, f64, usize)>
where
    T: ComplexField<RealField = f64> + Copy,
    S: FnMut(f64, &DVector<T>) -> Option<(DVector<T>, f64, usize)>,
{
    let sign = target.signum();
    let t_end = target.abs().ln();
    let (mut k, mut r, mut iters) = solve_at(g0, &k0)?;
    let mut t = g0.abs().ln();
    if t >= t_end {
        return Some((k, r, iters));
    }
    let mut prev: Option<(f64, DVector<T>)> = None;
    let mut dt: f64 = 0.5;
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > 20 * cfg.max_iterations {
            return None;
        }
        let step = dt.min(t_end - t);
        let t_next = if t + step >= t_end - 1e-12 { t_end } else { t + step };
        let mut guess = k.clone();
        if let Some((tp, kp)) = &prev {
            let w = T::from_real((t_next - t) / (t - tp));
            guess += (&k - kp) * w;
        }
        let g_next = if t_next == t_end { target } else { sign * t_next.exp() };
        match solve_at(g_next, &guess) {
            Some((kn, rn, it)) => {
                prev = Some((t, std::mem::replace(&mut k, kn)));
                r = rn;
                iters += it;
                t = t_next;
                dt = (dt * 1.5).min(1.0);
            }
            None => {
                dt *= 0.5;
                if dt < 1e-5 {
                    return None;
                }
            }
        }
    }
    Some((k, r, iters))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qn(s: &str) -> QuantumNumbers {
        s.parse().unwrap()
    }

    #[test]
    fn hermite_zeros_satisfy_stieltjes() {
        for m in 2..7 {
            let z = hermite_zeros(m);
            for i in 0..m {
                let s: f64 = (0..m).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
                assert!((s - z[i]).abs() < 1e-10, "m={m}");
            }
        }
        assert!((hermite_zeros(2)[1] - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn free_roots_are_analytic() {
        let r = solve_bethe(&qn("1-2"), 0.0, 0.5, None, &SolverConfig::default()).unwrap();
        assert_eq!(r.real(), vec![2.0 * PI, 4.0 * PI]);
        assert!((r.energy - 10.0 * PI * PI).abs() < 1e-12);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn single_particle_ignores_coupling() {
        for g in [-3.0, 0.7, 1e5] {
            let r = solve_bethe(&qn("2"), g, 0.5, None, &SolverConfig::default()).unwrap();
            assert!((r.energy - 8.0 * PI * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn repulsive_roots_are_ordered_and_converged() {
        let cfg = SolverConfig::default();
        for g in [1e-6, 1e-2, 0.5, 3.0, 40.0, 1e3, 1e6] {
            for t in ["1-1", "1-1-1", "1-2-2", "1-1-1-1", "2-2-3-3-3"] {
                let r = solve_bethe(&qn(t), g, 0.7, None, &cfg).unwrap();
                assert!(r.residual_norm <= cfg.tolerance, "{t} g={g}");
                assert!(r.is_real());
                let k = r.real();
                assert!(k.windows(2).all(|w| w[0] < w[1]), "{t} g={g}: {k:?}");
                let free = qn(t).free_energy(0.7);
                assert!(r.energy >= free - 1e-9 * free, "{t} g={g}");
            }
        }
    }

    #[test]
    fn attractive_pair_is_complex_conjugate() {
        let r = solve_bethe(&qn("1-1"), -0.05, 1.0, None, &SolverConfig::default()).unwrap();
        assert!(!r.is_real());
        assert!((r.k[0].re - r.k[1].re).abs() < 1e-10);
        assert!((r.k[0].im + r.k[1].im).abs() < 1e-10);
        assert!(r.energy < PI * PI);
    }

    #[test]
    fn attraction_rejected_without_complex_mode() {
        let cfg = SolverConfig { complex_pairs: false, ..SolverConfig::default() };
        let e = solve_bethe(&qn("1-1"), -0.05, 1.0, None, &cfg).unwrap_err();
        assert!(matches!(e, Error::RegimeUnsupported { .. }));
        let e = solve_bethe(&qn("1-2"), -0.5, 1.0, None, &cfg).unwrap_err();
        assert!(matches!(e, Error::RegimeUnsupported { .. }));
        let r = solve_bethe(&qn("1-2"), -0.05, 1.0, None, &cfg).unwrap();
        assert!(r.is_real());
    }

    #[test]
    fn distinct_roots_merge_beyond_binding_threshold() {
        // (1,2): the relative root reaches zero at |g| ℓ = 2, then turns imaginary
        let below = solve_bethe(&qn("1-2"), -1.5, 1.0, None, &SolverConfig::default()).unwrap();
        assert!(below.is_real());
        let above = solve_bethe(&qn("1-2"), -3.0, 1.0, None, &SolverConfig::default()).unwrap();
        assert!(!above.is_real());
        assert!((above.k[0].re - above.k[1].re).abs() < 1e-8);
        assert!((above.k[0].im + above.k[1].im).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = SolverConfig::default();
        assert!(solve_bethe(&qn("1"), 1.0, 0.0, None, &cfg).is_err());
        assert!(solve_bethe(&qn("1"), f64::NAN, 1.0, None, &cfg).is_err());
        let g = [Complex64::new(1.0, 0.0)];
        assert!(solve_bethe(&qn("1-1"), 1.0, 1.0, Some(&g), &cfg).is_err());
    }
}
