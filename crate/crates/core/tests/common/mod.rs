//! Test-only oracles, independent of the library's solver and summation code.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Bisection on a bracket with `f(lo) < 0 < f(hi)`, to machine precision.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) < 0.0 && f(hi) > 0.0, "bad bracket [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two repulsive bosons in a hard-wall segment, in centre-of-mass and relative
/// quasi-momenta `P = k₁ + k₂`, `Q = k₂ − k₁`. The two-body equations
/// decouple into scalar conditions `ℓ x = π c + 2 atan(g/x)`, each bracketed
/// in `(πc/ℓ, π(c+1)/ℓ)` (or `(0, π/ℓ)` for the relative motion of equal
/// quantum numbers).
pub fn two_body_energy(b1: u32, b2: u32, g: f64, ell: f64) -> f64 {
    assert!(b1 <= b2 && g > 0.0);
    let cond = |c: f64| move |x: f64| ell * x - PI * c - 2.0 * (g / x).atan();
    let csum = f64::from(b1 + b2);
    let p = bisect(cond(csum), PI * csum / ell, PI * (csum + 1.0) / ell);
    let cdif = f64::from(b2 - b1);
    let lo = if b1 == b2 { 1e-300 } else { PI * cdif / ell };
    let q = bisect(cond(cdif), lo, PI * (cdif + 1.0) / ell);
    0.25 * (p * p + q * q)
}

/// Lowest `count` two-boson energies from the oracle, by enumerating
/// `b1 ≤ b2 ≤ bmax` and sorting.
pub fn two_body_levels(g: f64, ell: f64, count: usize) -> Vec<f64> {
    let mut e = Vec::new();
    for b2 in 1..=12u32 {
        for b1 in 1..=b2 {
            e.push(two_body_energy(b1, b2, g, ell));
        }
    }
    e.sort_by(f64::total_cmp);
    e.truncate(count);
    e
}

fn overlap4(a: i64, b: i64, c: i64, d: i64) -> f64 {
    // ∫₀¹ sin(aπx) sin(bπx) sin(cπx) sin(dπx) dx
    let cc = |p: i64, q: i64| -> f64 {
        let mut s = 0.0;
        if p == q {
            s += 0.5;
        }
        if p == -q {
            s += 0.5;
        }
        s
    };
    0.25 * (cc(a - b, c - d) - cc(a - b, c + d) - cc(a + b, c - d) + cc(a + b, c + d))
}

/// Real-space check: Galerkin diagonalisation of two bosons with a contact
/// interaction in the unit box, in the symmetrised sine basis with
/// `i² + j² ≤ cutoff²`. Converges from above as the cutoff grows.
pub fn galerkin_two_body(g: f64, cutoff: usize) -> Vec<f64> {
    let mut basis = Vec::new();
    for j in 1..=cutoff {
        for i in 1..=j {
            if i * i + j * j <= cutoff * cutoff {
                basis.push((i as i64, j as i64));
            }
        }
    }
    let n = basis.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (r, &(i, j)) in basis.iter().enumerate() {
        h[(r, r)] += 0.5 * PI * PI * ((i * i + j * j) as f64);
        let nij: f64 = 2.0 * if i == j { 2.0 } else { 1.0 };
        for (c, &(k, l)) in basis.iter().enumerate().skip(r) {
            let nkl: f64 = 2.0 * if k == l { 2.0 } else { 1.0 };
            // φ = √2 sin, four orderings of the symmetrised product collapse under δ(x₁−x₂)
            let j4 = 4.0 * overlap4(i, j, k, l);
            let v = g * 4.0 * j4 / (nij * nkl).sqrt();
            h[(r, c)] += v;
            if c != r {
                h[(c, r)] += v;
            }
        }
    }
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Every two-boson level with `b₂ ≤ bmax`, unsorted.
pub fn two_body_spectrum(g: f64, ell: f64, bmax: u32) -> Vec<f64> {
    let mut e = Vec::new();
    for b2 in 1..=bmax {
        for b1 in 1..=b2 {
            e.push(two_body_energy(b1, b2, g, ell));
        }
    }
    e
}

/// Single-particle levels `π² b² / (2ℓ²)` for `b ≤ bmax`.
pub fn one_body_spectrum(ell: f64, bmax: u32) -> Vec<f64> {
    (1..=bmax).map(|b| PI * PI * f64::from(b * b) / (2.0 * ell * ell)).collect()
}

/// `ln Σ_{i,j} exp(−(a_i + b_j)/kT)` over all pairs, summed naively after a
/// shift by the smallest pair energy.
pub fn ln_direct_pair_sum(left: &[f64], right: &[f64], kt: f64) -> f64 {
    let e0 = left.iter().copied().fold(f64::INFINITY, f64::min) + right.iter().copied().fold(f64::INFINITY, f64::min);
    let mut s = 0.0;
    for a in left {
        for b in right {
            s += (-(a + b - e0) / kt).exp();
        }
    }
    -e0 / kt + s.ln()
}

/// Two attractive bosons (`g < 0`) from the same `P`/`Q` reduction.
///
/// `P` stays real. For equal quantum numbers `Q = iq` with `q > |g|` and
/// `ℓq = 2 artanh(|g|/q)`. For neighbours past `|g|ℓ = 2`, `Q = iq` with
/// `q < |g|` and `ℓq = 2 artanh(q/|g|)`. Otherwise `Q` is real.
pub fn two_body_attractive_energy(b1: u32, b2: u32, g: f64, ell: f64) -> f64 {
    assert!(b1 <= b2 && g < 0.0);
    let a = g.abs();
    let csum = f64::from(b1 + b2);
    let p = bisect(|x| ell * x - PI * csum - 2.0 * (g / x).atan(), 1e-9, PI * csum / ell);
    let d = b2 - b1;
    let q2 = if d == 0 {
        let q = bisect(|q| ell * q - 2.0 * (a / q).atanh(), a * (1.0 + 1e-15), a + 50.0 / ell);
        -q * q
    } else if d == 1 && a * ell > 2.0 {
        let q = bisect(|q| 2.0 * (q / a).atanh() - ell * q, a * 1e-9, a * (1.0 - 1e-15));
        -q * q
    } else {
        let lo = if d == 1 { 1e-6 } else { 1e-9 };
        let q = bisect(|x| ell * x - PI * f64::from(d) - 2.0 * (g / x).atan(), lo, PI * f64::from(d) / ell);
        q * q
    };
    0.25 * (p * p + q2)
}

/// All two-boson levels with `b₂ ≤ bmax` for any finite `g`.
pub fn pair_levels(g: f64, ell: f64, bmax: u32) -> Vec<f64> {
    let mut e = Vec::new();
    for b2 in 1..=bmax {
        for b1 in 1..=b2 {
            e.push(if g > 0.0 {
                two_body_energy(b1, b2, g, ell)
            } else if g < 0.0 {
                two_body_attractive_energy(b1, b2, g, ell)
            } else {
                PI * PI * f64::from(b1 * b1 + b2 * b2) / (2.0 * ell * ell)
            });
        }
    }
    e
}

/// `ln Σ exp(−E/kT)`, summed naively after a shift by the minimum.
pub fn ln_z(levels: &[f64], kt: f64) -> f64 {
    let e0 = levels.iter().copied().fold(f64::INFINITY, f64::min);
    -e0 / kt + levels.iter().map(|e| (-(e - e0) / kt).exp()).sum::<f64>().ln()
}

/// Two bosons with a central barrier: `ln Z_n` for `n = 0, 1, 2` and
/// `ln Z_2(L)`, from the pair and single-particle oracles.
pub fn two_boson_chamber(g: f64, kt: f64) -> ([f64; 3], f64) {
    let pair = ln_z(&pair_levels(g, 0.5, 40), kt);
    let single = ln_z(&one_body_spectrum(0.5, 80), kt);
    ([pair, 2.0 * single, pair], ln_z(&pair_levels(g, 1.0, 40), kt))
}
