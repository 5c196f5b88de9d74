//! Special functions: log-Gamma, regularized incomplete Gamma and the
//! inverse Gaussian tail.
//!
//! The incomplete Gamma routines work in log space throughout so that shapes
//! in the tens of thousands (W·N for large Warden deployments) neither
//! overflow nor lose the tiny tail probabilities that drive threshold sweeps.
//! The series / continued-fraction split is the classical one at `x = a + 1`.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

const MAX_ITER: usize = 100_000;
const EPS: f64 = 1e-17;
const TINY: f64 = 1e-300;

/// 0.5 * ln(2π)
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Stirling-series remainder `ln Γ(a) - [(a - ½) ln a - a + ½ ln 2π]`, valid for a ≥ 10.
fn stirling_remainder(a: f64) -> f64 {
    // Bernoulli-number coefficients B_{2k} / (2k (2k-1)).
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural logarithm of the Gamma function for finite `a > 0`.
pub fn ln_gamma(a: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(domain("ln_gamma", format!("a = {a} must be finite and positive")));
    }
    Ok(ln_gamma_unchecked(a))
}

fn ln_gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        // Γ(a) = Γ(a + 1) / a keeps the Lanczos sum in its accurate range.
        return ln_gamma_unchecked(a + 1.0) - a.ln();
    }
    if a >= 10.0 {
        return (a - 0.5) * a.ln() - a + HALF_LN_2PI + stirling_remainder(a);
    }
    let z = a - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + sum.ln()
}

/// `ln(1 + d) - d`, accurate for small `d`.
fn ln1p_minus(d: f64) -> f64 {
    if d.abs() > 0.25 {
        return d.ln_1p() - d;
    }
    // -d²/2 + d³/3 - d⁴/4 + ...
    let mut term = d * d;
    let mut acc = 0.0;
    let mut k = 2.0;
    loop {
        let contrib = term / k;
        acc -= contrib;
        term *= -d;
        k += 1.0;
        if contrib.abs() <= acc.abs() * EPS {
            break;
        }
    }
    acc
}

/// `ln(x^a e^{-x} / Γ(a))`, the common prefactor of both expansions.
fn ln_prefactor(a: f64, x: f64) -> f64 {
    if a >= 10.0 {
        // a ln x - x - ln Γ(a) rewritten around x = a to avoid cancelling 1e5-sized terms.
        let d = (x - a) / a;
        a * ln1p_minus(d) + 0.5 * a.ln() - HALF_LN_2PI - stirling_remainder(a)
    } else {
        a * x.ln() - x - ln_gamma_unchecked(a)
    }
}

/// Returns `(ln P(a, x), ln Q(a, x))`.
fn ln_incomplete_pair(func: &'static str, a: f64, x: f64) -> Result<(f64, f64)> {
    if !a.is_finite() || a <= 0.0 {
        return Err(domain(func, format!("shape a = {a} must be finite and positive")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain(func, format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == f64::INFINITY {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let ln_pre = ln_prefactor(a, x);
    if x < a + 1.0 {
        // P(a, x) = x^a e^{-x} / Γ(a) * Σ x^n / (a (a+1) ... (a+n))
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence { func, iterations: MAX_ITER });
        }
        let ln_p = ln_pre + sum.ln();
        Ok((ln_p, (-ln_p.exp()).ln_1p()))
    } else {
        // Modified Lentz evaluation of the continued fraction for Q(a, x).
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut converged = false;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence { func, iterations: MAX_ITER });
        }
        let ln_q = ln_pre + h.ln();
        Ok(((-ln_q.exp()).ln_1p(), ln_q))
    }
}

/// Regularized upper incomplete Gamma function `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    ln_incomplete_pair("reg_upper_gamma", a, x).map(|(_, q)| q.exp())
}

/// Regularized lower incomplete Gamma function `P(a, x) = 1 - Q(a, x)`.
///
/// Computed directly rather than as `1 - Q`, so values far below machine
/// epsilon keep their relative accuracy.
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    ln_incomplete_pair("reg_lower_gamma", a, x).map(|(p, _)| p.exp())
}

/// `ln Q(a, x)`; finite even where `Q` underflows.
pub fn ln_reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    ln_incomplete_pair("ln_reg_upper_gamma", a, x).map(|(_, q)| q)
}

/// `ln P(a, x)`; finite even where `P` underflows.
pub fn ln_reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    ln_incomplete_pair("ln_reg_lower_gamma", a, x).map(|(p, _)| p)
}

/// Standard normal tail probability `Q(z) = P(Z > z)`.
pub fn normal_tail(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z.is_infinite() {
        return if z > 0.0 { 0.0 } else { 1.0 };
    }
    // Q(z) = ½ Q_Γ(½, z²/2) for z ≥ 0.
    let half = 0.5 * reg_upper_gamma(0.5, 0.5 * z * z).expect("finite argument");
    if z >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Acklam's rational approximation of the lower normal quantile, ~1e-9 relative.
fn normal_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Inverse of the standard normal tail: returns `z` with `Q(z) = p`.
pub fn inv_qfunc(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("inv_qfunc", format!("p = {p} must lie in (0, 1)")));
    }
    if p > 0.5 {
        return inv_qfunc(1.0 - p).map(|z| -z);
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut z = -normal_quantile_guess(p);
    // Halley refinement on Q(z) - p.
    for _ in 0..8 {
        let e = normal_tail(z) - p;
        let u = e / normal_pdf(z);
        let step = u / (1.0 + 0.5 * z * u);
        z += step;
        if step.abs() <= 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    Ok(z)
}
