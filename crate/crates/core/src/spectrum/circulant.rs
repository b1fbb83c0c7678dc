use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::zeta::{hurwitz_zeta, riemann_zeta};
use crate::error::{invalid, Error, Result};

/// Imaginary parts below this (relative to the largest magnitude, floored
/// at one) are treated as rounding noise.
const IMAG_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of the circulant matrix `C[l][l'] = row[(l' - l) mod n]`,
/// `lambda_j = sum_m row[m] omega^(j m)` with `omega = exp(2 pi i / n)`.
pub fn circulant_spectrum(row: &[f64]) -> Result<Vec<Complex64>> {
    if row.is_empty() {
        return Err(invalid("circulant row is empty"));
    }
    let mut buf: Vec<Complex64> = row.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    // rustfft's inverse transform is the unnormalized sum with exp(+2 pi i jm/n)
    FftPlanner::new().plan_fft_inverse(row.len()).process(&mut buf);
    Ok(buf)
}

/// Real eigenvalues of a symmetric circulant matrix, in DFT order.
pub fn circulant_eigenvalues(row: &[f64]) -> Result<Vec<f64>> {
    let spectrum = circulant_spectrum(row)?;
    let scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if let Some(z) = spectrum.iter().find(|z| z.im.abs() > IMAG_TOLERANCE * scale) {
        return Err(Error::Numerical(format!(
            "circulant row is not symmetric: eigenvalue {z} has a non-negligible imaginary part"
        )));
    }
    Ok(spectrum.into_iter().map(|z| z.re).collect())
}

/// How the Bernoulli eigenvalue series are summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesTruncation {
    /// Full infinite series through the Hurwitz zeta function.
    Exact,
    /// Only kernel frequencies `1..=k_max`, matching a kernel built with the
    /// same `k_max`.
    Frequencies(usize),
}

/// Closed-form eigenvalues `lambda*_0 .. lambda*_{n-1}` of the circulant
/// Bernoulli axis block `A_n` with exponent `s = varrho * d`:
///
/// `lambda*_0 = 2 sum_{k>=1} (2 pi k n)^{-s}`,
/// `lambda*_j = sum_{k>=1} [2 pi (k n - j)]^{-s} + sum_{k>=0} [2 pi (k n + j)]^{-s}`.
pub fn bernoulli_eigenvalues(
    varrho: f64,
    d: usize,
    n: usize,
    truncation: SeriesTruncation,
) -> Result<Vec<f64>> {
    let s = varrho * d as f64;
    if d == 0 || !(s > 1.0) {
        return Err(invalid(format!(
            "Bernoulli series diverge unless varrho * d > 1 (varrho={varrho}, d={d})"
        )));
    }
    if n == 0 {
        return Err(invalid("axis count must be positive"));
    }
    match truncation {
        SeriesTruncation::Exact => {
            let base = (2.0 * PI * n as f64).powf(-s);
            let nf = n as f64;
            Ok((0..n)
                .map(|j| {
                    if j == 0 {
                        2.0 * base * riemann_zeta(s)
                    } else {
                        let a = j as f64 / nf;
                        base * (hurwitz_zeta(s, 1.0 - a) + hurwitz_zeta(s, a))
                    }
                })
                .collect())
        }
        SeriesTruncation::Frequencies(k_max) => {
            if k_max == 0 {
                return Err(invalid("k_max must be at least 1"));
            }
            // frequency k contributes to residues k and -k mod n
            let mut out = vec![0.0; n];
            for k in 1..=k_max {
                let c = (2.0 * PI * k as f64).powf(-s);
                out[k % n] += c;
                out[(n - k % n) % n] += c;
            }
            Ok(out)
        }
    }
}

/// Smallest `k` with the integral tail bound
/// `2 (2 pi k n)^{-s} / (s - 1) < rel_tol * lambda*_0`, counted in multiples
/// of `n`. Returned as a kernel-frequency cutoff `k * n`. Useful for sizing
/// a truncated kernel; the exact path does not need it.
pub fn bernoulli_truncation_order(varrho: f64, d: usize, n: usize, rel_tol: f64) -> Result<usize> {
    let s = varrho * d as f64;
    if !(s > 1.0) || n == 0 || !(rel_tol > 0.0) {
        return Err(invalid("invalid truncation request"));
    }
    let nf = n as f64;
    let lambda0 = 2.0 * (2.0 * PI * nf).powf(-s) * riemann_zeta(s);
    // (2 pi k n)^{-s} < rel_tol * lambda0 * (s - 1) / 2
    let bound = rel_tol * lambda0 * (s - 1.0) / 2.0;
    let k = (bound.powf(-1.0 / s) / (2.0 * PI * nf)).ceil();
    if !k.is_finite() || k > 1e15 {
        return Err(invalid("truncation order too large to represent"));
    }
    Ok((k.max(1.0) as usize).saturating_mul(n))
}
