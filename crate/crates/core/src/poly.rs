//! Polynomial roots through companion-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest degree handled by [`roots`].
pub const MAX_DEGREE: usize = 16;

/// Evaluates `sum_k c[k] z^k` (ascending coefficients) and its derivative.
pub fn eval_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

/// All complex roots of the polynomial with ascending coefficients `c`.
///
/// Leading zero coefficients are dropped. Eigenvalues of the companion
/// matrix are refined by a few Newton steps on the original polynomial.
pub fn roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && c[deg] == Complex64::new(0.0, 0.0) {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg > MAX_DEGREE {
        return Err(Error::invalid(format!("polynomial degree {deg} exceeds {MAX_DEGREE}")));
    }
    if deg == 1 {
        return Ok(vec![-c[0] / c[1]]);
    }
    // Cyclic companion matrices (z^n - 1) stall the QR iteration; retry in a
    // shifted variable.
    let shifts = [Complex64::new(0.0, 0.0), Complex64::new(0.3271, 0.1173)];
    let mut eig = None;
    for s in shifts {
        let shifted = taylor_shift(&c[..=deg], s);
        if let Some(e) = companion_eigenvalues(&shifted) {
            eig = Some(e.into_iter().map(|z| z + s).collect::<Vec<_>>());
            break;
        }
    }
    let eig = eig.ok_or(Error::NonConvergence { solver: "companion eigenvalues", iterations: 0, residual: f64::NAN })?;
    let coeffs = &c[..=deg];
    Ok(eig
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..3 {
                let (p, dp) = eval_with_derivative(coeffs, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                // Keep the eigenvalue if Newton wanders (clustered roots).
                if !step.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
                    break;
                }
                z -= step;
            }
            z
        })
        .collect())
}

/// Coefficients of `p(z + s)`.
fn taylor_shift(c: &[Complex64], s: Complex64) -> Vec<Complex64> {
    let mut out = c.to_vec();
    if s == Complex64::new(0.0, 0.0) {
        return out;
    }
    let n = out.len();
    for k in 0..n - 1 {
        for j in (k..n - 1).rev() {
            let hi = out[j + 1];
            out[j] += s * hi;
        }
    }
    out
}

fn companion_eigenvalues(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = c.len() - 1;
    let lead = c[deg];
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let schur = nalgebra::Schur::try_new(comp, f64::EPSILON, 200 * deg)?;
    Some(schur.eigenvalues()?.iter().copied().collect())
}

/// Real-coefficient convenience wrapper.
pub fn real_roots_of(c: &[f64]) -> Result<Vec<Complex64>> {
    let cc: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    roots(&cc)
}
