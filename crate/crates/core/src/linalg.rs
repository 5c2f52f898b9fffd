//! Deterministic linear solvers used by the scheme.
//!
//! All reductions run in index order, so repeated calls on identical inputs
//! return bitwise-identical results.

use crate::error::{Error, Result};

/// Relative tolerance for solves inside the time stepper.
pub const SCHEME_TOL: f64 = 1e-12;
/// Relative tolerance for validation cross-checks.
pub const VALIDATION_TOL: f64 = 1e-10;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

pub(crate) fn remove_mean(a: &mut [f64]) {
    let m = mean(a);
    a.iter_mut().for_each(|x| *x -= m);
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `‖Ax − b‖ / ‖b‖` of the returned iterate.
    pub residual: f64,
}

/// Conjugate gradient for a symmetric positive (semi)definite map, starting from zero.
pub fn conjugate_gradient<A>(apply: A, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    A: Fn(&[f64], &mut [f64]),
{
    conjugate_gradient_from(apply, b, None, tol, max_iter)
}

/// Conjugate gradient with an optional initial guess.
///
/// On non-convergence the error carries the best iterate found.
pub fn conjugate_gradient_from<A>(
    apply: A,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    if !b_norm.is_finite() {
        return Err(Error::NotANumber { iteration: 0 });
    }

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut ap = vec![0.0; n];
    let mut r = b.to_vec();
    if x0.is_some() {
        apply(&x, &mut ap);
        r.iter_mut().zip(&ap).for_each(|(ri, a)| *ri -= a);
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut best = (rr.sqrt() / b_norm, x.clone());
    let mut iterations = 0;

    while rr.sqrt() / b_norm > tol {
        if iterations == max_iter {
            let (residual, best) = best;
            return Err(Error::NotConverged {
                iterations,
                residual,
                best,
            });
        }
        iterations += 1;
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NotANumber {
                iteration: iterations,
            });
        }
        if pap <= 0.0 {
            // Direction in the null space: the right-hand side is not in the range.
            return Err(Error::Singular(format!(
                "non-positive curvature {pap:e} at iteration {iterations}"
            )));
        }
        let alpha = rr / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, a)| *ri -= alpha * a);
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(Error::NotANumber {
                iteration: iterations,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        if rr.sqrt() / b_norm < best.0 {
            best = (rr.sqrt() / b_norm, x.clone());
        }
    }

    // Report the true residual rather than the recursively updated one.
    apply(&x, &mut ap);
    let residual = ap
        .iter()
        .zip(b)
        .map(|(a, bi)| (a - bi) * (a - bi))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    Ok(CgOutcome {
        x,
        iterations,
        residual,
    })
}

/// Tridiagonal matrix, optionally with periodic corner entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    /// `(top_right, bottom_left)` = `(A[0][n-1], A[n-1][0])`.
    pub corners: Option<(f64, f64)>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::InvalidInput(format!(
                "tridiagonal bands of lengths ({}, {}, {})",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(TridiagonalSystem {
            sub,
            diag,
            sup,
            corners: None,
        })
    }

    pub fn cyclic(
        sub: Vec<f64>,
        diag: Vec<f64>,
        sup: Vec<f64>,
        top_right: f64,
        bottom_left: f64,
    ) -> Result<Self> {
        let mut sys = Self::new(sub, diag, sup)?;
        sys.corners = Some((top_right, bottom_left));
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.sup[i] * x[i + 1];
            }
            out[i] = s;
        }
        if let Some((tr, bl)) = self.corners {
            if n > 1 {
                out[0] += tr * x[n - 1];
                out[n - 1] += bl * x[0];
            }
        }
    }

    fn norm_inf(&self) -> f64 {
        let n = self.len();
        let (tr, bl) = self.corners.unwrap_or((0.0, 0.0));
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.sup[i].abs();
                }
                if i == 0 {
                    s += tr.abs();
                }
                if i == n - 1 {
                    s += bl.abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Normwise backward error `‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
    pub fn backward_error(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        let r = ax
            .iter()
            .zip(b)
            .fold(0.0_f64, |m, (a, bi)| m.max((a - bi).abs()));
        let scale = self.norm_inf() * norm_inf(x) + norm_inf(b);
        if scale == 0.0 {
            0.0
        } else {
            r / scale
        }
    }

    fn check(&self, x: &[f64], b: &[f64]) -> Result<()> {
        let err = self.backward_error(x, b);
        if err.is_finite() && err <= VALIDATION_TOL {
            Ok(())
        } else {
            Err(Error::Singular(format!(
                "residual check failed (backward error {err:.3e})"
            )))
        }
    }
}

fn thomas_in_place(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut gam = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = diag[0];
    if bet == 0.0 || !bet.is_finite() {
        return Err(Error::ZeroPivot { row: 0 });
    }
    x[0] = rhs[0] / bet;
    for j in 1..n {
        gam[j] = sup[j - 1] / bet;
        bet = diag[j] - sub[j - 1] * gam[j];
        if bet == 0.0 || !bet.is_finite() {
            return Err(Error::ZeroPivot { row: j });
        }
        x[j] = (rhs[j] - sub[j - 1] * x[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        x[j] -= gam[j + 1] * x[j + 1];
    }
    Ok(x)
}

/// Thomas elimination for a non-cyclic tridiagonal system.
pub fn thomas_solve(sys: &TridiagonalSystem, b: &[f64]) -> Result<Vec<f64>> {
    if sys.corners.is_some() {
        return Err(Error::InvalidInput(
            "thomas_solve called on a cyclic system".into(),
        ));
    }
    if b.len() != sys.len() {
        return Err(Error::InvalidInput(format!(
            "rhs length {} for system of size {}",
            b.len(),
            sys.len()
        )));
    }
    let x = thomas_in_place(&sys.sub, &sys.diag, &sys.sup, b)?;
    sys.check(&x, b)?;
    Ok(x)
}

/// Cyclic tridiagonal solve by a Sherman–Morrison rank-one correction.
pub fn cyclic_thomas_solve(sys: &TridiagonalSystem, b: &[f64]) -> Result<Vec<f64>> {
    let (alpha, beta) = sys.corners.ok_or_else(|| {
        Error::InvalidInput("cyclic_thomas_solve needs corner entries".into())
    })?;
    let n = sys.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "cyclic system of size {n}, need at least 3"
        )));
    }
    if b.len() != n {
        return Err(Error::InvalidInput(format!(
            "rhs length {} for system of size {n}",
            b.len()
        )));
    }

    let gamma = if sys.diag[0] == 0.0 { 1.0 } else { -sys.diag[0] };
    let mut bb = sys.diag.clone();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;

    let x = thomas_in_place(&sys.sub, &bb, &sys.sup, b)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = beta;
    let z = thomas_in_place(&sys.sub, &bb, &sys.sup, &u)?;

    let denom = 1.0 + z[0] + alpha / gamma * z[n - 1];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Singular("cyclic reduced system".into()));
    }
    let factor = (x[0] + alpha / gamma * x[n - 1]) / denom;
    let x: Vec<f64> = x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect();
    sys.check(&x, b)?;
    Ok(x)
}

/// Solves `Dψ = φ` with `⟨ψ, 𝟙⟩ = 0` for a symmetric negative semidefinite `D`
/// whose kernel is spanned by the constants.
///
/// Runs conjugate gradient on `−D` restricted to the mean-zero subspace.
pub fn projected_solve_mean_zero<A>(apply_d: A, phi: &[f64], tol: f64) -> Result<Vec<f64>>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = phi.len();
    let scale = norm2(phi);
    if scale > 0.0 && mean(phi).abs() * (n as f64).sqrt() > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "right-hand side has nonzero mean {:e}",
            mean(phi)
        )));
    }
    let mut rhs: Vec<f64> = phi.iter().map(|v| -v).collect();
    remove_mean(&mut rhs);
    let neg_d = |x: &[f64], out: &mut [f64]| {
        apply_d(x, out);
        out.iter_mut().for_each(|o| *o = -*o);
        remove_mean(out);
    };
    let mut out = conjugate_gradient(neg_d, &rhs, tol, 10 * n.max(1))?;
    remove_mean(&mut out.x);
    Ok(out.x)
}
