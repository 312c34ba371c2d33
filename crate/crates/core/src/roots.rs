//! Complex polynomial root extraction: companion-matrix eigenvalues through a
//! shifted Hessenberg QR iteration, followed by one damped Newton correction
//! per root against the original polynomial.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// All roots of `p` counted with multiplicity, in no particular order.
pub fn polynomial_roots(p: &Polynomial<Complex64>) -> Result<Vec<Complex64>> {
    if p.degree() == 0 {
        return Err(Error::precondition("root finding requires degree >= 1"));
    }
    if p.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::RootFinding {
            level: 0,
            target: "-".into(),
            detail: "non-finite coefficients".into(),
        });
    }
    let mut coeffs: Vec<Complex64> = p.coeffs().to_vec();
    let mut roots = Vec::with_capacity(p.degree());
    // exact zero roots deflate for free
    while coeffs.len() > 1 && coeffs[0].is_zero() {
        roots.push(Complex64::zero());
        coeffs.remove(0);
    }
    match coeffs.len() - 1 {
        0 => {}
        1 => roots.push(-coeffs[0] / coeffs[1]),
        2 => roots.extend(quadratic_roots(coeffs[0], coeffs[1], coeffs[2])),
        _ => roots.extend(companion_eigenvalues(&coeffs)?),
    }
    let dp = p.derivative()?;
    for r in roots.iter_mut() {
        *r = polish_root(p, &dp, *r);
    }
    Ok(roots)
}

/// Roots of `c2 z^2 + c1 z + c0` by the cancellation-safe quadratic formula.
fn quadratic_roots(c0: Complex64, c1: Complex64, c2: Complex64) -> [Complex64; 2] {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    let mut s = disc.sqrt();
    if (c1.conj() * s).re < 0.0 {
        s = -s;
    }
    let q = -(c1 + s) * 0.5;
    if q.is_zero() {
        // c1 = c0 = 0 up to the branch choice
        [Complex64::zero(), -c1 / c2]
    } else {
        [q / c2, c0 / q]
    }
}

fn companion_eigenvalues(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let mut h = vec![Complex64::zero(); d * d];
    for i in 0..d {
        h[i * d + (d - 1)] = -coeffs[i] / lead;
        if i + 1 < d {
            h[(i + 1) * d + i] = Complex64::new(1.0, 0.0);
        }
    }
    hessenberg_qr_eigenvalues(h, d)
}

/// Eigenvalues of an upper Hessenberg complex matrix by single-shift QR with
/// Givens rotations. Sized for the small dense blocks of level-wise solves.
fn hessenberg_qr_eigenvalues(mut h: Vec<Complex64>, n: usize) -> Result<Vec<Complex64>> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut eig = vec![Complex64::zero(); n];
    if n == 1 {
        eig[0] = h[0];
        return Ok(eig);
    }
    let anorm: f64 = (0..n)
        .map(|i| (0..n).map(|j| h[idx(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let negligible = |h: &[Complex64], i: usize| -> bool {
        let scale = h[idx(i - 1, i - 1)].norm() + h[idx(i, i)].norm();
        let scale = if scale == 0.0 { anorm } else { scale };
        h[idx(i, i - 1)].norm() <= f64::EPSILON * scale
    };

    let mut hi = n - 1;
    let mut block_iters = 0usize;
    let mut total_iters = 0usize;
    let max_total = 90 * n;
    loop {
        // deflate converged 1x1 tails
        while hi > 0 && negligible(&h, hi) {
            h[idx(hi, hi - 1)] = Complex64::zero();
            eig[hi] = h[idx(hi, hi)];
            hi -= 1;
            block_iters = 0;
        }
        if hi == 0 {
            eig[0] = h[0];
            return Ok(eig);
        }
        // active block [lo..=hi]
        let mut lo = hi;
        while lo > 0 && !negligible(&h, lo) {
            lo -= 1;
        }
        if lo > 0 {
            h[idx(lo, lo - 1)] = Complex64::zero();
        }
        if hi - lo == 1 {
            let [e1, e2] = eig_2x2(
                h[idx(lo, lo)],
                h[idx(lo, hi)],
                h[idx(hi, lo)],
                h[idx(hi, hi)],
            );
            eig[lo] = e1;
            eig[hi] = e2;
            if lo == 0 {
                return Ok(eig);
            }
            hi = lo - 1;
            block_iters = 0;
            continue;
        }

        block_iters += 1;
        total_iters += 1;
        if total_iters > max_total {
            return Err(Error::RootFinding {
                level: 0,
                target: "-".into(),
                detail: format!("QR iteration did not converge within {max_total} sweeps"),
            });
        }
        let shift = if block_iters % 12 == 0 {
            // exceptional shift to break symmetry stalls
            h[idx(hi, hi)] + Complex64::new(0.75 * h[idx(hi, hi - 1)].norm(), 0.0)
        } else {
            let [e1, e2] = eig_2x2(
                h[idx(hi - 1, hi - 1)],
                h[idx(hi - 1, hi)],
                h[idx(hi, hi - 1)],
                h[idx(hi, hi)],
            );
            let d = h[idx(hi, hi)];
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };

        for i in lo..=hi {
            h[idx(i, i)] -= shift;
        }
        // QR factorization of the shifted block by Givens rotations
        let mut rotations: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let a = h[idx(i, i)];
            let b = h[idx(i + 1, i)];
            let (c, s) = givens(a, b);
            rotations.push((c, s));
            for j in lo..=hi {
                let hi_j = h[idx(i, j)];
                let hn_j = h[idx(i + 1, j)];
                h[idx(i, j)] = c * hi_j + s * hn_j;
                h[idx(i + 1, j)] = -s.conj() * hi_j + c * hn_j;
            }
        }
        // form RQ and restore the shift
        for (k, &(c, s)) in rotations.iter().enumerate() {
            let i = lo + k;
            for r in lo..=(i + 1).min(hi) {
                let v0 = h[idx(r, i)];
                let v1 = h[idx(r, i + 1)];
                h[idx(r, i)] = c * v0 + s.conj() * v1;
                h[idx(r, i + 1)] = -s * v0 + c * v1;
            }
        }
        for i in lo..=hi {
            h[idx(i, i)] += shift;
        }
    }
}

/// Unitary rotation [[c, s], [-conj(s), c]] (c real) sending (a, b) to (r, 0).
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::zero());
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let scale = na.max(nb);
    let ra = na / scale;
    let rb = nb / scale;
    let h = scale * (ra * ra + rb * rb).sqrt();
    let c = na / h;
    let s = b.conj() * (a / na) / h;
    (c, s)
}

fn eig_2x2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let t = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    [t + disc, t - disc]
}

/// One damped Newton correction; keeps the iterate only when the residual
/// does not grow.
fn polish_root(p: &Polynomial<Complex64>, dp: &Polynomial<Complex64>, x: Complex64) -> Complex64 {
    let fx = p.evaluate(&x);
    if !fx.re.is_finite() || !fx.im.is_finite() || fx.is_zero() {
        return x;
    }
    let dx = dp.evaluate(&x);
    if dx.is_zero() || !dx.re.is_finite() || !dx.im.is_finite() {
        return x;
    }
    let mut step = fx / dx;
    for _ in 0..5 {
        let cand = x - step;
        let fc = p.evaluate(&cand);
        if fc.norm() <= fx.norm() {
            return cand;
        }
        step *= 0.5;
    }
    x
}
