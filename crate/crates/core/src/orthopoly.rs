//! Moments, orthogonal polynomials, Jacobi recurrence coefficients and
//! resolvent functions for the equilibrium measure of a composition tower.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::poly::Polynomial;
use crate::scalar::{Coeff, RealScalar, CQ, Q};
use crate::sequence::{CompositionTower, RegularSequenceSpec};

/// Moments `c_0 .. c_{D_l - 1}` of the equilibrium measure, obtained from the
/// root power sums of `F_l`; `c_0 = 1` since the measure has unit mass.
#[derive(Clone, Debug)]
pub struct MomentTable<S: Coeff> {
    pub level: usize,
    pub moments: Vec<S>,
}

impl<S: Coeff> MomentTable<S> {
    pub fn c(&self, k: usize) -> &S {
        &self.moments[k]
    }

    pub fn max_index(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.moments.iter().map(|c| c.to_c64()).collect()
    }
}

impl MomentTable<CQ> {
    /// Real parts, failing if any moment has a nonzero imaginary part.
    pub fn real_moments(&self) -> Result<Vec<Q>> {
        self.moments
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.im.is_zero() {
                    Ok(c.re.clone())
                } else {
                    Err(Error::precondition(format!(
                        "moment c_{k} has nonzero imaginary part; the set is not real"
                    )))
                }
            })
            .collect()
    }
}

impl MomentTable<Complex64> {
    pub fn real_moments(&self, tol: f64) -> Result<Vec<f64>> {
        self.moments
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.im.abs() <= tol * c.re.abs().max(1.0) {
                    Ok(c.re)
                } else {
                    Err(Error::precondition(format!(
                        "moment c_{k} has imaginary part {} beyond tolerance",
                        c.im
                    )))
                }
            })
            .collect()
    }
}

/// Moments through Theorem-style power sums: `c_k = s_k(F_l) / D_l` for
/// `1 <= k <= D_l - 1`. The composition `F_l` is materialized exactly (the
/// generator coefficients are exact rationals) and then mapped into the
/// requested scalar domain before the Newton recursion runs there.
pub fn moments<S: Coeff>(tower: &CompositionTower, l: usize) -> Result<MomentTable<S>> {
    let f_l = tower.exact_level(l)?;
    let p: Polynomial<S> = f_l.map(S::from_cq);
    let dl = p.degree();
    let sums = p.power_sums(dl - 1)?;
    let d = S::from_int(dl as i64);
    let mut moments = Vec::with_capacity(dl);
    moments.push(S::one());
    for k in 1..dl {
        moments.push(sums.s(k).clone() / d.clone());
    }
    Ok(MomentTable { level: l, moments })
}

/// An explicitly known monic orthogonal polynomial (index 1 or `D_l`).
#[derive(Clone, Debug)]
pub struct OrthogonalPolynomialExplicit {
    pub index: BigUint,
    pub polynomial: Polynomial<CQ>,
}

/// `P_1(z) = z + (1/d_1) a_{1,d_1-1} / a_{1,d_1}`.
pub fn explicit_p1(spec: &RegularSequenceSpec) -> Result<OrthogonalPolynomialExplicit> {
    let f1 = spec.generator_exact(1)?;
    let d1 = f1.degree();
    let shift = f1.coeff(d1 - 1)
        / (CQ::from_int(d1 as i64) * f1.leading().clone());
    Ok(OrthogonalPolynomialExplicit {
        index: BigUint::one(),
        polynomial: Polynomial::new(vec![shift, CQ::one()])?,
    })
}

/// `P_{D_l}(z) = (F_l(z) + (1/d_{l+1}) a_{l+1,d-1}/a_{l+1,d}) / lead(F_l)`.
pub fn explicit_p_block(tower: &CompositionTower, l: usize) -> Result<OrthogonalPolynomialExplicit> {
    let f_l = tower.exact_level(l)?;
    let next = tower.spec().generator_exact(l + 1)?;
    let d_next = next.degree();
    let shift = next.coeff(d_next - 1)
        / (CQ::from_int(d_next as i64) * next.leading().clone());
    let lead_inv = CQ::one() / f_l.leading().clone();
    let poly = f_l.add_scalar(&shift).scale(&lead_inv);
    Ok(OrthogonalPolynomialExplicit {
        index: tower.cumulative_degree(l)?,
        polynomial: poly,
    })
}

/// `|∫ poly(z) conj(z^k) dm|` for `k = 0..=max_k`: the quadrature oracle for
/// the explicit orthogonality identities.
pub fn orthogonality_residual(
    poly: &Polynomial<Complex64>,
    m: &DiscreteMeasure,
    max_k: usize,
) -> Vec<f64> {
    let w = m.weight();
    let mut acc = vec![Complex64::zero(); max_k + 1];
    for z in m.points() {
        let pv = poly.evaluate(z);
        let mut zk = Complex64::new(1.0, 0.0);
        for a in acc.iter_mut() {
            *a += pv * zk.conj() * w;
            zk *= z;
        }
    }
    acc.into_iter().map(|v| v.norm()).collect()
}

/// Jacobi recurrence data `(a_n, b_n)` for
/// `P_{n+1}(x) = (x - b_{n+1}) P_n(x) - a_n^2 P_{n-1}(x)`, with the Hankel
/// determinants of the moment matrix. In an exact domain everything here is
/// exact; `a_n` itself may be irrational, so the squares are stored.
#[derive(Clone, Debug)]
pub struct JacobiCoefficients<R: RealScalar> {
    /// `a_n^2` for `n = 1..=N`.
    pub a_sq: Vec<R>,
    /// `b_n` for `n = 1..=N`.
    pub b: Vec<R>,
    /// Hankel determinants `det (c_{i+j})_{i,j=0..n}` for `n = 0..=N`.
    pub hankel_dets: Vec<R>,
}

impl<R: RealScalar> JacobiCoefficients<R> {
    pub fn len(&self) -> usize {
        self.a_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_sq.is_empty()
    }

    pub fn a_f64(&self) -> Vec<f64> {
        self.a_sq.iter().map(|v| v.to_f64().sqrt()).collect()
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(|v| v.to_f64()).collect()
    }
}

/// Recurrence coefficients from moments `c_0 .. c_{2N}` through the unit
/// triangular factorization `H = L D L^T` of the moment matrix: the pivots
/// are Hankel determinant ratios, so `a_n^2 = d_n / d_{n-1}` and
/// `b_{n+1} = L[n+1][n] - L[n][n-1]` — no square roots, hence exact in the
/// rational domain.
pub fn jacobi_from_moments<R: RealScalar>(c: &[R], n_pairs: usize) -> Result<JacobiCoefficients<R>> {
    if n_pairs < 1 {
        return Err(Error::precondition("need at least one recurrence pair"));
    }
    if c.len() < 2 * n_pairs + 1 {
        return Err(Error::precondition(format!(
            "need moments c_0..c_{} for {n_pairs} pairs, got {} entries",
            2 * n_pairs,
            c.len()
        )));
    }
    let m = n_pairs;
    let mut l = vec![vec![R::zero(); m + 1]; m + 1];
    let mut d = vec![R::zero(); m + 1];
    for i in 0..=m {
        let mut di = c[2 * i].clone();
        for k in 0..i {
            di = di - l[i][k].clone() * l[i][k].clone() * d[k].clone();
        }
        if !di.is_strictly_positive() {
            return Err(Error::NotPositiveDefinite { order: i });
        }
        d[i] = di;
        for j in (i + 1)..=m {
            let mut v = c[i + j].clone();
            for k in 0..i {
                v = v - l[j][k].clone() * l[i][k].clone() * d[k].clone();
            }
            l[j][i] = v / d[i].clone();
        }
        l[i][i] = R::one();
    }
    let mut a_sq = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for n in 1..=m {
        a_sq.push(d[n].clone() / d[n - 1].clone());
    }
    for k in 0..m {
        let t1 = l[k + 1][k].clone();
        let t0 = if k >= 1 { l[k][k - 1].clone() } else { R::zero() };
        b.push(t1 - t0);
    }
    let mut hankel = Vec::with_capacity(m + 1);
    let mut prod = R::one();
    for dk in d.iter() {
        prod = prod * dk.clone();
        hankel.push(prod.clone());
    }
    Ok(JacobiCoefficients {
        a_sq,
        b,
        hankel_dets: hankel,
    })
}

/// The monic degree-`n` polynomial generated by the three-term recurrence.
pub fn monic_from_recurrence<R: RealScalar>(a_sq: &[R], b: &[R], n: usize) -> Result<Vec<R>> {
    if n > b.len() || (n >= 2 && n - 1 > a_sq.len()) {
        return Err(Error::precondition(format!(
            "recurrence data too short for degree {n}"
        )));
    }
    let mut p_prev = vec![R::one()]; // P_0
    if n == 0 {
        return Ok(p_prev);
    }
    let mut p = vec![-b[0].clone(), R::one()]; // P_1
    for k in 2..=n {
        // P_k = (x - b_k) P_{k-1} - a_{k-1}^2 P_{k-2}
        let mut next = vec![R::zero(); k + 1];
        for (j, v) in p.iter().enumerate() {
            next[j + 1] = next[j + 1].clone() + v.clone();
            next[j] = next[j].clone() - b[k - 1].clone() * v.clone();
        }
        for (j, v) in p_prev.iter().enumerate() {
            next[j] = next[j].clone() - a_sq[k - 2].clone() * v.clone();
        }
        p_prev = p;
        p = next;
    }
    Ok(p)
}

/// A truncated resolvent (Cauchy transform) evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ResolventEvaluation {
    pub z: Complex64,
    pub value: Complex64,
    pub truncation: usize,
    /// Geometric tail bound `(M/|z|)^{T+1} / (|z| - M)`.
    pub tail_bound: f64,
}

/// `R(z) = -sum_{n=0..T} c_n z^{-(n+1)}`, valid for `|z|` above the support
/// radius `M`.
pub fn resolvent(
    moments: &[Complex64],
    z: Complex64,
    truncation: usize,
    support_radius: f64,
) -> Result<ResolventEvaluation> {
    let abs = z.norm();
    if abs <= support_radius {
        return Err(Error::domain(format!(
            "|z| = {abs} is not above the support radius {support_radius}"
        )));
    }
    if truncation + 1 > moments.len() {
        return Err(Error::precondition(format!(
            "truncation {truncation} needs {} moments, got {}",
            truncation + 1,
            moments.len()
        )));
    }
    let zinv = Complex64::new(1.0, 0.0) / z;
    let mut acc = Complex64::zero();
    let mut p = zinv;
    for c in moments.iter().take(truncation + 1) {
        acc -= c * p;
        p *= zinv;
    }
    let ratio = support_radius / abs;
    let tail = ratio.powi(truncation as i32 + 1) / (abs - support_radius);
    Ok(ResolventEvaluation {
        z,
        value: acc,
        truncation,
        tail_bound: tail,
    })
}

/// Residual of the resolvent self-similarity relation
/// `R(z) = R_shifted(F_k(z)) F_k'(z) / D_k`, with the shifted-sequence
/// moment table built at the same level. Depth `k = 0` is trivially zero.
pub fn resolvent_functional_check(
    tower: &CompositionTower,
    z: Complex64,
    k: usize,
    level: usize,
    truncation: usize,
    support_radius: f64,
) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let base_moments: MomentTable<Complex64> = moments(tower, level)?;
    let base = resolvent(&base_moments.moments, z, truncation, support_radius)?;
    let shifted_tower = CompositionTower::with_options(tower.spec().shifted(k)?, *tower.options())?;
    let shifted_moments: MomentTable<Complex64> = moments(&shifted_tower, level)?;
    let (fk, dfk) = tower.eval_with_derivative(z, k)?;
    let shifted = resolvent(&shifted_moments.moments, fk, truncation, support_radius)?;
    let dk = tower.cumulative_degree_f64(k);
    Ok((base.value - shifted.value * dfk / dk).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::k1_gamma::GammaSequence;
    use crate::measure::{default_anchor, preimage_measure};
    use crate::poly::Polynomial;
    use crate::scalar::{cq_from_rational, parse_rational};
    use crate::sequence::TailRule;

    fn gamma_tower(g: &str) -> CompositionTower {
        GammaSequence::new(vec![parse_rational(g).unwrap()], TailRule::RepeatLast)
            .unwrap()
            .tower()
            .unwrap()
    }

    fn autonomous_tower(coeffs: &[i64]) -> CompositionTower {
        let p: Polynomial<CQ> = Polynomial::from_ints(coeffs);
        CompositionTower::new(RegularSequenceSpec::autonomous(p).unwrap()).unwrap()
    }

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn p1_examples() {
        // f = z^2 + c: P_1 = z
        let t = autonomous_tower(&[1, 0, 1]);
        let p1 = explicit_p1(t.spec()).unwrap();
        assert_eq!(p1.polynomial, Polynomial::from_ints(&[0, 1]));

        // f = 2z^2 + 4z + 1: P_1 = z + 1
        let t = autonomous_tower(&[1, 4, 2]);
        let p1 = explicit_p1(t.spec()).unwrap();
        assert_eq!(p1.polynomial, Polynomial::from_ints(&[1, 1]));

        // f = z^3 - 3z^2 + 1: P_1 = z - 1
        let t = autonomous_tower(&[1, 0, -3, 1]);
        let p1 = explicit_p1(t.spec()).unwrap();
        assert_eq!(p1.polynomial, Polynomial::from_ints(&[-1, 1]));
    }

    #[test]
    fn p_block_examples() {
        // gamma = 1/4, l = 2: P_4 = x^4 - x^2 + 1/8
        let t = gamma_tower("1/4");
        let p4 = explicit_p_block(&t, 2).unwrap();
        let want = Polynomial::new(vec![
            cq_from_rational(q(1, 8)),
            CQ::zero(),
            cq_from_rational(q(-1, 1)),
            CQ::zero(),
            CQ::one(),
        ])
        .unwrap();
        assert_eq!(p4.polynomial, want);
        assert_eq!(p4.index, BigUint::from(4u32));

        // all z^2, l = 3: P_8 = z^8
        let p: Polynomial<CQ> = Polynomial::from_ints(&[0, 0, 1]);
        let t = CompositionTower::new(RegularSequenceSpec::autonomous(p).unwrap()).unwrap();
        let p8 = explicit_p_block(&t, 3).unwrap();
        assert_eq!(p8.polynomial, Polynomial::from_ints(&[0, 0, 0, 0, 0, 0, 0, 0, 1]));

        // autonomous z^2 + c, l = 1: P_2 = z^2 + c
        let t = autonomous_tower(&[-2, 0, 1]);
        let p2 = explicit_p_block(&t, 1).unwrap();
        assert_eq!(p2.polynomial, Polynomial::from_ints(&[-2, 0, 1]));
    }

    #[test]
    fn p_block_beyond_cap_directs_to_tower() {
        let t = gamma_tower("1/4");
        let err = explicit_p_block(&t, 30).unwrap_err();
        assert!(matches!(err, Error::ComposeCapExceeded { .. }));
    }

    #[test]
    fn moments_chebyshev_exact() {
        let t = gamma_tower("1/4");
        let mt: MomentTable<CQ> = moments(&t, 2).unwrap();
        assert_eq!(mt.c(0), &CQ::one());
        assert_eq!(mt.c(1), &CQ::zero());
        assert_eq!(mt.c(2), &cq_from_rational(q(1, 2)));
        assert_eq!(mt.c(3), &CQ::zero());

        let mt: MomentTable<CQ> = moments(&t, 3).unwrap();
        assert_eq!(mt.c(4), &cq_from_rational(q(3, 8)));
        assert_eq!(mt.c(6), &cq_from_rational(q(5, 16)));
    }

    #[test]
    fn moments_z2_all_zero() {
        let p: Polynomial<CQ> = Polynomial::from_ints(&[0, 0, 1]);
        let t = CompositionTower::new(RegularSequenceSpec::autonomous(p).unwrap()).unwrap();
        let mt: MomentTable<CQ> = moments(&t, 3).unwrap();
        for k in 1..=7 {
            assert!(mt.c(k).is_zero());
        }
    }

    #[test]
    fn moment_consistency_across_levels() {
        let t = gamma_tower("1/4");
        let m3: MomentTable<CQ> = moments(&t, 3).unwrap();
        let m4: MomentTable<CQ> = moments(&t, 4).unwrap();
        for k in 0..=7 {
            assert_eq!(m3.c(k), m4.c(k));
        }
    }

    #[test]
    fn jacobi_arcsine_exact() {
        let t = gamma_tower("1/4");
        let mt: MomentTable<CQ> = moments(&t, 4).unwrap();
        let real = mt.real_moments().unwrap();
        let jc = jacobi_from_moments(&real, 6).unwrap();
        assert_eq!(jc.a_sq[0], q(1, 2));
        for n in 1..6 {
            assert_eq!(jc.a_sq[n], q(1, 4));
        }
        for bn in &jc.b {
            assert!(bn.is_zero());
        }
        for h in &jc.hankel_dets {
            assert!(h.is_strictly_positive());
        }
    }

    #[test]
    fn jacobi_interval_minus2_2_float() {
        let t = autonomous_tower(&[-2, 0, 1]);
        let mt: MomentTable<Complex64> = moments(&t, 4).unwrap();
        let real = mt.real_moments(1e-12).unwrap();
        let jc = jacobi_from_moments(&real, 6).unwrap();
        assert!((jc.a_sq[0] - 2.0).abs() < 1e-10);
        for n in 1..6 {
            assert!((jc.a_sq[n].sqrt() - 1.0).abs() < 1e-10);
        }
        for bn in &jc.b {
            assert!(bn.abs() < 1e-10);
        }
    }

    #[test]
    fn non_positive_definite_reported() {
        // complex-supported measure: unit circle (all moments vanish)
        let p: Polynomial<CQ> = Polynomial::from_ints(&[0, 0, 1]);
        let t = CompositionTower::new(RegularSequenceSpec::autonomous(p).unwrap()).unwrap();
        let mt: MomentTable<CQ> = moments(&t, 3).unwrap();
        let real = mt.real_moments().unwrap();
        let err = jacobi_from_moments(&real, 3).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn recurrence_reconstruction_matches_explicit() {
        let t = gamma_tower("1/4");
        let mt: MomentTable<CQ> = moments(&t, 4).unwrap();
        let real = mt.real_moments().unwrap();
        let jc = jacobi_from_moments(&real, 4).unwrap();
        let p4 = monic_from_recurrence(&jc.a_sq, &jc.b, 4).unwrap();
        let explicit = explicit_p_block(&t, 2).unwrap().polynomial;
        for (j, c) in p4.iter().enumerate() {
            assert_eq!(&explicit.coeff(j).re, c);
            assert!(explicit.coeff(j).im.is_zero());
        }
    }

    #[test]
    fn orthogonality_residual_oracle() {
        let t = gamma_tower("1/4");
        let a = Complex64::new(default_anchor(&t), 0.0);
        let m = preimage_measure(&t, a, 10).unwrap();
        let p4 = explicit_p_block(&t, 2).unwrap().polynomial.to_c64();
        let res = orthogonality_residual(&p4, &m, 3);
        for r in &res {
            assert!(*r < 1e-3, "residual {r}");
        }
        // P_1 = z against the unit-circle measure
        let pz: Polynomial<CQ> = Polynomial::from_ints(&[0, 0, 1]);
        let tz = CompositionTower::new(RegularSequenceSpec::autonomous(pz).unwrap()).unwrap();
        let az = Complex64::new(default_anchor(&tz), 0.0);
        let mz = preimage_measure(&tz, az, 10).unwrap();
        let p1: Polynomial<Complex64> = Polynomial::from_ints(&[0, 1]);
        assert!(orthogonality_residual(&p1, &mz, 0)[0] < 1e-12);
        // non-orthogonal probe z^4 against the arcsine approximant: ~ c_4 = 3/8
        let probe: Polynomial<Complex64> = Polynomial::from_ints(&[0, 0, 0, 0, 1]);
        let res = orthogonality_residual(&probe, &m, 0);
        assert!((res[0] - 0.375).abs() < 1e-3, "got {}", res[0]);
    }

    #[test]
    fn resolvent_arcsine() {
        let t = gamma_tower("1/4");
        let mt: MomentTable<CQ> = moments(&t, 6).unwrap();
        let c = mt.to_c64();
        let r = resolvent(&c, Complex64::new(2.0, 0.0), 30, 1.0).unwrap();
        let want = -1.0 / 3.0_f64.sqrt();
        assert!((r.value.re - want).abs() < 1e-8);
        assert!(r.value.im.abs() < 1e-12);
        assert!(r.tail_bound < 1e-8);

        // c_0 dominance: value * (-z) -> 1 as z -> infinity
        let far = resolvent(&c, Complex64::new(1e6, 0.0), 10, 1.0).unwrap();
        assert!(((far.value * Complex64::new(-1e6, 0.0)).re - 1.0).abs() < 1e-5);

        // symmetric set: purely imaginary z gives purely imaginary value
        let iy = resolvent(&c, Complex64::new(0.0, 2.5), 30, 1.0).unwrap();
        assert!(iy.value.re.abs() < 1e-14);

        assert!(resolvent(&c, Complex64::new(0.5, 0.0), 10, 1.0).is_err());
    }

    #[test]
    fn resolvent_functional_checks() {
        // autonomous z^2 - 2 at z = 3, k = 1 (the classical functional equation)
        let t = autonomous_tower(&[-2, 0, 1]);
        let r = resolvent_functional_check(&t, Complex64::new(3.0, 0.0), 1, 6, 40, 2.0).unwrap();
        assert!(r < 1e-6, "residual {r}");

        let t = gamma_tower("1/4");
        let r = resolvent_functional_check(&t, Complex64::new(2.0, 0.0), 1, 6, 40, 1.0).unwrap();
        assert!(r < 1e-6, "residual {r}");

        let r = resolvent_functional_check(&t, Complex64::new(2.0, 0.0), 0, 6, 40, 1.0).unwrap();
        assert_eq!(r, 0.0);
    }
}
