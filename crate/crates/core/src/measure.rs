//! Equilibrium-measure approximation by normalized counting measures on
//! tower preimages, with disk-mass and density-integral diagnostics.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::roots::polynomial_roots;
use crate::scalar::cmp_complex;
use crate::sequence::{CompositionTower, RegularityConstants};

/// Default cap on the number of preimage points a measure may hold.
pub const DEFAULT_POINT_CAP: usize = 1 << 20;

/// Whether an anchor satisfies the preimage-convergence condition
/// `|a| A1 (1 - A2/(|a|-1)) > 2` with `|a| > 1`.
#[derive(Clone, Copy, Debug)]
pub struct AnchorCertificate {
    pub a: Complex64,
    pub satisfied: bool,
    /// Left-hand side minus 2; `-inf` when `|a| <= 1`.
    pub margin: f64,
}

pub fn check_anchor(constants: &RegularityConstants, a: Complex64) -> AnchorCertificate {
    let abs = a.norm();
    if abs <= 1.0 {
        return AnchorCertificate {
            a,
            satisfied: false,
            margin: f64::NEG_INFINITY,
        };
    }
    let lhs = abs * constants.a1 * (1.0 - constants.a2 / (abs - 1.0));
    AnchorCertificate {
        a,
        satisfied: lhs > 2.0,
        margin: lhs - 2.0,
    }
}

/// The default anchor: twice the escape radius on the positive real axis.
/// The escape inequality and the anchor condition share the same boundary
/// quadratic, so this always satisfies the anchor condition with margin, and
/// a real positive anchor keeps conjugate-symmetric root sets symmetric.
pub fn default_anchor(tower: &CompositionTower) -> f64 {
    2.0 * tower.escape_radius()
}

/// A weighted point set approximating the equilibrium measure: the `D_k`
/// roots of `F_k(z) = a`, each with weight `1/D_k`.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    points: Vec<Complex64>,
    anchor: Complex64,
    level: usize,
}

impl DiscreteMeasure {
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Uniform weight per point.
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    /// Total mass is one by construction (uniform weights over `D_k` points).
    pub fn total_mass(&self) -> f64 {
        1.0
    }

    pub fn anchor(&self) -> Complex64 {
        self.anchor
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Discrete moment `sum w z^j`.
    pub fn moment(&self, j: usize) -> Complex64 {
        let w = self.weight();
        self.points
            .iter()
            .map(|z| z.powu(j as u32) * w)
            .sum()
    }

    /// Largest point modulus (empirical support radius).
    pub fn support_radius(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Empirical cumulative distribution of the real parts, evaluated at `x`.
    pub fn cdf_re(&self, x: f64) -> f64 {
        let count = self.points.iter().filter(|p| p.re <= x).count();
        count as f64 * self.weight()
    }
}

/// All `D_k` roots of `F_k(z) = a` by level-wise backward solving: the
/// degree-`d_n` factor equations are solved by companion-matrix eigenvalues
/// with one damped polishing step, level by level from `k` down to 1.
/// The output is sorted lexicographically so it is deterministic regardless
/// of the parallel schedule.
pub fn preimage_measure(tower: &CompositionTower, a: Complex64, k: usize) -> Result<DiscreteMeasure> {
    preimage_measure_with_cap(tower, a, k, DEFAULT_POINT_CAP)
}

pub fn preimage_measure_with_cap(
    tower: &CompositionTower,
    a: Complex64,
    k: usize,
    point_cap: usize,
) -> Result<DiscreteMeasure> {
    if k < 1 {
        return Err(Error::precondition("preimage level must be >= 1"));
    }
    let cert = check_anchor(tower.spec().constants(), a);
    if !cert.satisfied {
        return Err(Error::AnchorInvalid {
            a: format!("{a}"),
            margin: cert.margin,
        });
    }
    let dk = tower.cumulative_degree_f64(k);
    if !(dk <= point_cap as f64) {
        return Err(Error::precondition(format!(
            "D_k = {dk:.0} exceeds the point cap {point_cap}"
        )));
    }
    let mut targets = vec![a];
    for level in (1..=k).rev() {
        let f = tower.generator_f64(level)?;
        let solved: Result<Vec<Vec<Complex64>>> = targets
            .par_iter()
            .map(|beta| {
                let mut shifted = f.clone();
                let shifted = {
                    let mut coeffs = shifted.coeffs().to_vec();
                    coeffs[0] -= beta;
                    shifted = crate::poly::Polynomial::new(coeffs)?;
                    shifted
                };
                polynomial_roots(&shifted).map_err(|e| match e {
                    Error::RootFinding { detail, .. } => Error::RootFinding {
                        level,
                        target: format!("{beta}"),
                        detail,
                    },
                    other => other,
                })
            })
            .collect();
        targets = solved?.into_iter().flatten().collect();
    }
    targets.sort_by(cmp_complex);
    Ok(DiscreteMeasure {
        points: targets,
        anchor: a,
        level: k,
    })
}

/// Mass of the open disk `|z - z0| < t` under the measure.
pub fn disk_mass(m: &DiscreteMeasure, z0: Complex64, t: f64) -> f64 {
    let count = m.points().iter().filter(|p| (*p - z0).norm() < t).count();
    count as f64 * m.weight()
}

/// Bracketing pair for the supremum of the Green's function on `|z-z0| = r`:
/// the density integrals `(I_r, 3 I_{4r})` of `t -> mass(D_t(z0))/t` on
/// log-spaced nodes. The lower integration limit is the distance to the
/// nearest point, clamped at `1e-4 r` to keep the log singularity from
/// amplifying discreteness noise.
pub fn density_integral(
    m: &DiscreteMeasure,
    z0: Complex64,
    r: f64,
    quadrature_points: usize,
) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::precondition("density integral needs r in (0, 1)"));
    }
    if quadrature_points < 8 {
        return Err(Error::precondition("need at least 8 quadrature nodes"));
    }
    let mut dists: Vec<f64> = m.points().iter().map(|p| (p - z0).norm()).collect();
    dists.sort_by(f64::total_cmp);
    if dists.first().map(|&d| d > 4.0 * r).unwrap_or(true) {
        return Ok((0.0, 0.0));
    }
    let t_min = (1e-4 * r).max(dists[0]);
    let w = m.weight();
    let mass = |t: f64| -> f64 { dists.partition_point(|&d| d < t) as f64 * w };
    let integrate = |upper: f64| -> f64 {
        if t_min >= upper {
            return 0.0;
        }
        let n = quadrature_points;
        let ratio = (upper / t_min).ln();
        let mut acc = 0.0;
        let mut prev_t = t_min;
        let mut prev_v = mass(t_min) / t_min;
        for i in 1..n {
            let t = t_min * (ratio * i as f64 / (n - 1) as f64).exp();
            let v = mass(t) / t;
            acc += 0.5 * (v + prev_v) * (t - prev_t);
            prev_t = t;
            prev_v = v;
        }
        acc
    };
    Ok((integrate(r), 3.0 * integrate(4.0 * r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::scalar::{parse_rational, Coeff, CQ};
    use crate::sequence::{RegularSequenceSpec, SequenceFamily, TailRule};

    fn z2_tower() -> CompositionTower {
        let p: Polynomial<CQ> = Polynomial::from_ints(&[0, 0, 1]);
        CompositionTower::new(
            RegularSequenceSpec::new(SequenceFamily::Explicit(vec![p]), TailRule::RepeatLast)
                .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn anchor_examples() {
        let c = RegularityConstants {
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
        };
        let cert = check_anchor(&c, Complex64::new(4.0, 0.0));
        assert!(cert.satisfied);
        assert!((cert.margin - 2.0 / 3.0).abs() < 1e-15);

        let cert = check_anchor(&c, Complex64::new(3.0, 0.0));
        assert!(!cert.satisfied);

        let cert = check_anchor(&c, Complex64::new(1.0, 0.0));
        assert!(!cert.satisfied);
        assert_eq!(cert.margin, f64::NEG_INFINITY);
    }

    #[test]
    fn fourth_roots_of_sixteen() {
        let tower = z2_tower();
        let m = preimage_measure(&tower, Complex64::new(16.0, 0.0), 2).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.weight(), 0.25);
        let mut expected = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.0, -2.0),
        ];
        expected.sort_by(cmp_complex);
        for (got, want) in m.points().iter().zip(&expected) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn first_moment_matches_coefficient_ratio() {
        // f = z^2 - 2z + 1/10: mean of every preimage measure is 1
        let f: Polynomial<CQ> = Polynomial::new(vec![
            crate::scalar::cq_from_rational(parse_rational("1/10").unwrap()),
            CQ::from_int(-2),
            CQ::from_int(1),
        ])
        .unwrap();
        let tower = CompositionTower::new(
            RegularSequenceSpec::new(SequenceFamily::Explicit(vec![f]), TailRule::RepeatLast)
                .unwrap(),
        )
        .unwrap();
        let a = Complex64::new(default_anchor(&tower), 0.0);
        for k in 1..=3 {
            let m = preimage_measure(&tower, a, k).unwrap();
            assert!((m.moment(1) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn support_confined_to_anchor_disk() {
        let tower = z2_tower();
        let a = Complex64::new(default_anchor(&tower), 0.0);
        let m = preimage_measure(&tower, a, 8).unwrap();
        assert!(m.support_radius() <= a.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn root_residuals_after_polish() {
        let tower = z2_tower();
        let a = Complex64::new(default_anchor(&tower), 0.0);
        let m = preimage_measure(&tower, a, 10).unwrap();
        for p in m.points().iter().step_by(37) {
            let ev = tower.tower_eval(*p, 10).unwrap();
            let v = ev.value.to_c64().unwrap();
            assert!((v - a).norm() / a.norm() < 1e-6);
        }
    }

    #[test]
    fn disk_mass_on_unit_circle_measure() {
        let tower = z2_tower();
        let a = Complex64::new(default_anchor(&tower), 0.0);
        let m = preimage_measure(&tower, a, 10).unwrap();
        assert_eq!(disk_mass(&m, Complex64::new(0.0, 0.0), 2.0), 1.0);
        // arc-length fraction near z0 = 1
        for t in [0.05_f64, 0.2, 0.5] {
            let got = disk_mass(&m, Complex64::new(1.0, 0.0), t);
            let want = 2.0 / std::f64::consts::PI * (t / 2.0).asin();
            assert!(
                (got - want).abs() < 0.01,
                "t = {t}: got {got}, want {want}"
            );
        }
        assert_eq!(disk_mass(&m, Complex64::new(9.0, 0.0), 0.5), 0.0);
    }

    #[test]
    fn density_integral_degenerate_cases() {
        let tower = z2_tower();
        let a = Complex64::new(default_anchor(&tower), 0.0);
        let m = preimage_measure(&tower, a, 8).unwrap();
        let (lo, hi) = density_integral(&m, Complex64::new(50.0, 0.0), 0.01, 64).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
        assert!(density_integral(&m, Complex64::new(1.0, 0.0), 1.5, 64).is_err());
    }
}
