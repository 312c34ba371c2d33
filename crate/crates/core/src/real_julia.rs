//! Admissible polynomials, the three-part symmetry property, and the nested
//! interval construction of real generalized Julia sets
//! `K = intersection of F_n^{-1}([-1,1])`.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::poly::Polynomial;
use crate::roots::polynomial_roots;
use crate::scalar::{Coeff, ExtReal, CQ, Q};
use crate::sequence::CompositionTower;

/// Default cap on intervals per level.
pub const INTERVAL_CAP: usize = 1 << 16;

const REAL_ROOT_IM_TOL: f64 = 1e-9;

/// The three symmetry conditions on an admissible polynomial: preimage of
/// `[-1,1]` inside `[-1,1]`, endpoints mapped to endpoints, and a zero set
/// symmetric about the origin.
#[derive(Clone, Copy, Debug)]
pub struct PropertyA {
    pub preimage_containment: bool,
    pub endpoint_mapping: bool,
    pub symmetric_zeros: bool,
}

impl PropertyA {
    pub fn all(&self) -> bool {
        self.preimage_containment && self.endpoint_mapping && self.symmetric_zeros
    }
}

#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    /// Real zeros, sorted.
    pub zeros: Vec<f64>,
    /// Critical points, sorted.
    pub extrema: Vec<f64>,
    /// `|f(y_i)|` at each critical point.
    pub extremal_values: Vec<f64>,
    pub admissible: bool,
    pub property_a: PropertyA,
    /// Witness of the first admissibility failure, if any.
    pub failure: Option<String>,
}

fn real_coeffs(f: &Polynomial<CQ>) -> Result<Vec<Q>> {
    f.coeffs()
        .iter()
        .map(|c| {
            if c.im.is_zero() {
                Ok(c.re.clone())
            } else {
                Err(Error::precondition("polynomial must have real coefficients"))
            }
        })
        .collect()
}

fn trim_q(v: &mut Vec<Q>) {
    while v.len() > 1 && v.last().map(Zero::is_zero) == Some(true) {
        v.pop();
    }
}

fn derivative_q(p: &[Q]) -> Vec<Q> {
    let mut d: Vec<Q> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| Q::from_integer(j.into()) * c.clone())
        .collect();
    if d.is_empty() {
        d.push(Q::zero());
    }
    trim_q(&mut d);
    d
}

fn poly_rem_q(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut r = a.to_vec();
    trim_q(&mut r);
    let db = b.len() - 1;
    let lead_b = b.last().unwrap().clone();
    while r.len() > 1 && r.len() - 1 >= db {
        let dr = r.len() - 1;
        let factor = r.last().unwrap().clone() / lead_b.clone();
        let shift = dr - db;
        for j in 0..=db {
            let v = r[shift + j].clone() - factor.clone() * b[j].clone();
            r[shift + j] = v;
        }
        // force exact cancellation of the leading term
        r.pop();
        trim_q(&mut r);
        if r.iter().all(Zero::is_zero) {
            return vec![Q::zero()];
        }
    }
    r
}

/// Number of distinct real roots of `p`, by the classical Sturm chain over
/// exact rationals evaluated at minus and plus infinity. Equality of this
/// count with the degree certifies that all roots are real and simple.
pub fn sturm_distinct_real_roots(p: &[Q]) -> usize {
    let mut chain: Vec<Vec<Q>> = Vec::new();
    let mut p0 = p.to_vec();
    trim_q(&mut p0);
    if p0.len() <= 1 {
        return 0;
    }
    let p1 = derivative_q(&p0);
    chain.push(p0);
    chain.push(p1);
    loop {
        let last = &chain[chain.len() - 1];
        if last.len() == 1 {
            break;
        }
        let prev = &chain[chain.len() - 2];
        let mut rem = poly_rem_q(prev, last);
        if rem.iter().all(Zero::is_zero) {
            break;
        }
        for c in rem.iter_mut() {
            *c = -c.clone();
        }
        chain.push(rem);
    }
    let sign_at = |p: &[Q], at_plus: bool| -> i8 {
        let lead = p.last().unwrap();
        if lead.is_zero() {
            return 0;
        }
        let mut s = if lead.is_positive() { 1 } else { -1 };
        if !at_plus && (p.len() - 1) % 2 == 1 {
            s = -s;
        }
        s
    };
    let variations = |at_plus: bool| -> usize {
        let mut count = 0;
        let mut prev: Option<i8> = None;
        for q in &chain {
            let s = sign_at(q, at_plus);
            if s == 0 {
                continue;
            }
            if let Some(p) = prev {
                if p != s {
                    count += 1;
                }
            }
            prev = Some(s);
        }
        count
    };
    variations(false) - variations(true)
}

/// Full admissibility analysis: zeros real and simple, critical points real
/// and distinct, and every extremal value strictly above 1 in modulus.
/// Real-rootedness is certified exactly by Sturm counts; the numeric zeros
/// and extrema fill the report.
pub fn admissibility(f: &Polynomial<CQ>) -> Result<AdmissibilityReport> {
    if f.degree() < 2 {
        return Err(Error::precondition("admissibility needs degree >= 2"));
    }
    let coeffs = real_coeffs(f)?;
    let d = f.degree();
    let f64_poly = f.to_c64();
    let df64 = f64_poly.derivative()?;

    let mut failure: Option<String> = None;

    let distinct_zeros = sturm_distinct_real_roots(&coeffs);
    let zeros_ok = distinct_zeros == d;
    if !zeros_ok {
        failure = Some(format!(
            "only {distinct_zeros} distinct real zeros for degree {d}; zeros are not all real and simple"
        ));
    }
    let dcoeffs = derivative_q(&coeffs);
    let distinct_crit = sturm_distinct_real_roots(&dcoeffs);
    let extrema_ok = distinct_crit == d - 1;
    if extrema_ok == false && failure.is_none() {
        failure = Some(format!(
            "only {distinct_crit} distinct real critical points for degree {d}"
        ));
    }

    let mut zeros: Vec<f64> = polynomial_roots(&f64_poly)?
        .into_iter()
        .filter(|z| z.im.abs() < REAL_ROOT_IM_TOL * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    zeros.sort_by(f64::total_cmp);
    let mut extrema: Vec<f64> = polynomial_roots(&df64)?
        .into_iter()
        .filter(|z| z.im.abs() < REAL_ROOT_IM_TOL * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    extrema.sort_by(f64::total_cmp);

    let extremal_values: Vec<f64> = extrema
        .iter()
        .map(|&y| f64_poly.evaluate(&Complex64::new(y, 0.0)).norm())
        .collect();
    let values_ok = extrema_ok && extremal_values.iter().all(|&v| v > 1.0);
    if zeros_ok && extrema_ok && !values_ok && failure.is_none() {
        let (i, v) = extremal_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        failure = Some(format!("|f(y_{})| = {v} is not above 1", i + 1));
    }
    let admissible = zeros_ok && extrema_ok && values_ok;

    // property (A)
    let endpoint_mapping = {
        let one = CQ::one();
        let at = |x: i64| f.evaluate(&CQ::from_int(x));
        let is_pm1 = |v: CQ| v == one || v == -one.clone();
        is_pm1(at(1)) && is_pm1(at(-1))
    };
    let symmetric_zeros = {
        let even = coeffs.iter().skip(1).step_by(2).all(Zero::is_zero);
        let odd = coeffs.iter().step_by(2).all(Zero::is_zero);
        even || odd
    };
    let preimage_containment = {
        let mut ok = true;
        for target in [1.0, -1.0] {
            let mut shifted = f64_poly.coeffs().to_vec();
            shifted[0] -= Complex64::new(target, 0.0);
            let sp = Polynomial::new(shifted)?;
            for r in polynomial_roots(&sp)? {
                if r.im.abs() < REAL_ROOT_IM_TOL * (1.0 + r.re.abs())
                    && (r.re < -1.0 - 1e-9 || r.re > 1.0 + 1e-9)
                {
                    ok = false;
                }
            }
        }
        ok
    };

    Ok(AdmissibilityReport {
        zeros,
        extrema,
        extremal_values,
        admissible,
        property_a: PropertyA {
            preimage_containment,
            endpoint_mapping,
            symmetric_zeros,
        },
        failure,
    })
}

/// Compose two admissible property-preserving maps and re-verify the result.
/// A verification failure flags numerical root trouble, not a mathematical
/// one: the composition is admissible whenever the inputs are.
pub fn compose_admissible(
    g1: &Polynomial<CQ>,
    g2: &Polynomial<CQ>,
) -> Result<(Polynomial<CQ>, AdmissibilityReport)> {
    for (name, g) in [("g1", g1), ("g2", g2)] {
        let rep = admissibility(g)?;
        if !rep.admissible || !rep.property_a.all() {
            return Err(Error::precondition(format!(
                "{name} is not admissible with the symmetry property: {}",
                rep.failure.unwrap_or_else(|| "symmetry property fails".into())
            )));
        }
    }
    let composed = g2.compose(g1)?;
    let rep = admissibility(&composed)?;
    if !rep.admissible || !rep.property_a.all() {
        return Err(Error::RootFinding {
            level: 0,
            target: "composition".into(),
            detail: format!(
                "re-verification of an admissible composition failed ({}); this indicates numerical root trouble",
                rep.failure.unwrap_or_else(|| "symmetry property".into())
            ),
        });
    }
    Ok((composed, rep))
}

/// One basic interval `[a, b]` with extended-precision endpoints and the
/// orientation of the defining composition on it.
#[derive(Clone, Debug)]
pub struct BasicInterval {
    a_ext: ExtReal,
    b_ext: ExtReal,
    pub a: f64,
    pub b: f64,
    /// True when `F_level(a) = -1` (the composition increases across the
    /// interval).
    pub increasing: bool,
    /// Index of the containing interval one level up.
    pub parent: usize,
}

impl BasicInterval {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn a_ext(&self) -> &ExtReal {
        &self.a_ext
    }

    pub fn b_ext(&self) -> &ExtReal {
        &self.b_ext
    }
}

#[derive(Clone, Debug, Default)]
pub struct IntervalLevel {
    pub intervals: Vec<BasicInterval>,
    /// Gaps opened inside this level's intervals by the next level's
    /// children; empty for the deepest level present.
    pub gaps: Vec<(f64, f64)>,
}

/// Nested basic intervals `I_{j,m}` for `m = 0..=n`.
#[derive(Clone, Debug)]
pub struct BasicIntervalSystem {
    levels: Vec<IntervalLevel>,
}

impl BasicIntervalSystem {
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, m: usize) -> &IntervalLevel {
        &self.levels[m]
    }

    pub fn levels(&self) -> &[IntervalLevel] {
        &self.levels
    }

    /// max over all computed endpoints of `||F_m(endpoint)| - 1|`, evaluated
    /// in extended precision.
    pub fn endpoint_residual_max(&self, tower: &CompositionTower) -> Result<f64> {
        let gens = ext_generators(tower, self.max_level())?;
        let mut worst = 0.0_f64;
        for (m, level) in self.levels.iter().enumerate().skip(1) {
            for iv in &level.intervals {
                for x in [&iv.a_ext, &iv.b_ext] {
                    let mut v = x.clone();
                    for g in gens.iter().take(m) {
                        v = eval_ext(&g.f, &v);
                    }
                    let resid = (v.abs() - ExtReal::one()).abs().to_f64();
                    worst = worst.max(resid);
                }
            }
        }
        Ok(worst)
    }
}

struct ExtGen {
    f: Vec<ExtReal>,
    df: Vec<ExtReal>,
    f64_poly: Polynomial<Complex64>,
}

fn ext_generators(tower: &CompositionTower, n: usize) -> Result<Vec<ExtGen>> {
    let mut gens = Vec::with_capacity(n);
    for m in 1..=n {
        let exact = tower.spec().generator_exact(m)?;
        let coeffs = real_coeffs(&exact)?;
        let f: Vec<ExtReal> = coeffs.iter().map(ExtReal::from_rational).collect();
        let dq = derivative_q(&coeffs);
        let df: Vec<ExtReal> = dq.iter().map(ExtReal::from_rational).collect();
        gens.push(ExtGen {
            f,
            df,
            f64_poly: exact.to_c64(),
        });
    }
    Ok(gens)
}

fn eval_ext(coeffs: &[ExtReal], x: &ExtReal) -> ExtReal {
    let mut acc = coeffs.last().unwrap().clone();
    for c in coeffs.iter().rev().skip(1) {
        acc = &(&acc * x) + c;
    }
    acc
}

fn eval_f64_real(p: &Polynomial<Complex64>, x: f64) -> f64 {
    p.evaluate(&Complex64::new(x, 0.0)).re
}

/// Compute `F_m(x)` and `F_m'(x)` in extended precision by forward chain rule.
fn tower_eval_ext(gens: &[ExtGen], m: usize, x: &ExtReal) -> (ExtReal, ExtReal) {
    let mut v = x.clone();
    let mut dv = ExtReal::one();
    for g in gens.iter().take(m) {
        dv = &eval_ext(&g.df, &v) * &dv;
        v = eval_ext(&g.f, &v);
    }
    (v, dv)
}

fn tower_eval_f64(gens: &[ExtGen], m: usize, x: f64) -> f64 {
    let mut v = x;
    for g in gens.iter().take(m) {
        v = eval_f64_real(&g.f64_poly, v);
    }
    v
}

/// Solve `F_m(x) = target` on the bracket where `F_m` is strictly monotone:
/// float bisection for a seed, then extended-precision Newton steps with the
/// chain-rule derivative.
fn solve_monotone(
    gens: &[ExtGen],
    m: usize,
    lo: &ExtReal,
    hi: &ExtReal,
    target: &ExtReal,
    increasing: bool,
    level: usize,
    branch: usize,
) -> Result<ExtReal> {
    let t64 = target.to_f64();
    let mut lo64 = lo.to_f64();
    let mut hi64 = hi.to_f64();
    if !(lo64 < hi64) {
        return Err(Error::Bracketing {
            level,
            branch,
            detail: format!("degenerate bracket [{lo64}, {hi64}]"),
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo64 + hi64);
        if mid <= lo64 || mid >= hi64 {
            break;
        }
        let v = tower_eval_f64(gens, m, mid);
        if (v < t64) == increasing {
            lo64 = mid;
        } else {
            hi64 = mid;
        }
    }
    let mut x = ExtReal::from_f64(0.5 * (lo64 + hi64));
    let mut best = x.clone();
    let mut best_resid: Option<ExtReal> = None;
    for _ in 0..4 {
        let (v, dv) = tower_eval_ext(gens, m, &x);
        let resid = (&v - target).abs();
        if best_resid.as_ref().map(|b| &resid < b).unwrap_or(true) {
            best_resid = Some(resid.clone());
            best = x.clone();
        }
        if resid.is_zero() || dv.is_zero() {
            break;
        }
        x = &x - &(&(&v - target) / &dv);
        // keep the iterate inside the bracket
        if &x < lo || &x > hi {
            break;
        }
    }
    Ok(best)
}

/// Monotone branch data of one generator on `[-1, 1]`.
struct GeneratorBranches {
    /// Components of `f^{-1}([-1, 1])`, sorted, with extended endpoints and
    /// the direction of `f` on each.
    e_intervals: Vec<(ExtReal, ExtReal, bool)>,
}

fn generator_branches(
    gens: &[ExtGen],
    level: usize,
    report: &AdmissibilityReport,
    f_exact: &Polynomial<CQ>,
) -> Result<GeneratorBranches> {
    let g = &gens[level - 1];
    let one = ExtReal::one();
    let minus_one = -ExtReal::one();
    // endpoint values are exact: property (A) maps {-1, 1} into {-1, 1}
    let value_at = |x: i64| -> i8 {
        if f_exact.evaluate(&CQ::from_int(x)) == CQ::one() {
            1
        } else {
            -1
        }
    };
    let f_at_m1 = value_at(-1);
    let f_at_p1 = value_at(1);
    // refine critical points in extended precision by Newton on f'
    let ddf: Vec<ExtReal> = g
        .df
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| &ExtReal::from_int(j as i64) * c)
        .collect();
    let mut crits: Vec<ExtReal> = Vec::with_capacity(report.extrema.len());
    for &y in &report.extrema {
        let mut x = ExtReal::from_f64(y);
        for _ in 0..4 {
            let v = eval_ext(&g.df, &x);
            let dd = if ddf.is_empty() {
                ExtReal::zero()
            } else {
                eval_ext(&ddf, &x)
            };
            if dd.is_zero() {
                break;
            }
            x = &x - &(&v / &dd);
        }
        crits.push(x);
    }
    let mut boundaries = vec![minus_one.clone()];
    boundaries.extend(crits);
    boundaries.push(one.clone());
    let d = boundaries.len() - 1;

    let mut e_intervals = Vec::with_capacity(d);
    for b in 0..d {
        let lo = &boundaries[b];
        let hi = &boundaries[b + 1];
        // direction from the exact endpoint values and sign alternation of
        // the extremal values: evaluate once in extended precision
        let increasing = {
            let f_lo = eval_ext(&g.f, lo).to_f64();
            let f_hi = eval_ext(&g.f, hi).to_f64();
            f_hi > f_lo
        };
        // solutions of f = ±1 inside the branch; the only boundary hits are
        // at the exact domain endpoints ±1 (extremal values exceed 1)
        let solve_target = |sign: i8| -> Result<ExtReal> {
            if b == 0 && f_at_m1 == sign {
                return Ok(minus_one.clone());
            }
            if b == d - 1 && f_at_p1 == sign {
                return Ok(one.clone());
            }
            let t = if sign > 0 {
                ExtReal::one()
            } else {
                -ExtReal::one()
            };
            solve_single_generator(g, lo, hi, &t, increasing, level, b)
        };
        let x_minus = solve_target(-1)?;
        let x_plus = solve_target(1)?;
        let (a, bb) = if increasing {
            (x_minus, x_plus)
        } else {
            (x_plus, x_minus)
        };
        e_intervals.push((a, bb, increasing));
    }
    e_intervals.sort_by(|x, y| x.0.to_f64().total_cmp(&y.0.to_f64()));
    Ok(GeneratorBranches { e_intervals })
}

fn solve_single_generator(
    g: &ExtGen,
    lo: &ExtReal,
    hi: &ExtReal,
    target: &ExtReal,
    increasing: bool,
    level: usize,
    branch: usize,
) -> Result<ExtReal> {
    let t64 = target.to_f64();
    let mut lo64 = lo.to_f64();
    let mut hi64 = hi.to_f64();
    for _ in 0..70 {
        let mid = 0.5 * (lo64 + hi64);
        if mid <= lo64 || mid >= hi64 {
            break;
        }
        let v = eval_f64_real(&g.f64_poly, mid);
        if (v < t64) == increasing {
            lo64 = mid;
        } else {
            hi64 = mid;
        }
    }
    let seed = 0.5 * (lo64 + hi64);
    if !(lo64 <= seed && seed <= hi64) {
        return Err(Error::Bracketing {
            level,
            branch,
            detail: "bisection seed left the bracket".into(),
        });
    }
    let mut x = ExtReal::from_f64(seed);
    for _ in 0..4 {
        let v = eval_ext(&g.f, &x);
        let dv = eval_ext(&g.df, &x);
        if dv.is_zero() {
            break;
        }
        x = &x - &(&(&v - target) / &dv);
    }
    Ok(x)
}

/// Basic intervals of levels `0..=n` by branch-wise backward solving: within
/// each level-(m-1) interval the composition is strictly monotone, so each
/// new endpoint is a bracketed bisection refined by extended-precision
/// derivative steps. Shared endpoints are inherited exactly from the parent.
pub fn basic_intervals(tower: &CompositionTower, n: usize) -> Result<BasicIntervalSystem> {
    let gens = ext_generators(tower, n)?;
    // every generator must be admissible with the symmetry property
    let mut reports = Vec::with_capacity(n);
    for m in 1..=n {
        let f = tower.spec().generator_exact(m)?;
        let rep = admissibility(&f)?;
        if !rep.admissible {
            return Err(Error::precondition(format!(
                "generator {m} is not admissible: {}",
                rep.failure.clone().unwrap_or_default()
            )));
        }
        if !rep.property_a.all() {
            return Err(Error::precondition(format!(
                "generator {m} lacks the symmetry property"
            )));
        }
        reports.push(rep);
    }

    let root = BasicInterval {
        a_ext: -ExtReal::one(),
        b_ext: ExtReal::one(),
        a: -1.0,
        b: 1.0,
        increasing: true,
        parent: 0,
    };
    let mut levels = vec![IntervalLevel {
        intervals: vec![root],
        gaps: Vec::new(),
    }];

    for m in 1..=n {
        let f_exact = tower.spec().generator_exact(m)?;
        let branches = generator_branches(&gens, m, &reports[m - 1], &f_exact)?;
        let d = branches.e_intervals.len();
        let parent_count = levels[m - 1].intervals.len();
        if parent_count * d > INTERVAL_CAP {
            return Err(Error::precondition(format!(
                "level {m} would hold {} intervals, above the cap {INTERVAL_CAP}",
                parent_count * d
            )));
        }
        let minus_one = -ExtReal::one();
        let one = ExtReal::one();
        let mut intervals = Vec::with_capacity(parent_count * d);
        let mut gaps = Vec::with_capacity(parent_count * (d - 1));
        for (pi, parent) in levels[m - 1].intervals.iter().enumerate() {
            let o = parent.increasing;
            // preimage of a target position under F_{m-1} restricted to the parent
            let preimage = |e: &ExtReal| -> Result<ExtReal> {
                if e == &minus_one {
                    return Ok(if o { parent.a_ext.clone() } else { parent.b_ext.clone() });
                }
                if e == &one {
                    return Ok(if o { parent.b_ext.clone() } else { parent.a_ext.clone() });
                }
                solve_monotone(
                    &gens,
                    m - 1,
                    &parent.a_ext,
                    &parent.b_ext,
                    e,
                    o,
                    m,
                    pi,
                )
            };
            let order: Vec<usize> = if o {
                (0..d).collect()
            } else {
                (0..d).rev().collect()
            };
            let mut children = Vec::with_capacity(d);
            for ei in order {
                let (e_lo, e_hi, dir) = &branches.e_intervals[ei];
                let x_lo = preimage(e_lo)?;
                let x_hi = preimage(e_hi)?;
                let (a_ext, b_ext) = if o { (x_lo, x_hi) } else { (x_hi, x_lo) };
                let increasing = o == *dir;
                children.push(BasicInterval {
                    a: a_ext.to_f64(),
                    b: b_ext.to_f64(),
                    a_ext,
                    b_ext,
                    increasing,
                    parent: pi,
                });
            }
            for w in children.windows(2) {
                gaps.push((w[0].b, w[1].a));
            }
            intervals.extend(children);
        }
        levels[m - 1].gaps = gaps;
        levels.push(IntervalLevel {
            intervals,
            gaps: Vec::new(),
        });
    }
    Ok(BasicIntervalSystem { levels })
}

#[derive(Clone, Copy, Debug)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub count: usize,
    pub max_length: f64,
    pub total_length: f64,
    pub min_gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MassCheck {
    pub level: usize,
    pub expected: f64,
    /// max over intervals of `|mass * D_n - 1|`.
    pub max_relative_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct CantorDiagnostics {
    pub per_level: Vec<LevelDiagnostics>,
    pub max_length_decreasing: bool,
    pub mass_check: Option<MassCheck>,
}

/// Per-level length and gap statistics, plus (when a measure is supplied) a
/// check that each deepest-level interval carries mass close to `1/D_n`.
pub fn cantor_diagnostics(
    system: &BasicIntervalSystem,
    measure: Option<&DiscreteMeasure>,
) -> CantorDiagnostics {
    let mut per_level = Vec::with_capacity(system.levels().len());
    for (m, level) in system.levels().iter().enumerate() {
        let max_length = level
            .intervals
            .iter()
            .map(BasicInterval::length)
            .fold(0.0, f64::max);
        let total_length: f64 = level.intervals.iter().map(BasicInterval::length).sum();
        let min_gap = level
            .gaps
            .iter()
            .map(|(a, b)| b - a)
            .fold(None, |acc: Option<f64>, g| {
                Some(acc.map_or(g, |m| m.min(g)))
            });
        per_level.push(LevelDiagnostics {
            level: m,
            count: level.intervals.len(),
            max_length,
            total_length,
            min_gap,
        });
    }
    let max_length_decreasing = per_level
        .windows(2)
        .all(|w| w[1].max_length <= w[0].max_length + 1e-15);
    let mass_check = measure.map(|m| {
        let deepest = system.level(system.max_level());
        let dn = deepest.intervals.len() as f64;
        let w = m.weight();
        // Measure points approximate the limit set from outside as well, so
        // points hovering just past an endpoint belong to that interval.
        // Half the minimum spacing between adjacent intervals keeps the
        // windows disjoint.
        let tol = deepest
            .intervals
            .windows(2)
            .map(|p| p[1].a - p[0].b)
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            * 0.5;
        let mut worst = 0.0_f64;
        for iv in &deepest.intervals {
            let count = m
                .points()
                .iter()
                .filter(|p| p.re >= iv.a - tol && p.re <= iv.b + tol)
                .count();
            let mass = count as f64 * w;
            worst = worst.max((mass * dn - 1.0).abs());
        }
        MassCheck {
            level: system.max_level(),
            expected: 1.0 / dn,
            max_relative_deviation: worst,
        }
    });
    CantorDiagnostics {
        per_level,
        max_length_decreasing,
        mass_check,
    }
}
