//! The quadratic family `f_n(z) = (1/(2 gamma_n))(z^2 - 1) + 1` with
//! `gamma_n` in `(0, 1/4]`: closed-form interval geometry through the
//! parameter map `v`, capacity, Holder-smoothness criterion and
//! Parreau-Widom sums over the critical points.

use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{ext_bits, ExtReal, CQ, Q};
use crate::sequence::{CompositionTower, RegularSequenceSpec, SequenceFamily, TailRule};

const CRITICAL_SET_CAP: usize = 1 << 16;

/// Parameter sequence of the family; values are exact rationals in
/// `(0, 1/4]`. The limit value `1/4` is admitted (Chebyshev case).
#[derive(Clone, Debug)]
pub struct GammaSequence {
    gammas: Vec<Q>,
    tail: TailRule,
}

impl GammaSequence {
    pub fn new(gammas: Vec<Q>, tail: TailRule) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Input("gamma sequence needs at least one entry".into()));
        }
        let quarter = Q::new(1.into(), 4.into());
        for (i, g) in gammas.iter().enumerate() {
            if !g.is_positive() || g > &quarter {
                return Err(Error::Input(format!(
                    "gamma_{} = {} is outside (0, 1/4]",
                    i + 1,
                    g
                )));
            }
        }
        Ok(GammaSequence { gammas, tail })
    }

    /// Exact conversion from floats (each must land in `(0, 1/4]`).
    pub fn from_f64(values: &[f64], tail: TailRule) -> Result<Self> {
        let gammas = values
            .iter()
            .map(|&v| crate::scalar::rational_from_f64(v))
            .collect::<Result<Vec<_>>>()?;
        GammaSequence::new(gammas, tail)
    }

    pub fn constant(gamma: Q) -> Result<Self> {
        GammaSequence::new(vec![gamma], TailRule::RepeatLast)
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    fn index(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::precondition("gamma indices are 1-based"));
        }
        if n <= self.gammas.len() {
            return Ok(n - 1);
        }
        match self.tail {
            TailRule::RepeatLast => Ok(self.gammas.len() - 1),
            TailRule::RepeatCycle => Ok((n - 1) % self.gammas.len()),
            TailRule::ExplicitFinite => Err(Error::precondition(format!(
                "gamma_{n} requested but the sequence is an explicit finite list of {} entries",
                self.gammas.len()
            ))),
        }
    }

    pub fn gamma(&self, n: usize) -> Result<Q> {
        Ok(self.gammas[self.index(n)?].clone())
    }

    pub fn gamma_f64(&self, n: usize) -> Result<f64> {
        Ok(self.gamma(n)?.to_f64().unwrap_or(f64::NAN))
    }

    /// `epsilon_n = 1/4 - gamma_n`.
    pub fn epsilon(&self, n: usize) -> Result<Q> {
        Ok(Q::new(1.into(), 4.into()) - self.gamma(n)?)
    }

    pub fn epsilon_f64(&self, n: usize) -> Result<f64> {
        Ok(self.epsilon(n)?.to_f64().unwrap_or(f64::NAN))
    }

    /// Exact partial product `delta_n = gamma_1 ... gamma_n`.
    pub fn delta(&self, n: usize) -> Result<Q> {
        let mut d = Q::one();
        for j in 1..=n {
            d *= self.gamma(j)?;
        }
        Ok(d)
    }

    /// `log delta_n`, accumulated in log space to survive underflow for
    /// very deep levels.
    pub fn log_delta(&self, n: usize) -> Result<f64> {
        let mut s = 0.0;
        for j in 1..=n {
            s += self.gamma_f64(j)?.ln();
        }
        Ok(s)
    }

    /// Generator polynomial `(1/(2 gamma))(z^2 - 1) + 1` with exact
    /// coefficients.
    pub fn generator_from_gamma(gamma: &Q) -> Result<Polynomial<CQ>> {
        let half_inv = Q::new(1.into(), 2.into()) / gamma.clone();
        Polynomial::new(vec![
            CQ::new(Q::one() - half_inv.clone(), Q::zero()),
            CQ::zero(),
            CQ::new(half_inv, Q::zero()),
        ])
    }

    pub fn generator(&self, n: usize) -> Result<Polynomial<CQ>> {
        GammaSequence::generator_from_gamma(&self.gamma(n)?)
    }

    pub fn shifted(&self, k: usize) -> Result<GammaSequence> {
        if k == 0 {
            return Ok(self.clone());
        }
        let len = self.gammas.len();
        let gammas = match self.tail {
            TailRule::RepeatCycle => {
                let r = k % len;
                let mut v = self.gammas[r..].to_vec();
                v.extend_from_slice(&self.gammas[..r]);
                v
            }
            _ => {
                if k < len {
                    self.gammas[k..].to_vec()
                } else {
                    vec![self.gammas[len - 1].clone()]
                }
            }
        };
        GammaSequence::new(gammas, self.tail)
    }

    /// A positive lower bound `c` with `gamma_n >= c` for all `n`, when the
    /// tail rule pins the whole sequence down. This is the gate for labeling
    /// outputs with Julia-set semantics.
    pub fn regular_lower_bound(&self) -> Option<Q> {
        match self.tail {
            TailRule::ExplicitFinite => None,
            _ => self.gammas.iter().min().cloned(),
        }
    }

    /// The sequence as a generic polynomial sequence spec. Requires an
    /// infinite tail rule.
    pub fn to_spec(&self) -> Result<RegularSequenceSpec> {
        RegularSequenceSpec::new(SequenceFamily::K1Gamma(self.clone()), match self.tail {
            TailRule::ExplicitFinite => {
                return Err(Error::precondition(
                    "an explicit finite gamma list does not define a polynomial sequence; pick a tail rule",
                ))
            }
            t => t,
        })
    }

    pub fn tower(&self) -> Result<CompositionTower> {
        CompositionTower::new(self.to_spec()?)
    }
}

/// Which side of the nested composition to take at each level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
}

impl BranchSign {
    fn apply(self, v: f64) -> f64 {
        match self {
            BranchSign::Plus => v,
            BranchSign::Minus => -v,
        }
    }

    fn apply_ext(self, v: ExtReal) -> ExtReal {
        match self {
            BranchSign::Plus => v,
            BranchSign::Minus => -v,
        }
    }
}

/// The increasing concave branch `v_gamma(t) = sqrt(1 - 2 gamma (1 - t))`
/// on `[-1, 1]`, with values in `[0, 1]`.
pub fn v_map(gamma: f64, t: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 0.25) {
        return Err(Error::domain(format!("gamma = {gamma} is outside (0, 1/4]")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("v_gamma argument t = {t} is outside [-1, 1]")));
    }
    Ok((1.0 - 2.0 * gamma * (1.0 - t)).max(0.0).sqrt())
}

fn v_map_ext(gamma: &Q, t: &ExtReal) -> ExtReal {
    let one = ExtReal::one();
    let two_gamma = ExtReal::from_rational(&(gamma * Q::from_integer(2.into())));
    let inner = &one - &(&two_gamma * &(&one - t));
    if inner.is_negative() {
        ExtReal::zero()
    } else {
        inner.sqrt()
    }
}

/// Endpoint of a level-`n` basic interval by the signed nested composition;
/// the all-plus word gives the rightmost solution of `F_n(x) = -1`.
pub fn endpoints(gs: &GammaSequence, n: usize, signs: &[BranchSign]) -> Result<f64> {
    if signs.len() != n {
        return Err(Error::precondition(format!(
            "sign word length {} does not match level {n}",
            signs.len()
        )));
    }
    let mut t = -1.0_f64;
    for j in (1..=n).rev() {
        t = signs[j - 1].apply(v_map(gs.gamma_f64(j)?, t)?);
    }
    Ok(t)
}

/// Length of the first (and last) level-`n` basic interval,
/// `l_{1,n} = 1 - v_{gamma_1}(... v_{gamma_n}(-1))`, evaluated through the
/// cancellation-free recurrence `1 - v_gamma(t) = 2 gamma (1 - t) / (1 + v_gamma(t))`
/// so that lengths far below float spacing around 1 stay accurate.
pub fn first_interval_length(gs: &GammaSequence, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(2.0);
    }
    let mut u = 2.0_f64; // 1 - t with innermost t = -1
    for j in (1..=n).rev() {
        let g = gs.gamma_f64(j)?;
        let v = (1.0 - 2.0 * g * u).max(0.0).sqrt();
        u = 2.0 * g * u / (1.0 + v);
    }
    Ok(u)
}

/// Closed-form capacity `2 exp(sum 2^{-n} log gamma_n)` with the tail summed
/// exactly from the tail rule.
#[derive(Clone, Copy, Debug)]
pub struct CapacityClosedForm {
    pub value: f64,
    pub terms_used: usize,
}

pub fn capacity_closed_form(gs: &GammaSequence, _tol: f64) -> Result<CapacityClosedForm> {
    let len = gs.len();
    let mut sum = 0.0_f64;
    let mut pow = 1.0_f64;
    for n in 1..=len {
        pow *= 0.5;
        sum += pow * gs.gamma_f64(n)?.ln();
    }
    // tail beyond the explicit list, in closed form
    match gs.tail() {
        TailRule::RepeatLast => {
            // sum_{n > len} 2^{-n} log g_last = 2^{-len} log g_last
            sum += pow * gs.gamma_f64(len)?.ln();
        }
        TailRule::RepeatCycle => {
            // residues r = 0..len-1 starting at index len+1
            let geo = 1.0 / (1.0 - 0.5_f64.powi(len as i32));
            let mut p = pow;
            for r in 0..len {
                p *= 0.5;
                let g = gs.gamma_f64(len + 1 + r)?;
                sum += p * g.ln() * geo;
            }
        }
        TailRule::ExplicitFinite => {
            return Err(Error::precondition(
                "capacity needs a tail rule that determines the whole sequence",
            ))
        }
    }
    Ok(CapacityClosedForm {
        value: 2.0 * sum.exp(),
        terms_used: len,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothnessVerdict {
    /// Holder continuous with exponent 1/2.
    OptimalHolder,
    /// Not 1/2-Holder.
    NotOptimal,
    /// Finite data only; no claim about the limit.
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct SmoothnessReport {
    pub verdict: SmoothnessVerdict,
    /// Partial sums of `epsilon_k` up to the horizon.
    pub epsilon_partial_sums: Vec<f64>,
    /// The equivalent diagnostic `4^n delta_n` (tends to 0 exactly when the
    /// epsilon series diverges).
    pub diag_4n_delta: Vec<f64>,
    pub reason: String,
}

/// Decide the convergence of `sum epsilon_k` analytically from the tail rule;
/// raw finite data yields partial sums and the `4^n delta_n` diagnostic only.
pub fn smoothness_verdict(gs: &GammaSequence, horizon: usize) -> Result<SmoothnessReport> {
    if horizon < 1 {
        return Err(Error::precondition("horizon must be >= 1"));
    }
    let mut partial = Vec::with_capacity(horizon);
    let mut diag = Vec::with_capacity(horizon);
    let mut s = 0.0;
    let mut log_delta = 0.0;
    for n in 1..=horizon {
        match gs.epsilon_f64(n) {
            Ok(e) => {
                s += e;
                partial.push(s);
                log_delta += gs.gamma_f64(n)?.ln();
                diag.push((n as f64 * 4.0_f64.ln() + log_delta).exp());
            }
            Err(_) => break,
        }
    }
    let (verdict, reason) = match gs.tail() {
        TailRule::RepeatLast => {
            let last = gs.epsilon_f64(gs.len())?;
            if last > 0.0 {
                (
                    SmoothnessVerdict::NotOptimal,
                    format!("tail repeats epsilon = {last:.6e} > 0, so the epsilon series diverges"),
                )
            } else {
                (
                    SmoothnessVerdict::OptimalHolder,
                    "tail repeats epsilon = 0, so the epsilon series is a finite sum".into(),
                )
            }
        }
        TailRule::RepeatCycle => {
            let mut any = false;
            for n in 1..=gs.len() {
                if gs.epsilon_f64(n)? > 0.0 {
                    any = true;
                }
            }
            if any {
                (
                    SmoothnessVerdict::NotOptimal,
                    "the repeating cycle contains a positive epsilon, so the series diverges".into(),
                )
            } else {
                (
                    SmoothnessVerdict::OptimalHolder,
                    "every cycle entry has epsilon = 0".into(),
                )
            }
        }
        TailRule::ExplicitFinite => (
            SmoothnessVerdict::Inconclusive,
            "finite data determines no tail; reporting partial sums only".into(),
        ),
    };
    Ok(SmoothnessReport {
        verdict,
        epsilon_partial_sums: partial,
        diag_4n_delta: diag,
        reason,
    })
}

#[derive(Clone, Debug)]
pub struct HolderProbe {
    /// Samples of `(dist, G(z)/sqrt(dist))` outward from the endpoint `1`.
    pub samples: Vec<(f64, f64)>,
    pub max_ratio: f64,
}

/// Empirical supremum of `G(z)/sqrt(dist(z, K))` sampled at points
/// `1 + t` and `-1 - t` for `t` log-spaced in `[1e-6, 1e-1]`.
pub fn holder_constant_probe(
    gs: &GammaSequence,
    tower: &CompositionTower,
    sample_count: usize,
) -> Result<HolderProbe> {
    if sample_count < 2 {
        return Err(Error::precondition("need at least two samples"));
    }
    let _ = gs;
    let mut samples = Vec::with_capacity(2 * sample_count);
    let mut max_ratio: f64 = 0.0;
    let k_max = tower.options().default_k_max;
    for i in 0..sample_count {
        let f = i as f64 / (sample_count - 1) as f64;
        let t = 10f64.powf(-1.0 - 5.0 * f);
        for z in [Complex64::new(1.0 + t, 0.0), Complex64::new(-1.0 - t, 0.0)] {
            let g = tower.green(z, k_max)?;
            let ratio = g.value / t.sqrt();
            samples.push((t, ratio));
            max_ratio = max_ratio.max(ratio);
        }
    }
    Ok(HolderProbe { samples, max_ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PwVerdictHint {
    /// `sum sqrt(epsilon_k)` converges: Parreau-Widom by the criterion.
    ConvergentCriterion,
    /// The square-root series diverges.
    DivergentCriterion,
}

/// Terms and partial sums of the Parreau-Widom series over critical points.
#[derive(Clone, Debug)]
pub struct PWSummary {
    /// `s_n = 2^{n-1} G(z_n)` for a critical point `z_n` of level `n - 1`.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Analytic verdict from the tail rule; never inferred from finite sums.
    pub verdict_hint: Option<PwVerdictHint>,
    /// Whether `s_n > 2 epsilon_n` held for every term with
    /// `epsilon_n > 0` (terms with `epsilon_n = 0` are exactly zero).
    pub lower_bound_ok: bool,
}

/// Green value at a critical point of level `n-1` through the exact orbit
/// recursion: the orbit magnitude is `1 + sigma_k` with
/// `sigma_{k+1} = 4 sigma_k (1 + sigma_k / 2) / (1 - 4 epsilon_{k+1})`,
/// switched to log form once sigma leaves the float-safe range.
fn pw_green_at_critical(gs: &GammaSequence, n: usize, extra_depth: usize) -> Result<f64> {
    let eps_n = gs.epsilon_f64(n)?;
    if eps_n == 0.0 {
        // the critical orbit stays on the set
        return Ok(0.0);
    }
    let mut sigma = 8.0 * eps_n / (1.0 - 4.0 * eps_n);
    let mut log_sigma: Option<f64> = None;
    let depth = n + extra_depth;
    for k in (n + 1)..=depth {
        let e = gs.epsilon_f64(k)?;
        match log_sigma {
            None => {
                sigma = 4.0 * sigma * (1.0 + sigma / 2.0) / (1.0 - 4.0 * e);
                if sigma > 1e6 {
                    log_sigma = Some(sigma.ln());
                }
            }
            Some(ls) => {
                // log sigma' = log 2 + 2 log sigma + log(1 + 2/sigma) - log(1 - 4e)
                log_sigma =
                    Some(2.0_f64.ln() + 2.0 * ls + (2.0 * (-ls).exp()).ln_1p() - (-4.0 * e).ln_1p());
            }
        }
    }
    let log1p_sigma = match log_sigma {
        None => sigma.ln_1p(),
        Some(ls) => ls + (-ls).exp().ln_1p(),
    };
    // G(z_n) = lim 2^{-k} log(1 + sigma_k), truncated at `depth`
    Ok(log1p_sigma * 0.5_f64.powi(depth as i32))
}

/// Partial sums of the Parreau-Widom series; each term's Green value is
/// computed `k_depth` levels past its own index.
pub fn pw_sum(gs: &GammaSequence, n_terms: usize, k_depth: usize) -> Result<PWSummary> {
    if n_terms < 1 {
        return Err(Error::precondition("need at least one term"));
    }
    if gs.tail() == TailRule::ExplicitFinite {
        return Err(Error::precondition(
            "the Parreau-Widom sum needs a tail rule that determines the whole sequence",
        ));
    }
    let mut terms = Vec::with_capacity(n_terms);
    let mut partial_sums = Vec::with_capacity(n_terms);
    let mut epsilons = Vec::with_capacity(n_terms);
    let mut sum = 0.0;
    let mut lower_bound_ok = true;
    for n in 1..=n_terms {
        let eps = gs.epsilon_f64(n)?;
        let g = pw_green_at_critical(gs, n, k_depth)?;
        let s_n = 2.0_f64.powi(n as i32 - 1) * g;
        if eps > 0.0 {
            if s_n <= 2.0 * eps {
                lower_bound_ok = false;
            }
        } else if s_n != 0.0 {
            lower_bound_ok = false;
        }
        sum += s_n;
        terms.push(s_n);
        partial_sums.push(sum);
        epsilons.push(eps);
    }
    let verdict_hint = match gs.tail() {
        TailRule::RepeatLast => Some(if gs.epsilon_f64(gs.len())? > 0.0 {
            PwVerdictHint::DivergentCriterion
        } else {
            PwVerdictHint::ConvergentCriterion
        }),
        TailRule::RepeatCycle => {
            let mut any = false;
            for n in 1..=gs.len() {
                if gs.epsilon_f64(n)? > 0.0 {
                    any = true;
                }
            }
            Some(if any {
                PwVerdictHint::DivergentCriterion
            } else {
                PwVerdictHint::ConvergentCriterion
            })
        }
        TailRule::ExplicitFinite => None,
    };
    Ok(PWSummary {
        terms,
        partial_sums,
        epsilons,
        verdict_hint,
        lower_bound_ok,
    })
}

/// The critical set `Z_{n-1}` (all zeros of `F_{n-1}`) by the signed nested
/// radicals, with a residual certificate from extended-precision evaluation.
#[derive(Clone, Debug)]
pub struct CriticalSet {
    pub points: Vec<f64>,
    /// max |F_{n-1}| over the returned points, measured in extended precision.
    pub max_residual: f64,
}

pub fn critical_set(gs: &GammaSequence, n: usize) -> Result<CriticalSet> {
    if n < 1 {
        return Err(Error::precondition("critical sets are indexed from n = 1"));
    }
    if n >= 2 && (1usize << (n - 1)) > CRITICAL_SET_CAP {
        return Err(Error::precondition(format!(
            "2^{} critical points exceed the cap {CRITICAL_SET_CAP}",
            n - 1
        )));
    }
    if n == 1 {
        return Ok(CriticalSet {
            points: vec![0.0],
            max_residual: 0.0,
        });
    }
    let words = 1usize << (n - 1);
    let mut pts_ext: Vec<ExtReal> = Vec::with_capacity(words);
    for w in 0..words {
        // innermost sign applies to v_{gamma_{n-1}}(0)
        let mut t = ExtReal::zero();
        for j in (1..=(n - 1)).rev() {
            let sign = if (w >> (j - 1)) & 1 == 0 {
                BranchSign::Plus
            } else {
                BranchSign::Minus
            };
            t = sign.apply_ext(v_map_ext(&gs.gamma(j)?, &t));
        }
        pts_ext.push(t);
    }
    // residual of F_{n-1} at each point, in extended precision
    let mut max_residual = 0.0_f64;
    for p in &pts_ext {
        let mut v = p.clone();
        for j in 1..=(n - 1) {
            v = k1_step_ext(&gs.gamma(j)?, &v);
        }
        max_residual = max_residual.max(v.abs().to_f64());
    }
    let mut points: Vec<f64> = pts_ext.iter().map(|p| p.to_f64()).collect();
    points.sort_by(f64::total_cmp);
    Ok(CriticalSet {
        points,
        max_residual,
    })
}

/// One generator application `(1/(2 gamma))(v^2 - 1) + 1` in extended
/// precision.
pub(crate) fn k1_step_ext(gamma: &Q, v: &ExtReal) -> ExtReal {
    let half_inv = ExtReal::from_rational(&(Q::new(1.into(), 2.into()) / gamma.clone()));
    let one = ExtReal::one();
    &(&half_inv * &(&(v * v) - &one)) + &one
}

/// Diagnostic row for the CSV export: `(n, gamma, epsilon, delta, l_{1,n}, s_n, S_n)`.
#[derive(Clone, Debug)]
pub struct DiagnosticRow {
    pub n: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub first_length: f64,
    pub pw_term: f64,
    pub pw_partial: f64,
}

pub fn diagnostic_rows(gs: &GammaSequence, n_terms: usize, k_depth: usize) -> Result<Vec<DiagnosticRow>> {
    let pw = pw_sum(gs, n_terms, k_depth)?;
    let mut rows = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        rows.push(DiagnosticRow {
            n,
            gamma: gs.gamma_f64(n)?,
            epsilon: gs.epsilon_f64(n)?,
            delta: gs.log_delta(n)?.exp(),
            first_length: first_interval_length(gs, n)?,
            pw_term: pw.terms[n - 1],
            pw_partial: pw.partial_sums[n - 1],
        });
    }
    Ok(rows)
}

/// Reuse of the extended-precision context: document the knob here so the
/// modules relying on it share one definition.
pub fn current_ext_bits() -> usize {
    ext_bits()
}
