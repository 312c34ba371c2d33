//! Regular polynomial sequences, composition towers with overflow-safe
//! evaluation, escape radii, logarithmic capacity and Green's functions.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::k1_gamma::GammaSequence;
use crate::poly::Polynomial;
use crate::scalar::{Coeff, CQ, Q};

/// How a finite description extends to an infinite sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailRule {
    /// Repeat the last entry forever.
    RepeatLast,
    /// Cycle through the whole list forever.
    RepeatCycle,
    /// No tail: the data is a finite prefix only. Operations that need the
    /// infinite sequence reject this rule.
    ExplicitFinite,
}

/// The defining data of a polynomial sequence.
#[derive(Clone, Debug)]
pub enum SequenceFamily {
    /// Explicit generator polynomials `f_1, f_2, ...` extended by the tail rule.
    Explicit(Vec<Polynomial<CQ>>),
    /// `f_n(z) = z^2 + c_n`.
    QuadraticC(Vec<Q>),
    /// `f_n(z) = (1/(2 gamma_n))(z^2 - 1) + 1`.
    K1Gamma(GammaSequence),
    /// A single polynomial iterated forever.
    Autonomous(Polynomial<CQ>),
}

/// The constants of the three regularity inequalities.
#[derive(Clone, Copy, Debug)]
pub struct RegularityConstants {
    /// Lower bound on leading-coefficient modulus.
    pub a1: f64,
    /// Bound on lower-coefficient to leading-coefficient ratios.
    pub a2: f64,
    /// Bound on `log|lead| / degree`.
    pub a3: f64,
}

/// A polynomial sequence together with regularity constants.
#[derive(Clone, Debug)]
pub struct RegularSequenceSpec {
    family: SequenceFamily,
    tail: TailRule,
    constants: RegularityConstants,
}

const A2_FLOOR: f64 = 1e-12;
const A3_FLOOR: f64 = 1e-3;

impl RegularSequenceSpec {
    /// Build a spec, deriving regularity constants from the witnesses of the
    /// distinct generators. Fails when a generator has degree < 2 or a zero
    /// leading coefficient, or when an explicit family pairs with
    /// `ExplicitFinite` (dynamics need the infinite tail).
    pub fn new(family: SequenceFamily, tail: TailRule) -> Result<Self> {
        if tail == TailRule::ExplicitFinite {
            return Err(Error::Input(
                "polynomial sequences need an infinite tail rule (repeat-last or repeat-cycle)"
                    .into(),
            ));
        }
        let mut spec = RegularSequenceSpec {
            family,
            tail,
            constants: RegularityConstants {
                a1: 1.0,
                a2: A2_FLOOR,
                a3: A3_FLOOR,
            },
        };
        for n in 1..=spec.distinct_horizon() {
            let f = spec.generator_exact(n)?;
            if f.degree() < 2 {
                return Err(Error::Input(format!(
                    "generator {n} has degree {} < 2",
                    f.degree()
                )));
            }
            if f.leading().is_zero() {
                return Err(Error::Input(format!("generator {n} has zero leading coefficient")));
            }
        }
        let w = spec.witnesses(spec.distinct_horizon())?;
        // headroom over the witnesses so recomputed products do not trip the
        // inequalities by a rounding ulp
        let slack = 1e-12;
        spec.constants = RegularityConstants {
            a1: w.min_lead_abs.0 * (1.0 - slack),
            a2: (w.max_lower_ratio.0 * (1.0 + slack)).max(A2_FLOOR),
            a3: (w.max_log_lead_rate.0 + w.max_log_lead_rate.0.abs() * slack).max(A3_FLOOR),
        };
        Ok(spec)
    }

    pub fn autonomous(poly: Polynomial<CQ>) -> Result<Self> {
        RegularSequenceSpec::new(SequenceFamily::Autonomous(poly), TailRule::RepeatLast)
    }

    /// Override the regularity constants (they are then checked by
    /// [`RegularSequenceSpec::validate_regularity`], not assumed).
    pub fn with_constants(mut self, a1: f64, a2: f64, a3: f64) -> Self {
        self.constants = RegularityConstants { a1, a2, a3 };
        self
    }

    pub fn constants(&self) -> &RegularityConstants {
        &self.constants
    }

    pub fn family(&self) -> &SequenceFamily {
        &self.family
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    /// Number of generators after which the sequence repeats.
    pub fn distinct_horizon(&self) -> usize {
        match &self.family {
            SequenceFamily::Explicit(p) => p.len(),
            SequenceFamily::QuadraticC(c) => c.len(),
            SequenceFamily::K1Gamma(g) => g.len(),
            SequenceFamily::Autonomous(_) => 1,
        }
    }

    fn resolve_index(&self, n: usize, len: usize) -> usize {
        debug_assert!(n >= 1);
        if n <= len {
            n - 1
        } else {
            match self.tail {
                TailRule::RepeatLast | TailRule::ExplicitFinite => len - 1,
                TailRule::RepeatCycle => (n - 1) % len,
            }
        }
    }

    /// The generator `f_n` (1-based) with exact coefficients.
    pub fn generator_exact(&self, n: usize) -> Result<Polynomial<CQ>> {
        if n == 0 {
            return Err(Error::precondition("generators are 1-indexed"));
        }
        match &self.family {
            SequenceFamily::Explicit(polys) => Ok(polys[self.resolve_index(n, polys.len())].clone()),
            SequenceFamily::QuadraticC(cs) => {
                let c = &cs[self.resolve_index(n, cs.len())];
                Polynomial::new(vec![
                    CQ::new(c.clone(), Q::zero()),
                    CQ::zero(),
                    CQ::one(),
                ])
            }
            SequenceFamily::K1Gamma(g) => {
                let gamma = g.gamma(self.resolve_index(n, g.len()) + 1)?;
                GammaSequence::generator_from_gamma(&gamma)
            }
            SequenceFamily::Autonomous(p) => Ok(p.clone()),
        }
    }

    pub fn generator_f64(&self, n: usize) -> Result<Polynomial<Complex64>> {
        Ok(self.generator_exact(n)?.to_c64())
    }

    /// The shifted sequence `(f_{k+1}, f_{k+2}, ...)`.
    pub fn shifted(&self, k: usize) -> Result<RegularSequenceSpec> {
        if k == 0 {
            return Ok(self.clone());
        }
        let family = match &self.family {
            SequenceFamily::Explicit(polys) => {
                SequenceFamily::Explicit(shift_list(polys, k, self.tail))
            }
            SequenceFamily::QuadraticC(cs) => SequenceFamily::QuadraticC(shift_list(cs, k, self.tail)),
            SequenceFamily::K1Gamma(g) => SequenceFamily::K1Gamma(g.shifted(k)?),
            SequenceFamily::Autonomous(p) => SequenceFamily::Autonomous(p.clone()),
        };
        RegularSequenceSpec::new(family, self.tail)
    }

    fn witnesses(&self, horizon: usize) -> Result<Witnesses> {
        let mut w = Witnesses {
            min_lead_abs: (f64::INFINITY, 0),
            max_lower_ratio: (0.0, 0, 0),
            max_log_lead_rate: (f64::NEG_INFINITY, 0),
        };
        for n in 1..=horizon {
            let f = self.generator_exact(n)?;
            let d = f.degree();
            let lead = f.leading().abs_f64();
            if lead < w.min_lead_abs.0 {
                w.min_lead_abs = (lead, n);
            }
            for j in 0..d {
                let ratio = f.coeff(j).abs_f64() / lead;
                if ratio > w.max_lower_ratio.0 {
                    w.max_lower_ratio = (ratio, n, j);
                }
            }
            let rate = lead.ln() / d as f64;
            if rate > w.max_log_lead_rate.0 {
                w.max_log_lead_rate = (rate, n);
            }
        }
        Ok(w)
    }

    /// Check the three regularity inequalities for `n = 1..=horizon` against
    /// this spec's constants, reporting the tightest witnesses either way.
    pub fn validate_regularity(&self, horizon: usize) -> Result<ValidationReport> {
        if horizon < 1 {
            return Err(Error::precondition("horizon must be >= 1"));
        }
        let c = self.constants;
        let mut violations = Vec::new();
        for n in 1..=horizon {
            let f = self.generator_exact(n)?;
            let d = f.degree();
            let lead = f.leading().abs_f64();
            if d < 2 {
                violations.push(RegularityViolationDetail {
                    n,
                    j: None,
                    message: format!("degree d_{n} = {d} < 2"),
                });
            }
            if lead < c.a1 {
                violations.push(RegularityViolationDetail {
                    n,
                    j: None,
                    message: format!("|a_{{{n},{d}}}| = {lead} < A1 = {}", c.a1),
                });
            }
            for j in 0..d {
                let abs = f.coeff(j).abs_f64();
                if abs > c.a2 * lead {
                    violations.push(RegularityViolationDetail {
                        n,
                        j: Some(j),
                        message: format!(
                            "|a_{{{n},{j}}}| = {abs} > A2 |a_{{{n},{d}}}| = {}",
                            c.a2 * lead
                        ),
                    });
                }
            }
            if lead.ln() > c.a3 * d as f64 {
                violations.push(RegularityViolationDetail {
                    n,
                    j: None,
                    message: format!("log|a_{{{n},{d}}}| = {} > A3 d_{n} = {}", lead.ln(), c.a3 * d as f64),
                });
            }
        }
        let witnesses = self.witnesses(horizon)?;
        Ok(ValidationReport {
            horizon,
            constants: c,
            witnesses,
            violations,
        })
    }

    /// The default escape radius for this spec's constants.
    pub fn escape_radius(&self) -> f64 {
        escape_radius(self.constants.a1, self.constants.a2)
    }
}

fn shift_list<T: Clone>(list: &[T], k: usize, tail: TailRule) -> Vec<T> {
    let len = list.len();
    if k < len {
        match tail {
            TailRule::RepeatCycle => {
                let mut v: Vec<T> = list[k..].to_vec();
                v.extend_from_slice(&list[..k]);
                v
            }
            _ => list[k..].to_vec(),
        }
    } else {
        match tail {
            TailRule::RepeatCycle => {
                let r = k % len;
                let mut v: Vec<T> = list[r..].to_vec();
                v.extend_from_slice(&list[..r]);
                v
            }
            _ => vec![list[len - 1].clone()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Witnesses {
    /// Smallest leading-coefficient modulus and where it occurs.
    pub min_lead_abs: (f64, usize),
    /// Largest lower-to-leading coefficient ratio, with its `n` and `j`.
    pub max_lower_ratio: (f64, usize, usize),
    /// Largest `log|lead| / degree` and where it occurs.
    pub max_log_lead_rate: (f64, usize),
}

#[derive(Clone, Debug)]
pub struct RegularityViolationDetail {
    pub n: usize,
    pub j: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub horizon: usize,
    pub constants: RegularityConstants,
    pub witnesses: Witnesses,
    pub violations: Vec<RegularityViolationDetail>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        if self.passed() {
            Ok(self)
        } else {
            let v = &self.violations[0];
            Err(Error::RegularityViolation {
                n: v.n,
                detail: v.message.clone(),
            })
        }
    }
}

/// Smallest `R > 1 + A2` with `A1 R (1 - A2/(R-1)) > 2`, strictly: the larger
/// root of the boundary quadratic nudged up by one unit of relative precision.
pub fn escape_radius(a1: f64, a2: f64) -> f64 {
    assert!(a1 > 0.0 && a2 > 0.0, "escape radius needs positive A1, A2");
    let b = a1 * (1.0 + a2) + 2.0;
    let disc = (b * b - 8.0 * a1).max(0.0);
    let root = (b + disc.sqrt()) / (2.0 * a1);
    let mut r = root.max(1.0 + a2) * (1.0 + f64::EPSILON);
    // enforce strictness under rounding
    for _ in 0..8 {
        if a1 * r * (1.0 - a2 / (r - 1.0)) > 2.0 {
            return r;
        }
        r *= 1.0 + 4.0 * f64::EPSILON;
    }
    r
}

/// Knobs of a [`CompositionTower`]; the defaults follow the library's
/// documented behavior.
#[derive(Clone, Copy, Debug)]
pub struct TowerOptions {
    /// Depth up to which generators and cumulative degrees are precomputed.
    pub cached_depth: usize,
    /// Exact compositions `F_k` are cached eagerly while `D_k` stays at or
    /// below this degree.
    pub exact_cache_cap: usize,
    /// Cap for on-demand exact materialization of `F_l`.
    pub compose_cap: usize,
    /// Magnitude beyond which orbit tracking switches to log scale.
    pub escape_switch: f64,
    /// Default deepest level for Green evaluations.
    pub default_k_max: usize,
}

impl Default for TowerOptions {
    fn default() -> Self {
        TowerOptions {
            cached_depth: 64,
            exact_cache_cap: 64,
            compose_cap: crate::poly::DEFAULT_COMPOSE_CAP,
            escape_switch: 1e6,
            default_k_max: 60,
        }
    }
}

/// An orbit value, either directly representable or tracked as a unit
/// direction together with a log magnitude.
#[derive(Clone, Copy, Debug)]
pub enum OrbitValue {
    Direct(Complex64),
    LogScale { log_abs: f64, unit: Complex64 },
}

impl OrbitValue {
    pub fn log_abs(&self) -> f64 {
        match self {
            OrbitValue::Direct(w) => w.norm().ln(),
            OrbitValue::LogScale { log_abs, .. } => *log_abs,
        }
    }

    /// The value as a `Complex64` when it fits, `None` once only the log
    /// magnitude is meaningful.
    pub fn to_c64(&self) -> Option<Complex64> {
        match self {
            OrbitValue::Direct(w) => Some(*w),
            OrbitValue::LogScale { log_abs, unit } => {
                if *log_abs < 700.0 {
                    Some(unit * log_abs.exp())
                } else {
                    None
                }
            }
        }
    }
}

/// Result of a tower evaluation.
#[derive(Clone, Debug)]
pub struct TowerEval {
    pub value: OrbitValue,
    /// First level at which the orbit magnitude exceeded the escape radius.
    pub escaped_at: Option<usize>,
    pub level: usize,
}

/// Green's function value at a point.
#[derive(Clone, Copy, Debug)]
pub struct GreenResult {
    pub value: f64,
    pub level_used: usize,
    pub error_estimate: f64,
    pub escaped: bool,
}

/// Capacity estimate with its truncation certificate.
#[derive(Clone, Copy, Debug)]
pub struct CapacityEstimate {
    pub value: f64,
    pub levels_used: usize,
    pub tail_bound: f64,
}

/// Cached compositions `F_k` with cumulative degrees and leading-coefficient
/// log sums. Immutable after construction; evaluations are pure.
#[derive(Clone, Debug)]
pub struct CompositionTower {
    spec: RegularSequenceSpec,
    opts: TowerOptions,
    gen_f64: Vec<Polynomial<Complex64>>,
    exact_levels: Vec<Polynomial<CQ>>,
    cum_deg: Vec<BigUint>,
    cum_deg_f64: Vec<f64>,
    /// `sum_{j<=k} log|a_{j,d_j}| / D_j`.
    log_lead_partial: Vec<f64>,
    /// max |log|lead|| over the distinct generators.
    max_abs_log_lead: f64,
    radius: f64,
}

impl CompositionTower {
    pub fn new(spec: RegularSequenceSpec) -> Result<Self> {
        CompositionTower::with_options(spec, TowerOptions::default())
    }

    pub fn with_options(spec: RegularSequenceSpec, opts: TowerOptions) -> Result<Self> {
        let depth = opts.cached_depth.max(1);
        let mut gen_f64 = Vec::with_capacity(depth);
        let mut cum_deg = Vec::with_capacity(depth);
        let mut cum_deg_f64 = Vec::with_capacity(depth);
        let mut log_lead_partial = Vec::with_capacity(depth);
        let mut d_running = BigUint::one();
        let mut d_f64 = 1.0_f64;
        let mut partial = 0.0_f64;
        for n in 1..=depth {
            let f = spec.generator_f64(n)?;
            d_running *= BigUint::from(f.degree());
            d_f64 *= f.degree() as f64;
            partial += f.leading().norm().ln() / d_f64;
            cum_deg.push(d_running.clone());
            cum_deg_f64.push(d_f64);
            log_lead_partial.push(partial);
            gen_f64.push(f);
        }
        let mut exact_levels: Vec<Polynomial<CQ>> = Vec::new();
        {
            let mut current: Option<Polynomial<CQ>> = None;
            for n in 1..=depth {
                let f = spec.generator_exact(n)?;
                let next = match &current {
                    None => f,
                    Some(prev) => match f.compose_with_cap(prev, opts.exact_cache_cap) {
                        Ok(p) => p,
                        Err(_) => break,
                    },
                };
                exact_levels.push(next.clone());
                current = Some(next);
            }
        }
        let max_abs_log_lead = (1..=spec.distinct_horizon())
            .map(|n| {
                spec.generator_f64(n)
                    .map(|f| f.leading().norm().ln().abs())
                    .unwrap_or(0.0)
            })
            .fold(0.0_f64, f64::max);
        let radius = spec.escape_radius();
        Ok(CompositionTower {
            spec,
            opts,
            gen_f64,
            exact_levels,
            cum_deg,
            cum_deg_f64,
            log_lead_partial,
            max_abs_log_lead,
            radius,
        })
    }

    pub fn spec(&self) -> &RegularSequenceSpec {
        &self.spec
    }

    pub fn options(&self) -> &TowerOptions {
        &self.opts
    }

    pub fn escape_radius(&self) -> f64 {
        self.radius
    }

    pub fn generator_f64(&self, n: usize) -> Result<Polynomial<Complex64>> {
        if n >= 1 && n <= self.gen_f64.len() {
            Ok(self.gen_f64[n - 1].clone())
        } else {
            self.spec.generator_f64(n)
        }
    }

    /// `D_k = d_1 ... d_k` as an exact big integer.
    pub fn cumulative_degree(&self, k: usize) -> Result<BigUint> {
        if k == 0 {
            return Ok(BigUint::one());
        }
        if k <= self.cum_deg.len() {
            return Ok(self.cum_deg[k - 1].clone());
        }
        let mut d = self.cum_deg.last().cloned().unwrap_or_else(BigUint::one);
        for n in (self.cum_deg.len() + 1)..=k {
            d *= BigUint::from(self.spec.generator_f64(n)?.degree());
        }
        Ok(d)
    }

    /// Cached partial sums `sum_{j<=k} log|a_{j,d_j}| / D_j` while `k` is
    /// within the cached depth.
    pub fn log_lead_partial_sum(&self, k: usize) -> Option<f64> {
        if k >= 1 && k <= self.log_lead_partial.len() {
            Some(self.log_lead_partial[k - 1])
        } else {
            None
        }
    }

    pub fn cumulative_degree_f64(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if k <= self.cum_deg_f64.len() {
            return self.cum_deg_f64[k - 1];
        }
        let mut d = *self.cum_deg_f64.last().unwrap_or(&1.0);
        for n in (self.cum_deg_f64.len() + 1)..=k {
            d *= self
                .spec
                .generator_f64(n)
                .map(|f| f.degree() as f64)
                .unwrap_or(f64::NAN);
        }
        d
    }

    /// Exact coefficients of `F_l`; materialized on demand up to the compose
    /// cap when not already cached.
    pub fn exact_level(&self, l: usize) -> Result<Polynomial<CQ>> {
        if l == 0 {
            return Err(Error::precondition("levels are 1-indexed"));
        }
        if l <= self.exact_levels.len() {
            return Ok(self.exact_levels[l - 1].clone());
        }
        let mut current = if self.exact_levels.is_empty() {
            self.spec.generator_exact(1)?
        } else {
            self.exact_levels.last().unwrap().clone()
        };
        for n in (self.exact_levels.len().max(1) + 1)..=l {
            let f = self.spec.generator_exact(n)?;
            current = f.compose_with_cap(&current, self.opts.compose_cap)?;
        }
        Ok(current)
    }

    fn step(&self, state: OrbitValue, level: usize) -> Result<OrbitValue> {
        let f = if level <= self.gen_f64.len() {
            &self.gen_f64[level - 1]
        } else {
            return self.step_uncached(state, level);
        };
        Ok(self.step_with(f, state))
    }

    fn step_uncached(&self, state: OrbitValue, level: usize) -> Result<OrbitValue> {
        let f = self.spec.generator_f64(level)?;
        Ok(self.step_with(&f, state))
    }

    fn step_with(&self, f: &Polynomial<Complex64>, state: OrbitValue) -> OrbitValue {
        let state = match state {
            OrbitValue::Direct(w) if w.norm() > self.opts.escape_switch => to_log_scale(w),
            s => s,
        };
        match state {
            OrbitValue::Direct(w) => {
                let fw = f.evaluate(&w);
                if fw.norm() > self.opts.escape_switch {
                    to_log_scale(fw)
                } else {
                    OrbitValue::Direct(fw)
                }
            }
            OrbitValue::LogScale { log_abs, unit } => {
                let d = f.degree() as i32;
                let lead = *f.leading();
                // f(w) = lead * u^d * e^{dL} * (1 + eta); the lower-order
                // correction eta underflows to zero once dL is large.
                let mut eta = Complex64::zero();
                for j in 0..f.degree() {
                    let c = f.coeff(j);
                    if c.is_zero() {
                        continue;
                    }
                    let rel = (j as i32) - d;
                    eta += (c / lead) * unit.powi(rel) * (rel as f64 * log_abs).exp();
                }
                let v = lead * unit.powi(d) * (Complex64::new(1.0, 0.0) + eta);
                let nv = v.norm();
                OrbitValue::LogScale {
                    log_abs: d as f64 * log_abs + nv.ln(),
                    unit: v / nv,
                }
            }
        }
    }

    /// Evaluate `F_k(z)` with log-scale fallback once magnitudes leave the
    /// float-safe range, recording the first level past the escape radius.
    pub fn tower_eval(&self, z: Complex64, k: usize) -> Result<TowerEval> {
        if k < 1 {
            return Err(Error::precondition("tower evaluation needs k >= 1"));
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::domain("NaN or infinite input point"));
        }
        self.tower_eval_from(OrbitValue::Direct(z), k)
    }

    fn tower_eval_from(&self, start: OrbitValue, k: usize) -> Result<TowerEval> {
        let log_radius = self.radius.ln();
        let mut state = start;
        let mut escaped_at = None;
        for level in 1..=k {
            state = self.step(state, level)?;
            if escaped_at.is_none() && state.log_abs() > log_radius {
                escaped_at = Some(level);
            }
        }
        Ok(TowerEval {
            value: state,
            escaped_at,
            level: k,
        })
    }

    /// Logarithmic capacity via the leading-coefficient series, truncated once
    /// the geometric tail bound drops below `tol`.
    pub fn capacity(&self, tol: f64) -> Result<CapacityEstimate> {
        if !(tol > 0.0) {
            return Err(Error::precondition("capacity tolerance must be positive"));
        }
        let mut partial = 0.0_f64;
        let mut d_f64 = 1.0_f64;
        let mut level = 0usize;
        loop {
            level += 1;
            let f = self.generator_f64(level)?;
            d_f64 *= f.degree() as f64;
            partial += f.leading().norm().ln() / d_f64;
            let tail = self.max_abs_log_lead / d_f64;
            if tail < tol || level >= 1060 {
                return Ok(CapacityEstimate {
                    value: (-partial).exp(),
                    levels_used: level,
                    tail_bound: tail,
                });
            }
        }
    }

    /// Green's function with pole at infinity: the normalized log magnitude of
    /// the deepest computed level for escaping points, zero otherwise.
    pub fn green(&self, z: Complex64, k_max: usize) -> Result<GreenResult> {
        if k_max < 1 {
            return Err(Error::precondition("green needs k_max >= 1"));
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::domain("NaN or infinite input point"));
        }
        self.green_from(OrbitValue::Direct(z), k_max)
    }

    fn green_from(&self, start: OrbitValue, k_max: usize) -> Result<GreenResult> {
        let log_radius = self.radius.ln();
        let mut state = start;
        let mut escaped_at: Option<usize> = None;
        let mut d_f64 = 1.0_f64;
        let mut g_prev: Option<f64> = None;
        let mut g_last = 0.0_f64;
        let mut level_used = 0usize;
        for level in 1..=k_max {
            state = self.step(state, level)?;
            d_f64 *= self.generator_degree(level)? as f64;
            if escaped_at.is_none() && state.log_abs() > log_radius {
                escaped_at = Some(level);
            }
            if escaped_at.is_some() {
                g_prev = if level_used > 0 { Some(g_last) } else { None };
                g_last = state.log_abs() / d_f64;
                level_used = level;
                if state.log_abs() > 1e300 {
                    break;
                }
            }
        }
        match escaped_at {
            None => Ok(GreenResult {
                value: 0.0,
                level_used: k_max,
                error_estimate: 0.0,
                escaped: false,
            }),
            Some(_) => {
                let a2 = self.spec.constants().a2;
                let tail =
                    ((1.0 + a2 / (self.radius - 1.0)).ln() + self.max_abs_log_lead) / d_f64;
                let increment = g_prev.map(|p| (g_last - p).abs()).unwrap_or(0.0);
                Ok(GreenResult {
                    value: g_last,
                    level_used,
                    error_estimate: increment + tail,
                    escaped: true,
                })
            }
        }
    }

    fn generator_degree(&self, n: usize) -> Result<usize> {
        if n >= 1 && n <= self.gen_f64.len() {
            Ok(self.gen_f64[n - 1].degree())
        } else {
            Ok(self.spec.generator_f64(n)?.degree())
        }
    }

    /// Consistency residual of the Green self-similarity relation: compares
    /// `G(z)` against `G_shifted(F_k(z)) / D_k` where the shifted tower drops
    /// the first `k` generators.
    pub fn green_functional_check(&self, z: Complex64, k: usize) -> Result<f64> {
        let base = self.green(z, self.opts.default_k_max)?;
        if !base.escaped {
            return Err(Error::precondition(
                "green functional check needs an escaping point",
            ));
        }
        let ev = self.tower_eval(z, k)?;
        let shifted = CompositionTower::with_options(self.spec.shifted(k)?, self.opts)?;
        let g_shift = shifted.green_from(ev.value, self.opts.default_k_max)?;
        let dk = self.cumulative_degree_f64(k);
        Ok((base.value - g_shift.value / dk).abs())
    }

    /// Value and derivative of `F_k` at `z` by forward accumulation. Only
    /// valid while the orbit stays in the float-safe range.
    pub fn eval_with_derivative(&self, z: Complex64, k: usize) -> Result<(Complex64, Complex64)> {
        let mut v = z;
        let mut dv = Complex64::new(1.0, 0.0);
        for level in 1..=k {
            let f = if level <= self.gen_f64.len() {
                self.gen_f64[level - 1].clone()
            } else {
                self.spec.generator_f64(level)?
            };
            let fd = f.derivative()?;
            dv = fd.evaluate(&v) * dv;
            v = f.evaluate(&v);
        }
        Ok((v, dv))
    }
}

fn to_log_scale(w: Complex64) -> OrbitValue {
    let n = w.norm();
    OrbitValue::LogScale {
        log_abs: n.ln(),
        unit: w / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn z2_spec() -> RegularSequenceSpec {
        let p: Polynomial<CQ> = Polynomial::from_ints(&[0, 0, 1]);
        RegularSequenceSpec::new(SequenceFamily::Explicit(vec![p]), TailRule::RepeatLast).unwrap()
    }

    fn gamma_spec(g: &str) -> RegularSequenceSpec {
        let gs = GammaSequence::new(vec![parse_rational(g).unwrap()], TailRule::RepeatLast).unwrap();
        RegularSequenceSpec::new(SequenceFamily::K1Gamma(gs), TailRule::RepeatLast).unwrap()
    }

    #[test]
    fn escape_radius_matches_quadratic_boundary() {
        let r = escape_radius(1.0, 1.0);
        let boundary = 2.0 + 2.0_f64.sqrt();
        assert!(r > boundary && r < boundary * (1.0 + 1e-12));
        assert!(1.0 * r * (1.0 - 1.0 / (r - 1.0)) > 2.0);

        let r = escape_radius(2.0, 1.0);
        let boundary = (3.0 + 5.0_f64.sqrt()) / 2.0;
        assert!(r > boundary && r < boundary * (1.0 + 1e-12));

        let r = escape_radius(1e6, 1.0);
        assert!(r > 2.0 && r < 2.0 + 1e-4);
    }

    #[test]
    fn validates_z2_and_k1() {
        let spec = z2_spec().with_constants(1.0, 1.0, 1.0);
        assert!(spec.validate_regularity(8).unwrap().passed());

        // gamma = 0.2: f = 2.5 z^2 - 1.5
        let spec = gamma_spec("1/5").with_constants(2.5, 1.0, 1.0);
        let report = spec.validate_regularity(8).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
    }

    #[test]
    fn validation_catches_small_lead() {
        // f = 0.5 z^2 + 10 z violates A2 and A1 = 1
        let p: Polynomial<CQ> = Polynomial::new(vec![
            CQ::zero(),
            CQ::from_int(10),
            crate::scalar::cq_from_rational(parse_rational("1/2").unwrap()),
        ])
        .unwrap();
        let spec = RegularSequenceSpec::new(SequenceFamily::Explicit(vec![p]), TailRule::RepeatLast)
            .unwrap()
            .with_constants(1.0, 1.0, 1.0);
        let report = spec.validate_regularity(3).unwrap();
        assert!(!report.passed());
        assert!(report.violations.iter().any(|v| v.message.contains("< A1")));
    }

    #[test]
    fn tower_eval_tracks_z2_in_log_scale() {
        let tower = CompositionTower::new(z2_spec()).unwrap();
        let ev = tower.tower_eval(Complex64::new(2.0, 0.0), 5).unwrap();
        assert_eq!(ev.escaped_at, Some(1));
        let want = 32.0 * 2.0_f64.ln();
        assert!((ev.value.log_abs() - want).abs() < 1e-9 * want);
        assert!(matches!(ev.value, OrbitValue::LogScale { .. }));
    }

    #[test]
    fn tower_eval_bounded_chebyshev_orbit() {
        let tower = CompositionTower::new(gamma_spec("1/4")).unwrap();
        let ev = tower.tower_eval(Complex64::new(0.3, 0.0), 10).unwrap();
        assert_eq!(ev.escaped_at, None);
        assert!(ev.value.log_abs() <= 0.0 + 1e-12);
    }

    #[test]
    fn tower_eval_hand_iteration() {
        let p: Polynomial<CQ> = Polynomial::from_ints(&[1, 0, 1]);
        let spec =
            RegularSequenceSpec::new(SequenceFamily::Explicit(vec![p]), TailRule::RepeatLast)
                .unwrap();
        let tower = CompositionTower::new(spec).unwrap();
        let ev = tower.tower_eval(Complex64::new(0.0, 0.0), 3).unwrap();
        match ev.value {
            OrbitValue::Direct(w) => assert_eq!(w, Complex64::new(5.0, 0.0)),
            _ => panic!("expected direct value"),
        }
    }

    #[test]
    fn capacity_examples() {
        let tower = CompositionTower::new(z2_spec()).unwrap();
        let cap = tower.capacity(1e-12).unwrap();
        assert_eq!(cap.value, 1.0);

        let tower = CompositionTower::new(gamma_spec("1/4")).unwrap();
        let cap = tower.capacity(1e-12).unwrap();
        assert!((cap.value - 0.5).abs() < 1e-11);

        let tower = CompositionTower::new(gamma_spec("1/8")).unwrap();
        let cap = tower.capacity(1e-12).unwrap();
        assert!((cap.value - 0.25).abs() < 1e-11);
    }

    #[test]
    fn green_oracles() {
        let tower = CompositionTower::new(z2_spec()).unwrap();
        let g = tower.green(Complex64::new(2.0, 0.0), 60).unwrap();
        assert!(g.escaped);
        assert!((g.value - 2.0_f64.ln()).abs() < 1e-13);

        // classical Green's function of [-1,1]: log|z + sqrt(z^2 - 1)|
        let tower = CompositionTower::new(gamma_spec("1/4")).unwrap();
        let g = tower.green(Complex64::new(2.0, 0.0), 60).unwrap();
        let want = (2.0 + 3.0_f64.sqrt()).ln();
        assert!((g.value - want).abs() < 1e-8, "got {} want {}", g.value, want);

        let inside = tower.green(Complex64::new(0.5, 0.0), 60).unwrap();
        assert_eq!(inside.value, 0.0);
        assert!(!inside.escaped);
    }

    #[test]
    fn green_functional_residuals() {
        let tower = CompositionTower::new(z2_spec()).unwrap();
        let r = tower
            .green_functional_check(Complex64::new(2.0, 0.0), 3)
            .unwrap();
        assert!(r < 1e-12);

        let tower = CompositionTower::new(gamma_spec("1/4")).unwrap();
        let r = tower
            .green_functional_check(Complex64::new(2.0, 0.0), 2)
            .unwrap();
        assert!(r < 1e-8);
    }

    #[test]
    fn autonomous_agrees_with_repeat_last() {
        let p: Polynomial<CQ> = Polynomial::from_ints(&[-2, 0, 1]);
        let a = CompositionTower::new(RegularSequenceSpec::autonomous(p.clone()).unwrap()).unwrap();
        let b = CompositionTower::new(
            RegularSequenceSpec::new(SequenceFamily::Explicit(vec![p]), TailRule::RepeatLast)
                .unwrap(),
        )
        .unwrap();
        for z in [Complex64::new(3.0, 0.0), Complex64::new(0.4, 1.1)] {
            let ga = a.green(z, 40).unwrap();
            let gb = b.green(z, 40).unwrap();
            assert_eq!(ga.value, gb.value);
        }
    }

    #[test]
    fn cached_level_leading_coefficient_product() {
        // lead(F_k) = a_1^{d_2...d_k} a_2^{d_3...d_k} ... a_k
        let spec = gamma_spec("1/5");
        let tower = CompositionTower::new(spec).unwrap();
        let f3 = tower.exact_level(3).unwrap();
        let a = crate::scalar::parse_rational("5/2").unwrap();
        let want = a.clone().pow(4) * a.clone().pow(2) * a; // d = 2 throughout
        assert_eq!(f3.leading().re, want);
        assert_eq!(
            tower.cumulative_degree(3).unwrap(),
            num_bigint::BigUint::from(8u32)
        );
    }

    #[test]
    fn rejects_nan_input_points() {
        let tower = CompositionTower::new(z2_spec()).unwrap();
        assert!(tower.tower_eval(Complex64::new(f64::NAN, 0.0), 3).is_err());
        assert!(tower.green(Complex64::new(0.0, f64::INFINITY), 3).is_err());
    }

    #[test]
    fn shifted_cycles_rotate() {
        let c1 = parse_rational("-1/2").unwrap();
        let c2 = parse_rational("1/10").unwrap();
        let spec = RegularSequenceSpec::new(
            SequenceFamily::QuadraticC(vec![c1.clone(), c2.clone()]),
            TailRule::RepeatCycle,
        )
        .unwrap();
        let sh = spec.shifted(3).unwrap();
        // (c1 c2 c1 c2 ...) shifted by 3 starts at c2
        let f = sh.generator_exact(1).unwrap();
        assert_eq!(f.coeff(0).re, c2);
    }
}
