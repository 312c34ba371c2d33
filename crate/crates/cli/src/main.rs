//! Command-line surface: parse sequence files, run computations, emit
//! machine-readable JSON/CSV results with embedded input digests.

mod output;
mod spec_io;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genjulia::k1_gamma::{self, GammaSequence};
use genjulia::measure::{check_anchor, default_anchor, preimage_measure};
use genjulia::orthopoly::{
    explicit_p1, explicit_p_block, jacobi_from_moments, moments, resolvent,
    resolvent_functional_check, MomentTable,
};
use genjulia::scalar::{parse_rational, set_ext_bits, CExt, Coeff, CQ};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde_json::{json, Value};

use output::{csv_document, document, fmt_f64, fmt_f64_list, fmt_q, fmt_q_list, input_digest, meta};
use spec_io::{parse_sequence_json, ParsedSequence};

#[derive(Parser)]
#[command(
    name = "genjulia",
    about = "Potential theory, equilibrium measures and orthogonal polynomials for polynomial composition towers",
    version
)]
struct JobSpec {
    /// Sequence description file (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Precision {
    /// Double precision floats.
    F64,
    /// Exact rational arithmetic.
    Rational,
}

#[derive(Subcommand)]
enum Command {
    /// Check the regularity inequalities and report witnesses.
    Validate(ValidateArgs),
    /// Logarithmic capacity from the leading-coefficient series.
    Capacity(CapacityArgs),
    /// Green's function sampled on a rectangular grid (CSV).
    GreenGrid(GreenGridArgs),
    /// Preimage counting measure as a weighted point cloud (CSV).
    Measure(MeasureArgs),
    /// Equilibrium-measure moments from root power sums.
    Moments(MomentsArgs),
    /// The explicitly known orthogonal polynomials (indices 1 and D_l).
    Opoly(OpolyArgs),
    /// Jacobi recurrence coefficients from the Hankel factorization.
    Jacobi(JacobiArgs),
    /// Truncated resolvent (Cauchy transform) evaluation.
    Resolvent(ResolventArgs),
    /// Basic interval system of a real sequence (JSON).
    Intervals(IntervalsArgs),
    /// Holder-smoothness criterion for the quadratic gamma family.
    K1Smoothness(K1SmoothnessArgs),
    /// Parreau-Widom partial sums for the quadratic gamma family.
    K1Pw(K1PwArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Levels to check.
    #[arg(long, default_value_t = 32)]
    horizon: usize,
}

#[derive(Args)]
struct CapacityArgs {
    /// Tail bound at which the series is truncated.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct GreenGridArgs {
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    re_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    re_max: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    im_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    im_max: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long, default_value_t = 60)]
    k_max: usize,
}

#[derive(Args)]
struct MeasureArgs {
    /// Preimage depth k (the measure holds D_k points).
    #[arg(long)]
    level: usize,
    /// Real positive anchor; default is twice the escape radius.
    #[arg(long)]
    anchor: Option<String>,
}

#[derive(Args)]
struct MomentsArgs {
    /// Composition level l (moments c_0 .. c_{D_l - 1}).
    #[arg(long)]
    level: usize,
    /// f64, rational, or ext:<bits>.
    #[arg(long, default_value = "rational")]
    precision: String,
}

#[derive(Args)]
struct OpolyArgs {
    /// Block index level l (the polynomial of degree D_l).
    #[arg(long)]
    level: usize,
}

#[derive(Args)]
struct JacobiArgs {
    /// Moment table level.
    #[arg(long)]
    level: usize,
    /// Number of recurrence pairs.
    #[arg(short = 'N', long, default_value_t = 5)]
    pairs: usize,
    #[arg(long, value_enum, default_value_t = Precision::Rational)]
    precision: Precision,
}

#[derive(Args)]
struct ResolventArgs {
    /// Moment table level (needs D_l - 1 >= truncation).
    #[arg(long)]
    level: usize,
    #[arg(long, allow_hyphen_values = true)]
    re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    im: f64,
    #[arg(long, default_value_t = 40)]
    truncation: usize,
    /// Radius M with the support inside |z| <= M.
    #[arg(long)]
    support_radius: f64,
    /// Also evaluate the self-similarity residual at this depth.
    #[arg(long)]
    check_depth: Option<usize>,
}

#[derive(Args)]
struct IntervalsArgs {
    /// Deepest level n of the interval system.
    #[arg(long)]
    level: usize,
}

#[derive(Args)]
struct K1SmoothnessArgs {
    #[arg(long, default_value_t = 25)]
    horizon: usize,
}

#[derive(Args)]
struct K1PwArgs {
    /// Number of Parreau-Widom terms.
    #[arg(long, default_value_t = 20)]
    terms: usize,
    /// Extra tower depth for each term's Green value.
    #[arg(long, default_value_t = 40)]
    k_depth: usize,
    /// csv (diagnostic rows) or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

enum CliError {
    Input(String),
    Io(String),
    Core(genjulia::Error),
}

impl From<genjulia::Error> for CliError {
    fn from(e: genjulia::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) | CliError::Io(_) => "input",
            CliError::Core(e) => match e {
                genjulia::Error::Input(_) => "input",
                genjulia::Error::RootFinding { .. }
                | genjulia::Error::CoefficientOverflow { .. }
                | genjulia::Error::NotPositiveDefinite { .. }
                | genjulia::Error::Bracketing { .. } => "numerical",
                _ => "precondition",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "input" => 2,
            "numerical" => 3,
            _ => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let job = JobSpec::parse();
    match run(job) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = json!({"error": {"kind": e.kind(), "message": e.message()}});
            eprintln!("{}", serde_json::to_string(&err).unwrap());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(job: JobSpec) -> Result<(), CliError> {
    let input_path = job
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input <sequence.json> is required".into()))?;
    let raw = fs::read(input_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", input_path.display())))?;
    let digest = input_digest(&raw);
    let text = String::from_utf8(raw)
        .map_err(|_| CliError::Input("sequence file is not valid UTF-8".into()))?;
    let sequence = parse_sequence_json(&text).map_err(CliError::Input)?;

    let out = match &job.command {
        Command::Validate(a) => cmd_validate(&sequence, &digest, a)?,
        Command::Capacity(a) => cmd_capacity(&sequence, &digest, a)?,
        Command::GreenGrid(a) => cmd_green_grid(&sequence, &digest, a)?,
        Command::Measure(a) => cmd_measure(&sequence, &digest, a)?,
        Command::Moments(a) => cmd_moments(&sequence, &digest, a)?,
        Command::Opoly(a) => cmd_opoly(&sequence, &digest, a)?,
        Command::Jacobi(a) => cmd_jacobi(&sequence, &digest, a)?,
        Command::Resolvent(a) => cmd_resolvent(&sequence, &digest, a)?,
        Command::Intervals(a) => cmd_intervals(&sequence, &digest, a)?,
        Command::K1Smoothness(a) => cmd_k1_smoothness(&sequence, &digest, a)?,
        Command::K1Pw(a) => cmd_k1_pw(&sequence, &digest, a)?,
    };

    match &job.output {
        Some(path) => fs::write(path, out)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn cmd_validate(seq: &ParsedSequence, digest: &str, a: &ValidateArgs) -> Result<String, CliError> {
    let spec = seq.spec()?;
    let report = spec.validate_regularity(a.horizon)?;
    let result = json!({
        "passed": report.passed(),
        "horizon": report.horizon,
        "constants": {
            "a1": fmt_f64(report.constants.a1),
            "a2": fmt_f64(report.constants.a2),
            "a3": fmt_f64(report.constants.a3),
        },
        "witnesses": {
            "min_lead_abs": { "value": fmt_f64(report.witnesses.min_lead_abs.0), "n": report.witnesses.min_lead_abs.1 },
            "max_lower_ratio": { "value": fmt_f64(report.witnesses.max_lower_ratio.0), "n": report.witnesses.max_lower_ratio.1, "j": report.witnesses.max_lower_ratio.2 },
            "max_log_lead_rate": { "value": fmt_f64(report.witnesses.max_log_lead_rate.0), "n": report.witnesses.max_log_lead_rate.1 },
        },
        "violations": report.violations.iter().map(|v| json!({
            "n": v.n,
            "j": v.j,
            "message": v.message,
        })).collect::<Vec<_>>(),
    });
    Ok(document(meta(digest, "f64", json!({"family": seq.family_name()})), result))
}

fn cmd_capacity(seq: &ParsedSequence, digest: &str, a: &CapacityArgs) -> Result<String, CliError> {
    let tower = seq.tower()?;
    let cap = tower.capacity(a.tol)?;
    let mut result = json!({
        "capacity": fmt_f64(cap.value),
        "levels_used": cap.levels_used,
        "tail_bound": fmt_f64(cap.tail_bound),
    });
    if let Some(gs) = seq.gamma() {
        let closed = k1_gamma::capacity_closed_form(gs, a.tol)?;
        if let Value::Object(o) = &mut result {
            o.insert("closed_form".into(), Value::String(fmt_f64(closed.value)));
            o.insert(
                "closed_form_agreement".into(),
                Value::String(fmt_f64((closed.value - cap.value).abs())),
            );
        }
    }
    Ok(document(meta(digest, "f64", json!({})), result))
}

fn cmd_green_grid(seq: &ParsedSequence, digest: &str, a: &GreenGridArgs) -> Result<String, CliError> {
    if a.resolution < 2 {
        return Err(CliError::Input("resolution must be at least 2".into()));
    }
    let tower = seq.tower()?;
    let n = a.resolution;
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let rows: Result<Vec<Vec<String>>, genjulia::Error> = (0..n)
        .into_par_iter()
        .map(|iy| {
            let im = step(a.im_min, a.im_max, iy);
            let mut out = Vec::with_capacity(n);
            for ix in 0..n {
                let re = step(a.re_min, a.re_max, ix);
                let g = tower.green(Complex64::new(re, im), a.k_max)?;
                let escaped = if g.escaped {
                    g.level_used.to_string()
                } else {
                    String::new()
                };
                out.push(format!(
                    "{},{},{},{},{}",
                    fmt_f64(re),
                    fmt_f64(im),
                    fmt_f64(g.value),
                    fmt_f64(g.error_estimate),
                    escaped
                ));
            }
            Ok(out)
        })
        .collect();
    let rows: Vec<String> = rows.map_err(CliError::Core)?.into_iter().flatten().collect();
    let meta_lines = vec![
        ("input_digest".to_string(), digest.to_string()),
        ("precision".to_string(), "f64".to_string()),
        ("k_max".to_string(), a.k_max.to_string()),
        ("resolution".to_string(), format!("{n}x{n}")),
        ("order".to_string(), "row-major (im outer, re inner)".to_string()),
    ];
    Ok(csv_document(
        &meta_lines,
        "re,im,green,error_estimate,level_used_if_escaped",
        &rows,
    ))
}

fn cmd_measure(seq: &ParsedSequence, digest: &str, a: &MeasureArgs) -> Result<String, CliError> {
    let tower = seq.tower()?;
    let anchor = match &a.anchor {
        Some(s) => {
            let q = parse_rational(s)?;
            ToPrimitive::to_f64(&q)
                .ok_or_else(|| CliError::Input(format!("anchor {s} is not representable")))?
        }
        None => default_anchor(&tower),
    };
    let az = Complex64::new(anchor, 0.0);
    let cert = check_anchor(tower.spec().constants(), az);
    let m = preimage_measure(&tower, az, a.level)?;
    let rows: Vec<String> = m
        .points()
        .iter()
        .map(|p| format!("{},{},{}", fmt_f64(p.re), fmt_f64(p.im), fmt_f64(m.weight())))
        .collect();
    let meta_lines = vec![
        ("input_digest".to_string(), digest.to_string()),
        ("precision".to_string(), "f64".to_string()),
        ("level".to_string(), a.level.to_string()),
        ("anchor".to_string(), fmt_f64(anchor)),
        ("anchor_margin".to_string(), fmt_f64(cert.margin)),
        ("points".to_string(), m.len().to_string()),
    ];
    Ok(csv_document(&meta_lines, "re,im,weight", &rows))
}

fn complex_strings_q(c: &CQ) -> Value {
    json!({ "re": fmt_q(&c.re), "im": fmt_q(&c.im) })
}

fn complex_strings_f64(c: &Complex64) -> Value {
    json!({ "re": fmt_f64(c.re), "im": fmt_f64(c.im) })
}

fn cmd_moments(seq: &ParsedSequence, digest: &str, a: &MomentsArgs) -> Result<String, CliError> {
    let tower = seq.tower()?;
    let (precision, values): (String, Vec<Value>) = match a.precision.as_str() {
        "rational" => {
            let t: MomentTable<CQ> = moments(&tower, a.level)?;
            ("rational".into(), t.moments.iter().map(complex_strings_q).collect())
        }
        "f64" => {
            let t: MomentTable<Complex64> = moments(&tower, a.level)?;
            ("f64".into(), t.moments.iter().map(complex_strings_f64).collect())
        }
        other => {
            let bits: usize = other
                .strip_prefix("ext:")
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "unknown precision {other:?}; use f64, rational or ext:<bits>"
                    ))
                })?;
            set_ext_bits(bits);
            let t: MomentTable<CExt> = moments(&tower, a.level)?;
            (
                format!("ext:{bits}"),
                t.moments
                    .iter()
                    .map(|c| complex_strings_f64(&c.to_c64()))
                    .collect(),
            )
        }
    };
    let result = json!({
        "level": a.level,
        "count": values.len(),
        "moments": values,
    });
    Ok(document(meta(digest, &precision, json!({})), result))
}

fn cmd_opoly(seq: &ParsedSequence, digest: &str, a: &OpolyArgs) -> Result<String, CliError> {
    let spec = seq.spec()?;
    let tower = seq.tower()?;
    let p1 = explicit_p1(&spec)?;
    let pb = explicit_p_block(&tower, a.level)?;
    let result = json!({
        "p1": {
            "index": "1",
            "coefficients": p1.polynomial.coeffs().iter().map(complex_strings_q).collect::<Vec<_>>(),
        },
        "p_block": {
            "index": pb.index.to_string(),
            "level": a.level,
            "coefficients": pb.polynomial.coeffs().iter().map(complex_strings_q).collect::<Vec<_>>(),
        },
    });
    Ok(document(meta(digest, "rational", json!({})), result))
}

fn cmd_jacobi(seq: &ParsedSequence, digest: &str, a: &JacobiArgs) -> Result<String, CliError> {
    let tower = seq.tower()?;
    let result = match a.precision {
        Precision::Rational => {
            let t: MomentTable<CQ> = moments(&tower, a.level)?;
            let real = t.real_moments()?;
            let jc = jacobi_from_moments(&real, a.pairs)?;
            json!({
                "pairs": a.pairs,
                "level": a.level,
                "b": fmt_q_list(&jc.b),
                "a_sq": fmt_q_list(&jc.a_sq),
                "a": fmt_f64_list(&jc.a_f64()),
                "hankel_dets": fmt_q_list(&jc.hankel_dets),
            })
        }
        Precision::F64 => {
            let t: MomentTable<Complex64> = moments(&tower, a.level)?;
            let real = t.real_moments(1e-10)?;
            let jc = jacobi_from_moments(&real, a.pairs)?;
            json!({
                "pairs": a.pairs,
                "level": a.level,
                "b": fmt_f64_list(&jc.b),
                "a_sq": fmt_f64_list(&jc.a_sq),
                "a": fmt_f64_list(&jc.a_f64()),
                "hankel_dets": fmt_f64_list(&jc.hankel_dets),
            })
        }
    };
    let precision = match a.precision {
        Precision::Rational => "rational",
        Precision::F64 => "f64",
    };
    Ok(document(meta(digest, precision, json!({})), result))
}

fn cmd_resolvent(seq: &ParsedSequence, digest: &str, a: &ResolventArgs) -> Result<String, CliError> {
    let tower = seq.tower()?;
    let t: MomentTable<CQ> = moments(&tower, a.level)?;
    let c = t.to_c64();
    let z = Complex64::new(a.re, a.im);
    let r = resolvent(&c, z, a.truncation, a.support_radius)?;
    let mut result = json!({
        "z": complex_strings_f64(&z),
        "value": complex_strings_f64(&r.value),
        "truncation": r.truncation,
        "tail_bound": fmt_f64(r.tail_bound),
        "level": a.level,
    });
    if let Some(k) = a.check_depth {
        let resid =
            resolvent_functional_check(&tower, z, k, a.level, a.truncation, a.support_radius)?;
        if let Value::Object(o) = &mut result {
            o.insert("functional_check_depth".into(), json!(k));
            o.insert("functional_check_residual".into(), Value::String(fmt_f64(resid)));
        }
    }
    Ok(document(meta(digest, "f64", json!({})), result))
}

fn cmd_intervals(seq: &ParsedSequence, digest: &str, a: &IntervalsArgs) -> Result<String, CliError> {
    let tower = seq.tower()?;
    let sys = genjulia::real_julia::basic_intervals(&tower, a.level)?;
    let resid = sys.endpoint_residual_max(&tower)?;
    let levels: Vec<Value> = sys
        .levels()
        .iter()
        .enumerate()
        .map(|(m, level)| {
            json!({
                "level": m,
                "intervals": level.intervals.iter()
                    .map(|iv| json!([fmt_f64(iv.a), fmt_f64(iv.b)]))
                    .collect::<Vec<_>>(),
                "gaps": level.gaps.iter()
                    .map(|(ga, gb)| json!([fmt_f64(*ga), fmt_f64(*gb)]))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    let result = json!({
        "max_level": sys.max_level(),
        "endpoint_residual_max": fmt_f64(resid),
        "levels": levels,
    });
    Ok(document(
        meta(digest, &format!("ext:{}", k1_gamma::current_ext_bits()), json!({})),
        result,
    ))
}

fn require_gamma<'s>(seq: &'s ParsedSequence, cmd: &str) -> Result<&'s GammaSequence, CliError> {
    seq.gamma()
        .ok_or_else(|| CliError::Input(format!("{cmd} needs a k1_gamma sequence file")))
}

fn cmd_k1_smoothness(
    seq: &ParsedSequence,
    digest: &str,
    a: &K1SmoothnessArgs,
) -> Result<String, CliError> {
    let gs = require_gamma(seq, "k1-smoothness")?;
    let report = k1_gamma::smoothness_verdict(gs, a.horizon)?;
    let verdict = match report.verdict {
        k1_gamma::SmoothnessVerdict::OptimalHolder => "optimal-holder",
        k1_gamma::SmoothnessVerdict::NotOptimal => "not-optimal",
        k1_gamma::SmoothnessVerdict::Inconclusive => "inconclusive",
    };
    let result = json!({
        "verdict": verdict,
        "reason": report.reason,
        "epsilon_partial_sums": fmt_f64_list(&report.epsilon_partial_sums),
        "diag_4n_delta": fmt_f64_list(&report.diag_4n_delta),
    });
    Ok(document(meta(digest, "f64", json!({"horizon": a.horizon})), result))
}

fn cmd_k1_pw(seq: &ParsedSequence, digest: &str, a: &K1PwArgs) -> Result<String, CliError> {
    let gs = require_gamma(seq, "k1-pw")?;
    let pw = k1_gamma::pw_sum(gs, a.terms, a.k_depth)?;
    let hint = match pw.verdict_hint {
        Some(k1_gamma::PwVerdictHint::ConvergentCriterion) => "convergent-criterion",
        Some(k1_gamma::PwVerdictHint::DivergentCriterion) => "divergent-criterion",
        None => "none",
    };
    match a.format.as_str() {
        "csv" => {
            let rows = k1_gamma::diagnostic_rows(gs, a.terms, a.k_depth)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{}",
                        r.n,
                        fmt_f64(r.gamma),
                        fmt_f64(r.epsilon),
                        fmt_f64(r.delta),
                        fmt_f64(r.first_length),
                        fmt_f64(r.pw_term),
                        fmt_f64(r.pw_partial)
                    )
                })
                .collect();
            let meta_lines = vec![
                ("input_digest".to_string(), digest.to_string()),
                ("precision".to_string(), "f64".to_string()),
                ("k_depth".to_string(), a.k_depth.to_string()),
                ("verdict_hint".to_string(), hint.to_string()),
                (
                    "lower_bound_s_n_gt_2eps".to_string(),
                    pw.lower_bound_ok.to_string(),
                ),
            ];
            Ok(csv_document(
                &meta_lines,
                "n,gamma_n,epsilon_n,delta_n,l_first_n,s_n,S_n",
                &lines,
            ))
        }
        "json" => {
            let result = json!({
                "terms": fmt_f64_list(&pw.terms),
                "partial_sums": fmt_f64_list(&pw.partial_sums),
                "epsilons": fmt_f64_list(&pw.epsilons),
                "verdict_hint": hint,
                "lower_bound_s_n_gt_2eps": pw.lower_bound_ok,
            });
            Ok(document(
                meta(digest, "f64", json!({"k_depth": a.k_depth})),
                result,
            ))
        }
        other => Err(CliError::Input(format!(
            "unknown format {other:?}; use csv or json"
        ))),
    }
}
