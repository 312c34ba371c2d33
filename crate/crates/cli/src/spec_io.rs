//! Sequence input files: strict JSON schema and conversion into library
//! types. Coefficients are decimal strings or `p/q` rationals and are parsed
//! exactly.

use genjulia::k1_gamma::GammaSequence;
use genjulia::poly::Polynomial;
use genjulia::scalar::{parse_rational, CQ, Q};
use genjulia::sequence::{CompositionTower, RegularSequenceSpec, SequenceFamily, TailRule};
use num_traits::Zero;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRuleStr {
    RepeatLast,
    RepeatCycle,
    ExplicitFinite,
}

impl TailRuleStr {
    fn to_rule(&self) -> TailRule {
        match self {
            TailRuleStr::RepeatLast => TailRule::RepeatLast,
            TailRuleStr::RepeatCycle => TailRule::RepeatCycle,
            TailRuleStr::ExplicitFinite => TailRule::ExplicitFinite,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum SequenceFile {
    #[serde(rename = "explicit")]
    Explicit {
        /// Each inner list is one polynomial, ascending coefficients.
        polynomials: Vec<Vec<String>>,
        tail: TailRuleStr,
    },
    #[serde(rename = "quadratic_c")]
    QuadraticC {
        c: Vec<String>,
        #[serde(default)]
        tail: Option<TailRuleStr>,
    },
    #[serde(rename = "k1_gamma")]
    K1Gamma { gamma: Vec<String>, tail: TailRuleStr },
    #[serde(rename = "autonomous")]
    Autonomous { polynomial: Vec<String> },
}

/// A parsed sequence: either a generic polynomial sequence or the quadratic
/// gamma family (which additionally supports finite data for geometry-only
/// commands).
pub enum ParsedSequence {
    Generic(RegularSequenceSpec),
    Gamma(GammaSequence),
}

impl ParsedSequence {
    pub fn spec(&self) -> Result<RegularSequenceSpec, genjulia::Error> {
        match self {
            ParsedSequence::Generic(s) => Ok(s.clone()),
            ParsedSequence::Gamma(g) => g.to_spec(),
        }
    }

    pub fn tower(&self) -> Result<CompositionTower, genjulia::Error> {
        CompositionTower::new(self.spec()?)
    }

    pub fn gamma(&self) -> Option<&GammaSequence> {
        match self {
            ParsedSequence::Gamma(g) => Some(g),
            ParsedSequence::Generic(_) => None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ParsedSequence::Generic(_) => "generic",
            ParsedSequence::Gamma(_) => "k1_gamma",
        }
    }
}

fn parse_poly(coeffs: &[String]) -> Result<Polynomial<CQ>, String> {
    let parsed: Result<Vec<CQ>, String> = coeffs
        .iter()
        .map(|s| {
            parse_rational(s)
                .map(|q| CQ::new(q, Q::zero()))
                .map_err(|e| e.to_string())
        })
        .collect();
    Polynomial::new(parsed?).map_err(|e| e.to_string())
}

pub fn parse_sequence_json(text: &str) -> Result<ParsedSequence, String> {
    let file: SequenceFile =
        serde_json::from_str(text).map_err(|e| format!("sequence file does not match the schema: {e}"))?;
    match file {
        SequenceFile::Explicit { polynomials, tail } => {
            if polynomials.is_empty() {
                return Err("explicit family needs at least one polynomial".into());
            }
            let polys: Result<Vec<_>, String> =
                polynomials.iter().map(|p| parse_poly(p)).collect();
            RegularSequenceSpec::new(SequenceFamily::Explicit(polys?), tail.to_rule())
                .map(ParsedSequence::Generic)
                .map_err(|e| e.to_string())
        }
        SequenceFile::QuadraticC { c, tail } => {
            let cs: Result<Vec<Q>, String> = c
                .iter()
                .map(|s| parse_rational(s).map_err(|e| e.to_string()))
                .collect();
            let tail = tail.map(|t| t.to_rule()).unwrap_or(TailRule::RepeatLast);
            RegularSequenceSpec::new(SequenceFamily::QuadraticC(cs?), tail)
                .map(ParsedSequence::Generic)
                .map_err(|e| e.to_string())
        }
        SequenceFile::K1Gamma { gamma, tail } => {
            let gs: Result<Vec<Q>, String> = gamma
                .iter()
                .map(|s| parse_rational(s).map_err(|e| e.to_string()))
                .collect();
            GammaSequence::new(gs?, tail.to_rule())
                .map(ParsedSequence::Gamma)
                .map_err(|e| e.to_string())
        }
        SequenceFile::Autonomous { polynomial } => {
            RegularSequenceSpec::autonomous(parse_poly(&polynomial)?)
                .map(ParsedSequence::Generic)
                .map_err(|e| e.to_string())
        }
    }
}
