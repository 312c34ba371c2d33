//! Dense complex polynomial arithmetic: evaluation, composition, derivatives
//! and root power sums through Newton's identities, over any [`Coeff`] domain.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Coeff, CQ};

/// Largest degree `compose` is willing to materialize by default. Cumulative
/// degrees of composition towers grow exponentially; beyond the cap callers
/// must evaluate through the tower instead of expanding coefficients.
pub const DEFAULT_COMPOSE_CAP: usize = 4096;

/// A dense polynomial with coefficients in ascending degree order.
///
/// The coefficient at index `j` multiplies `z^j`; the leading coefficient is
/// nonzero except for the zero constant.
#[derive(Clone, PartialEq)]
pub struct Polynomial<S: Coeff> {
    coeffs: Vec<S>,
}

impl<S: Coeff> Polynomial<S> {
    /// Build a polynomial from ascending coefficients, trimming trailing
    /// zeros. An empty coefficient list is rejected.
    pub fn new(mut coeffs: Vec<S>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Input("a polynomial needs at least one coefficient".into()));
        }
        while coeffs.len() > 1 && coeffs.last().map(Zero::is_zero) == Some(true) {
            coeffs.pop();
        }
        Ok(Polynomial { coeffs })
    }

    pub fn constant(value: S) -> Self {
        Polynomial { coeffs: vec![value] }
    }

    /// The monomial `z`.
    pub fn identity() -> Self {
        Polynomial { coeffs: vec![S::zero(), S::one()] }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| S::from_int(c)).collect())
            .expect("non-empty coefficient list")
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Coefficient of `z^j`, zero beyond the degree.
    pub fn coeff(&self, j: usize) -> S {
        self.coeffs.get(j).cloned().unwrap_or_else(S::zero)
    }

    pub fn leading(&self) -> &S {
        self.coeffs.last().expect("coefficients are never empty")
    }

    /// Nested (Horner) evaluation; exact in the exact-rational domain. In
    /// float mode an overflow propagates as an infinite-magnitude value.
    pub fn evaluate(&self, z: &S) -> S {
        let mut acc = self.leading().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Result<Polynomial<S>> {
        if self.degree() == 0 {
            return Err(Error::precondition("derivative requires degree >= 1"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| S::from_int(j as i64) * c.clone())
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn mul(&self, rhs: &Polynomial<S>) -> Polynomial<S> {
        let mut out = vec![S::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial { coeffs: out }
    }

    pub fn add_scalar(&self, s: &S) -> Polynomial<S> {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = coeffs[0].clone() + s.clone();
        Polynomial::new(coeffs).expect("non-empty")
    }

    pub fn scale(&self, s: &S) -> Polynomial<S> {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }

    /// Divide every coefficient by the leading one.
    pub fn monic(&self) -> Polynomial<S> {
        let lead = self.leading().clone();
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| c.clone() / lead.clone()).collect(),
        }
    }

    /// `outer ∘ inner` with the default materialization cap.
    pub fn compose(&self, inner: &Polynomial<S>) -> Result<Polynomial<S>> {
        self.compose_with_cap(inner, DEFAULT_COMPOSE_CAP)
    }

    /// `outer ∘ inner`; refuses to materialize degrees above `cap`.
    pub fn compose_with_cap(&self, inner: &Polynomial<S>, cap: usize) -> Result<Polynomial<S>> {
        if self.degree() < 1 || inner.degree() < 1 {
            return Err(Error::precondition("compose requires both degrees >= 1"));
        }
        let result_degree = self.degree().checked_mul(inner.degree());
        match result_degree {
            Some(d) if d <= cap => {}
            _ => {
                return Err(Error::ComposeCapExceeded {
                    degree: result_degree
                        .map(|d| d.to_string())
                        .unwrap_or_else(|| "overflow".into()),
                    cap,
                })
            }
        }
        let mut acc = Polynomial::constant(self.leading().clone());
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + c.clone();
        }
        if !S::exact() && acc.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::CoefficientOverflow { degree: acc.degree() });
        }
        Ok(acc)
    }

    /// Convert pointwise into another coefficient domain through `f`.
    pub fn map<T: Coeff>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        Polynomial {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn to_c64(&self) -> Polynomial<Complex64> {
        self.map(|c| c.to_c64())
    }

    /// Root power sums `s_1 .. s_K` via Newton's identities, computed from
    /// coefficient ratios without extracting roots. Valid only for
    /// `K <= degree - 1`; the constant coefficient never enters, so the
    /// result is invariant under adding a constant to the polynomial.
    pub fn power_sums(&self, k_max: usize) -> Result<PowerSumTable<S>> {
        let n = self.degree();
        if k_max < 1 || k_max > n.saturating_sub(1) {
            return Err(Error::precondition(format!(
                "power sums need 1 <= K <= degree - 1 (K = {k_max}, degree = {n})"
            )));
        }
        let lead = self.leading().clone();
        // r[i] = a_{n-i} / a_n for i = 1..K
        let ratio = |i: usize| self.coeff(n - i) / lead.clone();
        let mut values: Vec<S> = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let mut s = -(S::from_int(k as i64) * ratio(k));
            for i in 1..k {
                s = s - ratio(i) * values[k - i - 1].clone();
            }
            values.push(s);
        }
        Ok(PowerSumTable {
            values,
            source_degree: n,
        })
    }
}

impl Polynomial<CQ> {
    /// True when every coefficient has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.is_zero())
    }
}

impl<S: Coeff> std::fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Polynomial[")?;
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// Root power sums `s_1 .. s_K` of a source polynomial of degree `n`;
/// `values[k-1]` holds `s_k` and `K <= n - 1` always.
#[derive(Clone, Debug)]
pub struct PowerSumTable<S: Coeff> {
    pub values: Vec<S>,
    pub source_degree: usize,
}

impl<S: Coeff> PowerSumTable<S> {
    pub fn valid_up_to(&self) -> usize {
        self.values.len()
    }

    /// `s_k` for `1 <= k <= valid_up_to`.
    pub fn s(&self, k: usize) -> &S {
        &self.values[k - 1]
    }
}
