//! Admissible exponent sets for the weighted interpolation inequality.
//!
//! Raw inputs `(n, p, q, mu)` are validated against the chained conditions
//! `1 < p < p + mu < n` and `1 <= q < p(q-1)/(p-1) < np/(n-p)`, after which
//! every dependent exponent is derived in exact rational arithmetic. Floats
//! only appear in the [`Exponents`] mirror used by the quadrature code.

pub mod rational;

use std::fmt;

use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CknError, Result};
pub use rational::Rational;
use rational::{from_f64_decimal, int, parse_rational, to_decimal_string, to_f64};

/// User-supplied parameters before admissibility checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawParams {
    pub n: u32,
    pub p: Rational,
    pub q: Rational,
    pub mu: Rational,
}

impl RawParams {
    pub fn new(n: u32, p: Rational, q: Rational, mu: Rational) -> Result<Self> {
        if n < 2 {
            return Err(CknError::InvalidInput(format!("dimension n = {n} must be at least 2")));
        }
        Ok(Self { n, p, q, mu })
    }

    /// Builds from floats via their shortest decimal representation (`2.5` is `5/2`).
    pub fn from_f64(n: u32, p: f64, q: f64, mu: f64) -> Result<Self> {
        Self::new(n, from_f64_decimal(p)?, from_f64_decimal(q)?, from_f64_decimal(mu)?)
    }

    pub fn parse(n: u32, p: &str, q: &str, mu: &str) -> Result<Self> {
        Self::new(n, parse_rational(p)?, parse_rational(q)?, parse_rational(mu)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("raw params serialize")
    }
}

impl fmt::Display for RawParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(n={}, p={}, q={}, mu={})",
            self.n,
            to_decimal_string(&self.p),
            to_decimal_string(&self.q),
            to_decimal_string(&self.mu)
        )
    }
}

impl Serialize for RawParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("p", &to_decimal_string(&self.p))?;
        map.serialize_entry("q", &to_decimal_string(&self.q))?;
        map.serialize_entry("mu", &to_decimal_string(&self.mu))?;
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(serde_json::Number),
    Text(String),
}

impl NumberOrText {
    fn rational(&self) -> Result<Rational> {
        match self {
            NumberOrText::Number(n) => parse_rational(&n.to_string()),
            NumberOrText::Text(s) => parse_rational(s),
        }
    }
}

impl<'de> Deserialize<'de> for RawParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            n: NumberOrText,
            p: NumberOrText,
            q: NumberOrText,
            mu: NumberOrText,
        }
        let wire = Wire::deserialize(deserializer)?;
        let n = wire.n.rational().map_err(D::Error::custom)?;
        if !n.is_integer() || n < int(2) || n > int(u32::MAX as i64) {
            return Err(D::Error::custom(format!("n must be an integer >= 2, got {n}")));
        }
        let n: u32 = n.to_integer().to_string().parse().map_err(D::Error::custom)?;
        let build =
            || -> Result<RawParams> { RawParams::new(n, wire.p.rational()?, wire.q.rational()?, wire.mu.rational()?) };
        build().map_err(D::Error::custom)
    }
}

/// One failed admissibility inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails ({} vs {})", self.constraint, self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, constraint: &str) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}

pub const C_P_GT_ONE: &str = "1 < p";
pub const C_MU_POSITIVE: &str = "p < p+mu";
pub const C_BELOW_DIM: &str = "p+mu < n";
pub const C_Q_AT_LEAST_ONE: &str = "1 <= q";
pub const C_Q_BELOW_R: &str = "q < p(q-1)/(p-1)";
pub const C_R_SUBCRITICAL: &str = "p(q-1)/(p-1) < np/(n-p)";

/// How strictly [`CknParams::derive_with`] treats the Sobolev-critical endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Admissibility {
    /// Every inequality must hold strictly.
    #[default]
    Strict,
    /// Additionally accept `p(q-1)/(p-1) = np/(n-p)`, where the interpolation
    /// exponent reaches `a = 1`.
    CriticalEndpoint,
}

/// Checks the chained admissibility inequalities. Violations are data, not errors.
pub fn validate(raw: &RawParams) -> ValidationReport {
    validate_with(raw, Admissibility::Strict)
}

pub fn validate_with(raw: &RawParams, mode: Admissibility) -> ValidationReport {
    let n = int(raw.n as i64);
    let one = Rational::one();
    let (p, q, mu) = (&raw.p, &raw.q, &raw.mu);
    let mut violations = Vec::new();
    let mut check = |ok: bool, constraint: &'static str, lhs: &Rational, rhs: &Rational| {
        if !ok {
            violations.push(Violation { constraint, lhs: to_f64(lhs), rhs: to_f64(rhs) });
        }
    };

    let p_mu = p + mu;
    check(&one < p, C_P_GT_ONE, &one, p);
    check(p < &p_mu, C_MU_POSITIVE, p, &p_mu);
    check(p_mu < n, C_BELOW_DIM, &p_mu, &n);
    check(&one <= q, C_Q_AT_LEAST_ONE, &one, q);

    if p == &one {
        // p(q-1)/(p-1) is undefined; both dependent inequalities fail.
        check(false, C_Q_BELOW_R, q, &Rational::zero());
        check(false, C_R_SUBCRITICAL, &Rational::zero(), &Rational::zero());
        return ValidationReport { violations };
    }
    let r = p * (q - &one) / (p - &one);
    check(q < &r, C_Q_BELOW_R, q, &r);
    let critical_ok = if n > *p {
        let sobolev = &n * p / (&n - p);
        let ok = match mode {
            Admissibility::Strict => r < sobolev,
            Admissibility::CriticalEndpoint => r <= sobolev,
        };
        (ok, sobolev)
    } else {
        (false, Rational::zero())
    };
    check(critical_ok.0, C_R_SUBCRITICAL, &r, &critical_ok.1);
    ValidationReport { violations }
}

/// Floating-point mirror of [`CknParams`], used inside integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub n: f64,
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    pub r: f64,
    pub a: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub g_exp: f64,
    /// `(p-1)/(q-p)`: the extremal profile is `(lambda + t^kappa)^(-profile_exp)`.
    pub profile_exp: f64,
    /// `q(p-1)/(q-p)`, which also equals `(r(p-1)-(q-p))/(q-p)`.
    pub mass_exp: f64,
}

/// A validated parameter set with every derived exponent held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CknParams {
    pub n: u32,
    pub p: Rational,
    pub q: Rational,
    pub mu: Rational,
    pub r: Rational,
    pub theta: Rational,
    pub s: Rational,
    pub a: Rational,
    pub nu: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
    pub sigma: Rational,
    pub kappa: Rational,
    pub g_exp: Rational,
    pub profile_exp: Rational,
    pub mass_exp: Rational,
    float: Exponents,
}

impl CknParams {
    pub fn derive(raw: &RawParams) -> Result<Self> {
        Self::derive_with(raw, Admissibility::Strict)
    }

    pub fn derive_with(raw: &RawParams, mode: Admissibility) -> Result<Self> {
        let report = validate_with(raw, mode);
        if !report.is_ok() {
            return Err(CknError::InvalidParams(report.violations));
        }
        let one = Rational::one();
        let n = int(raw.n as i64);
        let (p, q, mu) = (raw.p.clone(), raw.q.clone(), raw.mu.clone());

        let r = &p * (&q - &one) / (&p - &one);
        let theta = &n * &mu / (&n - &p);
        let s = theta.clone();
        let nu = &n * &p - &q * (&n - &p);
        let a = &n * (&q - &p) / ((&q - &one) * &nu);
        let alpha = -&mu / &p;
        let beta = -&theta / &q;
        let gamma = -&s / &r;
        let sigma = (&gamma - (&one - &a) * &beta) / &a;
        let kappa = (&n - &p - &mu) / (&n - &p) * (&p / (&p - &one));
        let g_exp = ((&q - &p) * (&p - &one) * &n - &p * &q * (&p - &one)) / (&p * (&q - &p));
        let profile_exp = (&p - &one) / (&q - &p);
        let mass_exp = &q * (&p - &one) / (&q - &p);

        let float = Exponents {
            n: raw.n as f64,
            p: to_f64(&p),
            q: to_f64(&q),
            mu: to_f64(&mu),
            r: to_f64(&r),
            a: to_f64(&a),
            nu: to_f64(&nu),
            alpha: to_f64(&alpha),
            beta: to_f64(&beta),
            gamma: to_f64(&gamma),
            kappa: to_f64(&kappa),
            g_exp: to_f64(&g_exp),
            profile_exp: to_f64(&profile_exp),
            mass_exp: to_f64(&mass_exp),
        };
        let params = CknParams {
            n: raw.n,
            p,
            q,
            mu,
            r,
            theta,
            s,
            a,
            nu,
            alpha,
            beta,
            gamma,
            sigma,
            kappa,
            g_exp,
            profile_exp,
            mass_exp,
            float,
        };
        let broken = params.invariant_failures();
        if !broken.is_empty() {
            return Err(CknError::InvalidParams(broken));
        }
        Ok(params)
    }

    pub fn raw(&self) -> RawParams {
        RawParams { n: self.n, p: self.p.clone(), q: self.q.clone(), mu: self.mu.clone() }
    }

    pub fn float(&self) -> &Exponents {
        &self.float
    }

    /// True when the q-term carries exponent `(1-a)/q = 0` and must be skipped.
    pub fn q_term_vanishes(&self) -> bool {
        self.a.is_one()
    }

    /// `a/p + (1-a)/q - 1/r`, which equals `a/n` on the admissible set.
    pub fn measure_scaling_exponent(&self) -> Rational {
        let one = Rational::one();
        &self.a / &self.p + (&one - &self.a) / &self.q - &one / &self.r
    }

    /// Exponent appearing in the decay obstruction: `-q(p-1)/(q-p) - 1 - g_exp`.
    pub fn eta(&self) -> Rational {
        -&self.mass_exp - Rational::one() - &self.g_exp
    }

    /// `n + gamma r - 1`, the power of `t` in the radial mass integrand at the origin.
    pub fn origin_exponent(&self) -> Rational {
        int(self.n as i64) + &self.gamma * &self.r - Rational::one()
    }

    /// Power of `t` in the same integrand at infinity.
    pub fn decay_exponent(&self) -> Rational {
        self.origin_exponent() - &self.kappa * &self.mass_exp
    }

    pub fn general_exponents(&self) -> GeneralExponents {
        GeneralExponents {
            n: self.n,
            p: self.p.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            a: self.a.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
        }
    }

    /// Zero-sum scaling exponent of the quotient under `u(x) -> u(lambda x)`.
    pub fn dilation_residual(&self) -> Rational {
        self.general_exponents().dilation_residual()
    }

    /// Every structural identity the derived record must satisfy; empty when sound.
    pub fn invariant_failures(&self) -> Vec<Violation> {
        let one = Rational::one();
        let zero = Rational::zero();
        let n = int(self.n as i64);
        let mut out = Vec::new();
        let mut require = |ok: bool, constraint: &'static str, lhs: &Rational, rhs: &Rational| {
            if !ok {
                out.push(Violation { constraint, lhs: to_f64(lhs), rhs: to_f64(rhs) });
            }
        };
        require(self.a > zero && self.a <= one, "0 < a <= 1", &self.a, &one);
        let gamma_split = &self.a * &self.sigma + (&one - &self.a) * &self.beta;
        require(gamma_split == self.gamma, "gamma = a sigma + (1-a) beta", &gamma_split, &self.gamma);
        let scaling = self.measure_scaling_exponent();
        let a_over_n = &self.a / &n;
        require(scaling == a_over_n, "a/p + (1-a)/q - 1/r = a/n", &scaling, &a_over_n);
        let origin = self.origin_exponent();
        require(origin > -&one, "n + gamma r - 1 > -1", &origin, &-&one);
        let decay = self.decay_exponent();
        require(decay < -&one, "n + gamma r - 1 - kappa q(p-1)/(q-p) < -1", &decay, &-&one);
        let residual = self.dilation_residual();
        require(residual.is_zero(), "dilation exponent sums to zero", &residual, &zero);
        out
    }
}

impl Serialize for CknParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let fields: [(&str, &Rational); 16] = [
            ("p", &self.p),
            ("q", &self.q),
            ("mu", &self.mu),
            ("r", &self.r),
            ("theta", &self.theta),
            ("s", &self.s),
            ("a", &self.a),
            ("nu", &self.nu),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("sigma", &self.sigma),
            ("kappa", &self.kappa),
            ("g_exp", &self.g_exp),
            ("profile_exp", &self.profile_exp),
            ("mass_exp", &self.mass_exp),
        ];
        let mut map = serializer.serialize_map(Some(1 + 2 * fields.len()))?;
        map.serialize_entry("n", &self.n)?;
        for (name, value) in fields {
            map.serialize_entry(name, &to_decimal_string(value))?;
            map.serialize_entry(&format!("{name}_value"), &to_f64(value))?;
        }
        map.end()
    }
}

/// Exponents of the general weighted inequality, not restricted to the
/// extremal slice. Only the scaling bookkeeping is available for these.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralExponents {
    pub n: u32,
    pub p: Rational,
    pub q: Rational,
    pub r: Rational,
    pub a: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
}

impl GeneralExponents {
    /// `-alpha a - na/p + a - n(1-a)/q - beta(1-a) + n/r + gamma`.
    pub fn dilation_residual(&self) -> Rational {
        let one = Rational::one();
        let n = int(self.n as i64);
        let b = &one - &self.a;
        -&self.alpha * &self.a - &n * &self.a / &self.p + &self.a - &n * &b / &self.q - &self.beta * &b
            + &n / &self.r
            + &self.gamma
    }
}
