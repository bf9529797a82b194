//! Multiplicative depth, growth bounds and FV parameter selection.

use std::fmt;
use std::str::FromStr;

use els_fhe::{FvParams, DEFAULT_RELIN_BASE, DEFAULT_SIGMA};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ElsError, Result};
use crate::scalar::{decimal_to_rational, pow10, round_half_away};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gd,
    Cd,
    Nag,
    #[serde(rename = "gd-vwt")]
    GdVwt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Gd, Algorithm::Cd, Algorithm::Nag, Algorithm::GdVwt];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Cd => "cd",
            Algorithm::Nag => "nag",
            Algorithm::GdVwt => "gd-vwt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ElsError;

    fn from_str(s: &str) -> Result<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Algorithm::Gd),
            "cd" => Ok(Algorithm::Cd),
            "nag" => Ok(Algorithm::Nag),
            "gd-vwt" | "vwt" | "gd+vwt" => Ok(Algorithm::GdVwt),
            other => Err(ElsError::InvalidPlan(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Momentum weights eta_k for the accelerated gradient recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Momentum {
    /// eta_k = -(k-1)/(k+2)
    Nesterov,
    /// eta_k = +(k-1)/(k+2)
    NesterovPositive,
    /// Same decimal weight at every iteration.
    Constant(String),
    /// Decimal weights for k = 1, 2, ...; the last one repeats.
    Schedule(Vec<String>),
}

impl Momentum {
    /// Exact value of eta_k for k >= 1.
    pub fn eta(&self, k: u32) -> Result<BigRational> {
        let nesterov = || {
            BigRational::new(BigInt::from(k as i64 - 1), BigInt::from(k as i64 + 2))
        };
        let parse = |s: &str| {
            decimal_to_rational(s)
                .ok_or_else(|| ElsError::InvalidPlan(format!("momentum weight {s:?} is not a decimal")))
        };
        match self {
            Momentum::Nesterov => Ok(-nesterov()),
            Momentum::NesterovPositive => Ok(nesterov()),
            Momentum::Constant(s) => parse(s),
            Momentum::Schedule(v) => {
                let s = v
                    .get((k as usize - 1).min(v.len().saturating_sub(1)))
                    .ok_or_else(|| ElsError::InvalidPlan("empty momentum schedule".into()))?;
                parse(s)
            }
        }
    }

    /// round(10^phi eta_k), the integer the encrypted recursion uses.
    pub fn encoded(&self, k: u32, phi: u32) -> Result<BigInt> {
        Ok(round_half_away(&(self.eta(k)? * BigRational::from_integer(pow10(phi)))))
    }
}

/// Everything that fixes the circuit before any data is encrypted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPlan {
    pub algorithm: Algorithm,
    pub k: u32,
    pub p: usize,
    pub n: usize,
    pub phi: u32,
    /// Step size is 1/nu.
    pub nu: u64,
    /// Ridge penalty as a decimal string; "0" for least squares.
    pub alpha: String,
    pub preconditioned: bool,
    pub include_prediction: bool,
    pub momentum: Momentum,
    /// Every encoded input has absolute value at most 10^phi times this.
    #[serde(default = "default_input_bound")]
    pub input_bound: u32,
}

fn default_input_bound() -> u32 {
    10
}

impl FitPlan {
    pub fn new(algorithm: Algorithm, k: u32, p: usize, n: usize, phi: u32, nu: u64) -> FitPlan {
        FitPlan {
            algorithm,
            k,
            p,
            n,
            phi,
            nu,
            alpha: "0".into(),
            preconditioned: false,
            include_prediction: false,
            momentum: Momentum::Nesterov,
            input_bound: default_input_bound(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ElsError::InvalidPlan(m.into()));
        if self.k == 0 {
            return bad("iteration count must be at least 1");
        }
        if self.p == 0 || self.n == 0 {
            return bad("need at least one predictor and one observation");
        }
        if self.nu == 0 {
            return bad("nu must be at least 1");
        }
        if self.input_bound == 0 {
            return bad("input bound must be at least 1");
        }
        if self.alpha_rational()?.is_negative() {
            return bad("ridge penalty must be non-negative");
        }
        Ok(())
    }

    pub fn alpha_rational(&self) -> Result<BigRational> {
        decimal_to_rational(&self.alpha)
            .ok_or_else(|| ElsError::InvalidPlan(format!("ridge penalty {:?} is not a decimal", self.alpha)))
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_rational().ok().and_then(|a| a.to_f64()).unwrap_or(0.0)
    }

    pub fn is_ridge(&self) -> bool {
        self.alpha_rational().map(|a| a.is_positive()).unwrap_or(false)
    }

    /// Rows of the encrypted design, counting ridge augmentation.
    pub fn rows(&self) -> usize {
        if self.is_ridge() {
            self.n + self.p
        } else {
            self.n
        }
    }

    pub fn mmd(&self) -> u32 {
        mmd_of(self)
    }
}

pub fn mmd_of(plan: &FitPlan) -> u32 {
    let k = plan.k;
    let base = match plan.algorithm {
        Algorithm::Gd => 2 * k,
        Algorithm::GdVwt => 2 * k + 1,
        Algorithm::Nag => 3 * k,
        Algorithm::Cd => 2 * k * plan.p as u32,
    };
    base + plan.include_prediction as u32
}

/// Largest K whose depth (without prediction) fits in `mmd`.
pub fn k_for_mmd(algorithm: Algorithm, mmd: u32, p: usize) -> u32 {
    match algorithm {
        Algorithm::Gd => mmd / 2,
        Algorithm::GdVwt => mmd.saturating_sub(1) / 2,
        Algorithm::Nag => mmd / 3,
        Algorithm::Cd => mmd / (2 * p as u32),
    }
}

/// Per-iteration bounds on the message polynomial of the coefficients.
/// Index 0 is the zero starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthBounds {
    pub degree_bound_per_iter: Vec<u64>,
    pub coeff_bound_per_iter: Vec<BigInt>,
    pub n_param: f64,
}

// log2(10) to 69 decimals, truncated; the true value lies below this plus 1e-69
const LOG2_10: &str = "3.321928094887362347870319429489390175864831393024580612054756395815935";

fn log2_10_interval() -> (BigRational, BigRational) {
    let lo = decimal_to_rational(LOG2_10).unwrap();
    let hi = &lo + BigRational::new(BigInt::one(), pow10(69));
    (lo, hi)
}

fn ceil_u(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}

fn lemma3_with(n: &BigRational, k_max: u32, rows: usize, p: usize) -> (Vec<u64>, Vec<BigInt>) {
    let big = |v: u64| BigRational::from_integer(BigInt::from(v));
    let rows = big(rows as u64);
    let p = big(p as u64);
    let one = BigRational::one();
    let n1 = n + &one;
    let mut degree = vec![0u64];
    let mut coeff = vec![BigInt::zero()];
    if k_max == 0 {
        return (degree, coeff);
    }
    degree.push(ceil_u(&(big(3) * n)).to_u64().unwrap());
    coeff.push(ceil_u(&(n * &n1 * &rows)));
    let growth = (big(4) * n + &n1 * &n1) * &rows * &p;
    for k in 2..=k_max as u64 {
        let prev_d = big(degree[k as usize - 1]);
        let a = big(4) * n + prev_d;
        let b = big(4 * k - 1) * n;
        let d = if a > b { a } else { b };
        degree.push(ceil_u(&d).to_u64().unwrap());
        let prev_c = BigRational::from_integer(coeff[k as usize - 1].clone());
        let c = &growth * prev_c + big(4 * k - 3) * n * &n1 * &rows;
        coeff.push(ceil_u(&c));
    }
    (degree, coeff)
}

/// Degree and coefficient bounds for GD iterates, ceiled at every step.
///
/// n = (phi + 1) log2 10 is evaluated at a rational upper bound a hair
/// above the true value, so every ceiling is at least the exact one.
pub fn lemma3_bounds(plan: &FitPlan) -> Result<GrowthBounds> {
    if plan.algorithm != Algorithm::Gd {
        return Err(ElsError::UnsupportedPlan(format!(
            "growth bounds are only available for gd, not {}",
            plan.algorithm
        )));
    }
    let (_, hi) = log2_10_interval();
    let n = hi * BigRational::from_integer(BigInt::from(plan.phi + 1));
    let (degree, coeff) = lemma3_with(&n, plan.k, plan.rows(), plan.p);
    Ok(GrowthBounds {
        degree_bound_per_iter: degree,
        coeff_bound_per_iter: coeff,
        n_param: (plan.phi + 1) as f64 * 10f64.log2(),
    })
}

/// Max degree and max |coefficient| seen at each iterate, from message
/// polynomials of the oracle backend.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedGrowth {
    pub degree_per_iter: Vec<u64>,
    pub max_coeff_per_iter: Vec<BigInt>,
}

impl ObservedGrowth {
    pub fn within(&self, bounds: &GrowthBounds) -> bool {
        self.degree_per_iter
            .iter()
            .zip(&bounds.degree_bound_per_iter)
            .all(|(o, b)| o <= b)
            && self
                .max_coeff_per_iter
                .iter()
                .zip(&bounds.coeff_bound_per_iter)
                .all(|(o, b)| o <= b)
            && self.degree_per_iter.len() <= bounds.degree_bound_per_iter.len()
    }
}

/// `trace[k]` holds the message polynomials of every coordinate of the
/// k-th iterate, `trace[0]` being the zero start.
pub fn observed_growth(trace: &[Vec<Vec<BigInt>>]) -> ObservedGrowth {
    let mut degree_per_iter = Vec::with_capacity(trace.len());
    let mut max_coeff_per_iter = Vec::with_capacity(trace.len());
    for iterate in trace {
        let mut deg = 0u64;
        let mut max = BigInt::zero();
        for poly in iterate {
            if let Some(top) = poly.iter().rposition(|c| !c.is_zero()) {
                deg = deg.max(top as u64);
            }
            for c in poly {
                if c.abs() > max {
                    max = c.abs();
                }
            }
        }
        degree_per_iter.push(deg);
        max_coeff_per_iter.push(max);
    }
    ObservedGrowth {
        degree_per_iter,
        max_coeff_per_iter,
    }
}

/// Which limit a plan ran into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingConstraint {
    Depth,
    Degree,
    Coefficient,
}

impl fmt::Display for BindingConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BindingConstraint::Depth => "depth",
            BindingConstraint::Degree => "degree",
            BindingConstraint::Coefficient => "coefficient",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityRow {
    pub d: usize,
    pub log2q_max: u32,
    pub max_depth_ref: u32,
    pub security_bits: u32,
}

pub const SECURITY_TABLE_VERSION: u32 = 1;
const SECURITY_TABLE_CSV: &str = include_str!("../params/security_table.v1.csv");

/// Rows sorted by ring degree.
pub fn security_table() -> Vec<SecurityRow> {
    parse_security_table(SECURITY_TABLE_CSV).expect("bundled security table is well formed")
}

pub fn parse_security_table(text: &str) -> Result<Vec<SecurityRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let row: SecurityRow = rec.map_err(|e| ElsError::Format(format!("security table: {e}")))?;
        rows.push(row);
    }
    rows.sort_by_key(|r| r.d);
    Ok(rows)
}

/// Empirical noise consumption of the FV implementation, in bits.
pub mod noise {
    /// Slack kept on top of the modelled consumption.
    pub const MARGIN_BITS: f64 = 10.0;

    pub fn fresh_bits(log2_t: f64, d: usize) -> f64 {
        2.0 * log2_t + 0.5 * (d as f64).log2() + 6.0
    }

    /// Cost of one level whose widest fused sum has `terms` products.
    pub fn per_level_bits(log2_t: f64, d: usize, terms: usize) -> f64 {
        log2_t + (d as f64).log2() + (terms.max(1) as f64).log2() + 4.0
    }

    pub fn required_log2_q(log2_t: f64, d: usize, depth: u32, terms: usize) -> f64 {
        1.0 + fresh_bits(log2_t, d) + depth as f64 * per_level_bits(log2_t, d, terms) + MARGIN_BITS
    }

    /// Deepest circuit a modulus of `log2_q` bits admits, if any.
    pub fn max_depth(log2_q: f64, log2_t: f64, d: usize, terms: usize) -> Option<u32> {
        let room = log2_q - 1.0 - fresh_bits(log2_t, d) - MARGIN_BITS;
        (room >= 0.0).then(|| (room / per_level_bits(log2_t, d, terms)).floor() as u32)
    }

    pub const REF_LOG2_T: f64 = 16.0;
    pub const REF_TERMS: usize = 128;
}

/// Parameters picked for a plan, with the figures that drove the choice.
#[derive(Clone, Debug)]
pub struct ParamSelection {
    pub params: FvParams,
    pub mmd: u32,
    pub degree_bound: u64,
    pub coeff_bound: BigInt,
    pub log2_q_required: f64,
    pub row: SecurityRow,
    pub binding: BindingConstraint,
}

impl fmt::Display for ParamSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mmd            {}", self.mmd)?;
        writeln!(f, "degree bound   {}", self.degree_bound)?;
        writeln!(f, "coeff bound    2^{:.1}", log2_int(&self.coeff_bound))?;
        writeln!(f, "ring degree d  {}", self.params.d)?;
        writeln!(f, "log2 t         {:.0}", self.params.log2_t())?;
        writeln!(
            f,
            "log2 q         {:.1} ({} primes, {:.1} required, {} allowed)",
            self.params.log2_q(),
            self.params.moduli.len(),
            self.log2_q_required,
            self.row.log2q_max
        )?;
        writeln!(f, "security       {} bits (table v{})", self.row.security_bits, SECURITY_TABLE_VERSION)?;
        write!(f, "binding        {}", self.binding)
    }
}

pub fn log2_int(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(64);
    (x.abs() >> shift).to_f64().unwrap().log2() + shift as f64
}

/// Degree and coefficient bounds a circuit must fit in.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanBounds {
    pub degree: u64,
    pub coeff: BigInt,
    /// Widest fused sum of products.
    pub terms: usize,
}

/// Bounds used for parameter selection: the circuit bound for every
/// algorithm, and for GD the larger of that and the Lemma 3 bound.
pub fn plan_bounds(plan: &FitPlan) -> Result<PlanBounds> {
    plan.validate()?;
    let circuit = crate::engine::circuit_bounds(plan)?;
    let mut degree = circuit.degree;
    let mut coeff = circuit.coeff;
    if plan.algorithm == Algorithm::Gd {
        let l3 = lemma3_bounds(plan)?;
        degree = degree.max(*l3.degree_bound_per_iter.last().unwrap());
        coeff = coeff.max(l3.coeff_bound_per_iter.last().unwrap().clone());
    }
    Ok(PlanBounds {
        degree,
        coeff,
        terms: plan.rows().max(plan.p),
    })
}

pub fn select_params(plan: &FitPlan) -> Result<ParamSelection> {
    plan.validate()?;
    // even a one-bit plaintext modulus cannot carry this depth
    let largest = *security_table().last().expect("non-empty table");
    let terms = plan.rows().max(plan.p);
    if noise::required_log2_q(1.0, largest.d, plan.mmd(), terms) > largest.log2q_max as f64 {
        return Err(ElsError::Capacity {
            constraint: BindingConstraint::Depth,
            detail: format!("depth {} exceeds what d = {} can carry", plan.mmd(), largest.d),
        });
    }
    let bounds = plan_bounds(plan)?;
    params_for(plan.mmd(), &bounds)
}

/// Smallest tabulated ring supporting `mmd` levels with the given bounds.
pub fn params_for(mmd: u32, bounds: &PlanBounds) -> Result<ParamSelection> {
    let table = security_table();
    let t_bits = (&bounds.coeff * 2u32).bits().max(1);
    let t = BigUint::one() << t_bits;
    let log2_t = t_bits as f64;
    let largest = *table.last().expect("non-empty table");
    let degree_ok = |r: &SecurityRow| (r.d as u64) > bounds.degree;
    let required = |r: &SecurityRow| noise::required_log2_q(log2_t, r.d, mmd, bounds.terms);
    let Some(row) = table.iter().find(|r| degree_ok(r) && required(r) <= r.log2q_max as f64) else {
        let (constraint, detail) = if !degree_ok(&largest) {
            (
                BindingConstraint::Degree,
                format!("degree bound {} needs a ring above {}", bounds.degree, largest.d),
            )
        } else if mmd > largest.max_depth_ref {
            (
                BindingConstraint::Depth,
                format!("depth {mmd} exceeds the table maximum {}", largest.max_depth_ref),
            )
        } else {
            (
                BindingConstraint::Coefficient,
                format!(
                    "plaintext modulus 2^{t_bits} needs log2 q {:.0} above {}",
                    required(&largest),
                    largest.log2q_max
                ),
            )
        };
        return Err(ElsError::Capacity { constraint, detail });
    };
    let first_noise = table.iter().find(|r| required(r) <= r.log2q_max as f64).map(|r| r.d);
    let binding = if first_noise.is_some_and(|d| d < row.d) {
        BindingConstraint::Degree
    } else {
        BindingConstraint::Depth
    };
    let need = required(row);
    let q_bits = (need.ceil() as u32).max(30);
    let mut params = FvParams::with_modulus_bits(row.d, t.clone(), q_bits, DEFAULT_SIGMA, DEFAULT_RELIN_BASE)?;
    if params.log2_q() < need {
        params = FvParams::with_modulus_bits(row.d, t, q_bits + 1, DEFAULT_SIGMA, DEFAULT_RELIN_BASE)?;
    }
    if params.log2_q() > row.log2q_max as f64 {
        return Err(ElsError::Capacity {
            constraint: BindingConstraint::Depth,
            detail: format!("no prime set of {q_bits} bits fits below {} bits", row.log2q_max),
        });
    }
    Ok(ParamSelection {
        params,
        mmd,
        degree_bound: bounds.degree,
        coeff_bound: bounds.coeff.clone(),
        log2_q_required: need,
        row: *row,
        binding,
    })
}

/// Integer nu for the preconditioned step delta/N.
pub fn precondition(plan: &FitPlan) -> FitPlan {
    let mut out = plan.clone();
    out.nu = plan.nu * plan.rows() as u64;
    out.preconditioned = true;
    out
}

pub(crate) fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}
