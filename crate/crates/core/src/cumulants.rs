//! Moment-to-cumulant polynomials.
//!
//! `κ_m = Σ_λ c_λ Π_{k∈λ} μ_k`, where λ runs over integer partitions of `m`.
//! Coefficients come from expanding `log(1 + Σ_k μ_k t^k / k!)` as a formal
//! power series with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Number, Value};

use crate::error::{invalid, Error, Result};

/// Guard against the factorial growth of the coefficient table.
pub const MAX_CUMULANT_ORDER: usize = 20;

/// Integer partition, parts sorted in descending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return invalid("a partition needs at least one positive part");
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn max_part(&self) -> usize {
        self.parts[0]
    }

    /// `Π_{k∈λ} μ_k` with `moments[k-1] = μ_k`.
    pub fn monomial(&self, moments: &[f64]) -> f64 {
        self.parts.iter().map(|&k| moments[k - 1]).product()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (n, p) in self.parts.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// Exact coefficients `c_λ` for every partition of total `≤ max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTable {
    max_order: usize,
    coeffs: BTreeMap<Partition, BigRational>,
}

impl CumulantTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn exact(&self, lambda: &Partition) -> Option<&BigRational> {
        self.coeffs.get(lambda)
    }

    pub fn coeff(&self, lambda: &Partition) -> Option<f64> {
        self.exact(lambda).map(rational_to_f64)
    }

    /// Non-zero terms of `κ_m`, in descending lexicographic order of λ.
    pub fn terms(&self, m: usize) -> Vec<(&Partition, &BigRational)> {
        let mut out: Vec<_> = self.coeffs.iter().filter(|(p, _)| p.total() == m).collect();
        out.reverse();
        out
    }

    /// Evaluates `κ_m` from raw moments `μ_1..μ_k` (`k ≥ m`).
    pub fn evaluate(&self, moments: &[f64], m: usize) -> Result<f64> {
        if m == 0 || m > self.max_order {
            return invalid(format!("order {m} outside the table range 1..={}", self.max_order));
        }
        if moments.len() < m {
            return invalid(format!("order {m} needs {m} moments, got {}", moments.len()));
        }
        Ok(self
            .terms(m)
            .into_iter()
            .map(|(p, c)| rational_to_f64(c) * p.monomial(moments))
            .sum())
    }

    /// `{"m": {"[λ]": c_λ, ...}, ...}` with integral coefficients written as
    /// JSON integers when they fit in 64 bits.
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        for m in 1..=self.max_order {
            let mut row = Map::new();
            for (p, c) in self.terms(m) {
                row.insert(p.to_string(), rational_to_json(c));
            }
            root.insert(m.to_string(), Value::Object(row));
        }
        Value::Object(root)
    }
}

fn rational_to_f64(c: &BigRational) -> f64 {
    let num = c.numer().to_f64().unwrap_or(f64::NAN);
    let den = c.denom().to_f64().unwrap_or(f64::NAN);
    num / den
}

fn rational_to_json(c: &BigRational) -> Value {
    if c.is_integer() {
        if let Some(i) = c.numer().to_i64() {
            return Value::Number(i.into());
        }
    }
    Number::from_f64(rational_to_f64(c))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

type Poly = BTreeMap<Vec<usize>, BigRational>;

fn poly_mul(a: &Poly, b: &Poly, max_order: usize) -> Poly {
    let mut out = Poly::new();
    for (ka, ca) in a {
        let ta: usize = ka.iter().sum();
        for (kb, cb) in b {
            let tb: usize = kb.iter().sum();
            if ta + tb > max_order {
                continue;
            }
            let mut key = ka.clone();
            key.extend_from_slice(kb);
            key.sort_unstable_by(|x, y| y.cmp(x));
            *out.entry(key).or_insert_with(BigRational::zero) += ca * cb;
        }
    }
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Table of `c_λ` for all partitions of total `1..=max_order`.
pub fn cumulant_coefficients(max_order: usize) -> Result<CumulantTable> {
    if max_order == 0 {
        return invalid("max_order must be at least 1");
    }
    if max_order > MAX_CUMULANT_ORDER {
        return Err(Error::ResourceLimit(format!(
            "cumulant order {max_order} exceeds the guard {MAX_CUMULANT_ORDER}"
        )));
    }
    // u = Σ_k μ_k t^k / k!; the t-degree of a monomial is the sum of its parts.
    let u: Poly = (1..=max_order)
        .map(|k| (vec![k], BigRational::new(BigInt::one(), factorial(k))))
        .collect();
    let mut log_series = Poly::new();
    let mut power = u.clone();
    for j in 1..=max_order {
        let sign = if j % 2 == 1 { 1 } else { -1 };
        let scale = BigRational::new(BigInt::from(sign), BigInt::from(j));
        for (key, c) in &power {
            *log_series.entry(key.clone()).or_insert_with(BigRational::zero) += c * &scale;
        }
        power = poly_mul(&power, &u, max_order);
    }
    let coeffs = log_series
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(key, c)| {
            let m = key.iter().sum::<usize>();
            let c = c * BigRational::from_integer(factorial(m));
            (Partition { parts: key }, c)
        })
        .collect();
    Ok(CumulantTable { max_order, coeffs })
}

/// `κ_m(μ_1, …, μ_m)` with `moments[k-1] = μ_k`.
pub fn cumulant_from_moments(moments: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return invalid("cumulant order must be at least 1");
    }
    if m > moments.len() {
        return invalid(format!("order {m} needs {m} moments, got {}", moments.len()));
    }
    cumulant_coefficients(m)?.evaluate(moments, m)
}

/// Partitions of `total` whose largest part is at most `max_part` (exactly
/// `max_part` when `require_max`), in descending lexicographic order.
pub fn partitions_with_max_part(total: usize, max_part: usize, require_max: bool) -> Vec<Partition> {
    fn rec(rest: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in (1..=cap.min(rest)).rev() {
            prefix.push(p);
            rec(rest - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    if total == 0 {
        return Vec::new();
    }
    if require_max {
        if max_part == 0 || max_part > total {
            return Vec::new();
        }
        let mut prefix = vec![max_part];
        rec(total - max_part, max_part, &mut prefix, &mut raw);
    } else {
        rec(total, max_part, &mut Vec::new(), &mut raw);
    }
    raw.into_iter().map(|parts| Partition { parts }).collect()
}

/// Largest absolute coefficient sum `Σ_λ |c_λ|` among partitions of `m`.
pub fn coefficient_abs_sum(table: &CumulantTable, m: usize) -> BigRational {
    table
        .terms(m)
        .into_iter()
        .fold(BigRational::zero(), |acc, (_, c)| acc + c.abs())
}
