//! Hecke operators: `T_{p^2}` on half-integral weight expansions and `T_p` on
//! integral weight expansions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{kronecker, pow_u};
use crate::error::{exhausted, Error, Result};
use crate::qseries::QSeries;
use crate::spaces::HalfIntegralForm;

/// A form of even weight `2k` (typically a Shimura lift).
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralForm {
    weight: u32,
    level: u64,
    coeffs: QSeries,
    primitive: bool,
}

impl IntegralForm {
    pub fn new(weight: u32, level: u64, coeffs: QSeries) -> Self {
        IntegralForm {
            weight,
            level,
            coeffs,
            primitive: false,
        }
    }

    /// Marks the form primitive; requires `a(1) = 1`.
    pub fn into_primitive(mut self) -> Result<Self> {
        if self.coeffs.coeff(1) != Some(&BigRational::one()) {
            return Err(Error::InvalidArgument(
                "a primitive form needs leading coefficient a(1) = 1".into(),
            ));
        }
        self.primitive = true;
        Ok(self)
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// `k` with weight `2k`.
    pub fn k(&self) -> u32 {
        self.weight / 2
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn coeffs(&self) -> &QSeries {
        &self.coeffs
    }

    pub fn precision(&self) -> usize {
        self.coeffs.precision()
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive
    }

    pub fn coeff(&self, n: u64) -> Result<&BigRational> {
        self.coeffs
            .coeff(n as usize)
            .ok_or_else(|| exhausted(format!("weight {} form", self.weight), n, self.precision() as u64))
    }

    /// `a(n)` as an integer; errors on a non-integral coefficient.
    pub fn integer_coeff(&self, n: u64) -> Result<BigInt> {
        let c = self.coeff(n)?;
        if !c.is_integer() {
            return Err(Error::InvalidArgument(format!(
                "coefficient a({n}) = {c} is not integral"
            )));
        }
        Ok(c.to_integer())
    }

    /// The same form truncated to `prec` coefficients.
    pub fn truncate(&self, prec: usize) -> IntegralForm {
        IntegralForm {
            coeffs: self.coeffs.truncate(prec),
            ..self.clone()
        }
    }
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `T_{p^2}` on a weight-`k + 1/2` expansion:
/// `b(n) = a(p^2 n) + ((-1)^k n / p) p^{k-1} a(n) + p^{2k-1} a(n/p^2)`.
pub fn tp2_half(f: &HalfIntegralForm, p: u64) -> Result<HalfIntegralForm> {
    if p == 2 || !is_prime(p) {
        return Err(Error::InvalidArgument(format!(
            "T_{{p^2}} needs an odd prime, got {p}"
        )));
    }
    if f.level_n() % p == 0 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} divides the level {}",
            f.level()
        )));
    }
    let prec = f.precision();
    let p2 = (p * p) as usize;
    let out_prec = prec / p2;
    if out_prec < 2 {
        return Err(exhausted(format!("T_{{{p}^2}}"), 2 * p2 as u64, prec as u64));
    }
    let k = f.k();
    let a = f.coeffs().coeffs();
    let mid = BigRational::from_integer(pow_u(p, k - 1));
    let top = BigRational::from_integer(pow_u(p, 2 * k - 1));
    let sign = if k % 2 == 0 { 1i64 } else { -1 };
    let coeffs = (0..out_prec)
        .map(|n| {
            let mut c = a[n * p2].clone();
            let chi = kronecker(sign * n as i64, p as i64);
            if chi != 0 && !a[n].is_zero() {
                let term = &mid * &a[n];
                if chi > 0 {
                    c += term;
                } else {
                    c -= term;
                }
            }
            if n % p2 == 0 {
                c += &top * &a[n / p2];
            }
            c
        })
        .collect();
    Ok(f.derived(QSeries::from_coeffs(coeffs)))
}

/// `T_p` on a weight-`2k` expansion: `b(n) = a(pn) + p^{2k-1} a(n/p)`.
pub fn tp_integral(form: &IntegralForm, p: u64) -> Result<IntegralForm> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("T_p needs a prime, got {p}")));
    }
    if form.level % p == 0 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} divides the level {}",
            form.level
        )));
    }
    let prec = form.precision();
    let pu = p as usize;
    let out_prec = prec / pu;
    if out_prec < 2 {
        return Err(exhausted(format!("T_{p}"), 2 * p, prec as u64));
    }
    let a = form.coeffs.coeffs();
    let top = BigRational::from_integer(pow_u(p, form.weight - 1));
    let coeffs = (0..out_prec)
        .map(|n| {
            let mut c = a[n * pu].clone();
            if n % pu == 0 {
                c += &top * &a[n / pu];
            }
            c
        })
        .collect();
    Ok(IntegralForm::new(form.weight, form.level, QSeries::from_coeffs(coeffs)))
}

/// `A(p^m)` for a primitive form from `A(p)` by
/// `A(p^m) = A(p) A(p^{m-1}) - p^{2k-1} A(p^{m-2})`.
pub fn prime_power_coefficients(a_p: &BigInt, p: u64, k: u32, max_m: u32) -> Vec<BigInt> {
    let top = pow_u(p, 2 * k - 1);
    let mut out = vec![BigInt::one()];
    if max_m == 0 {
        return out;
    }
    out.push(a_p.clone());
    for m in 2..=max_m as usize {
        let next = a_p * &out[m - 1] - &top * &out[m - 2];
        out.push(next);
    }
    out
}

/// Whether `A(p)^2 <= 4 p^{2k-1}` holds exactly.
pub fn within_deligne_bound(a_p: &BigInt, p: u64, k: u32) -> bool {
    a_p * a_p <= pow_u(p, 2 * k - 1) * 4u32
}

/// Scales a series coefficientwise, used to compare `T(c f)` and `c T(f)`.
pub fn scale_integral(form: &IntegralForm, c: &BigRational) -> IntegralForm {
    IntegralForm::new(form.weight, form.level, form.coeffs.scale(c))
}

#[cfg(test)]
fn zero_integral(weight: u32, level: u64, prec: usize) -> IntegralForm {
    IntegralForm::new(weight, level, QSeries::from_coeffs(vec![BigRational::zero(); prec]))
}
