//! The Shimura lift as a divisor sum, its prime specialization, the
//! `a(t p^{2m})` recursion, and Sato-Tate normalizations with exact sign and
//! interval decisions.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{chi1, divisors, pow_u, sign_of_rat};
use crate::error::{Error, Result};
use crate::hecke::IntegralForm;
use crate::linalg::RatMatrix;
use crate::expansion::delta_power_times_eisenstein;
use crate::qseries::QSeries;
use crate::spaces::{level_one_cusp_dimension, HalfIntegralForm};

/// Which divisors enter the lift sum `sum_{d | n} chi(d) d^{k-1} a(t n^2 / d^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftConvention {
    /// Kohnen plus space: `d` coprime to `N`. The lift lands in level `N`.
    PlusSpace,
    /// Full space: `d` coprime to `2N`. The lift lands in level `2N`.
    FullSpace,
}

impl LiftConvention {
    pub fn for_form(f: &HalfIntegralForm) -> Self {
        if f.is_plus_space() {
            LiftConvention::PlusSpace
        } else {
            LiftConvention::FullSpace
        }
    }

    fn divisor_modulus(self, n_odd: u64) -> u64 {
        match self {
            LiftConvention::PlusSpace => n_odd,
            LiftConvention::FullSpace => 2 * n_odd,
        }
    }

    fn lift_level(self, n_odd: u64) -> u64 {
        self.divisor_modulus(n_odd)
    }
}

fn require_normalized(f: &HalfIntegralForm) -> Result<u64> {
    match (f.is_normalized(), f.t()) {
        (true, Some(t)) => Ok(t),
        _ => Err(Error::InvalidArgument(
            "the form must be normalized at some t first".into(),
        )),
    }
}

/// One lift coefficient `A(n) = sum_{d | n} chi_1(d) d^{k-1} a(t n^2 / d^2)`,
/// linear in the coefficients of `f`.
pub fn lift_coefficient_at(f: &HalfIntegralForm, t: u64, n: u64, convention: LiftConvention) -> Result<BigRational> {
    let k = f.k();
    let modulus = convention.divisor_modulus(f.level_n());
    let mut acc = BigRational::zero();
    for d in divisors(n) {
        if d.gcd(&modulus) != 1 {
            continue;
        }
        let chi = chi1(d, t, k);
        if chi == 0 {
            continue;
        }
        let m = n / d;
        let a = f.coeff(t * m * m)?;
        if a.is_zero() {
            continue;
        }
        let term = BigRational::from_integer(pow_u(d, k - 1)) * a;
        if chi > 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// The divisor-sum image of any form at parameter `t`, `A(n)` for `n < prec_out`.
/// Used where `f` is not normalized, e.g. on `T_{p^2} f`.
pub fn lift_series_at(f: &HalfIntegralForm, t: u64, prec_out: usize, convention: LiftConvention) -> Result<IntegralForm> {
    if prec_out < 2 {
        return Err(Error::InvalidArgument("lift precision must be at least 2".into()));
    }
    if !f.coeff(0)?.is_zero() {
        return Err(Error::InvalidArgument("lift expects a cusp form (a(0) = 0)".into()));
    }
    let coeffs: Vec<BigRational> = std::iter::once(Ok(BigRational::zero()))
        .chain(
            (1..prec_out as u64)
                .into_par_iter()
                .map(|n| lift_coefficient_at(f, t, n, convention))
                .collect::<Vec<_>>(),
        )
        .collect::<Result<_>>()?;
    Ok(IntegralForm::new(
        2 * f.k(),
        convention.lift_level(f.level_n()),
        QSeries::from_coeffs(coeffs),
    ))
}

/// One lift coefficient `A(n)` of a normalized form.
pub fn lift_coefficient(f: &HalfIntegralForm, n: u64, convention: LiftConvention) -> Result<BigRational> {
    let t = require_normalized(f)?;
    lift_coefficient_at(f, t, n, convention)
}

/// The Shimura lift `sum A(n) q^n` for `n < prec_out`, using the convention
/// matching the form's space.
pub fn lift(f: &HalfIntegralForm, prec_out: usize) -> Result<IntegralForm> {
    lift_with(f, prec_out, LiftConvention::for_form(f))
}

pub fn lift_with(f: &HalfIntegralForm, prec_out: usize, convention: LiftConvention) -> Result<IntegralForm> {
    let t = require_normalized(f)?;
    let form = lift_series_at(f, t, prec_out, convention)?;
    if f.is_eigenform() && form.coeff(1)?.is_one() {
        form.into_primitive()
    } else {
        Ok(form)
    }
}

/// `A(p) = a(t p^2) + chi_1(p) p^{k-1} a(t)`, the lift coefficient at a prime.
pub fn prime_relation(f: &HalfIntegralForm, p: u64) -> Result<BigRational> {
    let t = require_normalized(f)?;
    if p == 2 || f.level_n() % p == 0 {
        return Err(Error::InvalidArgument(format!("p = {p} divides 2N")));
    }
    let k = f.k();
    let a_tp2 = f.coeff(t * p * p)?;
    let a_t = f.coeff(t)?;
    let chi = chi1(p, t, k) as i64;
    Ok(a_tp2 + BigRational::from_integer(pow_u(p, k - 1) * chi) * a_t)
}

/// `a(t p^2) / a(t) = A(p) - chi_1(p) p^{k-1}`, recovering the half-integral
/// coefficient from the lift.
pub fn half_coeff_from_lift(a_p: &BigInt, p: u64, k: u32, chi1_p: i8) -> BigInt {
    a_p - pow_u(p, k - 1) * chi1_p as i64
}

/// `a(t p^{2m}) / a(t) = A(p^m) - chi_1(p) p^{k-1} A(p^{m-1})` with `A(p^m)`
/// from the Hecke recursion.
pub fn coeff_tp2m(a_p: &BigInt, p: u64, m: u32, k: u32, chi1_p: i8) -> BigInt {
    if m == 0 {
        return BigInt::one();
    }
    let powers = crate::hecke::prime_power_coefficients(a_p, p, k, m);
    &powers[m as usize] - pow_u(p, k - 1) * chi1_p as i64 * &powers[m as usize - 1]
}

/// Compares `lhs` with `c * sqrt(p)` exactly.
pub fn cmp_with_sqrt_multiple(lhs: &BigRational, c: &BigRational, p: u64) -> Ordering {
    let s1 = sign_of_rat(lhs);
    let s2 = sign_of_rat(c);
    if s1 != s2 {
        return s1.cmp(&s2);
    }
    if s1 == 0 {
        return Ordering::Equal;
    }
    let l2 = lhs * lhs;
    let r2 = c * c * BigRational::from_integer(BigInt::from(p));
    let mag = l2.cmp(&r2);
    if s1 > 0 {
        mag
    } else {
        mag.reverse()
    }
}

/// Fractional bits carried by [`NormalizedValue::fixed`].
pub const NORMALIZED_BITS: u32 = 96;

/// `x / (2 p^{k - 1/2})` for an exact `x`, with a 96-bit fixed-point real.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedValue {
    p: u64,
    k: u32,
    exact_numerator: BigRational,
    fixed: BigInt,
}

impl NormalizedValue {
    pub fn new(exact_numerator: BigRational, p: u64, k: u32) -> Self {
        // |value| * 2^B = sqrt(x^2 * 2^{2B} / (4 p^{2k-1}))
        let num = exact_numerator.numer().abs();
        let den = exact_numerator.denom().clone();
        let top = (&num * &num) << (2 * NORMALIZED_BITS);
        let bottom = den.clone() * den * pow_u(p, 2 * k - 1) * 4u32;
        let mag = (top / bottom).sqrt();
        let fixed = if exact_numerator.is_negative() { -mag } else { mag };
        NormalizedValue {
            p,
            k,
            exact_numerator,
            fixed,
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `k` in the scale exponent `k - 1/2`.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn exact_numerator(&self) -> &BigRational {
        &self.exact_numerator
    }

    /// The value scaled by `2^96`, truncated toward zero.
    pub fn fixed(&self) -> &BigInt {
        &self.fixed
    }

    pub fn value(&self) -> f64 {
        self.fixed.to_f64().unwrap_or(f64::NAN) / 2f64.powi(NORMALIZED_BITS as i32)
    }

    /// Sign decided on the exact numerator.
    pub fn sign(&self) -> i8 {
        sign_of_rat(&self.exact_numerator)
    }

    /// Exact comparison of the normalized value against a rational.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        // x / (2 p^{k-1} sqrt p)  vs  r   <=>   x  vs  2 r p^{k-1} sqrt p
        let c = r * BigRational::from_integer(pow_u(self.p, self.k - 1) * 2u32);
        cmp_with_sqrt_multiple(&self.exact_numerator, &c, self.p)
    }

    /// Membership in the closed interval `[lo, hi]`.
    pub fn in_closed(&self, lo: &BigRational, hi: &BigRational) -> bool {
        self.cmp_rational(lo) != Ordering::Less && self.cmp_rational(hi) != Ordering::Greater
    }

    /// Decimal rendering with `digits` fractional digits (truncated).
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = BigInt::from(10).pow(digits as u32);
        let mag = (self.fixed.abs() * &scale) >> NORMALIZED_BITS;
        let (whole, frac) = mag.div_rem(&scale);
        let sign = if self.fixed.is_negative() { "-" } else { "" };
        format!("{sign}{whole}.{frac:0>digits$}")
    }
}

impl fmt::Display for NormalizedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20))
    }
}

/// `C(p) = A(p) / (2 p^{k - 1/2})` for a weight-`2k` form.
pub fn normalized_c(form: &IntegralForm, p: u64) -> Result<NormalizedValue> {
    if form.level() % p == 0 {
        return Err(Error::InvalidArgument(format!("p = {p} divides the level")));
    }
    Ok(NormalizedValue::new(form.coeff(p)?.clone(), p, form.k()))
}

/// `a(t p^2) / (2 p^{k - 1/2})` read from the half-integral expansion.
pub fn normalized_half(f: &HalfIntegralForm, p: u64) -> Result<NormalizedValue> {
    let t = require_normalized(f)?;
    if p == 2 || f.level_n() % p == 0 {
        return Err(Error::InvalidArgument(format!("p = {p} divides 2N")));
    }
    Ok(NormalizedValue::new(f.coeff(t * p * p)?, p, f.k()))
}

/// `a(t p^2) / (2 p^{k - 1/2})` with `a(t p^2)` recovered from the lift.
pub fn normalized_half_from_lift(f: &HalfIntegralForm, lift: &IntegralForm, p: u64) -> Result<NormalizedValue> {
    let t = require_normalized(f)?;
    let a_p = lift.integer_coeff(p)?;
    let value = half_coeff_from_lift(&a_p, p, f.k(), chi1(p, t, f.k()));
    Ok(NormalizedValue::new(BigRational::from_integer(value), p, f.k()))
}

/// `Delta^i E_{w - 12i}`, `i = 1..dim S_w`, the triangular basis of `S_w(SL_2(Z))`.
pub fn level_one_cusp_basis(weight: u32, prec: usize) -> Vec<QSeries> {
    (1..=level_one_cusp_dimension(weight) as u32)
        .map(|i| QSeries::from_coeffs(delta_power_times_eisenstein(i, weight, prec)))
        .collect()
}

/// Lifts `f` directly for `n < check_len`, then identifies the lift inside
/// `S_{2k}(SL_2(Z))` and evaluates it to `prec_out` from the level-one basis.
/// Requires a plus-space form on level 4.
pub fn identify_lift(f: &HalfIntegralForm, prec_out: usize, check_len: usize) -> Result<IntegralForm> {
    if !f.is_plus_space() || f.level_n() != 1 {
        return Err(Error::InvalidArgument(
            "lift identification is implemented for level-4 plus-space forms".into(),
        ));
    }
    let weight = 2 * f.k();
    let dim = level_one_cusp_dimension(weight);
    if check_len <= dim + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} directly lifted coefficients",
            dim + 2
        )));
    }
    let direct = lift(f, check_len)?;
    let basis = level_one_cusp_basis(weight, prec_out.max(check_len));
    let rows: Vec<Vec<BigRational>> = (1..check_len)
        .map(|n| basis.iter().map(|b| b.coeffs()[n].clone()).collect())
        .collect();
    let target: Vec<BigRational> = (1..check_len).map(|n| direct.coeffs().coeffs()[n].clone()).collect();
    let x = if dim == 0 {
        if target.iter().any(|c| !c.is_zero()) {
            return Err(Error::NotInSpan("nonzero lift in a zero cusp space".into()));
        }
        Vec::new()
    } else {
        RatMatrix::from_rows(rows)
            .solve(&target)
            .ok_or_else(|| Error::NotInSpan("direct lift is not a level-one cusp form".into()))?
    };
    let mut acc = QSeries::zero(prec_out.max(check_len));
    for (c, b) in x.iter().zip(&basis) {
        acc = acc.add_scaled(c, b);
    }
    let acc = acc.truncate(prec_out);
    let form = IntegralForm::new(weight, 1, acc);
    if direct.is_primitive() {
        form.into_primitive()
    } else {
        Ok(form)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use crate::expansion::attach_expansion;
    use crate::qseries::ramanujan_tau;
    use crate::spaces::{eigenbasis, normalize_at, normalize_at_t, plus_cusp_space};

    fn eigenform(k: u32) -> HalfIntegralForm {
        let s = plus_cusp_space(k, 400).unwrap();
        let e = eigenbasis(&s, &[3]).unwrap();
        let f = normalize_at_t(&e[0]).unwrap();
        attach_expansion(&f, 64).unwrap()
    }

    #[test]
    fn lift_of_weight_13_2_is_delta() {
        let f = eigenform(6);
        let l = lift(&f, 51).unwrap();
        let tau = ramanujan_tau(51).unwrap();
        assert!(l.is_primitive());
        assert_eq!(l.level(), 1);
        for n in 1..51 {
            assert_eq!(l.integer_coeff(n as u64).unwrap(), tau[n], "n={n}");
        }
    }

    #[test]
    fn lift_is_independent_of_t() {
        let f = eigenform(6);
        let f5 = normalize_at(&f, 5).unwrap();
        assert_eq!(f5.t(), Some(5));
        let l1 = lift(&f, 20).unwrap();
        let l5 = lift(&f5, 20).unwrap();
        assert_eq!(l1.coeffs(), l5.coeffs());
    }

    #[test]
    fn full_space_convention_drops_even_divisors() {
        let f = eigenform(6);
        let full = lift_with(&f, 20, LiftConvention::FullSpace).unwrap();
        let tau = ramanujan_tau(20).unwrap();
        assert_eq!(full.level(), 2);
        // Delta(z) - 2^5 Delta(2z)
        for n in 1..20usize {
            let mut expected = tau[n].clone();
            if n % 2 == 0 {
                expected -= &tau[n / 2] * 32;
            }
            assert_eq!(full.integer_coeff(n as u64).unwrap(), expected);
        }
    }

    #[test]
    fn prime_relation_examples() {
        let f = eigenform(6);
        assert_eq!(f.coeff(9).unwrap(), rat(9, 1));
        assert_eq!(prime_relation(&f, 3).unwrap(), rat(252, 1));
        assert_eq!(f.coeff(25).unwrap(), rat(1705, 1));
        assert_eq!(prime_relation(&f, 5).unwrap(), rat(4830, 1));
        assert!(prime_relation(&f, 2).is_err());
    }

    #[test]
    fn tp2m_recursion() {
        assert_eq!(coeff_tp2m(&int(252), 3, 0, 6, 1), int(1));
        assert_eq!(coeff_tp2m(&int(252), 3, 1, 6, 1), int(9));
        assert_eq!(coeff_tp2m(&int(252), 3, 2, 6, 1), int(-174879));
        let f = eigenform(6);
        assert_eq!(f.coeff(81).unwrap(), rat(-174879, 1));
    }

    #[test]
    fn normalized_values() {
        let tau = ramanujan_tau(12).unwrap();
        let v = NormalizedValue::new(BigRational::from_integer(tau[11].clone()), 11, 6);
        assert!((v.value() - 0.5004).abs() < 5e-4, "{}", v.value());
        assert_eq!(v.sign(), 1);
        let zero = NormalizedValue::new(rat(0, 1), 7, 6);
        assert_eq!(zero.value(), 0.0);
        let h = NormalizedValue::new(rat(9, 1), 3, 6);
        assert!((h.value() - 0.01069).abs() < 1e-5);
        assert!(h.to_decimal(8).starts_with("0.0106"));
        let neg = NormalizedValue::new(rat(-9, 1), 3, 6);
        assert!(neg.to_decimal(4).starts_with("-0.0106"));
    }

    #[test]
    fn exact_interval_comparisons() {
        // 1/(2 sqrt 3) ~ 0.2887 for x = p^{k-1} = 243, k = 6
        let v = NormalizedValue::new(rat(243, 1), 3, 6);
        assert_eq!(v.cmp_rational(&rat(2887, 10000)), Ordering::Less);
        assert_eq!(v.cmp_rational(&rat(2886, 10000)), Ordering::Greater);
        assert_eq!(v.cmp_rational(&rat(2886751, 10_000_000)), Ordering::Greater);
        assert_eq!(v.cmp_rational(&rat(2886752, 10_000_000)), Ordering::Less);
        assert!(v.in_closed(&rat(0, 1), &rat(1, 1)));
        assert!(!v.in_closed(&rat(-1, 1), &rat(0, 1)));
        let zero = NormalizedValue::new(rat(0, 1), 3, 6);
        assert!(zero.in_closed(&rat(0, 1), &rat(0, 1)));
        assert_eq!(zero.cmp_rational(&rat(-1, 5)), Ordering::Greater);
    }

    #[test]
    fn identified_lift_agrees_with_direct() {
        for k in [6u32, 8] {
            let f = eigenform(k);
            let id = identify_lift(&f, 300, 60).unwrap();
            let direct = lift(&f, 60).unwrap();
            assert_eq!(id.truncate(60), direct);
            assert!(id.coeffs().integer_coeffs().is_some());
        }
        let f = eigenform(6);
        let delta = crate::qseries::delta_series(300).unwrap();
        assert_eq!(identify_lift(&f, 300, 30).unwrap().coeffs(), &delta);
    }

    #[test]
    fn lift_commutes_with_hecke() {
        for k in [6u32, 8] {
            let f = eigenform(k);
            let dense = f.extended(49 * 401).unwrap();
            let lifted = lift(&f, 7 * 20).unwrap();
            for p in [3u64, 5, 7] {
                let image = crate::hecke::tp2_half(&dense, p).unwrap();
                let lhs = lift_series_at(&image, 1, 20, LiftConvention::PlusSpace).unwrap();
                let rhs = crate::hecke::tp_integral(&lifted, p).unwrap();
                assert_eq!(lhs.coeffs(), &rhs.coeffs().truncate(20), "k={k} p={p}");
            }
        }
    }

    #[test]
    fn sign_equivalence() {
        // a(p^2) < 0 iff C(p) < chi(p) / (2 sqrt p) iff A(p) < chi(p) p^{k-1}
        let f = eigenform(6);
        let tau = ramanujan_tau(400).unwrap();
        for p in crate::arith::sieve(399).unwrap().primes().iter().copied().filter(|&p| p > 2) {
            let a_p = &tau[p as usize];
            let threshold = pow_u(p, 5) * chi1(p, 1, 6) as i64;
            assert_eq!(f.coeff(p * p).unwrap() < rat(0, 1), *a_p < threshold, "p={p}");
            let c = NormalizedValue::new(BigRational::from_integer(a_p.clone()), p, 6);
            assert_eq!(c.sign(), crate::arith::sign_of(a_p));
            assert!(c.in_closed(&rat(-1, 1), &rat(1, 1)));
        }
    }

    #[test]
    fn weight_17_2_lift_is_e4_delta() {
        let f = eigenform(8);
        let e4 = crate::qseries::eisenstein(4, 31).unwrap();
        let e4d = e4.mul(&crate::qseries::delta_series(31).unwrap());
        assert_eq!(lift(&f, 31).unwrap().coeffs(), &e4d);
        assert_eq!(f.coeff(4).unwrap(), rat(88, 1));
        assert_eq!(f.eigenvalue(3), Some(&e4d.coeffs()[3]));
    }
}
