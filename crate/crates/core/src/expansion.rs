//! Coefficient extension for plus-space forms of even `k`.
//!
//! For even `k` the plus space of weight `k + 1/2` is reached by the forms
//! `theta(z) G(4z)` with `G` in `M_k(SL_2(Z))` and the Rankin-Cohen brackets
//! `[H(4z), theta]_1 = w H(4z) D(theta) - (1/2) D(H(4z)) theta` with `H` of
//! weight `w = k - 2`. Their coefficients are finite sums over `m^2 + 4j = n`,
//! so any single coefficient costs `O(sqrt n)` once the level-one
//! coefficients are known in closed form. A form built from the monomial
//! basis is matched against these generators exactly; agreement on more
//! coefficients than the Sturm bound makes the identity exact, and the
//! generator sums then evaluate coefficients far beyond the dense precision.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::arith::{sigma, sigma_table};
use crate::error::{exhausted, Error, Result};
use crate::linalg::RatMatrix;
use crate::qseries::{clear_denominators, eisenstein_constant, mul_euler_cubed_power, QSeries};
use crate::spaces::{level_one_cusp_dimension, HalfIntegralForm};

/// Coefficient source for a level-one modular form.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelOneSeries {
    /// The constant function 1.
    One,
    /// `E_w` with its constant `-2w/B_w`; coefficients in closed form.
    Eisenstein { weight: u32, constant: BigRational },
    /// Stored coefficients (finite precision).
    Dense(Vec<BigRational>),
}

impl LevelOneSeries {
    pub fn eisenstein(weight: u32) -> Self {
        LevelOneSeries::Eisenstein {
            weight,
            constant: eisenstein_constant(weight),
        }
    }

    pub fn coeff(&self, j: u64) -> Result<BigRational> {
        match self {
            LevelOneSeries::One => Ok(if j == 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            }),
            LevelOneSeries::Eisenstein { weight, constant } => Ok(if j == 0 {
                BigRational::one()
            } else {
                constant * BigRational::from_integer(sigma(weight - 1, j))
            }),
            LevelOneSeries::Dense(c) => c
                .get(j as usize)
                .cloned()
                .ok_or_else(|| exhausted("level-one generator", j, c.len() as u64)),
        }
    }

    /// Coefficients `0..len` as a table.
    fn table(&self, len: usize) -> Result<Vec<BigRational>> {
        match self {
            LevelOneSeries::Eisenstein { weight, constant } => {
                let mut t: Vec<BigRational> = sigma_table(weight - 1, len)
                    .into_iter()
                    .map(|s| constant * BigRational::from_integer(s))
                    .collect();
                if len > 0 {
                    t[0] = BigRational::one();
                }
                Ok(t)
            }
            _ => (0..len as u64).map(|j| self.coeff(j)).collect(),
        }
    }
}

/// One generator of the plus space.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `theta(z) G(4z)`.
    ThetaProduct(LevelOneSeries),
    /// `[H(4z), theta]_1` with `H` of the given weight.
    Bracket { series: LevelOneSeries, weight: u32 },
}

/// Visits `(m, j, multiplicity)` with `m >= 0`, `m^2 + 4j = n`.
fn for_each_split(n: u64, mut visit: impl FnMut(u64, u64, i64) -> Result<()>) -> Result<()> {
    let mut m = 0u64;
    while m * m <= n {
        let rest = n - m * m;
        if rest % 4 == 0 {
            visit(m, rest / 4, if m == 0 { 1 } else { 2 })?;
        }
        m += 1;
    }
    Ok(())
}

impl Generator {
    fn series(&self) -> &LevelOneSeries {
        match self {
            Generator::ThetaProduct(s) => s,
            Generator::Bracket { series, .. } => series,
        }
    }

    fn weight_factor(&self, m: u64, j: u64) -> BigInt {
        match self {
            Generator::ThetaProduct(_) => BigInt::one(),
            Generator::Bracket { weight, .. } => {
                BigInt::from(*weight as u64) * BigInt::from(m * m) - BigInt::from(2 * j)
            }
        }
    }

    pub fn coeff(&self, n: u64) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for_each_split(n, |m, j, mult| {
            let factor = self.weight_factor(m, j) * mult;
            if !factor.is_zero() {
                acc += self.series().coeff(j)? * BigRational::from_integer(factor);
            }
            Ok(())
        })?;
        Ok(acc)
    }

    fn coeff_from_table(&self, n: u64, table: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        let _ = for_each_split(n, |m, j, mult| {
            let factor = self.weight_factor(m, j) * mult;
            if !factor.is_zero() {
                acc += &table[j as usize] * BigRational::from_integer(factor);
            }
            Ok(())
        });
        acc
    }

    /// Largest `n` this generator can evaluate, if bounded.
    fn index_limit(&self) -> Option<u64> {
        match self.series() {
            LevelOneSeries::Dense(c) => Some(4 * c.len() as u64 - 1),
            _ => None,
        }
    }
}

/// `Delta^i E_{w-12i}` to precision `prec` (with `E_0 = 1`).
pub(crate) fn delta_power_times_eisenstein(i: u32, w: u32, prec: usize) -> Vec<BigRational> {
    let rest = w - 12 * i;
    let (ints, den) = if rest == 0 {
        let mut one = vec![BigInt::zero(); prec];
        one[0] = BigInt::one();
        (one, BigInt::one())
    } else {
        let e = crate::qseries::eisenstein(rest, prec).expect("valid weight");
        clear_denominators(e.coeffs())
    };
    let shift = i as usize;
    let body = mul_euler_cubed_power(ints, 8 * i, prec.saturating_sub(shift));
    let mut out = vec![BigRational::zero(); prec];
    for (n, c) in body.into_iter().enumerate() {
        out[n + shift] = BigRational::new(c, den.clone());
    }
    out
}

/// Spanning set of `M_w(SL_2(Z))`: `E_w` and `Delta^i E_{w-12i}`.
pub fn level_one_generators(w: u32, dense_len: usize) -> Vec<LevelOneSeries> {
    if w == 0 {
        return vec![LevelOneSeries::One];
    }
    if w % 2 == 1 || w == 2 {
        return Vec::new();
    }
    let mut gens = vec![LevelOneSeries::eisenstein(w)];
    for i in 1..=level_one_cusp_dimension(w) as u32 {
        gens.push(LevelOneSeries::Dense(delta_power_times_eisenstein(i, w, dense_len)));
    }
    gens
}

/// A plus-space form written as a combination of generators.
#[derive(Debug, Clone, PartialEq)]
pub struct PlusExpansion {
    k: u32,
    terms: Vec<(BigRational, Generator)>,
}

impl PlusExpansion {
    /// Candidate generators for weight `k + 1/2`, `k` even.
    pub fn generators(k: u32, dense_len: usize) -> Result<Vec<Generator>> {
        if k % 2 == 1 {
            return Err(Error::InvalidArgument(format!(
                "generator expansion needs even k, got {k}"
            )));
        }
        let mut gens: Vec<Generator> = level_one_generators(k, dense_len)
            .into_iter()
            .map(Generator::ThetaProduct)
            .collect();
        if k >= 6 {
            gens.extend(
                level_one_generators(k - 2, dense_len)
                    .into_iter()
                    .map(|series| Generator::Bracket { series, weight: k - 2 }),
            );
        }
        Ok(gens)
    }

    /// Writes `form` in terms of the generators, verified on every stored coefficient.
    pub fn fit(form: &HalfIntegralForm, dense_len: usize) -> Result<PlusExpansion> {
        let k = form.k();
        let gens = Self::generators(k, dense_len)?;
        let prec = form.precision();
        // Sturm bound for weight k + 1/2 on Gamma0(4) is (2k + 1) / 4
        if (prec as u64) * 4 <= (2 * k + 1) as u64 || gens.is_empty() {
            return Err(Error::NotInSpan("too few coefficients to identify the form".into()));
        }
        let columns = gens
            .iter()
            .map(|g| {
                let table = g.series().table(prec / 4 + 1)?;
                Ok((0..prec as u64).map(|n| g.coeff_from_table(n, &table)).collect())
            })
            .collect::<Result<Vec<Vec<BigRational>>>>()?;
        let mat = RatMatrix::from_columns(&columns);
        let x = mat
            .solve(form.coeffs().coeffs())
            .ok_or_else(|| Error::NotInSpan(format!("weight {}/2 form outside generator span", 2 * k + 1)))?;
        let terms = x
            .into_iter()
            .zip(gens)
            .filter(|(c, _)| !c.is_zero())
            .collect();
        Ok(PlusExpansion { k, terms })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn terms(&self) -> &[(BigRational, Generator)] {
        &self.terms
    }

    pub fn scaled(&self, c: &BigRational) -> PlusExpansion {
        PlusExpansion {
            k: self.k,
            terms: self.terms.iter().map(|(w, g)| (w * c, g.clone())).collect(),
        }
    }

    pub fn index_limit(&self) -> Option<u64> {
        self.terms.iter().filter_map(|(_, g)| g.index_limit()).min()
    }

    pub fn coeff(&self, n: u64) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for (w, g) in &self.terms {
            acc += w * g.coeff(n)?;
        }
        Ok(acc)
    }

    /// Dense coefficients `0..prec`.
    pub fn series(&self, prec: usize) -> Result<QSeries> {
        if let Some(limit) = self.index_limit() {
            if prec as u64 > limit + 1 {
                return Err(exhausted("generator expansion", prec as u64 - 1, limit + 1));
            }
        }
        let tables = self
            .terms
            .iter()
            .map(|(_, g)| g.series().table(prec / 4 + 1))
            .collect::<Result<Vec<_>>>()?;
        let coeffs: Vec<BigRational> = (0..prec as u64)
            .into_par_iter()
            .map(|n| {
                self.terms
                    .iter()
                    .zip(&tables)
                    .fold(BigRational::zero(), |acc, ((w, g), t)| acc + w * g.coeff_from_table(n, t))
            })
            .collect();
        Ok(QSeries::from_coeffs(coeffs))
    }
}

/// Attaches a generator expansion to a plus-space form of even `k`.
pub fn attach_expansion(form: &HalfIntegralForm, dense_len: usize) -> Result<HalfIntegralForm> {
    let e = PlusExpansion::fit(form, dense_len)?;
    Ok(form.clone().with_expansion(e))
}
