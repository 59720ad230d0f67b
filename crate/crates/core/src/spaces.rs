//! Half-integral weight forms on Gamma0(4): the theta/F monomial basis, the
//! Kohnen plus cusp space, simultaneous Hecke eigenforms and normalization.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{is_squarefree, sign_of_rat};
use crate::error::{exhausted, Error, Result};
use crate::expansion::PlusExpansion;
use crate::hecke::tp2_half;
use crate::linalg::{charpoly, format_poly, rational_roots, RatMatrix};
use crate::qseries::{f2_series, QSeries, SparseSeries};

/// Working precision used when building spaces for the desk-scale forms.
pub const DEFAULT_SPACE_PRECISION: usize = 400;

/// Whether index `n` is forced to vanish in the plus space of weight `k + 1/2`,
/// i.e. `n = 2` or `n = (-1)^{k+1} (mod 4)`.
pub fn plus_excluded(n: u64, k: u32) -> bool {
    let r = n % 4;
    let forbidden = if k % 2 == 0 { 3 } else { 1 };
    r == 2 || r == forbidden
}

/// A form of weight `k + 1/2` on Gamma0(4N) with trivial character.
#[derive(Debug, Clone)]
pub struct HalfIntegralForm {
    k: u32,
    level: u64,
    coeffs: QSeries,
    t: Option<u64>,
    normalized: bool,
    plus_space: bool,
    eigenvalues: Vec<(u64, BigRational)>,
    expansion: Option<Arc<PlusExpansion>>,
}

impl PartialEq for HalfIntegralForm {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.level == other.level && self.coeffs == other.coeffs
    }
}

impl HalfIntegralForm {
    /// A level-4 form with the given coefficients.
    pub fn new(k: u32, coeffs: QSeries) -> Self {
        HalfIntegralForm {
            k,
            level: 4,
            coeffs,
            t: None,
            normalized: false,
            plus_space: false,
            eigenvalues: Vec::new(),
            expansion: None,
        }
    }

    pub(crate) fn derived(&self, coeffs: QSeries) -> Self {
        HalfIntegralForm {
            k: self.k,
            level: self.level,
            coeffs,
            t: None,
            normalized: false,
            plus_space: self.plus_space,
            eigenvalues: Vec::new(),
            expansion: None,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `2k + 1`; the weight is this over 2.
    pub fn weight_numerator(&self) -> u32 {
        2 * self.k + 1
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// The odd part `N` of the level `4N`.
    pub fn level_n(&self) -> u64 {
        self.level / 4
    }

    pub fn coeffs(&self) -> &QSeries {
        &self.coeffs
    }

    /// Number of densely stored coefficients.
    pub fn precision(&self) -> usize {
        self.coeffs.precision()
    }

    pub fn t(&self) -> Option<u64> {
        self.t
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_plus_space(&self) -> bool {
        self.plus_space
    }

    pub fn mark_plus_space(mut self) -> Self {
        self.plus_space = true;
        self
    }

    pub fn eigenvalues(&self) -> &[(u64, BigRational)] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, p: u64) -> Option<&BigRational> {
        self.eigenvalues.iter().find(|(q, _)| *q == p).map(|(_, v)| v)
    }

    pub fn is_eigenform(&self) -> bool {
        !self.eigenvalues.is_empty()
    }

    pub fn expansion(&self) -> Option<&PlusExpansion> {
        self.expansion.as_deref()
    }

    /// Whether coefficients beyond the dense precision can be evaluated.
    pub fn is_extended(&self) -> bool {
        self.expansion.is_some()
    }

    pub(crate) fn with_expansion(mut self, expansion: PlusExpansion) -> Self {
        self.expansion = Some(Arc::new(expansion));
        self
    }

    /// Coefficient of `q^n`: from the dense series when stored, otherwise from
    /// the generator expansion if one is attached.
    pub fn coeff(&self, n: u64) -> Result<BigRational> {
        if let Some(c) = self.coeffs.coeff(n as usize) {
            return Ok(c.clone());
        }
        match &self.expansion {
            Some(e) => e.coeff(n),
            None => Err(exhausted(
                format!("weight {}/2 form", self.weight_numerator()),
                n,
                self.precision() as u64,
            )),
        }
    }

    /// The same form with `prec` dense coefficients (needs an expansion when
    /// growing).
    pub fn extended(&self, prec: usize) -> Result<HalfIntegralForm> {
        let mut out = self.clone();
        if prec <= self.precision() {
            out.coeffs = self.coeffs.truncate(prec);
            return Ok(out);
        }
        let e = self.expansion.as_ref().ok_or_else(|| {
            exhausted(
                format!("weight {}/2 form", self.weight_numerator()),
                prec as u64 - 1,
                self.precision() as u64,
            )
        })?;
        out.coeffs = e.series(prec)?;
        Ok(out)
    }

    /// Copy with coefficient `n` overwritten; drops any attached expansion.
    pub fn with_coeff_replaced(&self, n: usize, value: BigRational) -> HalfIntegralForm {
        let mut coeffs = self.coeffs.clone().into_coeffs();
        if n < coeffs.len() {
            coeffs[n] = value;
        }
        let mut out = self.clone();
        out.coeffs = QSeries::from_coeffs(coeffs);
        out.expansion = None;
        out
    }

    /// First index violating the plus-space support condition, if any.
    pub fn plus_space_violation(&self) -> Option<u64> {
        self.coeffs
            .coeffs()
            .iter()
            .enumerate()
            .find(|(n, c)| plus_excluded(*n as u64, self.k) && !c.is_zero())
            .map(|(n, _)| n as u64)
    }
}

/// Basis of a space of half-integral weight forms.
#[derive(Debug, Clone)]
pub struct Basis {
    forms: Vec<HalfIntegralForm>,
    ambient_weight_numerator: u32,
    construction_log: Vec<(u32, u32)>,
    pivots: Vec<usize>,
}

impl Basis {
    pub fn forms(&self) -> &[HalfIntegralForm] {
        &self.forms
    }

    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    pub fn ambient_weight_numerator(&self) -> u32 {
        self.ambient_weight_numerator
    }

    /// Exponents `(a, b)` of the monomials `theta^a F^b` spanning the ambient space.
    pub fn construction_log(&self) -> &[(u32, u32)] {
        &self.construction_log
    }

    /// Leading coefficient index of each echelonized basis form (empty for a
    /// raw monomial basis).
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn k(&self) -> u32 {
        (self.ambient_weight_numerator - 1) / 2
    }

    pub fn precision(&self) -> usize {
        self.forms.first().map_or(0, HalfIntegralForm::precision)
    }
}

/// Exponent pairs `(a, b)` with `a + 4b = 2k + 1`, ordered by increasing `b`.
pub fn monomial_exponents(k: u32) -> Vec<(u32, u32)> {
    let w = 2 * k + 1;
    (0..=w / 4).map(|b| (w - 4 * b, b)).collect()
}

/// `{ theta^a F^b : a + 4b = 2k + 1 }`, spanning `M_{k+1/2}(Gamma0(4))`.
pub fn monomial_basis(k: u32, prec: usize) -> Result<Basis> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "weight parameter k must be at least 2, got {k}"
        )));
    }
    if prec == 0 {
        return Err(Error::InvalidArgument("precision must be positive".into()));
    }
    let exps = monomial_exponents(k);
    let max_b = exps.iter().map(|&(_, b)| b).max().unwrap_or(0);
    let f2 = f2_series(prec)?;
    let mut f_powers = vec![QSeries::one(prec)];
    for _ in 0..max_b {
        let next = f_powers.last().unwrap().mul(&f2);
        f_powers.push(next);
    }
    let theta = SparseSeries::theta(prec);
    let forms = exps
        .iter()
        .map(|&(a, b)| {
            let mut acc = f_powers[b as usize]
                .integer_coeffs()
                .expect("F has integer coefficients");
            for _ in 0..a {
                acc = theta.mul_dense(&acc, prec);
            }
            HalfIntegralForm::new(k, QSeries::from_integers(acc))
        })
        .collect();
    Ok(Basis {
        forms,
        ambient_weight_numerator: 2 * k + 1,
        construction_log: exps,
        pivots: Vec::new(),
    })
}

fn plus_cusp_nullspace(monomials: &[HalfIntegralForm], k: u32, prec: usize) -> Vec<Vec<BigRational>> {
    let rows: Vec<Vec<BigRational>> = (0..prec)
        .filter(|&n| n == 0 || plus_excluded(n as u64, k))
        .map(|n| monomials.iter().map(|m| m.coeffs.coeffs()[n].clone()).collect())
        .collect();
    if rows.is_empty() {
        return (0..monomials.len())
            .map(|i| {
                let mut v = vec![BigRational::zero(); monomials.len()];
                v[i] = BigRational::one();
                v
            })
            .collect();
    }
    RatMatrix::from_rows(rows).nullspace()
}

/// The Kohnen plus-space cusp forms of weight `k + 1/2` on Gamma0(4), as an
/// echelonized basis (lowest-index pivots, leading coefficients 1).
pub fn plus_cusp_space(k: u32, prec: usize) -> Result<Basis> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "weight parameter k must be at least 2, got {k}"
        )));
    }
    if prec < 10 * k as usize {
        return Err(Error::InvalidArgument(format!(
            "precision {prec} below the minimum 10k = {}",
            10 * k
        )));
    }
    let ambient = monomial_basis(k, prec)?;
    let null = plus_cusp_nullspace(&ambient.forms, k, prec);
    let half_prec = prec / 2;
    let null_half = plus_cusp_nullspace(&ambient.forms, k, half_prec);
    if null.len() != null_half.len() {
        return Err(Error::RankInstability {
            prec,
            full: null.len(),
            half_prec,
            half: null_half.len(),
        });
    }
    // combine monomials, then echelonize the resulting q-expansions
    let combos: Vec<Vec<BigRational>> = null
        .iter()
        .map(|v| {
            (0..prec)
                .map(|n| {
                    v.iter()
                        .zip(&ambient.forms)
                        .fold(BigRational::zero(), |acc, (c, m)| acc + c * &m.coeffs.coeffs()[n])
                })
                .collect()
        })
        .collect();
    let (rows, pivots) = if combos.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let mut mat = RatMatrix::from_rows(combos);
        let pivots = mat.rref();
        let rows: Vec<Vec<BigRational>> = (0..pivots.len())
            .map(|r| (0..prec).map(|n| mat.get(r, n).clone()).collect())
            .collect();
        (rows, pivots)
    };
    let forms: Vec<HalfIntegralForm> = rows
        .into_iter()
        .map(|row| HalfIntegralForm::new(k, QSeries::from_coeffs(row)).mark_plus_space())
        .collect();
    for f in &forms {
        if let Some(n) = f.plus_space_violation() {
            return Err(Error::Verification {
                identity: "plus-space support".into(),
                index: n,
            });
        }
    }
    Ok(Basis {
        forms,
        ambient_weight_numerator: 2 * k + 1,
        construction_log: ambient.construction_log,
        pivots,
    })
}

/// Coordinates of `image` in an echelonized basis, verified on the whole
/// overlap.
fn coordinates_in(space: &Basis, image: &HalfIntegralForm, what: &str) -> Result<Vec<BigRational>> {
    let prec = image.precision();
    if let Some(&max_pivot) = space.pivots.iter().max() {
        if max_pivot >= prec {
            return Err(exhausted(what, max_pivot as u64, prec as u64));
        }
    }
    let coords: Vec<BigRational> = space
        .pivots
        .iter()
        .map(|&pv| image.coeffs.coeffs()[pv].clone())
        .collect();
    for n in 0..prec {
        let recon = coords
            .iter()
            .zip(&space.forms)
            .fold(BigRational::zero(), |acc, (c, f)| acc + c * &f.coeffs.coeffs()[n]);
        if recon != image.coeffs.coeffs()[n] {
            return Err(Error::NotInSpan(format!("{what}: mismatch at q^{n}")));
        }
    }
    Ok(coords)
}

/// Matrix of `T_{p^2}` on an echelonized space; column `i` holds the
/// coordinates of the image of basis form `i`.
pub fn hecke_matrix(space: &Basis, p: u64) -> Result<RatMatrix> {
    let cols = space
        .forms
        .iter()
        .map(|f| {
            let img = tp2_half(f, p)?;
            coordinates_in(space, &img, &format!("T_{{{p}^2}} image"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatMatrix::from_columns(&cols))
}

/// Splits the coordinate subspace spanned by the columns of `sub` into
/// eigenspaces of `op`.
fn split_subspace(
    op: &RatMatrix,
    sub: &RatMatrix,
    p: u64,
) -> Result<Vec<(BigRational, RatMatrix)>> {
    let dim = sub.cols();
    // op * sub = sub * restricted
    let image = op.mul(sub);
    let mut restricted = RatMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = image.column(j);
        let x = sub
            .solve(&col)
            .ok_or_else(|| Error::NotInSpan(format!("T_{{{p}^2}} does not preserve eigenspace")))?;
        for (i, v) in x.into_iter().enumerate() {
            restricted.set(i, j, v);
        }
    }
    let poly = charpoly(&restricted);
    let roots = rational_roots(&poly);
    let total: usize = roots.iter().map(|(_, m)| m).sum();
    if total < dim {
        return Err(Error::NotSplit {
            p,
            charpoly: format_poly(&poly),
        });
    }
    let mut out = Vec::new();
    for (lambda, _) in roots {
        let mut shifted = restricted.clone();
        for i in 0..dim {
            let v = shifted.get(i, i) - &lambda;
            shifted.set(i, i, v);
        }
        let kernel = shifted.nullspace();
        let lifted: Vec<Vec<BigRational>> = kernel.iter().map(|v| sub.mul_vec(v)).collect();
        out.push((lambda, RatMatrix::from_columns(&lifted)));
    }
    let found: usize = out.iter().map(|(_, m)| m.cols()).sum();
    if found < dim {
        // not diagonalizable over Q
        return Err(Error::NotSplit {
            p,
            charpoly: format_poly(&poly),
        });
    }
    Ok(out)
}

/// Simultaneous eigenforms of `T_{p^2}` for the given odd primes.
pub fn eigenbasis(space: &Basis, primes: &[u64]) -> Result<Vec<HalfIntegralForm>> {
    let dim = space.dimension();
    if dim == 0 {
        return Err(Error::InvalidArgument("eigenbasis of a zero-dimensional space".into()));
    }
    if space.pivots.len() != dim {
        return Err(Error::InvalidArgument(
            "eigenbasis needs an echelonized space (use plus_cusp_space)".into(),
        ));
    }
    if primes.is_empty() {
        return Err(Error::InvalidArgument("at least one prime is required".into()));
    }
    let mut pieces: Vec<(Vec<(u64, BigRational)>, RatMatrix)> =
        vec![(Vec::new(), RatMatrix::identity(dim))];
    for &p in primes {
        let op = hecke_matrix(space, p)?;
        let mut next = Vec::new();
        for (vals, sub) in pieces {
            for (lambda, piece) in split_subspace(&op, &sub, p)? {
                let mut v = vals.clone();
                v.push((p, lambda));
                next.push((v, piece));
            }
        }
        pieces = next;
    }
    let mut forms = Vec::new();
    for (vals, sub) in pieces {
        if sub.cols() != 1 {
            return Err(Error::NotSeparated {
                dim: sub.cols(),
                primes: primes.to_vec(),
            });
        }
        let v = sub.column(0);
        let prec = space.precision();
        let coeffs: Vec<BigRational> = (0..prec)
            .map(|n| {
                v.iter()
                    .zip(&space.forms)
                    .fold(BigRational::zero(), |acc, (c, f)| acc + c * &f.coeffs.coeffs()[n])
            })
            .collect();
        let mut form = HalfIntegralForm::new(space.k(), QSeries::from_coeffs(coeffs)).mark_plus_space();
        form.eigenvalues = vals;
        forms.push(form);
    }
    Ok(forms)
}

/// Scales `f` so that its least admissible square-free nonzero coefficient is 1.
pub fn normalize_at_t(f: &HalfIntegralForm) -> Result<HalfIntegralForm> {
    if f.normalized {
        return Ok(f.clone());
    }
    if f.coeffs.is_zero() {
        return Err(Error::ZeroForm);
    }
    let t = (1..f.precision() as u64)
        .find(|&t| {
            is_squarefree(t) && !plus_excluded(t, f.k) && !f.coeffs.coeffs()[t as usize].is_zero()
        })
        .ok_or(Error::NoAdmissibleIndex(f.precision()))?;
    normalize_at(f, t)
}

/// Scales `f` so that `a(t) = 1` for a given admissible square-free `t`.
pub fn normalize_at(f: &HalfIntegralForm, t: u64) -> Result<HalfIntegralForm> {
    if !is_squarefree(t) || plus_excluded(t, f.k) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} is not an admissible square-free index for k = {}",
            f.k
        )));
    }
    let at = f.coeff(t)?;
    if at.is_zero() {
        return Err(Error::InvalidArgument(format!("a({t}) vanishes")));
    }
    let inv = at.recip();
    let mut out = f.clone();
    out.coeffs = f.coeffs.scale(&inv);
    out.expansion = f.expansion.as_ref().map(|e| Arc::new(e.scaled(&inv)));
    out.t = Some(t);
    out.normalized = true;
    Ok(out)
}

/// `dim S_w(SL_2(Z))` by the classical formula.
pub fn level_one_cusp_dimension(weight: u32) -> usize {
    if weight % 2 == 1 || weight < 12 {
        return 0;
    }
    let base = (weight / 12) as usize;
    if weight % 12 == 2 {
        base - 1
    } else {
        base
    }
}

/// Sign of the first nonzero coefficient, for reports.
pub fn leading_sign(f: &HalfIntegralForm) -> i8 {
    f.coeffs.valuation().map_or(0, |n| sign_of_rat(&f.coeffs.coeffs()[n]))
}

/// Integer coefficients of a form, if all stored coefficients are integral.
pub fn integer_coefficients(f: &HalfIntegralForm) -> Option<Vec<BigInt>> {
    f.coeffs.integer_coeffs()
}
