//! Prime statistics: sign sequences, exception ratios, product-sign densities,
//! joint histograms against the Sato-Tate measure, and density estimators.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{chi1, pow_u, rat, rat_to_f64, sieve, sign_of, PrimeTable};
use crate::error::{Error, Result};
use crate::hecke::IntegralForm;
use crate::shimura::{half_coeff_from_lift, NormalizedValue};
use crate::spaces::HalfIntegralForm;

/// `mu_ST([a, b])` for the semicircle measure `(2/pi) sqrt(1 - t^2) dt`.
pub fn st_mass(a: f64, b: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&a) || !(-1.0..=1.0).contains(&b) || a > b {
        return Err(Error::InvalidArgument(format!(
            "st_mass needs -1 <= a <= b <= 1, got [{a}, {b}]"
        )));
    }
    Ok(st_cdf(b) - st_cdf(a))
}

/// `mu_ST([-1, t])`.
pub fn st_cdf(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    (t.asin() + t * (1.0 - t * t).sqrt()) / PI + 0.5
}

/// A closed interval with exact endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Parses `lo,hi` with decimal or fractional endpoints.
    pub fn parse(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("interval must be lo,hi: {s:?}")))?;
        Interval::new(
            crate::arith::parse_rational(lo.trim())?,
            crate::arith::parse_rational(hi.trim())?,
        )
    }

    pub fn contains(&self, v: &NormalizedValue) -> bool {
        v.in_closed(&self.lo, &self.hi)
    }

    /// Sato-Tate mass of the part of the interval inside `[-1, 1]`.
    pub fn st_mass(&self) -> f64 {
        let lo = rat_to_f64(&self.lo).max(-1.0);
        let hi = rat_to_f64(&self.hi).min(1.0);
        if lo >= hi {
            0.0
        } else {
            st_mass(lo, hi).unwrap_or(0.0)
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Event counts over primes at a list of checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub name: String,
    pub checkpoints: Vec<u64>,
    pub counts: Vec<u64>,
    /// Eligible primes `p <= x` (excluded primes removed).
    pub pi_values: Vec<u64>,
    pub ratios: Vec<f64>,
    pub reference: Option<f64>,
    pub excluded_primes: Vec<u64>,
}

impl DensityReport {
    /// Builds the report from a sorted list of eligible primes and a per-prime
    /// event flag.
    pub fn from_events(
        name: impl Into<String>,
        primes: &[u64],
        events: &[bool],
        checkpoints: &[u64],
        reference: Option<f64>,
        excluded_primes: Vec<u64>,
    ) -> Self {
        let mut counts = Vec::with_capacity(checkpoints.len());
        let mut pi_values = Vec::with_capacity(checkpoints.len());
        for &x in checkpoints {
            let upto = primes.partition_point(|&p| p <= x);
            pi_values.push(upto as u64);
            counts.push(events[..upto].iter().filter(|&&e| e).count() as u64);
        }
        let ratios = counts
            .iter()
            .zip(&pi_values)
            .map(|(&c, &n)| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect();
        DensityReport {
            name: name.into(),
            checkpoints: checkpoints.to_vec(),
            counts,
            pi_values,
            ratios,
            reference,
            excluded_primes,
        }
    }

    pub fn final_ratio(&self) -> f64 {
        self.ratios.last().copied().unwrap_or(0.0)
    }

    pub fn final_count(&self) -> u64 {
        self.counts.last().copied().unwrap_or(0)
    }

    pub fn final_pi(&self) -> u64 {
        self.pi_values.last().copied().unwrap_or(0)
    }
}

/// Powers of 10 up to `x`, with `x` itself appended.
pub fn default_checkpoints(x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 10u64;
    while c < x {
        out.push(c);
        c = c.saturating_mul(10);
    }
    out.push(x);
    out
}

/// Per-prime data of a normalized eigenform and its lift.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeRecord {
    pub p: u64,
    /// `A(p)`.
    pub a_p: BigInt,
    pub chi1: i8,
    /// `a(t p^2) / a(t)` from the prime relation.
    pub half: BigInt,
}

/// Prime records for `p <= x`, `p` coprime to `2N`.
#[derive(Debug, Clone)]
pub struct PrimeData {
    pub label: String,
    pub k: u32,
    pub t: u64,
    pub level_n: u64,
    pub x: u64,
    pub records: Vec<PrimeRecord>,
}

impl PrimeData {
    pub fn new(label: impl Into<String>, f: &HalfIntegralForm, lift: &IntegralForm, x: u64) -> Result<Self> {
        let t = f.t().filter(|_| f.is_normalized()).ok_or_else(|| {
            Error::InvalidArgument("prime data needs a normalized form".into())
        })?;
        let k = f.k();
        if !lift.is_primitive() || lift.k() != k {
            return Err(Error::InvalidArgument(
                "prime data needs the primitive lift of the form".into(),
            ));
        }
        let level_n = f.level_n();
        let table = sieve(x.max(2))?;
        let records = table
            .up_to(x)
            .par_iter()
            .filter(|&&p| p != 2 && level_n % p != 0)
            .map(|&p| {
                let a_p = lift.integer_coeff(p)?;
                let chi = chi1(p, t, k);
                let half = half_coeff_from_lift(&a_p, p, k, chi);
                Ok(PrimeRecord { p, a_p, chi1: chi, half })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PrimeData {
            label: label.into(),
            k,
            t,
            level_n,
            x,
            records,
        })
    }

    pub fn primes(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.p).collect()
    }

    /// Primes `p <= x` dividing `2N`.
    pub fn excluded(&self) -> Vec<u64> {
        excluded_primes(self.x, 2 * self.level_n)
    }

    pub fn c_value(&self, r: &PrimeRecord) -> NormalizedValue {
        NormalizedValue::new(BigRational::from_integer(r.a_p.clone()), r.p, self.k)
    }

    pub fn half_value(&self, r: &PrimeRecord) -> NormalizedValue {
        NormalizedValue::new(BigRational::from_integer(r.half.clone()), r.p, self.k)
    }
}

fn excluded_primes(x: u64, modulus: u64) -> Vec<u64> {
    crate::arith::factorize(modulus)
        .into_iter()
        .map(|(q, _)| q)
        .filter(|&q| q <= x)
        .collect()
}

/// Records of `f` and `g` at common eligible primes, in order.
fn paired<'a>(f: &'a PrimeData, g: &'a PrimeData) -> Result<Vec<(&'a PrimeRecord, &'a PrimeRecord)>> {
    if f.x != g.x {
        return Err(Error::InvalidArgument("prime data cover different ranges".into()));
    }
    let mut out = Vec::new();
    let mut j = 0;
    for r in &f.records {
        while j < g.records.len() && g.records[j].p < r.p {
            j += 1;
        }
        if j < g.records.len() && g.records[j].p == r.p {
            out.push((r, &g.records[j]));
        }
    }
    Ok(out)
}

fn pair_excluded(f: &PrimeData, g: &PrimeData) -> Vec<u64> {
    excluded_primes(f.x, 2 * f.level_n * g.level_n)
}

/// Sign-disagreement ratio between `a(t p^2)` and `C(p)`, with zeros counted
/// separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionReport {
    pub disagreements: DensityReport,
    pub zeros: DensityReport,
}

/// For each disagreement (both signs nonzero) certifies that `C(p)` lies in
/// `[0, 1/(2 sqrt p))` when `chi_1(p) = 1`, or its mirror when `chi_1(p) = -1`.
pub fn prop1_exception_ratio(data: &PrimeData, checkpoints: &[u64]) -> Result<ExceptionReport> {
    let primes = data.primes();
    let mut disagree = Vec::with_capacity(primes.len());
    let mut zero = Vec::with_capacity(primes.len());
    for r in &data.records {
        let s_half = sign_of(&r.half);
        let s_c = sign_of(&r.a_p);
        let differs = s_half != 0 && s_c != 0 && s_half != s_c;
        if differs {
            // A(p) - chi p^{k-1} and A(p) have opposite signs: 0 <= chi A(p) < p^{k-1}
            let scaled = &r.a_p * r.chi1 as i64;
            let certified = !scaled.is_negative() && scaled < pow_u(r.p, data.k - 1);
            if !certified {
                return Err(Error::Verification {
                    identity: "sign disagreement lies in the 1/(2 sqrt p) window".into(),
                    index: r.p,
                });
            }
        }
        disagree.push(differs);
        zero.push(s_half == 0 || s_c == 0);
    }
    let excluded = data.excluded();
    Ok(ExceptionReport {
        disagreements: DensityReport::from_events(
            format!("{} sign(a(tp^2)) != sign(C(p))", data.label),
            &primes,
            &disagree,
            checkpoints,
            Some(0.0),
            excluded.clone(),
        ),
        zeros: DensityReport::from_events(
            format!("{} a(tp^2) = 0 or C(p) = 0", data.label),
            &primes,
            &zero,
            checkpoints,
            Some(0.0),
            excluded,
        ),
    })
}

/// The five product-sign series `<0, >0, =0, <=0, >=0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductSignReport {
    pub negative: DensityReport,
    pub positive: DensityReport,
    pub zero: DensityReport,
    pub nonpositive: DensityReport,
    pub nonnegative: DensityReport,
}

impl ProductSignReport {
    pub fn series(&self) -> [&DensityReport; 5] {
        [
            &self.negative,
            &self.positive,
            &self.zero,
            &self.nonpositive,
            &self.nonnegative,
        ]
    }
}

/// Partition of eligible primes by the sign of `a(t p^2) b(t p^2)`.
pub fn product_sign_counts(f: &PrimeData, g: &PrimeData, checkpoints: &[u64]) -> Result<ProductSignReport> {
    let pairs = paired(f, g)?;
    let primes: Vec<u64> = pairs.iter().map(|(r, _)| r.p).collect();
    let signs: Vec<i8> = pairs
        .iter()
        .map(|(r, s)| sign_of(&r.half) * sign_of(&s.half))
        .collect();
    let excluded = pair_excluded(f, g);
    let series = |name: &str, reference: f64, pred: fn(i8) -> bool| {
        let events: Vec<bool> = signs.iter().map(|&s| pred(s)).collect();
        DensityReport::from_events(
            format!("{}x{} product {name}", f.label, g.label),
            &primes,
            &events,
            checkpoints,
            Some(reference),
            excluded.clone(),
        )
    };
    Ok(ProductSignReport {
        negative: series("<0", 0.5, |s| s < 0),
        positive: series(">0", 0.5, |s| s > 0),
        zero: series("=0", 0.0, |s| s == 0),
        nonpositive: series("<=0", 0.5, |s| s <= 0),
        nonnegative: series(">=0", 0.5, |s| s >= 0),
    })
}

/// Empirical distribution over bins of `[-1, 1]` against `mu_ST`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub name: String,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub empirical_mass: Vec<f64>,
    pub reference_mass: Vec<f64>,
    pub sample_count: u64,
    /// Values outside `[-1, 1]`, not binned.
    pub out_of_domain: u64,
}

impl Histogram {
    pub fn max_deviation(&self) -> f64 {
        self.empirical_mass
            .iter()
            .zip(&self.reference_mass)
            .map(|(e, r)| (e - r).abs())
            .fold(0.0, f64::max)
    }
}

/// A `bins x bins` grid over `[-1, 1]^2`, row index from the first value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointHistogram {
    pub name: String,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
    pub empirical_mass: Vec<Vec<f64>>,
    pub reference_mass: Vec<Vec<f64>>,
    pub sample_count: u64,
    pub out_of_domain: u64,
}

impl JointHistogram {
    pub fn max_deviation(&self) -> f64 {
        self.empirical_mass
            .iter()
            .flatten()
            .zip(self.reference_mass.iter().flatten())
            .map(|(e, r)| (e - r).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact edges `-1 + 2i/bins`.
fn exact_edges(bins: usize) -> Vec<BigRational> {
    (0..=bins)
        .map(|i| rat(2 * i as i64 - bins as i64, bins as i64))
        .collect()
}

/// Bin of `v` among `[e_i, e_{i+1})`, the last bin closed; `None` outside `[-1, 1]`.
fn exact_bin(v: &NormalizedValue, edges: &[BigRational]) -> Option<usize> {
    let bins = edges.len() - 1;
    if v.cmp_rational(&edges[0]) == Ordering::Less || v.cmp_rational(&edges[bins]) == Ordering::Greater {
        return None;
    }
    // largest i with e_i <= v
    let (mut lo, mut hi) = (0usize, bins);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if v.cmp_rational(&edges[mid]) == Ordering::Less {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(lo)
}

fn check_bins(bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    Ok(())
}

fn reference_masses(edges: &[f64]) -> Vec<f64> {
    edges.windows(2).map(|w| st_cdf(w[1]) - st_cdf(w[0])).collect()
}

/// Histogram of normalized values with exact bin assignment.
pub fn marginal_histogram(name: impl Into<String>, values: &[NormalizedValue], bins: usize) -> Result<Histogram> {
    check_bins(bins)?;
    let edges = exact_edges(bins);
    let mut counts = vec![0u64; bins];
    let mut out_of_domain = 0;
    for v in values {
        match exact_bin(v, &edges) {
            Some(i) => counts[i] += 1,
            None => out_of_domain += 1,
        }
    }
    let inside: u64 = counts.iter().sum();
    let bin_edges: Vec<f64> = edges.iter().map(rat_to_f64).collect();
    Ok(Histogram {
        name: name.into(),
        empirical_mass: counts
            .iter()
            .map(|&c| if inside == 0 { 0.0 } else { c as f64 / inside as f64 })
            .collect(),
        reference_mass: reference_masses(&bin_edges),
        bin_edges,
        counts,
        sample_count: values.len() as u64,
        out_of_domain,
    })
}

/// Joint histogram of `(C(p), D(p))` over the common eligible primes.
pub fn joint_histogram(f: &PrimeData, g: &PrimeData, bins: usize) -> Result<JointHistogram> {
    check_bins(bins)?;
    let pairs = paired(f, g)?;
    let edges = exact_edges(bins);
    let cells: Vec<Option<(usize, usize)>> = pairs
        .par_iter()
        .map(|(r, s)| {
            let i = exact_bin(&f.c_value(r), &edges)?;
            let j = exact_bin(&g.c_value(s), &edges)?;
            Some((i, j))
        })
        .collect();
    let mut counts = vec![vec![0u64; bins]; bins];
    let mut out_of_domain = 0;
    for c in cells {
        match c {
            Some((i, j)) => counts[i][j] += 1,
            None => out_of_domain += 1,
        }
    }
    let inside: u64 = counts.iter().flatten().sum();
    let bin_edges: Vec<f64> = edges.iter().map(rat_to_f64).collect();
    let marginal = reference_masses(&bin_edges);
    Ok(JointHistogram {
        name: format!("{}x{} (C(p), D(p))", f.label, g.label),
        empirical_mass: counts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| if inside == 0 { 0.0 } else { c as f64 / inside as f64 })
                    .collect()
            })
            .collect(),
        reference_mass: marginal
            .iter()
            .map(|a| marginal.iter().map(|b| a * b).collect())
            .collect(),
        bin_edges,
        counts,
        sample_count: pairs.len() as u64,
        out_of_domain,
    })
}

/// `C(p)` values of the eligible primes.
pub fn c_values(data: &PrimeData) -> Vec<NormalizedValue> {
    data.records.par_iter().map(|r| data.c_value(r)).collect()
}

/// Density of primes with `a(tp^2)/(2p^{k-1/2}) in I1` and
/// `b(tp^2)/(2p^{k'-1/2}) in I2`, against `mu_ST(I1) mu_ST(I2)`.
pub fn theorem5_check(
    f: &PrimeData,
    g: &PrimeData,
    i1: &Interval,
    i2: &Interval,
    checkpoints: &[u64],
) -> Result<DensityReport> {
    let pairs = paired(f, g)?;
    let primes: Vec<u64> = pairs.iter().map(|(r, _)| r.p).collect();
    let events: Vec<bool> = pairs
        .par_iter()
        .map(|(r, s)| i1.contains(&f.half_value(r)) && i2.contains(&g.half_value(s)))
        .collect();
    Ok(DensityReport::from_events(
        format!("{}x{} half-integral in {i1}x{i2}", f.label, g.label),
        &primes,
        &events,
        checkpoints,
        Some(i1.st_mass() * i2.st_mass()),
        pair_excluded(f, g),
    ))
}

/// `#{p <= x : S(p)} / pi(x)` at each checkpoint.
pub fn natural_density_curve(
    name: impl Into<String>,
    table: &PrimeTable,
    predicate: impl Fn(u64) -> bool + Sync,
    checkpoints: &[u64],
) -> Result<DensityReport> {
    if let Some(&x) = checkpoints.iter().max() {
        if x > table.limit() {
            return Err(crate::error::exhausted("prime table", x, table.limit()));
        }
    }
    let events: Vec<bool> = table.primes().par_iter().map(|&p| predicate(p)).collect();
    Ok(DensityReport::from_events(
        name,
        table.primes(),
        &events,
        checkpoints,
        None,
        Vec::new(),
    ))
}

/// Truncated analytic density estimates `sum_{p in S, p <= P} p^{-s} / log(1/(s-1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticDensityReport {
    pub p_max: u64,
    pub s_values: Vec<f64>,
    pub estimates: Vec<f64>,
}

/// The normalizer `log(1/(s-1))` vanishes at `s = 2`, so `s` must lie in `(1, 2)`.
pub fn analytic_density_estimate(
    table: &PrimeTable,
    predicate: impl Fn(u64) -> bool + Sync,
    s_values: &[f64],
    p_max: u64,
) -> Result<AnalyticDensityReport> {
    if let Some(bad) = s_values.iter().find(|&&s| !(s > 1.0 && s < 2.0)) {
        return Err(Error::InvalidArgument(format!(
            "analytic density needs 1 < s < 2, got {bad}"
        )));
    }
    if p_max > table.limit() {
        return Err(crate::error::exhausted("prime table", p_max, table.limit()));
    }
    let members: Vec<u64> = table
        .up_to(p_max)
        .par_iter()
        .copied()
        .filter(|&p| predicate(p))
        .collect();
    let estimates = s_values
        .iter()
        .map(|&s| {
            // summed from the largest prime down for a fixed rounding order
            let sum: f64 = members.iter().rev().map(|&p| (p as f64).powf(-s)).sum();
            sum / (1.0 / (s - 1.0)).ln()
        })
        .collect();
    Ok(AnalyticDensityReport {
        p_max,
        s_values: s_values.to_vec(),
        estimates,
    })
}

/// Primes where `a(t p^2)` and `b(t p^2)` have opposite nonzero signs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisagreementReport {
    pub primes: Vec<u64>,
    pub density: DensityReport,
    pub threshold: f64,
    pub exceeds_threshold: bool,
}

impl DisagreementReport {
    pub fn verdict(&self) -> String {
        let d = self.density.final_ratio();
        if self.exceeds_threshold {
            format!(
                "disagreement density {d:.6} > 6/25 = {:.2}: sign agreement fails on a set too large for equal eigenforms",
                self.threshold
            )
        } else {
            format!(
                "disagreement density {d:.6} <= 6/25 = {:.2}: not enough to separate the forms",
                self.threshold
            )
        }
    }
}

pub const MULTIPLICITY_ONE_THRESHOLD: f64 = 6.0 / 25.0;

pub fn sign_disagreement_report(f: &PrimeData, g: &PrimeData, checkpoints: &[u64]) -> Result<DisagreementReport> {
    let pairs = paired(f, g)?;
    let primes: Vec<u64> = pairs.iter().map(|(r, _)| r.p).collect();
    let events: Vec<bool> = pairs
        .iter()
        .map(|(r, s)| {
            let (a, b) = (sign_of(&r.half), sign_of(&s.half));
            a != 0 && b != 0 && a != b
        })
        .collect();
    let list = primes
        .iter()
        .zip(&events)
        .filter(|(_, &e)| e)
        .map(|(&p, _)| p)
        .collect();
    let density = DensityReport::from_events(
        format!("{}x{} sign disagreement", f.label, g.label),
        &primes,
        &events,
        checkpoints,
        Some(MULTIPLICITY_ONE_THRESHOLD),
        pair_excluded(f, g),
    );
    // exact: count * 25 > 6 * pi
    let exceeds = density.final_count() * 25 > 6 * density.final_pi();
    Ok(DisagreementReport {
        primes: list,
        density,
        threshold: MULTIPLICITY_ONE_THRESHOLD,
        exceeds_threshold: exceeds,
    })
}

/// Signs of `a(t p^2)` over the eligible primes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignSequence {
    pub source: String,
    pub primes: Vec<u64>,
    pub signs: Vec<i8>,
}

pub fn half_sign_sequence(data: &PrimeData) -> SignSequence {
    SignSequence {
        source: format!("{} sign of a(tp^2), t = {}", data.label, data.t),
        primes: data.primes(),
        signs: data.records.iter().map(|r| sign_of(&r.half)).collect(),
    }
}

impl SignSequence {
    pub fn sign_at(&self, p: u64) -> Option<i8> {
        self.primes.binary_search(&p).ok().map(|i| self.signs[i])
    }
}

/// Whether a value is exactly zero, for callers tabulating zero signs.
pub fn is_zero_value(v: &NormalizedValue) -> bool {
    v.exact_numerator().is_zero()
}
