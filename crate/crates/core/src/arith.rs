//! Exact scalars, Kronecker symbols, the Shimura character, and prime sieving.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision signed integer.
pub type ExactInteger = BigInt;
/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type ExactRational = BigRational;

pub fn int(n: i64) -> ExactInteger {
    BigInt::from(n)
}

pub fn rat(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: impl Into<BigInt>) -> ExactRational {
    BigRational::from_integer(n.into())
}

/// `base^exp` as an exact integer.
pub fn pow_u(base: u64, exp: u32) -> ExactInteger {
    Pow::pow(BigInt::from(base), exp)
}

/// Sign of an exact integer as -1, 0 or +1.
pub fn sign_of(x: &BigInt) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_negative() {
        -1
    } else {
        1
    }
}

pub fn sign_of_rat(x: &BigRational) -> i8 {
    sign_of(x.numer())
}

/// Jacobi symbol `(a/n)` for odd positive `n`.
fn jacobi(a: i128, n: i128) -> i8 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut result = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Kronecker symbol `(a/n)`, extended to every integer `n` (zero, negative, even).
pub fn kronecker(a: i64, n: i64) -> i8 {
    let a = a as i128;
    let mut n = n as i128;
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i8;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n >>= twos;
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    if n == 1 {
        return result;
    }
    result * jacobi(a, n)
}

/// The quadratic character attached to the Shimura lift with parameter `t`
/// at weight `k + 1/2` and trivial nebentypus: `d -> ((-1)^k t / d)`.
pub fn chi1(d: u64, t: u64, k: u32) -> i8 {
    let disc = if k % 2 == 0 { t as i64 } else { -(t as i64) };
    kronecker(disc, d as i64)
}

/// All primes up to a limit, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes `<= y` (for `y` up to the table limit).
    pub fn pi(&self, y: u64) -> usize {
        self.primes.partition_point(|&p| p <= y)
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }

    /// Primes `<= y`.
    pub fn up_to(&self, y: u64) -> &[u64] {
        &self.primes[..self.pi(y)]
    }
}

/// Sieve of Eratosthenes over `2..=x`.
pub fn sieve(x: u64) -> Result<PrimeTable> {
    if x < 2 {
        return Err(Error::InvalidArgument(format!(
            "sieve limit must be at least 2, got {x}"
        )));
    }
    let n = x as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    Ok(PrimeTable { limit: x, primes })
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Positive divisors of `n` in ascending order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// Divisor power sum `sigma_r(n)`.
pub fn sigma(r: u32, n: u64) -> ExactInteger {
    assert!(n >= 1, "sigma undefined at 0");
    let mut acc = BigInt::one();
    for (p, e) in factorize(n) {
        let pr = pow_u(p, r);
        let mut term = BigInt::one();
        let mut pw = BigInt::one();
        for _ in 0..e {
            pw *= &pr;
            term += &pw;
        }
        acc *= term;
    }
    acc
}

/// `sigma_r(n)` for `0 <= n < limit` by a divisor sieve (entry 0 is 0).
pub fn sigma_table(r: u32, limit: usize) -> Vec<ExactInteger> {
    let mut table = vec![BigInt::zero(); limit];
    for d in 1..limit {
        let dr = pow_u(d as u64, r);
        let mut m = d;
        while m < limit {
            table[m] += &dr;
            m += d;
        }
    }
    table
}

/// Bernoulli number `B_n` with the convention `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> ExactRational {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        // sum_{j<m} C(m+1, j) B_j = -(m+1) B_m
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b.pop().unwrap()
}

/// Parses `"3"`, `"-0.25"`, `"1/3"` or `"1e-2"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let bad = || Error::InvalidArgument(format!("not a decimal or fraction: {s:?}"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{whole}{frac}");
    let numer: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| bad())?
    };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * Pow::pow(&ten, scale as u32))
    } else {
        BigRational::new(numer, Pow::pow(&ten, (-scale) as u32))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Closest `f64` to an exact rational.
pub fn rat_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // scale down huge numerators/denominators before converting
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = (nb - db).clamp(-1000, 1000);
    let scaled = if shift > 60 {
        x / BigRational::from_integer(BigInt::one() << (shift - 60) as u32)
    } else if shift < -60 {
        x * BigRational::from_integer(BigInt::one() << (-shift - 60) as u32)
    } else {
        x.clone()
    };
    let base = scaled.to_f64().unwrap_or(f64::NAN);
    if shift > 60 {
        base * 2f64.powi((shift - 60) as i32)
    } else if shift < -60 {
        base / 2f64.powi((-shift - 60) as i32)
    } else {
        base
    }
}

/// Whether `d` divides `n`, for exact integers.
pub fn divides(d: &BigInt, n: &BigInt) -> bool {
    !d.is_zero() && n.is_multiple_of(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_examples() {
        for d in 1..200 {
            assert_eq!(kronecker(1, d), 1);
        }
        assert_eq!(kronecker(3, 9), 0);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(-1, 3), -1);
        assert_eq!(kronecker(5, 3), -1);
        assert_eq!(kronecker(5, 0), 0);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(-3, -1), -1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(17, 2), 1);
        assert_eq!(kronecker(4, 2), 0);
    }

    #[test]
    fn kronecker_matches_quadratic_residues() {
        let table = sieve(200).unwrap();
        for &p in &table.primes()[1..] {
            let squares: Vec<i64> = (1..p as i64).map(|x| x * x % p as i64).collect();
            for a in -30i64..30 {
                let r = a.rem_euclid(p as i64);
                let expected = if r == 0 {
                    0
                } else if squares.contains(&r) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(a, p as i64), expected, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn chi1_examples() {
        for d in (1..100).step_by(2) {
            assert_eq!(chi1(d, 1, 6), 1);
        }
        assert_eq!(chi1(3, 1, 5), -1);
        assert_eq!(chi1(3, 5, 6), -1);
        assert_eq!(chi1(6, 3, 2), 0);
    }

    #[test]
    fn sieve_counts() {
        assert_eq!(sieve(10).unwrap().len(), 4);
        assert_eq!(sieve(100).unwrap().len(), 25);
        assert_eq!(sieve(1000).unwrap().len(), 168);
        assert!(sieve(1).is_err());
        assert_eq!(sieve(2).unwrap().primes(), &[2]);
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let table = sieve(10_000).unwrap();
        let trial: Vec<u64> = (2..=10_000u64)
            .filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        assert_eq!(table.primes(), trial.as_slice());
        for x in [2u64, 3, 10, 97, 100, 1000, 9999] {
            assert_eq!(table.pi(x), trial.iter().filter(|&&p| p <= x).count());
        }
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(1), rat(-1, 2));
        assert_eq!(bernoulli(2), rat(1, 6));
        assert_eq!(bernoulli(4), rat(-1, 30));
        assert_eq!(bernoulli(6), rat(1, 42));
        assert_eq!(bernoulli(12), rat(-691, 2730));
        assert_eq!(bernoulli(5), rat(0, 1));
    }

    #[test]
    fn sigma_and_divisors() {
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(sigma(1, 12), int(28));
        assert_eq!(sigma(3, 2), int(9));
        let table = sigma_table(3, 50);
        for n in 1..50u64 {
            assert_eq!(table[n as usize], sigma(3, n));
        }
        assert!(is_squarefree(30));
        assert!(!is_squarefree(12));
        assert!(is_squarefree(1));
    }

    #[test]
    fn parses_decimals() {
        assert_eq!(parse_rational("0").unwrap(), rat(0, 1));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("1").unwrap(), rat(1, 1));
        assert_eq!(parse_rational("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("2e-3").unwrap(), rat(1, 500));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(pow_u(10, 400), pow_u(10, 399));
        assert!((rat_to_f64(&big) - 10.0).abs() < 1e-12);
        let tiny = BigRational::new(BigInt::one(), pow_u(2, 2000));
        assert_eq!(rat_to_f64(&tiny), 0.0);
    }
}
