//! Construction of the desk-scale eigenforms and their lifts.

use crate::error::{Error, Result};
use crate::expansion::attach_expansion;
use crate::hecke::IntegralForm;
use crate::shimura::identify_lift;
use crate::spaces::{eigenbasis, normalize_at, normalize_at_t, plus_cusp_space, HalfIntegralForm, DEFAULT_SPACE_PRECISION};

/// Primes used to separate eigenvectors.
pub const EIGEN_PRIMES: [u64; 3] = [3, 5, 7];

/// Level-one generator length for the coefficient expansion.
pub const EXPANSION_DENSE_LEN: usize = 2501;

/// Directly lifted coefficients checked against the identified lift.
pub const LIFT_CHECK_LEN: usize = 60;

/// The normalized eigenform spanning the one-dimensional plus cusp space of
/// weight `k + 1/2`, with a coefficient expansion attached for even `k`.
pub fn desk_eigenform(k: u32, t: Option<u64>) -> Result<HalfIntegralForm> {
    let space = plus_cusp_space(k, DEFAULT_SPACE_PRECISION)?;
    if space.dimension() != 1 {
        return Err(Error::InvalidArgument(format!(
            "weight {}/2 plus cusp space has dimension {}, expected 1",
            2 * k + 1,
            space.dimension()
        )));
    }
    let forms = eigenbasis(&space, &EIGEN_PRIMES)?;
    let f = match t {
        Some(t) => normalize_at(&forms[0], t)?,
        None => normalize_at_t(&forms[0])?,
    };
    if k % 2 == 0 {
        attach_expansion(&f, EXPANSION_DENSE_LEN)
    } else {
        Ok(f)
    }
}

/// The level-one lift of a desk eigenform to `prec` coefficients.
pub fn desk_lift(f: &HalfIntegralForm, prec: usize) -> Result<IntegralForm> {
    identify_lift(f, prec.max(LIFT_CHECK_LEN), LIFT_CHECK_LEN).map(|l| l.truncate(prec))
}
