//! The Fredholm index of the Cauchy-Riemann section on a component of
//! stable maps of genus `g` with `k` marked points representing a class with
//! first Chern number `c1`, in a target of real dimension `two_n`.

use crate::{Error, Result};

fn check(two_n: i64, g: i64, k: i64) -> Result<()> {
    if two_n < 2 || two_n % 2 != 0 {
        return Err(Error::OddDimension(two_n.max(0) as usize));
    }
    if g < 0 || k < 0 {
        return Err(Error::InvalidParameter("genus and marked count are non-negative".into()));
    }
    Ok(())
}

/// `2 c1 + (2n - 6)(1 - g) + 2k`.
pub fn fredholm_index(two_n: i64, g: i64, k: i64, c1: i64) -> Result<i64> {
    check(two_n, g, k)?;
    let index = 2 * c1 + (two_n - 6) * (1 - g) + 2 * k;
    debug_assert_eq!(index, fredholm_index_local(two_n, g, k, c1)?);
    Ok(index)
}

/// The same number assembled from the local contributions:
/// `2n (1 - g) + 2 c1` from the linearized operator, `6g - 6` from the
/// moduli of the domain and `2k` from the marked points.
pub fn fredholm_index_local(two_n: i64, g: i64, k: i64, c1: i64) -> Result<i64> {
    check(two_n, g, k)?;
    Ok(two_n * (1 - g) + 2 * c1 + 6 * g - 6 + 2 * k)
}
