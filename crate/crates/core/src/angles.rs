//! Circular (S¹) angle arithmetic.

use crate::scalar::Scalar;

/// Reduce an angle to `[0, 2π)`.
pub fn wrap<S: Scalar>(a: S) -> S {
    let two_pi = S::PI() + S::PI();
    let mut r = a % two_pi;
    if r < S::zero() {
        r += two_pi;
    }
    // `% two_pi` of a tiny negative can round up to exactly two_pi.
    if r >= two_pi {
        r -= two_pi;
    }
    r
}

/// Signed shortest rotation taking `from` to `to`, in `(-π, π]`.
///
/// When the two directions are exactly π apart the counter-clockwise (+π)
/// branch is returned, which keeps interpolation deterministic.
pub fn signed_diff<S: Scalar>(from: S, to: S) -> S {
    let two_pi = S::PI() + S::PI();
    let mut d = wrap(to) - wrap(from);
    if d > S::PI() {
        d -= two_pi;
    } else if d <= -S::PI() {
        d += two_pi;
    }
    d
}

/// Shortest circular distance between two angles, in `[0, π]`.
pub fn dist<S: Scalar>(a: S, b: S) -> S {
    signed_diff(a, b).abs()
}
