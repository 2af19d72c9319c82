//! Truncated power series over exact characteristic-zero coefficient rings.
//!
//! Univariate series are dense vectors indexed by degree; bivariate series
//! are sparse maps keyed by `(i, j)`. Everything is truncated at a total
//! degree bound passed per call.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Minimal commutative ring interface for series coefficients.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, q: &BigRational) -> Self;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, q: &BigRational) -> Self {
        self * q
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Image of a p-integral rational in `F_p`.
pub fn reduce_rational(q: &BigRational, p: u64) -> Result<u64> {
    let pb = BigInt::from(p);
    let den = q.denom().abs() % &pb;
    if den.is_zero() {
        return Err(Error::NotIntegral(format!("{q} has denominator divisible by {p}")));
    }
    let to_u64 = |x: BigInt| -> u64 {
        let r = ((x % &pb) + &pb) % &pb;
        r.to_u64_digits().1.first().copied().unwrap_or(0)
    };
    let num = to_u64(q.numer().clone());
    let mut den = to_u64(q.denom().clone());
    // inverse by Fermat
    let mut inv = 1u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            inv = ((inv as u128 * den as u128) % p as u128) as u64;
        }
        den = ((den as u128 * den as u128) % p as u128) as u64;
        e >>= 1;
    }
    Ok(((num as u128 * inv as u128) % p as u128) as u64)
}

/// Product of univariate series truncated at degree `d`.
pub fn mul<C: Coeff>(a: &[C], b: &[C], d: usize) -> Vec<C> {
    let mut out = vec![C::zero(); d + 1];
    for (i, x) in a.iter().enumerate().take(d + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(d + 1 - i) {
            if !y.is_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    out
}

pub fn pow<C: Coeff>(a: &[C], mut e: u64, d: usize) -> Vec<C> {
    let mut result = vec![C::zero(); d + 1];
    result[0] = C::one();
    let mut base = a.to_vec();
    base.resize(d + 1, C::zero());
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &base, d);
        }
        e >>= 1;
        if e > 0 {
            base = mul(&base, &base, d);
        }
    }
    result
}

/// `outer(inner(x))` for `inner` without constant term.
pub fn compose<C: Coeff>(outer: &[C], inner: &[C], d: usize) -> Vec<C> {
    debug_assert!(inner.first().is_none_or(|c| c.is_zero()));
    let mut out = vec![C::zero(); d + 1];
    if let Some(c0) = outer.first() {
        out[0] = c0.clone();
    }
    let mut power = vec![C::zero(); d + 1];
    power[0] = C::one();
    for c in outer.iter().take(d + 1).skip(1) {
        power = mul(&power, inner, d);
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(&power) {
            if !x.is_zero() {
                *o = o.add(&c.mul(x));
            }
        }
    }
    out
}

/// Compositional inverse of `f = x + f_2 x^2 + ...` by the fixed point
/// `g = x - sum_{m >= 2} f_m g^m`. Efficient when `f` is sparse.
pub fn revert<C: Coeff>(f: &[C], d: usize) -> Result<Vec<C>> {
    if f.len() < 2 || !f[0].is_zero() || f[1] != C::one() {
        return Err(Error::Malformed("reversion needs f = x + O(x^2)".into()));
    }
    let mut g = vec![C::zero(); d + 1];
    if d >= 1 {
        g[1] = C::one();
    }
    for _ in 0..=d {
        let mut next = vec![C::zero(); d + 1];
        if d >= 1 {
            next[1] = C::one();
        }
        for (m, c) in f.iter().enumerate().take(d + 1).skip(2) {
            if c.is_zero() {
                continue;
            }
            let gm = pow(&g, m as u64, d);
            for (o, x) in next.iter_mut().zip(&gm) {
                if !x.is_zero() {
                    *o = o.sub(&c.mul(x));
                }
            }
        }
        if next == g {
            return Ok(g);
        }
        g = next;
    }
    Ok(g)
}

/// Sparse bivariate series `sum a_{ij} x^i y^j`.
pub type BiSeries<C> = BTreeMap<(usize, usize), C>;

pub fn bi_mul<C: Coeff>(a: &BiSeries<C>, b: &BiSeries<C>, d: usize) -> BiSeries<C> {
    let mut out: BiSeries<C> = BTreeMap::new();
    for (&(i, j), x) in a {
        for (&(k, l), y) in b {
            if i + j + k + l > d {
                continue;
            }
            let e = out.entry((i + k, j + l)).or_insert_with(C::zero);
            *e = e.add(&x.mul(y));
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// `e(t(x, y))` for a univariate `e` and bivariate `t` without constant term.
pub fn compose_bi<C: Coeff>(e: &[C], t: &BiSeries<C>, d: usize) -> BiSeries<C> {
    let mut out: BiSeries<C> = BTreeMap::new();
    let mut power: BiSeries<C> = BTreeMap::from([((0, 0), C::one())]);
    for (k, c) in e.iter().enumerate().take(d + 1) {
        if k > 0 {
            power = bi_mul(&power, t, d);
        }
        if c.is_zero() {
            continue;
        }
        for (&key, x) in &power {
            let slot = out.entry(key).or_insert_with(C::zero);
            *slot = slot.add(&c.mul(x));
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// `f(x) + f(y)` as a bivariate series.
pub fn split_sum<C: Coeff>(f: &[C]) -> BiSeries<C> {
    let mut out = BTreeMap::new();
    for (i, c) in f.iter().enumerate() {
        if !c.is_zero() {
            out.insert((i, 0), c.clone());
            out.insert((0, i), c.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        rational(n, 1)
    }

    #[test]
    fn reversion_of_log_one_plus_x() {
        // log(1+x) reverts to e^x - 1
        let d = 8;
        let mut log = vec![q(0)];
        for k in 1..=d as i64 {
            log.push(rational(if k % 2 == 1 { 1 } else { -1 }, k));
        }
        let g = revert(&log, d).unwrap();
        let mut fact = 1i64;
        for k in 1..=d {
            fact *= k as i64;
            assert_eq!(g[k], rational(1, fact));
        }
        let back = compose(&log, &g, d);
        assert_eq!(back[1], q(1));
        assert!(back[2..].iter().all(Coeff::is_zero));
    }

    #[test]
    fn bivariate_composition_of_multiplicative_law() {
        // exp(log(1+x) + log(1+y)) - 1 = x + y + xy
        let d = 6;
        let mut log = vec![q(0)];
        for k in 1..=d as i64 {
            log.push(rational(if k % 2 == 1 { 1 } else { -1 }, k));
        }
        let exp = revert(&log, d).unwrap();
        let f = compose_bi(&exp, &split_sum(&log), d);
        let expected: BiSeries<BigRational> =
            BTreeMap::from([((1, 0), q(1)), ((0, 1), q(1)), ((1, 1), q(1))]);
        assert_eq!(f, expected);
    }

    #[test]
    fn rational_reduction() {
        assert_eq!(reduce_rational(&rational(1, 3), 2).unwrap(), 1);
        assert_eq!(reduce_rational(&rational(-1, 1), 5).unwrap(), 4);
        assert_eq!(reduce_rational(&rational(2, 3), 5).unwrap(), 4);
        assert!(reduce_rational(&rational(1, 2), 2).is_err());
    }
}
