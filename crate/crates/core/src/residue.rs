//! Finite fields `F_{p^d}` presented as `F_p[x]/(f)` for a fixed monic
//! irreducible `f`.
//!
//! Two element encodings are offered: [`ResidueElement`] (coefficient vector,
//! used at the p-adic boundary) and [`Fq`] (a compact index, used by the
//! formal group law code where elements are copied around a lot). Indices
//! encode the coefficient vector in base `p`, lowest degree first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field size for which log tables are built.
pub const MAX_FIELD_SIZE: u64 = 1 << 16;

/// Deterministic primality check by trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut i = 3u64;
    while i.saturating_mul(i) <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 2;
    }
    true
}

/// Element of `F_{p^d}` as coefficients of `1, x, ..., x^{d-1}`, each mod p.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueElement {
    pub coords: Vec<u64>,
}

/// Compact index of an element of `F_{p^d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fq(pub u32);

impl Fq {
    pub const ZERO: Fq = Fq(0);
    pub const ONE: Fq = Fq(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Polynomial helpers over `F_p`, coefficients low degree first.
mod fp_poly {
    pub fn trim(a: &mut Vec<u64>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut r = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        let lead_inv = super::inv_mod_prime(b[db], p);
        while r.len() > db {
            let top = r.len() - 1;
            let c = r[top] * lead_inv % p;
            if c != 0 {
                for (i, &bi) in b.iter().enumerate() {
                    let idx = top - db + i;
                    r[idx] = (r[idx] + p - c * bi % p) % p;
                }
            }
            trim(&mut r);
        }
        r
    }
}

pub(crate) fn inv_mod_prime(a: u64, p: u64) -> u64 {
    pow_mod(a % p, p - 2, p)
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn is_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    if d <= 1 {
        return d == 1;
    }
    // trial division by every monic polynomial of degree 1..=d/2
    for deg in 1..=d / 2 {
        let count = p.pow(deg as u32);
        for idx in 0..count {
            let mut g = vec![0u64; deg + 1];
            let mut t = idx;
            for c in g.iter_mut().take(deg) {
                *c = t % p;
                t /= p;
            }
            g[deg] = 1;
            if fp_poly::rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// The lexicographically least monic irreducible polynomial of degree `d`
/// over `F_p`, comparing coefficients from `x^{d-1}` down to `x^0`.
pub fn least_irreducible(p: u64, d: usize) -> Vec<u64> {
    let count = p.pow(d as u32);
    for idx in 0..count {
        // idx read most-significant digit first as c_{d-1}, ..., c_0
        let mut f = vec![0u64; d + 1];
        let mut t = idx;
        for c in f.iter_mut().take(d) {
            *c = t % p;
            t /= p;
        }
        f[d] = 1;
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// `F_{p^d}` with its defining polynomial and log tables.
#[derive(Debug, Clone)]
pub struct ResidueField {
    p: u64,
    d: usize,
    size: u64,
    modulus: Vec<u64>,
    // log/exp tables over the index encoding; log[0] unused
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl PartialEq for ResidueField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.d == other.d && self.modulus == other.modulus
    }
}
impl Eq for ResidueField {}

impl ResidueField {
    pub fn new(p: u64, d: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if d == 0 {
            return Err(Error::OutOfRange("residue degree d must be >= 1".into()));
        }
        let size = (p as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if size > MAX_FIELD_SIZE as u128 {
            return Err(Error::OutOfRange(format!(
                "field F_{p}^{d} exceeds {MAX_FIELD_SIZE} elements"
            )));
        }
        let size = size as u64;
        let modulus = least_irreducible(p, d);
        let mut field = ResidueField { p, d, size, modulus, exp: vec![], log: vec![] };
        field.build_tables();
        Ok(field)
    }

    fn build_tables(&mut self) {
        let q = self.size as usize;
        let order = q - 1;
        // find a generator of the multiplicative group
        let factors = prime_factors(order as u64);
        let mut gen = None;
        for cand in 1..q as u32 {
            let c = self.index_coords_slow(cand);
            if order == 1 || factors
                .iter()
                .all(|&f| self.pow_slow(&c, order as u64 / f) != self.one_vec())
            {
                gen = Some(c);
                break;
            }
        }
        let g = gen.expect("multiplicative group is cyclic");
        let mut exp = vec![0u32; order.max(1)];
        let mut log = vec![0u32; q];
        let mut cur = self.one_vec();
        for (i, slot) in exp.iter_mut().enumerate() {
            let idx = self.index_of_slow(&cur);
            *slot = idx;
            log[idx as usize] = i as u32;
            cur = self.mul_slow(&cur, &g);
        }
        self.exp = exp;
        self.log = log;
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// Defining polynomial, low degree first, monic.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    fn one_vec(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = 1;
        v
    }

    fn index_coords_slow(&self, idx: u32) -> Vec<u64> {
        let mut t = idx as u64;
        (0..self.d)
            .map(|_| {
                let c = t % self.p;
                t /= self.p;
                c
            })
            .collect()
    }

    fn index_of_slow(&self, v: &[u64]) -> u32 {
        v.iter().rev().fold(0u64, |acc, &c| acc * self.p + c) as u32
    }

    fn mul_slow(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let p = self.p;
        let mut prod = vec![0u64; 2 * self.d - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        let mut r = fp_poly::rem(&prod, &self.modulus, p);
        r.resize(self.d, 0);
        r
    }

    fn pow_slow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut acc = self.one_vec();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_slow(&acc, &b);
            }
            b = self.mul_slow(&b, &b);
            e >>= 1;
        }
        acc
    }

    // ---- compact encoding ----

    pub fn from_int(&self, n: i64) -> Fq {
        Fq(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn to_residue(&self, a: Fq) -> ResidueElement {
        ResidueElement { coords: self.index_coords_slow(a.0) }
    }

    pub fn from_residue(&self, a: &ResidueElement) -> Result<Fq> {
        if a.coords.len() != self.d || a.coords.iter().any(|&c| c >= self.p) {
            return Err(Error::Malformed(format!(
                "residue element must have {} coordinates in [0, {})",
                self.d, self.p
            )));
        }
        Ok(Fq(self.index_of_slow(&a.coords)))
    }

    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        if self.d == 1 {
            return Fq(((a.0 as u64 + b.0 as u64) % self.p) as u32);
        }
        let (mut x, mut y, mut out, mut place) = (a.0 as u64, b.0 as u64, 0u64, 1u64);
        for _ in 0..self.d {
            out += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        Fq(out as u32)
    }

    pub fn neg(&self, a: Fq) -> Fq {
        let (mut x, mut out, mut place) = (a.0 as u64, 0u64, 1u64);
        for _ in 0..self.d {
            out += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place *= self.p;
        }
        Fq(out as u32)
    }

    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        if a.is_zero() || b.is_zero() {
            return Fq::ZERO;
        }
        let order = self.size as usize - 1;
        let l = (self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize) % order;
        Fq(self.exp[l])
    }

    pub fn scale(&self, k: u64, a: Fq) -> Fq {
        self.mul(self.from_int((k % self.p) as i64), a)
    }

    pub fn inv(&self, a: Fq) -> Result<Fq> {
        if a.is_zero() {
            return Err(Error::NotUnit);
        }
        let order = self.size as usize - 1;
        let l = self.log[a.0 as usize] as usize;
        Ok(Fq(self.exp[(order - l) % order]))
    }

    pub fn pow(&self, a: Fq, e: u64) -> Fq {
        if e == 0 {
            return Fq::ONE;
        }
        if a.is_zero() {
            return Fq::ZERO;
        }
        let order = (self.size - 1) as u128;
        let l = (self.log[a.0 as usize] as u128 * (e as u128 % order)) % order;
        Fq(self.exp[l as usize])
    }

    /// Absolute Frobenius `a -> a^p`.
    pub fn frobenius(&self, a: Fq) -> Fq {
        self.pow(a, self.p)
    }

    /// `a -> a^{p^{-k}}`, the inverse of the k-th Frobenius power.
    pub fn frobenius_inv_pow(&self, a: Fq, k: usize) -> Fq {
        let back = (self.d - k % self.d) % self.d;
        (0..back).fold(a, |x, _| self.frobenius(x))
    }

    pub fn elements(&self) -> impl Iterator<Item = Fq> {
        (0..self.size as u32).map(Fq)
    }

    // ---- vector encoding ----

    pub fn res_add(&self, a: &ResidueElement, b: &ResidueElement) -> ResidueElement {
        ResidueElement {
            coords: a.coords.iter().zip(&b.coords).map(|(x, y)| (x + y) % self.p).collect(),
        }
    }

    pub fn res_mul(&self, a: &ResidueElement, b: &ResidueElement) -> ResidueElement {
        ResidueElement { coords: self.mul_slow(&a.coords, &b.coords) }
    }

    pub fn res_pow(&self, a: &ResidueElement, e: u64) -> ResidueElement {
        ResidueElement { coords: self.pow_slow(&a.coords, e) }
    }

    pub fn res_zero(&self) -> ResidueElement {
        ResidueElement { coords: vec![0; self.d] }
    }

    pub fn res_one(&self) -> ResidueElement {
        ResidueElement { coords: self.one_vec() }
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn least_irreducible_small_cases() {
        assert_eq!(least_irreducible(2, 2), vec![1, 1, 1]);
        assert_eq!(least_irreducible(3, 2), vec![1, 0, 1]);
        assert_eq!(least_irreducible(2, 3), vec![1, 1, 0, 1]);
        assert_eq!(least_irreducible(5, 1), vec![0, 1]);
    }

    #[test]
    fn field_axioms_f9() {
        let k = ResidueField::new(3, 2).unwrap();
        for a in k.elements() {
            assert_eq!(k.add(a, k.neg(a)), Fq::ZERO);
            if !a.is_zero() {
                assert_eq!(k.mul(a, k.inv(a).unwrap()), Fq::ONE);
            }
            assert_eq!(k.pow(a, 9), a);
            for b in k.elements() {
                let slow = k.res_mul(&k.to_residue(a), &k.to_residue(b));
                assert_eq!(k.to_residue(k.mul(a, b)), slow);
            }
        }
    }

    #[test]
    fn frobenius_inverse_roundtrip() {
        let k = ResidueField::new(2, 3).unwrap();
        for a in k.elements() {
            assert_eq!(k.frobenius_inv_pow(k.frobenius(a), 1), a);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(ResidueField::new(4, 1), Err(Error::NotPrime(4)));
        assert!(ResidueField::new(2, 0).is_err());
        assert!(ResidueField::new(7, 7).is_err());
    }
}
