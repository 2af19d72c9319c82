//! Truncated arithmetic in the unramified Witt ring `W(F_{p^d})`.
//!
//! `W(F_{p^d})` is modelled as `(Z/p^N)[x]/(f)` where `f` is the least monic
//! irreducible polynomial over `F_p` of degree `d`, with its coefficients read
//! as integers. Any monic lift of an irreducible residue polynomial presents
//! the unramified extension, so the lift is taken verbatim.
//!
//! Elements carry an effective precision: `p`-divisions drop one guaranteed
//! digit, and every binary operation works at the smaller precision of its
//! operands.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residue::{ResidueElement, ResidueField};

/// `(p, d, N)` as it appears on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingSpec {
    pub p: u64,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u32,
}

/// The ring `W(F_{p^d})/p^N` together with its precomputed Frobenius.
#[derive(Debug)]
pub struct RingConfig {
    spec: RingSpec,
    modulus: u64,
    poly: Vec<u64>,
    residue: ResidueField,
    // column j = phi(x^j), resp. phi^{-1}(x^j)
    frob: Vec<Vec<u64>>,
    frob_inv: Vec<Vec<u64>>,
}

pub type Ring = Arc<RingConfig>;

impl PartialEq for RingConfig {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}
impl Eq for RingConfig {}

/// An element of `W(F_{p^d})` known modulo `p^prec`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WittElement {
    pub coords: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prec: Option<u32>,
}

/// Builds `W(F_{p^d})/p^N`.
pub fn make_ring(p: u64, d: usize, n: u32) -> Result<Ring> {
    RingConfig::new(RingSpec { p, d, n }).map(Arc::new)
}

impl RingConfig {
    pub fn new(spec: RingSpec) -> Result<Self> {
        let RingSpec { p, d, n } = spec;
        let residue = ResidueField::new(p, d)?;
        if n == 0 {
            return Err(Error::OutOfRange("precision N must be >= 1".into()));
        }
        let modulus = (p as u128)
            .checked_pow(n)
            .filter(|&m| m < (1u128 << 62))
            .ok_or_else(|| Error::OutOfRange(format!("p^N = {p}^{n} exceeds 2^62")))?
            as u64;
        let mut ring = RingConfig {
            spec,
            modulus,
            poly: residue.modulus().to_vec(),
            residue,
            frob: vec![],
            frob_inv: vec![],
        };
        ring.frob = ring.compute_frobenius_columns();
        let inv = (0..d)
            .map(|j| {
                let mut e = ring.basis(j);
                for _ in 0..d.saturating_sub(1) {
                    e = ring.frobenius(&e);
                }
                e.coords
            })
            .collect();
        ring.frob_inv = inv;
        Ok(ring)
    }

    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    pub fn p(&self) -> u64 {
        self.spec.p
    }

    pub fn degree(&self) -> usize {
        self.spec.d
    }

    pub fn precision(&self) -> u32 {
        self.spec.n
    }

    /// `p^N`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Defining polynomial of the residue field, low degree first.
    pub fn defining_polynomial(&self) -> &[u64] {
        &self.poly
    }

    pub fn residue_field(&self) -> &ResidueField {
        &self.residue
    }

    fn p_pow(&self, k: u32) -> u64 {
        self.spec.p.pow(k)
    }

    fn prec_of(&self, a: &WittElement) -> u32 {
        a.prec.unwrap_or(self.spec.n).min(self.spec.n)
    }

    /// Effective precision of `a`.
    pub fn precision_of(&self, a: &WittElement) -> u32 {
        self.prec_of(a)
    }

    fn make(&self, coords: Vec<u64>, prec: u32) -> WittElement {
        let m = self.p_pow(prec);
        let coords = coords.into_iter().map(|c| c % m).collect();
        WittElement { coords, prec: (prec < self.spec.n).then_some(prec) }
    }

    /// Validates and canonicalizes an element read from outside.
    pub fn element(&self, coords: Vec<u64>) -> Result<WittElement> {
        if coords.len() != self.spec.d {
            return Err(Error::Malformed(format!(
                "expected {} coordinates, got {}",
                self.spec.d,
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|&&c| c >= self.modulus) {
            return Err(Error::Malformed(format!("coordinate {c} not in [0, p^N)")));
        }
        Ok(self.make(coords, self.spec.n))
    }

    /// Checks that `a` is canonical for this ring.
    pub fn check(&self, a: &WittElement) -> Result<()> {
        let prec = self.prec_of(a);
        let m = self.p_pow(prec);
        if a.coords.len() != self.spec.d || a.coords.iter().any(|&c| c >= m) {
            return Err(Error::Malformed(format!(
                "element {:?} is not canonical in {}",
                a.coords, self
            )));
        }
        Ok(())
    }

    pub fn with_precision(&self, a: &WittElement, prec: u32) -> WittElement {
        self.make(a.coords.clone(), prec.min(self.prec_of(a)))
    }

    pub fn zero(&self) -> WittElement {
        self.make(vec![0; self.spec.d], self.spec.n)
    }

    pub fn one(&self) -> WittElement {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> WittElement {
        let mut coords = vec![0; self.spec.d];
        coords[0] = (n as i128).rem_euclid(self.modulus as i128) as u64;
        self.make(coords, self.spec.n)
    }

    /// The basis vector `x^j`.
    pub fn basis(&self, j: usize) -> WittElement {
        let mut coords = vec![0; self.spec.d];
        coords[j] = 1;
        self.make(coords, self.spec.n)
    }

    pub fn add(&self, a: &WittElement, b: &WittElement) -> WittElement {
        let prec = self.prec_of(a).min(self.prec_of(b));
        let m = self.p_pow(prec);
        let coords = a.coords.iter().zip(&b.coords).map(|(x, y)| (x % m + y % m) % m).collect();
        self.make(coords, prec)
    }

    pub fn neg(&self, a: &WittElement) -> WittElement {
        let prec = self.prec_of(a);
        let m = self.p_pow(prec);
        let coords = a.coords.iter().map(|&x| (m - x % m) % m).collect();
        self.make(coords, prec)
    }

    pub fn sub(&self, a: &WittElement, b: &WittElement) -> WittElement {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &WittElement, b: &WittElement) -> WittElement {
        let prec = self.prec_of(a).min(self.prec_of(b));
        let m = self.p_pow(prec) as u128;
        let d = self.spec.d;
        let mut prod = vec![0u128; 2 * d - 1];
        for (i, &x) in a.coords.iter().enumerate() {
            for (j, &y) in b.coords.iter().enumerate() {
                prod[i + j] = (prod[i + j] + (x as u128 % m) * (y as u128 % m)) % m;
            }
        }
        for top in (d..2 * d - 1).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for (i, &fi) in self.poly.iter().enumerate().take(d) {
                let idx = top - d + i;
                prod[idx] = (prod[idx] + m - (c * fi as u128) % m) % m;
            }
        }
        self.make(prod[..d].iter().map(|&c| c as u64).collect(), prec)
    }

    pub fn scale(&self, k: i64, a: &WittElement) -> WittElement {
        self.mul(&self.from_int(k), a)
    }

    pub fn pow(&self, a: &WittElement, mut e: u64) -> WittElement {
        let mut acc = self.with_precision(&self.one(), self.prec_of(a));
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    /// Equality at the smaller effective precision of the operands.
    pub fn equal(&self, a: &WittElement, b: &WittElement) -> bool {
        self.is_zero(&self.sub(a, b))
    }

    pub fn is_zero(&self, a: &WittElement) -> bool {
        a.coords.iter().all(|&c| c == 0)
    }

    /// Image in the residue field.
    pub fn reduce(&self, a: &WittElement) -> ResidueElement {
        let p = self.spec.p;
        if self.prec_of(a) == 0 {
            return self.residue.res_zero();
        }
        ResidueElement { coords: a.coords.iter().map(|&c| c % p).collect() }
    }

    pub fn is_unit(&self, a: &WittElement) -> bool {
        self.reduce(a).coords.iter().any(|&c| c != 0)
    }

    /// p-adic valuation, capped at the effective precision.
    pub fn valuation(&self, a: &WittElement) -> u32 {
        let prec = self.prec_of(a);
        let p = self.spec.p;
        let mut v = prec;
        for &c in &a.coords {
            if c != 0 {
                let mut c = c;
                let mut k = 0;
                while c % p == 0 {
                    c /= p;
                    k += 1;
                }
                v = v.min(k);
            }
        }
        v
    }

    pub fn inv(&self, a: &WittElement) -> Result<WittElement> {
        if !self.is_unit(a) {
            return Err(Error::NotUnit);
        }
        let prec = self.prec_of(a);
        let k = &self.residue;
        let r = k.from_residue(&self.reduce(a))?;
        let r_inv = k.to_residue(k.inv(r)?);
        // Newton: x <- x (2 - a x), doubling the correct digits each round
        let mut x = self.make(r_inv.coords, prec);
        let two = self.from_int(2);
        let mut digits = 1;
        while digits < prec {
            x = self.mul(&x, &self.sub(&two, &self.mul(a, &x)));
            digits *= 2;
        }
        Ok(x)
    }

    /// Exact division by `p`; the result carries one fewer digit.
    pub fn div_p(&self, a: &WittElement) -> Result<WittElement> {
        self.div_p_pow(a, 1)
    }

    /// Exact division by `p^k`, dropping `k` digits of precision.
    pub fn div_p_pow(&self, a: &WittElement, k: u32) -> Result<WittElement> {
        let prec = self.prec_of(a);
        if k == 0 {
            return Ok(a.clone());
        }
        if prec <= k {
            return Err(Error::PrecisionExhausted(format!(
                "dividing by p^{k} an element known to p^{prec}"
            )));
        }
        let pk = self.p_pow(k);
        if a.coords.iter().any(|&c| c % pk != 0) {
            return Err(Error::NotDivisible);
        }
        Ok(self.make(a.coords.iter().map(|&c| c / pk).collect(), prec - k))
    }

    fn apply_columns(&self, cols: &[Vec<u64>], a: &WittElement) -> WittElement {
        let prec = self.prec_of(a);
        let m = self.p_pow(prec) as u128;
        let d = self.spec.d;
        let mut out = vec![0u128; d];
        for (j, &aj) in a.coords.iter().enumerate() {
            for i in 0..d {
                out[i] = (out[i] + (aj as u128) * (cols[j][i] as u128 % m)) % m;
            }
        }
        self.make(out.into_iter().map(|c| c as u64).collect(), prec)
    }

    /// The Witt vector Frobenius `phi`.
    pub fn frobenius(&self, a: &WittElement) -> WittElement {
        if self.spec.d == 1 {
            return a.clone();
        }
        self.apply_columns(&self.frob, a)
    }

    pub fn frobenius_inv(&self, a: &WittElement) -> WittElement {
        if self.spec.d == 1 {
            return a.clone();
        }
        self.apply_columns(&self.frob_inv, a)
    }

    /// `phi^k` for any integer `k`.
    pub fn frobenius_pow(&self, a: &WittElement, k: i64) -> WittElement {
        let d = self.spec.d as i64;
        let k = k.rem_euclid(d);
        (0..k).fold(a.clone(), |x, _| self.frobenius(&x))
    }

    fn eval_poly(&self, poly: &[u64], y: &WittElement) -> WittElement {
        poly.iter().rev().fold(self.zero(), |acc, &c| {
            self.add(&self.mul(&acc, y), &self.from_int(c as i64))
        })
    }

    /// Columns `phi(x^j)`: the root of `f` congruent to `x^p`, by Newton
    /// iteration, and its powers.
    fn compute_frobenius_columns(&self) -> Vec<Vec<u64>> {
        let d = self.spec.d;
        if d == 1 {
            return vec![vec![1]];
        }
        let deriv: Vec<u64> =
            self.poly.iter().enumerate().skip(1).map(|(i, &c)| c * i as u64).collect();
        let mut y = self.pow(&self.basis(1), self.spec.p);
        for _ in 0..=(self.spec.n as usize).next_power_of_two().trailing_zeros() + 1 {
            let fy = self.eval_poly(&self.poly, &y);
            let dfy = self.eval_poly(&deriv, &y);
            let step = self.mul(&fy, &self.inv(&dfy).expect("separable residue polynomial"));
            y = self.sub(&y, &step);
        }
        (0..d).map(|j| self.pow(&y, j as u64).coords).collect()
    }

    /// The Teichmuller lift: the unique `w` with `w^{p^d} = w` reducing to `x`.
    pub fn teichmuller(&self, x: &ResidueElement) -> Result<WittElement> {
        self.residue.from_residue(x)?;
        let q = self.residue.size();
        let mut w = self.make(x.coords.clone(), self.spec.n);
        for _ in 0..self.spec.n {
            w = self.pow(&w, q);
        }
        Ok(w)
    }

    /// Product of the `d` Frobenius conjugates; lands in `Z/p^N`.
    pub fn norm(&self, a: &WittElement) -> WittElement {
        let mut acc = a.clone();
        let mut conj = a.clone();
        for _ in 1..self.spec.d {
            conj = self.frobenius(&conj);
            acc = self.mul(&acc, &conj);
        }
        acc
    }

    /// Integer representative of an element of the `d = 1` subring.
    pub fn as_integer(&self, a: &WittElement) -> Option<u64> {
        a.coords[1..].iter().all(|&c| c == 0).then_some(a.coords[0])
    }

    /// Signed representative in `(-p^prec/2, p^prec/2]` for display.
    pub fn signed(&self, c: u64, prec: u32) -> i128 {
        let m = self.p_pow(prec) as i128;
        let c = c as i128 % m;
        if c > m / 2 {
            c - m
        } else {
            c
        }
    }

}

impl fmt::Display for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W(F_{}^{})/{}^{}", self.spec.p, self.spec.d, self.spec.p, self.spec.n)
    }
}
