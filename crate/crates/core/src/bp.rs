//! Hazewinkel generators, `BP<h>` formal group law coefficients mod `p`, and
//! `BP<h>` p-series modulo the ideals `I_r = (p, v_1, ..., v_{r-1})`.
//!
//! The logarithm is `l(x) = sum_n l_n x^{p^n}` with `l_0 = 1` and
//! `p l_n = sum_{0 <= i < n} l_i v_{n-i}^{p^i}`; generators above `h` are set
//! to zero from the start, which commutes with every later step.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residue::is_prime;
use crate::series::{self, rational, BiSeries, Coeff};

/// `nu(m) = (p^{m+1} - 1) / (p - 1) = 1 + p + ... + p^m`.
pub fn nu(p: u64, m: u32) -> u64 {
    (0..=m).map(|i| p.pow(i)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuTable {
    pub p: u64,
    pub values: Vec<u64>,
}

impl NuTable {
    pub fn new(p: u64, h: u32) -> Self {
        NuTable { p, values: (0..=h).map(|m| nu(p, m)).collect() }
    }
}

// ---------------------------------------------------------------------------
// rational polynomials in v_1..v_h

/// Element of `Q[v_1, v_2, ...]`, keyed by exponent vectors without
/// trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QPoly {
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl QPoly {
    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !Coeff::is_zero(&c) {
            terms.insert(vec![], c);
        }
        QPoly { terms }
    }

    /// `v_i^e`, `i >= 1`.
    pub fn generator(i: usize, e: u32) -> Self {
        let mut mono = vec![0; i];
        mono[i - 1] = e;
        QPoly { terms: BTreeMap::from([(mono, rational(1, 1))]) }.normalized()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.terms
    }

    fn pad(mono: &[u32], h: usize) -> Vec<u32> {
        let mut m = mono.to_vec();
        m.resize(h, 0);
        m
    }

    pub fn reduce(&self, p: u64, h: usize) -> Result<GradedPoly> {
        let mut out = GradedPoly::zero(p, h);
        for (mono, c) in &self.terms {
            let r = series::reduce_rational(c, p)
                .map_err(|_| Error::NotIntegral(format!("{c} at v-monomial {mono:?}")))?;
            if r != 0 {
                out.terms.insert(Self::pad(mono, h), r);
            }
        }
        Ok(out)
    }
}

impl Coeff for QPoly {
    fn zero() -> Self {
        QPoly::default()
    }
    fn one() -> Self {
        QPoly { terms: BTreeMap::from([(vec![], rational(1, 1))]) }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let e = terms.entry(m.clone()).or_insert_with(|| rational(0, 1));
            *e = &*e + c;
        }
        terms.retain(|_, c| !Coeff::is_zero(c));
        QPoly { terms }
    }
    fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let n = m1.len().max(m2.len());
                let mono: Vec<u32> = (0..n)
                    .map(|i| m1.get(i).copied().unwrap_or(0) + m2.get(i).copied().unwrap_or(0))
                    .collect();
                let e = terms.entry(mono).or_insert_with(|| rational(0, 1));
                *e = &*e + c1 * c2;
            }
        }
        terms.retain(|_, c| !Coeff::is_zero(c));
        QPoly { terms }.normalized()
    }
    fn neg(&self) -> Self {
        QPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
    fn scale(&self, q: &BigRational) -> Self {
        let mut terms: BTreeMap<_, _> = self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect();
        terms.retain(|_, c: &mut BigRational| !Coeff::is_zero(c));
        QPoly { terms }
    }
}

impl QPoly {
    /// Strips trailing zero exponents so equal polynomials compare equal.
    fn normalized(self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (mut m, c) in self.terms {
            while m.last() == Some(&0) {
                m.pop();
            }
            let e = terms.entry(m).or_insert_with(|| rational(0, 1));
            *e = &*e + c;
        }
        terms.retain(|_, c| !Coeff::is_zero(c));
        QPoly { terms }
    }
}

// ---------------------------------------------------------------------------
// F_p polynomials

/// Element of `F_p[v_1, ..., v_h]` with `|v_i| = 2(p^i - 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradedPoly {
    p: u64,
    h: usize,
    terms: BTreeMap<Vec<u32>, u64>,
}

impl GradedPoly {
    pub fn zero(p: u64, h: usize) -> Self {
        GradedPoly { p, h, terms: BTreeMap::new() }
    }

    pub fn constant(p: u64, h: usize, c: i64) -> Self {
        let mut out = Self::zero(p, h);
        let c = c.rem_euclid(p as i64) as u64;
        if c != 0 {
            out.terms.insert(vec![0; h], c);
        }
        out
    }

    /// `c * v^mono`.
    pub fn monomial(p: u64, h: usize, mono: Vec<u32>, c: i64) -> Result<Self> {
        if mono.len() != h {
            return Err(Error::Shape(format!("exponent vector must have length {h}")));
        }
        let mut out = Self::zero(p, h);
        let c = c.rem_euclid(p as i64) as u64;
        if c != 0 {
            out.terms.insert(mono, c);
        }
        Ok(out)
    }

    pub fn generator(p: u64, h: usize, i: usize) -> Self {
        let mut mono = vec![0; h];
        mono[i - 1] = 1;
        GradedPoly { p, h, terms: BTreeMap::from([(mono, 1)]) }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn num_vars(&self) -> usize {
        self.h
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, u64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn monomial_degree(p: u64, mono: &[u32]) -> u64 {
        mono.iter().enumerate().map(|(i, &e)| e as u64 * 2 * (p.pow(i as u32 + 1) - 1)).sum()
    }

    /// Internal degree when homogeneous; `None` for zero or mixed degree.
    pub fn degree(&self) -> Option<u64> {
        let mut degs = self.terms.keys().map(|m| Self::monomial_degree(self.p, m));
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (m, &c) in &other.terms {
            let e = terms.entry(m.clone()).or_insert(0);
            *e = (*e + c) % self.p;
        }
        terms.retain(|_, c| *c != 0);
        GradedPoly { p: self.p, h: self.h, terms }
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(m, &c)| (m.clone(), (self.p - c) % self.p)).collect();
        GradedPoly { p: self.p, h: self.h, terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (m1, &c1) in &self.terms {
            for (m2, &c2) in &other.terms {
                let mono: Vec<u32> = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                let e = terms.entry(mono).or_insert(0);
                *e = (*e + c1 * c2) % self.p;
            }
        }
        terms.retain(|_, c| *c != 0);
        GradedPoly { p: self.p, h: self.h, terms }
    }

    pub fn scale(&self, c: i64) -> Self {
        let c = c.rem_euclid(self.p as i64) as u64;
        let mut terms: BTreeMap<_, _> =
            self.terms.iter().map(|(m, &x)| (m.clone(), x * c % self.p)).collect();
        terms.retain(|_, c: &mut u64| *c != 0);
        GradedPoly { p: self.p, h: self.h, terms }
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut acc = Self::constant(self.p, self.h, 1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Image modulo `(v_1, ..., v_{r-1})`.
    pub fn mod_ideal(&self, r: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.iter().take(r.saturating_sub(1)).all(|&e| e == 0))
            .map(|(m, &c)| (m.clone(), c))
            .collect();
        GradedPoly { p: self.p, h: self.h, terms }
    }

    pub fn coeff(&self, mono: &[u32]) -> u64 {
        self.terms.get(mono).copied().unwrap_or(0)
    }

    /// `(monomial, coefficient)` pairs with monomials spelled `v1^2*v3`.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.terms.iter().map(|(m, &c)| (monomial_name(m), c)).collect()
    }

    pub fn from_map(p: u64, h: usize, map: &BTreeMap<String, u64>) -> Result<Self> {
        let mut out = Self::zero(p, h);
        for (name, &c) in map {
            let mono = parse_monomial(name, h)?;
            out = out.add(&Self::monomial(p, h, mono, (c % p) as i64)?);
        }
        Ok(out)
    }
}

pub fn monomial_name(mono: &[u32]) -> String {
    let parts: Vec<String> = mono
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { format!("v{}", i + 1) } else { format!("v{}^{e}", i + 1) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

pub fn parse_monomial(name: &str, h: usize) -> Result<Vec<u32>> {
    let mut mono = vec![0u32; h];
    if name.trim() == "1" {
        return Ok(mono);
    }
    for part in name.split('*') {
        let part = part.trim();
        let body = part
            .strip_prefix('v')
            .ok_or_else(|| Error::Malformed(format!("bad monomial factor {part:?}")))?;
        let (idx, exp) = match body.split_once('^') {
            Some((i, e)) => (i, e),
            None => (body, "1"),
        };
        let i: usize = idx.parse().map_err(|_| Error::Malformed(format!("bad index in {part:?}")))?;
        let e: u32 = exp.parse().map_err(|_| Error::Malformed(format!("bad exponent in {part:?}")))?;
        if i == 0 || i > h {
            return Err(Error::OutOfRange(format!("v{i} outside v1..v{h}")));
        }
        mono[i - 1] += e;
    }
    Ok(mono)
}

impl fmt::Display for GradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, &c)| {
                let name = monomial_name(m);
                match (c, name.as_str()) {
                    (_, "1") => c.to_string(),
                    (1, _) => name,
                    _ => format!("{c}*{name}"),
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for GradedPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

// ---------------------------------------------------------------------------
// logarithm and formal group law

fn check_params(p: u64, h: u32) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if h > 8 {
        return Err(Error::OutOfRange(format!("h = {h} too large")));
    }
    Ok(())
}

/// Hazewinkel logarithm coefficients `l_0, ..., l_n` (coefficient of
/// `x^{p^n}`) over `Q[v_1..v_h]`, for all `p^n <= D`.
pub fn log_coefficients(p: u64, h: u32, degree: usize) -> Result<Vec<QPoly>> {
    check_params(p, h)?;
    let hs = h as usize;
    let inv_p = rational(1, p as i64);
    let mut ls = vec![QPoly::constant(rational(1, 1))];
    let mut n = 1u32;
    while (p as usize).checked_pow(n).is_some_and(|q| q <= degree) {
        let mut acc = QPoly::default();
        for i in 0..n {
            let j = (n - i) as usize;
            if j > hs {
                continue;
            }
            let term = ls[i as usize].mul(&QPoly::generator(j, p.pow(i) as u32));
            acc = acc.add(&term);
        }
        ls.push(acc.scale(&inv_p));
        n += 1;
    }
    Ok(ls)
}

fn log_series(p: u64, h: u32, degree: usize) -> Result<Vec<QPoly>> {
    let ls = log_coefficients(p, h, degree)?;
    let mut log = vec![QPoly::default(); degree + 1];
    for (n, l) in ls.into_iter().enumerate() {
        log[(p as usize).pow(n as u32)] = l;
    }
    Ok(log)
}

/// The `BP<h>` law reduced mod `p`, truncated at total degree `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpFgl {
    pub p: u64,
    pub h: u32,
    pub degree: usize,
    pub coeffs: BTreeMap<(usize, usize), GradedPoly>,
}

impl BpFgl {
    pub fn coeff(&self, i: usize, j: usize) -> GradedPoly {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_else(|| GradedPoly::zero(self.p, self.h as usize))
    }
}

type Cache = RwLock<HashMap<(u64, u32, usize), Arc<BpFgl>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `F(x, y) = exp(log x + log y)` over `Z_(p)[v_1..v_h]`, each coefficient
/// checked for p-integrality and reduced mod `p`. Memoized per `(p, h, D)`.
pub fn bp_fgl_mod_p(p: u64, h: u32, degree: usize) -> Result<Arc<BpFgl>> {
    if degree < 2 {
        return Err(Error::DegreeTooSmall("need D >= 2".into()));
    }
    if let Some(hit) = cache().read().expect("cache lock").get(&(p, h, degree)) {
        return Ok(hit.clone());
    }
    let log = log_series(p, h, degree)?;
    let exp = series::revert(&log, degree)?;
    let law: BiSeries<QPoly> = series::compose_bi(&exp, &series::split_sum(&log), degree);
    let mut coeffs = BTreeMap::new();
    for (&(i, j), c) in &law {
        let red = c
            .reduce(p, h as usize)
            .map_err(|e| Error::NotIntegral(format!("coefficient of x^{i} y^{j}: {e}")))?;
        if !red.is_zero() {
            coeffs.insert((i, j), red);
        }
    }
    let fgl = Arc::new(BpFgl { p, h, degree, coeffs });
    cache().write().expect("cache lock").entry((p, h, degree)).or_insert(fgl.clone());
    Ok(fgl)
}

type SeriesCache = RwLock<HashMap<(u64, u32, usize), Arc<Vec<QPoly>>>>;

fn series_cache() -> &'static SeriesCache {
    static CACHE: OnceLock<SeriesCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Integral p-series coefficients `[p](x) = exp(p log x)` over `Q[v]`.
/// Memoized per `(p, h, D)`.
pub fn p_series_integral(p: u64, h: u32, degree: usize) -> Result<Vec<QPoly>> {
    if let Some(hit) = series_cache().read().expect("cache lock").get(&(p, h, degree)) {
        return Ok(hit.as_ref().clone());
    }
    let log = log_series(p, h, degree)?;
    let exp = series::revert(&log, degree)?;
    let scaled: Vec<QPoly> = log.iter().map(|c| c.scale(&rational(p as i64, 1))).collect();
    let out = series::compose(&exp, &scaled, degree);
    series_cache().write().expect("cache lock").entry((p, h, degree)).or_insert(Arc::new(out.clone()));
    Ok(out)
}

/// Nonzero coefficients of `[p](x)` in `F_p[v_r, ..., v_h]` up to `x^D`.
pub fn p_series_mod_ir(p: u64, h: u32, r: u32, degree: usize) -> Result<Vec<(usize, GradedPoly)>> {
    if r > h {
        return Err(Error::OutOfRange(format!("ideal level r = {r} exceeds h = {h}")));
    }
    let coeffs = p_series_integral(p, h, degree)?;
    let mut out = vec![];
    for (e, c) in coeffs.iter().enumerate() {
        let red = c
            .reduce(p, h as usize)
            .map_err(|err| Error::NotIntegral(format!("x^{e} in [p](x): {err}")))?
            .mod_ideal(r as usize);
        if !red.is_zero() {
            out.push((e, red));
        }
    }
    Ok(out)
}
