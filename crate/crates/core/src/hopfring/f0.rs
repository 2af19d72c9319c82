//! Non-nilpotence of `f` in `F_p[v^{+-1}][f] / (f^p - e v f)`, `e = (-1)^{h-1}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bp::nu;
use crate::error::{Error, Result};

/// Element `sum_j a_j(v) f^j`, `0 <= j < p`, with Laurent coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct F0Elem {
    p: u64,
    eps: u64,
    coeffs: Vec<BTreeMap<i64, u64>>,
}

impl F0Elem {
    /// The generator `f` for height `h >= 1`.
    pub fn f(p: u64, h: u32) -> Result<Self> {
        if h == 0 {
            return Err(Error::OutOfRange("f0 relation needs h >= 1".into()));
        }
        if !crate::residue::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let eps = if h % 2 == 1 { 1 } else { p - 1 };
        let mut coeffs = vec![BTreeMap::new(); p as usize];
        coeffs[1].insert(0, 1);
        Ok(F0Elem { p, eps, coeffs })
    }

    /// `c v^e f^j`.
    pub fn monomial(&self, c: u64, e: i64, j: usize) -> Self {
        let mut coeffs = vec![BTreeMap::new(); self.p as usize];
        if !c.is_multiple_of(self.p) {
            coeffs[j].insert(e, c % self.p);
        }
        F0Elem { p: self.p, eps: self.eps, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(BTreeMap::is_empty)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let p = self.p;
        let np = p as usize;
        let mut raw: Vec<BTreeMap<i64, u64>> = vec![BTreeMap::new(); 2 * np - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                for (&ea, &ca) in a {
                    for (&eb, &cb) in b {
                        let slot = raw[i + j].entry(ea + eb).or_insert(0);
                        *slot = (*slot + ca * cb) % p;
                    }
                }
            }
        }
        // f^{p + j} = e v f^{1 + j}
        for d in (np..raw.len()).rev() {
            let top = std::mem::take(&mut raw[d]);
            for (e, c) in top {
                let slot = raw[d - np + 1].entry(e + 1).or_insert(0);
                *slot = (*slot + c * self.eps) % p;
            }
        }
        raw.truncate(np);
        for m in &mut raw {
            m.retain(|_, c| *c != 0);
        }
        F0Elem { p, eps: self.eps, coeffs: raw }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = self.monomial(1, 0, 0);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

impl std::fmt::Display for F0Elem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = vec![];
        for (j, a) in self.coeffs.iter().enumerate() {
            for (&e, &c) in a {
                let mut s = if c == 1 { String::new() } else { format!("{c}") };
                match e {
                    0 => {}
                    1 => s.push('v'),
                    _ => s.push_str(&format!("v^{e}")),
                }
                match j {
                    0 if s.is_empty() => s.push('1'),
                    0 => {}
                    1 => s.push('f'),
                    _ => s.push_str(&format!("f^{j}")),
                }
                parts.push(s);
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct F0Row {
    pub m: u32,
    /// `p^m`.
    pub exponent: u64,
    pub power: String,
    pub expected: String,
    pub matches: bool,
    pub nonzero: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct F0Report {
    pub p: u64,
    pub h: u32,
    pub relation: String,
    pub rows: Vec<F0Row>,
}

impl F0Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.matches && r.nonzero)
    }
}

/// `f^{p^m}` for `1 <= m <= m_max` by iterated `p`-th powers, compared with
/// `(e v)^{nu(m-1)} f`.
pub fn f0_nonnilpotence(p: u64, h: u32, m_max: u32) -> Result<F0Report> {
    if m_max == 0 {
        return Err(Error::OutOfRange("m_max must be at least 1".into()));
    }
    let f = F0Elem::f(p, h)?;
    let sign = if h % 2 == 1 { "" } else { "-" };
    let mut rows = vec![];
    let mut cur = f.clone();
    for m in 1..=m_max {
        cur = cur.pow(p);
        let e = nu(p, m - 1);
        let c = if f.eps == 1 || e.is_multiple_of(2) { 1 } else { p - 1 };
        let expected = f.monomial(c, e as i64, 1);
        rows.push(F0Row {
            m,
            exponent: p.pow(m),
            power: cur.to_string(),
            expected: expected.to_string(),
            matches: cur == expected,
            nonzero: !cur.is_zero(),
        });
    }
    Ok(F0Report { p, h, relation: format!("f^{p} = {sign}v{h} f"), rows })
}
