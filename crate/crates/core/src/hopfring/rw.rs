//! Coefficient extraction from the Ravenel-Wilson relation
//! `b([p]_{K(n)}(s)) = *_i [c_i] o b(s)^{o i}`, with `[p]_{K(n)}(s) = v_n s^{p^n}`.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive};

use super::expr::{label_circ, Atom, BMono, HopfExpr, Label, Params};
use crate::bp::{p_series_integral, p_series_mod_ir};
use crate::error::{Error, Result};

/// Where an identity lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The Hopf ring itself, with integral p-series coefficients.
    Full,
    /// Indecomposables modulo `[I_r]`.
    Q,
}

/// Reduction context: parameters, mode, and ideal level `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    pub params: Params,
    pub mode: Mode,
    pub level: u32,
}

impl Context {
    pub fn new(params: Params, mode: Mode, level: u32) -> Result<Self> {
        if params.n <= params.h + 1 {
            return Err(Error::OutOfRange(format!(
                "need n > h + 1, got n = {}, h = {}",
                params.n, params.h
            )));
        }
        if level > params.h {
            return Err(Error::OutOfRange(format!("level r = {level} exceeds h = {}", params.h)));
        }
        if mode == Mode::Full && level != 0 {
            return Err(Error::Unsupported("full mode is only available at level 0".into()));
        }
        Ok(Context { params, mode, level })
    }

    /// Default p-series truncation `p^{h+2}`.
    pub fn default_degree(&self) -> usize {
        (self.params.p as usize).pow(self.params.h + 2)
    }
}

/// Coefficient of `s^k` on both sides of the relation. The identity
/// `lhs = rhs` holds in the context it was extracted in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RwIdentity {
    pub k: usize,
    pub mode: Mode,
    pub level: u32,
    pub lhs: HopfExpr,
    pub rhs: HopfExpr,
}

impl RwIdentity {
    /// `lhs - rhs`, an expression that vanishes in the context.
    pub fn difference(&self) -> Result<HopfExpr> {
        self.lhs.sub(&self.rhs)
    }
}

/// Truncated power series in `s` with Hopf-ring coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSeries {
    coeffs: Vec<HopfExpr>,
}

impl GenSeries {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Option<&HopfExpr> {
        self.coeffs.get(k)
    }

    /// `b(s) = sum b_i s^i`, with `b_0` the unit `[0]_2`.
    pub fn b(params: Params, degree: usize) -> Self {
        GenSeries { coeffs: (0..=degree).map(|i| HopfExpr::b(params, i as u32)).collect() }
    }

    /// `*`-product, truncated at the smaller degree.
    pub fn star(&self, other: &Self) -> Result<Self> {
        let d = self.degree().min(other.degree());
        let params = self.coeffs[0].ctx();
        let mut coeffs = vec![HopfExpr::zero(params); d + 1];
        for (i, x) in self.coeffs.iter().enumerate().take(d + 1) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in other.coeffs.iter().enumerate().take(d + 1 - i) {
                if !y.is_zero() {
                    coeffs[i + j] = coeffs[i + j].add(&x.star(y)?)?;
                }
            }
        }
        Ok(GenSeries { coeffs })
    }
}

/// Binomial coefficient mod `p` by Lucas.
fn binom_mod(mut n: u64, mut k: u64, p: u64) -> u64 {
    let mut out = 1u64;
    while n > 0 || k > 0 {
        let (a, b) = (n % p, k % p);
        if b > a {
            return 0;
        }
        let mut c = 1u64;
        for t in 0..b {
            c = c * (a - t) / (t + 1);
        }
        out = out * (c % p) % p;
        n /= p;
        k /= p;
    }
    out
}

/// Multinomial `(sum m)! / prod m!` mod `p`.
fn multinomial_mod(mults: &BMono, p: u64) -> u64 {
    let mut total = 0u64;
    let mut out = 1u64;
    for &m in mults.values() {
        total += m as u64;
        out = out * binom_mod(total, m as u64, p) % p;
    }
    out
}

/// Partitions of `k` into positive parts, as part -> multiplicity.
fn partitions(k: u32) -> Vec<BMono> {
    fn go(rest: u32, max: u32, cur: &mut BMono, out: &mut Vec<BMono>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            *cur.entry(part).or_insert(0) += 1;
            go(rest - part, part, cur, out);
            let e = cur.get_mut(&part).expect("just inserted");
            *e -= 1;
            if *e == 0 {
                cur.remove(&part);
            }
        }
    }
    let mut out = vec![];
    go(k, k, &mut BMono::new(), &mut out);
    out
}

/// `v_n^i b_i` when `k = i p^n`, else zero.
fn lhs_coefficient(params: Params, k: usize) -> HopfExpr {
    let step = (params.p as usize).pow(params.n);
    if !k.is_multiple_of(step) {
        return HopfExpr::zero(params);
    }
    let i = k / step;
    HopfExpr::b(params, i as u32).scale_vn(i as i64)
}

fn check_degree(k: usize, degree: usize) -> Result<()> {
    if k == 0 || k > degree {
        return Err(Error::DegreeTooSmall(format!(
            "exponent {k} needs p-series data in 1..={degree}"
        )));
    }
    Ok(())
}

/// The `s^k` coefficient of the relation in `ctx`, reading p-series data
/// to degree `degree`.
pub fn rw_extract(ctx: &Context, k: usize, degree: usize) -> Result<RwIdentity> {
    check_degree(k, degree)?;
    match ctx.mode {
        Mode::Q => rw_extract_q(ctx, k, degree),
        Mode::Full => rw_extract_full(ctx, k, degree),
    }
}

/// In `Q` only one factor of the `*`-product carries positive degree and
/// `[c] o y` is additive in `c`, so the coefficient is
/// `sum_i sum_m lambda_m [m] o (b(s)^{o i})_k`, with
/// `(b(s)^{o i})_k` a sum over partitions of `k` into `i` parts weighted by
/// the number of orderings.
fn rw_extract_q(ctx: &Context, k: usize, degree: usize) -> Result<RwIdentity> {
    let params = ctx.params;
    let cs: BTreeMap<usize, _> =
        p_series_mod_ir(params.p, params.h, ctx.level, degree)?.into_iter().collect();
    let mut rhs = HopfExpr::zero(params);
    for part in partitions(k as u32) {
        let i: u32 = part.values().sum();
        let Some(c) = cs.get(&(i as usize)) else { continue };
        let count = multinomial_mod(&part, params.p);
        if count == 0 {
            continue;
        }
        for (mono, &lambda) in c.terms() {
            let mut label = mono.clone();
            label.resize(params.h as usize, 0);
            let atom = HopfExpr::atom(params, Atom::new(label, part.clone()));
            rhs = rhs.add(&atom.scale((lambda * count) as i64))?;
        }
    }
    Ok(RwIdentity {
        k,
        mode: Mode::Q,
        level: ctx.level,
        lhs: lhs_coefficient(params, k).q_reduce(ctx.level)?,
        rhs: rhs.q_reduce(ctx.level)?,
    })
}

fn integral_label(params: Params, c: &crate::bp::QPoly) -> Result<Label> {
    let mut out = BTreeMap::new();
    for (mono, q) in c.terms() {
        if !q.denom().is_one() {
            return Err(Error::Unsupported(format!("p-series coefficient {q} is not an integer")));
        }
        let v = q
            .numer()
            .to_i64()
            .ok_or_else(|| Error::Unsupported(format!("p-series coefficient {q} overflows")))?;
        let mut m = mono.clone();
        m.resize(params.h as usize, 0);
        out.insert(m, v);
    }
    Ok(Label(out))
}

/// `[c] o b(s)^{o i}` truncated at `s^k`.
fn label_series(params: Params, c: &Label, i: u32, k: usize) -> Result<GenSeries> {
    let mut coeffs = vec![HopfExpr::unit(params, 2)];
    for j in 1..=k {
        let mut acc = HopfExpr::zero(params);
        if j as u32 >= i {
            for part in partitions(j as u32) {
                if part.values().sum::<u32>() != i {
                    continue;
                }
                let count = multinomial_mod(&part, params.p);
                if count != 0 {
                    acc = acc.add(&label_circ(&params, c, &part)?.scale(count as i64))?;
                }
            }
        }
        coeffs.push(acc);
    }
    Ok(GenSeries { coeffs })
}

/// The whole `*`-product `*_i [c_i] o b(s)^{o i}` to `s^k`, for integral
/// coefficients `c_i`.
pub fn rw_rhs_series(params: Params, cs: &[Label], k: usize) -> Result<GenSeries> {
    let mut acc = GenSeries { coeffs: vec![HopfExpr::unit(params, 2)] };
    acc.coeffs.resize(k + 1, HopfExpr::zero(params));
    for (i, c) in cs.iter().enumerate().take(k + 1).skip(1) {
        if c.is_zero() {
            continue;
        }
        acc = acc.star(&label_series(params, c, i as u32, k)?)?;
    }
    Ok(acc)
}

fn rw_extract_full(ctx: &Context, k: usize, degree: usize) -> Result<RwIdentity> {
    let params = ctx.params;
    let qs = p_series_integral(params.p, params.h, degree.min(k))?;
    let cs = qs.iter().map(|c| integral_label(params, c)).collect::<Result<Vec<_>>>()?;
    let series = rw_rhs_series(params, &cs, k)?;
    Ok(RwIdentity {
        k,
        mode: Mode::Full,
        level: 0,
        lhs: lhs_coefficient(params, k),
        rhs: series.coeff(k).cloned().unwrap_or_else(|| HopfExpr::zero(params)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::p_series_mod_ir;

    fn ctx(p: u64, h: u32, n: u32, mode: Mode, level: u32) -> Context {
        Context::new(Params { p, h, n }, mode, level).unwrap()
    }

    /// Brute force: expand the full `*`-product over explicit ordered
    /// compositions with mod-`p` coefficient representatives, then pass to
    /// `Q`.
    fn oracle_q(c: &Context, k: usize) -> HopfExpr {
        let params = c.params;
        let table: BTreeMap<usize, _> =
            p_series_mod_ir(params.p, params.h, c.level, k).unwrap().into_iter().collect();
        let mut total = GenSeries { coeffs: vec![HopfExpr::unit(params, 2)] };
        total.coeffs.resize(k + 1, HopfExpr::zero(params));
        for i in 1..=k {
            let Some(poly) = table.get(&i) else { continue };
            let mut label = BTreeMap::new();
            for (m, &v) in poly.terms() {
                let mut m = m.clone();
                m.resize(params.h as usize, 0);
                label.insert(m, v as i64);
            }
            let label = Label(label);
            let mut coeffs = vec![HopfExpr::unit(params, 2)];
            for j in 1..=k {
                let mut acc = HopfExpr::zero(params);
                for comp in ordered_compositions(j as u32, i as u32) {
                    let mut bs = BMono::new();
                    for x in comp {
                        *bs.entry(x).or_insert(0) += 1;
                    }
                    acc = acc.add(&label_circ(&params, &label, &bs).unwrap()).unwrap();
                }
                coeffs.push(acc);
            }
            total = total.star(&GenSeries { coeffs }).unwrap();
        }
        total.coeff(k).unwrap().q_reduce(c.level).unwrap()
    }

    fn ordered_compositions(j: u32, parts: u32) -> Vec<Vec<u32>> {
        if parts == 0 {
            return if j == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = vec![];
        for first in 1..=j {
            for mut rest in ordered_compositions(j - first, parts - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn lucas_binomials() {
        assert_eq!(binom_mod(4, 2, 2), 0);
        assert_eq!(binom_mod(5, 1, 2), 1);
        assert_eq!(binom_mod(9, 3, 3), 0);
        assert_eq!(binom_mod(10, 3, 5), 0);
        assert_eq!(binom_mod(7, 3, 5), 0);
        assert_eq!(binom_mod(6, 1, 5), 1);
    }

    #[test]
    fn partitions_count() {
        let counts: Vec<usize> = (1..=10).map(|k| partitions(k).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
    }

    #[test]
    fn q_extraction_matches_brute_force() {
        for (p, h, n) in [(2, 1, 3), (2, 2, 4), (3, 1, 3)] {
            for level in 0..=h {
                let c = ctx(p, h, n, Mode::Q, level);
                for k in 1..=8 {
                    let id = rw_extract(&c, k, 8).unwrap();
                    assert_eq!(id.rhs, oracle_q(&c, k), "p={p} h={h} r={level} k={k}");
                    assert_eq!(id.lhs.is_zero(), k % (p as usize).pow(n) != 0);
                }
            }
        }
    }

    #[test]
    fn bottom_q_relation() {
        // [v_r] o b_1^{o p^r} = 0 in Q mod [I_r]
        for (p, h) in [(2u64, 2u32), (3, 1)] {
            for r in 1..=h {
                let c = ctx(p, h, h + 2, Mode::Q, r);
                let k = (p as usize).pow(r);
                let id = rw_extract(&c, k, c.default_degree()).unwrap();
                let mut v = vec![0; h as usize];
                v[r as usize - 1] = 1;
                let expect = HopfExpr::circ_monomial(c.params, v, &[(1, k as u32)]);
                assert_eq!(id.rhs, expect);
            }
        }
    }

    #[test]
    fn identities_are_homogeneous() {
        let c = ctx(2, 1, 3, Mode::Q, 0);
        for k in 1..=16 {
            let id = rw_extract(&c, k, 16).unwrap();
            let d = id.difference().unwrap().bidegree().unwrap();
            if let Some((space, hom)) = d {
                assert_eq!((space, hom), (2, 2 * k as i64));
            }
        }
        let lhs = rw_extract(&c, 8, 16).unwrap().lhs;
        assert_eq!(lhs, HopfExpr::b(c.params, 1).scale_vn(1).q_reduce(0).unwrap());
    }

    #[test]
    fn full_mode_bottom() {
        // s^p: [p] o b_p + [v_1] o b_1^{o p} = 0
        for (p, h, n) in [(2u64, 1u32, 3u32), (3, 1, 3), (2, 0, 2)] {
            let c = ctx(p, h, n, Mode::Full, 0);
            let id = rw_extract(&c, p as usize, c.default_degree()).unwrap();
            assert!(id.lhs.is_zero());
            let params = c.params;
            let pb = HopfExpr::symbol(params, Label::constant(h, p as i64))
                .circ(&HopfExpr::b(params, p as u32))
                .unwrap();
            let v1 = HopfExpr::symbol(params, Label::v(h, 1))
                .circ(&HopfExpr::b(params, 1).circ_pow(p as u32).unwrap())
                .unwrap();
            assert_eq!(id.rhs, pb.add(&v1).unwrap(), "p={p} h={h}");
        }
    }

    #[test]
    fn degree_and_context_errors() {
        let c = ctx(2, 1, 3, Mode::Q, 1);
        assert!(matches!(rw_extract(&c, 9, 8), Err(Error::DegreeTooSmall(_))));
        assert!(Context::new(Params { p: 2, h: 1, n: 2 }, Mode::Q, 0).is_err());
        assert!(Context::new(Params { p: 2, h: 1, n: 3 }, Mode::Q, 2).is_err());
    }
}
