//! Hopf-ring expressions over `K(n)_* = F_p[v_n^{+-1}]`.
//!
//! A term is `lambda v_n^e` times a `*`-monomial: a group-like symbol `[c]`
//! (`c` an integral polynomial in `v_1..v_h`) `*`-multiplied with a sorted
//! list of atoms `[m] o b_{i_1} o ... o b_{i_k}` (`m` a monomial, every
//! `i_j >= 1`). Everything is kept in this fused normal form:
//!
//! * `b_0 = [0]_2`, so `b_0 o y` is the augmentation of `y`;
//! * `[c] * [c'] = [c + c']` and `[c] o [c'] = [c c']`;
//! * `o` distributes over `*` through the coproduct, with
//!   `Delta b_i = sum_{j+k=i} b_j (x) b_k` and `[c]` group-like;
//! * `[c] o y` is linear in `c` when `y` is primitive, otherwise it is
//!   expanded through the `lambda`-fold coproduct of `y`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};

use crate::bp::{monomial_name, GradedPoly};
use crate::error::{Error, Result};

/// `(p, h, n)`: prime, `BP<h>` truncation level, Morava K-theory height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Params {
    pub p: u64,
    pub h: u32,
    pub n: u32,
}

impl Params {
    pub fn degree_of(&self, mono: &[u32]) -> i64 {
        GradedPoly::monomial_degree(self.p, mono) as i64
    }

    /// `|v_n|`.
    pub fn vn_degree(&self) -> i64 {
        2 * (self.p.pow(self.n) as i64 - 1)
    }

    fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.p as i128) as u64
    }
}

pub type Mono = Vec<u32>;

/// Exponents of the positive `b_i` in a `o`-monomial.
pub type BMono = BTreeMap<u32, u32>;

/// An integral polynomial `c`, used as the group-like symbol `[c]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Label(pub BTreeMap<Mono, i64>);

impl Label {
    pub fn zero() -> Self {
        Label::default()
    }

    pub fn constant(h: u32, k: i64) -> Self {
        Self::term(vec![0; h as usize], k)
    }

    pub fn term(mono: Mono, k: i64) -> Self {
        let mut m = BTreeMap::new();
        if k != 0 {
            m.insert(mono, k);
        }
        Label(m)
    }

    /// `v_i`, or zero when `i > h` (`v_{h+1} = 0` in `BP<h>`).
    pub fn v(h: u32, i: u32) -> Self {
        if i == 0 || i > h {
            return Label::zero();
        }
        let mut mono = vec![0; h as usize];
        mono[i as usize - 1] = 1;
        Self::term(mono, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Label) -> Label {
        let mut m = self.0.clone();
        for (k, v) in &other.0 {
            *m.entry(k.clone()).or_insert(0) += v;
        }
        m.retain(|_, v| *v != 0);
        Label(m)
    }

    pub fn mul(&self, other: &Label) -> Label {
        let mut m: BTreeMap<Mono, i64> = BTreeMap::new();
        for (a, x) in &self.0 {
            for (b, y) in &other.0 {
                let mono: Mono = a.iter().zip(b).map(|(s, t)| s + t).collect();
                *m.entry(mono).or_insert(0) += x * y;
            }
        }
        m.retain(|_, v| *v != 0);
        Label(m)
    }

    /// Internal degree, if homogeneous (zero counts as any degree).
    pub fn degree(&self, ctx: &Params) -> Option<i64> {
        let mut it = self.0.keys().map(|m| ctx.degree_of(m));
        let first = it.next().unwrap_or(0);
        it.all(|d| d == first).then_some(first)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(m, &k)| {
                let name = monomial_name(m);
                match (k, name.as_str()) {
                    (_, "1") => k.to_string(),
                    (1, _) => name,
                    (-1, _) => format!("-{name}"),
                    _ => format!("{k}{name}"),
                }
            })
            .collect();
        write!(f, "{}", parts.join("+").replace("+-", "-"))
    }
}

/// `[m] o b^E` with `m` a monomial and `E` nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub label: Mono,
    pub bs: BMono,
}

impl Atom {
    pub fn new(label: Mono, bs: BMono) -> Self {
        debug_assert!(!bs.is_empty() && !bs.contains_key(&0));
        Atom { label, bs }
    }

    /// Primitive iff some factor is `b_1`.
    pub fn is_primitive(&self) -> bool {
        self.bs.contains_key(&1)
    }

    pub fn circ_degree(&self) -> u32 {
        self.bs.values().sum()
    }

    pub fn space(&self, ctx: &Params) -> i64 {
        2 * self.circ_degree() as i64 - ctx.degree_of(&self.label)
    }

    pub fn homological(&self) -> i64 {
        self.bs.iter().map(|(&i, &e)| 2 * i as i64 * e as i64).sum()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![];
        if self.label.iter().any(|&e| e > 0) {
            parts.push(format!("[{}]", monomial_name(&self.label)));
        }
        for (&i, &e) in &self.bs {
            parts.push(if e == 1 { format!("b{i}") } else { format!("b{i}^o{e}") });
        }
        write!(f, "{}", parts.join("o"))
    }
}

/// `[c] * atom_1 * ... * atom_k` in a fixed space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StarMono {
    pub space: i64,
    pub bare: Label,
    pub atoms: Vec<Atom>,
}

impl StarMono {
    pub fn unit(space: i64) -> Self {
        StarMono { space, bare: Label::zero(), atoms: vec![] }
    }

    pub fn is_unit(&self) -> bool {
        self.bare.is_zero() && self.atoms.is_empty()
    }

    pub fn homological(&self) -> i64 {
        self.atoms.iter().map(Atom::homological).sum()
    }

    fn star(&self, other: &StarMono) -> Result<StarMono> {
        if self.space != other.space {
            return Err(Error::Bidegree(format!(
                "*-product of space {} and space {}",
                self.space, other.space
            )));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        atoms.sort();
        Ok(StarMono { space: self.space, bare: self.bare.add(&other.bare), atoms })
    }

    /// Number of factors besides the unit.
    fn factors(&self) -> Vec<Factor> {
        let mut f = vec![];
        if !self.bare.is_zero() {
            f.push(Factor::Bare(self.bare.clone()));
        }
        f.extend(self.atoms.iter().cloned().map(Factor::Atom));
        f
    }
}

impl fmt::Display for StarMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![];
        if !self.bare.is_zero() || self.atoms.is_empty() {
            parts.push(format!("[{}]", self.bare));
        }
        parts.extend(self.atoms.iter().map(|a| a.to_string()));
        write!(f, "{}", parts.join(" * "))
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Bare(Label),
    Atom(Atom),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    /// Power of `v_n` in the scalar.
    pub vn: i64,
    pub star: StarMono,
}

/// An `F_p[v_n^{+-1}]`-linear combination of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopfExpr {
    ctx: Params,
    terms: BTreeMap<Term, u64>,
}

impl HopfExpr {
    pub fn zero(ctx: Params) -> Self {
        HopfExpr { ctx, terms: BTreeMap::new() }
    }

    pub fn ctx(&self) -> Params {
        self.ctx
    }

    pub fn terms(&self) -> &BTreeMap<Term, u64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn from_star(ctx: Params, star: StarMono, coeff: i128) -> Self {
        let mut e = Self::zero(ctx);
        e.push(Term { vn: 0, star }, coeff);
        e
    }

    fn push(&mut self, t: Term, coeff: i128) {
        let c = self.ctx.reduce(coeff);
        if c == 0 {
            return;
        }
        match self.terms.entry(t) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = (*o.get() + c) % self.ctx.p;
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// `b_i` (`b_0` is the unit `[0]_2`).
    pub fn b(ctx: Params, i: u32) -> Self {
        if i == 0 {
            return Self::unit(ctx, 2);
        }
        Self::atom(ctx, Atom::new(vec![0; ctx.h as usize], BTreeMap::from([(i, 1)])))
    }

    pub fn atom(ctx: Params, a: Atom) -> Self {
        let space = a.space(&ctx);
        Self::from_star(ctx, StarMono { space, bare: Label::zero(), atoms: vec![a] }, 1)
    }

    /// `[m] o b^E` given as explicit exponents.
    pub fn circ_monomial(ctx: Params, label: Mono, bs: &[(u32, u32)]) -> Self {
        let bs: BMono = bs.iter().filter(|(_, e)| *e > 0).map(|&(i, e)| (i, e)).collect();
        if bs.contains_key(&0) {
            // b_0 o (positive) vanishes, b_0^{o k} alone is a unit
            return Self::zero(ctx);
        }
        if bs.is_empty() {
            return Self::symbol(ctx, Label::term(label, 1));
        }
        Self::atom(ctx, Atom::new(label, bs))
    }

    /// The *-unit `[0]` of the given space.
    pub fn unit(ctx: Params, space: i64) -> Self {
        Self::from_star(ctx, StarMono::unit(space), 1)
    }

    /// The group-like element `[c]`.
    pub fn symbol(ctx: Params, c: Label) -> Self {
        let space = -c.degree(&ctx).unwrap_or(0);
        Self::from_star(ctx, StarMono { space, bare: c, atoms: vec![] }, 1)
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut out = Self::zero(self.ctx);
        for (t, &c) in &self.terms {
            out.push(t.clone(), c as i128 * k as i128);
        }
        out
    }

    /// Multiplies by `v_n^e`.
    pub fn scale_vn(&self, e: i64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(t, &c)| (Term { vn: t.vn + e, star: t.star.clone() }, c))
            .collect();
        HopfExpr { ctx: self.ctx, terms }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }

    /// `(space, homological degree)` of every term, or an error if mixed.
    pub fn bidegree(&self) -> Result<Option<(i64, i64)>> {
        let mut out = None;
        for t in self.terms.keys() {
            let d = (t.star.space, t.star.homological() + t.vn * self.ctx.vn_degree());
            match out {
                None => out = Some(d),
                Some(o) if o != d => {
                    return Err(Error::Bidegree(format!("terms of bidegree {o:?} and {d:?}")))
                }
                _ => {}
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (t, &c) in &other.terms {
            out.push(t.clone(), c as i128);
        }
        out.bidegree()?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn star(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero(self.ctx);
        for (s, &a) in &self.terms {
            for (t, &b) in &other.terms {
                let star = s.star.star(&t.star)?;
                out.push(Term { vn: s.vn + t.vn, star }, a as i128 * b as i128);
            }
        }
        Ok(out)
    }

    pub fn star_pow(&self, k: u32) -> Result<Self> {
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.star(self)?;
        }
        Ok(acc)
    }

    pub fn circ(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero(self.ctx);
        for (s, &a) in &self.terms {
            for (t, &b) in &other.terms {
                let prod = circ_star(&self.ctx, &s.star, &t.star)?;
                let scalar = self.ctx.reduce(a as i128 * b as i128);
                for (u, &c) in &prod.terms {
                    out.push(
                        Term { vn: s.vn + t.vn + u.vn, star: u.star.clone() },
                        c as i128 * scalar as i128,
                    );
                }
            }
        }
        Ok(out)
    }

    pub fn circ_pow(&self, k: u32) -> Result<Self> {
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.circ(self)?;
        }
        Ok(acc)
    }

    /// `Delta(x)` as a list of `(left, right, coefficient)`.
    pub fn coproduct(&self) -> Vec<(Term, Term, u64)> {
        let mut acc: BTreeMap<(Term, Term), u64> = BTreeMap::new();
        for (t, &c) in &self.terms {
            for (parts, k) in split_star(&self.ctx, &t.star, 2) {
                let key = (
                    Term { vn: t.vn, star: parts[0].clone() },
                    Term { vn: 0, star: parts[1].clone() },
                );
                let slot = acc.entry(key).or_insert(0);
                *slot = (*slot + k * c) % self.ctx.p;
            }
        }
        acc.into_iter().filter(|(_, c)| *c != 0).map(|((a, b), c)| (a, b, c)).collect()
    }

    /// Augmentation: the coefficient sum over *-units and group-likes.
    pub fn augmentation(&self) -> u64 {
        self.terms
            .iter()
            .filter(|(t, _)| t.star.atoms.is_empty() && t.vn == 0)
            .fold(0, |acc, (_, &c)| (acc + c) % self.ctx.p)
    }

    /// Image in the indecomposables `Q` modulo `[I_r]`: terms with two or
    /// more atoms vanish, group-like factors of single-atom terms are
    /// dropped (`[c] * a = a` in `Q`), and atoms whose label involves one of
    /// `v_1, ..., v_{r-1}` lie in `[I_r]`.
    pub fn q_reduce(&self, level: u32) -> Result<Self> {
        let mut out = Self::zero(self.ctx);
        for (t, &c) in &self.terms {
            match t.star.atoms.len() {
                0 => {
                    return Err(Error::Unsupported(format!(
                        "group-like term {} has no image in Q",
                        t.star
                    )))
                }
                1 => {
                    let a = &t.star.atoms[0];
                    if a.label.iter().take(level.saturating_sub(1) as usize).any(|&e| e > 0) {
                        continue;
                    }
                    let star = StarMono { space: t.star.space, bare: Label::zero(), atoms: vec![a.clone()] };
                    out.push(Term { vn: t.vn, star }, c as i128);
                }
                _ => {}
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let mut items = vec![json!("+")];
        for (t, &c) in &self.terms {
            let mut term = vec![json!("*"), json!(["k", c, t.vn])];
            if !t.star.bare.is_zero() || t.star.atoms.is_empty() {
                term.push(json!(["sym", t.star.bare.to_string()]));
            }
            for a in &t.star.atoms {
                let mut o = vec![json!("o")];
                if a.label.iter().any(|&e| e > 0) {
                    o.push(json!(["sym", monomial_name(&a.label)]));
                }
                for (&i, &e) in &a.bs {
                    for _ in 0..e {
                        o.push(json!(["b", i]));
                    }
                }
                term.push(Value::Array(o));
            }
            items.push(Value::Array(term));
        }
        Value::Array(items)
    }
}

impl fmt::Display for HopfExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = self.ctx.n;
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(t, &c)| {
                let mut s = String::new();
                if c != 1 {
                    s.push_str(&format!("{c}."));
                }
                if t.vn != 0 {
                    s.push_str(&format!("v{n}^{}.", t.vn));
                }
                s.push_str(&t.star.to_string());
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

// ---------------------------------------------------------------------------
// coproduct splitting

/// Compositions of `i` into `l` ordered nonnegative parts.
fn compositions(i: u32, l: usize) -> Vec<Vec<u32>> {
    if l == 1 {
        return vec![vec![i]];
    }
    let mut out = vec![];
    for first in 0..=i {
        for mut rest in compositions(i - first, l - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `l`-fold coproduct of `b^E`: each result part is `None` for the unit
/// (only `b_0` factors landed there) or the positive exponents. Parts that
/// mix `b_0` with positive factors vanish.
pub(crate) fn split_bmono(bs: &BMono, l: usize, p: u64) -> BTreeMap<Vec<Option<BMono>>, u64> {
    type State = Vec<(BMono, bool)>;
    let mut states: BTreeMap<State, u64> = BTreeMap::new();
    states.insert(vec![(BMono::new(), false); l], 1);
    for (&i, &e) in bs {
        let comps = compositions(i, l);
        for _ in 0..e {
            let mut next: BTreeMap<State, u64> = BTreeMap::new();
            for (st, &c) in &states {
                'comp: for comp in &comps {
                    let mut s = st.clone();
                    for (part, &j) in s.iter_mut().zip(comp) {
                        if j == 0 {
                            part.1 = true;
                        } else {
                            *part.0.entry(j).or_insert(0) += 1;
                        }
                        if part.1 && !part.0.is_empty() {
                            continue 'comp;
                        }
                    }
                    let slot = next.entry(s).or_insert(0);
                    *slot = (*slot + c) % p;
                }
            }
            next.retain(|_, c| *c != 0);
            states = next;
        }
    }
    states
        .into_iter()
        .map(|(st, c)| {
            let parts = st.into_iter().map(|(b, _)| (!b.is_empty()).then_some(b)).collect();
            (parts, c)
        })
        .collect()
}

/// `l`-fold coproduct of a `*`-monomial.
fn split_star(ctx: &Params, s: &StarMono, l: usize) -> BTreeMap<Vec<StarMono>, u64> {
    let base = StarMono { space: s.space, bare: s.bare.clone(), atoms: vec![] };
    let mut states: BTreeMap<Vec<StarMono>, u64> = BTreeMap::from([(vec![base; l], 1)]);
    for a in &s.atoms {
        let pieces = split_bmono(&a.bs, l, ctx.p);
        let mut next: BTreeMap<Vec<StarMono>, u64> = BTreeMap::new();
        for (st, &c) in &states {
            for (parts, &k) in &pieces {
                let mut s2 = st.clone();
                for (slot, piece) in s2.iter_mut().zip(parts) {
                    if let Some(bs) = piece {
                        slot.atoms.push(Atom::new(a.label.clone(), bs.clone()));
                        slot.atoms.sort();
                    }
                }
                let e = next.entry(s2).or_insert(0);
                *e = (*e + c * k) % ctx.p;
            }
        }
        next.retain(|_, c| *c != 0);
        states = next;
    }
    states
}

// ---------------------------------------------------------------------------
// the o-product

fn circ_star(ctx: &Params, a: &StarMono, b: &StarMono) -> Result<HopfExpr> {
    let space = a.space + b.space;
    let fb = b.factors();
    if fb.is_empty() {
        // a o [0] = eta(epsilon(a))
        return Ok(if a.atoms.is_empty() {
            HopfExpr::unit(*ctx, space)
        } else {
            HopfExpr::zero(*ctx)
        });
    }
    if fb.len() == 1 {
        return circ_single_right(ctx, a, &fb[0], b.space);
    }
    let mut out = HopfExpr::zero(*ctx);
    for (parts, c) in split_star(ctx, a, fb.len()) {
        let mut acc = HopfExpr::unit(*ctx, space);
        for (part, f) in parts.iter().zip(&fb) {
            acc = acc.star(&circ_single_right(ctx, part, f, b.space)?)?;
            if acc.is_zero() {
                break;
            }
        }
        out = out.add(&acc.scale(c as i64))?;
    }
    Ok(out)
}

fn circ_single_right(ctx: &Params, a: &StarMono, f: &Factor, fspace: i64) -> Result<HopfExpr> {
    let space = a.space + fspace;
    let fa = a.factors();
    if fa.is_empty() {
        // [0] o f = eta(epsilon(f))
        return Ok(match f {
            Factor::Bare(_) => HopfExpr::unit(*ctx, space),
            Factor::Atom(_) => HopfExpr::zero(*ctx),
        });
    }
    if fa.len() == 1 {
        return circ_factors(ctx, &fa[0], f);
    }
    let pieces: Vec<(Vec<Option<Factor>>, u64)> = match f {
        Factor::Bare(c) => vec![(vec![Some(Factor::Bare(c.clone())); fa.len()], 1)],
        Factor::Atom(at) => split_bmono(&at.bs, fa.len(), ctx.p)
            .into_iter()
            .map(|(parts, k)| {
                let ps = parts
                    .into_iter()
                    .map(|b| b.map(|bs| Factor::Atom(Atom::new(at.label.clone(), bs))))
                    .collect();
                (ps, k)
            })
            .collect(),
    };
    let mut out = HopfExpr::zero(*ctx);
    for (parts, k) in pieces {
        let mut acc = HopfExpr::unit(*ctx, space);
        for (g, piece) in fa.iter().zip(&parts) {
            let term = match piece {
                Some(fp) => circ_factors(ctx, g, fp)?,
                // g o [0] is the augmentation of g
                None => match g {
                    Factor::Bare(_) => HopfExpr::unit(*ctx, space),
                    Factor::Atom(_) => HopfExpr::zero(*ctx),
                },
            };
            acc = acc.star(&term)?;
            if acc.is_zero() {
                break;
            }
        }
        out = out.add(&acc.scale(k as i64))?;
    }
    Ok(out)
}

fn circ_factors(ctx: &Params, x: &Factor, y: &Factor) -> Result<HopfExpr> {
    match (x, y) {
        (Factor::Bare(a), Factor::Bare(b)) => Ok(HopfExpr::symbol(*ctx, a.mul(b))),
        (Factor::Bare(c), Factor::Atom(at)) | (Factor::Atom(at), Factor::Bare(c)) => {
            let label = c.mul(&Label::term(at.label.clone(), 1));
            label_circ(ctx, &label, &at.bs)
        }
        (Factor::Atom(s), Factor::Atom(t)) => {
            let label: Mono = s.label.iter().zip(&t.label).map(|(x, y)| x + y).collect();
            let mut bs = s.bs.clone();
            for (&i, &e) in &t.bs {
                *bs.entry(i).or_insert(0) += e;
            }
            Ok(HopfExpr::atom(*ctx, Atom::new(label, bs)))
        }
    }
}

/// `[c] o b^E` for an integral polynomial `c` and positive `E`.
pub fn label_circ(ctx: &Params, c: &Label, bs: &BMono) -> Result<HopfExpr> {
    let mut out = HopfExpr::zero(*ctx);
    if c.is_zero() {
        return Ok(out);
    }
    if bs.contains_key(&1) {
        for (m, &k) in &c.0 {
            let e = HopfExpr::atom(*ctx, Atom::new(m.clone(), bs.clone())).scale(k);
            out = out.add(&e)?;
        }
        return Ok(out);
    }
    let mut labels = vec![];
    for (m, &k) in &c.0 {
        if k < 0 {
            return Err(Error::Unsupported(format!(
                "[{c}] o y with y not primitive needs the antipode"
            )));
        }
        labels.extend(std::iter::repeat_n(m.clone(), k as usize));
    }
    if labels.len() == 1 {
        return Ok(HopfExpr::atom(*ctx, Atom::new(labels.remove(0), bs.clone())));
    }
    let space = 2 * bs.values().sum::<u32>() as i64 - c.degree(ctx).unwrap_or(0);
    for (parts, k) in split_bmono(bs, labels.len(), ctx.p) {
        let mut star = StarMono::unit(space);
        for (m, part) in labels.iter().zip(parts) {
            if let Some(b) = part {
                star.atoms.push(Atom::new(m.clone(), b));
            }
        }
        star.atoms.sort();
        out.push(Term { vn: 0, star }, k as i128);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P2: Params = Params { p: 2, h: 1, n: 3 };
    const P3: Params = Params { p: 3, h: 1, n: 3 };

    fn b(ctx: Params, i: u32) -> HopfExpr {
        HopfExpr::b(ctx, i)
    }

    #[test]
    fn symbols_fuse() {
        let vh = HopfExpr::symbol(P2, Label::v(1, 1));
        let sq = vh.circ(&vh).unwrap();
        assert_eq!(sq, HopfExpr::symbol(P2, Label::term(vec![2], 1)));
        let two = HopfExpr::symbol(P2, Label::constant(1, 1)).star(&HopfExpr::symbol(P2, Label::constant(1, 1)));
        assert_eq!(two.unwrap(), HopfExpr::symbol(P2, Label::constant(1, 2)));
    }

    #[test]
    fn unit_laws() {
        let x = b(P3, 2).star(&b(P3, 1)).unwrap();
        assert_eq!(x.star(&HopfExpr::unit(P3, 2)).unwrap(), x);
        // [1] is the o-unit
        let one = HopfExpr::symbol(P3, Label::constant(1, 1));
        assert_eq!(one.circ(&x).unwrap(), x);
        assert_eq!(x.circ(&one).unwrap(), x);
        // y o [0] is the augmentation
        assert!(x.circ(&HopfExpr::unit(P3, 0)).unwrap().is_zero());
        assert!(b(P3, 0).circ(&b(P3, 2)).unwrap().is_zero());
    }

    #[test]
    fn b1_is_primitive_and_kills_decomposables() {
        let co = b(P3, 1).coproduct();
        assert_eq!(co.len(), 2);
        let x = b(P3, 2).star(&b(P3, 3)).unwrap();
        assert!(b(P3, 1).circ(&x).unwrap().is_zero());
    }

    #[test]
    fn p_fold_sum_of_bp() {
        // [p] o b_p = b_1^{*p}: every other split has multiplicity divisible by p
        for ctx in [P2, P3] {
            let p = ctx.p as u32;
            let lhs = HopfExpr::symbol(ctx, Label::constant(1, p as i64)).circ(&b(ctx, p)).unwrap();
            assert_eq!(lhs, b(ctx, 1).star_pow(p).unwrap());
            // and [p] o b_j = 0 for 0 < j < p
            for j in 1..p {
                let e = HopfExpr::symbol(ctx, Label::constant(1, p as i64)).circ(&b(ctx, j)).unwrap();
                assert!(e.is_zero());
            }
        }
    }

    #[test]
    fn two_fold_of_b2() {
        // [2] o b_2 = b_1 * b_1 + 2 b_2 (the b_2 * [0] terms) = b_1^{*2} mod 2
        let e = HopfExpr::symbol(P3, Label::constant(1, 2)).circ(&b(P3, 2)).unwrap();
        let expect = b(P3, 1).star(&b(P3, 1)).unwrap().add(&b(P3, 2).scale(2)).unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn bidegrees_are_enforced() {
        let x = b(P2, 1);
        let y = b(P2, 1).circ(&b(P2, 1)).unwrap();
        assert!(matches!(x.star(&y), Err(Error::Bidegree(_))));
        assert!(matches!(x.add(&b(P2, 2)), Err(Error::Bidegree(_))));
        let v = HopfExpr::symbol(P2, Label::v(1, 1));
        assert_eq!(v.circ(&b(P2, 1)).unwrap().bidegree().unwrap(), Some((0, 2)));
    }

    #[test]
    fn q_reduction() {
        let x = b(P3, 2).star(&b(P3, 1)).unwrap().add(&b(P3, 3)).unwrap();
        assert_eq!(x.q_reduce(0).unwrap(), b(P3, 3));
        let v1b = HopfExpr::symbol(P3, Label::v(1, 1)).circ(&b(P3, 1).circ_pow(3).unwrap()).unwrap();
        assert_eq!(v1b.q_reduce(1).unwrap(), v1b);
        assert!(v1b.q_reduce(2).unwrap().is_zero());
    }

    #[test]
    fn json_shape() {
        let e = HopfExpr::symbol(P2, Label::v(1, 1)).circ(&b(P2, 1).circ_pow(2).unwrap()).unwrap();
        assert_eq!(e.to_json().to_string(), r#"["+",["*",["k",1,0],["o",["sym","v1"],["b",1],["b",1]]]]"#);
    }
}
