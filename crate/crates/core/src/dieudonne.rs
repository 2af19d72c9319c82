//! Dieudonne modules of one-dimensional formal groups as matrix data.
//!
//! A module of rank `h` over `W = W(F_{p^d})` is stored as two `h x h`
//! matrices in column convention (column `j` is the image of basis vector
//! `j`). `F` is `phi`-semilinear and `V` is `phi^{-1}`-semilinear:
//!
//! ```text
//! F(v) = Fmat * phi(v)        V(v) = Vmat * phi^{-1}(v)
//! ```
//!
//! so `FV = p` reads `Fmat * phi(Vmat) = p I` and `VF = p` reads
//! `Vmat * phi^{-1}(Fmat) = p I`. All twisting goes through
//! [`DieudonneModule::apply`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{Ring, RingConfig, RingSpec, WittElement};
use crate::residue::Fq;

/// Row-major matrix of Witt vectors.
pub type Matrix = Vec<Vec<WittElement>>;

pub mod matrix {
    use super::*;

    pub fn identity(ring: &RingConfig, n: usize) -> Matrix {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect())
            .collect()
    }

    pub fn scalar(ring: &RingConfig, n: usize, c: &WittElement) -> Matrix {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { c.clone() } else { ring.zero() }).collect())
            .collect()
    }

    pub fn mul(ring: &RingConfig, a: &Matrix, b: &Matrix) -> Matrix {
        let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        (0..k).fold(ring.zero(), |acc, t| {
                            ring.add(&acc, &ring.mul(&a[i][t], &b[t][j]))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn map(a: &Matrix, f: impl Fn(&WittElement) -> WittElement) -> Matrix {
        a.iter().map(|row| row.iter().map(&f).collect()).collect()
    }

    /// Entrywise `phi^k`.
    pub fn twist(ring: &RingConfig, a: &Matrix, k: i64) -> Matrix {
        map(a, |x| ring.frobenius_pow(x, k))
    }

    pub fn equal(ring: &RingConfig, a: &Matrix, b: &Matrix) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(ra, rb)| {
                ra.len() == rb.len() && ra.iter().zip(rb).all(|(x, y)| ring.equal(x, y))
            })
    }

    pub fn is_zero_mod_p(ring: &RingConfig, a: &Matrix) -> bool {
        a.iter().flatten().all(|x| !ring.is_unit(x) && ring.reduce(x).coords.iter().all(|&c| c == 0))
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det(ring: &RingConfig, a: &Matrix) -> WittElement {
        let n = a.len();
        match n {
            0 => ring.one(),
            1 => a[0][0].clone(),
            2 => ring.sub(&ring.mul(&a[0][0], &a[1][1]), &ring.mul(&a[0][1], &a[1][0])),
            _ => {
                let mut acc = ring.zero();
                for j in 0..n {
                    if ring.is_zero(&a[0][j]) {
                        continue;
                    }
                    let minor: Matrix = a[1..]
                        .iter()
                        .map(|row| {
                            row.iter()
                                .enumerate()
                                .filter(|&(c, _)| c != j)
                                .map(|(_, x)| x.clone())
                                .collect()
                        })
                        .collect();
                    let term = ring.mul(&a[0][j], &det(ring, &minor));
                    acc = if j % 2 == 0 { ring.add(&acc, &term) } else { ring.sub(&acc, &term) };
                }
                acc
            }
        }
    }

    /// Inverse over `W/p^N` by Gauss-Jordan elimination with unit pivots.
    pub fn inverse(ring: &RingConfig, a: &Matrix) -> Result<Matrix> {
        let n = a.len();
        let mut left = a.clone();
        let mut right = identity(ring, n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| ring.is_unit(&left[r][col]))
                .ok_or(Error::NotUnit)?;
            left.swap(col, pivot);
            right.swap(col, pivot);
            let inv = ring.inv(&left[col][col])?;
            for j in 0..n {
                left[col][j] = ring.mul(&inv, &left[col][j]);
                right[col][j] = ring.mul(&inv, &right[col][j]);
            }
            for r in 0..n {
                if r == col || ring.is_zero(&left[r][col]) {
                    continue;
                }
                let factor = left[r][col].clone();
                for j in 0..n {
                    left[r][j] = ring.sub(&left[r][j], &ring.mul(&factor, &left[col][j]));
                    right[r][j] = ring.sub(&right[r][j], &ring.mul(&factor, &right[col][j]));
                }
            }
        }
        Ok(right)
    }

    /// Rank of the reduction mod p over the residue field.
    pub fn rank_mod_p(ring: &RingConfig, a: &Matrix) -> usize {
        let k = ring.residue_field();
        let mut rows: Vec<Vec<Fq>> = a
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| k.from_residue(&ring.reduce(x)).expect("canonical residue"))
                    .collect()
            })
            .collect();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut rank = 0;
        for col in 0..ncols {
            let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(rank, pivot);
            let inv = k.inv(rows[rank][col]).expect("nonzero pivot");
            for r in 0..rows.len() {
                if r != rank && !rows[r][col].is_zero() {
                    let f = k.mul(rows[r][col], inv);
                    for j in 0..ncols {
                        let t = k.mul(f, rows[rank][j]);
                        rows[r][j] = k.sub(rows[r][j], t);
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Sorted `m`-element subsets of `0..n` in lexicographic order.
    pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
        fn go(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == m {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                go(i + 1, n, m, cur, out);
                cur.pop();
            }
        }
        let mut out = vec![];
        go(0, n, m, &mut vec![], &mut out);
        out
    }

    /// The `m`-th compound matrix: entry `(I, J)` is the minor on rows `I`,
    /// columns `J`.
    pub fn compound(ring: &RingConfig, a: &Matrix, m: usize) -> Matrix {
        let subs = subsets(a.len(), m);
        subs.iter()
            .map(|rows| {
                subs.iter()
                    .map(|cols| {
                        let sub: Matrix = rows
                            .iter()
                            .map(|&r| cols.iter().map(|&c| a[r][c].clone()).collect())
                            .collect();
                        det(ring, &sub)
                    })
                    .collect()
            })
            .collect()
    }
}

/// A free Dieudonne module with semilinear `F` and `V`.
#[derive(Debug, Clone)]
pub struct DieudonneModule {
    ring: Ring,
    f: Matrix,
    v: Matrix,
}

/// Wire form: `{"ring": {...}, "rank": h, "F": [[...]], "V": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleData {
    pub ring: RingSpec,
    pub rank: usize,
    #[serde(rename = "F")]
    pub f: Matrix,
    #[serde(rename = "V")]
    pub v: Matrix,
}

impl DieudonneModule {
    pub fn new(ring: Ring, f: Matrix, v: Matrix) -> Result<Self> {
        let h = f.len();
        if h == 0 {
            return Err(Error::Shape("rank must be >= 1".into()));
        }
        for (name, m) in [("F", &f), ("V", &v)] {
            if m.len() != h || m.iter().any(|row| row.len() != h) {
                return Err(Error::Shape(format!("{name} must be {h}x{h}")));
            }
            for x in m.iter().flatten() {
                ring.check(x)?;
            }
        }
        Ok(DieudonneModule { ring, f, v })
    }

    pub fn from_data(data: ModuleData, ring: Ring) -> Result<Self> {
        if ring.spec() != data.ring {
            return Err(Error::RingMismatch);
        }
        if data.f.len() != data.rank {
            return Err(Error::Shape(format!(
                "declared rank {} but F has {} rows",
                data.rank,
                data.f.len()
            )));
        }
        Self::new(ring, data.f, data.v)
    }

    pub fn to_data(&self) -> ModuleData {
        ModuleData {
            ring: self.ring.spec(),
            rank: self.rank(),
            f: self.f.clone(),
            v: self.v.clone(),
        }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.f.len()
    }

    pub fn f_matrix(&self) -> &Matrix {
        &self.f
    }

    pub fn v_matrix(&self) -> &Matrix {
        &self.v
    }

    /// Smallest effective precision among the structure constants.
    pub fn precision(&self) -> u32 {
        self.f
            .iter()
            .chain(&self.v)
            .flatten()
            .map(|x| self.ring.precision_of(x))
            .min()
            .unwrap_or(self.ring.precision())
    }

    /// Applies `F` (`Op::F`) or `V` (`Op::V`) to a coordinate vector.
    pub fn apply(&self, op: Op, x: &[WittElement]) -> Vec<WittElement> {
        let (mat, twist) = match op {
            Op::F => (&self.f, 1),
            Op::V => (&self.v, -1),
        };
        let twisted: Matrix = x.iter().map(|c| vec![self.ring.frobenius_pow(c, twist)]).collect();
        matrix::mul(&self.ring, mat, &twisted).into_iter().map(|mut r| r.remove(0)).collect()
    }

    /// The module in the basis given by the columns of `basis`, which must
    /// be invertible: `F' = P^{-1} F phi(P)`, `V' = P^{-1} V phi^{-1}(P)`.
    pub fn change_basis(&self, basis: &Matrix) -> Result<Self> {
        let r = &self.ring;
        if basis.len() != self.rank() {
            return Err(Error::Shape("basis change has wrong size".into()));
        }
        let inv = matrix::inverse(r, basis)?;
        let f = matrix::mul(r, &matrix::mul(r, &inv, &self.f), &matrix::twist(r, basis, 1));
        let v = matrix::mul(r, &matrix::mul(r, &inv, &self.v), &matrix::twist(r, basis, -1));
        Ok(DieudonneModule { ring: self.ring.clone(), f, v })
    }

    /// Pretty matrix dump used by the CLI table format.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (name, m) in [("F", &self.f), ("V", &self.v)] {
            let _ = writeln!(s, "{name} =");
            for row in m {
                let cells: Vec<String> = row.iter().map(|x| render_element(&self.ring, x)).collect();
                let _ = writeln!(s, "  [{}]", cells.join(", "));
            }
        }
        s
    }
}

pub(crate) fn render_element(ring: &RingConfig, x: &WittElement) -> String {
    let prec = ring.precision_of(x);
    if ring.degree() == 1 {
        format!("{}", ring.signed(x.coords[0], prec))
    } else {
        let parts: Vec<String> = x.coords.iter().map(|c| c.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    F,
    V,
}

/// The multiplicative group's module `F = 1`, `V = p`.
pub fn gm_module(ring: &Ring) -> DieudonneModule {
    twisted_gm_module(ring, &ring.one()).expect("1 is a unit")
}

/// Rank one module with `Fu = a^{-1} u`, `Vu = a p u` (for `d = 1`; in
/// general `V = phi^{-1}(p a)` so that `FV = p`).
pub fn twisted_gm_module(ring: &Ring, a: &WittElement) -> Result<DieudonneModule> {
    let a_inv = ring.inv(a)?;
    let v = ring.frobenius_inv(&ring.scale(ring.p() as i64, a));
    DieudonneModule::new(ring.clone(), vec![vec![a_inv]], vec![vec![v]])
}

/// Height-`h` Honda module with a unit twist `c`:
/// `F e_1 = c e_h`, `F e_{i+1} = p e_i`, `V e_i = e_{i+1}`,
/// `V e_h = phi^{-1}(p c^{-1}) e_1`. With `c = 1` this is the standard
/// Honda module; `h = 1` gives the multiplicative group.
pub fn twisted_honda_module(ring: &Ring, h: usize, c: &WittElement) -> Result<DieudonneModule> {
    if h == 0 {
        return Err(Error::OutOfRange("height must be >= 1".into()));
    }
    let p = ring.from_int(ring.p() as i64);
    let c_inv = ring.inv(c)?;
    let mut f = vec![vec![ring.zero(); h]; h];
    let mut v = vec![vec![ring.zero(); h]; h];
    f[h - 1][0] = c.clone();
    for i in 0..h - 1 {
        f[i][i + 1] = p.clone();
        v[i + 1][i] = ring.one();
    }
    v[0][h - 1] = ring.frobenius_inv(&ring.mul(&p, &c_inv));
    DieudonneModule::new(ring.clone(), f, v)
}

pub fn honda_module(ring: &Ring, h: usize) -> Result<DieudonneModule> {
    twisted_honda_module(ring, h, &ring.one())
}

/// The rank-two module `N_a`: `F w1 = a^{-1} w2`, `F w2 = p w1`,
/// `V w1 = w2`, `V w2 = a p w1`.
pub fn make_na(ring: &Ring, a: &WittElement) -> Result<DieudonneModule> {
    if ring.degree() != 1 {
        return Err(Error::OutOfRange("N_a is defined over W(F_p), d = 1".into()));
    }
    let a_inv = ring.inv(a)?;
    let p = ring.from_int(ring.p() as i64);
    let f = vec![vec![ring.zero(), p.clone()], vec![a_inv, ring.zero()]];
    let v = vec![vec![ring.zero(), ring.mul(a, &p)], vec![ring.one(), ring.zero()]];
    DieudonneModule::new(ring.clone(), f, v)
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rank: usize,
    pub precision: u32,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Only the failures, for error messages.
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

pub const CHECK_FV: &str = "FV = p";
pub const CHECK_VF: &str = "VF = p";
pub const CHECK_DIM: &str = "dim M/VM = 1";
pub const CHECK_COMPLETE: &str = "V nilpotent mod p";

fn dump(ring: &RingConfig, m: &Matrix) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|x| render_element(ring, x)).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Checks the Dieudonne relations, the tangent dimension and V-completeness.
pub fn validate(m: &DieudonneModule) -> ValidationReport {
    let r = &m.ring;
    let h = m.rank();
    let p_id = matrix::scalar(r, h, &r.from_int(r.p() as i64));
    let mut checks = vec![];

    let fv = matrix::mul(r, &m.f, &matrix::twist(r, &m.v, 1));
    let ok = matrix::equal(r, &fv, &p_id);
    checks.push(Check {
        name: CHECK_FV.into(),
        passed: ok,
        detail: if ok { "F phi(V) = pI".into() } else { format!("F phi(V) = {}", dump(r, &fv)) },
    });

    let vf = matrix::mul(r, &m.v, &matrix::twist(r, &m.f, -1));
    let ok = matrix::equal(r, &vf, &p_id);
    checks.push(Check {
        name: CHECK_VF.into(),
        passed: ok,
        detail: if ok {
            "V phi^-1(F) = pI".into()
        } else {
            format!("V phi^-1(F) = {}", dump(r, &vf))
        },
    });

    let rank_v = matrix::rank_mod_p(r, &m.v);
    checks.push(Check {
        name: CHECK_DIM.into(),
        passed: rank_v + 1 == h,
        detail: format!("rank(V mod p) = {rank_v}, dim M/VM = {}", h - rank_v),
    });

    // V^h = V phi^-1(V) ... phi^-(h-1)(V) composed with phi^-h
    let mut power = m.v.clone();
    for k in 1..h {
        power = matrix::mul(r, &power, &matrix::twist(r, &m.v, -(k as i64)));
    }
    let ok = matrix::is_zero_mod_p(r, &power);
    checks.push(Check {
        name: CHECK_COMPLETE.into(),
        passed: ok,
        detail: if ok {
            format!("V^{h} = 0 mod p")
        } else {
            format!("V^{h} mod p is nonzero: {}", dump(r, &power))
        },
    });

    ValidationReport { rank: h, precision: m.precision(), checks }
}

// ---------------------------------------------------------------------------
// exterior powers

/// `Lambda^m M` on the basis of sorted wedges `e_I`, `I` in lexicographic
/// order. `V` is the compound matrix of `V`; `F` is the compound matrix of
/// `F` divided by `p^{m-1}`.
pub fn exterior_power(m: &DieudonneModule, k: usize) -> Result<DieudonneModule> {
    let r = &m.ring;
    let h = m.rank();
    if k == 0 || k > h {
        return Err(Error::OutOfRange(format!("exterior power {k} of a rank {h} module")));
    }
    let loss = (k - 1) as u32;
    if m.precision() <= loss {
        return Err(Error::PrecisionExhausted(format!(
            "Lambda^{k} needs more than {loss} digits, module has {}",
            m.precision()
        )));
    }
    let big_f = matrix::compound(r, &m.f, k);
    let mut f = Vec::with_capacity(big_f.len());
    for (i, row) in big_f.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, x) in row.iter().enumerate() {
            let q = r.div_p_pow(x, loss).map_err(|e| match e {
                Error::NotDivisible => Error::ExteriorDivisibility(format!(
                    "entry ({i},{j}) = {} of Lambda^{k}(F) is not divisible by p^{loss}",
                    render_element(r, x)
                )),
                other => other,
            })?;
            out.push(q);
        }
        f.push(out);
    }
    let v = matrix::compound(r, &m.v, k);
    Ok(DieudonneModule { ring: r.clone(), f, v })
}

// ---------------------------------------------------------------------------
// rank one classification

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rank1Invariant {
    /// `F u = alpha u` on the stored generator.
    pub alpha: WittElement,
    pub is_unit: bool,
    pub precision: u32,
}

pub fn rank1_invariant(m: &DieudonneModule) -> Result<Rank1Invariant> {
    if m.rank() != 1 {
        return Err(Error::Shape(format!("rank1_invariant needs rank 1, got {}", m.rank())));
    }
    let alpha = m.f[0][0].clone();
    Ok(Rank1Invariant {
        is_unit: m.ring.is_unit(&alpha),
        precision: m.precision(),
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicativeVerdict {
    pub multiplicative: bool,
    pub reason: String,
    /// Unit `lambda` with `phi(lambda) alpha = lambda`, so that `F` fixes the
    /// generator `lambda u`.
    pub witness: Option<WittElement>,
    pub precision: u32,
    /// Set when `d > 1`: the verdict rests on the norm criterion at working
    /// precision.
    pub experimental: bool,
}

/// Is `M` the Dieudonne module of the multiplicative group?
///
/// For rank one this asks whether `F` fixes some generator, i.e. whether
/// `alpha = lambda / phi(lambda)` is solvable in units. Over `d = 1` that
/// means `alpha = 1`; in general it is equivalent to `norm(alpha) = 1`, and
/// the witness is produced by the additive Hilbert 90 formula.
pub fn is_multiplicative(m: &DieudonneModule) -> MultiplicativeVerdict {
    let r = &m.ring;
    let precision = m.precision();
    let experimental = r.degree() > 1;
    if m.rank() != 1 {
        return MultiplicativeVerdict {
            multiplicative: false,
            reason: "rank".into(),
            witness: None,
            precision,
            experimental,
        };
    }
    let alpha = r.with_precision(&m.f[0][0], precision);
    if !r.is_unit(&alpha) {
        return MultiplicativeVerdict {
            multiplicative: false,
            reason: "F is not bijective (alpha not a unit)".into(),
            witness: None,
            precision,
            experimental,
        };
    }
    let norm = r.norm(&alpha);
    if !r.equal(&norm, &r.one()) {
        let shown = render_element(r, &norm);
        return MultiplicativeVerdict {
            multiplicative: false,
            reason: if r.degree() == 1 {
                format!("alpha = {shown} != 1 mod p^{precision}")
            } else {
                format!("norm(alpha) = {shown} != 1 mod p^{precision}")
            },
            witness: None,
            precision,
            experimental,
        };
    }
    let witness = hilbert90(r, &alpha);
    MultiplicativeVerdict {
        multiplicative: witness.is_some(),
        reason: match witness {
            Some(_) => "alpha class is trivial".into(),
            None => "no unit solution of phi(lambda) alpha = lambda found".into(),
        },
        witness,
        precision,
        experimental,
    }
}

/// Solves `lambda = alpha phi(lambda)` with `lambda` a unit, assuming
/// `norm(alpha) = 1`, via `lambda = sum_i alpha phi(alpha)..phi^{i-1}(alpha) phi^i(theta)`.
fn hilbert90(r: &RingConfig, alpha: &WittElement) -> Option<WittElement> {
    let prec = r.precision_of(alpha);
    let k = r.residue_field();
    for x in k.elements().skip(1) {
        let theta = r.with_precision(&r.teichmuller(&k.to_residue(x)).ok()?, prec);
        let mut lambda = r.with_precision(&r.zero(), prec);
        let mut coeff = r.with_precision(&r.one(), prec);
        let mut conj_alpha = alpha.clone();
        let mut conj_theta = theta;
        for _ in 0..r.degree() {
            lambda = r.add(&lambda, &r.mul(&coeff, &conj_theta));
            coeff = r.mul(&coeff, &conj_alpha);
            conj_alpha = r.frobenius(&conj_alpha);
            conj_theta = r.frobenius(&conj_theta);
        }
        if r.is_unit(&lambda) {
            let check = r.mul(alpha, &r.frobenius(&lambda));
            if r.equal(&check, &lambda) {
                return Some(lambda);
            }
        }
    }
    None
}

/// Composes `Lambda^h` with [`is_multiplicative`].
pub fn top_exterior_is_gm(
    m: &DieudonneModule,
) -> Result<(MultiplicativeVerdict, Rank1Invariant, DieudonneModule)> {
    let top = exterior_power(m, m.rank())?;
    let inv = rank1_invariant(&top)?;
    Ok((is_multiplicative(&top), inv, top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::make_ring;

    fn ints(ring: &RingConfig, m: &Matrix) -> Vec<Vec<i128>> {
        m.iter()
            .map(|row| row.iter().map(|x| ring.signed(x.coords[0], ring.precision_of(x))).collect())
            .collect()
    }

    #[test]
    fn gm_validates() {
        for p in [2, 3, 5] {
            let r = make_ring(p, 1, 8).unwrap();
            let rep = validate(&gm_module(&r));
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn honda_modules_validate() {
        for (p, d) in [(2, 1), (3, 1), (2, 2), (5, 1)] {
            let r = make_ring(p, d, 6).unwrap();
            for h in 1..=4 {
                let rep = validate(&honda_module(&r, h).unwrap());
                assert!(rep.passed(), "p={p} d={d} h={h}: {rep:?}");
            }
        }
    }

    #[test]
    fn f_equals_v_equals_one_fails() {
        let r = make_ring(3, 1, 5).unwrap();
        let m = DieudonneModule::new(r.clone(), vec![vec![r.one()]], vec![vec![r.one()]]).unwrap();
        let rep = validate(&m);
        assert!(!rep.check(CHECK_FV).unwrap().passed);
        assert!(rep.check(CHECK_FV).unwrap().detail.contains("[[1]]"));
        assert!(!rep.check(CHECK_COMPLETE).unwrap().passed);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let r = make_ring(3, 1, 5).unwrap();
        let err = DieudonneModule::new(r.clone(), vec![vec![r.one()]], vec![]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn na_matrices_for_a_equal_one() {
        let r = make_ring(2, 1, 8).unwrap();
        let na = make_na(&r, &r.one()).unwrap();
        assert_eq!(ints(&r, na.f_matrix()), vec![vec![0, 2], vec![1, 0]]);
        assert_eq!(ints(&r, na.v_matrix()), vec![vec![0, 2], vec![1, 0]]);
        assert!(validate(&na).passed());
        assert_eq!(make_na(&r, &r.from_int(2)).unwrap_err(), Error::NotUnit);
    }

    #[test]
    fn semilinear_apply_matches_definition() {
        let r = make_ring(2, 2, 6).unwrap();
        let m = honda_module(&r, 2).unwrap();
        let w = r.basis(1);
        // F(w e_1) = phi(w) e_2
        let out = m.apply(Op::F, &[w.clone(), r.zero()]);
        assert_eq!(out[1], r.frobenius(&w));
        let back = m.apply(Op::V, &out);
        assert_eq!(back[0], r.scale(2, &w));
    }

    #[test]
    fn exterior_square_of_na() {
        for p in [2, 3, 5] {
            let r = make_ring(p, 1, 8).unwrap();
            let a = r.from_int(7);
            let top = exterior_power(&make_na(&r, &a).unwrap(), 2).unwrap();
            let a_inv = r.inv(&a).unwrap();
            assert!(r.equal(&top.f_matrix()[0][0], &r.neg(&a_inv)));
            assert!(r.equal(&top.v_matrix()[0][0], &r.neg(&r.scale(p as i64, &a))));
            assert_eq!(top.precision(), 7);
        }
    }

    #[test]
    fn first_exterior_power_is_identity() {
        let r = make_ring(3, 2, 5).unwrap();
        let m = honda_module(&r, 3).unwrap();
        let l1 = exterior_power(&m, 1).unwrap();
        assert_eq!(l1.f_matrix(), m.f_matrix());
        assert_eq!(l1.v_matrix(), m.v_matrix());
    }

    #[test]
    fn top_power_of_honda_two() {
        for p in [2, 3, 5] {
            let r = make_ring(p, 1, 8).unwrap();
            let top = exterior_power(&honda_module(&r, 2).unwrap(), 2).unwrap();
            assert_eq!(ints(&r, top.f_matrix()), vec![vec![-1]]);
            assert_eq!(ints(&r, top.v_matrix()), vec![vec![-(p as i128)]]);
            let inv = rank1_invariant(&top).unwrap();
            assert!(r.equal(&inv.alpha, &r.from_int(-1)));
            // -1 != 1 mod p^7 for every p, including p = 2
            assert!(!is_multiplicative(&top).multiplicative);
        }
    }

    #[test]
    fn top_power_sign_alternates_with_height() {
        let r = make_ring(3, 1, 8).unwrap();
        for h in 1..=4 {
            let (verdict, inv, _) = top_exterior_is_gm(&honda_module(&r, h).unwrap()).unwrap();
            let sign = if h % 2 == 1 { 1 } else { -1 };
            assert!(r.equal(&inv.alpha, &r.from_int(sign)));
            assert_eq!(verdict.multiplicative, h % 2 == 1);
        }
    }

    #[test]
    fn exterior_power_range_and_precision_errors() {
        let r = make_ring(3, 1, 2).unwrap();
        let m = honda_module(&r, 3).unwrap();
        assert!(matches!(exterior_power(&m, 0), Err(Error::OutOfRange(_))));
        assert!(matches!(exterior_power(&m, 4), Err(Error::OutOfRange(_))));
        assert!(matches!(exterior_power(&m, 3), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn exterior_divisibility_is_checked() {
        let r = make_ring(3, 1, 5).unwrap();
        let m = DieudonneModule::new(r.clone(), matrix::identity(&r, 2), matrix::identity(&r, 2))
            .unwrap();
        assert!(matches!(exterior_power(&m, 2), Err(Error::ExteriorDivisibility(_))));
    }

    #[test]
    fn rank1_and_multiplicativity() {
        let r = make_ring(5, 1, 6).unwrap();
        let gm = gm_module(&r);
        assert!(r.equal(&rank1_invariant(&gm).unwrap().alpha, &r.one()));
        let v = is_multiplicative(&gm);
        assert!(v.multiplicative && v.witness.is_some());
        assert!(rank1_invariant(&honda_module(&r, 2).unwrap()).is_err());
        let v = is_multiplicative(&honda_module(&r, 2).unwrap());
        assert_eq!((v.multiplicative, v.reason.as_str()), (false, "rank"));
    }

    #[test]
    fn na_top_exterior_detects_minus_one() {
        let r = make_ring(3, 1, 8).unwrap();
        let (v, inv, _) = top_exterior_is_gm(&make_na(&r, &r.from_int(-1)).unwrap()).unwrap();
        assert!(v.multiplicative);
        assert!(r.equal(&inv.alpha, &r.one()));
        let (v, _, _) = top_exterior_is_gm(&make_na(&r, &r.from_int(1)).unwrap()).unwrap();
        assert!(!v.multiplicative);
        // a = -1 + 3^7 agrees with -1 to the working precision p^7
        let (v, _, _) =
            top_exterior_is_gm(&make_na(&r, &r.from_int(-1 + 2187)).unwrap()).unwrap();
        assert!(v.multiplicative);
        let (v, _, _) =
            top_exterior_is_gm(&make_na(&r, &r.from_int(-1 + 729)).unwrap()).unwrap();
        assert!(!v.multiplicative);
    }

    #[test]
    fn twisted_gm_over_unramified_extension() {
        let r = make_ring(2, 2, 6).unwrap();
        let k = r.residue_field();
        // alpha = lambda / phi(lambda) for lambda = Teichmuller(x): trivial class
        let lam = r.teichmuller(&k.to_residue(Fq(2))).unwrap();
        let alpha = r.mul(&lam, &r.inv(&r.frobenius(&lam)).unwrap());
        let m = twisted_gm_module(&r, &r.inv(&alpha).unwrap()).unwrap();
        assert!(validate(&m).passed());
        let v = is_multiplicative(&m);
        assert!(v.multiplicative && v.experimental);
        let w = v.witness.unwrap();
        assert!(r.equal(&r.mul(&alpha, &r.frobenius(&w)), &w));
        // alpha = -1 over W(F_4): norm = 1 so still trivial
        let m = twisted_gm_module(&r, &r.from_int(-1)).unwrap();
        assert!(is_multiplicative(&m).multiplicative);
        // alpha = 3: norm 9 != 1
        let m = twisted_gm_module(&r, &r.from_int(3)).unwrap();
        assert!(!is_multiplicative(&m).multiplicative);
    }

    #[test]
    fn json_roundtrip_shape() {
        let r = make_ring(2, 1, 8).unwrap();
        let na = make_na(&r, &r.one()).unwrap();
        let s = serde_json::to_string(&na.to_data()).unwrap();
        assert!(s.starts_with(r#"{"ring":{"p":2,"d":1,"N":8},"rank":2,"F":[[{"coords":[0]},{"coords":[2]}]"#));
        let back: ModuleData = serde_json::from_str(&s).unwrap();
        let m = DieudonneModule::from_data(back, r).unwrap();
        assert_eq!(m.f_matrix(), na.f_matrix());
    }
}
