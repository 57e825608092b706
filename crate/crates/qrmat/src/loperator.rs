//! L-operators and the closed forms they are compared against.
//!
//! Indices in this module are lifted: occupation vectors carry all `n`
//! components, and unit indices `α` run over `1..=n`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{checked_div, power, EvalPoint, Field};
use crate::qseries::q_binomial;
use crate::rmatrix::{compositions, compositions_exact, MultiIndex, Weight};
use crate::stochastic::twist_exponent;

/// `[x] = x - x⁻¹`.
pub fn bracket_x<F: Field>(x: &F) -> Result<F> {
    Ok(x.clone() - x.inv()?)
}

fn eps(a: usize, b: usize) -> i64 {
    (a > b) as i64 - (a < b) as i64
}

fn check_unit(n: usize, a: usize) -> Result<()> {
    if a == 0 || a > n {
        return Err(Error::Domain(format!("unit index {a} out of range 1..={n}")));
    }
    Ok(())
}

/// True when `e_a + x = e_b + y`.
fn unit_conserved(a: usize, x: &[i64], b: usize, y: &[i64]) -> bool {
    x.iter().zip(y).enumerate().all(|(s, (u, v))| u + (s + 1 == a) as i64 == v + (s + 1 == b) as i64)
}

fn q_sum<F: Field>(q: &F, parts: &[i64], sign: i64) -> Result<F> {
    power(q, sign * parts.iter().sum::<i64>())
}

/// The `I = 1` entry with `p = λ r / g_J` and `p' = r g_J / λ`.
fn rbar_raw<F: Field>(alpha: usize, beta: usize, j: &[i64], k: &[i64], p: &F, p2: &F, q: &F) -> Result<F> {
    if !unit_conserved(alpha, j, beta, k) {
        return Ok(F::zero());
    }
    let ka = power(q, k[alpha - 1])?;
    if alpha == beta {
        return bracket_x(&(p.clone() * ka));
    }
    if alpha > beta {
        Ok(p.clone() * q_sum(q, &k[beta - 1..alpha - 1], 1)? * bracket_x(&ka)?)
    } else {
        Ok(p2.clone() * q_sum(q, &k[alpha - 1..beta - 1], -1)? * bracket_x(&ka)?)
    }
}

/// The renormalized entry `R̄_{1,J}(λ)` between `e_α ⊗ j` and `e_β ⊗ k`.
pub fn rbar_i1_element<F: Field>(
    n: usize,
    wj: &Weight<F>,
    alpha: usize,
    beta: usize,
    j: &MultiIndex,
    k: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    check_unit(n, alpha)?;
    check_unit(n, beta)?;
    if j.len() != n || k.len() != n {
        return Err(Error::Domain(format!("occupations must have {n} components")));
    }
    if let Weight::Int(w) = wj {
        if j.total() != *w || k.total() != *w {
            return Err(Error::Domain(format!("occupations must sum to {w}")));
        }
    }
    let r = pt.r()?;
    let g = wj.half_power(r)?;
    let lam = pt.lambda()?;
    let p = lam.clone() * r / &g;
    let p2 = r.clone() * &g / lam;
    rbar_raw(alpha, beta, j.parts(), k.parts(), &p, &p2, &pt.q())
}

fn q_weight<F: Field>(m: &Weight<F>, q: &F) -> Result<F> {
    match m {
        Weight::Int(v) => power(q, *v),
        Weight::Generic(g) => Ok(g.clone() * g),
    }
}

/// `[R_{1,m}(z)]` between `e_jj ⊗ β` and `e_kk ⊗ δ` on `V_1 ⊗ V_m`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_r1m<F: Field>(
    n: usize,
    m: &Weight<F>,
    z: &F,
    jj: usize,
    beta: &MultiIndex,
    kk: usize,
    delta: &MultiIndex,
    q: &F,
) -> Result<F> {
    check_unit(n, jj)?;
    check_unit(n, kk)?;
    let (b, d) = (beta.parts(), delta.parts());
    if b.len() != n || d.len() != n {
        return Err(Error::Domain(format!("occupations must have {n} components")));
    }
    if !unit_conserved(jj, b, kk, d) {
        return Ok(F::zero());
    }
    let qm = q_weight(m, q)?;
    let den = qm.clone() * q - z;
    let bk = b[kk - 1];
    let num = if jj == kk {
        power(q, bk + 1)? * (F::one() - power(q, -2 * bk - 1)? * &qm * z)
    } else if jj < kk {
        -(q_sum(q, &b[jj..kk - 1], 1)? * (F::one() - power(q, 2 * bk)?))
    } else {
        -(qm.clone() * q_sum(q, &b[kk - 1..jj], -1)? * z * (F::one() - power(q, 2 * bk)?))
    };
    checked_div(num, &den, || "q^(m+1) - z vanishes".into())
}

/// `[R_{l,1}(z)]` between `α ⊗ e_jj` and `γ ⊗ e_kk` on `V_l ⊗ V_1`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_rl1<F: Field>(
    n: usize,
    l: &Weight<F>,
    z: &F,
    alpha: &MultiIndex,
    jj: usize,
    gamma: &MultiIndex,
    kk: usize,
    q: &F,
) -> Result<F> {
    check_unit(n, jj)?;
    check_unit(n, kk)?;
    let (a, g) = (alpha.parts(), gamma.parts());
    if a.len() != n || g.len() != n {
        return Err(Error::Domain(format!("occupations must have {n} components")));
    }
    if !unit_conserved(jj, a, kk, g) {
        return Ok(F::zero());
    }
    let ql = q_weight(l, q)?;
    let den = ql.clone() * q - z;
    let num = if jj == kk {
        let gk = g[kk - 1];
        power(q, gk + 1)? * (F::one() - power(q, -2 * gk - 1)? * &ql * z)
    } else if jj < kk {
        -(ql.clone() * q_sum(q, &a[jj - 1..kk], -1)? * z * (F::one() - power(q, 2 * a[kk - 1])?))
    } else {
        -(q_sum(q, &a[kk..jj - 1], 1)? * (F::one() - power(q, 2 * a[kk - 1])?))
    };
    checked_div(num, &den, || "q^(l+1) - z vanishes".into())
}

/// The closed product for `R_{l,m}` at the point where it degenerates to a
/// single term.
pub fn single_term_product<F: Field>(
    l: i64,
    m: i64,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    gamma: &MultiIndex,
    delta: &MultiIndex,
    q: &F,
) -> Result<F> {
    let (a, b, g, d) = (alpha.parts(), beta.parts(), gamma.parts(), delta.parts());
    let n = a.len();
    if b.len() != n || g.len() != n || d.len() != n {
        return Err(Error::Domain("indices must have equal length".into()));
    }
    if (0..n).any(|s| a[s] + b[s] != g[s] + d[s]) {
        return Ok(F::zero());
    }
    let mut psi = 0;
    for s in 0..n {
        for t in s + 1..n {
            psi += a[s] * (b[t] - g[t]) + (b[s] - g[s]) * g[t];
        }
    }
    let q2 = q.clone() * q;
    let mut v = checked_div(power(q, psi)?, &q_binomial(m, l, &q2), || format!("[{m},{l}] vanishes"))?;
    for s in 0..n {
        v *= q_binomial(b[s], g[s], &q2);
    }
    Ok(v)
}

/// A twist `ρ` with `ρ_{αα} = 1` and `ρ_{αβ} ρ_{βα} = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistMatrix<F> {
    rho: Vec<Vec<F>>,
}

impl<F: Field> TwistMatrix<F> {
    pub fn new(rho: Vec<Vec<F>>) -> Result<Self> {
        let n = rho.len();
        if rho.iter().any(|row| row.len() != n) {
            return Err(Error::Domain("twist matrix must be square".into()));
        }
        for (a, row) in rho.iter().enumerate() {
            if !row[a].is_one() {
                return Err(Error::Domain(format!("twist diagonal entry {} is not 1", a + 1)));
            }
            for (b, x) in row.iter().enumerate() {
                if !(x.clone() * &rho[b][a]).is_one() {
                    return Err(Error::Domain(format!("twist entries ({}, {}) are not inverse", a + 1, b + 1)));
                }
            }
        }
        Ok(TwistMatrix { rho })
    }

    pub fn identity(n: usize) -> Self {
        TwistMatrix { rho: vec![vec![F::one(); n]; n] }
    }

    /// `ρ_{αβ} = q^{-ε_{αβ}}`, the twist that produces the stochastic
    /// matrix in this crate's labelling.
    pub fn stochastic(n: usize, q: &F) -> Result<Self> {
        let mut rho = vec![vec![F::one(); n]; n];
        for (a, row) in rho.iter_mut().enumerate() {
            for (b, x) in row.iter_mut().enumerate() {
                *x = power(q, -eps(a, b))?;
            }
        }
        Ok(TwistMatrix { rho })
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    pub fn get(&self, a: usize, b: usize) -> &F {
        &self.rho[a - 1][b - 1]
    }
}

/// The twisted fundamental R-matrix entry between `e_α ⊗ e_γ` and
/// `e_β ⊗ e_δ`.
#[allow(clippy::too_many_arguments)]
pub fn twisted_fundamental_element<F: Field>(
    alpha: usize,
    gamma: usize,
    beta: usize,
    delta: usize,
    lambda: &F,
    twist: &TwistMatrix<F>,
    q: &F,
) -> Result<F> {
    let n = twist.n();
    for a in [alpha, gamma, beta, delta] {
        check_unit(n, a)?;
    }
    let li = lambda.inv()?;
    let qi = q.inv()?;
    let mut v = F::zero();
    if alpha == beta && gamma == delta {
        if alpha == gamma {
            v += (q.clone() - F::one()) * (lambda.clone() + li.clone() * &qi);
        }
        v += twist.get(alpha, gamma).clone() * (lambda.clone() - &li);
    }
    if alpha == delta && beta == gamma {
        if alpha < beta {
            v += (q.clone() - &qi) * lambda;
        } else if alpha > beta {
            v += (q.clone() - &qi) * &li;
        }
    }
    Ok(v)
}

/// Parameters of the L-operator with horizontal fields, built from square
/// roots `s = √u`, `t = √v`, `w = √x` so that everything stays rational.
#[derive(Clone, Debug, PartialEq)]
pub struct UvxParams<F> {
    pub u: F,
    pub v: F,
    pub x: F,
    pub c: F,
    pub mu: F,
    pub fields: Vec<F>,
}

impl<F: Field> UvxParams<F> {
    pub fn from_roots(n: usize, s: &F, t: &F, w: &F, q: &F) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("rank must be at least 2".into()));
        }
        if s.is_zero() || t.is_zero() || w.is_zero() || q.is_zero() {
            return Err(Error::Domain("(u, v, x) parameters must be nonzero".into()));
        }
        let v = t.clone() * t;
        let c = s.clone() * t * power(q, -(n as i64))?;
        let mu = q.clone() * w / t;
        let mut fields = vec![-(mu.clone() * &c)];
        for i in 2..=n as i64 {
            fields.push(mu.clone() * &v / &c * power(q, 2 * (i - 1 - n as i64))?);
        }
        Ok(UvxParams { u: s.clone() * s, v, x: w.clone() * w, c, mu, fields })
    }
}

/// Occupation numbers of the Weyl-algebra Fock space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylState(pub MultiIndex);

impl WeylState {
    pub fn new(occupation: Vec<i64>) -> Result<Self> {
        Ok(WeylState(MultiIndex::new(occupation)?))
    }

    pub fn occupation(&self) -> &[i64] {
        self.0.parts()
    }
}

/// Which L-operator to apply.
#[derive(Clone, Debug, PartialEq)]
pub enum LVariant<F> {
    /// `X_α⁻¹ X_β` dressed with `[μ Z_α]` and ordered `Z` products.
    Plain { mu: F },
    /// The L-operator of the stochastic matrix.
    Stochastic { mu: F },
    /// The stochastic operator with `Z_1 = C ∏_{i≥2} Z_i⁻¹`, `X_1 = 1`,
    /// acting on `(k_2, …, k_n)`.
    StochasticReduced { mu: F, c: F },
    /// The reduced operator written in q-oscillators with horizontal fields.
    Uvx(UvxParams<F>),
}

/// `L_{αβ} |k⟩ = coefficient · |k'⟩`; `None` when the state is annihilated.
pub fn apply_l<F: Field>(
    alpha: usize,
    beta: usize,
    variant: &LVariant<F>,
    state: &WeylState,
    q: &F,
) -> Result<(F, Option<WeylState>)> {
    let k = state.occupation();
    match variant {
        LVariant::Plain { mu } | LVariant::Stochastic { mu } => {
            let n = k.len();
            check_unit(n, alpha)?;
            check_unit(n, beta)?;
            let z = |s: usize| power(q, k[s - 1]);
            let coef = if let LVariant::Plain { .. } = variant {
                if alpha == beta {
                    bracket_x(&(mu.clone() * z(alpha)?))?
                } else if alpha > beta {
                    mu.clone() * bracket_x(&z(alpha)?)? * q_sum(q, &k[beta - 1..alpha - 1], 1)?
                } else {
                    q.clone() / mu * bracket_x(&z(alpha)?)? * q_sum(q, &k[alpha - 1..beta - 1], -1)?
                }
            } else {
                let d = (alpha == beta) as i64;
                let mut c = power(mu, eps(alpha, beta))? * bracket_x(&(power(mu, d)? * z(alpha)?))?;
                for g in 1..=n {
                    c *= power(&z(g)?, eps(alpha, g))?;
                }
                c
            };
            Ok(shifted(coef, k, Some(alpha), Some(beta)))
        }
        LVariant::StochasticReduced { mu, c } => {
            let n = k.len() + 1;
            check_unit(n, alpha)?;
            check_unit(n, beta)?;
            let zm2 = |s: usize| -> Result<F> {
                if s == 1 {
                    let e: i64 = k.iter().sum();
                    power(&(c.clone() * power(q, -e)?), -2)
                } else {
                    power(q, -2 * k[s - 2])
                }
            };
            let d = (alpha == beta) as i64;
            let mut coef = power(mu, eps(alpha, beta) + d)? * c * (F::one() - power(mu, -2 * d)? * zm2(alpha)?);
            for s in alpha + 1..=n {
                coef *= zm2(s)?;
            }
            let mode = |a: usize| (a >= 2).then(|| a - 1);
            Ok(shifted(coef, k, mode(alpha), mode(beta)))
        }
        LVariant::Uvx(p) => apply_uvx(alpha, beta, p, k, q),
    }
}

/// Applies the shift `-e_a + e_b` (positions counted from 1) unless `a = b`.
fn shifted<F: Field>(coef: F, k: &[i64], a: Option<usize>, b: Option<usize>) -> (F, Option<WeylState>) {
    let mut new = k.to_vec();
    if a != b {
        if let Some(a) = a {
            new[a - 1] -= 1;
        }
        if let Some(b) = b {
            new[b - 1] += 1;
        }
    }
    if coef.is_zero() || new.iter().any(|&x| x < 0) {
        return (F::zero(), None);
    }
    (coef, Some(WeylState(MultiIndex::new(new).expect("non-negative"))))
}

/// Single-mode q-oscillator generators on `|m⟩`.
pub mod oscillator {
    use super::*;

    pub fn k<F: Field>(m: i64, q: &F) -> Result<F> {
        power(q, -2 - 2 * m)
    }

    /// `φ|m⟩ = |m+1⟩`.
    pub fn raise(m: i64) -> (i64, i64) {
        (m + 1, 1)
    }

    /// Coefficient of `φ⁺|m⟩ = (1 - q^{-2m})|m-1⟩`.
    pub fn lower<F: Field>(m: i64, q: &F) -> Result<F> {
        Ok(F::one() - power(q, -2 * m)?)
    }
}

fn apply_uvx<F: Field>(alpha: usize, beta: usize, p: &UvxParams<F>, k: &[i64], q: &F) -> Result<(F, Option<WeylState>)> {
    let n = k.len() + 1;
    if p.fields.len() != n {
        return Err(Error::Domain(format!("(u, v, x) parameters built for rank {}, state has rank {n}", p.fields.len())));
    }
    check_unit(n, alpha)?;
    check_unit(n, beta)?;
    let q2 = q.clone() * q;
    let d = (alpha == beta) as i64;
    let mut coef = p.fields[alpha - 1].clone() * power(&p.mu, eps(alpha, beta) + d)? * &p.c;
    for s in alpha + 1..=n {
        coef *= q2.clone() * oscillator::k(k[s - 2], q)?;
    }
    let mut m = k.to_vec();
    let inv_prod = || -> Result<F> {
        let mut v = power(&p.c, -2)?;
        for &mi in k {
            v *= oscillator::k(mi, q)?.inv()? / &q2;
        }
        Ok(v)
    };
    match (alpha, beta) {
        (1, 1) => coef *= F::one() - power(&p.mu, -2)? * inv_prod()?,
        (1, b) => {
            coef *= F::one() - inv_prod()?;
            m[b - 2] = oscillator::raise(m[b - 2]).0;
        }
        (a, b) if a == b => coef *= F::one() - power(&p.mu, -2)? * &q2 * oscillator::k(m[a - 2], q)?,
        (a, b) => {
            coef *= oscillator::lower(m[a - 2], q)?;
            m[a - 2] -= 1;
            if b >= 2 {
                m[b - 2] = oscillator::raise(m[b - 2]).0;
            }
        }
    }
    if coef.is_zero() || m.iter().any(|&x| x < 0) {
        return Ok((F::zero(), None));
    }
    Ok((coef, Some(WeylState(MultiIndex::new(m)?))))
}

/// Checks the q-oscillator relations on `|0⟩ … |window⟩`, with `φ⁺`, `φ`
/// and `k` obtained from Weyl generators by `k = q^{-2} Z^{-2}`,
/// `φ⁺ = X^{-1}(1 - Z^{-2})`, `φ = X`.
pub fn q_oscillator_relations_hold<F: Field>(window: i64, q: &F) -> Result<bool> {
    let q2 = q.clone() * q;
    let zm2 = |m: i64| power(q, -2 * m);
    for m in 0..=window {
        let kw = zm2(m)? / &q2;
        if kw != oscillator::k(m, q)? {
            return Ok(false);
        }
        let lower_w = F::one() - zm2(m)?;
        if lower_w != oscillator::lower(m, q)? {
            return Ok(false);
        }
        // φ k |m⟩ and q² k φ |m⟩, both proportional to |m+1⟩
        if oscillator::k(m, q)? != q2.clone() * oscillator::k(m + 1, q)? {
            return Ok(false);
        }
        // φ⁺ k |m⟩ and q^{-2} k φ⁺ |m⟩, both proportional to |m-1⟩
        let lhs = oscillator::lower(m, q)? * oscillator::k(m, q)?;
        let rhs = oscillator::k(m - 1, q)? * oscillator::lower(m, q)? / &q2;
        if lhs != rhs {
            return Ok(false);
        }
        // φ φ⁺ |m⟩ - q² φ⁺ φ |m⟩ = (1 - q²)|m⟩
        let comm = oscillator::lower(m, q)? - q2.clone() * oscillator::lower(m + 1, q)?;
        if comm != F::one() - &q2 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks `Z_k X_l = q^{δ_{kl}} X_l Z_k` on every state with occupations
/// up to `window`.
pub fn weyl_relations_hold<F: Field>(n: usize, window: i64, q: &F) -> Result<bool> {
    for st in occupation_window(n, window) {
        let s = st.parts();
        for kk in 0..n {
            for l in 0..n {
                let mut up = s.to_vec();
                up[l] += 1;
                let lhs = power(q, up[kk])?;
                let rhs = power(q, (kk == l) as i64)? * power(q, s[kk])?;
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `𝒵 = ∏ Z_s` commutes with every plain L entry on the window.
pub fn central_element_commutes<F: Field>(n: usize, window: i64, mu: &F, q: &F) -> Result<bool> {
    let variant = LVariant::Plain { mu: mu.clone() };
    for st in occupation_window(n, window) {
        let z_in = power(q, st.total())?;
        for a in 1..=n {
            for b in 1..=n {
                let (c, out) = apply_l(a, b, &variant, &WeylState(st.clone()), q)?;
                let Some(out) = out else { continue };
                if power(q, out.0.total())? * &c != c.clone() * &z_in {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// All `n`-component occupations with every entry at most `window`.
pub fn occupation_window(n: usize, window: i64) -> Vec<MultiIndex> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v: Vec<i64>| (0..=window).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out.into_iter().map(|v| MultiIndex::new(v).expect("non-negative")).collect()
}

/// Auxiliary `V_1 ⊗ V_1` matrix `R[(a1, a2), (b1, b2)]` at spectral ratio `x`.
pub fn auxiliary_r<F: Field>(n: usize, x: &F, q: &F, stochastic: bool) -> Result<BTreeMap<[usize; 4], F>> {
    let units: Vec<MultiIndex> = (1..=n).map(|a| MultiIndex::unit(n, a)).collect::<Result<_>>()?;
    let p2 = q.clone() / x;
    let mut out = BTreeMap::new();
    for a1 in 1..=n {
        for a2 in 1..=n {
            for b1 in 1..=n {
                for b2 in 1..=n {
                    let mut v = rbar_raw(a1, b1, units[a2 - 1].parts(), units[b2 - 1].parts(), x, &p2, q)?;
                    if v.is_zero() {
                        continue;
                    }
                    if stochastic {
                        let c = |a: usize| units[a - 1].project();
                        v *= power(q, twist_exponent(1, 1, &c(a1), &c(a2), &c(b1), &c(b2)))?;
                    }
                    out.insert([a1, a2, b1, b2], v);
                }
            }
        }
    }
    Ok(out)
}

/// `[A ⊗ A, R] = 0` for the diagonal `A = diag(fields)`.
pub fn horizontal_fields_commute<F: Field>(r: &BTreeMap<[usize; 4], F>, fields: &[F]) -> bool {
    r.iter().all(|([a1, a2, b1, b2], v)| {
        let lhs = fields[a1 - 1].clone() * &fields[a2 - 1] * v;
        let rhs = v.clone() * &fields[b1 - 1] * &fields[b2 - 1];
        lhs == rhs
    })
}

/// Which L-operator the RLL check uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RllVariant {
    Plain,
    Stochastic,
}

/// A start state and auxiliary indices where the two sides of the RLL
/// relation differ.
#[derive(Clone, Debug, PartialEq)]
pub struct RllMismatch<F> {
    pub aux: [usize; 4],
    pub start: MultiIndex,
    pub end: MultiIndex,
    pub lhs: F,
    pub rhs: F,
}

type Ket<F> = BTreeMap<MultiIndex, F>;

fn apply_to_ket<F: Field>(a: usize, b: usize, variant: &LVariant<F>, ket: &Ket<F>, q: &F) -> Result<Ket<F>> {
    let mut out: Ket<F> = BTreeMap::new();
    for (st, v) in ket {
        let (c, new) = apply_l(a, b, variant, &WeylState(st.clone()), q)?;
        if let Some(new) = new {
            *out.entry(new.0).or_insert_with(F::zero) += c * v;
        }
    }
    Ok(out)
}

fn add_scaled<F: Field>(acc: &mut Ket<F>, ket: Ket<F>, s: &F) {
    for (k, v) in ket {
        *acc.entry(k).or_insert_with(F::zero) += v * s;
    }
}

/// Checks `R(λ/μ) L₁(λ) L₂(μ) = L₂(μ) L₁(λ) R(λ/μ)` on quantum states with
/// `|k| = K` for integer `K`, or on all occupations up to `window` when
/// `K` is generic.
pub fn rll_mismatch<F: Field>(
    n: usize,
    k: &Weight<F>,
    window: i64,
    lambda: &F,
    mu: &F,
    q: &F,
    variant: RllVariant,
) -> Result<Option<RllMismatch<F>>> {
    if n < 2 {
        return Err(Error::Domain("rank must be at least 2".into()));
    }
    let starts = match k {
        Weight::Int(v) if *v < 0 => return Err(Error::Domain("negative weight".into())),
        Weight::Int(v) => compositions_exact(n, *v),
        Weight::Generic(_) => occupation_window(n, window),
    };
    let x = checked_div(lambda.clone(), mu, || "mu must be nonzero".into())?;
    let stochastic = variant == RllVariant::Stochastic;
    let r = auxiliary_r(n, &x, q, stochastic)?;
    let make = |m: &F| match variant {
        RllVariant::Plain => LVariant::Plain { mu: m.clone() },
        RllVariant::Stochastic => LVariant::Stochastic { mu: m.clone() },
    };
    let (l1, l2) = (make(lambda), make(mu));
    let mut aux = Vec::new();
    for a1 in 1..=n {
        for a2 in 1..=n {
            for b1 in 1..=n {
                for b2 in 1..=n {
                    aux.push([a1, a2, b1, b2]);
                }
            }
        }
    }
    let found: Vec<Result<Option<RllMismatch<F>>>> = aux
        .par_iter()
        .map(|&[a1, a2, b1, b2]| {
            for st in &starts {
                let ket: Ket<F> = BTreeMap::from([(st.clone(), F::one())]);
                let mut lhs: Ket<F> = BTreeMap::new();
                let mut rhs: Ket<F> = BTreeMap::new();
                for c1 in 1..=n {
                    for c2 in 1..=n {
                        if let Some(rv) = r.get(&[a1, a2, c1, c2]) {
                            let t = apply_to_ket(c2, b2, &l2, &ket, q)?;
                            let t = apply_to_ket(c1, b1, &l1, &t, q)?;
                            add_scaled(&mut lhs, t, rv);
                        }
                        if let Some(rv) = r.get(&[c1, c2, b1, b2]) {
                            let t = apply_to_ket(a1, c1, &l1, &ket, q)?;
                            let t = apply_to_ket(a2, c2, &l2, &t, q)?;
                            add_scaled(&mut rhs, t, rv);
                        }
                    }
                }
                lhs.retain(|_, v| !v.is_zero());
                rhs.retain(|_, v| !v.is_zero());
                if lhs != rhs {
                    let end = lhs.keys().chain(rhs.keys()).find(|e| lhs.get(*e) != rhs.get(*e)).cloned();
                    let end = end.unwrap_or_else(|| st.clone());
                    return Ok(Some(RllMismatch {
                        aux: [a1, a2, b1, b2],
                        start: st.clone(),
                        lhs: lhs.get(&end).cloned().unwrap_or_else(F::zero),
                        rhs: rhs.get(&end).cloned().unwrap_or_else(F::zero),
                        end,
                    }));
                }
            }
            Ok(None)
        })
        .collect();
    for f in found {
        if let Some(m) = f? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

pub fn rll_check<F: Field>(
    n: usize,
    k: &Weight<F>,
    window: i64,
    lambda: &F,
    mu: &F,
    q: &F,
    variant: RllVariant,
) -> Result<bool> {
    Ok(rll_mismatch(n, k, window, lambda, mu, q, variant)?.is_none())
}

/// The states a fixed-`K` L-operator block acts on, in lexicographic order.
pub fn quantum_states(n: usize, k: i64) -> Vec<MultiIndex> {
    compositions(n - 1, k).into_iter().map(|c| c.lift(k).expect("bounded")).collect()
}
