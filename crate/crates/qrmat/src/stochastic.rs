//! The stochastic R-matrix `S_{I,J}(λ)`: a diagonal twist of the
//! R-matrix whose columns sum to one.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{checked_div, power, EvalPoint, Field};
use crate::qseries::{q_binomial, q_pochhammer};
use crate::rmatrix::{
    block_keys, compositions, dot, slnfinal_element, splits, sum_lt, MultiIndex, NormalizationMode, Powers, Weight,
};

/// Arguments of `Φ_base(γ | β; λ, μ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiParams<F> {
    pub gamma: MultiIndex,
    pub beta: MultiIndex,
    pub lambda_arg: F,
    pub mu_arg: F,
    pub base: F,
}

pub fn phi<F: Field>(params: &PhiParams<F>) -> Result<F> {
    if params.gamma.len() != params.beta.len() {
        return Err(Error::Domain("gamma and beta must have the same length".into()));
    }
    phi_raw(params.gamma.parts(), params.beta.parts(), &params.lambda_arg, &params.mu_arg, &params.base)
}

pub(crate) fn phi_raw<F: Field>(gamma: &[i64], beta: &[i64], lam: &F, mu: &F, q: &F) -> Result<F> {
    if gamma.iter().zip(beta).any(|(g, b)| *g < 0 || g > b) {
        return Ok(F::zero());
    }
    let tg: i64 = gamma.iter().sum();
    let tb: i64 = beta.iter().sum();
    let mut xi = 0;
    let mut prefix = 0;
    for (g, b) in gamma.iter().zip(beta) {
        xi += prefix * g;
        prefix += b - g;
    }
    let ratio = checked_div(mu.clone(), lam, || "Phi needs a nonzero lambda argument".into())?;
    let num = power(q, xi)? * power(&ratio, tg)? * q_pochhammer(lam, q, tg)? * q_pochhammer(&ratio, q, tb - tg)?;
    let den = q_pochhammer(mu, q, tb)?;
    let mut v = checked_div(num, &den, || format!("(mu;q)_{tb} vanishes in Phi"))?;
    for (g, b) in gamma.iter().zip(beta) {
        v *= q_binomial(*b, *g, q);
    }
    Ok(v)
}

/// Exponent of the twist `ρ = q^{…}` for integer weights.
pub fn twist_exponent(wi: i64, wj: i64, i: &MultiIndex, j: &MultiIndex, ip: &MultiIndex, jp: &MultiIndex) -> i64 {
    let (i, j, ip, jp) = (i.parts(), j.parts(), ip.parts(), jp.parts());
    dot(i, j) - dot(ip, jp) - wj * i.iter().sum::<i64>() + wi * jp.iter().sum::<i64>() + sum_lt(j, i) - sum_lt(ip, jp)
}

fn twist_factor<F: Field>(p: &Powers<F>, i: &MultiIndex, j: &MultiIndex, ip: &MultiIndex, jp: &MultiIndex) -> F {
    let (a, b, c, d) = (i.parts(), j.parts(), ip.parts(), jp.parts());
    let e = dot(a, b) - dot(c, d) + sum_lt(b, a) - sum_lt(c, d);
    p.q_pow(e) * p.qp(0, jp.total(), -i.total())
}

/// `ρ · R` in the default normalization.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_element<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    let v = slnfinal_element(n, wi, wj, i, j, ip, jp, pt, NormalizationMode::BEqualsOne)?;
    if v.is_zero() {
        return Ok(v);
    }
    let p = Powers::at(wi, wj, pt)?;
    Ok(twist_factor(&p, i, j, ip, jp) * v)
}

/// The same entry as a sum of products of two `Φ` functions.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_factorized_element<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    for m in [i, j, ip, jp] {
        if m.len() + 1 != n || n < 2 {
            return Err(Error::Domain(format!("index {m} does not match rank {n}")));
        }
    }
    let tot = i.checked_add(j);
    if tot != ip.checked_add(jp) {
        return Ok(F::zero());
    }
    let p = Powers::at(wi, wj, pt)?;
    let w = pt.w().clone();
    let winv = w.inv()?;
    let l1 = winv.clone() * p.qp(0, -1, 1);
    let m1 = winv * p.qp(0, -1, -1);
    let l2 = w * p.qp(0, -1, -1);
    let m2 = p.qp(0, 0, -2);
    let mut total = F::zero();
    for (m, rest) in splits(&tot) {
        let Some(g) = m.checked_sub(j) else { continue };
        let a = phi_raw(g.parts(), m.parts(), &l1, &m1, &p.q2)?;
        if a.is_zero() {
            continue;
        }
        total += a * phi_raw(rest.parts(), jp.parts(), &l2, &m2, &p.q2)?;
    }
    Ok(total)
}

fn degenerate_check(n: usize, idx: [&MultiIndex; 4], base: &[&impl Field]) -> Result<()> {
    for m in idx {
        if n < 2 || m.len() + 1 != n {
            return Err(Error::Domain(format!("index {m} does not match rank {n}")));
        }
    }
    if base.iter().any(|b| b.is_zero()) {
        return Err(Error::Domain("degenerate parameters must be nonzero".into()));
    }
    Ok(())
}

/// `S⁽¹⁾(μ, ν)`, the stochastic matrix at `λ = q^{(J-I)/2}` with
/// `μ = q^{-2I}`, `ν = q^{-2J}` promoted to free parameters.
#[allow(clippy::too_many_arguments)]
pub fn degenerate_s1<F: Field>(
    n: usize,
    mu: &F,
    nu: &F,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    base: &F,
) -> Result<F> {
    degenerate_check(n, [i, j, ip, jp], &[mu, nu, base])?;
    if i.checked_add(j) != ip.checked_add(jp) {
        return Ok(F::zero());
    }
    phi_raw(i.parts(), jp.parts(), mu, nu, base)
}

/// `S⁽²⁾(μ, ν)`, the counterpart at `λ = q^{(I-J)/2}`.
#[allow(clippy::too_many_arguments)]
pub fn degenerate_s2<F: Field>(
    n: usize,
    mu: &F,
    nu: &F,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    base: &F,
) -> Result<F> {
    degenerate_check(n, [i, j, ip, jp], &[mu, nu, base])?;
    if i.checked_add(j) != ip.checked_add(jp) {
        return Ok(F::zero());
    }
    let v = phi_raw(j.parts(), ip.parts(), nu, mu, base)?;
    let e = sum_lt(j.parts(), ip.parts()) - sum_lt(ip.parts(), j.parts());
    Ok(v * power(mu, -j.total())? * power(nu, ip.total())? * power(base, e)?)
}

/// Which evaluation path a column sum uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochasticPath {
    Twisted,
    Factorized,
}

/// `Σ_{i,j} S(i, j | i', j')` for every column `(i', j')` of the block.
pub fn column_sums<F: Field>(
    n: usize,
    wi: i64,
    wj: i64,
    pt: &EvalPoint<F>,
    path: StochasticPath,
) -> Result<BTreeMap<(MultiIndex, MultiIndex), F>> {
    let (gi, gj) = (Weight::Int(wi), Weight::Int(wj));
    let mut columns: Vec<(MultiIndex, MultiIndex)> = Vec::new();
    for ip in compositions(n - 1, wi) {
        for jp in compositions(n - 1, wj) {
            columns.push((ip.clone(), jp));
        }
    }
    let sums: Vec<Result<((MultiIndex, MultiIndex), F)>> = columns
        .into_par_iter()
        .map(|(ip, jp)| {
            let tot = ip.checked_add(&jp);
            let mut s = F::zero();
            for i in compositions(n - 1, wi) {
                let Some(j) = tot.checked_sub(&i) else { continue };
                if j.total() > wj {
                    continue;
                }
                s += match path {
                    StochasticPath::Twisted => stochastic_element(n, &gi, &gj, &i, &j, &ip, &jp, pt)?,
                    StochasticPath::Factorized => stochastic_factorized_element(n, &gi, &gj, &i, &j, &ip, &jp, pt)?,
                };
            }
            Ok(((ip, jp), s))
        })
        .collect();
    sums.into_iter().collect()
}

/// The first column whose sum differs from one, if any.
pub fn first_bad_column<F: Field>(
    n: usize,
    wi: i64,
    wj: i64,
    pt: &EvalPoint<F>,
    path: StochasticPath,
) -> Result<Option<((MultiIndex, MultiIndex), F)>> {
    Ok(column_sums(n, wi, wj, pt, path)?.into_iter().find(|(_, v)| !v.is_one()))
}

/// Keys where the twisted and factorized paths disagree.
pub fn path_mismatches<F: Field>(n: usize, wi: i64, wj: i64, pt: &EvalPoint<F>) -> Result<Vec<(crate::rmatrix::BlockKey, F, F)>> {
    let (gi, gj) = (Weight::Int(wi), Weight::Int(wj));
    let found: Vec<Result<Option<(crate::rmatrix::BlockKey, F, F)>>> = block_keys(n, wi, wj)
        .into_par_iter()
        .map(|k| {
            let a = stochastic_element(n, &gi, &gj, &k.i, &k.j, &k.ip, &k.jp, pt)?;
            let b = stochastic_factorized_element(n, &gi, &gj, &k.i, &k.j, &k.ip, &k.jp, pt)?;
            Ok(if a == b { None } else { Some((k, a, b)) })
        })
        .collect();
    let mut out = Vec::new();
    for f in found {
        if let Some(v) = f? {
            out.push(v);
        }
    }
    Ok(out)
}
