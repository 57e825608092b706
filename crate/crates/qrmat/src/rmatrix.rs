//! The `U_q(sl_n)` R-matrix on `V_I ⊗ V_J` for symmetric tensor
//! representations.
//!
//! Indices are canonical `(n-1)`-component compositions unless a function
//! says otherwise; the lifted form appends `W - |i|`. Entries are written
//! `R(i, j | i', j')` and vanish unless `i + j = i' + j'`.
//!
//! Three independent evaluations are provided: the `n`-fold summed form
//! ([`sl_sum_element`]), the reduced `(n-1)`-fold form
//! ([`slnfinal_element`]) and, for `n = 2`, a balanced ₄φ₃
//! ([`sl2_element`]). The closed reductions at `λ = q^{±(I-J)/2}` and the
//! two-factor decomposition `M̃·Ñ` live here as well.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{checked_div, power, EvalPoint, Field};
use crate::qseries::{phi_terminating, q_binomial, q_pochhammer};

/// A composition indexing a basis vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.iter().any(|&p| p < 0) {
            return Err(Error::Domain(format!("negative index part in {parts:?}")));
        }
        Ok(MultiIndex(parts))
    }

    pub fn zeros(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// The lifted unit vector `e_α` with `n` components, `α` counted from 1.
    pub fn unit(n: usize, alpha: usize) -> Result<Self> {
        if alpha == 0 || alpha > n {
            return Err(Error::Domain(format!("unit index {alpha} out of range 1..={n}")));
        }
        let mut v = vec![0; n];
        v[alpha - 1] = 1;
        Ok(MultiIndex(v))
    }

    pub fn parts(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    /// Appends `weight - |self|`.
    pub fn lift(&self, weight: i64) -> Result<Self> {
        let rest = weight - self.total();
        if rest < 0 {
            return Err(Error::Domain(format!("index {self} exceeds weight {weight}")));
        }
        let mut v = self.0.clone();
        v.push(rest);
        Ok(MultiIndex(v))
    }

    /// Drops the last component.
    pub fn project(&self) -> Self {
        let mut v = self.0.clone();
        v.pop();
        MultiIndex(v)
    }

    pub fn checked_add(&self, other: &Self) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference, `None` if a part would go negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let v: Vec<i64> = self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect();
        if v.iter().any(|&x| x < 0) {
            None
        } else {
            Some(MultiIndex(v))
        }
    }

    pub fn dominates(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All compositions with `len` parts and total at most `max_total`.
pub fn compositions(len: usize, max_total: i64) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; len];
    fn rec(pos: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<MultiIndex>) {
        if pos == cur.len() {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
        cur[pos] = 0;
    }
    if max_total >= 0 {
        rec(0, max_total, &mut cur, &mut out);
    }
    out
}

/// All compositions with `len` parts summing to exactly `total`.
pub fn compositions_exact(len: usize, total: i64) -> Vec<MultiIndex> {
    if len == 0 {
        return if total == 0 { vec![MultiIndex(vec![])] } else { vec![] };
    }
    compositions(len - 1, total).into_iter().map(|c| c.lift(total).expect("bounded total")).collect()
}

/// All pairs `(k, l)` of compositions with `k + l = total`.
pub fn splits(total: &MultiIndex) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for &t in total.parts() {
        let mut next = Vec::with_capacity(out.len() * (t as usize + 1));
        for (k, l) in &out {
            for a in 0..=t {
                let mut k2: Vec<i64> = k.clone();
                let mut l2: Vec<i64> = l.clone();
                k2.push(a);
                l2.push(t - a);
                next.push((k2, l2));
            }
        }
        out = next;
    }
    out.into_iter().map(|(k, l)| (MultiIndex(k), MultiIndex(l))).collect()
}

/// Number of basis vectors of `V_W` for `sl_n`: `binomial(W+n-1, n-1)`.
pub fn module_dimension(n: usize, weight: i64) -> usize {
    let mut v: u128 = 1;
    for k in 1..n as u128 {
        v = v * (weight as u128 + k) / k;
    }
    v as usize
}

/// A representation weight: a non-negative integer, or generic and given by
/// `g = q^{W/2}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight<F> {
    Int(i64),
    Generic(F),
}

impl<F: Field> Weight<F> {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Weight::Int(v) => Some(*v),
            Weight::Generic(_) => None,
        }
    }

    /// `q^{W/2}` at `q = r²`.
    pub fn half_power(&self, r: &F) -> Result<F> {
        match self {
            Weight::Int(v) => power(r, *v),
            Weight::Generic(g) => Ok(g.clone()),
        }
    }

    /// `q^W`.
    pub fn full_power(&self, q: &F) -> Result<F> {
        match self {
            Weight::Int(v) => power(q, *v),
            Weight::Generic(g) => Ok(g.clone() * g),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Weight::Int(v) if *v < 0 => Err(Error::Domain(format!("negative weight {v}"))),
            Weight::Generic(g) if g.is_zero() => Err(Error::Domain("generic weight parameter is zero".into())),
            _ => Ok(()),
        }
    }
}

impl<F: fmt::Display> fmt::Display for Weight<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Int(v) => write!(f, "{v}"),
            Weight::Generic(g) => write!(f, "g:{g}"),
        }
    }
}

/// Overall scalar normalization of the R-matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum NormalizationMode {
    /// The all-zero entry equals 1.
    #[default]
    BEqualsOne,
    /// Multiplied by the coefficient `B_{I,J}(λ)`.
    BRestored,
    /// Multiplied by `σ_{I,J}(λ) B_{I,J}(λ)`.
    SigmaRenormalized,
}

impl NormalizationMode {
    pub fn name(&self) -> &'static str {
        match self {
            NormalizationMode::BEqualsOne => "default",
            NormalizationMode::BRestored => "b-restored",
            NormalizationMode::SigmaRenormalized => "sigma",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(NormalizationMode::BEqualsOne),
            "b-restored" => Ok(NormalizationMode::BRestored),
            "sigma" => Ok(NormalizationMode::SigmaRenormalized),
            _ => Err(Error::Parse(format!("unknown normalization mode {s:?}"))),
        }
    }
}

pub(crate) fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_{k>l} a_k b_l`.
pub(crate) fn sum_gt(a: &[i64], b: &[i64]) -> i64 {
    let mut s = 0;
    let mut prefix = 0;
    for k in 0..a.len() {
        s += a[k] * prefix;
        prefix += b[k];
    }
    s
}

/// `Σ_{k<l} a_k b_l`.
pub(crate) fn sum_lt(a: &[i64], b: &[i64]) -> i64 {
    sum_gt(b, a)
}

fn conserved(i: &MultiIndex, j: &MultiIndex, ip: &MultiIndex, jp: &MultiIndex) -> bool {
    i.0.iter().zip(&j.0).zip(ip.0.iter().zip(&jp.0)).all(|((a, b), (c, d))| a + b == c + d)
}

/// Powers of `q`, `q^{1/2}` and the weight parameters.
pub(crate) struct Powers<F> {
    r: Option<F>,
    pub q: F,
    pub q2: F,
    wgt_i: Weight<F>,
    wgt_j: Weight<F>,
    qi: F,
    qj: F,
    pub wi: Option<i64>,
    pub wj: Option<i64>,
}

impl<F: Field> Powers<F> {
    pub fn new(wi: &Weight<F>, wj: &Weight<F>, q: &F, r: Option<&F>) -> Result<Self> {
        wi.check()?;
        wj.check()?;
        if q.is_zero() {
            return Err(Error::Domain("q must be nonzero".into()));
        }
        Ok(Powers {
            r: r.cloned(),
            q2: q.clone() * q,
            qi: wi.full_power(q)?,
            qj: wj.full_power(q)?,
            q: q.clone(),
            wgt_i: wi.clone(),
            wgt_j: wj.clone(),
            wi: wi.as_int(),
            wj: wj.as_int(),
        })
    }

    pub fn at(wi: &Weight<F>, wj: &Weight<F>, pt: &EvalPoint<F>) -> Result<Self> {
        Powers::new(wi, wj, &pt.q(), pt.r_opt())
    }

    /// `q^{c/2}`, needing `r` only for odd `c`.
    fn half_q(&self, c: i64) -> Result<F> {
        if c % 2 == 0 {
            power(&self.q, c / 2)
        } else {
            let r = self.r.as_ref().ok_or_else(|| Error::Unsupported("formula needs q^(1/2), only q is known".into()))?;
            power(r, c)
        }
    }

    fn half_weight(&self, w: &Weight<F>, a: i64) -> Result<F> {
        match w {
            Weight::Int(v) => self.half_q(a * v),
            Weight::Generic(g) => power(g, a),
        }
    }

    /// `q^{c/2} q^{aI/2} q^{bJ/2}`: every exponent in half units.
    pub fn hp(&self, c: i64, a: i64, b: i64) -> Result<F> {
        Ok(self.half_q(c)? * self.half_weight(&self.wgt_i, a)? * self.half_weight(&self.wgt_j, b)?)
    }

    /// `q^{c + aI + bJ}`.
    pub fn qp(&self, c: i64, a: i64, b: i64) -> F {
        self.q_pow(c) * power(&self.qi, a).expect("nonzero") * power(&self.qj, b).expect("nonzero")
    }

    pub fn q_pow(&self, e: i64) -> F {
        power(&self.q, e).expect("q nonzero")
    }

    /// `(x;q²)_k`.
    pub fn poch(&self, x: &F, k: i64) -> Result<F> {
        q_pochhammer(x, &self.q2, k)
    }

    pub fn binom(&self, n: i64, m: i64) -> F {
        q_binomial(n, m, &self.q2)
    }

    fn int_weights(&self, what: &str) -> Result<(i64, i64)> {
        match (self.wi, self.wj) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Unsupported(format!("{what} requires integer weights"))),
        }
    }
}

/// Powers plus the spectral parameter.
pub(crate) struct Ctx<F> {
    pub p: Powers<F>,
    pub w: F,
    pub winv: F,
}

impl<F: Field> Ctx<F> {
    pub fn new(wi: &Weight<F>, wj: &Weight<F>, pt: &EvalPoint<F>) -> Result<Self> {
        let p = Powers::at(wi, wj, pt)?;
        let w = pt.w().clone();
        let winv = w.inv()?;
        Ok(Ctx { p, w, winv })
    }
}

fn check_indices<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    idx: [&MultiIndex; 4],
) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain("rank n must be at least 2".into()));
    }
    for m in idx {
        if m.len() != n - 1 {
            return Err(Error::Domain(format!("index {m} must have {} components", n - 1)));
        }
    }
    let bound = |w: &Weight<F>, a: &MultiIndex, b: &MultiIndex| match w {
        Weight::Int(v) if a.total() > *v || b.total() > *v => {
            Err(Error::Domain(format!("indices {a}, {b} exceed weight {v}")))
        }
        _ => Ok(()),
    };
    bound(wi, idx[0], idx[2])?;
    bound(wj, idx[1], idx[3])
}

fn coef_a<F: Field>(c: &Ctx<F>, i: &MultiIndex, j: &MultiIndex, jp: &MultiIndex) -> Result<F> {
    let p = &c.p;
    let num = p.poch(&(c.winv.clone() * p.qp(0, 1, -1)), jp.total())?
        * p.poch(&(c.winv.clone() * p.qp(0, -1, 1)), i.total())?
        * p.poch(&p.qp(0, 0, -2), j.total())?;
    let den = p.poch(&(c.winv.clone() * p.qp(0, -1, -1)), i.total() + j.total())?
        * p.poch(&p.qp(0, 0, -2), jp.total())?;
    let mut v = checked_div(num, &den, || "denominator of the A coefficient vanishes".into())?;
    for (a, b) in i.0.iter().zip(&j.0) {
        v *= p.binom(a + b, *b);
    }
    Ok(v)
}

/// The coefficient `B_{I,J}(λ)`.
pub fn coef_b<F: Field>(wi: i64, wj: i64, pt: &EvalPoint<F>) -> Result<F> {
    let p = Powers::at(&Weight::Int(wi), &Weight::Int(wj), pt)?;
    let a = pt.w().clone() * p.qp(0, -1, -1);
    let num = p.q_pow(-wi - wi * wj) * p.poch(&a, wi + wj + 1)?;
    let den = p.poch(&a, wi + 1)? * p.poch(&a, wj + 1)?;
    checked_div(num, &den, || "denominator of the B coefficient vanishes".into())
}

/// The renormalization factor `σ_{I,J}(λ)`.
pub fn sigma<F: Field>(wi: i64, wj: &Weight<F>, pt: &EvalPoint<F>) -> Result<F> {
    let p = Powers::at(&Weight::Int(wi), wj, pt)?;
    let a = pt.w().clone() * p.qp(0, -1, -1);
    Ok(-(pt.lambda_pow(-wi)? * p.hp(0, 1, 1)? * p.poch(&a, wi + 1)?))
}

/// `σ·A·B` as a finite product that allows generic `J`.
fn coef_abar<F: Field>(c: &Ctx<F>, pt: &EvalPoint<F>, i: &MultiIndex, j: &MultiIndex, ip: &MultiIndex) -> Result<F> {
    let p = &c.p;
    let wi = p.wi.ok_or_else(|| Error::Unsupported("sigma normalization requires an integer first weight".into()))?;
    let (ti, tj, tip) = (i.total(), j.total(), ip.total());
    let num = p.poch(&(c.winv.clone() * p.qp(2 * ti + 2 * tj, -1, -1)), wi - tip)?
        * p.poch(&(c.winv.clone() * p.qp(0, -1, 1)), ti)?;
    let sign = if (wi + 1) % 2 == 0 { F::one() } else { -F::one() };
    let den = sign * pt.lambda_pow(-wi)? * p.hp(0, -1, -1)? * p.poch(&p.qp(2 * tj, 0, -2), ti - tip)?;
    let mut v = checked_div(num, &den, || "denominator of the sigma-normalized coefficient vanishes".into())?;
    let q2 = p.q2.clone();
    for (a, b) in i.0.iter().zip(&j.0) {
        let top = p.poch(&(q2.clone() * p.q_pow(2 * b)), *a)?;
        let bottom = p.poch(&q2, *a)?;
        v *= checked_div(top, &bottom, || "(q^2;q^2) vanishes".into())?;
    }
    Ok(v)
}

/// The `(n-1)`-fold sum over `m_s ≤ min(i_s, j'_s)` together with its phase.
fn reduced_sum<F: Field>(c: &Ctx<F>, i: &MultiIndex, j: &MultiIndex, ip: &MultiIndex, jp: &MultiIndex) -> Result<F> {
    let p = &c.p;
    let (ti, tj, tjp) = (i.total(), j.total(), jp.total());
    let bounds: Vec<i64> = i.0.iter().zip(&jp.0).map(|(a, b)| *a.min(b)).collect();
    let mmax: i64 = bounds.iter().sum();

    let x1 = c.w.clone() * p.qp(0, -1, -1);
    let x2 = c.w.clone() * p.qp(2 - 2 * ti - 2 * tj, 1, 1);
    let y1 = c.w.clone() * p.qp(2 - 2 * ti, 1, -1);
    let y2 = c.w.clone() * p.qp(2 - 2 * tjp, -1, 1);
    let mut wpart = Vec::with_capacity(mmax as usize + 1);
    let mut acc = F::one();
    wpart.push(acc.clone());
    let mut qt = F::one();
    for t in 0..mmax {
        let num = (F::one() - x1.clone() * &qt) * (F::one() - x2.clone() * &qt);
        let den = (F::one() - y1.clone() * &qt) * (F::one() - y2.clone() * &qt);
        acc = checked_div(acc * num, &den, || format!("spectral Pochhammer denominator vanishes at |m| = {}", t + 1))?;
        wpart.push(acc.clone());
        qt *= &p.q2;
    }

    let mut spart: Vec<Vec<F>> = Vec::with_capacity(bounds.len());
    for (s, &bound) in bounds.iter().enumerate() {
        let a = p.q_pow(-2 * i.0[s]);
        let b = p.q_pow(-2 * jp.0[s]);
        let d = p.q_pow(-2 * (i.0[s] + j.0[s]));
        let mut row = vec![F::one()];
        let mut acc = F::one();
        let mut qt = F::one();
        for _ in 0..bound {
            let num = (F::one() - a.clone() * &qt) * (F::one() - b.clone() * &qt);
            qt *= &p.q2;
            let den = (F::one() - qt.clone()) * (F::one() - d.clone() * &qt / &p.q2);
            acc = checked_div(acc * num, &den, || "index Pochhammer denominator vanishes".into())?;
            row.push(acc.clone());
        }
        spart.push(row);
    }

    let diff: Vec<i64> = ip.0.iter().zip(&i.0).map(|(a, b)| a - b).collect();
    let mut total = F::zero();
    let mut m = vec![0i64; bounds.len()];
    loop {
        let tm: i64 = m.iter().sum();
        let mut term = wpart[tm as usize].clone() * p.q_pow(2 * (tm + sum_lt(&m, &diff)));
        for (s, &ms) in m.iter().enumerate() {
            term *= &spart[s][ms as usize];
        }
        total += term;
        let mut s = 0;
        loop {
            if s == m.len() {
                return Ok(total);
            }
            if m[s] < bounds[s] {
                m[s] += 1;
                break;
            }
            m[s] = 0;
            s += 1;
        }
    }
}

/// The reduced summed form with no special-point handling.
#[allow(clippy::too_many_arguments)]
pub fn slnfinal_summed<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
    mode: NormalizationMode,
) -> Result<F> {
    check_indices(n, wi, wj, [i, j, ip, jp])?;
    if !conserved(i, j, ip, jp) {
        return Ok(F::zero());
    }
    let c = Ctx::new(wi, wj, pt)?;
    let coef = match mode {
        NormalizationMode::BEqualsOne => coef_a(&c, i, j, jp)?,
        NormalizationMode::BRestored => {
            let (a, b) = c.p.int_weights("the B coefficient")?;
            coef_a(&c, i, j, jp)? * coef_b(a, b, pt)?
        }
        NormalizationMode::SigmaRenormalized => coef_abar(&c, pt, i, j, ip)?,
    };
    let phase = c.p.q_pow(dot(&ip.0, &jp.0) - dot(&i.0, &j.0) + sum_gt(&i.0, &j.0) + sum_gt(&jp.0, &ip.0))
        * c.p.qp(0, -jp.total(), -i.total());
    Ok(coef * phase * reduced_sum(&c, i, j, ip, jp)?)
}

/// Which closed reduction applies at this point, if any.
fn special_point<F: Field>(p: &Powers<F>, w: &F) -> Option<bool> {
    let lower_ok = !matches!((p.wi, p.wj), (Some(a), Some(b)) if b > a);
    let upper_ok = !matches!((p.wi, p.wj), (Some(a), Some(b)) if a > b);
    if lower_ok && *w == p.qp(0, 1, -1) {
        Some(true)
    } else if upper_ok && *w == p.qp(0, -1, 1) {
        Some(false)
    } else {
        None
    }
}

/// A matrix element of the R-matrix.
///
/// In the default normalization the points `λ² = q^{±(I-J)}` are evaluated
/// through the closed reductions, which are the continuous extension of the
/// summed form there.
#[allow(clippy::too_many_arguments)]
pub fn slnfinal_element<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
    mode: NormalizationMode,
) -> Result<F> {
    if mode == NormalizationMode::BEqualsOne {
        let p = Powers::at(wi, wj, pt)?;
        match special_point(&p, pt.w()) {
            Some(true) => return reduction_lower(n, wi, wj, i, j, ip, jp, &p.q),
            Some(false) => return reduction_upper(n, wi, wj, i, j, ip, jp, &p.q),
            None => {}
        }
    }
    slnfinal_summed(n, wi, wj, i, j, ip, jp, pt, mode)
}

/// The `n`-fold summed form, normalized with `B` restored.
#[allow(clippy::too_many_arguments)]
pub fn sl_sum_element<F: Field>(
    n: usize,
    wi: i64,
    wj: i64,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    let (wgi, wgj) = (Weight::Int(wi), Weight::Int(wj));
    check_indices(n, &wgi, &wgj, [i, j, ip, jp])?;
    if !conserved(i, j, ip, jp) {
        return Ok(F::zero());
    }
    let p = Powers::at(&wgi, &wgj, pt)?;
    let (ti, tj, tip) = (i.total(), j.total(), ip.total());
    let psi = -2 * dot(&i.0, &j.0) + dot(&ip.0, &jp.0) - (wi - ti) * (wj - tj) + wi * (tip - ti - 1)
        + sum_lt(&ip.0, &jp.0)
        - sum_lt(&i.0, &j.0);
    let (li, lj, lip, ljp) = (i.lift(wi)?, j.lift(wj)?, ip.lift(wi)?, jp.lift(wj)?);
    let mut pre = p.q_pow(psi);
    for s in 0..n {
        pre *= p.binom(li.0[s] + lj.0[s], li.0[s]);
    }
    let bounds: Vec<i64> = li.0.iter().zip(&ljp.0).map(|(a, b)| *a.min(b)).collect();
    let mut spart: Vec<Vec<F>> = Vec::with_capacity(n);
    for (s, &bound) in bounds.iter().enumerate() {
        let a = p.q_pow(-2 * li.0[s]);
        let b = p.q_pow(-2 * ljp.0[s]);
        let d = p.q_pow(-2 * (li.0[s] + lj.0[s]));
        let mut row = Vec::with_capacity(bound as usize + 1);
        for m in 0..=bound {
            let num = p.poch(&a, m)? * p.poch(&b, m)?;
            let den = p.poch(&p.q2, m)? * p.poch(&d, m)?;
            row.push(checked_div(num, &den, || "index Pochhammer denominator vanishes".into())?);
        }
        spart.push(row);
    }
    let shift: Vec<i64> = li.0.iter().zip(&lip.0).map(|(a, b)| a - b).collect();
    let mut total = F::zero();
    let mut m = vec![0i64; n];
    'outer: loop {
        let tm: i64 = m.iter().sum();
        let mut e = 2 * tm;
        let mut prefix = 0;
        for k in 0..n - 1 {
            prefix += shift[k];
            e += 2 * m[k] * prefix;
        }
        let den = F::one() - pt.w().clone() * p.q_pow(2 * tm - wi - wj);
        let mut term = checked_div(p.q_pow(e), &den, || format!("1 - lambda^2 q^(2|m|-I-J) vanishes at |m| = {tm}"))?;
        for (s, &ms) in m.iter().enumerate() {
            term *= &spart[s][ms as usize];
        }
        total += term;
        let mut s = 0;
        loop {
            if s == n {
                break 'outer;
            }
            if m[s] < bounds[s] {
                m[s] += 1;
                break;
            }
            m[s] = 0;
            s += 1;
        }
    }
    Ok(pre * total)
}

/// The `n = 2` entry as a balanced terminating ₄φ₃, default normalization.
pub fn sl2_element<F: Field>(wi: &Weight<F>, wj: &Weight<F>, i: i64, j: i64, ip: i64, jp: i64, pt: &EvalPoint<F>) -> Result<F> {
    let idx = |v: i64| MultiIndex::new(vec![v]);
    check_indices(2, wi, wj, [&idx(i)?, &idx(j)?, &idx(ip)?, &idx(jp)?])?;
    if i + j != ip + jp {
        return Ok(F::zero());
    }
    let c = Ctx::new(wi, wj, pt)?;
    let p = &c.p;
    let num = p.poch(&(c.winv.clone() * p.qp(0, 1, -1)), jp)?
        * p.poch(&(c.winv.clone() * p.qp(0, -1, 1)), i)?
        * p.poch(&p.qp(0, 0, -2), j)?;
    let den = p.poch(&(c.winv.clone() * p.qp(0, -1, -1)), i + j)? * p.poch(&p.qp(0, 0, -2), jp)?;
    let pre = p.q_pow(ip * jp - i * j) * p.qp(0, -jp, -i) * p.binom(i + j, i);
    let pre = pre * checked_div(num, &den, || "denominator of the A coefficient vanishes".into())?;
    let series = phi_terminating(
        &[
            p.q_pow(-2 * i),
            p.q_pow(-2 * jp),
            c.w.clone() * p.qp(0, -1, -1),
            c.w.clone() * p.qp(2 - 2 * i - 2 * j, 1, 1),
        ],
        &[
            p.q_pow(-2 * i - 2 * j),
            c.w.clone() * p.qp(2 - 2 * i, 1, -1),
            c.w.clone() * p.qp(2 - 2 * jp, -1, 1),
        ],
        &p.q2,
        &p.q2,
    )
    .map_err(|e| match e {
        Error::Regularization(m) => Error::Resonance(m),
        other => other,
    })?;
    Ok(pre * series)
}

/// The entry at `λ = q^{(I-J)/2}`, a single closed product in `q`.
///
/// Not available for integer weights with `J > I`.
#[allow(clippy::too_many_arguments)]
pub fn reduction_lower<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    q: &F,
) -> Result<F> {
    check_indices(n, wi, wj, [i, j, ip, jp])?;
    let p = Powers::new(wi, wj, q, None)?;
    if let (Some(a), Some(b)) = (p.wi, p.wj) {
        if b > a {
            return Err(Error::Unsupported("the lower reduction needs I >= J".into()));
        }
    }
    if !conserved(i, j, ip, jp) {
        return Ok(F::zero());
    }
    let (ti, tj, tip, tjp) = (i.total(), j.total(), ip.total(), jp.total());
    let mut e = dot(&ip.0, &jp.0) - dot(&i.0, &j.0);
    e += sum_gt(&i.0, &j.0) + sum_gt(&jp.0, &ip.0) - 2 * sum_gt(&jp.0, &j.0);
    let num = p.q_pow(e) * p.qp(0, -tjp, -ti + 2 * tjp) * p.poch(&p.qp(0, 0, -2), tj)? * p.poch(&p.qp(0, -2, 2), tip - tj)?;
    let den = p.poch(&p.qp(0, -2, 0), tip)?;
    let mut v = checked_div(num, &den, || "(q^-2I;q^2) vanishes".into())?;
    for (a, b) in ip.0.iter().zip(&j.0) {
        v *= p.binom(*a, *b);
    }
    Ok(v)
}

/// The entry at `λ = q^{(J-I)/2}`.
///
/// Not available for integer weights with `I > J`.
#[allow(clippy::too_many_arguments)]
pub fn reduction_upper<F: Field>(
    n: usize,
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    q: &F,
) -> Result<F> {
    check_indices(n, wi, wj, [i, j, ip, jp])?;
    let p = Powers::new(wi, wj, q, None)?;
    if let (Some(a), Some(b)) = (p.wi, p.wj) {
        if a > b {
            return Err(Error::Unsupported("the upper reduction needs J >= I".into()));
        }
    }
    if !conserved(i, j, ip, jp) {
        return Ok(F::zero());
    }
    let (ti, tjp) = (i.total(), jp.total());
    let mut e = dot(&ip.0, &jp.0) - dot(&i.0, &j.0);
    e += sum_gt(&i.0, &j.0) + sum_gt(&jp.0, &ip.0) - 2 * sum_gt(&i.0, &ip.0);
    let num = p.q_pow(e) * p.qp(0, -tjp + 2 * ti, -ti) * p.poch(&p.qp(0, -2, 0), ti)? * p.poch(&p.qp(0, 2, -2), tjp - ti)?;
    let den = p.poch(&p.qp(0, 0, -2), tjp)?;
    let mut v = checked_div(num, &den, || "(q^-2J;q^2) vanishes".into())?;
    for (a, b) in jp.0.iter().zip(&i.0) {
        v *= p.binom(*a, *b);
    }
    Ok(v)
}

/// Left factor `M̃(i, j | k, l)` of the decomposition.
#[allow(clippy::too_many_arguments)]
pub fn m_tilde_element<F: Field>(
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    if !conserved(i, j, ip, jp) || !ip.dominates(j) {
        return Ok(F::zero());
    }
    let c = Ctx::new(wi, wj, pt)?;
    let p = &c.p;
    let (ti, tj, tip, tjp) = (i.total(), j.total(), ip.total(), jp.total());
    let e = -dot(&i.0, &j.0) + sum_gt(&i.0, &j.0) + sum_gt(&jp.0, &ip.0) - 2 * sum_gt(&jp.0, &j.0);
    let num = p.q_pow(e)
        * p.qp(0, 0, -ti)
        * p.poch(&p.qp(0, 0, -2), tj)?
        * p.poch(&(c.winv.clone() * p.qp(0, -1, 1)), tip - tj)?;
    let den = power(&(c.w.clone() * p.qp(0, -1, -1)), tjp)? * p.poch(&(c.winv.clone() * p.qp(0, -1, -1)), tip)?;
    let mut v = checked_div(num, &den, || "denominator of the left factor vanishes".into())?;
    for (a, b) in ip.0.iter().zip(&j.0) {
        v *= p.binom(*a, *b);
    }
    Ok(v)
}

/// Right factor `Ñ(k, l | i', j')` of the decomposition.
#[allow(clippy::too_many_arguments)]
pub fn n_tilde_element<F: Field>(
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    if !conserved(i, j, ip, jp) || !jp.dominates(j) {
        return Ok(F::zero());
    }
    let c = Ctx::new(wi, wj, pt)?;
    let p = &c.p;
    let (tj, tjp) = (j.total(), jp.total());
    let e = dot(&ip.0, &jp.0) + sum_gt(&j.0, &i.0) + sum_gt(&jp.0, &ip.0) - 2 * sum_gt(&j.0, &ip.0);
    let num = p.q_pow(e)
        * p.qp(0, -tjp, 0)
        * p.poch(&(c.w.clone() * p.qp(0, -1, -1)), tj)?
        * p.poch(&(c.winv.clone() * p.qp(0, 1, -1)), tjp - tj)?;
    let den = p.poch(&p.qp(0, 0, -2), tjp)?;
    let mut v = checked_div(num, &den, || "(q^-2J;q^2) vanishes in the right factor".into())?;
    for (a, b) in jp.0.iter().zip(&j.0) {
        v *= p.binom(*a, *b);
    }
    Ok(v)
}

/// `Σ_{k+l=i+j} M̃(i,j|k,l) Ñ(k,l|i',j')` over all non-negative splits.
#[allow(clippy::too_many_arguments)]
pub fn factorized_element<F: Field>(
    wi: &Weight<F>,
    wj: &Weight<F>,
    i: &MultiIndex,
    j: &MultiIndex,
    ip: &MultiIndex,
    jp: &MultiIndex,
    pt: &EvalPoint<F>,
) -> Result<F> {
    if !conserved(i, j, ip, jp) {
        return Ok(F::zero());
    }
    let mut total = F::zero();
    for (k, l) in splits(&i.checked_add(j)) {
        let m = m_tilde_element(wi, wj, i, j, &k, &l, pt)?;
        if m.is_zero() {
            continue;
        }
        total += m * n_tilde_element(wi, wj, &k, &l, ip, jp, pt)?;
    }
    Ok(total)
}

/// Reversal `τ` of the components of a canonical index.
pub fn tau(v: &MultiIndex) -> MultiIndex {
    MultiIndex(v.0.iter().rev().copied().collect())
}

/// Cyclic shift of a canonical index: `(W - |v|, v_1, …, v_{n-2})`.
pub fn cyclic_bar(v: &MultiIndex, weight: i64) -> Result<MultiIndex> {
    let head = weight - v.total();
    if head < 0 {
        return Err(Error::Domain(format!("index {v} exceeds weight {weight}")));
    }
    let mut out = vec![head];
    out.extend_from_slice(&v.0[..v.0.len().saturating_sub(1)]);
    Ok(MultiIndex(out))
}

/// Convolution `[i, j]` of the lifted indices.
pub fn bracket(i: &MultiIndex, j: &MultiIndex, wi: i64, wj: i64) -> i64 {
    dot(&i.0, &j.0) + (wi - i.total()) * (wj - j.total())
}

/// Key of a block entry `R(i, j | i', j')`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    pub i: MultiIndex,
    pub j: MultiIndex,
    pub ip: MultiIndex,
    pub jp: MultiIndex,
}

impl fmt::Display for BlockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} | {} {}", self.i, self.j, self.ip, self.jp)
    }
}

/// Nonzero outputs `(i', j', value)` of each input `(i, j)`.
pub type BlockRows<F> = BTreeMap<(MultiIndex, MultiIndex), Vec<(MultiIndex, MultiIndex, F)>>;

/// A full `V_I ⊗ V_J` block; absent keys are exact zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct RBlock<F> {
    pub n: usize,
    pub weight_i: i64,
    pub weight_j: i64,
    pub mode: NormalizationMode,
    pub entries: BTreeMap<BlockKey, F>,
}

impl<F: Field> RBlock<F> {
    pub fn get(&self, key: &BlockKey) -> F {
        self.entries.get(key).cloned().unwrap_or_else(F::zero)
    }

    /// Nonzero entries of each row `(i, j)`.
    pub fn rows(&self) -> BlockRows<F> {
        let mut out = BlockRows::new();
        for (k, v) in &self.entries {
            out.entry((k.i.clone(), k.j.clone())).or_default().push((k.ip.clone(), k.jp.clone(), v.clone()));
        }
        out
    }

    /// Dimensions of the two tensor factors.
    pub fn dimensions(&self) -> (usize, usize) {
        (module_dimension(self.n, self.weight_i), module_dimension(self.n, self.weight_j))
    }
}

/// Every conservation-respecting key of the block.
pub fn block_keys(n: usize, wi: i64, wj: i64) -> Vec<BlockKey> {
    let vi = compositions(n - 1, wi);
    let vj = compositions(n - 1, wj);
    let mut keys = Vec::new();
    for i in &vi {
        for j in &vj {
            let tot = i.checked_add(j);
            for ip in &vi {
                if let Some(jp) = tot.checked_sub(ip) {
                    if jp.total() <= wj {
                        keys.push(BlockKey { i: i.clone(), j: j.clone(), ip: ip.clone(), jp });
                    }
                }
            }
        }
    }
    keys
}

/// Evaluates the whole block in integer-weight mode.
pub fn build_block<F: Field>(n: usize, wi: i64, wj: i64, pt: &EvalPoint<F>, mode: NormalizationMode) -> Result<RBlock<F>> {
    if n < 2 {
        return Err(Error::Domain("rank n must be at least 2".into()));
    }
    if wi < 0 || wj < 0 {
        return Err(Error::Domain("weights must be non-negative".into()));
    }
    let (gi, gj) = (Weight::Int(wi), Weight::Int(wj));
    let values: Vec<Result<Option<(BlockKey, F)>>> = block_keys(n, wi, wj)
        .into_par_iter()
        .map(|k| {
            let v = slnfinal_element(n, &gi, &gj, &k.i, &k.j, &k.ip, &k.jp, pt, mode)?;
            Ok(if v.is_zero() { None } else { Some((k, v)) })
        })
        .collect();
    let mut entries = BTreeMap::new();
    for v in values {
        if let Some((k, x)) = v? {
            entries.insert(k, x);
        }
    }
    Ok(RBlock { n, weight_i: wi, weight_j: wj, mode, entries })
}
