//! q-Pochhammer symbols, Gaussian binomials and terminating basic
//! hypergeometric series, plus checkers for the Heine and Sears
//! transformations.

use crate::error::{Error, Result};
use crate::field::{power, Field};

/// `(a;q)_k`, extended to negative `k` by `(a;q)_{-m} = 1/(a q^{-m};q)_m`.
pub fn q_pochhammer<F: Field>(a: &F, q: &F, k: i64) -> Result<F> {
    if k >= 0 {
        let mut p = F::one();
        let mut t = a.clone();
        for _ in 0..k {
            p *= F::one() - &t;
            t *= q;
        }
        return Ok(p);
    }
    let qinv = q.inv()?;
    let mut p = F::one();
    let mut t = a.clone() * &qinv;
    for j in 1..=(-k) {
        let factor = F::one() - &t;
        if factor.is_zero() {
            return Err(Error::Resonance(format!("factor 1 - a q^-{j} vanishes in ({a};{q})_{k}")));
        }
        p *= factor;
        t *= &qinv;
    }
    Ok(F::one() / p)
}

/// `(a₁,…,a_m;q)_k`.
pub fn q_multi_pochhammer<F: Field>(params: &[F], q: &F, k: i64) -> Result<F> {
    let mut p = F::one();
    for a in params {
        p *= q_pochhammer(a, q, k)?;
    }
    Ok(p)
}

/// Gaussian binomial `[n, m]_q`; zero outside `0 ≤ m ≤ n`.
///
/// Built from the Pascal recurrence so it never divides.
pub fn q_binomial<F: Field>(n: i64, m: i64, q: &F) -> F {
    if m < 0 || n < 0 || m > n {
        return F::zero();
    }
    let m = m.min(n - m) as usize;
    let n = n as usize;
    // row[k] = [row_n, k]_q
    let mut row = vec![F::zero(); m + 1];
    row[0] = F::one();
    let mut qpow = vec![F::one(); m + 1];
    for k in 1..=m {
        qpow[k] = qpow[k - 1].clone() * q;
    }
    for rn in 1..=n {
        for k in (1..=m.min(rn)).rev() {
            // [rn,k] = [rn-1,k-1] + q^k [rn-1,k]
            let t = qpow[k].clone() * &row[k];
            row[k] = row[k - 1].clone() + t;
        }
    }
    row[m].clone()
}

/// Exponent `e` with `x = q^e`, if there is one.
pub fn q_power_exponent<F: Field>(x: &F, q: &F) -> Option<i64> {
    if x.is_one() {
        return Some(0);
    }
    if q.is_zero() || x.is_zero() {
        return None;
    }
    let lq = q.ln_abs();
    if lq.abs() < 1e-12 {
        if *q == -F::one() && *x == -F::one() {
            return Some(1);
        }
        return None;
    }
    let guess = (x.ln_abs() / lq).round();
    if !guess.is_finite() || guess.abs() > 1e6 {
        return None;
    }
    let guess = guess as i64;
    (guess - 1..=guess + 1).find(|&e| power(q, e).map(|v| v == *x).unwrap_or(false))
}

/// Index after which `(a;q)_i` vanishes, i.e. `k` when `a = q^{-k}`.
fn termination_index<F: Field>(a: &F, q: &F) -> Option<i64> {
    q_power_exponent(a, q).filter(|&e| e <= 0).map(|e| -e)
}

/// Parameters of `_{r+1}φ_r(a₁…a_{r+1}; b₁…b_r; q, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSpec<F> {
    pub numerator: Vec<F>,
    pub denominator: Vec<F>,
    pub base: F,
    pub argument: F,
    pub max_terms: Option<usize>,
}

impl<F: Field> SeriesSpec<F> {
    pub fn new(numerator: Vec<F>, denominator: Vec<F>, base: F, argument: F) -> Self {
        SeriesSpec { numerator, denominator, base, argument, max_terms: None }
    }

    pub fn with_max_terms(mut self, n: usize) -> Self {
        self.max_terms = Some(n);
        self
    }

    /// Index of the last term that can be nonzero, if the series terminates.
    pub fn termination(&self) -> Option<i64> {
        self.numerator.iter().filter_map(|a| termination_index(a, &self.base)).min()
    }
}

/// Exact value of a terminating (or explicitly truncated) series.
pub fn phi_series<F: Field>(spec: &SeriesSpec<F>) -> Result<F> {
    let last = match (spec.termination(), spec.max_terms) {
        (_, Some(0)) => return Ok(F::zero()),
        (Some(k), Some(m)) => k.min(m as i64 - 1),
        (Some(k), None) => k,
        (None, Some(m)) => m as i64 - 1,
        (None, None) => {
            return Err(Error::Unsupported("series does not terminate and no term cap was given".into()))
        }
    };
    sum_series(&spec.numerator, &spec.denominator, &spec.base, &spec.argument, last)
}

/// Sums terms `0..=last` by the term-ratio recurrence.
pub(crate) fn sum_series<F: Field>(num: &[F], den: &[F], q: &F, x: &F, last: i64) -> Result<F> {
    let mut total = F::one();
    let mut term = F::one();
    let mut qi = F::one();
    for i in 0..last {
        let mut nf = F::one();
        for a in num {
            nf *= F::one() - a.clone() * &qi;
        }
        if nf.is_zero() {
            break;
        }
        let mut df = F::one() - qi.clone() * q;
        for b in den {
            df *= F::one() - b.clone() * &qi;
        }
        if df.is_zero() {
            return Err(Error::Regularization(format!(
                "denominator vanishes at term {} before the series truncates",
                i + 1
            )));
        }
        term = term * nf / df * x;
        total += &term;
        qi *= q;
    }
    Ok(total)
}

/// Terminating series with exact termination detection; errors otherwise.
pub(crate) fn phi_terminating<F: Field>(num: &[F], den: &[F], q: &F, x: &F) -> Result<F> {
    let spec = SeriesSpec::new(num.to_vec(), den.to_vec(), q.clone(), x.clone());
    phi_series(&spec)
}

/// `(x;q)_∞ / (y;q)_∞` as a finite product when `y/x` is a power of `q`
/// and neither infinite product vanishes on its own.
fn infinite_ratio<F: Field>(x: &F, y: &F, q: &F) -> Option<F> {
    let vanishes = |v: &F| q_power_exponent(v, q).is_some_and(|e| e <= 0);
    if vanishes(y) {
        return None;
    }
    if x.is_zero() || y.is_zero() {
        return if x == y { Some(F::one()) } else { None };
    }
    let d = q_power_exponent(&(y.clone() / x), q)?;
    if d >= 0 {
        q_pochhammer(x, q, d).ok()
    } else {
        q_pochhammer(y, q, -d).ok().filter(|v| !v.is_zero()).map(|v| F::one() / v)
    }
}

/// `∏(a;q)_∞ / ∏(b;q)_∞` when the factors pair off up to powers of `q`.
fn infinite_quotient<F: Field>(num: &[F], den: &[F], q: &F) -> Option<F> {
    if num.len() != den.len() {
        return None;
    }
    let mut free: Vec<Option<&F>> = den.iter().map(Some).collect();
    let mut v = F::one();
    for a in num {
        let (k, r) = free.iter().enumerate().find_map(|(k, b)| b.and_then(|b| infinite_ratio(a, b, q)).map(|r| (k, r)))?;
        v *= r;
        free[k] = None;
    }
    Some(v)
}

/// `∏(a;q)_∞ / ∏(b;q)_∞ · ₂φ₁(num; den; q, x)` when it reduces to a finite
/// expression. A series that does not terminate is still admissible when a
/// numerator parameter cancels the denominator, leaving a ₁φ₀ that the
/// q-binomial theorem turns into `(px;q)_∞ / (x;q)_∞`.
fn heine_form<F: Field>(mut inf_num: Vec<F>, mut inf_den: Vec<F>, num: [F; 2], den: F, x: F, q: &F) -> Result<Option<F>> {
    let spec = SeriesSpec::new(num.to_vec(), vec![den.clone()], q.clone(), x.clone());
    let series = if spec.termination().is_some() {
        phi_series(&spec)?
    } else {
        let Some(k) = num.iter().position(|a| *a == den) else { return Ok(None) };
        inf_num.push(num[1 - k].clone() * &x);
        inf_den.push(x);
        F::one()
    };
    Ok(infinite_quotient(&inf_num, &inf_den, q).map(|pre| pre * series))
}

/// Checks Heine's chain of ₂φ₁ transformations at a terminating point.
///
/// The first form must terminate. Every later form is compared with it
/// when it reduces to an exact finite expression; at least one later form
/// must qualify.
pub fn verify_heine_chain<F: Field>(a: &F, b: &F, c: &F, z: &F, q: &F) -> Result<bool> {
    let first = SeriesSpec::new(vec![a.clone(), b.clone()], vec![c.clone()], q.clone(), z.clone());
    if first.termination().is_none() {
        return Err(Error::Unsupported("neither a nor b is a non-positive power of q".into()));
    }
    let lhs = phi_series(&first)?;
    if b.is_zero() || c.is_zero() {
        return Err(Error::Unsupported("b and c must be nonzero".into()));
    }
    let az = a.clone() * z;
    let cb = c.clone() / b;
    let abzc = a.clone() * b * z / c;
    let forms = [
        heine_form(vec![az.clone(), b.clone()], vec![z.clone(), c.clone()], [cb.clone(), z.clone()], az, b.clone(), q)?,
        heine_form(vec![cb.clone(), b.clone() * z], vec![c.clone(), z.clone()], [abzc.clone(), b.clone()], b.clone() * z, cb.clone(), q)?,
        heine_form(vec![abzc.clone()], vec![z.clone()], [c.clone() / a, cb], c.clone(), abzc, q)?,
    ];
    let admissible: Vec<F> = forms.into_iter().flatten().collect();
    if admissible.is_empty() {
        return Err(Error::Unsupported("no transformed form reduces to a finite expression".into()));
    }
    Ok(admissible.iter().all(|v| *v == lhs))
}

/// Checks Sears's transformation of a balanced terminating ₄φ₃, with
/// `f = abc q^{1-n}/(de)`.
pub fn verify_sears<F: Field>(n: i64, a: &F, b: &F, c: &F, d: &F, e: &F, q: &F) -> Result<bool> {
    if n < 0 {
        return Err(Error::Domain("n must be non-negative".into()));
    }
    for v in [a, b, c, d, e] {
        if v.is_zero() {
            return Err(Error::Domain("Sears parameters must be nonzero".into()));
        }
    }
    let qn = power(q, -n)?;
    let f = a.clone() * b * c * power(q, 1 - n)? / (d.clone() * e);
    let ef = e.clone() * &f;
    let ef_ab = ef.clone() / (a.clone() * b);
    let ef_ac = ef.clone() / (a.clone() * c);
    let ef_abc = ef.clone() / (a.clone() * b * c);
    let lhs = phi_terminating(
        &[qn.clone(), a.clone(), b.clone(), c.clone()],
        &[d.clone(), e.clone(), f.clone()],
        q,
        q,
    )?;
    let pre_num = q_multi_pochhammer(&[a.clone(), ef_ab.clone(), ef_ac.clone()], q, n)?;
    let pre_den = q_multi_pochhammer(&[e.clone(), f.clone(), ef_abc.clone()], q, n)?;
    if pre_den.is_zero() {
        return Err(Error::Resonance("Sears prefactor denominator vanishes".into()));
    }
    let series = phi_terminating(
        &[qn, e.clone() / a, f / a, ef_abc],
        &[ef_ab, ef_ac, power(q, 1 - n)? / a],
        q,
        q,
    )?;
    Ok(lhs == pre_num / pre_den * series)
}
