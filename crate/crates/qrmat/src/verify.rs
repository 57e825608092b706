//! Identity suites: exact checks at seeded random points, with reports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{power, rat, EvalPoint, Field, Scalar};
use crate::loperator::{
    apply_l, auxiliary_r, bracket_x, central_element_commutes, horizontal_fields_commute, reduced_r1m, single_term_product,
    occupation_window, q_oscillator_relations_hold, quantum_states, rbar_i1_element, rll_mismatch, weyl_relations_hold,
    UvxParams, LVariant, RllVariant, WeylState,
};
use crate::qseries::{q_pochhammer, verify_heine_chain, verify_sears};
use crate::rmatrix::{
    block_keys, bracket, build_block, compositions, cyclic_bar, dot, factorized_element, reduction_lower,
    reduction_upper, slnfinal_element, slnfinal_summed, splits, sum_lt, tau, BlockKey, MultiIndex, NormalizationMode,
    Weight,
};
use crate::stochastic::{
    degenerate_s1, degenerate_s2, first_bad_column, path_mismatches, phi_raw, twist_exponent, StochasticPath,
};
use crate::weights3d::{r3d_element, r3d_element_signed, tetrahedron_mismatch, Triple};

/// Where the two sides of an identity first differ.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub key: String,
    pub lhs: Scalar,
    pub rhs: Scalar,
}

/// Outcome of one identity check on one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub params: String,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
    /// Set when the check could not be evaluated.
    pub error: Option<Error>,
    pub elapsed: Duration,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} [{}] {:.3}s", self.name, self.params, self.elapsed.as_secs_f64())?;
        if let Some(c) = &self.counterexample {
            write!(f, " at {}: lhs = {}, rhs = {}", c.key, c.lhs, c.rhs)?;
        }
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        Ok(())
    }
}

fn differ(key: impl fmt::Display, lhs: Scalar, rhs: Scalar) -> Option<Counterexample> {
    (lhs != rhs).then(|| Counterexample { key: key.to_string(), lhs, rhs })
}

fn check(name: &str, body: impl FnOnce(&mut Vec<String>) -> Result<Option<Counterexample>>) -> CheckReport {
    let start = Instant::now();
    let mut params = Vec::new();
    let out = body(&mut params);
    let (passed, counterexample, error) = match out {
        Ok(None) => (true, None, None),
        Ok(Some(c)) => (false, Some(c), None),
        Err(e) => (false, None, Some(e)),
    };
    CheckReport { name: name.into(), params: params.join(" "), passed, counterexample, error, elapsed: start.elapsed() }
}

/// First counterexample over `items` in order, evaluated in parallel.
fn par_first<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<Option<Counterexample>> + Sync + Send) -> Result<Option<Counterexample>> {
    let found: Vec<Result<Option<Counterexample>>> = items.par_iter().map(f).collect();
    for x in found {
        if let Some(c) = x? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// A difference between the two sides of the Yang–Baxter equation on one
/// input and output triple.
#[derive(Clone, Debug, PartialEq)]
pub struct YbeMismatch<F> {
    pub input: [MultiIndex; 3],
    pub output: [MultiIndex; 3],
    pub lhs: F,
    pub rhs: F,
}

impl<F> YbeMismatch<F> {
    fn key(&self) -> String {
        let [a, b, c] = &self.input;
        let [x, y, z] = &self.output;
        format!("{a} {b} {c} -> {x} {y} {z}")
    }
}

type Row<F> = Vec<(MultiIndex, MultiIndex, F)>;
type Rows<F> = crate::rmatrix::BlockRows<F>;
type Triples<F> = BTreeMap<[MultiIndex; 3], F>;

/// Row access for the triple product; full blocks and lazily evaluated
/// sectors both implement it.
trait RowSource<F> {
    fn row(&mut self, a: &MultiIndex, b: &MultiIndex) -> Result<Row<F>>;
}

impl<F: Field> RowSource<F> for &Rows<F> {
    fn row(&mut self, a: &MultiIndex, b: &MultiIndex) -> Result<Row<F>> {
        Ok(self.get(&(a.clone(), b.clone())).cloned().unwrap_or_default())
    }
}

fn bump<F: Field>(acc: &mut Triples<F>, key: [&MultiIndex; 3], v: F) {
    let [a, b, c] = key;
    *acc.entry([a.clone(), b.clone(), c.clone()]).or_insert_with(F::zero) += v;
}

/// `R12 R13 R23` and `R23 R13 R12` applied to `a ⊗ b ⊗ c`.
fn ybe_sides<F: Field>(
    r12: &mut impl RowSource<F>,
    r13: &mut impl RowSource<F>,
    r23: &mut impl RowSource<F>,
    [a, b, c]: [&MultiIndex; 3],
) -> Result<(Triples<F>, Triples<F>)> {
    let mut lhs = Triples::new();
    for (a1, b1, v1) in r12.row(a, b)? {
        for (a2, c1, v2) in r13.row(&a1, c)? {
            let v12 = v1.clone() * &v2;
            for (b2, c2, v3) in r23.row(&b1, &c1)? {
                bump(&mut lhs, [&a2, &b2, &c2], v12.clone() * &v3);
            }
        }
    }
    let mut rhs = Triples::new();
    for (b1, c1, v1) in r23.row(b, c)? {
        for (a1, c2, v2) in r13.row(a, &c1)? {
            let v12 = v1.clone() * &v2;
            for (a2, b2, v3) in r12.row(&a1, &b1)? {
                bump(&mut rhs, [&a2, &b2, &c2], v12.clone() * &v3);
            }
        }
    }
    lhs.retain(|_, v| !v.is_zero());
    rhs.retain(|_, v| !v.is_zero());
    Ok((lhs, rhs))
}

fn side_mismatches<F: Field>(input: [&MultiIndex; 3], lhs: &Triples<F>, rhs: &Triples<F>) -> Vec<YbeMismatch<F>> {
    let keys: BTreeSet<&[MultiIndex; 3]> = lhs.keys().chain(rhs.keys()).collect();
    keys.into_iter()
        .filter(|k| lhs.get(*k) != rhs.get(*k))
        .map(|k| YbeMismatch {
            input: input.map(|m| m.clone()),
            output: (*k).clone(),
            lhs: lhs.get(k).cloned().unwrap_or_else(F::zero),
            rhs: rhs.get(k).cloned().unwrap_or_else(F::zero),
        })
        .collect()
}

/// Every entry where `R_{I,J}(λ) R_{I,K}(λμ) R_{J,K}(μ)` and the reversed
/// product differ, sorted by input and output.
///
/// `fault` adds a value to one entry of the first factor.
#[allow(clippy::too_many_arguments)]
pub fn ybe_mismatches<F: Field>(
    n: usize,
    wi: i64,
    wj: i64,
    wk: i64,
    r: &F,
    lambda: &F,
    mu: &F,
    fault: Option<(&BlockKey, &F)>,
) -> Result<Vec<YbeMismatch<F>>> {
    let mode = NormalizationMode::BEqualsOne;
    let mut b12 = build_block(n, wi, wj, &EvalPoint::new(r.clone(), lambda.clone())?, mode)?;
    if let Some((key, delta)) = fault {
        let v = b12.get(key) + delta;
        if v.is_zero() {
            b12.entries.remove(key);
        } else {
            b12.entries.insert(key.clone(), v);
        }
    }
    let r12 = b12.rows();
    let r13 = build_block(n, wi, wk, &EvalPoint::new(r.clone(), lambda.clone() * mu)?, mode)?.rows();
    let r23 = build_block(n, wj, wk, &EvalPoint::new(r.clone(), mu.clone())?, mode)?.rows();
    let mut inputs = Vec::new();
    for a in compositions(n - 1, wi) {
        for b in compositions(n - 1, wj) {
            for c in compositions(n - 1, wk) {
                inputs.push([a.clone(), b.clone(), c]);
            }
        }
    }
    let found: Vec<Result<Vec<YbeMismatch<F>>>> = inputs
        .par_iter()
        .map(|[a, b, c]| {
            let (lhs, rhs) = ybe_sides(&mut &r12, &mut &r13, &mut &r23, [a, b, c])?;
            Ok(side_mismatches([a, b, c], &lhs, &rhs))
        })
        .collect();
    let mut out = Vec::new();
    for f in found {
        out.extend(f?);
    }
    Ok(out)
}

fn ybe_report(name: &str, params: String, start: Instant, found: Vec<YbeMismatch<Scalar>>) -> CheckReport {
    let counterexample =
        found.into_iter().next().map(|m| Counterexample { key: m.key(), lhs: m.lhs, rhs: m.rhs });
    CheckReport {
        name: name.into(),
        params,
        passed: counterexample.is_none(),
        counterexample,
        error: None,
        elapsed: start.elapsed(),
    }
}

/// Full-matrix Yang–Baxter check on `V_I ⊗ V_J ⊗ V_K` at `q = r²`.
#[allow(clippy::too_many_arguments)]
pub fn ybe_full(n: usize, wi: i64, wj: i64, wk: i64, r: &Scalar, lambda: &Scalar, mu: &Scalar) -> Result<CheckReport> {
    ybe_full_with_fault(n, wi, wj, wk, r, lambda, mu, None)
}

/// [`ybe_full`] with one entry of `R_{I,J}(λ)` shifted by `delta`.
#[allow(clippy::too_many_arguments)]
pub fn ybe_full_with_fault(
    n: usize,
    wi: i64,
    wj: i64,
    wk: i64,
    r: &Scalar,
    lambda: &Scalar,
    mu: &Scalar,
    fault: Option<(&BlockKey, &Scalar)>,
) -> Result<CheckReport> {
    let start = Instant::now();
    let found = ybe_mismatches(n, wi, wj, wk, r, lambda, mu, fault)?;
    let mut params = format!("n={n} I={wi} J={wj} K={wk} r={r} lambda={lambda} mu={mu}");
    if let Some((k, d)) = fault {
        params += &format!(" fault=[{k}]+{d}");
    }
    Ok(ybe_report("ybe-full", params, start, found))
}

/// An off-diagonal entry of the `I, J` block, used for fault injection.
pub fn fault_key(n: usize, wi: i64, wj: i64) -> Option<BlockKey> {
    block_keys(n, wi, wj).into_iter().find(|k| k.i != k.ip)
}

fn bounded<F>(w: &Weight<F>, v: &MultiIndex) -> bool {
    match w {
        Weight::Int(m) => v.total() <= *m,
        Weight::Generic(_) => true,
    }
}

/// One factor of the sector product, evaluated row by row on demand.
struct SectorFactor<'a, F> {
    n: usize,
    wi: &'a Weight<F>,
    wj: &'a Weight<F>,
    pt: EvalPoint<F>,
    cache: HashMap<(MultiIndex, MultiIndex), Row<F>>,
}

impl<'a, F: Field> SectorFactor<'a, F> {
    fn new(n: usize, wi: &'a Weight<F>, wj: &'a Weight<F>, r: &F, lambda: F) -> Result<Self> {
        Ok(SectorFactor { n, wi, wj, pt: EvalPoint::new(r.clone(), lambda)?, cache: HashMap::new() })
    }
}

impl<F: Field> RowSource<F> for SectorFactor<'_, F> {
    fn row(&mut self, a: &MultiIndex, b: &MultiIndex) -> Result<Row<F>> {
        let key = (a.clone(), b.clone());
        if let Some(r) = self.cache.get(&key) {
            return Ok(r.clone());
        }
        let mut row = Vec::new();
        for (ap, bp) in splits(&a.checked_add(b)) {
            if !bounded(self.wi, &ap) || !bounded(self.wj, &bp) {
                continue;
            }
            let v = slnfinal_element(self.n, self.wi, self.wj, a, b, &ap, &bp, &self.pt, NormalizationMode::BEqualsOne)?;
            if !v.is_zero() {
                row.push((ap, bp, v));
            }
        }
        self.cache.insert(key, row.clone());
        Ok(row)
    }
}

/// Both sides of the Yang–Baxter equation on one input triple, with weights
/// that may be generic. Every intermediate index is bounded by the sector
/// total.
pub fn ybe_sector_sides<F: Field>(
    n: usize,
    weights: [&Weight<F>; 3],
    input: [&MultiIndex; 3],
    r: &F,
    lambda: &F,
    mu: &F,
) -> Result<(Triples<F>, Triples<F>)> {
    for (w, v) in weights.iter().zip(input) {
        if v.len() + 1 != n {
            return Err(Error::Domain(format!("index {v} does not match rank {n}")));
        }
        if !bounded(w, v) {
            return Err(Error::Domain(format!("index {v} exceeds weight {w}")));
        }
    }
    let mut f12 = SectorFactor::new(n, weights[0], weights[1], r, lambda.clone())?;
    let mut f13 = SectorFactor::new(n, weights[0], weights[2], r, lambda.clone() * mu)?;
    let mut f23 = SectorFactor::new(n, weights[1], weights[2], r, mu.clone())?;
    ybe_sides(&mut f12, &mut f13, &mut f23, input)
}

/// Fixed-sector Yang–Baxter check. With `output` set only that entry is
/// compared; otherwise the whole image of `input` is.
#[allow(clippy::too_many_arguments)]
pub fn ybe_sector(
    n: usize,
    weights: [&Weight<Scalar>; 3],
    input: [&MultiIndex; 3],
    output: Option<[&MultiIndex; 3]>,
    r: &Scalar,
    lambda: &Scalar,
    mu: &Scalar,
) -> Result<CheckReport> {
    let start = Instant::now();
    let [a, b, c] = input;
    let [wi, wj, wk] = weights;
    let mut params = format!("n={n} I={wi} J={wj} K={wk} in={a} {b} {c}");
    if let Some([x, y, z]) = output {
        params += &format!(" out={x} {y} {z}");
    }
    params += &format!(" r={r} lambda={lambda} mu={mu}");
    if let Some(out) = output {
        let total = |v: [&MultiIndex; 3]| v[0].checked_add(v[1]).checked_add(v[2]);
        if out.iter().any(|v| v.len() + 1 != n) {
            return Err(Error::Domain(format!("output indices do not match rank {n}")));
        }
        if total(out) != total(input) {
            return Ok(ybe_report("ybe-sector", params, start, Vec::new()));
        }
    }
    let (lhs, rhs) = ybe_sector_sides(n, weights, input, r, lambda, mu)?;
    let mut found = side_mismatches(input, &lhs, &rhs);
    if let Some(out) = output {
        found.retain(|m| m.output.iter().zip(out).all(|(x, y)| x == y));
    }
    Ok(ybe_report("ybe-sector", params, start, found))
}

/// Grid overrides and sampling for [`run_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random points per grid cell.
    pub samples: usize,
    pub rank: Option<usize>,
    pub weight_i: Option<i64>,
    pub weight_j: Option<i64>,
    /// A fixed `(r, λ)` replacing the sampled point, with `q = r²`.
    pub point: Option<(Scalar, Scalar)>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 1, samples: 3, rank: None, weight_i: None, weight_j: None, point: None }
    }
}

impl SuiteConfig {
    fn ranks(&self, lo: usize, hi: usize) -> Vec<usize> {
        self.rank.map_or_else(|| (lo..=hi).collect(), |n| vec![n])
    }

    fn weights(&self, hi: i64) -> Vec<(i64, i64)> {
        let is: Vec<i64> = self.weight_i.map_or_else(|| (0..=hi).collect(), |w| vec![w]);
        let js: Vec<i64> = self.weight_j.map_or_else(|| (0..=hi).collect(), |w| vec![w]);
        is.iter().flat_map(|&i| js.iter().map(move |&j| (i, j))).collect()
    }

    fn grid(&self, lo: usize, hi: usize, whi: i64) -> Vec<(usize, i64, i64)> {
        let w = self.weights(whi);
        self.ranks(lo, hi).into_iter().flat_map(|n| w.iter().map(move |&(i, j)| (n, i, j))).collect()
    }
}

/// Names accepted by [`run_suite`], in the order `check all` runs them.
pub const SUITES: [&str; 8] =
    ["tetrahedron", "ybe", "stochasticity", "factorization", "symmetries", "reductions", "rll", "qseries"];

const MAX_REDRAWS: usize = 64;

/// Seeded source of small rationals.
struct Sampler(ChaCha8Rng);

impl Sampler {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler(rng)
    }

    /// A rational in `(0, 1)` with denominator at most 97.
    fn unit(&mut self) -> Scalar {
        let d = self.0.random_range(2..=97i64);
        rat(self.0.random_range(1..d), d)
    }

    /// A positive rational with numerator and denominator at most 97.
    fn positive(&mut self) -> Scalar {
        rat(self.0.random_range(1..=97i64), self.0.random_range(1..=97i64))
    }

    fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.0.random_range(lo..=hi)
    }
}

/// Runs `f` on `count` drawn values (or once on `fixed`), redrawing any value
/// rejected by `retry`. Accepted values are labelled into `params`.
#[allow(clippy::too_many_arguments)]
fn sampled<T>(
    s: &mut Sampler,
    params: &mut Vec<String>,
    fixed: Option<T>,
    count: usize,
    draw: impl Fn(&mut Sampler) -> T,
    label: impl Fn(&T) -> String,
    retry: impl Fn(&Error) -> bool,
    mut f: impl FnMut(&T) -> Result<Option<Counterexample>>,
) -> Result<Option<Counterexample>> {
    if let Some(t) = fixed {
        params.push(label(&t));
        return f(&t);
    }
    for _ in 0..count {
        let mut redraws = 0;
        loop {
            let t = draw(s);
            match f(&t) {
                Err(e) if retry(&e) && redraws < MAX_REDRAWS => redraws += 1,
                Err(e) => return Err(e),
                Ok(found) => {
                    params.push(label(&t));
                    if found.is_some() {
                        return Ok(found);
                    }
                    break;
                }
            }
        }
    }
    Ok(None)
}

fn resonant(e: &Error) -> bool {
    e.is_resonance()
}

type Job<'a> = Box<dyn Fn(&mut Sampler) -> CheckReport + Send + Sync + 'a>;

fn run_jobs(seed: u64, jobs: Vec<Job<'_>>) -> Vec<CheckReport> {
    jobs.par_iter().enumerate().map(|(k, job)| job(&mut Sampler::new(seed, k as u64))).collect()
}

/// Runs one named suite; every grid cell yields one report, in a fixed
/// order determined by the config.
pub fn run_suite(name: &str, config: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let jobs = match name {
        "tetrahedron" => tetrahedron_jobs(config),
        "ybe" => ybe_jobs(config),
        "stochasticity" => stochasticity_jobs(config),
        "factorization" => factorization_jobs(config),
        "symmetries" => symmetry_jobs(config),
        "reductions" => reduction_jobs(config),
        "rll" => rll_jobs(config),
        "qseries" => qseries_jobs(config),
        _ => return Err(Error::Domain(format!("unknown suite {name:?}; expected one of {}", SUITES.join(", ")))),
    };
    Ok(run_jobs(config.seed, jobs))
}

fn point_label((r, l): &(Scalar, Scalar)) -> String {
    format!("(r={r} lambda={l})")
}

fn draw_point(s: &mut Sampler) -> (Scalar, Scalar) {
    (s.unit(), s.positive())
}

fn int_entry(n: usize, wi: i64, wj: i64, k: &BlockKey, pt: &EvalPoint<Scalar>) -> Result<Scalar> {
    slnfinal_element(n, &Weight::Int(wi), &Weight::Int(wj), &k.i, &k.j, &k.ip, &k.jp, pt, NormalizationMode::BEqualsOne)
}

fn tetrahedron_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    let max = cfg.weight_i.unwrap_or(2);
    let qs = match &cfg.point {
        Some((r, _)) => vec![r.clone() * r],
        None => vec![rat(1, 2), rat(2, 3)],
    };
    qs.into_iter()
        .map(|q| -> Job<'_> {
            Box::new(move |_| {
                check("tetrahedron", |p| {
                    p.push(format!("max_occupation={max} q={q}"));
                    Ok(tetrahedron_mismatch(max, &q)?.map(|m| Counterexample {
                        key: format!("{:?} -> {:?}", m.start, m.end),
                        lhs: m.lhs,
                        rhs: m.rhs,
                    }))
                })
            })
        })
        .collect()
}

/// The full-matrix grid of `(n; I, J, K)` cells.
pub const YBE_GRID: [(usize, i64, i64, i64); 7] =
    [(2, 1, 1, 1), (2, 2, 2, 1), (2, 2, 2, 2), (3, 1, 1, 1), (3, 2, 1, 1), (3, 2, 2, 2), (4, 1, 1, 1)];

fn ybe_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    let overridden = cfg.rank.is_some() || cfg.weight_i.is_some() || cfg.weight_j.is_some();
    let cells: Vec<(usize, i64, i64, i64)> = if overridden {
        let wj = cfg.weight_j.unwrap_or(1);
        vec![(cfg.rank.unwrap_or(2), cfg.weight_i.unwrap_or(1), wj, wj)]
    } else {
        YBE_GRID.to_vec()
    };
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for (n, wi, wj, wk) in cells {
        jobs.push(Box::new(move |s| {
            check("ybe-full", |p| {
                p.push(format!("n={n} I={wi} J={wj} K={wk}"));
                let fixed = cfg.point.as_ref().map(|(r, l)| (r.clone(), l.clone(), s.positive()));
                sampled(
                    s,
                    p,
                    fixed,
                    cfg.samples,
                    |s| (s.unit(), s.positive(), s.positive()),
                    |(r, l, m)| format!("(r={r} lambda={l} mu={m})"),
                    resonant,
                    |(r, l, m)| {
                        let found = ybe_mismatches(n, wi, wj, wk, r, l, m, None)?;
                        Ok(found.into_iter().next().map(|m| Counterexample { key: m.key(), lhs: m.lhs, rhs: m.rhs }))
                    },
                )
            })
        }));
    }
    let sector_cells: Vec<(usize, [Option<i64>; 3])> = match cfg.rank {
        Some(n) => vec![(n, [None; 3])],
        None => vec![(2, [None; 3]), (3, [None; 3]), (3, [Some(2), None, Some(1)])],
    };
    for (n, ints) in sector_cells {
        jobs.push(Box::new(move |s| check("ybe-sector", |p| sector_cell(cfg, s, p, n, ints, 3))));
    }
    jobs.push(Box::new(|_| fault_injection_report()));
    jobs
}

fn sector_cell(
    cfg: &SuiteConfig,
    s: &mut Sampler,
    p: &mut Vec<String>,
    n: usize,
    ints: [Option<i64>; 3],
    max_total: i64,
) -> Result<Option<Counterexample>> {
    let shape: Vec<String> = ints.iter().map(|w| w.map_or("generic".to_string(), |v| v.to_string())).collect();
    p.push(format!("n={n} weights={} max_total={max_total}", shape.join(",")));
    let draw = |s: &mut Sampler| {
        let ws: Vec<Weight<Scalar>> = ints.iter().map(|w| w.map_or_else(|| Weight::Generic(s.positive()), Weight::Int)).collect();
        let (r, l) = cfg.point.clone().unwrap_or_else(|| draw_point(s));
        (ws, r, l, s.positive())
    };
    let label = |(ws, r, l, m): &(Vec<Weight<Scalar>>, Scalar, Scalar, Scalar)| {
        let ws: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
        format!("(g={} r={r} lambda={l} mu={m})", ws.join(","))
    };
    sampled(s, p, None, cfg.samples, draw, label, resonant, |(ws, r, l, m)| {
        let mut inputs = Vec::new();
        for a in compositions(n - 1, max_total) {
            for b in compositions(n - 1, max_total - a.total()) {
                for c in compositions(n - 1, max_total - a.total() - b.total()) {
                    if bounded(&ws[0], &a) && bounded(&ws[1], &b) && bounded(&ws[2], &c) {
                        inputs.push([a.clone(), b.clone(), c]);
                    }
                }
            }
        }
        par_first(&inputs, |[a, b, c]| {
            let (lhs, rhs) = ybe_sector_sides(n, [&ws[0], &ws[1], &ws[2]], [a, b, c], r, l, m)?;
            Ok(side_mismatches([a, b, c], &lhs, &rhs)
                .into_iter()
                .next()
                .map(|m| Counterexample { key: m.key(), lhs: m.lhs, rhs: m.rhs }))
        })
    })
}

/// Runs the full check with one perturbed entry; passes when the harness
/// reports the fault.
pub fn fault_injection_report() -> CheckReport {
    check("ybe-fault-injection", |p| {
        let (n, w) = (2, 1);
        let (r, l, m) = (rat(1, 2), rat(1, 3), rat(1, 5));
        let key = fault_key(n, w, w).ok_or_else(|| Error::Domain("block has no off-diagonal entry".into()))?;
        let delta = rat(1, 1);
        p.push(format!("n={n} I=J=K={w} r={r} lambda={l} mu={m} fault=[{key}]+{delta}"));
        let report = ybe_full_with_fault(n, w, w, w, &r, &l, &m, Some((&key, &delta)))?;
        if !report.passed && report.counterexample.is_some() {
            return Ok(None);
        }
        let orig = int_entry(n, w, w, &key, &EvalPoint::new(r, l)?)?;
        Ok(Some(Counterexample { key: format!("undetected fault at {key}"), lhs: orig.clone() + &delta, rhs: orig }))
    })
}

fn stochasticity_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for (n, wi, wj) in cfg.grid(2, 3, 2) {
        jobs.push(Box::new(move |s| {
            check("stochastic-columns", |p| {
                p.push(format!("n={n} I={wi} J={wj}"));
                sampled(s, p, cfg.point.clone(), cfg.samples, draw_point, point_label, resonant, |(r, l)| {
                    let pt = EvalPoint::new(r.clone(), l.clone())?;
                    for (path, tag) in [(StochasticPath::Twisted, "twisted"), (StochasticPath::Factorized, "factorized")] {
                        if let Some(((ip, jp), v)) = first_bad_column(n, wi, wj, &pt, path)? {
                            return Ok(differ(format!("{tag} column {ip} {jp}"), v, rat(1, 1)));
                        }
                    }
                    Ok(path_mismatches(n, wi, wj, &pt)?
                        .into_iter()
                        .next()
                        .and_then(|(k, a, b)| differ(format!("twisted vs factorized at {k}"), a, b)))
                })
            })
        }));
    }
    jobs.push(Box::new(|s| check("phi-sum-rule", |p| phi_sum_rule(s, p, 100))));
    jobs.push(Box::new(|s| check("phi-symmetry", |p| phi_symmetry(s, p, 200))));
    jobs
}

fn boxes(beta: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &b in beta {
        out = out.into_iter().flat_map(|v: Vec<i64>| (0..=b).map(move |g| [v.clone(), vec![g]].concat())).collect();
    }
    out
}

fn draw_vec(s: &mut Sampler) -> Vec<i64> {
    let len = s.int(1, 3) as usize;
    (0..len).map(|_| s.int(0, 3)).collect()
}

fn phi_sum_rule(s: &mut Sampler, p: &mut Vec<String>, count: usize) -> Result<Option<Counterexample>> {
    p.push(format!("samples={count}"));
    let mut quiet = Vec::new();
    sampled(
        s,
        &mut quiet,
        None,
        count,
        |s| (draw_vec(s), s.unit(), s.unit(), s.unit()),
        |_| String::new(),
        resonant,
        |(beta, l, m, q)| {
            let mut sum = rat(0, 1);
            for g in boxes(beta) {
                sum += phi_raw(&g, beta, l, m, q)?;
            }
            Ok(differ(format!("beta={beta:?} lambda={l} mu={m} q={q}"), sum, rat(1, 1)))
        },
    )
}

fn phi_symmetry(s: &mut Sampler, p: &mut Vec<String>, count: usize) -> Result<Option<Counterexample>> {
    p.push(format!("samples={count}"));
    let mut quiet = Vec::new();
    sampled(
        s,
        &mut quiet,
        None,
        count,
        |s| {
            let m = draw_vec(s);
            let j: Vec<i64> = m.iter().map(|&x| s.int(0, x)).collect();
            (m, j, s.unit(), s.unit(), s.unit())
        },
        |_| String::new(),
        resonant,
        |(m, j, l, mu, q)| {
            let mj: Vec<i64> = m.iter().zip(j).map(|(a, b)| a - b).collect();
            let lhs = phi_raw(&mj, m, &(mu.clone() / l), mu, q)?;
            let e = sum_lt(j, m) - sum_lt(m, j);
            let rhs = phi_raw(j, m, l, mu, q)?
                * power(q, e)?
                * power(mu, -j.iter().sum::<i64>())?
                * power(l, m.iter().sum::<i64>())?;
            Ok(differ(format!("m={m:?} j={j:?} lambda={l} mu={mu} q={q}"), lhs, rhs))
        },
    )
}

fn factorization_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    cfg.grid(2, 3, 2)
        .into_iter()
        .map(|(n, wi, wj)| -> Job<'_> {
            Box::new(move |s| {
                check("factorization", |p| {
                    p.push(format!("n={n} I={wi} J={wj}"));
                    let keys = block_keys(n, wi, wj);
                    let (gi, gj) = (Weight::Int(wi), Weight::Int(wj));
                    sampled(s, p, cfg.point.clone(), cfg.samples, draw_point, point_label, resonant, |(r, l)| {
                        let pt = EvalPoint::new(r.clone(), l.clone())?;
                        par_first(&keys, |k| {
                            let lhs = factorized_element(&gi, &gj, &k.i, &k.j, &k.ip, &k.jp, &pt)?;
                            Ok(differ(k, lhs, int_entry(n, wi, wj, k, &pt)?))
                        })
                    })
                })
            })
        })
        .collect()
}

/// Entry-wise symmetries of the R-matrix at integer weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// Swap of the two spaces combined with index reversal.
    Reversal,
    /// Exchange of inputs and outputs combined with index reversal.
    Transposition,
    /// Cyclic shift of the lifted indices.
    Cyclic,
    /// `q → q⁻¹`, `λ → λ⁻¹`.
    QInversion,
}

impl Symmetry {
    pub const ALL: [Symmetry; 4] = [Symmetry::Reversal, Symmetry::Transposition, Symmetry::Cyclic, Symmetry::QInversion];

    pub fn name(&self) -> &'static str {
        match self {
            Symmetry::Reversal => "reversal-symmetry",
            Symmetry::Transposition => "transposition-symmetry",
            Symmetry::Cyclic => "cyclic-symmetry",
            Symmetry::QInversion => "q-inversion-symmetry",
        }
    }
}

fn lifted_poch_ratio(q2: &Scalar, num: [&MultiIndex; 2], den: [&MultiIndex; 2], w: [i64; 2]) -> Result<Scalar> {
    let mut v = rat(1, 1);
    for s in 0..2 {
        let (a, b) = (num[s].lift(w[s])?, den[s].lift(w[s])?);
        for (x, y) in a.parts().iter().zip(b.parts()) {
            v *= q_pochhammer(q2, q2, *x)? / q_pochhammer(q2, q2, *y)?;
        }
    }
    Ok(v)
}

/// Left and right sides of one symmetry on the entry `key`.
pub fn symmetry_sides(
    sym: Symmetry,
    n: usize,
    wi: i64,
    wj: i64,
    key: &BlockKey,
    pt: &EvalPoint<Scalar>,
) -> Result<(Scalar, Scalar)> {
    let BlockKey { i, j, ip, jp } = key;
    let lhs = int_entry(n, wi, wj, key, pt)?;
    let q = pt.q();
    let wpow = power(pt.w(), ip.total() - i.total())?;
    let rhs = match sym {
        Symmetry::Reversal => {
            let k = BlockKey { i: tau(j), j: tau(i), ip: tau(jp), jp: tau(ip) };
            wpow * int_entry(n, wj, wi, &k, pt)?
        }
        Symmetry::Transposition => {
            let k = BlockKey { i: tau(ip), j: tau(jp), ip: tau(i), jp: tau(j) };
            let e = 2 * bracket(ip, jp, wi, wj) - 2 * bracket(i, j, wi, wj);
            let q2 = q.clone() * &q;
            power(&q, e)? * wpow * lifted_poch_ratio(&q2, [ip, jp], [i, j], [wi, wj])? * int_entry(n, wi, wj, &k, pt)?
        }
        Symmetry::Cyclic => {
            let k = BlockKey {
                i: cyclic_bar(i, wi)?,
                j: cyclic_bar(j, wj)?,
                ip: cyclic_bar(ip, wi)?,
                jp: cyclic_bar(jp, wj)?,
            };
            wpow * int_entry(n, wi, wj, &k, pt)?
        }
        Symmetry::QInversion => {
            let k = BlockKey { i: j.clone(), j: i.clone(), ip: jp.clone(), jp: ip.clone() };
            let inv = pt.inverted()?;
            let e = bracket(i, j, wi, wj) - bracket(ip, jp, wi, wj);
            power(&inv.q(), e)? * int_entry(n, wj, wi, &k, &inv)?
        }
    };
    Ok((lhs, rhs))
}

fn symmetry_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for (n, wi, wj) in cfg.grid(2, 3, 2) {
        for sym in Symmetry::ALL {
            jobs.push(Box::new(move |s| {
                check(sym.name(), |p| {
                    p.push(format!("n={n} I={wi} J={wj}"));
                    let keys = block_keys(n, wi, wj);
                    sampled(s, p, cfg.point.clone(), cfg.samples, draw_point, point_label, resonant, |(r, l)| {
                        let pt = EvalPoint::new(r.clone(), l.clone())?;
                        par_first(&keys, |k| {
                            let (a, b) = symmetry_sides(sym, n, wi, wj, k, &pt)?;
                            Ok(differ(k, a, b))
                        })
                    })
                })
            }));
        }
        if wi == wj {
            jobs.push(Box::new(move |s| {
                check("permutation-point", |p| {
                    p.push(format!("n={n} I=J={wi}"));
                    let r = cfg.point.as_ref().map_or_else(|| s.unit(), |(r, _)| r.clone());
                    p.push(format!("r={r}"));
                    permutation_mismatch(n, wi, &r)
                })
            }));
        }
    }
    jobs.push(Box::new(move |s| {
        check("3d-symmetries", |p| {
            p.push("max_index=3".into());
            let fixed = cfg.point.as_ref().map(|(r, _)| r.clone() * r);
            sampled(s, p, fixed, cfg.samples, |s| s.unit(), |q| format!("q={q}"), resonant, |q| symmetries_3d(3, q))
        })
    }));
    jobs
}

/// First entry where `R_{I,I}(1)` differs from the permutation matrix.
pub fn permutation_mismatch(n: usize, w: i64, r: &Scalar) -> Result<Option<Counterexample>> {
    let pt = EvalPoint::new(r.clone(), rat(1, 1))?;
    let keys = block_keys(n, w, w);
    par_first(&keys, |k| {
        let want = if k.i == k.jp && k.j == k.ip { rat(1, 1) } else { rat(0, 1) };
        Ok(differ(k, int_entry(n, w, w, k, &pt)?, want))
    })
}

/// Checks the reflection, the two transpositions, the full inversion and
/// the `q → q⁻¹` relation of the 3D weights for indices up to `max`.
pub fn symmetries_3d(max: i64, q: &Scalar) -> Result<Option<Counterexample>> {
    let q2 = q.clone() * q;
    let qi = q.inv()?;
    let pq = |k: i64| q_pochhammer(&q2, &q2, k);
    let t = Triple::new;
    for n1 in 0..=max {
        for n2 in 0..=max {
            for n3 in 0..=max {
                for a1 in 0..=max {
                    for a2 in 0..=max {
                        for a3 in 0..=max {
                            let (x, y) = (t(n1, n2, n3), t(a1, a2, a3));
                            let v = r3d_element(x, y, q)?;
                            let key = |tag: &str| format!("{tag} {x:?} -> {y:?}");
                            let sides = [
                                ("reflection", r3d_element(t(n3, n2, n1), t(a3, a2, a1), q)?),
                                (
                                    "transposition",
                                    power(q, n3 - n2 + n1 * n1 - a1 * a1)? * pq(a1)? / pq(n1)?
                                        * r3d_element(t(a1, n3, n2), t(n1, a3, a2), q)?,
                                ),
                                (
                                    "second transposition",
                                    power(q, n1 - n2 + n3 * n3 - a3 * a3)? * pq(a3)? / pq(n3)?
                                        * r3d_element(t(n2, n1, a3), t(a2, a1, n3), q)?,
                                ),
                                (
                                    "inversion",
                                    power(q, (n3 + a3 + 2 * a1 - 2 * n2 + 1) * (n1 - a1))?
                                        * pq(a1)? * pq(a2)? * pq(a3)?
                                        / (pq(n1)? * pq(n2)? * pq(n3)?)
                                        * r3d_element(y, x, q)?,
                                ),
                            ];
                            for (tag, rhs) in sides {
                                if let Some(c) = differ(key(tag), v.clone(), rhs) {
                                    return Ok(Some(c));
                                }
                            }
                            let lhs = r3d_element(x, y, &qi)?;
                            let rhs = power(q, (n1 - a2) * (n2 - a2 - 1))?
                                * r3d_element_signed(t(n1, n2, -a3 - 1), t(a1, a2, -n3 - 1), q)?;
                            if let Some(c) = differ(key("q-inversion"), lhs, rhs) {
                                return Ok(Some(c));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Compares both closed reductions with the summed form where it is finite,
/// with the degenerate stochastic matrices, and the upper one with the
/// single-term product.
pub fn reduction_mismatch(n: usize, wi: i64, wj: i64, r: &Scalar) -> Result<(Option<Counterexample>, usize, usize)> {
    let q = r.clone() * r;
    let q2 = q.clone() * &q;
    let (gi, gj) = (Weight::Int(wi), Weight::Int(wj));
    let mu = power(&q, -2 * wi)?;
    let nu = power(&q, -2 * wj)?;
    let keys = block_keys(n, wi, wj);
    let mut direct = 0;
    let mut total = 0;
    for lower in [true, false] {
        if (lower && wj > wi) || (!lower && wi > wj) {
            continue;
        }
        let e = if lower { wi - wj } else { wj - wi };
        let pt = EvalPoint::new(r.clone(), power(r, e)?)?;
        let found: Vec<Result<(Option<Counterexample>, bool)>> = keys
            .par_iter()
            .map(|k| {
                let tag = if lower { "lower" } else { "upper" };
                let red = if lower {
                    reduction_lower(n, &gi, &gj, &k.i, &k.j, &k.ip, &k.jp, &q)?
                } else {
                    reduction_upper(n, &gi, &gj, &k.i, &k.j, &k.ip, &k.jp, &q)?
                };
                let disp = int_entry(n, wi, wj, k, &pt)?;
                if let Some(c) = differ(format!("{tag} dispatch {k}"), disp, red.clone()) {
                    return Ok((Some(c), false));
                }
                let tw = power(&q, twist_exponent(wi, wj, &k.i, &k.j, &k.ip, &k.jp))?;
                let deg = if lower {
                    degenerate_s2(n, &mu, &nu, &k.i, &k.j, &k.ip, &k.jp, &q2)?
                } else {
                    degenerate_s1(n, &mu, &nu, &k.i, &k.j, &k.ip, &k.jp, &q2)?
                };
                if let Some(c) = differ(format!("{tag} degenerate stochastic {k}"), tw * &red, deg) {
                    return Ok((Some(c), false));
                }
                if !lower {
                    let (iv, jv, ipv, jpv) = (k.i.lift(wi)?, k.j.lift(wj)?, k.ip.lift(wi)?, k.jp.lift(wj)?);
                    let e = dot(ipv.parts(), jpv.parts()) - dot(iv.parts(), jv.parts());
                    let t = power(&q, e)? * single_term_product(wi, wj, &ipv, &jpv, &iv, &jv, &q)?;
                    if let Some(c) = differ(format!("single-term product {k}"), red.clone(), t) {
                        return Ok((Some(c), false));
                    }
                }
                let mode = NormalizationMode::BEqualsOne;
                match slnfinal_summed(n, &gi, &gj, &k.i, &k.j, &k.ip, &k.jp, &pt, mode) {
                    Ok(v) => Ok((differ(format!("{tag} summed {k}"), v, red), true)),
                    Err(e) if e.is_resonance() => Ok((None, false)),
                    Err(e) => Err(e),
                }
            })
            .collect();
        for f in found {
            let (c, used) = f?;
            total += 1;
            direct += used as usize;
            if c.is_some() {
                return Ok((c, direct, total));
            }
        }
    }
    Ok((None, direct, total))
}

fn reduction_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    cfg.grid(2, 3, 3)
        .into_iter()
        .map(|(n, wi, wj)| -> Job<'_> {
            Box::new(move |s| {
                check("reductions", |p| {
                    p.push(format!("n={n} I={wi} J={wj}"));
                    let fixed = cfg.point.as_ref().map(|(r, _)| r.clone());
                    let mut counts = (0, 0);
                    let out = sampled(s, p, fixed, cfg.samples, |s| s.unit(), |r| format!("r={r}"), resonant, |r| {
                        let (c, d, t) = reduction_mismatch(n, wi, wj, r)?;
                        counts = (counts.0 + d, counts.1 + t);
                        Ok(c)
                    })?;
                    p.push(format!("summed_comparisons={}/{}", counts.0, counts.1));
                    Ok(out)
                })
            })
        })
        .collect()
}

/// Compares `R̄_{1,J}` with the σ-normalized entries and the reduced form.
pub fn rank_one_mismatch(n: usize, wj: i64, pt: &EvalPoint<Scalar>) -> Result<Option<Counterexample>> {
    let gj = Weight::Int(wj);
    let lam = pt.lambda()?.clone();
    let r = pt.r()?.clone();
    let q = pt.q();
    let z = power(&lam, -2)?;
    let states = quantum_states(n, wj);
    let mut cases = Vec::new();
    for a in 1..=n {
        for b in 1..=n {
            for j in &states {
                cases.push((a, b, j.clone()));
            }
        }
    }
    par_first(&cases, |(a, b, j)| {
        let ea = MultiIndex::unit(n, *a)?;
        let eb = MultiIndex::unit(n, *b)?;
        let Some(k) = ea.checked_add(j).checked_sub(&eb) else { return Ok(None) };
        let rb = rbar_i1_element(n, &gj, *a, *b, j, &k, pt)?;
        let s = slnfinal_element(
            n,
            &Weight::Int(1),
            &gj,
            &ea.project(),
            &j.project(),
            &eb.project(),
            &k.project(),
            pt,
            NormalizationMode::SigmaRenormalized,
        )?;
        let key = format!("a={a} b={b} j={j} k={k}");
        if let Some(c) = differ(format!("sigma-normalized {key}"), rb.clone(), s) {
            return Ok(Some(c));
        }
        let pre = bracket_x(&(lam.clone() * &r * power(&r, wj)?))? * power(&q, k.parts()[b - 1] - j.parts()[a - 1])?;
        let km = reduced_r1m(n, &gj, &z, *b, &k, *a, j, &q)?;
        Ok(differ(format!("reduced form {key}"), rb, pre * km))
    })
}

/// Compares the (u, v, x) operator with the reduced stochastic one and checks
/// that its horizontal fields commute with the auxiliary R-matrix.
pub fn uvx_mismatch(n: usize, roots: [&Scalar; 3], q: &Scalar, window: i64) -> Result<Option<Counterexample>> {
    let [s, t, w] = roots;
    let p = UvxParams::from_roots(n, s, t, w, q)?;
    let reduced = LVariant::StochasticReduced { mu: p.mu.clone(), c: p.c.clone() };
    let uvx = LVariant::Uvx(p.clone());
    for st in occupation_window(n - 1, window) {
        let ket = WeylState(st.clone());
        for a in 1..=n {
            for b in 1..=n {
                let (g, og) = apply_l(a, b, &uvx, &ket, q)?;
                let (r, or) = apply_l(a, b, &reduced, &ket, q)?;
                if og != or {
                    let key = format!("target of L[{a}{b}] on {st}");
                    return Ok(Some(Counterexample { key, lhs: g, rhs: p.fields[a - 1].clone() * r }));
                }
                if let Some(c) = differ(format!("L[{a}{b}] on {st}"), g, p.fields[a - 1].clone() * r) {
                    return Ok(Some(c));
                }
            }
        }
    }
    let aux = auxiliary_r(n, &p.x, q, true)?;
    if !horizontal_fields_commute(&aux, &p.fields) {
        return Ok(Some(Counterexample { key: "horizontal fields vs auxiliary R".into(), lhs: rat(1, 1), rhs: rat(0, 1) }));
    }
    Ok(None)
}

fn rll_counterexample(m: crate::loperator::RllMismatch<Scalar>) -> Counterexample {
    Counterexample { key: format!("aux {:?} {} -> {}", m.aux, m.start, m.end), lhs: m.lhs, rhs: m.rhs }
}

fn holds(name: &str, ok: bool) -> Option<Counterexample> {
    (!ok).then(|| Counterexample { key: name.into(), lhs: rat(0, 1), rhs: rat(1, 1) })
}

fn rll_jobs(cfg: &SuiteConfig) -> Vec<Job<'_>> {
    let mut jobs: Vec<Job<'_>> = Vec::new();
    let q_of = |cfg: &SuiteConfig, s: &mut Sampler| cfg.point.as_ref().map_or_else(|| s.unit(), |(r, _)| r.clone() * r);
    for n in cfg.ranks(2, 3) {
        let ks: Vec<i64> = cfg.weight_j.map_or_else(|| (0..=2).collect(), |k| vec![k]);
        for k in ks {
            for (variant, name) in [(RllVariant::Plain, "rll"), (RllVariant::Stochastic, "stochastic-rll")] {
                jobs.push(Box::new(move |s| {
                    check(name, |p| {
                        p.push(format!("n={n} K={k}"));
                        let draw = |s: &mut Sampler| (q_of(cfg, s), s.positive(), s.positive());
                        let label = |(q, l, m): &(Scalar, Scalar, Scalar)| format!("(q={q} lambda={l} mu={m})");
                        sampled(s, p, None, cfg.samples, draw, label, resonant, |(q, l, m)| {
                            Ok(rll_mismatch(n, &Weight::Int(k), 0, l, m, q, variant)?.map(rll_counterexample))
                        })
                    })
                }));
            }
        }
        jobs.push(Box::new(move |s| {
            check("rll-generic", |p| {
                p.push(format!("n={n} window=2"));
                let draw = |s: &mut Sampler| (q_of(cfg, s), s.positive(), s.positive(), s.positive());
                let label = |(q, g, l, m): &(Scalar, Scalar, Scalar, Scalar)| format!("(q={q} g={g} lambda={l} mu={m})");
                sampled(s, p, None, cfg.samples, draw, label, resonant, |(q, g, l, m)| {
                    let k = Weight::Generic(g.clone());
                    for variant in [RllVariant::Plain, RllVariant::Stochastic] {
                        if let Some(x) = rll_mismatch(n, &k, 2, l, m, q, variant)? {
                            return Ok(Some(rll_counterexample(x)));
                        }
                    }
                    Ok(None)
                })
            })
        }));
        jobs.push(Box::new(move |s| {
            check("uvx-operator", |p| {
                p.push(format!("n={n} window=3"));
                let draw = |s: &mut Sampler| (q_of(cfg, s), s.unit(), s.unit(), s.unit());
                let label = |(q, a, b, c): &(Scalar, Scalar, Scalar, Scalar)| format!("(q={q} roots={a},{b},{c})");
                sampled(s, p, None, cfg.samples, draw, label, resonant, |(q, a, b, c)| uvx_mismatch(n, [a, b, c], q, 3))
            })
        }));
        jobs.push(Box::new(move |s| {
            check("weyl-relations", |p| {
                p.push(format!("n={n} window=3"));
                let draw = |s: &mut Sampler| (q_of(cfg, s), s.positive());
                let label = |(q, m): &(Scalar, Scalar)| format!("(q={q} mu={m})");
                sampled(s, p, None, cfg.samples, draw, label, resonant, |(q, m)| {
                    Ok(holds("Weyl relations", weyl_relations_hold(n, 3, q)?)
                        .or(holds("central element", central_element_commutes(n, 3, m, q)?)))
                })
            })
        }));
    }
    let wide: Vec<usize> = cfg.rank.map_or_else(|| (2..=4).collect(), |n| vec![n]);
    for n in wide {
        let js: Vec<i64> = cfg.weight_j.map_or_else(|| (0..=3).collect(), |j| vec![j]);
        for wj in js {
            jobs.push(Box::new(move |s| {
                check("rank-one-comparison", |p| {
                    p.push(format!("n={n} J={wj}"));
                    sampled(s, p, cfg.point.clone(), cfg.samples, draw_point, point_label, resonant, |(r, l)| {
                        rank_one_mismatch(n, wj, &EvalPoint::new(r.clone(), l.clone())?)
                    })
                })
            }));
        }
    }
    jobs.push(Box::new(move |s| {
        check("q-oscillator", |p| {
            p.push("window=4".into());
            let fixed = cfg.point.as_ref().map(|(r, _)| r.clone() * r);
            sampled(s, p, fixed, cfg.samples, |s| s.unit(), |q| format!("q={q}"), resonant, |q| {
                Ok(holds("q-oscillator relations", q_oscillator_relations_hold(4, q)?))
            })
        })
    }));
    jobs
}

fn qseries_jobs(_cfg: &SuiteConfig) -> Vec<Job<'_>> {
    let count = 100;
    vec![
        Box::new(move |s: &mut Sampler| {
            check("heine", |p| {
                p.push(format!("samples={count}"));
                let mut quiet = Vec::new();
                let draw = |s: &mut Sampler| {
                    let q = s.unit();
                    let k = s.int(0, 5);
                    let a = power(&q, -k).expect("nonzero");
                    let b = s.unit();
                    let c = if s.int(0, 1) == 0 { b.clone() * power(&q, -s.int(0, 4)).expect("nonzero") } else { s.unit() };
                    let b = if c == b || s.int(0, 1) == 0 { b } else { power(&q, -s.int(0, 4)).expect("nonzero") };
                    (a, b, c, s.unit(), q)
                };
                let retry = |e: &Error| e.is_resonance() || matches!(e, Error::Unsupported(_));
                sampled(s, &mut quiet, None, count, draw, |_| String::new(), retry, |(a, b, c, z, q)| {
                    let ok = verify_heine_chain(a, b, c, z, q)?;
                    Ok(holds(&format!("a={a} b={b} c={c} z={z} q={q}"), ok))
                })
            })
        }),
        Box::new(move |s: &mut Sampler| {
            check("sears", |p| {
                p.push(format!("samples={count}"));
                let mut quiet = Vec::new();
                let draw = |s: &mut Sampler| (s.int(0, 4), [s.positive(), s.positive(), s.positive(), s.positive(), s.positive()], s.unit());
                sampled(s, &mut quiet, None, count, draw, |_| String::new(), resonant, |(k, [a, b, c, d, e], q)| {
                    let ok = verify_sears(*k, a, b, c, d, e, q)?;
                    Ok(holds(&format!("n={k} a={a} b={b} c={c} d={d} e={e} q={q}"), ok))
                })
            })
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ybe_full_small() {
        let rep = ybe_full(2, 1, 1, 1, &rat(1, 2), &rat(1, 3), &rat(1, 5)).unwrap();
        assert!(rep.passed, "{rep}");
        assert!(rep.counterexample.is_none());
    }

    #[test]
    fn fault_is_detected() {
        let key = fault_key(2, 1, 1).unwrap();
        let rep = ybe_full_with_fault(2, 1, 1, 1, &rat(1, 2), &rat(1, 3), &rat(1, 5), Some((&key, &rat(1, 7)))).unwrap();
        assert!(!rep.passed);
        let c = rep.counterexample.unwrap();
        assert_ne!(c.lhs, c.rhs);
        assert!(fault_injection_report().passed);
    }

    #[test]
    fn sector_examples() {
        let (r, l, m) = (rat(1, 2), rat(1, 3), rat(2, 5));
        let g = [Weight::Generic(rat(3, 7)), Weight::Generic(rat(5, 4)), Weight::Generic(rat(2, 9))];
        let a = mi(&[1]);
        let z = mi(&[0]);
        let rep = ybe_sector(2, [&g[0], &g[1], &g[2]], [&a, &a, &z], None, &r, &l, &m).unwrap();
        assert!(rep.passed, "{rep}");
        let rep = ybe_sector(2, [&g[0], &g[1], &g[2]], [&a, &a, &z], Some([&a, &a, &a]), &r, &l, &m).unwrap();
        assert!(rep.passed);
        let mixed = [Weight::Int(2), Weight::Generic(rat(3, 5)), Weight::Int(1)];
        let rep = ybe_sector(3, [&mixed[0], &mixed[1], &mixed[2]], [&mi(&[1, 0]), &mi(&[0, 1]), &mi(&[1, 0])], None, &r, &l, &m)
            .unwrap();
        assert!(rep.passed, "{rep}");
    }

    #[test]
    fn full_pass_implies_sector_pass() {
        let (r, l, m) = (rat(2, 3), rat(3, 7), rat(5, 2));
        let w = Weight::Int(1);
        for a in compositions(2, 1) {
            for b in compositions(2, 1) {
                for c in compositions(2, 1) {
                    let rep = ybe_sector(3, [&w, &w, &w], [&a, &b, &c], None, &r, &l, &m).unwrap();
                    assert!(rep.passed, "{rep}");
                }
            }
        }
    }

    #[test]
    fn symmetries_hold_on_a_point() {
        let pt = EvalPoint::new(rat(2, 5), rat(3, 7)).unwrap();
        for n in 2..=3 {
            for wi in 0..=2 {
                for wj in 0..=2 {
                    for sym in Symmetry::ALL {
                        for k in block_keys(n, wi, wj) {
                            let (a, b) = symmetry_sides(sym, n, wi, wj, &k, &pt).unwrap();
                            assert_eq!(a, b, "{} n={n} I={wi} J={wj} {k}", sym.name());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn three_dimensional_symmetries() {
        assert_eq!(symmetries_3d(2, &rat(1, 2)).unwrap(), None);
    }

    #[test]
    fn suites_are_deterministic() {
        let cfg = SuiteConfig { seed: 7, samples: 1, rank: Some(2), weight_i: Some(1), weight_j: Some(1), point: None };
        let a = run_suite("factorization", &cfg).unwrap();
        let b = run_suite("factorization", &cfg).unwrap();
        assert_eq!(a.iter().map(|r| &r.params).collect::<Vec<_>>(), b.iter().map(|r| &r.params).collect::<Vec<_>>());
        assert!(a.iter().all(|r| r.passed));
        assert!(run_suite("nope", &cfg).is_err());
    }

    #[test]
    fn sampler_ranges() {
        let mut s = Sampler::new(3, 0);
        for _ in 0..200 {
            let u = s.unit();
            assert!(u > rat(0, 1) && u < rat(1, 1));
            assert!(*u.denom() <= 97.into());
            let p = s.positive();
            assert!(p > rat(0, 1));
        }
    }
}
