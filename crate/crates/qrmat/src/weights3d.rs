//! Matrix elements of the three-dimensional R-operator on a triple Fock
//! space, and a checker for the tetrahedron equation.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{power, Field};
use crate::qseries::{phi_terminating, q_binomial};

/// Occupation numbers of a triple Fock state.
///
/// In the signed variant only `n3` may be negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
}

impl Triple {
    pub const fn new(n1: i64, n2: i64, n3: i64) -> Self {
        Triple { n1, n2, n3 }
    }
}

/// `R_{n1,n2,n3}^{n1',n2',n3'}` at base `q`.
pub fn r3d_element<F: Field>(input: Triple, output: Triple, q: &F) -> Result<F> {
    if [input.n1, input.n2, input.n3, output.n1, output.n2, output.n3].iter().any(|&v| v < 0) {
        return Err(Error::Domain("occupation numbers must be non-negative".into()));
    }
    element(input, output, q)
}

/// The element continued to negative third components.
pub fn r3d_element_signed<F: Field>(input: Triple, output: Triple, q: &F) -> Result<F> {
    if [input.n1, input.n2, output.n1, output.n2].iter().any(|&v| v < 0) {
        return Err(Error::Domain("only the third occupation number may be negative".into()));
    }
    element(input, output, q)
}

fn element<F: Field>(a: Triple, b: Triple, q: &F) -> Result<F> {
    if a.n1 + a.n2 != b.n1 + b.n2 || a.n2 + a.n3 != b.n2 + b.n3 {
        return Ok(F::zero());
    }
    let q2 = q.clone() * q;
    let pre = power(q, -a.n2 * (1 + a.n1 + a.n3) - b.n1 * b.n3)? * q_binomial(a.n1 + a.n2, a.n1, &q2);
    let series = phi_terminating(
        &[power(q, -2 * a.n2)?, power(q, -2 * b.n1)?],
        &[power(q, -2 * (a.n1 + a.n2))?],
        &q2,
        &power(&q2, 1 + b.n3)?,
    )?;
    Ok(pre * series)
}

/// The spaces each R-factor acts on, left to right, in the product
/// `R123 R145 R246 R356`.
const FACTORS: [[usize; 3]; 4] = [[0, 1, 2], [0, 3, 4], [1, 3, 5], [2, 4, 5]];

type State = [i64; 6];

struct Memo<'a, F> {
    q: &'a F,
    cache: HashMap<(Triple, Triple), F>,
}

impl<F: Field> Memo<'_, F> {
    fn get(&mut self, a: Triple, b: Triple) -> Result<F> {
        if let Some(v) = self.cache.get(&(a, b)) {
            return Ok(v.clone());
        }
        let v = r3d_element(a, b, self.q)?;
        self.cache.insert((a, b), v.clone());
        Ok(v)
    }

    fn apply(&mut self, vec: BTreeMap<State, F>, sp: [usize; 3]) -> Result<BTreeMap<State, F>> {
        let mut out: BTreeMap<State, F> = BTreeMap::new();
        for (st, v) in vec {
            let a = Triple::new(st[sp[0]], st[sp[1]], st[sp[2]]);
            for b1 in 0..=a.n1 + a.n2 {
                let b2 = a.n1 + a.n2 - b1;
                let b3 = a.n2 + a.n3 - b2;
                if b3 < 0 {
                    continue;
                }
                let b = Triple::new(b1, b2, b3);
                let w = self.get(a, b)?;
                if w.is_zero() {
                    continue;
                }
                let mut s = st;
                s[sp[0]] = b1;
                s[sp[1]] = b2;
                s[sp[2]] = b3;
                let e = out.entry(s).or_insert_with(F::zero);
                *e += w * &v;
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }
}

/// A start state where the two sides of the tetrahedron equation differ.
#[derive(Clone, Debug, PartialEq)]
pub struct TetraMismatch<F> {
    pub start: [i64; 6],
    pub end: [i64; 6],
    pub lhs: F,
    pub rhs: F,
}

/// Propagates every six-index start state with entries `≤ max_occupation`
/// through both sides and returns the first disagreement.
pub fn tetrahedron_mismatch<F: Field>(max_occupation: i64, q: &F) -> Result<Option<TetraMismatch<F>>> {
    let m = max_occupation + 1;
    let starts: Vec<State> = (0..m.pow(6))
        .map(|mut code| {
            let mut s = [0i64; 6];
            for slot in s.iter_mut() {
                *slot = code % m;
                code /= m;
            }
            s
        })
        .collect();
    let results: Vec<Result<Option<TetraMismatch<F>>>> = starts
        .par_chunks(16)
        .map(|chunk| {
            let mut memo = Memo { q, cache: HashMap::new() };
            for &st in chunk {
                let mut lhs = BTreeMap::from([(st, F::one())]);
                let mut rhs = lhs.clone();
                for sp in FACTORS {
                    lhs = memo.apply(lhs, sp)?;
                }
                for sp in FACTORS.iter().rev() {
                    rhs = memo.apply(rhs, *sp)?;
                }
                if lhs != rhs {
                    let end = lhs.keys().chain(rhs.keys()).find(|k| lhs.get(*k) != rhs.get(*k)).copied();
                    let end = end.unwrap_or(st);
                    return Ok(Some(TetraMismatch {
                        start: st,
                        end,
                        lhs: lhs.get(&end).cloned().unwrap_or_else(F::zero),
                        rhs: rhs.get(&end).cloned().unwrap_or_else(F::zero),
                    }));
                }
            }
            Ok(None)
        })
        .collect();
    for r in results {
        if let Some(m) = r? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

pub fn tetrahedron_check<F: Field>(max_occupation: i64, q: &F) -> Result<bool> {
    if max_occupation < 0 {
        return Err(Error::Domain("max occupation must be non-negative".into()));
    }
    Ok(tetrahedron_mismatch(max_occupation, q)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;
    use crate::qseries::q_pochhammer;

    fn t(a: i64, b: i64, c: i64) -> Triple {
        Triple::new(a, b, c)
    }

    #[test]
    fn element_examples() {
        let q = rat(1, 2);
        assert_eq!(r3d_element(t(0, 0, 0), t(0, 0, 0), &q).unwrap(), rat(1, 1));
        assert_eq!(r3d_element(t(1, 0, 0), t(0, 0, 1), &q).unwrap(), rat(0, 1));
        assert_eq!(r3d_element(t(0, 1, 0), t(1, 0, 1), &q).unwrap(), rat(3, 1));
        assert!(r3d_element(t(0, 0, -1), t(0, 0, -1), &q).is_err());
    }

    #[test]
    fn signed_examples() {
        let q = rat(1, 2);
        assert_eq!(
            r3d_element_signed(t(1, 2, 1), t(2, 1, 2), &q).unwrap(),
            r3d_element(t(1, 2, 1), t(2, 1, 2), &q).unwrap()
        );
        assert_eq!(r3d_element_signed(t(0, 1, -1), t(1, 0, 0), &q).unwrap(), rat(0, 1));
        let v = r3d_element_signed(t(1, 1, -1), t(1, 1, -1), &q).unwrap();
        assert_eq!(v, rat(1, 4));
        // q -> 1/q partner of the same entry; the prefactor exponent vanishes here
        let partner = r3d_element(t(1, 1, 0), t(1, 1, 0), &q.inv().unwrap()).unwrap();
        assert_eq!(partner, v);
        assert!(r3d_element_signed(t(-1, 1, 0), t(0, 0, 1), &q).is_err());
    }

    #[test]
    fn tetrahedron_small() {
        assert!(tetrahedron_check(0, &rat(3, 7)).unwrap());
        assert!(tetrahedron_check(1, &rat(1, 2)).unwrap());
    }

    #[test]
    fn reflection_and_transpositions() {
        let q = rat(1, 2);
        let qq = q.clone() * &q;
        let p = |k: i64| q_pochhammer(&qq, &qq, k).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for x in 0..4 {
                        let y = a + b - x;
                        let z = b + c - y;
                        if y < 0 || z < 0 {
                            continue;
                        }
                        let v = r3d_element(t(a, b, c), t(x, y, z), &q).unwrap();
                        assert_eq!(v, r3d_element(t(c, b, a), t(z, y, x), &q).unwrap());
                        let w = power(&q, c - b + a * a - x * x).unwrap() * p(x) / p(a)
                            * r3d_element(t(x, c, b), t(a, z, y), &q).unwrap();
                        assert_eq!(v, w);
                    }
                }
            }
        }
    }
}
