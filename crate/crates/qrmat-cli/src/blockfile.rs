//! Line-oriented export format for R-matrix blocks.
//!
//! ```text
//! qrmat-block 1
//! rank 3
//! weight-i 2
//! weight-j 1
//! mode default
//! stochastic false
//! q-sqrt 1/2
//! lambda 1/3
//! indices canonical
//! entry 1,0 0,1 0,1 1,0 -3/7
//! ```
//!
//! Header lines come first, in this order. Each `entry` line holds the
//! canonical (n−1)-component indices `i j i' j'` and the value as a reduced
//! fraction `p/q`. Absent keys are exact zeros. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qrmat::rmatrix::{BlockKey, MultiIndex, NormalizationMode};
use qrmat::{Error, Result, Scalar};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "qrmat-block";

#[derive(Clone, Debug, PartialEq)]
pub struct BlockFile {
    pub rank: usize,
    pub weight_i: i64,
    pub weight_j: i64,
    pub mode: NormalizationMode,
    pub stochastic: bool,
    pub q_sqrt: Scalar,
    pub lambda: Scalar,
    pub entries: BTreeMap<BlockKey, Scalar>,
}

fn fraction(v: &Scalar) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

fn tuple(m: &MultiIndex) -> String {
    m.parts().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_tuple(s: &str, len: usize) -> Result<MultiIndex> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|e| Error::Parse(format!("bad index component {p:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if parts.len() != len {
        return Err(Error::Parse(format!("index {s:?} should have {len} components")));
    }
    MultiIndex::new(parts)
}

fn parse_fraction(s: &str) -> Result<Scalar> {
    let v = qrmat::field::parse_scalar(s)?;
    if fraction(&v) != s {
        return Err(Error::Parse(format!("value {s:?} is not a reduced fraction p/q")));
    }
    Ok(v)
}

impl BlockFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "rank {}", self.rank);
        let _ = writeln!(out, "weight-i {}", self.weight_i);
        let _ = writeln!(out, "weight-j {}", self.weight_j);
        let _ = writeln!(out, "mode {}", self.mode.name());
        let _ = writeln!(out, "stochastic {}", self.stochastic);
        let _ = writeln!(out, "q-sqrt {}", fraction(&self.q_sqrt));
        let _ = writeln!(out, "lambda {}", fraction(&self.lambda));
        let _ = writeln!(out, "indices canonical");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "entry {} {} {} {} {}", tuple(&k.i), tuple(&k.j), tuple(&k.ip), tuple(&k.jp), fraction(v));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing header line {key:?}")))?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(Error::Parse(format!("expected header {key:?}, found {line:?}"))),
            }
        };
        let version = header(MAGIC)?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::Parse(format!("unsupported block file version {version}")));
        }
        let int = |v: String| v.parse::<i64>().map_err(|e| Error::Parse(format!("bad integer {v:?}: {e}")));
        let rank = int(header("rank")?)?;
        if rank < 2 {
            return Err(Error::Parse("rank must be at least 2".into()));
        }
        let rank = rank as usize;
        let weight_i = int(header("weight-i")?)?;
        let weight_j = int(header("weight-j")?)?;
        let mode = NormalizationMode::from_name(&header("mode")?)?;
        let stochastic = match header("stochastic")?.as_str() {
            "true" => true,
            "false" => false,
            v => return Err(Error::Parse(format!("bad stochastic flag {v:?}"))),
        };
        let q_sqrt = parse_fraction(&header("q-sqrt")?)?;
        let lambda = parse_fraction(&header("lambda")?)?;
        let convention = header("indices")?;
        if convention != "canonical" {
            return Err(Error::Parse(format!("unknown index convention {convention:?}")));
        }
        let mut entries = BTreeMap::new();
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 || fields[0] != "entry" {
                return Err(Error::Parse(format!("malformed entry line {line:?}")));
            }
            let idx = |s: &str| parse_tuple(s, rank - 1);
            let key = BlockKey { i: idx(fields[1])?, j: idx(fields[2])?, ip: idx(fields[3])?, jp: idx(fields[4])? };
            let v = parse_fraction(fields[5])?;
            if entries.insert(key, v).is_some() {
                return Err(Error::Parse(format!("duplicate entry in {line:?}")));
            }
        }
        Ok(BlockFile { rank, weight_i, weight_j, mode, stochastic, q_sqrt, lambda, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrmat::field::{rat, EvalPoint};
    use qrmat::rmatrix::build_block;

    fn sample(n: usize, wi: i64, wj: i64, mode: NormalizationMode) -> BlockFile {
        let (r, l) = (rat(1, 2), rat(-3, 7));
        let b = build_block(n, wi, wj, &EvalPoint::new(r.clone(), l.clone()).unwrap(), mode).unwrap();
        BlockFile { rank: n, weight_i: wi, weight_j: wj, mode, stochastic: false, q_sqrt: r, lambda: l, entries: b.entries }
    }

    #[test]
    fn round_trip() {
        for n in 2..=3 {
            for mode in [NormalizationMode::BEqualsOne, NormalizationMode::BRestored, NormalizationMode::SigmaRenormalized] {
                let f = sample(n, 2, 1, mode);
                let text = f.to_text();
                assert_eq!(BlockFile::parse(&text).unwrap(), f);
                assert_eq!(BlockFile::parse(&text).unwrap().to_text(), text);
            }
        }
    }

    #[test]
    fn layout() {
        let f = sample(2, 1, 1, NormalizationMode::BEqualsOne);
        let text = f.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("qrmat-block 1"));
        assert!(text.contains("\nlambda -3/7\n"));
        assert!(text.contains("\nentry 0 0 0 0 1/1\n"));
    }

    #[test]
    fn rejects_malformed() {
        let good = sample(2, 1, 1, NormalizationMode::BEqualsOne).to_text();
        assert!(BlockFile::parse(&good.replace("qrmat-block 1", "qrmat-block 2")).is_err());
        assert!(BlockFile::parse(&good.replace("entry 0 0 0 0 1/1", "entry 0 0 0 0 2/2")).is_err());
        assert!(BlockFile::parse(&good.replace("entry 0 0 0 0 1/1", "entry 0,0 0 0 0 1/1")).is_err());
        assert!(BlockFile::parse(&good.replace("mode default", "mode other")).is_err());
        assert!(BlockFile::parse("").is_err());
        let dup = format!("{good}entry 0 0 0 0 1/1\n");
        assert!(BlockFile::parse(&dup).is_err());
    }
}
