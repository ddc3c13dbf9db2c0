//! Problem files: a TOML document with the polynomial as a list of terms,
//! optional charts and base points, and run settings.
//!
//! ```toml
//! n = 3
//! nondegenerate = false
//! seed = 0
//! terms = [
//!   { coef = "-3", exp = [2, 2, 1] },
//!   { coef = "1", exp = [1, 0, 1] },
//! ]
//! [[charts]]
//! W = [[1, 0, 1], [-2, -1, -1], [2, 2, 1]]
//! ustar = ["1"]
//! [grid]
//! tmin = 1e-7
//! tmax = 0.1
//! points = 25
//! ```

use std::fmt::Write as _;

use num_traits::Zero;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::laurent::SparsePoly;
use crate::lattice::{IntMat, Rat};
use crate::verify::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct ChartSpec {
    pub w: IntMat,
    /// Base point in the torus coordinates of the face.
    pub ustar: Option<Vec<Rat>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub terms: Vec<(Rat, Vec<i64>)>,
    pub charts: Vec<ChartSpec>,
    /// Base point for the first bad face of matching torus dimension.
    pub ustar: Option<Vec<Rat>>,
    pub nondegenerate: bool,
    pub seed: u64,
    pub grid: Grid,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: usize,
    terms: Vec<RawTerm>,
    #[serde(default)]
    charts: Vec<RawChart>,
    ustar: Option<Vec<String>>,
    #[serde(default)]
    nondegenerate: bool,
    #[serde(default)]
    seed: u64,
    grid: Option<RawGrid>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coef: toml::Value,
    exp: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    #[serde(rename = "W")]
    w: Vec<Vec<i64>>,
    ustar: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    tmin: Option<f64>,
    tmax: Option<f64>,
    points: Option<usize>,
}

/// Parses an exact rational such as `-3`, `2/3` or `+7/12`.
pub fn parse_rational(s: &str) -> Result<Rat> {
    let t = s.trim();
    let bad = || Error::Parse(format!("'{s}' is not an exact rational p/q"));
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let int = |x: &str| -> Result<num_bigint::BigInt> {
        let digits = x.strip_prefix(['+', '-']).unwrap_or(x);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        x.trim_start_matches('+').parse().map_err(|_| bad())
    };
    let (p, q) = (int(num)?, int(den)?);
    if q.is_zero() {
        return Err(Error::Parse(format!("'{s}' has a zero denominator")));
    }
    Ok(Rat::new(p, q))
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let raw: RawProblem = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim().to_string()))?;
    if raw.n == 0 {
        return Err(Error::Parse("field n: must be positive".into()));
    }
    if raw.terms.is_empty() {
        return Err(Error::Parse("field terms: at least one term is required".into()));
    }
    let mut terms = Vec::with_capacity(raw.terms.len());
    for (i, t) in raw.terms.iter().enumerate() {
        let coef = match &t.coef {
            toml::Value::String(s) => parse_rational(s).map_err(|e| Error::Parse(format!("terms[{i}].coef: {e}")))?,
            toml::Value::Integer(v) => Rat::from_integer((*v).into()),
            other => {
                return Err(Error::Parse(format!(
                    "terms[{i}].coef: expected an exact rational string, found {}",
                    other.type_str()
                )))
            }
        };
        if t.exp.len() != raw.n {
            return Err(Error::Parse(format!("terms[{i}].exp: expected {} entries, found {}", raw.n, t.exp.len())));
        }
        if t.exp.iter().any(|&e| e < 0) {
            return Err(Error::Parse(format!("terms[{i}].exp: exponents must be nonnegative")));
        }
        terms.push((coef, t.exp.clone()));
    }
    let mut charts = Vec::with_capacity(raw.charts.len());
    for (i, c) in raw.charts.iter().enumerate() {
        if c.w.len() != raw.n || c.w.iter().any(|r| r.len() != raw.n) {
            return Err(Error::Parse(format!("charts[{i}].W: expected a {0}x{0} integer matrix", raw.n)));
        }
        let ustar = match &c.ustar {
            Some(v) => Some(
                v.iter()
                    .map(|s| parse_rational(s).map_err(|e| Error::Parse(format!("charts[{i}].ustar: {e}"))))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        charts.push(ChartSpec { w: IntMat::from_i64(&c.w), ustar });
    }
    let ustar = match &raw.ustar {
        Some(v) => Some(
            v.iter()
                .map(|s| parse_rational(s).map_err(|e| Error::Parse(format!("ustar: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let mut grid = Grid::default();
    if let Some(g) = raw.grid {
        grid.tmin = g.tmin.unwrap_or(grid.tmin);
        grid.tmax = g.tmax.unwrap_or(grid.tmax);
        grid.points = g.points.unwrap_or(grid.points);
    }
    grid.validate()?;
    let spec = ProblemSpec { n: raw.n, terms, charts, ustar, nondegenerate: raw.nondegenerate, seed: raw.seed, grid };
    let f = spec.polynomial();
    if f.is_empty() {
        return Err(Error::Parse("field terms: all coefficients cancel".into()));
    }
    if !f.constant_term().is_zero() {
        return Err(Error::ConstantTermPresent);
    }
    Ok(spec)
}

/// Integer matrix from a chart file: either `W = [[..], ..]` or one row of
/// whitespace- or comma-separated integers per line.
pub fn parse_matrix(text: &str) -> Result<IntMat> {
    #[derive(Deserialize)]
    struct Doc {
        #[serde(rename = "W")]
        w: Vec<Vec<i64>>,
    }
    let rows: Vec<Vec<i64>> = if let Ok(d) = toml::from_str::<Doc>(text) {
        d.w
    } else {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<i64>().map_err(|_| Error::Parse(format!("line {}: '{s}' is not an integer", ln + 1))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        rows
    };
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("chart matrix must be square and nonempty".into()));
    }
    Ok(IntMat::from_i64(&rows))
}

impl ProblemSpec {
    pub fn polynomial(&self) -> SparsePoly {
        SparsePoly::from_terms(self.n, self.terms.iter().map(|(c, e)| (e.clone(), c.clone())))
    }

    /// Canonical text: terms merged and sorted, every field written out.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "nondegenerate = {}", self.nondegenerate);
        let _ = writeln!(s, "seed = {}", self.seed);
        s.push_str("terms = [\n");
        for (e, c) in self.polynomial().terms() {
            let _ = writeln!(s, "  {{ coef = \"{c}\", exp = {e:?} }},");
        }
        s.push_str("]\n");
        if let Some(u) = &self.ustar {
            let _ = writeln!(s, "ustar = [{}]", quoted(u));
        }
        for c in &self.charts {
            s.push_str("\n[[charts]]\n");
            let _ = writeln!(s, "W = {:?}", c.w.to_i64());
            if let Some(u) = &c.ustar {
                let _ = writeln!(s, "ustar = [{}]", quoted(u));
            }
        }
        let _ = write!(
            s,
            "\n[grid]\ntmin = {:?}\ntmax = {:?}\npoints = {}\n",
            self.grid.tmin, self.grid.tmax, self.grid.points
        );
        s
    }
}

fn quoted(v: &[Rat]) -> String {
    v.iter().map(|r| format!("\"{r}\"")).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAY_FACE: &str = r#"
n = 3
terms = [
  { coef = "-3", exp = [2, 2, 1] },
  { coef = "1", exp = [1, 0, 1] },
  { coef = "1", exp = [0, 1, 1] },
  { coef = "1", exp = [6, 6, 3] },
]
"#;

    #[test]
    fn parses_the_four_term_example() {
        let spec = parse_problem(RAY_FACE).unwrap();
        assert_eq!(spec.n, 3);
        assert_eq!(spec.terms.len(), 4);
        assert_eq!(spec.terms[0], (Rat::from_integer((-3).into()), vec![2, 2, 1]));
        assert_eq!(spec.grid, Grid::default());
    }

    #[test]
    fn rejects_floats_constants_and_empty_input() {
        let float = RAY_FACE.replace("\"-3\"", "-3.0");
        assert!(matches!(parse_problem(&float), Err(Error::Parse(m)) if m.contains("terms[0].coef")));
        let float_str = RAY_FACE.replace("\"-3\"", "\"-3.5\"");
        assert!(matches!(parse_problem(&float_str), Err(Error::Parse(_))));
        let constant = RAY_FACE.replace("[1, 0, 1]", "[0, 0, 0]");
        assert_eq!(parse_problem(&constant).unwrap_err(), Error::ConstantTermPresent);
        assert!(matches!(parse_problem("n = 2\nterms = []\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_problem("n = 2\nterms = [ { coef = \"1\", exp = [1] } ]"), Err(Error::Parse(_))));
        assert!(matches!(parse_problem("n = 2\nterms = [ { coef = \"1\", exp = [1, -1] } ]"), Err(Error::Parse(_))));
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let spec = parse_problem(RAY_FACE).unwrap();
        let once = spec.to_canonical();
        let twice = parse_problem(&once).unwrap().to_canonical();
        assert_eq!(once, twice);
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational(" -1/3 ").unwrap(), Rat::new((-1).into(), 3.into()));
        assert_eq!(parse_rational("+4/6").unwrap(), Rat::new(2.into(), 3.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1e3").is_err());
    }

    #[test]
    fn matrix_files() {
        let a = parse_matrix("1 0 1\n-2 -1 -1\n2 2 1\n").unwrap();
        let b = parse_matrix("W = [[1, 0, 1], [-2, -1, -1], [2, 2, 1]]").unwrap();
        assert_eq!(a, b);
        assert!(parse_matrix("1 2\n3").is_err());
    }
}
