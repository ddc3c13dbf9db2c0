//! Sparse Laurent polynomials over ℚ, monomial substitutions, and truncated
//! local expansions (jets) at points of the form `(0, u'')`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Int, IntMat, IntVec, Rat};
use crate::mp::{Cx, F};

pub type Exp = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePoly {
    n: usize,
    terms: BTreeMap<Exp, Rat>,
}

impl SparsePoly {
    pub fn zero(n: usize) -> Self {
        SparsePoly { n, terms: BTreeMap::new() }
    }

    pub fn monomial(exp: Exp, coef: Rat) -> Self {
        let mut p = SparsePoly::zero(exp.len());
        p.add_term(exp, coef);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Exp, Rat)>>(n: usize, terms: I) -> Self {
        let mut p = SparsePoly::zero(n);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Convenience constructor with integer coefficients.
    pub fn from_i64(n: usize, terms: &[(i64, &[i64])]) -> Self {
        SparsePoly::from_terms(
            n,
            terms.iter().map(|(c, e)| (e.to_vec(), Rat::from_integer(BigInt::from(*c)))),
        )
    }

    pub fn add_term(&mut self, exp: Exp, coef: Rat) {
        assert_eq!(exp.len(), self.n, "exponent length mismatch");
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp).or_insert_with(Rat::zero);
        *entry += coef;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Exp, Rat> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exp: &[i64]) -> Rat {
        self.terms.get(exp).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_term(&self) -> Rat {
        self.coefficient(&vec![0; self.n])
    }

    pub fn support(&self) -> Vec<IntVec> {
        self.terms.keys().map(|e| e.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x >= 0))
    }

    pub fn add(&self, other: &SparsePoly) -> SparsePoly {
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &SparsePoly) -> SparsePoly {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, s: &Rat) -> SparsePoly {
        SparsePoly::from_terms(self.n, self.terms.iter().map(|(e, c)| (e.clone(), c * s)))
    }

    pub fn mul(&self, other: &SparsePoly) -> SparsePoly {
        let mut r = SparsePoly::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                r.add_term(e, ca * cb);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> SparsePoly {
        let mut r = SparsePoly::monomial(vec![0; self.n], Rat::one());
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// The substitution `x = u^W`: each `x^α` becomes `u^(α·W)`.
    pub fn substitute_monomial(&self, w: &IntMat) -> SparsePoly {
        assert_eq!(w.nrows(), self.n);
        let wi = w.to_i64();
        let m = w.ncols();
        SparsePoly::from_terms(
            m,
            self.terms.iter().map(|(a, c)| {
                let e = (0..m).map(|j| (0..self.n).map(|i| a[i] * wi[i][j]).sum()).collect();
                (e, c.clone())
            }),
        )
    }

    /// `Σ_β ⟨v, β⟩ c_β u^β`, the derivation `Σ v_j u_j ∂/∂u_j` applied to `self`.
    pub fn theta_along(&self, v: &[Int]) -> SparsePoly {
        SparsePoly::from_terms(
            self.n,
            self.terms.iter().map(|(e, c)| {
                let d: BigInt = e.iter().zip(v).map(|(a, b)| BigInt::from(*a) * b).sum();
                (e.clone(), c * Rat::from_integer(d))
            }),
        )
    }

    pub fn log_gradient(&self) -> Vec<SparsePoly> {
        (0..self.n)
            .map(|j| {
                let mut v = vec![BigInt::zero(); self.n];
                v[j] = BigInt::one();
                self.theta_along(&v)
            })
            .collect()
    }

    pub fn derivative(&self, j: usize) -> SparsePoly {
        SparsePoly::from_terms(
            self.n,
            self.terms.iter().filter(|(e, _)| e[j] != 0).map(|(e, c)| {
                let mut d = e.clone();
                d[j] -= 1;
                (d, c * Rat::from_integer(BigInt::from(e[j])))
            }),
        )
    }

    pub fn restrict<P: Fn(&[i64]) -> bool>(&self, keep: P) -> SparsePoly {
        SparsePoly {
            n: self.n,
            terms: self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (e.clone(), c.clone())).collect(),
        }
    }

    /// Keeps only the listed coordinates of every exponent.
    pub fn project(&self, coords: &[usize]) -> SparsePoly {
        SparsePoly::from_terms(
            coords.len(),
            self.terms.iter().map(|(e, c)| (coords.iter().map(|&i| e[i]).collect(), c.clone())),
        )
    }

    /// Inverse of [`project`](Self::project): places the variables at `coords` of an `n`-space.
    pub fn embed(&self, n: usize, coords: &[usize]) -> SparsePoly {
        SparsePoly::from_terms(
            n,
            self.terms.iter().map(|(e, c)| {
                let mut f = vec![0; n];
                for (k, &i) in coords.iter().enumerate() {
                    f[i] = e[k];
                }
                (f, c.clone())
            }),
        )
    }

    pub fn eval_c64(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut m = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
                for (xi, &k) in x.iter().zip(e) {
                    if k != 0 {
                        m *= xi.powi(k as i32);
                    }
                }
                m
            })
            .sum()
    }

    pub fn eval_cx(&self, x: &[Cx]) -> Cx {
        let prec = x.iter().map(Cx::precision).max().unwrap_or(64);
        let mut cache: HashMap<(usize, i64), Cx> = HashMap::new();
        let mut acc = Cx::zero(prec);
        for (e, c) in &self.terms {
            let mut m = Cx::from_rat(c, prec);
            for (i, &k) in e.iter().enumerate() {
                if k != 0 {
                    let p = cache.entry((i, k)).or_insert_with(|| x[i].powi(k));
                    m = &m * p;
                }
            }
            acc = &acc + &m;
        }
        acc
    }

    /// Coefficients of a univariate polynomial, constant first.
    pub fn univariate_coeffs(&self) -> Option<Vec<Rat>> {
        if self.n != 1 || !self.is_polynomial() {
            return None;
        }
        let deg = self.terms.keys().map(|e| e[0]).max().unwrap_or(0) as usize;
        let mut c = vec![Rat::zero(); deg + 1];
        for (e, v) in &self.terms {
            c[e[0] as usize] = v.clone();
        }
        Some(c)
    }

    pub fn display_with(&self, var: &str) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (e, c)) in self.terms.iter().rev().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k != 0)
                .map(|(i, &k)| if k == 1 { format!("{var}{}", i + 1) } else { format!("{var}{}^{k}", i + 1) })
                .collect();
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if mono.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&format!("{mag}*"));
                }
                out.push_str(&mono.join("*"));
            }
        }
        out
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("x"))
    }
}

#[derive(Serialize)]
struct TermOut {
    coef: String,
    exp: Exp,
}

impl Serialize for SparsePoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<TermOut> = self
            .terms
            .iter()
            .map(|(e, c)| TermOut { coef: c.to_string(), exp: e.clone() })
            .collect();
        v.serialize(s)
    }
}

/// Truncated power series in one variable `t`, orders `0..len`.
#[derive(Clone, Debug)]
pub struct TSeries {
    pub coeffs: Vec<Cx>,
}

impl TSeries {
    pub fn zero(len: usize, prec: usize) -> Self {
        TSeries { coeffs: vec![Cx::zero(prec); len] }
    }

    pub fn one(len: usize, prec: usize) -> Self {
        let mut s = TSeries::zero(len, prec);
        if len > 0 {
            s.coeffs[0] = Cx::one(prec);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mul_trunc(&self, other: &TSeries, len: usize) -> TSeries {
        let prec = self.coeffs.first().map_or(64, Cx::precision);
        let mut r = TSeries::zero(len, prec);
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                if b.is_zero() {
                    continue;
                }
                r.coeffs[i + j] = &r.coeffs[i + j] + &(a * b);
            }
        }
        r
    }

    /// Order of the first coefficient whose modulus exceeds `tiny`.
    pub fn order(&self, tiny: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| c.ln_abs() > tiny.ln())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Truncation {
    /// Total degree in the shifted variables `U''` at most the bound.
    TotalDegree(i64),
    /// `⟨weight, β⟩ ≤ max`; the weight must be positive on the shifted variables.
    Weight { weight: Vec<i64>, max: i64 },
}

/// Local expansion of a Laurent polynomial at `(0, u'')` in the variables
/// `(u', U'') = (u', u'' − u''*)`.
#[derive(Clone, Debug)]
pub struct JetSeries {
    pub k: usize,
    pub base_point: Vec<Cx>,
    pub terms: BTreeMap<Exp, Cx>,
    pub truncation: Truncation,
}

fn binomial(e: i64, m: i64) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..m {
        num *= BigInt::from(e - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Expands `g` at `u*` (first `k` entries zero) and truncates it.
pub fn local_expand(g: &SparsePoly, k: usize, u_star: &[Cx], trunc: &Truncation) -> Result<JetSeries> {
    let n = g.n();
    assert_eq!(u_star.len(), n);
    let prec = u_star.iter().map(Cx::precision).max().unwrap_or(64);
    if let Truncation::Weight { weight, .. } = trunc {
        if weight[k..].iter().any(|&w| w <= 0) {
            return Err(Error::ExpansionPole("truncation weight must be positive on shifted variables".into()));
        }
    }
    // series of (u*_l + U_l)^e, cached by (l, e, max order)
    let mut cache: HashMap<(usize, i64, i64), Vec<Cx>> = HashMap::new();
    let mut acc: BTreeMap<Exp, (Cx, F)> = BTreeMap::new();

    for (beta, c) in g.terms() {
        let head = &beta[..k];
        if head.iter().any(|&b| b < 0) {
            return Err(Error::ExpansionPole(format!("negative power of a vanishing variable in {beta:?}")));
        }
        if head.iter().all(|&b| b == 0) && beta[k..].iter().any(|&b| b < 0) {
            return Err(Error::ExpansionPole(format!("negative power without a vanishing factor in {beta:?}")));
        }
        let budget: Vec<i64> = match trunc {
            Truncation::TotalDegree(d) => vec![*d; n - k],
            Truncation::Weight { weight, max } => {
                let w0: i64 = head.iter().zip(weight).map(|(a, b)| a * b).sum();
                if w0 > *max {
                    continue;
                }
                (k..n).map(|l| (max - w0) / weight[l]).collect()
            }
        };
        let mut series = Vec::with_capacity(n - k);
        for l in k..n {
            let e = beta[l];
            let mmax = if e >= 0 { budget[l - k].min(e) } else { budget[l - k] };
            let s = cache.entry((l, e, mmax)).or_insert_with(|| {
                if e == 0 {
                    return vec![Cx::one(prec)];
                }
                let inv = u_star[l].recip();
                let mut pw = u_star[l].powi(e);
                let mut out = Vec::with_capacity(mmax as usize + 1);
                for m in 0..=mmax {
                    let b = Rat::from_integer(binomial(e, m));
                    out.push(&Cx::from_rat(&b, prec) * &pw);
                    pw = &pw * &inv;
                }
                out
            });
            series.push(s.clone());
        }
        let coef = Cx::from_rat(c, prec);
        let mut stack: Vec<(usize, Exp, Cx)> = vec![(0, head.to_vec(), coef)];
        while let Some((depth, exp, val)) = stack.pop() {
            if depth == n - k {
                let ok = match trunc {
                    Truncation::TotalDegree(d) => exp[k..].iter().sum::<i64>() <= *d,
                    Truncation::Weight { weight, max } => {
                        exp.iter().zip(weight).map(|(a, b)| a * b).sum::<i64>() <= *max
                    }
                };
                if ok {
                    let mag = val.norm_sqr();
                    let slot = acc.entry(exp).or_insert_with(|| (Cx::zero(prec), crate::mp::fzero(prec)));
                    slot.0 = &slot.0 + &val;
                    if mag > slot.1 {
                        slot.1 = mag;
                    }
                }
                continue;
            }
            for (m, sc) in series[depth].iter().enumerate() {
                if sc.is_zero() {
                    continue;
                }
                let mut e2 = exp.clone();
                e2.push(m as i64);
                stack.push((depth + 1, e2, &val * sc));
            }
        }
    }

    // drop cancellations down to the working precision
    let cut = F::from_parts(dashu_int::IBig::ONE, -((prec as isize * 6) / 5));
    let terms = acc
        .into_iter()
        .filter(|(_, (v, mag))| v.norm_sqr() > &cut * mag)
        .map(|(e, (v, _))| (e, v))
        .collect();
    Ok(JetSeries { k, base_point: u_star.to_vec(), terms, truncation: trunc.clone() })
}

/// Jets of `⟨μ_j, ϑ_u g⟩` for each direction `μ_j`.
pub fn mu_pair_jets(g: &SparsePoly, mu: &[IntVec], k: usize, u_star: &[Cx], trunc: &Truncation) -> Result<Vec<JetSeries>> {
    mu.iter().map(|m| local_expand(&g.theta_along(m), k, u_star, trunc)).collect()
}

impl JetSeries {
    pub fn support(&self) -> Vec<IntVec> {
        self.terms.keys().map(|e| e.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    /// Evaluates the jet at local coordinates `(u', U'')`.
    pub fn eval(&self, local: &[Cx]) -> Cx {
        let prec = local.iter().map(Cx::precision).max().unwrap_or(64);
        let mut acc = Cx::zero(prec);
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in local.iter().zip(e) {
                if k != 0 {
                    m = &m * &x.powi(k);
                }
            }
            acc = &acc + &m;
        }
        acc
    }

    /// The terms of minimal weight `rho` under `q`, as a polynomial in `c`.
    pub fn initial_form(&self, q: &[i64], rho: i64) -> Vec<(Exp, Cx)> {
        self.terms
            .iter()
            .filter(|(e, _)| weight(e, q) == rho)
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect()
    }

    /// Substitutes `u_i = t^{q_i} C_i(t)` (shifted for `i ≥ k`) and returns the
    /// series through order `len − 1`.
    pub fn along_curve(&self, q: &[i64], c: &[TSeries], len: usize) -> TSeries {
        let prec = self.base_point.iter().map(Cx::precision).max().unwrap_or(64);
        let mut out = TSeries::zero(len, prec);
        let mut powers: HashMap<(usize, i64), TSeries> = HashMap::new();
        for (e, a) in &self.terms {
            let w = weight(e, q);
            assert!(w >= 0, "jet term of negative weight along the curve");
            let w = w as usize;
            if w >= len {
                continue;
            }
            let rem = len - w;
            let mut prod = TSeries::one(rem, prec);
            for (i, &b) in e.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let p = powers.entry((i, b)).or_insert_with(|| {
                    let mut s = TSeries::one(len, prec);
                    for _ in 0..b {
                        s = s.mul_trunc(&c[i], len);
                    }
                    s
                });
                prod = prod.mul_trunc(p, rem);
            }
            for (o, v) in prod.coeffs.iter().enumerate() {
                if !v.is_zero() {
                    out.coeffs[w + o] = &out.coeffs[w + o] + &(a * v);
                }
            }
        }
        out
    }
}

pub fn weight(e: &[i64], q: &[i64]) -> i64 {
    e.iter().zip(q).map(|(a, b)| a * b).sum()
}

/// Parses exponent data from integer vectors that must fit in `i64`.
pub fn exp_from_ints(v: &[Int]) -> Exp {
    v.iter().map(|x| x.to_i64().expect("exponent fits in i64")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{int, ivec};

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(int(n), int(d))
    }

    fn ex52() -> SparsePoly {
        SparsePoly::from_i64(3, &[(-3, &[2, 2, 1]), (1, &[1, 0, 1]), (1, &[0, 1, 1]), (1, &[6, 6, 3])])
    }

    #[test]
    fn substitution_into_toric_chart() {
        let w = IntMat::from_i64(&[vec![1, 0, 1], vec![-2, -1, -1], vec![2, 2, 1]]);
        let fw = ex52().substitute_monomial(&w);
        let expected = SparsePoly::from_i64(3, &[(1, &[3, 2, 2]), (1, &[0, 1, 0]), (1, &[0, 0, 3]), (-3, &[0, 0, 1])]);
        assert_eq!(fw, expected);
        assert_eq!(fw.display_with("u"), "u1^3*u2^2*u3^2 + u2 + u3^3 - 3*u3");
        assert_eq!(ex52().substitute_monomial(&IntMat::identity(3)), ex52());
    }

    #[test]
    fn log_gradient_scales_by_exponent() {
        let g = SparsePoly::from_i64(3, &[(1, &[0, 0, 3]), (-3, &[0, 0, 1])]);
        let grad = g.log_gradient();
        assert_eq!(grad[2], SparsePoly::from_i64(3, &[(3, &[0, 0, 3]), (-3, &[0, 0, 1])]));
        assert!(grad[0].is_empty());
        let c = SparsePoly::from_i64(2, &[(5, &[0, 0])]);
        assert!(c.log_gradient().iter().all(SparsePoly::is_empty));
    }

    #[test]
    fn expansion_of_inverse_power() {
        // u1*u2/u3 at (0, -1/3, 2/3): factor 1/u3 = (3/2)(1 - 3U3/2 + ...)
        let g = SparsePoly::from_i64(3, &[(1, &[1, 1, -1])]);
        let p = 256;
        let us = [Cx::zero(p), Cx::from_rat(&rat(-1, 3), p), Cx::from_rat(&rat(2, 3), p)];
        let jet = local_expand(&g, 1, &us, &Truncation::TotalDegree(3)).unwrap();
        let c = |e: &[i64]| jet.terms.get(e).unwrap().to_c64();
        assert!((c(&[1, 0, 0]) - Complex64::new(-0.5, 0.0)).norm() < 1e-14);
        assert!((c(&[1, 0, 1]) - Complex64::new(0.75, 0.0)).norm() < 1e-14);
        assert!((c(&[1, 1, 0]) - Complex64::new(1.5, 0.0)).norm() < 1e-14);
        assert!((c(&[1, 1, 1]) - Complex64::new(-2.25, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pole_without_vanishing_factor_is_rejected() {
        let g = SparsePoly::from_i64(2, &[(1, &[0, -1])]);
        let us = [Cx::zero(64), Cx::one(64)];
        assert!(matches!(
            local_expand(&g, 1, &us, &Truncation::TotalDegree(2)),
            Err(Error::ExpansionPole(_))
        ));
    }

    #[test]
    fn mu_pair_jet_of_the_ray_example() {
        // ⟨μ3, ϑ f^W⟩ at u3* = 1 equals u1³u2²(U3+1)² + u2 + 3U3(U3+1)(U3+2)
        let w = IntMat::from_i64(&[vec![1, 0, 1], vec![-2, -1, -1], vec![2, 2, 1]]);
        let m = crate::lattice::invert_unimodular(&w).unwrap();
        let fw = ex52().substitute_monomial(&w);
        let mu: Vec<IntVec> = m.col_vecs();
        let p = 128;
        let us = [Cx::zero(p), Cx::zero(p), Cx::one(p)];
        let jets = mu_pair_jets(&fw, &mu, 2, &us, &Truncation::TotalDegree(6)).unwrap();
        let expected: BTreeMap<Exp, f64> = [
            (vec![3, 2, 0], 1.0),
            (vec![3, 2, 1], 2.0),
            (vec![3, 2, 2], 1.0),
            (vec![0, 1, 0], 1.0),
            (vec![0, 0, 1], 6.0),
            (vec![0, 0, 2], 9.0),
            (vec![0, 0, 3], 3.0),
        ]
        .into_iter()
        .collect();
        let got = &jets[2].terms;
        assert_eq!(got.keys().cloned().collect::<Vec<_>>(), expected.keys().cloned().collect::<Vec<_>>());
        for (e, v) in expected {
            assert!((got[&e].to_c64().re - v).abs() < 1e-12, "{e:?}");
        }
        assert_eq!(mu[2], ivec(&[-1, 1, 1]));
    }

    #[test]
    fn curve_substitution_matches_direct_power_series() {
        // jet = 2 u1 + U2^2 with u1 = t C1, U2 = t^2 C2
        let p = 128;
        let mut terms = BTreeMap::new();
        terms.insert(vec![1, 0], Cx::from_i64(2, p));
        terms.insert(vec![0, 2], Cx::one(p));
        let jet = JetSeries {
            k: 1,
            base_point: vec![Cx::zero(p), Cx::one(p)],
            terms,
            truncation: Truncation::TotalDegree(2),
        };
        let c1 = TSeries { coeffs: vec![Cx::one(p), Cx::from_i64(3, p)] };
        let c2 = TSeries { coeffs: vec![Cx::from_i64(-1, p), Cx::one(p)] };
        let s = jet.along_curve(&[1, 2], &[c1, c2], 7);
        let got: Vec<f64> = s.coeffs.iter().map(|c| c.to_c64().re).collect();
        assert_eq!(got, vec![0.0, 2.0, 6.0, 0.0, 1.0, -2.0, 1.0]);
        assert_eq!(s.order(1e-30), Some(1));
    }
}
