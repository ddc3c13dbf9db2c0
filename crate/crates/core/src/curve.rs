//! Local Newton polyhedron Δ* at a critical point, its distinguished facet,
//! and synthesis of the witness curve `u(t)` together with its image `x(t)`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::chart::{check_mu_condition, Chart};
use crate::critical::{clean, random_start, solve_c64};
use crate::error::{Error, Result};
use crate::laurent::{mu_pair_jets, weight, Exp, JetSeries, SparsePoly, TSeries, Truncation};
use crate::lattice::{self, int, Int, IntVec};
use crate::mp::{self, Cx, F};
use crate::polyhedra::{self, ser_int_vecs};

/// Working precision for the facet search, before the exponents are known.
pub const SEARCH_PRECISION: usize = 512;
const START_DEGREE: i64 = 6;
const DEGREE_STEP: i64 = 4;
const DEEPENING_ROUNDS: i64 = 5;
const ORDER0_STARTS: usize = 64;
const MIN_MODULUS: f64 = 1e-6;
const RELOCATION_STARTS: usize = 16;
const RELOCATION_KEEP: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FacetData {
    /// Inner normal of the facet; primitive, positive on the shifted variables.
    pub q: Vec<i64>,
    pub rho: i64,
    #[serde(rename = "L0")]
    pub l0: i64,
    /// Indices `j` whose exponent is not minimal; reported 1-based.
    #[serde(rename = "J", serialize_with = "ser_one_based")]
    pub j: Vec<usize>,
    #[serde(serialize_with = "ser_int_vecs")]
    pub facet_vertices: Vec<IntVec>,
    /// `W·(q′, 0)`, the leading exponents of `x(t)`.
    pub spread: Vec<i64>,
    /// Total degree of the jets that fixed the facet.
    pub degree: i64,
}

fn ser_one_based<S: Serializer>(v: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|j| j + 1).collect::<Vec<_>>().serialize(s)
}

impl FacetData {
    /// Number of coefficient vectors in the curve.
    pub fn parametric_length(&self) -> usize {
        (self.l0 - self.rho + 2).max(1) as usize
    }

    /// Equations solved during synthesis: `(L₀ + 1 − ρ)·|J|`.
    pub fn equation_count(&self) -> usize {
        ((self.l0 + 1 - self.rho).max(0) as usize) * self.j.len()
    }
}

/// Face polynomial `f_γ^W` in the torus variables `u''`.
pub fn chart_face_polynomial(fw: &SparsePoly, k: usize) -> SparsePoly {
    let coords: Vec<usize> = (k..fw.n()).collect();
    fw.restrict(|e| e[..k].iter().all(|&b| b == 0)).project(&coords)
}

/// `W·(q′,0)`, `L₀ = max_{i≠j}(e_i − e_j)` and `J = {j : e_j > min e}`.
pub fn compute_l0_j(q_prime: &[i64], chart: &Chart) -> Result<(i64, Vec<usize>, Vec<i64>)> {
    let qp: IntVec = q_prime.iter().map(|&x| int(x)).collect();
    if !check_mu_condition(chart, &qp)? {
        return Err(Error::MuViolated(format!("{q_prime:?}")));
    }
    let e = lattice::to_i64_vec(&chart.exponent_spread(&qp));
    let lo = *e.iter().min().unwrap();
    let hi = *e.iter().max().unwrap();
    let j = (0..e.len()).filter(|&i| e[i] > lo).collect();
    Ok((hi - lo, j, e))
}

#[derive(Clone, Debug, PartialEq)]
struct Candidate {
    q: Vec<i64>,
    rho: i64,
    vertices: Vec<IntVec>,
}

fn affine_dim(points: &[&IntVec]) -> Option<usize> {
    let (first, rest) = points.split_first()?;
    let diffs: Vec<IntVec> = rest.iter().map(|p| lattice::sub(p, first)).collect();
    Some(lattice::rank(&diffs))
}

fn select_facet(jets: &[JetSeries], chart: &Chart) -> Result<Candidate> {
    let (n, k) = (chart.n(), chart.k);
    let support: BTreeSet<Exp> = jets.iter().flat_map(|j| j.terms.keys().cloned()).collect();
    if support.is_empty() {
        return Err(Error::NoQualifyingFacet("all jets vanish".into()));
    }
    let points: Vec<IntVec> = support.iter().map(|e| e.iter().map(|&x| int(x)).collect()).collect();
    let rays: Vec<IntVec> = (k..n)
        .map(|i| (0..n).map(|l| int(i64::from(l == i))).collect())
        .collect();
    let (_, facets) = polyhedra::polyhedron_facets(&points, &rays)?;

    let mut geometric = Vec::new();
    for face in &facets {
        let g = lattice::content(&face.normal);
        if g.is_zero() {
            continue;
        }
        let q = lattice::to_i64_vec(&lattice::primitive(&face.normal));
        let rho_int: Int = &face.offset / &g;
        let rho = lattice::to_i64_vec(&[rho_int])[0];
        if rho <= 0 || q[k..].iter().any(|&x| x <= 0) {
            continue;
        }
        let on: Vec<&IntVec> = face.vertex_subset.iter().filter(|&&i| i < points.len()).map(|&i| &points[i]).collect();
        let base: Vec<&IntVec> = on.iter().copied().filter(|p| p[..k].iter().all(Zero::is_zero)).collect();
        if affine_dim(&base) != Some(n - k - 1) {
            continue;
        }
        let owned: Vec<IntVec> = on.iter().map(|p| (*p).clone()).collect();
        let mut vertices = polyhedra::convex_hull(&owned)?.vertices;
        vertices.sort();
        geometric.push(Candidate { q, rho, vertices });
    }
    if geometric.is_empty() {
        return Err(Error::NoQualifyingFacet(format!("{} facets of the local polyhedron examined", facets.len())));
    }
    let mut admissible = Vec::new();
    for c in &geometric {
        let qp: IntVec = c.q[..k].iter().map(|&x| int(x)).collect();
        if check_mu_condition(chart, &qp)? {
            admissible.push(c.clone());
        }
    }
    admissible.sort_by(|a, b| a.q.cmp(&b.q));
    admissible.into_iter().next().ok_or_else(|| {
        let qs: Vec<Vec<i64>> = geometric.iter().map(|c| c.q[..k].to_vec()).collect();
        Error::MuViolated(format!("{qs:?}"))
    })
}

/// Finds the facet of Δ* for `f^W` at `u*`, deepening the jets until two
/// consecutive truncations agree.
pub fn build_delta_star_and_facet(fw: &SparsePoly, chart: &Chart, u_star: &[Cx]) -> Result<FacetData> {
    let mut previous: Option<Candidate> = None;
    let mut last_err = Error::FacetUnstable;
    for round in 0..DEEPENING_ROUNDS {
        let degree = START_DEGREE + DEGREE_STEP * round;
        let jets = mu_pair_jets(fw, &chart.mu, chart.k, u_star, &Truncation::TotalDegree(degree))?;
        match select_facet(&jets, chart) {
            Ok(c) => {
                if previous.as_ref() == Some(&c) {
                    let (l0, j, spread) = compute_l0_j(&c.q[..chart.k], chart)?;
                    return Ok(FacetData {
                        q: c.q,
                        rho: c.rho,
                        l0,
                        j,
                        facet_vertices: c.vertices,
                        spread,
                        degree: degree - DEGREE_STEP,
                    });
                }
                previous = Some(c);
            }
            Err(e @ (Error::NoQualifyingFacet(_) | Error::MuViolated(_))) => {
                previous = None;
                last_err = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(if previous.is_some() { Error::FacetUnstable } else { last_err })
}

/// Bits needed to evaluate the curve and `f` along it down to `tmin`.
pub fn working_precision(f: &SparsePoly, spread: &[i64], l0: i64, tmin: f64) -> usize {
    let cancel = f
        .terms()
        .keys()
        .map(|a| -weight(a, spread))
        .max()
        .unwrap_or(0)
        .max(0);
    let bits = 128.0 + (cancel + l0 + 4) as f64 * (1.0 / tmin).log2().max(1.0);
    (bits / 64.0).ceil() as usize * 64
}

/// Jets used for synthesis: weight-truncated just past the highest order needed.
pub fn synthesis_jets(fw: &SparsePoly, chart: &Chart, u_star: &[Cx], facet: &FacetData) -> Result<Vec<JetSeries>> {
    let trunc = Truncation::Weight { weight: facet.q.clone(), max: facet.l0 + 3 };
    mu_pair_jets(fw, &chart.mu, chart.k, u_star, &trunc)
}

/// `u_i(t) = u*_i + t^{q_i} Σ_ℓ c_i(ℓ) t^ℓ` (with `u*_i = 0` for `i < k`).
#[derive(Clone, Debug)]
pub struct CurveJet {
    pub k: usize,
    pub u_star: Vec<Cx>,
    pub q: Vec<i64>,
    /// `coeffs[ℓ][i] = c_i(ℓ)`.
    pub coeffs: Vec<Vec<Cx>>,
}

impl CurveJet {
    pub fn length(&self) -> usize {
        self.coeffs.len()
    }

    /// The series `C_i(t)` truncated to `len` orders.
    pub fn series(&self, len: usize) -> Vec<TSeries> {
        let n = self.q.len();
        let prec = self.precision();
        (0..n)
            .map(|i| {
                let mut s = TSeries::zero(len, prec);
                for (l, c) in self.coeffs.iter().enumerate().take(len) {
                    s.coeffs[l] = c[i].clone();
                }
                s
            })
            .collect()
    }

    pub fn precision(&self) -> usize {
        self.u_star.iter().map(Cx::precision).max().unwrap_or(64)
    }

    /// Whether every coefficient and base coordinate is real.
    pub fn is_real(&self) -> bool {
        let cut = -0.4 * self.precision() as f64 * std::f64::consts::LN_2;
        let real = |z: &Cx| {
            let im = Cx::new(z.im.clone(), mp::fzero(z.precision()));
            z.im == F::ZERO || im.ln_abs() < cut + (1.0 + z.abs_f64()).ln()
        };
        self.u_star.iter().all(real) && self.coeffs.iter().flatten().all(real)
    }

    /// `u(t)` as Laurent polynomials in `t`.
    pub fn components(&self) -> Vec<LaurentT> {
        let prec = self.precision();
        (0..self.q.len())
            .map(|i| {
                let c: Vec<Cx> = self.coeffs.iter().map(|v| v[i].clone()).collect();
                if i < self.k {
                    LaurentT { low: self.q[i], coeffs: c }
                } else {
                    let shift = self.q[i] as usize;
                    let mut coeffs = vec![Cx::zero(prec); shift + c.len()];
                    coeffs[0] = self.u_star[i].clone();
                    for (l, z) in c.into_iter().enumerate() {
                        coeffs[shift + l] = &coeffs[shift + l] + &z;
                    }
                    LaurentT { low: 0, coeffs }
                }
            })
            .collect()
    }
}

impl Serialize for CurveJet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let pair = |z: &Cx| {
            let c = z.to_c64();
            [clean(c.re), clean(c.im)]
        };
        let mut st = s.serialize_struct("CurveJet", 3)?;
        st.serialize_field("u_star", &self.u_star.iter().map(pair).collect::<Vec<_>>())?;
        st.serialize_field("q", &self.q)?;
        let coeffs: Vec<Vec<[f64; 2]>> = self.coeffs.iter().map(|v| v.iter().map(pair).collect()).collect();
        st.serialize_field("coefficients", &coeffs)?;
        st.end()
    }
}

/// A polynomial in the curve coefficients, given by its terms.
struct Form {
    terms: Vec<(Exp, Cx)>,
    terms64: Vec<(Exp, Complex64)>,
}

impl Form {
    fn new(terms: Vec<(Exp, Cx)>) -> Self {
        let terms64 = terms.iter().map(|(e, c)| (e.clone(), c.to_c64())).collect();
        Form { terms, terms64 }
    }

    fn monomial64(e: &[i64], c: &[Complex64]) -> Complex64 {
        e.iter().zip(c).fold(Complex64::new(1.0, 0.0), |acc, (&b, z)| acc * z.powi(b as i32))
    }

    fn eval64(&self, c: &[Complex64]) -> (Complex64, f64) {
        let mut sum = Complex64::zero();
        let mut scale = 0.0f64;
        for (e, a) in &self.terms64 {
            let v = a * Self::monomial64(e, c);
            scale = scale.max(v.norm());
            sum += v;
        }
        (sum, scale)
    }

    fn grad64(&self, c: &[Complex64], free: &[usize]) -> Vec<Complex64> {
        free.iter()
            .map(|&i| {
                let mut s = Complex64::zero();
                for (e, a) in &self.terms64 {
                    if e[i] == 0 {
                        continue;
                    }
                    let mut d = e.clone();
                    d[i] -= 1;
                    s += a * e[i] as f64 * Self::monomial64(&d, c);
                }
                s
            })
            .collect()
    }

    fn monomial(e: &[i64], c: &[Cx], prec: usize) -> Cx {
        e.iter().zip(c).fold(Cx::one(prec), |acc, (&b, z)| if b == 0 { acc } else { &acc * &z.powi(b) })
    }

    fn eval(&self, c: &[Cx], prec: usize) -> Cx {
        self.terms.iter().fold(Cx::zero(prec), |acc, (e, a)| &acc + &(a * &Self::monomial(e, c, prec)))
    }

    fn grad(&self, c: &[Cx], free: &[usize], prec: usize) -> Vec<Cx> {
        free.iter()
            .map(|&i| {
                let mut s = Cx::zero(prec);
                for (e, a) in &self.terms {
                    if e[i] == 0 {
                        continue;
                    }
                    let mut d = e.clone();
                    d[i] -= 1;
                    let m = &Cx::from_i64(e[i], prec) * &Self::monomial(&d, c, prec);
                    s = &s + &(a * &m);
                }
                s
            })
            .collect()
    }
}

/// Free index sets of size `m` in `0..n`, highest indices first.
fn free_patterns(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    rec(0, n, m, &mut cur, &mut out);
    out.sort_by(|a, b| b.iter().rev().cmp(a.iter().rev()).then_with(|| b.cmp(a)));
    out
}

fn residual64(forms: &[Form], c: &[Complex64]) -> (Vec<Complex64>, f64, f64) {
    let mut r = Vec::with_capacity(forms.len());
    let (mut norm, mut scale) = (0.0f64, 0.0f64);
    for f in forms {
        let (v, s) = f.eval64(c);
        norm = norm.max(v.norm());
        scale = scale.max(s);
        r.push(v);
    }
    (r, norm, scale)
}

fn jacobian64(forms: &[Form], c: &[Complex64], free: &[usize]) -> Vec<Vec<Complex64>> {
    forms.iter().map(|f| f.grad64(c, free)).collect()
}

/// Rough condition number of a small square matrix.
fn condition64(a: &[Vec<Complex64>]) -> f64 {
    let n = a.len();
    let norm_a = a.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut inv_cols = Vec::with_capacity(n);
    for k in 0..n {
        let e: Vec<Complex64> = (0..n).map(|i| Complex64::new(f64::from(i == k), 0.0)).collect();
        match solve_c64(a, &e) {
            Some(x) => inv_cols.push(x),
            None => return f64::INFINITY,
        }
    }
    let norm_inv = (0..n).map(|i| inv_cols.iter().map(|c| c[i].norm()).sum::<f64>()).fold(0.0, f64::max);
    norm_a * norm_inv
}

fn newton64(forms: &[Form], free: &[usize], mut c: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let (mut r, mut norm, _) = residual64(forms, &c);
    for _ in 0..100 {
        let (_, _, scale) = residual64(forms, &c);
        if norm <= 1e-12 * scale.max(1e-300) {
            return Some(c);
        }
        let j = jacobian64(forms, &c, free);
        let neg: Vec<Complex64> = r.iter().map(|z| -z).collect();
        let step = solve_c64(&j, &neg)?;
        let mut lambda = 1.0;
        loop {
            let mut trial = c.clone();
            for (&i, s) in free.iter().zip(&step) {
                trial[i] += s * lambda;
            }
            let (r2, n2, _) = residual64(forms, &trial);
            if n2 < norm || lambda < 1e-3 {
                c = trial;
                r = r2;
                norm = n2;
                break;
            }
            lambda *= 0.5;
        }
        if c.iter().any(|z| !z.is_finite()) {
            return None;
        }
    }
    let (_, _, scale) = residual64(forms, &c);
    (norm <= 1e-9 * scale.max(1e-300)).then_some(c)
}

fn polish(forms: &[Form], free: &[usize], c: &[Complex64], prec: usize) -> Option<Vec<Cx>> {
    let mut x: Vec<Cx> = c.iter().map(|z| Cx::from_c64(*z, prec)).collect();
    let target = -(prec as f64) * 0.85 * std::f64::consts::LN_2;
    let tiny = mp::fzero(prec);
    for _ in 0..(prec.ilog2() as usize + 12) {
        let r: Vec<Cx> = forms.iter().map(|f| f.eval(&x, prec)).collect();
        let worst = r.iter().map(Cx::ln_abs).fold(f64::NEG_INFINITY, f64::max);
        if worst < target {
            break;
        }
        let j: Vec<Vec<Cx>> = forms.iter().map(|f| f.grad(&x, free, prec)).collect();
        let neg: Vec<Cx> = r.iter().map(|z| -z).collect();
        let step = mp::solve(&j, &neg, &tiny)?;
        for (&i, s) in free.iter().zip(&step) {
            x[i] = &x[i] + s;
        }
    }
    Some(x)
}

fn order0(forms: &[Form], n: usize, seed: u64, prec: usize) -> Result<(Vec<Cx>, Vec<usize>)> {
    let m = forms.len();
    for (p, free) in free_patterns(n, m).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(p as u64));
        let mut found: Vec<Vec<Complex64>> = Vec::new();
        for _ in 0..ORDER0_STARTS {
            let start = random_start(&mut rng, m);
            let mut c = vec![Complex64::new(1.0, 0.0); n];
            for (&i, z) in free.iter().zip(&start) {
                c[i] = *z;
            }
            let Some(sol) = newton64(forms, &free, c) else { continue };
            if sol.iter().any(|z| z.norm() < MIN_MODULUS || z.norm() > 1.0 / MIN_MODULUS) {
                continue;
            }
            if condition64(&jacobian64(forms, &sol, &free)) > 1e10 {
                continue;
            }
            if !found.iter().any(|s| s.iter().zip(&sol).all(|(a, b)| (a - b).norm() <= 1e-7 * (1.0 + a.norm()))) {
                found.push(sol);
            }
        }
        let key = |s: &Vec<Complex64>| {
            let spread = s.iter().map(|z| z.norm().ln().abs()).fold(0.0, f64::max);
            let flat: Vec<f64> = s.iter().flat_map(|z| [clean(z.re), clean(z.im)]).collect();
            (clean(spread), flat)
        };
        found.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for sol in &found {
            if let Some(x) = polish(forms, &free, sol, prec) {
                return Ok((x, free));
            }
        }
    }
    Err(Error::Order0SolveFailed(format!("{m} equations in {n} unknowns, all pinning patterns exhausted")))
}

/// Which coefficients of `⟨μ_j, ϑ_u f^W⟩(Q(t))` the synthesis forces to vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Orders `ρ..=L₀` for every `j ∈ J`.
    Uniform,
    /// Orders `ρ..=e_j − min_{i≠j} e_i` for each `j`: exactly what the order condition needs.
    Minimal,
}

impl FacetData {
    /// Indices `j` whose `t^{ρ+ℓ}` coefficient must vanish.
    pub fn equations_at(&self, l: usize, schedule: Schedule) -> Vec<usize> {
        let order = self.rho + l as i64;
        if order > self.l0 {
            return Vec::new();
        }
        match schedule {
            Schedule::Uniform => self.j.clone(),
            Schedule::Minimal => self.j.iter().copied().filter(|&j| order <= self.order_gap(j)).collect(),
        }
    }

    /// `e_j − min_{i≠j} e_i`.
    pub fn order_gap(&self, j: usize) -> i64 {
        let others = self.spread.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &e)| e).min();
        others.map_or(0, |m| self.spread[j] - m)
    }

    pub fn scheduled_equations(&self, schedule: Schedule) -> usize {
        (0..self.parametric_length()).map(|l| self.equations_at(l, schedule).len()).sum()
    }
}

fn jet_tolerance(jets: &[JetSeries], prec: usize) -> f64 {
    let scale = jets.iter().flat_map(|j| j.terms.values()).map(Cx::ln_abs).fold(0.0f64, f64::max);
    scale - 0.45 * prec as f64 * std::f64::consts::LN_2
}

/// Solves the triangular system for the curve coefficients order by order.
pub fn synthesize_curve(
    jets: &[JetSeries],
    facet: &FacetData,
    u_star: &[Cx],
    schedule: Schedule,
    seed: u64,
) -> Result<CurveJet> {
    let n = facet.q.len();
    let prec = u_star.iter().map(Cx::precision).max().unwrap_or(64);
    if jets.iter().any(|j| j.terms.keys().any(|e| weight(e, &facet.q) < facet.rho)) {
        return Err(Error::FacetUnstable);
    }
    let rows = facet.equations_at(0, schedule);
    if rows.is_empty() {
        return extend_curve(jets, facet, u_star, schedule, vec![Cx::one(prec); n], Vec::new());
    }
    let forms: Vec<Form> = rows.iter().map(|&j| Form::new(jets[j].initial_form(&facet.q, facet.rho))).collect();
    let (c0, free) = order0(&forms, n, seed, prec)?;
    extend_curve(jets, facet, u_star, schedule, c0, free)
}

/// Fills in orders `1..` given a solution `c0` of the order-0 system with
/// unknowns `free`; the last order is all ones.
pub fn extend_curve(
    jets: &[JetSeries],
    facet: &FacetData,
    u_star: &[Cx],
    schedule: Schedule,
    c0: Vec<Cx>,
    free: Vec<usize>,
) -> Result<CurveJet> {
    let n = facet.q.len();
    let k = jets.first().map_or(0, |j| j.k);
    let prec = u_star.iter().map(Cx::precision).max().unwrap_or(64);
    let (q, rho) = (&facet.q, facet.rho);
    let length = facet.parametric_length();
    let mut curve = CurveJet { k, u_star: u_star.to_vec(), q: q.clone(), coeffs: vec![c0.clone()] };
    if free.is_empty() && facet.scheduled_equations(schedule) == 0 {
        curve.coeffs.resize(length, vec![Cx::zero(prec); n]);
        return Ok(curve);
    }
    let forms: Vec<Form> = facet.j.iter().map(|&j| Form::new(jets[j].initial_form(q, rho))).collect();
    let row_of = |j: usize| facet.j.iter().position(|&x| x == j).unwrap();
    let tol = jet_tolerance(jets, prec);
    let tiny = mp::fzero(prec);
    let c064: Vec<Complex64> = c0.iter().map(Cx::to_c64).collect();

    for l in 1..length - 1 {
        let rows = facet.equations_at(l, schedule);
        let mut next = vec![Cx::one(prec); n];
        let order = rho as usize + l;
        if !rows.is_empty() {
            // pick unknowns among the order-0 free set with a well-conditioned block
            let cols = free_patterns(free.len(), rows.len())
                .into_iter()
                .map(|p| p.iter().map(|&i| free[i]).collect::<Vec<_>>())
                .find(|cols| {
                    let a: Vec<Vec<Complex64>> = rows.iter().map(|&j| forms[row_of(j)].grad64(&c064, cols)).collect();
                    condition64(&a) < 1e10
                })
                .ok_or_else(|| Error::LinearSolveInconsistent {
                    order: l,
                    detail: "no nonsingular block in the Jacobian of the leading forms".into(),
                })?;
            for &i in &cols {
                next[i] = Cx::zero(prec);
            }
            curve.coeffs.push(next);
            let series = curve.series(l + 1);
            let neg: Vec<Cx> = rows
                .iter()
                .map(|&j| -jets[j].along_curve(q, &series, order + 1).coeffs[order].clone())
                .collect();
            let jac: Vec<Vec<Cx>> = rows.iter().map(|&j| forms[row_of(j)].grad(&c0, &cols, prec)).collect();
            let step = mp::solve(&jac, &neg, &tiny).ok_or_else(|| Error::LinearSolveInconsistent {
                order: l,
                detail: "singular Jacobian of the leading forms".into(),
            })?;
            for (&i, s) in cols.iter().zip(step) {
                curve.coeffs[l][i] = s;
            }
            let series = curve.series(l + 1);
            for &j in &rows {
                let r = jets[j].along_curve(q, &series, order + 1).coeffs[order].ln_abs();
                if r > tol {
                    return Err(Error::LinearSolveInconsistent {
                        order: l,
                        detail: format!("residual e^{r:.1} for index {}", j + 1),
                    });
                }
            }
        } else {
            curve.coeffs.push(next);
        }
    }
    curve.coeffs.push(vec![Cx::one(prec); n]);
    Ok(curve)
}

/// Moves a base point along a non-isolated critical locus of `g` until the
/// order-0 system has a solution with every coefficient nonzero. Returns the
/// new `u*`, `c(0)` and the unknowns used.
pub fn relocate_base_point(
    fw: &SparsePoly,
    chart: &Chart,
    facet: &FacetData,
    u_star: &[Cx],
    schedule: Schedule,
    seed: u64,
) -> Result<(Vec<Cx>, Vec<Cx>, Vec<usize>)> {
    let (n, k) = (chart.n(), chart.k);
    let prec = u_star.iter().map(Cx::precision).max().unwrap_or(64);
    let rows = facet.equations_at(0, schedule);
    let gs: Vec<SparsePoly> = rows.iter().map(|&j| fw.theta_along(&chart.mu[j])).collect();
    let grad = chart_face_polynomial(fw, k).log_gradient();
    let system = JointSystem { gs, grad, k, n, q: facet.q.clone(), rho: facet.rho };
    let v0: Vec<Complex64> = u_star[k..].iter().map(Cx::to_c64).collect();
    for (p, free) in free_patterns(n, rows.len()).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + p as u64));
        let mut found: Vec<(f64, Vec<Complex64>)> = Vec::new();
        for _ in 0..RELOCATION_STARTS {
            if found.len() >= RELOCATION_KEEP {
                break;
            }
            let mut z = random_start(&mut rng, free.len());
            z.extend(&v0);
            let Some(z) = system.solve(&free, &z, 64) else { continue };
            let (c, v) = system.split(&free, &z);
            if c.iter().chain(&v).any(|w| w.norm() < MIN_MODULUS || w.norm() > 1.0 / MIN_MODULUS) {
                continue;
            }
            let dist = v.iter().zip(&v0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            found.push((clean(dist), z));
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.iter().map(|w| clean(w.re)).partial_cmp(b.1.iter().map(|w| clean(w.re))).unwrap()));
        for (_, z) in found {
            let Some(z) = system.polish(&free, &z, prec) else { continue };
            let m = free.len();
            let mut c = vec![Cx::one(prec); n];
            for (&i, w) in free.iter().zip(&z[..m]) {
                c[i] = w.clone();
            }
            let mut u = vec![Cx::zero(prec); k];
            u.extend(z[m..].iter().cloned());
            return Ok((u, c, free));
        }
    }
    Err(Error::Order0SolveFailed("no point of the critical locus admits a generic order-0 solution".into()))
}

/// Order-0 forms together with criticality, as functions of the free
/// coefficients and the base point.
struct JointSystem {
    gs: Vec<SparsePoly>,
    grad: Vec<SparsePoly>,
    k: usize,
    n: usize,
    q: Vec<i64>,
    rho: i64,
}

impl JointSystem {
    fn split(&self, free: &[usize], z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        (z[..free.len()].to_vec(), z[free.len()..].to_vec())
    }

    fn residual(&self, free: &[usize], z: &[Cx], prec: usize) -> Option<Vec<Cx>> {
        let m = free.len();
        let mut c = vec![Cx::one(prec); self.n];
        for (&i, w) in free.iter().zip(z) {
            c[i] = w.clone();
        }
        let mut u = vec![Cx::zero(prec); self.k];
        u.extend(z[m..].iter().cloned());
        let trunc = Truncation::Weight { weight: self.q.clone(), max: self.rho };
        let mut r = Vec::with_capacity(self.gs.len() + self.grad.len());
        for g in &self.gs {
            let jet = crate::laurent::local_expand(g, self.k, &u, &trunc).ok()?;
            r.push(Form::new(jet.initial_form(&self.q, self.rho)).eval(&c, prec));
        }
        for h in &self.grad {
            r.push(h.eval_cx(&z[m..]));
        }
        Some(r)
    }

    /// Damped Gauss–Newton with forward-difference Jacobians.
    fn iterate(&self, free: &[usize], mut z: Vec<Cx>, prec: usize, iters: usize, target: f64) -> Option<Vec<Cx>> {
        let h_exp = -(prec as isize) / 2;
        let tiny = mp::fzero(prec);
        for _ in 0..iters {
            let r = self.residual(free, &z, prec)?;
            let ln_norm = r.iter().map(Cx::ln_abs).fold(f64::NEG_INFINITY, f64::max);
            if ln_norm < target {
                return Some(z);
            }
            let d = z.len();
            let mut jac = vec![vec![Cx::zero(prec); d]; r.len()];
            for col in 0..d {
                let h = Cx::new(F::from_parts(dashu_int::IBig::ONE, h_exp).with_precision(prec).value(), mp::fzero(prec));
                let h = &h * &Cx::from_f64_mag(1.0 + z[col].abs_f64(), prec);
                let mut zp = z.clone();
                zp[col] = &zp[col] + &h;
                let rp = self.residual(free, &zp, prec)?;
                for (row, (a, b)) in rp.iter().zip(&r).enumerate() {
                    jac[row][col] = &(a - b) / &h;
                }
            }
            let mut a = vec![vec![Cx::zero(prec); d]; d];
            let mut b = vec![Cx::zero(prec); d];
            for i in 0..d {
                for j in 0..d {
                    a[i][j] = jac.iter().fold(Cx::zero(prec), |s, row| &s + &(&row[i].conj() * &row[j]));
                }
                b[i] = -jac.iter().zip(&r).fold(Cx::zero(prec), |s, (row, ri)| &s + &(&row[i].conj() * ri));
            }
            let lambda = Cx::from_f64_mag(ln_norm.exp().max(1e-300), prec);
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = &row[i] + &lambda;
            }
            let step = mp::solve(&a, &b, &tiny)?;
            for (w, s) in z.iter_mut().zip(step) {
                *w = &*w + &s;
            }
            if z.iter().any(|w| !w.to_c64().is_finite()) {
                return None;
            }
        }
        let r = self.residual(free, &z, prec)?;
        let ln_norm = r.iter().map(Cx::ln_abs).fold(f64::NEG_INFINITY, f64::max);
        (ln_norm < target).then_some(z)
    }

    fn solve(&self, free: &[usize], z: &[Complex64], prec: usize) -> Option<Vec<Complex64>> {
        let z: Vec<Cx> = z.iter().map(|w| Cx::from_c64(*w, prec)).collect();
        let out = self.iterate(free, z, prec, 80, -28.0)?;
        Some(out.iter().map(Cx::to_c64).collect())
    }

    fn polish(&self, free: &[usize], z: &[Complex64], prec: usize) -> Option<Vec<Cx>> {
        let z: Vec<Cx> = z.iter().map(|w| Cx::from_c64(*w, prec)).collect();
        let target = -0.8 * prec as f64 * std::f64::consts::LN_2;
        self.iterate(free, z, prec, 60, target)
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub curve: CurveJet,
    pub facet: FacetData,
    pub schedule: Schedule,
    /// Whether `u*` was moved along its critical locus.
    pub relocated: bool,
}

/// Runs the synthesis with the uniform schedule, then the minimal one, and
/// for non-isolated base points finally relocates `u*` along the locus.
pub fn synthesize_witness(
    fw: &SparsePoly,
    chart: &Chart,
    u_star: &[Cx],
    facet: &FacetData,
    isolated: bool,
    seed: u64,
) -> Result<Synthesis> {
    let jets = synthesis_jets(fw, chart, u_star, facet)?;
    let mut first_err = None;
    for schedule in [Schedule::Uniform, Schedule::Minimal] {
        match synthesize_curve(&jets, facet, u_star, schedule, seed) {
            Ok(curve) => return Ok(Synthesis { curve, facet: facet.clone(), schedule, relocated: false }),
            Err(e @ (Error::Order0SolveFailed(_) | Error::LinearSolveInconsistent { .. })) => {
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let err = first_err.unwrap();
    if isolated {
        return Err(err);
    }
    let schedule = Schedule::Minimal;
    let (u, c0, free) = relocate_base_point(fw, chart, facet, u_star, schedule, seed)?;
    let moved = build_delta_star_and_facet(fw, chart, &u)?;
    if (moved.q.as_slice(), moved.rho) != (facet.q.as_slice(), facet.rho) {
        return Err(Error::NoQualifyingFacet(format!("facet changed to q = {:?} after relocating the base point", moved.q)));
    }
    let jets = synthesis_jets(fw, chart, &u, &moved)?;
    let curve = extend_curve(&jets, &moved, &u, schedule, c0, free)?;
    Ok(Synthesis { curve, facet: moved, schedule, relocated: true })
}

/// Laurent polynomial `t^low · Σ coeffs[i] t^i`.
#[derive(Clone, Debug)]
pub struct LaurentT {
    pub low: i64,
    pub coeffs: Vec<Cx>,
}

impl LaurentT {
    pub fn constant(c: Cx) -> Self {
        LaurentT { low: 0, coeffs: vec![c] }
    }

    /// From rational coefficients of `t^low, t^{low+1}, …`.
    pub fn from_rats(low: i64, coeffs: &[lattice::Rat], prec: usize) -> Self {
        LaurentT { low, coeffs: coeffs.iter().map(|r| Cx::from_rat(r, prec)).collect() }
    }

    pub fn mul(&self, o: &LaurentT) -> LaurentT {
        let prec = self.coeffs[0].precision().max(o.coeffs[0].precision());
        let mut coeffs = vec![Cx::zero(prec); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        LaurentT { low: self.low + o.low, coeffs }
    }

    pub fn pow(&self, e: u32) -> LaurentT {
        let prec = self.coeffs[0].precision();
        (0..e).fold(LaurentT::constant(Cx::one(prec)), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, t: &Cx) -> Cx {
        let prec = t.precision();
        let mut acc = Cx::zero(prec);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * t) + c;
        }
        &acc * &t.powi(self.low)
    }

    pub fn eval_c64(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c.to_c64();
        }
        acc * t.powi(self.low as i32)
    }

    /// Exponent of the lowest nonzero term.
    pub fn order(&self) -> i64 {
        self.low + self.coeffs.iter().position(|c| !c.is_zero()).unwrap_or(0) as i64
    }
}

#[derive(Clone, Debug)]
pub struct RationalT {
    pub num: LaurentT,
    pub den: LaurentT,
}

impl RationalT {
    pub fn eval(&self, t: &Cx) -> Cx {
        &self.num.eval(t) / &self.den.eval(t)
    }

    /// Leading exponent as `t → 0`.
    pub fn order(&self) -> i64 {
        self.num.order() - self.den.order()
    }
}

/// `x(t)` as rational functions of `t`, approaching the value `target`.
#[derive(Clone, Debug)]
pub struct WitnessCurve {
    pub x: Vec<RationalT>,
    pub target: Cx,
    /// Index of the bad face producing the curve.
    pub face: usize,
    pub real: bool,
}

impl WitnessCurve {
    pub fn eval(&self, t: &Cx) -> Vec<Cx> {
        self.x.iter().map(|r| r.eval(t)).collect()
    }
}

/// `x_i(t) = Π_j u_j(t)^{W_ij}`.
pub fn push_to_x(curve: &CurveJet, chart: &Chart) -> Vec<RationalT> {
    let u = curve.components();
    let prec = curve.precision();
    chart
        .w
        .to_i64()
        .iter()
        .map(|row| {
            let mut num = LaurentT::constant(Cx::one(prec));
            let mut den = LaurentT::constant(Cx::one(prec));
            for (uj, &w) in u.iter().zip(row) {
                if w > 0 {
                    num = num.mul(&uj.pow(w as u32));
                } else if w < 0 {
                    den = den.mul(&uj.pow((-w) as u32));
                }
            }
            RationalT { num, den }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{chart_from_matrix, ChartSource};
    use crate::critical::{refine_point, SolverConfig};
    use crate::lattice::{IntMat, Rat};
    use crate::newton::{bad_faces, newton_data};
    use crate::test_polys::*;

    struct Setup {
        fw: SparsePoly,
        chart: Chart,
    }

    fn setup(f: &SparsePoly, w: IntMat) -> Setup {
        let data = newton_data(f).unwrap();
        let face = bad_faces(&data).remove(0);
        let chart = chart_from_matrix(&w, &face, &data, ChartSource::User).unwrap();
        Setup { fw: f.substitute_monomial(&chart.w), chart }
    }

    fn base_point(s: &Setup, tail: &[Rat], prec: usize) -> Vec<Cx> {
        let mut u = vec![Cx::zero(prec); s.chart.k];
        u.extend(tail.iter().map(|r| Cx::from_rat(r, prec)));
        u
    }

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(int(a), int(b))
    }

    #[test]
    fn facets_of_the_golden_examples() {
        let cases: Vec<(SparsePoly, IntMat, Vec<Rat>, Vec<i64>, i64, i64, Vec<usize>)> = vec![
            (plane_face(), plane_face_chart(), vec![r(-1, 3), r(2, 3)], vec![1, 1, 1], 1, 3, vec![0, 2]),
            (ray_face(), ray_face_chart(), vec![r(1, 1)], vec![-1, 3, 3], 3, 5, vec![2]),
            (triple_root(), triple_root_chart(), vec![r(1, 1)], vec![2, 2, 3], 6, 10, vec![2]),
        ];
        for (f, w, tail, q, rho, l0, j) in cases {
            let s = setup(&f, w);
            let u = base_point(&s, &tail, SEARCH_PRECISION);
            let facet = build_delta_star_and_facet(&s.fw, &s.chart, &u).unwrap();
            assert_eq!((facet.q.clone(), facet.rho, facet.l0, facet.j.clone()), (q, rho, l0, j));
            for v in &facet.facet_vertices {
                assert_eq!(weight(&lattice::to_i64_vec(v), &facet.q), rho);
            }
        }
    }

    #[test]
    fn five_variable_facet() {
        let s = setup(&five_var(), five_var_chart());
        let g = chart_face_polynomial(&s.fw, s.chart.k);
        let pts = crate::critical::face_critical_points(&g, &SolverConfig::default()).unwrap();
        assert_eq!(pts.len(), 2);
        let u = {
            let mut u = vec![Cx::zero(SEARCH_PRECISION); s.chart.k];
            u.extend(refine_point(&g, &pts[0].u, SEARCH_PRECISION));
            u
        };
        let facet = build_delta_star_and_facet(&s.fw, &s.chart, &u).unwrap();
        assert_eq!(facet.q, vec![5, -20, 3, 15, 5]);
        assert_eq!((facet.rho, facet.l0, facet.j.clone()), (5, 10, vec![0, 1, 3, 4]));
        assert_eq!(facet.spread, vec![-1, 0, -2, 8, -1]);
        assert_eq!((facet.equation_count(), facet.parametric_length()), (24, 7));
        for v in [[0, 0, 0, 0, 1], [0, 2, 0, 3, 0], [1, 0, 0, 0, 0], [2, 1, 5, 0, 0], [2, 4, 0, 5, 0]] {
            assert!(facet.facet_vertices.contains(&lattice::ivec(&v)), "{v:?}");
        }
    }

    #[test]
    fn ray_face_curve_matches_known_coefficients() {
        let s = setup(&ray_face(), ray_face_chart());
        let prec = 256;
        let u = base_point(&s, &[r(1, 1)], prec);
        let facet = build_delta_star_and_facet(&s.fw, &s.chart, &base_point(&s, &[r(1, 1)], SEARCH_PRECISION)).unwrap();
        let jets = synthesis_jets(&s.fw, &s.chart, &u, &facet).unwrap();
        let curve = synthesize_curve(&jets, &facet, &u, Schedule::Uniform, 7).unwrap();
        assert_eq!(curve.length(), 4);
        let expect = [[1.0, 1.0, -1.0 / 3.0], [1.0, 1.0, -1.0], [1.0, 1.0, -8.0 / 3.0], [1.0, 1.0, 1.0]];
        for (l, row) in expect.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                assert!((curve.coeffs[l][i].to_c64() - Complex64::new(*v, 0.0)).norm() < 1e-30, "c_{i}({l})");
            }
        }
        let x = push_to_x(&curve, &s.chart);
        assert_eq!(x.iter().map(RationalT::order).collect::<Vec<_>>(), vec![-1, -1, 4]);
        // ord of every ⟨μ_j, ϑ f^W⟩ along the curve exceeds L₀ for j ∈ J
        let series = curve.series(curve.length());
        let g = jets[2].along_curve(&facet.q, &series, 6);
        assert!(g.coeffs.iter().all(|c| c.ln_abs() < -100.0));
    }

    #[test]
    fn order_zero_equation_of_the_plane_face() {
        let s = setup(&plane_face(), plane_face_chart());
        let u = base_point(&s, &[r(-1, 3), r(2, 3)], 256);
        let facet = build_delta_star_and_facet(&s.fw, &s.chart, &u).unwrap();
        let jets = synthesis_jets(&s.fw, &s.chart, &u, &facet).unwrap();
        let form = jets[2].initial_form(&facet.q, facet.rho);
        let coefs: Vec<(Exp, Complex64)> = form.iter().map(|(e, c)| (e.clone(), c.to_c64())).collect();
        let ratio = |e: &[i64]| coefs.iter().find(|(x, _)| x == e).map(|(_, c)| *c).unwrap();
        let base = ratio(&[1, 0, 0]) / 0.5;
        assert!((ratio(&[0, 1, 0]) / base - Complex64::new(-2.0, 0.0)).norm() < 1e-20);
        assert!((ratio(&[0, 0, 1]) / base - Complex64::new(2.0, 0.0)).norm() < 1e-20);
        assert_eq!(coefs.len(), 3);
        assert!(synthesize_curve(&jets, &facet, &u, Schedule::Minimal, 0).is_err());
        let out = synthesize_witness(&s.fw, &s.chart, &u, &facet, false, 0).map_err(|e| format!("{e:?}")).unwrap();
        assert!(out.relocated);
        let curve = out.curve;
        assert_eq!(curve.length(), 4);
        assert!(curve.coeffs[0].iter().all(|z| z.abs_f64() >= MIN_MODULUS));
    }

    #[test]
    fn empty_index_set_gives_ones_then_zeros() {
        let prec = 128;
        let facet = FacetData {
            q: vec![1, 1],
            rho: 1,
            l0: 2,
            j: vec![],
            facet_vertices: vec![],
            spread: vec![0, 0],
            degree: 6,
        };
        let curve = synthesize_curve(&[], &facet, &[Cx::zero(prec), Cx::one(prec)], Schedule::Uniform, 0).unwrap();
        assert_eq!(curve.length(), 3);
        assert!(curve.coeffs[0].iter().all(|z| *z == Cx::one(prec)));
        assert!(curve.coeffs[1..].iter().flatten().all(Cx::is_zero));
    }

    #[test]
    fn identity_chart_maps_curve_to_itself() {
        let prec = 128;
        let curve = CurveJet {
            k: 1,
            u_star: vec![Cx::zero(prec), Cx::from_i64(2, prec)],
            q: vec![-1, 2],
            coeffs: vec![vec![Cx::one(prec), Cx::from_i64(3, prec)]],
        };
        let chart = Chart {
            w: IntMat::identity(2),
            m: IntMat::identity(2),
            mu: IntMat::identity(2).col_vecs(),
            k: 1,
            source: ChartSource::User,
        };
        let x = push_to_x(&curve, &chart);
        let t = Cx::from_rat(&r(1, 10), prec);
        assert!((x[0].eval(&t).to_c64() - Complex64::new(10.0, 0.0)).norm() < 1e-12);
        assert!((x[1].eval(&t).to_c64() - Complex64::new(2.03, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn patterns_prefer_high_indices() {
        assert_eq!(free_patterns(3, 1), vec![vec![2], vec![1], vec![0]]);
        assert_eq!(free_patterns(3, 2)[0], vec![1, 2]);
    }
}
