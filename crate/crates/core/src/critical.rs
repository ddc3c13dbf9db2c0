//! Critical points and values of face polynomials on the torus.

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::SparsePoly;
use crate::lattice::{Int, Rat};
use crate::mp::{self, Cx};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub seed: u64,
    pub starts: usize,
    pub max_iter: usize,
    pub torus_eps: f64,
    pub dedup_tol: f64,
    /// Converged points sharing a value needed to flag a non-isolated locus.
    pub component_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { seed: 0, starts: 64, max_iter: 200, torus_eps: 1e-9, dedup_tol: 1e-8, component_points: 5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusCriticalPoint {
    #[serde(serialize_with = "ser_c64s")]
    pub u: Vec<Complex64>,
    #[serde(serialize_with = "ser_c64")]
    pub value: Complex64,
    pub residual: f64,
    pub isolated: bool,
    /// Exact coordinates when they are rational.
    #[serde(serialize_with = "ser_opt_rats")]
    pub exact: Option<Vec<Rat>>,
}

pub(crate) fn ser_c64<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&clean(z.re))?;
    seq.serialize_element(&clean(z.im))?;
    seq.end()
}

pub(crate) fn ser_c64s<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[clean(z.re), clean(z.im)])?;
    }
    seq.end()
}

fn ser_opt_rats<S: serde::Serializer>(v: &Option<Vec<Rat>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(r) => s.collect_seq(r.iter().map(|x| x.to_string())),
    }
}

/// Rounds away noise below 1e-12 so reports stay stable across platforms.
pub(crate) fn clean(x: f64) -> f64 {
    if !x.is_finite() {
        x
    } else if x.abs() < 1e-12 {
        0.0
    } else {
        let scale = 10f64.powi(12 - x.abs().log10().ceil() as i32);
        (x * scale).round() / scale
    }
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

/// Gradient and Hessian polynomials of `g`.
struct Derivatives {
    grad: Vec<SparsePoly>,
    hess: Vec<Vec<SparsePoly>>,
}

impl Derivatives {
    fn new(g: &SparsePoly) -> Self {
        let grad: Vec<SparsePoly> = (0..g.n()).map(|j| g.derivative(j)).collect();
        let hess = grad.iter().map(|d| (0..g.n()).map(|j| d.derivative(j)).collect()).collect();
        Derivatives { grad, hess }
    }

    fn residual(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.grad.iter().map(|p| p.eval_c64(u)).collect()
    }

    fn jacobian(&self, u: &[Complex64]) -> Vec<Vec<Complex64>> {
        self.hess.iter().map(|r| r.iter().map(|p| p.eval_c64(u)).collect()).collect()
    }

    fn residual_cx(&self, u: &[Cx]) -> Vec<Cx> {
        self.grad.iter().map(|p| p.eval_cx(u)).collect()
    }

    fn jacobian_cx(&self, u: &[Cx]) -> Vec<Vec<Cx>> {
        self.hess.iter().map(|r| r.iter().map(|p| p.eval_cx(u)).collect()).collect()
    }
}

pub(crate) fn solve_c64(a: &[Vec<Complex64>], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut r = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm()))?;
        let piv = m[p][c].norm();
        if !piv.is_finite() || piv < 1e-300 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for j in c..n {
                let t = f * m[c][j];
                m[i][j] -= t;
            }
            let t = f * r[c];
            r[i] -= t;
        }
    }
    let mut x = vec![Complex64::zero(); n];
    for i in (0..n).rev() {
        let s: Complex64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Levenberg–Marquardt with damping `‖F‖`; handles non-isolated solutions.
fn lm_solve(d: &Derivatives, start: Vec<Complex64>, max_iter: usize) -> Option<(Vec<Complex64>, f64)> {
    let n = start.len();
    let mut u = start;
    let mut f = d.residual(&u);
    let mut fnorm = norm(&f);
    for _ in 0..max_iter {
        let scale = 1.0 + u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if fnorm < 1e-13 * scale.powi(4) {
            return Some((u, fnorm));
        }
        let j = d.jacobian(&u);
        // (JᴴJ + λI) δ = −JᴴF
        let mut a = vec![vec![Complex64::zero(); n]; n];
        let mut b = vec![Complex64::zero(); n];
        for r in 0..n {
            for c in 0..n {
                a[r][c] = (0..n).map(|k| j[k][r].conj() * j[k][c]).sum();
            }
            b[r] = -(0..n).map(|k| j[k][r].conj() * f[k]).sum::<Complex64>();
        }
        let mut lambda = fnorm;
        let mut accepted = false;
        for _ in 0..30 {
            let mut al = a.clone();
            for (r, row) in al.iter_mut().enumerate() {
                row[r] += lambda;
            }
            let Some(step) = solve_c64(&al, &b) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<Complex64> = u.iter().zip(&step).map(|(x, s)| x + s).collect();
            let fc = d.residual(&cand);
            let nc = norm(&fc);
            if nc.is_finite() && nc < fnorm {
                u = cand;
                f = fc;
                fnorm = nc;
                accepted = true;
                break;
            }
            lambda = lambda * 4.0 + 1e-12;
        }
        if !accepted {
            break;
        }
    }
    let scale = 1.0 + u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (fnorm < 1e-9 * scale.powi(4)).then_some((u, fnorm))
}

/// Polishes a critical point of `g` to `prec` bits.
pub fn refine_point(g: &SparsePoly, u: &[Complex64], prec: usize) -> Vec<Cx> {
    refine_from(g, u.iter().map(|z| Cx::from_c64(*z, prec)).collect(), prec)
}

/// Like [`refine_point`], starting from a multiprecision point.
pub fn refine_from(g: &SparsePoly, start: Vec<Cx>, prec: usize) -> Vec<Cx> {
    let d = Derivatives::new(g);
    let n = start.len();
    let mut x: Vec<Cx> = start.iter().map(|z| z.with_precision(prec)).collect();
    let target = -(prec as f64) * 0.9 * std::f64::consts::LN_2;
    let tiny = mp::fzero(prec);
    for _ in 0..4 * prec.max(64).ilog2() as usize + 60 {
        let f = d.residual_cx(&x);
        let fn2 = f.iter().fold(mp::fzero(prec), |acc, z| acc + z.norm_sqr());
        let ln_norm = 0.5 * mp::ln_f64(&fn2);
        if ln_norm < target {
            break;
        }
        let j = d.jacobian_cx(&x);
        let mut a = vec![vec![Cx::zero(prec); n]; n];
        let mut b = vec![Cx::zero(prec); n];
        for r in 0..n {
            for c in 0..n {
                let mut s = Cx::zero(prec);
                for k in 0..n {
                    s = &s + &(&j[k][r].conj() * &j[k][c]);
                }
                a[r][c] = s;
            }
            let mut s = Cx::zero(prec);
            for k in 0..n {
                s = &s + &(&j[k][r].conj() * &f[k]);
            }
            b[r] = -s;
        }
        // damping ‖F‖ keeps steps bounded on singular loci
        let lambda = mp::ff64(ln_norm.exp(), prec);
        for (r, row) in a.iter_mut().enumerate() {
            row[r] = &row[r] + &Cx::new(lambda.clone(), mp::fzero(prec));
        }
        let Some(step) = mp::solve(&a, &b, &tiny) else { break };
        x = x.iter().zip(&step).map(|(p, s)| p + s).collect();
    }
    x
}

/// Best rational approximation with denominator at most `max_den`.
fn rationalize(x: f64, max_den: i64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-14 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 != 0).then(|| Rat::new(Int::from(h1), Int::from(k1)))
}

fn eval_rat(p: &SparsePoly, x: &[Rat]) -> Rat {
    p.terms()
        .iter()
        .map(|(e, c)| {
            let mut m = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                m *= num_traits::pow::pow(xi.clone(), k as usize);
            }
            m
        })
        .sum()
}

/// Exact rational coordinates if `u` rounds to an exact critical point.
fn exact_rational(d: &Derivatives, u: &[Complex64]) -> Option<Vec<Rat>> {
    if u.iter().any(|z| z.im.abs() > 1e-9 * (1.0 + z.re.abs())) {
        return None;
    }
    let r: Vec<Rat> = u.iter().map(|z| rationalize(z.re, 10_000)).collect::<Option<_>>()?;
    if r.iter().any(|x| x.is_zero()) {
        return None;
    }
    d.grad.iter().all(|p| eval_rat(p, &r).is_zero()).then_some(r)
}

type RatPoly = Vec<Rat>;

fn trim(mut p: RatPoly) -> RatPoly {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_deriv(p: &[Rat]) -> RatPoly {
    if p.len() <= 1 {
        return vec![Rat::zero()];
    }
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * Rat::from_integer(Int::from(i))).collect())
}

fn poly_divrem(a: &[Rat], b: &[Rat]) -> (RatPoly, RatPoly) {
    let b = trim(b.to_vec());
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    if r.len() <= db {
        return (vec![Rat::zero()], r);
    }
    let mut q = vec![Rat::zero(); r.len() - db];
    for shift in (0..r.len() - db).rev() {
        let c = &r[shift + db] / b.last().unwrap();
        for (i, bc) in b.iter().enumerate() {
            let t = &c * bc;
            r[i + shift] -= t;
        }
        q[shift] = c;
    }
    r.truncate(db.max(1));
    (trim(q), trim(r))
}

fn poly_gcd(a: &[Rat], b: &[Rat]) -> RatPoly {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !(b.len() == 1 && b[0].is_zero()) {
        let (_, r) = poly_divrem(&a, &b);
        a = b;
        b = r;
    }
    let lead = a.last().unwrap().clone();
    a.iter().map(|c| c / &lead).collect()
}

/// All complex roots of a square-free polynomial (Aberth iteration).
fn aberth_roots(p: &[Rat]) -> Vec<Complex64> {
    let c: Vec<f64> = p.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
    let m = c.len() - 1;
    if m == 0 {
        return vec![];
    }
    let lead = c[m];
    let bound = 1.0 + c[..m].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(c[m], 0.0);
        let mut dv = Complex64::zero();
        for k in (0..m).rev() {
            dv = dv * z + v;
            v = v * z + c[k];
        }
        (v, dv)
    };
    let mut z: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(bound * 0.5, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / m as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..m {
            let (v, dv) = eval(z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / dv;
            let s: Complex64 = (0..m).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (Complex64::one() - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn sort_points(points: &mut [TorusCriticalPoint]) {
    let key = |p: &TorusCriticalPoint| {
        let mut k = vec![p.value.re, p.value.im];
        for z in &p.u {
            k.push(z.re);
            k.push(z.im);
        }
        k
    };
    points.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal));
}

fn univariate_points(g: &SparsePoly, cfg: &SolverConfig) -> Vec<TorusCriticalPoint> {
    let coeffs = g.univariate_coeffs().expect("univariate polynomial");
    let d1 = poly_deriv(&coeffs);
    if d1.len() == 1 {
        return vec![];
    }
    let common = poly_gcd(&d1, &poly_deriv(&d1));
    let (sqfree, _) = poly_divrem(&d1, &common);
    let d = Derivatives::new(g);
    let mut out = Vec::new();
    for z in aberth_roots(&sqfree) {
        if z.norm() <= cfg.torus_eps {
            continue;
        }
        let exact = exact_rational(&d, &[z]);
        let (u, value) = match &exact {
            Some(r) => {
                let v = eval_rat(g, r);
                (vec![Complex64::new(r[0].to_f64().unwrap(), 0.0)], Complex64::new(v.to_f64().unwrap(), 0.0))
            }
            None => {
                let refined = refine_point(g, &[z], 128);
                let u = vec![refined[0].to_c64()];
                (u.clone(), g.eval_cx(&refined).to_c64())
            }
        };
        let residual = norm(&d.residual(&u));
        out.push(TorusCriticalPoint { u, value, residual, isolated: true, exact });
    }
    sort_points(&mut out);
    out
}

pub(crate) fn random_start(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let r = 10f64.powf(rng.gen_range(-1.0..1.0));
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, th)
        })
        .collect()
}

/// Converged multistart solutions of `∇g = 0` on the torus, deduplicated.
fn multistart(g: &SparsePoly, cfg: &SolverConfig) -> Vec<(Vec<Complex64>, f64)> {
    let d = Derivatives::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut found: Vec<(Vec<Complex64>, f64)> = Vec::new();
    for _ in 0..cfg.starts {
        let start = random_start(&mut rng, g.n());
        let Some((u, res)) = lm_solve(&d, start, cfg.max_iter) else { continue };
        if u.iter().any(|z| z.norm() <= cfg.torus_eps || !z.norm().is_finite()) {
            continue;
        }
        if found.iter().any(|(v, _)| v.iter().zip(&u).all(|(a, b)| close(*a, *b, 1e-6))) {
            continue;
        }
        found.push((u, res));
    }
    found
}

fn multivariate_points(g: &SparsePoly, cfg: &SolverConfig) -> Result<Vec<TorusCriticalPoint>> {
    let d = Derivatives::new(g);
    let found = multistart(g, cfg);
    if found.is_empty() {
        return Err(Error::SolverBudgetExhausted(format!("no critical point found in {} starts", cfg.starts)));
    }
    // group by value
    let mut groups: Vec<(Complex64, Vec<(Vec<Complex64>, f64)>)> = Vec::new();
    for (u, res) in found {
        let v = g.eval_c64(&u);
        match groups.iter_mut().find(|(w, _)| close(*w, v, cfg.dedup_tol.sqrt())) {
            Some((_, members)) => members.push((u, res)),
            None => groups.push((v, vec![(u, res)])),
        }
    }
    let mut out = Vec::new();
    for (_, members) in groups {
        let isolated = members.len() < cfg.component_points;
        let mut chosen: Vec<(Vec<Complex64>, f64)> = if isolated {
            members
        } else {
            // representative with moduli closest to 1
            let spread = |u: &[Complex64]| u.iter().map(|z| z.norm().ln().abs()).fold(0.0, f64::max);
            let best = members
                .into_iter()
                .min_by(|a, b| spread(&a.0).partial_cmp(&spread(&b.0)).unwrap())
                .unwrap();
            vec![best]
        };
        for (u, _) in chosen.drain(..) {
            let exact = exact_rational(&d, &u);
            let (u, value) = match &exact {
                Some(r) => {
                    let v = eval_rat(g, r);
                    (
                        r.iter().map(|x| Complex64::new(x.to_f64().unwrap(), 0.0)).collect::<Vec<_>>(),
                        Complex64::new(v.to_f64().unwrap(), 0.0),
                    )
                }
                None => {
                    let refined = refine_point(g, &u, 128);
                    (refined.iter().map(Cx::to_c64).collect(), g.eval_cx(&refined).to_c64())
                }
            };
            let residual = norm(&d.residual(&u));
            out.push(TorusCriticalPoint { u, value, residual, isolated, exact });
        }
    }
    sort_points(&mut out);
    Ok(out)
}

/// Critical points of a polynomial on the torus `(ℂ*)^d`.
pub fn face_critical_points(g: &SparsePoly, cfg: &SolverConfig) -> Result<Vec<TorusCriticalPoint>> {
    if !g.is_polynomial() {
        return Err(Error::ChartInvalid("face polynomial has negative exponents".into()));
    }
    if g.n() == 1 {
        Ok(univariate_points(g, cfg))
    } else {
        multivariate_points(g, cfg)
    }
}

/// A user-chosen critical point; must satisfy `∇g = 0` exactly.
pub fn critical_point_override(g: &SparsePoly, u: &[Rat]) -> Result<TorusCriticalPoint> {
    let d = Derivatives::new(g);
    if u.len() != g.n() || u.iter().any(|x| x.is_zero()) {
        return Err(Error::ChartInvalid("override must have nonzero entries for every torus variable".into()));
    }
    if let Some((j, v)) = d.grad.iter().enumerate().map(|(j, p)| (j, eval_rat(p, u))).find(|(_, v)| !v.is_zero()) {
        return Err(Error::ChartInvalid(format!("override is not critical: derivative {} equals {v}", j + 1)));
    }
    let v = eval_rat(g, u);
    Ok(TorusCriticalPoint {
        u: u.iter().map(|x| Complex64::new(x.to_f64().unwrap(), 0.0)).collect(),
        value: Complex64::new(v.to_f64().unwrap(), 0.0),
        residual: 0.0,
        isolated: true,
        exact: Some(u.to_vec()),
    })
}

/// Critical values of `f_γ` computed directly on `(ℂ*)ⁿ`.
pub fn critical_values_ambient(f_gamma: &SparsePoly, cfg: &SolverConfig) -> Vec<Complex64> {
    let mut vals: Vec<Complex64> = Vec::new();
    for (u, _) in multistart(f_gamma, cfg) {
        let v = f_gamma.eval_c64(&u);
        if !vals.iter().any(|w| close(*w, v, 1e-6)) {
            vals.push(v);
        }
    }
    vals.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    vals
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateValue {
    #[serde(serialize_with = "ser_c64")]
    pub value: Complex64,
    /// 1-based indices of the bad faces producing this value.
    pub faces: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateSet {
    pub values: Vec<CandidateValue>,
    pub zero_marker: bool,
}

impl CandidateSet {
    pub fn contains(&self, v: Complex64, tol: f64) -> bool {
        self.values.iter().any(|c| close(c.value, v, tol)) || (self.zero_marker && v.norm() <= tol)
    }
}

pub fn candidate_values(per_face: &[Vec<TorusCriticalPoint>], nondegenerate: bool, cfg: &SolverConfig) -> CandidateSet {
    let mut values: Vec<CandidateValue> = Vec::new();
    for (i, pts) in per_face.iter().enumerate() {
        for p in pts {
            match values.iter_mut().find(|c| close(c.value, p.value, cfg.dedup_tol)) {
                Some(c) => {
                    if !c.faces.contains(&(i + 1)) {
                        c.faces.push(i + 1);
                    }
                }
                None => values.push(CandidateValue { value: p.value, faces: vec![i + 1] }),
            }
        }
    }
    values.sort_by(|a, b| (a.value.re, a.value.im).partial_cmp(&(b.value.re, b.value.im)).unwrap());
    CandidateSet { values, zero_marker: nondegenerate }
}

/// Imaginary part negligible relative to the real part.
pub fn looks_real(z: Complex64) -> bool {
    z.im.abs() <= 1e-10 * (1.0 + z.re.abs())
}
