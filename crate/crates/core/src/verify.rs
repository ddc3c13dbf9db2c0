//! Evidence that a curve witnesses an asymptotic critical value: order
//! bookkeeping on the jets and sampling of `x(t)` as `t → 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::Chart;
use crate::critical::{clean, ser_c64, ser_c64s};
use crate::curve::{CurveJet, FacetData, WitnessCurve};
use crate::error::{Error, Result};
use crate::laurent::{JetSeries, SparsePoly};
use crate::mp::{self, Cx};

pub const GROWTH_THRESHOLD: f64 = 0.9;
pub const DECAY_THRESHOLD: f64 = 0.9;
const FIT_POINTS: usize = 12;
const LIMIT_TOL: f64 = 1e-4;
const CHAIN_RULE_TOL: f64 = 1e-8;
const PULLBACK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub tmin: f64,
    pub tmax: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { tmin: 1e-7, tmax: 1e-1, points: 25 }
    }
}

impl Grid {
    /// Geometric samples from `tmax` down to `tmin`.
    pub fn samples(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (a, b) = (self.tmax.ln(), self.tmin.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tmin > 0.0 && self.tmax > self.tmin && self.tmax < 1.0 && self.points >= 2) {
            return Err(Error::Parse(format!("invalid grid: tmin {} tmax {} points {}", self.tmin, self.tmax, self.points)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    /// 1-based index of `⟨μ_j, ϑ_u f^W⟩`.
    pub j: usize,
    /// Order in `t` along the curve; a lower bound when `exact` is false.
    pub order: i64,
    pub exact: bool,
    /// `min_{i≠j} (e_i − e_j)`.
    pub gap: i64,
    pub margin: i64,
}

/// Orders of every `⟨μ_j, ϑ_u f^W⟩(Q(t))` and the margin `gap + order`,
/// which must be positive.
pub fn symbolic_order_check(curve: &CurveJet, jets: &[JetSeries], facet: &FacetData) -> Result<Vec<OrderRow>> {
    let len = (facet.l0 + 3) as usize;
    let series = curve.series(curve.length());
    let prec = curve.precision();
    let scale = jets.iter().flat_map(|j| j.terms.values()).map(Cx::ln_abs).fold(0.0f64, f64::max);
    let cut = scale - 0.5 * prec as f64 * std::f64::consts::LN_2;
    let mut rows = Vec::with_capacity(jets.len());
    for (j, jet) in jets.iter().enumerate() {
        let s = jet.along_curve(&facet.q, &series, len);
        let first = s.coeffs.iter().position(|c| c.ln_abs() > cut);
        let order = first.unwrap_or(len) as i64;
        let gap = -facet.order_gap(j);
        let row = OrderRow { j: j + 1, order, exact: first.is_some(), gap, margin: gap + order };
        if row.margin <= 0 {
            return Err(Error::OrderShortfall { j: j + 1, spread: gap, order });
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub t_grid: Vec<f64>,
    /// `ln ‖x(t)‖`.
    pub log_norm: Vec<f64>,
    /// `ln max_{i,j} |x_i ∂f/∂x_j|`.
    pub log_malgrange: Vec<f64>,
    #[serde(serialize_with = "ser_c64s")]
    pub f_values: Vec<Complex64>,
    pub growth_slope: f64,
    pub decay_slope: f64,
    /// Fitted decay slope of each `|x_i ∂f/∂x_j|`, row `i`, column `j`.
    pub pair_slopes: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_c64")]
    pub target: Complex64,
    #[serde(serialize_with = "ser_c64")]
    pub limit_estimate: Complex64,
    pub limit_error: f64,
    pub pass_growth: bool,
    pub pass_decay: bool,
    pub pass_limit: bool,
    /// Samples dropped because `x(t)` was undefined there.
    pub truncated: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.pass_growth && self.pass_decay && self.pass_limit
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn tail_slope(ts: &[f64], y: &[f64], invert: bool) -> f64 {
    let start = ts.len().saturating_sub(FIT_POINTS);
    let x: Vec<f64> = ts[start..].iter().map(|t| if invert { -t.ln() } else { t.ln() }).collect();
    let y = &y[start..];
    if y.iter().any(|v| !v.is_finite()) {
        // identically zero quantities decay arbitrarily fast
        return if y.iter().all(|v| *v == f64::NEG_INFINITY) { f64::INFINITY } else { f64::NAN };
    }
    fit_slope(&x, y)
}

fn ln_sum_sq(v: &[Cx]) -> f64 {
    let prec = v.first().map_or(64, Cx::precision);
    let s = v.iter().fold(mp::fzero(prec), |acc, z| acc + z.norm_sqr());
    0.5 * mp::ln_f64(&s)
}

/// Samples conditions (I) and (II) and the limit of `f` along `x(t)`.
pub fn numeric_verify(f: &SparsePoly, x: &WitnessCurve, grid: &Grid) -> VerificationReport {
    let n = f.n();
    let prec = x.target.precision().max(64);
    let partials: Vec<SparsePoly> = (0..n).map(|j| f.derivative(j)).collect();
    let mut ts = Vec::new();
    let (mut log_norm, mut log_mal, mut f_values) = (Vec::new(), Vec::new(), Vec::new());
    let mut pair_logs: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; n];
    let mut errors = Vec::new();
    let mut truncated = 0;
    for t in grid.samples() {
        let tc = Cx::from_f64_mag(t, prec);
        let xs = x.eval(&tc);
        if x.x.iter().any(|r| r.den.eval(&tc).is_zero()) {
            truncated += 1;
            continue;
        }
        let fx = f.eval_cx(&xs);
        let ln_x: Vec<f64> = xs.iter().map(Cx::ln_abs).collect();
        let ln_d: Vec<f64> = partials.iter().map(|p| p.eval_cx(&xs).ln_abs()).collect();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let v = ln_x[i] + ln_d[j];
                pair_logs[i][j].push(v);
                worst = worst.max(v);
            }
        }
        ts.push(t);
        log_norm.push(ln_sum_sq(&xs));
        log_mal.push(worst);
        errors.push((&fx - &x.target).abs_f64());
        f_values.push(fx.to_c64());
    }
    let growth_slope = tail_slope(&ts, &log_norm, true);
    let decay_slope = tail_slope(&ts, &log_mal, false);
    let pair_slopes = pair_logs
        .iter()
        .map(|row| row.iter().map(|ys| clean(tail_slope(&ts, ys, false))).collect())
        .collect();

    let target = x.target.to_c64();
    let bound = LIMIT_TOL * (1.0 + target.norm());
    let floor = 1e-30 * (1.0 + target.norm());
    let limit_error = errors.last().copied().unwrap_or(f64::INFINITY);
    let tmin = ts.last().copied().unwrap_or(grid.tmin);
    let tail: Vec<f64> = ts.iter().zip(&errors).filter(|(t, _)| **t <= tmin * 1e3 * (1.0 + 1e-9)).map(|(_, e)| *e).collect();
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) || w[1] <= floor);
    let limit_estimate = f_values.last().copied().unwrap_or(target);
    VerificationReport {
        t_grid: ts,
        log_norm: log_norm.iter().map(|v| clean(*v)).collect(),
        log_malgrange: log_mal.iter().map(|v| clean(*v)).collect(),
        f_values,
        growth_slope: clean(growth_slope),
        decay_slope: clean(decay_slope),
        pair_slopes,
        target,
        limit_estimate,
        limit_error: clean(limit_error),
        pass_growth: growth_slope >= GROWTH_THRESHOLD,
        pass_decay: decay_slope >= DECAY_THRESHOLD,
        pass_limit: limit_error <= bound && monotone,
        truncated,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    /// Largest relative gap between `Σ ℓ_j x_j ∂_j f` and `Σ ℓ_j ⟨μ_j, ϑ_u f^W⟩`.
    pub chain_rule_error: f64,
    /// Largest relative gap between `f(x(t))` and `f^W(u(t))`.
    pub pullback_error: f64,
    pub pass: bool,
}

/// Checks the chain rule for the toric substitution and `f(x) = f^W(u)`
/// along the curve.
pub fn consistency_checks(
    f: &SparsePoly,
    fw: &SparsePoly,
    chart: &Chart,
    curve: &CurveJet,
    x: &WitnessCurve,
    grid: &Grid,
    seed: u64,
) -> ConsistencyReport {
    let n = f.n();
    let prec = curve.precision();
    let log_grad = f.log_gradient();
    let pulled: Vec<SparsePoly> = chart.mu.iter().map(|m| fw.theta_along(m)).collect();
    let u_parts = curve.components();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ells: Vec<Vec<Cx>> = (0..3)
        .map(|_| {
            (0..n)
                .map(|_| Cx::from_c64(Complex64::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)), prec))
                .collect()
        })
        .collect();
    let (mut chain, mut pull) = (0.0f64, 0.0f64);
    let rel = |a: &Cx, b: &Cx| {
        let d = (a - b).ln_abs();
        let m = a.ln_abs().max(b.ln_abs());
        if d == f64::NEG_INFINITY {
            0.0
        } else {
            (d - m).exp()
        }
    };
    for t in grid.samples() {
        let tc = Cx::from_f64_mag(t, prec);
        let u: Vec<Cx> = u_parts.iter().map(|p| p.eval(&tc)).collect();
        let xs = x.eval(&tc);
        let left: Vec<Cx> = log_grad.iter().map(|p| p.eval_cx(&xs)).collect();
        let right: Vec<Cx> = pulled.iter().map(|p| p.eval_cx(&u)).collect();
        for l in &ells {
            let a = left.iter().zip(l).fold(Cx::zero(prec), |s, (v, c)| &s + &(v * c));
            let b = right.iter().zip(l).fold(Cx::zero(prec), |s, (v, c)| &s + &(v * c));
            chain = chain.max(rel(&a, &b));
        }
        pull = pull.max(rel(&f.eval_cx(&xs), &fw.eval_cx(&u)));
    }
    ConsistencyReport {
        chain_rule_error: chain,
        pullback_error: pull,
        pass: chain <= CHAIN_RULE_TOL && pull <= PULLBACK_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{LaurentT, RationalT};
    use crate::lattice::{int, Rat};

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(int(a), int(b))
    }

    fn lt(low: i64, c: &[Rat], prec: usize) -> LaurentT {
        LaurentT::from_rats(low, c, prec)
    }

    #[test]
    fn slope_of_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-12);
        let g = Grid::default().samples();
        assert_eq!(g.len(), 25);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert!((g[24] - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn constant_curve_fails_growth() {
        let prec = 128;
        let f = SparsePoly::from_i64(3, &[(1, &[1, 1, 1]), (1, &[1, 0, 0])]);
        let one = || RationalT { num: LaurentT::constant(Cx::one(prec)), den: LaurentT::constant(Cx::one(prec)) };
        let x = WitnessCurve { x: vec![one(), one(), one()], target: Cx::from_i64(2, prec), face: 0, real: true };
        let rep = numeric_verify(&f, &x, &Grid::default());
        assert!(!rep.pass_growth);
        assert!(rep.growth_slope.abs() < 1e-9);
    }

    /// The explicit rational curve for the ray-face example.
    fn ray_face_curve(prec: usize) -> WitnessCurve {
        let a = lt(-1, &[r(1, 1), r(1, 1), r(1, 1), r(1, 1)], prec);
        let b = lt(0, &[r(1, 1), r(0, 1), r(0, 1), r(-1, 3), r(-1, 1), r(-8, 3), r(1, 1)], prec);
        let c = lt(3, &[r(1, 1), r(1, 1), r(1, 1), r(1, 1)], prec);
        let one = LaurentT::constant(Cx::one(prec));
        let a2bc = a.mul(&a).mul(&b).mul(&c);
        WitnessCurve {
            x: vec![
                RationalT { num: a.mul(&b), den: one.clone() },
                RationalT { num: one.clone(), den: a2bc.clone() },
                RationalT { num: a2bc.mul(&c), den: one },
            ],
            target: Cx::from_i64(-2, prec),
            face: 0,
            real: true,
        }
    }

    #[test]
    fn explicit_ray_face_curve_passes() {
        let f = crate::test_polys::ray_face();
        let rep = numeric_verify(&f, &ray_face_curve(512), &Grid::default());
        assert!(rep.pass_growth && rep.pass_decay && rep.pass_limit, "{rep:?}");
        assert!((rep.growth_slope - 1.0).abs() < 0.05);
    }
}
