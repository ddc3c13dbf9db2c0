//! End-to-end runs: bad faces, charts, critical values, witness curves and
//! their verification, collected into one serializable report.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::chart::{build_chart, chart_from_matrix, Chart, ChartSource};
use crate::critical::{
    candidate_values, clean, critical_point_override, critical_values_ambient, face_critical_points, refine_from,
    refine_point, ser_c64, ser_c64s, CandidateSet, SolverConfig, TorusCriticalPoint,
};
use crate::curve::{
    build_delta_star_and_facet, chart_face_polynomial, push_to_x, synthesis_jets, synthesize_witness, working_precision,
    CurveJet, FacetData, Schedule, WitnessCurve, SEARCH_PRECISION,
};
use crate::error::{Error, Result};
use crate::io::ProblemSpec;
use crate::laurent::{Exp, SparsePoly};
use crate::lattice::Rat;
use crate::mp::Cx;
use crate::newton::{
    bad_faces, classify_relatively_simple, face_polynomial, face_volume, newton_data, volume_bound, BadFace, NewtonData,
};
use crate::verify::{consistency_checks, numeric_verify, symbolic_order_check, ConsistencyReport, Grid, OrderRow, VerificationReport};

pub const SCHEMA_VERSION: &str = "1";

/// Critical values closer than this are treated as one.
const VALUE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Badfaces,
    Values,
    Witness,
    Bound,
    EmitCurve,
}

impl Command {
    fn needs_values(self) -> bool {
        !matches!(self, Command::Badfaces | Command::Bound)
    }

    fn needs_witnesses(self) -> bool {
        matches!(self, Command::Witness | Command::EmitCurve)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorEntry {
    pub module: &'static str,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    /// 1-based face index, when the error is local to a face.
    pub face: Option<usize>,
}

impl ErrorEntry {
    pub fn new(e: &Error, face: Option<usize>) -> Self {
        ErrorEntry { module: e.module(), kind: e.kind(), message: e.to_string(), exit_code: e.exit_code(), face }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceReport {
    pub index: usize,
    #[serde(flatten)]
    pub face: BadFace,
    pub relatively_simple: bool,
    #[serde(serialize_with = "ser_display")]
    pub volume: crate::lattice::Int,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<Chart>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub face_polynomial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart_face_polynomial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_points: Option<Vec<TorusCriticalPoint>>,
}

/// An initial form `Σ a_e c^e` of one `⟨μ_j, ϑ_u f^W⟩` along the curve.
#[derive(Clone, Debug)]
pub struct Order0Form {
    pub j: usize,
    pub terms: Vec<(Exp, Complex64)>,
}

impl Serialize for Order0Form {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            exp: &'a [i64],
            #[serde(serialize_with = "ser_c64")]
            coef: Complex64,
        }
        #[derive(Serialize)]
        struct Form<'a> {
            j: usize,
            terms: Vec<Term<'a>>,
        }
        let terms = self.terms.iter().map(|(e, c)| Term { exp: e, coef: *c }).collect();
        Form { j: self.j, terms }.serialize(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub face: usize,
    #[serde(serialize_with = "ser_c64")]
    pub value: Complex64,
    /// Critical point the run started from, in the torus coordinates of the face.
    #[serde(serialize_with = "ser_c64s")]
    pub base_point: Vec<Complex64>,
    pub isolated: bool,
    pub user_base_point: bool,
    pub facet: FacetData,
    pub equation_count: usize,
    pub scheduled_equations: usize,
    pub schedule: Schedule,
    pub relocated: bool,
    pub precision: usize,
    pub length: usize,
    pub curve: CurveJet,
    pub order0_forms: Vec<Order0Form>,
    /// Leading exponent of each `x_i(t)`.
    pub x_orders: Vec<i64>,
    pub real: bool,
    pub order_table: Vec<OrderRow>,
    pub verification: VerificationReport,
    pub consistency: ConsistencyReport,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub command: Command,
    pub seed: u64,
    pub n: usize,
    pub polynomial: String,
    pub newton_dim: usize,
    pub nondegenerate: bool,
    pub bad_faces: Vec<FaceReport>,
    #[serde(serialize_with = "ser_display")]
    pub volume_bound: crate::lattice::Int,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_values: Option<CandidateSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<WitnessReport>>,
    pub grid: Grid,
    pub errors: Vec<ErrorEntry>,
    #[serde(skip)]
    pub curves: Vec<WitnessCurve>,
}

fn ser_display<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl RunReport {
    /// Exit code of the first recorded error, or 0.
    pub fn exit_code(&self) -> i32 {
        self.errors.first().map_or(0, |e| e.exit_code)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Runs `command` on `spec`. Failures that invalidate the whole run are
/// returned as errors; failures local to one face or point are recorded in
/// the report.
pub fn run_pipeline(spec: &ProblemSpec, command: Command) -> Result<RunReport> {
    spec.grid.validate()?;
    let f = spec.polynomial();
    if f.is_empty() {
        return Err(Error::Parse("polynomial has no terms".into()));
    }
    let data = newton_data(&f)?;
    let faces = bad_faces(&data);
    let mut errors = Vec::new();
    let mut reports = Vec::with_capacity(faces.len());
    for (i, face) in faces.iter().enumerate() {
        reports.push(FaceReport {
            index: i + 1,
            face: face.clone(),
            relatively_simple: classify_relatively_simple(face, &data.gamma_minus),
            volume: face_volume(face)?,
            chart: None,
            face_polynomial: None,
            chart_face_polynomial: None,
            critical_points: None,
        });
    }
    let bound = volume_bound(&faces)?;
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        command,
        seed: spec.seed,
        n: spec.n,
        polynomial: f.display_with("x"),
        newton_dim: data.delta.intrinsic_dim,
        nondegenerate: spec.nondegenerate,
        bad_faces: Vec::new(),
        volume_bound: bound,
        candidate_values: None,
        witnesses: None,
        grid: spec.grid.clone(),
        errors: Vec::new(),
        curves: Vec::new(),
    };
    if !command.needs_values() {
        report.bad_faces = reports;
        return Ok(report);
    }

    let cfg = SolverConfig { seed: spec.seed, ..SolverConfig::default() };
    let charts = assign_charts(spec, &faces, &data, &mut errors);
    let mut per_face: Vec<Vec<TorusCriticalPoint>> = Vec::with_capacity(faces.len());
    let mut chosen: Vec<Vec<(TorusCriticalPoint, bool)>> = Vec::with_capacity(faces.len());
    for (i, face) in faces.iter().enumerate() {
        let f_gamma = face_polynomial(&f, face);
        reports[i].face_polynomial = Some(f_gamma.display_with("x"));
        let chart = match &charts[i] {
            Ok(c) => c.clone(),
            Err(e) => {
                errors.push(ErrorEntry::new(e, Some(i + 1)));
                let values = critical_values_ambient(&f_gamma, &cfg);
                per_face.push(values.into_iter().map(value_only).collect());
                chosen.push(Vec::new());
                continue;
            }
        };
        let g = chart_face_polynomial(&f.substitute_monomial(&chart.w), chart.k);
        reports[i].chart_face_polynomial = Some(g.display_with("u"));
        let mut points = match face_critical_points(&g, &SolverConfig { seed: mix(spec.seed, i, 0), ..cfg.clone() }) {
            Ok(p) => p,
            Err(e) => {
                errors.push(ErrorEntry::new(&e, Some(i + 1)));
                Vec::new()
            }
        };
        let mut picks: Vec<(TorusCriticalPoint, bool)> = Vec::new();
        if let Some(u) = user_base_point(spec, i, &charts) {
            match critical_point_override(&g, u) {
                Ok(mut p) => {
                    // the user point becomes the representative of its value
                    if let Some(q) = points.iter_mut().find(|q| (q.value - p.value).norm() <= VALUE_TOL) {
                        p.isolated = q.isolated;
                        *q = p.clone();
                    } else {
                        points.push(p.clone());
                    }
                    picks.push((p, true));
                }
                Err(e) => errors.push(ErrorEntry::new(&e, Some(i + 1))),
            }
        }
        for p in &points {
            if !picks.iter().any(|(q, _)| (q.value - p.value).norm() <= VALUE_TOL) {
                picks.push((p.clone(), false));
            }
        }
        reports[i].chart = Some(chart);
        reports[i].critical_points = Some(points.clone());
        per_face.push(points);
        chosen.push(picks);
    }
    report.candidate_values = Some(candidate_values(&per_face, spec.nondegenerate, &cfg));

    if command.needs_witnesses() {
        let mut witnesses = Vec::new();
        for (i, picks) in chosen.iter().enumerate() {
            let Ok(chart) = &charts[i] else { continue };
            for (p_idx, (point, user)) in picks.iter().enumerate() {
                match witness_for_point(&f, chart, i, point, *user, &spec.grid, mix(spec.seed, i, p_idx + 1)) {
                    Ok((w, x)) => {
                        if !w.passed {
                            let e = Error::VerificationFailed(format!(
                                "face {} value {}: growth {} decay {} limit {} consistency {}",
                                i + 1,
                                fmt_c64(w.value),
                                w.verification.pass_growth,
                                w.verification.pass_decay,
                                w.verification.pass_limit,
                                w.consistency.pass
                            ));
                            errors.push(ErrorEntry::new(&e, Some(i + 1)));
                        }
                        witnesses.push(w);
                        report.curves.push(x);
                    }
                    Err(e) => errors.push(ErrorEntry::new(&e, Some(i + 1))),
                }
            }
        }
        report.witnesses = Some(witnesses);
    }
    report.bad_faces = reports;
    report.errors = errors;
    Ok(report)
}

fn mix(seed: u64, face: usize, point: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((face as u64) << 20 | point as u64)
}

fn value_only(v: Complex64) -> TorusCriticalPoint {
    TorusCriticalPoint { u: Vec::new(), value: v, residual: 0.0, isolated: true, exact: None }
}

fn fmt_c64(z: Complex64) -> String {
    format!("{}{:+}i", clean(z.re), clean(z.im))
}

/// One chart per face: the first user matrix valid for it, else an automatic one.
fn assign_charts(
    spec: &ProblemSpec,
    faces: &[BadFace],
    data: &NewtonData,
    errors: &mut Vec<ErrorEntry>,
) -> Vec<Result<Chart>> {
    let mut used = vec![false; spec.charts.len()];
    let out = faces
        .iter()
        .map(|face| {
            for (c, cs) in spec.charts.iter().enumerate() {
                if let Ok(chart) = chart_from_matrix(&cs.w, face, data, ChartSource::User) {
                    used[c] = true;
                    return Ok(chart);
                }
            }
            build_chart(face, data, None)
        })
        .collect();
    for (c, u) in used.iter().enumerate() {
        if !u {
            let e = Error::ChartInvalid(format!("chart {} fits no bad face", c + 1));
            errors.push(ErrorEntry::new(&e, None));
        }
    }
    out
}

/// Base point override for face `i`: from its user chart, else the global one
/// when the face is the first whose torus dimension matches.
fn user_base_point<'a>(spec: &'a ProblemSpec, i: usize, charts: &[Result<Chart>]) -> Option<&'a [Rat]> {
    let chart = charts[i].as_ref().ok()?;
    if chart.source == ChartSource::User {
        if let Some(cs) = spec.charts.iter().find(|cs| cs.w == chart.w) {
            if let Some(u) = &cs.ustar {
                return Some(u);
            }
        }
    }
    let u = spec.ustar.as_deref()?;
    let first = charts.iter().position(|c| c.as_ref().is_ok_and(|c| c.n() - c.k == u.len()))?;
    (first == i).then_some(u)
}

fn witness_for_point(
    f: &SparsePoly,
    chart: &Chart,
    face: usize,
    point: &TorusCriticalPoint,
    user: bool,
    grid: &Grid,
    seed: u64,
) -> Result<(WitnessReport, WitnessCurve)> {
    let k = chart.k;
    let fw = f.substitute_monomial(&chart.w);
    let g = chart_face_polynomial(&fw, k);
    let lift = |tail: Vec<Cx>, prec: usize| {
        let mut u = vec![Cx::zero(prec); k];
        u.extend(tail);
        u
    };
    let tail_at = |prec: usize, from: Option<&[Cx]>| -> Vec<Cx> {
        match (&point.exact, from) {
            (Some(r), _) => r.iter().map(|x| Cx::from_rat(x, prec)).collect(),
            (None, Some(start)) => refine_from(&g, start.to_vec(), prec),
            (None, None) => refine_point(&g, &point.u, prec),
        }
    };
    let search_tail = tail_at(SEARCH_PRECISION, None);
    let facet = build_delta_star_and_facet(&fw, chart, &lift(search_tail.clone(), SEARCH_PRECISION))?;
    let prec = working_precision(f, &facet.spread, facet.l0, grid.tmin).max(SEARCH_PRECISION);
    let u_star = lift(tail_at(prec, Some(&search_tail)), prec);
    let syn = synthesize_witness(&fw, chart, &u_star, &facet, point.isolated, seed)?;
    let curve = syn.curve;
    let jets = synthesis_jets(&fw, chart, &curve.u_star, &syn.facet)?;
    let order_table = symbolic_order_check(&curve, &jets, &syn.facet)?;
    let order0_forms = syn
        .facet
        .j
        .iter()
        .map(|&j| Order0Form {
            j: j + 1,
            terms: jets[j].initial_form(&syn.facet.q, syn.facet.rho).into_iter().map(|(e, c)| (e, c.to_c64())).collect(),
        })
        .collect();
    let target = g.eval_cx(&curve.u_star[k..]);
    let xs = push_to_x(&curve, chart);
    let x = WitnessCurve { x: xs, target: target.clone(), face, real: curve.is_real() };
    let verification = numeric_verify(f, &x, grid);
    let consistency = consistency_checks(f, &fw, chart, &curve, &x, grid, seed);
    let passed = verification.passed() && consistency.pass;
    let report = WitnessReport {
        face: face + 1,
        value: target.to_c64(),
        base_point: point.u.clone(),
        isolated: point.isolated,
        user_base_point: user,
        equation_count: syn.facet.equation_count(),
        scheduled_equations: syn.facet.scheduled_equations(syn.schedule),
        schedule: syn.schedule,
        relocated: syn.relocated,
        precision: prec,
        length: curve.length(),
        order0_forms,
        x_orders: x.x.iter().map(|r| r.order()).collect(),
        real: x.real,
        order_table,
        verification,
        consistency,
        passed,
        facet: syn.facet,
        curve,
    };
    Ok((report, x))
}

/// CSV samples of `x(t)` and `f(x(t))` on the grid; real curves also get the
/// `t < 0` branch.
pub fn emit_curve_samples(f: &SparsePoly, x: &WitnessCurve, grid: &Grid) -> String {
    let prec = x.target.precision();
    let mut out = String::from("t");
    for i in 1..=x.x.len() {
        let _ = write!(out, ",re_x{i},im_x{i}");
    }
    out.push_str(",re_f,im_f\n");
    let samples = grid.samples();
    let signs: &[f64] = if x.real { &[1.0, -1.0] } else { &[1.0] };
    for &sign in signs {
        for &t in &samples {
            let tc = Cx::from_f64_mag(sign * t, prec);
            let xs = x.eval(&tc);
            let _ = write!(out, "{:e}", sign * t);
            for z in &xs {
                let c = z.to_c64();
                let _ = write!(out, ",{:e},{:e}", c.re, c.im);
            }
            let v = f.eval_cx(&xs).to_c64();
            let _ = writeln!(out, ",{:e},{:e}", v.re, v.im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{LaurentT, RationalT};
    use crate::io::parse_problem;
    use crate::lattice::int;

    const RAY_FACE: &str = include_str!("../../../problems/ray_face.toml");
    const PLANE_FACE: &str = include_str!("../../../problems/plane_face.toml");

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(int(a), int(b))
    }

    #[test]
    fn bound_of_the_plane_face() {
        let spec = parse_problem(PLANE_FACE).unwrap();
        let rep = run_pipeline(&spec, Command::Bound).unwrap();
        assert_eq!(rep.volume_bound, int(10));
        assert!(rep.candidate_values.is_none() && rep.witnesses.is_none());
    }

    #[test]
    fn no_bad_faces() {
        let text = "n = 2\nterms = [ { coef = \"1\", exp = [1, 0] }, { coef = \"1\", exp = [0, 1] }, { coef = \"1\", exp = [2, 2] } ]\n";
        let rep = run_pipeline(&parse_problem(text).unwrap(), Command::Badfaces).unwrap();
        assert!(rep.bad_faces.is_empty());
        assert_eq!(rep.volume_bound, int(1));
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn witness_reports_are_reproducible() {
        let spec = parse_problem(RAY_FACE).unwrap();
        let a = run_pipeline(&spec, Command::Witness).unwrap();
        let b = run_pipeline(&spec, Command::Witness).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let w = a.witnesses.as_ref().unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|w| w.passed && w.length == 4));
        assert_eq!(a.exit_code(), 0);
    }

    #[test]
    fn foreign_chart_is_reported() {
        let mut spec = parse_problem(RAY_FACE).unwrap();
        spec.charts[0].w = crate::lattice::IntMat::identity(3);
        let rep = run_pipeline(&spec, Command::Values).unwrap();
        assert_eq!(rep.exit_code(), 3);
        assert_eq!(rep.errors[0].module, "toric-chart");
        // the automatic chart still yields the values
        assert_eq!(rep.candidate_values.unwrap().values.len(), 2);
    }

    fn rat_eval(c: &[Rat], t: &Rat) -> Rat {
        c.iter().rev().fold(Rat::from_integer(int(0)), |acc, a| acc * t + a)
    }

    #[test]
    fn samples_of_a_displayed_rational_curve() {
        let prec = 128;
        // coefficients in increasing powers of t
        let num = [r(-1, 3), r(1, 1), r(1, 1), r(1, 1), r(1, 1)];
        let den = [r(2, 3), r(3, 4), r(-1, 4), r(131, 256), r(1, 1)];
        let one = LaurentT::from_rats(0, &[r(1, 1)], prec);
        let x1 = RationalT { num: LaurentT::from_rats(0, &num, prec), den: LaurentT::from_rats(0, &den, prec) };
        let x = WitnessCurve {
            x: vec![x1, RationalT { num: one.clone(), den: one }],
            target: Cx::zero(prec),
            face: 0,
            real: true,
        };
        let f = SparsePoly::from_i64(2, &[(1, &[1, 0])]);
        let grid = Grid::default();
        let csv = emit_curve_samples(&f, &x, &grid);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,re_x1,im_x1,re_x2,im_x2,re_f,im_f");
        assert_eq!(lines.len(), 1 + 2 * grid.points);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        let t = r(1, 10);
        let expect = rat_eval(&num, &t) / rat_eval(&den, &t);
        let expect: f64 = num_traits::ToPrimitive::to_f64(&expect).unwrap();
        assert!((first[0] - 0.1).abs() < 1e-15);
        assert!((first[1] - expect).abs() < 1e-14 * expect.abs());
        assert_eq!(first[2], 0.0);
        assert!((first[5] - expect).abs() < 1e-14 * expect.abs());
        assert!(lines[grid.points + 1].starts_with('-'));
    }

    #[test]
    fn sampled_limit_matches_the_report() {
        let spec = parse_problem(RAY_FACE).unwrap();
        let rep = run_pipeline(&spec, Command::EmitCurve).unwrap();
        let csv = emit_curve_samples(&spec.polynomial(), &rep.curves[0], &spec.grid);
        let last = csv.lines().nth(spec.grid.points).unwrap();
        let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
        let target = rep.witnesses.unwrap()[0].value;
        assert!((cols[cols.len() - 2] - target.re).abs() < 1e-4);
    }
}
