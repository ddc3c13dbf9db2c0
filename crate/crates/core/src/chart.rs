//! Toric charts `x = u^W` adapted to a bad face, the (μ) test, and
//! unimodular subdivisions of rational cones.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, dot, Int, IntMat, IntVec, Rat};
use crate::newton::{face_dual_cone, BadFace, NewtonData};
use crate::polyhedra::{self, ser_int_vecs, ConeRep};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Chart {
    /// Rows `w_i`; column `j` is the vector `a_j`.
    #[serde(serialize_with = "ser_mat")]
    pub w: IntMat,
    #[serde(serialize_with = "ser_mat")]
    pub m: IntMat,
    /// Columns of `M`: `ϑ_x f = Σ_j ⟨μ_j, ϑ_u f^W⟩`-components.
    #[serde(serialize_with = "ser_int_vecs")]
    pub mu: Vec<IntVec>,
    pub k: usize,
    pub source: ChartSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartSource {
    User,
    Automatic,
}

fn ser_mat<S: serde::Serializer>(m: &IntMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    ser_int_vecs(&m.row_vecs(), s)
}

impl Chart {
    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// `W · (q′, 0)`.
    pub fn exponent_spread(&self, q_prime: &[Int]) -> IntVec {
        let mut padded = q_prime.to_vec();
        padded.resize(self.n(), Int::zero());
        self.w.apply(&padded)
    }
}

/// Validates `w` as a chart for `face`.
pub fn chart_from_matrix(w: &IntMat, face: &BadFace, data: &NewtonData, source: ChartSource) -> Result<Chart> {
    let n = data.delta.ambient_dim;
    let k = face.codim;
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::ChartInvalid(format!("expected a {n}x{n} matrix")));
    }
    if !w.det().abs().is_one() {
        return Err(Error::ChartInvalid(format!("determinant {} is not ±1", w.det())));
    }
    for j in 0..k {
        let a = w.col(j);
        if face.vertices.iter().any(|v| !dot(&a, v).is_zero()) {
            return Err(Error::ChartInvalid(format!("column {} does not vanish on the face", j + 1)));
        }
    }
    for alpha in &data.support {
        let e = w.left_mul(alpha);
        if e[..k].iter().any(|x| x.is_negative()) {
            return Err(Error::ChartInvalid(format!(
                "exponent {:?} maps outside the affine half-space",
                lattice::to_i64_vec(alpha)
            )));
        }
        if face.contains_point(alpha) && e.iter().any(|x| x.is_negative()) {
            return Err(Error::ChartInvalid("face polynomial is not polynomial in the chart".into()));
        }
    }
    let m = lattice::invert_unimodular(w)?;
    let mu = m.col_vecs();
    Ok(Chart { w: w.clone(), m, mu, k, source })
}

/// Charts built from a unimodular subdivision of the normal cone of the face
/// and of the dual of the cone over the face, those with positive rows
/// `m_{k+1..n}` first. At most `limit` charts are returned.
pub fn automatic_charts(face: &BadFace, data: &NewtonData, limit: usize) -> Result<Vec<Chart>> {
    let n = data.delta.ambient_dim;
    let k = face.codim;
    let normal_cone = face_dual_cone(face, &data.gamma_minus);
    let sigmas = unimodular_subcones(&normal_cone, CHART_CONES, DEFAULT_BUDGET)?;

    // bases of span(γ) ∩ ℤⁿ whose cone contains the cone over γ
    let basis = lattice::saturate(&face.vertices, n);
    let local: Vec<IntVec> = face
        .vertices
        .iter()
        .map(|v| lattice::integer_coordinates(&basis, v).expect("face vertex in its own lattice"))
        .collect();
    let local_dual = polyhedra::dual_cone(&ConeRep::new(local));
    let duals = unimodular_subcones(&local_dual, CHART_CONES, DEFAULT_BUDGET)?;
    let mut m_choices: Vec<Vec<IntVec>> = Vec::new();
    for cone in &duals {
        let g = IntMat::from_rows(&cone.generators);
        let ginv_t = lattice::invert_unimodular(&g)?.transpose();
        // rows of G^{-T} are coordinates of the new basis
        let rows: Vec<IntVec> = ginv_t
            .row_vecs()
            .iter()
            .map(|c| {
                let mut v = vec![Int::zero(); n];
                for (ci, b) in c.iter().zip(&basis) {
                    v = lattice::add(&v, &lattice::scale(b, ci));
                }
                v
            })
            .collect();
        m_choices.push(rows);
    }

    let mut out = Vec::new();
    for sigma in &sigmas {
        let w0 = lattice::unimodular_complete(&sigma.generators, n, false)?.transpose();
        let m0 = lattice::invert_unimodular(&w0)?;
        let m0_tail: Vec<IntVec> = (k..n).map(|i| m0.row(i)).collect();
        for target in &m_choices {
            // target rows = G · m0_tail
            let mut g = IntMat::zeros(n - k, n - k);
            for (r, t) in target.iter().enumerate() {
                let c = lattice::integer_coordinates(&m0_tail, t)
                    .ok_or_else(|| Error::ChartInvalid("basis change is not integral".into()))?;
                for (s, x) in c.into_iter().enumerate() {
                    g[(r, s)] = x;
                }
            }
            let ginv = lattice::invert_unimodular(&g)?;
            let mut block = IntMat::identity(n);
            for r in 0..n - k {
                for s in 0..n - k {
                    block[(k + r, k + s)] = ginv[(r, s)].clone();
                }
            }
            let w = w0.mul(&block);
            if let Ok(chart) = chart_from_matrix(&w, face, data, ChartSource::Automatic) {
                if !out.contains(&chart) {
                    out.push(chart);
                }
            }
        }
    }
    let positive = |c: &Chart| (k..n).all(|i| c.m.row(i).iter().all(|x| x.is_positive()));
    out.sort_by_key(|c| !positive(c));
    out.truncate(limit);
    if out.is_empty() {
        return Err(Error::NoPositiveCompletion("no valid completion found".into()));
    }
    Ok(out)
}

/// The user chart if given, otherwise the first automatic one.
pub fn build_chart(face: &BadFace, data: &NewtonData, user_w: Option<&IntMat>) -> Result<Chart> {
    match user_w {
        Some(w) => chart_from_matrix(w, face, data, ChartSource::User),
        None => Ok(automatic_charts(face, data, 1)?.remove(0)),
    }
}

/// Condition (μ) for `q′`: some entry of `W·(q′,0)` is negative, checked
/// against non-membership of `(q′,0)` in the cone over the `μ_j`.
pub fn check_mu_condition(chart: &Chart, q_prime: &[Int]) -> Result<bool> {
    let e = chart.exponent_spread(q_prime);
    let by_spread = e.iter().any(|x| x.is_negative());
    let mut padded = q_prime.to_vec();
    padded.resize(chart.n(), Int::zero());
    let by_cone = !ConeRep::new(chart.mu.clone()).contains(&padded);
    if by_spread != by_cone {
        return Err(Error::InconsistentDuality(format!(
            "spread test {by_spread}, cone test {by_cone} for q' = {:?}",
            lattice::to_i64_vec(q_prime)
        )));
    }
    Ok(by_spread)
}

pub const DEFAULT_BUDGET: usize = 10_000;
const CHART_CONES: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct SubdividedFan {
    pub cones: Vec<ConeRep>,
}

/// A pointed cone expressed in a basis of `span(c) ∩ ℤⁿ`.
struct LocalCone {
    n: usize,
    basis: Vec<IntVec>,
    gens: Vec<IntVec>,
}

impl LocalCone {
    fn new(c: &ConeRep) -> Option<Self> {
        let n = c.ambient_dim();
        let gens: Vec<IntVec> =
            c.generators.iter().filter(|g| !lattice::is_zero(g)).map(|g| lattice::primitive(g)).collect();
        if gens.is_empty() {
            return None;
        }
        let basis = lattice::saturate(&gens, n);
        let gens = gens
            .iter()
            .map(|g| lattice::integer_coordinates(&basis, g).expect("generator in its saturated span"))
            .collect();
        Some(LocalCone { n, basis, gens })
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Simplicial cones covering the cone, using only its own rays.
    fn triangulation(&self) -> Result<Vec<Vec<IntVec>>> {
        let d = self.dim();
        if self.gens.len() == d {
            return Ok(vec![self.gens.clone()]);
        }
        let mut pts = self.gens.clone();
        pts.push(vec![Int::zero(); d]);
        let hull = polyhedra::convex_hull(&pts)?;
        let apex = hull
            .vertices
            .iter()
            .position(|v| lattice::is_zero(v))
            .ok_or_else(|| Error::ChartInvalid("cone is not pointed".into()))?;
        Ok(hull
            .triangulate(apex)
            .into_iter()
            .map(|s| s.into_iter().filter(|&i| i != apex).map(|i| hull.vertices[i].clone()).collect())
            .collect())
    }

    fn lift(&self, cone: &[IntVec]) -> ConeRep {
        let gens = cone
            .iter()
            .map(|x| {
                let mut v = vec![Int::zero(); self.n];
                for (xi, b) in x.iter().zip(&self.basis) {
                    v = lattice::add(&v, &lattice::scale(b, xi));
                }
                v
            })
            .collect();
        ConeRep::new(gens)
    }
}

fn is_unimodular(cone: &[IntVec]) -> bool {
    IntMat::from_rows(cone).det().abs().is_one()
}

/// Subdivides a pointed rational cone into simplicial cones that are
/// unimodular in the lattice `span(c) ∩ ℤⁿ`, by repeated stellar
/// subdivision at a lattice point of minimal height in a fundamental
/// parallelepiped.
pub fn unimodular_subdivide(c: &ConeRep, budget: usize) -> Result<SubdividedFan> {
    let Some(local) = LocalCone::new(c) else {
        return Ok(SubdividedFan { cones: vec![] });
    };
    let mut fan = local.triangulation()?;
    let mut steps = 0;
    loop {
        fan.iter_mut().for_each(|c| c.sort());
        fan.sort();
        let Some(bad) = fan.iter().find(|c| !is_unimodular(c)) else {
            break;
        };
        steps += 1;
        if steps > budget {
            return Err(Error::SubdivisionBudgetExceeded);
        }
        let p = parallelepiped_point(bad);
        let mut next = Vec::with_capacity(fan.len() + local.dim());
        for cone in fan {
            let lam = lattice::coordinates(&cone, &p).expect("full-dimensional cone");
            if lam.iter().any(|l| l.is_negative()) {
                next.push(cone);
                continue;
            }
            for (i, l) in lam.iter().enumerate() {
                if l.is_positive() {
                    let mut c2 = cone.clone();
                    c2[i] = p.clone();
                    next.push(c2);
                }
            }
        }
        fan = next;
    }
    Ok(SubdividedFan { cones: fan.iter().map(|c| local.lift(c)).collect() })
}

/// Up to `limit` full-dimensional unimodular subcones of `c`: first those
/// spanned by rays of `c`, then cones reached by stellar refinement of a
/// triangulation.
pub fn unimodular_subcones(c: &ConeRep, limit: usize, budget: usize) -> Result<Vec<ConeRep>> {
    let Some(local) = LocalCone::new(c) else {
        return Ok(vec![]);
    };
    let d = local.dim();
    let mut found: Vec<Vec<IntVec>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    let m = local.gens.len();
    if d > 0 && m >= d {
        loop {
            let cone: Vec<IntVec> = idx.iter().map(|&i| local.gens[i].clone()).collect();
            if is_unimodular(&cone) {
                found.push(cone);
            }
            // next d-subset in lexicographic order
            let Some(pos) = (0..d).rev().find(|&i| idx[i] < m - d + i) else { break };
            idx[pos] += 1;
            for j in pos + 1..d {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    let mut steps = 0;
    let mut stack: Vec<Vec<IntVec>> = local.triangulation()?.into_iter().rev().collect();
    while found.len() < limit {
        let Some(cone) = stack.pop() else { break };
        if is_unimodular(&cone) {
            let mut sorted = cone.clone();
            sorted.sort();
            if !found.iter().any(|f| {
                let mut g = f.clone();
                g.sort();
                g == sorted
            }) {
                found.push(cone);
            }
            continue;
        }
        steps += 1;
        if steps > budget {
            return Err(Error::SubdivisionBudgetExceeded);
        }
        let p = parallelepiped_point(&cone);
        let lam = lattice::coordinates(&cone, &p).expect("simplicial cone");
        for (i, l) in lam.iter().enumerate().rev() {
            if l.is_positive() {
                let mut c2 = cone.clone();
                c2[i] = p.clone();
                stack.push(c2);
            }
        }
    }
    found.truncate(limit);
    Ok(found.iter().map(|c| local.lift(c)).collect())
}

/// Nonzero lattice point `Σ λ_i g_i` with `0 ≤ λ_i < 1` minimising `Σ λ_i`.
fn parallelepiped_point(gens: &[IntVec]) -> IntVec {
    let d = gens.len();
    let (h, _, _) = lattice::column_hermite(&IntMat::from_cols(gens));
    let radix: Vec<Int> = (0..d).map(|i| h[(i, i)].clone()).collect();
    let mut best: Option<(Rat, IntVec)> = None;
    let mut x = vec![Int::zero(); d];
    loop {
        // advance the mixed-radix counter
        let mut i = 0;
        while i < d {
            x[i] += 1;
            if x[i] < radix[i] {
                break;
            }
            x[i] = Int::zero();
            i += 1;
        }
        if i == d {
            break;
        }
        let lam = lattice::coordinates(gens, &x).expect("simplicial cone");
        let frac: Vec<Rat> = lam.iter().map(|l| l - l.floor()).collect();
        let height: Rat = frac.iter().sum();
        if height.is_zero() {
            continue;
        }
        let exact: Vec<Rat> = (0..d)
            .map(|r| frac.iter().zip(gens).map(|(f, g)| f * Rat::from_integer(g[r].clone())).sum())
            .collect();
        let p: IntVec = exact.iter().map(|v| v.to_integer()).collect();
        let better = match &best {
            None => true,
            Some((bh, bp)) => height < *bh || (height == *bh && p < *bp),
        };
        if better {
            best = Some((height, p));
        }
    }
    best.expect("non-unimodular cone has a parallelepiped point").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ivec;
    use crate::newton::{bad_faces, newton_data};
    use crate::test_polys::*;

    #[test]
    fn paper_charts_are_accepted() {
        for (f, w, k) in [
            (ray_face(), ray_face_chart(), 2),
            (plane_face(), plane_face_chart(), 1),
            (five_var(), five_var_chart(), 4),
            (triple_root(), triple_root_chart(), 2),
        ] {
            let data = newton_data(&f).unwrap();
            let face = &bad_faces(&data)[0];
            let chart = build_chart(face, &data, Some(&w)).unwrap();
            assert_eq!(chart.k, k);
            assert!(chart.w.mul(&chart.m).is_identity());
        }
    }

    #[test]
    fn non_unimodular_chart_rejected() {
        let data = newton_data(&ray_face()).unwrap();
        let face = &bad_faces(&data)[0];
        let w = IntMat::from_i64(&[vec![2, 0, 1], vec![-2, -1, -1], vec![2, 2, 1]]);
        assert!(matches!(build_chart(face, &data, Some(&w)), Err(Error::ChartInvalid(_))));
    }

    #[test]
    fn mu_condition_examples() {
        let data = newton_data(&five_var()).unwrap();
        let face = &bad_faces(&data)[0];
        let chart = build_chart(face, &data, Some(&five_var_chart())).unwrap();
        let q1 = ivec(&[5, -20, 3, 15]);
        assert_eq!(chart.exponent_spread(&q1), ivec(&[-1, 0, -2, 8, -1]));
        assert!(check_mu_condition(&chart, &q1).unwrap());
        assert!(!check_mu_condition(&chart, &ivec(&[0, 0, 0, 0])).unwrap());
    }

    #[test]
    fn automatic_charts_are_valid() {
        for f in [ray_face(), plane_face(), five_var(), triple_root()] {
            let data = newton_data(&f).unwrap();
            let face = &bad_faces(&data)[0];
            let charts = automatic_charts(face, &data, 16).unwrap();
            assert!(!charts.is_empty());
            for c in charts {
                assert!(c.w.mul(&c.m).is_identity());
                assert_eq!(c.k, face.codim);
            }
        }
    }

    fn assert_unimodular_fan(fan: &SubdividedFan, n: usize) {
        for c in &fan.cones {
            assert!(c.simplicial && c.unimodular, "{:?}", c.generators);
            assert!(lattice::unimodular_complete(&c.generators, n, false).is_ok());
        }
    }

    #[test]
    fn subdivision_of_three_normals() {
        let c = ConeRep::new(vec![ivec(&[1, -2, 2]), ivec(&[0, -1, 2]), ivec(&[1, 1, -1])]);
        let fan = unimodular_subdivide(&c, DEFAULT_BUDGET).unwrap();
        assert_unimodular_fan(&fan, 3);
        let wide = ConeRep::new(vec![ivec(&[-1, 0, 2]), ivec(&[0, -1, 2]), ivec(&[1, 1, 1]), ivec(&[1, -1, 1])]);
        let fan = unimodular_subdivide(&wide, DEFAULT_BUDGET).unwrap();
        assert_unimodular_fan(&fan, 3);
        let plane = ConeRep::new(vec![ivec(&[1, 0]), ivec(&[1, 5])]);
        let fan = unimodular_subdivide(&plane, DEFAULT_BUDGET).unwrap();
        assert_eq!(fan.cones.len(), 5);
        assert_unimodular_fan(&fan, 2);
    }

    #[test]
    fn unimodular_input_is_kept() {
        let c = ConeRep::new(vec![ivec(&[1, 0, 0]), ivec(&[1, 1, 0]), ivec(&[0, 0, 1])]);
        let fan = unimodular_subdivide(&c, DEFAULT_BUDGET).unwrap();
        assert_eq!(fan.cones.len(), 1);
    }
}
