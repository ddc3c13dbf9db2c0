//! Exact convex hulls of lattice points (and rays), faces with inner
//! normals, dual cones, and normalised lattice volumes.
//!
//! Facets come from the double description method applied to the
//! homogenised generator system, after projecting onto coordinates in
//! which the affine hull is a graph.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, dot, primitive, Int, IntMat, IntVec, Rat};

pub const MAX_DIM: usize = 6;

/// Face of a polytope: `<normal, v> = offset` on the face, `>= offset` on the rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaceDesc {
    #[serde(serialize_with = "ser_ints")]
    pub normal: IntVec,
    #[serde(serialize_with = "ser_int")]
    pub offset: Int,
    pub vertex_subset: Vec<usize>,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct Polytope {
    /// Vertices scaled by `den` (integral).
    pub vertices: Vec<IntVec>,
    pub den: Int,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    facets: Vec<FaceDesc>,
    /// Equations `<e, x> = c` of the affine hull (in scaled coordinates).
    equations: Vec<(IntVec, Int)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConeRep {
    #[serde(serialize_with = "ser_int_vecs")]
    pub generators: Vec<IntVec>,
    pub simplicial: bool,
    pub unimodular: bool,
}

pub(crate) fn ser_int<S: serde::Serializer>(x: &Int, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub(crate) fn ser_ints<S: serde::Serializer>(v: &IntVec, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        match i64::try_from(x) {
            Ok(i) => seq.serialize_element(&i)?,
            Err(_) => seq.serialize_element(&x.to_string())?,
        }
    }
    seq.end()
}

pub(crate) fn ser_int_vecs<S: serde::Serializer>(v: &[IntVec], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&lattice::to_i64_vec(x))?;
    }
    seq.end()
}

impl ConeRep {
    pub fn new(generators: Vec<IntVec>) -> Self {
        let n = generators.first().map_or(0, |g| g.len());
        let simplicial = lattice::rank(&generators) == generators.len();
        let unimodular = simplicial
            && (generators.is_empty()
                || lattice::unimodular_complete(
                    &generators.iter().map(|g| primitive(g)).collect::<Vec<_>>(),
                    n,
                    false,
                )
                .is_ok());
        ConeRep { generators, simplicial, unimodular }
    }

    pub fn ambient_dim(&self) -> usize {
        self.generators.first().map_or(0, |g| g.len())
    }

    pub fn dim(&self) -> usize {
        lattice::rank(&self.generators)
    }

    /// Exact membership through the inequality description.
    pub fn contains(&self, x: &[Int]) -> bool {
        let h = cone_inequalities(&self.generators, x.len());
        h.equations.iter().all(|e| dot(e, x).is_zero()) && h.normals.iter().all(|a| !dot(a, x).is_negative())
    }
}

/// Inequality description of a cone: `<e, x> = 0` and `<h, x> >= 0`.
#[derive(Clone, Debug)]
pub struct ConeInequalities {
    pub normals: Vec<IntVec>,
    pub equations: Vec<IntVec>,
}

pub fn cone_inequalities(generators: &[IntVec], n: usize) -> ConeInequalities {
    let origin = vec![Int::zero(); n];
    let core = hull_core(&[origin], generators, n);
    ConeInequalities {
        normals: core.facets.iter().map(|f| f.normal.clone()).collect(),
        equations: core.equations.iter().map(|(e, _)| e.clone()).collect(),
    }
}

// ---------------------------------------------------------------------------
// double description

#[derive(Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64).max(1)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn is_subset(&self, o: &BitSet) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & !b == 0)
    }
}

/// Extreme rays of the pointed cone `{y : <row, y> >= 0 for all rows}`;
/// requires `rank(rows) == dim`.
fn extreme_rays(rows: &[IntVec], dim: usize) -> Vec<IntVec> {
    let m = rows.len();
    let mut basis: Vec<usize> = Vec::new();
    let mut acc: Vec<IntVec> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        acc.push(r.clone());
        if lattice::rank(&acc) > basis.len() {
            basis.push(i);
            if basis.len() == dim {
                break;
            }
        } else {
            acc.pop();
        }
    }
    assert_eq!(basis.len(), dim, "cone is not pointed");
    let b = IntMat::from_rows(&basis.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>());
    let binv = rational_inverse(&b);
    let mut rays: Vec<(IntVec, BitSet)> = Vec::new();
    for i in 0..dim {
        let col: Vec<Rat> = (0..dim).map(|r| binv[r][i].clone()).collect();
        let v = clear_denominators(&col);
        let mut z = BitSet::new(m);
        for (j, &bj) in basis.iter().enumerate() {
            if j != i {
                z.insert(bj);
            }
        }
        rays.push((v, z));
    }
    let in_basis: BTreeSet<usize> = basis.iter().copied().collect();
    for (ri, row) in rows.iter().enumerate() {
        if in_basis.contains(&ri) {
            continue;
        }
        let vals: Vec<Int> = rays.iter().map(|(v, _)| dot(row, v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        if neg.is_empty() {
            for (i, r) in rays.iter_mut().enumerate() {
                if vals[i].is_zero() {
                    r.1.insert(ri);
                }
            }
            continue;
        }
        let mut fresh: Vec<(IntVec, BitSet)> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].1.and(&rays[q].1);
                if dim >= 2 && common.count() < dim - 2 {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(r, (_, z))| r == p || r == q || !common.is_subset(z));
                if !adjacent {
                    continue;
                }
                let v: IntVec = rays[q]
                    .0
                    .iter()
                    .zip(&rays[p].0)
                    .map(|(xq, xp)| &vals[p] * xq - &vals[q] * xp)
                    .collect();
                let mut z = common;
                z.insert(ri);
                fresh.push((primitive(&v), z));
            }
        }
        let mut next: Vec<(IntVec, BitSet)> = Vec::new();
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i].is_zero() {
                r.1.insert(ri);
                next.push(r);
            } else if vals[i].is_positive() {
                next.push(r);
            }
        }
        next.extend(fresh);
        rays = next;
    }
    let mut out: Vec<IntVec> = rays.into_iter().map(|(v, _)| v).collect();
    out.sort();
    out.dedup();
    out
}

fn rational_inverse(b: &IntMat) -> Vec<Vec<Rat>> {
    let n = b.nrows();
    let mut a: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rat> = (0..n).map(|j| Rat::from_integer(b[(i, j)].clone())).collect();
            row.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero()).expect("singular basis");
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let t = &a[c][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn clear_denominators(v: &[Rat]) -> IntVec {
    let l = v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()));
    primitive(&v.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------
// hull core

pub(crate) struct HullCore {
    pub dim: usize,
    /// Facets over point indices (normals lifted to the ambient space).
    pub facets: Vec<FaceDesc>,
    pub equations: Vec<(IntVec, Int)>,
    pub vertex_flags: Vec<bool>,
}

/// Facets of `conv(points) + cone(rays)` inside its affine hull.
pub(crate) fn hull_core(points: &[IntVec], rays: &[IntVec], n: usize) -> HullCore {
    let p0 = &points[0];
    let mut diffs: Vec<IntVec> = points.iter().map(|p| lattice::sub(p, p0)).collect();
    diffs.extend(rays.iter().cloned());
    let diffs: Vec<IntVec> = diffs.into_iter().filter(|d| !lattice::is_zero(d)).collect();
    let d = lattice::rank(&diffs);
    let equations: Vec<(IntVec, Int)> = lattice::kernel_basis(&diffs, n)
        .into_iter()
        .map(|e| {
            let c = dot(&e, p0);
            (e, c)
        })
        .collect();
    if d == 0 {
        let mut flags = vec![false; points.len()];
        flags[0] = true;
        return HullCore { dim: 0, facets: Vec::new(), equations, vertex_flags: flags };
    }
    // coordinates on which the affine hull projects isomorphically
    let mut coords: Vec<usize> = Vec::new();
    for c in 0..n {
        let mut trial = coords.clone();
        trial.push(c);
        let proj: Vec<IntVec> = diffs.iter().map(|v| trial.iter().map(|&i| v[i].clone()).collect()).collect();
        if lattice::rank(&proj) == trial.len() {
            coords = trial;
            if coords.len() == d {
                break;
            }
        }
    }
    let mut rows: Vec<IntVec> = Vec::with_capacity(points.len() + rays.len());
    for p in points {
        let mut r = vec![Int::one()];
        r.extend(coords.iter().map(|&i| p[i].clone()));
        rows.push(r);
    }
    for r in rays {
        let mut row = vec![Int::zero()];
        row.extend(coords.iter().map(|&i| r[i].clone()));
        rows.push(row);
    }
    let ext = extreme_rays(&rows, d + 1);
    let mut facets = Vec::new();
    for y in ext {
        if y[1..].iter().all(|x| x.is_zero()) {
            continue; // face at infinity
        }
        let mut normal = vec![Int::zero(); n];
        for (k, &c) in coords.iter().enumerate() {
            normal[c] = y[k + 1].clone();
        }
        let offset = -y[0].clone();
        let subset: Vec<usize> = (0..points.len()).filter(|&i| dot(&normal, &points[i]) == offset).collect();
        facets.push(FaceDesc { normal, offset, vertex_subset: subset, dim: d - 1 });
    }
    facets.sort_by(|a, b| a.normal.cmp(&b.normal));
    let mut flags = vec![false; points.len()];
    let mut seen: BTreeSet<&IntVec> = BTreeSet::new();
    for (i, p) in points.iter().enumerate() {
        if seen.contains(p) {
            continue;
        }
        seen.insert(p);
        let tight: Vec<IntVec> = facets
            .iter()
            .filter(|f| f.vertex_subset.contains(&i))
            .map(|f| coords.iter().map(|&c| f.normal[c].clone()).collect())
            .collect();
        // with rays present a point can also be a vertex of a ray-free polytope direction;
        // vertices are points where the tight normals span the projected space
        flags[i] = lattice::rank(&tight) == d;
    }
    HullCore { dim: d, facets, equations, vertex_flags: flags }
}

// ---------------------------------------------------------------------------
// public operations

/// Facets of `conv(points) + cone(rays)` with inner normals; each
/// `vertex_subset` lists every input point lying on the facet. Also returns
/// the dimension of the polyhedron.
pub fn polyhedron_facets(points: &[IntVec], rays: &[IntVec]) -> Result<(usize, Vec<FaceDesc>)> {
    let n = points.first().map_or(0, |p| p.len());
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    let core = hull_core(points, rays, n);
    Ok((core.dim, core.facets))
}

pub fn convex_hull(points: &[IntVec]) -> Result<Polytope> {
    hull_scaled(points, Int::one())
}

/// Hull of rational points; vertices are stored scaled by the common denominator.
pub fn convex_hull_rational(points: &[Vec<Rat>]) -> Result<Polytope> {
    let den = points
        .iter()
        .flatten()
        .fold(Int::one(), |l, x| l.lcm(x.denom()));
    let scaled: Vec<IntVec> = points
        .iter()
        .map(|p| p.iter().map(|x| (x * Rat::from_integer(den.clone())).to_integer()).collect())
        .collect();
    hull_scaled(&scaled, den)
}

fn hull_scaled(points: &[IntVec], den: Int) -> Result<Polytope> {
    let Some(first) = points.first() else {
        return Err(Error::Parse("convex hull of an empty point set".into()));
    };
    let n = first.len();
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    let core = hull_core(points, &[], n);
    let mut vertices: Vec<IntVec> = points
        .iter()
        .zip(&core.vertex_flags)
        .filter(|(_, &f)| f)
        .map(|(p, _)| p.clone())
        .collect();
    vertices.sort();
    vertices.dedup();
    let index: BTreeMap<&IntVec, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let facets = core
        .facets
        .into_iter()
        .map(|f| {
            let mut subset: Vec<usize> = f
                .vertex_subset
                .iter()
                .filter_map(|&i| index.get(&points[i]).copied())
                .collect();
            subset.sort();
            subset.dedup();
            FaceDesc { vertex_subset: subset, ..f }
        })
        .collect();
    Ok(Polytope { vertices, den, ambient_dim: n, intrinsic_dim: core.dim, facets, equations: core.equations })
}

impl Polytope {
    pub fn facets(&self) -> &[FaceDesc] {
        &self.facets
    }

    pub fn equations(&self) -> &[(IntVec, Int)] {
        &self.equations
    }

    /// Membership of an integer point (unscaled coordinates).
    pub fn contains(&self, x: &[Int]) -> bool {
        let xs: IntVec = x.iter().map(|v| v * &self.den).collect();
        self.contains_scaled(&xs)
    }

    pub fn contains_rational(&self, x: &[Rat]) -> bool {
        let l = x.iter().fold(Int::one(), |l, v| l.lcm(v.denom()));
        let xs: IntVec = x
            .iter()
            .map(|v| (v * Rat::from_integer(&l * &self.den)).to_integer())
            .collect();
        self.equations.iter().all(|(e, c)| dot(e, &xs) == c * &l)
            && self.facets.iter().all(|f| dot(&f.normal, &xs) >= &f.offset * &l)
    }

    fn contains_scaled(&self, xs: &[Int]) -> bool {
        self.equations.iter().all(|(e, c)| &dot(e, xs) == c)
            && self.facets.iter().all(|f| dot(&f.normal, xs) >= f.offset)
    }

    /// Vertex coordinates as rationals.
    pub fn vertex_rationals(&self) -> Vec<Vec<Rat>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(|x| Rat::new(x.clone(), self.den.clone())).collect())
            .collect()
    }

    /// Every nonempty face (including the polytope itself), sorted by dimension
    /// then vertex subset.
    pub fn all_faces(&self) -> Vec<FaceDesc> {
        let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
        let facet_sets: Vec<BTreeSet<usize>> =
            self.facets.iter().map(|f| f.vertex_subset.iter().copied().collect()).collect();
        let whole: Vec<usize> = (0..self.vertices.len()).collect();
        sets.insert(whole.clone());
        let mut frontier: Vec<BTreeSet<usize>> = vec![whole.iter().copied().collect()];
        while let Some(s) = frontier.pop() {
            for fs in &facet_sets {
                let inter: BTreeSet<usize> = s.intersection(fs).copied().collect();
                if inter.is_empty() {
                    continue;
                }
                let key: Vec<usize> = inter.iter().copied().collect();
                if sets.insert(key) {
                    frontier.push(inter);
                }
            }
        }
        let mut out: Vec<FaceDesc> = sets.into_iter().map(|s| self.face_from_subset(s)).collect();
        out.sort_by(|a, b| a.dim.cmp(&b.dim).then_with(|| a.vertex_subset.cmp(&b.vertex_subset)));
        out
    }

    /// Faces of the given dimension.
    pub fn faces(&self, dim: usize) -> Vec<FaceDesc> {
        self.all_faces().into_iter().filter(|f| f.dim == dim).collect()
    }

    /// Facets containing every vertex of `subset`.
    pub fn facets_containing(&self, subset: &[usize]) -> Vec<&FaceDesc> {
        self.facets
            .iter()
            .filter(|f| subset.iter().all(|i| f.vertex_subset.contains(i)))
            .collect()
    }

    fn face_from_subset(&self, subset: Vec<usize>) -> FaceDesc {
        let pts: Vec<&IntVec> = subset.iter().map(|&i| &self.vertices[i]).collect();
        let diffs: Vec<IntVec> = pts.iter().map(|p| lattice::sub(p, pts[0])).collect();
        let dim = lattice::rank(&diffs);
        let containing = self.facets_containing(&subset);
        let mut normal = vec![Int::zero(); self.ambient_dim];
        for f in &containing {
            normal = lattice::add(&normal, &f.normal);
        }
        let normal = primitive(&normal);
        let offset = dot(&normal, pts[0]);
        FaceDesc { normal, offset, vertex_subset: subset, dim }
    }

    /// Pulling triangulation from the vertex with the given index; simplices as
    /// vertex index lists of length `intrinsic_dim + 1`.
    pub fn triangulate(&self, apex: usize) -> Vec<Vec<usize>> {
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        pulling(&self.vertices, &all, apex)
    }
}

fn pulling(points: &[IntVec], subset: &[usize], apex_pos: usize) -> Vec<Vec<usize>> {
    let pts: Vec<IntVec> = subset.iter().map(|&i| points[i].clone()).collect();
    let n = pts[0].len();
    let core = hull_core(&pts, &[], n);
    let verts: Vec<usize> = (0..pts.len()).filter(|&i| core.vertex_flags[i]).collect();
    if core.dim == 0 {
        return vec![vec![subset[verts[0]]]];
    }
    let apex = verts[apex_pos.min(verts.len() - 1)];
    let mut out = Vec::new();
    for f in &core.facets {
        if f.vertex_subset.contains(&apex) {
            continue;
        }
        let sub: Vec<usize> = f
            .vertex_subset
            .iter()
            .filter(|&&i| core.vertex_flags[i])
            .map(|&i| subset[i])
            .collect();
        for mut s in pulling(points, &sub, 0) {
            s.push(subset[apex]);
            out.push(s);
        }
    }
    out
}

/// Generators of `{a : <a, x> >= 0 for all x in c}`; a lineality space is
/// returned as a pair of opposite generators per basis vector.
pub fn dual_cone(c: &ConeRep) -> ConeRep {
    let n = c.ambient_dim();
    let h = cone_inequalities(&c.generators, n);
    let mut gens = h.normals;
    for e in h.equations {
        let e = primitive(&e);
        gens.push(e.iter().map(|x| -x).collect());
        gens.push(e);
    }
    gens.sort();
    gens.dedup();
    if gens.is_empty() {
        // the dual of the whole space is {0}
        gens.push(vec![Int::zero(); n]);
    }
    ConeRep::new(gens)
}

/// Normalised volume of `p` in the lattice `v0 + span_Z(basis)`, where `v0`
/// is a vertex of `p`. An elementary simplex has volume 1.
pub fn lattice_volume(p: &Polytope, basis: &[IntVec]) -> Result<Int> {
    lattice_volume_from(p, basis, 0)
}

/// Same as [`lattice_volume`], triangulating from a chosen apex vertex.
pub fn lattice_volume_from(p: &Polytope, basis: &[IntVec], apex: usize) -> Result<Int> {
    if !p.den.is_one() {
        return Err(Error::PointsOffLattice("polytope has non-integral vertices".into()));
    }
    let d = basis.len();
    let v0 = &p.vertices[0];
    let mut coords: Vec<IntVec> = Vec::with_capacity(p.vertices.len());
    for v in &p.vertices {
        let c = lattice::integer_coordinates(basis, &lattice::sub(v, v0))
            .ok_or_else(|| Error::PointsOffLattice(format!("{:?}", lattice::to_i64_vec(v))))?;
        coords.push(c);
    }
    if p.intrinsic_dim < d || d == 0 {
        return Ok(Int::zero());
    }
    let all: Vec<usize> = (0..coords.len()).collect();
    let mut total = Int::zero();
    for s in pulling(&coords, &all, apex) {
        let rows: Vec<IntVec> = s[1..].iter().map(|&i| lattice::sub(&coords[i], &coords[s[0]])).collect();
        total += IntMat::from_rows(&rows).det().abs();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{int, ivec};

    fn pts(v: &[&[i64]]) -> Vec<IntVec> {
        v.iter().map(|p| ivec(p)).collect()
    }

    #[test]
    fn interior_point_dropped() {
        let q = |a: i64, b: i64| Rat::new(int(a), int(b));
        let p = convex_hull_rational(&[
            vec![q(0, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1)],
            vec![q(0, 1), q(1, 1)],
            vec![q(1, 4), q(1, 4)],
        ])
        .unwrap();
        assert_eq!(p.vertices.len(), 3);
        assert!(p.contains_rational(&[q(1, 4), q(1, 4)]));
        assert!(!p.contains_rational(&[q(3, 4), q(1, 2)]));
    }

    #[test]
    fn square_faces() {
        let p = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])).unwrap();
        assert_eq!(p.faces(1).len(), 4);
        assert_eq!(p.faces(0).len(), 4);
        assert_eq!(p.faces(2).len(), 1);
    }

    #[test]
    fn simplex_face_counts() {
        for n in 1..=4usize {
            let mut v = vec![vec![0i64; n]];
            for i in 0..n {
                let mut e = vec![0i64; n];
                e[i] = 1;
                v.push(e);
            }
            let p = convex_hull(&v.iter().map(|x| ivec(x)).collect::<Vec<_>>()).unwrap();
            for k in 0..n {
                let expect = binom(n + 1, k + 1);
                assert_eq!(p.faces(k).len(), expect, "n={n} k={k}");
            }
        }
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn lower_dimensional_hull() {
        let p = convex_hull(&pts(&[&[1, 1, 1], &[2, 2, 2], &[3, 3, 3], &[1, 2, 3]])).unwrap();
        assert_eq!(p.intrinsic_dim, 2);
        assert_eq!(p.vertices.len(), 3);
        assert_eq!(p.facets().len(), 3);
        assert!(p.contains(&ivec(&[2, 2, 2])));
        assert!(!p.contains(&ivec(&[2, 2, 3])));
    }

    #[test]
    fn inner_normal_convention() {
        let p = convex_hull(&pts(&[&[0, 0], &[2, 0], &[0, 2]])).unwrap();
        for f in p.facets() {
            for (i, v) in p.vertices.iter().enumerate() {
                let val = dot(&f.normal, v);
                if f.vertex_subset.contains(&i) {
                    assert_eq!(val, f.offset);
                } else {
                    assert!(val > f.offset);
                }
            }
        }
    }

    #[test]
    fn volumes() {
        let p = convex_hull(&pts(&[&[0, 0], &[3, 0], &[0, 3]])).unwrap();
        let e = vec![ivec(&[1, 0]), ivec(&[0, 1])];
        assert_eq!(lattice_volume(&p, &e).unwrap(), int(9));
        let p = convex_hull(&pts(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])).unwrap();
        let e3 = vec![ivec(&[1, 0, 0]), ivec(&[0, 1, 0]), ivec(&[0, 0, 1])];
        assert_eq!(lattice_volume(&p, &e3).unwrap(), int(1));
        // segment 0..3v in the lattice Z v
        let p = convex_hull(&pts(&[&[0, 0, 0], &[2, 2, 1], &[6, 6, 3]])).unwrap();
        assert_eq!(lattice_volume(&p, &[ivec(&[2, 2, 1])]).unwrap(), int(3));
        assert!(matches!(
            lattice_volume(&p, &[ivec(&[4, 4, 2])]),
            Err(Error::PointsOffLattice(_))
        ));
    }

    #[test]
    fn orthant_is_self_dual() {
        let c = ConeRep::new(vec![ivec(&[1, 0, 0]), ivec(&[0, 1, 0]), ivec(&[0, 0, 1])]);
        let d = dual_cone(&c);
        let mut g = d.generators.clone();
        g.sort();
        let mut e = c.generators.clone();
        e.sort();
        assert_eq!(g, e);
        assert!(d.simplicial && d.unimodular);
    }

    #[test]
    fn dual_of_ray_is_half_space() {
        let c = ConeRep::new(vec![ivec(&[2, 2, 1])]);
        let d = dual_cone(&c);
        assert_eq!(d.dim(), 3);
        assert!(d.contains(&ivec(&[1, -1, 0])) && d.contains(&ivec(&[-1, 1, 0])));
        assert!(!d.contains(&ivec(&[-1, -1, 0])));
        let dd = dual_cone(&d);
        assert!(dd.contains(&ivec(&[4, 4, 2])));
        assert!(!dd.contains(&ivec(&[-2, -2, -1])));
        assert!(!dd.contains(&ivec(&[1, 0, 0])));
    }

    #[test]
    fn section_four_cone_normals() {
        let c = ConeRep::new(pts(&[&[3, 3, 4, 2], &[1, 3, 5, 2], &[3, 1, 4, 2], &[1, 1, 1, 1], &[4, 4, 10, 7]]));
        let d = dual_cone(&c);
        assert!(d.generators.contains(&ivec(&[-2, 0, -4, 11])));
        assert!(d.generators.contains(&ivec(&[2, -1, 1, -2])));
    }
}
