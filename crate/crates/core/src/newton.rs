//! Newton polytope of a polynomial, its bad faces at infinity, face
//! polynomials, and the volume bound on the number of atypical values.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::SparsePoly;
use crate::lattice::{self, dot, Int, IntVec};
use crate::polyhedra::{self, ser_int_vecs, ser_ints, ConeRep, Polytope};

#[derive(Clone, Debug)]
pub struct PolyProblem {
    pub n: usize,
    pub f: SparsePoly,
    /// User assertion, never checked.
    pub nondegenerate: bool,
}

impl PolyProblem {
    pub fn new(f: SparsePoly, nondegenerate: bool) -> Result<Self> {
        if !f.constant_term().is_zero() {
            return Err(Error::ConstantTermPresent);
        }
        if f.is_empty() {
            return Err(Error::Parse("polynomial has no terms".into()));
        }
        if !f.is_polynomial() {
            return Err(Error::Parse("negative exponent in input polynomial".into()));
        }
        Ok(PolyProblem { n: f.n(), f, nondegenerate })
    }
}

#[derive(Clone, Debug)]
pub struct NewtonData {
    pub support: Vec<IntVec>,
    /// Convex hull of the support.
    pub delta: Polytope,
    /// Convex hull of the support and the origin.
    pub gamma_minus: Polytope,
}

pub fn newton_data(f: &SparsePoly) -> Result<NewtonData> {
    if f.is_empty() {
        return Err(Error::Parse("polynomial has no terms".into()));
    }
    if !f.constant_term().is_zero() {
        return Err(Error::ConstantTermPresent);
    }
    let support = f.support();
    let delta = polyhedra::convex_hull(&support)?;
    if delta.intrinsic_dim < f.n() {
        return Err(Error::NotFullDimensional { dim: delta.intrinsic_dim, n: f.n() });
    }
    let mut with_origin = support.clone();
    with_origin.push(vec![Int::zero(); f.n()]);
    let gamma_minus = polyhedra::convex_hull(&with_origin)?;
    Ok(NewtonData { support, delta, gamma_minus })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BadFace {
    pub dim: usize,
    /// Codimension `k = n − dim`.
    pub codim: usize,
    #[serde(serialize_with = "ser_int_vecs")]
    pub vertices: Vec<IntVec>,
    /// Support points of `f` lying on the face.
    #[serde(serialize_with = "ser_int_vecs")]
    pub points: Vec<IntVec>,
    /// Inner normals of the facets of Δ(f) containing the face; all vanish on it.
    #[serde(serialize_with = "ser_int_vecs")]
    pub normals: Vec<IntVec>,
    /// Mixed-sign normal of a hyperplane through 0 cutting out the face.
    #[serde(serialize_with = "ser_ints")]
    pub witness: IntVec,
}

impl BadFace {
    pub fn contains_point(&self, v: &[Int]) -> bool {
        self.normals.iter().all(|a| dot(a, v).is_zero())
    }
}

fn mixed_sign(p: &[Int]) -> bool {
    p.iter().any(|x| x.is_negative()) && p.iter().any(|x| x.is_positive())
}

/// Every face satisfying the two defining conditions: its affine span
/// contains 0 and a hyperplane through 0 with a mixed-sign normal cuts it out.
pub fn literal_bad_faces(data: &NewtonData) -> Vec<BadFace> {
    let delta = &data.delta;
    let n = delta.ambient_dim;
    let mut out = Vec::new();
    for face in delta.all_faces() {
        if face.dim == 0 || face.dim >= n {
            continue;
        }
        let verts: Vec<IntVec> = face.vertex_subset.iter().map(|&i| delta.vertices[i].clone()).collect();
        if lattice::rank(&verts) != face.dim {
            continue;
        }
        let mut normals: Vec<IntVec> =
            delta.facets_containing(&face.vertex_subset).iter().map(|f| f.normal.clone()).collect();
        normals.sort();
        let Some(neg) = normals.iter().find(|a| a.iter().any(|x| x.is_negative())) else {
            continue;
        };
        let base = normals.iter().fold(vec![Int::zero(); n], |acc, a| lattice::add(&acc, a));
        let mut lambda = Int::from(1);
        let witness = loop {
            let p = lattice::add(&base, &lattice::scale(neg, &lambda));
            if mixed_sign(&p) {
                break lattice::primitive(&p);
            }
            lambda *= 2;
        };
        let mut points: Vec<IntVec> =
            data.support.iter().filter(|v| normals.iter().all(|a| dot(a, v).is_zero())).cloned().collect();
        points.sort();
        out.push(BadFace { dim: face.dim, codim: n - face.dim, vertices: verts, points, normals, witness });
    }
    out
}

/// A support point on the face that is not in the span of the remaining ones.
fn has_coloop(points: &[IntVec]) -> bool {
    let r = lattice::rank(points);
    (0..points.len()).any(|i| {
        let rest: Vec<IntVec> = points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p.clone()).collect();
        lattice::rank(&rest) < r
    })
}

/// Bad faces reported by the pipeline: literal bad faces whose support points
/// have no coloop, keeping only those maximal under inclusion.
pub fn bad_faces(data: &NewtonData) -> Vec<BadFace> {
    let candidates: Vec<BadFace> = literal_bad_faces(data).into_iter().filter(|b| !has_coloop(&b.points)).collect();
    let contained = |a: &BadFace, b: &BadFace| a.dim < b.dim && a.vertices.iter().all(|v| b.vertices.contains(v));
    candidates
        .iter()
        .filter(|a| !candidates.iter().any(|b| contained(a, b)))
        .cloned()
        .collect()
}

pub fn face_polynomial(f: &SparsePoly, face: &BadFace) -> SparsePoly {
    f.restrict(|e| {
        let v: IntVec = e.iter().map(|&x| Int::from(x)).collect();
        face.contains_point(&v)
    })
}

/// Cone spanned by the inner normals of the facets of Γ̃₋(f) that contain
/// the face together with the origin.
pub fn face_dual_cone(face: &BadFace, gamma_minus: &Polytope) -> ConeRep {
    let mut gens: Vec<IntVec> = gamma_minus
        .facets()
        .iter()
        .filter(|f| f.offset.is_zero() && face.vertices.iter().all(|v| dot(&f.normal, v).is_zero()))
        .map(|f| f.normal.clone())
        .collect();
    gens.sort();
    ConeRep::new(gens)
}

pub fn classify_relatively_simple(face: &BadFace, gamma_minus: &Polytope) -> bool {
    let c = face_dual_cone(face, gamma_minus);
    c.simplicial || c.dim() <= 3
}

/// Normalised volume of conv(γ ∪ {0}) in the lattice span(γ) ∩ ℤⁿ.
pub fn face_volume(face: &BadFace) -> Result<Int> {
    let n = face.vertices[0].len();
    let mut pts = face.vertices.clone();
    pts.push(vec![Int::zero(); n]);
    let hull = polyhedra::convex_hull(&pts)?;
    let basis = lattice::saturate(&face.vertices, n);
    polyhedra::lattice_volume(&hull, &basis)
}

pub fn volume_bound(faces: &[BadFace]) -> Result<Int> {
    let mut total = Int::from(1);
    for f in faces {
        total += face_volume(f)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ivec;

    fn ex52() -> SparsePoly {
        SparsePoly::from_i64(3, &[(-3, &[2, 2, 1]), (1, &[1, 0, 1]), (1, &[0, 1, 1]), (1, &[6, 6, 3])])
    }

    #[test]
    fn ray_face_of_the_four_term_example() {
        let data = newton_data(&ex52()).unwrap();
        let bad = bad_faces(&data);
        assert_eq!(bad.len(), 1);
        let b = &bad[0];
        assert_eq!(b.dim, 1);
        assert_eq!(b.points, vec![ivec(&[2, 2, 1]), ivec(&[6, 6, 3])]);
        assert!(mixed_sign(&b.witness));
        assert_eq!(face_polynomial(&ex52(), b), SparsePoly::from_i64(3, &[(-3, &[2, 2, 1]), (1, &[6, 6, 3])]));
        assert!(classify_relatively_simple(b, &data.gamma_minus));
        assert_eq!(volume_bound(&bad).unwrap(), Int::from(4));
    }

    #[test]
    fn golden_faces_and_bounds() {
        use crate::test_polys::*;
        let data = newton_data(&plane_face()).unwrap();
        assert!(data.delta.vertices.contains(&ivec(&[3, 1, 1])));
        let bad = bad_faces(&data);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].dim, 2);
        assert_eq!(lattice::rank(&[bad[0].points.clone(), vec![ivec(&[2, 2, 1]), ivec(&[1, 2, 1])]].concat()), 2);
        assert_eq!(volume_bound(&bad).unwrap(), Int::from(10));

        let data = newton_data(&five_var()).unwrap();
        let bad = bad_faces(&data);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].dim, 1);
        let cone = face_dual_cone(&bad[0], &data.gamma_minus);
        assert_eq!((cone.generators.len(), cone.dim()), (6, 4));
        assert!(!classify_relatively_simple(&bad[0], &data.gamma_minus));
        assert_eq!(volume_bound(&bad).unwrap(), Int::from(4));

        let data = newton_data(&triple_root()).unwrap();
        let bad = bad_faces(&data);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].points[0], ivec(&[2, 2, 1]));
        assert_eq!(volume_bound(&bad).unwrap(), Int::from(5));
    }

    #[test]
    fn single_monomial_is_not_full_dimensional() {
        let f = SparsePoly::from_i64(2, &[(1, &[1, 1])]);
        assert!(matches!(newton_data(&f), Err(Error::NotFullDimensional { dim: 0, n: 2 })));
    }

    #[test]
    fn shifted_simplex_has_no_bad_face() {
        let f = SparsePoly::from_i64(3, &[(1, &[2, 1, 1]), (1, &[1, 2, 1]), (1, &[1, 1, 2]), (1, &[3, 3, 3])]);
        let data = newton_data(&f).unwrap();
        assert!(literal_bad_faces(&data).is_empty());
        assert_eq!(volume_bound(&bad_faces(&data)).unwrap(), Int::from(1));
    }

    #[test]
    fn constant_term_rejected() {
        let f = SparsePoly::from_i64(1, &[(1, &[0]), (1, &[2])]);
        assert_eq!(PolyProblem::new(f, false).unwrap_err(), Error::ConstantTermPresent);
    }
}
