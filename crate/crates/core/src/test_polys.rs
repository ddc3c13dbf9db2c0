//! Polynomials shared by unit tests.

use crate::laurent::SparsePoly;
use crate::lattice::{IntMat, Rat};

fn m(e: &[i64]) -> SparsePoly {
    SparsePoly::monomial(e.to_vec(), Rat::from_integer(1.into()))
}

fn c(n: usize, v: i64) -> SparsePoly {
    SparsePoly::monomial(vec![0; n], Rat::from_integer(v.into()))
}

/// Non-isolated critical locus on a two-dimensional face.
pub fn plane_face() -> SparsePoly {
    let y = m(&[2, 2, 1]).sub(&m(&[1, 2, 1])).add(&c(3, 1));
    y.pow(2).add(&y.pow(3)).add(&m(&[2, 1, 1])).add(&m(&[3, 1, 1])).sub(&c(3, 2))
}

pub fn plane_face_chart() -> IntMat {
    IntMat::from_i64(&[vec![0, 1, -1], vec![-1, 1, 0], vec![2, -3, 2]])
}

/// Four terms with a one-dimensional bad face on the ray through (2,2,1).
pub fn ray_face() -> SparsePoly {
    SparsePoly::from_i64(3, &[(-3, &[2, 2, 1]), (1, &[1, 0, 1]), (1, &[0, 1, 1]), (1, &[6, 6, 3])])
}

pub fn ray_face_chart() -> IntMat {
    IntMat::from_i64(&[vec![1, 0, 1], vec![-2, -1, -1], vec![2, 2, 1]])
}

/// Five variables, bad face on a ray with a non-simplicial dual cone.
pub fn five_var() -> SparsePoly {
    let v0 = [1, 2, 3, 1, 1];
    let bars = [[3, 3, 4, 2], [1, 3, 5, 2], [3, 1, 4, 2], [1, 1, 1, 1], [4, 4, 10, 7]];
    let mut f = SparsePoly::from_i64(5, &[(-3, &v0), (1, &[3, 6, 9, 3, 3])]);
    for b in bars {
        let e: Vec<i64> = (0..5).map(|i| v0[i] + if i < 4 { b[i] } else { 0 }).collect();
        f = f.add(&m(&e));
    }
    f
}

pub fn five_var_chart() -> IntMat {
    IntMat::from_i64(&[
        vec![-1, 1, -2, 2, 1],
        vec![-1, -1, 0, -1, 1],
        vec![-1, 0, -4, 1, -1],
        vec![5, 1, 11, -2, 1],
        vec![1, 0, 3, -1, 0],
    ])
}

/// (y−1)³(y−2) − 2 + three monomials, with y = x^(2,2,1).
pub fn triple_root() -> SparsePoly {
    let y = m(&[2, 2, 1]);
    let one = c(3, 1);
    let f = y.sub(&one).pow(3).mul(&y.sub(&c(3, 2))).sub(&c(3, 2));
    f.add(&m(&[0, 1, 1])).add(&m(&[1, 0, 1])).add(&m(&[1, 1, 3]))
}

pub fn triple_root_chart() -> IntMat {
    IntMat::from_i64(&[vec![-1, 0, 1], vec![0, -1, -1], vec![2, 2, 1]])
}
