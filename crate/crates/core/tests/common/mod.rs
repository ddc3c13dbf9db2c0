//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use acv_core::chart::{chart_from_matrix, Chart, ChartSource};
use acv_core::io::{parse_problem, ProblemSpec};
use acv_core::laurent::SparsePoly;
use acv_core::lattice::{self, IntMat, IntVec};
use acv_core::mp::Cx;
use acv_core::newton::{bad_faces, newton_data};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN: [&str; 4] = ["ray_face", "plane_face", "five_var", "triple_root"];
pub const PREC: usize = 256;

pub fn golden(name: &str) -> ProblemSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(format!("{name}.toml"));
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn golden_chart(spec: &ProblemSpec) -> (SparsePoly, Chart) {
    let f = spec.polynomial();
    let data = newton_data(&f).unwrap();
    let face = bad_faces(&data).remove(0);
    let chart = chart_from_matrix(&spec.charts[0].w, &face, &data, ChartSource::User).unwrap();
    (f, chart)
}

pub fn random_torus_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Cx> {
    (0..n)
        .map(|_| {
            let r: f64 = rng.gen_range(0.5..2.0);
            let a: f64 = rng.gen_range(-3.0..3.0);
            Cx::from_c64(Complex64::from_polar(r, a), PREC)
        })
        .collect()
}

pub fn rel_gap(a: &Cx, b: &Cx) -> f64 {
    let d = (a - b).ln_abs();
    if d == f64::NEG_INFINITY {
        return 0.0;
    }
    (d - a.ln_abs().max(b.ln_abs())).exp()
}

/// `x = u^W`, row by row.
pub fn monomial_map(w: &IntMat, u: &[Cx]) -> Vec<Cx> {
    w.to_i64()
        .iter()
        .map(|row| row.iter().zip(u).fold(Cx::one(PREC), |acc, (&e, z)| &acc * &z.powi(e)))
        .collect()
}

/// Identity modified by a sequence of elementary row operations.
pub fn elementary_product(n: usize, ops: &[(usize, usize, i64, bool)]) -> IntMat {
    let mut rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for &(a, b, m, swap) in ops {
        let (a, b) = (a % n, b % n);
        if a == b {
            continue;
        }
        if swap {
            rows.swap(a, b);
        } else {
            for c in 0..n {
                rows[a][c] += m * rows[b][c];
            }
        }
    }
    IntMat::from_i64(&rows)
}

/// Facets by brute force: hyperplanes through `dim` affinely independent
/// points with every point on one side. Returns primitive inner normals.
pub fn brute_force_facets(points: &[IntVec], dim: usize) -> BTreeSet<(IntVec, BigInt)> {
    let mut out = BTreeSet::new();
    let m = points.len();
    let mut idx: Vec<usize> = (0..dim).collect();
    if m < dim {
        return out;
    }
    loop {
        let base = &points[idx[0]];
        let diffs: Vec<IntVec> = idx[1..].iter().map(|&i| lattice::sub(&points[i], base)).collect();
        if lattice::rank(&diffs) == dim - 1 {
            let ker = lattice::kernel_basis(&diffs, dim);
            if ker.len() == 1 {
                let a = lattice::primitive(&ker[0]);
                let c = lattice::dot(&a, base);
                let signs: Vec<BigInt> = points.iter().map(|p| lattice::dot(&a, p) - &c).collect();
                if signs.iter().all(|s| !s.is_negative()) {
                    out.insert((a, c));
                } else if signs.iter().all(|s| !s.is_positive()) {
                    let neg: IntVec = a.iter().map(|x| -x).collect();
                    out.insert((neg, -c));
                }
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - dim + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..dim {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn shoelace_twice(pts: &[IntVec]) -> BigInt {
    let xy: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| (lattice::to_i64_vec(p)[0] as f64, lattice::to_i64_vec(p)[1] as f64))
        .collect();
    let (cx, cy) = xy.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (cx, cy) = (cx / xy.len() as f64, cy / xy.len() as f64);
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = (xy[a].1 - cy).atan2(xy[a].0 - cx);
        let tb = (xy[b].1 - cy).atan2(xy[b].0 - cx);
        ta.total_cmp(&tb)
    });
    let mut s = BigInt::zero();
    for w in 0..order.len() {
        let p = &pts[order[w]];
        let q = &pts[order[(w + 1) % order.len()]];
        s += &p[0] * &q[1] - &p[1] * &q[0];
    }
    s.abs()
}
