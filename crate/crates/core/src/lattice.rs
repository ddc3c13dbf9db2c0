//! Exact integer vectors and matrices: Hermite reduction, kernels,
//! saturation, unimodular completion and inversion.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type IntVec = Vec<BigInt>;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    BigInt::from(v)
}

pub fn ivec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn to_i64_vec(v: &[Int]) -> Vec<i64> {
    v.iter()
        .map(|x| x.to_i64().expect("integer entry exceeds i64"))
        .collect()
}

pub fn dot(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_i64(a: &[Int], b: &[i64]) -> Int {
    a.iter().zip(b).map(|(x, &y)| x * y).sum()
}

pub fn sub(a: &[Int], b: &[Int]) -> IntVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[Int], b: &[Int]) -> IntVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[Int], s: &Int) -> IntVec {
    a.iter().map(|x| x * s).collect()
}

pub fn is_zero(a: &[Int]) -> bool {
    a.iter().all(|x| x.is_zero())
}

pub fn content(a: &[Int]) -> Int {
    a.iter().fold(Int::zero(), |g, x| g.gcd(x))
}

/// Divides out the gcd of the entries; the zero vector is returned unchanged.
pub fn primitive(a: &[Int]) -> IntVec {
    let g = content(a);
    if g.is_zero() || g.is_one() {
        return a.to_vec();
    }
    a.iter().map(|x| x / &g).collect()
}

/// Dense integer matrix, row major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.row_vecs()).finish()
    }
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![Int::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_rows(rows: &[IntVec]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        IntMat { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(&rows.iter().map(|r| ivec(r)).collect::<Vec<_>>())
    }

    pub fn from_cols(cols: &[IntVec]) -> Self {
        Self::from_rows(cols).transpose()
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> IntVec {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> IntVec {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<IntVec> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn col_vecs(&self) -> Vec<IntVec> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn to_i64(&self) -> Vec<Vec<i64>> {
        self.row_vecs().iter().map(|r| to_i64_vec(r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * &other[(k, j)];
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[Int]) -> IntVec {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| &v[i] * &self[(i, j)]).sum())
            .collect()
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[Int]) -> IntVec {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self[(i, j)].is_one()
                    } else {
                        self[(i, j)].is_zero()
                    }
                })
            })
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Int {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut a = self.clone();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[(i, k)].is_zero()) else {
                    return Int::zero();
                };
                a.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * &a[(n - 1, n - 1)]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn col_combine(&mut self, p: usize, j: usize, m: [[Int; 2]; 2]) {
        // (col_p, col_j) <- (col_p, col_j) * m
        for i in 0..self.rows {
            let a = self[(i, p)].clone();
            let b = self[(i, j)].clone();
            self[(i, p)] = &a * &m[0][0] + &b * &m[1][0];
            self[(i, j)] = &a * &m[0][1] + &b * &m[1][1];
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -&self[(i, j)];
            self[(i, j)] = v;
        }
    }

    pub fn rank(&self) -> usize {
        rank(&self.row_vecs())
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = Int;
    fn index(&self, (i, j): (usize, usize)) -> &Int {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Int {
        &mut self.data[i * self.cols + j]
    }
}

/// Column-style Hermite reduction: returns `(h, u, pivots)` with `a * u = h`,
/// `u` unimodular and `h` in column echelon form. `pivots[r]` is the row of
/// the r-th pivot; columns past `pivots.len()` of `h` are zero.
pub fn column_hermite(a: &IntMat) -> (IntMat, IntMat, Vec<usize>) {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = a.clone();
    let mut u = IntMat::identity(n);
    let mut pivots = Vec::new();
    let mut p = 0;
    for i in 0..m {
        if p == n {
            break;
        }
        for j in p + 1..n {
            if h[(i, j)].is_zero() {
                continue;
            }
            let x = h[(i, p)].clone();
            let y = h[(i, j)].clone();
            let eg = x.extended_gcd(&y);
            let g = eg.gcd;
            let op = [[eg.x.clone(), -(&y / &g)], [eg.y.clone(), &x / &g]];
            h.col_combine(p, j, op.clone());
            u.col_combine(p, j, op);
        }
        if h[(i, p)].is_zero() {
            continue;
        }
        if h[(i, p)].is_negative() {
            h.negate_col(p);
            u.negate_col(p);
        }
        // reduce entries left of the pivot
        for q in 0..p {
            let f = h[(i, q)].div_floor(&h[(i, p)]);
            if !f.is_zero() {
                let op = [[Int::one(), Int::zero()], [-f, Int::one()]];
                h.col_combine(q, p, op.clone());
                u.col_combine(q, p, op);
            }
        }
        pivots.push(i);
        p += 1;
    }
    (h, u, pivots)
}

pub fn rank(vectors: &[IntVec]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    column_hermite(&IntMat::from_rows(vectors).transpose()).2.len()
}

/// Saturated integer basis of `{x : a x = 0}` (a given by rows).
pub fn kernel_basis(rows: &[IntVec], n: usize) -> Vec<IntVec> {
    if rows.is_empty() {
        return IntMat::identity(n).col_vecs();
    }
    let a = IntMat::from_rows(rows);
    let (_, u, piv) = column_hermite(&a);
    (piv.len()..n).map(|j| u.col(j)).collect()
}

/// Integer basis of `span(vectors) ∩ Z^n`.
pub fn saturate(vectors: &[IntVec], n: usize) -> Vec<IntVec> {
    let nonzero: Vec<IntVec> = vectors.iter().filter(|v| !is_zero(v)).cloned().collect();
    if nonzero.is_empty() {
        return Vec::new();
    }
    let perp = kernel_basis(&nonzero, n);
    kernel_basis(&perp, n)
}

/// Exact rational solve of `sum_i c_i basis_i = v`; `None` when `v` is outside the span.
pub fn coordinates(basis: &[IntVec], v: &[Int]) -> Option<Vec<Rat>> {
    let n = v.len();
    let k = basis.len();
    // Gaussian elimination on the augmented n x (k+1) system.
    let mut m: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rat> = basis.iter().map(|b| Rat::from_integer(b[i].clone())).collect();
            row.push(Rat::from_integer(v[i].clone()));
            row
        })
        .collect();
    let mut piv_cols = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..n).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..=k {
                    let t = &m[r][j] * &f;
                    m[i][j] -= t;
                }
            }
        }
        piv_cols.push(c);
        r += 1;
    }
    if (r..n).any(|i| !m[i][k].is_zero()) {
        return None;
    }
    let mut out = vec![Rat::zero(); k];
    for (row, &c) in piv_cols.iter().enumerate() {
        out[c] = m[row][k].clone();
    }
    Some(out)
}

/// Integer coordinates of `v` in a lattice basis, if they exist.
pub fn integer_coordinates(basis: &[IntVec], v: &[Int]) -> Option<IntVec> {
    let c = coordinates(basis, v)?;
    if c.iter().all(|x| x.is_integer()) {
        Some(c.into_iter().map(|x| x.to_integer()).collect())
    } else {
        None
    }
}

/// Extends `partial` (k primitive rows in Z^n) to an n x n integer matrix
/// with |det| = 1 whose first k rows are the inputs. The determinant is
/// normalised to +1 by flipping the last row when k < n.
///
/// With `positive`, completions whose inverse has strictly positive
/// columns k+1..n are searched for first (bounded search); the plain
/// completion is returned when none is found.
pub fn unimodular_complete(partial: &[IntVec], n: usize, positive: bool) -> Result<IntMat> {
    let k = partial.len();
    if k > n || partial.iter().any(|v| v.len() != n) {
        return Err(Error::NotExtendable("dimension mismatch".into()));
    }
    if k == 0 {
        return Ok(IntMat::identity(n));
    }
    let a = IntMat::from_rows(partial);
    let (h, u, piv) = column_hermite(&a);
    if piv.len() != k {
        return Err(Error::NotExtendable("vectors are linearly dependent".into()));
    }
    // invariant factors are all 1 iff the k x k pivot block is unimodular
    let block_det: Int = (0..k).map(|i| h[(i, i)].clone()).product();
    if !block_det.abs().is_one() {
        return Err(Error::NotExtendable(format!(
            "sublattice has index {} in its saturation",
            block_det.abs()
        )));
    }
    let v = invert_unimodular(&u)?;
    let mut rows: Vec<IntVec> = partial.to_vec();
    rows.extend((k..n).map(|i| v.row(i)));
    let mut t = IntMat::from_rows(&rows);
    if positive && k < n {
        if let Some(better) = positive_completion(&t, k) {
            t = better;
        }
    }
    if t.det().is_negative() && k < n {
        for j in 0..n {
            let x = -&t[(n - 1, j)];
            t[(n - 1, j)] = x;
        }
    }
    Ok(t)
}

/// Looks for a change of complement making columns k+1..n of the inverse
/// strictly positive. Those columns span the lattice orthogonal to the first
/// k rows; any basis of that lattice is reachable.
fn positive_completion(t: &IntMat, k: usize) -> Option<IntMat> {
    let n = t.nrows();
    let inv = invert_unimodular(t).ok()?;
    let base: Vec<IntVec> = (k..n).map(|j| inv.col(j)).collect();
    let d = n - k;
    let radius = if d <= 2 { 4 } else { 2 };
    let mut positives: Vec<(IntVec, IntVec)> = Vec::new();
    let mut coeffs = vec![-radius; d];
    loop {
        let v: IntVec = (0..n)
            .map(|i| (0..d).map(|l| &base[l][i] * coeffs[l]).sum())
            .collect();
        if v.iter().all(|x| x.is_positive()) {
            positives.push((ivec(&coeffs), v));
        }
        let mut idx = 0;
        loop {
            if idx == d {
                break;
            }
            coeffs[idx] += 1;
            if coeffs[idx] > radius {
                coeffs[idx] = -radius;
                idx += 1;
            } else {
                break;
            }
        }
        if idx == d {
            break;
        }
    }
    positives.sort_by(|a, b| {
        let ka: Int = a.1.iter().map(|x| x.abs()).sum();
        let kb: Int = b.1.iter().map(|x| x.abs()).sum();
        ka.cmp(&kb).then_with(|| a.1.cmp(&b.1))
    });
    positives.truncate(24);
    let mut budget = 20_000usize;
    let mut chosen = Vec::new();
    if pick_basis(&positives, d, 0, &mut chosen, &mut budget) {
        // new dual basis m''_j = sum_l P_jl base_l; complement rows become P^{-T} applied
        let p = IntMat::from_rows(&chosen.iter().map(|&i| positives[i].0.clone()).collect::<Vec<_>>());
        let p_inv_t = invert_unimodular(&p).ok()?.transpose();
        let old: Vec<IntVec> = (k..n).map(|i| t.row(i)).collect();
        let mut rows: Vec<IntVec> = (0..k).map(|i| t.row(i)).collect();
        for j in 0..d {
            let r: IntVec = (0..n)
                .map(|c| (0..d).map(|l| &p_inv_t[(j, l)] * &old[l][c]).sum())
                .collect();
            rows.push(r);
        }
        return Some(IntMat::from_rows(&rows));
    }
    None
}

fn pick_basis(
    cands: &[(IntVec, IntVec)],
    d: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    budget: &mut usize,
) -> bool {
    if chosen.len() == d {
        let m = IntMat::from_rows(&chosen.iter().map(|&i| cands[i].0.clone()).collect::<Vec<_>>());
        return m.det().abs().is_one();
    }
    for i in start..cands.len() {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        chosen.push(i);
        if pick_basis(cands, d, i + 1, chosen, budget) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Exact inverse of a unimodular integer matrix.
pub fn invert_unimodular(w: &IntMat) -> Result<IntMat> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::NotUnimodular("matrix is not square".into()));
    }
    let d = w.det();
    if !d.abs().is_one() {
        return Err(Error::NotUnimodular(format!("determinant is {d}")));
    }
    let (_, u, _) = column_hermite(w);
    // w u = h lower triangular with unit diagonal; invert h by forward substitution
    let h = w.mul(&u);
    let mut hinv = IntMat::zeros(n, n);
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c { Int::one() } else { Int::zero() };
            for j in 0..i {
                s -= &h[(i, j)] * &hinv[(j, c)];
            }
            hinv[(i, c)] = s / &h[(i, i)];
        }
    }
    let m = u.mul(&hinv);
    debug_assert!(w.mul(&m).is_identity());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMat {
        IntMat::from_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn determinant_small() {
        assert_eq!(m(&[&[2, 1, 1], &[2, 2, 1], &[1, 2, 1]]).det(), int(1));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), int(-1));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), int(0));
        assert_eq!(m(&[&[0, 0, 1], &[0, 2, 0], &[3, 0, 0]]).det(), int(-6));
    }

    #[test]
    fn inverse_of_example_charts() {
        let w = m(&[&[0, 1, -1], &[-1, 1, 0], &[2, -3, 2]]);
        assert_eq!(invert_unimodular(&w).unwrap(), m(&[&[2, 1, 1], &[2, 2, 1], &[1, 2, 1]]));
        let w = m(&[&[1, 0, 1], &[-2, -1, -1], &[2, 2, 1]]);
        assert_eq!(invert_unimodular(&w).unwrap(), m(&[&[-1, -2, -1], &[0, 1, 1], &[2, 2, 1]]));
        assert!(invert_unimodular(&IntMat::identity(4)).unwrap().is_identity());
        assert!(matches!(invert_unimodular(&m(&[&[2, 0], &[0, 1]])), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn completion_of_coordinate_vector() {
        let t = unimodular_complete(&[ivec(&[1, 0, 0])], 3, false).unwrap();
        assert!(t.is_identity());
    }

    #[test]
    fn completion_of_two_normals() {
        let t = unimodular_complete(&[ivec(&[1, -2, 2]), ivec(&[-2, 1, 2])], 3, false);
        // these two span an index-3 sublattice
        assert!(matches!(t, Err(Error::NotExtendable(_))));
        let t = unimodular_complete(&[ivec(&[1, -2, 2]), ivec(&[0, -1, 2])], 3, false).unwrap();
        assert_eq!(t.det(), int(1));
        assert_eq!(t.row(0), ivec(&[1, -2, 2]));
        assert_eq!(t.row(1), ivec(&[0, -1, 2]));
    }

    #[test]
    fn positive_completion_found() {
        let t = unimodular_complete(&[ivec(&[1, -2, 2])], 3, true).unwrap();
        assert_eq!(t.det(), int(1));
        let inv = invert_unimodular(&t).unwrap();
        for j in 1..3 {
            assert!(inv.col(j).iter().all(|x| x.is_positive()), "{inv:?}");
        }
    }

    #[test]
    fn kernel_and_saturation() {
        let k = kernel_basis(&[ivec(&[2, 2, 1])], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(dot(v, &ivec(&[2, 2, 1])).is_zero());
        }
        let s = saturate(&[ivec(&[2, 4, 6])], 3);
        assert_eq!(s.len(), 1);
        assert_eq!(primitive(&s[0]).iter().map(|x| x.abs()).collect::<Vec<_>>(), ivec(&[1, 2, 3]));
        assert_eq!(integer_coordinates(&s, &ivec(&[3, 6, 9])).map(|c| c[0].abs()), Some(int(3)));
        assert_eq!(integer_coordinates(&s, &ivec(&[1, 1, 1])), None);
    }

    #[test]
    fn rank_counts() {
        assert_eq!(rank(&[ivec(&[1, 2]), ivec(&[2, 4])]), 1);
        assert_eq!(rank(&[ivec(&[1, 2, 0]), ivec(&[0, 0, 1]), ivec(&[1, 2, 1])]), 2);
    }
}
