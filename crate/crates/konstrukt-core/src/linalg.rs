//! Dense exact-rational matrices, row reduction, and canonical subspaces.
//!
//! Everything here works over `Q` with no rounding; subspaces are kept in
//! reduced row echelon form so that structural equality is decidable.

use crate::rat::{q_from_str, q_to_string, Q};
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Row-major rational matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| q_to_string(self.at(r, c))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| q_to_string(self.at(r, c))).collect())
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(de)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(D::Error::custom("ragged matrix rows"));
            }
            for (j, s) in row.iter().enumerate() {
                *m.at_mut(i, j) = q_from_str(s).map_err(D::Error::custom)?;
            }
        }
        Ok(m)
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Q::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Q) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                *m.at_mut(r, c) = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &Q {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Q {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> Vec<Q> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn col(&self, c: usize) -> Vec<Q> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols, "apply: dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc = Q::zero();
                for c in 0..self.cols {
                    if !self.at(r, c).is_zero() && !v[c].is_zero() {
                        acc += self.at(r, c) * &v[c];
                    }
                }
                acc
            })
            .collect()
    }

    /// Kronecker product, with the second factor index running fastest.
    pub fn kronecker(&self, other: &Mat) -> Mat {
        let mut m = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                if self.at(r1, c1).is_zero() {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        *m.at_mut(r1 * other.rows + r2, c1 * other.cols + c2) =
                            self.at(r1, c1) * other.at(r2, c2);
                    }
                }
            }
        }
        m
    }

    /// Block-diagonal sum.
    pub fn block_diag(&self, other: &Mat) -> Mat {
        let mut m = Mat::zeros(self.rows + other.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *m.at_mut(r, c) = self.at(r, c).clone();
            }
        }
        for r in 0..other.rows {
            for c in 0..other.cols {
                *m.at_mut(self.rows + r, self.cols + c) = other.at(r, c).clone();
            }
        }
        m
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols { self.at(r, c).clone() } else { other.at(r, c - self.cols).clone() }
        })
    }

    /// Vertical concatenation.
    pub fn vcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        Mat::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows { self.at(r, c).clone() } else { other.at(r - self.rows, c).clone() }
        })
    }

    /// In-place Gauss-Jordan elimination; returns the pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut lead = 0usize;
        for col in 0..self.cols {
            if lead >= self.rows {
                break;
            }
            let Some(pr) = (lead..self.rows).find(|&r| !self.at(r, col).is_zero()) else {
                continue;
            };
            self.data.swap_chunks(pr, lead, self.cols);
            let inv = self.at(lead, col).clone();
            for c in col..self.cols {
                let v = self.at(lead, c) / &inv;
                *self.at_mut(lead, c) = v;
            }
            for r in 0..self.rows {
                if r != lead && !self.at(r, col).is_zero() {
                    let factor = self.at(r, col).clone();
                    for c in col..self.cols {
                        let v = self.at(r, c) - &factor * self.at(lead, c);
                        *self.at_mut(r, c) = v;
                    }
                }
            }
            pivots.push(col);
            lead += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place().len()
    }

    /// A basis of the null space (rows of the result are basis vectors).
    pub fn nullspace(&self) -> Mat {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Mat::zeros(free.len(), self.cols);
        for (bi, &fc) in free.iter().enumerate() {
            *basis.at_mut(bi, fc) = Q::one();
            for (pi, &pc) in pivots.iter().enumerate() {
                *basis.at_mut(bi, pc) = -m.at(pi, fc).clone();
            }
        }
        basis
    }

    /// Solves `self * x = b`; `None` if inconsistent. Returns the canonical
    /// solution with free variables set to zero.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Mat::from_fn(self.rows, self.cols + 1, |r, c| {
            if c < self.cols { self.at(r, c).clone() } else { b[r].clone() }
        });
        let pivots = aug.rref_in_place();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        for (pi, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.at(pi, self.cols).clone();
        }
        Some(x)
    }

    pub fn mul_scalar(&self, s: &Q) -> Mat {
        Mat::from_fn(self.rows, self.cols, |r, c| self.at(r, c) * s)
    }

    /// Inverse of a square invertible matrix; `None` if singular.
    pub fn inverse(&self) -> Option<Mat> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = self.hcat(&Mat::identity(n));
        let pivots = aug.rref_in_place();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return None;
        }
        Some(Mat::from_fn(n, n, |r, c| aug.at(r, n + c).clone()))
    }
}

trait SwapChunks {
    fn swap_chunks(&mut self, a: usize, b: usize, width: usize);
}

impl SwapChunks for Vec<Q> {
    fn swap_chunks(&mut self, a: usize, b: usize, width: usize) {
        if a == b {
            return;
        }
        for i in 0..width {
            self.swap(a * width + i, b * width + i);
        }
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |r, c| self.at(r, c) + rhs.at(r, c))
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |r, c| self.at(r, c) - rhs.at(r, c))
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |r, c| -self.at(r, c).clone())
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul: dimension mismatch");
        let mut m = Mat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.at(r, k).is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    if !rhs.at(k, c).is_zero() {
                        let v = self.at(r, k) * rhs.at(k, c) + m.at(r, c);
                        *m.at_mut(r, c) = v;
                    }
                }
            }
        }
        m
    }
}

/// A linear subspace of `Q^ambient`, stored as an RREF basis (rows).
///
/// The RREF form is canonical, so `==` decides equality of subspaces.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace {
    ambient: usize,
    basis: Mat,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} of Q^{}) {:?}", self.dim(), self.ambient, self.basis)
    }
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Mat::zeros(0, ambient) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: Mat::identity(ambient) }
    }

    /// Span of the rows of `gens`.
    pub fn span(ambient: usize, gens: &Mat) -> Self {
        assert_eq!(gens.cols(), ambient);
        let mut m = gens.clone();
        let pivots = m.rref_in_place();
        let basis = Mat::from_fn(pivots.len(), ambient, |r, c| m.at(r, c).clone());
        Subspace { ambient, basis }
    }

    pub fn span_vecs(ambient: usize, gens: &[Vec<Q>]) -> Self {
        if gens.is_empty() {
            return Self::zero(ambient);
        }
        Self::span(ambient, &Mat::from_rows(gens.to_vec()))
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn basis_vecs(&self) -> Vec<Vec<Q>> {
        (0..self.dim()).map(|r| self.basis.row(r)).collect()
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.ambient);
        let mut w = v.to_vec();
        // Reduce against the RREF basis.
        for r in 0..self.dim() {
            let pc = (0..self.ambient).find(|&c| !self.basis.at(r, c).is_zero()).unwrap();
            if !w[pc].is_zero() {
                let factor = w[pc].clone();
                for c in 0..self.ambient {
                    let v = &w[c] - &factor * self.basis.at(r, c);
                    w[c] = v;
                }
            }
        }
        w.iter().all(|x| x.is_zero())
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|r| self.contains(&other.basis.row(r)))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        Subspace::span(self.ambient, &self.basis.vcat(&other.basis))
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        // Zassenhaus-free approach: x in both spans. Solve for coefficient
        // vectors a with a·B1 = b·B2 via the nullspace of [B1^T | -B2^T].
        let b1t = self.basis.transpose();
        let b2t = other.basis.transpose();
        let sys = b1t.hcat(&b2t.mul_scalar(&-Q::one()));
        let null = sys.nullspace();
        let mut gens = Vec::new();
        for r in 0..null.rows() {
            let coeffs = &null.row(r)[0..self.dim()];
            let mut v = vec![Q::zero(); self.ambient];
            for (i, a) in coeffs.iter().enumerate() {
                for c in 0..self.ambient {
                    let t = &v[c] + a * self.basis.at(i, c);
                    v[c] = t;
                }
            }
            gens.push(v);
        }
        Subspace::span_vecs(self.ambient, &gens)
    }

    /// The annihilator `{f in (Q^n)^* | f(self) = 0}` in dual coordinates.
    pub fn annihilator(&self) -> Subspace {
        Subspace::span(self.ambient, &self.basis.nullspace())
    }

    /// Image of this subspace under a linear map given by `m` (columns =
    /// ambient coordinates).
    pub fn image_under(&self, m: &Mat) -> Subspace {
        let gens: Vec<Vec<Q>> = (0..self.dim()).map(|r| m.apply(&self.basis.row(r))).collect();
        Subspace::span_vecs(m.rows(), &gens)
    }

    /// Preimage under the map `m: Q^k -> Q^ambient`.
    pub fn preimage_under(&self, m: &Mat) -> Subspace {
        assert_eq!(m.rows(), self.ambient);
        // x with m x in self  <=>  Ann(self) . (m x) = 0.
        let ann = self.annihilator();
        if ann.dim() == 0 {
            return Subspace::full(m.cols());
        }
        let sys = ann.basis() * m;
        Subspace::span(m.cols(), &sys.nullspace())
    }

    /// Pivot columns of the RREF basis.
    pub fn pivot_cols(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|r| (0..self.ambient).find(|&c| !self.basis.at(r, c).is_zero()).unwrap())
            .collect()
    }

    /// Coordinates of `v` in terms of the RREF basis; `None` if not a member.
    pub fn coords_of(&self, v: &[Q]) -> Option<Vec<Q>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivot_cols().iter().map(|&c| v[c].clone()).collect())
    }
}

/// Canonical quotient `Q^ambient / divisor`: coordinates are the non-pivot
/// columns of the divisor's RREF basis (lexicographically earliest pivots).
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    pub ambient: usize,
    pub divisor: Subspace,
    free_cols: Vec<usize>,
}

impl QuotientSpace {
    pub fn new(divisor: Subspace) -> Self {
        let pivots = divisor.pivot_cols();
        let free_cols =
            (0..divisor.ambient()).filter(|c| !pivots.contains(c)).collect::<Vec<_>>();
        QuotientSpace { ambient: divisor.ambient(), divisor, free_cols }
    }

    pub fn dim(&self) -> usize {
        self.free_cols.len()
    }

    /// Class of an ambient vector in quotient coordinates.
    pub fn project(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.ambient);
        let mut w = v.to_vec();
        let basis = self.divisor.basis();
        for (r, &pc) in self.divisor.pivot_cols().iter().enumerate() {
            if !w[pc].is_zero() {
                let factor = w[pc].clone();
                for c in 0..self.ambient {
                    let t = &w[c] - &factor * basis.at(r, c);
                    w[c] = t;
                }
            }
        }
        self.free_cols.iter().map(|&c| w[c].clone()).collect()
    }

    /// Canonical section: quotient coordinates back to a representative.
    pub fn section(&self, q: &[Q]) -> Vec<Q> {
        assert_eq!(q.len(), self.dim());
        let mut v = vec![Q::zero(); self.ambient];
        for (i, &c) in self.free_cols.iter().enumerate() {
            v[c] = q[i].clone();
        }
        v
    }

    /// Matrix of the projection `Q^ambient -> Q^{dim}`.
    pub fn projection_matrix(&self) -> Mat {
        Mat::from_fn(self.dim(), self.ambient, |r, c| {
            let mut e = vec![Q::zero(); self.ambient];
            e[c] = Q::one();
            self.project(&e)[r].clone()
        })
    }

    /// Matrix of the canonical section `Q^{dim} -> Q^ambient`.
    pub fn section_matrix(&self) -> Mat {
        let mut m = Mat::zeros(self.ambient, self.dim());
        for (i, &c) in self.free_cols.iter().enumerate() {
            *m.at_mut(c, i) = Q::one();
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qi;

    fn m(rows: &[&[i64]]) -> Mat {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect())
    }

    #[test]
    fn rref_rank_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 1, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.rows(), 1);
        for r in 0..ns.rows() {
            assert!(a.apply(&ns.row(r)).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_and_inverse() {
        let a = m(&[&[2, 0], &[1, 1]]);
        let x = a.solve(&[qi(4), qi(5)]).unwrap();
        assert_eq!(x, vec![qi(2), qi(3)]);
        let inv = a.inverse().unwrap();
        assert_eq!(&(&a * &inv), &Mat::identity(2));
        let sing = m(&[&[1, 2], &[2, 4]]);
        assert!(sing.inverse().is_none());
        assert!(sing.solve(&[qi(1), qi(0)]).is_none());
    }

    #[test]
    fn subspace_ops() {
        let u = Subspace::span(3, &m(&[&[1, 0, 1], &[0, 1, 1]]));
        let v = Subspace::span(3, &m(&[&[1, 1, 2]]));
        assert!(u.contains(&[qi(1), qi(1), qi(2)]));
        assert!(u.contains_subspace(&v));
        let w = Subspace::span(3, &m(&[&[0, 0, 1]]));
        assert_eq!(u.intersect(&w).dim(), 0);
        assert_eq!(u.sum(&w).dim(), 3);
        let ann = u.annihilator();
        assert_eq!(ann.dim(), 1);
        assert!(ann.contains(&[qi(1), qi(1), qi(-1)]));
    }

    #[test]
    fn quotient_roundtrip() {
        let div = Subspace::span(3, &m(&[&[1, 1, 0]]));
        let q = QuotientSpace::new(div);
        assert_eq!(q.dim(), 2);
        let class = q.project(&[qi(3), qi(1), qi(2)]);
        // [3,1,2] = 3*(1,1,0) + (0,-2,2); free cols are 1,2.
        assert_eq!(class, vec![qi(-2), qi(2)]);
        let rep = q.section(&class);
        assert_eq!(q.project(&rep), class);
        let p = q.projection_matrix();
        let s = q.section_matrix();
        assert_eq!(&(&p * &s), &Mat::identity(2));
    }

    #[test]
    fn kronecker_shape() {
        let a = m(&[&[1, 2]]);
        let b = m(&[&[3], &[4]]);
        let k = a.kronecker(&b);
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert_eq!(*k.at(0, 0), qi(3));
        assert_eq!(*k.at(1, 1), qi(8));
    }
}
