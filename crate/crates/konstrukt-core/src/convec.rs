//! Constraint vector spaces over Q: triples `E_0 <= E_N -> E_T` with the
//! two tensor products, duals, internal hom, kernels/cokernels/quotients,
//! the embedding reflector and reduction.

use crate::linalg::{Mat, QuotientSpace, Subspace};
use crate::rat::Q;
use crate::KError;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// A constraint Q-vector space in coordinates: `iota: Q^dim_n -> Q^dim_t`
/// with a distinguished subspace of the N-component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConVect {
    #[serde(rename = "dimT")]
    pub dim_t: usize,
    #[serde(rename = "dimN")]
    pub dim_n: usize,
    pub iota: Mat,
    pub zero: Subspace,
}

impl ConVect {
    pub fn new(dim_t: usize, dim_n: usize, iota: Mat, zero: Subspace) -> Result<Self, KError> {
        if iota.rows() != dim_t || iota.cols() != dim_n {
            return Err(KError::ShapeMismatch(format!(
                "iota must be {dim_t}x{dim_n}, got {}x{}",
                iota.rows(),
                iota.cols()
            )));
        }
        if zero.ambient() != dim_n {
            return Err(KError::ShapeMismatch("zero part lives in the wrong space".into()));
        }
        Ok(ConVect { dim_t, dim_n, iota, zero })
    }

    /// Standard space `(Q^t, Q^n, Q^z)` with coordinate inclusions.
    pub fn standard(t: usize, n: usize, z: usize) -> Self {
        assert!(z <= n && n <= t);
        let iota = Mat::from_fn(t, n, |r, c| if r == c { Q::one() } else { Q::zero() });
        let zero = Subspace::span(
            n,
            &Mat::from_fn(z, n, |r, c| if r == c { Q::one() } else { Q::zero() }),
        );
        ConVect { dim_t: t, dim_n: n, iota, zero }
    }

    /// The monoidal unit `(Q, Q, 0)`.
    pub fn unit() -> Self {
        Self::standard(1, 1, 0)
    }

    pub fn zero_space() -> Self {
        ConVect { dim_t: 0, dim_n: 0, iota: Mat::zeros(0, 0), zero: Subspace::zero(0) }
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        (self.dim_t, self.dim_n, self.zero.dim())
    }

    pub fn is_embedded(&self) -> bool {
        self.iota.rank() == self.dim_n
    }

    /// The image `iota(E_0)` inside the T-component.
    pub fn zero_in_t(&self) -> Subspace {
        self.zero.image_under(&self.iota)
    }

    /// The image `iota(E_N)` inside the T-component.
    pub fn n_in_t(&self) -> Subspace {
        Subspace::full(self.dim_n).image_under(&self.iota)
    }

    /// A constraint basis: a basis of `Q^dim_n` starting with a basis of
    /// E_0, together with a basis of `Q^dim_t` extending the iota-image of
    /// the former (embedded case). Returns `(basis_n, basis_t)`.
    pub fn constraint_basis(&self) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
        let mut rows_n: Vec<Vec<Q>> = self.zero.basis_vecs();
        for i in 0..self.dim_n {
            let mut e = vec![Q::zero(); self.dim_n];
            e[i] = Q::one();
            if !Subspace::span_vecs(self.dim_n, &rows_n).contains(&e) {
                rows_n.push(e);
            }
        }
        let mut rows_t: Vec<Vec<Q>> = Vec::new();
        for v in &rows_n {
            let img = self.iota.apply(v);
            if !Subspace::span_vecs(self.dim_t, &rows_t).contains(&img) {
                rows_t.push(img);
            }
        }
        for i in 0..self.dim_t {
            let mut e = vec![Q::zero(); self.dim_t];
            e[i] = Q::one();
            if !Subspace::span_vecs(self.dim_t, &rows_t).contains(&e) {
                rows_t.push(e);
            }
        }
        (rows_n, rows_t)
    }
}

/// A compatible pair of matrices between constraint vector spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConLinMap {
    #[serde(rename = "phiT")]
    pub phi_t: Mat,
    #[serde(rename = "phiN")]
    pub phi_n: Mat,
}

impl ConLinMap {
    pub fn identity(e: &ConVect) -> Self {
        ConLinMap { phi_t: Mat::identity(e.dim_t), phi_n: Mat::identity(e.dim_n) }
    }

    pub fn zero(dom: &ConVect, cod: &ConVect) -> Self {
        ConLinMap {
            phi_t: Mat::zeros(cod.dim_t, dom.dim_t),
            phi_n: Mat::zeros(cod.dim_n, dom.dim_n),
        }
    }

    pub fn validate(&self, dom: &ConVect, cod: &ConVect) -> Result<(), KError> {
        if self.phi_t.rows() != cod.dim_t
            || self.phi_t.cols() != dom.dim_t
            || self.phi_n.rows() != cod.dim_n
            || self.phi_n.cols() != dom.dim_n
        {
            return Err(KError::ShapeMismatch("map dimensions do not match".into()));
        }
        if &self.phi_t * &dom.iota != &cod.iota * &self.phi_n {
            return Err(KError::ShapeMismatch("phi_T iota != iota' phi_N".into()));
        }
        let img0 = dom.zero.image_under(&self.phi_n);
        if !cod.zero.contains_subspace(&img0) {
            return Err(KError::ShapeMismatch("zero part not preserved".into()));
        }
        Ok(())
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &ConLinMap) -> ConLinMap {
        ConLinMap { phi_t: &self.phi_t * &first.phi_t, phi_n: &self.phi_n * &first.phi_n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinMapClass {
    pub mono: bool,
    pub epi: bool,
    pub regular_mono: bool,
    pub regular_epi: bool,
    pub iso: bool,
}

pub fn classify_linmap(m: &ConLinMap, dom: &ConVect, cod: &ConVect) -> LinMapClass {
    let mono = m.phi_t.rank() == dom.dim_t && m.phi_n.rank() == dom.dim_n;
    let epi = m.phi_t.rank() == cod.dim_t && m.phi_n.rank() == cod.dim_n;
    let regular_mono = mono && cod.zero.preimage_under(&m.phi_n) == dom.zero;
    let regular_epi = epi && dom.zero.image_under(&m.phi_n) == cod.zero;
    LinMapClass { mono, epi, regular_mono, regular_epi, iso: mono && regular_epi }
}

pub fn direct_sum(e: &ConVect, f: &ConVect) -> ConVect {
    let iota = e.iota.block_diag(&f.iota);
    let mut gens = Vec::new();
    for v in e.zero.basis_vecs() {
        let mut w = v;
        w.extend(vec![Q::zero(); f.dim_n]);
        gens.push(w);
    }
    for v in f.zero.basis_vecs() {
        let mut w = vec![Q::zero(); e.dim_n];
        w.extend(v);
        gens.push(w);
    }
    ConVect {
        dim_t: e.dim_t + f.dim_t,
        dim_n: e.dim_n + f.dim_n,
        iota,
        zero: Subspace::span_vecs(e.dim_n + f.dim_n, &gens),
    }
}

pub fn kron_vec(a: &[Q], dim_b: usize, b: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); a.len() * dim_b];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i * dim_b + j] = x * y;
        }
    }
    out
}

pub fn std_basis(n: usize) -> Vec<Vec<Q>> {
    (0..n)
        .map(|i| {
            let mut e = vec![Q::zero(); n];
            e[i] = Q::one();
            e
        })
        .collect()
}

/// `E (x) F` with `(E (x) F)_0 = E_0 (x) F_N + E_N (x) F_0`.
pub fn tensor_k(e: &ConVect, f: &ConVect) -> ConVect {
    let dim_n = e.dim_n * f.dim_n;
    let iota = e.iota.kronecker(&f.iota);
    let mut gens = Vec::new();
    for u in e.zero.basis_vecs() {
        for v in std_basis(f.dim_n) {
            gens.push(kron_vec(&u, f.dim_n, &v));
        }
    }
    for u in std_basis(e.dim_n) {
        for v in f.zero.basis_vecs() {
            gens.push(kron_vec(&u, f.dim_n, &v));
        }
    }
    ConVect { dim_t: e.dim_t * f.dim_t, dim_n, iota, zero: Subspace::span_vecs(dim_n, &gens) }
}

/// Strong tensor product. Embedded inputs take the internal-sum shortcut;
/// the general case uses the direct-sum-modulo-ideal presentation with the
/// canonical section.
pub fn strtensor_k(e: &ConVect, f: &ConVect) -> ConVect {
    if e.is_embedded() && f.is_embedded() {
        strtensor_k_embedded(e, f)
    } else {
        strtensor_k_presentation(e, f)
    }
}

pub fn strtensor_k_embedded(e: &ConVect, f: &ConVect) -> ConVect {
    let dim_t = e.dim_t * f.dim_t;
    let en = e.n_in_t();
    let fn_ = f.n_in_t();
    let ez = e.zero_in_t();
    let fz = f.zero_in_t();
    let mut gens_n = Vec::new();
    let mut gens_0 = Vec::new();
    for u in en.basis_vecs() {
        for v in fn_.basis_vecs() {
            gens_n.push(kron_vec(&u, f.dim_t, &v));
        }
    }
    for u in ez.basis_vecs() {
        for v in std_basis(f.dim_t) {
            gens_n.push(kron_vec(&u, f.dim_t, &v));
            gens_0.push(kron_vec(&u, f.dim_t, &v));
        }
    }
    for u in std_basis(e.dim_t) {
        for v in fz.basis_vecs() {
            gens_n.push(kron_vec(&u, f.dim_t, &v));
            gens_0.push(kron_vec(&u, f.dim_t, &v));
        }
    }
    let n_sub = Subspace::span_vecs(dim_t, &gens_n);
    let iota = n_sub.basis().transpose();
    let zero_sub = Subspace::span_vecs(dim_t, &gens_0);
    let zero_coords: Vec<Vec<Q>> =
        zero_sub.basis_vecs().iter().map(|v| n_sub.coords_of(v).unwrap()).collect();
    ConVect {
        dim_t,
        dim_n: n_sub.dim(),
        iota,
        zero: Subspace::span_vecs(n_sub.dim(), &zero_coords),
    }
}

/// The presentation route for the strong tensor product, valid on all
/// inputs (also the independent cross-check for the embedded shortcut).
pub fn strtensor_k_presentation(e: &ConVect, f: &ConVect) -> ConVect {
    let (te, ne, ze) = (e.dim_t, e.dim_n, e.zero.dim());
    let (tf, nf, zf) = (f.dim_t, f.dim_n, f.zero.dim());
    let b1 = ne * nf; // E_N (x) F_N
    let b2 = ze * tf; // E_0 (x) F_T
    let b3 = te * zf; // E_T (x) F_0
    let d = b1 + b2 + b3;
    let e0_basis = e.zero.basis_vecs();
    let f0_basis = f.zero.basis_vecs();
    let mut ideal = Vec::new();
    for (ui, u) in e0_basis.iter().enumerate() {
        for j in 0..nf {
            let mut g = vec![Q::zero(); d];
            let block1 = kron_vec(u, nf, &std_basis(nf)[j]);
            g[..b1].clone_from_slice(&block1);
            for (t, val) in f.iota.col(j).iter().enumerate() {
                g[b1 + ui * tf + t] = -val.clone();
            }
            ideal.push(g);
        }
    }
    for i in 0..ne {
        for (vi, v) in f0_basis.iter().enumerate() {
            let mut g = vec![Q::zero(); d];
            let block1 = kron_vec(&std_basis(ne)[i], nf, v);
            g[..b1].clone_from_slice(&block1);
            for (t, val) in e.iota.col(i).iter().enumerate() {
                g[b1 + b2 + t * zf + vi] = -val.clone();
            }
            ideal.push(g);
        }
    }
    let quot = QuotientSpace::new(Subspace::span_vecs(d, &ideal));
    // iota on the presentation space.
    let mut big_iota = Mat::zeros(te * tf, d);
    let kron_nn = e.iota.kronecker(&f.iota);
    for r in 0..te * tf {
        for c in 0..b1 {
            *big_iota.at_mut(r, c) = kron_nn.at(r, c).clone();
        }
    }
    for (ui, u) in e0_basis.iter().enumerate() {
        let iu = e.iota.apply(u);
        for t in 0..tf {
            for (r1, val) in iu.iter().enumerate() {
                *big_iota.at_mut(r1 * tf + t, b1 + ui * tf + t) = val.clone();
            }
        }
    }
    for (vi, v) in f0_basis.iter().enumerate() {
        let iv = f.iota.apply(v);
        for t in 0..te {
            for (r2, val) in iv.iter().enumerate() {
                *big_iota.at_mut(t * tf + r2, b1 + b2 + t * zf + vi) = val.clone();
            }
        }
    }
    let iota = &big_iota * &quot.section_matrix();
    // Zero part: (E_0 (x) F_N + E_N (x) F_0) in block 1, all of blocks 2, 3.
    let mut gens = Vec::new();
    for u in &e0_basis {
        for v in std_basis(nf) {
            let mut g = vec![Q::zero(); d];
            let block = kron_vec(u, nf, &v);
            g[..b1].clone_from_slice(&block);
            gens.push(quot.project(&g));
        }
    }
    for u in std_basis(ne) {
        for v in &f0_basis {
            let mut g = vec![Q::zero(); d];
            let block = kron_vec(&u, nf, v);
            g[..b1].clone_from_slice(&block);
            gens.push(quot.project(&g));
        }
    }
    for k in b1..d {
        let mut g = vec![Q::zero(); d];
        g[k] = Q::one();
        gens.push(quot.project(&g));
    }
    let dim_n = quot.dim();
    ConVect { dim_t: te * tf, dim_n, iota, zero: Subspace::span_vecs(dim_n, &gens) }
}

/// Dual space of an embedded constraint vector space:
/// `((V_T)^*, Ann(V_0), Ann(V_N))`.
pub fn dual_space(v: &ConVect) -> Result<ConVect, KError> {
    if !v.is_embedded() {
        return Err(KError::NotEmbedded("dual of a non-embedded space".into()));
    }
    let ann0 = v.zero_in_t().annihilator();
    let ann_n = v.n_in_t().annihilator();
    let iota = ann0.basis().transpose();
    let zero_coords: Vec<Vec<Q>> =
        ann_n.basis_vecs().iter().map(|w| ann0.coords_of(w).unwrap()).collect();
    Ok(ConVect {
        dim_t: v.dim_t,
        dim_n: ann0.dim(),
        iota,
        zero: Subspace::span_vecs(ann0.dim(), &zero_coords),
    })
}

/// Internal hom as a constraint vector space, with conversions between
/// hom-space coordinates and actual maps.
pub struct HomSpace {
    pub space: ConVect,
    /// Basis of the T-solution space inside `Q^{tF*tE}` (flattened
    /// matrices, row-major).
    pub t_basis: Vec<Vec<Q>>,
    /// Basis of the N-solution space inside `Q^{tF*tE + nF*nE}`.
    pub n_basis: Vec<Vec<Q>>,
    pub dom_dims: (usize, usize),
    pub cod_dims: (usize, usize),
}

impl HomSpace {
    pub fn map_of_n_coords(&self, coords: &[Q]) -> ConLinMap {
        let (te, ne) = self.dom_dims;
        let (tf, nf) = self.cod_dims;
        let mut flat = vec![Q::zero(); tf * te + nf * ne];
        for (b, c) in self.n_basis.iter().zip(coords) {
            for (k, v) in b.iter().enumerate() {
                let t = &flat[k] + c * v;
                flat[k] = t;
            }
        }
        ConLinMap {
            phi_t: Mat::from_fn(tf, te, |r, c| flat[r * te + c].clone()),
            phi_n: Mat::from_fn(nf, ne, |r, c| flat[tf * te + r * ne + c].clone()),
        }
    }

    pub fn t_matrix_of_coords(&self, coords: &[Q]) -> Mat {
        let (te, _) = self.dom_dims;
        let (tf, _) = self.cod_dims;
        let mut flat = vec![Q::zero(); tf * te];
        for (b, c) in self.t_basis.iter().zip(coords) {
            for (k, v) in b.iter().enumerate() {
                let t = &flat[k] + c * v;
                flat[k] = t;
            }
        }
        Mat::from_fn(tf, te, |r, c| flat[r * te + c].clone())
    }

    pub fn n_coords_of_map(&self, m: &ConLinMap) -> Option<Vec<Q>> {
        let (te, ne) = self.dom_dims;
        let (tf, nf) = self.cod_dims;
        let mut flat = Vec::with_capacity(tf * te + nf * ne);
        for r in 0..tf {
            for c in 0..te {
                flat.push(m.phi_t.at(r, c).clone());
            }
        }
        for r in 0..nf {
            for c in 0..ne {
                flat.push(m.phi_n.at(r, c).clone());
            }
        }
        Subspace::span_vecs(flat.len(), &self.n_basis).coords_of(&flat)
    }

    pub fn t_coords_of_matrix(&self, m: &Mat) -> Option<Vec<Q>> {
        let mut flat = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                flat.push(m.at(r, c).clone());
            }
        }
        Subspace::span_vecs(flat.len(), &self.t_basis).coords_of(&flat)
    }
}

/// Internal hom `ConHom(E,F)`: T = all T-level matrices, N = compatible
/// pairs, 0 = pairs with `phi_N(E_N) <= F_0`.
pub fn hom_space(e: &ConVect, f: &ConVect) -> HomSpace {
    constrained_hom(e, f, &[], &[])
}

/// The internal hom cut down by extra linear conditions: `extra_t` are row
/// vectors on the flattened T-matrix space, `extra_pair` on the flattened
/// pair space. This backs module-hom and derivation spaces.
pub fn constrained_hom(
    e: &ConVect,
    f: &ConVect,
    extra_t: &[Vec<Q>],
    extra_pair: &[Vec<Q>],
) -> HomSpace {
    let (te, ne) = (e.dim_t, e.dim_n);
    let (tf, nf) = (f.dim_t, f.dim_n);
    let dim_t_flat = tf * te;
    let dim_flat = dim_t_flat + nf * ne;
    // T-part.
    let t_sys = if extra_t.is_empty() {
        Mat::zeros(0, dim_t_flat)
    } else {
        Mat::from_rows(extra_t.to_vec())
    };
    let t_space = Subspace::span(dim_t_flat, &t_sys.nullspace());
    let t_basis = t_space.basis_vecs();
    // N-part conditions.
    let mut rows: Vec<Vec<Q>> = Vec::new();
    // phi_T iota_E = iota_F phi_N, entrywise in (r, j).
    for r in 0..tf {
        for j in 0..ne {
            let mut row = vec![Q::zero(); dim_flat];
            for c in 0..te {
                row[r * te + c] = e.iota.at(c, j).clone();
            }
            for k in 0..nf {
                let v = &row[dim_t_flat + k * ne + j] - f.iota.at(r, k);
                row[dim_t_flat + k * ne + j] = v;
            }
            rows.push(row);
        }
    }
    // Ann(F_0) . (phi_N u) = 0 for u in a basis of E_0.
    let ann_f0 = f.zero.annihilator();
    for u in e.zero.basis_vecs() {
        for a in ann_f0.basis_vecs() {
            let mut row = vec![Q::zero(); dim_flat];
            for k in 0..nf {
                for j in 0..ne {
                    row[dim_t_flat + k * ne + j] = &a[k] * &u[j];
                }
            }
            rows.push(row);
        }
    }
    // The T-conditions apply to the T-block of a pair.
    for t_row in extra_t {
        let mut row = vec![Q::zero(); dim_flat];
        row[..dim_t_flat].clone_from_slice(t_row);
        rows.push(row);
    }
    rows.extend(extra_pair.iter().cloned());
    let sys = if rows.is_empty() { Mat::zeros(0, dim_flat) } else { Mat::from_rows(rows) };
    let n_space = Subspace::span(dim_flat, &sys.nullspace());
    let n_basis = n_space.basis_vecs();
    // iota: the T-block of an N-solution, in t_basis coordinates.
    let mut iota = Mat::zeros(t_basis.len(), n_basis.len());
    for (c, b) in n_basis.iter().enumerate() {
        let tb = b[..dim_t_flat].to_vec();
        let coords = t_space.coords_of(&tb).expect("pair T-block solves the T-system");
        for (r, val) in coords.iter().enumerate() {
            *iota.at_mut(r, c) = val.clone();
        }
    }
    // Zero part: additionally phi_N(E_N) <= F_0.
    let mut zero_coords = Vec::new();
    let mut zrows: Vec<Vec<Q>> = Vec::new();
    for j in 0..ne {
        for a in ann_f0.basis_vecs() {
            let mut row = vec![Q::zero(); dim_flat];
            for k in 0..nf {
                row[dim_t_flat + k * ne + j] = a[k].clone();
            }
            zrows.push(row);
        }
    }
    if zrows.is_empty() {
        zero_coords = std_basis(n_basis.len());
    } else {
        let zsys = Mat::from_rows(zrows);
        let mut coord_rows = Vec::new();
        for zr in 0..zsys.rows() {
            let mut row = vec![Q::zero(); n_basis.len()];
            for (bi, b) in n_basis.iter().enumerate() {
                let mut acc = Q::zero();
                for k in 0..dim_flat {
                    if !zsys.at(zr, k).is_zero() && !b[k].is_zero() {
                        acc += zsys.at(zr, k) * &b[k];
                    }
                }
                row[bi] = acc;
            }
            coord_rows.push(row);
        }
        let null = Mat::from_rows(coord_rows).nullspace();
        for r in 0..null.rows() {
            zero_coords.push(null.row(r));
        }
    }
    let dim_n = n_basis.len();
    HomSpace {
        space: ConVect {
            dim_t: t_basis.len(),
            dim_n,
            iota,
            zero: Subspace::span_vecs(dim_n, &zero_coords),
        },
        t_basis,
        n_basis,
        dom_dims: (te, ne),
        cod_dims: (tf, nf),
    }
}

/// Kernel `(ker phi_T, ker phi_N, ker phi_N \cap E_0)` with its inclusion.
pub fn kernel(m: &ConLinMap, dom: &ConVect) -> (ConVect, ConLinMap) {
    let kt = Subspace::span(dom.dim_t, &m.phi_t.nullspace());
    let kn = Subspace::span(dom.dim_n, &m.phi_n.nullspace());
    let k0 = kn.intersect(&dom.zero);
    let mut iota = Mat::zeros(kt.dim(), kn.dim());
    for (c, v) in kn.basis_vecs().iter().enumerate() {
        let coords = kt.coords_of(&dom.iota.apply(v)).expect("iota maps ker_N into ker_T");
        for (r, val) in coords.iter().enumerate() {
            *iota.at_mut(r, c) = val.clone();
        }
    }
    let zero_coords: Vec<Vec<Q>> =
        k0.basis_vecs().iter().map(|v| kn.coords_of(v).unwrap()).collect();
    let obj = ConVect {
        dim_t: kt.dim(),
        dim_n: kn.dim(),
        iota,
        zero: Subspace::span_vecs(kn.dim(), &zero_coords),
    };
    let incl = ConLinMap { phi_t: kt.basis().transpose(), phi_n: kn.basis().transpose() };
    (obj, incl)
}

/// Cokernel `(F_T/im, F_N/im, F_0/im)` with its projection.
pub fn cokernel(m: &ConLinMap, cod: &ConVect) -> (ConVect, ConLinMap) {
    let im_t = Subspace::span(cod.dim_t, &m.phi_t.transpose());
    let im_n = Subspace::span(cod.dim_n, &m.phi_n.transpose());
    let qt = QuotientSpace::new(im_t);
    let qn = QuotientSpace::new(im_n);
    let iota = &(&qt.projection_matrix() * &cod.iota) * &qn.section_matrix();
    let zero_gens: Vec<Vec<Q>> = cod.zero.basis_vecs().iter().map(|v| qn.project(v)).collect();
    let obj = ConVect {
        dim_t: qt.dim(),
        dim_n: qn.dim(),
        iota,
        zero: Subspace::span_vecs(qn.dim(), &zero_gens),
    };
    let proj = ConLinMap { phi_t: qt.projection_matrix(), phi_n: qn.projection_matrix() };
    (obj, proj)
}

/// A constraint subspace pair of an ambient constraint vector space.
#[derive(Clone, Debug)]
pub struct SubPair {
    pub part_t: Subspace,
    pub part_n: Subspace,
}

/// Quotient `E / F` with `(E/F)_0 = E_0 / F_N`.
pub fn quotient(e: &ConVect, f: &SubPair) -> Result<(ConVect, ConLinMap), KError> {
    if f.part_t.ambient() != e.dim_t || f.part_n.ambient() != e.dim_n {
        return Err(KError::ShapeMismatch("submodule ambient mismatch".into()));
    }
    let img = f.part_n.image_under(&e.iota);
    if !f.part_t.contains_subspace(&img) {
        return Err(KError::NotSubmodule("iota(F_N) not inside F_T".into()));
    }
    let qt = QuotientSpace::new(f.part_t.clone());
    let qn = QuotientSpace::new(f.part_n.clone());
    let iota = &(&qt.projection_matrix() * &e.iota) * &qn.section_matrix();
    let zero_gens: Vec<Vec<Q>> = e.zero.basis_vecs().iter().map(|v| qn.project(v)).collect();
    let obj = ConVect {
        dim_t: qt.dim(),
        dim_n: qn.dim(),
        iota,
        zero: Subspace::span_vecs(qn.dim(), &zero_gens),
    };
    let proj = ConLinMap { phi_t: qt.projection_matrix(), phi_n: qn.projection_matrix() };
    Ok((obj, proj))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecImageMode {
    Plain,
    Regular,
}

/// Image or regular image of a constraint linear map, with its inclusion
/// into the codomain.
pub fn image(
    m: &ConLinMap,
    dom: &ConVect,
    cod: &ConVect,
    mode: VecImageMode,
) -> (ConVect, ConLinMap) {
    let im_t = Subspace::span(cod.dim_t, &m.phi_t.transpose());
    let im_n = Subspace::span(cod.dim_n, &m.phi_n.transpose());
    let zero_sub = match mode {
        VecImageMode::Plain => dom.zero.image_under(&m.phi_n),
        VecImageMode::Regular => im_n.intersect(&cod.zero),
    };
    let mut iota = Mat::zeros(im_t.dim(), im_n.dim());
    for (c, v) in im_n.basis_vecs().iter().enumerate() {
        let coords = im_t.coords_of(&cod.iota.apply(v)).expect("iota maps image to image");
        for (r, val) in coords.iter().enumerate() {
            *iota.at_mut(r, c) = val.clone();
        }
    }
    let zero_coords: Vec<Vec<Q>> =
        zero_sub.basis_vecs().iter().map(|v| im_n.coords_of(v).unwrap()).collect();
    let obj = ConVect {
        dim_t: im_t.dim(),
        dim_n: im_n.dim(),
        iota,
        zero: Subspace::span_vecs(im_n.dim(), &zero_coords),
    };
    let incl = ConLinMap { phi_t: im_t.basis().transpose(), phi_n: im_n.basis().transpose() };
    (obj, incl)
}

/// The reflector onto embedded spaces, with its unit map.
pub fn embed_reflector(e: &ConVect) -> (ConVect, ConLinMap) {
    let n_img = e.n_in_t();
    let z_img = e.zero_in_t();
    let iota = n_img.basis().transpose();
    let zero_coords: Vec<Vec<Q>> =
        z_img.basis_vecs().iter().map(|v| n_img.coords_of(v).unwrap()).collect();
    let obj = ConVect {
        dim_t: e.dim_t,
        dim_n: n_img.dim(),
        iota,
        zero: Subspace::span_vecs(n_img.dim(), &zero_coords),
    };
    let mut phi_n = Mat::zeros(n_img.dim(), e.dim_n);
    for c in 0..e.dim_n {
        let coords = n_img.coords_of(&e.iota.col(c)).unwrap();
        for (r, val) in coords.iter().enumerate() {
            *phi_n.at_mut(r, c) = val.clone();
        }
    }
    (obj, ConLinMap { phi_t: Mat::identity(e.dim_t), phi_n })
}

/// Reduction `E_red = E_N / E_0` in canonical quotient coordinates.
pub fn reduce_vect(e: &ConVect) -> QuotientSpace {
    QuotientSpace::new(e.zero.clone())
}

/// The induced matrix on reductions.
pub fn reduce_linmap(m: &ConLinMap, dom: &ConVect, cod: &ConVect) -> Mat {
    let qd = reduce_vect(dom);
    let qc = reduce_vect(cod);
    &(&qc.projection_matrix() * &m.phi_n) * &qd.section_matrix()
}

/// The canonical lax morphism `E (x) F -> E boxtimes F` on embedded inputs
/// (inclusion of the N-parts inside `E_T (x) F_T`).
pub fn lax_tensor_to_strtensor(e: &ConVect, f: &ConVect) -> Result<ConLinMap, KError> {
    if !(e.is_embedded() && f.is_embedded()) {
        return Err(KError::NotEmbedded("lax comparison map needs embedded inputs".into()));
    }
    let t = tensor_k(e, f);
    let s = strtensor_k(e, f);
    let n_sub = Subspace::span(s.dim_t, &s.iota.transpose());
    let mut phi_n = Mat::zeros(s.dim_n, t.dim_n);
    for c in 0..t.dim_n {
        let coords = n_sub
            .coords_of(&t.iota.col(c))
            .ok_or_else(|| KError::ShapeMismatch("tensor does not land in strtensor".into()))?;
        for (r, val) in coords.iter().enumerate() {
            *phi_n.at_mut(r, c) = val.clone();
        }
    }
    Ok(ConLinMap { phi_t: Mat::identity(e.dim_t * f.dim_t), phi_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qi;

    #[test]
    fn dims_match_index_arithmetic() {
        let v = ConVect::standard(3, 2, 1);
        assert_eq!(tensor_k(&v, &v).dim(), (9, 4, 3));
        assert_eq!(strtensor_k(&v, &v).dim(), (9, 6, 5));
        let vv = strtensor_k(&v, &v);
        assert_eq!(tensor_k(&v, &vv).dim(), (27, 12, 11));
        assert_eq!(strtensor_k(&tensor_k(&v, &v), &v).dim(), (27, 16, 15));
    }

    #[test]
    fn unit_laws() {
        let v = ConVect::standard(3, 2, 1);
        let u = ConVect::unit();
        assert_eq!(tensor_k(&u, &v).dim(), v.dim());
        assert_eq!(strtensor_k(&v, &u).dim(), v.dim());
        assert_eq!(direct_sum(&v, &ConVect::zero_space()).dim(), v.dim());
    }

    #[test]
    fn presentation_agrees_with_embedded_route() {
        for (t, n, z) in [(3, 2, 1), (2, 2, 1), (3, 3, 2), (2, 1, 0)] {
            let e = ConVect::standard(t, n, z);
            for (t2, n2, z2) in [(2, 1, 1), (3, 2, 0), (2, 2, 2)] {
                let f = ConVect::standard(t2, n2, z2);
                let a = strtensor_k_embedded(&e, &f);
                let b = strtensor_k_presentation(&e, &f);
                assert_eq!(a.dim(), b.dim(), "dims for {:?} x {:?}", e.dim(), f.dim());
            }
        }
    }

    #[test]
    fn dual_dims() {
        let v = ConVect::standard(3, 2, 1);
        assert_eq!(dual_space(&v).unwrap().dim(), (3, 2, 1));
        let u = ConVect::standard(1, 1, 1);
        assert_eq!(dual_space(&u).unwrap().dim(), (1, 0, 0));
        assert_eq!(dual_space(&ConVect::unit()).unwrap().dim(), (1, 1, 0));
        let w = ConVect::standard(2, 2, 1);
        let lhs = dual_space(&tensor_k(&v, &w)).unwrap().dim();
        let rhs = strtensor_k(&dual_space(&v).unwrap(), &dual_space(&w).unwrap()).dim();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn hom_dims_and_adjunction() {
        let e = ConVect::standard(2, 1, 0);
        let f = ConVect::standard(2, 2, 1);
        let h = hom_space(&e, &f);
        let expect = strtensor_k(&f, &dual_space(&e).unwrap()).dim();
        assert_eq!(h.space.dim(), expect);
        let g = ConVect::standard(2, 1, 1);
        let lhs = hom_space(&tensor_k(&e, &f), &g).space.dim_n;
        let rhs = hom_space(&e, &hom_space(&f, &g).space).space.dim_n;
        assert_eq!(lhs, rhs);
        assert_eq!(hom_space(&ConVect::unit(), &f).space.dim(), f.dim());
    }

    #[test]
    fn quotient_paper_example() {
        let e = ConVect::standard(2, 2, 0);
        let f = SubPair {
            part_t: Subspace::span_vecs(2, &[vec![qi(1), qi(0)]]),
            part_n: Subspace::zero(2),
        };
        let (q, _) = quotient(&e, &f).unwrap();
        assert_eq!(q.dim(), (1, 2, 0));
        assert!(!q.is_embedded());
    }

    #[test]
    fn kernel_cokernel_identity() {
        let e = ConVect::standard(2, 2, 1);
        let id = ConLinMap::identity(&e);
        let (k, _) = kernel(&id, &e);
        assert_eq!(k.dim(), (0, 0, 0));
        let (c, _) = cokernel(&id, &e);
        assert_eq!(c.dim(), (0, 0, 0));
    }

    #[test]
    fn embed_reflector_collapses() {
        let e =
            ConVect::new(1, 2, Mat::from_rows(vec![vec![qi(1), qi(1)]]), Subspace::zero(2))
                .unwrap();
        let (emb, unit) = embed_reflector(&e);
        assert_eq!(emb.dim(), (1, 1, 0));
        assert!(emb.is_embedded());
        unit.validate(&e, &emb).unwrap();
    }

    #[test]
    fn reduction_dims() {
        let e = ConVect::standard(3, 2, 1);
        assert_eq!(reduce_vect(&e).dim(), 1);
        let f = ConVect::standard(2, 2, 2);
        assert_eq!(reduce_vect(&f).dim(), 0);
        let a = reduce_vect(&strtensor_k(&e, &f)).dim();
        let b = reduce_vect(&tensor_k(&e, &f)).dim();
        assert_eq!(a, b);
    }

    #[test]
    fn constraint_basis_reconstructs() {
        let e = ConVect::standard(3, 2, 1);
        let (bn, bt) = e.constraint_basis();
        assert_eq!(bn.len(), 2);
        assert_eq!(bt.len(), 3);
        assert_eq!(Subspace::span_vecs(2, &bn).dim(), 2);
        assert_eq!(Subspace::span_vecs(3, &bt).dim(), 3);
        // The first zero.dim() vectors of bn span E_0.
        assert_eq!(Subspace::span_vecs(2, &bn[..1]), e.zero);
    }
}
