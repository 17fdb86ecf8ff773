//! Graded constraint modules and complexes, constraint cohomology, the
//! constraint Hochschild DGLA (differential, Gerstenhaber bracket, cup
//! product), Maurer-Cartan/gauge formalism over truncated formal series and
//! obstruction-driven order-by-order extension.

use crate::algmod::{
    center, derivations, inner_derivations, reduce_algebra, ConAlg, ConMod, PlainAlg,
};
use crate::convec::{hom_space, kernel, std_basis, tensor_k, ConLinMap, ConVect, HomSpace};
use crate::linalg::{Mat, QuotientSpace, Subspace};
use crate::rat::{qi, qr, Q};
use crate::KError;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Level tag of a cochain: T-only data, a constraint pair, or a pair with
/// values in the 0-part. Ordered so that finer levels compare larger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    T,
    N,
    Zero,
}

/// A degree-n constraint Hochschild cochain over a fixed algebra, stored
/// as dense multilinear tables over the T- and N-bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub degree: usize,
    pub level: Level,
    /// `val_t[flat(i_1..i_n)]` is a vector in `Q^{dim A_T}`.
    pub val_t: Vec<Vec<Q>>,
    /// `val_n` over the N-basis; empty for level T.
    pub val_n: Vec<Vec<Q>>,
}

fn pow_len(dim: usize, n: usize) -> usize {
    dim.checked_pow(n as u32).expect("table too large")
}

fn unflatten(mut idx: usize, dim: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = idx % dim;
        idx /= dim;
    }
    out
}

fn flatten(tuple: &[usize], dim: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * dim + i)
}

impl Cochain {
    pub fn zero(a: &ConAlg, degree: usize, level: Level) -> Self {
        let (t, n, _) = a.dim();
        Cochain {
            degree,
            level,
            val_t: vec![vec![Q::zero(); t]; pow_len(t, degree)],
            val_n: if level == Level::T {
                vec![]
            } else {
                vec![vec![Q::zero(); n]; pow_len(n, degree)]
            },
        }
    }

    fn eval_table(table: &[Vec<Q>], dim: usize, out_dim: usize, args: &[Vec<Q>]) -> Vec<Q> {
        let degree = args.len();
        let mut out = vec![Q::zero(); out_dim];
        for (idx, val) in table.iter().enumerate() {
            if val.iter().all(|v| v.is_zero()) {
                continue;
            }
            let tuple = unflatten(idx, dim, degree);
            let mut coeff = qi(1);
            let mut nonzero = true;
            for (slot, &i) in tuple.iter().enumerate() {
                if args[slot][i].is_zero() {
                    nonzero = false;
                    break;
                }
                coeff *= &args[slot][i];
            }
            if !nonzero {
                continue;
            }
            for (k, v) in val.iter().enumerate() {
                if !v.is_zero() {
                    out[k] += &coeff * v;
                }
            }
        }
        out
    }

    /// Multilinear evaluation on T-level arguments.
    pub fn eval_t(&self, a: &ConAlg, args: &[Vec<Q>]) -> Vec<Q> {
        let (t, _, _) = a.dim();
        Self::eval_table(&self.val_t, t, t, args)
    }

    pub fn eval_n(&self, a: &ConAlg, args: &[Vec<Q>]) -> Vec<Q> {
        let (_, n, _) = a.dim();
        Self::eval_table(&self.val_n, n, n, args)
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        assert_eq!(self.degree, other.degree);
        let level = self.level.min(other.level);
        Cochain {
            degree: self.degree,
            level,
            val_t: zip_add(&self.val_t, &other.val_t),
            val_n: if level == Level::T { vec![] } else { zip_add(&self.val_n, &other.val_n) },
        }
    }

    pub fn scale(&self, s: &Q) -> Cochain {
        Cochain {
            degree: self.degree,
            level: self.level,
            val_t: self.val_t.iter().map(|v| v.iter().map(|x| x * s).collect()).collect(),
            val_n: self.val_n.iter().map(|v| v.iter().map(|x| x * s).collect()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.val_t.iter().all(|v| v.iter().all(|x| x.is_zero()))
            && self.val_n.iter().all(|v| v.iter().all(|x| x.is_zero()))
    }

    /// The multiplication of the algebra as a degree-2 level-N cochain.
    pub fn multiplication(a: &ConAlg) -> Cochain {
        let (t, n, _) = a.dim();
        let mut val_t = Vec::with_capacity(t * t);
        for i in 0..t {
            for j in 0..t {
                val_t.push(a.mul_t[i][j].clone());
            }
        }
        let mut val_n = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                val_n.push(a.mul_n[i][j].clone());
            }
        }
        Cochain { degree: 2, level: Level::N, val_t, val_n }
    }
}

fn zip_add(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v).collect()).collect()
}

/// Checks the level invariants of a cochain over its algebra.
pub fn cochain_validate(a: &ConAlg, c: &Cochain) -> Result<(), KError> {
    let (t, n, _) = a.dim();
    if c.val_t.len() != pow_len(t, c.degree) {
        return Err(KError::ShapeMismatch("T-table has the wrong size".into()));
    }
    if c.level == Level::T {
        return Ok(());
    }
    if c.val_n.len() != pow_len(n, c.degree) {
        return Err(KError::ShapeMismatch("N-table has the wrong size".into()));
    }
    for (idx, val) in c.val_n.iter().enumerate() {
        let tuple = unflatten(idx, n, c.degree);
        let args: Vec<Vec<Q>> = tuple.iter().map(|&i| a.carrier.iota.col(i)).collect();
        let lhs = a.carrier.iota.apply(val);
        let rhs = c.eval_t(a, &args);
        if lhs != rhs {
            return Err(KError::ShapeMismatch("cochain does not intertwine iota".into()));
        }
    }
    // val_n maps the 0-part of the tensor power into A_0: spanned by
    // tuples with one slot from a basis of A_0.
    for slot in 0..c.degree {
        for w in a.carrier.zero.basis_vecs() {
            for idx in 0..pow_len(n, c.degree - 1) {
                let rest = unflatten(idx, n, c.degree - 1);
                let mut args: Vec<Vec<Q>> = Vec::with_capacity(c.degree);
                let mut ri = 0;
                for s in 0..c.degree {
                    if s == slot {
                        args.push(w.clone());
                    } else {
                        args.push(std_basis(n)[rest[ri]].clone());
                        ri += 1;
                    }
                }
                if !a.carrier.zero.contains(&c.eval_n(a, &args)) {
                    return Err(KError::ShapeMismatch(
                        "cochain does not preserve the 0-part".into(),
                    ));
                }
            }
        }
    }
    if c.level == Level::Zero {
        for val in &c.val_n {
            if !a.carrier.zero.contains(val) {
                return Err(KError::ShapeMismatch("0-level cochain leaves A_0".into()));
            }
        }
    }
    Ok(())
}

/// The finest level a cochain satisfies.
pub fn cochain_level(a: &ConAlg, c: &Cochain) -> Level {
    if c.val_n.is_empty() {
        return Level::T;
    }
    let mut probe = c.clone();
    probe.level = Level::Zero;
    if cochain_validate(a, &probe).is_ok() {
        return Level::Zero;
    }
    probe.level = Level::N;
    if cochain_validate(a, &probe).is_ok() {
        return Level::N;
    }
    Level::T
}

// ---------------------------------------------------------------------------
// Gerstenhaber bracket, cup product, Hochschild differential
// ---------------------------------------------------------------------------

/// Classical Gerstenhaber circle product on one component.
fn circle_table(
    table_f: &[Vec<Q>],
    deg_f: usize,
    table_g: &[Vec<Q>],
    deg_g: usize,
    dim: usize,
) -> Vec<Vec<Q>> {
    if deg_f == 0 {
        // No insertion slots.
        return vec![vec![Q::zero(); dim]; pow_len(dim, deg_g.saturating_sub(1))];
    }
    let out_deg = deg_f + deg_g - 1;
    let mut out = vec![vec![Q::zero(); dim]; pow_len(dim, out_deg)];
    for (idx, cell) in out.iter_mut().enumerate() {
        let tuple = unflatten(idx, dim, out_deg);
        for pos in 0..deg_f {
            let sign = if (pos * (deg_g + 1)) % 2 == 0 { qi(1) } else { qi(-1) };
            let inner = &tuple[pos..pos + deg_g];
            let gval = &table_g[flatten(inner, dim)];
            for (gi, gcoef) in gval.iter().enumerate() {
                if gcoef.is_zero() {
                    continue;
                }
                let mut outer = Vec::with_capacity(deg_f);
                outer.extend_from_slice(&tuple[..pos]);
                outer.push(gi);
                outer.extend_from_slice(&tuple[pos + deg_g..]);
                let fval = &table_f[flatten(&outer, dim)];
                for (k, v) in fval.iter().enumerate() {
                    if !v.is_zero() {
                        cell[k] += &sign * gcoef * v;
                    }
                }
            }
        }
    }
    out
}

fn bracket_level(a: Level, b: Level) -> Level {
    match (a, b) {
        (Level::T, _) | (_, Level::T) => Level::T,
        (Level::Zero, _) | (_, Level::Zero) => Level::Zero,
        _ => Level::N,
    }
}

/// The constraint Gerstenhaber bracket `[f, g]`.
pub fn gerstenhaber(a: &ConAlg, f: &Cochain, g: &Cochain) -> Cochain {
    let (t, n, _) = a.dim();
    if f.degree + g.degree == 0 {
        // The bracket of two 0-cochains lands in degree -1, which is zero.
        return Cochain::zero(a, 0, bracket_level(f.level, g.level));
    }
    let deg = f.degree + g.degree - 1;
    let sign = if ((f.degree as i64 - 1) * (g.degree as i64 - 1)) % 2 == 0 {
        qi(-1)
    } else {
        qi(1)
    };
    let fg_t = circle_table(&f.val_t, f.degree, &g.val_t, g.degree, t);
    let gf_t = circle_table(&g.val_t, g.degree, &f.val_t, f.degree, t);
    let val_t: Vec<Vec<Q>> = fg_t
        .iter()
        .zip(&gf_t)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + &sign * v).collect())
        .collect();
    let level = bracket_level(f.level, g.level);
    let val_n = if level == Level::T {
        vec![]
    } else {
        let fg_n = circle_table(&f.val_n, f.degree, &g.val_n, g.degree, n);
        let gf_n = circle_table(&g.val_n, g.degree, &f.val_n, f.degree, n);
        fg_n.iter()
            .zip(&gf_n)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + &sign * v).collect())
            .collect()
    };
    Cochain { degree: deg, level, val_t, val_n }
}

/// The constraint cup product `f u g`.
pub fn cup(a: &ConAlg, f: &Cochain, g: &Cochain) -> Cochain {
    let (t, n, _) = a.dim();
    let deg = f.degree + g.degree;
    let mut val_t = vec![vec![Q::zero(); t]; pow_len(t, deg)];
    for (idx, cell) in val_t.iter_mut().enumerate() {
        let tuple = unflatten(idx, t, deg);
        let fv = &f.val_t[flatten(&tuple[..f.degree], t)];
        let gv = &g.val_t[flatten(&tuple[f.degree..], t)];
        *cell = a.mul_t_vec(fv, gv);
    }
    let level = bracket_level(f.level, g.level);
    let val_n = if level == Level::T {
        vec![]
    } else {
        let mut out = vec![vec![Q::zero(); n]; pow_len(n, deg)];
        for (idx, cell) in out.iter_mut().enumerate() {
            let tuple = unflatten(idx, n, deg);
            let fv = &f.val_n[flatten(&tuple[..f.degree], n)];
            let gv = &g.val_n[flatten(&tuple[f.degree..], n)];
            *cell = a.mul_n_vec(fv, gv);
        }
        out
    };
    Cochain { degree: deg, level, val_t, val_n }
}

/// Hochschild differential by the explicit formula
/// `(d f)(a_0..a_n) = a_0 f(a_1..a_n) + sum_i (-1)^{i+1} f(..,a_i a_{i+1},..)
///  + (-1)^{n+1} f(a_0..a_{n-1}) a_n`; this equals `-[f, mu]`.
pub fn hochschild_delta(a: &ConAlg, f: &Cochain) -> Cochain {
    let (t, n, _) = a.dim();
    let deg = f.degree;
    let delta_table =
        |table: &[Vec<Q>], dim: usize, mul: &dyn Fn(&[Q], &[Q]) -> Vec<Q>| -> Vec<Vec<Q>> {
            let mut out = vec![vec![Q::zero(); dim]; pow_len(dim, deg + 1)];
            let basis = std_basis(dim);
            for (idx, cell) in out.iter_mut().enumerate() {
                let tuple = unflatten(idx, dim, deg + 1);
                let fv = &table[flatten(&tuple[1..], dim)];
                for (k, v) in mul(&basis[tuple[0]], fv).iter().enumerate() {
                    cell[k] += v;
                }
                for i in 0..deg {
                    let sign = if (i + 1) % 2 == 0 { qi(1) } else { qi(-1) };
                    let prod = mul(&basis[tuple[i]], &basis[tuple[i + 1]]);
                    for (pi, pv) in prod.iter().enumerate() {
                        if pv.is_zero() {
                            continue;
                        }
                        let mut inner = Vec::with_capacity(deg);
                        inner.extend_from_slice(&tuple[..i]);
                        inner.push(pi);
                        inner.extend_from_slice(&tuple[i + 2..]);
                        let fv = &table[flatten(&inner, dim)];
                        for (k, v) in fv.iter().enumerate() {
                            if !v.is_zero() {
                                cell[k] += &sign * pv * v;
                            }
                        }
                    }
                }
                let sign = if (deg + 1) % 2 == 0 { qi(1) } else { qi(-1) };
                let fv = &table[flatten(&tuple[..deg], dim)];
                for (k, v) in mul(fv, &basis[tuple[deg]]).iter().enumerate() {
                    cell[k] += &sign * v;
                }
            }
            out
        };
    let val_t = delta_table(&f.val_t, t, &|x, y| a.mul_t_vec(x, y));
    let val_n = if f.level == Level::T {
        vec![]
    } else {
        delta_table(&f.val_n, n, &|x, y| a.mul_n_vec(x, y))
    };
    Cochain { degree: deg + 1, level: f.level, val_t, val_n }
}

// ---------------------------------------------------------------------------
// Complexes and cohomology
// ---------------------------------------------------------------------------

/// A bounded constraint cochain complex.
pub struct ConComplex {
    pub lo: i64,
    pub spaces: Vec<ConVect>,
    /// `diffs[i]: spaces[i] -> spaces[i+1]`.
    pub diffs: Vec<ConLinMap>,
}

impl ConComplex {
    pub fn validate(&self) -> Result<(), KError> {
        for (i, d) in self.diffs.iter().enumerate() {
            d.validate(&self.spaces[i], &self.spaces[i + 1])?;
        }
        for w in self.diffs.windows(2) {
            let dd = w[1].compose(&w[0]);
            if !dd.phi_t.is_zero() || !dd.phi_n.is_zero() {
                return Err(KError::ShapeMismatch("delta . delta != 0".into()));
            }
        }
        Ok(())
    }
}

/// Cohomology of a complex at position `i` with class-projection charts.
pub struct CohomologyAt {
    pub space: ConVect,
    pub ker_t: Subspace,
    pub ker_n: Subspace,
    pub proj_t: Mat,
    pub proj_n: Mat,
}

pub fn cohomology_at(cx: &ConComplex, i: usize) -> CohomologyAt {
    let space = &cx.spaces[i];
    let (ker, _incl) = if i < cx.diffs.len() {
        kernel(&cx.diffs[i], space)
    } else {
        (space.clone(), ConLinMap::identity(space))
    };
    let ker_t = if i < cx.diffs.len() {
        Subspace::span(space.dim_t, &cx.diffs[i].phi_t.nullspace())
    } else {
        Subspace::full(space.dim_t)
    };
    let ker_n = if i < cx.diffs.len() {
        Subspace::span(space.dim_n, &cx.diffs[i].phi_n.nullspace())
    } else {
        Subspace::full(space.dim_n)
    };
    let (im_t_coords, im_n_coords) = if i > 0 {
        let prev = &cx.diffs[i - 1];
        let t_gens: Vec<Vec<Q>> = (0..prev.phi_t.cols())
            .map(|c| ker_t.coords_of(&prev.phi_t.col(c)).expect("image inside kernel"))
            .collect();
        let n_gens: Vec<Vec<Q>> = (0..prev.phi_n.cols())
            .map(|c| ker_n.coords_of(&prev.phi_n.col(c)).expect("image inside kernel"))
            .collect();
        (t_gens, n_gens)
    } else {
        (vec![], vec![])
    };
    let qt = QuotientSpace::new(Subspace::span_vecs(ker_t.dim(), &im_t_coords));
    let qn = QuotientSpace::new(Subspace::span_vecs(ker_n.dim(), &im_n_coords));
    let iota = &(&qt.projection_matrix() * &ker.iota) * &qn.section_matrix();
    let zero_gens: Vec<Vec<Q>> = ker.zero.basis_vecs().iter().map(|v| qn.project(v)).collect();
    let dim_n = qn.dim();
    CohomologyAt {
        space: ConVect {
            dim_t: qt.dim(),
            dim_n,
            iota,
            zero: Subspace::span_vecs(dim_n, &zero_gens),
        },
        ker_t,
        ker_n,
        proj_t: qt.projection_matrix(),
        proj_n: qn.projection_matrix(),
    }
}

/// Plain cohomology dimension of a matrix complex at position i.
pub fn plain_cohomology_dim(dims: &[usize], mats: &[Mat], i: usize) -> usize {
    let ker = if i < mats.len() { dims[i] - mats[i].rank() } else { dims[i] };
    let im = if i > 0 { mats[i - 1].rank() } else { 0 };
    ker - im
}

// ---------------------------------------------------------------------------
// The Hochschild complex as a constraint complex
// ---------------------------------------------------------------------------

/// Hochschild cochain spaces `C^n(A) = ConHom(A^{(x)n}, A)`, with
/// conversions between hom coordinates and cochain tables.
pub struct HochschildSpaces {
    pub algebra: ConAlg,
    pub homs: Vec<HomSpace>,
    pub powers: Vec<ConVect>,
}

impl HochschildSpaces {
    pub fn build(a: &ConAlg, max_degree: usize) -> Self {
        let mut powers = Vec::new();
        let mut cur = ConVect::unit();
        powers.push(cur.clone());
        for _ in 0..max_degree {
            cur = tensor_k(&cur, &a.carrier);
            powers.push(cur.clone());
        }
        let homs = powers.iter().map(|p| hom_space(p, &a.carrier)).collect();
        HochschildSpaces { algebra: a.clone(), homs, powers }
    }

    /// The flat pair vector of a level-N cochain.
    pub fn cochain_to_flat(&self, c: &Cochain) -> Vec<Q> {
        let (t, n, _) = self.algebra.dim();
        let te = pow_len(t, c.degree);
        let ne = pow_len(n, c.degree);
        let mut flat = vec![Q::zero(); t * te + n * ne];
        for (idx, val) in c.val_t.iter().enumerate() {
            for (r, v) in val.iter().enumerate() {
                flat[r * te + idx] = v.clone();
            }
        }
        for (idx, val) in c.val_n.iter().enumerate() {
            for (r, v) in val.iter().enumerate() {
                flat[t * te + r * ne + idx] = v.clone();
            }
        }
        flat
    }

    pub fn cochain_from_n_coords(&self, degree: usize, coords: &[Q]) -> Cochain {
        let h = &self.homs[degree];
        let m = h.map_of_n_coords(coords);
        let (t, n, _) = self.algebra.dim();
        let te = pow_len(t, degree);
        let ne = pow_len(n, degree);
        let mut val_t = vec![vec![Q::zero(); t]; te];
        for (idx, val) in val_t.iter_mut().enumerate() {
            for (r, cell) in val.iter_mut().enumerate() {
                *cell = m.phi_t.at(r, idx).clone();
            }
        }
        let mut val_n = vec![vec![Q::zero(); n]; ne];
        for (idx, val) in val_n.iter_mut().enumerate() {
            for (r, cell) in val.iter_mut().enumerate() {
                *cell = m.phi_n.at(r, idx).clone();
            }
        }
        Cochain { degree, level: Level::N, val_t, val_n }
    }

    pub fn n_coords_of_cochain(&self, c: &Cochain) -> Option<Vec<Q>> {
        let flat = self.cochain_to_flat(c);
        Subspace::span_vecs(flat.len(), &self.homs[c.degree].n_basis).coords_of(&flat)
    }

    /// The matrix of the Hochschild differential on the N-coordinates of
    /// `C^deg -> C^{deg+1}`.
    pub fn delta_matrix_n(&self, deg: usize) -> Mat {
        let src = &self.homs[deg];
        let dst = &self.homs[deg + 1];
        let mut phi_n = Mat::zeros(dst.space.dim_n, src.space.dim_n);
        for c in 0..src.space.dim_n {
            let coch = self.cochain_from_n_coords(deg, &std_basis(src.space.dim_n)[c]);
            let d = hochschild_delta(&self.algebra, &coch);
            let flat = self.cochain_to_flat(&d);
            let coords = Subspace::span_vecs(flat.len(), &dst.n_basis)
                .coords_of(&flat)
                .expect("delta preserves constraint cochains");
            for (r, v) in coords.iter().enumerate() {
                *phi_n.at_mut(r, c) = v.clone();
            }
        }
        phi_n
    }

    /// The whole Hochschild complex `C^0 .. C^max` as a constraint complex.
    pub fn complex(&self) -> ConComplex {
        let spaces: Vec<ConVect> = self.homs.iter().map(|h| h.space.clone()).collect();
        let (t, _, _) = self.algebra.dim();
        let mut diffs = Vec::new();
        for deg in 0..self.homs.len() - 1 {
            let src = &self.homs[deg];
            let dst = &self.homs[deg + 1];
            let phi_n = self.delta_matrix_n(deg);
            let te = pow_len(t, deg);
            let mut phi_t = Mat::zeros(dst.space.dim_t, src.space.dim_t);
            for c in 0..src.space.dim_t {
                let tb = &src.t_basis[c];
                let mut val_t = vec![vec![Q::zero(); t]; te];
                for (idx, val) in val_t.iter_mut().enumerate() {
                    for (r, cell) in val.iter_mut().enumerate() {
                        *cell = tb[r * te + idx].clone();
                    }
                }
                let coch = Cochain { degree: deg, level: Level::T, val_t, val_n: vec![] };
                let d = hochschild_delta(&self.algebra, &coch);
                let te2 = pow_len(t, deg + 1);
                let mut flat = vec![Q::zero(); t * te2];
                for (idx, val) in d.val_t.iter().enumerate() {
                    for (r, v) in val.iter().enumerate() {
                        flat[r * te2 + idx] = v.clone();
                    }
                }
                let coords = Subspace::span_vecs(flat.len(), &dst.t_basis)
                    .coords_of(&flat)
                    .expect("delta lands in the T-space");
                for (r, v) in coords.iter().enumerate() {
                    *phi_t.at_mut(r, c) = v.clone();
                }
            }
            diffs.push(ConLinMap { phi_t, phi_n });
        }
        ConComplex { lo: 0, spaces, diffs }
    }
}

/// HH^0 and HH^1 together with the comparison to the center and to
/// derivations-mod-inner; the identifications are checked as subspace
/// equalities in shared coordinates.
pub fn hh_low(a: &ConAlg) -> Result<(ConVect, ConVect), KError> {
    let hs = HochschildSpaces::build(a, 2);
    let cx = hs.complex();
    cx.validate()?;
    let h0 = cohomology_at(&cx, 0);
    let h1 = cohomology_at(&cx, 1);
    let c = center(a);
    // Kernels expanded to ambient flat (pair) coordinates.
    let expand = |coords: &[Q], basis: &[Vec<Q>], dim: usize| -> Vec<Q> {
        let mut flat = vec![Q::zero(); dim];
        for (b, cf) in basis.iter().zip(coords) {
            for (k, v) in b.iter().enumerate() {
                let t = &flat[k] + cf * v;
                flat[k] = t;
            }
        }
        flat
    };
    let pair0 = a.carrier.dim_t + a.carrier.dim_n;
    let ker0_flat: Vec<Vec<Q>> = h0
        .ker_n
        .basis_vecs()
        .iter()
        .map(|v| expand(v, &hs.homs[0].n_basis, pair0))
        .collect();
    let cen_pairs: Vec<Vec<Q>> = c
        .n_basis
        .iter()
        .map(|v| {
            let mut p = a.carrier.iota.apply(v);
            p.extend(v.clone());
            p
        })
        .collect();
    if Subspace::span_vecs(pair0, &cen_pairs) != Subspace::span_vecs(pair0, &ker0_flat) {
        return Err(KError::ShapeMismatch("HH^0 N-part differs from the center".into()));
    }
    let t0 = a.carrier.dim_t;
    let ker0_t_flat: Vec<Vec<Q>> = h0
        .ker_t
        .basis_vecs()
        .iter()
        .map(|v| expand(v, &hs.homs[0].t_basis, t0))
        .collect();
    let cen_t = Subspace::span_vecs(t0, &c.t_basis);
    if Subspace::span_vecs(t0, &ker0_t_flat) != cen_t {
        return Err(KError::ShapeMismatch("HH^0 T-part differs from the center".into()));
    }
    if h0.space.dim() != c.space.dim() {
        return Err(KError::ShapeMismatch("HH^0 dims differ from the center".into()));
    }
    let bimod = ConMod::regular_bimodule(a);
    let ders = derivations(a, &bimod);
    let pair1 = a.carrier.dim_t * a.carrier.dim_t + a.carrier.dim_n * a.carrier.dim_n;
    let ker1_flat: Vec<Vec<Q>> = h1
        .ker_n
        .basis_vecs()
        .iter()
        .map(|v| expand(v, &hs.homs[1].n_basis, pair1))
        .collect();
    if Subspace::span_vecs(pair1, &ders.n_basis) != Subspace::span_vecs(pair1, &ker1_flat) {
        return Err(KError::ShapeMismatch("HH^1 N-kernel differs from ConDer".into()));
    }
    let inner = inner_derivations(a, &bimod, &ders);
    let inner_flat: Vec<Vec<Q>> =
        inner.n_coords.iter().map(|cf| expand(cf, &ders.n_basis, pair1)).collect();
    let im_flat: Vec<Vec<Q>> = (0..cx.diffs[0].phi_n.cols())
        .map(|cidx| expand(&cx.diffs[0].phi_n.col(cidx), &hs.homs[1].n_basis, pair1))
        .collect();
    if Subspace::span_vecs(pair1, &inner_flat) != Subspace::span_vecs(pair1, &im_flat) {
        return Err(KError::ShapeMismatch("image of delta^0 differs from ConInnDer".into()));
    }
    Ok((h0.space, h1.space))
}

// ---------------------------------------------------------------------------
// Deformations, gauge group, obstructions
// ---------------------------------------------------------------------------

/// A truncated formal associative deformation `mu = mu_0 + sum l^k mu_k`.
#[derive(Clone, Debug)]
pub struct Deformation {
    pub base: ConAlg,
    /// `terms[k-1]` is the coefficient of lambda^k; level-N, degree 2.
    pub terms: Vec<Cochain>,
}

impl Deformation {
    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn undeformed(a: &ConAlg, order: usize) -> Self {
        Deformation {
            base: a.clone(),
            terms: (0..order).map(|_| Cochain::zero(a, 2, Level::N)).collect(),
        }
    }
}

/// The lambda^k coefficient of `delta M + 1/2 [M, M]`.
pub fn mc_defect(mu: &Deformation, k: usize) -> Result<Cochain, KError> {
    if k == 0 || k > mu.order() {
        return Err(KError::OrderMismatch(format!("order {k} out of range")));
    }
    let a = &mu.base;
    let mut defect = hochschild_delta(a, &mu.terms[k - 1]);
    for l in 1..k {
        let br = gerstenhaber(a, &mu.terms[l - 1], &mu.terms[k - l - 1]);
        defect = defect.add(&br.scale(&qr(1, 2)));
    }
    Ok(defect)
}

/// True if the defects vanish at every order up to the truncation.
pub fn deformation_valid(mu: &Deformation) -> Result<bool, KError> {
    for k in 1..=mu.order() {
        if !mc_defect(mu, k)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A gauge element `lambda D = sum_{k>=1} lambda^k D_k` of degree-1
/// level-N cochains.
#[derive(Clone, Debug)]
pub struct GaugeElt {
    pub base: ConAlg,
    pub terms: Vec<Cochain>,
}

impl GaugeElt {
    pub fn zero(a: &ConAlg, order: usize) -> Self {
        GaugeElt {
            base: a.clone(),
            terms: (0..order).map(|_| Cochain::zero(a, 1, Level::N)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }
}

fn series_bracket(a: &ConAlg, x: &[Cochain], y: &[Cochain], order: usize) -> Vec<Cochain> {
    let mut out: Vec<Cochain> = (0..order).map(|_| Cochain::zero(a, 1, Level::N)).collect();
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            let k = i + j + 2;
            if k <= order {
                out[k - 1] = out[k - 1].add(&gerstenhaber(a, xi, yj));
            }
        }
    }
    out
}

fn series_add(x: &[Cochain], y: &[Cochain]) -> Vec<Cochain> {
    x.iter().zip(y).map(|(a, b)| a.add(b)).collect()
}

fn series_scale(x: &[Cochain], s: &Q) -> Vec<Cochain> {
    x.iter().map(|c| c.scale(s)).collect()
}

/// Baker-Campbell-Hausdorff composition, truncated at the gauge order.
/// The series terms used suffice for truncation orders up to 4.
pub fn gauge_compose(g: &GaugeElt, h: &GaugeElt) -> Result<GaugeElt, KError> {
    if g.order() != h.order() {
        return Err(KError::OrderMismatch("gauge elements of different order".into()));
    }
    let k = g.order();
    if k > 4 {
        return Err(KError::OrderMismatch("BCH truncation implemented up to order 4".into()));
    }
    let a = &g.base;
    let x = &g.terms;
    let y = &h.terms;
    let mut out = series_add(x, y);
    let xy = series_bracket(a, x, y, k);
    out = series_add(&out, &series_scale(&xy, &qr(1, 2)));
    let xxy = series_bracket(a, x, &xy, k);
    let yyx = series_bracket(a, y, &series_scale(&xy, &qi(-1)), k);
    out = series_add(&out, &series_scale(&xxy, &qr(1, 12)));
    out = series_add(&out, &series_scale(&yyx, &qr(1, 12)));
    let yxxy = series_bracket(a, y, &xxy, k);
    out = series_add(&out, &series_scale(&yxxy, &qr(-1, 24)));
    Ok(GaugeElt { base: a.clone(), terms: out })
}

/// BCH inverse: solves `g . g^{-1} = 0` order by order.
pub fn gauge_inverse(g: &GaugeElt) -> Result<GaugeElt, KError> {
    let k = g.order();
    let mut inv = GaugeElt::zero(&g.base, k);
    for ord in 1..=k {
        let comp = gauge_compose(g, &inv)?;
        inv.terms[ord - 1] = inv.terms[ord - 1].add(&comp.terms[ord - 1].scale(&qi(-1)));
    }
    Ok(inv)
}

/// Applies `ad_g` to a degree-2 lambda-series.
fn ad_series(a: &ConAlg, g: &[Cochain], series: &[Cochain], order: usize) -> Vec<Cochain> {
    let mut next: Vec<Cochain> = (0..order).map(|_| Cochain::zero(a, 2, Level::N)).collect();
    for (i, gi) in g.iter().enumerate() {
        for (j, cj) in series.iter().enumerate() {
            let kk = i + j + 2;
            if kk <= order {
                next[kk - 1] = next[kk - 1].add(&gerstenhaber(a, gi, cj));
            }
        }
    }
    next
}

/// Gauge action on truncated deformations:
/// `M' = e^{ad_g}(M) - sum_{k>=0} ad_g^k/(k+1)! (delta g)`.
pub fn gauge_act(g: &GaugeElt, mu: &Deformation) -> Result<Deformation, KError> {
    if g.order() != mu.order() {
        return Err(KError::OrderMismatch("gauge and deformation orders differ".into()));
    }
    let a = &mu.base;
    let order = mu.order();
    let mut acted: Vec<Cochain> = mu.terms.clone();
    let mut current: Vec<Cochain> = mu.terms.clone();
    let mut factorial = qi(1);
    for k in 1..=order {
        factorial *= qi(k as i64);
        current = ad_series(a, &g.terms, &current, order);
        let inv_fact = qi(1) / factorial.clone();
        for k2 in 0..order {
            acted[k2] = acted[k2].add(&current[k2].scale(&inv_fact));
        }
        if current.iter().all(|c| c.is_zero()) {
            break;
        }
    }
    // The lambda-series of delta g aligned by powers.
    let dg: Vec<Cochain> = g.terms.iter().map(|d| hochschild_delta(a, d)).collect();
    let mut corr = dg.clone();
    let mut cur = dg;
    let mut kfact = qi(1);
    for k in 1..=order {
        kfact *= qi((k + 1) as i64);
        cur = ad_series(a, &g.terms, &cur, order);
        let inv = qi(1) / kfact.clone();
        for k2 in 0..order {
            corr[k2] = corr[k2].add(&cur[k2].scale(&inv));
        }
        if cur.iter().all(|c| c.is_zero()) {
            break;
        }
    }
    let mut terms = Vec::with_capacity(order);
    for k in 0..order {
        terms.push(acted[k].add(&corr[k].scale(&qi(-1))));
    }
    let out = Deformation { base: a.clone(), terms };
    if !deformation_valid(&out)? {
        return Err(KError::ShapeMismatch("gauge action broke the MC equation".into()));
    }
    Ok(out)
}

/// Order-by-order search for a gauge equivalence; `Err(k)` inside the `Ok`
/// is the first obstructed order.
pub fn deformation_equiv(
    mu: &Deformation,
    mu2: &Deformation,
    hs: &HochschildSpaces,
) -> Result<Result<GaugeElt, usize>, KError> {
    if mu.order() != mu2.order() {
        return Err(KError::OrderMismatch("deformations of different order".into()));
    }
    let a = &mu.base;
    let order = mu.order();
    let delta1 = hs.delta_matrix_n(1);
    let mut g = GaugeElt::zero(a, order);
    for k in 1..=order {
        let nu = gauge_act(&g, mu)?;
        let residual = mu2.terms[k - 1].add(&nu.terms[k - 1].scale(&qi(-1)));
        if residual.is_zero() {
            continue;
        }
        // Adding D_k changes the order-k term by -delta(D_k).
        let rhs = hs
            .n_coords_of_cochain(&residual.scale(&qi(-1)))
            .ok_or_else(|| KError::ShapeMismatch("residual is not constraint".into()))?;
        match delta1.solve(&rhs) {
            Some(sol) => {
                g.terms[k - 1] = g.terms[k - 1].add(&hs.cochain_from_n_coords(1, &sol));
            }
            None => return Ok(Err(k)),
        }
    }
    let nu = gauge_act(&g, mu)?;
    for k in 0..order {
        if !nu.terms[k].add(&mu2.terms[k].scale(&qi(-1))).is_zero() {
            return Ok(Err(k + 1));
        }
    }
    Ok(Ok(g))
}

/// The obstruction cocycle `R_{k+1} = 1/2 sum_l [mu_l, mu_{k+1-l}]`; the
/// deformation extends iff `delta mu_{k+1} + R_{k+1} = 0` is solvable.
pub fn obstruction(mu: &Deformation, k: usize) -> Result<Cochain, KError> {
    if k != mu.order() {
        return Err(KError::OrderMismatch("obstruction at the truncation order only".into()));
    }
    let a = &mu.base;
    let mut r = Cochain::zero(a, 3, Level::N);
    for l in 1..=k {
        let other = k + 1 - l;
        if other >= 1 && other <= mu.order() {
            let br = gerstenhaber(a, &mu.terms[l - 1], &mu.terms[other - 1]);
            r = r.add(&br.scale(&qr(1, 2)));
        }
    }
    Ok(r)
}

/// Extends a valid order-k deformation to order k+1 when the obstruction
/// is exact in constraint cochains; `None` if the system is inconsistent.
pub fn extend_order(
    mu: &Deformation,
    hs: &HochschildSpaces,
) -> Result<Option<Deformation>, KError> {
    let a = &mu.base;
    let k = mu.order();
    let r = obstruction(mu, k)?;
    if !hochschild_delta(a, &r).is_zero() {
        return Err(KError::ShapeMismatch("obstruction is not closed".into()));
    }
    let delta2 = hs.delta_matrix_n(2);
    let rhs = hs
        .n_coords_of_cochain(&r.scale(&qi(-1)))
        .ok_or_else(|| KError::ShapeMismatch("obstruction is not constraint".into()))?;
    match delta2.solve(&rhs) {
        None => Ok(None),
        Some(sol) => {
            let mut terms = mu.terms.clone();
            terms.push(hs.cochain_from_n_coords(2, &sol));
            let out = Deformation { base: a.clone(), terms };
            for kk in 1..=out.order() {
                if !mc_defect(&out, kk)?.is_zero() {
                    return Err(KError::ShapeMismatch("extension is not associative".into()));
                }
            }
            Ok(Some(out))
        }
    }
}

/// The antisymmetrization `mu_1 - mu_1 . tau`; a constraint Poisson
/// bracket when the deformation is associative and the base commutative.
pub fn poisson_from_deformation(mu: &Deformation) -> Result<Cochain, KError> {
    if mu.order() < 1 {
        return Err(KError::OrderMismatch("need at least order 1".into()));
    }
    let a = &mu.base;
    let m1 = &mu.terms[0];
    let (t, n, _) = a.dim();
    let mut val_t = vec![vec![Q::zero(); t]; t * t];
    for i in 0..t {
        for j in 0..t {
            let x = &m1.val_t[i * t + j];
            let y = &m1.val_t[j * t + i];
            val_t[i * t + j] = x.iter().zip(y).map(|(u, v)| u - v).collect();
        }
    }
    let mut val_n = vec![vec![Q::zero(); n]; n * n];
    for i in 0..n {
        for j in 0..n {
            let x = &m1.val_n[i * n + j];
            let y = &m1.val_n[j * n + i];
            val_n[i * n + j] = x.iter().zip(y).map(|(u, v)| u - v).collect();
        }
    }
    let br = Cochain { degree: 2, level: Level::N, val_t, val_n };
    let basis_t = std_basis(t);
    for i in 0..t {
        for j in 0..t {
            for k in 0..t {
                let pair = |x: &Vec<Q>, y: &Vec<Q>| br.eval_t(a, &[x.clone(), y.clone()]);
                let s1 = pair(&pair(&basis_t[i], &basis_t[j]), &basis_t[k]);
                let s2 = pair(&pair(&basis_t[j], &basis_t[k]), &basis_t[i]);
                let s3 = pair(&pair(&basis_t[k], &basis_t[i]), &basis_t[j]);
                let total: Vec<Q> =
                    s1.iter().zip(&s2).zip(&s3).map(|((a, b), c)| a + b + c).collect();
                if total.iter().any(|q| !q.is_zero()) {
                    return Err(KError::ShapeMismatch("Jacobi identity fails".into()));
                }
                let lhs =
                    br.eval_t(a, &[basis_t[i].clone(), a.mul_t_vec(&basis_t[j], &basis_t[k])]);
                let r1 = a.mul_t_vec(
                    &br.eval_t(a, &[basis_t[i].clone(), basis_t[j].clone()]),
                    &basis_t[k],
                );
                let r2 = a.mul_t_vec(
                    &basis_t[j],
                    &br.eval_t(a, &[basis_t[i].clone(), basis_t[k].clone()]),
                );
                let rhs: Vec<Q> = r1.iter().zip(&r2).map(|(u, v)| u + v).collect();
                if lhs != rhs {
                    return Err(KError::ShapeMismatch("Leibniz rule fails".into()));
                }
            }
        }
    }
    cochain_validate(a, &br)?;
    Ok(br)
}

/// Validation report for the constraint-DGLA axioms of the Hochschild
/// complex on sample cochains.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DglaReport {
    pub delta_squared_zero: bool,
    pub graded_jacobi: bool,
    pub bracket_levels: bool,
    pub delta_bracket_leibniz: bool,
    pub cup_delta_derivation: bool,
}

impl DglaReport {
    pub fn ok(&self) -> bool {
        self.delta_squared_zero
            && self.graded_jacobi
            && self.bracket_levels
            && self.delta_bracket_leibniz
            && self.cup_delta_derivation
    }
}

pub fn dgla_validate(a: &ConAlg, samples: &[Cochain]) -> Result<DglaReport, KError> {
    for c in samples {
        cochain_validate(a, c)?;
    }
    let mut report = DglaReport {
        delta_squared_zero: true,
        graded_jacobi: true,
        bracket_levels: true,
        delta_bracket_leibniz: true,
        cup_delta_derivation: true,
    };
    for c in samples {
        if !hochschild_delta(a, &hochschild_delta(a, c)).is_zero() {
            report.delta_squared_zero = false;
        }
    }
    let sgn = |k: i64| if k.rem_euclid(2) == 0 { qi(1) } else { qi(-1) };
    for x in samples {
        for y in samples {
            let br = gerstenhaber(a, x, y);
            let expected = bracket_level(x.level, y.level);
            if cochain_level(a, &br) < expected {
                report.bracket_levels = false;
            }
            let d_x = hochschild_delta(a, x);
            let d_y = hochschild_delta(a, y);
            // With delta = -[., mu] the differential satisfies
            // delta [x,y] = (-1)^{|y|-1} [delta x, y] + [x, delta y]
            // in the shifted grading. Pairs of 0-cochains are skipped:
            // their bracket lives in the zero space of degree -1.
            if x.degree + y.degree > 0 {
                let lhs = hochschild_delta(a, &br);
                let rhs = gerstenhaber(a, &d_x, y)
                    .scale(&sgn(y.degree as i64 - 1))
                    .add(&gerstenhaber(a, x, &d_y));
                if !lhs.add(&rhs.scale(&qi(-1))).is_zero() {
                    report.delta_bracket_leibniz = false;
                }
            }
            // delta (x u y) = delta x u y + (-1)^{|x|} x u delta y.
            let cu = cup(a, x, y);
            let lhs2 = hochschild_delta(a, &cu);
            let rhs2 = cup(a, &d_x, y).add(&cup(a, x, &d_y).scale(&sgn(x.degree as i64)));
            if !lhs2.add(&rhs2.scale(&qi(-1))).is_zero() {
                report.cup_delta_derivation = false;
            }
            for z in samples {
                // Skip instances whose intermediates fall into degree -1.
                if x.degree + y.degree == 0
                    || y.degree + z.degree == 0
                    || x.degree + z.degree == 0
                    || x.degree + y.degree + z.degree <= 1
                {
                    continue;
                }
                let dx = x.degree as i64 - 1;
                let dy = y.degree as i64 - 1;
                let lhs3 = gerstenhaber(a, x, &gerstenhaber(a, y, z));
                let rhs3 = gerstenhaber(a, &gerstenhaber(a, x, y), z)
                    .add(&gerstenhaber(a, y, &gerstenhaber(a, x, z)).scale(&sgn(dx * dy)));
                if !lhs3.add(&rhs3.scale(&qi(-1))).is_zero() {
                    report.graded_jacobi = false;
                }
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Reduction of cochains
// ---------------------------------------------------------------------------

/// Reduces a level-N cochain to a classical cochain on `A_red`.
pub fn hochschild_reduce(a: &ConAlg, c: &Cochain) -> Result<(PlainAlg, Vec<Vec<Q>>), KError> {
    if c.level == Level::T {
        return Err(KError::LevelTOnly("cannot reduce a T-only cochain".into()));
    }
    let (red, chart) = reduce_algebra(a);
    let d = red.dim;
    let mut table = vec![vec![Q::zero(); d]; pow_len(d, c.degree)];
    for (idx, cell) in table.iter_mut().enumerate() {
        let tuple = unflatten(idx, d, c.degree);
        let args: Vec<Vec<Q>> = tuple.iter().map(|&i| chart.section(&std_basis(d)[i])).collect();
        *cell = chart.project(&c.eval_n(a, &args));
    }
    Ok((red, table))
}

/// Classical Hochschild differential over a plain algebra.
pub fn plain_hochschild_delta(alg: &PlainAlg, table: &[Vec<Q>], degree: usize) -> Vec<Vec<Q>> {
    let d = alg.dim;
    let basis = std_basis(d);
    let mut out = vec![vec![Q::zero(); d]; pow_len(d, degree + 1)];
    for (idx, cell) in out.iter_mut().enumerate() {
        let tuple = unflatten(idx, d, degree + 1);
        let fv = &table[flatten(&tuple[1..], d)];
        for (k, v) in alg.mul_vec(&basis[tuple[0]], fv).iter().enumerate() {
            cell[k] += v;
        }
        for i in 0..degree {
            let sign = if (i + 1) % 2 == 0 { qi(1) } else { qi(-1) };
            let prod = alg.mul_vec(&basis[tuple[i]], &basis[tuple[i + 1]]);
            for (pi, pv) in prod.iter().enumerate() {
                if pv.is_zero() {
                    continue;
                }
                let mut inner = Vec::with_capacity(degree);
                inner.extend_from_slice(&tuple[..i]);
                inner.push(pi);
                inner.extend_from_slice(&tuple[i + 2..]);
                for (k, v) in table[flatten(&inner, d)].iter().enumerate() {
                    if !v.is_zero() {
                        cell[k] += &sign * pv * v;
                    }
                }
            }
        }
        let sign = if (degree + 1) % 2 == 0 { qi(1) } else { qi(-1) };
        let fv = &table[flatten(&tuple[..degree], d)];
        for (k, v) in alg.mul_vec(fv, &basis[tuple[degree]]).iter().enumerate() {
            cell[k] += &sign * v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_cochain(hs: &HochschildSpaces, degree: usize, rng: &mut StdRng) -> Cochain {
        let dim = hs.homs[degree].space.dim_n;
        let coords: Vec<Q> = (0..dim).map(|_| qi(rng.gen_range(-3..=3))).collect();
        hs.cochain_from_n_coords(degree, &coords)
    }

    #[test]
    fn delta_of_zero_cochain_is_commutator() {
        let u = ConAlg::upper_triangular();
        let e12 = Cochain {
            degree: 0,
            level: Level::T,
            val_t: vec![vec![Q::zero(), qi(1), Q::zero()]],
            val_n: vec![],
        };
        let d2 = hochschild_delta(&u, &e12);
        // (delta E12)(E11) = E11 E12 - E12 E11 = E12.
        assert_eq!(d2.val_t[0], vec![Q::zero(), qi(1), Q::zero()]);
        // (delta E12)(E22) = E22 E12 - E12 E22 = -E12.
        assert_eq!(d2.val_t[2], vec![Q::zero(), qi(-1), Q::zero()]);
    }

    #[test]
    fn delta_equals_minus_bracket_with_mu() {
        let a = ConAlg::upper_triangular();
        let hs = HochschildSpaces::build(&a, 2);
        let mut rng = StdRng::seed_from_u64(7);
        let mu = Cochain::multiplication(&a);
        for deg in 0..=2 {
            let c = random_cochain(&hs, deg, &mut rng);
            let lhs = hochschild_delta(&a, &c);
            let rhs = gerstenhaber(&a, &c, &mu).scale(&qi(-1));
            assert_eq!(lhs.val_t, rhs.val_t, "degree {deg}");
            assert_eq!(lhs.val_n, rhs.val_n, "degree {deg}");
        }
    }

    #[test]
    fn delta_squared_zero_random() {
        let mut rng = StdRng::seed_from_u64(42);
        for a in [ConAlg::dual_numbers(), ConAlg::upper_triangular()] {
            let hs = HochschildSpaces::build(&a, 2);
            for _ in 0..20 {
                let deg = rng.gen_range(0..=2usize);
                let c = random_cochain(&hs, deg, &mut rng);
                cochain_validate(&a, &c).unwrap();
                assert!(hochschild_delta(&a, &hochschild_delta(&a, &c)).is_zero());
            }
        }
    }

    #[test]
    fn associativity_iff_bracket_vanishes() {
        let a = ConAlg::dual_numbers();
        let mu = Cochain::multiplication(&a);
        assert!(gerstenhaber(&a, &mu, &mu).is_zero());
        // 1 . eps := 1 breaks associativity: (1.eps).eps = eps but
        // 1.(eps.eps) = 0.
        let mut bad = a.clone();
        bad.mul_t[0][1] = vec![qi(1), Q::zero()];
        let mu_bad = Cochain::multiplication(&bad);
        assert!(!gerstenhaber(&bad, &mu_bad, &mu_bad).is_zero());
    }

    #[test]
    fn hh_low_dual_numbers() {
        let a = ConAlg::dual_numbers();
        let (h0, h1) = hh_low(&a).unwrap();
        assert_eq!(h0.dim(), (2, 1, 0));
        assert_eq!(h1.dim(), (1, 1, 1));
        let s = ConAlg::scalar();
        let (h0s, h1s) = hh_low(&s).unwrap();
        assert_eq!(h0s.dim(), (1, 1, 0));
        assert_eq!(h1s.dim(), (0, 0, 0));
    }

    #[test]
    fn gauge_acts_and_preserves_mc() {
        let a = ConAlg::dual_numbers();
        let hs = HochschildSpaces::build(&a, 3);
        let mut rng = StdRng::seed_from_u64(5);
        let mu = Deformation::undeformed(&a, 3);
        let g0 = GaugeElt::zero(&a, 3);
        let acted = gauge_act(&g0, &mu).unwrap();
        assert!(acted.terms.iter().all(|t| t.is_zero()));
        for _ in 0..5 {
            let g = GaugeElt {
                base: a.clone(),
                terms: (0..3).map(|_| random_cochain(&hs, 1, &mut rng)).collect(),
            };
            let nu = gauge_act(&g, &mu).unwrap();
            assert!(deformation_valid(&nu).unwrap());
            let ginv = gauge_inverse(&g).unwrap();
            let comp = gauge_compose(&g, &ginv).unwrap();
            assert!(comp.terms.iter().all(|t| t.is_zero()));
        }
    }

    #[test]
    fn equivalence_finds_witness() {
        let a = ConAlg::dual_numbers();
        let hs = HochschildSpaces::build(&a, 3);
        let mu = Deformation::undeformed(&a, 2);
        let w = deformation_equiv(&mu, &mu, &hs).unwrap().unwrap();
        assert!(w.terms.iter().all(|t| t.is_zero()));
        let mut rng = StdRng::seed_from_u64(11);
        let g = GaugeElt {
            base: a.clone(),
            terms: (0..2).map(|_| random_cochain(&hs, 1, &mut rng)).collect(),
        };
        let nu = gauge_act(&g, &mu).unwrap();
        assert!(deformation_equiv(&mu, &nu, &hs).unwrap().is_ok());
    }

    #[test]
    fn obstruction_closed_and_extension() {
        let a = ConAlg::dual_numbers();
        let hs = HochschildSpaces::build(&a, 3);
        let mu0 = Deformation::undeformed(&a, 0);
        assert_eq!(obstruction(&mu0, 0).unwrap().degree, 3);
        let ext = extend_order(&mu0, &hs).unwrap().unwrap();
        assert_eq!(ext.order(), 1);
        assert!(deformation_valid(&ext).unwrap());
    }

    #[test]
    fn dgla_axioms_hold_on_samples() {
        let a = ConAlg::upper_triangular();
        let hs = HochschildSpaces::build(&a, 2);
        let mut rng = StdRng::seed_from_u64(3);
        let samples: Vec<Cochain> =
            (0..3).map(|d| random_cochain(&hs, d % 3, &mut rng)).collect();
        let report = dgla_validate(&a, &samples).unwrap();
        assert!(report.ok(), "{report:?}");
    }

    #[test]
    fn reduce_commutes_with_delta() {
        let a = ConAlg::conmap(
            &crate::conset::FinConSet::new(
                vec!["a".into(), "b".into(), "c".into()],
                vec!["a".into(), "b".into()],
                std::collections::BTreeMap::from([
                    ("a".into(), "a".into()),
                    ("b".into(), "b".into()),
                ]),
                vec![vec!["a".into(), "b".into()]],
            )
            .unwrap(),
        )
        .unwrap();
        let hs = HochschildSpaces::build(&a, 2);
        let mut rng = StdRng::seed_from_u64(19);
        for deg in 0..=1usize {
            let c = random_cochain(&hs, deg, &mut rng);
            let (red, table) = hochschild_reduce(&a, &c).unwrap();
            let d_then_reduce = hochschild_reduce(&a, &hochschild_delta(&a, &c)).unwrap().1;
            let reduce_then_d = plain_hochschild_delta(&red, &table, deg);
            assert_eq!(d_then_reduce, reduce_then_d);
        }
        let z = Cochain::zero(&a, 1, Level::Zero);
        let (_, table) = hochschild_reduce(&a, &z).unwrap();
        assert!(table.iter().all(|v| v.iter().all(|q| q.is_zero())));
        let t_only = Cochain::zero(&a, 1, Level::T);
        assert!(matches!(hochschild_reduce(&a, &t_only), Err(KError::LevelTOnly(_))));
    }

    #[test]
    fn poisson_from_commutative_undeformed() {
        let a = ConAlg::dual_numbers();
        let mu = Deformation::undeformed(&a, 1);
        let br = poisson_from_deformation(&mu).unwrap();
        assert!(br.is_zero());
    }

    #[test]
    fn undeformed_truncation_is_valid() {
        let a = ConAlg::dual_numbers();
        let flat = Deformation::undeformed(&a, 3);
        for k in 1..=3 {
            assert!(mc_defect(&flat, k).unwrap().is_zero());
        }
        assert!(matches!(mc_defect(&flat, 4), Err(KError::OrderMismatch(_))));
    }
}
