//! Finite constraint sets, constraint index sets, group actions and their
//! reduction.
//!
//! A constraint set is a map `iota: N -> T` of finite sets with an
//! equivalence relation on N; a constraint index set replaces the relation
//! by a distinguished subset of N. Elements are opaque string ids and all
//! constructed elements use canonical compound ids, so equality is
//! syntactic.

use crate::KError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type Elem = String;

fn pair_id(a: &str, b: &str) -> Elem {
    format!("({a},{b})")
}

fn class_id(members: &[Elem]) -> Elem {
    format!("[{}]", members.first().map(String::as_str).unwrap_or(""))
}

/// Disjoint-union tags for coproducts.
fn inl(a: &str) -> Elem {
    format!("l({a})")
}
fn inr(a: &str) -> Elem {
    format!("r({a})")
}

fn sorted_unique(mut v: Vec<Elem>) -> Vec<Elem> {
    v.sort();
    v.dedup();
    v
}

/// Union-find over a fixed element list; used for generated equivalence
/// relations (pushforward along maps, coequalizers).
struct UnionFind {
    index: BTreeMap<Elem, usize>,
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(elems: &[Elem]) -> Self {
        let index = elems.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        UnionFind { index, parent: (0..elems.len()).collect() }
    }
    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }
    fn union(&mut self, a: &Elem, b: &Elem) {
        let (i, j) = (self.index[a], self.index[b]);
        let (ri, rj) = (self.find(i), self.find(j));
        if ri != rj {
            self.parent[ri.max(rj)] = ri.min(rj);
        }
    }
    fn blocks(&mut self, elems: &[Elem]) -> Vec<Vec<Elem>> {
        let mut map: BTreeMap<usize, Vec<Elem>> = BTreeMap::new();
        for e in elems {
            let i = self.index[e];
            let r = self.find(i);
            map.entry(r).or_default().push(e.clone());
        }
        canonical_partition(map.into_values().collect())
    }
}

fn canonical_partition(mut blocks: Vec<Vec<Elem>>) -> Vec<Vec<Elem>> {
    for b in &mut blocks {
        b.sort();
        b.dedup();
    }
    blocks.retain(|b| !b.is_empty());
    blocks.sort();
    blocks
}

/// A finite set with an equivalence relation and structure map, the
/// object of the category of constraint sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinConSet {
    #[serde(rename = "T")]
    pub elems_t: Vec<Elem>,
    #[serde(rename = "N")]
    pub elems_n: Vec<Elem>,
    pub iota: BTreeMap<Elem, Elem>,
    /// Blocks of the equivalence relation on N; canonical form.
    pub classes: Vec<Vec<Elem>>,
}

impl FinConSet {
    pub fn new(
        elems_t: Vec<Elem>,
        elems_n: Vec<Elem>,
        iota: BTreeMap<Elem, Elem>,
        classes: Vec<Vec<Elem>>,
    ) -> Result<Self, KError> {
        let s = FinConSet {
            elems_t: sorted_unique(elems_t),
            elems_n: sorted_unique(elems_n),
            iota,
            classes: canonical_partition(classes),
        };
        s.validate()?;
        Ok(s)
    }

    /// Discrete relation on the given sets.
    pub fn discrete(
        elems_t: Vec<Elem>,
        elems_n: Vec<Elem>,
        iota: BTreeMap<Elem, Elem>,
    ) -> Result<Self, KError> {
        let classes = elems_n.iter().map(|e| vec![e.clone()]).collect();
        Self::new(elems_t, elems_n, iota, classes)
    }

    fn validate(&self) -> Result<(), KError> {
        for x in &self.elems_n {
            let t = self.iota.get(x).ok_or_else(|| {
                KError::ShapeMismatch(format!("iota not defined on {x:?}"))
            })?;
            if !self.elems_t.contains(t) {
                return Err(KError::ShapeMismatch(format!("iota({x:?}) outside T")));
            }
        }
        let covered: Vec<Elem> = self.classes.iter().flatten().cloned().collect();
        if sorted_unique(covered.clone()) != self.elems_n || covered.len() != self.elems_n.len() {
            return Err(KError::ShapeMismatch("partition does not cover N".into()));
        }
        Ok(())
    }

    pub fn class_of(&self, x: &Elem) -> &[Elem] {
        self.classes.iter().find(|b| b.contains(x)).expect("element not in N")
    }

    pub fn same_class(&self, x: &Elem, y: &Elem) -> bool {
        self.class_of(x).contains(y)
    }

    pub fn is_embedded(&self) -> bool {
        let images: BTreeSet<&Elem> = self.elems_n.iter().map(|x| &self.iota[x]).collect();
        images.len() == self.elems_n.len()
    }

    /// The final object `({pt},{pt},~)`.
    pub fn point() -> Self {
        let pt = "pt".to_string();
        FinConSet {
            elems_t: vec![pt.clone()],
            elems_n: vec![pt.clone()],
            iota: BTreeMap::from([(pt.clone(), pt.clone())]),
            classes: vec![vec![pt]],
        }
    }

    pub fn empty() -> Self {
        FinConSet { elems_t: vec![], elems_n: vec![], iota: BTreeMap::new(), classes: vec![] }
    }
}

/// A morphism of constraint sets: a compatible pair of function tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConSetMap {
    #[serde(rename = "fT")]
    pub f_t: BTreeMap<Elem, Elem>,
    #[serde(rename = "fN")]
    pub f_n: BTreeMap<Elem, Elem>,
}

impl ConSetMap {
    pub fn identity(m: &FinConSet) -> Self {
        ConSetMap {
            f_t: m.elems_t.iter().map(|e| (e.clone(), e.clone())).collect(),
            f_n: m.elems_n.iter().map(|e| (e.clone(), e.clone())).collect(),
        }
    }

    pub fn validate(&self, dom: &FinConSet, cod: &FinConSet) -> Result<(), KError> {
        for x in &dom.elems_t {
            let y = self.f_t.get(x).ok_or_else(|| {
                KError::ShapeMismatch(format!("f_T undefined on {x:?}"))
            })?;
            if !cod.elems_t.contains(y) {
                return Err(KError::ShapeMismatch(format!("f_T({x:?}) outside codomain")));
            }
        }
        for x in &dom.elems_n {
            let y = self.f_n.get(x).ok_or_else(|| {
                KError::ShapeMismatch(format!("f_N undefined on {x:?}"))
            })?;
            if !cod.elems_n.contains(y) {
                return Err(KError::ShapeMismatch(format!("f_N({x:?}) outside codomain")));
            }
            if self.f_t[&dom.iota[x]] != cod.iota[y] {
                return Err(KError::ShapeMismatch(format!(
                    "square does not commute at {x:?}"
                )));
            }
        }
        for block in &dom.classes {
            for x in block {
                for y in block {
                    if !cod.same_class(&self.f_n[x], &self.f_n[y]) {
                        return Err(KError::ShapeMismatch(format!(
                            "relation not preserved at {x:?} ~ {y:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn compose(&self, first: &ConSetMap) -> ConSetMap {
        // self after first.
        ConSetMap {
            f_t: first.f_t.iter().map(|(x, y)| (x.clone(), self.f_t[y].clone())).collect(),
            f_n: first.f_n.iter().map(|(x, y)| (x.clone(), self.f_n[y].clone())).collect(),
        }
    }
}

/// Classification flags of a constraint morphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapClass {
    pub mono: bool,
    pub epi: bool,
    pub regular_mono: bool,
    pub regular_epi: bool,
    pub iso: bool,
}

fn injective(f: &BTreeMap<Elem, Elem>, dom: &[Elem]) -> bool {
    let imgs: BTreeSet<&Elem> = dom.iter().map(|x| &f[x]).collect();
    imgs.len() == dom.len()
}

fn surjective(f: &BTreeMap<Elem, Elem>, dom: &[Elem], cod: &[Elem]) -> bool {
    let imgs: BTreeSet<&Elem> = dom.iter().map(|x| &f[x]).collect();
    cod.iter().all(|y| imgs.contains(y))
}

/// Pushforward relation `f_*(~_dom)` on the codomain N-part, generated by
/// `f(x) ~ f(x')` for `x ~ x'`; discrete outside the image.
fn pushforward_partition(
    f_n: &BTreeMap<Elem, Elem>,
    dom: &FinConSet,
    cod_elems_n: &[Elem],
) -> Vec<Vec<Elem>> {
    let mut uf = UnionFind::new(cod_elems_n);
    for block in &dom.classes {
        for pair in block.windows(2) {
            uf.union(&f_n[&pair[0]], &f_n[&pair[1]]);
        }
    }
    uf.blocks(cod_elems_n)
}

/// Membership test for the pullback relation `f^*(~_cod)`.
fn pullback_related(f_n: &BTreeMap<Elem, Elem>, cod: &FinConSet, x: &Elem, y: &Elem) -> bool {
    cod.same_class(&f_n[x], &f_n[y])
}

pub fn classify_map(m: &ConSetMap, dom: &FinConSet, cod: &FinConSet) -> MapClass {
    let mono = injective(&m.f_t, &dom.elems_t) && injective(&m.f_n, &dom.elems_n);
    let epi = surjective(&m.f_t, &dom.elems_t, &cod.elems_t)
        && surjective(&m.f_n, &dom.elems_n, &cod.elems_n);
    // Regular mono: mono and the pullback relation equals the domain one.
    let regular_mono = mono
        && dom.elems_n.iter().all(|x| {
            dom.elems_n
                .iter()
                .all(|y| dom.same_class(x, y) == pullback_related(&m.f_n, cod, x, y))
        });
    // Regular epi: epi and the codomain relation is the pushforward.
    let regular_epi =
        epi && pushforward_partition(&m.f_n, dom, &cod.elems_n) == cod.classes;
    let iso = mono && regular_epi;
    debug_assert_eq!(iso, regular_mono && epi);
    MapClass { mono, epi, regular_mono, regular_epi, iso }
}

/// Kinds of finite limits provided for constraint sets.
pub enum LimitKind<'a> {
    Product(&'a FinConSet, &'a FinConSet),
    Pullback { f: &'a ConSetMap, h: &'a ConSetMap, m: &'a FinConSet, p: &'a FinConSet, n: &'a FinConSet },
    Equalizer { f: &'a ConSetMap, g: &'a ConSetMap, m: &'a FinConSet, n: &'a FinConSet },
    Final,
}

pub enum ColimitKind<'a> {
    Coproduct(&'a FinConSet, &'a FinConSet),
    Coequalizer { f: &'a ConSetMap, g: &'a ConSetMap, m: &'a FinConSet, n: &'a FinConSet },
    Initial,
}

pub struct LimitResult {
    pub object: FinConSet,
    /// Cone maps out of the limit object (projections / equalizer inclusion).
    pub legs: Vec<ConSetMap>,
}

pub struct ColimitResult {
    pub object: FinConSet,
    /// Cocone maps into the colimit object (injections / quotient map).
    pub legs: Vec<ConSetMap>,
}

pub fn conset_limit(kind: LimitKind<'_>) -> Result<LimitResult, KError> {
    match kind {
        LimitKind::Final => {
            Ok(LimitResult { object: FinConSet::point(), legs: vec![] })
        }
        LimitKind::Product(m, n) => {
            let elems_t: Vec<Elem> = m
                .elems_t
                .iter()
                .flat_map(|a| n.elems_t.iter().map(move |b| pair_id(a, b)))
                .collect();
            let elems_n: Vec<Elem> = m
                .elems_n
                .iter()
                .flat_map(|a| n.elems_n.iter().map(move |b| pair_id(a, b)))
                .collect();
            let iota = m
                .elems_n
                .iter()
                .flat_map(|a| {
                    n.elems_n
                        .iter()
                        .map(move |b| (pair_id(a, b), pair_id(&m.iota[a], &n.iota[b])))
                })
                .collect();
            let classes = m
                .classes
                .iter()
                .flat_map(|ba| {
                    n.classes.iter().map(move |bb| {
                        ba.iter()
                            .flat_map(|a| bb.iter().map(move |b| pair_id(a, b)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            let object = FinConSet::new(elems_t, elems_n, iota, classes)?;
            let pr1 = projection_map(&object, 0);
            let pr2 = projection_map(&object, 1);
            Ok(LimitResult { object, legs: vec![pr1, pr2] })
        }
        LimitKind::Pullback { f, h, m, p, n } => {
            f.validate(m, n)?;
            h.validate(p, n)?;
            let elems_t: Vec<Elem> = m
                .elems_t
                .iter()
                .flat_map(|a| p.elems_t.iter().map(move |b| (a, b)))
                .filter(|(a, b)| f.f_t[*a] == h.f_t[*b])
                .map(|(a, b)| pair_id(a, b))
                .collect();
            let pairs_n: Vec<(Elem, Elem)> = m
                .elems_n
                .iter()
                .flat_map(|a| p.elems_n.iter().map(move |b| (a.clone(), b.clone())))
                .filter(|(a, b)| f.f_n[a] == h.f_n[b])
                .collect();
            let elems_n: Vec<Elem> = pairs_n.iter().map(|(a, b)| pair_id(a, b)).collect();
            let iota = pairs_n
                .iter()
                .map(|(a, b)| (pair_id(a, b), pair_id(&m.iota[a], &p.iota[b])))
                .collect();
            // (x1,y1) ~ (x2,y2) iff x1 ~ x2 and y1 ~ y2.
            let mut blocks: BTreeMap<(usize, usize), Vec<Elem>> = BTreeMap::new();
            for (a, b) in &pairs_n {
                let ia = m.classes.iter().position(|bl| bl.contains(a)).unwrap();
                let ib = p.classes.iter().position(|bl| bl.contains(b)).unwrap();
                blocks.entry((ia, ib)).or_default().push(pair_id(a, b));
            }
            let object =
                FinConSet::new(elems_t, elems_n, iota, blocks.into_values().collect())?;
            let pr1 = projection_map(&object, 0);
            let pr2 = projection_map(&object, 1);
            Ok(LimitResult { object, legs: vec![pr1, pr2] })
        }
        LimitKind::Equalizer { f, g, m, n } => {
            f.validate(m, n)?;
            g.validate(m, n)?;
            let elems_t: Vec<Elem> =
                m.elems_t.iter().filter(|x| f.f_t[*x] == g.f_t[*x]).cloned().collect();
            let elems_n: Vec<Elem> =
                m.elems_n.iter().filter(|x| f.f_n[*x] == g.f_n[*x]).cloned().collect();
            let iota = elems_n.iter().map(|x| (x.clone(), m.iota[x].clone())).collect();
            let classes = m
                .classes
                .iter()
                .map(|b| b.iter().filter(|x| elems_n.contains(x)).cloned().collect())
                .collect();
            let object = FinConSet::new(elems_t.clone(), elems_n.clone(), iota, classes)?;
            let incl = ConSetMap {
                f_t: elems_t.iter().map(|x| (x.clone(), x.clone())).collect(),
                f_n: elems_n.iter().map(|x| (x.clone(), x.clone())).collect(),
            };
            Ok(LimitResult { object, legs: vec![incl] })
        }
    }
}

/// Projection out of a product-shaped object whose elements are pair ids.
fn projection_map(prod: &FinConSet, side: usize) -> ConSetMap {
    let split = |id: &str| -> Elem {
        let inner = &id[1..id.len() - 1];
        // Split at the comma that balances parentheses.
        let mut depth = 0usize;
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' | '[' => depth += 1,
                ')' | ']' => depth -= 1,
                ',' if depth == 0 => {
                    return if side == 0 {
                        inner[..i].to_string()
                    } else {
                        inner[i + 1..].to_string()
                    };
                }
                _ => {}
            }
        }
        panic!("not a pair id: {id:?}");
    };
    ConSetMap {
        f_t: prod.elems_t.iter().map(|e| (e.clone(), split(e))).collect(),
        f_n: prod.elems_n.iter().map(|e| (e.clone(), split(e))).collect(),
    }
}

pub fn conset_colimit(kind: ColimitKind<'_>) -> Result<ColimitResult, KError> {
    match kind {
        ColimitKind::Initial => Ok(ColimitResult { object: FinConSet::empty(), legs: vec![] }),
        ColimitKind::Coproduct(m, n) => {
            let elems_t: Vec<Elem> = m
                .elems_t
                .iter()
                .map(|a| inl(a))
                .chain(n.elems_t.iter().map(|b| inr(b)))
                .collect();
            let elems_n: Vec<Elem> = m
                .elems_n
                .iter()
                .map(|a| inl(a))
                .chain(n.elems_n.iter().map(|b| inr(b)))
                .collect();
            let iota = m
                .elems_n
                .iter()
                .map(|a| (inl(a), inl(&m.iota[a])))
                .chain(n.elems_n.iter().map(|b| (inr(b), inr(&n.iota[b]))))
                .collect();
            let classes = m
                .classes
                .iter()
                .map(|b| b.iter().map(|a| inl(a)).collect())
                .chain(n.classes.iter().map(|b| b.iter().map(|x| inr(x)).collect()))
                .collect();
            let object = FinConSet::new(elems_t, elems_n, iota, classes)?;
            let i1 = ConSetMap {
                f_t: m.elems_t.iter().map(|a| (a.clone(), inl(a))).collect(),
                f_n: m.elems_n.iter().map(|a| (a.clone(), inl(a))).collect(),
            };
            let i2 = ConSetMap {
                f_t: n.elems_t.iter().map(|b| (b.clone(), inr(b))).collect(),
                f_n: n.elems_n.iter().map(|b| (b.clone(), inr(b))).collect(),
            };
            Ok(ColimitResult { object, legs: vec![i1, i2] })
        }
        ColimitKind::Coequalizer { f, g, m, n } => {
            f.validate(m, n)?;
            g.validate(m, n)?;
            // Coequalizers of the component set maps via union-find.
            let mut uf_t = UnionFind::new(&n.elems_t);
            for x in &m.elems_t {
                uf_t.union(&f.f_t[x], &g.f_t[x]);
            }
            let blocks_t = uf_t.blocks(&n.elems_t);
            let mut uf_n = UnionFind::new(&n.elems_n);
            for x in &m.elems_n {
                uf_n.union(&f.f_n[x], &g.f_n[x]);
            }
            let blocks_n = uf_n.blocks(&n.elems_n);
            let q_t: BTreeMap<Elem, Elem> = blocks_t
                .iter()
                .flat_map(|b| b.iter().map(move |x| (x.clone(), class_id(b))))
                .collect();
            let q_n: BTreeMap<Elem, Elem> = blocks_n
                .iter()
                .flat_map(|b| b.iter().map(move |x| (x.clone(), class_id(b))))
                .collect();
            let elems_t: Vec<Elem> = blocks_t.iter().map(|b| class_id(b)).collect();
            let elems_n: Vec<Elem> = blocks_n.iter().map(|b| class_id(b)).collect();
            let iota: BTreeMap<Elem, Elem> = blocks_n
                .iter()
                .map(|b| (class_id(b), q_t[&n.iota[&b[0]]].clone()))
                .collect();
            // Relation: pushforward of ~_n along q_n.
            let mut uf_q = UnionFind::new(&elems_n);
            for block in &n.classes {
                for pair in block.windows(2) {
                    uf_q.union(&q_n[&pair[0]], &q_n[&pair[1]]);
                }
            }
            let classes = uf_q.blocks(&elems_n);
            let object = FinConSet::new(elems_t, elems_n, iota, classes)?;
            let q = ConSetMap { f_t: q_t, f_n: q_n };
            Ok(ColimitResult { object, legs: vec![q] })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageMode {
    Plain,
    Regular,
}

/// Image or regular image of a morphism, as a constraint set.
pub fn map_image(m: &ConSetMap, dom: &FinConSet, cod: &FinConSet, mode: ImageMode) -> FinConSet {
    let elems_t = sorted_unique(dom.elems_t.iter().map(|x| m.f_t[x].clone()).collect());
    let elems_n = sorted_unique(dom.elems_n.iter().map(|x| m.f_n[x].clone()).collect());
    let iota = elems_n.iter().map(|y| (y.clone(), cod.iota[y].clone())).collect();
    let classes = match mode {
        ImageMode::Plain => pushforward_partition(&m.f_n, dom, &elems_n),
        ImageMode::Regular => {
            // Restriction of the codomain relation to the image.
            cod.classes
                .iter()
                .map(|b| b.iter().filter(|y| elems_n.contains(y)).cloned().collect())
                .collect()
        }
    };
    FinConSet::new(elems_t, elems_n, iota, classes).expect("image is well-formed")
}

/// The reflector onto embedded constraint sets:
/// `(M_T, iota(M_N), pushforward relation)`.
pub fn conset_embed(m: &FinConSet) -> FinConSet {
    let image: Vec<Elem> = sorted_unique(m.elems_n.iter().map(|x| m.iota[x].clone()).collect());
    let mut uf = UnionFind::new(&image);
    for block in &m.classes {
        for pair in block.windows(2) {
            uf.union(&m.iota[&pair[0]], &m.iota[&pair[1]]);
        }
    }
    let classes = uf.blocks(&image);
    let iota = image.iter().map(|y| (y.clone(), y.clone())).collect();
    FinConSet::new(m.elems_t.clone(), image, iota, classes).expect("embed is well-formed")
}

/// Reduction `M_N / ~`; returns the canonical class representatives.
pub fn reduce_conset(m: &FinConSet) -> Vec<Elem> {
    m.classes.iter().map(|b| class_id(b)).collect()
}

/// The induced map on reductions.
pub fn reduce_map(m: &ConSetMap, dom: &FinConSet, cod: &FinConSet) -> BTreeMap<Elem, Elem> {
    dom.classes
        .iter()
        .map(|b| {
            let target = cod.class_of(&m.f_n[&b[0]]);
            (class_id(b), class_id(target))
        })
        .collect()
}

/// Canonical id of a T-level function table.
fn fn_table_id(dom: &[Elem], f: &BTreeMap<Elem, Elem>) -> Elem {
    let body: Vec<String> = dom.iter().map(|x| format!("{x}:{}", f[x])).collect();
    format!("{{{}}}", body.join(","))
}

/// All functions from `dom` to `cod` as tables, in lexicographic order.
pub fn all_functions(dom: &[Elem], cod: &[Elem]) -> Vec<BTreeMap<Elem, Elem>> {
    if cod.is_empty() {
        return if dom.is_empty() { vec![BTreeMap::new()] } else { vec![] };
    }
    let mut out = vec![BTreeMap::new()];
    for x in dom {
        let mut next = Vec::with_capacity(out.len() * cod.len());
        for table in &out {
            for y in cod {
                let mut t = table.clone();
                t.insert(x.clone(), y.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// All constraint morphisms `dom -> cod`.
pub fn all_conset_maps(dom: &FinConSet, cod: &FinConSet) -> Vec<ConSetMap> {
    let mut out = Vec::new();
    for f_t in all_functions(&dom.elems_t, &cod.elems_t) {
        for f_n in all_functions(&dom.elems_n, &cod.elems_n) {
            let m = ConSetMap { f_t: f_t.clone(), f_n };
            if m.validate(dom, cod).is_ok() {
                out.push(m);
            }
        }
    }
    out
}

/// The internal hom constraint set `ConMap(M,N)` with an element-count
/// guard. Elements of the T-part are function tables `M_T -> N_T`; elements
/// of the N-part are constraint morphisms `(f_T, f_N)`.
pub struct ConMapObject {
    pub object: FinConSet,
    /// The T-level tables keyed by the element ids of `object.elems_t`.
    pub tables_t: BTreeMap<Elem, BTreeMap<Elem, Elem>>,
    /// The morphisms keyed by the element ids of `object.elems_n`.
    pub maps_n: BTreeMap<Elem, ConSetMap>,
}

pub fn conmap_hom(m: &FinConSet, n: &FinConSet, size_limit: usize) -> Result<ConMapObject, KError> {
    let count = (n.elems_t.len() as f64).powi(m.elems_t.len() as i32);
    if count > size_limit as f64 {
        return Err(KError::SizeLimit(format!(
            "|ConMap(M,N)_T| = {count} exceeds limit {size_limit}"
        )));
    }
    let mut tables_t = BTreeMap::new();
    let mut elems_t = Vec::new();
    for f in all_functions(&m.elems_t, &n.elems_t) {
        let id = fn_table_id(&m.elems_t, &f);
        elems_t.push(id.clone());
        tables_t.insert(id, f);
    }
    let mut maps_n = BTreeMap::new();
    let mut elems_n = Vec::new();
    let mut iota = BTreeMap::new();
    for cm in all_conset_maps(m, n) {
        let id_t = fn_table_id(&m.elems_t, &cm.f_t);
        let id = format!(
            "{{T:{},N:{}}}",
            id_t,
            fn_table_id(&m.elems_n, &cm.f_n)
        );
        elems_n.push(id.clone());
        iota.insert(id.clone(), id_t);
        maps_n.insert(id, cm);
    }
    // f ~ g iff f_N(x) ~ g_N(x) for all x in M_N.
    let mut uf = UnionFind::new(&elems_n);
    for (i, a) in elems_n.iter().enumerate() {
        for b in elems_n.iter().skip(i + 1) {
            let fa = &maps_n[a];
            let fb = &maps_n[b];
            if m.elems_n.iter().all(|x| n.same_class(&fa.f_n[x], &fb.f_n[x])) {
                uf.union(a, b);
            }
        }
    }
    let classes = uf.blocks(&elems_n);
    let object = FinConSet::new(elems_t, elems_n, iota, classes)?;
    Ok(ConMapObject { object, tables_t, maps_n })
}

// ---------------------------------------------------------------------------
// Constraint index sets
// ---------------------------------------------------------------------------

/// A finite constraint index set: `iota: N -> T` plus a subset of N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConIdx {
    #[serde(rename = "T")]
    pub elems_t: Vec<Elem>,
    #[serde(rename = "N")]
    pub elems_n: Vec<Elem>,
    pub zero: Vec<Elem>,
    pub iota: BTreeMap<Elem, Elem>,
}

impl ConIdx {
    pub fn new(
        elems_t: Vec<Elem>,
        elems_n: Vec<Elem>,
        zero: Vec<Elem>,
        iota: BTreeMap<Elem, Elem>,
    ) -> Result<Self, KError> {
        let s = ConIdx {
            elems_t: sorted_unique(elems_t),
            elems_n: sorted_unique(elems_n),
            zero: sorted_unique(zero),
            iota,
        };
        for x in &s.elems_n {
            let t = s
                .iota
                .get(x)
                .ok_or_else(|| KError::ShapeMismatch(format!("iota undefined on {x:?}")))?;
            if !s.elems_t.contains(t) {
                return Err(KError::ShapeMismatch(format!("iota({x:?}) outside T")));
            }
        }
        if !s.zero.iter().all(|z| s.elems_n.contains(z)) {
            return Err(KError::ShapeMismatch("zero part not inside N".into()));
        }
        Ok(s)
    }

    /// Canonical embedded index set of cardinality `(t, n, z)` with elements
    /// `"1".."t"` (numeric ids padded for sort stability).
    pub fn from_card(t: usize, n: usize, z: usize) -> Self {
        assert!(z <= n && n <= t, "need z <= n <= t");
        let id = |i: usize| format!("{i:02}");
        let elems_t: Vec<Elem> = (1..=t).map(id).collect();
        let elems_n: Vec<Elem> = (1..=n).map(id).collect();
        let zero: Vec<Elem> = (1..=z).map(id).collect();
        let iota = elems_n.iter().map(|e| (e.clone(), e.clone())).collect();
        ConIdx { elems_t, elems_n, zero, iota }
    }

    pub fn is_embedded(&self) -> bool {
        let imgs: BTreeSet<&Elem> = self.elems_n.iter().map(|x| &self.iota[x]).collect();
        imgs.len() == self.elems_n.len()
    }

    pub fn card(&self) -> (usize, usize, usize) {
        (self.elems_t.len(), self.elems_n.len(), self.zero.len())
    }

    fn require_embedded(&self) -> Result<(), KError> {
        if self.is_embedded() {
            Ok(())
        } else {
            Err(KError::NotEmbedded("index-set operation requires embedded input".into()))
        }
    }

    /// N-part as T-element ids (embedded case).
    fn n_in_t(&self) -> Vec<Elem> {
        sorted_unique(self.elems_n.iter().map(|x| self.iota[x].clone()).collect())
    }

    /// 0-part as T-element ids (embedded case).
    fn zero_in_t(&self) -> Vec<Elem> {
        sorted_unique(self.zero.iter().map(|x| self.iota[x].clone()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdxBinop {
    DisjointUnion,
    Product,
    Tensor,
    StrTensor,
}

pub fn idx_binop(kind: IdxBinop, m: &ConIdx, n: &ConIdx) -> Result<ConIdx, KError> {
    match kind {
        IdxBinop::DisjointUnion => {
            let elems_t: Vec<Elem> = m
                .elems_t
                .iter()
                .map(|a| inl(a))
                .chain(n.elems_t.iter().map(|b| inr(b)))
                .collect();
            let elems_n: Vec<Elem> = m
                .elems_n
                .iter()
                .map(|a| inl(a))
                .chain(n.elems_n.iter().map(|b| inr(b)))
                .collect();
            let zero: Vec<Elem> =
                m.zero.iter().map(|a| inl(a)).chain(n.zero.iter().map(|b| inr(b))).collect();
            let iota = m
                .elems_n
                .iter()
                .map(|a| (inl(a), inl(&m.iota[a])))
                .chain(n.elems_n.iter().map(|b| (inr(b), inr(&n.iota[b]))))
                .collect();
            ConIdx::new(elems_t, elems_n, zero, iota)
        }
        IdxBinop::Product => {
            let elems_t = cross(&m.elems_t, &n.elems_t);
            let elems_n = cross(&m.elems_n, &n.elems_n);
            let zero = cross(&m.zero, &n.zero);
            let iota = m
                .elems_n
                .iter()
                .flat_map(|a| {
                    n.elems_n
                        .iter()
                        .map(move |b| (pair_id(a, b), pair_id(&m.iota[a], &n.iota[b])))
                })
                .collect();
            ConIdx::new(elems_t, elems_n, zero, iota)
        }
        IdxBinop::Tensor => {
            m.require_embedded()?;
            n.require_embedded()?;
            // All parts live inside T x T via the embeddings.
            let mn = m.n_in_t();
            let nn = n.n_in_t();
            let mz = m.zero_in_t();
            let nz = n.zero_in_t();
            let elems_t = cross(&m.elems_t, &n.elems_t);
            let elems_n = cross(&mn, &nn);
            let zero = sorted_unique(
                [cross(&mn, &nz), cross(&mz, &nn)].concat(),
            );
            let iota = elems_n.iter().map(|e| (e.clone(), e.clone())).collect();
            ConIdx::new(elems_t, elems_n, zero, iota)
        }
        IdxBinop::StrTensor => {
            m.require_embedded()?;
            n.require_embedded()?;
            let mn = m.n_in_t();
            let nn = n.n_in_t();
            let mz = m.zero_in_t();
            let nz = n.zero_in_t();
            let elems_t = cross(&m.elems_t, &n.elems_t);
            let elems_n = sorted_unique(
                [cross(&mn, &nn), cross(&m.elems_t, &nz), cross(&mz, &n.elems_t)].concat(),
            );
            let zero = sorted_unique(
                [cross(&m.elems_t, &nz), cross(&mz, &n.elems_t)].concat(),
            );
            let iota = elems_n.iter().map(|e| (e.clone(), e.clone())).collect();
            ConIdx::new(elems_t, elems_n, zero, iota)
        }
    }
}

fn cross(a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    a.iter().flat_map(|x| b.iter().map(move |y| pair_id(x, y))).collect()
}

/// Dual index set `(M_T, M_T \ M_0, M_T \ M_N)`.
pub fn idx_dual(m: &ConIdx) -> Result<ConIdx, KError> {
    m.require_embedded()?;
    let mn = m.n_in_t();
    let mz = m.zero_in_t();
    let elems_n: Vec<Elem> =
        m.elems_t.iter().filter(|x| !mz.contains(x)).cloned().collect();
    let zero: Vec<Elem> = m.elems_t.iter().filter(|x| !mn.contains(x)).cloned().collect();
    let iota = elems_n.iter().map(|e| (e.clone(), e.clone())).collect();
    ConIdx::new(m.elems_t.clone(), elems_n, zero, iota)
}

/// Reduction `M_N \ M_0`.
pub fn idx_reduce(m: &ConIdx) -> Vec<Elem> {
    m.elems_n.iter().filter(|x| !m.zero.contains(x)).cloned().collect()
}

/// Conversion of a constraint set into an index set along an explicit
/// section `s: M_red -> M_N` of the class projection (one chosen member per
/// block).
pub fn conset_to_idx(m: &FinConSet, section: &BTreeMap<Elem, Elem>) -> Result<ConIdx, KError> {
    let mut image = BTreeSet::new();
    for block in &m.classes {
        let rep = section.get(&class_id(block)).ok_or_else(|| {
            KError::ShapeMismatch(format!("section missing class {:?}", class_id(block)))
        })?;
        if !block.contains(rep) {
            return Err(KError::ShapeMismatch(format!(
                "section value {rep:?} not in its class"
            )));
        }
        image.insert(rep.clone());
    }
    let zero = m.elems_n.iter().filter(|x| !image.contains(*x)).cloned().collect();
    ConIdx::new(m.elems_t.clone(), m.elems_n.clone(), zero, m.iota.clone())
}

// ---------------------------------------------------------------------------
// Constraint groups and actions
// ---------------------------------------------------------------------------

/// A plain finite group given by a multiplication table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinGroup {
    pub elems: Vec<Elem>,
    /// `mul[(a,b)] = ab`.
    pub mul: BTreeMap<(Elem, Elem), Elem>,
}

impl FinGroup {
    pub fn validate(&self) -> Result<(), KError> {
        let e = self.identity().ok_or_else(|| {
            KError::ShapeMismatch("group has no identity".into())
        })?;
        for a in &self.elems {
            if !self.elems.iter().any(|b| self.mul[&(a.clone(), b.clone())] == e) {
                return Err(KError::ShapeMismatch(format!("{a:?} has no inverse")));
            }
            for b in &self.elems {
                for c in &self.elems {
                    let ab_c =
                        &self.mul[&(self.mul[&(a.clone(), b.clone())].clone(), c.clone())];
                    let a_bc =
                        &self.mul[&(a.clone(), self.mul[&(b.clone(), c.clone())].clone())];
                    if ab_c != a_bc {
                        return Err(KError::ShapeMismatch("non-associative table".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> Option<Elem> {
        self.elems
            .iter()
            .find(|e| {
                self.elems.iter().all(|a| {
                    self.mul[&((*e).clone(), a.clone())] == *a
                        && self.mul[&(a.clone(), (*e).clone())] == *a
                })
            })
            .cloned()
    }

    pub fn inverse(&self, a: &Elem) -> Elem {
        let e = self.identity().unwrap();
        self.elems
            .iter()
            .find(|b| self.mul[&(a.clone(), (*b).clone())] == e)
            .cloned()
            .unwrap()
    }

    /// Cyclic group of order n with elements "0".."n-1".
    pub fn cyclic(n: usize) -> Self {
        let elems: Vec<Elem> = (0..n).map(|i| i.to_string()).collect();
        let mul = (0..n)
            .flat_map(|a| {
                (0..n).map(move |b| {
                    ((a.to_string(), b.to_string()), ((a + b) % n).to_string())
                })
            })
            .collect();
        FinGroup { elems, mul }
    }
}

/// A constraint group: `iota: G_N -> G_T` with a normal subgroup of G_N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinConGroup {
    pub g_t: FinGroup,
    pub g_n: FinGroup,
    pub zero: Vec<Elem>,
    pub iota: BTreeMap<Elem, Elem>,
}

impl FinConGroup {
    pub fn validate(&self) -> Result<(), KError> {
        self.g_t.validate()?;
        self.g_n.validate()?;
        for a in &self.g_n.elems {
            for b in &self.g_n.elems {
                let lhs = &self.iota[&self.g_n.mul[&(a.clone(), b.clone())]];
                let rhs =
                    &self.g_t.mul[&(self.iota[a].clone(), self.iota[b].clone())];
                if lhs != rhs {
                    return Err(KError::ShapeMismatch("iota not a group morphism".into()));
                }
            }
        }
        // G_0 a normal subgroup of G_N.
        let zero: BTreeSet<&Elem> = self.zero.iter().collect();
        let e = self.g_n.identity().unwrap();
        if !zero.contains(&e) {
            return Err(KError::ShapeMismatch("zero part misses identity".into()));
        }
        for a in &self.zero {
            for b in &self.zero {
                if !zero.contains(&self.g_n.mul[&(a.clone(), b.clone())]) {
                    return Err(KError::ShapeMismatch("zero part not closed".into()));
                }
            }
            for g in &self.g_n.elems {
                let conj = self.g_n.mul[&(
                    self.g_n.mul[&(g.clone(), a.clone())].clone(),
                    self.g_n.inverse(g),
                )]
                    .clone();
                if !zero.contains(&conj) {
                    return Err(KError::ShapeMismatch("zero part not normal".into()));
                }
            }
        }
        Ok(())
    }

    /// The reduced group `G_N / G_0` as a plain group on coset ids.
    pub fn reduce(&self) -> (FinGroup, BTreeMap<Elem, Elem>) {
        let cosets: Vec<Vec<Elem>> = {
            let mut uf = UnionFind::new(&self.g_n.elems);
            for a in &self.g_n.elems {
                for z in &self.zero {
                    uf.union(a, &self.g_n.mul[&(a.clone(), z.clone())]);
                }
            }
            uf.blocks(&self.g_n.elems)
        };
        let to_class: BTreeMap<Elem, Elem> = cosets
            .iter()
            .flat_map(|b| b.iter().map(move |x| (x.clone(), class_id(b))))
            .collect();
        let elems: Vec<Elem> = cosets.iter().map(|b| class_id(b)).collect();
        let mut mul = BTreeMap::new();
        for ba in &cosets {
            for bb in &cosets {
                let prod = &self.g_n.mul[&(ba[0].clone(), bb[0].clone())];
                mul.insert((class_id(ba), class_id(bb)), to_class[prod].clone());
            }
        }
        (FinGroup { elems, mul }, to_class)
    }
}

/// A constraint group action on a constraint set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConGroupAction {
    pub group: FinConGroup,
    pub space: FinConSet,
    /// `act_t[(g,x)]` for g in G_T, x in M_T.
    pub act_t: BTreeMap<(Elem, Elem), Elem>,
    pub act_n: BTreeMap<(Elem, Elem), Elem>,
}

impl ConGroupAction {
    pub fn validate(&self) -> Result<(), KError> {
        self.group.validate()?;
        let check_action = |g: &FinGroup,
                            elems: &[Elem],
                            act: &BTreeMap<(Elem, Elem), Elem>|
         -> Result<(), KError> {
            let e = g.identity().unwrap();
            for x in elems {
                if act[&(e.clone(), x.clone())] != *x {
                    return Err(KError::ShapeMismatch("identity does not act trivially".into()));
                }
                for a in &g.elems {
                    for b in &g.elems {
                        let ab = &g.mul[&(a.clone(), b.clone())];
                        let lhs = &act[&(ab.clone(), x.clone())];
                        let rhs =
                            &act[&(a.clone(), act[&(b.clone(), x.clone())].clone())];
                        if lhs != rhs {
                            return Err(KError::ShapeMismatch("not an action".into()));
                        }
                    }
                }
            }
            Ok(())
        };
        check_action(&self.group.g_t, &self.space.elems_t, &self.act_t)?;
        check_action(&self.group.g_n, &self.space.elems_n, &self.act_n)?;
        for g in &self.group.g_n.elems {
            for x in &self.space.elems_n {
                let lhs = &self.space.iota[&self.act_n[&(g.clone(), x.clone())]];
                let rhs = &self.act_t[&(
                    self.group.iota[g].clone(),
                    self.space.iota[x].clone(),
                )];
                if lhs != rhs {
                    return Err(KError::ShapeMismatch("action incompatible with iota".into()));
                }
            }
        }
        for g in &self.group.zero {
            for x in &self.space.elems_n {
                if !self.space.same_class(&self.act_n[&(g.clone(), x.clone())], x) {
                    return Err(KError::ShapeMismatch(
                        "zero part of group moves points off their class".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn plain_orbits(
    group: &FinGroup,
    elems: &[Elem],
    act: &BTreeMap<(Elem, Elem), Elem>,
) -> Vec<Vec<Elem>> {
    let mut uf = UnionFind::new(elems);
    for g in &group.elems {
        for x in elems {
            uf.union(x, &act[&(g.clone(), x.clone())]);
        }
    }
    uf.blocks(elems)
}

/// Orbit space of a constraint group action, as a constraint set.
pub fn orbit_space(a: &ConGroupAction) -> Result<FinConSet, KError> {
    a.validate()?;
    let orbits_t = plain_orbits(&a.group.g_t, &a.space.elems_t, &a.act_t);
    let orbits_n = plain_orbits(&a.group.g_n, &a.space.elems_n, &a.act_n);
    let to_t: BTreeMap<Elem, Elem> = orbits_t
        .iter()
        .flat_map(|b| b.iter().map(move |x| (x.clone(), class_id(b))))
        .collect();
    let elems_t: Vec<Elem> = orbits_t.iter().map(|b| class_id(b)).collect();
    let elems_n: Vec<Elem> = orbits_n.iter().map(|b| class_id(b)).collect();
    let iota: BTreeMap<Elem, Elem> = orbits_n
        .iter()
        .map(|b| (class_id(b), to_t[&a.space.iota[&b[0]]].clone()))
        .collect();
    // G_N x ~ G_N y  iff  exists g, g' with (g.x) ~_M (g'.y).
    let mut uf = UnionFind::new(&elems_n);
    for bx in &orbits_n {
        for by in &orbits_n {
            let related = a.group.g_n.elems.iter().any(|g| {
                a.group.g_n.elems.iter().any(|h| {
                    a.space.same_class(
                        &a.act_n[&(g.clone(), bx[0].clone())],
                        &a.act_n[&(h.clone(), by[0].clone())],
                    )
                })
            });
            if related {
                uf.union(&class_id(bx), &class_id(by));
            }
        }
    }
    let classes = uf.blocks(&elems_n);
    FinConSet::new(elems_t, elems_n, iota, classes)
}

/// Reduces a constraint group action to a plain action of `G_red` on
/// `M_red`; returns (group, space, action table).
pub fn reduce_action(
    a: &ConGroupAction,
) -> (FinGroup, Vec<Elem>, BTreeMap<(Elem, Elem), Elem>) {
    let (g_red, g_to_class) = a.group.reduce();
    let m_red = reduce_conset(&a.space);
    let m_to_class: BTreeMap<Elem, Elem> = a
        .space
        .classes
        .iter()
        .flat_map(|b| b.iter().map(move |x| (x.clone(), class_id(b))))
        .collect();
    let mut act = BTreeMap::new();
    for gb in a.group.g_n.elems.iter() {
        for xb in a.space.elems_n.iter() {
            let gx = &a.act_n[&(gb.clone(), xb.clone())];
            act.insert(
                (g_to_class[gb].clone(), m_to_class[xb].clone()),
                m_to_class[gx].clone(),
            );
        }
    }
    (g_red, m_red, act)
}

/// Plain orbit space of a plain action (for reduction comparisons).
pub fn orbit_space_plain(
    group: &FinGroup,
    elems: &[Elem],
    act: &BTreeMap<(Elem, Elem), Elem>,
) -> Vec<Elem> {
    plain_orbits(group, elems, act).iter().map(|b| class_id(b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_set(classes: Vec<Vec<&str>>) -> FinConSet {
        FinConSet::new(
            vec!["1".into(), "2".into()],
            vec!["1".into(), "2".into()],
            BTreeMap::from([("1".into(), "1".into()), ("2".into(), "2".into())]),
            classes.into_iter().map(|b| b.into_iter().map(String::from).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn mono_epi_not_iso() {
        // Identity from the discrete 2-set to the trivially-related 2-set:
        // mono and epi but not an isomorphism.
        let m = two_set(vec![vec!["1"], vec!["2"]]);
        let n = two_set(vec![vec!["1", "2"]]);
        let f = ConSetMap::identity(&m);
        f.validate(&m, &n).unwrap();
        let c = classify_map(&f, &m, &n);
        assert!(c.mono && c.epi);
        assert!(!c.regular_mono && !c.iso);
        // Identity endo has all flags.
        let idm = ConSetMap::identity(&m);
        let c2 = classify_map(&idm, &m, &m);
        assert!(c2.mono && c2.epi && c2.regular_mono && c2.regular_epi && c2.iso);
    }

    #[test]
    fn image_vs_regular_image() {
        let m = two_set(vec![vec!["1"], vec!["2"]]);
        let n = two_set(vec![vec!["1", "2"]]);
        let f = ConSetMap::identity(&m);
        let img = map_image(&f, &m, &n, ImageMode::Plain);
        let regim = map_image(&f, &m, &n, ImageMode::Regular);
        assert_eq!(img, m);
        assert_eq!(regim, n);
    }

    #[test]
    fn coequalizer_paper_example() {
        // M = ({pt}, {}), N = ({0,1},{0,1},disc), f = 0, g = 1:
        // coeq = ({0},{0,1},disc), which is not embedded.
        let m = FinConSet::new(
            vec!["pt".into()],
            vec![],
            BTreeMap::new(),
            vec![],
        )
        .unwrap();
        let n = FinConSet::discrete(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            BTreeMap::from([("0".into(), "0".into()), ("1".into(), "1".into())]),
        )
        .unwrap();
        let f = ConSetMap {
            f_t: BTreeMap::from([("pt".into(), "0".into())]),
            f_n: BTreeMap::new(),
        };
        let g = ConSetMap {
            f_t: BTreeMap::from([("pt".into(), "1".into())]),
            f_n: BTreeMap::new(),
        };
        let res = conset_colimit(ColimitKind::Coequalizer { f: &f, g: &g, m: &m, n: &n })
            .unwrap();
        assert_eq!(res.object.elems_t.len(), 1);
        assert_eq!(res.object.elems_n.len(), 2);
        assert_eq!(res.object.classes.len(), 2);
        assert!(!res.object.is_embedded());
        // Embedding the coequalizer collapses N to a single point.
        let emb = conset_embed(&res.object);
        assert_eq!(emb.elems_n.len(), 1);
        assert!(emb.is_embedded());
    }

    #[test]
    fn idx_cardinalities_from_paper() {
        let n = ConIdx::from_card(3, 2, 1);
        let tt = idx_binop(IdxBinop::Tensor, &n, &n).unwrap();
        assert_eq!(tt.card(), (9, 4, 3));
        let ss = idx_binop(IdxBinop::StrTensor, &n, &n).unwrap();
        assert_eq!(ss.card(), (9, 6, 5));
        let mixed1 = idx_binop(IdxBinop::Tensor, &n, &ss).unwrap();
        assert_eq!(mixed1.card(), (27, 12, 11));
        let mixed2 = idx_binop(IdxBinop::StrTensor, &tt, &n).unwrap();
        assert_eq!(mixed2.card(), (27, 16, 15));
    }

    #[test]
    fn idx_dual_involution() {
        for t in 0..=3usize {
            for nn in 0..=t {
                for z in 0..=nn {
                    let m = ConIdx::from_card(t, nn, z);
                    let d = idx_dual(&m).unwrap();
                    assert_eq!(d.card(), (t, t - z, t - nn));
                    let dd = idx_dual(&d).unwrap();
                    assert_eq!(dd, m, "(M*)* = M must hold element-wise");
                }
            }
        }
        let m = ConIdx::from_card(3, 2, 1);
        assert_eq!(idx_reduce(&m).len(), 1);
    }

    #[test]
    fn tensor_rejects_non_embedded() {
        let m = ConIdx::new(
            vec!["0".into()],
            vec!["0".into(), "1".into()],
            vec![],
            BTreeMap::from([("0".into(), "0".into()), ("1".into(), "0".into())]),
        )
        .unwrap();
        assert!(!m.is_embedded());
        assert!(matches!(idx_binop(IdxBinop::Tensor, &m, &m), Err(KError::NotEmbedded(_))));
        assert!(matches!(idx_dual(&m), Err(KError::NotEmbedded(_))));
    }

    #[test]
    fn conmap_counts() {
        let one = FinConSet::point();
        let n = two_set(vec![vec!["1", "2"]]);
        let h = conmap_hom(&one, &n, 1_000_000).unwrap();
        // ConMap(1, N) is isomorphic to N.
        assert_eq!(h.object.elems_t.len(), n.elems_t.len());
        assert_eq!(h.object.elems_n.len(), n.elems_n.len());
        assert_eq!(h.object.classes.len(), n.classes.len());
        let m = two_set(vec![vec!["1"], vec!["2"]]);
        let h2 = conmap_hom(&m, &n, 1_000_000).unwrap();
        assert_eq!(h2.object.elems_t.len(), 4); // |N_T|^|M_T| = 2^2
        assert!(matches!(conmap_hom(&m, &n, 3), Err(KError::SizeLimit(_))));
    }

    #[test]
    fn orbit_space_trivial_and_transitive() {
        // Trivial group: orbit space is the original set.
        let m = two_set(vec![vec!["1"], vec!["2"]]);
        let triv = FinGroup::cyclic(1);
        let g = FinConGroup {
            g_t: triv.clone(),
            g_n: triv.clone(),
            zero: vec!["0".into()],
            iota: BTreeMap::from([("0".into(), "0".into())]),
        };
        let act = ConGroupAction {
            group: g,
            space: m.clone(),
            act_t: m.elems_t.iter().map(|x| (("0".into(), x.clone()), x.clone())).collect(),
            act_n: m.elems_n.iter().map(|x| (("0".into(), x.clone()), x.clone())).collect(),
        };
        let orb = orbit_space(&act).unwrap();
        assert_eq!(orb.elems_t.len(), 2);
        assert_eq!(orb.elems_n.len(), 2);

        // Z/2 swapping the two points: orbit space is a singleton.
        let c2 = FinGroup::cyclic(2);
        let g2 = FinConGroup {
            g_t: c2.clone(),
            g_n: c2.clone(),
            zero: vec!["0".into()],
            iota: c2.elems.iter().map(|e| (e.clone(), e.clone())).collect(),
        };
        let swap = |g: &str, x: &str| -> Elem {
            if g == "0" {
                x.into()
            } else if x == "1" {
                "2".into()
            } else {
                "1".into()
            }
        };
        let act2 = ConGroupAction {
            group: g2,
            space: m.clone(),
            act_t: c2
                .elems
                .iter()
                .flat_map(|g| {
                    m.elems_t.iter().map(move |x| ((g.clone(), x.clone()), swap(g, x)))
                })
                .collect(),
            act_n: c2
                .elems
                .iter()
                .flat_map(|g| {
                    m.elems_n.iter().map(move |x| ((g.clone(), x.clone()), swap(g, x)))
                })
                .collect(),
        };
        let orb2 = orbit_space(&act2).unwrap();
        assert_eq!(orb2.elems_n.len(), 1);
    }
}
