//! Decorated cobordisms between planar tangle objects, linearized over the
//! base field and reduced modulo the derivative of the potential.
//!
//! An object is a planar crossingless tangle: a set of boundary points paired
//! into arcs, plus closed circles, with a quantum shift. A morphism term is a
//! surface recorded only through its connected components: each component
//! remembers which source/target arcs and circles it touches, its genus is
//! recovered from an effective Euler characteristic, and its decoration is a
//! monomial x^e (general decorations are expanded into monomials, which makes
//! linear combinations canonical).
//!
//! The effective Euler characteristic of a component is chi - p where chi is
//! the honest Euler characteristic and p = (#boundary points)/2; it is
//! additive under all the gluings performed here, because the quantum degree
//! 2*deg(decoration) - (n-1)*chi_eff must be additive.

use std::collections::{BTreeMap, BTreeSet};

use crate::field::{FElem, Field};
use crate::poly::Poly;
use crate::potential::Potential;

/// Planar crossingless tangle with a quantum shift.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Obj {
    /// boundary point pairs, each stored (min, max), sorted
    pub arcs: Vec<(u32, u32)>,
    pub circles: u16,
    pub q: i32,
}

impl Obj {
    pub fn new(mut arcs: Vec<(u32, u32)>, circles: u16, q: i32) -> Obj {
        for a in &mut arcs {
            if a.0 > a.1 {
                *a = (a.1, a.0);
            }
        }
        arcs.sort();
        Obj { arcs, circles, q }
    }

    pub fn boundary(&self) -> Vec<u32> {
        let mut pts: Vec<u32> = self.arcs.iter().flat_map(|&(a, b)| [a, b]).collect();
        pts.sort();
        pts
    }

    /// index of the arc containing point p
    pub fn arc_at(&self, p: u32) -> Option<usize> {
        self.arcs.iter().position(|&(a, b)| a == p || b == p)
    }
}

/// Connected component of a cobordism, with decoration x^exp.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Comp {
    pub sa: Vec<u16>,
    pub sc: Vec<u16>,
    pub ta: Vec<u16>,
    pub tc: Vec<u16>,
    pub exp: u16,
}

/// Canonical cobordism: sorted components.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cob {
    pub comps: Vec<Comp>,
}

impl Cob {
    pub fn new(mut comps: Vec<Comp>) -> Cob {
        for c in &mut comps {
            c.sa.sort();
            c.sc.sort();
            c.ta.sort();
            c.tc.sort();
        }
        comps.sort();
        Cob { comps }
    }

    pub fn identity(obj: &Obj) -> Cob {
        let mut comps: Vec<Comp> = (0..obj.arcs.len() as u16)
            .map(|i| Comp { sa: vec![i], sc: vec![], ta: vec![i], tc: vec![], exp: 0 })
            .collect();
        comps.extend((0..obj.circles).map(|c| Comp {
            sa: vec![],
            sc: vec![c],
            ta: vec![],
            tc: vec![c],
            exp: 0,
        }));
        Cob::new(comps)
    }
}

/// Linear combination of cobordisms; an empty map is zero.
pub type Mor = BTreeMap<Cob, FElem>;

pub fn mor_add(f: &Field, acc: &mut Mor, cob: Cob, coeff: FElem) {
    if f.is_zero(&coeff) {
        return;
    }
    use std::collections::btree_map::Entry;
    match acc.entry(cob) {
        Entry::Vacant(v) => {
            v.insert(coeff);
        }
        Entry::Occupied(mut o) => {
            let s = f.add(o.get(), &coeff);
            if f.is_zero(&s) {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

pub fn mor_scale(f: &Field, m: &Mor, a: &FElem) -> Mor {
    let mut out = Mor::new();
    for (c, x) in m {
        mor_add(f, &mut out, c.clone(), f.mul(x, a));
    }
    out
}

pub fn mor_sum(f: &Field, a: &Mor, b: &Mor) -> Mor {
    let mut out = a.clone();
    for (c, x) in b {
        mor_add(f, &mut out, c.clone(), x.clone());
    }
    out
}

/// Effective Euler characteristic of a single genus-0 component from its
/// connectivity data: 2 - b - p where b counts boundary cycles (side cycles
/// alternating source and target arcs, plus touched circles) and p is half
/// the number of boundary points.
pub fn chi_eff(comp: &Comp, src: &Obj, tgt: &Obj) -> i64 {
    let mut pts: BTreeSet<u32> = BTreeSet::new();
    for &i in &comp.sa {
        let (a, b) = src.arcs[i as usize];
        pts.insert(a);
        pts.insert(b);
    }
    // target arcs of the component must cover the same boundary points
    debug_assert_eq!(
        {
            let mut tp: BTreeSet<u32> = BTreeSet::new();
            for &i in &comp.ta {
                let (a, b) = tgt.arcs[i as usize];
                tp.insert(a);
                tp.insert(b);
            }
            tp
        },
        pts
    );
    let mut cycles = 0i64;
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    for &start in &pts {
        if seen.contains(&start) {
            continue;
        }
        cycles += 1;
        let mut p = start;
        loop {
            seen.insert(p);
            // across the source arc, then across the target arc
            let (a, b) = src.arcs[src.arc_at(p).unwrap()];
            let p2 = if a == p { b } else { a };
            seen.insert(p2);
            let (a, b) = tgt.arcs[tgt.arc_at(p2).unwrap()];
            p = if a == p2 { b } else { a };
            if p == start {
                break;
            }
        }
    }
    let b = cycles + comp.sc.len() as i64 + comp.tc.len() as i64;
    let p = pts.len() as i64 / 2;
    2 - b - p
}

/// Quantum degree of a cobordism between src and tgt for sl(n).
pub fn qdeg(cob: &Cob, src: &Obj, tgt: &Obj, n: usize) -> i64 {
    cob.comps
        .iter()
        .map(|c| 2 * c.exp as i64 - (n as i64 - 1) * chi_eff(c, src, tgt))
        .sum()
}

// ---- generic class assembly ----

/// Connectivity/decoration data of one glued component before genus
/// extraction and monomial expansion.
pub struct ClassData {
    pub sa: BTreeSet<u16>,
    pub sc: BTreeSet<u16>,
    pub ta: BTreeSet<u16>,
    pub tc: BTreeSet<u16>,
    pub exp_sum: u32,
    pub chi_sum: i64,
}

/// Turn glued classes into canonical terms: recover each class's genus by
/// comparing its genus-0 effective Euler characteristic against the additive
/// sum of its pieces, multiply in handle elements, evaluate closed classes
/// via the trace, and expand the remaining decorations into monomials.
pub fn assemble_classes(
    pot: &Potential,
    classes: Vec<ClassData>,
    src: &Obj,
    tgt: &Obj,
) -> Vec<(Cob, FElem)> {
    let f = &pot.field;
    // (partial comp list, coefficient)
    let mut terms: Vec<(Vec<Comp>, FElem)> = vec![(vec![], f.one())];
    for cl in classes {
        let comp = Comp {
            sa: cl.sa.iter().copied().collect(),
            sc: cl.sc.iter().copied().collect(),
            ta: cl.ta.iter().copied().collect(),
            tc: cl.tc.iter().copied().collect(),
            exp: 0,
        };
        let closed = comp.sa.is_empty()
            && comp.sc.is_empty()
            && comp.ta.is_empty()
            && comp.tc.is_empty();
        let chi0 = if closed { 2 } else { chi_eff(&comp, src, tgt) };
        let diff = chi0 - cl.chi_sum;
        assert!(diff >= 0 && diff % 2 == 0, "genus bookkeeping failed: {diff}");
        let genus = (diff / 2) as u32;
        let mut dec = pot.reduce_mod(&Poly::monomial(f, f.one(), cl.exp_sum as usize));
        for _ in 0..genus {
            dec = pot.mul_mod(&dec, pot.handle_element());
        }
        if closed {
            let val = pot.trace(&dec);
            if f.is_zero(&val) {
                terms.clear();
                break;
            }
            for t in &mut terms {
                t.1 = f.mul(&t.1, &val);
            }
        } else {
            let mut next: Vec<(Vec<Comp>, FElem)> = Vec::new();
            for (e, c) in dec.c.iter().enumerate() {
                if f.is_zero(c) {
                    continue;
                }
                for (comps, coeff) in &terms {
                    let mut comps = comps.clone();
                    comps.push(Comp { exp: e as u16, ..comp.clone() });
                    next.push((comps, f.mul(coeff, c)));
                }
            }
            terms = next;
            if terms.is_empty() {
                break;
            }
        }
    }
    terms
        .into_iter()
        .map(|(comps, coeff)| (Cob::new(comps), coeff))
        .collect()
}

struct Uf(Vec<usize>);

impl Uf {
    fn new(n: usize) -> Uf {
        Uf((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a] = b;
    }
}

/// Composition g ∘ f of morphisms f: a -> b, g: b -> c.
pub fn compose(pot: &Potential, f_mor: &Mor, g_mor: &Mor, a: &Obj, b: &Obj, c: &Obj) -> Mor {
    let f = &pot.field;
    let mut out = Mor::new();
    for (cf, xf) in f_mor {
        // index of the f component touching each middle arc / circle
        let mut at_arc = vec![usize::MAX; b.arcs.len()];
        let mut at_circ = vec![usize::MAX; b.circles as usize];
        for (k, comp) in cf.comps.iter().enumerate() {
            for &i in &comp.ta {
                at_arc[i as usize] = k;
            }
            for &i in &comp.tc {
                at_circ[i as usize] = k;
            }
        }
        for (cg, xg) in g_mor {
            let nf = cf.comps.len();
            let n = nf + cg.comps.len();
            let mut uf = Uf::new(n);
            for (k, comp) in cg.comps.iter().enumerate() {
                for &i in &comp.sa {
                    uf.union(at_arc[i as usize], nf + k);
                }
                for &i in &comp.sc {
                    uf.union(at_circ[i as usize], nf + k);
                }
            }
            let mut by_class: BTreeMap<usize, ClassData> = BTreeMap::new();
            for k in 0..n {
                let r = uf.find(k);
                let cl = by_class.entry(r).or_insert_with(|| ClassData {
                    sa: BTreeSet::new(),
                    sc: BTreeSet::new(),
                    ta: BTreeSet::new(),
                    tc: BTreeSet::new(),
                    exp_sum: 0,
                    chi_sum: 0,
                });
                if k < nf {
                    let comp = &cf.comps[k];
                    cl.sa.extend(comp.sa.iter().copied());
                    cl.sc.extend(comp.sc.iter().copied());
                    cl.exp_sum += comp.exp as u32;
                    cl.chi_sum += chi_eff(comp, a, b);
                } else {
                    let comp = &cg.comps[k - nf];
                    cl.ta.extend(comp.ta.iter().copied());
                    cl.tc.extend(comp.tc.iter().copied());
                    cl.exp_sum += comp.exp as u32;
                    cl.chi_sum += chi_eff(comp, b, c);
                }
            }
            let coeff = f.mul(xf, xg);
            for (cob, v) in assemble_classes(pot, by_class.into_values().collect(), a, c) {
                mor_add(f, &mut out, cob, f.mul(&coeff, &v));
            }
        }
    }
    out
}

// ---- elementary morphisms ----

/// Identity morphism on obj.
pub fn id_mor(f: &Field, obj: &Obj) -> Mor {
    let mut m = Mor::new();
    m.insert(Cob::identity(obj), f.one());
    m
}

/// Component list of the identity away from circle `c` of `obj`, with the
/// remaining circles renumbered for an object missing circle `c`.
fn id_away_from_circle(obj: &Obj, c: u16, circle_on_src: bool) -> Vec<Comp> {
    let mut comps: Vec<Comp> = (0..obj.arcs.len() as u16)
        .map(|i| Comp { sa: vec![i], sc: vec![], ta: vec![i], tc: vec![], exp: 0 })
        .collect();
    for j in 0..obj.circles {
        if j == c {
            continue;
        }
        let small = if j > c { j - 1 } else { j };
        let (s, t) = if circle_on_src { (j, small) } else { (small, j) };
        comps.push(Comp { sa: vec![], sc: vec![s], ta: vec![], tc: vec![t], exp: 0 });
    }
    comps
}

/// Cap morphism obj -> obj\{circle c} with decoration polynomial `dec` on
/// the capped circle. Returns the target object at the given quantum shift.
pub fn cap_circle(pot: &Potential, obj: &Obj, c: u16, dec: &Poly, tq: i32) -> (Obj, Mor) {
    let f = &pot.field;
    let tgt = Obj { arcs: obj.arcs.clone(), circles: obj.circles - 1, q: tq };
    let base = id_away_from_circle(obj, c, true);
    let mut m = Mor::new();
    let dec = pot.reduce_mod(dec);
    for (e, x) in dec.c.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        let mut comps = base.clone();
        comps.push(Comp { sa: vec![], sc: vec![c], ta: vec![], tc: vec![], exp: e as u16 });
        m.insert(Cob::new(comps), x.clone());
    }
    (tgt, m)
}

/// Cup morphism obj\{circle c} -> obj with decoration `dec` on the born
/// circle. `sq` is the quantum shift of the source object.
pub fn cup_circle(pot: &Potential, obj: &Obj, c: u16, dec: &Poly, sq: i32) -> (Obj, Mor) {
    let f = &pot.field;
    let src = Obj { arcs: obj.arcs.clone(), circles: obj.circles - 1, q: sq };
    let base = id_away_from_circle(obj, c, false);
    let mut m = Mor::new();
    let dec = pot.reduce_mod(dec);
    for (e, x) in dec.c.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        let mut comps = base.clone();
        comps.push(Comp { sa: vec![], sc: vec![], ta: vec![], tc: vec![c], exp: e as u16 });
        m.insert(Cob::new(comps), x.clone());
    }
    (src, m)
}

/// Saddle morphism between two objects that differ by one arc re-pairing.
pub fn saddle(f: &Field, src: &Obj, tgt: &Obj) -> Mor {
    assert_eq!(src.circles, tgt.circles);
    let mut comps: Vec<Comp> = Vec::new();
    let mut used_s = vec![false; src.arcs.len()];
    let mut used_t = vec![false; tgt.arcs.len()];
    for (i, &(a, b)) in src.arcs.iter().enumerate() {
        if let Some(j) = tgt.arcs.iter().position(|&t| t == (a, b)) {
            if !used_t[j] {
                comps.push(Comp {
                    sa: vec![i as u16],
                    sc: vec![],
                    ta: vec![j as u16],
                    tc: vec![],
                    exp: 0,
                });
                used_s[i] = true;
                used_t[j] = true;
            }
        }
    }
    let sa: Vec<u16> = (0..src.arcs.len()).filter(|&i| !used_s[i]).map(|i| i as u16).collect();
    let ta: Vec<u16> = (0..tgt.arcs.len()).filter(|&i| !used_t[i]).map(|i| i as u16).collect();
    assert_eq!(sa.len(), 2, "saddle needs exactly two re-paired arcs");
    assert_eq!(ta.len(), 2);
    let mut comps = comps;
    for c in 0..src.circles {
        comps.push(Comp { sa: vec![], sc: vec![c], ta: vec![], tc: vec![c], exp: 0 });
    }
    comps.push(Comp { sa, sc: vec![], ta, tc: vec![], exp: 0 });
    let mut m = Mor::new();
    m.insert(Cob::new(comps), f.one());
    m
}

/// Dotting morphism: identity with decoration x^e on the component touching
/// the given arc.
pub fn dot_arc(f: &Field, obj: &Obj, arc: usize, e: u16) -> Mor {
    let mut cob = Cob::identity(obj);
    for comp in &mut cob.comps {
        if comp.sa == vec![arc as u16] {
            comp.exp = e;
        }
    }
    let mut m = Mor::new();
    m.insert(Cob::new(cob.comps), f.one());
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_potential;

    fn pot(w: &str) -> Potential {
        parse_potential(w, &Field::Q).unwrap()
    }

    fn circle(q: i32) -> Obj {
        Obj::new(vec![], 1, q)
    }

    #[test]
    fn degrees_of_generators() {
        for (w, n) in [("x^2", 2), ("x^5-x", 5)] {
            let p = pot(w);
            let f = &p.field;
            let c = circle(0);
            let empty = Obj::new(vec![], 0, 0);
            // identity tube: degree 0
            let id = Cob::identity(&c);
            assert_eq!(qdeg(&id, &c, &c, n), 0);
            // cap with i dots: 2i - (n-1)
            for i in 0..n as u16 {
                let (_, m) = cap_circle(&p, &c, 0, &Poly::monomial(f, f.one(), i as usize), 0);
                for cob in m.keys() {
                    assert_eq!(qdeg(cob, &c, &empty, n), 2 * i as i64 - (n as i64 - 1));
                }
            }
            // cup: 1 - n
            let (_, m) = cup_circle(&p, &c, 0, &Poly::one(f), 0);
            for cob in m.keys() {
                assert_eq!(qdeg(cob, &empty, &c, n), 1 - n as i64);
            }
            // saddle: n - 1
            let v = Obj::new(vec![(0, 3), (1, 2)], 0, 0);
            let h = Obj::new(vec![(0, 1), (2, 3)], 0, 0);
            let s = saddle(f, &v, &h);
            for cob in s.keys() {
                assert_eq!(qdeg(cob, &v, &h, n), n as i64 - 1);
            }
        }
    }

    #[test]
    fn sphere_evaluates_by_trace() {
        // cap(x^i) o cup(x^j) = trace(x^{i+j})
        let p = pot("x^3-x");
        let f = &p.field;
        let c = circle(0);
        let empty = Obj::new(vec![], 0, 0);
        for i in 0..3usize {
            for j in 0..3usize {
                let (_, cup) = cup_circle(&p, &c, 0, &Poly::monomial(f, f.one(), j), 0);
                let (_, cap) = cap_circle(&p, &c, 0, &Poly::monomial(f, f.one(), i), 0);
                let m = compose(&p, &cup, &cap, &empty, &c, &empty);
                let xi = Poly::monomial(f, f.one(), i);
                let xj = Poly::monomial(f, f.one(), j);
                let expect = p.trace(&p.mul_mod(&xi, &xj));
                let got = m.get(&Cob::new(vec![])).cloned().unwrap_or(f.zero());
                assert_eq!(got, expect, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn dual_basis_gives_kronecker_pairing() {
        for w in ["x^2", "x^3-x", "x^5-x", "x^2-1"] {
            let p = pot(w);
            let f = p.field.clone();
            let n = p.n;
            let c = circle(0);
            let empty = Obj::new(vec![], 0, 0);
            for i in 0..n {
                for j in 0..n {
                    let (_, cup) = cup_circle(&p, &c, 0, &Poly::monomial(&f, f.one(), i), 0);
                    let (_, cap) = cap_circle(&p, &c, 0, &p.dual_basis()[j].clone(), 0);
                    let m = compose(&p, &cup, &cap, &empty, &c, &empty);
                    let got = m.get(&Cob::new(vec![])).cloned().unwrap_or(f.zero());
                    let expect = if i == j { f.one() } else { f.zero() };
                    assert_eq!(got, expect, "w={w} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn two_saddles_make_an_annulus() {
        // splitting two arcs apart and merging them back gives a genus-0
        // surface (an annulus), not a handle
        let p = pot("x^3-x");
        let f = &p.field;
        let v = Obj::new(vec![(0, 3), (1, 2)], 0, 0);
        let h = Obj::new(vec![(0, 1), (2, 3)], 0, 0);
        let split = saddle(f, &h, &v);
        let merge = saddle(f, &v, &h);
        let m = compose(&p, &split, &merge, &h, &v, &h);
        assert_eq!(m.len(), 1);
        let (cob, coeff) = m.iter().next().unwrap();
        assert!(f.is_one(coeff));
        assert_eq!(cob.comps.len(), 1);
        assert_eq!(cob.comps[0].exp, 0);
        assert_eq!(qdeg(cob, &h, &h, p.n), 2 * (p.n as i64 - 1));
    }

    #[test]
    fn split_and_remerge_circle_multiplies_by_handle() {
        // arc -> arc + circle -> arc: a genus-1 tube, i.e. the handle element
        let p = pot("x^3-x");
        let f = &p.field;
        let v = Obj::new(vec![(0, 1)], 0, 0);
        let vc = Obj::new(vec![(0, 1)], 1, 0);
        let mut split = Mor::new();
        split.insert(
            Cob::new(vec![Comp { sa: vec![0], sc: vec![], ta: vec![0], tc: vec![0], exp: 0 }]),
            f.one(),
        );
        let mut merge = Mor::new();
        merge.insert(
            Cob::new(vec![Comp { sa: vec![0], sc: vec![0], ta: vec![0], tc: vec![], exp: 0 }]),
            f.one(),
        );
        let m = compose(&p, &split, &merge, &v, &vc, &v);
        // expect the handle element spread over tube decorations
        let handle = p.handle_element().clone();
        let mut total = Poly::zero();
        for (cob, coeff) in &m {
            assert_eq!(cob.comps.len(), 1);
            total = total.add(f, &Poly::monomial(f, coeff.clone(), cob.comps[0].exp as usize));
        }
        assert_eq!(total, handle);
    }

    #[test]
    fn composition_associative_randomized() {
        // (cap . saddle) . cup == cap . (saddle . cup) on a small diagram
        let p = pot("x^3-x");
        let f = &p.field;
        let v = Obj::new(vec![(0, 3), (1, 2)], 0, 0);
        let h = Obj::new(vec![(0, 1), (2, 3)], 0, 0);
        let vc = Obj::new(vec![(0, 3), (1, 2)], 1, 0);
        let s = saddle(f, &v, &h);
        let (_, cup) = cup_circle(&p, &vc, 0, &Poly::x(f), 0);
        let d = dot_arc(f, &h, 0, 2);
        // chain v --cup--> vc ; vc --cap--> v ; v --s--> h ; h --d--> h
        let (_, cap) = cap_circle(&p, &vc, 0, &p.dual_basis()[1].clone(), 0);
        let a = compose(&p, &cup, &cap, &v, &vc, &v);
        let b = compose(&p, &s, &d, &v, &h, &h);
        let left = compose(&p, &a, &b, &v, &v, &h);
        let ab = compose(&p, &a, &s, &v, &v, &h);
        let right = compose(&p, &ab, &d, &v, &h, &h);
        assert_eq!(left, right);
    }
}
