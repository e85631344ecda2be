//! Filtered complexes of planar tangle objects and their simplification.
//!
//! A diagram is assembled slot by slot: each slot contributes a three-term
//! complex, gluing is tensor product followed by contraction of shared
//! boundary points, and after every gluing step the complex is simplified by
//! delooping circles and cancelling invertible differential entries. Cutting
//! the diagram open at its marked edge keeps two boundary points alive, so
//! the fully glued complex is a complex of single-arc objects, i.e. a
//! complex of free rank-one modules over k[x]/w with polynomial entries.

use std::collections::BTreeMap;

use log::debug;

use crate::cobordism::{
    assemble_classes, cap_circle, chi_eff, compose, cup_circle, dot_arc, mor_add, mor_scale,
    mor_sum, qdeg, ClassData, Cob, Comp, Mor, Obj,
};
use crate::diagram::{MatchedDiagram, NE, NW, SE, SW};
use crate::error::KrError;
use crate::field::{FElem, Field};
use crate::poly::Poly;
use crate::potential::Potential;

#[derive(Clone)]
pub struct CatComplex {
    pub pot: Potential,
    pub tmin: i32,
    /// objs[k] lives in homological degree tmin + k
    pub objs: Vec<BTreeMap<u32, Obj>>,
    /// diffs[k]: entries from level k to k+1, keyed (src, tgt)
    pub diffs: Vec<BTreeMap<(u32, u32), Mor>>,
    next_id: u32,
}

impl CatComplex {
    fn fresh(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id - 1
    }

    pub fn n_objects(&self) -> usize {
        self.objs.iter().map(|l| l.len()).sum()
    }

    /// d^2 = 0 and the filtration bound qdeg(entry) <= q_src - q_tgt.
    pub fn check(&self) {
        let n = self.pot.n;
        for k in 0..self.diffs.len() {
            for (&(s, t), m) in &self.diffs[k] {
                let so = &self.objs[k][&s];
                let to = &self.objs[k + 1][&t];
                for cob in m.keys() {
                    assert!(
                        qdeg(cob, so, to, n) <= (so.q - to.q) as i64,
                        "filtration violated at level {k}"
                    );
                }
            }
        }
        for k in 0..self.diffs.len().saturating_sub(1) {
            let mut sq: BTreeMap<(u32, u32), Mor> = BTreeMap::new();
            for (&(s, t), m1) in &self.diffs[k] {
                for (&(t2, u), m2) in &self.diffs[k + 1] {
                    if t2 != t {
                        continue;
                    }
                    let a = &self.objs[k][&s];
                    let b = &self.objs[k + 1][&t];
                    let c = &self.objs[k + 2][&u];
                    let m = compose(&self.pot, m1, m2, a, b, c);
                    let acc = sq.entry((s, u)).or_default();
                    *acc = mor_sum(&self.pot.field, acc, &m);
                }
            }
            for ((s, u), m) in sq {
                assert!(m.is_empty(), "d^2 != 0 at level {k}: {s} -> {u}");
            }
        }
    }

    /// Tensor product; boundaries must be disjoint.
    pub fn tensor(a: &CatComplex, b: &CatComplex) -> CatComplex {
        let pot = a.pot.clone();
        let f = pot.field.clone();
        let la = a.objs.len();
        let lb = b.objs.len();
        let levels = la + lb - 1;
        let mut out = CatComplex {
            pot,
            tmin: a.tmin + b.tmin,
            objs: vec![BTreeMap::new(); levels],
            diffs: vec![BTreeMap::new(); levels.saturating_sub(1)],
            next_id: 0,
        };
        // combined object ids and arc index maps
        let mut ids: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut amaps: BTreeMap<(u32, u32), (Vec<u16>, Vec<u16>)> = BTreeMap::new();
        for (ka, aobjs) in a.objs.iter().enumerate() {
            for (&ia, oa) in aobjs {
                for (kb, bobjs) in b.objs.iter().enumerate() {
                    for (&ib, ob) in bobjs {
                        let mut arcs = oa.arcs.clone();
                        arcs.extend(ob.arcs.iter().copied());
                        let combined =
                            Obj::new(arcs, oa.circles + ob.circles, oa.q + ob.q);
                        let amap: Vec<u16> = oa
                            .arcs
                            .iter()
                            .map(|x| combined.arcs.binary_search(x).unwrap() as u16)
                            .collect();
                        let bmap: Vec<u16> = ob
                            .arcs
                            .iter()
                            .map(|x| combined.arcs.binary_search(x).unwrap() as u16)
                            .collect();
                        let id = out.fresh();
                        out.objs[ka + kb].insert(id, combined);
                        ids.insert((ia, ib), id);
                        amaps.insert((ia, ib), (amap, bmap));
                    }
                }
            }
        }
        // remap a term of d_a tensored with the identity on ob (or vice versa)
        let remap = |cob: &Cob,
                     first: bool,
                     other: &Obj,
                     src_key: (u32, u32),
                     tgt_key: (u32, u32),
                     other_src_circ: u16,
                     other_tgt_circ: u16|
         -> Cob {
            let (sm, tm) = (&amaps[&src_key], &amaps[&tgt_key]);
            let (smap, omap_s) = if first { (&sm.0, &sm.1) } else { (&sm.1, &sm.0) };
            let (tmap, omap_t) = if first { (&tm.0, &tm.1) } else { (&tm.1, &tm.0) };
            // circle offsets: circles of the moving factor come first if it
            // is factor a, after a's circles otherwise
            let (s_off, t_off, os_off, ot_off) = if first {
                (0, 0, other_src_circ, other_tgt_circ)
            } else {
                (other_src_circ, other_tgt_circ, 0, 0)
            };
            let mut comps: Vec<Comp> = cob
                .comps
                .iter()
                .map(|c| Comp {
                    sa: c.sa.iter().map(|&i| smap[i as usize]).collect(),
                    sc: c.sc.iter().map(|&i| i + s_off).collect(),
                    ta: c.ta.iter().map(|&i| tmap[i as usize]).collect(),
                    tc: c.tc.iter().map(|&i| i + t_off).collect(),
                    exp: c.exp,
                })
                .collect();
            for (j, _) in other.arcs.iter().enumerate() {
                comps.push(Comp {
                    sa: vec![omap_s[j]],
                    sc: vec![],
                    ta: vec![omap_t[j]],
                    tc: vec![],
                    exp: 0,
                });
            }
            for c in 0..other.circles {
                comps.push(Comp {
                    sa: vec![],
                    sc: vec![c + os_off],
                    ta: vec![],
                    tc: vec![c + ot_off],
                    exp: 0,
                });
            }
            Cob::new(comps)
        };
        // d_a tensor id
        for (ka, ad) in a.diffs.iter().enumerate() {
            for (&(sa_, ta_), m) in ad {
                let ca_src = a.objs[ka][&sa_].circles;
                let ca_tgt = a.objs[ka + 1][&ta_].circles;
                let _ = (ca_src, ca_tgt);
                for (kb, bobjs) in b.objs.iter().enumerate() {
                    for (&ib, ob) in bobjs {
                        let src = ids[&(sa_, ib)];
                        let tgt = ids[&(ta_, ib)];
                        let mut nm = Mor::new();
                        for (cob, x) in m {
                            let rc = remap(
                                cob,
                                true,
                                ob,
                                (sa_, ib),
                                (ta_, ib),
                                a.objs[ka][&sa_].circles,
                                a.objs[ka + 1][&ta_].circles,
                            );
                            mor_add(&f, &mut nm, rc, x.clone());
                        }
                        if !nm.is_empty() {
                            out.diffs[ka + kb].insert((src, tgt), nm);
                        }
                    }
                }
            }
        }
        // (-1)^{t_a} id tensor d_b
        for (kb, bd) in b.diffs.iter().enumerate() {
            for (&(sb_, tb_), m) in bd {
                for (ka, aobjs) in a.objs.iter().enumerate() {
                    let sign_neg = (a.tmin + ka as i32).rem_euclid(2) == 1;
                    for (&ia, oa) in aobjs {
                        let src = ids[&(ia, sb_)];
                        let tgt = ids[&(ia, tb_)];
                        let mut nm = Mor::new();
                        for (cob, x) in m {
                            let rc = remap(
                                cob,
                                false,
                                oa,
                                (ia, sb_),
                                (ia, tb_),
                                oa.circles,
                                oa.circles,
                            );
                            let x = if sign_neg { f.neg(x) } else { x.clone() };
                            mor_add(&f, &mut nm, rc, x);
                        }
                        if !nm.is_empty() {
                            let e = out.diffs[ka + kb].entry((src, tgt)).or_default();
                            *e = mor_sum(&f, e, &nm);
                        }
                    }
                }
            }
        }
        out
    }

    /// Glue the two boundary points x and y.
    pub fn contract(&mut self, x: u32, y: u32) {
        #[derive(Clone, Copy)]
        enum Fate {
            Arc(u16),
            Circle(u16),
        }
        // transform every object, remembering arc fates
        let mut fates: Vec<BTreeMap<u32, Vec<Fate>>> = Vec::new();
        let mut old_objs: Vec<BTreeMap<u32, Obj>> = Vec::new();
        for level in &mut self.objs {
            let mut lf = BTreeMap::new();
            let old = level.clone();
            for (&key, o) in level.iter_mut() {
                let ix = o.arc_at(x).expect("contract: point x missing");
                let iy = o.arc_at(y).expect("contract: point y missing");
                let mut fate = vec![Fate::Arc(0); o.arcs.len()];
                let new_obj;
                if ix == iy {
                    // arc (x, y) closes into a fresh circle
                    let mut arcs = o.arcs.clone();
                    arcs.remove(ix);
                    new_obj = Obj::new(arcs, o.circles + 1, o.q);
                    for (i, a) in o.arcs.iter().enumerate() {
                        fate[i] = if i == ix {
                            Fate::Circle(o.circles)
                        } else {
                            Fate::Arc(new_obj.arcs.binary_search(a).unwrap() as u16)
                        };
                    }
                } else {
                    let (a1, b1) = o.arcs[ix];
                    let (a2, b2) = o.arcs[iy];
                    let p1 = if a1 == x { b1 } else { a1 };
                    let p2 = if a2 == y { b2 } else { a2 };
                    let mut arcs: Vec<(u32, u32)> = o
                        .arcs
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != ix && i != iy)
                        .map(|(_, &a)| a)
                        .collect();
                    let joined = (p1.min(p2), p1.max(p2));
                    arcs.push(joined);
                    new_obj = Obj::new(arcs, o.circles, o.q);
                    for (i, a) in o.arcs.iter().enumerate() {
                        fate[i] = if i == ix || i == iy {
                            Fate::Arc(new_obj.arcs.binary_search(&joined).unwrap() as u16)
                        } else {
                            Fate::Arc(new_obj.arcs.binary_search(a).unwrap() as u16)
                        };
                    }
                }
                lf.insert(key, fate);
                *o = new_obj;
            }
            fates.push(lf);
            old_objs.push(old);
        }
        // transform every differential entry
        let pot = self.pot.clone();
        for k in 0..self.diffs.len() {
            let entries = std::mem::take(&mut self.diffs[k]);
            for ((s, t), m) in entries {
                let old_src = &old_objs[k][&s];
                let old_tgt = &old_objs[k + 1][&t];
                let new_src = self.objs[k][&s].clone();
                let new_tgt = self.objs[k + 1][&t].clone();
                let sf = &fates[k][&s];
                let tf = &fates[k + 1][&t];
                let mut nm = Mor::new();
                for (cob, coeff) in &m {
                    // merge the components at x and y
                    let at = |p: u32| {
                        let i = old_src.arc_at(p).unwrap() as u16;
                        cob.comps.iter().position(|c| c.sa.contains(&i)).unwrap()
                    };
                    let (cx, cy) = (at(x), at(y));
                    // union the two touched components, keep the rest apart
                    let mut class_of: Vec<usize> = (0..cob.comps.len()).collect();
                    if cx != cy {
                        let m = cx.min(cy);
                        class_of[cx] = m;
                        class_of[cy] = m;
                    }
                    let mut classes: BTreeMap<usize, ClassData> = BTreeMap::new();
                    for (i, comp) in cob.comps.iter().enumerate() {
                        let cl = classes.entry(class_of[i]).or_insert_with(|| ClassData {
                            sa: Default::default(),
                            sc: Default::default(),
                            ta: Default::default(),
                            tc: Default::default(),
                            exp_sum: 0,
                            chi_sum: 0,
                        });
                        for &a in &comp.sa {
                            match sf[a as usize] {
                                Fate::Arc(j) => {
                                    cl.sa.insert(j);
                                }
                                Fate::Circle(j) => {
                                    cl.sc.insert(j);
                                }
                            }
                        }
                        for &c in &comp.sc {
                            cl.sc.insert(c);
                        }
                        for &a in &comp.ta {
                            match tf[a as usize] {
                                Fate::Arc(j) => {
                                    cl.ta.insert(j);
                                }
                                Fate::Circle(j) => {
                                    cl.tc.insert(j);
                                }
                            }
                        }
                        for &c in &comp.tc {
                            cl.tc.insert(c);
                        }
                        cl.exp_sum += comp.exp as u32;
                        cl.chi_sum += chi_eff(comp, old_src, old_tgt);
                    }
                    for (ncob, v) in
                        assemble_classes(&pot, classes.into_values().collect(), &new_src, &new_tgt)
                    {
                        mor_add(&pot.field, &mut nm, ncob, pot.field.mul(coeff, &v));
                    }
                }
                if !nm.is_empty() {
                    self.diffs[k].insert((s, t), nm);
                }
            }
        }
    }

    /// Replace an object carrying a circle by n shifted circle-free copies.
    fn deloop(&mut self, k: usize, key: u32) {
        let pot = self.pot.clone();
        let f = pot.field.clone();
        let n = pot.n;
        let obj = self.objs[k].remove(&key).unwrap();
        assert!(obj.circles > 0);
        let mut pieces: Vec<(u32, Obj, Mor, Mor)> = Vec::new(); // (id, obj_i, cap_i, cup_i)
        for i in 0..n {
            let qi = obj.q + (2 * i as i32 + 1 - n as i32);
            let (tgt, cap) = cap_circle(&pot, &obj, 0, &pot.dual_basis()[i].clone(), qi);
            let (_, cup) = cup_circle(&pot, &obj, 0, &Poly::monomial(&f, f.one(), i), qi);
            let id = self.fresh();
            pieces.push((id, tgt, cap, cup));
        }
        // entries into the object
        if k > 0 {
            let into: Vec<(u32, Mor)> = self.diffs[k - 1]
                .iter()
                .filter(|&(&(_, t), _)| t == key)
                .map(|(&(s, _), m)| (s, m.clone()))
                .collect();
            for (s, m) in into {
                self.diffs[k - 1].remove(&(s, key));
                let src = self.objs[k - 1][&s].clone();
                for (id, oi, cap, _) in &pieces {
                    let nm = compose(&pot, &m, cap, &src, &obj, oi);
                    if !nm.is_empty() {
                        self.diffs[k - 1].insert((s, *id), nm);
                    }
                }
            }
        }
        // entries out of the object
        if k < self.diffs.len() {
            let outof: Vec<(u32, Mor)> = self.diffs[k]
                .iter()
                .filter(|&(&(s, _), _)| s == key)
                .map(|(&(_, t), m)| (t, m.clone()))
                .collect();
            for (t, m) in outof {
                self.diffs[k].remove(&(key, t));
                let tgt = self.objs[k + 1][&t].clone();
                for (id, oi, _, cup) in &pieces {
                    let nm = compose(&pot, cup, &m, oi, &obj, &tgt);
                    if !nm.is_empty() {
                        self.diffs[k].insert((*id, t), nm);
                    }
                }
            }
        }
        for (id, oi, _, _) in pieces {
            self.objs[k].insert(id, oi);
        }
    }

    /// Inverse of an entry of the form c*id + (filtration-lowering nilpotent).
    fn invert_entry(&self, e: &Mor, obj: &Obj) -> Option<Mor> {
        let f = &self.pot.field;
        let id = Cob::identity(obj);
        let c = e.get(&id)?;
        if f.is_zero(c) {
            return None;
        }
        let cinv = f.inv(c)?;
        let mut nil = e.clone();
        nil.remove(&id);
        let mut idm = Mor::new();
        idm.insert(id, cinv.clone());
        if nil.is_empty() {
            return Some(idm);
        }
        // c^-1 * sum (-c^-1 N)^j
        let m = mor_scale(f, &nil, &f.neg(&cinv));
        let mut acc = idm.clone();
        let mut p = idm;
        for _ in 0..4 * self.pot.n {
            p = compose(&self.pot, &p, &m, obj, obj, obj);
            if p.is_empty() {
                return Some(mor_scale(f, &acc, &f.one()));
            }
            acc = mor_sum(f, &acc, &p);
        }
        panic!("perturbed identity failed to invert (non-nilpotent remainder)");
    }

    /// Gauss elimination of the invertible entry a -> b at level k.
    fn eliminate(&mut self, k: usize, a: u32, b: u32) {
        let pot = self.pot.clone();
        let f = pot.field.clone();
        let h = self.diffs[k][&(a, b)].clone();
        let oa = self.objs[k][&a].clone();
        let ob = self.objs[k + 1][&b].clone();
        let hinv = self.invert_entry(&h, &oa).expect("eliminate: pivot not invertible");
        let into_b: Vec<(u32, Mor)> = self.diffs[k]
            .iter()
            .filter(|&(&(s, t), _)| t == b && s != a)
            .map(|(&(s, _), m)| (s, m.clone()))
            .collect();
        let from_a: Vec<(u32, Mor)> = self.diffs[k]
            .iter()
            .filter(|&(&(s, t), _)| s == a && t != b)
            .map(|(&(_, t), m)| (t, m.clone()))
            .collect();
        for (x, jm) in &into_b {
            let ox = self.objs[k][x].clone();
            let part = compose(&pot, jm, &hinv, &ox, &ob, &oa);
            for (y, im) in &from_a {
                let oy = self.objs[k + 1][y].clone();
                let corr = compose(&pot, &part, im, &ox, &oa, &oy);
                let e = self.diffs[k].entry((*x, *y)).or_default();
                *e = mor_sum(&f, e, &mor_scale(&f, &corr, &f.neg(&f.one())));
                if e.is_empty() {
                    self.diffs[k].remove(&(*x, *y));
                }
            }
        }
        // drop a, b and all incident entries
        self.objs[k].remove(&a);
        self.objs[k + 1].remove(&b);
        self.diffs[k].retain(|&(s, t), _| s != a && t != b);
        if k > 0 {
            self.diffs[k - 1].retain(|&(_, t), _| t != a);
        }
        if k + 1 < self.diffs.len() {
            self.diffs[k + 1].retain(|&(s, _), _| s != b);
        }
    }

    /// Deloop every circle and cancel every invertible entry.
    pub fn simplify(&mut self) {
        loop {
            // deloop first
            let mut delooped = false;
            for k in 0..self.objs.len() {
                let key = self.objs[k]
                    .iter()
                    .find(|(_, o)| o.circles > 0)
                    .map(|(&key, _)| key);
                if let Some(key) = key {
                    self.deloop(k, key);
                    delooped = true;
                    break;
                }
            }
            if delooped {
                continue;
            }
            // pick the invertible entry with least expected fill-in
            let mut best: Option<(usize, u32, u32, usize)> = None;
            for k in 0..self.diffs.len() {
                let mut row_n: BTreeMap<u32, usize> = BTreeMap::new();
                let mut col_n: BTreeMap<u32, usize> = BTreeMap::new();
                for &(s, t) in self.diffs[k].keys() {
                    *row_n.entry(t).or_default() += 1;
                    *col_n.entry(s).or_default() += 1;
                }
                for (&(s, t), m) in &self.diffs[k] {
                    let os = &self.objs[k][&s];
                    let ot = &self.objs[k + 1][&t];
                    if os.q != ot.q || os.arcs != ot.arcs || os.circles != ot.circles {
                        continue;
                    }
                    let id = Cob::identity(os);
                    match m.get(&id) {
                        Some(c) if !self.pot.field.is_zero(c) => {}
                        _ => continue,
                    }
                    let fill = (col_n[&s] - 1) * (row_n[&t] - 1);
                    if best.map_or(true, |(_, _, _, bf)| fill < bf) {
                        best = Some((k, s, t, fill));
                    }
                }
            }
            match best {
                Some((k, s, t, _)) => self.eliminate(k, s, t),
                None => break,
            }
        }
    }
}

/// The three-term complex of a single slot; boundary points are the four
/// corner tokens of the slot.
pub fn krasner_complex(pot: &Potential, sign: i8, p: [u32; 4]) -> CatComplex {
    let n = pot.n as i32;
    let f = pot.field.clone();
    let v = |q: i32| Obj::new(vec![(p[NW], p[SW]), (p[NE], p[SE])], 0, q);
    let h = |q: i32| Obj::new(vec![(p[NW], p[NE]), (p[SE], p[SW])], 0, q);
    let dot_diff = |o: &Obj| -> Mor {
        let i = o.arc_at(p[NW]).unwrap();
        let j = o.arc_at(p[NE]).unwrap();
        let a = dot_arc(&f, o, i, 1);
        let b = mor_scale(&f, &dot_arc(&f, o, j, 1), &f.neg(&f.one()));
        mor_sum(&f, &a, &b)
    };
    let (tmin, objs): (i32, Vec<Obj>) = if sign > 0 {
        (0, vec![v(1 - n), v(-1 - n), h(-2 * n)])
    } else {
        (-2, vec![h(2 * n), v(n + 1), v(n - 1)])
    };
    let d0;
    let d1;
    if sign > 0 {
        d0 = dot_diff(&objs[0]);
        d1 = crate::cobordism::saddle(&f, &objs[1], &objs[2]);
    } else {
        d0 = crate::cobordism::saddle(&f, &objs[0], &objs[1]);
        d1 = dot_diff(&objs[1]);
    }
    let mut c = CatComplex {
        pot: pot.clone(),
        tmin,
        objs: vec![BTreeMap::new(), BTreeMap::new(), BTreeMap::new()],
        diffs: vec![BTreeMap::new(), BTreeMap::new()],
        next_id: 0,
    };
    let ids: Vec<u32> = (0..3).map(|_| c.fresh()).collect();
    for (k, o) in objs.into_iter().enumerate() {
        c.objs[k].insert(ids[k], o);
    }
    c.diffs[0].insert((ids[0], ids[1]), d0);
    c.diffs[1].insert((ids[1], ids[2]), d1);
    c
}

// ---- module complexes ----

/// Complex of free rank-one k[x]/w modules: one generator per (t, q shift),
/// differential entries are polynomials acting by multiplication.
#[derive(Clone, Debug)]
pub struct ModuleComplex {
    pub pot: Potential,
    pub tmin: i32,
    /// gens[k] = quantum shifts of the generators in degree tmin + k
    pub gens: Vec<Vec<i32>>,
    /// diffs[k]: (src index, tgt index, entry polynomial)
    pub diffs: Vec<Vec<(usize, usize, Poly)>>,
}

impl ModuleComplex {
    pub fn total_rank(&self) -> usize {
        self.gens.iter().map(|g| g.len()).sum()
    }

    pub fn check(&self) {
        let f = &self.pot.field;
        for k in 0..self.diffs.len().saturating_sub(1) {
            let mut sq: BTreeMap<(usize, usize), Poly> = BTreeMap::new();
            for &(s, t, ref p1) in &self.diffs[k] {
                for &(t2, u, ref p2) in &self.diffs[k + 1] {
                    if t2 != t {
                        continue;
                    }
                    let m = self.pot.mul_mod(p1, p2);
                    let e = sq.entry((s, u)).or_insert_with(Poly::zero);
                    *e = e.add(f, &m);
                }
            }
            for ((s, u), p) in sq {
                assert!(p.is_zero(), "module d^2 != 0: {s} -> {u} at level {k}");
            }
        }
    }

    /// Tensor each generator with k[x]/w (a split unknot component).
    fn expand_circle(&mut self) {
        let n = self.pot.n as i32;
        let mut maps: Vec<Vec<usize>> = Vec::new(); // old index -> first new index
        for g in &mut self.gens {
            let old = std::mem::take(g);
            let mut map = Vec::new();
            for s in old {
                map.push(g.len());
                for j in 0..n {
                    g.push(s + 2 * j + 1 - n);
                }
            }
            maps.push(map);
        }
        for (k, d) in self.diffs.iter_mut().enumerate() {
            let old = std::mem::take(d);
            for (s, t, p) in old {
                for j in 0..n as usize {
                    d.push((maps[k][s] + j, maps[k + 1][t] + j, p.clone()));
                }
            }
        }
    }

    /// Tensor product over k[x]/w; computes the cut complex of a connected
    /// sum from the cut complexes of the summands.
    pub fn tensor(a: &ModuleComplex, b: &ModuleComplex) -> ModuleComplex {
        assert_eq!(a.pot.poly, b.pot.poly, "tensor factors share the potential");
        let f = &a.pot.field;
        let (la, lb) = (a.gens.len(), b.gens.len());
        let levels = la + lb - 1;
        let mut gens: Vec<Vec<i32>> = vec![Vec::new(); levels];
        // block (i, j) of level i + j starts at offsets[i + j][&i]
        let mut offsets: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); levels];
        for i in 0..la {
            for j in 0..lb {
                let k = i + j;
                offsets[k].insert(i, gens[k].len());
                for &qa in &a.gens[i] {
                    for &qb in &b.gens[j] {
                        gens[k].push(qa + qb);
                    }
                }
            }
        }
        let mut diffs: Vec<Vec<(usize, usize, Poly)>> =
            vec![Vec::new(); levels.saturating_sub(1)];
        // d_a tensor identity
        for (i, dl) in a.diffs.iter().enumerate() {
            for &(s, t, ref p) in dl {
                for j in 0..lb {
                    let nb = b.gens[j].len();
                    if nb == 0 {
                        continue;
                    }
                    let k = i + j;
                    let bs = offsets[k][&i];
                    let bt = offsets[k + 1][&(i + 1)];
                    for r in 0..nb {
                        diffs[k].push((bs + s * nb + r, bt + t * nb + r, p.clone()));
                    }
                }
            }
        }
        // sign rule: identity tensor d_b picks up the parity of the a-degree
        for i in 0..la {
            let na = a.gens[i].len();
            if na == 0 {
                continue;
            }
            let negate = (a.tmin + i as i32).rem_euclid(2) == 1;
            for (j, dl) in b.diffs.iter().enumerate() {
                let (nbs, nbt) = (b.gens[j].len(), b.gens[j + 1].len());
                for &(s, t, ref p) in dl {
                    let k = i + j;
                    let bs = offsets[k][&i];
                    let bt = offsets[k + 1][&i];
                    let q = if negate { p.neg(f) } else { p.clone() };
                    for r in 0..na {
                        diffs[k].push((bs + r * nbs + s, bt + r * nbt + t, q.clone()));
                    }
                }
            }
        }
        for d in &mut diffs {
            d.sort_by_key(|&(s, t, _)| (s, t));
        }
        ModuleComplex { pot: a.pot.clone(), tmin: a.tmin + b.tmin, gens, diffs }
    }

    /// Unreduced filtered complex over the base field: each generator splits
    /// into n generators x^j at q = shift + 2j + 1 - n; polynomial entries
    /// become multiplication matrices.
    pub fn unreduced(&self) -> ScalarComplex {
        let pot = &self.pot;
        let f = pot.field.clone();
        let n = pot.n;
        let mut gens: Vec<Vec<i32>> = Vec::new();
        for level in &self.gens {
            let mut g = Vec::new();
            for &s in level {
                for j in 0..n {
                    g.push(s + 2 * j as i32 + 1 - n as i32);
                }
            }
            gens.push(g);
        }
        let mut diffs: Vec<BTreeMap<(usize, usize), FElem>> = Vec::new();
        for d in &self.diffs {
            let mut nd: BTreeMap<(usize, usize), FElem> = BTreeMap::new();
            for &(s, t, ref p) in d {
                for j in 0..n {
                    let col = pot.mul_mod(p, &Poly::monomial(&f, f.one(), j));
                    for i in 0..n {
                        let c = col.coeff(&f, i);
                        if !f.is_zero(&c) {
                            let key = (s * n + j, t * n + i);
                            let prev = nd.remove(&key).unwrap_or(f.zero());
                            let v = f.add(&prev, &c);
                            if !f.is_zero(&v) {
                                nd.insert(key, v);
                            }
                        }
                    }
                }
            }
            diffs.push(nd);
        }
        ScalarComplex { field: f, tmin: self.tmin, gens, diffs }
    }

    /// Reduced filtered complex at a root of w: evaluate entries at the root;
    /// generator quantum degree equals the module shift.
    pub fn reduced(&self, root: &FElem) -> Result<ScalarComplex, KrError> {
        let pot = &self.pot;
        let f = pot.field.clone();
        if !pot.roots.contains(root) {
            return Err(KrError::NotARoot(f.fmt_elem(root)));
        }
        let gens = self.gens.clone();
        let mut diffs = Vec::new();
        for d in &self.diffs {
            let mut nd: BTreeMap<(usize, usize), FElem> = BTreeMap::new();
            for &(s, t, ref p) in d {
                let c = p.eval(&f, root);
                if !f.is_zero(&c) {
                    let prev = nd.remove(&(s, t)).unwrap_or(f.zero());
                    let v = f.add(&prev, &c);
                    if !f.is_zero(&v) {
                        nd.insert((s, t), v);
                    }
                }
            }
            diffs.push(nd);
        }
        Ok(ScalarComplex { field: f, tmin: self.tmin, gens, diffs })
    }
}

/// Filtered complex of field summands.
#[derive(Clone, Debug)]
pub struct ScalarComplex {
    pub field: Field,
    pub tmin: i32,
    pub gens: Vec<Vec<i32>>,
    pub diffs: Vec<BTreeMap<(usize, usize), FElem>>,
}

/// Assemble the cut complex of a marked diagram: one slot at a time, gluing
/// shared edges and simplifying in between. The marked edge stays open, so
/// every surviving object is a single arc between the two cut points.
/// Two-edge cuts of the 4-regular slot graph are connected-sum spheres (edge
/// cuts have even size, so none of size one exist, and minimal planar cuts
/// are realized by embedded circles). Splitting there and tensoring the cut
/// complexes avoids dragging one summand through the other's assembly.
fn split_at_two_cut(d: &MatchedDiagram) -> Option<(MatchedDiagram, MatchedDiagram)> {
    let nslots = d.slots.len();
    if nslots < 2 {
        return None;
    }
    // edge -> the one or two slots it touches
    let mut touch: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in d.slots.iter().enumerate() {
        for &e in &s.ends {
            touch.entry(e).or_default().push(i);
        }
    }
    let crossing: Vec<u32> = touch
        .iter()
        .filter(|(_, v)| v.len() == 2 && v[0] != v[1])
        .map(|(&e, _)| e)
        .collect();
    for (a, &e1) in crossing.iter().enumerate() {
        for &e2 in &crossing[a + 1..] {
            // connectivity without e1, e2
            let mut parent: Vec<usize> = (0..nslots).collect();
            fn find(p: &mut Vec<usize>, x: usize) -> usize {
                if p[x] != x {
                    let r = find(p, p[x]);
                    p[x] = r;
                }
                p[x]
            }
            for (&e, v) in &touch {
                if e == e1 || e == e2 || v.len() < 2 {
                    continue;
                }
                let (ra, rb) = (find(&mut parent, v[0]), find(&mut parent, v[1]));
                parent[ra] = rb;
            }
            let root0 = find(&mut parent, touch[&e1][0]);
            if (0..nslots).all(|i| find(&mut parent, i) == root0) {
                continue;
            }
            let in_a: Vec<bool> = (0..nslots)
                .map(|i| find(&mut parent, i) == root0)
                .collect();
            // both cut edges must straddle the split
            let straddles = |e: u32| in_a[touch[&e][0]] != in_a[touch[&e][1]];
            if !straddles(e1) || !straddles(e2) {
                continue;
            }
            let side = |keep: bool| -> MatchedDiagram {
                let slots: Vec<crate::diagram::Slot> = d
                    .slots
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| in_a[i] == keep)
                    .map(|(_, s)| {
                        let mut s = s.clone();
                        for e in &mut s.ends {
                            if *e == e2 {
                                *e = e1; // close the cut into a single edge
                            }
                        }
                        s
                    })
                    .collect();
                let has_marked = d
                    .marked
                    .filter(|&m| m != e2)
                    .filter(|&m| {
                        slots.iter().any(|s| s.ends.contains(&m))
                    });
                MatchedDiagram { slots, circles: 0, marked: Some(has_marked.unwrap_or(e1)) }
            };
            return Some((side(true), side(false)));
        }
    }
    None
}

pub fn assemble(d: &MatchedDiagram, pot: &Potential) -> Result<ModuleComplex, KrError> {
    d.validate()?;
    let split = if std::env::var("KRFORGE_NO_SPLIT").is_ok() {
        None
    } else {
        split_at_two_cut(d)
    };
    if let Some((a, b)) = split {
        debug!(
            "connected-sum split: {} + {} slots",
            a.slots.len(),
            b.slots.len()
        );
        let ma = assemble(&a, pot)?;
        let mb = assemble(&b, pot)?;
        let mut mc = ModuleComplex::tensor(&ma, &mb);
        for _ in 0..d.circles {
            mc.expand_circle();
        }
        return Ok(mc);
    }
    if d.slots.is_empty() {
        let mut mc = ModuleComplex {
            pot: pot.clone(),
            tmin: 0,
            gens: vec![vec![0]],
            diffs: vec![],
        };
        for _ in 1..d.circles {
            mc.expand_circle();
        }
        return Ok(mc);
    }
    let marked = d.marked.ok_or(KrError::NoMarkedEdge)?;
    // edge occurrences as corner tokens
    let mut occ: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (i, s) in d.slots.iter().enumerate() {
        for (c, &e) in s.ends.iter().enumerate() {
            occ.entry(e).or_default().push((i * 4 + c) as u32);
        }
    }
    // greedy slot order: start at the marked edge, then maximize shared edges
    let nslots = d.slots.len();
    let mut order: Vec<usize> = Vec::new();
    let mut used = vec![false; nslots];
    let first = (occ[&marked][0] / 4) as usize;
    order.push(first);
    used[first] = true;
    while order.len() < nslots {
        let mut present: BTreeMap<u32, usize> = BTreeMap::new();
        for &i in &order {
            for &e in &d.slots[i].ends {
                *present.entry(e).or_default() += 1;
            }
        }
        let mut best: Option<(usize, usize)> = None; // (shared, slot)
        for i in 0..nslots {
            if used[i] {
                continue;
            }
            let shared = d.slots[i]
                .ends
                .iter()
                .filter(|e| present.contains_key(e))
                .count();
            if best.map_or(true, |(bs, bi)| shared > bs || (shared == bs && i < bi)) {
                best = Some((shared, i));
            }
        }
        let (_, i) = best.unwrap();
        order.push(i);
        used[i] = true;
    }
    let mut cx: Option<CatComplex> = None;
    let mut added = vec![false; nslots];
    for &i in &order {
        let s = &d.slots[i];
        let pts = [
            (i * 4 + NW) as u32,
            (i * 4 + NE) as u32,
            (i * 4 + SE) as u32,
            (i * 4 + SW) as u32,
        ];
        let kc = krasner_complex(pot, s.sign, pts);
        let mut next = match cx.take() {
            None => kc,
            Some(acc) => CatComplex::tensor(&acc, &kc),
        };
        added[i] = true;
        // contract every edge both of whose occurrences are now present
        for (&e, toks) in &occ {
            if e == marked {
                continue;
            }
            let both = toks.iter().all(|&t| added[(t / 4) as usize]);
            let here = toks.iter().any(|&t| (t / 4) as usize == i);
            if both && here {
                next.contract(toks[0], toks[1]);
            }
        }
        next.simplify();
        debug!(
            "glued slot {i}: {} objects across {} levels",
            next.n_objects(),
            next.objs.len()
        );
        cx = Some(next);
    }
    let cx = cx.unwrap();
    // convert to a module complex over k[x]/w
    let cut = &occ[&marked];
    let cut_pair = (cut[0].min(cut[1]), cut[0].max(cut[1]));
    let mut tmin = cx.tmin;
    let mut gens: Vec<Vec<i32>> = Vec::new();
    let mut index: Vec<BTreeMap<u32, usize>> = Vec::new();
    for level in &cx.objs {
        let mut g = Vec::new();
        let mut ix = BTreeMap::new();
        for (&key, o) in level {
            assert!(o.circles == 0 && o.arcs == vec![cut_pair], "endgame not fully cut");
            ix.insert(key, g.len());
            g.push(o.q);
        }
        gens.push(g);
        index.push(ix);
    }
    let mut diffs: Vec<Vec<(usize, usize, Poly)>> = Vec::new();
    let f = &pot.field;
    for (k, dl) in cx.diffs.iter().enumerate() {
        let mut nd = Vec::new();
        for (&(s, t), m) in dl {
            let mut p = Poly::zero();
            for (cob, coeff) in m {
                assert_eq!(cob.comps.len(), 1, "endgame entry is a single tube");
                p = p.add(f, &Poly::monomial(f, coeff.clone(), cob.comps[0].exp as usize));
            }
            if !p.is_zero() {
                nd.push((index[k][&s], index[k + 1][&t], p));
            }
        }
        nd.sort_by_key(|&(s, t, _)| (s, t));
        diffs.push(nd);
    }
    // trim empty outer levels
    while gens.len() > 1 && gens[0].is_empty() {
        gens.remove(0);
        diffs.remove(0);
        tmin += 1;
    }
    while gens.len() > 1 && gens.last().unwrap().is_empty() {
        gens.pop();
        diffs.pop();
    }
    if diffs.len() >= gens.len() && !gens.is_empty() {
        diffs.truncate(gens.len() - 1);
    }
    let mut mc = ModuleComplex { pot: pot.clone(), tmin, gens, diffs };
    for _ in 0..d.circles {
        mc.expand_circle();
    }
    Ok(mc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{parse_diagram, parse_mpd};
    use crate::parse::parse_potential;

    fn pot(w: &str) -> Potential {
        parse_potential(w, &Field::Q).unwrap()
    }

    #[test]
    fn slot_complex_squares_to_zero() {
        for w in ["x^2", "x^3-x", "x^5-x"] {
            let p = pot(w);
            for sign in [1i8, -1] {
                let c = krasner_complex(&p, sign, [0, 1, 2, 3]);
                c.check();
            }
        }
    }

    #[test]
    fn tensor_of_two_slots_squares_to_zero() {
        let p = pot("x^3-x");
        let a = krasner_complex(&p, 1, [0, 1, 2, 3]);
        let b = krasner_complex(&p, -1, [4, 5, 6, 7]);
        let t = CatComplex::tensor(&a, &b);
        t.check();
        assert_eq!(t.n_objects(), 9);
    }

    #[test]
    fn contraction_preserves_d_squared() {
        let p = pot("x^3-x");
        let a = krasner_complex(&p, 1, [0, 1, 2, 3]);
        let b = krasner_complex(&p, 1, [4, 5, 6, 7]);
        let mut t = CatComplex::tensor(&a, &b);
        // chain the two slots horizontally: NE1-NW2, SE1-SW2
        t.contract(1, 4);
        t.check();
        t.contract(2, 7);
        t.check();
        t.simplify();
        t.check();
    }

    #[test]
    fn unknot_from_marked_circle() {
        let p = pot("x^5-x");
        let mc = assemble(&MatchedDiagram::unknot(), &p).unwrap();
        assert_eq!(mc.tmin, 0);
        assert_eq!(mc.gens, vec![vec![0]]);
    }

    #[test]
    fn unknot_from_one_slot_closure() {
        // 2-crossing curl diagram of the unknot
        for w in ["x^2", "x^3-x"] {
            let p = pot(w);
            for text in ["T + 1 2 2 1\nmark 1\n", "T - 1 2 2 1\nmark 1\n"] {
                let d = parse_mpd(text).unwrap();
                let mc = assemble(&d, &p).unwrap();
                mc.check();
                assert_eq!(mc.total_rank(), 1, "w={w} {text:?}");
                assert_eq!(mc.tmin, 0);
                assert_eq!(mc.gens, vec![vec![0]]);
            }
        }
    }

    #[test]
    fn trefoil_endgame_shape() {
        // three surviving generators in homological degrees 0, 2, 3
        let p = pot("x^2");
        let d = parse_diagram("rational(3,1)").unwrap();
        let mc = assemble(&d, &p).unwrap();
        mc.check();
        let mut ts: Vec<i32> = Vec::new();
        for (k, g) in mc.gens.iter().enumerate() {
            for _ in g {
                ts.push(mc.tmin + k as i32);
            }
        }
        let span: i32 = ts.iter().max().unwrap() - ts.iter().min().unwrap();
        assert_eq!(ts.len(), 3, "gens at t {ts:?}");
        assert_eq!(span, 3);
    }
}
