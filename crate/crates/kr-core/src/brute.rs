//! Independent brute-force oracle for the first unreduced page: tensor every
//! slot complex with no simplification, close all edges, expand each circle
//! object into a tensor power of k[x]/w, and take the graded cohomology of
//! the quantum-degree-preserving part of the differential by exact rank
//! computations. Exponential in the number of slots; guarded accordingly.

use std::collections::BTreeMap;

use crate::cobordism::{Comp, Mor, Obj};
use crate::complex::{krasner_complex, CatComplex};
use crate::diagram::{MatchedDiagram, NE, NW, SE, SW};
use crate::error::KrError;
use crate::field::FElem;
use crate::linalg::rank;
use crate::poly::Poly;
use crate::potential::Potential;
use crate::spectral::PageTable;

const MAX_SLOTS: usize = 6;

/// Comultiply z into r tensor factors; each result is a list of monomial
/// exponents (one per factor) with a scalar coefficient.
fn comultiply(pot: &Potential, z: &Poly, r: usize) -> Vec<(Vec<usize>, FElem)> {
    let f = &pot.field;
    let n = pot.n;
    assert!(r >= 1);
    if r == 1 {
        return (0..n)
            .filter_map(|i| {
                let c = z.coeff(f, i);
                if f.is_zero(&c) {
                    None
                } else {
                    Some((vec![i], c))
                }
            })
            .collect();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let zb = pot.mul_mod(z, &pot.dual_basis()[i].clone());
        for (mut es, c) in comultiply(pot, &zb, r - 1) {
            es.push(i);
            out.push((es, c));
        }
    }
    out
}

/// Action of a single connected piece on monomial inputs: merge the source
/// circles and the decoration, then split into the target circles (or close
/// off via the trace form when there are none).
fn comp_action(
    pot: &Potential,
    comp: &Comp,
    src_exps: &[usize],
) -> Vec<(BTreeMap<u16, usize>, FElem)> {
    let f = &pot.field;
    let mut z = pot.reduce_mod(&Poly::monomial(f, f.one(), comp.exp as usize));
    for &c in &comp.sc {
        z = pot.mul_mod(&z, &Poly::monomial(f, f.one(), src_exps[c as usize]));
    }
    if comp.tc.is_empty() {
        let tr = pot.trace(&z);
        if f.is_zero(&tr) {
            return Vec::new();
        }
        return vec![(BTreeMap::new(), tr)];
    }
    comultiply(pot, &z, comp.tc.len())
        .into_iter()
        .map(|(es, c)| {
            let m: BTreeMap<u16, usize> =
                comp.tc.iter().copied().zip(es.into_iter()).collect();
            (m, c)
        })
        .collect()
}

/// Image of a source basis monomial under a morphism of circle-only objects,
/// as target multi-exponent -> coefficient.
fn apply_mor(
    pot: &Potential,
    m: &Mor,
    tgt: &Obj,
    src_exps: &[usize],
) -> BTreeMap<Vec<usize>, FElem> {
    let f = &pot.field;
    let mut out: BTreeMap<Vec<usize>, FElem> = BTreeMap::new();
    for (cob, coeff) in m {
        // cartesian product over the connected pieces
        let mut partial: Vec<(BTreeMap<u16, usize>, FElem)> =
            vec![(BTreeMap::new(), coeff.clone())];
        for comp in &cob.comps {
            assert!(comp.sa.is_empty() && comp.ta.is_empty(), "object not closed");
            let pieces = comp_action(pot, comp, src_exps);
            let mut next = Vec::new();
            for (acc, ac) in &partial {
                for (pm, pc) in &pieces {
                    let mut merged = acc.clone();
                    merged.extend(pm.iter().map(|(&k, &v)| (k, v)));
                    next.push((merged, f.mul(ac, pc)));
                }
            }
            partial = next;
        }
        for (assign, c) in partial {
            assert_eq!(assign.len(), tgt.circles as usize, "target circle unmatched");
            let key: Vec<usize> = (0..tgt.circles).map(|i| assign[&i]).collect();
            let prev = out.remove(&key).unwrap_or(f.zero());
            let v = f.add(&prev, &c);
            if !f.is_zero(&v) {
                out.insert(key, v);
            }
        }
    }
    out
}

fn multi_exps(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|e| {
                (0..n).map(move |i| {
                    let mut e = e.clone();
                    e.push(i);
                    e
                })
            })
            .collect();
    }
    out
}

/// Graded (first-page) unreduced cohomology of a matched diagram, computed
/// from the full unsimplified cube of resolutions.
pub fn brute_graded(d: &MatchedDiagram, pot: &Potential) -> Result<PageTable, KrError> {
    d.validate()?;
    if d.slots.len() > MAX_SLOTS {
        return Err(KrError::TooLarge(d.slots.len(), MAX_SLOTS));
    }
    let f = pot.field.clone();
    let n = pot.n;
    let mut cells: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    if d.slots.is_empty() {
        cells.insert((0, 0), 1);
    } else {
        // full tensor product of all slot complexes, then close every edge
        let mut cx: Option<CatComplex> = None;
        for (i, s) in d.slots.iter().enumerate() {
            let pts = [
                (i * 4 + NW) as u32,
                (i * 4 + NE) as u32,
                (i * 4 + SE) as u32,
                (i * 4 + SW) as u32,
            ];
            let kc = krasner_complex(pot, s.sign, pts);
            cx = Some(match cx.take() {
                None => kc,
                Some(acc) => CatComplex::tensor(&acc, &kc),
            });
        }
        let mut cx = cx.unwrap();
        let mut occ: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (i, s) in d.slots.iter().enumerate() {
            for (c, &e) in s.ends.iter().enumerate() {
                occ.entry(e).or_default().push((i * 4 + c) as u32);
            }
        }
        for toks in occ.values() {
            cx.contract(toks[0], toks[1]);
        }
        // enumerate the monomial basis: (t, q, level, object, exponents)
        let mut basis: Vec<(i32, i32)> = Vec::new(); // (t, q) per global index
        let mut index: Vec<BTreeMap<u32, usize>> = Vec::new(); // level, obj -> first index
        for (k, level) in cx.objs.iter().enumerate() {
            let mut ix = BTreeMap::new();
            for (&key, o) in level {
                assert!(o.arcs.is_empty(), "closed diagram left an open arc");
                ix.insert(key, basis.len());
                for e in multi_exps(n, o.circles as usize) {
                    let q: i32 = o.q
                        + e.iter()
                            .map(|&j| 2 * j as i32 + 1 - n as i32)
                            .sum::<i32>();
                    basis.push((cx.tmin + k as i32, q));
                }
            }
            index.push(ix);
        }
        // quantum-degree-preserving part of the differential
        let mut dmat: BTreeMap<(usize, usize), FElem> = BTreeMap::new();
        for (k, dl) in cx.diffs.iter().enumerate() {
            for (&(s, t), m) in dl {
                let so = &cx.objs[k][&s];
                let to = &cx.objs[k + 1][&t];
                let sbase = index[k][&s];
                let tbase = index[k + 1][&t];
                for (si, se) in multi_exps(n, so.circles as usize).iter().enumerate() {
                    let img = apply_mor(pot, m, to, se);
                    for (te, c) in img {
                        let ti = te
                            .iter()
                            .fold(0usize, |acc, &j| acc * n + j);
                        let gs = sbase + si;
                        let gt = tbase + ti;
                        if basis[gs].1 != basis[gt].1 {
                            continue; // filtration-lowering part, dies on page one
                        }
                        let prev = dmat.remove(&(gs, gt)).unwrap_or(f.zero());
                        let v = f.add(&prev, &c);
                        if !f.is_zero(&v) {
                            dmat.insert((gs, gt), v);
                        }
                    }
                }
            }
        }
        // cohomology per bigrade: dim - rank(out) - rank(in)
        let mut bygrade: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
        for (i, &tq) in basis.iter().enumerate() {
            bygrade.entry(tq).or_default().push(i);
        }
        let rank_between = |src: &[usize], tgt: &[usize]| -> usize {
            if src.is_empty() || tgt.is_empty() {
                return 0;
            }
            let rows: Vec<Vec<FElem>> = src
                .iter()
                .map(|&s| {
                    tgt.iter()
                        .map(|&t| dmat.get(&(s, t)).cloned().unwrap_or(f.zero()))
                        .collect()
                })
                .collect();
            rank(&f, rows)
        };
        let empty: Vec<usize> = Vec::new();
        for (&(t, q), here) in &bygrade {
            let next = bygrade.get(&(t + 1, q)).unwrap_or(&empty);
            let prev = bygrade.get(&(t - 1, q)).unwrap_or(&empty);
            let h = here.len() - rank_between(here, next) - rank_between(prev, here);
            if h > 0 {
                cells.insert((t, q), h);
            }
        }
    }
    // each split circle component tensors the answer with k[x]/w
    for _ in 0..d.circles {
        let old = std::mem::take(&mut cells);
        for ((t, q), dim) in old {
            for j in 0..n {
                *cells
                    .entry((t, q + 2 * j as i32 + 1 - n as i32))
                    .or_default() += dim;
            }
        }
    }
    Ok(PageTable { page: 1, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::assemble;
    use crate::diagram::parse_diagram;
    use crate::field::Field;
    use crate::parse::parse_potential;
    use crate::spectral::compute_pages;

    #[test]
    fn unknot_is_a_single_module() {
        let pot = parse_potential("x^3-x", &Field::Q).unwrap();
        let p = brute_graded(&MatchedDiagram::unknot(), &pot).unwrap();
        let expect: BTreeMap<(i32, i32), usize> =
            [((0, -2), 1), ((0, 0), 1), ((0, 2), 1)].into_iter().collect();
        assert_eq!(p.cells, expect);
    }

    #[test]
    fn matches_engine_on_small_diagrams() {
        let diagrams = [
            "rational(2,1)",
            "rational(3,1)",
            "rational(4,1)",
            "rational(5,2)",
        ];
        for w in ["x^2", "x^3", "x^2-1", "x^3-x"] {
            let pot = parse_potential(w, &Field::Q).unwrap();
            for name in diagrams {
                let d = parse_diagram(name).unwrap();
                if d.slots.len() > MAX_SLOTS {
                    continue;
                }
                let oracle = brute_graded(&d, &pot).unwrap();
                let mc = assemble(&d, &pot).unwrap();
                let engine = compute_pages(&mc.unreduced()).unwrap();
                assert_eq!(
                    engine.pages[0].cells, oracle.cells,
                    "mismatch for {name} with w = {w}"
                );
            }
        }
    }

    #[test]
    fn size_guard_trips() {
        let pot = parse_potential("x^2", &Field::Q).unwrap();
        let d = parse_diagram("rational(99,70)").unwrap();
        assert!(d.slots.len() > MAX_SLOTS);
        assert!(matches!(
            brute_graded(&d, &pot),
            Err(KrError::TooLarge(_, _))
        ));
    }
}
