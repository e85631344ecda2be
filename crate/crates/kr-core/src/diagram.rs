//! Matched (bipartite) link diagrams: gluings of the basic 2-crossing tangle.
//!
//! A slot is one copy of the basic tangle, with endpoint corners in circular
//! order NW, NE, SE, SW. The through-strands of a slot connect NW–NE and
//! SW–SE; its two crossings both have the slot's sign once the diagram is
//! given its matched orientation (antiparallel through-strands).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::KrError;

pub const NW: usize = 0;
pub const NE: usize = 1;
pub const SE: usize = 2;
pub const SW: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub sign: i8,
    /// edge ids at NW, NE, SE, SW
    pub ends: [u32; 4],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedDiagram {
    pub slots: Vec<Slot>,
    /// slot-free unknotted split components
    pub circles: u32,
    pub marked: Option<u32>,
}

impl MatchedDiagram {
    pub fn unknot() -> MatchedDiagram {
        MatchedDiagram { slots: vec![], circles: 1, marked: None }
    }

    pub fn n_edges(&self) -> usize {
        2 * self.slots.len()
    }

    pub fn writhe(&self) -> i64 {
        2 * self.slots.iter().map(|s| s.sign as i64).sum::<i64>()
    }

    fn occurrences(&self) -> Result<BTreeMap<u32, Vec<(usize, usize)>>, KrError> {
        let mut occ: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, s) in self.slots.iter().enumerate() {
            for (c, &e) in s.ends.iter().enumerate() {
                occ.entry(e).or_default().push((i, c));
            }
        }
        for (e, v) in &occ {
            if v.len() != 2 {
                return Err(KrError::InconsistentDiagram(format!(
                    "edge {e} occurs {} times (expected 2)",
                    v.len()
                )));
            }
        }
        Ok(occ)
    }

    pub fn validate(&self) -> Result<(), KrError> {
        if self.slots.is_empty() && self.circles == 0 {
            return Err(KrError::InconsistentDiagram("empty diagram".into()));
        }
        let occ = self.occurrences()?;
        if let Some(m) = self.marked {
            if !self.slots.is_empty() && !occ.contains_key(&m) {
                return Err(KrError::InconsistentDiagram(format!("marked edge {m} missing")));
            }
        }
        self.check_planar(&occ)?;
        self.orient()?;
        Ok(())
    }

    /// Rotation-system Euler characteristic check: V - E + F = 2 per sphere.
    fn check_planar(&self, occ: &BTreeMap<u32, Vec<(usize, usize)>>) -> Result<(), KrError> {
        if self.slots.is_empty() {
            return Ok(());
        }
        let v = self.slots.len();
        let e = 2 * v;
        // components of the 4-valent graph
        let mut uf: Vec<usize> = (0..v).collect();
        fn find(uf: &mut Vec<usize>, mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for pair in occ.values() {
            let (a, b) = (find(&mut uf, pair[0].0), find(&mut uf, pair[1].0));
            uf[a] = b;
        }
        let mut comps = std::collections::BTreeSet::new();
        for i in 0..v {
            let r = find(&mut uf, i);
            comps.insert(r);
        }
        // face tracing: darts are (slot, corner); alpha = other end of the
        // edge, then turn to the next corner clockwise
        let mut alpha = vec![(0usize, 0usize); 4 * v];
        for pair in occ.values() {
            let (d0, d1) = (pair[0], pair[1]);
            alpha[d0.0 * 4 + d0.1] = d1;
            alpha[d1.0 * 4 + d1.1] = d0;
        }
        let mut seen = vec![false; 4 * v];
        let mut f = 0;
        for start in 0..4 * v {
            if seen[start] {
                continue;
            }
            f += 1;
            let mut d = start;
            while !seen[d] {
                seen[d] = true;
                let (s, c) = alpha[d];
                d = s * 4 + (c + 1) % 4;
            }
        }
        let chi = v as i64 - e as i64 + f as i64;
        if chi != 2 * comps.len() as i64 {
            return Err(KrError::InconsistentDiagram(format!(
                "gluing is not planar (V-E+F = {chi}, expected {})",
                2 * comps.len()
            )));
        }
        Ok(())
    }

    /// Matched orientation: per slot a flag u (true: in at NW and SE). Every
    /// edge must have one in- and one out-endpoint. Returns the canonical
    /// flags and the number of orientation classes up to global reversal.
    pub fn orient(&self) -> Result<(Vec<bool>, u64), KrError> {
        let n = self.slots.len();
        if n == 0 {
            return Ok((vec![], 1));
        }
        let occ = self.occurrences()?;
        // union-find with parity: parity[x] = u_x XOR u_root
        let mut parent: Vec<usize> = (0..n).collect();
        let mut parity: Vec<bool> = vec![false; n];
        fn find(parent: &mut Vec<usize>, parity: &mut Vec<bool>, x: usize) -> (usize, bool) {
            if parent[x] == x {
                return (x, false);
            }
            let (r, p) = find(parent, parity, parent[x]);
            parent[x] = r;
            parity[x] ^= p;
            (r, parity[x])
        }
        let side = |c: usize| c == NE || c == SW;
        for pair in occ.values() {
            let ((s1, c1), (s2, c2)) = (pair[0], pair[1]);
            let rhs = true ^ side(c1) ^ side(c2);
            let (r1, p1) = find(&mut parent, &mut parity, s1);
            let (r2, p2) = find(&mut parent, &mut parity, s2);
            if r1 == r2 {
                if p1 ^ p2 != rhs {
                    return Err(KrError::InconsistentDiagram(
                        "no matched orientation exists".into(),
                    ));
                }
            } else {
                parent[r1] = r2;
                parity[r1] = p1 ^ p2 ^ rhs;
            }
        }
        // canonical: in the component of the lowest edge id, the slot holding
        // that edge gets u = true; likewise per component
        let mut root_fix: BTreeMap<usize, bool> = BTreeMap::new();
        for pair in occ.values() {
            let (s, _) = pair[0];
            let (r, p) = find(&mut parent, &mut parity, s);
            root_fix.entry(r).or_insert(p); // u_s = true => u_root = p
        }
        let mut flags = vec![false; n];
        let mut roots = std::collections::BTreeSet::new();
        for s in 0..n {
            let (r, p) = find(&mut parent, &mut parity, s);
            let base = root_fix.get(&r).copied().unwrap_or(false);
            flags[s] = p == base;
            roots.insert(r);
        }
        // classes up to global reversal: 2^(diagram components - 1)
        let total_comps = roots.len() as u64 + self.circles as u64;
        let classes = 1u64 << (total_comps - 1);
        Ok((flags, classes))
    }

    pub fn mirror(&self) -> MatchedDiagram {
        MatchedDiagram {
            slots: self
                .slots
                .iter()
                .map(|s| Slot { sign: -s.sign, ends: s.ends })
                .collect(),
            circles: self.circles,
            marked: self.marked,
        }
    }

    pub fn disjoint_union(&self, other: &MatchedDiagram) -> MatchedDiagram {
        let off = self.n_edges() as u32;
        let mut slots = self.slots.clone();
        slots.extend(other.slots.iter().map(|s| Slot {
            sign: s.sign,
            ends: [s.ends[0] + off, s.ends[1] + off, s.ends[2] + off, s.ends[3] + off],
        }));
        MatchedDiagram {
            slots,
            circles: self.circles + other.circles,
            marked: self.marked.or_else(|| other.marked.map(|m| m + off)),
        }
    }

    pub fn connected_sum(&self, other: &MatchedDiagram) -> Result<MatchedDiagram, KrError> {
        // connect sum with a split unknot component is the identity
        if self.slots.is_empty() {
            let mut d = other.clone();
            d.circles += self.circles.checked_sub(1).ok_or(KrError::NoMarkedEdge)?;
            return Ok(d);
        }
        if other.slots.is_empty() {
            let mut d = self.clone();
            d.circles += other.circles.checked_sub(1).ok_or(KrError::NoMarkedEdge)?;
            return Ok(d);
        }
        let m1 = self.marked.ok_or(KrError::NoMarkedEdge)?;
        let m2 = other.marked.ok_or(KrError::NoMarkedEdge)?;
        let occ1 = self.occurrences()?;
        let occ2 = other.occurrences()?;
        let p1 = occ1.get(&m1).ok_or(KrError::NoMarkedEdge)?.clone();
        let p2 = occ2.get(&m2).ok_or(KrError::NoMarkedEdge)?.clone();
        for swap in [false, true] {
            let mut d = MatchedDiagram {
                slots: self.slots.clone(),
                circles: self.circles + other.circles,
                marked: None,
            };
            let off = self.n_edges() as u32;
            d.slots.extend(other.slots.iter().map(|s| Slot {
                sign: s.sign,
                ends: [s.ends[0] + off, s.ends[1] + off, s.ends[2] + off, s.ends[3] + off],
            }));
            // splice: cut both marked edges and cross-join
            let fresh1 = d.n_edges() as u32;
            let fresh2 = fresh1 + 1;
            let ((sa, ca), (sb, cb)) = (p1[0], p1[1]);
            let ((sc, cc), (sd, cd)) = if swap { (p2[1], p2[0]) } else { (p2[0], p2[1]) };
            d.slots[sa].ends[ca] = fresh1;
            d.slots[self.slots.len() + sc].ends[cc] = fresh1;
            d.slots[sb].ends[cb] = fresh2;
            d.slots[self.slots.len() + sd].ends[cd] = fresh2;
            let r = renumber(d);
            if r.orient().is_ok() {
                // mark one of the joint edges: where the first splice went
                let mut d = r.diagram;
                d.marked = Some(r.marked_hint.unwrap_or(0));
                return Ok(d);
            }
        }
        Err(KrError::InconsistentDiagram(
            "connected sum admits no matched orientation".into(),
        ))
    }

    pub fn emit_mpd(&self) -> String {
        let mut out = String::new();
        for s in &self.slots {
            let sign = if s.sign > 0 { '+' } else { '-' };
            out.push_str(&format!(
                "T {} {} {} {} {}\n",
                sign, s.ends[0], s.ends[1], s.ends[2], s.ends[3]
            ));
        }
        for _ in 0..self.circles {
            out.push_str("circle\n");
        }
        if let Some(m) = self.marked {
            out.push_str(&format!("mark {m}\n"));
        }
        out
    }
}

/// Renumbered diagram plus the edge id that the first fresh (spliced) edge
/// received.
struct Renumbered {
    diagram: MatchedDiagram,
    marked_hint: Option<u32>,
}

impl std::ops::Deref for Renumbered {
    type Target = MatchedDiagram;
    fn deref(&self) -> &MatchedDiagram {
        &self.diagram
    }
}

impl Renumbered {
    fn orient(&self) -> Result<(Vec<bool>, u64), KrError> {
        self.diagram.orient()
    }
}

fn renumber(d: MatchedDiagram) -> Renumbered {
    let fresh1 = (2 * d.slots.len()) as u32; // id assigned during splicing
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    let mut slots = Vec::with_capacity(d.slots.len());
    for s in &d.slots {
        let mut ends = [0u32; 4];
        for (c, &e) in s.ends.iter().enumerate() {
            let next = map.len() as u32;
            ends[c] = *map.entry(e).or_insert(next);
        }
        slots.push(Slot { sign: s.sign, ends });
    }
    let marked_hint = map.get(&fresh1).copied();
    let marked = d.marked.and_then(|m| map.get(&m).copied());
    Renumbered {
        diagram: MatchedDiagram { slots, circles: d.circles, marked },
        marked_hint,
    }
}

// ---- even continued fractions ----

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// [a_1, ..., a_k] = a_k + 1/(a_{k-1} + 1/(... + a_1)), all a_i even; a
/// trailing zero (a_k = 0) is permitted, interior zeros never occur.
pub fn even_continued_fraction(p: i64, q: i64) -> Result<Vec<i64>, KrError> {
    assert!(q >= 1, "denominator must be positive");
    assert!(gcd(p, q) == 1, "fraction must be reduced");
    if p % 2 != 0 && q % 2 != 0 {
        return Err(KrError::OddFraction(p, q));
    }
    fn go(p: i64, q: i64, out: &mut Vec<i64>) {
        // fraction p/q, q may be negative here
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        if q == 1 {
            out.push(p);
            return;
        }
        // nearest even integer to p/q; interior entries stay nonzero because
        // |p/q| > 1 on every recursive call
        let mut e = 2 * div_round(p, 2 * q);
        for cand in [e - 2, e + 2] {
            if (p - cand * q).abs() < (p - e * q).abs() {
                e = cand;
            }
        }
        let r = p - e * q;
        go(q, r, out);
        out.push(e);
    }
    let mut out = Vec::new();
    go(p, q, &mut out);
    debug_assert_eq!(eval_cf(&out), Some((p, q)));
    Ok(out)
}

fn div_round(a: i64, b: i64) -> i64 {
    // round to nearest, ties toward +inf; callers fix up by probing ±2
    let q = a.div_euclid(b);
    let r = a.rem_euclid(b);
    if 2 * r >= b {
        q + 1
    } else {
        q
    }
}

/// Evaluate a continued fraction back to p/q (for checking).
pub fn eval_cf(a: &[i64]) -> Option<(i64, i64)> {
    let (mut p, mut q) = (a[0], 1i64);
    for &ak in &a[1..] {
        // x -> ak + 1/x
        let (np, nq) = (ak * p + q, p);
        p = np;
        q = nq;
    }
    if q < 0 {
        p = -p;
        q = -q;
    }
    if q == 0 {
        return None;
    }
    let g = gcd(p, q);
    Some((p / g, q / g))
}

/// Slot cost of realizing p/q as a matched rational tangle.
pub fn slot_cost(p: i64, q: i64) -> Option<i64> {
    even_continued_fraction(p, q).ok().map(|cf| cf.iter().map(|a| a.abs() / 2).sum())
}

// ---- tangle construction ----

/// Fraction sign convention: a horizontal twist region contributing +2 to
/// the tangle fraction consists of one slot of this sign (calibrated so that
/// rational(3,1) is the trefoil chirality with s_2 = -1).
const TW: i8 = -1;

#[derive(Clone)]
struct Tangle {
    /// sign per slot; corner tokens are (slot, corner) packed as slot*4+c
    signs: Vec<i8>,
    slot_ends: Vec<[u32; 4]>, // placeholder token = own packed id
    corners: [u32; 4],        // boundary tokens at NW, NE, SE, SW
    bonds: Vec<(u32, u32)>,   // internal edges between tokens
}

fn token(slot: usize, corner: usize) -> u32 {
    (slot * 4 + corner) as u32
}

impl Tangle {
    /// Horizontal twist tangle a/1 with |a|/2 slots, a even and nonzero.
    fn twists(a: i64) -> Tangle {
        assert!(a != 0 && a % 2 == 0);
        let mut t = Tangle {
            signs: vec![],
            slot_ends: vec![],
            corners: [0; 4],
            bonds: vec![],
        };
        let s = if a > 0 { TW } else { -TW };
        let k = (a.abs() / 2) as usize;
        for i in 0..k {
            t.signs.push(s);
            t.slot_ends.push([token(i, NW), token(i, NE), token(i, SE), token(i, SW)]);
            if i > 0 {
                t.bonds.push((token(i - 1, NE), token(i, NW)));
                t.bonds.push((token(i - 1, SE), token(i, SW)));
            }
        }
        t.corners = [token(0, NW), token(k - 1, NE), token(k - 1, SE), token(0, SW)];
        t
    }

    /// x -> 1/x, realized as rotate-then-mirror so the clockwise rotation
    /// system stays consistent. Rotation leaves each slot datum unchanged;
    /// the mirror flips signs and swaps each slot's NW/NE and SE/SW corners.
    fn invert(&mut self) {
        for s in &mut self.signs {
            *s = -*s;
        }
        for e in &mut self.slot_ends {
            e.swap(NW, NE);
            e.swap(SE, SW);
        }
        self.corners = [self.corners[NW], self.corners[SW], self.corners[SE], self.corners[NE]];
    }

    /// Append a horizontal twist region of a crossings on the right.
    fn add_twists(&mut self, a: i64) {
        if a == 0 {
            return;
        }
        let other = Tangle::twists(a);
        let off = self.signs.len() as u32 * 4;
        let map = |t: u32| t + off;
        self.signs.extend(other.signs.iter().copied());
        self.slot_ends.extend(other.slot_ends.iter().map(|e| e.map(map)));
        self.bonds.extend(other.bonds.iter().map(|&(x, y)| (map(x), map(y))));
        self.bonds.push((self.corners[NE], map(other.corners[NW])));
        self.bonds.push((self.corners[SE], map(other.corners[SW])));
        self.corners[NE] = map(other.corners[NE]);
        self.corners[SE] = map(other.corners[SE]);
    }

    /// Tangle sum: self on the left, other on the right.
    fn sum(&mut self, other: &Tangle) {
        let off = self.signs.len() as u32 * 4;
        let map = |t: u32| t + off;
        self.signs.extend(other.signs.iter().copied());
        self.slot_ends.extend(other.slot_ends.iter().map(|e| e.map(map)));
        self.bonds.extend(other.bonds.iter().map(|&(x, y)| (map(x), map(y))));
        self.bonds.push((self.corners[NE], map(other.corners[NW])));
        self.bonds.push((self.corners[SE], map(other.corners[SW])));
        self.corners[NE] = map(other.corners[NE]);
        self.corners[SE] = map(other.corners[SE]);
    }

    /// Numerator closure: join NW–NE and SW–SE.
    fn close(mut self) -> MatchedDiagram {
        self.bonds.push((self.corners[NW], self.corners[NE]));
        self.bonds.push((self.corners[SW], self.corners[SE]));
        // edges = bonds, numbered deterministically; tokens map to formal
        // corners through slot_ends (inversions permute the assignment)
        let mut corner_of: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for (i, e) in self.slot_ends.iter().enumerate() {
            for (c, &t) in e.iter().enumerate() {
                corner_of.insert(t, (i, c));
            }
        }
        let mut ends: Vec<[u32; 4]> = vec![[u32::MAX; 4]; self.signs.len()];
        let mut bonds = self.bonds.clone();
        bonds.sort_by_key(|&(a, b)| (a.min(b), a.max(b)));
        for (eid, &(x, y)) in bonds.iter().enumerate() {
            for t in [x, y] {
                let (i, c) = corner_of[&t];
                ends[i][c] = eid as u32;
            }
        }
        let slots = self
            .signs
            .iter()
            .zip(ends)
            .map(|(&sign, ends)| Slot { sign, ends })
            .collect();
        MatchedDiagram { slots, circles: 0, marked: Some(0) }
    }
}

/// Rational tangle of fraction p/q from its even continued fraction.
fn rational_tangle(p: i64, q: i64) -> Result<Tangle, KrError> {
    let cf = even_continued_fraction(p, q)?;
    let mut t = Tangle::twists(cf[0]);
    for &a in &cf[1..] {
        t.invert();
        t.add_twists(a);
    }
    Ok(t)
}

/// Two-bridge link closure of the rational tangle p/q (the `rational(p,q)`
/// builder). An odd/odd fraction is evenized by q -> q + |p|, which keeps
/// the two-bridge class.
pub fn two_bridge(p: i64, q: i64) -> Result<MatchedDiagram, KrError> {
    if q < 1 {
        return Err(KrError::Parse("rational(p,q) needs q >= 1".into()));
    }
    if gcd(p, q) != 1 {
        return Err(KrError::Parse("rational(p,q) needs gcd(p,q) = 1".into()));
    }
    if p == 0 {
        return Ok(MatchedDiagram { slots: vec![], circles: 2, marked: None });
    }
    let q = if p % 2 != 0 && q % 2 != 0 { q + p.abs() } else { q };
    let d = rational_tangle(p, q)?.close();
    d.validate()?;
    Ok(d)
}

// ---- Montesinos links ----

/// Search for per-fraction integer shifts making every fraction even/odd or
/// odd/even, minimizing the slot count; the compensating integer is absorbed
/// into an even-denominator fraction or kept as an even integer tangle.
pub fn montesinos(fracs: &[(i64, i64)]) -> Result<MatchedDiagram, KrError> {
    let mut fr: Vec<(i64, i64)> = Vec::new();
    for &(p, q) in fracs {
        if q < 1 {
            return Err(KrError::Parse("montesinos denominators must be positive".into()));
        }
        if gcd(p, q) != 1 {
            return Err(KrError::Parse("montesinos fractions must be reduced".into()));
        }
        if p != 0 {
            fr.push((p, q)); // zero tangles may be dropped
        }
    }
    if fr.is_empty() {
        return Ok(MatchedDiagram::unknot());
    }
    if fr.len() == 1 {
        return two_bridge(fr[0].0, fr[0].1);
    }
    let k = fr.len();
    let mut best: Option<(i64, Vec<(i64, i64)>)> = None;
    let mut consider = |cost: i64, tangles: Vec<(i64, i64)>| {
        if best.as_ref().map_or(true, |(c, t)| cost < *c || (cost == *c && tangles < *t)) {
            best = Some((cost, tangles));
        }
    };
    let shifts = [-2i64, -1, 0, 1, 2];
    let mut idx = vec![0usize; k];
    loop {
        // candidate: p_i' = p_i - m_i q_i
        let ms: Vec<i64> = idx.iter().map(|&i| shifts[i]).collect();
        let cand: Vec<(i64, i64)> = fr
            .iter()
            .zip(&ms)
            .map(|(&(p, q), &m)| (p - m * q, q))
            .collect();
        let ok = cand.iter().all(|&(p, q)| p % 2 == 0 || q % 2 == 0);
        if ok {
            let c: i64 = ms.iter().sum();
            let costs: Option<Vec<i64>> =
                cand.iter().map(|&(p, q)| slot_cost(p, q)).collect();
            if let Some(costs) = costs {
                let base: i64 = costs.iter().sum();
                if c == 0 {
                    consider(base, cand.clone());
                } else {
                    // absorb c into an even-denominator fraction
                    for (j, &(p, q)) in cand.iter().enumerate() {
                        if q % 2 == 0 {
                            if let Some(cj) = slot_cost(p + c * q, q) {
                                let mut t = cand.clone();
                                t[j] = (p + c * q, q);
                                consider(base - costs[j] + cj, t);
                            }
                        }
                    }
                    // or keep it as an even integer tangle
                    if c % 2 == 0 {
                        let mut t = vec![(c, 1)];
                        t.extend(cand.iter().copied());
                        consider(base + c.abs() / 2, t);
                    }
                }
            }
        }
        // next index vector
        let mut i = 0;
        loop {
            if i == k {
                break;
            }
            idx[i] += 1;
            if idx[i] < shifts.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let Some((_, tangles)) = best else {
        let aset: Vec<usize> = fr
            .iter()
            .enumerate()
            .filter(|(_, &(p, q))| p % 2 != 0 && q % 2 != 0)
            .map(|(i, _)| i)
            .collect();
        return Err(KrError::NotBipartite(format!(
            "Montesinos normalization failed: fractions {fr:?}, odd/odd at positions {aset:?}, \
             no integer shift assignment yields even fractions"
        )));
    };
    let mut t: Option<Tangle> = None;
    for &(p, q) in &tangles {
        let tq = rational_tangle(p, q)?;
        match &mut t {
            None => t = Some(tq),
            Some(acc) => acc.sum(&tq),
        }
    }
    let d = t.unwrap().close();
    d.validate()?;
    Ok(d)
}

pub fn pretzel(ps: &[i64]) -> Result<MatchedDiagram, KrError> {
    let fr: Vec<(i64, i64)> = ps
        .iter()
        .map(|&p| {
            if p == 0 {
                Err(KrError::Parse("pretzel parameters must be nonzero".into()))
            } else if p > 0 {
                Ok((1, p))
            } else {
                Ok((-1, -p))
            }
        })
        .collect::<Result<_, _>>()?;
    montesinos(&fr)
}

// ---- mpd text format ----

pub fn parse_mpd(text: &str) -> Result<MatchedDiagram, KrError> {
    let mut d = MatchedDiagram { slots: vec![], circles: 0, marked: None };
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let head = it.next().unwrap();
        let err = |msg: &str| KrError::Parse(format!("line {}: {msg}", ln + 1));
        match head {
            "T" => {
                let sign = match it.next() {
                    Some("+") => 1i8,
                    Some("-") => -1,
                    _ => return Err(err("expected + or - after T")),
                };
                let mut ends = [0u32; 4];
                for e in ends.iter_mut() {
                    *e = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err("expected 4 edge ids"))?;
                }
                if it.next().is_some() {
                    return Err(err("trailing tokens"));
                }
                d.slots.push(Slot { sign, ends });
            }
            "circle" => d.circles += 1,
            "mark" => {
                let m = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("expected edge id after mark"))?;
                d.marked = Some(m);
            }
            _ => return Err(err("expected 'T', 'circle' or 'mark'")),
        }
    }
    if d.marked.is_none() && !d.slots.is_empty() {
        d.marked = Some(d.slots.iter().flat_map(|s| s.ends).min().unwrap());
    }
    d.validate()?;
    Ok(d)
}

// ---- diagram mini-language ----

/// `pretzel(2,-3,5)`, `montesinos(1/2,-1/3,1/5)`, `rational(5,2)`, `unknot`,
/// postfix `!` for mirror, infix `#` for connected sum.
pub fn parse_diagram(expr: &str) -> Result<MatchedDiagram, KrError> {
    let parts: Vec<&str> = split_top(expr, '#');
    let mut acc: Option<MatchedDiagram> = None;
    for part in parts {
        let d = parse_primary(part.trim())?;
        acc = Some(match acc {
            None => d,
            Some(a) => a.connected_sum(&d)?,
        });
    }
    acc.ok_or_else(|| KrError::Parse("empty diagram expression".into()))
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_primary(s: &str) -> Result<MatchedDiagram, KrError> {
    let s = s.trim();
    if let Some(inner) = s.strip_suffix('!') {
        return Ok(parse_primary(inner)?.mirror());
    }
    if s == "unknot" {
        return Ok(MatchedDiagram::unknot());
    }
    let open = s
        .find('(')
        .ok_or_else(|| KrError::Parse(format!("cannot parse diagram '{s}'")))?;
    if !s.ends_with(')') {
        return Err(KrError::Parse(format!("expected ')' in '{s}'")));
    }
    let name = &s[..open];
    let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').collect();
    let ints = |args: &[&str]| -> Result<Vec<i64>, KrError> {
        args.iter()
            .map(|a| {
                a.trim()
                    .parse()
                    .map_err(|_| KrError::Parse(format!("expected integer '{a}'")))
            })
            .collect()
    };
    match name.trim() {
        "pretzel" => pretzel(&ints(&args)?),
        "rational" => {
            let v = ints(&args)?;
            if v.len() != 2 {
                return Err(KrError::Parse("rational(p,q) takes two arguments".into()));
            }
            two_bridge(v[0], v[1])
        }
        "montesinos" => {
            let fr: Vec<(i64, i64)> = args
                .iter()
                .map(|a| {
                    let a = a.trim();
                    if let Some((p, q)) = a.split_once('/') {
                        Ok((
                            p.trim()
                                .parse()
                                .map_err(|_| KrError::Parse(format!("bad fraction '{a}'")))?,
                            q.trim()
                                .parse()
                                .map_err(|_| KrError::Parse(format!("bad fraction '{a}'")))?,
                        ))
                    } else {
                        Ok((
                            a.parse()
                                .map_err(|_| KrError::Parse(format!("bad fraction '{a}'")))?,
                            1,
                        ))
                    }
                })
                .collect::<Result<_, _>>()?;
            montesinos(&fr)
        }
        other => Err(KrError::Parse(format!("unknown diagram builder '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecf_examples() {
        assert_eq!(even_continued_fraction(2, 1).unwrap(), vec![2]);
        assert_eq!(even_continued_fraction(5, 2).unwrap(), vec![2, 2]);
        assert_eq!(even_continued_fraction(8, 3).unwrap(), vec![-2, 2, 2]);
        assert!(matches!(
            even_continued_fraction(3, 1),
            Err(KrError::OddFraction(3, 1))
        ));
    }

    #[test]
    fn ecf_exhaustive_oracle() {
        // oracle: exhaustive search over even tuples of length <= 4, |a| <= 6
        let evens = [-6i64, -4, -2, 0, 2, 4, 6];
        let mut table: std::collections::BTreeMap<(i64, i64), Vec<i64>> = Default::default();
        let mut push = |cf: Vec<i64>| {
            // interior zeros forbidden, trailing zero fine
            if cf[..cf.len() - 1].iter().any(|&a| a == 0) && cf.len() > 1 {
                return;
            }
            if let Some(pq) = eval_cf(&cf) {
                table.entry(pq).or_insert(cf);
            }
        };
        for &a in &evens {
            push(vec![a]);
            for &b in &evens {
                push(vec![a, b]);
                for &c in &evens {
                    push(vec![a, b, c]);
                }
            }
        }
        for (&(p, q), _) in table.iter() {
            if q < 1 || gcd(p, q) != 1 {
                continue;
            }
            let cf = even_continued_fraction(p, q).unwrap();
            assert_eq!(eval_cf(&cf), Some((p, q)), "cf {cf:?} for {p}/{q}");
            assert!(cf.iter().all(|a| a % 2 == 0));
            assert!(!cf[..cf.len().saturating_sub(1)].contains(&0) || cf.len() == 1);
        }
    }

    #[test]
    fn slot_counts() {
        // slot count = sum |a_i| / 2
        let cf = even_continued_fraction(5, 2).unwrap();
        let t = rational_tangle(5, 2).unwrap();
        assert_eq!(t.signs.len() as i64, cf.iter().map(|a| a.abs() / 2).sum::<i64>());
        assert_eq!(rational_tangle(2, 1).unwrap().signs.len(), 1);
    }

    #[test]
    fn two_bridge_diagrams() {
        let d = two_bridge(3, 1).unwrap(); // trefoil via q -> q + p
        assert_eq!(d.slots.len(), 3);
        d.validate().unwrap();
        let (_, classes) = d.orient().unwrap();
        assert_eq!(classes, 1); // knot: one class up to reversal
        let f8 = two_bridge(5, 2).unwrap();
        f8.validate().unwrap();
    }

    #[test]
    fn montesinos_examples() {
        let p = pretzel(&[2, -3, 5]).unwrap();
        p.validate().unwrap();
        assert_eq!(p.orient().unwrap().1, 1); // it is a knot
        let p2 = pretzel(&[5, -3, 2]).unwrap();
        p2.validate().unwrap();
        assert!(matches!(pretzel(&[3, 3, 3]), Err(KrError::NotBipartite(_))));
        let m = montesinos(&[(1, 5), (2, 3), (-1, 2)]).unwrap();
        m.validate().unwrap();
    }

    #[test]
    fn mirror_involutive() {
        let d = pretzel(&[2, -3, 5]).unwrap();
        assert_eq!(d.mirror().mirror(), d);
        assert_eq!(d.mirror().writhe(), -d.writhe());
    }

    #[test]
    fn mpd_roundtrip() {
        let d = pretzel(&[2, -3, 5]).unwrap();
        let text = d.emit_mpd();
        let d2 = parse_mpd(&text).unwrap();
        assert_eq!(d, d2);
        // single slot closure
        let u = parse_mpd("T + 1 2 2 1\nmark 1\n").unwrap();
        assert_eq!(u.slots.len(), 1);
        // an edge used three times
        assert!(parse_mpd("T + 1 1 1 2\nT + 2 3 3 4\n").is_err());
    }

    #[test]
    fn orient_failure_detected() {
        // diagonal closure NW–SE, NE–SW is disoriented
        let bad = MatchedDiagram {
            slots: vec![Slot { sign: 1, ends: [1, 2, 1, 2] }],
            circles: 0,
            marked: Some(1),
        };
        assert!(bad.orient().is_err());
        // both axis-parallel closures are fine
        for ends in [[1, 2, 2, 1], [1, 1, 2, 2]] {
            let ok = MatchedDiagram {
                slots: vec![Slot { sign: 1, ends }],
                circles: 0,
                marked: Some(1),
            };
            ok.validate().unwrap();
        }
    }

    #[test]
    fn orientation_classes_split() {
        let d = pretzel(&[2, -3, 5]).unwrap();
        let dd = d.disjoint_union(&d);
        assert_eq!(dd.orient().unwrap().1, 2);
    }

    #[test]
    fn connected_sum_shape() {
        let d = pretzel(&[2, -3, 5]).unwrap();
        let s = d.connected_sum(&d).unwrap();
        s.validate().unwrap();
        assert_eq!(s.slots.len(), 2 * d.slots.len());
        assert_eq!(s.writhe(), 2 * d.writhe());
    }

    #[test]
    fn diagram_language() {
        parse_diagram("pretzel(2,-3,5)").unwrap();
        parse_diagram("rational(5,2)").unwrap();
        parse_diagram("montesinos(1/2,-1/3,1/5)").unwrap();
        parse_diagram("unknot").unwrap();
        let m = parse_diagram("pretzel(2,-3,5)!").unwrap();
        assert_eq!(m, parse_diagram("pretzel(2,-3,5)").unwrap().mirror());
        parse_diagram("pretzel(2,-3,5) # pretzel(2,-3,5)").unwrap();
        assert!(parse_diagram("garbage(1)").is_err());
    }
}
