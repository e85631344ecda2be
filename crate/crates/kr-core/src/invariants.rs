//! Concordance and sliceness invariants extracted from limit page tables,
//! batch classification of potentials by their page-table sequences, and
//! cross-checks between the reduced and unreduced theories.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Signed;
use serde_json::json;

use crate::complex::assemble;
use crate::diagram::MatchedDiagram;
use crate::error::KrError;
use crate::poly::Poly;
use crate::potential::{sort_elems, Potential};
use crate::spectral::{compute_pages, PageTable, SpectralReport};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The n quantum degrees of the rank-n unreduced limit page of a knot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnreducedProfile {
    pub n: usize,
    /// sorted: j[0] <= ... <= j[n-1]
    pub j: Vec<i32>,
}

/// Quantum degrees of the unreduced limit page; it must be concentrated in
/// cohomological degree 0 with total rank n.
pub fn unreduced_js(einf: &PageTable, n: usize) -> Result<UnreducedProfile, KrError> {
    let mut j = Vec::new();
    for (&(t, q), &dim) in &einf.cells {
        if t != 0 {
            return Err(KrError::UnexpectedEinf(format!(
                "unreduced limit page has a cell at t = {t}, q = {q}"
            )));
        }
        for _ in 0..dim {
            j.push(q);
        }
    }
    if j.len() != n {
        return Err(KrError::UnexpectedEinf(format!(
            "unreduced limit page has rank {} instead of {n}",
            j.len()
        )));
    }
    Ok(UnreducedProfile { n, j })
}

/// Slice-torus invariant from the x^n - 1 profile: every r must give the
/// same value of (j_r + n + 1 - 2r) / (2(n-1)).
pub fn s_n(profile: &UnreducedProfile) -> Result<Rational64, KrError> {
    let n = profile.n as i64;
    assert!(n >= 2);
    let mut val: Option<Rational64> = None;
    for (r0, &jr) in profile.j.iter().enumerate() {
        let r = r0 as i64 + 1;
        let s = Rational64::new(jr as i64 + n + 1 - 2 * r, 2 * (n - 1));
        match &val {
            None => val = Some(s),
            Some(v) if *v == s => {}
            Some(v) => {
                return Err(KrError::Inconsistent(format!(
                    "profile {:?} is not an arithmetic ladder: r = 1 gives {v}, r = {r} gives {s}",
                    profile.j
                )))
            }
        }
    }
    Ok(val.unwrap())
}

/// Reduced slice bound: the limit page must be one-dimensional at t = 0;
/// returns its quantum degree divided by 2(n-1).
pub fn s_tilde(einf: &PageTable, n: usize) -> Result<Rational64, KrError> {
    if einf.total() != 1 {
        return Err(KrError::UnexpectedEinf(format!(
            "reduced limit page has rank {}",
            einf.total()
        )));
    }
    let (&(t, q), _) = einf.cells.iter().next().unwrap();
    if t != 0 {
        return Err(KrError::UnexpectedEinf(format!(
            "reduced limit page sits at t = {t}"
        )));
    }
    Ok(Rational64::new(q as i64, 2 * (n as i64 - 1)))
}

/// Quasi-homomorphism: the average (j_1 + ... + j_n) / (2n(n-1)).
pub fn s_quasi(profile: &UnreducedProfile) -> Rational64 {
    let n = profile.n as i64;
    let sum: i64 = profile.j.iter().map(|&x| x as i64).sum();
    Rational64::new(sum, 2 * n * (n - 1))
}

/// Slice genus lower bound: max over r of |j_r - 2r + n + 1| / (2(n-1)).
pub fn genus_bound(profile: &UnreducedProfile) -> Rational64 {
    let n = profile.n as i64;
    let best = profile
        .j
        .iter()
        .enumerate()
        .map(|(r0, &jr)| (jr as i64 - 2 * (r0 as i64 + 1) + n + 1).abs())
        .max()
        .unwrap();
    Rational64::new(best, 2 * (n - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    Ge,
    Le,
    Incomparable,
}

/// Partial order on nonnegative q-polynomials with equal coefficient sums:
/// sort the exponent multisets and compare pointwise.
pub fn compare_poincare(a: &BTreeMap<i32, usize>, b: &BTreeMap<i32, usize>) -> Comparison {
    let expand = |m: &BTreeMap<i32, usize>| -> Vec<i32> {
        let mut v = Vec::new();
        for (&e, &c) in m {
            for _ in 0..c {
                v.push(e);
            }
        }
        v
    };
    let ea = expand(a);
    let eb = expand(b);
    if ea.len() != eb.len() {
        return Comparison::Incomparable;
    }
    let ge = ea.iter().zip(&eb).all(|(x, y)| x >= y);
    let le = ea.iter().zip(&eb).all(|(x, y)| x <= y);
    match (ge, le) {
        (true, true) => Comparison::Equal,
        (true, false) => Comparison::Ge,
        (false, true) => Comparison::Le,
        (false, false) => Comparison::Incomparable,
    }
}

/// Quantum exponent multiset of a page table (summed over t).
pub fn q_exponents(p: &PageTable) -> BTreeMap<i32, usize> {
    let mut out: BTreeMap<i32, usize> = BTreeMap::new();
    for (&(_, q), &dim) in &p.cells {
        *out.entry(q).or_default() += dim;
    }
    out
}

fn page_key(report: &SpectralReport) -> Vec<(u32, Vec<((i32, i32), usize)>)> {
    report
        .pages
        .iter()
        .map(|p| (p.page, p.cells.iter().map(|(&k, &v)| (k, v)).collect()))
        .collect()
}

fn unreduced_report(d: &MatchedDiagram, pot: &Potential) -> Result<SpectralReport, KrError> {
    let mc = assemble(d, pot)?;
    compute_pages(&mc.unreduced())
}

/// Partition the potentials into classes with identical unreduced
/// page-table sequences over the given diagram. Returned classes are sorted
/// by their smallest member index.
pub fn kr_classify(
    d: &MatchedDiagram,
    pots: &[Potential],
) -> Result<Vec<Vec<usize>>, KrError> {
    #[cfg(feature = "parallel")]
    let keys: Result<Vec<_>, KrError> = pots
        .par_iter()
        .map(|p| unreduced_report(d, p).map(|r| page_key(&r)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let keys: Result<Vec<_>, KrError> = pots
        .iter()
        .map(|p| unreduced_report(d, p).map(|r| page_key(&r)))
        .collect();
    let keys = keys?;
    let mut classes: BTreeMap<&Vec<(u32, Vec<((i32, i32), usize)>)>, Vec<usize>> =
        BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        classes.entry(k).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().collect();
    out.sort_by_key(|c| c[0]);
    Ok(out)
}

/// All monic separable degree-n polynomials with coefficients in [-c, c],
/// in lexicographic coefficient order, optionally truncated to `limit`.
pub fn small_potentials(
    field: &crate::field::Field,
    n: usize,
    c: i64,
    limit: Option<usize>,
) -> Vec<Potential> {
    let mut out = Vec::new();
    let base = 2 * c + 1;
    let count = (base as u64).pow(n as u32);
    for code in 0..count {
        let mut rest = code;
        let mut coeffs = Vec::new();
        for _ in 0..n {
            coeffs.push((rest % base as u64) as i64 - c);
            rest /= base as u64;
        }
        let cf: Vec<crate::field::FElem> = coeffs
            .iter()
            .map(|&a| field.from_i64(a))
            .chain(std::iter::once(field.one()))
            .collect();
        if let Ok(pot) = Potential::new(field.clone(), Poly::new(field, cf)) {
            if pot.separable {
                out.push(pot);
            }
        }
        if let Some(l) = limit {
            if out.len() >= l {
                break;
            }
        }
    }
    out
}

/// Is the polynomial of the form (x - b)^n - c with c != 0? Such algebras
/// have the same page tables as the x^n - 1 theory.
pub fn is_gornik_shape(pot: &Potential) -> bool {
    let f = &pot.field;
    let n = pot.n;
    if n < 2 {
        return false;
    }
    // b = -(coefficient of x^{n-1}) / n
    let n_in_f = f.from_i64(n as i64);
    if f.is_zero(&n_in_f) {
        return false;
    }
    let b = f.neg(&f.div(&pot.poly.coeff(f, n - 1), &n_in_f));
    // shift: p(x + b) must equal x^n - c
    let xb = Poly::new(f, vec![b, f.one()]);
    let mut shifted = Poly::zero();
    let mut pw = Poly::one(f);
    for i in 0..=n {
        shifted = shifted.add(f, &pw.scale(f, &pot.poly.coeff(f, i)));
        pw = pw.mul(f, &xb);
    }
    let c = f.neg(&shifted.coeff(f, 0));
    if f.is_zero(&c) {
        return false;
    }
    let target = Poly::monomial(f, f.one(), n).sub(f, &Poly::constant(f, c));
    shifted == target
}

#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub potential: String,
    pub field: String,
    pub j: Vec<i32>,
    pub s_n: Option<Rational64>,
    pub s_tilde: Vec<(String, Rational64)>,
    pub s_quasi: Rational64,
    pub genus_bound: Rational64,
}

impl InvariantReport {
    pub fn to_json(&self) -> serde_json::Value {
        let mut st = serde_json::Map::new();
        for (root, v) in &self.s_tilde {
            st.insert(root.clone(), json!(v.to_string()));
        }
        json!({
            "potential": self.potential,
            "field": self.field,
            "j": self.j,
            "s_n": self.s_n.map(|v| v.to_string()),
            "s_tilde": st,
            "s_quasi": self.s_quasi.to_string(),
            "genus_bound": self.genus_bound.to_string(),
        })
    }
}

/// Full invariant report for a knot diagram and a separable polynomial:
/// unreduced profile, slice-torus value when the algebra has Gornik shape,
/// reduced bounds at every root in the coefficient field, average, and the
/// slice genus bound.
pub fn invariant_report(
    d: &MatchedDiagram,
    pot: &Potential,
) -> Result<InvariantReport, KrError> {
    let mc = assemble(d, pot)?;
    report_from_complex(&mc)
}

/// Same as [`invariant_report`], starting from an assembled module complex.
pub fn report_from_complex(mc: &crate::complex::ModuleComplex) -> Result<InvariantReport, KrError> {
    let pot = &mc.pot;
    let f = &pot.field;
    let un = compute_pages(&mc.unreduced())?;
    let profile = unreduced_js(un.einf(), pot.n)?;
    let s_n_val = if is_gornik_shape(pot) {
        Some(s_n(&profile)?)
    } else {
        s_n(&profile).ok()
    };
    let mut roots = pot.roots.clone();
    sort_elems(&mut roots);
    let mut st = Vec::new();
    for root in &roots {
        let red = compute_pages(&mc.reduced(root)?)?;
        st.push((f.fmt_elem(root), s_tilde(red.einf(), pot.n)?));
    }
    Ok(InvariantReport {
        potential: pot.display(),
        field: f.name(),
        j: profile.j.clone(),
        s_n: s_n_val,
        s_tilde: st,
        s_quasi: s_quasi(&profile),
        genus_bound: genus_bound(&profile),
    })
}

#[derive(Clone, Debug)]
pub struct ConsistencyCheck {
    pub relation: String,
    pub pass: bool,
    pub witness: String,
}

/// Cross-checks tying the diagram, its mirror, and its self connected sum:
/// mirror duality of the profile, the reduced/unreduced proximity bound, and
/// the connected-sum sandwich. Failures signal bugs, not bad input.
pub fn consistency_report(
    d: &MatchedDiagram,
    pot: &Potential,
) -> Result<Vec<ConsistencyCheck>, KrError> {
    let n = pot.n;
    let mut out = Vec::new();
    let profile = {
        let un = unreduced_report(d, pot)?;
        unreduced_js(un.einf(), n)?
    };
    // mirror duality: j_i(mirror) = -j_{n+1-i}
    {
        let md = d.mirror();
        let mp = {
            let un = unreduced_report(&md, pot)?;
            unreduced_js(un.einf(), n)?
        };
        let expect: Vec<i32> = profile.j.iter().rev().map(|&x| -x).collect();
        out.push(ConsistencyCheck {
            relation: "mirror duality of the unreduced profile".into(),
            pass: mp.j == expect,
            witness: format!("j(K) = {:?}, j(mirror K) = {:?}", profile.j, mp.j),
        });
    }
    // reduced/unreduced proximity: each 2(n-1)*s_tilde lies within n-1 of a j
    {
        let mc = assemble(d, pot)?;
        let mut roots = pot.roots.clone();
        sort_elems(&mut roots);
        let mut pass = true;
        let mut scaled = Vec::new();
        for root in &roots {
            let red = compute_pages(&mc.reduced(root)?)?;
            let st = s_tilde(red.einf(), n)?;
            let v = st * Rational64::from_integer(2 * (n as i64 - 1));
            scaled.push(v);
            let near = profile.j.iter().any(|&j| {
                (Rational64::from_integer(j as i64) - v).abs()
                    <= Rational64::from_integer(n as i64 - 1)
            });
            pass &= near;
        }
        out.push(ConsistencyCheck {
            relation: "reduced bounds track the unreduced profile".into(),
            pass,
            witness: format!(
                "j = {:?}, 2(n-1)*s_tilde = {:?}",
                profile.j,
                scaled.iter().map(|v| v.to_string()).collect::<Vec<_>>()
            ),
        });
    }
    // connected-sum sandwich: j_1(K) + j_1(K) + 1 - n <= j_i(K # K)
    {
        let ks = d.connected_sum(d)?;
        let sp = {
            let un = unreduced_report(&ks, pot)?;
            unreduced_js(un.einf(), n)?
        };
        let lower = 2 * profile.j[0] + 1 - n as i32;
        out.push(ConsistencyCheck {
            relation: "connected-sum profile obeys the lower sandwich bound".into(),
            pass: sp.j.iter().all(|&j| j >= lower),
            witness: format!("bound {lower}, j(K # K) = {:?}", sp.j),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagram;
    use crate::field::Field;
    use crate::parse::parse_potential;

    fn profile_of(name: &str, w: &str) -> UnreducedProfile {
        let d = parse_diagram(name).unwrap();
        let pot = parse_potential(w, &Field::Q).unwrap();
        let r = unreduced_report(&d, &pot).unwrap();
        unreduced_js(r.einf(), pot.n).unwrap()
    }

    #[test]
    fn unknot_profile_and_invariants() {
        let p = profile_of("unknot", "x^3-x");
        assert_eq!(p.j, vec![-2, 0, 2]);
        assert_eq!(s_n(&p).unwrap(), Rational64::from_integer(0));
        assert_eq!(s_quasi(&p), Rational64::from_integer(0));
        assert_eq!(genus_bound(&p), Rational64::from_integer(0));
    }

    #[test]
    fn trefoil_slice_torus_value() {
        let p = profile_of("rational(3,1)", "x^2-1");
        assert_eq!(s_n(&p).unwrap(), Rational64::from_integer(-1));
        assert_eq!(genus_bound(&p), Rational64::from_integer(1));
    }

    #[test]
    fn comparison_partial_order() {
        let m = |v: &[i32]| -> BTreeMap<i32, usize> {
            let mut out = BTreeMap::new();
            for &e in v {
                *out.entry(e).or_default() += 1;
            }
            out
        };
        assert_eq!(compare_poincare(&m(&[1, 3]), &m(&[-1, 1])), Comparison::Ge);
        assert_eq!(compare_poincare(&m(&[1, 3]), &m(&[1, 3])), Comparison::Equal);
        assert_eq!(
            compare_poincare(&m(&[-1, 3]), &m(&[1, 1])),
            Comparison::Incomparable
        );
        assert_eq!(
            compare_poincare(&m(&[0]), &m(&[0, 0])),
            Comparison::Incomparable
        );
    }

    #[test]
    fn gornik_shape_detection() {
        let q = Field::Q;
        assert!(is_gornik_shape(&parse_potential("x^3-1", &q).unwrap()));
        assert!(is_gornik_shape(
            &parse_potential("x^2-2*x", &q).unwrap() // (x-1)^2 - 1
        ));
        assert!(!is_gornik_shape(&parse_potential("x^3-x", &q).unwrap()));
    }

    #[test]
    fn trefoil_classification_degree_three() {
        let d = parse_diagram("rational(3,1)").unwrap();
        let pots: Vec<Potential> = ["x^3-1", "x^3-x", "x^3-x-1"]
            .iter()
            .map(|w| parse_potential(w, &Field::Q).unwrap())
            .collect();
        let classes = kr_classify(&d, &pots).unwrap();
        assert_eq!(classes, vec![vec![0], vec![1, 2]]);
    }

    #[test]
    fn consistency_relations_hold_for_trefoil() {
        let d = parse_diagram("rational(3,1)").unwrap();
        let pot = parse_potential("x^3-x", &Field::Q).unwrap();
        let checks = consistency_report(&d, &pot).unwrap();
        assert_eq!(checks.len(), 3);
        for c in &checks {
            assert!(c.pass, "{}: {}", c.relation, c.witness);
        }
    }

    #[test]
    fn report_serializes() {
        let d = parse_diagram("rational(3,1)").unwrap();
        let pot = parse_potential("x^2-1", &Field::Q).unwrap();
        let rep = invariant_report(&d, &pot).unwrap();
        assert_eq!(rep.s_n, Some(Rational64::from_integer(-1)));
        let v = rep.to_json();
        assert_eq!(v["s_n"], json!("-1"));
        assert!(v["j"].is_array());
    }
}
