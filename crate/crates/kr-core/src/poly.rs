//! Dense univariate polynomials over a `Field`, plus the root searches the
//! potential machinery needs (rational roots, quadratic factors, roots in
//! quadratic extension towers, finite-field enumeration).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::field::{self, FElem, Field};

/// Coefficients lowest degree first, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Poly {
    pub c: Vec<FElem>,
}

impl Poly {
    pub fn new(f: &Field, c: Vec<FElem>) -> Poly {
        Poly { c: field::vtrim(f, c) }
    }

    pub fn zero() -> Poly {
        Poly { c: vec![] }
    }

    pub fn constant(f: &Field, a: FElem) -> Poly {
        Poly::new(f, vec![a])
    }

    pub fn one(f: &Field) -> Poly {
        Poly::constant(f, f.one())
    }

    pub fn x(f: &Field) -> Poly {
        Poly { c: vec![f.zero(), f.one()] }
    }

    pub fn monomial(f: &Field, coeff: FElem, deg: usize) -> Poly {
        let mut c = vec![f.zero(); deg + 1];
        c[deg] = coeff;
        Poly::new(f, c)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; zero polynomial answers None.
    pub fn deg(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn lead(&self) -> Option<&FElem> {
        self.c.last()
    }

    pub fn is_monic(&self, f: &Field) -> bool {
        self.lead().map_or(false, |l| f.is_one(l))
    }

    pub fn coeff(&self, f: &Field, i: usize) -> FElem {
        self.c.get(i).cloned().unwrap_or_else(|| f.zero())
    }

    pub fn add(&self, f: &Field, o: &Poly) -> Poly {
        Poly { c: field::vadd(f, &self.c, &o.c) }
    }

    pub fn neg(&self, f: &Field) -> Poly {
        Poly { c: self.c.iter().map(|a| f.neg(a)).collect() }
    }

    pub fn sub(&self, f: &Field, o: &Poly) -> Poly {
        self.add(f, &o.neg(f))
    }

    pub fn mul(&self, f: &Field, o: &Poly) -> Poly {
        Poly { c: field::vmul(f, &self.c, &o.c) }
    }

    pub fn scale(&self, f: &Field, a: &FElem) -> Poly {
        Poly::new(f, self.c.iter().map(|x| f.mul(x, a)).collect())
    }

    pub fn divrem(&self, f: &Field, o: &Poly) -> (Poly, Poly) {
        let (q, r) = field::vdivrem(f, &self.c, &o.c);
        (Poly { c: q }, Poly { c: r })
    }

    pub fn rem(&self, f: &Field, o: &Poly) -> Poly {
        self.divrem(f, o).1
    }

    pub fn make_monic(&self, f: &Field) -> Poly {
        match self.lead() {
            None => Poly::zero(),
            Some(l) => self.scale(f, &f.inv(l).unwrap()),
        }
    }

    pub fn gcd_monic(&self, f: &Field, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(f, &b);
            a = b;
            b = r;
        }
        a.make_monic(f)
    }

    pub fn derivative(&self, f: &Field) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            f,
            self.c[1..]
                .iter()
                .enumerate()
                .map(|(i, a)| f.mul(&f.from_i64(i as i64 + 1), a))
                .collect(),
        )
    }

    pub fn eval(&self, f: &Field, at: &FElem) -> FElem {
        let mut acc = f.zero();
        for a in self.c.iter().rev() {
            acc = f.add(&f.mul(&acc, at), a);
        }
        acc
    }

    pub fn pow(&self, f: &Field, e: u32) -> Poly {
        let mut r = Poly::one(f);
        for _ in 0..e {
            r = r.mul(f, self);
        }
        r
    }

    pub fn fmt(&self, f: &Field, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for i in (0..self.c.len()).rev() {
            let a = &self.c[i];
            if f.is_zero(a) {
                continue;
            }
            let s = f.fmt_elem(a);
            let (sign, mag) = if let Some(m) = s.strip_prefix('-') {
                ("-", m.to_string())
            } else {
                ("+", s)
            };
            let needs_paren = mag.contains('+') || mag.contains('-');
            let body = match i {
                0 => mag,
                _ => {
                    let xs = if i == 1 { var.to_string() } else { format!("{var}^{i}") };
                    if mag == "1" {
                        xs
                    } else if needs_paren {
                        format!("({mag})*{xs}")
                    } else {
                        format!("{mag}*{xs}")
                    }
                }
            };
            if out.is_empty() {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(sign);
            }
            out.push_str(&body);
        }
        out
    }

    /// Coefficients as rationals, when the poly lives in the prime field Q
    /// (possibly lifted into an extension tower).
    pub fn to_rational(&self, f: &Field) -> Option<Vec<BigRational>> {
        self.c.iter().map(|a| elem_to_rational(f, a)).collect()
    }
}

fn elem_to_rational(f: &Field, a: &FElem) -> Option<BigRational> {
    match (f, a) {
        (Field::Q, FElem::Q(r)) => Some(r.clone()),
        (Field::Ext { base, .. }, FElem::Ext(cs)) => match cs.len() {
            0 => Some(BigRational::zero()),
            1 => elem_to_rational(base, &cs[0]),
            _ => None,
        },
        _ => None,
    }
}

/// Embed a rational into any field (denominator must not vanish mod p).
pub fn from_bigrat(f: &Field, r: &BigRational) -> FElem {
    match f {
        Field::Q => FElem::Q(r.clone()),
        Field::Fp(p) => {
            let pb = BigInt::from(*p);
            let n = r.numer().mod_floor(&pb);
            let d = r.denom().mod_floor(&pb);
            let n64: u64 = n.try_into().unwrap();
            let d64: u64 = d.try_into().unwrap();
            let fp = Field::Fp(*p);
            fp.mul(&FElem::Fp(n64), &fp.inv(&FElem::Fp(d64)).expect("denominator divisible by p"))
        }
        Field::Ext { base, .. } => f.lift(&from_bigrat(base, r)),
    }
}

// ---- integer polynomial helpers for root/factor search over Q ----

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs();
    if n > BigInt::from(1_000_000_000_000i64) {
        return None; // give up: factor search not feasible, caller warns
    }
    let nn: i64 = (&n).try_into().ok()?;
    let mut out = Vec::new();
    let mut d = 1i64;
    while d * d <= nn {
        if nn % d == 0 {
            out.push(BigInt::from(d));
            out.push(BigInt::from(nn / d));
        }
        d += 1;
    }
    out.sort();
    out.dedup();
    Some(out)
}

/// Monic integer polynomial from a monic rational one via y = l*x; returns
/// (coeffs lowest-first, l).
fn to_monic_integer(c: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let deg = c.len() - 1;
    let mut l = BigInt::one();
    for a in c {
        l = l.lcm(a.denom());
    }
    // M(y) = l^deg * m(y/l): coeff of y^i is a_i * l^(deg-i)
    let out = c
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let scaled = a * BigRational::from(l.pow((deg - i) as u32));
            assert!(scaled.denom().is_one());
            scaled.numer().clone()
        })
        .collect();
    (out, l)
}

fn int_eval(c: &[BigInt], at: i64) -> BigInt {
    let mut acc = BigInt::zero();
    let x = BigInt::from(at);
    for a in c.iter().rev() {
        acc = acc * &x + a;
    }
    acc
}

/// All rational roots of a monic rational polynomial (with multiplicity
/// removed): monic integer model has only integer roots dividing the
/// constant term.
pub fn rational_roots(c: &[BigRational]) -> Vec<BigRational> {
    let mut roots = Vec::new();
    let mut cur: Vec<BigRational> = c.to_vec();
    // strip roots at zero
    while cur.len() > 1 && cur[0].is_zero() {
        if !roots.contains(&BigRational::zero()) {
            roots.push(BigRational::zero());
        }
        cur.remove(0);
    }
    if cur.len() <= 1 {
        return roots;
    }
    let (ic, l) = to_monic_integer(&cur);
    let Some(divs) = divisors(&ic[0]) else {
        log::warn!("constant term too large for rational root search");
        return roots;
    };
    for d in divs {
        for s in [1i64, -1] {
            let cand = &d * BigInt::from(s);
            let candi: Result<i64, _> = (&cand).try_into();
            let Ok(candi) = candi else { continue };
            if int_eval(&ic, candi).is_zero() {
                let r = BigRational::new(cand, l.clone());
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
    }
    roots
}

/// Monic quadratic factors (over Q) of a monic rational polynomial with no
/// rational roots, by Kronecker interpolation at 0, 1, -1.
pub fn quadratic_factors(c: &[BigRational]) -> Vec<[BigRational; 2]> {
    let mut out = Vec::new();
    let mut cur = c.to_vec();
    'outer: while cur.len() - 1 >= 2 {
        if cur.len() - 1 == 2 {
            out.push([cur[0].clone() / cur[2].clone(), cur[1].clone() / cur[2].clone()]);
            break;
        }
        let (ic, l) = to_monic_integer(&cur);
        let v0 = int_eval(&ic, 0);
        let v1 = int_eval(&ic, 1);
        let vm = int_eval(&ic, -1);
        if v0.is_zero() || v1.is_zero() || vm.is_zero() {
            break; // rational roots should have been removed first
        }
        let (Some(d0s), Some(d1s)) = (divisors(&v0), divisors(&v1)) else {
            log::warn!("values too large for quadratic factor search");
            break;
        };
        for d0 in &d0s {
            for s0 in [1i64, -1] {
                let c0 = d0 * BigInt::from(s0);
                for d1 in &d1s {
                    for s1 in [1i64, -1] {
                        let c1v = d1 * BigInt::from(s1);
                        // monic quadratic y^2 + b y + c0 with 1 + b + c0 = c1v
                        let b = &c1v - BigInt::one() - &c0;
                        // check value at -1: 1 - b + c0 divides vm
                        let fm = BigInt::one() - &b + &c0;
                        if fm.is_zero() || !(&vm % &fm).is_zero() {
                            continue;
                        }
                        // trial divide
                        if let Some(q) = int_quadratic_divide(&ic, &b, &c0) {
                            // map back: y = l x: x^2 + (b/l) x + c0/l^2
                            let fb = BigRational::new(b.clone(), l.clone());
                            let fc = BigRational::new(c0.clone(), &l * &l);
                            out.push([fc.clone(), fb.clone()]);
                            // continue on quotient (in x variable)
                            cur = int_quotient_to_rational(&q, &l);
                            continue 'outer;
                        }
                    }
                }
            }
        }
        break;
    }
    out
}

/// Divide monic integer poly by y^2 + b y + c; quotient if exact.
fn int_quadratic_divide(ic: &[BigInt], b: &BigInt, c: &BigInt) -> Option<Vec<BigInt>> {
    let mut rem: Vec<BigInt> = ic.to_vec();
    let dq = ic.len() - 3;
    let mut quo = vec![BigInt::zero(); dq + 1];
    for k in (0..=dq).rev() {
        let lead = rem[k + 2].clone();
        quo[k] = lead.clone();
        rem[k + 2] = BigInt::zero();
        rem[k + 1] -= &lead * b;
        rem[k] -= &lead * c;
    }
    if rem.iter().all(|x| x.is_zero()) {
        Some(quo)
    } else {
        None
    }
}

fn int_quotient_to_rational(q: &[BigInt], l: &BigInt) -> Vec<BigRational> {
    // quotient is in y = l x; convert back to x: coeff_i / l^(deg - i) ... the
    // quotient of M(y) by a factor is monic integer in y; as a poly in x it is
    // coeff_i * l^i / l^deg ... we re-normalize to monic in x directly:
    let deg = q.len() - 1;
    q.iter()
        .enumerate()
        .map(|(i, a)| BigRational::new(a.clone(), l.pow((deg - i) as u32)))
        .collect()
}

/// All roots of `p` lying in `f`. Complete for finite fields and for
/// polynomials with rational coefficients over Q and its quadratic towers.
pub fn roots_in_field(p: &Poly, f: &Field) -> Vec<FElem> {
    if p.deg().unwrap_or(0) == 0 {
        return vec![];
    }
    // finite field: enumerate
    if f.characteristic() != 0 {
        if let Some(all) = f.enumerate() {
            return all.into_iter().filter(|a| f.is_zero(&p.eval(f, a))).collect();
        }
    }
    let mut roots: Vec<FElem> = Vec::new();
    if p.deg() == Some(1) {
        roots.push(f.neg(&f.div(&p.c[0], &p.c[1])));
        return roots;
    }
    if p.deg() == Some(2) {
        return crate::field::quadratic_roots(f, &p.c[2], &p.c[1], &p.c[0]);
    }
    let Some(rc) = p.make_monic(f).to_rational(f) else {
        log::warn!("root search skipped: coefficients not rational");
        return roots;
    };
    // rational roots, embedded
    for r in rational_roots(&rc) {
        roots.push(from_bigrat(f, &r));
    }
    // strip them (with multiplicity), then hunt quadratic factors
    let fq = Field::Q;
    let mut cur = Poly::new(&fq, rc.iter().map(|r| FElem::Q(r.clone())).collect());
    for r in rational_roots(&rc) {
        let lin = Poly::new(&fq, vec![FElem::Q(-r.clone()), fq.one()]);
        loop {
            let (q, rem) = cur.divrem(&fq, &lin);
            if rem.is_zero() && !q.is_zero() {
                cur = q;
            } else {
                break;
            }
        }
    }
    let curq: Vec<BigRational> = cur
        .c
        .iter()
        .map(|a| match a {
            FElem::Q(r) => r.clone(),
            _ => unreachable!(),
        })
        .collect();
    if curq.len() >= 3 {
        for [c0, c1] in quadratic_factors(&curq) {
            let qroots = crate::field::quadratic_roots(
                f,
                &f.one(),
                &from_bigrat(f, &c1),
                &from_bigrat(f, &c0),
            );
            for r in qroots {
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
    }
    roots
}

/// Some(true)/Some(false) when irreducibility over `f` is decided; None when
/// it cannot be checked cheaply (caller trusts with a warning).
pub fn irreducible_over(f: &Field, minpoly: &[FElem]) -> Option<bool> {
    let p = Poly { c: minpoly.to_vec() };
    let d = p.deg()?;
    if d == 1 {
        return Some(true);
    }
    // a root in the field kills irreducibility for any degree
    let roots = roots_in_field(&p, f);
    if !roots.is_empty() {
        return Some(false);
    }
    if d <= 3 {
        // for deg 2, completeness of the root search decides it; for deg 3 too
        return match f {
            Field::Q => Some(true),
            Field::Fp(_) => Some(true),
            Field::Ext { .. } => {
                if d == 2 {
                    Some(true) // quadratic: root search via sqrt is complete
                } else {
                    None
                }
            }
        };
    }
    if d == 4 {
        match f {
            Field::Q => {
                let rc = p.make_monic(f).to_rational(f)?;
                Some(quadratic_factors(&rc).is_empty())
            }
            Field::Fp(pp) => {
                // enumerate monic quadratics
                let pf = Field::Fp(*pp);
                for b in 0..*pp {
                    for c in 0..*pp {
                        let q = Poly::new(&pf, vec![FElem::Fp(c), FElem::Fp(b), pf.one()]);
                        if p.rem(&pf, &q).is_zero() {
                            return Some(false);
                        }
                    }
                }
                Some(true)
            }
            Field::Ext { .. } => None,
        }
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(c: &[i64]) -> Poly {
        let f = Field::Q;
        Poly::new(&f, c.iter().map(|&k| f.from_i64(k)).collect())
    }

    #[test]
    fn divrem_roundtrip() {
        let f = Field::Q;
        let a = qp(&[2, 0, -3, 1, 4]);
        let b = qp(&[1, 1, 1]);
        let (q, r) = a.divrem(&f, &b);
        assert_eq!(q.mul(&f, &b).add(&f, &r), a);
        assert!(r.deg().unwrap_or(0) < 2);
    }

    #[test]
    fn gcd_separability() {
        let f = Field::Q;
        let w = qp(&[0, -1, 0, 0, 0, 1]); // x^5 - x
        let g = w.gcd_monic(&f, &w.derivative(&f));
        assert!(g.deg() == Some(0));
        let w2 = qp(&[0, 0, 0, 1]); // x^3
        let g2 = w2.gcd_monic(&f, &w2.derivative(&f));
        assert!(g2.deg().unwrap() > 0);
    }

    #[test]
    fn rational_root_search() {
        let f = Field::Q;
        let w = qp(&[0, -1, 0, 0, 0, 1]); // x^5 - x = x(x-1)(x+1)(x^2+1)
        let roots = roots_in_field(&w, &f);
        assert_eq!(roots.len(), 3);
        for r in &roots {
            assert!(f.is_zero(&w.eval(&f, r)));
        }
    }

    #[test]
    fn roots_in_gaussian_field() {
        let q = Field::Q;
        let mp = vec![q.from_i64(1), q.from_i64(0), q.from_i64(1)];
        let f = Field::extension(q, "i", mp).unwrap();
        let w = Poly::new(&f, [0i64, -1, 0, 0, 0, 1].iter().map(|&k| f.from_i64(k)).collect());
        let roots = roots_in_field(&w, &f);
        assert_eq!(roots.len(), 5);
        for r in &roots {
            assert!(f.is_zero(&w.eval(&f, r)));
        }
    }

    #[test]
    fn roots_in_prime_field() {
        let f = Field::prime(5).unwrap();
        let w = Poly::new(&f, [0i64, -1, 0, 0, 0, 1].iter().map(|&k| f.from_i64(k)).collect());
        // x^5 - x vanishes on all of F_5
        assert_eq!(roots_in_field(&w, &f).len(), 5);
    }

    #[test]
    fn kronecker_quadratic_factor() {
        // (x^2+1)(x^2+x+1)
        let f = Field::Q;
        let p = qp(&[1, 0, 1]).mul(&f, &qp(&[1, 1, 1]));
        let rc = p.to_rational(&f).unwrap();
        let facs = quadratic_factors(&rc);
        assert_eq!(facs.len(), 2);
    }

    #[test]
    fn irreducibility_decisions() {
        let f = Field::Q;
        assert_eq!(irreducible_over(&f, &qp(&[1, 0, 1]).c), Some(true));
        assert_eq!(irreducible_over(&f, &qp(&[-1, 0, 1]).c), Some(false));
        assert_eq!(irreducible_over(&f, &qp(&[1, 0, 0, 0, 1]).c), Some(true)); // x^4+1
        assert_eq!(irreducible_over(&f, &qp(&[1, 0, 2, 0, 1]).c), Some(false)); // (x^2+1)^2
    }

    #[test]
    fn poly_formatting() {
        let f = Field::Q;
        assert_eq!(qp(&[0, -1, 0, 0, 0, 1]).fmt(&f, "x"), "x^5-x");
        assert_eq!(qp(&[1, 1, 1]).fmt(&f, "x"), "x^2+x+1");
        assert_eq!(Poly::zero().fmt(&f, "x"), "0");
    }
}
