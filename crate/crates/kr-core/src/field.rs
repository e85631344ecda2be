//! Exact field arithmetic: Q, prime fields, and algebraic extension towers.
//!
//! Extension elements are coefficient vectors over the base (lowest degree
//! first, trailing zeros trimmed), so structural equality is field equality.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FElem {
    Q(BigRational),
    Fp(u64),
    Ext(Vec<FElem>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Q,
    Fp(u64),
    Ext {
        base: Box<Field>,
        gen: String,
        /// monic, over base, length = degree + 1
        minpoly: Vec<FElem>,
    },
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn prime(p: u64) -> Result<Field, String> {
        if !is_prime(p) {
            return Err(format!("{p} is not prime"));
        }
        Ok(Field::Fp(p))
    }

    /// Extension by a monic irreducible polynomial over `base`.
    pub fn extension(base: Field, gen: &str, minpoly: Vec<FElem>) -> Result<Field, String> {
        if minpoly.len() < 3 {
            return Err("extension min-poly must have degree >= 2".into());
        }
        if !base.is_one(minpoly.last().unwrap()) {
            return Err("extension min-poly must be monic".into());
        }
        match crate::poly::irreducible_over(&base, &minpoly) {
            Some(true) => {}
            Some(false) => return Err(format!("min-poly for {gen} is reducible over its base")),
            None => log::warn!("irreducibility of min-poly for {gen} not verified; trusting"),
        }
        Ok(Field::Ext { base: Box::new(base), gen: gen.to_string(), minpoly })
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Field::Q => 0,
            Field::Fp(p) => *p,
            Field::Ext { base, .. } => base.characteristic(),
        }
    }

    pub fn ext_degree(&self) -> usize {
        match self {
            Field::Ext { minpoly, .. } => minpoly.len() - 1,
            _ => 1,
        }
    }

    pub fn zero(&self) -> FElem {
        match self {
            Field::Q => FElem::Q(BigRational::zero()),
            Field::Fp(_) => FElem::Fp(0),
            Field::Ext { .. } => FElem::Ext(vec![]),
        }
    }

    pub fn one(&self) -> FElem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, k: i64) -> FElem {
        match self {
            Field::Q => FElem::Q(BigRational::from(BigInt::from(k))),
            Field::Fp(p) => FElem::Fp((k.rem_euclid(*p as i64)) as u64),
            Field::Ext { base, .. } => {
                let c = base.from_i64(k);
                self.lift(&c)
            }
        }
    }

    pub fn from_rat(&self, num: i64, den: i64) -> FElem {
        assert!(den != 0);
        match self {
            Field::Q => FElem::Q(BigRational::new(BigInt::from(num), BigInt::from(den))),
            _ => {
                let d = self.from_i64(den);
                let n = self.from_i64(num);
                self.mul(&n, &self.inv(&d).expect("denominator vanishes in field"))
            }
        }
    }

    /// Embed a base-field element into an extension (identity otherwise).
    pub fn lift(&self, c: &FElem) -> FElem {
        match self {
            Field::Ext { base, .. } => {
                if base.is_zero(c) {
                    FElem::Ext(vec![])
                } else {
                    FElem::Ext(vec![c.clone()])
                }
            }
            _ => c.clone(),
        }
    }

    /// The generator of an extension field.
    pub fn gen_elem(&self) -> Option<FElem> {
        match self {
            Field::Ext { base, .. } => Some(FElem::Ext(vec![base.zero(), base.one()])),
            _ => None,
        }
    }

    pub fn is_zero(&self, a: &FElem) -> bool {
        match a {
            FElem::Q(r) => r.is_zero(),
            FElem::Fp(v) => *v == 0,
            FElem::Ext(c) => c.is_empty(),
        }
    }

    pub fn is_one(&self, a: &FElem) -> bool {
        *a == self.one()
    }

    pub fn add(&self, a: &FElem, b: &FElem) -> FElem {
        match (self, a, b) {
            (Field::Q, FElem::Q(x), FElem::Q(y)) => FElem::Q(x + y),
            (Field::Fp(p), FElem::Fp(x), FElem::Fp(y)) => FElem::Fp((x + y) % p),
            (Field::Ext { base, .. }, FElem::Ext(x), FElem::Ext(y)) => {
                FElem::Ext(vadd(base, x, y))
            }
            _ => panic!("field/element mismatch"),
        }
    }

    pub fn neg(&self, a: &FElem) -> FElem {
        match (self, a) {
            (Field::Q, FElem::Q(x)) => FElem::Q(-x),
            (Field::Fp(p), FElem::Fp(x)) => FElem::Fp(if *x == 0 { 0 } else { p - x }),
            (Field::Ext { base, .. }, FElem::Ext(x)) => {
                FElem::Ext(x.iter().map(|c| base.neg(c)).collect())
            }
            _ => panic!("field/element mismatch"),
        }
    }

    pub fn sub(&self, a: &FElem, b: &FElem) -> FElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FElem, b: &FElem) -> FElem {
        match (self, a, b) {
            (Field::Q, FElem::Q(x), FElem::Q(y)) => FElem::Q(x * y),
            (Field::Fp(p), FElem::Fp(x), FElem::Fp(y)) => {
                FElem::Fp(((*x as u128 * *y as u128) % *p as u128) as u64)
            }
            (Field::Ext { base, minpoly, .. }, FElem::Ext(x), FElem::Ext(y)) => {
                let prod = vmul(base, x, y);
                FElem::Ext(vrem_monic(base, prod, minpoly))
            }
            _ => panic!("field/element mismatch"),
        }
    }

    pub fn inv(&self, a: &FElem) -> Option<FElem> {
        if self.is_zero(a) {
            return None;
        }
        match (self, a) {
            (Field::Q, FElem::Q(x)) => Some(FElem::Q(x.recip())),
            (Field::Fp(p), FElem::Fp(x)) => Some(FElem::Fp(mod_inv(*x, *p))),
            (Field::Ext { base, minpoly, .. }, FElem::Ext(x)) => {
                // extended Euclid: s*x + t*m = gcd = const (minpoly irreducible)
                let (g, s) = vxgcd(base, x.clone(), minpoly.clone());
                assert!(g.len() == 1, "min-poly not irreducible: gcd has positive degree");
                let c = base.inv(&g[0]).unwrap();
                let inv: Vec<FElem> = s.iter().map(|v| base.mul(v, &c)).collect();
                Some(FElem::Ext(vrem_monic(base, inv, minpoly)))
            }
            _ => panic!("field/element mismatch"),
        }
    }

    pub fn div(&self, a: &FElem, b: &FElem) -> FElem {
        self.mul(a, &self.inv(b).expect("division by zero"))
    }

    pub fn pow(&self, a: &FElem, e: u32) -> FElem {
        let mut r = self.one();
        for _ in 0..e {
            r = self.mul(&r, a);
        }
        r
    }

    /// All elements, for finite fields of manageable size.
    pub fn enumerate(&self) -> Option<Vec<FElem>> {
        const LIMIT: usize = 1 << 16;
        match self {
            Field::Q => None,
            Field::Fp(p) => {
                if *p as usize > LIMIT {
                    return None;
                }
                Some((0..*p).map(FElem::Fp).collect())
            }
            Field::Ext { base, minpoly, .. } => {
                let b = base.enumerate()?;
                let d = minpoly.len() - 1;
                if b.len().checked_pow(d as u32)? > LIMIT {
                    return None;
                }
                let mut out = vec![vec![]];
                for _ in 0..d {
                    let mut next = Vec::new();
                    for v in &out {
                        for c in &b {
                            let mut w: Vec<FElem> = v.clone();
                            w.push(c.clone());
                            next.push(w);
                        }
                    }
                    out = next;
                }
                Some(out.into_iter().map(|mut v| {
                    while v.last().map_or(false, |c| base.is_zero(c)) {
                        v.pop();
                    }
                    FElem::Ext(v)
                }).collect())
            }
        }
    }

    /// Deterministic pseudo-random element for randomized tests.
    pub fn sample(&self, state: &mut u64) -> FElem {
        fn next(state: &mut u64) -> u64 {
            let mut x = *state;
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            *state = x;
            x
        }
        match self {
            Field::Q => {
                let n = (next(state) % 19) as i64 - 9;
                let d = (next(state) % 3) as i64 + 1;
                self.from_rat(n, d)
            }
            Field::Fp(p) => FElem::Fp(next(state) % p),
            Field::Ext { base, minpoly, .. } => {
                let mut v: Vec<FElem> = (0..minpoly.len() - 1).map(|_| base.sample(state)).collect();
                while v.last().map_or(false, |c| base.is_zero(c)) {
                    v.pop();
                }
                FElem::Ext(v)
            }
        }
    }

    pub fn fmt_elem(&self, a: &FElem) -> String {
        match (self, a) {
            (Field::Q, FElem::Q(r)) => {
                if r.denom().is_one() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            (Field::Fp(_), FElem::Fp(v)) => v.to_string(),
            (Field::Ext { base, gen, .. }, FElem::Ext(cs)) => {
                if cs.is_empty() {
                    return "0".into();
                }
                let mut parts: Vec<String> = Vec::new();
                for (k, c) in cs.iter().enumerate() {
                    if base.is_zero(c) {
                        continue;
                    }
                    let cstr = base.fmt_elem(c);
                    let pow = match k {
                        0 => String::new(),
                        1 => gen.clone(),
                        _ => format!("{gen}^{k}"),
                    };
                    let term = if k == 0 {
                        cstr
                    } else if cstr == "1" {
                        pow
                    } else if cstr == "-1" {
                        format!("-{pow}")
                    } else if cstr.contains('+') || (cstr.len() > 1 && cstr[1..].contains('-')) {
                        format!("({cstr})*{pow}")
                    } else {
                        format!("{cstr}*{pow}")
                    };
                    parts.push(term);
                }
                let mut s = parts[0].clone();
                for p in &parts[1..] {
                    if let Some(stripped) = p.strip_prefix('-') {
                        s.push_str(&format!("-{stripped}"));
                    } else {
                        s.push_str(&format!("+{p}"));
                    }
                }
                s
            }
            _ => panic!("field/element mismatch"),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Field::Q => "Q".into(),
            Field::Fp(p) => format!("F{p}"),
            Field::Ext { base, gen, minpoly } => {
                let mp = crate::poly::Poly { c: minpoly.clone() };
                format!("{}[{}]/({})", base.name(), gen, mp.fmt(base, gen))
            }
        }
    }

    /// True if the rational is a square, with its root (used by root search).
    pub fn sqrt(&self, a: &FElem) -> Option<FElem> {
        if self.is_zero(a) {
            return Some(self.zero());
        }
        match (self, a) {
            (Field::Q, FElem::Q(r)) => {
                if r.is_negative() {
                    return None;
                }
                let n = int_sqrt(r.numer())?;
                let d = int_sqrt(r.denom())?;
                Some(FElem::Q(BigRational::new(n, d)))
            }
            (Field::Fp(p), FElem::Fp(v)) => {
                (0..*p).map(FElem::Fp).find(|b| self.mul(b, b) == FElem::Fp(*v))
            }
            (Field::Ext { base, minpoly, .. }, FElem::Ext(cs)) => {
                if minpoly.len() != 3 {
                    return None; // only quadratic extensions are searched
                }
                // minpoly = y^2 + r y + s; y^2 = -r y - s
                let r = &minpoly[1];
                let s = &minpoly[0];
                let d0 = cs.first().cloned().unwrap_or_else(|| base.zero());
                let d1 = cs.get(1).cloned().unwrap_or_else(|| base.zero());
                // beta = b0 + b1 y, beta^2 = (b0^2 - s b1^2) + (2 b0 b1 - r b1^2) y
                // b1 = 0: need d1 = 0 and sqrt(d0) in base.
                if base.is_zero(&d1) {
                    if let Some(b0) = base.sqrt(&d0) {
                        return Some(self.lift(&b0));
                    }
                }
                // b1 != 0: b0 = (d1 + r b1^2) / (2 b1); with u = b1^2:
                // (r^2 - 4 s) u^2 + (2 r d1 - 4 d0) u + d1^2 = 0
                let two = base.from_i64(2);
                let four = base.from_i64(4);
                let aa = base.sub(&base.mul(r, r), &base.mul(&four, s));
                let bb = base.sub(&base.mul(&two, &base.mul(r, &d1)), &base.mul(&four, &d0));
                let cc = base.mul(&d1, &d1);
                for u in quadratic_roots(base, &aa, &bb, &cc) {
                    if base.is_zero(&u) {
                        continue;
                    }
                    if let Some(b1) = base.sqrt(&u) {
                        for b1 in [b1.clone(), base.neg(&b1)] {
                            if base.is_zero(&b1) {
                                continue;
                            }
                            let b0 = base.div(
                                &base.add(&d1, &base.mul(r, &base.mul(&b1, &b1))),
                                &base.mul(&two, &b1),
                            );
                            let cand = FElem::Ext(vtrim(base, vec![b0, b1]));
                            if self.mul(&cand, &cand) == *a {
                                return Some(cand);
                            }
                        }
                    }
                }
                None
            }
            _ => panic!("field/element mismatch"),
        }
    }
}

/// Roots of a*u^2 + b*u + c over `f` (a may be zero), found via `sqrt`.
pub fn quadratic_roots(f: &Field, a: &FElem, b: &FElem, c: &FElem) -> Vec<FElem> {
    if f.is_zero(a) {
        if f.is_zero(b) {
            return vec![];
        }
        return vec![f.neg(&f.div(c, b))];
    }
    let four_ac = f.mul(&f.from_i64(4), &f.mul(a, c));
    let disc = f.sub(&f.mul(b, b), &four_ac);
    match f.sqrt(&disc) {
        None => vec![],
        Some(r) => {
            let two_a = f.mul(&f.from_i64(2), a);
            let mut out = vec![f.div(&f.sub(&r, b), &two_a)];
            if !f.is_zero(&r) {
                out.push(f.div(&f.sub(&f.neg(&r), b), &two_a));
            }
            out
        }
    }
}

fn int_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // extended Euclid on (a, p)
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert!(r == 1, "not invertible");
    t.rem_euclid(p as i128) as u64
}

// ---- coefficient-vector polynomial helpers (lowest degree first) ----

pub(crate) fn vtrim(f: &Field, mut v: Vec<FElem>) -> Vec<FElem> {
    while v.last().map_or(false, |c| f.is_zero(c)) {
        v.pop();
    }
    v
}

pub(crate) fn vadd(f: &Field, a: &[FElem], b: &[FElem]) -> Vec<FElem> {
    let n = a.len().max(b.len());
    let z = f.zero();
    let v = (0..n)
        .map(|i| f.add(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z)))
        .collect();
    vtrim(f, v)
}

pub(crate) fn vmul(f: &Field, a: &[FElem], b: &[FElem]) -> Vec<FElem> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = f.add(&out[i + j], &f.mul(x, y));
        }
    }
    vtrim(f, out)
}

/// Remainder of `a` modulo a monic polynomial `m`.
pub(crate) fn vrem_monic(f: &Field, mut a: Vec<FElem>, m: &[FElem]) -> Vec<FElem> {
    let d = m.len() - 1;
    while a.len() > d {
        let lead = a.pop().unwrap();
        if f.is_zero(&lead) {
            continue;
        }
        let off = a.len() - d;
        for i in 0..d {
            a[off + i] = f.sub(&a[off + i], &f.mul(&lead, &m[i]));
        }
    }
    vtrim(f, a)
}

/// Extended gcd returning (gcd, s) with s*a ≡ gcd (mod b).
pub(crate) fn vxgcd(f: &Field, a: Vec<FElem>, b: Vec<FElem>) -> (Vec<FElem>, Vec<FElem>) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (vec![f.one()], vec![]);
    while !r1.is_empty() {
        let (q, rem) = vdivrem(f, &r0, &r1);
        r0 = r1;
        r1 = rem;
        let qs1 = vmul(f, &q, &s1);
        let ns = vadd(f, &s0, &qs1.iter().map(|c| f.neg(c)).collect::<Vec<_>>());
        s0 = s1;
        s1 = ns;
    }
    (r0, s0)
}

pub(crate) fn vdivrem(f: &Field, a: &[FElem], b: &[FElem]) -> (Vec<FElem>, Vec<FElem>) {
    assert!(!b.is_empty(), "division by zero polynomial");
    let db = b.len() - 1;
    let binv = f.inv(b.last().unwrap()).expect("leading coeff not invertible");
    let mut rem: Vec<FElem> = vtrim(f, a.to_vec());
    if rem.len() < b.len() {
        return (vec![], rem);
    }
    let mut quo = vec![f.zero(); rem.len() - db];
    while rem.len() >= b.len() && !rem.is_empty() {
        let lead = rem.last().unwrap().clone();
        let k = rem.len() - 1 - db;
        let c = f.mul(&lead, &binv);
        quo[k] = c.clone();
        for i in 0..=db {
            let t = f.mul(&c, &b[i]);
            rem[k + i] = f.sub(&rem[k + i], &t);
        }
        rem = vtrim(f, rem);
    }
    (vtrim(f, quo), rem)
}
