//! The potential ∂w and the Frobenius structure of k[x]/∂w.

use serde::{Deserialize, Serialize};

use crate::field::{FElem, Field};
use crate::linalg;
use crate::poly::{roots_in_field, Poly};

/// A monic degree-n polynomial over an exact field, with its separability
/// and root data, plus the cached Frobenius dual basis and handle element.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Potential {
    pub field: Field,
    pub poly: Poly,
    pub n: usize,
    pub separable: bool,
    pub roots: Vec<FElem>,
    duals: Vec<Poly>,
    handle: Poly,
}

impl Potential {
    pub fn new(field: Field, poly: Poly) -> Result<Potential, String> {
        if !poly.is_monic(&field) {
            return Err("potential must be monic".into());
        }
        let n = poly.deg().unwrap();
        if n < 1 {
            return Err("potential must have degree >= 1".into());
        }
        let dw = poly.derivative(&field);
        let separable = poly.gcd_monic(&field, &dw).deg() == Some(0);
        let mut roots = roots_in_field(&poly, &field);
        sort_elems(&mut roots);
        let duals = dual_basis_of(&field, &poly, n);
        let mut handle = Poly::zero();
        for (i, d) in duals.iter().enumerate() {
            let xi = Poly::monomial(&field, field.one(), i);
            handle = handle.add(&field, &reduce_poly(&field, &xi.mul(&field, d), &poly));
        }
        Ok(Potential { field, poly, n, separable, roots, duals, handle })
    }

    pub fn reduce_mod(&self, p: &Poly) -> Poly {
        reduce_poly(&self.field, p, &self.poly)
    }

    pub fn mul_mod(&self, a: &Poly, b: &Poly) -> Poly {
        self.reduce_mod(&a.mul(&self.field, b))
    }

    pub fn is_separable(&self) -> bool {
        self.separable
    }

    /// {b^j} with ε(x^i · b^j) = δ_ij.
    pub fn dual_basis(&self) -> &[Poly] {
        &self.duals
    }

    /// Σ_i x^i · b^i — multiplies a decoration once per unit of genus.
    pub fn handle_element(&self) -> &Poly {
        &self.handle
    }

    /// ε: coefficient of x^(n-1) after reduction.
    pub fn trace(&self, r: &Poly) -> FElem {
        self.reduce_mod(r).coeff(&self.field, self.n - 1)
    }

    pub fn display(&self) -> String {
        self.poly.fmt(&self.field, "x")
    }
}

fn reduce_poly(f: &Field, p: &Poly, w: &Poly) -> Poly {
    p.rem(f, w)
}

fn dual_basis_of(f: &Field, w: &Poly, n: usize) -> Vec<Poly> {
    // M[i][k] = ε(x^(i+k)); solve M β = e_j for each j
    let xpow: Vec<Poly> = (0..2 * n)
        .map(|d| reduce_poly(f, &Poly::monomial(f, f.one(), d), w))
        .collect();
    let m: Vec<Vec<FElem>> = (0..n)
        .map(|i| (0..n).map(|k| xpow[i + k].coeff(f, n - 1)).collect())
        .collect();
    (0..n)
        .map(|j| {
            let mut e = vec![f.zero(); n];
            e[j] = f.one();
            let beta = linalg::solve(f, m.clone(), e).expect("trace form degenerate");
            Poly::new(f, beta)
        })
        .collect()
}

/// Deterministic ordering of field elements (for stable root lists).
pub fn sort_elems(v: &mut [FElem]) {
    v.sort_by_key(elem_key);
}

fn elem_key(e: &FElem) -> Vec<(i64, String)> {
    match e {
        FElem::Q(r) => vec![(0, format!("{:020}/{}", r.numer(), r.denom()))],
        FElem::Fp(v) => vec![(*v as i64, String::new())],
        FElem::Ext(cs) => {
            let mut out = vec![(cs.len() as i64, String::new())];
            for c in cs {
                out.extend(elem_key(c));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(coeffs: &[i64]) -> Potential {
        let f = Field::Q;
        let p = Poly::new(&f, coeffs.iter().map(|&k| f.from_i64(k)).collect());
        Potential::new(f, p).unwrap()
    }

    #[test]
    fn reduce_mod_examples() {
        let w = pot(&[0, -1, 0, 1]); // x^3 - x
        let f = &w.field;
        let x4 = Poly::monomial(f, f.one(), 4);
        assert_eq!(w.reduce_mod(&x4), Poly::monomial(f, f.one(), 2));
        let w2 = pot(&[-1, 0, 1]); // x^2 - 1
        let x2 = Poly::monomial(f, f.one(), 2);
        assert_eq!(w2.reduce_mod(&x2), Poly::one(f));
        assert_eq!(w.reduce_mod(&Poly::zero()), Poly::zero());
    }

    #[test]
    fn mul_mod_examples() {
        let f = Field::Q;
        let x = Poly::x(&f);
        let w = pot(&[-1, 0, 1]);
        assert_eq!(w.mul_mod(&x, &x), Poly::one(&f));
        let w3 = pot(&[0, -1, 0, 1]);
        let x2 = Poly::monomial(&f, f.one(), 2);
        assert_eq!(w3.mul_mod(&x2, &x2), x2);
        let wn = pot(&[0, 0, 1]); // x^2
        assert_eq!(wn.mul_mod(&x, &x), Poly::zero());
    }

    #[test]
    fn separability() {
        assert!(pot(&[-1, 0, 1]).is_separable());
        assert!(!pot(&[0, 0, 0, 1]).is_separable());
        assert!(pot(&[0, -1, 0, 0, 0, 1]).is_separable()); // x^5 - x
    }

    #[test]
    fn dual_bases() {
        let f = Field::Q;
        // x^2 - 1: duals of {1, x} are {x, 1}
        let w = pot(&[-1, 0, 1]);
        assert_eq!(w.dual_basis()[0], Poly::x(&f));
        assert_eq!(w.dual_basis()[1], Poly::one(&f));
        // x^3 - x: duals of {1, x, x^2} are {x^2 - 1, x, 1}
        let w3 = pot(&[0, -1, 0, 1]);
        let xx = Poly::new(&f, vec![f.from_i64(-1), f.zero(), f.one()]);
        assert_eq!(w3.dual_basis()[0], xx);
        assert_eq!(w3.dual_basis()[1], Poly::x(&f));
        assert_eq!(w3.dual_basis()[2], Poly::one(&f));
        // x^2: duals of {1, x} are {x, 1}
        let wn = pot(&[0, 0, 1]);
        assert_eq!(wn.dual_basis()[0], Poly::x(&f));
        assert_eq!(wn.dual_basis()[1], Poly::one(&f));
    }

    #[test]
    fn handle_elements() {
        let f = Field::Q;
        let two_x = Poly::new(&f, vec![f.zero(), f.from_i64(2)]);
        assert_eq!(*pot(&[0, 0, 1]).handle_element(), two_x);
        assert_eq!(*pot(&[-1, 0, 1]).handle_element(), two_x);
        let expect = Poly::new(&f, vec![f.from_i64(-1), f.zero(), f.from_i64(3)]);
        assert_eq!(*pot(&[0, -1, 0, 1]).handle_element(), expect); // 3x^2 - 1
    }

    #[test]
    fn trace_examples() {
        let w = pot(&[0, -1, 0, 1]); // n = 3
        let f = &w.field.clone();
        assert!(f.is_one(&w.trace(&Poly::monomial(f, f.one(), 2))));
        assert!(f.is_zero(&w.trace(&Poly::one(f))));
        let w2 = pot(&[-1, 0, 1]);
        assert!(f.is_zero(&w2.trace(&Poly::monomial(f, f.one(), 2)))); // x^2 ≡ 1
    }

    #[test]
    fn trace_mul_duality() {
        for coeffs in [vec![0, 0, 1], vec![-1, 0, 1], vec![0, -1, 0, 1], vec![0, -1, 0, 0, 0, 1]] {
            let w = pot(&coeffs);
            let f = w.field.clone();
            for i in 0..w.n {
                for j in 0..w.n {
                    let xi = Poly::monomial(&f, f.one(), i);
                    let t = w.trace(&w.mul_mod(&xi, &w.dual_basis()[j]));
                    if i == j {
                        assert!(f.is_one(&t));
                    } else {
                        assert!(f.is_zero(&t));
                    }
                }
            }
        }
    }

    #[test]
    fn handle_is_derivative_at_roots() {
        let w = pot(&[0, -1, 0, 0, 0, 1]); // x^5 - x, roots 0, ±1 over Q
        let f = w.field.clone();
        let dw = w.poly.derivative(&f);
        assert_eq!(w.roots.len(), 3);
        for a in &w.roots {
            assert_eq!(w.handle_element().eval(&f, a), dw.eval(&f, a));
        }
    }

    #[test]
    fn reduce_is_ring_hom() {
        let w = pot(&[0, -1, 0, 1]);
        let f = w.field.clone();
        let mut st = 7u64;
        for _ in 0..30 {
            let p = Poly::new(&f, (0..5).map(|_| f.sample(&mut st)).collect());
            let q = Poly::new(&f, (0..5).map(|_| f.sample(&mut st)).collect());
            assert_eq!(
                w.reduce_mod(&p.mul(&f, &q)),
                w.mul_mod(&w.reduce_mod(&p), &w.reduce_mod(&q))
            );
        }
    }
}
