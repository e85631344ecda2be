//! Randomized structural properties over small two-bridge diagrams and
//! random small potentials.

use proptest::prelude::*;

use kr_core::brute::brute_graded;
use kr_core::complex::assemble;
use kr_core::diagram::two_bridge;
use kr_core::field::Field;
use kr_core::parse::parse_potential;
use kr_core::potential::Potential;
use kr_core::spectral::compute_pages;

fn small_two_bridge() -> impl Strategy<Value = (i64, i64)> {
    // odd p gives a knot, even p a two-component link; both are fine here
    (2i64..10, 1i64..8)
        .prop_filter("q < p and coprime", |&(p, q)| {
            q < p && num_integer::gcd(p, q) == 1
        })
}

fn small_potential() -> impl Strategy<Value = Potential> {
    let ws = ["x^2", "x^2-1", "x^2+x", "x^3", "x^3-x", "x^3-1", "x^3+x^2-x"];
    (0..ws.len()).prop_map(move |i| parse_potential(ws[i], &Field::Q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn first_page_matches_oracle((p, q) in small_two_bridge(), w in small_potential()) {
        let d = two_bridge(p, q).unwrap();
        prop_assume!(d.slots.len() <= 4);
        let oracle = brute_graded(&d, &w).unwrap();
        let mc = assemble(&d, &w).unwrap();
        let engine = compute_pages(&mc.unreduced()).unwrap();
        prop_assert_eq!(&engine.pages[0].cells, &oracle.cells);
    }

    #[test]
    fn shift_of_variable_preserves_pages((p, q) in small_two_bridge(), b in -2i64..3) {
        let d = two_bridge(p, q).unwrap();
        prop_assume!(d.slots.len() <= 4);
        let f = Field::Q;
        let w1 = parse_potential("x^3-x", &f).unwrap();
        // w2(x) = w1(x + b)
        let expr = format!("(x+({b}))^3-(x+({b}))");
        let w2 = parse_potential(&expr, &f).unwrap();
        let r1 = compute_pages(&assemble(&d, &w1).unwrap().unreduced()).unwrap();
        let r2 = compute_pages(&assemble(&d, &w2).unwrap().unreduced()).unwrap();
        let c1: Vec<_> = r1.pages.iter().map(|p| &p.cells).collect();
        let c2: Vec<_> = r2.pages.iter().map(|p| &p.cells).collect();
        prop_assert_eq!(c1, c2);
    }

    #[test]
    fn limit_page_of_knot_sits_in_degree_zero((p, q) in small_two_bridge(), w in small_potential()) {
        prop_assume!(p % 2 == 1); // knots only
        prop_assume!(w.is_separable());
        let d = two_bridge(p, q).unwrap();
        prop_assume!(d.slots.len() <= 5);
        let r = compute_pages(&assemble(&d, &w).unwrap().unreduced()).unwrap();
        let e = r.einf();
        prop_assert_eq!(e.total(), w.n);
        prop_assert!(e.cells.keys().all(|&(t, _)| t == 0));
    }
}
