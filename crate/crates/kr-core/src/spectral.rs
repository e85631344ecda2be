//! Spectral-sequence pages of a filtered scalar complex by successive Gauss
//! elimination: stage i cancels every entry of quantum drop exactly 2i, and
//! the surviving bigraded dimensions after stage i form the page E_{i+1}.

use std::collections::BTreeMap;

use serde_json::json;

use crate::complex::ScalarComplex;
use crate::error::KrError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageTable {
    pub page: u32,
    /// (t, q) -> dimension
    pub cells: BTreeMap<(i32, i32), usize>,
}

impl PageTable {
    pub fn total(&self) -> usize {
        self.cells.values().sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|(&(t, q), &d)| json!([t, q, d]))
            .collect();
        json!({"page": self.page, "cells": cells})
    }
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// pages[k] = E_{k+1}; the last entry is E_infinity
    pub pages: Vec<PageTable>,
    /// quantum drops at which at least one cancellation happened
    pub drops_seen: Vec<i64>,
    /// cancelled (source cell, target cell) pairs per stage drop
    pub cancellations: BTreeMap<i64, Vec<((i32, i32), (i32, i32))>>,
}

impl SpectralReport {
    pub fn einf(&self) -> &PageTable {
        self.pages.last().unwrap()
    }

    /// Page indices i >= 2 with E_i different from E_{i-1}.
    pub fn significant_pages(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for k in 1..self.pages.len() {
            if self.pages[k].cells != self.pages[k - 1].cells {
                out.push(self.pages[k].page);
            }
        }
        out.retain(|&p| p >= 2);
        out
    }
}

pub fn compute_pages(c: &ScalarComplex) -> Result<SpectralReport, KrError> {
    let f = &c.field;
    // flatten generators
    let mut t_of: Vec<i32> = Vec::new();
    let mut q_of: Vec<i32> = Vec::new();
    let mut offset: Vec<usize> = Vec::new();
    for (k, level) in c.gens.iter().enumerate() {
        offset.push(t_of.len());
        for &q in level {
            t_of.push(c.tmin + k as i32);
            q_of.push(q);
        }
    }
    let mut alive = vec![true; t_of.len()];
    let mut d: BTreeMap<(usize, usize), crate::field::FElem> = BTreeMap::new();
    for (k, level) in c.diffs.iter().enumerate() {
        for (&(s, t), x) in level {
            d.insert((offset[k] + s, offset[k + 1] + t), x.clone());
        }
    }
    for (&(s, t), _) in &d {
        let drop = (q_of[s] - q_of[t]) as i64;
        if drop < 0 {
            return Err(KrError::Inconsistent(format!(
                "differential raises quantum degree by {}",
                -drop
            )));
        }
        if drop % 2 != 0 {
            return Err(KrError::OddDrop(drop));
        }
    }
    let table = |page: u32, alive: &[bool]| -> PageTable {
        let mut cells: BTreeMap<(i32, i32), usize> = BTreeMap::new();
        for i in 0..t_of.len() {
            if alive[i] {
                *cells.entry((t_of[i], q_of[i])).or_default() += 1;
            }
        }
        PageTable { page, cells }
    };
    let mut pages: Vec<PageTable> = Vec::new();
    let mut drops_seen: Vec<i64> = Vec::new();
    let mut cancellations: BTreeMap<i64, Vec<((i32, i32), (i32, i32))>> = BTreeMap::new();
    let mut stage: i64 = 0;
    loop {
        let drop_now = 2 * stage;
        loop {
            // first pivot (in key order) with the current drop
            let pivot = d
                .iter()
                .find(|(&(s, t), _)| (q_of[s] - q_of[t]) as i64 == drop_now)
                .map(|(&k, _)| k);
            let Some((a, b)) = pivot else { break };
            let h = d[&(a, b)].clone();
            let hinv = f.inv(&h).expect("nonzero field element inverts");
            let into_b: Vec<(usize, crate::field::FElem)> = d
                .iter()
                .filter(|(&(s, t), _)| t == b && s != a)
                .map(|(&(s, _), x)| (s, x.clone()))
                .collect();
            let from_a: Vec<(usize, crate::field::FElem)> = d
                .iter()
                .filter(|(&(s, t), _)| s == a && t != b)
                .map(|(&(_, t), x)| (t, x.clone()))
                .collect();
            for (x, jx) in &into_b {
                let factor = f.mul(jx, &hinv);
                for (y, iy) in &from_a {
                    let corr = f.mul(&factor, iy);
                    let prev = d.remove(&(*x, *y)).unwrap_or(f.zero());
                    let v = f.sub(&prev, &corr);
                    if !f.is_zero(&v) {
                        d.insert((*x, *y), v);
                    }
                }
            }
            d.retain(|&(s, t), _| s != a && t != b && s != b && t != a);
            alive[a] = false;
            alive[b] = false;
            if !drops_seen.contains(&drop_now) {
                drops_seen.push(drop_now);
            }
            cancellations
                .entry(drop_now)
                .or_default()
                .push(((t_of[a], q_of[a]), (t_of[b], q_of[b])));
        }
        pages.push(table(stage as u32 + 1, &alive));
        if d.is_empty() {
            break;
        }
        stage += 1;
        // safety: drops are bounded by the quantum spread
        assert!(
            stage <= (q_of.iter().max().unwrap() - q_of.iter().min().unwrap()) as i64 + 2,
            "spectral elimination failed to terminate"
        );
    }
    Ok(SpectralReport { pages, drops_seen, cancellations })
}

/// Canonical Poincaré polynomial string: terms ordered by t then q.
pub fn poincare(p: &PageTable) -> String {
    if p.cells.is_empty() {
        return "0".to_string();
    }
    let mut terms: Vec<String> = Vec::new();
    for (&(t, q), &dim) in &p.cells {
        if dim == 0 {
            continue;
        }
        let mut factors: Vec<String> = Vec::new();
        if dim != 1 {
            factors.push(dim.to_string());
        }
        if t != 0 {
            factors.push(if t == 1 { "t".into() } else { format!("t^{t}") });
        }
        if q != 0 {
            factors.push(if q == 1 { "q".into() } else { format!("q^{q}") });
        }
        if factors.is_empty() {
            factors.push("1".into());
        }
        terms.push(factors.join("*"));
    }
    if terms.is_empty() {
        return "0".to_string();
    }
    terms.join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{assemble, ScalarComplex};
    use crate::diagram::parse_diagram;
    use crate::field::Field;
    use crate::parse::parse_potential;

    #[test]
    fn zero_differential_all_pages_equal() {
        let f = Field::Q;
        let c = ScalarComplex {
            field: f,
            tmin: 0,
            gens: vec![vec![-2, 0, 2]],
            diffs: vec![],
        };
        let r = compute_pages(&c).unwrap();
        assert_eq!(r.pages.len(), 1);
        assert_eq!(r.einf().total(), 3);
        assert!(r.significant_pages().is_empty());
        assert_eq!(poincare(r.einf()), "q^-2 + 1 + q^2");
    }

    #[test]
    fn odd_drop_detected() {
        let f = Field::Q;
        let mut d = std::collections::BTreeMap::new();
        d.insert((0usize, 0usize), f.one());
        let c = ScalarComplex {
            field: f,
            tmin: 0,
            gens: vec![vec![1], vec![0]],
            diffs: vec![d],
        };
        assert!(matches!(compute_pages(&c), Err(KrError::OddDrop(1))));
    }

    #[test]
    fn trefoil_significant_pages() {
        // first significant page: E_{1+l} where l is the cyclic period
        let d = parse_diagram("rational(3,1)").unwrap();
        for (w, expect, period) in [("x^3-1", 4, 3), ("x^3-x", 3, 2)] {
            let pot = parse_potential(w, &Field::Q).unwrap();
            let mc = assemble(&d, &pot).unwrap();
            let sc = mc.unreduced();
            let r = compute_pages(&sc).unwrap();
            let sig = r.significant_pages();
            assert_eq!(sig[0], expect, "w={w}");
            // cyclic grading: significant pages lie in 1 + k*period
            assert!(sig.iter().all(|&p| (p - 1) % period == 0), "w={w} {sig:?}");
            assert_eq!(r.einf().total(), 3, "w={w}");
            // unreduced E_infinity of a knot lives at t = 0
            assert!(r.einf().cells.keys().all(|&(t, _)| t == 0), "w={w}");
        }
    }

    #[test]
    fn trefoil_gornik_gap() {
        let d = parse_diagram("rational(3,1)").unwrap();
        let pot = parse_potential("x^2-1", &Field::Q).unwrap();
        let mc = assemble(&d, &pot).unwrap();
        let r = compute_pages(&mc.unreduced()).unwrap();
        let e = r.einf();
        assert_eq!(e.total(), 2);
        let qs: Vec<i32> = e.cells.keys().map(|&(_, q)| q).collect();
        assert_eq!(qs[1] - qs[0], 2);
    }
}
