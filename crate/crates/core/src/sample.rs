//! Seeded random sampling of tower elements.

use rand::Rng;

use crate::gf::FFElem;
use crate::tower::{Elem, Tower};

/// Shape of a random Laurent polynomial: exponent window and term count per level.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub min_exp: i64,
    pub max_exp: i64,
    pub terms: usize,
}

impl Shape {
    pub const fn new(min_exp: i64, max_exp: i64, terms: usize) -> Self {
        Shape { min_exp, max_exp, terms }
    }
}

/// A random exact element of level `k`; may be zero.
pub fn random_elem<R: Rng>(tower: &Tower, k: usize, shape: Shape, rng: &mut R) -> Elem {
    if k == 0 {
        return Elem::Const(FFElem(rng.gen_range(0..tower.fq().order())));
    }
    let mut acc = tower.zero(k);
    for _ in 0..shape.terms {
        let e = rng.gen_range(shape.min_exp..=shape.max_exp);
        let c = random_elem(tower, k - 1, shape, rng);
        acc = tower.add(k, &acc, &tower.monomial_outer(e, c));
    }
    acc
}

/// A random element whose leading terms are exact and nonzero.
pub fn random_nonzero<R: Rng>(tower: &Tower, k: usize, shape: Shape, rng: &mut R) -> Elem {
    loop {
        let e = random_elem(tower, k, shape, rng);
        if e.is_certain_nonzero() {
            return e;
        }
    }
}

/// A random unit of level `k` (valuation zero at every level).
pub fn random_unit<R: Rng>(tower: &Tower, k: usize, shape: Shape, rng: &mut R) -> Elem {
    loop {
        let e = random_nonzero(tower, k, shape, rng);
        if tower.valuation(k, &e).is_ok_and(|v| v.iter().all(|&x| x == 0)) {
            return e;
        }
    }
}

/// A random nonzero constant of F_q.
pub fn random_fq_nonzero<R: Rng>(tower: &Tower, rng: &mut R) -> FFElem {
    FFElem(rng.gen_range(1..tower.fq().order()))
}
