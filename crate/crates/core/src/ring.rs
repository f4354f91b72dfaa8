//! Coefficient rings of characteristic p, as ring objects.
//!
//! Arithmetic is performed by the ring value (`k.mul(&a, &b)`), not by the
//! element type, so one element type can serve several parent fields.

use std::fmt::Debug;

use crate::gf::{FFElem, GaloisField};

pub trait Ring {
    type Elem: Clone + PartialEq + Debug;

    fn characteristic(&self) -> u32;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_int(&self, n: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }
}

impl Ring for GaloisField {
    type Elem = FFElem;

    fn characteristic(&self) -> u32 {
        self.p()
    }
    fn zero(&self) -> FFElem {
        FFElem::ZERO
    }
    fn one(&self) -> FFElem {
        FFElem::ONE
    }
    fn from_int(&self, n: i64) -> FFElem {
        GaloisField::from_int(self, n)
    }
    fn add(&self, a: &FFElem, b: &FFElem) -> FFElem {
        GaloisField::add(self, *a, *b)
    }
    fn neg(&self, a: &FFElem) -> FFElem {
        GaloisField::neg(self, *a)
    }
    fn mul(&self, a: &FFElem, b: &FFElem) -> FFElem {
        GaloisField::mul(self, *a, *b)
    }
    fn is_zero(&self, a: &FFElem) -> bool {
        a.is_zero()
    }
}
