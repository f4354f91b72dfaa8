//! Finite fields F_q = F_p[X]/(modulus) with table-driven multiplication.
//!
//! Elements are packed as integers: the coefficient vector `(c_0, ..., c_{f-1})`
//! of `c_0 + c_1 X + ...` is stored as `c_0 + c_1 p + c_2 p^2 + ...`, so the
//! prime field sits at indices `0..p`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// An element of a [`GaloisField`], packed little-endian in the F_p basis.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct FFElem(pub u32);

impl FFElem {
    pub const ZERO: FFElem = FFElem(0);
    pub const ONE: FFElem = FFElem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Monic primitive polynomials, coefficients low to high.
fn shipped_modulus(p: u32, f: u32) -> Option<Vec<u32>> {
    let m: &[u32] = match (p, f) {
        (2, 1) => &[1, 1],
        (2, 2) => &[1, 1, 1],
        (2, 3) => &[1, 1, 0, 1],
        (3, 1) => &[1, 1],
        (3, 2) => &[2, 2, 1],
        (3, 3) => &[1, 2, 0, 1],
        (5, 1) => &[3, 1],
        (5, 2) => &[2, 4, 1],
        (5, 3) => &[3, 3, 0, 1],
        (7, 1) => &[4, 1],
        (7, 2) => &[3, 6, 1],
        (7, 3) => &[4, 0, 6, 1],
        _ => return None,
    };
    Some(m.to_vec())
}

pub fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Remainder of `a` modulo monic `m` over F_p (coefficients low to high).
fn poly_rem(p: u32, a: &[u32], m: &[u32]) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let shift = r.len() - dm;
            for (i, &mi) in m[..dm].iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * mi) % p) % p;
            }
        }
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

/// Brute-force irreducibility test: no monic factor of degree at most deg/2.
pub fn is_irreducible(p: u32, m: &[u32]) -> bool {
    let n = m.len() - 1;
    if n == 0 || m[n] != 1 {
        return false;
    }
    for k in 1..=n / 2 {
        for idx in 0..p.pow(k as u32) {
            let mut cand = digits_of(p, idx, k);
            cand.push(1);
            if poly_rem(p, m, &cand).is_empty() {
                return false;
            }
        }
    }
    true
}

fn digits_of(p: u32, mut x: u32, len: usize) -> Vec<u32> {
    let mut d = Vec::with_capacity(len);
    for _ in 0..len {
        d.push(x % p);
        x /= p;
    }
    d
}

/// A finite field of order `p^degree` with exp/log tables.
pub struct GaloisField {
    p: u32,
    degree: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: FFElem,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}, modulus {:?})", self.p, self.degree, self.modulus)
    }
}

impl GaloisField {
    /// Builds F_p[X]/(modulus); the modulus must be monic and irreducible.
    pub fn new(p: u32, modulus: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidConfig(format!("{p} is not prime")));
        }
        if modulus.len() < 2 || modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidConfig(format!("bad modulus {modulus:?}")));
        }
        if !is_irreducible(p, &modulus) {
            return Err(Error::InvalidConfig(format!(
                "modulus {modulus:?} is not monic irreducible over F_{p}"
            )));
        }
        let degree = (modulus.len() - 1) as u32;
        let q = p
            .checked_pow(degree)
            .filter(|&q| q <= 1 << 20)
            .ok_or_else(|| Error::InvalidConfig("field too large".into()))?;
        let mut field = GaloisField {
            p,
            degree,
            q,
            modulus,
            generator: FFElem::ONE,
            exp: Vec::new(),
            log: Vec::new(),
        };
        field.build_tables();
        Ok(field)
    }

    /// The field F_{p^f} with the shipped primitive modulus.
    pub fn standard(p: u32, f: u32) -> Result<Self> {
        let m = shipped_modulus(p, f).ok_or_else(|| {
            Error::InvalidConfig(format!("no shipped modulus for p = {p}, f = {f}"))
        })?;
        Self::new(p, m)
    }

    /// Some field of order `p^degree`: the shipped modulus when available,
    /// otherwise the first monic irreducible with a primitive root X.
    pub fn with_degree(p: u32, degree: u32) -> Result<Self> {
        if let Some(m) = shipped_modulus(p, degree) {
            return Self::new(p, m);
        }
        let mut fallback = None;
        for idx in 0..p.pow(degree) {
            let mut m = digits_of(p, idx, degree as usize);
            m.push(1);
            if m[0] == 0 || !is_irreducible(p, &m) {
                continue;
            }
            let f = Self::new(p, m)?;
            if f.generator == f.x() {
                return Ok(f);
            }
            fallback.get_or_insert(f);
        }
        fallback.ok_or_else(|| Error::InvalidConfig("no irreducible polynomial".into()))
    }

    fn x(&self) -> FFElem {
        if self.degree == 1 {
            // X is the root of X + m_0
            FFElem((self.p - self.modulus[0]) % self.p)
        } else {
            FFElem(self.p)
        }
    }

    fn naive_mul(&self, a: u32, b: u32) -> u32 {
        let n = self.degree as usize;
        let da = digits_of(self.p, a, n);
        let db = digits_of(self.p, b, n);
        let mut prod = vec![0u32; 2 * n];
        for i in 0..n {
            for j in 0..n {
                prod[i + j] = (prod[i + j] + da[i] * db[j]) % self.p;
            }
        }
        let r = poly_rem(self.p, &prod, &self.modulus);
        self.pack(&r)
    }

    fn pack(&self, digits: &[u32]) -> u32 {
        digits.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }

    fn build_tables(&mut self) {
        let order = self.q - 1;
        let mut candidates = vec![self.x().0];
        candidates.extend(2..self.q);
        candidates.insert(1, 1);
        for g in candidates {
            if g == 0 {
                continue;
            }
            let mut exp = Vec::with_capacity(order as usize);
            let mut cur = 1u32;
            loop {
                exp.push(cur);
                cur = self.naive_mul(cur, g);
                if cur == 1 || exp.len() > order as usize {
                    break;
                }
            }
            if exp.len() == order as usize {
                let mut log = vec![u32::MAX; self.q as usize];
                for (i, &e) in exp.iter().enumerate() {
                    log[e as usize] = i as u32;
                }
                self.exp = exp;
                self.log = log;
                self.generator = FFElem(g);
                return;
            }
        }
        unreachable!("multiplicative group of a finite field is cyclic");
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn order(&self) -> u32 {
        self.q
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    /// The fixed generator of F_q^* used for discrete logarithms.
    pub fn generator(&self) -> FFElem {
        self.generator
    }

    pub fn elements(&self) -> impl Iterator<Item = FFElem> {
        (0..self.q).map(FFElem)
    }

    pub fn digits(&self, a: FFElem) -> Vec<u32> {
        digits_of(self.p, a.0, self.degree as usize)
    }

    pub fn from_digits(&self, digits: &[u32]) -> FFElem {
        let mut d: Vec<u32> = digits.iter().map(|&c| c % self.p).collect();
        if d.len() > self.degree as usize {
            d = poly_rem(self.p, &d, &self.modulus);
        }
        FFElem(self.pack(&d))
    }

    pub fn from_int(&self, n: i64) -> FFElem {
        FFElem(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn add(&self, a: FFElem, b: FFElem) -> FFElem {
        if self.p == 2 {
            return FFElem(a.0 ^ b.0);
        }
        let (mut x, mut y, mut r, mut pw) = (a.0, b.0, 0u32, 1u32);
        while x > 0 || y > 0 {
            r += ((x % self.p + y % self.p) % self.p) * pw;
            x /= self.p;
            y /= self.p;
            pw *= self.p;
        }
        FFElem(r)
    }

    pub fn neg(&self, a: FFElem) -> FFElem {
        if self.p == 2 {
            return a;
        }
        let (mut x, mut r, mut pw) = (a.0, 0u32, 1u32);
        while x > 0 {
            r += ((self.p - x % self.p) % self.p) * pw;
            x /= self.p;
            pw *= self.p;
        }
        FFElem(r)
    }

    pub fn sub(&self, a: FFElem, b: FFElem) -> FFElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FFElem, b: FFElem) -> FFElem {
        if a.0 == 0 || b.0 == 0 {
            return FFElem::ZERO;
        }
        let s = self.log[a.0 as usize] as u64 + self.log[b.0 as usize] as u64;
        FFElem(self.exp[(s % (self.q as u64 - 1)) as usize])
    }

    pub fn mul_int(&self, a: FFElem, n: i64) -> FFElem {
        self.mul(a, self.from_int(n))
    }

    pub fn inv(&self, a: FFElem) -> Result<FFElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let order = self.q - 1;
        let l = self.log[a.0 as usize];
        Ok(FFElem(self.exp[((order - l) % order) as usize]))
    }

    pub fn div(&self, a: FFElem, b: FFElem) -> Result<FFElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e` for any integer exponent; `0^e` with `e < 0` is an error.
    pub fn pow(&self, a: FFElem, e: i64) -> Result<FFElem> {
        if a.is_zero() {
            return match e {
                0 => Ok(FFElem::ONE),
                e if e > 0 => Ok(FFElem::ZERO),
                _ => Err(Error::DivisionByZero),
            };
        }
        let order = (self.q - 1) as i64;
        let l = self.log[a.0 as usize] as i64;
        Ok(FFElem(self.exp[(l * e.rem_euclid(order)).rem_euclid(order) as usize]))
    }

    /// Absolute Frobenius `a ↦ a^p`.
    pub fn frobenius(&self, a: FFElem) -> FFElem {
        if a.is_zero() {
            return a;
        }
        let order = (self.q - 1) as u64;
        let l = self.log[a.0 as usize] as u64;
        FFElem(self.exp[((l * self.p as u64) % order) as usize])
    }

    /// The unique `r` with `r^p = a` (F_q is perfect).
    pub fn pth_root(&self, a: FFElem) -> FFElem {
        let mut r = a;
        for _ in 1..self.degree {
            r = self.frobenius(r);
        }
        r
    }

    /// Tr_{F_q/F_p}, returned as an integer in `0..p`.
    pub fn trace(&self, a: FFElem) -> u32 {
        let mut acc = FFElem::ZERO;
        let mut cur = a;
        for _ in 0..self.degree {
            acc = self.add(acc, cur);
            cur = self.frobenius(cur);
        }
        debug_assert!(acc.0 < self.p);
        acc.0
    }

    /// N_{F_q/F_p}, returned as an integer in `0..p`.
    pub fn norm(&self, a: FFElem) -> u32 {
        let mut acc = FFElem::ONE;
        let mut cur = a;
        for _ in 0..self.degree {
            acc = self.mul(acc, cur);
            cur = self.frobenius(cur);
        }
        acc.0
    }

    /// Discrete logarithm to the base [`generator`](Self::generator).
    pub fn dlog(&self, a: FFElem) -> Result<u32> {
        if a.is_zero() {
            return Err(Error::ZeroInput);
        }
        Ok(self.log[a.0 as usize])
    }

    /// Multiplicative order of a nonzero element.
    pub fn mult_order(&self, a: FFElem) -> Result<u32> {
        let l = self.dlog(a)?;
        let n = self.q - 1;
        Ok(n / gcd(l, n))
    }

    /// A primitive `ell`-th root of unity, `generator^((q-1)/ell)`.
    pub fn root_of_unity(&self, ell: u32) -> Option<FFElem> {
        let n = self.q - 1;
        (ell > 0 && n % ell == 0).then(|| FFElem(self.exp[(n / ell) as usize % n as usize]))
    }

    pub fn render(&self, a: FFElem) -> String {
        if self.degree == 1 {
            return a.0.to_string();
        }
        let d = self.digits(a);
        format!("[{}]", d.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
    }

    /// A degree-`e` extension together with the embedding of `self` into it.
    pub fn extension(&self, e: u32) -> Result<FieldEmbedding> {
        let big = Arc::new(GaloisField::with_degree(self.p, self.degree * e)?);
        // root of our modulus inside the big field
        let root = big
            .elements()
            .find(|&r| {
                let mut acc = FFElem::ZERO;
                for &c in self.modulus.iter().rev() {
                    acc = big.add(big.mul(acc, r), FFElem(c));
                }
                acc.is_zero()
            })
            .ok_or_else(|| Error::Inconsistent("no root of modulus in extension".into()))?;
        let images = self
            .elements()
            .map(|a| {
                let mut acc = FFElem::ZERO;
                for &c in self.digits(a).iter().rev() {
                    acc = big.add(big.mul(acc, root), FFElem(c));
                }
                acc
            })
            .collect();
        Ok(FieldEmbedding { big, images })
    }
}

pub(crate) fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// An extension field together with the image of each element of the base.
#[derive(Debug, Clone)]
pub struct FieldEmbedding {
    pub big: Arc<GaloisField>,
    images: Vec<FFElem>,
}

impl FieldEmbedding {
    pub fn map(&self, a: FFElem) -> FFElem {
        self.images[a.0 as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_moduli_are_primitive() {
        for p in [2, 3, 5, 7] {
            for f in 1..=3 {
                let k = GaloisField::standard(p, f).unwrap();
                assert_eq!(k.generator(), k.x(), "p={p} f={f}");
            }
        }
    }

    #[test]
    fn rejects_reducible_modulus() {
        assert!(GaloisField::new(2, vec![1, 0, 1]).is_err());
        assert!(GaloisField::new(4, vec![1, 1]).is_err());
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for (p, f) in [(2, 2), (3, 2), (2, 3)] {
            let k = GaloisField::standard(p, f).unwrap();
            for a in k.elements() {
                assert_eq!(k.add(a, k.neg(a)), FFElem::ZERO);
                if !a.is_zero() {
                    assert_eq!(k.mul(a, k.inv(a).unwrap()), FFElem::ONE);
                }
                assert_eq!(k.frobenius(k.pth_root(a)), a);
                for b in k.elements() {
                    assert_eq!(k.mul(a, b), k.naive_mul(a.0, b.0).into_elem());
                    assert_eq!(k.trace(k.add(a, b)), (k.trace(a) + k.trace(b)) % p);
                }
            }
        }
    }

    trait IntoElem {
        fn into_elem(self) -> FFElem;
    }
    impl IntoElem for u32 {
        fn into_elem(self) -> FFElem {
            FFElem(self)
        }
    }

    #[test]
    fn extension_embedding_is_a_ring_map() {
        let k = GaloisField::standard(2, 2).unwrap();
        let emb = k.extension(3).unwrap();
        assert_eq!(emb.big.order(), 64);
        for a in k.elements() {
            for b in k.elements() {
                assert_eq!(emb.map(k.mul(a, b)), emb.big.mul(emb.map(a), emb.map(b)));
                assert_eq!(emb.map(k.add(a, b)), emb.big.add(emb.map(a), emb.map(b)));
            }
        }
    }

    #[test]
    fn roots_of_unity() {
        let k = GaloisField::standard(2, 2).unwrap();
        let z = k.root_of_unity(3).unwrap();
        assert_eq!(k.mult_order(z).unwrap(), 3);
        assert!(k.root_of_unity(5).is_none());
    }
}
