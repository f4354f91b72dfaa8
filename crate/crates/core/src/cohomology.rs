//! The groups `H^q(k)` presented as `k ⊗ (k*)^{⊗(q-1)} / J` (the p-part, with
//! Z/p coefficients) or as Kummer symbols (the ℓ-part, ℓ ≠ p), the lifting
//! maps `i_F^K` and `(a, b) ↦ i(a) + i(b) ∪ π`, `inv: H^{d+1}(K) → Q/Z`, and
//! the pairing with K-classes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extensions::{CyclicExt, ExtKind};
use crate::forms::Forms;
use crate::kgroup::{KClass, SymbolSum};
use crate::tower::{Elem, Tower};

/// An element of `(1/ℓ)Z/Z`, stored as `num/ℓ` with `0 ≤ num < ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InvValue {
    pub num: u32,
    pub ell: u32,
}

impl InvValue {
    pub fn new(num: i64, ell: u32) -> Self {
        InvValue { num: num.rem_euclid(ell as i64) as u32, ell }
    }

    pub fn zero(ell: u32) -> Self {
        InvValue { num: 0, ell }
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn add(self, other: InvValue) -> Result<InvValue> {
        if self.ell != other.ell {
            return Err(Error::Mismatch(format!("values in Z/{} and Z/{}", self.ell, other.ell)));
        }
        Ok(InvValue::new(self.num as i64 + other.num as i64, self.ell))
    }
}

impl fmt::Display for InvValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.ell)
    }
}

#[derive(Clone, Debug)]
pub enum Part {
    /// `Σ w ⊗ b_1 ⊗ ... ⊗ b_{q-1}`.
    P(Vec<(Elem, Vec<Elem>)>),
    /// `Σ c · {b_1, ..., b_q}` in `K_q/ℓ ≅ H^q(k, μ_ℓ^{⊗q})`, twisted by the
    /// fixed root of unity `g^{(q-1)/ℓ}`.
    Tame(SymbolSum),
}

/// A class in `H^q` of one level of the tower.
#[derive(Clone)]
pub struct CohClass {
    tower: Arc<Tower>,
    level: usize,
    degree: usize,
    ell: u32,
    part: Part,
}

impl fmt::Debug for CohClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CohClass(H^{} level {}, ℓ = {}: {})", self.degree, self.level, self.ell, self.render())
    }
}

impl CohClass {
    /// The class of `w ⊗ b_1 ⊗ ... ⊗ b_{q-1}` (ℓ = p).
    pub fn make_class(tower: &Arc<Tower>, level: usize, w: Elem, bs: Vec<Elem>) -> Result<CohClass> {
        check_level(tower, level)?;
        if bs.iter().any(|b| !b.is_certain_nonzero()) {
            return Err(Error::ZeroInput);
        }
        let degree = bs.len() + 1;
        let terms = if w.is_exact_zero() { vec![] } else { vec![(w, bs)] };
        Ok(CohClass { tower: tower.clone(), level, degree, ell: tower.p(), part: Part::P(terms) })
    }

    /// The tame class `{b_1, ..., b_q}` with coefficients mod ℓ.
    pub fn make_tame(tower: &Arc<Tower>, level: usize, ell: u32, bs: Vec<Elem>) -> Result<CohClass> {
        check_level(tower, level)?;
        if ell == tower.p() {
            return Err(Error::Unsupported("tame classes need ℓ ≠ p".into()));
        }
        if tower.fq().root_of_unity(ell).is_none() {
            return Err(Error::Unsupported(format!("ℓ = {ell} does not divide q - 1")));
        }
        if bs.iter().any(|b| !b.is_certain_nonzero()) {
            return Err(Error::ZeroInput);
        }
        let degree = bs.len();
        Ok(CohClass { tower: tower.clone(), level, degree, ell, part: Part::Tame(vec![(1, bs)]) })
    }

    /// A tame class given as a sum of symbols.
    pub fn from_symbols(tower: &Arc<Tower>, level: usize, ell: u32, terms: SymbolSum) -> Result<CohClass> {
        let degree = terms.first().map_or(0, |(_, bs)| bs.len());
        let mut out = CohClass::zero(tower, level, degree, ell)?;
        if ell == tower.p() {
            return Err(Error::Unsupported("symbol presentation is for ℓ ≠ p".into()));
        }
        for (c, bs) in terms {
            let one = CohClass::make_tame(tower, level, ell, bs)?;
            let Part::Tame(v) = one.part else { unreachable!() };
            let Part::Tame(acc) = &mut out.part else { unreachable!() };
            if one.degree != degree {
                return Err(Error::Mismatch("symbols of different lengths".into()));
            }
            acc.extend(v.into_iter().map(|(k, b)| (k * c, b)));
        }
        Ok(out)
    }

    /// The character of a cyclic extension, in `H^1`.
    pub fn character(ext: &CyclicExt) -> Result<CohClass> {
        match ext.kind() {
            ExtKind::ArtinSchreier => CohClass::make_class(ext.tower(), ext.level(), ext.a().clone(), vec![]),
            ExtKind::Kummer => CohClass::make_tame(ext.tower(), ext.level(), ext.ell(), vec![ext.a().clone()]),
        }
    }

    pub fn zero(tower: &Arc<Tower>, level: usize, degree: usize, ell: u32) -> Result<CohClass> {
        check_level(tower, level)?;
        let part = if ell == tower.p() { Part::P(vec![]) } else { Part::Tame(vec![]) };
        Ok(CohClass { tower: tower.clone(), level, degree, ell, part })
    }

    pub fn level(&self) -> usize {
        self.level
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn ell(&self) -> u32 {
        self.ell
    }
    pub fn part(&self) -> &Part {
        &self.part
    }

    fn compatible(&self, other: &CohClass) -> Result<()> {
        if !Arc::ptr_eq(&self.tower, &other.tower)
            || self.level != other.level
            || self.degree != other.degree
            || self.ell != other.ell
        {
            return Err(Error::Mismatch("classes live in different groups".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &CohClass) -> Result<CohClass> {
        self.compatible(other)?;
        let part = match (&self.part, &other.part) {
            (Part::P(a), Part::P(b)) => Part::P(a.iter().chain(b).cloned().collect()),
            (Part::Tame(a), Part::Tame(b)) => Part::Tame(a.iter().chain(b).cloned().collect()),
            _ => unreachable!(),
        };
        Ok(CohClass { part, ..self.clone() })
    }

    pub fn neg(&self) -> CohClass {
        let k = self.level;
        let part = match &self.part {
            Part::P(a) => Part::P(a.iter().map(|(w, bs)| (self.tower.neg(k, w), bs.clone())).collect()),
            Part::Tame(a) => Part::Tame(a.iter().map(|(c, bs)| (-c, bs.clone())).collect()),
        };
        CohClass { part, ..self.clone() }
    }

    /// `ξ ∪ {x_1, ..., x_n}` for every symbol of a K-class.
    pub fn cup(&self, xi: &KClass) -> Result<CohClass> {
        if !Arc::ptr_eq(&self.tower, xi.tower()) || self.level != xi.level() || self.ell != xi.ell() {
            return Err(Error::Mismatch("K-class and cohomology class over different fields".into()));
        }
        let k = self.level;
        let part = match &self.part {
            Part::P(a) => {
                let mut out = Vec::new();
                for (w, bs) in a {
                    for (c, xs) in xi.terms() {
                        let mut b = bs.clone();
                        b.extend(xs.iter().cloned());
                        out.push((self.tower.scale_int(k, w, *c), b));
                    }
                }
                Part::P(out)
            }
            Part::Tame(a) => {
                let mut out = Vec::new();
                for (c0, bs) in a {
                    for (c, xs) in xi.terms() {
                        let mut b = bs.clone();
                        b.extend(xs.iter().cloned());
                        out.push((c0 * c, b));
                    }
                }
                Part::Tame(out)
            }
        };
        Ok(CohClass { part, degree: self.degree + xi.degree(), ..self.clone() })
    }

    /// Appends one unit on the right.
    pub fn cup_elem(&self, x: &Elem) -> Result<CohClass> {
        let xi = KClass::symbol(&self.tower, self.level, self.ell, vec![x.clone()])?;
        self.cup(&xi)
    }

    /// `i_F^K`: reads the class one level up through the canonical section.
    pub fn lift_class(&self) -> Result<CohClass> {
        let (from, to) = (self.level, self.level + 1);
        check_level(&self.tower, to)?;
        let t = &self.tower;
        let part = match &self.part {
            Part::P(a) => Part::P(
                a.iter()
                    .map(|(w, bs)| (t.lift(from, to, w.clone()), bs.iter().map(|b| t.lift(from, to, b.clone())).collect()))
                    .collect(),
            ),
            Part::Tame(a) => Part::Tame(
                a.iter().map(|(c, bs)| (*c, bs.iter().map(|b| t.lift(from, to, b.clone())).collect())).collect(),
            ),
        };
        Ok(CohClass { part, level: to, ..self.clone() })
    }

    /// `inv` on `H^{k+1}` of level `k`.
    pub fn inv(&self) -> Result<InvValue> {
        let k = self.level;
        if self.degree != k + 1 {
            return Err(Error::Unsupported(format!(
                "inv is defined on H^{} of level {k}, not H^{}",
                k + 1,
                self.degree
            )));
        }
        let t = &self.tower;
        match &self.part {
            Part::P(a) => {
                let fm = Forms::new(t, k);
                let p = t.p();
                let mut acc = 0u32;
                for (w, bs) in a {
                    let form = fm.scale(w, &fm.dlog_wedge(bs)?);
                    acc = (acc + fm.quotient_reduce(&form)?) % p;
                }
                Ok(InvValue::new(acc as i64, p))
            }
            Part::Tame(a) => {
                let xi = KClass::from_terms(t, k, self.degree, self.ell, a.clone())?;
                let coords = xi.coordinates()?;
                debug_assert_eq!(coords.len(), 1);
                let sign = if (k * (k + 1) / 2) % 2 == 0 { 1 } else { -1 };
                Ok(InvValue::new(sign * coords[0] as i64, self.ell))
            }
        }
    }

    pub fn render(&self) -> String {
        let k = self.level;
        let t = &self.tower;
        let mut parts = Vec::new();
        match &self.part {
            Part::P(a) => {
                for (w, bs) in a {
                    let mut s = format!("({})", t.render(k, w));
                    for b in bs {
                        s.push_str(&format!(" (x) ({})", t.render(k, b)));
                    }
                    parts.push(s);
                }
            }
            Part::Tame(a) => {
                for (c, bs) in a {
                    let body: Vec<String> = bs.iter().map(|b| t.render(k, b)).collect();
                    parts.push(format!("{c}*{{{}}}", body.join(", ")));
                }
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn check_level(tower: &Tower, level: usize) -> Result<()> {
    if level > tower.depth() {
        return Err(Error::InvalidConfig(format!("level {level} exceeds the tower depth")));
    }
    Ok(())
}

/// The lifting map `(a, b) ↦ i(a) + i(b) ∪ π` from `H^q(F) ⊕ H^{q-1}(F)` to `H^q(K)`.
pub fn kato_i(a: &CohClass, b: &CohClass, pi: &Elem) -> Result<CohClass> {
    let to = a.level + 1;
    if b.level != a.level || b.degree + 1 != a.degree || a.ell != b.ell {
        return Err(Error::Mismatch("the lifting map needs classes of degrees q and q - 1 over the same field".into()));
    }
    let v = a.tower.valuation(to, pi)?;
    if v[0] != 1 || v[1..].iter().any(|&x| x != 0) {
        return Err(Error::NotPrime(a.tower.render(to, pi)));
    }
    a.lift_class()?.add(&b.lift_class()?.cup_elem(pi)?)
}

/// `inv(χ_L ∪ ξ)`, refusing bounds below the conductor of `L`.
pub fn cup_pair(ext: &CyclicExt, xi: &KClass, bound: i64) -> Result<InvValue> {
    let needed = ext.conductor();
    if bound < needed {
        return Err(Error::FiltrationTooSmall { needed, got: bound });
    }
    if xi.degree() != ext.level() {
        return Err(Error::Mismatch(format!("pairing needs a class in K_{}", ext.level())));
    }
    CohClass::character(ext)?.cup(xi)?.inv()
}

/// The three families generating J, as classes over level `k`.
pub mod relations {
    use super::*;

    /// `w ⊗ b_1 ⊗ ... ⊗ b_{q-1}` with `b_i = b_j`.
    pub fn repeated(tower: &Arc<Tower>, k: usize, w: Elem, mut bs: Vec<Elem>, i: usize, j: usize) -> Result<CohClass> {
        bs[j] = bs[i].clone();
        CohClass::make_class(tower, k, w, bs)
    }

    /// `a ⊗ a ⊗ b_1 ⊗ ...`.
    pub fn coefficient_equals_entry(tower: &Arc<Tower>, k: usize, a: Elem, rest: Vec<Elem>) -> Result<CohClass> {
        let mut bs = vec![a.clone()];
        bs.extend(rest);
        CohClass::make_class(tower, k, a, bs)
    }

    /// `(x^p - x) ⊗ b_1 ⊗ ...`.
    pub fn frobenius(tower: &Arc<Tower>, k: usize, x: &Elem, bs: Vec<Elem>) -> Result<CohClass> {
        let w = tower.sub(k, &tower.frobenius(k, x), x);
        CohClass::make_class(tower, k, w, bs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_elem;
    use crate::sample::{random_elem, random_nonzero, Shape};
    use crate::tower::FieldConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tower(p: u32, f: u32, vars: &[&str], prec: i64) -> Arc<Tower> {
        Tower::new(FieldConfig::new(p, f, vars, prec)).unwrap()
    }

    /// `Tr Res(w · b'/b dt)` computed from the series derivative.
    fn residue_formula(t: &Tower, w: &Elem, b: &Elem) -> u32 {
        let db = t.derivative(1, 1, b);
        let f = t.div(1, &t.mul(1, w, &db), b).unwrap();
        t.fq().trace(t.constant_term(1, &t.shift(1, &f, 1)).unwrap())
    }

    #[test]
    fn inv_examples() {
        for p in [2, 3] {
            let t = tower(p, 1, &["t"], 10);
            for c in 0..p {
                let w = t.from_int(1, c as i64);
                let cl = CohClass::make_class(&t, 1, w, vec![t.var(1, 1)]).unwrap();
                assert_eq!(cl.inv().unwrap(), InvValue::new(c as i64, p));
            }
        }
        let t = tower(2, 2, &["t", "u"], 8);
        for c in t.fq().elements() {
            let cl = CohClass::make_class(&t, 2, t.constant(2, c), vec![t.var(2, 1), t.var(2, 2)]).unwrap();
            assert_eq!(cl.inv().unwrap().num, t.fq().trace(c));
        }
        let zero = CohClass::make_class(&t, 2, t.zero(2), vec![t.var(2, 1), t.var(2, 2)]).unwrap();
        assert!(matches!(zero.part(), Part::P(v) if v.is_empty()));
    }

    #[test]
    fn residue_formula_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [2, 3] {
            let t = tower(p, 1, &["t"], 12);
            let shape = Shape::new(-3, 4, 3);
            for _ in 0..60 {
                let w = random_elem(&t, 1, shape, &mut rng);
                let b = random_nonzero(&t, 1, shape, &mut rng);
                let cl = CohClass::make_class(&t, 1, w.clone(), vec![b.clone()]).unwrap();
                assert_eq!(cl.inv().unwrap().num, residue_formula(&t, &w, &b));
            }
        }
    }

    #[test]
    fn relations_vanish_and_inv_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let shape = Shape::new(-2, 3, 3);
        let t = tower(2, 2, &["t", "u"], 8);
        for _ in 0..20 {
            let w = random_elem(&t, 2, shape, &mut rng);
            let b = random_nonzero(&t, 2, shape, &mut rng);
            let c = random_nonzero(&t, 2, shape, &mut rng);
            let r1 = relations::repeated(&t, 2, w.clone(), vec![b.clone(), c.clone()], 0, 1).unwrap();
            assert!(r1.inv().unwrap().is_zero());
            let r2 = relations::coefficient_equals_entry(&t, 2, b.clone(), vec![c.clone()]).unwrap();
            assert!(r2.inv().unwrap().is_zero());
            let r3 = relations::frobenius(&t, 2, &w, vec![b.clone(), c.clone()]).unwrap();
            assert!(r3.inv().unwrap().is_zero());

            let x = CohClass::make_class(&t, 2, w.clone(), vec![b.clone(), c.clone()]).unwrap();
            let w2 = random_elem(&t, 2, shape, &mut rng);
            let y = CohClass::make_class(&t, 2, w2, vec![c, b]).unwrap();
            assert_eq!(x.add(&y).unwrap().inv().unwrap(), x.inv().unwrap().add(y.inv().unwrap()).unwrap());
            assert!(x.add(&x.neg()).unwrap().inv().unwrap().is_zero());
        }
    }

    /// `(-1)^{v(a)v(b)} a^{v(b)} / b^{v(a)}` mod t, then its discrete log.
    fn tame_symbol_oracle(t: &Tower, a: &Elem, b: &Elem, ell: u32) -> u32 {
        let fq = t.fq();
        let (va, ca) = t.leading(1, a).unwrap();
        let (vb, cb) = t.leading(1, b).unwrap();
        let (Elem::Const(ca), Elem::Const(cb)) = (ca, cb) else { unreachable!() };
        let mut s = fq.div(fq.pow(ca, vb).unwrap(), fq.pow(cb, va).unwrap()).unwrap();
        if (va * vb) % 2 != 0 {
            s = fq.neg(s);
        }
        fq.dlog(s).unwrap() % ell
    }

    #[test]
    fn tame_inv_matches_tame_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = tower(2, 2, &["t"], 8);
        let shape = Shape::new(-3, 3, 3);
        for _ in 0..50 {
            let a = random_nonzero(&t, 1, shape, &mut rng);
            let b = random_nonzero(&t, 1, shape, &mut rng);
            let cl = CohClass::make_tame(&t, 1, 3, vec![a.clone(), b.clone()]).unwrap();
            assert_eq!(cl.inv().unwrap().num, tame_symbol_oracle(&t, &a, &b, 3));
        }
        // inv({c, t, u}) = log c / ℓ at level 2 as well
        let t2 = tower(2, 2, &["t", "u"], 8);
        let g = t2.fq().generator();
        for j in 0..3 {
            let c = t2.constant(2, t2.fq().pow(g, j).unwrap());
            let cl = CohClass::make_tame(&t2, 2, 3, vec![c, t2.var(2, 1), t2.var(2, 2)]).unwrap();
            assert_eq!(cl.inv().unwrap(), InvValue::new(j, 3));
        }
    }

    #[test]
    fn lifting_map_i() {
        for p in [2u32, 3] {
            let t = tower(p, 1, &["t"], 8);
            let pi = t.var(1, 1);
            for b in 0..p {
                let bc = CohClass::make_class(&t, 0, Elem::Const(t.fq().from_int(b as i64)), vec![]).unwrap();
                assert_eq!(bc.inv().unwrap().num, b);
                for a in 0..p {
                    let ac = CohClass::make_class(&t, 0, Elem::Const(t.fq().from_int(a as i64)), vec![Elem::Const(t.fq().from_int(1))])
                        .unwrap();
                    let image = kato_i(&ac, &bc, &pi).unwrap().inv().unwrap();
                    assert_eq!(image.num, b);
                }
            }
            assert!(matches!(
                kato_i(&CohClass::zero(&t, 0, 1, p).unwrap(), &CohClass::zero(&t, 0, 0, p).unwrap(), &t.pow(1, &pi, 2).unwrap()),
                Err(Error::NotPrime(_))
            ));
        }
        let t = tower(2, 2, &["t"], 8);
        let pi = parse_elem(&t, 1, "t + t^2").unwrap();
        for j in 0..3 {
            let b = Elem::Const(t.fq().pow(t.fq().generator(), j).unwrap());
            let bc = CohClass::make_tame(&t, 0, 3, vec![b]).unwrap();
            let ac = CohClass::zero(&t, 0, 2, 3).unwrap();
            assert_eq!(kato_i(&ac, &bc, &pi).unwrap().inv().unwrap(), bc.inv().unwrap());
        }
    }

    #[test]
    fn pairing_basics() {
        let t = tower(2, 1, &["t"], 10);
        let ext = CyclicExt::classify(&t, 1, ExtKind::ArtinSchreier, parse_elem(&t, 1, "t^-1").unwrap(), 2).unwrap();
        let xi = KClass::symbol(&t, 1, 2, vec![parse_elem(&t, 1, "1 + t").unwrap()]).unwrap();
        assert_eq!(cup_pair(&ext, &xi, 2).unwrap().to_string(), "1/2");
        assert!(matches!(cup_pair(&ext, &xi, 1), Err(Error::FiltrationTooSmall { needed: 2, got: 1 })));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = Shape::new(-2, 3, 3);
        for _ in 0..30 {
            let x = random_elem(&t, 1, shape, &mut rng);
            let chi = relations::frobenius(&t, 1, &x, vec![]).unwrap();
            let b = random_nonzero(&t, 1, shape, &mut rng);
            let xi = KClass::symbol(&t, 1, 2, vec![b]).unwrap();
            assert!(chi.cup(&xi).unwrap().inv().unwrap().is_zero());
        }
        // shifting the datum by (F-1)c leaves the pairing unchanged
        let t2 = tower(2, 2, &["t", "u"], 10);
        let a = parse_elem(&t2, 2, "t*u^-2 + u^-1").unwrap();
        let base = CyclicExt::classify(&t2, 2, ExtKind::ArtinSchreier, a.clone(), 2).unwrap();
        let shape2 = Shape::new(-1, 2, 2);
        for _ in 0..20 {
            let c = random_elem(&t2, 2, shape2, &mut rng);
            let shifted = t2.add(2, &a, &t2.sub(2, &t2.frobenius(2, &c), &c));
            let chi = CohClass::make_class(&t2, 2, shifted, vec![]).unwrap();
            let xs = vec![random_nonzero(&t2, 2, shape, &mut rng), random_nonzero(&t2, 2, shape, &mut rng)];
            let xi = KClass::symbol(&t2, 2, 2, xs).unwrap();
            assert_eq!(chi.cup(&xi).unwrap().inv().unwrap(), cup_pair(&base, &xi, 3).unwrap());
        }
    }
}
