//! Differential forms over a tower level, in the dlog basis of its p-base.
//!
//! Level `k` of a tower, `F_q((t_1))...((t_k))`, has p-base `t_1, ..., t_k`,
//! so `Ω^n` is free on the monomials `dlog t_S` for `S ⊂ {1..k}` with
//! `|S| = n`. A form is a map from sorted index sets to coefficients; forms
//! of degree above `k` are identically zero.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gf::FFElem;
use crate::tower::{Elem, Tower};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiffForm {
    level: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Elem>,
}

impl DiffForm {
    pub fn level(&self) -> usize {
        self.level
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    /// Coefficients keyed by sorted variable indices (1-based, innermost first).
    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Elem> {
        &self.terms
    }
    pub fn coefficient(&self, key: &[usize]) -> Option<&Elem> {
        self.terms.get(key)
    }
    /// No known nonzero coefficient (it may still be an uncertain zero).
    pub fn is_zero_to_precision(&self) -> bool {
        self.terms.values().all(Elem::is_zero_to_precision)
    }
    pub fn is_exact_zero(&self) -> bool {
        self.terms.values().all(Elem::is_exact_zero)
    }
}

/// Sign of the permutation sorting the concatenation `a ++ b`, or `None`
/// if they share an index.
fn merge_sign(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut inversions = 0usize;
    for x in a {
        for y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
    merged.sort_unstable();
    Some((merged, inversions % 2 == 1))
}

/// Form arithmetic at one level of a tower.
#[derive(Clone, Copy)]
pub struct Forms<'a> {
    pub tower: &'a Tower,
    pub level: usize,
}

impl<'a> Forms<'a> {
    pub fn new(tower: &'a Tower, level: usize) -> Self {
        assert!(level <= tower.depth());
        Forms { tower, level }
    }

    pub fn zero(&self, degree: usize) -> DiffForm {
        DiffForm { level: self.level, degree, terms: BTreeMap::new() }
    }

    fn insert(&self, form: &mut DiffForm, key: Vec<usize>, c: Elem) {
        if c.is_exact_zero() {
            return;
        }
        let k = self.level;
        match form.terms.get_mut(&key) {
            Some(slot) => {
                *slot = self.tower.add(k, slot, &c);
                if slot.is_exact_zero() {
                    form.terms.remove(&key);
                }
            }
            None => {
                form.terms.insert(key, c);
            }
        }
    }

    /// `c · dlog t_S`; zero when `S` has a repeated index.
    pub fn monomial(&self, c: Elem, indices: &[usize]) -> DiffForm {
        let mut out = self.zero(indices.len());
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return out;
        }
        assert!(sorted.iter().all(|&j| 1 <= j && j <= self.level), "dlog index out of range");
        let mut sign = false;
        for i in 0..indices.len() {
            for j in i + 1..indices.len() {
                sign ^= indices[i] > indices[j];
            }
        }
        let c = if sign { self.tower.neg(self.level, &c) } else { c };
        self.insert(&mut out, sorted, c);
        out
    }

    /// A function as a 0-form.
    pub fn function(&self, x: Elem) -> DiffForm {
        self.monomial(x, &[])
    }

    pub fn add(&self, a: &DiffForm, b: &DiffForm) -> Result<DiffForm> {
        if a.degree != b.degree {
            return Err(Error::Mismatch(format!("adding forms of degree {} and {}", a.degree, b.degree)));
        }
        let mut out = a.clone();
        for (key, c) in &b.terms {
            self.insert(&mut out, key.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self, a: &DiffForm) -> DiffForm {
        DiffForm {
            level: a.level,
            degree: a.degree,
            terms: a.terms.iter().map(|(k, c)| (k.clone(), self.tower.neg(self.level, c))).collect(),
        }
    }

    pub fn sub(&self, a: &DiffForm, b: &DiffForm) -> Result<DiffForm> {
        self.add(a, &self.neg(b))
    }

    /// Multiplication by a function.
    pub fn scale(&self, f: &Elem, a: &DiffForm) -> DiffForm {
        let mut out = self.zero(a.degree);
        for (key, c) in &a.terms {
            self.insert(&mut out, key.clone(), self.tower.mul(self.level, f, c));
        }
        out
    }

    pub fn scale_int(&self, n: i64, a: &DiffForm) -> DiffForm {
        self.scale(&self.tower.from_int(self.level, n), a)
    }

    pub fn wedge(&self, a: &DiffForm, b: &DiffForm) -> DiffForm {
        let mut out = self.zero(a.degree + b.degree);
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                if let Some((key, neg)) = merge_sign(ka, kb) {
                    let mut c = self.tower.mul(self.level, ca, cb);
                    if neg {
                        c = self.tower.neg(self.level, &c);
                    }
                    self.insert(&mut out, key, c);
                }
            }
        }
        out
    }

    /// `t_j ∂x/∂t_j`, the coefficient of `dlog t_j` in `dx`.
    pub fn euler(&self, j: usize, x: &Elem) -> Elem {
        let k = self.level;
        let dx = self.tower.derivative(k, j, x);
        if j == k {
            self.tower.shift(k, &dx, 1)
        } else {
            self.tower.mul(k, &self.tower.var(k, j), &dx)
        }
    }

    /// `dx = Σ_j t_j ∂_j x · dlog t_j`.
    pub fn d_function(&self, x: &Elem) -> DiffForm {
        let mut out = self.zero(1);
        for j in 1..=self.level {
            self.insert(&mut out, vec![j], self.euler(j, x));
        }
        out
    }

    /// Exterior derivative; `d(c dlog t_S) = dc ∧ dlog t_S`.
    pub fn d(&self, a: &DiffForm) -> DiffForm {
        let mut out = self.zero(a.degree + 1);
        for (key, c) in &a.terms {
            let basis = self.monomial(self.tower.one(self.level), key);
            let piece = self.wedge(&self.d_function(c), &basis);
            for (k2, c2) in piece.terms {
                self.insert(&mut out, k2, c2);
            }
        }
        out
    }

    /// `dlog y = dy / y`.
    pub fn dlog(&self, y: &Elem) -> Result<DiffForm> {
        if y.is_exact_zero() {
            return Err(Error::ZeroInput);
        }
        if self.level == 0 {
            return Ok(self.zero(1));
        }
        let yinv = self.tower.inv(self.level, y)?;
        Ok(self.scale(&yinv, &self.d_function(y)))
    }

    /// `dlog y_1 ∧ ... ∧ dlog y_n` (the unit form for `n = 0`).
    pub fn dlog_wedge(&self, ys: &[Elem]) -> Result<DiffForm> {
        let mut acc = self.function(self.tower.one(self.level));
        for y in ys {
            acc = self.wedge(&acc, &self.dlog(y)?);
        }
        Ok(acc)
    }

    /// Inverse Cartier operator: `x dlog y_S ↦ x^p dlog y_S`.
    pub fn inverse_cartier(&self, a: &DiffForm) -> DiffForm {
        DiffForm {
            level: a.level,
            degree: a.degree,
            terms: a.terms.iter().map(|(k, c)| (k.clone(), self.tower.frobenius(self.level, c))).collect(),
        }
    }

    /// Coefficient of the top monomial `dlog t_1 ∧ ... ∧ dlog t_k`.
    pub fn top_coefficient(&self, a: &DiffForm) -> Result<Elem> {
        if a.degree != self.level {
            return Err(Error::Unsupported(format!(
                "form of degree {} is not of top degree {}",
                a.degree, self.level
            )));
        }
        let key: Vec<usize> = (1..=self.level).collect();
        Ok(a.terms.get(&key).cloned().unwrap_or_else(|| self.tower.zero(self.level)))
    }

    /// `Res(x dt/t)`: the `t^0` coefficient of a top-degree form at level 1.
    pub fn residue(&self, a: &DiffForm) -> Result<FFElem> {
        if self.level != 1 {
            return Err(Error::Unsupported("residue is defined on one-variable Laurent series".into()));
        }
        self.tower.constant_term(1, &self.top_coefficient(a)?)
    }

    /// The class of a top-degree form in `Ω^k / ((F-1)Ω^k + dΩ^{k-1}) ≅ Z/p`:
    /// the trace of the constant term of its coefficient.
    pub fn quotient_reduce(&self, a: &DiffForm) -> Result<u32> {
        let c = self.tower.constant_term(self.level, &self.top_coefficient(a)?)?;
        Ok(self.tower.fq().trace(c))
    }

    /// An antiderivative `x` with `dx = a` for an exact 1-form at level 1,
    /// normalized to have no exponents divisible by p.
    pub fn integrate(&self, a: &DiffForm) -> Result<Elem> {
        if self.level != 1 || a.degree != 1 {
            return Err(Error::Unsupported("integration is implemented for 1-forms at level 1".into()));
        }
        let tower = self.tower;
        let p = tower.p() as i64;
        let c = self.top_coefficient(a)?;
        let Elem::Series(s) = &c else { unreachable!() };
        let mut x = tower.zero(1);
        for (e, coef) in s.terms() {
            if e.rem_euclid(p) == 0 {
                if coef.is_zero_to_precision() {
                    continue;
                }
                return Err(Error::Inconsistent(format!("form is not exact (term at t^{e})")));
            }
            let inv_e = tower.fq().inv(tower.fq().from_int(*e))?;
            let Elem::Const(cv) = coef else { unreachable!() };
            let term = tower.monomial(&[*e], tower.fq().mul(*cv, inv_e));
            x = tower.add(1, &x, &term);
        }
        if s.known_to() != crate::tower::EXACT {
            x = tower.add(1, &x, &tower.big_o(1, 1, s.known_to()));
        }
        Ok(x)
    }

    /// Lifts a form from level `self.level` to a higher level `to` by
    /// reading coefficients as constants in the new variables.
    pub fn lift(&self, a: &DiffForm, to: usize) -> DiffForm {
        DiffForm {
            level: to,
            degree: a.degree,
            terms: a
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), self.tower.lift(self.level, to, c.clone())))
                .collect(),
        }
    }

    /// Drops every term of the outermost variable at exponent `≥ n`.
    pub fn truncate(&self, a: &DiffForm, n: i64) -> DiffForm {
        DiffForm {
            level: a.level,
            degree: a.degree,
            terms: a.terms.iter().map(|(k, c)| (k.clone(), self.tower.truncate(self.level, c, n))).collect(),
        }
    }

    pub fn render(&self, a: &DiffForm) -> String {
        if a.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = a
            .terms
            .iter()
            .map(|(key, c)| {
                let basis: Vec<String> =
                    key.iter().map(|&j| format!("dlog {}", self.tower.var_name(j))).collect();
                let coef = self.tower.render(self.level, c);
                if basis.is_empty() {
                    format!("({coef})")
                } else {
                    format!("({coef}) {}", basis.join("^"))
                }
            })
            .collect();
        parts.join(" + ")
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
    use std::sync::Arc;

    fn tower(p: u32, f: u32, vars: &[&str]) -> Arc<Tower> {
        Tower::new(FieldConfig::new(p, f, vars, 12)).unwrap()
    }

    #[test]
    fn d_and_dlog_examples() {
        let k = tower(2, 1, &["t"]);
        let fm = Forms::new(&k, 1);
        let t = parse_elem(&k, 1, "t").unwrap();
        assert_eq!(fm.d_function(&t), fm.monomial(t.clone(), &[1]));
        assert!(fm.d_function(&parse_elem(&k, 1, "t^2").unwrap()).is_exact_zero());

        let k3 = tower(3, 1, &["t"]);
        let f3 = Forms::new(&k3, 1);
        let y = parse_elem(&k3, 1, "t^2*(1+t)").unwrap();
        let lhs = f3.dlog(&y).unwrap();
        // 2 dlog t + t/(1+t) dlog t, with t/(1+t) = Σ (-1)^{k+1} t^k
        let mut series = k3.from_int(1, 2);
        for e in 1..12 {
            let sign = if e % 2 == 1 { 1 } else { -1 };
            series = k3.add(1, &series, &k3.monomial(&[e], k3.fq().from_int(sign)));
        }
        let diff = f3.sub(&lhs, &f3.monomial(series, &[1])).unwrap();
        assert!(diff.is_zero_to_precision());
        assert!(f3.dlog(&k3.zero(1)).is_err());
    }

    #[test]
    fn dlog_is_additive() {
        let k = tower(3, 2, &["t", "u"]);
        let fm = Forms::new(&k, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = Shape::new(-2, 3, 3);
        for _ in 0..20 {
            let a = random_nonzero(&k, 2, shape, &mut rng);
            let b = random_nonzero(&k, 2, shape, &mut rng);
            let lhs = fm.dlog(&k.mul(2, &a, &b)).unwrap();
            let rhs = fm.add(&fm.dlog(&a).unwrap(), &fm.dlog(&b).unwrap()).unwrap();
            assert!(fm.sub(&lhs, &rhs).unwrap().is_zero_to_precision());
        }
    }

    #[test]
    fn top_degree_collapse_and_wedge_signs() {
        let k = tower(2, 1, &["t", "u"]);
        let fm = Forms::new(&k, 2);
        let one = k.one(2);
        let a = fm.monomial(one.clone(), &[2, 1]);
        assert_eq!(a, fm.neg(&fm.monomial(one.clone(), &[1, 2])));
        assert!(fm.monomial(one.clone(), &[1, 1]).is_exact_zero());
        let two = fm.wedge(&fm.monomial(one.clone(), &[1, 2]), &fm.monomial(one.clone(), &[1]));
        assert!(two.is_exact_zero());
        let f1 = Forms::new(&k, 1);
        let x = f1.monomial(k.one(1), &[1]);
        assert!(f1.wedge(&x, &x).is_exact_zero());
    }

    #[test]
    fn d_squared_and_cartier_additivity() {
        let k = tower(3, 1, &["t", "u"]);
        let fm = Forms::new(&k, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shape = Shape::new(-3, 4, 3);
        for _ in 0..100 {
            let x = random_elem(&k, 2, shape, &mut rng);
            assert!(fm.d(&fm.d_function(&x)).is_zero_to_precision());
            let y = random_elem(&k, 2, shape, &mut rng);
            let w1 = fm.scale(&x, &fm.monomial(k.one(2), &[1]));
            let w2 = fm.scale(&y, &fm.monomial(k.one(2), &[2]));
            let lhs = fm.inverse_cartier(&fm.add(&w1, &w2).unwrap());
            let rhs = fm.add(&fm.inverse_cartier(&w1), &fm.inverse_cartier(&w2)).unwrap();
            assert_eq!(lhs, rhs);
        }
        let f1 = Forms::new(&k, 1);
        let t = k.var(1, 1);
        assert_eq!(f1.inverse_cartier(&f1.monomial(k.one(1), &[1])), f1.monomial(k.one(1), &[1]));
        assert_eq!(
            f1.inverse_cartier(&f1.monomial(t.clone(), &[1])),
            f1.monomial(k.pow(1, &t, 3).unwrap(), &[1])
        );
    }

    #[test]
    fn residues() {
        let k = tower(5, 2, &["t"]);
        let fm = Forms::new(&k, 1);
        let c = FFElem(7);
        assert_eq!(fm.residue(&fm.monomial(k.constant(1, c), &[1])).unwrap(), c);
        for e in [-3, -1, 1, 4] {
            assert!(fm.residue(&fm.monomial(k.monomial(&[e], c), &[1])).unwrap().is_zero());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let f = random_elem(&k, 1, Shape::new(-6, 6, 4), &mut rng);
            assert!(fm.residue(&fm.d_function(&f)).unwrap().is_zero());
        }
        let vague = fm.monomial(k.big_o(1, 1, 0), &[1]);
        assert!(matches!(fm.residue(&vague), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn quotient_reduce_is_well_defined_and_onto() {
        for (p, f) in [(2, 1), (2, 2), (3, 1)] {
            let k = tower(p, f, &["t"]);
            let fm = Forms::new(&k, 1);
            let f0 = Forms::new(&k, 0);
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let shape = Shape::new(-5, 5, 4);
            let mut seen = std::collections::BTreeSet::new();
            for _ in 0..100 {
                let w = fm.scale(&random_elem(&k, 1, shape, &mut rng), &fm.monomial(k.one(1), &[1]));
                let eta = fm.scale(&random_elem(&k, 1, shape, &mut rng), &fm.monomial(k.one(1), &[1]));
                let xi = random_elem(&k, 1, shape, &mut rng);
                let pert = fm.sub(&fm.inverse_cartier(&eta), &eta).unwrap();
                let moved = fm.add(&fm.add(&w, &pert).unwrap(), &fm.d_function(&xi)).unwrap();
                let r = fm.quotient_reduce(&w).unwrap();
                assert_eq!(fm.quotient_reduce(&moved).unwrap(), r);
                seen.insert(r);
            }
            assert_eq!(seen.len(), p as usize);
            // level 0: ρ(x) = Tr(x) on F_q
            for c in k.fq().elements() {
                let w = f0.function(Elem::Const(c));
                assert_eq!(f0.quotient_reduce(&w).unwrap(), k.fq().trace(c));
            }
        }
    }

    #[test]
    fn integrate_inverts_d() {
        let k = tower(3, 1, &["t"]);
        let fm = Forms::new(&k, 1);
        let x = parse_elem(&k, 1, "t^-2 + 2*t + t^4").unwrap();
        let back = fm.integrate(&fm.d_function(&x)).unwrap();
        assert_eq!(back, x);
        assert!(fm.integrate(&fm.monomial(k.one(1), &[1])).is_err());
    }
}
