//! Cyclic extensions `L/K` of prime degree ℓ, as `K[y]/(f)` with
//! `f = y^p - y - a` (Artin–Schreier) or `f = y^ℓ - a` (Kummer, `ℓ | q - 1`).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf::FFElem;
use crate::tower::{Elem, Tower, EXACT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtKind {
    ArtinSchreier,
    Kummer,
}

impl ExtKind {
    pub fn name(self) -> &'static str {
        match self {
            ExtKind::ArtinSchreier => "as",
            ExtKind::Kummer => "kummer",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ramification {
    Unramified,
    Tame,
    Wild,
    Ferocious,
}

impl Ramification {
    pub fn name(self) -> &'static str {
        match self {
            Ramification::Unramified => "unramified",
            Ramification::Tame => "tame",
            Ramification::Wild => "wild",
            Ramification::Ferocious => "ferocious",
        }
    }
}

/// An element `Σ c_i y^i` of `L`, `0 ≤ i < ℓ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LElement {
    pub coeffs: Vec<Elem>,
}

impl LElement {
    /// The element of `K` it equals, when every `y`-coefficient vanishes exactly.
    pub fn in_base(&self) -> Option<&Elem> {
        self.coeffs[1..].iter().all(Elem::is_exact_zero).then(|| &self.coeffs[0])
    }
}

/// A classified cyclic extension of degree ℓ of level `level` of a tower.
#[derive(Clone)]
pub struct CyclicExt {
    tower: Arc<Tower>,
    level: usize,
    kind: ExtKind,
    ell: u32,
    original: Elem,
    a: Elem,
    zeta: Option<FFElem>,
    ram: Ramification,
    break_i: i64,
    pi_l: LElement,
    h: Option<LElement>,
    a_sigma: Option<LElement>,
    b: Option<Elem>,
    residue: Option<Box<CyclicExt>>,
}

impl fmt::Debug for CyclicExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CyclicExt({} a = {}, ℓ = {}, {}, break {})",
            self.kind.name(),
            self.tower.render(self.level, &self.a),
            self.ell,
            self.ram.name(),
            self.break_i
        )
    }
}

/// Splits `c` into its p-th power part (all exponents divisible by p at
/// every level) and the rest.
fn split_pth(tower: &Tower, k: usize, c: &Elem) -> (Elem, Elem) {
    if k == 0 {
        return (c.clone(), tower.zero(0));
    }
    let p = tower.p() as i64;
    let Elem::Series(s) = c else { unreachable!() };
    let mut pp = tower.zero(k);
    for (e, coef) in s.terms() {
        if e.rem_euclid(p) == 0 {
            let (inner, _) = split_pth(tower, k - 1, coef);
            pp = tower.add(k, &pp, &tower.monomial_outer(*e, inner));
        }
    }
    let rest = tower.sub(k, c, &pp);
    (pp, rest)
}

/// Canonical representative of `a` modulo `(F - 1)K`: positive powers of the
/// outer variable dropped, p-divisible poles replaced through p-th roots as
/// far as possible, the constant coefficient reduced recursively.
pub fn as_reduce(tower: &Tower, k: usize, a: &Elem) -> Result<Elem> {
    let fq = tower.fq();
    if k == 0 {
        let Elem::Const(c) = a else { unreachable!() };
        return Ok(if fq.trace(*c) == 0 { tower.zero(0) } else { a.clone() });
    }
    if a.known_to() <= 0 {
        return Err(Error::precision("Artin–Schreier datum must be known through the constant term"));
    }
    let p = tower.p() as i64;
    let mut cur = a.clone();
    let lowest = cur.exponents().first().copied().unwrap_or(0);
    for e in lowest..0 {
        let c = tower.coeff(k, &cur, e)?;
        if c.is_exact_zero() || e % p != 0 {
            continue;
        }
        let (pp, _) = split_pth(tower, k - 1, &c);
        if pp.is_exact_zero() {
            continue;
        }
        let r = tower.pth_root(k - 1, &pp).ok_or_else(|| Error::Inconsistent("p-th power part".into()))?;
        // a - (c^p - c) with c = r·u^{e/p}
        cur = tower.sub(k, &cur, &tower.monomial_outer(e, pp));
        cur = tower.add(k, &cur, &tower.monomial_outer(e / p, r));
    }
    let mut out = tower.zero(k);
    if let Elem::Series(s) = &cur {
        for (e, c) in s.terms() {
            if *e < 0 {
                out = tower.add(k, &out, &tower.monomial_outer(*e, c.clone()));
            }
        }
    }
    let c0 = as_reduce(tower, k - 1, &tower.coeff(k, &cur, 0)?)?;
    Ok(tower.add(k, &out, &tower.lift(k - 1, k, c0)))
}

/// `a` modulo ℓ-th powers as a monomial `t_k^{v_k} ... t_1^{v_1} g^j`, exponents in `0..ℓ`.
pub fn kummer_reduce(tower: &Tower, k: usize, a: &Elem, ell: u32) -> Result<Elem> {
    if k == 0 {
        let Elem::Const(c) = a else { unreachable!() };
        let j = tower.fq().dlog(*c)? % ell;
        return Ok(Elem::Const(tower.fq().pow(tower.fq().generator(), j as i64)?));
    }
    let (m, c) = tower.leading(k, a)?;
    let inner = kummer_reduce(tower, k - 1, &c, ell)?;
    Ok(tower.monomial_outer(m.rem_euclid(ell as i64), inner))
}

fn binomial_mod(n: usize, k: usize, p: u32) -> i64 {
    // Lucas
    let (mut n, mut k) = (n as u64, k as u64);
    let p = p as u64;
    let mut acc = 1u64;
    while n > 0 || k > 0 {
        let (ni, ki) = (n % p, k % p);
        if ki > ni {
            return 0;
        }
        let mut c = 1u64;
        for i in 0..ki {
            c = c * (ni - i) / (i + 1);
        }
        acc = acc * (c % p) % p;
        n /= p;
        k /= p;
    }
    acc as i64
}

impl CyclicExt {
    /// Reduces the defining datum, classifies the ramification and computes
    /// the uniformizer data.
    pub fn classify(tower: &Arc<Tower>, level: usize, kind: ExtKind, a: Elem, ell: u32) -> Result<CyclicExt> {
        if level > tower.depth() {
            return Err(Error::InvalidConfig(format!("level {level} exceeds the tower depth")));
        }
        if !a.is_certain_nonzero() {
            return Err(Error::ZeroInput);
        }
        let p = tower.p();
        let k = level;
        let mut ext = CyclicExt {
            tower: tower.clone(),
            level,
            kind,
            ell,
            original: a.clone(),
            a: a.clone(),
            zeta: None,
            ram: Ramification::Unramified,
            break_i: 0,
            pi_l: LElement { coeffs: vec![] },
            h: None,
            a_sigma: None,
            b: None,
            residue: None,
        };
        match kind {
            ExtKind::ArtinSchreier => {
                if ell != p {
                    return Err(Error::Unsupported(format!("Artin–Schreier extensions have degree p = {p}")));
                }
                let red = as_reduce(tower, k, &a)?;
                if red.is_exact_zero() {
                    return Err(Error::TrivialExtension(format!(
                        "{} lies in (F-1)K",
                        tower.render(k, &a)
                    )));
                }
                ext.a = red;
            }
            ExtKind::Kummer => {
                if ell == p || !crate::gf::is_prime(ell) {
                    return Err(Error::Unsupported(format!("Kummer degree ℓ = {ell} must be a prime other than p")));
                }
                let zeta = tower.fq().root_of_unity(ell).ok_or_else(|| {
                    Error::Unsupported(format!("ℓ = {ell} does not divide q - 1 = {}", tower.fq().order() - 1))
                })?;
                ext.zeta = Some(zeta);
                let red = kummer_reduce(tower, k, &a, ell)?;
                if red == tower.one(k) {
                    return Err(Error::TrivialExtension(format!("{} is an ℓ-th power", tower.render(k, &a))));
                }
                ext.a = red;
            }
        }
        ext.fill_ramification()?;
        Ok(ext)
    }

    fn fill_ramification(&mut self) -> Result<()> {
        let tower = self.tower.clone();
        let k = self.level;
        let p = tower.p() as i64;
        let ell = self.ell as i64;
        let u = if k == 0 { tower.one(0) } else { tower.var(k, k) };
        self.pi_l = self.from_base(u.clone());
        if k == 0 {
            return Ok(());
        }
        match self.kind {
            ExtKind::ArtinSchreier => {
                let lowest = self.a.exponents().first().copied().unwrap_or(0);
                if lowest >= 0 {
                    let c0 = tower.coeff(k, &self.a, 0)?;
                    self.residue =
                        Some(Box::new(CyclicExt::classify(&tower, k - 1, self.kind, c0, self.ell)?));
                    return Ok(());
                }
                let n = -lowest;
                let lead = tower.coeff(k, &self.a, lowest)?;
                if !lead.is_certain_nonzero() {
                    return Err(Error::precision("leading pole coefficient is not known"));
                }
                self.break_i = n;
                let y = self.y();
                let y_inv = self.y_inverse()?;
                if n % p != 0 {
                    self.ram = Ramification::Wild;
                    // π_L = y^α u^β with -nα + pβ = 1
                    let alpha0 = (1..p).find(|x| (n * x) % p == 1).unwrap();
                    let beta = (1 - n * alpha0) / p;
                    let pi = self.mul(&self.pow_nonneg(&y_inv, alpha0 as u64), &self.from_base(tower.pow(k, &u, beta)?));
                    let pi_inv = self.mul(&self.pow_nonneg(&y, alpha0 as u64), &self.from_base(tower.pow(k, &u, -beta)?));
                    let a_sigma = self.sub(&self.mul(&self.sigma(&pi, 1), &pi_inv), &self.one());
                    self.pi_l = pi;
                    self.b = Some(self.field_norm(&a_sigma)?);
                    self.a_sigma = Some(a_sigma);
                } else {
                    self.ram = Ramification::Ferocious;
                    // h = y u^{n/p} is a unit with h̄^p = leading coefficient of a
                    let h = self.mul(&y, &self.from_base(tower.pow(k, &u, n / p)?));
                    let h_inv = self.mul(&y_inv, &self.from_base(tower.pow(k, &u, -n / p)?));
                    let a_sigma = self.sub(&self.mul(&self.sigma(&h, 1), &h_inv), &self.one());
                    self.h = Some(h);
                    self.b = Some(self.field_norm(&a_sigma)?);
                    self.a_sigma = Some(a_sigma);
                }
            }
            ExtKind::Kummer => {
                let (v, c) = tower.leading(k, &self.a)?;
                let v = v.rem_euclid(ell);
                if v == 0 {
                    self.residue = Some(Box::new(CyclicExt::classify(&tower, k - 1, self.kind, c, self.ell)?));
                    return Ok(());
                }
                self.ram = Ramification::Tame;
                let alpha = (1..ell).find(|x| (v * x) % ell == 1).unwrap();
                let beta = (1 - alpha * v) / ell;
                self.pi_l = self.mul(&self.pow_nonneg(&self.y(), alpha as u64), &self.from_base(tower.pow(k, &u, beta)?));
            }
        }
        Ok(())
    }

    pub fn tower(&self) -> &Arc<Tower> {
        &self.tower
    }
    pub fn level(&self) -> usize {
        self.level
    }
    pub fn kind(&self) -> ExtKind {
        self.kind
    }
    pub fn ell(&self) -> u32 {
        self.ell
    }
    /// The reduced defining datum.
    pub fn a(&self) -> &Elem {
        &self.a
    }
    /// The datum as given.
    pub fn original(&self) -> &Elem {
        &self.original
    }
    pub fn zeta(&self) -> Option<FFElem> {
        self.zeta
    }
    pub fn ramification(&self) -> Ramification {
        self.ram
    }
    /// Ramification break (pole order of the reduced datum); 0 when not wild.
    pub fn break_i(&self) -> i64 {
        self.break_i
    }
    pub fn pi_l(&self) -> &LElement {
        &self.pi_l
    }
    pub fn h(&self) -> Option<&LElement> {
        self.h.as_ref()
    }
    pub fn a_sigma(&self) -> Option<&LElement> {
        self.a_sigma.as_ref()
    }
    pub fn b(&self) -> Option<&Elem> {
        self.b.as_ref()
    }
    /// The residue extension `F_L/F` of an unramified extension of a valued level.
    pub fn residue(&self) -> Option<&CyclicExt> {
        self.residue.as_deref()
    }

    /// Smallest filtration bound at which the character of `L` is read exactly.
    pub fn conductor(&self) -> i64 {
        match self.ram {
            Ramification::Wild | Ramification::Ferocious => self.break_i + 1,
            _ => 1,
        }
    }

    // ----- arithmetic in L ---------------------------------------------

    pub fn from_base(&self, x: Elem) -> LElement {
        let mut coeffs = vec![self.tower.zero(self.level); self.ell as usize];
        coeffs[0] = x;
        LElement { coeffs }
    }

    pub fn one(&self) -> LElement {
        self.from_base(self.tower.one(self.level))
    }

    /// The generator `y`.
    pub fn y(&self) -> LElement {
        let mut z = self.from_base(self.tower.zero(self.level));
        if self.ell == 1 {
            unreachable!()
        }
        z.coeffs[1] = self.tower.one(self.level);
        z
    }

    pub fn from_coeffs(&self, coeffs: Vec<Elem>) -> Result<LElement> {
        if coeffs.len() > self.ell as usize {
            return Err(Error::Mismatch("too many y-coefficients".into()));
        }
        let mut c = coeffs;
        c.resize(self.ell as usize, self.tower.zero(self.level));
        Ok(LElement { coeffs: c })
    }

    pub fn add(&self, x: &LElement, z: &LElement) -> LElement {
        let k = self.level;
        LElement { coeffs: x.coeffs.iter().zip(&z.coeffs).map(|(a, b)| self.tower.add(k, a, b)).collect() }
    }

    pub fn neg(&self, x: &LElement) -> LElement {
        LElement { coeffs: x.coeffs.iter().map(|a| self.tower.neg(self.level, a)).collect() }
    }

    pub fn sub(&self, x: &LElement, z: &LElement) -> LElement {
        self.add(x, &self.neg(z))
    }

    pub fn mul(&self, x: &LElement, z: &LElement) -> LElement {
        let k = self.level;
        let t = &self.tower;
        let l = self.ell as usize;
        let mut prod = vec![t.zero(k); 2 * l - 1];
        for (i, a) in x.coeffs.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in z.coeffs.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                prod[i + j] = t.add(k, &prod[i + j], &t.mul(k, a, b));
            }
        }
        for d in (l..2 * l - 1).rev() {
            let c = std::mem::replace(&mut prod[d], t.zero(k));
            if c.is_exact_zero() {
                continue;
            }
            let ca = t.mul(k, &c, &self.a);
            prod[d - l] = t.add(k, &prod[d - l], &ca);
            if self.kind == ExtKind::ArtinSchreier {
                prod[d - l + 1] = t.add(k, &prod[d - l + 1], &c);
            }
        }
        prod.truncate(l);
        LElement { coeffs: prod }
    }

    pub fn pow_nonneg(&self, x: &LElement, mut e: u64) -> LElement {
        let mut acc = self.one();
        let mut base = x.clone();
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

    /// `σ^j(x)`, with `σ(y) = y + 1` or `σ(y) = ζ y`.
    pub fn sigma(&self, x: &LElement, j: i64) -> LElement {
        let k = self.level;
        let t = &self.tower;
        let l = self.ell as usize;
        let j = j.rem_euclid(self.ell as i64);
        match self.kind {
            ExtKind::ArtinSchreier => {
                // Σ c_i (y + j)^i
                let mut out = vec![t.zero(k); l];
                let fq = t.fq();
                for (i, c) in x.coeffs.iter().enumerate() {
                    if c.is_exact_zero() {
                        continue;
                    }
                    for (s, slot) in out.iter_mut().enumerate().take(i + 1) {
                        let coef = fq.mul(fq.from_int(binomial_mod(i, s, self.ell)), fq.pow(fq.from_int(j), (i - s) as i64).unwrap());
                        if coef.is_zero() {
                            continue;
                        }
                        *slot = t.add(k, slot, &t.scale(k, c, coef));
                    }
                }
                LElement { coeffs: out }
            }
            ExtKind::Kummer => {
                let fq = t.fq();
                let zeta = self.zeta.unwrap();
                LElement {
                    coeffs: x
                        .coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| t.scale(k, c, fq.pow(zeta, (i as i64) * j).unwrap()))
                        .collect(),
                }
            }
        }
    }

    /// `N_{L/K}(x) = Π_j σ^j(x)`.
    pub fn field_norm(&self, x: &LElement) -> Result<Elem> {
        if x.coeffs.iter().all(Elem::is_exact_zero) {
            return Err(Error::ZeroInput);
        }
        let mut acc = x.clone();
        for j in 1..self.ell as i64 {
            acc = self.mul(&acc, &self.sigma(x, j));
        }
        if acc.coeffs[1..].iter().any(|c| !c.is_zero_to_precision()) {
            return Err(Error::Inconsistent("norm has a nonzero y-component".into()));
        }
        Ok(acc.coeffs.swap_remove(0))
    }

    /// `y^{-1}`, from `y · (y^{p-1} - 1) = a` or `y · y^{ℓ-1} = a`.
    pub fn y_inverse(&self) -> Result<LElement> {
        let t = &self.tower;
        let k = self.level;
        let ainv = t.inv(k, &self.a)?;
        let mut top = self.pow_nonneg(&self.y(), self.ell as u64 - 1);
        if self.kind == ExtKind::ArtinSchreier {
            top = self.sub(&top, &self.one());
        }
        Ok(self.mul(&top, &self.from_base(ainv)))
    }

    pub fn inverse(&self, x: &LElement) -> Result<LElement> {
        let n = self.field_norm(x)?;
        let mut others = self.one();
        for j in 1..self.ell as i64 {
            others = self.mul(&others, &self.sigma(x, j));
        }
        Ok(self.mul(&others, &self.from_base(self.tower.inv(self.level, &n)?)))
    }

    /// Valuation of `L`, normalized so that `v_L(π_L) = 1`.
    pub fn valuation_l(&self, x: &LElement) -> Result<i64> {
        let n = self.field_norm(x)?;
        let v = self.tower.ord(self.level, &n)?;
        match self.ram {
            Ramification::Tame | Ramification::Wild => Ok(v),
            _ => {
                if v % self.ell as i64 != 0 {
                    return Err(Error::Inconsistent("norm valuation not divisible by ℓ".into()));
                }
                Ok(v / self.ell as i64)
            }
        }
    }

    pub fn render_l(&self, x: &LElement) -> String {
        let mut parts = Vec::new();
        for (i, c) in x.coeffs.iter().enumerate() {
            if c.is_exact_zero() {
                continue;
            }
            let body = self.tower.render(self.level, c);
            parts.push(match i {
                0 => format!("({body})"),
                1 => format!("({body})*y"),
                _ => format!("({body})*y^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    // ----- norm congruence and residue data --------------------------------

    /// Compares `N(1 + x a_σ)` with `1 + (x^p - x) b` modulo `U_{i+1}`.
    pub fn norm_congruence_check(&self, x: &Elem) -> Result<CongruenceReport> {
        let (Some(a_sigma), Some(b)) = (&self.a_sigma, &self.b) else {
            return Err(Error::Unsupported("norm congruence needs a wild or ferocious extension".into()));
        };
        let t = &self.tower;
        let k = self.level;
        if !x.is_exact_zero() && t.ord(k, x)? < 0 {
            return Err(Error::Inconsistent("x must be integral".into()));
        }
        let lhs = self.field_norm(&self.add(&self.one(), &self.mul(&self.from_base(x.clone()), a_sigma)))?;
        let xp_x = t.sub(k, &t.pow(k, x, t.p() as i64)?, x);
        let rhs = t.add(k, &t.one(k), &t.mul(k, &xp_x, b));
        let ratio = t.sub(k, &t.div(k, &lhs, &rhs)?, &t.one(k));
        let i = self.break_i;
        let excess = apparent_order(&ratio);
        let holds = excess > i;
        Ok(CongruenceReport { lhs, rhs, i, holds, difference_valuation: excess })
    }

    pub fn residue_extension_data(&self) -> Result<ResidueData> {
        let t = &self.tower;
        let k = self.level;
        let mut data = ResidueData {
            description: String::new(),
            pi_l: self.pi_l.clone(),
            h: self.h.clone(),
            norm_h_bar: None,
            residue_degree: 1,
            inseparable: false,
        };
        match self.ram {
            Ramification::Unramified => {
                data.residue_degree = self.ell;
                data.description = match &self.residue {
                    Some(r) => format!("F[y]/({}) over level {}", r.defining_polynomial(), k - 1),
                    None => format!("F_{{q^{}}}", self.ell),
                };
            }
            Ramification::Tame | Ramification::Wild => {
                data.description = "F_L = F".into();
            }
            Ramification::Ferocious => {
                let lead = t.coeff(k, &self.a, -self.break_i)?;
                data.residue_degree = self.ell;
                data.inseparable = true;
                data.description = format!("F({}^(1/{}))", t.render(k - 1, &lead), self.ell);
                data.norm_h_bar = Some(lead);
            }
        }
        Ok(data)
    }

    pub fn defining_polynomial(&self) -> String {
        let a = self.tower.render(self.level, &self.a);
        match self.kind {
            ExtKind::ArtinSchreier => format!("y^{} - y - ({a})", self.ell),
            ExtKind::Kummer => format!("y^{} - ({a})", self.ell),
        }
    }
}

/// First outer exponent whose coefficient is not zero to working precision
/// (the precision bound if there is none).
pub fn apparent_order(x: &Elem) -> i64 {
    match x {
        Elem::Const(c) => {
            if c.is_zero() {
                EXACT
            } else {
                0
            }
        }
        Elem::Series(s) => {
            s.terms().iter().find(|(_, c)| !c.is_zero_to_precision()).map_or(s.known_to(), |(e, _)| *e)
        }
    }
}

#[derive(Clone, Debug)]
pub struct CongruenceReport {
    pub lhs: Elem,
    pub rhs: Elem,
    pub i: i64,
    pub holds: bool,
    /// Valuation of `lhs/rhs - 1` (the precision bound when it vanishes).
    pub difference_valuation: i64,
}

#[derive(Clone, Debug)]
pub struct ResidueData {
    pub description: String,
    pub pi_l: LElement,
    pub h: Option<LElement>,
    /// `N_{F_L/F}(h̄) = h̄^p` for ferocious extensions.
    pub norm_h_bar: Option<Elem>,
    pub residue_degree: u32,
    pub inseparable: bool,
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

    fn ext(t: &Arc<Tower>, level: usize, kind: ExtKind, a: &str, ell: u32) -> Result<CyclicExt> {
        CyclicExt::classify(t, level, kind, parse_elem(t, level, a).unwrap(), ell)
    }

    #[test]
    fn norm_of_generator() {
        let t = tower(3, 1, &["t", "u"], 12);
        let l = ext(&t, 2, ExtKind::ArtinSchreier, "t*u^-1 + u^-2", 3).unwrap();
        let n = l.field_norm(&l.y()).unwrap();
        assert!(t.sub(2, &n, l.a()).is_zero_to_precision(), "{}", t.render(2, &n));

        let t4 = tower(2, 2, &["t", "u"], 10);
        let k = ext(&t4, 2, ExtKind::Kummer, "u*t", 3).unwrap();
        let n = k.field_norm(&k.y()).unwrap();
        assert!(t4.sub(2, &n, k.a()).is_zero_to_precision());
    }

    #[test]
    fn norm_is_multiplicative_and_sigma_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = Shape::new(-1, 2, 2);
        let t = tower(2, 2, &["t", "u"], 10);
        let exts = [
            ext(&t, 2, ExtKind::ArtinSchreier, "t*u^-1", 2).unwrap(),
            ext(&t, 2, ExtKind::ArtinSchreier, "t^-1*u^-2", 2).unwrap(),
            ext(&t, 2, ExtKind::Kummer, "t", 3).unwrap(),
        ];
        for l in &exts {
            for _ in 0..10 {
                let mk = |rng: &mut ChaCha8Rng| {
                    let c = (0..l.ell()).map(|_| random_elem(&t, 2, shape, rng)).collect();
                    l.from_coeffs(c).unwrap()
                };
                let x = mk(&mut rng);
                let z = mk(&mut rng);
                let (Ok(nx), Ok(nz)) = (l.field_norm(&x), l.field_norm(&z)) else { continue };
                let nxz = l.field_norm(&l.mul(&x, &z)).unwrap();
                assert!(t.sub(2, &nxz, &t.mul(2, &nx, &nz)).is_zero_to_precision());
                let ns = l.field_norm(&l.sigma(&x, 1)).unwrap();
                assert!(t.sub(2, &ns, &nx).is_zero_to_precision());
                if nx.is_certain_nonzero() {
                    let prod = l.mul(&x, &l.inverse(&x).unwrap());
                    let d = l.sub(&prod, &l.one());
                    assert!(d.coeffs.iter().all(Elem::is_zero_to_precision));
                }
            }
        }
    }

    #[test]
    fn classification_examples() {
        let t = tower(2, 1, &["t", "u"], 10);
        let w = ext(&t, 1, ExtKind::ArtinSchreier, "t^-1", 2).unwrap();
        assert_eq!((w.ramification(), w.break_i()), (Ramification::Wild, 1));
        let w3 = ext(&t, 2, ExtKind::ArtinSchreier, "t*u^-3 + u^-2", 2).unwrap();
        assert_eq!((w3.ramification(), w3.break_i()), (Ramification::Wild, 3));
        assert_eq!(w3.valuation_l(w3.pi_l()).unwrap(), 1);
        assert_eq!(t.ord(2, w3.b().unwrap()).unwrap(), 3);

        let f = ext(&t, 2, ExtKind::ArtinSchreier, "t*u^-2", 2).unwrap();
        assert_eq!((f.ramification(), f.break_i()), (Ramification::Ferocious, 2));
        assert_eq!(t.ord(2, f.b().unwrap()).unwrap(), 2);
        // t^2 u^-2 = (t u^-1)^2 reduces to t u^-1, wild
        let r = ext(&t, 2, ExtKind::ArtinSchreier, "t^2*u^-2", 2).unwrap();
        assert_eq!((r.ramification(), r.break_i()), (Ramification::Wild, 1));

        let t4 = tower(2, 2, &["t", "u"], 10);
        let g = ext(&t4, 2, ExtKind::ArtinSchreier, "g + u", 2).unwrap();
        assert_eq!(g.ramification(), Ramification::Unramified);
        assert_eq!(g.residue().unwrap().level(), 1);
        assert_eq!(g.residue().unwrap().ramification(), Ramification::Unramified);
        let tr = ext(&t4, 2, ExtKind::ArtinSchreier, "t^-1 + u^3", 2).unwrap();
        assert_eq!(tr.ramification(), Ramification::Unramified);
        assert_eq!(tr.residue().unwrap().ramification(), Ramification::Wild);
        assert!(matches!(ext(&t, 2, ExtKind::ArtinSchreier, "u + t^2 + t", 2), Err(Error::TrivialExtension(_))));

        let k = ext(&t4, 2, ExtKind::Kummer, "u^4*t", 3).unwrap();
        assert_eq!(k.ramification(), Ramification::Tame);
        assert_eq!(k.valuation_l(k.pi_l()).unwrap(), 1);
        let ku = ext(&t4, 2, ExtKind::Kummer, "u^3*t^2", 3).unwrap();
        assert_eq!(ku.ramification(), Ramification::Unramified);
        assert_eq!(ku.residue().unwrap().ramification(), Ramification::Tame);
        assert!(matches!(ext(&t4, 2, ExtKind::Kummer, "u^3*g^3", 3), Err(Error::TrivialExtension(_))));
        assert!(matches!(ext(&t, 2, ExtKind::Kummer, "u", 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn norm_congruence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = Shape::new(0, 3, 3);
        for (p, f, a) in [(2, 1, "u^-1"), (3, 1, "t*u^-3"), (2, 2, "t*u^-2"), (3, 1, "t^-1*u^-1 + u^-3"), (2, 1, "t*u^-4 + u^-1")] {
            let t = tower(p, f, &["t", "u"], 10);
            let l = ext(&t, 2, ExtKind::ArtinSchreier, a, p).unwrap();
            assert!(matches!(l.ramification(), Ramification::Wild | Ramification::Ferocious));
            assert_eq!(apparent_order(l.b().unwrap()), l.break_i());
            for _ in 0..50 {
                let x = random_nonzero(&t, 2, shape, &mut rng);
                if t.ord(2, &x).unwrap() < 0 {
                    continue;
                }
                let rep = l.norm_congruence_check(&x).unwrap_or_else(|e| panic!("{a} x = {}: {e}", t.render(2, &x)));
                assert!(rep.holds, "{a} x = {}", t.render(2, &x));
            }
        }
    }

    #[test]
    fn ferocious_residue_data() {
        let t = tower(3, 1, &["t", "u"], 10);
        let l = ext(&t, 2, ExtKind::ArtinSchreier, "(t + t^2)*u^-3", 3).unwrap();
        let data = l.residue_extension_data().unwrap();
        assert!(data.inseparable);
        let c = data.norm_h_bar.clone().unwrap();
        let h = data.h.unwrap();
        let hp = l.pow_nonneg(&h, 3);
        let diff = l.sub(&hp, &l.from_base(t.lift(1, 2, c)));
        assert!(l.valuation_l(&diff).unwrap() > 0);
        assert_eq!(l.valuation_l(&h).unwrap(), 0);
    }
}
