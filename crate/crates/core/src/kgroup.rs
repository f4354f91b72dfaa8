//! Milnor K-groups `K_n(k)/ℓ` of tower levels, as formal symbol sums with a
//! computed normal form.
//!
//! For `ℓ = p` the normal form is the differential symbol
//! `{x_1, ..., x_n} ↦ dlog x_1 ∧ ... ∧ dlog x_n` in `Ω^n` (injective on
//! `K_n/p`). It is read modulo the working precision, so equality is
//! three-valued. For `ℓ ≠ p` principal units are ℓ-divisible and the class is
//! determined by its `gr_0` components, applied recursively down to F_q; the
//! normal form is then an exact coordinate vector over `Z/ℓ`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::extensions::{CyclicExt, LElement};
use crate::forms::{DiffForm, Forms};
use crate::gf::FFElem;
use crate::tower::{Elem, Tower, EXACT};

/// A formal sum of symbols: `(coefficient, entries)`.
pub type SymbolSum = Vec<(i64, Vec<Elem>)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Normal {
    /// `ℓ = p`: the class as a form in `Ω^n`.
    Form(DiffForm),
    /// `ℓ ≠ p`: coordinates of the iterated `gr_0` decomposition.
    Tame(Vec<u32>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equality {
    Equal,
    Different,
    /// Agree on everything computed; the difference could live beyond the
    /// given exponent of the outermost variable.
    Unresolved { beyond: i64 },
}

/// An element of `K_n(k)/ℓ` for `k` a level of a tower.
#[derive(Clone)]
pub struct KClass {
    tower: Arc<Tower>,
    level: usize,
    degree: usize,
    ell: u32,
    terms: SymbolSum,
    normal: OnceLock<std::result::Result<Normal, Error>>,
}

impl fmt::Debug for KClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KClass[K_{}/{} at level {}]({})", self.degree, self.ell, self.level, self.render())
    }
}

fn check_ell(tower: &Tower, ell: u32) -> Result<()> {
    if !crate::gf::is_prime(ell) {
        return Err(Error::InvalidConfig(format!("ℓ = {ell} is not prime")));
    }
    if ell != tower.p() && ell > 97 {
        return Err(Error::Unsupported(format!("ℓ = {ell} is too large")));
    }
    Ok(())
}

impl KClass {
    pub fn zero(tower: &Arc<Tower>, level: usize, degree: usize, ell: u32) -> Result<Self> {
        check_ell(tower, ell)?;
        if level > tower.depth() {
            return Err(Error::InvalidConfig(format!("level {level} exceeds the tower depth")));
        }
        Ok(KClass { tower: tower.clone(), level, degree, ell, terms: vec![], normal: OnceLock::new() })
    }

    /// `{e_1, ..., e_n}`.
    pub fn symbol(tower: &Arc<Tower>, level: usize, ell: u32, entries: Vec<Elem>) -> Result<Self> {
        Self::from_terms(tower, level, entries.len(), ell, vec![(1, entries)])
    }

    pub fn from_terms(tower: &Arc<Tower>, level: usize, degree: usize, ell: u32, terms: SymbolSum) -> Result<Self> {
        let mut out = Self::zero(tower, level, degree, ell)?;
        for (c, entries) in terms {
            if entries.len() != degree {
                return Err(Error::Mismatch(format!("symbol of length {} in K_{degree}", entries.len())));
            }
            if entries.iter().any(|e| !e.is_certain_nonzero()) {
                return Err(Error::ZeroInput);
            }
            out.push(c, entries);
        }
        Ok(out)
    }

    fn push(&mut self, c: i64, entries: Vec<Elem>) {
        let c = c.rem_euclid(self.ell as i64);
        if c != 0 {
            self.terms.push((c, entries));
        }
    }

    pub fn tower(&self) -> &Arc<Tower> {
        &self.tower
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
    pub fn terms(&self) -> &SymbolSum {
        &self.terms
    }

    fn compatible(&self, other: &KClass) -> Result<()> {
        if !Arc::ptr_eq(&self.tower, &other.tower)
            || self.level != other.level
            || self.degree != other.degree
            || self.ell != other.ell
        {
            return Err(Error::Mismatch("classes live in different groups".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &KClass) -> Result<KClass> {
        self.compatible(other)?;
        let mut out = KClass { normal: OnceLock::new(), ..self.clone() };
        for (c, e) in &other.terms {
            out.push(*c, e.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, n: i64) -> KClass {
        let mut out = KClass { terms: vec![], normal: OnceLock::new(), ..self.clone() };
        for (c, e) in &self.terms {
            out.push(c * n, e.clone());
        }
        out
    }

    pub fn neg(&self) -> KClass {
        self.scale(-1)
    }

    pub fn sub(&self, other: &KClass) -> Result<KClass> {
        self.add(&other.neg())
    }

    /// Appends `{x}` on the right: `ξ ∪ {x}`.
    pub fn cup_right(&self, x: &Elem) -> Result<KClass> {
        let terms = self
            .terms
            .iter()
            .map(|(c, e)| {
                let mut e = e.clone();
                e.push(x.clone());
                (*c, e)
            })
            .collect();
        Self::from_terms(&self.tower, self.level, self.degree + 1, self.ell, terms)
    }

    /// Prepends `{x}` on the left: `{x} ∪ ξ`.
    pub fn cup_left(&self, x: &Elem) -> Result<KClass> {
        let terms = self
            .terms
            .iter()
            .map(|(c, e)| {
                let mut v = vec![x.clone()];
                v.extend(e.iter().cloned());
                (*c, v)
            })
            .collect();
        Self::from_terms(&self.tower, self.level, self.degree + 1, self.ell, terms)
    }

    /// Reads the class at a higher level through the constant embedding.
    pub fn lift(&self, to: usize) -> Result<KClass> {
        let terms = self
            .terms
            .iter()
            .map(|(c, e)| (*c, e.iter().map(|x| self.tower.lift(self.level, to, x.clone())).collect()))
            .collect();
        Self::from_terms(&self.tower, to, self.degree, self.ell, terms)
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, e)| {
                let body: Vec<String> = e.iter().map(|x| self.tower.render(self.level, x)).collect();
                let sym = format!("{{{}}}", body.join(", "));
                if *c == 1 {
                    sym
                } else {
                    format!("{c}*{sym}")
                }
            })
            .collect();
        parts.join(" + ")
    }

    // ----- normal forms -------------------------------------------------

    pub fn normal_form(&self) -> Result<&Normal> {
        self.normal
            .get_or_init(|| self.compute_normal())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn compute_normal(&self) -> Result<Normal> {
        if self.ell == self.tower.p() {
            let fm = Forms::new(&self.tower, self.level);
            let mut acc = fm.zero(self.degree);
            if self.degree > self.level {
                return Ok(Normal::Form(acc));
            }
            for (c, e) in &self.terms {
                let w = fm.dlog_wedge(e)?;
                acc = fm.add(&acc, &fm.scale_int(*c, &w))?;
            }
            Ok(Normal::Form(acc))
        } else {
            let ell = self.ell as i64;
            let v = tame_coords(&self.tower, self.level, self.degree, self.ell, &self.terms)?;
            Ok(Normal::Tame(v.into_iter().map(|x| x.rem_euclid(ell) as u32).collect()))
        }
    }

    /// The differential form of the class (`ℓ = p` only).
    pub fn form(&self) -> Result<&DiffForm> {
        match self.normal_form()? {
            Normal::Form(f) => Ok(f),
            Normal::Tame(_) => Err(Error::Unsupported("differential symbol needs ℓ = p".into())),
        }
    }

    /// Tame coordinates (`ℓ ≠ p` only).
    pub fn coordinates(&self) -> Result<&[u32]> {
        match self.normal_form()? {
            Normal::Tame(v) => Ok(v),
            Normal::Form(_) => Err(Error::Unsupported("tame coordinates need ℓ ≠ p".into())),
        }
    }

    pub fn compare(&self, other: &KClass) -> Result<Equality> {
        self.compatible(other)?;
        match (self.normal_form()?, other.normal_form()?) {
            (Normal::Tame(a), Normal::Tame(b)) => Ok(if a == b { Equality::Equal } else { Equality::Different }),
            (Normal::Form(a), Normal::Form(b)) => {
                let fm = Forms::new(&self.tower, self.level);
                Ok(form_zero_status(&fm.sub(a, b)?))
            }
            _ => unreachable!(),
        }
    }

    pub fn is_zero(&self) -> Result<Equality> {
        self.compare(&self.scale(0))
    }

    // ----- gr_0 --------------------------------------------------------

    /// The two components of the class in `gr_0 = K_n(F) ⊕ K_{n-1}(F)`,
    /// using `ξ = i(A) + {π} ∪ i(B)` with `π` the outermost variable.
    pub fn tame_boundary(&self) -> Result<(KClass, KClass)> {
        if self.level == 0 {
            return Err(Error::Unsupported("the residue map needs a valued field".into()));
        }
        let (a, b) = boundary_terms(&self.tower, self.level, &self.terms)?;
        if self.degree == 0 {
            return Err(Error::Unsupported("K_0 has no boundary component".into()));
        }
        Ok((
            KClass::from_terms(&self.tower, self.level - 1, self.degree, self.ell, a)?,
            KClass::from_terms(&self.tower, self.level - 1, self.degree - 1, self.ell, b)?,
        ))
    }

    // ----- U-filtration (ℓ = p) ------------------------------------------

    /// The form representative of `ξ ∈ U_m` in `gr_m`, `m ≥ 1`.
    pub fn graded_expand(&self, m: i64) -> Result<GradedRep> {
        if m < 1 {
            return Err(Error::Unsupported("use tame_boundary for gr_0".into()));
        }
        if self.level == 0 || self.ell != self.tower.p() {
            return Err(Error::Unsupported("graded pieces need ℓ = p over a valued field".into()));
        }
        let k = self.level;
        let n = self.degree;
        let tower = &self.tower;
        let form = self.form()?;
        let lower = Forms::new(tower, k - 1);
        for (key, c) in form.terms() {
            for j in 0..m {
                let cj = tower.coeff(k, c, j)?;
                if !cj.is_zero_to_precision() {
                    return Err(Error::NotInFiltration { level: m });
                }
            }
            let _ = key;
        }
        // u^m part: dlog u ∧ A + B
        let mut a = lower.zero(n.saturating_sub(1));
        for (key, c) in form.terms() {
            let cm = tower.coeff(k, c, m)?;
            if key.last() == Some(&k) {
                let rest = &key[..key.len() - 1];
                let sign = if (n - 1) % 2 == 1 { -1 } else { 1 };
                a = lower.add(&a, &lower.monomial(tower.scale_int(k - 1, &cm, sign), rest))?;
            }
        }
        let p = tower.p() as i64;
        if m % p != 0 {
            let minv = tower.fq().inv(tower.fq().from_int(m))?;
            let main = lower.scale(&tower.constant(k - 1, minv), &a);
            let aux = (n >= 2).then(|| lower.zero(n - 2));
            Ok(GradedRep { m, main, aux })
        } else {
            let aux = if a.is_zero_to_precision() {
                (n >= 2).then(|| lower.zero(n - 2))
            } else if n == 2 && k == 2 {
                let x = lower.integrate(&a)?;
                let x = if (n - 1) % 2 == 1 { tower.neg(k - 1, &x) } else { x };
                Some(lower.function(x))
            } else {
                return Err(Error::Unsupported("integration of this graded piece".into()));
            };
            Ok(GradedRep { m, main: lower.zero(n.saturating_sub(1)), aux })
        }
    }

    /// The symbols `{1 + π^m x̃, ỹ...}` (main part) and `{1 + π^m x̃, ỹ..., π}`
    /// (auxiliary part) representing a graded piece.
    pub fn symbol_from_form(tower: &Arc<Tower>, level: usize, rep: &GradedRep) -> Result<KClass> {
        let k = level;
        let n = rep.main.degree() + 1;
        let p = tower.p();
        let mut out = KClass::zero(tower, k, n, p)?;
        let pi = tower.var(k, k);
        let principal = |c: &Elem| {
            let lifted = tower.lift(k - 1, k, c.clone());
            tower.add(k, &tower.one(k), &tower.shift(k, &lifted, rep.m))
        };
        for (key, c) in rep.main.terms() {
            if c.is_zero_to_precision() {
                continue;
            }
            let mut entries = vec![principal(c)];
            entries.extend(key.iter().map(|&j| tower.var(k, j)));
            out.push(1, entries);
        }
        if let Some(aux) = &rep.aux {
            for (key, c) in aux.terms() {
                if c.is_zero_to_precision() {
                    continue;
                }
                let mut entries = vec![principal(c)];
                entries.extend(key.iter().map(|&j| tower.var(k, j)));
                entries.push(pi.clone());
                out.push(1, entries);
            }
        }
        Ok(out)
    }
}

fn form_zero_status(diff: &DiffForm) -> Equality {
    if !diff.is_zero_to_precision() {
        return Equality::Different;
    }
    let beyond = diff.terms().values().map(Elem::known_to).min().unwrap_or(EXACT);
    if diff.terms().values().all(Elem::is_exact) {
        Equality::Equal
    } else {
        Equality::Unresolved { beyond }
    }
}

/// Representative of a class in `gr_m K_n` (`m ≥ 1`): a main part in
/// `Ω^{n-1}_F` and, for `n ≥ 2`, an auxiliary part in `Ω^{n-2}_F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedRep {
    pub m: i64,
    pub main: DiffForm,
    pub aux: Option<DiffForm>,
}

/// Splits each symbol by the outermost valuation of its entries.
/// `x_i = π^{m_i} c_i w_i`; the principal units `w_i` are dropped, and
/// repeated `π` entries are collapsed with `{π, π} = {π, -1}`.
fn boundary_terms(tower: &Tower, k: usize, terms: &SymbolSum) -> Result<(SymbolSum, SymbolSum)> {
    let minus_one = tower.from_int(k - 1, -1);
    let mut a = SymbolSum::new();
    let mut b = SymbolSum::new();
    for (coef, entries) in terms {
        let n = entries.len();
        let mut parts = Vec::with_capacity(n);
        for x in entries {
            parts.push(tower.leading(k, x)?);
        }
        for mask in 0u32..(1 << n) {
            let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if chosen.iter().any(|&i| parts[i].0 == 0) {
                continue;
            }
            let mult: i64 = chosen.iter().map(|&i| parts[i].0).product();
            let others: Vec<Elem> =
                (0..n).filter(|i| mask & (1 << i) == 0).map(|i| parts[i].1.clone()).collect();
            let one = tower.one(k - 1);
            if others.contains(&one) {
                continue;
            }
            if chosen.is_empty() {
                a.push((coef * mult, others));
                continue;
            }
            let s = chosen.len();
            let moves: usize = chosen.iter().enumerate().map(|(idx, &pos)| pos - idx).sum();
            let collapse = ((s - 1) * s.saturating_sub(2) / 2) % 2;
            let sign = if (moves + collapse) % 2 == 1 { -1 } else { 1 };
            let mut rest = vec![minus_one.clone(); s - 1];
            rest.extend(others);
            b.push((sign * coef * mult, rest));
        }
    }
    Ok((a, b))
}

/// Dimension of `K_n(level k)/ℓ` over `Z/ℓ` for `ℓ ≠ p`.
pub fn tame_dim(tower: &Tower, k: usize, n: usize, ell: u32) -> usize {
    if k == 0 {
        return match n {
            0 => 1,
            1 => usize::from((tower.fq().order() - 1) % ell == 0),
            _ => 0,
        };
    }
    tame_dim(tower, k - 1, n, ell) + if n >= 1 { tame_dim(tower, k - 1, n - 1, ell) } else { 0 }
}

/// Coordinates of a symbol sum in `K_n(level k)/ℓ`, `ℓ ≠ p`: the `K_n(F)`
/// block followed by the `K_{n-1}(F)` block, recursively.
fn tame_coords(tower: &Tower, k: usize, n: usize, ell: u32, terms: &SymbolSum) -> Result<Vec<i64>> {
    if k == 0 {
        return Ok(match n {
            0 => vec![terms.iter().map(|(c, _)| *c).sum()],
            1 if (tower.fq().order() - 1) % ell == 0 => {
                let mut acc = 0i64;
                for (c, e) in terms {
                    let Elem::Const(x) = e[0] else { unreachable!() };
                    acc += c * tower.fq().dlog(x)? as i64;
                }
                vec![acc.rem_euclid(ell as i64)]
            }
            _ => vec![],
        });
    }
    let (a, b) = boundary_terms(tower, k, terms)?;
    let mut out = tame_coords(tower, k - 1, n, ell, &a)?;
    if n >= 1 {
        out.extend(tame_coords(tower, k - 1, n - 1, ell, &b)?);
    }
    Ok(out.into_iter().map(|x| x.rem_euclid(ell as i64)).collect())
}

// ----- p-divisibility of K_2(F_q((t))) -----------------------------------

/// Outcome of rewriting one symbol `{a, b}` of `K_2(F_q((t)))` into
/// explicit p-th multiples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Divisibility {
    /// Every piece up to `U_{M+1}` was rewritten as a p-th multiple.
    Reduced { leaves: usize, tail: usize },
    Inconclusive(String),
    Failed(String),
}

/// Factor of an element of `F_q((t))^*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Factor {
    T(i64),
    Const(FFElem),
    /// `1 + α t^j`.
    Principal(i64, FFElem),
}

struct Rewriter<'a> {
    tower: &'a Tower,
    bound: i64,
    leaves: usize,
    tail: usize,
    memo: HashMap<(i64, FFElem, i64, FFElem), ()>,
}

impl Rewriter<'_> {
    fn fq(&self) -> &crate::gf::GaloisField {
        self.tower.fq()
    }

    /// `c = (c^{1/p})^p`, checked.
    fn const_leaf(&mut self, c: FFElem) -> Result<()> {
        let r = self.fq().pth_root(c);
        if self.fq().frobenius(r) != c {
            return Err(Error::Inconsistent("p-th root in F_q".into()));
        }
        self.leaves += 1;
        Ok(())
    }

    /// `{1 + α t^j, t}`.
    fn principal_t(&mut self, j: i64, alpha: FFElem) -> Result<()> {
        let p = self.tower.p() as i64;
        if j % p == 0 {
            // 1 + α t^j = (1 + α^{1/p} t^{j/p})^p
            let t = self.tower;
            let root = t.add(1, &t.one(1), &t.monomial(&[j / p], self.fq().pth_root(alpha)));
            let lhs = t.add(1, &t.one(1), &t.monomial(&[j], alpha));
            if t.pow(1, &root, p)? != lhs {
                return Err(Error::Inconsistent("p-th power of a principal unit".into()));
            }
            self.leaves += 1;
            Ok(())
        } else {
            // j{1+αt^j, t} = -{1+αt^j, -α} from {1+αt^j, -αt^j} = 0
            self.const_leaf(self.fq().neg(alpha))
        }
    }

    /// `{1 + α t^i, 1 + β t^j}` via
    /// `{1-x, 1-y} = {1-xy, -x} + {1-xy, 1-y} - {1-xy, 1-x}`.
    fn principal_pair(&mut self, i: i64, alpha: FFElem, j: i64, beta: FFElem) -> Result<()> {
        if i + j > self.bound {
            self.tail += 1;
            return Ok(());
        }
        if self.memo.contains_key(&(i, alpha, j, beta)) {
            self.leaves += 1;
            return Ok(());
        }
        // x = -α t^i, y = -β t^j, 1 - xy = 1 - αβ t^{i+j}
        let gamma = self.fq().neg(self.fq().mul(alpha, beta));
        let k = i + j;
        // {1-xy, -x} = {1-xy, α} + i{1-xy, t}
        self.const_leaf(alpha)?;
        self.principal_t(k, gamma)?;
        self.principal_pair(k, gamma, j, beta)?;
        self.principal_pair(k, gamma, i, alpha)?;
        self.memo.insert((i, alpha, j, beta), ());
        Ok(())
    }

    fn pair(&mut self, a: Factor, b: Factor) -> Result<()> {
        use Factor::*;
        match (a, b) {
            (Const(c), _) | (_, Const(c)) => self.const_leaf(c),
            // {t, t} = {t, -1}
            (T(_), T(_)) => self.const_leaf(self.fq().from_int(-1)),
            (T(_), Principal(j, al)) | (Principal(j, al), T(_)) => self.principal_t(j, al),
            (Principal(i, al), Principal(j, be)) => self.principal_pair(i, al, j, be),
        }
    }

    /// `a = t^m · c · Π_{j ≤ M} (1 + α_j t^j) · (1 + O(t^{M+1}))`.
    fn factor(&self, a: &Elem) -> Result<Vec<Factor>> {
        let t = self.tower;
        let (m, c, mut w) = t.unit_decompose(1, a)?;
        let Elem::Const(c) = c else { unreachable!() };
        let mut out = vec![Factor::T(m), Factor::Const(c)];
        for j in 1..=self.bound {
            let Elem::Const(alpha) = t.coeff(1, &w, j)? else { unreachable!() };
            if alpha.is_zero() {
                continue;
            }
            let f = t.add(1, &t.one(1), &t.monomial(&[j], alpha));
            w = t.div(1, &w, &f)?;
            out.push(Factor::Principal(j, alpha));
        }
        for j in 1..=self.bound {
            if !t.coeff(1, &w, j)?.is_zero_to_precision() {
                return Err(Error::Inconsistent("principal unit factorization".into()));
            }
        }
        Ok(out)
    }
}

/// Rewrites `{a, b} ∈ K_2(F_q((t)))/p` into explicit p-th multiples up to
/// `U_{M+1}`, where `F_q((t))` is level 1 of `tower`.
pub fn p_divisibility_of(tower: &Tower, a: &Elem, b: &Elem, bound: i64) -> Divisibility {
    let mut rw = Rewriter { tower, bound, leaves: 0, tail: 0, memo: HashMap::new() };
    let run = |rw: &mut Rewriter| -> Result<()> {
        let fa = rw.factor(a)?;
        let fb = rw.factor(b)?;
        for x in &fa {
            for y in &fb {
                rw.pair(*x, *y)?;
            }
        }
        Ok(())
    };
    match run(&mut rw) {
        Ok(()) => Divisibility::Reduced { leaves: rw.leaves, tail: rw.tail },
        Err(e) if e.is_refusal() => Divisibility::Inconclusive(e.to_string()),
        Err(e) => Divisibility::Failed(e.to_string()),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DivisibilityReport {
    pub samples: usize,
    pub reduced: usize,
    pub inconclusive: usize,
    pub failures: Vec<String>,
}

/// Samples `samples` random symbols `{a, b}` over level 1 of `tower` and
/// rewrites each into p-th multiples up to `U_{bound+1}`.
pub fn p_divisibility_check<R: rand::Rng>(tower: &Tower, samples: usize, bound: i64, rng: &mut R) -> DivisibilityReport {
    use crate::sample::{random_nonzero, Shape};
    let shape = Shape::new(-3, 4, 3);
    let mut report = DivisibilityReport { samples, ..Default::default() };
    for _ in 0..samples {
        let a = random_nonzero(tower, 1, shape, rng);
        let b = random_nonzero(tower, 1, shape, rng);
        match p_divisibility_of(tower, &a, &b, bound) {
            Divisibility::Reduced { .. } => report.reduced += 1,
            Divisibility::Inconclusive(_) => report.inconclusive += 1,
            Divisibility::Failed(msg) => report.failures.push(format!(
                "{{{}, {}}}: {msg}",
                tower.render(1, &a),
                tower.render(1, &b)
            )),
        }
    }
    report
}

/// A generator of `K_n(L)/ℓ` for a cyclic extension `L/K`.
#[derive(Clone, Debug)]
pub enum LGenerator {
    /// `{x_1, ..., x_n}`; at most one entry may lie outside `K`.
    Plain(Vec<LElement>),
    /// `{1 + π_L^m x, π_L, r_1, ..., r_s}` with `x, r_i ∈ K`.
    PrincipalPi { m: i64, x: Elem, rest: Vec<Elem> },
}

/// A formal sum of generators of `K_n(L)/ℓ`.
#[derive(Clone, Debug, Default)]
pub struct LClass {
    pub terms: Vec<(i64, LGenerator)>,
}

/// The norm `K_n(L)/ℓ → K_n(K)/ℓ`.
///
/// Generators with one entry outside `K` use the projection formula. For
/// `{1 + z, π_L, r}` with `z = π_L^m x` the relation `{1 + z, -z} = 0` gives
/// `{1 + z, π_L} = -m^{-1} {1 + z, -x}` when `ℓ ∤ m`.
pub fn k_norm(ext: &CyclicExt, class: &LClass, degree: usize) -> Result<KClass> {
    let tower = ext.tower();
    let k = ext.level();
    let ell = ext.ell() as i64;
    let mut out = KClass::zero(tower, k, degree, ext.ell())?;
    for (c, gen) in &class.terms {
        let (coef, entries) = match gen {
            LGenerator::Plain(xs) => {
                let outside: Vec<usize> = (0..xs.len()).filter(|&i| xs[i].in_base().is_none()).collect();
                if outside.len() > 1 {
                    return Err(Error::TwoLEntries(format!("{} entries outside the base", outside.len())));
                }
                let slot = outside.first().copied().unwrap_or(0);
                let mut entries = Vec::with_capacity(xs.len());
                for (i, x) in xs.iter().enumerate() {
                    if i == slot {
                        entries.push(ext.field_norm(x)?);
                    } else {
                        entries.push(x.in_base().unwrap().clone());
                    }
                }
                (*c, entries)
            }
            LGenerator::PrincipalPi { m, x, rest } => {
                if m.rem_euclid(ell) == 0 {
                    return Err(Error::TwoLEntries(format!("{{1 + π_L^{m} x, π_L}} with ℓ | {m}")));
                }
                if *m < 1 {
                    return Err(Error::Unsupported("principal generator needs m ≥ 1".into()));
                }
                let z = ext.mul(&ext.pow_nonneg(ext.pi_l(), *m as u64), &ext.from_base(x.clone()));
                let mut entries = vec![ext.field_norm(&ext.add(&ext.one(), &z))?, tower.neg(k, x)];
                entries.extend(rest.iter().cloned());
                let minv = (1..ell).find(|i| (i * m).rem_euclid(ell) == 1).unwrap();
                (-c * minv, entries)
            }
        };
        let term = KClass::from_terms(tower, k, degree, ext.ell(), vec![(coef, entries)])?;
        out = out.add(&term)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_elem;
    use crate::sample::{random_nonzero, random_unit, Shape};
    use crate::tower::FieldConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tower(p: u32, f: u32, vars: &[&str], prec: i64) -> Arc<Tower> {
        Tower::new(FieldConfig::new(p, f, vars, prec)).unwrap()
    }

    fn sym(t: &Arc<Tower>, level: usize, ell: u32, src: &[&str]) -> KClass {
        let e = src.iter().map(|s| parse_elem(t, level, s).unwrap()).collect();
        KClass::symbol(t, level, ell, e).unwrap()
    }

    fn not_different(x: &KClass, y: &KClass) -> bool {
        x.compare(y).unwrap() != Equality::Different
    }

    #[test]
    fn steinberg_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shape = Shape::new(-2, 3, 3);
        for (p, f, ell) in [(2, 1, 2), (3, 1, 3), (2, 2, 3)] {
            let t = tower(p, f, &["t", "u"], 10);
            for _ in 0..60 {
                let a = random_nonzero(&t, 2, shape, &mut rng);
                let one_minus = t.sub(2, &t.one(2), &a);
                if !one_minus.is_certain_nonzero() {
                    continue;
                }
                let s = KClass::symbol(&t, 2, ell, vec![a, one_minus]).unwrap();
                assert!(s.is_zero().unwrap() != Equality::Different, "{s:?}");
            }
        }
    }

    #[test]
    fn repeated_entry_and_bilinearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let shape = Shape::new(-2, 3, 3);
        for (p, f, ell) in [(2, 1, 2), (3, 1, 3), (2, 2, 3), (3, 2, 2)] {
            let t = tower(p, f, &["t", "u"], 10);
            let m1 = t.from_int(2, -1);
            for _ in 0..30 {
                let a = random_nonzero(&t, 2, shape, &mut rng);
                let b = random_nonzero(&t, 2, shape, &mut rng);
                let c = random_nonzero(&t, 2, shape, &mut rng);
                let aa = KClass::symbol(&t, 2, ell, vec![a.clone(), a.clone()]).unwrap();
                let am = KClass::symbol(&t, 2, ell, vec![a.clone(), m1.clone()]).unwrap();
                assert!(not_different(&aa, &am));
                let ab_c = KClass::symbol(&t, 2, ell, vec![t.mul(2, &a, &b), c.clone()]).unwrap();
                let split = KClass::symbol(&t, 2, ell, vec![a.clone(), c.clone()])
                    .unwrap()
                    .add(&KClass::symbol(&t, 2, ell, vec![b.clone(), c.clone()]).unwrap())
                    .unwrap();
                assert!(not_different(&ab_c, &split));
                let ba = KClass::symbol(&t, 2, ell, vec![b.clone(), a.clone()]).unwrap();
                let ab = KClass::symbol(&t, 2, ell, vec![a.clone(), b.clone()]).unwrap();
                assert!(not_different(&ab, &ba.neg()));
            }
        }
        // {a, a} = 0 for p = ℓ = 2
        let t = tower(2, 1, &["t", "u"], 10);
        let x = sym(&t, 2, 2, &["t + u", "t + u"]);
        assert_ne!(x.is_zero().unwrap(), Equality::Different);
    }

    #[test]
    fn nonzero_classes_are_detected() {
        let t = tower(2, 1, &["t", "u"], 10);
        assert_eq!(sym(&t, 2, 2, &["t", "u"]).is_zero().unwrap(), Equality::Different);
        assert_eq!(sym(&t, 2, 2, &["u", "u"]).is_zero().unwrap(), Equality::Equal);
        assert_eq!(sym(&t, 2, 2, &["1+u", "t"]).is_zero().unwrap(), Equality::Different);
        let t4 = tower(2, 2, &["t", "u"], 10);
        assert_eq!(sym(&t4, 2, 3, &["g", "u"]).is_zero().unwrap(), Equality::Different);
        assert_eq!(sym(&t4, 2, 3, &["g", "g^2"]).is_zero().unwrap(), Equality::Equal);
        assert_eq!(sym(&t4, 2, 3, &["1+u", "t"]).is_zero().unwrap(), Equality::Equal);
        assert_eq!(tame_dim(&t4, 2, 2, 3), 3);
        assert_eq!(tame_dim(&t, 2, 2, 3), 1);
    }

    #[test]
    fn boundary_examples() {
        let t = tower(2, 2, &["t", "u"], 10);
        let (a, b) = sym(&t, 2, 3, &["u", "t"]).tame_boundary().unwrap();
        assert_eq!(a.is_zero().unwrap(), Equality::Equal);
        assert_eq!(b.compare(&sym(&t, 1, 3, &["t"])).unwrap(), Equality::Equal);
        let (a, b) = sym(&t, 2, 3, &["g", "t"]).tame_boundary().unwrap();
        assert_eq!(a.compare(&sym(&t, 1, 3, &["g", "t"])).unwrap(), Equality::Equal);
        assert_eq!(b.is_zero().unwrap(), Equality::Equal);
        let (a, b) = sym(&t, 2, 3, &["1 + u*t", "t + u"]).tame_boundary().unwrap();
        assert_eq!(a.is_zero().unwrap(), Equality::Equal);
        assert_eq!(b.is_zero().unwrap(), Equality::Equal);
        // ℓ = p: gr_0 of a principal unit symbol vanishes as well
        let (a, b) = sym(&t, 2, 2, &["1 + u", "t"]).tame_boundary().unwrap();
        assert!(a.terms().is_empty() && b.terms().is_empty());
    }

    #[test]
    fn gr0_splitting_on_generators() {
        // (A, B) ↦ i(A) + {u} ∪ i(B) ↦ tame_boundary recovers (A, B)
        let t = tower(2, 2, &["t", "u"], 10);
        let ell = 3;
        let g = t.constant(1, t.fq().generator());
        let tv = t.var(1, 1);
        let gens2 = [vec![g.clone(), tv.clone()]];
        let gens1 = [vec![g.clone()], vec![tv.clone()]];
        let u = t.var(2, 2);
        for ca in 0..3i64 {
            for cb0 in 0..3i64 {
                for cb1 in 0..3i64 {
                    let a = KClass::from_terms(&t, 1, 2, ell, vec![(ca, gens2[0].clone())]).unwrap();
                    let b = KClass::from_terms(&t, 1, 1, ell, vec![(cb0, gens1[0].clone()), (cb1, gens1[1].clone())])
                        .unwrap();
                    let xi = a.lift(2).unwrap().add(&b.lift(2).unwrap().cup_left(&u).unwrap()).unwrap();
                    let (ra, rb) = xi.tame_boundary().unwrap();
                    assert_eq!(ra.compare(&a).unwrap(), Equality::Equal);
                    assert_eq!(rb.compare(&b).unwrap(), Equality::Equal);
                }
            }
        }
    }

    #[test]
    fn boundary_is_additive() {
        let t = tower(3, 2, &["t", "u"], 10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = Shape::new(-2, 2, 2);
        for _ in 0..30 {
            let x = KClass::symbol(&t, 2, 2, vec![random_nonzero(&t, 2, shape, &mut rng), random_nonzero(&t, 2, shape, &mut rng)]).unwrap();
            let y = KClass::symbol(&t, 2, 2, vec![random_nonzero(&t, 2, shape, &mut rng), random_nonzero(&t, 2, shape, &mut rng)]).unwrap();
            let (xa, xb) = x.tame_boundary().unwrap();
            let (ya, yb) = y.tame_boundary().unwrap();
            let (sa, sb) = x.add(&y).unwrap().tame_boundary().unwrap();
            assert_eq!(sa.compare(&xa.add(&ya).unwrap()).unwrap(), Equality::Equal);
            assert_eq!(sb.compare(&xb.add(&yb).unwrap()).unwrap(), Equality::Equal);
        }
    }

    #[test]
    fn graded_pieces() {
        let t = tower(2, 1, &["t", "u"], 12);
        let fm1 = Forms::new(&t, 1);
        for m in [1i64, 3, 5] {
            let xi = sym(&t, 2, 2, &[&format!("1 + (t+t^2)*u^{m}"), "t"]);
            let rep = xi.graded_expand(m).unwrap();
            let want = fm1.monomial(parse_elem(&t, 1, "t + t^2").unwrap(), &[1]);
            assert!(fm1.sub(&rep.main, &want).unwrap().is_zero_to_precision(), "m = {m}");
            assert!(matches!(xi.graded_expand(m + 1), Err(Error::NotInFiltration { .. })));
        }
        // p | m: only the auxiliary part survives
        let xi = sym(&t, 2, 2, &["1 + t*u^2", "u"]);
        let rep = xi.graded_expand(2).unwrap();
        assert!(rep.main.is_zero_to_precision());
        let aux = rep.aux.clone().unwrap();
        let want = Forms::new(&t, 1).function(t.var(1, 1));
        assert!(fm1.sub(&aux, &want).unwrap().is_zero_to_precision());
        let back = KClass::symbol_from_form(&t, 2, &rep).unwrap();
        let diff = back.sub(&xi).unwrap();
        assert!(diff.graded_expand(3).is_ok());
    }

    #[test]
    fn graded_round_trip_and_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [2u32, 3] {
            let t = tower(p, 1, &["t", "u"], 14);
            let shape = Shape::new(-2, 3, 3);
            for _ in 0..25 {
                let m = rng.gen_range(1..=5i64);
                let mk = |rng: &mut ChaCha8Rng| {
                    let x = random_unit(&t, 1, shape, rng);
                    let w = t.add(2, &t.one(2), &t.shift(2, &t.lift(1, 2, x), m));
                    let y = if rng.gen_bool(0.5) { t.var(2, 2) } else { random_nonzero(&t, 2, shape, rng) };
                    KClass::symbol(&t, 2, p, vec![w, y]).unwrap()
                };
                let xi = mk(&mut rng);
                let eta = mk(&mut rng);
                let rep = xi.graded_expand(m).unwrap();
                let back = KClass::symbol_from_form(&t, 2, &rep).unwrap();
                assert!(back.sub(&xi).unwrap().graded_expand(m + 1).is_ok(), "p={p} m={m}");
                let sum = xi.add(&eta).unwrap().graded_expand(m).unwrap();
                let re = eta.graded_expand(m).unwrap();
                let fm1 = Forms::new(&t, 1);
                let main = fm1.add(&rep.main, &re.main).unwrap();
                assert!(fm1.sub(&sum.main, &main).unwrap().is_zero_to_precision());
            }
        }
    }

    #[test]
    fn p_divisibility() {
        let t = tower(2, 1, &["t"], 16);
        let a = parse_elem(&t, 1, "t").unwrap();
        let b = parse_elem(&t, 1, "1+t").unwrap();
        assert!(matches!(p_divisibility_of(&t, &a, &b, 10), Divisibility::Reduced { .. }));
        let t3 = tower(3, 2, &["t"], 16);
        let c = t3.constant(1, FFElem(5));
        let tv = t3.var(1, 1);
        assert!(matches!(p_divisibility_of(&t3, &c, &tv, 10), Divisibility::Reduced { .. }));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = p_divisibility_check(&t, 100, 10, &mut rng);
        assert_eq!(rep.reduced, 100, "{rep:?}");
    }

    #[test]
    fn norm_projection_formula() {
        use crate::extensions::ExtKind;
        let t = tower(2, 2, &["t", "u"], 10);
        let a = parse_elem(&t, 2, "t*u^-1").unwrap();
        let l = CyclicExt::classify(&t, 2, ExtKind::ArtinSchreier, a.clone(), 2).unwrap();
        let b = parse_elem(&t, 2, "1 + t*u").unwrap();
        let gen = LGenerator::Plain(vec![l.y(), l.from_base(b.clone())]);
        let n = k_norm(&l, &LClass { terms: vec![(1, gen)] }, 2).unwrap();
        let want = KClass::symbol(&t, 2, 2, vec![a, b.clone()]).unwrap();
        assert_ne!(n.compare(&want).unwrap(), Equality::Different);

        let base = LGenerator::Plain(vec![l.from_base(b.clone()), l.from_base(t.var(2, 1))]);
        let n = k_norm(&l, &LClass { terms: vec![(1, base)] }, 2).unwrap();
        assert_eq!(n.is_zero().unwrap(), Equality::Equal);

        let two = LGenerator::Plain(vec![l.y(), l.y()]);
        assert!(matches!(k_norm(&l, &LClass { terms: vec![(1, two)] }, 2), Err(Error::TwoLEntries(_))));
        let even = LGenerator::PrincipalPi { m: 2, x: b.clone(), rest: vec![] };
        assert!(matches!(k_norm(&l, &LClass { terms: vec![(1, even)] }, 2), Err(Error::TwoLEntries(_))));
        let odd = LGenerator::PrincipalPi { m: 1, x: b, rest: vec![] };
        assert!(k_norm(&l, &LClass { terms: vec![(1, odd)] }, 2).is_ok());
    }
}
