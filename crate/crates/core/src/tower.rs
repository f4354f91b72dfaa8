//! Iterated truncated Laurent series `K = F_q((t_1))...((t_d))`.
//!
//! An element of level `k` is a series in `t_k` whose coefficients are
//! elements of level `k - 1`; level 0 is F_q itself. Every series carries a
//! bound `known_to`: the terms with exponent below it are exact and nothing
//! is known at or above it (`O(t_k^known_to)`). Coefficients carry their own
//! bounds, so an outer coefficient may be an "uncertain zero" (no known
//! terms, finite bound). [`EXACT`] marks an exact element.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf::{FFElem, GaloisField};
use crate::ring::Ring;

/// Bound value meaning "exact, no truncation".
pub const EXACT: i64 = i64::MAX;

/// An element of some level of a [`Tower`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Elem {
    Const(FFElem),
    Series(Series),
}

/// A truncated Laurent series; terms sorted by exponent, none exactly zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Series {
    terms: Vec<(i64, Elem)>,
    known_to: i64,
}

impl Series {
    pub fn terms(&self) -> &[(i64, Elem)] {
        &self.terms
    }
    pub fn known_to(&self) -> i64 {
        self.known_to
    }
}

impl Elem {
    fn series(&self) -> &Series {
        match self {
            Elem::Series(s) => s,
            Elem::Const(_) => panic!("expected a series element, found a constant"),
        }
    }

    fn constant(&self) -> FFElem {
        match self {
            Elem::Const(c) => *c,
            Elem::Series(_) => panic!("expected a constant, found a series element"),
        }
    }

    /// The `O(t^n)` bound of the outermost series (`EXACT` for constants).
    pub fn known_to(&self) -> i64 {
        match self {
            Elem::Const(_) => EXACT,
            Elem::Series(s) => s.known_to,
        }
    }

    /// Exactly zero (not merely zero up to precision).
    pub fn is_exact_zero(&self) -> bool {
        match self {
            Elem::Const(c) => c.is_zero(),
            Elem::Series(s) => s.terms.is_empty() && s.known_to == EXACT,
        }
    }

    /// Nonzero with an exactly known leading term at every level.
    pub fn is_certain_nonzero(&self) -> bool {
        match self {
            Elem::Const(c) => !c.is_zero(),
            Elem::Series(s) => s.terms.first().is_some_and(|(_, c)| c.is_certain_nonzero()),
        }
    }

    /// True when the element has no known nonzero term (exact or uncertain zero).
    pub fn is_zero_to_precision(&self) -> bool {
        match self {
            Elem::Const(c) => c.is_zero(),
            Elem::Series(s) => s.terms.iter().all(|(_, c)| c.is_zero_to_precision()),
        }
    }

    /// Every coefficient at every level is exact.
    pub fn is_exact(&self) -> bool {
        match self {
            Elem::Const(_) => true,
            Elem::Series(s) => s.known_to == EXACT && s.terms.iter().all(|(_, c)| c.is_exact()),
        }
    }

    /// Outermost exponents present (including uncertain-zero coefficients).
    pub fn exponents(&self) -> Vec<i64> {
        match self {
            Elem::Const(_) => vec![],
            Elem::Series(s) => s.terms.iter().map(|(e, _)| *e).collect(),
        }
    }
}

fn bound_shift(k: i64, v: i64) -> i64 {
    if k == EXACT {
        EXACT
    } else {
        k + v
    }
}

/// Parameters of a tower `F_q((t_1))...((t_d))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldConfig {
    pub p: u32,
    pub f: u32,
    /// Monic modulus, low to high; `None` selects the shipped table.
    pub modulus: Option<Vec<u32>>,
    /// Uniformizer names, innermost first.
    pub vars: Vec<String>,
    /// Relative truncation order per level, innermost first.
    pub prec: Vec<i64>,
    /// Allow three levels.
    pub allow_depth3: bool,
}

impl FieldConfig {
    pub fn new(p: u32, f: u32, vars: &[&str], prec: i64) -> Self {
        FieldConfig {
            p,
            f,
            modulus: None,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            prec: vec![prec; vars.len()],
            allow_depth3: false,
        }
    }
}

/// The name the expression parser uses for the class of X in F_p[X]/(modulus).
pub const GEN_NAME: &str = "g";

/// Arithmetic context for all levels of a tower.
#[derive(Debug)]
pub struct Tower {
    fq: Arc<GaloisField>,
    vars: Vec<String>,
    prec: Vec<i64>,
    config: FieldConfig,
}

impl Tower {
    pub fn new(cfg: FieldConfig) -> Result<Arc<Tower>> {
        if !(2..=7).contains(&cfg.p) || !crate::gf::is_prime(cfg.p) {
            return Err(Error::InvalidConfig(format!("p = {} must be a prime in 2..=7", cfg.p)));
        }
        if !(1..=3).contains(&cfg.f) {
            return Err(Error::InvalidConfig(format!("f = {} must be in 1..=3", cfg.f)));
        }
        let max_d = if cfg.allow_depth3 { 3 } else { 2 };
        let d = cfg.vars.len();
        if d == 0 || d > max_d {
            return Err(Error::InvalidConfig(format!("depth {d} must be in 1..={max_d}")));
        }
        if cfg.prec.len() != d || cfg.prec.iter().any(|&m| m < 8) {
            return Err(Error::InvalidConfig("each level needs a precision of at least 8".into()));
        }
        for (i, v) in cfg.vars.iter().enumerate() {
            let ok = v.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && v != GEN_NAME
                && v != "O";
            if !ok || cfg.vars[..i].contains(v) {
                return Err(Error::InvalidConfig(format!("bad variable name {v:?}")));
            }
        }
        let fq = match &cfg.modulus {
            Some(m) => {
                if m.len() != cfg.f as usize + 1 {
                    return Err(Error::InvalidConfig("modulus degree must equal f".into()));
                }
                GaloisField::new(cfg.p, m.clone())?
            }
            None => GaloisField::standard(cfg.p, cfg.f)?,
        };
        Ok(Arc::new(Tower {
            fq: Arc::new(fq),
            vars: cfg.vars.clone(),
            prec: cfg.prec.clone(),
            config: cfg,
        }))
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }
    pub fn fq(&self) -> &GaloisField {
        &self.fq
    }
    pub fn fq_arc(&self) -> Arc<GaloisField> {
        self.fq.clone()
    }
    pub fn p(&self) -> u32 {
        self.fq.p()
    }
    pub fn depth(&self) -> usize {
        self.vars.len()
    }
    /// Variable name of level `k` (1-based).
    pub fn var_name(&self, k: usize) -> &str {
        &self.vars[k - 1]
    }
    pub fn var_names(&self) -> &[String] {
        &self.vars
    }
    /// Relative truncation order used by inversion at level `k`.
    pub fn prec(&self, k: usize) -> i64 {
        self.prec[k - 1]
    }

    // ----- constructors -------------------------------------------------

    pub fn zero(&self, k: usize) -> Elem {
        if k == 0 {
            Elem::Const(FFElem::ZERO)
        } else {
            Elem::Series(Series { terms: vec![], known_to: EXACT })
        }
    }

    pub fn one(&self, k: usize) -> Elem {
        self.constant(k, FFElem::ONE)
    }

    /// The constant `c ∈ F_q` viewed at level `k`.
    pub fn constant(&self, k: usize, c: FFElem) -> Elem {
        self.lift(0, k, Elem::Const(c))
    }

    pub fn from_int(&self, k: usize, n: i64) -> Elem {
        self.constant(k, self.fq.from_int(n))
    }

    /// Embeds an element of level `from` into level `to ≥ from` as a constant.
    pub fn lift(&self, from: usize, to: usize, e: Elem) -> Elem {
        let mut cur = e;
        for _ in from..to {
            cur = if cur.is_exact_zero() {
                Elem::Series(Series { terms: vec![], known_to: EXACT })
            } else {
                Elem::Series(Series { terms: vec![(0, cur)], known_to: EXACT })
            };
        }
        cur
    }

    /// `c · t_k^e` at level `k`, with `c` of level `k - 1`.
    pub fn monomial_outer(&self, e: i64, c: Elem) -> Elem {
        if c.is_exact_zero() {
            return Elem::Series(Series { terms: vec![], known_to: EXACT });
        }
        Elem::Series(Series { terms: vec![(e, c)], known_to: EXACT })
    }

    /// `c · t_1^{e_1} ... t_k^{e_k}` at level `k = exps.len()`, innermost first.
    pub fn monomial(&self, exps: &[i64], c: FFElem) -> Elem {
        let mut cur = Elem::Const(c);
        for &e in exps {
            cur = self.monomial_outer(e, cur);
        }
        cur
    }

    /// The uniformizer `t_j` at level `k`.
    pub fn var(&self, k: usize, j: usize) -> Elem {
        assert!(1 <= j && j <= k, "variable level {j} outside 1..={k}");
        let mut exps = vec![0; k];
        exps[j - 1] = 1;
        self.monomial(&exps, FFElem::ONE)
    }

    /// `O(t_j^n)` at level `k`: an uncertain zero.
    pub fn big_o(&self, k: usize, j: usize, n: i64) -> Elem {
        assert!(1 <= j && j <= k);
        let mut cur = Elem::Series(Series { terms: vec![], known_to: n });
        for _ in j..k {
            cur = Elem::Series(Series { terms: vec![(0, cur)], known_to: EXACT });
        }
        cur
    }

    fn make_series(&self, k: usize, map: BTreeMap<i64, Elem>, known_to: i64) -> Elem {
        debug_assert!(k >= 1);
        let terms = map
            .into_iter()
            .filter(|(e, c)| *e < known_to && !c.is_exact_zero())
            .collect();
        Elem::Series(Series { terms, known_to })
    }

    // ----- ring operations ----------------------------------------------

    pub fn add(&self, k: usize, a: &Elem, b: &Elem) -> Elem {
        if k == 0 {
            return Elem::Const(self.fq.add(a.constant(), b.constant()));
        }
        let (sa, sb) = (a.series(), b.series());
        let known_to = sa.known_to.min(sb.known_to);
        let mut terms = Vec::with_capacity(sa.terms.len() + sb.terms.len());
        let (mut i, mut j) = (0, 0);
        loop {
            let next = match (sa.terms.get(i), sb.terms.get(j)) {
                (None, None) => break,
                (Some((ea, ca)), Some((eb, cb))) if ea == eb => {
                    i += 1;
                    j += 1;
                    (*ea, self.add(k - 1, ca, cb))
                }
                (Some((ea, ca)), Some((eb, _))) if ea < eb => {
                    i += 1;
                    (*ea, ca.clone())
                }
                (Some((ea, ca)), None) => {
                    i += 1;
                    (*ea, ca.clone())
                }
                (_, Some((eb, cb))) => {
                    j += 1;
                    (*eb, cb.clone())
                }
            };
            if next.0 >= known_to {
                continue;
            }
            if !next.1.is_exact_zero() {
                terms.push(next);
            }
        }
        Elem::Series(Series { terms, known_to })
    }

    pub fn neg(&self, k: usize, a: &Elem) -> Elem {
        match a {
            Elem::Const(c) => Elem::Const(self.fq.neg(*c)),
            Elem::Series(s) => Elem::Series(Series {
                terms: s.terms.iter().map(|(e, c)| (*e, self.neg(k - 1, c))).collect(),
                known_to: s.known_to,
            }),
        }
    }

    pub fn sub(&self, k: usize, a: &Elem, b: &Elem) -> Elem {
        self.add(k, a, &self.neg(k, b))
    }

    /// Multiplication by an integer.
    pub fn scale_int(&self, k: usize, a: &Elem, n: i64) -> Elem {
        let c = self.fq.from_int(n);
        self.scale(k, a, c)
    }

    /// Multiplication by a constant of F_q.
    pub fn scale(&self, k: usize, a: &Elem, c: FFElem) -> Elem {
        match a {
            Elem::Const(x) => Elem::Const(self.fq.mul(*x, c)),
            Elem::Series(s) => {
                if c.is_zero() {
                    return self.zero(k);
                }
                Elem::Series(Series {
                    terms: s.terms.iter().map(|(e, x)| (*e, self.scale(k - 1, x, c))).collect(),
                    known_to: s.known_to,
                })
            }
        }
    }

    fn lowest(s: &Series) -> i64 {
        s.terms.first().map_or(s.known_to, |(e, _)| *e)
    }

    pub fn mul(&self, k: usize, a: &Elem, b: &Elem) -> Elem {
        if k == 0 {
            return Elem::Const(self.fq.mul(a.constant(), b.constant()));
        }
        if a.is_exact_zero() || b.is_exact_zero() {
            return self.zero(k);
        }
        let (sa, sb) = (a.series(), b.series());
        let known_to = bound_shift(sa.known_to, Self::lowest(sb))
            .min(bound_shift(sb.known_to, Self::lowest(sa)));
        let mut acc: BTreeMap<i64, Elem> = BTreeMap::new();
        for (ea, ca) in &sa.terms {
            for (eb, cb) in &sb.terms {
                let e = ea + eb;
                if e >= known_to {
                    break;
                }
                let prod = self.mul(k - 1, ca, cb);
                match acc.get_mut(&e) {
                    Some(slot) => *slot = self.add(k - 1, slot, &prod),
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        self.make_series(k, acc, known_to)
    }

    /// Multiplication by `t_k^n`.
    pub fn shift(&self, k: usize, a: &Elem, n: i64) -> Elem {
        debug_assert!(k >= 1);
        let s = a.series();
        Elem::Series(Series {
            terms: s.terms.iter().map(|(e, c)| (e + n, c.clone())).collect(),
            known_to: bound_shift(s.known_to, n),
        })
    }

    /// Leading exponent and coefficient at the outermost level.
    pub fn leading(&self, k: usize, a: &Elem) -> Result<(i64, Elem)> {
        assert!(k >= 1);
        let s = a.series();
        match s.terms.first() {
            None if s.known_to == EXACT => Err(Error::ZeroInput),
            None => Err(Error::precision(format!(
                "leading term of O({}^{}) unknown",
                self.var_name(k),
                s.known_to
            ))),
            Some((e, c)) => {
                if c.is_certain_nonzero() {
                    Ok((*e, c.clone()))
                } else {
                    Err(Error::precision(format!(
                        "leading coefficient at {}^{e} is not known to be nonzero",
                        self.var_name(k)
                    )))
                }
            }
        }
    }

    pub fn inv(&self, k: usize, a: &Elem) -> Result<Elem> {
        if k == 0 {
            return Ok(Elem::Const(self.fq.inv(a.constant())?));
        }
        if a.is_exact_zero() {
            return Err(Error::DivisionByZero);
        }
        let (v, c) = self.leading(k, a)?;
        let cinv = self.inv(k - 1, &c)?;
        let s = a.series();
        if s.terms.len() == 1 && s.known_to == EXACT {
            return Ok(self.monomial_outer(-v, cinv));
        }
        let rel = if s.known_to == EXACT {
            self.prec(k)
        } else {
            (s.known_to - v).min(self.prec(k))
        };
        // normalized = a · t^{-v} · c^{-1} = 1 + r
        let normalized = self.mul(k, &self.shift(k, a, -v), &self.lift(k - 1, k, cinv.clone()));
        let ns = normalized.series();
        let r: Vec<Elem> = (0..rel)
            .map(|i| {
                ns.terms
                    .iter()
                    .find(|(e, _)| *e == i)
                    .map_or_else(|| self.zero(k - 1), |(_, c)| c.clone())
            })
            .collect();
        let mut b: Vec<Elem> = Vec::with_capacity(rel as usize);
        b.push(self.one(k - 1));
        for n in 1..rel as usize {
            let mut acc = self.zero(k - 1);
            for i in 1..=n {
                if r[i].is_exact_zero() || b[n - i].is_exact_zero() {
                    continue;
                }
                acc = self.add(k - 1, &acc, &self.mul(k - 1, &r[i], &b[n - i]));
            }
            b.push(self.neg(k - 1, &acc));
        }
        let map = b
            .into_iter()
            .enumerate()
            .map(|(n, bn)| (n as i64 - v, self.mul(k - 1, &cinv, &bn)))
            .collect();
        Ok(self.make_series(k, map, rel - v))
    }

    pub fn div(&self, k: usize, a: &Elem, b: &Elem) -> Result<Elem> {
        Ok(self.mul(k, a, &self.inv(k, b)?))
    }

    pub fn pow(&self, k: usize, a: &Elem, e: i64) -> Result<Elem> {
        let base = if e < 0 { self.inv(k, a)? } else { a.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = self.one(k);
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(k, &acc, &sq);
            }
            n >>= 1;
            if n > 0 {
                sq = self.mul(k, &sq, &sq);
            }
        }
        Ok(acc)
    }

    /// `a ↦ a^p`, computed coefficientwise.
    pub fn frobenius(&self, k: usize, a: &Elem) -> Elem {
        let p = self.p() as i64;
        match a {
            Elem::Const(c) => Elem::Const(self.fq.frobenius(*c)),
            Elem::Series(s) => Elem::Series(Series {
                terms: s.terms.iter().map(|(e, c)| (e * p, self.frobenius(k - 1, c))).collect(),
                known_to: if s.known_to == EXACT { EXACT } else { s.known_to * p },
            }),
        }
    }

    /// The `r` with `r^p = a`, when every exponent at every level is divisible by p.
    pub fn pth_root(&self, k: usize, a: &Elem) -> Option<Elem> {
        let p = self.p() as i64;
        match a {
            Elem::Const(c) => Some(Elem::Const(self.fq.pth_root(*c))),
            Elem::Series(s) => {
                let mut terms = Vec::with_capacity(s.terms.len());
                for (e, c) in &s.terms {
                    if e.rem_euclid(p) != 0 {
                        return None;
                    }
                    terms.push((e / p, self.pth_root(k - 1, c)?));
                }
                let known_to =
                    if s.known_to == EXACT { EXACT } else { s.known_to.div_euclid(p) + i64::from(s.known_to.rem_euclid(p) != 0) };
                Some(Elem::Series(Series { terms, known_to }))
            }
        }
    }

    /// Partial derivative with respect to `t_j` (`1 ≤ j ≤ k`).
    pub fn derivative(&self, k: usize, j: usize, a: &Elem) -> Elem {
        if k == 0 {
            return Elem::Const(FFElem::ZERO);
        }
        let s = a.series();
        if j == k {
            let map = s
                .terms
                .iter()
                .map(|(e, c)| (e - 1, self.scale_int(k - 1, c, *e)))
                .collect();
            self.make_series(k, map, bound_shift(s.known_to, -1))
        } else {
            let map = s.terms.iter().map(|(e, c)| (*e, self.derivative(k - 1, j, c))).collect();
            self.make_series(k, map, s.known_to)
        }
    }

    /// Drops all terms at exponents `≥ n` of the outermost variable.
    pub fn truncate(&self, k: usize, a: &Elem, n: i64) -> Elem {
        let s = a.series();
        let known_to = s.known_to.min(n);
        self.make_series(k, s.terms.iter().cloned().collect(), known_to)
    }

    /// Coefficient of `t_k^n` (an element of level `k - 1`).
    pub fn coeff(&self, k: usize, a: &Elem, n: i64) -> Result<Elem> {
        let s = a.series();
        if n >= s.known_to {
            return Err(Error::precision(format!(
                "coefficient of {}^{n} unknown (known to {})",
                self.var_name(k),
                s.known_to
            )));
        }
        Ok(s.terms
            .iter()
            .find(|(e, _)| *e == n)
            .map_or_else(|| self.zero(k - 1), |(_, c)| c.clone()))
    }

    /// Coefficient of `t_1^0 ... t_k^0`.
    pub fn constant_term(&self, k: usize, a: &Elem) -> Result<FFElem> {
        if k == 0 {
            return Ok(a.constant());
        }
        self.constant_term(k - 1, &self.coeff(k, a, 0)?)
    }

    /// Lexicographic valuation, outermost level first.
    pub fn valuation(&self, k: usize, a: &Elem) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(k);
        let mut cur = a.clone();
        for level in (1..=k).rev() {
            let (e, c) = self.leading(level, &cur)?;
            out.push(e);
            cur = c;
        }
        if cur.is_exact_zero() {
            return Err(Error::ZeroInput);
        }
        Ok(out)
    }

    /// Outermost valuation only.
    pub fn ord(&self, k: usize, a: &Elem) -> Result<i64> {
        Ok(self.leading(k, a)?.0)
    }

    /// `a = t_k^m · ĉ · w` with `c` of level `k - 1` and `w ≡ 1` modulo `t_k`.
    pub fn unit_decompose(&self, k: usize, a: &Elem) -> Result<(i64, Elem, Elem)> {
        let (m, c) = self.leading(k, a)?;
        let cinv = self.inv(k - 1, &c)?;
        let w = self.mul(k, &self.shift(k, a, -m), &self.lift(k - 1, k, cinv));
        Ok((m, c, w))
    }

    /// Reduction modulo the maximal ideal of a unit: its `t_k^0` coefficient.
    pub fn residue_of_unit(&self, k: usize, a: &Elem) -> Result<Elem> {
        let (m, c) = self.leading(k, a)?;
        if m != 0 {
            return Err(Error::Inconsistent(format!("not a unit (valuation {m})")));
        }
        Ok(c)
    }

    // ----- rendering ----------------------------------------------------

    /// Canonical text form: ascending exponents, innermost coefficients in
    /// parentheses, constants as polynomials in `g` (little-endian).
    pub fn render(&self, k: usize, a: &Elem) -> String {
        match a {
            Elem::Const(c) => self.render_const(*c),
            Elem::Series(s) => {
                let var = self.var_name(k);
                let mut parts: Vec<String> = Vec::new();
                for (e, c) in &s.terms {
                    let coeff = self.render(k - 1, c);
                    let is_one = *c == self.one(k - 1);
                    let mono = match *e {
                        0 => String::new(),
                        1 => var.to_string(),
                        e => format!("{var}^{e}"),
                    };
                    let simple = matches!(c, Elem::Const(x) if self.fq.degree() == 1 || x.0 < self.p());
                    parts.push(match (mono.is_empty(), is_one) {
                        (true, _) => if simple { coeff } else { format!("({coeff})") },
                        (false, true) => mono,
                        (false, false) => {
                            if simple { format!("{coeff}*{mono}") } else { format!("({coeff})*{mono}") }
                        }
                    });
                }
                if s.known_to != EXACT {
                    parts.push(format!("O({var}^{})", s.known_to));
                }
                if parts.is_empty() {
                    "0".into()
                } else {
                    parts.join(" + ")
                }
            }
        }
    }

    fn render_const(&self, c: FFElem) -> String {
        let digits = self.fq.digits(c);
        let mut parts = Vec::new();
        for (i, d) in digits.iter().enumerate() {
            if *d == 0 {
                continue;
            }
            parts.push(match (i, d) {
                (0, d) => d.to_string(),
                (1, 1) => GEN_NAME.to_string(),
                (1, d) => format!("{d}*{GEN_NAME}"),
                (i, 1) => format!("{GEN_NAME}^{i}"),
                (i, d) => format!("{d}*{GEN_NAME}^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }

    /// Canonical text form: series as `{e:c,...;On}` with ascending exponents
    /// (the `;On` tail only when inexact), constants as little-endian F_p digits.
    pub fn serialize(&self, a: &Elem) -> String {
        let mut out = String::new();
        self.serialize_into(a, &mut out);
        out
    }

    fn serialize_into(&self, a: &Elem, out: &mut String) {
        match a {
            Elem::Const(c) => {
                let d = self.fq.digits(*c);
                let _ = write!(out, "{d:?}");
            }
            Elem::Series(s) => {
                out.push('{');
                for (i, (e, c)) in s.terms.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{e}:");
                    self.serialize_into(c, out);
                }
                if s.known_to != EXACT {
                    let _ = write!(out, ";O{}", s.known_to);
                }
                out.push('}');
            }
        }
    }
}

/// A single level of a tower as a [`Ring`].
#[derive(Clone, Copy)]
pub struct LevelRing<'a> {
    pub tower: &'a Tower,
    pub level: usize,
}

impl<'a> LevelRing<'a> {
    pub fn new(tower: &'a Tower, level: usize) -> Self {
        LevelRing { tower, level }
    }
}

impl Ring for LevelRing<'_> {
    type Elem = Elem;

    fn characteristic(&self) -> u32 {
        self.tower.p()
    }
    fn zero(&self) -> Elem {
        self.tower.zero(self.level)
    }
    fn one(&self) -> Elem {
        self.tower.one(self.level)
    }
    fn from_int(&self, n: i64) -> Elem {
        self.tower.from_int(self.level, n)
    }
    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        self.tower.add(self.level, a, b)
    }
    fn neg(&self, a: &Elem) -> Elem {
        self.tower.neg(self.level, a)
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.tower.mul(self.level, a, b)
    }
    fn is_zero(&self, a: &Elem) -> bool {
        a.is_exact_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_elem;
    use crate::sample::{random_elem, random_nonzero, Shape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tower(p: u32, f: u32, vars: &[&str]) -> Arc<Tower> {
        Tower::new(FieldConfig::new(p, f, vars, 10)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(Tower::new(FieldConfig::new(4, 1, &["t"], 8)).is_err());
        assert!(Tower::new(FieldConfig::new(11, 1, &["t"], 8)).is_err());
        assert!(Tower::new(FieldConfig::new(2, 4, &["t"], 8)).is_err());
        assert!(Tower::new(FieldConfig::new(2, 1, &["t"], 7)).is_err());
        assert!(Tower::new(FieldConfig::new(2, 1, &["t", "u", "v"], 8)).is_err());
        let mut cfg = FieldConfig::new(2, 1, &["t", "u", "v"], 8);
        cfg.allow_depth3 = true;
        assert!(Tower::new(cfg).is_ok());
        assert!(Tower::new(FieldConfig::new(2, 1, &["t", "t"], 8)).is_err());
        let mut cfg = FieldConfig::new(2, 2, &["t"], 8);
        cfg.modulus = Some(vec![1, 0, 1]);
        assert!(Tower::new(cfg).is_err());
    }

    #[test]
    fn parse_examples() {
        let k1 = tower(2, 1, &["t"]);
        let one = parse_elem(&k1, 1, "1").unwrap();
        assert_eq!(k1.valuation(1, &one).unwrap(), vec![0]);

        let k2 = tower(2, 1, &["t", "u"]);
        let m = parse_elem(&k2, 2, "t*u^-2").unwrap();
        assert_eq!(k2.valuation(2, &m).unwrap(), vec![-2, 1]);

        // 1/(1+t): multiply back by (1+t) and compare with 1 + O(t^M)
        let inv = parse_elem(&k1, 1, "1/(1+t)").unwrap();
        assert_eq!(inv.known_to(), 10);
        let back = k1.mul(1, &inv, &parse_elem(&k1, 1, "1+t").unwrap());
        assert_eq!(back, parse_elem(&k1, 1, "1 + O(t^10)").unwrap());
    }

    #[test]
    fn valuation_examples() {
        let k1 = tower(2, 1, &["t"]);
        assert_eq!(k1.valuation(1, &parse_elem(&k1, 1, "t^3").unwrap()).unwrap(), vec![3]);
        let k2 = tower(2, 1, &["t", "u"]);
        assert_eq!(k2.valuation(2, &parse_elem(&k2, 2, "u^2*t").unwrap()).unwrap(), vec![2, 1]);
        assert_eq!(
            k2.valuation(2, &parse_elem(&k2, 2, "(1+t)*u^-1").unwrap()).unwrap(),
            vec![-1, 0]
        );
        assert_eq!(k2.valuation(2, &k2.zero(2)), Err(Error::ZeroInput));
        let unknown = parse_elem(&k2, 2, "O(u^3)").unwrap();
        assert!(matches!(k2.valuation(2, &unknown), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn unit_decompose_examples() {
        let k1 = tower(2, 1, &["t"]);
        let a = parse_elem(&k1, 1, "t^2*(1+t)").unwrap();
        let (m, c, w) = k1.unit_decompose(1, &a).unwrap();
        assert_eq!((m, c, w), (2, Elem::Const(FFElem::ONE), parse_elem(&k1, 1, "1+t").unwrap()));
        let (m, c, w) = k1.unit_decompose(1, &k1.one(1)).unwrap();
        assert_eq!((m, c, w), (0, Elem::Const(FFElem::ONE), k1.one(1)));

        let k2 = tower(2, 1, &["t", "u"]);
        let a = parse_elem(&k2, 2, "u + t*u").unwrap();
        let (m, c, w) = k2.unit_decompose(2, &a).unwrap();
        assert_eq!(m, 1);
        assert_eq!(c, parse_elem(&k2, 1, "1+t").unwrap());
        // w = (1+t)(1+t)^{-1} is 1 up to the inner precision
        assert!(k2.sub(2, &w, &k2.one(2)).is_zero_to_precision());
        let back = k2.mul(2, &k2.shift(2, &k2.lift(1, 2, c), m), &w);
        assert!(k2.sub(2, &back, &a).is_zero_to_precision());
    }

    #[test]
    fn pth_root_examples() {
        let k1 = tower(2, 1, &["t"]);
        let t2 = parse_elem(&k1, 1, "t^2").unwrap();
        let r = k1.pth_root(1, &t2).unwrap();
        assert_eq!(k1.mul(1, &r, &r), t2);
        assert!(k1.pth_root(1, &parse_elem(&k1, 1, "t").unwrap()).is_none());
        let k = tower(3, 2, &["t"]);
        for c in k.fq().elements() {
            let r = k.pth_root(0, &Elem::Const(c)).unwrap();
            assert_eq!(k.pow(0, &r, 3).unwrap(), Elem::Const(c));
        }
    }

    #[test]
    fn inversion_tracks_precision_and_refuses_unknown_leading_terms() {
        let k2 = tower(3, 1, &["t", "u"]);
        let a = parse_elem(&k2, 2, "1 + t + u^-1*(t+t^2)").unwrap();
        let b = k2.inv(2, &a).unwrap();
        let prod = k2.mul(2, &a, &b);
        assert!(k2.sub(2, &prod, &k2.one(2)).is_zero_to_precision());
        let vague = parse_elem(&k2, 2, "O(t^2) + u").unwrap();
        assert!(matches!(k2.inv(2, &vague), Err(Error::PrecisionExhausted(_))));
        assert_eq!(k2.inv(2, &k2.zero(2)), Err(Error::DivisionByZero));
    }

    #[test]
    fn ring_axioms_and_valuations_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (p, f, vars) in [(2u32, 2u32, vec!["t", "u"]), (3, 1, vec!["t", "u"]), (5, 1, vec!["t"])] {
            let k = tower(p, f, &vars);
            let d = k.depth();
            let shape = Shape::new(-2, 3, 3);
            for _ in 0..200 / 3 {
                let a = random_elem(&k, d, shape, &mut rng);
                let b = random_elem(&k, d, shape, &mut rng);
                let c = random_elem(&k, d, shape, &mut rng);
                assert_eq!(k.mul(d, &k.mul(d, &a, &b), &c), k.mul(d, &a, &k.mul(d, &b, &c)));
                assert_eq!(k.mul(d, &a, &b), k.mul(d, &b, &a));
                assert_eq!(
                    k.mul(d, &a, &k.add(d, &b, &c)),
                    k.add(d, &k.mul(d, &a, &b), &k.mul(d, &a, &c))
                );
                assert_eq!(k.add(d, &k.add(d, &a, &b), &c), k.add(d, &a, &k.add(d, &b, &c)));
            }
            for _ in 0..50 {
                let a = random_nonzero(&k, d, shape, &mut rng);
                let b = random_nonzero(&k, d, shape, &mut rng);
                let va = k.valuation(d, &a).unwrap();
                let vb = k.valuation(d, &b).unwrap();
                let vab = k.valuation(d, &k.mul(d, &a, &b)).unwrap();
                let sum: Vec<i64> = va.iter().zip(&vb).map(|(x, y)| x + y).collect();
                assert_eq!(vab, sum);
                let (m, c, w) = k.unit_decompose(d, &a).unwrap();
                let back = k.mul(d, &k.shift(d, &k.lift(d - 1, d, c), m), &w);
                assert!(k.sub(d, &back, &a).is_zero_to_precision());
            }
            for _ in 0..100 {
                let a = random_nonzero(&k, d, shape, &mut rng);
                let ap = k.pow(d, &a, p as i64).unwrap();
                assert_eq!(k.pth_root(d, &ap).unwrap(), a);
                assert_eq!(k.frobenius(d, &a), ap);
            }
        }
    }

    #[test]
    fn derivative_rules() {
        let k = tower(3, 1, &["t", "u"]);
        let a = parse_elem(&k, 2, "t^2*u + u^3 + t^-1").unwrap();
        assert_eq!(k.derivative(2, 2, &a), parse_elem(&k, 2, "t^2").unwrap());
        assert_eq!(k.derivative(2, 1, &a), parse_elem(&k, 2, "2*t*u - t^-2").unwrap());
    }

    #[test]
    fn serialization_is_canonical() {
        let k = tower(2, 2, &["t", "u"]);
        let a = parse_elem(&k, 2, "g*t*u^-1 + 1 + O(u^3)").unwrap();
        let b = parse_elem(&k, 2, "O(u^3) + 1 + t*g*u^-1").unwrap();
        assert_eq!(k.serialize(&a), k.serialize(&b));
        assert_eq!(k.serialize(&a), "{-1:{1:[0, 1]},0:{0:[1, 0]};O3}");
        assert_eq!(parse_elem(&k, 2, &k.render(2, &a)).unwrap(), a);
    }
}
