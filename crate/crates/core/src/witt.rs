//! Witt vectors of length `n ≤ 3` over rings of characteristic p.
//!
//! Addition and multiplication use the universal polynomials `S_k`, `P_k`
//! obtained over the integers from the Witt polynomials
//! `w_k = Σ_{i ≤ k} p^i X_i^{p^{k-i}}` and then reduced mod p. They are
//! generated once per prime and cached.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gf::{FFElem, FieldEmbedding, GaloisField};
use crate::ring::Ring;

pub const MAX_LENGTH: usize = 3;

/// Integer polynomial in `X_0..X_{n-1}, Y_0..Y_{n-1}` (X first).
#[derive(Clone, Debug, Default)]
struct IntPoly(BTreeMap<Vec<u32>, BigInt>);

impl IntPoly {
    fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        IntPoly(BTreeMap::from([(e, BigInt::one())]))
    }

    fn add_assign(&mut self, other: &IntPoly, sign: i32) {
        for (m, c) in &other.0 {
            let entry = self.0.entry(m.clone()).or_insert_with(BigInt::zero);
            if sign >= 0 {
                *entry += c;
            } else {
                *entry -= c;
            }
        }
        self.0.retain(|_, c| !c.is_zero());
    }

    fn scale(&self, s: &BigInt) -> IntPoly {
        IntPoly(self.0.iter().map(|(m, c)| (m.clone(), c * s)).collect())
    }

    fn mul(&self, other: &IntPoly) -> IntPoly {
        let mut out: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let m: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                *out.entry(m).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        out.retain(|_, c| !c.is_zero());
        IntPoly(out)
    }

    fn pow(&self, mut e: u32, nvars: usize) -> IntPoly {
        let mut acc = IntPoly(BTreeMap::from([(vec![0; nvars], BigInt::one())]));
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn div_exact(&self, d: &BigInt) -> IntPoly {
        IntPoly(
            self.0
                .iter()
                .map(|(m, c)| {
                    debug_assert!((c % d).is_zero(), "Witt recursion is integral");
                    (m.clone(), c / d)
                })
                .collect(),
        )
    }

    fn reduce(&self, p: u32) -> ReducedPoly {
        let pb = BigInt::from(p);
        let terms = self
            .0
            .iter()
            .filter_map(|(m, c)| {
                let r = ((c % &pb) + &pb) % &pb;
                let r = r.abs().to_u32().unwrap();
                (r != 0).then(|| (m.clone(), r))
            })
            .collect();
        ReducedPoly { terms }
    }
}

/// A universal polynomial reduced mod p.
#[derive(Clone, Debug)]
pub struct ReducedPoly {
    terms: Vec<(Vec<u32>, u32)>,
}

impl ReducedPoly {
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn eval<R: Ring>(&self, ring: &R, vars: &[R::Elem]) -> R::Elem {
        // cache powers per variable
        let mut powers: Vec<Vec<R::Elem>> = vars.iter().map(|v| vec![ring.one(), v.clone()]).collect();
        let mut acc = ring.zero();
        for (m, c) in &self.terms {
            let mut term = ring.from_int(*c as i64);
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = &mut powers[i];
                while pw.len() <= e as usize {
                    let next = ring.mul(pw.last().unwrap(), &vars[i]);
                    pw.push(next);
                }
                term = ring.mul(&term, &pw[e as usize]);
            }
            acc = ring.add(&acc, &term);
        }
        acc
    }
}

/// `S_0..S_{n-1}` and `P_0..P_{n-1}` for one prime, in `2 · MAX_LENGTH` variables.
#[derive(Debug)]
pub struct UniversalPolys {
    pub p: u32,
    pub sum: Vec<ReducedPoly>,
    pub prod: Vec<ReducedPoly>,
}

impl UniversalPolys {
    fn generate(p: u32, n: usize) -> Self {
        let nv = 2 * n;
        let pb = BigInt::from(p);
        let ghost = |offset: usize, k: usize| {
            let mut g = IntPoly::default();
            for i in 0..=k {
                let term = IntPoly::var(nv, offset + i)
                    .pow(p.pow((k - i) as u32), nv)
                    .scale(&pb.pow(i as u32));
                g.add_assign(&term, 1);
            }
            g
        };
        let mut sum: Vec<IntPoly> = Vec::new();
        let mut prod: Vec<IntPoly> = Vec::new();
        for k in 0..n {
            let (gx, gy) = (ghost(0, k), ghost(n, k));
            let mut s = gx.clone();
            s.add_assign(&gy, 1);
            let mut m = gx.mul(&gy);
            for i in 0..k {
                let e = p.pow((k - i) as u32);
                let w = pb.pow(i as u32);
                s.add_assign(&sum[i].pow(e, nv).scale(&w), -1);
                m.add_assign(&prod[i].pow(e, nv).scale(&w), -1);
            }
            let d = pb.pow(k as u32);
            sum.push(s.div_exact(&d));
            prod.push(m.div_exact(&d));
        }
        UniversalPolys {
            p,
            sum: sum.iter().map(|x| x.reduce(p)).collect(),
            prod: prod.iter().map(|x| x.reduce(p)).collect(),
        }
    }

    /// The cached polynomials for prime `p` and length `n`.
    pub fn get(p: u32, n: usize) -> Arc<UniversalPolys> {
        static CACHE: OnceLock<Mutex<HashMap<(u32, usize), Arc<UniversalPolys>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((p, n))
            .or_insert_with(|| Arc::new(UniversalPolys::generate(p, n)))
            .clone()
    }
}

/// A Witt vector `(x_0, ..., x_{n-1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WittVector<E> {
    pub comps: Vec<E>,
}

impl<E> WittVector<E> {
    pub fn new(comps: Vec<E>) -> Self {
        WittVector { comps }
    }
    pub fn len(&self) -> usize {
        self.comps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }
}

/// `W_n(R)` for a coefficient ring `R` of characteristic p.
pub struct WittRing<'r, R: Ring> {
    base: &'r R,
    n: usize,
    polys: Arc<UniversalPolys>,
}

impl<'r, R: Ring> WittRing<'r, R> {
    pub fn new(base: &'r R, n: usize) -> Result<Self> {
        if !(1..=MAX_LENGTH).contains(&n) {
            return Err(Error::Unsupported(format!("Witt length {n} outside 1..={MAX_LENGTH}")));
        }
        Ok(WittRing { base, n, polys: UniversalPolys::get(base.characteristic(), n) })
    }

    pub fn length(&self) -> usize {
        self.n
    }
    pub fn base(&self) -> &R {
        self.base
    }

    fn check(&self, a: &WittVector<R::Elem>) -> Result<()> {
        if a.len() != self.n {
            return Err(Error::Mismatch(format!("Witt vector of length {} in W_{}", a.len(), self.n)));
        }
        Ok(())
    }

    fn apply(&self, polys: &[ReducedPoly], a: &WittVector<R::Elem>, b: &WittVector<R::Elem>) -> WittVector<R::Elem> {
        let mut vars = Vec::with_capacity(2 * self.n);
        vars.extend(a.comps.iter().cloned());
        vars.extend(b.comps.iter().cloned());
        WittVector::new(polys.iter().map(|s| s.eval(self.base, &vars)).collect())
    }

    pub fn witt_add(&self, a: &WittVector<R::Elem>, b: &WittVector<R::Elem>) -> Result<WittVector<R::Elem>> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.apply(&self.polys.sum, a, b))
    }

    pub fn witt_mul(&self, a: &WittVector<R::Elem>, b: &WittVector<R::Elem>) -> Result<WittVector<R::Elem>> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.apply(&self.polys.prod, a, b))
    }

    /// Additive inverse, solved component by component from `S_k(a, z) = 0`
    /// (each `S_k` is `X_k + Y_k` plus terms in lower components).
    pub fn witt_neg(&self, a: &WittVector<R::Elem>) -> Result<WittVector<R::Elem>> {
        self.check(a)?;
        let mut z: Vec<R::Elem> = vec![self.base.zero(); self.n];
        for k in 0..self.n {
            let mut vars = a.comps.clone();
            vars.extend(z.iter().cloned());
            let partial = self.polys.sum[k].eval(self.base, &vars);
            z[k] = self.base.neg(&partial);
        }
        Ok(WittVector::new(z))
    }

    pub fn witt_sub(&self, a: &WittVector<R::Elem>, b: &WittVector<R::Elem>) -> Result<WittVector<R::Elem>> {
        self.witt_add(a, &self.witt_neg(b)?)
    }

    pub fn zero(&self) -> WittVector<R::Elem> {
        WittVector::new(vec![self.base.zero(); self.n])
    }

    pub fn one(&self) -> WittVector<R::Elem> {
        self.teichmuller(self.base.one())
    }

    /// `[x] = (x, 0, ..., 0)`.
    pub fn teichmuller(&self, x: R::Elem) -> WittVector<R::Elem> {
        let mut c = vec![self.base.zero(); self.n];
        c[0] = x;
        WittVector::new(c)
    }

    /// Frobenius. In characteristic p it is `x_i ↦ x_i^p` componentwise for any base ring.
    pub fn frobenius(&self, a: &WittVector<R::Elem>) -> WittVector<R::Elem> {
        let p = self.base.characteristic() as u64;
        WittVector::new(a.comps.iter().map(|x| self.base.pow(x, p)).collect())
    }

    /// Verschiebung `(x_0, ..., x_{n-1}) ↦ (0, x_0, ..., x_{n-2})`.
    pub fn verschiebung(&self, a: &WittVector<R::Elem>) -> WittVector<R::Elem> {
        let mut c = vec![self.base.zero()];
        c.extend(a.comps.iter().take(self.n - 1).cloned());
        WittVector::new(c)
    }

    /// `m · a` by repeated addition.
    pub fn scale_int(&self, a: &WittVector<R::Elem>, m: u64) -> Result<WittVector<R::Elem>> {
        let mut acc = self.zero();
        for _ in 0..m {
            acc = self.witt_add(&acc, a)?;
        }
        Ok(acc)
    }

    /// `(F - 1)(a)`.
    pub fn frobenius_minus_one(&self, a: &WittVector<R::Elem>) -> Result<WittVector<R::Elem>> {
        self.witt_sub(&self.frobenius(a), a)
    }
}

impl<R: Ring> Ring for WittRing<'_, R> {
    type Elem = WittVector<R::Elem>;

    fn characteristic(&self) -> u32 {
        // W_n has characteristic p^n; callers only use this for Frobenius
        self.base.characteristic()
    }
    fn zero(&self) -> Self::Elem {
        WittRing::zero(self)
    }
    fn one(&self) -> Self::Elem {
        WittRing::one(self)
    }
    fn from_int(&self, n: i64) -> Self::Elem {
        let v = self.scale_int(&self.one(), n.unsigned_abs()).expect("length checked");
        if n < 0 {
            self.witt_neg(&v).expect("length checked")
        } else {
            v
        }
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.witt_add(a, b).expect("Witt length mismatch")
    }
    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        self.witt_neg(a).expect("Witt length mismatch")
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.witt_mul(a, b).expect("Witt length mismatch")
    }
    fn is_zero(&self, a: &Self::Elem) -> bool {
        a.comps.iter().all(|c| self.base.is_zero(c))
    }
}

/// Solution of `(F - 1) x = w` in `W_n(F_{q^e})`.
#[derive(Debug, Clone)]
pub struct AswSolution {
    pub x: WittVector<FFElem>,
    /// Degree of the extension of the base field that contains `x`.
    pub degree: u32,
    pub embedding: FieldEmbedding,
}

/// Solves the Artin–Schreier–Witt equation `(F - 1)x = w` over the smallest
/// extension `F_{q^e}`, `e ≤ max_deg`, by exhaustive search one component at a time.
pub fn asw_solve(field: &GaloisField, w: &WittVector<FFElem>, max_deg: u32) -> Result<AswSolution> {
    let n = w.len();
    for e in 1..=max_deg {
        let emb = field.extension(e)?;
        let big = emb.big.clone();
        let ring = WittRing::new(big.as_ref(), n)?;
        let wb = WittVector::new(w.comps.iter().map(|&c| emb.map(c)).collect());
        // x ↦ x^p - x is additive; invert it on its image
        let mut preimage: HashMap<FFElem, FFElem> = HashMap::new();
        for x in big.elements() {
            preimage.entry(big.sub(big.frobenius(x), x)).or_insert(x);
        }
        let mut x = ring.zero();
        let mut ok = true;
        for k in 0..n {
            // (x + w)_k with x_k = 0 gives w_k + f_k(x_{<k}, w_{<k})
            x.comps[k] = FFElem::ZERO;
            let target = ring.witt_add(&x, &wb)?.comps[k];
            match preimage.get(&target) {
                Some(&xk) => x.comps[k] = xk,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            debug_assert_eq!(ring.frobenius_minus_one(&x)?, wb);
            return Ok(AswSolution { x, degree: e, embedding: emb });
        }
    }
    Err(Error::NotFound(format!("no solution of (F-1)x = w in degree ≤ {max_deg}")))
}
