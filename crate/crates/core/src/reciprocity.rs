//! The reciprocity map `Ψ_{L/K}: K_d(K)/N K_d(L) → Gal(L/K)` for cyclic `L/K`
//! of prime degree, the norm-index bound, non-norm witnesses, and the
//! combined isomorphism check.

use std::fmt;

use rand::Rng;

use crate::cohomology::{cup_pair, InvValue};
use crate::error::{Error, Result};
use crate::extensions::{CyclicExt, ExtKind, Ramification};
use crate::forms::{DiffForm, Forms};
use crate::kgroup::{k_norm, tame_dim, KClass, LClass, LGenerator};
use crate::sample::{random_elem, random_nonzero, random_unit, Shape};
use crate::tower::Elem;

/// `σ^k` for the stored generator `σ` of `Gal(L/K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GaloisElem {
    pub k: u32,
    pub ell: u32,
}

impl GaloisElem {
    pub fn is_identity(self) -> bool {
        self.k == 0
    }
}

impl fmt::Display for GaloisElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            0 => write!(f, "id"),
            1 => write!(f, "sigma"),
            k => write!(f, "sigma^{k}"),
        }
    }
}

/// `Ψ_{L/K}(ξ) = σ^k` where `χ_L ∪ ξ` has invariant `k/ℓ`.
pub fn psi(ext: &CyclicExt, xi: &KClass, bound: i64) -> Result<GaloisElem> {
    let v: InvValue = cup_pair(ext, xi, bound)?;
    Ok(GaloisElem { k: v.num, ell: v.ell })
}

/// The Frobenius of an unramified extension of a one-dimensional field:
/// `y ↦ y^q` equals `σ^k` with `k = Tr(c)` (Artin–Schreier) or `k = j` for `y^ℓ = g^j`.
pub fn frobenius(ext: &CyclicExt) -> Result<GaloisElem> {
    let res = match (ext.ramification(), ext.residue()) {
        (Ramification::Unramified, Some(r)) if r.level() == 0 => r,
        _ => return Err(Error::Unsupported("Frobenius is defined for unramified extensions of level 1".into())),
    };
    let fq = ext.tower().fq();
    let Elem::Const(c) = res.a() else { unreachable!() };
    let k = match ext.kind() {
        ExtKind::ArtinSchreier => fq.trace(*c),
        ExtKind::Kummer => fq.dlog(*c)? % ext.ell(),
    };
    Ok(GaloisElem { k, ell: ext.ell() })
}

/// How the bound on `|K_d(K) : N K_d(L)|` was obtained.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// The quotient is `K_{d-1}(F)/N K_{d-1}(F_L) ≅ Gal(F_L/F)`, bounded by
    /// the same analysis one level down.
    Unramified { residue: Box<IndexBound> },
    /// `K_0(F_q)/N K_0(F_{q^ℓ}) = Z/ℓ`.
    FiniteField,
    /// The quotient is `K_d(F)/ℓ`, of dimension `dim` over `Z/ℓ`.
    Tame { dim: usize },
    /// A surjection from `Ω^{d-1}_F / ((F-1)Ω^{d-1}_F + dΩ^{d-2}_F) ≅ Z/p`.
    OrderP(SurjectionCheck),
}

#[derive(Clone, Debug)]
pub struct SurjectionCheck {
    pub ramification: Ramification,
    pub samples: usize,
    /// Samples with `Ψ(image) = s · ρ(ω)` for the common scale `s`.
    pub consistent: usize,
    pub scale: Option<u32>,
    /// Pairs `(ω_1, ω_2)` whose images add up under `Ψ`.
    pub additive: usize,
    pub additive_samples: usize,
    /// A source element with `ρ(ω) ≠ 0` was exhibited.
    pub source_surjective: bool,
}

impl SurjectionCheck {
    pub fn passed(&self) -> bool {
        self.consistent == self.samples
            && self.additive == self.additive_samples
            && self.source_surjective
            && self.scale.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct IndexBound {
    pub bound: u64,
    pub certificate: Certificate,
}

impl IndexBound {
    pub fn label(&self) -> &'static str {
        match self.certificate {
            Certificate::Unramified { .. } | Certificate::FiniteField => "Gal(F_L/F)",
            Certificate::Tame { .. } => "K_d(F)/l",
            Certificate::OrderP(_) => "order p quotient",
        }
    }

    /// The certificate's internal checks all passed.
    pub fn sound(&self) -> bool {
        match &self.certificate {
            Certificate::Unramified { residue } => residue.sound(),
            Certificate::Tame { .. } | Certificate::FiniteField => true,
            Certificate::OrderP(c) => c.passed(),
        }
    }
}

const SAMPLE_SHAPE: Shape = Shape::new(-2, 3, 2);

/// The upper bound on the norm index, by the four-case analysis.
pub fn norm_index_upper<R: Rng>(ext: &CyclicExt, samples: usize, rng: &mut R) -> Result<IndexBound> {
    let ell = ext.ell() as u64;
    let k = ext.level();
    match ext.ramification() {
        Ramification::Unramified => match ext.residue() {
            Some(r) => {
                let residue = norm_index_upper(r, samples, rng)?;
                Ok(IndexBound { bound: residue.bound, certificate: Certificate::Unramified { residue: Box::new(residue) } })
            }
            None => Ok(IndexBound { bound: ell, certificate: Certificate::FiniteField }),
        },
        Ramification::Tame => {
            let dim = tame_dim(ext.tower(), k - 1, k, ext.ell());
            Ok(IndexBound { bound: ell.pow(dim as u32), certificate: Certificate::Tame { dim } })
        }
        Ramification::Wild | Ramification::Ferocious => {
            let check = surjection_check(ext, samples, rng)?;
            Ok(IndexBound { bound: ell, certificate: Certificate::OrderP(check) })
        }
    }
}

/// A sampled element `ω` of `Ω^{d-1}_F` together with its image in `K_d(K)`.
struct SourceSample {
    form: DiffForm,
    image: KClass,
}

fn source_sample(ext: &CyclicExt, x: Elem, y: Option<Elem>) -> Result<SourceSample> {
    let tower = ext.tower();
    let d = ext.level();
    let fm = Forms::new(tower, d - 1);
    let b = ext.b().expect("wild or ferocious");
    let head = tower.add(d, &tower.one(d), &tower.mul(d, &tower.lift(d - 1, d, x.clone()), b));
    let (form, entries) = if d == 1 {
        (fm.function(x), vec![head])
    } else if ext.ramification() == Ramification::Wild {
        let y = y.expect("wild sample needs a second entry");
        let form = fm.scale(&x, &fm.dlog(&y)?);
        (form, vec![head, tower.lift(d - 1, d, y)])
    } else {
        // x dlog c with c the leading coefficient of the datum
        let c = tower.coeff(d, ext.a(), -ext.break_i())?;
        let form = fm.scale(&x, &fm.dlog(&c)?);
        (form, vec![head, tower.var(d, d)])
    };
    let image = KClass::symbol(tower, d, ext.ell(), entries)?;
    Ok(SourceSample { form, image })
}

fn surjection_check<R: Rng>(ext: &CyclicExt, samples: usize, rng: &mut R) -> Result<SurjectionCheck> {
    let tower = ext.tower();
    let d = ext.level();
    let p = ext.ell();
    let fm = Forms::new(tower, d - 1);
    let bound = ext.conductor();
    let draw = |rng: &mut R| -> Result<SourceSample> {
        let x = if d == 1 {
            random_elem(tower, 0, SAMPLE_SHAPE, rng)
        } else {
            random_nonzero(tower, d - 1, SAMPLE_SHAPE, rng)
        };
        let y = (d > 1).then(|| random_nonzero(tower, d - 1, SAMPLE_SHAPE, rng));
        if x.is_exact_zero() {
            return source_sample(ext, tower.one(d - 1), y);
        }
        source_sample(ext, x, y)
    };
    let mut pts = Vec::with_capacity(samples);
    for _ in 0..samples {
        pts.push(draw(rng)?);
    }
    // a deterministic element with ρ = 1 where one is easy to name
    if ext.ramification() == Ramification::Wild {
        let c = (1..tower.fq().order()).map(crate::gf::FFElem).find(|c| tower.fq().trace(*c) == 1).unwrap();
        let x = tower.constant(d - 1, c);
        let y = (d > 1).then(|| tower.var(d - 1, 1));
        pts.push(source_sample(ext, x, y)?);
    }
    let mut scale = None;
    let mut consistent = 0;
    let mut source_surjective = false;
    let mut values = Vec::with_capacity(pts.len());
    for s in &pts {
        let r = fm.quotient_reduce(&s.form)? % p;
        let v = psi(ext, &s.image, bound)?.k;
        values.push((r, v));
        if r != 0 {
            source_surjective = true;
            if scale.is_none() {
                let rinv = (1..p).find(|i| (i * r) % p == 1).unwrap();
                scale = Some(v * rinv % p);
            }
        }
    }
    if let Some(s) = scale {
        consistent = values.iter().filter(|(r, v)| (s * r) % p == *v).count();
    }
    let n = pts.len();
    let mut additive = 0;
    for i in 0..n.saturating_sub(1) {
        let sum = pts[i].image.add(&pts[i + 1].image)?;
        let v = psi(ext, &sum, bound)?.k;
        if v == (values[i].1 + values[i + 1].1) % p {
            additive += 1;
        }
    }
    Ok(SurjectionCheck {
        ramification: ext.ramification(),
        samples: n,
        consistent,
        scale: scale.filter(|s| *s != 0),
        additive,
        additive_samples: n.saturating_sub(1),
        source_surjective,
    })
}

/// A class with nonzero pairing against `χ_L`, from the break-guided candidates.
pub fn nonnorm_witness(ext: &CyclicExt, bound: i64) -> Result<KClass> {
    let needed = ext.conductor();
    if bound < needed {
        return Err(Error::FiltrationTooSmall { needed, got: bound });
    }
    for cand in witness_candidates(ext)? {
        if !psi(ext, &cand, bound)?.is_identity() {
            return Ok(cand);
        }
    }
    Err(Error::NotFound(format!("no non-norm symbol among the candidates for {ext:?}")))
}

fn witness_candidates(ext: &CyclicExt) -> Result<Vec<KClass>> {
    let tower = ext.tower();
    let d = ext.level();
    let ell = ext.ell();
    let fq = tower.fq();
    let mut out = Vec::new();
    if d == 0 {
        return Err(Error::Unsupported("witnesses live over valued fields".into()));
    }
    let u = tower.var(d, d);
    match ext.ramification() {
        Ramification::Unramified => {
            let residue = ext.residue().expect("unramified extensions keep their residue");
            let base = if residue.level() == 0 {
                KClass::from_terms(tower, 0, 0, ell, vec![(1, vec![])])?
            } else {
                nonnorm_witness(residue, residue.conductor())?
            };
            out.push(base.lift(d)?.cup_right(&u)?);
        }
        Ramification::Tame => {
            let mut pool = vec![tower.constant(d, fq.generator())];
            pool.extend((1..=d).map(|j| tower.var(d, j)));
            for combo in tuples(pool.len(), d) {
                let entries = combo.iter().map(|&i| pool[i].clone()).collect();
                out.push(KClass::symbol(tower, d, ell, entries)?);
            }
        }
        Ramification::Wild | Ramification::Ferocious => {
            let n = ext.break_i();
            let last = if ext.ramification() == Ramification::Wild { 1 } else { d };
            for j in [0i64, -1, 1, -2, 2, -3, 3] {
                if d == 1 && j != 0 {
                    continue;
                }
                for c in (1..fq.order()).map(crate::gf::FFElem) {
                    let mut exps = vec![0i64; d];
                    exps[d - 1] = n;
                    if d > 1 {
                        exps[0] = j;
                    }
                    let head = tower.add(d, &tower.one(d), &tower.monomial(&exps, c));
                    let mut entries = vec![head];
                    if d > 1 {
                        entries.push(tower.var(d, last));
                    }
                    out.push(KClass::symbol(tower, d, ell, entries)?);
                }
            }
        }
    }
    Ok(out)
}

/// Ordered tuples of distinct indices below `n` of length `len`.
fn tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in tuples(n, len - 1) {
        for i in 0..n {
            if !rest.contains(&i) {
                let mut v = rest.clone();
                v.push(i);
                out.push(v);
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct SampleCounts {
    pub passed: usize,
    pub failed: usize,
    /// Samples that could not be evaluated at working precision.
    pub unresolved: usize,
}

impl SampleCounts {
    fn record(&mut self, outcome: Result<bool>) -> Result<()> {
        match outcome {
            Ok(true) => self.passed += 1,
            Ok(false) => self.failed += 1,
            Err(e) if e.is_refusal() => self.unresolved += 1,
            Err(e) => return Err(e),
        }
        Ok(())
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0 && self.unresolved == 0
    }
}

#[derive(Clone, Debug)]
pub struct IsoReport {
    pub summary: String,
    pub ramification: Ramification,
    pub break_i: i64,
    pub ell: u32,
    pub bound: i64,
    pub index_upper: IndexBound,
    pub witness: KClass,
    pub witness_value: GaloisElem,
    /// Order of the subgroup generated by `Ψ(witness)`.
    pub psi_image_order: u32,
    pub norm_kernel: SampleCounts,
    pub filtration_kernel: SampleCounts,
}

impl IsoReport {
    pub fn verified(&self) -> bool {
        self.index_upper.bound == self.ell as u64
            && self.index_upper.sound()
            && self.psi_image_order == self.ell
            && self.norm_kernel.all_passed()
            && self.filtration_kernel.all_passed()
    }

    pub fn verdict(&self) -> &'static str {
        if self.verified() {
            "isomorphism verified"
        } else {
            "verification failed"
        }
    }
}

/// Random `η ∈ K_d(L)` with at most one entry outside `K`.
fn random_l_class<R: Rng>(ext: &CyclicExt, rng: &mut R) -> Result<LClass> {
    let tower = ext.tower();
    let d = ext.level();
    let principal = d == 2 && matches!(ext.ramification(), Ramification::Tame | Ramification::Wild) && rng.gen_bool(0.3);
    if principal {
        let ell = ext.ell() as i64;
        let m = loop {
            let m = rng.gen_range(1..=4);
            if m % ell != 0 {
                break m;
            }
        };
        let x = random_unit(tower, d, SAMPLE_SHAPE, rng);
        return Ok(LClass { terms: vec![(1, LGenerator::PrincipalPi { m, x, rest: vec![] })] });
    }
    let z = loop {
        let coeffs = (0..ext.ell()).map(|_| random_elem(tower, d, SAMPLE_SHAPE, rng)).collect();
        let z = ext.from_coeffs(coeffs)?;
        if ext.field_norm(&z).is_ok_and(|n| n.is_certain_nonzero()) {
            break z;
        }
    };
    let mut entries = vec![z];
    for _ in 1..d {
        entries.push(ext.from_base(random_nonzero(tower, d, SAMPLE_SHAPE, rng)));
    }
    let slot = rng.gen_range(0..d);
    entries.swap(0, slot);
    Ok(LClass { terms: vec![(1, LGenerator::Plain(entries))] })
}

/// Random symbol in `U_m K_d(K)`.
fn random_filtered<R: Rng>(ext: &CyclicExt, m: i64, rng: &mut R) -> Result<KClass> {
    let tower = ext.tower();
    let d = ext.level();
    let x = random_elem(tower, d, Shape::new(0, 2, 2), rng);
    let head = tower.add(d, &tower.one(d), &tower.shift(d, &x, m));
    let head = if head == tower.one(d) { tower.add(d, &head, &tower.pow(d, &tower.var(d, d), m)?) } else { head };
    let mut entries = vec![head];
    for _ in 1..d {
        entries.push(random_nonzero(tower, d, SAMPLE_SHAPE, rng));
    }
    KClass::symbol(tower, d, ext.ell(), entries)
}

/// Assembles the index bound, a non-norm witness and kernel samples.
pub fn verify_iso<R: Rng>(ext: &CyclicExt, samples: usize, bound: i64, rng: &mut R) -> Result<IsoReport> {
    let needed = ext.conductor();
    if bound < needed {
        return Err(Error::FiltrationTooSmall { needed, got: bound });
    }
    let index_upper = norm_index_upper(ext, samples.min(20), rng)?;
    let witness = nonnorm_witness(ext, bound)?;
    let witness_value = psi(ext, &witness, bound)?;
    let ell = ext.ell();
    let psi_image_order = if witness_value.is_identity() { 1 } else { ell };

    let mut norm_kernel = SampleCounts::default();
    for _ in 0..samples {
        let eta = random_l_class(ext, rng)?;
        let outcome = k_norm(ext, &eta, ext.level()).and_then(|xi| psi(ext, &xi, bound)).map(GaloisElem::is_identity);
        norm_kernel.record(outcome)?;
    }
    let mut filtration_kernel = SampleCounts::default();
    for _ in 0..samples {
        let m = rng.gen_range(needed.max(1)..needed.max(1) + 3);
        let outcome = random_filtered(ext, m, rng).and_then(|xi| psi(ext, &xi, bound)).map(GaloisElem::is_identity);
        filtration_kernel.record(outcome)?;
    }
    Ok(IsoReport {
        summary: format!("{ext:?}"),
        ramification: ext.ramification(),
        break_i: ext.break_i(),
        ell,
        bound,
        index_upper,
        witness,
        witness_value,
        psi_image_order,
        norm_kernel,
        filtration_kernel,
    })
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    /// `(probe, Ψ(lhs), Ψ(rhs))` for every probe.
    pub pairings: Vec<(String, u32, u32)>,
    /// Normal forms of the two sides agree (`None` if unresolved at precision).
    pub normal_forms_agree: Option<bool>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.pairings.iter().all(|(_, l, r)| l == r) && self.normal_forms_agree != Some(false)
    }
}

/// Checks `{1-α, 1-β} = {1-αβ, -α} + {1-αβ, 1-β} - {1-αβ, 1-α}` in `K_2/ℓ`
/// through its normal form and against probe characters of level 2 (the
/// symbols are lifted when `α, β` live at level 1).
pub fn symbol_identity_check(
    tower: &std::sync::Arc<crate::tower::Tower>,
    level: usize,
    alpha: &Elem,
    beta: &Elem,
    ell: u32,
    probes: &[CyclicExt],
) -> Result<IdentityReport> {
    let t = tower;
    let k = level;
    let one = t.one(k);
    let ab = t.mul(k, alpha, beta);
    for (what, x) in [("α", alpha.clone()), ("1 - α", t.sub(k, &one, alpha)), ("1 - β", t.sub(k, &one, beta)), ("1 - αβ", t.sub(k, &one, &ab))] {
        if !x.is_certain_nonzero() {
            return Err(Error::Precondition(format!("{what} must be nonzero")));
        }
    }
    let om = |x: &Elem| t.sub(k, &one, x);
    let lhs = KClass::symbol(t, k, ell, vec![om(alpha), om(beta)])?;
    let rhs = KClass::from_terms(
        t,
        k,
        2,
        ell,
        vec![
            (1, vec![om(&ab), t.neg(k, alpha)]),
            (1, vec![om(&ab), om(beta)]),
            (-1, vec![om(&ab), om(alpha)]),
        ],
    )?;
    let normal_forms_agree = match lhs.compare(&rhs)? {
        crate::kgroup::Equality::Equal => Some(true),
        crate::kgroup::Equality::Different => Some(false),
        crate::kgroup::Equality::Unresolved { .. } => None,
    };
    let mut pairings = Vec::new();
    for probe in probes {
        if probe.level() != 2 || k > 2 || probe.ell() != ell {
            return Err(Error::Mismatch("probes must be characters of level 2 with the same ℓ".into()));
        }
        let bound = probe.conductor();
        let l = psi(probe, &lhs.lift(2)?, bound)?.k;
        let r = psi(probe, &rhs.lift(2)?, bound)?.k;
        pairings.push((format!("{probe:?}"), l, r));
    }
    Ok(IdentityReport { pairings, normal_forms_agree })
}
