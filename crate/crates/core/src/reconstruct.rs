//! Seeding and the scheduled WDVV solver.
//!
//! Every coefficient outside the seed layer is obtained from a single WDVV
//! coefficient in which it appears linearly with a non-zero slope, all other
//! contributions being already known. Targets are visited in the order of
//! the induction (joint `m = 0`/`m = 1` recursion on length, then `m >= 2`
//! by order and length); a target whose equations still involve unknown
//! coefficients is deferred and retried.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{ReconstructError, SeedModeError};
use crate::geometry::{CoordLabel, Geometry, Multiplet};
use crate::series::{
    admissible_keys, novikov_bound, s_factor, ExponentVector, Factor, Potential, SeriesKey,
};
use crate::wdvv::{wdvv_terms, WdvvQuad};

/// Choice of initial conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeedMode {
    /// `c(Σ_k e_{k,1}, 1) = 1`.
    Standard,
    /// `c(Σ_k e_{k,1}, 1) = 0` together with the quartic normalisations
    /// `c(2e_{i,1} + 2e_{i,a_i-1}, 0) = -1/(4a_i²)` and `c(4e_{i,1}, 0) = -1/96`.
    Vanishing,
    /// `c(Σ_k e_{k,1}, 1) = 0` without the quartic normalisations.
    VanishingNoVii,
    /// `c(Σ_k e_{k,1}, 1) = a` for a non-zero `a`.
    Rescaled(BigRational),
}

impl SeedMode {
    pub fn rescaled(a: BigRational) -> Result<Self, ReconstructError> {
        if a.is_zero() {
            Err(ReconstructError::ZeroRescale)
        } else {
            Ok(SeedMode::Rescaled(a))
        }
    }

    /// Value of `c(Σ_k e_{k,1}, 1)`.
    pub fn degree_one_value(&self) -> BigRational {
        match self {
            SeedMode::Standard => BigRational::one(),
            SeedMode::Vanishing | SeedMode::VanishingNoVii => BigRational::zero(),
            SeedMode::Rescaled(a) => a.clone(),
        }
    }

    pub fn is_vanishing(&self) -> bool {
        matches!(self, SeedMode::Vanishing | SeedMode::VanishingNoVii)
    }
}

impl fmt::Display for SeedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedMode::Standard => f.write_str("standard"),
            SeedMode::Vanishing => f.write_str("vanishing"),
            SeedMode::VanishingNoVii => f.write_str("vanishing-no-vii"),
            SeedMode::Rescaled(a) => write!(f, "rescaled:{a}"),
        }
    }
}

impl FromStr for SeedMode {
    type Err = SeedModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "standard" => Ok(SeedMode::Standard),
            "vanishing" => Ok(SeedMode::Vanishing),
            "vanishing-no-vii" => Ok(SeedMode::VanishingNoVii),
            other => {
                let value = other
                    .strip_prefix("rescaled:")
                    .and_then(|v| v.trim().parse::<BigRational>().ok())
                    .filter(|v| !v.is_zero())
                    .ok_or_else(|| SeedModeError(s.to_string()))?;
                Ok(SeedMode::Rescaled(value))
            }
        }
    }
}

/// Where a seeded value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// The pairing, i.e. the `t_1`-cubic part.
    Eta,
    /// Degree-zero part splits into single-sector polynomials.
    Separation,
    /// The degree-one normalisation and the low-length `m = 1` zeros.
    DegreeOne,
    /// Vanishing-mode quartics.
    VanishingQuartic,
    /// Cubic terms fixed by the limit ring.
    LimitRing,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Eta => "eta",
            Provenance::Separation => "separation",
            Provenance::DegreeOne => "degree-one",
            Provenance::VanishingQuartic => "vanishing-quartic",
            Provenance::LimitRing => "limit-ring",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeedTarget {
    /// `η(u, v)`, stored analytically.
    Pairing(CoordLabel, CoordLabel),
    Coefficient(SeriesKey),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRecord {
    pub target: SeedTarget,
    pub value: BigRational,
    pub provenance: Provenance,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `Σ_k e_{k,1}` at order 1.
pub fn degree_one_key(g: &Geometry) -> SeriesKey {
    let pairs: Vec<((usize, u32), u16)> = (1..=g.sectors()).map(|i| ((i, 1), 1)).collect();
    SeriesKey::from_pairs(g, &pairs, 1)
}

/// The normalised quartic of sector `i` and its value.
pub fn vanishing_quartic(g: &Geometry, i: usize) -> (SeriesKey, BigRational) {
    let a = g.order(i);
    if a == 2 {
        (SeriesKey::from_pairs(g, &[((i, 1), 4)], 0), q(-1, 96))
    } else {
        let key = SeriesKey::from_pairs(g, &[((i, 1), 2), ((i, a - 1), 2)], 0);
        (key, q(-1, 4 * (a as i64) * (a as i64)))
    }
}

fn is_multi_sector(g: &Geometry, key: &SeriesKey) -> bool {
    key.m == 0 && key.alpha.sectors(g).len() > 1
}

/// All seeded values in trace order.
pub fn seed_records(g: &Geometry, mode: &SeedMode) -> Vec<SeedRecord> {
    let mut out = Vec::new();
    out.push(SeedRecord {
        target: SeedTarget::Pairing(CoordLabel::Unit, CoordLabel::Point),
        value: BigRational::one(),
        provenance: Provenance::Eta,
    });
    for i in 1..=g.sectors() {
        let a = g.order(i);
        for j in 1..=a / 2 {
            out.push(SeedRecord {
                target: SeedTarget::Pairing(
                    CoordLabel::twisted(i, j),
                    CoordLabel::twisted(i, a - j),
                ),
                value: q(1, a as i64),
                provenance: Provenance::Eta,
            });
        }
    }
    for i in 1..=g.sectors() {
        let a = g.order(i);
        for j1 in 1..a {
            for j2 in j1..a {
                if j1 + j2 >= a {
                    break;
                }
                let j3 = a - j1 - j2;
                if j3 < j2 {
                    continue;
                }
                let key = SeriesKey::from_pairs(g, &[((i, j1), 1), ((i, j2), 1), ((i, j3), 1)], 0);
                let s = s_factor(j1 as i64, j2 as i64, j3 as i64);
                out.push(SeedRecord {
                    target: SeedTarget::Coefficient(key),
                    value: q(1, a as i64 * s),
                    provenance: Provenance::LimitRing,
                });
            }
        }
    }
    for alpha in admissible_keys(g, 0) {
        let key = SeriesKey::new(alpha, 0);
        if is_multi_sector(g, &key) {
            out.push(SeedRecord {
                target: SeedTarget::Coefficient(key),
                value: BigRational::zero(),
                provenance: Provenance::Separation,
            });
        }
    }
    let special = degree_one_key(g);
    for alpha in admissible_keys(g, 1) {
        if alpha.length() as usize > g.sectors() {
            continue;
        }
        let key = SeriesKey::new(alpha, 1);
        let value = if key == special {
            mode.degree_one_value()
        } else {
            BigRational::zero()
        };
        out.push(SeedRecord {
            target: SeedTarget::Coefficient(key),
            value,
            provenance: Provenance::DegreeOne,
        });
    }
    if *mode == SeedMode::Vanishing {
        for i in 1..=g.sectors() {
            let (key, value) = vanishing_quartic(g, i);
            out.push(SeedRecord {
                target: SeedTarget::Coefficient(key),
                value,
                provenance: Provenance::VanishingQuartic,
            });
        }
    }
    out
}

/// The potential holding only the seeded coefficients.
pub fn seed(g: &Geometry, mode: SeedMode) -> Potential {
    seed_with_order(g, mode, 1)
}

fn seed_with_order(g: &Geometry, mode: SeedMode, max_order: u32) -> Potential {
    let records = seed_records(g, &mode);
    let mut p = Potential::new(g.clone(), mode, max_order);
    for r in records {
        if let SeedTarget::Coefficient(key) = r.target {
            p.insert(key, r.value).expect("seeds are admissible");
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScheduleKind {
    /// Equations of the induction first, generic search as fallback.
    #[default]
    Targeted,
    /// Generic search only.
    Exhaustive,
}

/// A WDVV equation and the monomial whose coefficient is extracted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub quad: WdvvQuad,
    pub extraction: SeriesKey,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub target: SeriesKey,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceEntry {
    Solve {
        target: SeriesKey,
        candidate: Candidate,
        slope: BigRational,
        value: BigRational,
        fallback: bool,
    },
    /// A coefficient no equation determines; left out of the potential.
    Free { target: SeriesKey },
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ReconstructionTrace {
    pub seeds: Vec<SeedRecord>,
    pub entries: Vec<TraceEntry>,
}

impl ReconstructionTrace {
    pub fn free_parameters(&self) -> impl Iterator<Item = &SeriesKey> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Free { target } => Some(target),
            _ => None,
        })
    }

    /// Targets solved only by the generic search.
    pub fn fallback_targets(&self) -> impl Iterator<Item = &SeriesKey> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Solve {
                target,
                fallback: true,
                ..
            } => Some(target),
            _ => None,
        })
    }
}

fn lbl(i: usize, j: u32) -> CoordLabel {
    CoordLabel::twisted(i, j)
}

fn unit_vec(g: &Geometry, i: usize, j: u32) -> ExponentVector {
    ExponentVector::zero(g.twisted_len()).with_added(g.slot(i, j).expect("slot"), 1)
}

fn others_first(g: &Geometry, i: usize) -> ExponentVector {
    let mut v = ExponentVector::zero(g.twisted_len());
    for k in (1..=g.sectors()).filter(|&k| k != i) {
        v = v.with_added(g.slot(k, 1).expect("slot"), 1);
    }
    v
}

fn sub_units(
    alpha: &ExponentVector,
    g: &Geometry,
    units: &[(usize, u32)],
) -> Option<ExponentVector> {
    let mut v = alpha.clone();
    for &(i, j) in units {
        v = v.checked_sub(&unit_vec(g, i, j))?;
    }
    Some(v)
}

/// Candidates of the induction for an `m = 0` target supported in sector `i`.
fn degree_zero_candidates(g: &Geometry, gamma: &ExponentVector, i: usize) -> Vec<Candidate> {
    let a = g.order(i);
    let rest = others_first(g, i);
    let mut out = Vec::new();
    // WDVV((i,l),(i,l'),μ,μ) at t^{γ - e_l - e_l' - e_{a-1}} Π_{k≠i} t_{k,1} e^{t_μ}
    for l in 1..a {
        for l2 in l..a {
            if let Some(beta) = sub_units(gamma, g, &[(i, l), (i, l2), (i, a - 1)]) {
                out.push(Candidate {
                    quad: WdvvQuad::new(
                        lbl(i, l),
                        lbl(i, l2),
                        CoordLabel::Point,
                        CoordLabel::Point,
                    ),
                    extraction: SeriesKey::new(beta.add(&rest), 1),
                });
            }
        }
    }
    // WDVV((i,m),(i,m'),(i,l),μ) at t^{γ - e_{l-1} - e_m - e_m'} Π_{k≠i} t_{k,1} e^{t_μ}
    for l in (2..a).rev() {
        for m1 in 1..a {
            for m2 in m1..a {
                if let Some(beta) = sub_units(gamma, g, &[(i, l - 1), (i, m1), (i, m2)]) {
                    out.push(Candidate {
                        quad: WdvvQuad::new(lbl(i, m1), lbl(i, m2), lbl(i, l), CoordLabel::Point),
                        extraction: SeriesKey::new(beta.add(&rest), 1),
                    });
                }
            }
        }
    }
    // WDVV((i,1),(i,l),(i,j),(i,j')) at t^{γ - e_j - e_j' - e_{l+1}}
    for l in 1..a.saturating_sub(1) {
        for j1 in 1..a {
            for j2 in j1..a {
                if let Some(beta) = sub_units(gamma, g, &[(i, j1), (i, j2), (i, l + 1)]) {
                    out.push(Candidate {
                        quad: WdvvQuad::new(lbl(i, 1), lbl(i, l), lbl(i, j1), lbl(i, j2)),
                        extraction: SeriesKey::new(beta, 0),
                    });
                }
            }
        }
    }
    out
}

/// Candidates of the induction for a target of order `m >= 1`.
fn positive_order_candidates(g: &Geometry, target: &SeriesKey) -> Vec<Candidate> {
    let gamma = &target.alpha;
    let m = target.m;
    let p = CoordLabel::Point;
    let mut out = Vec::new();
    if m == 1 {
        // c(e_{i,p} + e_{i,q} + Σ_{k≠i} e_{k,1}, 1) with p + q = a_i + 1
        for i in 1..=g.sectors() {
            let a = g.order(i);
            let rest = others_first(g, i);
            let Some(inner) = gamma.checked_sub(&rest) else {
                continue;
            };
            if inner.length() != 2 || inner.sectors(g) != [i] {
                continue;
            }
            let js: Vec<u32> = inner
                .support()
                .flat_map(|(s, e)| std::iter::repeat_n(g.twisted_at(s).1, e as usize))
                .collect();
            if js[0] + js[1] == a + 1 {
                let pj = js[1];
                out.push(Candidate {
                    quad: WdvvQuad::new(lbl(i, a - pj), lbl(i, 1), lbl(i, pj), p),
                    extraction: SeriesKey::new(rest, 1),
                });
            }
        }
    }
    if gamma.is_zero() {
        for i in 1..=g.sectors() {
            let a = g.order(i);
            out.push(Candidate {
                quad: WdvvQuad::new(lbl(i, 1), lbl(i, a - 1), p, p),
                extraction: target.clone(),
            });
        }
        return out;
    }
    for (slot, _) in gamma.support() {
        let (i, j) = g.twisted_at(slot);
        if j >= 2 {
            out.push(Candidate {
                quad: WdvvQuad::new(lbl(i, 1), lbl(i, j - 1), p, p),
                extraction: SeriesKey::new(
                    gamma.checked_sub(&unit_vec(g, i, j)).expect("support"),
                    m,
                ),
            });
        }
    }
    let only_first = gamma.support().all(|(s, _)| g.twisted_at(s).1 == 1);
    if only_first {
        let mut sectors: Vec<usize> = (1..=g.sectors()).collect();
        sectors.sort_by_key(|&i| gamma.get(g.slot(i, 1).expect("slot")) != 0);
        for i in sectors {
            out.push(Candidate {
                quad: WdvvQuad::new(lbl(i, 1), lbl(i, g.order(i) - 1), p, p),
                extraction: target.clone(),
            });
        }
    }
    out
}

fn targeted_candidates(g: &Geometry, target: &SeriesKey) -> Vec<Candidate> {
    if target.m == 0 {
        let sectors = target.alpha.sectors(g);
        degree_zero_candidates(g, &target.alpha, sectors[0])
    } else {
        positive_order_candidates(g, target)
    }
}

/// Induction rank of an `m <= 1` target: `(k, step)`.
fn induction_rank(g: &Geometry, key: &SeriesKey) -> (u32, u8) {
    let len = key.alpha.length();
    if key.m == 1 {
        return (len.saturating_sub(g.sectors() as u32 + 1), 2);
    }
    let i = key.alpha.sectors(g)[0];
    let a = g.order(i);
    let has = |j: u32| key.alpha.get(g.slot(i, j).expect("slot")) > 0;
    let step = if has(a - 1) {
        1
    } else if has(1) {
        3
    } else {
        4
    };
    (len.saturating_sub(4), step)
}

/// Effective last order: `m_max` clipped to the orders carrying admissible
/// keys, and at least 1.
pub fn effective_max_order(g: &Geometry, m_max: u32) -> u32 {
    let m = m_max.max(1);
    match novikov_bound(g) {
        Some(b) => m.min(b.max(1)),
        None => m,
    }
}

/// Every non-seeded coefficient with `m <= m_max` (and every `m = 0`
/// coefficient), in the order of the induction, with the induction's
/// equations attached.
pub fn build_schedule(
    g: &Geometry,
    m_max: u32,
    mode: &SeedMode,
    kind: ScheduleKind,
) -> Vec<ScheduleEntry> {
    let seeded: HashSet<SeriesKey> = seed_records(g, mode)
        .into_iter()
        .filter_map(|r| match r.target {
            SeedTarget::Coefficient(k) => Some(k),
            SeedTarget::Pairing(..) => None,
        })
        .collect();
    let top = effective_max_order(g, m_max);
    let mut low = Vec::new();
    let mut high = Vec::new();
    for m in 0..=top {
        for alpha in admissible_keys(g, m) {
            let key = SeriesKey::new(alpha, m);
            if seeded.contains(&key) || is_multi_sector(g, &key) {
                continue;
            }
            if m <= 1 {
                low.push(key);
            } else {
                high.push(key);
            }
        }
    }
    match kind {
        ScheduleKind::Targeted => {
            low.sort_by(|x, y| {
                induction_rank(g, x)
                    .cmp(&induction_rank(g, y))
                    .then_with(|| x.cmp(y))
            });
            high.sort();
        }
        ScheduleKind::Exhaustive => {
            low.sort();
            high.sort();
        }
    }
    low.into_iter()
        .chain(high)
        .map(|target| {
            let candidates = match kind {
                ScheduleKind::Targeted => targeted_candidates(g, &target),
                ScheduleKind::Exhaustive => Vec::new(),
            };
            ScheduleEntry { target, candidates }
        })
        .collect()
}

/// Keys whose values are usually available early: cubics and quartics of
/// each sector and the short `m = 1` keys.
fn anchor_keys(g: &Geometry) -> Vec<SeriesKey> {
    let mut out: Vec<SeriesKey> = admissible_keys(g, 0)
        .into_iter()
        .map(|a| SeriesKey::new(a, 0))
        .filter(|k| k.alpha.length() <= 4 && !is_multi_sector(g, k))
        .collect();
    out.extend(
        admissible_keys(g, 1)
            .into_iter()
            .filter(|a| a.length() as usize <= g.sectors() + 1)
            .map(|a| SeriesKey::new(a, 1)),
    );
    out
}

fn label_multiset(g: &Geometry, key: &SeriesKey) -> Vec<CoordLabel> {
    let mut out = Vec::new();
    for (slot, e) in key.alpha.support() {
        let (i, j) = g.twisted_at(slot);
        out.extend(std::iter::repeat_n(lbl(i, j), e.min(3) as usize));
    }
    if key.m > 0 {
        out.extend(std::iter::repeat_n(CoordLabel::Point, 3));
    }
    out
}

fn indicator(g: &Geometry, labels: &[CoordLabel]) -> ExponentVector {
    let mut v = ExponentVector::zero(g.twisted_len());
    for &l in labels {
        if let Some(s) = g.label_slot(l) {
            v = v.with_added(s, 1);
        }
    }
    v
}

/// Removes one occurrence of each of `take` from `pool`.
fn without(pool: &[CoordLabel], take: &[CoordLabel]) -> Option<Vec<CoordLabel>> {
    let mut rest = pool.to_vec();
    for t in take {
        let pos = rest.iter().position(|x| x == t)?;
        rest.remove(pos);
    }
    Some(rest)
}

/// Unordered pairs drawn from a multiset; a label pairs with itself only if
/// repeated.
fn pairs_from(pool: &[CoordLabel]) -> Vec<(CoordLabel, CoordLabel)> {
    let mut out = Vec::new();
    for (n, &x) in pool.iter().enumerate() {
        for &y in &pool[n + 1..] {
            let p = if x <= y { (x, y) } else { (y, x) };
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// Generic equations in which `target` multiplies a short anchor: choose
/// `F_{xyσ}` hitting the target and `F_{σ* z w}` hitting an anchor (or the
/// pairing when `σ*` is the unit).
fn fallback_candidates(g: &Geometry, target: &SeriesKey, anchors: &[SeriesKey]) -> Vec<Candidate> {
    let pool = label_multiset(g, target);
    let mut sigmas: Vec<CoordLabel> = pool.clone();
    sigmas.sort();
    sigmas.dedup();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |c: Candidate, out: &mut Vec<Candidate>| {
        if !c.quad.contains_unit() && seen.insert(c.clone()) {
            out.push(c);
        }
    };
    for &sigma in &sigmas {
        let Some(rest) = without(&pool, &[sigma]) else {
            continue;
        };
        let tau = g.dual(sigma);
        for (x, y) in pairs_from(&rest) {
            let Some(left) = target.alpha.checked_sub(&indicator(g, &[x, y, sigma])) else {
                continue;
            };
            if tau == CoordLabel::Unit {
                for &z in g.labels().iter().filter(|l| l.is_twisted()) {
                    let w = g.dual(z);
                    push(
                        Candidate {
                            quad: WdvvQuad::new(x, y, z, w),
                            extraction: SeriesKey::new(left.clone(), target.m),
                        },
                        &mut out,
                    );
                }
                continue;
            }
            for anchor in anchors {
                let anchor_pool = label_multiset(g, anchor);
                let Some(anchor_rest) = without(&anchor_pool, &[tau]) else {
                    continue;
                };
                for (z, w) in pairs_from(&anchor_rest) {
                    let Some(right) = anchor.alpha.checked_sub(&indicator(g, &[tau, z, w])) else {
                        continue;
                    };
                    let extraction = SeriesKey::new(left.add(&right), target.m + anchor.m);
                    push(
                        Candidate {
                            quad: WdvvQuad::new(x, y, z, w),
                            extraction: extraction.clone(),
                        },
                        &mut out,
                    );
                    push(
                        Candidate {
                            quad: WdvvQuad::new(x, y, w, z),
                            extraction,
                        },
                        &mut out,
                    );
                }
            }
        }
    }
    out
}

/// What is known about a coefficient while solving.
enum Status {
    Known(BigRational),
    Zero,
    Target(BigInt),
    Unknown,
}

/// Outcome of one candidate equation.
#[derive(Clone, Debug, PartialEq)]
pub enum Evaluation {
    /// Some other coefficient of the equation is still unknown.
    NotEvaluable,
    /// `c0 + c1 x + c2 x² = 0` in the target value `x`.
    Polynomial {
        c0: BigRational,
        c1: BigRational,
        c2: BigRational,
    },
}

struct Knowledge<'a> {
    p: &'a Potential,
    /// Determined keys not stored because their value is zero.
    zeros: &'a HashSet<SeriesKey>,
    /// Closed world: every absent key counts as zero.
    closed: bool,
}

impl Knowledge<'_> {
    fn status(&self, key: &SeriesKey, target: &SeriesKey, scale: &BigInt) -> Status {
        if key == target {
            return Status::Target(scale.clone());
        }
        if let Some(v) = self.p.coefficient_ref(key) {
            return Status::Known(v * BigRational::from_integer(scale.clone()));
        }
        if self.closed || self.zeros.contains(key) || is_multi_sector(self.p.geometry(), key) {
            return Status::Zero;
        }
        Status::Unknown
    }

    fn factor(&self, f: &Factor, target: &SeriesKey) -> Status {
        match f {
            Factor::Const(c) if c.is_zero() => Status::Zero,
            Factor::Const(c) => Status::Known(c.clone()),
            Factor::Coef { key, scale } => self.status(key, target, scale),
        }
    }

    fn evaluate(&self, target: &SeriesKey, cand: &Candidate) -> Evaluation {
        let g = self.p.geometry();
        let mut c0 = BigRational::zero();
        let mut c1 = BigRational::zero();
        let mut c2 = BigRational::zero();
        let mut blocked = false;
        for term in wdvv_terms(g, &cand.quad, &cand.extraction) {
            let l = self.factor(&term.left, target);
            if matches!(l, Status::Zero) {
                continue;
            }
            let r = self.factor(&term.right, target);
            match (l, r) {
                (_, Status::Zero) => {}
                (Status::Unknown, _) | (_, Status::Unknown) => blocked = true,
                (Status::Known(a), Status::Known(b)) => c0 += term.weight * a * b,
                (Status::Known(a), Status::Target(s)) | (Status::Target(s), Status::Known(a)) => {
                    c1 += term.weight * a * BigRational::from_integer(s)
                }
                (Status::Target(s), Status::Target(t)) => {
                    c2 += term.weight * BigRational::from_integer(s * t)
                }
                (Status::Zero, _) => unreachable!(),
            }
        }
        if blocked {
            Evaluation::NotEvaluable
        } else {
            Evaluation::Polynomial { c0, c1, c2 }
        }
    }
}

/// Solves `target` from one equation, taking every other coefficient from
/// `p` (absent coefficients are zero). `None` unless the equation is affine
/// in the target with non-zero slope.
pub fn solve_with_candidate(
    p: &Potential,
    target: &SeriesKey,
    cand: &Candidate,
) -> Option<(BigRational, BigRational)> {
    let zeros = HashSet::new();
    let k = Knowledge {
        p,
        zeros: &zeros,
        closed: true,
    };
    match k.evaluate(target, cand) {
        Evaluation::Polynomial { c0, c1, c2 } if c2.is_zero() && !c1.is_zero() => {
            let value = -c0 / &c1;
            Some((c1, value))
        }
        _ => None,
    }
}

/// The first candidate of `entry` determining its target, with slope and
/// value, treating every coefficient absent from `p` as zero.
pub fn solve_target(
    p: &Potential,
    entry: &ScheduleEntry,
) -> Option<(Candidate, BigRational, BigRational)> {
    entry
        .candidates
        .iter()
        .find_map(|c| solve_with_candidate(p, &entry.target, c).map(|(s, v)| (c.clone(), s, v)))
}

enum Attempt {
    Solved {
        candidate: Candidate,
        slope: BigRational,
        value: BigRational,
    },
    /// Some equation needs a coefficient not yet known.
    Deferred,
    /// Every equation was evaluable and none involves the target.
    Stuck,
}

struct Solver<'a> {
    g: &'a Geometry,
    potential: Potential,
    zeros: HashSet<SeriesKey>,
    anchors: Vec<SeriesKey>,
    fallback: HashMap<SeriesKey, Vec<Candidate>>,
}

impl Solver<'_> {
    fn attempt(
        &self,
        target: &SeriesKey,
        candidates: &[Candidate],
    ) -> Result<Attempt, ReconstructError> {
        let k = Knowledge {
            p: &self.potential,
            zeros: &self.zeros,
            closed: false,
        };
        let outcomes: Vec<Option<Result<Attempt, ReconstructError>>> = candidates
            .par_iter()
            .map(|cand| match k.evaluate(target, cand) {
                Evaluation::NotEvaluable => None,
                Evaluation::Polynomial { c0, c1, c2 } => {
                    if !c2.is_zero() {
                        None
                    } else if !c1.is_zero() {
                        Some(Ok(Attempt::Solved {
                            candidate: cand.clone(),
                            value: -c0 / &c1,
                            slope: c1,
                        }))
                    } else if !c0.is_zero() {
                        Some(Err(ReconstructError::InconsistentSeed {
                            equation: format!(
                                "{} at {}",
                                cand.quad,
                                cand.extraction.display(self.g)
                            ),
                            residual: c0.to_string(),
                        }))
                    } else {
                        Some(Ok(Attempt::Stuck))
                    }
                }
            })
            .collect();
        let mut all_evaluable = true;
        for o in outcomes {
            match o {
                None => all_evaluable = false,
                Some(Err(e)) => return Err(e),
                Some(Ok(Attempt::Stuck)) => {}
                Some(Ok(solved)) => return Ok(solved),
            }
        }
        Ok(if all_evaluable {
            Attempt::Stuck
        } else {
            Attempt::Deferred
        })
    }

    fn record(&mut self, target: SeriesKey, value: &BigRational) -> Result<(), ReconstructError> {
        if value.is_zero() {
            self.zeros.insert(target);
        } else {
            self.potential.insert(target, value.clone())?;
        }
        Ok(())
    }

    fn fallback_for(&mut self, target: &SeriesKey) -> Vec<Candidate> {
        let (g, anchors) = (self.g, &self.anchors);
        self.fallback
            .entry(target.clone())
            .or_insert_with(|| fallback_candidates(g, target, anchors))
            .clone()
    }
}

/// Seeds the potential and solves every coefficient with `m <= m_max`.
pub fn reconstruct(
    multiplet: &Multiplet,
    m_max: u32,
    mode: SeedMode,
) -> Result<(Potential, ReconstructionTrace), ReconstructError> {
    reconstruct_with_schedule(multiplet, m_max, mode, ScheduleKind::Targeted)
}

pub fn reconstruct_with_schedule(
    multiplet: &Multiplet,
    m_max: u32,
    mode: SeedMode,
    kind: ScheduleKind,
) -> Result<(Potential, ReconstructionTrace), ReconstructError> {
    if let SeedMode::Rescaled(a) = &mode {
        if a.is_zero() {
            return Err(ReconstructError::ZeroRescale);
        }
    }
    let g = Geometry::new(multiplet.clone());
    let seeds = seed_records(&g, &mode);
    let potential = seed_with_order(&g, mode.clone(), m_max.max(1));
    let top = effective_max_order(&g, m_max);
    let mut zeros = HashSet::new();
    for s in &seeds {
        if let SeedTarget::Coefficient(k) = &s.target {
            if s.value.is_zero() {
                zeros.insert(k.clone());
            }
        }
    }
    let schedule = build_schedule(&g, top, &mode, kind);
    let mut solver = Solver {
        g: &g,
        potential,
        zeros,
        anchors: anchor_keys(&g),
        fallback: HashMap::new(),
    };
    let mut trace = ReconstructionTrace {
        seeds,
        entries: Vec::new(),
    };
    let mut pending: Vec<ScheduleEntry> = schedule;

    'outer: while !pending.is_empty() {
        // targeted equations, repeated until they stop making progress
        let mut progress = true;
        while progress && kind == ScheduleKind::Targeted {
            progress = false;
            let mut next = Vec::with_capacity(pending.len());
            for entry in std::mem::take(&mut pending) {
                match solver.attempt(&entry.target, &entry.candidates)? {
                    Attempt::Solved {
                        candidate,
                        slope,
                        value,
                    } => {
                        solver.record(entry.target.clone(), &value)?;
                        trace.entries.push(TraceEntry::Solve {
                            target: entry.target,
                            candidate,
                            slope,
                            value,
                            fallback: false,
                        });
                        progress = true;
                    }
                    _ => next.push(entry),
                }
            }
            pending = next;
        }
        if pending.is_empty() {
            break;
        }

        // one generic solve, then back to the targeted equations
        let mut stuck = None;
        for n in 0..pending.len() {
            let target = pending[n].target.clone();
            let mut cands = pending[n].candidates.clone();
            cands.extend(solver.fallback_for(&target));
            match solver.attempt(&target, &cands)? {
                Attempt::Solved {
                    candidate,
                    slope,
                    value,
                } => {
                    solver.record(target.clone(), &value)?;
                    trace.entries.push(TraceEntry::Solve {
                        target,
                        candidate,
                        slope,
                        value,
                        fallback: true,
                    });
                    pending.remove(n);
                    continue 'outer;
                }
                Attempt::Stuck if stuck.is_none() => stuck = Some(target),
                _ => {}
            }
        }

        if mode == SeedMode::VanishingNoVii {
            let quartics: Vec<SeriesKey> = (1..=g.sectors())
                .map(|i| vanishing_quartic(&g, i).0)
                .collect();
            if let Some(n) = pending.iter().position(|e| quartics.contains(&e.target)) {
                let entry = pending.remove(n);
                trace.entries.push(TraceEntry::Free {
                    target: entry.target,
                });
                continue;
            }
        }
        return Err(match stuck {
            Some(t) => ReconstructError::SolverStuck {
                target: t.display(&g).to_string(),
            },
            None => ReconstructError::NoProgress {
                pending: pending
                    .iter()
                    .map(|e| e.target.display(&g).to_string())
                    .collect(),
            },
        });
    }
    Ok((solver.potential, trace))
}

/// Multiplies every order-`m` coefficient by `a^m`.
pub fn rescale_novikov(p: &Potential, a: &BigRational) -> Result<Potential, ReconstructError> {
    if a.is_zero() {
        return Err(ReconstructError::ZeroRescale);
    }
    let mode = match p.mode() {
        SeedMode::Standard => SeedMode::Rescaled(a.clone()),
        SeedMode::Rescaled(b) => SeedMode::Rescaled(a * b),
        other => other.clone(),
    };
    let mode = match mode {
        SeedMode::Rescaled(v) if v.is_one() => SeedMode::Standard,
        m => m,
    };
    let mut out = Potential::new(p.geometry().clone(), mode, p.max_order());
    for (k, v) in p.iter() {
        let factor = num_traits::pow::pow(a.clone(), k.m as usize);
        out.insert(k.clone(), v * factor)?;
    }
    Ok(out)
}
