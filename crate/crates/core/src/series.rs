//! Sparse exact-rational store for the potential
//! `F = F_triv + Σ c(α, m) t^α e^{m t_μ}`.
//!
//! The part of `F` involving `t_1` is never stored: it is the cubic
//! `½ t_1² t_μ + ½ t_1 Σ_i Σ_j (1/a_i) t_{i,j} t_{i,a_i-j}`, fixed by the
//! pairing, and every third derivative involving `t_1` is read off `η`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::SeriesError;
use crate::geometry::{CoordLabel, Geometry};
use crate::reconstruct::SeedMode;

/// Exponents `α_{i,j}` over the twisted coordinates, dense in canonical slot
/// order. Absent coordinates are simply zero entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExponentVector(Box<[u16]>);

impl ExponentVector {
    pub fn zero(len: usize) -> Self {
        Self(vec![0; len].into_boxed_slice())
    }

    pub fn from_slice(exps: &[u16]) -> Self {
        Self(exps.into())
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.0
    }

    pub fn slots(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, slot: usize) -> u16 {
        self.0[slot]
    }

    /// Length `|α| = Σ α_{i,j}`.
    pub fn length(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn with_added(&self, slot: usize, by: u16) -> Self {
        let mut v = self.0.clone();
        v[slot] += by;
        Self(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// `self - other`, if non-negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Box<[u16]>>>()
            .map(Self)
    }

    /// Non-zero `(slot, exponent)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (usize, u16)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(s, &e)| (s, e))
    }

    /// Distinct sectors with a non-zero exponent, ascending.
    pub fn sectors(&self, g: &Geometry) -> Vec<usize> {
        let mut out: Vec<usize> = self.support().map(|(s, _)| g.sector_of_slot(s)).collect();
        out.dedup();
        out
    }

    /// `L · Σ α_{i,j} deg(t_{i,j})`.
    pub fn scaled_weight(&self, g: &Geometry) -> i64 {
        self.0
            .iter()
            .zip(g.scaled_weights())
            .map(|(&e, &w)| e as i64 * w)
            .sum()
    }

    pub fn display<'a>(&'a self, g: &'a Geometry) -> impl fmt::Display + 'a {
        DisplayExponents { alpha: self, g }
    }
}

/// Canonical order among vectors of equal length: larger exponents on
/// earlier coordinates first.
impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct DisplayExponents<'a> {
    alpha: &'a ExponentVector,
    g: &'a Geometry,
}

impl fmt::Display for DisplayExponents<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alpha.is_zero() {
            return f.write_str("1");
        }
        let mut first = true;
        for (slot, e) in self.alpha.support() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let (i, j) = self.g.twisted_at(slot);
            write!(f, "({i},{j})^{e}")?;
        }
        Ok(())
    }
}

/// Index `(α, m)` of the monomial `t^α e^{m t_μ}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SeriesKey {
    pub alpha: ExponentVector,
    pub m: u32,
}

impl SeriesKey {
    pub fn new(alpha: ExponentVector, m: u32) -> Self {
        Self { alpha, m }
    }

    /// The empty key `(0, 0)`.
    pub fn unit(g: &Geometry) -> Self {
        Self::new(ExponentVector::zero(g.twisted_len()), 0)
    }

    /// Builds a key from `((i, j), exponent)` pairs.
    pub fn from_pairs(g: &Geometry, pairs: &[((usize, u32), u16)], m: u32) -> Self {
        let mut v = vec![0u16; g.twisted_len()];
        for &((i, j), e) in pairs {
            let slot = g.slot(i, j).expect("coordinate out of range");
            v[slot] += e;
        }
        Self::new(ExponentVector(v.into_boxed_slice()), m)
    }

    pub fn is_unit(&self) -> bool {
        self.m == 0 && self.alpha.is_zero()
    }

    pub fn display<'a>(&'a self, g: &'a Geometry) -> impl fmt::Display + 'a {
        DisplayKey { key: self, g }
    }
}

/// Records are ordered by `(m, |α|, canonical exponent order)`.
impl Ord for SeriesKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.m
            .cmp(&other.m)
            .then_with(|| self.alpha.length().cmp(&other.alpha.length()))
            .then_with(|| self.alpha.cmp(&other.alpha))
    }
}

impl PartialOrd for SeriesKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct DisplayKey<'a> {
    key: &'a SeriesKey,
    g: &'a Geometry,
}

impl fmt::Display for DisplayKey<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} m={}", self.key.alpha.display(self.g), self.key.m)
    }
}

/// `L · wdeg(key)`.
pub fn scaled_weighted_degree(g: &Geometry, key: &SeriesKey) -> i64 {
    key.alpha.scaled_weight(g) + key.m as i64 * g.scaled_chi()
}

/// `wdeg(α, m) = Σ α_{i,j} (a_i - j)/a_i + m χ_A`.
pub fn weighted_degree(g: &Geometry, key: &SeriesKey) -> BigRational {
    BigRational::new(
        BigInt::from(scaled_weighted_degree(g, key)),
        BigInt::from(g.lcm()),
    )
}

/// Whether `t^α e^{m t_μ}` has degree exactly 2, the only degree a stored
/// coefficient may have.
pub fn is_admissible(g: &Geometry, key: &SeriesKey) -> bool {
    key.alpha.slots() == g.twisted_len() && scaled_weighted_degree(g, key) == 2 * g.lcm()
}

/// All `α >= 0` with `L · Σ α_{i,j} deg(t_{i,j}) = scaled_target`, in canonical
/// order. Empty when the target is negative.
pub fn exponents_of_scaled_weight(g: &Geometry, scaled_target: i64) -> Vec<ExponentVector> {
    fn walk(
        weights: &[i64],
        slot: usize,
        remaining: i64,
        current: &mut Vec<u16>,
        out: &mut Vec<ExponentVector>,
    ) {
        if slot == weights.len() {
            if remaining == 0 {
                out.push(ExponentVector::from_slice(current));
            }
            return;
        }
        let w = weights[slot];
        let max = remaining / w;
        for e in (0..=max).rev() {
            current[slot] = e as u16;
            walk(weights, slot + 1, remaining - e * w, current, out);
        }
        current[slot] = 0;
    }

    let mut out = Vec::new();
    if scaled_target < 0 {
        return out;
    }
    let mut current = vec![0u16; g.twisted_len()];
    walk(g.scaled_weights(), 0, scaled_target, &mut current, &mut out);
    out.sort_by(|a, b| a.length().cmp(&b.length()).then_with(|| a.cmp(b)));
    out
}

/// Every `α` with `wdeg(α, m) = 2`, in canonical order.
pub fn admissible_keys(g: &Geometry, m: u32) -> Vec<ExponentVector> {
    exponents_of_scaled_weight(g, 2 * g.lcm() - m as i64 * g.scaled_chi())
}

/// Largest Novikov order with any admissible key when `χ_A > 0`.
pub fn novikov_bound(g: &Geometry) -> Option<u32> {
    (g.scaled_chi() > 0).then(|| (2 * g.lcm() / g.scaled_chi()) as u32)
}

/// `s_{a,b,c}`: 1 if pairwise distinct, 6 if all equal, 2 otherwise.
pub fn s_factor(a: i64, b: i64, c: i64) -> i64 {
    if a == b && b == c {
        6
    } else if a != b && b != c && a != c {
        1
    } else {
        2
    }
}

/// The Frobenius potential truncated at Novikov order `max_order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    geometry: Geometry,
    coeffs: BTreeMap<SeriesKey, BigRational>,
    mode: SeedMode,
    max_order: u32,
}

impl Potential {
    pub fn new(geometry: Geometry, mode: SeedMode, max_order: u32) -> Self {
        Self {
            geometry,
            coeffs: BTreeMap::new(),
            mode,
            max_order,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn mode(&self) -> &SeedMode {
        &self.mode
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    /// Stores `c(key)`; zero values remove the key. Rejects keys whose
    /// weighted degree is not exactly 2.
    pub fn insert(&mut self, key: SeriesKey, value: BigRational) -> Result<(), SeriesError> {
        if key.alpha.slots() != self.geometry.twisted_len() {
            return Err(SeriesError::Shape(format!(
                "{} slots, expected {}",
                key.alpha.slots(),
                self.geometry.twisted_len()
            )));
        }
        if !is_admissible(&self.geometry, &key) {
            return Err(SeriesError::NotQuasiHomogeneous {
                key: key.display(&self.geometry).to_string(),
                degree: weighted_degree(&self.geometry, &key).to_string(),
            });
        }
        self.insert_unchecked(key, value);
        Ok(())
    }

    /// Stores a coefficient without the grading check. Only meant for
    /// building deliberately broken potentials in tests.
    #[doc(hidden)]
    pub fn insert_unchecked(&mut self, key: SeriesKey, value: BigRational) {
        if value.is_zero() {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, value);
        }
    }

    /// `c(α, m)`, zero when absent.
    pub fn coefficient(&self, key: &SeriesKey) -> BigRational {
        self.coeffs
            .get(key)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn coefficient_ref(&self, key: &SeriesKey) -> Option<&BigRational> {
        self.coeffs.get(key)
    }

    /// Non-zero coefficients in canonical key order.
    pub fn iter(&self) -> impl Iterator<Item = (&SeriesKey, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `t^target.α e^{target.m t_μ}` in `∂_{d1} ∂_{d2} ∂_{d3} F`.
    pub fn third_derivative_coefficient(
        &self,
        d1: CoordLabel,
        d2: CoordLabel,
        d3: CoordLabel,
        target: &SeriesKey,
    ) -> BigRational {
        match derivative_factor(&self.geometry, [d1, d2, d3], target) {
            None => BigRational::zero(),
            Some(Factor::Const(c)) => c,
            Some(Factor::Coef { key, scale }) => match self.coeffs.get(&key) {
                Some(v) => v * BigRational::from_integer(scale),
                None => BigRational::zero(),
            },
        }
    }
}

/// A coefficient of a third derivative of `F`: either a constant coming from
/// the `t_1`-part, or `scale · c(key)`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Factor {
    Const(BigRational),
    Coef { key: SeriesKey, scale: BigInt },
}

/// Constant `∂_{d1}∂_{d2}∂_{d3} F_triv` (only non-zero when a `t_1` derivative
/// is present).
pub(crate) fn triv_third_derivative(g: &Geometry, d: [CoordLabel; 3]) -> BigRational {
    match d.iter().position(|&l| l == CoordLabel::Unit) {
        None => BigRational::zero(),
        Some(k) => {
            let rest: Vec<CoordLabel> = (0..3).filter(|&x| x != k).map(|x| d[x]).collect();
            g.pairing(rest[0], rest[1])
        }
    }
}

/// Expresses the coefficient of `target` in `∂_{d} F` in terms of stored data.
/// `None` when it vanishes for structural reasons (grading, a `t_1`
/// derivative away from the constant term, or a `t_μ` derivative of an
/// `m = 0` term).
pub(crate) fn derivative_factor(
    g: &Geometry,
    d: [CoordLabel; 3],
    target: &SeriesKey,
) -> Option<Factor> {
    if d.contains(&CoordLabel::Unit) {
        if !target.is_unit() {
            return None;
        }
        let c = triv_third_derivative(g, d);
        return (!c.is_zero()).then_some(Factor::Const(c));
    }
    let mut alpha = target.alpha.0.clone();
    let mut points = 0u32;
    for label in d {
        match label {
            CoordLabel::Point => points += 1,
            t => alpha[g.label_slot(t)?] += 1,
        }
    }
    if points > 0 && target.m == 0 {
        return None;
    }
    let key = SeriesKey::new(ExponentVector(alpha), target.m);
    if !is_admissible(g, &key) {
        return None;
    }
    let mut scale = BigInt::from(target.m).pow(points);
    // falling factorial over the differentiated slots
    let mut hits: [(usize, u16); 3] = [(usize::MAX, 0); 3];
    for label in d.iter().filter_map(|&l| g.label_slot(l)) {
        if let Some(h) = hits.iter_mut().find(|h| h.0 == label) {
            h.1 += 1;
        } else if let Some(h) = hits.iter_mut().find(|h| h.0 == usize::MAX) {
            *h = (label, 1);
        }
    }
    for (slot, k) in hits.into_iter().filter(|h| h.0 != usize::MAX) {
        let top = key.alpha.get(slot);
        for x in 0..k {
            scale *= BigInt::from(top - x);
        }
    }
    Some(Factor::Coef { key, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Multiplet;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn geom(s: &str) -> Geometry {
        Geometry::new(s.parse::<Multiplet>().unwrap())
    }

    #[test]
    fn weighted_degree_examples() {
        let g = geom("2,2,2");
        let k = SeriesKey::from_pairs(&g, &[((1, 1), 1), ((2, 1), 1), ((3, 1), 1)], 1);
        assert_eq!(weighted_degree(&g, &k), q(2, 1));
        assert_eq!(weighted_degree(&g, &SeriesKey::unit(&g)), q(0, 1));
        let g = geom("2,3,7");
        let k = SeriesKey::from_pairs(&g, &[((1, 1), 4)], 0);
        assert_eq!(weighted_degree(&g, &k), q(2, 1));
    }

    fn weak_compositions(n: u32, parts: u32) -> usize {
        // C(n + parts - 1, parts - 1)
        let (mut num, mut den) = (1usize, 1usize);
        for k in 1..parts {
            num *= (n + k) as usize;
            den *= k as usize;
        }
        num / den
    }

    #[test]
    fn admissible_keys_examples() {
        let g = geom("2,2,2");
        let keys = admissible_keys(&g, 1);
        assert_eq!(keys.len(), weak_compositions(3, 3));
        assert_eq!(keys.len(), 10);
        assert!(keys.iter().all(|a| a.length() == 3));

        let g = geom("3,3,3");
        assert_eq!(admissible_keys(&g, 1), admissible_keys(&g, 0));
        assert_eq!(admissible_keys(&g, 7), admissible_keys(&g, 0));

        let g = geom("2,2,2");
        assert_eq!(novikov_bound(&g), Some(4));
        assert_eq!(admissible_keys(&g, 4), vec![ExponentVector::zero(3)]);
        assert!(admissible_keys(&g, 5).is_empty());
    }

    #[test]
    fn s_factor_cases() {
        assert_eq!(s_factor(1, 2, 3), 1);
        assert_eq!(s_factor(1, 1, 1), 6);
        assert_eq!(s_factor(1, 1, 2), 2);
        assert_eq!(s_factor(2, 1, 1), 2);
    }

    #[test]
    fn insertion_enforces_grading() {
        let g = geom("2,3,4");
        let mut p = Potential::new(g.clone(), SeedMode::Standard, 1);
        let bad = SeriesKey::from_pairs(&g, &[((1, 1), 5)], 0);
        assert!(matches!(
            p.insert(bad, q(1, 1)),
            Err(SeriesError::NotQuasiHomogeneous { .. })
        ));
        let good = SeriesKey::from_pairs(&g, &[((3, 1), 2), ((3, 2), 1)], 0);
        p.insert(good.clone(), q(1, 8)).unwrap();
        assert_eq!(p.coefficient(&good), q(1, 8));
        let missing = SeriesKey::from_pairs(&g, &[((2, 1), 3)], 0);
        assert_eq!(p.coefficient(&missing), q(0, 1));
        p.insert(good.clone(), q(0, 1)).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn third_derivative_examples() {
        let g = geom("2,3,4");
        let p = Potential::new(g.clone(), SeedMode::Standard, 1);
        let unit = SeriesKey::unit(&g);
        for (i, a) in [(1usize, 2u32), (2, 3), (3, 4)] {
            for j in 1..a {
                let v = p.third_derivative_coefficient(
                    CoordLabel::Unit,
                    CoordLabel::twisted(i, j),
                    CoordLabel::twisted(i, a - j),
                    &unit,
                );
                assert_eq!(v, q(1, a as i64));
            }
        }
        assert_eq!(
            p.third_derivative_coefficient(
                CoordLabel::Unit,
                CoordLabel::Unit,
                CoordLabel::Point,
                &unit
            ),
            q(1, 1)
        );

        // ∂_μ³ of c(0, m) e^{m t} is m³ c(0, m)
        let g = geom("2,2,2");
        let mut p = Potential::new(g.clone(), SeedMode::Standard, 4);
        let k = SeriesKey::new(ExponentVector::zero(3), 4);
        p.insert(k.clone(), q(3, 5)).unwrap();
        let pt = CoordLabel::Point;
        assert_eq!(p.third_derivative_coefficient(pt, pt, pt, &k), q(64 * 3, 5));

        // ∂_{(i,1)}³ of c(4e_{i,1}) t⁴ has coefficient 24 c at t_{i,1}
        let quartic = SeriesKey::from_pairs(&g, &[((2, 1), 4)], 0);
        p.insert(quartic, q(-1, 96)).unwrap();
        let x = CoordLabel::twisted(2, 1);
        let lin = SeriesKey::from_pairs(&g, &[((2, 1), 1)], 0);
        assert_eq!(p.third_derivative_coefficient(x, x, x, &lin), q(-24, 96));
    }

    fn arb_multiplet() -> impl Strategy<Value = Multiplet> {
        prop::collection::vec(2u32..6, 3..5).prop_map(|mut v| {
            v.sort();
            Multiplet::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn admissible_keys_have_degree_two(a in arb_multiplet(), m in 0u32..4) {
            let g = Geometry::new(a);
            for alpha in admissible_keys(&g, m) {
                let key = SeriesKey::new(alpha, m);
                prop_assert_eq!(weighted_degree(&g, &key), q(2, 1));
            }
        }

        #[test]
        fn third_derivative_is_symmetric(
            a in arb_multiplet(),
            picks in prop::collection::vec(0usize..64, 3),
            m in 0u32..3,
            seed in 0usize..1000,
        ) {
            let g = Geometry::new(a);
            let mut p = Potential::new(g.clone(), SeedMode::Standard, 3);
            for mm in 0..=m {
                for (n, alpha) in admissible_keys(&g, mm).into_iter().enumerate() {
                    let v = ((n * 7 + seed) % 11) as i64 - 5;
                    p.insert(SeriesKey::new(alpha, mm), q(v, 1 + (n % 3) as i64)).unwrap();
                }
            }
            let labels = g.labels();
            let d: Vec<CoordLabel> = picks.iter().map(|&x| labels[x % labels.len()]).collect();
            let targets = admissible_keys(&g, m);
            let alpha = targets.get(seed % targets.len().max(1)).cloned()
                .unwrap_or_else(|| ExponentVector::zero(g.twisted_len()));
            // shrink the target so that derivatives can land on it
            let mut small = alpha.as_slice().to_vec();
            for x in small.iter_mut().take(3) { *x = x.saturating_sub(1); }
            let target = SeriesKey::new(ExponentVector::from_slice(&small), m);
            let base = p.third_derivative_coefficient(d[0], d[1], d[2], &target);
            for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                prop_assert_eq!(
                    &base,
                    &p.third_derivative_coefficient(d[perm[0]], d[perm[1]], d[perm[2]], &target)
                );
            }
        }
    }
}
