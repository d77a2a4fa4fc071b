//! WDVV equations: coefficient extraction, admissible targets and full
//! residual scans.
//!
//! `WDVV(a,b,c,d)` is `A(ab|cd) - A(ac|bd)` with
//! `A(xy|zw) = Σ_σ η^{σσ*} F_{xyσ} F_{σ*zw}`, where `σ*` is the unique label
//! paired with `σ`.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::geometry::{CoordLabel, Geometry};
use crate::series::{
    derivative_factor, exponents_of_scaled_weight, triv_third_derivative, ExponentVector, Factor,
    Potential, SeriesKey,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WdvvQuad {
    pub a: CoordLabel,
    pub b: CoordLabel,
    pub c: CoordLabel,
    pub d: CoordLabel,
}

/// Position permutations preserving `WDVV` up to the attached sign.
const SYMMETRIES: [([usize; 4], i8); 8] = [
    ([0, 1, 2, 3], 1),
    ([1, 0, 3, 2], 1),
    ([2, 3, 0, 1], 1),
    ([3, 2, 1, 0], 1),
    ([0, 2, 1, 3], -1),
    ([3, 1, 2, 0], -1),
    ([1, 3, 0, 2], -1),
    ([2, 0, 3, 1], -1),
];

impl WdvvQuad {
    pub fn new(a: CoordLabel, b: CoordLabel, c: CoordLabel, d: CoordLabel) -> Self {
        Self { a, b, c, d }
    }

    pub fn labels(&self) -> [CoordLabel; 4] {
        [self.a, self.b, self.c, self.d]
    }

    fn from_array(l: [CoordLabel; 4]) -> Self {
        Self::new(l[0], l[1], l[2], l[3])
    }

    pub fn contains_unit(&self) -> bool {
        self.labels().contains(&CoordLabel::Unit)
    }

    /// Smallest equivalent quad and the sign relating the two equations:
    /// `WDVV(self) = sign · WDVV(canonical)`.
    pub fn canonical(&self) -> (WdvvQuad, i8) {
        let l = self.labels();
        SYMMETRIES
            .iter()
            .map(|(p, s)| (Self::from_array([l[p[0]], l[p[1]], l[p[2]], l[p[3]]]), *s))
            .min_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)))
            .expect("non-empty")
    }

    /// All quads equivalent to this one, with signs.
    pub fn orbit(&self) -> Vec<(WdvvQuad, i8)> {
        let l = self.labels();
        SYMMETRIES
            .iter()
            .map(|(p, s)| (Self::from_array([l[p[0]], l[p[1]], l[p[2]], l[p[3]]]), *s))
            .collect()
    }

    pub fn scaled_degree(&self, g: &Geometry) -> i64 {
        self.labels().iter().map(|&l| g.scaled_degree(l)).sum()
    }
}

impl fmt::Display for WdvvQuad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {} {} {}]", self.a, self.b, self.c, self.d)
    }
}

/// One product `weight · left · right` contributing to a WDVV coefficient.
#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub weight: BigRational,
    pub left: Factor,
    pub right: Factor,
}

fn sub_vectors(alpha: &ExponentVector) -> Vec<ExponentVector> {
    let mut out = vec![Vec::with_capacity(alpha.slots())];
    for &e in alpha.as_slice() {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for prefix in &out {
            for x in 0..=e {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|v| ExponentVector::from_slice(&v))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn pair_terms(
    g: &Geometry,
    x: CoordLabel,
    y: CoordLabel,
    z: CoordLabel,
    w: CoordLabel,
    sign: i64,
    target: &SeriesKey,
    splits: &[ExponentVector],
    out: &mut Vec<Term>,
) {
    for &sigma in g.labels() {
        let tau = g.dual(sigma);
        let eta = g.inverse_weight(sigma) * BigRational::from_integer(sign.into());
        let graded = ![x, y, sigma].contains(&CoordLabel::Unit);
        let need = 2 * g.lcm() - g.scaled_degree(x) - g.scaled_degree(y) - g.scaled_degree(sigma);
        for left_alpha in splits {
            let weight = left_alpha.scaled_weight(g);
            let right_alpha = target.alpha.checked_sub(left_alpha).expect("sub-vector");
            for m1 in 0..=target.m {
                if graded && weight + m1 as i64 * g.scaled_chi() != need {
                    continue;
                }
                let lk = SeriesKey::new(left_alpha.clone(), m1);
                let Some(left) = derivative_factor(g, [x, y, sigma], &lk) else {
                    continue;
                };
                let rk = SeriesKey::new(right_alpha.clone(), target.m - m1);
                let Some(right) = derivative_factor(g, [tau, z, w], &rk) else {
                    continue;
                };
                out.push(Term {
                    weight: eta.clone(),
                    left,
                    right,
                });
            }
        }
    }
}

/// Every product contributing to the coefficient of `target` in `WDVV(q)`,
/// expressed through stored keys rather than values.
pub(crate) fn wdvv_terms(g: &Geometry, q: &WdvvQuad, target: &SeriesKey) -> Vec<Term> {
    let splits = sub_vectors(&target.alpha);
    let mut out = Vec::new();
    pair_terms(g, q.a, q.b, q.c, q.d, 1, target, &splits, &mut out);
    pair_terms(g, q.a, q.c, q.b, q.d, -1, target, &splits, &mut out);
    out
}

fn factor_value(p: &Potential, f: &Factor) -> BigRational {
    match f {
        Factor::Const(c) => c.clone(),
        Factor::Coef { key, scale } => match p.coefficient_ref(key) {
            Some(v) => v * BigRational::from_integer(scale.clone()),
            None => BigRational::zero(),
        },
    }
}

/// Coefficient of `t^target.α e^{target.m t_μ}` in `WDVV(q)`.
pub fn wdvv_coefficient(p: &Potential, q: &WdvvQuad, target: &SeriesKey) -> BigRational {
    let mut acc = BigRational::zero();
    for t in wdvv_terms(p.geometry(), q, target) {
        let l = factor_value(p, &t.left);
        if l.is_zero() {
            continue;
        }
        let r = factor_value(p, &t.right);
        if r.is_zero() {
            continue;
        }
        acc += t.weight * l * r;
    }
    acc
}

/// `L · (3 - Σ deg(labels) - m χ)`: the scaled degree every monomial of
/// `WDVV(q)` at order `m` must have.
pub fn target_scaled_weight(g: &Geometry, q: &WdvvQuad, m: u32) -> i64 {
    3 * g.lcm() - q.scaled_degree(g) - m as i64 * g.scaled_chi()
}

/// All `β` such that `t^β e^{m t_μ}` can carry a non-zero coefficient of
/// `WDVV(q)`.
pub fn admissible_targets(g: &Geometry, q: &WdvvQuad, m: u32) -> Vec<ExponentVector> {
    exponents_of_scaled_weight(g, target_scaled_weight(g, q, m))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub quad: WdvvQuad,
    pub target: SeriesKey,
    pub value: BigRational,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResidualReport {
    /// Non-zero residuals, by quad and then key.
    pub residuals: Vec<Residual>,
    /// Number of (equation, target) pairs checked per order `m`.
    pub checked: Vec<usize>,
}

impl ResidualReport {
    pub fn is_clean(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn total_checked(&self) -> usize {
        self.checked.iter().sum()
    }
}

type Sparse = Vec<(SeriesKey, BigRational)>;

/// The coefficient map of `F_{xyz}` truncated at `m_max`.
fn derivative_map(p: &Potential, d: [CoordLabel; 3], m_max: u32) -> Sparse {
    let g = p.geometry();
    if d.contains(&CoordLabel::Unit) {
        let c = triv_third_derivative(g, d);
        return if c.is_zero() {
            Vec::new()
        } else {
            vec![(SeriesKey::unit(g), c)]
        };
    }
    let mut ind = ExponentVector::zero(g.twisted_len());
    let mut points = 0u32;
    for l in d {
        match g.label_slot(l) {
            Some(s) => ind = ind.with_added(s, 1),
            None => points += 1,
        }
    }
    let mut out = Vec::new();
    for (key, v) in p.iter() {
        if key.m > m_max || (points > 0 && key.m == 0) {
            continue;
        }
        let Some(rest) = key.alpha.checked_sub(&ind) else {
            continue;
        };
        let target = SeriesKey::new(rest, key.m);
        if let Some(Factor::Coef { scale, .. }) = derivative_factor(g, d, &target) {
            out.push((target, v * BigRational::from_integer(scale)));
        }
    }
    out
}

fn sorted3(mut d: [CoordLabel; 3]) -> [CoordLabel; 3] {
    d.sort();
    d
}

struct Scanner<'a> {
    g: &'a Geometry,
    maps: HashMap<[CoordLabel; 3], Sparse>,
    m_max: u32,
}

impl Scanner<'_> {
    fn map(&self, d: [CoordLabel; 3]) -> &Sparse {
        &self.maps[&sorted3(d)]
    }

    /// `A(xy|zw)` truncated at `m_max`.
    fn pairing_product(
        &self,
        x: CoordLabel,
        y: CoordLabel,
        z: CoordLabel,
        w: CoordLabel,
    ) -> HashMap<SeriesKey, BigRational> {
        let mut acc: HashMap<SeriesKey, BigRational> = HashMap::new();
        for &sigma in self.g.labels() {
            let left = self.map([x, y, sigma]);
            if left.is_empty() {
                continue;
            }
            let right = self.map([self.g.dual(sigma), z, w]);
            if right.is_empty() {
                continue;
            }
            let eta = self.g.inverse_weight(sigma);
            for (lk, lv) in left {
                let lv = &eta * lv;
                for (rk, rv) in right {
                    let m = lk.m + rk.m;
                    if m > self.m_max {
                        continue;
                    }
                    let key = SeriesKey::new(lk.alpha.add(&rk.alpha), m);
                    let term = &lv * rv;
                    let slot = acc.entry(key).or_insert_with(BigRational::zero);
                    *slot += term;
                }
            }
        }
        acc
    }
}

fn difference(
    quad: WdvvQuad,
    lhs: &HashMap<SeriesKey, BigRational>,
    rhs: &HashMap<SeriesKey, BigRational>,
) -> Vec<Residual> {
    let mut out: Vec<Residual> = Vec::new();
    for (k, v) in lhs {
        let r = rhs.get(k).cloned().unwrap_or_else(BigRational::zero);
        let diff = v - r;
        if !diff.is_zero() {
            out.push(Residual {
                quad,
                target: k.clone(),
                value: diff,
            });
        }
    }
    for (k, v) in rhs {
        if !lhs.contains_key(k) && !v.is_zero() {
            out.push(Residual {
                quad,
                target: k.clone(),
                value: -v.clone(),
            });
        }
    }
    out.sort_by(|x, y| x.target.cmp(&y.target));
    out
}

/// Non-unit label multisets `{w <= x <= y <= z}`.
fn label_multisets(g: &Geometry) -> Vec<[CoordLabel; 4]> {
    let labels: Vec<CoordLabel> = g
        .labels()
        .iter()
        .copied()
        .filter(|&l| l != CoordLabel::Unit)
        .collect();
    let n = labels.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                for l in k..n {
                    out.push([labels[i], labels[j], labels[k], labels[l]]);
                }
            }
        }
    }
    out
}

/// Evaluates every independent WDVV equation at every target of order
/// `<= m_max`. Quads containing the unit are skipped (they vanish
/// identically); for each label multiset `{a,b,c,d}` the two equations
/// `WDVV(a,b,c,d)` and `WDVV(a,b,d,c)` generate all others.
pub fn residual_scan(p: &Potential, m_max: u32) -> ResidualReport {
    let g = p.geometry();
    let labels = g.labels();
    let mut triples = Vec::new();
    for (i, &x) in labels.iter().enumerate() {
        for (j, &y) in labels.iter().enumerate().skip(i) {
            for &z in &labels[j..] {
                triples.push([x, y, z]);
            }
        }
    }
    let maps: HashMap<[CoordLabel; 3], Sparse> = triples
        .into_par_iter()
        .map(|d| (d, derivative_map(p, d, m_max)))
        .collect();
    let scanner = Scanner { g, maps, m_max };

    let multisets = label_multisets(g);
    let mut results: Vec<(usize, Vec<Residual>, Vec<usize>)> = multisets
        .par_iter()
        .enumerate()
        .map(|(n, &[a, b, c, d])| {
            let a1 = scanner.pairing_product(a, b, c, d);
            let a2 = scanner.pairing_product(a, c, b, d);
            let a3 = scanner.pairing_product(a, d, b, c);
            let q1 = WdvvQuad::new(a, b, c, d);
            let q2 = WdvvQuad::new(a, b, d, c);
            let mut res = difference(q1, &a1, &a2);
            res.extend(difference(q2, &a1, &a3));
            let mut checked = vec![0usize; m_max as usize + 1];
            for (m, slot) in checked.iter_mut().enumerate() {
                *slot = 2 * admissible_targets(g, &q1, m as u32).len();
            }
            (n, res, checked)
        })
        .collect();
    results.sort_by_key(|r| r.0);

    let mut report = ResidualReport {
        residuals: Vec::new(),
        checked: vec![0; m_max as usize + 1],
    };
    for (_, res, checked) in results {
        report.residuals.extend(res);
        for (slot, c) in report.checked.iter_mut().zip(checked) {
            *slot += c;
        }
    }
    report
}

/// `A(xy|zw)` coefficient via `wdvv_terms`'s splitting, exposed for tests of
/// the pairing symmetry.
pub fn pairing_product_coefficient(
    p: &Potential,
    x: CoordLabel,
    y: CoordLabel,
    z: CoordLabel,
    w: CoordLabel,
    target: &SeriesKey,
) -> BigRational {
    let g = p.geometry();
    let splits = sub_vectors(&target.alpha);
    let mut terms = Vec::new();
    pair_terms(g, x, y, z, w, 1, target, &splits, &mut terms);
    terms
        .iter()
        .map(|t| t.weight.clone() * factor_value(p, &t.left) * factor_value(p, &t.right))
        .fold(BigRational::zero(), |a, b| a + b)
}
