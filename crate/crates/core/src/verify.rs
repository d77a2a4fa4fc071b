//! Independent checks on a finished potential.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::VerifyError;
use crate::geometry::{CoordLabel, Geometry};
use crate::series::{weighted_degree, ExponentVector, Potential, SeriesKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub name: String,
    /// First counterexample in canonical key order, if any.
    pub counterexample: Option<String>,
}

impl CheckReport {
    fn new(name: &str, counterexample: Option<String>) -> Self {
        Self {
            name: name.to_string(),
            counterexample,
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.counterexample {
            None => write!(f, "CHECK {}: PASS", self.name),
            Some(c) => write!(f, "CHECK {}: FAIL {}", self.name, c),
        }
    }
}

/// Every stored key has weighted degree 2.
pub fn check_euler(p: &Potential) -> CheckReport {
    let g = p.geometry();
    let two = BigRational::from_integer(2.into());
    let bad = p.iter().find_map(|(k, _)| {
        let d = weighted_degree(g, k);
        (d != two).then(|| format!("{} has degree {}", k.display(g), d))
    });
    CheckReport::new("euler", bad)
}

/// Every non-zero `m = 0` coefficient lives in a single sector.
pub fn check_separation(p: &Potential) -> CheckReport {
    let g = p.geometry();
    let bad = p
        .iter()
        .find(|(k, _)| k.m == 0 && k.alpha.sectors(g).len() > 1)
        .map(|(k, v)| format!("{} = {}", k.display(g), v));
    CheckReport::new("separation", bad)
}

fn check_sector(g: &Geometry, i: usize) -> Result<(), VerifyError> {
    if i == 0 || i > g.sectors() {
        Err(VerifyError::NoSuchSector(i))
    } else {
        Ok(())
    }
}

fn swap_sectors(g: &Geometry, key: &SeriesKey, i1: usize, i2: usize) -> SeriesKey {
    let mut v = key.alpha.as_slice().to_vec();
    for (s1, s2) in g.sector_slots(i1).zip(g.sector_slots(i2)) {
        v.swap(s1, s2);
    }
    SeriesKey::new(ExponentVector::from_slice(&v), key.m)
}

/// The coefficients are invariant under relabelling sector `i1` as `i2`.
pub fn check_symmetry(p: &Potential, i1: usize, i2: usize) -> Result<CheckReport, VerifyError> {
    let g = p.geometry();
    check_sector(g, i1)?;
    check_sector(g, i2)?;
    if g.order(i1) != g.order(i2) {
        return Err(VerifyError::OrderMismatch(i1, i2));
    }
    let bad = p.iter().find_map(|(k, v)| {
        let other = swap_sectors(g, k, i1, i2);
        let w = p.coefficient(&other);
        (*v != w).then(|| format!("{} = {} but {} = {}", k.display(g), v, other.display(g), w))
    });
    Ok(CheckReport::new(&format!("symmetry({i1},{i2})"), bad))
}

/// The `m = 0` coefficients supported purely in sector `i`.
pub fn sector_restriction(
    p: &Potential,
    i: usize,
) -> Result<BTreeMap<ExponentVector, BigRational>, VerifyError> {
    let g = p.geometry();
    check_sector(g, i)?;
    Ok(p.iter()
        .filter(|(k, _)| k.m == 0 && k.alpha.sectors(g) == [i])
        .map(|(k, v)| (k.alpha.clone(), v.clone()))
        .collect())
}

fn local_restriction(
    p: &Potential,
    i: usize,
) -> Result<BTreeMap<Vec<u16>, BigRational>, VerifyError> {
    let g = p.geometry();
    let slots = g.sector_slots(i);
    Ok(sector_restriction(p, i)?
        .into_iter()
        .map(|(a, v)| (a.as_slice()[slots.clone()].to_vec(), v))
        .collect())
}

/// Sector `i1` of `p1` and sector `i2` of `p2` carry the same polynomial.
pub fn check_sector_universality(
    p1: &Potential,
    i1: usize,
    p2: &Potential,
    i2: usize,
) -> Result<CheckReport, VerifyError> {
    check_sector(p1.geometry(), i1)?;
    check_sector(p2.geometry(), i2)?;
    if p1.geometry().order(i1) != p2.geometry().order(i2) {
        return Err(VerifyError::OrderMismatch(i1, i2));
    }
    let r1 = local_restriction(p1, i1)?;
    let r2 = local_restriction(p2, i2)?;
    let zero = BigRational::zero();
    let mut keys: Vec<&Vec<u16>> = r1.keys().chain(r2.keys()).collect();
    keys.sort_by(|a, b| {
        let la: u32 = a.iter().map(|&x| x as u32).sum();
        let lb: u32 = b.iter().map(|&x| x as u32).sum();
        la.cmp(&lb).then_with(|| b.cmp(a))
    });
    let bad = keys.into_iter().find_map(|k| {
        let a = r1.get(k).unwrap_or(&zero);
        let b = r2.get(k).unwrap_or(&zero);
        (a != b).then(|| {
            let exps: Vec<String> = k
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, e)| format!("(i,{})^{}", j + 1, e))
                .collect();
            format!("{}: {} vs {}", exps.join(" "), a, b)
        })
    });
    Ok(CheckReport::new(&format!("universality({i1},{i2})"), bad))
}

/// Every coefficient with `m >= 1` vanishes.
pub fn check_vanishing(p: &Potential) -> CheckReport {
    let g = p.geometry();
    let bad = p
        .iter()
        .find(|(k, _)| k.m >= 1)
        .map(|(k, v)| format!("{} = {}", k.display(g), v));
    CheckReport::new("vanishing", bad)
}

/// `C[x_1, ..., x_r] / (x_i x_j, a_i x_i^{a_i} - a_j x_j^{a_j})`, with basis
/// `1, x_i^j (1 <= j < a_i), a_1 x_1^{a_1}` indexed like the geometry's labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitRing {
    geometry: Geometry,
    /// `table[u][v]` is the product of basis elements `u` and `v`.
    table: Vec<Vec<Vec<BigRational>>>,
}

impl LimitRing {
    pub fn dimension(&self) -> usize {
        self.table.len()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn product(&self, u: CoordLabel, v: CoordLabel) -> &[BigRational] {
        let g = &self.geometry;
        &self.table[g.label_index(u).expect("label")][g.label_index(v).expect("label")]
    }

    /// Overwrites one structure constant.
    pub fn set_entry(&mut self, u: CoordLabel, v: CoordLabel, w: CoordLabel, value: BigRational) {
        let g = &self.geometry;
        let (iu, iv, iw) = (
            g.label_index(u).expect("label"),
            g.label_index(v).expect("label"),
            g.label_index(w).expect("label"),
        );
        self.table[iu][iv][iw] = value;
    }

    fn multiply(&self, x: &[BigRational], y: &[BigRational]) -> Vec<BigRational> {
        let n = self.dimension();
        let mut out = vec![BigRational::zero(); n];
        for (i, a) in x.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in y.iter().enumerate().filter(|(_, b)| !b.is_zero()) {
                for (k, c) in self.table[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += a * b * c;
                    }
                }
            }
        }
        out
    }

    pub fn is_associative(&self) -> bool {
        let n = self.dimension();
        (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|k| {
                    let left = self.multiply(&self.table[i][j], &basis(n, k));
                    let right = self.multiply(&basis(n, i), &self.table[j][k]);
                    left == right
                })
            })
        })
    }

    pub fn is_commutative(&self) -> bool {
        let n = self.dimension();
        (0..n).all(|i| (0..n).all(|j| self.table[i][j] == self.table[j][i]))
    }
}

fn basis(n: usize, k: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); n];
    v[k] = BigRational::one();
    v
}

/// Builds the ring from its presentation alone.
pub fn build_limit_ring(g: &Geometry) -> LimitRing {
    let n = g.mu();
    let labels = g.labels();
    let index = |l: CoordLabel| g.label_index(l).expect("label");
    let top = index(CoordLabel::Point);
    let mut table = vec![vec![vec![BigRational::zero(); n]; n]; n];
    for (iu, &u) in labels.iter().enumerate() {
        for (iv, &v) in labels.iter().enumerate() {
            let entry = &mut table[iu][iv];
            match (u, v) {
                (CoordLabel::Unit, w) | (w, CoordLabel::Unit) => {
                    entry[index(w)] = BigRational::one()
                }
                (
                    CoordLabel::Twisted {
                        sector: i1,
                        index: j1,
                    },
                    CoordLabel::Twisted {
                        sector: i2,
                        index: j2,
                    },
                ) if i1 == i2 => {
                    let a = g.order(i1);
                    let s = j1 + j2;
                    if s < a {
                        entry[index(CoordLabel::twisted(i1, s))] = BigRational::one();
                    } else if s == a {
                        entry[top] = BigRational::new(1.into(), (a as i64).into());
                    }
                }
                _ => {}
            }
        }
    }
    LimitRing {
        geometry: g.clone(),
        table,
    }
}

/// `∂_u ∘ ∂_v` at the large-radius limit, computed from the potential:
/// `Σ_σ F_{uvσ}(0) η^{σ w}`.
pub fn limit_product_from_potential(
    p: &Potential,
    u: CoordLabel,
    v: CoordLabel,
) -> Vec<BigRational> {
    let g = p.geometry();
    let origin = SeriesKey::unit(g);
    let mut out = vec![BigRational::zero(); g.mu()];
    for &sigma in g.labels() {
        let f = p.third_derivative_coefficient(u, v, sigma, &origin);
        if f.is_zero() {
            continue;
        }
        let w = g.dual(sigma);
        out[g.label_index(w).expect("label")] += f * g.pairing_inverse(sigma, w);
    }
    out
}

/// The product read off the cubic terms matches the ring under
/// `∂_{i,j} ↦ x_i^j`, `∂_μ ↦ a_1 x_1^{a_1}`.
pub fn check_limit_product(p: &Potential, ring: &LimitRing) -> CheckReport {
    let g = p.geometry();
    let mut bad = None;
    if ring.geometry() != g {
        bad = Some(format!(
            "ring built for {} but potential is for {}",
            ring.geometry().multiplet(),
            g.multiplet()
        ));
    }
    'search: for &u in g.labels() {
        if bad.is_some() {
            break;
        }
        for &v in g.labels() {
            let got = limit_product_from_potential(p, u, v);
            let want = ring.product(u, v);
            if got != want {
                let k = got
                    .iter()
                    .zip(want)
                    .position(|(a, b)| a != b)
                    .expect("differs");
                bad = Some(format!(
                    "{u}*{v} at {}: potential {} vs ring {}",
                    g.labels()[k],
                    got[k],
                    want[k]
                ));
                break 'search;
            }
        }
    }
    CheckReport::new("limit", bad)
}
