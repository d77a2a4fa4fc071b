//! Multiplets, flat-coordinate labels, grading and the pairing.
//!
//! A multiplet `A = (a_1, ..., a_r)` fixes everything the potential depends
//! on. The positions `λ_i` of the orbifold points never enter any formula, so
//! they are not modelled at all.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::GeometryError;

/// Orders `a_1 <= ... <= a_r` of the orbifold points, `r >= 3`, `a_i >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplet(Vec<u32>);

impl Multiplet {
    pub fn new(orders: Vec<u32>) -> Result<Self, GeometryError> {
        if orders.len() < 3 {
            return Err(GeometryError::TooFewPoints(orders.len()));
        }
        if let Some(&a) = orders.iter().find(|&&a| a < 2) {
            return Err(GeometryError::OrderTooSmall(a));
        }
        if orders.windows(2).any(|w| w[0] > w[1]) {
            return Err(GeometryError::Unsorted(orders));
        }
        Ok(Self(orders))
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    /// Number of orbifold points `r`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Order of the 1-based sector `i`.
    pub fn order(&self, sector: usize) -> u32 {
        self.0[sector - 1]
    }

    pub fn classify(&self) -> MultipletClass {
        let a = &self.0;
        if a[1] >= 3 {
            MultipletClass::General
        } else if a[2] >= 3 {
            MultipletClass::SemiGeneral
        } else {
            MultipletClass::NonGeneral
        }
    }
}

impl FromStr for Multiplet {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let orders = s
            .split(',')
            .map(|part| {
                let part = part.trim();
                part.parse::<u32>()
                    .map_err(|_| GeometryError::Parse(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(orders)
    }
}

impl fmt::Display for Multiplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MultipletClass {
    /// `a_2 >= 3`.
    General,
    /// `a_1 = a_2 = 2`, `a_3 >= 3`.
    SemiGeneral,
    /// `a_1 = a_2 = a_3 = 2`.
    NonGeneral,
}

/// Label of a flat coordinate.
///
/// Sectors and indices are 1-based, matching `t_{i,j}` with
/// `1 <= i <= r`, `1 <= j <= a_i - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoordLabel {
    /// `t_1`, dual to the unit.
    Unit,
    Twisted {
        sector: usize,
        index: u32,
    },
    /// `t_{μ_A}`, dual to the point class.
    Point,
}

impl CoordLabel {
    pub fn twisted(sector: usize, index: u32) -> Self {
        CoordLabel::Twisted { sector, index }
    }

    pub fn is_twisted(self) -> bool {
        matches!(self, CoordLabel::Twisted { .. })
    }
}

impl fmt::Display for CoordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordLabel::Unit => f.write_str("1"),
            CoordLabel::Twisted { sector, index } => write!(f, "({sector},{index})"),
            CoordLabel::Point => f.write_str("mu"),
        }
    }
}

impl FromStr for CoordLabel {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "1" => return Ok(CoordLabel::Unit),
            "mu" => return Ok(CoordLabel::Point),
            _ => {}
        }
        let inner = s
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| GeometryError::Parse(s.to_string()))?;
        let (i, j) = inner
            .split_once(',')
            .ok_or_else(|| GeometryError::Parse(s.to_string()))?;
        let sector = i
            .trim()
            .parse()
            .map_err(|_| GeometryError::Parse(s.to_string()))?;
        let index = j
            .trim()
            .parse()
            .map_err(|_| GeometryError::Parse(s.to_string()))?;
        Ok(CoordLabel::Twisted { sector, index })
    }
}

/// Grading data and pairing of the rank-`μ_A` Frobenius manifold.
///
/// Degrees are kept twice: as exact rationals for reporting and as integers
/// scaled by `L = lcm(a_1, ..., a_r)` so that the Euler constraint can be
/// checked without rational arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geometry {
    multiplet: Multiplet,
    mu: usize,
    chi: BigRational,
    labels: Vec<CoordLabel>,
    /// Twisted labels in canonical order; position = exponent-vector slot.
    twisted: Vec<(usize, u32)>,
    /// Offset of `(i, 1)` in `twisted`, per sector.
    sector_offset: Vec<usize>,
    lcm: i64,
    /// `L * deg(t_{i,j})` per twisted slot.
    weights: Vec<i64>,
    /// `L * chi`.
    chi_scaled: i64,
}

impl Geometry {
    pub fn new(multiplet: Multiplet) -> Self {
        let orders = multiplet.orders();
        let lcm = orders.iter().fold(1i64, |l, &a| l.lcm(&(a as i64)));
        let mut twisted = Vec::new();
        let mut sector_offset = Vec::with_capacity(orders.len());
        let mut weights = Vec::new();
        for (k, &a) in orders.iter().enumerate() {
            sector_offset.push(twisted.len());
            for j in 1..a {
                twisted.push((k + 1, j));
                weights.push((a - j) as i64 * (lcm / a as i64));
            }
        }
        let mu = 2 + twisted.len();
        let chi_scaled = 2 * lcm + orders.iter().map(|&a| lcm / a as i64 - lcm).sum::<i64>();
        let chi = BigRational::new(BigInt::from(chi_scaled), BigInt::from(lcm));

        let mut labels = Vec::with_capacity(mu);
        labels.push(CoordLabel::Unit);
        labels.extend(twisted.iter().map(|&(i, j)| CoordLabel::twisted(i, j)));
        labels.push(CoordLabel::Point);

        Self {
            multiplet,
            mu,
            chi,
            labels,
            twisted,
            sector_offset,
            lcm,
            weights,
            chi_scaled,
        }
    }

    pub fn multiplet(&self) -> &Multiplet {
        &self.multiplet
    }

    /// Rank `μ_A = 2 + Σ (a_k - 1)`.
    pub fn mu(&self) -> usize {
        self.mu
    }

    /// Orbifold Euler number `χ_A = 2 + Σ (1/a_k - 1)`.
    pub fn chi(&self) -> &BigRational {
        &self.chi
    }

    pub fn sectors(&self) -> usize {
        self.multiplet.len()
    }

    pub fn order(&self, sector: usize) -> u32 {
        self.multiplet.order(sector)
    }

    pub fn classify(&self) -> MultipletClass {
        self.multiplet.classify()
    }

    /// All labels in canonical order `(Unit, (1,1), ..., (r,a_r-1), Point)`.
    pub fn labels(&self) -> &[CoordLabel] {
        &self.labels
    }

    /// Number of twisted coordinates, `μ_A - 2`.
    pub fn twisted_len(&self) -> usize {
        self.twisted.len()
    }

    /// `(sector, index)` of a twisted slot.
    pub fn twisted_at(&self, slot: usize) -> (usize, u32) {
        self.twisted[slot]
    }

    /// Sector (1-based) owning a twisted slot.
    pub fn sector_of_slot(&self, slot: usize) -> usize {
        self.twisted[slot].0
    }

    /// Slot of `t_{i,j}`, or `None` if `(i, j)` is out of range.
    pub fn slot(&self, sector: usize, index: u32) -> Option<usize> {
        if sector == 0 || sector > self.sectors() {
            return None;
        }
        let a = self.order(sector);
        if index == 0 || index >= a {
            return None;
        }
        Some(self.sector_offset[sector - 1] + index as usize - 1)
    }

    /// Slot of a twisted label (`None` for Unit/Point or invalid labels).
    pub fn label_slot(&self, label: CoordLabel) -> Option<usize> {
        match label {
            CoordLabel::Twisted { sector, index } => self.slot(sector, index),
            _ => None,
        }
    }

    /// Slots belonging to the 1-based sector.
    pub fn sector_slots(&self, sector: usize) -> std::ops::Range<usize> {
        let start = self.sector_offset[sector - 1];
        start..start + self.order(sector) as usize - 1
    }

    pub fn is_valid(&self, label: CoordLabel) -> bool {
        match label {
            CoordLabel::Twisted { sector, index } => self.slot(sector, index).is_some(),
            _ => true,
        }
    }

    pub fn label_index(&self, label: CoordLabel) -> Option<usize> {
        match label {
            CoordLabel::Unit => Some(0),
            CoordLabel::Point => Some(self.mu - 1),
            t => self.label_slot(t).map(|s| s + 1),
        }
    }

    /// `lcm(a_1, ..., a_r)`, the common denominator of all degrees.
    pub fn lcm(&self) -> i64 {
        self.lcm
    }

    /// `L * deg(t_{i,j})` for each twisted slot.
    pub fn scaled_weights(&self) -> &[i64] {
        &self.weights
    }

    /// `L * χ_A`.
    pub fn scaled_chi(&self) -> i64 {
        self.chi_scaled
    }

    /// Scaled degree of a label: `L` for the unit, `0` for the point.
    pub fn scaled_degree(&self, label: CoordLabel) -> i64 {
        match label {
            CoordLabel::Unit => self.lcm,
            CoordLabel::Point => 0,
            t => self.label_slot(t).map_or(0, |s| self.weights[s]),
        }
    }

    /// Degree of the coordinate under the Euler field. The point coordinate is
    /// given degree 0; `e^{m t_{μ}}` carries `m·χ_A` instead.
    pub fn degree(&self, label: CoordLabel) -> BigRational {
        BigRational::new(
            BigInt::from(self.scaled_degree(label)),
            BigInt::from(self.lcm),
        )
    }

    /// The partner `τ` with `η^{στ} != 0`.
    pub fn dual(&self, label: CoordLabel) -> CoordLabel {
        match label {
            CoordLabel::Unit => CoordLabel::Point,
            CoordLabel::Point => CoordLabel::Unit,
            CoordLabel::Twisted { sector, index } => CoordLabel::Twisted {
                sector,
                index: self.order(sector) - index,
            },
        }
    }

    /// `η(∂_u, ∂_v)`.
    pub fn pairing(&self, u: CoordLabel, v: CoordLabel) -> BigRational {
        use CoordLabel::*;
        match (u, v) {
            (Unit, Point) | (Point, Unit) => BigRational::one(),
            (
                Twisted {
                    sector: i1,
                    index: j1,
                },
                Twisted {
                    sector: i2,
                    index: j2,
                },
            ) if i1 == i2 && j1 + j2 == self.order(i1) => {
                BigRational::new(BigInt::one(), BigInt::from(self.order(i1)))
            }
            _ => BigRational::zero(),
        }
    }

    /// `η^{uv}`, the entries of the inverse matrix.
    pub fn pairing_inverse(&self, u: CoordLabel, v: CoordLabel) -> BigRational {
        if self.dual(u) != v {
            return BigRational::zero();
        }
        match u {
            CoordLabel::Twisted { sector, .. } => {
                BigRational::from_integer(BigInt::from(self.order(sector)))
            }
            _ => BigRational::one(),
        }
    }

    /// `η^{σ σ*}` for the unique dual partner.
    pub fn inverse_weight(&self, label: CoordLabel) -> BigRational {
        self.pairing_inverse(label, self.dual(label))
    }
}

impl From<Multiplet> for Geometry {
    fn from(m: Multiplet) -> Self {
        Geometry::new(m)
    }
}
