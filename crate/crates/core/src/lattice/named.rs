use nalgebra::DMatrix;

use super::{LatticeBasis, LatticePoint, Quantizer};
use crate::{round_half_even, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    IntegerZn,
    CheckerboardDn,
    GossetE8,
    HexagonalA2,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::IntegerZn => "zn",
            LatticeKind::CheckerboardDn => "dn",
            LatticeKind::GossetE8 => "e8",
            LatticeKind::HexagonalA2 => "a2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zn" | "z" => Ok(LatticeKind::IntegerZn),
            "dn" | "d" => Ok(LatticeKind::CheckerboardDn),
            "e8" => Ok(LatticeKind::GossetE8),
            "a2" => Ok(LatticeKind::HexagonalA2),
            other => Err(Error::BadSpec(format!("unknown lattice '{other}'"))),
        }
    }
}

/// One of the classical lattices with an exact fast quantizer.
#[derive(Debug, Clone)]
pub struct NamedLattice {
    kind: LatticeKind,
    basis: LatticeBasis,
}

impl NamedLattice {
    pub fn new(kind: LatticeKind, dim: usize) -> Result<Self> {
        let basis = match (kind, dim) {
            (LatticeKind::IntegerZn, n) if n >= 1 => LatticeBasis::identity(n),
            (LatticeKind::CheckerboardDn, n) if n >= 2 => dn_generator(n),
            (LatticeKind::GossetE8, 8) => e8_generator(),
            (LatticeKind::HexagonalA2, 2) => a2_generator(),
            (kind, n) => {
                return Err(Error::BadSpec(format!(
                    "lattice {} is not defined in dimension {n}",
                    kind.name()
                )))
            }
        };
        Ok(Self { kind, basis })
    }

    pub fn zn(n: usize) -> Result<Self> {
        Self::new(LatticeKind::IntegerZn, n)
    }

    pub fn dn(n: usize) -> Result<Self> {
        Self::new(LatticeKind::CheckerboardDn, n)
    }

    pub fn e8() -> Self {
        Self::new(LatticeKind::GossetE8, 8).expect("E8 is 8-dimensional")
    }

    pub fn a2() -> Self {
        Self::new(LatticeKind::HexagonalA2, 2).expect("A2 is 2-dimensional")
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    /// Exact nearest lattice point.
    pub fn quantize(&self, y: &[f64]) -> Result<LatticePoint> {
        self.basis.check_len(y)?;
        let embedding = match self.kind {
            LatticeKind::IntegerZn => y.iter().map(|&v| round_half_even(v)).collect(),
            LatticeKind::CheckerboardDn => nearest_dn_embedding(y),
            LatticeKind::GossetE8 => nearest_e8_embedding(y),
            LatticeKind::HexagonalA2 => return Ok(nearest_a2(&self.basis, y)),
        };
        let coords = self
            .basis
            .coordinates(&embedding)
            .into_iter()
            .map(|t| t.round() as i64)
            .collect();
        Ok(LatticePoint { coords, embedding })
    }
}

impl Quantizer for NamedLattice {
    fn dim(&self) -> usize {
        NamedLattice::dim(self)
    }

    fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    fn quantize(&self, y: &[f64]) -> Result<LatticePoint> {
        NamedLattice::quantize(self, y)
    }
}

/// Nearest point of `Zⁿ` (round half to even per coordinate).
pub fn nearest_point_zn(y: &[f64]) -> LatticePoint {
    let coords: Vec<i64> = y.iter().map(|&v| round_half_even(v) as i64).collect();
    let embedding = coords.iter().map(|&c| c as f64).collect();
    LatticePoint { coords, embedding }
}

/// Nearest point of `Dn = {x ∈ Zⁿ : Σx even}`, `n ≥ 2`.
pub fn nearest_point_dn(y: &[f64]) -> Result<LatticePoint> {
    if y.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: y.len(),
        });
    }
    NamedLattice::dn(y.len())?.quantize(y)
}

/// Nearest point of `E8 = D8 ∪ (D8 + ½·1)`.
pub fn nearest_point_e8(y: &[f64]) -> Result<LatticePoint> {
    if y.len() != 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: y.len(),
        });
    }
    NamedLattice::e8().quantize(y)
}

/// Nearest point of the hexagonal lattice with unit minimum distance.
pub fn nearest_point_a2(y: &[f64]) -> Result<LatticePoint> {
    if y.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: y.len(),
        });
    }
    Ok(nearest_a2(&a2_generator(), y))
}

/// Round every coordinate; if the sum comes out odd, move the coordinate with
/// the largest rounding error to its other neighbouring integer.
pub(crate) fn nearest_dn_embedding(y: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = y.iter().map(|&v| round_half_even(v)).collect();
    let sum: f64 = z.iter().sum();
    if sum.rem_euclid(2.0) != 0.0 {
        let mut worst = 0;
        let mut worst_err = -1.0;
        for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
            let err = (yi - zi).abs();
            if err > worst_err {
                worst = i;
                worst_err = err;
            }
        }
        z[worst] += if y[worst] >= z[worst] { 1.0 } else { -1.0 };
    }
    z
}

pub(crate) fn nearest_e8_embedding(y: &[f64]) -> Vec<f64> {
    let even = nearest_dn_embedding(y);
    let shifted: Vec<f64> = y.iter().map(|v| v - 0.5).collect();
    let odd: Vec<f64> = nearest_dn_embedding(&shifted)
        .into_iter()
        .map(|v| v + 0.5)
        .collect();
    let dist = |z: &[f64]| -> f64 { z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum() };
    if dist(&odd) < dist(&even) {
        odd
    } else {
        even
    }
}

fn nearest_a2(basis: &LatticeBasis, y: &[f64]) -> LatticePoint {
    let center = basis
        .babai_round(y)
        .expect("length checked by caller")
        .coords;
    let mut best: Option<(f64, LatticePoint)> = None;
    for du in -1..=1 {
        for dv in -1..=1 {
            let coords = vec![center[0] + du, center[1] + dv];
            let embedding = basis.embed(&coords);
            let p = LatticePoint { coords, embedding };
            let d = p.distance_squared(y);
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                best = Some((d, p));
            }
        }
    }
    best.expect("nine candidates").1
}

fn from_columns(n: usize, columns: &[Vec<f64>]) -> LatticeBasis {
    let m = DMatrix::from_fn(n, n, |r, c| columns[c][r]);
    LatticeBasis::new(m).expect("classical generators are unimodular up to scale")
}

/// `Dn` generator: columns `(-1,-1,0,…)`, `(1,-1,0,…)`, `(0,1,-1,0,…)`, …
fn dn_generator(n: usize) -> LatticeBasis {
    let mut columns = vec![vec![0.0; n]; n];
    columns[0][0] = -1.0;
    columns[0][1] = -1.0;
    for (j, col) in columns.iter_mut().enumerate().skip(1) {
        col[j - 1] = 1.0;
        col[j] = -1.0;
    }
    from_columns(n, &columns)
}

/// `E8` generator whose columns are roots (norm √2, det 1) and whose dual
/// basis, the rows of the inverse, also consists of roots. Babai coordinates
/// are therefore within 2 of the exact nearest point's coordinates (dual norm
/// √2 times covering radius 1, plus ½).
pub fn e8_generator() -> LatticeBasis {
    let h = 0.5;
    let columns = vec![
        vec![0.0, 0.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        vec![h, h, h, -h, h, -h, h, h],
        vec![h, h, h, h, h, -h, -h, h],
        vec![h, h, -h, -h, -h, h, -h, h],
        vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    ];
    from_columns(8, &columns)
}

/// `A2` generator: columns `(1, 0)` and `(½, √3/2)`.
fn a2_generator() -> LatticeBasis {
    from_columns(2, &[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])
}
