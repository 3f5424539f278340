//! In-memory 3D volume representation and elementary statistics.
//!
//! A [`Volume`] couples a dense scalar [`Grid`] with its acquisition
//! geometry: voxel spacing in millimeters, a 4x4 voxel-to-world affine, and
//! the anatomical orientation code derived from that affine. Volumes are
//! immutable after construction and safe to share across threads; every
//! operation here is a pure function.

use crate::error::{Error, Result};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};

/// Minimum ratio between the largest and second-largest component of an
/// affine column for the column to have a well-defined dominant world axis.
pub const ORIENTATION_DOMINANCE_RATIO: f64 = 1.05;

/// One of the six anatomical directions a voxel axis can point to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisDirection {
    Right,
    Left,
    Anterior,
    Posterior,
    Superior,
    Inferior,
}

impl AxisDirection {
    pub fn letter(self) -> char {
        match self {
            AxisDirection::Right => 'R',
            AxisDirection::Left => 'L',
            AxisDirection::Anterior => 'A',
            AxisDirection::Posterior => 'P',
            AxisDirection::Superior => 'S',
            AxisDirection::Inferior => 'I',
        }
    }

    fn from_letter(c: char) -> Option<AxisDirection> {
        Some(match c {
            'R' => AxisDirection::Right,
            'L' => AxisDirection::Left,
            'A' => AxisDirection::Anterior,
            'P' => AxisDirection::Posterior,
            'S' => AxisDirection::Superior,
            'I' => AxisDirection::Inferior,
            _ => return None,
        })
    }

    /// World axis this direction lives on (0 = R/L, 1 = A/P, 2 = S/I).
    pub fn world_axis(self) -> usize {
        match self {
            AxisDirection::Right | AxisDirection::Left => 0,
            AxisDirection::Anterior | AxisDirection::Posterior => 1,
            AxisDirection::Superior | AxisDirection::Inferior => 2,
        }
    }

    /// +1 if the direction points along the positive world axis (R, A, S).
    pub fn sign(self) -> f64 {
        match self {
            AxisDirection::Right | AxisDirection::Anterior | AxisDirection::Superior => 1.0,
            _ => -1.0,
        }
    }

    fn from_world(axis: usize, positive: bool) -> AxisDirection {
        match (axis, positive) {
            (0, true) => AxisDirection::Right,
            (0, false) => AxisDirection::Left,
            (1, true) => AxisDirection::Anterior,
            (1, false) => AxisDirection::Posterior,
            (2, true) => AxisDirection::Superior,
            (2, false) => AxisDirection::Inferior,
            _ => unreachable!("world axis out of range"),
        }
    }
}

/// Three-letter anatomical axis code: the world direction each voxel axis
/// points to. There are 48 valid codes (one letter per distinct axis pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Orientation(pub [AxisDirection; 3]);

impl Orientation {
    pub const RAS: Orientation = Orientation([
        AxisDirection::Right,
        AxisDirection::Anterior,
        AxisDirection::Superior,
    ]);

    /// Parse a code such as "RAS" or "LPS". The three letters must cover the
    /// three distinct world axes.
    pub fn from_code(code: &str) -> Result<Orientation> {
        let invalid = || Error::InvalidOrientationCode {
            code: code.to_string(),
        };
        let chars: Vec<char> = code.chars().collect();
        if chars.len() != 3 {
            return Err(invalid());
        }
        let mut dirs = [AxisDirection::Right; 3];
        for (i, c) in chars.iter().enumerate() {
            dirs[i] = AxisDirection::from_letter(*c).ok_or_else(invalid)?;
        }
        let mut seen = [false; 3];
        for d in dirs {
            let w = d.world_axis();
            if seen[w] {
                return Err(invalid());
            }
            seen[w] = true;
        }
        Ok(Orientation(dirs))
    }

    pub fn code(&self) -> String {
        self.0.iter().map(|d| d.letter()).collect()
    }

    pub fn is_ras(&self) -> bool {
        *self == Orientation::RAS
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.code())
    }
}

/// 4x4 voxel-to-world transform in millimeters (row-major).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine(pub [[f64; 4]; 4]);

impl Affine {
    pub fn identity() -> Affine {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Affine(m)
    }

    /// Diagonal scaling affine (no rotation, zero translation); the identity
    /// orientation is RAS.
    pub fn diagonal(spacing: [f64; 3]) -> Affine {
        let mut m = [[0.0; 4]; 4];
        for a in 0..3 {
            m[a][a] = spacing[a];
        }
        m[3][3] = 1.0;
        Affine(m)
    }

    /// Map a voxel index to world coordinates.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
        }
        out
    }

    /// `self * other` as 4x4 matrices.
    pub fn compose(&self, other: &Affine) -> Affine {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for (k, row) in other.0.iter().enumerate() {
                    acc += self.0[i][k] * row[j];
                }
                out[i][j] = acc;
            }
        }
        Affine(out)
    }

    /// Column `j` of the rotational/scaling part.
    pub fn column(&self, j: usize) -> [f64; 3] {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn translation(&self) -> [f64; 3] {
        self.column(3)
    }

    pub fn max_abs_diff(&self, other: &Affine) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

/// Derive the anatomical code from an affine by taking the dominant world
/// axis of each column. `min_ratio > 1` additionally requires the dominant
/// component to exceed the runner-up by that factor (oblique guard);
/// `min_ratio = 1.0` only rejects exact ties.
pub fn orientation_from_affine(affine: &Affine, min_ratio: f64) -> Result<Orientation> {
    let mut dirs = [AxisDirection::Right; 3];
    let mut claimed: [Option<usize>; 3] = [None; 3];
    for j in 0..3 {
        let col = affine.column(j);
        let mags = [col[0].abs(), col[1].abs(), col[2].abs()];
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| mags[b].partial_cmp(&mags[a]).unwrap());
        let (first, second) = (order[0], order[1]);
        let ratio = if mags[second] > 0.0 {
            mags[first] / mags[second]
        } else {
            f64::INFINITY
        };
        if !(ratio >= min_ratio) || mags[first] == 0.0 {
            return Err(Error::IndeterminateOrientation {
                axis: j,
                ratio,
                min_ratio,
            });
        }
        if let Some(prev) = claimed[first] {
            return Err(Error::DegenerateAffine { a: prev, b: j });
        }
        claimed[first] = Some(j);
        dirs[j] = AxisDirection::from_world(first, col[first] > 0.0);
    }
    Ok(Orientation(dirs))
}

/// Axis-aligned voxel box, inclusive lower / exclusive upper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: [usize; 3],
    pub upper: [usize; 3],
}

impl BoundingBox {
    pub fn shape(&self) -> [usize; 3] {
        [
            self.upper[0] - self.lower[0],
            self.upper[1] - self.lower[1],
            self.upper[2] - self.lower[2],
        ]
    }
}

/// A 3D scalar volume with geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    grid: Grid,
    spacing: [f64; 3],
    orientation: Orientation,
    affine: Affine,
    id: String,
}

impl Volume {
    /// Construct a volume, validating its invariants: positive finite
    /// spacing, finite data, and an affine with a well-defined axis code.
    /// The orientation is always derived from the affine, so the two can
    /// never disagree.
    pub fn new(grid: Grid, spacing: [f64; 3], affine: Affine, id: impl Into<String>) -> Result<Volume> {
        if !spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidSpacing { spacing });
        }
        if !affine.is_finite() {
            return Err(Error::IndeterminateOrientation {
                axis: 0,
                ratio: f64::NAN,
                min_ratio: 1.0,
            });
        }
        let nf = grid.non_finite_count();
        if nf > 0 {
            return Err(Error::NonFiniteValues { count: nf });
        }
        // Construction only needs an unambiguous code; the stricter oblique
        // guard belongs to reorientation.
        let orientation = orientation_from_affine(&affine, 1.0)?;
        Ok(Volume {
            grid,
            spacing,
            orientation,
            affine,
            id: id.into(),
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn shape(&self) -> [usize; 3] {
        self.grid.shape()
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    #[inline]
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    #[inline]
    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    #[inline]
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Volume {
        self.id = id.into();
        self
    }

    /// Replace the data grid, keeping geometry. The new grid must have the
    /// same shape and be finite.
    pub fn with_grid(&self, grid: Grid) -> Result<Volume> {
        if grid.shape() != self.grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.shape(),
                got: grid.shape(),
            });
        }
        let nf = grid.non_finite_count();
        if nf > 0 {
            return Err(Error::NonFiniteValues { count: nf });
        }
        Ok(Volume {
            grid,
            spacing: self.spacing,
            orientation: self.orientation,
            affine: self.affine,
            id: self.id.clone(),
        })
    }
}

/// Summary statistics of a volume. `std` is the population standard
/// deviation (divisor n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation percentile of all voxel values.
///
/// With the values sorted, the rank is `r = q * (n - 1)` and the result
/// interpolates between the values at `floor(r)` and `ceil(r)`.
pub fn percentile(volume: &Volume, q: f64) -> Result<f64> {
    percentile_of(volume.grid().as_slice(), q)
}

pub(crate) fn percentile_of(values: &[f32], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyVolume);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::FractionOutOfRange {
            value: q,
            low: 0.0,
            high: 1.0,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f32::total_cmp);
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac)
}

/// Population statistics, accumulated in 64-bit so the result does not
/// depend on traversal order more than rounding allows.
pub fn volume_stats(volume: &Volume) -> Result<VolumeStats> {
    let values = volume.grid().as_slice();
    if values.is_empty() {
        return Err(Error::EmptyVolume);
    }
    let n = values.len() as f64;
    let mut sum = 0.0f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        let v = v as f64;
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    let mean = sum / n;
    let mut ss = 0.0f64;
    for &v in values {
        let d = v as f64 - mean;
        ss += d * d;
    }
    Ok(VolumeStats {
        mean,
        std: (ss / n).sqrt(),
        min,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn test_volume(shape: [usize; 3], values: Vec<f32>) -> Volume {
        let grid = Grid::from_vec(shape, values).unwrap();
        Volume::new(grid, [1.0; 3], Affine::identity(), "test").unwrap()
    }

    #[test]
    fn orientation_codes_round_trip() {
        for code in ["RAS", "LPS", "PIR", "SLA", "IRP"] {
            assert_eq!(Orientation::from_code(code).unwrap().code(), code);
        }
        assert!(Orientation::from_code("RAB").is_err());
        assert!(Orientation::from_code("RRS").is_err()); // duplicate pair
        assert!(Orientation::from_code("RA").is_err());
    }

    #[test]
    fn orientation_derived_from_affine() {
        let mut m = Affine::identity();
        m.0[0][0] = -2.0; // x axis points Left
        m.0[1][1] = -1.0; // y axis points Posterior
        let v = Volume::new(Grid::filled([2, 2, 2], 0.0), [2.0, 1.0, 1.0], m, "t").unwrap();
        assert_eq!(v.orientation().code(), "LPS");
    }

    #[test]
    fn degenerate_affine_rejected() {
        let mut m = Affine::identity();
        m.0[0][1] = 1.0;
        m.0[1][1] = 0.0; // column 1 now also dominant on world x
        let err = Volume::new(Grid::filled([2, 2, 2], 0.0), [1.0; 3], m, "t");
        assert!(matches!(err, Err(Error::DegenerateAffine { .. })));
    }

    #[test]
    fn invariants_rejected() {
        let grid = Grid::filled([2, 2, 2], 1.0);
        assert!(matches!(
            Volume::new(grid.clone(), [0.0, 1.0, 1.0], Affine::identity(), "t"),
            Err(Error::InvalidSpacing { .. })
        ));
        let mut bad = Grid::filled([2, 2, 2], 1.0);
        bad.set(0, 0, 0, f32::NAN);
        bad.set(1, 0, 0, f32::INFINITY);
        assert!(matches!(
            Volume::new(bad, [1.0; 3], Affine::identity(), "t"),
            Err(Error::NonFiniteValues { count: 2 })
        ));
    }

    #[test]
    fn percentile_median_of_1_to_100() {
        let v = test_volume([10, 10, 1], (1..=100).map(|i| i as f32).collect());
        assert_eq!(percentile(&v, 0.5).unwrap(), 50.5);
    }

    #[test]
    fn percentile_of_constant_volume() {
        let v = test_volume([3, 3, 3], vec![7.0; 27]);
        for q in [0.0, 0.25, 0.5, 0.99, 1.0] {
            assert_eq!(percentile(&v, q).unwrap(), 7.0);
        }
    }

    #[test]
    fn percentile_matches_sort_oracle() {
        // Independent oracle: full sort plus linear interpolation.
        fn oracle(values: &[f32], q: f64) -> f64 {
            let mut s: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let r = q * (s.len() as f64 - 1.0);
            let lo = r.floor() as usize;
            let hi = r.ceil() as usize;
            s[lo] + (s[hi] - s[lo]) * (r - lo as f64)
        }
        let mut state = 123456789u64;
        let mut values = Vec::new();
        for _ in 0..125 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            values.push(((state >> 33) as f32) / (1u64 << 31) as f32 * 100.0 - 50.0);
        }
        let v = test_volume([5, 5, 5], values.clone());
        for q in [0.0, 0.13, 0.5, 0.9, 0.99, 1.0] {
            assert_eq!(percentile(&v, q).unwrap(), oracle(&values, q));
        }
    }

    #[test]
    fn percentile_rejects_bad_inputs() {
        let v = test_volume([2, 2, 2], vec![1.0; 8]);
        assert!(percentile(&v, -0.1).is_err());
        assert!(percentile(&v, 1.1).is_err());
        assert!(percentile_of(&[], 0.5).is_err());
    }

    #[test]
    fn stats_of_constant_volume() {
        let v = test_volume([4, 4, 4], vec![3.0; 64]);
        let s = volume_stats(&v).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.std, 0.0);
        assert_eq!((s.min, s.max), (3.0, 3.0));
    }

    #[test]
    fn stats_of_balanced_signs() {
        let mut values = vec![-1.0f32; 32];
        values.extend(vec![1.0f32; 32]);
        let v = test_volume([4, 4, 4], values);
        let s = volume_stats(&v).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.std, 1.0);
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let mut state = 42u64;
        let mut values = Vec::new();
        for _ in 0..512 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            values.push(((state >> 33) as f32) / (1u64 << 31) as f32 * 10.0 - 5.0);
        }
        let v = test_volume([8, 8, 8], values.clone());
        let s = volume_stats(&v).unwrap();
        // Two-pass oracle in f64.
        let n = values.len() as f64;
        let mean: f64 = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!((s.mean - mean).abs() <= 1e-6 * mean.abs().max(1.0));
        assert!((s.std - var.sqrt()).abs() <= 1e-6 * var.sqrt().max(1.0));
    }

    proptest! {
        #[test]
        fn percentile_monotone_in_q(
            values in proptest::collection::vec(-1e3f32..1e3, 8..64),
            q1 in 0.0f64..=1.0,
            q2 in 0.0f64..=1.0,
        ) {
            let n = values.len();
            let v = test_volume([n, 1, 1], values);
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(percentile(&v, lo).unwrap() <= percentile(&v, hi).unwrap());
        }

        #[test]
        fn percentile_extremes_are_min_max(
            values in proptest::collection::vec(-1e3f32..1e3, 8..64),
        ) {
            let n = values.len();
            let v = test_volume([n, 1, 1], values);
            let s = volume_stats(&v).unwrap();
            prop_assert_eq!(percentile(&v, 0.0).unwrap(), s.min);
            prop_assert_eq!(percentile(&v, 1.0).unwrap(), s.max);
            prop_assert!(s.std >= 0.0);
        }
    }
}
