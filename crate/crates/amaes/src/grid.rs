use crate::error::{Error, Result};

/// Dense 3D grid of `f32` values, indexed `(x, y, z)`.
///
/// Storage is x-fastest contiguous: element `(x, y, z)` lives at
/// `x + nx * (y + ny * z)`. This matches the NIfTI on-disk layout, so raw
/// dumps of [`Grid::as_slice`] are reproducible byte-for-byte.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    data: Vec<f32>,
    shape: [usize; 3],
}

impl Grid {
    /// Build a grid from raw data in x-fastest order.
    pub fn from_vec(shape: [usize; 3], data: Vec<f32>) -> Result<Grid> {
        let len = shape[0]
            .checked_mul(shape[1])
            .and_then(|n| n.checked_mul(shape[2]))
            .ok_or(Error::DataLengthMismatch {
                len: data.len(),
                shape,
            })?;
        if data.len() != len {
            return Err(Error::DataLengthMismatch {
                len: data.len(),
                shape,
            });
        }
        Ok(Grid { data, shape })
    }

    /// Grid filled with a constant value.
    pub fn filled(shape: [usize; 3], value: f32) -> Grid {
        Grid {
            data: vec![value; shape[0] * shape[1] * shape[2]],
            shape,
        }
    }

    /// Grid computed from voxel indices.
    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f32) -> Grid {
        let mut data = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for z in 0..shape[2] {
            for y in 0..shape[1] {
                for x in 0..shape[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Grid { data, shape }
    }

    #[inline]
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.shape[0] && y < self.shape[1] && z < self.shape[2]);
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f32) {
        let i = self.index(x, y, z);
        self.data[i] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Storage-order iteration over `((x, y, z), value)`.
    pub fn indexed_iter(&self) -> impl Iterator<Item = ([usize; 3], f32)> + '_ {
        let [nx, ny, _] = self.shape;
        self.data.iter().enumerate().map(move |(i, &v)| {
            let x = i % nx;
            let y = (i / nx) % ny;
            let z = i / (nx * ny);
            ([x, y, z], v)
        })
    }

    /// Number of non-finite (NaN or infinite) values.
    pub fn non_finite_count(&self) -> usize {
        self.data.iter().filter(|v| !v.is_finite()).count()
    }

    /// Trilinear sample at a continuous index, clamping out-of-range
    /// coordinates to the volume edge.
    pub fn trilinear_clamp(&self, pos: [f64; 3]) -> f32 {
        let mut c = [0.0f64; 3];
        for a in 0..3 {
            c[a] = pos[a].clamp(0.0, (self.shape[a] - 1) as f64);
        }
        self.trilinear_inner(c)
    }

    /// Trilinear sample at a continuous index; neighbors outside the grid
    /// contribute zero.
    pub fn trilinear_zero(&self, pos: [f64; 3]) -> f32 {
        let lo = [
            pos[0].floor() as i64,
            pos[1].floor() as i64,
            pos[2].floor() as i64,
        ];
        let fr = [
            pos[0] - lo[0] as f64,
            pos[1] - lo[1] as f64,
            pos[2] - lo[2] as f64,
        ];
        let mut acc = 0.0f64;
        for dz in 0..2i64 {
            for dy in 0..2i64 {
                for dx in 0..2i64 {
                    let w = weight(fr[0], dx) * weight(fr[1], dy) * weight(fr[2], dz);
                    if w == 0.0 {
                        continue;
                    }
                    let p = [lo[0] + dx, lo[1] + dy, lo[2] + dz];
                    let v = self.get_or_zero(p);
                    acc += w * v as f64;
                }
            }
        }
        acc as f32
    }

    /// Nearest-neighbor sample at a continuous index; outside the grid
    /// returns zero. Ties round half away from zero.
    pub fn nearest_zero(&self, pos: [f64; 3]) -> f32 {
        let p = [
            pos[0].round() as i64,
            pos[1].round() as i64,
            pos[2].round() as i64,
        ];
        self.get_or_zero(p)
    }

    #[inline]
    fn get_or_zero(&self, p: [i64; 3]) -> f32 {
        for a in 0..3 {
            if p[a] < 0 || p[a] >= self.shape[a] as i64 {
                return 0.0;
            }
        }
        self.at(p[0] as usize, p[1] as usize, p[2] as usize)
    }

    fn trilinear_inner(&self, pos: [f64; 3]) -> f32 {
        let mut i0 = [0usize; 3];
        let mut i1 = [0usize; 3];
        let mut fr = [0.0f64; 3];
        for a in 0..3 {
            let f = pos[a].floor();
            let lo = f as usize;
            i0[a] = lo.min(self.shape[a] - 1);
            i1[a] = (lo + 1).min(self.shape[a] - 1);
            fr[a] = pos[a] - f;
        }
        let mut acc = 0.0f64;
        for (dz, wz) in [(i0[2], 1.0 - fr[2]), (i1[2], fr[2])] {
            for (dy, wy) in [(i0[1], 1.0 - fr[1]), (i1[1], fr[1])] {
                for (dx, wx) in [(i0[0], 1.0 - fr[0]), (i1[0], fr[0])] {
                    let w = wx * wy * wz;
                    if w == 0.0 {
                        continue;
                    }
                    acc += w * self.at(dx, dy, dz) as f64;
                }
            }
        }
        acc as f32
    }
}

#[inline]
fn weight(frac: f64, hi: i64) -> f64 {
    if hi == 0 {
        1.0 - frac
    } else {
        frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_is_x_fastest() {
        let g = Grid::from_fn([2, 3, 4], |x, y, z| (x + 10 * y + 100 * z) as f32);
        assert_eq!(g.as_slice()[0], 0.0);
        assert_eq!(g.as_slice()[1], 1.0); // x moves first
        assert_eq!(g.as_slice()[2], 10.0); // then y
        assert_eq!(g.at(1, 2, 3), 321.0);
        assert_eq!(g.index(1, 2, 3), 1 + 2 * (2 + 3 * 3));
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Grid::from_vec([2, 2, 2], vec![0.0; 7]).is_err());
    }

    #[test]
    fn trilinear_exact_at_integer_points() {
        let g = Grid::from_fn([3, 3, 3], |x, y, z| (x * 9 + y * 3 + z) as f32);
        for z in 0..3 {
            for y in 0..3 {
                for x in 0..3 {
                    let p = [x as f64, y as f64, z as f64];
                    assert_eq!(g.trilinear_clamp(p), g.at(x, y, z));
                    assert_eq!(g.trilinear_zero(p), g.at(x, y, z));
                }
            }
        }
    }

    #[test]
    fn trilinear_is_exact_on_linear_ramps() {
        let g = Grid::from_fn([4, 4, 4], |x, y, z| (x as f32) + 2.0 * y as f32 + 3.0 * z as f32);
        let p = [1.25, 2.5, 0.75];
        let expect = 1.25 + 2.0 * 2.5 + 3.0 * 0.75;
        assert!((g.trilinear_clamp(p) - expect as f32).abs() < 1e-6);
    }

    #[test]
    fn clamp_holds_at_edges() {
        let g = Grid::from_fn([2, 2, 2], |x, _, _| x as f32);
        assert_eq!(g.trilinear_clamp([5.0, 0.0, 0.0]), 1.0);
        assert_eq!(g.trilinear_clamp([-3.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn zero_fill_outside() {
        let g = Grid::filled([2, 2, 2], 7.0);
        assert_eq!(g.trilinear_zero([-1.0, 0.0, 0.0]), 0.0);
        // Halfway out: one neighbor inside at weight 0.5.
        assert!((g.trilinear_zero([-0.5, 0.0, 0.0]) - 3.5).abs() < 1e-6);
        assert_eq!(g.nearest_zero([2.0, 0.0, 0.0]), 0.0);
        assert_eq!(g.nearest_zero([1.2, 0.4, 0.0]), 7.0);
    }
}
