//! Evenly spaced evaluation grids on `(0, 1]^d`.
//!
//! Axis `k` has `N_k` points at `m / N_k` for `m = 1..=N_k`; the origin is
//! never a grid point. Points are ordered by the last coordinate first, then
//! the one before it, and so on down to the first coordinate, so the first
//! coordinate varies fastest. This is the ordering under which the additive
//! kernel matrices factor into Kronecker products with the axis block in the
//! trailing factor.
//!
//! Indices are 0-based in this API. File formats and user-facing text use
//! the 1-based convention, i.e. `index + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct GridDesign {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl GridDesign {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(invalid("grid needs at least one axis"));
        }
        if let Some(k) = dims.iter().position(|&n| n == 0) {
            return Err(invalid(format!("axis {} has zero points", k + 1)));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut len: usize = 1;
        for &n in dims {
            strides.push(len);
            len = len
                .checked_mul(n)
                .ok_or_else(|| invalid("grid size overflows usize"))?;
        }
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            len,
        })
    }

    /// Dimension `d` of the domain.
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total number of points `N = prod N_k`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinate of the `m`-th (0-based) point along axis `k`.
    #[inline]
    pub fn axis_coordinate(&self, k: usize, m: usize) -> f64 {
        (m + 1) as f64 / self.dims[k] as f64
    }

    /// 0-based multi-index of linear index `j`.
    pub fn multi_index(&self, j: usize) -> Result<Vec<usize>> {
        self.check_linear(j)?;
        Ok(self.multi_index_unchecked(j))
    }

    pub(crate) fn multi_index_unchecked(&self, mut j: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dims.len());
        for &n in &self.dims {
            out.push(j % n);
            j /= n;
        }
        out
    }

    /// Linear index of a 0-based multi-index.
    pub fn index_of(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                actual: multi.len(),
            });
        }
        let mut j = 0;
        for (k, (&m, &n)) in multi.iter().zip(&self.dims).enumerate() {
            if m >= n {
                return Err(Error::OutOfRange(format!(
                    "axis {} index {} not below {}",
                    k + 1,
                    m,
                    n
                )));
            }
            j += m * self.strides[k];
        }
        Ok(j)
    }

    /// Coordinates of the point with linear index `j`.
    pub fn point_at(&self, j: usize) -> Result<Vec<f64>> {
        self.check_linear(j)?;
        let mut x = vec![0.0; self.dim()];
        self.point_into(j, &mut x);
        Ok(x)
    }

    /// Writes the coordinates of point `j` into `out` without bounds checks
    /// beyond the debug assertions.
    #[inline]
    pub fn point_into(&self, mut j: usize, out: &mut [f64]) {
        debug_assert!(j < self.len && out.len() == self.dims.len());
        for (k, &n) in self.dims.iter().enumerate() {
            out[k] = ((j % n) + 1) as f64 / n as f64;
            j /= n;
        }
    }

    /// All points, row-major `N x d`.
    pub fn coordinates(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.len * d];
        for (j, chunk) in out.chunks_exact_mut(d).enumerate() {
            self.point_into(j, chunk);
        }
        out
    }

    /// Locates a coordinate vector on the grid, if it is exactly a grid point.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut multi = Vec::with_capacity(x.len());
        for (k, &xk) in x.iter().enumerate() {
            let n = self.dims[k] as f64;
            let m = (xk * n).round() - 1.0;
            if m < 0.0 || m >= n || ((m + 1.0) / n - xk).abs() > 1e-12 {
                return None;
            }
            multi.push(m as usize);
        }
        self.index_of(&multi).ok()
    }

    fn check_linear(&self, j: usize) -> Result<()> {
        if j >= self.len {
            return Err(Error::OutOfRange(format!(
                "linear index {} not below {}",
                j, self.len
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for GridDesign {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        GridDesign::new(&dims)
    }
}

impl From<GridDesign> for Vec<usize> {
    fn from(g: GridDesign) -> Self {
        g.dims
    }
}

impl std::fmt::Display for GridDesign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}
