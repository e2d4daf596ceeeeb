//! Dense complex tensors and pairwise contraction.
//!
//! Data is stored row-major (last axis fastest). Contractions are lowered to
//! one matrix product after permuting the operands, so every contraction is
//! counted exactly by [`crate::flops`].

use faer::linalg::matmul::matmul as faer_matmul;
use faer::{Accum, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::flops;
use crate::C64;

/// Problems larger than this many multiply-adds use the rayon thread pool.
const PARALLEL_THRESHOLD: usize = 1 << 20;

/// Arbitrary-rank dense tensor of complex doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

fn volume(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero extent in shape {shape:?}")));
        }
        if volume(&shape) != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {} values, got {}",
                volume(&shape),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.iter().all(|&e| e > 0), "zero extent in {shape:?}");
        Self {
            shape: shape.to_vec(),
            data: vec![C64::new(0.0, 0.0); volume(shape)],
        }
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_real(shape: &[usize], values: &[f64]) -> Result<Self> {
        Self::new(
            shape.to_vec(),
            values.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut out = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for slot in out.data.iter_mut() {
            *slot = f(&idx);
            increment(&mut idx, shape);
        }
        out
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| {
            if i[0] == i[1] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &e)| {
                assert!(i < e, "index {i} out of bounds for extent {e}");
                acc * e + i
            })
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Number of rows and columns of a rank-2 tensor.
    pub fn dims2(&self) -> (usize, usize) {
        assert_eq!(self.rank(), 2, "expected a matrix, got shape {:?}", self.shape);
        (self.shape[0], self.shape[1])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        if volume(shape) != self.data.len() || shape.contains(&0) {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn scale(mut self, factor: C64) -> Self {
        self.data.iter_mut().for_each(|z| *z *= factor);
        self
    }

    pub fn conj(mut self) -> Self {
        self.data.iter_mut().for_each(|z| *z = z.conj());
        self
    }

    /// `self + factor * other`.
    pub fn axpy(mut self, factor: C64, other: &DenseTensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "cannot add {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += factor * y;
        }
        Ok(self)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.clone().axpy(C64::new(-1.0, 0.0), other)
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rank())?;
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let in_strides = strides(&self.shape);
        let perm_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();

        let mut data = Vec::with_capacity(self.data.len());
        let rank = shape.len();
        // The innermost axis is copied in a tight loop.
        let inner = shape[rank - 1];
        let inner_stride = perm_strides[rank - 1];
        let outer_shape = &shape[..rank - 1];
        let mut idx = vec![0usize; rank - 1];
        let outer_count = volume(outer_shape);
        for _ in 0..outer_count {
            let base: usize = idx.iter().zip(&perm_strides).map(|(i, s)| i * s).sum();
            data.extend((0..inner).map(|k| self.data[base + k * inner_stride]));
            increment(&mut idx, outer_shape);
        }
        Ok(Self { shape, data })
    }

    /// Slices `range` along `axis`.
    pub fn slice_axis(&self, axis: usize, range: std::ops::Range<usize>) -> Result<Self> {
        if axis >= self.rank() || range.end > self.shape[axis] || range.is_empty() {
            return Err(Error::Axes(format!(
                "bad slice {range:?} of axis {axis} for shape {:?}",
                self.shape
            )));
        }
        let outer = volume(&self.shape[..axis]);
        let extent = self.shape[axis];
        let inner = volume(&self.shape[axis + 1..]);
        let mut data = Vec::with_capacity(outer * range.len() * inner);
        for o in 0..outer {
            let start = (o * extent + range.start) * inner;
            let end = (o * extent + range.end) * inner;
            data.extend_from_slice(&self.data[start..end]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = range.len();
        Ok(Self { shape, data })
    }

    /// Concatenates `self` and `other` along `axis`.
    pub fn concat(&self, other: &DenseTensor, axis: usize) -> Result<Self> {
        let compatible = self.rank() == other.rank()
            && axis < self.rank()
            && self
                .shape
                .iter()
                .zip(&other.shape)
                .enumerate()
                .all(|(k, (a, b))| k == axis || a == b);
        if !compatible {
            return Err(Error::Shape(format!(
                "cannot concatenate {:?} and {:?} along axis {axis}",
                self.shape, other.shape
            )));
        }
        let outer = volume(&self.shape[..axis]);
        let inner = volume(&self.shape[axis + 1..]);
        let (ea, eb) = (self.shape[axis], other.shape[axis]);
        let mut data = Vec::with_capacity(self.len() + other.len());
        for o in 0..outer {
            data.extend_from_slice(&self.data[o * ea * inner..(o + 1) * ea * inner]);
            data.extend_from_slice(&other.data[o * eb * inner..(o + 1) * eb * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = ea + eb;
        Ok(Self { shape, data })
    }

    /// Conjugate transpose of a matrix.
    pub fn adjoint(&self) -> Self {
        let (m, n) = self.dims2();
        Self::from_fn(&[n, m], |i| self.data[i[1] * n + i[0]].conj())
    }

    pub fn transpose(&self) -> Self {
        let (m, n) = self.dims2();
        Self::from_fn(&[n, m], |i| self.data[i[1] * n + i[0]])
    }

    pub fn matmul(&self, other: &DenseTensor) -> Result<Self> {
        contract(self, other, &[(1, 0)])
    }

    pub(crate) fn as_mat(&self) -> MatRef<'_, C64> {
        let (m, n) = self.dims2();
        MatRef::from_row_major_slice(&self.data, m, n)
    }

    pub(crate) fn from_mat(m: MatRef<'_, C64>) -> Self {
        let (r, c) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            data.extend((0..c).map(|j| m[(i, j)]));
        }
        Self {
            shape: vec![r, c],
            data,
        }
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn check_permutation(perm: &[usize], rank: usize) -> Result<()> {
    let mut seen = vec![false; rank];
    if perm.len() != rank {
        return Err(Error::Axes(format!(
            "{perm:?} does not list all {rank} axes"
        )));
    }
    for &p in perm {
        if p >= rank || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Axes(format!("{perm:?} is not a permutation of 0..{rank}")));
        }
    }
    Ok(())
}

/// Row-major `out = a * b` for raw slices.
pub(crate) fn gemm(a: &[C64], b: &[C64], out: &mut [C64], m: usize, k: usize, n: usize) {
    flops::matmul(m, k, n);
    let lhs = MatRef::from_row_major_slice(a, m, k);
    let rhs = MatRef::from_row_major_slice(b, k, n);
    let dst = MatMut::from_row_major_slice_mut(out, m, n);
    let par = if m * n * k >= PARALLEL_THRESHOLD {
        Par::rayon(0)
    } else {
        Par::Seq
    };
    faer_matmul(dst, Accum::Replace, lhs, rhs, C64::new(1.0, 0.0), par);
}

struct Plan {
    perm_a: Vec<usize>,
    perm_b: Vec<usize>,
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
    shape: Vec<usize>,
}

fn plan(
    a: &DenseTensor,
    b: &DenseTensor,
    batch: &[(usize, usize)],
    axes: &[(usize, usize)],
) -> Result<Plan> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(x, y) in batch.iter().chain(axes) {
        if x >= a.rank() || y >= b.rank() {
            return Err(Error::Axes(format!(
                "pair ({x}, {y}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if std::mem::replace(&mut used_a[x], true) || std::mem::replace(&mut used_b[y], true) {
            return Err(Error::Axes(format!("axis repeated in pair ({x}, {y})")));
        }
        if a.shape[x] != b.shape[y] {
            return Err(Error::AxisMismatch {
                axis_a: x,
                extent_a: a.shape[x],
                axis_b: y,
                extent_b: b.shape[y],
            });
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&x| !used_a[x]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&y| !used_b[y]).collect();

    let perm_a: Vec<usize> = batch
        .iter()
        .map(|p| p.0)
        .chain(free_a.iter().copied())
        .chain(axes.iter().map(|p| p.0))
        .collect();
    let perm_b: Vec<usize> = batch
        .iter()
        .map(|p| p.1)
        .chain(axes.iter().map(|p| p.1))
        .chain(free_b.iter().copied())
        .collect();
    let ext = |t: &DenseTensor, ax: &mut dyn Iterator<Item = usize>| -> usize {
        ax.map(|x| t.shape[x]).product()
    };
    let shape = batch
        .iter()
        .map(|p| a.shape[p.0])
        .chain(free_a.iter().map(|&x| a.shape[x]))
        .chain(free_b.iter().map(|&y| b.shape[y]))
        .collect();
    Ok(Plan {
        batch: ext(a, &mut batch.iter().map(|p| p.0)),
        m: ext(a, &mut free_a.iter().copied()),
        k: ext(a, &mut axes.iter().map(|p| p.0)),
        n: ext(b, &mut free_b.iter().copied()),
        perm_a,
        perm_b,
        shape,
    })
}

/// Contracts `a` with `b` over the listed `(axis of a, axis of b)` pairs.
///
/// The result carries the unpaired axes of `a` followed by those of `b`.
pub fn contract(a: &DenseTensor, b: &DenseTensor, axes: &[(usize, usize)]) -> Result<DenseTensor> {
    contract_batched(a, b, &[], axes)
}

/// Contraction with shared, non-summed "batch" axes (a Hadamard product over
/// those indices). The result carries batch axes first (in the order given),
/// then the free axes of `a`, then those of `b`.
pub fn contract_batched(
    a: &DenseTensor,
    b: &DenseTensor,
    batch: &[(usize, usize)],
    axes: &[(usize, usize)],
) -> Result<DenseTensor> {
    let p = plan(a, b, batch, axes)?;
    let pa = a.permute(&p.perm_a)?;
    let pb = b.permute(&p.perm_b)?;
    let mut out = vec![C64::new(0.0, 0.0); p.batch * p.m * p.n];
    let (sa, sb, so) = (p.m * p.k, p.k * p.n, p.m * p.n);
    for t in 0..p.batch {
        gemm(
            &pa.data[t * sa..(t + 1) * sa],
            &pb.data[t * sb..(t + 1) * sb],
            &mut out[t * so..(t + 1) * so],
            p.m,
            p.k,
            p.n,
        );
    }
    Ok(DenseTensor {
        shape: p.shape,
        data: out,
    })
}

/// Matricizes `t`: rows combine `row_axes` (row-major), columns `col_axes`.
pub fn unfold(t: &DenseTensor, row_axes: &[usize], col_axes: &[usize]) -> Result<DenseTensor> {
    let perm: Vec<usize> = row_axes.iter().chain(col_axes).copied().collect();
    check_permutation(&perm, t.rank())?;
    let rows = row_axes.iter().map(|&x| t.shape[x]).product();
    let cols = col_axes.iter().map(|&x| t.shape[x]).product();
    t.permute(&perm)?.reshape(&[rows, cols])
}

/// Inverse of [`unfold`]: rebuilds a tensor of `shape` from its matricization.
pub fn fold(
    m: &DenseTensor,
    shape: &[usize],
    row_axes: &[usize],
    col_axes: &[usize],
) -> Result<DenseTensor> {
    let perm: Vec<usize> = row_axes.iter().chain(col_axes).copied().collect();
    check_permutation(&perm, shape.len())?;
    let permuted_shape: Vec<usize> = perm.iter().map(|&x| shape[x]).collect();
    let t = m.clone().reshape(&permuted_shape)?;
    let mut inverse = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inverse[p] = k;
    }
    t.permute(&inverse)
}
