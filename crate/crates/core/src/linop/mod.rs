//! Square linear operators that are only touched through matrix-vector products.

mod generate;
pub mod mtx;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate, GeneratorFamily, GeneratorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Dense,
    Diagonal,
    SparseCoo,
    RankOneDecay,
    GramProduct,
    ScaledProjection,
    Composite,
}

/// Row-major `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: entries.len() });
        }
        Ok(Self { n, entries })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for k in 0..n {
            for j in 0..n {
                entries.push(f(k, j));
            }
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.entries[k * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, j: usize, value: f64) {
        self.entries[k * self.n + j] = value;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.n..(k + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.get(j, j)).collect()
    }

    /// Exact symmetry, no tolerance.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|k| (0..k).all(|j| self.get(k, j) == self.get(j, k)))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries.iter().map(|a| a * a).sum()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(k), v);
        }
    }
}

/// Coordinate-format square matrix; duplicate entries are summed on apply.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CooMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, rows: Vec::new(), cols: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if row >= self.n || col >= self.n {
            return Err(Error::Dimension { expected: self.n, got: row.max(col) + 1 });
        }
        self.rows.push(row);
        self.cols.push(col);
        self.values.push(value);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().zip(&self.cols).zip(&self.values).map(|((&r, &c), &v)| (r, c, v))
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, c, a) in self.triplets() {
            out[r] += a * v[c];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (r, c, a) in self.triplets() {
            if r == c {
                d[r] += a;
            }
        }
        d
    }
}

/// Compressed sparse rows for the rectangular factor `C` of `CᵗC`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows: rows.len(), cols, row_ptr, col_idx, values }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// `Cᵗ(C v)` without forming `CᵗC`.
    fn gram_apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.rows {
            let range = self.row_range(i);
            let t: f64 = self.col_idx[range.clone()]
                .iter()
                .zip(&self.values[range.clone()])
                .map(|(&c, &a)| a * v[c])
                .sum();
            if t != 0.0 {
                for (&c, &a) in self.col_idx[range.clone()].iter().zip(&self.values[range]) {
                    out[c] += a * t;
                }
            }
        }
    }

    fn column_norms_sq(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.cols];
        for (&c, &a) in self.col_idx.iter().zip(&self.values) {
            d[c] += a * a;
        }
        d
    }
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

enum Repr {
    Dense(DenseMatrix),
    Diagonal(Vec<f64>),
    SparseCoo(CooMatrix),
    /// `scale · x xᵗ`
    RankOne { x: Vec<f64>, scale: f64 },
    /// `CᵗC` for an `m × n` factor `C`
    Gram(CsrMatrix),
    /// `scale · Q Qᵗ` with `Q` stored column-major, `n × rank`, orthonormal columns
    ScaledProjection { basis: Vec<f64>, rank: usize, scale: f64 },
    Sum(Vec<ImplicitOperator>),
    Scaled(f64, ImplicitOperator),
    Func(Box<ApplyFn>),
}

/// Immutable, cheaply clonable handle to a square operator.
#[derive(Clone)]
pub struct ImplicitOperator {
    dim: usize,
    repr: Arc<Repr>,
    rank_hint: Option<usize>,
    symmetric: bool,
}

impl fmt::Debug for ImplicitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitOperator")
            .field("dim", &self.dim)
            .field("kind", &self.kind())
            .field("rank_hint", &self.rank_hint)
            .finish()
    }
}

impl ImplicitOperator {
    fn wrap(dim: usize, repr: Repr, symmetric: bool) -> Self {
        Self { dim, repr: Arc::new(repr), rank_hint: None, symmetric }
    }

    pub fn dense(m: DenseMatrix) -> Self {
        let sym = m.is_symmetric();
        Self::wrap(m.n, Repr::Dense(m), sym)
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let rank = d.iter().filter(|&&x| x != 0.0).count();
        Self::wrap(d.len(), Repr::Diagonal(d), true).with_rank_hint(rank)
    }

    pub fn sparse(m: CooMatrix) -> Self {
        let sym = coo_is_symmetric(&m);
        Self::wrap(m.n, Repr::SparseCoo(m), sym)
    }

    /// `scale · x xᵗ`.
    pub fn rank_one(x: Vec<f64>, scale: f64) -> Self {
        let n = x.len();
        let nonzero = scale != 0.0 && x.iter().any(|&v| v != 0.0);
        Self::wrap(n, Repr::RankOne { x, scale }, true).with_rank_hint(usize::from(nonzero))
    }

    /// `CᵗC` for the given `m × n` factor.
    pub fn gram(c: CsrMatrix) -> Self {
        Self::wrap(c.cols, Repr::Gram(c), true)
    }

    /// `scale · Q Qᵗ` for a column-major `n × rank` basis with orthonormal columns.
    pub fn scaled_projection(n: usize, basis: Vec<f64>, rank: usize, scale: f64) -> Result<Self> {
        if basis.len() != n * rank {
            return Err(Error::Dimension { expected: n * rank, got: basis.len() });
        }
        let hint = if scale == 0.0 { 0 } else { rank };
        Ok(Self::wrap(n, Repr::ScaledProjection { basis, rank, scale }, true).with_rank_hint(hint))
    }

    pub fn sum(parts: Vec<ImplicitOperator>) -> Result<Self> {
        let n = parts.first().map(|p| p.dim).ok_or_else(|| Error::InvalidArgument("empty sum".into()))?;
        if let Some(p) = parts.iter().find(|p| p.dim != n) {
            return Err(Error::Dimension { expected: n, got: p.dim });
        }
        let sym = parts.iter().all(|p| p.symmetric);
        Ok(Self::wrap(n, Repr::Sum(parts), sym))
    }

    pub fn scaled(self, s: f64) -> Self {
        let n = self.dim;
        let sym = self.symmetric;
        let rank = if s == 0.0 { Some(0) } else { self.rank_hint };
        let mut op = Self::wrap(n, Repr::Scaled(s, self), sym);
        op.rank_hint = rank;
        op
    }

    /// Operator backed by an arbitrary closure writing `A v` into its second argument.
    pub fn from_fn<F>(n: usize, symmetric: bool, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::wrap(n, Repr::Func(Box::new(f)), symmetric)
    }

    pub fn with_rank_hint(mut self, rank: usize) -> Self {
        self.rank_hint = Some(rank);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rank known from construction, when the backing structure makes it exact.
    pub fn rank_hint(&self) -> Option<usize> {
        self.rank_hint
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn kind(&self) -> OperatorKind {
        match &*self.repr {
            Repr::Dense(_) => OperatorKind::Dense,
            Repr::Diagonal(_) => OperatorKind::Diagonal,
            Repr::SparseCoo(_) => OperatorKind::SparseCoo,
            Repr::RankOne { .. } => OperatorKind::RankOneDecay,
            Repr::Gram(_) => OperatorKind::GramProduct,
            Repr::ScaledProjection { .. } => OperatorKind::ScaledProjection,
            Repr::Sum(_) | Repr::Scaled(..) | Repr::Func(_) => OperatorKind::Composite,
        }
    }

    /// `out = A v`. Both slices must have length `dim`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: v.len() });
        }
        if out.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: out.len() });
        }
        self.apply_unchecked(v, out);
        Ok(())
    }

    fn apply_unchecked(&self, v: &[f64], out: &mut [f64]) {
        match &*self.repr {
            Repr::Dense(m) => m.apply_into(v, out),
            Repr::Diagonal(d) => {
                for ((o, &a), &x) in out.iter_mut().zip(d).zip(v) {
                    *o = a * x;
                }
            }
            Repr::SparseCoo(m) => m.apply_into(v, out),
            Repr::RankOne { x, scale } => {
                let t = scale * dot(x, v);
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi * t;
                }
            }
            Repr::Gram(c) => c.gram_apply_into(v, out),
            Repr::ScaledProjection { basis, rank, scale } => {
                let n = self.dim;
                out.fill(0.0);
                for k in 0..*rank {
                    let q = &basis[k * n..(k + 1) * n];
                    let t = scale * dot(q, v);
                    for (o, &qi) in out.iter_mut().zip(q) {
                        *o += qi * t;
                    }
                }
            }
            Repr::Sum(parts) => {
                out.fill(0.0);
                let mut tmp = vec![0.0; self.dim];
                for p in parts {
                    p.apply_unchecked(v, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += t;
                    }
                }
            }
            Repr::Scaled(s, inner) => {
                inner.apply_unchecked(v, out);
                out.iter_mut().for_each(|o| *o *= s);
            }
            Repr::Func(f) => f(v, out),
        }
    }

    /// Diagonal entries, read off the structure when possible and otherwise
    /// recovered with `n` unit-vector products.
    pub fn diagonal_entries(&self) -> Vec<f64> {
        match &*self.repr {
            Repr::Dense(m) => m.diagonal(),
            Repr::Diagonal(d) => d.clone(),
            Repr::SparseCoo(m) => m.diagonal(),
            Repr::RankOne { x, scale } => x.iter().map(|v| scale * v * v).collect(),
            Repr::Gram(c) => c.column_norms_sq(),
            Repr::ScaledProjection { basis, rank, scale } => {
                let n = self.dim;
                let mut d = vec![0.0; n];
                for k in 0..*rank {
                    for (di, q) in d.iter_mut().zip(&basis[k * n..(k + 1) * n]) {
                        *di += scale * q * q;
                    }
                }
                d
            }
            Repr::Scaled(s, inner) => inner.diagonal_entries().into_iter().map(|d| s * d).collect(),
            Repr::Sum(_) | Repr::Func(_) => {
                let n = self.dim;
                let mut e = vec![0.0; n];
                let mut col = vec![0.0; n];
                (0..n)
                    .map(|j| {
                        e[j] = 1.0;
                        self.apply_unchecked(&e, &mut col);
                        e[j] = 0.0;
                        col[j]
                    })
                    .collect()
            }
        }
    }

    /// Materialize through `n` matvecs (column by column).
    pub fn to_dense(&self) -> DenseMatrix {
        if let Repr::Dense(m) = &*self.repr {
            return m.clone();
        }
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_unchecked(&e, &mut col);
            e[j] = 0.0;
            for (k, &c) in col.iter().enumerate() {
                out.set(k, j, c);
            }
        }
        out
    }

    pub fn as_dense(&self) -> Option<&DenseMatrix> {
        match &*self.repr {
            Repr::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&CooMatrix> {
        match &*self.repr {
            Repr::SparseCoo(m) => Some(m),
            _ => None,
        }
    }
}

/// `A v` as a fresh vector.
pub fn matvec(op: &ImplicitOperator, v: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite input entry at index {i}")));
    }
    let mut out = vec![0.0; op.dim()];
    op.apply_into(v, &mut out)?;
    Ok(out)
}

/// `Σ_j a_jj`, the ground truth every estimator is scored against.
pub fn exact_trace(op: &ImplicitOperator) -> f64 {
    match &*op.repr {
        Repr::RankOne { x, scale } => scale * dot(x, x),
        Repr::Gram(c) => c.frobenius_norm_sq(),
        Repr::Sum(parts) => parts.iter().map(exact_trace).sum(),
        Repr::Scaled(s, inner) => s * exact_trace(inner),
        _ => op.diagonal_entries().iter().sum(),
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn coo_is_symmetric(m: &CooMatrix) -> bool {
    use std::collections::HashMap;
    let mut acc: HashMap<(usize, usize), f64> = HashMap::with_capacity(m.nnz());
    for (r, c, v) in m.triplets() {
        *acc.entry((r, c)).or_insert(0.0) += v;
    }
    acc.iter()
        .all(|(&(r, c), &v)| r == c || acc.get(&(c, r)).copied().unwrap_or(0.0) == v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_action() {
        let op = ImplicitOperator::diagonal(vec![1.0, 2.0, 3.0]);
        assert_eq!(matvec(&op, &[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(exact_trace(&op), 6.0);
        assert_eq!(op.kind(), OperatorKind::Diagonal);
    }

    #[test]
    fn dimension_mismatch() {
        let op = ImplicitOperator::diagonal(vec![1.0, 2.0]);
        assert!(matches!(matvec(&op, &[1.0]), Err(Error::Dimension { expected: 2, got: 1 })));
        assert!(matvec(&op, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn coo_duplicates_sum() {
        let mut m = CooMatrix::new(2);
        m.push(0, 0, 1.0).unwrap();
        m.push(0, 0, 2.0).unwrap();
        m.push(1, 0, 4.0).unwrap();
        m.push(0, 1, 4.0).unwrap();
        let op = ImplicitOperator::sparse(m);
        assert!(op.is_symmetric());
        assert_eq!(matvec(&op, &[1.0, 0.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(exact_trace(&op), 3.0);
        assert!(CooMatrix::new(2).push(2, 0, 1.0).is_err());
    }

    #[test]
    fn dense_roundtrip_through_matvecs() {
        let m = DenseMatrix::from_fn(3, |k, j| (k * 3 + j) as f64);
        let op = ImplicitOperator::dense(m.clone());
        assert!(!op.is_symmetric());
        let via_fn = ImplicitOperator::from_fn(3, false, move |v, out| m.apply_into(v, out));
        assert_eq!(via_fn.to_dense(), op.to_dense());
        assert_eq!(exact_trace(&via_fn), 0.0 + 4.0 + 8.0);
    }

    #[test]
    fn composite_trace_and_apply() {
        let a = ImplicitOperator::diagonal(vec![1.0, 2.0]);
        let b = ImplicitOperator::rank_one(vec![1.0, 1.0], 1.0);
        let s = ImplicitOperator::sum(vec![a, b.scaled(2.0)]).unwrap();
        assert_eq!(s.kind(), OperatorKind::Composite);
        assert_eq!(exact_trace(&s), 3.0 + 4.0);
        assert_eq!(matvec(&s, &[1.0, 0.0]).unwrap(), vec![3.0, 2.0]);
        assert_eq!(s.diagonal_entries(), vec![3.0, 4.0]);
    }

    #[test]
    fn sum_rejects_mixed_dims() {
        let a = ImplicitOperator::diagonal(vec![1.0, 2.0]);
        let b = ImplicitOperator::diagonal(vec![1.0]);
        assert!(ImplicitOperator::sum(vec![a, b]).is_err());
        assert!(ImplicitOperator::sum(vec![]).is_err());
    }
}
