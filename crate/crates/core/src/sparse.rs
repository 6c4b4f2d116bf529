//! Sparse symmetric storage, Dirichlet elimination and the solvers shared by
//! the diffusion, displacement, phase-field and indicator sub-problems.
//!
//! Matrices are stored in full (both triangles) compressed-row form so that
//! matrix-vector products need no special casing. The direct solver is an
//! envelope (skyline) Cholesky factorisation on a reverse Cuthill-McKee
//! ordering; the iterative fallback is conjugate gradients with a Jacobi
//! preconditioner.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};

/// Systems with at least this many unknowns use conjugate gradients under
/// [`SolverKind::Auto`].
pub const DIRECT_SOLVER_LIMIT: usize = 200_000;

/// Compressed-row sparse matrix with sorted column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given (per-row) column pattern. Rows are sorted
    /// and deduplicated.
    pub fn from_pattern(n: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), n, "pattern must have one entry per row");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            debug_assert!(row.iter().all(|&c| c < n));
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(n, rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut triplets = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &triplets)
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Accumulate into an existing entry of the pattern.
    ///
    /// Panics if `(i, j)` is outside the sparsity pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn set_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        a
    }

    /// Plain-text coordinate dump, one `row col value` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {j} {v:e}")?;
            }
        }
        Ok(())
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative residual `|Ax - b| / |b|` (absolute when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Direct below [`DIRECT_SOLVER_LIMIT`] unknowns, CG above.
    #[default]
    Auto,
    Direct,
    ConjugateGradient,
}

impl SolverKind {
    fn use_direct(self, n: usize) -> bool {
        match self {
            SolverKind::Auto => n < DIRECT_SOLVER_LIMIT,
            SolverKind::Direct => true,
            SolverKind::ConjugateGradient => false,
        }
    }
}

/// A symmetric linear system plus its Dirichlet constraints.
#[derive(Debug, Clone)]
pub struct SparseLinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Vec<(usize, f64)>,
}

impl SparseLinearSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        assert_eq!(matrix.dim(), rhs.len());
        Self {
            matrix,
            rhs,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraints(mut self, constraints: Vec<(usize, f64)>) -> Self {
        self.constraints = constraints;
        self
    }

    /// Symmetric elimination of the constraints: the right-hand side is
    /// shifted by the constrained columns, constrained rows and columns are
    /// zeroed and their diagonal set to one with the prescribed value as the
    /// right-hand side. The constraint list is consumed.
    pub fn apply_dirichlet(&mut self) -> Result<()> {
        let mask = constraint_mask(self.matrix.dim(), &self.constraints)?;
        shift_rhs(&self.matrix, &mask, &mut self.rhs);
        eliminate(&mut self.matrix, &mask);
        self.constraints.clear();
        Ok(())
    }

    /// Solve with the requested backend; constraints still pending are
    /// applied first.
    pub fn solve(&self, kind: SolverKind) -> Result<Vec<f64>> {
        let mut system = self.clone();
        if !system.constraints.is_empty() {
            system.apply_dirichlet()?;
        }
        let n = system.matrix.dim();
        if kind.use_direct(n) {
            let factor = SkylineCholesky::factor(&system.matrix)?;
            Ok(factor.solve(&system.rhs))
        } else {
            pcg(&system.matrix, &system.rhs, None, 1e-10, 10 * n.max(10))
        }
    }
}

/// Per-dof prescribed value (None = free). Conflicting duplicates are errors.
pub fn constraint_mask(n: usize, constraints: &[(usize, f64)]) -> Result<Vec<Option<f64>>> {
    let mut mask: Vec<Option<f64>> = vec![None; n];
    for &(dof, value) in constraints {
        match mask[dof] {
            Some(prev) if prev != value => {
                return Err(Error::ConflictingConstraint {
                    dof,
                    first: prev,
                    second: value,
                })
            }
            _ => mask[dof] = Some(value),
        }
    }
    Ok(mask)
}

/// `b_i -= sum_j a_ij g_j` for free rows, `b_i = g_i` for constrained rows.
fn shift_rhs(a: &CsrMatrix, mask: &[Option<f64>], b: &mut [f64]) {
    for i in 0..a.dim() {
        if let Some(g) = mask[i] {
            b[i] = g;
            continue;
        }
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if let Some(g) = mask[j] {
                b[i] -= v * g;
            }
        }
    }
}

fn eliminate(a: &mut CsrMatrix, mask: &[Option<f64>]) {
    for i in 0..a.n {
        let row_fixed = mask[i].is_some();
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k];
            if row_fixed || mask[j].is_some() {
                a.values[k] = if i == j { 1.0 } else { 0.0 };
            }
        }
    }
}

/// Reusable solver for a fixed matrix and fixed set of constrained dofs,
/// with prescribed values and right-hand side supplied per solve.
#[derive(Debug, Clone)]
pub struct ConstrainedSolver {
    original: CsrMatrix,
    fixed: Vec<bool>,
    backend: Backend,
}

#[derive(Debug, Clone)]
enum Backend {
    Direct(SkylineCholesky),
    Iterative { eliminated: CsrMatrix, tol: f64 },
}

impl ConstrainedSolver {
    pub fn new(matrix: CsrMatrix, fixed_dofs: &[usize], kind: SolverKind) -> Result<Self> {
        let n = matrix.dim();
        let mut fixed = vec![false; n];
        let mut mask = vec![None; n];
        for &d in fixed_dofs {
            fixed[d] = true;
            mask[d] = Some(0.0);
        }
        let mut eliminated = matrix.clone();
        eliminate(&mut eliminated, &mask);
        let backend = if kind.use_direct(n) {
            Backend::Direct(SkylineCholesky::factor(&eliminated)?)
        } else {
            Backend::Iterative {
                eliminated,
                tol: 1e-10,
            }
        };
        Ok(Self {
            original: matrix,
            fixed,
            backend,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.original
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    /// Relative residual over the free rows, measured against the
    /// right-hand side after the constrained columns are moved across.
    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut r2 = 0.0;
        let mut b2 = 0.0;
        for i in 0..self.original.dim() {
            if self.fixed[i] {
                continue;
            }
            let (cols, vals) = self.original.row(i);
            let mut ax = 0.0;
            let mut shifted = rhs[i];
            for (&j, &v) in cols.iter().zip(vals) {
                ax += v * x[j];
                if self.fixed[j] {
                    shifted -= v * x[j];
                }
            }
            r2 += (ax - rhs[i]).powi(2);
            b2 += shifted * shifted;
        }
        if b2 > 0.0 {
            (r2 / b2).sqrt()
        } else {
            r2.sqrt()
        }
    }

    /// Required relative residual of this backend.
    pub fn tolerance(&self) -> f64 {
        match self.backend {
            Backend::Direct(_) => 1e-10,
            Backend::Iterative { .. } => 1e-8,
        }
    }

    /// [`solve`](Self::solve) followed by a residual check.
    pub fn solve_checked(&self, rhs: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        let x = self.solve(rhs, values)?;
        let residual = self.residual(&x, rhs);
        if !(residual <= self.tolerance()) {
            return Err(Error::ResidualContract {
                residual,
                tolerance: self.tolerance(),
            });
        }
        Ok(x)
    }

    /// Solve `A x = b` with `x_d = values[d]` on the constrained dofs
    /// (entries of `values` on free dofs are ignored).
    pub fn solve(&self, rhs: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        let mask: Vec<Option<f64>> = self
            .fixed
            .iter()
            .zip(values)
            .map(|(&f, &v)| f.then_some(v))
            .collect();
        let mut b = rhs.to_vec();
        shift_rhs(&self.original, &mask, &mut b);
        let mut x = match &self.backend {
            Backend::Direct(f) => f.solve(&b),
            Backend::Iterative { eliminated, tol } => {
                let n = b.len();
                pcg(eliminated, &b, None, *tol, 10 * n.max(10))?
            }
        };
        for (xi, m) in x.iter_mut().zip(&mask) {
            if let Some(g) = m {
                *xi = *g;
            }
        }
        Ok(x)
    }
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut neighbours = Vec::new();

    let bfs_levels = |start: usize, visited_outer: &[bool]| -> (usize, usize) {
        // (eccentricity, a min-degree node of the last level)
        let mut level = vec![usize::MAX; n];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            let lv = level[v];
            if lv > level[last] || (lv == level[last] && degree[v] < degree[last]) {
                last = v;
            }
            for &w in a.row(v).0 {
                if level[w] == usize::MAX && !visited_outer[w] {
                    level[w] = lv + 1;
                    queue.push_back(w);
                }
            }
        }
        (level[last], last)
    };

    while order.len() < n {
        // Lowest-degree unvisited node, then walk to a pseudo-peripheral node.
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node exists");
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }

        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(a.row(v).0.iter().copied().filter(|&w| !visited[w]));
            neighbours.sort_by_key(|&w| (degree[w], w));
            for &w in &neighbours {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A Pᵀ = L Lᵀ` stored row-wise from each row's
/// first structural non-zero to the diagonal.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first = vec![0usize; n];
        for (i, f) in first.iter_mut().enumerate() {
            let old = perm[i];
            *f = a.row(old).0.iter().map(|&c| inv[c]).filter(|&c| c <= i).min().unwrap_or(i);
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offset[n]];
        for i in 0..n {
            let (cols, vals) = a.row(perm[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    values[offset[i] + j - first[i]] += v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_start = offset[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = values[row_start + j - fi];
                let ri = &values[row_start + k0 - fi..row_start + j - fi];
                let rj = &values[offset[j] + k0 - fj..offset[j] + j - fj];
                s -= dot(ri, rj);
                let djj = values[offset[j + 1] - 1];
                values[row_start + j - fi] = s / djj;
            }
            let row = &values[row_start..row_start + i - fi];
            let d = values[row_start + i - fi] - dot(row, row);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    dof: perm[i],
                    value: d,
                });
            }
            values[row_start + i - fi] = d.sqrt();
        }
        Ok(Self {
            perm,
            first,
            offset,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward: L y = b
        for i in 0..n {
            let fi = self.first[i];
            let start = self.offset[i];
            let row = &self.values[start..start + i - fi];
            let s = y[i] - dot(row, &y[fi..i]);
            y[i] = s / self.values[start + i - fi];
        }
        // backward: Lᵀ x = y (column sweep over rows of L)
        for i in (0..n).rev() {
            let fi = self.first[i];
            let start = self.offset[i];
            let xi = y[i] / self.values[start + i - fi];
            y[i] = xi;
            if xi != 0.0 {
                for (k, &l) in self.values[start..start + i - fi].iter().enumerate() {
                    y[fi + k] -= l * xi;
                }
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients to `|r| <= tol |b|`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite { dof: i, value: d })
            }
        })
        .collect::<Result<_>>()?;
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = norm2(&r);
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::CgBreakdown {
                iteration: it,
                reason: format!("non-positive curvature pᵀAp = {pap:e}"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm2(&r) / bnorm;
    if res <= tol {
        Ok(x)
    } else {
        Err(Error::CgNoConvergence {
            iterations: max_iter,
            residual: res,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting; test oracle only.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn random_spd(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                if rng.gen::<f64>() < density {
                    let v = rng.gen_range(-1.0..1.0);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
        }
        for i in 0..n {
            let s: f64 = a[i].iter().map(|v: &f64| v.abs()).sum();
            a[i][i] = s + 1.0 + rng.gen::<f64>();
        }
        a
    }

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let sys = SparseLinearSystem::new(CsrMatrix::identity(5), vec![1.0, -2.0, 3.0, 0.5, 7.0]);
        for kind in [SolverKind::Direct, SolverKind::ConjugateGradient] {
            assert_eq!(sys.solve(kind).unwrap(), vec![1.0, -2.0, 3.0, 0.5, 7.0]);
        }
    }

    #[test]
    fn laplacian_point_load_matches_closed_form() {
        // -u'' = delta at node m, u_0 = u_{n+1} = 0 on a unit-spaced grid:
        // u_i = i (n+1-m)/(n+1) for i <= m, m (n+1-i)/(n+1) otherwise.
        let n = 49;
        let m = 17;
        let a = laplacian_1d(n);
        let mut b = vec![0.0; n];
        b[m - 1] = 1.0;
        let exact: Vec<f64> = (1..=n)
            .map(|i| {
                let (i, m, np1) = (i as f64, m as f64, (n + 1) as f64);
                if i <= m {
                    i * (np1 - m) / np1
                } else {
                    m * (np1 - i) / np1
                }
            })
            .collect();
        let sys = SparseLinearSystem::new(a, b);
        for kind in [SolverKind::Direct, SolverKind::ConjugateGradient] {
            let x = sys.solve(kind).unwrap();
            for (xi, ei) in x.iter().zip(&exact) {
                assert!((xi - ei).abs() < 1e-10, "{kind:?}: {xi} vs {ei}");
            }
        }
    }

    #[test]
    fn all_dofs_constrained_to_zero() {
        let sys = SparseLinearSystem::new(laplacian_1d(6), vec![1.0; 6])
            .with_constraints((0..6).map(|d| (d, 0.0)).collect());
        assert_eq!(sys.solve(SolverKind::Direct).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn two_by_two_with_one_constraint() {
        // [4 1; 1 3] x = [1, 2], x_0 = 0.5  =>  3 x_1 = 2 - 0.5
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let sys = SparseLinearSystem::new(a, vec![1.0, 2.0]).with_constraints(vec![(0, 0.5)]);
        let x = sys.solve(SolverKind::Direct).unwrap();
        assert_eq!(x[0], 0.5);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conflicting_constraints_rejected() {
        let mut sys = SparseLinearSystem::new(laplacian_1d(3), vec![0.0; 3])
            .with_constraints(vec![(1, 1.0), (1, 2.0)]);
        assert!(matches!(
            sys.apply_dirichlet(),
            Err(Error::ConflictingConstraint { dof: 1, .. })
        ));
        // identical duplicates are fine
        let mut ok = SparseLinearSystem::new(laplacian_1d(3), vec![0.0; 3])
            .with_constraints(vec![(1, 1.0), (1, 1.0)]);
        ok.apply_dirichlet().unwrap();
    }

    #[test]
    fn random_spd_with_constraints_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let a = random_spd(n, 0.15, &mut rng);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut fixed: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            fixed.swap(i, rng.gen_range(0..=i));
        }
        let constraints: Vec<(usize, f64)> = fixed[..10]
            .iter()
            .map(|&d| (d, rng.gen_range(-2.0..2.0)))
            .collect();

        // dense oracle: eliminate by substitution on the reduced system
        let is_fixed = |d: usize| constraints.iter().find(|c| c.0 == d).map(|c| c.1);
        let free: Vec<usize> = (0..n).filter(|&d| is_fixed(d).is_none()).collect();
        let ar: Vec<Vec<f64>> = free
            .iter()
            .map(|&i| free.iter().map(|&j| a[i][j]).collect())
            .collect();
        let br: Vec<f64> = free
            .iter()
            .map(|&i| b[i] - constraints.iter().map(|&(j, g)| a[i][j] * g).sum::<f64>())
            .collect();
        let xr = dense_solve(ar, br);
        let mut expected = vec![0.0; n];
        for (k, &i) in free.iter().enumerate() {
            expected[i] = xr[k];
        }
        for &(d, g) in &constraints {
            expected[d] = g;
        }

        let sys = SparseLinearSystem::new(CsrMatrix::from_dense(&a), b.clone())
            .with_constraints(constraints.clone());
        for kind in [SolverKind::Direct, SolverKind::ConjugateGradient] {
            let x = sys.solve(kind).unwrap();
            for (xi, ei) in x.iter().zip(&expected) {
                assert!((xi - ei).abs() < 1e-10, "{kind:?}");
            }
            for &(d, g) in &constraints {
                if kind == SolverKind::Direct {
                    assert_eq!(x[d].to_bits(), g.to_bits());
                }
            }
        }

        let cs = ConstrainedSolver::new(
            CsrMatrix::from_dense(&a),
            &constraints.iter().map(|c| c.0).collect::<Vec<_>>(),
            SolverKind::Direct,
        )
        .unwrap();
        let mut values = vec![0.0; n];
        for &(d, g) in &constraints {
            values[d] = g;
        }
        let x = cs.solve(&b, &values).unwrap();
        for (xi, ei) in x.iter().zip(&expected) {
            assert!((xi - ei).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let sys = SparseLinearSystem::new(a, vec![1.0, 0.0]);
        assert!(sys.solve(SolverKind::ConjugateGradient).is_err());
    }

    #[test]
    fn rcm_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CsrMatrix::from_dense(&random_spd(40, 0.1, &mut rng));
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn coordinate_dump_lists_every_entry() {
        let a = laplacian_1d(3);
        let mut buf = Vec::new();
        a.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + a.nnz());
        assert!(text.contains("0 1 -1e0"));
    }
}
