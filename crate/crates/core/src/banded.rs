//! Banded direct solvers with bandwidth-reducing reordering.
//!
//! Factorizations are LAPACK-band style, column-major band storage, generic
//! over the scalar field. Desk-scale problems (structured meshes up to a
//! few 10^4 unknowns) stay banded after reverse Cuthill-McKee, which keeps
//! the solver self-contained across real and complex fields.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CscMatrix;

const MAX_BAND_BYTES: usize = 2 << 30;

/// Reverse Cuthill-McKee ordering of a square sparsity pattern.
/// Returns `perm` with `perm[old] = new`.
pub fn rcm_permutation<T: Scalar>(a: &CscMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    loop {
        // Start each component from a minimum-degree node.
        let start = match (0..n).filter(|&v| !visited[v]).min_by_key(|&v| degree[v]) {
            Some(s) => s,
            None => break,
        };
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_unstable_by_key(|&u| degree[u]);
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    let mut perm = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    perm
}

fn band_limits<T: Scalar>(a: &CscMatrix<T>) -> (usize, usize) {
    let (mut bl, mut bu) = (0usize, 0usize);
    for (i, j, _) in a.iter() {
        if i >= j {
            bl = bl.max(i - j);
        } else {
            bu = bu.max(j - i);
        }
    }
    (bl, bu)
}

/// LU factorization with partial pivoting of a banded matrix.
pub struct BandedLu<T> {
    n: usize,
    bl: usize,
    bu: usize, // effective upper bandwidth including pivoting fill
    ld: usize,
    data: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(a: &CscMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::argument("banded LU needs a square matrix".to_string()));
        }
        let n = a.nrows();
        let (bl, bu0) = band_limits(a);
        let bu = bu0 + bl; // room for pivoting fill
        let ld = bl + bu + 1;
        if ld.saturating_mul(n).saturating_mul(std::mem::size_of::<T>()) > MAX_BAND_BYTES {
            return Err(Error::numerical(format!(
                "band storage {ld} x {n} exceeds the memory budget; matrix is not desk-scale banded"
            )));
        }
        let mut data = vec![T::zero(); ld * n];
        for (i, j, v) in a.iter() {
            data[j * ld + (i + bu - j)] += v;
        }
        let mut piv = vec![0usize; n];

        for j in 0..n {
            let iend = (j + bl).min(n - 1);
            // Pivot search in column j, rows j..=iend.
            let col_j = j * ld + bu - j;
            let mut p = j;
            let mut pmag = data[col_j + j].modulus();
            for i in (j + 1)..=iend {
                let m = data[col_j + i].modulus();
                if m > pmag {
                    pmag = m;
                    p = i;
                }
            }
            piv[j] = p;
            if pmag == 0.0 {
                return Err(Error::numerical(format!("singular matrix: zero pivot at column {j}")));
            }
            let jend = (j + bu).min(n - 1);
            if p != j {
                for jj in j..=jend {
                    let base = jj * ld + bu - jj;
                    data.swap(base + j, base + p);
                }
            }
            // Multipliers and trailing update, column-contiguous.
            let pivot = data[col_j + j];
            let nrows_below = iend - j;
            if nrows_below == 0 {
                continue;
            }
            let inv = T::one() / pivot;
            let (left, right) = data.split_at_mut((j + 1) * ld);
            let mcol = &mut left[j * ld..];
            let moff = bu + 1; // offset of row j+1 in column j
            for r in 0..nrows_below {
                mcol[moff + r] *= inv;
            }
            let mcol = &left[j * ld..];
            for (dj, ucol) in right.chunks_exact_mut(ld).take(jend - j).enumerate() {
                let jj = j + 1 + dj;
                let ujj = ucol[bu + j - jj];
                if ujj == T::zero() {
                    continue;
                }
                let ustart = bu + j + 1 - jj;
                for r in 0..nrows_below {
                    ucol[ustart + r] -= mcol[moff + r] * ujj;
                }
            }
        }
        Ok(BandedLu { n, bl, bu, ld, data, piv })
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, bl, bu, ld) = (self.n, self.bl, self.bu, self.ld);
        for j in 0..n {
            x.swap(j, self.piv[j]);
            let xj = x[j];
            if xj == T::zero() {
                continue;
            }
            let iend = (j + bl).min(n - 1);
            let col = &self.data[j * ld..(j + 1) * ld];
            for i in (j + 1)..=iend {
                x[i] -= col[i + bu - j] * xj;
            }
        }
        for j in (0..n).rev() {
            let col = &self.data[j * ld..(j + 1) * ld];
            let xj = x[j] / col[bu];
            x[j] = xj;
            if xj == T::zero() {
                continue;
            }
            let istart = j.saturating_sub(bu);
            for i in istart..j {
                x[i] -= col[i + bu - j] * xj;
            }
        }
    }

    /// Solves `A^H x = b` from the factorization of `A`.
    pub fn solve_adjoint_in_place(&self, x: &mut [T]) {
        let (n, bl, bu, ld) = (self.n, self.bl, self.bu, self.ld);
        // U^H is lower triangular: forward substitution with column dots.
        for j in 0..n {
            let col = &self.data[j * ld..(j + 1) * ld];
            let istart = j.saturating_sub(bu);
            let mut acc = x[j];
            for i in istart..j {
                acc -= col[i + bu - j].conjugate() * x[i];
            }
            x[j] = acc / col[bu].conjugate();
        }
        // L^H with the row interchanges replayed in reverse.
        for j in (0..n).rev() {
            let iend = (j + bl).min(n - 1);
            let col = &self.data[j * ld..(j + 1) * ld];
            let mut acc = x[j];
            for i in (j + 1)..=iend {
                acc -= col[i + bu - j].conjugate() * x[i];
            }
            x[j] = acc;
            x.swap(j, self.piv[j]);
        }
    }
}

/// Cholesky factorization `A = L L^H` of a Hermitian positive-definite
/// banded matrix; stores the lower band of `L`.
pub struct BandedCholesky<T> {
    n: usize,
    bl: usize,
    ld: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedCholesky<T> {
    pub fn factor(a: &CscMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::argument("Cholesky needs a square matrix".to_string()));
        }
        let n = a.nrows();
        let (bl_low, bu_up) = band_limits(a);
        let bl = bl_low.max(bu_up);
        let ld = bl + 1;
        if ld.saturating_mul(n).saturating_mul(std::mem::size_of::<T>()) > MAX_BAND_BYTES {
            return Err(Error::numerical(format!(
                "band storage {ld} x {n} exceeds the memory budget; matrix is not desk-scale banded"
            )));
        }
        let mut data = vec![T::zero(); ld * n];
        for (i, j, v) in a.iter() {
            if i >= j {
                data[j * ld + (i - j)] += v;
            }
        }

        for j in 0..n {
            let iend = (j + bl).min(n - 1);
            let d = data[j * ld];
            let dre = d.re();
            if !(dre > 0.0) || d.im().abs() > 1e-10 * dre.abs().max(1.0) {
                return Err(Error::numerical(format!(
                    "matrix is not Hermitian positive definite (pivot {d:?} at column {j})"
                )));
            }
            let ljj = dre.sqrt();
            let nrows_below = iend - j;
            let (left, right) = data.split_at_mut((j + 1) * ld);
            let col = &mut left[j * ld..];
            col[0] = T::from_re(ljj);
            let inv = 1.0 / ljj;
            for r in 1..=nrows_below {
                col[r] = col[r].mul_real(inv);
            }
            let col = &left[j * ld..];
            for (dj, tcol) in right.chunks_exact_mut(ld).take(nrows_below).enumerate() {
                let jj = j + 1 + dj;
                let c = col[jj - j].conjugate();
                if c == T::zero() {
                    continue;
                }
                for i in jj..=iend {
                    tcol[i - jj] -= col[i - j] * c;
                }
            }
        }
        Ok(BandedCholesky { n, bl, ld, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `L y = x` in place.
    pub fn solve_lower_in_place(&self, x: &mut [T]) {
        let (n, bl, ld) = (self.n, self.bl, self.ld);
        for j in 0..n {
            let col = &self.data[j * ld..(j + 1) * ld];
            let xj = x[j] / col[0];
            x[j] = xj;
            if xj == T::zero() {
                continue;
            }
            let iend = (j + bl).min(n - 1);
            for i in (j + 1)..=iend {
                x[i] -= col[i - j] * xj;
            }
        }
    }

    /// `L^H y = x` in place.
    pub fn solve_upper_adjoint_in_place(&self, x: &mut [T]) {
        let (n, bl, ld) = (self.n, self.bl, self.ld);
        for j in (0..n).rev() {
            let col = &self.data[j * ld..(j + 1) * ld];
            let iend = (j + bl).min(n - 1);
            let mut acc = x[j];
            for i in (j + 1)..=iend {
                acc -= col[i - j].conjugate() * x[i];
            }
            x[j] = acc / col[0];
        }
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        self.solve_lower_in_place(x);
        self.solve_upper_adjoint_in_place(x);
    }

    /// `y = L^H x`.
    pub fn apply_upper_adjoint(&self, x: &[T]) -> Vec<T> {
        let (n, bl, ld) = (self.n, self.bl, self.ld);
        let mut y = vec![T::zero(); n];
        for j in 0..n {
            let col = &self.data[j * ld..(j + 1) * ld];
            let iend = (j + bl).min(n - 1);
            let mut acc = T::zero();
            for i in j..=iend {
                acc += col[i - j].conjugate() * x[i];
            }
            y[j] = acc;
        }
        y
    }

    /// `y = L x`.
    pub fn apply_lower(&self, x: &[T]) -> Vec<T> {
        let (n, bl, ld) = (self.n, self.bl, self.ld);
        let mut y = vec![T::zero(); n];
        for j in 0..n {
            let xj = x[j];
            if xj == T::zero() {
                continue;
            }
            let col = &self.data[j * ld..(j + 1) * ld];
            let iend = (j + bl).min(n - 1);
            for i in j..=iend {
                y[i] += col[i - j] * xj;
            }
        }
        y
    }
}

enum SolverInner<T: Scalar> {
    Dense {
        lu: nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>,
        lu_adj: nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>,
    },
    Banded {
        lu: BandedLu<T>,
    },
    BandedHpd {
        chol: BandedCholesky<T>,
    },
}

/// Direct solver for a sparse square system, choosing dense LU below
/// [`DENSE_CUTOFF`] unknowns and a (reordered) banded factorization above.
pub struct DirectSolver<T: Scalar> {
    n: usize,
    perm: Option<Vec<usize>>, // perm[old] = new
    inner: SolverInner<T>,
}

pub const DENSE_CUTOFF: usize = 512;

fn choose_perm<T: Scalar>(a: &CscMatrix<T>) -> (Option<Vec<usize>>, CscMatrix<T>) {
    let natural_bw = a.bandwidth();
    let perm = rcm_permutation(a);
    let permuted = a.permute_symmetric(&perm).expect("square checked by caller");
    if permuted.bandwidth() < natural_bw {
        (Some(perm), permuted)
    } else {
        (None, a.clone())
    }
}

impl<T: Scalar> DirectSolver<T> {
    pub fn general(a: &CscMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::argument("solver needs a square matrix".to_string()));
        }
        let n = a.nrows();
        if n < DENSE_CUTOFF {
            let d = a.to_dense();
            let lu_adj = nalgebra::LU::new(d.adjoint());
            let lu = nalgebra::LU::new(d);
            if !lu.is_invertible() {
                return Err(Error::numerical("singular matrix in dense LU".to_string()));
            }
            return Ok(DirectSolver { n, perm: None, inner: SolverInner::Dense { lu, lu_adj } });
        }
        let (perm, mat) = choose_perm(a);
        let lu = BandedLu::factor(&mat)?;
        Ok(DirectSolver { n, perm, inner: SolverInner::Banded { lu } })
    }

    /// Hermitian positive definite path; fails if the matrix is detectably
    /// non-Hermitian or an indefinite pivot appears.
    pub fn hermitian_pd(a: &CscMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::argument("solver needs a square matrix".to_string()));
        }
        if a.hermitian_deviation() > 1e-12 {
            return Err(Error::argument("matrix is not Hermitian".to_string()));
        }
        let n = a.nrows();
        let (perm, mat) = choose_perm(a);
        let chol = BandedCholesky::factor(&mat)?;
        Ok(DirectSolver { n, perm, inner: SolverInner::BandedHpd { chol } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn permute(&self, x: &DVector<T>) -> Vec<T> {
        match &self.perm {
            None => x.as_slice().to_vec(),
            Some(p) => {
                let mut y = vec![T::zero(); x.len()];
                for (old, &new) in p.iter().enumerate() {
                    y[new] = x[old];
                }
                y
            }
        }
    }

    fn unpermute(&self, y: Vec<T>) -> DVector<T> {
        match &self.perm {
            None => DVector::from_vec(y),
            Some(p) => {
                let mut x = vec![T::zero(); y.len()];
                for (old, &new) in p.iter().enumerate() {
                    x[old] = y[new];
                }
                DVector::from_vec(x)
            }
        }
    }

    pub fn solve(&self, b: &DVector<T>) -> Result<DVector<T>> {
        if b.len() != self.n {
            return Err(Error::argument("right-hand side length mismatch".to_string()));
        }
        match &self.inner {
            SolverInner::Dense { lu, .. } => lu
                .solve(b)
                .ok_or_else(|| Error::numerical("singular matrix in dense LU".to_string())),
            SolverInner::Banded { lu } => {
                let mut y = self.permute(b);
                lu.solve_in_place(&mut y);
                Ok(self.unpermute(y))
            }
            SolverInner::BandedHpd { chol } => {
                let mut y = self.permute(b);
                chol.solve_in_place(&mut y);
                Ok(self.unpermute(y))
            }
        }
    }

    pub fn solve_adjoint(&self, b: &DVector<T>) -> Result<DVector<T>> {
        if b.len() != self.n {
            return Err(Error::argument("right-hand side length mismatch".to_string()));
        }
        match &self.inner {
            SolverInner::Dense { lu_adj, .. } => lu_adj
                .solve(b)
                .ok_or_else(|| Error::numerical("singular matrix in dense LU".to_string())),
            SolverInner::Banded { lu } => {
                let mut y = self.permute(b);
                lu.solve_adjoint_in_place(&mut y);
                Ok(self.unpermute(y))
            }
            SolverInner::BandedHpd { chol } => {
                // L L^H self-adjoint: same solve.
                let mut y = self.permute(b);
                chol.solve_in_place(&mut y);
                Ok(self.unpermute(y))
            }
        }
    }

    pub fn solve_dense_columns(&self, b: &DMatrix<T>) -> Result<DMatrix<T>> {
        let mut out = DMatrix::zeros(self.n, b.ncols());
        for c in 0..b.ncols() {
            let col = DVector::from_column_slice(b.column(c).as_slice());
            out.set_column(c, &self.solve(&col)?);
        }
        Ok(out)
    }
}
