//! Dense-matrix utilities shared by the solvers: Kronecker products, block
//! assembly, half-vectorization, incidence matrices, and spectral tests.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn block_diag(blocks: &[Mat]) -> Result<Mat> {
    if blocks.is_empty() {
        return Err(Error::Empty("block_diag"));
    }
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    Ok(out)
}

/// Oriented incidence matrix: column `e` has +1 at the first endpoint of
/// edge `e` and -1 at the second.
pub fn incidence_from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Mat> {
    let mut d = Mat::zeros(num_nodes, edges.len());
    for (e, &(from, to)) in edges.iter().enumerate() {
        if from == to || from >= num_nodes || to >= num_nodes {
            return Err(Error::InvalidEdge {
                from,
                to,
                nodes: num_nodes,
            });
        }
        d[(from, e)] = 1.0;
        d[(to, e)] = -1.0;
    }
    Ok(d)
}

pub fn vecs_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Largest absolute difference between `a` and its transpose.
pub fn asymmetry(a: &Mat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

fn ensure_square(a: &Mat, context: &'static str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::dims(context, "square matrix", format!("{}x{}", a.nrows(), a.ncols())))
    }
}

/// Upper triangle of a symmetric matrix, row by row: (0,0), (0,1), ..., (0,n-1), (1,1), ...
pub fn vecs(sym: &Mat) -> Result<Vector> {
    ensure_square(sym, "vecs")?;
    let dev = asymmetry(sym);
    if dev > 1e-9 {
        return Err(Error::NotSymmetric {
            deviation: dev,
            tol: 1e-9,
        });
    }
    let n = sym.nrows();
    let mut out = Vec::with_capacity(vecs_len(n));
    for i in 0..n {
        for j in i..n {
            out.push(sym[(i, j)]);
        }
    }
    Ok(Vector::from_vec(out))
}

pub fn unvecs(v: &[f64], n: usize) -> Result<Mat> {
    if v.len() != vecs_len(n) {
        return Err(Error::dims("unvecs", vecs_len(n), v.len()));
    }
    let mut out = Mat::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            out[(i, j)] = v[idx];
            out[(j, i)] = v[idx];
            idx += 1;
        }
    }
    Ok(out)
}

pub fn eigenvalues(a: &Mat) -> Result<Vec<nalgebra::Complex<f64>>> {
    ensure_square(a, "eigenvalues")?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), 1e-14, 10_000).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum of `a`.
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn is_hurwitz(a: &Mat, margin: f64) -> Result<bool> {
    Ok(spectral_abscissa(a)? < -margin)
}

pub fn ensure_hurwitz(a: &Mat, margin: f64, context: &'static str) -> Result<()> {
    let abscissa = spectral_abscissa(a)?;
    if abscissa < -margin {
        Ok(())
    } else {
        Err(Error::NotHurwitz {
            context,
            abscissa,
            bound: -margin,
        })
    }
}

pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect()
}

pub fn min_sym_eigenvalue(a: &Mat) -> f64 {
    sym_eigenvalues(a).into_iter().fold(f64::INFINITY, f64::min)
}

/// Positive definiteness with eigenvalue threshold `tol`; asymmetric input
/// beyond `tol` is reported as not SPD.
pub fn is_spd(a: &Mat, tol: f64) -> Result<bool> {
    ensure_square(a, "is_spd")?;
    if a.nrows() == 0 || asymmetry(a) > tol.max(1e-12) {
        return Ok(false);
    }
    Ok(min_sym_eigenvalue(a) > tol)
}

pub fn is_psd(a: &Mat, tol: f64) -> Result<bool> {
    ensure_square(a, "is_psd")?;
    if asymmetry(a) > tol.max(1e-12) {
        return Ok(false);
    }
    Ok(a.nrows() == 0 || min_sym_eigenvalue(a) >= -tol)
}

/// Symmetric PSD square root; negative eigenvalues from rounding are clipped.
pub fn sym_sqrt(a: &Mat) -> Mat {
    let eig = SymmetricEigen::new(symmetrize(a));
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Numerical rank from singular values, threshold `rel_tol` times the largest.
pub fn numerical_rank(a: &Mat, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn all_finite(a: &Mat) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Inverse of a symmetric positive definite matrix via Cholesky, together
/// with its 2-norm condition number.
pub fn spd_inverse(a: &Mat, context: &str) -> Result<(Mat, f64)> {
    let chol = nalgebra::Cholesky::new(symmetrize(a))
        .ok_or_else(|| Error::Singular(format!("{context}: not positive definite")))?;
    let eig = sym_eigenvalues(a);
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(0.0, f64::max);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok((chol.inverse(), cond))
}

pub fn inverse(a: &Mat, context: &str) -> Result<Mat> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(context.to_string()))
}

/// Householder QR with column pivoting on column norms (Businger-Golub).
///
/// Columns are equilibrated to unit norm before factoring so the rank and
/// condition estimates are insensitive to regressor scaling.
pub struct PivotedQr {
    qr: Mat,
    tau: Vec<f64>,
    perm: Vec<usize>,
    scale: Vec<f64>,
}

impl PivotedQr {
    pub fn new(a: &Mat) -> Self {
        let (m, n) = a.shape();
        let mut qr = a.clone();
        let mut scale = vec![1.0; n];
        for j in 0..n {
            let nrm = qr.column(j).norm();
            if nrm > 0.0 {
                scale[j] = 1.0 / nrm;
                qr.column_mut(j).scale_mut(scale[j]);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = (0..n).map(|j| qr.column(j).norm_squared()).collect();
        let mut ref_norms = norms.clone();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];

        for k in 0..steps {
            let p = (k..n)
                .max_by(|&x, &y| norms[x].partial_cmp(&norms[y]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(k);
            if p != k {
                qr.swap_columns(k, p);
                norms.swap(k, p);
                ref_norms.swap(k, p);
                perm.swap(k, p);
            }

            let xnorm = qr.view((k, k), (m - k, 1)).norm();
            if xnorm == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let x0 = qr[(k, k)];
            let alpha = if x0 >= 0.0 { -xnorm } else { xnorm };
            let v0 = x0 - alpha;
            for i in (k + 1)..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = -v0 / alpha;
            qr[(k, k)] = alpha;

            for j in (k + 1)..n {
                let mut s = qr[(k, j)];
                {
                    let vk = qr.view((k + 1, k), (m - k - 1, 1));
                    let cj = qr.view((k + 1, j), (m - k - 1, 1));
                    s += vk.dot(&cj);
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in (k + 1)..m {
                    let vi = qr[(i, k)];
                    qr[(i, j)] -= s * vi;
                }
                norms[j] -= qr[(k, j)] * qr[(k, j)];
                if norms[j] < 1e-8 * ref_norms[j] {
                    norms[j] = qr.view((k + 1, j), (m - k - 1, 1)).norm_squared();
                    ref_norms[j] = norms[j];
                }
            }
        }
        PivotedQr {
            qr,
            tau,
            perm,
            scale,
        }
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.tau.len()).map(|k| self.qr[(k, k)].abs()).collect()
    }

    /// Numerical rank with threshold `rel_tol` relative to the leading
    /// diagonal entry of R.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let d = self.r_diag();
        match d.first() {
            Some(&d0) if d0 > 0.0 => d.iter().filter(|&&v| v > rel_tol * d0).count(),
            _ => 0,
        }
    }

    /// Ratio of the extreme diagonal entries of R (after equilibration).
    pub fn condition_estimate(&self) -> f64 {
        let d = self.r_diag();
        let ncols = self.qr.ncols();
        if d.len() < ncols {
            return f64::INFINITY;
        }
        match (d.first(), d.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    fn apply_qt(&self, b: &mut Vector) {
        let m = self.qr.nrows();
        for k in 0..self.tau.len() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = b[k];
            for i in (k + 1)..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in (k + 1)..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Basic least-squares solution using the leading `rank` columns.
    pub fn solve(&self, b: &Vector, rel_tol: f64) -> Result<Vector> {
        let (m, n) = self.qr.shape();
        if b.len() != m {
            return Err(Error::dims("least squares rhs", m, b.len()));
        }
        let r = self.rank(rel_tol);
        if r < n {
            return Err(Error::Singular(format!(
                "least squares: rank {r} < {n} columns"
            )));
        }
        let mut y = b.clone();
        self.apply_qt(&mut y);
        let mut z = Vector::zeros(n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.qr[(i, j)] * z[j];
            }
            z[i] = s / self.qr[(i, i)];
        }
        let mut x = Vector::zeros(n);
        for k in 0..n {
            let col = self.perm[k];
            x[col] = z[k] * self.scale[col];
        }
        Ok(x)
    }
}

/// Least squares `min |a x - b|` for a full-column-rank `a`; returns the
/// solution and the condition estimate.
pub fn lstsq(a: &Mat, b: &Vector) -> Result<(Vector, f64)> {
    let qr = PivotedQr::new(a);
    let x = qr.solve(b, 1e-13)?;
    Ok((x, qr.condition_estimate()))
}

/// Matrix least squares: solves each column of `b` independently.
pub fn lstsq_mat(a: &Mat, b: &Mat) -> Result<Mat> {
    let qr = PivotedQr::new(a);
    let mut out = Mat::zeros(a.ncols(), b.ncols());
    for j in 0..b.ncols() {
        let x = qr.solve(&b.column(j).into_owned(), 1e-13)?;
        out.set_column(j, &x);
    }
    Ok(out)
}

/// Row-major nested representation, used for serialization.
pub fn to_rows(a: &Mat) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::dims("from_rows", "equal row lengths", "ragged rows"));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Copies block `(i, j)` of a matrix partitioned by `row_sizes` and `col_sizes`.
pub fn block(a: &Mat, row_sizes: &[usize], col_sizes: &[usize], i: usize, j: usize) -> Mat {
    let r0: usize = row_sizes[..i].iter().sum();
    let c0: usize = col_sizes[..j].iter().sum();
    a.view((r0, c0), (row_sizes[i], col_sizes[j])).into_owned()
}
