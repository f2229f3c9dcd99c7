//! Dense floating-point helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Largest entry of `|m - mᵀ|`.
pub fn asymmetry(m: &Mat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sym_eigen(m: &Mat) -> (Vector, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (Vector::zeros(0), Mat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    sym_eigen(m).0.iter().copied().collect()
}

pub fn min_eig(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym_eigen(m).0[0]
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_apply(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let d = Mat::from_diagonal(&vals.map(f));
    &vecs * d * vecs.transpose()
}

/// Orthonormal basis (as columns) of the null space of `m`, using singular
/// values below `rel_tol * σ_max` (or below `abs_floor`).
pub fn null_space(m: &Mat, rel_tol: f64, abs_floor: f64) -> Mat {
    let (r, c) = (m.nrows(), m.ncols());
    if c == 0 {
        return Mat::zeros(0, 0);
    }
    let padded = if r < c {
        let mut p = Mat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = (rel_tol * smax).max(abs_floor);
    let cols: Vec<Vector> =
        svd.singular_values.iter().enumerate().filter(|(_, &s)| s <= cut).map(|(i, _)| vt.row(i).transpose()).collect();
    if cols.is_empty() {
        Mat::zeros(c, 0)
    } else {
        Mat::from_columns(&cols)
    }
}

/// Numerical rank from singular values against `rel_tol * σ_max`.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// Haar-ish random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Random symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Mat {
    let m = Mat::from_fn(n, n, |_, _| rng.random_range(-scale..=scale));
    symmetrize(&m)
}

pub fn random_matrix<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.random_range(-scale..=scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigenvalues_sorted() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let v = sym_eigenvalues(&m);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = Mat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-10, 1e-14);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-12);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(5, &mut rng);
        assert!((q.transpose() * &q - Mat::identity(5, 5)).norm() < 1e-12);
    }
}
