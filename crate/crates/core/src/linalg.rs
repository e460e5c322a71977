//! Dense packed and CSR-sparse symmetric matrices assembled from a
//! covariance model on a location set, with Cholesky, log-determinant,
//! triangular solves, quadratic forms, and a Jacobi-preconditioned
//! conjugate-gradient solver for the sparse prediction path.

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::geometry::{LocationSet, NeighborIndex};

/// Dense symmetric matrix, lower triangle packed column-major.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    // requires i >= j
    j * n - j * (j + 1) / 2 + i
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(self.n, i, j)] = v;
    }

    /// Adds eps to every diagonal entry (exploratory regularization only;
    /// Cholesky failures are surfaced, never silently ridged).
    pub fn add_ridge(&mut self, eps: f64) {
        for i in 0..self.n {
            let idx = packed_index(self.n, i, i);
            self.data[idx] += eps;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(self.n, x.len()));
        }
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for i in j..self.n {
                let v = self.data[packed_index(self.n, i, j)];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        Ok(y)
    }
}

/// Covariance (or correlation) matrix of the model at the location set.
pub fn assemble_dense(
    model: &CovarianceModel,
    locs: &LocationSet,
    correlation: bool,
) -> Result<SymMatrix> {
    model.validate().map_err(Error::InvalidModel)?;
    let n = locs.len();
    let mut m = SymMatrix::zeros(n);
    let scale = if correlation { model.sigma2() } else { 1.0 };
    for j in 0..n {
        for i in j..n {
            let r = locs.dist(i, j);
            m.set(i, j, model.cov(r)? / scale);
        }
    }
    Ok(m)
}

/// Lower-triangular Cholesky factor with cached log-determinant.
#[derive(Debug, Clone)]
pub struct CholFactor {
    n: usize,
    l: Vec<f64>,
    logdet: f64,
}

/// Factorizes a positive-definite matrix; a nonpositive pivot reports the
/// failing index.
pub fn cholesky(m: &SymMatrix) -> Result<CholFactor> {
    let n = m.n;
    let mut l = m.data.clone();
    let mut logdet = 0.0;
    for j in 0..n {
        let jj = packed_index(n, j, j);
        let mut diag = l[jj];
        for k in 0..j {
            let v = l[packed_index(n, j, k)];
            diag -= v * v;
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let dsqrt = diag.sqrt();
        l[jj] = dsqrt;
        logdet += 2.0 * dsqrt.ln();
        for i in (j + 1)..n {
            let mut s = l[packed_index(n, i, j)];
            for k in 0..j {
                s -= l[packed_index(n, i, k)] * l[packed_index(n, j, k)];
            }
            l[packed_index(n, i, j)] = s / dsqrt;
        }
    }
    Ok(CholFactor { n, l, logdet })
}

impl CholFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// log |R| = 2 sum log L_ii.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for j in 0..n {
            y[j] /= self.l[packed_index(n, j, j)];
            let yj = y[j];
            for i in (j + 1)..n {
                y[i] -= self.l[packed_index(n, i, j)] * yj;
            }
        }
        y
    }

    fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = y.to_vec();
        for j in (0..n).rev() {
            for i in (j + 1)..n {
                x[j] -= self.l[packed_index(n, i, j)] * x[i];
            }
            x[j] /= self.l[packed_index(n, j, j)];
        }
        x
    }

    /// Solves R x = b.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(self.n, b.len()));
        }
        Ok(self.backward(&self.forward(b)))
    }

    /// z' R^{-1} z = ||L^{-1} z||^2.
    pub fn quad_form(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch(self.n, z.len()));
        }
        Ok(self.forward(z).iter().map(|v| v * v).sum())
    }

    /// L w = b (forward substitution), used by the simulator as z = L eps.
    pub fn lower_mul(&self, eps: &[f64]) -> Result<Vec<f64>> {
        if eps.len() != self.n {
            return Err(Error::DimensionMismatch(self.n, eps.len()));
        }
        let n = self.n;
        let mut z = vec![0.0; n];
        for j in 0..n {
            let ej = eps[j];
            for i in j..n {
                z[i] += self.l[packed_index(n, i, j)] * ej;
            }
        }
        Ok(z)
    }

    /// Entry L[i][j] of the factor (i >= j), for test reconstruction.
    pub fn l_entry(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.l[packed_index(self.n, i, j)]
        } else {
            0.0
        }
    }
}

/// CSR symmetric matrix storing the full pattern (both triangles plus the
/// diagonal); the pattern is exactly {(i,j) : distance < support}.
#[derive(Debug, Clone)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// nnz / n^2, the statistic reported by the ratio study.
    pub fn nonzero_fraction(&self) -> f64 {
        self.nnz() as f64 / (self.n as f64 * self.n as f64)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(self.n, x.len()));
        }
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        Ok(y)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn densify(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j <= i {
                    m.set(i, j, self.vals[k]);
                }
            }
        }
        m
    }
}

/// Sparse assembly through radius queries; requires a compactly supported
/// model (the pattern is all pairs with distance strictly below the support).
pub fn assemble_sparse(
    model: &CovarianceModel,
    locs: &LocationSet,
    correlation: bool,
) -> Result<SparseSym> {
    model.validate().map_err(Error::InvalidModel)?;
    let Some(support) = model.support() else {
        return Err(Error::InvalidModel(
            "sparse assembly requires a compactly supported model".into(),
        ));
    };
    let n = locs.len();
    let scale = if correlation { model.sigma2() } else { 1.0 };
    let index = NeighborIndex::new(locs, support);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        // query returns sorted indices and always contains i (distance 0)
        for j in index.query(locs.point(i)) {
            col_idx.push(j);
            vals.push(model.cov(locs.dist(i, j))? / scale);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseSym { n, row_ptr, col_idx, vals })
}

/// Jacobi-preconditioned conjugate gradients for SPD sparse systems.
pub fn cg_solve(s: &SparseSym, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if b.len() != s.n {
        return Err(Error::DimensionMismatch(s.n, b.len()));
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; s.n]);
    }
    let dinv: Vec<f64> = s
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; s.n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let ap = s.matvec(&p)?;
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..s.n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..s.n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..s.n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::CgMaxIter(max_iter, rnorm / bnorm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{GwParams, MaternParams};
    use crate::geometry::Point;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_locs(n: usize, seed: u64) -> LocationSet {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        LocationSet::new(
            (0..n)
                .map(|_| Point::new(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]))
                .collect(),
        )
        .unwrap()
    }

    fn gw_model(beta: f64) -> CovarianceModel {
        CovarianceModel::Gw(GwParams::new(4.0, 1.0, beta, 1.5, 2).unwrap())
    }

    #[test]
    fn dense_assembly_matches_entrywise() {
        let locs = random_locs(5, 1);
        let model = gw_model(0.8);
        let m = assemble_dense(&model, &locs, false).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m.get(i, j), model.cov(locs.dist(i, j)).unwrap());
            }
        }
        let c = assemble_dense(&model, &locs, true).unwrap();
        assert_eq!(c.get(0, 0), 1.0);
        assert_relative_eq!(c.get(1, 0) * 1.5, m.get(1, 0), epsilon = 1e-15);

        // single point, and points beyond support
        let one = LocationSet::new(vec![Point::new(vec![0.3, 0.3])]).unwrap();
        let m1 = assemble_dense(&model, &one, true).unwrap();
        assert_eq!(m1.get(0, 0), 1.0);
        let far = LocationSet::new(vec![
            Point::new(vec![0.0, 0.0]),
            Point::new(vec![0.95, 0.95]),
        ])
        .unwrap();
        let mf = assemble_dense(&model, &far, true).unwrap();
        assert_eq!(mf.get(0, 1), 0.0);
        assert_eq!(mf.get(0, 0), 1.0);
    }

    #[test]
    fn cholesky_hand_case() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 4.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 3.0);
        let f = cholesky(&m).unwrap();
        assert_eq!(f.l_entry(0, 0), 2.0);
        assert_eq!(f.l_entry(1, 0), 1.0);
        assert_relative_eq!(f.l_entry(1, 1), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(f.logdet(), 8f64.ln(), epsilon = 1e-14);

        let id = SymMatrix::identity(3);
        let fid = cholesky(&id).unwrap();
        assert_eq!(fid.logdet(), 0.0);
        assert_eq!(fid.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(fid.quad_form(&[1.0, 2.0, 2.0]).unwrap(), 9.0);
    }

    #[test]
    fn cholesky_reconstruction() {
        let locs = random_locs(50, 2);
        let m = assemble_dense(&gw_model(0.5), &locs, true).unwrap();
        let f = cholesky(&m).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..50 {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += f.l_entry(i, k) * f.l_entry(j, k);
                }
                max_err = max_err.max((s - m.get(i, j)).abs());
            }
        }
        assert!(max_err < 1e-10, "reconstruction error {max_err}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 1.0);
        assert!(matches!(cholesky(&m), Err(Error::NotPositiveDefinite(1))));
    }

    #[test]
    fn diag_solve_and_quad() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 4.0);
        m.set(1, 1, 4.0);
        let f = cholesky(&m).unwrap();
        assert_relative_eq!(f.logdet(), (16f64).ln(), epsilon = 1e-14);
        assert_eq!(f.solve(&[4.0, 8.0]).unwrap(), vec![1.0, 2.0]);
        assert_relative_eq!(f.quad_form(&[2.0, 2.0]).unwrap(), 2.0, epsilon = 1e-14);
    }

    /// Gauss-Jordan inverse, independent of the Cholesky path.
    fn invert(m: &SymMatrix) -> Vec<Vec<f64>> {
        let n = m.n();
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
        let mut inv: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        for col in 0..n {
            let piv = a[col][col];
            for j in 0..n {
                a[col][j] /= piv;
                inv[col][j] /= piv;
            }
            for row in 0..n {
                if row != col {
                    let f = a[row][col];
                    for j in 0..n {
                        a[row][j] -= f * a[col][j];
                        inv[row][j] -= f * inv[col][j];
                    }
                }
            }
        }
        inv
    }

    #[test]
    fn quad_form_matches_explicit_inverse() {
        let locs = random_locs(20, 3);
        let m = assemble_dense(&gw_model(0.6), &locs, true).unwrap();
        let f = cholesky(&m).unwrap();
        let inv = invert(&m);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let z: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut direct = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                direct += z[i] * inv[i][j] * z[j];
            }
        }
        assert_relative_eq!(f.quad_form(&z).unwrap(), direct, max_relative = 1e-9);
    }

    #[test]
    fn sparse_matches_dense() {
        let locs = random_locs(120, 4);
        let model = gw_model(0.25);
        let s = assemble_sparse(&model, &locs, false).unwrap();
        let d = assemble_dense(&model, &locs, false).unwrap();
        let sd = s.densify();
        for i in 0..120 {
            for j in 0..=i {
                let expect = if locs.dist(i, j) < 0.25 { d.get(i, j) } else { 0.0 };
                assert_eq!(sd.get(i, j), expect, "({i},{j})");
            }
        }
        // nnz equals the brute-force pair count (diagonal included)
        let mut count = 0;
        for i in 0..120 {
            for j in 0..120 {
                if locs.dist(i, j) < 0.25 {
                    count += 1;
                }
            }
        }
        assert_eq!(s.nnz(), count);

        // support beyond the diameter: fully dense pattern
        let wide = assemble_sparse(&gw_model(5.0), &locs, false).unwrap();
        assert_eq!(wide.nnz(), 120 * 120);

        // Matérn has no support
        let m = CovarianceModel::Matern(MaternParams::new(0.5, 0.2, 1.0, 2).unwrap());
        assert!(assemble_sparse(&m, &locs, false).is_err());
    }

    #[test]
    fn cg_matches_dense_solve() {
        let locs = random_locs(200, 5);
        let model = gw_model(0.3);
        let s = assemble_sparse(&model, &locs, true).unwrap();
        let dense = cholesky(&assemble_dense(&model, &locs, true).unwrap()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let b: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_cg = cg_solve(&s, &b, 1e-13, 5000).unwrap();
        let x_dense = dense.solve(&b).unwrap();
        for (a, c) in x_cg.iter().zip(&x_dense) {
            assert!((a - c).abs() < 1e-8, "{a} vs {c}");
        }
        // trivial cases
        let zero = cg_solve(&s, &vec![0.0; 200], 1e-10, 10).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let id = assemble_sparse(&gw_model(1e-9), &locs, true).unwrap();
        let xi = cg_solve(&id, &b, 1e-12, 10).unwrap();
        for (a, c) in xi.iter().zip(&b) {
            assert_relative_eq!(a, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn matvec_dense_sparse_agree() {
        let locs = random_locs(60, 7);
        let model = gw_model(0.4);
        let s = assemble_sparse(&model, &locs, false).unwrap();
        let d = assemble_dense(&model, &locs, false).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ys = s.matvec(&x).unwrap();
        let yd = d.matvec(&x).unwrap();
        for (i, (a, b)) in ys.iter().zip(&yd).enumerate() {
            // dense includes the boundary r >= support entries, which are zero anyway
            assert_relative_eq!(a, b, epsilon = 1e-12, max_relative = 1e-12);
            let _ = i;
        }
    }
}
