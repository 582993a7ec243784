//! Double-precision kernels: cyclic Jacobi eigensolver for small symmetric
//! matrices, Householder QR and the spectral norm.

use crate::matrix::FloatMatrix;

/// Eigenvalues in ascending order; column `i` of `vectors` belongs to `values[i]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: FloatMatrix,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows())
            .map(|r| *self.vectors.get(r, i))
            .collect()
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi rotations until every off-diagonal entry is negligible
/// relative to its diagonal pair. Only the upper triangle needs to be
/// consistent with the lower one; the input is assumed symmetric.
pub fn symmetric_eigen(a: &FloatMatrix) -> SymmetricEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    let mut m: Vec<f64> = a.data().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let idx = |i: usize, j: usize| i * n + j;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[idx(p, p)];
                let aqq = m[idx(q, q)];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt()
                    || apq.abs() < f64::MIN_POSITIVE
                {
                    m[idx(p, q)] = 0.0;
                    m[idx(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[idx(k, p)];
                    let akq = m[idx(k, q)];
                    m[idx(k, p)] = c * akp - s * akq;
                    m[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[idx(p, k)];
                    let aqk = m[idx(q, k)];
                    m[idx(p, k)] = c * apk - s * aqk;
                    m[idx(q, k)] = s * apk + c * aqk;
                }
                m[idx(p, q)] = 0.0;
                m[idx(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[idx(k, p)];
                    let vkq = v[idx(k, q)];
                    v[idx(k, p)] = c * vkp - s * vkq;
                    v[idx(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[idx(i, i)].total_cmp(&m[idx(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[idx(i, i)]).collect();
    let mut vectors = FloatMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, col, v[idx(r, src)]);
        }
    }
    SymmetricEigen { values, vectors }
}

/// Smallest and largest eigenvalue only.
pub fn extreme_eigenvalues(a: &FloatMatrix) -> (f64, f64) {
    let e = symmetric_eigen(a);
    (e.values[0], *e.values.last().unwrap())
}

/// Largest singular value, from the smaller of the two Gram matrices.
pub fn operator_norm(x: &FloatMatrix) -> f64 {
    if x.rows() == 0 || x.cols() == 0 {
        return 0.0;
    }
    let gram = if x.rows() < x.cols() {
        x.transpose().gram()
    } else {
        x.gram()
    };
    let (_, max) = extreme_eigenvalues(&gram);
    max.max(0.0).sqrt()
}

/// Householder QR with a nonnegative diagonal: `x = q · r`, `q` orthogonal
/// (`rows × rows`), `r` upper triangular (`rows × cols`).
pub fn householder_qr(x: &FloatMatrix) -> (FloatMatrix, FloatMatrix) {
    let (n, p) = (x.rows(), x.cols());
    let mut r = x.clone();
    r.clear_blocks();
    let mut q = FloatMatrix::identity(n);
    for j in 0..p.min(n.saturating_sub(1)) {
        let norm: f64 = (j..n).map(|i| r.get(i, j).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = *r.get(j, j);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| *r.get(i, j)).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|a| a * a).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // r <- (I - 2vvᵀ/vᵀv) r on rows j..n
        for c in j..p {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(k, vk)| vk * r.get(j + k, c))
                .sum();
            let f = 2.0 * dot / vnorm_sq;
            for (k, vk) in v.iter().enumerate() {
                let cur = *r.get(j + k, c);
                r.set(j + k, c, cur - f * vk);
            }
        }
        // q <- q (I - 2vvᵀ/vᵀv) on columns j..n
        for row in 0..n {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(k, vk)| vk * q.get(row, j + k))
                .sum();
            let f = 2.0 * dot / vnorm_sq;
            for (k, vk) in v.iter().enumerate() {
                let cur = *q.get(row, j + k);
                q.set(row, j + k, cur - f * vk);
            }
        }
        for i in j + 1..n {
            r.set(i, j, 0.0);
        }
    }
    for i in 0..p.min(n) {
        if *r.get(i, i) < 0.0 {
            for c in 0..p {
                let cur = *r.get(i, c);
                r.set(i, c, -cur);
            }
            for row in 0..n {
                let cur = *q.get(row, i);
                q.set(row, i, -cur);
            }
        }
    }
    (q, r)
}
