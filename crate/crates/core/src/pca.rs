//! Small-matrix symmetric eigensolver and Gram-matrix PCA.
//!
//! Neighborhood sizes are tiny (tens of members) while the ambient dimension
//! is huge, so principal components are always taken through the m x m Gram
//! matrix of centered members: eigenvectors of the Gram give the member
//! coefficients of each basis direction without ever materializing a p x d
//! matrix.

/// Eigenvalue floor below which a direction counts as zero variance.
pub const EIG_TINY: f64 = 1e-12;

/// Jacobi eigendecomposition of a symmetric matrix (row-major, n x n).
///
/// Returns eigenvalues in descending order and eigenvectors as columns:
/// `vecs[j * n + i]` is component `i` of eigenvector `j`. Each eigenvector's
/// largest-magnitude component (first on ties) is made positive, which pins
/// the sign convention.
pub fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].partial_cmp(&a[i * n + i]).unwrap().then(i.cmp(&j)));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = vec![0.0f64; n * n];
    for (out_j, &src_j) in order.iter().enumerate() {
        vals.push(a[src_j * n + src_j]);
        // Sign convention: the dominant component is positive.
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..n {
            let x = v[i * n + src_j].abs();
            if x > best_abs {
                best_abs = x;
                best = i;
            }
        }
        let flip = if v[best * n + src_j] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[out_j * n + i] = flip * v[i * n + src_j];
        }
    }
    (vals, vecs)
}

/// Double-center a raw dot-product matrix `D[i][j] = <d_i, d_j>` so it becomes
/// the Gram matrix of the mean-centered members.
pub fn center_gram(dots: &[f64], m: usize) -> Vec<f64> {
    let mut row_mean = vec![0.0f64; m];
    let mut total = 0.0f64;
    for i in 0..m {
        let mut s = 0.0;
        for j in 0..m {
            s += dots[i * m + j];
        }
        row_mean[i] = s / m as f64;
        total += s;
    }
    total /= (m * m) as f64;
    let mut g = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = dots[i * m + j] - row_mean[i] - row_mean[j] + total;
        }
    }
    g
}

/// PCA of a centered Gram matrix to `target_d` dimensions.
#[derive(Debug, Clone)]
pub struct GramPca {
    pub m: usize,
    pub d: usize,
    /// All `m` eigenvalues, descending (clamped at zero).
    pub eigvals: Vec<f64>,
    /// Member coordinates: `coords[j * d + l]` is coordinate `l` of member `j`.
    pub coords: Vec<f64>,
    /// Basis coefficients: direction `l` of the basis is
    /// `sum_i coeff[i * d + l] * c_i` over centered members `c_i`.
    pub coeff: Vec<f64>,
    /// Total variance (sum of eigenvalues) is numerically zero.
    pub degenerate: bool,
    /// Fewer than `d` positive-variance directions; missing ones are padded
    /// with zeros.
    pub rank_deficient: bool,
}

impl GramPca {
    pub fn compute(centered_gram: &[f64], m: usize, target_d: usize) -> Self {
        let (vals, vecs) = symmetric_eigen(centered_gram.to_vec(), m);
        let eigvals: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = eigvals.iter().sum();
        let degenerate = total <= EIG_TINY;
        let d = target_d;
        let mut coords = vec![0.0f64; m * d];
        let mut coeff = vec![0.0f64; m * d];
        let mut rank = 0usize;
        for l in 0..d.min(m) {
            if eigvals[l] <= EIG_TINY {
                break;
            }
            rank += 1;
            let sq = eigvals[l].sqrt();
            for j in 0..m {
                coords[j * d + l] = sq * vecs[l * m + j];
                coeff[j * d + l] = vecs[l * m + j] / sq;
            }
        }
        Self { m, d, eigvals, coords, coeff, degenerate, rank_deficient: rank < d }
    }

    /// Residual variance fraction after keeping the top `keep` directions.
    pub fn residual(&self, keep: usize) -> f64 {
        let total: f64 = self.eigvals.iter().sum();
        if total <= EIG_TINY {
            return 0.0;
        }
        let kept: f64 = self.eigvals.iter().take(keep).sum();
        ((total - kept) / total).max(0.0)
    }
}
