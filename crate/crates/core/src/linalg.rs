//! Small dense helpers.

/// Result of [`householder_qr`]: `q_t · a = r`, with `q_t` orthogonal.
#[derive(Debug, Clone)]
pub struct Qr {
    /// `n × n`, row-major: the transpose of `Q`.
    pub q_t: Vec<f64>,
    /// `n × p`, row-major; rows at and beyond `rank` are numerically zero.
    pub r: Vec<f64>,
    pub n: usize,
    pub p: usize,
    /// Number of pivot rows produced (the numerical rank).
    pub rank: usize,
}

/// Householder QR of the row-major `n × p` matrix `a`.
///
/// Columns whose residual below the current pivot is under
/// `rel_tol × (largest column norm)` are skipped, so rank-deficient inputs
/// yield `rank < min(n, p)` pivots. Pivot entries of `r` are made
/// non-negative, which makes the factorization unique.
pub fn householder_qr(a: &[f64], n: usize, p: usize, rel_tol: f64) -> Qr {
    debug_assert_eq!(a.len(), n * p);
    let mut r = a.to_vec();
    let mut q_t = vec![0.0; n * n];
    for i in 0..n {
        q_t[i * n + i] = 1.0;
    }
    let scale = (0..p)
        .map(|j| (0..n).map(|i| a[i * p + j].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let tol = rel_tol * scale;
    let mut k = 0;
    let mut v = vec![0.0; n];
    for j in 0..p {
        if k >= n {
            break;
        }
        let norm = (k..n).map(|i| r[i * p + j].powi(2)).sum::<f64>().sqrt();
        if norm <= tol || norm == 0.0 {
            continue;
        }
        let x0 = r[k * p + j];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k..n {
            v[i] = r[i * p + j];
        }
        v[k] -= alpha;
        let vnorm = (k..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            for vi in &mut v[k..n] {
                *vi /= vnorm;
            }
            reflect(&mut r, &v, k, n, p);
            reflect(&mut q_t, &v, k, n, n);
        }
        // Exact zeros below the pivot.
        r[k * p + j] = alpha;
        for i in k + 1..n {
            r[i * p + j] = 0.0;
        }
        if alpha < 0.0 {
            for c in 0..p {
                r[k * p + c] = -r[k * p + c];
            }
            for c in 0..n {
                q_t[k * n + c] = -q_t[k * n + c];
            }
        }
        k += 1;
    }
    Qr {
        q_t,
        r,
        n,
        p,
        rank: k,
    }
}

/// `m ← (I − 2 v vᵀ) m` restricted to rows `k..n` of a row-major `n × cols` matrix.
fn reflect(m: &mut [f64], v: &[f64], k: usize, n: usize, cols: usize) {
    for c in 0..cols {
        let dot: f64 = (k..n).map(|i| v[i] * m[i * cols + c]).sum();
        if dot != 0.0 {
            for i in k..n {
                m[i * cols + c] -= 2.0 * v[i] * dot;
            }
        }
    }
}
