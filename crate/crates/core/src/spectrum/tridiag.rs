//! Lowest eigenpairs of a real symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
//! iteration on a partially pivoted LU factorization. Vectors whose
//! eigenvalues sit closer than `1e-3 * ||T||` are reorthogonalized against
//! each other, so degenerate levels still yield an orthonormal set.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Failure {
    Bisection(usize),
    InverseIteration(usize),
}

const MAX_BISECTION: usize = 256;
const MAX_INVERSE: usize = 8;

pub(crate) struct Eigenpairs {
    pub values: Vec<f64>,
    /// Euclidean-normalized eigenvectors.
    pub vectors: Vec<Vec<f64>>,
}

/// One-norm of the matrix (max absolute column sum).
fn norm1(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + l + r
        })
        .fold(0.0, f64::max)
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let r = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - l - r);
        hi = hi.max(diag[i] + l + r);
    }
    (lo, hi)
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off2: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off2[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Result<Vec<f64>, Failure> {
    let abs_tol = f64::EPSILON * norm1(diag, off);
    let off2: Vec<f64> = off.iter().map(|e| e * e).collect();
    let max_off2 = off2.iter().copied().fold(1.0, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_off2;
    let (glo, ghi) = gershgorin(diag, off);
    let pad = f64::EPSILON * (glo.abs().max(ghi.abs())) * 4.0 + pivmin;
    let (glo, ghi) = (glo - pad, ghi + pad);

    let mut values = Vec::with_capacity(k);
    let mut floor = glo;
    for index in 0..k {
        let mut lo = floor;
        let mut hi = ghi;
        let mut converged = false;
        for _ in 0..MAX_BISECTION {
            let tol = 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())) + abs_tol + pivmin;
            if hi - lo <= tol {
                converged = true;
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                converged = true;
                break;
            }
            if sturm_count(diag, &off2, mid, pivmin) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if !converged {
            return Err(Failure::Bisection(index));
        }
        let value = 0.5 * (lo + hi);
        values.push(value);
        floor = lo;
    }
    Ok(values)
}

/// LU factorization of `T - shift*I` with partial pivoting, LAPACK `gttrf`
/// layout: `l` sub-multipliers, `u0` diagonal of U, `u1`/`u2` its first and
/// second superdiagonals, `swap[i]` whether rows `i` and `i+1` were exchanged.
struct TridiagLu {
    l: Vec<f64>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
        let mut u1: Vec<f64> = off.to_vec();
        let mut sub: Vec<f64> = off.to_vec();
        let mut u2 = vec![0.0; n.saturating_sub(2)];
        let mut l = vec![0.0; n - 1];
        let mut swap = vec![false; n - 1];
        for i in 0..n - 1 {
            if u0[i].abs() >= sub[i].abs() {
                if u0[i] == 0.0 {
                    u0[i] = tiny;
                }
                let fact = sub[i] / u0[i];
                l[i] = fact;
                u0[i + 1] -= fact * u1[i];
            } else {
                let fact = u0[i] / sub[i];
                u0[i] = sub[i];
                l[i] = fact;
                let temp = u1[i];
                u1[i] = u0[i + 1];
                u0[i + 1] = temp - fact * u0[i + 1];
                if i + 2 < n {
                    u2[i] = u1[i + 1];
                    u1[i + 1] *= -fact;
                }
                swap[i] = true;
            }
            sub[i] = 0.0;
        }
        for v in u0.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            l,
            u0,
            u1,
            u2,
            swap,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.l[i] * b[i];
        }
        b[n - 1] /= self.u0[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.u1[n - 2] * b[n - 1]) / self.u0[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.u1[i] * b[i + 1] - self.u2[i] * b[i + 2]) / self.u0[i];
        }
    }
}

fn apply(diag: &[f64], off: &[f64], v: &[f64], out: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut s = diag[i] * v[i];
        if i > 0 {
            s += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            s += off[i] * v[i + 1];
        }
        out[i] = s;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

fn start_vector(n: usize, index: usize) -> Vec<f64> {
    // Deterministic, asymmetric and free of exact zeros.
    let phase = 0.618_033_988_749_895 * (index as f64 + 1.0);
    (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 1.234_567 + phase).sin())
        .collect()
}

pub(crate) fn lowest_eigenpairs(
    diag: &[f64],
    off: &[f64],
    k: usize,
) -> Result<Eigenpairs, Failure> {
    let n = diag.len();
    let values = lowest_eigenvalues(diag, off, k)?;
    let tnorm = norm1(diag, off).max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-3 * tnorm;
    let tiny = f64::EPSILON * tnorm;
    let accept = 1e2 * f64::EPSILON * tnorm.max(1.0);

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut tv = vec![0.0; n];
    for (index, &lambda) in values.iter().enumerate() {
        let lu = TridiagLu::factor(diag, off, lambda, tiny);
        let cluster_start = (0..index)
            .rev()
            .take_while(|&j| lambda - values[j] < cluster_gap)
            .last()
            .unwrap_or(index);

        let mut v = start_vector(n, index);
        normalize(&mut v);
        let mut done = false;
        for iteration in 0..MAX_INVERSE {
            lu.solve(&mut v);
            for prev in &vectors[cluster_start..index] {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            if normalize(&mut v) == 0.0 || v.iter().any(|x| !x.is_finite()) {
                v = start_vector(n, index + iteration + 1);
                normalize(&mut v);
                continue;
            }
            if iteration >= 1 {
                apply(diag, off, &v, &mut tv);
                let residual = tv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - lambda * b).abs())
                    .fold(0.0, f64::max);
                if residual <= accept {
                    done = true;
                    break;
                }
            }
        }
        if !done {
            return Err(Failure::InverseIteration(index));
        }
        vectors.push(v);
    }
    Ok(Eigenpairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cyclic Jacobi on the dense matrix; slow but independent of the
    /// bisection path.
    fn jacobi_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i + 1 < n {
                a[i][i + 1] = off[i];
                a[i + 1][i] = off[i];
            }
        }
        for _ in 0..100 {
            let mut offn = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    offn += a[p][q] * a[p][q];
                }
            }
            if offn < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    #[test]
    fn matches_dense_jacobi() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64) - 3.0).collect();
        let off: Vec<f64> = (0..n - 1)
            .map(|i| 0.5 + ((i * 3 % 5) as f64) * 0.3)
            .collect();
        let reference = jacobi_eigenvalues(&diag, &off);
        let pairs = lowest_eigenpairs(&diag, &off, n).unwrap();
        for (a, b) in pairs.values.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for (i, vi) in pairs.vectors.iter().enumerate() {
            for (j, vj) in pairs.vectors.iter().enumerate() {
                let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_diagonal_yields_orthonormal_vectors() {
        let diag = vec![2.0, 1.0, 0.0, 1.0, 2.0];
        let off = vec![0.0; 4];
        let pairs = lowest_eigenpairs(&diag, &off, 5).unwrap();
        assert_eq!(pairs.values.len(), 5);
        assert!((pairs.values[0]).abs() < 1e-15);
        assert!((pairs.values[1] - 1.0).abs() < 1e-15);
        assert!((pairs.values[2] - 1.0).abs() < 1e-15);
        let dot: f64 = pairs.vectors[1]
            .iter()
            .zip(&pairs.vectors[2])
            .map(|(a, b)| a * b)
            .sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn sturm_count_brackets() {
        let diag = vec![1.0, 2.0, 3.0];
        let off2 = vec![0.0, 0.0];
        assert_eq!(sturm_count(&diag, &off2, 0.5, 1e-300), 0);
        assert_eq!(sturm_count(&diag, &off2, 2.5, 1e-300), 2);
        assert_eq!(sturm_count(&diag, &off2, 10.0, 1e-300), 3);
    }
}
