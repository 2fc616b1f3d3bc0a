//! Small dense linear algebra used by the production path: a Jacobi
//! eigensolver for the N×N real symmetric dispersion matrices and a matrix
//! exponential for the Markov generator. N is the number of emitters, so
//! these never see matrices larger than a handful of rows; the heavy
//! discretized-bath eigensolves live in [`crate::oracle`] instead.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted in
/// descending order and the matching orthonormal eigenvectors as columns.
pub fn sym_eigen(mat: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "sym_eigen needs a square matrix");
    let mut a = mat.clone();
    let mut v = Array2::<f64>::eye(n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * (1.0 + frobenius(&a)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, i)];
        }
        // Fix the overall sign so results are reproducible: largest-magnitude
        // component positive.
        let mut pivot = 0;
        for row in 1..n {
            if vectors[(row, col)].abs() > vectors[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if vectors[(pivot, col)] < 0.0 {
            for row in 0..n {
                vectors[(row, col)] = -vectors[(row, col)];
            }
        }
    }
    (eigenvalues, vectors)
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// exp(A) for a small complex matrix by scaling-and-squaring with a Taylor
/// series summed to machine precision.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.mapv(|x| x / 2f64.powi(squarings as i32));

    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=40u64 {
        term = term.dot(&scaled) / C64::new(k as f64, 0.0);
        result += &term;
        let tnorm: f64 = term.iter().map(|x| x.norm()).sum();
        if tnorm < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}
