//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham 2005).

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn norm1(a: MatRef<'_, Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn combine(terms: &[(f64, &Mat<Complex64>)], n: usize, identity_coeff: f64) -> Mat<Complex64> {
    let mut out = Mat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(identity_coeff, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for (c, m) in terms {
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += m[(i, j)] * *c;
            }
        }
    }
    out
}

pub fn expm(a: MatRef<'_, Complex64>) -> Result<Mat<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::LinearAlgebra("expm of a non-square matrix".into()));
    }
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::Stiffness("generator contains non-finite entries".into()));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let factor = 0.5f64.powi(squarings);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * factor);

    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = combine(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n, 0.0);
    let u_poly = &a6 * &inner_u + combine(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], n, b[1]);
    let u = &a * &u_poly;
    let inner_v = combine(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n, 0.0);
    let v = &a6 * &inner_v + combine(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], n, b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.norm_max().is_finite() {
        return Err(Error::Stiffness("matrix exponential overflowed".into()));
    }
    Ok(r)
}
