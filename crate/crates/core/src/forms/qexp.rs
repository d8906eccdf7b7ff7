//! Exact q-expansions of eta products, used both to build the weight-12
//! form and as an independent oracle for eigenvalue recursions.
//!
//! Coefficients are held in `i128` with checked arithmetic: `|tau(n)|` stays
//! below `2^126` far beyond the supported range, and any overflow surfaces as
//! [`Error::CoefficientOverflow`] instead of wrapping.

use crate::error::{Error, Result};

/// Sparse `(exponent, coefficient)` list of `prod (1 - q^n)^3 = sum (-1)^k (2k+1) q^{k(k+1)/2}`.
fn jacobi_cube(deg: usize) -> Vec<(usize, i128)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let e = k * (k + 1) / 2;
        if e > deg {
            break;
        }
        let c = (2 * k + 1) as i128;
        out.push((e, if k % 2 == 0 { c } else { -c }));
        k += 1;
    }
    out
}

/// Sparse pentagonal series `prod (1 - q^{step n})` up to degree `deg`.
fn euler_product(deg: usize, step: usize) -> Vec<(usize, i128)> {
    let mut out = vec![(0usize, 1i128)];
    let mut k = 1usize;
    loop {
        let a = step * k * (3 * k - 1) / 2;
        let b = step * k * (3 * k + 1) / 2;
        if a > deg {
            break;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        out.push((a, sign));
        if b <= deg {
            out.push((b, sign));
        }
        k += 1;
    }
    out.sort_unstable();
    out
}

fn mul_sparse(dense: &[i128], sparse: &[(usize, i128)]) -> Result<Vec<i128>> {
    let deg = dense.len() - 1;
    let mut out = vec![0i128; dense.len()];
    for &(e, c) in sparse {
        if e > deg {
            continue;
        }
        for i in 0..=(deg - e) {
            let a = dense[i];
            if a == 0 {
                continue;
            }
            let t = a.checked_mul(c).ok_or(Error::CoefficientOverflow(i + e))?;
            out[i + e] = out[i + e].checked_add(t).ok_or(Error::CoefficientOverflow(i + e))?;
        }
    }
    Ok(out)
}

fn dense_from(sparse: &[(usize, i128)], deg: usize) -> Vec<i128> {
    let mut d = vec![0i128; deg + 1];
    for &(e, c) in sparse {
        if e <= deg {
            d[e] += c;
        }
    }
    d
}

/// `tau(n)` for `0 <= n <= n_max` (index 0 holds 0).
pub fn delta_qexp(n_max: usize) -> Result<Vec<i128>> {
    if n_max == 0 {
        return Ok(vec![0]);
    }
    let deg = n_max - 1;
    let cube = jacobi_cube(deg);
    let mut acc = dense_from(&cube, deg);
    for _ in 1..8 {
        acc = mul_sparse(&acc, &cube)?;
    }
    let mut out = vec![0i128; n_max + 1];
    out[1..].copy_from_slice(&acc);
    Ok(out)
}

/// Coefficients of `q prod (1-q^n)^2 (1-q^{11n})^2` for `0 <= n <= n_max`.
pub fn level11_qexp(n_max: usize) -> Result<Vec<i128>> {
    if n_max == 0 {
        return Ok(vec![0]);
    }
    let deg = n_max - 1;
    let e1 = euler_product(deg, 1);
    let e11 = euler_product(deg, 11);
    let mut acc = dense_from(&e1, deg);
    acc = mul_sparse(&acc, &e1)?;
    acc = mul_sparse(&acc, &e11)?;
    acc = mul_sparse(&acc, &e11)?;
    let mut out = vec![0i128; n_max + 1];
    out[1..].copy_from_slice(&acc);
    Ok(out)
}
