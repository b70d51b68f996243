//! Quadrature rules on the uniform radial grid.

use super::grid::RadialGrid;
use crate::scalar::{lit, Real};

/// Number of nodes next to the origin whose weights are corrected.
const CORRECTED_NODES: usize = 3;

/// Weights `omega_j` with `sum_j omega_j f(r_j) ~ int_0^inf r^beta f(r) dr`
/// for smooth even `f` decaying inside the grid, `0 <= beta < 2`.
///
/// Starts from the plain rule `h r_j^beta`, which is spectrally accurate
/// away from the origin but loses accuracy there because `r^beta` is not
/// smooth at 0 and the origin node is absent. The first three weights are
/// then fixed so the rule is exact on `r^{2m} exp(-(r/sigma)^2)`, m = 0, 1, 2.
pub fn singular_weights<T: Real>(grid: &RadialGrid<T>, beta: T) -> Vec<T> {
    let h = grid.spacing().to_f64().unwrap();
    let beta = beta.to_f64().unwrap();
    let r_max = grid.r_max().to_f64().unwrap();
    let n = grid.n_points();
    let r: Vec<f64> = (1..=n).map(|j| j as f64 * h).collect();
    let mut w: Vec<f64> = r.iter().map(|&r| h * r.powf(beta)).collect();

    let p = CORRECTED_NODES.min(n);
    let sigma = (r_max / 8.0).min(1.0);
    let mut a = [[0.0f64; CORRECTED_NODES]; CORRECTED_NODES];
    let mut b = [0.0f64; CORRECTED_NODES];
    for m in 0..p {
        let f = |r: f64| (r / sigma).powi(2 * m as i32) * (-(r / sigma).powi(2)).exp();
        let exact = sigma.powf(beta + 1.0) * libm::tgamma((beta + 2.0 * m as f64 + 1.0) / 2.0) / 2.0;
        b[m] = exact - r.iter().zip(&w).map(|(&r, &w)| w * f(r)).sum::<f64>();
        for i in 0..p {
            a[m][i] = f(r[i]);
        }
    }
    if let Some(d) = solve_small(&mut a, &mut b, p) {
        for i in 0..p {
            w[i] += d[i];
        }
    }
    w.into_iter().map(lit).collect()
}

/// Gaussian elimination with partial pivoting for the `p x p` leading block.
fn solve_small(
    a: &mut [[f64; CORRECTED_NODES]; CORRECTED_NODES],
    b: &mut [f64; CORRECTED_NODES],
    p: usize,
) -> Option<[f64; CORRECTED_NODES]> {
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..p {
            let f = a[row][col] / a[col][col];
            for c in col..p {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; CORRECTED_NODES];
    for row in (0..p).rev() {
        let s: f64 = (row + 1..p).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Cubic Lagrange basis on local nodes t = -1, 0, 1, 2 (power-basis
/// coefficients, constant term first).
const CUBIC_BASIS: [[f64; 4]; 4] = [
    [0.0, -1.0 / 3.0, 0.5, -1.0 / 6.0],
    [1.0, -0.5, -1.0, 0.5],
    [0.0, 1.0, 0.5, -0.5],
    [0.0, -1.0 / 6.0, 0.0, 1.0 / 6.0],
];

/// Weights of the four samples for `int_{t0}^{1} p(t) dt`, where `p` is
/// the cubic through t = -1, 0, 1, 2.
pub(crate) fn cubic_partial_weights(t0: f64) -> [f64; 4] {
    let anti = |c: &[f64; 4], t: f64| c[0] * t + c[1] * t * t / 2.0 + c[2] * t.powi(3) / 3.0 + c[3] * t.powi(4) / 4.0;
    let mut out = [0.0; 4];
    for (o, c) in out.iter_mut().zip(&CUBIC_BASIS) {
        *o = anti(c, 1.0) - anti(c, t0);
    }
    out
}

/// Value at `t` of the cubic through t = -1, 0, 1, 2.
pub(crate) fn cubic_eval(y: [f64; 4], t: f64) -> f64 {
    CUBIC_BASIS
        .iter()
        .zip(y)
        .map(|(c, y)| y * (c[0] + t * (c[1] + t * (c[2] + t * c[3]))))
        .sum()
}

/// Samples of an even-about-the-origin, even-about-the-wall density `g`
/// (such as `|w|^2`) extended by reflection: index `j` is node `j` with
/// the origin at 0 and the wall at `n + 1`.
pub(crate) fn reflected(g: &[f64], j: isize) -> f64 {
    let n = g.len() as isize;
    let wall = n + 1;
    let mut j = j;
    if j < 0 {
        j = -j;
    }
    if j > wall {
        j = 2 * wall - j;
    }
    if j == 0 || j == wall {
        0.0
    } else {
        g[(j - 1) as usize]
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 8, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn cubic_weights_integrate_cubics() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let y = [p(-1.0), p(0.0), p(1.0), p(2.0)];
        for t0 in [0.0, 0.3, 0.9] {
            let w = cubic_partial_weights(t0);
            let got: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
            let prim = |t: f64| t - t * t + t.powi(3) / 6.0 + 0.75 * t.powi(4);
            assert!((got - (prim(1.0) - prim(t0))).abs() < 1e-14);
            assert!((cubic_eval(y, t0) - p(t0)).abs() < 1e-13);
        }
        let full = cubic_partial_weights(0.0);
        let want = [-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0];
        for (a, b) in full.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_weights_are_accurate() {
        // int_0^inf r^beta e^{-r^2} (1 + r^2) dr with width 0.7
        let s: f64 = 0.7;
        for n in [1023usize, 4095] {
            let grid = RadialGrid::new(40.0, n).unwrap();
            for alpha in [1.0, 1.25, 1.5, 2.0] {
                let beta: f64 = 2.0 - alpha;
                let w = singular_weights(&grid, beta);
                let got: f64 =
                    grid.nodes().iter().zip(&w).map(|(&r, w)| w * (-(r / s).powi(2)).exp() * (1.0 + r * r)).sum();
                let want = s.powf(beta + 1.0) * libm::tgamma((beta + 1.0) / 2.0) / 2.0
                    + s.powf(beta + 3.0) * libm::tgamma((beta + 3.0) / 2.0) / 2.0;
                let tol = if n < 4000 { 1e-8 } else { 1e-11 };
                assert!(((got - want) / want).abs() < tol, "n={n} alpha={alpha}: {got} vs {want}");
            }
        }
    }
}
