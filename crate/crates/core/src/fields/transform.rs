use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::RadialGrid;
use crate::scalar::{int, Real};

/// Sine-series representation of `w = r u` on a Dirichlet grid.
///
/// `w_j = sum_{m=1}^{n} c_m sin(k_m r_j)` with `k_m = m pi / r_max`. Both
/// directions are a type-I discrete sine transform, evaluated through one
/// complex FFT of length `2(n + 1)` on the odd extension.
#[derive(Clone)]
pub struct SineTransform<T: Real> {
    n: usize,
    fft: Arc<dyn Fft<T>>,
    wavenumbers: Vec<T>,
}

impl<T: Real> std::fmt::Debug for SineTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl<T: Real> SineTransform<T> {
    pub fn new(grid: &RadialGrid<T>) -> Self {
        let n = grid.n_points();
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        let dk = T::PI() / grid.r_max();
        let wavenumbers = (1..=n).map(|m| T::from_usize(m).unwrap() * dk).collect();
        SineTransform { n, fft, wavenumbers }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `k_m`, m = 1..=n.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// Raw DST-I: `X_m = sum_j x_j sin(pi j m / (n + 1))`.
    fn dst(&self, x: &[Complex<T>], out: &mut [Complex<T>], buf: &mut Vec<Complex<T>>) {
        let n = self.n;
        let len = 2 * (n + 1);
        buf.clear();
        buf.resize(len, Complex::new(T::zero(), T::zero()));
        for (j, &v) in x.iter().enumerate() {
            buf[j + 1] = v;
            buf[len - 1 - j] = -v;
        }
        self.fft.process(buf);
        let half = T::one() / int::<T>(2);
        // FFT of the odd extension is -2i X_m.
        for (m, o) in out.iter_mut().enumerate() {
            let y = buf[m + 1];
            *o = Complex::new(-y.im, y.re) * half;
        }
    }

    /// Sine coefficients `c_m` of `w`.
    pub fn forward(&self, w: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.n];
        let mut buf = Vec::new();
        self.forward_into(w, &mut out, &mut buf);
        out
    }

    pub fn forward_into(&self, w: &[Complex<T>], out: &mut [Complex<T>], buf: &mut Vec<Complex<T>>) {
        self.dst(w, out, buf);
        let scale = int::<T>(2) / T::from_usize(self.n + 1).unwrap();
        for o in out.iter_mut() {
            *o = *o * scale;
        }
    }

    /// Samples `w_j` from sine coefficients.
    pub fn inverse(&self, c: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.n];
        let mut buf = Vec::new();
        self.inverse_into(c, &mut out, &mut buf);
        out
    }

    pub fn inverse_into(&self, c: &[Complex<T>], out: &mut [Complex<T>], buf: &mut Vec<Complex<T>>) {
        self.dst(c, out, buf);
    }

    /// Spectral derivative `w'(r_j)` at the nodes.
    pub fn derivative(&self, w: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let len = 2 * (n + 1);
        let c = self.forward(w);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
        for (m, (&cm, &k)) in c.iter().zip(&self.wavenumbers).enumerate() {
            let d = cm * k;
            buf[m + 1] = d;
            buf[len - 1 - m] = d;
        }
        self.fft.process(&mut buf);
        let half = T::one() / int::<T>(2);
        buf[1..=n].iter().map(|&z| z * half).collect()
    }

    /// `int_0^{r_max} |w'|^2 dr` by Parseval.
    pub fn dirichlet_energy(&self, w: &[Complex<T>], r_max: T) -> T {
        let c = self.forward(w);
        self.dirichlet_energy_of_coeffs(&c, r_max)
    }

    pub fn dirichlet_energy_of_coeffs(&self, c: &[Complex<T>], r_max: T) -> T {
        let s = c.iter().zip(&self.wavenumbers).fold(T::zero(), |acc, (c, &k)| acc + c.norm_sqr() * k * k);
        s * r_max / int::<T>(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &RadialGrid<f64>, f: impl Fn(f64) -> f64) -> Vec<Complex<f64>> {
        grid.nodes().iter().map(|&r| Complex::new(f(r), 0.5 * f(r))).collect()
    }

    #[test]
    fn single_mode_is_recovered() {
        let grid = RadialGrid::<f64>::new(3.0, 31).unwrap();
        let t = SineTransform::new(&grid);
        let k3 = t.wavenumbers()[2];
        let w: Vec<_> = grid.nodes().iter().map(|&r| Complex::new((k3 * r).sin(), 0.0)).collect();
        let c = t.forward(&w);
        for (m, cm) in c.iter().enumerate() {
            let want = if m == 2 { 1.0 } else { 0.0 };
            assert!((cm.re - want).abs() < 1e-13 && cm.im.abs() < 1e-13, "m={m} {cm}");
        }
    }

    #[test]
    fn round_trip() {
        let grid = RadialGrid::new(10.0, 100).unwrap();
        let t = SineTransform::new(&grid);
        let w = sample(&grid, |r| r * (-r * r).exp() + 0.1 * (r * 0.7).sin());
        let back = t.inverse(&t.forward(&w));
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_odd_gaussian() {
        let grid = RadialGrid::new(20.0, 511).unwrap();
        let t = SineTransform::new(&grid);
        let w = sample(&grid, |r| r * (-r * r / 2.0).exp());
        let d = t.derivative(&w);
        for (r, dz) in grid.nodes().iter().zip(&d) {
            let want = (1.0 - r * r) * (-r * r / 2.0).exp();
            assert!((dz.re - want).abs() < 1e-10, "r={r}");
            assert!((dz.im - 0.5 * want).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval_matches_exact_integral() {
        // int_0^inf ((1 - r^2) e^{-r^2/2})^2 dr = 3 sqrt(pi) / 8
        let grid = RadialGrid::<f64>::new(20.0, 511).unwrap();
        let t = SineTransform::new(&grid);
        let w: Vec<_> = grid.nodes().iter().map(|&r| Complex::new(r * (-r * r / 2.0).exp(), 0.0)).collect();
        let e = t.dirichlet_energy(&w, grid.r_max());
        let want = 0.375 * std::f64::consts::PI.sqrt();
        assert!((e - want).abs() < 1e-12, "{e} vs {want}");
    }
}
