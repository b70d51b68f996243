use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;

use super::grid::RadialGrid;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Complex radial profile `u(r)` sampled on a [`RadialGrid`].
///
/// Values are immutable once constructed; every transformation returns a
/// new field.
#[derive(Debug, Clone)]
pub struct RadialField<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<Complex<T>>,
    label: String,
}

impl<T: Real> RadialField<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<Complex<T>>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Data(format!(
                "field has {} samples but the grid has {} nodes",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(j) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Data(format!("non-finite sample at node {j}")));
        }
        Ok(RadialField { grid, values, label: label.into() })
    }

    /// Build from `w = r u` samples.
    pub fn from_reduced(grid: Arc<RadialGrid<T>>, w: &[Complex<T>], label: impl Into<String>) -> Result<Self> {
        let values = w.iter().zip(grid.nodes()).map(|(w, &r)| w / r).collect();
        Self::new(grid, values, label)
    }

    pub fn zero(grid: Arc<RadialGrid<T>>) -> Self {
        let n = grid.n_points();
        RadialField { grid, values: vec![Complex::new(T::zero(), T::zero()); n], label: "zero".into() }
    }

    /// Sample a real profile `f(r)`.
    pub fn from_fn(grid: Arc<RadialGrid<T>>, label: impl Into<String>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| Complex::new(f(r), T::zero())).collect();
        Self::new(grid, values, label)
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `w_j = r_j u_j`.
    pub fn reduced(&self) -> Vec<Complex<T>> {
        self.values.iter().zip(self.grid.nodes()).map(|(u, &r)| u * r).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == T::zero() && z.im == T::zero())
    }

    pub fn scaled(&self, c: T) -> Self {
        let values = self.values.iter().map(|z| z * c).collect();
        RadialField { grid: self.grid.clone(), values, label: self.label.clone() }
    }

    /// Multiply by `e^{i theta}`.
    pub fn rotated(&self, theta: T) -> Self {
        let p = Complex::from_polar(T::one(), theta);
        let values = self.values.iter().map(|z| z * p).collect();
        RadialField { grid: self.grid.clone(), values, label: self.label.clone() }
    }

    /// Multiply by `e^{i beta r^2}`.
    pub fn chirped(&self, beta: T) -> Self {
        let values = self
            .values
            .iter()
            .zip(self.grid.nodes())
            .map(|(z, &r)| z * Complex::from_polar(T::one(), beta * r * r))
            .collect();
        RadialField { grid: self.grid.clone(), values, label: self.label.clone() }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Render as CSV with header `r,re,im`, one row per node.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 64);
        out.push_str("r,re,im\n");
        for (r, z) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{:e},{:e},{:e}", r, z.re, z.im);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Parse the CSV produced by [`RadialField::to_csv_string`]. The grid is
    /// reconstructed from the node column, which must be uniform.
    pub fn from_csv_str(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "r,re,im" => {}
            _ => return Err(Error::Data("expected header `r,re,im`".into())),
        }
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Data(format!("line {}: expected 3 columns", i + 1)));
            }
            let parse = |s: &str| -> Result<T> {
                let x: f64 = s.trim().parse().map_err(|_| Error::Data(format!("line {}: bad number {s:?}", i + 1)))?;
                Ok(lit(x))
            };
            radii.push(parse(cols[0])?);
            values.push(Complex::new(parse(cols[1])?, parse(cols[2])?));
        }
        let n = radii.len();
        if n == 0 {
            return Err(Error::Data("no samples".into()));
        }
        let h = radii[0];
        let tol = h * lit(1e-9);
        for (j, &r) in radii.iter().enumerate() {
            let want = h * T::from_usize(j + 1).unwrap();
            if (r - want).abs() > tol * T::from_usize(j + 1).unwrap() {
                return Err(Error::Data(format!("node column is not uniform at row {}", j + 1)));
            }
        }
        let grid = Arc::new(RadialGrid::new_unchecked(h * T::from_usize(n + 1).unwrap(), n));
        Self::new(grid, values, label)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let label = path.as_ref().file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::from_csv_str(&text, label)
    }
}

/// `amplitude * exp(-r^2 / (2 width^2))`.
pub fn gaussian_profile<T: Real>(grid: Arc<RadialGrid<T>>, amplitude: T, width: T) -> Result<RadialField<T>> {
    if !(width > T::zero()) {
        return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
    }
    let two = lit::<T>(2.0);
    RadialField::from_fn(grid, "gaussian", |r| amplitude * (-(r * r) / (two * width * width)).exp())
}

/// `amplitude * sech(r / width)`.
pub fn sech_profile<T: Real>(grid: Arc<RadialGrid<T>>, amplitude: T, width: T) -> Result<RadialField<T>> {
    if !(width > T::zero()) {
        return Err(Error::Config(format!("sech width must be positive, got {width}")));
    }
    RadialField::from_fn(grid, "sech", |r| amplitude / (r / width).cosh())
}
