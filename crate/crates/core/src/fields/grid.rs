use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest grid the spectral operators are validated on.
pub const MIN_POINTS: usize = 16;

/// Uniform radial grid `r_j = j h`, `j = 1..=n`, `h = r_max / (n + 1)`.
///
/// Both endpoints are excluded: fields are stored through `w = r u`, which
/// vanishes at the origin and at the Dirichlet wall `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    r_max: T,
    spacing: T,
    nodes: Vec<T>,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(r_max: T, n_points: usize) -> Result<Self> {
        if !(r_max > T::zero()) || !r_max.is_finite() {
            return Err(Error::Config(format!("r_max must be positive and finite, got {r_max}")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::Config(format!(
                "n_points must be at least {MIN_POINTS}, got {n_points}"
            )));
        }
        Ok(Self::build(r_max, n_points))
    }

    /// Same as [`RadialGrid::new`] without the resolution floor; used for
    /// tiny hand-checkable grids.
    pub fn new_unchecked(r_max: T, n_points: usize) -> Self {
        Self::build(r_max, n_points)
    }

    fn build(r_max: T, n_points: usize) -> Self {
        let spacing = r_max / T::from_usize(n_points + 1).unwrap();
        let nodes = (1..=n_points).map(|j| T::from_usize(j).unwrap() * spacing).collect();
        RadialGrid { r_max, spacing, nodes }
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Grid with `2n + 1` points on the same domain (spacing halved).
    pub fn refined(&self) -> Self {
        Self::build(self.r_max, 2 * self.n_points() + 1)
    }
}
