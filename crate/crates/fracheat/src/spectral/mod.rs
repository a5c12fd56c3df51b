//! Periodic spectral discretization of the torus [-L, L)^N.
//!
//! A `Grid` fixes the sampling: n points per axis (n a power of two) with
//! spacing h = 2L/n, and the dual frequencies xi_k = pi k / L for integer
//! wavenumbers k in [-n/2, n/2). `Field` holds real samples, `SpectralField`
//! holds Fourier coefficients normalized so that the coefficient at xi = 0
//! is the mean of the field: a constant c transforms to c at the zero mode.
//!
//! All frequency-space operators in this crate are radial Fourier
//! multipliers m(|xi|), which keep the coefficients Hermitian-symmetric and
//! the samples real.

mod filters;
mod ops;

pub use filters::{build_zeta, FilterBank};
pub use ops::{apply_multiplier, dft, heat_semigroup, idft};

use crate::{Error, Result};
use rustfft::num_complex::Complex64;

/// Uniform periodic grid on [-L, L)^N, N = 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    l: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_dim: usize, half_width: f64) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return Err(Error::Usage(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if points_per_dim < 16 || !points_per_dim.is_power_of_two() {
            return Err(Error::Usage(format!(
                "points per dimension must be a power of two >= 16, got {points_per_dim}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Usage(format!("half width must be positive, got {half_width}")));
        }
        Ok(Grid { dim, n: points_per_dim, l: half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    /// Total number of samples, n^N.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    /// Sample spacing h = 2L/n.
    pub fn spacing(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Coordinate of sample i along one axis: -L + i h.
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + self.spacing() * i as f64
    }

    /// Signed integer wavenumber for transform index k: k itself below n/2,
    /// k - n above, covering [-n/2, n/2).
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Frequency pi k / L for transform index k along one axis.
    pub fn freq(&self, k: usize) -> f64 {
        std::f64::consts::PI * self.wavenumber(k) as f64 / self.l
    }

    /// |xi| for a flat coefficient index.
    pub fn freq_mag(&self, idx: usize) -> f64 {
        match self.dim {
            1 => self.freq(idx).abs(),
            _ => {
                let fx = self.freq(idx % self.n);
                let fy = self.freq(idx / self.n);
                fx.hypot(fy)
            }
        }
    }

    /// Smallest positive frequency pi/L.
    pub fn min_freq(&self) -> f64 {
        std::f64::consts::PI / self.l
    }

    /// Largest resolved frequency pi (n/2) / L along one axis.
    pub fn nyquist_freq(&self) -> f64 {
        std::f64::consts::PI * (self.n as f64 / 2.0) / self.l
    }

    /// Split a flat sample index into per-axis indices (ix, iy); iy = 0 in 1D.
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        match self.dim {
            1 => (idx, 0),
            _ => (idx % self.n, idx / self.n),
        }
    }
}

/// Real-valued samples on a grid. Values are finite by construction.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field needs {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("field sample is not finite: {bad}")));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Field> {
        Field::new(grid, vec![c; grid.len()])
    }

    /// Sample a function of one coordinate (1D grids).
    pub fn from_fn_1d(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Field> {
        if grid.dim() != 1 {
            return Err(Error::Usage("from_fn_1d needs a 1D grid".into()));
        }
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Field::new(grid, values)
    }

    /// Sample a function of two coordinates (2D grids).
    pub fn from_fn_2d(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if grid.dim() != 2 {
            return Err(Error::Usage("from_fn_2d needs a 2D grid".into()));
        }
        let n = grid.points_per_dim();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                values.push(f(grid.coord(ix), y));
            }
        }
        Field::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise map; the result is re-validated.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// h^N sum of samples: the Riemann integral over the torus.
    pub fn mass(&self) -> f64 {
        let cell = self.grid.spacing().powi(self.grid.dim() as i32);
        cell * self.values.iter().sum::<f64>()
    }

    /// h^N-weighted L^1 norm.
    pub fn l1_norm(&self) -> f64 {
        let cell = self.grid.spacing().powi(self.grid.dim() as i32);
        cell * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// h^N-weighted L^2 norm.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.grid.spacing().powi(self.grid.dim() as i32);
        (cell * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients of a real field; Hermitian symmetry
/// c(-k) = conj(c(k)) is validated on construction from raw data and
/// preserved by every operator in this module.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<SpectralField> {
        if coeffs.len() != grid.len() {
            return Err(Error::Usage(format!(
                "spectral field needs {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain(format!("coefficient is not finite: {bad}")));
        }
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let n = grid.points_per_dim();
        let tol = 1e-12 * scale.max(1e-300);
        let mirror = |k: usize| (n - k) % n;
        for idx in 0..coeffs.len() {
            let (kx, ky) = grid.unflatten(idx);
            let midx = match grid.dim() {
                1 => mirror(kx),
                _ => mirror(ky) * n + mirror(kx),
            };
            let d = (coeffs[idx] - coeffs[midx].conj()).norm();
            if d > tol {
                return Err(Error::Usage(format!(
                    "coefficients are not Hermitian-symmetric: index {idx} vs {midx} differ by {d:e}"
                )));
            }
        }
        Ok(SpectralField { grid, coeffs })
    }

    /// Construction from a transform that guarantees symmetry already.
    fn from_transform(grid: Grid, coeffs: Vec<Complex64>) -> SpectralField {
        SpectralField { grid, coeffs }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at xi = 0: the mean of the field.
    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// (2L)^N sum |c_k|^2; equals the squared L^2 norm of the samples.
    pub fn energy(&self) -> f64 {
        let vol = (2.0 * self.grid.half_width()).powi(self.grid.dim() as i32);
        vol * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Fraction of the energy carried by frequencies within 10% of the
    /// Nyquist boundary; high values mean the grid is too coarse for the
    /// data it carries.
    pub fn boundary_energy_fraction(&self) -> f64 {
        let cut = 0.9 * self.grid.nyquist_freq();
        let mut near = 0.0;
        let mut total = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.freq_mag(idx) >= cut {
                near += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            near / total
        }
    }

    /// Warning line for run manifests when boundary energy is significant.
    pub fn boundary_warning(&self) -> Option<String> {
        let frac = self.boundary_energy_fraction();
        if frac > 1e-6 {
            Some(format!(
                "spectral energy fraction {frac:.3e} sits within 10% of the Nyquist frequency; \
                 the grid may be under-resolving the data"
            ))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 48, 1.0).is_err());
        assert!(Grid::new(1, 8, 1.0).is_err());
        assert!(Grid::new(2, 64, -1.0).is_err());
        let g = Grid::new(2, 64, 3.0).unwrap();
        assert_eq!(g.len(), 4096);
        assert!((g.spacing() - 6.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn wavenumbers_cover_half_open_band() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let ks: Vec<i64> = (0..16).map(|k| g.wavenumber(k)).collect();
        assert_eq!(ks[0], 0);
        assert_eq!(ks[7], 7);
        assert_eq!(ks[8], -8);
        assert_eq!(ks[15], -1);
        // xi = pi k / L
        assert!((g.freq(1) - std::f64::consts::PI / 2.0).abs() < 1e-15);
        assert!((g.nyquist_freq() - 4.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        assert!(Field::new(g, vec![0.0; 15]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(Field::new(g, v).is_err());
    }

    #[test]
    fn mass_and_norms_on_a_constant() {
        let g = Grid::new(2, 32, 1.5).unwrap();
        let f = Field::constant(g, 2.0).unwrap();
        // integral of 2 over [-1.5,1.5)^2 = 2 * 9
        assert!((f.mass() - 18.0).abs() < 1e-12);
        assert!((f.l1_norm() - 18.0).abs() < 1e-12);
        assert!((f.l2_norm() - (2.0f64 * 2.0 * 9.0).sqrt()).abs() < 1e-12);
        assert_eq!(f.linf_norm(), 2.0);
    }

    #[test]
    fn hermitian_symmetry_is_enforced() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[1] = Complex64::new(1.0, 0.5);
        c[15] = Complex64::new(1.0, -0.5);
        assert!(SpectralField::new(g, c.clone()).is_ok());
        c[15] = Complex64::new(1.0, 0.5);
        let err = SpectralField::new(g, c).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }
}
