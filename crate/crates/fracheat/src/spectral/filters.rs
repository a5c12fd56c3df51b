//! Dyadic frequency decomposition.
//!
//! The cutoff zeta is 1 on [0, 3/2], 0 on [5/3, infinity), and glues the
//! plateaus with the standard e^{-1/x} mollifier ramp, so the block symbols
//! phi_j(r) = zeta(2^{-j} r) - zeta(2^{-j+1} r) are smooth bumps supported
//! in (3 2^j/4, 5 2^j/3) that telescope to an exact partition of unity on
//! every resolved frequency: the sum over a contiguous range [j0, j1]
//! collapses to zeta(2^{-j1} r) - zeta(2^{-j0+1} r).

use super::{Field, Grid, SpectralField};
use crate::{Error, Result};
use super::ops::apply_multiplier;

fn mollifier(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn zeta(t: f64) -> f64 {
    if t <= 1.5 {
        1.0
    } else if t >= 5.0 / 3.0 {
        0.0
    } else {
        // rescale (3/2, 5/3) onto (1, 0) and ride the mollifier step
        let u = 6.0 * (5.0 / 3.0 - t);
        let a = mollifier(u);
        a / (a + mollifier(1.0 - u))
    }
}

/// The radial cutoff underlying the dyadic blocks.
pub fn build_zeta() -> impl Fn(f64) -> f64 + Copy {
    zeta
}

/// Block symbol phi_j evaluated at radius r.
fn phi_symbol(j: i32, r: f64) -> f64 {
    let scale = (2.0f64).powi(-j);
    zeta(r * scale) - zeta(r * scale * 2.0)
}

/// A contiguous range of dyadic frequency blocks adapted to one grid.
///
/// Blocks whose support contains no grid frequency are dropped and noted in
/// `warnings`. The retained blocks sum to 1 on every nonzero grid frequency
/// when the range covers the grid (as the automatic range does); the zero
/// mode is annihilated, so reconstruction from blocks recovers a field
/// minus its mean.
#[derive(Clone, Debug)]
pub struct FilterBank {
    grid: Grid,
    blocks: Vec<i32>,
    dropped: Vec<i32>,
    warnings: Vec<String>,
}

impl FilterBank {
    /// Bank covering every frequency the grid resolves, from pi/L out to
    /// the largest |xi| on the lattice (the diagonal corner in 2D).
    pub fn new(grid: Grid) -> FilterBank {
        let (lo, hi) = Self::auto_range(grid);
        Self::with_range(grid, lo, hi).expect("automatic range is never empty")
    }

    /// Smallest and largest block indices that meet the grid's frequencies.
    pub fn auto_range(grid: Grid) -> (i32, i32) {
        let xi_min = grid.min_freq();
        let xi_top = grid.nyquist_freq() * (grid.dim() as f64).sqrt();
        let mut lo = -1100i32;
        while (5.0 / 3.0) * (2.0f64).powi(lo) <= xi_min {
            lo += 1;
        }
        let mut hi = lo;
        while 0.75 * (2.0f64).powi(hi + 1) < xi_top {
            hi += 1;
        }
        (lo, hi)
    }

    /// Bank over an explicit block range [j_lo, j_hi].
    pub fn with_range(grid: Grid, j_lo: i32, j_hi: i32) -> Result<FilterBank> {
        if j_lo > j_hi {
            return Err(Error::Usage(format!(
                "empty block range: {j_lo} > {j_hi}"
            )));
        }
        let mut blocks = Vec::new();
        let mut dropped = Vec::new();
        for j in j_lo..=j_hi {
            let occupied = (0..grid.len()).any(|idx| phi_symbol(j, grid.freq_mag(idx)) != 0.0);
            if occupied {
                blocks.push(j);
            } else {
                dropped.push(j);
            }
        }
        let mut warnings = Vec::new();
        if !dropped.is_empty() {
            warnings.push(format!(
                "dropped {} block(s) containing no grid frequency: {dropped:?}",
                dropped.len()
            ));
        }
        Ok(FilterBank { grid, blocks, dropped, warnings })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Retained block indices, ascending.
    pub fn blocks(&self) -> &[i32] {
        &self.blocks
    }

    pub fn dropped(&self) -> &[i32] {
        &self.dropped
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Block symbol phi_j at radius r.
    pub fn phi(&self, j: i32, r: f64) -> f64 {
        phi_symbol(j, r)
    }

    /// Project coefficients onto block j.
    pub fn block(&self, sf: &SpectralField, j: i32) -> Result<SpectralField> {
        if !self.blocks.contains(&j) {
            return Err(Error::Usage(format!("block {j} is not in the bank")));
        }
        apply_multiplier(sf, |r| phi_symbol(j, r))
    }

    /// Real-space samples of block j of a field.
    pub fn block_field(&self, f: &Field, j: i32) -> Result<Field> {
        super::ops::idft(&self.block(&super::ops::dft(f), j)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::{dft, idft};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zeta_plateaus_are_exact() {
        let z = build_zeta();
        for t in [0.0, 0.7, 1.0, 1.4999, 1.5] {
            assert_eq!(z(t), 1.0, "t={t}");
        }
        for t in [5.0 / 3.0, 1.7, 2.0, 100.0] {
            assert_eq!(z(t), 0.0, "t={t}");
        }
    }

    #[test]
    fn zeta_ramp_is_monotone_and_lipschitz() {
        let z = build_zeta();
        let mut prev = 1.0;
        let steps = 2000;
        for i in 0..=steps {
            let t = 1.5 + (5.0 / 3.0 - 1.5) * i as f64 / steps as f64;
            let v = z(t);
            assert!(v <= prev + 1e-15, "not monotone at t={t}");
            assert!((prev - v).abs() <= 15.0 * (1.0 / 6.0) / steps as f64 * 1.5);
            prev = v;
        }
        assert!(z(1.58) > 0.1 && z(1.58) < 0.9);
    }

    #[test]
    fn block_support_is_sharp() {
        let bank = FilterBank::new(Grid::new(1, 64, 1.0).unwrap());
        for &j in bank.blocks() {
            let lo = 0.75 * (2.0f64).powi(j);
            let hi = 5.0 / 3.0 * (2.0f64).powi(j);
            assert_eq!(bank.phi(j, lo), 0.0);
            assert_eq!(bank.phi(j, hi), 0.0);
            assert_eq!(bank.phi(j, lo * 0.9), 0.0);
            assert_eq!(bank.phi(j, hi * 1.1), 0.0);
            assert!(bank.phi(j, 1.5 * (2.0f64).powi(j)) == 1.0);
            assert!(bank.phi(j, lo * 1.5) > 0.0);
        }
    }

    #[test]
    fn partition_of_unity_on_resolved_frequencies() {
        for (dim, n) in [(1usize, 256usize), (1, 1024), (2, 64)] {
            let grid = Grid::new(dim, n, 3.0).unwrap();
            let bank = FilterBank::new(grid);
            for idx in 0..grid.len() {
                let r = grid.freq_mag(idx);
                if r == 0.0 {
                    continue;
                }
                let sum: f64 = bank.blocks().iter().map(|&j| bank.phi(j, r)).sum();
                assert!(
                    (sum - 1.0).abs() <= 1e-12,
                    "dim {dim} n {n}: sum {sum} at r={r}"
                );
            }
        }
    }

    #[test]
    fn blocks_reassemble_a_zero_mean_field() {
        let grid = Grid::new(2, 32, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut vals: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        for v in &mut vals {
            *v -= mean;
        }
        let f = Field::new(grid, vals).unwrap();
        let bank = FilterBank::new(grid);
        let sf = dft(&f);
        let mut acc = vec![0.0; grid.len()];
        for &j in bank.blocks() {
            let piece = idft(&bank.block(&sf, j).unwrap()).unwrap();
            for (a, p) in acc.iter_mut().zip(piece.values()) {
                *a += p;
            }
        }
        let scale = f.linf_norm();
        for (a, b) in acc.iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn out_of_band_blocks_are_dropped_with_warning() {
        let grid = Grid::new(1, 64, std::f64::consts::PI).unwrap();
        // resolved band is [1, 32]; blocks far outside carry nothing
        let bank = FilterBank::with_range(grid, -6, 12).unwrap();
        assert!(!bank.dropped().is_empty());
        assert_eq!(bank.warnings().len(), 1);
        assert!(bank.warnings()[0].contains("no grid frequency"));
        for &j in bank.dropped() {
            assert!(!bank.blocks().contains(&j));
        }
        // the automatic range never drops anything
        let auto = FilterBank::new(grid);
        assert!(auto.dropped().is_empty());
        assert!(auto.warnings().is_empty());
        assert!(auto.blocks().len() >= 5);
    }

    #[test]
    fn block_projection_rejects_unknown_index() {
        let grid = Grid::new(1, 32, 1.0).unwrap();
        let bank = FilterBank::new(grid);
        let sf = dft(&Field::constant(grid, 1.0).unwrap());
        assert!(bank.block(&sf, 999).is_err());
    }
}
