//! Morrey and block-sum norms on the periodic grid.
//!
//! The Morrey score of a ball B(c, R) is R^{N/p - N/q} times the L^q norm
//! of the field over the cells whose centers lie in the (closed) ball,
//! measured with the cell volume h^N. The discrete norm takes the sup over
//! grid-point centers (strided for speed) and a radius ladder, so it is a
//! lower bound of the continuum norm that can only grow as centers or radii
//! are refined. Balls use the torus min-image distance.
//!
//! Block-sum norms weight dyadic frequency blocks by 2^{s j} and combine
//! them in l^r over the block index; r may be infinite.

use crate::spectral::{dft, idft, Field, FilterBank, Grid};
use crate::{Error, Result};

/// Parameters of the Morrey space M^q_p: 1 <= q <= p < infinity. `local`
/// caps ball radii at 1 instead of the torus diameter.
#[derive(Clone, Copy, Debug)]
pub struct MorreyParams {
    pub p: f64,
    pub q: f64,
    pub local: bool,
}

impl MorreyParams {
    pub fn new(p: f64, q: f64, local: bool) -> Result<MorreyParams> {
        if !(q >= 1.0 && p >= q && p.is_finite()) {
            return Err(Error::Usage(format!(
                "Morrey exponents need 1 <= q <= p < infinity, got p={p} q={q}"
            )));
        }
        Ok(MorreyParams { p, q, local })
    }
}

/// Parameters of a smoothness space built on M^q_p blocks: weight 2^{s j},
/// summation exponent r in [1, infinity]. When `homogeneous` is false the
/// mean of the field enters as one extra term alongside the blocks.
#[derive(Clone, Copy, Debug)]
pub struct SpaceParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub homogeneous: bool,
}

impl SpaceParams {
    pub fn new(s: f64, p: f64, q: f64, r: f64, homogeneous: bool) -> Result<SpaceParams> {
        MorreyParams::new(p, q, false)?;
        if !s.is_finite() {
            return Err(Error::Usage(format!("smoothness index must be finite, got {s}")));
        }
        if !(r >= 1.0) {
            return Err(Error::Usage(format!("summation exponent must be >= 1, got {r}")));
        }
        Ok(SpaceParams { s, p, q, r, homogeneous })
    }

    pub fn morrey(&self) -> MorreyParams {
        MorreyParams { p: self.p, q: self.q, local: false }
    }
}

/// Finitely many weighted point masses on the torus [-L, L)^N.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    dim: usize,
    half_width: f64,
    atoms: Vec<([f64; 2], f64)>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, half_width: f64, atoms: Vec<([f64; 2], f64)>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Usage(format!("measure dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Usage(format!("half width must be positive, got {half_width}")));
        }
        for &(pos, w) in &atoms {
            if !(pos[0].is_finite() && pos[1].is_finite() && w.is_finite()) {
                return Err(Error::Domain("measure atom is not finite".into()));
            }
            if pos[0].abs() > half_width || (dim == 2 && pos[1].abs() > half_width) {
                return Err(Error::Usage(format!(
                    "atom at ({}, {}) lies outside [-{half_width}, {half_width}]",
                    pos[0], pos[1]
                )));
            }
        }
        Ok(DiscreteMeasure { dim, half_width, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn atoms(&self) -> &[([f64; 2], f64)] {
        &self.atoms
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.abs()).sum()
    }

    /// Deposit each atom in its containing cell as a density value w / h^N.
    pub fn bin_to_grid(&self, grid: Grid) -> Result<Field> {
        if grid.dim() != self.dim {
            return Err(Error::Usage(format!(
                "measure dimension {} does not match grid dimension {}",
                self.dim,
                grid.dim()
            )));
        }
        if (grid.half_width() - self.half_width).abs() > 1e-12 * self.half_width {
            return Err(Error::Usage(format!(
                "measure lives on [-{}, {}) but the grid covers [-{}, {})",
                self.half_width,
                self.half_width,
                grid.half_width(),
                grid.half_width()
            )));
        }
        let n = grid.points_per_dim();
        let h = grid.spacing();
        let cell = h.powi(self.dim as i32);
        let mut values = vec![0.0; grid.len()];
        let index_of = |x: f64| -> usize {
            let i = ((x + grid.half_width()) / h).round() as i64;
            (i.rem_euclid(n as i64)) as usize
        };
        for &(pos, w) in &self.atoms {
            let ix = index_of(pos[0]);
            let idx = if self.dim == 1 { ix } else { index_of(pos[1]) * n + ix };
            values[idx] += w / cell;
        }
        Field::new(grid, values)
    }
}

/// Result of the discrete Morrey estimator.
#[derive(Clone, Debug)]
pub struct MorreyEstimate {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// |v|^q with exact branches for the common exponents, so that scaling the
/// field by a power of two scales every intermediate exactly.
fn pow_abs(v: f64, q: f64) -> f64 {
    if q == 1.0 {
        v.abs()
    } else if q == 2.0 {
        v * v
    } else {
        v.abs().powf(q)
    }
}

fn root(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x
    } else if q == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / q)
    }
}

/// Circular prefix sums of one row, for O(1) interval queries.
struct RowSums {
    prefix: Vec<f64>, // prefix[i] = sum of first i entries
}

impl RowSums {
    fn new(row: &[f64]) -> RowSums {
        let mut prefix = Vec::with_capacity(row.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for v in row {
            acc += v;
            prefix.push(acc);
        }
        RowSums { prefix }
    }

    fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Sum over indices within torus distance m of center ic.
    fn ball(&self, ic: i64, m: i64) -> f64 {
        let n = (self.prefix.len() - 1) as i64;
        if 2 * m + 1 >= n {
            return self.total();
        }
        let lo = (ic - m).rem_euclid(n);
        let hi = (ic + m).rem_euclid(n);
        if lo <= hi {
            self.prefix[(hi + 1) as usize] - self.prefix[lo as usize]
        } else {
            self.total() - self.prefix[lo as usize] + self.prefix[(hi + 1) as usize]
        }
    }
}

/// |u|^q on cells, organized for ball queries.
struct PowerSums {
    rows: Vec<RowSums>,
    n: i64,
}

impl PowerSums {
    fn new(f: &Field, q: f64) -> PowerSums {
        let grid = f.grid();
        let n = grid.points_per_dim();
        let cell = grid.spacing().powi(grid.dim() as i32);
        let powered: Vec<f64> = f.values().iter().map(|&v| pow_abs(v, q) * cell).collect();
        let rows = match grid.dim() {
            1 => vec![RowSums::new(&powered)],
            _ => powered.chunks_exact(n).map(RowSums::new).collect(),
        };
        PowerSums { rows, n: n as i64 }
    }

    /// Integral of |u|^q over the closed ball of radius R around grid point
    /// (icx, icy), measured in cells of size h.
    fn ball(&self, icx: i64, icy: i64, r_cells: f64) -> f64 {
        if self.rows.len() == 1 {
            let m = r_cells.floor() as i64;
            return self.rows[0].ball(icx, m);
        }
        // each torus row only once: offsets beyond n/2 alias earlier rows
        let my = r_cells.floor() as i64;
        let (lo, hi) = if 2 * my + 1 > self.n {
            (-self.n / 2, self.n / 2 - 1)
        } else {
            (-my, my)
        };
        let mut acc = 0.0;
        for dy in lo..=hi {
            let row = (icy + dy).rem_euclid(self.n) as usize;
            let mx = (r_cells * r_cells - (dy * dy) as f64).sqrt().floor() as i64;
            acc += self.rows[row].ball(icx, mx);
        }
        acc
    }
}

/// Radius ladder: dyadic multiples of h up to the torus diameter (or 1 for
/// local spaces), with the diameter itself appended so the largest ball
/// always covers the whole grid.
fn default_radii(grid: Grid, local: bool) -> Vec<f64> {
    let h = grid.spacing();
    let top = if local {
        1.0f64.min(grid.half_width() * (grid.dim() as f64).sqrt())
    } else {
        grid.half_width() * (grid.dim() as f64).sqrt()
    };
    let mut radii = Vec::new();
    let mut r = h;
    while r < top {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(top);
    radii
}

fn morrey_sup(
    f: &Field,
    mp: &MorreyParams,
    stride: usize,
    radii: &[f64],
) -> Result<(Vec<(f64, f64)>, Vec<String>)> {
    if stride == 0 {
        return Err(Error::Usage("center stride must be positive".into()));
    }
    let grid = f.grid();
    let ndim = grid.dim() as f64;
    let h = grid.spacing();
    let sums = PowerSums::new(f, mp.q);
    let exponent = ndim / mp.p - ndim / mp.q;
    let mut warnings = Vec::new();
    let mut profile = Vec::with_capacity(radii.len());
    let n = grid.points_per_dim() as i64;
    let centers_y: Vec<i64> = if grid.dim() == 1 {
        vec![0]
    } else {
        (0..n).step_by(stride).collect()
    };
    let centers_x: Vec<i64> = (0..n).step_by(stride).collect();
    for &radius in radii {
        if !(radius > 0.0) {
            return Err(Error::Usage(format!("ball radius must be positive, got {radius}")));
        }
        let r_cells = radius / h + 1e-9;
        let mut best = f64::NEG_INFINITY;
        for &icy in &centers_y {
            for &icx in &centers_x {
                let mass = sums.ball(icx, icy, r_cells);
                best = best.max(mass);
            }
        }
        if best <= 0.0 && radii.len() > 1 {
            warnings.push(format!("ball of radius {radius} captured no mass; skipped"));
            continue;
        }
        let score = if exponent == 0.0 {
            root(best, mp.q)
        } else {
            radius.powf(exponent) * root(best, mp.q)
        };
        profile.push((radius, score));
    }
    Ok((profile, warnings))
}

/// Discrete Morrey norm of a field: sup over strided centers and the
/// default radius ladder.
pub fn morrey_norm(f: &Field, mp: &MorreyParams, stride: usize) -> Result<MorreyEstimate> {
    let radii = default_radii(f.grid(), mp.local);
    let (profile, warnings) = morrey_sup(f, mp, stride, &radii)?;
    let value = profile.iter().fold(0.0f64, |m, &(_, s)| m.max(s));
    Ok(MorreyEstimate { value, warnings })
}

/// Per-radius best scores for a caller-supplied radius ladder; the Morrey
/// norm estimate is the max of the returned scores.
pub fn morrey_profile(
    f: &Field,
    mp: &MorreyParams,
    stride: usize,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    Ok(morrey_sup(f, mp, stride, radii)?.0)
}

/// Morrey norm of a discrete measure: sup over atoms as centers and the
/// given radii of R^{N/p - N} |mu|(B(c, R)).
pub fn measure_morrey_norm(
    m: &DiscreteMeasure,
    mp: &MorreyParams,
    radii: &[f64],
) -> Result<f64> {
    let ndim = m.dim() as f64;
    let exponent = ndim / mp.p - ndim;
    let l = m.half_width();
    let dist = |a: &[f64; 2], b: &[f64; 2]| -> f64 {
        let mut s = 0.0;
        for ax in 0..m.dim() {
            let mut d = (a[ax] - b[ax]).abs() % (2.0 * l);
            if d > l {
                d = 2.0 * l - d;
            }
            s += d * d;
        }
        s.sqrt()
    };
    let mut best = 0.0f64;
    for &radius in radii {
        if !(radius > 0.0) {
            return Err(Error::Usage(format!("ball radius must be positive, got {radius}")));
        }
        for (center, _) in m.atoms() {
            let mass: f64 = m
                .atoms()
                .iter()
                .filter(|(pos, _)| dist(center, pos) <= radius)
                .map(|(_, w)| w.abs())
                .sum();
            let score = if exponent == 0.0 { mass } else { radius.powf(exponent) * mass };
            best = best.max(score);
        }
    }
    Ok(best)
}

fn check_bank(f: &Field, bank: &FilterBank) -> Result<()> {
    if f.grid() != bank.grid() {
        return Err(Error::Usage(
            "field and filter bank are built on different grids".into(),
        ));
    }
    Ok(())
}

fn lr_combine(terms: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        terms.iter().fold(0.0f64, |m, &t| m.max(t))
    } else {
        terms
            .iter()
            .map(|t| t.powf(r))
            .sum::<f64>()
            .powf(1.0 / r)
    }
}

/// Block-sum Morrey norm of a field: l^r over j of 2^{s j} times the
/// Morrey norm of block j.
pub fn besov_morrey_norm(
    f: &Field,
    sp: &SpaceParams,
    bank: &FilterBank,
    stride: usize,
) -> Result<f64> {
    check_bank(f, bank)?;
    let mp = sp.morrey();
    let sf = dft(f);
    let mut terms = Vec::with_capacity(bank.blocks().len() + 1);
    if !sp.homogeneous {
        let constant = Field::constant(f.grid(), sf.zero_mode().re)?;
        terms.push(morrey_norm(&constant, &mp, stride)?.value);
    }
    for &j in bank.blocks() {
        let piece = idft(&bank.block(&sf, j)?)?;
        let val = morrey_norm(&piece, &mp, stride)?.value;
        terms.push((2.0f64).powi(j).powf(sp.s) * val);
    }
    Ok(lr_combine(&terms, sp.r))
}

/// Same norm evaluated on a measure after binning it to the grid.
pub fn besov_morrey_norm_of_measure(
    m: &DiscreteMeasure,
    sp: &SpaceParams,
    bank: &FilterBank,
    stride: usize,
) -> Result<f64> {
    let f = m.bin_to_grid(bank.grid())?;
    besov_morrey_norm(&f, sp, bank, stride)
}

/// l^1 block sum with L^1 block norms: sum_j 2^{s j} |block_j|_{L^1}.
pub fn besov_l1_norm(f: &Field, s: f64, bank: &FilterBank) -> Result<f64> {
    check_bank(f, bank)?;
    let sf = dft(f);
    let mut acc = 0.0;
    for &j in bank.blocks() {
        let piece = idft(&bank.block(&sf, j)?)?;
        acc += (2.0f64).powi(j).powf(s) * piece.l1_norm();
    }
    Ok(acc)
}

/// Largest weighted block Morrey norm over blocks j >= j0: the discrete
/// stand-in for the high-frequency limsup that detects escape of smallness.
pub fn highfreq_limsup(
    f: &Field,
    s: f64,
    mp: &MorreyParams,
    bank: &FilterBank,
    j0: i32,
    stride: usize,
) -> Result<f64> {
    check_bank(f, bank)?;
    let top = *bank.blocks().last().expect("bank has blocks");
    if j0 > top {
        return Err(Error::Domain(format!(
            "threshold block {j0} exceeds the top resolved block {top}"
        )));
    }
    let sf = dft(f);
    let mut best = 0.0f64;
    for &j in bank.blocks().iter().filter(|&&j| j >= j0) {
        let piece = idft(&bank.block(&sf, j)?)?;
        let val = morrey_norm(&piece, mp, stride)?.value;
        best = best.max((2.0f64).powi(j).powf(s) * val);
    }
    Ok(best)
}
