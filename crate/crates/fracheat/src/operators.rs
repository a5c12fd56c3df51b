//! Propagators of the time-fractional heat flow and their Duhamel weights.
//!
//! Both solution operators act diagonally in frequency. The first,
//! P(t) = E_a(-|xi|^2 t^a), carries initial data; the second,
//! S(t) = E_{a,a}(-|xi|^2 t^a), is the kernel of the memory integral. Each
//! has two independent evaluation routes: the Mittag-Leffler closed form
//! per mode, and subordination against the Wright density,
//! int_0^inf Phi_a(theta) e^{-|xi|^2 t^a theta} dtheta (with an extra
//! a theta weight for S). The routes share no code below the multiplier
//! and serve as each other's oracle.
//!
//! Because (d/dt) E_a(-l t^a) = -l t^{a-1} E_{a,a}(-l t^a), the weight of
//! a piecewise-constant Duhamel rule over [a,b] at target time t is exactly
//! [E_a(-l (t-b)^a) - E_a(-l (t-a)^a)] / l per mode; no quadrature in time
//! is needed.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;

use crate::norms::{besov_morrey_norm, SpaceParams};
use crate::specfun::{recip_gamma, MlEvaluator, WrightEvaluator};
use crate::spectral::{dft, heat_semigroup, idft, Field, FilterBank, Grid, SpectralField};
use crate::{Error, Result};

/// Fractional order, nonlinearity power, and space dimension of the flow.
#[derive(Clone, Copy, Debug)]
pub struct FracParams {
    pub alpha: f64,
    pub gamma: f64,
    pub dim: usize,
}

impl FracParams {
    /// alpha in (0,1] (alpha = 1 is the classical limit), gamma > 1.
    pub fn new(alpha: f64, gamma: f64, dim: usize) -> Result<FracParams> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Usage(format!(
                "fractional order must lie in (0,1], got {alpha}"
            )));
        }
        if !(gamma > 1.0) {
            return Err(Error::Usage(format!(
                "nonlinearity power must exceed 1, got {gamma}"
            )));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::Usage(format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(FracParams { alpha, gamma, dim })
    }
}

/// How per-mode propagator multipliers are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorBackend {
    /// Closed form E_a / E_{a,a} per mode.
    MlMultiplier,
    /// Wright-density quadrature per mode; `tail_tol` caps the admissible
    /// truncation of the theta integral.
    Subordination { tail_tol: f64 },
}

impl OperatorBackend {
    pub fn subordination() -> OperatorBackend {
        OperatorBackend::Subordination { tail_tol: 1e-9 }
    }
}

impl Default for OperatorBackend {
    fn default() -> OperatorBackend {
        OperatorBackend::MlMultiplier
    }
}

// Evaluator tables are expensive to build (double-double coefficient and
// quadrature setup), so they are shared process-wide keyed by order.
fn ml_cached(alpha: f64, beta: f64) -> Result<Arc<MlEvaluator>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<MlEvaluator>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (alpha.to_bits(), beta.to_bits());
    let mut map = cache.lock().expect("evaluator cache poisoned");
    match map.entry(key) {
        Entry::Occupied(e) => Ok(e.get().clone()),
        Entry::Vacant(v) => {
            let ev = Arc::new(MlEvaluator::new(alpha, beta)?);
            Ok(v.insert(ev).clone())
        }
    }
}

fn wright_cached(alpha: f64) -> Result<Arc<WrightEvaluator>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<WrightEvaluator>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("evaluator cache poisoned");
    match map.entry(alpha.to_bits()) {
        Entry::Occupied(e) => Ok(e.get().clone()),
        Entry::Vacant(v) => {
            let ev = Arc::new(WrightEvaluator::new(alpha)?);
            Ok(v.insert(ev).clone())
        }
    }
}

/// Integer |k|^2 for a flat coefficient index: the dedup key for radial
/// multipliers, exact where floating-point |xi| is not.
pub(crate) fn mode_key(grid: Grid, idx: usize) -> u64 {
    let (ix, iy) = grid.unflatten(idx);
    let kx = grid.wavenumber(ix);
    let ky = if grid.dim() == 2 { grid.wavenumber(iy) } else { 0 };
    (kx * kx + ky * ky) as u64
}

/// Evaluate a radial symbol once per distinct |k|^2 and scatter the values
/// over all modes.
fn mode_table(grid: Grid, symbol: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let lam0 = grid.min_freq() * grid.min_freq();
    let mut by_key: HashMap<u64, f64> = HashMap::new();
    let mut out = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let key = mode_key(grid, idx);
        let value = match by_key.entry(key) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(v) => *v.insert(symbol(lam0 * key as f64)?),
        };
        out.push(value);
    }
    Ok(out)
}

fn backend_requires_fractional(fp: &FracParams, backend: &OperatorBackend) -> Result<()> {
    if fp.alpha == 1.0 {
        if let OperatorBackend::Subordination { .. } = backend {
            return Err(Error::Usage(
                "subordination backend needs alpha < 1; use the closed-form backend at alpha = 1"
                    .into(),
            ));
        }
    }
    Ok(())
}

fn check_dims(fp: &FracParams, grid: Grid) -> Result<()> {
    if fp.dim != grid.dim() {
        return Err(Error::Usage(format!(
            "parameters are for dimension {} but the grid has dimension {}",
            fp.dim,
            grid.dim()
        )));
    }
    Ok(())
}

/// Per-mode multipliers of the data propagator at time t > 0. The zero
/// mode is pinned to 1 in both backends: the flow conserves mass.
pub fn p_alpha_multipliers(
    fp: &FracParams,
    grid: Grid,
    t: f64,
    backend: &OperatorBackend,
) -> Result<Vec<f64>> {
    check_dims(fp, grid)?;
    backend_requires_fractional(fp, backend)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("propagator needs t > 0, got {t}")));
    }
    let ta = t.powf(fp.alpha);
    match backend {
        OperatorBackend::MlMultiplier => {
            let ml = ml_cached(fp.alpha, 1.0)?;
            mode_table(grid, |lam| if lam == 0.0 { Ok(1.0) } else { ml.eval(-lam * ta) })
        }
        OperatorBackend::Subordination { tail_tol } => {
            let w = wright_cached(fp.alpha)?;
            mode_table(grid, |lam| {
                if lam == 0.0 {
                    return Ok(1.0);
                }
                let value = w.laplace(lam * ta);
                // the integrand is bounded by 1, so the neglected tail is at
                // most the mass deficit of the quadrature window
                let tail = (1.0 - w.truncated_moment(0.0)).abs();
                if tail > *tail_tol {
                    return Err(Error::Accuracy {
                        what: "subordination quadrature tail exceeds the requested tolerance"
                            .into(),
                        bound: tail,
                    });
                }
                Ok(value)
            })
        }
    }
}

/// Per-mode multipliers of the memory kernel at time t > 0. The zero mode
/// equals 1/Gamma(alpha) exactly (the first Wright moment times alpha).
pub fn s_alpha_multipliers(
    fp: &FracParams,
    grid: Grid,
    t: f64,
    backend: &OperatorBackend,
) -> Result<Vec<f64>> {
    check_dims(fp, grid)?;
    backend_requires_fractional(fp, backend)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("propagator needs t > 0, got {t}")));
    }
    let ta = t.powf(fp.alpha);
    let zero_mode = recip_gamma(fp.alpha);
    match backend {
        OperatorBackend::MlMultiplier => {
            let ml = ml_cached(fp.alpha, fp.alpha)?;
            mode_table(grid, |lam| {
                if lam == 0.0 {
                    Ok(zero_mode)
                } else {
                    ml.eval(-lam * ta)
                }
            })
        }
        OperatorBackend::Subordination { tail_tol } => {
            let w = wright_cached(fp.alpha)?;
            mode_table(grid, |lam| {
                if lam == 0.0 {
                    return Ok(zero_mode);
                }
                let value = w.laplace_weighted(lam * ta);
                let tail = (fp.alpha * w.moment(1.0)? - w.truncated_moment(1.0) * fp.alpha).abs();
                if tail > *tail_tol {
                    return Err(Error::Accuracy {
                        what: "subordination quadrature tail exceeds the requested tolerance"
                            .into(),
                        bound: tail,
                    });
                }
                Ok(value)
            })
        }
    }
}

/// Multiply coefficients by a precomputed per-mode real table.
pub fn apply_mode_multipliers(sf: &SpectralField, table: &[f64]) -> Result<SpectralField> {
    if table.len() != sf.coeffs().len() {
        return Err(Error::Usage(format!(
            "multiplier table has {} entries for {} modes",
            table.len(),
            sf.coeffs().len()
        )));
    }
    let coeffs: Vec<Complex64> = sf
        .coeffs()
        .iter()
        .zip(table)
        .map(|(c, &m)| c * m)
        .collect();
    SpectralField::new(sf.grid(), coeffs)
}

/// Apply the data propagator to a field.
pub fn p_alpha(t: f64, mu: &Field, fp: &FracParams, backend: &OperatorBackend) -> Result<Field> {
    let table = p_alpha_multipliers(fp, mu.grid(), t, backend)?;
    idft(&apply_mode_multipliers(&dft(mu), &table)?)
}

/// Apply the memory kernel to a field.
pub fn s_alpha(t: f64, f: &Field, fp: &FracParams, backend: &OperatorBackend) -> Result<Field> {
    let table = s_alpha_multipliers(fp, f.grid(), t, backend)?;
    idft(&apply_mode_multipliers(&dft(f), &table)?)
}

/// Exact weight of the memory integral over [a, b] at target time t for one
/// eigenvalue lambda = |xi|^2: int_a^b (t-tau)^{alpha-1} E_{a,a}(-lambda
/// (t-tau)^alpha) dtau, closed under the derivative identity above.
pub fn duhamel_weight(
    fp: &FracParams,
    lambda: f64,
    t_target: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "eigenvalue must be nonnegative, got {lambda}"
        )));
    }
    if !(0.0 <= a && a < b && b <= t_target) {
        return Err(Error::Usage(format!(
            "need 0 <= a < b <= t, got a={a} b={b} t={t_target}"
        )));
    }
    let al = fp.alpha;
    let ua = (t_target - a).powf(al);
    let ub = (t_target - b).powf(al);
    if lambda == 0.0 {
        return Ok((ua - ub) / al);
    }
    let ml = ml_cached(al, 1.0)?;
    Ok((ml.eval(-lambda * ub)? - ml.eval(-lambda * ua)?) / lambda)
}

/// Duhamel weights for every mode of a grid, deduplicated over |k|^2.
pub fn duhamel_mode_weights(
    fp: &FracParams,
    grid: Grid,
    t_target: f64,
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    check_dims(fp, grid)?;
    mode_table(grid, |lam| duhamel_weight(fp, lam, t_target, a, b))
}

/// Which propagator a smoothing measurement drives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothingOp {
    PAlpha,
    SAlpha,
    Heat,
}

/// Least-squares fit of a decay exponent, with the rate the smoothing
/// estimates predict for comparison.
#[derive(Clone, Copy, Debug)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub expected: f64,
}

/// Ordinary least squares y = intercept + slope x; residual is the rms
/// misfit. Needs at least two distinct abscissas.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Usage(format!(
            "line fit needs matching samples, at least 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Usage("line fit abscissas are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let d = y - intercept - slope * x;
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, intercept, residual))
}

/// Measure how fast a propagator gains smoothness: fit the log of the
/// block norm at smoothness sigma of op(t) data against log t. The
/// prediction is (s - sigma) alpha / 2 for the fractional operators and
/// (s - sigma) / 2 for the heat flow, valid for sigma >= s with a gap
/// below 4 (memory kernel) or 2 (data propagator).
#[allow(clippy::too_many_arguments)]
pub fn smoothing_slope(
    op: SmoothingOp,
    data: &Field,
    space: &SpaceParams,
    sigma: f64,
    bank: &FilterBank,
    stride: usize,
    fp: &FracParams,
    backend: &OperatorBackend,
    t_grid: &[f64],
) -> Result<SlopeFit> {
    let gap = sigma - space.s;
    if gap < 0.0 {
        return Err(Error::Usage(format!(
            "target smoothness {sigma} must not fall below the data smoothness {}",
            space.s
        )));
    }
    let cap = match op {
        SmoothingOp::SAlpha => Some(4.0),
        SmoothingOp::PAlpha => Some(2.0),
        SmoothingOp::Heat => None,
    };
    if let Some(cap) = cap {
        if gap >= cap {
            return Err(Error::Usage(format!(
                "smoothness gap {gap} reaches {cap}, outside the estimate's range"
            )));
        }
    }
    if t_grid.len() < 4 {
        return Err(Error::Usage(format!(
            "slope fit needs at least 4 times, got {}",
            t_grid.len()
        )));
    }
    let target = SpaceParams::new(sigma, space.p, space.q, space.r, space.homogeneous)?;
    let mut xs = Vec::with_capacity(t_grid.len());
    let mut ys = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let evolved = match op {
            SmoothingOp::PAlpha => p_alpha(t, data, fp, backend)?,
            SmoothingOp::SAlpha => s_alpha(t, data, fp, backend)?,
            SmoothingOp::Heat => heat_semigroup(data, t)?,
        };
        let norm = besov_morrey_norm(&evolved, &target, bank, stride)?;
        if norm <= 0.0 {
            return Err(Error::Domain(format!(
                "block norm vanished at t={t}; no slope to fit"
            )));
        }
        xs.push(t.ln());
        ys.push(norm.ln());
    }
    let (slope, intercept, residual) = linear_fit(&xs, &ys)?;
    let expected = match op {
        SmoothingOp::Heat => -gap / 2.0,
        _ => -gap * fp.alpha / 2.0,
    };
    Ok(SlopeFit { slope, intercept, residual, expected })
}
