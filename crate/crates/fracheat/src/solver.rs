//! Mild solutions by Picard iteration over a whole time grid.
//!
//! The fixed-point map is the Duhamel form of the flow,
//!
//! ```text
//!   u(t) = P(t) mu + int_0^t (t-tau)^{a-1} S(t-tau) |u|^{g-1} u(tau) dtau,
//! ```
//!
//! iterated over all nodes of a graded grid at once rather than marched in
//! time, so successive distances in the weighted norm
//! sup_t t^{-s a/2} |u(t)|_{M^p_q} expose the contraction ratio directly.
//! The memory integral uses piecewise-constant product integration with
//! exact per-mode kernel weights; the grading exponent concentrates nodes
//! near t = 0 where the integrand of the nonlinear estimate carries the
//! weight tau^{s a g / 2}.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::norms::{morrey_norm, MorreyParams, SpaceParams};
use crate::operators::{
    apply_mode_multipliers, mode_key, p_alpha_multipliers, FracParams, OperatorBackend,
};
use crate::specfun::MlEvaluator;
use crate::spectral::{dft, idft, Field, Grid, SpectralField};
use crate::{Error, Result};

/// Discrete time nodes 0 = t_0 < t_1 < ... < t_M = T.
#[derive(Clone, Debug)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Power-law grading t_m = T (m/M)^rho, rho >= 1; rho = 1 is uniform.
    pub fn graded(t_horizon: f64, segments: usize, rho: f64) -> Result<TimeGrid> {
        if !(t_horizon > 0.0 && t_horizon.is_finite()) {
            return Err(Error::Usage(format!("horizon must be positive, got {t_horizon}")));
        }
        if segments == 0 {
            return Err(Error::Usage("time grid needs at least one segment".into()));
        }
        if !(rho >= 1.0 && rho.is_finite()) {
            return Err(Error::Usage(format!("grading exponent must be >= 1, got {rho}")));
        }
        let m = segments as f64;
        let nodes = (0..=segments)
            .map(|i| t_horizon * (i as f64 / m).powf(rho))
            .collect();
        Ok(TimeGrid { nodes })
    }

    /// Geometric spacing from t_first out to the horizon, with t_0 = 0.
    pub fn log_spaced(t_horizon: f64, segments: usize, t_first: f64) -> Result<TimeGrid> {
        if !(t_horizon > 0.0 && t_horizon.is_finite()) {
            return Err(Error::Usage(format!("horizon must be positive, got {t_horizon}")));
        }
        if segments < 2 {
            return Err(Error::Usage("log spacing needs at least two segments".into()));
        }
        if !(t_first > 0.0 && t_first < t_horizon) {
            return Err(Error::Usage(format!(
                "first node must lie in (0, horizon), got {t_first}"
            )));
        }
        let ratio = (t_horizon / t_first).powf(1.0 / (segments - 1) as f64);
        let mut nodes = vec![0.0];
        for i in 0..segments {
            nodes.push(t_first * ratio.powi(i as i32));
        }
        let last = nodes.last_mut().unwrap();
        *last = t_horizon; // kill the powf drift so t_M = T holds exactly
        Ok(TimeGrid { nodes })
    }

    /// Grading exponent that resolves the tau^{s a g / 2} weight of the
    /// nonlinear estimate: 2 / (1 + s a g / 2), clipped to [1, 4].
    pub fn default_rho(fp: &FracParams, s: f64) -> f64 {
        let d = 1.0 + s * fp.alpha * fp.gamma / 2.0 + 1e-9;
        if d <= 0.0 {
            4.0
        } else {
            (2.0 / d).clamp(1.0, 4.0)
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Number of segments M; there are M + 1 nodes.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// All nodes including t_0 = 0.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, m: usize) -> f64 {
        self.nodes[m]
    }

    /// Same law, half the horizon: every node scaled by 1/2 exactly.
    pub fn halved(&self) -> TimeGrid {
        TimeGrid { nodes: self.nodes.iter().map(|t| 0.5 * t).collect() }
    }
}

/// Everything a solve needs besides the datum.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub fp: FracParams,
    pub space: SpaceParams,
    pub time: TimeGrid,
    pub max_picard_iters: usize,
    pub cauchy_tol: f64,
    pub divergence_cap: f64,
    pub backend: OperatorBackend,
    /// Center stride of the Morrey estimator, held fixed across iterations
    /// so distances are exact comparisons.
    pub stride: usize,
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.cauchy_tol > 0.0) {
            return Err(Error::Usage(format!(
                "cauchy tolerance must be positive, got {}",
                self.cauchy_tol
            )));
        }
        if !(self.divergence_cap > 0.0) {
            return Err(Error::Usage(format!(
                "divergence cap must be positive, got {}",
                self.divergence_cap
            )));
        }
        if self.max_picard_iters == 0 {
            return Err(Error::Usage("need at least one Picard iteration".into()));
        }
        if self.stride == 0 {
            return Err(Error::Usage("center stride must be positive".into()));
        }
        Ok(())
    }
}

/// States at the positive nodes of a time grid; u(t_0) is the datum itself.
#[derive(Clone, Debug)]
pub struct Trajectory {
    time: TimeGrid,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// State at node m >= 1.
    pub fn state(&self, m: usize) -> &Field {
        &self.states[m - 1]
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    MaxIters,
}

/// Iteration record of one solve.
#[derive(Clone, Debug)]
pub struct SolveDiagnostics {
    pub verdict: Verdict,
    pub iterations: usize,
    /// Weighted distance between successive iterates, one entry per iteration.
    pub distances: Vec<f64>,
    /// distances[i] / distances[i-1]; the contraction diagnostic.
    pub ratios: Vec<f64>,
    /// Largest weighted norm over all iterates including the linear part.
    pub sup_weighted_norm: f64,
    /// Weighted norm of the final iterate.
    pub final_weighted_norm: f64,
}

/// Pointwise |u|^{g-1} u: odd, sign-preserving power.
pub fn nonlinearity(u: &Field, gamma: f64) -> Result<Field> {
    if !(gamma > 1.0) {
        return Err(Error::Usage(format!("nonlinearity power must exceed 1, got {gamma}")));
    }
    if gamma == 3.0 {
        u.map(|v| v * v * v)
    } else if gamma == 2.0 {
        u.map(|v| v.abs() * v)
    } else {
        u.map(|v| v.signum() * v.abs().powf(gamma))
    }
}

/// Weighted trajectory norm sup_{m>=1} t_m^{-s a/2} |u(t_m)|_{M^p_q};
/// the weight compensates the t^{s a/2} blow-up of rough-data solutions.
pub fn xt_norm(
    traj: &Trajectory,
    s: f64,
    alpha: f64,
    mp: &MorreyParams,
    stride: usize,
) -> Result<f64> {
    if !(s < 0.0) {
        return Err(Error::Usage(format!(
            "the weighted norm needs negative smoothness, got s={s}"
        )));
    }
    let mut best = 0.0f64;
    for m in 1..=traj.time.segments() {
        let w = traj.time.node(m).powf(-s * alpha / 2.0);
        best = best.max(w * morrey_norm(traj.state(m), mp, stride)?.value);
    }
    Ok(best)
}

/// The decay exponent of the global norm: a/(g-1) - a N / (2p).
pub fn beta_exponent(fp: &FracParams, p: f64) -> f64 {
    fp.alpha / (fp.gamma - 1.0) - fp.alpha * fp.dim as f64 / (2.0 * p)
}

/// Global weighted norm sup_{m>=1} t_m^beta |u(t_m)|_{M^p_q}. The exponent
/// must satisfy -beta g > -1 and beta < alpha for the global estimates to
/// close.
pub fn global_norm(
    traj: &Trajectory,
    fp: &FracParams,
    beta: f64,
    mp: &MorreyParams,
    stride: usize,
) -> Result<f64> {
    if !(-beta * fp.gamma > -1.0) || !(beta < fp.alpha) {
        return Err(Error::Usage(format!(
            "global weight exponent {beta} violates -beta*gamma > -1 or beta < alpha"
        )));
    }
    let mut best = 0.0f64;
    for m in 1..=traj.time.segments() {
        let w = traj.time.node(m).powf(beta);
        best = best.max(w * morrey_norm(traj.state(m), mp, stride)?.value);
    }
    Ok(best)
}

/// Precomputed linear part and kernel weights for one (datum, config) pair.
struct Engine {
    grid: Grid,
    fp: FracParams,
    time: TimeGrid,
    /// Coefficients of P(t_m) mu per node.
    u0_hat: Vec<SpectralField>,
    /// Sorted distinct |k|^2 values and, per flat mode, the position of its
    /// key in that ordering.
    key_pos: Vec<u32>,
    /// weights[m-1][k][key position]: the kernel weight of interval
    /// [t_k, t_{k+1}] at target t_m.
    weights: Vec<Vec<Vec<f64>>>,
}

impl Engine {
    fn new(mu: &Field, config: &SolverConfig) -> Result<Engine> {
        let grid = mu.grid();
        let fp = config.fp;
        let time = config.time.clone();
        let m_count = time.segments();
        let mu_hat = dft(mu);
        let mut u0_hat = Vec::with_capacity(m_count);
        for m in 1..=m_count {
            let table = p_alpha_multipliers(&fp, grid, time.node(m), &config.backend)?;
            u0_hat.push(apply_mode_multipliers(&mu_hat, &table)?);
        }

        let mut keys: Vec<u64> = (0..grid.len()).map(|idx| mode_key(grid, idx)).collect();
        keys.sort_unstable();
        keys.dedup();
        let key_pos: Vec<u32> = (0..grid.len())
            .map(|idx| keys.binary_search(&mode_key(grid, idx)).unwrap() as u32)
            .collect();

        // One E_a table per (key, target node) serves every interval ending
        // there, halving the evaluation count versus per-interval formulas.
        let lam0 = grid.min_freq() * grid.min_freq();
        let ml = MlEvaluator::new(fp.alpha, 1.0)?;
        let nodes = time.nodes().to_vec();
        let per_key: Vec<Vec<Vec<f64>>> = keys
            .par_iter()
            .map(|&k2| -> Result<Vec<Vec<f64>>> {
                let lam = lam0 * k2 as f64;
                let mut rows = Vec::with_capacity(m_count);
                for m in 1..=m_count {
                    let tm = nodes[m];
                    let mut row = Vec::with_capacity(m);
                    if lam == 0.0 {
                        for k in 0..m {
                            let ua = (tm - nodes[k]).powf(fp.alpha);
                            let ub = (tm - nodes[k + 1]).powf(fp.alpha);
                            row.push((ua - ub) / fp.alpha);
                        }
                    } else {
                        let mut prev = ml.eval(-lam * tm.powf(fp.alpha))?;
                        for k in 0..m {
                            let ub = (tm - nodes[k + 1]).powf(fp.alpha);
                            let next = ml.eval(-lam * ub)?;
                            row.push((next - prev) / lam);
                            prev = next;
                        }
                    }
                    rows.push(row);
                }
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        let mut weights = vec![Vec::new(); m_count];
        for (mi, row) in weights.iter_mut().enumerate() {
            *row = (0..=mi)
                .map(|k| per_key.iter().map(|pk| pk[mi][k]).collect())
                .collect();
        }

        Ok(Engine { grid, fp, time, u0_hat, key_pos, weights })
    }

    fn linear_trajectory(&self) -> Result<Trajectory> {
        let states = self
            .u0_hat
            .iter()
            .map(idft)
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { time: self.time.clone(), states })
    }

    /// One Picard update of every node. The representative of interval
    /// [t_k, t_{k+1}] is the left node state, except the first interval
    /// which uses u(t_1): the datum at t_0 may be a binned measure whose
    /// pointwise power does not survive grid refinement.
    fn step(&self, prev: &Trajectory) -> Result<Trajectory> {
        let m_count = self.time.segments();
        let mut nhat = Vec::with_capacity(m_count);
        for k in 0..m_count {
            let source = if k == 0 { prev.state(1) } else { prev.state(k) };
            nhat.push(dft(&nonlinearity(source, self.fp.gamma)?));
        }
        let mut states = Vec::with_capacity(m_count);
        for m in 1..=m_count {
            let mut coeffs: Vec<Complex64> = self.u0_hat[m - 1].coeffs().to_vec();
            for (k, w) in self.weights[m - 1].iter().enumerate() {
                let src = nhat[k].coeffs();
                for (idx, c) in coeffs.iter_mut().enumerate() {
                    *c += src[idx] * w[self.key_pos[idx] as usize];
                }
            }
            let blown_up = || {
                Error::Diverged(format!(
                    "state at node {m} (t={}) left the representable range",
                    self.time.node(m)
                ))
            };
            // both constructors validate: Hermitian symmetry on the spectral
            // side, finiteness on the sample side
            let state = SpectralField::new(self.grid, coeffs)
                .and_then(|sf| idft(&sf))
                .map_err(|_| blown_up())?;
            states.push(state);
        }
        Ok(Trajectory { time: self.time.clone(), states })
    }
}

fn weighted_distance(
    a: &Trajectory,
    b: &Trajectory,
    s: f64,
    alpha: f64,
    mp: &MorreyParams,
    stride: usize,
) -> Result<f64> {
    let mut best = 0.0f64;
    for m in 1..=a.time.segments() {
        let grid = a.state(m).grid();
        let diff = Field::new(
            grid,
            a.state(m)
                .values()
                .iter()
                .zip(b.state(m).values())
                .map(|(x, y)| x - y)
                .collect(),
        )?;
        let w = a.time.node(m).powf(-s * alpha / 2.0);
        best = best.max(w * morrey_norm(&diff, mp, stride)?.value);
    }
    Ok(best)
}

/// Result of a solve: the last iterate and the iteration record.
pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub diagnostics: SolveDiagnostics,
}

/// Picard-iterate the mild formulation until the weighted distance between
/// successive whole trajectories drops below the Cauchy tolerance, exceeds
/// the divergence cap (blow-up verdict), or the iteration budget runs out.
pub fn solve(mu: &Field, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let mp = config.space.morrey();
    let s = config.space.s;
    let alpha = config.fp.alpha;
    let engine = Engine::new(mu, config)?;
    let mut current = engine.linear_trajectory()?;
    let mut sup_norm = xt_norm(&current, s, alpha, &mp, config.stride)?;
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut verdict = Verdict::MaxIters;
    let mut iterations = 0;
    for _ in 1..=config.max_picard_iters {
        let next = engine.step(&current)?;
        iterations += 1;
        let d = weighted_distance(&next, &current, s, alpha, &mp, config.stride)?;
        if let Some(&last) = distances.last() {
            ratios.push(if last > 0.0 { d / last } else { 0.0 });
        }
        distances.push(d);
        let norm = xt_norm(&next, s, alpha, &mp, config.stride)?;
        sup_norm = sup_norm.max(norm);
        current = next;
        if !d.is_finite() || !norm.is_finite() {
            return Err(Error::Diverged(
                "weighted norms left the representable range".into(),
            ));
        }
        if d > config.divergence_cap || norm > config.divergence_cap {
            verdict = Verdict::Diverged;
            break;
        }
        if d < config.cauchy_tol {
            verdict = Verdict::Converged;
            break;
        }
    }
    let final_norm = xt_norm(&current, s, alpha, &mp, config.stride)?;
    Ok(SolveOutcome {
        trajectory: current,
        diagnostics: SolveDiagnostics {
            verdict,
            iterations,
            distances,
            ratios,
            sup_weighted_norm: sup_norm,
            final_weighted_norm: final_norm,
        },
    })
}

/// Retry a diverged solve with the horizon halved, up to `max_halvings`
/// times. Returns the last outcome and how many halvings were spent.
pub fn solve_with_halving(
    mu: &Field,
    config: &SolverConfig,
    max_halvings: usize,
) -> Result<(SolveOutcome, usize)> {
    let mut cfg = config.clone();
    let mut halvings = 0;
    loop {
        let outcome = solve(mu, &cfg)?;
        if outcome.diagnostics.verdict != Verdict::Diverged || halvings >= max_halvings {
            return Ok((outcome, halvings));
        }
        cfg.time = cfg.time.halved();
        halvings += 1;
    }
}

/// Distance between a trajectory and one Picard application of itself: how
/// far the iterate is from solving the discrete mild equation.
pub fn fixed_point_residual(mu: &Field, traj: &Trajectory, config: &SolverConfig) -> Result<f64> {
    let engine = Engine::new(mu, config)?;
    let image = engine.step(traj)?;
    weighted_distance(
        &image,
        traj,
        config.space.s,
        config.fp.alpha,
        &config.space.morrey(),
        config.stride,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_gaussian(grid: Grid, amp: f64) -> Field {
        Field::from_fn_1d(grid, |x| amp * (-x * x).exp()).unwrap()
    }

    fn benchmark_config(grid_t: TimeGrid) -> SolverConfig {
        SolverConfig {
            fp: FracParams::new(0.5, 3.0, 1).unwrap(),
            space: SpaceParams::new(-0.4, 3.0, 3.0, f64::INFINITY, true).unwrap(),
            time: grid_t,
            max_picard_iters: 25,
            cauchy_tol: 1e-10,
            divergence_cap: 1e6,
            backend: OperatorBackend::MlMultiplier,
            stride: 4,
        }
    }

    #[test]
    fn time_grids_are_strictly_increasing_with_exact_endpoints() {
        let g = TimeGrid::graded(0.5, 16, 2.0).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.horizon(), 0.5);
        assert_eq!(g.segments(), 16);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
        let l = TimeGrid::log_spaced(100.0, 24, 1e-3).unwrap();
        assert_eq!(l.node(0), 0.0);
        assert!((l.node(1) - 1e-3).abs() < 1e-18);
        assert_eq!(l.horizon(), 100.0);
        for w in l.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(TimeGrid::graded(0.5, 16, 0.5).is_err());
        assert!(TimeGrid::log_spaced(1.0, 8, 2.0).is_err());
        // halving scales every node including the first positive one
        let h = g.halved();
        assert_eq!(h.horizon(), 0.25);
        assert_eq!(h.node(4), 0.5 * g.node(4));
    }

    #[test]
    fn default_grading_tracks_the_singularity_strength() {
        let fp = FracParams::new(0.5, 3.0, 1).unwrap();
        // s a g / 2 = -0.3: rho = 2 / 0.7
        let rho = TimeGrid::default_rho(&fp, -0.4);
        assert!((rho - 2.0 / 0.7).abs() < 1e-6);
        // vanishing weight: the parabolic default rho = 2
        assert!((TimeGrid::default_rho(&fp, -1e-12) - 2.0).abs() < 1e-8);
        // hard singularity: clipped at 4
        let fp2 = FracParams::new(0.9, 4.0, 1).unwrap();
        assert_eq!(TimeGrid::default_rho(&fp2, -0.6), 4.0);
    }

    #[test]
    fn pointwise_power_is_odd_and_matches_closed_values() {
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let f = Field::constant(grid, -2.0).unwrap();
        let n = nonlinearity(&f, 3.0).unwrap();
        for v in n.values() {
            assert_eq!(*v, -8.0);
        }
        let f = Field::constant(grid, 4.0).unwrap();
        let n = nonlinearity(&f, 1.5).unwrap();
        for v in n.values() {
            assert!((v - 8.0).abs() < 1e-14);
        }
        let zero = Field::constant(grid, 0.0).unwrap();
        assert_eq!(nonlinearity(&zero, 2.5).unwrap().linf_norm(), 0.0);
    }

    #[test]
    fn zero_datum_is_a_fixed_point() {
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let mu = Field::constant(grid, 0.0).unwrap();
        let config = benchmark_config(TimeGrid::graded(0.5, 8, 2.0).unwrap());
        let out = solve(&mu, &config).unwrap();
        assert_eq!(out.diagnostics.verdict, Verdict::Converged);
        assert_eq!(out.diagnostics.iterations, 1);
        for st in out.trajectory.states() {
            assert_eq!(st.linf_norm(), 0.0);
        }
    }

    #[test]
    fn small_data_contracts_and_satisfies_the_fixed_point() {
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let mu = small_gaussian(grid, 0.1);
        let config = benchmark_config(TimeGrid::graded(0.5, 16, 2.0).unwrap());
        let out = solve(&mu, &config).unwrap();
        assert_eq!(out.diagnostics.verdict, Verdict::Converged);
        assert!(out.diagnostics.iterations <= 10, "{} iterations", out.diagnostics.iterations);
        // every ratio after the opening iteration is a strong contraction
        for r in &out.diagnostics.ratios {
            assert!(*r <= 0.5, "contraction ratio {r}");
        }
        let res = fixed_point_residual(&mu, &out.trajectory, &config).unwrap();
        assert!(res <= 2.0 * config.cauchy_tol, "residual {res}");
        // geometric-series bound: with every ratio below 1/2, no iterate
        // strays further than twice the first correction from the linear part
        let mp = config.space.morrey();
        let linear = Engine::new(&mu, &config)
            .unwrap()
            .linear_trajectory()
            .unwrap();
        let u0_norm = xt_norm(&linear, config.space.s, config.fp.alpha, &mp, config.stride).unwrap();
        let d1 = out.diagnostics.distances[0];
        assert!(
            out.diagnostics.sup_weighted_norm <= 2.0 * d1 + u0_norm,
            "sup {} vs bound {}",
            out.diagnostics.sup_weighted_norm,
            2.0 * d1 + u0_norm
        );
    }

    #[test]
    fn first_duhamel_correction_matches_continuous_quadrature() {
        // tiny datum on a 3-segment grid: the discrete correction must sit
        // within 1e-6 of the exact integral with continuously evaluated
        // nonlinearity
        let grid = Grid::new(1, 16, 4.0).unwrap();
        let mu = small_gaussian(grid, 0.02);
        let fp = FracParams::new(0.5, 3.0, 1).unwrap();
        let be = OperatorBackend::MlMultiplier;
        let time = TimeGrid::graded(0.5, 3, 2.0).unwrap();
        let config = SolverConfig {
            fp,
            space: SpaceParams::new(-0.4, 3.0, 3.0, f64::INFINITY, true).unwrap(),
            time: time.clone(),
            max_picard_iters: 1,
            cauchy_tol: 1e-14,
            divergence_cap: 1e6,
            backend: be,
            stride: 1,
        };
        let engine = Engine::new(&mu, &config).unwrap();
        let u1 = engine.step(&engine.linear_trajectory().unwrap()).unwrap();
        let t = time.horizon();
        // oracle per mode: (1/a) int_0^{t^a} E_{a,a}(-lam v) nhat_k(t - v^{1/a}) dv
        let ml_aa = MlEvaluator::new(0.5, 0.5).unwrap();
        use std::cell::RefCell;
        use std::collections::HashMap;
        let cache: RefCell<HashMap<u64, Vec<Complex64>>> = RefCell::new(HashMap::new());
        let nhat_at = |tau: f64| -> Vec<Complex64> {
            let tau = tau.max(0.0); // v = sqrt(t) can overshoot t by one ulp
            if let Some(v) = cache.borrow().get(&tau.to_bits()) {
                return v.clone();
            }
            let u0 = if tau == 0.0 {
                mu.clone()
            } else {
                crate::operators::p_alpha(tau, &mu, &fp, &be).unwrap()
            };
            let v = dft(&nonlinearity(&u0, 3.0).unwrap()).coeffs().to_vec();
            cache.borrow_mut().insert(tau.to_bits(), v.clone());
            v
        };
        let lam0 = grid.min_freq() * grid.min_freq();
        let mut oracle_hat = dft(&crate::operators::p_alpha(t, &mu, &fp, &be).unwrap())
            .coeffs()
            .to_vec();
        for idx in 0..grid.len() {
            let lam = lam0 * mode_key(grid, idx) as f64;
            let re = crate::specfun::quad::integrate(
                |v| ml_aa.eval(-lam * v).unwrap() * nhat_at(t - v * v)[idx].re,
                0.0,
                t.sqrt(),
                1e-12,
                1e-10,
            )
            .unwrap()
            .0;
            let im = crate::specfun::quad::integrate(
                |v| ml_aa.eval(-lam * v).unwrap() * nhat_at(t - v * v)[idx].im,
                0.0,
                t.sqrt(),
                1e-12,
                1e-10,
            )
            .unwrap()
            .0;
            // alpha = 1/2: dv-substitution measure 1/alpha = 2
            oracle_hat[idx] += 2.0 * Complex64::new(re, im);
        }
        let oracle = idft(&SpectralField::new(grid, oracle_hat).unwrap()).unwrap();
        let correction = u1
            .state(3)
            .values()
            .iter()
            .zip(crate::operators::p_alpha(t, &mu, &fp, &be).unwrap().values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(correction > 5e-7, "correction too small to be probative: {correction}");
        let gap = u1
            .state(3)
            .values()
            .iter()
            .zip(oracle.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 1e-6, "discrete rule vs continuous quadrature: {gap:.3e}");
    }

    #[test]
    fn sign_flip_of_the_datum_flips_the_solution_bitwise() {
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let mu = small_gaussian(grid, 0.2);
        let neg = mu.map(|v| -v).unwrap();
        let config = benchmark_config(TimeGrid::graded(0.4, 8, 2.0).unwrap());
        let a = solve(&mu, &config).unwrap();
        let b = solve(&neg, &config).unwrap();
        assert_eq!(a.diagnostics.iterations, b.diagnostics.iterations);
        for (sa, sb) in a.trajectory.states().iter().zip(b.trajectory.states()) {
            for (x, y) in sa.values().iter().zip(sb.values()) {
                assert_eq!(x.to_bits(), (-y).to_bits());
            }
        }
    }

    #[test]
    fn rescaled_problem_reproduces_the_rescaled_solution() {
        // mu_l(x) = l^{2a/(g-1)} mu(l^a x) solved on the l^{-a}-dilated box
        // up to T/l^2 must match the pointwise-rescaled base solution; the
        // discrete systems are exactly equivalent, so agreement is tight
        let lam = 2.0f64;
        let (alpha, gamma) = (0.5, 3.0);
        let c = lam.powf(2.0 * alpha / (gamma - 1.0));
        let base_grid = Grid::new(1, 64, 8.0).unwrap();
        let mu = small_gaussian(base_grid, 0.15);
        let config = benchmark_config(TimeGrid::graded(0.4, 8, 2.0).unwrap());
        let base = solve(&mu, &config).unwrap();
        let la = lam.powf(alpha);
        let scaled_grid = Grid::new(1, 64, 8.0 / la).unwrap();
        let mu_l = Field::from_fn_1d(scaled_grid, |x| c * 0.15 * (-(la * x) * (la * x)).exp())
            .unwrap();
        let scaled_cfg = SolverConfig {
            time: TimeGrid::graded(0.4 / (lam * lam), 8, 2.0).unwrap(),
            ..config
        };
        let scaled = solve(&mu_l, &scaled_cfg).unwrap();
        assert_eq!(base.diagnostics.verdict, Verdict::Converged);
        assert_eq!(scaled.diagnostics.verdict, Verdict::Converged);
        for m in 1..=8 {
            let expect: Vec<f64> =
                base.trajectory.state(m).values().iter().map(|v| c * v).collect();
            let got = scaled.trajectory.state(m).values();
            let scale = expect.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let err = expect
                .iter()
                .zip(got)
                .fold(0.0f64, |a, (e, g)| a.max((e - g).abs()));
            assert!(err <= 1e-9 * scale.max(1e-300), "node {m}: {err:.3e} vs scale {scale:.3e}");
        }
    }

    #[test]
    fn oversized_datum_earns_a_divergence_verdict_and_halving_recovers() {
        // datum far above the small-data threshold: the iteration blows
        // through the cap, and each horizon halving shrinks the effective
        // contraction constant by 2^{-alpha} until the solve closes
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let mu = small_gaussian(grid, 3.0);
        let config = SolverConfig {
            fp: FracParams::new(0.9, 3.0, 1).unwrap(),
            space: SpaceParams::new(-0.4, 3.0, 3.0, f64::INFINITY, true).unwrap(),
            time: TimeGrid::graded(1.0, 12, 2.0).unwrap(),
            max_picard_iters: 40,
            cauchy_tol: 1e-10,
            divergence_cap: 1e4,
            backend: OperatorBackend::MlMultiplier,
            stride: 4,
        };
        let out = solve(&mu, &config).unwrap();
        assert_eq!(out.diagnostics.verdict, Verdict::Diverged);
        let (retry, halvings) = solve_with_halving(&mu, &config, 8).unwrap();
        assert!(halvings >= 1);
        assert_eq!(retry.diagnostics.verdict, Verdict::Converged);
    }

    #[test]
    fn classical_limit_matches_an_exponential_integrator() {
        // alpha = 1 turns the memory kernel into e^{-lam(t-tau)}; a fine
        // one-step exponential integrator is an independent reference
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let mu = small_gaussian(grid, 0.3);
        let fp = FracParams::new(1.0, 3.0, 1).unwrap();
        let t_end = 0.1;
        let config = SolverConfig {
            fp,
            space: SpaceParams::new(-0.4, 3.0, 3.0, f64::INFINITY, true).unwrap(),
            time: TimeGrid::graded(t_end, 32, 1.0).unwrap(),
            max_picard_iters: 25,
            cauchy_tol: 1e-12,
            divergence_cap: 1e6,
            backend: OperatorBackend::MlMultiplier,
            stride: 4,
        };
        let out = solve(&mu, &config).unwrap();
        assert_eq!(out.diagnostics.verdict, Verdict::Converged);
        // reference: uhat' = -lam uhat + nhat, stepped by the exact linear
        // flow with frozen nonlinearity on a 10x finer uniform mesh
        let steps = 320;
        let dt = t_end / steps as f64;
        let lam0 = grid.min_freq() * grid.min_freq();
        let lams: Vec<f64> = (0..grid.len()).map(|i| lam0 * mode_key(grid, i) as f64).collect();
        let mut uhat = dft(&mu).coeffs().to_vec();
        for _ in 0..steps {
            let u = idft(&SpectralField::new(grid, uhat.clone()).unwrap()).unwrap();
            let nh = dft(&nonlinearity(&u, 3.0).unwrap());
            for (i, c) in uhat.iter_mut().enumerate() {
                let lam = lams[i];
                let decay = (-lam * dt).exp();
                let kick = if lam == 0.0 { dt } else { (1.0 - decay) / lam };
                *c = *c * decay + nh.coeffs()[i] * kick;
            }
        }
        let reference = idft(&SpectralField::new(grid, uhat).unwrap()).unwrap();
        let got = out.trajectory.state(32);
        let scale = reference.linf_norm();
        let err = got
            .values()
            .iter()
            .zip(reference.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err <= 0.01 * scale, "classical mismatch {err:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn time_step_halving_converges_at_first_order_or_better() {
        // graded nodes nest under segment doubling, so the final states sit
        // at the same physical time; successive gaps must shrink by at least
        // the first-order factor (with slack)
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let mu = small_gaussian(grid, 0.25);
        let state_at = |segments: usize| -> Field {
            let config = benchmark_config(TimeGrid::graded(0.4, segments, 2.0).unwrap());
            let out = solve(&mu, &config).unwrap();
            assert_eq!(out.diagnostics.verdict, Verdict::Converged);
            out.trajectory.state(segments).clone()
        };
        let (a, b, c) = (state_at(8), state_at(16), state_at(32));
        let gap = |x: &Field, y: &Field| -> f64 {
            x.values()
                .iter()
                .zip(y.values())
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
        };
        let first = gap(&a, &b);
        let second = gap(&b, &c);
        assert!(
            second <= 0.75 * first,
            "refinement gains must shrink: {first:.3e} then {second:.3e}"
        );
    }

    #[test]
    fn norm_weights_validate_their_exponents() {
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let mu = small_gaussian(grid, 0.1);
        let config = benchmark_config(TimeGrid::graded(0.4, 4, 2.0).unwrap());
        let out = solve(&mu, &config).unwrap();
        let mp = MorreyParams::new(3.0, 3.0, false).unwrap();
        assert!(xt_norm(&out.trajectory, 0.1, 0.5, &mp, 4).is_err());
        let fp = config.fp;
        // beta for (N, alpha, gamma, p) = (1, 0.8, 3, 2): 0.4 - 0.2
        let fp2 = FracParams::new(0.8, 3.0, 1).unwrap();
        assert!((beta_exponent(&fp2, 2.0) - 0.2).abs() < 1e-15);
        // beta >= alpha is rejected
        assert!(global_norm(&out.trajectory, &fp, 0.6, &mp, 4).is_err());
        // valid beta: finite value
        let b = beta_exponent(&fp, 3.0);
        let g = global_norm(&out.trajectory, &fp, b, &mp, 4).unwrap();
        assert!(g.is_finite() && g > 0.0);
    }
}
