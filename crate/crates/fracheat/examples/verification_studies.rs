//! Run every scripted verification study at its defaults and print the
//! headline numbers: smoothing slopes against their predicted exponents,
//! the pointwise decay of an evolved point mass, weak return to the
//! initial data, norm continuity in time, the doubly critical rescaling,
//! and the long-horizon global run.

use fracheat::experiments::{
    delta_pointwise_decay, log_times, study_continuity, study_doubly_critical, study_global,
    study_scaling, study_smoothing, study_weak_convergence, ContinuityStudyConfig,
    DoublyCriticalConfig, GlobalStudyConfig, ScalingStudyConfig, SmoothingStudyConfig,
    WeakConvergenceConfig,
};
use fracheat::operators::OperatorBackend;
use fracheat::spectral::Grid;

fn main() -> fracheat::Result<()> {
    let t0 = std::time::Instant::now();
    let rows = study_smoothing(&SmoothingStudyConfig::default())?;
    println!("smoothing slopes ({:.2?}):", t0.elapsed());
    for r in &rows {
        println!(
            "  {:?} alpha={:.2}: fitted {:+.4}, expected {:+.4}, gap {:.4}",
            r.op, r.alpha, r.fitted, r.expected, r.gap
        );
    }

    let grid = Grid::new(1, 4096, 32.0)?;
    let times = log_times(1e-2, 1.0, 8);
    for alpha in [0.5, 0.8] {
        let fit = delta_pointwise_decay(alpha, grid, &times, &OperatorBackend::MlMultiplier)?;
        println!(
            "point-mass origin decay alpha={alpha}: slope {:+.4} vs -alpha/2 = {:+.4}",
            fit.slope, fit.expected
        );
    }

    let t0 = std::time::Instant::now();
    let rows = study_scaling(&ScalingStudyConfig::default())?;
    println!("scale equivariance ({:.2?}):", t0.elapsed());
    for r in &rows {
        println!(
            "  lambda={}: weighted relative error {:.3e}",
            r.lambda, r.xt_relative_error
        );
    }

    let t0 = std::time::Instant::now();
    let weak = study_weak_convergence(&WeakConvergenceConfig::default())?;
    println!(
        "weak convergence ({:.2?}): verdicts {:?}/{:?}, final relative gap {:.3e}",
        t0.elapsed(),
        weak.smooth_verdict,
        weak.rough_verdict,
        weak.final_relative_gap
    );
    for r in &weak.rows {
        println!(
            "  t={:.3e}  smooth gaps [{:.3e} {:.3e} {:.3e}]  correction {:.3e}",
            r.t, r.smooth_gaps[0], r.smooth_gaps[1], r.smooth_gaps[2], r.duhamel_pairing
        );
    }
    println!(
        "  correction decay: slope {:+.4}, predicted {:+.4}",
        weak.duhamel_fit.slope, weak.duhamel_fit.expected
    );

    let t0 = std::time::Instant::now();
    let rows = study_continuity(&ContinuityStudyConfig::default())?;
    println!("norm continuity in time ({:.2?}):", t0.elapsed());
    for r in &rows {
        println!(
            "  h={:.5}: late {:.4e}, early {:.4e}, memory flow alone {:.4e}",
            r.h, r.late_diff, r.early_diff, r.linear_late_diff
        );
    }

    let t0 = std::time::Instant::now();
    let dc = study_doubly_critical(&DoublyCriticalConfig::default())?;
    println!("doubly critical rescaling ({:.2?}):", t0.elapsed());
    for (lambda, surrogate) in &dc.surrogate {
        println!("  lambda={:.3}: high-frequency surrogate {:.5e}", lambda, surrogate);
    }
    println!(
        "  smallest lambda solve: {:?}; large-data run: {:?}",
        dc.small_lambda_verdict, dc.large_data_verdict
    );

    let t0 = std::time::Instant::now();
    let global = study_global(&GlobalStudyConfig::default())?;
    println!(
        "global run ({:.2?}): amplitude {}, data norm {:.4}, verdict {:?}, bounded {}",
        t0.elapsed(),
        global.amplitude,
        global.data_norm,
        global.verdict,
        global.bounded
    );
    let peak = global
        .weighted_profile
        .iter()
        .fold((0.0, 0.0), |a, &(t, v)| if v > a.1 { (t, v) } else { a });
    let last = global.weighted_profile.last().copied().unwrap_or((0.0, 0.0));
    println!(
        "  weighted norm peaks at t={:.3e} ({:.4e}), ends at t={:.3e} ({:.4e})",
        peak.0, peak.1, last.0, last.1
    );
    Ok(())
}
