//! One-dimensional quadrature: a 15-point Gauss-Kronrod kernel with a
//! worst-interval-first adaptive driver, and Gauss-Legendre rules of
//! arbitrary order for fixed composite panels.

use crate::{Error, Result};

// 15-point Kronrod abscissae on [0,1] side of the symmetric rule; odd indices
// are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One Gauss-Kronrod 7/15 application on [a,b]: (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let fsum = f(c - dx) + f(c + dx);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let err = ((kron - gauss) * h).abs();
    // sharpen the raw difference the way QUADPACK does
    let scaled = if err == 0.0 { 0.0 } else { err * (200.0 * err / (kron.abs() * h.abs()).max(f64::MIN_POSITIVE)).powf(0.5).min(1.0) };
    (kron * h, scaled.max(err * 1e-3))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// Adaptive integral of `f` over [a,b], bisecting the worst segment until the
/// summed error estimate drops below `abs_tol + rel_tol * |integral|`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integrate: endpoints must be finite".into()));
    }
    let (v, e) = gk15(&f, a, b);
    let mut segs = vec![Segment { a, b, value: v, err: e }];
    const MAX_SEGS: usize = 400;
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        if err <= abs_tol + rel_tol * total.abs() {
            return Ok((total, err));
        }
        if segs.len() >= MAX_SEGS {
            return Err(Error::Accuracy {
                what: "adaptive quadrature stalled before reaching tolerance".into(),
                bound: err,
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Segment { a, b, .. } = segs.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        segs.push(Segment { a, b: m, value: v1, err: e1 });
        segs.push(Segment { a: m, b, value: v2, err: e2 });
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1],
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess for the i-th root (descending)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' at x via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, e) = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-13, 0.0).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
        assert!(e < 1e-12);
    }

    #[test]
    fn decaying_exponential() {
        let (v, _) = integrate(|x| (-x).exp(), 0.0, 40.0, 1e-13, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let (v, _) = integrate(|x| 1.0 / x.sqrt(), 1e-12, 1.0, 1e-10, 1e-10).unwrap();
        assert!((v - (2.0 - 2e-6)).abs() < 1e-5);
    }

    #[test]
    fn oscillatory() {
        let (v, _) = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-13, 1e-12).unwrap();
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_integrates_high_degree() {
        let (x, w) = gauss_legendre(20);
        assert_eq!(x.len(), 20);
        // degree 39 monomials and below are exact for the 20-point rule
        for deg in [0usize, 7, 20, 38] {
            let q: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "degree {deg}: {q} vs {exact}");
        }
        // weights are a partition of the interval length
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
    }
}
