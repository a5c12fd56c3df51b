//! Double-double arithmetic built on error-free transforms.
//!
//! A value is an unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2, giving
//! roughly 31 significant decimal digits. This is the working precision for
//! the alternating Wright/Mittag-Leffler series, where the final value can be
//! up to ~1e13 times smaller than the largest intermediate term; plain f64
//! accumulation would lose the answer entirely there.
//!
//! Only the operations the series kernels need are implemented. Algorithms
//! are the classical Dekker/Knuth ones (TwoSum, Split, TwoProd) plus
//! argument-reduced exp/ln/sin built from them.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

pub const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
pub const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};
pub const TWO_PI_SQRT: Dd = Dd {
    // sqrt(2*pi)
    hi: 2.506_628_274_631_000_7,
    lo: -1.832_857_998_045_916_7e-16,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, o.hi);
        let (s2, e2) = two_sum(self.lo, o.lo);
        let (s1, e1) = quick_two_sum(s1, e1 + s2);
        let (hi, lo) = quick_two_sum(s1, e1 + e2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s1, e1) = two_sum(self.hi, o);
        let (hi, lo) = quick_two_sum(s1, e1 + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p, e) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p, e + self.lo * o);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    /// Exact scaling by a power of two.
    #[inline]
    pub fn ldexp(self, k: i32) -> Dd {
        let f = (2.0f64).powi(k);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    /// exp(self); accurate for |self| <= ~700.
    pub fn exp(self) -> Dd {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        let k = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.mul_f64(k));
        // |r| <= ln2/2; Taylor series converges fast and stays well conditioned
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..=26 {
            // divide by the exact integer: a rounded f64 reciprocal would cap
            // the result at ~1e-17 relative accuracy
            term = term.mul(r).div(Dd::from_f64(i as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        sum.ldexp(k as i32)
    }

    /// Natural log; one refinement step on top of the f64 log.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let y = self.hi.ln();
        // self * e^{-y} = 1 + d with |d| ~ 1e-16
        let w = self.mul(Dd::from_f64(-y).exp());
        let d = w.sub(Dd::ONE);
        let corr = d.sub(d.mul(d).mul_f64(0.5));
        Dd::from_f64(y).add(corr)
    }

    /// sin(pi * self) with exact integer reduction, so zeros at integers are exact.
    pub fn sin_pi(self) -> Dd {
        let n = self.hi.round();
        let r = self.add_f64(-n); // |r| <= 0.5 + tiny
        let x = PI.mul(r);
        // Taylor for sin on |x| <= pi/2
        let x2 = x.mul(x);
        let mut term = x;
        let mut sum = x;
        let mut i = 1u32;
        loop {
            let denom = ((2 * i) * (2 * i + 1)) as f64;
            term = term.mul(x2).div(Dd::from_f64(denom)).neg();
            sum = sum.add(term);
            i += 1;
            if term.hi.abs() < 1e-35 || i > 24 {
                break;
            }
        }
        if (n as i64) % 2 == 0 {
            sum
        } else {
            sum.neg()
        }
    }
}

/// ln Gamma(z) for z > 0 in double-double precision.
///
/// Stirling's asymptotic series for z >= 40, where twelve Bernoulli terms
/// truncate below 1e-35, combined with upward recurrence for smaller
/// arguments: ln G(z) = ln G(z+n) - ln prod_{i<n} (z+i). Every step is
/// cancellation-free, so absolute errors stay near 1e-29 across the whole
/// range — rational approximations (Lanczos, Spouge) lose 10+ digits here
/// to internal cancellation and cannot feed a series that must cancel
/// through 26 orders of magnitude.
pub struct LnGammaDd {
    stirling: [Dd; 12], // B_{2n} / (2n (2n-1)), n = 1..12
    half_ln_two_pi: Dd,
}

impl LnGammaDd {
    pub fn new() -> Self {
        let ratios: [(f64, f64); 12] = [
            (1.0, 12.0),
            (-1.0, 360.0),
            (1.0, 1260.0),
            (-1.0, 1680.0),
            (1.0, 1188.0),
            (-691.0, 360360.0),
            (1.0, 156.0),
            (-3617.0, 122400.0),
            (43867.0, 244188.0),
            (-174611.0, 125400.0),
            (854513.0, 63756.0),
            (-236364091.0, 1506960.0),
        ];
        let stirling =
            ratios.map(|(n, d)| Dd::from_f64(n).div(Dd::from_f64(d)));
        LnGammaDd {
            stirling,
            half_ln_two_pi: TWO_PI_SQRT.ln(),
        }
    }

    /// ln Gamma(z), z > 0.
    pub fn eval(&self, z: Dd) -> Dd {
        debug_assert!(z.hi > 0.0);
        if z.hi >= 40.0 {
            return self.stirling_tail(z);
        }
        // shift into the asymptotic range and divide back out in one product
        let n = (40.0 - z.hi).ceil() as usize;
        let mut prod = z;
        for i in 1..n {
            prod = prod.mul(z.add_f64(i as f64));
        }
        self.stirling_tail(z.add_f64(n as f64)).sub(prod.ln())
    }

    fn stirling_tail(&self, z: Dd) -> Dd {
        let w = Dd::ONE.div(z.mul(z));
        let mut s = self.stirling[11];
        for n in (0..11).rev() {
            s = s.mul(w).add(self.stirling[n]);
        }
        z.add_f64(-0.5)
            .mul(z.ln())
            .sub(z)
            .add(self.half_ln_two_pi)
            .add(s.div(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_roundtrip_arithmetic() {
        let a = Dd::from_f64(1.0).div(Dd::from_f64(3.0));
        let b = a.mul_f64(3.0);
        assert!((b.to_f64() - 1.0).abs() < 1e-31);
        let c = a.add(a).add(a).sub(Dd::ONE);
        assert!(c.hi.abs() < 1e-31);
    }

    #[test]
    fn dd_exp_ln_inverse() {
        for &x in &[1e-3, 0.37, 1.0, 4.5, 30.0, 200.0] {
            let d = Dd::from_f64(x);
            let r = d.exp().ln();
            assert!(
                (r.to_f64() - x).abs() < 1e-28 * x.max(1.0),
                "exp/ln roundtrip failed at {x}"
            );
        }
    }

    #[test]
    fn dd_exp_matches_f64() {
        for &x in &[-30.0, -1.0, 0.0, 1.0, 10.0] {
            let e = Dd::from_f64(x).exp().to_f64();
            assert!((e - x.exp()).abs() <= 1e-14 * x.exp());
        }
    }

    #[test]
    fn dd_sin_pi_zeros_and_values() {
        // exact zeros at integers
        for n in [-7i32, -2, 0, 3, 12] {
            assert_eq!(Dd::from_f64(n as f64).sin_pi().to_f64(), 0.0);
        }
        let v = Dd::from_f64(0.5).sin_pi().to_f64();
        assert!((v - 1.0).abs() < 1e-30);
        let v = Dd::from_f64(-2.5).sin_pi().to_f64();
        assert!((v + 1.0).abs() < 1e-30);
        let v = Dd::from_f64(1.0 / 3.0).sin_pi().to_f64();
        assert!((v - (std::f64::consts::PI / 3.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn exp_ln_hold_double_double_accuracy() {
        let e = Dd::from_f64(1.0).exp();
        let true_e = Dd { hi: 2.718281828459045, lo: 1.4456468917292502e-16 };
        assert!(e.sub(true_e).to_f64().abs() < 1e-30);
        let l2 = Dd::from_f64(2.0).ln();
        assert!(l2.sub(LN2).to_f64().abs() < 1e-30);
    }

    #[test]
    fn stirling_and_recurrence_pieces() {
        let lg = LnGammaDd::new();
        let v = lg.stirling_tail(Dd::from_f64(40.5));
        let want = Dd { hi: 108.47307506906539, lo: -3.7122784210186055e-15 };
        eprintln!("stirling(40.5) off by {:e}", v.sub(want).to_f64());
        let z = Dd::from_f64(0.5);
        let mut prod = z;
        for i in 1..40 {
            prod = prod.mul(z.add_f64(i as f64));
        }
        let lp = prod.ln();
        let want = Dd { hi: 107.90071012614068, lo: 3.7210828683885895e-15 };
        eprintln!("ln(prod) off by {:e}", lp.sub(want).to_f64());

        let z = Dd::from_f64(40.5);
        let l = z.ln();
        let want = Dd { hi: 3.7013019741124933, lo: 1.6906915477405407e-16 };
        eprintln!("ln(40.5) off by {:e}", l.sub(want).to_f64());
        let w = Dd::ONE.div(z.mul(z));
        let mut s = lg.stirling[11];
        for n in (0..11).rev() {
            s = s.mul(w).add(lg.stirling[n]);
        }
        let sz = s.div(z);
        let want = Dd { hi: 0.002057571360973065, lo: -1.6523892362437266e-19 };
        eprintln!("s/z off by {:e}", sz.sub(want).to_f64());
        let p = z.add_f64(-0.5).mul(z.ln());
        let want = Dd { hi: 148.05207896449974, lo: -3.89537484543934e-15 };
        eprintln!("(z-.5)lnz off by {:e}", p.sub(want).to_f64());
    }

    #[test]
    fn ln_gamma_dd_known_values() {
        let lg = LnGammaDd::new();
        // both ends of the range used by series tables, at dd-level accuracy
        let v = lg.eval(Dd::from_f64(0.5));
        let want = Dd { hi: 0.5723649429247001, lo: 5.132975581353913e-18 };
        assert!(v.sub(want).to_f64().abs() < 1e-28, "lnG(0.5) off by {:e}", v.sub(want).to_f64());
        let v = lg.eval(Dd::from_f64(160.0));
        let want = Dd { hi: 650.4096828956552, lo: 2.060818630497875e-15 };
        assert!(v.sub(want).to_f64().abs() < 1e-26, "lnG(160) off by {:e}", v.sub(want).to_f64());
        // Gamma(21) = 20!
        let v = lg.eval(Dd::from_f64(21.0)).exp().to_f64();
        let fact20 = 2_432_902_008_176_640_000.0f64;
        assert!((v / fact20 - 1.0).abs() < 1e-14);
        // recurrence ln G(z+1) - ln G(z) = ln z, checked in dd precision;
        // z+1 must be formed in dd so both sides see arguments exactly 1 apart
        for &z in &[0.17, 1.31, 7.77, 41.5, 130.2] {
            let zd = Dd::from_f64(z);
            let d = lg.eval(zd.add_f64(1.0)).sub(lg.eval(zd)).sub(zd.ln());
            assert!(d.to_f64().abs() < 1e-25, "recurrence off at {z}: {}", d.to_f64());
        }
    }
}
