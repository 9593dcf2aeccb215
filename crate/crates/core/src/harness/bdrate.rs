//! Bjontegaard delta rate with monotone piecewise cubic interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of a rate-quality curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// Estimated bits for the frame.
    pub rate: f64,
    /// PSNR over occupied pixels in dB.
    pub quality: f64,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Self {
        Self { rate, quality }
    }
}

pub const MIN_POINTS: usize = 4;

/// Shape-preserving cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two entries.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Curve(format!(
                "need matching knots, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Curve("knots not strictly increasing".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.y[k]
            + (s3 - 2.0 * s2 + s) * h * self.d[k]
            + (-2.0 * s3 + 3.0 * s2) * self.y[k + 1]
            + (s3 - s2) * h * self.d[k + 1]
    }

    /// Exact integral over `[a, b]`; Simpson's rule is exact on each cubic piece.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integrate(b, a);
        }
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let k = self.segment(lo);
            let hi = if k + 2 == self.x.len() {
                b
            } else {
                self.x[k + 1].min(b)
            };
            let hi = if hi <= lo { b } else { hi };
            let mid = 0.5 * (lo + hi);
            total += (hi - lo) / 6.0 * (self.eval(lo) + 4.0 * self.eval(mid) + self.eval(hi));
            lo = hi;
        }
        total
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

fn curve(points: &[RdPoint]) -> Result<Pchip> {
    if points.len() < MIN_POINTS {
        return Err(Error::Curve(format!(
            "{} points, need {MIN_POINTS}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    if !pts.iter().all(|p| p.rate > 0.0 && p.quality.is_finite()) {
        return Err(Error::Curve(
            "rates must be positive and qualities finite".into(),
        ));
    }
    pts.sort_by(|a, b| a.quality.total_cmp(&b.quality));
    if !pts.windows(2).all(|w| w[1].quality > w[0].quality) {
        return Err(Error::Curve("qualities are not strictly increasing".into()));
    }
    Pchip::new(
        pts.iter().map(|p| p.quality).collect(),
        pts.iter().map(|p| p.rate.log10()).collect(),
    )
}

/// Average rate difference of `test` against `anchor` at equal quality, in
/// percent; negative values are savings.
pub fn bd_rate(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    let a = curve(anchor)?;
    let t = curve(test)?;
    let lo = a.x[0].max(t.x[0]);
    let hi = a.x[a.x.len() - 1].min(t.x[t.x.len() - 1]);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Curve("quality ranges do not overlap".into()));
    }
    let diff = (t.integrate(lo, hi) - a.integrate(lo, hi)) / (hi - lo);
    Ok((10f64.powf(diff) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn anchor() -> Vec<RdPoint> {
        vec![
            RdPoint::new(1000.0, 30.0),
            RdPoint::new(1800.0, 33.1),
            RdPoint::new(3500.0, 36.0),
            RdPoint::new(7000.0, 39.2),
            RdPoint::new(12000.0, 41.5),
        ]
    }

    fn scaled(p: &[RdPoint], f: f64) -> Vec<RdPoint> {
        p.iter()
            .map(|q| RdPoint::new(q.rate * f, q.quality))
            .collect()
    }

    #[test]
    fn identical_curves() {
        assert_eq!(bd_rate(&anchor(), &anchor()).unwrap(), 0.0);
    }

    #[test]
    fn uniform_scaling() {
        let a = anchor();
        assert!((bd_rate(&a, &scaled(&a, 0.9)).unwrap() + 10.0).abs() < 1e-9);
        assert!((bd_rate(&a, &scaled(&a, 1.25)).unwrap() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn point_order_irrelevant() {
        let a = anchor();
        let mut r = scaled(&a, 0.8);
        r.reverse();
        assert!((bd_rate(&a, &r).unwrap() + 20.0).abs() < 1e-9);
    }

    #[test]
    fn preconditions() {
        let a = anchor();
        assert!(bd_rate(&a[..3], &a).is_err());
        let mut dup = a.clone();
        dup[1].quality = dup[0].quality;
        assert!(bd_rate(&dup, &a).is_err());
        let mut zero = a.clone();
        zero[0].rate = 0.0;
        assert!(bd_rate(&zero, &a).is_err());
        let shifted: Vec<_> = a
            .iter()
            .map(|p| RdPoint::new(p.rate, p.quality + 50.0))
            .collect();
        assert!(matches!(bd_rate(&a, &shifted), Err(Error::Curve(_))));
    }

    #[test]
    fn interpolant_hits_knots_and_integrates_cubics() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((p.eval(*xi) - yi).abs() < 1e-12);
        }
        // linear data is reproduced exactly
        assert!((p.integrate(0.5, 3.0) - (9.0 - 0.25 + 2.5)).abs() < 1e-12);
        assert!((p.eval(1.7) - 4.4).abs() < 1e-12);
    }

    #[test]
    fn monotone_data_gives_monotone_interpolant() {
        let p = Pchip::new(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.0, 0.1, 3.0, 3.05, 7.0],
        )
        .unwrap();
        let mut prev = p.eval(0.0);
        for i in 1..=400 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn integral_matches_fine_quadrature() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.5, 5.0], vec![1.0, 2.0, 2.2, 4.0, 4.1]).unwrap();
        let n = 200_000;
        let (a, b) = (0.3, 4.6);
        let h = (b - a) / n as f64;
        let mid: f64 = (0..n)
            .map(|i| p.eval(a + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h;
        assert!((p.integrate(a, b) - mid).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn reciprocity(f in 0.3f64..3.0, jitter in prop::collection::vec(0.0f64..0.5, 5)) {
            let a: Vec<RdPoint> = anchor()
                .iter()
                .zip(&jitter)
                .map(|(p, j)| RdPoint::new(p.rate * (1.0 + j), p.quality))
                .collect();
            let b = scaled(&a, f);
            let r_ab = bd_rate(&a, &b).unwrap() / 100.0;
            let r_ba = bd_rate(&b, &a).unwrap() / 100.0;
            prop_assert!(((1.0 + r_ab) * (1.0 + r_ba) - 1.0).abs() < 1e-6);
        }
    }
}
