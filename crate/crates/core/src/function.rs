//! Functions on the half-line: analytic test profiles and sampled functions on log grids.

use crate::error::{invalid, Error, Result};
use crate::quadrature::Feature;

/// A function on (0, ∞) that the integrators can handle.
pub trait RadialFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// Interval outside of which the function vanishes. The upper end may be infinite.
    fn support(&self) -> (f64, f64);

    /// Points where the function or one of its low derivatives jumps.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Regions that need a minimum panel resolution.
    fn features(&self) -> Vec<Feature> {
        Vec::new()
    }

    /// Upper bound for `|f(y)|` over `y >= x`. Only consulted for unbounded support.
    fn tail_sup(&self, _x: f64) -> f64 {
        0.0
    }

    /// Exponent `p` with `|f(y)| <= C y^{-p}` for large `y`; infinite for compact support.
    fn tail_decay(&self) -> f64 {
        if self.support().1.is_finite() {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// The value of a constant function, which the semigroup fixes exactly.
    fn constant_value(&self) -> Option<f64> {
        None
    }

    fn as_sampled(&self) -> Option<&SampledFunction> {
        None
    }
}

/// Analytic test profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `height` on `[lo, hi)`.
    Indicator { lo: f64, hi: f64, height: f64 },
    /// `amplitude * exp(-((x - center)/width)^2 / 2)`, truncated where it drops below 1e-22.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// Smooth compactly supported bump `amplitude * exp(1 - 1/(1 - z^2))`, `z = (x - center)/radius`.
    Bump { amplitude: f64, center: f64, radius: f64 },
    /// Smooth step: `height` below `edge - width`, zero above `edge + width`.
    SmoothedStep { height: f64, edge: f64, width: f64 },
    Sum(Vec<Profile>),
}

const GAUSS_CUT: f64 = 10.0;

fn smooth_transition(z: f64) -> f64 {
    // 1 for z <= -1, 0 for z >= 1, C-infinity in between
    if z <= -1.0 {
        return 1.0;
    }
    if z >= 1.0 {
        return 0.0;
    }
    let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = psi(1.0 - z);
    let b = psi(1.0 + z);
    a / (a + b)
}

impl Profile {
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Profile::Indicator { lo, hi, height: 1.0 }
    }

    pub fn gaussian(center: f64, width: f64) -> Self {
        Profile::Gaussian { amplitude: 1.0, center, width }
    }

    pub fn validate(&self) -> Result<()> {
        let fin = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("profile {what} must be finite")))
            }
        };
        match self {
            Profile::Zero => Ok(()),
            Profile::Constant(c) => fin(*c, "constant"),
            Profile::Indicator { lo, hi, height } => {
                fin(*lo, "lo")?;
                fin(*hi, "hi")?;
                fin(*height, "height")?;
                if !(*lo >= 0.0 && hi > lo) {
                    return Err(invalid("indicator needs 0 <= lo < hi"));
                }
                Ok(())
            }
            Profile::Gaussian { amplitude, center, width } => {
                fin(*amplitude, "amplitude")?;
                fin(*center, "center")?;
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(invalid("gaussian width must be positive"));
                }
                Ok(())
            }
            Profile::Bump { amplitude, center, radius } => {
                fin(*amplitude, "amplitude")?;
                fin(*center, "center")?;
                if !(*radius > 0.0 && radius.is_finite() && *center - *radius >= 0.0) {
                    return Err(invalid("bump needs radius > 0 and center >= radius"));
                }
                Ok(())
            }
            Profile::SmoothedStep { height, edge, width } => {
                fin(*height, "height")?;
                if !(*width > 0.0 && *edge > *width && edge.is_finite()) {
                    return Err(invalid("smoothed step needs edge > width > 0"));
                }
                Ok(())
            }
            Profile::Sum(parts) => parts.iter().try_for_each(Profile::validate),
        }
    }

    /// Lipschitz constant bound, if the profile is Lipschitz.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            Profile::Zero | Profile::Constant(_) => Some(0.0),
            Profile::Indicator { .. } => None,
            Profile::Gaussian { amplitude, width, .. } => {
                Some(amplitude.abs() / width * (-0.5f64).exp())
            }
            // |d/dz exp(1 - 1/(1-z^2))| peaks near z = 0.75 at about 2.17
            Profile::Bump { amplitude, radius, .. } => Some(2.2 * amplitude.abs() / radius),
            // |d/dz| of the transition stays below 2
            Profile::SmoothedStep { height, width, .. } => Some(2.0 * height.abs() / width),
            Profile::Sum(parts) => parts
                .iter()
                .map(Profile::lipschitz_bound)
                .try_fold(0.0, |acc, l| l.map(|l| acc + l)),
        }
    }
}

impl RadialFunction for Profile {
    fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant(c) => *c,
            Profile::Indicator { lo, hi, height } => {
                if x >= *lo && x < *hi {
                    *height
                } else {
                    0.0
                }
            }
            Profile::Gaussian { amplitude, center, width } => {
                let z = (x - center) / width;
                if z.abs() > GAUSS_CUT {
                    0.0
                } else {
                    amplitude * (-0.5 * z * z).exp()
                }
            }
            Profile::Bump { amplitude, center, radius } => {
                let z = (x - center) / radius;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - z * z)).exp()
                }
            }
            Profile::SmoothedStep { height, edge, width } => {
                height * smooth_transition((x - edge) / width)
            }
            Profile::Sum(parts) => parts.iter().map(|p| p.value(x)).sum(),
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Profile::Zero => (0.0, 0.0),
            Profile::Constant(c) => {
                if *c == 0.0 {
                    (0.0, 0.0)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            Profile::Indicator { lo, hi, .. } => (*lo, *hi),
            Profile::Gaussian { center, width, .. } => {
                ((center - GAUSS_CUT * width).max(0.0), (center + GAUSS_CUT * width).max(0.0))
            }
            Profile::Bump { center, radius, .. } => (center - radius, center + radius),
            Profile::SmoothedStep { edge, width, .. } => (0.0, edge + width),
            Profile::Sum(parts) => {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for p in parts {
                    let (a, b) = p.support();
                    if b > a {
                        lo = lo.min(a);
                        hi = hi.max(b);
                    }
                }
                if lo.is_finite() {
                    (lo, hi)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Indicator { lo, hi, .. } => vec![*lo, *hi],
            Profile::Gaussian { center, .. } => {
                if *center > 0.0 {
                    vec![*center]
                } else {
                    Vec::new()
                }
            }
            Profile::Bump { center, .. } => vec![*center],
            Profile::SmoothedStep { edge, width, .. } => vec![edge - width, *edge, edge + width],
            Profile::Sum(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.breakpoints());
                    let (a, b) = p.support();
                    if b > a {
                        out.push(a);
                        if b.is_finite() {
                            out.push(b);
                        }
                    }
                }
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
            _ => Vec::new(),
        }
    }

    fn features(&self) -> Vec<Feature> {
        match self {
            Profile::Gaussian { center, width, .. } => vec![Feature {
                lo: (center - GAUSS_CUT * width).max(0.0),
                hi: center + GAUSS_CUT * width,
                max_width: *width,
            }],
            Profile::Bump { center, radius, .. } => vec![Feature {
                lo: center - radius,
                hi: center + radius,
                max_width: radius / 8.0,
            }],
            Profile::SmoothedStep { edge, width, .. } => vec![Feature {
                lo: edge - width,
                hi: edge + width,
                max_width: width / 4.0,
            }],
            Profile::Sum(parts) => parts.iter().flat_map(Profile::features).collect(),
            _ => Vec::new(),
        }
    }

    fn tail_sup(&self, _x: f64) -> f64 {
        match self {
            Profile::Constant(c) => c.abs(),
            Profile::Sum(parts) => parts.iter().map(|p| p.tail_sup(0.0)).sum(),
            _ => 0.0,
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            Profile::Zero => Some(0.0),
            Profile::Constant(c) => Some(*c),
            _ => None,
        }
    }

    fn tail_decay(&self) -> f64 {
        match self {
            Profile::Constant(c) if *c != 0.0 => 0.0,
            Profile::Sum(parts) => parts
                .iter()
                .map(|p| p.tail_decay())
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }
}

/// Strictly increasing positive abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("grid"));
        }
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if p <= 0.0 {
                return Err(invalid(format!("grid point {i} is not positive: {p}")));
            }
            if i > 0 && p <= points[i - 1] {
                return Err(Error::NotIncreasing(i as i64));
            }
        }
        Ok(Self { points })
    }

    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid(format!("log grid needs 0 < lo < hi, got ({lo}, {hi})")));
        }
        if n < 2 {
            return Err(invalid("log grid needs at least two points"));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
        points[0] = lo;
        points[n - 1] = hi;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// Behaviour of a sampled function beyond its last grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailPolicy {
    Zero,
    /// Continue with the last sample.
    Constant,
    /// Continue as `last * (x / x_last)^{-p}`.
    PowerLaw(f64),
}

/// Function known by samples on a grid.
///
/// Interpolation is cubic Lagrange in `ln x`; below the first node the first sample is
/// held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
    log_points: Vec<f64>,
    tail: TailPolicy,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>, tail: TailPolicy) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let TailPolicy::PowerLaw(p) = tail {
            if !(p > 0.0 && p.is_finite()) {
                return Err(invalid("power-law tail exponent must be positive"));
            }
        }
        let log_points = grid.points().iter().map(|x| x.ln()).collect();
        Ok(Self { grid, values, log_points, tail })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64, tail: TailPolicy) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid.clone(), values, tail)
    }

    pub fn sample(f: &dyn RadialFunction, grid: &Grid, tail: TailPolicy) -> Result<Self> {
        Self::from_fn(grid, |x| f.value(x), tail)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> TailPolicy {
        self.tail
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn interpolate(&self, x: f64) -> f64 {
        let pts = self.grid.points();
        let n = pts.len();
        if n == 1 {
            return self.values[0];
        }
        let i = pts.partition_point(|&p| p <= x).clamp(1, n - 1) - 1;
        if x == pts[i] {
            return self.values[i];
        }
        if n < 4 {
            let (x0, x1) = (self.log_points[i], self.log_points[i + 1]);
            let s = (x.ln() - x0) / (x1 - x0);
            return self.values[i] * (1.0 - s) + self.values[i + 1] * s;
        }
        let start = i.saturating_sub(1).min(n - 4);
        let lx = x.ln();
        let xs = &self.log_points[start..start + 4];
        let ys = &self.values[start..start + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != j {
                    l *= (lx - xs[k]) / (xs[j] - xs[k]);
                }
            }
            acc += l * ys[j];
        }
        acc
    }
}

impl RadialFunction for SampledFunction {
    fn value(&self, x: f64) -> f64 {
        let first = self.grid.first();
        let last = self.grid.last();
        if x <= first {
            return self.values[0];
        }
        if x > last {
            let v = self.values[self.values.len() - 1];
            return match self.tail {
                TailPolicy::Zero => 0.0,
                TailPolicy::Constant => v,
                TailPolicy::PowerLaw(p) => v * (x / last).powf(-p),
            };
        }
        self.interpolate(x)
    }

    fn support(&self) -> (f64, f64) {
        match self.tail {
            TailPolicy::Zero => (0.0, self.grid.last()),
            _ => (0.0, f64::INFINITY),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.grid.points().to_vec()
    }

    fn tail_sup(&self, x: f64) -> f64 {
        let last = self.grid.last();
        let v = self.values[self.values.len() - 1].abs();
        match self.tail {
            TailPolicy::Zero => 0.0,
            TailPolicy::Constant => v,
            TailPolicy::PowerLaw(p) => v * (x.max(last) / last).powf(-p),
        }
    }

    fn tail_decay(&self) -> f64 {
        match self.tail {
            TailPolicy::Zero => f64::INFINITY,
            TailPolicy::Constant => {
                if self.values[self.values.len() - 1] == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            TailPolicy::PowerLaw(p) => p,
        }
    }

    fn as_sampled(&self) -> Option<&SampledFunction> {
        Some(self)
    }
}

impl<T: RadialFunction + ?Sized> RadialFunction for &T {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn features(&self) -> Vec<Feature> {
        (**self).features()
    }
    fn tail_sup(&self, x: f64) -> f64 {
        (**self).tail_sup(x)
    }
    fn tail_decay(&self) -> f64 {
        (**self).tail_decay()
    }
    fn constant_value(&self) -> Option<f64> {
        (**self).constant_value()
    }
    fn as_sampled(&self) -> Option<&SampledFunction> {
        (**self).as_sampled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_exact() {
        let g = Grid::log_spaced(1e-3, 1e3, 61).unwrap();
        assert_eq!(g.first(), 1e-3);
        assert_eq!(g.last(), 1e3);
        assert!((g.points()[30] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![1.0, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, 1.0]).is_err());
        assert!(Grid::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn sampled_interpolation_is_exact_for_cubic_log_polynomials() {
        let g = Grid::log_spaced(0.1, 10.0, 20).unwrap();
        let f = |x: f64| {
            let l = x.ln();
            1.0 + l - 0.5 * l * l + 0.1 * l * l * l
        };
        let s = SampledFunction::from_fn(&g, f, TailPolicy::Zero).unwrap();
        for &x in &[0.11, 0.5, 1.3, 7.77, 9.99] {
            assert!((s.value(x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_tails() {
        let g = Grid::log_spaced(1.0, 2.0, 5).unwrap();
        let s = SampledFunction::from_fn(&g, |_| 3.0, TailPolicy::PowerLaw(2.0)).unwrap();
        assert!((s.value(4.0) - 0.75).abs() < 1e-15);
        assert_eq!(s.value(0.01), 3.0);
        assert!(SampledFunction::new(g.clone(), vec![1.0; 4], TailPolicy::Zero).is_err());
        assert!(SampledFunction::new(g, vec![f64::NAN; 5], TailPolicy::Zero).is_err());
    }

    #[test]
    fn smoothed_step_is_monotone_and_bounded() {
        let p = Profile::SmoothedStep { height: 2.0, edge: 1.0, width: 0.2 };
        let mut prev = 2.0;
        for i in 0..200 {
            let x = i as f64 * 0.01;
            let v = p.value(x);
            assert!(v <= prev + 1e-15 && v >= 0.0);
            prev = v;
        }
        assert_eq!(p.value(0.5), 2.0);
        assert_eq!(p.value(1.3), 0.0);
        assert!((p.value(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profile_validation() {
        assert!(Profile::indicator(1.0, 0.5).validate().is_err());
        assert!(Profile::gaussian(1.0, 0.0).validate().is_err());
        assert!(Profile::Bump { amplitude: 1.0, center: 0.5, radius: 1.0 }.validate().is_err());
        assert!(Profile::gaussian(0.0, 1.0).validate().is_ok());
    }
}
