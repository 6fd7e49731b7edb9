//! The measure `x^{2λ} dx` on (0, ∞): interval masses, power weights, norms and oscillation.

use crate::error::{domain, invalid, Error, Result};
use crate::function::{RadialFunction, SampledFunction, TailPolicy};
use crate::kernel::QuadratureSpec;
use crate::quadrature::{build_mesh, clip_breaks, Integrator, MeshConstraints};

/// The half-line with the measure `x^{2λ} dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSpace {
    lambda: f64,
}

impl LambdaSpace {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Homogeneous dimension `2λ + 1`: `m(I(sx, sr)) = s^{2λ+1} m(I(x, r))`.
    pub fn dimension(&self) -> f64 {
        2.0 * self.lambda + 1.0
    }

    /// Order `λ - 1/2` of the Bessel function behind the transform.
    pub fn bessel_order(&self) -> f64 {
        self.lambda - 0.5
    }

    pub fn density(&self, x: f64) -> f64 {
        x.powf(2.0 * self.lambda)
    }

    /// Mass of `[lo, hi]`.
    pub fn measure_between(&self, lo: f64, hi: f64) -> f64 {
        power_integral(lo, hi, 2.0 * self.lambda).unwrap_or(f64::NAN)
    }

    /// Mass of `I(x, r)` with the relative-precision form for `r << x`.
    pub fn measure_interval(&self, interval: &Interval) -> f64 {
        let s = self.dimension();
        let (x, r) = (interval.center, interval.radius);
        if x > r {
            let hi = x + r;
            let q = 2.0 * r / hi;
            // hi^s (1 - (1 - q)^s) / s
            -hi.powf(s) * (s * (-q).ln_1p()).exp_m1() / s
        } else {
            (x + r).powf(s) / s
        }
    }

    pub fn measure(&self, x: f64, r: f64) -> Result<f64> {
        Ok(self.measure_interval(&Interval::new(x, r)?))
    }
}

/// `I(x, r) = (max(x - r, 0), x + r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    center: f64,
    radius: f64,
}

impl Interval {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(center >= 0.0 && center.is_finite()) {
            return Err(invalid(format!("interval center must be finite and >= 0, got {center}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("interval radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lo(&self) -> f64 {
        (self.center - self.radius).max(0.0)
    }

    pub fn hi(&self) -> f64 {
        self.center + self.radius
    }

    /// The same set written with a center that is at least its radius.
    ///
    /// For `x < r` the set is `(0, x + r)`, which is `I((x + r)/2, (x + r)/2)`.
    pub fn canonical(&self) -> Self {
        if self.center >= self.radius {
            *self
        } else {
            let h = 0.5 * (self.center + self.radius);
            Self { center: h, radius: h }
        }
    }
}

/// `∫_lo^hi x^s dx` accurate in relative precision when `lo ≈ hi`.
pub fn power_integral(lo: f64, hi: f64, s: f64) -> Result<f64> {
    if !(lo >= 0.0 && hi >= lo) {
        return Err(invalid(format!("power integral needs 0 <= lo <= hi, got ({lo}, {hi})")));
    }
    if hi == lo {
        return Ok(0.0);
    }
    if lo == 0.0 {
        if s <= -1.0 {
            return Err(domain(format!("x^{s} is not integrable at 0")));
        }
        return Ok(hi.powf(s + 1.0) / (s + 1.0));
    }
    if hi.is_infinite() {
        if s >= -1.0 {
            return Err(domain(format!("x^{s} is not integrable at infinity")));
        }
        return Ok(-lo.powf(s + 1.0) / (s + 1.0));
    }
    let e = s + 1.0;
    let l = (-(hi - lo) / hi).ln_1p();
    if e.abs() * l.abs() < 1e-300 || e == 0.0 {
        return Ok(-l);
    }
    Ok(-hi.powf(e) * (e * l).exp_m1() / e)
}

/// Power weight `x^δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWeight {
    delta: f64,
}

impl PowerWeight {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(invalid("weight exponent must be finite"));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn value(&self, x: f64) -> f64 {
        x.powf(self.delta)
    }

    /// Open range of exponents for which `x^δ` is an A_p weight on the space.
    pub fn ap_range(space: &LambdaSpace, p: f64) -> (f64, f64) {
        let d = space.dimension();
        (-d, d * (p - 1.0))
    }

    pub fn check_ap(&self, space: &LambdaSpace, p: f64) -> Result<()> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("A_p needs finite p > 1, got {p}")));
        }
        let (lo, hi) = Self::ap_range(space, p);
        if self.delta > lo && self.delta < hi {
            Ok(())
        } else {
            Err(domain(format!(
                "x^{} is not an A_{} weight for lambda = {} (admissible range {lo} < delta < {hi})",
                self.delta,
                p,
                space.lambda()
            )))
        }
    }
}

/// Supremum over `family` of the A_p characteristic of `x^δ`, from exact antiderivatives.
pub fn ap_characteristic(
    space: &LambdaSpace,
    weight: &PowerWeight,
    p: f64,
    family: &[Interval],
) -> Result<f64> {
    weight.check_ap(space, p)?;
    if family.is_empty() {
        return Err(Error::Empty("interval family"));
    }
    let two_l = 2.0 * space.lambda();
    let delta = weight.delta();
    let mut sup = 0.0f64;
    for iv in family {
        let (lo, hi) = (iv.lo(), iv.hi());
        let mass = power_integral(lo, hi, two_l)?;
        let avg_w = power_integral(lo, hi, two_l + delta)? / mass;
        let avg_dual = power_integral(lo, hi, two_l - delta / (p - 1.0))? / mass;
        sup = sup.max(avg_w * avg_dual.powf(p - 1.0));
    }
    Ok(sup)
}

/// Extremes of `m(I(x, r)) / (x^{2λ} r + r^{2λ+1})` over a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparabilityReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub points: usize,
}

pub fn comparability_check(space: &LambdaSpace, sweep: &[(f64, f64)]) -> Result<ComparabilityReport> {
    if sweep.is_empty() {
        return Err(Error::Empty("sweep"));
    }
    let two_l = 2.0 * space.lambda();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for &(x, r) in sweep {
        let m = space.measure(x, r)?;
        let model = x.powf(two_l) * r + r.powf(two_l + 1.0);
        let ratio = m / model;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(ComparabilityReport { min_ratio, max_ratio, points: sweep.len() })
}

/// Panels covering `[lo, hi]` that respect the breakpoints and features of `f`.
pub(crate) fn function_mesh(
    f: &dyn RadialFunction,
    lo: f64,
    hi: f64,
    extra: MeshConstraints,
    panel_count: usize,
) -> Result<Vec<(f64, f64)>> {
    if hi <= lo {
        return Ok(Vec::new());
    }
    let breaks = clip_breaks(lo, hi, f.breakpoints());
    let mut c = extra;
    c.features.extend(f.features());
    let span_limit = (hi - lo) / panel_count.max(1) as f64;
    c.max_width = if c.max_width > 0.0 { c.max_width.min(span_limit) } else { span_limit };
    build_mesh(&breaks, &c)
}

/// L^p norm of `f` with respect to `x^δ dm`, `p = ∞` allowed.
pub fn lp_norm(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    p: f64,
    weight: Option<PowerWeight>,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if !(p >= 1.0) {
        return Err(invalid(format!("L^p needs p >= 1, got {p}")));
    }
    let delta = weight.map_or(0.0, |w| w.delta());
    let e = 2.0 * space.lambda() + delta;
    if !(e > -1.0) {
        return Err(domain("weighted measure is not locally finite at 0"));
    }
    let (lo, hi) = f.support();
    if hi <= lo {
        return Ok(0.0);
    }
    let end = if hi.is_finite() {
        hi
    } else {
        f.breakpoints()
            .into_iter()
            .filter(|b| b.is_finite())
            .fold(lo.max(1.0), f64::max)
    };
    let mesh = function_mesh(f, lo, end, MeshConstraints::default(), quad.panel_count)?;
    if p.is_infinite() {
        let mut sup = f.tail_sup(end);
        for &(a, b) in &mesh {
            for y in [a, 0.5 * (a + b), b] {
                sup = sup.max(f.value(y).abs());
            }
        }
        return Ok(sup);
    }
    let integ = Integrator::new(quad.y_nodes_per_panel, e)?;
    let mut total = integ.integrate_abs(&mesh, |y| {
        let v = f.value(y);
        v.signum() * v.abs().powf(p)
    });
    if hi.is_infinite() {
        let c = f.tail_sup(end);
        if c > 0.0 {
            let d = f.tail_decay();
            if !(d * p > e + 1.0) {
                return Err(domain("function tail is not p-integrable"));
            }
            total += c.powf(p) * end.powf(e + 1.0) / (d * p - e - 1.0);
        }
    }
    Ok(total.powf(1.0 / p))
}

/// Intervals `I(2^i, 2^k)` for `i` and `k` in the given ranges.
pub fn dyadic_family(
    centers: std::ops::RangeInclusive<i32>,
    radii: std::ops::RangeInclusive<i32>,
) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    for i in centers {
        for k in radii.clone() {
            out.push(Interval::new(2f64.powi(i), 2f64.powi(k))?);
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("interval family"));
    }
    Ok(out)
}

/// Mean oscillation of `f` on one interval: `(1/m(I)) ∫_I |f - f_I| dm`.
pub fn mean_oscillation(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    interval: &Interval,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let (lo, hi) = (interval.lo(), interval.hi());
    let mesh = function_mesh(f, lo, hi, MeshConstraints::default(), quad.panel_count)?;
    let integ = Integrator::new(quad.y_nodes_per_panel, 2.0 * space.lambda())?;
    let mass = integ.integrate(&mesh, |_| 1.0);
    let avg = integ.integrate(&mesh, |y| f.value(y)) / mass;
    Ok(integ.integrate_abs(&mesh, |y| f.value(y) - avg) / mass)
}

/// BMO seminorm restricted to a finite interval family.
pub fn bmo_norm(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    family: &[Interval],
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if family.is_empty() {
        return Err(Error::Empty("interval family"));
    }
    let mut sup = 0.0f64;
    for iv in family {
        sup = sup.max(mean_oscillation(space, f, iv, quad)?);
    }
    Ok(sup)
}

/// Running integral `∫_0^x |g|^q dm` of a sampled function.
#[derive(Debug, Clone)]
pub struct CumulativeMass {
    space: LambdaSpace,
    f: SampledFunction,
    q: f64,
    integ: Integrator,
    cumulative: Vec<f64>,
}

impl CumulativeMass {
    pub fn new(space: &LambdaSpace, f: &SampledFunction, q: f64) -> Result<Self> {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(invalid(format!("exponent q must be finite and >= 1, got {q}")));
        }
        let integ = Integrator::new(8, 2.0 * space.lambda())?;
        let pts = f.grid().points();
        let mut cumulative = Vec::with_capacity(pts.len());
        let s = space.dimension();
        let mut acc = f.values()[0].abs().powf(q) * pts[0].powf(s) / s;
        cumulative.push(acc);
        let g = |y: f64| {
            let v = f.value(y);
            v.signum() * v.abs().powf(q)
        };
        for w in pts.windows(2) {
            acc += integ.integrate_abs(&[(w[0], w[1])], g);
            cumulative.push(acc);
        }
        Ok(Self { space: *space, f: f.clone(), q, integ, cumulative })
    }

    fn piece(&self, lo: f64, hi: f64) -> f64 {
        let q = self.q;
        self.integ.integrate_abs(&[(lo, hi)], |y| {
            let v = self.f.value(y);
            v.signum() * v.abs().powf(q)
        })
    }

    fn tail_mass(&self, lo: f64, hi: f64) -> f64 {
        let pts = self.f.grid().points();
        let last = pts[pts.len() - 1];
        let v = self.f.values()[pts.len() - 1].abs();
        let two_l = 2.0 * self.space.lambda();
        match self.f.tail() {
            TailPolicy::Zero => 0.0,
            TailPolicy::Constant => v.powf(self.q) * power_integral(lo, hi, two_l).unwrap_or(f64::INFINITY),
            TailPolicy::PowerLaw(p) => {
                let e = p * self.q;
                v.powf(self.q) * last.powf(e) * power_integral(lo, hi, two_l - e).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// `∫_lo^hi |g|^q dm`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let pts = self.f.grid().points();
        let first = pts[0];
        let last = pts[pts.len() - 1];
        let s = self.space.dimension();
        let v0 = self.f.values()[0].abs().powf(self.q);
        let mut total = 0.0;
        // head where the first sample is held
        if lo < first {
            let h = hi.min(first);
            total += v0 * power_integral(lo, h, s - 1.0).unwrap_or(0.0);
        }
        let (a, b) = (lo.max(first), hi.min(last));
        if b > a {
            let ia = pts.partition_point(|&p| p <= a).saturating_sub(1);
            let ib = pts.partition_point(|&p| p < b).saturating_sub(1);
            if ia == ib {
                total += self.piece(a, b);
            } else {
                // [a, pts[ia+1]] + whole cells + [pts[ib], b]
                total += self.piece(a, pts[ia + 1]);
                total += self.cumulative[ib] - self.cumulative[ia + 1];
                total += self.piece(pts[ib], b);
            }
        }
        if hi > last {
            total += self.tail_mass(lo.max(last), hi);
        }
        total
    }
}
