//! The Bessel-Poisson kernel, its derivatives, and the semigroup acting on functions.
//!
//! With `u = cos θ` the kernel reads
//! `P_t(x,y) = (2λt/π) ∫_{-1}^{1} (1-u²)^{λ-1} D(u)^{-λ-1} du`,
//! `D = (x-y)² + t² + 2xy(1-u)`. Writing `D` this way keeps it free of cancellation.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::function::{Grid, RadialFunction, SampledFunction, TailPolicy};
use crate::measure::{function_mesh, Interval, LambdaSpace};
use crate::quadrature::{cached_rule, GaussRule, Integrator, MeshConstraints, Pole};

/// Node counts and tolerances for the angular and radial integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Largest Gauss-Jacobi rule tried for the angular integral.
    pub theta_nodes: usize,
    pub y_nodes_per_panel: usize,
    /// Minimum number of panels across the finite part of a support.
    pub panel_count: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            theta_nodes: 64,
            y_nodes_per_panel: 12,
            panel_count: 8,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(16..=1024).contains(&self.theta_nodes) {
            return Err(invalid(format!(
                "theta_nodes must lie in 16..=1024, got {}",
                self.theta_nodes
            )));
        }
        if self.y_nodes_per_panel < 2 || self.y_nodes_per_panel > 256 {
            return Err(invalid("y_nodes_per_panel must lie in 2..=256"));
        }
        if self.panel_count == 0 {
            return Err(invalid("panel_count must be positive"));
        }
        for (name, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl KernelPoint {
    pub fn new(t: f64, x: f64, y: f64) -> Result<Self> {
        for (name, v) in [("t", t), ("x", x), ("y", y)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("kernel argument {name} must be positive, got {v}")));
            }
        }
        Ok(Self { t, x, y })
    }
}

/// Kernel value with its first partial derivatives and the mixed t-derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelJet {
    pub value: f64,
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxdt: f64,
    pub dydt: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    m0: f64,
    m1: f64,
    m1s: f64,
    m2: f64,
    m2s: f64,
}

impl Moments {
    #[inline]
    fn add(&mut self, w: f64, s: f64, p: f64, inv_d: f64, jet: bool) {
        self.m0 += w * p;
        if jet {
            let p1 = p * inv_d;
            let p2 = p1 * inv_d;
            self.m1 += w * p1;
            self.m1s += w * s * p1;
            self.m2 += w * p2;
            self.m2s += w * s * p2;
        }
    }
}

const LADDER_START: usize = 8;
const GRADED_NODES: usize = 16;
/// Per-panel relative error bound of the graded rule: a pole three half-widths from
/// the panel centre gives a Bernstein ellipse of parameter 3 + √8.
const GRADED_ESTIMATE: f64 = 1e-22;

/// Kernel evaluator with precomputed rules for one λ.
#[derive(Debug, Clone)]
pub struct PoissonKernel {
    space: LambdaSpace,
    quad: QuadratureSpec,
    ladder: Vec<Arc<GaussRule>>,
    head: Arc<GaussRule>,
    body: Arc<GaussRule>,
    integer_power: Option<i32>,
    /// `∫ (1-u²)^{λ-1} du`
    weight_mass: f64,
}

impl PoissonKernel {
    pub fn new(space: LambdaSpace, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let lm1 = space.lambda() - 1.0;
        let mut ladder = Vec::new();
        let mut n = LADDER_START;
        while n < quad.theta_nodes {
            ladder.push(cached_rule(n, lm1, lm1)?);
            n *= 2;
        }
        ladder.push(cached_rule(quad.theta_nodes, lm1, lm1)?);
        let k = space.lambda() + 1.0;
        let integer_power = (k.fract() == 0.0 && k <= 16.0).then_some(k as i32);
        let l = space.lambda();
        let weight_mass = (0.5 * PI.ln() + libm::lgamma(l) - libm::lgamma(l + 0.5)).exp();
        Ok(Self {
            space,
            quad,
            ladder,
            head: cached_rule(GRADED_NODES, 0.0, lm1)?,
            body: cached_rule(GRADED_NODES, 0.0, 0.0)?,
            integer_power,
            weight_mass,
        })
    }

    pub fn space(&self) -> &LambdaSpace {
        &self.space
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    #[inline]
    fn neg_power(&self, d: f64) -> f64 {
        match self.integer_power {
            Some(k) => d.powi(-k),
            None => d.powf(-(self.space.lambda() + 1.0)),
        }
    }

    /// A-priori relative error bound of the `n`-node Jacobi rule for `q = d/B`.
    fn plain_estimate(q: f64, n: usize, power: f64) -> f64 {
        let rho = 1.0 + q + (q * (2.0 + q)).sqrt();
        let u_star = 1.0 + q;
        let mut best = f64::INFINITY;
        for frac in [0.3, 0.5, 0.7, 0.85, 0.95] {
            let r = rho.powf(frac);
            let a_r = 0.5 * (r + 1.0 / r);
            let gap = u_star - a_r;
            if gap <= 0.0 {
                continue;
            }
            let ln_e = 4f64.ln() + power * ((u_star + 1.0) / gap).ln()
                - 2.0 * n as f64 * r.ln()
                - (r * r - 1.0).ln();
            best = best.min(ln_e.exp());
        }
        best
    }

    fn moments(&self, d: f64, b: f64, jet: bool) -> (Moments, f64) {
        let mut mom = Moments::default();
        if b == 0.0 {
            let p = self.neg_power(d);
            // D is constant; the weight has mean one for s = 1 - u
            mom.add(self.weight_mass, 1.0, p, 1.0 / d, jet);
            return (mom, 0.0);
        }
        let q = d / b;
        let power = self.space.lambda() + if jet { 3.0 } else { 1.0 };
        let target = self.quad.rel_tol * 1e-3;
        for rule in &self.ladder {
            let est = Self::plain_estimate(q, rule.len(), power);
            if est <= target {
                for (u, w) in rule.iter() {
                    let s = 1.0 - u;
                    let dd = d + b * s;
                    mom.add(w, s, self.neg_power(dd), 1.0 / dd, jet);
                }
                return (mom, est);
            }
        }
        self.graded_moments(d, b, q.min(1.0), jet, &mut mom);
        (mom, GRADED_ESTIMATE)
    }

    /// Near the diagonal the integrand peaks at `s = 1 - u = 0` on the scale `q`:
    /// a weighted head panel `[0, q]`, geometric ratio-2 panels up to `s = 1`, and a
    /// weighted panel for `u` in `[-1, 0]`.
    fn graded_moments(&self, d: f64, b: f64, h0: f64, jet: bool, mom: &mut Moments) {
        let lm1 = self.space.lambda() - 1.0;
        let weighted = lm1 != 0.0;
        let half = 0.5 * h0;
        let head_scale = half.powf(self.space.lambda());
        for (xi, w) in self.head.iter() {
            let s = half * (1.0 + xi);
            let mut wt = w * head_scale;
            if weighted {
                wt *= (2.0 - s).powf(lm1);
            }
            let dd = d + b * s;
            mom.add(wt, s, self.neg_power(dd), 1.0 / dd, jet);
        }
        let mut lo = h0;
        while lo < 1.0 {
            let hi = (2.0 * lo).min(1.0);
            let (mid, hw) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (xi, w) in self.body.iter() {
                let s = mid + hw * xi;
                let mut wt = w * hw;
                if weighted {
                    wt *= (s * (2.0 - s)).powf(lm1);
                }
                let dd = d + b * s;
                mom.add(wt, s, self.neg_power(dd), 1.0 / dd, jet);
            }
            lo = hi;
        }
        // u in [-1, 0]: u = (ξ - 1)/2, weight (1+u)^{λ-1} carried by the rule
        let tail_scale = 0.5f64.powf(self.space.lambda());
        for (xi, w) in self.head.iter() {
            let s = 0.5 * (3.0 - xi);
            let mut wt = w * tail_scale;
            if weighted {
                wt *= s.powf(lm1);
            }
            let dd = d + b * s;
            mom.add(wt, s, self.neg_power(dd), 1.0 / dd, jet);
        }
    }

    fn check(&self, what: &'static str, value: f64, est: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::NotConverged { what, estimate: f64::INFINITY, tolerance: self.quad.rel_tol });
        }
        if est > self.quad.rel_tol {
            return Err(Error::NotConverged { what, estimate: est, tolerance: self.quad.rel_tol });
        }
        Ok(value)
    }

    /// Kernel value without argument validation; callers guarantee `t > 0`, `x, y >= 0`.
    #[inline]
    pub(crate) fn value_raw(&self, t: f64, x: f64, y: f64) -> (f64, f64) {
        let diff = x - y;
        let d = diff * diff + t * t;
        let b = 2.0 * x * y;
        let (mom, est) = self.moments(d, b, false);
        (2.0 * self.space.lambda() * t / PI * mom.m0, est)
    }

    pub(crate) fn jet_raw(&self, t: f64, x: f64, y: f64) -> (KernelJet, f64) {
        let l = self.space.lambda();
        let diff = x - y;
        let d = diff * diff + t * t;
        let b = 2.0 * x * y;
        let (m, est) = self.moments(d, b, true);
        let c = 2.0 * l / PI;
        let k1 = 2.0 * (l + 1.0);
        let k2 = 2.0 * (l + 2.0) * t * t;
        // dD/dx = 2(x - y) + 2y s, dD/dy = 2(y - x) + 2x s
        let gx1 = 2.0 * diff * m.m1 + 2.0 * y * m.m1s;
        let gy1 = -2.0 * diff * m.m1 + 2.0 * x * m.m1s;
        let gx2 = 2.0 * diff * (m.m1 - k2 * m.m2) + 2.0 * y * (m.m1s - k2 * m.m2s);
        let gy2 = -2.0 * diff * (m.m1 - k2 * m.m2) + 2.0 * x * (m.m1s - k2 * m.m2s);
        let jet = KernelJet {
            value: c * t * m.m0,
            dt: c * (m.m0 - k1 * t * t * m.m1),
            dx: -c * (l + 1.0) * t * gx1,
            dy: -c * (l + 1.0) * t * gy1,
            dxdt: -c * (l + 1.0) * gx2,
            dydt: -c * (l + 1.0) * gy2,
        };
        (jet, est)
    }

    pub fn value(&self, pt: &KernelPoint) -> Result<f64> {
        let (v, est) = self.value_raw(pt.t, pt.x, pt.y);
        self.check("kernel value", v, est)
    }

    pub fn jet(&self, pt: &KernelPoint) -> Result<KernelJet> {
        let (j, est) = self.jet_raw(pt.t, pt.x, pt.y);
        for v in [j.value, j.dt, j.dx, j.dy, j.dxdt, j.dydt] {
            self.check("kernel derivatives", v, est)?;
        }
        Ok(j)
    }

    pub fn dt(&self, pt: &KernelPoint) -> Result<f64> {
        Ok(self.jet(pt)?.dt)
    }

    pub fn dx(&self, pt: &KernelPoint) -> Result<f64> {
        Ok(self.jet(pt)?.dx)
    }

    pub fn dy(&self, pt: &KernelPoint) -> Result<f64> {
        Ok(self.jet(pt)?.dy)
    }

    /// Constant with `P_t(x,y) <= C t / |y-x|^{2λ+2}` for `y >= 2x`; used for tail bounds.
    fn far_constant(&self, t: f64) -> f64 {
        let l = self.space.lambda();
        2.0 * l * t / PI * self.weight_mass * 2f64.powf(2.0 * l + 2.0)
    }

    /// Panels for `∫ g(y) dm(y)` where `g` combines kernels at base point `x` and
    /// times `times` with a function `f`. When the integrand's support is unbounded,
    /// geometric far-field panels are appended until `tail_bound(X)` drops below the
    /// absolute tolerance.
    pub(crate) fn y_panels(
        &self,
        x: f64,
        times: &[f64],
        f: &dyn RadialFunction,
        unbounded: bool,
        tail_bound: impl Fn(f64) -> f64,
    ) -> Result<Vec<(f64, f64)>> {
        let (lo, hi) = f.support();
        let t_max = times.iter().fold(0.0f64, |m, &t| m.max(t));
        let poles = times.iter().map(|&t| Pole { re: x, im: t }).collect();
        let constraints = MeshConstraints { poles, ..Default::default() };
        if !unbounded && hi.is_finite() {
            return function_mesh(f, lo, hi, constraints, self.quad.panel_count);
        }
        let (lo, hi) = if unbounded { (0.0, hi) } else { (lo, hi) };
        let last_break = f
            .breakpoints()
            .into_iter()
            .filter(|b| b.is_finite())
            .fold(0.0f64, f64::max);
        let hi_finite = if hi.is_finite() { hi } else { 0.0 };
        let near_end = last_break.max(hi_finite).max(2.0 * (x + t_max)).max(lo);
        let mut panels = function_mesh(f, lo, near_end, constraints, self.quad.panel_count)?;
        let tol = 0.1 * self.quad.abs_tol;
        let mut a = near_end;
        for _ in 0..400 {
            if tail_bound(a) <= tol {
                return Ok(panels);
            }
            panels.push((a, 2.0 * a));
            a *= 2.0;
        }
        Err(Error::TailEstimate { estimate: tail_bound(a), tolerance: tol })
    }

    /// Tail bound for `∫_X^∞ |Σ c_i P_{t_i}(x,y)| |f(y)| dm(y)`.
    pub(crate) fn kernel_tail(&self, coeff_times: &[(f64, f64)], sup_f: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
        let c: f64 = coeff_times.iter().map(|&(c, t)| c.abs() * self.far_constant(t)).sum();
        move |big_x| c * sup_f(big_x) / big_x
    }

    /// `(P_t f)(x)`.
    pub fn apply_at(&self, f: &dyn RadialFunction, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("semigroup time must be positive, got {t}")));
        }
        if !(x >= 0.0 && x.is_finite()) {
            return Err(invalid(format!("evaluation point must be finite and >= 0, got {x}")));
        }
        let (lo, hi) = f.support();
        if hi <= lo {
            return Ok(0.0);
        }
        let tail = self.kernel_tail(&[(1.0, t)], |big_x| f.tail_sup(big_x));
        let panels = self.y_panels(x, &[t], f, false, tail)?;
        let integ = Integrator::new(self.quad.y_nodes_per_panel, 2.0 * self.space.lambda())?;
        let mut worst = 0.0f64;
        let v = integ.integrate(&panels, |y| {
            let (k, est) = self.value_raw(t, x, y);
            worst = worst.max(est);
            k * f.value(y)
        });
        self.check("semigroup integral", v, worst)
    }

    /// Samples of `P_t f` on `grid`.
    pub fn apply(&self, f: &dyn RadialFunction, t: f64, grid: &Grid) -> Result<SampledFunction> {
        let values = grid
            .points()
            .iter()
            .map(|&x| self.apply_at(f, t, x))
            .collect::<Result<Vec<_>>>()?;
        SampledFunction::new(grid.clone(), values, self.output_tail(f))
    }

    /// Tail policy for functions produced by integrating against the kernel.
    pub(crate) fn output_tail(&self, f: &dyn RadialFunction) -> TailPolicy {
        let decay = f.tail_decay();
        let kernel_decay = 2.0 * self.space.lambda() + 2.0;
        if decay <= 0.0 {
            TailPolicy::Constant
        } else {
            TailPolicy::PowerLaw(decay.min(kernel_decay))
        }
    }

    /// `∫ P_t(x,y) dm(y)`, which equals one.
    pub fn mass(&self, t: f64, x: f64) -> Result<f64> {
        self.apply_at(&crate::function::Profile::Constant(1.0), t, x)
    }
}

pub fn poisson_kernel(space: &LambdaSpace, pt: &KernelPoint, quad: &QuadratureSpec) -> Result<f64> {
    PoissonKernel::new(*space, *quad)?.value(pt)
}

pub fn poisson_kernel_jet(space: &LambdaSpace, pt: &KernelPoint, quad: &QuadratureSpec) -> Result<KernelJet> {
    PoissonKernel::new(*space, *quad)?.jet(pt)
}

pub fn poisson_apply(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    t: f64,
    grid: &Grid,
    quad: &QuadratureSpec,
) -> Result<SampledFunction> {
    PoissonKernel::new(*space, *quad)?.apply(f, t, grid)
}

/// The four kernel estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundItem {
    /// `|P|`
    Size,
    /// `|∂_x P|`
    XDerivative,
    /// `|∂_t P|`
    TDerivative,
    /// `|∂_x ∂_t P| + |∂_y ∂_t P|`
    MixedDerivative,
}

impl BoundItem {
    pub const ALL: [BoundItem; 4] = [
        BoundItem::Size,
        BoundItem::XDerivative,
        BoundItem::TDerivative,
        BoundItem::MixedDerivative,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            BoundItem::Size => "i",
            BoundItem::XDerivative => "ii",
            BoundItem::TDerivative => "iii",
            BoundItem::MixedDerivative => "iv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label() == s)
    }

    /// The measured quantity at one point.
    pub fn quantity(&self, jet: &KernelJet) -> f64 {
        match self {
            BoundItem::Size => jet.value.abs(),
            BoundItem::XDerivative => jet.dx.abs(),
            BoundItem::TDerivative => jet.dt.abs(),
            BoundItem::MixedDerivative => jet.dxdt.abs() + jet.dydt.abs(),
        }
    }

    /// The smaller of the two bound shapes, without the constant.
    pub fn envelope(&self, lambda: f64, pt: &KernelPoint) -> f64 {
        let diff = pt.x - pt.y;
        let d = diff * diff + pt.t * pt.t;
        let xy_l = (pt.x * pt.y).powf(lambda);
        let (numer, extra) = match self {
            BoundItem::Size => (pt.t, 0.0),
            BoundItem::XDerivative => (pt.t, 0.5),
            BoundItem::TDerivative => (1.0, 0.0),
            BoundItem::MixedDerivative => (1.0, 0.5),
        };
        let near = numer / d.powf(lambda + 1.0 + extra);
        let far = numer / (xy_l * d.powf(1.0 + extra));
        near.min(far)
    }
}

/// Fitted constant of one kernel estimate over a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub item: BoundItem,
    pub fitted_constant: f64,
    pub argmax: KernelPoint,
    /// Fits restricted to `x <= 2|x-y|` and `x > 2|x-y|`.
    pub near_origin_constant: f64,
    pub off_origin_constant: f64,
    pub points: usize,
}

pub fn verify_kernel_bounds(kernel: &PoissonKernel, sweep: &[KernelPoint], item: BoundItem) -> Result<BoundReport> {
    if sweep.is_empty() {
        return Err(Error::Empty("sweep"));
    }
    let lambda = kernel.space().lambda();
    let mut best = (0.0f64, sweep[0]);
    let mut near = 0.0f64;
    let mut off = 0.0f64;
    for pt in sweep {
        let jet = kernel.jet(pt)?;
        let ratio = item.quantity(&jet) / item.envelope(lambda, pt);
        if ratio > best.0 {
            best = (ratio, *pt);
        }
        if pt.x <= 2.0 * (pt.x - pt.y).abs() {
            near = near.max(ratio);
        } else {
            off = off.max(ratio);
        }
    }
    Ok(BoundReport {
        item,
        fitted_constant: best.0,
        argmax: best.1,
        near_origin_constant: near,
        off_origin_constant: off,
        points: sweep.len(),
    })
}

/// `m(I(x, r))` for the distance scale of a kernel estimate.
pub(crate) fn ball_mass(space: &LambdaSpace, x: f64, r: f64) -> Result<f64> {
    Ok(space.measure_interval(&Interval::new(x, r)?))
}
