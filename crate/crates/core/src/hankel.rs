//! Bessel functions of the first kind and the Hankel transform
//! `H f(y) = ∫ (xy)^{-ν} J_ν(xy) f(x) dm(x)`, `ν = λ - 1/2`.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{domain, invalid, Error, Result};
use crate::function::{Grid, RadialFunction, SampledFunction, TailPolicy};
use crate::kernel::QuadratureSpec;
use crate::measure::{function_mesh, LambdaSpace};
use crate::quadrature::{build_mesh, cached_rule, Integrator, MeshConstraints};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrder {
    nu: f64,
}

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > -0.5 && nu.is_finite()) {
            return Err(invalid(format!("Bessel order must exceed -1/2, got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn for_space(space: &LambdaSpace) -> Self {
        Self { nu: space.bessel_order() }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Upper end of the power-series regime.
    pub fn series_limit(&self) -> f64 {
        12f64.max(2.0 * self.nu)
    }

    /// Lower end of the asymptotic regime.
    pub fn asymptotic_limit(&self) -> f64 {
        25.0 + self.nu * self.nu
    }

    /// `J_ν(x)` for `x >= 0`; NaN for negative arguments.
    pub fn j(&self, x: f64) -> f64 {
        if !(x >= 0.0) {
            return f64::NAN;
        }
        if x <= self.series_limit() {
            bessel_j_series(self.nu, x)
        } else if x < self.asymptotic_limit() {
            bessel_j_integral(self.nu, x)
        } else {
            bessel_j_asymptotic(self.nu, x)
        }
    }

    /// `z^{-ν} J_ν(z)`, an entire function of `z` with value `1/(2^ν Γ(ν+1))` at zero.
    pub fn scaled(&self, z: f64) -> f64 {
        if !(z >= 0.0) {
            return f64::NAN;
        }
        if z <= self.series_limit() {
            scaled_series(self.nu, z)
        } else {
            self.j(z) * z.powf(-self.nu)
        }
    }

    /// `|z^{-ν} J_ν(z)| <= envelope(z)`.
    fn envelope(&self, z: f64) -> f64 {
        let at_zero = scaled_series(self.nu, 0.0);
        if z <= 1.0f64.max(self.nu) {
            at_zero
        } else {
            at_zero.min(z.powf(-self.nu - 0.5))
        }
    }
}

pub fn bessel_j(order: BesselOrder, x: f64) -> f64 {
    order.j(x)
}

fn scaled_series(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0 / libm::tgamma(nu + 1.0);
    let mut sum = term;
    for k in 1..300 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && kf > 0.5 * z {
            break;
        }
    }
    sum * 2f64.powf(-nu)
}

/// Ascending power series.
pub fn bessel_j_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    scaled_series(nu, x) * x.powf(nu)
}

/// Hankel's asymptotic expansion, truncated at its smallest term.
pub fn bessel_j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * x);
        if next == 0.0 {
            break;
        }
        if next.abs() >= prev.min(term.abs()) {
            break;
        }
        prev = term.abs();
        term = next;
        // P = t0 - t2 + t4 - ..., Q = t1 - t3 + ...
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let omega = x - (0.5 * nu * PI + FRAC_PI_4);
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}

/// Schläfli's integral representation, evaluated with composite Gauss-Legendre:
/// `J_ν(x) = (1/π)∫_0^π cos(x sin θ - νθ) dθ - (sin νπ/π) ∫_0^∞ exp(-x sinh u - νu) du`.
pub fn bessel_j_integral(nu: f64, x: f64) -> f64 {
    let rule = cached_rule(16, 0.0, 0.0).expect("Gauss-Legendre rule");
    let panels = (x + nu.abs()).ceil() as usize + 4;
    let h = PI / panels as f64;
    let mut first = 0.0;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * h;
        for (xi, w) in rule.iter() {
            let th = mid + 0.5 * h * xi;
            first += w * (x * th.sin() - nu * th).cos();
        }
    }
    first *= 0.5 * h / PI;
    let s = (nu * PI).sin();
    if s == 0.0 || x == 0.0 {
        return first;
    }
    let upper = (45.0 / x).asinh();
    let panels = (upper * x / 2.0).ceil() as usize + 2;
    let h = upper / panels as f64;
    let mut second = 0.0;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * h;
        for (xi, w) in rule.iter() {
            let u = mid + 0.5 * h * xi;
            second += w * (-x * u.sinh() - nu * u).exp();
        }
    }
    second *= 0.5 * h;
    first - s / PI * second
}

/// Panels for `∫ φ_y(x) g(x) dm(x)` over the support of `g`, extended into an unbounded
/// tail until the tail estimate meets `tol`.
fn oscillatory_panels(
    space: &LambdaSpace,
    order: &BesselOrder,
    g: &dyn RadialFunction,
    y: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = g.support();
    let osc = if y > 0.0 { PI / y } else { 0.0 };
    let constraints = MeshConstraints { max_width: osc, ..Default::default() };
    if hi.is_finite() {
        return function_mesh(g, lo, hi, constraints, quad.panel_count);
    }
    let end = g
        .breakpoints()
        .into_iter()
        .filter(|b| b.is_finite())
        .fold(lo.max(1.0), f64::max);
    let mut panels = function_mesh(g, lo, end, constraints.clone(), quad.panel_count)?;
    let p = g.tail_decay();
    let l = space.lambda();
    let tol = quad.abs_tol;
    let bound = |x: f64| {
        let c = g.tail_sup(x);
        if c == 0.0 {
            return 0.0;
        }
        let near = if p > 2.0 * l + 1.0 {
            order.envelope(0.0) * x.powf(2.0 * l + 1.0) / (p - 2.0 * l - 1.0)
        } else {
            f64::INFINITY
        };
        let far = if p > l + 1.0 && x * y >= 1.0f64.max(order.nu()) {
            y.powf(-order.nu() - 0.5) * x.powf(l + 1.0) / (p - l - 1.0)
        } else {
            f64::INFINITY
        };
        c * near.min(far)
    };
    let mut a = end;
    while bound(a) > tol {
        if panels.len() > 200_000 || !a.is_finite() {
            return Err(Error::TailEstimate { estimate: bound(a), tolerance: tol });
        }
        panels.extend(build_mesh(&[a, 2.0 * a], &constraints)?);
        a *= 2.0;
    }
    Ok(panels)
}

/// `H f(y)` at one point.
pub fn hankel_at(space: &LambdaSpace, f: &dyn RadialFunction, y: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(invalid(format!("transform variable must be finite and >= 0, got {y}")));
    }
    let (lo, hi) = f.support();
    if hi <= lo {
        return Ok(0.0);
    }
    let order = BesselOrder::for_space(space);
    let panels = oscillatory_panels(space, &order, f, y, quad)?;
    let integ = Integrator::new(quad.y_nodes_per_panel, 2.0 * space.lambda())?;
    Ok(integ.integrate(&panels, |x| order.scaled(x * y) * f.value(x)))
}

/// Samples of `H f` on `out_grid`. Beyond the last output point the transform is
/// treated as zero, so the grid should cover its decay.
pub fn hankel_transform(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    out_grid: &Grid,
    quad: &QuadratureSpec,
) -> Result<SampledFunction> {
    quad.validate()?;
    let values = out_grid
        .points()
        .iter()
        .map(|&y| hankel_at(space, f, y, quad))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(out_grid.clone(), values, TailPolicy::Zero)
}

/// Grid for transforms of functions supported in `[0, x_max]`: log-spaced near zero,
/// then uniform with 32 points per half-period of the oscillation.
pub fn spectral_grid(x_max: f64, y_max: f64) -> Result<Grid> {
    if !(x_max > 0.0 && y_max > 0.0 && x_max.is_finite() && y_max.is_finite()) {
        return Err(invalid("spectral grid needs positive finite extents"));
    }
    let h = PI / (32.0 * x_max);
    let knee = (4.0 * h).min(0.5 * y_max);
    let lo = 1e-4 * knee;
    let mut pts: Vec<f64> = Grid::log_spaced(lo, knee, 32)?.points().to_vec();
    let mut y = knee + h;
    while y < y_max {
        pts.push(y);
        y += h;
    }
    pts.push(y_max.max(knee + 0.5 * h));
    Grid::new(pts)
}

fn l1_mass(space: &LambdaSpace, f: &dyn RadialFunction, quad: &QuadratureSpec) -> Result<f64> {
    let (lo, hi) = f.support();
    let mesh = function_mesh(f, lo, hi, MeshConstraints::default(), quad.panel_count)?;
    let integ = Integrator::new(quad.y_nodes_per_panel, 2.0 * space.lambda())?;
    Ok(integ.integrate_abs(&mesh, |x| f.value(x)))
}

/// `P_t f = H(e^{-t·} H f)`, for compactly supported `f`.
pub fn spectral_poisson_apply(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    t: f64,
    out_grid: &Grid,
    quad: &QuadratureSpec,
) -> Result<SampledFunction> {
    quad.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("semigroup time must be positive, got {t}")));
    }
    let (lo, hi) = f.support();
    if hi <= lo {
        return SampledFunction::new(out_grid.clone(), vec![0.0; out_grid.len()], TailPolicy::Zero);
    }
    if !hi.is_finite() {
        return Err(domain("the spectral route needs compactly supported input"));
    }
    let order = BesselOrder::for_space(space);
    let bound = l1_mass(space, f, quad)? * order.envelope(0.0);
    let y_max = ((bound / quad.abs_tol).max(1.0).ln() + 1.0) / t;
    let grid = spectral_grid(hi, y_max)?;
    let damped: Vec<f64> = grid
        .points()
        .iter()
        .map(|&y| Ok((-t * y).exp() * hankel_at(space, f, y, quad)?))
        .collect::<Result<_>>()?;
    let g = SampledFunction::new(grid, damped, TailPolicy::Zero)?;
    let values = out_grid
        .points()
        .iter()
        .map(|&x| hankel_at(space, &g, x, quad))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(out_grid.clone(), values, TailPolicy::PowerLaw(space.dimension() + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlancherelReport {
    pub input_norm: f64,
    pub transform_norm: f64,
    /// `None` when the input norm vanishes.
    pub ratio: Option<f64>,
    /// Upper end of the transform variable range that was integrated.
    pub y_max: f64,
}

/// Compares `‖H f‖₂` with `‖f‖₂`; the transform is evaluated at the quadrature nodes.
pub fn plancherel_check(space: &LambdaSpace, f: &dyn RadialFunction, quad: &QuadratureSpec) -> Result<PlancherelReport> {
    quad.validate()?;
    let input_norm = crate::measure::lp_norm(space, f, 2.0, None, quad)?;
    if input_norm == 0.0 {
        return Ok(PlancherelReport { input_norm, transform_norm: 0.0, ratio: None, y_max: 0.0 });
    }
    let (_, hi) = f.support();
    if !hi.is_finite() {
        return Err(domain("the Plancherel check needs compactly supported input"));
    }
    let integ = Integrator::new(quad.y_nodes_per_panel, 2.0 * space.lambda())?;
    let width = PI / hi;
    let mut total = 0.0;
    let mut a = 0.0;
    let mut block = 8.0 * width;
    loop {
        let b = a + block;
        let mesh = build_mesh(&[a, b], &MeshConstraints { max_width: width, ..Default::default() })?;
        let mut part = 0.0;
        for &(p, q) in &mesh {
            part += integ.panel(p, q, |y| hankel_at(space, f, y, quad).map_or(f64::NAN, |v| v * v));
        }
        if !part.is_finite() {
            return Err(Error::NotConverged { what: "transform norm", estimate: f64::INFINITY, tolerance: quad.abs_tol });
        }
        total += part;
        a = b;
        if part <= 1e-14 * total {
            break;
        }
        if a > 1e5 * width {
            return Err(Error::TailEstimate { estimate: part / total, tolerance: 1e-14 });
        }
        block *= 1.5;
    }
    let transform_norm = total.sqrt();
    Ok(PlancherelReport {
        input_norm,
        transform_norm,
        ratio: Some(transform_norm / input_norm),
        y_max: a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn half_integer_orders_are_elementary() {
        let j = BesselOrder::new(0.5).unwrap();
        for &x in &[0.1, 1.0, 5.0, 13.0, 20.0, 30.0, 60.0, 400.0] {
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((j.j(x) - exact).abs() < 1e-13, "x={x}");
        }
        let j = BesselOrder::new(1.5).unwrap();
        for &x in &[0.3, 2.0, 11.0, 15.0, 27.0, 50.0] {
            let exact = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((j.j(x) - exact).abs() < 1e-13, "x={x}");
        }
        assert_relative_eq!(BesselOrder::new(0.5).unwrap().j(FRAC_PI_2), 2.0 / PI, max_relative = 1e-14);
    }

    #[test]
    fn integer_orders_match_libm() {
        let j0 = BesselOrder::new(0.0).unwrap();
        let j1 = BesselOrder::new(1.0).unwrap();
        for i in 0..500 {
            let x = 0.1 * i as f64;
            assert!((j0.j(x) - libm::j0(x)).abs() < 1e-12, "x={x}");
            assert!((j1.j(x) - libm::j1(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn regime_crossovers_are_continuous() {
        for &nu in &[0.0, 0.5, 1.5, 3.5, 0.2, 2.3] {
            let o = BesselOrder::new(nu).unwrap();
            let a = o.series_limit();
            assert!((bessel_j_series(nu, a) - bessel_j_integral(nu, a)).abs() < 1e-12, "nu={nu}");
            assert!((bessel_j_series(nu, a) - bessel_j_asymptotic(nu, a)).abs() < 1e-10, "nu={nu}");
            let b = o.asymptotic_limit();
            assert!((bessel_j_integral(nu, b) - bessel_j_asymptotic(nu, b)).abs() < 1e-13, "nu={nu}");
        }
    }

    #[test]
    fn scaled_value_at_zero() {
        let o = BesselOrder::new(0.5).unwrap();
        assert_eq!(o.j(0.0), 0.0);
        assert_relative_eq!(o.scaled(0.0), (2.0 / PI).sqrt(), max_relative = 1e-15);
        assert_eq!(BesselOrder::new(0.0).unwrap().j(0.0), 1.0);
        assert!(BesselOrder::new(-0.5).is_err());
    }

    #[test]
    fn spectral_grid_is_increasing() {
        let g = spectral_grid(3.0, 40.0).unwrap();
        assert!(g.last() >= 40.0);
        assert!(g.first() > 0.0);
    }
}
