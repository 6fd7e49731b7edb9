//! Differential transforms `T_N f = Σ_{j=N₁}^{N₂} v_j (P_{a_{j+1}} f - P_{a_j} f)`,
//! their kernels, the truncated maximal operator, and Hardy-Littlewood maximal functions.

use std::collections::HashMap;

use crate::error::{domain, invalid, Error, Result};
use crate::function::{Grid, Profile, RadialFunction, SampledFunction, TailPolicy};
use crate::kernel::{ball_mass, PoissonKernel};
use crate::lacunary::LacunarySetup;
use crate::measure::{function_mesh, CumulativeMass, Interval, LambdaSpace};
use crate::quadrature::{Integrator, MeshConstraints};

/// Window `N = (N₁, N₂)` with `N₁ < N₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexWindow {
    n1: i64,
    n2: i64,
}

impl IndexWindow {
    pub fn new(n1: i64, n2: i64) -> Result<Self> {
        if n1 >= n2 {
            return Err(invalid(format!("window needs n1 < n2, got ({n1}, {n2})")));
        }
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> i64 {
        self.n1
    }

    pub fn n2(&self) -> i64 {
        self.n2
    }

    /// Number of terms in the partial sum.
    pub fn len(&self) -> usize {
        (self.n2 - self.n1 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.n1..=self.n2
    }
}

/// Cap `M` of the truncated maximal operator: windows with `-M <= N₁ < N₂ <= M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationLevel {
    m_cap: i64,
}

impl TruncationLevel {
    pub fn new(m_cap: i64) -> Result<Self> {
        if m_cap < 1 {
            return Err(invalid(format!("truncation level must be at least 1, got {m_cap}")));
        }
        Ok(Self { m_cap })
    }

    pub fn m_cap(&self) -> i64 {
        self.m_cap
    }

    pub fn full_window(&self) -> IndexWindow {
        IndexWindow { n1: -self.m_cap, n2: self.m_cap }
    }
}

/// Samples of `P_{a_j} f` at fixed points, shared by every window.
///
/// Entries are keyed by the bit pattern of the time, so equal times give identical
/// samples and telescoping sums cancel exactly.
#[derive(Debug, Clone)]
pub struct SemigroupTable {
    points: Vec<f64>,
    by_time: HashMap<u64, Vec<f64>>,
}

impl SemigroupTable {
    pub fn build(kernel: &PoissonKernel, f: &dyn RadialFunction, times: &[f64], points: &[f64]) -> Result<Self> {
        let mut by_time = HashMap::new();
        for &t in times {
            if by_time.contains_key(&t.to_bits()) {
                continue;
            }
            let samples = match f.constant_value() {
                Some(c) => vec![c; points.len()],
                None => points
                    .iter()
                    .map(|&x| kernel.apply_at(f, t, x))
                    .collect::<Result<Vec<_>>>()?,
            };
            by_time.insert(t.to_bits(), samples);
        }
        Ok(Self { points: points.to_vec(), by_time })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `P_t f` at the table points; `t` must be one of the build times.
    pub fn samples(&self, t: f64) -> &[f64] {
        self.by_time
            .get(&t.to_bits())
            .map(Vec::as_slice)
            .expect("time missing from semigroup table")
    }

    /// Terms `v_j (P_{a_{j+1}} f - P_{a_j} f)(x_i)` for `j` in `window`, per point.
    pub fn terms(&self, setup: &LacunarySetup, window: &IndexWindow) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(window.len()); self.points.len()];
        for j in window.indices() {
            let v = setup.v(j).expect("window checked");
            let lo = self.samples(setup.a(j).expect("window checked"));
            let hi = self.samples(setup.a(j + 1).expect("window checked"));
            for (i, row) in out.iter_mut().enumerate() {
                row.push(v * (hi[i] - lo[i]));
            }
        }
        out
    }
}

fn window_times(setup: &LacunarySetup, window: &IndexWindow) -> Vec<f64> {
    (window.n1()..=window.n2() + 1).map(|j| setup.a(j).expect("window checked")).collect()
}

/// `sup_{p < q - 1} |U_q - U_p|` over prefix sums `U` of `terms` (with `U_{-1} = 0`),
/// that is the largest `|Σ_{j=n1}^{n2} terms_j|` over windows of at least two terms.
pub fn window_sup(terms: &[f64]) -> f64 {
    if terms.len() < 2 {
        return 0.0;
    }
    let mut prefix = Vec::with_capacity(terms.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &t in terms {
        acc += t;
        prefix.push(acc);
    }
    let mut best = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for q in 2..prefix.len() {
        lo = lo.min(prefix[q - 2]);
        hi = hi.max(prefix[q - 2]);
        best = best.max((prefix[q] - lo).abs()).max((prefix[q] - hi).abs());
    }
    best
}

/// `K_N(x, y)`.
pub fn kernel_k_n(kernel: &PoissonKernel, setup: &LacunarySetup, window: &IndexWindow, x: f64, y: f64) -> Result<f64> {
    setup.check_window(window)?;
    check_point(x)?;
    check_point(y)?;
    let vals: Vec<f64> = window_times(setup, window)
        .iter()
        .map(|&t| kernel.value_raw(t, x, y).0)
        .collect();
    Ok(window
        .indices()
        .enumerate()
        .map(|(i, j)| setup.v(j).expect("window checked") * (vals[i + 1] - vals[i]))
        .sum())
}

/// `(K_N, ∂_x K_N, ∂_y K_N)` at `(x, y)`.
pub fn kernel_k_n_jet(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    window: &IndexWindow,
    x: f64,
    y: f64,
) -> Result<(f64, f64, f64)> {
    setup.check_window(window)?;
    check_point(x)?;
    check_point(y)?;
    let jets: Vec<_> = window_times(setup, window)
        .iter()
        .map(|&t| kernel.jet_raw(t, x, y).0)
        .collect();
    let mut out = (0.0, 0.0, 0.0);
    for (i, j) in window.indices().enumerate() {
        let v = setup.v(j).expect("window checked");
        out.0 += v * (jets[i + 1].value - jets[i].value);
        out.1 += v * (jets[i + 1].dx - jets[i].dx);
        out.2 += v * (jets[i + 1].dy - jets[i].dy);
    }
    Ok(out)
}

fn check_point(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("space point must be positive and finite, got {x}")))
    }
}

fn transform_tail(kernel: &PoissonKernel, f: &dyn RadialFunction) -> TailPolicy {
    match kernel.output_tail(f) {
        // T_N annihilates constants
        TailPolicy::Constant => TailPolicy::PowerLaw(2.0 * kernel.space().lambda() + 2.0),
        other => other,
    }
}

/// `T_N f` on `grid`, summing cached semigroup samples.
pub fn apply_t_n(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    window: &IndexWindow,
    f: &dyn RadialFunction,
    grid: &Grid,
) -> Result<SampledFunction> {
    setup.check_window(window)?;
    let table = SemigroupTable::build(kernel, f, &window_times(setup, window), grid.points())?;
    apply_t_n_with(&table, setup, window, kernel, f, grid)
}

/// `T_N f` from a prebuilt table covering the window's times.
pub fn apply_t_n_with(
    table: &SemigroupTable,
    setup: &LacunarySetup,
    window: &IndexWindow,
    kernel: &PoissonKernel,
    f: &dyn RadialFunction,
    grid: &Grid,
) -> Result<SampledFunction> {
    setup.check_window(window)?;
    let values = table.terms(setup, window).iter().map(|row| row.iter().sum()).collect();
    SampledFunction::new(grid.clone(), values, transform_tail(kernel, f))
}

/// `T_N f(x) = ∫ K_N(x, y) f(y) dm(y)`, integrating the kernel directly.
pub fn apply_t_n_kernel_route(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    window: &IndexWindow,
    f: &dyn RadialFunction,
    grid: &Grid,
) -> Result<SampledFunction> {
    setup.check_window(window)?;
    let times = window_times(setup, window);
    // K_N = Σ_i c_i P_{t_i}
    let mut coeff = vec![0.0; times.len()];
    for (i, j) in window.indices().enumerate() {
        let v = setup.v(j).expect("window checked");
        coeff[i] -= v;
        coeff[i + 1] += v;
    }
    let pairs: Vec<(f64, f64)> = coeff.iter().copied().zip(times.iter().copied()).collect();
    let integ = Integrator::new(kernel.quad().y_nodes_per_panel, 2.0 * kernel.space().lambda())?;
    let (lo, hi) = f.support();
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid.points() {
        if hi <= lo {
            values.push(0.0);
            continue;
        }
        let tail = kernel.kernel_tail(&pairs, |big_x| f.tail_sup(big_x));
        let panels = kernel.y_panels(x, &times, f, false, tail)?;
        let v = integ.integrate(&panels, |y| {
            let vals: Vec<f64> = times.iter().map(|&t| kernel.value_raw(t, x, y).0).collect();
            let k: f64 = window
                .indices()
                .enumerate()
                .map(|(i, j)| setup.v(j).expect("window checked") * (vals[i + 1] - vals[i]))
                .sum();
            k * f.value(y)
        });
        values.push(v);
    }
    SampledFunction::new(grid.clone(), values, transform_tail(kernel, f))
}

/// `∫ |P_{t1}(x, y) - P_{t0}(x, y)| dm(y)`.
pub fn kernel_difference_l1(kernel: &PoissonKernel, t0: f64, t1: f64, x: f64) -> Result<f64> {
    check_point(x)?;
    if !(t0 > 0.0 && t1 > t0 && t1.is_finite()) {
        return Err(invalid(format!("times must satisfy 0 < t0 < t1, got ({t0}, {t1})")));
    }
    let one = Profile::Constant(1.0);
    let tail = kernel.kernel_tail(&[(1.0, t0), (1.0, t1)], |_| 1.0);
    let panels = kernel.y_panels(x, &[t0, t1], &one, true, tail)?;
    let integ = Integrator::new(kernel.quad().y_nodes_per_panel, 2.0 * kernel.space().lambda())?;
    Ok(integ.integrate_abs(&panels, |y| kernel.value_raw(t1, x, y).0 - kernel.value_raw(t0, x, y).0))
}

fn check_cap(setup: &LacunarySetup, cap: &TruncationLevel) -> Result<()> {
    setup.check_window(&cap.full_window()).map_err(|_| {
        Error::WindowOutOfRange { n1: -cap.m_cap(), n2: cap.m_cap(), lo: setup.j_min(), hi: setup.j_max() - 1 }
    })
}

/// `T*_M f` on `grid`: for each point the largest `|T_N f|` over windows inside `[-M, M]`.
pub fn maximal_t_star(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    cap: &TruncationLevel,
    f: &dyn RadialFunction,
    grid: &Grid,
) -> Result<SampledFunction> {
    check_cap(setup, cap)?;
    let window = cap.full_window();
    let table = SemigroupTable::build(kernel, f, &window_times(setup, &window), grid.points())?;
    maximal_t_star_with(&table, setup, cap, kernel, f, grid)
}

pub fn maximal_t_star_with(
    table: &SemigroupTable,
    setup: &LacunarySetup,
    cap: &TruncationLevel,
    kernel: &PoissonKernel,
    f: &dyn RadialFunction,
    grid: &Grid,
) -> Result<SampledFunction> {
    check_cap(setup, cap)?;
    let values = table
        .terms(setup, &cap.full_window())
        .iter()
        .map(|row| window_sup(row))
        .collect();
    SampledFunction::new(grid.clone(), values, transform_tail(kernel, f))
}

/// Radii for the supremum in the maximal functions.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusGrid {
    /// Radii `c·x` at each evaluation point `x`.
    Relative(Vec<f64>),
    Absolute(Vec<f64>),
}

impl RadiusGrid {
    /// 64 relative factors spanning `[1e-3, 1e3]`.
    pub fn default_relative() -> Self {
        Self::relative(1e-3, 1e3, 64).expect("valid default")
    }

    pub fn relative(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Ok(Self::Relative(Grid::log_spaced(lo, hi, n)?.points().to_vec()))
    }

    pub fn absolute(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Ok(Self::Absolute(Grid::log_spaced(lo, hi, n)?.points().to_vec()))
    }

    fn radii(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        let (list, scale) = match self {
            RadiusGrid::Relative(v) => (v, x),
            RadiusGrid::Absolute(v) => (v, 1.0),
        };
        list.iter().map(move |&c| c * scale)
    }

    fn len(&self) -> usize {
        match self {
            RadiusGrid::Relative(v) | RadiusGrid::Absolute(v) => v.len(),
        }
    }
}

/// `M_q f(x) = sup_r (m(I(x,r))^{-1} ∫_{I(x,r)} |f|^q dm)^{1/q}` over the radius grid.
pub fn maximal_hl(
    space: &LambdaSpace,
    f: &dyn RadialFunction,
    q: f64,
    radii: &RadiusGrid,
    points: &Grid,
    quad: &crate::kernel::QuadratureSpec,
) -> Result<SampledFunction> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("maximal exponent q must be finite and >= 1, got {q}")));
    }
    if radii.len() == 0 {
        return Err(Error::Empty("radius grid"));
    }
    let cumulative = match f.as_sampled() {
        Some(s) => Some(CumulativeMass::new(space, s, q)?),
        None => None,
    };
    let integ = Integrator::new(quad.y_nodes_per_panel, 2.0 * space.lambda())?;
    let (lo, hi) = f.support();
    let constant = f.constant_value();
    let mut values = Vec::with_capacity(points.len());
    for &x in points.points() {
        let mut best = 0.0f64;
        for r in radii.radii(x) {
            let iv = Interval::new(x, r)?;
            let avg = if let Some(c) = constant {
                c.abs().powf(q)
            } else {
                let mass = space.measure_interval(&iv);
                let integral = match &cumulative {
                    Some(cm) => cm.mass_between(iv.lo(), iv.hi()),
                    None => {
                        let (a, b) = (iv.lo().max(lo), iv.hi().min(hi));
                        if b <= a {
                            0.0
                        } else {
                            let mesh = function_mesh(f, a, b, MeshConstraints::default(), quad.panel_count)?;
                            integ.integrate(&mesh, |y| f.value(y).abs().powf(q))
                        }
                    }
                };
                integral / mass
            };
            best = best.max(avg);
        }
        values.push(best.powf(1.0 / q));
    }
    let tail = if f.tail_decay() > 0.0 {
        TailPolicy::PowerLaw(space.dimension() / q)
    } else {
        TailPolicy::Constant
    };
    SampledFunction::new(points.clone(), values, tail)
}

/// Pointwise ratio `T*_M f / (M(T_{(-M,M)} f) + M_q f)` and its supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct CotlarReport {
    pub m_cap: i64,
    pub sup_ratio: f64,
    pub argmax: f64,
    pub t_star: Vec<f64>,
    pub maximal_full: Vec<f64>,
    pub maximal_q: Vec<f64>,
    /// Points where both maximal functions vanish.
    pub guarded: usize,
}

pub fn cotlar_check(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    cap: &TruncationLevel,
    f: &dyn RadialFunction,
    q: f64,
    grid: &Grid,
    radii: &RadiusGrid,
) -> Result<CotlarReport> {
    if !(q > 1.0) {
        return Err(invalid(format!("the Cotlar estimate needs q > 1, got {q}")));
    }
    setup.require_lacunary()?;
    check_cap(setup, cap)?;
    let space = *kernel.space();
    let quad = *kernel.quad();
    let window = cap.full_window();
    let table = SemigroupTable::build(kernel, f, &window_times(setup, &window), grid.points())?;
    let t_star = maximal_t_star_with(&table, setup, cap, kernel, f, grid)?;
    let full = apply_t_n_with(&table, setup, &window, kernel, f, grid)?;
    let m_full = maximal_hl(&space, &full, 1.0, radii, grid, &quad)?;
    let m_q = maximal_hl(&space, f, q, radii, grid, &quad)?;
    let mut sup_ratio = 0.0f64;
    let mut argmax = grid.first();
    let mut guarded = 0;
    for (i, &x) in grid.points().iter().enumerate() {
        let denom = m_full.values()[i] + m_q.values()[i];
        let ts = t_star.values()[i];
        if denom == 0.0 {
            if ts != 0.0 {
                return Err(domain(format!("maximal transform {ts} at x = {x} where both maximal functions vanish")));
            }
            guarded += 1;
            continue;
        }
        let r = ts / denom;
        if r > sup_ratio {
            sup_ratio = r;
            argmax = x;
        }
    }
    Ok(CotlarReport {
        m_cap: cap.m_cap(),
        sup_ratio,
        argmax,
        t_star: t_star.values().to_vec(),
        maximal_full: m_full.values().to_vec(),
        maximal_q: m_q.values().to_vec(),
        guarded,
    })
}

/// Fitted constants of the size and smoothness estimates of `K_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnBoundReport {
    /// `sup |K_N| m(I(x, |x-y|))`
    pub size_constant: f64,
    /// `sup (|∂_x K_N| + |∂_y K_N|) m(I(x, |x-y|)) |x-y|`
    pub smoothness_constant: f64,
    /// Fits restricted to `x <= 2|x-y|` and `x > 2|x-y|`.
    pub size_near_origin: f64,
    pub size_off_origin: f64,
    pub smoothness_near_origin: f64,
    pub smoothness_off_origin: f64,
    pub points: usize,
}

pub fn verify_kn_bounds(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    window: &IndexWindow,
    sweep: &[(f64, f64)],
) -> Result<KnBoundReport> {
    if sweep.is_empty() {
        return Err(Error::Empty("sweep"));
    }
    let space = *kernel.space();
    let mut rep = KnBoundReport {
        size_constant: 0.0,
        smoothness_constant: 0.0,
        size_near_origin: 0.0,
        size_off_origin: 0.0,
        smoothness_near_origin: 0.0,
        smoothness_off_origin: 0.0,
        points: sweep.len(),
    };
    for &(x, y) in sweep {
        let dist = (x - y).abs();
        if dist == 0.0 {
            return Err(invalid("kernel bound sweeps must avoid the diagonal"));
        }
        let (k, kx, ky) = kernel_k_n_jet(kernel, setup, window, x, y)?;
        let mass = ball_mass(&space, x, dist)?;
        let size = k.abs() * mass;
        let smooth = (kx.abs() + ky.abs()) * mass * dist;
        rep.size_constant = rep.size_constant.max(size);
        rep.smoothness_constant = rep.smoothness_constant.max(smooth);
        if x <= 2.0 * dist {
            rep.size_near_origin = rep.size_near_origin.max(size);
            rep.smoothness_near_origin = rep.smoothness_near_origin.max(smooth);
        } else {
            rep.size_off_origin = rep.size_off_origin.max(size);
            rep.smoothness_off_origin = rep.smoothness_off_origin.max(smooth);
        }
    }
    Ok(rep)
}

/// Fitted constant over the sweep points that met one part's geometric constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialTailPart {
    pub fitted_constant: f64,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialTailReport {
    /// `|Σ_{j=m}^{M} ...| m(I(x, a_m))` for `|x-y| <= a_m`.
    pub upper: PartialTailPart,
    /// `|Σ_{j=-M}^{m-1} ...| m(I(x, a_k)) ρ^{k-m+1}` for `a_k <= |x-y| <= a_{k+1}`.
    pub lower: PartialTailPart,
}

pub fn verify_partial_tail_bounds(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    m: i64,
    cap: &TruncationLevel,
    k: i64,
    sweep: &[(f64, f64)],
) -> Result<PartialTailReport> {
    setup.require_regular()?;
    if k < m {
        return Err(invalid(format!("lower-part estimate needs k >= m, got k = {k}, m = {m}")));
    }
    let big_m = cap.m_cap();
    if !(-big_m < m && m <= big_m) {
        return Err(invalid(format!("m = {m} must lie in (-M, M]")));
    }
    check_cap(setup, cap)?;
    let (Some(a_m), Some(a_k), Some(a_k1)) = (setup.a(m), setup.a(k), setup.a(k + 1)) else {
        return Err(Error::WindowOutOfRange { n1: m, n2: k + 1, lo: setup.j_min(), hi: setup.j_max() });
    };
    let space = *kernel.space();
    let upper_w = if m < big_m { Some(IndexWindow::new(m, big_m)?) } else { None };
    let lower_w = if -big_m < m - 1 { Some(IndexWindow::new(-big_m, m - 1)?) } else { None };
    let partial = |w: Option<IndexWindow>, lo_j: i64, x: f64, y: f64| -> Result<f64> {
        match w {
            Some(w) => kernel_k_n(kernel, setup, &w, x, y),
            // a single term
            None => {
                let v = setup.v(lo_j).expect("checked");
                let (p1, _) = kernel.value_raw(setup.a(lo_j + 1).expect("checked"), x, y);
                let (p0, _) = kernel.value_raw(setup.a(lo_j).expect("checked"), x, y);
                Ok(v * (p1 - p0))
            }
        }
    };
    let rho = setup.rho();
    let decay = rho.powi((k - m + 1) as i32);
    let mut upper = PartialTailPart { fitted_constant: 0.0, accepted: 0, rejected: 0 };
    let mut lower = upper;
    for &(x, y) in sweep {
        check_point(x)?;
        check_point(y)?;
        let dist = (x - y).abs();
        if dist <= a_m {
            let s = partial(upper_w, m, x, y)?;
            upper.fitted_constant = upper.fitted_constant.max(s.abs() * ball_mass(&space, x, a_m)?);
            upper.accepted += 1;
        } else {
            upper.rejected += 1;
        }
        if a_k <= dist && dist <= a_k1 {
            let s = partial(lower_w, -big_m, x, y)?;
            lower.fitted_constant = lower.fitted_constant.max(s.abs() * ball_mass(&space, x, a_k)? * decay);
            lower.accepted += 1;
        } else {
            lower.rejected += 1;
        }
    }
    Ok(PartialTailReport { upper, lower })
}

/// One step `N_i -> N_{i+1}` of the convergence probe at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeStep {
    pub x: f64,
    pub from: IndexWindow,
    pub to: IndexWindow,
    pub value: f64,
    pub difference: f64,
    /// Part of the difference from the added upper indices.
    pub upper_part: f64,
    pub upper_bound: f64,
    /// Part of the difference from the added lower indices.
    pub lower_part: f64,
    pub lower_bound: f64,
    /// `a_{N₂+1}^{-(2λ+1)}` of the new window.
    pub upper_scale: f64,
    /// `a_{N₁}^{1/2}` of the new window.
    pub lower_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<ProbeStep>,
    /// Successive differences never increase at any point.
    pub monotone: bool,
    /// Every part is dominated by its bound.
    pub dominated: bool,
}

/// Tracks `T_N f(x)` along a nested window sequence and compares each increment with
/// the upper-tail bound `‖v‖∞ Σ ∫ |ΔP| |f| dm` and the lower-tail bound
/// `‖v‖∞ Σ ∫ |ΔP| |f(y) - f(x)| dm(y)`.
pub fn convergence_probe(
    kernel: &PoissonKernel,
    setup: &LacunarySetup,
    f: &Profile,
    windows: &[IndexWindow],
    points: &[f64],
) -> Result<ConvergenceReport> {
    setup.require_lacunary()?;
    if windows.len() < 2 {
        return Err(invalid("convergence probe needs at least two windows"));
    }
    for w in windows {
        setup.check_window(w)?;
    }
    for p in windows.windows(2) {
        if !(p[1].n1() <= p[0].n1() && p[1].n2() >= p[0].n2()) {
            return Err(invalid("probe windows must be nested and growing"));
        }
    }
    check_smoothness(f)?;
    let lambda = kernel.space().lambda();
    let sup_v = setup.sup_v();
    let outer = windows[windows.len() - 1];
    let times = window_times(setup, &outer);
    let table = SemigroupTable::build(kernel, f, &times, points)?;
    let integ = Integrator::new(kernel.quad().y_nodes_per_panel, 2.0 * lambda)?;
    let term = |i: usize, j: i64| {
        let v = setup.v(j).expect("checked");
        v * (table.samples(setup.a(j + 1).expect("checked"))[i] - table.samples(setup.a(j).expect("checked"))[i])
    };
    let diff_integral = |x: f64, j: i64, against_fx: bool| -> Result<f64> {
        let (t0, t1) = (setup.a(j).expect("checked"), setup.a(j + 1).expect("checked"));
        let fx = f.value(x);
        let tail = kernel.kernel_tail(&[(1.0, t0), (1.0, t1)], |_| if against_fx { fx.abs() } else { 0.0 });
        let panels = kernel.y_panels(x, &[t0, t1], f, against_fx, tail)?;
        let g = |y: f64| {
            let dp = kernel.value_raw(t1, x, y).0 - kernel.value_raw(t0, x, y).0;
            if against_fx {
                dp * (f.value(y) - fx)
            } else {
                dp * f.value(y).abs()
            }
        };
        Ok(integ.integrate_abs(&panels, g))
    };
    let mut steps = Vec::new();
    let mut monotone = true;
    let mut dominated = true;
    for (i, &x) in points.iter().enumerate() {
        let mut prev_diff = f64::INFINITY;
        for p in windows.windows(2) {
            let (from, to) = (p[0], p[1]);
            let value_from: f64 = from.indices().map(|j| term(i, j)).sum();
            let upper_part: f64 = (from.n2() + 1..=to.n2()).map(|j| term(i, j)).sum();
            let lower_part: f64 = (to.n1()..from.n1()).map(|j| term(i, j)).sum();
            let value = value_from + upper_part + lower_part;
            let mut upper_bound = 0.0;
            for j in from.n2() + 1..=to.n2() {
                upper_bound += sup_v * diff_integral(x, j, false)?;
            }
            let mut lower_bound = 0.0;
            for j in to.n1()..from.n1() {
                lower_bound += sup_v * diff_integral(x, j, true)?;
            }
            let difference = (upper_part + lower_part).abs();
            if difference > prev_diff * (1.0 + 1e-9) + 1e-15 {
                monotone = false;
            }
            prev_diff = difference;
            let slack = 1e-9;
            if upper_part.abs() > upper_bound * (1.0 + slack) + 1e-14
                || lower_part.abs() > lower_bound * (1.0 + slack) + 1e-14
            {
                dominated = false;
            }
            steps.push(ProbeStep {
                x,
                from,
                to,
                value,
                difference,
                upper_part,
                upper_bound,
                lower_part,
                lower_bound,
                upper_scale: setup.a(to.n2() + 1).expect("checked").powf(-(2.0 * lambda + 1.0)),
                lower_scale: setup.a(to.n1()).expect("checked").sqrt(),
            });
        }
    }
    Ok(ConvergenceReport { steps, monotone, dominated })
}

/// Verifies the declared Lipschitz constant on a fine sampling of the support.
fn check_smoothness(f: &Profile) -> Result<()> {
    let Some(lip) = f.lipschitz_bound() else {
        return Err(invalid("convergence probe needs a Lipschitz test function"));
    };
    let (lo, hi) = f.support();
    if hi <= lo || !hi.is_finite() {
        return Ok(());
    }
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let mut prev = f.value(lo);
    for i in 1..=n {
        let y = lo + h * i as f64;
        let v = f.value(y);
        if (v - prev).abs() > lip * h * (1.0 + 1e-6) {
            return Err(invalid(format!("test function exceeds its declared Lipschitz constant {lip} near {y}")));
        }
        prev = v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        assert!(IndexWindow::new(2, 2).is_err());
        assert_eq!(IndexWindow::new(-1, 2).unwrap().len(), 4);
        assert!(TruncationLevel::new(0).is_err());
    }

    #[test]
    fn window_sup_small_cases() {
        assert_eq!(window_sup(&[1.0]), 0.0);
        assert_eq!(window_sup(&[1.0, 2.0]), 3.0);
        // best window is the middle pair
        assert_eq!(window_sup(&[5.0, -3.0, -4.0, 6.0]), 7.0);
    }
}
