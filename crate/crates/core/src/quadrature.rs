//! Gauss rules, a process-wide rule cache, and panel meshes for the radial integrals.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

/// Gauss rule for the weight (1-s)^alpha (1+s)^beta on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl GaussRule {
    /// Gauss-Jacobi rule computed with the Golub-Welsch eigenvalue method.
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Gauss rule needs at least one node"));
        }
        if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(invalid(format!(
                "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
            )));
        }
        let ab = alpha + beta;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let k = i as f64;
            let denom = 2.0 * k + ab;
            m[(i, i)] = if i == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (denom * (denom + 2.0))
            };
            if i + 1 < n {
                let k1 = k + 1.0;
                let d1 = 2.0 * k1 + ab;
                let b2 = if i == 0 {
                    4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + ab)
                        / (d1 * d1 * (d1 + 1.0) * (d1 - 1.0))
                };
                let b = b2.sqrt();
                m[(i, i + 1)] = b;
                m[(i + 1, i)] = b;
            }
        }
        let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + libm::lgamma(alpha + 1.0)
            + libm::lgamma(beta + 1.0)
            - libm::lgamma(ab + 2.0);
        let mu0 = ln_mu0.exp();
        let eig = SymmetricEigen::new(m);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            alpha,
            beta,
        })
    }

    pub fn legendre(n: usize) -> Result<Self> {
        Self::jacobi(n, 0.0, 0.0)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

type RuleKey = (usize, u64, u64);

static RULE_CACHE: LazyLock<Mutex<HashMap<RuleKey, Arc<GaussRule>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Cached Gauss-Jacobi rule. Rules are computed once per (n, alpha, beta).
pub fn cached_rule(n: usize, alpha: f64, beta: f64) -> Result<Arc<GaussRule>> {
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = RULE_CACHE.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(GaussRule::jacobi(n, alpha, beta)?);
    let mut cache = RULE_CACHE.lock().expect("rule cache poisoned");
    Ok(Arc::clone(cache.entry(key).or_insert(rule)))
}

/// Complex singularity of an integrand, used to size panels around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub re: f64,
    pub im: f64,
}

/// Region `[lo, hi]` where panels may not be wider than `max_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub lo: f64,
    pub hi: f64,
    pub max_width: f64,
}

/// Ratio of panel half-width to distance from the panel midpoint to the nearest pole.
pub const POLE_RATIO: f64 = 0.5;

const MAX_PANELS: usize = 2_000_000;

#[derive(Debug, Clone, Default)]
pub struct MeshConstraints {
    pub poles: Vec<Pole>,
    pub features: Vec<Feature>,
    /// Global panel width limit. Zero or non-finite means no limit.
    pub max_width: f64,
}

impl MeshConstraints {
    fn accepts(&self, lo: f64, hi: f64) -> bool {
        let h = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        if h <= 1e-15 * mid.abs().max(1e-300) {
            return true;
        }
        if self.max_width > 0.0 && self.max_width.is_finite() && hi - lo > self.max_width {
            return false;
        }
        for f in &self.features {
            if lo < f.hi && hi > f.lo && hi - lo > f.max_width {
                return false;
            }
        }
        for p in &self.poles {
            let dist = (mid - p.re).hypot(p.im);
            if h > POLE_RATIO * dist {
                return false;
            }
        }
        true
    }
}

/// Splits each piece `[breaks[i], breaks[i+1]]` by bisection until every panel
/// satisfies the constraints. `breaks` must be sorted; duplicates are dropped.
pub fn build_mesh(breaks: &[f64], constraints: &MeshConstraints) -> Result<Vec<(f64, f64)>> {
    let mut panels = Vec::new();
    let mut stack = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(invalid("mesh breakpoints must be finite"));
        }
        if hi < lo {
            return Err(invalid("mesh breakpoints must be sorted"));
        }
        if hi == lo {
            continue;
        }
        stack.push((lo, hi));
        while let Some((a, b)) = stack.pop() {
            if constraints.accepts(a, b) {
                panels.push((a, b));
                if panels.len() > MAX_PANELS {
                    return Err(invalid("panel mesh exceeds the size limit"));
                }
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b));
                stack.push((a, m));
            }
        }
    }
    Ok(panels)
}

/// Sorted, deduplicated breakpoints restricted to `[lo, hi]`, always containing both ends.
pub fn clip_breaks(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut b: Vec<f64> = std::iter::once(lo)
        .chain(interior.into_iter().filter(|&p| p > lo && p < hi))
        .chain(std::iter::once(hi))
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Composite Gauss integrator for `∫ y^e g(y) dy` over a panel mesh.
///
/// Panels starting at zero use the Jacobi rule carrying the weight `y^e`, so `g` only
/// needs to be smooth there.
#[derive(Debug, Clone)]
pub struct Integrator {
    legendre: Arc<GaussRule>,
    head: Arc<GaussRule>,
    exponent: f64,
}

impl Integrator {
    pub fn new(nodes: usize, exponent: f64) -> Result<Self> {
        if !(exponent > -1.0) {
            return Err(invalid(format!("weight exponent {exponent} must exceed -1")));
        }
        Ok(Self {
            legendre: cached_rule(nodes, 0.0, 0.0)?,
            head: cached_rule(nodes, 0.0, exponent)?,
            exponent,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `∫_lo^hi y^e g(y) dy` on one panel.
    pub fn panel(&self, lo: f64, hi: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        if lo == 0.0 && self.exponent != 0.0 {
            let scale = half.powf(self.exponent + 1.0);
            let mut s = 0.0;
            for (xi, w) in self.head.iter() {
                s += w * g(half * (1.0 + xi));
            }
            scale * s
        } else {
            let mid = 0.5 * (hi + lo);
            let mut s = 0.0;
            for (xi, w) in self.legendre.iter() {
                let y = mid + half * xi;
                s += w * y.powf(self.exponent) * g(y);
            }
            half * s
        }
    }

    pub fn integrate(&self, panels: &[(f64, f64)], mut g: impl FnMut(f64) -> f64) -> f64 {
        panels.iter().map(|&(a, b)| self.panel(a, b, &mut g)).sum()
    }

    /// `∫ y^e |g(y)| dy`, splitting panels at sign changes of `g` so the kink is
    /// integrated exactly.
    pub fn integrate_abs(&self, panels: &[(f64, f64)], mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        let mut cuts: Vec<f64> = Vec::new();
        for &(a, b) in panels {
            cuts.clear();
            cuts.push(a);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            let mut prev_y = a;
            let mut prev_g = g(a);
            let probes = self
                .legendre
                .nodes()
                .iter()
                .map(|&xi| mid + half * xi)
                .chain(std::iter::once(b));
            for y in probes {
                let gy = g(y);
                if prev_g != 0.0 && gy != 0.0 && (prev_g < 0.0) != (gy < 0.0) {
                    cuts.push(bisect_root(&mut g, prev_y, y, prev_g));
                }
                prev_y = y;
                prev_g = gy;
            }
            cuts.push(b);
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    total += self.panel(w[0], w[1], |y| g(y).abs());
                }
            }
        }
        total
    }
}

fn bisect_root(g: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
    let neg = g_lo < 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
