//! Lacunary sequences with coefficients, and the refinement that forces every
//! consecutive ratio into `[ρ, ρ²]` while keeping the partial sums unchanged.

use crate::error::{invalid, Error, Result};
use crate::transform::IndexWindow;

/// Slack used in the `ratio <= ρ²` tests of the refinement.
pub const RATIO_SLACK: f64 = 1e-12;

/// Times `a_j` for `j` in `[j_min, j_max]` and coefficients `v_j` for `j` in
/// `[j_min, j_max - 1]`, so every coefficient has both of its times stored.
#[derive(Debug, Clone, PartialEq)]
pub struct LacunarySetup {
    j_min: i64,
    a: Vec<f64>,
    v: Vec<f64>,
    rho: f64,
}

/// Result of a lacunarity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LacunarityCheck {
    pub lacunary: bool,
    pub min_ratio: f64,
    /// Whether every ratio also lies below `ρ²`.
    pub regular: bool,
}

/// Checks `a_{j+1}/a_j >= ρ` on a raw sequence.
pub fn check_lacunary(a: &[f64], rho: f64) -> Result<LacunarityCheck> {
    if a.len() < 2 {
        return Err(invalid("lacunarity needs at least two terms"));
    }
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for (i, w) in a.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NotIncreasing(i as i64 + 1));
        }
        let r = w[1] / w[0];
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    Ok(LacunarityCheck {
        lacunary: min_ratio >= rho,
        min_ratio,
        regular: min_ratio >= rho && max_ratio <= rho * rho + RATIO_SLACK,
    })
}

impl LacunarySetup {
    pub fn new(j_min: i64, a: Vec<f64>, v: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 1.0 && rho.is_finite()) {
            return Err(invalid(format!("rho must exceed 1, got {rho}")));
        }
        if a.len() < 2 {
            return Err(invalid("sequence needs at least two terms"));
        }
        if v.len() + 1 != a.len() {
            return Err(invalid(format!(
                "{} coefficients for {} times; expected one fewer coefficient than times",
                v.len(),
                a.len()
            )));
        }
        for (i, &x) in a.iter().enumerate() {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(format!("time a_{} = {x} must be positive and finite", j_min + i as i64)));
            }
            if i > 0 && x <= a[i - 1] {
                return Err(Error::NotIncreasing(j_min + i as i64));
            }
        }
        if let Some(i) = v.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { j_min, a, v, rho })
    }

    /// `a_j = first * ratio^(j - j_min)` for `count` terms, coefficients from `coeff(j)`.
    pub fn geometric(
        j_min: i64,
        first: f64,
        ratio: f64,
        count: usize,
        rho: f64,
        coeff: impl Fn(i64) -> f64,
    ) -> Result<Self> {
        if count < 2 {
            return Err(invalid("geometric sequence needs at least two terms"));
        }
        let a = (0..count).map(|i| first * ratio.powi(i as i32)).collect();
        let v = (0..count - 1).map(|i| coeff(j_min + i as i64)).collect();
        Self::new(j_min, a, v, rho)
    }

    pub fn j_min(&self) -> i64 {
        self.j_min
    }

    /// Index of the last stored time.
    pub fn j_max(&self) -> i64 {
        self.j_min + self.a.len() as i64 - 1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn times(&self) -> &[f64] {
        &self.a
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.v
    }

    pub fn a(&self, j: i64) -> Option<f64> {
        usize::try_from(j - self.j_min).ok().and_then(|i| self.a.get(i).copied())
    }

    pub fn v(&self, j: i64) -> Option<f64> {
        usize::try_from(j - self.j_min).ok().and_then(|i| self.v.get(i).copied())
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn check(&self) -> LacunarityCheck {
        check_lacunary(&self.a, self.rho).expect("validated on construction")
    }

    pub fn require_lacunary(&self) -> Result<()> {
        let c = self.check();
        if c.lacunary {
            Ok(())
        } else {
            Err(Error::NotLacunary { rho: self.rho, min_ratio: c.min_ratio })
        }
    }

    /// Requires every consecutive ratio in `[ρ, ρ²]`.
    pub fn require_regular(&self) -> Result<()> {
        let c = self.check();
        if c.regular {
            Ok(())
        } else {
            Err(Error::NotLacunary { rho: self.rho, min_ratio: c.min_ratio })
        }
    }

    /// Checks that the window only uses stored coefficients.
    pub fn check_window(&self, n: &IndexWindow) -> Result<()> {
        let hi = self.j_max() - 1;
        if n.n1() < self.j_min || n.n2() > hi {
            return Err(Error::WindowOutOfRange { n1: n.n1(), n2: n.n2(), lo: self.j_min, hi });
        }
        Ok(())
    }

    /// Same times with different coefficients.
    pub fn with_coefficients(&self, v: Vec<f64>) -> Result<Self> {
        Self::new(self.j_min, self.a.clone(), v, self.rho)
    }
}

/// Output of [`refine`]: the refined setup and, for every original coefficient
/// index `j`, the block `J(j)` of refined indices that carry `v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedSetup {
    refined: LacunarySetup,
    original_j_min: i64,
    blocks: Vec<(i64, i64)>,
}

impl RefinedSetup {
    pub fn setup(&self) -> &LacunarySetup {
        &self.refined
    }

    pub fn eta(&self) -> &[f64] {
        self.refined.times()
    }

    pub fn omega(&self) -> &[f64] {
        self.refined.coefficients()
    }

    /// Refined indices carrying the original coefficient `v_j`.
    pub fn block(&self, j: i64) -> Option<std::ops::RangeInclusive<i64>> {
        let i = usize::try_from(j - self.original_j_min).ok()?;
        self.blocks.get(i).map(|&(a, b)| a..=b)
    }

    pub fn inserted(&self) -> usize {
        self.refined.times().len() - self.blocks.len() - 1
    }

    /// Window `N'` of the refined setup whose partial sum equals the original `N`:
    /// it starts at the refined index of `a_{N₁}` and ends just before `a_{N₂+1}`.
    pub fn remap_window(&self, n: &IndexWindow) -> Result<IndexWindow> {
        let lo = self.original_j_min;
        let hi = lo + self.blocks.len() as i64 - 1;
        let (Some(first), Some(last)) = (self.block(n.n1()), self.block(n.n2())) else {
            return Err(Error::WindowOutOfRange { n1: n.n1(), n2: n.n2(), lo, hi });
        };
        IndexWindow::new(*first.start(), *last.end())
    }
}

/// Inserts geometric points so that every consecutive ratio lies in `[ρ, ρ²]`.
///
/// Between `a_j` and `a_{j+1}` the points `a_j ρ^m` are inserted while
/// `a_{j+1} / (a_j ρ^{m-1}) > ρ²`. Gaps below the anchor index (zero when stored,
/// else the nearest stored index) are filled from the upper end by division.
/// The anchor keeps its index.
pub fn refine(setup: &LacunarySetup) -> Result<RefinedSetup> {
    setup.require_lacunary()?;
    let rho = setup.rho();
    let rho2 = rho * rho + RATIO_SLACK;
    let a = setup.times();
    let anchor = 0i64.clamp(setup.j_min(), setup.j_max());
    let anchor_pos = (anchor - setup.j_min()) as usize;

    // points strictly inside each gap, ascending
    let mut gaps: Vec<Vec<f64>> = Vec::with_capacity(a.len() - 1);
    for (i, w) in a.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let mut inside = Vec::new();
        if i >= anchor_pos {
            let mut m = 0;
            while hi / (lo * rho.powi(m)) > rho2 {
                m += 1;
                inside.push(lo * rho.powi(m));
            }
        } else {
            let mut m = 0;
            while hi / rho.powi(m) / lo > rho2 {
                m += 1;
                inside.push(hi / rho.powi(m));
            }
            inside.reverse();
        }
        gaps.push(inside);
    }

    let below: usize = gaps[..anchor_pos].iter().map(Vec::len).sum();
    let eta_min = setup.j_min() - below as i64;
    let mut eta = Vec::new();
    let mut omega = Vec::new();
    let mut blocks = Vec::with_capacity(gaps.len());
    for (i, inside) in gaps.iter().enumerate() {
        let start = eta_min + eta.len() as i64;
        eta.push(a[i]);
        eta.extend_from_slice(inside);
        let end = eta_min + eta.len() as i64 - 1;
        omega.extend(std::iter::repeat_n(setup.coefficients()[i], inside.len() + 1));
        blocks.push((start, end));
    }
    eta.push(a[a.len() - 1]);
    let refined = LacunarySetup::new(eta_min, eta, omega, rho)?;
    Ok(RefinedSetup { refined, original_j_min: setup.j_min(), blocks })
}
