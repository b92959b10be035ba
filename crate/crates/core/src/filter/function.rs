//! The weight functions `w`, `W` and the iterated antiderivative `𝒲`.
//!
//! `w(t) = c · Π_{n≤N} sinc²(a_n t)` with `2 Σ a_n = η g`. Each factor has a
//! triangular Fourier transform supported in `[−2a_n, 2a_n]`, so `ŵ` is
//! supported in `[−ηg, ηg]`. `W(t) = ∫_t^∞ w` for `t > 0`, extended oddly,
//! and `𝒲(u) = ∫_u^∞ W = ∫_u^∞ (t − u) w(t) dt` for `u ≥ 0`.

use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::quadrature::{NodeTable, MAX_LEVEL, MIN_LEVEL};
use crate::error::{Error, Result};

/// Gauss–Legendre nodes per panel.
pub const NODES_PER_PANEL: usize = 24;

/// Panels of the reference table behind `eval_W` and `𝒲`.
const REF_PANELS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    /// Declared spectral gap `g₀`.
    pub gap: f64,
    /// Truncation order `N`.
    pub order: usize,
    /// Frequency budget `η`.
    pub eta: f64,
    /// Target for the neglected tail mass `∫_{|t|>T} w`.
    pub tol: f64,
    /// Use `g = min(g₀, 1)`. With `false` the declared gap is used as is.
    pub clamp: bool,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            gap: 1.0,
            order: 6,
            eta: 0.9,
            tol: 1e-8,
            clamp: true,
        }
    }
}

impl FilterParams {
    pub fn with_gap(gap: f64) -> Self {
        FilterParams {
            gap,
            ..Default::default()
        }
    }

    /// The gap the filter is built for.
    pub fn effective_gap(&self) -> f64 {
        if self.clamp {
            self.gap.min(1.0)
        } else {
            self.gap
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::InvalidFilter(format!("gap must be positive, got {}", self.gap)));
        }
        if self.order < 2 {
            return Err(Error::InvalidFilter(format!(
                "order must be at least 2, got {}",
                self.order
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidFilter(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidFilter(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// An immutable filter. Cloning is cheap; node tables are built lazily and
/// shared between clones.
#[derive(Clone)]
pub struct FilterFunction {
    inner: Arc<Inner>,
}

struct Inner {
    params: FilterParams,
    gap: f64,
    coeffs: Vec<f64>,
    norm: f64,
    cutoff: f64,
    /// `∫_T^∞ w` from the tail model.
    tail0: f64,
    rule: Vec<(f64, f64)>,
    edges: Vec<f64>,
    /// `suffix0[j] = ∫_{edges[j]}^∞ w`, same for `t w` in `suffix1`.
    suffix0: Vec<f64>,
    suffix1: Vec<f64>,
    tables: Vec<OnceLock<NodeTable>>,
}

impl std::fmt::Debug for FilterFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterFunction")
            .field("gap", &self.inner.gap)
            .field("order", &self.inner.params.order)
            .field("eta", &self.inner.params.eta)
            .field("cutoff", &self.inner.cutoff)
            .finish()
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

fn gl_rule() -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(NODES_PER_PANEL).expect("nonzero");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

fn gl_integrate(rule: &[(f64, f64)], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.iter().map(|&(x, wt)| wt * f(mid + half * x)).sum::<f64>() * half
}

/// Build the filter. `T` is chosen from the rigorous bound
/// `∫_T^∞ w ≤ c / (Π a_n² (2N−1) T^{2N−1})` with an upper bound for `c`.
pub fn build_filter(params: FilterParams) -> Result<FilterFunction> {
    params.validate()?;
    let n = params.order;
    let g = params.effective_gap();
    let zeta: f64 = (1..=n).map(|k| 1.0 / (k * k) as f64).sum();
    let coeffs: Vec<f64> = (1..=n).map(|k| 0.5 * params.eta * g / zeta / (k * k) as f64).collect();
    let profile = |t: f64| coeffs.iter().map(|a| sinc(a * t).powi(2)).product::<f64>();
    let rule = gl_rule();

    // any partial integral bounds c from above
    let first_zero = std::f64::consts::PI / coeffs[0];
    let partial: f64 = (0..16)
        .map(|j| {
            let h = first_zero / 16.0;
            gl_integrate(&rule, j as f64 * h, (j + 1) as f64 * h, profile)
        })
        .sum();
    let c_upper = 0.5 / partial;
    let prod: f64 = coeffs.iter().map(|a| a * a).product();
    let order = (2 * n - 1) as f64;
    let cutoff = (2.0 * c_upper / (prod * order * params.tol)).powf(1.0 / order);
    if !cutoff.is_finite() || coeffs[0] * cutoff / REF_PANELS as f64 > 2.0 {
        return Err(Error::InvalidFilter(format!(
            "tolerance {} needs a cutoff beyond what {} panels resolve",
            params.tol, REF_PANELS
        )));
    }

    let edges: Vec<f64> = (0..=REF_PANELS)
        .map(|j| cutoff * j as f64 / REF_PANELS as f64)
        .collect();
    let panel0: Vec<f64> = edges
        .windows(2)
        .map(|e| gl_integrate(&rule, e[0], e[1], profile))
        .collect();
    let panel1: Vec<f64> = edges
        .windows(2)
        .map(|e| gl_integrate(&rule, e[0], e[1], |t| t * profile(t)))
        .collect();
    // sin² averages to 1/2 per factor beyond the cutoff
    let damp = 0.5f64.powi(n as i32);
    let tail0_p = damp / (prod * order * cutoff.powf(order));
    let tail1_p = damp / (prod * (order - 1.0) * cutoff.powf(order - 1.0));
    let bulk: f64 = panel0.iter().sum();
    let norm = 0.5 / (bulk + tail0_p);

    let mut suffix0 = vec![0.0; REF_PANELS + 1];
    let mut suffix1 = vec![0.0; REF_PANELS + 1];
    suffix0[REF_PANELS] = norm * tail0_p;
    suffix1[REF_PANELS] = norm * tail1_p;
    for j in (0..REF_PANELS).rev() {
        suffix0[j] = suffix0[j + 1] + norm * panel0[j];
        suffix1[j] = suffix1[j + 1] + norm * panel1[j];
    }

    Ok(FilterFunction {
        inner: Arc::new(Inner {
            params,
            gap: g,
            coeffs,
            norm,
            cutoff,
            tail0: norm * tail0_p,
            rule,
            edges,
            suffix0,
            suffix1,
            tables: (MIN_LEVEL..=MAX_LEVEL).map(|_| OnceLock::new()).collect(),
        }),
    })
}

impl FilterFunction {
    pub fn params(&self) -> FilterParams {
        self.inner.params
    }

    /// The gap `g` the filter is built for (after clamping).
    pub fn gap(&self) -> f64 {
        self.inner.gap
    }

    pub fn order(&self) -> usize {
        self.inner.params.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.inner.coeffs
    }

    /// Normalization constant `c`.
    pub fn norm_constant(&self) -> f64 {
        self.inner.norm
    }

    /// Time cutoff `T`.
    pub fn cutoff(&self) -> f64 {
        self.inner.cutoff
    }

    /// Half-width of the Fourier support, `2 Σ a_n = η g`.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.inner.coeffs.iter().sum::<f64>()
    }

    /// Tail-model mass `∫_T^∞ w`.
    pub fn tail_mass(&self) -> f64 {
        self.inner.tail0
    }

    pub fn eval_w(&self, t: f64) -> f64 {
        self.inner.norm * self.inner.coeffs.iter().map(|a| sinc(a * t).powi(2)).product::<f64>()
    }

    /// `c / (Π a_n² t^{2N})`, an upper bound for `|w(t)|`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let prod: f64 = self.inner.coeffs.iter().map(|a| a * a).product();
        self.inner.norm / (prod * t.abs().powi(2 * self.order() as i32))
    }

    fn check_window(&self, t: f64) -> Result<()> {
        if t.abs() > self.inner.cutoff || t.is_nan() {
            return Err(Error::OutsideFilterWindow {
                t,
                cutoff: self.inner.cutoff,
            });
        }
        Ok(())
    }

    /// `(∫_t^∞ w, ∫_t^∞ s w(s) ds)` for `0 ≤ t ≤ T`.
    fn moments(&self, t: f64) -> (f64, f64) {
        let inner = &*self.inner;
        let h = inner.cutoff / REF_PANELS as f64;
        let j = ((t / h).floor() as usize).min(REF_PANELS - 1);
        let b = inner.edges[j + 1];
        let m0 = gl_integrate(&inner.rule, t, b, |s| self.eval_w(s));
        let m1 = gl_integrate(&inner.rule, t, b, |s| s * self.eval_w(s));
        (m0 + inner.suffix0[j + 1], m1 + inner.suffix1[j + 1])
    }

    /// `W(t)`; at `t = 0` the right limit `1/2` is returned.
    #[allow(non_snake_case)]
    pub fn eval_W(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        if t == 0.0 {
            // right limit, exact by normalization
            return Ok(0.5);
        }
        let value = self.moments(t.abs()).0;
        Ok(if t < 0.0 { -value } else { value })
    }

    /// `𝒲(|u|) = ∫_{|u|}^∞ W`.
    pub fn eval_iterated(&self, u: f64) -> Result<f64> {
        self.check_window(u)?;
        let u = u.abs();
        let (m0, m1) = self.moments(u);
        Ok(m1 - u * m0)
    }

    /// Node table with `2^level` panels on `[0, T]`.
    pub(crate) fn table(&self, level: u32) -> &NodeTable {
        let idx = (level - MIN_LEVEL) as usize;
        self.inner.tables[idx].get_or_init(|| NodeTable::build(self, level, &self.inner.rule))
    }

    /// `|∫_{−T}^{T} w − 1|` on the finest node table.
    pub fn normalization_residual(&self) -> f64 {
        let table = self.table(MAX_LEVEL);
        let total: f64 = table.weights.iter().zip(&table.w).map(|(wt, w)| 2.0 * wt * w).sum();
        (total - 1.0).abs()
    }

    /// `max |W(t) + W(−t)|` over the finest symmetric node grid.
    pub fn oddness_defect(&self) -> f64 {
        self.table(MAX_LEVEL)
            .nodes
            .iter()
            .map(|&t| match (self.eval_W(t), self.eval_W(-t)) {
                (Ok(a), Ok(b)) => (a + b).abs(),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Log–log slope of the envelope of `|w|` on `[lo, hi]`: the window is
    /// cut into 16 geometric bins, the maximum of each bin is taken on a
    /// fine grid and a line is fitted through the bin maxima.
    pub fn decay_slope(&self, lo: f64, hi: f64) -> f64 {
        let bins = 16;
        let samples = 512;
        let ratio = (hi / lo).powf(1.0 / bins as f64);
        let pts: Vec<(f64, f64)> = (0..bins)
            .map(|b| {
                let a = lo * ratio.powi(b);
                let step = (ratio - 1.0) * a / samples as f64;
                (0..samples)
                    .map(|i| a + i as f64 * step)
                    .map(|t| (t, self.eval_w(t).abs()))
                    .max_by(|x, y| x.1.total_cmp(&y.1))
                    .expect("nonempty bin")
            })
            .map(|(t, v)| (t.ln(), v.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// [`Self::decay_slope`] on `[T/4, T]`.
    pub fn decay_order(&self) -> f64 {
        self.decay_slope(self.cutoff() / 4.0, self.cutoff())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        for p in [
            FilterParams {
                gap: 0.0,
                ..Default::default()
            },
            FilterParams {
                order: 1,
                ..Default::default()
            },
            FilterParams {
                eta: 1.5,
                ..Default::default()
            },
            FilterParams {
                tol: 0.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(build_filter(p), Err(Error::InvalidFilter(_))));
        }
    }

    #[test]
    fn budget_and_clamp() {
        let f = build_filter(FilterParams::with_gap(2.5)).unwrap();
        assert_eq!(f.gap(), 1.0);
        assert!((f.support_radius() - 0.9).abs() < 1e-14);
        let f = build_filter(FilterParams {
            gap: 2.5,
            clamp: false,
            ..Default::default()
        })
        .unwrap();
        assert!((f.support_radius() - 0.9 * 2.5).abs() < 1e-14);
    }

    #[test]
    fn big_w_endpoints() {
        let f = build_filter(FilterParams::default()).unwrap();
        assert!((f.eval_W(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(f.eval_W(f.cutoff()).unwrap() <= 1e-8);
        assert!(f.eval_W(f.cutoff() * 1.01).is_err());
    }
}
