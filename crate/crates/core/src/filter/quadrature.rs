//! Symmetric Gauss–Legendre panel quadrature against `w`, `W` and `𝒲`.
//!
//! Nodes live on the half line `[0, T]`; the negative half reuses them with
//! `t ↦ −t`, so even and odd weights keep their symmetry exactly:
//! `∫ w f = Σ ω_k w_k (f(t_k) + f(−t_k))` and
//! `∫ W f = Σ ω_k W_k (f(t_k) − f(−t_k))`.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{c64, Accum, Mat, MatRef};
use serde::Serialize;

use super::function::{FilterFunction, NODES_PER_PANEL};
use crate::car::max_abs;
use crate::dynamics::SpectralData;
use crate::error::{Error, Result};
use crate::par;

/// `2^MIN_LEVEL` panels is the coarsest table.
pub const MIN_LEVEL: u32 = 5;
/// Panel cap `2^MAX_LEVEL = 1024`.
pub const MAX_LEVEL: u32 = 10;
/// Max-norm change between successive levels that counts as converged.
pub const QUAD_TOL: f64 = 1e-8;
/// Largest phase `ω_max h` accepted across one panel.
const MAX_PANEL_PHASE: f64 = 24.0;
/// Nodes per block in the transfer-matrix products.
const CHUNK: usize = 2048;

/// Which weight a kernel is integrated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weight {
    /// The even density `w`.
    Density,
    /// The odd function `W`.
    Odd,
    /// The even function `𝒲(|u|)`.
    Iterated,
}

impl Weight {
    fn sign(self) -> f64 {
        match self {
            Weight::Odd => -1.0,
            _ => 1.0,
        }
    }
}

/// Half-line nodes with the weight values at each node.
#[derive(Clone, Debug)]
pub struct NodeTable {
    pub panels: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub w: Vec<f64>,
    pub big_w: Vec<f64>,
    pub iterated: Vec<f64>,
}

impl NodeTable {
    pub(crate) fn build(filter: &FilterFunction, level: u32, rule: &[(f64, f64)]) -> Self {
        let panels = 1usize << level;
        let h = filter.cutoff() / panels as f64;
        let mut nodes = Vec::with_capacity(panels * rule.len());
        let mut weights = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(x, wt) in rule {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * wt);
            }
        }
        let w = nodes.iter().map(|&t| filter.eval_w(t)).collect();
        let big_w = par::map_slice(&nodes, |&t| filter.eval_W(t).expect("node inside window"));
        let iterated = par::map_slice(&nodes, |&t| filter.eval_iterated(t).expect("node inside window"));
        NodeTable {
            panels,
            nodes,
            weights,
            w,
            big_w,
            iterated,
        }
    }

    /// Combined coefficients `ω_k · weight(t_k)`.
    pub fn coefficients(&self, weight: Weight) -> Vec<f64> {
        let values = match weight {
            Weight::Density => &self.w,
            Weight::Odd => &self.big_w,
            Weight::Iterated => &self.iterated,
        };
        self.weights.iter().zip(values).map(|(a, b)| a * b).collect()
    }
}

/// Result of an adaptive quadrature.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub value: Mat<c64>,
    pub panels: usize,
    /// Max-norm change against the previous level.
    pub change: f64,
}

/// Coarsest level whose panels keep `ω_max h ≤ 24`.
pub fn start_level(filter: &FilterFunction, omega_max: f64) -> Result<u32> {
    let needed = omega_max * filter.cutoff() / MAX_PANEL_PHASE;
    let mut level = MIN_LEVEL;
    while ((1usize << level) as f64) < needed {
        level += 1;
        if level > MAX_LEVEL {
            return Err(Error::QuadratureCap {
                max_panels: 1 << MAX_LEVEL,
                last_change: f64::INFINITY,
            });
        }
    }
    Ok(level)
}

/// `∫ weight(t) K(t) dt` for an operator-valued kernel bounded on `[−T, T]`.
///
/// Starts at `start` (or [`MIN_LEVEL`]) and doubles the panel count until the
/// max-norm change drops below [`QUAD_TOL`]; returns the finer result.
/// Panels are summed in index order whatever the scheduling.
pub fn quad_against<K>(filter: &FilterFunction, kernel: K, weight: Weight, start: Option<u32>) -> Result<Quadrature>
where
    K: Fn(f64) -> Result<Mat<c64>> + Sync + Send,
{
    let mut level = start.unwrap_or(MIN_LEVEL).max(MIN_LEVEL);
    if level >= MAX_LEVEL {
        return Err(Error::QuadratureCap {
            max_panels: 1 << MAX_LEVEL,
            last_change: f64::INFINITY,
        });
    }
    let mut prev = quad_level(filter, &kernel, weight, level)?;
    let mut last_change = f64::INFINITY;
    while level < MAX_LEVEL {
        level += 1;
        let next = quad_level(filter, &kernel, weight, level)?;
        let change = max_abs((&next - &prev).as_ref());
        if change < QUAD_TOL {
            return Ok(Quadrature {
                value: next,
                panels: 1 << level,
                change,
            });
        }
        prev = next;
        last_change = change;
    }
    Err(Error::QuadratureCap {
        max_panels: 1 << MAX_LEVEL,
        last_change,
    })
}

fn quad_level<K>(filter: &FilterFunction, kernel: &K, weight: Weight, level: u32) -> Result<Mat<c64>>
where
    K: Fn(f64) -> Result<Mat<c64>> + Sync + Send,
{
    let table = filter.table(level);
    let coeffs = table.coefficients(weight);
    let sign = weight.sign();
    let partials = par::try_map_range(table.panels, |p| -> Result<Option<Mat<c64>>> {
        let mut acc: Option<Mat<c64>> = None;
        let range = p * NODES_PER_PANEL..(p + 1) * NODES_PER_PANEL;
        for (&t, &c) in table.nodes[range.clone()].iter().zip(&coeffs[range]) {
            let (plus, minus) = (kernel(t)?, kernel(-t)?);
            let a = acc.get_or_insert_with(|| Mat::zeros(plus.nrows(), plus.ncols()));
            for j in 0..plus.ncols() {
                for i in 0..plus.nrows() {
                    a[(i, j)] += (plus[(i, j)] + minus[(i, j)] * sign) * c;
                }
            }
        }
        Ok(acc)
    })?;
    let mut total: Option<Mat<c64>> = None;
    for part in partials.into_iter().flatten() {
        total = Some(match total {
            Some(a) => a + part,
            None => part,
        });
    }
    Ok(total.expect("at least one panel"))
}

/// Eigenbasis multipliers `M_ij = ∫ weight(t) e^{i(E_i − E_j)t} dt`, so that
/// `∫ weight(t) e^{itH} A e^{−itH} dt = V (M ∘ V^* A V) V^*`.
#[derive(Clone, Debug)]
pub struct Transfer {
    pub matrix: Mat<c64>,
    pub weight: Weight,
    pub panels: usize,
    pub change: f64,
}

impl Transfer {
    /// Apply to `A` given in the site basis.
    pub fn apply(&self, spec: &SpectralData, a: MatRef<'_, c64>) -> Mat<c64> {
        let b = spec.to_eigenbasis(a);
        let n = b.nrows();
        let m = &self.matrix;
        let scaled = Mat::from_fn(n, n, |i, j| b[(i, j)] * m[(i, j)]);
        spec.from_eigenbasis(scaled.as_ref())
    }

    /// Apply to an operator already in the eigenbasis.
    pub fn apply_eigen(&self, b: MatRef<'_, c64>) -> Mat<c64> {
        let m = &self.matrix;
        Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * m[(i, j)])
    }
}

/// Adaptive transfer matrix. `extra_levels` shifts the starting level up,
/// which is how convergence studies double the panels.
pub fn transfer_matrix(
    filter: &FilterFunction,
    energies: &[f64],
    weight: Weight,
    extra_levels: u32,
) -> Result<Transfer> {
    let (lo, hi) = energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
    let mut level = start_level(filter, hi - lo)? + extra_levels;
    if level >= MAX_LEVEL {
        return Err(Error::QuadratureCap {
            max_panels: 1 << MAX_LEVEL,
            last_change: f64::INFINITY,
        });
    }
    let center = 0.5 * (lo + hi);
    let shifted: Vec<f64> = energies.iter().map(|e| e - center).collect();
    let mut prev = transfer_level(filter.table(level), &shifted, weight);
    let mut last_change = f64::INFINITY;
    while level < MAX_LEVEL {
        level += 1;
        let next = transfer_level(filter.table(level), &shifted, weight);
        let change = max_abs((&next - &prev).as_ref());
        if change < QUAD_TOL * max_abs(next.as_ref()).max(1.0) {
            return Ok(Transfer {
                matrix: next,
                weight,
                panels: 1 << level,
                change,
            });
        }
        prev = next;
        last_change = change;
    }
    Err(Error::QuadratureCap {
        max_panels: 1 << MAX_LEVEL,
        last_change,
    })
}

/// `G = Σ_k c_k e^{i ω t_k}` through real block products
/// `Re G = [C∘c | S∘c] [C | S]^T` and `Im G = [S∘c | −C∘c] [C | S]^T`.
fn transfer_level(table: &NodeTable, energies: &[f64], weight: Weight) -> Mat<c64> {
    let n = energies.len();
    let coeffs = table.coefficients(weight);
    let odd = weight == Weight::Odd;
    let mut acc = Mat::<f64>::zeros(n, n);
    let width = CHUNK.min(coeffs.len());
    let mut left_buf = Mat::<f64>::zeros(n, 2 * width);
    let mut right_buf = Mat::<f64>::zeros(n, 2 * width);
    for start in (0..coeffs.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(coeffs.len());
        let m = end - start;
        let mut left = left_buf.as_mut().subcols_mut(0, 2 * m);
        let mut right = right_buf.as_mut().subcols_mut(0, 2 * m);
        for k in 0..m {
            let t = table.nodes[start + k];
            let c = coeffs[start + k];
            for (i, e) in energies.iter().enumerate() {
                let (s, co) = (e * t).sin_cos();
                right[(i, k)] = co;
                right[(i, m + k)] = s;
                if odd {
                    left[(i, k)] = s * c;
                    left[(i, m + k)] = -co * c;
                } else {
                    left[(i, k)] = co * c;
                    left[(i, m + k)] = s * c;
                }
            }
        }
        // acc is symmetric (even weights) or antisymmetric (odd), so only
        // the lower triangle is accumulated
        triangular::matmul(
            acc.as_mut(),
            BlockStructure::TriangularLower,
            Accum::Add,
            left.as_ref(),
            BlockStructure::Rectangular,
            right.as_ref().transpose(),
            BlockStructure::Rectangular,
            1.0,
            faer::get_global_parallelism(),
        );
    }
    let sign = if odd { -1.0 } else { 1.0 };
    let acc = Mat::from_fn(n, n, |i, j| if i >= j { acc[(i, j)] } else { sign * acc[(j, i)] });
    Mat::from_fn(n, n, |i, j| {
        if odd {
            // exactly zero on degenerate pairs by oddness
            if energies[i] == energies[j] {
                c64::new(0.0, 0.0)
            } else {
                c64::new(0.0, 2.0 * acc[(i, j)])
            }
        } else {
            c64::new(2.0 * acc[(i, j)], 0.0)
        }
    })
}

/// `∫ weight(t) e^{itH} A e^{−itH} dt` in the eigenbasis of `spec`.
pub fn spectral_integral(
    filter: &FilterFunction,
    spec: &SpectralData,
    a: MatRef<'_, c64>,
    weight: Weight,
) -> Result<Mat<c64>> {
    let transfer = transfer_matrix(filter, spec.energies(), weight, 0)?;
    Ok(transfer.apply(spec, a))
}
