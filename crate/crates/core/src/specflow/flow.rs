//! Spectral-flow generator and ground-state transport along a family.
//!
//! With `D_s = −𝓘_s(Ḣ_s)` and `∂_t U = i U D_t`, the transported projection
//! `U^* P_s U` solves `Ṗ = −i[D, P]`, which is the equation the exact ground
//! projection obeys while the gap stays open.

use faer::{c64, Mat};
use serde::Serialize;

use super::decompose::InverseLiouvillian;
use crate::car::{hermitian_deviation, max_abs, spectral_norm};
use crate::dynamics::{diagonalize, expm_i, SpectralData};
use crate::error::{Error, Result};
use crate::filter::FilterFunction;
use crate::locality::InteractionFamily;
use crate::par;

/// Hermiticity slack for generators.
pub const GENERATOR_HERMITIAN_TOL: f64 = 1e-9;
/// Floor below which transport errors count as converged.
pub const CONVERGENCE_FLOOR: f64 = 1e-8;

/// `D_s` together with the data it was built from.
#[derive(Clone, Debug)]
pub struct FlowGenerator {
    pub s: f64,
    pub generator: Mat<c64>,
    pub gap: f64,
    pub panels: usize,
    /// Max-norm change at the final panel doubling.
    pub quad_change: f64,
}

/// `D_s = −𝓘_s(Ḣ_s)` as a dense Hermitian matrix.
pub fn flow_generator(filter: &FilterFunction, family: &InteractionFamily, s: f64) -> Result<FlowGenerator> {
    flow_generator_with(filter, family, s, 0)
}

pub fn flow_generator_with(
    filter: &FilterFunction,
    family: &InteractionFamily,
    s: f64,
    extra_levels: u32,
) -> Result<FlowGenerator> {
    let h = family.at(s).total_dense();
    let hdot = family.derivative_at(s).total_dense();
    let spec = diagonalize(&h)?;
    let gap = spec.gap();
    let n = h.dim();
    if max_abs(hdot.mat()) == 0.0 {
        return Ok(FlowGenerator {
            s,
            generator: Mat::zeros(n, n),
            gap,
            panels: 0,
            quad_change: 0.0,
        });
    }
    let inv = InverseLiouvillian::with_levels(filter, spec, extra_levels)?;
    let i_hdot = inv.inverse(hdot.mat());
    let generator = Mat::from_fn(n, n, |i, j| -i_hdot[(i, j)]);
    let dev = hermitian_deviation(generator.as_ref());
    if dev > GENERATOR_HERMITIAN_TOL * max_abs(generator.as_ref()).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(FlowGenerator {
        s,
        generator,
        gap,
        panels: inv.panels(),
        quad_change: inv.quadrature_change(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowConfig {
    /// Number of `s`-steps over the family interval.
    pub steps: usize,
    /// Gap every grid point must clear.
    pub declared_gap: f64,
    /// Extra panel doublings on top of the adaptive start level.
    pub extra_levels: u32,
    /// Record `‖[U^* P U, N]‖` at every grid point.
    pub track_number: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            steps: 64,
            declared_gap: 1.0,
            extra_levels: 0,
            track_number: false,
        }
    }
}

/// One transport run on a uniform grid.
#[derive(Clone, Debug, Serialize)]
pub struct FlowRun {
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `‖U_{s₀,s}^* P_{s₀} U_{s₀,s} − P_s‖` per grid point.
    pub errors: Vec<f64>,
    pub max_error: f64,
    /// `‖D‖` on the cell ending at each grid point (0 at the start).
    pub generator_norms: Vec<f64>,
    /// Quadrature change of the generator on the cell ending at each point.
    pub quad_changes: Vec<f64>,
    pub max_generator_norm: f64,
    pub max_panels: usize,
    /// Max-norm distance of the final unitary from the identity.
    pub identity_deviation: f64,
    /// `‖[U^* P_{s₀} U, N]‖` per grid point when tracked, else empty.
    pub number_commutators: Vec<f64>,
    #[serde(skip)]
    pub unitary: Mat<c64>,
}

fn grid(family: &InteractionFamily, steps: usize) -> Vec<f64> {
    let (a, b) = family.interval();
    (0..=steps).map(|j| a + (b - a) * j as f64 / steps as f64).collect()
}

/// Diagonalize along the grid and enforce the gap gate.
pub fn gap_gate(family: &InteractionFamily, grid: &[f64], declared: f64) -> Result<Vec<SpectralData>> {
    let specs = par::try_map_range(grid.len(), |j| diagonalize(&family.at(grid[j]).total_dense()))?;
    for (s, spec) in grid.iter().zip(&specs) {
        if spec.gap() < declared {
            return Err(Error::GapGate {
                s: *s,
                gap: spec.gap(),
                declared,
                spectrum: spec.energies().iter().take(16).copied().collect(),
            });
        }
    }
    Ok(specs)
}

/// Transport the initial ground projection with the spectral-flow cocycle,
/// one midpoint step per grid cell.
pub fn transport(filter: &FilterFunction, family: &InteractionFamily, config: FlowConfig) -> Result<FlowRun> {
    let steps = config.steps.max(1);
    let grid = grid(family, steps);
    let specs = gap_gate(family, &grid, config.declared_gap)?;
    let lattice = family.lattice();
    let gens = par::try_map_range(steps, |j| {
        let mid = 0.5 * (grid[j] + grid[j + 1]);
        flow_generator_with(filter, family, mid, config.extra_levels)
    })?;
    let h = grid[1] - grid[0];
    let n = lattice.hilbert_dim();
    let p0 = specs[0].ground_projection().to_owned();
    let mut u = Mat::<c64>::identity(n, n);
    let mut errors = vec![spectral_norm((&p0 - specs[0].ground_projection()).as_ref())];
    let charge: Vec<f64> = (0..n).map(|i| i.count_ones() as f64).collect();
    let number_commutator = |m: &Mat<c64>| {
        let c = Mat::from_fn(n, n, |i, j| m[(i, j)] * (charge[j] - charge[i]));
        spectral_norm(c.as_ref())
    };
    let mut number_commutators = Vec::new();
    if config.track_number {
        number_commutators.push(number_commutator(&p0));
    }
    for (j, g) in gens.iter().enumerate() {
        if max_abs(g.generator.as_ref()) > 0.0 {
            u = &u * expm_i(g.generator.as_ref(), h, lattice)?;
        }
        let moved = u.adjoint() * &p0 * &u;
        if config.track_number {
            number_commutators.push(number_commutator(&moved));
        }
        errors.push(spectral_norm((moved - specs[j + 1].ground_projection()).as_ref()));
    }
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let identity_deviation = max_abs((&u - Mat::<c64>::identity(n, n)).as_ref());
    let generator_norms: Vec<f64> = std::iter::once(0.0)
        .chain(gens.iter().map(|g| spectral_norm(g.generator.as_ref())))
        .collect();
    let quad_changes = std::iter::once(0.0).chain(gens.iter().map(|g| g.quad_change)).collect();
    Ok(FlowRun {
        gaps: specs.iter().map(|s| s.gap()).collect(),
        grid,
        errors,
        max_error,
        max_generator_norm: generator_norms.iter().copied().fold(0.0, f64::max),
        generator_norms,
        quad_changes,
        max_panels: gens.iter().map(|g| g.panels).max().unwrap_or(0),
        identity_deviation,
        number_commutators,
        unitary: u,
    })
}

/// Coarse run against a run with half the step and doubled panels.
#[derive(Clone, Debug, Serialize)]
pub struct TransportConvergence {
    pub coarse: FlowRun,
    pub fine: FlowRun,
    /// `coarse.max_error / fine.max_error`.
    pub reduction: f64,
    /// Reduction of at least 2×, or the fine error below the floor.
    pub converging: bool,
}

pub fn transport_convergence(
    filter: &FilterFunction,
    family: &InteractionFamily,
    config: FlowConfig,
) -> Result<TransportConvergence> {
    let coarse = transport(filter, family, config)?;
    let fine = transport(
        filter,
        family,
        FlowConfig {
            steps: 2 * config.steps,
            extra_levels: config.extra_levels + 1,
            ..config
        },
    )?;
    let reduction = coarse.max_error / fine.max_error;
    let converging = reduction >= 2.0 || fine.max_error <= CONVERGENCE_FLOOR;
    Ok(TransportConvergence {
        coarse,
        fine,
        reduction,
        converging,
    })
}

/// Central difference `(P_{s+h} − P_{s−h}) / 2h` of the ground projection.
pub fn projection_derivative(family: &InteractionFamily, s: f64, h: f64) -> Result<Mat<c64>> {
    let plus = diagonalize(&family.at(s + h).total_dense())?;
    let minus = diagonalize(&family.at(s - h).total_dense())?;
    if plus.ground_dim() != minus.ground_dim() {
        return Err(Error::DegenerateGround {
            s,
            multiplicity: plus.ground_dim().max(minus.ground_dim()),
        });
    }
    let d = plus.ground_projection() - minus.ground_projection();
    let n = d.nrows();
    Ok(Mat::from_fn(n, n, |i, j| d[(i, j)] / (2.0 * h)))
}

/// Reference transport with Kato's generator `K = i[Ṗ, P]`, `Ṗ` by central
/// differences. Returns the per-grid-point errors `‖U^* P_{s₀} U − P_s‖`.
pub fn kato_transport(family: &InteractionFamily, steps: usize, fd_step: f64) -> Result<Vec<f64>> {
    let steps = steps.max(1);
    let grid = grid(family, steps);
    let lattice = family.lattice();
    let kato = par::try_map_range(steps, |j| -> Result<Mat<c64>> {
        let mid = 0.5 * (grid[j] + grid[j + 1]);
        let p = diagonalize(&family.at(mid).total_dense())?;
        let p = p.ground_projection();
        let pdot = projection_derivative(family, mid, fd_step)?;
        let comm = &pdot * p - p * &pdot;
        let n = comm.nrows();
        Ok(Mat::from_fn(n, n, |i, k| comm[(i, k)] * c64::new(0.0, 1.0)))
    })?;
    let specs = par::try_map_range(grid.len(), |j| diagonalize(&family.at(grid[j]).total_dense()))?;
    let h = grid[1] - grid[0];
    let n = lattice.hilbert_dim();
    let p0 = specs[0].ground_projection().to_owned();
    let mut u = Mat::<c64>::identity(n, n);
    let mut errors = vec![0.0];
    for (j, k) in kato.iter().enumerate() {
        if max_abs(k.as_ref()) > 0.0 {
            u = &u * expm_i(k.as_ref(), h, lattice)?;
        }
        let moved = u.adjoint() * &p0 * &u;
        errors.push(spectral_norm((moved - specs[j + 1].ground_projection()).as_ref()));
    }
    Ok(errors)
}
