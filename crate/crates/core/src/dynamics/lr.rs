//! Lieb–Robinson profiling, envelope fits and restriction convergence.

use std::io::Write;

use faer::{c64, Mat};
use serde::Serialize;

use super::cocycle::{cocycle_propagate, StepRule};
use super::spectral::{diagonalize, SpectralData};
use crate::car::{spectral_norm, MajoranaPolynomial};
use crate::error::{Error, Result};
use crate::locality::{localization_tails, norm_from_tails, InteractionFamily};
use crate::par;

/// How `α_{0,t}` is realized for a family.
pub enum Evolution {
    /// Time-independent `H`: exact eigenbasis conjugation.
    Static(SpectralData),
    /// General family: ordered exponential with the given step rule.
    Family(InteractionFamily, StepRule),
}

impl Evolution {
    pub fn from_family(family: &InteractionFamily) -> Result<Self> {
        if family.is_constant() {
            let (s0, _) = family.interval();
            Ok(Evolution::Static(diagonalize(&family.at(s0).total_dense())?))
        } else {
            Ok(Evolution::Family(family.clone(), StepRule::default()))
        }
    }

    /// `α_{0,t}(A) = U A U^*`.
    pub fn apply(&self, a: &Mat<c64>, t: f64) -> Result<Mat<c64>> {
        if t == 0.0 {
            return Ok(a.clone());
        }
        match self {
            Evolution::Static(spec) => Ok(spec.evolve(a.as_ref(), t)),
            Evolution::Family(family, rule) => {
                let lattice = family.lattice();
                let s0 = family.interval().0;
                let prop = cocycle_propagate(
                    lattice,
                    |s| Ok(family.at(s).total_dense().into_mat()),
                    s0,
                    s0 + t,
                    *rule,
                )?;
                let u = &prop.unitary;
                Ok(u * a * u.adjoint())
            }
        }
    }
}

/// One row of a commutator profile.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LrSample {
    pub t: f64,
    pub distance: usize,
    pub commutator_norm: f64,
    /// `‖A‖ ‖B‖ |Y|`, the prefactor of the envelope.
    pub scale: f64,
}

/// `‖[α_{0,t}(A), B_d]‖` over the `(t, d)` grid, ordered by time, then by
/// the order of `probes`.
///
/// Requires `A` or each `B` to be even. At `t = 0` the evolution is skipped,
/// so disjoint supports give an exact zero.
pub fn lr_commutator_profile(
    evolution: &Evolution,
    a: &MajoranaPolynomial,
    probes: &[(usize, MajoranaPolynomial)],
    times: &[f64],
) -> Result<Vec<LrSample>> {
    if !a.is_even() && probes.iter().any(|(_, b)| !b.is_even()) {
        return Err(Error::BothOdd);
    }
    let a_dense = a.to_dense().into_mat();
    let a_norm = a.norm();
    let rows = par::try_map_range(times.len(), |i| -> Result<Vec<LrSample>> {
        let t = times[i];
        let at = evolution.apply(&a_dense, t)?;
        Ok(probes
            .iter()
            .map(|(d, b)| {
                let comm = b.dense_commutator(at.as_ref());
                LrSample {
                    t,
                    distance: *d,
                    commutator_norm: spectral_norm(comm.as_ref()),
                    scale: a_norm * b.norm() * b.support().len() as f64,
                }
            })
            .collect())
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// Algebraic light-cone envelope
/// `C · scale · (1+t)^p / (1 + max(0, √d − c t))^ν`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Envelope {
    pub big_c: f64,
    pub c: f64,
    pub nu: f64,
    pub p: f64,
}

impl Envelope {
    pub fn bound(&self, t: f64, distance: usize, scale: f64) -> f64 {
        let cone = ((distance as f64).sqrt() - self.c * t).max(0.0);
        self.big_c * scale * (1.0 + t).powf(self.p) / (1.0 + cone).powf(self.nu)
    }
}

/// Fit an envelope to a profile. `(c, ν, p)` come from a grid search
/// minimizing the squared log-residuals; `C` is then the smallest constant
/// dominating every sample, so all residuals `bound − value` are `≥ 0`.
pub fn fit_envelope(samples: &[LrSample]) -> Envelope {
    let cs: Vec<f64> = (1..=40).map(|i| 0.05 * i as f64).collect();
    let nus: Vec<f64> = (1..=32).map(|i| 0.5 * i as f64).collect();
    let ps = [0.0, 1.0, 2.0, 3.0];
    let positive: Vec<&LrSample> = samples
        .iter()
        .filter(|s| s.commutator_norm > 1e-300 && s.scale > 0.0)
        .collect();
    let mut best = (
        f64::INFINITY,
        Envelope {
            big_c: 1.0,
            c: 1.0,
            nu: 1.0,
            p: 0.0,
        },
    );
    for &c in &cs {
        for &nu in &nus {
            for &p in &ps {
                let shape = Envelope { big_c: 1.0, c, nu, p };
                let logs: Vec<f64> = positive
                    .iter()
                    .map(|s| (shape.bound(s.t, s.distance, s.scale) / s.commutator_norm).ln())
                    .collect();
                if logs.is_empty() {
                    continue;
                }
                // optimal log C for least squares is minus the mean
                let mean = logs.iter().sum::<f64>() / logs.len() as f64;
                let sse: f64 = logs.iter().map(|l| (l - mean).powi(2)).sum();
                if sse < best.0 {
                    best = (sse, shape);
                }
            }
        }
    }
    let mut env = best.1;
    env.big_c = samples
        .iter()
        .filter(|s| s.scale > 0.0)
        .map(|s| s.commutator_norm / env.bound(s.t, s.distance, s.scale))
        .fold(0.0, f64::max);
    // guard the maximizing sample against rounding in `bound`
    env.big_c = if env.big_c == 0.0 {
        f64::MIN_POSITIVE
    } else {
        env.big_c * (1.0 + 1e-12)
    };
    env
}

/// Write `t, distance, commutator_norm, envelope_bound, fit_c, fit_nu`.
pub fn write_profile_csv<W: Write>(out: W, samples: &[LrSample], env: &Envelope) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "distance", "commutator_norm", "envelope_bound", "fit_c", "fit_nu"])?;
    for s in samples {
        w.write_record([
            fmt_num(s.t),
            s.distance.to_string(),
            fmt_num(s.commutator_norm),
            fmt_num(env.bound(s.t, s.distance, s.scale)),
            fmt_num(env.c),
            fmt_num(env.nu),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits, `.` separator.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `(1+x)^ν / (1 + max(0, √(x/n) − t))^{2ν} ≤ n^ν (1+t²)^ν`.
pub fn lr_envelope_inequality(x: f64, n: f64, t: f64, nu: f64) -> bool {
    let lhs = (1.0 + x).powf(nu) / (1.0 + ((x / n).sqrt() - t).max(0.0)).powf(2.0 * nu);
    let rhs = n.powf(nu) * (1.0 + t * t).powf(nu);
    lhs <= rhs * (1.0 + 1e-12)
}

/// `‖α_{0,t}(A) − α^k_{0,t}(A)‖` for `k = 0..=k_full`, where `α^k` is
/// generated by the restricted family `Φ_{s,k}` around `z`. The last entry
/// is the full volume.
pub fn restriction_convergence(
    family: &InteractionFamily,
    a: &MajoranaPolynomial,
    z: usize,
    t: f64,
) -> Result<Vec<f64>> {
    let lattice = family.lattice();
    let k_full = 2 * lattice.exhaustion_radius(z) + 2 * lattice.radius();
    let a_dense = a.to_dense().into_mat();
    let reference = Evolution::from_family(family)?.apply(&a_dense, t)?;
    par::try_map_range(k_full + 1, |k| {
        let restricted = restrict_family(family, z, k);
        let evolved = Evolution::from_family(&restricted)?.apply(&a_dense, t)?;
        Ok(spectral_norm((&reference - &evolved).as_ref()))
    })
}

fn restrict_family(family: &InteractionFamily, z: usize, k: usize) -> InteractionFamily {
    let base = family.clone();
    let lattice = family.lattice();
    let restricted = InteractionFamily::closed_form(lattice, family.interval(), move |s| {
        base.at(s).restrict(z, k).expect("site checked by caller")
    });
    if family.is_constant() {
        restricted.mark_constant()
    } else {
        restricted
    }
}

/// Growth of `‖e^{it𝓛_H} A‖_{ν,x} / ‖A‖_{ν,x}` over `times`.
#[derive(Clone, Debug, Serialize)]
pub struct NormGrowth {
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Log–log slope of `ratio` against `1 + t` over the sampled window.
    pub degree: f64,
}

pub fn norm_growth(
    spec: &SpectralData,
    a: &MajoranaPolynomial,
    nu: f64,
    x: usize,
    times: &[f64],
) -> Result<NormGrowth> {
    let base = norm_from_tails(a.norm(), &localization_tails(a, x)?, nu);
    let a_dense = a.to_dense();
    let ratios = par::try_map_range(times.len(), |i| -> Result<f64> {
        let evolved = spec.evolve(a_dense.mat(), times[i]);
        let op = crate::car::DenseOperator::new(a.lattice(), evolved)?;
        let poly = MajoranaPolynomial::from_dense(&op)?;
        let value = norm_from_tails(poly.norm(), &localization_tails(&poly, x)?, nu);
        Ok(value / base)
    })?;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(&ratios)
        .map(|(t, r)| ((1.0 + t).ln(), r.ln()))
        .collect();
    Ok(NormGrowth {
        times: times.to_vec(),
        ratios,
        degree: slope(&pts),
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
