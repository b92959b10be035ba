//! Quasi-local norms and seeded quasi-local test operators.

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::car::MajoranaPolynomial;
use serde::Serialize;

use super::Interaction;
use crate::dynamics::liouvillian_apply;
use crate::error::{Error, Result};
use crate::lattice::ModeMask;

/// `‖A − E_{B_k(x)} A‖` for `k = 0..=k_max`, where `k_max` is the first
/// radius whose box covers the lattice (the tail vanishes from there on).
pub fn localization_tails(a: &MajoranaPolynomial, x: usize) -> Result<Vec<f64>> {
    let lattice = a.lattice();
    lattice.check_site(x)?;
    let k_max = lattice.exhaustion_radius(x);
    (0..=k_max)
        .map(|k| {
            let local = a.conditional_expectation(lattice.ball(x, k))?;
            Ok((a - &local).norm())
        })
        .collect()
}

/// `‖A‖_{ν,x} = ‖A‖ + sup_k (1+k)^ν ‖A − E_{B_k(x)} A‖`.
pub fn quasi_local_norm(a: &MajoranaPolynomial, nu: f64, x: usize) -> Result<f64> {
    let tails = localization_tails(a, x)?;
    Ok(norm_from_tails(a.norm(), &tails, nu))
}

/// Evaluate the quasi-local norm for a precomputed tail profile.
pub fn norm_from_tails(op_norm: f64, tails: &[f64], nu: f64) -> f64 {
    let sup = tails
        .iter()
        .enumerate()
        .map(|(k, t)| (1.0 + k as f64).powf(nu) * t)
        .fold(0.0, f64::max);
    op_norm + sup
}

/// Monomials drawn per shell.
const TERMS_PER_SHELL: usize = 8;

/// A seeded quasi-local operator around `x` with polynomial decay `ν*`:
/// `A = Σ_k c_k (1+k)^{−ν*} A_k`, where `A_k` is a normalized random
/// polynomial on `B_k(x)` whose every monomial reaches the shell
/// `B_k(x) ∖ B_{k−1}(x)`. The `|c_k| ≤ 1` are scaled so that `‖A‖ ≤ 2`.
pub fn random_quasilocal(
    lattice: crate::lattice::LatticeSpec,
    seed: u64,
    x: usize,
    nu_star: f64,
    even: bool,
) -> Result<MajoranaPolynomial> {
    lattice.check_site(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (x as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let k_max = lattice.exhaustion_radius(x);
    let weights: Vec<f64> = (0..=k_max).map(|k| (1.0 + k as f64).powf(-nu_star)).collect();
    let budget = (2.0 / weights.iter().sum::<f64>()).min(1.0);

    let mut out = MajoranaPolynomial::zero(lattice);
    let mut inner = ModeMask::EMPTY;
    for (k, w) in weights.iter().enumerate() {
        let ball = lattice.modes_of(lattice.ball(x, k));
        let shell = ModeMask(ball.0 & !inner.0);
        inner = ball;
        if shell.is_empty() {
            continue;
        }
        let ak = shell_polynomial(&mut rng, lattice, ball, shell, even);
        let norm = ak.norm();
        if norm == 0.0 {
            continue;
        }
        let ck = rng.random_range(-1.0..1.0) * budget;
        out = &out + &ak.scale(c64::new(ck * w / norm, 0.0));
    }
    Ok(out)
}

fn shell_polynomial(
    rng: &mut ChaCha8Rng,
    lattice: crate::lattice::LatticeSpec,
    ball: ModeMask,
    shell: ModeMask,
    even: bool,
) -> MajoranaPolynomial {
    let modes: Vec<usize> = ball.iter().collect();
    let shell_modes: Vec<usize> = shell.iter().collect();
    let mut out = MajoranaPolynomial::zero(lattice);
    for _ in 0..TERMS_PER_SHELL {
        let mut mask = 0u64;
        for &p in &modes {
            if rng.random_bool(0.3) {
                mask |= 1 << p;
            }
        }
        if mask & shell.0 == 0 {
            mask |= 1 << shell_modes[rng.random_range(0..shell_modes.len())];
        }
        if even && mask.count_ones() % 2 == 1 {
            // flip a mode so that the shell is still reached
            let candidates: Vec<usize> = modes
                .iter()
                .copied()
                .filter(|&p| (mask ^ 1 << p) & shell.0 != 0)
                .collect();
            mask ^= 1 << candidates[rng.random_range(0..candidates.len())];
        }
        let c = c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        out.add_term(ModeMask(mask), c);
    }
    out
}

/// Both sides of `‖[A,B]‖_{ν,x} ≤ 4^{ν+m+3} ‖A‖_{ν+m,y} ‖B‖_{ν+m,x} / (1+‖x−y‖)^m`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutatorBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl CommutatorBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// `A` is anchored at `y`, `B` at `x`; `A` must be even.
pub fn commutator_bound(
    a: &MajoranaPolynomial,
    y: usize,
    b: &MajoranaPolynomial,
    x: usize,
    nu: f64,
    m: f64,
) -> Result<CommutatorBound> {
    a.check_same_lattice(b)?;
    if !a.is_even() {
        return Err(Error::Config("commutator bound needs an even A".into()));
    }
    let lattice = a.lattice();
    let lhs = quasi_local_norm(&a.commutator(b), nu, x)?;
    let dist = lattice.distance(x, y) as f64;
    let rhs = 4f64.powf(nu + m + 3.0) * quasi_local_norm(a, nu + m, y)? * quasi_local_norm(b, nu + m, x)?
        / (1.0 + dist).powf(m);
    Ok(CommutatorBound { lhs, rhs })
}

/// `‖𝓛_Φ A‖_{ν,x} / (‖Φ‖_{d+1+2ν} ‖A‖_{d+3+2ν,x})`, reported without a
/// reference constant.
pub fn liouvillian_norm_ratio(phi: &Interaction, a: &MajoranaPolynomial, nu: f64, x: usize) -> Result<f64> {
    let d = phi.lattice().dimension() as f64;
    let la = liouvillian_apply(phi, a)?;
    let denom = phi.norm(d + 1.0 + 2.0 * nu) * quasi_local_norm(a, d + 3.0 + 2.0 * nu, x)?;
    Ok(if denom == 0.0 {
        0.0
    } else {
        quasi_local_norm(&la, nu, x)? / denom
    })
}
