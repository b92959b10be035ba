//! Majorana monomials and their Jordan–Wigner images.
//!
//! Conventions: `m_{2k} = a_k + a_k^*`, `m_{2k+1} = i (a_k - a_k^*)`, so that
//! `m_p m_q + m_q m_p = 2 δ_{pq}`. Under Jordan–Wigner (bit `k` of a basis
//! index is the occupation of mode `k`, `Z|1> = -|1>`)
//!
//! ```text
//! m_{2k}   =      Z_{<k} X_k
//! m_{2k+1} = -i X_k Z_{<=k}
//! ```
//!
//! so every monomial is a Pauli string `i^q X^x Z^z` acting as
//! `X^x Z^z |b> = (-1)^{|z & b|} |b ^ x>`.

use faer::c64;

use crate::lattice::ModeMask;

/// `Γ_S Γ_T = phase · Γ_{S Δ T}`.
///
/// The phase is the sign of the permutation sorting the concatenated word,
/// i.e. `(-1)^{#{(s, t) : s ∈ S, t ∈ T, s > t}}`; coinciding modes square to one.
pub fn monomial_product(s: ModeMask, t: ModeMask) -> (c64, ModeMask) {
    let sign = if swap_parity(s.0, t.0) { -1.0 } else { 1.0 };
    (c64::new(sign, 0.0), ModeMask(s.0 ^ t.0))
}

/// Parity of `#{(s, t) : s > t}`.
#[inline]
pub(crate) fn swap_parity(s: u64, t: u64) -> bool {
    let mut count = 0u32;
    let mut rest = t;
    while rest != 0 {
        let q = rest.trailing_zeros();
        rest &= rest - 1;
        count += (s.checked_shr(q + 1).unwrap_or(0)).count_ones();
    }
    count % 2 == 1
}

/// `Γ_S^* = (-1)^{k(k-1)/2} Γ_S` for `|S| = k`.
pub fn adjoint_sign(s: ModeMask) -> f64 {
    let k = s.len();
    if (k * k.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// A Pauli string `i^phase X^x Z^z` over the Jordan–Wigner qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pauli {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

impl Pauli {
    pub const IDENTITY: Pauli = Pauli { x: 0, z: 0, phase: 0 };

    pub fn compose(self, rhs: Pauli) -> Pauli {
        // Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}
        let flip = ((self.z & rhs.x).count_ones() % 2) as u8 * 2;
        Pauli {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + flip) % 4,
        }
    }

    pub fn phase_value(self) -> c64 {
        I_POWERS[self.phase as usize]
    }

    /// `(target row, value)` of column `col`.
    #[inline]
    pub fn apply(self, col: usize) -> (usize, c64) {
        let sign = (self.z & col as u64).count_ones() % 2;
        let v = I_POWERS[((self.phase as u32 + 2 * sign) % 4) as usize];
        ((col as u64 ^ self.x) as usize, v)
    }
}

pub(crate) const I_POWERS: [c64; 4] = [
    c64 { re: 1.0, im: 0.0 },
    c64 { re: 0.0, im: 1.0 },
    c64 { re: -1.0, im: 0.0 },
    c64 { re: 0.0, im: -1.0 },
];

/// Jordan–Wigner image of a single Majorana mode.
pub fn majorana_pauli(p: usize) -> Pauli {
    let k = p / 2;
    if p.is_multiple_of(2) {
        Pauli {
            x: 1 << k,
            z: (1 << k) - 1,
            phase: 0,
        }
    } else {
        Pauli {
            x: 1 << k,
            z: (1 << (k + 1)) - 1,
            phase: 3,
        }
    }
}

/// Jordan–Wigner image of the ascending monomial `Γ_S`.
pub fn monomial_pauli(s: ModeMask) -> Pauli {
    s.iter().fold(Pauli::IDENTITY, |acc, p| acc.compose(majorana_pauli(p)))
}

/// The monomial whose Jordan–Wigner image is proportional to `X^x Z^z`.
///
/// Inverts the GF(2)-linear map `S -> (x, z)`: `x_k = s_{2k} ^ s_{2k+1}` and
/// `z_j = s_{2j+1} ^ parity(x_{>j})`.
pub fn mask_from_pauli(x: u64, z: u64, modes: usize) -> ModeMask {
    let mut mask = 0u64;
    for j in 0..modes {
        let above = x.checked_shr(j as u32 + 1).unwrap_or(0).count_ones() as u64 % 2;
        let odd = (z >> j & 1) ^ above;
        let even = (x >> j & 1) ^ odd;
        mask |= even << (2 * j) | odd << (2 * j + 1);
    }
    ModeMask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_square() {
        let t = ModeMask::from_modes([1, 4, 5]);
        assert_eq!(monomial_product(ModeMask::EMPTY, t), (c64::new(1.0, 0.0), t));
        let m0 = ModeMask::single(0);
        assert_eq!(monomial_product(m0, m0), (c64::new(1.0, 0.0), ModeMask::EMPTY));
    }

    #[test]
    fn anticommutation_sign() {
        let (a, _) = monomial_product(ModeMask::single(1), ModeMask::single(0));
        assert_eq!(a.re, -1.0);
        let (b, _) = monomial_product(ModeMask::single(0), ModeMask::single(1));
        assert_eq!(b.re, 1.0);
    }

    #[test]
    fn pauli_mask_inverse() {
        for s in 0u64..(1 << 8) {
            let p = monomial_pauli(ModeMask(s));
            assert_eq!(mask_from_pauli(p.x, p.z, 4), ModeMask(s));
        }
    }

    #[test]
    fn adjoint_signs() {
        assert_eq!(adjoint_sign(ModeMask::EMPTY), 1.0);
        assert_eq!(adjoint_sign(ModeMask::single(3)), 1.0);
        assert_eq!(adjoint_sign(ModeMask::from_modes([0, 1])), -1.0);
        assert_eq!(adjoint_sign(ModeMask::from_modes([0, 1, 2])), -1.0);
        assert_eq!(adjoint_sign(ModeMask::from_modes([0, 1, 2, 3])), 1.0);
    }
}
