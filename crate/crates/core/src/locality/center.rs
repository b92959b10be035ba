//! Centers of finite site sets, in exact integer arithmetic.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, SiteSet};

/// `C(M)`: the point of `M` nearest (maximum norm) to the center of mass.
///
/// Ties go to the larger candidate in one dimension and to the smallest
/// polar angle of `C(M) - cm(M)` in two. A candidate sitting exactly on the
/// center of mass has no angle and wins outright.
///
/// All comparisons run on `|M| y - Σ_{z ∈ M} z`, which is integral.
pub fn center(lattice: &LatticeSpec, sites: SiteSet) -> Result<usize> {
    if sites.is_empty() {
        return Err(Error::EmptySiteSet);
    }
    lattice.check_sites(sites)?;
    let n = sites.len() as i64;
    let mut sum = [0i64; 2];
    for s in sites.iter() {
        let c = lattice.coords(s);
        sum[0] += c[0];
        sum[1] += c[1];
    }
    let offset = |s: usize| {
        let c = lattice.coords(s);
        [n * c[0] - sum[0], n * c[1] - sum[1]]
    };
    let dist = |v: [i64; 2]| v[0].abs().max(v[1].abs());

    let best = sites
        .iter()
        .map(|s| (s, offset(s)))
        .min_by(|(_, a), (_, b)| {
            dist(*a).cmp(&dist(*b)).then_with(|| {
                if lattice.dimension() == 1 {
                    // larger coordinate first
                    b[0].cmp(&a[0])
                } else {
                    angle_cmp(*a, *b)
                }
            })
        })
        .expect("nonempty");
    Ok(best.0)
}

/// Order by polar angle in `[0, 2π)`, the zero vector first.
fn angle_cmp(a: [i64; 2], b: [i64; 2]) -> Ordering {
    let zero = |v: [i64; 2]| v == [0, 0];
    match (zero(a), zero(b)) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    // upper half-plane (angle in [0, π)) before lower
    let half = |v: [i64; 2]| u8::from(!(v[1] > 0 || (v[1] == 0 && v[0] > 0)));
    half(a).cmp(&half(b)).then_with(|| {
        let cross = a[0] as i128 * b[1] as i128 - a[1] as i128 * b[0] as i128;
        0.cmp(&cross)
    })
}
