//! Differentiable families `s ↦ Φ_s` of interactions.

use std::fmt;
use std::sync::Arc;

use super::interaction::Interaction;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, SiteSet};

type Builder = Arc<dyn Fn(f64) -> Interaction + Send + Sync>;

/// Step for the finite-difference derivative fallback.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone)]
pub struct InteractionFamily {
    lattice: LatticeSpec,
    interval: (f64, f64),
    eval: Builder,
    derivative: Option<Builder>,
    constant: bool,
}

impl fmt::Debug for InteractionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InteractionFamily")
            .field("lattice", &self.lattice)
            .field("interval", &self.interval)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl InteractionFamily {
    /// A closed-form family. `eval` must build its interaction on `lattice`.
    pub fn closed_form<F>(lattice: LatticeSpec, interval: (f64, f64), eval: F) -> Self
    where
        F: Fn(f64) -> Interaction + Send + Sync + 'static,
    {
        InteractionFamily {
            lattice,
            interval,
            eval: Arc::new(eval),
            derivative: None,
            constant: false,
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> Interaction + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// The constant family `Φ_s = Φ` with vanishing derivative.
    pub fn constant(phi: Interaction, interval: (f64, f64)) -> Self {
        let lattice = phi.lattice();
        let zero = Interaction::new(lattice);
        Self::closed_form(lattice, interval, move |_| phi.clone())
            .with_derivative(move |_| zero.clone())
            .mark_constant()
    }

    /// Declare that `Φ_s` does not depend on `s`, which lets evolutions use
    /// exact eigenbasis conjugation.
    pub fn mark_constant(mut self) -> Self {
        self.constant = true;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Piecewise-linear interpolation of tabulated `(s, Φ_s)` pairs.
    /// Supports must agree between nodes; the derivative is the slope of the
    /// active segment.
    pub fn tabulated(mut table: Vec<(f64, Interaction)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Config("a tabulated family needs at least two nodes".into()));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        let lattice = table[0].1.lattice();
        let supports = table[0].1.supports();
        for (s, phi) in &table {
            if phi.lattice() != lattice {
                return Err(Error::LatticeMismatch {
                    left: lattice,
                    right: phi.lattice(),
                });
            }
            if phi.supports() != supports {
                return Err(Error::Config(format!("term supports change at s = {s}")));
            }
        }
        let table = Arc::new(table);
        let interval = (table[0].0, table[table.len() - 1].0);
        let segment = {
            let table = table.clone();
            move |s: f64| table.windows(2).position(|w| s <= w[1].0).unwrap_or(table.len() - 2)
        };
        let t1 = table.clone();
        let seg1 = segment.clone();
        let eval = move |s: f64| {
            let i = seg1(s);
            let (s0, a) = (&t1[i].0, &t1[i].1);
            let (s1, b) = (&t1[i + 1].0, &t1[i + 1].1);
            let lam = (s - s0) / (s1 - s0);
            a.scale(1.0 - lam).try_add(&b.scale(lam)).expect("same lattice")
        };
        let t2 = table;
        let derivative = move |s: f64| {
            let i = segment(s);
            let (s0, a) = (&t2[i].0, &t2[i].1);
            let (s1, b) = (&t2[i + 1].0, &t2[i + 1].1);
            b.try_sub(a).expect("same lattice").scale(1.0 / (s1 - s0))
        };
        Ok(Self::closed_form(lattice, interval, eval).with_derivative(derivative))
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn at(&self, s: f64) -> Interaction {
        (self.eval)(s)
    }

    /// `Φ̇_s`, analytic when available, otherwise a central difference with
    /// step [`FD_STEP`].
    pub fn derivative_at(&self, s: f64) -> Interaction {
        match &self.derivative {
            Some(d) => d(s),
            None => self.central_difference(s, FD_STEP),
        }
    }

    pub fn central_difference(&self, s: f64, h: f64) -> Interaction {
        let plus = self.at(s + h);
        let minus = self.at(s - h);
        plus.try_sub(&minus).expect("same lattice").scale(0.5 / h)
    }

    /// Check the family invariants at three interior points: supports do not
    /// move, and an analytic derivative matches the central difference with
    /// `h = 1e-4` to `1e-6` per term. Returns the largest term deviation.
    pub fn verify_derivative(&self) -> Result<f64> {
        let (a, b) = self.interval;
        let mut reference: Vec<SiteSet> = self.at(a).supports();
        reference.extend(self.at(b).supports());
        let mut worst = 0.0f64;
        for frac in [0.25, 0.5, 0.75] {
            let s = a + frac * (b - a);
            let phi = self.at(s);
            // a coefficient may pass through zero, so only new supports count
            if phi.supports().iter().any(|m| !reference.contains(m)) {
                return Err(Error::Config(format!("term supports change at s = {s}")));
            }
            if let Some(d) = &self.derivative {
                let fd = self.central_difference(s, 1e-4);
                let dev = fd.max_term_diff(&d(s));
                worst = worst.max(dev);
                if dev > 1e-6 {
                    return Err(Error::Config(format!(
                        "analytic derivative disagrees with finite differences at s = {s} ({dev:.3e})"
                    )));
                }
            }
        }
        Ok(worst)
    }
}
