//! Built-in scenario library.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, SiteSet};
use crate::locality::{terms, Interaction, InteractionFamily};

pub type Params = BTreeMap<String, f64>;

/// The symmetry a scenario is invariant under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// Gauge symmetry generated by the total number operator.
    Number,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub meaning: &'static str,
}

#[derive(Clone, Copy, Serialize)]
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    /// Default gap gate; `0` disables gating.
    pub declared_gap: f64,
    pub symmetry: Option<Symmetry>,
    pub experimental: bool,
    #[serde(skip)]
    build: fn(&Params) -> Result<InteractionFamily>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario").field("name", &self.name).finish()
    }
}

const fn p(name: &'static str, default: f64, meaning: &'static str) -> ParamSpec {
    ParamSpec { name, default, meaning }
}

static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "constant-family",
        summary: "Static gauge-invariant hopping chain; the flow generator vanishes",
        params: &[
            p("sites", 6.0, "chain length"),
            p("j", 1.0, "hopping amplitude"),
            p("mu", 4.0, "chemical potential"),
        ],
        declared_gap: 1.0,
        symmetry: Some(Symmetry::Number),
        experimental: false,
        build: build_constant,
    },
    Scenario {
        name: "hopping-2d",
        summary: "Gauge-invariant hopping on a square patch with a slow hopping ramp",
        params: &[
            p("lx", 3.0, "patch width"),
            p("ly", 3.0, "patch height"),
            p("j0", 1.0, "hopping at s = 0"),
            p("j1", 0.25, "hopping slope in s"),
            p("mu", 5.0, "chemical potential"),
        ],
        declared_gap: 1.0,
        symmetry: Some(Symmetry::Number),
        experimental: true,
        build: build_hopping_2d,
    },
    Scenario {
        name: "hopping-gauge",
        summary: "Gauge-invariant hopping chain, J(s) = j0 + j1 s",
        params: &[
            p("sites", 6.0, "chain length"),
            p("j0", 1.0, "hopping at s = 0"),
            p("j1", 0.5, "hopping slope in s"),
            p("mu", 4.0, "chemical potential"),
        ],
        declared_gap: 1.0,
        symmetry: Some(Symmetry::Number),
        experimental: false,
        build: build_hopping_gauge,
    },
    Scenario {
        name: "kitaev-trivial-path",
        summary: "Kitaev chain inside the trivial phase, Δ(s) = d0 + d1 s, μ(s) = mu0 + mu1 s",
        params: &[
            p("sites", 8.0, "chain length"),
            p("j", 1.0, "hopping amplitude"),
            p("d0", 0.5, "pairing at s = 0"),
            p("d1", 0.5, "pairing slope in s"),
            p("mu0", 3.5, "chemical potential at s = 0"),
            p("mu1", -0.5, "chemical potential slope in s"),
        ],
        declared_gap: 1.0,
        symmetry: None,
        experimental: false,
        build: build_kitaev,
    },
    Scenario {
        name: "lr-chain",
        summary: "Static chain for light-cone profiling",
        params: &[
            p("sites", 10.0, "chain length"),
            p("j", 1.0, "hopping amplitude"),
            p("delta", 0.0, "pairing amplitude"),
            p("mu", 0.5, "chemical potential"),
        ],
        declared_gap: 0.0,
        symmetry: None,
        experimental: false,
        build: build_lr_chain,
    },
    Scenario {
        name: "single-site-driver",
        summary: "One mode with H_s = (1 + rate s) n_0",
        params: &[p("rate", 1.0, "slope of the on-site energy")],
        declared_gap: 1.0,
        symmetry: Some(Symmetry::Number),
        experimental: false,
        build: build_single_site,
    },
];

/// All scenarios, alphabetized.
pub fn list_scenarios() -> &'static [Scenario] {
    SCENARIOS
}

pub fn find_scenario(name: &str) -> Result<&'static Scenario> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario {
            name: name.to_string(),
            suggestion: suggest(name, SCENARIOS.iter().map(|s| s.name)),
        })
}

/// Closest candidate by edit distance, if reasonably close.
pub fn suggest<'a>(name: &str, candidates: impl Iterator<Item = &'a str>) -> Option<String> {
    let candidates: Vec<&str> = candidates.collect();
    if let Some(c) = candidates.iter().find(|c| !name.is_empty() && c.starts_with(name)) {
        return Some(c.to_string());
    }
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .min()
        .filter(|(d, c)| *d <= (c.len() / 2).max(3))
        .map(|(_, c)| c.to_string())
}

impl Scenario {
    pub fn defaults(&self) -> Params {
        self.params.iter().map(|p| (p.name.to_string(), p.default)).collect()
    }

    /// Defaults overridden by `overrides`; unknown names are rejected.
    pub fn resolve(&self, overrides: &Params) -> Result<Params> {
        let mut out = self.defaults();
        for (k, v) in overrides {
            if !out.contains_key(k) {
                let hint = suggest(k, self.params.iter().map(|p| p.name))
                    .map(|s| format!(" (did you mean `{s}`?)"))
                    .unwrap_or_default();
                return Err(Error::Config(format!(
                    "scenario `{}` has no parameter `{k}`{hint}",
                    self.name
                )));
            }
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter `{k}` must be finite")));
            }
            out.insert(k.clone(), *v);
        }
        Ok(out)
    }

    pub fn build(&self, overrides: &Params) -> Result<InteractionFamily> {
        let params = self.resolve(overrides)?;
        (self.build)(&params)
    }
}

fn count(params: &Params, key: &str, min: usize) -> Result<usize> {
    let v = params[key];
    if v.fract() != 0.0 || v < min as f64 {
        return Err(Error::Config(format!("`{key}` must be an integer >= {min}, got {v}")));
    }
    Ok(v as usize)
}

fn chain_bonds(n: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(1)).map(|x| (x, x + 1)).collect()
}

/// Nearest-neighbour chain with bond terms `−J hop + Δ pair` and on-site `μ n`.
pub fn chain_interaction(lattice: LatticeSpec, bonds: &[(usize, usize)], j: f64, delta: f64, mu: f64) -> Interaction {
    let mut terms_list = Vec::new();
    for x in 0..lattice.num_sites() {
        if mu != 0.0 {
            terms_list.push((SiteSet::single(x), terms::onsite(lattice, x, mu)));
        }
    }
    for &(x, y) in bonds {
        let mut bond = terms::hopping(lattice, x, y, j);
        if delta != 0.0 {
            bond = &bond + &terms::pairing(lattice, x, y, delta);
        }
        if !bond.is_zero() {
            terms_list.push((SiteSet::from_sites([x, y]), bond));
        }
    }
    Interaction::from_terms(lattice, terms_list).expect("well-formed chain terms")
}

fn build_single_site(params: &Params) -> Result<InteractionFamily> {
    let l = LatticeSpec::chain(1)?;
    let rate = params["rate"];
    let at = move |s: f64| {
        Interaction::from_terms(l, [(SiteSet::single(0), terms::onsite(l, 0, 1.0 + rate * s))]).expect("on-site")
    };
    let der = move |_: f64| {
        let mut phi = Interaction::new(l);
        if rate != 0.0 {
            phi.add(SiteSet::single(0), terms::onsite(l, 0, rate)).expect("on-site");
        }
        phi
    };
    Ok(InteractionFamily::closed_form(l, (0.0, 1.0), at).with_derivative(der))
}

fn build_hopping_gauge(params: &Params) -> Result<InteractionFamily> {
    let n = count(params, "sites", 2)?;
    let l = LatticeSpec::chain(n)?;
    let (j0, j1, mu) = (params["j0"], params["j1"], params["mu"]);
    let bonds = chain_bonds(n);
    let b2 = bonds.clone();
    Ok(InteractionFamily::closed_form(l, (0.0, 1.0), move |s| {
        chain_interaction(l, &bonds, j0 + j1 * s, 0.0, mu)
    })
    .with_derivative(move |_| chain_interaction(l, &b2, j1, 0.0, 0.0)))
}

fn build_kitaev(params: &Params) -> Result<InteractionFamily> {
    let n = count(params, "sites", 2)?;
    let l = LatticeSpec::chain(n)?;
    let (j, d0, d1, mu0, mu1) = (params["j"], params["d0"], params["d1"], params["mu0"], params["mu1"]);
    let bonds = chain_bonds(n);
    let b2 = bonds.clone();
    Ok(InteractionFamily::closed_form(l, (0.0, 1.0), move |s| {
        chain_interaction(l, &bonds, j, d0 + d1 * s, mu0 + mu1 * s)
    })
    .with_derivative(move |_| chain_interaction(l, &b2, 0.0, d1, mu1)))
}

fn build_constant(params: &Params) -> Result<InteractionFamily> {
    let n = count(params, "sites", 2)?;
    let l = LatticeSpec::chain(n)?;
    let phi = chain_interaction(l, &chain_bonds(n), params["j"], 0.0, params["mu"]);
    Ok(InteractionFamily::constant(phi, (0.0, 1.0)))
}

fn build_lr_chain(params: &Params) -> Result<InteractionFamily> {
    let n = count(params, "sites", 2)?;
    let l = LatticeSpec::chain(n)?;
    let phi = chain_interaction(l, &chain_bonds(n), params["j"], params["delta"], params["mu"]);
    Ok(InteractionFamily::constant(phi, (0.0, 1.0)))
}

fn build_hopping_2d(params: &Params) -> Result<InteractionFamily> {
    let lx = count(params, "lx", 1)?;
    let ly = count(params, "ly", 1)?;
    let l = LatticeSpec::square(lx, ly)?;
    let mut bonds = Vec::new();
    for x in 0..l.num_sites() {
        let [cx, cy] = l.coords(x);
        for step in [[1, 0], [0, 1]] {
            if let Some(y) = l.site_at([cx + step[0], cy + step[1]]) {
                bonds.push((x, y));
            }
        }
    }
    let (j0, j1, mu) = (params["j0"], params["j1"], params["mu"]);
    let b2 = bonds.clone();
    Ok(InteractionFamily::closed_form(l, (0.0, 1.0), move |s| {
        chain_interaction(l, &bonds, j0 + j1 * s, 0.0, mu)
    })
    .with_derivative(move |_| chain_interaction(l, &b2, j1, 0.0, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_is_sorted_and_complete() {
        let names: Vec<&str> = list_scenarios().iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert!(names.contains(&"kitaev-trivial-path"));
    }

    #[test]
    fn unknown_names_get_suggestions() {
        match find_scenario("kitaev-trivial") {
            Err(Error::UnknownScenario { suggestion, .. }) => {
                assert_eq!(suggestion.as_deref(), Some("kitaev-trivial-path"))
            }
            other => panic!("unexpected {other:?}"),
        }
        let s = find_scenario("hopping-gauge").unwrap();
        let mut bad = Params::new();
        bad.insert("muu".into(), 1.0);
        assert!(s.build(&bad).is_err());
    }

    #[test]
    fn families_have_consistent_derivatives() {
        for s in list_scenarios() {
            if s.experimental {
                continue;
            }
            let fam = s.build(&Params::new()).unwrap();
            assert!(fam.verify_derivative().unwrap() < 1e-6, "{}", s.name);
        }
    }
}
