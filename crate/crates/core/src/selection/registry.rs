//! Named selection strategies behind a common trait.

use crate::error::{Error, Result};
use crate::model::SystemParams;

use super::{
    best_harmonic_mean_select, best_worst_channel_select, direct_is_feasible, is_admissible,
    min_energy_select, validate_all, CandidateRelay, SelectionDecision,
};

/// Everything a selector sees for one source–destination pair.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub candidates: &'a [CandidateRelay],
    pub h_direct: f64,
    pub zeta: f64,
    pub rate_r: f64,
    pub params: &'a SystemParams,
}

pub trait RelaySelector: Send + Sync {
    fn name(&self) -> &'static str;

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<SelectionDecision>;
}

/// Minimum Energy Criterion with the direct-link comparison.
#[derive(Debug, Default, Clone, Copy)]
pub struct MinEnergySelector;

impl RelaySelector for MinEnergySelector {
    fn name(&self) -> &'static str {
        "judrs"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<SelectionDecision> {
        min_energy_select(ctx.candidates, ctx.h_direct, ctx.zeta, ctx.rate_r, ctx.params)
    }
}

/// Channel-only rules never compare with the direct link; they fall back to it
/// only when no relay is admissible.
fn select_by_rule(
    ctx: &SelectionContext<'_>,
    rule: fn(&[CandidateRelay]) -> Result<usize>,
) -> Result<SelectionDecision> {
    validate_all(ctx.candidates, ctx.h_direct, ctx.zeta, ctx.rate_r)?;
    let admissible: Vec<CandidateRelay> = ctx
        .candidates
        .iter()
        .copied()
        .filter(|c| is_admissible(c, ctx.h_direct, ctx.rate_r, ctx.params))
        .collect();
    match rule(&admissible) {
        Ok(index) => {
            let c = admissible.iter().find(|c| c.index == index).expect("rule returns a member");
            SelectionDecision::cooperative(c, ctx.h_direct, ctx.zeta, ctx.rate_r, ctx.params)
        }
        Err(Error::EmptyCandidates) => {
            if direct_is_feasible(ctx.h_direct, ctx.rate_r, ctx.params)? {
                SelectionDecision::direct(ctx.h_direct, ctx.zeta, ctx.rate_r, ctx.params)
            } else {
                Ok(SelectionDecision::infeasible())
            }
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct BestWorstChannelSelector;

impl RelaySelector for BestWorstChannelSelector {
    fn name(&self) -> &'static str {
        "best-worst"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<SelectionDecision> {
        select_by_rule(ctx, best_worst_channel_select)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct BestHarmonicMeanSelector;

impl RelaySelector for BestHarmonicMeanSelector {
    fn name(&self) -> &'static str {
        "best-harmonic"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<SelectionDecision> {
        select_by_rule(ctx, best_harmonic_mean_select)
    }
}

/// Selectors in registration order.
#[derive(Default)]
pub struct SelectorRegistry {
    entries: Vec<Box<dyn RelaySelector>>,
}

impl SelectorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        r.register(Box::new(MinEnergySelector)).unwrap();
        r.register(Box::new(BestWorstChannelSelector)).unwrap();
        r.register(Box::new(BestHarmonicMeanSelector)).unwrap();
        r
    }

    pub fn register(&mut self, selector: Box<dyn RelaySelector>) -> Result<()> {
        if self.get(selector.name()).is_some() {
            return Err(Error::Registry(format!(
                "selector '{}' is already registered",
                selector.name()
            )));
        }
        self.entries.push(selector);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn RelaySelector> {
        self.entries.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    /// Like [`get`](Self::get) but with an error listing the known names.
    pub fn require(&self, name: &str) -> Result<&dyn RelaySelector> {
        self.get(name).ok_or_else(|| {
            Error::Registry(format!(
                "unknown selector '{name}' (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

impl std::fmt::Debug for SelectorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed;

    impl RelaySelector for Fixed {
        fn name(&self) -> &'static str {
            "judrs"
        }
        fn select(&self, _: &SelectionContext<'_>) -> Result<SelectionDecision> {
            Ok(SelectionDecision::infeasible())
        }
    }

    #[test]
    fn defaults_are_registered_in_order() {
        let r = SelectorRegistry::with_defaults();
        assert_eq!(r.names(), vec!["judrs", "best-worst", "best-harmonic"]);
        assert!(r.get("nope").is_none());
        assert!(r.require("nope").is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut r = SelectorRegistry::with_defaults();
        assert!(matches!(r.register(Box::new(Fixed)), Err(Error::Registry(_))));
    }

    #[test]
    fn baseline_skips_inadmissible_relay() {
        let p = SystemParams::reference();
        let cands = [
            // Best worst-hop on paper, but the MS cannot reach it.
            CandidateRelay { index: 0, h1: 1e-16, h2: 1e-9 },
            CandidateRelay { index: 1, h1: 2e-11, h2: 2e-11 },
        ];
        let ctx = SelectionContext {
            candidates: &cands,
            h_direct: 1e-20,
            zeta: 0.5,
            rate_r: 3.0,
            params: &p,
        };
        let r = SelectorRegistry::with_defaults();
        for name in r.names() {
            let d = r.get(name).unwrap().select(&ctx).unwrap();
            assert_eq!(d.relay_index, Some(1), "{name}");
            assert!(d.is_cooperative());
        }
    }
}
