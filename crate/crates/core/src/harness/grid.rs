//! Named scenario grids.

use super::config::Preset;
use crate::datagen::{CovarianceSpec, CovarianceStructure, Design, Placement, ScenarioSpec, SNR_GRID};

pub const DESK_REPLICATIONS: usize = 20;
pub const DESK_BSS_BUDGET_MS: u64 = 1000;
pub const DESK_TAU: f64 = 1.22;
pub const SEMISYNTHETIC_TAUS: [f64; 3] = [0.42, 1.22, 3.52];
pub const BLOCK_SIZE: usize = 10;
pub const TRUE_SUPPORT_SIZE: usize = 10;

/// `(label, n, p)` of the three synthetic dimension regimes.
pub const DIMENSIONS: [(&str, usize, usize); 3] = [("low", 1000, 100), ("high", 100, 1000), ("mid", 500, 500)];

/// `(label, n, p)` of the two semi-synthetic regimes.
pub const SEMI_DIMENSIONS: [(&str, usize, usize); 2] = [("semi-low", 594, 100), ("semi-high", 100, 1000)];

const RHOS: [f64; 2] = [0.35, 0.7];

/// The nine correlation/position cells: identity, then Toeplitz and block
/// for each ρ and both placements.
pub fn correlation_cells() -> Vec<(CovarianceSpec, Placement)> {
    let mut cells = vec![(CovarianceSpec::identity(), Placement::Consecutive)];
    for cov in [CovarianceStructure::Toeplitz, CovarianceStructure::Block] {
        for rho in RHOS {
            for placement in [Placement::Consecutive, Placement::Equispaced] {
                let spec = match cov {
                    CovarianceStructure::Toeplitz => CovarianceSpec::toeplitz(rho),
                    _ => CovarianceSpec::block(rho, BLOCK_SIZE),
                };
                cells.push((spec, placement));
            }
        }
    }
    cells
}

/// Identifier such as `low-block0.70-consecutive-tau0.42` or
/// `high-identity-tau6.00`.
pub fn scenario_id(dim: &str, cov: &CovarianceSpec, placement: Placement, tau: f64) -> String {
    match cov.structure {
        CovarianceStructure::Identity => format!("{dim}-identity-tau{tau:.2}"),
        s => {
            let name = if s == CovarianceStructure::Toeplitz { "toeplitz" } else { "block" };
            let pos = match placement {
                Placement::Consecutive => "consecutive",
                Placement::Equispaced => "equispaced",
            };
            format!("{dim}-{name}{:.2}-{pos}-tau{tau:.2}", cov.rho)
        }
    }
}

/// Synthetic scenario in one of the [`DIMENSIONS`] regimes.
pub fn synthetic_scenario(
    dim: &str,
    cov: CovarianceSpec,
    placement: Placement,
    tau: f64,
    replications: usize,
) -> ScenarioSpec {
    let &(_, n, p) = DIMENSIONS
        .iter()
        .find(|d| d.0 == dim)
        .unwrap_or_else(|| panic!("unknown dimension regime {dim}"));
    ScenarioSpec {
        scenario_id: scenario_id(dim, &cov, placement, tau),
        n,
        p,
        tau,
        replications,
        design: Design::Synthetic {
            covariance: cov,
            placement,
            s: TRUE_SUPPORT_SIZE,
            value: 1.0,
        },
    }
}

/// Scenario list of a named preset; empty for [`Preset::Custom`].
pub fn enumerate_grid(preset: Preset, replications: usize) -> Vec<ScenarioSpec> {
    match preset {
        Preset::SyntheticFull => {
            let mut out = Vec::with_capacity(270);
            for (dim, _, _) in DIMENSIONS {
                for (cov, placement) in correlation_cells() {
                    for tau in SNR_GRID {
                        out.push(synthetic_scenario(dim, cov, placement, tau, replications));
                    }
                }
            }
            out
        }
        Preset::SemiSynthetic => SEMI_DIMENSIONS
            .iter()
            .flat_map(|&(dim, n, p)| {
                SEMISYNTHETIC_TAUS.iter().map(move |&tau| ScenarioSpec {
                    scenario_id: format!("{dim}-tau{tau:.2}"),
                    n,
                    p,
                    tau,
                    replications,
                    design: Design::SemiSynthetic,
                })
            })
            .collect(),
        Preset::Desk => vec![
            synthetic_scenario("high", CovarianceSpec::block(0.35, BLOCK_SIZE), Placement::Equispaced, DESK_TAU, replications),
            synthetic_scenario("high", CovarianceSpec::toeplitz(0.7), Placement::Consecutive, DESK_TAU, replications),
            synthetic_scenario("low", CovarianceSpec::block(0.7, BLOCK_SIZE), Placement::Equispaced, DESK_TAU, replications),
            synthetic_scenario("low", CovarianceSpec::block(0.7, BLOCK_SIZE), Placement::Consecutive, DESK_TAU, replications),
        ],
        Preset::Custom => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn full_grid_has_270_distinct_valid_scenarios() {
        let grid = enumerate_grid(Preset::SyntheticFull, 100);
        assert_eq!(grid.len(), 270);
        let ids: HashSet<_> = grid.iter().map(|s| s.scenario_id.as_str()).collect();
        assert_eq!(ids.len(), 270);
        for s in &grid {
            s.validate().unwrap();
        }
        assert!(ids.contains("low-block0.70-consecutive-tau0.42"));
        assert!(ids.contains("mid-toeplitz0.35-equispaced-tau0.05"));
        assert!(ids.contains("high-identity-tau6.00"));
        assert_eq!(grid.iter().filter(|s| s.n == 500 && s.p == 500).count(), 90);
    }

    #[test]
    fn semisynthetic_and_desk_grids() {
        let semi = enumerate_grid(Preset::SemiSynthetic, 100);
        assert_eq!(semi.len(), 6);
        assert_eq!(semi[0].scenario_id, "semi-low-tau0.42");
        assert_eq!((semi[0].n, semi[0].p), (594, 100));
        assert_eq!((semi[5].n, semi[5].p), (100, 1000));
        let desk = enumerate_grid(Preset::Desk, 20);
        let ids: Vec<_> = desk.iter().map(|s| s.scenario_id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "high-block0.35-equispaced-tau1.22",
                "high-toeplitz0.70-consecutive-tau1.22",
                "low-block0.70-equispaced-tau1.22",
                "low-block0.70-consecutive-tau1.22"
            ]
        );
        assert!(enumerate_grid(Preset::Custom, 1).is_empty());
    }
}
