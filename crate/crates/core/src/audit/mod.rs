//! Fairness audits: group metrics, subgroup scanning, counterfactual
//! consistency, Lipschitz ratios, and BISG race proxies.

pub mod bisg;
pub mod consistency;
pub mod group;
pub mod lipschitz;
pub mod subgroup;

pub use bisg::{bisg_proxy, RaceProxyPosterior, RaceTable};
pub use consistency::counterfactual_consistency;
pub use group::{
    demographic_parity, equal_odds, equal_opportunity, prediction_rate_parity, GroupReport,
    GroupVector,
};
pub use lipschitz::{lipschitz_ratio_audit, LipschitzReport};
pub use subgroup::{enumerate_subgroups, subgroup_scan, SubgroupFinding};
