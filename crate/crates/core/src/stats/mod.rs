//! Cohort statistics: correlation, group tests, effect sizes and FDR control.

pub mod fdr;
pub mod hypothesis;
pub mod protocol;
pub mod synthetic;
pub mod table;

pub use fdr::bh_fdr;
pub use hypothesis::{anova_oneway, quartile_groups, rank, spearman, ttest_ind, ttest_pooled};
pub use protocol::{run_protocol, write_results, ProtocolConfig, StatResult, TestKind};
pub use table::CohortTable;
