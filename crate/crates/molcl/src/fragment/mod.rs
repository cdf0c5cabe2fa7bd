//! Fragment-level structure: retrosynthetic bond cleavage for fragment
//! contrast, and Bemis-Murcko scaffolds for dataset splitting.

pub mod brics;
pub mod murcko;

pub use brics::{
    brics_partition, brics_partition_with, default_rule_table, extract_fragment,
    find_cleavable_bonds, FragmentMap, RuleTable, RuleTableError,
};
pub use murcko::murcko_scaffold;
