//! The generalized disordered model and its concrete builders.

mod builders;
mod family;
mod features;
mod instance;

pub use builders::{
    build_ea, build_ea_keyed, build_generalized, build_generalized_keyed, build_pspin, build_pspin_keyed, build_rfim,
    build_rfim_keyed, build_sk, build_sk_keyed,
};
pub use family::{DisorderMode, ModelFamily, ModelSpec, Params};
pub use features::{combinations, lattice_edges, probe_configurations, ConfigFn, Feature, FeatureSet};
pub use instance::{
    BaseWeights, DisorderKey, DisorderRealization, Interaction, ModelInstance, ModelKind, SELF_OVERLAP_TOLERANCE,
};
