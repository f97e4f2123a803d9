//! Interface mapping: charts per tree, one interaction per choice node, and
//! a layout tree, with random sampling and exhaustive or beam search over
//! the candidates.

mod analysis;
mod candidates;
mod layout;
mod space;
mod spec;
mod validate;

pub use analysis::{
    analyze, template_items, ColumnKind, OutputColumn, Slot, SlotTarget, SourceColumn,
    TreeAnalysis, MULTI_ITEM_CAP,
};
pub use candidates::{
    candidate_vis_interactions, candidate_visualizations, candidate_widgets, chart_encodings,
    chart_events, pan_zoom_candidates, vis_id, VisCandidate,
};
pub use layout::{
    assign_layout, best_layout_index, layout_candidate, layout_candidates, layout_count, overflow,
    LAYOUT_ENUM_MAX,
};
pub use space::{
    best_mapping, complete_binding, default_binding, sample_mapping, Choice, MappingSpace, Part,
    Unit, BEAM_WIDTH, COMPLETE_SEARCH_CAP,
};
pub use spec::*;
pub use validate::{validate_spec, Invalid};
