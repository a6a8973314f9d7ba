//! Relation harvesting: sources, the frozen snapshot, and per-pair extraction.

pub mod autocomplete;
mod extract;
pub mod generative;
mod snapshot;
mod source;
mod triple_store;

pub use extract::{
    extract_relations, related_entities, Mode, RelationIndex, SourceWarning, WarningKind,
};
pub use snapshot::{QueryDirection, Snapshot, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};
pub use source::{
    build_sources, load_sources, AutocompleteBackend, GenerativeBackend, PairAnswer,
    RelationSource, SourceBackend, SourceKind, SourceSpec, SourcesFile, TripleBackend,
    DEFAULT_RESULT_CAP,
};
pub use triple_store::{humanize_predicate, triple_lookup, Triple, TripleStore};
