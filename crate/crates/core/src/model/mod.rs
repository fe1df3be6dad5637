//! Domain types, the feature dictionary, and file I/O.

pub mod metaimage;
pub mod names;
pub mod patient;
pub mod table;
pub mod volume;

pub use metaimage::{read_header, read_image, read_mask, write_image, write_mask, ElementType};
pub use names::{canonical_feature_names, canonical_features, FeatureGroup, FeatureSpec};
pub use patient::{clinical_table, read_manifest, write_manifest, PatientRecord, Sex};
pub use table::{read_feature_table, write_feature_table, FeatureTable};
pub use volume::{pair, Dims, ImageVolume, Paired, RoiMask, Spacing};
