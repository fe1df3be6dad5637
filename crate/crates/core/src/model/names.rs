//! Feature groups and the canonical 564-entry imaging feature dictionary.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag carried by every feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureGroup {
    Histogram,
    Shape,
    Orientation,
    Glcm,
    Glszm,
    Glrlm,
    Gldm,
    Ngtdm,
    Lbp,
    Gabor,
    Log,
    Vessel,
    Phase,
    #[serde(rename = "clinical-age")]
    Age,
    #[serde(rename = "clinical-sex")]
    Sex,
    #[serde(rename = "clinical-location")]
    Location,
    /// Selector for the single whole-lesion volume column. Never a column's
    /// primary tag; the volume column is tagged [`FeatureGroup::Shape`].
    Volume,
}

impl FeatureGroup {
    pub const IMAGING: [FeatureGroup; 13] = [
        Self::Histogram,
        Self::Shape,
        Self::Orientation,
        Self::Glcm,
        Self::Glszm,
        Self::Glrlm,
        Self::Gldm,
        Self::Ngtdm,
        Self::Lbp,
        Self::Gabor,
        Self::Log,
        Self::Vessel,
        Self::Phase,
    ];

    pub const CLINICAL: [FeatureGroup; 3] = [Self::Age, Self::Sex, Self::Location];

    /// Groups that can be primary column tags (everything except the volume selector).
    pub const TAGS: [FeatureGroup; 16] = [
        Self::Histogram,
        Self::Shape,
        Self::Orientation,
        Self::Glcm,
        Self::Glszm,
        Self::Glrlm,
        Self::Gldm,
        Self::Ngtdm,
        Self::Lbp,
        Self::Gabor,
        Self::Log,
        Self::Vessel,
        Self::Phase,
        Self::Age,
        Self::Sex,
        Self::Location,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Histogram => "histogram",
            Self::Shape => "shape",
            Self::Orientation => "orientation",
            Self::Glcm => "glcm",
            Self::Glszm => "glszm",
            Self::Glrlm => "glrlm",
            Self::Gldm => "gldm",
            Self::Ngtdm => "ngtdm",
            Self::Lbp => "lbp",
            Self::Gabor => "gabor",
            Self::Log => "log",
            Self::Vessel => "vessel",
            Self::Phase => "phase",
            Self::Age => "age",
            Self::Sex => "sex",
            Self::Location => "location",
            Self::Volume => "volume",
        }
    }

    pub fn is_imaging(self) -> bool {
        Self::IMAGING.contains(&self)
    }

    /// Whether a column with primary tag `tag` and name `name` belongs to this selector.
    pub fn selects(self, tag: FeatureGroup, name: &str) -> bool {
        match self {
            Self::Volume => name == VOLUME_FEATURE,
            g => g == tag,
        }
    }

    /// Parses a comma-separated group list. `imaging` expands to all 13
    /// imaging families, `clinical` to age/sex/location, `all` to both.
    pub fn parse_list(s: &str) -> Result<Vec<FeatureGroup>> {
        let mut out: Vec<FeatureGroup> = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let add: Vec<FeatureGroup> = match tok {
                "imaging" => Self::IMAGING.to_vec(),
                "clinical" => Self::CLINICAL.to_vec(),
                "all" => Self::TAGS.to_vec(),
                t => vec![t.parse()?],
            };
            for g in add {
                if !out.contains(&g) {
                    out.push(g);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::invalid("empty feature group list"));
        }
        Ok(out)
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let g = match s.to_ascii_lowercase().as_str() {
            "histogram" | "intensity" => Self::Histogram,
            "shape" => Self::Shape,
            "orientation" => Self::Orientation,
            "glcm" => Self::Glcm,
            "glszm" => Self::Glszm,
            "glrlm" => Self::Glrlm,
            "gldm" => Self::Gldm,
            "ngtdm" => Self::Ngtdm,
            "lbp" => Self::Lbp,
            "gabor" => Self::Gabor,
            "log" => Self::Log,
            "vessel" => Self::Vessel,
            "phase" | "local-phase" => Self::Phase,
            "age" | "clinical-age" => Self::Age,
            "sex" | "clinical-sex" => Self::Sex,
            "location" | "clinical-location" => Self::Location,
            "volume" => Self::Volume,
            other => return Err(Error::invalid(format!("unknown feature group `{other}`"))),
        };
        Ok(g)
    }
}

/// First-order statistic names, in output order.
pub const STAT_NAMES: [&str; 13] = [
    "min",
    "max",
    "mean",
    "median",
    "std",
    "skewness",
    "kurtosis",
    "peak",
    "peak_position",
    "range",
    "energy",
    "quartile_range",
    "entropy",
];

/// Column selected by the `volume` group.
pub const VOLUME_FEATURE: &str = "sf_volume_total";

pub const SHAPE_SLICE_DESCRIPTORS: [&str; 8] = [
    "compactness",
    "rad_dist",
    "roughness",
    "convexity",
    "cvar",
    "prax",
    "evar",
    "solidity",
];

pub const GLCM_FEATURES: [&str; 6] = [
    "contrast",
    "dissimilarity",
    "homogeneity",
    "ASM",
    "energy",
    "correlation",
];
pub const GLCM_DISTANCES: [usize; 2] = [1, 3];
/// Angles in degrees; names carry radians with two decimals.
pub const GLCM_ANGLES: [u32; 4] = [0, 45, 90, 135];

pub const GLSZM_FEATURES: [&str; 16] = [
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelZoneEmphasis",
    "LargeAreaEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LowGrayLevelZoneEmphasis",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "SmallAreaEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "ZoneEntropy",
    "ZonePercentage",
    "ZoneVariance",
];

pub const GLRLM_FEATURES: [&str; 16] = [
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelRunEmphasis",
    "LongRunEmphasis",
    "LongRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LowGrayLevelRunEmphasis",
    "RunEntropy",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "RunVariance",
    "ShortRunEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "ShortRunLowGrayLevelEmphasis",
];

pub const GLDM_FEATURES: [&str; 14] = [
    "DependenceEntropy",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "DependenceVariance",
    "GrayLevelNonUniformity",
    "GrayLevelVariance",
    "HighGrayLevelEmphasis",
    "LargeDependenceEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LowGrayLevelEmphasis",
    "SmallDependenceEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
];

pub const NGTDM_FEATURES: [&str; 5] = ["Busyness", "Coarseness", "Complexity", "Contrast", "Strength"];

/// `(radius, neighbours)` pairs.
pub const LBP_PARAMS: [(usize, usize); 3] = [(1, 8), (2, 12), (3, 16)];
pub const GABOR_FREQUENCIES: [f64; 3] = [0.05, 0.2, 0.5];
pub const GABOR_ANGLES: [u32; 4] = [0, 45, 90, 135];
pub const LOG_SIGMAS: [f64; 3] = [1.0, 5.0, 10.0];
pub const VESSEL_REGIONS: [&str; 3] = ["full", "edge", "inner"];
pub const VESSEL_SUFFIX: &str = "SR(1.0. 10.0)_SS2.0";
pub const PHASE_IMAGES: [&str; 3] = ["monogenic", "phasecong", "phasesym"];

pub(crate) fn radians_label(deg: u32) -> String {
    let r = (deg as f64).to_radians();
    if deg == 0 {
        "0.0".to_string()
    } else {
        format!("{r:.2}")
    }
}

/// One entry of the canonical dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub group: FeatureGroup,
}

fn build() -> Vec<FeatureSpec> {
    let mut out = Vec::with_capacity(564);
    let mut push = |group: FeatureGroup, name: String| out.push(FeatureSpec { name, group });

    for s in STAT_NAMES {
        push(FeatureGroup::Histogram, format!("hf_{s}"));
    }

    for d in SHAPE_SLICE_DESCRIPTORS {
        push(FeatureGroup::Shape, format!("sf_{d}_avg_2D"));
        push(FeatureGroup::Shape, format!("sf_{d}_std_2D"));
    }
    for a in ["avg", "std", "min", "max"] {
        push(FeatureGroup::Shape, format!("sf_area_{a}_2D"));
    }
    push(FeatureGroup::Shape, VOLUME_FEATURE.to_string());
    for s in [
        "MeshVolume",
        "VoxelVolume",
        "Elongation",
        "Flatness",
        "LeastAxisLength",
        "MajorAxisLength",
        "MinorAxisLength",
        "Maximum3DDiameter",
        "Maximum2DDiameterRow",
        "Maximum2DDiameterColumn",
        "Maximum2DDiameterSlice",
        "Sphericity",
        "SurfaceArea",
        "SurfaceVolumeRatio",
    ] {
        push(FeatureGroup::Shape, format!("sf_shape_{s}"));
    }

    for s in [
        "theta_x",
        "theta_y",
        "theta_z",
        "COM_Index_x",
        "COM_Index_y",
        "COM_Index_z",
        "COM_x",
        "COM_y",
        "COM_z",
    ] {
        push(FeatureGroup::Orientation, format!("of_{s}"));
    }

    for f in GLCM_FEATURES {
        for d in GLCM_DISTANCES {
            for a in GLCM_ANGLES {
                let tail = format!("{f}d{d}.0A{}", radians_label(a));
                push(FeatureGroup::Glcm, format!("tf_GLCM_{tail}"));
                push(FeatureGroup::Glcm, format!("tf_GLCMMS_{tail}mean"));
                push(FeatureGroup::Glcm, format!("tf_GLCMMS_{tail}std"));
            }
        }
    }

    for f in GLSZM_FEATURES {
        push(FeatureGroup::Glszm, format!("tf_GLSZM_{f}"));
    }
    for f in GLRLM_FEATURES {
        push(FeatureGroup::Glrlm, format!("tf_GLRLM_{f}"));
    }
    for f in GLDM_FEATURES {
        push(FeatureGroup::Gldm, format!("tf_GLDM_{f}"));
    }
    for f in NGTDM_FEATURES {
        push(FeatureGroup::Ngtdm, format!("tf_NGTDM_{f}"));
    }

    for (r, p) in LBP_PARAMS {
        for s in STAT_NAMES {
            push(FeatureGroup::Lbp, format!("tf_LBP_{s}_R{r}_P{p}"));
        }
    }
    for f in GABOR_FREQUENCIES {
        for a in GABOR_ANGLES {
            for s in STAT_NAMES {
                push(
                    FeatureGroup::Gabor,
                    format!("tf_Gabor_{s}_F{f}_A{}", radians_label(a)),
                );
            }
        }
    }
    for sigma in LOG_SIGMAS {
        for s in STAT_NAMES {
            push(FeatureGroup::Log, format!("logf_{s}_sigma{sigma:.0}"));
        }
    }
    for region in VESSEL_REGIONS {
        for s in STAT_NAMES {
            push(
                FeatureGroup::Vessel,
                format!("vf_Frangi_{region}_{s}_{VESSEL_SUFFIX}"),
            );
        }
    }
    for img in PHASE_IMAGES {
        for s in STAT_NAMES {
            push(FeatureGroup::Phase, format!("phasef_{img}_{s}"));
        }
    }
    out
}

/// The ordered imaging feature dictionary.
pub fn canonical_features() -> &'static [FeatureSpec] {
    static DICT: OnceLock<Vec<FeatureSpec>> = OnceLock::new();
    DICT.get_or_init(build)
}

pub fn canonical_feature_names() -> Vec<String> {
    canonical_features().iter().map(|f| f.name.clone()).collect()
}

/// Number of canonical columns per imaging family, in dictionary order.
pub fn family_counts() -> Vec<(FeatureGroup, usize)> {
    FeatureGroup::IMAGING
        .iter()
        .map(|&g| {
            (
                g,
                canonical_features().iter().filter(|f| f.group == g).count(),
            )
        })
        .collect()
}

pub const CLINICAL_AGE: &str = "clinical_age";
pub const CLINICAL_SEX: &str = "clinical_sex";
pub const CLINICAL_LOCATION_PREFIX: &str = "clinical_location_";

/// Group tag for any column name: canonical lookup first, then clinical prefixes.
pub fn group_of(name: &str) -> Option<FeatureGroup> {
    static INDEX: OnceLock<std::collections::HashMap<&'static str, FeatureGroup>> =
        OnceLock::new();
    let idx = INDEX.get_or_init(|| {
        canonical_features()
            .iter()
            .map(|f| (f.name.as_str(), f.group))
            .collect()
    });
    if let Some(&g) = idx.get(name) {
        return Some(g);
    }
    if name == CLINICAL_AGE {
        Some(FeatureGroup::Age)
    } else if name == CLINICAL_SEX {
        Some(FeatureGroup::Sex)
    } else if name.starts_with(CLINICAL_LOCATION_PREFIX) {
        Some(FeatureGroup::Location)
    } else {
        None
    }
}
