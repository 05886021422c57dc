//! Experiment configs and schemas compiled into the binary.

pub const CONFIG_NAMES: &[&str] = &[
    "synthetic_split_rf",
    "synthetic_split_gamma",
    "synthetic_oob_rf",
    "synthetic_table6",
    "mtpl_surrogate",
    "crop_surrogate",
    "gamma_simulation",
];

pub fn config(name: &str) -> Option<&'static str> {
    Some(match name {
        "synthetic_split_rf" => include_str!("../configs/synthetic_split_rf.toml"),
        "synthetic_split_gamma" => include_str!("../configs/synthetic_split_gamma.toml"),
        "synthetic_oob_rf" => include_str!("../configs/synthetic_oob_rf.toml"),
        "synthetic_table6" => include_str!("../configs/synthetic_table6.toml"),
        "mtpl_surrogate" => include_str!("../configs/mtpl_surrogate.toml"),
        "crop_surrogate" => include_str!("../configs/crop_surrogate.toml"),
        "gamma_simulation" => include_str!("../configs/gamma_simulation.toml"),
        _ => return None,
    })
}

pub const MTPL_SCHEMA: &str = include_str!("../schemas/mtpl.toml");
pub const CROP_SCHEMA: &str = include_str!("../schemas/crop.toml");

/// Bundled schema text by name (`mtpl` or `crop`).
pub fn schema(name: &str) -> Option<&'static str> {
    match name {
        "mtpl" => Some(MTPL_SCHEMA),
        "crop" => Some(CROP_SCHEMA),
        _ => None,
    }
}
