//! The reference models shipped in `models/`, embedded at compile time.

use crate::model::{parse_model, Model};

pub const E1: &str = include_str!("../../../models/e1.toml");
pub const E3: &str = include_str!("../../../models/e3.toml");
pub const E4: &str = include_str!("../../../models/e4.toml");
pub const INVALID_BOUNDS: &str = include_str!("../../../models/invalid_bounds.toml");
pub const INVALID_DRIFT: &str = include_str!("../../../models/invalid_drift.toml");
pub const INVALID_PI_MEAN: &str = include_str!("../../../models/invalid_pi_mean.toml");

/// `(name, source)` for every shipped model.
pub const ALL: [(&str, &str); 6] = [
    ("e1", E1),
    ("e3", E3),
    ("e4", E4),
    ("invalid_bounds", INVALID_BOUNDS),
    ("invalid_drift", INVALID_DRIFT),
    ("invalid_pi_mean", INVALID_PI_MEAN),
];

fn load(text: &str) -> Model {
    parse_model(text).expect("shipped model parses")
}

pub fn e1() -> Model {
    load(E1)
}

pub fn e3() -> Model {
    load(E3)
}

pub fn e4() -> Model {
    load(E4)
}

pub fn bad_bounds() -> Model {
    load(INVALID_BOUNDS)
}

pub fn bad_drift() -> Model {
    load(INVALID_DRIFT)
}

pub fn bad_pi_mean() -> Model {
    load(INVALID_PI_MEAN)
}
