// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! Counter-based random streams and the θ preparation distribution.
//!
//! Every random draw in a run comes from its own ChaCha stream keyed by
//! `(seed, node, step, tag)`, so results do not depend on evaluation order or
//! on which backend asked for them.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Purpose of a draw. Distinct tags give independent streams for the same
/// node and step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    Theta,
    Mixing,
    ShotsX,
    ShotsY,
    ShotsZ,
    Eve,
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Theta => 1,
            StreamTag::Mixing => 2,
            StreamTag::ShotsX => 3,
            StreamTag::ShotsY => 4,
            StreamTag::ShotsZ => 5,
            StreamTag::Eve => 6,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one `(node, step, tag)` cell of a seeded run.
pub fn stream(seed: u64, node: u64, step: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = splitmix(splitmix(splitmix(node) ^ step) ^ tag.code());
    rng.set_stream(id);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("theta range must satisfy 0 < lo < hi < π, got ({lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error("fixed theta {0} outside (0, π)")]
    BadFixed(f64),
}

/// Distribution of the polar preparation angle θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaDistribution {
    Uniform { lo: f64, hi: f64 },
    Fixed { theta: f64 },
}

impl Default for ThetaDistribution {
    fn default() -> Self {
        ThetaDistribution::Uniform {
            lo: 0.2,
            hi: PI - 0.2,
        }
    }
}

impl ThetaDistribution {
    /// The equatorial preparation of the legacy scheme.
    pub const EQUATOR: ThetaDistribution = ThetaDistribution::Fixed { theta: FRAC_PI_2 };

    /// Uniform on the open interval `(0, π)`. Only usable for analysis: a draw
    /// can land arbitrarily close to a pole.
    pub const FULL_RANGE: ThetaDistribution = ThetaDistribution::Uniform { lo: 0.0, hi: PI };

    /// Checks the protocol range `0 < lo < hi < π`.
    pub fn validate(&self) -> Result<(), DistributionError> {
        match *self {
            ThetaDistribution::Uniform { lo, hi } => {
                if lo > 0.0 && lo < hi && hi < PI {
                    Ok(())
                } else {
                    Err(DistributionError::BadRange { lo, hi })
                }
            }
            ThetaDistribution::Fixed { theta } => {
                if theta > 0.0 && theta < PI {
                    Ok(())
                } else {
                    Err(DistributionError::BadFixed(theta))
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ThetaDistribution::Uniform { lo, hi } => {
                // open interval: resample the (measure-zero) endpoints
                loop {
                    let t = lo + (hi - lo) * rng.random::<f64>();
                    if t > lo && t < hi {
                        return t;
                    }
                }
            }
            ThetaDistribution::Fixed { theta } => theta,
        }
    }

    /// `E[sin θ]`.
    pub fn mean_sin(&self) -> f64 {
        match *self {
            ThetaDistribution::Uniform { lo, hi } => (lo.cos() - hi.cos()) / (hi - lo),
            ThetaDistribution::Fixed { theta } => theta.sin(),
        }
    }

    /// `E[cos θ]`.
    pub fn mean_cos(&self) -> f64 {
        match *self {
            ThetaDistribution::Uniform { lo, hi } => (hi.sin() - lo.sin()) / (hi - lo),
            ThetaDistribution::Fixed { theta } => theta.cos(),
        }
    }

    /// Smallest possible `sin θ`, i.e. the worst-case coherence of a fresh
    /// pure preparation.
    pub fn min_sin(&self) -> f64 {
        match *self {
            ThetaDistribution::Uniform { lo, hi } => lo.sin().min(hi.sin()),
            ThetaDistribution::Fixed { theta } => theta.sin(),
        }
    }
}
