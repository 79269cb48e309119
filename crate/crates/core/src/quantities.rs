//! Scalar quantities with fixed canonical units and dB/linear conversions.
//!
//! All arithmetic inside the engine runs in linear SI units. Decibel values only
//! appear at API and file boundaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DENSITY_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantityError {
    #[error("{what} must be {constraint}, got {value}")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },
}

fn check(what: &'static str, constraint: &'static str, ok: bool, value: f64) -> Result<(), QuantityError> {
    if ok {
        Ok(())
    } else {
        Err(QuantityError::Domain {
            what,
            constraint,
            value,
        })
    }
}

/// A value on the decibel scale (10·log10 of a power ratio).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decibel(pub f64);

/// A strictly positive dimensionless power ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearRatio(f64);

impl LinearRatio {
    pub fn new(value: f64) -> Result<Self, QuantityError> {
        check("linear ratio", "finite and > 0", value.is_finite() && value > 0.0, value)?;
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Decibel {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }
}

impl std::ops::Add for Decibel {
    type Output = Decibel;
    fn add(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Decibel {
    type Output = Decibel;
    fn sub(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 - rhs.0)
    }
}

/// 10·log10(r).
pub fn db_from_linear(r: LinearRatio) -> Decibel {
    Decibel(10.0 * r.0.log10())
}

/// Fallible variant for raw ratios; non-positive input is a domain error.
pub fn db_from_ratio(r: f64) -> Result<Decibel, QuantityError> {
    LinearRatio::new(r).map(db_from_linear)
}

pub fn linear_from_db(db: Decibel) -> LinearRatio {
    LinearRatio(db.to_linear())
}

/// Power referenced to 1 mW.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(f64);

impl PowerDbm {
    pub fn new(value: f64) -> Result<Self, QuantityError> {
        check("power", "finite", value.is_finite(), value)?;
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn from_watts(watts: f64) -> Result<Self, QuantityError> {
        check("power in watts", "finite and > 0", watts.is_finite() && watts > 0.0, watts)?;
        Ok(Self(10.0 * watts.log10() + 30.0))
    }

    pub fn watts(self) -> f64 {
        dbm_to_watts(self)
    }
}

/// 10^((p − 30)/10).
pub fn dbm_to_watts(p: PowerDbm) -> f64 {
    10f64.powf((p.0 - 30.0) / 10.0)
}

macro_rules! positive_quantity {
    ($(#[$meta:meta])* $name:ident, $what:literal, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(f64);

        impl $name {
            #[doc = concat!("Value in ", $unit, "; must be finite and strictly positive.")]
            pub fn new(value: f64) -> Result<Self, QuantityError> {
                check($what, "finite and > 0", value.is_finite() && value > 0.0, value)?;
                Ok(Self(value))
            }

            pub fn value(self) -> f64 {
                self.0
            }
        }
    };
}

positive_quantity!(
    /// Carrier frequency in Hz.
    Frequency, "frequency", "Hz");
positive_quantity!(
    /// Occupied (aggregate) bandwidth in Hz.
    Bandwidth, "bandwidth", "Hz");
positive_quantity!(
    /// Time span in seconds.
    Duration, "duration", "s");

/// Non-negative distance in metres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distance(f64);

impl Distance {
    pub fn new(value: f64) -> Result<Self, QuantityError> {
        check("distance", "finite and >= 0", value.is_finite() && value >= 0.0, value)?;
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Plane angle, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn from_radians(rad: f64) -> Self {
        Self(rad)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

/// c/f.
pub fn wavelength(f: Frequency) -> Distance {
    Distance(SPEED_OF_LIGHT / f.0)
}
