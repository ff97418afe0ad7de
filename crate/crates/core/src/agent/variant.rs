use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Capacity of the uniform buffer used by the non-prioritized variants.
pub const UNIFORM_CAPACITY: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "WIN1")]
    Win1,
    #[serde(rename = "WIN4")]
    Win4,
    #[serde(rename = "WIN8")]
    Win8,
    #[serde(rename = "MS2")]
    Ms2,
    #[serde(rename = "MS3")]
    Ms3,
    #[serde(rename = "MS4")]
    Ms4,
    #[serde(rename = "PER40k")]
    Per40k,
    #[serde(rename = "PER1M")]
    Per1m,
    #[serde(rename = "LSTM4")]
    Lstm4,
    #[serde(rename = "LSTM8")]
    Lstm8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Window,
    MultiStep,
    Prioritized,
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferKind {
    Uniform(usize),
    Prioritized(usize),
}

impl Variant {
    pub const ALL: [Variant; 10] = [
        Variant::Win1,
        Variant::Win4,
        Variant::Win8,
        Variant::Ms2,
        Variant::Ms3,
        Variant::Ms4,
        Variant::Per40k,
        Variant::Per1m,
        Variant::Lstm4,
        Variant::Lstm8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Win1 => "WIN1",
            Variant::Win4 => "WIN4",
            Variant::Win8 => "WIN8",
            Variant::Ms2 => "MS2",
            Variant::Ms3 => "MS3",
            Variant::Ms4 => "MS4",
            Variant::Per40k => "PER40k",
            Variant::Per1m => "PER1M",
            Variant::Lstm4 => "LSTM4",
            Variant::Lstm8 => "LSTM8",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Variant::Win1 | Variant::Win4 | Variant::Win8 => Family::Window,
            Variant::Ms2 | Variant::Ms3 | Variant::Ms4 => Family::MultiStep,
            Variant::Per40k | Variant::Per1m => Family::Prioritized,
            Variant::Lstm4 | Variant::Lstm8 => Family::Recurrent,
        }
    }

    /// Observations per network input.
    pub fn window(self) -> usize {
        match self {
            Variant::Win4 | Variant::Lstm4 => 4,
            Variant::Win8 | Variant::Lstm8 => 8,
            _ => 1,
        }
    }

    /// Rewards accumulated before bootstrapping.
    pub fn nstep(self) -> usize {
        match self {
            Variant::Ms2 => 2,
            Variant::Ms3 => 3,
            Variant::Ms4 => 4,
            _ => 1,
        }
    }

    pub fn buffer(self) -> BufferKind {
        match self {
            Variant::Per40k => BufferKind::Prioritized(40_000),
            Variant::Per1m => BufferKind::Prioritized(1_000_000),
            _ => BufferKind::Uniform(UNIFORM_CAPACITY),
        }
    }

    pub fn is_recurrent(self) -> bool {
        self.family() == Family::Recurrent
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant '{s}'"))
    }
}
