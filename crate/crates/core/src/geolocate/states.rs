use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// U.S. Census Bureau region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Northeast,
    Midwest,
    South,
    West,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Northeast,
        Region::Midwest,
        Region::South,
        Region::West,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Northeast => "Northeast",
            Region::Midwest => "Midwest",
            Region::South => "South",
            Region::West => "West",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Region::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown census region '{t}'"))
    }
}

struct StateInfo {
    code: &'static str,
    name: &'static str,
    region: Region,
}

macro_rules! states {
    ($(($code:literal, $name:literal, $region:ident)),* $(,)?) => {
        const STATES: &[StateInfo] = &[
            $(StateInfo { code: $code, name: $name, region: Region::$region }),*
        ];
    };
}

// Sorted by code; `StateCode` ordering follows this table.
states![
    ("AK", "Alaska", West),
    ("AL", "Alabama", South),
    ("AR", "Arkansas", South),
    ("AZ", "Arizona", West),
    ("CA", "California", West),
    ("CO", "Colorado", West),
    ("CT", "Connecticut", Northeast),
    ("DC", "District of Columbia", South),
    ("DE", "Delaware", South),
    ("FL", "Florida", South),
    ("GA", "Georgia", South),
    ("HI", "Hawaii", West),
    ("IA", "Iowa", Midwest),
    ("ID", "Idaho", West),
    ("IL", "Illinois", Midwest),
    ("IN", "Indiana", Midwest),
    ("KS", "Kansas", Midwest),
    ("KY", "Kentucky", South),
    ("LA", "Louisiana", South),
    ("MA", "Massachusetts", Northeast),
    ("MD", "Maryland", South),
    ("ME", "Maine", Northeast),
    ("MI", "Michigan", Midwest),
    ("MN", "Minnesota", Midwest),
    ("MO", "Missouri", Midwest),
    ("MS", "Mississippi", South),
    ("MT", "Montana", West),
    ("NC", "North Carolina", South),
    ("ND", "North Dakota", Midwest),
    ("NE", "Nebraska", Midwest),
    ("NH", "New Hampshire", Northeast),
    ("NJ", "New Jersey", Northeast),
    ("NM", "New Mexico", West),
    ("NV", "Nevada", West),
    ("NY", "New York", Northeast),
    ("OH", "Ohio", Midwest),
    ("OK", "Oklahoma", South),
    ("OR", "Oregon", West),
    ("PA", "Pennsylvania", Northeast),
    ("RI", "Rhode Island", Northeast),
    ("SC", "South Carolina", South),
    ("SD", "South Dakota", Midwest),
    ("TN", "Tennessee", South),
    ("TX", "Texas", South),
    ("UT", "Utah", West),
    ("VA", "Virginia", South),
    ("VT", "Vermont", Northeast),
    ("WA", "Washington", West),
    ("WI", "Wisconsin", Midwest),
    ("WV", "West Virginia", South),
    ("WY", "Wyoming", West),
];

/// One of the 51 U.S. jurisdictions (50 states plus DC).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateCode(u8);

impl StateCode {
    pub const COUNT: usize = 51;

    pub fn all() -> impl Iterator<Item = StateCode> + Clone {
        (0..STATES.len() as u8).map(StateCode)
    }

    /// Looks up a two-letter USPS code, case-insensitively.
    pub fn from_code(code: &str) -> Option<StateCode> {
        let code = code.trim();
        STATES
            .iter()
            .position(|s| s.code.eq_ignore_ascii_case(code))
            .map(|i| StateCode(i as u8))
    }

    pub fn from_name(name: &str) -> Option<StateCode> {
        let name = name.trim();
        STATES
            .iter()
            .position(|s| s.name.eq_ignore_ascii_case(name))
            .map(|i| StateCode(i as u8))
    }

    pub fn code(self) -> &'static str {
        STATES[self.0 as usize].code
    }

    pub fn name(self) -> &'static str {
        STATES[self.0 as usize].name
    }

    pub fn region(self) -> Region {
        STATES[self.0 as usize].region
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StateCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateCode::from_code(s).ok_or_else(|| format!("unknown state code '{}'", s.trim()))
    }
}

impl Serialize for StateCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for StateCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
