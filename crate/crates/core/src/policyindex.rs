//! State renewable-energy policy covariates: the RPS progress score, the
//! additive net-metering index and the per-state profile table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geolocate::{Region, StateCode};

/// Base year of the generation figures.
pub const BASE_YEAR: i32 = 2019;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("unmet RPS target needs a target year after {BASE_YEAR}, got {0:?}")]
    UndefinedRpsPace(Option<i32>),
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("RPS target year given without a target percentage")]
    YearWithoutTarget,
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}, field {field}: {message}")]
    Row {
        line: u64,
        field: String,
        message: String,
    },
    #[error("missing column '{0}'")]
    MissingColumn(&'static str),
    #[error("no row for state {0}")]
    MissingState(StateCode),
}

fn check_percent(field: &'static str, v: f64) -> Result<f64, PolicyError> {
    if v.is_finite() && (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(PolicyError::OutOfRange {
            field,
            value: v.to_string(),
            range: "[0, 100]",
        })
    }
}

/// Inputs to the RPS score, all in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpsInput {
    target_percent: Option<f64>,
    target_year: Option<i32>,
    generation_2019: f64,
}

impl RpsInput {
    pub fn new(
        target_percent: Option<f64>,
        target_year: Option<i32>,
        generation_2019: f64,
    ) -> Result<RpsInput, PolicyError> {
        if let Some(t) = target_percent {
            check_percent("rps_target_percent", t)?;
        } else if target_year.is_some() {
            return Err(PolicyError::YearWithoutTarget);
        }
        Ok(RpsInput {
            target_percent,
            target_year,
            generation_2019: check_percent("renewable_generation", generation_2019)?,
        })
    }

    pub fn no_target(generation_2019: f64) -> Result<RpsInput, PolicyError> {
        RpsInput::new(None, None, generation_2019)
    }

    pub fn target_percent(&self) -> Option<f64> {
        self.target_percent
    }

    pub fn target_year(&self) -> Option<i32> {
        self.target_year
    }

    pub fn generation_2019(&self) -> f64 {
        self.generation_2019
    }
}

/// Percentage points per year still needed to reach the target; 0 with no
/// target or a target already met.
pub fn rps_score(input: &RpsInput) -> Result<f64, PolicyError> {
    let Some(target) = input.target_percent else {
        return Ok(0.0);
    };
    if input.generation_2019 >= target {
        return Ok(0.0);
    }
    match input.target_year {
        Some(year) if year > BASE_YEAR => {
            Ok((target - input.generation_2019) / f64::from(year - BASE_YEAR))
        }
        other => Err(PolicyError::UndefinedRpsPace(other)),
    }
}

/// The five net-metering design features, each range-checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NemComponents {
    mechanism: u8,
    cap: u8,
    subscriber: u8,
    compensation: u8,
    rollover: u8,
}

/// Column name, maximum and printable range of each component.
const NEM_FIELDS: [(&str, u8, &str); 5] = [
    ("nem_mechanism", 4, "0..=4"),
    ("nem_cap", 1, "0..=1"),
    ("nem_subscriber", 1, "0..=1"),
    ("nem_compensation", 1, "0..=1"),
    ("nem_rollover", 2, "0..=2"),
];

impl NemComponents {
    pub fn new(
        mechanism: u8,
        cap: u8,
        subscriber: u8,
        compensation: u8,
        rollover: u8,
    ) -> Result<NemComponents, PolicyError> {
        let values = [mechanism, cap, subscriber, compensation, rollover];
        for ((field, max, range), v) in NEM_FIELDS.into_iter().zip(values) {
            if v > max {
                return Err(PolicyError::OutOfRange {
                    field,
                    value: v.to_string(),
                    range,
                });
            }
        }
        Ok(NemComponents {
            mechanism,
            cap,
            subscriber,
            compensation,
            rollover,
        })
    }

    pub fn mechanism(&self) -> u8 {
        self.mechanism
    }

    pub fn cap(&self) -> u8 {
        self.cap
    }

    pub fn subscriber(&self) -> u8 {
        self.subscriber
    }

    pub fn compensation(&self) -> u8 {
        self.compensation
    }

    pub fn rollover(&self) -> u8 {
        self.rollover
    }

    /// Every valid combination (5·2·2·2·3 = 120).
    pub fn all() -> impl Iterator<Item = NemComponents> {
        (0..=4u8).flat_map(|m| {
            (0..=1u8).flat_map(move |c| {
                (0..=1u8).flat_map(move |s| {
                    (0..=1u8).flat_map(move |p| {
                        (0..=2u8).map(move |r| NemComponents::new(m, c, s, p, r).expect("in range"))
                    })
                })
            })
        })
    }
}

/// Sum of the five components, 0 to 9.
pub fn nem_score(c: &NemComponents) -> u8 {
    c.mechanism + c.cap + c.subscriber + c.compensation + c.rollover
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyProfile {
    pub state: StateCode,
    pub renewable_generation: f64,
    pub rps_input: RpsInput,
    pub rps_score: f64,
    pub nem: NemComponents,
    pub nem_score: u8,
    pub incentives_count: u32,
    pub solar_jobs_per_million: f64,
    pub electricity_price: f64,
    pub solar_radiation: f64,
    pub region: Region,
}

/// Names of the seven regression covariates, in table order.
pub const COVARIATES: [&str; 7] = [
    "renewable_generation",
    "rps",
    "net_metering",
    "renewable_incentives",
    "solar_market_maturity",
    "electricity_price",
    "solar_radiation",
];

impl PolicyProfile {
    /// Covariate values in [`COVARIATES`] order.
    pub fn covariates(&self) -> [f64; 7] {
        [
            self.renewable_generation,
            self.rps_score,
            f64::from(self.nem_score),
            f64::from(self.incentives_count),
            self.solar_jobs_per_million,
            self.electricity_price,
            self.solar_radiation,
        ]
    }
}

pub const POLICY_COLUMNS: [&str; 14] = [
    "state",
    "renewable_generation",
    "rps_target_percent",
    "rps_target_year",
    "nem_mechanism",
    "nem_cap",
    "nem_subscriber",
    "nem_compensation",
    "nem_rollover",
    "incentives_count",
    "solar_jobs_per_million",
    "electricity_price",
    "solar_radiation",
    "region",
];

struct RowReader<'a> {
    record: &'a csv::StringRecord,
    columns: &'a HashMap<&'static str, usize>,
    line: u64,
}

impl RowReader<'_> {
    fn err(&self, field: &str, message: impl fmt::Display) -> PolicyError {
        PolicyError::Row {
            line: self.line,
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    fn raw(&self, field: &'static str) -> &str {
        self.record.get(self.columns[field]).unwrap_or("").trim()
    }

    fn parse<T: std::str::FromStr>(&self, field: &'static str) -> Result<T, PolicyError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(field);
        if raw.is_empty() {
            return Err(self.err(field, "value required"));
        }
        raw.parse()
            .map_err(|e| self.err(field, format!("'{raw}': {e}")))
    }

    fn optional<T: std::str::FromStr>(&self, field: &'static str) -> Result<Option<T>, PolicyError>
    where
        T::Err: fmt::Display,
    {
        if self.raw(field).is_empty() {
            Ok(None)
        } else {
            self.parse(field).map(Some)
        }
    }

    fn positive(&self, field: &'static str) -> Result<f64, PolicyError> {
        let v: f64 = self.parse(field)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(field, format!("must be > 0, got {v}")))
        }
    }

    fn non_negative(&self, field: &'static str) -> Result<f64, PolicyError> {
        let v: f64 = self.parse(field)?;
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err(field, format!("must be >= 0, got {v}")))
        }
    }

    fn profile(&self) -> Result<PolicyProfile, PolicyError> {
        let state: StateCode = self.parse("state")?;
        let generation: f64 = self.parse("renewable_generation")?;
        let rps_input = RpsInput::new(
            self.optional("rps_target_percent")?,
            self.optional("rps_target_year")?,
            generation,
        )
        .map_err(|e| self.err(field_of(&e, "rps_target_percent"), e))?;
        let rps = rps_score(&rps_input).map_err(|e| self.err("rps_target_year", e))?;
        let nem = NemComponents::new(
            self.parse("nem_mechanism")?,
            self.parse("nem_cap")?,
            self.parse("nem_subscriber")?,
            self.parse("nem_compensation")?,
            self.parse("nem_rollover")?,
        )
        .map_err(|e| self.err(field_of(&e, "nem"), e))?;
        let region: Region = self.parse("region")?;
        if region != state.region() {
            return Err(self.err(
                "region",
                format!("{state} is in the {} region, not {region}", state.region()),
            ));
        }
        Ok(PolicyProfile {
            state,
            renewable_generation: generation,
            rps_input,
            rps_score: rps,
            nem_score: nem_score(&nem),
            nem,
            incentives_count: self.parse("incentives_count")?,
            solar_jobs_per_million: self.non_negative("solar_jobs_per_million")?,
            electricity_price: self.positive("electricity_price")?,
            solar_radiation: self.positive("solar_radiation")?,
            region,
        })
    }
}

fn field_of(e: &PolicyError, fallback: &'static str) -> &'static str {
    match e {
        PolicyError::OutOfRange { field, .. } => field,
        PolicyError::YearWithoutTarget => "rps_target_year",
        _ => fallback,
    }
}

/// Parses a policy table. Requires one row per state for all 51; extra
/// columns (including any precomputed scores) are ignored.
pub fn parse_profiles(body: &str) -> Result<Vec<PolicyProfile>, PolicyError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| PolicyError::Row {
            line: 1,
            field: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let mut columns = HashMap::new();
    for name in POLICY_COLUMNS {
        let idx = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(PolicyError::MissingColumn(name))?;
        columns.insert(name, idx);
    }
    let mut by_state: BTreeMap<StateCode, PolicyProfile> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| PolicyError::Row {
            line: e.position().map_or(0, |p| p.line()),
            field: "record".into(),
            message: e.to_string(),
        })?;
        let row = RowReader {
            line: record.position().map_or(0, |p| p.line()),
            record: &record,
            columns: &columns,
        };
        let profile = row.profile()?;
        if by_state.contains_key(&profile.state) {
            return Err(row.err("state", format!("duplicate row for {}", profile.state)));
        }
        by_state.insert(profile.state, profile);
    }
    if let Some(missing) = StateCode::all().find(|s| !by_state.contains_key(s)) {
        return Err(PolicyError::MissingState(missing));
    }
    Ok(by_state.into_values().collect())
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<PolicyProfile>, PolicyError> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| PolicyError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_profiles(&body)
}
