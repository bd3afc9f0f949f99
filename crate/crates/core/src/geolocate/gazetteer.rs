use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::states::{Region, StateCode};
use super::{normalize_place, FOREIGN_TOKENS};

/// Latitude/longitude rectangle in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }

    fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            lat_min: self.lat_min.min(other.lat_min),
            lat_max: self.lat_max.max(other.lat_max),
            lon_min: self.lon_min.min(other.lon_min),
            lon_max: self.lon_max.max(other.lon_max),
        }
    }
}

/// Plausible coordinate envelope for U.S. jurisdictions, used when validating boxes.
const US_LAT_RANGE: (f64, f64) = (18.0, 72.0);
const US_LON_RANGE: (f64, f64) = (-180.0, -65.0);

/// States that sit outside the contiguous envelope and keep their own extent.
const NONCONTIGUOUS: [&str; 2] = ["AK", "HI"];

#[derive(Debug, Clone)]
pub struct StateEntry {
    pub code: StateCode,
    pub name: String,
    pub bbox: BoundingBox,
    pub centroid: (f64, f64),
}

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("gazetteer has no entry for state {0}")]
    MissingState(StateCode),
    #[error("name '{name}' maps to both {first} and {second}")]
    Conflict {
        name: String,
        first: StateCode,
        second: StateCode,
    },
}

#[derive(Debug, Deserialize)]
struct StateRow {
    code: String,
    name: String,
    region: String,
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
    centroid_lat: f64,
    centroid_lon: f64,
}

#[derive(Debug, Deserialize)]
struct CityRow {
    city: String,
    state_code: String,
    rank: u32,
}

#[derive(Debug, Deserialize)]
struct AliasRow {
    alias: String,
    state_code: String,
}

/// Immutable place-name and coordinate lookup tables.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    states: Vec<StateEntry>,
    /// Normalized state names and aliases.
    pub(crate) names: HashMap<String, StateCode>,
    /// Normalized city name to candidates, best (lowest) rank first.
    pub(crate) cities: HashMap<String, Vec<(StateCode, u32)>>,
    pub(crate) foreign: HashSet<String>,
    pub(crate) max_phrase_words: usize,
    extents: Vec<BoundingBox>,
}

impl Gazetteer {
    /// Loads `states.csv`, `cities.csv` and `aliases.csv` from a directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Gazetteer, GazetteerError> {
        let dir = dir.as_ref();
        let states: Vec<(usize, StateRow)> = read_rows(&dir.join("states.csv"))?;
        let cities: Vec<(usize, CityRow)> = read_rows(&dir.join("cities.csv"))?;
        let aliases: Vec<(usize, AliasRow)> = read_rows(&dir.join("aliases.csv"))?;

        let mut builder = GazetteerBuilder::default();
        let path = dir.join("states.csv");
        for (row, s) in states {
            builder.state(&s).map_err(|message| GazetteerError::Row {
                path: path.clone(),
                row,
                message,
            })?;
        }
        let path = dir.join("aliases.csv");
        for (row, a) in aliases {
            let code = StateCode::from_code(&a.state_code).ok_or_else(|| GazetteerError::Row {
                path: path.clone(),
                row,
                message: format!("unknown state code '{}'", a.state_code),
            })?;
            builder.aliases.push((a.alias, code));
        }
        let path = dir.join("cities.csv");
        for (row, c) in cities {
            let code = StateCode::from_code(&c.state_code).ok_or_else(|| GazetteerError::Row {
                path: path.clone(),
                row,
                message: format!("unknown state code '{}'", c.state_code),
            })?;
            if c.rank == 0 {
                return Err(GazetteerError::Row {
                    path,
                    row,
                    message: "rank must be >= 1".into(),
                });
            }
            let key = (normalize_place(&c.city), code);
            if !builder.city_keys.insert(key.clone()) {
                return Err(GazetteerError::Row {
                    path,
                    row,
                    message: format!("duplicate city '{}, {}'", c.city, code),
                });
            }
            builder.cities.push((key.0, code, c.rank));
        }
        builder.finish()
    }

    pub fn state(&self, code: StateCode) -> &StateEntry {
        &self.states[code.index()]
    }

    pub fn states(&self) -> &[StateEntry] {
        &self.states
    }

    /// Outer U.S. envelopes: the contiguous hull plus one box per noncontiguous state.
    pub fn extents(&self) -> &[BoundingBox] {
        &self.extents
    }

    /// Adds extra foreign place tokens (normalized on insert).
    pub fn with_foreign_tokens<I, S>(mut self, tokens: I) -> Gazetteer
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for t in tokens {
            let n = normalize_place(t.as_ref());
            if !n.is_empty() {
                self.max_phrase_words = self.max_phrase_words.max(n.split(' ').count());
                self.foreign.insert(n);
            }
        }
        self
    }

    pub fn in_us_extent(&self, lat: f64, lon: f64) -> bool {
        self.extents.iter().any(|b| b.contains(lat, lon))
    }

    /// States whose box contains the point; nearest centroid among several wins.
    pub fn state_at(&self, lat: f64, lon: f64) -> Option<StateCode> {
        let scale = lat.to_radians().cos();
        self.states
            .iter()
            .filter(|s| s.bbox.contains(lat, lon))
            .map(|s| {
                let dlat = s.centroid.0 - lat;
                let dlon = (s.centroid.1 - lon) * scale;
                (dlat * dlat + dlon * dlon, s.code)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, code)| code)
    }
}

#[derive(Default)]
struct GazetteerBuilder {
    states: BTreeMap<StateCode, StateEntry>,
    aliases: Vec<(String, StateCode)>,
    cities: Vec<(String, StateCode, u32)>,
    city_keys: HashSet<(String, StateCode)>,
}

impl GazetteerBuilder {
    fn state(&mut self, s: &StateRow) -> Result<(), String> {
        let code = StateCode::from_code(&s.code)
            .ok_or_else(|| format!("unknown state code '{}'", s.code))?;
        let region: Region = s.region.parse()?;
        if region != code.region() {
            return Err(format!(
                "{code}: region '{}' disagrees with census region {}",
                s.region,
                code.region()
            ));
        }
        if s.name.trim().is_empty() {
            return Err(format!("{code}: empty name"));
        }
        let bbox = BoundingBox {
            lat_min: s.lat_min,
            lat_max: s.lat_max,
            lon_min: s.lon_min,
            lon_max: s.lon_max,
        };
        let finite = [
            s.lat_min,
            s.lat_max,
            s.lon_min,
            s.lon_max,
            s.centroid_lat,
            s.centroid_lon,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(format!("{code}: non-finite coordinate"));
        }
        if bbox.lat_min > bbox.lat_max {
            return Err(format!(
                "{code}: malformed box, lat_min {} > lat_max {}",
                bbox.lat_min, bbox.lat_max
            ));
        }
        if bbox.lon_min > bbox.lon_max {
            return Err(format!(
                "{code}: malformed box, lon_min {} > lon_max {}",
                bbox.lon_min, bbox.lon_max
            ));
        }
        if bbox.lat_min < US_LAT_RANGE.0
            || bbox.lat_max > US_LAT_RANGE.1
            || bbox.lon_min < US_LON_RANGE.0
            || bbox.lon_max > US_LON_RANGE.1
        {
            return Err(format!("{code}: box lies outside the U.S. extent"));
        }
        if !bbox.contains(s.centroid_lat, s.centroid_lon) {
            return Err(format!("{code}: centroid outside its bounding box"));
        }
        let entry = StateEntry {
            code,
            name: s.name.trim().to_string(),
            bbox,
            centroid: (s.centroid_lat, s.centroid_lon),
        };
        if self.states.insert(code, entry).is_some() {
            return Err(format!("{code}: duplicate state row"));
        }
        Ok(())
    }

    fn finish(self) -> Result<Gazetteer, GazetteerError> {
        for code in StateCode::all() {
            if !self.states.contains_key(&code) {
                return Err(GazetteerError::MissingState(code));
            }
        }
        let states: Vec<StateEntry> = self.states.into_values().collect();

        let mut names: HashMap<String, StateCode> = HashMap::new();
        let mut insert = |name: &str, code: StateCode| -> Result<(), GazetteerError> {
            let key = normalize_place(name);
            if key.is_empty() {
                return Ok(());
            }
            match names.insert(key.clone(), code) {
                Some(prev) if prev != code => Err(GazetteerError::Conflict {
                    name: key,
                    first: prev,
                    second: code,
                }),
                _ => Ok(()),
            }
        };
        for s in &states {
            insert(&s.name, s.code)?;
            insert(s.code.name(), s.code)?;
        }
        for (alias, code) in &self.aliases {
            insert(alias, *code)?;
        }

        let mut cities: HashMap<String, Vec<(StateCode, u32)>> = HashMap::new();
        for (name, code, rank) in self.cities {
            cities.entry(name).or_default().push((code, rank));
        }
        for v in cities.values_mut() {
            v.sort_by_key(|&(code, rank)| (rank, code));
        }

        let foreign: HashSet<String> = FOREIGN_TOKENS.iter().map(|t| normalize_place(t)).collect();

        let max_phrase_words = names
            .keys()
            .chain(cities.keys())
            .chain(foreign.iter())
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(1);

        let mut extents = Vec::new();
        let mut contiguous: Option<BoundingBox> = None;
        for s in &states {
            if NONCONTIGUOUS.contains(&s.code.code()) {
                extents.push(s.bbox);
            } else {
                contiguous = Some(match contiguous {
                    Some(h) => h.hull(&s.bbox),
                    None => s.bbox,
                });
            }
        }
        extents.extend(contiguous);

        Ok(Gazetteer {
            states,
            names,
            cities,
            foreign,
            max_phrase_words,
            extents,
        })
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, GazetteerError> {
    let file = File::open(path).map_err(|source| GazetteerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<T>().enumerate() {
        let row = i + 1;
        let value = rec.map_err(|e| GazetteerError::Row {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        out.push((row, value));
    }
    Ok(out)
}
