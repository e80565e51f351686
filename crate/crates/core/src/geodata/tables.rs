use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};
use serde::{Deserialize, Serialize};

use super::{normalize_code, GeoError, GeoPoint, Result};

/// Population threshold used to build the reference city list.
pub const DEFAULT_MIN_POPULATION: u64 = 100_000;

const CITY_COLUMNS: [&str; 5] = ["name", "country_code", "population", "lat", "lon"];
const COUNTRY_COLUMNS: [&str; 5] = ["name", "code", "lat", "lon", "population_millions"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRecord {
    pub name: String,
    pub country_code: String,
    /// Raw inhabitants.
    pub population: u64,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRecord {
    pub name: String,
    pub code: String,
    pub centroid: GeoPoint,
    /// Millions of inhabitants.
    pub population_millions: f64,
}

/// Column positions resolved from a header row.
struct Columns<const N: usize> {
    idx: [usize; N],
}

impl<const N: usize> Columns<N> {
    fn resolve(path: &Path, header: &StringRecord, wanted: [&str; N]) -> Result<Self> {
        let mut idx = [0; N];
        for (slot, name) in idx.iter_mut().zip(wanted) {
            *slot = header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| GeoError::Ingest {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("missing column `{name}` in header"),
                })?;
        }
        Ok(Columns { idx })
    }

    fn get<'r>(&self, record: &'r StringRecord, i: usize) -> &'r str {
        record.get(self.idx[i]).unwrap_or("").trim()
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| GeoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn ingest_err(path: &Path, line: u64, message: impl Into<String>) -> GeoError {
    GeoError::Ingest {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, column: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| ingest_err(path, line, format!("cannot parse {column} from {raw:?}")))
}

fn read_header(path: &Path, reader: &mut csv::Reader<File>) -> Result<StringRecord> {
    let header = reader
        .headers()
        .map_err(|e| ingest_err(path, 1, e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(ingest_err(path, 1, "missing header row"));
    }
    Ok(header)
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads a city table, keeping rows with `population >= min_population`.
///
/// Coordinates are validated on every row; duplicate `(name, country_code)`
/// keys are rejected among the retained rows.
pub fn load_cities(path: impl AsRef<Path>, min_population: u64) -> Result<Vec<CityRecord>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let header = read_header(path, &mut reader)?;
    let cols = Columns::resolve(path, &header, CITY_COLUMNS)?;

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            ingest_err(path, line, e.to_string())
        })?;
        let line = line_of(&row);
        if row.len() < header.len() {
            return Err(ingest_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let name = cols.get(&row, 0);
        if name.is_empty() {
            return Err(ingest_err(path, line, "empty city name"));
        }
        let country_code = normalize_code(cols.get(&row, 1))
            .map_err(|e| ingest_err(path, line, e.to_string()))?;
        let population: u64 = parse_field(path, line, "population", cols.get(&row, 2))?;
        let lat: f64 = parse_field(path, line, "lat", cols.get(&row, 3))?;
        let lon: f64 = parse_field(path, line, "lon", cols.get(&row, 4))?;
        let location = GeoPoint::new(lat, lon)
            .map_err(|e| GeoError::Validation(format!("{}, line {line}: {e}", path.display())))?;

        if population < min_population {
            continue;
        }
        if !seen.insert((name.to_string(), country_code.clone())) {
            return Err(GeoError::Validation(format!(
                "{}, line {line}: duplicate city ({name}, {country_code})",
                path.display()
            )));
        }
        out.push(CityRecord {
            name: name.to_string(),
            country_code,
            population,
            location,
        });
    }
    Ok(out)
}

/// Reads a country table. Codes must be unique.
pub fn load_countries(path: impl AsRef<Path>) -> Result<Vec<CountryRecord>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let header = read_header(path, &mut reader)?;
    let cols = Columns::resolve(path, &header, COUNTRY_COLUMNS)?;

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            ingest_err(path, line, e.to_string())
        })?;
        let line = line_of(&row);
        if row.len() < header.len() {
            return Err(ingest_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let name = cols.get(&row, 0);
        if name.is_empty() {
            return Err(ingest_err(path, line, "empty country name"));
        }
        let code = normalize_code(cols.get(&row, 1)).map_err(|e| ingest_err(path, line, e.to_string()))?;
        let lat: f64 = parse_field(path, line, "lat", cols.get(&row, 2))?;
        let lon: f64 = parse_field(path, line, "lon", cols.get(&row, 3))?;
        let population_millions: f64 =
            parse_field(path, line, "population_millions", cols.get(&row, 4))?;
        let where_ = || format!("{}, line {line}", path.display());
        let centroid =
            GeoPoint::new(lat, lon).map_err(|e| GeoError::Validation(format!("{}: {e}", where_())))?;
        if !population_millions.is_finite() || population_millions < 0.0 {
            return Err(GeoError::Validation(format!(
                "{}: population_millions must be a non-negative number, got {population_millions}",
                where_()
            )));
        }
        if !seen.insert(code.clone()) {
            return Err(GeoError::Validation(format!(
                "{}: duplicate country code {code}",
                where_()
            )));
        }
        out.push(CountryRecord {
            name: name.to_string(),
            code,
            centroid,
            population_millions,
        });
    }
    Ok(out)
}

fn create_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| GeoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(WriterBuilder::new().from_writer(file))
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> GeoError {
    GeoError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Writes cities in the ingest format. Floats use shortest round-trip
/// formatting, so `load_cities(write_cities(..), 0)` is lossless.
pub fn write_cities(path: impl AsRef<Path>, cities: &[CityRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    w.write_record(CITY_COLUMNS).map_err(|e| write_err(path, e))?;
    for c in cities {
        w.write_record([
            c.name.clone(),
            c.country_code.clone(),
            c.population.to_string(),
            c.location.lat().to_string(),
            c.location.lon().to_string(),
        ])
        .map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

pub fn write_countries(path: impl AsRef<Path>, countries: &[CountryRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    w.write_record(COUNTRY_COLUMNS).map_err(|e| write_err(path, e))?;
    for c in countries {
        w.write_record([
            c.name.clone(),
            c.code.clone(),
            c.centroid.lat().to_string(),
            c.centroid.lon().to_string(),
            c.population_millions.to_string(),
        ])
        .map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}
