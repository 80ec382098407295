//! Directory format: `config.txt`, `networks.csv`, `transmitters.csv`,
//! `receivers.csv` and optionally `links.csv`.
//!
//! Numbers are written with the shortest representation that reads back to
//! the same `f64`, so write → load is lossless.

use std::fs;
use std::path::Path;

use csv::StringRecord;

use super::{
    LinkSource, Network, RadioParams, ReceivingPoint, ReceptionLink, Scenario, ScenarioError,
    ScenarioParts, Transmitter, DEFAULT_FIELD_OFFSET_DB,
};
use crate::propagation::PathLossModel;
use crate::{NetId, RxId, TxId};

pub const CONFIG_FILE: &str = "config.txt";
pub const NETWORKS_FILE: &str = "networks.csv";
pub const TRANSMITTERS_FILE: &str = "transmitters.csv";
pub const RECEIVERS_FILE: &str = "receivers.csv";
pub const LINKS_FILE: &str = "links.csv";

pub const NETWORKS_HEADER: &str = "id,admin,name";
pub const TRANSMITTERS_HEADER: &str = "id,network_id,admin,freq_khz,power_w,lon,lat,optimizable";
pub const RECEIVERS_HEADER: &str = "id,admin,lon,lat,population";
pub const LINKS_HEADER: &str = "receiver_id,transmitter_id,a_useful,a_interf";

#[derive(Debug, Clone, Copy)]
pub struct WriteOptions {
    /// Write `links.csv`. Without it, loading recomputes links from the path model.
    pub links: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self { links: true }
    }
}

pub fn load_scenario(dir: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let dir = dir.as_ref();
    let config = parse_config(&read_required(dir, CONFIG_FILE)?)?;
    let networks = parse_table(&read_required(dir, NETWORKS_FILE)?, NETWORKS_FILE, NETWORKS_HEADER, network_row)?;
    let transmitters = parse_table(
        &read_required(dir, TRANSMITTERS_FILE)?,
        TRANSMITTERS_FILE,
        TRANSMITTERS_HEADER,
        transmitter_row,
    )?;
    let receivers = parse_table(
        &read_required(dir, RECEIVERS_FILE)?,
        RECEIVERS_FILE,
        RECEIVERS_HEADER,
        receiver_row,
    )?;
    let links_path = dir.join(LINKS_FILE);
    let links = if links_path.exists() {
        let text = read_file(&links_path)?;
        LinkSource::Explicit(parse_table(&text, LINKS_FILE, LINKS_HEADER, link_row)?)
    } else {
        LinkSource::PathModel
    };
    Scenario::build(ScenarioParts {
        radio: config.radio,
        path_model: config.path_model,
        field_offset_db: config.field_offset_db,
        networks,
        transmitters,
        receivers,
        links,
    })
}

pub fn write_scenario(s: &Scenario, dir: impl AsRef<Path>, opts: WriteOptions) -> Result<(), ScenarioError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let r = s.radio();
    let m = s.path_model();
    let config = format!(
        "# radio parameters (watts, linear ratios)\n\
         p_min_w = {}\n\
         theta = {}\n\
         protection_ratio = {}\n\
         p_max_w = {}\n\
         reception_floor_w = {}\n\
         interference_cutoff_w = {}\n\
         # synthetic path-loss model\n\
         reference_loss = {}\n\
         path_exponent = {}\n\
         interference_margin = {}\n\
         cutoff_km = {}\n\
         # map rendering: field dB(uV/m) = power dBm + offset\n\
         field_offset_db = {}\n",
        num(r.p_min),
        num(r.theta),
        num(r.protection_ratio),
        num(r.p_max),
        num(r.reception_floor),
        num(r.interference_cutoff),
        num(m.reference_loss),
        num(m.exponent),
        num(m.interference_margin),
        num(m.cutoff_km),
        num(s.field_offset_db()),
    );
    write_file(&dir.join(CONFIG_FILE), config.as_bytes())?;

    write_table(&dir.join(NETWORKS_FILE), NETWORKS_HEADER, s.networks().iter().map(|n| {
        vec![n.id.to_string(), n.admin.clone(), n.name.clone()]
    }))?;
    write_table(&dir.join(TRANSMITTERS_FILE), TRANSMITTERS_HEADER, s.transmitters().iter().map(|t| {
        vec![
            t.id.to_string(),
            t.network_id.to_string(),
            t.admin.clone(),
            t.freq_khz.to_string(),
            num(t.power_w),
            num(t.lon),
            num(t.lat),
            u8::from(t.optimizable).to_string(),
        ]
    }))?;
    write_table(&dir.join(RECEIVERS_FILE), RECEIVERS_HEADER, s.receivers().iter().map(|r| {
        vec![
            r.id.to_string(),
            r.admin.clone(),
            num(r.lon),
            num(r.lat),
            r.population.to_string(),
        ]
    }))?;
    let links_path = dir.join(LINKS_FILE);
    if opts.links {
        write_table(&links_path, LINKS_HEADER, s.links().iter().map(|l| {
            vec![
                l.receiver_id.to_string(),
                l.transmitter_id.to_string(),
                num(l.a_useful),
                num(l.a_interf),
            ]
        }))?;
    } else if links_path.exists() {
        fs::remove_file(&links_path).map_err(|e| io_err(&links_path, e))?;
    }
    Ok(())
}

/// Shortest round-trip decimal form of an `f64`.
pub(crate) fn num(v: f64) -> String {
    format!("{v:?}")
}

struct Config {
    radio: RadioParams,
    path_model: PathLossModel,
    field_offset_db: f64,
}

fn parse_config(text: &str) -> Result<Config, ScenarioError> {
    let defaults = PathLossModel::default();
    let mut p_min = None;
    let mut theta = None;
    let mut pr = None;
    let mut p_max = None;
    let mut floor = None;
    let mut cutoff = None;
    let mut path_model = defaults;
    let mut field_offset_db = DEFAULT_FIELD_OFFSET_DB;

    let malformed = |line: usize, column: usize, message: String| ScenarioError::Malformed {
        file: CONFIG_FILE.to_string(),
        line: line as u64,
        column,
        message,
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(malformed(lineno, 1, "expected `key = value`".to_string()));
        };
        let key = content[..eq].trim();
        let value_str = content[eq + 1..].trim();
        let value_col = eq + 2 + (content[eq + 1..].len() - content[eq + 1..].trim_start().len());
        let value: f64 = value_str
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| malformed(lineno, value_col, format!("`{value_str}` is not a number")))?;
        match key {
            "p_min_w" => p_min = Some(value),
            "theta" => theta = Some(value),
            "protection_ratio" => pr = Some(value),
            "p_max_w" => p_max = Some(value),
            "reception_floor_w" => floor = Some(value),
            "interference_cutoff_w" => cutoff = Some(value),
            "reference_loss" => path_model.reference_loss = value,
            "path_exponent" => path_model.exponent = value,
            "interference_margin" => path_model.interference_margin = value,
            "cutoff_km" => path_model.cutoff_km = value,
            "field_offset_db" => field_offset_db = value,
            other => return Err(malformed(lineno, 1, format!("unknown key `{other}`"))),
        }
    }

    let required = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| malformed(text.lines().count().max(1), 1, format!("missing key `{key}`")))
    };
    let p_min = required(p_min, "p_min_w")?;
    let radio = RadioParams {
        p_min,
        theta: required(theta, "theta")?,
        protection_ratio: required(pr, "protection_ratio")?,
        p_max: required(p_max, "p_max_w")?,
        reception_floor: floor.unwrap_or(p_min),
        interference_cutoff: cutoff.unwrap_or(p_min / 100.0),
    };
    Ok(Config {
        radio,
        path_model,
        field_offset_db,
    })
}

/// Field-level parse failure; the caller attaches file and line.
struct FieldError {
    column: usize,
    message: String,
}

struct Fields<'a> {
    record: &'a StringRecord,
}

impl Fields<'_> {
    fn str(&self, col: usize) -> Result<String, FieldError> {
        self.record.get(col).map(|s| s.to_string()).ok_or(FieldError {
            column: col + 1,
            message: "missing field".to_string(),
        })
    }

    fn parse<T: std::str::FromStr>(&self, col: usize, what: &str) -> Result<T, FieldError> {
        let s = self.str(col)?;
        s.trim().parse().map_err(|_| FieldError {
            column: col + 1,
            message: format!("`{s}` is not a valid {what}"),
        })
    }

    fn float(&self, col: usize) -> Result<f64, FieldError> {
        let v: f64 = self.parse(col, "number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FieldError {
                column: col + 1,
                message: "number must be finite".to_string(),
            })
        }
    }
}

fn network_row(f: &Fields) -> Result<Network, FieldError> {
    Ok(Network {
        id: NetId(f.parse(0, "id")?),
        admin: f.str(1)?,
        name: f.str(2)?,
    })
}

fn transmitter_row(f: &Fields) -> Result<Transmitter, FieldError> {
    let optimizable = match f.str(7)?.trim() {
        "0" => false,
        "1" => true,
        other => {
            return Err(FieldError {
                column: 8,
                message: format!("optimizable must be 0 or 1, got `{other}`"),
            })
        }
    };
    Ok(Transmitter {
        id: TxId(f.parse(0, "id")?),
        network_id: NetId(f.parse(1, "id")?),
        admin: f.str(2)?,
        freq_khz: f.parse(3, "frequency")?,
        power_w: f.float(4)?,
        lon: f.float(5)?,
        lat: f.float(6)?,
        optimizable,
    })
}

fn receiver_row(f: &Fields) -> Result<ReceivingPoint, FieldError> {
    Ok(ReceivingPoint {
        id: RxId(f.parse(0, "id")?),
        admin: f.str(1)?,
        lon: f.float(2)?,
        lat: f.float(3)?,
        population: f.parse(4, "population")?,
    })
}

fn link_row(f: &Fields) -> Result<ReceptionLink, FieldError> {
    Ok(ReceptionLink {
        receiver_id: RxId(f.parse(0, "id")?),
        transmitter_id: TxId(f.parse(1, "id")?),
        a_useful: f.float(2)?,
        a_interf: f.float(3)?,
    })
}

fn parse_table<T>(
    text: &str,
    file: &str,
    header: &str,
    row: impl Fn(&Fields) -> Result<T, FieldError>,
) -> Result<Vec<T>, ScenarioError> {
    let first = text.split('\n').next().unwrap_or("");
    if first != header {
        return Err(ScenarioError::Malformed {
            file: file.to_string(),
            line: 1,
            column: 1,
            message: format!("expected header `{header}`"),
        });
    }
    let expected = header.split(',').count();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut record = StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(ScenarioError::Malformed {
                    file: file.to_string(),
                    line: e.position().map_or(0, |p| p.line()),
                    column: 1,
                    message: e.to_string(),
                })
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected {
            return Err(ScenarioError::Malformed {
                file: file.to_string(),
                line,
                column: record.len().min(expected) + 1,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let value = row(&Fields { record: &record }).map_err(|e| ScenarioError::Malformed {
            file: file.to_string(),
            line,
            column: e.column,
            message: e.message,
        })?;
        out.push(value);
    }
    Ok(out)
}

fn write_table(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), ScenarioError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| io_err(path, std::io::Error::other(e));
    writer.write_record(header.split(',')).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| io_err(path, std::io::Error::other(e.to_string())))?;
    write_file(path, &bytes)
}

fn read_required(dir: &Path, name: &str) -> Result<String, ScenarioError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(ScenarioError::MissingFile(path));
    }
    read_file(&path)
}

fn read_file(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}
