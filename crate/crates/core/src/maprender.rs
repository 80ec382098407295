//! Raster service and interference maps.
//!
//! A [`GridSpec`] cuts a lon/lat box into square pixels. Each receiving point
//! falls into the pixel `px = ⌊(lon − lon_min)/size⌋`, `py = ⌊(lat_max − lat)/size⌋`
//! (row 0 is the northern edge); points on the eastern or southern edge are
//! clamped into the last column or row, points outside the box are ignored.
//! A pixel shows the maximum value over its receiving points.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::coverage::{free_server_sinr, qos_level, sinr_db, PowerFactors, QosLevel};
use crate::propagation::{combine_powers_db, received_interfering_power};
use crate::scenario::{ReceivingPoint, Scenario};
use crate::NetId;

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];

/// Field-strength thresholds of the interference bands, dB(µV/m), strictly decreasing.
pub const FIELD_THRESHOLDS_DB: [f64; 5] = [70.0, 50.0, 40.0, 30.0, 20.0];

pub const MAP_CSV_HEADER: &str = "pixel_x,pixel_y,value_db,band";

#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid contains no receiving point")]
    EmptyGrid,
    #[error("no network or administration matches filter {0}")]
    UnknownFilter(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
    /// Pixel side, degrees.
    pub pixel_deg: f64,
}

impl GridSpec {
    pub fn new(lon_min: f64, lon_max: f64, lat_min: f64, lat_max: f64, pixel_deg: f64) -> Result<Self, MapError> {
        let g = Self { lon_min, lon_max, lat_min, lat_max, pixel_deg };
        g.check()?;
        Ok(g)
    }

    /// Smallest grid with the given pixel size whose box holds every receiving point.
    pub fn covering(s: &Scenario, pixel_deg: f64) -> Result<Self, MapError> {
        let rs = s.receivers();
        if rs.is_empty() {
            return Err(MapError::EmptyGrid);
        }
        let fold = |f: fn(&ReceivingPoint) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            rs.iter().map(f).fold(init, pick)
        };
        let lon_min = fold(|r| r.lon, f64::INFINITY, f64::min);
        let lon_max = fold(|r| r.lon, f64::NEG_INFINITY, f64::max);
        let lat_min = fold(|r| r.lat, f64::INFINITY, f64::min);
        let lat_max = fold(|r| r.lat, f64::NEG_INFINITY, f64::max);
        // a single point (or a line of points) still gets one pixel of extent
        Self::new(
            lon_min,
            lon_max.max(lon_min + pixel_deg),
            lat_min,
            lat_max.max(lat_min + pixel_deg),
            pixel_deg,
        )
    }

    fn check(&self) -> Result<(), MapError> {
        let finite = [self.lon_min, self.lon_max, self.lat_min, self.lat_max, self.pixel_deg]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(MapError::InvalidGrid("non-finite bound".into()));
        }
        if self.pixel_deg <= 0.0 {
            return Err(MapError::InvalidGrid(format!("pixel size {} is not positive", self.pixel_deg)));
        }
        if !(self.lon_min < self.lon_max && self.lat_min < self.lat_max) {
            return Err(MapError::InvalidGrid("bounding box is degenerate".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        (((self.lon_max - self.lon_min) / self.pixel_deg).ceil() as usize).max(1)
    }

    pub fn height(&self) -> usize {
        (((self.lat_max - self.lat_min) / self.pixel_deg).ceil() as usize).max(1)
    }

    /// Pixel `(x, y)` holding the point, or `None` outside the box.
    pub fn pixel_of(&self, lon: f64, lat: f64) -> Option<(usize, usize)> {
        if !(self.lon_min..=self.lon_max).contains(&lon) || !(self.lat_min..=self.lat_max).contains(&lat) {
            return None;
        }
        let px = ((lon - self.lon_min) / self.pixel_deg).floor() as usize;
        let py = ((self.lat_max - lat) / self.pixel_deg).floor() as usize;
        Some((px.min(self.width() - 1), py.min(self.height() - 1)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorTable {
    /// Indexed by [`QosLevel`]: unserved, Q1, Q2, Q3, Q4.
    pub qos: [Rgb; 5],
    /// One color per field band, strongest first; the last entry is below the lowest threshold.
    pub field_thresholds_db: [f64; 5],
    pub field: [Rgb; 6],
}

impl Default for ColorTable {
    fn default() -> Self {
        Self {
            qos: [
                [255, 0, 0],
                [255, 220, 0],
                [0, 200, 0],
                [80, 160, 255],
                [0, 0, 255],
            ],
            field_thresholds_db: FIELD_THRESHOLDS_DB,
            field: [
                [255, 0, 0],
                [150, 75, 0],
                [200, 150, 100],
                [255, 140, 0],
                [255, 220, 0],
                [0, 200, 0],
            ],
        }
    }
}

impl ColorTable {
    pub fn qos_color(&self, level: QosLevel) -> Rgb {
        self.qos[level as usize]
    }

    /// Band index: 0 for the strongest field, `thresholds.len()` below the weakest.
    pub fn field_band(&self, field_db: f64) -> usize {
        self.field_thresholds_db
            .iter()
            .position(|&t| field_db >= t)
            .unwrap_or(self.field_thresholds_db.len())
    }

    pub fn field_band_label(&self, band: usize) -> String {
        match self.field_thresholds_db.get(band) {
            Some(t) => format!("GE{t}"),
            None => "NEGLIGIBLE".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Service,
    Interference,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::Service => "service",
            MapKind::Interference => "interference",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pixel {
    pub value_db: f64,
    pub band: String,
    pub color: Rgb,
}

/// Row-major raster; `None` cells hold no receiving point and render white.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub kind: MapKind,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Option<Pixel>>,
}

impl Raster {
    pub fn get(&self, x: usize, y: usize) -> Option<&Pixel> {
        self.cells[y * self.width + x].as_ref()
    }

    pub fn color(&self, x: usize, y: usize) -> Rgb {
        self.get(x, y).map_or(WHITE, |p| p.color)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.cells.len() * 3);
        for c in &self.cells {
            out.extend_from_slice(&c.as_ref().map_or(WHITE, |p| p.color));
        }
        out
    }

    /// One line per non-empty pixel, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{MAP_CSV_HEADER}\n");
        for (i, c) in self.cells.iter().enumerate() {
            if let Some(p) = c {
                let v = if p.value_db.is_finite() {
                    format!("{:.6}", p.value_db)
                } else {
                    "-inf".to_string()
                };
                let _ = writeln!(out, "{},{},{},{}", i % self.width, i / self.width, v, p.band);
            }
        }
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        write_file(path.as_ref(), &self.to_ppm())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        write_file(path.as_ref(), self.to_csv().as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), MapError> {
    fs::write(path, bytes).map_err(|source| MapError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Which networks a service map shows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapFilter {
    Network(NetId),
    Admin(String),
}

impl fmt::Display for MapFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapFilter::Network(n) => write!(f, "network {n}"),
            MapFilter::Admin(a) => write!(f, "admin {a}"),
        }
    }
}

/// Folds per-receiver values into pixels by maximum.
fn rasterize(
    s: &Scenario,
    g: &GridSpec,
    kind: MapKind,
    values: Vec<Option<f64>>,
    classify: impl Fn(f64) -> (String, Rgb),
) -> Result<Raster, MapError> {
    g.check()?;
    let (w, h) = (g.width(), g.height());
    let mut best: Vec<Option<f64>> = vec![None; w * h];
    let mut any_receiver = false;
    for (r, v) in s.receivers().iter().zip(values) {
        let Some((px, py)) = g.pixel_of(r.lon, r.lat) else { continue };
        any_receiver = true;
        if let Some(v) = v {
            let cell = &mut best[py * w + px];
            if cell.is_none_or(|b| v > b) {
                *cell = Some(v);
            }
        }
    }
    if !any_receiver {
        return Err(MapError::EmptyGrid);
    }
    let cells = best
        .into_iter()
        .map(|v| {
            v.map(|value_db| {
                let (band, color) = classify(value_db);
                Pixel { value_db, band, color }
            })
        })
        .collect();
    Ok(Raster { kind, width: w, height: h, cells })
}

/// QoS map of the affected administration.
///
/// A receiving point of the affected administration contributes the best
/// free-server SINR over the filtered networks received there. Pixels
/// without such a pair are white.
pub fn render_service_map(
    s: &Scenario,
    y: &PowerFactors,
    filter: &MapFilter,
    g: &GridSpec,
    colors: &ColorTable,
) -> Result<Raster, MapError> {
    let affected = match filter {
        MapFilter::Network(id) => s
            .network(*id)
            .map(|n| n.admin.clone())
            .ok_or_else(|| MapError::UnknownFilter(filter.to_string()))?,
        MapFilter::Admin(a) => {
            if !s.networks().iter().any(|n| &n.admin == a) {
                return Err(MapError::UnknownFilter(filter.to_string()));
            }
            a.clone()
        }
    };
    let wanted = |net: NetId| match filter {
        MapFilter::Network(id) => net == *id,
        MapFilter::Admin(a) => s.network(net).is_some_and(|n| &n.admin == a),
    };
    let values: Vec<Option<f64>> = s
        .receivers()
        .par_iter()
        .map(|r| {
            if r.admin != affected {
                return None;
            }
            let mut nets: Vec<NetId> = s
                .received_transmitters(r.id)
                .map(|(t, _)| t.network_id)
                .filter(|n| wanted(*n))
                .collect();
            nets.dedup();
            nets.into_iter()
                .filter_map(|n| free_server_sinr(s, r.id, n, y).map(|(_, v)| sinr_db(v)))
                .reduce(f64::max)
        })
        .collect();
    rasterize(s, g, MapKind::Service, values, |db| {
        let level = qos_level(db);
        (level.to_string(), colors.qos_color(level))
    })
}

/// Power in watts to field strength: `dBm + K`.
pub fn field_db_from_watts(p_w: f64, offset_db: f64) -> f64 {
    if p_w > 0.0 {
        10.0 * p_w.log10() + 30.0 + offset_db
    } else {
        f64::NEG_INFINITY
    }
}

/// Cumulative interfering field of `interfering_admin` at receiving points of other administrations.
///
/// The field at a point combines the interfering powers `ā·PR·p·y` of every
/// transmitter of the interfering administration linked to the point, converted
/// with the scenario's power-to-field offset. A point reached by none of them
/// has field −∞ and shows as negligible.
pub fn render_interference_map(
    s: &Scenario,
    y: &PowerFactors,
    interfering_admin: &str,
    g: &GridSpec,
    colors: &ColorTable,
) -> Result<Raster, MapError> {
    let radio = s.radio();
    let offset = s.field_offset_db();
    let values: Vec<Option<f64>> = s
        .receivers()
        .par_iter()
        .map(|r| {
            if r.admin == interfering_admin {
                return None;
            }
            let powers_db: Vec<f64> = s
                .links_of(r.id)
                .iter()
                .filter_map(|l| {
                    let t = s.transmitter(l.transmitter_id).filter(|t| t.admin == interfering_admin)?;
                    let p = received_interfering_power(l, t.power_w, y.get(t.id), radio.protection_ratio);
                    Some(field_db_from_watts(p, offset))
                })
                .collect();
            Some(combine_powers_db(&powers_db).unwrap_or(f64::NEG_INFINITY))
        })
        .collect();
    rasterize(s, g, MapKind::Interference, values, |db| {
        let band = colors.field_band(db);
        (colors.field_band_label(band), colors.field[band])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::linear_from_db;
    use crate::scenario::fixtures::*;
    use crate::scenario::RadioParams;
    use crate::TxId;

    fn grid_for(s: &Scenario) -> GridSpec {
        GridSpec::covering(s, 0.005).unwrap()
    }

    /// Receiver 1 of admin D served by tx 1, jammed by foreign tx 2; receiver 2 belongs to F.
    fn border(useful_w: f64, interf_w: f64) -> Scenario {
        build(
            radio(),
            vec![net(1, "D"), net(2, "F")],
            vec![tx(1, 1, 98000, 1.0, true), tx(2, 2, 98000, 1.0, false)],
            vec![rx(1, "D", 10), rx(2, "F", 10)],
            vec![link(1, 1, useful_w, useful_w), link(1, 2, interf_w, interf_w), link(2, 2, 1e-2, 1e-2)],
        )
    }

    #[test]
    fn pixel_assignment() {
        let g = GridSpec::new(0.0, 1.0, 0.0, 1.0, 0.25).unwrap();
        assert_eq!((g.width(), g.height()), (4, 4));
        assert_eq!(g.pixel_of(0.0, 1.0), Some((0, 0)));
        assert_eq!(g.pixel_of(0.26, 0.74), Some((1, 1)));
        assert_eq!(g.pixel_of(1.0, 0.0), Some((3, 3)));
        assert_eq!(g.pixel_of(1.1, 0.5), None);
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(GridSpec::new(1.0, 1.0, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn capodistria_after_is_light_blue() {
        // interference exceeds the useful power by 1.36 dB; noise is negligible at these levels
        let s = build(
            RadioParams { p_min: 1e-30, ..radio() },
            vec![net(1, "D"), net(2, "F")],
            vec![tx(1, 1, 98000, 1.0, false), tx(2, 2, 98000, 1.0, false)],
            vec![rx(1, "D", 10)],
            vec![link(1, 1, 1e-3, 1e-3), link(1, 2, 1e-3 * linear_from_db(1.36), 1e-3 * linear_from_db(1.36))],
        );
        let m = render_service_map(&s, &PowerFactors::full(), &MapFilter::Admin("D".into()), &grid_for(&s), &ColorTable::default()).unwrap();
        let p = m.cells.iter().flatten().next().unwrap();
        assert!((p.value_db - -1.36).abs() < 1e-9);
        assert_eq!(p.color, [80, 160, 255]);
        assert_eq!(p.band, "Q3");
    }

    #[test]
    fn deep_interference_is_red_and_empty_pixels_white() {
        let s = build(
            RadioParams { p_min: 1e-30, ..radio() },
            vec![net(1, "D"), net(2, "F")],
            vec![tx(1, 1, 98000, 1.0, false), tx(2, 2, 98000, 1.0, false)],
            vec![rx(1, "D", 10), rx(5, "D", 10)],
            vec![link(1, 1, 1e-3, 1e-3), link(1, 2, 1e-1, 1e-1)],
        );
        let g = grid_for(&s);
        let m = render_service_map(&s, &PowerFactors::full(), &MapFilter::Network(NetId(1)), &g, &ColorTable::default()).unwrap();
        let (x, y) = g.pixel_of(10.01, 45.1).unwrap();
        assert!((m.get(x, y).unwrap().value_db - -20.0).abs() < 1e-9);
        assert_eq!(m.color(x, y), [255, 0, 0]);
        // receiver 5 receives nothing; a pixel between the two has no receiver at all
        let (x5, y5) = g.pixel_of(10.05, 45.1).unwrap();
        assert_eq!(m.color(x5, y5), WHITE);
        assert_eq!(m.color(x + 1, y), WHITE);
    }

    #[test]
    fn field_bands() {
        let c = ColorTable::default();
        assert_eq!(c.field[c.field_band(72.0)], [255, 0, 0]);
        assert_eq!(c.field[c.field_band(70.0)], [255, 0, 0]);
        assert_eq!(c.field[c.field_band(55.0)], [150, 75, 0]);
        assert_eq!(c.field[c.field_band(19.9)], [0, 200, 0]);
        assert_eq!(c.field_band_label(c.field_band(19.9)), "NEGLIGIBLE");
        assert_eq!(c.field_band_label(0), "GE70");
        assert_eq!(c.field_band(f64::NEG_INFINITY), 5);
    }

    #[test]
    fn interference_field_uses_offset() {
        // 1 W · 1e-9 = -90 dBW = -60 dBm; field = -60 + K = 57.2
        let s = border(1e-3, 1e-9);
        let m = render_interference_map(&s, &PowerFactors::full(), "F", &grid_for(&s), &ColorTable::default()).unwrap();
        let cells: Vec<&Pixel> = m.cells.iter().flatten().collect();
        assert_eq!(cells.len(), 1, "only receivers outside the interfering admin are drawn");
        assert!((cells[0].value_db - (-60.0 + s.field_offset_db())).abs() < 1e-9);
        assert_eq!(cells[0].band, "GE50");
    }

    #[test]
    fn no_interfering_transmitters_is_green() {
        let s = border(1e-3, 1e-9);
        let m = render_interference_map(&s, &PowerFactors::full(), "X", &grid_for(&s), &ColorTable::default()).unwrap();
        let cells: Vec<&Pixel> = m.cells.iter().flatten().collect();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().all(|p| p.color == [0, 200, 0]));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let s = border(1e-3, 1e-9);
        let g = GridSpec::new(0.0, 1.0, 0.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            render_interference_map(&s, &PowerFactors::full(), "F", &g, &ColorTable::default()),
            Err(MapError::EmptyGrid)
        ));
        assert!(matches!(
            render_service_map(&s, &PowerFactors::full(), &MapFilter::Network(NetId(9)), &grid_for(&s), &ColorTable::default()),
            Err(MapError::UnknownFilter(_))
        ));
    }

    #[test]
    fn ppm_layout() {
        let s = border(1e-3, 1e-9);
        let m = render_interference_map(&s, &PowerFactors::full(), "F", &grid_for(&s), &ColorTable::default()).unwrap();
        let ppm = m.to_ppm();
        let header = format!("P6\n{} {}\n255\n", m.width, m.height);
        assert!(ppm.starts_with(header.as_bytes()));
        assert_eq!(ppm.len(), header.len() + 3 * m.width * m.height);
        assert!(m.to_csv().starts_with("pixel_x,pixel_y,value_db,band\n"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn qos_colors_are_monotone(a in -40.0f64..10.0, b in -40.0f64..10.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(qos_level(hi) >= qos_level(lo));
            }

            #[test]
            fn field_bands_are_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
                let c = ColorTable::default();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(c.field_band(hi) <= c.field_band(lo));
            }

            #[test]
            fn lowering_an_interferer_never_worsens_service(y2 in 0.0f64..=1.0, useful in 1e-4f64..1e-2, interf in 1e-5f64..1e-1) {
                let s = border(useful, interf);
                let g = grid_for(&s);
                let filter = MapFilter::Admin("D".into());
                let c = ColorTable::default();
                let before = render_service_map(&s, &PowerFactors::full(), &filter, &g, &c).unwrap();
                let lowered: PowerFactors = [(TxId(2), y2)].into_iter().collect();
                let after = render_service_map(&s, &lowered, &filter, &g, &c).unwrap();
                for (b, a) in before.cells.iter().zip(&after.cells) {
                    match (b, a) {
                        (Some(b), Some(a)) => prop_assert!(qos_level(a.value_db) >= qos_level(b.value_db)),
                        (None, None) => {}
                        _ => prop_assert!(false, "pixel occupancy changed"),
                    }
                }
            }
        }
    }
}
