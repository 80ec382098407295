//! World model: radio parameters, networks, transmitters, receiving points
//! and the fading coefficients linking them.
//!
//! A [`Scenario`] is immutable once built. Entities are kept sorted by id and
//! links by `(receiver, transmitter)`, so two scenarios holding the same data
//! compare equal regardless of input order.

mod io;
mod synthetic;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use thiserror::Error;

use crate::propagation::{path_fading, PathLossModel};
use crate::{Channel, NetId, RxId, TxId};

pub use io::{load_scenario, write_scenario, WriteOptions};
pub use synthetic::{generate_synthetic, Region, SyntheticParams, DOMESTIC_ADMIN, FOREIGN_ADMIN};

/// Default power-to-field offset K, dB: field dB(µV/m) = power dBm + K.
///
/// 77.2 + 20·log10(100 MHz) for an isotropic receive antenna at mid band.
pub const DEFAULT_FIELD_OFFSET_DB: f64 = 117.2;

/// Global radio parameters. Powers in watts, ratios linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Background noise `p_min`.
    pub p_min: f64,
    /// SINR coverage threshold θ.
    pub theta: f64,
    pub protection_ratio: f64,
    pub p_max: f64,
    /// Minimum useful power for a transmitter to count as received.
    pub reception_floor: f64,
    /// Minimum interfering power for a co-channel transmitter to count as an interferer.
    pub interference_cutoff: f64,
}

impl RadioParams {
    /// Floor and cutoff derived from `p_min` (`p_min` and `p_min/100`).
    pub fn with_defaults(p_min: f64, theta: f64, protection_ratio: f64, p_max: f64) -> Self {
        Self {
            p_min,
            theta,
            protection_ratio,
            p_max,
            reception_floor: p_min,
            interference_cutoff: p_min / 100.0,
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("p_min_w", self.p_min),
            ("theta", self.theta),
            ("protection_ratio", self.protection_ratio),
            ("p_max_w", self.p_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("radio params: {name} must be positive"));
            }
        }
        let non_negative = [
            ("reception_floor_w", self.reception_floor),
            ("interference_cutoff_w", self.interference_cutoff),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("radio params: {name} must be non-negative"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub id: NetId,
    /// Administration code, e.g. `IT`, `SLO`, `F`.
    pub admin: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub id: TxId,
    pub network_id: NetId,
    pub admin: String,
    pub freq_khz: u32,
    /// Current emitted power `p_t`, watts.
    pub power_w: f64,
    pub lon: f64,
    pub lat: f64,
    /// Whether the power of this transmitter may be reduced.
    pub optimizable: bool,
}

impl Transmitter {
    pub fn channel(&self) -> Channel {
        Channel(self.freq_khz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivingPoint {
    pub id: RxId,
    pub admin: String,
    pub lon: f64,
    pub lat: f64,
    pub population: u64,
}

/// Fading coefficients between one receiving point and one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceptionLink {
    pub receiver_id: RxId,
    pub transmitter_id: TxId,
    /// `a_rt`, applied to useful power.
    pub a_useful: f64,
    /// `ā_rt`, applied to interfering power.
    pub a_interf: f64,
}

/// Where link coefficients come from when building a scenario.
#[derive(Debug, Clone)]
pub enum LinkSource {
    Explicit(Vec<ReceptionLink>),
    /// Evaluate the path-loss model for every pair within its cutoff.
    PathModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    InvalidValue,
    DanglingReference,
    DuplicateId,
}

/// One broken invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: ViolationKind::InvalidValue,
            message: message.into(),
        }
    }

    fn dangling(message: impl Into<String>) -> Self {
        Self {
            kind: ViolationKind::DanglingReference,
            message: message.into(),
        }
    }

    fn duplicate(message: impl Into<String>) -> Self {
        Self {
            kind: ViolationKind::DuplicateId,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}:{column}: malformed row: {message}")]
    Malformed {
        file: String,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("invalid scenario: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("invalid generator parameters: {0}")]
    Generator(String),
}

impl ScenarioError {
    /// Picks the most specific error for a non-empty violation list.
    fn from_violations(violations: Vec<Violation>) -> Self {
        if let Some(v) = violations
            .iter()
            .find(|v| v.kind == ViolationKind::DanglingReference)
        {
            return ScenarioError::DanglingReference(v.message.clone());
        }
        if let Some(v) = violations.iter().find(|v| v.kind == ViolationKind::DuplicateId) {
            return ScenarioError::DuplicateId(v.message.clone());
        }
        ScenarioError::Invalid(violations)
    }
}

/// The immutable world model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    radio: RadioParams,
    path_model: PathLossModel,
    field_offset_db: f64,
    networks: Vec<Network>,
    transmitters: Vec<Transmitter>,
    receivers: Vec<ReceivingPoint>,
    links: Vec<ReceptionLink>,
    net_index: HashMap<NetId, usize>,
    tx_index: HashMap<TxId, usize>,
    rx_index: HashMap<RxId, usize>,
    /// Per receiver (by position), its contiguous range in `links`.
    rx_links: Vec<Range<usize>>,
}

/// Everything needed to assemble a [`Scenario`].
#[derive(Debug, Clone)]
pub struct ScenarioParts {
    pub radio: RadioParams,
    pub path_model: PathLossModel,
    pub field_offset_db: f64,
    pub networks: Vec<Network>,
    pub transmitters: Vec<Transmitter>,
    pub receivers: Vec<ReceivingPoint>,
    pub links: LinkSource,
}

impl Scenario {
    /// Assembles and validates.
    pub fn build(parts: ScenarioParts) -> Result<Self, ScenarioError> {
        let s = Self::assemble(parts);
        let violations = s.validate();
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(ScenarioError::from_violations(violations))
        }
    }

    /// Assembles without validating. Useful for inspecting broken inputs with
    /// [`Scenario::validate`].
    pub fn assemble(parts: ScenarioParts) -> Self {
        let ScenarioParts {
            radio,
            path_model,
            field_offset_db,
            mut networks,
            mut transmitters,
            mut receivers,
            links,
        } = parts;
        networks.sort_by_key(|n| n.id);
        transmitters.sort_by_key(|t| t.id);
        receivers.sort_by_key(|r| r.id);

        let net_index = first_index(networks.iter().map(|n| n.id));
        let tx_index = first_index(transmitters.iter().map(|t| t.id));
        let rx_index = first_index(receivers.iter().map(|r| r.id));

        let mut links = match links {
            LinkSource::Explicit(links) => links,
            LinkSource::PathModel => compute_links(&receivers, &transmitters, &path_model),
        };
        links.sort_by_key(|l| (l.receiver_id, l.transmitter_id));

        let mut rx_links = vec![0..0; receivers.len()];
        let mut start = 0;
        while start < links.len() {
            let rid = links[start].receiver_id;
            let mut end = start + 1;
            while end < links.len() && links[end].receiver_id == rid {
                end += 1;
            }
            if let Some(&ri) = rx_index.get(&rid) {
                rx_links[ri] = start..end;
            }
            start = end;
        }

        Self {
            radio,
            path_model,
            field_offset_db,
            networks,
            transmitters,
            receivers,
            links,
            net_index,
            tx_index,
            rx_index,
            rx_links,
        }
    }

    /// Lists every broken invariant; empty iff the scenario is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .radio
            .violations()
            .into_iter()
            .chain(self.path_model.violations())
            .map(Violation::invalid)
            .collect();
        if !self.field_offset_db.is_finite() {
            out.push(Violation::invalid("config: field_offset_db must be finite"));
        }

        for w in self.networks.windows(2) {
            if w[0].id == w[1].id {
                out.push(Violation::duplicate(format!("network {}", w[0].id)));
            }
        }
        for w in self.transmitters.windows(2) {
            if w[0].id == w[1].id {
                out.push(Violation::duplicate(format!("transmitter {}", w[0].id)));
            }
        }
        for w in self.receivers.windows(2) {
            if w[0].id == w[1].id {
                out.push(Violation::duplicate(format!("receiver {}", w[0].id)));
            }
        }
        for w in self.links.windows(2) {
            if (w[0].receiver_id, w[0].transmitter_id) == (w[1].receiver_id, w[1].transmitter_id)
            {
                out.push(Violation::duplicate(format!(
                    "link ({},{})",
                    w[0].receiver_id, w[0].transmitter_id
                )));
            }
        }

        for t in &self.transmitters {
            if !self.net_index.contains_key(&t.network_id) {
                out.push(Violation::dangling(format!(
                    "transmitter {}: network {} not found",
                    t.id, t.network_id
                )));
            }
            if !(t.power_w > 0.0) {
                out.push(Violation::invalid(format!(
                    "transmitter {}: power must be positive",
                    t.id
                )));
            } else if t.power_w > self.radio.p_max {
                out.push(Violation::invalid(format!(
                    "transmitter {}: power exceeds p_max",
                    t.id
                )));
            }
            if !valid_coordinates(t.lon, t.lat) {
                out.push(Violation::invalid(format!(
                    "transmitter {}: coordinates out of range",
                    t.id
                )));
            }
        }
        for r in &self.receivers {
            if !valid_coordinates(r.lon, r.lat) {
                out.push(Violation::invalid(format!(
                    "receiver {}: coordinates out of range",
                    r.id
                )));
            }
        }
        for l in &self.links {
            if !self.rx_index.contains_key(&l.receiver_id) {
                out.push(Violation::dangling(format!(
                    "link ({},{}): receiver {} not found",
                    l.receiver_id, l.transmitter_id, l.receiver_id
                )));
            }
            if !self.tx_index.contains_key(&l.transmitter_id) {
                out.push(Violation::dangling(format!(
                    "link ({},{}): transmitter {} not found",
                    l.receiver_id, l.transmitter_id, l.transmitter_id
                )));
            }
            let unit = |x: f64| (0.0..=1.0).contains(&x);
            if !unit(l.a_useful) || !unit(l.a_interf) {
                out.push(Violation::invalid(format!(
                    "link ({},{}): fading coefficient out of [0,1]",
                    l.receiver_id, l.transmitter_id
                )));
            }
        }
        out
    }

    pub fn radio(&self) -> &RadioParams {
        &self.radio
    }

    pub fn path_model(&self) -> &PathLossModel {
        &self.path_model
    }

    pub fn field_offset_db(&self) -> f64 {
        self.field_offset_db
    }

    pub fn networks(&self) -> &[Network] {
        &self.networks
    }

    pub fn transmitters(&self) -> &[Transmitter] {
        &self.transmitters
    }

    pub fn receivers(&self) -> &[ReceivingPoint] {
        &self.receivers
    }

    pub fn links(&self) -> &[ReceptionLink] {
        &self.links
    }

    pub fn network(&self, id: NetId) -> Option<&Network> {
        self.net_index.get(&id).map(|&i| &self.networks[i])
    }

    pub fn transmitter(&self, id: TxId) -> Option<&Transmitter> {
        self.tx_index.get(&id).map(|&i| &self.transmitters[i])
    }

    pub fn receiver(&self, id: RxId) -> Option<&ReceivingPoint> {
        self.rx_index.get(&id).map(|&i| &self.receivers[i])
    }

    /// All links of a receiving point, sorted by transmitter id.
    pub fn links_of(&self, rx: RxId) -> &[ReceptionLink] {
        match self.rx_index.get(&rx) {
            Some(&i) => &self.links[self.rx_links[i].clone()],
            None => &[],
        }
    }

    pub fn link(&self, rx: RxId, tx: TxId) -> Option<&ReceptionLink> {
        let links = self.links_of(rx);
        links
            .binary_search_by_key(&tx, |l| l.transmitter_id)
            .ok()
            .map(|i| &links[i])
    }

    /// `T(r)`: transmitters whose useful power at full power reaches the
    /// reception floor.
    pub fn received_transmitters(&self, rx: RxId) -> impl Iterator<Item = (&Transmitter, &ReceptionLink)> {
        let floor = self.radio.reception_floor;
        self.links_of(rx).iter().filter_map(move |l| {
            let t = self.transmitter(l.transmitter_id)?;
            (l.a_useful * t.power_w >= floor).then_some((t, l))
        })
    }

    /// Administrations owning at least one optimizable transmitter.
    pub fn domestic_admins(&self) -> Vec<&str> {
        let mut admins: Vec<&str> = self
            .transmitters
            .iter()
            .filter(|t| t.optimizable)
            .map(|t| t.admin.as_str())
            .collect();
        admins.sort_unstable();
        admins.dedup();
        admins
    }

    pub fn is_domestic(&self, admin: &str) -> bool {
        self.domestic_admins().contains(&admin)
    }

    /// Distinct channels in use, ascending.
    pub fn channels(&self) -> Vec<Channel> {
        let mut ch: Vec<Channel> = self.transmitters.iter().map(|t| t.channel()).collect();
        ch.sort_unstable();
        ch.dedup();
        ch
    }
}

pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    s.validate()
}

fn first_index<K: std::hash::Hash + Eq>(ids: impl Iterator<Item = K>) -> HashMap<K, usize> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        map.entry(id).or_insert(i);
    }
    map
}

fn valid_coordinates(lon: f64, lat: f64) -> bool {
    (-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat)
}

fn compute_links(
    receivers: &[ReceivingPoint],
    transmitters: &[Transmitter],
    model: &PathLossModel,
) -> Vec<ReceptionLink> {
    let mut links = Vec::new();
    for r in receivers {
        for t in transmitters {
            let (a_useful, a_interf) = path_fading(t, r, model);
            if a_useful > 0.0 || a_interf > 0.0 {
                links.push(ReceptionLink {
                    receiver_id: r.id,
                    transmitter_id: t.id,
                    a_useful,
                    a_interf,
                });
            }
        }
    }
    links
}
