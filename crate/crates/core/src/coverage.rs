//! Best servers, SINR, QoS grades and served-population reports.
//!
//! A (receiving point, network) pair is a *service pair* when the network
//! belongs to the receiving point's administration and at least one of its
//! transmitters is received there. Each service pair has a best server
//! `t_ra` (largest useful power at full power, smallest id on ties) and a set
//! `I_ra` of co-channel interferers: every other transmitter on the server's
//! frequency whose interfering power reaches the interference cutoff, from
//! any network or administration, including the server's own network.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::propagation::{received_interfering_power, received_useful_power};
use crate::scenario::{RadioParams, Scenario, Transmitter};
use crate::{NetId, PairKey, RxId, TxId};

/// Relative slack on the SINR threshold when deciding whether a pair is
/// served. Solver output sits exactly on the threshold for tight rows, so a
/// strict comparison would flip on the last few bits.
pub const SERVICE_RTOL: f64 = 1e-6;

/// QoS thresholds in dB for Q4, Q3, Q2, Q1.
pub const QOS_THRESHOLDS_DB: [f64; 4] = [0.0, -6.0, -12.0, -15.0];

/// A pair `(r,a)` whose current service must be preserved.
pub type ProtectedPair = PairKey;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub transmitter: TxId,
    /// Interfering power at full emitted power, watts.
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerAssignment {
    pub receiver: RxId,
    pub network: NetId,
    pub server: TxId,
    /// Useful power of the server at full emitted power, watts.
    pub useful_power_w: f64,
    pub interferers: Vec<Interferer>,
}

impl ServerAssignment {
    pub fn pair(&self) -> PairKey {
        PairKey::new(self.receiver, self.network)
    }
}

/// Power factors `y_t ∈ [0,1]`. Transmitters not listed run at full power.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerFactors(BTreeMap<TxId, f64>);

impl PowerFactors {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn get(&self, tx: TxId) -> f64 {
        self.0.get(&tx).copied().unwrap_or(1.0)
    }

    pub fn set(&mut self, tx: TxId, y: f64) {
        self.0.insert(tx, y);
    }

    pub fn iter(&self) -> impl Iterator<Item = (TxId, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(TxId, f64)> for PowerFactors {
    fn from_iter<I: IntoIterator<Item = (TxId, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QosLevel {
    Unserved,
    Q1,
    Q2,
    Q3,
    Q4,
}

impl fmt::Display for QosLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QosLevel::Unserved => "UNSERVED",
            QosLevel::Q1 => "Q1",
            QosLevel::Q2 => "Q2",
            QosLevel::Q3 => "Q3",
            QosLevel::Q4 => "Q4",
        })
    }
}

pub fn qos_level(sinr_db: f64) -> QosLevel {
    let [q4, q3, q2, q1] = QOS_THRESHOLDS_DB;
    if sinr_db >= q4 {
        QosLevel::Q4
    } else if sinr_db >= q3 {
        QosLevel::Q3
    } else if sinr_db >= q2 {
        QosLevel::Q2
    } else if sinr_db >= q1 {
        QosLevel::Q1
    } else {
        QosLevel::Unserved
    }
}

/// SINR as dB; zero maps to −∞.
pub fn sinr_db(sinr: f64) -> f64 {
    if sinr > 0.0 {
        10.0 * sinr.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// `p_{r,t_ra}·y_{t_ra} / (Σ_{j∈I_ra} p̄_rj·y_j + p_min)`.
pub fn sinr(assignment: &ServerAssignment, y: &PowerFactors, params: &RadioParams) -> f64 {
    let useful = assignment.useful_power_w * y.get(assignment.server);
    let interference: f64 = assignment
        .interferers
        .iter()
        .map(|i| i.power_w * y.get(i.transmitter))
        .sum();
    useful / (interference + params.p_min)
}

/// The coverage predicate `sinr ≥ θ`, up to [`SERVICE_RTOL`].
pub fn meets_threshold(sinr: f64, theta: f64) -> bool {
    sinr >= theta * (1.0 - SERVICE_RTOL)
}

fn interferers_of(s: &Scenario, rx: RxId, server: &Transmitter) -> Vec<Interferer> {
    let radio = s.radio();
    s.links_of(rx)
        .iter()
        .filter_map(|l| {
            if l.transmitter_id == server.id {
                return None;
            }
            let t = s.transmitter(l.transmitter_id)?;
            if t.freq_khz != server.freq_khz {
                return None;
            }
            let p = received_interfering_power(l, t.power_w, 1.0, radio.protection_ratio);
            (p >= radio.interference_cutoff && p > 0.0).then_some(Interferer {
                transmitter: t.id,
                power_w: p,
            })
        })
        .collect()
}

/// Best server of `net` at `rx`, or `None` when no transmitter of the network is received.
pub fn best_server(s: &Scenario, rx: RxId, net: NetId) -> Option<ServerAssignment> {
    let mut best: Option<(&Transmitter, f64)> = None;
    for (t, l) in s.received_transmitters(rx) {
        if t.network_id != net {
            continue;
        }
        let p = received_useful_power(l, t.power_w, 1.0);
        // links are sorted by transmitter id, so strict > keeps the smallest id on ties
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((t, p));
        }
    }
    let (server, useful_power_w) = best?;
    Some(ServerAssignment {
        receiver: rx,
        network: net,
        server: server.id,
        useful_power_w,
        interferers: interferers_of(s, rx, server),
    })
}

/// Networks of the receiving point's administration received there, ascending.
fn candidate_networks(s: &Scenario, rx: RxId) -> Vec<NetId> {
    let Some(r) = s.receiver(rx) else {
        return Vec::new();
    };
    let mut nets: Vec<NetId> = s
        .received_transmitters(rx)
        .filter(|(t, _)| s.network(t.network_id).is_some_and(|n| n.admin == r.admin))
        .map(|(t, _)| t.network_id)
        .collect();
    nets.sort_unstable();
    nets.dedup();
    nets
}

/// Best-server assignments of every service pair, sorted by `(receiver, network)`.
pub fn service_pairs(s: &Scenario) -> Vec<ServerAssignment> {
    s.receivers()
        .iter()
        .flat_map(|r| {
            candidate_networks(s, r.id)
                .into_iter()
                .filter_map(move |a| best_server(s, r.id, a))
        })
        .collect()
}

/// `Z`: service pairs whose best server meets the SINR threshold at full power.
///
/// The comparison is exact (no [`SERVICE_RTOL`] slack) so that every
/// protected row is satisfiable at `y = 1`.
pub fn current_service_set(s: &Scenario) -> BTreeSet<ProtectedPair> {
    let full = PowerFactors::full();
    service_pairs(s)
        .iter()
        .filter(|a| sinr(a, &full, s.radio()) >= s.radio().theta)
        .map(ServerAssignment::pair)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    /// Evaluate only the full-power best server of each pair.
    FixedServer,
    /// Take the best SINR over every received transmitter of the network.
    FreeServer,
}

impl fmt::Display for CoverageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageMode::FixedServer => "fixed-server",
            CoverageMode::FreeServer => "free-server",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCoverage {
    pub pair: PairKey,
    /// The evaluated server: `t_ra` in fixed mode, the SINR maximizer in free mode.
    pub server: TxId,
    pub sinr: f64,
    pub qos: QosLevel,
    pub served: bool,
    pub population: u64,
    pub receiver_admin: String,
}

impl PairCoverage {
    pub fn sinr_db(&self) -> f64 {
        sinr_db(self.sinr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub mode: CoverageMode,
    /// Sorted by `(receiver, network)`.
    pub pairs: Vec<PairCoverage>,
    pub served_by_network: BTreeMap<NetId, u64>,
    pub potential_by_network: BTreeMap<NetId, u64>,
    /// Keyed by the receiving point's administration.
    pub served_by_admin: BTreeMap<String, u64>,
    pub potential_by_admin: BTreeMap<String, u64>,
}

pub const COVERAGE_CSV_HEADER: &str = "receiver_id,network_id,server_id,sinr_db,qos,served";

impl CoverageReport {
    fn from_pairs(mode: CoverageMode, mut pairs: Vec<PairCoverage>, s: &Scenario) -> Self {
        pairs.sort_by_key(|p| p.pair);
        let mut served_by_network: BTreeMap<NetId, u64> = s.networks().iter().map(|n| (n.id, 0)).collect();
        let mut potential_by_network = served_by_network.clone();
        let mut served_by_admin = BTreeMap::new();
        let mut potential_by_admin = BTreeMap::new();
        for p in &pairs {
            *potential_by_network.entry(p.pair.network).or_insert(0) += p.population;
            *potential_by_admin.entry(p.receiver_admin.clone()).or_insert(0) += p.population;
            served_by_admin.entry(p.receiver_admin.clone()).or_insert(0);
            if p.served {
                *served_by_network.entry(p.pair.network).or_insert(0) += p.population;
                *served_by_admin.get_mut(&p.receiver_admin).expect("inserted above") += p.population;
            }
        }
        Self {
            mode,
            pairs,
            served_by_network,
            potential_by_network,
            served_by_admin,
            potential_by_admin,
        }
    }

    pub fn total_served(&self) -> u64 {
        self.served_by_admin.values().sum()
    }

    /// Served population over receiving points whose admin satisfies `pred`.
    pub fn served_where(&self, pred: impl Fn(&str) -> bool) -> u64 {
        self.served_by_admin
            .iter()
            .filter(|(a, _)| pred(a))
            .map(|(_, v)| v)
            .sum()
    }

    pub fn served_pairs(&self) -> BTreeSet<PairKey> {
        self.pairs.iter().filter(|p| p.served).map(|p| p.pair).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.pairs.len() + 1));
        out.push_str(COVERAGE_CSV_HEADER);
        out.push('\n');
        for p in &self.pairs {
            let db = p.sinr_db();
            let db = if db.is_finite() { format!("{db:.6}") } else { "-inf".to_string() };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.pair.receiver,
                p.pair.network,
                p.server,
                db,
                p.qos,
                u8::from(p.served)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_csv())
    }
}

/// Best free-server SINR of network `a` at `rx` under `y`, with the maximizing server.
pub(crate) fn free_server_sinr(
    s: &Scenario,
    rx: RxId,
    net: NetId,
    y: &PowerFactors,
) -> Option<(TxId, f64)> {
    let mut best: Option<(TxId, f64)> = None;
    for (t, l) in s.received_transmitters(rx) {
        if t.network_id != net {
            continue;
        }
        let candidate = ServerAssignment {
            receiver: rx,
            network: net,
            server: t.id,
            useful_power_w: received_useful_power(l, t.power_w, 1.0),
            interferers: interferers_of(s, rx, t),
        };
        let v = sinr(&candidate, y, s.radio());
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((t.id, v));
        }
    }
    best
}

pub fn coverage_report(s: &Scenario, y: &PowerFactors, mode: CoverageMode) -> CoverageReport {
    let theta = s.radio().theta;
    let pairs = service_pairs(s)
        .into_iter()
        .map(|a| {
            let (server, value) = match mode {
                CoverageMode::FixedServer => (a.server, sinr(&a, y, s.radio())),
                CoverageMode::FreeServer => {
                    free_server_sinr(s, a.receiver, a.network, y).expect("pair has a received server")
                }
            };
            let r = s.receiver(a.receiver).expect("pair receiver exists");
            PairCoverage {
                pair: a.pair(),
                server,
                sinr: value,
                qos: qos_level(sinr_db(value)),
                served: meets_threshold(value, theta),
                population: r.population,
                receiver_admin: r.admin.clone(),
            }
        })
        .collect();
    CoverageReport::from_pairs(mode, pairs, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{db_from_linear, linear_from_db};
    use crate::scenario::fixtures::*;

    fn assignment(useful: f64, interferers: &[(u32, f64)]) -> ServerAssignment {
        ServerAssignment {
            receiver: RxId(1),
            network: NetId(1),
            server: TxId(100),
            useful_power_w: useful,
            interferers: interferers
                .iter()
                .map(|&(id, p)| Interferer {
                    transmitter: TxId(id),
                    power_w: p,
                })
                .collect(),
        }
    }

    #[test]
    fn single_transmitter_private_channel() {
        let s = build(
            radio(),
            vec![net(1, "D")],
            vec![tx(1, 1, 98000, 10.0, true)],
            vec![rx(1, "D", 5)],
            vec![link(1, 1, 1e-2, 1e-2)],
        );
        let a = best_server(&s, RxId(1), NetId(1)).unwrap();
        assert_eq!(a.server, TxId(1));
        assert!(a.interferers.is_empty());
        assert!(best_server(&s, RxId(1), NetId(2)).is_none());
    }

    #[test]
    fn stronger_sibling_wins_weaker_interferes() {
        // useful powers 10 W and 5 W, same network, same channel
        let s = build(
            radio(),
            vec![net(1, "D")],
            vec![tx(1, 1, 98000, 100.0, true), tx(2, 1, 98000, 50.0, true)],
            vec![rx(1, "D", 5)],
            vec![link(1, 1, 0.1, 0.1), link(1, 2, 0.1, 0.1)],
        );
        let a = best_server(&s, RxId(1), NetId(1)).unwrap();
        assert_eq!(a.server, TxId(1));
        assert!((a.useful_power_w - 10.0).abs() < 1e-12);
        assert_eq!(a.interferers.len(), 1);
        assert_eq!(a.interferers[0].transmitter, TxId(2));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let s = build(
            radio(),
            vec![net(1, "D")],
            vec![tx(7, 1, 98000, 10.0, true), tx(3, 1, 98100, 10.0, true)],
            vec![rx(1, "D", 5)],
            vec![link(1, 7, 0.1, 0.1), link(1, 3, 0.1, 0.1)],
        );
        assert_eq!(best_server(&s, RxId(1), NetId(1)).unwrap().server, TxId(3));
    }

    #[test]
    fn weak_cochannel_below_cutoff_is_ignored() {
        // cutoff = p_min/100 = 1e-5 W
        let s = build(
            radio(),
            vec![net(1, "D"), net(2, "D")],
            vec![tx(1, 1, 98000, 100.0, true), tx(2, 2, 98000, 100.0, true)],
            vec![rx(1, "D", 5)],
            vec![link(1, 1, 1e-2, 1e-2), link(1, 2, 1e-8, 9e-8)],
        );
        assert!(best_server(&s, RxId(1), NetId(1)).unwrap().interferers.is_empty());
    }

    #[test]
    fn sinr_capodistria_figures() {
        // The server is foreign and keeps its power. Its useful level is
        // 86.08 − 14.15 dB, quoted to 0.01 dB; 71.935 dB reproduces both
        // quoted SINRs within that rounding.
        let useful = linear_from_db(71.935);
        // Before: 86.07 dB from the main interferer, the rest of the
        // interference and the noise bringing the total to 86.08 dB.
        let params = RadioParams {
            p_min: linear_from_db(86.08) - linear_from_db(86.07),
            ..radio()
        };
        let a = assignment(useful, &[(4500, linear_from_db(86.07))]);
        let before = db_from_linear(sinr(&a, &PowerFactors::full(), &params)).unwrap();
        assert!((before - -14.15).abs() < 0.01);
        assert_eq!(qos_level(before), QosLevel::Q1);

        // After: the main interferer at 73.07 dB, total 73.30 dB.
        let params = RadioParams {
            p_min: linear_from_db(73.30) - linear_from_db(73.07),
            ..radio()
        };
        let a = assignment(useful, &[(4500, linear_from_db(73.07))]);
        let after = db_from_linear(sinr(&a, &PowerFactors::full(), &params)).unwrap();
        assert!((after - -1.36).abs() < 0.01);
        assert_eq!(qos_level(after), QosLevel::Q3);
    }

    #[test]
    fn sinr_boundary_equals_theta() {
        let p = radio();
        let a = assignment(p.theta * p.p_min, &[]);
        assert_eq!(sinr(&a, &PowerFactors::full(), &p), p.theta);
        assert!(meets_threshold(p.theta, p.theta));
    }

    #[test]
    fn sinr_scales_with_power_factors() {
        let p = RadioParams { p_min: 1.0, ..radio() };
        let a = assignment(10.0, &[(2, 4.0)]);
        let mut y = PowerFactors::full();
        assert!((sinr(&a, &y, &p) - 2.0).abs() < 1e-12);
        y.set(TxId(2), 0.25);
        assert!((sinr(&a, &y, &p) - 5.0).abs() < 1e-12);
        y.set(TxId(100), 0.5);
        assert!((sinr(&a, &y, &p) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn qos_grades() {
        assert_eq!(qos_level(-1.36), QosLevel::Q3);
        assert_eq!(qos_level(-14.15), QosLevel::Q1);
        assert_eq!(qos_level(-15.0), QosLevel::Q1);
        assert_eq!(qos_level(-15.01), QosLevel::Unserved);
        assert_eq!(qos_level(0.0), QosLevel::Q4);
        assert_eq!(qos_level(-6.0), QosLevel::Q3);
        assert_eq!(qos_level(-12.0), QosLevel::Q2);
        assert_eq!(qos_level(f64::NEG_INFINITY), QosLevel::Unserved);
    }

    #[test]
    fn isolated_transmitter_is_protected() {
        let p = radio();
        let s = build(
            p,
            vec![net(1, "D")],
            vec![tx(1, 1, 98000, 1.0, true)],
            vec![rx(1, "D", 5)],
            // useful power 2·p_min, no interference: SINR = 2 = θ
            vec![link(1, 1, 2.0 * p.p_min, 2.0 * p.p_min)],
        );
        let z = current_service_set(&s);
        assert!(z.contains(&PairKey::new(RxId(1), NetId(1))));
    }

    #[test]
    fn mutual_jamming_empties_z() {
        // At receiver 1 both networks see SINR = 0.1/(0.1 + 0.001) < 2.
        // Receiver 2 only sees network 2 at 1 W with no co-channel signal.
        let s = two_network_jam();
        let z = current_service_set(&s);
        assert_eq!(z, BTreeSet::from([PairKey::new(RxId(2), NetId(2))]));
        let only_jammed = build(
            radio(),
            vec![net(1, "D"), net(2, "D")],
            vec![tx(1, 1, 98000, 100.0, true), tx(2, 2, 98000, 100.0, true)],
            vec![rx(1, "D", 1000)],
            vec![link(1, 1, 1e-3, 1e-3), link(1, 2, 1e-3, 1e-3)],
        );
        assert!(current_service_set(&only_jammed).is_empty());
    }

    #[test]
    fn service_pairs_stay_within_administration() {
        let s = build(
            radio(),
            vec![net(1, "D"), net(2, "F")],
            vec![tx(1, 1, 98000, 100.0, true), tx(2, 2, 98100, 100.0, false)],
            vec![rx(1, "D", 10), rx(2, "F", 20)],
            vec![
                link(1, 1, 1e-2, 1e-2),
                link(1, 2, 1e-2, 1e-2),
                link(2, 1, 1e-2, 1e-2),
                link(2, 2, 1e-2, 1e-2),
            ],
        );
        let pairs: Vec<PairKey> = service_pairs(&s).iter().map(|a| a.pair()).collect();
        assert_eq!(
            pairs,
            vec![PairKey::new(RxId(1), NetId(1)), PairKey::new(RxId(2), NetId(2))]
        );
    }

    #[test]
    fn fixed_server_at_full_power_serves_exactly_z() {
        let s = two_network_jam();
        let report = coverage_report(&s, &PowerFactors::full(), CoverageMode::FixedServer);
        assert_eq!(report.served_pairs(), current_service_set(&s));
        assert_eq!(report.total_served(), 300);
    }

    /// Two networks on one channel, two transmitters each. Receiver 1 (P=1000)
    /// is served by tx 1 (net 1) but jammed by tx 3 (net 2).
    fn four_transmitter_fixture() -> Scenario {
        build(
            radio(),
            vec![net(1, "D"), net(2, "D")],
            vec![
                tx(1, 1, 98000, 100.0, true),
                tx(2, 1, 98200, 100.0, true),
                tx(3, 2, 98000, 100.0, true),
                tx(4, 2, 98200, 100.0, true),
            ],
            vec![rx(1, "D", 1000), rx(2, "D", 200)],
            vec![
                // r1: useful from tx1 1 W; tx3 interferes at 0.6 W (its own network unreceived there)
                link(1, 1, 1e-2, 1e-2),
                link(1, 3, 3e-6, 6e-3),
                // r2: clean service of network 2 by tx4
                link(2, 4, 1e-2, 1e-2),
            ],
        )
    }

    #[test]
    fn halving_the_interferer_gains_the_jammed_population() {
        let s = four_transmitter_fixture();
        let before = coverage_report(&s, &PowerFactors::full(), CoverageMode::FixedServer);
        // SINR before = 1 / (0.6 + 0.001) = 1.66 < 2
        assert_eq!(before.total_served(), 200);
        let mut y = PowerFactors::full();
        y.set(TxId(3), 0.5);
        // SINR after = 1 / (0.3 + 0.001) = 3.32 >= 2
        let after = coverage_report(&s, &y, CoverageMode::FixedServer);
        assert_eq!(after.total_served() - before.total_served(), 1000);
    }

    #[test]
    fn free_server_never_below_fixed_server() {
        let s = build(
            radio(),
            vec![net(1, "D")],
            vec![
                tx(1, 1, 98000, 100.0, true),
                tx(2, 1, 98100, 100.0, true),
                tx(3, 1, 98000, 100.0, true),
            ],
            vec![rx(1, "D", 50)],
            vec![
                link(1, 1, 2e-3, 2e-3),
                link(1, 3, 2e-3, 2e-3),
                // weaker but on a clean channel
                link(1, 2, 1e-3, 1e-3),
            ],
        );
        let y = PowerFactors::full();
        let fixed = coverage_report(&s, &y, CoverageMode::FixedServer);
        let free = coverage_report(&s, &y, CoverageMode::FreeServer);
        assert_eq!(fixed.pairs[0].server, TxId(1));
        assert!(!fixed.pairs[0].served);
        assert_eq!(free.pairs[0].server, TxId(2));
        assert!(free.pairs[0].served);
        assert!(free.total_served() >= fixed.total_served());
    }

    #[test]
    fn csv_layout() {
        let s = two_network_jam();
        let csv = coverage_report(&s, &PowerFactors::full(), CoverageMode::FixedServer).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(COVERAGE_CSV_HEADER));
        assert_eq!(lines.count(), 3);
        assert!(csv.contains("\n2,2,2,"));
    }

    mod props {
        use super::*;
        use crate::scenario::{generate_synthetic, SyntheticParams};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn lowering_interferers_never_hurts(
                useful in 1e-3f64..10.0,
                powers in prop::collection::vec(1e-3f64..10.0, 1..6),
                ys in prop::collection::vec(0.0f64..1.0, 6),
                which in 0usize..6,
                cut in 0.0f64..1.0,
            ) {
                let p = RadioParams { p_min: 0.01, ..radio() };
                let ifs: Vec<(u32, f64)> = powers.iter().enumerate().map(|(i, &v)| (i as u32 + 1, v)).collect();
                let a = assignment(useful, &ifs);
                let mut y: PowerFactors = ifs.iter().zip(&ys).map(|(&(id, _), &v)| (TxId(id), v)).collect();
                let before = sinr(&a, &y, &p);
                let j = TxId((which % ifs.len()) as u32 + 1);
                y.set(j, y.get(j) * cut);
                prop_assert!(sinr(&a, &y, &p) >= before);
            }

            #[test]
            fn sinr_is_scale_invariant(useful in 1e-3f64..10.0, interf in 1e-3f64..10.0, k in 1e-3f64..1e3) {
                let p = RadioParams { p_min: 0.05, ..radio() };
                let a = assignment(useful, &[(1, interf)]);
                let scaled_p = RadioParams { p_min: 0.05 * k, ..p };
                let b = assignment(useful * k, &[(1, interf * k)]);
                let y = PowerFactors::full();
                let (x1, x2) = (sinr(&a, &y, &p), sinr(&b, &y, &scaled_p));
                prop_assert!(((x1 - x2) / x1).abs() < 1e-12);
            }

            #[test]
            fn report_totals_and_bounds(seed in 0u64..1000) {
                let s = generate_synthetic(seed, &SyntheticParams::tiny()).unwrap();
                let y: PowerFactors = s.transmitters().iter().filter(|t| t.optimizable)
                    .map(|t| (t.id, 0.3 + 0.7 * ((t.id.0 * 7919 % 101) as f64 / 100.0))).collect();
                let fixed = coverage_report(&s, &y, CoverageMode::FixedServer);
                let free = coverage_report(&s, &y, CoverageMode::FreeServer);
                prop_assert_eq!(fixed.total_served(), fixed.served_by_network.values().sum::<u64>());
                prop_assert!(free.total_served() >= fixed.total_served());
                for (net, served) in &fixed.served_by_network {
                    prop_assert!(*served <= fixed.potential_by_network[net]);
                }
                for a in service_pairs(&s) {
                    if current_service_set(&s).contains(&a.pair()) {
                        prop_assert!(meets_threshold(sinr(&a, &PowerFactors::full(), s.radio()), s.radio().theta));
                    }
                }
            }
        }
    }
}
