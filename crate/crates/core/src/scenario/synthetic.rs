//! Seeded synthetic scenarios.
//!
//! The region box is split at a meridian: the western part belongs to the
//! domestic administration (optimizable transmitters), the eastern strip to a
//! foreign one whose transmitters keep their power. Draws:
//!
//! - network of each transmitter: uniform; the transmitter inherits its admin
//!   and is placed uniformly inside that admin's part of the box;
//! - channel: uniform over `channels` slots, `87.6 MHz + 100 kHz · slot`;
//! - power: log-uniform on `[p_max/50, p_max]`;
//! - receiving points: uniform over the whole box, admin by side of the split;
//! - population: `max(1, round(LogNormal(ln 400, 1.0)))`.
//!
//! Links come from the path-loss model. The RNG is ChaCha8, so output is
//! stable across platforms for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::{
    LinkSource, Network, RadioParams, ReceivingPoint, Scenario, ScenarioError, ScenarioParts,
    Transmitter, DEFAULT_FIELD_OFFSET_DB,
};
use crate::propagation::PathLossModel;
use crate::{NetId, RxId, TxId};

pub const DOMESTIC_ADMIN: &str = "DOM";
pub const FOREIGN_ADMIN: &str = "FOR";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub networks: usize,
    pub transmitters: usize,
    pub receivers: usize,
    pub channels: usize,
    pub region: Region,
    /// Share of the box (eastern strip) and of the networks that is foreign.
    pub foreign_share: f64,
    pub radio: RadioParams,
    pub path_model: PathLossModel,
}

impl SyntheticParams {
    /// Radio defaults for generated scenarios. θ is −15 dB (the lowest QoS
    /// grade); this is a toolkit default, not a measured value.
    pub fn default_radio() -> RadioParams {
        RadioParams::with_defaults(1e-10, 10f64.powf(-1.5), 1.0, 1e4)
    }

    /// A few dozen pairs; small enough for exhaustive checks.
    pub fn tiny() -> Self {
        Self {
            networks: 3,
            transmitters: 6,
            receivers: 8,
            channels: 2,
            region: Region {
                lon_min: 12.0,
                lon_max: 12.6,
                lat_min: 42.0,
                lat_max: 42.5,
            },
            foreign_share: 0.25,
            radio: Self::default_radio(),
            path_model: PathLossModel::default(),
        }
    }

    /// The fixture shipped with the command-line tool.
    pub fn small() -> Self {
        Self {
            networks: 6,
            transmitters: 24,
            receivers: 300,
            channels: 4,
            region: Region {
                lon_min: 12.0,
                lon_max: 13.0,
                lat_min: 42.0,
                lat_max: 42.8,
            },
            ..Self::tiny()
        }
    }

    /// 200 transmitters, 5000 receiving points.
    pub fn benchmark() -> Self {
        Self {
            networks: 40,
            transmitters: 200,
            receivers: 5000,
            channels: 20,
            region: Region {
                lon_min: 11.0,
                lon_max: 14.0,
                lat_min: 41.0,
                lat_max: 43.5,
            },
            ..Self::tiny()
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        for (name, v) in [
            ("networks", self.networks),
            ("transmitters", self.transmitters),
            ("receivers", self.receivers),
            ("channels", self.channels),
        ] {
            if v == 0 {
                return Err(ScenarioError::Generator(format!("{name} must be at least 1")));
            }
        }
        let r = &self.region;
        if !(r.lon_min < r.lon_max && r.lat_min < r.lat_max) {
            return Err(ScenarioError::Generator("region box is degenerate".to_string()));
        }
        if !(0.0..1.0).contains(&self.foreign_share) {
            return Err(ScenarioError::Generator("foreign_share must lie in [0,1)".to_string()));
        }
        Ok(())
    }
}

pub fn generate_synthetic(seed: u64, params: &SyntheticParams) -> Result<Scenario, ScenarioError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = params.region;
    let split_lon = region.lon_max - params.foreign_share * (region.lon_max - region.lon_min);

    let foreign_networks = if params.networks >= 2 {
        ((params.networks as f64 * params.foreign_share).round() as usize).clamp(1, params.networks - 1)
    } else {
        0
    };
    let domestic_networks = params.networks - foreign_networks;
    let networks: Vec<Network> = (0..params.networks)
        .map(|i| {
            let admin = if i < domestic_networks { DOMESTIC_ADMIN } else { FOREIGN_ADMIN };
            Network {
                id: NetId(i as u32 + 1),
                admin: admin.to_string(),
                name: format!("{admin}-{}", i + 1),
            }
        })
        .collect();

    let p_max = params.radio.p_max;
    let (log_lo, log_hi) = ((p_max / 50.0).ln(), p_max.ln());
    let transmitters: Vec<Transmitter> = (0..params.transmitters)
        .map(|i| {
            let net = &networks[rng.random_range(0..networks.len())];
            let domestic = net.admin == DOMESTIC_ADMIN;
            let lon = if domestic {
                rng.random_range(region.lon_min..split_lon)
            } else {
                rng.random_range(split_lon..region.lon_max)
            };
            let lat = rng.random_range(region.lat_min..region.lat_max);
            let slot = rng.random_range(0..params.channels) as u32;
            let power_w = rng.random_range(log_lo..=log_hi).exp().min(p_max);
            Transmitter {
                id: TxId(i as u32 + 1),
                network_id: net.id,
                admin: net.admin.clone(),
                freq_khz: 87_600 + 100 * slot,
                power_w,
                lon,
                lat,
                optimizable: domestic,
            }
        })
        .collect();

    let population = LogNormal::new(400f64.ln(), 1.0).expect("valid log-normal parameters");
    let receivers: Vec<ReceivingPoint> = (0..params.receivers)
        .map(|i| {
            let lon = rng.random_range(region.lon_min..region.lon_max);
            let lat = rng.random_range(region.lat_min..region.lat_max);
            let admin = if lon < split_lon { DOMESTIC_ADMIN } else { FOREIGN_ADMIN };
            ReceivingPoint {
                id: RxId(i as u32 + 1),
                admin: admin.to_string(),
                lon,
                lat,
                population: (population.sample(&mut rng).round() as u64).max(1),
            }
        })
        .collect();

    Scenario::build(ScenarioParts {
        radio: params.radio,
        path_model: params.path_model,
        field_offset_db: DEFAULT_FIELD_OFFSET_DB,
        networks,
        transmitters,
        receivers,
        links: LinkSource::PathModel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scenario() {
        let a = generate_synthetic(1, &SyntheticParams::small()).unwrap();
        let b = generate_synthetic(1, &SyntheticParams::small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_synthetic(1, &SyntheticParams::tiny()).unwrap();
        let b = generate_synthetic(2, &SyntheticParams::tiny()).unwrap();
        let coords = |s: &Scenario| {
            s.transmitters()
                .iter()
                .map(|t| (t.lon, t.lat))
                .chain(s.receivers().iter().map(|r| (r.lon, r.lat)))
                .collect::<Vec<_>>()
        };
        assert_ne!(coords(&a), coords(&b));
    }

    #[test]
    fn transmitters_reference_generated_networks() {
        let p = SyntheticParams {
            networks: 2,
            transmitters: 4,
            ..SyntheticParams::tiny()
        };
        let s = generate_synthetic(5, &p).unwrap();
        for t in s.transmitters() {
            assert!(t.network_id == NetId(1) || t.network_id == NetId(2));
        }
    }

    #[test]
    fn both_administrations_present() {
        let s = generate_synthetic(3, &SyntheticParams::small()).unwrap();
        let admins: Vec<&str> = s.networks().iter().map(|n| n.admin.as_str()).collect();
        assert!(admins.contains(&DOMESTIC_ADMIN) && admins.contains(&FOREIGN_ADMIN));
        for t in s.transmitters() {
            assert_eq!(t.optimizable, t.admin == DOMESTIC_ADMIN);
        }
        assert_eq!(s.domestic_admins(), vec![DOMESTIC_ADMIN]);
    }

    #[test]
    fn zero_counts_are_rejected() {
        for p in [
            SyntheticParams { networks: 0, ..SyntheticParams::tiny() },
            SyntheticParams { transmitters: 0, ..SyntheticParams::tiny() },
            SyntheticParams { receivers: 0, ..SyntheticParams::tiny() },
            SyntheticParams { channels: 0, ..SyntheticParams::tiny() },
        ] {
            assert!(matches!(generate_synthetic(1, &p), Err(ScenarioError::Generator(_))));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn generated_scenarios_validate(
                seed in any::<u64>(),
                networks in 1usize..6,
                transmitters in 1usize..12,
                receivers in 1usize..20,
                channels in 1usize..4,
            ) {
                let p = SyntheticParams { networks, transmitters, receivers, channels, ..SyntheticParams::tiny() };
                let s = generate_synthetic(seed, &p).unwrap();
                prop_assert!(s.validate().is_empty());
            }
        }
    }
}
