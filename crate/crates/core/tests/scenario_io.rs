use std::fs;

use fmpower::scenario::{
    generate_synthetic, load_scenario, write_scenario, Scenario, ScenarioError, SyntheticParams, WriteOptions,
};

fn small() -> Scenario {
    generate_synthetic(7, &SyntheticParams::small()).unwrap()
}

#[test]
fn round_trip_with_links() {
    let s = small();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(&s, dir.path(), WriteOptions::default()).unwrap();
    assert_eq!(load_scenario(dir.path()).unwrap(), s);
}

#[test]
fn written_files_are_stable() {
    let s = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_scenario(&s, a.path(), WriteOptions::default()).unwrap();
    let reloaded = load_scenario(a.path()).unwrap();
    write_scenario(&reloaded, b.path(), WriteOptions::default()).unwrap();
    for f in ["config.txt", "networks.csv", "transmitters.csv", "receivers.csv", "links.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

/// Great-circle distance from the angle between unit vectors.
fn central_angle_km(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let v = |lon: f64, lat: f64| {
        let (lo, la) = (lon.to_radians(), lat.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (a, b) = (v(lon1, lat1), v(lon2, lat2));
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    6371.0 * sin.atan2(cos)
}

#[test]
fn omitted_links_are_recomputed_from_geometry() {
    let s = small();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(&s, dir.path(), WriteOptions { links: false }).unwrap();
    assert!(!dir.path().join("links.csv").exists());
    let loaded = load_scenario(dir.path()).unwrap();
    let m = *loaded.path_model();
    let mut checked = 0;
    for r in loaded.receivers() {
        for t in loaded.transmitters() {
            let d = central_angle_km(t.lon, t.lat, r.lon, r.lat);
            if (d - m.cutoff_km).abs() < 1e-6 {
                continue;
            }
            let expected = if d > m.cutoff_km {
                0.0
            } else {
                (m.reference_loss / d.max(0.001).powf(m.exponent)).min(1.0)
            };
            let got = loaded.link(r.id, t.id).map_or(0.0, |l| l.a_useful);
            assert!(
                (got - expected).abs() <= 1e-9 * expected.max(1e-300),
                "rx {} tx {}: {got} vs {expected}",
                r.id,
                t.id
            );
            checked += 1;
        }
    }
    assert_eq!(checked, loaded.receivers().len() * loaded.transmitters().len());
}

#[test]
fn malformed_row_names_file_and_line() {
    let s = small();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(&s, dir.path(), WriteOptions::default()).unwrap();
    let path = dir.path().join("transmitters.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("999,1,DOM,98000,not-a-number,12.1,42.1,1\n");
    fs::write(&path, text).unwrap();
    let err = load_scenario(dir.path()).unwrap_err();
    match &err {
        ScenarioError::Malformed { file, line, .. } => {
            assert_eq!(file, "transmitters.csv");
            assert_eq!(*line as usize, s.transmitters().len() + 2);
        }
        other => panic!("unexpected error {other}"),
    }
    assert!(err.to_string().contains("transmitters.csv"));
}

#[test]
fn missing_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_scenario(dir.path()), Err(ScenarioError::MissingFile(_))));
}

#[test]
fn dangling_link_is_rejected() {
    let s = small();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(&s, dir.path(), WriteOptions::default()).unwrap();
    let path = dir.path().join("links.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("1,9999,0.001,0.001\n");
    fs::write(&path, text).unwrap();
    assert!(matches!(load_scenario(dir.path()), Err(ScenarioError::DanglingReference(_))));
}
