use std::io::Write;
use std::path::PathBuf;

use approx::assert_relative_eq;

use ampris::channel::LinkLos;
use ampris::{parse_config, parse_config_str, Error, SystemConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn fixture_file_overrides_only_listed_keys() {
    let c = parse_config(&fixture("midpoint.ini")).unwrap();
    let d = SystemConfig::default();
    assert_eq!(c.geometry.d_h, 25.0);
    assert_eq!(c.geometry.d, 50.0);
    assert_eq!(c.geometry.d_v, d.geometry.d_v);
    assert_eq!(c.n, 64);
    assert_eq!(c.passive_elements, 128);
    assert_relative_eq!(c.p_t, 0.1, max_relative = 1e-12);
    assert_relative_eq!(c.amp.p_max, 0.01, max_relative = 1e-12);
    assert_eq!(c.amp.g_max, d.amp.g_max);
    assert_eq!(c.n_iterations, 2000);
    assert_eq!(c.seed, 7);
    assert_eq!(c.power, d.power);
}

#[test]
fn empty_file_is_the_default_scenario() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.flush().unwrap();
    assert_eq!(parse_config(f.path()).unwrap(), SystemConfig::default());
}

#[test]
fn single_transmit_power_key() {
    let c = parse_config_str("P_t_dBm = 20").unwrap();
    assert_relative_eq!(c.p_t, 0.1, max_relative = 1e-12);
    let mut expected = SystemConfig::default();
    expected.p_t = c.p_t;
    assert_eq!(c, expected);
}

#[test]
fn zero_elements_rejected_with_location() {
    let e = parse_config_str("# header\n\n[system]\nN = 0\n").unwrap_err();
    match e {
        Error::Config { line, key, .. } => {
            assert_eq!(line, 4);
            assert_eq!(key, "N");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn unknown_and_misplaced_keys() {
    let e = parse_config_str("[system]\nP_t_dBm = 10\nfoo = 1\n").unwrap_err();
    assert!(matches!(&e, Error::Config { line: 3, key, .. } if key == "foo"), "{e}");
    let e = parse_config_str("[noise]\nN = 32\n").unwrap_err();
    assert!(matches!(&e, Error::Config { line: 2, key, .. } if key == "N"), "{e}");
    let e = parse_config_str("[nonsense]\n").unwrap_err();
    assert!(matches!(e, Error::Config { line: 1, .. }));
}

#[test]
fn malformed_lines() {
    for text in [
        "N 32",
        "[system\nN = 3",
        "P_t_dBm = loud",
        "P_t_dBm = 1\nP_t_dBm = 2",
        "d = -1",
    ] {
        let e = parse_config_str(text).unwrap_err();
        assert!(matches!(e, Error::Config { .. }), "{text:?}: {e}");
        assert!(e.to_string().contains("line"), "{e}");
    }
}

#[test]
fn geometry_violation_points_at_a_geometry_key() {
    let e = parse_config_str("[geometry]\nd_h = 60\n").unwrap_err();
    match e {
        Error::Config { line, key, .. } => {
            assert_eq!(line, 2);
            assert_eq!(key, "d_h");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn los_modes() {
    let c = parse_config_str("[fading]\nlos_h = los\nlos_g = nlos\n").unwrap();
    assert_eq!(c, SystemConfig::fixed_los_scenario());
    let c = parse_config_str("los_mode = forced-nlos").unwrap();
    assert_eq!((c.fading.los_h, c.fading.los_g), (LinkLos::Nlos, LinkLos::Nlos));
}

#[test]
fn missing_file_reports_path() {
    let e = parse_config(&fixture("does-not-exist.ini")).unwrap_err();
    assert!(e.to_string().contains("does-not-exist.ini"), "{e}");
}
