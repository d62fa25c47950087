mod common;

use proptest::prelude::*;

use common::{config_path, load};
use junction_flow::carrier::CarrierMode;
use junction_flow::config::{config_hash, parse_config, parse_str};
use junction_flow::error::Error;
use junction_flow::report::{csv_text, num, Artifacts, Provenance};

const SHIPPED: [&str; 3] = ["bridge", "fountain", "channel"];

fn text(name: &str) -> String {
    std::fs::read_to_string(config_path(name)).unwrap()
}

fn keys(errs: &[Error]) -> Vec<String> {
    errs.iter()
        .filter_map(|e| match e {
            Error::ValidationError { key, .. } => Some(key.clone()),
            _ => None,
        })
        .collect()
}

#[test]
fn shipped_configs_are_valid() {
    for name in SHIPPED {
        let spec = load(name);
        assert_eq!(spec.name, name);
        assert!(spec.validation_errors().is_empty());
        assert!(spec.validated_domain().is_ok());
        assert!(!spec.schedule().unwrap().times.is_empty());
    }
    assert_eq!(load("bridge").carrier.mode, CarrierMode::Hopf);
    assert_eq!(load("channel").carrier.mode, CarrierMode::Cp);
}

#[test]
fn shipped_configs_round_trip() {
    for name in SHIPPED {
        let spec = load(name);
        let again = parse_str(&spec.to_toml()).unwrap();
        assert_eq!(again, spec, "{name}");
        assert_eq!(again.to_toml(), spec.to_toml());
    }
}

#[test]
fn parse_errors_name_the_key() {
    let base = text("channel");
    let cases = [
        (base.replace("delta = 0.03125", "delta = \"fine\""), "delta"),
        (base.replace("mode = \"cp\"", "mode = \"spline\""), "carrier.mode"),
        (base.replace("width = 1.0\nflux = 1.0", "width = 1.0\nflux = [1.0]"), "domain.outlets[0].flux"),
        (base.replace("[output]", "[output]\ncolour = \"red\""), "output.colour"),
    ];
    for (t, key) in cases {
        match parse_str(&t) {
            Err(Error::ParseError { key: k, line, .. }) => {
                assert_eq!(k, key);
                assert!(line > 0);
            }
            other => panic!("{key}: {other:?}"),
        }
    }
    assert!(matches!(parse_str("delta = "), Err(Error::ParseError { line: 1, .. })));
}

#[test]
fn validation_collects_every_problem() {
    let base = text("bridge");
    let t = base
        .replacen("seed = 7\n", "", 1)
        .replace("delta = 0.0625", "delta = -1.0")
        .replace("[diagnostics]", "[diagnostics]\nenergy_at = 1.5");
    assert_ne!(t, base);
    let errs = parse_str(&t).unwrap().validation_errors();
    let k = keys(&errs);
    for want in ["carrier.seed", "delta", "diagnostics.energy_at"] {
        assert!(k.iter().any(|x| x == want), "{want} missing from {k:?}");
    }
    // parse_config stops at the first problem.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, &t).unwrap();
    assert!(matches!(parse_config(&path), Err(Error::ValidationError { .. })));
    assert!(matches!(parse_config(&dir.path().join("missing.toml")), Err(Error::Io(_))));
}

#[test]
fn sampling_needs_a_seed() {
    let t = text("bridge").replacen("seed = 7\n", "", 1);
    let spec = parse_str(&t).unwrap();
    assert!(spec.carrier.samples > 0 && spec.carrier.seed.is_none());
    assert_eq!(keys(&spec.validation_errors()), vec!["carrier.seed".to_string()]);
}

#[test]
fn short_asymptotics_are_rejected() {
    let t = text("channel").replace("asymptotics_length = 12.0", "asymptotics_length = 8.0");
    assert_eq!(keys(&parse_str(&t).unwrap().validation_errors()), vec!["diagnostics.asymptotics_length".to_string()]);
}

#[test]
fn hash_and_provenance() {
    // Known SHA-256 digests.
    assert_eq!(config_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    let p = Provenance::new("abc", Some(3));
    assert!(p.comment().starts_with("# config_sha256=ba7816bf"));
    assert!(p.comment().ends_with(" seed=3"));
    assert!(!Provenance::new("abc", None).comment().contains("seed"));
}

#[test]
fn csv_output_is_deterministic() {
    let p = Provenance::new(&text("bridge"), Some(7));
    let rows = |s: u64| (0..5).map(move |k| vec![k.to_string(), num((k as f64 + s as f64).sqrt())]);
    let a = csv_text(&p, &["k", "value"], rows(0)).unwrap();
    let b = csv_text(&p, &["k", "value"], rows(0)).unwrap();
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], p.comment());
    assert_eq!(lines[1], "k,value");
    assert_eq!(lines.len(), 7);
    for l in &lines[2..] {
        let x: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!(x.is_finite());
    }

    let dir = tempfile::tempdir().unwrap();
    let mut art = Artifacts::new(&dir.path().join("nested"), p.clone());
    let path = art.csv("table.csv", &["k", "value"], rows(0)).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), a);
    art.text("note.txt", "x").unwrap();
    assert_eq!(art.written.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn numbers_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn serialized_specs_parse_back(
        which in 0usize..3,
        flux in -10.0f64..10.0,
        eps in 0.01f64..1.0,
        tol in 1e-14f64..1e-6,
        seed in any::<u64>(),
        sweep in prop::collection::vec(0.0f64..10.0, 0..5),
    ) {
        let mut spec = load(SHIPPED[which]);
        spec.domain.outlets[0].flux = flux;
        let last = spec.domain.outlets.len() - 1;
        spec.domain.outlets[last].flux -= flux;
        spec.carrier.eps = Some(eps);
        spec.carrier.seed = Some(seed);
        spec.solver.tolerance = tol;
        spec.diagnostics.sweep = sweep;
        let text = spec.to_toml();
        let back = parse_str(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.to_toml(), text);
    }
}
