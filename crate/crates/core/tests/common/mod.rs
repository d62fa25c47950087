#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use junction_flow::config::{parse_config, RunSpec};
use junction_flow::geometry::ValidatedDomain;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

pub fn load(name: &str) -> RunSpec {
    parse_config(&config_path(name)).unwrap()
}

pub fn domain(name: &str) -> Arc<ValidatedDomain> {
    Arc::new(load(name).validated_domain().unwrap())
}

/// Cell average of the no-slip Poiseuille profile `6F y(1−y)` on `[y0, y1]`.
pub fn poiseuille_average(flux: f64, y0: f64, y1: f64) -> f64 {
    let prim = |y: f64| flux * (3.0 * y * y - 2.0 * y * y * y);
    (prim(y1) - prim(y0)) / (y1 - y0)
}

/// Simpson's rule, exact for cubics on each panel.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let x = a + k as f64 * h;
            h / 6.0 * (f(x) + 4.0 * f(x + 0.5 * h) + f(x + h))
        })
        .sum()
}
