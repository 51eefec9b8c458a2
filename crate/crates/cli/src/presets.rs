//! Built-in experiment configurations, `fig2` through `fig10`.
//!
//! Physical parameters are fixed per preset. Trial counts and grids are
//! choices of this tool and can be overridden with `--set`.

pub const NAMES: [&str; 9] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

/// One-line description per preset.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => "three receivers: p_i(t) with isolated baselines and Monte Carlo markers",
        "fig3" => "four receivers: |analytic - simulated| at receiver 4 over its (y, z) position",
        "fig4" => "UCA N = 4, 5: p_1(1 s) against receiver radius for D = 100, 200",
        "fig5" => "UCA: p_1(1 s) against N for D = 100, 200",
        "fig6" => "UCA N = 2, 3, 4: array gain against time, asymptotes in metadata",
        "fig7" => "UCA N = 4: bit error probability against threshold per fusion rule",
        "fig8" => "UCA N = 4: optimal bit error probability against ring radius",
        "fig9" => "UCA N = 4: optimal bit error probability against molecules per bit",
        "fig10" => "UCA: optimal bit error probability against N, with and without mutual influence",
        _ => return None,
    })
}

pub fn toml(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig4" => FIG4,
        "fig5" => FIG5,
        "fig6" => FIG6,
        "fig7" => FIG7,
        "fig8" => FIG8,
        "fig9" => FIG9,
        "fig10" => FIG10,
        _ => return None,
    })
}

const FIG2: &str = r#"
kind = "channel"
seed = 2

[physics]
radius = 3.0
diffusion = 100.0

[geometry]
positions = [[20.0, 0.0, 0.0], [-20.0, 10.0, 0.0], [20.0, -15.0, 0.0]]

[time]
start = 0.05
stop = 1.0
points = 20
dt = 1e-4
trials = 100000

[method]
name = "matrix"
"#;

const FIG3: &str = r#"
kind = "sweep"
seed = 3

[physics]
radius = 3.0
diffusion = 100.0

[geometry]
positions = [[10.0, 20.0, 0.0], [10.0, 14.14, 14.14], [10.0, 14.14, -14.14], [10.0, 0.0, 0.0]]

[time]
at = 1.0
dt = 1e-4
trials = 10000

[method]
name = "recursive"

[sweep]
quantity = "abs_error"
receiver = 4
parameter = "geometry.positions.3.1"
values = [-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0]

[[sweep.family]]
parameter = "geometry.positions.3.2"
values = [-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0]
"#;

const FIG4: &str = r#"
kind = "sweep"
seed = 4

[physics]
radius = 4.0
diffusion = 100.0

[geometry.uca]
count = 4
ring_radius = 20.0
offset = 10.0

[time]
at = 1.0
dt = 1e-4
trials = 10000

[sweep]
quantity = "hit"
parameter = "physics.radius"
values = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]

[[sweep.family]]
parameter = "geometry.uca.count"
values = [4, 5]

[[sweep.family]]
parameter = "physics.diffusion"
values = [100.0, 200.0]
"#;

const FIG5: &str = r#"
kind = "sweep"
seed = 5

[physics]
radius = 4.0
diffusion = 100.0

[geometry.uca]
count = 2
ring_radius = 20.0
offset = 10.0

[time]
at = 1.0
dt = 1e-4
trials = 10000

[sweep]
quantity = "hit"
parameter = "geometry.uca.count"
values = [2, 3, 4, 5, 6, 7, 8]

[[sweep.family]]
parameter = "physics.diffusion"
values = [100.0, 200.0]
"#;

const FIG6: &str = r#"
kind = "sweep"
seed = 6

[physics]
radius = 4.0
diffusion = 100.0

[geometry.uca]
count = 2
ring_radius = 20.0
offset = 0.0

[time]
start = 0.01
stop = 100.0
points = 25
spacing = "log"

[sweep]
quantity = "gain"
parameter = "time.at"
values = "grid"

[[sweep.family]]
parameter = "geometry.uca.count"
values = [2, 3, 4]
"#;

const FIG7: &str = r#"
kind = "ber"
seed = 7

[physics]
radius = 4.0
diffusion = 100.0

[geometry.uca]
count = 4
ring_radius = 10.0
offset = 25.0

[link]
molecules = 200
prior_one = 0.5
slot = 5.0
decision_slot = 9
rules = ["or", "and", "majority", "single"]
eta_max = 40
"#;

const FIG8: &str = r#"
kind = "sweep"
seed = 8

[physics]
radius = 4.0
diffusion = 100.0

[geometry.uca]
count = 4
ring_radius = 10.0
offset = 25.0

[link]
molecules = 200
prior_one = 0.5
slot = 5.0
decision_slot = 9
rules = ["or", "and", "majority", "single"]
eta = "optimal"

[sweep]
quantity = "ber"
parameter = "geometry.uca.ring_radius"
values = [6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0]
"#;

const FIG9: &str = r#"
kind = "sweep"
seed = 9

[physics]
radius = 4.0
diffusion = 100.0

[geometry.uca]
count = 4
ring_radius = 10.0
offset = 25.0

[link]
prior_one = 0.5
slot = 5.0
decision_slot = 9
rules = ["or", "and", "majority", "single"]
eta = "optimal"
eta_max = 120

[sweep]
quantity = "ber"
parameter = "link.molecules"
values = [50, 100, 150, 200, 250, 300, 350, 400, 450, 500]
"#;

const FIG10: &str = r#"
kind = "sweep"
seed = 10

[physics]
radius = 4.0
diffusion = 200.0

[geometry.uca]
count = 1
ring_radius = 15.0
offset = 25.0

[link]
molecules = 500
prior_one = 0.5
slot = 5.0
decision_slot = 9
rules = ["or", "and", "majority"]
eta = "optimal"
eta_max = 200

[sweep]
quantity = "ber"
parameter = "geometry.uca.count"
values = [1, 2, 3, 4, 5, 6, 7, 8]

[[sweep.family]]
parameter = "method.name"
values = ["auto", "isolated"]
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn every_preset_parses() {
        for name in NAMES {
            let table: toml::Table = toml::from_str(toml(name).unwrap()).unwrap();
            ExperimentConfig::from_table(&table).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            assert!(describe(name).is_some());
        }
        assert!(toml("fig1").is_none());
    }
}
