//! Cross-method agreement checks.

use anyhow::Result;
use multifar::laplace::laplace_hit_3far_for;
use multifar::{
    build_uca, hit_prob_estimate, hp_2far, hp_equidistant_series, hp_numeric, hp_numeric_recursive, hp_uca_series, ilt,
    laplace_hit_recursive, laplace_hit_vector, pbar_laplace, pbar_time, run_particle_sim, Complex, IltConfig,
    SeriesControl, SimConfig, System,
};

use crate::config::Level;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub max_dev: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_dev <= self.tol
    }

    pub fn status(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "FAIL"
        }
    }
}

fn check(name: &str, tol: f64, devs: impl IntoIterator<Item = f64>) -> Check {
    let max_dev = devs
        .into_iter()
        .fold(0.0, |m: f64, d| if d.is_nan() { f64::INFINITY } else { m.max(d) });
    Check {
        name: name.into(),
        max_dev,
        tol,
    }
}

pub fn fig2_system() -> System {
    System::new(
        vec![[20.0, 0.0, 0.0], [-20.0, 10.0, 0.0], [20.0, -15.0, 0.0]],
        3.0,
        100.0,
    )
    .expect("valid geometry")
}

/// Receivers on the vertices of a regular tetrahedron centred on the
/// transmitter.
pub fn tetrahedron(r: f64, a: f64, d: f64) -> System {
    let k = r / 3f64.sqrt();
    System::new(vec![[k, k, k], [k, -k, -k], [-k, k, -k], [-k, -k, k]], a, d).expect("valid geometry")
}

fn relative(a: Complex<f64>, b: Complex<f64>) -> f64 {
    (a - b).norm() / a.norm().max(1.0)
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

pub fn run(level: Level) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cfg = IltConfig::default();
    let ctl = SeriesControl::default();

    let devs = log_points(0.01, 100.0, 25).into_iter().map(|t| {
        let inv = ilt(|s| pbar_laplace(s, 20.0, 3.0, 100.0), t, &cfg).unwrap_or(f64::NAN);
        (inv - pbar_time(t, 20.0, 3.0, 100.0).unwrap()).abs()
    });
    out.push(check("isolated: closed form vs inversion", 1e-6, devs));

    let sys = fig2_system();
    let s_points = log_points(1e-3, 1e2, 20);
    let mut explicit_vs_matrix = Vec::new();
    let mut matrix_vs_recursive = Vec::new();
    for &s in &s_points {
        let s = Complex::new(s, 0.0);
        let v = laplace_hit_vector(s, &sys)?.values;
        for (i, &vi) in v.iter().enumerate() {
            explicit_vs_matrix.push(relative(vi, laplace_hit_3far_for(s, &sys, i)?));
            matrix_vs_recursive.push(relative(vi, laplace_hit_recursive(s, i, &sys)?));
        }
    }
    out.push(check(
        "three receivers: explicit vs matrix (s-domain)",
        1e-10,
        explicit_vs_matrix,
    ));
    out.push(check(
        "three receivers: matrix vs recursive (s-domain)",
        1e-10,
        matrix_vs_recursive,
    ));

    let times = [0.2, 1.0, 5.0];
    let m = hp_numeric(&times, &sys, &cfg)?;
    let r = hp_numeric_recursive(&times, &sys, &cfg)?;
    let mut explicit = Vec::new();
    for (i, row) in m.per_receiver.iter().enumerate() {
        for (k, &t) in times.iter().enumerate() {
            explicit.push((ilt(|s| laplace_hit_3far_for(s, &sys, i), t, &cfg)? - row[k]).abs());
        }
    }
    out.push(check("three receivers: explicit vs matrix (time)", 1e-4, explicit));
    let devs = m
        .per_receiver
        .iter()
        .flatten()
        .zip(r.per_receiver.iter().flatten())
        .map(|(a, b)| (a - b).abs());
    out.push(check("three receivers: matrix vs recursive (time)", 1e-4, devs));

    let pair = System::new(vec![[20.0, 0.0, 0.0], [-20.0, 10.0, 0.0]], 3.0, 100.0)?;
    let num = hp_numeric(&times, &pair, &cfg)?;
    let (r1, r2) = (pair.distances()[0], pair.distances()[1]);
    let (r12, r21) = (pair.pairwise_r(0, 1)?, pair.pairwise_r(1, 0)?);
    let mut devs = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        devs.push((hp_2far(t, r1, r2, r12, r21, 3.0, 100.0, &ctl)? - num.per_receiver[0][k]).abs());
    }
    out.push(check("pair: series vs inversion", 1e-6, devs));

    let (tri, uca3) = build_uca(3, 20.0, 0.0, 4.0, 100.0)?;
    let num = hp_numeric(&[1.0], &tri, &cfg)?;
    let eq: f64 = hp_equidistant_series(1.0, uca3.distance, uca3.neighbor_distances[0], 2, 4.0, 100.0, &ctl)?;
    out.push(check(
        "symmetric triple: series vs inversion",
        1e-6,
        [(eq - num.per_receiver[0][0]).abs()],
    ));

    let tet = tetrahedron(20.0, 3.0, 100.0);
    let big_r = tet.pairwise_r(0, 1)?;
    let num = hp_numeric_recursive(&times, &tet, &cfg)?;
    let mut devs = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        devs.push((hp_equidistant_series(t, 20.0, big_r, 3, 3.0, 100.0, &ctl)? - num.per_receiver[0][k]).abs());
    }
    out.push(check("tetrahedron: series vs recursive inversion", 1e-6, devs));

    let mut devs = Vec::new();
    for n in 2..=8 {
        for d in [100.0, 200.0] {
            let (ring, uca) = build_uca(n, 20.0, 10.0, 4.0, d)?;
            let num = hp_numeric(&times, &ring, &cfg)?;
            for (k, &t) in times.iter().enumerate() {
                devs.push((hp_uca_series(t, &uca, &ctl)? - num.per_receiver[0][k]).abs());
            }
        }
    }
    out.push(check("ring N = 2..8: series vs matrix inversion", 1e-4, devs));

    if level == Level::Full {
        out.extend(monte_carlo(&cfg, &ctl)?);
    }
    Ok(out)
}

/// Largest `|analytic - simulated| / half_width` across the points; 1.0 is
/// the edge of the three-sigma band.
fn monte_carlo(cfg: &IltConfig, ctl: &SeriesControl) -> Result<Vec<Check>> {
    let trials = 100_000;
    let mut out = Vec::new();

    let sys = fig2_system();
    let times = [0.2, 0.6, 1.0];
    let mut sim = SimConfig::new(1.0, trials, 2);
    sim.record_stride = 1000;
    let res = run_particle_sim(&sys, &sim)?;
    let analytic = hp_numeric(&times, &sys, cfg)?;
    let mut band = Vec::new();
    for i in 0..sys.len() {
        for (k, &t) in times.iter().enumerate() {
            let e = hit_prob_estimate(&res, i, t)?;
            band.push((analytic.per_receiver[i][k] - e.p).abs() / e.half_width);
        }
    }
    out.push(check(
        "three receivers: inversion vs simulation (band units)",
        1.0,
        band,
    ));

    let mut band = Vec::new();
    for n in 6..=8 {
        for d in [100.0, 200.0] {
            let (ring, uca) = build_uca(n, 20.0, 10.0, 4.0, d)?;
            let mut sim = SimConfig::new(1.0, trials, 5);
            sim.record_stride = sim.steps();
            let res = run_particle_sim(&ring, &sim)?;
            let e = hit_prob_estimate(&res, 0, 1.0)?;
            band.push((hp_uca_series::<f64>(1.0, &uca, ctl)? - e.p).abs() / e.half_width);
        }
    }
    out.push(check("ring N = 6..8: series vs simulation (band units)", 1.0, band));
    Ok(out)
}
