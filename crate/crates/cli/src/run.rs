//! Executes a configuration and renders the result as CSV.

use anyhow::{bail, Context, Result};
use multifar::{
    array_gain, asymptotic_gain, channel_taps_all, hit_prob_estimate, mutual_influence, optimal_threshold, pbar_time,
    run_particle_sim, AutoModel, HitModel, IsolatedModel, LinkInputs, MatrixModel, RecursiveModel, System, Uca,
    UcaSeriesModel,
};
use toml::{Table, Value};

use crate::config::{self, ExperimentConfig, Kind, MethodName, Quantity, Rule};
use crate::validate;

/// A finished table plus `#` metadata lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip text; empty for missing or non-finite values.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        String::new()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn model(cfg: &ExperimentConfig, sys: System, uca: Option<Uca>) -> Result<Box<dyn HitModel<f64>>> {
    let ilt = cfg.method.ilt();
    Ok(match (cfg.method.name, uca) {
        (MethodName::Auto, Some(uca)) => Box::new(AutoModel::new(sys, uca, cfg.method.series(), ilt)),
        (MethodName::Series, Some(uca)) => Box::new(UcaSeriesModel::new(sys, uca, cfg.method.series())),
        (MethodName::Series, None) => bail!("method.name = \"series\" requires a UCA geometry"),
        (MethodName::Auto | MethodName::Matrix, _) => Box::new(MatrixModel::new(sys, ilt)),
        (MethodName::Recursive, _) => Box::new(RecursiveModel::new(sys, ilt)),
        (MethodName::Isolated, _) => Box::new(IsolatedModel::new(sys)),
    })
}

/// Runs the experiment described by `table`.
pub fn run(table: &Table) -> Result<Report> {
    let cfg = ExperimentConfig::from_table(table)?;
    let mut report = match cfg.kind {
        Kind::Channel => channel(&cfg)?,
        Kind::Simulate => simulate(&cfg)?,
        Kind::Gain => gain(&cfg)?,
        Kind::Taps => taps(&cfg)?,
        Kind::Ber => ber(&cfg)?,
        Kind::Sweep => sweep(table, &cfg)?,
        Kind::Validate => validation(&cfg)?,
    };
    let mut meta = vec![
        format!("multifar {}", env!("CARGO_PKG_VERSION")),
        format!("seed = {}", cfg.seed),
    ];
    meta.append(&mut report.metadata);
    meta.push("config:".into());
    meta.extend(toml::to_string(table)?.lines().map(|l| format!("  {l}")));
    report.metadata = meta;
    Ok(report)
}

/// CSV bytes: metadata comments, header, rows.
pub fn render(report: &Report) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for line in &report.metadata {
        out.extend_from_slice(format!("# {line}").trim_end().as_bytes());
        out.push(b'\n');
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&report.header)?;
    for row in &report.rows {
        w.write_record(row)?;
    }
    w.into_inner().context("flushing CSV")
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

fn channel(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = cfg.time.grid()?;
    let (sys, uca) = cfg.system()?;
    let n = sys.len();
    let m = model(cfg, sys.clone(), uca)?;
    let sim = simulate_grid(cfg, &sys, &grid)?;

    let mut header = vec!["t".to_string()];
    header.extend(numbered("p", n));
    header.extend(numbered("pbar", n));
    if sim.is_some() {
        header.extend(numbered("mc", n));
        header.extend(numbered("ci", n));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let mut row = vec![num(t)];
        let p = m.hit_probs(t).with_context(|| format!("{} at t = {t}", m.label()))?;
        row.extend(p.iter().map(|&v| num(v)));
        for &r in sys.distances() {
            row.push(num(pbar_time(t, r, sys.radius(), sys.diffusion())?));
        }
        if let Some(est) = &sim {
            row.extend(est[k].iter().map(|e| num(e.0)));
            row.extend(est[k].iter().map(|e| num(e.1)));
        }
        rows.push(row);
    }
    Ok(Report {
        metadata: vec![format!("method = {}", m.label())],
        header,
        rows,
    })
}

/// `(p, half_width)` indexed by receiver, then grid time.
type Estimates = Vec<Vec<(f64, f64)>>;

/// Monte Carlo estimates per receiver and grid time, or `None` when
/// `time.trials` is 0.
fn simulate_grid(cfg: &ExperimentConfig, sys: &System, grid: &[f64]) -> Result<Option<Estimates>> {
    if cfg.time.trials == 0 {
        return Ok(None);
    }
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    let sim_cfg = cfg.time.sim_config(t_max, cfg.seed);
    let res = run_particle_sim(sys, &sim_cfg)?;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut at_t = Vec::with_capacity(sys.len());
        for i in 0..sys.len() {
            let e = hit_prob_estimate(&res, i, t)
                .with_context(|| format!("time {t} must be a multiple of time.dt = {}", cfg.time.dt))?;
            at_t.push((e.p, e.half_width));
        }
        out.push(at_t);
    }
    Ok(Some(out))
}

fn simulate(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.time.trials == 0 {
        bail!("kind = \"simulate\" needs time.trials > 0");
    }
    let grid = cfg.time.grid()?;
    let (sys, _) = cfg.system()?;
    let est = simulate_grid(cfg, &sys, &grid)?.expect("trials > 0");
    let n = sys.len();
    let mut header = vec!["t".to_string()];
    header.extend(numbered("mc", n));
    header.extend(numbered("ci", n));
    let rows = grid
        .iter()
        .zip(&est)
        .map(|(&t, e)| {
            let mut row = vec![num(t)];
            row.extend(e.iter().map(|x| num(x.0)));
            row.extend(e.iter().map(|x| num(x.1)));
            row
        })
        .collect();
    Ok(Report {
        metadata: vec![format!("trials = {}", cfg.time.trials), format!("dt = {}", cfg.time.dt)],
        header,
        rows,
    })
}

fn gain(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = cfg.time.grid()?;
    let (sys, uca) = cfg.system()?;
    let mut metadata = Vec::new();
    if let Some(u) = &uca {
        metadata.push(format!("asymptotic_gain = {}", num(asymptotic_gain(u))));
    }
    let m = model(cfg, sys, uca)?;
    metadata.push(format!("method = {}", m.label()));
    let rows = grid
        .iter()
        .map(|&t| Ok(vec![num(t), num(array_gain(t, m.as_ref())?)]))
        .collect::<Result<_>>()?;
    Ok(Report {
        metadata,
        header: vec!["t".into(), "g".into()],
        rows,
    })
}

fn taps(cfg: &ExperimentConfig) -> Result<Report> {
    let (sys, uca) = cfg.system()?;
    let n = sys.len();
    let m = model(cfg, sys, uca)?;
    let slots = cfg.link.slots.unwrap_or(cfg.link.decision_slot);
    let h = channel_taps_all(m.as_ref(), cfg.link.slot, slots)?;
    let mut header = vec!["slot".to_string(), "t_start".to_string()];
    header.extend(numbered("h", n));
    let rows = (0..slots)
        .map(|k| {
            let mut row = vec![k.to_string(), num(k as f64 * cfg.link.slot)];
            row.extend(h.iter().map(|hi| num(hi[k])));
            row
        })
        .collect();
    Ok(Report {
        metadata: vec![format!("method = {}", m.label()), format!("slot = {}", cfg.link.slot)],
        header,
        rows,
    })
}

/// Link inputs for the full array and for receiver 1 alone.
fn link_inputs(cfg: &ExperimentConfig) -> Result<(LinkInputs<f64>, LinkInputs<f64>)> {
    let (sys, uca) = cfg.system()?;
    let params = cfg.link.params();
    let alone = System::new(vec![sys.positions()[0]], sys.radius(), sys.diffusion())?;
    let array = LinkInputs::from_model(model(cfg, sys, uca)?.as_ref(), params)?;
    let single = LinkInputs::from_model(&IsolatedModel::new(alone), params)?;
    Ok((array, single))
}

fn inputs_for<'a>(rule: Rule, array: &'a LinkInputs<f64>, single: &'a LinkInputs<f64>) -> &'a LinkInputs<f64> {
    if rule == Rule::Single {
        single
    } else {
        array
    }
}

fn ber(cfg: &ExperimentConfig) -> Result<Report> {
    let rules = cfg.link.rules()?;
    let (array, single) = link_inputs(cfg)?;
    let mut metadata = vec![
        format!("lambda0 = {}", num(array.lambda0[0])),
        format!("lambda1 = {}", num(array.lambda1[0])),
    ];
    let mut columns = Vec::new();
    for &rule in &rules {
        let inputs = inputs_for(rule, &array, &single);
        let fusion = rule.fusion(inputs.receivers())?;
        let (eta, pe) = optimal_threshold(inputs, fusion, cfg.link.eta_max)?;
        metadata.push(format!("optimal[{}] = eta {eta}, pe {}", rule.name(), num(pe)));
        columns.push(inputs.ber_curve(fusion, cfg.link.eta_max)?);
    }
    let mut header = vec!["eta".to_string()];
    header.extend(rules.iter().map(|r| format!("pe_{}", r.name())));
    let rows = (0..=cfg.link.eta_max as usize)
        .map(|eta| {
            let mut row = vec![eta.to_string()];
            row.extend(columns.iter().map(|c| num(c[eta])));
            row
        })
        .collect();
    Ok(Report { metadata, header, rows })
}

fn validation(cfg: &ExperimentConfig) -> Result<Report> {
    let checks = validate::run(cfg.validate.level)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    Ok(Report {
        metadata: vec![format!("failed = {failed}")],
        header: ["check", "max_deviation", "tolerance", "status"]
            .map(String::from)
            .to_vec(),
        rows: checks
            .iter()
            .map(|c| vec![c.name.clone(), num(c.max_dev), num(c.tol), c.status().into()])
            .collect(),
    })
}

/// Every combination of family values, in row-major order.
fn combinations(axes: &[(String, Vec<Value>)]) -> Vec<Vec<(String, Value)>> {
    axes.iter().fold(vec![Vec::new()], |acc, (path, values)| {
        acc.into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((path.clone(), v.clone()));
                    c
                })
            })
            .collect()
    })
}

fn family_label(combo: &[(String, Value)]) -> String {
    combo
        .iter()
        .map(|(p, v)| format!("{p}={}", config::value_label(v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn subcolumns(cfg: &ExperimentConfig, quantity: Quantity) -> Result<Vec<String>> {
    let mc = cfg.time.trials > 0;
    Ok(match quantity {
        Quantity::Hit if mc => vec!["p".into(), "mc".into(), "ci".into()],
        Quantity::Hit => vec!["p".into()],
        Quantity::Gain => vec!["g".into()],
        Quantity::AbsError => {
            if !mc {
                bail!("sweep.quantity = \"abs_error\" needs time.trials > 0");
            }
            vec!["analytic".into(), "mc".into(), "ci".into(), "abs_error".into()]
        }
        Quantity::MutualInfluence => vec!["dp".into()],
        Quantity::Ber => cfg
            .link
            .rules()?
            .iter()
            .flat_map(|r| [format!("pe_{}", r.name()), format!("eta_{}", r.name())])
            .collect(),
    })
}

/// True for configuration errors that mean "this point does not exist",
/// such as overlapping receivers, rather than a broken setup.
fn infeasible(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(
            e.downcast_ref::<multifar::Error>(),
            Some(multifar::Error::Overlap { .. } | multifar::Error::TransmitterInside { .. })
        )
    })
}

fn cell(cfg: &ExperimentConfig, quantity: Quantity, receiver: usize) -> Result<Vec<Option<f64>>> {
    let t = cfg.time.at;
    let (sys, uca) = cfg.system()?;
    if receiver == 0 || receiver > sys.len() {
        bail!("sweep.receiver = {receiver} but the system has {} receivers", sys.len());
    }
    let i = receiver - 1;
    let mc = |sys: &System| -> Result<(f64, f64)> {
        let res = run_particle_sim(sys, &cfg.time.sim_config(t, cfg.seed).with_stride_to_end())?;
        let e = hit_prob_estimate(&res, i, t)?;
        Ok((e.p, e.half_width))
    };
    Ok(match quantity {
        Quantity::Hit => {
            let p = model(cfg, sys.clone(), uca)?.hit_prob(i, t)?;
            if cfg.time.trials > 0 {
                let (m, ci) = mc(&sys)?;
                vec![Some(p), Some(m), Some(ci)]
            } else {
                vec![Some(p)]
            }
        }
        Quantity::Gain => vec![Some(array_gain(t, model(cfg, sys, uca)?.as_ref())?)],
        Quantity::AbsError => {
            let p = model(cfg, sys.clone(), uca)?.hit_prob(i, t)?;
            let (m, ci) = mc(&sys)?;
            vec![Some(p), Some(m), Some(ci), Some((p - m).abs())]
        }
        Quantity::MutualInfluence => vec![Some(mutual_influence(t, i, &sys, &cfg.method.ilt())?)],
        Quantity::Ber => {
            let (array, single) = link_inputs(cfg)?;
            let fixed = cfg.link.eta.fixed()?;
            let mut out = Vec::new();
            for rule in cfg.link.rules()? {
                let inputs = inputs_for(rule, &array, &single);
                let fusion = rule.fusion(inputs.receivers())?;
                let (eta, pe) = match fixed {
                    Some(eta) => (eta, inputs.error_prob(fusion, eta)?),
                    None => optimal_threshold(inputs, fusion, cfg.link.eta_max)?,
                };
                out.push(Some(pe));
                out.push(Some(eta as f64));
            }
            out
        }
    })
}

trait StrideToEnd {
    fn with_stride_to_end(self) -> Self;
}

impl StrideToEnd for multifar::SimConfig<f64> {
    /// Records only the start and the horizon.
    fn with_stride_to_end(mut self) -> Self {
        self.record_stride = self.steps().max(1);
        self
    }
}

fn sweep(table: &Table, cfg: &ExperimentConfig) -> Result<Report> {
    let sw = cfg.sweep.as_ref().expect("checked on load");
    let values = sw.values.resolve(&cfg.time)?;
    let axes: Vec<(String, Vec<Value>)> = sw
        .family
        .iter()
        .map(|a| (a.parameter.clone(), a.values.clone()))
        .collect();
    let combos = combinations(&axes);
    let subs = subcolumns(cfg, sw.quantity)?;

    let mut header = vec![sw.parameter.clone()];
    let mut metadata = vec![format!("quantity = {:?}", sw.quantity).to_lowercase()];
    for combo in &combos {
        let label = family_label(combo);
        for s in &subs {
            header.push(if label.is_empty() {
                s.clone()
            } else {
                format!("{s}[{label}]")
            });
        }
    }

    let mut rows: Vec<Vec<String>> = values.iter().map(|v| vec![config::value_label(v)]).collect();
    for combo in &combos {
        let mut base = table.clone();
        for (path, v) in combo {
            config::set_path(&mut base, path, v.clone())?;
        }
        if sw.quantity == Quantity::Gain {
            let point = ExperimentConfig::from_table(&base)?;
            if let Ok((_, Some(u))) = point.system() {
                let label = family_label(combo);
                metadata.push(format!("asymptotic_gain[{label}] = {}", num(asymptotic_gain(&u))));
            }
        }
        for (row, v) in rows.iter_mut().zip(&values) {
            let mut point_table = base.clone();
            config::set_path(&mut point_table, &sw.parameter, v.clone())?;
            let point = ExperimentConfig::from_table(&point_table)?;
            match cell(&point, sw.quantity, sw.receiver) {
                Ok(vals) => row.extend(vals.into_iter().map(opt)),
                Err(e) if infeasible(&e) => row.extend(subs.iter().map(|_| String::new())),
                Err(e) => {
                    return Err(e.context(format!(
                        "sweep point {} = {} [{}]",
                        sw.parameter,
                        config::value_label(v),
                        family_label(combo)
                    )))
                }
            }
        }
    }
    Ok(Report { metadata, header, rows })
}
