//! Experiment configuration: a TOML table that can be patched by dotted
//! paths before it is turned into typed settings.

use anyhow::{anyhow, bail, Context, Result};
use multifar::{build_uca, FusionRule, IltConfig, IltMethod, OokParams, SeriesControl, SimConfig, System, Uca};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Channel,
    Simulate,
    Gain,
    Taps,
    Ber,
    Sweep,
    Validate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub physics: Option<Physics>,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub time: TimeBlock,
    #[serde(default)]
    pub method: MethodBlock,
    #[serde(default)]
    pub link: LinkBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub validate: ValidateBlock,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub radius: f64,
    pub diffusion: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub positions: Option<Vec<[f64; 3]>>,
    pub uca: Option<UcaBlock>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcaBlock {
    pub count: usize,
    pub ring_radius: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub grid: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    /// Evaluation time for single-time quantities.
    #[serde(default = "one")]
    pub at: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Monte Carlo trials; 0 disables simulation.
    #[serde(default)]
    pub trials: u64,
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-4
}

impl Default for TimeBlock {
    fn default() -> Self {
        Self {
            grid: None,
            start: None,
            stop: None,
            points: None,
            spacing: Spacing::Linear,
            at: 1.0,
            dt: default_dt(),
            trials: 0,
        }
    }
}

impl TimeBlock {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.grid {
            if g.is_empty() {
                bail!("time.grid is empty");
            }
            return Ok(g.clone());
        }
        let (Some(start), Some(stop), Some(points)) = (self.start, self.stop, self.points) else {
            bail!("time: give either `grid` or all of `start`, `stop`, `points`");
        };
        if points < 2 || !(stop > start) {
            bail!("time: need points >= 2 and stop > start");
        }
        let step = |k: usize| k as f64 / (points - 1) as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..points).map(|k| start + (stop - start) * step(k)).collect(),
            Spacing::Log => {
                if !(start > 0.0) {
                    bail!("time: logarithmic spacing needs start > 0");
                }
                let (l0, l1) = (start.log10(), stop.log10());
                (0..points).map(|k| 10f64.powf(l0 + (l1 - l0) * step(k))).collect()
            }
        })
    }

    pub fn sim_config(&self, t_max: f64, seed: u64) -> SimConfig<f64> {
        SimConfig {
            dt: self.dt,
            ..SimConfig::new(t_max, self.trials, seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    /// Ring series for a UCA, matrix inversion otherwise.
    #[default]
    Auto,
    Matrix,
    Recursive,
    Series,
    Isolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionName {
    #[default]
    CrossChecked,
    Talbot,
    Stehfest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodBlock {
    #[serde(default)]
    pub name: MethodName,
    #[serde(default)]
    pub inversion: InversionName,
    #[serde(default = "default_nodes")]
    pub talbot_nodes: usize,
    #[serde(default = "default_terms")]
    pub stehfest_terms: usize,
    #[serde(default = "default_agreement")]
    pub agreement_tol: f64,
    #[serde(default = "default_series_tol")]
    pub series_tol: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
}

fn default_nodes() -> usize {
    IltConfig::default().talbot_nodes
}
fn default_terms() -> usize {
    IltConfig::default().stehfest_terms
}
fn default_agreement() -> f64 {
    IltConfig::default().agreement_tol
}
fn default_series_tol() -> f64 {
    SeriesControl::default().tol
}
fn default_max_terms() -> usize {
    SeriesControl::default().max_terms
}

impl Default for MethodBlock {
    fn default() -> Self {
        Self {
            name: MethodName::Auto,
            inversion: InversionName::CrossChecked,
            talbot_nodes: default_nodes(),
            stehfest_terms: default_terms(),
            agreement_tol: default_agreement(),
            series_tol: default_series_tol(),
            max_terms: default_max_terms(),
        }
    }
}

impl MethodBlock {
    pub fn ilt(&self) -> IltConfig {
        IltConfig {
            method: match self.inversion {
                InversionName::CrossChecked => IltMethod::CrossChecked,
                InversionName::Talbot => IltMethod::Talbot,
                InversionName::Stehfest => IltMethod::Stehfest,
            },
            talbot_nodes: self.talbot_nodes,
            stehfest_terms: self.stehfest_terms,
            agreement_tol: self.agreement_tol,
        }
    }

    pub fn series(&self) -> SeriesControl {
        SeriesControl {
            tol: self.series_tol,
            max_terms: self.max_terms,
            ..SeriesControl::default()
        }
    }
}

/// Threshold: a fixed count or the per-rule optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Eta {
    Fixed(u64),
    Named(String),
}

impl Default for Eta {
    fn default() -> Self {
        Eta::Named("optimal".into())
    }
}

impl Eta {
    /// `None` for the optimum.
    pub fn fixed(&self) -> Result<Option<u64>> {
        match self {
            Eta::Fixed(v) => Ok(Some(*v)),
            Eta::Named(s) if s == "optimal" => Ok(None),
            Eta::Named(s) => bail!("link.eta: expected an integer or \"optimal\", got {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBlock {
    #[serde(default = "default_molecules")]
    pub molecules: u64,
    #[serde(default = "half")]
    pub prior_one: f64,
    #[serde(default = "default_slot")]
    pub slot: f64,
    #[serde(default = "default_decision_slot")]
    pub decision_slot: usize,
    #[serde(default = "default_rules")]
    pub rules: Vec<String>,
    #[serde(default)]
    pub eta: Eta,
    #[serde(default = "default_eta_max")]
    pub eta_max: u64,
    /// Number of taps written by the `taps` experiment.
    pub slots: Option<usize>,
}

fn default_molecules() -> u64 {
    200
}
fn half() -> f64 {
    0.5
}
fn default_slot() -> f64 {
    5.0
}
fn default_decision_slot() -> usize {
    9
}
fn default_rules() -> Vec<String> {
    ["or", "and", "majority", "single"].map(String::from).to_vec()
}
fn default_eta_max() -> u64 {
    60
}

impl Default for LinkBlock {
    fn default() -> Self {
        Self {
            molecules: default_molecules(),
            prior_one: half(),
            slot: default_slot(),
            decision_slot: default_decision_slot(),
            rules: default_rules(),
            eta: Eta::default(),
            eta_max: default_eta_max(),
            slots: None,
        }
    }
}

impl LinkBlock {
    pub fn params(&self) -> OokParams<f64> {
        OokParams {
            molecules: self.molecules,
            prior_one: self.prior_one,
            slot: self.slot,
            decision_slot: self.decision_slot,
        }
    }

    pub fn rules(&self) -> Result<Vec<Rule>> {
        self.rules.iter().map(|r| Rule::parse(r)).collect()
    }
}

/// Fusion rule by name; `single` evaluates the first receiver on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Or,
    And,
    Majority,
    AtLeast(usize),
    Single,
}

impl Rule {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "or" => Rule::Or,
            "and" => Rule::And,
            "majority" => Rule::Majority,
            "single" => Rule::Single,
            other => match other.strip_prefix('k').and_then(|k| k.parse().ok()) {
                Some(k) => Rule::AtLeast(k),
                None => bail!("unknown fusion rule {other:?} (or, and, majority, single, k<K>)"),
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            Rule::Or => "or".into(),
            Rule::And => "and".into(),
            Rule::Majority => "majority".into(),
            Rule::AtLeast(k) => format!("k{k}"),
            Rule::Single => "single".into(),
        }
    }

    pub fn fusion(&self, n: usize) -> Result<FusionRule> {
        Ok(match self {
            Rule::Or => FusionRule::or(n)?,
            Rule::And => FusionRule::and(n)?,
            Rule::Majority => FusionRule::majority(n)?,
            Rule::AtLeast(k) => FusionRule::new(*k, n)?,
            Rule::Single => FusionRule::or(1)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Hit,
    Gain,
    AbsError,
    Ber,
    MutualInfluence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: String,
    pub values: Vec<Value>,
}

/// Explicit values, or `"grid"` for the points of the `[time]` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<Value>),
    Named(String),
}

impl SweepValues {
    pub fn resolve(&self, time: &TimeBlock) -> Result<Vec<Value>> {
        match self {
            SweepValues::List(v) if !v.is_empty() => Ok(v.clone()),
            SweepValues::List(_) => bail!("sweep.values is empty"),
            SweepValues::Named(s) if s == "grid" => Ok(time.grid()?.into_iter().map(Value::Float).collect()),
            SweepValues::Named(s) => bail!("sweep.values: expected a list or \"grid\", got {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub quantity: Quantity,
    pub parameter: String,
    pub values: SweepValues,
    /// Extra axes whose combinations become column groups.
    #[serde(default)]
    pub family: Vec<Axis>,
    /// 1-based receiver for per-receiver quantities.
    #[serde(default = "one_usize")]
    pub receiver: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    #[default]
    Fast,
    Full,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    #[serde(default)]
    pub level: Level,
}

impl ExperimentConfig {
    pub fn from_table(table: &Table) -> Result<Self> {
        // round-trip through text so that errors carry line numbers
        let text = toml::to_string(table)?;
        let cfg: Self = toml::from_str(&text).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.kind == Kind::Validate {
            return Ok(());
        }
        match (&self.geometry.positions, &self.geometry.uca) {
            (Some(_), Some(_)) => bail!("geometry: give exactly one of `positions` or `uca`, not both"),
            (None, None) => bail!("geometry: missing; give `positions` or a `uca` block"),
            _ => {}
        }
        if self.physics.is_none() {
            bail!("physics: missing block with `radius` and `diffusion`");
        }
        if self.method.name == MethodName::Series && self.geometry.uca.is_none() {
            bail!("method.name = \"series\" requires a `geometry.uca` block");
        }
        if self.kind == Kind::Sweep && self.sweep.is_none() {
            bail!("kind = \"sweep\" needs a [sweep] block");
        }
        Ok(())
    }

    pub fn physics(&self) -> Physics {
        self.physics.expect("checked on load")
    }

    pub fn system(&self) -> Result<(System, Option<Uca>)> {
        let p = self.physics();
        if let Some(u) = self.geometry.uca {
            let (sys, uca) = build_uca(u.count, u.ring_radius, u.offset, p.radius, p.diffusion)
                .with_context(|| format!("geometry.uca {u:?}"))?;
            Ok((sys, Some(uca)))
        } else {
            let pos = self.geometry.positions.clone().expect("checked on load");
            let sys = System::new(pos, p.radius, p.diffusion).context("geometry.positions")?;
            Ok((sys, None))
        }
    }
}

/// Interprets `raw` as a TOML value, falling back to a bare string.
pub fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `path` (dot-separated; numeric segments index arrays from 0),
/// creating intermediate tables as needed.
pub fn set_path(table: &mut Table, path: &str, value: Value) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        bail!("bad key path {path:?}");
    }
    let (first, rest) = segments.split_first().expect("non-empty");
    if rest.is_empty() {
        table.insert(first.to_string(), value);
        return Ok(());
    }
    let slot = table
        .entry(first.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    set_in_value(slot, rest, value).with_context(|| format!("setting {path:?}"))
}

fn set_in_value(node: &mut Value, path: &[&str], value: Value) -> Result<()> {
    let (head, rest) = path.split_first().expect("non-empty");
    let child = match node {
        Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.to_string(), value);
                return Ok(());
            }
            t.entry(head.to_string()).or_insert_with(|| Value::Table(Table::new()))
        }
        Value::Array(a) => {
            let i: usize = head.parse().map_err(|_| anyhow!("{head:?} is not an array index"))?;
            let len = a.len();
            let slot = a
                .get_mut(i)
                .ok_or_else(|| anyhow!("index {i} out of range (length {len})"))?;
            if rest.is_empty() {
                *slot = value;
                return Ok(());
            }
            slot
        }
        other => bail!("cannot descend into {} at {head:?}", other.type_str()),
    };
    set_in_value(child, rest, value)
}

/// Applies `key=value` overrides.
pub fn apply_sets(table: &mut Table, sets: &[String]) -> Result<()> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got {s:?}"))?;
        set_path(table, k.trim(), parse_value(v.trim()))?;
    }
    Ok(())
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Compact text for a TOML value, as used in column labels.
pub fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
