//! Grid scans over fields, temperatures and coupling ratios.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{
    channel_concurrence, channel_density_matrix, classify_ground_state, ground_state_channel_concurrence,
};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::model::{field_from_tesla_with, preset, CouplingSet, InputState, Thermo, MU_B_OVER_K_B};
use crate::teleport::{average_fidelity, bell_probabilities, fidelity, output_concurrence, CLASSICAL_THRESHOLD};
use crate::transfer::{free_energy_per_cell, ising_statistics_from, transfer_eigenvalues, transfer_weights};

/// Lowest temperature accepted by scans, in the active energy unit.
pub const TEMPERATURE_FLOOR: f64 = 1e-3;
pub const DEFAULT_STEPS: usize = 101;
/// Slack on observable bounds at emission.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Dimensionless,
    Material,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "J1_over_J")]
    J1OverJ,
}

impl AxisName {
    pub fn label(&self) -> &'static str {
        match self {
            AxisName::H => "h",
            AxisName::T => "T",
            AxisName::B => "B",
            AxisName::J1OverJ => "J1_over_J",
        }
    }
}

impl FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(AxisName::H),
            "T" => Ok(AxisName::T),
            "B" => Ok(AxisName::B),
            "J1_over_J" => Ok(AxisName::J1OverJ),
            _ => Err(invalid(
                "axis",
                format!("unknown axis `{s}` (expected h, T, B or J1_over_J)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub steps: Option<usize>,
}

impl AxisSpec {
    /// Parses `name:min:max[:steps]`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(invalid("axis", format!("expected name:min:max[:steps], got `{s}`")));
        }
        let num = |field: &'static str, v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid(field, format!("not a number: `{v}`")))
        };
        let steps = match parts.get(3) {
            Some(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| invalid("steps", format!("not a count: `{v}`")))?,
            ),
            None => None,
        };
        Ok(Self {
            name: parts[0].trim().parse()?,
            min: num("axis min", parts[1])?,
            max: num("axis max", parts[2])?,
            steps,
        })
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    fn validate(&self, default_steps: usize) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min >= self.max {
            return Err(invalid(
                "axis",
                format!(
                    "{}: need finite min < max, got {}..{}",
                    self.name.label(),
                    self.min,
                    self.max
                ),
            ));
        }
        if self.steps_or(default_steps) < 2 {
            return Err(invalid(
                "steps",
                format!("{}: need at least 2 steps", self.name.label()),
            ));
        }
        if self.name == AxisName::T && self.min < TEMPERATURE_FLOOR {
            return Err(invalid(
                "T",
                format!("axis minimum {} is below the floor {TEMPERATURE_FLOOR}", self.min),
            ));
        }
        if self.name == AxisName::B && self.min < 0.0 {
            return Err(invalid("B", format!("axis minimum {} is negative", self.min)));
        }
        Ok(())
    }

    /// Evenly spaced values including both ends.
    pub fn values(&self, default_steps: usize) -> Vec<f64> {
        let n = self.steps_or(default_steps);
        let span = self.max - self.min;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.max
                } else {
                    self.min + span * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "m_I")]
    MIsing,
    #[serde(rename = "eps_I")]
    EpsIsing,
    #[serde(rename = "f")]
    FreeEnergy,
    #[serde(rename = "C_ch")]
    ChannelConcurrence,
    #[serde(rename = "C_out")]
    OutputConcurrence,
    #[serde(rename = "F")]
    Fidelity,
    #[serde(rename = "F_av")]
    AverageFidelity,
    #[serde(rename = "phase")]
    Phase,
    #[serde(rename = "tie")]
    Tie,
    #[serde(rename = "E_gs")]
    GroundEnergy,
    #[serde(rename = "C_ch_gs")]
    GroundConcurrence,
    #[serde(rename = "p0")]
    P0,
    #[serde(rename = "p1")]
    P1,
    #[serde(rename = "p2")]
    P2,
    #[serde(rename = "p3")]
    P3,
}

impl Observable {
    pub const ALL: [Observable; 15] = [
        Observable::MIsing,
        Observable::EpsIsing,
        Observable::FreeEnergy,
        Observable::ChannelConcurrence,
        Observable::OutputConcurrence,
        Observable::Fidelity,
        Observable::AverageFidelity,
        Observable::Phase,
        Observable::Tie,
        Observable::GroundEnergy,
        Observable::GroundConcurrence,
        Observable::P0,
        Observable::P1,
        Observable::P2,
        Observable::P3,
    ];

    /// Default columns of `point`, `scan` and `material`.
    pub const THERMAL_DEFAULT: [Observable; 12] = [
        Observable::MIsing,
        Observable::EpsIsing,
        Observable::FreeEnergy,
        Observable::ChannelConcurrence,
        Observable::OutputConcurrence,
        Observable::Fidelity,
        Observable::AverageFidelity,
        Observable::Phase,
        Observable::P0,
        Observable::P1,
        Observable::P2,
        Observable::P3,
    ];

    pub const GROUND_DEFAULT: [Observable; 4] = [
        Observable::Phase,
        Observable::Tie,
        Observable::GroundEnergy,
        Observable::GroundConcurrence,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Observable::MIsing => "m_I",
            Observable::EpsIsing => "eps_I",
            Observable::FreeEnergy => "f",
            Observable::ChannelConcurrence => "C_ch",
            Observable::OutputConcurrence => "C_out",
            Observable::Fidelity => "F",
            Observable::AverageFidelity => "F_av",
            Observable::Phase => "phase",
            Observable::Tie => "tie",
            Observable::GroundEnergy => "E_gs",
            Observable::GroundConcurrence => "C_ch_gs",
            Observable::P0 => "p0",
            Observable::P1 => "p1",
            Observable::P2 => "p2",
            Observable::P3 => "p3",
        }
    }

    fn per_angle(&self) -> bool {
        matches!(self, Observable::OutputConcurrence | Observable::Fidelity)
    }

    fn thermal(&self) -> bool {
        !matches!(
            self,
            Observable::Phase | Observable::Tie | Observable::GroundEnergy | Observable::GroundConcurrence
        )
    }

    /// Closed interval every value must lie in, if any.
    fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Observable::MIsing => Some((-0.5, 0.5)),
            Observable::EpsIsing => Some((-0.25, 0.25)),
            Observable::FreeEnergy | Observable::GroundEnergy => None,
            Observable::Phase | Observable::Tie => None,
            _ => Some((0.0, 1.0)),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.label() == s)
            .ok_or_else(|| invalid("outputs", format!("unknown observable `{s}`")))
    }
}

fn default_j() -> f64 {
    1.0
}

fn default_angles() -> Vec<InputState> {
    vec![InputState {
        theta: std::f64::consts::FRAC_PI_2,
        phi: 0.0,
    }]
}

/// Everything needed to produce one table. Field names double as the JSON
/// spec-file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default)]
    pub mode: Mode,
    #[serde(rename = "J", default = "default_j")]
    pub j: f64,
    #[serde(rename = "J1", default = "default_j")]
    pub j1: f64,
    #[serde(default)]
    pub preset: Option<String>,
    /// Fixed field (energy units, dimensionless mode).
    #[serde(default)]
    pub h: Option<f64>,
    /// Fixed temperature.
    #[serde(rename = "T", default)]
    pub temperature: Option<f64>,
    /// Fixed field in Tesla (material mode).
    #[serde(rename = "B", default)]
    pub b_tesla: Option<f64>,
    #[serde(default)]
    pub axis1: Option<AxisSpec>,
    #[serde(default)]
    pub axis2: Option<AxisSpec>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "default_angles")]
    pub angles: Vec<InputState>,
    #[serde(default)]
    pub outputs: Option<Vec<Observable>>,
    /// `mu_B / k_B` in K/T; only overridden by consistency checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_b_over_k_b: Option<f64>,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            mode: Mode::Dimensionless,
            j: 1.0,
            j1: 1.0,
            preset: None,
            h: None,
            temperature: None,
            b_tesla: None,
            axis1: None,
            axis2: None,
            steps: None,
            angles: default_angles(),
            outputs: None,
            mu_b_over_k_b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => f.write_str(&format_sig9(*x)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// Formats with nine significant digits, `%g` style.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    /// Parameter echo written ahead of the data.
    pub echo: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ScanTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column(name)?;
        self.rows.iter().map(|r| r[idx].as_f64()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {}", self.echo)?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| match c {
                            Cell::Num(x) => json!(x),
                            Cell::Text(s) => json!(s),
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "params": self.echo, "columns": self.columns, "rows": rows })
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.to_json())?;
        writeln!(w)?;
        w.flush()
    }
}

/// Spec after defaults, preset lookup and validation.
#[derive(Debug, Clone)]
struct Resolved {
    spec: ScanSpec,
    j: f64,
    j1: f64,
    g_factor: f64,
    mu: f64,
    axes: Vec<AxisSpec>,
    default_steps: usize,
    outputs: Vec<Observable>,
}

impl Resolved {
    fn new(spec: &ScanSpec, default_outputs: &[Observable]) -> Result<Self> {
        let mut spec = spec.clone();
        let mu = spec.mu_b_over_k_b.unwrap_or(MU_B_OVER_K_B);
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid("mu_b_over_k_b", format!("must be positive, got {mu}")));
        }
        let (j, j1, g_factor) = match spec.mode {
            Mode::Dimensionless => {
                if spec.preset.is_some() {
                    return Err(invalid("preset", "presets need material mode"));
                }
                if spec.b_tesla.is_some() {
                    return Err(invalid("B", "a field in Tesla needs material mode"));
                }
                (spec.j, spec.j1, f64::NAN)
            }
            Mode::Material => {
                let name = spec
                    .preset
                    .clone()
                    .ok_or_else(|| invalid("preset", "material mode needs a preset"))?;
                if spec.h.is_some() {
                    return Err(invalid("h", "material mode takes the field as B in Tesla"));
                }
                let p = preset(&name)?;
                spec.preset = Some(p.name.to_string());
                spec.j = p.j_kelvin;
                spec.j1 = p.j1_kelvin;
                (p.j_kelvin, p.j1_kelvin, p.g_factor)
            }
        };
        CouplingSet::new(j, j1, spec.h.unwrap_or(0.0))?;
        let default_steps = spec.steps.unwrap_or(DEFAULT_STEPS);
        let axes: Vec<AxisSpec> = spec.axis1.iter().chain(spec.axis2.iter()).copied().collect();
        if spec.axis1.is_none() && spec.axis2.is_some() {
            return Err(invalid("axis2", "axis2 given without axis1"));
        }
        for axis in &axes {
            axis.validate(default_steps)?;
            let allowed = match spec.mode {
                Mode::Dimensionless => axis.name != AxisName::B,
                Mode::Material => matches!(axis.name, AxisName::B | AxisName::T),
            };
            if !allowed {
                return Err(invalid(
                    "axis",
                    format!("axis `{}` is not available in this mode", axis.name.label()),
                ));
            }
        }
        if axes.len() == 2 && axes[0].name == axes[1].name {
            return Err(invalid("axis2", "both axes name the same parameter"));
        }
        if let Some(t) = spec.temperature {
            check_temperature(t)?;
        }
        if let Some(b) = spec.b_tesla {
            field_from_tesla_with(b, g_factor, mu)?;
        }
        if spec.angles.is_empty() {
            return Err(invalid("angles", "need at least one input state"));
        }
        for a in &spec.angles {
            a.validate()?;
        }
        let outputs = match &spec.outputs {
            Some(o) if o.is_empty() => return Err(invalid("outputs", "need at least one observable")),
            Some(o) => o.clone(),
            None => default_outputs.to_vec(),
        };
        let has_t = spec.temperature.is_some() || axes.iter().any(|a| a.name == AxisName::T);
        if !has_t && outputs.iter().any(Observable::thermal) {
            return Err(invalid("T", "thermal observables need a temperature (flag or axis)"));
        }
        Ok(Self {
            spec,
            j,
            j1,
            g_factor,
            mu,
            axes,
            default_steps,
            outputs,
        })
    }

    fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = if self.axes.is_empty() {
            match self.spec.mode {
                Mode::Dimensionless => ["J", "J1", "h", "T"].map(String::from).to_vec(),
                Mode::Material => ["B", "T", "h"].map(String::from).to_vec(),
            }
        } else {
            self.axes.iter().map(|a| a.name.label().to_string()).collect()
        };
        let multi = self.spec.angles.len() > 1;
        for o in &self.outputs {
            if o.per_angle() && multi {
                cols.extend((0..self.spec.angles.len()).map(|k| format!("{}_{k}", o.label())));
            } else {
                cols.push(o.label().to_string());
            }
        }
        cols
    }

    /// Couplings and temperature at one grid point.
    fn point(&self, coords: &[f64]) -> Result<(CouplingSet, Option<f64>)> {
        let mut j1 = self.j1;
        let mut h = self.spec.h.unwrap_or(0.0);
        let mut b = self.spec.b_tesla.unwrap_or(0.0);
        let mut t = self.spec.temperature;
        for (axis, v) in self.axes.iter().zip(coords) {
            match axis.name {
                AxisName::H => h = *v,
                AxisName::T => t = Some(*v),
                AxisName::B => b = *v,
                AxisName::J1OverJ => j1 = v * self.j,
            }
        }
        if self.spec.mode == Mode::Material {
            h = field_from_tesla_with(b, self.g_factor, self.mu)?;
        }
        Ok((CouplingSet::new(self.j, j1, h)?, t))
    }

    fn echo(&self) -> Value {
        let mut spec = self.spec.clone();
        spec.outputs = Some(self.outputs.clone());
        spec.steps = Some(self.default_steps);
        json!({ "version": env!("CARGO_PKG_VERSION"), "spec": spec })
    }

    fn row(&self, coords: &[f64]) -> Result<Vec<Cell>> {
        let (c, t) = self.point(coords)?;
        let mut row: Vec<Cell> = if self.axes.is_empty() {
            match self.spec.mode {
                Mode::Dimensionless => vec![c.j, c.j1, c.h, t.unwrap_or(f64::NAN)],
                Mode::Material => vec![self.spec.b_tesla.unwrap_or(0.0), t.unwrap_or(f64::NAN), c.h],
            }
            .into_iter()
            .map(Cell::Num)
            .collect()
        } else {
            coords.iter().copied().map(Cell::Num).collect()
        };
        let context = || {
            let mut parts: Vec<String> = self
                .axes
                .iter()
                .zip(coords)
                .map(|(a, v)| format!("{}={v}", a.name.label()))
                .collect();
            parts.push(format!("J={} J1={} h={}", c.j, c.j1, c.h));
            if let Some(t) = t {
                parts.push(format!("T={t}"));
            }
            parts.join(" ")
        };
        let point = PointEvaluation::new(&c, t, &self.spec.angles, &self.outputs)?;
        for o in &self.outputs {
            for cell in point.cells(*o) {
                if let (Cell::Num(v), Some((lo, hi))) = (&cell, o.bounds()) {
                    if !(v.is_finite() && *v >= lo - BOUND_SLACK && *v <= hi + BOUND_SLACK) {
                        return Err(Error::BoundViolation {
                            observable: o.label().to_string(),
                            value: *v,
                            context: context(),
                        });
                    }
                }
                if let (Cell::Num(v), None) = (&cell, o.bounds()) {
                    if !v.is_finite() {
                        return Err(Error::BoundViolation {
                            observable: o.label().to_string(),
                            value: *v,
                            context: context(),
                        });
                    }
                }
                row.push(cell);
            }
        }
        Ok(row)
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= TEMPERATURE_FLOOR) {
        return Err(invalid(
            "T",
            format!("must be finite and at least {TEMPERATURE_FLOOR}, got {t}"),
        ));
    }
    Ok(())
}

/// All observables at one parameter point, computed once.
struct PointEvaluation {
    thermal: Option<Thermal>,
    ground: Option<Ground>,
}

struct Thermal {
    m_ising: f64,
    eps_ising: f64,
    free_energy: f64,
    c_ch: f64,
    f_av: f64,
    bell: [f64; 4],
    per_angle: Vec<(f64, f64)>,
}

struct Ground {
    phase: String,
    tie: String,
    energy: Cell,
    concurrence: Cell,
}

impl PointEvaluation {
    fn new(c: &CouplingSet, t: Option<f64>, angles: &[InputState], outputs: &[Observable]) -> Result<Self> {
        let thermal = match (t, outputs.iter().any(Observable::thermal)) {
            (Some(t), true) => {
                check_temperature(t)?;
                let th = Thermo::from_temperature(t)?;
                let w = transfer_weights(c, &th)?;
                let stats = ising_statistics_from(&w);
                let ev = transfer_eigenvalues(&w);
                let rho = channel_density_matrix(c, &th)?;
                let per_angle = angles
                    .iter()
                    .map(|s| Ok((output_concurrence(&rho, s)?, fidelity(&rho, s.theta)?)))
                    .collect::<Result<Vec<_>>>()?;
                debug_assert!((free_energy_per_cell(c, &th)? + t * ev.ln_lambda_plus()).abs() < 1e-9 * (1.0 + t));
                Some(Thermal {
                    m_ising: stats.m_ising,
                    eps_ising: stats.eps_ising,
                    free_energy: -t * ev.ln_lambda_plus(),
                    c_ch: channel_concurrence(&rho),
                    f_av: average_fidelity(&rho),
                    bell: bell_probabilities(&rho).as_array(),
                    per_angle,
                })
            }
            _ => None,
        };
        let ground = if outputs.iter().any(|o| !o.thermal()) {
            Some(match classify_ground_state(c) {
                Ok(gs) => Ground {
                    phase: gs.phase.label().to_string(),
                    tie: gs.tie.map_or_else(|| "-".to_string(), |p| p.label().to_string()),
                    energy: Cell::Num(gs.energy_per_cell),
                    concurrence: Cell::Num(ground_state_channel_concurrence(c)?),
                },
                Err(_) => Ground {
                    phase: "NA".into(),
                    tie: "NA".into(),
                    energy: Cell::Text("NA".into()),
                    concurrence: Cell::Text("NA".into()),
                },
            })
        } else {
            None
        };
        Ok(Self { thermal, ground })
    }

    fn cells(&self, o: Observable) -> Vec<Cell> {
        if o.thermal() {
            let th = self.thermal.as_ref().expect("thermal observables evaluated");
            let one = |x: f64| vec![Cell::Num(x)];
            return match o {
                Observable::MIsing => one(th.m_ising),
                Observable::EpsIsing => one(th.eps_ising),
                Observable::FreeEnergy => one(th.free_energy),
                Observable::ChannelConcurrence => one(th.c_ch),
                Observable::AverageFidelity => one(th.f_av),
                Observable::OutputConcurrence => th.per_angle.iter().map(|p| Cell::Num(p.0)).collect(),
                Observable::Fidelity => th.per_angle.iter().map(|p| Cell::Num(p.1)).collect(),
                Observable::P0 => one(th.bell[0]),
                Observable::P1 => one(th.bell[1]),
                Observable::P2 => one(th.bell[2]),
                Observable::P3 => one(th.bell[3]),
                _ => unreachable!("ground-state observable"),
            };
        }
        let g = self.ground.as_ref().expect("ground-state observables evaluated");
        vec![match o {
            Observable::Phase => Cell::Text(g.phase.clone()),
            Observable::Tie => Cell::Text(g.tie.clone()),
            Observable::GroundEnergy => g.energy.clone(),
            Observable::GroundConcurrence => g.concurrence.clone(),
            _ => unreachable!("thermal observable"),
        }]
    }
}

fn run_table(spec: &ScanSpec, default_outputs: &[Observable], exec: Execution) -> Result<ScanTable> {
    let r = Resolved::new(spec, default_outputs)?;
    let grids: Vec<Vec<f64>> = r.axes.iter().map(|a| a.values(r.default_steps)).collect();
    let rows = match grids.len() {
        0 => vec![r.row(&[])?],
        1 => exec.try_map(grids[0].len(), |i| r.row(&[grids[0][i]]))?,
        _ => {
            let inner = grids[1].len();
            exec.try_map(grids[0].len() * inner, |i| {
                r.row(&[grids[0][i / inner], grids[1][i % inner]])
            })?
        }
    };
    Ok(ScanTable {
        echo: r.echo(),
        columns: r.columns(),
        rows,
    })
}

/// Single-point evaluation; the spec must not name any axis.
pub fn run_point(spec: &ScanSpec) -> Result<ScanTable> {
    if spec.axis1.is_some() || spec.axis2.is_some() {
        return Err(invalid("axis", "point evaluation takes no axes"));
    }
    run_table(spec, &Observable::THERMAL_DEFAULT, Execution::Sequential)
}

/// 1D or 2D grid, rows in row-major order with `axis1` outermost.
pub fn run_grid(spec: &ScanSpec, exec: Execution) -> Result<ScanTable> {
    if spec.axis1.is_none() {
        return Err(invalid("axis1", "a scan needs at least one axis"));
    }
    run_table(spec, &Observable::THERMAL_DEFAULT, exec)
}

/// Grid over `B` (Tesla) and `T` (Kelvin) for a material preset.
pub fn material_scan(spec: &ScanSpec, exec: Execution) -> Result<ScanTable> {
    let mut spec = spec.clone();
    spec.mode = Mode::Material;
    if spec.axis1.is_none() {
        run_point(&spec)
    } else {
        run_grid(&spec, exec)
    }
}

/// Ground-state phase map over `J1/J` and `h`; thermal columns are added
/// when a temperature is given.
pub fn phase_diagram(spec: &ScanSpec, exec: Execution) -> Result<ScanTable> {
    let mut spec = spec.clone();
    if spec.mode != Mode::Dimensionless {
        return Err(invalid("mode", "phase diagrams are dimensionless"));
    }
    spec.axis1.get_or_insert(AxisSpec {
        name: AxisName::J1OverJ,
        min: 0.0,
        max: 3.0,
        steps: None,
    });
    spec.axis2.get_or_insert(AxisSpec {
        name: AxisName::H,
        min: 0.0,
        max: 3.0,
        steps: None,
    });
    let mut defaults = Observable::GROUND_DEFAULT.to_vec();
    if spec.temperature.is_some() {
        defaults.extend(Observable::THERMAL_DEFAULT.iter().filter(|o| o.thermal()));
    }
    run_table(&spec, &defaults, exec)
}

/// Quantity whose 2/3 crossing is traced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ContourTarget {
    Fidelity { theta: f64 },
    AverageFidelity,
}

impl ContourTarget {
    pub fn label(&self) -> &'static str {
        match self {
            ContourTarget::Fidelity { .. } => "F",
            ContourTarget::AverageFidelity => "F_av",
        }
    }

    fn value(&self, c: &CouplingSet, t: f64) -> Result<f64> {
        let rho = channel_density_matrix(c, &Thermo::from_temperature(t)?)?;
        match self {
            ContourTarget::Fidelity { theta } => fidelity(&rho, *theta),
            ContourTarget::AverageFidelity => Ok(average_fidelity(&rho)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSearch {
    pub j: f64,
    pub j1: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_steps: usize,
    pub t_max: f64,
    /// Coarse temperature spacing before bisection.
    pub t_step: f64,
    /// Final bracket width.
    pub tolerance: f64,
    pub target: ContourTarget,
}

impl ThresholdSearch {
    pub fn new(j1: f64, target: ContourTarget) -> Self {
        Self {
            j: 1.0,
            j1,
            h_min: 0.0,
            h_max: 3.0,
            h_steps: 301,
            t_max: 1.0,
            t_step: 0.005,
            tolerance: 1e-6,
            target,
        }
    }

    fn validate(&self) -> Result<()> {
        CouplingSet::new(self.j, self.j1, self.h_min)?;
        AxisSpec {
            name: AxisName::H,
            min: self.h_min,
            max: self.h_max,
            steps: Some(self.h_steps),
        }
        .validate(self.h_steps)?;
        check_temperature(self.t_max)?;
        if !(self.t_step > 0.0 && self.t_step < self.t_max) {
            return Err(invalid(
                "t_step",
                format!("must lie in (0, {}), got {}", self.t_max, self.t_step),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(invalid("tolerance", "must be positive"));
        }
        if let ContourTarget::Fidelity { theta } = self.target {
            crate::model::validate_theta(theta)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Largest crossing temperature over the field grid.
    pub t_star: Option<f64>,
    pub h_at_max: Option<f64>,
    /// Highest crossing per field value; `None` when the quantity stays below
    /// the threshold down to the floor.
    pub per_field: Vec<(f64, Option<f64>)>,
}

/// Highest temperature at which the target reaches 2/3, for each field,
/// by a downward coarse scan followed by bisection.
pub fn threshold_temperatures(search: &ThresholdSearch, exec: Execution) -> Result<ThresholdResult> {
    search.validate()?;
    let axis = AxisSpec {
        name: AxisName::H,
        min: search.h_min,
        max: search.h_max,
        steps: Some(search.h_steps),
    };
    let fields = axis.values(search.h_steps);
    let per_field: Vec<(f64, Option<f64>)> = exec.try_map(fields.len(), |i| {
        let h = fields[i];
        let c = CouplingSet::new(search.j, search.j1, h)?;
        Ok((h, highest_crossing(search, &c)?))
    })?;
    let best = per_field.iter().filter_map(|(h, t)| t.map(|t| (*h, t))).fold(
        None,
        |acc: Option<(f64, f64)>, (h, t)| match acc {
            Some((_, bt)) if bt >= t => acc,
            _ => Some((h, t)),
        },
    );
    Ok(ThresholdResult {
        t_star: best.map(|b| b.1),
        h_at_max: best.map(|b| b.0),
        per_field,
    })
}

fn highest_crossing(search: &ThresholdSearch, c: &CouplingSet) -> Result<Option<f64>> {
    let excess = |t: f64| -> Result<f64> { Ok(search.target.value(c, t)? - CLASSICAL_THRESHOLD) };
    let mut hot = search.t_max;
    if excess(hot)? >= 0.0 {
        return Err(Error::Regime(format!(
            "{} is above 2/3 at the top of the search range T = {} (h = {})",
            search.target.label(),
            search.t_max,
            c.h
        )));
    }
    let count = ((search.t_max - TEMPERATURE_FLOOR) / search.t_step).floor() as usize;
    for i in 1..=count + 1 {
        let cold = (search.t_max - search.t_step * i as f64).max(TEMPERATURE_FLOOR);
        if excess(cold)? >= 0.0 {
            let (mut lo, mut hi) = (cold, hot);
            while hi - lo > search.tolerance {
                let mid = 0.5 * (lo + hi);
                if excess(mid)? >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        hot = cold;
        if cold == TEMPERATURE_FLOOR {
            break;
        }
    }
    Ok(None)
}

impl ThresholdResult {
    pub fn to_table(&self, search: &ThresholdSearch) -> ScanTable {
        let echo = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "contour": search,
            "t_star": self.t_star,
            "h_at_max": self.h_at_max,
        });
        let rows = self
            .per_field
            .iter()
            .map(|(h, t)| vec![Cell::Num(*h), t.map_or_else(|| Cell::Text("NA".into()), Cell::Num)])
            .collect();
        ScanTable {
            echo,
            columns: vec!["h".into(), format!("T_{}", search.target.label())],
            rows,
        }
    }
}
