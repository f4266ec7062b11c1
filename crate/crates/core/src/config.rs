//! TOML problem and sweep descriptions.
//!
//! A problem is either a relay placement on a unit line (`[geometry]`) or a
//! pair of explicit links (`[link1]`, `[link2]`). SNRs may be given linear
//! (`snr`) or in decibels (`snr_db`), never both.
//!
//! ```toml
//! mode = "full-duplex"
//! theta1 = 0.01
//! theta2 = 0.001
//!
//! [geometry]
//! d = 0.5
//! path_loss_alpha = 4.0
//! snr1_db = 0.0
//! snr2_db = 10.0
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::capacity::{geometry_to_config, min_stable_d, RelayGeometry};
use crate::channel::{BlockConfig, FadingModel, LinkConfig};
use crate::error::{Error, Result};
use crate::lmgf::{DuplexMode, SystemConfig};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn pick_snr(name: &str, linear: Option<f64>, db: Option<f64>) -> Result<f64> {
    match (linear, db) {
        (Some(s), None) => Ok(s),
        (None, Some(d)) if d.is_finite() => Ok(db_to_linear(d)),
        (None, Some(d)) => Err(config_err(format!("{name}_db must be finite, got {d}"))),
        (Some(_), Some(_)) => Err(config_err(format!("give either {name} or {name}_db, not both"))),
        (None, None) => Err(config_err(format!("missing {name} (or {name}_db)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub d: f64,
    #[serde(default = "default_alpha")]
    pub path_loss_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr1_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr2_db: Option<f64>,
}

fn default_alpha() -> f64 {
    4.0
}

impl GeometrySection {
    pub fn to_geometry(&self) -> Result<RelayGeometry> {
        RelayGeometry::new(
            self.d,
            self.path_loss_alpha,
            pick_snr("snr1", self.snr1, self.snr1_db)?,
            pick_snr("snr2", self.snr2, self.snr2_db)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub fading: FadingModel,
}

impl LinkSection {
    pub fn to_link(&self) -> Result<LinkConfig> {
        LinkConfig::new(self.fading.clone(), pick_snr("snr", self.snr, self.snr_db)?)
    }
}

/// One two-hop problem instance as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mode: DuplexMode,
    pub theta1: f64,
    pub theta2: f64,
    #[serde(default)]
    pub block: BlockConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link1: Option<LinkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link2: Option<LinkSection>,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.to_system()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Resolves dB values and geometry into a validated [`SystemConfig`].
    /// Parameter violations surface as [`Error::Config`].
    pub fn to_system(&self) -> Result<SystemConfig> {
        self.build().map_err(|e| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        })
    }

    fn build(&self) -> Result<SystemConfig> {
        match (&self.geometry, &self.link1, &self.link2) {
            (Some(g), None, None) => geometry_to_config(
                &g.to_geometry()?,
                self.block,
                self.theta1,
                self.theta2,
                self.mode,
            ),
            (None, Some(l1), Some(l2)) => SystemConfig::new(
                l1.to_link()?,
                l2.to_link()?,
                self.block,
                self.theta1,
                self.theta2,
                self.mode,
            ),
            (Some(_), _, _) => Err(config_err("give either [geometry] or [link1]/[link2], not both")),
            _ => Err(config_err("missing [geometry] or both [link1] and [link2]")),
        }
    }

    /// Copy with one swept parameter replaced.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match axis {
            Axis::Theta2 => out.theta2 = value,
            Axis::D => {
                out.geometry
                    .as_mut()
                    .ok_or_else(|| config_err("the d axis needs a [geometry] section"))?
                    .d = value;
            }
            Axis::Snr2Db => {
                if let Some(g) = out.geometry.as_mut() {
                    g.snr2 = None;
                    g.snr2_db = Some(value);
                } else if let Some(l) = out.link2.as_mut() {
                    l.snr = None;
                    l.snr_db = Some(value);
                } else {
                    return Err(config_err("the snr2_db axis needs [geometry] or [link2]"));
                }
            }
        }
        Ok(out)
    }

    /// Smallest stable relay position of a geometry problem.
    pub fn min_stable_d(&self) -> Result<f64> {
        let g = self
            .geometry
            .as_ref()
            .ok_or_else(|| config_err("stable_start needs a [geometry] section"))?;
        min_stable_d(&g.to_geometry()?, self.block)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Theta2,
    D,
    Snr2Db,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Theta2 => "theta2",
            Axis::D => "d",
            Axis::Snr2Db => "snr2_db",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

pub const MIN_AXIS_POINTS: usize = 2;
pub const MAX_AXIS_POINTS: usize = 10_000;

/// A swept parameter: explicit `values`, or `start`/`stop`/`points` with
/// linear or log spacing. For `d`, `stable_start = true` replaces `start`
/// with the smallest stable position, which is itself excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default)]
    pub stable_start: bool,
}

impl AxisSpec {
    pub fn values(name: Axis, values: Vec<f64>) -> Self {
        AxisSpec {
            name,
            values: Some(values),
            start: None,
            stop: None,
            points: None,
            spacing: Spacing::Linear,
            stable_start: false,
        }
    }

    pub fn range(name: Axis, start: f64, stop: f64, points: usize, spacing: Spacing) -> Self {
        AxisSpec {
            name,
            values: None,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            spacing,
            stable_start: false,
        }
    }

    /// Grid values for this axis over `base`.
    pub fn grid(&self, base: &ProblemConfig) -> Result<Vec<f64>> {
        let name = self.name;
        let grid = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) if !self.stable_start => v.clone(),
            (None, start, Some(stop), Some(n)) => {
                if !(MIN_AXIS_POINTS..=MAX_AXIS_POINTS).contains(&n) {
                    return Err(config_err(format!(
                        "axis {name}: points must lie in [{MIN_AXIS_POINTS}, {MAX_AXIS_POINTS}], got {n}"
                    )));
                }
                if self.stable_start {
                    if name != Axis::D || start.is_some() {
                        return Err(config_err("stable_start applies to the d axis and replaces start"));
                    }
                    let d0 = base.min_stable_d()?;
                    if !(stop > d0) {
                        return Err(config_err(format!("axis d: stop {stop} is not above the stable limit {d0}")));
                    }
                    // Open at d0: the first point sits one step inside.
                    spaced(d0, stop, n + 1, self.spacing)?.split_off(1)
                } else {
                    let start = start.ok_or_else(|| config_err(format!("axis {name}: missing start")))?;
                    spaced(start, stop, n, self.spacing)?
                }
            }
            _ => {
                return Err(config_err(format!(
                    "axis {name}: give either values or start/stop/points"
                )))
            }
        };
        check_grid(name, &grid)?;
        Ok(grid)
    }
}

fn spaced(a: f64, b: f64, n: usize, spacing: Spacing) -> Result<Vec<f64>> {
    let at = |i: usize| i as f64 / (n - 1) as f64;
    match spacing {
        Spacing::Linear => Ok((0..n).map(|i| a + (b - a) * at(i)).collect()),
        Spacing::Log => {
            if !(a > 0.0 && b > 0.0) {
                return Err(config_err("log spacing needs positive start and stop"));
            }
            let (la, lb) = (a.ln(), b.ln());
            Ok((0..n).map(|i| (la + (lb - la) * at(i)).exp()).collect())
        }
    }
}

fn check_grid(name: Axis, grid: &[f64]) -> Result<()> {
    if !(MIN_AXIS_POINTS..=MAX_AXIS_POINTS).contains(&grid.len()) {
        return Err(config_err(format!(
            "axis {name}: {} points, need between {MIN_AXIS_POINTS} and {MAX_AXIS_POINTS}",
            grid.len()
        )));
    }
    if !grid.iter().all(|v| v.is_finite()) {
        return Err(config_err(format!("axis {name}: non-finite grid value")));
    }
    let up = grid.windows(2).all(|w| w[0] < w[1]);
    let down = grid.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(config_err(format!("axis {name}: grid must be strictly monotone")));
    }
    Ok(())
}

/// Optional CSV columns of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Capacity,
    CaseTag,
    ThetaBar,
    /// Source and relay exponents at the solution.
    Exponents,
    Tau,
    UpperBound,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Capacity,
        Output::CaseTag,
        Output::ThetaBar,
        Output::Exponents,
        Output::Tau,
        Output::UpperBound,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ProblemConfig,
    pub axis1: AxisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<Output>>,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a2) = &self.axis2 {
            if a2.name == self.axis1.name {
                return Err(config_err("axis1 and axis2 must differ"));
            }
        }
        self.grids().map(|_| ())
    }

    pub fn axes(&self) -> Vec<&AxisSpec> {
        std::iter::once(&self.axis1).chain(self.axis2.as_ref()).collect()
    }

    pub fn grids(&self) -> Result<Vec<Vec<f64>>> {
        self.axes().iter().map(|a| a.grid(&self.base)).collect()
    }

    pub fn wants(&self, out: Output) -> bool {
        self.outputs.as_ref().is_none_or(|o| o.contains(&out))
    }
}
