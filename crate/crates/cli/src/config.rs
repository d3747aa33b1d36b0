//! Campaign configuration: a TOML tree with command-line overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anismhd::asympt::TheoremId;
use anismhd::fit::geometric_samples;
use anismhd::grid::{make_grid, DerivativeIndex, Grid};
use anismhd::init::InitRecipe;
use anismhd::kernels::{KernelKind, KernelSpec};
use anismhd::linprop::PropagatorKind;
use anismhd::norms::Components;
use anismhd::solver::{FieldId, Integrator, ObserverSpec, SolverConfig, SystemKind};
use anismhd::tolerances::DEALIAS_TWO_THIRDS;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Exponents are written as numbers or as the string "inf".
mod exponent {
    use anismhd::norms::{format_exponent, parse_exponent};
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_exponent(*p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => parse_exponent(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Geometric time samples `lo:hi:n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl TimeRange {
    pub fn samples(&self) -> Vec<f64> {
        geometric_samples(self.lo, self.hi, self.n)
    }
}

impl std::str::FromStr for TimeRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("time range '{s}' is not lo:hi:n"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(CliError::Config(format!("time range '{s}' needs 0 < lo < hi and n >= 2")));
        }
        Ok(TimeRange { lo, hi, n })
    }
}

impl std::fmt::Display for TimeRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl Serialize for TimeRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSize {
    Cube(usize),
    Box([usize; 3]),
}

impl GridSize {
    pub fn dims(&self) -> [usize; 3] {
        match *self {
            GridSize::Cube(n) => [n; 3],
            GridSize::Box(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: GridSize,
    /// Horizontal period.
    #[serde(rename = "box")]
    pub l_h: f64,
    /// Vertical period, defaults to the horizontal one.
    #[serde(default, rename = "box_vertical", skip_serializing_if = "Option::is_none")]
    pub l_v: Option<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<Grid>> {
        Ok(make_grid(self.l_h, self.l_v.unwrap_or(self.l_h), self.n.dims())?)
    }
}

fn default_dealias() -> f64 {
    DEALIAS_TWO_THIRDS
}

fn default_stride() -> usize {
    1
}

fn default_integrator() -> Integrator {
    Integrator::Ifrk4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_dealias")]
    pub dealias: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Write a checkpoint at every sample; the Duhamel and profile analyses need them.
    #[serde(default)]
    pub checkpoints: bool,
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.dt, self.t_end).with_stride(self.stride).with_integrator(self.integrator);
        c.dealias = self.dealias;
        c.nonlinear = self.nonlinear;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub field: FieldId,
    #[serde(default = "default_components", with = "components")]
    pub components: Components,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(default)]
    pub alpha: [u32; 3],
}

fn default_components() -> Components {
    Components::All
}

mod components {
    use anismhd::norms::Components;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Components, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match c {
            Components::All => "all",
            Components::Horizontal => "h",
            Components::Vertical => "3",
            Components::Single(0) => "1",
            Components::Single(1) => "2",
            Components::Single(_) => "3",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Components, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "all" | "" => Ok(Components::All),
            "h" | "horizontal" => Ok(Components::Horizontal),
            "3" | "v" | "vertical" => Ok(Components::Vertical),
            "1" => Ok(Components::Single(0)),
            "2" => Ok(Components::Single(1)),
            _ => Err(serde::de::Error::custom(format!("unknown components '{s}'"))),
        }
    }
}

impl ObserverConfig {
    pub fn spec(&self) -> ObserverSpec {
        let a = self.alpha;
        ObserverSpec::new(self.field, self.components, self.p, self.q).with_alpha(DerivativeIndex::new(a[0], a[1], a[2]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub kind: KernelKind,
    #[serde(default)]
    pub beta: [u32; 2],
    #[serde(default)]
    pub gamma: u32,
    #[serde(default)]
    pub vertical: u32,
    #[serde(default)]
    pub m: u32,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
}

impl KernelEntry {
    pub fn spec(&self) -> KernelSpec {
        KernelSpec::plain(self.kind)
            .with_beta(self.beta[0], self.beta[1])
            .with_gamma(self.gamma)
            .with_vertical(self.vertical)
            .with_weight(self.m)
    }

    fn new(kind: KernelKind, beta: [u32; 2], gamma: u32, vertical: u32, p: f64, q: f64) -> Self {
        KernelEntry { kind, beta, gamma, vertical, m: 0, p, q }
    }
}

fn default_kernel_range() -> TimeRange {
    TimeRange { lo: 1.0, hi: 100.0, n: 12 }
}

fn default_kernel_tolerance() -> f64 {
    0.05
}

fn default_suite() -> Vec<KernelEntry> {
    let inf = f64::INFINITY;
    vec![
        KernelEntry::new(KernelKind::Gauss3, [1, 0], 0, 0, 2.0, 2.0),
        KernelEntry::new(KernelKind::Gauss2, [0, 0], 0, 0, inf, inf),
        KernelEntry::new(KernelKind::K, [2, 1], 0, 0, inf, inf),
        KernelEntry::new(KernelKind::N, [1, 0], 0, 1, inf, inf),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsSection {
    #[serde(default = "default_kernel_range")]
    pub t_range: TimeRange,
    /// Largest accepted |fitted − predicted| exponent.
    #[serde(default = "default_kernel_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_suite")]
    pub suite: Vec<KernelEntry>,
}

impl Default for KernelsSection {
    fn default() -> Self {
        KernelsSection { t_range: default_kernel_range(), tolerance: default_kernel_tolerance(), suite: default_suite() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearData {
    /// Divergence-free curl of a Gaussian.
    CurlGaussian,
    /// Divergence-free dipole and its non-solenoidal control.
    DipolePair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagator {
    Full,
    Horizontal,
}

impl Propagator {
    pub fn kind(self) -> PropagatorKind {
        match self {
            Propagator::Full => PropagatorKind::FullHeat,
            Propagator::Horizontal => PropagatorKind::HorizHeat,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    #[serde(default = "default_linear_data")]
    pub data: LinearData,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_propagator")]
    pub propagator: Propagator,
    #[serde(default = "default_components", with = "components")]
    pub components: Components,
    #[serde(default = "default_linear_pq")]
    pub norms: Vec<PqPair>,
    /// Defaults to 12 samples from 1 to the largest time the box resolves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<TimeRange>,
    #[serde(default = "default_linear_tolerance")]
    pub tolerance: f64,
}

fn default_linear_data() -> LinearData {
    LinearData::CurlGaussian
}

fn default_width() -> f64 {
    0.5
}

fn default_propagator() -> Propagator {
    Propagator::Full
}

fn default_linear_tolerance() -> f64 {
    0.1
}

fn default_linear_pq() -> Vec<PqPair> {
    vec![PqPair { p: 2.0, q: 2.0 }, PqPair { p: f64::INFINITY, q: f64::INFINITY }]
}

impl Default for LinearSection {
    fn default() -> Self {
        LinearSection {
            data: default_linear_data(),
            width: default_width(),
            propagator: default_propagator(),
            components: default_components(),
            norms: default_linear_pq(),
            t_range: None,
            tolerance: default_linear_tolerance(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqPair {
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
}

fn default_gap_exponents() -> Vec<PqPair> {
    vec![PqPair { p: 2.0, q: 2.0 }]
}

fn default_duhamel_tolerance() -> f64 {
    1e-3
}

fn default_gap_ratio() -> f64 {
    0.7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Fit window; defaults to the last decade of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Times at which the integral equation is checked; defaults to the final time.
    #[serde(default)]
    pub duhamel_at: Vec<f64>,
    #[serde(default = "default_duhamel_tolerance")]
    pub duhamel_tolerance: f64,
    /// Theorems whose profile gaps are measured.
    #[serde(default)]
    pub theorems: Vec<TheoremId>,
    #[serde(default = "default_gap_exponents")]
    pub gap_norms: Vec<PqPair>,
    /// Theorems whose gap must shrink by `gap_ratio` between t and 4t.
    #[serde(default)]
    pub gap_decrease: Vec<TheoremId>,
    #[serde(default = "default_gap_ratio")]
    pub gap_ratio: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            window: None,
            duhamel_at: Vec::new(),
            duhamel_tolerance: default_duhamel_tolerance(),
            theorems: Vec::new(),
            gap_norms: default_gap_exponents(),
            gap_decrease: Vec::new(),
            gap_ratio: default_gap_ratio(),
        }
    }
}

fn default_name() -> String {
    "campaign".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("anismhd-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub system: SystemKind,
    /// Overrides the seed of the initial-data recipe.
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub init: InitRecipe,
    pub solver: SolverSection,
    /// Defaults to the sup norms of the fields the system's decay rates describe.
    #[serde(default)]
    pub observers: Vec<ObserverConfig>,
    #[serde(default)]
    pub kernels: KernelsSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl Default for Campaign {
    fn default() -> Self {
        Campaign {
            name: default_name(),
            out: default_out(),
            system: SystemKind::A,
            seed: 0,
            grid: GridConfig { n: GridSize::Cube(32), l_h: 60.0, l_v: None },
            init: InitRecipe::curl_gaussian(0.05, 0),
            solver: SolverSection {
                dt: 0.2,
                t_end: 10.0,
                stride: 5,
                dealias: DEALIAS_TWO_THIRDS,
                integrator: Integrator::Ifrk4,
                nonlinear: true,
                checkpoints: false,
            },
            observers: Vec::new(),
            kernels: KernelsSection::default(),
            linear: LinearSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

/// Values given on the command line; each replaces its config key.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub box_size: Option<f64>,
    pub system: Option<SystemKind>,
    pub seed: Option<u64>,
    pub t_range: Option<TimeRange>,
    pub t_end: Option<f64>,
}

impl Campaign {
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Campaign::default(),
        };
        c.apply(ov);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
        if let Some(n) = ov.grid {
            self.grid.n = GridSize::Cube(n);
        }
        if let Some(l) = ov.box_size {
            self.grid.l_h = l;
            self.grid.l_v = None;
        }
        if let Some(s) = ov.system {
            self.system = s;
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(r) = ov.t_range {
            self.kernels.t_range = r;
            self.linear.t_range = Some(r);
        }
        if let Some(t) = ov.t_end {
            self.solver.t_end = t;
        }
        if let InitRecipe::CurlGaussian { seed, .. } = &mut self.init {
            *seed = self.seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.solver.solver_config().validate()?;
        for o in &self.observers {
            if o.p < 1.0 || o.q < 1.0 {
                return Err(CliError::Config(format!("observer exponents must be >= 1, got p = {}, q = {}", o.p, o.q)));
            }
        }
        if let Some([lo, hi]) = self.analysis.window {
            if !(lo > 0.0 && hi > lo) {
                return Err(CliError::Config(format!("analysis window [{lo}, {hi}] is empty")));
            }
        }
        for t in self.analysis.gap_decrease.iter().chain(&self.analysis.theorems) {
            if t.system() != self.system {
                return Err(CliError::Config(format!("{t} concerns system {}, campaign runs system {}", t.system(), self.system)));
            }
        }
        Ok(())
    }

    /// Configured observers, or the system's default sup-norm set.
    pub fn observer_specs(&self) -> Vec<ObserverSpec> {
        if !self.observers.is_empty() {
            return self.observers.iter().map(ObserverConfig::spec).collect();
        }
        let fields = match self.system {
            SystemKind::A => [
                (FieldId::Velocity, Components::Horizontal),
                (FieldId::Velocity, Components::Vertical),
                (FieldId::Magnetic, Components::All),
            ],
            SystemKind::B => [
                (FieldId::Magnetic, Components::Horizontal),
                (FieldId::Magnetic, Components::Vertical),
                (FieldId::Velocity, Components::All),
            ],
        };
        let mut out = Vec::new();
        for alpha in [DerivativeIndex::ZERO, DerivativeIndex::unit(0)] {
            for (f, c) in fields {
                for p in [1.0, 2.0, f64::INFINITY] {
                    out.push(ObserverSpec::new(f, c, p, p).with_alpha(alpha));
                }
            }
        }
        out
    }

    /// Fit window for decay rates.
    pub fn window(&self) -> (f64, f64) {
        match self.analysis.window {
            Some([lo, hi]) => (lo, hi),
            None => (self.solver.t_end / 10.0, self.solver.t_end),
        }
    }
}

pub fn parse_system(s: &str) -> std::result::Result<SystemKind, String> {
    s.parse().map_err(|e: anismhd::Error| e.to_string())
}

pub fn parse_range(s: &str) -> std::result::Result<TimeRange, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_range_parses_to_geometric_samples() {
        let r: TimeRange = "1:100:12".parse().unwrap();
        let s = r.samples();
        assert_eq!(s.len(), 12);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[11], 100.0);
        let ratio = s[1] / s[0];
        assert!(s.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-12));
        assert!("1:100".parse::<TimeRange>().is_err());
        assert!("5:1:4".parse::<TimeRange>().is_err());
    }

    #[test]
    fn overrides_replace_config_keys() {
        let text = r#"
            system = "A"
            seed = 3
            [grid]
            n = [16, 16, 24]
            box = 40.0
            [init]
            generator = "curl-gaussian"
            amplitude = 0.01
            [solver]
            dt = 0.1
            t_end = 2.0
            [[observers]]
            field = "u"
            components = "h"
            p = "inf"
            q = 2
        "#;
        let mut c: Campaign = toml::from_str(text).unwrap();
        assert_eq!(c.observers[0].p, f64::INFINITY);
        c.apply(&Overrides { grid: Some(20), system: Some(SystemKind::B), seed: Some(9), t_end: Some(5.0), ..Default::default() });
        assert_eq!(c.grid.n.dims(), [20, 20, 20]);
        assert_eq!(c.system, SystemKind::B);
        assert_eq!(c.solver.t_end, 5.0);
        assert!(matches!(c.init, InitRecipe::CurlGaussian { seed: 9, .. }));
    }

    #[test]
    fn campaign_round_trips_through_json_with_infinite_exponents() {
        let c = Campaign::default();
        let j = serde_json::to_string(&c).unwrap();
        assert!(j.contains("\"inf\""));
        let back: Campaign = serde_json::from_str(&j).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn default_observers_cover_three_fields_three_exponents_two_derivatives() {
        let c = Campaign::default();
        let s = c.observer_specs();
        assert_eq!(s.len(), 18);
        assert!(s.iter().any(|o| o.label() == "u3" && o.p.is_infinite()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: std::result::Result<Campaign, _> = toml::from_str("system = \"A\"\nbogus = 1\n");
        assert!(r.is_err());
    }
}
