//! Run configuration: defaults, flat `key=value` config files, command-line
//! overrides, and validation.
//!
//! Precedence, lowest to highest: built-in defaults, then the `--config`
//! file, then command-line flags, then the `CHTN_OUT` environment variable
//! (output directory only). Every parsed value is checked against the
//! compute preconditions before any work starts, so a bad configuration
//! always exits with code 2 instead of surfacing mid-run.

use std::path::PathBuf;

use serde::{Serialize, Serializer};

use chtn::constants::{diffusion_coefficient, PhysicalConstants};
use chtn::dynamics::SignOrder;
use chtn::network::{
    build_network, HorizontalBc, Mode, Network, NetworkConfig, ParityOffset,
};
use chtn::{Error, Result};

/// Steady-state computation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Evaluate the analytic steady state directly.
    ClosedForm,
    /// Relax a seeded random field under the explicit update rule.
    Relax,
    /// Extract the steady state from a dense null-space factorization.
    Kernel,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed-form",
            Route::Relax => "relax",
            Route::Kernel => "kernel",
        }
    }
}

impl Serialize for Route {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

fn parse_route(value: &str) -> Result<Route> {
    match value {
        "closed-form" => Ok(Route::ClosedForm),
        "relax" => Ok(Route::Relax),
        "kernel" => Ok(Route::Kernel),
        other => Err(Error::Config(format!(
            "route must be one of closed-form, relax, kernel; got {other:?}"
        ))),
    }
}

fn parse_mode(value: &str) -> Result<Mode> {
    match value {
        "rectangular" => Ok(Mode::Rectangular),
        "tree" => Ok(Mode::Tree),
        other => Err(Error::Config(format!(
            "mode must be rectangular or tree; got {other:?}"
        ))),
    }
}

fn parse_horizontal_bc(value: &str) -> Result<HorizontalBc> {
    match value {
        "periodic" => Ok(HorizontalBc::Periodic),
        "dirichlet" => Ok(HorizontalBc::Dirichlet),
        other => Err(Error::Config(format!(
            "horizontal_bc must be periodic or dirichlet; got {other:?}"
        ))),
    }
}

fn parse_radial_bc(value: &str) -> Result<chtn::network::RadialBc> {
    match value {
        "dirichlet_ghost" => Ok(chtn::network::RadialBc::DirichletGhost),
        "truncated" => Ok(chtn::network::RadialBc::Truncated),
        other => Err(Error::Config(format!(
            "radial_bc must be dirichlet_ghost or truncated; got {other:?}"
        ))),
    }
}

fn parse_parity_offset(value: &str) -> Result<ParityOffset> {
    match value {
        "fixed_zero" => Ok(ParityOffset::FixedZero),
        "per_layer_alternating" => Ok(ParityOffset::PerLayerAlternating),
        other => Err(Error::Config(format!(
            "parity_offset must be fixed_zero or per_layer_alternating; got {other:?}"
        ))),
    }
}

fn parse_sign_order(value: &str) -> Result<SignOrder> {
    match value {
        "ud_up" => Ok(SignOrder::UdUp),
        "ud_down" => Ok(SignOrder::UdDown),
        other => Err(Error::Config(format!(
            "sign_order must be ud_up or ud_down; got {other:?}"
        ))),
    }
}

/// `"auto"` or a positive integer.
fn parse_substeps(value: &str) -> Result<Option<u32>> {
    if value == "auto" {
        return Ok(None);
    }
    let n: u32 = value
        .parse()
        .map_err(|e| Error::Config(format!("substeps must be auto or an integer: {e}")))?;
    Ok(Some(n))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value {value:?} for {key}: {e}")))
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub route: Route,
    /// Relative-residual convergence target for the relax route.
    pub tol: f64,
    pub max_ticks: u64,
    /// Explicit substeps per tick; `None` selects the Gershgorin bound.
    pub substeps: Option<u32>,
    pub seed: u64,
    pub sign_order: SignOrder,
    /// Boundary amplitude of the analytic steady state.
    pub base: f64,
    /// Snapshot interval (ticks) for the evolve command.
    pub snapshot_every: u64,
    /// Override for the update coefficient; `None` derives it from the
    /// physical constants.
    pub kappa: Option<f64>,
    pub constants: PhysicalConstants<f64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: NetworkConfig::rectangular(8, 4),
            route: Route::ClosedForm,
            tol: 1e-10,
            max_ticks: 50_000,
            substeps: None,
            seed: 42,
            sign_order: SignOrder::UdUp,
            base: 1.0,
            snapshot_every: 100,
            kappa: None,
            constants: PhysicalConstants::natural(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Applies one `key=value` assignment (config-file line or flag).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "width" => self.network.width = parse_num(key, value)?,
            "depth" => self.network.depth = parse_num(key, value)?,
            "mode" => self.network.mode = parse_mode(value)?,
            "horizontal_bc" => self.network.horizontal_bc = parse_horizontal_bc(value)?,
            "radial_bc" => self.network.radial_bc = parse_radial_bc(value)?,
            "parity_offset" => self.network.parity_offset = parse_parity_offset(value)?,
            "epsilon_l" => self.network.lattice_constant = parse_num(key, value)?,
            "route" => self.route = parse_route(value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "max_ticks" => self.max_ticks = parse_num(key, value)?,
            "substeps" => self.substeps = parse_substeps(value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "sign_order" => self.sign_order = parse_sign_order(value)?,
            "base" => self.base = parse_num(key, value)?,
            "snapshot_every" => self.snapshot_every = parse_num(key, value)?,
            "kappa" => self.kappa = Some(parse_num(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "c" => self.constants.c = parse_num(key, value)?,
            "hbar" => self.constants.hbar = parse_num(key, value)?,
            "ell_p" => self.constants.ell_p = parse_num(key, value)?,
            "r_ads" => self.constants.r_ads = parse_num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown configuration key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Checks every compute precondition; runs before any command starts.
    pub fn validate(&self) -> Result<()> {
        build_network(self.network.clone())?;
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!(
                "tol must be strictly positive and finite, got {}",
                self.tol
            )));
        }
        if !(self.base > 0.0) || !self.base.is_finite() {
            return Err(Error::Config(format!(
                "base must be strictly positive and finite, got {}",
                self.base
            )));
        }
        if self.max_ticks == 0 {
            return Err(Error::Config("max_ticks must be at least 1".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        if let Some(s) = self.substeps {
            if s == 0 {
                return Err(Error::Config(
                    "substeps must be at least 1 (or auto)".into(),
                ));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::Config(format!(
                    "kappa must be strictly positive and finite, got {k}"
                )));
            }
        }
        for (name, v) in [
            ("c", self.constants.c),
            ("hbar", self.constants.hbar),
            ("ell_p", self.constants.ell_p),
            ("r_ads", self.constants.r_ads),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Builds the (validated) network.
    pub fn build_network(&self) -> Result<Network> {
        build_network(self.network.clone())
    }

    /// The update coefficient: the explicit override if given, otherwise
    /// derived from the physical constants.
    pub fn kappa_value(&self) -> f64 {
        self.kappa
            .unwrap_or_else(|| diffusion_coefficient(&self.constants))
    }
}

/// Splits a flat `key=value` config file into assignments. `#` starts a
/// comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "config line {}: expected key=value, got {raw:?}",
                idx + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Command-line overrides; every field is optional and falls back to the
/// config file, then to the built-in defaults.
#[derive(Debug, Clone, clap::Args)]
pub struct Overrides {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (the CHTN_OUT environment variable wins over this).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Sites per layer (even, at least 4).
    #[arg(long, global = true)]
    pub width: Option<usize>,
    /// Number of layers (at least 3).
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Lattice adjacency: rectangular or tree.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Horizontal boundary: periodic or dirichlet.
    #[arg(long, global = true)]
    pub horizontal_bc: Option<String>,
    /// Radial boundary: dirichlet_ghost or truncated.
    #[arg(long, global = true)]
    pub radial_bc: Option<String>,
    /// Staggering offset: fixed_zero or per_layer_alternating.
    #[arg(long, global = true)]
    pub parity_offset: Option<String>,
    /// Steady-state route: closed-form, relax, or kernel.
    #[arg(long, global = true)]
    pub route: Option<String>,
    /// Convergence tolerance on the relative residual.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Tick budget for relaxation.
    #[arg(long, global = true)]
    pub max_ticks: Option<u64>,
    /// Updates per tick: auto or a positive integer.
    #[arg(long, global = true)]
    pub substeps: Option<String>,
    /// Random-field seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Zigzag orientation: ud_up or ud_down.
    #[arg(long, global = true)]
    pub sign_order: Option<String>,
    /// Lattice constant (length per horizontal step at the deepest layer).
    #[arg(long, global = true)]
    pub epsilon_l: Option<f64>,
    /// Boundary amplitude of the analytic steady state.
    #[arg(long, global = true)]
    pub base: Option<f64>,
    /// Override the derived update coefficient.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Snapshot interval in ticks for the evolve command.
    #[arg(long, global = true)]
    pub snapshot_every: Option<u64>,
}

impl Overrides {
    /// Resolves defaults, config file, flags, and environment into a
    /// validated [`RunConfig`].
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (key, value) in parse_config_text(&text)? {
                cfg.apply(&key, &value)?;
            }
        }
        if let Some(v) = self.width {
            cfg.network.width = v;
        }
        if let Some(v) = self.depth {
            cfg.network.depth = v;
        }
        if let Some(v) = &self.mode {
            cfg.network.mode = parse_mode(v)?;
        }
        if let Some(v) = &self.horizontal_bc {
            cfg.network.horizontal_bc = parse_horizontal_bc(v)?;
        }
        if let Some(v) = &self.radial_bc {
            cfg.network.radial_bc = parse_radial_bc(v)?;
        }
        if let Some(v) = &self.parity_offset {
            cfg.network.parity_offset = parse_parity_offset(v)?;
        }
        if let Some(v) = &self.route {
            cfg.route = parse_route(v)?;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_ticks {
            cfg.max_ticks = v;
        }
        if let Some(v) = &self.substeps {
            cfg.substeps = parse_substeps(v)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.sign_order {
            cfg.sign_order = parse_sign_order(v)?;
        }
        if let Some(v) = self.epsilon_l {
            cfg.network.lattice_constant = v;
        }
        if let Some(v) = self.base {
            cfg.base = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = Some(v);
        }
        if let Some(v) = self.snapshot_every {
            cfg.snapshot_every = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(dir) = std::env::var_os("CHTN_OUT") {
            cfg.out = PathBuf::from(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
