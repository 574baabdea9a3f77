use std::path::{Path, PathBuf};

use degen_eigen::grid::{build_domain, constant_fn, GridDomain, Shape, SolveOptions, Stepping};
use degen_eigen::OperatorSpec;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckOperator,
    Barriers,
    SolveRadial,
    SolveGrid,
    EigenRadial,
    EigenGrid,
    SweepLambda,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckOperator => "check-operator",
            Command::Barriers => "barriers",
            Command::SolveRadial => "solve-radial",
            Command::SolveGrid => "solve-grid",
            Command::EigenRadial => "eigen-radial",
            Command::EigenGrid => "eigen-grid",
            Command::SweepLambda => "sweep-lambda",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub operator: OperatorSpec,
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub lambda: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub lambda_range: Option<LambdaRange>,
    pub probes: Option<Vec<[f64; 2]>>,
    pub radii: Option<Vec<f64>>,
    /// Field CSV for `verify`.
    pub field: Option<PathBuf>,
    /// Random samples per condition in `check-operator`.
    pub trials: Option<usize>,
    /// Relative width of the eigenvalue bracket in `eigen-grid`.
    pub bracket_tol: Option<f64>,
    /// Sign bounds on the source term for `barriers`.
    pub f_plus: Option<f64>,
    pub f_minus: Option<f64>,
    /// ρ for case-II thresholds; required on mask domains.
    pub rho: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: Option<Shape>,
    pub mask_file: Option<PathBuf>,
    /// Constant boundary value δ.
    #[serde(default = "one")]
    pub boundary: f64,
    /// Constant weight a.
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub h: f64,
    /// Radial step count N.
    pub steps: usize,
    pub tol: Option<f64>,
    pub m_cap: Option<f64>,
    pub max_iter: Option<usize>,
    pub stepping: Stepping,
    pub directions: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { h: 1.0 / 32.0, steps: 4096, tol: None, m_cap: None, max_iter: None, stepping: Stepping::Auto, directions: 16 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

fn one() -> f64 {
    1.0
}

/// A configuration that has passed every check that does not need a solve.
pub struct Prepared {
    pub command: Command,
    pub config: RunConfig,
    pub domain: Option<GridDomain>,
    /// Stored field for `verify`, in the domain's interior order.
    pub field: Option<Vec<f64>>,
}

pub fn load(path: &Path, command: Option<Command>) -> Result<Prepared, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| format!("invalid config: {e}"))?;
    let base = path.parent().unwrap_or(Path::new("."));
    prepare(config, command, base)
}

pub fn prepare(config: RunConfig, command: Option<Command>, base: &Path) -> Result<Prepared, String> {
    let command = match (command, config.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(format!("command {} conflicts with config command {}", a.name(), b.name()))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err("no command given".into()),
    };
    let s = &config.solver;
    if !(s.h > 0.0) || s.steps < 64 || s.tol.is_some_and(|t| !(t > 0.0)) {
        return Err("solver needs h > 0, steps ≥ 64 and tol > 0".into());
    }
    let needs_domain = matches!(
        command,
        Command::Barriers | Command::SolveGrid | Command::EigenGrid | Command::SweepLambda | Command::Verify
    );
    let domain = match (&config.domain, needs_domain) {
        (Some(d), _) => Some(build(d, s, base)?),
        (None, true) => return Err(format!("{} needs a domain", command.name())),
        (None, false) => None,
    };
    let lam_required = matches!(command, Command::SolveRadial | Command::SolveGrid | Command::Verify);
    if lam_required && config.lambda.is_none() {
        return Err(format!("{} needs lambda", command.name()));
    }
    if config.lambda.is_some_and(|l| !(l >= 0.0)) {
        return Err("lambda must be nonnegative".into());
    }
    if command == Command::SweepLambda {
        let lams = lambda_grid(&config)?;
        if lams.len() < 2 || lams.windows(2).any(|w| !(w[1] > w[0])) || lams[0] < 0.0 {
            return Err("sweep needs at least two increasing nonnegative lambdas".into());
        }
    }
    if matches!(command, Command::SolveRadial | Command::EigenRadial) {
        if !config.operator.symmetric() {
            return Err(format!("{} needs a rotation-invariant operator", command.name()));
        }
        radius(&config)?;
    }
    if let Some(r) = &config.radii {
        if r.iter().any(|x| !(*x > 0.0)) {
            return Err("radii must be positive".into());
        }
    }
    let field = if command == Command::Verify {
        let path = config.field.as_ref().ok_or("verify needs a field CSV")?;
        let text = std::fs::read_to_string(base.join(path)).map_err(|e| format!("cannot read field: {e}"))?;
        Some(parse_field(&text, domain.as_ref().unwrap())?)
    } else {
        None
    };
    Ok(Prepared { command, config, domain, field })
}

fn build(d: &DomainConfig, s: &SolverConfig, base: &Path) -> Result<GridDomain, String> {
    let shape = match (&d.shape, &d.mask_file) {
        (Some(shape), None) => shape.clone(),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(base.join(p)).map_err(|e| format!("cannot read mask: {e}"))?;
            Shape::load_mask(&text).map_err(|e| e.to_string())?
        }
        _ => return Err("domain needs exactly one of shape and mask_file".into()),
    };
    if !(d.weight > 0.0) {
        return Err("weight must be positive".into());
    }
    build_domain(&shape, s.h, constant_fn(d.boundary), constant_fn(d.weight), s.directions).map_err(|e| e.to_string())
}

/// Ball radius for the radial commands: the disk radius when a disk domain is given, else 1.
pub fn radius(config: &RunConfig) -> Result<f64, String> {
    match config.domain.as_ref().and_then(|d| d.shape.clone()) {
        Some(Shape::Disk { radius }) => Ok(radius),
        Some(_) => Err("radial commands need a disk domain".into()),
        None => Ok(1.0),
    }
}

pub fn delta(config: &RunConfig) -> f64 {
    config.domain.as_ref().map_or(1.0, |d| d.boundary)
}

pub fn weight(config: &RunConfig) -> f64 {
    config.domain.as_ref().map_or(1.0, |d| d.weight)
}

pub fn lambda_grid(config: &RunConfig) -> Result<Vec<f64>, String> {
    match (&config.lambdas, &config.lambda_range) {
        (Some(l), None) => Ok(l.clone()),
        (None, Some(r)) => {
            if r.count < 2 {
                return Err("lambda_range needs count ≥ 2".into());
            }
            let step = (r.stop - r.start) / (r.count - 1) as f64;
            Ok((0..r.count).map(|i| r.start + step * i as f64).collect())
        }
        _ => Err("give exactly one of lambdas and lambda_range".into()),
    }
}

pub fn solve_options(s: &SolverConfig) -> SolveOptions {
    let mut o = SolveOptions { stepping: s.stepping, m_cap: s.m_cap, max_iter: s.max_iter, ..SolveOptions::default() };
    if let Some(t) = s.tol {
        o.tol = t;
    }
    o
}

/// Reads CSV rows (i, j, x, y, u) into interior node order.
fn parse_field(text: &str, dom: &GridDomain) -> Result<Vec<f64>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("i,j,x,y,u") {
        return Err("field CSV must start with the header i,j,x,y,u".into());
    }
    let mut values = std::collections::HashMap::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(format!("field row {} has {} columns", n + 2, cols.len()));
        }
        let bad = |_| format!("field row {} is not numeric", n + 2);
        let i: usize = cols[0].parse().map_err(|_| format!("field row {} has a bad index", n + 2))?;
        let j: usize = cols[1].parse().map_err(|_| format!("field row {} has a bad index", n + 2))?;
        let u: f64 = cols[4].parse().map_err(bad)?;
        values.insert((i, j), u);
    }
    dom.interior
        .iter()
        .map(|&l| {
            let ij = dom.lattice_ij(l);
            values.get(&ij).copied().ok_or_else(|| format!("field has no value at node {ij:?}"))
        })
        .collect()
}
