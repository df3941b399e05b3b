//! Run configuration: a flat `key = value` text format with dotted section
//! prefixes, `#` comments, and scenario presets shipped as files.
//!
//! ```text
//! # block of saturated solution in pure solvent
//! mesh.h_exp   = 7
//! time.tau     = 1e-4
//! time.steps   = 600
//! initial.kind = block
//! ```
//!
//! Floats accept the power shorthand `10^x`, e.g. `time.tau = 10^-6.5`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::diagnostics::{barenblatt, DEFAULT_THETA};
use crate::error::{Error, Result};
use crate::linsolve::{CgSettings, SolverKind};
use crate::mesh::{MeshGrid, Rect};
use crate::model::{ModelParams, Transform, AVOGADRO, BOLTZMANN, ROOM_TEMPERATURE};
use crate::stepper::{CoefficientRule, MassKind, NonconvergencePolicy, PicardSettings};

pub const PRESET_NAMES: [&str; 4] = ["experiment1", "experiment2", "heat-reference", "barenblatt"];

pub fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "experiment1" => Some(include_str!("../../presets/experiment1.cfg")),
        "experiment2" => Some(include_str!("../../presets/experiment2.cfg")),
        "heat-reference" => Some(include_str!("../../presets/heat-reference.cfg")),
        "barenblatt" => Some(include_str!("../../presets/barenblatt.cfg")),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    /// Cohesive model, solved as a porous medium equation in `chat`.
    Vdw,
    /// Non-interacting reference: plain diffusion with diffusivity `d`.
    Heat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Consistent-mass L2 projection.
    L2,
    /// Lumped-mass projection; bounded by the data.
    Lumped,
}

/// Which variable an initial-data selector prescribes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    C,
    Chat,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialData {
    /// `c = 1` on `[0.25, 0.75] x [0.5, 1.5]`, else 0.
    Block,
    /// `chat = 1 - block`.
    Complement,
    /// `c = 1.5` on the core `[0.4, 0.6] x [0.75, 1.0]`, 1 on the rest of
    /// `[0.25, 0.75] x [0.5, 1.5]`, else 0.
    Ring,
    /// Uniform `c`.
    Constant(f64),
    /// Barenblatt profile for `chat` at time `t0` around `center`.
    Barenblatt { profile: f64, t0: f64, center: [f64; 2] },
}

const BLOCK: Rect = Rect {
    min: [0.25, 0.5],
    max: [0.75, 1.5],
};
const CORE: Rect = Rect {
    min: [0.4, 0.75],
    max: [0.6, 1.0],
};

impl InitialData {
    pub fn variable(&self) -> Variable {
        match self {
            InitialData::Block | InitialData::Ring | InitialData::Constant(_) => Variable::C,
            InitialData::Complement | InitialData::Barenblatt { .. } => Variable::Chat,
        }
    }

    /// Value at `p`; `kappa` only matters for the Barenblatt profile.
    pub fn value(&self, p: [f64; 2], kappa: f64) -> f64 {
        match *self {
            InitialData::Block => f64::from(u8::from(BLOCK.contains(p))),
            InitialData::Complement => 1.0 - f64::from(u8::from(BLOCK.contains(p))),
            InitialData::Ring => {
                if CORE.contains(p) {
                    1.5
                } else if BLOCK.contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
            InitialData::Constant(v) => v,
            InitialData::Barenblatt { profile, t0, center } => {
                barenblatt([p[0] - center[0], p[1] - center[1]], t0, profile, kappa).unwrap_or(0.0)
            }
        }
    }

    /// Jump locations of piecewise-constant data, as (x lines, y lines).
    fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            InitialData::Block | InitialData::Complement => (vec![0.25, 0.75], vec![0.5, 1.5]),
            InitialData::Ring => (vec![0.25, 0.4, 0.6, 0.75], vec![0.5, 0.75, 1.0, 1.5]),
            _ => (vec![], vec![]),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            InitialData::Block => "block",
            InitialData::Complement => "complement",
            InitialData::Ring => "ring",
            InitialData::Constant(_) => "constant",
            InitialData::Barenblatt { .. } => "barenblatt",
        }
    }
}

/// Evaluates an initial-data selector at a point (c-valued for `block`,
/// `ring`, `constant`; chat-valued for `complement`, `barenblatt`).
pub fn initial_data(selector: &InitialData, p: [f64; 2]) -> f64 {
    selector.value(p, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshSpec {
    Counts { nx: usize, ny: usize },
    HExponent(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub domain: Rect,
    pub mesh: MeshSpec,
    pub tau: f64,
    pub n_steps: usize,
    pub picard: PicardSettings,
    pub law: LawKind,
    pub params: ModelParams,
    pub transform: Transform,
    /// Defaults to the transform's pairing (1 simplified, 2 general).
    pub kappa: Option<f64>,
    pub delta: f64,
    pub mass: MassKind,
    pub coefficient_rule: CoefficientRule,
    /// Dirichlet value of `chat` on the whole boundary.
    pub boundary_chat: f64,
    pub initial: InitialData,
    pub projection: Projection,
    pub velocity: [f64; 2],
    pub solver: SolverKind,
    pub cg: CgSettings,
    pub snapshot_every: usize,
    pub write_vtk: bool,
    pub output_dir: PathBuf,
    pub thetas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            domain: Rect::new([0.0, 0.0], [1.0, 2.0]),
            mesh: MeshSpec::HExponent(6),
            tau: 1e-4,
            n_steps: 600,
            picard: PicardSettings::default(),
            law: LawKind::Vdw,
            params: ModelParams::unit_saturation(),
            transform: Transform::Simplified,
            kappa: None,
            delta: 0.0,
            mass: MassKind::Lumped,
            coefficient_rule: CoefficientRule::Gauss,
            boundary_chat: 1.0,
            initial: InitialData::Block,
            projection: Projection::Lumped,
            velocity: [0.0, 0.0],
            solver: SolverKind::Auto,
            cg: CgSettings::default(),
            snapshot_every: 200,
            write_vtk: true,
            output_dir: PathBuf::from("out"),
            thetas: vec![DEFAULT_THETA, 1e-2, 1e-4],
        }
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let src = preset_source(name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown preset '{name}' (available: {})",
                PRESET_NAMES.join(", ")
            ))
        })?;
        parse_config_str(src, &format!("preset:{name}"))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or_else(|| self.transform.kappa())
    }

    /// Primary support threshold (first entry of `thetas`).
    pub fn theta(&self) -> f64 {
        self.thetas.first().copied().unwrap_or(DEFAULT_THETA)
    }

    pub fn build_mesh(&self) -> Result<Arc<MeshGrid>> {
        let mesh = match self.mesh {
            MeshSpec::Counts { nx, ny } => MeshGrid::new(self.domain, nx, ny)?,
            MeshSpec::HExponent(k) => MeshGrid::with_h_exponent(self.domain, k)?,
        };
        Ok(Arc::new(mesh))
    }

    /// Checks every setting; returns non-fatal warnings (currently only
    /// initial-data jumps that do not fall on grid lines).
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("time step must be positive, got {}", self.tau));
        }
        if !(self.picard.tol > 0.0) {
            return bad(format!("picard tolerance must be positive, got {}", self.picard.tol));
        }
        if self.picard.iter_max == 0 {
            return bad("picard iter_max must be at least 1".into());
        }
        if !(self.kappa() > 0.0) {
            return bad(format!("kappa must be positive, got {}", self.kappa()));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta must be nonnegative, got {}", self.delta));
        }
        if self.thetas.iter().any(|t| !(*t > 0.0)) {
            return bad("support thresholds must be positive".into());
        }
        if !(self.cg.rtol > 0.0) || !(self.cg.atol >= 0.0) {
            return bad("linear solver tolerances must be positive".into());
        }
        if let InitialData::Barenblatt { profile, t0, center } = self.initial {
            if !(profile > 0.0) || !(t0 > 0.0) {
                return bad("barenblatt needs positive profile constant and t0".into());
            }
            if !self.domain.contains(center) {
                return bad("barenblatt center lies outside the domain".into());
            }
        }
        let mesh = self.build_mesh()?;

        let mut warnings = Vec::new();
        let (xs, ys) = self.initial.breakpoints();
        let off_x: Vec<f64> = xs.into_iter().filter(|&x| !mesh.on_x_grid_line(x)).collect();
        let off_y: Vec<f64> = ys.into_iter().filter(|&y| !mesh.on_y_grid_line(y)).collect();
        if !off_x.is_empty() || !off_y.is_empty() {
            warnings.push(format!(
                "initial data '{}' jumps at x={off_x:?}, y={off_y:?}, off the {}x{} grid lines; \
                 its projection is only approximate",
                self.initial.name(),
                mesh.nx(),
                mesh.ny()
            ));
        }
        Ok(warnings)
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

struct Entry {
    value: String,
    line: usize,
}

struct Reader<'a> {
    origin: &'a str,
    entries: HashMap<String, Entry>,
}

impl Reader<'_> {
    fn err(&self, key: &str, line: usize, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.origin.to_string(),
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parse<T>(&mut self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|m| self.err(key, e.line, m)),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        self.parse(key, parse_float)
    }

    fn uint(&mut self, key: &str) -> Result<Option<usize>> {
        self.parse(key, |s| {
            s.parse::<usize>()
                .map_err(|_| format!("expected a nonnegative integer, got '{s}'"))
        })
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|e| e.value)
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    let parsed = if let Some(exp) = s.strip_prefix("10^") {
        exp.trim().parse::<f64>().map(|e| 10f64.powf(e))
    } else {
        s.parse::<f64>()
    };
    match parsed {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a number, got '{s}'")),
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got '{s}'")),
    }
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let mut entries = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                path: origin.into(),
                line,
                key: content.into(),
                message: "expected 'key = value'".into(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config {
                path: origin.into(),
                line,
                key,
                message: "empty key or value".into(),
            });
        }
        if let Some(prev) = entries.get(&key) {
            let Entry { line: first, .. } = prev;
            return Err(Error::Config {
                path: origin.into(),
                line,
                key,
                message: format!("duplicate key (first set on line {first})"),
            });
        }
        entries.insert(key, Entry { value, line });
    }

    let mut r = Reader { origin, entries };
    let mut cfg = RunConfig::default();

    if let Some(name) = r.string("name") {
        cfg.name = name;
    }

    let dmin = [
        r.float("domain.x_min")?.unwrap_or(cfg.domain.min[0]),
        r.float("domain.y_min")?.unwrap_or(cfg.domain.min[1]),
    ];
    let dmax = [
        r.float("domain.x_max")?.unwrap_or(cfg.domain.max[0]),
        r.float("domain.y_max")?.unwrap_or(cfg.domain.max[1]),
    ];
    cfg.domain = Rect::new(dmin, dmax);

    let h_line = r.line_of("mesh.h_exp");
    let h_exp = r.uint("mesh.h_exp")?;
    let nx = r.uint("mesh.nx")?;
    let ny = r.uint("mesh.ny")?;
    cfg.mesh = match (h_exp, nx, ny) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(r.err(
                "mesh.h_exp",
                h_line,
                "give either mesh.h_exp or mesh.nx/mesh.ny, not both",
            ));
        }
        (Some(k), None, None) => MeshSpec::HExponent(k as u32),
        (None, Some(nx), Some(ny)) => MeshSpec::Counts { nx, ny },
        (None, None, None) => cfg.mesh,
        (None, _, _) => {
            return Err(r.err("mesh.nx", 0, "mesh.nx and mesh.ny must be given together"));
        }
    };

    if let Some(v) = r.float("time.tau")? {
        cfg.tau = v;
    }
    if let Some(v) = r.uint("time.steps")? {
        cfg.n_steps = v;
    }

    if let Some(v) = r.float("picard.tol")? {
        cfg.picard.tol = v;
    }
    if let Some(v) = r.uint("picard.iter_max")? {
        cfg.picard.iter_max = v;
    }
    if let Some(v) = r.parse("picard.policy", |s| match s {
        "accept" => Ok(NonconvergencePolicy::Accept),
        "abort" => Ok(NonconvergencePolicy::Abort),
        _ => Err(format!("expected accept or abort, got '{s}'")),
    })? {
        cfg.picard.policy = v;
    }

    if let Some(v) = r.parse("model.law", |s| match s {
        "vdw" => Ok(LawKind::Vdw),
        "heat" => Ok(LawKind::Heat),
        _ => Err(format!("expected vdw or heat, got '{s}'")),
    })? {
        cfg.law = v;
    }
    if let Some(v) = r.parse("model.transform", |s| s.parse::<Transform>())? {
        cfg.transform = v;
    }
    let a_line = r.line_of("model.a");
    let d = r.float("model.d")?.unwrap_or(1.0);
    let temperature = r.float("model.temperature")?.unwrap_or(ROOM_TEMPERATURE);
    let k_b = r.float("model.k_b")?.unwrap_or(BOLTZMANN);
    let n_a = r.float("model.n_a")?.unwrap_or(AVOGADRO);
    let a = r.float("model.a")?;
    let c_star = r.float("model.c_star")?;
    let params = match (a, c_star) {
        (Some(_), Some(_)) => {
            return Err(r.err("model.a", a_line, "give either model.a or model.c_star, not both"));
        }
        (Some(a), None) => ModelParams::new(d, a, temperature, k_b, n_a),
        (None, cs) => ModelParams::from_saturation(d, cs.unwrap_or(1.0), temperature, k_b, n_a),
    };
    cfg.params = params.map_err(|e| r.err("model", 0, e.to_string()))?;

    cfg.kappa = r.float("scheme.kappa")?;
    if let Some(v) = r.float("scheme.delta")? {
        cfg.delta = v;
    }
    if let Some(v) = r.parse("scheme.mass", |s| s.parse::<MassKind>())? {
        cfg.mass = v;
    }
    if let Some(v) = r.parse("scheme.coefficient", |s| s.parse::<CoefficientRule>())? {
        cfg.coefficient_rule = v;
    }
    if let Some(v) = r.parse("scheme.projection", |s| match s {
        "l2" => Ok(Projection::L2),
        "lumped" => Ok(Projection::Lumped),
        _ => Err(format!("expected l2 or lumped, got '{s}'")),
    })? {
        cfg.projection = v;
    }

    if let Some(v) = r.float("boundary.chat")? {
        cfg.boundary_chat = v;
    }

    let kind_line = r.line_of("initial.kind");
    let kind = r.string("initial.kind");
    let value = r.float("initial.value")?;
    let profile = r.float("initial.profile")?;
    let t0 = r.float("initial.t0")?;
    let cx = r.float("initial.center_x")?;
    let cy = r.float("initial.center_y")?;
    if let Some(kind) = kind {
        cfg.initial = match kind.as_str() {
            "block" => InitialData::Block,
            "complement" => InitialData::Complement,
            "ring" => InitialData::Ring,
            "constant" => InitialData::Constant(value.unwrap_or(0.0)),
            "barenblatt" => InitialData::Barenblatt {
                profile: profile.unwrap_or(0.5),
                t0: t0.unwrap_or(1e-3),
                center: [
                    cx.unwrap_or(0.5 * (cfg.domain.min[0] + cfg.domain.max[0])),
                    cy.unwrap_or(0.5 * (cfg.domain.min[1] + cfg.domain.max[1])),
                ],
            },
            other => {
                return Err(r.err(
                    "initial.kind",
                    kind_line,
                    format!(
                        "unknown initial data '{other}' (expected block, complement, ring, constant or barenblatt)"
                    ),
                ))
            }
        };
    }

    cfg.velocity = [
        r.float("velocity.x")?.unwrap_or(0.0),
        r.float("velocity.y")?.unwrap_or(0.0),
    ];

    if let Some(v) = r.parse("solver.kind", |s| s.parse::<SolverKind>())? {
        cfg.solver = v;
    }
    if let Some(v) = r.float("solver.rtol")? {
        cfg.cg.rtol = v;
    }
    if let Some(v) = r.float("solver.atol")? {
        cfg.cg.atol = v;
    }
    if let Some(v) = r.uint("solver.max_iter")? {
        cfg.cg.max_iter = Some(v);
    }

    if let Some(v) = r.uint("output.snapshot_every")? {
        cfg.snapshot_every = v;
    }
    if let Some(v) = r.parse("output.vtk", parse_bool)? {
        cfg.write_vtk = v;
    }
    if let Some(v) = r.string("output.dir") {
        cfg.output_dir = PathBuf::from(v);
    }
    if let Some(v) = r.parse("output.thetas", |s| {
        s.split(',')
            .map(|t| parse_float(t.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()
    })? {
        cfg.thetas = v;
    }

    if let Some((key, entry)) = r.entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(r.err(key, entry.line, "unknown key"));
    }

    cfg.validate().map_err(|e| Error::Config {
        path: origin.into(),
        line: 0,
        key: "validation".into(),
        message: e.to_string(),
    })?;
    Ok(cfg)
}
