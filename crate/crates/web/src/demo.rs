//! Plain Rust side of the browser demo, testable natively.

use vdw_pme::cli::config::{InitialData, LawKind, MeshSpec, RunConfig};
use vdw_pme::diagnostics::{barenblatt, DiagnosticsRecord};
use vdw_pme::error::{Error, Result};
use vdw_pme::model::{phi, ModelParams, AVOGADRO, BOLTZMANN, ROOM_TEMPERATURE};
use vdw_pme::stepper::Simulation;

pub fn initial_by_name(name: &str) -> Result<InitialData> {
    match name {
        "block" => Ok(InitialData::Block),
        "ring" => Ok(InitialData::Ring),
        _ => Err(Error::InvalidArgument(format!("unknown initial data '{name}'"))),
    }
}

fn config(law: LawKind, initial: InitialData, h_exp: u32, tau: f64) -> RunConfig {
    RunConfig {
        name: "demo".into(),
        mesh: MeshSpec::HExponent(h_exp),
        tau,
        n_steps: 1,
        law,
        initial,
        ..RunConfig::default()
    }
}

/// The cohesive model and the plain heat equation from the same data.
pub struct Comparison {
    vdw: Simulation,
    heat: Simulation,
    last: [DiagnosticsRecord; 2],
}

impl Comparison {
    pub fn new(initial: &str, h_exp: u32, tau: f64) -> Result<Self> {
        if !(2..=7).contains(&h_exp) {
            return Err(Error::InvalidArgument(format!("mesh exponent {h_exp} outside 2..=7")));
        }
        let initial = initial_by_name(initial)?;
        let vdw = Simulation::new(&config(LawKind::Vdw, initial, h_exp, tau))?;
        let heat = Simulation::new(&config(LawKind::Heat, initial, h_exp, tau))?;
        let last = [vdw.initial_record(), heat.initial_record()];
        Ok(Self { vdw, heat, last })
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.last = [self.vdw.step()?, self.heat.step()?];
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        let m = self.vdw.chat().mesh();
        (m.nx() + 1, m.ny() + 1)
    }

    pub fn step_index(&self) -> usize {
        self.vdw.step_index()
    }

    pub fn time(&self) -> f64 {
        self.vdw.time()
    }

    pub fn c_vdw(&self) -> Vec<f64> {
        self.vdw.c().into_values()
    }

    pub fn c_heat(&self) -> Vec<f64> {
        self.heat.c().into_values()
    }

    /// `[mass, support, max c]` for each model, then the Picard count of
    /// the last cohesive step.
    pub fn stats(&self) -> Vec<f64> {
        let [a, b] = &self.last;
        vec![
            a.mass,
            b.mass,
            a.support_area,
            b.support_area,
            a.c_max,
            b.c_max,
            a.picard_iterations as f64,
        ]
    }
}

/// Samples `c`, `D(c)` and `Phi(c)` on `[0, c_max]`, interleaved per point.
pub fn curves(c_star: f64, c_max: f64, n: usize) -> Result<Vec<f64>> {
    let p = ModelParams::from_saturation(1.0, c_star, ROOM_TEMPERATURE, BOLTZMANN, AVOGADRO)?;
    if c_max.is_nan() || c_max <= 0.0 || n < 2 {
        return Err(Error::InvalidArgument("need c_max > 0 and at least two samples".into()));
    }
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let c = c_max * i as f64 / (n - 1) as f64;
        out.extend([c, p.d * (1.0 - p.gamma() * c), phi(c, &p)]);
    }
    Ok(out)
}

/// Runs the Barenblatt preset on mesh `2^-h_exp` and returns the final
/// profile along the horizontal line through the source as triples
/// `x, computed, exact`, followed by the mass-weighted relative error.
pub fn barenblatt_check(h_exp: u32) -> Result<Vec<f64>> {
    if !(3..=6).contains(&h_exp) {
        return Err(Error::InvalidArgument(format!("mesh exponent {h_exp} outside 3..=6")));
    }
    let mut cfg = RunConfig::preset("barenblatt")?;
    cfg.mesh = MeshSpec::HExponent(h_exp);
    let (profile, t0, center) = match cfg.initial {
        InitialData::Barenblatt { profile, t0, center } => (profile, t0, center),
        _ => unreachable!("the preset starts from a Barenblatt profile"),
    };
    let kappa = cfg.kappa();
    let mut sim = Simulation::new(&cfg)?;
    for _ in 0..cfg.n_steps {
        sim.step()?;
    }
    let t = t0 + sim.time();
    let u = sim.chat();
    let mesh = u.mesh();
    let exact = |p: [f64; 2]| barenblatt([p[0] - center[0], p[1] - center[1]], t, profile, kappa);

    let j = ((center[1] - mesh.domain().min[1]) / mesh.hy()).round() as usize;
    let mut out = Vec::new();
    for i in 0..=mesh.nx() {
        let k = mesh.node_index(i, j);
        let p = mesh.node_coords(k);
        out.extend([p[0], u.values()[k], exact(p)?]);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..mesh.n_nodes() {
        let e = exact(mesh.node_coords(k))?;
        num += (u.values()[k] - e).powi(2);
        den += e * e;
    }
    out.push((num / den).sqrt());
    Ok(out)
}
