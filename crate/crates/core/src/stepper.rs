//! Implicit Euler in time with a Picard fixed-point iteration per step.
//!
//! Every iteration solves the frozen-coefficient system
//! `(M + tau (A(u_guess) + C)) u = M u_prev` with Dirichlet rows eliminated,
//! and the loop stops when the Euclidean norm of the change between two
//! iterates drops below `tol` or `iter_max` solves have been done.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{
    apply_dirichlet, assemble_convection, assemble_lumped_mass, assemble_mass, assemble_stiffness_elementwise,
    assemble_stiffness_with, l2_project, lumped_project,
};
use crate::cli::config::{LawKind, Projection, RunConfig, Variable};
use crate::cli::output::Snapshot;
use crate::diagnostics::{support_measure, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linsolve::{solve, CgSettings, SolveReport, SolverKind};
use crate::mesh::MeshGrid;
use crate::model::{field_from_hat, to_hat, ModelParams, Transform};
use crate::sparse::{norm2, CsrMatrix};

/// What to do when `iter_max` is reached with the increment still above `tol`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NonconvergencePolicy {
    /// Keep the last iterate, flag the step as not converged and go on.
    #[default]
    Accept,
    /// Stop the run with [`Error::PicardStalled`].
    Abort,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardSettings {
    pub tol: f64,
    pub iter_max: usize,
    pub policy: NonconvergencePolicy,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            iter_max: 40,
            policy: NonconvergencePolicy::Accept,
        }
    }
}

impl PicardSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.iter_max == 0 {
            return Err(Error::InvalidArgument(format!(
                "picard settings need tol > 0 and iter_max >= 1, got tol={}, iter_max={}",
                self.tol, self.iter_max
            )));
        }
        Ok(())
    }
}

/// Uniform time levels `t_n = n tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { tau, n_steps })
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// Diffusion coefficient `slope * w + offset` evaluated on the frozen iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrozenCoefficient {
    pub slope: f64,
    pub offset: f64,
}

impl FrozenCoefficient {
    /// `kappa w + delta`, the (regularized) porous medium coefficient.
    pub fn porous_medium(kappa: f64, delta: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(delta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need kappa > 0 and delta >= 0, got kappa={kappa}, delta={delta}"
            )));
        }
        Ok(Self {
            slope: kappa,
            offset: delta,
        })
    }

    /// Iterate-independent coefficient; Picard is exact after one solve.
    pub fn constant(value: f64) -> Self {
        Self {
            slope: 0.0,
            offset: value,
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        self.slope * w + self.offset
    }

    pub fn is_constant(&self) -> bool {
        self.slope == 0.0
    }
}

/// Mass matrix used for the time derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassKind {
    Consistent,
    /// Row-sum lumped (nodal quadrature).
    Lumped,
}

/// Where the frozen coefficient is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoefficientRule {
    /// At the 2x2 Gauss points of every element.
    #[default]
    Gauss,
    /// Once per element, at the mean of its nodal values.
    ElementMean,
}

impl FromStr for MassKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "consistent" => Ok(MassKind::Consistent),
            "lumped" => Ok(MassKind::Lumped),
            other => Err(format!("unknown mass matrix '{other}' (expected consistent or lumped)")),
        }
    }
}

impl fmt::Display for MassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassKind::Consistent => "consistent",
            MassKind::Lumped => "lumped",
        })
    }
}

impl FromStr for CoefficientRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gauss" => Ok(CoefficientRule::Gauss),
            "element" => Ok(CoefficientRule::ElementMean),
            other => Err(format!(
                "unknown coefficient rule '{other}' (expected gauss or element)"
            )),
        }
    }
}

impl fmt::Display for CoefficientRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientRule::Gauss => "gauss",
            CoefficientRule::ElementMean => "element",
        })
    }
}

/// Time-independent pieces of the per-iteration system.
#[derive(Clone, Debug)]
pub struct StepOperator {
    mesh: Arc<MeshGrid>,
    mass: CsrMatrix,
    convection: Option<CsrMatrix>,
    coefficient: FrozenCoefficient,
    rule: CoefficientRule,
    boundary_value: f64,
    solver: SolverKind,
    cg: CgSettings,
}

impl StepOperator {
    pub fn new(mesh: Arc<MeshGrid>, coefficient: FrozenCoefficient, boundary_value: f64) -> Self {
        let mass = assemble_mass(&mesh);
        Self {
            mesh,
            mass,
            convection: None,
            coefficient,
            rule: CoefficientRule::Gauss,
            boundary_value,
            solver: SolverKind::Auto,
            cg: CgSettings::default(),
        }
    }

    /// Adds a constant divergence-free transport velocity.
    pub fn with_velocity(mut self, velocity: [f64; 2]) -> Self {
        self.convection = if velocity == [0.0, 0.0] {
            None
        } else {
            Some(assemble_convection(&self.mesh, |_| velocity))
        };
        self
    }

    pub fn with_scheme(mut self, mass: MassKind, rule: CoefficientRule) -> Self {
        self.mass = match mass {
            MassKind::Consistent => assemble_mass(&self.mesh),
            MassKind::Lumped => assemble_lumped_mass(&self.mesh),
        };
        self.rule = rule;
        self
    }

    pub fn with_solver(mut self, solver: SolverKind, cg: CgSettings) -> Self {
        self.solver = solver;
        self.cg = cg;
        self
    }

    pub fn mesh(&self) -> &Arc<MeshGrid> {
        &self.mesh
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn coefficient(&self) -> FrozenCoefficient {
        self.coefficient
    }

    pub fn boundary_value(&self) -> f64 {
        self.boundary_value
    }

    /// `M + tau (A(w) + C)` without boundary conditions.
    fn system(&self, w: &ScalarField, tau: f64) -> Result<CsrMatrix> {
        let k = self.coefficient;
        let mut op = match self.rule {
            CoefficientRule::Gauss => assemble_stiffness_with(&self.mesh, w, |v| k.eval(v))?,
            CoefficientRule::ElementMean => assemble_stiffness_elementwise(&self.mesh, w, |v| k.eval(v))?,
        };
        if let Some(c) = &self.convection {
            op = op.add_scaled(1.0, c)?;
        }
        self.mass.add_scaled(tau, &op)
    }

    /// One frozen-coefficient solve. `step` and `iteration` only label errors.
    pub fn picard_step(
        &self,
        u_prev: &ScalarField,
        u_guess: &ScalarField,
        tau: f64,
        step: usize,
        iteration: usize,
    ) -> Result<(ScalarField, SolveReport)> {
        u_prev.check_mesh(&self.mesh)?;
        u_guess.check_mesh(&self.mesh)?;
        let mut s = self.system(u_guess, tau)?;
        let mut b = self.mass.mul_vec(u_prev.values());
        apply_dirichlet(&mut s, &mut b, &self.mesh, self.boundary_value);
        if !(b.iter().all(|v| v.is_finite()) && s.values().iter().all(|v| v.is_finite())) {
            return Err(Error::BlowUp { step });
        }

        let mut x0 = u_guess.values().to_vec();
        for (k, x) in x0.iter_mut().enumerate() {
            if self.mesh.is_boundary(k) {
                *x = self.boundary_value;
            }
        }
        let (x, report) = solve(self.solver, &s, &b, &x0, &self.cg).map_err(|e| Error::LinearSolve {
            step,
            iteration,
            reason: e.to_string(),
        })?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step });
        }
        if !report.success {
            return Err(Error::LinearSolve {
                step,
                iteration,
                reason: format!("{} solve residual {:e} too large", report.method, report.residual),
            });
        }
        Ok((ScalarField::new(Arc::clone(&self.mesh), x)?, report))
    }

    /// Picard loop for one time step, started from `u_prev`.
    pub fn advance_time_step(
        &self,
        u_prev: &ScalarField,
        tau: f64,
        settings: &PicardSettings,
        step: usize,
    ) -> Result<StepOutcome> {
        settings.validate()?;
        let mut guess = u_prev.clone();
        let mut error = f64::INFINITY;
        let mut iterations = 0;
        while iterations < settings.iter_max && !(error < settings.tol) {
            iterations += 1;
            let (next, _) = self.picard_step(u_prev, &guess, tau, step, iterations)?;
            if !next.is_finite() {
                return Err(Error::BlowUp { step });
            }
            let diff: Vec<f64> = next.values().iter().zip(guess.values()).map(|(a, b)| a - b).collect();
            error = norm2(&diff);
            guess = next;
        }
        let converged = error < settings.tol;
        if !converged && settings.policy == NonconvergencePolicy::Abort {
            return Err(Error::PicardStalled {
                step,
                iterations,
                error,
            });
        }
        Ok(StepOutcome {
            u_next: guess,
            iterations,
            converged,
            error,
        })
    }

    /// Interior rows of `M (u - u_prev) + tau (A(u) + C) u`, Euclidean norm.
    /// Zero for an exact solution of the nonlinear step.
    pub fn nonlinear_residual(&self, u: &ScalarField, u_prev: &ScalarField, tau: f64) -> Result<f64> {
        u.check_mesh(&self.mesh)?;
        u_prev.check_mesh(&self.mesh)?;
        let s = self.system(u, tau)?;
        let su = s.mul_vec(u.values());
        let mp = self.mass.mul_vec(u_prev.values());
        let r: Vec<f64> = (0..su.len())
            .filter(|&k| !self.mesh.is_boundary(k))
            .map(|k| su[k] - mp[k])
            .collect();
        Ok(norm2(&r))
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub u_next: ScalarField,
    pub iterations: usize,
    pub converged: bool,
    /// Last increment `||u^k - u^{k-1}||_2`.
    pub error: f64,
}

/// Single frozen-coefficient solve with coefficient `kappa u_guess + delta`.
/// Builds its operators on every call; use [`StepOperator`] in loops.
#[allow(clippy::too_many_arguments)]
pub fn picard_step(
    u_prev: &ScalarField,
    u_guess: &ScalarField,
    tau: f64,
    mesh: &Arc<MeshGrid>,
    kappa: f64,
    delta: f64,
    boundary_value: f64,
    velocity: Option<[f64; 2]>,
) -> Result<(ScalarField, SolveReport)> {
    let op = StepOperator::new(
        Arc::clone(mesh),
        FrozenCoefficient::porous_medium(kappa, delta)?,
        boundary_value,
    )
    .with_velocity(velocity.unwrap_or([0.0, 0.0]));
    op.picard_step(u_prev, u_guess, tau, 0, 1)
}

/// Time loop state for a configured run, advanced one step at a time.
#[derive(Clone, Debug)]
pub struct Simulation {
    op: StepOperator,
    grid: TimeGrid,
    picard: PicardSettings,
    params: ModelParams,
    transform: Transform,
    theta: f64,
    chat: ScalarField,
    step: usize,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.build_mesh()?;
        let grid = TimeGrid::new(config.tau, config.n_steps)?;
        let coefficient = match config.law {
            LawKind::Vdw => FrozenCoefficient::porous_medium(config.kappa(), config.delta)?,
            LawKind::Heat => FrozenCoefficient::constant(config.params.d + config.delta),
        };
        let op = StepOperator::new(Arc::clone(&mesh), coefficient, config.boundary_chat)
            .with_velocity(config.velocity)
            .with_scheme(config.mass, config.coefficient_rule)
            .with_solver(config.solver, config.cg);

        let kappa = config.kappa();
        let initial = config.initial;
        let (params, transform) = (config.params, config.transform);
        let f = move |p: [f64; 2]| {
            let v = initial.value(p, kappa);
            match initial.variable() {
                Variable::C => to_hat(v, &params, transform),
                Variable::Chat => v,
            }
        };
        let chat = match config.projection {
            Projection::L2 => l2_project(&mesh, f)?,
            Projection::Lumped => lumped_project(&mesh, f),
        };
        Ok(Self {
            op,
            grid,
            picard: config.picard,
            params,
            transform,
            theta: config.theta(),
            chat,
            step: 0,
        })
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.grid.time(self.step)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn operator(&self) -> &StepOperator {
        &self.op
    }

    pub fn chat(&self) -> &ScalarField {
        &self.chat
    }

    pub fn c(&self) -> ScalarField {
        field_from_hat(&self.chat, &self.params, self.transform)
    }

    pub fn initial_record(&self) -> DiagnosticsRecord {
        DiagnosticsRecord::measure(0, 0.0, &self.c(), &self.chat, self.theta, 0, true, 0.0)
    }

    /// Advances one step. On error the state is left at the last good step.
    pub fn step(&mut self) -> Result<DiagnosticsRecord> {
        let n = self.step + 1;
        let out = self.op.advance_time_step(&self.chat, self.grid.tau, &self.picard, n)?;
        self.chat = out.u_next;
        self.step = n;
        Ok(DiagnosticsRecord::measure(
            n,
            self.time(),
            &self.c(),
            &self.chat,
            self.theta,
            out.iterations,
            out.converged,
            out.error,
        ))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::new(self.step, self.time(), self.chat.clone(), self.c())
    }
}

#[derive(Debug)]
pub struct SimulationOutput {
    pub final_chat: ScalarField,
    pub final_c: ScalarField,
    /// One record per time level, starting with the projected initial data.
    pub records: Vec<DiagnosticsRecord>,
    /// Support area of `c` for each configured threshold, per record.
    pub supports: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    /// Error that ended the run early, if any.
    pub stopped: Option<Error>,
}

/// Projects the initial data, runs all steps and collects records and
/// snapshots (at step 0, every `snapshot_every` steps and the last step).
/// Stepping errors end the loop and are returned in `stopped`.
pub fn run_simulation(config: &RunConfig) -> Result<SimulationOutput> {
    let mut sim = Simulation::new(config)?;
    let every = config.snapshot_every;
    let supports_of = |c: &ScalarField| config.thetas.iter().map(|&t| support_measure(c, t)).collect::<Vec<_>>();

    let mut records = vec![sim.initial_record()];
    let mut supports = vec![supports_of(&sim.c())];
    let mut snapshots = vec![sim.snapshot()];
    let mut stopped = None;
    while sim.step_index() < config.n_steps {
        match sim.step() {
            Ok(rec) => {
                records.push(rec);
                let c = sim.c();
                supports.push(supports_of(&c));
                let n = sim.step_index();
                if (every > 0 && n % every == 0) || n == config.n_steps {
                    snapshots.push(sim.snapshot());
                }
            }
            Err(e) => {
                stopped = Some(e);
                break;
            }
        }
    }
    if stopped.is_some() && snapshots.last().map(|s| s.step) != Some(sim.step_index()) {
        snapshots.push(sim.snapshot());
    }
    Ok(SimulationOutput {
        final_c: sim.c(),
        final_chat: sim.chat.clone(),
        records,
        supports,
        snapshots,
        stopped,
    })
}
