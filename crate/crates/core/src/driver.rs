//! Staggered time integration: moisture, then displacement, then damage.

use crate::config::{ScenarioConfig, StageConfig};
use crate::constitutive::Sym2;
use crate::diffusion::{total_moisture, ConcentrationField, DiffusionSolver, MoistureBc, MoistureDirichlet, MoistureFlux};
use crate::error::{Error, Result};
use crate::fe::FeSpace;
use crate::fibres::FibreLayout;
use crate::indicator::{build_property_fields, solve_indicator, IndicatorField, PropertyFields};
use crate::mechanics::{reaction_force, solve_displacement, solve_phase_field, tensile_energy, MechanicsInput};
use crate::mesh::{build_rect_mesh, classify_regions, insert_edge_crack, CrackSeam, INTERFACE};

/// Damage decrease tolerated before a step counts as an irreversibility
/// violation.
pub const MONOTONE_TOL: f64 = 1e-8;

/// Fields carried from step to step.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    pub conc: Vec<f64>,
    /// Interleaved `(ux, uy)` per node.
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    /// Tensile energy history per quadrature point.
    pub history: Vec<f64>,
    /// Internal force `K u - f`, nonzero at supports.
    pub internal: Vec<f64>,
}

/// One row of the time series.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    /// N, already multiplied by the thickness.
    pub reaction: f64,
    pub c_center: f64,
    pub total_moisture: f64,
    /// mm
    pub elongation: f64,
    pub max_damage: f64,
    pub stage: String,
    pub halvings: usize,
}

/// Full fields at the end of a stage.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub stage: String,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub steps: usize,
    pub halvings: usize,
    pub peak_force: f64,
    pub peak_force_time: f64,
    pub final_force: f64,
    pub final_elongation: f64,
    pub peak_damage: f64,
    pub monotonicity_violations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub series: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub summary: RunSummary,
}

/// What the run observer is told about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Initial,
    Step { index: usize },
    StageEnd { stage: usize },
}

pub struct Simulation {
    pub config: ScenarioConfig,
    pub space: FeSpace,
    pub layout: FibreLayout,
    pub crack: Option<CrackSeam>,
    pub indicator: IndicatorField,
    pub props: PropertyFields,
    pub state: State,
    diffusion: DiffusionSolver,
    stage_start: f64,
    probe_node: usize,
    violations: usize,
    cursor: Cursor,
}

/// Position in the stage schedule.
#[derive(Debug, Clone, Copy, Default)]
struct Cursor {
    initialised: bool,
    stage: usize,
    step: usize,
    steps: usize,
    halvings: usize,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let domain = config.domain()?;
        let layout = config.fibre_layout(&domain)?;
        let h = config.element_size();
        let mesh = build_rect_mesh(&domain, h, config.numerics.element_order)?;
        if config.numerics.mesh_scale <= 1.0 {
            mesh.check_length_scale(config.physics.length_scale)?;
        }
        let mesh = classify_regions(&mesh, &layout);
        let (mesh, crack) = match config.geometry.crack {
            Some(c) => insert_edge_crack(&mesh, c.length, c.y)?,
            None => (mesh, None),
        };
        let space = FeSpace::new(mesh)?;
        let catalog = config.catalog()?;
        let seam = space.mesh.node_set(INTERFACE).map(|s| s.to_vec()).unwrap_or_default();
        let indicator = solve_indicator(&space, &seam, config.indicator_length_scale(), config.numerics.solver)?;
        let props = build_property_fields(&indicator, &space, &catalog, &layout, config.physics.exponent)?;
        let diffusion = DiffusionSolver::new(&space, &props.diffusivity, config.numerics.solver)?;
        let n = space.num_nodes();
        let probe = config.measure.probe.unwrap_or_else(|| domain.center());
        let probe_node = space.mesh.nearest_node(probe);
        let state = State {
            time: 0.0,
            conc: vec![config.physics.initial_concentration; n],
            u: vec![0.0; 2 * n],
            phi: vec![0.0; n],
            history: vec![0.0; space.num_qp()],
            internal: vec![0.0; 2 * n],
        };
        Ok(Self {
            config,
            space,
            layout,
            crack,
            indicator,
            props,
            state,
            diffusion,
            stage_start: 0.0,
            probe_node,
            violations: 0,
            cursor: Cursor::default(),
        })
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    fn input<'a>(&self, phi: &'a [f64], conc: &'a [f64]) -> MechanicsInput<'a> {
        MechanicsInput {
            phi,
            conc,
            c0: self.config.physics.reference_concentration,
            kappa: self.config.physics.kappa,
        }
    }

    fn moisture_bc(&self, stage: &StageConfig) -> MoistureBc {
        let (start, end) = (self.stage_start, self.stage_start + stage.duration);
        MoistureBc {
            dirichlet: stage
                .moisture
                .iter()
                .map(|m| MoistureDirichlet {
                    set: m.set.clone(),
                    value: m.value,
                    start,
                    end,
                })
                .collect(),
            flux: stage
                .moisture_flux
                .iter()
                .map(|m| MoistureFlux {
                    set: m.set.clone(),
                    q: m.q,
                    start,
                    end,
                })
                .collect(),
        }
    }

    /// Prescribed displacement dofs at absolute time `t`.
    pub fn displacement_constraints(&self, stage: &StageConfig, t: f64) -> Result<Vec<(usize, f64)>> {
        let tau = t - self.stage_start;
        let mut out = Vec::new();
        for m in &stage.mechanics {
            for &n in self.space.mesh.node_set(&m.set)? {
                out.push((2 * n + m.component.index(), m.value + m.rate * tau));
            }
        }
        let mask = crate::sparse::constraint_mask(2 * self.space.num_nodes(), &out)?;
        Ok(mask.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect())
    }

    /// Equilibrium of the initial state under the first stage's supports.
    pub fn initialise(&mut self) -> Result<()> {
        let Some(stage) = self.config.stages.first().cloned() else {
            return Ok(());
        };
        self.stage_start = self.state.time;
        let next = self.solve_fields(&stage, self.state.clone(), self.state.conc.clone())?;
        self.state = next;
        Ok(())
    }

    /// Displacement, history and damage for a given concentration field.
    fn solve_fields(&self, stage: &StageConfig, base: State, conc: Vec<f64>) -> Result<State> {
        let cfg = &self.config;
        let constraints = self.displacement_constraints(stage, base.time)?;
        let gc = &self.props.gc;
        let ell = cfg.physics.length_scale;
        let mut phi_iter = base.phi.clone();
        let mut passes = 0;
        loop {
            passes += 1;
            let sol = solve_displacement(
                &self.space,
                &self.props,
                &self.input(&phi_iter, &conc),
                &base.u,
                &constraints,
                cfg.numerics.solver,
            )?;
            let psi = tensile_energy(&self.space, &self.props, &self.input(&phi_iter, &conc), &sol.u);
            let history: Vec<f64> = base.history.iter().zip(&psi).map(|(h, p)| h.max(*p)).collect();
            let phi = solve_phase_field(&self.space, &history, gc, ell, cfg.numerics.solver)?;
            let change = phi
                .iter()
                .zip(&phi_iter)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let done = !cfg.numerics.multi_pass || change < cfg.numerics.pass_tolerance;
            if done {
                return Ok(State {
                    time: base.time,
                    conc,
                    u: sol.u,
                    phi,
                    history,
                    internal: sol.internal,
                });
            }
            if passes >= cfg.numerics.max_passes {
                return Err(Error::StaggeredNoConvergence { passes, change });
            }
            phi_iter = phi;
        }
    }

    /// One attempt at advancing by `dt`; leaves `self.state` untouched.
    fn attempt(&mut self, stage: &StageConfig, dt: f64) -> Result<State> {
        let t = self.state.time + dt;
        let conc = if stage.diffusion {
            let bc = self.moisture_bc(stage);
            let current = ConcentrationField {
                values: self.state.conc.clone(),
                time: self.state.time,
            };
            self.diffusion.step(&self.space, &current, &bc, dt)?.values
        } else {
            self.state.conc.clone()
        };
        let mut base = self.state.clone();
        base.time = t;
        self.solve_fields(stage, base, conc)
    }

    /// Advance by `dt`, halving on failure. Returns the number of halvings.
    fn advance(&mut self, stage: &StageConfig, dt: f64, depth: usize) -> Result<usize> {
        match self.attempt(stage, dt) {
            Ok(next) => {
                self.commit(next);
                Ok(0)
            }
            Err(e) if depth >= self.config.numerics.max_halvings => Err(Error::StepFailure {
                time: self.state.time + dt,
                halvings: depth,
                source: Box::new(e),
            }),
            Err(_) => {
                let a = self.advance(stage, 0.5 * dt, depth + 1)?;
                let b = self.advance(stage, 0.5 * dt, depth + 1)?;
                Ok(1 + a + b)
            }
        }
    }

    fn commit(&mut self, next: State) {
        self.violations += next
            .phi
            .iter()
            .zip(&self.state.phi)
            .filter(|(new, old)| **new < **old - MONOTONE_TOL)
            .count();
        self.state = next;
    }

    pub fn record(&self, stage: &str, halvings: usize) -> StepRecord {
        let m = &self.config.measure;
        let mesh = &self.space.mesh;
        let reaction = mesh
            .node_set(&m.reaction_set)
            .map(|s| reaction_force(&self.state.internal, s, m.reaction_component.index()))
            .unwrap_or(f64::NAN)
            * self.config.physics.thickness;
        let elongation = match &m.elongation {
            Some(e) => mesh.node_set(&e.set).map_or(f64::NAN, |s| {
                let sum: f64 = s.iter().map(|&n| self.state.u[2 * n + e.component.index()]).sum();
                e.factor * sum / s.len().max(1) as f64
            }),
            None => 0.0,
        };
        StepRecord {
            time: self.state.time,
            reaction,
            c_center: self.state.conc[self.probe_node],
            total_moisture: total_moisture(
                &ConcentrationField {
                    values: self.state.conc.clone(),
                    time: self.state.time,
                },
                &self.space,
            ),
            elongation,
            max_damage: self.state.phi.iter().cloned().fold(0.0, f64::max),
            stage: stage.to_string(),
            halvings,
        }
    }

    /// Degraded stress averaged to the nodes: `(xx, yy, xy)`.
    pub fn nodal_stress(&self) -> [Vec<f64>; 3] {
        let input = self.input(&self.state.phi, &self.state.conc);
        let s: Vec<Sym2> = crate::mechanics::stresses(&self.space, &self.props, &input, &self.state.u);
        let pick = |f: fn(&Sym2) -> f64| self.space.qp_to_nodes(&s.iter().map(f).collect::<Vec<_>>());
        [pick(|s| s.xx), pick(|s| s.yy), pick(|s| s.xy)]
    }

    pub fn nodal_history(&self) -> Vec<f64> {
        self.space.qp_to_nodes(&self.state.history)
    }

    pub fn run(&mut self) -> Result<RunResult> {
        self.run_with(|_, _, _| Ok(()))
    }

    pub fn is_finished(&self) -> bool {
        self.cursor.initialised && self.cursor.stage >= self.config.stages.len()
    }

    fn steps_in(&self, stage: &StageConfig) -> usize {
        (stage.duration / self.config.stage_dt(stage) - 1e-9).ceil().max(0.0) as usize
    }

    /// Advance one step of the schedule. The first call only solves the
    /// initial state; a stage without steps yields its end event alone.
    /// Returns `None` once every stage is done.
    pub fn step(&mut self) -> Result<Option<Advance>> {
        if !self.cursor.initialised {
            self.initialise()?;
            self.cursor.initialised = true;
            let first = self.config.stages.first().map_or("initial".to_string(), |s| s.name.clone());
            return Ok(Some(Advance {
                record: self.record(&first, 0),
                stepped: false,
                closed_stage: None,
            }));
        }
        let si = self.cursor.stage;
        let Some(stage) = self.config.stages.get(si).cloned() else {
            return Ok(None);
        };
        if self.cursor.step == 0 {
            self.stage_start = self.state.time;
        }
        let n = self.steps_in(&stage);
        let mut stepped = false;
        let mut halvings = 0;
        if n > 0 {
            let k = self.cursor.step;
            let target = if k + 1 == n {
                self.stage_start + stage.duration
            } else {
                self.stage_start + (k + 1) as f64 * self.config.stage_dt(&stage)
            };
            halvings = self.advance(&stage, target - self.state.time, 0)?;
            self.state.time = target;
            self.cursor.step += 1;
            self.cursor.steps += 1;
            self.cursor.halvings += halvings;
            stepped = true;
        }
        let closed_stage = (self.cursor.step >= n).then(|| {
            self.cursor.stage += 1;
            self.cursor.step = 0;
            si
        });
        Ok(Some(Advance {
            record: self.record(&stage.name, halvings),
            stepped,
            closed_stage,
        }))
    }

    /// Run every remaining stage, calling `observer` after the initial
    /// solve, after each accepted step and at each stage end.
    pub fn run_with<F>(&mut self, mut observer: F) -> Result<RunResult>
    where
        F: FnMut(&Simulation, &StepRecord, Event) -> Result<()>,
    {
        let clock = Clock::start();
        let mut series = Vec::new();
        let mut snapshots = Vec::new();
        let mut first = !self.cursor.initialised;
        while let Some(adv) = self.step()? {
            let rec = adv.record;
            if std::mem::take(&mut first) {
                observer(self, &rec, Event::Initial)?;
                series.push(rec.clone());
            } else if adv.stepped {
                observer(self, &rec, Event::Step { index: self.cursor.steps })?;
                series.push(rec.clone());
            }
            if let Some(stage) = adv.closed_stage {
                observer(self, &rec, Event::StageEnd { stage })?;
                snapshots.push(Snapshot {
                    stage: rec.stage.clone(),
                    state: self.state.clone(),
                });
            }
        }
        let summary = summarise(
            &self.config.name,
            &series,
            self.cursor.steps,
            self.cursor.halvings,
            self.violations,
            clock.elapsed(),
        );
        Ok(RunResult {
            series,
            snapshots,
            summary,
        })
    }
}

/// Result of one call to [`Simulation::step`].
#[derive(Debug, Clone)]
pub struct Advance {
    pub record: StepRecord,
    /// False for the initial solve and for stages without steps.
    pub stepped: bool,
    pub closed_stage: Option<usize>,
}

pub fn summarise(
    name: &str,
    series: &[StepRecord],
    steps: usize,
    halvings: usize,
    violations: usize,
    wall_seconds: f64,
) -> RunSummary {
    let peak = series
        .iter()
        .max_by(|a, b| a.reaction.total_cmp(&b.reaction))
        .cloned();
    let last = series.last();
    RunSummary {
        name: name.to_string(),
        steps,
        halvings,
        peak_force: peak.as_ref().map_or(0.0, |p| p.reaction),
        peak_force_time: peak.as_ref().map_or(0.0, |p| p.time),
        final_force: last.map_or(0.0, |r| r.reaction),
        final_elongation: last.map_or(0.0, |r| r.elongation),
        peak_damage: series.iter().map(|r| r.max_damage).fold(0.0, f64::max),
        monotonicity_violations: violations,
        wall_seconds,
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Self {
        Clock(std::time::Instant::now())
    }
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

// no monotonic clock in the browser without extra bindings
#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Self {
        Clock
    }
    fn elapsed(&self) -> f64 {
        0.0
    }
}
