//! Browser bindings: the interface indicator around a fibre, one-sided slab
//! uptake against the series solution, and a steppable single-fibre run.

use wasm_bindgen::prelude::*;

use hygrofrac::config::preset;
use hygrofrac::diffusion::{ConcentrationField, DiffusionSolver, MoistureBc, MoistureDirichlet};
use hygrofrac::driver::Simulation;
use hygrofrac::element::ElementOrder;
use hygrofrac::fe::FeSpace;
use hygrofrac::fibres::place_fibres_square_array;
use hygrofrac::indicator::solve_indicator;
use hygrofrac::mesh::{build_rect_mesh, classify_regions, Domain2D, INTERFACE, LEFT};
use hygrofrac::oracles::slab_diffusion_oracle;
use hygrofrac::sparse::SolverKind;

fn js(e: hygrofrac::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Nodal indicator on a `cells` x `cells` grid over the single-fibre cell
/// (row-major, `(cells + 1)^2` values).
#[wasm_bindgen]
pub fn indicator_map(length_scale: f64, cells: u32) -> Result<Vec<f64>, JsError> {
    let domain = Domain2D::new(0.02, 0.02).map_err(js)?;
    let mesh = build_rect_mesh(&domain, 0.02 / cells.max(4) as f64, ElementOrder::Bilinear).map_err(js)?;
    let layout = place_fibres_square_array(1, 1, 0.01, &domain).map_err(js)?;
    let space = FeSpace::new(classify_regions(&mesh, &layout)).map_err(js)?;
    let seam = space.mesh.node_set(INTERFACE).map_err(js)?.to_vec();
    Ok(solve_indicator(&space, &seam, length_scale, SolverKind::Direct)
        .map_err(js)?
        .values)
}

/// Epoxy slab of unit length wetted at `x = 0`, run to Fourier number
/// `fourier`. Returns `[x, finite element, series]` triples per node along
/// the bottom edge.
#[wasm_bindgen]
pub fn slab_uptake(fourier: f64, elements: u32, steps: u32) -> Result<Vec<f64>, JsError> {
    let (len, d, cs) = (1.0, 1.45e-6, 0.0745);
    let h = len / elements.max(2) as f64;
    let space = FeSpace::new(build_rect_mesh(&Domain2D::new(len, h).map_err(js)?, h, ElementOrder::Bilinear).map_err(js)?)
        .map_err(js)?;
    let t_end = fourier * len * len / d;
    let dt = t_end / steps.max(1) as f64;
    let bc = MoistureBc {
        dirichlet: vec![MoistureDirichlet {
            set: LEFT.into(),
            value: cs,
            start: 0.0,
            end: f64::INFINITY,
        }],
        flux: vec![],
    };
    let mut solver = DiffusionSolver::new(&space, &vec![d; space.num_qp()], SolverKind::Direct).map_err(js)?;
    let mut c = ConcentrationField::uniform(space.num_nodes(), 0.0);
    for _ in 0..steps.max(1) {
        c = solver.step(&space, &c, &bc, dt).map_err(js)?;
    }
    let mut out = Vec::new();
    for (p, v) in space.mesh.coords.iter().zip(&c.values) {
        if p[1] == 0.0 {
            out.extend([p[0], *v, slab_diffusion_oracle(p[0], t_end, d, cs, len)]);
        }
    }
    Ok(out)
}

/// The single-fibre wet/dry scenario, advanced a few steps at a time.
#[wasm_bindgen]
pub struct FibreDemo {
    sim: Simulation,
    done: bool,
}

#[wasm_bindgen]
impl FibreDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(mesh_scale: f64) -> Result<FibreDemo, JsError> {
        let mut config = preset("single_fibre").map_err(js)?;
        config.numerics.mesh_scale = mesh_scale;
        config.numerics.element_order = ElementOrder::Bilinear;
        let mut sim = Simulation::new(config).map_err(js)?;
        sim.step().map_err(js)?;
        Ok(FibreDemo { sim, done: false })
    }

    /// Advance up to `n` steps; false once the schedule is finished.
    pub fn advance(&mut self, n: u32) -> Result<bool, JsError> {
        for _ in 0..n {
            if self.sim.step().map_err(js)?.is_none() {
                self.done = true;
                break;
            }
        }
        Ok(!self.done)
    }

    /// Elements per side; fields hold `(cells + 1)^2` nodal values.
    pub fn cells(&self) -> u32 {
        self.sim.space.mesh.nx as u32
    }

    pub fn time(&self) -> f64 {
        self.sim.state.time
    }

    pub fn reaction(&self) -> f64 {
        self.sim.record("", 0).reaction
    }

    pub fn max_damage(&self) -> f64 {
        self.sim.state.phi.iter().cloned().fold(0.0, f64::max)
    }

    /// `damage`, `concentration` or `indicator`.
    pub fn field(&self, name: &str) -> Result<Vec<f64>, JsError> {
        match name {
            "damage" => Ok(self.sim.state.phi.clone()),
            "concentration" => Ok(self.sim.state.conc.clone()),
            "indicator" => Ok(self.sim.indicator.values.clone()),
            _ => Err(JsError::new(&format!("unknown field `{name}`"))),
        }
    }
}
