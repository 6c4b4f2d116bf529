//! Acceptance criteria, one test each. Every test prints a single
//! `PASS|FAIL criterion ...` line with the measured values before asserting.
//!
//! Scenario runs are shared between tests through a cache so the
//! irreversibility check can look at every run without repeating it.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use hygrofrac::config::preset;
use hygrofrac::driver::{RunResult, Simulation, StepRecord};
use hygrofrac::oracles::free_swelling_oracle;
use hygrofrac::verify;

struct Outcome {
    sim: Simulation,
    result: RunResult,
    wall: Duration,
}

fn scenario(name: &str, mesh_scale: f64) -> Arc<Outcome> {
    type Cell = Arc<OnceLock<Arc<Outcome>>>;
    static CACHE: OnceLock<Mutex<HashMap<String, Cell>>> = OnceLock::new();
    // hold the map lock only to fetch the slot so distinct runs proceed in parallel
    let slot: Cell = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .entry(format!("{name}@{mesh_scale}"))
        .or_default()
        .clone();
    slot.get_or_init(|| {
        let mut config = preset(name).unwrap();
        config.numerics.mesh_scale = mesh_scale;
        let start = Instant::now();
        let mut sim = Simulation::new(config).unwrap();
        let result = sim.run().unwrap();
        Arc::new(Outcome {
            sim,
            result,
            wall: start.elapsed(),
        })
    })
    .clone()
}

/// Written to the process stdout directly so the line shows up for passing
/// tests too, not only when the harness replays a failure.
fn report(criterion: u32, pass: bool, detail: String) {
    let line = format!("{} criterion {criterion}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

fn stage<'a>(series: &'a [StepRecord], name: &str) -> Vec<&'a StepRecord> {
    series.iter().filter(|r| r.stage == name).collect()
}

/// Value at the end of the first stage.
fn end_of<'a>(series: &'a [StepRecord], name: &str) -> &'a StepRecord {
    stage(series, name).last().copied().expect("stage present")
}

#[test]
fn criterion_01_slab_diffusion() {
    let t = Instant::now();
    let r = verify::slab_diffusion().unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = r.passed() && secs < 30.0;
    report(1, pass, format!("slab L2 error {:.3e} (< 1e-2), {secs:.2} s (< 30 s)", r.metric));
    assert!(pass);
}

#[test]
fn criterion_02_indicator_strip() {
    let t = Instant::now();
    let r = verify::indicator_strip().unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = r.passed() && secs < 10.0;
    report(2, pass, format!("max nodal error {:.3e} (< 2e-2), {secs:.2} s (< 10 s)", r.metric));
    assert!(pass);
}

#[test]
fn criterion_03_at2_homogeneous() {
    let t = Instant::now();
    let r = verify::at2_homogeneous().unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = r.passed() && secs < 5.0;
    report(3, pass, format!("max |phi - 2lH/(Gc+2lH)| {:.3e} (< 1e-6), {secs:.2} s (< 5 s)", r.metric));
    assert!(pass);
}

#[test]
fn criterion_04_jacobians() {
    let t = Instant::now();
    let reports = [
        verify::jacobian_displacement(100, 41).unwrap(),
        verify::jacobian_phase_field(100, 42).unwrap(),
        verify::jacobian_diffusion(100, 43).unwrap(),
    ];
    let secs = t.elapsed().as_secs_f64();
    let pass = reports.iter().all(|r| r.passed()) && secs < 60.0;
    let detail: Vec<String> = reports.iter().map(|r| format!("{} {:.2e}", r.name, r.metric)).collect();
    report(4, pass, format!("{} (each < 1e-6), {secs:.2} s (< 60 s)", detail.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_05_free_swelling() {
    let t = Instant::now();
    let (stress, stretch) = verify::free_swelling().unwrap();
    let secs = t.elapsed().as_secs_f64();
    let expected = free_swelling_oracle(0.6, 0.0745, 1.0);
    let pass = stress.passed() && stretch.passed() && secs < 10.0;
    report(
        5,
        pass,
        format!(
            "max|sigma|/E {:.2e} (< 1e-6), |dL/L - {expected}| {:.2e} (< 1e-6), {secs:.2} s",
            stress.metric, stretch.metric
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_single_fibre() {
    let o = scenario("single_fibre", 2.0);
    let s = &o.result.series;
    let wet = stage(s, "wet");
    let dry = stage(s, "dry");
    let peak = o.result.summary.peak_force;
    let tol = 1e-9 * peak;
    // rise: non-decreasing until the plateau sets in
    let rise = wet.windows(2).all(|w| w[1].reaction >= w[0].reaction - tol);
    // plateau: the last 100 s of wetting
    let t_end = wet.last().unwrap().time;
    let f_end = wet.last().unwrap().reaction;
    let f_before = wet.iter().rev().find(|r| r.time <= t_end - 100.0 + 1e-9).unwrap().reaction;
    let slope = (f_end - f_before).abs() / peak;
    let plateau = slope < 0.01;
    let decay = dry.windows(2).all(|w| w[1].reaction <= w[0].reaction + tol) && dry.last().unwrap().reaction < 0.1 * peak;
    // damage peak sits in the interface zone at equilibrium
    let snap = &o.result.snapshots[0];
    let (imax, _) = snap
        .state
        .phi
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let d_at_peak = o.sim.indicator.values[imax];
    let on_seam = d_at_peak > 0.5;
    // frozen during drying
    let wet_phi = &snap.state.phi;
    let dry_phi = &o.result.snapshots[1].state.phi;
    let frozen = wet_phi.iter().zip(dry_phi).filter(|(a, b)| **b < **a - 1e-8).count();
    let minutes = o.wall.as_secs_f64() / 60.0;
    let pass = rise && plateau && decay && on_seam && frozen == 0 && minutes < 10.0;
    report(
        6,
        pass,
        format!(
            "rise {rise}, plateau slope {slope:.2e}/100 s (< 1e-2), decay {decay}, indicator at max damage {d_at_peak:.3} (> 0.5), \
             drying decreases {frozen}, peak F {peak:.4} N, {minutes:.2} min"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_square_vs_random() {
    let sa = scenario("multi_fibre_sa", 4.0);
    let rd = scenario("multi_fibre_rd", 4.0);
    let f_sa = end_of(&sa.result.series, "wet").reaction;
    let f_rd = end_of(&rd.result.series, "wet").reaction;
    let rel = (f_sa - f_rd).abs() / f_sa.max(f_rd);
    let minutes = [sa.wall, rd.wall].map(|w| w.as_secs_f64() / 60.0);
    let pass = rel < 0.02 && minutes.iter().all(|&m| m < 20.0);
    report(
        7,
        pass,
        format!(
            "SA {f_sa:.3} N, RD {f_rd:.3} N, difference {:.2}% (< 2%), {:.1}/{:.1} min",
            100.0 * rel,
            minutes[0],
            minutes[1]
        ),
    );
    // reported, not gated
    let off = (f_sa - 26.04).abs() / 26.04;
    let info = format!("INFO criterion 7: SA force is {:.1}% away from 26.04 N (stretch target 15%)\n", 100.0 * off);
    let _ = std::io::stdout().lock().write_all(info.as_bytes());
    assert!(pass);
}

#[test]
fn criterion_08_ply_expansion() {
    let o = scenario("ply", 4.0);
    let s = &o.result.series;
    let wet = end_of(s, "wet").elongation;
    let residual = s.last().unwrap().elongation.abs();
    let lo = free_swelling_oracle(0.6, 0.0745, 10.0);
    let hi = free_swelling_oracle(1.06, 0.0745, 10.0);
    let minutes = o.wall.as_secs_f64() / 60.0;
    let within = (wet - 0.63).abs() <= 0.063;
    let pass = within && residual < 0.05 && wet > lo && wet < hi && minutes < 20.0;
    report(
        8,
        pass,
        format!(
            "expansion {wet:.4} mm (0.63 +- 0.063), bounds ({lo:.3}, {hi:.3}), residual {residual:.2e} mm (< 0.05), {minutes:.2} min"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_laminate() {
    let o = scenario("laminate", 4.0);
    let s = &o.result.series;
    let el = end_of(s, "wet").elongation;
    // peak damage by ply band, plies counted from the top surface
    let mesh = &o.sim.space.mesh;
    let phi = &o.sim.state.phi;
    let mut peak = [0.0f64; 2];
    for (n, p) in mesh.coords.iter().enumerate() {
        let depth = 3.0 - p[1];
        let ply = (depth / 0.75).floor().min(3.0) as usize;
        let off = depth - 0.75 * ply as f64;
        if off > 1e-9 && off < 0.75 - 1e-9 {
            let k = ply % 2; // 0: longitudinal, 1: transverse
            peak[k] = peak[k].max(phi[n]);
        }
    }
    let minutes = o.wall.as_secs_f64() / 60.0;
    let within = (el - 0.61).abs() <= 0.061;
    let pass = within && peak[0] >= peak[1] && minutes < 30.0;
    report(
        9,
        pass,
        format!(
            "elongation {el:.4} mm (0.61 +- 0.061), peak damage 0deg {:.4} vs 90deg {:.4}, {minutes:.2} min",
            peak[0], peak[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_conservation_and_irreversibility() {
    let c = verify::moisture_conservation(1000).unwrap();
    let runs = [
        ("single_fibre", 2.0),
        ("multi_fibre_sa", 4.0),
        ("multi_fibre_rd", 4.0),
        ("ply", 4.0),
        ("laminate", 4.0),
        ("secp_plate", 4.0),
        ("secp_plate_no_moisture", 4.0),
    ];
    let mut violations = 0;
    let mut parts = Vec::new();
    for (name, scale) in runs {
        let v = scenario(name, scale).result.summary.monotonicity_violations;
        violations += v;
        parts.push(format!("{name} {v}"));
    }
    let pass = c.passed() && violations == 0;
    report(
        10,
        pass,
        format!(
            "drift {:.2e}/step (< 1e-10), damage decreases: {} (total {violations})",
            c.metric,
            parts.join(", ")
        ),
    );
    assert!(pass);
}

/// Nodes with damage at least `level` reachable from `start` along
/// element edges.
fn broken_region(sim: &Simulation, start: usize, level: f64) -> Vec<bool> {
    let mesh = &sim.space.mesh;
    let phi = &sim.state.phi;
    let mut adj = vec![Vec::new(); mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        let conn = mesh.element(e);
        for edge in mesh.order.edges() {
            for w in edge.windows(2) {
                let (a, b) = (conn[w[0]], conn[w[1]]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    let mut seen = vec![false; mesh.num_nodes()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(n) = queue.pop_front() {
        for &m in &adj[n] {
            if !seen[m] && phi[m] >= level {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    seen
}

#[test]
fn criterion_11_cracked_plate() {
    let wet = scenario("secp_plate", 4.0);
    let dry = scenario("secp_plate_no_moisture", 4.0);
    let load = |o: &Outcome| -> Vec<(f64, f64)> {
        stage(&o.result.series, "load").iter().map(|r| (r.elongation, r.reaction)).collect()
    };
    let (lw, ld) = (load(&wet), load(&dry));
    let peak = |c: &[(f64, f64)]| c.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let (pw, pd) = (peak(&lw), peak(&ld));
    // a drop: after the peak the force falls below half of it
    let drop = |c: &[(f64, f64)], p: f64| {
        let k = c.iter().position(|q| q.1 == p).unwrap();
        c[k..].iter().any(|q| q.1 < 0.5 * p)
    };
    let drops = drop(&lw, pw) && drop(&ld, pd);
    let mut connected = true;
    let mut fibre_share = Vec::new();
    for o in [&wet, &dry] {
        let sim = &o.sim;
        let tip = sim.space.mesh.nearest_node(sim.crack.as_ref().unwrap().tip());
        let reach = broken_region(sim, tip, 0.95);
        let right = sim.space.mesh.node_set("right").unwrap();
        connected &= sim.state.phi[tip] >= 0.95 && right.iter().any(|&n| reach[n]);
        let inside = (0..reach.len())
            .filter(|&n| reach[n])
            .filter(|&n| sim.layout.locate(sim.space.mesh.coords[n]).is_some() && sim.indicator.values[n] < 0.5)
            .count();
        fibre_share.push(inside as f64 / reach.iter().filter(|&&r| r).count().max(1) as f64);
    }
    let minutes = [wet.wall, dry.wall].map(|w| w.as_secs_f64() / 60.0);
    let pass = drops && connected && pw <= pd && minutes.iter().all(|&m| m < 30.0);
    report(
        11,
        pass,
        format!(
            "load drop {drops}, tip-to-edge path at phi >= 0.95 {connected} (fibre-core share {:.2}/{:.2}), \
             peak absorbed {pw:.3} N <= dry {pd:.3} N, {:.1}/{:.1} min",
            fibre_share[0], fibre_share[1], minutes[0], minutes[1]
        ),
    );
    assert!(pass);
}
