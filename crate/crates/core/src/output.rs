//! Legacy ASCII VTK snapshots, the CSV time series and the run summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::driver::{Event, RunResult, RunSummary, Simulation, StepRecord};
use crate::error::Result;

pub const CSV_HEADER: &str = "time_s,reaction_force_N,C_center,total_moisture,elongation_mm,max_damage,stage";

pub fn csv_row(r: &StepRecord) -> String {
    format!(
        "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{}",
        r.time, r.reaction, r.c_center, r.total_moisture, r.elongation, r.max_damage, r.stage
    )
}

pub fn write_csv<W: Write>(mut w: W, series: &[StepRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in series {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

/// Unstructured grid with nodal displacement, damage, concentration,
/// indicator, stress and history, plus the region tag per cell.
pub fn write_vtk<W: Write>(mut w: W, sim: &Simulation) -> std::io::Result<()> {
    let mesh = &sim.space.mesh;
    let s = &sim.state;
    let n = mesh.num_nodes();
    let ne = mesh.num_elements();
    let npe = mesh.nodes_per_element();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{} t={:e}", sim.config.name, s.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "FIELD FieldData 1")?;
    writeln!(w, "TIME 1 1 double")?;
    writeln!(w, "{:e}", s.time)?;
    writeln!(w, "POINTS {n} double")?;
    for p in &mesh.coords {
        writeln!(w, "{:e} {:e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {ne} {}", ne * (npe + 1))?;
    for e in 0..ne {
        let conn: Vec<String> = mesh.element(e).iter().map(|c| c.to_string()).collect();
        writeln!(w, "{npe} {}", conn.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    let ct = mesh.order.vtk_cell_type();
    for _ in 0..ne {
        writeln!(w, "{ct}")?;
    }
    writeln!(w, "CELL_DATA {ne}")?;
    writeln!(w, "SCALARS region int 1\nLOOKUP_TABLE default")?;
    for r in &mesh.regions {
        writeln!(w, "{}", r.tag())?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "VECTORS displacement double")?;
    for i in 0..n {
        writeln!(w, "{:e} {:e} 0", s.u[2 * i], s.u[2 * i + 1])?;
    }
    let [sxx, syy, sxy] = sim.nodal_stress();
    let history = sim.nodal_history();
    let scalars: [(&str, &[f64]); 7] = [
        ("damage", &s.phi),
        ("concentration", &s.conc),
        ("indicator", &sim.indicator.values),
        ("stress_xx", &sxx),
        ("stress_yy", &syy),
        ("stress_xy", &sxy),
        ("history", &history),
    ];
    for (name, values) in scalars {
        writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
        for v in values.iter() {
            writeln!(w, "{v:e}")?;
        }
    }
    Ok(())
}

pub fn write_summary<W: Write>(mut w: W, s: &RunSummary) -> std::io::Result<()> {
    writeln!(w, "name = \"{}\"", s.name)?;
    writeln!(w, "steps = {}", s.steps)?;
    writeln!(w, "halvings = {}", s.halvings)?;
    writeln!(w, "peak_force_N = {:e}", s.peak_force)?;
    writeln!(w, "peak_force_time_s = {:e}", s.peak_force_time)?;
    writeln!(w, "final_force_N = {:e}", s.final_force)?;
    writeln!(w, "final_elongation_mm = {:e}", s.final_elongation)?;
    writeln!(w, "peak_damage = {:e}", s.peak_damage)?;
    writeln!(w, "monotonicity_violations = {}", s.monotonicity_violations)?;
    writeln!(w, "wall_seconds = {:.3}", s.wall_seconds)?;
    Ok(())
}

/// Observer that writes snapshots and the CSV as the run progresses.
pub struct DirectoryWriter {
    dir: PathBuf,
    vtk_every: usize,
    csv: BufWriter<File>,
    written: Vec<PathBuf>,
}

impl DirectoryWriter {
    pub fn create(dir: &Path, vtk_every: usize) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("series.csv"))?);
        writeln!(csv, "{CSV_HEADER}")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            vtk_every,
            csv,
            written: Vec::new(),
        })
    }

    pub fn snapshots(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn observe(&mut self, sim: &Simulation, rec: &StepRecord, event: Event) -> Result<()> {
        let snapshot = match event {
            Event::Initial => {
                writeln!(self.csv, "{}", csv_row(rec))?;
                Some(format!("{}_initial.vtk", sim.config.name))
            }
            Event::Step { index } => {
                writeln!(self.csv, "{}", csv_row(rec))?;
                (self.vtk_every > 0 && index % self.vtk_every == 0)
                    .then(|| format!("{}_step{index:06}.vtk", sim.config.name))
            }
            Event::StageEnd { stage } => Some(format!("{}_stage{}_{}.vtk", sim.config.name, stage, rec.stage)),
        };
        if let Some(name) = snapshot {
            let path = self.dir.join(name);
            if !self.written.contains(&path) {
                write_vtk(BufWriter::new(File::create(&path)?), sim)?;
                self.written.push(path);
            }
        }
        Ok(())
    }

    pub fn finish(mut self, summary: &RunSummary) -> Result<Vec<PathBuf>> {
        self.csv.flush()?;
        write_summary(BufWriter::new(File::create(self.dir.join("summary.txt"))?), summary)?;
        Ok(self.written)
    }
}

/// Run `sim` to completion writing every output under `dir`.
pub fn run_to_directory(sim: &mut Simulation, dir: &Path) -> Result<(RunResult, Vec<PathBuf>)> {
    let every = sim.config.output.vtk_every;
    let mut writer = DirectoryWriter::create(dir, every)?;
    let result = sim.run_with(|s, r, e| writer.observe(s, r, e))?;
    let files = writer.finish(&result.summary)?;
    Ok((result, files))
}
