//! Fibre inclusions: circular cross-sections for the micro-scale cells and
//! full-width strips for the ply and laminate idealisations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Domain2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Circle { center: [f64; 2], diameter: f64 },
    /// Horizontal band spanning the whole domain width.
    Strip { y_min: f64, y_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    #[serde(flatten)]
    pub shape: Shape,
    /// In-plane angle of the fibre's longitudinal (1) axis from x, degrees.
    #[serde(default)]
    pub orientation_deg: f64,
}

impl Inclusion {
    pub fn circle(center: [f64; 2], diameter: f64) -> Self {
        Self {
            shape: Shape::Circle { center, diameter },
            orientation_deg: 0.0,
        }
    }

    pub fn strip(y_min: f64, y_max: f64, orientation_deg: f64) -> Self {
        Self {
            shape: Shape::Strip { y_min, y_max },
            orientation_deg,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self.shape {
            Shape::Circle { center, diameter } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                dx * dx + dy * dy <= 0.25 * diameter * diameter
            }
            Shape::Strip { y_min, y_max } => p[1] >= y_min && p[1] <= y_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    #[default]
    Explicit,
    SquareArray,
    Random,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FibreLayout {
    pub kind: LayoutKind,
    pub inclusions: Vec<Inclusion>,
    pub seed: Option<u64>,
    pub min_gap: f64,
}

impl FibreLayout {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn explicit(inclusions: Vec<Inclusion>) -> Self {
        Self {
            kind: LayoutKind::Explicit,
            inclusions,
            seed: None,
            min_gap: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.inclusions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inclusions.is_empty()
    }

    /// Index of the first inclusion containing `p`.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        self.inclusions.iter().position(|inc| inc.contains(p))
    }

    pub fn circles(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.inclusions.iter().filter_map(|inc| match inc.shape {
            Shape::Circle { center, diameter } => Some((center, diameter)),
            Shape::Strip { .. } => None,
        })
    }

    /// Smallest centre distance minus the sum of radii over all circle pairs.
    pub fn min_circle_gap(&self) -> Option<f64> {
        let c: Vec<_> = self.circles().collect();
        let mut best: Option<f64> = None;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                let dist = ((c[i].0[0] - c[j].0[0]).powi(2) + (c[i].0[1] - c[j].0[1]).powi(2)).sqrt();
                let gap = dist - 0.5 * (c[i].1 + c[j].1);
                best = Some(best.map_or(gap, |b: f64| b.min(gap)));
            }
        }
        best
    }

    /// Analytic fibre area fraction of the domain (circles clipped to nothing,
    /// strips clipped to the domain).
    pub fn volume_fraction(&self, domain: &Domain2D) -> f64 {
        let (y0, y1) = (domain.origin[1], domain.origin[1] + domain.height);
        let area: f64 = self
            .inclusions
            .iter()
            .map(|inc| match inc.shape {
                Shape::Circle { diameter, .. } => std::f64::consts::PI * diameter * diameter / 4.0,
                Shape::Strip { y_min, y_max } => (y_max.min(y1) - y_min.max(y0)).max(0.0) * domain.width,
            })
            .sum();
        area / domain.area()
    }
}

/// `rows x cols` fibres centred in the cells of a regular grid.
pub fn place_fibres_square_array(rows: usize, cols: usize, d: f64, domain: &Domain2D) -> Result<FibreLayout> {
    if rows == 0 || cols == 0 {
        return Ok(FibreLayout {
            kind: LayoutKind::SquareArray,
            ..FibreLayout::default()
        });
    }
    if !(d > 0.0) {
        return Err(Error::Parameter(format!("fibre diameter must be positive, got {d}")));
    }
    let px = domain.width / cols as f64;
    let py = domain.height / rows as f64;
    if px < d || py < d {
        return Err(Error::FibreOverlap(format!(
            "pitch {:.6} x {:.6} mm is smaller than the diameter {d} mm",
            px, py
        )));
    }
    let mut inclusions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let center = [
                domain.origin[0] + (c as f64 + 0.5) * px,
                domain.origin[1] + (r as f64 + 0.5) * py,
            ];
            inclusions.push(Inclusion::circle(center, d));
        }
    }
    Ok(FibreLayout {
        kind: LayoutKind::SquareArray,
        inclusions,
        seed: None,
        min_gap: (px.min(py) - d).max(0.0),
    })
}

/// Seeded random sequential placement ("dart throwing"): circles are kept
/// fully inside the domain with half the gap to every edge and at least
/// `d + min_gap` between centres.
pub fn place_fibres_random(n: usize, d: f64, domain: &Domain2D, seed: u64, min_gap: f64) -> Result<FibreLayout> {
    let mut layout = FibreLayout {
        kind: LayoutKind::Random,
        inclusions: Vec::with_capacity(n),
        seed: Some(seed),
        min_gap,
    };
    if n == 0 {
        return Ok(layout);
    }
    if !(d > 0.0) || min_gap < 0.0 {
        return Err(Error::Parameter(format!(
            "invalid fibre diameter {d} or gap {min_gap}"
        )));
    }
    let fraction = n as f64 * std::f64::consts::PI * d * d / 4.0 / domain.area();
    if fraction >= 0.5 {
        return Err(Error::Parameter(format!(
            "target fibre fraction {fraction:.3} is too dense for random placement (limit 0.5)"
        )));
    }
    let margin = 0.5 * (d + min_gap);
    let (x0, x1) = (domain.origin[0] + margin, domain.origin[0] + domain.width - margin);
    let (y0, y1) = (domain.origin[1] + margin, domain.origin[1] + domain.height - margin);
    if x0 > x1 || y0 > y1 {
        return Err(Error::PackingFailure {
            placed: 0,
            requested: n,
            attempts: 0,
        });
    }
    let min_dist2 = (d + min_gap) * (d + min_gap);
    let max_attempts = 20_000 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut attempts = 0;
    while centres.len() < n {
        if attempts >= max_attempts {
            return Err(Error::PackingFailure {
                placed: centres.len(),
                requested: n,
                attempts,
            });
        }
        attempts += 1;
        let p = [rng.gen_range(x0..=x1), rng.gen_range(y0..=y1)];
        let clear = centres
            .iter()
            .all(|c| (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) >= min_dist2);
        if clear {
            centres.push(p);
        }
    }
    layout.inclusions = centres.into_iter().map(|c| Inclusion::circle(c, d)).collect();
    Ok(layout)
}
