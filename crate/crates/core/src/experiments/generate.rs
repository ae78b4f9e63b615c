use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{input_err, LippError, Result};
use crate::gp::{FieldModel, Kernel, Point};
use crate::scenario::Scenario;
use crate::world::{terrain_cost, EnergyParams, Vertex, World};

/// Low-frequency sinusoids summed into the height field.
const HEIGHT_COMPONENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    /// Probability that each ordered vertex pair is an edge.
    pub density: f64,
    pub seed: u64,
    /// Side of the square that holds vertices and test points.
    pub area: f64,
    pub height_amplitude: f64,
    pub alpha: f64,
    pub signal_variance: f64,
    pub lengthscale: f64,
    pub noise_variance: f64,
    pub test_point_count: usize,
    pub energy: EnergyParams,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n: 8,
            density: 0.4,
            seed: 0,
            area: 1.0,
            height_amplitude: 0.5,
            alpha: 0.2,
            signal_variance: 1.0,
            lengthscale: 0.3,
            noise_variance: 0.5,
            test_point_count: 6,
            energy: EnergyParams {
                lambda: 0.5,
                base_mass: 1.0,
                s_max: 3,
                l_max: 100.0,
                budget: 2.0,
                distance_cap: None,
            },
        }
    }
}

impl ScenarioSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return input_err(format!("need at least 3 vertices, got {}", self.n));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return input_err(format!("density must lie in (0, 1], got {}", self.density));
        }
        if !(self.area.is_finite() && self.area > 0.0) {
            return input_err(format!("area must be > 0, got {}", self.area));
        }
        if !(self.height_amplitude.is_finite() && self.height_amplitude >= 0.0) {
            return input_err("height amplitude must be finite and >= 0");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return input_err("alpha must be finite and >= 0");
        }
        if self.test_point_count == 0 {
            return input_err("need at least one test point");
        }
        Kernel::squared_exponential(self.signal_variance, self.lengthscale)?;
        self.energy.validate()
    }
}

/// Random scenario, fully determined by `spec` (including its seed).
///
/// If the target is unreachable after edge sampling, the shortest missing
/// edge out of the reachable set is added until it is; the number of such
/// repairs is recorded in the metadata.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let uniform_point =
        |rng: &mut ChaCha8Rng| Point::new(rng.random::<f64>() * spec.area, rng.random::<f64>() * spec.area);

    let positions: Vec<Point> = (0..n).map(|_| uniform_point(&mut rng)).collect();
    let waves: Vec<(f64, f64, f64)> = (0..HEIGHT_COMPONENTS)
        .map(|_| {
            let freq = 2.0 * PI * (0.5 + rng.random::<f64>()) / spec.area;
            let angle = 2.0 * PI * rng.random::<f64>();
            let phase = 2.0 * PI * rng.random::<f64>();
            (freq, angle, phase)
        })
        .collect();
    let height = |p: &Point| -> f64 {
        let sum: f64 = waves
            .iter()
            .map(|&(f, a, ph)| (f * (p.x * a.cos() + p.y * a.sin()) + ph).sin())
            .sum();
        spec.height_amplitude * sum / HEIGHT_COMPONENTS as f64
    };
    let vertices: Vec<Vertex> = positions
        .iter()
        .enumerate()
        .map(|(id, p)| Vertex {
            id,
            position: *p,
            height: height(p),
        })
        .collect();

    let mut present = vec![vec![false; n]; n];
    let mut dropped = 0usize;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || rng.random::<f64>() >= spec.density {
                continue;
            }
            match terrain_cost(&vertices[u], &vertices[v], spec.alpha) {
                Ok(cost) => {
                    present[u][v] = true;
                    edges.push(crate::world::Edge { u, v, cost });
                }
                Err(LippError::Scenario(_)) => dropped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let initial_edges = edges.len();

    let (mut s, mut t, mut far) = (0, 1, -1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = positions[i].distance(&positions[j]);
            if d > far {
                (s, t, far) = (i, j, d);
            }
        }
    }

    let mut repaired = 0usize;
    loop {
        let reach = reachable(n, &edges, s);
        if reach[t] {
            break;
        }
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for u in (0..n).filter(|&u| reach[u]) {
            for v in (0..n).filter(|&v| !reach[v] && !present[u][v]) {
                let Ok(cost) = terrain_cost(&vertices[u], &vertices[v], spec.alpha) else {
                    continue;
                };
                let d = positions[u].distance(&positions[v]);
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, u, v, cost));
                }
            }
        }
        let Some((_, u, v, cost)) = best else {
            return Err(LippError::Scenario(format!(
                "seed {}: target unreachable and no edge can repair it",
                spec.seed
            )));
        };
        present[u][v] = true;
        edges.push(crate::world::Edge { u, v, cost });
        repaired += 1;
    }
    edges.sort_by_key(|e| (e.u, e.v));

    let test_points: Vec<Point> = (0..spec.test_point_count).map(|_| uniform_point(&mut rng)).collect();
    let kernel = Kernel::squared_exponential(spec.signal_variance, spec.lengthscale)?;
    let field = FieldModel::with_identity_weights(kernel, spec.noise_variance, test_points)?;
    let world = World::new(vertices, edges, s, t)?;

    let mut metadata = BTreeMap::new();
    metadata.insert("generator".into(), json!(spec));
    metadata.insert("initial_edge_count".into(), json!(initial_edges));
    metadata.insert("repaired_edges".into(), json!(repaired));
    metadata.insert("dropped_nonpositive_edges".into(), json!(dropped));
    Ok(Scenario {
        world,
        field,
        energy: spec.energy,
        alpha: spec.alpha,
        seed: Some(spec.seed),
        metadata,
    })
}

fn reachable(n: usize, edges: &[crate::world::Edge], from: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        for e in edges.iter().filter(|e| e.u == u) {
            if !seen[e.v] {
                seen[e.v] = true;
                stack.push(e.v);
            }
        }
    }
    seen
}
