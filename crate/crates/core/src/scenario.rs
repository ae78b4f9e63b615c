//! Scenario documents: the JSON form of a world, field model and energy
//! parameters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LippError, Result};
use crate::gp::{FieldModel, Kernel, Point};
use crate::world::{terrain_cost, Edge, EnergyParams, Vertex, World};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    /// Omitted costs are filled in from terrain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPointRecord {
    pub x: f64,
    pub y: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub alpha: f64,
    pub start: usize,
    pub target: usize,
    pub test_points: Vec<TestPointRecord>,
    pub kernel: Kernel,
    pub noise_variance: f64,
    pub energy: EnergyParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: World,
    pub field: FieldModel,
    pub energy: EnergyParams,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(LippError::SchemaVersion {
                found: file.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let vertices: Vec<Vertex> = file
            .vertices
            .iter()
            .map(|r| Vertex {
                id: r.id,
                position: Point::new(r.x, r.y),
                height: r.height,
            })
            .collect();
        let mut edges = Vec::with_capacity(file.edges.len());
        for e in &file.edges {
            let cost = match e.cost {
                Some(c) => c,
                None => {
                    let (Some(u), Some(v)) = (vertices.get(e.u), vertices.get(e.v)) else {
                        return Err(LippError::Input(format!(
                            "edge ({}, {}) references a missing vertex",
                            e.u, e.v
                        )));
                    };
                    terrain_cost(u, v, file.alpha)?
                }
            };
            edges.push(Edge { u: e.u, v: e.v, cost });
        }
        let world = World::new(vertices, edges, file.start, file.target)?;
        let (points, weights) = file
            .test_points
            .iter()
            .map(|t| (Point::new(t.x, t.y), t.weight))
            .unzip();
        let field = FieldModel::new(file.kernel, file.noise_variance, points, weights)?;
        file.energy.validate()?;
        Ok(Self {
            world,
            field,
            energy: file.energy,
            alpha: file.alpha,
            seed: file.seed,
            metadata: file.metadata,
        })
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            vertices: self
                .world
                .vertices()
                .iter()
                .map(|v| VertexRecord {
                    id: v.id,
                    x: v.position.x,
                    y: v.position.y,
                    height: v.height,
                })
                .collect(),
            edges: self
                .world
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    u: e.u,
                    v: e.v,
                    cost: Some(e.cost),
                })
                .collect(),
            alpha: self.alpha,
            start: self.world.start(),
            target: self.world.target(),
            test_points: self
                .field
                .test_points
                .iter()
                .zip(&self.field.test_weights)
                .map(|(p, &w)| TestPointRecord {
                    x: p.x,
                    y: p.y,
                    weight: w,
                })
                .collect(),
            kernel: self.field.kernel,
            noise_variance: self.field.noise_variance,
            energy: self.energy,
            seed: self.seed,
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "schema_version": 1,
        "vertices": [
            {"id": 0, "x": 0.0, "y": 0.0, "height": 0.0},
            {"id": 1, "x": 2.0, "y": 0.0, "height": 1.0},
            {"id": 2, "x": 2.0, "y": 1.0}
        ],
        "edges": [{"u": 0, "v": 1}, {"u": 1, "v": 2, "cost": 0.75}],
        "alpha": 0.5,
        "start": 0,
        "target": 2,
        "test_points": [{"x": 1.0, "y": 1.0, "weight": 2.0}, {"x": 0.0, "y": 1.0}],
        "kernel": {"signal_variance": 1.0, "lengthscale": 0.5},
        "noise_variance": 0.1,
        "energy": {"lambda": 0.5, "base_mass": 1.0, "s_max": 3, "l_max": 5.0, "budget": 4.0},
        "seed": 11
    }"#;

    #[test]
    fn missing_costs_come_from_terrain() {
        let sc = Scenario::from_json(DOC).unwrap();
        assert!((sc.world.cost(0, 1).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(sc.world.cost(1, 2), Some(0.75));
        assert_eq!(sc.field.test_weights, vec![2.0, 1.0]);
        assert_eq!(sc.energy.distance_cap, None);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let sc = Scenario::from_json(DOC).unwrap();
        let once = sc.to_json().unwrap();
        let twice = Scenario::from_json(&once).unwrap().to_json().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn schema_version_is_checked() {
        let doc = DOC.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(
            Scenario::from_json(&doc),
            Err(LippError::SchemaVersion { found: 7, expected: 1 })
        ));
        let doc = DOC.replace("\"schema_version\": 1,", "");
        assert!(matches!(Scenario::from_json(&doc), Err(LippError::Json(_))));
    }
}
