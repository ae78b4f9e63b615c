//! Mission graph, load accounting and transport energy.

use serde::{Deserialize, Serialize};

use crate::error::{input_err, LippError, Result};
use crate::gp::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub position: Point,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

/// Directed graph of sampling locations with a start and a target vertex.
#[derive(Debug, Clone)]
pub struct World {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    start: usize,
    target: usize,
    /// Dense `n x n` cost table, `None` where no edge exists.
    costs: Vec<Option<f64>>,
    /// Outgoing `(head, cost)` per vertex, ascending by cost then head id.
    out: Vec<Vec<(usize, f64)>>,
}

impl World {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>, start: usize, target: usize) -> Result<Self> {
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return input_err(format!("vertex ids must be dense 0..n-1, found {} at {i}", v.id));
            }
            if !v.position.is_finite() || !v.height.is_finite() {
                return input_err(format!("vertex {i} has non-finite geometry"));
            }
        }
        if start >= n || target >= n {
            return input_err(format!("start {start} / target {target} out of range (n = {n})"));
        }
        if start == target {
            return input_err("start and target must differ");
        }
        let mut costs = vec![None; n * n];
        let mut out = vec![Vec::new(); n];
        for e in &edges {
            if e.u >= n || e.v >= n {
                return input_err(format!("edge ({}, {}) references a missing vertex", e.u, e.v));
            }
            if e.u == e.v {
                return input_err(format!("self-loop at vertex {}", e.u));
            }
            if !(e.cost.is_finite() && e.cost > 0.0) {
                return input_err(format!("edge ({}, {}) has invalid cost {}", e.u, e.v, e.cost));
            }
            let slot = &mut costs[e.u * n + e.v];
            if slot.is_some() {
                return input_err(format!("duplicate edge ({}, {})", e.u, e.v));
            }
            *slot = Some(e.cost);
            out[e.u].push((e.v, e.cost));
        }
        for list in &mut out {
            list.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        let world = Self {
            vertices,
            edges,
            start,
            target,
            costs,
            out,
        };
        if world.shortest_from(start, &[])[target].is_infinite() {
            return input_err(format!("target {target} unreachable from start {start}"));
        }
        Ok(world)
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn positions(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| v.position).collect()
    }

    pub fn cost(&self, u: usize, v: usize) -> Option<f64> {
        let n = self.n();
        if u >= n || v >= n {
            return None;
        }
        self.costs[u * n + v]
    }

    pub fn out_edges(&self, u: usize) -> &[(usize, f64)] {
        &self.out[u]
    }

    /// Single-source shortest path costs avoiding `blocked` vertices
    /// (the source itself is never blocked).
    pub fn shortest_from(&self, source: usize, blocked: &[bool]) -> Vec<f64> {
        self.dijkstra(source, blocked, false)
    }

    /// Shortest path costs from every vertex *to* `sink`, avoiding `blocked`.
    pub fn shortest_to(&self, sink: usize, blocked: &[bool]) -> Vec<f64> {
        self.dijkstra(sink, blocked, true)
    }

    /// Shortest `source -> sink` route avoiding `blocked`, as a vertex list.
    pub fn shortest_route(&self, source: usize, sink: usize, blocked: &[bool]) -> Option<(Vec<usize>, f64)> {
        let n = self.n();
        let is_blocked = |v: usize| v != source && blocked.get(v).copied().unwrap_or(false);
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[source] = 0.0;
        loop {
            let next = (0..n)
                .filter(|&v| !done[v] && dist[v].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
            let Some(u) = next else { break };
            done[u] = true;
            if u == sink {
                break;
            }
            for &(v, c) in &self.out[u] {
                if is_blocked(v) || done[v] {
                    continue;
                }
                let cand = dist[u] + c;
                if cand < dist[v] {
                    dist[v] = cand;
                    prev[v] = u;
                }
            }
        }
        if !dist[sink].is_finite() {
            return None;
        }
        let mut route = vec![sink];
        let mut cur = sink;
        while cur != source {
            cur = prev[cur];
            route.push(cur);
        }
        route.reverse();
        Some((route, dist[sink]))
    }

    fn dijkstra(&self, root: usize, blocked: &[bool], reverse: bool) -> Vec<f64> {
        let n = self.n();
        let is_blocked = |v: usize| v != root && blocked.get(v).copied().unwrap_or(false);
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[root] = 0.0;
        loop {
            let next = (0..n)
                .filter(|&v| !done[v] && dist[v].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
            let Some(u) = next else { break };
            done[u] = true;
            for w in 0..n {
                if done[w] || is_blocked(w) {
                    continue;
                }
                let c = if reverse {
                    self.costs[w * n + u]
                } else {
                    self.costs[u * n + w]
                };
                if let Some(c) = c {
                    if dist[u] + c < dist[w] {
                        dist[w] = dist[u] + c;
                    }
                }
            }
        }
        dist
    }
}

/// Elevation-scaled traversal cost `|uv| (1 + alpha (h_v - h_u))`.
pub fn terrain_cost(u: &Vertex, v: &Vertex, alpha: f64) -> Result<f64> {
    let cost = u.position.distance(&v.position) * (1.0 + alpha * (v.height - u.height));
    if !(cost.is_finite() && cost > 0.0) {
        return Err(LippError::Scenario(format!(
            "edge ({}, {}) gets nonpositive terrain cost {cost} (alpha = {alpha})",
            u.id, v.id
        )));
    }
    Ok(cost)
}

/// Mass model for physical sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Mass of one sample.
    pub lambda: f64,
    /// Robot mass without samples.
    pub base_mass: f64,
    /// Most samples collectable at one vertex.
    pub s_max: u32,
    /// Most sample mass the robot can carry.
    pub l_max: f64,
    /// Energy budget.
    pub budget: f64,
    /// Optional cap on geometric path length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_cap: Option<f64>,
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return input_err(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.base_mass.is_finite() && self.base_mass > 0.0) {
            return input_err(format!("base mass must be > 0, got {}", self.base_mass));
        }
        if self.s_max < 1 {
            return input_err("s_max must be at least 1");
        }
        if !(self.l_max.is_finite() && self.l_max > 0.0) {
            return input_err(format!("l_max must be > 0, got {}", self.l_max));
        }
        if self.l_max < self.lambda * f64::from(self.s_max) {
            return input_err(format!(
                "l_max {} cannot carry one fully sampled vertex ({} x {})",
                self.l_max, self.lambda, self.s_max
            ));
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return input_err(format!("budget must be > 0, got {}", self.budget));
        }
        if let Some(b) = self.distance_cap {
            if !(b.is_finite() && b > 0.0) {
                return input_err(format!("distance cap must be > 0, got {b}"));
            }
        }
        Ok(())
    }

    pub fn max_mass(&self) -> f64 {
        self.base_mass + self.l_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub vertex: usize,
    pub samples: u32,
}

impl Step {
    pub const fn new(vertex: usize, samples: u32) -> Self {
        Self { vertex, samples }
    }
}

/// An s-t path with per-vertex sample counts and its evaluated metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<Step>,
    /// Posterior variance at the test set.
    pub objective: f64,
    pub energy: f64,
    pub distance: f64,
}

impl Plan {
    pub fn vertex_sequence(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.vertex).collect()
    }

    pub fn total_samples(&self) -> u32 {
        self.steps.iter().map(|s| s.samples).sum()
    }

    /// Number of vertices on the path.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(vertex, count)` pairs with `count >= 1`, ascending by vertex.
    pub fn sampled(&self) -> Vec<(usize, u32)> {
        let mut out: Vec<_> = self
            .steps
            .iter()
            .filter(|s| s.samples > 0)
            .map(|s| (s.vertex, s.samples))
            .collect();
        out.sort_unstable();
        out
    }

    /// Checks path shape and that stored energy and distance match a
    /// recomputation within `1e-9`.
    pub fn verify(&self, world: &World, params: &EnergyParams) -> Result<()> {
        check_simple_path(&self.steps, world)?;
        let energy = path_energy(&self.steps, world, params)?;
        let distance = path_distance(&self.steps, world)?;
        if (energy - self.energy).abs() > 1e-9 || (distance - self.distance).abs() > 1e-9 {
            return input_err(format!(
                "stored energy/distance ({}, {}) differ from recomputed ({energy}, {distance})",
                self.energy, self.distance
            ));
        }
        Ok(())
    }
}

/// First vertex is the start, last is the target, consecutive vertices are
/// joined by edges and nothing repeats.
pub fn check_simple_path(steps: &[Step], world: &World) -> Result<()> {
    let (Some(first), Some(last)) = (steps.first(), steps.last()) else {
        return input_err("empty path");
    };
    if first.vertex != world.start() || last.vertex != world.target() {
        return input_err("path must run from start to target");
    }
    let mut seen = vec![false; world.n()];
    for s in steps {
        if s.vertex >= world.n() {
            return input_err(format!("vertex {} out of range", s.vertex));
        }
        if std::mem::replace(&mut seen[s.vertex], true) {
            return input_err(format!("vertex {} visited twice", s.vertex));
        }
    }
    for w in steps.windows(2) {
        if world.cost(w[0].vertex, w[1].vertex).is_none() {
            return input_err(format!("no edge ({}, {})", w[0].vertex, w[1].vertex));
        }
    }
    Ok(())
}

/// Carried sample mass and total robot mass after collecting at each step.
pub fn load_profile(steps: &[Step], params: &EnergyParams) -> Result<Vec<(f64, f64)>> {
    let mut carried = 0u64;
    let mut profile = Vec::with_capacity(steps.len());
    for s in steps {
        if s.samples > params.s_max {
            return input_err(format!(
                "vertex {} takes {} samples, cap is {}",
                s.vertex, s.samples, params.s_max
            ));
        }
        carried += u64::from(s.samples);
        let load = params.lambda * carried as f64;
        if load > params.l_max + 1e-9 {
            return Err(LippError::InfeasiblePlan(format!(
                "load {load} exceeds capacity {} at vertex {}",
                params.l_max, s.vertex
            )));
        }
        profile.push((load, params.base_mass + load));
    }
    Ok(profile)
}

/// `sum_j d(v_j, v_j+1) R_j`, where `R_j` counts every sample collected up to
/// and including `v_j`. Does not enforce the load cap.
pub fn path_energy(steps: &[Step], world: &World, params: &EnergyParams) -> Result<f64> {
    let mut carried = 0u64;
    let mut energy = 0.0;
    for w in steps.windows(2) {
        carried += u64::from(w[0].samples);
        let mass = params.base_mass + params.lambda * carried as f64;
        energy += edge_cost(world, w[0].vertex, w[1].vertex)? * mass;
    }
    Ok(energy)
}

pub fn path_distance(steps: &[Step], world: &World) -> Result<f64> {
    steps
        .windows(2)
        .map(|w| edge_cost(world, w[0].vertex, w[1].vertex))
        .sum()
}

fn edge_cost(world: &World, u: usize, v: usize) -> Result<f64> {
    world
        .cost(u, v)
        .ok_or_else(|| LippError::Input(format!("no edge ({u}, {v})")))
}

/// Shortest-path cost between every ordered pair (`+inf` when unreachable).
pub fn all_pairs_cost_lower_bounds(world: &World) -> Vec<Vec<f64>> {
    let n = world.n();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (u, row) in dist.iter_mut().enumerate() {
        row[u] = 0.0;
        for &(v, c) in world.out_edges(u) {
            row[v] = row[v].min(c);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + dist[k][j];
                if cand < dist[i][j] {
                    dist[i][j] = cand;
                }
            }
        }
    }
    dist
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn line_world(costs: &[f64]) -> World {
        let n = costs.len() + 1;
        let vertices = (0..n)
            .map(|i| Vertex {
                id: i,
                position: Point::new(i as f64, 0.0),
                height: 0.0,
            })
            .collect();
        let edges = costs
            .iter()
            .enumerate()
            .map(|(i, &c)| Edge {
                u: i,
                v: i + 1,
                cost: c,
            })
            .collect();
        World::new(vertices, edges, 0, n - 1).unwrap()
    }

    fn params(lambda: f64, base: f64) -> EnergyParams {
        EnergyParams {
            lambda,
            base_mass: base,
            s_max: 5,
            l_max: 100.0,
            budget: 10.0,
            distance_cap: None,
        }
    }

    fn vtx(id: usize, x: f64, y: f64, h: f64) -> Vertex {
        Vertex {
            id,
            position: Point::new(x, y),
            height: h,
        }
    }

    #[test]
    fn terrain_cost_hand_values() {
        let a = vtx(0, 0.0, 0.0, 1.0);
        let b = vtx(1, 3.0, 0.0, 1.0);
        assert_eq!(terrain_cost(&a, &b, 0.7).unwrap(), 3.0);
        let lo = vtx(0, 0.0, 0.0, 0.0);
        let hi = vtx(1, 2.0, 0.0, 1.0);
        assert!((terrain_cost(&lo, &hi, 0.5).unwrap() - 3.0).abs() < 1e-15);
        assert!((terrain_cost(&hi, &lo, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(terrain_cost(&hi, &lo, 1.0), Err(LippError::Scenario(_))));
    }

    #[test]
    fn world_rejects_bad_shapes() {
        let vs = vec![vtx(0, 0.0, 0.0, 0.0), vtx(1, 1.0, 0.0, 0.0)];
        assert!(World::new(vs.clone(), vec![Edge { u: 0, v: 0, cost: 1.0 }], 0, 1).is_err());
        assert!(World::new(vs.clone(), vec![Edge { u: 0, v: 1, cost: 0.0 }], 0, 1).is_err());
        assert!(World::new(vs.clone(), vec![Edge { u: 1, v: 0, cost: 1.0 }], 0, 1).is_err());
        assert!(World::new(vs.clone(), vec![Edge { u: 0, v: 1, cost: 1.0 }], 1, 1).is_err());
        assert!(World::new(vs, vec![Edge { u: 0, v: 1, cost: 1.0 }], 0, 1).is_ok());
    }

    #[test]
    fn load_profile_accumulates() {
        let steps = [Step::new(0, 0), Step::new(1, 2), Step::new(2, 1)];
        let prof = load_profile(&steps, &params(1.0, 1.0)).unwrap();
        let masses: Vec<f64> = prof.iter().map(|p| p.1).collect();
        assert_eq!(masses, vec![1.0, 3.0, 4.0]);
        let prof = load_profile(&steps, &params(0.0, 1.0)).unwrap();
        assert!(prof.iter().all(|p| p.1 == 1.0));
        let none = [Step::new(0, 0), Step::new(1, 0)];
        assert!(load_profile(&none, &params(2.0, 1.5))
            .unwrap()
            .iter()
            .all(|p| p.1 == 1.5));
    }

    #[test]
    fn load_profile_rejects_overload() {
        let mut p = params(1.0, 1.0);
        p.l_max = 2.5;
        let steps = [Step::new(0, 2), Step::new(1, 1)];
        assert!(matches!(load_profile(&steps, &p), Err(LippError::InfeasiblePlan(_))));
    }

    #[test]
    fn energy_hand_example() {
        let world = line_world(&[1.0, 1.0]);
        let steps = [Step::new(0, 0), Step::new(1, 2), Step::new(2, 0)];
        assert_eq!(path_energy(&steps, &world, &params(1.0, 1.0)).unwrap(), 4.0);
        let doubled = line_world(&[2.0, 2.0]);
        assert_eq!(path_energy(&steps, &doubled, &params(1.0, 1.0)).unwrap(), 8.0);
    }

    #[test]
    fn massless_energy_is_distance() {
        let world = line_world(&[0.4, 1.3, 2.5]);
        let steps = [Step::new(0, 3), Step::new(1, 1), Step::new(2, 5), Step::new(3, 2)];
        let e = path_energy(&steps, &world, &params(0.0, 1.0)).unwrap();
        let d = path_distance(&steps, &world).unwrap();
        assert!((e - d).abs() < 1e-15);
        assert!((d - 4.2).abs() < 1e-12);
        let e2 = path_energy(&steps, &world, &params(0.0, 2.0)).unwrap();
        assert!((e2 / 2.0 - d).abs() < 1e-12);
    }

    #[test]
    fn missing_edge_is_input_error() {
        let world = line_world(&[1.0, 1.0]);
        let steps = [Step::new(0, 0), Step::new(2, 0)];
        assert!(matches!(path_distance(&steps, &world), Err(LippError::Input(_))));
        assert!(matches!(
            path_energy(&steps, &world, &params(1.0, 1.0)),
            Err(LippError::Input(_))
        ));
    }

    #[test]
    fn single_edge_distance() {
        let world = line_world(&[2.5]);
        assert_eq!(path_distance(&[Step::new(0, 1), Step::new(1, 4)], &world).unwrap(), 2.5);
    }

    #[test]
    fn shortest_paths_small_graphs() {
        let world = line_world(&[3.0]);
        let d = all_pairs_cost_lower_bounds(&world);
        assert_eq!(d[0][1], 3.0);
        assert_eq!(d[0][0], 0.0);
        assert!(d[1][0].is_infinite());

        let vs = vec![vtx(0, 0.0, 0.0, 0.0), vtx(1, 1.0, 0.0, 0.0), vtx(2, 2.0, 0.0, 0.0)];
        let es = vec![
            Edge { u: 0, v: 1, cost: 1.0 },
            Edge { u: 1, v: 2, cost: 1.0 },
            Edge { u: 0, v: 2, cost: 3.0 },
        ];
        let world = World::new(vs, es, 0, 2).unwrap();
        let d = all_pairs_cost_lower_bounds(&world);
        assert_eq!(d[0][2], 2.0);
        assert_eq!(world.shortest_to(2, &[])[0], 2.0);
        let blocked = vec![false, true, false];
        assert_eq!(world.shortest_from(0, &blocked)[2], 3.0);
        let (route, cost) = world.shortest_route(0, 2, &[]).unwrap();
        assert_eq!((route, cost), (vec![0, 1, 2], 2.0));
    }

    #[test]
    fn later_sampling_never_costs_more() {
        // every placement of a fixed sample multiset along a 4-vertex path
        let world = line_world(&[0.7, 1.9, 0.4]);
        let p = params(0.8, 1.0);
        let mut multiset = [0u32, 1, 2, 3];
        let mut perms = Vec::new();
        permute(&mut multiset, 0, &mut perms);
        for a in &perms {
            for b in &perms {
                // b places samples no earlier than a when every prefix sum is smaller
                let dominated = (0..4).all(|i| a[..=i].iter().sum::<u32>() >= b[..=i].iter().sum::<u32>());
                if !dominated {
                    continue;
                }
                let ea = path_energy(&steps_from(a), &world, &p).unwrap();
                let eb = path_energy(&steps_from(b), &world, &p).unwrap();
                assert!(eb <= ea + 1e-12, "{a:?} -> {ea}, {b:?} -> {eb}");
            }
        }
    }

    fn steps_from(counts: &[u32]) -> Vec<Step> {
        counts.iter().enumerate().map(|(i, &c)| Step::new(i, c)).collect()
    }

    fn permute(items: &mut [u32; 4], k: usize, out: &mut Vec<[u32; 4]>) {
        if k == items.len() {
            out.push(*items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, out);
            items.swap(k, i);
        }
    }

    proptest! {
        #[test]
        fn mass_is_monotone_and_energy_dominates(
            costs in prop::collection::vec(0.05..3.0f64, 1..6),
            counts in prop::collection::vec(0u32..4, 7),
            lambda in 0.0..2.0f64,
            base in 0.2..3.0f64,
        ) {
            let world = line_world(&costs);
            let steps: Vec<Step> = (0..world.n()).map(|i| Step::new(i, counts[i])).collect();
            let p = EnergyParams { lambda, base_mass: base, s_max: 3, l_max: 100.0, budget: 1.0, distance_cap: None };
            let prof = load_profile(&steps, &p).unwrap();
            prop_assert!(prof.windows(2).all(|w| w[1].1 >= w[0].1));
            let e = path_energy(&steps, &world, &p).unwrap();
            let d = path_distance(&steps, &world).unwrap();
            prop_assert!(e >= base * d - 1e-12);
            let carries = lambda > 0.0 && counts[..steps.len() - 1].iter().any(|&c| c > 0);
            if !carries {
                prop_assert!((e - base * d).abs() < 1e-9);
            } else {
                prop_assert!(e > base * d);
            }
        }
    }
}
