//! Time-stepped microsimulation of agents following per-leg guidance fields
//! with density-dependent speed.
//!
//! The operational model is deliberately simple: agents follow the negative
//! gradient of their current leg's field at speed
//! `v = v0 * max(0, 1 - rho / rho_max)`, where `rho` is the local density
//! within `density_radius`. A move that would leave guided space is rotated
//! away in 15-degree increments up to 90 degrees; if no rotation works the
//! agent stalls for the step. Assignment only needs congestion-sensitive
//! travel times, so this stands in for any richer operational model.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::grid::{Cell, Grid, Mask};
use crate::routes::RouteSet;
use crate::scalar::{fl, Scalar};
use crate::scenario::Scenario;

/// Simulation parameters. None of these come from a reference result; all
/// are exposed as CLI flags.
#[derive(Clone, Debug)]
pub struct SimParams<S> {
    /// Timestep in seconds.
    pub dt: S,
    /// Free-speed distribution mean, m/s.
    pub v0_mean: S,
    /// Free-speed distribution standard deviation, m/s.
    pub v0_sd: S,
    /// Jam density, persons per square meter.
    pub rho_max: S,
    /// Density sampling radius in meters.
    pub density_radius: S,
    /// Demand in persons per hour.
    pub demand_per_hour: S,
    /// Simulated horizon in seconds.
    pub duration: S,
    /// Arrival-time interval over which travel-time statistics are taken.
    pub measure_window: [S; 2],
    pub seed: u64,
}

impl<S: Scalar> Default for SimParams<S> {
    fn default() -> Self {
        Self {
            dt: fl(0.1),
            v0_mean: fl(1.34),
            v0_sd: fl(0.26),
            rho_max: fl(5.4),
            density_radius: fl(1.0),
            demand_per_hour: fl(1000.0),
            duration: fl(900.0),
            measure_window: [fl(300.0), fl(900.0)],
            seed: 42,
        }
    }
}

/// One scheduled pedestrian.
#[derive(Clone, Debug)]
pub struct Spawn<S> {
    pub time: S,
    pub origin_cell: Cell,
    /// Index into the route list the schedule was drawn for.
    pub route: usize,
    pub free_speed: S,
}

/// An active pedestrian.
#[derive(Clone, Debug)]
pub struct Agent<S> {
    pub id: u64,
    pub position: [S; 2],
    pub route: usize,
    pub leg_index: usize,
    pub free_speed: S,
    pub spawn_time: S,
}

/// Travel-time statistics for one route.
#[derive(Clone, Debug)]
pub struct RouteStats<S> {
    /// `Route::id` of the route these counts belong to.
    pub route_id: usize,
    pub count: usize,
    pub mean_tt: Option<S>,
    pub sd_tt: Option<S>,
}

/// Result of one simulation run, measured over the arrival window.
#[derive(Clone, Debug)]
pub struct SimResult<S> {
    pub per_route: Vec<RouteStats<S>>,
    /// Demand-weighted mean travel time over completed trips.
    pub weighted_mean: Option<S>,
    /// Demand-weighted standard deviation of the per-route mean travel
    /// times.
    pub weighted_sd: Option<S>,
    pub spawned: usize,
    pub arrived_in_window: usize,
    /// Agents removed because their route became infeasible.
    pub anomalies: usize,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("probability vector has {got} entries for {want} routes")]
    LengthMismatch { got: usize, want: usize },
    #[error("scenario has no origin cells")]
    NoOrigins,
}

fn validate_probs<S: Scalar>(probs: &[S]) -> Result<(), SimError> {
    if probs.is_empty() {
        return Err(SimError::InvalidProbabilities("empty".into()));
    }
    if probs.iter().any(|p| *p < S::zero()) {
        return Err(SimError::InvalidProbabilities("negative entry".into()));
    }
    let sum: f64 = probs.iter().map(|p| p.to_f64().unwrap()).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SimError::InvalidProbabilities(format!("sum {sum} != 1")));
    }
    Ok(())
}

/// Draw the full spawn schedule: a Poisson arrival process at the demand
/// rate over `[0, duration]`, origin cells uniform, routes sampled from
/// `probs`, free speeds from a truncated normal. Fully determined by the
/// seed; arrival times, cells and speeds come from a stream independent of
/// the route draws, so schedules for different `probs` differ only in the
/// route column.
pub fn spawn_schedule<S: Scalar>(
    params: &SimParams<S>,
    probs: &[S],
    origin_cells: &[Cell],
) -> Result<Vec<Spawn<S>>, SimError> {
    validate_probs(probs)?;
    if origin_cells.is_empty() {
        return Err(SimError::NoOrigins);
    }
    let rate = params.demand_per_hour.to_f64().unwrap() / 3600.0;
    if rate <= 0.0 {
        return Ok(Vec::new());
    }
    let mut base_rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut route_rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
    let exp = Exp::new(rate).expect("positive rate");
    let normal = Normal::new(
        params.v0_mean.to_f64().unwrap(),
        params.v0_sd.to_f64().unwrap().max(f64::EPSILON),
    )
    .expect("valid normal");
    let (v_lo, v_hi) = (
        0.5 * params.v0_mean.to_f64().unwrap(),
        1.5 * params.v0_mean.to_f64().unwrap(),
    );
    let duration = params.duration.to_f64().unwrap();
    let cum: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p.to_f64().unwrap();
            Some(*acc)
        })
        .collect();

    let mut schedule = Vec::new();
    let mut t = 0.0f64;
    loop {
        t += exp.sample(&mut base_rng);
        if t > duration {
            break;
        }
        let cell = origin_cells[base_rng.gen_range(0..origin_cells.len())];
        let mut v = normal.sample(&mut base_rng);
        let mut tries = 0;
        while !(v_lo..=v_hi).contains(&v) && tries < 1000 {
            v = normal.sample(&mut base_rng);
            tries += 1;
        }
        if !(v_lo..=v_hi).contains(&v) {
            v = params.v0_mean.to_f64().unwrap();
        }
        let u: f64 = route_rng.gen();
        let route = cum.iter().position(|&c| u < c).unwrap_or(probs.len() - 1);
        schedule.push(Spawn {
            time: fl(t),
            origin_cell: cell,
            route,
            free_speed: fl(v),
        });
    }
    Ok(schedule)
}

/// Live simulation state; step it manually or drive it with
/// [`run_simulation`].
pub struct Simulation<'a, S: Scalar> {
    routes: &'a RouteSet<S>,
    params: &'a SimParams<S>,
    cell_size: S,
    dest_mask: Mask,
    area_masks: BTreeMap<String, Mask>,
    schedule: Vec<Spawn<S>>,
    next_spawn: usize,
    next_agent_id: u64,
    pub time: S,
    pub agents: Vec<Agent<S>>,
    /// (route index, travel time, arrival time) per completed trip.
    pub arrivals: Vec<(usize, S, S)>,
    pub anomalies: usize,
    // Scratch bucket grid for the density query.
    bucket_w: u32,
    bucket_h: u32,
    buckets: Vec<Vec<u32>>,
}

/// Rotation ladder: straight first, then alternating small rotations.
const ROTATIONS_DEG: [f64; 13] = [
    0.0, 15.0, -15.0, 30.0, -30.0, 45.0, -45.0, 60.0, -60.0, 75.0, -75.0, 90.0, -90.0,
];

impl<'a, S: Scalar> Simulation<'a, S> {
    pub fn new(
        scenario: &'a Scenario<S>,
        routes: &'a RouteSet<S>,
        params: &'a SimParams<S>,
        schedule: Vec<Spawn<S>>,
    ) -> Result<Self, SimError> {
        let dest = scenario
            .area(&routes.dest_id)
            .ok_or_else(|| SimError::InvalidProbabilities("route set references missing destination".into()))?;
        let mut dest_mask: Mask = Grid::filled(scenario.width(), scenario.height(), false);
        for &c in &dest.cells {
            dest_mask[c] = true;
        }
        let mut area_masks = BTreeMap::new();
        for area in &routes.areas {
            let mut m: Mask = Grid::filled(scenario.width(), scenario.height(), false);
            for &c in &area.cells {
                m[c] = true;
            }
            area_masks.insert(area.id.clone(), m);
        }
        let radius = params.density_radius.to_f64().unwrap().max(1e-6);
        let bucket_w = ((scenario.width() as f64 * scenario.cell_size().to_f64().unwrap()) / radius)
            .ceil()
            .max(1.0) as u32;
        let bucket_h = ((scenario.height() as f64 * scenario.cell_size().to_f64().unwrap()) / radius)
            .ceil()
            .max(1.0) as u32;
        Ok(Self {
            routes,
            params,
            cell_size: scenario.cell_size(),
            dest_mask,
            area_masks,
            schedule,
            next_spawn: 0,
            next_agent_id: 0,
            time: S::zero(),
            agents: Vec::new(),
            arrivals: Vec::new(),
            anomalies: 0,
            bucket_w,
            bucket_h,
            buckets: vec![Vec::new(); (bucket_w as usize) * (bucket_h as usize)],
        })
    }

    pub fn spawned(&self) -> usize {
        self.next_spawn
    }

    fn bucket_of(&self, pos: [S; 2]) -> (i64, i64) {
        let r = self.params.density_radius.to_f64().unwrap().max(1e-6);
        (
            (pos[0].to_f64().unwrap() / r).floor() as i64,
            (pos[1].to_f64().unwrap() / r).floor() as i64,
        )
    }

    fn rebuild_buckets(&mut self) {
        for b in &mut self.buckets {
            b.clear();
        }
        for (i, agent) in self.agents.iter().enumerate() {
            let (bx, by) = self.bucket_of(agent.position);
            let bx = bx.clamp(0, self.bucket_w as i64 - 1) as usize;
            let by = by.clamp(0, self.bucket_h as i64 - 1) as usize;
            self.buckets[by * self.bucket_w as usize + bx].push(i as u32);
        }
    }

    /// Local density around an agent, persons per square meter, excluding
    /// the agent itself.
    fn density_at(&self, agent_idx: usize) -> S {
        let pos = self.agents[agent_idx].position;
        let r = self.params.density_radius.to_f64().unwrap();
        let r2 = r * r;
        let (bx, by) = self.bucket_of(pos);
        let mut count = 0usize;
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let (nx, ny) = (bx + dx, by + dy);
                if nx < 0 || ny < 0 || nx >= self.bucket_w as i64 || ny >= self.bucket_h as i64 {
                    continue;
                }
                for &other in &self.buckets[(ny as usize) * self.bucket_w as usize + nx as usize] {
                    if other as usize == agent_idx {
                        continue;
                    }
                    let op = self.agents[other as usize].position;
                    let ddx = (op[0] - pos[0]).to_f64().unwrap();
                    let ddy = (op[1] - pos[1]).to_f64().unwrap();
                    if ddx * ddx + ddy * ddy <= r2 {
                        count += 1;
                    }
                }
            }
        }
        fl::<S>(count as f64 / (std::f64::consts::PI * r2))
    }

    fn cell_of(&self, pos: [S; 2]) -> Cell {
        let h = self.cell_size;
        let clamp = |v: S, max: u32| -> u32 {
            let idx = (v / h).floor().to_f64().unwrap_or(0.0) as i64;
            idx.clamp(0, max as i64 - 1) as u32
        };
        Cell::new(
            clamp(pos[0], self.dest_mask.width()),
            clamp(pos[1], self.dest_mask.height()),
        )
    }

    /// Advance the simulation by one timestep. Within the step every agent
    /// reads the previous step's positions (synchronous update).
    pub fn step(&mut self) {
        let dt = self.params.dt;
        // Spawn agents due now.
        while self.next_spawn < self.schedule.len()
            && self.schedule[self.next_spawn].time <= self.time
        {
            let spawn = &self.schedule[self.next_spawn];
            let center = spawn.origin_cell.center_m(self.cell_size.to_f64().unwrap());
            self.agents.push(Agent {
                id: self.next_agent_id,
                position: [fl(center[0]), fl(center[1])],
                route: spawn.route,
                leg_index: 0,
                free_speed: spawn.free_speed,
                spawn_time: spawn.time,
            });
            self.next_agent_id += 1;
            self.next_spawn += 1;
        }

        self.rebuild_buckets();

        // Plan all moves against current positions.
        let mut new_positions: Vec<Option<[S; 2]>> = Vec::with_capacity(self.agents.len());
        let mut failed: Vec<bool> = vec![false; self.agents.len()];
        for i in 0..self.agents.len() {
            let agent = &self.agents[i];
            let route = &self.routes.routes[agent.route];
            let field = &route.guidance[agent.leg_index.min(route.guidance.len() - 1)];
            let cell = self.cell_of(agent.position);
            let dir = match field.gradient_at(cell) {
                Ok(d) => d,
                Err(_) => {
                    failed[i] = true;
                    new_positions.push(None);
                    continue;
                }
            };
            if dir[0] == S::zero() && dir[1] == S::zero() {
                new_positions.push(Some(agent.position));
                continue;
            }
            let rho = self.density_at(i);
            let slow = (S::one() - rho / self.params.rho_max).max(S::zero());
            let speed = agent.free_speed * slow;
            if speed <= S::zero() {
                new_positions.push(Some(agent.position));
                continue;
            }
            let step_len = speed * dt;
            let mut chosen: Option<[S; 2]> = None;
            for deg in ROTATIONS_DEG {
                let (sin, cos) = deg.to_radians().sin_cos();
                let (sin, cos) = (fl::<S>(sin), fl::<S>(cos));
                let rx = dir[0] * cos - dir[1] * sin;
                let ry = dir[0] * sin + dir[1] * cos;
                let cand = [
                    agent.position[0] + rx * step_len,
                    agent.position[1] + ry * step_len,
                ];
                let cx = (cand[0] / self.cell_size).floor().to_f64().unwrap_or(-1.0) as i64;
                let cy = (cand[1] / self.cell_size).floor().to_f64().unwrap_or(-1.0) as i64;
                if !self.dest_mask.in_bounds(cx, cy) {
                    continue;
                }
                let cc = Cell::new(cx as u32, cy as u32);
                if field.is_reachable(cc) {
                    chosen = Some(cand);
                    break;
                }
            }
            // No feasible direction: stall this step.
            new_positions.push(Some(chosen.unwrap_or(agent.position)));
        }

        // Apply moves, then advance legs and record arrivals.
        let arrival_time = self.time + dt;
        let mut removed: Vec<usize> = Vec::new();
        for i in 0..self.agents.len() {
            if failed[i] {
                self.anomalies += 1;
                removed.push(i);
                continue;
            }
            if let Some(p) = new_positions[i] {
                self.agents[i].position = p;
            }
            let cell = self.cell_of(self.agents[i].position);
            let route = &self.routes.routes[self.agents[i].route];
            let leg = self.agents[i].leg_index;
            if leg < route.legs.len() {
                let area_mask = &self.area_masks[&route.legs[leg]];
                if area_mask[cell] {
                    self.agents[i].leg_index += 1;
                }
            } else if self.dest_mask[cell] {
                let tt = arrival_time - self.agents[i].spawn_time;
                self.arrivals.push((self.agents[i].route, tt, arrival_time));
                removed.push(i);
            }
        }
        for &i in removed.iter().rev() {
            self.agents.swap_remove(i);
        }
        self.time = arrival_time;
    }

    /// Step until the configured duration has elapsed.
    pub fn run(&mut self) {
        while self.time < self.params.duration {
            self.step();
        }
    }

    /// Travel-time statistics over the measurement window.
    pub fn result(&self) -> SimResult<S> {
        let window = self.params.measure_window;
        let mut samples: Vec<Vec<S>> = vec![Vec::new(); self.routes.routes.len()];
        let mut arrived = 0usize;
        for &(route, tt, at) in &self.arrivals {
            if at >= window[0] && at <= window[1] {
                samples[route].push(tt);
                arrived += 1;
            }
        }
        let per_route: Vec<RouteStats<S>> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let count = s.len();
                let (mean, sd) = if count == 0 {
                    (None, None)
                } else {
                    let n = fl::<S>(count as f64);
                    let mean = s.iter().fold(S::zero(), |a, &b| a + b) / n;
                    let var = s
                        .iter()
                        .fold(S::zero(), |a, &b| a + (b - mean) * (b - mean))
                        / n;
                    (Some(mean), Some(var.sqrt()))
                };
                RouteStats {
                    route_id: self.routes.routes[i].id,
                    count,
                    mean_tt: mean,
                    sd_tt: sd,
                }
            })
            .collect();
        let (weighted_mean, weighted_sd) = weighted_stats(&per_route);
        SimResult {
            per_route,
            weighted_mean,
            weighted_sd,
            spawned: self.next_spawn,
            arrived_in_window: arrived,
            anomalies: self.anomalies,
        }
    }
}

/// Demand-weighted mean of per-route means, and the demand-weighted
/// standard deviation of the per-route means around it.
pub fn weighted_stats<S: Scalar>(per_route: &[RouteStats<S>]) -> (Option<S>, Option<S>) {
    let total: usize = per_route.iter().map(|r| r.count).sum();
    if total == 0 {
        return (None, None);
    }
    let n = fl::<S>(total as f64);
    let mean = per_route
        .iter()
        .filter_map(|r| r.mean_tt.map(|m| fl::<S>(r.count as f64) * m))
        .fold(S::zero(), |a, b| a + b)
        / n;
    let var = per_route
        .iter()
        .filter_map(|r| {
            r.mean_tt
                .map(|m| fl::<S>(r.count as f64) * (m - mean) * (m - mean))
        })
        .fold(S::zero(), |a, b| a + b)
        / n;
    (Some(mean), Some(var.sqrt()))
}

/// Spawn, step for the whole duration, and report statistics over the
/// measurement window. Deterministic for fixed inputs and seed.
pub fn run_simulation<S: Scalar>(
    scenario: &Scenario<S>,
    routes: &RouteSet<S>,
    probs: &[S],
    params: &SimParams<S>,
) -> Result<SimResult<S>, SimError> {
    if probs.len() != routes.routes.len() {
        return Err(SimError::LengthMismatch { got: probs.len(), want: routes.routes.len() });
    }
    let origin_cells = scenario.origin_cells();
    let schedule = spawn_schedule(params, probs, &origin_cells)?;
    let mut sim = Simulation::new(scenario, routes, params, schedule)?;
    sim.run();
    Ok(sim.result())
}

/// Trajectory dump rows for one run: time_s, agent_id, x_m, y_m, route_id,
/// leg_index.
pub fn run_with_trajectories<S: Scalar>(
    scenario: &Scenario<S>,
    routes: &RouteSet<S>,
    probs: &[S],
    params: &SimParams<S>,
    every_steps: usize,
) -> Result<(SimResult<S>, String), SimError> {
    if probs.len() != routes.routes.len() {
        return Err(SimError::LengthMismatch { got: probs.len(), want: routes.routes.len() });
    }
    let origin_cells = scenario.origin_cells();
    let schedule = spawn_schedule(params, probs, &origin_cells)?;
    let mut sim = Simulation::new(scenario, routes, params, schedule)?;
    let mut csv = String::from("time_s,agent_id,x_m,y_m,route_id,leg_index\n");
    let mut step_no = 0usize;
    while sim.time < params.duration {
        sim.step();
        step_no += 1;
        if step_no % every_steps.max(1) == 0 {
            for a in &sim.agents {
                csv.push_str(&format!(
                    "{:.2},{},{:.3},{:.3},{},{}\n",
                    sim.time.to_f64().unwrap(),
                    a.id,
                    a.position[0].to_f64().unwrap(),
                    a.position[1].to_f64().unwrap(),
                    routes.routes[a.route].id,
                    a.leg_index
                ));
            }
        }
    }
    Ok((sim.result(), csv))
}
