//! Time integration of the variable-density mixing system on the strip.
//!
//! The density is advanced in conservative flux form (limited third-order
//! upwind advection plus centred diffusion); the velocity by a centred
//! advective step followed by a variable-density projection. Both are
//! wrapped in a two-stage strong-stability-preserving Runge–Kutta step.

mod config;
mod poisson;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{RunConfig, Verification};
pub use poisson::{PoissonSolver, PoissonStats};

use crate::diagnostics::{self, DiagnosticsRecord, Sample};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VelocityField};
use crate::riemann::FluidParams;

/// Relative slack of the maximum principle, `εmp = MAX_PRINCIPLE_SLACK * (rho+ - rho-)`.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VelocityField,
    /// Pressure from the last projection, mean zero.
    pub p_field: ScalarField,
}

impl SimState {
    /// Mirror image under `y -> L - y`.
    pub fn mirrored(&self) -> Self {
        SimState { t: self.t, rho: self.rho.mirrored(), u: self.u.mirrored(), p_field: self.p_field.mirrored() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationKind {
    /// `η = ε cos(2π k y / L)`.
    SingleMode { mode: u32 },
    /// `η = ε Σ w cos(2π k y / L + φ)` over `(k, w, φ)`.
    MultiMode { modes: Vec<(u32, f64, f64)> },
    /// Modes `1..=n_modes` with random weights and phases, scaled so that `max |η| = ε`.
    RandomSeeded { seed: u64, n_modes: u32 },
}

impl PerturbationKind {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationKind::SingleMode { .. } => "single_mode",
            PerturbationKind::MultiMode { .. } => "multi_mode",
            PerturbationKind::RandomSeeded { .. } => "random_seeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Interface displacement amplitude ε.
    pub amplitude: f64,
    /// Interface width δ of the tanh profile.
    pub width: f64,
}

impl PerturbationSpec {
    /// Interface displacement `η(y)` at the cell centres.
    pub fn displacement(&self, grid: &Grid) -> Vec<f64> {
        let ys: Vec<f64> = (0..grid.ny).map(|i| grid.y(i)).collect();
        let wave = |k: u32, y: f64, phase: f64| (2.0 * PI * k as f64 * y / grid.l + phase).cos();
        match &self.kind {
            PerturbationKind::SingleMode { mode } => ys.iter().map(|&y| self.amplitude * wave(*mode, y, 0.0)).collect(),
            PerturbationKind::MultiMode { modes } => ys
                .iter()
                .map(|&y| self.amplitude * modes.iter().map(|&(k, w, ph)| w * wave(k, y, ph)).sum::<f64>())
                .collect(),
            PerturbationKind::RandomSeeded { seed, n_modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let modes: Vec<(u32, f64, f64)> =
                    (1..=*n_modes).map(|k| (k, rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
                let raw: Vec<f64> =
                    ys.iter().map(|&y| modes.iter().map(|&(k, w, ph)| w * wave(k, y, ph)).sum()).collect();
                let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if peak == 0.0 {
                    raw
                } else {
                    raw.iter().map(|v| self.amplitude * v / peak).collect()
                }
            }
        }
    }
}

/// Which way gravity points relative to the density stratification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Heavy fluid on top: Rayleigh–Taylor unstable.
    #[default]
    Unstable,
    /// Gravity reversed, so the heavy fluid sits below.
    Stable,
}

impl Orientation {
    /// Sign multiplying `g` in the momentum equation.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Unstable => 1.0,
            Orientation::Stable => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Unstable => "unstable",
            Orientation::Stable => "stable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Physics {
    #[default]
    Full,
    /// The density diffuses with `u = 0`; the momentum equation is skipped.
    DiffusionOnly,
}

impl Physics {
    pub fn name(self) -> &'static str {
        match self {
            Physics::Full => "full",
            Physics::DiffusionOnly => "diffusion_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub orientation: Orientation,
    pub physics: Physics,
    pub cfl_safety: f64,
    pub cfl_adv: f64,
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            orientation: Orientation::Unstable,
            physics: Physics::Full,
            cfl_safety: 0.8,
            cfl_adv: 0.5,
            poisson_tol: 1e-10,
            poisson_max_iter: 500,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.cfl_adv > 0.0 && self.cfl_adv <= 1.0) {
            return Err(Error::Config(format!("cfl_adv must lie in (0, 1], got {}", self.cfl_adv)));
        }
        if !(self.poisson_tol > 0.0 && self.poisson_tol < 1.0) {
            return Err(Error::Config(format!("poisson_tol must lie in (0, 1), got {}", self.poisson_tol)));
        }
        if self.poisson_max_iter == 0 {
            return Err(Error::Config("poisson_max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Stratified tanh profile displaced by the perturbation, at rest.
pub fn init_state(grid: Grid, p: &FluidParams, pert: &PerturbationSpec) -> Result<SimState> {
    if !(pert.width >= 2.0 * grid.dz()) {
        return Err(Error::Config(format!(
            "interface width {} is below two cells (2 dz = {})",
            pert.width,
            2.0 * grid.dz()
        )));
    }
    if !(pert.amplitude >= 0.0 && pert.amplitude.is_finite()) {
        return Err(Error::Config(format!("perturbation amplitude must be finite and non-negative, got {}", pert.amplitude)));
    }
    if let PerturbationKind::MultiMode { modes } = &pert.kind {
        if modes.is_empty() {
            return Err(Error::Config("multi_mode perturbation needs at least one mode".into()));
        }
    }
    let eta = pert.displacement(&grid);
    let mut rho = ScalarField::constant(grid, 0.0);
    for j in 0..grid.nz {
        let z = grid.z(j);
        for i in 0..grid.ny {
            rho.values[grid.idx(i, j)] = p.rho_minus + p.delta() * 0.5 * (1.0 + ((z - eta[i]) / pert.width).tanh());
        }
    }
    Ok(SimState { t: 0.0, rho, u: VelocityField::zeros(grid), p_field: ScalarField::constant(grid, 0.0) })
}

/// Koren-limited face value from the upwind-upwind, upwind and downwind cells.
#[inline]
fn koren(uu: f64, u: f64, d: f64) -> f64 {
    let b = d - u;
    if b == 0.0 {
        return u;
    }
    let r = (u - uu) / b;
    let psi = (2.0 * r).min((1.0 + 2.0 * r) / 3.0).min(2.0).max(0.0);
    u + 0.5 * psi * b
}

/// `-∇·(u rho) + Δrho` in flux form, with no flux through the walls.
fn density_rhs(rho: &ScalarField, u: &VelocityField, fz: &mut [f64], out: &mut [f64]) {
    let g = rho.grid;
    let (ny, nz) = (g.ny, g.nz);
    let (dy, dz) = (g.dy(), g.dz());
    let r = &rho.values;
    // vertical fluxes on interior faces; face j sits between rows j - 1 and j
    fz[..ny].fill(0.0);
    fz[nz * ny..].fill(0.0);
    fz[ny..nz * ny].par_chunks_mut(ny).enumerate().for_each(|(jm, row)| {
        let j = jm + 1;
        let below2 = if j >= 2 { j - 2 } else { 0 };
        let above = if j + 1 < nz { j + 1 } else { nz - 1 };
        for (i, f) in row.iter_mut().enumerate() {
            let w = u.uz[j * ny + i];
            let lo = r[(j - 1) * ny + i];
            let hi = r[j * ny + i];
            let face = if w >= 0.0 { koren(r[below2 * ny + i], lo, hi) } else { koren(r[above * ny + i], hi, lo) };
            *f = w * face - (hi - lo) / dz;
        }
    });
    let fz = &*fz;
    let nb = Neighbours::new(ny);
    out.par_chunks_mut(ny).enumerate().for_each(|(j, row)| {
        let rr = &r[j * ny..(j + 1) * ny];
        let vv = &u.uy[j * ny..(j + 1) * ny];
        // flux through the y-face left of cell i
        let yflux = |i: usize| {
            let v = vv[i];
            let (lo, hi) = (rr[nb.m1[i]], rr[i]);
            let face = if v >= 0.0 { koren(rr[nb.m2[i]], lo, hi) } else { koren(rr[nb.p1[i]], hi, lo) };
            v * face - (hi - lo) / dy
        };
        let first = yflux(0);
        let mut left = first;
        for i in 0..ny {
            let right = if i + 1 == ny { first } else { yflux(i + 1) };
            row[i] = -(right - left) / dy - (fz[(j + 1) * ny + i] - fz[j * ny + i]) / dz;
            left = right;
        }
    });
}

/// Periodic neighbour indices in y.
struct Neighbours {
    m2: Vec<usize>,
    m1: Vec<usize>,
    p1: Vec<usize>,
}

impl Neighbours {
    fn new(ny: usize) -> Self {
        let at = |i: usize, d: isize| (i as isize + d).rem_euclid(ny as isize) as usize;
        Neighbours {
            m2: (0..ny).map(|i| at(i, -2)).collect(),
            m1: (0..ny).map(|i| at(i, -1)).collect(),
            p1: (0..ny).map(|i| at(i, 1)).collect(),
        }
    }
}

/// Centred advective tendency `-((u - ∇rho/rho)·∇) u - σ g e_z`, without the pressure gradient.
fn momentum_rhs(rho: &ScalarField, u: &VelocityField, gravity: f64, out: &mut VelocityField) {
    let g = rho.grid;
    let (ny, nz) = (g.ny, g.nz);
    let (dy, dz) = (g.dy(), g.dz());
    let r = &rho.values;
    let nb = Neighbours::new(ny);
    // centred vertical density gradient at a cell, mirror ghosts at the walls
    let grad_z = |i: usize, j: usize| {
        let up = if j + 1 < nz { r[(j + 1) * ny + i] } else { r[j * ny + i] };
        let dn = if j > 0 { r[(j - 1) * ny + i] } else { r[j * ny + i] };
        (up - dn) / (2.0 * dz)
    };
    let grad_y = |i: usize, j: usize| (r[j * ny + nb.p1[i]] - r[j * ny + nb.m1[i]]) / (2.0 * dy);

    out.uy.par_chunks_mut(ny).enumerate().for_each(|(j, row)| {
        let jm = if j > 0 { j - 1 } else { 0 };
        let jp = if j + 1 < nz { j + 1 } else { nz - 1 };
        for (i, o) in row.iter_mut().enumerate() {
            let (im, ip) = (nb.m1[i], nb.p1[i]);
            let c = j * ny + i;
            let rf = 0.5 * (r[c] + r[j * ny + im]);
            let vy = u.uy[c] - (r[c] - r[j * ny + im]) / dy / rf;
            let wz = 0.25 * (u.uz[j * ny + im] + u.uz[c] + u.uz[(j + 1) * ny + im] + u.uz[(j + 1) * ny + i]);
            let vz = wz - 0.5 * (grad_z(im, j) + grad_z(i, j)) / rf;
            let dudy = (u.uy[j * ny + ip] - u.uy[j * ny + im]) / (2.0 * dy);
            let dudz = (u.uy[jp * ny + i] - u.uy[jm * ny + i]) / (2.0 * dz);
            *o = -(vy * dudy + vz * dudz);
        }
    });
    out.uz[..ny].fill(0.0);
    out.uz[nz * ny..].fill(0.0);
    out.uz[ny..nz * ny].par_chunks_mut(ny).enumerate().for_each(|(jm1, row)| {
        let j = jm1 + 1;
        for (i, o) in row.iter_mut().enumerate() {
            let (im, ip) = (nb.m1[i], nb.p1[i]);
            let c = j * ny + i;
            let b = (j - 1) * ny + i;
            let rf = 0.5 * (r[c] + r[b]);
            let vz = u.uz[c] - (r[c] - r[b]) / dz / rf;
            let wy = 0.25 * (u.uy[b] + u.uy[(j - 1) * ny + ip] + u.uy[c] + u.uy[j * ny + ip]);
            let vy = wy - 0.5 * (grad_y(i, j - 1) + grad_y(i, j)) / rf;
            let dwdy = (u.uz[j * ny + ip] - u.uz[j * ny + im]) / (2.0 * dy);
            let dwdz = (u.uz[(j + 1) * ny + i] - u.uz[(j - 1) * ny + i]) / (2.0 * dz);
            *o = -(vy * dwdy + vz * dwdz) - gravity;
        }
    });
}

/// Discrete divergence of a staggered field, `(ny * nz)` cell values.
fn divergence_into(u: &VelocityField, out: &mut [f64]) {
    let g = u.grid;
    let (ny, dy, dz) = (g.ny, g.dy(), g.dz());
    out.par_chunks_mut(ny).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let ip = if i + 1 == ny { 0 } else { i + 1 };
            *o = (u.uy[j * ny + ip] - u.uy[j * ny + i]) / dy + (u.uz[(j + 1) * ny + i] - u.uz[j * ny + i]) / dz;
        }
    });
}

/// Maximum absolute discrete divergence.
pub fn max_divergence(u: &VelocityField) -> f64 {
    let mut d = vec![0.0; u.grid.len()];
    divergence_into(u, &mut d);
    d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub struct Solver {
    grid: Grid,
    fluid: FluidParams,
    params: SolverParams,
    poisson: PoissonSolver,
    /// Potential `φ = p dt` of the last solve.
    phi: Vec<f64>,
    /// Pressure of the last solve; `pressure * dt` warm-starts the next one.
    pressure: Vec<f64>,
    div: Vec<f64>,
    fz: Vec<f64>,
    drho: Vec<f64>,
    du: VelocityField,
    last_stats: Option<PoissonStats>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver").field("grid", &self.grid).field("fluid", &self.fluid).field("params", &self.params).finish()
    }
}

impl Solver {
    pub fn new(grid: Grid, fluid: FluidParams, params: SolverParams) -> Result<Self> {
        params.validate()?;
        Ok(Solver {
            grid,
            fluid,
            params,
            poisson: PoissonSolver::new(grid),
            phi: vec![0.0; grid.len()],
            pressure: vec![0.0; grid.len()],
            div: vec![0.0; grid.len()],
            fz: vec![0.0; grid.ny * (grid.nz + 1)],
            drho: vec![0.0; grid.len()],
            du: VelocityField::zeros(grid),
            last_stats: None,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn fluid(&self) -> &FluidParams {
        &self.fluid
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Statistics of the most recent pressure solve.
    pub fn last_poisson_stats(&self) -> Option<PoissonStats> {
        self.last_stats
    }

    /// `safety * min(cfl_adv * h / max|u|, h^2 / 4)` with `h = min(dy, dz)`.
    pub fn cfl_dt(&self, s: &SimState) -> f64 {
        let h = self.grid.dy().min(self.grid.dz());
        let diffusive = h * h / 4.0;
        let umax = s.u.max_speed();
        let advective = if umax > 0.0 { self.params.cfl_adv * h / umax } else { f64::INFINITY };
        self.params.cfl_safety * advective.min(diffusive)
    }

    /// Step size keeping each forward-Euler stage of the density update a
    /// convex combination of neighbouring values.
    pub fn monotone_dt(&self, s: &SimState) -> f64 {
        let (dy, dz) = (self.grid.dy(), self.grid.dz());
        let uy = s.u.uy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let uz = s.u.uz.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        0.9 / (2.0 / (dy * dy) + 2.0 / (dz * dz) + 4.0 * (uy / dy + uz / dz))
    }

    /// The largest step `run` takes from this state.
    pub fn stable_dt(&self, s: &SimState) -> f64 {
        self.cfl_dt(s).min(self.monotone_dt(s))
    }

    /// Projects `u_star` onto discretely divergence-free fields with density
    /// `rho`, returning the corrected velocity and the pressure `φ / dt`.
    pub fn project(&mut self, u_star: &VelocityField, rho: &ScalarField, dt: f64) -> Result<(VelocityField, ScalarField)> {
        let mut u = u_star.clone();
        self.project_in_place(&mut u, rho, dt)?;
        let p = ScalarField { grid: self.grid, values: self.pressure.clone() };
        Ok((u, p))
    }

    fn project_in_place(&mut self, u: &mut VelocityField, rho: &ScalarField, dt: f64) -> Result<()> {
        let g = self.grid;
        let (ny, nz, dy, dz) = (g.ny, g.nz, g.dy(), g.dz());
        divergence_into(u, &mut self.div);
        self.div.iter_mut().for_each(|v| *v = -*v);
        self.poisson.set_density(rho);
        for (phi, p) in self.phi.iter_mut().zip(&self.pressure) {
            *phi = p * dt;
        }
        let stats = self.poisson.solve(&self.div, &mut self.phi, self.params.poisson_tol, self.params.poisson_max_iter)?;
        self.last_stats = Some(stats);
        for (p, phi) in self.pressure.iter_mut().zip(&self.phi) {
            *p = phi / dt;
        }
        let phi = &self.phi;
        let poisson = &self.poisson;
        u.uy.par_chunks_mut(ny).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                let im = if i == 0 { ny - 1 } else { i - 1 };
                *v -= poisson.beta_y(i, j) * (phi[j * ny + i] - phi[j * ny + im]) / dy;
            }
        });
        u.uz[ny..nz * ny].par_chunks_mut(ny).enumerate().for_each(|(jm, row)| {
            let j = jm + 1;
            for (i, v) in row.iter_mut().enumerate() {
                *v -= poisson.beta_z(i, j) * (phi[j * ny + i] - phi[(j - 1) * ny + i]) / dz;
            }
        });
        Ok(())
    }

    fn check(&self, s: &SimState) -> Result<()> {
        if !s.rho.is_finite() || !s.u.is_finite() || !s.p_field.is_finite() {
            return Err(Error::Instability { t: s.t });
        }
        let slack = MAX_PRINCIPLE_SLACK * self.fluid.delta();
        let (min, max) = s.rho.min_max();
        if min < self.fluid.rho_minus - slack || max > self.fluid.rho_plus + slack {
            return Err(Error::MaxPrinciple { t: s.t, min, max });
        }
        Ok(())
    }

    /// One Heun (SSP-RK2) step of size `dt`.
    pub fn step(&mut self, s: &SimState, dt: f64) -> Result<SimState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let full = self.params.physics == Physics::Full;
        let gravity = self.params.orientation.sign() * self.fluid.g;
        let n = self.grid.len();

        // stage 1
        density_rhs(&s.rho, &s.u, &mut self.fz, &mut self.drho);
        let mut rho1 = s.rho.clone();
        for k in 0..n {
            rho1.values[k] += dt * self.drho[k];
        }
        let mut u1 = s.u.clone();
        if full {
            let mut du = std::mem::replace(&mut self.du, VelocityField::zeros(self.grid));
            momentum_rhs(&s.rho, &s.u, gravity, &mut du);
            axpy(&mut u1, dt, &du);
            self.du = du;
            if !u1.is_finite() {
                return Err(Error::Instability { t: s.t + dt });
            }
            self.project_in_place(&mut u1, &s.rho, dt)?;
        }

        // stage 2
        density_rhs(&rho1, &u1, &mut self.fz, &mut self.drho);
        let mut rho = s.rho.clone();
        for k in 0..n {
            rho.values[k] = 0.5 * (s.rho.values[k] + rho1.values[k] + dt * self.drho[k]);
        }
        let mut u = s.u.clone();
        if full {
            let mut u2 = u1.clone();
            let mut du = std::mem::replace(&mut self.du, VelocityField::zeros(self.grid));
            momentum_rhs(&rho1, &u1, gravity, &mut du);
            axpy(&mut u2, dt, &du);
            self.du = du;
            if !u2.is_finite() {
                return Err(Error::Instability { t: s.t + dt });
            }
            self.project_in_place(&mut u2, &rho1, dt)?;
            for (a, b) in u.uy.iter_mut().zip(&u2.uy) {
                *a = 0.5 * (*a + b);
            }
            for (a, b) in u.uz.iter_mut().zip(&u2.uz) {
                *a = 0.5 * (*a + b);
            }
        }
        let p_field = if full {
            ScalarField { grid: self.grid, values: self.pressure.clone() }
        } else {
            s.p_field.clone()
        };
        let next = SimState { t: s.t + dt, rho, u, p_field };
        self.check(&next)?;
        Ok(next)
    }
}

fn axpy(u: &mut VelocityField, a: f64, d: &VelocityField) {
    for (x, y) in u.uy.iter_mut().zip(&d.uy) {
        *x += a * y;
    }
    for (x, y) in u.uz.iter_mut().zip(&d.uz) {
        *x += a * y;
    }
}

/// Projects `u_star` with density `rho` (standalone form of [`Solver::project`]).
pub fn pressure_projection(u_star: &VelocityField, rho: &ScalarField, dt: f64, tol: f64) -> Result<(VelocityField, ScalarField)> {
    let (lo, _) = rho.min_max();
    if !(lo > 0.0) {
        return Err(Error::Domain { what: "min rho", value: lo, domain: "(0, inf)" });
    }
    let params = SolverParams { poisson_tol: tol, ..SolverParams::default() };
    let fluid = FluidParams::new(2.0, 1.0, 1.0)?;
    Solver::new(rho.grid, fluid, params)?.project(u_star, rho, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EndTime,
    /// A mixing edge reached the stop fraction of the half-height.
    EdgeReachedWall,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::EndTime => "t_end",
            StopReason::EdgeReachedWall => "edge_stop",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<Sample>,
    pub final_state: SimState,
    pub stop: StopReason,
    pub steps: usize,
    /// Largest `max |∇·u|` seen after any step.
    pub max_divergence: f64,
    /// Largest number of iterations of any pressure solve.
    pub max_poisson_iterations: usize,
}

impl RunOutput {
    pub fn series(&self) -> Vec<DiagnosticsRecord> {
        self.samples.iter().map(|s| s.record).collect()
    }

    pub fn checks(&self) -> Vec<diagnostics::SampleChecks> {
        self.samples.iter().map(|s| s.checks).collect()
    }
}

/// Fills `drift = E_p - σ E_k - g t - const` for a run with gravity sign `σ`
/// and returns its maximum magnitude. For the unstable orientation this is
/// [`diagnostics::energy_balance_residual`].
pub fn energy_drift(series: &mut [DiagnosticsRecord], g: f64, orientation: Orientation) -> f64 {
    if orientation == Orientation::Unstable {
        return diagnostics::energy_balance_residual(series, g);
    }
    let sigma = orientation.sign();
    let Some(first) = series.first().copied() else {
        return 0.0;
    };
    let c0 = first.e_p - sigma * first.e_k - g * first.t;
    let mut worst = 0.0f64;
    for r in series.iter_mut() {
        r.drift = (r.e_p - sigma * r.e_k - g * r.t) - c0;
        worst = worst.max(r.drift.abs());
    }
    worst
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_, _| Ok(()))
}

/// Integrates the configured run, calling `on_sample` with the state and
/// diagnostics at every sample time.
pub fn run_with(config: &RunConfig, mut on_sample: impl FnMut(&SimState, &Sample) -> Result<()>) -> Result<RunOutput> {
    config.validate()?;
    let grid = config.grid()?;
    let fluid = config.fluid()?;
    let mut solver = Solver::new(grid, fluid, config.solver_params())?;
    let mut state = init_state(grid, &fluid, &config.perturbation)?;
    let theta = config.edge_threshold;
    let stop_at = config.stop_fraction * grid.h;

    let mut samples = Vec::new();
    let first = diagnostics::sample(0.0, &state.rho, &state.u, &fluid, theta)?;
    on_sample(&state, &first)?;
    samples.push(first);

    let mut steps = 0;
    let mut max_div = 0.0f64;
    let mut max_iter = 0;
    let mut stop = StopReason::EndTime;
    let mut next_index = 1u64;
    let interval = config.sample_interval;
    let mut sampled_last = true;
    while state.t < config.t_end {
        let next_sample = (next_index as f64 * interval).min(config.t_end);
        let mut dt = solver.stable_dt(&state);
        let remaining = next_sample - state.t;
        // land exactly on sample times, avoiding a sliver step just before one
        if dt >= remaining || remaining - dt < 1e-9 * remaining.max(1.0) {
            dt = remaining;
        }
        let t_now = state.t;
        let mut next = solver.step(&state, dt).map_err(|e| e.at_time(t_now))?;
        let on_sample_time = dt == remaining;
        if on_sample_time {
            next.t = next_sample;
        }
        state = next;
        steps += 1;
        if solver.params.physics == Physics::Full {
            max_div = max_div.max(max_divergence(&state.u));
            max_iter = max_iter.max(solver.last_stats.map_or(0, |s| s.iterations));
        }
        sampled_last = false;
        if on_sample_time {
            let s = diagnostics::sample(state.t, &state.rho, &state.u, &fluid, theta).map_err(|e| e.at_time(state.t))?;
            on_sample(&state, &s)?;
            samples.push(s);
            sampled_last = true;
            next_index += 1;
        }
        let edges = diagnostics::mixing_edges(&state.rho, &fluid, theta).map_err(|e| e.at_time(state.t))?;
        if edges.a_plus.max(-edges.a_minus) >= stop_at {
            stop = StopReason::EdgeReachedWall;
            break;
        }
    }
    if !sampled_last {
        let s = diagnostics::sample(state.t, &state.rho, &state.u, &fluid, theta).map_err(|e| e.at_time(state.t))?;
        on_sample(&state, &s)?;
        samples.push(s);
    }
    let mut series: Vec<DiagnosticsRecord> = samples.iter().map(|s| s.record).collect();
    energy_drift(&mut series, fluid.g, config.orientation);
    for (s, r) in samples.iter_mut().zip(series) {
        s.record = r;
    }
    Ok(RunOutput { samples, final_state: state, stop, steps, max_divergence: max_div, max_poisson_iterations: max_iter })
}

#[cfg(test)]
mod tests;
