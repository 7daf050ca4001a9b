//! Feeds the analytic Riemann solutions through the diagnostics pipeline as
//! y-independent density fields.

use std::str::FromStr;

use crate::diagnostics::{sample, DiagnosticsRecord, SampleChecks, DEFAULT_EDGE_THRESHOLD};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VelocityField};
use crate::riemann::{gebhard_solution, rarefaction_profile, two_shock_profile, FluidParams, RiemannSolution, TimeScaling};

/// Horizontal resolution of a replay; the fields do not depend on `y`.
pub const REPLAY_NY: usize = 4;

/// Headroom of the replay domain over the widest mixing zone.
const DOMAIN_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayKind {
    Rarefaction,
    TwoShock,
    G0Entropy,
}

impl ReplayKind {
    pub fn name(self) -> &'static str {
        match self {
            ReplayKind::Rarefaction => "rarefaction",
            ReplayKind::TwoShock => "two_shock",
            ReplayKind::G0Entropy => "g0_entropy",
        }
    }

    pub fn solution(self, p: &FluidParams, scaling: TimeScaling) -> RiemannSolution {
        let sol = match self {
            ReplayKind::Rarefaction => rarefaction_profile(p),
            ReplayKind::TwoShock => two_shock_profile(p),
            ReplayKind::G0Entropy => gebhard_solution(p),
        };
        sol.with_scaling(scaling)
    }
}

impl FromStr for ReplayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rarefaction" => Ok(ReplayKind::Rarefaction),
            "two_shock" => Ok(ReplayKind::TwoShock),
            "g0_entropy" => Ok(ReplayKind::G0Entropy),
            other => Err(Error::Config(format!("unknown replay kind `{other}` (rarefaction, two_shock, g0_entropy)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayOptions {
    pub nz: usize,
    pub scaling: TimeScaling,
    /// Edge threshold handed to the diagnostics.
    pub theta: f64,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions { nz: 4096, scaling: TimeScaling::ConservationLaw, theta: DEFAULT_EDGE_THRESHOLD }
    }
}

#[derive(Debug, Clone)]
pub struct Replay {
    /// Grid of each sample.
    pub grids: Vec<Grid>,
    pub series: Vec<DiagnosticsRecord>,
    pub checks: Vec<SampleChecks>,
}

/// Samples `kind` at every time of `t_list` on a `REPLAY_NY x nz` grid whose
/// half-height leaves a quarter of headroom above the zone at that time, so
/// every sample of the self-similar profile sees the same resolution. The
/// velocity is zero, so `E_k = 0` and the drift column stays zero.
///
/// A replayed profile is not a solution of the mixing equations, so the
/// perimeter bounds, which rest on the entropy production of the flow, need
/// not hold for it.
pub fn replay_profile(kind: ReplayKind, p: &FluidParams, t_list: &[f64], opts: &ReplayOptions) -> Result<Replay> {
    if let Some(&t) = t_list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Domain { what: "replay time", value: t, domain: "[0, inf)" });
    }
    let sol = kind.solution(p, opts.scaling);
    let mut grids = Vec::with_capacity(t_list.len());
    let mut series = Vec::with_capacity(t_list.len());
    let mut checks = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let (lo, hi) = sol.edges(t);
        let reach = hi.max(-lo);
        let h = if reach > 0.0 { DOMAIN_MARGIN * reach } else { 1.0 };
        let grid = Grid::new(1.0, h, REPLAY_NY, opts.nz)?;
        let u = VelocityField::zeros(grid);
        let rho = ScalarField::from_fn(grid, |_, z| sol.density(z, t));
        let s = sample(t, &rho, &u, p, opts.theta)?;
        series.push(s.record);
        checks.push(s.checks);
        grids.push(grid);
    }
    Ok(Replay { grids, series, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{check_theorem_main, compare_with_riemann};
    use crate::riemann::{prefactors_for_atwood, rarefaction_energy_ratio};

    fn opts(nz: usize, scaling: TimeScaling) -> ReplayOptions {
        ReplayOptions { nz, scaling, ..ReplayOptions::default() }
    }

    fn times() -> Vec<f64> {
        (0..=8).map(|k| 0.25 * k as f64).collect()
    }

    #[test]
    fn rarefaction_saturates_energy_ratio() {
        for a in [0.2, 0.6] {
            let p = FluidParams::from_atwood(a, 1.5).unwrap();
            let r = replay_profile(ReplayKind::Rarefaction, &p, &times(), &opts(4096, TimeScaling::EnergySaturating)).unwrap();
            let report = check_theorem_main(&r.series, None, &p).unwrap();
            let want = 1.0 / (24.0 * (1.0 - a * a));
            for s in &report.samples[1..] {
                assert!((s.r_e / want - 1.0).abs() < 1e-4, "A = {a}, t = {}: {} vs {want}", s.t, s.r_e);
            }
            assert!(report.envelope_ok && report.h_interpolation_ok, "{}", report.summary());
            assert!(r.series.iter().all(|s| s.e_k == 0.0));
        }
    }

    #[test]
    fn default_scaling_is_four_times_larger() {
        let p = FluidParams::from_atwood(0.2, 1.0).unwrap();
        let r = replay_profile(ReplayKind::Rarefaction, &p, &[1.0], &opts(2048, TimeScaling::ConservationLaw)).unwrap();
        let re = r.series[0].e_p / (p.g * (0.2 * p.g).powi(2));
        assert!((re / rarefaction_energy_ratio(0.2, TimeScaling::ConservationLaw) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn edges_match_prefactors() {
        let a = 0.2;
        let p = FluidParams::from_atwood(a, 1.0).unwrap();
        let pre = prefactors_for_atwood(a);
        let rare = replay_profile(ReplayKind::Rarefaction, &p, &times(), &opts(4096, TimeScaling::ConservationLaw)).unwrap();
        let (rp, rm) = compare_with_riemann(&rare.series, &p).final_ratios().unwrap();
        // the threshold cuts the thin tails of the fan
        assert!((rp / pre.alpha_plus - 1.0).abs() < 0.03, "{rp}");
        assert!((rm / -pre.alpha_minus - 1.0).abs() < 0.03, "{rm}");
        let shock = replay_profile(ReplayKind::TwoShock, &p, &times(), &opts(4096, TimeScaling::ConservationLaw)).unwrap();
        let (sp, sm) = compare_with_riemann(&shock.series, &p).final_ratios().unwrap();
        let dz = 2.0 * shock.grids.last().unwrap().h / 4096.0;
        let tol = dz / (a * p.g * 4.0);
        assert!((sp - pre.alpha_tilde_plus).abs() < tol, "{sp}");
        assert!((sm + pre.alpha_tilde_minus).abs() < tol, "{sm}");
    }

    #[test]
    fn hull_entropy_edges_coincide_with_two_shock() {
        let p = FluidParams::from_atwood(0.5, 1.0).unwrap();
        let t = [0.5, 1.0, 2.0];
        let o = ReplayOptions { nz: 8192, theta: 1e-6, ..ReplayOptions::default() };
        let a = replay_profile(ReplayKind::TwoShock, &p, &t, &o).unwrap();
        let b = replay_profile(ReplayKind::G0Entropy, &p, &t, &o).unwrap();
        for ((x, y), g) in a.series.iter().zip(&b.series).zip(&a.grids) {
            let tol = 4.0 * g.h / 8192.0;
            assert!((x.a_plus - y.a_plus).abs() < tol, "{} {}", x.a_plus, y.a_plus);
            assert!((x.a_minus - y.a_minus).abs() < tol, "{} {}", x.a_minus, y.a_minus);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [ReplayKind::Rarefaction, ReplayKind::TwoShock, ReplayKind::G0Entropy] {
            assert_eq!(k.name().parse::<ReplayKind>().unwrap(), k);
        }
        assert!("shock".parse::<ReplayKind>().is_err());
    }
}
