//! Bulk quantities of a density/velocity state and the runtime checks built
//! on them: energy balance, entropy production, flux domination, perimeter
//! interpolation and the transverse Poincaré inequality.
//!
//! Every integral is the normalized integral `∫ (1/L) ∫ f dy dz` evaluated
//! by the midpoint rule on the cell-centred grid.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{gradient, horizontal_average, normalized_integral, Integral, ScalarField, VelocityField};
use crate::interp::{xlogx, Flux};
use crate::riemann::{FluidParams, ImmiscibleFlux};

/// Default threshold on `|s̄ - s0|` defining the mixing-zone edges.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.01;

/// CSV header of a diagnostics series.
pub const SERIES_HEADER: &str = "t,E_p,E_k,H,S,P,a_minus,a_plus,b_minus,b_plus,drift";

/// One time sample of the bulk quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "E_p")]
    pub e_p: f64,
    #[serde(rename = "E_k")]
    pub e_k: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub a_minus: f64,
    pub a_plus: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    pub drift: f64,
}

/// CSV header of the per-sample check quantities.
pub const CHECKS_HEADER: &str =
    "t,h_rate,s_rate,poincare_lhs,poincare_rhs,domination_lhs,domination_rhs,rho_min,rho_max,mass,truncated,degenerate";

/// Quantities computed alongside each record that the identity and
/// inequality checks need but the series schema does not carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleChecks {
    pub t: f64,
    /// `(2 / (rho+ - rho-)^2) ∫ |∇rho|^2`, the production rate of `H`.
    pub h_rate: f64,
    /// `∫ |∇rho|^2 / ((rho+ - rho)(rho - rho-))`, the production rate of `S`.
    pub s_rate: f64,
    pub poincare_lhs: f64,
    pub poincare_rhs: f64,
    pub domination_lhs: f64,
    pub domination_rhs: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `∫ (rhō - rho0) dz`.
    pub mass: f64,
    pub truncated: bool,
    pub degenerate: bool,
}

/// A record together with its checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub record: DiagnosticsRecord,
    pub checks: SampleChecks,
}

fn s_of(p: &FluidParams, rho: f64) -> f64 {
    p.s_from_rho(rho)
}

/// `(1/(rho+ - rho-)) ∫ (rho0 - rho) g z`.
pub fn potential_energy(rho: &ScalarField, p: &FluidParams) -> Integral {
    let g = rho.grid;
    let avg = horizontal_average(rho);
    let mut value = 0.0;
    let mut edge = 0.0f64;
    let mut scale = 0.0f64;
    for (j, &r) in avg.iter().enumerate() {
        let z = g.z(j);
        let f = (p.rho0(z) - r) * p.g * z;
        value += f;
        scale = scale.max(f.abs());
        if j == 0 || j + 1 == g.nz {
            edge = edge.max(f.abs());
        }
    }
    Integral {
        value: value * g.dz() / p.delta(),
        truncated: scale > 0.0 && edge > crate::fields::TRUNCATION_THRESHOLD * scale,
    }
}

/// `(1/(2 (rho+ - rho-))) ∫ rho |u|^2`, with face densities matching the staggered velocity.
pub fn kinetic_energy(rho: &ScalarField, u: &VelocityField, p: &FluidParams) -> f64 {
    let g = rho.grid;
    let mut sum = 0.0;
    for j in 0..g.nz {
        for i in 0..g.ny {
            let im = (i + g.ny - 1) % g.ny;
            let ry = 0.5 * (rho.at(i, j) + rho.at(im, j));
            sum += ry * u.uy[g.idx(i, j)].powi(2);
            if j > 0 {
                let rz = 0.5 * (rho.at(i, j) + rho.at(i, j - 1));
                sum += rz * u.uz_at(i, j).powi(2);
            }
        }
    }
    0.5 * sum * g.dz() / g.ny as f64 / p.delta()
}

/// `(1/(rho+ - rho-)^2) ∫ (rho+ - rho)(rho - rho-)`.
pub fn entropy_h(rho: &ScalarField, p: &FluidParams) -> f64 {
    let f = rho.map(|r| {
        let s = s_of(p, r);
        s * (1.0 - s)
    });
    normalized_integral(&f).value
}

/// `-∫ [s log s + (1 - s) log (1 - s)]`, with `x log x = 0` at the end states.
pub fn entropy_s(rho: &ScalarField, p: &FluidParams) -> f64 {
    let f = rho.map(|r| {
        let s = s_of(p, r).clamp(0.0, 1.0);
        -(xlogx(s) + xlogx(1.0 - s))
    });
    normalized_integral(&f).value
}

/// `(1/(rho+ - rho-)) ∫ |∇rho|` with centred gradients.
pub fn perimeter(rho: &ScalarField, p: &FluidParams) -> f64 {
    let (gy, gz) = gradient(rho);
    let f = ScalarField { grid: rho.grid, values: gy.values.iter().zip(&gz.values).map(|(a, b)| a.hypot(*b)).collect() };
    normalized_integral(&f).value / p.delta()
}

/// Production rates `(h_rate, s_rate)` of `H` and `S`.
pub fn entropy_rates(rho: &ScalarField, p: &FluidParams) -> (f64, f64) {
    let (gy, gz) = gradient(rho);
    let g = rho.grid;
    let (mut h, mut s) = (0.0, 0.0);
    for k in 0..g.len() {
        let q = gy.values[k].powi(2) + gz.values[k].powi(2);
        h += q;
        let r = rho.values[k];
        let w = (p.rho_plus - r) * (r - p.rho_minus);
        if w > 0.0 {
            s += q / w;
        }
    }
    let norm = g.dz() / g.ny as f64;
    (2.0 * h * norm / p.delta().powi(2), s * norm)
}

/// The horizontally averaged profile `s̄(z) = (rho+ - rhō) / (rho+ - rho-)`.
pub fn averaged_profile(rho: &ScalarField, p: &FluidParams) -> Vec<f64> {
    horizontal_average(rho).into_iter().map(|r| s_of(p, r)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingEdges {
    pub a_minus: f64,
    pub a_plus: f64,
    /// No cell departs from the stratified state by more than the threshold.
    pub degenerate: bool,
}

/// Outermost heights where `|s̄ - s0|` exceeds `theta`, linearly interpolated
/// between cell centres.
pub fn mixing_edges(rho: &ScalarField, p: &FluidParams, theta: f64) -> Result<MixingEdges> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::Domain { what: "edge threshold", value: theta, domain: "(0, 1/2)" });
    }
    let g = rho.grid;
    let sbar = averaged_profile(rho, p);
    let dev: Vec<f64> = sbar
        .iter()
        .enumerate()
        .map(|(j, &s)| (s - if g.z(j) < 0.0 { 1.0 } else { 0.0 }).abs())
        .collect();
    let above: Vec<usize> = (0..g.nz).filter(|&j| dev[j] > theta).collect();
    let (Some(&lo), Some(&hi)) = (above.first(), above.last()) else {
        return Ok(MixingEdges { a_minus: 0.0, a_plus: 0.0, degenerate: true });
    };
    let cross = |j_in: usize, j_out: usize| -> f64 {
        let (d0, d1) = (dev[j_in], dev[j_out]);
        let (z0, z1) = (g.z(j_in), g.z(j_out));
        // the reference state jumps at z = 0, so never interpolate across it
        if (z0 < 0.0) != (z1 < 0.0) || d0 == d1 {
            return 0.5 * (z0 + z1);
        }
        z0 + (z1 - z0) * (d0 - theta) / (d0 - d1)
    };
    let a_plus = if hi + 1 < g.nz { cross(hi, hi + 1) } else { g.z(hi) };
    let a_minus = if lo > 0 { cross(lo, lo - 1) } else { g.z(lo) };
    Ok(MixingEdges { a_minus: a_minus.min(0.0), a_plus: a_plus.max(0.0), degenerate: false })
}

/// `(b_minus, b_plus) = (-a_minus / P, a_plus / P)`; zero when `P` vanishes.
pub fn coarsening_scales(record: &DiagnosticsRecord) -> (f64, f64) {
    if record.p > 0.0 {
        (-record.a_minus / record.p, record.a_plus / record.p)
    } else {
        (0.0, 0.0)
    }
}

/// Transverse harmonic mean `(mean_y 1/rho)^-1` at each height.
pub fn optimal_background(rho: &ScalarField) -> Vec<f64> {
    let g = rho.grid;
    (0..g.nz)
        .map(|j| g.ny as f64 / rho.row(j).iter().map(|r| 1.0 / r).sum::<f64>())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDomination {
    /// `(1/(rho+ - rho-)) ∫ (rho - rhõ)^2 / rho`
    pub lhs: f64,
    /// `∫ F(s̄) dz`
    pub rhs: f64,
    pub ok: bool,
    /// Every row takes at most two values, each within round-off of `rho±`,
    /// so equality is expected.
    pub two_valued: bool,
}

/// Compares the background-field defect with the flux of the averaged profile.
pub fn check_flux_domination(rho: &ScalarField, p: &FluidParams) -> FluxDomination {
    let g = rho.grid;
    let bg = optimal_background(rho);
    let flux = ImmiscibleFlux { params: *p };
    let sbar = averaged_profile(rho, p);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..g.nz {
        lhs += rho.row(j).iter().map(|r| (r - bg[j]).powi(2) / r).sum::<f64>() / g.ny as f64;
        rhs += flux.value(sbar[j].clamp(0.0, 1.0));
    }
    lhs *= g.dz() / p.delta();
    rhs *= g.dz();
    let tol = 1e-12 * p.delta().max(1.0) * 2.0 * g.h;
    let eps = 1e-9 * p.delta();
    let two_valued = rho.values.iter().all(|&r| (r - p.rho_minus).abs() < eps || (r - p.rho_plus).abs() < eps);
    FluxDomination { lhs, rhs, ok: lhs <= rhs + tol, two_valued }
}

/// `(∫ (rho - rhō)^2, (L / 2 pi)^2 ∫ |rho_y|^2)` with the y-derivative taken
/// spectrally, so the inequality holds mode by mode.
pub fn poincare(rho: &ScalarField) -> (f64, f64) {
    let g = rho.grid;
    let n = g.ny;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let kscale = 2.0 * std::f64::consts::PI / g.l;
    for j in 0..g.nz {
        for (b, &v) in buf.iter_mut().zip(rho.row(j)) {
            *b = Complex::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (k, c) in buf.iter().enumerate().skip(1) {
            let kt = k.min(n - k) as f64;
            // Parseval: mean_y |f|^2 = sum_k |f_k|^2 / n^2
            let e = c.norm_sqr() / (n * n) as f64;
            lhs += e;
            rhs += e * (kt * kscale).powi(2);
        }
    }
    let norm = g.dz();
    let c = (g.l / (2.0 * std::f64::consts::PI)).powi(2);
    (lhs * norm, c * rhs * norm)
}

/// `∫ (rhō - rho0) dz`.
pub fn mass_defect(rho: &ScalarField, p: &FluidParams) -> f64 {
    let g = rho.grid;
    horizontal_average(rho).iter().enumerate().map(|(j, r)| r - p.rho0(g.z(j))).sum::<f64>() * g.dz()
}

/// All bulk quantities and checks of one state. `drift` is left at zero;
/// see [`energy_balance_residual`].
pub fn sample(t: f64, rho: &ScalarField, u: &VelocityField, p: &FluidParams, theta: f64) -> Result<Sample> {
    let ep = potential_energy(rho, p);
    let e_k = kinetic_energy(rho, u, p);
    let h = entropy_h(rho, p);
    let s = entropy_s(rho, p);
    let per = perimeter(rho, p);
    let edges = mixing_edges(rho, p, theta)?;
    let (h_rate, s_rate) = entropy_rates(rho, p);
    let (pl, pr) = poincare(rho);
    let dom = check_flux_domination(rho, p);
    let (rho_min, rho_max) = rho.min_max();
    let mut record = DiagnosticsRecord {
        t,
        e_p: ep.value,
        e_k,
        h,
        s,
        p: per,
        a_minus: edges.a_minus,
        a_plus: edges.a_plus,
        b_minus: 0.0,
        b_plus: 0.0,
        drift: 0.0,
    };
    (record.b_minus, record.b_plus) = coarsening_scales(&record);
    let checks = SampleChecks {
        t,
        h_rate,
        s_rate,
        poincare_lhs: pl,
        poincare_rhs: pr,
        domination_lhs: dom.lhs,
        domination_rhs: dom.rhs,
        rho_min,
        rho_max,
        mass: mass_defect(rho, p),
        truncated: ep.truncated,
        degenerate: edges.degenerate,
    };
    Ok(Sample { record, checks })
}

/// Fills `drift = (E_p - E_k - g t) - (E_p(0) - E_k(0))` and returns its maximum magnitude.
pub fn energy_balance_residual(series: &mut [DiagnosticsRecord], g: f64) -> f64 {
    let Some(first) = series.first().copied() else {
        return 0.0;
    };
    let c0 = first.e_p - first.e_k - g * first.t;
    let mut worst = 0.0f64;
    for r in series.iter_mut() {
        r.drift = (r.e_p - r.e_k - g * r.t) - c0;
        worst = worst.max(r.drift.abs());
    }
    worst
}

/// Second-order time derivative on a (possibly nonuniform) grid: three-point
/// centred formula inside, one-sided three-point formulas at the ends.
pub fn time_derivative(t: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if n < 3 || f.len() != n {
        return Err(Error::Config(format!("time derivative needs at least 3 samples, got {n}")));
    }
    let d3 = |i0: usize, at: usize| -> f64 {
        // derivative at t[at] of the quadratic through samples i0..i0+3
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let x = t[at];
        let l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        l0 * f[i0] + l1 * f[i0 + 1] + l2 * f[i0 + 2]
    };
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                d3(0, 0)
            } else if i + 1 == n {
                d3(n - 3, n - 1)
            } else {
                d3(i - 1, i)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProduction {
    pub t: Vec<f64>,
    pub dh_dt: Vec<f64>,
    pub h_rate: Vec<f64>,
    pub ds_dt: Vec<f64>,
    pub s_rate: Vec<f64>,
}

impl EntropyProduction {
    fn rel(a: &[f64], b: &[f64], interior: bool) -> f64 {
        let range = if interior && a.len() > 2 { 1..a.len() - 1 } else { 0..a.len() };
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = range.map(|i| (a[i] - b[i]).abs()).fold(0.0f64, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    /// Largest `|dH/dt - rate|` relative to the largest rate, over interior samples.
    pub fn max_rel_residual_h(&self) -> f64 {
        Self::rel(&self.dh_dt, &self.h_rate, true)
    }

    pub fn max_rel_residual_s(&self) -> f64 {
        Self::rel(&self.ds_dt, &self.s_rate, true)
    }
}

fn uniform_times(t: &[f64]) -> Result<()> {
    if t.len() < 3 {
        return Err(Error::Config(format!("need at least 3 samples, got {}", t.len())));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs())) {
        return Err(Error::Config("samples must be at a uniform, increasing spacing".into()));
    }
    Ok(())
}

/// Compares the time derivatives of `H` and `S` along consecutive density
/// snapshots with their production rates. Needs at least three snapshots at
/// a uniform spacing.
pub fn entropy_production_check(snapshots: &[(f64, ScalarField)], p: &FluidParams) -> Result<EntropyProduction> {
    let t: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
    uniform_times(&t)?;
    let h: Vec<f64> = snapshots.iter().map(|s| entropy_h(&s.1, p)).collect();
    let s: Vec<f64> = snapshots.iter().map(|s| entropy_s(&s.1, p)).collect();
    let (h_rate, s_rate): (Vec<f64>, Vec<f64>) = snapshots.iter().map(|s| entropy_rates(&s.1, p)).unzip();
    Ok(EntropyProduction { dh_dt: time_derivative(&t, &h)?, ds_dt: time_derivative(&t, &s)?, t, h_rate, s_rate })
}

/// [`entropy_production_check`] from a recorded series and its checks, which
/// already carry `H`, `S` and both rates; no snapshots need to be kept.
pub fn entropy_production_from_series(series: &[DiagnosticsRecord], checks: &[SampleChecks]) -> Result<EntropyProduction> {
    if series.len() != checks.len() {
        return Err(Error::Config(format!("{} records but {} check rows", series.len(), checks.len())));
    }
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    uniform_times(&t)?;
    let h: Vec<f64> = series.iter().map(|r| r.h).collect();
    let s: Vec<f64> = series.iter().map(|r| r.s).collect();
    Ok(EntropyProduction {
        dh_dt: time_derivative(&t, &h)?,
        ds_dt: time_derivative(&t, &s)?,
        h_rate: checks.iter().map(|c| c.h_rate).collect(),
        s_rate: checks.iter().map(|c| c.s_rate).collect(),
        t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerimeterCheck {
    /// `P^2 / (S_rate H)` per sample (0 where both vanish).
    pub pointwise_ratio: Vec<f64>,
    /// `∫_0^t P^2` by the trapezoidal rule, per sample.
    pub integrated: Vec<f64>,
    /// `S(t) H(t)` per sample.
    pub bound: Vec<f64>,
    pub ok: bool,
}

/// Checks `P^2 <= S_rate H` at every sample and `∫_0^t P^2 <= S(t) H(t)`.
/// The rates come from the field gradients, for which the pointwise form
/// holds exactly (Cauchy-Schwarz), so only round-off slack is allowed.
pub fn perimeter_interpolation_check(series: &[DiagnosticsRecord], rates: &[SampleChecks]) -> PerimeterCheck {
    let mut pointwise_ratio = Vec::with_capacity(series.len());
    let mut integrated = Vec::with_capacity(series.len());
    let mut bound = Vec::with_capacity(series.len());
    let mut ok = true;
    let mut acc = 0.0;
    for (k, (r, c)) in series.iter().zip(rates).enumerate() {
        let lhs = r.p * r.p;
        let rhs = c.s_rate * r.h;
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > 1.0 + 1e-9 {
            ok = false;
        }
        pointwise_ratio.push(ratio);
        if k > 0 {
            let prev = &series[k - 1];
            acc += 0.5 * (r.t - prev.t) * (lhs + prev.p * prev.p);
        }
        integrated.push(acc);
        let b = r.s * r.h;
        bound.push(b);
        if acc > b * (1.0 + 1e-9) + 1e-14 {
            ok = false;
        }
    }
    PerimeterCheck { pointwise_ratio, integrated, bound, ok }
}

/// Indices where `values` decreases by more than `tol`.
pub fn monotonicity_violations(values: &[f64], tol: f64) -> Vec<usize> {
    values.windows(2).enumerate().filter(|(_, w)| w[1] < w[0] - tol).map(|(k, _)| k + 1).collect()
}

pub fn write_series<W: std::io::Write>(w: W, series: &[DiagnosticsRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in series {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_series<R: std::io::Read>(r: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != SERIES_HEADER {
        return Err(Error::Config(format!("unexpected series header `{headers}`")));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_checks<W: std::io::Write>(w: W, checks: &[SampleChecks]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for c in checks {
        wr.serialize(c)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_checks<R: std::io::Read>(r: R) -> Result<Vec<SampleChecks>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}
