//! Bound checks on a diagnostics series: the finite-time energy
//! envelope, the normalised growth ratios against their asymptotic
//! constants, the narrow-domain crossover, and the Riemann comparison.

use serde::Serialize;

use crate::diagnostics::{monotonicity_violations, perimeter_interpolation_check, DiagnosticsRecord, SampleChecks};
use crate::error::{Error, Result};
use crate::riemann::{prefactors_for_atwood, FluidParams};

/// `√(2/3)`, the sharp constant of the quadratic entropy `s (1 - s)`.
pub const QUADRATIC_ENTROPY_CONSTANT: f64 = 0.816_496_580_927_726;

/// Closed form of `C(F)` for the immiscible flux: `√((2/3) (rho+ - rho-)^2 / (rho+ rho-))`.
pub fn flux_sharp_constant(p: &FluidParams) -> f64 {
    (2.0 / 3.0 * p.delta().powi(2) / (p.rho_plus * p.rho_minus)).sqrt()
}

/// Right-hand side `g + (2C)^(1/2) g^(3/4) e^(3/4)` of the envelope equation.
fn envelope_rate(e: f64, c: f64, g: f64) -> f64 {
    g + (2.0 * c).sqrt() * g.powf(0.75) * e.max(0.0).powf(0.75)
}

/// Integrates `ė = g + (2C)^(1/2) g^(3/4) e^(3/4)`, `e(0) = ep0`, with the
/// classical fourth-order Runge–Kutta method and returns `e` on `t_grid`
/// (non-decreasing, non-negative). Steps never exceed a tenth of the
/// smallest positive spacing of the grid (including the gap from 0).
pub fn envelope_e_with(t_grid: &[f64], ep0: f64, c: f64, g: f64) -> Result<Vec<f64>> {
    if !(ep0 >= 0.0 && ep0.is_finite()) {
        return Err(Error::Domain { what: "E_p(0)", value: ep0, domain: "[0, inf)" });
    }
    if !(c >= 0.0 && g >= 0.0) {
        return Err(Error::Domain { what: "envelope coefficient", value: c.min(g), domain: "[0, inf)" });
    }
    let mut prev = 0.0;
    let mut min_gap = f64::INFINITY;
    for &t in t_grid {
        if !(t >= prev && t.is_finite()) {
            return Err(Error::Domain { what: "envelope time", value: t, domain: "non-decreasing, >= 0" });
        }
        if t > prev {
            min_gap = min_gap.min(t - prev);
        }
        prev = t;
    }
    let h_max = min_gap / 10.0;
    let mut out = Vec::with_capacity(t_grid.len());
    let (mut t, mut e) = (0.0f64, ep0);
    for &target in t_grid {
        let span = target - t;
        if span > 0.0 {
            let n = (span / h_max).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = envelope_rate(e, c, g);
                let k2 = envelope_rate(e + 0.5 * h * k1, c, g);
                let k3 = envelope_rate(e + 0.5 * h * k2, c, g);
                let k4 = envelope_rate(e + h * k3, c, g);
                e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            t = target;
        }
        out.push(e);
    }
    Ok(out)
}

/// [`envelope_e_with`] using the immiscible-flux constant and `g` of `p`.
pub fn envelope_e(t_grid: &[f64], ep0: f64, p: &FluidParams) -> Result<Vec<f64>> {
    envelope_e_with(t_grid, ep0, flux_sharp_constant(p), p.g)
}

/// Asymptotic constants bounding the normalised ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimsupConstants {
    /// `1 / (24 (1 - A^2))`.
    pub energy: f64,
    /// `1 / (12 √(1 - A^2))`.
    pub entropy: f64,
    /// `π / (36 (1 - A^2))`.
    pub perimeter: f64,
}

impl LimsupConstants {
    pub fn for_atwood(a: f64) -> Self {
        let q = 1.0 - a * a;
        LimsupConstants { energy: 1.0 / (24.0 * q), entropy: 1.0 / (12.0 * q.sqrt()), perimeter: std::f64::consts::PI / (36.0 * q) }
    }
}

/// Per-sample row of a [`BoundReport`]. Ratios are NaN at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSample {
    pub t: f64,
    #[serde(rename = "E_p")]
    pub e_p: f64,
    pub envelope: f64,
    /// `E_p - e`; non-positive when the envelope holds.
    pub margin: f64,
    pub r_e: f64,
    pub r_h: f64,
    pub r_p: f64,
    /// `√(2/3) (E_p / g)^(1/2)`, the interpolation bound on `H`.
    pub h_bound: f64,
    /// `∫_0^t P^2`.
    pub perimeter_integral: f64,
    /// `S H`.
    pub perimeter_bound: f64,
}

pub const BOUND_REPORT_HEADER: &str = "t,E_p,envelope,margin,r_e,r_h,r_p,h_bound,perimeter_integral,perimeter_bound";

/// Outcome of [`check_theorem_main`]. The flags depend only on the series
/// and the stated tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub samples: Vec<BoundSample>,
    pub limits: LimsupConstants,
    /// Slack allowed on the envelope: the largest energy-balance drift of the series.
    pub envelope_tolerance: f64,
    pub envelope_ok: bool,
    pub h_interpolation_ok: bool,
    pub h_monotone: bool,
    pub s_monotone: bool,
    pub perimeter_ok: bool,
    /// Pointwise `P^2 <= Ṡ H` with field-based rates, when the rates were supplied.
    pub perimeter_pointwise_ok: Option<bool>,
    /// Sample-wise `max r / limsup constant` over the last half of the run (soft).
    pub late_energy_ratio: f64,
    pub late_entropy_ratio: f64,
    pub late_perimeter_ratio: f64,
    pub config_hash: Option<String>,
}

impl BoundReport {
    /// All hard checks.
    pub fn passed(&self) -> bool {
        self.envelope_ok
            && self.h_interpolation_ok
            && self.h_monotone
            && self.s_monotone
            && self.perimeter_ok
            && self.perimeter_pointwise_ok.unwrap_or(true)
    }

    /// `(name, passed)` for every hard check, in report order.
    pub fn hard_checks(&self) -> Vec<(&'static str, bool)> {
        let mut v = vec![
            ("energy envelope E_p <= e", self.envelope_ok),
            ("entropy interpolation H <= sqrt(2/3) (E_p/g)^(1/2)", self.h_interpolation_ok),
            ("H non-decreasing", self.h_monotone),
            ("S non-decreasing", self.s_monotone),
            ("integrated perimeter int P^2 <= S H", self.perimeter_ok),
        ];
        if let Some(ok) = self.perimeter_pointwise_ok {
            v.push(("pointwise perimeter P^2 <= S_rate H", ok));
        }
        v
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(s)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// One-page text summary with PASS/FAIL per hard check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str("Growth bounds\n");
        if let Some(h) = &self.config_hash {
            s.push_str(&format!("config hash: {h}\n"));
        }
        s.push_str(&format!("samples: {}\n", self.samples.len()));
        if let Some(last) = self.samples.last() {
            s.push_str(&format!("final t: {}\n", last.t));
        }
        s.push_str(&format!("envelope tolerance: {:e}\n\nhard checks\n", self.envelope_tolerance));
        for (name, ok) in self.hard_checks() {
            s.push_str(&format!("  {} {name}\n", if ok { "PASS" } else { "FAIL" }));
        }
        s.push_str("\nasymptotic ratios (reported, not asserted)\n");
        s.push_str(&format!(
            "  r_E late max {:.4e} vs limsup constant {:.4e} ({:.3} of it)\n",
            self.late_energy_ratio * self.limits.energy,
            self.limits.energy,
            self.late_energy_ratio
        ));
        s.push_str(&format!(
            "  r_H late max {:.4e} vs limsup constant {:.4e} ({:.3} of it)\n",
            self.late_entropy_ratio * self.limits.entropy,
            self.limits.entropy,
            self.late_entropy_ratio
        ));
        s.push_str(&format!(
            "  r_P late max {:.4e} vs limsup constant {:.4e} ({:.3} of it)\n",
            self.late_perimeter_ratio * self.limits.perimeter,
            self.limits.perimeter,
            self.late_perimeter_ratio
        ));
        s.push_str(&format!("\noverall: {}\n", if self.passed() { "PASS" } else { "FAIL" }));
        s
    }
}

fn late_max(t: &[f64], r: &[f64], scale: f64) -> f64 {
    let t_end = t.last().copied().unwrap_or(0.0);
    t.iter()
        .zip(r)
        .filter(|(&ti, v)| ti >= 0.5 * t_end && v.is_finite())
        .fold(f64::NAN, |m, (_, &v)| if m.is_nan() { v } else { m.max(v) })
        / scale
}

/// Evaluates the energy, entropy and perimeter bounds on a completed series.
/// `rates` enables the pointwise perimeter check. The envelope starts from
/// the first sample, which need not be at `t = 0`.
pub fn check_theorem_main(series: &[DiagnosticsRecord], rates: Option<&[SampleChecks]>, p: &FluidParams) -> Result<BoundReport> {
    let first = series.first().ok_or_else(|| Error::Config("empty diagnostics series".into()))?;
    let t: Vec<f64> = series.iter().map(|r| r.t - first.t).collect();
    let envelope = envelope_e(&t, first.e_p.max(0.0), p)?;
    let a = p.atwood();
    let g = p.g;
    let tol = series.iter().fold(0.0f64, |m, r| m.max(r.drift.abs()));
    let scale_ep = series.iter().fold(0.0f64, |m, r| m.max(r.e_p.abs()));
    let limits = LimsupConstants::for_atwood(a);

    let mut samples = Vec::with_capacity(series.len());
    let mut envelope_ok = true;
    let mut h_ok = true;
    let mut perimeter_ok = true;
    let mut acc = 0.0;
    for (k, r) in series.iter().enumerate() {
        if k > 0 {
            let prev = &series[k - 1];
            acc += 0.5 * (r.t - prev.t) * (r.p * r.p + prev.p * prev.p);
        }
        let mix = a * g * r.t * r.t;
        let (r_e, r_h, r_p) =
            if mix > 0.0 { (r.e_p / (g * mix * mix), r.h / mix, acc / (mix * mix)) } else { (f64::NAN, f64::NAN, f64::NAN) };
        let margin = r.e_p - envelope[k];
        if margin > tol + 1e-12 * scale_ep {
            envelope_ok = false;
        }
        let h_bound = QUADRATIC_ENTROPY_CONSTANT * (r.e_p.max(0.0) / g).sqrt();
        if r.h > h_bound * (1.0 + 1e-9) + 1e-14 {
            h_ok = false;
        }
        let perimeter_bound = r.s * r.h;
        if acc > perimeter_bound * (1.0 + 1e-9) + 1e-14 {
            perimeter_ok = false;
        }
        samples.push(BoundSample {
            t: r.t,
            e_p: r.e_p,
            envelope: envelope[k],
            margin,
            r_e,
            r_h,
            r_p,
            h_bound,
            perimeter_integral: acc,
            perimeter_bound,
        });
    }
    let h: Vec<f64> = series.iter().map(|r| r.h).collect();
    let s: Vec<f64> = series.iter().map(|r| r.s).collect();
    let mono_tol = |v: &[f64]| 1e-12 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let perimeter_pointwise_ok = rates.map(|c| perimeter_interpolation_check(series, c).ok);
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let late = |f: fn(&BoundSample) -> f64, c: f64| late_max(&ts, &samples.iter().map(f).collect::<Vec<_>>(), c);
    Ok(BoundReport {
        late_energy_ratio: late(|s| s.r_e, limits.energy),
        late_entropy_ratio: late(|s| s.r_h, limits.entropy),
        late_perimeter_ratio: late(|s| s.r_p, limits.perimeter),
        samples,
        limits,
        envelope_tolerance: tol,
        envelope_ok,
        h_interpolation_ok: h_ok,
        h_monotone: monotonicity_violations(&h, mono_tol(&h)).is_empty(),
        s_monotone: monotonicity_violations(&s, mono_tol(&s)).is_empty(),
        perimeter_ok,
        perimeter_pointwise_ok,
        config_hash: None,
    })
}

/// Per-sample row of a [`CrossoverReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverSample {
    pub t: f64,
    /// `H / (A g t^(3/2))`.
    pub h_late: f64,
    /// `H / (A g t^2)`.
    pub h_early: f64,
    /// `E_p / (A^2 g^3 t^3)`.
    pub energy_late: f64,
    /// `E_k / (L^2 g^2 (A t / (1 - A)) H)`, the chain inequality ratio.
    pub chain_ratio: f64,
    /// `∫(rho - rhō)^2 / ((L/2π)^2 ∫ rho_y^2)`, at most 1.
    pub poincare_ratio: f64,
}

pub const CROSSOVER_HEADER: &str = "t,h_late,h_early,energy_late,chain_ratio,poincare_ratio";

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverReport {
    pub l: f64,
    pub samples: Vec<CrossoverSample>,
    /// `L^2 / (1 - A)^(1/2)`.
    pub crossover_time: f64,
    /// `L / (1 - A)^(3/4)`, the reference level of `H / (A g t^(3/2))`.
    pub h_reference: f64,
    /// `L^2 / (1 - A)^(3/2)`, the reference level of `E_p / (A^2 g^3 t^3)`.
    pub energy_reference: f64,
    /// The run ends before the crossover time.
    pub insufficient_horizon: bool,
    /// Time after which `H / (A g t^(3/2))` no longer rises, if it has stopped.
    pub flattening_time: Option<f64>,
    pub poincare_ok: bool,
}

impl CrossoverReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(s)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "crossover (L = {}): reference time {:.4}, H reference {:.4}, E_p reference {:.4}, flattening after {}, horizon {}, Poincare {}\n",
            self.l,
            self.crossover_time,
            self.h_reference,
            self.energy_reference,
            self.flattening_time.map_or("n/a".to_string(), |t| format!("{t:.4}")),
            if self.insufficient_horizon { "INSUFFICIENT" } else { "ok" },
            if self.poincare_ok { "PASS" } else { "FAIL" },
        )
    }
}

/// Relative rise between consecutive samples that still counts as flat.
const FLAT_TOLERANCE: f64 = 0.01;

/// Start of the final stretch over which `r` no longer rises (by more than
/// [`FLAT_TOLERANCE`] per sample). `None` when the curve is still rising at
/// the last sample or has fewer than three finite values.
fn flattening(t: &[f64], r: &[f64]) -> Option<f64> {
    let idx: Vec<usize> = (0..r.len()).filter(|&k| r[k].is_finite()).collect();
    if idx.len() < 3 {
        return None;
    }
    let rises = |a: usize, b: usize| r[b] > r[a] * (1.0 + FLAT_TOLERANCE);
    let n = idx.len();
    if rises(idx[n - 2], idx[n - 1]) {
        return None;
    }
    let mut start = n - 1;
    while start > 0 && !rises(idx[start - 1], idx[start]) {
        start -= 1;
    }
    Some(t[idx[start]])
}

/// Late-time `L`-dependent report. `checks` supplies the Poincaré terms.
pub fn check_crossover(series: &[DiagnosticsRecord], checks: &[SampleChecks], p: &FluidParams, l: f64) -> Result<CrossoverReport> {
    if series.is_empty() {
        return Err(Error::Config("empty diagnostics series".into()));
    }
    let a = p.atwood();
    let g = p.g;
    let mut samples = Vec::with_capacity(series.len());
    let mut poincare_ok = true;
    for (r, c) in series.iter().zip(checks) {
        let t = r.t;
        let nan_if = |d: f64, v: f64| if d > 0.0 { v / d } else { f64::NAN };
        let poincare_ratio = if c.poincare_rhs > 0.0 { c.poincare_lhs / c.poincare_rhs } else { 0.0 };
        if c.poincare_lhs > c.poincare_rhs * (1.0 + 1e-9) + 1e-14 {
            poincare_ok = false;
        }
        samples.push(CrossoverSample {
            t,
            h_late: nan_if(a * g * t.powf(1.5), r.h),
            h_early: nan_if(a * g * t * t, r.h),
            energy_late: nan_if(a * a * g.powi(3) * t.powi(3), r.e_p),
            chain_ratio: nan_if(l * l * g * g * a * t / (1.0 - a) * r.h, r.e_k),
            poincare_ratio,
        });
    }
    let crossover_time = l * l / (1.0 - a).sqrt();
    let t_last = series.last().map_or(0.0, |r| r.t);
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let hl: Vec<f64> = samples.iter().map(|s| s.h_late).collect();
    Ok(CrossoverReport {
        l,
        crossover_time,
        h_reference: l / (1.0 - a).powf(0.75),
        energy_reference: l * l / (1.0 - a).powf(1.5),
        insufficient_horizon: t_last < crossover_time,
        flattening_time: flattening(&ts, &hl),
        samples,
        poincare_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannComparisonSample {
    pub t: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    /// `a+ / (A g t^2)`.
    pub ratio_plus: f64,
    /// `-a- / (A g t^2)`.
    pub ratio_minus: f64,
}

pub const RIEMANN_COMPARISON_HEADER: &str = "t,a_plus,a_minus,ratio_plus,ratio_minus";

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannComparison {
    pub samples: Vec<RiemannComparisonSample>,
    pub alpha_plus: f64,
    pub alpha_minus_abs: f64,
    pub alpha_tilde_plus: f64,
    pub alpha_tilde_minus_abs: f64,
}

impl RiemannComparison {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(s)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Last finite ratios `(plus, minus)`.
    pub fn final_ratios(&self) -> Option<(f64, f64)> {
        self.samples.iter().rev().find(|s| s.ratio_plus.is_finite()).map(|s| (s.ratio_plus, s.ratio_minus))
    }
}

/// Measured edges against the rarefaction and two-shock predictions. Nothing is asserted.
pub fn compare_with_riemann(series: &[DiagnosticsRecord], p: &FluidParams) -> RiemannComparison {
    let a = p.atwood();
    let pre = prefactors_for_atwood(a);
    let samples = series
        .iter()
        .map(|r| {
            let mix = a * p.g * r.t * r.t;
            let (rp, rm) = if mix > 0.0 { (r.a_plus / mix, -r.a_minus / mix) } else { (f64::NAN, f64::NAN) };
            RiemannComparisonSample { t: r.t, a_plus: r.a_plus, a_minus: r.a_minus, ratio_plus: rp, ratio_minus: rm }
        })
        .collect();
    RiemannComparison {
        samples,
        alpha_plus: pre.alpha_plus,
        alpha_minus_abs: -pre.alpha_minus,
        alpha_tilde_plus: pre.alpha_tilde_plus,
        alpha_tilde_minus_abs: -pre.alpha_tilde_minus,
    }
}
