//! Interpolation between the flux integral and the potential energy of a
//! profile: sharp constants, rearrangement, monotonization and the extremal
//! (rarefaction) profile.
//!
//! A profile is a function `s: R -> [0, 1]` tending to 1 as `z -> -inf` and
//! to 0 as `z -> +inf`. The reference profile `s0` is 1 for `z < 0` and 0 for
//! `z >= 0`. For a concave flux `F` with `F(0) = F(1) = 0`,
//!
//! ```text
//! ∫ F(s) dz <= C(F) (∫ (s - s0) z dz)^(1/2),   C(F) = (2 ∫_0^1 F'(s)^2 ds)^(1/2)
//! ```
//!
//! with equality exactly for `s(z) = (F')^-1(z / tau)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quad;

/// Slack allowed on the interpolation ratio before it is reported as a violation.
pub const RATIO_TOLERANCE: f64 = 1e-6;

/// Growth constants `F(s) <= c1 s^alpha`, `F(s) <= c2 (1 - s)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

/// A concave flux on `[0, 1]` vanishing at both ends.
pub trait Flux: Send + Sync + fmt::Debug {
    fn value(&self, s: f64) -> f64;

    fn derivative(&self, s: f64) -> f64;

    fn name(&self) -> &str;

    fn growth(&self) -> Growth;

    /// Maximiser of the flux, found by bisection on the (decreasing) derivative.
    fn argmax(&self) -> f64 {
        self.derivative_inverse(0.0)
    }

    /// Solves `F'(s) = xi`, clipping to the edge states outside the range of `F'`.
    fn derivative_inverse(&self, xi: f64) -> f64 {
        if xi >= self.derivative(0.0) {
            return 0.0;
        }
        if xi <= self.derivative(1.0) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.derivative(mid) > xi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `h1(s) = s (1 - s)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticEntropy;

impl Flux for QuadraticEntropy {
    fn value(&self, s: f64) -> f64 {
        s * (1.0 - s)
    }
    fn derivative(&self, s: f64) -> f64 {
        1.0 - 2.0 * s
    }
    fn derivative_inverse(&self, xi: f64) -> f64 {
        (0.5 * (1.0 - xi)).clamp(0.0, 1.0)
    }
    fn name(&self) -> &str {
        "quadratic"
    }
    fn growth(&self) -> Growth {
        Growth { c1: 1.0, c2: 1.0, alpha: 1.0 }
    }
}

/// `h2(s) = -(s log s + (1 - s) log(1 - s))`, extended by continuity at the ends.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogEntropy;

pub(crate) fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

impl Flux for LogEntropy {
    fn value(&self, s: f64) -> f64 {
        -(xlogx(s) + xlogx(1.0 - s))
    }
    fn derivative(&self, s: f64) -> f64 {
        ((1.0 - s) / s).ln()
    }
    fn derivative_inverse(&self, xi: f64) -> f64 {
        // logistic; written to avoid overflow for large |xi|
        if xi >= 0.0 {
            let e = (-xi).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + xi.exp())
        }
    }
    fn name(&self) -> &str {
        "log-entropy"
    }
    fn growth(&self) -> Growth {
        // sup_s h2(s) / s^(3/4) is about 1.88, attained near s = 0.044
        Growth { c1: 1.9, c2: 1.9, alpha: 0.75 }
    }
}

/// Checks concavity, the end values and the growth condition on a uniform sample.
pub fn check_admissible(flux: &dyn Flux, samples: usize) -> Result<Growth> {
    let bad = |msg: String| Err(Error::MalformedProfile(format!("flux {}: {msg}", flux.name())));
    if flux.value(0.0).abs() > 1e-14 || flux.value(1.0).abs() > 1e-14 {
        return bad("does not vanish at the end states".into());
    }
    let gr = flux.growth();
    if gr.alpha <= 0.5 {
        return bad(format!("growth exponent {} must exceed 1/2", gr.alpha));
    }
    let h = 1.0 / samples as f64;
    let vals: Vec<f64> = (0..=samples).map(|k| flux.value(k as f64 * h)).collect();
    for k in 1..samples {
        let s = k as f64 * h;
        let second = vals[k - 1] - 2.0 * vals[k] + vals[k + 1];
        if second > 1e-12 {
            return bad(format!("not concave near s = {s}"));
        }
        if vals[k] > gr.c1 * s.powf(gr.alpha) * (1.0 + 1e-12) || vals[k] > gr.c2 * (1.0 - s).powf(gr.alpha) * (1.0 + 1e-12) {
            return bad(format!("growth condition fails at s = {s}"));
        }
    }
    Ok(gr)
}

/// `C(F) = (2 ∫_0^1 F'(s)^2 ds)^(1/2)` by tanh-sinh quadrature, which copes
/// with the integrable end-point singularities of fluxes such as `h2`.
pub fn sharp_constant(flux: &dyn Flux) -> Result<f64> {
    let q = quad::tanh_sinh(|s| flux.derivative(s).powi(2), 0.0, 1.0, 1e-13);
    if !q.converged || !q.value.is_finite() {
        return Err(Error::Quadrature { error: q.error });
    }
    Ok((2.0 * q.value).sqrt())
}

fn s0(z: f64) -> f64 {
    if z < 0.0 {
        1.0
    } else {
        0.0
    }
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    /// Piecewise constant: `values[k]` on `[edges[k], edges[k + 1])`. Zero is always an edge.
    Cells { edges: Vec<f64>, values: Vec<f64> },
    /// Closed form on `[lo, hi]`, smooth between consecutive `breaks`.
    Analytic { eval: ProfileFn, breaks: Vec<f64> },
}

/// A profile, either sampled on cells of a (generally nonuniform) z-grid or
/// given in closed form on a window. Outside its window it equals `s0`.
#[derive(Clone)]
pub struct Profile {
    repr: Repr,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Cells { edges, .. } => write!(f, "Profile::Cells({} cells on [{}, {}])", edges.len().saturating_sub(1), edges.first().unwrap_or(&0.0), edges.last().unwrap_or(&0.0)),
            Repr::Analytic { breaks, .. } => write!(f, "Profile::Analytic(breaks {breaks:?})"),
        }
    }
}

/// Cells per half-line used when a closed-form profile has to be sampled.
pub const DEFAULT_SAMPLES: usize = 4096;

impl Profile {
    /// The stratified profile `s0`.
    pub fn stratified() -> Self {
        Profile { repr: Repr::Cells { edges: vec![], values: vec![] } }
    }

    /// Piecewise-constant profile. `edges` must be strictly increasing with one
    /// more entry than `values`; a cell straddling zero is split there.
    pub fn from_cells(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() && edges.len() <= 1 {
            return Ok(Self::stratified());
        }
        if edges.len() != values.len() + 1 {
            return Err(Error::MalformedProfile(format!("{} edges for {} cells", edges.len(), values.len())));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::MalformedProfile("cell edges must be finite and strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::MalformedProfile(format!("value {v} outside [0, 1]")));
        }
        let (mut e, mut v) = (edges, values);
        if let Some(k) = (0..v.len()).find(|&k| e[k] < 0.0 && e[k + 1] > 0.0) {
            e.insert(k + 1, 0.0);
            let val = v[k];
            v.insert(k, val);
        }
        // a window that does not reach zero is padded with s0 cells
        if e[0] > 0.0 {
            e.insert(0, 0.0);
            v.insert(0, 0.0);
        }
        if *e.last().expect("non-empty") < 0.0 {
            e.push(0.0);
            v.push(1.0);
        }
        Ok(Profile { repr: Repr::Cells { edges: e, values: v } })
    }

    /// Closed-form profile on `[lo, hi]` (with `lo <= 0 <= hi`); `breaks`
    /// lists interior points where `eval` is not smooth.
    pub fn analytic(eval: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64, breaks: &[f64]) -> Self {
        assert!(lo <= 0.0 && hi >= 0.0 && lo.is_finite() && hi.is_finite());
        let mut b: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
        b.extend([lo, 0.0, hi]);
        b.sort_by(f64::total_cmp);
        b.dedup();
        Profile { repr: Repr::Analytic { eval: Arc::new(eval), breaks: b } }
    }

    pub fn window(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Cells { edges, .. } => (edges.first().copied().unwrap_or(0.0), edges.last().copied().unwrap_or(0.0)),
            Repr::Analytic { breaks, .. } => (breaks[0], breaks[breaks.len() - 1]),
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.repr, Repr::Cells { .. })
    }

    /// Cell edges and values of a sampled profile.
    pub fn cells(&self) -> Option<(&[f64], &[f64])> {
        match &self.repr {
            Repr::Cells { edges, values } => Some((edges, values)),
            Repr::Analytic { .. } => None,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Cells { edges, values } => {
                if values.is_empty() || z < edges[0] || z >= edges[edges.len() - 1] {
                    return s0(z);
                }
                let k = edges.partition_point(|&e| e <= z) - 1;
                values[k]
            }
            Repr::Analytic { eval, breaks } => {
                if z < breaks[0] || z > breaks[breaks.len() - 1] {
                    s0(z)
                } else {
                    eval(z)
                }
            }
        }
    }

    /// `∫ h(s) dz` for `h` vanishing at 0 and 1.
    pub fn integral_of(&self, h: impl Fn(f64) -> f64) -> f64 {
        match &self.repr {
            Repr::Cells { edges, values } => values.iter().enumerate().map(|(k, &v)| h(v) * (edges[k + 1] - edges[k])).sum(),
            Repr::Analytic { eval, breaks } => quad::gauss_kronrod_pieces(|z| h(eval(z)), breaks, 1e-13, 1e-15).value,
        }
    }

    pub fn flux_integral(&self, flux: &dyn Flux) -> f64 {
        self.integral_of(|s| flux.value(s))
    }

    /// `∫ (s - s0) z dz`, exact for sampled profiles.
    pub fn potential(&self) -> f64 {
        match &self.repr {
            Repr::Cells { edges, values } => values
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let (a, b) = (edges[k], edges[k + 1]);
                    (v - s0(0.5 * (a + b))) * 0.5 * (b * b - a * a)
                })
                .sum(),
            Repr::Analytic { eval, breaks } => quad::gauss_kronrod_pieces(
                |z| (eval(z) - s0(z)) * z,
                breaks,
                1e-13,
                1e-15,
            )
            .value,
        }
    }

    /// `∫ (s - s0) dz`, which vanishes for solutions of the Riemann problem.
    pub fn mass_defect(&self) -> f64 {
        match &self.repr {
            Repr::Cells { edges, values } => values
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - s0(0.5 * (edges[k] + edges[k + 1]))) * (edges[k + 1] - edges[k]))
                .sum(),
            Repr::Analytic { eval, breaks } => {
                quad::gauss_kronrod_pieces(|z| eval(z) - s0(z), breaks, 1e-13, 1e-15).value
            }
        }
    }

    /// Rough size of the potential carried outside the window: the
    /// boundary defect times the squared window extent.
    pub fn tail_estimate(&self) -> f64 {
        match &self.repr {
            Repr::Cells { .. } => 0.0,
            Repr::Analytic { eval, breaks } => {
                let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
                (1.0 - eval(lo)).abs() * 0.5 * lo * lo + eval(hi).abs() * 0.5 * hi * hi
            }
        }
    }

    /// Samples onto `n` equal cells per half-line using three-point Gauss
    /// cell averages. Sampled profiles are returned unchanged.
    pub fn to_cells(&self, n: usize) -> Profile {
        let Repr::Analytic { eval, breaks } = &self.repr else {
            return self.clone();
        };
        let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
        let mut edges = Vec::with_capacity(2 * n + 1);
        let mut values = Vec::with_capacity(2 * n);
        let g = 0.5 * (0.6f64).sqrt();
        let mut push_side = |a: f64, b: f64| {
            if b <= a {
                return;
            }
            let h = (b - a) / n as f64;
            for k in 0..n {
                let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
                let c = 0.5 * (x0 + x1);
                let avg = (5.0 * eval(c - g * h) + 8.0 * eval(c) + 5.0 * eval(c + g * h)) / 18.0;
                if edges.is_empty() {
                    edges.push(x0);
                }
                edges.push(x1);
                values.push(avg.clamp(0.0, 1.0));
            }
        };
        push_side(lo, 0.0);
        push_side(0.0, hi);
        if let Some(last) = edges.last_mut() {
            // guard against the accumulated step landing just short of hi
            *last = last.max(hi);
        }
        Profile::from_cells(edges, values).expect("sampled profile is well formed")
    }

    /// Whether the profile is non-increasing on each open half-line.
    pub fn is_monotone_by_halves(&self) -> bool {
        let p = self.to_cells(DEFAULT_SAMPLES);
        let (edges, values) = p.cells().expect("sampled");
        let split = edges.iter().position(|&e| e == 0.0).unwrap_or(0);
        values[..split].windows(2).all(|w| w[0] >= w[1]) && values[split..].windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_monotone(&self) -> bool {
        let p = self.to_cells(DEFAULT_SAMPLES);
        let (_, values) = p.cells().expect("sampled");
        let mut all = vec![1.0];
        all.extend_from_slice(values);
        all.push(0.0);
        all.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Rearranges each half-line into monotone order while keeping the
/// distribution of values on it: on `z > 0` values are sorted decreasing
/// away from zero, on `z < 0` increasing away from zero. Cells keep their
/// widths, so the result is exactly equimeasurable with the input.
pub fn rearrange(profile: &Profile) -> Profile {
    let p = profile.to_cells(DEFAULT_SAMPLES);
    let (edges, values) = p.cells().expect("sampled");
    if values.is_empty() {
        return p;
    }
    let mut neg: Vec<(f64, f64)> = Vec::new();
    let mut pos: Vec<(f64, f64)> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        let w = edges[k + 1] - edges[k];
        if edges[k + 1] <= 0.0 {
            neg.push((v, w));
        } else {
            pos.push((v, w));
        }
    }
    // stable sorts keep cells with equal values in their original relative order
    neg.sort_by(|a, b| a.0.total_cmp(&b.0));
    pos.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut new_edges = Vec::with_capacity(edges.len());
    let mut new_values = Vec::with_capacity(values.len());
    // negative side is laid out from zero downwards, then reversed
    let mut z = 0.0;
    let mut neg_edges = vec![0.0];
    for &(_, w) in &neg {
        z -= w;
        neg_edges.push(z);
    }
    neg_edges.reverse();
    new_edges.extend_from_slice(&neg_edges);
    new_values.extend(neg.iter().rev().map(|c| c.0));
    let mut z = 0.0;
    for &(v, w) in &pos {
        z += w;
        new_edges.push(z);
        new_values.push(v);
    }
    if neg.is_empty() && pos.is_empty() {
        return Profile::stratified();
    }
    Profile::from_cells(new_edges, new_values).expect("rearranged cells are well formed")
}

/// Clips the profile to `max(s, zeta)` below zero and `min(s, zeta)` above,
/// where `zeta` maximises the flux. Never lowers `∫ F(s)` and never raises
/// the potential; for a profile already monotone on each half-line the
/// result is globally monotone.
pub fn monotonize(profile: &Profile, flux: &dyn Flux) -> Profile {
    let zeta = flux.argmax();
    let p = profile.to_cells(DEFAULT_SAMPLES);
    let (edges, values) = p.cells().expect("sampled");
    let clipped = values
        .iter()
        .enumerate()
        .map(|(k, &v)| if edges[k + 1] <= 0.0 { v.max(zeta) } else { v.min(zeta) })
        .collect();
    Profile::from_cells(edges.to_vec(), clipped).expect("clipping keeps cells valid")
}

/// Both sides of the interpolation inequality and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Interpolation inequality for one flux, with its sharp constant cached.
#[derive(Debug, Clone)]
pub struct Interpolation {
    flux: Arc<dyn Flux>,
    constant: f64,
}

impl Interpolation {
    pub fn new(flux: Arc<dyn Flux>) -> Result<Self> {
        let constant = sharp_constant(flux.as_ref())?;
        Ok(Interpolation { flux, constant })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn flux(&self) -> &Arc<dyn Flux> {
        &self.flux
    }

    /// Evaluates both sides without judging the outcome.
    pub fn measure(&self, profile: &Profile) -> InequalityCheck {
        let lhs = profile.flux_integral(self.flux.as_ref());
        let potential = profile.potential().max(0.0);
        let rhs = self.constant * potential.sqrt();
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        InequalityCheck { lhs, rhs, ratio }
    }

    /// Evaluates the inequality, failing when it is violated beyond
    /// [`RATIO_TOLERANCE`] or when a zero potential meets a positive flux
    /// integral (a symptom of a truncated window).
    pub fn check(&self, profile: &Profile) -> Result<InequalityCheck> {
        let potential = profile.potential();
        if potential < -1e-12 {
            return Err(Error::MalformedProfile(format!("negative potential {potential}")));
        }
        let c = self.measure(profile);
        if c.rhs == 0.0 && c.lhs > 1e-12 {
            return Err(Error::MalformedProfile(format!("zero potential but flux integral {}", c.lhs)));
        }
        if c.ratio > 1.0 + RATIO_TOLERANCE {
            return Err(Error::InequalityViolation { ratio: c.ratio });
        }
        Ok(c)
    }
}

pub fn inequality_check(profile: &Profile, flux: Arc<dyn Flux>) -> Result<InequalityCheck> {
    Interpolation::new(flux)?.check(profile)
}

/// The extremal profile `s(z) = (F')^-1(z / tau)`, clipped to the end states.
///
/// When `F'` is unbounded at an end state the window is widened until the
/// profile is within round-off of `s0` at its edges.
pub fn optimal_profile(flux: Arc<dyn Flux>, tau: f64) -> Result<Profile> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain { what: "tau", value: tau, domain: "(0, inf)" });
    }
    let edge = |s: f64| tau * flux.derivative(s);
    let mut lo = edge(1.0);
    let mut hi = edge(0.0);
    if !lo.is_finite() {
        lo = edge(1.0 - 1e-17_f64.max(f64::EPSILON * 0.5));
    }
    if !hi.is_finite() {
        hi = edge(1e-300_f64.max(1e-17));
    }
    let f = flux.clone();
    let eval = move |z: f64| f.derivative_inverse(z / tau);
    Ok(Profile::analytic(eval, lo.min(0.0), hi.max(0.0), &[]))
}

/// Shape of randomly generated profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomShape {
    Monotone,
    Rough,
}

/// Random piecewise-constant profile on a random nonuniform grid.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R, shape: RandomShape) -> Profile {
    let n_neg = rng.gen_range(1..64usize);
    let n_pos = rng.gen_range(1..64usize);
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    let mut widths = |n: usize| -> Vec<f64> { (0..n).map(|_| scale * rng.gen_range(0.02..1.0)).collect() };
    let wn = widths(n_neg);
    let wp = widths(n_pos);
    let mut edges = vec![0.0];
    for w in &wn {
        edges.push(edges.last().unwrap() - w);
    }
    edges.reverse();
    for w in &wp {
        let last = *edges.last().unwrap();
        edges.push(last + w);
    }
    let mut values: Vec<f64> = (0..n_neg + n_pos).map(|_| rng.gen_range(0.0..=1.0)).collect();
    if shape == RandomShape::Monotone {
        values.sort_by(|a, b| b.total_cmp(a));
    }
    Profile::from_cells(edges, values).expect("random cells are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad() -> Arc<dyn Flux> {
        Arc::new(QuadraticEntropy)
    }

    #[test]
    fn sharp_constants_of_entropies() {
        assert_relative_eq!(sharp_constant(&QuadraticEntropy).unwrap(), (2.0f64 / 3.0).sqrt(), max_relative = 1e-12);
        let pi = std::f64::consts::PI;
        assert_relative_eq!(sharp_constant(&LogEntropy).unwrap(), pi * (2.0f64 / 3.0).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn entropies_are_admissible() {
        check_admissible(&QuadraticEntropy, 1000).unwrap();
        check_admissible(&LogEntropy, 1000).unwrap();
        assert_relative_eq!(LogEntropy.argmax(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(QuadraticEntropy.argmax(), 0.5);
    }

    #[derive(Debug)]
    struct Convex;
    impl Flux for Convex {
        fn value(&self, s: f64) -> f64 {
            -s * (1.0 - s)
        }
        fn derivative(&self, s: f64) -> f64 {
            2.0 * s - 1.0
        }
        fn name(&self) -> &str {
            "convex"
        }
        fn growth(&self) -> Growth {
            Growth { c1: 1.0, c2: 1.0, alpha: 1.0 }
        }
    }

    #[test]
    fn convex_flux_rejected() {
        assert!(check_admissible(&Convex, 100).is_err());
    }

    #[test]
    fn bisection_inverse_matches_closed_form() {
        #[derive(Debug)]
        struct Plain;
        impl Flux for Plain {
            fn value(&self, s: f64) -> f64 {
                s * (1.0 - s)
            }
            fn derivative(&self, s: f64) -> f64 {
                1.0 - 2.0 * s
            }
            fn name(&self) -> &str {
                "plain"
            }
            fn growth(&self) -> Growth {
                Growth { c1: 1.0, c2: 1.0, alpha: 1.0 }
            }
        }
        for xi in [-1.5, -0.7, 0.0, 0.3, 0.999, 2.0] {
            assert_relative_eq!(Plain.derivative_inverse(xi), QuadraticEntropy.derivative_inverse(xi), epsilon = 1e-15);
        }
    }

    #[test]
    fn stratified_profile_is_trivial() {
        let p = Profile::stratified();
        assert_eq!(p.potential(), 0.0);
        assert_eq!(p.flux_integral(&QuadraticEntropy), 0.0);
        let c = inequality_check(&p, quad()).unwrap();
        assert_eq!((c.lhs, c.rhs, c.ratio), (0.0, 0.0, 0.0));
        assert_eq!(rearrange(&p).potential(), 0.0);
    }

    #[test]
    fn cell_potential_is_exact() {
        // linear profile 1 -> 0 over [-1, 1] has potential 1/6; finely sampled
        let n = 2000;
        let edges: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
        let values: Vec<f64> = (0..n).map(|k| 0.5 * (1.0 - (edges[k] + edges[k + 1]) / 2.0)).collect();
        let p = Profile::from_cells(edges, values).unwrap();
        assert_relative_eq!(p.potential(), 1.0 / 6.0, max_relative = 1e-6);
        assert_relative_eq!(p.flux_integral(&QuadraticEntropy), 1.0 / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn straddling_cell_is_split() {
        let p = Profile::from_cells(vec![-1.0, 1.0], vec![0.5]).unwrap();
        let (e, v) = p.cells().unwrap();
        assert_eq!(e, &[-1.0, 0.0, 1.0]);
        assert_eq!(v, &[0.5, 0.5]);
        assert_relative_eq!(p.potential(), 0.5);
    }

    #[test]
    fn malformed_cells_rejected() {
        assert!(Profile::from_cells(vec![0.0, 1.0], vec![1.5]).is_err());
        assert!(Profile::from_cells(vec![1.0, 0.0], vec![0.5]).is_err());
        assert!(Profile::from_cells(vec![0.0, 1.0, 2.0], vec![0.5]).is_err());
    }

    #[test]
    fn optimal_quadratic_profile_is_linear() {
        let p = optimal_profile(quad(), 1.0).unwrap();
        assert_eq!(p.window(), (-1.0, 1.0));
        for z in [-2.0, -1.0, -0.5, 0.0, 0.25, 1.0, 3.0] {
            let want: f64 = (0.5 * (1.0 - z as f64)).clamp(0.0, 1.0);
            assert_relative_eq!(p.eval(z), want, epsilon = 1e-15);
        }
        let c = inequality_check(&p, quad()).unwrap();
        assert_relative_eq!(c.ratio, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn optimal_log_profile_saturates() {
        let flux: Arc<dyn Flux> = Arc::new(LogEntropy);
        for tau in [0.3, 2.0] {
            let p = optimal_profile(flux.clone(), tau).unwrap();
            assert!(p.tail_estimate() < 1e-10 * p.potential());
            let c = inequality_check(&p, flux.clone()).unwrap();
            assert_relative_eq!(c.ratio, 1.0, epsilon = 1e-8);
            assert!(p.is_monotone());
        }
    }

    #[test]
    fn monotone_profile_is_fixed_by_rearrangement() {
        let edges = vec![-2.0, -0.5, 0.0, 0.3, 1.0, 4.0];
        let values = vec![0.9, 0.6, 0.5, 0.2, 0.1];
        let p = Profile::from_cells(edges.clone(), values.clone()).unwrap();
        let r = rearrange(&p);
        let (e, v) = r.cells().unwrap();
        for (a, b) in e.iter().zip(&edges) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(v, values.as_slice());
    }

    #[test]
    fn bump_is_flattened() {
        // s with an interior bump on z > 0
        let p = Profile::from_cells(vec![-1.0, 0.0, 0.5, 1.0, 1.5], vec![0.8, 0.1, 0.7, 0.2]).unwrap();
        let r = rearrange(&p);
        assert_relative_eq!(r.flux_integral(&QuadraticEntropy), p.flux_integral(&QuadraticEntropy), max_relative = 1e-12);
        assert!(r.potential() < p.potential());
        assert!(r.is_monotone_by_halves());
    }

    #[test]
    fn monotonize_clips_overshoot() {
        // jump at zero crossing zeta in the wrong direction
        let p = Profile::from_cells(vec![-1.0, 0.0, 1.0], vec![0.2, 0.9]).unwrap();
        let m = monotonize(&p, &QuadraticEntropy);
        assert_eq!(m.cells().unwrap().1, &[0.5, 0.5]);
        assert!(m.flux_integral(&QuadraticEntropy) >= p.flux_integral(&QuadraticEntropy));
        assert!(m.potential() <= p.potential());
        assert!(m.is_monotone());
        // already monotone through zeta at zero: unchanged
        let q = Profile::from_cells(vec![-1.0, 0.0, 1.0], vec![0.7, 0.3]).unwrap();
        assert_eq!(monotonize(&q, &QuadraticEntropy).cells().unwrap().1, &[0.7, 0.3]);
    }

    #[test]
    fn displaced_step_becomes_two_shock() {
        // s = 1 up to z = 0.75: monotonization produces the plateau at zeta
        let p = Profile::from_cells(vec![-1.0, 0.0, 0.75, 2.0], vec![1.0, 1.0, 0.0]).unwrap();
        let m = monotonize(&p, &QuadraticEntropy);
        let (_, v) = m.cells().unwrap();
        assert_eq!(v, &[1.0, 0.5, 0.0]);
    }

    #[test]
    fn random_profiles_obey_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let interp = Interpolation::new(quad()).unwrap();
        for k in 0..200 {
            let shape = if k % 2 == 0 { RandomShape::Monotone } else { RandomShape::Rough };
            let p = random_profile(&mut rng, shape);
            let r0 = interp.check(&p).unwrap().ratio;
            let r = rearrange(&p);
            let r1 = interp.check(&r).unwrap().ratio;
            let m = monotonize(&r, interp.flux().as_ref());
            let r2 = interp.check(&m).unwrap().ratio;
            assert!(r0 <= r1 * (1.0 + 1e-12) && r1 <= r2 * (1.0 + 1e-12), "{r0} {r1} {r2}");
            assert!(m.is_monotone());
        }
    }
}
