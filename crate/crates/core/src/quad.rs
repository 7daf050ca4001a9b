//! One-dimensional quadrature: adaptive Gauss-Kronrod for smooth pieces and
//! tanh-sinh for integrands with endpoint singularities.

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, converged: true };
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut value = v;
    let mut error = e;
    for _ in 0..4000 {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Quadrature { value, error, converged: true };
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, v0, e0) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further
            intervals.push((lo, hi, v0, 0.0));
            error -= e0;
            continue;
        }
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        value += v1 + v2 - v0;
        error += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // recompute to shed accumulated cancellation
    let value = intervals.iter().map(|i| i.2).sum();
    let error: f64 = intervals.iter().map(|i| i.3).sum();
    Quadrature { value, error, converged: error <= abs_tol.max(rel_tol * f64::abs(value)) }
}

/// Gauss-Kronrod over consecutive pieces `[breaks[k], breaks[k+1]]`.
pub fn gauss_kronrod_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> Quadrature {
    let mut total = Quadrature { value: 0.0, error: 0.0, converged: true };
    for w in breaks.windows(2) {
        let q = gauss_kronrod(&f, w[0], w[1], rel_tol, abs_tol / breaks.len() as f64);
        total.value += q.value;
        total.error += q.error;
        total.converged &= q.converged;
    }
    total
}

/// Tanh-sinh integration over `[a, b]`; `f` is never evaluated at the
/// endpoints, so integrable endpoint singularities are fine.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    use std::f64::consts::FRAC_PI_2;
    let h2 = 0.5 * (b - a);
    // Abscissae closer to the endpoints than this are dropped; the
    // contribution there is below double precision for integrable f.
    let t_max = 6.5;
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        // distance to the nearer endpoint, computed without cancellation
        let d = h2 / (u.abs().exp() * ch);
        let x = if t >= 0.0 { b - d } else { a + d };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += node(k as f64 * h) + node(-(k as f64) * h);
        k += 1;
    }
    let mut prev = sum * h * h2;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += node(k as f64 * h) + node(-(k as f64) * h);
            k += 2;
        }
        let cur = sum * h * h2;
        let err = (cur - prev).abs();
        if err <= rel_tol * cur.abs() || err < 1e-300 {
            return Quadrature { value: cur, error: err, converged: true };
        }
        prev = cur;
    }
    Quadrature { value: prev, error: f64::NAN, converged: false }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
