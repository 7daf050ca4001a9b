//! Variable-coefficient pressure Poisson problem `-∇·(β ∇φ) = f` on the
//! strip, periodic in y and zero-flux at the walls, solved by conjugate
//! gradients preconditioned with the row-averaged operator, which a Fourier
//! transform in y reduces to one tridiagonal system per mode.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};

/// Convergence record of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonStats {
    pub iterations: usize,
    /// Final `‖r‖ / ‖f‖`.
    pub residual: f64,
}

pub struct PoissonSolver {
    grid: Grid,
    /// `β / dy^2` on y-faces (`ny * nz`).
    cy: Vec<f64>,
    /// `β / dz^2` on z-faces (`ny * (nz + 1)`), zero on the walls.
    cz: Vec<f64>,
    /// Thomas factors per mode: modified super-diagonal and inverse pivots, mode-major.
    sup: Vec<f64>,
    inv_piv: Vec<f64>,
    czbar: Vec<f64>,
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
    /// Half spectrum, `nk = ny / 2 + 1` modes per row.
    spectrum: Vec<Complex<f64>>,
    column: Vec<Complex<f64>>,
    line: Vec<f64>,
    scratch: Vec<Complex<f64>>,
    work: [Vec<f64>; 4],
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver").field("grid", &self.grid).finish_non_exhaustive()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // fixed-size partial sums keep the result independent of thread count
    a.chunks(1024).zip(b.chunks(1024)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

impl PoissonSolver {
    pub fn new(grid: Grid) -> Self {
        let mut planner = RealFftPlanner::new();
        let n = grid.len();
        let nk = grid.ny / 2 + 1;
        let fwd = planner.plan_fft_forward(grid.ny);
        let inv = planner.plan_fft_inverse(grid.ny);
        let scratch = vec![Complex::new(0.0, 0.0); fwd.get_scratch_len().max(inv.get_scratch_len())];
        PoissonSolver {
            grid,
            cy: vec![0.0; n],
            cz: vec![0.0; grid.ny * (grid.nz + 1)],
            sup: vec![0.0; nk * grid.nz],
            inv_piv: vec![0.0; nk * grid.nz],
            czbar: vec![0.0; grid.nz + 1],
            fwd,
            inv,
            spectrum: vec![Complex::new(0.0, 0.0); nk * grid.nz],
            column: vec![Complex::new(0.0, 0.0); grid.nz],
            line: vec![0.0; grid.ny],
            scratch,
            work: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Sets `β = 1 / rho` on faces (arithmetic face densities) and rebuilds the preconditioner.
    pub fn set_density(&mut self, rho: &ScalarField) {
        let g = self.grid;
        let (dy2, dz2) = (g.dy() * g.dy(), g.dz() * g.dz());
        for j in 0..g.nz {
            for i in 0..g.ny {
                let im = (i + g.ny - 1) % g.ny;
                self.cy[g.idx(i, j)] = 2.0 / (rho.at(i, j) + rho.at(im, j)) / dy2;
                if j > 0 {
                    self.cz[g.idx(i, j)] = 2.0 / (rho.at(i, j) + rho.at(i, j - 1)) / dz2;
                }
            }
        }
        self.build_preconditioner();
    }

    /// Face coefficient `β` on the y-face left of cell `(i, j)`.
    pub fn beta_y(&self, i: usize, j: usize) -> f64 {
        let dy = self.grid.dy();
        self.cy[self.grid.idx(i, j)] * dy * dy
    }

    /// Face coefficient `β` on the z-face below cell `(i, j)`; zero on the walls.
    pub fn beta_z(&self, i: usize, j: usize) -> f64 {
        let dz = self.grid.dz();
        self.cz[j * self.grid.ny + i] * dz * dz
    }

    fn build_preconditioner(&mut self) {
        let g = self.grid;
        let (ny, nz) = (g.ny, g.nz);
        let mut cybar = vec![0.0; nz];
        for j in 0..nz {
            cybar[j] = self.cy[j * ny..(j + 1) * ny].iter().sum::<f64>() / ny as f64;
        }
        for j in 0..=nz {
            self.czbar[j] = self.cz[j * ny..(j + 1) * ny].iter().sum::<f64>() / ny as f64;
        }
        for k in 1..=ny / 2 {
            // eigenvalue of the periodic second difference, in units of cy
            let lam = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / ny as f64).cos();
            let base = k * nz;
            let mut prev_sup = 0.0;
            for j in 0..nz {
                let lower = self.czbar[j];
                let upper = self.czbar[j + 1];
                let diag = cybar[j] * lam + lower + upper;
                let piv = diag + lower * prev_sup;
                let ip = 1.0 / piv;
                self.inv_piv[base + j] = ip;
                prev_sup = -upper * ip;
                self.sup[base + j] = prev_sup;
            }
        }
    }

    /// `out = -∇·(β ∇x)`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let ny = g.ny;
        for j in 0..g.nz {
            for i in 0..ny {
                let c = j * ny + i;
                let ip = if i + 1 == ny { j * ny } else { c + 1 };
                let im = if i == 0 { j * ny + ny - 1 } else { c - 1 };
                let xc = x[c];
                let mut v = self.cy[c] * (xc - x[im]) + self.cy[ip] * (xc - x[ip]);
                if j > 0 {
                    v += self.cz[c] * (xc - x[c - ny]);
                }
                if j + 1 < g.nz {
                    v += self.cz[c + ny] * (xc - x[c + ny]);
                }
                out[c] = v;
            }
        }
    }

    /// Applies the inverse of the row-averaged operator.
    fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        let g = self.grid;
        let (ny, nz) = (g.ny, g.nz);
        let nk = ny / 2 + 1;
        for j in 0..nz {
            self.line.copy_from_slice(&r[j * ny..(j + 1) * ny]);
            self.fwd
                .process_with_scratch(&mut self.line, &mut self.spectrum[j * nk..(j + 1) * nk], &mut self.scratch)
                .expect("buffer lengths match the plan");
        }
        // mean mode: integrate the zero-flux column equation from the bottom wall
        let mut flux = 0.0;
        let mut phi = 0.0;
        let mut col_sum = 0.0;
        for j in 0..nz {
            self.column[j] = Complex::new(phi, 0.0);
            col_sum += phi;
            flux -= self.spectrum[j * nk].re;
            if j + 1 < nz {
                phi += flux / self.czbar[j + 1];
            }
        }
        let mean = col_sum / nz as f64;
        for j in 0..nz {
            self.spectrum[j * nk] = Complex::new(self.column[j].re - mean, 0.0);
        }
        for k in 1..nk {
            let base = k * nz;
            let mut prev = Complex::new(0.0, 0.0);
            for j in 0..nz {
                let rhs = self.spectrum[j * nk + k];
                prev = (rhs + prev * self.czbar[j]) * self.inv_piv[base + j];
                self.column[j] = prev;
            }
            let mut next = Complex::new(0.0, 0.0);
            for j in (0..nz).rev() {
                let v = self.column[j] - next * self.sup[base + j];
                self.spectrum[j * nk + k] = v;
                next = v;
            }
        }
        let scale = 1.0 / ny as f64;
        for j in 0..nz {
            let row = &mut self.spectrum[j * nk..(j + 1) * nk];
            // the end modes of a real signal are real; clear round-off before inverting
            row[0].im = 0.0;
            row[nk - 1].im = 0.0;
            self.inv.process_with_scratch(row, &mut self.line, &mut self.scratch).expect("buffer lengths match the plan");
            for (o, v) in z[j * ny..(j + 1) * ny].iter_mut().zip(&self.line) {
                *o = v * scale;
            }
        }
    }

    /// Solves `-∇·(β ∇x) = f` in the mean-zero gauge, starting from the
    /// current contents of `x`. `f` is projected onto mean zero first.
    pub fn solve(&mut self, f: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<PoissonStats> {
        let n = self.grid.len();
        let [mut r, mut z, mut p, mut q] = std::mem::take(&mut self.work);
        r.copy_from_slice(f);
        remove_mean(&mut r);
        let f_norm = dot(&r, &r).sqrt();
        if f_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            self.work = [r, z, p, q];
            return Ok(PoissonStats { iterations: 0, residual: 0.0 });
        }
        remove_mean(x);
        self.apply(x, &mut q);
        for k in 0..n {
            r[k] -= q[k];
        }
        let mut res = dot(&r, &r).sqrt() / f_norm;
        if res > 1.0 {
            // a poor initial guess only costs accuracy: start from zero instead
            x.iter_mut().for_each(|v| *v = 0.0);
            r.copy_from_slice(f);
            remove_mean(&mut r);
            res = 1.0;
        }
        let mut it = 0;
        if res > rel_tol {
            self.precondition(&r, &mut z);
            p.copy_from_slice(&z);
            let mut rz = dot(&r, &z);
            while it < max_iter {
                it += 1;
                self.apply(&p, &mut q);
                let alpha = rz / dot(&p, &q);
                for k in 0..n {
                    x[k] += alpha * p[k];
                    r[k] -= alpha * q[k];
                }
                res = dot(&r, &r).sqrt() / f_norm;
                if res <= rel_tol {
                    break;
                }
                self.precondition(&r, &mut z);
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for k in 0..n {
                    p[k] = z[k] + beta * p[k];
                }
            }
        }
        self.work = [r, z, p, q];
        remove_mean(x);
        if !(res <= rel_tol) {
            return Err(Error::PoissonNonConvergence { iterations: it, residual: res });
        }
        Ok(PoissonStats { iterations: it, residual: res })
    }
}
