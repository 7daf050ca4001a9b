//! Discrete fields on the truncated strip `[0, L) x [-H, H]`.
//!
//! Scalars live at cell centres `(y_i, z_j) = ((i + 1/2) dy, -H + (j + 1/2) dz)`.
//! Velocities are staggered (MAC): `u_y` on the left face of each cell at
//! `(i dy, z_j)`, `u_z` on the bottom face at `(y_i, -H + j dz)` for
//! `j = 0..=nz`, with the wall faces `j = 0` and `j = nz` held at zero.
//! All arrays are stored row-major with one row per z level (y fastest).

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Transverse period.
    pub l: f64,
    /// Vertical half-extent; the domain is `[-h, h]`.
    pub h: f64,
    pub ny: usize,
    pub nz: usize,
}

impl Grid {
    /// `ny` must be even and at least 4; `nz` even and at least 8 so that
    /// `z = 0` is a cell face.
    pub fn new(l: f64, h: f64, ny: usize, nz: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite() && h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("grid extents must be positive, got L = {l}, H = {h}")));
        }
        if ny < 4 || ny % 2 != 0 {
            return Err(Error::Config(format!("ny must be even and >= 4, got {ny}")));
        }
        if nz < 8 || nz % 2 != 0 {
            return Err(Error::Config(format!("nz must be even and >= 8, got {nz}")));
        }
        Ok(Grid { l, h, ny, nz })
    }

    pub fn dy(&self) -> f64 {
        self.l / self.ny as f64
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.h / self.nz as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dy()
    }

    pub fn z(&self, j: usize) -> f64 {
        -self.h + (j as f64 + 0.5) * self.dz()
    }

    /// Height of the bottom face of cell row `j`.
    pub fn z_face(&self, j: usize) -> f64 {
        -self.h + j as f64 * self.dz()
    }

    pub fn len(&self) -> usize {
        self.ny * self.nz
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ny + i
    }

    /// Integrates a column of cell-centred values over z (midpoint rule).
    pub fn integrate_column(&self, column: &[f64]) -> f64 {
        column.iter().sum::<f64>() * self.dz()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f(y, z)` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.nz {
            let z = grid.z(j);
            for i in 0..grid.ny {
                values.push(f(grid.y(i), z));
            }
        }
        ScalarField { grid, values }
    }

    /// A y-independent field built from a column of values.
    pub fn from_column(grid: Grid, column: &[f64]) -> Self {
        assert_eq!(column.len(), grid.nz);
        let values = column.iter().flat_map(|&c| std::iter::repeat(c).take(grid.ny)).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.grid.ny..(j + 1) * self.grid.ny]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Mirror image under `y -> L - y`.
    pub fn mirrored(&self) -> Self {
        let g = self.grid;
        let mut values = vec![0.0; g.len()];
        for j in 0..g.nz {
            for i in 0..g.ny {
                values[g.idx(g.ny - 1 - i, j)] = self.at(i, j);
            }
        }
        ScalarField { grid: g, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    /// Transverse component on y-faces, `ny * nz` entries.
    pub uy: Vec<f64>,
    /// Vertical component on z-faces, `ny * (nz + 1)` entries.
    pub uz: Vec<f64>,
}

impl VelocityField {
    pub fn zeros(grid: Grid) -> Self {
        VelocityField { grid, uy: vec![0.0; grid.len()], uz: vec![0.0; grid.ny * (grid.nz + 1)] }
    }

    /// Samples `(u_y, u_z)` at the staggered face locations; wall faces are zeroed.
    pub fn from_fn(grid: Grid, fy: impl Fn(f64, f64) -> f64, fz: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = VelocityField::zeros(grid);
        let dy = grid.dy();
        for j in 0..grid.nz {
            for i in 0..grid.ny {
                v.uy[grid.idx(i, j)] = fy(i as f64 * dy, grid.z(j));
            }
        }
        for j in 1..grid.nz {
            for i in 0..grid.ny {
                v.uz[grid.idx(i, j)] = fz(grid.y(i), grid.z_face(j));
            }
        }
        v
    }

    /// Velocity `(psi_z, -psi_y)` from a streamfunction sampled at cell
    /// corners; discretely divergence-free to round-off. `psi` must vanish on
    /// the walls for the wall faces to carry no flux.
    pub fn from_streamfunction(grid: Grid, psi: impl Fn(f64, f64) -> f64) -> Self {
        let (dy, dz) = (grid.dy(), grid.dz());
        let corner = |i: usize, j: usize| psi(i as f64 * dy, grid.z_face(j));
        let mut v = VelocityField::zeros(grid);
        for j in 0..grid.nz {
            for i in 0..grid.ny {
                v.uy[grid.idx(i, j)] = (corner(i, j + 1) - corner(i, j)) / dz;
            }
        }
        for j in 1..grid.nz {
            for i in 0..grid.ny {
                v.uz[grid.idx(i, j)] = -(corner(i + 1, j) - corner(i, j)) / dy;
            }
        }
        v
    }

    #[inline]
    pub fn uz_at(&self, i: usize, j: usize) -> f64 {
        self.uz[j * self.grid.ny + i]
    }

    pub fn max_speed(&self) -> f64 {
        let a = self.uy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.uz.iter().fold(a, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.uy.iter().chain(&self.uz).all(|v| v.is_finite())
    }

    /// Mirror image under `y -> L - y`: face `i` maps to face `ny - i` and
    /// the transverse component changes sign.
    pub fn mirrored(&self) -> Self {
        let g = self.grid;
        let mut m = VelocityField::zeros(g);
        for j in 0..g.nz {
            for i in 0..g.ny {
                m.uy[g.idx((g.ny - i) % g.ny, j)] = -self.uy[g.idx(i, j)];
            }
        }
        for j in 0..=g.nz {
            for i in 0..g.ny {
                m.uz[j * g.ny + g.ny - 1 - i] = self.uz[j * g.ny + i];
            }
        }
        m
    }

    /// Components interpolated to cell centres.
    pub fn cell_centred(&self) -> (ScalarField, ScalarField) {
        let g = self.grid;
        let mut cy = ScalarField::constant(g, 0.0);
        let mut cz = ScalarField::constant(g, 0.0);
        for j in 0..g.nz {
            for i in 0..g.ny {
                let ip = (i + 1) % g.ny;
                cy.values[g.idx(i, j)] = 0.5 * (self.uy[g.idx(i, j)] + self.uy[g.idx(ip, j)]);
                cz.values[g.idx(i, j)] = 0.5 * (self.uz[g.idx(i, j)] + self.uz[g.idx(i, j + 1)]);
            }
        }
        (cy, cz)
    }
}

/// Transverse mean of `f` at every z level.
pub fn horizontal_average(f: &ScalarField) -> Vec<f64> {
    let ny = f.grid.ny as f64;
    (0..f.grid.nz).map(|j| f.row(j).iter().sum::<f64>() / ny).collect()
}

/// Result of a normalized integral, with a flag raised when the integrand
/// has not decayed at the truncation boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub truncated: bool,
}

/// Relative size of the boundary-row mean above which an integral is
/// flagged as possibly truncated.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;

/// `∫ (1/L) ∫ f dy dz` by the midpoint rule.
pub fn normalized_integral(f: &ScalarField) -> Integral {
    let avg = horizontal_average(f);
    let value = f.grid.integrate_column(&avg);
    let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = avg[0].abs().max(avg[avg.len() - 1].abs());
    Integral { value, truncated: scale > 0.0 && edge > TRUNCATION_THRESHOLD * scale }
}

/// Centred-difference gradient with periodic wrap in y and mirror
/// (zero normal derivative) ghosts in z.
pub fn gradient(f: &ScalarField) -> (ScalarField, ScalarField) {
    let g = f.grid;
    let (dy, dz) = (g.dy(), g.dz());
    let mut gy = ScalarField::constant(g, 0.0);
    let mut gz = ScalarField::constant(g, 0.0);
    for j in 0..g.nz {
        let jm = j.saturating_sub(1);
        let jp = (j + 1).min(g.nz - 1);
        for i in 0..g.ny {
            let ip = (i + 1) % g.ny;
            let im = (i + g.ny - 1) % g.ny;
            gy.values[g.idx(i, j)] = (f.at(ip, j) - f.at(im, j)) / (2.0 * dy);
            gz.values[g.idx(i, j)] = (f.at(i, jp) - f.at(i, jm)) / (2.0 * dz);
        }
    }
    (gy, gz)
}

/// Five-point Laplacian, periodic in y, zero-flux in z.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let (idy2, idz2) = (1.0 / (g.dy() * g.dy()), 1.0 / (g.dz() * g.dz()));
    let mut out = ScalarField::constant(g, 0.0);
    for j in 0..g.nz {
        for i in 0..g.ny {
            let c = f.at(i, j);
            let ip = (i + 1) % g.ny;
            let im = (i + g.ny - 1) % g.ny;
            let mut lz = 0.0;
            if j > 0 {
                lz += f.at(i, j - 1) - c;
            }
            if j + 1 < g.nz {
                lz += f.at(i, j + 1) - c;
            }
            out.values[g.idx(i, j)] = (f.at(ip, j) - 2.0 * c + f.at(im, j)) * idy2 + lz * idz2;
        }
    }
    out
}

/// Cell-centred divergence of a staggered velocity.
pub fn divergence(v: &VelocityField) -> ScalarField {
    let g = v.grid;
    let (dy, dz) = (g.dy(), g.dz());
    let mut out = ScalarField::constant(g, 0.0);
    for j in 0..g.nz {
        for i in 0..g.ny {
            let ip = (i + 1) % g.ny;
            out.values[g.idx(i, j)] = (v.uy[g.idx(ip, j)] - v.uy[g.idx(i, j)]) / dy
                + (v.uz[g.idx(i, j + 1)] - v.uz[g.idx(i, j)]) / dz;
        }
    }
    out
}

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RTMIX1\0\0";
pub const SNAPSHOT_HEADER_LEN: usize = 64;

/// Fields read back from a snapshot container.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub grid: Grid,
    pub fields: Vec<ScalarField>,
}

/// Writes a snapshot: a 64-byte little-endian header (magic, ny, nz, L, H,
/// t, field count, reserved) followed by each field's values row-major.
pub fn write_snapshot<W: Write>(mut w: W, t: f64, fields: &[&ScalarField]) -> Result<()> {
    let grid = fields
        .first()
        .ok_or_else(|| Error::Snapshot("no fields to write".into()))?
        .grid;
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::Snapshot("fields live on different grids".into()));
    }
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    header[..8].copy_from_slice(SNAPSHOT_MAGIC);
    header[8..16].copy_from_slice(&(grid.ny as u64).to_le_bytes());
    header[16..24].copy_from_slice(&(grid.nz as u64).to_le_bytes());
    header[24..32].copy_from_slice(&grid.l.to_le_bytes());
    header[32..40].copy_from_slice(&grid.h.to_le_bytes());
    header[40..48].copy_from_slice(&t.to_le_bytes());
    header[48..56].copy_from_slice(&(fields.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for f in fields {
        buf.clear();
        for v in &f.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let word = |k: usize| -> [u8; 8] { header[8 * k..8 * k + 8].try_into().expect("8 bytes") };
    let ny = u64::from_le_bytes(word(1)) as usize;
    let nz = u64::from_le_bytes(word(2)) as usize;
    let l = f64::from_le_bytes(word(3));
    let h = f64::from_le_bytes(word(4));
    let t = f64::from_le_bytes(word(5));
    let count = u64::from_le_bytes(word(6)) as usize;
    let grid = Grid::new(l, h, ny, nz).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut fields = Vec::with_capacity(count);
    let mut buf = vec![0u8; grid.len() * 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        fields.push(ScalarField { grid, values });
    }
    Ok(Snapshot { t, grid, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid(ny: usize, nz: usize) -> Grid {
        Grid::new(2.0, 3.0, ny, nz).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 1.0, 3, 8).is_err());
        assert!(Grid::new(1.0, 1.0, 4, 7).is_err());
        assert!(Grid::new(-1.0, 1.0, 4, 8).is_err());
        let g = grid(4, 8);
        assert_eq!(g.z_face(4), 0.0);
    }

    #[test]
    fn average_of_constant_and_mean_zero_mode() {
        let g = grid(16, 32);
        assert!(horizontal_average(&ScalarField::constant(g, 2.5)).iter().all(|&v| v == 2.5));
        let f = ScalarField::from_fn(g, |y, _| (2.0 * PI * y / g.l).sin());
        assert!(horizontal_average(&f).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn average_recovers_linear_mean() {
        let g = grid(16, 32);
        let f = ScalarField::from_fn(g, |y, z| z + (2.0 * PI * y / g.l).sin() * (2.0 * PI * z / (2.0 * g.h)).cos());
        for (j, v) in horizontal_average(&f).iter().enumerate() {
            assert!((v - g.z(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn box_integral_and_transverse_mode() {
        let g = Grid::new(1.0, 4.0, 8, 160).unwrap();
        let f = ScalarField::from_fn(g, |_, z| if z.abs() <= 1.0 { 1.0 } else { 0.0 });
        let i = normalized_integral(&f);
        assert!((i.value - 2.0).abs() <= g.dz());
        assert!(!i.truncated);
        let f = ScalarField::from_fn(g, |y, z| (2.0 * PI * y).sin() * (-z * z).exp());
        assert!(normalized_integral(&f).value.abs() < 1e-12);
        let f = ScalarField::constant(g, 1.0);
        assert!(normalized_integral(&f).truncated);
    }

    #[test]
    fn ramp_potential_integrand() {
        // (rho0 - rho) g z for a width-w ramp integrates to g w^2/24 (rho+ - rho-)
        let (rp, rm, gr, w) = (3.0, 1.0, 2.0, 1.5);
        let exact = gr * w * w / 24.0 * (rp - rm);
        let mut prev = f64::INFINITY;
        for nz in [64, 128, 256, 512] {
            let g = Grid::new(1.0, 2.0, 4, nz).unwrap();
            let f = ScalarField::from_fn(g, |_, z| {
                let rho0 = if z >= 0.0 { rp } else { rm };
                let rho = rm + (rp - rm) * (z / w + 0.5).clamp(0.0, 1.0);
                (rho0 - rho) * gr * z
            });
            let err = (normalized_integral(&f).value - exact).abs();
            assert!(err < prev * 0.3 || err < 1e-13, "nz {nz}: {err}");
            prev = err;
        }
        assert!(prev < 1e-4 * exact);
    }

    #[test]
    fn operators_on_constants() {
        let g = grid(8, 16);
        let f = ScalarField::constant(g, 4.0);
        let (gy, gz) = gradient(&f);
        assert!(gy.values.iter().chain(&gz.values).all(|&v| v == 0.0));
        assert!(laplacian(&f).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_sine_converges_second_order() {
        let mut errs = vec![];
        for ny in [16, 32, 64, 128] {
            let g = Grid::new(2.0, 1.0, ny, 8).unwrap();
            let k = 2.0 * PI / g.l;
            let f = ScalarField::from_fn(g, |y, _| (k * y).sin());
            let lap = laplacian(&f);
            let err = lap
                .values
                .iter()
                .zip(&f.values)
                .fold(0.0f64, |m, (l, v)| m.max((l + k * k * v).abs()));
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn streamfunction_velocity_is_divergence_free() {
        let g = Grid::new(2.0, 1.0, 16, 32).unwrap();
        let psi = |y: f64, z: f64| (PI * y).sin() * (1.0 - z * z).powi(2);
        let v = VelocityField::from_streamfunction(g, psi);
        assert!(divergence(&v).values.iter().all(|d| d.abs() < 1e-11));
    }

    #[test]
    fn sampled_streamfunction_velocity_converges() {
        // u = (psi_z, -psi_y) sampled pointwise; psi = sin(pi y) cos(pi z / 2)^2 on H = 1
        let mut errs = vec![];
        for n in [16, 32, 64] {
            let g = Grid::new(2.0, 1.0, n, 2 * n).unwrap();
            let k = PI / 2.0;
            let v = VelocityField::from_fn(
                g,
                |y, z| -(PI * y).sin() * 2.0 * k * (k * z).cos() * (k * z).sin(),
                |y, z| -PI * (PI * y).cos() * (k * z).cos().powi(2),
            );
            let d = divergence(&v);
            errs.push(d.values.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn snapshot_round_trip() {
        let g = grid(4, 8);
        let a = ScalarField::from_fn(g, |y, z| y * 10.0 + z);
        let b = a.map(|v| -v);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, 1.25, &[&a, &b]).unwrap();
        assert_eq!(buf.len(), 64 + 2 * 8 * g.len());
        assert_eq!(&buf[..6], b"RTMIX1");
        let snap = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(snap.t, 1.25);
        assert_eq!(snap.fields, vec![a, b]);
        buf[0] = b'X';
        assert!(read_snapshot(buf.as_slice()).is_err());
    }

    #[test]
    fn velocity_mirror_keeps_divergence_free() {
        let g = Grid::new(2.0, 1.0, 16, 32).unwrap();
        let v = VelocityField::from_streamfunction(g, |y, z| ((PI * y).sin() + (2.0 * PI * y).cos()) * (1.0 - z * z).powi(2));
        let m = v.mirrored();
        assert!(divergence(&m).values.iter().all(|d| d.abs() < 1e-11));
        assert_eq!(m.mirrored(), v);
    }

    #[test]
    fn mirror_is_involution() {
        let g = grid(8, 8);
        let f = ScalarField::from_fn(g, |y, z| y * y + z);
        assert_eq!(f.mirrored().mirrored(), f);
        assert_relative_eq!(f.mirrored().at(0, 3), f.at(7, 3));
    }
}
