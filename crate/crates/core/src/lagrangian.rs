//! Particle flow maps in the covering plane, flow gaps, inverse flows and
//! semi-Lagrangian pushforwards.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{perp_gradient, ScalarField, TorusGrid};
use crate::transport::{StepHistory, Trajectory};

/// Time-dependent velocity field sampled at arbitrary points.
pub trait VelocitySource: Sync {
    /// Closed time interval on which the field is available.
    fn coverage(&self) -> (f64, f64);
    fn velocity(&self, t: f64, x: f64, y: f64) -> (f64, f64);

    fn ensure_covers(&self, t: f64) -> Result<()> {
        let (start, end) = self.coverage();
        let slack = 1e-12 * (1.0 + end.abs());
        if t < start - slack || t > end + slack {
            return Err(Error::Coverage { t, start, end });
        }
        Ok(())
    }
}

/// Spatially uniform, constant velocity.
#[derive(Debug, Clone, Copy)]
pub struct UniformVelocity {
    pub u: (f64, f64),
    pub span: (f64, f64),
}

impl VelocitySource for UniformVelocity {
    fn coverage(&self) -> (f64, f64) {
        self.span
    }
    fn velocity(&self, _: f64, _: f64, _: f64) -> (f64, f64) {
        self.u
    }
}

/// Cubic Lagrange weights at fractional offset `f` for nodes `-1, 0, 1, 2`.
#[inline]
fn cubic_weights(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Periodic 4x4 Lagrange (bicubic) interpolation of grid samples at `(x, y)`.
pub fn bicubic(values: &[f64], n: usize, x: f64, y: f64) -> f64 {
    let gx = x.rem_euclid(1.0) * n as f64;
    let gy = y.rem_euclid(1.0) * n as f64;
    let (ix, iy) = (gx.floor(), gy.floor());
    let wx = cubic_weights(gx - ix);
    let wy = cubic_weights(gy - iy);
    let (ix, iy) = (ix as isize, iy as isize);
    let n_i = n as isize;
    let mut acc = 0.0;
    for (a, wa) in wx.iter().enumerate() {
        let row = (ix + a as isize - 1).rem_euclid(n_i) as usize * n;
        let mut inner = 0.0;
        for (b, wb) in wy.iter().enumerate() {
            let col = (iy + b as isize - 1).rem_euclid(n_i) as usize;
            inner += wb * values[row + col];
        }
        acc += wa * inner;
    }
    acc
}

/// Grid velocities `grad^perp psi` at a sequence of times, interpolated
/// bicubically in space and with cubic Lagrange polynomials in time.
#[derive(Debug, Clone)]
pub struct GridVelocity {
    n: usize,
    times: Vec<f64>,
    ux: Vec<Vec<f64>>,
    uy: Vec<Vec<f64>>,
}

impl GridVelocity {
    pub fn from_potentials(times: &[f64], potentials: &[ScalarField]) -> Result<Self> {
        if times.is_empty() || times.len() != potentials.len() {
            return Err(Error::Sampling("need one potential per time node".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Sampling("time nodes must increase strictly".into()));
        }
        let n = potentials[0].grid().n();
        let (ux, uy) = potentials
            .iter()
            .map(|p| {
                let (a, b) = perp_gradient(p);
                (a.into_values(), b.into_values())
            })
            .unzip();
        Ok(Self {
            n,
            times: times.to_vec(),
            ux,
            uy,
        })
    }

    pub fn from_history(h: &StepHistory) -> Result<Self> {
        Self::from_potentials(&h.times, &h.potentials)
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let h = traj.steps.as_ref().ok_or_else(|| {
            Error::Configuration("trajectory was run without step history".into())
        })?;
        Self::from_history(h)
    }

    /// Frozen field `grad^perp psi` valid on `[start, end]`.
    pub fn steady(psi: &ScalarField, span: (f64, f64)) -> Self {
        let (a, b) = perp_gradient(psi);
        let ux = a.into_values();
        let uy = b.into_values();
        Self {
            n: psi.grid().n(),
            times: vec![span.0, span.1],
            ux: vec![ux.clone(), ux],
            uy: vec![uy.clone(), uy],
        }
    }
}

impl VelocitySource for GridVelocity {
    fn coverage(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn velocity(&self, t: f64, x: f64, y: f64) -> (f64, f64) {
        let k = self.times.len();
        if k == 1 {
            return (
                bicubic(&self.ux[0], self.n, x, y),
                bicubic(&self.uy[0], self.n, x, y),
            );
        }
        let seg = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(k - 2),
        };
        let width = k.min(4);
        let first = seg.saturating_sub(1).min(k - width);
        let nodes = &self.times[first..first + width];
        let (mut u, mut v) = (0.0, 0.0);
        for (a, &ta) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, &tb) in nodes.iter().enumerate() {
                if a != b {
                    w *= (t - tb) / (ta - tb);
                }
            }
            if w != 0.0 {
                u += w * bicubic(&self.ux[first + a], self.n, x, y);
                v += w * bicubic(&self.uy[first + a], self.n, x, y);
            }
        }
        (u, v)
    }
}

/// Particle positions in the covering plane for an `m x m` grid of labels at
/// cell centres, stored row-major with the x label index outer.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub m: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub time: f64,
}

impl FlowMap {
    pub fn identity(m: usize, time: f64) -> Self {
        let mut x = Vec::with_capacity(m * m);
        let mut y = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                x.push((i as f64 + 0.5) / m as f64);
                y.push((j as f64 + 0.5) / m as f64);
            }
        }
        Self { m, x, y, time }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Torus positions in `[0, 1)^2`.
    pub fn wrapped(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(&a, &b)| (a.rem_euclid(1.0), b.rem_euclid(1.0)))
    }

    /// Largest finite-difference stretch between neighbouring labels, using
    /// `X(a + e) = X(a) + e` across the periodic cut.
    pub fn lipschitz_estimate(&self) -> f64 {
        let m = self.m;
        let h = 1.0 / m as f64;
        let mut lip: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let p = i * m + j;
                let (ni, wrap_x) = if i + 1 == m { (0, 1.0) } else { (i + 1, 0.0) };
                let q = ni * m + j;
                let dx = self.x[q] + wrap_x - self.x[p];
                let dy = self.y[q] - self.y[p];
                lip = lip.max((dx * dx + dy * dy).sqrt() / h);
                let (nj, wrap_y) = if j + 1 == m { (0, 1.0) } else { (j + 1, 0.0) };
                let q = i * m + nj;
                let dx = self.x[q] - self.x[p];
                let dy = self.y[q] + wrap_y - self.y[p];
                lip = lip.max((dx * dx + dy * dy).sqrt() / h);
            }
        }
        lip
    }
}

fn rk4_particle(src: &dyn VelocitySource, t: f64, dt: f64, x: f64, y: f64) -> (f64, f64) {
    let (k1x, k1y) = src.velocity(t, x, y);
    let (k2x, k2y) = src.velocity(t + 0.5 * dt, x + 0.5 * dt * k1x, y + 0.5 * dt * k1y);
    let (k3x, k3y) = src.velocity(t + 0.5 * dt, x + 0.5 * dt * k2x, y + 0.5 * dt * k2y);
    let (k4x, k4y) = src.velocity(t + dt, x + dt * k3x, y + dt * k3y);
    (
        x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
    )
}

/// Integrates every particle from `t0` to `t1` with RK4 steps no longer than
/// `|dt|`. `t1 < t0` integrates backward.
fn integrate(
    src: &dyn VelocitySource,
    x: &mut [f64],
    y: &mut [f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<()> {
    src.ensure_covers(t0)?;
    src.ensure_covers(t1)?;
    if t1 == t0 {
        return Ok(());
    }
    if !(dt.abs() > 0.0) {
        return Err(Error::Precondition("particle step must be nonzero".into()));
    }
    let steps = ((t1 - t0).abs() / dt.abs() - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    x.par_iter_mut().zip(y.par_iter_mut()).for_each(|(px, py)| {
        let (mut a, mut b) = (*px, *py);
        for k in 0..steps {
            (a, b) = rk4_particle(src, t0 + k as f64 * h, h, a, b);
        }
        *px = a;
        *py = b;
    });
    Ok(())
}

/// Advances `labels` (positions at `t0`) to `t1`; positions stay unwrapped.
pub fn advect_flow(
    src: &dyn VelocitySource,
    labels: &FlowMap,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<FlowMap> {
    let mut out = labels.clone();
    integrate(src, &mut out.x, &mut out.y, t0, t1, dt)?;
    out.time = t1;
    Ok(out)
}

/// Inverse flow `X(t)^{-1}` evaluated at cell-centre points: feet of the
/// backward characteristics from time `t` to `0`.
pub fn inverse_flow(src: &dyn VelocitySource, m: usize, t: f64, dt: f64) -> Result<FlowMap> {
    let mut out = FlowMap::identity(m, t);
    integrate(src, &mut out.x, &mut out.y, t, 0.0, dt)?;
    Ok(out)
}

/// Root-mean-square distance between corresponding unwrapped positions.
pub fn flow_gap(a: &FlowMap, b: &FlowMap) -> Result<f64> {
    if a.m != b.m || a.len() != b.len() {
        return Err(Error::Shape(format!(
            "label grids {} and {} differ",
            a.m, b.m
        )));
    }
    if (a.time - b.time).abs() > 1e-12 * (1.0 + a.time.abs()) {
        return Err(Error::Shape(format!(
            "flow times {} and {} differ",
            a.time, b.time
        )));
    }
    let sum: f64 =
        a.x.iter()
            .zip(&a.y)
            .zip(b.x.iter().zip(&b.y))
            .map(|((ax, ay), (bx, by))| (ax - bx).powi(2) + (ay - by).powi(2))
            .sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Cloud-in-cell deposit of the particles onto `(m/8)^2` coarse cells; returns
/// the largest relative deviation of a coarse-cell mass from uniform.
pub fn measure_preservation_defect(flow: &FlowMap) -> Result<f64> {
    let m = flow.m;
    if m < 16 {
        return Err(Error::Precondition(format!("label grid m = {m} below 16")));
    }
    let c = m / 8;
    let mut mass = vec![0.0; c * c];
    for (x, y) in flow.wrapped() {
        // node k sits at the centre of coarse cell k
        let gx = x * c as f64 - 0.5;
        let gy = y * c as f64 - 0.5;
        let (fx, fy) = (gx.floor(), gy.floor());
        let (wx, wy) = (gx - fx, gy - fy);
        let i0 = (fx as isize).rem_euclid(c as isize) as usize;
        let j0 = (fy as isize).rem_euclid(c as isize) as usize;
        let (i1, j1) = ((i0 + 1) % c, (j0 + 1) % c);
        mass[i0 * c + j0] += (1.0 - wx) * (1.0 - wy);
        mass[i0 * c + j1] += (1.0 - wx) * wy;
        mass[i1 * c + j0] += wx * (1.0 - wy);
        mass[i1 * c + j1] += wx * wy;
    }
    let expected = flow.len() as f64 / (c * c) as f64;
    Ok(mass
        .iter()
        .fold(0.0, |d: f64, &w| d.max((w - expected).abs() / expected)))
}

/// `rho(t) = rho0 o X(t)^{-1}` by backward characteristics from the grid
/// points, with bicubic sampling of `rho0` and the mean reset to `<rho0>`.
pub fn pushforward_density(
    rho0: &ScalarField,
    src: &dyn VelocitySource,
    t: f64,
    dt: f64,
) -> Result<ScalarField> {
    let grid: &TorusGrid = rho0.grid();
    let n = grid.n();
    let mut x = Vec::with_capacity(grid.len());
    let mut y = Vec::with_capacity(grid.len());
    for i in 0..n {
        for j in 0..n {
            let (a, b) = grid.point(i, j);
            x.push(a);
            y.push(b);
        }
    }
    integrate(src, &mut x, &mut y, t, 0.0, dt)?;
    let src_vals = rho0.values();
    let vals: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(&a, &b)| bicubic(src_vals, n, a, b))
        .collect();
    let f = ScalarField::from_values(grid, vals)?;
    let shift = rho0.mean() - f.mean();
    Ok(f.map(|v| v + shift))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub flow_gap: Vec<f64>,
    pub velocity_gap: Vec<f64>,
    pub hminus1_gap: Vec<f64>,
}

/// Forward flows of two trajectories on shared sample times, started from
/// the same labels.
pub struct PairedFlows {
    pub times: Vec<f64>,
    pub a: Vec<FlowMap>,
    pub b: Vec<FlowMap>,
}

pub fn paired_flows(ta: &Trajectory, tb: &Trajectory, m: usize, dt: f64) -> Result<PairedFlows> {
    let times = shared_times(ta, tb)?;
    let va = GridVelocity::from_trajectory(ta)?;
    let vb = GridVelocity::from_trajectory(tb)?;
    let mut fa = vec![FlowMap::identity(m, 0.0)];
    let mut fb = vec![FlowMap::identity(m, 0.0)];
    for w in times.windows(2) {
        let na = advect_flow(&va, fa.last().unwrap(), w[0], w[1], dt)?;
        let nb = advect_flow(&vb, fb.last().unwrap(), w[0], w[1], dt)?;
        fa.push(na);
        fb.push(nb);
    }
    Ok(PairedFlows {
        times,
        a: fa,
        b: fb,
    })
}

/// Sample times common to both trajectories (the shorter prefix).
pub fn shared_times(ta: &Trajectory, tb: &Trajectory) -> Result<Vec<f64>> {
    let a = ta.times();
    let b = tb.times();
    let k = a.len().min(b.len());
    for i in 0..k {
        if (a[i] - b[i]).abs() > 1e-12 {
            return Err(Error::Alignment(format!(
                "sample {i}: {} vs {}",
                a[i], b[i]
            )));
        }
    }
    Ok(a[..k].to_vec())
}

/// Flow, velocity and H^{-1} density gaps along two trajectories.
pub fn gap_series(
    ta: &Trajectory,
    tb: &Trajectory,
    flows: Option<&PairedFlows>,
) -> Result<GapSeries> {
    let times = shared_times(ta, tb)?;
    let mut out = GapSeries::default();
    for (i, &t) in times.iter().enumerate() {
        let (sa, sb) = (&ta.states[i], &tb.states[i]);
        let dpot = sa.potential.sub(&sb.potential)?;
        let drho = sa.rho.sub(&sb.rho)?;
        out.times.push(t);
        out.velocity_gap
            .push(crate::spectral::hs_unchecked(&dpot, 1.0));
        out.hminus1_gap
            .push(crate::spectral::hs_unchecked(&drho, -1.0));
        out.flow_gap.push(match flows {
            Some(f) => flow_gap(&f.a[i], &f.b[i])?,
            None => f64::NAN,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowHeader {
    m: usize,
    time: f64,
}

pub fn write_flow<W: Write>(mut w: W, flow: &FlowMap) -> std::io::Result<()> {
    let header = serde_json::to_string(&FlowHeader {
        m: flow.m,
        time: flow.time,
    })
    .map_err(std::io::Error::other)?;
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    for v in flow.x.iter().chain(&flow.y) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_flow<R: BufRead>(mut r: R) -> Result<FlowMap> {
    let mut line = String::new();
    r.read_line(&mut line)
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    let h: FlowHeader = serde_json::from_str(line.trim_end_matches('\n'))
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Format(e.to_string()))?;
    let count = h.m * h.m;
    if bytes.len() != 16 * count {
        return Err(Error::Format(format!(
            "expected {} payload bytes, got {}",
            16 * count,
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(FlowMap {
        m: h.m,
        x: vals[..count].to_vec(),
        y: vals[count..].to_vec(),
        time: h.time,
    })
}

pub fn save_flow(path: &Path, flow: &FlowMap) -> Result<()> {
    let mut buf = Vec::new();
    write_flow(&mut buf, flow).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_flow(path: &Path) -> Result<FlowMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_flow(std::io::Cursor::new(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn uniform_translation() {
        let src = UniformVelocity {
            u: (1.0, 0.0),
            span: (0.0, 1.0),
        };
        let f0 = FlowMap::identity(16, 0.0);
        let f = advect_flow(&src, &f0, 0.0, 0.25, 0.01).unwrap();
        for (a, b) in f.x.iter().zip(&f0.x) {
            assert!((a - b - 0.25).abs() < 1e-14);
        }
        assert_eq!(f.y, f0.y);
        let g = advect_flow(
            &UniformVelocity {
                u: (0.0, 0.0),
                span: (0.0, 1.0),
            },
            &f0,
            0.0,
            0.25,
            0.01,
        )
        .unwrap();
        assert_eq!(g.x, f0.x);
        assert!((flow_gap(&f, &g).unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(flow_gap(&f, &f).unwrap(), 0.0);
        assert_eq!(measure_preservation_defect(&f0).unwrap(), 0.0);
        assert!(measure_preservation_defect(&f).unwrap() < 1e-12);
    }

    #[test]
    fn coverage_error() {
        let src = UniformVelocity {
            u: (1.0, 0.0),
            span: (0.0, 0.5),
        };
        let f0 = FlowMap::identity(4, 0.0);
        assert!(matches!(
            advect_flow(&src, &f0, 0.0, 0.75, 0.01),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn shear_characteristic() {
        let g = TorusGrid::new(64).unwrap();
        let psi = ScalarField::from_fn(&g, |_, y| (TAU * y).cos());
        let src = GridVelocity::steady(&psi, (0.0, 1.0));
        let start = FlowMap {
            m: 1,
            x: vec![0.3],
            y: vec![0.25],
            time: 0.0,
        };
        let f = advect_flow(&src, &start, 0.0, 0.5, 0.01).unwrap();
        assert!((f.x[0] - 0.3 - TAU * 0.5).abs() < 1e-10, "{}", f.x[0]);
        assert!((f.y[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bicubic_error_within_fourth_order_bound() {
        let n = 32;
        let g = TorusGrid::new(n).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (TAU * x).sin() * (TAU * 2.0 * y).cos());
        let mut err: f64 = 0.0;
        for k in 0..50 {
            let x = (k as f64 * 0.137).fract();
            let y = (k as f64 * 0.291 + 0.05).fract();
            let exact = (TAU * x).sin() * (TAU * 2.0 * y).cos();
            err = err.max((bicubic(f.values(), n, x, y) - exact).abs());
        }
        // Lagrange remainder: |f^(4)| h^4 max|w(w^2-1)(w-2)| / 24 along each axis
        let h = 1.0 / n as f64;
        let bound = ((TAU * h).powi(4) + (2.0 * TAU * h).powi(4)) * (9.0 / 16.0) / 24.0;
        assert!(err <= bound, "{err} > {bound}");
        // grid nodes are reproduced exactly
        let (x, y) = g.point(5, 9);
        assert!((bicubic(f.values(), n, x, y) - f.at(5, 9)).abs() < 1e-15);
    }

    #[test]
    fn time_interpolation_is_cubic_exact() {
        let g = TorusGrid::new(16).unwrap();
        let base = ScalarField::from_fn(&g, |x, _| (TAU * x).cos() / TAU);
        let times = [0.0, 0.1, 0.25, 0.3, 0.5, 0.7];
        let pots: Vec<_> = times.iter().map(|&t| base.scale(1.0 + t * t * t)).collect();
        let v = GridVelocity::from_potentials(&times, &pots).unwrap();
        let (x, y) = g.point(3, 0);
        for &t in &[0.05, 0.2, 0.41, 0.69] {
            let (_, uy) = v.velocity(t, x, y);
            let exact = -(TAU * x).sin() * (1.0 + t * t * t);
            assert!((uy - exact).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn pushforward_of_invariant_profile() {
        let g = TorusGrid::new(32).unwrap();
        let rho0 = ScalarField::from_fn(&g, |_, y| -4.0 * PI * PI * (TAU * y).cos());
        let psi = crate::spectral::inv_laplacian(&rho0).unwrap();
        let src = GridVelocity::steady(&psi, (0.0, 1.0));
        let same = pushforward_density(&rho0, &src, 0.0, 0.01).unwrap();
        assert!(same.max_abs_diff(&rho0) < 1e-12);
        let moved = pushforward_density(&rho0, &src, 0.3, 0.01).unwrap();
        assert!(moved.max_abs_diff(&rho0) < 1e-9);
    }

    #[test]
    fn inverse_of_translation() {
        let src = UniformVelocity {
            u: (0.2, -0.1),
            span: (0.0, 1.0),
        };
        let inv = inverse_flow(&src, 8, 0.5, 0.05).unwrap();
        let id = FlowMap::identity(8, 0.5);
        for k in 0..64 {
            assert!((inv.x[k] - (id.x[k] - 0.1)).abs() < 1e-14);
            assert!((inv.y[k] - (id.y[k] + 0.05)).abs() < 1e-14);
        }
        assert!((inv.lipschitz_estimate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_dump_roundtrip() {
        let mut f = FlowMap::identity(4, 0.75);
        f.x[3] = 1.2345;
        let mut buf = Vec::new();
        write_flow(&mut buf, &f).unwrap();
        assert!(buf.starts_with(br#"{"m":4,"time":0.75}"#));
        assert_eq!(read_flow(std::io::Cursor::new(buf)).unwrap(), f);
    }
}
