//! Exact discrete optimal transport by the transportation simplex (MODI
//! potentials with a spanning-tree basis).

use std::collections::VecDeque;

use super::{torus_cost, DensityOnTorus, OTResult, OtMethod};
use crate::error::{Error, Result};

/// Support size limit per marginal.
pub const EXACT_MAX_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPlan {
    pub cost: f64,
    /// `(source index, target index, mass)` for every positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    pub pivots: usize,
}

struct Basis {
    p: usize,
    q: usize,
    /// basic cells `(i, j)` with their flow
    cells: Vec<(usize, usize, f64)>,
}

impl Basis {
    /// Least-cost initial basis; crossing out exactly one line per allocation
    /// keeps `p + q - 1` cells forming a spanning tree.
    fn least_cost(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        let (p, q) = (a.len(), b.len());
        let mut order: Vec<usize> = (0..p * q).collect();
        order.sort_by(|&x, &y| c[x].total_cmp(&c[y]).then(x.cmp(&y)));
        let (mut sup, mut dem) = (a.to_vec(), b.to_vec());
        let (mut row_done, mut col_done) = (vec![false; p], vec![false; q]);
        let (mut rows_left, mut cols_left) = (p, q);
        let mut cells = Vec::with_capacity(p + q - 1);
        for idx in order {
            let (i, j) = (idx / q, idx % q);
            if row_done[i] || col_done[j] {
                continue;
            }
            let x = sup[i].min(dem[j]);
            cells.push((i, j, x));
            sup[i] -= x;
            dem[j] -= x;
            if rows_left == 1 && cols_left == 1 {
                break;
            }
            if (sup[i] <= dem[j] && rows_left > 1) || cols_left == 1 {
                row_done[i] = true;
                rows_left -= 1;
                dem[j] = dem[j].max(0.0);
            } else {
                col_done[j] = true;
                cols_left -= 1;
                sup[i] = sup[i].max(0.0);
            }
        }
        Self { p, q, cells }
    }

    /// Adjacency lists over nodes `0..p` (rows) and `p..p+q` (columns).
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.p + self.q];
        for (k, &(i, j, _)) in self.cells.iter().enumerate() {
            adj[i].push((self.p + j, k));
            adj[self.p + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, c: &[f64], adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let (p, q) = (self.p, self.q);
        let mut u = vec![f64::NAN; p];
        let mut v = vec![f64::NAN; q];
        u[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(other, k) in &adj[node] {
                let (i, j, _) = self.cells[k];
                let cij = c[i * q + j];
                if node < p {
                    if v[j].is_nan() {
                        v[j] = cij - u[i];
                        queue.push_back(other);
                    }
                } else if u[i].is_nan() {
                    u[i] = cij - v[j];
                    queue.push_back(other);
                }
            }
        }
        (u, v)
    }

    /// Tree path from row `i` to column `j` as a list of basic cell indices.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let total = self.p + self.q;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        let goal = self.p + j;
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(other, k) in &adj[node] {
                if !seen[other] {
                    seen[other] = true;
                    prev[other] = Some((node, k));
                    queue.push_back(other);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = goal;
        while let Some((from, k)) = prev[node] {
            cells.push(k);
            node = from;
        }
        cells.reverse();
        cells
    }
}

fn transport_simplex(a: &[f64], b: &[f64], c: &[f64]) -> Result<ExactPlan> {
    let q = b.len();
    let mut basis = Basis::least_cost(a, b, c);
    let scale = c.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    let max_pivots = 50 * a.len() * q;
    let mut degenerate_run = 0usize;
    let mut pivots = 0;
    loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(c, &adj);
        let bland = degenerate_run > 50;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..a.len() {
            for j in 0..q {
                let r = c[i * q + j] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Convergence {
                iterations: pivots,
                marginal_error: f64::NAN,
            });
        }
        // the cycle alternates +, -, +, ... starting from the entering cell;
        // the tree path from row ei to column ej starts with a '-' cell
        let path = basis.path(&adj, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let x = basis.cells[k].2;
                if x < theta || (x == theta && k < leave) {
                    theta = x;
                    leave = k;
                }
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.cells[k].2 -= theta;
            } else {
                basis.cells[k].2 += theta;
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        basis.cells[leave] = (ei, ej, theta);
    }
    let mut cost = 0.0;
    let mut flows = Vec::new();
    for &(i, j, x) in &basis.cells {
        if x > 0.0 {
            cost += x * c[i * q + j];
            flows.push((i, j, x));
        }
    }
    flows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Ok(ExactPlan {
        cost,
        flows,
        pivots,
    })
}

/// Exact OT between weighted point clouds on the torus.
pub fn w2_exact_points(
    pa: &[(f64, f64)],
    wa: &[f64],
    pb: &[(f64, f64)],
    wb: &[f64],
) -> Result<ExactPlan> {
    if pa.len() != wa.len() || pb.len() != wb.len() {
        return Err(Error::Shape("points and weights differ in length".into()));
    }
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::Degenerate("empty support".into()));
    }
    if pa.len() > EXACT_MAX_POINTS || pb.len() > EXACT_MAX_POINTS {
        return Err(Error::Resource(format!(
            "{} x {} points exceed the exact solver limit {EXACT_MAX_POINTS}",
            pa.len(),
            pb.len()
        )));
    }
    let (sa, sb): (f64, f64) = (wa.iter().sum(), wb.iter().sum());
    if (sa - sb).abs() > 1e-9 * sa.max(sb) {
        return Err(Error::Precondition(format!(
            "unbalanced masses {sa} and {sb}"
        )));
    }
    // balance exactly so the basis closes
    let wb: Vec<f64> = wb.iter().map(|w| w * sa / sb).collect();
    let c = torus_cost(pa, pb)?;
    transport_simplex(wa, &wb, &c)
}

fn support(d: &DensityOnTorus) -> (Vec<usize>, Vec<(f64, f64)>, Vec<f64>) {
    let mut idx = Vec::new();
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for (k, &x) in d.weights().iter().enumerate() {
        if x > 0.0 {
            idx.push(k);
            pts.push(d.point(k));
            w.push(x);
        }
    }
    (idx, pts, w)
}

fn exact_plan(
    a: &DensityOnTorus,
    b: &DensityOnTorus,
) -> Result<(ExactPlan, Vec<usize>, Vec<usize>)> {
    if a.side() * a.side() > EXACT_MAX_POINTS || b.side() * b.side() > EXACT_MAX_POINTS {
        return Err(Error::Resource(format!(
            "grids {} and {} exceed 16 x 16",
            a.side(),
            b.side()
        )));
    }
    let (ia, pa, wa) = support(a);
    let (ib, pb, wb) = support(b);
    let plan = w2_exact_points(&pa, &wa, &pb, &wb)?;
    Ok((plan, ia, ib))
}

pub fn w2_exact_small(a: &DensityOnTorus, b: &DensityOnTorus) -> Result<OTResult> {
    let (plan, _, _) = exact_plan(a, b)?;
    Ok(OTResult {
        distance: plan.cost.max(0.0).sqrt(),
        method: OtMethod::Exact,
        reg: None,
        iterations: plan.pivots,
        marginal_error: 0.0,
    })
}

/// McCann interpolant at `theta` in `[1, 2]`: every atom of the optimal plan
/// moves a fraction `theta - 1` along its torus geodesic and is deposited
/// with cloud-in-cell weights.
pub fn displacement_interpolation(
    a: &DensityOnTorus,
    b: &DensityOnTorus,
    theta: f64,
) -> Result<DensityOnTorus> {
    if !(1.0..=2.0).contains(&theta) {
        return Err(Error::Precondition(format!(
            "theta = {theta} outside [1, 2]"
        )));
    }
    if a.side() != b.side() {
        return Err(Error::Shape(format!("sides {} and {}", a.side(), b.side())));
    }
    if theta == 1.0 {
        return Ok(a.clone());
    }
    let (plan, ia, ib) = exact_plan(a, b)?;
    let s = a.side();
    let si = s as isize;
    let frac = theta - 1.0;
    let wrap = |d: isize| -> isize {
        let d = d.rem_euclid(si);
        if 2 * d > si {
            d - si
        } else {
            d
        }
    };
    let mut w = vec![0.0; s * s];
    for &(i, j, mass) in &plan.flows {
        let (src, dst) = (ia[i], ib[j]);
        let (sx, sy) = ((src / s) as isize, (src % s) as isize);
        let (tx, ty) = ((dst / s) as isize, (dst % s) as isize);
        // positions in grid units
        let gx = sx as f64 + frac * wrap(tx - sx) as f64;
        let gy = sy as f64 + frac * wrap(ty - sy) as f64;
        let (fx, fy) = (gx.floor(), gy.floor());
        let (wx, wy) = (gx - fx, gy - fy);
        let i0 = (fx as isize).rem_euclid(si) as usize;
        let j0 = (fy as isize).rem_euclid(si) as usize;
        let (i1, j1) = ((i0 + 1) % s, (j0 + 1) % s);
        w[i0 * s + j0] += mass * (1.0 - wx) * (1.0 - wy);
        w[i0 * s + j1] += mass * (1.0 - wx) * wy;
        w[i1 * s + j0] += mass * wx * (1.0 - wy);
        w[i1 * s + j1] += mass * wx * wy;
    }
    DensityOnTorus::new(s, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over all permutations for tiny uniform assignment problems.
    fn brute_assignment(c: &[f64], n: usize) -> f64 {
        fn rec(c: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(c, n, row + 1, used, acc + c[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(c, n, 0, &mut vec![false; n], 0.0, &mut best);
        best / n as f64
    }

    #[test]
    fn matches_brute_force_assignment() {
        let pts_a: Vec<(f64, f64)> = (0..6)
            .map(|k| ((k as f64 * 0.173).fract(), (k as f64 * 0.311).fract()))
            .collect();
        let pts_b: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                (
                    (k as f64 * 0.457 + 0.2).fract(),
                    (k as f64 * 0.129 + 0.6).fract(),
                )
            })
            .collect();
        let w = vec![1.0 / 6.0; 6];
        let plan = w2_exact_points(&pts_a, &w, &pts_b, &w).unwrap();
        let c = torus_cost(&pts_a, &pts_b).unwrap();
        assert!((plan.cost - brute_assignment(&c, 6)).abs() < 1e-14);
    }

    #[test]
    fn point_masses() {
        let a = DensityOnTorus::dirac(10, 0, 0);
        let b = DensityOnTorus::dirac(10, 3, 0);
        let r = w2_exact_small(&a, &b).unwrap();
        assert!((r.distance - 0.3).abs() < 1e-14);
        let b = DensityOnTorus::dirac(10, 7, 0);
        assert!((w2_exact_small(&a, &b).unwrap().distance - 0.3).abs() < 1e-14);
        assert_eq!(w2_exact_small(&a, &a).unwrap().distance, 0.0);
    }

    #[test]
    fn size_guard() {
        let u = DensityOnTorus::uniform(32);
        assert!(matches!(w2_exact_small(&u, &u), Err(Error::Resource(_))));
    }

    #[test]
    fn interpolation_endpoints() {
        let wa: Vec<f64> = (0..64)
            .map(|k| 1.0 + (k as f64 * 0.7).sin().abs())
            .collect();
        let wb: Vec<f64> = (0..64)
            .map(|k| 1.0 + (k as f64 * 0.3).cos().abs())
            .collect();
        let a = DensityOnTorus::new(8, wa).unwrap();
        let b = DensityOnTorus::new(8, wb).unwrap();
        assert_eq!(displacement_interpolation(&a, &b, 1.0).unwrap(), a);
        let end = displacement_interpolation(&a, &b, 2.0).unwrap();
        for (x, y) in end.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(displacement_interpolation(&a, &b, 2.5).is_err());
    }
}
