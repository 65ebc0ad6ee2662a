//! Level-set machinery for the moving cord boundary: a smoothed indicator,
//! signed-distance initialization, fast-sweeping reinitialization, and
//! marching-squares extraction of the zero contour.
//!
//! The convention throughout is `psi < 0` inside the cord and `psi > 0` in
//! the host tissue, with `psi` kept close to a signed distance so the
//! smoothed indicator has a well-defined transition width.

use std::collections::HashMap;
use std::collections::VecDeque;

use crate::grid::{Field2D, Grid2D};

/// Distance marker for nodes not yet reached by a sweep. Large but finite so
/// the eikonal quadratic never produces NaN from inf - inf.
const FAR: f64 = 1e18;

/// Smoothed indicator of the region `psi < 0` with transition half-width
/// `eta`: exactly 1 for `psi <= -eta`, exactly 0 for `psi >= eta`, and a C1
/// sine-polynomial blend in between. Takes the value 1/2 on the interface.
#[inline]
pub fn smoothed_indicator(psi: f64, eta: f64) -> f64 {
    debug_assert!(eta > 0.0);
    if psi <= -eta {
        1.0
    } else if psi >= eta {
        0.0
    } else {
        let r = psi / eta;
        0.5 * (1.0 - r - (std::f64::consts::PI * r).sin() / std::f64::consts::PI)
    }
}

/// Signed distance to the quarter circle of radius `r0` centered on the
/// domain corner (0, 0): `sqrt(x^2 + z^2) - r0`.
pub fn signed_distance_quarter_disk(grid: &Grid2D, r0: f64) -> Field2D {
    Field2D::from_fn(grid, |x, z| x.hypot(z) - r0)
}

/// Signed distance to the stripe `x < r0` spanning the full z-extent.
pub fn signed_distance_stripe(grid: &Grid2D, r0: f64) -> Field2D {
    Field2D::from_fn(grid, |x, _| x - r0)
}

/// Smoothed measure of the region `psi < 0` by trapezoidal quadrature of
/// [`smoothed_indicator`] with half-width `eta`.
pub fn smoothed_area(psi: &Field2D, grid: &Grid2D, eta: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.nz() {
        for i in 0..grid.nx() {
            acc += grid.weight(i, j) * smoothed_indicator(psi.at(i, j), eta);
        }
    }
    acc
}

/// Solves the single-node eikonal update with upwind values `a` (x-direction)
/// and `b` (z-direction): the largest root of
/// `((u-a)+/hx)^2 + ((u-b)+/hz)^2 = 1`.
fn eikonal_update(a: f64, b: f64, hx: f64, hz: f64) -> f64 {
    if a >= FAR && b >= FAR {
        return FAR;
    }
    if a >= FAR {
        return b + hz;
    }
    if b >= FAR {
        return a + hx;
    }
    // One-sided candidates are valid when they do not exceed the other
    // neighbor, so the second difference quotient stays clipped at zero.
    let ua = a + hx;
    if ua <= b {
        return ua;
    }
    let ub = b + hz;
    if ub <= a {
        return ub;
    }
    // Both sides active. After the one-sided branches |a - b| is bounded by
    // max(hx, hz), so the discriminant is positive.
    let hx2 = hx * hx;
    let hz2 = hz * hz;
    let disc = hx2 + hz2 - (a - b) * (a - b);
    (a * hz2 + b * hx2 + hx * hz * disc.sqrt()) / (hx2 + hz2)
}

/// Rebuilds `psi` as a signed distance to its own zero contour.
///
/// Nodes adjacent to a sign change keep a distance interpolated from the
/// crossing along each grid edge (frozen band); everything else is filled by
/// fast sweeping (four directional orderings, two cycles). Signs never
/// change, so the interface location is preserved to the accuracy of the
/// band interpolation. A field without any sign change is left untouched.
pub fn reinitialize(psi: &mut Field2D, grid: &Grid2D) {
    let nx = grid.nx();
    let nz = grid.nz();
    let hx = grid.hx();
    let hz = grid.hz();
    let n = nx * nz;
    let vals = psi.as_slice();

    let mut dist = vec![FAR; n];
    let mut frozen = vec![false; n];

    for j in 0..nz {
        for i in 0..nx {
            let k = j * nx + i;
            let a = vals[k];
            if a == 0.0 {
                dist[k] = 0.0;
                frozen[k] = true;
                continue;
            }
            if i + 1 < nx {
                let b = vals[k + 1];
                if (a < 0.0) != (b < 0.0) && b != 0.0 {
                    let da = hx * a.abs() / (a.abs() + b.abs());
                    let db = hx - da;
                    if da < dist[k] {
                        dist[k] = da;
                        frozen[k] = true;
                    }
                    if db < dist[k + 1] {
                        dist[k + 1] = db;
                        frozen[k + 1] = true;
                    }
                }
            }
            if j + 1 < nz {
                let b = vals[k + nx];
                if (a < 0.0) != (b < 0.0) && b != 0.0 {
                    let da = hz * a.abs() / (a.abs() + b.abs());
                    let db = hz - da;
                    if da < dist[k] {
                        dist[k] = da;
                        frozen[k] = true;
                    }
                    if db < dist[k + nx] {
                        dist[k + nx] = db;
                        frozen[k + nx] = true;
                    }
                }
            }
        }
    }

    if !frozen.iter().any(|&f| f) {
        return;
    }

    for _cycle in 0..2 {
        for sweep in 0..4u8 {
            for jj in 0..nz {
                let j = if sweep & 2 != 0 { nz - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if sweep & 1 != 0 { nx - 1 - ii } else { ii };
                    let k = j * nx + i;
                    if frozen[k] {
                        continue;
                    }
                    let left = if i > 0 { dist[k - 1] } else { FAR };
                    let right = if i + 1 < nx { dist[k + 1] } else { FAR };
                    let down = if j > 0 { dist[k - nx] } else { FAR };
                    let up = if j + 1 < nz { dist[k + nx] } else { FAR };
                    let cand = eikonal_update(left.min(right), down.min(up), hx, hz);
                    if cand < dist[k] {
                        dist[k] = cand;
                    }
                }
            }
        }
    }

    let out = psi.as_mut_slice();
    for k in 0..n {
        if dist[k] < FAR {
            out[k] = if out[k] < 0.0 { -dist[k] } else { dist[k] };
        }
    }
}

/// Extracts the zero contour of `psi` as polylines of ordered (x, z) points.
///
/// Marching squares on the node grid: each cell contributes segments whose
/// endpoints are linear-interpolation crossings on cell edges; segments are
/// chained through shared edges into polylines. Closed contours repeat their
/// first point at the end. Cells with a saddle ambiguity are split by the
/// sign of the cell-center average. The output order is deterministic.
pub fn extract_interface(psi: &Field2D, grid: &Grid2D) -> Vec<Vec<(f64, f64)>> {
    let nx = grid.nx();
    let nz = grid.nz();
    let vals = psi.as_slice();

    // An edge key identifies the grid edge a crossing lives on: twice the
    // linear index of the edge's lower-left node, plus 1 for vertical edges.
    // Shared edges between neighboring cells collapse to the same key, so
    // chaining needs no floating-point comparisons.
    let hkey = |i: usize, j: usize| ((j * nx + i) * 2) as u64;
    let vkey = |i: usize, j: usize| ((j * nx + i) * 2 + 1) as u64;

    let mut points: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut segments: Vec<(u64, u64)> = Vec::new();

    for j in 0..nz - 1 {
        for i in 0..nx - 1 {
            let va = vals[j * nx + i];
            let vb = vals[j * nx + i + 1];
            let vc = vals[(j + 1) * nx + i + 1];
            let vd = vals[(j + 1) * nx + i];
            let code = (va < 0.0) as u8
                | ((vb < 0.0) as u8) << 1
                | ((vc < 0.0) as u8) << 2
                | ((vd < 0.0) as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }

            let bottom = || (hkey(i, j), cross_h(grid, i, j, va, vb));
            let top = || (hkey(i, j + 1), cross_h(grid, i, j + 1, vd, vc));
            let left = || (vkey(i, j), cross_v(grid, i, j, va, vd));
            let right = || (vkey(i + 1, j), cross_v(grid, i + 1, j, vb, vc));

            let mut emit = |e1: (u64, (f64, f64)), e2: (u64, (f64, f64))| {
                points.entry(e1.0).or_insert(e1.1);
                points.entry(e2.0).or_insert(e2.1);
                segments.push((e1.0, e2.0));
            };

            match code {
                1 => emit(left(), bottom()),
                2 => emit(bottom(), right()),
                3 => emit(left(), right()),
                4 => emit(right(), top()),
                5 => {
                    let center = 0.25 * (va + vb + vc + vd);
                    if center < 0.0 {
                        emit(bottom(), right());
                        emit(left(), top());
                    } else {
                        emit(left(), bottom());
                        emit(right(), top());
                    }
                }
                6 => emit(bottom(), top()),
                7 => emit(left(), top()),
                8 => emit(top(), left()),
                9 => emit(bottom(), top()),
                10 => {
                    let center = 0.25 * (va + vb + vc + vd);
                    if center < 0.0 {
                        emit(left(), bottom());
                        emit(right(), top());
                    } else {
                        emit(bottom(), right());
                        emit(top(), left());
                    }
                }
                11 => emit(right(), top()),
                12 => emit(left(), right()),
                13 => emit(bottom(), right()),
                14 => emit(left(), bottom()),
                _ => unreachable!(),
            }
        }
    }

    // Adjacency from edge key to the segments using it. Values are pushed in
    // segment order and walks always take the first unused continuation, so
    // the chaining is deterministic.
    let mut adj: HashMap<u64, Vec<usize>> = HashMap::new();
    for (s, &(k1, k2)) in segments.iter().enumerate() {
        adj.entry(k1).or_default().push(s);
        adj.entry(k2).or_default().push(s);
    }

    let other_end = |seg: (u64, u64), k: u64| if seg.0 == k { seg.1 } else { seg.0 };
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    for seed in 0..segments.len() {
        if used[seed] {
            continue;
        }
        used[seed] = true;
        let (a, b) = segments[seed];
        let mut chain: VecDeque<u64> = VecDeque::new();
        chain.push_back(a);
        chain.push_back(b);
        loop {
            let k = *chain.front().unwrap();
            let Some(&s) = adj[&k].iter().find(|&&s| !used[s]) else {
                break;
            };
            used[s] = true;
            chain.push_front(other_end(segments[s], k));
        }
        loop {
            let k = *chain.back().unwrap();
            let Some(&s) = adj[&k].iter().find(|&&s| !used[s]) else {
                break;
            };
            used[s] = true;
            chain.push_back(other_end(segments[s], k));
        }
        polylines.push(chain.into_iter().map(|k| points[&k]).collect());
    }

    polylines
}

fn cross_h(grid: &Grid2D, i: usize, j: usize, va: f64, vb: f64) -> (f64, f64) {
    let t = va / (va - vb);
    (grid.x(i) + t * grid.hx(), grid.z(j))
}

fn cross_v(grid: &Grid2D, i: usize, j: usize, va: f64, vb: f64) -> (f64, f64) {
    let t = va / (va - vb);
    (grid.x(i), grid.z(j) + t * grid.hz())
}

/// Number of 4-connected components of the region `psi < 0`.
pub fn connected_regions(psi: &Field2D, grid: &Grid2D) -> usize {
    let nx = grid.nx();
    let nz = grid.nz();
    let vals = psi.as_slice();
    let mut seen = vec![false; nx * nz];
    let mut count = 0;
    let mut stack = Vec::new();

    for start in 0..nx * nz {
        if seen[start] || vals[start] >= 0.0 {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let i = k % nx;
            let j = k / nx;
            let mut visit = |kk: usize| {
                if !seen[kk] && vals[kk] < 0.0 {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - nx);
            }
            if j + 1 < nz {
                visit(k + nx);
            }
        }
    }
    count
}
