use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{substream, NetworkConfig, Purpose};
use crate::error::{param, Error, Result};

/// Consecutive placement draws allowed without filling a new cell.
pub const MAX_DRAWS_PER_CELL: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn wrap(v: f64, side: f64) -> f64 {
    let w = v.rem_euclid(side);
    // rem_euclid can round up to `side` for tiny negative inputs
    if w >= side {
        0.0
    } else {
        w
    }
}

fn torus_delta(a: f64, b: f64, side: f64) -> f64 {
    let d = (a - b).abs();
    d.min(side - d)
}

pub fn torus_dist_sq(a: Point, b: Point, side: f64) -> f64 {
    let dx = torus_delta(a.x, b.x, side);
    let dy = torus_delta(a.y, b.y, side);
    dx * dx + dy * dy
}

/// Uniform bucket grid over the torus for nearest-BS queries.
struct Grid {
    side: f64,
    k: usize,
    cell: f64,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(points: &[Point], side: f64) -> Self {
        let k = ((points.len() as f64).sqrt().floor() as usize).max(1);
        let cell = side / k as f64;
        let mut buckets = vec![Vec::new(); k * k];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = (Self::coord(p.x, cell, k), Self::coord(p.y, cell, k));
            buckets[cy * k + cx].push(i);
        }
        Self { side, k, cell, buckets }
    }

    fn coord(v: f64, cell: f64, k: usize) -> usize {
        ((v / cell) as usize).min(k - 1)
    }

    fn nearest(&self, points: &[Point], q: Point) -> usize {
        let k = self.k as isize;
        let cx = Self::coord(q.x, self.cell, self.k) as isize;
        let cy = Self::coord(q.y, self.cell, self.k) as isize;
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |i: usize, best: &mut (f64, usize)| {
            let d = torus_dist_sq(points[i], q, self.side);
            if d < best.0 || (d == best.0 && i < best.1) {
                *best = (d, i);
            }
        };
        for r in 0..=k {
            if 2 * r + 1 >= k {
                // the ring wraps onto itself: finish with a full scan
                for i in 0..points.len() {
                    consider(i, &mut best);
                }
                return best.1;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let bx = (cx + dx).rem_euclid(k) as usize;
                    let by = (cy + dy).rem_euclid(k) as usize;
                    for &i in &self.buckets[by * self.k + bx] {
                        consider(i, &mut best);
                    }
                }
            }
            // anything in ring r+1 is at least r whole cells away
            let reach = r as f64 * self.cell;
            if best.1 != usize::MAX && best.0 <= reach * reach {
                return best.1;
            }
        }
        best.1
    }
}

/// One spatial draw: BSs, one device per cell, and the link geometry.
///
/// Device `i` sits in the Voronoi cell of BS `i` and is served by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialRealization {
    pub side: f64,
    pub bs: Vec<Point>,
    pub devices: Vec<Point>,
    /// Torus distance r_o from each device to its serving BS.
    pub link_distance: Vec<f64>,
    /// r_o^{ηε}, the path-loss compensation applied to each transmitter.
    pub tx_power_factor: Vec<f64>,
}

impl SpatialRealization {
    /// Build from explicit positions. Each device must be torus-closest to
    /// the BS with the same index.
    pub fn from_positions(side: f64, bs: Vec<Point>, devices: Vec<Point>, eta: f64, eps: f64) -> Result<Self> {
        if bs.is_empty() || bs.len() != devices.len() {
            return param("need one device per BS and at least one BS");
        }
        let bs: Vec<Point> = bs.into_iter().map(|p| Point::new(wrap(p.x, side), wrap(p.y, side))).collect();
        let devices: Vec<Point> = devices.into_iter().map(|p| Point::new(wrap(p.x, side), wrap(p.y, side))).collect();
        let grid = Grid::new(&bs, side);
        for (i, &p) in devices.iter().enumerate() {
            let j = grid.nearest(&bs, p);
            if torus_dist_sq(p, bs[j], side) < torus_dist_sq(p, bs[i], side) {
                return Err(Error::Topology(format!("device {i} is closer to BS {j} than to its own")));
            }
        }
        let link_distance: Vec<f64> = devices
            .iter()
            .zip(&bs)
            .map(|(&u, &b)| torus_dist_sq(u, b, side).sqrt())
            .collect();
        if let Some(i) = link_distance.iter().position(|&r| !(r > 0.0)) {
            return Err(Error::Topology(format!("device {i} coincides with its BS")));
        }
        let tx_power_factor = link_distance.iter().map(|r| r.powf(eta * eps)).collect();
        Ok(Self { side, bs, devices, link_distance, tx_power_factor })
    }

    pub fn len(&self) -> usize {
        self.bs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bs.is_empty()
    }

    pub fn dist_sq(&self, device: usize, bs: usize) -> f64 {
        torus_dist_sq(self.devices[device], self.bs[bs], self.side)
    }

    /// Torus-nearest BS to an arbitrary point (ties go to the lower index).
    pub fn nearest_bs(&self, p: Point) -> usize {
        Grid::new(&self.bs, self.side).nearest(&self.bs, p)
    }

    /// Shift every position by `v`, modulo the torus.
    pub fn translated(&self, v: Point, eta: f64, eps: f64) -> Result<Self> {
        let shift = |p: &Point| Point::new(p.x + v.x, p.y + v.y);
        Self::from_positions(
            self.side,
            self.bs.iter().map(shift).collect(),
            self.devices.iter().map(shift).collect(),
            eta,
            eps,
        )
    }
}

/// Draw a realization for `realization` from the topology substream.
///
/// BS count ~ Poisson(λ·side²) (redrawn if zero), BSs uniform on the square.
/// Devices come from global rejection: uniform points are assigned to their
/// torus-nearest BS and the first point landing in each cell is kept, which
/// is uniform within that cell.
pub fn generate_topology(cfg: &NetworkConfig, realization: u64) -> Result<SpatialRealization> {
    cfg.validate()?;
    let side = cfg.area_side;
    let mut rng = substream(cfg.seed, realization, Purpose::Topology);
    let mean = cfg.bs_density * side * side;
    let poisson = Poisson::new(mean).map_err(|e| Error::Parameter(format!("BS count law: {e}")))?;
    let n = loop {
        let n = poisson.sample(&mut rng) as usize;
        if n > 0 {
            break n;
        }
    };
    let bs: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    place_devices(bs, side, cfg.eta, cfg.eps, &mut rng)
}

fn place_devices(bs: Vec<Point>, side: f64, eta: f64, eps: f64, rng: &mut impl Rng) -> Result<SpatialRealization> {
    let grid = Grid::new(&bs, side);
    let mut devices: Vec<Option<Point>> = vec![None; bs.len()];
    let mut missing = bs.len();
    let mut since_last = 0u64;
    while missing > 0 {
        let p = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
        let j = grid.nearest(&bs, p);
        if devices[j].is_none() && torus_dist_sq(p, bs[j], side) > 0.0 {
            devices[j] = Some(p);
            missing -= 1;
            since_last = 0;
        } else {
            since_last += 1;
            if since_last > MAX_DRAWS_PER_CELL {
                return Err(Error::Topology(format!(
                    "{missing} cells still empty after {MAX_DRAWS_PER_CELL} draws"
                )));
            }
        }
    }
    let devices = devices.into_iter().map(|p| p.expect("every cell filled")).collect();
    SpatialRealization::from_positions(side, bs, devices, eta, eps)
}
