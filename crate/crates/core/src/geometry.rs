//! Spatial point patterns: Poisson fields, hexagonal site grids, Voronoi
//! cell partitions and clustered user populations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::scenario::TrafficConfig;

const SQRT3: f64 = 1.732050807568877293527446341505872367_f64;

/// Planar position. Meters in the system simulator; dimensionless in the
/// normalized analytic modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Disk (`r_min = 0`) or annulus sampling region.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub center: Point,
    pub r_min: f64,
    pub r_max: f64,
}

impl Region {
    pub fn disk(center: Point, r_max: f64) -> Result<Self> {
        Region::annulus(center, 0.0, r_max)
    }

    pub fn annulus(center: Point, r_min: f64, r_max: f64) -> Result<Self> {
        let region = Region {
            center,
            r_min,
            r_max,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min.is_finite() && self.r_min >= 0.0) {
            return Err(Error::invalid("region.r_min", "must be finite and >= 0"));
        }
        if !(self.r_max.is_finite() && self.r_max > self.r_min) {
            return Err(Error::invalid("region.r_max", "must exceed r_min"));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * (self.r_max * self.r_max - self.r_min * self.r_min)
    }
}

/// One point uniform on an annulus. Radius is sampled through r^2, which is
/// uniform for area-uniform points.
fn uniform_in_annulus<R: Rng>(rng: &mut R, center: Point, r_min: f64, r_max: f64) -> Point {
    let t = rng.random_range(r_min * r_min..r_max * r_max);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let radius = t.sqrt();
    Point::new(
        center.x + radius * theta.cos(),
        center.y + radius * theta.sin(),
    )
}

/// Homogeneous Poisson point process on a region: Poisson count at
/// `density * area`, positions independent and uniform.
pub fn sample_ppp(density: f64, region: &Region, seed: u64) -> Result<Vec<Point>> {
    if !(density.is_finite() && density >= 0.0) {
        return Err(Error::invalid("density", "must be finite and >= 0"));
    }
    region.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = density * region.area();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::invalid("density", e.to_string()))?
            .sample(&mut rng) as u64
    } else {
        0
    };
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        points.push(uniform_in_annulus(
            &mut rng,
            region.center,
            region.r_min,
            region.r_max,
        ));
    }
    Ok(points)
}

/// Hexagonal site grid: the origin plus `rings` concentric rings with
/// nearest-neighbor spacing `isd`. Sites are ordered by (ring, angle), so
/// index 0 is always the center site.
pub fn hex_layout(rings: u32, isd: f64) -> Vec<Point> {
    let n = rings as i64;
    let mut sites = Vec::new();
    for q in -n..=n {
        let lo = (-n).max(-q - n);
        let hi = n.min(-q + n);
        for r in lo..=hi {
            let ring = (q.abs() + r.abs() + (q + r).abs()) / 2;
            let x = isd * (q as f64 + r as f64 / 2.0);
            let y = isd * (r as f64) * (SQRT3 / 2.0);
            let mut angle = y.atan2(x);
            if angle < -1e-12 {
                angle += std::f64::consts::TAU;
            }
            sites.push((ring, angle, Point::new(x, y)));
        }
    }
    sites.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    sites.into_iter().map(|(_, _, p)| p).collect()
}

/// Voronoi partition of a hexagonal layout, clipped to the bounding hexagon
/// of the whole grid. Cell index = site index.
#[derive(Debug, Clone)]
pub struct CellPartition {
    sites: Vec<Point>,
    isd: f64,
    /// Circumradius of the bounding hexagon (vertices along the ring-corner
    /// directions, every 60 degrees starting at angle 0).
    bound_circumradius: f64,
}

impl CellPartition {
    pub fn new(rings: u32, isd: f64) -> Self {
        CellPartition {
            sites: hex_layout(rings, isd),
            isd,
            bound_circumradius: rings as f64 * isd + isd / SQRT3,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn site(&self, cell: usize) -> Point {
        self.sites[cell]
    }

    /// Circumradius of one interior Voronoi cell.
    pub fn cell_circumradius(&self) -> f64 {
        self.isd / SQRT3
    }

    /// Whether a point lies inside the bounding hexagon of the grid.
    pub fn in_bounds(&self, p: Point) -> bool {
        let inradius = self.bound_circumradius * (SQRT3 / 2.0);
        for k in 0..6 {
            let theta = std::f64::consts::FRAC_PI_6 + k as f64 * std::f64::consts::FRAC_PI_3;
            if p.x * theta.cos() + p.y * theta.sin() > inradius + 1e-9 {
                return false;
            }
        }
        true
    }

    /// Index of the site nearest to `p`; ties go to the lower index.
    pub fn nearest_site(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, s) in self.sites.iter().enumerate() {
            let d2 = s.dist2(p);
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        best
    }

    /// Cell containing `p`, or None outside the network bounds.
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        if self.in_bounds(p) {
            Some(self.nearest_site(p))
        } else {
            None
        }
    }

    pub fn contains(&self, cell: usize, p: Point) -> bool {
        self.cell_of(p) == Some(cell)
    }

    /// Uniform point in a cell by rejection from a disk around its site.
    /// The disk radius `isd` covers every clipped boundary cell.
    pub fn sample_in_cell<R: Rng>(&self, cell: usize, rng: &mut R) -> Point {
        loop {
            let p = uniform_in_annulus(rng, self.sites[cell], 0.0, self.isd);
            if self.contains(cell, p) {
                return p;
            }
        }
    }
}

/// One user: position and the cell it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct UserSample {
    pub pos: Point,
    pub home_cell: usize,
}

/// Draws a user population realizing asymmetry factor F.
///
/// The hotspot cell receives `round(F * U / N)` users: a base of
/// `round(U / N)` placed uniformly (the load every cell carries at F = 1)
/// plus a clustered surplus scattered around `hotspot_centers_per_cell`
/// uniformly drawn centers with Gaussian spread. Every other cell receives
/// uniformly placed users, each in a uniformly chosen non-hotspot cell. At
/// F = 1 the whole population is therefore spatially uniform per cell.
pub fn sample_users(
    field: &TrafficConfig,
    cells: &CellPartition,
    seed: u64,
) -> Result<Vec<UserSample>> {
    let n = cells.n_cells();
    field.validate(n)?;
    if (field.total_users as usize) < n {
        return Err(Error::invalid(
            "traffic.total_users",
            format!("need at least one user per cell ({n} cells)"),
        ));
    }

    let u = field.total_users as f64;
    let hotspot_total = (field.asymmetry_f * u / n as f64).round() as u32;
    let hotspot_total = hotspot_total.min(field.total_users);
    let base = ((u / n as f64).round() as u32).min(hotspot_total);
    let surplus = hotspot_total - base;
    let hot = field.hotspot_cell;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = Vec::with_capacity(field.total_users as usize);

    let centers: Vec<Point> = (0..field.hotspot_centers_per_cell)
        .map(|_| cells.sample_in_cell(hot, &mut rng))
        .collect();

    for _ in 0..base {
        users.push(UserSample {
            pos: cells.sample_in_cell(hot, &mut rng),
            home_cell: hot,
        });
    }
    for _ in 0..surplus {
        let center = centers[rng.random_range(0..centers.len())];
        let mut pos = None;
        // A wide spread can push most draws outside the cell; fall back to a
        // uniform draw rather than rejecting forever.
        for _ in 0..1000 {
            let dx: f64 = rng.sample::<f64, _>(StandardNormal) * field.hotspot_spread_m;
            let dy: f64 = rng.sample::<f64, _>(StandardNormal) * field.hotspot_spread_m;
            let candidate = Point::new(center.x + dx, center.y + dy);
            if cells.contains(hot, candidate) {
                pos = Some(candidate);
                break;
            }
        }
        users.push(UserSample {
            pos: pos.unwrap_or_else(|| cells.sample_in_cell(hot, &mut rng)),
            home_cell: hot,
        });
    }

    let others = field.total_users - hotspot_total;
    for _ in 0..others {
        let mut cell = rng.random_range(0..n - 1);
        if cell >= hot {
            cell += 1;
        }
        users.push(UserSample {
            pos: cells.sample_in_cell(cell, &mut rng),
            home_cell: cell,
        });
    }
    Ok(users)
}
