//! Relay positioning: a static cell-edge ring for ground relays and a
//! hotspot-tracking, interference-aware search for mobile aerial relays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{CellPartition, Point};
use crate::propagation::{link_state, pathloss, LinkKind, RelayKind};
use crate::scenario::RadioConfig;

/// Stage-2 perturbation step in meters.
const GRID_STEP_M: f64 = 25.0;
/// Upper bound on refinement sweeps; in practice a handful suffice.
const MAX_SWEEPS: usize = 50;

/// Positions for one cell plus the value of the rate objective they achieve.
#[derive(Debug, Clone)]
pub struct PlacementResult {
    pub positions: Vec<Point>,
    /// Sum over the cell's users of ln(1 + estimated end-to-end spectral
    /// efficiency), fading at its mean.
    pub objective_value: f64,
}

/// Everything the interference-aware objective needs to know about the world
/// outside the relay positions being optimized.
pub struct InterferenceContext<'a> {
    pub partition: &'a CellPartition,
    /// Cell whose relays are being placed; its site is the donor.
    pub cell: usize,
    pub radio: &'a RadioConfig,
    pub relay_kind: RelayKind,
    /// Co-channel transmitters outside this cell: position and power.
    pub other_nodes: &'a [(Point, f64)],
}

fn gain(d: f64, kind: LinkKind, radio: &RadioConfig) -> f64 {
    pathloss(d.max(1.0), link_state(kind), radio).expect("clamped distance")
}

/// Truncated Shannon spectral efficiency in bits/s/Hz.
fn se(sinr: f64, radio: &RadioConfig) -> f64 {
    (1.0 + sinr).log2().min(radio.spectral_efficiency_cap)
}

fn harmonic_se(backhaul: f64, access: f64) -> f64 {
    if backhaul <= 0.0 || access <= 0.0 {
        0.0
    } else {
        backhaul * access / (backhaul + access)
    }
}

/// `k` relays on a circle of radius two thirds of the cell circumradius,
/// equally spaced starting at angle zero, pulled toward the site wherever
/// the circle leaves a boundary-clipped cell.
pub fn fixed_ring_placement(
    partition: &CellPartition,
    cell: usize,
    k: usize,
) -> Result<Vec<Point>> {
    if cell >= partition.n_cells() {
        return Err(Error::invalid("cell", "index out of range"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let site = partition.site(cell);
    let radius = 2.0 / 3.0 * partition.cell_circumradius();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let angle = std::f64::consts::TAU * i as f64 / k as f64;
        let mut p = Point::new(site.x + radius * angle.cos(), site.y + radius * angle.sin());
        for _ in 0..50 {
            if partition.contains(cell, p) {
                break;
            }
            p = Point::new(
                site.x + 0.95 * (p.x - site.x),
                site.y + 0.95 * (p.y - site.y),
            );
        }
        out.push(p);
    }
    Ok(out)
}

/// Plain k-means with farthest-point seeding. The seed picks the first
/// center; everything after that is deterministic. With fewer points than
/// clusters the points are reused cyclically.
pub fn cluster_centroids(points: &[Point], k: usize, seed: u64) -> Result<Vec<Point>> {
    if points.is_empty() {
        return Err(Error::invalid("points", "must be nonempty"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if points.len() < k {
        return Ok((0..k).map(|i| points[i % points.len()]).collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    while centers.len() < k {
        let far = farthest_point(points, &centers);
        centers.push(points[far]);
    }

    let mut assignment = vec![0usize; points.len()];
    for _ in 0..100 {
        for (i, p) in points.iter().enumerate() {
            assignment[i] = nearest_center(*p, &centers);
        }
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (i, p) in points.iter().enumerate() {
            let s = &mut sums[assignment[i]];
            s.0 += p.x;
            s.1 += p.y;
            s.2 += 1;
        }
        let mut moved: f64 = 0.0;
        for (c, s) in centers.iter_mut().zip(&sums) {
            let next = if s.2 == 0 {
                // Re-seed an empty cluster on the most isolated point.
                points[farthest_point(points, std::slice::from_ref(c))]
            } else {
                Point::new(s.0 / s.2 as f64, s.1 / s.2 as f64)
            };
            moved = moved.max(c.dist(next));
            *c = next;
        }
        if moved < 0.1 {
            break;
        }
    }
    Ok(centers)
}

fn nearest_center(p: Point, centers: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = p.dist2(*c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn farthest_point(points: &[Point], centers: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = -1.0;
    for (i, p) in points.iter().enumerate() {
        let d = centers
            .iter()
            .map(|c| p.dist2(*c))
            .fold(f64::INFINITY, f64::min);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Per-user quantities that do not depend on the relay positions.
struct UeBaseline {
    /// Donor signal power over the direct (NLoS) link.
    donor_w: f64,
    /// Power received from everything outside the cell.
    external_w: f64,
}

fn baselines(ues: &[Point], ctx: &InterferenceContext) -> Vec<UeBaseline> {
    let site = ctx.partition.site(ctx.cell);
    let pb = ctx.radio.tx_power_bs_w;
    ues.iter()
        .map(|u| {
            let donor_w = pb * gain(u.dist(site), LinkKind::BsToUe, ctx.radio);
            let external_w = ctx
                .other_nodes
                .iter()
                .map(|(p, power)| power * gain(u.dist(*p), LinkKind::Interference, ctx.radio))
                .sum();
            UeBaseline {
                donor_w,
                external_w,
            }
        })
        .collect()
}

/// Sum over users of ln(1 + best end-to-end spectral efficiency), where each
/// user takes the better of the direct link and any relay, all co-channel
/// transmitters interfering and fading at its mean of one.
fn objective(
    ues: &[Point],
    base: &[UeBaseline],
    positions: &[Point],
    ctx: &InterferenceContext,
) -> f64 {
    let site = ctx.partition.site(ctx.cell);
    let radio = ctx.radio;
    let pb = radio.tx_power_bs_w;
    let pr = radio.tx_power_rn_w;
    let noise = radio.noise_power_w;
    let access = ctx.relay_kind.access_link();
    let backhaul = ctx.relay_kind.backhaul_link();

    // Backhaul spectral efficiency per relay: donor signal against every
    // other transmitter heard at the relay position.
    let se_bh: Vec<f64> = positions
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let sig = pb * gain(p.dist(site), backhaul, radio);
            let mut int: f64 = ctx
                .other_nodes
                .iter()
                .map(|(q, power)| power * gain(p.dist(*q), LinkKind::Interference, radio))
                .sum();
            for (j2, p2) in positions.iter().enumerate() {
                if j2 != j {
                    int += pr * gain(p.dist(*p2), LinkKind::Interference, radio);
                }
            }
            let denom = int + noise;
            if denom == 0.0 {
                radio.spectral_efficiency_cap
            } else {
                se(sig / denom, radio)
            }
        })
        .collect();

    let mut total = 0.0;
    for (u, b) in ues.iter().zip(base) {
        let relay_int: f64 = positions
            .iter()
            .map(|p| pr * gain(u.dist(*p), LinkKind::Interference, radio))
            .sum();
        let direct_denom = b.external_w + relay_int + noise;
        let mut best = if direct_denom == 0.0 {
            radio.spectral_efficiency_cap
        } else {
            se(b.donor_w / direct_denom, radio)
        };
        for (j, p) in positions.iter().enumerate() {
            let sig = pr * gain(u.dist(*p), access, radio);
            let own = pr * gain(u.dist(*p), LinkKind::Interference, radio);
            let denom = b.external_w + b.donor_w + relay_int - own + noise;
            let se_acc = if denom <= 0.0 {
                radio.spectral_efficiency_cap
            } else {
                se(sig / denom, radio)
            };
            best = best.max(harmonic_se(se_bh[j], se_acc));
        }
        total += (1.0 + best).ln();
    }
    total
}

/// Two-stage mobile relay placement: k-means over the cell's users, then a
/// greedy grid refinement of each relay under the full interference map.
/// Deterministic in `(ues, ctx, seed)`.
pub fn hotspot_placement(
    ues: &[Point],
    k: usize,
    ctx: &InterferenceContext,
    seed: u64,
) -> Result<PlacementResult> {
    if ues.is_empty() {
        return Err(Error::invalid("ues", "must be nonempty"));
    }
    let mut positions = cluster_centroids(ues, k, seed)?;
    let site = ctx.partition.site(ctx.cell);
    for p in &mut positions {
        for _ in 0..50 {
            if ctx.partition.contains(ctx.cell, *p) {
                break;
            }
            *p = Point::new(
                site.x + 0.95 * (p.x - site.x),
                site.y + 0.95 * (p.y - site.y),
            );
        }
    }

    let base = baselines(ues, ctx);
    let mut current = objective(ues, &base, &positions, ctx);
    for _ in 0..MAX_SWEEPS {
        let mut improved = false;
        for j in 0..positions.len() {
            let origin = positions[j];
            let mut best_move: Option<(Point, f64)> = None;
            for dx in [-GRID_STEP_M, 0.0, GRID_STEP_M] {
                for dy in [-GRID_STEP_M, 0.0, GRID_STEP_M] {
                    if dx == 0.0 && dy == 0.0 {
                        continue;
                    }
                    let candidate = Point::new(origin.x + dx, origin.y + dy);
                    if !ctx.partition.contains(ctx.cell, candidate) {
                        continue;
                    }
                    positions[j] = candidate;
                    let value = objective(ues, &base, &positions, ctx);
                    if value > current + 1e-9
                        && best_move.map_or(true, |(_, v)| value > v)
                    {
                        best_move = Some((candidate, value));
                    }
                }
            }
            match best_move {
                Some((p, v)) => {
                    positions[j] = p;
                    current = v;
                    improved = true;
                }
                None => positions[j] = origin,
            }
        }
        if !improved {
            break;
        }
    }

    Ok(PlacementResult {
        positions,
        objective_value: current,
    })
}
