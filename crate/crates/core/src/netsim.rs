//! Multi-cell downlink simulator comparing relay deployment schemes under
//! asymmetric traffic.
//!
//! A drop is one frozen snapshot: user positions, relay positions and
//! fading are drawn from seeds derived off (master_seed, F, drop_index),
//! every station and relay transmits co-channel, users get equal shares of
//! their serving node, and link rates follow a truncated Shannon map.
//! Metrics are taken over the hotspot cell's users.
//!
//! Association is cell-local: a user picks the strongest of its home base
//! station and the relays deployed in its home cell. Cross-cell moves are
//! the job of the load balancer, which only the load_balancing and
//! upper_bound schemes apply.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_users, CellPartition, Point, UserSample};
use crate::placement::{
    cluster_centroids, fixed_ring_placement, hotspot_placement, InterferenceContext,
};
use crate::propagation::{fading_sample, link_state, pathloss, LinkKind, RelayKind};
use crate::scenario::{derive_seed, RadioConfig, Scenario, SchemeVariant};
use crate::stats;

/// A deployed relay: position, donor station, technology.
#[derive(Debug, Clone, Copy)]
pub struct RelayNode {
    pub pos: Point,
    /// Cell (and station) index this relay backhauls through.
    pub donor: usize,
    pub kind: RelayKind,
}

/// One drop's geometry and association. Node indices run over stations
/// first (0..n_bs), then relays (n_bs..).
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub bs_positions: Vec<Point>,
    pub relays: Vec<RelayNode>,
    pub users: Vec<UserSample>,
    /// Serving node index per user.
    pub association: Vec<usize>,
}

/// Throughput summary over one drop's hotspot users.
#[derive(Debug, Clone, PartialEq)]
pub struct DropMetrics {
    pub user_throughputs: Vec<f64>,
    pub mean_bps: f64,
    /// Largest value at least 95% of users reach: ascending order statistic
    /// at rank ceil(n/20).
    pub qos_bps: f64,
}

fn gain(d: f64, kind: LinkKind, radio: &RadioConfig) -> f64 {
    pathloss(d.max(1.0), link_state(kind), radio).expect("clamped distance")
}

/// Equal round-robin shares for one node's attached users.
pub fn schedule(attached: usize) -> Vec<f64> {
    vec![1.0 / attached as f64; attached]
}

/// Rate of one scheduled link: share x bandwidth x truncated-Shannon
/// spectral efficiency, times the calibration factor.
pub fn throughput_direct(share: f64, sinr: f64, radio: &RadioConfig) -> f64 {
    let se = (1.0 + sinr).log2().min(radio.spectral_efficiency_cap);
    share * radio.bandwidth_hz * se * radio.rate_calibration
}

/// End-to-end decode-and-forward rate under the optimal time split between
/// the two hops; zero if either hop is dead.
pub fn throughput_relayed(backhaul_bps: f64, access_bps: f64) -> f64 {
    if backhaul_bps <= 0.0 || access_bps <= 0.0 {
        0.0
    } else {
        backhaul_bps * access_bps / (backhaul_bps + access_bps)
    }
}

/// Mean and 5th-percentile QoS over a nonempty throughput list.
pub fn metrics(user_throughputs: Vec<f64>) -> Result<DropMetrics> {
    if user_throughputs.is_empty() {
        return Err(Error::invalid("user_throughputs", "must be nonempty"));
    }
    let mean_bps = stats::mean(&user_throughputs);
    let mut sorted = user_throughputs.clone();
    sorted.sort_by(f64::total_cmp);
    let rank = (sorted.len() + 19) / 20;
    let qos_bps = sorted[rank - 1];
    Ok(DropMetrics {
        user_throughputs,
        mean_bps,
        qos_bps,
    })
}

/// Strongest-server association over each user's home-cell candidates
/// (station plus local relays), mean fading, ties to the lowest node index.
pub fn associate(
    users: &[UserSample],
    bs_positions: &[Point],
    relays: &[RelayNode],
    radio: &RadioConfig,
) -> Vec<usize> {
    users
        .iter()
        .map(|u| {
            let home = u.home_cell;
            let mut best = home;
            let mut best_p =
                radio.tx_power_bs_w * gain(u.pos.dist(bs_positions[home]), LinkKind::BsToUe, radio);
            for (j, rn) in relays.iter().enumerate() {
                if rn.donor != home {
                    continue;
                }
                let p = radio.tx_power_rn_w
                    * gain(u.pos.dist(rn.pos), rn.kind.access_link(), radio);
                if p > best_p {
                    best_p = p;
                    best = bs_positions.len() + j;
                }
            }
            best
        })
        .collect()
}

/// Pushes boundary users off overloaded stations.
///
/// Each move takes a user whose received power from the target is within a
/// 6 dB margin of its current server, strictly reduces the load variance
/// (target at least two below the source), and never lowers the mover's
/// estimated rate (fading-free spectral efficiency over the new share).
/// Moves are applied one at a time from the most loaded station to the
/// least loaded eligible target, lowest indices first, so the result is
/// deterministic.
pub fn load_balance(
    users: &[UserSample],
    bs_positions: &[Point],
    radio: &RadioConfig,
    association: &mut [usize],
) {
    let n_bs = bs_positions.len();
    let n = users.len();
    let margin = 10f64.powf(-0.6);

    let mut power = vec![0.0f64; n * n_bs];
    let mut se = vec![0.0f64; n * n_bs];
    for (i, u) in users.iter().enumerate() {
        let row = &mut power[i * n_bs..(i + 1) * n_bs];
        for (b, site) in bs_positions.iter().enumerate() {
            row[b] = radio.tx_power_bs_w * gain(u.pos.dist(*site), LinkKind::BsToUe, radio);
        }
        let total: f64 = row.iter().sum();
        for b in 0..n_bs {
            let denom = total - row[b] + radio.noise_power_w;
            let sinr = if denom == 0.0 {
                f64::INFINITY
            } else {
                row[b] / denom
            };
            se[i * n_bs + b] = (1.0 + sinr).log2().min(radio.spectral_efficiency_cap);
        }
    }

    let mut loads = vec![0usize; n_bs];
    for &a in association.iter() {
        loads[a] += 1;
    }

    for _ in 0..10 * n.max(1) {
        let mut order: Vec<usize> = (0..n_bs).collect();
        order.sort_by(|&a, &b| loads[b].cmp(&loads[a]).then(a.cmp(&b)));

        let mut chosen: Option<(usize, usize, usize)> = None;
        'sources: for &s in &order {
            if loads[s] < 2 {
                break;
            }
            let mut best: Option<(usize, usize, usize)> = None;
            for (u, &a) in association.iter().enumerate() {
                if a != s {
                    continue;
                }
                for t in 0..n_bs {
                    if t == s || loads[t] + 2 > loads[s] {
                        continue;
                    }
                    if power[u * n_bs + t] < margin * power[u * n_bs + s] {
                        continue;
                    }
                    if se[u * n_bs + t] * (loads[s] as f64)
                        < se[u * n_bs + s] * ((loads[t] + 1) as f64)
                    {
                        continue;
                    }
                    let key = (loads[t], t, u);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
            }
            if let Some((_, t, u)) = best {
                chosen = Some((u, s, t));
                break 'sources;
            }
        }
        match chosen {
            Some((u, s, t)) => {
                association[u] = t;
                loads[s] -= 1;
                loads[t] += 1;
            }
            None => break,
        }
    }
}

fn fading_vec(drop_seed: u64, rx_id: u64, n_nodes: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(drop_seed, "fading", rx_id));
    (0..n_nodes).map(|_| fading_sample(&mut rng)).collect()
}

/// Receiver id space: users by index, relays offset into a disjoint block.
fn relay_rx_id(j: usize) -> u64 {
    (1u64 << 32) + j as u64
}

fn downlink_sinr(
    rx: Point,
    sig_node: usize,
    serving: LinkKind,
    skip: Option<usize>,
    node_pos: &[Point],
    node_power: &[f64],
    fading: &[f64],
    radio: &RadioConfig,
) -> f64 {
    let sig = node_power[sig_node]
        * gain(rx.dist(node_pos[sig_node]), serving, radio)
        * fading[sig_node];
    let mut denom = radio.noise_power_w;
    for i in 0..node_pos.len() {
        if i == sig_node || Some(i) == skip {
            continue;
        }
        denom +=
            node_power[i] * gain(rx.dist(node_pos[i]), LinkKind::Interference, radio) * fading[i];
    }
    if denom == 0.0 {
        f64::INFINITY
    } else {
        sig / denom
    }
}

fn place_relays(
    partition: &CellPartition,
    users: &[UserSample],
    variant: SchemeVariant,
    k: usize,
    radio: &RadioConfig,
    drop_seed: u64,
) -> Result<Vec<RelayNode>> {
    let kind = match variant {
        SchemeVariant::FixedRelays => RelayKind::GroundRn,
        SchemeVariant::MobileRelays => RelayKind::SuavRn,
        _ => return Ok(Vec::new()),
    };
    let n = partition.n_cells();
    let mut out = Vec::with_capacity(n * k);

    if kind == RelayKind::GroundRn {
        for cell in 0..n {
            for pos in fixed_ring_placement(partition, cell, k)? {
                out.push(RelayNode { pos, donor: cell, kind });
            }
        }
        return Ok(out);
    }

    let mut cell_ues: Vec<Vec<Point>> = vec![Vec::new(); n];
    for u in users {
        cell_ues[u.home_cell].push(u.pos);
    }
    // First pass: clustering alone gives each cell a provisional layout,
    // which the second pass treats as the out-of-cell interferer map while
    // refining its own cell. An empty cell falls back to the static ring.
    let mut provisional: Vec<Vec<Point>> = Vec::with_capacity(n);
    for cell in 0..n {
        let pos = if cell_ues[cell].is_empty() {
            fixed_ring_placement(partition, cell, k)?
        } else {
            cluster_centroids(&cell_ues[cell], k, derive_seed(drop_seed, "placement", cell as u64))?
        };
        provisional.push(pos);
    }
    for cell in 0..n {
        let positions = if cell_ues[cell].is_empty() {
            fixed_ring_placement(partition, cell, k)?
        } else {
            let mut others: Vec<(Point, f64)> = Vec::new();
            for b in 0..n {
                if b != cell {
                    others.push((partition.site(b), radio.tx_power_bs_w));
                }
            }
            for (c2, pos) in provisional.iter().enumerate() {
                if c2 != cell {
                    for p in pos {
                        others.push((*p, radio.tx_power_rn_w));
                    }
                }
            }
            let ctx = InterferenceContext {
                partition,
                cell,
                radio,
                relay_kind: kind,
                other_nodes: &others,
            };
            hotspot_placement(
                &cell_ues[cell],
                k,
                &ctx,
                derive_seed(drop_seed, "placement", cell as u64),
            )?
            .positions
        };
        for pos in positions {
            out.push(RelayNode { pos, donor: cell, kind });
        }
    }
    Ok(out)
}

fn drop_seed_for(scenario: &Scenario, f: f64, drop_index: u32) -> u64 {
    let traffic_seed = derive_seed(scenario.master_seed, "traffic-f", f.to_bits());
    derive_seed(traffic_seed, "drop", drop_index as u64)
}

/// Builds one drop's geometry and association for the scheme at asymmetry
/// `f` (overriding the scenario's configured asymmetry). Deterministic in
/// (master_seed, f, variant, drop_index).
pub fn realize_drop(
    scenario: &Scenario,
    f: f64,
    variant: SchemeVariant,
    drop_index: u32,
) -> Result<NetworkRealization> {
    scenario.validate()?;
    let partition = CellPartition::new(scenario.layout.rings, scenario.layout.isd_m);
    let n_bs = partition.n_cells();
    let mut traffic = scenario.traffic.clone();
    traffic.asymmetry_f = f;
    traffic.validate(n_bs)?;
    let k = scenario.deployment.relays_per_bs as usize;
    if variant.uses_relays() && k == 0 {
        return Err(Error::invalid(
            "deployment.relays_per_bs",
            "relay deployments need at least one relay per base station",
        ));
    }
    let radio = &scenario.radio;

    let drop_seed = drop_seed_for(scenario, f, drop_index);
    let users = sample_users(&traffic, &partition, derive_seed(drop_seed, "users", 0))?;

    let relays = place_relays(&partition, &users, variant, k, radio, drop_seed)?;
    let mut association = associate(&users, partition.sites(), &relays, radio);
    if matches!(
        variant,
        SchemeVariant::LoadBalancing | SchemeVariant::UpperBound
    ) {
        load_balance(&users, partition.sites(), radio, &mut association);
    }

    Ok(NetworkRealization {
        bs_positions: partition.sites().to_vec(),
        relays,
        users,
        association,
    })
}

/// One deterministic drop reduced to hotspot-cell metrics.
pub fn run_drop(
    scenario: &Scenario,
    f: f64,
    variant: SchemeVariant,
    drop_index: u32,
) -> Result<DropMetrics> {
    let realization = realize_drop(scenario, f, variant, drop_index)?;
    let rates = hotspot_throughputs(
        &realization,
        scenario.traffic.hotspot_cell,
        variant,
        &scenario.radio,
        drop_seed_for(scenario, f, drop_index),
    );
    metrics(rates)
}

/// Throughputs of the hotspot cell's users, in user order.
fn hotspot_throughputs(
    real: &NetworkRealization,
    hotspot_cell: usize,
    variant: SchemeVariant,
    radio: &RadioConfig,
    drop_seed: u64,
) -> Vec<f64> {
    let n_bs = real.bs_positions.len();
    let n_nodes = n_bs + real.relays.len();

    let mut node_pos = real.bs_positions.clone();
    let mut node_power = vec![radio.tx_power_bs_w; n_bs];
    for rn in &real.relays {
        node_pos.push(rn.pos);
        node_power.push(radio.tx_power_rn_w);
    }

    // Attached-user counts per node, and schedulable flow counts per
    // station: a station splits its airtime equally over its direct users
    // plus one backhaul flow per user parked on each of its relays.
    let mut attached = vec![0usize; n_nodes];
    for &a in &real.association {
        attached[a] += 1;
    }
    let mut flows = attached[..n_bs].to_vec();
    for (j, rn) in real.relays.iter().enumerate() {
        flows[rn.donor] += attached[n_bs + j];
    }

    // A transmitter with nothing scheduled is silent: idle relays and empty
    // stations radiate no interference.
    for b in 0..n_bs {
        if flows[b] == 0 {
            node_power[b] = 0.0;
        }
    }
    for j in 0..real.relays.len() {
        if attached[n_bs + j] == 0 {
            node_power[n_bs + j] = 0.0;
        }
    }

    let mut backhaul_cache: Vec<Option<f64>> = vec![None; real.relays.len()];
    let mut rates = Vec::new();
    for (i, u) in real.users.iter().enumerate() {
        if u.home_cell != hotspot_cell {
            continue;
        }
        let s = real.association[i];
        if variant == SchemeVariant::UpperBound {
            // Interference-free bound: the share is all that limits a user.
            rates.push(
                radio.bandwidth_hz * radio.spectral_efficiency_cap * radio.rate_calibration
                    / flows[s] as f64,
            );
            continue;
        }
        let fading = fading_vec(drop_seed, i as u64, n_nodes);
        let rate = if s < n_bs {
            let sinr = downlink_sinr(
                u.pos,
                s,
                LinkKind::BsToUe,
                None,
                &node_pos,
                &node_power,
                &fading,
                radio,
            );
            throughput_direct(1.0 / flows[s] as f64, sinr, radio)
        } else {
            let j = s - n_bs;
            let rn = real.relays[j];
            let c_bh = match backhaul_cache[j] {
                Some(v) => v,
                None => {
                    let rn_fading = fading_vec(drop_seed, relay_rx_id(j), n_nodes);
                    let sinr = downlink_sinr(
                        rn.pos,
                        rn.donor,
                        rn.kind.backhaul_link(),
                        Some(s),
                        &node_pos,
                        &node_power,
                        &rn_fading,
                        radio,
                    );
                    let v = throughput_direct(1.0 / flows[rn.donor] as f64, sinr, radio);
                    backhaul_cache[j] = Some(v);
                    v
                }
            };
            let sinr_ac = downlink_sinr(
                u.pos,
                s,
                rn.kind.access_link(),
                None,
                &node_pos,
                &node_power,
                &fading,
                radio,
            );
            let c_ac = throughput_direct(1.0 / attached[s] as f64, sinr_ac, radio);
            throughput_relayed(c_bh, c_ac)
        };
        rates.push(rate);
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario() -> Scenario {
        let mut sc = Scenario::with_master_seed(42);
        sc.layout.rings = 1;
        sc.traffic.total_users = 70;
        sc.deployment.relays_per_bs = 2;
        sc
    }

    #[test]
    fn equal_shares() {
        assert_eq!(schedule(1), vec![1.0]);
        assert_eq!(schedule(4), vec![0.25; 4]);
        assert!(schedule(0).is_empty());
        for n in [1, 3, 7, 100] {
            let total: f64 = schedule(n).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_rate_examples() {
        let radio = RadioConfig {
            rate_calibration: 1.0,
            ..RadioConfig::default()
        };
        assert_eq!(throughput_direct(1.0, 1.0, &radio), 1e7);
        let capped = throughput_direct(0.5, 1e12, &radio);
        assert_eq!(capped, 0.5 * 1e7 * radio.spectral_efficiency_cap);
        assert_eq!(throughput_direct(0.0, 3.0, &radio), 0.0);
        assert_eq!(
            throughput_direct(1.0, f64::INFINITY, &radio),
            1e7 * radio.spectral_efficiency_cap
        );
    }

    #[test]
    fn relayed_rate_examples() {
        assert_eq!(throughput_relayed(4e6, 4e6), 2e6);
        assert_eq!(throughput_relayed(6e6, 3e6), 2e6);
        assert_eq!(throughput_relayed(0.0, 5e6), 0.0);
        assert_eq!(throughput_relayed(5e6, 0.0), 0.0);
    }

    #[test]
    fn metric_examples() {
        let m = metrics(vec![1.0; 4]).unwrap();
        assert_eq!((m.mean_bps, m.qos_bps), (1.0, 1.0));

        let m = metrics((1..=100).map(f64::from).collect()).unwrap();
        assert_eq!(m.qos_bps, 5.0);
        assert_eq!(m.mean_bps, 50.5);

        let m = metrics(vec![7.0]).unwrap();
        assert_eq!((m.mean_bps, m.qos_bps), (7.0, 7.0));

        let m = metrics(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.qos_bps, 1.0);
        assert!(m.qos_bps >= 1.0 && m.qos_bps <= 3.0);

        assert!(metrics(Vec::new()).is_err());
    }

    #[test]
    fn association_prefers_strong_local_relay() {
        let part = CellPartition::new(0, 500.0);
        let radio = {
            let mut r = RadioConfig::default();
            r.tx_power_rn_w = r.tx_power_bs_w;
            r
        };
        let user = UserSample {
            pos: Point::new(100.0, 0.0),
            home_cell: 0,
        };

        assert_eq!(associate(&[user], part.sites(), &[], &radio), vec![0]);

        let near = RelayNode {
            pos: Point::new(110.0, 0.0),
            donor: 0,
            kind: RelayKind::SuavRn,
        };
        assert_eq!(associate(&[user], part.sites(), &[near], &radio), vec![1]);
    }

    #[test]
    fn association_ties_break_low() {
        let part = CellPartition::new(0, 500.0);
        let radio = RadioConfig::default();
        let user = UserSample {
            pos: Point::new(200.0, 0.0),
            home_cell: 0,
        };
        let mk = |y: f64| RelayNode {
            pos: Point::new(200.0, y),
            donor: 0,
            kind: RelayKind::GroundRn,
        };
        let assoc = associate(&[user], part.sites(), &[mk(10.0), mk(-10.0)], &radio);
        assert_eq!(assoc, vec![1]);
    }

    #[test]
    fn boundary_user_moves_off_loaded_station() {
        let radio = RadioConfig::default();
        let sites = vec![Point::new(0.0, 0.0), Point::new(1000.0, 0.0)];
        let mut users: Vec<UserSample> = (0..9)
            .map(|i| UserSample {
                pos: Point::new(50.0, i as f64),
                home_cell: 0,
            })
            .collect();
        users.push(UserSample {
            pos: Point::new(495.0, 0.0),
            home_cell: 0,
        });
        let mut assoc = vec![0usize; 10];
        load_balance(&users, &sites, &radio, &mut assoc);
        assert_eq!(assoc[9], 1, "boundary user should migrate");
        assert_eq!(assoc[..9], [0; 9]);

        // Fixed point: a second pass changes nothing.
        let again = assoc.clone();
        let mut reran = assoc.clone();
        load_balance(&users, &sites, &radio, &mut reran);
        assert_eq!(reran, again);
    }

    #[test]
    fn balanced_loads_stay_put() {
        let radio = RadioConfig::default();
        let sites = vec![Point::new(0.0, 0.0), Point::new(1000.0, 0.0)];
        let users = vec![
            UserSample {
                pos: Point::new(490.0, 0.0),
                home_cell: 0,
            },
            UserSample {
                pos: Point::new(510.0, 0.0),
                home_cell: 1,
            },
        ];
        let mut assoc = vec![0, 1];
        load_balance(&users, &sites, &radio, &mut assoc);
        assert_eq!(assoc, vec![0, 1]);
    }

    #[test]
    fn drops_are_reproducible() {
        let sc = small_scenario();
        for variant in [SchemeVariant::MobileRelays, SchemeVariant::LoadBalancing] {
            let a = run_drop(&sc, 3.0, variant, 0).unwrap();
            let b = run_drop(&sc, 3.0, variant, 0).unwrap();
            assert_eq!(a.mean_bps.to_bits(), b.mean_bps.to_bits());
            assert_eq!(a.qos_bps.to_bits(), b.qos_bps.to_bits());
            assert_eq!(a.user_throughputs, b.user_throughputs);
        }
        let a = run_drop(&sc, 3.0, SchemeVariant::Reference, 0).unwrap();
        let b = run_drop(&sc, 3.0, SchemeVariant::Reference, 1).unwrap();
        assert_ne!(a.mean_bps, b.mean_bps, "drops should differ");
    }

    #[test]
    fn interference_free_bound_dominates_every_scheme() {
        let sc = small_scenario();
        let ub = run_drop(&sc, 3.0, SchemeVariant::UpperBound, 0).unwrap();
        for variant in SchemeVariant::ALL {
            let m = run_drop(&sc, 3.0, variant, 0).unwrap();
            assert!(
                ub.mean_bps >= m.mean_bps - 1e-6,
                "{variant:?}: ub mean {} vs {}",
                ub.mean_bps,
                m.mean_bps
            );
            assert!(
                ub.qos_bps >= m.qos_bps - 1e-6,
                "{variant:?}: ub qos {} vs {}",
                ub.qos_bps,
                m.qos_bps
            );
        }
    }

    #[test]
    fn relays_deployed_per_cell() {
        let sc = small_scenario();
        let part = CellPartition::new(sc.layout.rings, sc.layout.isd_m);
        let traffic_seed = derive_seed(sc.master_seed, "traffic-f", 3f64.to_bits());
        let drop_seed = derive_seed(traffic_seed, "drop", 0);
        let users = sample_users(
            &{
                let mut t = sc.traffic.clone();
                t.asymmetry_f = 3.0;
                t
            },
            &part,
            derive_seed(drop_seed, "users", 0),
        )
        .unwrap();

        for variant in [SchemeVariant::FixedRelays, SchemeVariant::MobileRelays] {
            let relays = place_relays(&part, &users, variant, 2, &sc.radio, drop_seed).unwrap();
            assert_eq!(relays.len(), 2 * part.n_cells());
            for (j, rn) in relays.iter().enumerate() {
                assert_eq!(rn.donor, j / 2);
                assert!(part.contains(rn.donor, rn.pos));
            }
        }
        let none = place_relays(&part, &users, SchemeVariant::Reference, 2, &sc.radio, drop_seed)
            .unwrap();
        assert!(none.is_empty());
    }
}
