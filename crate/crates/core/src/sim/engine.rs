use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{substream, NetworkConfig, Purpose, SpatialRealization};
use crate::error::{param, Result};

/// Per-device counters and samples from the measurement phase, plus
/// whole-run totals for conservation checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub attempts: u64,
    pub successes: u64,
    pub busy_slots: u64,
    pub idle_slots: u64,
    /// Delivery slot − generation slot + 1.
    pub sojourn: Vec<u32>,
    /// Age reached just before each delivery resets it, i.e. delivery slot −
    /// previous delivered generation + 1. Only recorded once a previous
    /// delivery exists.
    pub peak_aoi: Vec<u32>,
    pub total_arrivals: u64,
    pub total_deliveries: u64,
    pub final_queue: u64,
}

impl DeviceRecord {
    pub fn success_ratio(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

/// One slot of a traced device: what it delivered and the age afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub slot: u64,
    pub delivered_generation: Option<u64>,
    /// Age at the start of the next slot.
    pub aoi_after: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub realization: u64,
    pub devices: Vec<DeviceRecord>,
    pub warmup_slots: u64,
    pub measured_slots: u64,
    /// False when the warm-up budget ran out before the idle fraction settled.
    pub steady: bool,
    pub trace: Option<Vec<TraceEvent>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record a slot-by-slot AoI trace of this device.
    pub trace_device: Option<usize>,
}

/// Recompute the age sequence of a trace from the AoI recursion, starting
/// from age 0.
pub fn replay_aoi(trace: &[TraceEvent]) -> Vec<u64> {
    let mut age = 0u64;
    trace
        .iter()
        .map(|e| {
            age = match e.delivered_generation {
                Some(g) => e.slot - g + 1,
                None => age + 1,
            };
            age
        })
        .collect()
}

struct Device {
    queue: VecDeque<u64>,
    age: u64,
    delivered_once: bool,
}

/// Run one realization: warm up until the windowed idle fraction settles
/// (or the budget of `n_slots_max` slots is spent), then measure for
/// `n_slots_max` slots.
pub fn run_realization(
    topo: &SpatialRealization,
    cfg: &NetworkConfig,
    realization: u64,
    opts: &RunOptions,
) -> Result<SimRecord> {
    cfg.validate_dynamics()?;
    let n = topo.len();
    if let Some(i) = opts.trace_device {
        if i >= n {
            return param(format!("trace device {i} out of range for {n} devices"));
        }
    }

    // gain[j * n + i]: received power at BS j from device i, before fading
    let rho = cfg.rho_mw();
    let mut gain = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            gain[j * n + i] = rho * topo.tx_power_factor[i] * topo.dist_sq(i, j).powf(-cfg.eta / 2.0);
        }
    }

    let mut arrivals_rng = substream(cfg.seed, realization, Purpose::Arrivals);
    let mut fading_rng = substream(cfg.seed, realization, Purpose::Fading);
    let mut devices: Vec<Device> = (0..n)
        .map(|_| Device { queue: VecDeque::new(), age: 0, delivered_once: false })
        .collect();
    let mut records = vec![DeviceRecord::default(); n];
    let mut trace = opts.trace_device.map(|_| Vec::new());
    let mut active = Vec::with_capacity(n);
    let mut success = vec![false; n];

    let mut slot = 0u64;
    let mut step = |slot: u64, measuring: bool, records: &mut [DeviceRecord], trace: &mut Option<Vec<TraceEvent>>| -> u64 {
        for (dev, rec) in devices.iter_mut().zip(records.iter_mut()) {
            if arrivals_rng.random_bool(cfg.alpha) {
                dev.queue.push_back(slot);
                rec.total_arrivals += 1;
            }
        }
        active.clear();
        active.extend((0..n).filter(|&i| !devices[i].queue.is_empty()));
        for &j in &active {
            let h: f64 = Exp1.sample(&mut fading_rng);
            let row = &gain[j * n..(j + 1) * n];
            let mut interference = 0.0;
            for &i in &active {
                if i != j {
                    let g: f64 = Exp1.sample(&mut fading_rng);
                    interference += row[i] * g;
                }
            }
            success[j] = h * row[j] > cfg.theta * interference;
        }
        let idle = (n - active.len()) as u64;
        let mut ai = 0;
        for (i, (dev, rec)) in devices.iter_mut().zip(records.iter_mut()).enumerate() {
            let transmitting = ai < active.len() && active[ai] == i;
            if transmitting {
                ai += 1;
            }
            let mut delivered = None;
            if transmitting && success[i] {
                let generation = dev.queue.pop_front().expect("active device has a packet");
                let sojourn = slot - generation + 1;
                rec.total_deliveries += 1;
                if measuring {
                    rec.sojourn.push(sojourn as u32);
                    if dev.delivered_once {
                        rec.peak_aoi.push((dev.age + 1) as u32);
                    }
                }
                dev.delivered_once = true;
                dev.age = sojourn;
                delivered = Some(generation);
            } else {
                dev.age += 1;
            }
            if measuring {
                if transmitting {
                    rec.attempts += 1;
                    rec.busy_slots += 1;
                    rec.successes += success[i] as u64;
                } else {
                    rec.idle_slots += 1;
                }
            }
            if let (Some(t), Some(d)) = (trace.as_mut(), opts.trace_device) {
                if d == i {
                    t.push(TraceEvent { slot, delivered_generation: delivered, aoi_after: dev.age });
                }
            }
        }
        idle
    };

    // warm-up: compare idle fractions of consecutive windows
    let per_window = (n as u64 * cfg.warmup_window) as f64;
    let mut previous: Option<f64> = None;
    let mut steady = false;
    while slot < cfg.n_slots_max {
        let mut idle = 0u64;
        for _ in 0..cfg.warmup_window {
            idle += step(slot, false, &mut records, &mut trace);
            slot += 1;
        }
        let fraction = idle as f64 / per_window;
        if previous.is_some_and(|p| (fraction - p).abs() < cfg.steady_tol) {
            steady = true;
            break;
        }
        previous = Some(fraction);
    }
    let warmup_slots = slot;
    for _ in 0..cfg.n_slots_max {
        step(slot, true, &mut records, &mut trace);
        slot += 1;
    }
    for (dev, rec) in devices.iter().zip(records.iter_mut()) {
        rec.final_queue = dev.queue.len() as u64;
    }
    Ok(SimRecord {
        realization,
        devices: records,
        warmup_slots,
        measured_slots: cfg.n_slots_max,
        steady,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{generate_topology, Point};
    use super::*;

    fn small_cfg(alpha: f64, seed: u64) -> NetworkConfig {
        NetworkConfig {
            alpha,
            seed,
            n_slots_max: 3_000,
            warmup_window: 500,
            area_side: 5.0,
            n_realizations: 1,
            ..Default::default()
        }
    }

    #[test]
    fn zero_load_stays_idle() {
        let cfg = small_cfg(0.0, 1);
        let topo = generate_topology(&cfg, 0).unwrap();
        let rec = run_realization(&topo, &cfg, 0, &RunOptions::default()).unwrap();
        assert!(rec.steady);
        for d in &rec.devices {
            assert_eq!(d.attempts, 0);
            assert_eq!(d.idle_slots, cfg.n_slots_max);
            assert!(d.sojourn.is_empty() && d.peak_aoi.is_empty());
            assert_eq!(d.success_ratio(), None);
        }
    }

    #[test]
    fn lone_cell_never_fails() {
        let cfg = NetworkConfig { alpha: 0.5, n_slots_max: 200_000, ..small_cfg(0.5, 4) };
        let topo = SpatialRealization::from_positions(
            1.0,
            vec![Point::new(0.5, 0.5)],
            vec![Point::new(0.7, 0.4)],
            cfg.eta,
            cfg.eps,
        )
        .unwrap();
        let rec = run_realization(&topo, &cfg, 0, &RunOptions::default()).unwrap();
        let d = &rec.devices[0];
        assert_eq!(d.attempts, d.successes);
        assert!(d.sojourn.iter().all(|&s| s == 1));
        let peak = d.peak_aoi.iter().map(|&p| p as f64).sum::<f64>() / d.peak_aoi.len() as f64;
        // mean interarrival 1/α = 2 plus the delivery slot
        assert!((peak - 3.0).abs() < 0.02, "peak {peak}");
    }

    #[test]
    fn conservation_and_slot_accounting() {
        let cfg = small_cfg(0.3, 2);
        let topo = generate_topology(&cfg, 0).unwrap();
        let rec = run_realization(&topo, &cfg, 0, &RunOptions::default()).unwrap();
        for d in &rec.devices {
            assert_eq!(d.total_arrivals, d.total_deliveries + d.final_queue);
            assert_eq!(d.busy_slots + d.idle_slots, rec.measured_slots);
            assert!(d.successes <= d.attempts);
            assert_eq!(d.attempts, d.busy_slots);
        }
    }

    #[test]
    fn traced_ages_follow_the_recursion() {
        let cfg = small_cfg(0.2, 6);
        let topo = generate_topology(&cfg, 0).unwrap();
        let rec = run_realization(&topo, &cfg, 0, &RunOptions { trace_device: Some(3) }).unwrap();
        let trace = rec.trace.unwrap();
        assert_eq!(trace.len() as u64, rec.warmup_slots + rec.measured_slots);
        let replayed = replay_aoi(&trace);
        assert!(trace.iter().zip(&replayed).all(|(e, &a)| e.aoi_after == a));
        // each recorded peak is one more than the age just before that delivery
        let measured = &trace[rec.warmup_slots as usize..];
        let mut expected = Vec::new();
        let mut seen = trace[..rec.warmup_slots as usize].iter().any(|e| e.delivered_generation.is_some());
        let mut before = trace.get(rec.warmup_slots as usize - 1).map_or(0, |e| e.aoi_after);
        for e in measured {
            if e.delivered_generation.is_some() {
                if seen {
                    expected.push((before + 1) as u32);
                }
                seen = true;
            }
            before = e.aoi_after;
        }
        assert_eq!(expected, rec.devices[3].peak_aoi);
    }

    #[test]
    fn bad_trace_index() {
        let cfg = small_cfg(0.2, 6);
        let topo = generate_topology(&cfg, 0).unwrap();
        assert!(run_realization(&topo, &cfg, 0, &RunOptions { trace_device: Some(10_000) }).is_err());
    }
}
