use serde::{Deserialize, Serialize};

use super::SimRecord;
use crate::error::{param, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalClass {
    pub n_devices: usize,
    pub mean_success: f64,
    pub mean_sojourn: Option<f64>,
    pub peak_aoi: Option<f64>,
    pub idle_fraction: f64,
}

/// Statistics pooled over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAggregate {
    pub delta_grid: Vec<f64>,
    /// Fraction of eligible devices whose empirical success ratio exceeds δ.
    pub ccdf: Vec<f64>,
    pub n_devices: usize,
    /// Devices with too few attempts to estimate a success ratio.
    pub n_excluded: usize,
    pub mean_sojourn: Option<f64>,
    /// Mean of all per-delivery peak-AoI samples.
    pub peak_aoi: Option<f64>,
    pub idle_fraction: f64,
    /// Eligible devices split into equal groups by ascending success ratio.
    pub classes: Vec<EmpiricalClass>,
    pub non_steady: usize,
}

fn mean_of(samples: &[&[u32]]) -> Option<f64> {
    let count: usize = samples.iter().map(|s| s.len()).sum();
    (count > 0).then(|| samples.iter().flat_map(|s| s.iter()).map(|&v| v as f64).sum::<f64>() / count as f64)
}

/// Pool `records`. Devices with fewer than `min_attempts` attempts are left
/// out of the success-ratio statistics and counted in `n_excluded`.
pub fn aggregate(records: &[SimRecord], delta_grid: &[f64], n_classes: usize, min_attempts: u64) -> Result<SimAggregate> {
    if records.is_empty() {
        return param("nothing to aggregate");
    }
    if n_classes == 0 {
        return param("need at least one class");
    }
    let devices: Vec<_> = records.iter().flat_map(|r| r.devices.iter()).collect();
    let mut eligible: Vec<(f64, usize)> = devices
        .iter()
        .enumerate()
        .filter(|(_, d)| d.attempts > 0 && d.attempts >= min_attempts)
        .map(|(i, d)| (d.successes as f64 / d.attempts as f64, i))
        .collect();
    let n_excluded = devices.len() - eligible.len();
    let ccdf = delta_grid
        .iter()
        .map(|&delta| {
            if eligible.is_empty() {
                0.0
            } else {
                eligible.iter().filter(|(p, _)| *p > delta).count() as f64 / eligible.len() as f64
            }
        })
        .collect();

    let idle = |ds: &mut dyn Iterator<Item = usize>| {
        let (mut idle, mut total) = (0u64, 0u64);
        for i in ds {
            idle += devices[i].idle_slots;
            total += devices[i].idle_slots + devices[i].busy_slots;
        }
        if total == 0 {
            0.0
        } else {
            idle as f64 / total as f64
        }
    };

    eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut classes = Vec::new();
    if eligible.len() >= n_classes {
        for k in 0..n_classes {
            let group = &eligible[k * eligible.len() / n_classes..(k + 1) * eligible.len() / n_classes];
            let sojourn: Vec<&[u32]> = group.iter().map(|&(_, i)| devices[i].sojourn.as_slice()).collect();
            let peak: Vec<&[u32]> = group.iter().map(|&(_, i)| devices[i].peak_aoi.as_slice()).collect();
            classes.push(EmpiricalClass {
                n_devices: group.len(),
                mean_success: group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64,
                mean_sojourn: mean_of(&sojourn),
                peak_aoi: mean_of(&peak),
                idle_fraction: idle(&mut group.iter().map(|g| g.1)),
            });
        }
    }

    let sojourn: Vec<&[u32]> = devices.iter().map(|d| d.sojourn.as_slice()).collect();
    let peak: Vec<&[u32]> = devices.iter().map(|d| d.peak_aoi.as_slice()).collect();
    Ok(SimAggregate {
        delta_grid: delta_grid.to_vec(),
        ccdf,
        n_devices: devices.len(),
        n_excluded,
        mean_sojourn: mean_of(&sojourn),
        peak_aoi: mean_of(&peak),
        idle_fraction: idle(&mut (0..devices.len())),
        classes,
        non_steady: records.iter().filter(|r| !r.steady).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::DeviceRecord;
    use super::*;

    fn record(devices: Vec<DeviceRecord>) -> SimRecord {
        SimRecord { realization: 0, devices, warmup_slots: 0, measured_slots: 100, steady: true, trace: None }
    }

    fn device(attempts: u64, successes: u64) -> DeviceRecord {
        DeviceRecord {
            attempts,
            successes,
            busy_slots: attempts,
            idle_slots: 100 - attempts,
            sojourn: vec![1, 2, 3],
            peak_aoi: vec![4, 6],
            ..Default::default()
        }
    }

    #[test]
    fn one_device_ccdf() {
        let agg = aggregate(&[record(vec![device(100, 70)])], &[0.5, 0.9], 1, 50).unwrap();
        assert_eq!(agg.ccdf, vec![1.0, 0.0]);
        assert_eq!(agg.mean_sojourn, Some(2.0));
        assert_eq!(agg.peak_aoi, Some(5.0));
    }

    #[test]
    fn pooling_identical_records_changes_nothing() {
        let r = record(vec![device(100, 70), device(60, 20), device(80, 60)]);
        let grid = [0.1, 0.4, 0.8];
        let one = aggregate(std::slice::from_ref(&r), &grid, 3, 50).unwrap();
        let two = aggregate(&[r.clone(), r], &grid, 3, 50).unwrap();
        assert_eq!(one.ccdf, two.ccdf);
        assert_eq!(one.mean_sojourn, two.mean_sojourn);
        assert_eq!(one.peak_aoi, two.peak_aoi);
        for (a, b) in one.classes.iter().zip(&two.classes) {
            assert_eq!(a.mean_success, b.mean_success);
            assert_eq!(a.peak_aoi, b.peak_aoi);
        }
    }

    #[test]
    fn sparse_devices_are_excluded() {
        let agg = aggregate(&[record(vec![device(100, 70), device(10, 10), device(0, 0)])], &[0.8], 1, 50).unwrap();
        assert_eq!(agg.n_excluded, 2);
        assert_eq!(agg.ccdf, vec![0.0]);
    }

    #[test]
    fn classes_are_sorted_by_success() {
        let devs = (0..10).map(|k| device(100, 90 - 5 * k)).collect();
        let agg = aggregate(&[record(devs)], &[], 5, 50).unwrap();
        assert_eq!(agg.classes.len(), 5);
        assert!(agg.classes.windows(2).all(|w| w[0].mean_success < w[1].mean_success));
        assert!(agg.classes.iter().all(|c| c.n_devices == 2));
    }

    #[test]
    fn rejects_empty_input() {
        assert!(aggregate(&[], &[0.5], 1, 1).is_err());
    }
}
