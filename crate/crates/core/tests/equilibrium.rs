use uplink_aoi::fixed_point::{solve, stability_point, sweep_alpha, FixedPointConfig};
use uplink_aoi::macroscopic::{moment_closed_form, moment_integral, LinkParams};
use uplink_aoi::queue::{ArrivalSpec, SojournModel};
use uplink_aoi::specfun::QuadratureSpec;
use uplink_aoi::units::{db_to_linear, Extended};

#[test]
fn integral_moments_approach_the_closed_form() {
    let q = QuadratureSpec::default();
    let closed = moment_closed_form(1, &LinkParams::new(1.0, 4.0, 1.0).unwrap().at_idle(0.5).unwrap()).unwrap();
    let gaps: Vec<f64> = [0.9, 0.99, 0.999]
        .iter()
        .map(|&eps| {
            let p = LinkParams::new(1.0, 4.0, eps).unwrap().at_idle(0.5).unwrap();
            (moment_integral(1, &p, &q).unwrap() - closed).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 2e-3, "{gaps:?}");
}

#[test]
fn sweep_rows_follow_the_grid() {
    let grid = [0.05, 0.1, 0.2, 0.3, 0.4];
    let pts = sweep_alpha(&grid, &LinkParams::new(1.0, 4.0, 1.0).unwrap(), 10, &FixedPointConfig::default()).unwrap();
    assert_eq!(pts.iter().map(|p| p.alpha).collect::<Vec<_>>(), grid);
    assert_eq!(stability_point(&pts), Some(0.3));
    assert!(pts[4].peak_aoi.is_unbounded());
    // peak AoI falls as updates become more frequent, while all classes are stable
    let finite: Vec<f64> = pts.iter().filter_map(|p| p.peak_aoi.finite()).collect();
    assert!(finite.windows(2).all(|w| w[1] < w[0]), "{finite:?}");
}

#[test]
fn solution_serializes_unbounded_values_as_inf() {
    let sol = solve(&ArrivalSpec::new(0.25).unwrap(), &LinkParams::new(db_to_linear(5.0), 4.0, 1.0).unwrap(), 10, &FixedPointConfig::default()).unwrap();
    let json = serde_json::to_value(&sol.aoi).unwrap();
    assert_eq!(json["network"], "inf");
    let back: uplink_aoi::queue::PeakAoIResult = serde_json::from_value(json).unwrap();
    assert_eq!(back.network, Extended::UNBOUNDED);
}

#[test]
fn sojourn_models_share_the_equilibrium_idle_probability() {
    // the idle map does not depend on how sojourn times are read
    let link = LinkParams::new(1.0, 4.0, 1.0).unwrap();
    let a = ArrivalSpec::new(0.2).unwrap();
    let chis: Vec<f64> = [SojournModel::SystemTime, SojournModel::ArrivalView, SojournModel::LiteralIndex]
        .iter()
        .map(|&sojourn| solve(&a, &link, 10, &FixedPointConfig { sojourn, ..Default::default() }).unwrap().chi)
        .collect();
    assert!(chis.iter().all(|&c| c == chis[0]), "{chis:?}");
}
