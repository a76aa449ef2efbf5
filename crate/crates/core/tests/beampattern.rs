use ma_isac::baselines::{run_baseline_on, BaselineKind};
use ma_isac::channel::beampattern_sweep;
use ma_isac::harness::AngleGrid;
use ma_isac::pdd::PddOptions;
use ma_isac::scenario::{Instance, ScenarioConfig};
use ma_isac::to_db;

fn pattern(kind: BaselineKind, cfg: &ScenarioConfig, inst: &Instance, r: u64, grid: &[f64]) -> Option<Vec<f64>> {
    let res = run_baseline_on(kind, cfg, inst, r, &PddOptions::from_config(cfg)).unwrap();
    let rad: Vec<f64> = grid.iter().map(|d| d.to_radians()).collect();
    res.feasible().then(|| {
        beampattern_sweep(&res.positions, &res.beamformer.w, inst.wavelength, &rad)
            .into_iter()
            .map(|g| to_db(g / inst.power))
            .collect()
    })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

/// Width in degrees of the lobe around `center` that stays within 3 dB of it.
fn half_power_width(theta: &[f64], gain: &[f64], center: usize) -> f64 {
    let floor = gain[center] - 3.0;
    let mut lo = center;
    while lo > 0 && gain[lo - 1] >= floor {
        lo -= 1;
    }
    let mut hi = center;
    while hi + 1 < gain.len() && gain[hi + 1] >= floor {
        hi += 1;
    }
    theta[hi] - theta[lo]
}

#[test]
fn joint_design_peaks_at_target_with_a_narrower_lobe() {
    let cfg = ScenarioConfig::reference();
    assert_eq!(cfg.num_antennas, 8);
    let grid = AngleGrid::default().points().unwrap();
    let target_deg = cfg.target_angle.to_degrees();
    let at_target = grid.iter().position(|d| (d - target_deg).abs() < 1e-9).unwrap();
    let mut checked = 0;
    for r in 0..6 {
        let inst = Instance::from_config(&cfg, r);
        let (Some(pdd), Some(fa)) = (
            pattern(BaselineKind::PddJapb, &cfg, &inst, r, &grid),
            pattern(BaselineKind::FixedUla, &cfg, &inst, r, &grid),
        ) else {
            continue;
        };
        let peak = argmax(&pdd);
        assert!((grid[peak] - target_deg).abs() <= 1.0, "realization {r}: peak at {}°", grid[peak]);
        let (wp, wf) = (half_power_width(&grid, &pdd, at_target), half_power_width(&grid, &fa, at_target));
        assert!(wp <= wf, "realization {r}: pdd width {wp}° > fa width {wf}°");
        checked += 1;
        if checked == 2 {
            break;
        }
    }
    assert!(checked > 0, "no realization where both schemes are feasible");
}
