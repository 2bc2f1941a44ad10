//! Cross-engine agreement on models outside the closed-form family.

use osclaims::quadrature::{
    mean_theorem1, mean_theorem3, second_theorem2, second_theorem2_joint, second_theorem5,
    FactorizedJoint,
};
use osclaims::simulate::estimate_moments;
use osclaims::{
    DependenceModel, GapTable, LinearIntensity, ProcessSpec, QuadratureConfig, SeverityLaw,
    SimulationPlan, SinusoidalIntensity, StructureDistribution, TimeGapTable,
};

fn bench() -> DependenceModel {
    DependenceModel::exponential_mixture(
        1.0,
        SeverityLaw::exponential(10.0).unwrap(),
        SeverityLaw::exponential(1.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn nhpp_series_match_simulation() {
    let cfg = QuadratureConfig::default();
    for process in [
        ProcessSpec::nhpp(LinearIntensity::new(0.5, 1.5).unwrap()),
        ProcessSpec::nhpp(SinusoidalIntensity::new(1.5, 1.0, 1.0).unwrap()),
    ] {
        let t = 2.0;
        let m = mean_theorem1(t, &process, &bench(), &cfg).unwrap();
        let s = second_theorem2(t, &process, &bench(), &cfg).unwrap();
        let plan = SimulationPlan::new(process, bench(), t, 400_000, 17).unwrap();
        let est = estimate_moments(&plan).unwrap();
        assert!(
            est.mean.z_score(m.value).abs() < 4.0,
            "{m:?} vs {:?}",
            est.mean
        );
        assert!(
            est.second_moment.z_score(s.value).abs() < 4.0,
            "{s:?} vs {:?}",
            est.second_moment
        );
    }
}

#[test]
fn joint_path_matches_factorized_series_on_nhpp() {
    let cfg = QuadratureConfig::default();
    let process = ProcessSpec::nhpp(LinearIntensity::new(0.3, 0.6).unwrap());
    let dep = bench();
    let joint = FactorizedJoint::new(&dep).unwrap();
    let a = second_theorem2_joint(1.0, &process, &joint, &cfg).unwrap();
    let b = second_theorem2(1.0, &process, &dep, &cfg).unwrap();
    assert!(
        (a.value - b.value).abs() <= 1e-6 * b.value,
        "{a:?} vs {b:?}"
    );
}

#[test]
fn time_dependent_table_matches_simulation() {
    let dep = DependenceModel::TabulatedTV(
        TimeGapTable::new(
            vec![0.0, 2.0],
            vec![0.0, 1.0],
            vec![1.0, 4.0, 3.0, 6.0],
            vec![2.0, 20.0, 12.0, 45.0],
            vec![1.0, 1.2],
        )
        .unwrap(),
    );
    let l = StructureDistribution::gamma(3.0, 2.0).unwrap();
    let cfg = QuadratureConfig::default();
    let t = 2.0;
    let m = mean_theorem3(t, &l, &dep, &cfg).unwrap();
    let s = second_theorem5(t, &l, &dep, &cfg).unwrap();
    let plan = SimulationPlan::new(ProcessSpec::mixed(l), dep, t, 400_000, 5).unwrap();
    let est = estimate_moments(&plan).unwrap();
    assert!(est.mean.z_score(m.value).abs() < 4.0);
    assert!(est.second_moment.z_score(s.value).abs() < 4.0);
}

#[test]
fn gap_table_on_index_scale_matches_simulation() {
    let dep = DependenceModel::TabulatedV(
        GapTable::new(
            vec![0.0, 0.5, 2.0],
            vec![1.0, 3.0, 5.0],
            vec![2.0, 15.0, 40.0],
            vec![0.8, 1.0, 1.3],
        )
        .unwrap(),
    );
    let process = ProcessSpec::homogeneous(2.0).unwrap();
    let cfg = QuadratureConfig::default();
    let m = mean_theorem1(1.5, &process, &dep, &cfg).unwrap();
    let plan = SimulationPlan::new(process, dep, 1.5, 400_000, 8).unwrap();
    let est = estimate_moments(&plan).unwrap();
    assert!(est.mean.z_score(m.value).abs() < 4.0);
}
