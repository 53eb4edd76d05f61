use mxsetup::measures::power_on_off;
use mxsetup::model::{BatchDistribution, Costs, ModelParams, SetupPolicy};
use mxsetup::moments::MomentTable;
use mxsetup::solver::SolvedModel;

#[test]
fn f32_solve_tracks_f64() {
    let build32 = || {
        ModelParams::<f32>::new(
            1.0,
            1.0,
            3,
            &SetupPolicy::Staggered(1.0),
            BatchDistribution::deterministic(2).unwrap(),
            Costs::default(),
        )
        .unwrap()
    };
    let p64 = ModelParams::<f64>::new(
        1.0,
        1.0,
        3,
        &SetupPolicy::Staggered(1.0),
        BatchDistribution::deterministic(2).unwrap(),
        Costs::default(),
    )
    .unwrap();
    let s32 = SolvedModel::solve(&build32()).unwrap();
    let s64 = SolvedModel::solve(&p64).unwrap();
    for i in 0..=3 {
        assert!((s32.level_masses()[i] as f64 - s64.level_masses()[i]).abs() < 1e-4);
        assert!((s32.boundary(i) as f64 - s64.boundary(i)).abs() < 1e-4);
    }
    let eq32 = MomentTable::compute(&s32, 1).total(1) as f64;
    let eq64 = MomentTable::compute(&s64, 1).total(1);
    assert!((eq32 - eq64).abs() < 1e-3 * eq64);
    assert!((power_on_off(&s32) as f64 - power_on_off(&s64)).abs() < 1e-4);
}

#[test]
fn f32_table_is_a_distribution() {
    let p = ModelParams::<f32>::new(0.8, 1.0, 2, &SetupPolicy::Vacation(0.5), BatchDistribution::single(), Costs::default())
        .unwrap();
    let s = SolvedModel::solve(&p).unwrap();
    let t = s.joint_distribution(200, 1e-4).unwrap();
    assert!((t.total_mass() - 1.0).abs() < 1e-4);
}
