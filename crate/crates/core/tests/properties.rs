use gvf_core::chart::{self, ChartOptions, DEFAULT_ATLAS_STEP};
use gvf_core::doa::{self, circle_loop};
use gvf_core::flow::{self, Direction, IntegratorOptions};
use gvf_core::wazewski::{classify_set, SetClass};
use gvf_core::{get_scenario, Dynamics, GuidingField, PathAtlas, WazewskiConfig};
use proptest::prelude::*;

fn circle2d() -> (GuidingField, WazewskiConfig, PathAtlas) {
    let s = get_scenario("circle2d").unwrap();
    let field = s.guiding().unwrap().clone();
    let wz = WazewskiConfig::for_field(&field, 1.0).unwrap();
    let atlas = chart::build_path_atlas(field.system(), &[2.0, 0.0], DEFAULT_ATLAS_STEP).unwrap();
    (field, wz, atlas)
}

fn polar(radius: f64, angle: f64) -> Vec<f64> {
    vec![radius * angle.cos(), radius * angle.sin()]
}

fn running() -> IntegratorOptions {
    IntegratorOptions { stop_on_converge: false, ..IntegratorOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lyapunov_never_increases_along_trajectories(x in prop::collection::vec(-3.0f64..3.0, 3)) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 0.01);
        let s = get_scenario("circle3d").unwrap();
        let traj = flow::integrate(s.dynamics(), &x, 5.0, Direction::Forward, &running()).unwrap();
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].v <= w[0].v + 1e-8, "V rose from {} to {} at t={}", w[0].v, w[1].v, w[1].t);
        }
    }

    #[test]
    fn crossing_is_unique_and_never_undone(radius in 2.3f64..5.0, angle in 0.0f64..std::f64::consts::TAU) {
        let (field, wz, _) = circle2d();
        let x = polar(radius, angle);
        let opts = running();
        let hit = flow::hitting_time(&field, &x, wz.radius(), 100.0, &opts).unwrap().unwrap();
        prop_assert!(hit.tau > 0.0);
        prop_assert!((field.lyapunov(&hit.point).unwrap() - wz.radius()).abs() <= 1e-9);
        for frac in [0.25, 0.5, 0.9] {
            let before = flow::flow_for(&field, &x, frac * hit.tau, &opts).unwrap();
            prop_assert!(field.lyapunov(&before).unwrap() > wz.radius());
        }
        for t in [0.1, 1.0, 10.0] {
            let after = flow::flow_for(&field, &hit.point, t, &opts).unwrap();
            prop_assert!(field.lyapunov(&after).unwrap() < wz.radius());
            prop_assert_eq!(classify_set(&wz, &field, &after).unwrap().class, SetClass::InE);
        }
    }

    #[test]
    fn tube_coordinate_is_the_error_map(radius in 1.75f64..2.2, angle in 0.0f64..std::f64::consts::TAU) {
        let (field, wz, atlas) = circle2d();
        let x = polar(radius, angle);
        prop_assume!(field.lyapunov(&x).unwrap() <= wz.radius());
        let c = chart::global_chart(&field, &wz, &atlas, &x, &ChartOptions::default()).unwrap();
        prop_assert_eq!(c.tau, 0.0);
        prop_assert_eq!(c.point.r, field.system().error_map(&x).unwrap());
        let p = chart::project_to_path(field.system(), &x).unwrap();
        prop_assert_eq!(c.point.theta, atlas.theta_of(&p));
    }

    #[test]
    fn chart_round_trips(radius in 0.3f64..5.0, angle in 0.0f64..std::f64::consts::TAU) {
        let (field, wz, atlas) = circle2d();
        let x = polar(radius, angle);
        let opts = ChartOptions::default();
        let c = chart::global_chart(&field, &wz, &atlas, &x, &opts).unwrap();
        prop_assert!((0.0..std::f64::consts::TAU).contains(&c.point.theta));
        let back = chart::chart_inverse(&field, &wz, &atlas, &c.point, &opts).unwrap();
        let err = ((back[0] - x[0]).powi(2) + (back[1] - x[1]).powi(2)).sqrt();
        prop_assert!(err <= 1e-6, "{x:?} -> {back:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn winding_depends_only_on_the_loop_class(
        radius in 2.6f64..4.5,
        small in 0.05f64..0.5,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let (field, wz, atlas) = circle2d();
        let opts = ChartOptions::default();
        for samples in [180, 720] {
            let around = doa::winding_number(&field, &wz, &atlas, &circle_loop(&[0.0, 0.0], radius, samples, phase), &opts).unwrap();
            prop_assert_eq!(around.winding, 1);
            let off = doa::winding_number(&field, &wz, &atlas, &circle_loop(&[3.0, 0.0], small, samples, phase), &opts).unwrap();
            prop_assert_eq!(off.winding, 0);
        }
    }
}
