//! Echo geometry, occlusion and localization against hand-computed scenes.

use echoflow_core::geometry::{Pose2, Segment, Vec2};
use echoflow_core::sonar::deadzone::{DeadZone, DeadZoneMap};
use echoflow_core::sonar::trace::trace_reflections;
use echoflow_core::sonar::{PolarGrid, ReflectorKind, SonarConfig, SonarSimulator};
use echoflow_core::world::EnvironmentModel;
use echoflow_core::SensorPose;

fn l_corner() -> EnvironmentModel {
    let segments = vec![
        Segment::new(Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0)),
        Segment::new(Vec2::new(2.0, 1.0), Vec2::new(-1.0, 1.0)),
    ];
    EnvironmentModel::new(segments, vec![], vec![]).unwrap()
}

#[test]
fn l_corner_echoes() {
    let mut events = trace_reflections(&l_corner(), &Pose2::default(), 5.0);
    events.sort_by(|a, b| a.bearing.total_cmp(&b.bearing));
    let got: Vec<(ReflectorKind, f64, f64)> = events.iter().map(|e| (e.kind, e.range, e.bearing)).collect();
    let half = 0.5f64.atan().to_degrees();
    let expected = [
        // Side wall foot straight to the left, on the edge of the field of view.
        (ReflectorKind::Plane, 1.0, -90.0),
        (ReflectorKind::Corner, 5f64.sqrt(), -half),
        (ReflectorKind::Plane, 2.0, 0.0),
        (ReflectorKind::Edge, 5f64.sqrt(), half),
    ];
    assert_eq!(got.len(), expected.len(), "{got:?}");
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g.0, e.0);
        assert!((g.1 - e.1).abs() < 1e-12, "{g:?} vs {e:?}");
        assert!((g.2 - e.2).abs() < 1e-9, "{g:?} vs {e:?}");
    }
}

#[test]
fn l_corner_from_inside_the_angle() {
    // Facing the corner: both wall feet at 90 degrees from boresight drop out.
    let sensor = Pose2::new(1.0, 0.0, std::f64::consts::FRAC_PI_4);
    let events = trace_reflections(&l_corner(), &sensor, 5.0);
    let corner = events.iter().find(|e| e.kind == ReflectorKind::Corner).unwrap();
    assert!((corner.range - 2f64.sqrt()).abs() < 1e-12);
    assert!(corner.bearing.abs() < 1e-9);
    let planes: Vec<_> = events.iter().filter(|e| e.kind == ReflectorKind::Plane).collect();
    assert_eq!(planes.len(), 2);
    for p in planes {
        assert!((p.range - 1.0).abs() < 1e-12);
        assert!((p.bearing.abs() - 45.0).abs() < 1e-9);
    }
}

#[test]
fn body_occluder_shadows_its_subtense() {
    let grid = PolarGrid::canonical();
    let bearing = 60f64.to_radians();
    let dir = Vec2::from_angle(-bearing);
    // 12 x 5 cm housing whose near face is 0.2 m out, facing the sensor.
    let body = DeadZone::new(dir * 0.225, -bearing, 0.12, 0.05).unwrap();
    let map = DeadZoneMap::new(&grid, &[body], &SensorPose::centered());
    let half = (0.06f64 / 0.2).atan().to_degrees();
    for j in 0..grid.n_angle {
        let off = (grid.angle_deg(j) - 60.0).abs();
        assert_eq!(map.column_blocked(j), off < half, "column {} deg", grid.angle_deg(j));
        if map.column_blocked(j) {
            let near = 0.2 / (off.to_radians()).cos();
            let first = map.first_blocked(j);
            assert!(grid.range_center(first) > near);
            assert!(grid.range_center(first - 1) <= near);
        }
    }
    let blocked = (0..grid.n_angle).filter(|&j| map.column_blocked(j)).count();
    assert_eq!(blocked, 33);
}

#[test]
fn body_occluder_at_edge_of_view() {
    let grid = PolarGrid::canonical();
    let dir = Vec2::from_angle(-90f64.to_radians());
    let body = DeadZone::new(dir * 0.225, -90f64.to_radians(), 0.12, 0.05).unwrap();
    let map = DeadZoneMap::new(&grid, &[body], &SensorPose::centered());
    let blocked: Vec<f64> = (0..grid.n_angle)
        .filter(|&j| map.column_blocked(j))
        .map(|j| grid.angle_deg(j))
        .collect();
    assert_eq!(blocked.first().copied(), Some(74.0));
    assert_eq!(blocked.last().copied(), Some(90.0));
    assert_eq!(blocked.len(), 17);
}

#[test]
fn occluded_echo_disappears_from_render() {
    let world = EnvironmentModel::new(vec![Segment::new(Vec2::new(1.5, -3.0), Vec2::new(1.5, 3.0))], vec![], vec![]).unwrap();
    let cfg = SonarConfig {
        sensor_body_occlusion: false,
        ..SonarConfig::fast()
    };
    let clear = SonarSimulator::new(cfg.clone(), vec![SensorPose::centered()], &[]).unwrap();
    let blocker = DeadZone::new(Vec2::new(0.1, 0.0), 0.0, 0.3, 0.02).unwrap();
    let shaded = SonarSimulator::new(cfg, vec![SensorPose::centered()], &[blocker]).unwrap();
    let a = &clear.render(&world, &Pose2::default(), 0)[0];
    let b = &shaded.render(&world, &Pose2::default(), 0)[0];
    let (i, j, peak) = a.argmax();
    assert!((a.grid.range_center(i) - 1.5).abs() < 0.02 && a.grid.angle_deg(j).abs() < 1.0);
    assert!(peak > 0.1);
    assert_eq!(b.get(i, j), 0.0);
}

#[test]
fn fast_render_localizes_walls_across_the_field_of_view() {
    let sim = SonarSimulator::new(
        SonarConfig {
            sensor_body_occlusion: false,
            ..SonarConfig::fast()
        },
        vec![SensorPose::centered()],
        &[],
    )
    .unwrap();
    for bearing in [-70.0f64, -35.0, 0.0, 20.0, 65.0] {
        for range in [0.6, 1.7, 3.2, 4.4] {
            // A long wall whose perpendicular foot sits at (range, bearing).
            let dir = Vec2::from_angle(-bearing.to_radians());
            let foot = dir * range;
            let along = Vec2::new(-dir.y, dir.x) * 0.3;
            let world = EnvironmentModel::new(vec![Segment::new(foot - along, foot + along)], vec![], vec![]).unwrap();
            let e = &sim.render(&world, &Pose2::default(), 0)[0];
            let (i, j, _) = e.argmax();
            assert!((e.grid.angle_deg(j) - bearing).abs() <= 2.0, "{bearing} {range}");
            assert!((e.grid.range_center(i) - range).abs() <= 0.05, "{bearing} {range}");
        }
    }
}
