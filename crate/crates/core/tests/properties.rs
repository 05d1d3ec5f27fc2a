//! Property tests for the numeric invariants that hold across the whole
//! input space rather than at hand-picked points.

use proptest::prelude::*;

use gemini_core::attr::{wrap_angle, AttrValue};
use gemini_core::lidar::{brdf_lambert, brdf_oren_nayar};
use gemini_core::motion::{plan_trajectory, sample_trajectory, Waypoint};
use gemini_core::statelog::encode_attribute;

proptest! {
    #[test]
    fn wrapped_angles_stay_in_the_half_open_interval(a in -1e6f64..1e6f64) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
    }

    #[test]
    fn encoding_starts_with_rank_and_dims(rows in 1usize..6, cols in 1usize..6) {
        let data = vec![1.25f64; rows * cols];
        let value = AttrValue::FloatArray { dims: vec![rows, cols], data };
        let bytes = encode_attribute(&value).unwrap();
        prop_assert_eq!(&bytes[0..8], &2u64.to_le_bytes());
        prop_assert_eq!(&bytes[8..16], &(rows as u64).to_le_bytes());
        prop_assert_eq!(&bytes[16..24], &(cols as u64).to_le_bytes());
        prop_assert_eq!(bytes.len(), 24 + rows * cols * 8);
    }

    #[test]
    fn distinct_shapes_encode_distinctly(n in 2usize..12) {
        // same payload bytes, transposed dims
        let a = AttrValue::FloatArray { dims: vec![n, 2], data: vec![0.5; n * 2] };
        let b = AttrValue::FloatArray { dims: vec![2, n], data: vec![0.5; n * 2] };
        if n != 2 {
            prop_assert_ne!(encode_attribute(&a).unwrap(), encode_attribute(&b).unwrap());
        }
    }

    #[test]
    fn oren_nayar_never_drops_below_its_normal_incidence_value(
        rho in 0.01f64..1.0,
        sigma in 0.0f64..2.0,
        theta in 0.0f64..1.55,
    ) {
        let at_zero = brdf_oren_nayar(rho, sigma, 0.0).unwrap();
        let at_theta = brdf_oren_nayar(rho, sigma, theta).unwrap();
        prop_assert!(at_theta >= at_zero - 1e-15);
        // and the sigma=0 limit is exactly Lambert
        prop_assert_eq!(brdf_oren_nayar(rho, 0.0, theta).unwrap(), brdf_lambert(rho).unwrap());
    }

    #[test]
    fn planned_samples_lie_on_the_polyline(
        x1 in -50.0f64..50.0,
        y1 in -50.0f64..50.0,
        x2 in 60.0f64..120.0,
        y2 in -50.0f64..50.0,
        speed in 0.2f64..5.0,
        dt in 0.1f64..3.0,
    ) {
        // Three waypoints with guaranteed-nondegenerate segments.
        let waypoints = [
            Waypoint { x: 0.0, y: 0.0 },
            Waypoint { x: x1, y: 60.0 + y1 },
            Waypoint { x: x2, y: y2 },
        ];
        let traj = plan_trajectory(&waypoints, speed, dt, 0.0).unwrap();
        let dist_to_segment = |px: f64, py: f64, a: &Waypoint, b: &Waypoint| -> f64 {
            let (vx, vy) = (b.x - a.x, b.y - a.y);
            let len2 = vx * vx + vy * vy;
            let t = (((px - a.x) * vx + (py - a.y) * vy) / len2).clamp(0.0, 1.0);
            let (cx, cy) = (a.x + t * vx, a.y + t * vy);
            ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
        };
        for i in 0..traj.len() {
            let d = waypoints
                .windows(2)
                .map(|w| dist_to_segment(traj.x[i], traj.y[i], &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-9, "sample {i} is {d} m off the polyline");
            prop_assert!(traj.heading[i] > -std::f64::consts::PI);
            prop_assert!(traj.heading[i] <= std::f64::consts::PI);
        }
        // Resampling at the stored timestamps is the identity.
        for i in 0..traj.len() {
            let p = sample_trajectory(&traj, traj.timestamps[i]);
            prop_assert_eq!(p.x, traj.x[i]);
            prop_assert_eq!(p.y, traj.y[i]);
            prop_assert_eq!(p.heading, traj.heading[i]);
        }
    }

    #[test]
    fn heading_interpolation_stays_wrapped(
        h0 in -3.1f64..3.1,
        h1 in -3.1f64..3.1,
        alpha in 0.0f64..1.0,
    ) {
        let traj = gemini_core::motion::Trajectory {
            timestamps: vec![0.0, 1.0],
            x: vec![0.0, 1.0],
            y: vec![0.0, 1.0],
            heading: vec![h0, h1],
        };
        let p = sample_trajectory(&traj, alpha);
        prop_assert!(p.heading > -std::f64::consts::PI && p.heading <= std::f64::consts::PI);
        // shortest arc: the swept angle never exceeds pi
        let swept = wrap_angle(h1 - h0).abs();
        let partial = wrap_angle(p.heading - h0).abs();
        prop_assert!(partial <= swept + 1e-9);
    }
}
