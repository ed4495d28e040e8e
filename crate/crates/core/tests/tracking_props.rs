use std::f64::consts::PI;

use proptest::collection::vec;
use proptest::prelude::*;

use ellid_core::geometry::{angle_diff_mod_pi, Point};
use ellid_core::tracking::{estimate_motion, feature_distance, match_frames, FeatureVector, Tracker, TrackerConfig};

fn feature() -> impl Strategy<Value = FeatureVector> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.1..2.0f64, 0.0..2.0f64, -10.0..10.0f64).prop_map(|(x, y, r1, extra, theta)| {
        FeatureVector { xc: Point::new(x, y), r1, r2: r1 + extra, theta }
    })
}

fn flipped(f: &FeatureVector) -> FeatureVector {
    FeatureVector { theta: f.theta + PI, ..*f }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_a_metric(a in feature(), b in feature(), c in feature()) {
        let d = feature_distance;
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert!(d(&a, &a) < 1e-12);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        // Distinct canonical features are at positive distance.
        if (a.xc - b.xc).norm() > 1e-9 {
            prop_assert!(d(&a, &b) > 0.0);
        }
    }

    #[test]
    fn matching_is_one_to_one(prev in vec(feature(), 0..8), curr in vec(feature(), 0..8), gate in 0.1..20.0f64) {
        let m = match_frames(&prev, &curr, gate);
        prop_assert_eq!(m.pairs.len(), curr.len());
        let mut seen_prev = vec![false; prev.len()];
        for (j, &(i, jj)) in m.pairs.iter().enumerate() {
            prop_assert_eq!(j, jj);
            if let Some(i) = i {
                prop_assert!(!seen_prev[i], "previous {} matched twice", i);
                seen_prev[i] = true;
                prop_assert!(feature_distance(&prev[i], &curr[j]) <= gate);
            }
        }
        for &i in &m.unmatched_prev {
            prop_assert!(!seen_prev[i]);
            seen_prev[i] = true;
        }
        prop_assert!(seen_prev.iter().all(|&s| s));
    }

    #[test]
    fn half_turn_changes_nothing(prev in vec(feature(), 1..6), curr in vec(feature(), 1..6), gate in 0.5..20.0f64) {
        let prev_f: Vec<_> = prev.iter().map(flipped).collect();
        let curr_f: Vec<_> = curr.iter().map(flipped).collect();
        for (a, b) in prev.iter().zip(&curr) {
            prop_assert!((feature_distance(a, b) - feature_distance(&flipped(a), &flipped(b))).abs() < 1e-12);
            prop_assert!((feature_distance(a, b) - feature_distance(&flipped(a), b)).abs() < 1e-12);
            let (v, w) = estimate_motion(a, b, 0.1).unwrap();
            let (vf, wf) = estimate_motion(&flipped(a), &flipped(b), 0.1).unwrap();
            prop_assert!((v - vf).norm() < 1e-12 && (w - wf).abs() < 1e-9);
        }
        prop_assert_eq!(match_frames(&prev, &curr, gate), match_frames(&prev_f, &curr_f, gate));

        let run = |frames: [&[FeatureVector]; 2]| {
            let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
            tr.update(frames[0], 0.0).unwrap();
            tr.update(frames[1], 0.1).unwrap().iter().map(|t| (t.id, t.velocity(), t.omega())).collect::<Vec<_>>()
        };
        let (a, b) = (run([&prev, &curr]), run([&prev_f, &curr_f]));
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.0, y.0);
            prop_assert!((x.1 - y.1).norm() < 1e-9 && (x.2 - y.2).abs() < 1e-9, "{x:?} vs {y:?}");
        }
    }

    #[test]
    fn noiseless_error_settles(
        x0 in -5.0..5.0f64, y0 in -5.0..5.0f64, vx in -6.0..6.0f64, vy in -6.0..6.0f64,
        omega in -3.0..3.0f64, theta0 in 0.0..PI, r1 in 0.2..1.0f64,
    ) {
        let dt = 0.1;
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        let (mut errors, mut lyapunov) = (Vec::new(), Vec::new());
        for k in 0..25 {
            let t = k as f64 * dt;
            let obs = FeatureVector { xc: Point::new(x0 + vx * t, y0 + vy * t), r1, r2: 2.0 * r1, theta: theta0 + omega * t };
            let tracks = tracker.update(&[obs], t).unwrap();
            prop_assert_eq!(tracks.len(), 1);
            let mut e = tracks[0].state;
            e[0] -= obs.xc.x;
            e[1] -= obs.xc.y;
            e[2] = angle_diff_mod_pi(e[2], obs.theta);
            e[3] -= vx;
            e[4] -= vy;
            e[5] -= omega;
            errors.push(e.norm());
            let info = tracks[0].covariance.try_inverse().unwrap();
            lyapunov.push((e.transpose() * info * e)[0]);
        }
        // With exact measurements eᵀP⁻¹e cannot grow: prediction only adds
        // process noise and an update maps e to P⁺P⁻⁻¹e with P⁺ ≤ P⁻. The
        // plain norm can ring, since the steady-state error dynamics are
        // underdamped, but it still decays overall.
        for (k, w) in lyapunov.windows(2).enumerate().skip(3) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-12, "weighted error rose at update {}: {:?}", k + 1, lyapunov);
        }
        prop_assert!(errors[24] <= errors[3], "{errors:?}");
    }
}
