use proptest::collection::vec;
use proptest::prelude::*;

use ellid_core::geometry::Point;
use ellid_core::mvee::{enclosing_ellipse, khachiyan_mvee, MveeConfig};

fn cloud(max: usize) -> impl Strategy<Value = Vec<Point>> {
    (0.05..4.0f64, vec((-1.0..1.0f64, -1.0..1.0f64), 4..max))
        .prop_map(|(stretch, pts)| pts.into_iter().map(|(x, y)| Point::new(x, stretch * y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn covers_every_point(pts in cloud(200)) {
        let fit = khachiyan_mvee(&pts, &MveeConfig::default()).unwrap();
        for p in &pts {
            prop_assert!(fit.ellipse.norm_at(p) <= 1.0 + MveeConfig::default().epsilon);
        }
        // Shrinking the area by (1+ε)⁻² must lose a point.
        let worst = pts.iter().map(|p| fit.ellipse.norm_at(p)).fold(0.0, f64::max);
        prop_assert!(worst * (1.0 + MveeConfig::default().epsilon) > 1.0);
    }

    #[test]
    fn support_points_lie_near_the_boundary(pts in cloud(100)) {
        let cfg = MveeConfig::default();
        let fit = khachiyan_mvee(&pts, &cfg).unwrap();
        // Lifted values of weighted points lie in [3(1-ε), 3(1+ε)]; the planar
        // quadratic is the lifted value minus one, then the fit is rescaled to
        // put the farthest point on the boundary.
        let e = cfg.epsilon;
        let floor = ((2.0 - 3.0 * e) / (2.0 + 3.0 * e)).sqrt();
        for (p, &w) in fit.points.iter().zip(&fit.weights) {
            if w > 0.0 {
                prop_assert!(fit.ellipse.norm_at(p) >= floor - 1e-12, "weight {w} norm {}", fit.ellipse.norm_at(p));
            }
        }
    }

    #[test]
    fn deterministic_and_permutation_stable(pts in cloud(80), rot in 1usize..79) {
        let cfg = MveeConfig { epsilon: 1e-3, ..MveeConfig::default() };
        let a = khachiyan_mvee(&pts, &cfg).unwrap();
        prop_assert_eq!(&a, &khachiyan_mvee(&pts, &cfg).unwrap());
        let mut shuffled = pts.clone();
        shuffled.rotate_left(rot % pts.len());
        shuffled.reverse();
        let (ea, eb) = (a.ellipse.to_standard(), khachiyan_mvee(&shuffled, &cfg).unwrap().ellipse.to_standard());
        prop_assert!((ea.center - eb.center).norm() < 1e-6);
        prop_assert!((ea.r1 - eb.r1).abs() < 1e-6 && (ea.r2 - eb.r2).abs() < 1e-6);
    }

    #[test]
    fn scaling_equivariance(pts in cloud(80), s in 0.1..10.0f64) {
        let cfg = MveeConfig::default();
        let e = enclosing_ellipse(&pts, &cfg).unwrap();
        let scaled: Vec<Point> = pts.iter().map(|p| p * s).collect();
        let es = enclosing_ellipse(&scaled, &cfg).unwrap();
        prop_assert!((es.center - e.center * s).norm() <= 1e-6 * s * (1.0 + e.center.norm()));
        prop_assert!((es.r1 / (e.r1 * s) - 1.0).abs() < 1e-6);
        prop_assert!((es.r2 / (e.r2 * s) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn rectangle_corners_give_the_john_ellipse() {
    let pts = [Point::new(-1.0, -2.0), Point::new(1.0, -2.0), Point::new(1.0, 2.0), Point::new(-1.0, 2.0)];
    let e = enclosing_ellipse(&pts, &MveeConfig { epsilon: 1e-9, ..MveeConfig::default() }).unwrap();
    assert!(e.center.norm() < 1e-6);
    assert!((e.r1 - 2f64.sqrt()).abs() < 1e-6 && (e.r2 - 2.0 * 2f64.sqrt()).abs() < 1e-6, "{e:?}");
}

#[test]
fn collinear_points_are_flagged() {
    let pts: Vec<Point> = (0..10).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
    let fit = khachiyan_mvee(&pts, &MveeConfig::default()).unwrap();
    assert!(fit.degenerate);
    assert!(pts.iter().all(|p| fit.ellipse.norm_at(p) <= 1.0));
}
