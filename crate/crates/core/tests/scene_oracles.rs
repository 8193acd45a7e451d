//! Independent geometric checks on generated scenes.

use beliefdrive::track::{
    generate_scene, generate_uncertain, ConeColor, ConeScene, SceneLabel, SceneParams, SceneTarget,
    UncertainKind,
};
use beliefdrive::beliefs::ClassId;

/// Circle through three points, or `None` when they are collinear.
fn circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<(f64, f64, f64)> {
    let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
    if d.abs() < 1e-9 {
        return None;
    }
    let sq = |p: (f64, f64)| p.0 * p.0 + p.1 * p.1;
    let ux = (sq(a) * (b.1 - c.1) + sq(b) * (c.1 - a.1) + sq(c) * (a.1 - b.1)) / d;
    let uy = (sq(a) * (c.0 - b.0) + sq(b) * (a.0 - c.0) + sq(c) * (b.0 - a.0)) / d;
    Some((ux, uy, ((a.0 - ux).powi(2) + (a.1 - uy).powi(2)).sqrt()))
}

/// Largest number of points within `tol` of one circle through three of them.
fn best_circle_inliers(pts: &[(f64, f64)], tol: f64) -> (usize, Vec<bool>) {
    let mut best = (0, vec![false; pts.len()]);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for k in j + 1..pts.len() {
                let Some((cx, cy, r)) = circumcircle(pts[i], pts[j], pts[k]) else { continue };
                let mask: Vec<bool> = pts
                    .iter()
                    .map(|p| (((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt() - r).abs() <= tol)
                    .collect();
                let n = mask.iter().filter(|m| **m).count();
                if n > best.0 {
                    best = (n, mask);
                }
            }
        }
    }
    best
}

fn blue(scene: &ConeScene) -> Vec<(f64, f64)> {
    scene.cones.iter().filter(|c| c.color == ConeColor::Blue && !c.fallen).map(|c| (c.x, c.y)).collect()
}

fn fraction(v: &[bool]) -> f64 {
    v.iter().filter(|b| **b).count() as f64 / v.len() as f64
}

const TOL: f64 = 0.5;

#[test]
fn standard_lanes_lie_on_one_arc() {
    let params = SceneParams::default();
    let mut good = Vec::new();
    for seed in 0..140 {
        let scene = generate_scene(SceneTarget::Class(ClassId((seed % 7) as usize)), &params, seed);
        let pts = blue(&scene);
        if pts.len() < 4 {
            continue;
        }
        good.push(best_circle_inliers(&pts, TOL).0 as f64 / pts.len() as f64 >= 0.9);
    }
    let share = fraction(&good);
    println!("standard: share with >=90% inliers {share:.3}");
    assert!(share >= 0.95, "{share}");
}

#[test]
fn random_scatter_fits_no_arc() {
    let params = SceneParams::default();
    let mut bad = Vec::new();
    for seed in 0..100 {
        let scene = generate_uncertain(UncertainKind::Random, &params, seed);
        assert_eq!(scene.deviation_angle_deg, None);
        let pts = blue(&scene);
        if pts.len() < 5 {
            continue;
        }
        bad.push((best_circle_inliers(&pts, TOL).0 as f64) / (pts.len() as f64) < 0.75);
    }
    let share = fraction(&bad);
    println!("random: share with <75% inliers {share:.3}");
    assert!(share >= 0.9, "{share}");
}

#[test]
fn confusing_scenes_hold_two_arcs() {
    let params = SceneParams::default();
    let mut dual = Vec::new();
    for seed in 0..100 {
        let scene = generate_uncertain(UncertainKind::Confusing, &params, seed);
        let pts = blue(&scene);
        let (n1, mask) = best_circle_inliers(&pts, TOL);
        let rest: Vec<(f64, f64)> = pts.iter().zip(&mask).filter(|(_, m)| !**m).map(|(p, _)| *p).collect();
        let (n2, _) = best_circle_inliers(&rest, TOL);
        dual.push(n1 < pts.len() && n2 >= 3 && n1 as f64 / (pts.len() as f64) < 0.85);
        assert!(matches!(scene.label, SceneLabel::Uncertain(UncertainKind::Confusing)));
    }
    let share = fraction(&dual);
    println!("confusing: share with a second arc {share:.3}");
    assert!(share >= 0.9, "{share}");
}

#[test]
fn fallen_scenes_keep_a_labelled_lane() {
    let params = SceneParams::default();
    for seed in 0..100 {
        let scene = generate_uncertain(UncertainKind::Fallen, &params, seed);
        assert!(scene.cones.iter().any(|c| c.fallen));
        let angle = scene.deviation_angle_deg.expect("fallen scenes keep their lane angle");
        assert!(angle.abs() < params.hard_max_deg);
    }
}
