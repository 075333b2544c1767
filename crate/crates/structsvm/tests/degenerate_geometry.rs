//! Stress test over degenerate label geometries: duplicate coordinates,
//! fully collinear sets, near-coincident clusters, and points on the domain
//! boundary (g = 0, h < 0). All searches must stay exact, certified, and
//! within their call budgets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use structsvm::hull::convex_hull_search;
use structsvm::loss::BiCriteriaLoss;
use structsvm::oracle::EnumerationOracle;
use structsvm::search::{angular_search, bisecting_search, binary_search_sgd};

#[test]
fn hull_and_searches_survive_degenerate_geometry() {
    let slack = BiCriteriaLoss::slack_rescaling();
    let mut rng = ChaCha8Rng::seed_from_u64(7777);
    for trial in 0..300 {
        let n = rng.gen_range(1..60);
        let style = trial % 4;
        let coords: Vec<(f64, f64)> = (0..n)
            .map(|_| match style {
                0 => (rng.gen_range(0..5) as f64 * 0.5, rng.gen_range(0..5) as f64), // grid, many duplicates
                1 => {
                    let t = rng.gen_range(0.0..1.0);
                    (t, 1.0 - t) // collinear line
                }
                2 => (1.0 + rng.gen_range(-1e-9..1e-9), 2.0 + rng.gen_range(-1e-9..1e-9)), // tight cluster
                _ => (rng.gen_range(-2.0..4.0), rng.gen_range(0.0..4.0)), // includes g = 0, h < 0
            })
            .collect();
        let o = EnumerationOracle::from_coords(&coords);
        let brute = o
            .points()
            .iter()
            .filter_map(|p| slack.psi_value(p.h, p.g).ok())
            .fold(f64::MIN, f64::max);
        let (frac, calls) = convex_hull_search(&o, &slack, None).unwrap();
        assert!(frac.psi(&slack) >= brute - 1e-8, "hull below integral max on style {style}");
        assert!(calls <= n + 2, "call runaway: {calls} for {n} labels");

        // product searches on the shifted plane stay well-behaved too
        let shifted = EnumerationOracle::from_coords(
            &coords.iter().map(|&(h, g)| (h + 1.0, g)).collect::<Vec<_>>(),
        );
        let star = shifted.points().iter().map(|p| p.phi()).fold(f64::MIN, f64::max);
        let a = angular_search(&shifted, 1.0, usize::MAX, None).unwrap();
        if star > 0.0 {
            assert!((a.best_value - star).abs() <= 1e-9 * star.max(1.0), "angular inexact on style {style}: {} vs {star}", a.best_value);
        }
        assert!(
            a.oracle_calls <= 2 * n + 1,
            "angular calls {} on {n} (style {style})",
            a.oracle_calls
        );
        let b = bisecting_search(&shifted, 1.0, 80);
        assert!(b.best_value <= star + 1e-9);
        assert!(b.certificate.unwrap() >= star - 1e-9);
        let c = binary_search_sgd(&shifted, 1e-2, 1e2, 1e-6);
        assert!(c.best_value <= star + 1e-9);
    }
}
