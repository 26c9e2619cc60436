//! What the insertion barrier buys: without it, bisection midpoints pile up
//! into tight clusters; with it, near-duplicate insertions are skipped and
//! the spacing histogram tightens. Prints the close-pair fraction for both.

use ads::field::AnalyticField;
use ads::geom::{vec3, Aabb, Vec3};
use ads::pipeline::{run, AdsConfig};
use ads::spatial::GridIndex;

fn close_pair_fraction(points: &[Vec3], radius: f64) -> f64 {
    let index = GridIndex::new(points);
    let close = points
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            index.nearest(**p, Some(*i as u32)).is_some_and(|(_, d)| d < radius)
        })
        .count();
    close as f64 / points.len() as f64
}

fn main() {
    let domain = Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0));
    let field = AnalyticField::sphere(domain, vec3(0.0, 0.0, 0.0), 0.6);
    let tau = 0.03;

    for barrier in [true, false] {
        let config = AdsConfig { tau, barrier, ..AdsConfig::default() };
        let output = run(&field, &config).unwrap();
        let t = &output.stats.totals;
        println!(
            "barrier {:>5}: {} samples, {:.2} evals/sample, {:.1}% closer than tau/20",
            barrier,
            t.samples,
            t.evals_per_sample,
            100.0 * close_pair_fraction(&output.samples.points, tau / 20.0)
        );
    }
}
