//! Minimal pipeline run: sample a sphere and print the iteration ledger.

use ads::evaluation::iteration_report;
use ads::field::AnalyticField;
use ads::geom::{vec3, Aabb};
use ads::pipeline::{run, AdsConfig};

fn main() {
    let domain = Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0));
    let field = AnalyticField::sphere(domain, vec3(0.0, 0.0, 0.0), 0.6);

    let config = AdsConfig { tau: 0.03, ..AdsConfig::default() };
    let output = run(&field, &config).unwrap();

    println!("{}", iteration_report(&output.stats));
    let t = &output.stats.totals;
    println!(
        "{} samples on the sphere for {} membership queries ({:.2} per sample)",
        t.samples, t.evaluations, t.evals_per_sample
    );

    // Every sample should sit within the bisection tolerance of r = 0.6.
    let worst = output
        .samples
        .points
        .iter()
        .map(|p| (p.length() - 0.6).abs())
        .fold(0.0f64, f64::max);
    println!(
        "worst radial error {:.2e} (search tolerance {:.2e})",
        worst,
        config.search_tolerance()
    );
}
