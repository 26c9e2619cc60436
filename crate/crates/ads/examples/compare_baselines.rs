//! Evaluation-budget comparison on a torus: ADS at two resolutions against
//! grid marching cubes and random ray stabbing, each baseline tuned until it
//! matches the ADS chamfer distance. Prints the table as CSV.
//!
//! Expect an order of magnitude between the ADS and baseline eval columns;
//! run with --release, the tuned baselines do real work.

use ads::evaluation::{comparison_table, CompareOptions, ReferenceCloud};
use ads::field::AnalyticField;
use ads::geom::{vec3, Aabb};

fn main() {
    let domain = Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0));
    let field = AnalyticField::torus(domain, vec3(0.0, 0.0, 0.0), 0.6, 0.25);
    let reference = ReferenceCloud::analytic(&field, 0).unwrap();

    let opts = CompareOptions { taus: vec![0.05, 0.03], ..CompareOptions::default() };
    let table = comparison_table(&field, &reference, &opts).unwrap();
    print!("{}", table.to_csv());
}
