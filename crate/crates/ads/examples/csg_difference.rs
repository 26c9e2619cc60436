//! Sample a composed shape: a box with a sphere bitten out of one corner.
//! The pipeline only ever sees inside/outside answers, so set operations on
//! occupancy come for free.

use ads::field::{AnalyticField, Csg};
use ads::geom::{vec3, Aabb};
use ads::mesh::manifold_report;
use ads::pipeline::{run, AdsConfig};

fn main() {
    let domain = Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0));
    let shape = Csg::Difference(
        Box::new(Csg::Cuboid {
            center: vec3(0.0, 0.0, 0.0),
            half_extents: vec3(0.5, 0.5, 0.5),
        }),
        Box::new(Csg::Sphere { center: vec3(0.5, 0.5, 0.5), radius: 0.4 }),
    );
    let field = AnalyticField::new(domain, shape);

    let output = run(&field, &AdsConfig { tau: 0.03, ..AdsConfig::default() }).unwrap();
    let report = manifold_report(&output.mesh);

    println!(
        "{} samples, {} triangles, {} evaluations",
        output.stats.totals.samples,
        output.mesh.triangles.len(),
        output.stats.totals.evaluations
    );
    println!(
        "closed manifold: {} (euler characteristic {})",
        report.closed_manifold, report.euler_characteristic
    );
}
