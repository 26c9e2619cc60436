//! Use a triangle soup as the occupancy function via generalized winding
//! numbers, then resample it: mesh in, evenly spaced samples and a clean
//! remesh out. Works even though the pipeline never sees the input topology.

use ads::evaluation::{chamfer_l1, ReferenceCloud};
use ads::field::MeshWindingField;
use ads::geom::vec3;
use ads::mesh::manifold_report;
use ads::pipeline::{run, AdsConfig};

fn main() {
    // An octahedron, radius 0.6. Any closed orientable soup works.
    let vertices = vec![
        vec3(0.6, 0.0, 0.0),
        vec3(-0.6, 0.0, 0.0),
        vec3(0.0, 0.6, 0.0),
        vec3(0.0, -0.6, 0.0),
        vec3(0.0, 0.0, 0.6),
        vec3(0.0, 0.0, -0.6),
    ];
    let triangles = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    let field = MeshWindingField::with_default_domain(vertices, triangles);

    let output = run(&field, &AdsConfig { tau: 0.04, ..AdsConfig::default() }).unwrap();

    // Ground truth straight off the input triangles.
    let reference = ReferenceCloud::mesh(field.vertices(), field.triangles(), 1);
    let chamfer = chamfer_l1(&output.samples.points, &reference.points);
    let report = manifold_report(&output.mesh);

    println!(
        "{} samples from {} winding-number queries",
        output.stats.totals.samples, output.stats.totals.evaluations
    );
    println!("chamfer distance to input surface: {:.4} (x1000)", 1000.0 * chamfer);
    println!(
        "remesh: {} triangles, closed manifold: {}",
        report.faces, report.closed_manifold
    );
}
