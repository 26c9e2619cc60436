//! Drive the Delaunay scaffold directly: build it from a Poisson-disc
//! scatter, stream in extra points, and watch the invariants hold. This is
//! the layer the sampling pipeline sits on.

use ads::geom::{vec3, Aabb};
use ads::poisson::sample_poisson;
use ads::scaffold::Scaffold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let domain = Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    let interior = sample_poisson(domain, 2_000, &mut rng);
    let mut scaffold = Scaffold::build_initial(domain, &interior, 42);
    println!(
        "initial: {} vertices, {} tets, mean degree {:.2}",
        scaffold.vertex_count(),
        scaffold.tet_count(),
        scaffold.mean_vertex_degree()
    );

    let mut hint = None;
    for _ in 0..1_000 {
        let p = vec3(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if let Ok(outcome) = scaffold.insert_vertex(p, hint) {
            hint = Some(outcome.id());
        }
    }

    scaffold.validate().expect("adjacency and orientation intact");
    println!(
        "after 1000 inserts: {} vertices, {} tets, {} empty-sphere violations",
        scaffold.vertex_count(),
        scaffold.tet_count(),
        scaffold.delaunay_violations()
    );
}
