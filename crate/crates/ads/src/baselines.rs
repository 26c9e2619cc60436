//! Reference samplers the pipeline is benchmarked against: marching cubes
//! over a dense node grid and random ray stabbing. Both count every
//! occupancy query the same way the pipeline does, so eval columns are
//! directly comparable.

use crate::field::{Label, OccupancyField};
use crate::geom::Vec3;
use crate::mesh::SurfaceMesh;
use crate::pipeline::SampleSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug)]
pub struct GridSampler {
    /// Nodes per axis; cells are (resolution - 1)^3.
    pub resolution: usize,
    /// Bisection rounds per crossing grid edge.
    pub refine_steps: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct RaySampler {
    pub ray_count: usize,
    /// March step along each ray.
    pub step: f64,
    /// Bisection rounds per sign-change interval.
    pub refine_steps: u32,
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct BaselineStats {
    pub evaluations: u64,
    pub samples: usize,
    /// Grid nodes or ray march points.
    pub scan_evals: u64,
    pub refine_evals: u64,
}

/// Cube corners are indexed by bit pattern (bit0 = x, bit1 = y, bit2 = z);
/// the twelve edges in fixed order, grouped by axis.
const CUBE_EDGES: [(usize, usize); 12] = [
    (0, 1), (2, 3), (4, 5), (6, 7), // x axis
    (0, 2), (1, 3), (4, 6), (5, 7), // y axis
    (0, 4), (1, 5), (2, 6), (3, 7), // z axis
];

/// Faces as corner cycles wound counterclockwise seen from outside the cube.
const CUBE_FACES: [[usize; 4]; 6] = [
    [0, 2, 3, 1], // -z
    [4, 5, 7, 6], // +z
    [0, 1, 5, 4], // -y
    [2, 6, 7, 3], // +y
    [0, 4, 6, 2], // -x
    [1, 3, 7, 5], // +x
];

fn edge_id(a: usize, b: usize) -> usize {
    let key = if a < b { (a, b) } else { (b, a) };
    CUBE_EDGES.iter().position(|&e| e == key).expect("corner pair is a cube edge")
}

/// Build the triangulation for one sign configuration by tracing isosurface
/// loops across the faces. On each face, marching squares emits directed
/// chords (inside region to the left, seen from outside); the ambiguous
/// two-diagonal case always separates the inside corners, a choice both
/// cubes sharing a face make identically, which keeps the global mesh
/// watertight. Chords concatenate into closed loops over the crossing cube
/// edges, fan-triangulated with the winding flipped to make normals point
/// from inside to outside.
fn triangulate_config(config: u8) -> Vec<[u8; 3]> {
    let inside = |c: usize| config >> c & 1 == 1;
    // successor[e] = edge the chord starting at crossing edge e leads to.
    let mut successor = [usize::MAX; 12];
    for face in CUBE_FACES {
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        for i in 0..4 {
            let (a, b) = (face[i], face[(i + 1) % 4]);
            if inside(a) && !inside(b) {
                sources.push((a, edge_id(a, b)));
            }
            if !inside(a) && inside(b) {
                targets.push((b, edge_id(a, b)));
            }
        }
        match (sources.len(), targets.len()) {
            (0, 0) => {}
            (1, 1) => successor[sources[0].1] = targets[0].1,
            (2, 2) => {
                // Ambiguous face: route each chord around its own inside
                // corner.
                for (corner, src) in sources {
                    let (_, tgt) = targets
                        .iter()
                        .copied()
                        .find(|(c, _)| *c == corner)
                        .expect("diagonal case pairs by corner");
                    successor[src] = tgt;
                }
            }
            _ => unreachable!("marching squares emits balanced chord ends"),
        }
    }

    let mut triangles = Vec::new();
    let mut visited = [false; 12];
    for start in 0..12 {
        if successor[start] == usize::MAX || visited[start] {
            continue;
        }
        let mut loop_edges = vec![start];
        visited[start] = true;
        let mut cur = successor[start];
        while cur != start {
            visited[cur] = true;
            loop_edges.push(cur);
            cur = successor[cur];
        }
        // Chord direction has inside on the left, which winds fans toward
        // the inside; flip for outward normals.
        for i in 1..loop_edges.len() - 1 {
            triangles.push([
                loop_edges[0] as u8,
                loop_edges[i + 1] as u8,
                loop_edges[i] as u8,
            ]);
        }
    }
    triangles
}

fn mc_table() -> &'static [Vec<[u8; 3]>; 256] {
    static TABLE: OnceLock<[Vec<[u8; 3]>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|c| triangulate_config(c as u8)))
}

/// Standard marching cubes over `grid.resolution`^3 nodes spanning the
/// field domain. Crossing points on grid edges are located by
/// `refine_steps` batched bisections and welded across cells, so the mesh
/// is watertight wherever the surface stays interior.
pub fn marching_cubes(
    field: &dyn OccupancyField,
    grid: GridSampler,
) -> (SampleSet, SurfaceMesh, BaselineStats) {
    assert!(grid.resolution >= 2, "need at least 2 nodes per axis");
    let n = grid.resolution;
    let domain = field.domain();
    let base = domain.min;
    let ext = domain.extents();
    let h = |i: usize, axis_len: f64| axis_len * i as f64 / (n - 1) as f64;
    let node_pos = |i: usize, j: usize, k: usize| {
        Vec3 {
            x: base.x + h(i, ext.x),
            y: base.y + h(j, ext.y),
            z: base.z + h(k, ext.z),
        }
    };
    let flat = |i: usize, j: usize, k: usize| (k * n + j) * n + i;

    // Label all nodes, one z-slab per batch to bound peak memory.
    let mut labels: Vec<Label> = Vec::with_capacity(n * n * n);
    let mut slab = Vec::with_capacity(n * n);
    for k in 0..n {
        slab.clear();
        for j in 0..n {
            for i in 0..n {
                slab.push(node_pos(i, j, k));
            }
        }
        labels.extend(field.classify_batch(&slab));
    }
    let scan_evals = (n * n * n) as u64;

    // Unique crossing grid edges, keyed by (axis, base node), in scan order.
    let mut crossing: Vec<(usize, usize)> = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let a = flat(i, j, k);
                if i + 1 < n && labels[a] != labels[flat(i + 1, j, k)] {
                    crossing.push((0, a));
                }
                if j + 1 < n && labels[a] != labels[flat(i, j + 1, k)] {
                    crossing.push((1, a));
                }
                if k + 1 < n && labels[a] != labels[flat(i, j, k + 1)] {
                    crossing.push((2, a));
                }
            }
        }
    }

    let unflat = |a: usize| (a % n, (a / n) % n, a / (n * n));
    let edge_ends = |axis: usize, a: usize| {
        let (i, j, k) = unflat(a);
        let p = node_pos(i, j, k);
        let q = match axis {
            0 => node_pos(i + 1, j, k),
            1 => node_pos(i, j + 1, k),
            _ => node_pos(i, j, k + 1),
        };
        (p, q)
    };

    // Batched bisection, inside end first so bracket updates are uniform.
    let mut lo = Vec::with_capacity(crossing.len());
    let mut hi = Vec::with_capacity(crossing.len());
    for &(axis, a) in &crossing {
        let (p, q) = edge_ends(axis, a);
        if labels[a].is_inside() {
            lo.push(p);
            hi.push(q);
        } else {
            lo.push(q);
            hi.push(p);
        }
    }
    let mut refine_evals = 0u64;
    let mut mids = vec![Vec3::default(); crossing.len()];
    for _ in 0..grid.refine_steps {
        for i in 0..crossing.len() {
            mids[i] = lo[i].lerp(hi[i], 0.5);
        }
        let mid_labels = field.classify_batch(&mids);
        refine_evals += mids.len() as u64;
        for i in 0..crossing.len() {
            if mid_labels[i].is_inside() {
                lo[i] = mids[i];
            } else {
                hi[i] = mids[i];
            }
        }
    }
    let mut samples = SampleSet::default();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::with_capacity(crossing.len());
    for (idx, &(axis, a)) in crossing.iter().enumerate() {
        edge_vertex.insert((axis, a), idx as u32);
        samples.points.push(lo[idx].lerp(hi[idx], 0.5));
        samples.source_edges.push((a as u32, axis as u32));
    }

    // Assemble triangles cell by cell from the shared table.
    let table = mc_table();
    let mut mesh = SurfaceMesh {
        vertices: samples.points.clone(),
        triangles: Vec::new(),
        source_tets: Vec::new(),
    };
    let corner_node = |i: usize, j: usize, k: usize, c: usize| {
        flat(i + (c & 1), j + (c >> 1 & 1), k + (c >> 2 & 1))
    };
    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let mut config = 0u8;
                for c in 0..8 {
                    if labels[corner_node(i, j, k, c)].is_inside() {
                        config |= 1 << c;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                let cell = ((k * (n - 1) + j) * (n - 1) + i) as u32;
                for tri in &table[config as usize] {
                    let map = |e: u8| {
                        let (ca, cb) = CUBE_EDGES[e as usize];
                        let (na, nb) =
                            (corner_node(i, j, k, ca), corner_node(i, j, k, cb));
                        let base_node = na.min(nb);
                        let axis = match nb.max(na) - base_node {
                            1 => 0,
                            d if d == n => 1,
                            _ => 2,
                        };
                        edge_vertex[&(axis, base_node)]
                    };
                    mesh.triangles.push([map(tri[0]), map(tri[1]), map(tri[2])]);
                    mesh.source_tets.push(cell);
                }
            }
        }
    }
    samples.normals = Some(crate::pipeline::vertex_normals(&mesh));

    let stats = BaselineStats {
        evaluations: scan_evals + refine_evals,
        samples: samples.points.len(),
        scan_evals,
        refine_evals,
    };
    (samples, mesh, stats)
}

/// Random ray stabbing: chords of the domain bounding sphere are marched at
/// a fixed step; each sign-change interval is bisected down to a sample. No
/// connectivity, samples only.
pub fn ray_stab(
    field: &dyn OccupancyField,
    rays: RaySampler,
    seed: u64,
) -> (SampleSet, BaselineStats) {
    assert!(rays.ray_count >= 1 && rays.step > 0.0);
    let (center, radius) = field.domain().bounding_sphere();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sphere_point = || -> Vec3 {
        loop {
            let v = Vec3 {
                x: rng.gen_range(-1.0..=1.0),
                y: rng.gen_range(-1.0..=1.0),
                z: rng.gen_range(-1.0..=1.0),
            };
            let len_sq = v.length_squared();
            if len_sq > 1e-6 && len_sq <= 1.0 {
                return center + v * (radius / len_sq.sqrt());
            }
        }
    };

    let mut scan_evals = 0u64;
    let mut refine_evals = 0u64;
    let mut brackets: Vec<(Vec3, Vec3)> = Vec::new();
    // March in chunks of rays so no flat buffer scales with total evals.
    const CHUNK: usize = 2048;
    let mut remaining = rays.ray_count;
    while remaining > 0 {
        let count = remaining.min(CHUNK);
        remaining -= count;
        let mut pts = Vec::new();
        let mut spans = Vec::with_capacity(count);
        for _ in 0..count {
            let a = sphere_point();
            let b = sphere_point();
            let len = a.distance(b);
            let steps = (len / rays.step).floor() as usize + 1;
            let start = pts.len();
            for s in 0..steps {
                pts.push(a.lerp(b, s as f64 * rays.step / len.max(1e-300)));
            }
            spans.push((start, steps));
        }
        let labels = field.classify_batch(&pts);
        scan_evals += pts.len() as u64;
        for (start, steps) in spans {
            for s in 0..steps.saturating_sub(1) {
                if labels[start + s] != labels[start + s + 1] {
                    let (p, q) = (pts[start + s], pts[start + s + 1]);
                    if labels[start + s].is_inside() {
                        brackets.push((p, q));
                    } else {
                        brackets.push((q, p));
                    }
                }
            }
        }
    }

    let (mut lo, mut hi): (Vec<Vec3>, Vec<Vec3>) = brackets.into_iter().unzip();
    let mut mids = vec![Vec3::default(); lo.len()];
    for _ in 0..rays.refine_steps {
        for i in 0..lo.len() {
            mids[i] = lo[i].lerp(hi[i], 0.5);
        }
        let labels = field.classify_batch(&mids);
        refine_evals += mids.len() as u64;
        for i in 0..lo.len() {
            if labels[i].is_inside() {
                lo[i] = mids[i];
            } else {
                hi[i] = mids[i];
            }
        }
    }
    let mut samples = SampleSet::default();
    for i in 0..lo.len() {
        samples.points.push(lo[i].lerp(hi[i], 0.5));
        samples.source_edges.push((i as u32, i as u32));
    }
    let stats = BaselineStats {
        evaluations: scan_evals + refine_evals,
        samples: samples.points.len(),
        scan_evals,
        refine_evals,
    };
    (samples, stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    MarchingCubes,
    RayStab,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TunedRun {
    pub parameter: usize,
    pub chamfer: f64,
    pub evaluations: u64,
    pub samples: usize,
    /// Sampling wall time; excludes the chamfer computation.
    pub time_s: f64,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct MatchOutcome {
    /// Largest parameter whose chamfer stays above the target.
    pub above: Option<TunedRun>,
    /// Smallest probed parameter reaching the target.
    pub below: TunedRun,
    pub probes: usize,
}

#[derive(Debug, thiserror::Error)]
#[error(
    "target chamfer {target} not reachable within parameter cap (best {} at {})",
    best.chamfer,
    best.parameter
)]
pub struct Unreachable {
    pub target: f64,
    pub best: TunedRun,
}

/// Doubling range of the matching search.
#[derive(Clone, Copy, Debug)]
pub struct SearchBounds {
    pub start: usize,
    pub cap: usize,
}

impl BaselineKind {
    pub fn default_bounds(self) -> SearchBounds {
        match self {
            BaselineKind::MarchingCubes => SearchBounds { start: 8, cap: 512 },
            BaselineKind::RayStab => SearchBounds { start: 1_000, cap: 10_000_000 },
        }
    }
}

/// Tune the baseline's main parameter until its chamfer against `reference`
/// reaches `target`: doubling first, then bisection, at most 12 probe runs.
/// Reports the runs bracketing the target from both sides.
pub fn match_accuracy(
    field: &dyn OccupancyField,
    reference: &[Vec3],
    target: f64,
    kind: BaselineKind,
    step: f64,
    refine_steps: u32,
    seed: u64,
) -> Result<MatchOutcome, Unreachable> {
    match_accuracy_bounded(field, reference, target, kind, step, refine_steps, seed, kind.default_bounds())
}

#[allow(clippy::too_many_arguments)]
pub fn match_accuracy_bounded(
    field: &dyn OccupancyField,
    reference: &[Vec3],
    target: f64,
    kind: BaselineKind,
    step: f64,
    refine_steps: u32,
    seed: u64,
    bounds: SearchBounds,
) -> Result<MatchOutcome, Unreachable> {
    let SearchBounds { start, cap } = bounds;
    let mut probes = 0usize;
    let run = |parameter: usize| -> TunedRun {
        let before = field.eval_count();
        let clock = std::time::Instant::now();
        let samples = match kind {
            BaselineKind::MarchingCubes => {
                let grid = GridSampler { resolution: parameter, refine_steps };
                marching_cubes(field, grid).0
            }
            BaselineKind::RayStab => {
                let rays = RaySampler { ray_count: parameter, step, refine_steps };
                ray_stab(field, rays, seed).0
            }
        };
        let time_s = clock.elapsed().as_secs_f64();
        let chamfer = if samples.points.is_empty() {
            f64::INFINITY
        } else {
            crate::evaluation::chamfer_l1(&samples.points, reference)
        };
        TunedRun {
            parameter,
            chamfer,
            evaluations: field.eval_count() - before,
            samples: samples.points.len(),
            time_s,
        }
    };

    // Doubling phase.
    let mut above: Option<TunedRun> = None;
    let below: Option<TunedRun>;
    let mut p = start;
    loop {
        probes += 1;
        let r = run(p);
        if r.chamfer <= target {
            below = Some(r);
            break;
        }
        above = Some(r);
        if p >= cap || probes >= 12 {
            return Err(Unreachable { target, best: above.unwrap() });
        }
        p = (p * 2).min(cap);
    }
    let mut below = below.unwrap();

    // Bisection phase narrows toward the smallest passing parameter.
    while probes < 12 {
        let lo = above.map_or(start / 2, |r| r.parameter);
        let gap = below.parameter - lo;
        if gap <= lo / 8 + 1 {
            break;
        }
        probes += 1;
        let r = run(lo + gap / 2);
        if r.chamfer <= target {
            below = r;
        } else {
            above = Some(r);
        }
    }
    Ok(MatchOutcome { above, below, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;
    use crate::geom::{vec3, Aabb};
    use crate::mesh::manifold_report;

    fn unit2() -> Aabb {
        Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0))
    }

    #[test]
    fn table_base_cases() {
        let table = mc_table();
        assert!(table[0].is_empty());
        assert!(table[255].is_empty());
        // Single corner in or out: one triangle.
        assert_eq!(table[1].len(), 1);
        assert_eq!(table[254].len(), 1);
        // Opposite slab: quad.
        let bottom = 0b00001111u8; // z = 0 plane inside
        assert_eq!(table[bottom as usize].len(), 2);
        // Every configuration closes: each crossing cube edge is used, and
        // directed half-edge parity balances within the cube's triangle fan.
        for (config, tris) in table.iter().enumerate() {
            let config = config as u8;
            let mut crossing = Vec::new();
            for (e, &(a, b)) in CUBE_EDGES.iter().enumerate() {
                if (config >> a & 1) != (config >> b & 1) {
                    crossing.push(e as u8);
                }
            }
            let mut used: Vec<u8> = tris.iter().flatten().copied().collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used, crossing, "config {config} misses crossing edges");
        }
    }

    #[test]
    fn sphere_mc_is_closed_and_accurate() {
        let field = AnalyticField::sphere(unit2(), vec3(0.0, 0.0, 0.0), 0.6);
        let grid = GridSampler { resolution: 24, refine_steps: 8 };
        let (samples, mesh, stats) = marching_cubes(&field, grid);
        assert_eq!(stats.evaluations, field.eval_count());
        assert_eq!(stats.scan_evals, 24 * 24 * 24);
        let report = manifold_report(&mesh);
        assert!(report.closed_manifold, "{report:?}");
        assert_eq!(report.euler_characteristic, 2);
        // Bisected samples hug the sphere.
        for p in &samples.points {
            assert!(field.surface_distance(*p).distance < 2.0 / 23.0 / 128.0 + 1e-9);
        }
        // Outward normals.
        let normals = samples.normals.as_ref().unwrap();
        let mut outward = 0;
        for (p, n) in samples.points.iter().zip(normals) {
            if n.dot(*p) > 0.0 {
                outward += 1;
            }
        }
        assert_eq!(outward, samples.points.len());
    }

    #[test]
    fn mc_empty_field_costs_only_nodes() {
        let field = AnalyticField::sphere(unit2(), vec3(30.0, 0.0, 0.0), 0.1);
        let grid = GridSampler { resolution: 10, refine_steps: 5 };
        let (samples, mesh, stats) = marching_cubes(&field, grid);
        assert!(samples.points.is_empty());
        assert!(mesh.triangles.is_empty());
        assert_eq!(stats.evaluations, 1000);
        assert_eq!(stats.refine_evals, 0);
    }

    #[test]
    fn mc_torus_euler_zero() {
        let field = AnalyticField::torus(unit2(), vec3(0.0, 0.0, 0.0), 0.6, 0.25);
        let grid = GridSampler { resolution: 40, refine_steps: 5 };
        let (_, mesh, _) = marching_cubes(&field, grid);
        let report = manifold_report(&mesh);
        assert!(report.closed_manifold, "{report:?}");
        assert_eq!(report.euler_characteristic, 0);
    }

    #[test]
    fn rrs_samples_lie_on_surface() {
        let field = AnalyticField::sphere(unit2(), vec3(0.0, 0.0, 0.0), 0.6);
        let rays = RaySampler { ray_count: 400, step: 0.05, refine_steps: 12 };
        let (samples, stats) = ray_stab(&field, rays, 9);
        assert!(!samples.points.is_empty());
        assert_eq!(stats.evaluations, field.eval_count());
        let tol = 0.05 / f64::from(1u32 << 12) + 1e-9;
        for p in &samples.points {
            assert!(field.surface_distance(*p).distance <= tol);
        }
    }

    #[test]
    fn rrs_empty_field_has_no_refine_cost() {
        let field = AnalyticField::sphere(unit2(), vec3(30.0, 0.0, 0.0), 0.1);
        let rays = RaySampler { ray_count: 50, step: 0.1, refine_steps: 5 };
        let (samples, stats) = ray_stab(&field, rays, 1);
        assert!(samples.points.is_empty());
        assert_eq!(stats.refine_evals, 0);
        assert!(stats.scan_evals >= 50 * 2); // at least both chord ends
    }

    #[test]
    fn rrs_is_deterministic() {
        let rays = RaySampler { ray_count: 100, step: 0.05, refine_steps: 6 };
        let sample = || {
            let field = AnalyticField::sphere(unit2(), vec3(0.0, 0.0, 0.0), 0.6);
            ray_stab(&field, rays, 77).0
        };
        let a = sample();
        let b = sample();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.y.to_bits(), q.y.to_bits());
            assert_eq!(p.z.to_bits(), q.z.to_bits());
        }
    }

    #[test]
    fn match_accuracy_finds_bracketing_runs() {
        let field = AnalyticField::sphere(unit2(), vec3(0.0, 0.0, 0.0), 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reference = field.sample_surface(10_000, &mut rng).unwrap();
        // The 10k reference floors chamfer near 5e-3, so 1e-2 is reachable
        // at a moderate grid.
        let outcome = match_accuracy(
            &field,
            &reference,
            1.0e-2,
            BaselineKind::MarchingCubes,
            0.03,
            4,
            1,
        )
        .unwrap();
        assert!(outcome.below.chamfer <= 1.0e-2);
        if let Some(above) = outcome.above {
            assert!(above.chamfer > 1.0e-2);
            assert!(above.parameter < outcome.below.parameter);
        }
        assert!(outcome.probes <= 12);
    }

    #[test]
    fn match_accuracy_impossible_target_errors() {
        let field = AnalyticField::sphere(unit2(), vec3(0.0, 0.0, 0.0), 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reference = field.sample_surface(1_000, &mut rng).unwrap();
        let err = match_accuracy_bounded(
            &field,
            &reference,
            0.0,
            BaselineKind::MarchingCubes,
            0.03,
            3,
            1,
            SearchBounds { start: 4, cap: 16 },
        )
        .unwrap_err();
        assert_eq!(err.target, 0.0);
        assert_eq!(err.best.parameter, 16);
        assert!(err.best.chamfer > 0.0);
    }
}
