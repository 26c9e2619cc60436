//! Triangle surface mesh produced by extraction, plus the post-processing
//! passes that never touch the occupancy field: connectivity reporting,
//! short-edge collapse with angle-improving flips, and blue-noise style
//! subsampling of the sample cloud.

use crate::geom::Vec3;
use crate::spatial::GridIndex;
use std::collections::{HashMap, HashSet};

/// Indexed triangle mesh. `vertices` are exactly the located surface samples
/// (shared across faces, watertight by construction); `source_tets[i]` is
/// the scaffold tet that emitted `triangles[i]`.
#[derive(Clone, Debug, Default)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub source_tets: Vec<u32>,
}

impl SurfaceMesh {
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangles[f];
        let (pa, pb, pc) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        (pb - pa).cross(pc - pa)
    }

    /// Undirected edges with incident face ids. Deterministic order (sorted
    /// keys).
    pub(crate) fn edge_faces(&self) -> Vec<((u32, u32), Vec<u32>)> {
        let mut map: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (f, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                map.entry(key).or_default().push(f as u32);
            }
        }
        let mut out: Vec<_> = map.into_iter().collect();
        out.sort_unstable_by_key(|(k, _)| *k);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ManifoldReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    /// V - E + F over referenced vertices.
    pub euler_characteristic: i64,
    pub closed_manifold: bool,
}

/// Connectivity audit. Vertices never referenced by a face are ignored.
pub fn manifold_report(mesh: &SurfaceMesh) -> ManifoldReport {
    let mut referenced = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &v in t {
            referenced[v as usize] = true;
        }
    }
    let vertices = referenced.iter().filter(|&&r| r).count();
    let mut boundary = 0usize;
    let mut non_manifold = 0usize;
    let edges = mesh.edge_faces();
    for (_, faces) in &edges {
        match faces.len() {
            1 => boundary += 1,
            2 => {}
            _ => non_manifold += 1,
        }
    }
    let euler = vertices as i64 - edges.len() as i64 + mesh.triangles.len() as i64;
    ManifoldReport {
        vertices,
        edges: edges.len(),
        faces: mesh.triangles.len(),
        boundary_edges: boundary,
        non_manifold_edges: non_manifold,
        euler_characteristic: euler,
        closed_manifold: boundary == 0 && non_manifold == 0 && !mesh.triangles.is_empty(),
    }
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct OptimizeStats {
    pub collapsed_edges: usize,
    pub flipped_edges: usize,
    pub passes: usize,
}

/// Collapse edges shorter than `min_edge_length` and then flip interior
/// edges while the minimum interior angle improves. Purely combinatorial and
/// geometric on the existing vertices: no occupancy evaluations, vertex
/// positions are never moved, topology is preserved by link-condition and
/// normal-flip checks. Runs up to `max_passes` rounds or until a fixpoint.
pub fn optimize_mesh(
    mesh: &mut SurfaceMesh,
    min_edge_length: f64,
    max_passes: usize,
) -> OptimizeStats {
    let mut stats = OptimizeStats::default();
    for _ in 0..max_passes {
        let collapsed = collapse_pass(mesh, min_edge_length);
        let flipped = flip_pass(mesh);
        stats.collapsed_edges += collapsed;
        stats.flipped_edges += flipped;
        stats.passes += 1;
        if collapsed == 0 && flipped == 0 {
            break;
        }
    }
    compact(mesh);
    stats
}

/// One sweep of short-edge collapses, shortest first. Returns collapses done.
fn collapse_pass(mesh: &mut SurfaceMesh, min_edge_length: f64) -> usize {
    let mut candidates: Vec<(f64, (u32, u32))> = mesh
        .edge_faces()
        .iter()
        .filter(|(_, faces)| faces.len() == 2)
        .map(|(k, _)| {
            (
                mesh.vertices[k.0 as usize].distance(mesh.vertices[k.1 as usize]),
                *k,
            )
        })
        .filter(|(len, _)| *len < min_edge_length)
        .collect();
    candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // Adjacency rebuilt once; maintained incrementally through the sweep.
    let mut vertex_faces: Vec<Vec<u32>> = vec![Vec::new(); mesh.vertices.len()];
    for (f, t) in mesh.triangles.iter().enumerate() {
        for &v in t {
            vertex_faces[v as usize].push(f as u32);
        }
    }
    let mut face_alive = vec![true; mesh.triangles.len()];
    let mut done = 0usize;

    'next: for (_, (u, v)) in candidates {
        // The edge may be gone or stretched by a previous collapse.
        let live = |x: u32| -> Vec<u32> {
            let mut fs: Vec<u32> = vertex_faces[x as usize]
                .iter()
                .copied()
                .filter(|&f| face_alive[f as usize])
                .collect();
            fs.sort_unstable();
            fs.dedup();
            fs
        };
        let fu = live(u);
        let fv = live(v);
        let shared: Vec<u32> = fu.iter().copied().filter(|f| fv.contains(f)).collect();
        if shared.len() != 2 {
            continue;
        }
        if mesh.vertices[u as usize].distance(mesh.vertices[v as usize]) >= min_edge_length {
            continue;
        }
        // Link condition: the vertex links of u and v may meet only at the
        // two apexes of the shared faces, otherwise the collapse pinches.
        let ring = |fs: &[u32], x: u32| -> Vec<u32> {
            let mut r: Vec<u32> = fs
                .iter()
                .flat_map(|&f| mesh.triangles[f as usize])
                .filter(|&w| w != x)
                .collect();
            r.sort_unstable();
            r.dedup();
            r
        };
        let ring_u = ring(&fu, u);
        let ring_v = ring(&fv, v);
        let mut apexes: Vec<u32> = shared
            .iter()
            .flat_map(|&f| mesh.triangles[f as usize])
            .filter(|&w| w != u && w != v)
            .collect();
        apexes.sort_unstable();
        apexes.dedup();
        if apexes.len() != 2 {
            continue; // degenerate fin
        }
        let common: Vec<u32> = ring_u
            .iter()
            .copied()
            .filter(|w| ring_v.contains(w) && *w != v && *w != u)
            .collect();
        if common != apexes {
            continue;
        }
        // Collapse v into u: would any surviving face of v invert or
        // degenerate?
        for &f in &fv {
            if shared.contains(&f) {
                continue;
            }
            let t = mesh.triangles[f as usize];
            let old_n = mesh.face_normal(f as usize);
            let moved: Vec<Vec3> = t
                .iter()
                .map(|&w| mesh.vertices[if w == v { u } else { w } as usize])
                .collect();
            let new_n = (moved[1] - moved[0]).cross(moved[2] - moved[0]);
            if new_n.length() < 1e-18 || new_n.dot(old_n) <= 0.0 {
                continue 'next;
            }
        }
        // Commit.
        for &f in &shared {
            face_alive[f as usize] = false;
        }
        for &f in &fv {
            if shared.contains(&f) {
                continue;
            }
            let t = &mut mesh.triangles[f as usize];
            for w in t.iter_mut() {
                if *w == v {
                    *w = u;
                }
            }
            vertex_faces[u as usize].push(f);
        }
        vertex_faces[v as usize].clear();
        done += 1;
    }

    if done > 0 {
        // source_tets is parallel to triangles when present, empty for meshes
        // without provenance (e.g. loaded from OBJ).
        let has_src = mesh.source_tets.len() == mesh.triangles.len();
        let mut keep_tri = Vec::with_capacity(mesh.triangles.len());
        let mut keep_src = Vec::with_capacity(mesh.triangles.len());
        for (f, alive) in face_alive.iter().enumerate() {
            if *alive {
                keep_tri.push(mesh.triangles[f]);
                if has_src {
                    keep_src.push(mesh.source_tets[f]);
                }
            }
        }
        mesh.triangles = keep_tri;
        mesh.source_tets = keep_src;
    }
    done
}

fn min_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let angle = |p: Vec3, q: Vec3, r: Vec3| {
        let u = q - p;
        let v = r - p;
        let denom = u.length() * v.length();
        if denom < 1e-300 {
            return 0.0;
        }
        (u.dot(v) / denom).clamp(-1.0, 1.0).acos()
    };
    angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b))
}

/// One sweep of greedy edge flips accepting strict min-angle improvements.
fn flip_pass(mesh: &mut SurfaceMesh) -> usize {
    let mut flipped = 0usize;
    // Edge map gets stale after each flip; process a snapshot and skip edges
    // whose faces changed underneath.
    let snapshot = mesh.edge_faces();
    let mut face_version = vec![0u32; mesh.triangles.len()];
    let mut versions: HashMap<(u32, u32), (u32, u32, u32, u32)> = HashMap::new();
    // Every live edge, kept current. A flip whose new diagonal already
    // exists elsewhere would give that edge four faces.
    let mut edge_set: HashSet<(u32, u32)> = snapshot.iter().map(|(k, _)| *k).collect();
    for (k, faces) in &snapshot {
        if faces.len() == 2 {
            versions.insert(*k, (faces[0], 0, faces[1], 0));
        }
    }
    let mut keys: Vec<(u32, u32)> = versions.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let (f1, v1, f2, v2) = versions[&key];
        if face_version[f1 as usize] != v1 || face_version[f2 as usize] != v2 {
            continue;
        }
        let (u, v) = key;
        let t1 = mesh.triangles[f1 as usize];
        let t2 = mesh.triangles[f2 as usize];
        let apex = |t: [u32; 3]| t.into_iter().find(|&w| w != u && w != v);
        let (Some(a), Some(b)) = (apex(t1), apex(t2)) else {
            continue;
        };
        if a == b {
            continue;
        }
        if edge_set.contains(&(a.min(b), a.max(b))) {
            continue;
        }
        // Orientation bookkeeping: in t1 the edge must appear as u->v, in t2
        // as v->u (consistent winding); establish which is which.
        let dir = |t: [u32; 3]| {
            (0..3).any(|k| t[k] == u && t[(k + 1) % 3] == v)
        };
        let (fa, fb, a, b) = if dir(t1) { (f1, f2, a, b) } else { (f2, f1, b, a) };
        let (pu, pv, pa, pb) = (
            mesh.vertices[u as usize],
            mesh.vertices[v as usize],
            mesh.vertices[a as usize],
            mesh.vertices[b as usize],
        );
        let old = min_angle(pu, pv, pa).min(min_angle(pv, pu, pb));
        let new = min_angle(pu, pb, pa).min(min_angle(pv, pa, pb));
        if new <= old + 1e-12 {
            continue;
        }
        // Keep the surface from folding: both new faces must roughly agree
        // with the old pair's mean normal.
        let mean_old = (pv - pu).cross(pa - pu) + (pu - pv).cross(pb - pv);
        let n1 = (pb - pu).cross(pa - pu);
        let n2 = (pa - pv).cross(pb - pv);
        if n1.dot(mean_old) <= 0.0 || n2.dot(mean_old) <= 0.0 {
            continue;
        }
        // (u, v, a), (v, u, b) -> (u, b, a), (v, a, b).
        mesh.triangles[fa as usize] = [u, b, a];
        mesh.triangles[fb as usize] = [v, a, b];
        face_version[fa as usize] += 1;
        face_version[fb as usize] += 1;
        edge_set.remove(&key);
        edge_set.insert((a.min(b), a.max(b)));
        flipped += 1;
    }
    flipped
}

/// Drop unreferenced vertices, remapping indices. Keeps relative order.
fn compact(mesh: &mut SurfaceMesh) {
    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    let mut kept = Vec::new();
    for t in &mesh.triangles {
        for &v in t {
            if remap[v as usize] == u32::MAX {
                remap[v as usize] = kept.len() as u32;
                kept.push(mesh.vertices[v as usize]);
            }
        }
    }
    for t in &mut mesh.triangles {
        for v in t.iter_mut() {
            *v = remap[*v as usize];
        }
    }
    mesh.vertices = kept;
}

/// Greedy sample elimination: repeatedly drop the point with the smallest
/// nearest-neighbor distance (ties to the lower index) until
/// `ceil(keep_fraction * n)` points remain. Returns the kept indices in
/// ascending order. Fully deterministic; `_seed` is accepted for interface
/// stability but never consulted.
pub fn reject_subsample(points: &[Vec3], keep_fraction: f64, _seed: u64) -> Vec<usize> {
    assert!((0.0..=1.0).contains(&keep_fraction), "fraction out of range");
    let n = points.len();
    let keep = (keep_fraction * n as f64).ceil() as usize;
    if keep >= n {
        return (0..n).collect();
    }
    let mut index = GridIndex::new(points);

    #[derive(PartialEq)]
    struct Entry(f64, u32);
    impl Eq for Entry {}
    impl Ord for Entry {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            // Reversed: BinaryHeap is a max-heap, we pop smallest distance.
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }

    let mut heap = std::collections::BinaryHeap::with_capacity(n);
    for i in 0..n as u32 {
        if let Some((_, d)) = index.nearest(points[i as usize], Some(i)) {
            heap.push(Entry(d, i));
        }
    }
    let mut alive = vec![true; n];
    let mut remaining = n;
    while remaining > keep {
        let Entry(d, i) = heap.pop().expect("heap exhausted before quota");
        if !alive[i as usize] {
            continue;
        }
        // Removals only grow true distances, so stale entries underestimate
        // and a fresh measurement decides.
        let (_, now) = index
            .nearest(points[i as usize], Some(i))
            .expect("at least one other point is alive");
        if now > d + 1e-15 {
            heap.push(Entry(now, i));
            continue;
        }
        alive[i as usize] = false;
        index.deactivate(i);
        remaining -= 1;
    }
    (0..n).filter(|&i| alive[i]).collect()
}
