//! Marching tetrahedra over the labeled scaffold.
//!
//! Every crossing tet contributes one triangle (sign split 1/3) or two
//! (split 2/2). Triangle corners are indices into the shared sample array,
//! keyed by the crossing edge that produced each sample, so neighboring tets
//! reuse identical vertices and the result is watertight wherever the
//! crossing region is closed. Winding is arranged so normals point from
//! inside to outside.

use crate::geom::Vec3;
use crate::mesh::SurfaceMesh;
use crate::scaffold::{Scaffold, VertexId, OUTWARD_FACE};
use std::collections::HashMap;

/// For an inside pair (a, b) sorted ascending, an even permutation
/// (a, b, c, d) of the tet slots. Evenness keeps the orientation argument
/// for the canonical slot labeling valid for every pattern.
fn quad_slots(a: usize, b: usize) -> [usize; 4] {
    match (a, b) {
        (0, 1) => [0, 1, 2, 3],
        (0, 2) => [0, 2, 3, 1],
        (0, 3) => [0, 3, 1, 2],
        (1, 2) => [1, 2, 0, 3],
        (1, 3) => [1, 3, 2, 0],
        (2, 3) => [2, 3, 0, 1],
        _ => unreachable!("slots must be sorted and distinct"),
    }
}

/// Sample lookup for the crossing edge (u, v), order-insensitive.
fn sample_id(
    index: &HashMap<(VertexId, VertexId), u32>,
    u: VertexId,
    v: VertexId,
) -> u32 {
    let key = if u < v { (u, v) } else { (v, u) };
    index[&key]
}

pub(crate) fn extract_surface(
    scaffold: &Scaffold,
    sample_index: &HashMap<(VertexId, VertexId), u32>,
    sample_points: &[Vec3],
) -> SurfaceMesh {
    let mut mesh = SurfaceMesh {
        vertices: sample_points.to_vec(),
        triangles: Vec::new(),
        source_tets: Vec::new(),
    };
    for (tet_id, verts) in scaffold.finite_tets() {
        let labels = verts.map(|v| {
            scaffold
                .label(v)
                .expect("extraction requires fully labeled scaffold")
        });
        let inside: Vec<usize> = (0..4).filter(|&i| labels[i].is_inside()).collect();
        match inside.len() {
            0 | 4 => {}
            1 | 3 => {
                // Minority slot i; its three edges cross. The outward face
                // listing of slot i gives the inside-to-outside winding when
                // the minority is inside, the mirror when it is outside.
                let i = if inside.len() == 1 {
                    inside[0]
                } else {
                    (0..4).find(|s| !labels[*s].is_inside()).unwrap()
                };
                let [j, k, l] = OUTWARD_FACE[i];
                let (qj, qk, ql) = (
                    sample_id(sample_index, verts[i], verts[j]),
                    sample_id(sample_index, verts[i], verts[k]),
                    sample_id(sample_index, verts[i], verts[l]),
                );
                let tri = if inside.len() == 1 {
                    [qj, qk, ql]
                } else {
                    [qj, ql, qk]
                };
                mesh.triangles.push(tri);
                mesh.source_tets.push(tet_id);
            }
            2 => {
                let [a, b, c, d] = quad_slots(inside[0], inside[1]);
                // Quad cycle around the surface strip: consecutive corners
                // share a tet vertex, winding is outward for even (a,b,c,d).
                let q = [
                    sample_id(sample_index, verts[a], verts[c]),
                    sample_id(sample_index, verts[a], verts[d]),
                    sample_id(sample_index, verts[b], verts[d]),
                    sample_id(sample_index, verts[b], verts[c]),
                ];
                let diag02 = sample_points[q[0] as usize]
                    .distance_squared(sample_points[q[2] as usize]);
                let diag13 = sample_points[q[1] as usize]
                    .distance_squared(sample_points[q[3] as usize]);
                let (t1, t2) = if diag02 <= diag13 {
                    ([q[0], q[1], q[2]], [q[0], q[2], q[3]])
                } else {
                    ([q[1], q[2], q[3]], [q[1], q[3], q[0]])
                };
                mesh.triangles.push(t1);
                mesh.triangles.push(t2);
                mesh.source_tets.push(tet_id);
                mesh.source_tets.push(tet_id);
            }
            _ => unreachable!(),
        }
    }
    mesh
}

/// Area-weighted vertex normals of the extracted mesh, unit length where
/// defined, zero where a vertex has no faces or they cancel.
pub(crate) fn vertex_normals(mesh: &SurfaceMesh) -> Vec<Vec3> {
    let mut acc = vec![Vec3::default(); mesh.vertices.len()];
    for f in 0..mesh.triangles.len() {
        let n = mesh.face_normal(f);
        for &v in &mesh.triangles[f] {
            acc[v as usize] += n;
        }
    }
    acc.into_iter().map(|n| n.normalized()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Label;
    use crate::geom::vec3;
    use crate::scaffold::Scaffold;

    /// One-tet scaffold over the canonical positively oriented tet.
    fn single_tet(labels: [Label; 4]) -> (Scaffold, HashMap<(u32, u32), u32>, Vec<Vec3>) {
        let pts = [
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ];
        let mut s = Scaffold::from_points(&pts, 1);
        for (v, l) in labels.iter().enumerate() {
            s.set_label(v as u32, *l);
        }
        // Samples at edge midpoints of all crossing edges.
        let mut index = HashMap::new();
        let mut samples = Vec::new();
        for a in 0..4u32 {
            for b in (a + 1)..4 {
                if labels[a as usize] != labels[b as usize] {
                    index.insert((a, b), samples.len() as u32);
                    samples.push(pts[a as usize].lerp(pts[b as usize], 0.5));
                }
            }
        }
        (s, index, samples)
    }

    fn orientation_checks(mesh: &SurfaceMesh, inside_centroid: Vec3, outside_centroid: Vec3) {
        let dir = outside_centroid - inside_centroid;
        for f in 0..mesh.triangles.len() {
            assert!(
                mesh.face_normal(f).dot(dir) > 0.0,
                "face {f} winds toward the inside"
            );
        }
    }

    #[test]
    fn one_inside_emits_single_outward_triangle() {
        use Label::{Inside, Outside};
        for i in 0..4 {
            let mut labels = [Outside; 4];
            labels[i] = Inside;
            let (s, index, samples) = single_tet(labels);
            let mesh = extract_surface(&s, &index, &samples);
            assert_eq!(mesh.triangles.len(), 1);
            assert_eq!(mesh.source_tets.len(), 1);
            let outside_centroid = (0..4)
                .filter(|&k| k != i)
                .map(|k| s.position(k as u32))
                .fold(vec3(0.0, 0.0, 0.0), |a, b| a + b)
                * (1.0 / 3.0);
            orientation_checks(&mesh, s.position(i as u32), outside_centroid);
        }
    }

    #[test]
    fn three_inside_emits_single_outward_triangle() {
        use Label::{Inside, Outside};
        for i in 0..4 {
            let mut labels = [Inside; 4];
            labels[i] = Outside;
            let (s, index, samples) = single_tet(labels);
            let mesh = extract_surface(&s, &index, &samples);
            assert_eq!(mesh.triangles.len(), 1);
            let inside_centroid = (0..4)
                .filter(|&k| k != i)
                .map(|k| s.position(k as u32))
                .fold(vec3(0.0, 0.0, 0.0), |a, b| a + b)
                * (1.0 / 3.0);
            orientation_checks(&mesh, inside_centroid, s.position(i as u32));
        }
    }

    #[test]
    fn two_two_emits_quad_with_shared_corners() {
        use Label::{Inside, Outside};
        for a in 0..4usize {
            for b in (a + 1)..4 {
                let mut labels = [Outside; 4];
                labels[a] = Inside;
                labels[b] = Inside;
                let (s, index, samples) = single_tet(labels);
                let mesh = extract_surface(&s, &index, &samples);
                assert_eq!(mesh.triangles.len(), 2);
                assert_eq!(samples.len(), 4);
                // The two triangles cover all four quad corners and share
                // exactly one edge (the diagonal).
                let mut used: Vec<u32> = mesh.triangles.iter().flatten().copied().collect();
                used.sort_unstable();
                used.dedup();
                assert_eq!(used, vec![0, 1, 2, 3]);
                let inside_centroid =
                    (s.position(a as u32) + s.position(b as u32)) * 0.5;
                let outside: Vec<u32> = (0..4u32)
                    .filter(|&k| k != a as u32 && k != b as u32)
                    .collect();
                let outside_centroid =
                    (s.position(outside[0]) + s.position(outside[1])) * 0.5;
                orientation_checks(&mesh, inside_centroid, outside_centroid);
            }
        }
    }

    #[test]
    fn uniform_tets_emit_nothing() {
        use Label::{Inside, Outside};
        for l in [Inside, Outside] {
            let (s, index, samples) = single_tet([l; 4]);
            let mesh = extract_surface(&s, &index, &samples);
            assert!(mesh.triangles.is_empty());
        }
    }

    #[test]
    fn adjacent_tets_share_sample_vertices() {
        use Label::{Inside, Outside};
        // Two tets sharing face (0,1,2); vertex 0 inside, rest outside.
        let pts = [
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.3, 0.3, 1.0),
            vec3(0.3, 0.3, -1.0),
        ];
        let mut s = Scaffold::from_points(&pts, 1);
        let labels = [Inside, Outside, Outside, Outside, Outside];
        for (v, l) in labels.iter().enumerate() {
            s.set_label(v as u32, *l);
        }
        let mut index = HashMap::new();
        let mut samples = Vec::new();
        for e in s.crossing_edges().unwrap() {
            index.insert(e.key(), samples.len() as u32);
            samples.push(s.position(e.inside).lerp(s.position(e.outside), 0.5));
        }
        let mesh = extract_surface(&s, &index, &samples);
        // Vertex 0 has three crossing edges into each tet, two of them
        // (0-1, 0-2) shared: 4 samples, 2 triangles touching both shared
        // samples.
        assert_eq!(samples.len(), 4);
        assert_eq!(mesh.triangles.len(), 2);
        let shared: Vec<u32> = index
            .iter()
            .filter(|((_, b), _)| *b == 1 || *b == 2)
            .map(|(_, &i)| i)
            .collect();
        for t in &mesh.triangles {
            for &sid in &shared {
                assert!(t.contains(&sid), "shared sample missing from a face");
            }
        }
    }
}
