//! Incremental Delaunay tetrahedralization used as the probing scaffold.
//!
//! Plain Bowyer-Watson with ghost tetrahedra: every hull face is backed by a
//! tet whose fourth vertex is the infinite sentinel [`GHOST`], so hull growth
//! and in-hull insertion run through the same cavity machinery. A ghost tet's
//! "circumball" is the open half space beyond its hull face.
//!
//! Orientation invariants, maintained everywhere and checked by
//! [`Scaffold::validate`]:
//! - finite tets are positively oriented under the perturbed predicate;
//! - ghost tets store the sentinel in slot 3 and their hull face wound
//!   counterclockwise as seen from outside the hull;
//! - `neighbors[i]` is the tet across the face opposite `vertices[i]`, and
//!   the relation is mutual.
//!
//! Point location is a remembering stochastic walk seeded from the hint
//! vertex's incident tet, so inserting next to a known vertex is O(1) in the
//! complex size. Degeneracies (the scaled domain corners are exactly
//! cospherical, lattice inputs are common in tests) are resolved by the
//! index-ordered symbolic perturbation in [`crate::predicates`]; there is no
//! epsilon tuning anywhere in this module.

use crate::field::Label;
use crate::geom::{Aabb, Vec3};
use crate::predicates::{in_sphere, orient3d, IndexedPoints};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};

pub type VertexId = u32;
pub type TetId = u32;

/// Sentinel vertex id closing the hull. Never indexes into position storage.
pub const GHOST: VertexId = u32::MAX;

const INVALID_TET: TetId = u32::MAX;

/// Vertex triples of the face opposite slot `i`, wound so the face normal
/// points out of the tet (positive side away from the remaining vertex).
pub(crate) const OUTWARD_FACE: [[usize; 3]; 4] =
    [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
/// Same faces wound toward the remaining vertex.
const INWARD_FACE: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];

#[derive(Clone, Copy, Debug)]
struct Tet {
    v: [VertexId; 4],
    /// Neighbor across the face opposite `v[i]`.
    n: [TetId; 4],
}

/// Outcome of a successful insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insertion {
    New(VertexId),
    /// The point coincides (within 1e-12) with an existing vertex; the
    /// complex is untouched.
    Duplicate(VertexId),
}

impl Insertion {
    pub fn id(self) -> VertexId {
        match self {
            Insertion::New(v) | Insertion::Duplicate(v) => v,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScaffoldError {
    #[error("point lies outside the current hull")]
    OutsideHull,
    #[error("vertex {0} has no occupancy label")]
    UnlabeledVertex(VertexId),
}

/// Scaffold edge whose endpoints carry opposite labels.
#[derive(Clone, Copy, Debug)]
pub struct CrossingEdge {
    pub inside: VertexId,
    pub outside: VertexId,
    pub length: f64,
}

impl CrossingEdge {
    /// Index pair sorted ascending; the canonical identity of the edge.
    pub fn key(&self) -> (VertexId, VertexId) {
        if self.inside < self.outside {
            (self.inside, self.outside)
        } else {
            (self.outside, self.inside)
        }
    }
}

pub struct Scaffold {
    positions: Vec<Vec3>,
    labels: Vec<Option<Label>>,
    incident: Vec<TetId>,
    tets: Vec<Tet>,
    alive: Vec<bool>,
    free: Vec<TetId>,
    stamp: Vec<u32>,
    in_cavity_flag: Vec<bool>,
    cur_stamp: u32,
    last_tet: TetId,
    corner_ids: Vec<VertexId>,
    domain: Option<Aabb>,
    examined: HashSet<u64>,
    generation: u32,
    walk_rng: ChaCha8Rng,
}

fn pack_edge(a: VertexId, b: VertexId) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    (u64::from(lo) << 32) | u64::from(hi)
}

impl Scaffold {
    /// Bootstrap from raw points, first four forming the initial tet. At
    /// least four points are required; later points may lie anywhere (the
    /// hull grows as needed). Duplicates within 1e-12 are dropped.
    pub fn from_points(points: &[Vec3], seed: u64) -> Scaffold {
        assert!(points.len() >= 4, "need at least 4 points");
        let mut s = Scaffold::empty(seed);
        s.bootstrap([points[0], points[1], points[2], points[3]]);
        for &p in &points[4..] {
            s.insert_raw(p, None, true);
        }
        s
    }

    /// Standard pipeline construction: the eight corners of `domain` scaled
    /// by 1.5 about its center enter first and pin the hull; `interior`
    /// points follow in the given order. Insertion order is part of the
    /// result's identity, so callers wanting reproducible scaffolds must
    /// pass reproducible point sequences.
    pub fn build_initial(domain: Aabb, interior: &[Vec3], seed: u64) -> Scaffold {
        let hull = domain.scaled(1.5);
        let corners = hull.corners();
        let mut s = Scaffold::empty(seed);
        s.bootstrap([corners[0], corners[1], corners[2], corners[3]]);
        for &c in &corners[4..] {
            s.insert_raw(c, None, true);
        }
        s.corner_ids = (0..8).collect();
        s.domain = Some(domain);
        for &p in interior {
            debug_assert!(hull.contains(p), "interior point outside the scaled hull");
            s.insert_raw(p, None, true);
        }
        s
    }

    fn empty(seed: u64) -> Scaffold {
        Scaffold {
            positions: Vec::new(),
            labels: Vec::new(),
            incident: Vec::new(),
            tets: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            stamp: Vec::new(),
            in_cavity_flag: Vec::new(),
            cur_stamp: 0,
            last_tet: 0,
            corner_ids: Vec::new(),
            domain: None,
            examined: HashSet::new(),
            generation: 0,
            walk_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5ca0_f01d),
        }
    }

    /// One finite tet plus its four ghosts.
    fn bootstrap(&mut self, pts: [Vec3; 4]) {
        for p in pts {
            self.positions.push(p);
            self.labels.push(None);
            self.incident.push(INVALID_TET);
        }
        let ip = IndexedPoints::new(&self.positions);
        let v: [VertexId; 4] = if orient3d(&ip, 0, 1, 2, 3) {
            [0, 1, 2, 3]
        } else {
            [0, 1, 3, 2]
        };
        let inner = self.alloc(Tet { v, n: [INVALID_TET; 4] });
        for (i, f) in OUTWARD_FACE.iter().enumerate() {
            let ghost = self.alloc(Tet {
                v: [v[f[0]], v[f[1]], v[f[2]], GHOST],
                n: [INVALID_TET; 4],
            });
            self.tets[inner as usize].n[i] = ghost;
            self.tets[ghost as usize].n[3] = inner;
        }
        // Ghost-to-ghost adjacency via shared infinite faces (edge + GHOST).
        let mut half: HashMap<u64, (TetId, usize)> = HashMap::new();
        for g in 1..5u32 {
            let tv = self.tets[g as usize].v;
            for s in 0..3 {
                let (a, b) = (tv[(s + 1) % 3], tv[(s + 2) % 3]);
                let key = pack_edge(a, b);
                match half.remove(&key) {
                    None => {
                        half.insert(key, (g, s));
                    }
                    Some((og, os)) => {
                        self.tets[g as usize].n[s] = og;
                        self.tets[og as usize].n[os] = g;
                    }
                }
            }
        }
        for vert in v {
            self.incident[vert as usize] = inner;
        }
        self.last_tet = inner;
    }

    fn alloc(&mut self, t: Tet) -> TetId {
        if let Some(id) = self.free.pop() {
            self.tets[id as usize] = t;
            self.alive[id as usize] = true;
            id
        } else {
            self.tets.push(t);
            self.alive.push(true);
            self.stamp.push(0);
            self.in_cavity_flag.push(false);
            (self.tets.len() - 1) as TetId
        }
    }

    fn is_ghost(&self, t: TetId) -> bool {
        self.tets[t as usize].v[3] == GHOST
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, v: VertexId) -> Vec3 {
        self.positions[v as usize]
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn label(&self, v: VertexId) -> Option<Label> {
        self.labels[v as usize]
    }

    pub fn set_label(&mut self, v: VertexId, label: Label) {
        self.labels[v as usize] = Some(label);
    }

    /// Ids of the eight scaled domain corners, empty unless built through
    /// [`Scaffold::build_initial`].
    pub fn corner_ids(&self) -> &[VertexId] {
        &self.corner_ids
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn bump_generation(&mut self) {
        self.generation += 1;
    }

    /// Number of live finite tets.
    pub fn tet_count(&self) -> usize {
        self.tets
            .iter()
            .enumerate()
            .filter(|(i, t)| self.alive[*i] && t.v[3] != GHOST)
            .count()
    }

    /// Live finite tets in index order.
    pub fn finite_tets(&self) -> impl Iterator<Item = (TetId, [VertexId; 4])> + '_ {
        self.tets.iter().enumerate().filter_map(move |(i, t)| {
            (self.alive[i] && t.v[3] != GHOST).then_some((i as TetId, t.v))
        })
    }

    pub fn tet_vertices(&self, t: TetId) -> [VertexId; 4] {
        self.tets[t as usize].v
    }

    /// Insert a vertex, using `hint` (ideally a vertex near `p`) to start the
    /// walk. Points outside the current hull are refused; points within
    /// 1e-12 of an existing vertex are reported as duplicates and change
    /// nothing.
    pub fn insert_vertex(
        &mut self,
        p: Vec3,
        hint: Option<VertexId>,
    ) -> Result<Insertion, ScaffoldError> {
        match self.insert_raw(p, hint, false) {
            Some(outcome) => Ok(outcome),
            None => Err(ScaffoldError::OutsideHull),
        }
    }

    /// Full insertion machinery. Returns None iff the point lies outside the
    /// hull and `grow_hull` is false.
    fn insert_raw(&mut self, p: Vec3, hint: Option<VertexId>, grow_hull: bool) -> Option<Insertion> {
        let p_id = self.positions.len() as VertexId;
        let start = match hint {
            Some(v) => self.incident[v as usize],
            None => self.last_tet,
        };
        debug_assert!(self.alive[start as usize]);

        let loc = self.locate(p, p_id, start);
        if self.is_ghost(loc) && !grow_hull {
            return None;
        }

        // Cavity flood fill from the located tet.
        let ip = IndexedPoints::with_extra(&self.positions, p_id, p);
        self.cur_stamp += 1;
        let s = self.cur_stamp;
        debug_assert!(self.tet_in_cavity(&ip, p_id, loc));
        self.stamp[loc as usize] = s;
        self.in_cavity_flag[loc as usize] = true;
        let mut cavity = vec![loc];
        let mut stack = vec![loc];
        // Boundary faces as (inward-wound vertex triple, outer tet).
        let mut boundary: Vec<([VertexId; 3], TetId)> = Vec::new();
        while let Some(t) = stack.pop() {
            let tet = self.tets[t as usize];
            for (i, nb) in tet.n.into_iter().enumerate() {
                let nbu = nb as usize;
                let inside = if self.stamp[nbu] == s {
                    self.in_cavity_flag[nbu]
                } else {
                    self.stamp[nbu] = s;
                    let inside = self.tet_in_cavity(&ip, p_id, nb);
                    self.in_cavity_flag[nbu] = inside;
                    if inside {
                        cavity.push(nb);
                        stack.push(nb);
                    }
                    inside
                };
                if !inside {
                    let f = INWARD_FACE[i];
                    boundary.push(([tet.v[f[0]], tet.v[f[1]], tet.v[f[2]]], nb));
                }
            }
        }

        // Refuse near-coincident points before any mutation.
        for &t in &cavity {
            for v in self.tets[t as usize].v {
                if v != GHOST && self.positions[v as usize].distance(p) <= 1e-12 {
                    return Some(Insertion::Duplicate(v));
                }
            }
        }

        for &t in &cavity {
            self.alive[t as usize] = false;
            self.free.push(t);
        }
        self.positions.push(p);
        self.labels.push(None);
        self.incident.push(INVALID_TET);

        // Star the cavity boundary from p. Every face triple is wound toward
        // the cavity interior, so appending p yields positive orientation;
        // ghost-containing triples are rotated into canonical form by an even
        // permutation, preserving it.
        let mut new_tets: Vec<(TetId, usize)> = Vec::with_capacity(boundary.len());
        for &(triple, outer) in &boundary {
            let mut v = [triple[0], triple[1], triple[2], p_id];
            if let Some(g) = v.iter().position(|&x| x == GHOST) {
                if g != 3 {
                    v.swap(g, 3);
                    v.swap((g + 1) % 3, (g + 2) % 3);
                }
            }
            let id = self.alloc(Tet { v, n: [INVALID_TET; 4] });
            let slot_p = v.iter().position(|&x| x == p_id).unwrap();
            self.tets[id as usize].n[slot_p] = outer;
            let outer_slot = (0..4)
                .find(|&j| !triple.contains(&self.tets[outer as usize].v[j]))
                .expect("outer tet must share the boundary face");
            self.tets[outer as usize].n[outer_slot] = id;
            new_tets.push((id, slot_p));
        }

        // Faces interior to the star pair up across shared (edge, p) faces.
        let mut half: HashMap<u64, (TetId, usize)> = HashMap::with_capacity(new_tets.len() * 2);
        for &(id, slot_p) in &new_tets {
            let v = self.tets[id as usize].v;
            for slot in 0..4 {
                if slot == slot_p {
                    continue;
                }
                let mut edge = [GHOST; 2];
                let mut k = 0;
                for (j, &x) in v.iter().enumerate() {
                    if j != slot && x != p_id {
                        edge[k] = x;
                        k += 1;
                    }
                }
                debug_assert_eq!(k, 2);
                let key = pack_edge(edge[0], edge[1]);
                match half.remove(&key) {
                    None => {
                        half.insert(key, (id, slot));
                    }
                    Some((oid, oslot)) => {
                        self.tets[id as usize].n[slot] = oid;
                        self.tets[oid as usize].n[oslot] = id;
                    }
                }
            }
        }
        debug_assert!(half.is_empty(), "unpaired star faces");

        // Incidence: ghosts first so any finite tet wins.
        for &(id, _) in &new_tets {
            if self.is_ghost(id) {
                for v in self.tets[id as usize].v {
                    if v != GHOST {
                        self.incident[v as usize] = id;
                    }
                }
            }
        }
        for &(id, _) in &new_tets {
            if !self.is_ghost(id) {
                for v in self.tets[id as usize].v {
                    self.incident[v as usize] = id;
                }
                self.last_tet = id;
            }
        }
        debug_assert!(!self.is_ghost(self.incident[p_id as usize]));

        Some(Insertion::New(p_id))
    }

    fn tet_in_cavity(&self, ip: &IndexedPoints, p_id: VertexId, t: TetId) -> bool {
        let v = self.tets[t as usize].v;
        if v[3] == GHOST {
            orient3d(ip, v[0], v[1], v[2], p_id)
        } else {
            in_sphere(ip, v[0], v[1], v[2], v[3], p_id)
        }
    }

    /// Stochastic remembering walk. Returns a tet containing p under the
    /// perturbed geometry; a ghost tet means p is outside the hull (beyond
    /// that ghost's face).
    fn locate(&mut self, p: Vec3, p_id: VertexId, start: TetId) -> TetId {
        let mut cur = if self.is_ghost(start) {
            self.tets[start as usize].n[3]
        } else {
            start
        };
        let positions = std::mem::take(&mut self.positions);
        let ip = IndexedPoints::with_extra(&positions, p_id, p);
        let mut order = [0usize, 1, 2, 3];
        let mut steps = 0usize;
        let result = 'walk: loop {
            steps += 1;
            assert!(
                steps <= 16 * (self.tets.len() + 4),
                "point location walk failed to terminate"
            );
            order.shuffle(&mut self.walk_rng);
            let tet = &self.tets[cur as usize];
            let mut next = None;
            for &i in &order {
                let f = OUTWARD_FACE[i];
                if orient3d(&ip, tet.v[f[0]], tet.v[f[1]], tet.v[f[2]], p_id) {
                    next = Some(tet.n[i]);
                    break;
                }
            }
            match next {
                None => break 'walk cur,
                Some(nb) => {
                    if self.is_ghost(nb) {
                        break 'walk nb;
                    }
                    cur = nb;
                }
            }
        };
        self.positions = positions;
        result
    }

    /// All edges of live finite tets, each once, in deterministic order.
    fn unique_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut packed: Vec<u64> = Vec::with_capacity(self.tets.len() * 3);
        for (_, v) in self.finite_tets() {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    packed.push(pack_edge(v[i], v[j]));
                }
            }
        }
        packed.sort_unstable();
        packed.dedup();
        packed
            .into_iter()
            .map(|e| ((e >> 32) as VertexId, e as VertexId))
            .collect()
    }

    fn edge_as_crossing(&self, a: VertexId, b: VertexId) -> Result<Option<CrossingEdge>, ScaffoldError> {
        let la = self.labels[a as usize].ok_or(ScaffoldError::UnlabeledVertex(a))?;
        let lb = self.labels[b as usize].ok_or(ScaffoldError::UnlabeledVertex(b))?;
        if la == lb {
            return Ok(None);
        }
        let (inside, outside) = if la.is_inside() { (a, b) } else { (b, a) };
        Ok(Some(CrossingEdge {
            inside,
            outside,
            length: self.positions[a as usize].distance(self.positions[b as usize]),
        }))
    }

    /// Every edge whose endpoint labels differ. Requires all vertices
    /// labeled. Does not touch the examined-edge memo.
    pub fn crossing_edges(&self) -> Result<Vec<CrossingEdge>, ScaffoldError> {
        let mut out = Vec::new();
        for (a, b) in self.unique_edges() {
            if let Some(e) = self.edge_as_crossing(a, b)? {
                out.push(e);
            }
        }
        Ok(out)
    }

    /// Crossing edges not seen by a previous call; each returned edge is
    /// recorded as examined. Edges destroyed by later insertions stay in the
    /// memo harmlessly (their index pairs never reappear as new edges).
    pub fn new_crossing_edges(&mut self) -> Result<Vec<CrossingEdge>, ScaffoldError> {
        let mut out = Vec::new();
        for (a, b) in self.unique_edges() {
            if self.examined.contains(&pack_edge(a, b)) {
                continue;
            }
            if let Some(e) = self.edge_as_crossing(a, b)? {
                self.examined.insert(pack_edge(a, b));
                out.push(e);
            }
        }
        Ok(out)
    }

    /// Mean vertex degree (unique incident edges) over vertices away from
    /// boundary effects. With domain corners present, corners, their
    /// neighbors, and vertices within two mean spacings of the domain walls
    /// are excluded; otherwise all vertices count.
    pub fn mean_vertex_degree(&self) -> f64 {
        let n = self.positions.len();
        let mut degree = vec![0u32; n];
        let mut corner_adjacent = vec![false; n];
        let is_corner = |v: VertexId| self.corner_ids.contains(&v);
        for (a, b) in self.unique_edges() {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
            if is_corner(a) {
                corner_adjacent[b as usize] = true;
            }
            if is_corner(b) {
                corner_adjacent[a as usize] = true;
            }
        }
        let eligible: Vec<usize> = match self.domain {
            None => (0..n).collect(),
            Some(domain) => {
                let interior = n.saturating_sub(8).max(1);
                let spacing = (domain.volume() / interior as f64).cbrt();
                (0..n)
                    .filter(|&i| {
                        !is_corner(i as VertexId)
                            && !corner_adjacent[i]
                            && domain.wall_distance(self.positions[i]) > 2.0 * spacing
                    })
                    .collect()
            }
        };
        if eligible.is_empty() {
            return 0.0;
        }
        eligible.iter().map(|&i| f64::from(degree[i])).sum::<f64>() / eligible.len() as f64
    }

    /// Plain-text dump: vertex list with labels, then 4-index tets.
    pub fn write_dump(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "verts {}", self.positions.len())?;
        for (p, l) in self.positions.iter().zip(&self.labels) {
            let sign = l.map_or(0, Label::sign);
            writeln!(w, "{} {} {} {}", p.x, p.y, p.z, sign)?;
        }
        writeln!(w, "tets {}", self.tet_count())?;
        for (_, v) in self.finite_tets() {
            writeln!(w, "{} {} {} {}", v[0], v[1], v[2], v[3])?;
        }
        Ok(())
    }

    /// Structural invariant check for tests: mutual neighbor wiring, face
    /// agreement, orientation, incidence, and the Euler relation of the
    /// ghost-compactified complex (a 3-sphere).
    pub fn validate(&self) -> Result<(), String> {
        let ip = IndexedPoints::new(&self.positions);
        let mut n_tets = 0usize;
        let mut faces: HashSet<[VertexId; 3]> = HashSet::new();
        let mut edges: HashSet<u64> = HashSet::new();
        for (i, tet) in self.tets.iter().enumerate() {
            if !self.alive[i] {
                continue;
            }
            n_tets += 1;
            let v = tet.v;
            let mut sorted = v;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("tet {i} has repeated vertices {v:?}"));
            }
            if v[..3].contains(&GHOST) {
                return Err(format!("tet {i} has ghost outside slot 3"));
            }
            for a in 0..4 {
                for b in (a + 1)..4 {
                    edges.insert(pack_edge(v[a], v[b]));
                }
            }
            for (s, f) in OUTWARD_FACE.iter().enumerate() {
                let mut key = [v[f[0]], v[f[1]], v[f[2]]];
                key.sort_unstable();
                faces.insert(key);
                let nb = tet.n[s];
                if nb == INVALID_TET {
                    return Err(format!("tet {i} slot {s} unwired"));
                }
                if !self.alive[nb as usize] {
                    return Err(format!("tet {i} slot {s} points at dead tet {nb}"));
                }
                let nv = self.tets[nb as usize].v;
                let shared: Vec<VertexId> =
                    nv.iter().copied().filter(|x| key.contains(x)).collect();
                if shared.len() != 3 {
                    return Err(format!("tets {i} and {nb} do not share a face"));
                }
                let back = (0..4).find(|&j| self.tets[nb as usize].n[j] == i as TetId);
                if back.is_none() {
                    return Err(format!("neighbor relation {i} -> {nb} not mutual"));
                }
            }
            if v[3] == GHOST {
                // Hull face must be wound counterclockwise from outside:
                // the apex of the finite neighbor across slot 3 sees it
                // clockwise.
                let fin = tet.n[3];
                let fv = self.tets[fin as usize].v;
                let apex = *fv
                    .iter()
                    .find(|x| !v[..3].contains(x))
                    .ok_or_else(|| format!("ghost {i} neighbor is degenerate"))?;
                if orient3d(&ip, v[0], v[1], v[2], apex) {
                    return Err(format!("ghost tet {i} hull face wound inward"));
                }
            } else if !orient3d(&ip, v[0], v[1], v[2], v[3]) {
                return Err(format!("tet {i} negatively oriented"));
            }
        }
        for (v, &inc) in self.incident.iter().enumerate() {
            if inc == INVALID_TET || !self.alive[inc as usize] {
                return Err(format!("vertex {v} incidence dead"));
            }
            if !self.tets[inc as usize].v.contains(&(v as VertexId)) {
                return Err(format!("vertex {v} not in its incident tet"));
            }
        }
        // Compactified complex is a triangulated 3-sphere:
        // V - E + F - T = 0.
        let v_count = self.positions.len() as i64 + 1;
        let euler = v_count - edges.len() as i64 + faces.len() as i64 - n_tets as i64;
        if euler != 0 {
            return Err(format!("Euler characteristic {euler}, expected 0"));
        }
        Ok(())
    }

    /// Brute-force Delaunay audit: counts (tet, vertex) pairs where a live
    /// finite tet's circumball strictly contains a non-member vertex under
    /// the perturbed predicate. Quadratic; test use only.
    pub fn delaunay_violations(&self) -> usize {
        let ip = IndexedPoints::new(&self.positions);
        let mut bad = 0;
        for (_, v) in self.finite_tets() {
            for w in 0..self.positions.len() as VertexId {
                if v.contains(&w) {
                    continue;
                }
                if in_sphere(&ip, v[0], v[1], v[2], v[3], w) {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// Sorted canonical tet list for connectivity comparison.
    pub fn canonical_tets(&self) -> Vec<[VertexId; 4]> {
        let mut out: Vec<[VertexId; 4]> = self
            .finite_tets()
            .map(|(_, mut v)| {
                v.sort_unstable();
                v
            })
            .collect();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                vec3(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn bootstrap_is_one_tet_plus_ghosts() {
        let pts = [
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ];
        let s = Scaffold::from_points(&pts, 7);
        assert_eq!(s.tet_count(), 1);
        s.validate().unwrap();
        assert_eq!(s.mean_vertex_degree(), 3.0);
    }

    #[test]
    fn interior_insertion_splits_into_four() {
        let pts = [
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        ];
        let mut s = Scaffold::from_points(&pts, 7);
        let r = s.insert_vertex(vec3(0.2, 0.2, 0.2), None).unwrap();
        assert_eq!(r, Insertion::New(4));
        assert_eq!(s.tet_count(), 4);
        s.validate().unwrap();
    }

    #[test]
    fn duplicate_is_reported_and_harmless() {
        let pts = random_points(50, 3);
        let mut s = Scaffold::from_points(&pts, 3);
        s.validate().unwrap();
        let before = s.canonical_tets();
        let r = s.insert_vertex(pts[17], Some(30)).unwrap();
        assert_eq!(r, Insertion::Duplicate(17));
        // Within tolerance, not only bit-equal.
        let nudged = pts[23] + vec3(2e-13, -3e-13, 1e-13);
        let r = s.insert_vertex(nudged, None).unwrap();
        assert_eq!(r, Insertion::Duplicate(23));
        assert_eq!(s.canonical_tets(), before);
        assert_eq!(s.vertex_count(), 50);
    }

    #[test]
    fn outside_hull_is_refused() {
        let pts = random_points(30, 4);
        let mut s = Scaffold::from_points(&pts, 4);
        let err = s.insert_vertex(vec3(50.0, 0.0, 0.0), None);
        assert!(matches!(err, Err(ScaffoldError::OutsideHull)));
        s.validate().unwrap();
    }

    #[test]
    fn random_insertions_stay_delaunay() {
        let pts = random_points(300, 11);
        let s = Scaffold::from_points(&pts, 11);
        s.validate().unwrap();
        assert_eq!(s.delaunay_violations(), 0);
    }

    #[test]
    fn lattice_degeneracies_are_survivable() {
        // 5^3 grid: heaps of cospherical and coplanar subsets; everything
        // rides on the symbolic perturbation.
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    pts.push(vec3(f64::from(i), f64::from(j), f64::from(k)));
                }
            }
        }
        let s = Scaffold::from_points(&pts, 2);
        s.validate().unwrap();
        assert_eq!(s.delaunay_violations(), 0);
        assert_eq!(s.vertex_count(), 125);
    }

    #[test]
    fn insertion_order_does_not_change_connectivity() {
        // The perturbed Delaunay triangulation is unique for a fixed index
        // assignment, so two builds inserting identical points in identical
        // order must agree exactly, regardless of walk randomness.
        let pts = random_points(200, 21);
        let a = Scaffold::from_points(&pts, 1);
        let b = Scaffold::from_points(&pts, 999);
        assert_eq!(a.canonical_tets(), b.canonical_tets());
    }

    #[test]
    fn build_initial_pins_corners_and_domain() {
        let domain = Aabb::unit();
        let pts = random_points(500, 8);
        let s = Scaffold::build_initial(domain, &pts, 8);
        assert_eq!(s.corner_ids(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(s.vertex_count(), 508);
        for &c in s.corner_ids() {
            assert_eq!(s.position(c).to_array().map(f64::abs), [1.5, 1.5, 1.5]);
        }
        s.validate().unwrap();
        assert_eq!(s.delaunay_violations(), 0);
    }

    #[test]
    fn poisson_scaffold_degree_is_near_constant() {
        let domain = Aabb::unit();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts = crate::poisson::sample_poisson(domain, 4000, &mut rng);
        let s = Scaffold::build_initial(domain, &pts, 77);
        let d = s.mean_vertex_degree();
        assert!((14.0..=17.0).contains(&d), "mean degree {d}");
    }

    #[test]
    fn crossing_edges_split_by_sphere_label() {
        let domain = Aabb::unit();
        let pts = random_points(800, 13);
        let mut s = Scaffold::build_initial(domain, &pts, 13);
        for v in 0..s.vertex_count() as VertexId {
            let inside = s.position(v).length() < 0.6;
            s.set_label(v, if inside { Label::Inside } else { Label::Outside });
        }
        let edges = s.crossing_edges().unwrap();
        assert!(!edges.is_empty());
        for e in &edges {
            assert_eq!(s.label(e.inside), Some(Label::Inside));
            assert_eq!(s.label(e.outside), Some(Label::Outside));
            assert!(e.length > 0.0);
            // Crossing edges straddle the sphere radially.
            assert!(s.position(e.inside).length() < 0.6);
            assert!(s.position(e.outside).length() >= 0.6);
        }
    }

    #[test]
    fn new_crossing_edges_memoizes() {
        let domain = Aabb::unit();
        let pts = random_points(400, 17);
        let mut s = Scaffold::build_initial(domain, &pts, 17);
        for v in 0..s.vertex_count() as VertexId {
            let inside = s.position(v).length() < 0.5;
            s.set_label(v, if inside { Label::Inside } else { Label::Outside });
        }
        let first = s.new_crossing_edges().unwrap();
        assert_eq!(first.len(), s.crossing_edges().unwrap().len());
        assert!(s.new_crossing_edges().unwrap().is_empty());
        // Split one crossing edge; only freshly created crossing edges may
        // come back.
        let e = first[0];
        let mid = s.position(e.inside).lerp(s.position(e.outside), 0.5);
        let v = match s.insert_vertex(mid, Some(e.inside)).unwrap() {
            Insertion::New(v) => v,
            Insertion::Duplicate(_) => panic!("midpoint duplicated a vertex"),
        };
        s.set_label(v, Label::Inside);
        let fresh = s.new_crossing_edges().unwrap();
        assert!(!fresh.is_empty());
        for f in &fresh {
            assert!(
                f.inside == v || f.outside == v || !first.iter().any(|o| o.key() == f.key()),
                "edge {:?} was already examined",
                f.key()
            );
        }
    }

    #[test]
    fn unlabeled_vertex_is_an_error() {
        let pts = random_points(40, 5);
        let mut s = Scaffold::from_points(&pts, 5);
        for v in 0..39 {
            s.set_label(v, Label::Outside);
        }
        assert!(matches!(
            s.crossing_edges(),
            Err(ScaffoldError::UnlabeledVertex(39))
        ));
    }

    #[test]
    fn dump_lists_everything() {
        let pts = random_points(20, 6);
        let s = Scaffold::from_points(&pts, 6);
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("verts 20\n"));
        assert!(text.contains(&format!("tets {}\n", s.tet_count())));
        assert_eq!(text.lines().count(), 22 + s.tet_count());
    }

    #[test]
    fn hint_quality_does_not_affect_result() {
        let pts = random_points(150, 31);
        let mut a = Scaffold::from_points(&pts, 31);
        let mut b = Scaffold::from_points(&pts, 31);
        let p = vec3(0.123, -0.456, 0.789);
        let ra = a.insert_vertex(p, Some(0)).unwrap();
        let rb = b.insert_vertex(p, Some(149)).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.canonical_tets(), b.canonical_tets());
    }
}
