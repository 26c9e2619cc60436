//! The sampling pipeline.
//!
//! Four phases, each feeding the next:
//!
//! 1. Initialization: Poisson-disc points plus scaled domain corners form
//!    the first Delaunay scaffold; one batched query labels every vertex.
//! 2. Edge refinement: crossing edges longer than tau are split, with a
//!    barrier test steering split points away from the surface, until no
//!    long crossing edge remains.
//! 3. Search and extraction: fixed-round batched bisection locates one
//!    crossing point per crossing edge; marching tetrahedra connects them.
//! 4. Mesh-guided refinement: where extracted normals diverge across a mesh
//!    edge, the two source tets get extra scaffold vertices, then phases 2
//!    and 3 rerun.
//!
//! Every occupancy query is accounted for in [`RunStats`]; the breakdown
//! sums exactly to the field's own counter. All randomness flows from the
//! config seed, so a (field, config) pair fully determines the output.

mod extract;

pub(crate) use extract::vertex_normals;

use crate::field::{Label, OccupancyField};
use crate::geom::{triangle_circumcenter, Vec3};
use crate::mesh::SurfaceMesh;
use crate::poisson::sample_poisson;
use crate::scaffold::{CrossingEdge, Insertion, Scaffold, ScaffoldError, TetId, VertexId, OUTWARD_FACE};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdsConfig {
    /// Crossing-edge length threshold; the resolution knob.
    pub tau: f64,
    /// Poisson-disc points seeding the scaffold (domain corners come extra).
    pub initial_points: usize,
    /// Bisection bracket target; defaults to tau/32.
    pub search_tolerance: Option<f64>,
    /// Probe around midpoints before inserting them.
    pub barrier: bool,
    /// Probe offset as a fraction of edge length, in (0, 0.5).
    pub barrier_offset_fraction: f64,
    /// Normal divergence (degrees) that flags a mesh edge for refinement.
    pub normal_angle_threshold: f64,
    /// Mesh edges shorter than this are never flagged; defaults to tau/2.
    pub mesh_edge_min_length: Option<f64>,
    /// Tets with any edge shorter than this are not refined; defaults to
    /// tau/2.
    pub tet_edge_min_length: Option<f64>,
    /// Mesh-guided refinement rounds.
    pub refinement_rounds: usize,
    /// Safety cap on edge-refinement iterations.
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for AdsConfig {
    fn default() -> Self {
        AdsConfig {
            tau: 0.03,
            initial_points: 10_000,
            search_tolerance: None,
            barrier: true,
            barrier_offset_fraction: 0.05,
            normal_angle_threshold: 30.0,
            mesh_edge_min_length: None,
            tet_edge_min_length: None,
            refinement_rounds: 1,
            max_iterations: 40,
            seed: 0,
        }
    }
}

impl AdsConfig {
    pub fn new(tau: f64) -> Self {
        AdsConfig { tau, ..Default::default() }
    }

    pub fn search_tolerance(&self) -> f64 {
        self.search_tolerance.unwrap_or(self.tau / 32.0)
    }

    pub fn mesh_edge_min_length(&self) -> f64 {
        self.mesh_edge_min_length.unwrap_or(self.tau / 2.0)
    }

    pub fn tet_edge_min_length(&self) -> f64 {
        self.tet_edge_min_length.unwrap_or(self.tau / 2.0)
    }

    /// Bisection rounds per crossing edge: enough halvings to bring a
    /// bracket of length tau under the tolerance.
    pub fn bisection_rounds(&self) -> u32 {
        let ratio = self.tau / self.search_tolerance();
        (ratio.log2().ceil() as u32).max(1)
    }

    // Negated comparisons are intentional: they reject NaN along with
    // out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: &str| Err(PipelineError::Config(m.to_string()));
        if !(self.tau > 0.0) {
            return fail("tau must be positive");
        }
        if !(self.search_tolerance() > 0.0) {
            return fail("search_tolerance must be positive");
        }
        if self.search_tolerance() >= self.tau {
            return fail("search_tolerance must be smaller than tau");
        }
        if !(self.barrier_offset_fraction > 0.0 && self.barrier_offset_fraction < 0.5) {
            return fail("barrier_offset_fraction must lie in (0, 0.5)");
        }
        if !(self.normal_angle_threshold > 0.0) {
            return fail("normal_angle_threshold must be positive");
        }
        if !(self.mesh_edge_min_length() > 0.0) || !(self.tet_edge_min_length() > 0.0) {
            return fail("refinement length thresholds must be positive");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
}

/// Output surface samples. `points[i]` lies on crossing edge
/// `source_edges[i]` (scaffold vertex indices, sorted). Normals are filled
/// from the extracted mesh and are zero only for pathologically cancelling
/// fans.
#[derive(Clone, Debug, Default)]
pub struct SampleSet {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
    pub source_edges: Vec<(VertexId, VertexId)>,
}

/// One edge-refinement iteration. Index 0 is the post-initialization state
/// (no wave work, counts only).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterationRecord {
    pub index: usize,
    /// All crossing edges in the scaffold after this iteration.
    pub crossing_edges: usize,
    pub mean_crossing_length: f64,
    /// Crossing edges longer than tau processed this iteration.
    pub long_edges_processed: usize,
    pub vertices_inserted: usize,
    /// Insertions displaced to the 1/3 point by the barrier test.
    pub third_rule_inserts: usize,
    pub duplicates_skipped: usize,
    pub cumulative_evals: u64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RefinementRecord {
    pub round: usize,
    pub flagged_edges: usize,
    pub degenerate_edges: usize,
    pub refined_tets: usize,
    pub vertices_inserted: usize,
    pub duplicates_skipped: usize,
    pub outside_hull_skipped: usize,
    pub cumulative_evals: u64,
}

/// Where every occupancy query went. Sums exactly to the field counter.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct EvalBreakdown {
    /// One per scaffold vertex at initialization.
    pub initial_labels: u64,
    /// Midpoint and barrier probes during edge refinement.
    pub probe_evals: u64,
    /// Labels for inserted vertices not covered by a probe.
    pub insert_label_evals: u64,
    /// Fixed-round bisection during crossing-point search.
    pub bisection_evals: u64,
    /// Labels for vertices added by mesh-guided refinement.
    pub refinement_label_evals: u64,
}

impl EvalBreakdown {
    pub fn total(&self) -> u64 {
        self.initial_labels
            + self.probe_evals
            + self.insert_label_evals
            + self.bisection_evals
            + self.refinement_label_evals
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Totals {
    pub samples: usize,
    pub triangles: usize,
    pub scaffold_vertices: usize,
    pub evaluations: u64,
    /// 0 when the sample set is empty.
    pub evals_per_sample: f64,
    pub iterations: usize,
    /// True when max_iterations stopped refinement with long crossing edges
    /// left; the result is usable but under-resolved.
    pub capped: bool,
}

/// Wall-clock milliseconds. Quarantined in one subtree so that everything
/// else in the stats is bit-reproducible.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub initialization_ms: f64,
    pub edge_refinement_ms: f64,
    pub search_ms: f64,
    pub extraction_ms: f64,
    pub mesh_refinement_ms: f64,
    pub total_ms: f64,
}

/// Thresholds as actually used after defaulting.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResolvedConfig {
    pub search_tolerance: f64,
    pub mesh_edge_min_length: f64,
    pub tet_edge_min_length: f64,
    pub bisection_rounds: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub config: AdsConfig,
    pub resolved: ResolvedConfig,
    pub iterations: Vec<IterationRecord>,
    pub refinement: Vec<RefinementRecord>,
    pub evals: EvalBreakdown,
    pub totals: Totals,
    pub timings_ms: Timings,
}

pub struct RunOutput {
    pub samples: SampleSet,
    pub mesh: SurfaceMesh,
    pub stats: RunStats,
    pub scaffold: Scaffold,
}

/// Midpoint-or-third decision for one long crossing edge, from the three
/// probe labels. Geometry is always computed inside-to-outside so results
/// do not depend on traversal order.
enum SplitChoice {
    /// Insert the midpoint; its label is already known from the probe.
    Mid(Vec3, Label),
    /// Barrier tripped: insert 1/3 along the edge from the endpoint nearer
    /// the surface. Label unknown unless the position was probed.
    Third(Vec3),
}

fn choose_split(
    p_in: Vec3,
    p_out: Vec3,
    mid: Vec3,
    probe_left: Label,
    probe_mid: Label,
    probe_right: Label,
) -> SplitChoice {
    if probe_left == probe_right {
        return SplitChoice::Mid(mid, probe_mid);
    }
    // The endpoint on the opposite side from the midpoint is the one the
    // surface is about to cut off; step 1/3 of the way in from it.
    let (near, far) = if probe_mid.is_inside() {
        (p_out, p_in)
    } else {
        (p_in, p_out)
    };
    SplitChoice::Third(near.lerp(far, 1.0 / 3.0))
}

fn position_bits(p: Vec3) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Average incident face normals of both endpoints of mesh edge (u, v),
/// excluding faces shared by the two. None when an endpoint has nothing
/// left to average (or the leftovers cancel).
pub fn estimate_edge_normals(mesh: &SurfaceMesh, u: u32, v: u32) -> Option<(Vec3, Vec3)> {
    let mut faces_u = Vec::new();
    let mut faces_v = Vec::new();
    for (f, t) in mesh.triangles.iter().enumerate() {
        let has_u = t.contains(&u);
        let has_v = t.contains(&v);
        if has_u && has_v {
            continue;
        }
        if has_u {
            faces_u.push(f);
        }
        if has_v {
            faces_v.push(f);
        }
    }
    let average = |faces: &[usize]| -> Option<Vec3> {
        let sum = faces
            .iter()
            .fold(Vec3::default(), |a, &f| a + mesh.face_normal(f));
        (sum.length_squared() > 1e-24).then(|| sum.normalized())
    };
    Some((average(&faces_u)?, average(&faces_v)?))
}

#[derive(Clone, Copy, Debug)]
pub struct FlaggedEdge {
    pub a: u32,
    pub b: u32,
    /// Source tets of the two faces attached to the edge; equal when both
    /// faces come from one 2/2 tet.
    pub source_tets: [TetId; 2],
}

#[derive(Clone, Debug, Default)]
pub struct FlagReport {
    pub flagged: Vec<FlaggedEdge>,
    pub degenerate_edges: usize,
}

/// Mesh edges whose endpoint normals diverge more than the threshold, gated
/// by the two length criteria. Deterministic order (sorted edge keys).
pub fn flag_refinement_edges(
    mesh: &SurfaceMesh,
    scaffold: &Scaffold,
    config: &AdsConfig,
) -> FlagReport {
    let mut report = FlagReport::default();
    let angle_limit = config.normal_angle_threshold.to_radians();
    let edge_min = config.mesh_edge_min_length();
    let tet_min_sq = {
        let t = config.tet_edge_min_length();
        t * t
    };

    // Vertex->faces adjacency once; per-edge exclusion below stays local.
    let mut vertex_faces: Vec<Vec<u32>> = vec![Vec::new(); mesh.vertices.len()];
    for (f, t) in mesh.triangles.iter().enumerate() {
        for &w in t {
            vertex_faces[w as usize].push(f as u32);
        }
    }
    let tet_edges_long = |t: TetId| -> bool {
        let vs = scaffold.tet_vertices(t);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d = scaffold
                    .position(vs[i])
                    .distance_squared(scaffold.position(vs[j]));
                if d <= tet_min_sq {
                    return false;
                }
            }
        }
        true
    };

    for ((u, v), faces) in mesh.edge_faces() {
        if faces.len() != 2 {
            continue;
        }
        if mesh.vertices[u as usize].distance(mesh.vertices[v as usize]) <= edge_min {
            continue;
        }
        let shared = &faces;
        let average = |w: u32| -> Option<Vec3> {
            let sum = vertex_faces[w as usize]
                .iter()
                .filter(|f| !shared.contains(f))
                .fold(Vec3::default(), |a, &f| a + mesh.face_normal(f as usize));
            (sum.length_squared() > 1e-24).then(|| sum.normalized())
        };
        let (Some(nu), Some(nv)) = (average(u), average(v)) else {
            report.degenerate_edges += 1;
            continue;
        };
        let angle = nu.dot(nv).clamp(-1.0, 1.0).acos();
        if angle <= angle_limit {
            continue;
        }
        let source_tets = [
            mesh.source_tets[faces[0] as usize],
            mesh.source_tets[faces[1] as usize],
        ];
        if !tet_edges_long(source_tets[0]) || !tet_edges_long(source_tets[1]) {
            continue;
        }
        report.flagged.push(FlaggedEdge { a: u, b: v, source_tets });
    }
    report
}

/// Refinement targets for one crossing tet: the circumcenter of its
/// single-sign face (3 or 1 crossing-edge pattern aside), or the midpoints
/// of its uniform inside and outside edges (2/2 pattern).
fn tet_refinement_points(scaffold: &Scaffold, tet: TetId) -> Vec<Vec3> {
    let vs = scaffold.tet_vertices(tet);
    let labels = vs.map(|v| scaffold.label(v).expect("labeled scaffold"));
    let inside: Vec<usize> = (0..4).filter(|&i| labels[i].is_inside()).collect();
    match inside.len() {
        1 | 3 => {
            let minority = if inside.len() == 1 {
                inside[0]
            } else {
                (0..4).find(|i| !labels[*i].is_inside()).unwrap()
            };
            let [a, b, c] = OUTWARD_FACE[minority];
            vec![triangle_circumcenter(
                scaffold.position(vs[a]),
                scaffold.position(vs[b]),
                scaffold.position(vs[c]),
            )]
        }
        2 => {
            let (a, b) = (inside[0], inside[1]);
            let outside: Vec<usize> = (0..4).filter(|i| !inside.contains(i)).collect();
            let (c, d) = (outside[0], outside[1]);
            let mid = |i: usize, j: usize| {
                (scaffold.position(vs[i]) + scaffold.position(vs[j])) * 0.5
            };
            vec![mid(a, b), mid(c, d)]
        }
        // A source tet always crosses; tolerate anything else quietly.
        _ => Vec::new(),
    }
}

/// Crossing edges are identified by their sorted endpoint pair.
type EdgeKey = (VertexId, VertexId);

struct Driver<'f> {
    field: &'f dyn OccupancyField,
    config: AdsConfig,
    scaffold: Scaffold,
    /// Located crossing points by edge key; survives re-extraction so only
    /// new edges are ever bisected.
    located: HashMap<EdgeKey, Vec3>,
    iterations: Vec<IterationRecord>,
    refinement: Vec<RefinementRecord>,
    evals: EvalBreakdown,
    capped: bool,
    timings: Timings,
}

pub fn run(field: &dyn OccupancyField, config: &AdsConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let total_clock = Instant::now();

    // Phase 1: initialization.
    let clock = Instant::now();
    let domain = field.domain();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let seeds = sample_poisson(domain, config.initial_points, &mut rng);
    let mut scaffold = Scaffold::build_initial(domain, &seeds, config.seed);
    let labels = field.classify_batch(scaffold.positions());
    for (i, label) in labels.into_iter().enumerate() {
        scaffold.set_label(i as VertexId, label);
    }
    let mut driver = Driver {
        field,
        config: config.clone(),
        scaffold,
        located: HashMap::new(),
        iterations: Vec::new(),
        refinement: Vec::new(),
        evals: EvalBreakdown::default(),
        capped: false,
        timings: Timings::default(),
    };
    driver.evals.initial_labels = driver.scaffold.vertex_count() as u64;
    driver.record_iteration(0, 0, 0, 0)?;
    driver.timings.initialization_ms = clock.elapsed().as_secs_f64() * 1e3;

    // Phase 2: edge refinement.
    let clock = Instant::now();
    driver.refine_edges()?;
    driver.timings.edge_refinement_ms = clock.elapsed().as_secs_f64() * 1e3;

    // Phase 3: search and extraction.
    let clock = Instant::now();
    let (mut samples, mut index) = driver.locate_crossing_points()?;
    driver.timings.search_ms = clock.elapsed().as_secs_f64() * 1e3;
    let clock = Instant::now();
    let mut mesh = extract::extract_surface(&driver.scaffold, &index, &samples.points);
    driver.timings.extraction_ms = clock.elapsed().as_secs_f64() * 1e3;

    // Phase 4: mesh-guided refinement rounds.
    for round in 0..config.refinement_rounds {
        let c = Instant::now();
        let progressed = driver.refine_round(round, &mesh)?;
        driver.timings.mesh_refinement_ms += c.elapsed().as_secs_f64() * 1e3;
        if !progressed {
            break;
        }
        let c = Instant::now();
        driver.refine_edges()?;
        driver.timings.edge_refinement_ms += c.elapsed().as_secs_f64() * 1e3;
        let c = Instant::now();
        (samples, index) = driver.locate_crossing_points()?;
        driver.timings.search_ms += c.elapsed().as_secs_f64() * 1e3;
        let c = Instant::now();
        mesh = extract::extract_surface(&driver.scaffold, &index, &samples.points);
        driver.timings.extraction_ms += c.elapsed().as_secs_f64() * 1e3;
    }
    samples.normals = Some(extract::vertex_normals(&mesh));

    driver.timings.total_ms = total_clock.elapsed().as_secs_f64() * 1e3;
    let evals = driver.evals;
    let totals = Totals {
        samples: samples.points.len(),
        triangles: mesh.triangles.len(),
        scaffold_vertices: driver.scaffold.vertex_count(),
        evaluations: evals.total(),
        evals_per_sample: if samples.points.is_empty() {
            0.0
        } else {
            evals.total() as f64 / samples.points.len() as f64
        },
        iterations: driver.iterations.len().saturating_sub(1),
        capped: driver.capped,
    };
    let stats = RunStats {
        config: config.clone(),
        resolved: ResolvedConfig {
            search_tolerance: config.search_tolerance(),
            mesh_edge_min_length: config.mesh_edge_min_length(),
            tet_edge_min_length: config.tet_edge_min_length(),
            bisection_rounds: config.bisection_rounds(),
        },
        iterations: driver.iterations,
        refinement: driver.refinement,
        evals,
        totals,
        timings_ms: driver.timings,
    };
    Ok(RunOutput { samples, mesh, stats, scaffold: driver.scaffold })
}

impl Driver<'_> {
    fn record_iteration(
        &mut self,
        long_edges: usize,
        inserted: usize,
        thirds: usize,
        duplicates: usize,
    ) -> Result<(), PipelineError> {
        let crossing = self.scaffold.crossing_edges()?;
        let mean = if crossing.is_empty() {
            0.0
        } else {
            crossing.iter().map(|e| e.length).sum::<f64>() / crossing.len() as f64
        };
        self.iterations.push(IterationRecord {
            index: self.iterations.len(),
            crossing_edges: crossing.len(),
            mean_crossing_length: mean,
            long_edges_processed: long_edges,
            vertices_inserted: inserted,
            third_rule_inserts: thirds,
            duplicates_skipped: duplicates,
            cumulative_evals: self.evals.total(),
        });
        Ok(())
    }

    /// Split long crossing edges until none remain or the cap hits.
    fn refine_edges(&mut self) -> Result<(), PipelineError> {
        let tau = self.config.tau;
        let delta = self.config.barrier_offset_fraction;
        let mut iterations_done = 0usize;
        loop {
            let wave: Vec<CrossingEdge> = self
                .scaffold
                .new_crossing_edges()?
                .into_iter()
                .filter(|e| e.length > tau)
                .collect();
            if wave.is_empty() {
                break;
            }
            if iterations_done >= self.config.max_iterations {
                // Give up on this wave; the remaining long edges still get
                // sampled, just coarser than requested.
                self.capped = true;
                break;
            }
            iterations_done += 1;

            // One batched query covers every midpoint and barrier probe.
            let mut probes = Vec::with_capacity(wave.len() * if self.config.barrier { 3 } else { 1 });
            for e in &wave {
                let p_in = self.scaffold.position(e.inside);
                let p_out = self.scaffold.position(e.outside);
                if self.config.barrier {
                    probes.push(p_in.lerp(p_out, 0.5 - delta));
                    probes.push(p_in.lerp(p_out, 0.5));
                    probes.push(p_in.lerp(p_out, 0.5 + delta));
                } else {
                    probes.push(p_in.lerp(p_out, 0.5));
                }
            }
            let probe_labels = self.field.classify_batch(&probes);
            self.evals.probe_evals += probes.len() as u64;
            let probed: HashMap<[u64; 3], Label> = probes
                .iter()
                .zip(&probe_labels)
                .map(|(p, l)| (position_bits(*p), *l))
                .collect();

            // Decide one insertion per edge, dedup identical targets.
            struct Pending {
                p: Vec3,
                hint: VertexId,
                label: Option<Label>,
                third: bool,
            }
            let mut pending: Vec<Pending> = Vec::with_capacity(wave.len());
            let mut seen = HashSet::new();
            for (i, e) in wave.iter().enumerate() {
                let p_in = self.scaffold.position(e.inside);
                let p_out = self.scaffold.position(e.outside);
                let choice = if self.config.barrier {
                    choose_split(
                        p_in,
                        p_out,
                        probes[3 * i + 1],
                        probe_labels[3 * i],
                        probe_labels[3 * i + 1],
                        probe_labels[3 * i + 2],
                    )
                } else {
                    SplitChoice::Mid(probes[i], probe_labels[i])
                };
                let (p, label, third) = match choice {
                    SplitChoice::Mid(p, l) => (p, Some(l), false),
                    SplitChoice::Third(p) => (p, probed.get(&position_bits(p)).copied(), true),
                };
                if seen.insert(position_bits(p)) {
                    pending.push(Pending { p, hint: e.inside, label, third });
                }
            }

            // Insert everything, then label the holdouts in one batch.
            let mut inserted = 0usize;
            let mut thirds = 0usize;
            let mut duplicates = 0usize;
            let mut unlabeled_ids = Vec::new();
            let mut unlabeled_pts = Vec::new();
            for pend in pending {
                match self.scaffold.insert_vertex(pend.p, Some(pend.hint)) {
                    Ok(Insertion::New(v)) => {
                        inserted += 1;
                        thirds += usize::from(pend.third);
                        match pend.label {
                            Some(l) => self.scaffold.set_label(v, l),
                            None => {
                                unlabeled_ids.push(v);
                                unlabeled_pts.push(pend.p);
                            }
                        }
                    }
                    Ok(Insertion::Duplicate(_)) => duplicates += 1,
                    // Split points lie on existing edges, strictly inside
                    // the hull; refusal would indicate a scaffold bug.
                    Err(e) => return Err(e.into()),
                }
            }
            let labels = self.field.classify_batch(&unlabeled_pts);
            self.evals.insert_label_evals += unlabeled_pts.len() as u64;
            for (v, l) in unlabeled_ids.into_iter().zip(labels) {
                self.scaffold.set_label(v, l);
            }
            self.record_iteration(wave.len(), inserted, thirds, duplicates)?;
        }
        Ok(())
    }

    /// Bisect every crossing edge not already located; return all samples
    /// sorted by edge key plus the key-to-index map extraction uses.
    fn locate_crossing_points(
        &mut self,
    ) -> Result<(SampleSet, HashMap<EdgeKey, u32>), PipelineError> {
        let mut crossing = self.scaffold.crossing_edges()?;
        crossing.sort_unstable_by_key(CrossingEdge::key);

        let fresh: Vec<&CrossingEdge> = crossing
            .iter()
            .filter(|e| !self.located.contains_key(&e.key()))
            .collect();
        let rounds = self.config.bisection_rounds();
        // Brackets run inside to outside so every midpoint update keeps one
        // endpoint of each sign.
        let mut lo: Vec<Vec3> = fresh.iter().map(|e| self.scaffold.position(e.inside)).collect();
        let mut hi: Vec<Vec3> = fresh.iter().map(|e| self.scaffold.position(e.outside)).collect();
        let mut mids = vec![Vec3::default(); fresh.len()];
        for _ in 0..rounds {
            for i in 0..fresh.len() {
                mids[i] = lo[i].lerp(hi[i], 0.5);
            }
            let labels = self.field.classify_batch(&mids);
            self.evals.bisection_evals += mids.len() as u64;
            for i in 0..fresh.len() {
                if labels[i].is_inside() {
                    lo[i] = mids[i];
                } else {
                    hi[i] = mids[i];
                }
            }
        }
        for (i, e) in fresh.iter().enumerate() {
            self.located.insert(e.key(), lo[i].lerp(hi[i], 0.5));
        }

        let mut samples = SampleSet::default();
        let mut index = HashMap::with_capacity(crossing.len());
        for e in &crossing {
            let key = e.key();
            index.insert(key, samples.points.len() as u32);
            samples.points.push(self.located[&key]);
            samples.source_edges.push(key);
        }
        Ok((samples, index))
    }

    /// Flag diverging mesh edges and densify their source tets. Returns
    /// false when nothing was flagged (the mesh is already settled).
    fn refine_round(&mut self, round: usize, mesh: &SurfaceMesh) -> Result<bool, PipelineError> {
        let report = flag_refinement_edges(mesh, &self.scaffold, &self.config);

        // One refinement action per tet however many edges flagged it.
        let mut tets = Vec::new();
        let mut seen_tets = HashSet::new();
        for e in &report.flagged {
            for t in e.source_tets {
                if seen_tets.insert(t) {
                    tets.push(t);
                }
            }
        }
        let mut pending: Vec<(Vec3, VertexId)> = Vec::new();
        let mut seen_pts = HashSet::new();
        for &t in &tets {
            let hint = self.scaffold.tet_vertices(t)[0];
            for p in tet_refinement_points(&self.scaffold, t) {
                if seen_pts.insert(position_bits(p)) {
                    pending.push((p, hint));
                }
            }
        }

        let mut inserted_ids = Vec::new();
        let mut inserted_pts = Vec::new();
        let mut duplicates = 0usize;
        let mut outside = 0usize;
        for (p, hint) in pending {
            match self.scaffold.insert_vertex(p, Some(hint)) {
                Ok(Insertion::New(v)) => {
                    inserted_ids.push(v);
                    inserted_pts.push(p);
                }
                Ok(Insertion::Duplicate(_)) => duplicates += 1,
                // Circumcenters of nearly collinear faces can land
                // anywhere; skipping them loses nothing but one probe site.
                Err(ScaffoldError::OutsideHull) => outside += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let labels = self.field.classify_batch(&inserted_pts);
        self.evals.refinement_label_evals += inserted_pts.len() as u64;
        for (v, l) in inserted_ids.iter().zip(labels) {
            self.scaffold.set_label(*v, l);
        }
        self.refinement.push(RefinementRecord {
            round,
            flagged_edges: report.flagged.len(),
            degenerate_edges: report.degenerate_edges,
            refined_tets: tets.len(),
            vertices_inserted: inserted_ids.len(),
            duplicates_skipped: duplicates,
            outside_hull_skipped: outside,
            cumulative_evals: self.evals.total(),
        });
        Ok(!report.flagged.is_empty())
    }
}
