//! Accuracy and efficiency metrics: chamfer distance against a reference
//! cloud, per-iteration run reports, and the method comparison table.

use crate::baselines::{match_accuracy, BaselineKind, TunedRun};
use crate::field::{AnalyticField, FieldError, OccupancyField};
use crate::geom::Vec3;
use crate::pipeline::{run, AdsConfig, PipelineError, RunStats};
use crate::spatial::GridIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

/// Reference points for fields with a closed-form surface.
pub const ANALYTIC_REFERENCE_POINTS: usize = 100_000;
/// Reference points drawn area-weighted from a triangle soup.
pub const MESH_REFERENCE_POINTS: usize = 500_000;

/// Symmetric mean nearest-neighbor distance:
/// 0.5 * (mean over a of NN distance to b + mean over b of NN distance to a).
/// Tables report it multiplied by 1000. Not a metric (no triangle
/// inequality), but symmetric by construction. Panics on empty input.
pub fn chamfer_l1(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "chamfer needs two non-empty sets");
    let mean_nn = |from: &[Vec3], to: &GridIndex| -> f64 {
        // Collect keeps query order, so the sum is reduction-order stable.
        let dists: Vec<f64> = from
            .par_iter()
            .map(|p| to.nearest(*p, None).expect("index has active points").1)
            .collect();
        dists.iter().sum::<f64>() / from.len() as f64
    };
    let index_a = GridIndex::new(a);
    let index_b = GridIndex::new(b);
    0.5 * (mean_nn(a, &index_b) + mean_nn(b, &index_a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ReferenceSource {
    AnalyticClosedForm,
    MeshAreaWeighted,
    ExternalFile,
}

/// Dense ground-truth surface samples all chamfer numbers are measured
/// against. Keep it roughly 10x denser than anything evaluated with it;
/// the reference's own spacing is a floor on every reported chamfer.
pub struct ReferenceCloud {
    pub points: Vec<Vec3>,
    pub source: ReferenceSource,
}

impl ReferenceCloud {
    pub fn analytic(field: &AnalyticField, seed: u64) -> Result<Self, FieldError> {
        Self::analytic_sized(field, ANALYTIC_REFERENCE_POINTS, seed)
    }

    pub fn analytic_sized(
        field: &AnalyticField,
        count: usize,
        seed: u64,
    ) -> Result<Self, FieldError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(ReferenceCloud {
            points: field.sample_surface(count, &mut rng)?,
            source: ReferenceSource::AnalyticClosedForm,
        })
    }

    pub fn mesh(vertices: &[Vec3], triangles: &[[u32; 3]], seed: u64) -> Self {
        Self::mesh_sized(vertices, triangles, MESH_REFERENCE_POINTS, seed)
    }

    /// Area-weighted triangle sampling: pick a triangle proportionally to
    /// its area, then a uniform barycentric point.
    pub fn mesh_sized(
        vertices: &[Vec3],
        triangles: &[[u32; 3]],
        count: usize,
        seed: u64,
    ) -> Self {
        let mut cumulative = Vec::with_capacity(triangles.len());
        let mut total = 0.0;
        for t in triangles {
            let a = vertices[t[0] as usize];
            let b = vertices[t[1] as usize];
            let c = vertices[t[2] as usize];
            total += 0.5 * (b - a).cross(c - a).length();
            cumulative.push(total);
        }
        assert!(total > 0.0, "mesh has no area to sample");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        use rand::Rng;
        for _ in 0..count {
            let pick = rng.gen_range(0.0..total);
            let i = cumulative.partition_point(|&c| c <= pick);
            let t = triangles[i.min(triangles.len() - 1)];
            let a = vertices[t[0] as usize];
            let b = vertices[t[1] as usize];
            let c = vertices[t[2] as usize];
            let mut u: f64 = rng.gen();
            let mut v: f64 = rng.gen();
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            points.push(a + (b - a) * u + (c - a) * v);
        }
        ReferenceCloud { points, source: ReferenceSource::MeshAreaWeighted }
    }

    pub fn external(points: Vec<Vec3>) -> Self {
        ReferenceCloud { points, source: ReferenceSource::ExternalFile }
    }
}

/// CSV report over a run's iteration ledger: one row per edge-refinement
/// iteration plus a totals row carrying evals-per-sample. The growth
/// factor column compares crossing-edge counts against the previous row.
pub fn iteration_report(stats: &RunStats) -> String {
    let mut out = String::from(
        "iteration,crossing_edges,mean_crossing_length,growth_factor,\
         long_edges_processed,vertices_inserted,cumulative_evals,evals_per_sample\n",
    );
    let mut prev = None;
    for rec in &stats.iterations {
        let growth = match prev {
            Some(p) if p > 0 => format!("{:.4}", rec.crossing_edges as f64 / p as f64),
            _ => String::new(),
        };
        writeln!(
            out,
            "{},{},{:.6},{},{},{},{},",
            rec.index,
            rec.crossing_edges,
            rec.mean_crossing_length,
            growth,
            rec.long_edges_processed,
            rec.vertices_inserted,
            rec.cumulative_evals,
        )
        .unwrap();
        prev = Some(rec.crossing_edges);
    }
    let inserted: usize = stats.iterations.iter().map(|r| r.vertices_inserted).sum();
    let processed: usize = stats.iterations.iter().map(|r| r.long_edges_processed).sum();
    writeln!(
        out,
        "total,{},,,{},{},{},{:.4}",
        stats.totals.samples,
        processed,
        inserted,
        stats.totals.evaluations,
        stats.totals.evals_per_sample,
    )
    .unwrap();
    out
}

/// Mean crossing-edge growth factor over the first `count` refinement
/// iterations (iteration 0 is the seeded state, so factors start at row 1).
pub fn mean_growth_factor(stats: &RunStats, count: usize) -> Option<f64> {
    let mut factors = Vec::new();
    for w in stats.iterations.windows(2).take(count) {
        if w[0].crossing_edges > 0 {
            factors.push(w[1].crossing_edges as f64 / w[0].crossing_edges as f64);
        }
    }
    if factors.is_empty() {
        None
    } else {
        Some(factors.iter().sum::<f64>() / factors.len() as f64)
    }
}

/// Vertices whose incident face normals spread wider than the threshold.
/// A cheap curvature bin: flat and gently curved regions stay below a few
/// degrees at sampling scale, creases land near the dihedral angle.
pub fn high_curvature_vertices(mesh: &crate::mesh::SurfaceMesh, threshold_degrees: f64) -> usize {
    let mut normals: Vec<Vec<Vec3>> = vec![Vec::new(); mesh.vertices.len()];
    for f in 0..mesh.triangles.len() {
        let n = mesh.face_normal(f);
        let len = n.length();
        if len > 0.0 {
            let unit = n * (1.0 / len);
            for &v in &mesh.triangles[f] {
                normals[v as usize].push(unit);
            }
        }
    }
    let cos_threshold = threshold_degrees.to_radians().cos();
    normals
        .iter()
        .filter(|ns| {
            ns.len() >= 2
                && ns
                    .iter()
                    .enumerate()
                    .any(|(i, a)| ns[i + 1..].iter().any(|b| a.dot(*b) < cos_threshold))
        })
        .count()
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub resolution: String,
    pub chamfer_x1000: f64,
    pub output_samples: usize,
    pub evals: u64,
    pub time_s: f64,
    /// Matching context or per-row failure; empty when not applicable.
    pub note: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

pub const COMPARISON_HEADER: &str =
    "method,resolution,chamfer_x1000,output_samples,evals,time_s,note";

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARISON_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.4},{},{},{:.3},{}",
                r.method, r.resolution, r.chamfer_x1000, r.output_samples, r.evals, r.time_s, r.note,
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    /// ADS rows, ordered as given; conventionally 0.05, 0.03, 0.02.
    pub taus: Vec<f64>,
    pub seed: u64,
    pub with_ads: bool,
    pub with_marching_cubes: bool,
    pub with_ray_stab: bool,
    pub mc_refine_steps: u32,
    pub rrs_refine_steps: u32,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            taus: vec![0.05, 0.03, 0.02],
            seed: 0,
            with_ads: true,
            with_marching_cubes: true,
            with_ray_stab: true,
            mc_refine_steps: 5,
            rrs_refine_steps: 10,
        }
    }
}

/// One ADS row per tau, then per tau one row each for marching cubes and
/// ray stabbing tuned to the matching ADS chamfer. Matched rows follow the
/// convention of reporting the run with maximally close but still higher
/// chamfer (when the very first probe already beats the target there is no
/// such run and the closest passing one is shown instead). Unreachable
/// targets degrade to a note on the row, not an error.
pub fn comparison_table(
    field: &dyn OccupancyField,
    reference: &ReferenceCloud,
    opts: &CompareOptions,
) -> Result<ComparisonTable, PipelineError> {
    let mut table = ComparisonTable::default();
    let mut ads_targets: Vec<(f64, f64)> = Vec::new();
    for &tau in &opts.taus {
        let config = AdsConfig { tau, seed: opts.seed, ..AdsConfig::default() };
        let output = run(field, &config)?;
        let chamfer = if output.samples.points.is_empty() {
            f64::INFINITY
        } else {
            chamfer_l1(&output.samples.points, &reference.points)
        };
        ads_targets.push((tau, chamfer));
        if opts.with_ads {
            table.rows.push(ComparisonRow {
                method: "ads".into(),
                resolution: format!("tau={tau}"),
                chamfer_x1000: chamfer * 1000.0,
                output_samples: output.stats.totals.samples,
                evals: output.stats.totals.evaluations,
                time_s: output.stats.timings_ms.total_ms / 1000.0,
                note: if output.stats.totals.capped { "iteration cap hit".into() } else { String::new() },
            });
        }
    }

    let matched = |kind: BaselineKind, method: &str, prefix: &str, step: f64, target: f64, tau: f64, refine: u32| {
        let outcome = match_accuracy(
            field,
            &reference.points,
            target,
            kind,
            step,
            refine,
            opts.seed,
        );
        let (run, note): (TunedRun, String) = match outcome {
            Ok(o) => {
                let run = o.above.unwrap_or(o.below);
                (run, format!("matched to ads tau={tau}"))
            }
            Err(e) => (e.best, format!("target {:.4} (ads tau={tau}) unreachable", e.target * 1000.0)),
        };
        ComparisonRow {
            method: method.into(),
            resolution: format!("{prefix}={}", run.parameter),
            chamfer_x1000: run.chamfer * 1000.0,
            output_samples: run.samples,
            evals: run.evaluations,
            time_s: run.time_s,
            note,
        }
    };

    if opts.with_marching_cubes {
        for &(tau, target) in &ads_targets {
            table.rows.push(matched(
                BaselineKind::MarchingCubes,
                "marching_cubes",
                "grid",
                tau,
                target,
                tau,
                opts.mc_refine_steps,
            ));
        }
    }
    if opts.with_ray_stab {
        for &(tau, target) in &ads_targets {
            table.rows.push(matched(
                BaselineKind::RayStab,
                "ray_stab",
                "rays",
                tau,
                target,
                tau,
                opts.rrs_refine_steps,
            ));
        }
    }
    Ok(table)
}
