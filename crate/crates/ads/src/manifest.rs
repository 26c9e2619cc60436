//! Field specifications and run manifests: the JSON surface the CLI speaks.
//! A field spec builds into one of the concrete occupancy sources; the run
//! manifest bundles a field with the pipeline configuration and output
//! location.

use crate::evaluation::ReferenceCloud;
use crate::field::{
    AnalyticField, Csg, GridField, GridInterpolation, MeshWindingField, OccupancyField,
    RigidTransform,
};
use crate::geom::{vec3, Aabb, Vec3};
use crate::io::{read_grid, read_mesh_obj, IoError};
use crate::pipeline::AdsConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ManifestError {
    ManifestError::Invalid(msg.into())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl DomainSpec {
    fn aabb(self) -> Result<Aabb, ManifestError> {
        let min = vec3(self.min[0], self.min[1], self.min[2]);
        let max = vec3(self.max[0], self.max[1], self.max[2]);
        if !(min.x < max.x && min.y < max.y && min.z < max.z) {
            return Err(invalid("domain min must be strictly below max on every axis"));
        }
        Ok(Aabb::new(min, max))
    }
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationSpec {
    Nearest,
    #[default]
    Trilinear,
}

impl From<InterpolationSpec> for GridInterpolation {
    fn from(s: InterpolationSpec) -> Self {
        match s {
            InterpolationSpec::Nearest => GridInterpolation::Nearest,
            InterpolationSpec::Trilinear => GridInterpolation::Trilinear,
        }
    }
}

/// One node of the field expression. Mesh and grid sources are only valid
/// at the root; boolean and transform nodes compose analytic shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    Torus {
        center: [f64; 3],
        major_radius: f64,
        minor_radius: f64,
    },
    /// Inside where dot(normal, p) <= offset.
    Plane {
        normal: [f64; 3],
        offset: f64,
    },
    Union {
        children: Vec<ShapeSpec>,
    },
    Intersection {
        children: Vec<ShapeSpec>,
    },
    Difference {
        base: Box<ShapeSpec>,
        subtract: Box<ShapeSpec>,
    },
    /// Rigid motion as a 3x4 row-major matrix applied to the child.
    Transform {
        matrix: [[f64; 4]; 3],
        child: Box<ShapeSpec>,
    },
    Mesh {
        path: String,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    Grid {
        path: String,
        #[serde(default)]
        interpolation: InterpolationSpec,
    },
}

/// Top-level field description. The domain defaults to [-1,1]^3 for
/// analytic shapes and to a padded bounding box for meshes; grid files
/// carry their own domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(flatten)]
    pub shape: ShapeSpec,
}

fn v(a: [f64; 3]) -> Vec3 {
    vec3(a[0], a[1], a[2])
}

fn to_csg(spec: &ShapeSpec) -> Result<Csg, ManifestError> {
    Ok(match spec {
        ShapeSpec::Sphere { center, radius } => {
            if *radius <= 0.0 {
                return Err(invalid("sphere radius must be positive"));
            }
            Csg::Sphere { center: v(*center), radius: *radius }
        }
        ShapeSpec::Box { center, half_extents } => {
            if half_extents.iter().any(|&h| h <= 0.0) {
                return Err(invalid("box half extents must be positive"));
            }
            Csg::Cuboid { center: v(*center), half_extents: v(*half_extents) }
        }
        ShapeSpec::Torus { center, major_radius, minor_radius } => {
            if !(*minor_radius > 0.0 && major_radius > minor_radius) {
                return Err(invalid("torus needs 0 < minor_radius < major_radius"));
            }
            Csg::Torus {
                center: v(*center),
                major_radius: *major_radius,
                minor_radius: *minor_radius,
            }
        }
        ShapeSpec::Plane { normal, offset } => {
            let n = v(*normal);
            if n.length_squared() == 0.0 {
                return Err(invalid("plane normal must be nonzero"));
            }
            Csg::HalfSpace { normal: n, offset: *offset }
        }
        ShapeSpec::Union { children } => {
            if children.is_empty() {
                return Err(invalid("union needs at least one child"));
            }
            Csg::Union(children.iter().map(to_csg).collect::<Result<_, _>>()?)
        }
        ShapeSpec::Intersection { children } => {
            if children.is_empty() {
                return Err(invalid("intersection needs at least one child"));
            }
            Csg::Intersection(children.iter().map(to_csg).collect::<Result<_, _>>()?)
        }
        ShapeSpec::Difference { base, subtract } => {
            Csg::Difference(Box::new(to_csg(base)?), Box::new(to_csg(subtract)?))
        }
        ShapeSpec::Transform { matrix, child } => {
            let transform = RigidTransform { rows: *matrix };
            transform.validate().map_err(|e| invalid(e.to_string()))?;
            Csg::Transformed { transform, node: Box::new(to_csg(child)?) }
        }
        ShapeSpec::Mesh { .. } | ShapeSpec::Grid { .. } => {
            return Err(invalid("mesh and grid sources are only valid at the field root"))
        }
    })
}

/// A field spec resolved into a concrete occupancy source.
pub enum BuiltField {
    Analytic(AnalyticField),
    Mesh(MeshWindingField),
    Grid(GridField),
}

impl std::fmt::Debug for BuiltField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            BuiltField::Analytic(_) => "Analytic",
            BuiltField::Mesh(_) => "Mesh",
            BuiltField::Grid(_) => "Grid",
        };
        write!(f, "BuiltField::{name}")
    }
}

impl BuiltField {
    pub fn field(&self) -> &dyn OccupancyField {
        match self {
            BuiltField::Analytic(f) => f,
            BuiltField::Mesh(f) => f,
            BuiltField::Grid(f) => f,
        }
    }

    pub fn analytic(&self) -> Option<&AnalyticField> {
        match self {
            BuiltField::Analytic(f) => Some(f),
            _ => None,
        }
    }

    /// Ground-truth cloud for chamfer evaluation. Analytic fields sample
    /// their closed form, mesh fields sample triangles area-weighted; grid
    /// fields have no intrinsic surface to sample from.
    pub fn reference(&self, seed: u64) -> Result<ReferenceCloud, ManifestError> {
        match self {
            BuiltField::Analytic(f) => {
                ReferenceCloud::analytic(f, seed).map_err(|e| invalid(e.to_string()))
            }
            BuiltField::Mesh(f) => Ok(ReferenceCloud::mesh(f.vertices(), f.triangles(), seed)),
            BuiltField::Grid(_) => Err(invalid(
                "grid fields need an external reference cloud for chamfer evaluation",
            )),
        }
    }
}

impl FieldSpec {
    /// Resolve into a concrete field. Relative mesh and grid paths are
    /// taken relative to `base`, normally the spec file's directory.
    pub fn build(&self, base: &Path) -> Result<BuiltField, ManifestError> {
        let resolve = |p: &str| -> PathBuf {
            let path = Path::new(p);
            if path.is_absolute() {
                path.to_path_buf()
            } else {
                base.join(path)
            }
        };
        match &self.shape {
            ShapeSpec::Mesh { path, threshold } => {
                let (vertices, triangles) = read_mesh_obj(&resolve(path))?;
                if triangles.is_empty() {
                    return Err(invalid(format!("{path}: mesh has no faces")));
                }
                Ok(BuiltField::Mesh(match self.domain {
                    Some(d) => MeshWindingField::new(d.aabb()?, vertices, triangles, *threshold),
                    None => MeshWindingField::with_default_domain(vertices, triangles),
                }))
            }
            ShapeSpec::Grid { path, interpolation } => {
                if self.domain.is_some() {
                    return Err(invalid("grid files carry their own domain; omit the domain key"));
                }
                Ok(BuiltField::Grid(read_grid(&resolve(path), (*interpolation).into())?))
            }
            shape => {
                let domain = match self.domain {
                    Some(d) => d.aabb()?,
                    None => Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0)),
                };
                Ok(BuiltField::Analytic(AnalyticField::new(domain, to_csg(shape)?)))
            }
        }
    }
}

/// Load a field from a path: `.json` parses as a spec, `.obj` wraps the
/// mesh in a winding-number field, anything else must be a grid file.
pub fn load_field(path: &Path) -> Result<BuiltField, ManifestError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "json" => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ManifestError::Io(IoError::Io { path: path.display().to_string(), source: e })
            })?;
            let spec: FieldSpec = serde_json::from_str(&text).map_err(|e| {
                ManifestError::Json { path: path.display().to_string(), source: e }
            })?;
            spec.build(path.parent().unwrap_or(Path::new(".")))
        }
        "obj" => {
            let (vertices, triangles) = read_mesh_obj(path)?;
            if triangles.is_empty() {
                return Err(invalid(format!("{}: mesh has no faces", path.display())));
            }
            Ok(BuiltField::Mesh(MeshWindingField::with_default_domain(vertices, triangles)))
        }
        _ => Ok(BuiltField::Grid(read_grid(path, GridInterpolation::Trilinear)?)),
    }
}

/// Everything one pipeline invocation needs: the field source, the
/// configuration, and where outputs go.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub field_path: PathBuf,
    pub output_dir: PathBuf,
    pub config: AdsConfig,
}

impl RunManifest {
    pub fn load_field(&self) -> Result<BuiltField, ManifestError> {
        load_field(&self.field_path)
    }
}
