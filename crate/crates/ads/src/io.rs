//! File formats: binary little-endian PLY for point clouds and meshes, OBJ
//! for meshes, and a small header-plus-raw format for occupancy grids. All
//! writers are byte-deterministic (no timestamps, no platform-dependent
//! formatting), which the reproducibility checks rely on.

use crate::field::{GridField, GridInterpolation};
use crate::geom::{vec3, Aabb, Vec3};
use crate::mesh::SurfaceMesh;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { path: path.display().to_string(), line, message: message.into() }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), message: message.into() }
}

/// Binary little-endian PLY point cloud: float32 x y z, plus nx ny nz when
/// normals are given. Normal count must match point count.
pub fn write_points_ply(
    path: &Path,
    points: &[Vec3],
    normals: Option<&[Vec3]>,
) -> Result<(), IoError> {
    if let Some(n) = normals {
        assert_eq!(n.len(), points.len(), "normal count mismatch");
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", points.len()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    if normals.is_some() {
        header.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    let mut buf = Vec::with_capacity(points.len() * 24);
    for (i, p) in points.iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
        if let Some(n) = normals {
            for c in [n[i].x, n[i].y, n[i].z] {
                buf.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    w.write_all(&buf).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Read a point PLY in the layout `write_points_ply` produces. Extra
/// elements after the vertices are ignored.
pub fn read_points_ply(path: &Path) -> Result<(Vec<Vec3>, Option<Vec<Vec3>>), IoError> {
    let mut r = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut line = String::new();
    let mut line_no = 0usize;
    let mut next = |r: &mut BufReader<File>, line: &mut String| -> Result<String, IoError> {
        line.clear();
        line_no += 1;
        if r.read_line(line).map_err(|e| io_err(path, e))? == 0 {
            return Err(parse_err(path, line_no, "unexpected end of header"));
        }
        Ok(line.trim_end().to_string())
    };

    if next(&mut r, &mut line)? != "ply" {
        return Err(parse_err(path, 1, "not a PLY file"));
    }
    if next(&mut r, &mut line)? != "format binary_little_endian 1.0" {
        return Err(parse_err(path, 2, "only binary_little_endian 1.0 is supported"));
    }
    let mut count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    loop {
        let l = next(&mut r, &mut line)?;
        if l == "end_header" {
            break;
        }
        if l.starts_with("comment") {
            continue;
        }
        if let Some(rest) = l.strip_prefix("element ") {
            let mut parts = rest.split_whitespace();
            let name = parts.next().unwrap_or("");
            in_vertex_element = name == "vertex";
            if in_vertex_element {
                let n = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(path, 0, "bad vertex count"))?;
                count = Some(n);
            }
            continue;
        }
        if let Some(rest) = l.strip_prefix("property ") {
            if in_vertex_element {
                let mut parts = rest.split_whitespace();
                let ty = parts.next().unwrap_or("");
                let name = parts.next().unwrap_or("");
                if ty != "float" {
                    return Err(parse_err(path, 0, format!("unsupported property type {ty}")));
                }
                properties.push(name.to_string());
            }
            continue;
        }
    }
    let count = count.ok_or_else(|| format_err(path, "missing vertex element"))?;
    let names: Vec<&str> = properties.iter().map(String::as_str).collect();
    let with_normals = match names.as_slice() {
        ["x", "y", "z"] => false,
        ["x", "y", "z", "nx", "ny", "nz"] => true,
        other => {
            return Err(format_err(
                path,
                format!("unsupported vertex layout {other:?}; expected x y z [nx ny nz]"),
            ))
        }
    };
    let floats_per = if with_normals { 6 } else { 3 };
    let mut data = vec![0u8; count * floats_per * 4];
    r.read_exact(&mut data).map_err(|e| io_err(path, e))?;
    let f = |idx: usize| -> f64 {
        f64::from(f32::from_le_bytes(data[idx * 4..idx * 4 + 4].try_into().unwrap()))
    };
    let mut points = Vec::with_capacity(count);
    let mut normals = with_normals.then(|| Vec::with_capacity(count));
    for i in 0..count {
        let base = i * floats_per;
        points.push(vec3(f(base), f(base + 1), f(base + 2)));
        if let Some(n) = normals.as_mut() {
            n.push(vec3(f(base + 3), f(base + 4), f(base + 5)));
        }
    }
    Ok((points, normals))
}

/// Binary little-endian PLY mesh: float32 vertices plus uchar-counted int32
/// triangle indices.
pub fn write_mesh_ply(path: &Path, mesh: &SurfaceMesh) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let header = format!(
        "ply\nformat binary_little_endian 1.0\n\
         element vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    w.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    let mut buf = Vec::with_capacity(mesh.vertices.len() * 12 + mesh.triangles.len() * 13);
    for p in &mesh.vertices {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    for t in &mesh.triangles {
        buf.push(3u8);
        for &i in t {
            buf.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// OBJ mesh with full f64 precision (shortest round-trip formatting).
pub fn write_mesh_obj(path: &Path, mesh: &SurfaceMesh) -> Result<(), IoError> {
    let mut out = String::with_capacity(mesh.vertices.len() * 40 + mesh.triangles.len() * 20);
    for p in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read an OBJ's geometry: `v` and `f` lines only, everything else is
/// ignored. Faces may use `i`, `i/t`, `i//n`, or `i/t/n` references and
/// negative (relative) indices; polygons are fan-triangulated.
pub fn read_mesh_obj(path: &Path) -> Result<(Vec<Vec3>, Vec<[u32; 3]>), IoError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line_no = idx + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coord = |axis: &str| -> Result<f64, IoError> {
                    tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(path, line_no, format!("bad vertex {axis}")))
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                vertices.push(vec3(x, y, z));
            }
            Some("f") => {
                let mut corners: Vec<u32> = Vec::new();
                for token in tokens {
                    let first = token.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("bad face index {token:?}")))?;
                    let resolved = if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        raw - 1
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(
                            path,
                            line_no,
                            format!("face index {raw} out of range"),
                        ));
                    }
                    corners.push(resolved as u32);
                }
                if corners.len() < 3 {
                    return Err(parse_err(path, line_no, "face needs at least 3 corners"));
                }
                for i in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[i], corners[i + 1]]);
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(format_err(path, "no vertices found"));
    }
    Ok((vertices, triangles))
}

const GRID_MAGIC: &[u8; 8] = b"ADSGRID1";

/// Occupancy grid file: magic, u32 dims, f64 domain bounds, then float32
/// values with x varying fastest. Non-positive values mean inside.
pub fn write_grid(
    path: &Path,
    domain: Aabb,
    dims: [usize; 3],
    values: &[f32],
) -> Result<(), IoError> {
    assert_eq!(values.len(), dims[0] * dims[1] * dims[2], "value count mismatch");
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut buf = Vec::with_capacity(8 + 12 + 48 + values.len() * 4);
    buf.extend_from_slice(GRID_MAGIC);
    for d in dims {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for c in [domain.min.x, domain.min.y, domain.min.z, domain.max.x, domain.max.y, domain.max.z] {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_grid(path: &Path, interpolation: GridInterpolation) -> Result<GridField, IoError> {
    let mut data = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| io_err(path, e))?;
    if data.len() < 68 || &data[..8] != GRID_MAGIC {
        return Err(format_err(path, "not an ADSGRID1 file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(data[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(data[o..o + 8].try_into().unwrap());
    let dims = [u32_at(8), u32_at(12), u32_at(16)];
    let min = vec3(f64_at(20), f64_at(28), f64_at(36));
    let max = vec3(f64_at(44), f64_at(52), f64_at(60));
    let expected = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or_else(|| format_err(path, "grid dims overflow"))?;
    if data.len() != 68 + expected * 4 {
        return Err(format_err(
            path,
            format!("grid payload is {} bytes, expected {}", data.len() - 68, expected * 4),
        ));
    }
    let values = data[68..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridField::new(Aabb::new(min, max), dims, values, interpolation)
        .map_err(|e| format_err(path, e.to_string()))
}
