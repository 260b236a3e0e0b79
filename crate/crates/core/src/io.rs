//! STL (binary and ASCII) and OBJ mesh reading, STL writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mesh::{HullMesh, MeshTolerances};

type Triangle = [Vector3<f64>; 3];

/// Vertex list and triangle indices.
pub type IndexedMesh = (Vec<Vector3<f64>>, Vec<[usize; 3]>);

/// Loads a hull from an `.stl` or `.obj` file.
///
/// `symmetric = None` detects the `x2 = 0` symmetry from the vertices;
/// `Some(true)` asserts it (and fails if it does not hold).
pub fn load_mesh(path: &Path, symmetric: Option<bool>, tolerances: MeshTolerances) -> Result<HullMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mesh = match ext.as_str() {
        "stl" => HullMesh::from_triangle_soup(&parse_stl(&bytes)?, false, tolerances)?,
        "obj" => {
            let text = String::from_utf8(bytes).map_err(|_| Error::InvalidMesh(format!("{}: not UTF-8", path.display())))?;
            let (vertices, triangles) = parse_obj(&text)?;
            HullMesh::with_options(vertices, triangles, false, tolerances)?
        }
        _ => {
            return Err(Error::Io(format!(
                "{}: unsupported mesh format (expected .stl or .obj)",
                path.display()
            )))
        }
    };
    let symmetric = symmetric.unwrap_or_else(|| mesh.detect_symmetry());
    mesh.with_symmetry(symmetric)
}

/// Parses binary or ASCII STL into a triangle soup.
pub fn parse_stl(bytes: &[u8]) -> Result<Vec<Triangle>> {
    if is_binary_stl(bytes) {
        parse_binary_stl(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::InvalidMesh("STL is neither binary nor ASCII".into()))?;
        parse_ascii_stl(text)
    }
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let sized = count.checked_mul(50).and_then(|n| n.checked_add(84)) == Some(bytes.len());
    sized || !bytes.trim_ascii_start().starts_with(b"solid")
}

fn parse_binary_stl(bytes: &[u8]) -> Result<Vec<Triangle>> {
    if bytes.len() < 84 {
        return Err(Error::InvalidMesh("binary STL shorter than its header".into()));
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    if bytes.len() < 84 + 50 * count {
        return Err(Error::InvalidMesh(format!(
            "binary STL declares {count} triangles but holds {} bytes",
            bytes.len()
        )));
    }
    let float = |at: usize| f32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]) as f64;
    let mut soup = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + 50 * t + 12;
        let vertex = |k: usize| {
            let at = base + 12 * k;
            Vector3::new(float(at), float(at + 4), float(at + 8))
        };
        soup.push([vertex(0), vertex(1), vertex(2)]);
    }
    Ok(soup)
}

fn parse_ascii_stl(text: &str) -> Result<Vec<Triangle>> {
    let mut soup = Vec::new();
    let mut current: Vec<Vector3<f64>> = Vec::with_capacity(3);
    for (line_no, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("vertex") => {
                let coords: Vec<f64> = words
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::InvalidMesh(format!("STL line {}: bad vertex", line_no + 1)))?;
                if coords.len() != 3 {
                    return Err(Error::InvalidMesh(format!("STL line {}: vertex needs 3 coordinates", line_no + 1)));
                }
                current.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(Error::InvalidMesh(format!(
                        "STL line {}: facet has {} vertices",
                        line_no + 1,
                        current.len()
                    )));
                }
                soup.push([current[0], current[1], current[2]]);
                current.clear();
            }
            _ => {}
        }
    }
    if soup.is_empty() {
        return Err(Error::InvalidMesh("STL contains no facets".into()));
    }
    Ok(soup)
}

/// Parses the `v` and `f` records of a Wavefront OBJ file. Polygonal faces
/// are fan-triangulated; texture and normal indices are ignored.
pub fn parse_obj(text: &str) -> Result<IndexedMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let bad = |what: &str| Error::InvalidMesh(format!("OBJ line {}: {what}", line_no + 1));
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let coords: Vec<f64> = words
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad vertex"))?;
                if coords.len() != 3 {
                    return Err(bad("vertex needs 3 coordinates"));
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for word in words {
                    let raw: i64 = word.split('/').next().unwrap_or("").parse().map_err(|_| bad("bad face index"))?;
                    let index = match raw {
                        r if r > 0 => r as usize - 1,
                        r if r < 0 && (-r) as usize <= vertices.len() => vertices.len() - (-r) as usize,
                        _ => return Err(bad("face index out of range")),
                    };
                    face.push(index);
                }
                if face.len() < 3 {
                    return Err(bad("face needs at least 3 vertices"));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

/// Binary STL encoding of a triangle list (facet normals from the winding).
pub fn stl_binary_bytes(triangles: &[Triangle]) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * triangles.len());
    let mut header = [0u8; 80];
    let label = b"hydrostab binary STL";
    header[..label.len()].copy_from_slice(label);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(triangles.len() as u32).to_le_bytes());
    for [a, b, c] in triangles {
        let normal = (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vector3::zeros);
        for v in [&normal, a, b, c] {
            for x in v.iter() {
                out.extend_from_slice(&(*x as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn write_stl(path: &Path, triangles: &[Triangle]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    file.write_all(&stl_binary_bytes(triangles))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Every triangle of a mesh, in its stored orientation.
pub fn mesh_triangles(mesh: &HullMesh) -> Vec<Triangle> {
    (0..mesh.triangles().len()).map(|t| mesh.triangle(t)).collect()
}
