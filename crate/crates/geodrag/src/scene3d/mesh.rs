//! Minimal OBJ mesh ingestion: `v` and `f` records, 1-based indices.

use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn parse_obj(text: &str) -> Result<Mesh> {
        let mut vertices = Vec::new();
        let mut raw_faces: Vec<Vec<usize>> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .clone()
                        .take(3)
                        .map(|t| {
                            t.parse::<f64>().map_err(|_| {
                                Error::parse(format!("obj line {}: bad vertex coordinate {t:?}", lineno + 1))
                            })
                        })
                        .collect::<Result<_>>()?;
                    if coords.len() != 3 {
                        return Err(Error::parse(format!(
                            "obj line {}: vertex needs 3 coordinates",
                            lineno + 1
                        )));
                    }
                    vertices.push(Point3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let mut indices = Vec::new();
                    for token in parts {
                        // accept v, v/vt, v/vt/vn and v//vn forms; only the
                        // vertex index is used
                        let head = token.split('/').next().unwrap_or("");
                        let idx: i64 = head.parse().map_err(|_| {
                            Error::parse(format!("obj line {}: bad face index {token:?}", lineno + 1))
                        })?;
                        if idx <= 0 {
                            return Err(Error::parse(format!(
                                "obj line {}: face indices must be positive 1-based (got {idx})",
                                lineno + 1
                            )));
                        }
                        indices.push(idx as usize);
                    }
                    if indices.len() < 3 {
                        return Err(Error::parse(format!(
                            "obj line {}: face needs at least 3 vertices",
                            lineno + 1
                        )));
                    }
                    raw_faces.push(indices);
                }
                // other record types (vn, vt, o, g, usemtl, s, mtllib) are ignored
                _ => {}
            }
        }

        if vertices.is_empty() {
            return Err(Error::invalid("obj mesh has no vertices"));
        }

        let mut faces = Vec::new();
        for indices in raw_faces {
            for &idx in &indices {
                if idx > vertices.len() {
                    return Err(Error::invalid(format!(
                        "face index {idx} out of range for {} vertices",
                        vertices.len()
                    )));
                }
            }
            // fan-triangulate polygons
            for k in 1..indices.len() - 1 {
                faces.push([indices[0] - 1, indices[k] - 1, indices[k + 1] - 1]);
            }
        }

        Ok(Mesh { vertices, faces })
    }

    pub fn load_obj(path: &Path) -> Result<Mesh> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Mesh::parse_obj(&text)
    }

    /// Unique undirected edges over all faces.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = std::collections::BTreeSet::new();
        for face in &self.faces {
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "\
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
f 1 2 3 4
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
";

    #[test]
    fn parses_cube() {
        let mesh = Mesh::parse_obj(CUBE).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.faces.len(), 12); // 6 quads fan into 12 triangles
        assert_eq!(mesh.edges().len(), 18); // 12 cube edges + 6 fan diagonals
    }

    #[test]
    fn face_index_out_of_range() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n";
        let err = Mesh::parse_obj(text).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn empty_mesh_is_rejected() {
        assert!(Mesh::parse_obj("# nothing\n").is_err());
    }

    #[test]
    fn slash_forms_are_accepted() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2/2 3//3\n";
        let mesh = Mesh::parse_obj(text).unwrap();
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn negative_indices_are_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n";
        assert!(Mesh::parse_obj(text).is_err());
    }
}
