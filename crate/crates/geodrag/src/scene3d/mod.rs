//! 3D reference objects, parametric keypoint translation, camera projection,
//! and scene documents that tie them together.

mod camera;
mod expr;
mod mesh;
mod rules;
mod wireframe;

pub use camera::{Camera, CameraPose};
pub use expr::Expr;
pub use mesh::Mesh;
pub use rules::{translate_points, Axis, KeypointMap, ParamValues, Rule, Transform, TranslationRuleSet};
pub use wireframe::{render_wireframe, Raster};

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Dims, DragInstruction, PointPair};
use crate::geometry::Point2;

/// The reference object: a mesh plus named 3D keypoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceObject {
    pub mesh: Mesh,
    pub keypoints: KeypointMap,
}

impl ReferenceObject {
    pub fn new(mesh: Mesh, keypoints: KeypointMap) -> Result<Self> {
        if keypoints.is_empty() {
            return Err(Error::invalid("reference object needs at least one keypoint"));
        }
        for (name, p) in &keypoints {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::NonFinite(format!("keypoint {name:?}")));
            }
        }
        Ok(ReferenceObject { mesh, keypoints })
    }

    /// Loads a mesh and its keypoint sidecar (`<mesh>.keypoints.json`, a JSON
    /// map of name to `[x, y, z]`).
    pub fn load(mesh_path: &Path) -> Result<Self> {
        let sidecar = mesh_path.with_extension("keypoints.json");
        Self::load_with_sidecar(mesh_path, &sidecar)
    }

    pub fn load_with_sidecar(mesh_path: &Path, sidecar_path: &Path) -> Result<Self> {
        let mesh = Mesh::load_obj(mesh_path)?;
        let text = std::fs::read_to_string(sidecar_path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", sidecar_path.display()),
            ))
        })?;
        let raw: BTreeMap<String, [f64; 3]> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("keypoint sidecar {}: {e}", sidecar_path.display())))?;
        let keypoints = raw
            .into_iter()
            .map(|(name, v)| (name, Point3::new(v[0], v[1], v[2])))
            .collect();
        Self::new(mesh, keypoints)
    }

    pub fn keypoint_names(&self) -> std::collections::BTreeSet<String> {
        self.keypoints.keys().cloned().collect()
    }
}

/// A keypoint's source and target pixel positions under one viewpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPair {
    pub name: String,
    pub source: Point2,
    pub target: Point2,
}

/// Projects the reference keypoints and their translated targets into image
/// space, one pair per keypoint in name order. Projections outside the image
/// or behind the camera are hard errors.
pub fn project_pairs(
    obj: &ReferenceObject,
    targets: &KeypointMap,
    camera: &Camera,
) -> Result<Vec<ProjectedPair>> {
    let mut pairs = Vec::with_capacity(obj.keypoints.len());
    for (name, source_3d) in &obj.keypoints {
        let target_3d = targets
            .get(name)
            .ok_or_else(|| Error::invalid(format!("no target for keypoint {name:?}")))?;
        let (su, sv) = camera.project(source_3d)?;
        let (tu, tv) = camera.project(target_3d)?;
        pairs.push(ProjectedPair {
            name: name.clone(),
            source: Point2::new(su, sv),
            target: Point2::new(tu, tv),
        });
    }
    Ok(pairs)
}

/// A scene document: mesh path, keypoints, camera, rules, and the parameter
/// values to apply.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub mesh_path: String,
    pub keypoints: BTreeMap<String, [f64; 3]>,
    pub camera: CameraPose,
    pub rules: TranslationRuleSet,
    pub gamma: ParamValues,
}

impl SceneSpec {
    pub fn load(path: &Path) -> Result<SceneSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        serde_json::from_str(&text).map_err(|e| Error::parse(format!("scene {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Resolves the mesh path relative to the scene file's directory.
    pub fn resolve_mesh_path(&self, scene_path: &Path) -> std::path::PathBuf {
        let mesh = Path::new(&self.mesh_path);
        if mesh.is_absolute() {
            mesh.to_path_buf()
        } else {
            scene_path.parent().unwrap_or(Path::new(".")).join(mesh)
        }
    }

    pub fn keypoint_map(&self) -> KeypointMap {
        self.keypoints
            .iter()
            .map(|(name, v)| (name.clone(), Point3::new(v[0], v[1], v[2])))
            .collect()
    }

    /// Runs the full projection pipeline: load the mesh, validate, translate
    /// the keypoints by the rules at `gamma`, and project source/target
    /// pairs.
    pub fn project(&self, scene_path: &Path) -> Result<(ReferenceObject, Camera, Vec<ProjectedPair>)> {
        let mesh = Mesh::load_obj(&self.resolve_mesh_path(scene_path))?;
        let obj = ReferenceObject::new(mesh, self.keypoint_map())?;
        let camera = Camera::new(self.camera)?;
        let targets = translate_points(&obj.keypoints, &self.rules, &self.gamma)?;
        let pairs = project_pairs(&obj, &targets, &camera)?;
        Ok((obj, camera, pairs))
    }
}

/// Builds a drag instruction from projected pairs. The latent grid is the
/// image grid divided by `latent_scale`.
pub fn pairs_to_instruction(
    pairs: &[ProjectedPair],
    camera: &CameraPose,
    latent_scale: usize,
) -> Result<DragInstruction> {
    if latent_scale == 0 || !camera.width.is_multiple_of(latent_scale) || !camera.height.is_multiple_of(latent_scale) {
        return Err(Error::invalid(format!(
            "latent scale {latent_scale} does not divide the {}x{} image",
            camera.width, camera.height
        )));
    }
    let mut tags = BTreeMap::new();
    tags.insert(
        "keypoints".to_string(),
        serde_json::json!(pairs.iter().map(|p| p.name.clone()).collect::<Vec<_>>()),
    );
    let instruction = DragInstruction {
        image: Dims {
            w: camera.width,
            h: camera.height,
        },
        latent: Dims {
            w: camera.width / latent_scale,
            h: camera.height / latent_scale,
        },
        pairs: pairs
            .iter()
            .map(|p| PointPair {
                source: p.source,
                target: p.target,
            })
            .collect(),
        mask_path: None,
        tags,
    };
    instruction.validate()?;
    Ok(instruction)
}
