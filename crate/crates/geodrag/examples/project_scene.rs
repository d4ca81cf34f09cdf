//! Loads the shipped box-car scene, translates its keypoints by the length
//! rule, projects source/target pairs into image space, and writes a drag
//! instruction plus a wireframe render.

use std::path::Path;

use geodrag::pgm;
use geodrag::scene3d::{pairs_to_instruction, render_wireframe, SceneSpec};

fn main() -> Result<(), geodrag::Error> {
    let scene_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/boxcar_scene.json");
    let scene = SceneSpec::load(&scene_path)?;
    println!(
        "scene: {} keypoints, camera r={} theta={} phi={}",
        scene.keypoints.len(),
        scene.camera.r,
        scene.camera.theta_deg,
        scene.camera.phi_deg
    );
    println!("gamma: {:?}", scene.gamma);

    let (obj, camera, pairs) = scene.project(&scene_path)?;
    for pair in &pairs {
        let delta = pair.target.sub(&pair.source);
        println!("{:<10} {} -> {}  (2D displacement {})", pair.name, pair.source, pair.target, delta);
    }

    let out_dir = std::env::temp_dir().join("geodrag_project_scene");
    std::fs::create_dir_all(&out_dir)?;
    let instruction = pairs_to_instruction(&pairs, camera.pose(), 8)?;
    let instr_path = out_dir.join("boxcar_instruction.json");
    instruction.save(&instr_path)?;
    println!("instruction (latent {}x{}) -> {}", instruction.latent.w, instruction.latent.h, instr_path.display());

    let raster = render_wireframe(&obj.mesh, &camera)?;
    let wf_path = out_dir.join("boxcar_wireframe.pgm");
    pgm::write_pgm(&wf_path, raster.width, raster.height, &raster.pixels)?;
    println!("wireframe -> {}", wf_path.display());
    Ok(())
}
