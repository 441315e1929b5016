//! On-disk scene layout: a JSON manifest, one FTEN file per frame map, and a
//! fixation CSV, all in one directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FrameFeatures, LeadBox, SceneSequence, TaskLabel, VehicleState};
use crate::ften::{read_tensor, write_atomic, write_tensor};
use crate::grid::{FixationPoint, FixationSequence};

pub const MANIFEST_FILE: &str = "scene.json";
pub const FIXATIONS_FILE: &str = "fixations.csv";
const FIXATIONS_HEADER: &str = "driver_id,video_id,frame_index,x,y,duration";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub pixel: String,
    pub region: String,
    pub lane: String,
    pub brake: String,
    pub depth: String,
    pub irrelevant: Option<String>,
    pub lead_box: Option<LeadBox>,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub video_id: String,
    pub task: TaskLabel,
    pub frames: Vec<FrameEntry>,
    pub fixations: String,
}

fn manifest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// File names inside the scene directory; they carry no directory part.
fn checked_name(manifest: &Path, name: &str) -> Result<()> {
    let p = Path::new(name);
    if name.is_empty() || p.components().count() != 1 || p.is_absolute() || name == ".." {
        return Err(manifest_err(manifest, format!("file name {name:?} must be a plain name")));
    }
    Ok(())
}

pub fn save_scene(dir: impl AsRef<Path>, scene: &SceneSequence) -> Result<()> {
    scene.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::with_capacity(scene.len());
    for (t, (f, v)) in scene.frames.iter().zip(&scene.speeds).enumerate() {
        let name = |kind: &str| format!("frame{t:03}_{kind}.ften");
        let entry = FrameEntry {
            pixel: name("pixel"),
            region: name("region"),
            lane: name("lane"),
            brake: name("brake"),
            depth: name("depth"),
            irrelevant: f.irrelevant.as_ref().map(|_| name("irrelevant")),
            lead_box: f.lead_box,
            speed: v.speed,
        };
        for (file, tensor) in [
            (&entry.pixel, &f.pixel),
            (&entry.region, &f.region),
            (&entry.lane, &f.lane),
            (&entry.brake, &f.brake),
            (&entry.depth, &f.depth),
        ] {
            write_tensor(dir.join(file), tensor)?;
        }
        if let (Some(file), Some(mask)) = (&entry.irrelevant, &f.irrelevant) {
            write_tensor(dir.join(file), mask)?;
        }
        frames.push(entry);
    }
    write_atomic(&dir.join(FIXATIONS_FILE), fixations_to_csv(&scene.fixations).as_bytes())?;
    let manifest = SceneManifest {
        video_id: scene.video_id.clone(),
        task: scene.task,
        frames,
        fixations: FIXATIONS_FILE.into(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())
}

pub fn load_scene(dir: impl AsRef<Path>) -> Result<SceneSequence> {
    let dir = dir.as_ref();
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: SceneManifest = serde_json::from_str(&text).map_err(|e| manifest_err(&mpath, e.to_string()))?;
    if manifest.frames.is_empty() {
        return Err(manifest_err(&mpath, "no frames listed"));
    }
    let mut frames = Vec::with_capacity(manifest.frames.len());
    let mut speeds = Vec::with_capacity(manifest.frames.len());
    for e in &manifest.frames {
        let load = |name: &str| -> Result<_> {
            checked_name(&mpath, name)?;
            read_tensor(dir.join(name))
        };
        frames.push(FrameFeatures {
            pixel: load(&e.pixel)?,
            region: load(&e.region)?,
            lane: load(&e.lane)?,
            lead_box: e.lead_box,
            brake: load(&e.brake)?,
            depth: load(&e.depth)?,
            irrelevant: e.irrelevant.as_deref().map(load).transpose()?,
        });
        speeds.push(VehicleState { speed: e.speed });
    }
    checked_name(&mpath, &manifest.fixations)?;
    let fixations = read_fixations(&dir.join(&manifest.fixations))?;
    let scene = SceneSequence {
        video_id: manifest.video_id,
        task: manifest.task,
        frames,
        speeds,
        fixations,
    };
    scene.validate().map_err(|e| manifest_err(&mpath, e.to_string()))?;
    Ok(scene)
}

pub fn fixations_to_csv(seqs: &[FixationSequence]) -> String {
    let mut out = format!("{FIXATIONS_HEADER}\n");
    for s in seqs {
        for p in &s.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.driver_id, s.video_id, p.frame_index, p.x, p.y, p.duration
            ));
        }
    }
    out
}

/// Consecutive rows with the same driver and video form one sequence.
pub fn read_fixations(path: &Path) -> Result<Vec<FixationSequence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fixations(&text).map_err(|m| manifest_err(path, m))
}

fn parse_fixations(text: &str) -> std::result::Result<Vec<FixationSequence>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FIXATIONS_HEADER => {}
        _ => return Err(format!("expected header {FIXATIONS_HEADER:?}")),
    }
    let mut out: Vec<FixationSequence> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("line {}: expected 6 fields, found {}", i + 1, f.len()));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {}: {s:?}: {e}", i + 1));
        let frame_index = f[2].trim().parse::<usize>().map_err(|e| format!("line {}: {:?}: {e}", i + 1, f[2]))?;
        let p = FixationPoint {
            x: num(f[3])?,
            y: num(f[4])?,
            duration: num(f[5])?,
            frame_index,
        };
        match out.last_mut() {
            Some(s) if s.driver_id == f[0] && s.video_id == f[1] => s.points.push(p),
            _ => out.push(FixationSequence {
                driver_id: f[0].into(),
                video_id: f[1].into(),
                points: vec![p],
            }),
        }
    }
    for s in &out {
        s.validate().map_err(|e| e.to_string())?;
    }
    Ok(out)
}

/// Scene directories directly under `root` (those holding a manifest), sorted by name.
pub fn list_scenes(root: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let root = root.as_ref();
    let rd = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let p = entry.path();
        if p.join(MANIFEST_FILE).is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}
