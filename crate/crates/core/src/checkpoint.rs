//! Checkpoints: one FTEN file per named network tensor plus a JSON sidecar
//! holding the configuration needed to rebuild and use the model.
//!
//! FTEN stores 32-bit floats, so parameters come back rounded to `f32`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ften::{read_tensor, write_atomic, write_tensor};
use crate::grid::GridSpec;
use crate::irl::TrainConfig;
use crate::reward_net::{init_params, AdamConfig, AdamState, RewardNetParams};
use crate::tensor::Tensor;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRefs {
    pub config: AdamConfig,
    pub step: u64,
    /// First-moment files, in parameter order.
    pub m: Vec<String>,
    pub v: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: u32,
    pub grid: GridSpec,
    /// Carries the network, feature, fovea and MDP settings.
    pub train: TrainConfig,
    pub epoch: u32,
    pub seed: u64,
    /// Parameter name and file, in canonical order.
    pub tensors: Vec<(String, String)>,
    /// Running normalization statistics per normalized layer.
    pub running: Vec<(String, String)>,
    pub optimizer: Option<OptimizerRefs>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: RewardNetParams,
    pub optimizer: Option<AdamState>,
}

fn vector(values: &[f64]) -> Tensor {
    Tensor::new(vec![values.len()], values.iter().map(|&v| v as f32).collect()).expect("1-d tensor")
}

fn running_names(params: &RewardNetParams) -> Vec<String> {
    (0..params.norms.len())
        .flat_map(|i| [format!("norm{i}.running_mean"), format!("norm{i}.running_var")])
        .collect()
}

fn running_tensors(params: &RewardNetParams) -> Vec<&[f64]> {
    params
        .norms
        .iter()
        .flat_map(|n| [n.running_mean.as_slice(), n.running_var.as_slice()])
        .collect()
}

pub fn save_checkpoint(
    dir: impl AsRef<Path>,
    params: &RewardNetParams,
    optimizer: Option<&AdamState>,
    grid: &GridSpec,
    train: &TrainConfig,
    epoch: u32,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if !params.is_finite() {
        return Err(Error::NonFinite("checkpoint parameters".into()));
    }
    let mut tensors = Vec::new();
    for (name, t) in params.trainable_names().into_iter().zip(params.trainable()) {
        let file = format!("{name}.ften");
        write_tensor(dir.join(&file), &vector(t))?;
        tensors.push((name, file));
    }
    let mut running = Vec::new();
    for (name, t) in running_names(params).into_iter().zip(running_tensors(params)) {
        let file = format!("{name}.ften");
        write_tensor(dir.join(&file), &vector(t))?;
        running.push((name, file));
    }
    let optimizer = match optimizer {
        None => None,
        Some(state) => {
            let mut refs = OptimizerRefs {
                config: state.config,
                step: state.step,
                m: Vec::new(),
                v: Vec::new(),
            };
            for (name, (m, v)) in params.trainable_names().iter().zip(state.m.iter().zip(&state.v)) {
                let (fm, fv) = (format!("adam_m.{name}.ften"), format!("adam_v.{name}.ften"));
                write_tensor(dir.join(&fm), &vector(m))?;
                write_tensor(dir.join(&fv), &vector(v))?;
                refs.m.push(fm);
                refs.v.push(fv);
            }
            Some(refs)
        }
    };
    let mut train = train.clone();
    let meta_seed = train.seed;
    // the network actually built, input width included
    train.net = params.config.clone();
    let meta = CheckpointMeta {
        format: FORMAT_VERSION,
        grid: grid.clone(),
        train,
        epoch,
        seed: meta_seed,
        tensors,
        running,
        optimizer,
    };
    let json = serde_json::to_string_pretty(&meta).expect("checkpoint metadata serializes");
    write_atomic(&dir.join(CHECKPOINT_FILE), json.as_bytes())
}

fn read_into(dir: &Path, meta_path: &Path, file: &str, dst: &mut [f64]) -> Result<()> {
    if Path::new(file).components().count() != 1 {
        return Err(Error::Manifest {
            path: meta_path.to_path_buf(),
            message: format!("file name {file:?} must be a plain name"),
        });
    }
    let path = dir.join(file);
    let t = read_tensor(&path)?;
    if t.len() != dst.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}: {} values, network expects {}",
            path.display(),
            t.len(),
            dst.len()
        )));
    }
    t.ensure_finite(&path.display().to_string())?;
    dst.iter_mut().zip(t.data()).for_each(|(d, &s)| *d = s as f64);
    Ok(())
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<Checkpoint> {
    let dir = dir.as_ref();
    let meta_path = dir.join(CHECKPOINT_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: meta_path.clone(),
        message: e.to_string(),
    })?;
    let bad = |message: String| Error::Manifest {
        path: meta_path.clone(),
        message,
    };
    if meta.format != FORMAT_VERSION {
        return Err(bad(format!("unsupported checkpoint format {}", meta.format)));
    }
    let mut params = init_params(&meta.train.net, 0)?;
    let names = params.trainable_names();
    if meta.tensors.iter().map(|(n, _)| n).ne(names.iter()) {
        return Err(bad("parameter list does not match the network configuration".into()));
    }
    let files: Vec<&str> = meta.tensors.iter().map(|(_, f)| f.as_str()).collect();
    for (dst, file) in params.trainable_mut().into_iter().zip(&files) {
        read_into(dir, &meta_path, file, dst)?;
    }
    if meta.running.iter().map(|(n, _)| n).ne(running_names(&params).iter()) {
        return Err(bad("running statistics do not match the network configuration".into()));
    }
    let mut running = meta.running.iter();
    for n in params.norms.iter_mut() {
        for dst in [&mut n.running_mean, &mut n.running_var] {
            let (_, file) = running.next().expect("lengths checked");
            read_into(dir, &meta_path, file, dst)?;
        }
    }
    let optimizer = match &meta.optimizer {
        None => None,
        Some(refs) => {
            if refs.m.len() != names.len() || refs.v.len() != names.len() {
                return Err(bad("optimizer state does not match the parameter list".into()));
            }
            let mut state = AdamState::for_params(refs.config, &params);
            state.step = refs.step;
            for (k, (fm, fv)) in refs.m.iter().zip(&refs.v).enumerate() {
                read_into(dir, &meta_path, fm, &mut state.m[k])?;
                read_into(dir, &meta_path, fv, &mut state.v[k])?;
            }
            Some(state)
        }
    };
    Ok(Checkpoint {
        meta,
        params,
        optimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::reward_net::NetConfig;

    fn rounded(p: &RewardNetParams) -> RewardNetParams {
        let mut q = p.clone();
        for t in q.trainable_mut() {
            t.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
        for n in &mut q.norms {
            n.running_mean.iter_mut().chain(n.running_var.iter_mut()).for_each(|v| *v = *v as f32 as f64);
        }
        q
    }

    #[test]
    fn round_trip_rounds_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = TrainConfig::default();
        cfg.net = NetConfig {
            input_dim: 5,
            hidden: vec![4, 3],
            ..Default::default()
        };
        let mut p = init_params(&cfg.net, 8).unwrap();
        p.norms[1].running_mean[2] = 0.123456789;
        let mut adam = AdamState::for_params(AdamConfig::default(), &p);
        adam.step = 7;
        adam.m[0][1] = 0.5;
        adam.v[3][0] = 0.25;
        let g = build_grid(12, 16, 4, 4).unwrap();
        save_checkpoint(dir.path(), &p, Some(&adam), &g, &cfg, 3).unwrap();
        let ck = load_checkpoint(dir.path()).unwrap();
        assert_eq!(ck.params, rounded(&p));
        let opt = ck.optimizer.unwrap();
        assert_eq!((opt.step, opt.m[0][1], opt.v[3][0]), (7, 0.5, 0.25));
        assert_eq!((ck.meta.epoch, ck.meta.grid), (3, g));
    }

    #[test]
    fn mismatched_tensor_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = TrainConfig::default();
        cfg.net.input_dim = 4;
        cfg.net.hidden = vec![3];
        let p = init_params(&cfg.net, 1).unwrap();
        // the saved network config follows the parameters, not the passed settings
        let mut stale = cfg.clone();
        stale.net.input_dim = 9;
        save_checkpoint(dir.path(), &p, None, &build_grid(8, 8, 4, 4).unwrap(), &stale, 0).unwrap();
        assert_eq!(load_checkpoint(dir.path()).unwrap().meta.train.net.input_dim, 4);
        save_checkpoint(dir.path(), &p, None, &build_grid(8, 8, 4, 4).unwrap(), &cfg, 0).unwrap();
        write_tensor(dir.path().join("layer0.bias.ften"), &vector(&[1.0, 2.0])).unwrap();
        let err = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)) && err.to_string().contains("layer0.bias.ften"), "{err}");
        save_checkpoint(dir.path(), &p, None, &build_grid(8, 8, 4, 4).unwrap(), &cfg, 0).unwrap();
        fs::remove_file(dir.path().join("head.weight.ften")).unwrap();
        assert!(load_checkpoint(dir.path()).unwrap_err().to_string().contains("head.weight.ften"));
    }
}
