//! One directory per trained model: a TSG1 file per network and per
//! optimizer, plus `state.txt` with the configuration and step counters.

use std::path::{Path, PathBuf};

use tsgan_nn::checkpoint::{load_adam, load_network, save_adam, save_network};

use super::baseline::BaselineModel;
use super::config::TsganConfig;
use super::model::{TsganModel, Wgan};
use crate::error::{Error, Result};
use crate::kv::KvFile;

const STATE_FILE: &str = "state.txt";

fn save_wgan(w: &Wgan, dir: &Path, gen: &str, critic: &str) -> Result<Vec<PathBuf>> {
    let files = [
        dir.join(format!("{gen}.tsg")),
        dir.join(format!("{critic}.tsg")),
        dir.join(format!("{gen}.adam.tsg")),
        dir.join(format!("{critic}.adam.tsg")),
    ];
    save_network(&w.generator, &files[0])?;
    save_network(&w.critic, &files[1])?;
    save_adam(&w.generator_opt, &files[2])?;
    save_adam(&w.critic_opt, &files[3])?;
    Ok(files.to_vec())
}

fn load_wgan(w: &mut Wgan, dir: &Path, gen: &str, critic: &str) -> Result<()> {
    let need = |name: String| {
        let p = dir.join(name);
        if p.exists() { Ok(p) } else { Err(Error::Missing(p)) }
    };
    load_network(&mut w.generator, &need(format!("{gen}.tsg"))?)?;
    load_network(&mut w.critic, &need(format!("{critic}.tsg"))?)?;
    let cfg = w.generator_opt.config;
    w.generator_opt = load_adam(cfg, &need(format!("{gen}.adam.tsg"))?)?;
    w.critic_opt = load_adam(cfg, &need(format!("{critic}.adam.tsg"))?)?;
    Ok(())
}

fn state(kind: &str, config: &TsganConfig, class: usize, signal_length: usize, scale: f32) -> KvFile {
    let mut kv = KvFile::new();
    kv.set("kind", kind);
    kv.set("class", class);
    kv.set("signal_length", signal_length);
    kv.set("series_scale", scale);
    config.to_kv(&mut kv);
    kv
}

fn read_state(dir: &Path, kind: &str) -> Result<(KvFile, TsganConfig)> {
    let path = dir.join(STATE_FILE);
    if !path.exists() {
        return Err(Error::Missing(path));
    }
    let kv = KvFile::load(&path)?;
    if kv.get("kind") != Some(kind) {
        return Err(Error::config("kind", format!("{} holds a `{}` model, expected `{kind}`", dir.display(), kv.get("kind").unwrap_or("?"))));
    }
    let mut config = TsganConfig::default();
    config.apply_kv(&kv)?;
    Ok((kv, config))
}

/// Writes every network, optimizer and counter; returns the files written.
pub fn save_tsgan(model: &TsganModel, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut files = save_wgan(&model.stage1, dir, "G", "D_x")?;
    files.extend(save_wgan(&model.stage2, dir, "F", "D_y")?);
    let mut kv = state("tsgan", &model.config, model.class, model.signal_length, model.series_scale);
    kv.set("stage1_steps", model.stage1_steps);
    kv.set("stage2_steps", model.stage2_steps);
    let path = dir.join(STATE_FILE);
    kv.save(&path)?;
    files.push(path);
    Ok(files)
}

pub fn load_tsgan(dir: &Path) -> Result<TsganModel> {
    let (kv, config) = read_state(dir, "tsgan")?;
    let mut model = TsganModel::new(&config, kv.require("class")?, kv.require("signal_length")?, kv.require("series_scale")?)?;
    load_wgan(&mut model.stage1, dir, "G", "D_x")?;
    load_wgan(&mut model.stage2, dir, "F", "D_y")?;
    model.stage1_steps = kv.require("stage1_steps")?;
    model.stage2_steps = kv.require("stage2_steps")?;
    Ok(model)
}

pub fn save_baseline(model: &BaselineModel, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut files = save_wgan(&model.wgan, dir, "generator", "critic")?;
    let mut kv = state("wgan-baseline", &model.config, model.class, model.signal_length, model.series_scale);
    kv.set("steps_done", model.steps);
    let path = dir.join(STATE_FILE);
    kv.save(&path)?;
    files.push(path);
    Ok(files)
}

pub fn load_baseline(dir: &Path) -> Result<BaselineModel> {
    let (kv, config) = read_state(dir, "wgan-baseline")?;
    let mut model = BaselineModel::new(&config, kv.require("class")?, kv.require("signal_length")?, kv.require("series_scale")?)?;
    load_wgan(&mut model.wgan, dir, "generator", "critic")?;
    model.steps = kv.require("steps_done")?;
    Ok(model)
}
