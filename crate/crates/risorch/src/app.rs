//! Command implementations behind the `risorch` binary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use risorch_core::codebook::{compile_codebook, Codebook};
use risorch_core::evaluation::{Evaluator, ExperimentConfig};
use risorch_core::field::{snr_raster, IncidentSolver, RisState, SnrRaster};
use risorch_core::geometry::build_geometry;
use risorch_core::orchestrator::{allocate, apply_energy_off};

use crate::config::RunConfig;
use crate::pool::Pool;
use crate::report::{self, RunManifest};
use crate::store;

pub const SNRMAP_CSV: &str = "snrmap.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Alloc,
    Ee,
    Admission,
    All,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alloc" => Some(Self::Alloc),
            "ee" => Some(Self::Ee),
            "admission" => Some(Self::Admission),
            "all" => Some(Self::All),
            _ => None,
        }
    }

    fn names(self) -> &'static [&'static str] {
        match self {
            Self::Alloc => &["alloc"],
            Self::Ee => &["ee"],
            Self::Admission => &["admission"],
            Self::All => &["alloc", "ee", "admission"],
        }
    }
}

/// Files created by a command; removed again unless the command commits.
struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            dirs: Vec::new(),
            committed: false,
        }
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            // remember the outermost directory we create
            let mut top = dir.to_path_buf();
            while let Some(parent) = top.parent() {
                if parent.as_os_str().is_empty() || parent.exists() {
                    break;
                }
                top = parent.to_path_buf();
            }
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            self.dirs.push(top);
        }
        Ok(())
    }

    /// Writes through a temporary sibling and renames into place.
    fn write(&mut self, path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let tmp = path.with_extension("partial");
        self.files.push(tmp.clone());
        {
            let f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush().with_context(|| format!("writing {}", tmp.display()))?;
        }
        fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
        self.files.pop();
        self.files.push(path.to_path_buf());
        Ok(())
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir_all(d);
        }
    }
}

pub struct CompileArgs<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub codebook: Option<&'a Path>,
    pub workers: Option<usize>,
}

pub fn compile(args: &CompileArgs) -> Result<String> {
    let cfg = RunConfig::load(args.config)?;
    let pool = Pool::new(args.workers)?;
    let locations = cfg.locations()?;
    let codebook = compile_codebook(&cfg.scene, &locations, &cfg.compile_options(), &pool)?;
    let out = cfg.output_dir(args.out);
    let dir = cfg.codebook_dir(&out, args.codebook);

    let mut outputs = Outputs::new();
    outputs.ensure_dir(&dir)?;
    for name in [store::PAYLOAD, store::MANIFEST] {
        outputs.files.push(dir.join(name));
    }
    store::save_codebook(&codebook, &cfg.scene, &dir)?;
    outputs.commit();
    Ok(format!(
        "compile entries={} elements={} fingerprint={} codebook={}",
        codebook.len(),
        codebook.element_count,
        codebook.fingerprint,
        dir.display()
    ))
}

pub struct RunArgs<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub codebook: Option<&'a Path>,
    pub workers: Option<usize>,
    pub experiment: Experiment,
    pub seed_override: Option<u64>,
}

fn load_for_scene(cfg: &RunConfig, out: &Path, codebook: Option<&Path>) -> Result<Codebook> {
    let dir = cfg.codebook_dir(out, codebook);
    store::load_codebook(&dir, &cfg.scene)
        .with_context(|| format!("loading codebook from {}", dir.display()))
}

pub fn run(args: &RunArgs) -> Result<String> {
    let cfg = RunConfig::load(args.config)?;
    let out = cfg.output_dir(args.out);
    let codebook = load_for_scene(&cfg, &out, args.codebook)?;
    let mut experiment: ExperimentConfig = cfg.experiment.clone();
    if let Some(seed) = args.seed_override {
        experiment.seed = seed;
    }
    let pool = Pool::new(args.workers)?;
    let geometry = build_geometry(&cfg.scene)?;
    let eval = Evaluator::new(&cfg.scene, &geometry, &codebook, &experiment)?;

    let names = args.experiment.names();
    let mut outputs = Outputs::new();
    outputs.ensure_dir(&out)?;
    for name in names {
        match *name {
            "alloc" => {
                let cells = eval.run_allocation(&pool)?;
                outputs.write(&out.join(report::ALLOC_CSV), |w| {
                    Ok(report::write_alloc(w, &cells)?)
                })?;
            }
            "ee" => {
                let cells = eval.run_energy(&pool)?;
                outputs.write(&out.join(report::EE_CSV), |w| Ok(report::write_ee(w, &cells)?))?;
            }
            _ => {
                let tiers = eval.run_admission(&pool)?;
                outputs.write(&out.join(report::ADMISSION_CSV), |w| {
                    Ok(report::write_admission(w, &tiers)?)
                })?;
            }
        }
    }
    let manifest = RunManifest {
        command: "run",
        experiments: names,
        seed: experiment.seed,
        fingerprint: &codebook.fingerprint,
        compiler: &codebook.version,
        config_text: &cfg.text,
    }
    .render();
    outputs.write(&out.join(report::RUN_MANIFEST), |w| {
        Ok(w.write_all(manifest.as_bytes())?)
    })?;
    outputs.commit();
    Ok(format!(
        "run experiments={} seed={} realizations={} out={}",
        names.join(","),
        experiment.seed,
        experiment.realizations,
        out.display()
    ))
}

pub struct SnrMapArgs<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub codebook: Option<&'a Path>,
}

pub fn write_raster<W: Write>(out: W, raster: &SnrRaster) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "snr_db"])?;
    for (p, v) in raster.points.iter().zip(&raster.snr_db) {
        w.write_record([p.x.to_string(), p.y.to_string(), p.z.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn snrmap(args: &SnrMapArgs) -> Result<String> {
    let cfg = RunConfig::load(args.config)?;
    let map = cfg
        .file
        .snrmap
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [snrmap] section"))?;
    let grid = map.grid();
    grid.validate(&cfg.scene).context("snrmap grid")?;
    let out = cfg.output_dir(args.out);
    let geometry = build_geometry(&cfg.scene)?;
    let state = match map.source.as_str() {
        "dark" => RisState::dark(geometry.len()),
        "entry" => {
            let codebook = load_for_scene(&cfg, &out, args.codebook)?;
            let i = map.entry.ok_or_else(|| anyhow!("snrmap.source = \"entry\" needs snrmap.entry"))?;
            codebook
                .entries
                .get(i)
                .ok_or_else(|| anyhow!("snrmap.entry {i} out of range (codebook has {})", codebook.len()))?
                .state()
        }
        "alloc" => {
            let codebook = load_for_scene(&cfg, &out, args.codebook)?;
            let users = map
                .users
                .as_ref()
                .filter(|u| !u.is_empty())
                .ok_or_else(|| anyhow!("snrmap.source = \"alloc\" needs snrmap.users"))?;
            let mut entries = Vec::with_capacity(users.len());
            let mut tiers = Vec::with_capacity(users.len());
            for &(i, t) in users {
                entries.push(codebook.entries.get(i).ok_or_else(|| {
                    anyhow!("snrmap.users: entry {i} out of range (codebook has {})", codebook.len())
                })?);
                tiers.push(cfg.experiment.tiers.tier(t)?);
            }
            let params = cfg.experiment.alloc.with_bits(map.bits.unwrap_or(1));
            let mut cc = allocate(&entries, &tiers, &params)?;
            if map.energy_off.unwrap_or(false) {
                let v: Vec<&[f64]> = entries.iter().map(|e| e.influence.as_slice()).collect();
                cc = apply_energy_off(&cc, &v, &cfg.experiment.ee)?;
            }
            cc.to_state()
        }
        other => bail!("snrmap.source must be \"entry\", \"alloc\" or \"dark\", got {other:?}"),
    };
    let solver = IncidentSolver::new(&cfg.scene, &geometry)?;
    let solution = solver.solve(&state)?;
    let raster = snr_raster(&cfg.scene, &geometry, &state, &solution.field, &grid)?;

    let mut outputs = Outputs::new();
    outputs.ensure_dir(&out)?;
    let path = out.join(SNRMAP_CSV);
    outputs.write(&path, |w| Ok(write_raster(w, &raster)?))?;
    outputs.commit();
    let peak = raster.argmax().map(|i| (raster.points[i], raster.snr_db[i]));
    let peak = peak
        .map(|(p, v)| format!("peak_db={v} at=({},{},{})", p.x, p.y, p.z))
        .unwrap_or_default();
    Ok(format!("snrmap points={} {peak} out={}", raster.points.len(), path.display()))
}
