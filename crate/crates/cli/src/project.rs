//! Project file and input loading.

use std::fs;
use std::path::{Path, PathBuf};

use cellplan::geo::{parse_ascii_grid_named, RasterGrid};
use cellplan::propagation::{SiteConfig, StudyArea, DEFAULT_BAND_THRESHOLDS};
use serde::Deserialize;

use crate::{CliError, CliResult, StudyArgs};

/// Paths are resolved relative to the project file's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub dtm: PathBuf,
    pub clutter: PathBuf,
    pub sites: PathBuf,
    #[serde(default)]
    pub budget: Option<PathBuf>,
    #[serde(default = "default_thresholds")]
    pub band_thresholds: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_thresholds() -> Vec<f64> {
    DEFAULT_BAND_THRESHOLDS.to_vec()
}

impl ProjectConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        let mut cfg: ProjectConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dtm = base.join(&cfg.dtm);
        cfg.clutter = base.join(&cfg.clutter);
        cfg.sites = base.join(&cfg.sites);
        cfg.budget = cfg.budget.map(|b| base.join(b));
        cfg.output_dir = cfg.output_dir.map(|o| base.join(o));
        for file in [Some(&cfg.dtm), Some(&cfg.clutter), Some(&cfg.sites), cfg.budget.as_ref()]
            .into_iter()
            .flatten()
        {
            if !file.is_file() {
                return Err(CliError::Input(format!(
                    "{}: referenced file {} does not exist",
                    path.display(),
                    file.display()
                )));
            }
        }
        check_thresholds(&cfg.band_thresholds)
            .map_err(|m| CliError::Input(format!("{}: band_thresholds {m}", path.display())))?;
        Ok(cfg)
    }
}

pub fn check_thresholds(t: &[f64]) -> Result<(), String> {
    if t.is_empty() {
        return Err("must not be empty".into());
    }
    if t.iter().any(|v| !v.is_finite()) || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("must be finite and strictly increasing, got {t:?}"));
    }
    Ok(())
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

pub fn load_raster(path: &Path) -> CliResult<RasterGrid> {
    Ok(parse_ascii_grid_named(&read_text(path)?, &path.display().to_string())?)
}

pub fn load_sites(path: &Path) -> CliResult<SiteConfig> {
    SiteConfig::from_json(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Fully loaded study inputs.
pub struct Study {
    pub area: StudyArea,
    pub sites: SiteConfig,
    pub sites_path: PathBuf,
    pub project: Option<ProjectConfig>,
}

fn pick(flag: &Option<PathBuf>, project: Option<&PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.clone()
        .or_else(|| project.cloned())
        .ok_or_else(|| CliError::Input(format!("--{name} is required (or pass --project)")))
}

pub fn load_study(args: &StudyArgs) -> CliResult<Study> {
    let project = args.project.as_deref().map(ProjectConfig::load).transpose()?;
    let dtm = pick(&args.dtm, project.as_ref().map(|p| &p.dtm), "dtm")?;
    let clutter = pick(&args.clutter, project.as_ref().map(|p| &p.clutter), "clutter")?;
    let sites_path = pick(&args.sites, project.as_ref().map(|p| &p.sites), "sites")?;
    let area = StudyArea::new(load_raster(&dtm)?, load_raster(&clutter)?)
        .map_err(|e| CliError::Input(format!("{} vs {}: {e}", dtm.display(), clutter.display())))?;
    let sites = load_sites(&sites_path)?;
    area.check_clutter_ids(&sites.clutter)
        .map_err(|e| CliError::Input(format!("{}: {e}", clutter.display())))?;
    Ok(Study {
        area,
        sites,
        sites_path,
        project,
    })
}
