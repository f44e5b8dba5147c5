//! TOML pipeline configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use relcorpus::augment::AugmentConfig;
use relcorpus::fusion::DEFAULT_MAX_TOKENS;
use relcorpus::score::{Averaging, Regime, Scheme};
use relcorpus::translate::EndpointConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Semeval,
    #[default]
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Semeval => "txt",
            Format::Jsonl => "jsonl",
        }
    }

    /// `.jsonl` files are JSONL; anything else is SemEval text.
    pub fn of_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => Format::Jsonl,
            _ => Format::Semeval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Live HTTP endpoint from `[translate.endpoint]`.
    #[default]
    Http,
    /// Echoes its input; for dry runs.
    Identity,
    /// Serves answers from a recorded transcript.
    Replay,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateSection {
    pub backend: BackendKind,
    /// Transcript to append live answers to.
    pub record: Option<PathBuf>,
    /// Transcript to answer from; implies `backend = "replay"`.
    pub replay: Option<PathBuf>,
    pub endpoint: EndpointConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    pub max_tokens: Option<usize>,
}

impl Default for ExportSection {
    fn default() -> Self {
        ExportSection {
            max_tokens: Some(DEFAULT_MAX_TOKENS),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub scheme: Scheme,
    pub averaging: Averaging,
    pub include_empty_classes: bool,
}

impl Default for ScoreSection {
    fn default() -> Self {
        let r = Regime::official();
        ScoreSection {
            scheme: r.scheme,
            averaging: r.averaging,
            include_empty_classes: r.include_empty_classes,
        }
    }
}

impl ScoreSection {
    pub fn regime(&self) -> Regime {
        Regime {
            scheme: self.scheme,
            averaging: self.averaging,
            include_empty_classes: self.include_empty_classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub replacements: Option<PathBuf>,
    pub out: PathBuf,
    pub format: Format,
    pub seed: Option<u64>,
    pub augment: AugmentConfig,
    pub translate: TranslateSection,
    pub export: ExportSection,
    pub score: ScoreSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Vec::new(),
            replacements: None,
            out: PathBuf::from("out"),
            format: Format::default(),
            seed: None,
            augment: AugmentConfig::default(),
            translate: TranslateSection::default(),
            export: ExportSection::default(),
            score: ScoreSection::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; relative paths in it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.inputs.iter_mut().for_each(rebase);
        config.replacements.iter_mut().for_each(rebase);
        rebase(&mut config.out);
        config.translate.record.iter_mut().for_each(rebase);
        config.translate.replay.iter_mut().for_each(rebase);
        Ok(config)
    }

    /// The seed every seeded stage uses.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.augment.seed)
    }

    /// Pushes the effective seed down and checks referenced paths.
    pub fn finalize(&mut self) -> Result<()> {
        self.augment.seed = self.effective_seed();
        self.seed = Some(self.augment.seed);
        self.augment
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid [augment] section: {e}"))?;
        if self.translate.replay.is_some() {
            self.translate.backend = BackendKind::Replay;
        }
        for path in self
            .inputs
            .iter()
            .chain(&self.replacements)
            .chain(&self.translate.replay)
        {
            if !path.exists() {
                bail!("referenced path {} does not exist", path.display());
            }
        }
        if self.translate.backend == BackendKind::Replay && self.translate.replay.is_none() {
            bail!("replay backend needs a transcript path");
        }
        if self.export.max_tokens == Some(0) {
            bail!("export.max_tokens must be positive");
        }
        Ok(())
    }
}
