use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::input::InputDistribution;
use super::mixture::{sample_prompt, MixtureSpec};
use super::prompt::Prompt;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to regenerate a prompt set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSetConfig {
    pub mixture: MixtureSpec,
    pub input: InputDistribution,
    pub p: usize,
    #[serde(default = "one")]
    pub n_queries: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSetHeader {
    pub format_version: u32,
    pub mixture: MixtureSpec,
    pub input: InputDistribution,
    pub p: usize,
    pub n_queries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub header: PromptSetHeader,
    pub prompts: Vec<Prompt>,
}

/// Prompt `i` is sampled with seed `derive_seed(seed, i)` and gets id `i`.
pub fn generate_prompt_set(config: &PromptSetConfig, seed: u64, count: usize) -> Result<PromptSet> {
    config.mixture.validate(&config.input)?;
    let prompts = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut p = sample_prompt(&config.mixture, &config.input, config.p, config.n_queries, derive_seed(seed, i))?;
            p.id = i;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PromptSet {
        header: PromptSetHeader {
            format_version: FORMAT_VERSION,
            mixture: config.mixture.clone(),
            input: config.input.clone(),
            p: config.p,
            n_queries: config.n_queries,
            seed,
        },
        prompts,
    })
}

impl PromptSet {
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut emit = |line: String| writeln!(out, "{line}").map_err(|e| Error::io(path, e));
        emit(serde_json::to_string(&self.header)?)?;
        for p in &self.prompts {
            emit(serde_json::to_string(p)?)?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("{}: empty prompt file", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let header: PromptSetHeader = serde_json::from_str(&first)
            .map_err(|e| Error::Parse(format!("{}: header: {e}", path.display())))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "{}: unsupported format version {}",
                path.display(),
                header.format_version
            )));
        }
        let mut prompts = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Prompt = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 2)))?;
            p.validate()?;
            prompts.push(p);
        }
        Ok(PromptSet { header, prompts })
    }
}
