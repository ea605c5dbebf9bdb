use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use icl_core::bayes::GaussianPrior;
use icl_core::bridge::{Predictor, PredictorSpec, SubprocessPredictor};
use icl_core::sampler::{DiscreteSupport, McmcPrior};
use icl_core::tasks::{FamilyKind, FeatureMap, InputDistribution, PromptSet, PromptSetHeader};
use serde_json::{Map, Value};

pub fn load_prompts(path: &Path) -> Result<PromptSet> {
    let set = PromptSet::read_jsonl(path)?;
    if set.prompts.is_empty() {
        bail!("{}: no prompts", path.display());
    }
    Ok(set)
}

/// Parses `0,1,5` and inclusive ranges such as `0-10` or `0..=10`.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let mut ks = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part.split_once("..=").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
                if b < a {
                    bail!("empty k range `{part}`");
                }
                ks.extend(a..=b);
            }
            None => ks.push(part.parse().with_context(|| format!("bad k `{part}`"))?),
        }
    }
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        bail!("empty k list");
    }
    Ok(ks)
}

/// The single family of a prompt set, if it has exactly one.
pub fn sole_family(header: &PromptSetHeader) -> Option<&FamilyKind> {
    match header.mixture.families.as_slice() {
        [f] => Some(&f.kind),
        _ => None,
    }
}

fn half_width(input: &InputDistribution) -> Result<f64> {
    match input {
        InputDistribution::Uniform { low, high } if (*low + *high).abs() <= f64::EPSILON * high.abs() => Ok(*high),
        _ => bail!("Fourier bases need inputs uniform on a symmetric interval [-L, L]"),
    }
}

/// `fourier:N`, `monomial:S`, `monomial-full`, `poly2`, `haar` or `rff`.
///
/// `S` is either `gold` (the pairs of the prompt set's monomial family) or a
/// comma-separated list of 1-based pairs such as `1-2,3-3`.
pub fn parse_basis(s: &str, header: &PromptSetHeader) -> Result<FeatureMap> {
    let d = header.input.dim();
    let family_map = || {
        sole_family(header)
            .and_then(FamilyKind::feature_map)
            .ok_or_else(|| anyhow!("basis `{s}` is taken from the prompt family, but the prompt set has no single basis family"))
    };
    let (head, arg) = match s.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s, None),
    };
    let map = match (head, arg) {
        ("fourier", Some(n)) => FeatureMap::Fourier {
            max_freq: n.parse().with_context(|| format!("bad frequency count `{n}`"))?,
            half_width: half_width(&header.input)?,
        },
        ("monomial", Some("gold")) => match family_map()? {
            m @ FeatureMap::Monomials { .. } => m,
            _ => bail!("the prompt family is not a monomial family"),
        },
        ("monomial", Some(list)) => {
            let pairs = list
                .split(',')
                .map(|pair| {
                    let (i, j) = pair
                        .split_once('-')
                        .ok_or_else(|| anyhow!("monomial pairs look like `i-j`, got `{pair}`"))?;
                    Ok((i.trim().parse()?, j.trim().parse()?))
                })
                .collect::<Result<Vec<(usize, usize)>>>()?;
            FeatureMap::Monomials { d, pairs }
        }
        ("monomial-full", None) => FeatureMap::all_monomials(d),
        ("poly2", None) => FeatureMap::Poly2 { d },
        ("haar", None) => match family_map() {
            Ok(m @ FeatureMap::Haar { .. }) => m,
            _ => FeatureMap::Haar { max_level: 3 },
        },
        ("rff", None) => match family_map()? {
            m @ FeatureMap::Rff { .. } => m,
            _ => bail!("the prompt family has no random Fourier features"),
        },
        _ => bail!("unknown basis `{s}`"),
    };
    map.validate()?;
    Ok(map)
}

fn parse_spec_json(text: &str) -> Result<PredictorSpec> {
    serde_json::from_str(text).context("invalid predictor JSON")
}

/// A built-in predictor from inline JSON, `@file.json` or a bare name such as
/// `ols`; `None` when the argument is none of these.
pub fn builtin_spec(arg: &str) -> Result<Option<PredictorSpec>> {
    let arg = arg.trim();
    if let Some(path) = arg.strip_prefix('@') {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return parse_spec_json(&text).map(Some);
    }
    if arg.starts_with('{') {
        return parse_spec_json(arg).map(Some);
    }
    Ok(serde_json::from_value(serde_json::json!({ "name": arg })).ok())
}

/// A built-in predictor, or else a subprocess running `arg` as a shell command.
pub fn predictor(arg: &str, timeout: Option<std::time::Duration>) -> Result<Box<dyn Predictor>> {
    if let Some(spec) = builtin_spec(arg)? {
        return Ok(Box::new(spec.build()));
    }
    subprocess(arg, timeout)
}

pub fn subprocess(cmd: &str, timeout: Option<std::time::Duration>) -> Result<Box<dyn Predictor>> {
    let name = cmd.split_whitespace().next().unwrap_or("subprocess").to_string();
    let p = match timeout {
        Some(t) => SubprocessPredictor::spawn_with_timeout(name, cmd, t)?,
        None => SubprocessPredictor::spawn(name, cmd)?,
    };
    Ok(Box::new(p))
}

/// Closed-form posterior-mean predictor: explicit parameters, or the
/// prior the prompt set was drawn from.
pub fn pme_spec(name: &str, params: Option<Value>, header: &PromptSetHeader) -> Result<PredictorSpec> {
    let mut obj = match params {
        Some(Value::Object(m)) => m,
        Some(_) => bail!("--params must hold a JSON object"),
        None => inferred_params(name, header)?,
    };
    obj.insert("name".into(), Value::String(name.into()));
    serde_json::from_value(Value::Object(obj)).with_context(|| format!("invalid parameters for `{name}`"))
}

fn inferred_params(name: &str, header: &PromptSetHeader) -> Result<Map<String, Value>> {
    let d = header.input.dim();
    let family = sole_family(header);
    let value = match (name, family) {
        ("gaussian", Some(FamilyKind::DenseLinear { prior })) => serde_json::json!({ "prior": prior }),
        ("gaussian", Some(kind)) if kind.feature_map().is_some() => {
            let map = kind.feature_map().unwrap();
            serde_json::json!({ "prior": GaussianPrior::standard(map.dim()), "features": map })
        }
        ("gaussian", _) => serde_json::json!({ "prior": GaussianPrior::standard(d) }),
        ("skewed", _) => serde_json::json!({ "d": d }),
        ("gmm", Some(FamilyKind::GmmLinear { components, alpha })) => {
            serde_json::json!({ "components": components, "alpha": alpha })
        }
        ("dmmse", Some(FamilyKind::NoisyLinearDiscrete { tasks })) => serde_json::json!({ "tasks": tasks }),
        ("ridge", Some(kind)) if kind.noise_var() > 0.0 => serde_json::json!({ "noise_var": kind.noise_var() }),
        _ => bail!("cannot infer `{name}` parameters from this prompt set; pass --params"),
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => unreachable!(),
    }
}

/// `sign`, `z`, `lowrank:q,r` or `gaussian`.
pub fn parse_prior(s: &str, header: &PromptSetHeader) -> Result<McmcPrior> {
    let d = header.input.dim();
    Ok(match s.split_once(':') {
        None if s == "sign" => McmcPrior::Discrete {
            support: DiscreteSupport::sign_vectors(d),
        },
        None if s == "z" => McmcPrior::Discrete {
            support: DiscreteSupport::z_task(d),
        },
        None if s == "gaussian" => McmcPrior::Gaussian {
            prior: match sole_family(header) {
                Some(FamilyKind::DenseLinear { prior }) => prior.clone(),
                _ => GaussianPrior::standard(d),
            },
        },
        Some(("lowrank", qr)) => {
            let (q, r) = qr
                .split_once(',')
                .ok_or_else(|| anyhow!("low-rank priors look like `lowrank:q,r`"))?;
            McmcPrior::LowRank {
                q: q.trim().parse()?,
                r: r.trim().parse()?,
            }
        }
        _ => bail!("unknown prior `{s}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("0,2,1").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_k_list("3-5,0").unwrap(), vec![0, 3, 4, 5]);
        assert_eq!(parse_k_list("0..=2").unwrap(), vec![0, 1, 2]);
        assert!(parse_k_list("5-3").is_err());
        assert!(parse_k_list("").is_err());
    }

    #[test]
    fn bare_names_are_builtin() {
        assert!(matches!(builtin_spec("ols").unwrap(), Some(PredictorSpec::Ols)));
        assert!(matches!(builtin_spec("last-y").unwrap(), Some(PredictorSpec::LastY)));
        assert!(builtin_spec("python3 serve.py").unwrap().is_none());
        assert!(builtin_spec("{\"name\": \"ridge\"}").is_err());
    }
}
