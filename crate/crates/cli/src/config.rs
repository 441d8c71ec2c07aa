//! Optional TOML defaults, merged into the argument list before parsing so
//! config keys and flags are validated by the same parser.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::CliError;

const SUBCOMMANDS: [&str; 6] = ["synth", "preprocess", "fit", "forecast", "compare", "serve"];

/// Returns `argv` with `--key value` pairs appended for every config key
/// whose flag is not already present.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let args: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let Some(path) = config_path(&args) else {
        return Ok(argv);
    };
    let Some(sub) = args
        .iter()
        .skip(1)
        .find(|a| SUBCOMMANDS.contains(&a.as_str()))
        .cloned()
    else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid config {path}: {e}")))?;

    let command = Cli::command();
    let accepted: Vec<String> = command
        .find_subcommand(&sub)
        .map(|c| {
            c.get_arguments()
                .filter_map(|a| a.get_long())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    // Top-level keys only reach subcommands that take them.
    let mut pairs: Vec<(String, toml::Value)> = Vec::new();
    for (k, v) in &table {
        if !v.is_table() && accepted.contains(&k.replace('_', "-")) {
            pairs.push((k.clone(), v.clone()));
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(&sub) {
        for (k, v) in section {
            pairs.retain(|(key, _)| key != k);
            pairs.push((k.clone(), v.clone()));
        }
    }

    let mut out = argv;
    for (key, value) in pairs {
        let flag = format!("--{}", key.replace('_', "-"));
        let given = args
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        let values: Vec<toml::Value> = match value {
            toml::Value::Array(items) => items,
            other => vec![other],
        };
        for v in values {
            match v {
                toml::Value::String(s) => out.extend([flag.clone().into(), s.into()]),
                toml::Value::Integer(i) => out.extend([flag.clone().into(), i.to_string().into()]),
                toml::Value::Float(f) => out.extend([flag.clone().into(), f.to_string().into()]),
                toml::Value::Boolean(b) => out.extend([flag.clone().into(), b.to_string().into()]),
                other => {
                    return Err(CliError::Usage(format!(
                        "config key '{key}' has unsupported value {other}"
                    )));
                }
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(items: &[&str]) -> Vec<OsString> {
        items.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_win_over_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "seed = 3\n[fit]\nfamily = \"ets\"\nseed = 9\npreprocess = [\"log\"]\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let merged = merge(argv(&["hc", "--config", p, "fit", "--family", "lstm"])).unwrap();
        let merged: Vec<String> = merged
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect();
        assert_eq!(&merged[6..], ["--preprocess", "log", "--seed", "9"]);
        let serve = merge(argv(&["hc", "--config", p, "serve"])).unwrap();
        assert_eq!(serve.len(), 4);
    }

    #[test]
    fn missing_config_is_usage_error() {
        let err = merge(argv(&["hc", "--config", "/nonexistent/c.toml", "fit"])).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
