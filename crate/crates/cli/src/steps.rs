use hybridcast::preprocess::{
    ImputeMethod, NormalizeMethod, OutlierMethod, PipelineStep, ReplaceStrategy,
};

/// Parses `op[:arg[:arg]]` shorthand or a JSON object into a step.
pub fn parse_step(raw: &str) -> Result<PipelineStep, String> {
    let raw = raw.trim();
    if raw.starts_with('{') {
        return serde_json::from_str(raw).map_err(|e| format!("invalid step {raw}: {e}"));
    }
    let parts: Vec<&str> = raw.split(':').collect();
    let arg = |i: usize| parts.get(i).copied();
    let bad = || format!("invalid step '{raw}'");
    let step = match parts[0] {
        "log" if parts.len() == 1 => PipelineStep::Log,
        "difference" | "diff" => PipelineStep::Difference {
            lag: arg(1).map_or(Ok(1), str::parse).map_err(|_| bad())?,
        },
        "normalize" => PipelineStep::Normalize {
            method: match arg(1).unwrap_or("minmax") {
                "minmax" => NormalizeMethod::Minmax,
                "zscore" => NormalizeMethod::Zscore,
                _ => return Err(bad()),
            },
        },
        "impute" => PipelineStep::Impute {
            method: match arg(1).unwrap_or("linear_interpolation") {
                "linear_interpolation" | "linear" => ImputeMethod::LinearInterpolation,
                "forward_fill" | "ffill" => ImputeMethod::ForwardFill,
                _ => return Err(bad()),
            },
        },
        "outliers" => {
            let detect = match arg(1).unwrap_or("zscore") {
                "zscore" => OutlierMethod::zscore(),
                "iqr" => OutlierMethod::iqr(),
                _ => return Err(bad()),
            };
            let replace = match arg(2).unwrap_or("interpolate") {
                "interpolate" => ReplaceStrategy::Interpolate,
                "clip" => ReplaceStrategy::ClipToBound { bound: detect },
                _ => return Err(bad()),
            };
            PipelineStep::Outliers { detect, replace }
        }
        _ => return Err(bad()),
    };
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand() {
        assert_eq!(parse_step("log").unwrap(), PipelineStep::Log);
        assert_eq!(
            parse_step("difference:12").unwrap(),
            PipelineStep::Difference { lag: 12 }
        );
        assert_eq!(
            parse_step("diff").unwrap(),
            PipelineStep::Difference { lag: 1 }
        );
        assert_eq!(
            parse_step("impute:forward_fill").unwrap(),
            PipelineStep::Impute {
                method: ImputeMethod::ForwardFill
            }
        );
        assert_eq!(
            parse_step("outliers:iqr:clip").unwrap(),
            PipelineStep::Outliers {
                detect: OutlierMethod::iqr(),
                replace: ReplaceStrategy::ClipToBound {
                    bound: OutlierMethod::iqr()
                }
            }
        );
    }

    #[test]
    fn json_form_matches_shorthand() {
        assert_eq!(
            parse_step(r#"{"op":"normalize","method":"zscore"}"#).unwrap(),
            parse_step("normalize:zscore").unwrap()
        );
    }

    #[test]
    fn rejects_unknown() {
        assert!(parse_step("smooth").is_err());
        assert!(parse_step("difference:x").is_err());
        assert!(parse_step("log:2").is_err());
    }
}
