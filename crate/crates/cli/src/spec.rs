//! Resolved run description: parameters, model and numerical settings.

use std::path::{Path, PathBuf};

use ckn_core::model::DensityTable;
use ckn_core::optimizer::MinimizeConfig;
use ckn_core::params::rational::parse_rational;
use ckn_core::{CknError, CknParams, QuadConfig, RadialMeasure, RawParams, Result};
use serde::Serialize;

/// Everything a command needs, after defaults are filled in. Serialized into
/// every output header so a file can be traced back to its run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: String,
    pub params_file: Option<PathBuf>,
    pub raw_params: RawParams,
    pub model_spec: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub quad: QuadConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimize: Option<MinimizeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_multiple: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rhos: Vec<f64>,
}

impl RunSpec {
    pub fn new(command: &str, raw_params: RawParams, quad: QuadConfig) -> Self {
        Self {
            command: command.into(),
            params_file: None,
            raw_params,
            model_spec: None,
            out_dir: None,
            quad,
            minimize: None,
            c_multiple: None,
            c0: None,
            delta: None,
            seeds: Vec::new(),
            lambdas: Vec::new(),
            rhos: Vec::new(),
        }
    }
}

/// The desk parameter point, used when nothing else is given.
pub const DEFAULT_PARAMS: (u32, &str, &str, &str) = (4, "2", "2.5", "1");

pub fn resolve_params(
    file: Option<&Path>,
    n: Option<u32>,
    p: Option<&str>,
    q: Option<&str>,
    mu: Option<&str>,
) -> Result<RawParams> {
    let inline = n.is_some() || p.is_some() || q.is_some() || mu.is_some();
    match file {
        Some(_) if inline => {
            Err(CknError::InvalidInput("give either --params-file or --n/--p/--q/--mu, not both".into()))
        }
        Some(path) => {
            if !path.is_file() {
                return Err(CknError::InvalidInput(format!("params file {} does not exist", path.display())));
            }
            RawParams::from_json(&std::fs::read_to_string(path)?)
        }
        None if inline => match (n, p, q, mu) {
            (Some(n), Some(p), Some(q), Some(mu)) => RawParams::parse(n, p, q, mu),
            _ => Err(CknError::InvalidInput("--n, --p, --q and --mu must be given together".into())),
        },
        None => {
            let (n, p, q, mu) = DEFAULT_PARAMS;
            RawParams::parse(n, p, q, mu)
        }
    }
}

/// Parses `kind:key=value,...`. Recognized kinds: `euclidean`, `cone` (`c`),
/// `envelope` (`b0`) and `table` (a CSV path as the first item). The
/// dimension `n` defaults to the parameter dimension.
pub fn parse_model(spec: &str, params: &CknParams) -> Result<RadialMeasure> {
    let bad = |why: String| CknError::InvalidInput(format!("model spec {spec:?}: {why}"));
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut path = None;
    let mut n = params.n;
    let mut c = None;
    let mut b0 = None;
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((key, value)) = item.split_once('=') else {
            if kind == "table" && path.is_none() {
                path = Some(PathBuf::from(item));
                continue;
            }
            return Err(bad(format!("expected key=value, got {item:?}")));
        };
        let number = || value.trim().parse::<f64>().map_err(|_| bad(format!("{key} is not a number: {value:?}")));
        match key.trim() {
            "n" => n = value.trim().parse().map_err(|_| bad(format!("n is not an integer: {value:?}")))?,
            "c" => c = Some(number()?),
            "b0" => b0 = Some(number()?),
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    if n != params.n {
        return Err(bad(format!("model dimension {n} differs from parameter dimension {}", params.n)));
    }
    let unused =
        |name: &str, given: bool| if given { Err(bad(format!("{name} does not apply to {kind}"))) } else { Ok(()) };
    match kind {
        "euclidean" => {
            unused("c", c.is_some())?;
            unused("b0", b0.is_some())?;
            RadialMeasure::euclidean(n)
        }
        "cone" => {
            unused("b0", b0.is_some())?;
            RadialMeasure::cone(n, c.ok_or_else(|| bad("cone needs c".into()))?)
        }
        "envelope" => {
            unused("c", c.is_some())?;
            RadialMeasure::envelope_ricci(n, b0.ok_or_else(|| bad("envelope needs b0".into()))?)
        }
        "table" => {
            unused("c", c.is_some())?;
            unused("b0", b0.is_some())?;
            let path = path.ok_or_else(|| bad("table needs a CSV path".into()))?;
            if !path.is_file() {
                return Err(bad(format!("table file {} does not exist", path.display())));
            }
            RadialMeasure::tabulated(n, DensityTable::from_csv_path(&path)?)
        }
        other => Err(bad(format!("unknown model kind {other:?}"))),
    }
}

/// A positive finite number.
pub fn parse_positive(text: &str) -> std::result::Result<f64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("not a number: {text:?}"))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(format!("{text} is not positive and finite"));
    }
    Ok(v)
}

/// Accepts decimals and fractions such as `2.5` or `5/2`.
pub fn parse_number(text: &str) -> std::result::Result<String, String> {
    parse_rational(text).map(|_| text.to_string()).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> CknParams {
        CknParams::derive(&RawParams::parse(4, "2", "2.5", "1").unwrap()).unwrap()
    }

    #[test]
    fn model_specs() {
        let params = desk();
        assert_eq!(parse_model("euclidean:n=4", &params).unwrap(), RadialMeasure::euclidean(4).unwrap());
        assert_eq!(parse_model("euclidean", &params).unwrap(), RadialMeasure::euclidean(4).unwrap());
        assert_eq!(parse_model("cone:n=4,c=0.5", &params).unwrap(), RadialMeasure::cone(4, 0.5).unwrap());
        assert_eq!(
            parse_model("envelope:n=4,b0=0.3", &params).unwrap(),
            RadialMeasure::envelope_ricci(4, 0.3).unwrap()
        );
        for bad in ["cone:n=4", "cone:n=3,c=0.5", "sphere:n=4", "euclidean:c=2", "table:n=4", "table:missing.csv,n=4"] {
            let err = parse_model(bad, &params).unwrap_err();
            assert!(err.is_validation(), "{bad}: {err}");
        }
    }

    #[test]
    fn params_sources() {
        let raw = resolve_params(None, None, None, None, None).unwrap();
        assert_eq!(raw, RawParams::parse(4, "2", "2.5", "1").unwrap());
        assert!(resolve_params(None, Some(4), Some("2"), None, None).is_err());
    }

    #[test]
    fn positive_numbers() {
        assert_eq!(parse_positive(" 0.5").unwrap(), 0.5);
        assert!(parse_positive("-1").is_err());
        assert!(parse_positive("inf").is_err());
        assert!(parse_positive("x").is_err());
    }
}
