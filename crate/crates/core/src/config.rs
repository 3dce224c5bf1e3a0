//! TOML run configuration: space, maps, control function, inequality,
//! witnesses, run settings, an optional map family and expected results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::contraction::{CheckOptions, InequalityForm, MapTriple, ZeroMode, TOL_ZERO};
use crate::dsl::{parse_piecewise, parse_rational, InverseOptions, PiecewiseFn, PreimagePolicy, Rational};
use crate::error::{Error, Result};
use crate::family::{Coef, MapFamily, Override};
use crate::hypotheses::{LimitOptions, WitnessSequence, DEFAULT_SAMPLES, LIMIT_TOL};
use crate::metric::{Domain, Interval, MetricSpace};
use crate::orbit::{DEFAULT_MAX_N, DEFAULT_TOL_FIX};
use crate::phi::{default_grid, PhiSpec, T_MAX};

/// A real written either as a TOML number or as an exact rational string
/// such as `"5/12"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Num(f64),
    Text(String),
}

impl Real {
    pub fn value(&self) -> Result<f64> {
        match self {
            Real::Num(v) => Ok(*v),
            Real::Text(t) => {
                let r = parse_rational(t).map_err(|e| Error::Config(format!("bad number {t:?}: {e}")))?;
                Ok(ratio_f64(r))
            }
        }
    }

    pub fn exact(&self) -> Result<Rational> {
        match self {
            Real::Text(t) => parse_rational(t).map_err(|e| Error::Config(format!("bad number {t:?}: {e}"))),
            Real::Num(v) => {
                Rational::approximate_float(*v).ok_or_else(|| Error::Config(format!("{v} has no rational form")))
            }
        }
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real::Num(v)
    }
}

impl From<&str> for Real {
    fn from(v: &str) -> Self {
        Real::Text(v.to_string())
    }
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Intervals such as `"(0,1]"` or `"[0,inf)"`, joined by `" U "`.
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsConfig {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "S")]
    pub s: String,
    /// Defaults to `S`.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PreimagePolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityConfig {
    pub form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_mode: Option<ZeroMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub a: Real,
    pub b: Real,
    pub n0: usize,
    pub limit: Real,
    /// Common limit point for reciprocal continuity; defaults to `limit`
    /// images under `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x0: Vec<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_fix: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    /// Interval text such as `"(1/2,1]"`; sweeps default to the whole space.
    pub sweep_range: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decay_t0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideConfig {
    pub piece: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<[Real; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<[Real; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<[Real; 2]>,
}

/// `S_n` is `maps.S` with the listed pieces replaced by bodies whose
/// coefficients are `a + b/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default)]
    pub overrides: Vec<OverrideConfig>,
    pub n_list: Vec<u32>,
    pub x0: Real,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    /// Pointwise grid `k / grid` for `k = 1..=grid`, kept inside the space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// One expected outcome of a corpus bundle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub id: String,
    pub check: String,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_fix: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<InequalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_mode: Option<ZeroMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_domain: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// `"S"` or `"T"`: the partner of `A` in a pair hypothesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    /// Report values that must match within `match_tol`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Real>,
    /// Report values that must not exceed the given bound.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub at_most: BTreeMap<String, Real>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub text: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lists: BTreeMap<String, Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_tol: Option<f64>,
    /// Id of the discrepancy this expectation reproduces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discrepancy {
    pub id: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub space: SpaceConfig,
    pub maps: MapsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<InequalityConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witness: BTreeMap<String, WitnessConfig>,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Expectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discrepancy: Vec<Discrepancy>,
}

/// Parses `"(0,1]"`, `"[0,inf)"` or a union like `"[0,0] U [1,1]"`.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let parts = text
        .split(" U ")
        .map(|p| parse_interval(p.trim()))
        .collect::<Result<Vec<_>>>()?;
    Domain::new(parts).map_err(|e| Error::Config(format!("domain {text:?}: {e}")))
}

fn parse_interval(text: &str) -> Result<Interval> {
    let bad = || Error::Config(format!("interval {text:?} must look like (a,b], [a,inf) ..."));
    let lo_closed = match text.chars().next() {
        Some('[') => true,
        Some('(') => false,
        _ => return Err(bad()),
    };
    let hi_closed = match text.chars().last() {
        Some(']') => true,
        Some(')') => false,
        _ => return Err(bad()),
    };
    let inner = &text[1..text.len() - 1];
    let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
    let bound = |s: &str| -> Result<f64> {
        match s.trim() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            t => Real::Text(t.to_string()).value(),
        }
    };
    Interval::new(bound(lo)?, bound(hi)?, lo_closed, hi_closed)
        .map_err(|e| Error::Config(format!("interval {text:?}: {e}")))
}

fn map(name: &str, text: &str) -> Result<PiecewiseFn> {
    parse_piecewise(text).map_err(|e| Error::Config(format!("map {name}: {e}")))
}

fn coef(pair: &[Real; 2]) -> Result<Coef> {
    Ok(Coef::new(pair[0].exact()?, pair[1].exact()?))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds every declared object once so that errors surface before a run.
    pub fn validate(&self) -> Result<()> {
        self.triple()?;
        self.sweep_range()?;
        self.phi()?;
        self.form(None)?;
        self.witnesses()?;
        self.family()?;
        for e in &self.expect {
            if let Some(w) = &e.witness {
                if !self.witness.contains_key(w) {
                    return Err(Error::Config(format!(
                        "expectation {} names unknown witness {w:?}",
                        e.id
                    )));
                }
            }
            if let Some(d) = &e.discrepancy {
                if !self.discrepancy.iter().any(|x| &x.id == d) {
                    return Err(Error::Config(format!(
                        "expectation {} names unknown discrepancy {d:?}",
                        e.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> Result<MetricSpace> {
        Ok(MetricSpace::usual(parse_domain(&self.space.domain)?))
    }

    pub fn triple(&self) -> Result<MapTriple> {
        let a = map("A", &self.maps.a)?;
        let s = map("S", &self.maps.s)?;
        let t = match &self.maps.t {
            Some(t) => map("T", t)?,
            None => s.clone(),
        };
        let inverse = InverseOptions::with_policy(self.maps.policy.unwrap_or_default());
        Ok(MapTriple::new(self.space()?, a, s, t)
            .map_err(|e| Error::Config(e.to_string()))?
            .with_inverse(inverse))
    }

    /// The validated control function, if one is declared.
    pub fn phi(&self) -> Result<Option<PhiSpec>> {
        let Some(p) = &self.phi else { return Ok(None) };
        let mut phi = PhiSpec::new(map("phi", &p.body)?);
        let report = phi.validate(&default_grid(p.t_max.unwrap_or(T_MAX)), 0.0)?;
        if !report.is_pass() {
            return Err(Error::Config(format!("phi is not in the class: {report}")));
        }
        Ok(Some(phi))
    }

    /// The inequality of `over`, or of the `[inequality]` section.
    pub fn form(&self, over: Option<&InequalityConfig>) -> Result<Option<InequalityForm>> {
        let Some(c) = over.or(self.inequality.as_ref()) else {
            return Ok(None);
        };
        let num = |v: &Option<Real>, what: &str| -> Result<f64> {
            v.as_ref()
                .ok_or_else(|| Error::Config(format!("form {} needs {what}", c.form)))?
                .value()
        };
        let phi = || -> Result<PhiSpec> {
            self.phi()?
                .ok_or_else(|| Error::Config(format!("form {} needs a [phi] section", c.form)))
        };
        let form = match c.form.as_str() {
            "jaggi-two-map" => InequalityForm::JaggiTwoMap {
                alpha: num(&c.alpha, "alpha")?,
                beta: num(&c.beta, "beta")?,
            },
            "phaneendra-linear" => InequalityForm::PhaneendraLinear {
                alpha: num(&c.alpha, "alpha")?,
                beta: num(&c.beta, "beta")?,
                gamma: num(&c.gamma, "gamma")?,
            },
            "lambda-max" => InequalityForm::LambdaMax(num(&c.lambda, "lambda")?),
            "phi-rational" => InequalityForm::PhiRational(phi()?),
            "phi-rational-two-map" => InequalityForm::PhiRationalTwoMap(phi()?),
            "phi-rational-single" => InequalityForm::PhiRationalSingle(phi()?),
            "phi-product" => InequalityForm::PhiProduct(phi()?),
            other => return Err(Error::Config(format!("unknown inequality form {other:?}"))),
        };
        form.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(Some(form))
    }

    pub fn zero_mode(&self, over: Option<&InequalityConfig>) -> ZeroMode {
        over.and_then(|c| c.zero_mode)
            .or(self.inequality.as_ref().and_then(|c| c.zero_mode))
            .unwrap_or_default()
    }

    pub fn check_options(&self, zero_mode: ZeroMode) -> CheckOptions {
        CheckOptions {
            tol: self.run.tol.unwrap_or(1e-12),
            tol_zero: TOL_ZERO,
            zero_mode,
        }
    }

    pub fn witnesses(&self) -> Result<BTreeMap<String, (WitnessSequence, f64)>> {
        let space = self.space()?;
        self.witness
            .iter()
            .map(|(name, w)| {
                let limit = w.limit.value()?;
                let seq = WitnessSequence::new(w.a.value()?, w.b.value()?, w.n0, limit)
                    .map_err(|e| Error::Config(format!("witness {name}: {e}")))?;
                if !space.contains(seq.at(seq.n0)) {
                    return Err(Error::Config(format!(
                        "witness {name}: x_{} = {} is outside the space",
                        seq.n0,
                        seq.at(seq.n0)
                    )));
                }
                let t = match &w.t {
                    Some(t) => t.value()?,
                    None => limit,
                };
                Ok((name.clone(), (seq, t)))
            })
            .collect()
    }

    pub fn limit_options(&self) -> LimitOptions {
        LimitOptions {
            samples: self.run.samples.unwrap_or(DEFAULT_SAMPLES),
            tol: self.run.limit_tol.unwrap_or(LIMIT_TOL),
        }
    }

    pub fn tol_fix(&self) -> f64 {
        self.run.tol_fix.unwrap_or(DEFAULT_TOL_FIX)
    }

    pub fn max_n(&self) -> usize {
        self.run.max_n.unwrap_or(DEFAULT_MAX_N)
    }

    pub fn x0s(&self) -> Result<Vec<f64>> {
        self.run.x0.iter().map(Real::value).collect()
    }

    pub fn sweep_range(&self) -> Result<Option<Interval>> {
        self.run.sweep_range.as_deref().map(parse_interval).transpose()
    }

    pub fn family(&self) -> Result<Option<MapFamily>> {
        let Some(f) = &self.family else { return Ok(None) };
        let overrides = f
            .overrides
            .iter()
            .map(|o| {
                let ov = match (&o.constant, &o.slope, &o.intercept) {
                    (Some(c), None, None) => Override::Constant(coef(c)?),
                    (None, Some(s), Some(i)) => Override::Affine {
                        slope: coef(s)?,
                        intercept: coef(i)?,
                    },
                    _ => {
                        return Err(Error::Config(format!(
                            "override of piece {} needs either constant or slope and intercept",
                            o.piece
                        )))
                    }
                };
                Ok((o.piece, ov))
            })
            .collect::<Result<Vec<_>>>()?;
        let fam = MapFamily::new(
            self.space()?,
            map("S", &self.maps.s)?,
            overrides,
            map("A", &self.maps.a)?,
        )
        .map_err(|e| Error::Config(format!("family: {e}")))?;
        Ok(Some(fam))
    }

    /// Grid `k / m` for `k = 1..=m` restricted to the space.
    pub fn family_grid(&self) -> Result<Vec<f64>> {
        let m = self.family.as_ref().and_then(|f| f.grid).unwrap_or(50);
        let space = self.space()?;
        Ok((1..=m)
            .map(|k| k as f64 / m as f64)
            .filter(|&x| space.contains(x))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"

[space]
domain = "(0,2]"

[maps]
A = "piece (0,1/2]: 2; piece (1/2,1]: 2*x - 1; piece (1,2]: 2"
S = "piece (0,1/2]: 3/2; piece (1/2,1]: x; piece (1,2]: 3/2"
T = "piece (0,1/2]: 5/4; piece (1/2,1]: x; piece (1,2]: 5/4"

[phi]
body = "piece [0,inf): x/2"

[inequality]
form = "phi-rational"
zero_mode = "lenient"

[witness.up]
a = 1
b = -1
n0 = 5
limit = "1"

[run]
x0 = [0.6, "3/4"]
"#;

    #[test]
    fn parses_and_builds() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.x0s().unwrap(), vec![0.6, 0.75]);
        assert_eq!(c.zero_mode(None), ZeroMode::Lenient);
        assert!(matches!(c.form(None).unwrap(), Some(InequalityForm::PhiRational(_))));
        assert_eq!(c.witnesses().unwrap()["up"].0.n0, 5);
        assert_eq!(c.triple().unwrap().t.eval(0.25).unwrap(), 1.25);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        let again = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn domains() {
        let d = parse_domain("[0,0] U [1,1]").unwrap();
        assert_eq!(d.parts().len(), 2);
        assert!(parse_domain("[0,inf)").unwrap().contains(1e9));
        assert!(parse_domain("0,1").is_err());
        assert!(parse_domain("(1,0)").is_err());
    }

    #[test]
    fn config_errors() {
        let bad_key = SAMPLE.replace("zero_mode = \"lenient\"", "zero = 1");
        assert!(matches!(RunConfig::from_toml(&bad_key), Err(Error::Config(_))));
        let bad_map = SAMPLE.replace("2*x - 1;", "2*x - ;");
        assert!(matches!(RunConfig::from_toml(&bad_map), Err(Error::Config(_))));
        let not_self = SAMPLE.replace("piece (1,2]: 3/2\"", "piece (1,2]: 3\"");
        assert!(matches!(RunConfig::from_toml(&not_self), Err(Error::Config(_))));
        let bad_form = SAMPLE.replace("phi-rational", "phi-irrational");
        assert!(matches!(RunConfig::from_toml(&bad_form), Err(Error::Config(_))));
        let bad_phi = SAMPLE.replace("x/2\"", "x\"");
        assert!(matches!(RunConfig::from_toml(&bad_phi), Err(Error::Config(_))));
        let far = SAMPLE.replace("n0 = 5", "n0 = 1");
        assert!(matches!(RunConfig::from_toml(&far), Err(Error::Config(_))));
    }
}
