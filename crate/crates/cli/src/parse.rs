//! `kind:param` syntax for measures, families and margins.

use anyhow::{anyhow, bail, Result};
use grouprisk_core::{FamilyKind, Margin, RiskMeasure, TransferFamily};

fn number(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| anyhow!("{what}: cannot parse '{s}' as a number"))
}

fn numbers(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| number(v, what)).collect()
}

fn required<'a>(param: Option<&'a str>, spec: &str) -> Result<&'a str> {
    param.ok_or_else(|| anyhow!("'{spec}' needs a parameter after ':'"))
}

/// `es:0.01`, `var:0.05`, `entropic:1.0`, `negexp`.
pub fn parse_measure(s: &str) -> Result<RiskMeasure> {
    let (kind, param) = s.split_once(':').map_or((s, None), |(k, p)| (k, Some(p)));
    let need = || required(param, s);
    let m = match kind.trim().to_ascii_lowercase().as_str() {
        "es" | "cvar" => RiskMeasure::expected_shortfall(number(need()?, "expected shortfall level")?),
        "var" => RiskMeasure::value_at_risk(number(need()?, "value-at-risk level")?),
        "entropic" => RiskMeasure::entropic(number(need()?, "entropic parameter")?),
        "negexp" | "mean" => Ok(RiskMeasure::NegExpectation),
        other => bail!("unknown risk measure '{other}' (expected es, var, entropic or negexp)"),
    };
    m.map_err(|e| anyhow!("{e}"))
}

/// `granular`, `unconstrained`, `ntb`, `ptc:0.5`, `ftc:1.0`,
/// `ode:p=1,c1=1,c2=1`.
pub fn parse_family(s: &str) -> Result<FamilyKind> {
    let (kind, param) = s.split_once(':').map_or((s, None), |(k, p)| (k, Some(p)));
    let need = || required(param, s);
    Ok(match kind.trim().to_ascii_lowercase().as_str() {
        "granular" => FamilyKind::Granular,
        "unconstrained" => FamilyKind::Unconstrained,
        "ntb" => FamilyKind::NoBankruptcy,
        "ptc" => FamilyKind::ProportionalCost { pi: number(need()?, "proportional cost")? },
        "ftc" => FamilyKind::FixedCost { cost: number(need()?, "fixed cost")? },
        "ode" => {
            let (mut p, mut c1, mut c2) = (None, None, None);
            for part in need()?.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| anyhow!("fungibility parameter '{part}' is not key=value"))?;
                let v = number(v, k)?;
                match k.trim() {
                    "p" => p = Some(v),
                    "c1" => c1 = Some(v),
                    "c2" => c2 = Some(v),
                    other => bail!("unknown fungibility parameter '{other}' (expected p, c1, c2)"),
                }
            }
            FamilyKind::Fungibility {
                thresholds: [
                    c1.ok_or_else(|| anyhow!("fungibility needs c1"))?,
                    c2.ok_or_else(|| anyhow!("fungibility needs c2"))?,
                ],
                exponent: p.unwrap_or(1.0),
            }
        }
        other => bail!("unknown transfer family '{other}'"),
    })
}

/// `fixed:0.5,0.5` or `prop:0.2,0.2`.
pub fn parse_margin(s: &str) -> Result<Margin> {
    let (kind, values) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("margin '{s}' must look like fixed:a1,a2 or prop:l1,l2"))?;
    let v = numbers(values, "margin")?;
    Ok(match kind.trim().to_ascii_lowercase().as_str() {
        "fixed" => Margin::Fixed(v),
        "prop" | "proportional" => Margin::Proportional(v),
        other => bail!("unknown margin kind '{other}' (expected fixed or prop)"),
    })
}

pub fn build_family(family: &str, margin: Option<&str>) -> Result<TransferFamily> {
    let kind = parse_family(family)?;
    let margin = margin.map(parse_margin).transpose()?;
    TransferFamily::new(kind, margin).map_err(|e| anyhow!("{e}"))
}

pub fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>> {
    numbers(s, what)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures() {
        assert_eq!(parse_measure("es:0.01").unwrap(), RiskMeasure::ExpectedShortfall { alpha: 0.01 });
        assert_eq!(parse_measure("negexp").unwrap(), RiskMeasure::NegExpectation);
        assert!(parse_measure("es").is_err());
        assert!(parse_measure("es:2").is_err());
        assert!(parse_measure("foo:1").is_err());
    }

    #[test]
    fn families() {
        assert_eq!(parse_family("ptc:0.5").unwrap(), FamilyKind::ProportionalCost { pi: 0.5 });
        assert_eq!(
            parse_family("ode:p=2,c1=1,c2=0.5").unwrap(),
            FamilyKind::Fungibility { thresholds: [1.0, 0.5], exponent: 2.0 }
        );
        let f = build_family("ntb", Some("fixed:0.5,0.5")).unwrap();
        assert_eq!(f.margin, Some(Margin::Fixed(vec![0.5, 0.5])));
        assert!(build_family("ode:c1=1", None).is_err());
    }
}
