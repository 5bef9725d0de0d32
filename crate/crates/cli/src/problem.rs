use std::fs;
use std::sync::Arc;

use anyhow::{Context, Result};
use lfp_core::channels::TableSpec;
use lfp_core::{
    BinomialChannel, BregmanLoss, Channel, ProblemSpecF64, ProductChannel, QuantizedGaussianChannel, SupportSet,
    TableChannel,
};
use serde::Serialize;

use crate::args::{ChannelKind, LossKind, ProblemArgs};
use crate::UsageError;

/// Parses `a`, `a..b` (inclusive) or `a,b,c`.
pub fn parse_values(s: &str) -> Result<Vec<i64>> {
    let bad = || UsageError(format!("cannot parse `{s}` as an integer, range a..b or list"));
    if let Some((a, b)) = s.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(UsageError(format!("empty range `{s}`")).into());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse::<i64>().map_err(|_| bad().into()))
        .collect()
}

/// Values of the channel parameter (`--m` or `--levels`), if the channel has one.
pub fn parameter_values(p: &ProblemArgs) -> Result<Option<Vec<i64>>> {
    let (flag, raw) = match p.channel {
        ChannelKind::Binomial => ("--m", &p.m),
        ChannelKind::Qgauss => ("--levels", &p.levels),
        ChannelKind::Table => return Ok(None),
    };
    let raw = raw
        .as_ref()
        .ok_or_else(|| UsageError(format!("--channel {:?} needs {flag}", p.channel).to_lowercase()))?;
    Ok(Some(parse_values(raw)?))
}

/// The single parameter value of a non-sweep command.
pub fn single_parameter(p: &ProblemArgs) -> Result<Option<i64>> {
    match parameter_values(p)? {
        None => Ok(None),
        Some(v) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(UsageError("ranges are only accepted by sweep".into()).into()),
    }
}

/// Everything that defines the problem, hashed into the manifest digest.
#[derive(Debug, Serialize)]
pub struct ProblemDescription {
    pub channel: ChannelKind,
    pub parameter: Option<i64>,
    pub loss: LossKind,
    pub omega: [f64; 2],
    pub dim: usize,
    pub table: Option<String>,
}

pub fn build(p: &ProblemArgs, parameter: Option<i64>) -> Result<(ProblemSpecF64, ProblemDescription)> {
    if p.dim == 0 {
        return Err(UsageError("--dim must be at least 1".into()).into());
    }
    let mut table_text = None;
    let (base, default_omega): (Arc<dyn Channel<f64>>, Option<[f64; 2]>) = match p.channel {
        ChannelKind::Binomial => {
            let m = parameter.expect("binomial parameter");
            (Arc::new(BinomialChannel::new(m)?), Some([0.0, 1.0]))
        }
        ChannelKind::Qgauss => {
            let levels = parameter.expect("qgauss parameter");
            (Arc::new(QuantizedGaussianChannel::new(levels)?), None)
        }
        ChannelKind::Table => {
            let path = p
                .table
                .as_ref()
                .ok_or_else(|| UsageError("--channel table needs --table".into()))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec: TableSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let channel = TableChannel::<f64>::from_spec(&spec)?;
            let lo = spec.grid_x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = spec.grid_x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            table_text = Some(text);
            (Arc::new(channel), Some([lo, hi]))
        }
    };
    let omega = match (&p.omega, default_omega) {
        (Some(v), _) => [v[0], v[1]],
        (None, Some(d)) => d,
        (None, None) => return Err(UsageError("this channel needs --omega LO HI".into()).into()),
    };
    let channel: Arc<dyn Channel<f64>> = if p.dim == 1 {
        base
    } else {
        Arc::new(ProductChannel::power(base, p.dim)?)
    };
    let loss = match p.loss {
        LossKind::Sq => BregmanLoss::squared_error(p.dim),
        LossKind::Gid if p.dim == 2 => BregmanLoss::generalized_i_divergence(),
        LossKind::Gid => return Err(UsageError("--loss gid needs --dim 2".into()).into()),
    };
    let support = if p.dim == 1 {
        SupportSet::interval(omega[0], omega[1])?
    } else {
        SupportSet::boxed(vec![omega[0]; p.dim], vec![omega[1]; p.dim])?
    };
    let spec = ProblemSpecF64::new(channel, loss, support)?;
    let description = ProblemDescription {
        channel: p.channel,
        parameter,
        loss: p.loss,
        omega,
        dim: p.dim,
        table: table_text,
    };
    Ok((spec, description))
}
