//! Single-point reports rendered as aligned `key value` text or CSV.

use std::fmt;
use std::str::FromStr;

use outcap_core::montecarlo::McCapacity;
use outcap_core::{CapacityReport, ChannelConfig, MimoBoundReport, SnrQuantile};

use crate::format::{g9, to_db};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}` (text|csv)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Text => "text",
            Self::Csv => "csv",
        })
    }
}

/// Ordered key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    fields: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, g9(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Keeps only `keys` (plus anything in `always`), in record order.
    pub fn select(&self, keys: &[&str], always: &[&str]) -> Record {
        Record {
            fields: self
                .fields
                .iter()
                .filter(|(k, _)| keys.contains(&k.as_str()) || always.contains(&k.as_str()))
                .cloned()
                .collect(),
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.fields
                    .iter()
                    .map(|(k, v)| format!("{}\n", format!("{k:<width$}  {v}").trim_end()))
                    .collect()
            }
            OutputFormat::Csv => {
                let header: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
                let values: Vec<&str> = self.fields.iter().map(|(_, v)| v.as_str()).collect();
                format!("{}\n{}\n", header.join(","), values.join(","))
            }
        }
    }
}

pub fn channel_record(cfg: &ChannelConfig, eps: f64) -> Record {
    let mut r = Record::new();
    r.push("scheme", cfg.scheme().as_str())
        .push("m", cfg.m().to_string())
        .push("n", cfg.n().to_string())
        .num("branch_snr", cfg.branch_snr())
        .num("branch_snr_db", to_db(cfg.branch_snr()))
        .num("eps", eps);
    r
}

pub fn quantile_record(cfg: &ChannelConfig, eps: f64, q: &SnrQuantile) -> Record {
    let mut r = channel_record(cfg, eps);
    r.num("gamma0", q.gamma0)
        .num("gamma0_db", to_db(q.gamma0))
        .push("method", q.method.as_str())
        .num("residual", q.residual)
        .push("iterations", q.iterations.to_string());
    r
}

pub fn capacity_record(cfg: &ChannelConfig, eps: f64, c: &CapacityReport) -> Record {
    let mut r = channel_record(cfg, eps);
    r.num("mean_combiner_snr", c.mean_combiner_snr)
        .num("mean_combiner_snr_db", to_db(c.mean_combiner_snr))
        .num("gamma0", c.quantile.gamma0)
        .push("method", c.method.as_str())
        .num("outage_capacity", c.outage_capacity)
        .num("benchmark_branch", c.benchmark_branch)
        .num("benchmark_combiner", c.benchmark_combiner)
        .num("gap_branch", c.gap_vs_branch)
        .num("gap_combiner", c.gap_vs_combiner)
        .push(
            "ratio_combiner",
            c.ratio_vs_combiner.map(g9).unwrap_or_default(),
        );
    r
}

pub fn bounds_record(cfg: &ChannelConfig, eps: f64, b: &MimoBoundReport) -> Record {
    let mut r = channel_record(cfg, eps);
    r.num("combiner_snr_lower", b.bounds.mean_lower)
        .num("combiner_snr_upper", b.bounds.mean_upper)
        .num("per_branch_snr_lower", b.bounds.per_branch_lower)
        .num("per_branch_snr_upper", b.bounds.per_branch_upper)
        .num("gamma0_lower", b.quantile_lower.gamma0)
        .num("gamma0_upper", b.quantile_upper.gamma0)
        .num("capacity_lower", b.capacity_lower)
        .num("capacity_upper", b.capacity_upper)
        .num("benchmark_lower", b.benchmark_lower)
        .num("benchmark_upper", b.benchmark_upper);
    match &b.asymptotic_benchmark {
        Some(a) => {
            r.push("edge_constant", a.edge.as_str())
                .num("asymptotic_order", a.order_used)
                .num("asymptotic_combiner_snr", a.mean_combiner_snr)
                .num("asymptotic_capacity", a.capacity);
        }
        None => {
            r.push("asymptotic_capacity", "");
        }
    }
    r
}

pub fn mc_record(cfg: &ChannelConfig, c: &McCapacity) -> Record {
    let e = &c.estimate;
    let mut r = channel_record(cfg, e.eps);
    r.num("quantile_gamma0", e.quantile_gamma0)
        .num("ci_lower", e.ci_lower)
        .num("ci_upper", e.ci_upper)
        .num("quantile_ci_halfwidth", e.quantile_ci_halfwidth)
        .push("ci_reliable", e.ci_reliable.to_string())
        .num("sample_mean", e.sample_mean)
        .num("sample_mean_stderr", e.sample_mean_stderr)
        .push("ks_statistic", e.ks_statistic.map(g9).unwrap_or_default())
        .num("outage_capacity", c.capacity)
        .num("capacity_ci_lower", c.ci_lower)
        .num("capacity_ci_upper", c.ci_upper)
        .num("capacity_sigma", c.sigma)
        .push("samples_used", e.samples_used.to_string())
        .push("seed", e.seed.map(|s| s.to_string()).unwrap_or_default())
        .push("redrawn", e.redrawn.to_string());
    r
}
