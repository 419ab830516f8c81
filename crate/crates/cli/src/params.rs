//! Channel parameters shared by every subcommand.

use std::fmt;
use std::str::FromStr;

use outcap_core::{ChannelConfig, DiversityScheme};

use crate::config::{ConfigError, ConfigMap};
use crate::format::from_db;

/// Which average SNR the user pins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SnrReference {
    /// Per-branch average SNR.
    Branch,
    /// Mean combiner SNR; the branch SNR is back-solved.
    Combiner,
    /// Per-link SNR of a MIMO channel.
    Link,
}

impl SnrReference {
    pub const ALL: [SnrReference; 3] = [Self::Branch, Self::Combiner, Self::Link];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Branch => "branch",
            Self::Combiner => "combiner",
            Self::Link => "link",
        }
    }

    /// Config key holding the value in dB.
    pub fn key(&self) -> &'static str {
        match self {
            Self::Branch => "branch_snr_db",
            Self::Combiner => "combiner_snr_db",
            Self::Link => "link_snr_db",
        }
    }
}

impl fmt::Display for SnrReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SnrReference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "branch" => Ok(Self::Branch),
            "combiner" => Ok(Self::Combiner),
            "link" => Ok(Self::Link),
            other => Err(format!(
                "unknown SNR reference `{other}` (branch|combiner|link)"
            )),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParamError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] outcap_core::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Builds the channel from a scheme, antenna counts and an SNR in dB.
pub fn build_channel(
    scheme: DiversityScheme,
    m: u64,
    n: u64,
    reference: SnrReference,
    snr_db: f64,
) -> Result<ChannelConfig, ParamError> {
    if !snr_db.is_finite() {
        return Err(ParamError::Invalid(format!(
            "SNR {snr_db} dB is not finite"
        )));
    }
    let snr = from_db(snr_db);
    match reference {
        SnrReference::Combiner => {
            if scheme == DiversityScheme::MimoOptimal {
                return Err(ParamError::Invalid(
                    "--combiner-snr-db needs an exact mean combiner SNR; use --link-snr-db for mimo-opt"
                        .into(),
                ));
            }
            Ok(ChannelConfig::from_combiner_snr(scheme, m, n, snr)?)
        }
        SnrReference::Link if scheme != DiversityScheme::MimoOptimal => Err(ParamError::Invalid(
            format!("--link-snr-db applies to mimo-opt only; use --branch-snr-db for {scheme}"),
        )),
        _ => Ok(ChannelConfig::new(scheme, m, n, snr)?),
    }
}

/// The single SNR key present, if any. Fails when more than one is set.
pub fn snr_reference(map: &ConfigMap) -> Result<Option<(SnrReference, f64)>, ParamError> {
    let mut found = None;
    for r in SnrReference::ALL {
        if let Some(v) = map.get::<f64>(r.key())? {
            if found.is_some() {
                return Err(ParamError::Invalid(
                    "give exactly one of --branch-snr-db, --combiner-snr-db, --link-snr-db".into(),
                ));
            }
            found = Some((r, v));
        }
    }
    Ok(found)
}

/// Reads `scheme`, `m`, `n` (default 1) and one SNR key.
pub fn channel_from_map(map: &ConfigMap) -> Result<ChannelConfig, ParamError> {
    let scheme: DiversityScheme = map.require("scheme")?;
    let m = map.get_or("m", 1u64)?;
    let n = map.get_or("n", 1u64)?;
    let (reference, db) = snr_reference(map)?.ok_or_else(|| {
        ParamError::Invalid(
            "missing SNR: give one of --branch-snr-db, --combiner-snr-db, --link-snr-db".into(),
        )
    })?;
    build_channel(scheme, m, n, reference, db)
}
