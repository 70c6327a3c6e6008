use std::net::SocketAddr;
use std::path::PathBuf;

use cqgen_core::annotation::QuotaConfig;

use crate::ServiceError;

pub const LISTEN_VAR: &str = "CQGEN_LISTEN";
pub const DATA_DIR_VAR: &str = "CQGEN_DATA_DIR";
pub const ROSTER_VAR: &str = "CQGEN_ROSTER";
pub const DOUBLE_RATE_VAR: &str = "CQGEN_DOUBLE_RATE";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// Overrides `<data_dir>/roster.json`.
    pub roster: Option<PathBuf>,
    pub quota: QuotaConfig,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> ServiceConfig {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: data_dir.into(),
            roster: None,
            quota: QuotaConfig::default(),
        }
    }

    /// Reads `CQGEN_LISTEN`, `CQGEN_DATA_DIR`, `CQGEN_ROSTER` and
    /// `CQGEN_DOUBLE_RATE`. Unset variables keep their defaults (data dir `.`).
    pub fn from_env() -> Result<ServiceConfig, ServiceError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<ServiceConfig, ServiceError> {
        let mut cfg = ServiceConfig::new(get(DATA_DIR_VAR).unwrap_or_else(|| ".".into()));
        if let Some(v) = get(LISTEN_VAR) {
            cfg.listen = v.parse().map_err(|e: std::net::AddrParseError| ServiceError::Config {
                var: LISTEN_VAR,
                message: format!("{v:?}: {e}"),
            })?;
        }
        cfg.roster = get(ROSTER_VAR).map(PathBuf::from);
        if let Some(v) = get(DOUBLE_RATE_VAR) {
            cfg.quota.double_rate = parse_rate(&v).ok_or_else(|| ServiceError::Config {
                var: DOUBLE_RATE_VAR,
                message: format!("{v:?} is not in [0, 1]"),
            })?;
        }
        Ok(cfg)
    }
}

pub(crate) fn parse_rate(v: &str) -> Option<f64> {
    v.parse::<f64>().ok().filter(|r| (0.0..=1.0).contains(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides() {
        let cfg = ServiceConfig::from_lookup(|k| match k {
            LISTEN_VAR => Some("0.0.0.0:9000".into()),
            DATA_DIR_VAR => Some("/data".into()),
            DOUBLE_RATE_VAR => Some("0.5".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.listen.port(), 9000);
        assert_eq!(cfg.data_dir, PathBuf::from("/data"));
        assert_eq!(cfg.roster, None);
        assert_eq!(cfg.quota.double_rate, 0.5);
    }

    #[test]
    fn bad_values() {
        assert!(ServiceConfig::from_lookup(|k| (k == LISTEN_VAR).then(|| "nope".into())).is_err());
        assert!(ServiceConfig::from_lookup(|k| (k == DOUBLE_RATE_VAR).then(|| "1.5".into())).is_err());
    }
}
