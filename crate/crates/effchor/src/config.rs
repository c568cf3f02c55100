//! Deployment configuration: where each location listens.
//!
//! The file format is one `<loc> <host> <port>` entry per line; blank lines
//! and `#` comments are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use effchor_core::Loc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub host: String,
    pub port: u16,
}

impl Endpoint {
    pub fn addr(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `<loc> <host> <port>`")]
    Syntax { line: usize },
    #[error("line {line}: port `{text}` is not in 1..=65535")]
    BadPort { line: usize, text: String },
    #[error("line {line}: location {loc} is listed twice")]
    DuplicateLocation { line: usize, loc: Loc },
    #[error("line {line}: {host}:{port} is already used by {other}")]
    DuplicateEndpoint { line: usize, host: String, port: u16, other: Loc },
    #[error("location {0} is not in the configuration")]
    MissingSelf(Loc),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentConfig {
    peers: BTreeMap<Loc, Endpoint>,
    me: Loc,
}

impl DeploymentConfig {
    pub fn new(peers: BTreeMap<Loc, Endpoint>, me: Loc) -> Result<Self, ConfigError> {
        let mut seen: BTreeMap<(&str, u16), &Loc> = BTreeMap::new();
        for (loc, ep) in &peers {
            if ep.port == 0 {
                return Err(ConfigError::BadPort { line: 0, text: "0".into() });
            }
            if let Some(other) = seen.insert((&ep.host, ep.port), loc) {
                return Err(ConfigError::DuplicateEndpoint {
                    line: 0,
                    host: ep.host.clone(),
                    port: ep.port,
                    other: other.clone(),
                });
            }
        }
        if !peers.contains_key(&me) {
            return Err(ConfigError::MissingSelf(me));
        }
        Ok(DeploymentConfig { peers, me })
    }

    pub fn parse(text: &str, me: Loc) -> Result<Self, ConfigError> {
        Self::new(parse_hosts(text)?, me)
    }

    pub fn load(path: &Path, me: Loc) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, me)
    }

    pub fn me(&self) -> &Loc {
        &self.me
    }

    pub fn endpoint(&self, l: &Loc) -> Option<&Endpoint> {
        self.peers.get(l)
    }

    pub fn locations(&self) -> impl Iterator<Item = &Loc> {
        self.peers.keys()
    }

    /// The same deployment seen from another location.
    pub fn as_location(&self, me: Loc) -> Result<Self, ConfigError> {
        Self::new(self.peers.clone(), me)
    }
}

/// Parses the host table, checking each line as it goes so errors carry a
/// line number.
pub fn parse_hosts(text: &str) -> Result<BTreeMap<Loc, Endpoint>, ConfigError> {
    let mut peers = BTreeMap::new();
    let mut endpoints: BTreeMap<(String, u16), Loc> = BTreeMap::new();
    let mut locs = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [loc, host, port] = fields[..] else {
            return Err(ConfigError::Syntax { line });
        };
        let port = port
            .parse::<u16>()
            .ok()
            .filter(|&p| p != 0)
            .ok_or_else(|| ConfigError::BadPort { line, text: port.to_string() })?;
        let loc = Loc::try_new(loc).map_err(|_| ConfigError::Syntax { line })?;
        if !locs.insert(loc.clone()) {
            return Err(ConfigError::DuplicateLocation { line, loc });
        }
        if let Some(other) = endpoints.insert((host.to_string(), port), loc.clone()) {
            return Err(ConfigError::DuplicateEndpoint { line, host: host.to_string(), port, other });
        }
        peers.insert(loc, Endpoint { host: host.to_string(), port });
    }
    Ok(peers)
}
