//! Cluster descriptors and environment detection.
//!
//! A [`ClusterDescriptor`] is the static inventory of a cluster: the nodes,
//! their roles and sizes, the deployment framework and the pricing identity
//! of each VM. [`detect_environment`] derives from it the settings that get
//! injected into container recipes and workload configuration files: the
//! Hadoop and Spark installation paths, the name-node URI and the exported
//! environment variables.
//!
//! Descriptors are plain JSON files. The name-node host is not a key in the
//! file; it is derived from the (unique) master node when the file is loaded.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

/// HDFS name-node RPC port. Descriptors never carry a port; the URI always
/// uses this one.
pub const NAME_NODE_PORT: u16 = 8020;

/// Hadoop client tree on HDP platforms.
pub const HDP_HADOOP_HOME: &str = "/usr/hdp/current/hadoop-client";
/// Spark 2 client tree on HDP platforms.
pub const HDP_SPARK_HOME: &str = "/usr/hdp/current/spark2-client";
/// JDK tree shipped alongside HDP. The versioned directory under /usr/jdk64
/// varies per install, so the stable alias is used.
pub const HDP_JAVA_HOME: &str = "/usr/jdk64/default";

/// Cluster deployment framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Framework {
    Hdp,
    Cdh,
}

impl FromStr for Framework {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hdp" => Ok(Framework::Hdp),
            "cdh" => Ok(Framework::Cdh),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Framework::Hdp => write!(f, "HDP"),
            Framework::Cdh => write!(f, "CDH"),
        }
    }
}

/// Role a node plays in the cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Master,
    Worker,
    Gateway,
}

impl FromStr for NodeRole {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "master" => Ok(NodeRole::Master),
            "worker" => Ok(NodeRole::Worker),
            "gateway" => Ok(NodeRole::Gateway),
            _ => Err(()),
        }
    }
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRole::Master => write!(f, "master"),
            NodeRole::Worker => write!(f, "worker"),
            NodeRole::Gateway => write!(f, "gateway"),
        }
    }
}

/// One node of the cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub hostname: String,
    pub role: NodeRole,
    pub vcpus: u32,
    pub memory_gb: f64,
    pub disk_tb: f64,
    /// Cloud SKU the node is billed as, e.g. "STANDARD_DS14_V2".
    pub vm_sku: String,
}

/// Static description of a cluster, loaded from a descriptor file.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDescriptor {
    pub framework: Framework,
    pub platform_version: String,
    /// Hostname of the master node; derived, not read from the file.
    pub name_node_host: String,
    pub region: String,
    /// ISO-4217 code the cluster is billed in.
    pub currency: String,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("failed to read descriptor {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed descriptor: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid descriptor: {0}")]
    Validation(String),
    #[error("unsupported framework {0}: only HDP clusters are handled")]
    UnsupportedFramework(Framework),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    framework: String,
    platform_version: String,
    region: String,
    currency: String,
    nodes: Vec<RawNode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    hostname: String,
    role: String,
    vcpus: u32,
    memory_gb: f64,
    disk_tb: f64,
    vm_sku: String,
}

/// Loads and validates a cluster descriptor from a JSON file.
pub fn load_descriptor(path: impl AsRef<Path>) -> Result<ClusterDescriptor, ClusterError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ClusterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ClusterDescriptor::from_json_str(&text)
}

impl ClusterDescriptor {
    /// Parses a descriptor from JSON text and validates it.
    pub fn from_json_str(text: &str) -> Result<Self, ClusterError> {
        let raw: RawDescriptor = serde_json::from_str(text)?;
        let framework = Framework::from_str(&raw.framework).map_err(|_| {
            ClusterError::Validation(format!("unknown framework {:?}", raw.framework))
        })?;
        let mut nodes = Vec::with_capacity(raw.nodes.len());
        for node in raw.nodes {
            let role = NodeRole::from_str(&node.role).map_err(|_| {
                ClusterError::Validation(format!(
                    "unknown role {:?} for node {:?}",
                    node.role, node.hostname
                ))
            })?;
            nodes.push(NodeSpec {
                hostname: node.hostname,
                role,
                vcpus: node.vcpus,
                memory_gb: node.memory_gb,
                disk_tb: node.disk_tb,
                vm_sku: node.vm_sku,
            });
        }
        let masters: Vec<&str> = nodes
            .iter()
            .filter(|n| n.role == NodeRole::Master)
            .map(|n| n.hostname.as_str())
            .collect();
        let name_node_host = match masters.as_slice() {
            [one] => (*one).to_string(),
            [] => return Err(ClusterError::Validation("no master node declared".into())),
            many => {
                return Err(ClusterError::Validation(format!(
                    "expected exactly one master node, found {}",
                    many.len()
                )))
            }
        };
        let desc = ClusterDescriptor {
            framework,
            platform_version: raw.platform_version,
            name_node_host,
            region: raw.region,
            currency: raw.currency,
            nodes,
        };
        desc.validate()?;
        Ok(desc)
    }

    /// Checks every structural invariant of the descriptor.
    pub fn validate(&self) -> Result<(), ClusterError> {
        let fail = |msg: String| Err(ClusterError::Validation(msg));
        if self.nodes.is_empty() {
            return fail("descriptor lists no nodes".into());
        }
        if self.platform_version.is_empty() {
            return fail("platform_version is empty".into());
        }
        if self.region.is_empty() {
            return fail("region is empty".into());
        }
        if self.currency.len() != 3 || !self.currency.bytes().all(|b| b.is_ascii_uppercase()) {
            return fail(format!(
                "currency {:?} is not an ISO-4217 code",
                self.currency
            ));
        }
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if node.hostname.is_empty() {
                return fail("node with empty hostname".into());
            }
            if !seen.insert(node.hostname.as_str()) {
                return fail(format!("duplicate hostname {:?}", node.hostname));
            }
            if node.vcpus == 0 {
                return fail(format!("node {:?} has zero vcpus", node.hostname));
            }
            if !node.memory_gb.is_finite() || node.memory_gb <= 0.0 {
                return fail(format!("node {:?} has non-positive memory", node.hostname));
            }
            if !node.disk_tb.is_finite() || node.disk_tb <= 0.0 {
                return fail(format!("node {:?} has non-positive disk", node.hostname));
            }
            if node.vm_sku.is_empty() {
                return fail(format!("node {:?} has no vm_sku", node.hostname));
            }
        }
        let masters: Vec<&NodeSpec> = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Master)
            .collect();
        match masters.as_slice() {
            [one] if one.hostname == self.name_node_host => Ok(()),
            [_] => fail(format!(
                "name_node_host {:?} does not match the master node",
                self.name_node_host
            )),
            [] => fail("no master node declared".into()),
            many => fail(format!(
                "expected exactly one master node, found {}",
                many.len()
            )),
        }
    }

    pub fn master(&self) -> &NodeSpec {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Master)
            .expect("validated descriptor has a master")
    }
}

/// Number of nodes workloads actually run on: masters plus workers.
/// Gateway nodes only submit jobs and are excluded from both execution
/// and billing.
pub fn workload_node_count(desc: &ClusterDescriptor) -> u32 {
    desc.nodes
        .iter()
        .filter(|n| n.role != NodeRole::Gateway)
        .count() as u32
}

/// Environment settings a container or workload config needs, as detected
/// from a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentProfile {
    pub hadoop_home: String,
    pub spark_home: String,
    pub java_home: String,
    /// `hdfs://<name-node-host>:8020`
    pub name_node_uri: String,
    pub framework: Framework,
    pub platform_version: String,
    /// Exported variables in emission order: HADOOP_HOME, SPARK_HOME, then
    /// the PATH extension.
    pub env_exports: Vec<(String, String)>,
}

/// Derives the environment profile from a descriptor. Only HDP layouts are
/// known; CDH descriptors are rejected.
pub fn detect_environment(desc: &ClusterDescriptor) -> Result<EnvironmentProfile, ClusterError> {
    desc.validate()?;
    if desc.framework != Framework::Hdp {
        return Err(ClusterError::UnsupportedFramework(desc.framework));
    }
    let hadoop_home = HDP_HADOOP_HOME.to_string();
    let spark_home = HDP_SPARK_HOME.to_string();
    let env_exports = vec![
        ("HADOOP_HOME".to_string(), hadoop_home.clone()),
        ("SPARK_HOME".to_string(), spark_home.clone()),
        ("PATH".to_string(), "$PATH:$HADOOP_HOME/bin".to_string()),
    ];
    Ok(EnvironmentProfile {
        hadoop_home,
        spark_home,
        java_home: HDP_JAVA_HOME.to_string(),
        name_node_uri: format!("hdfs://{}:{}", desc.name_node_host, NAME_NODE_PORT),
        framework: desc.framework,
        platform_version: desc.platform_version.clone(),
        env_exports,
    })
}

/// Where environment settings come from. Probing a live node (running
/// discovery commands over SSH) is a planned source; the static descriptor
/// is the only one implemented today.
pub trait EnvironmentSource {
    fn detect(&self, desc: &ClusterDescriptor) -> Result<EnvironmentProfile, ClusterError>;
}

/// Detection backed purely by the descriptor file.
pub struct StaticDetection;

impl EnvironmentSource for StaticDetection {
    fn detect(&self, desc: &ClusterDescriptor) -> Result<EnvironmentProfile, ClusterError> {
        detect_environment(desc)
    }
}
