//! Container recipe generation.
//!
//! Two deployment styles are supported. A *gateway* container runs on a node
//! that already has the platform installed and simply bind-mounts the
//! platform trees from the host, which keeps the image tiny. A *normal*
//! container is self-contained: it installs prerequisites and pulls the
//! platform trees from a designated source node over rsync at build time.
//!
//! [`render_recipe`] produces a structured [`ContainerRecipe`];
//! [`emit_recipe_text`] turns it into a Dockerfile plus a one-command run
//! script. Emission is pure string building, so identical inputs always
//! yield identical bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{EnvironmentProfile, Framework};

/// Base image for both node kinds.
pub const DEFAULT_BASE_IMAGE: &str = "ubuntu:16.04";

/// Packages a normal node needs before it can sync and run the platform.
pub const NORMAL_NODE_PACKAGES: [&str; 4] = ["openjdk-8-jdk", "rsync", "iputils-ping", "bc"];

/// Host trees a normal node copies from the sync source.
pub const SYNC_SOURCE_PATHS: [&str; 3] = ["/usr/hdp", "/usr/jdk64", "/etc/hadoop"];

/// Host-to-container bind mounts for a gateway container. Host and container
/// paths are always identical.
pub const GATEWAY_VOLUME_MOUNTS: [(&str, &str); 4] = [
    ("/usr/hdp", "/usr/hdp"),
    ("/usr/jdk64", "/usr/jdk64"),
    ("/HiBench", "/HiBench"),
    ("/etc", "/etc"),
];

/// Account the sync steps log in as on the source node.
pub const DEFAULT_SYNC_USER: &str = "hdfs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Gateway,
    Normal,
}

impl NodeKind {
    pub fn image_tag(self) -> &'static str {
        match self {
            NodeKind::Gateway => "gatewaynode",
            NodeKind::Normal => "normalnode",
        }
    }

    pub fn container_name(self) -> &'static str {
        match self {
            NodeKind::Gateway => "gateway",
            NodeKind::Normal => "normal",
        }
    }
}

/// One rsync pull from a cluster node into the image being built.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncStep {
    pub source_user: String,
    pub source_host: String,
    pub source_path: String,
    pub dest_path: String,
}

impl SyncStep {
    fn command(&self) -> String {
        format!(
            "rsync -avz {}@{}:{} {}",
            self.source_user, self.source_host, self.source_path, self.dest_path
        )
    }
}

/// Structured container recipe for one node kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerRecipe {
    pub node_kind: NodeKind,
    pub base_image: String,
    pub package_installs: Vec<String>,
    /// `KEY=value` environment directives, emitted in order.
    pub env_lines: Vec<(String, String)>,
    pub sync_steps: Vec<SyncStep>,
    /// `(host, container)` bind mounts on the run command.
    pub volume_mounts: Vec<(String, String)>,
    /// Shell lines that create the hdfs user, hand it the benchmark tree and
    /// switch to it. A line starting with `USER ` becomes a directive.
    pub user_setup: Vec<String>,
    pub build_command: String,
    pub run_command: String,
}

/// Emitted text form of a recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipeText {
    pub dockerfile: String,
    pub run_script: String,
}

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("normal-node recipes need a sync source node")]
    MissingSourceNode,
    #[error("unsupported framework {0}: only HDP recipes are handled")]
    UnsupportedFramework(Framework),
}

/// Renders the recipe for one node kind from a detected environment.
/// `source_node` names the cluster host normal nodes sync binaries from;
/// gateway recipes ignore it.
pub fn render_recipe(
    profile: &EnvironmentProfile,
    node_kind: NodeKind,
    source_node: Option<&str>,
) -> Result<ContainerRecipe, RecipeError> {
    if profile.framework != Framework::Hdp {
        return Err(RecipeError::UnsupportedFramework(profile.framework));
    }
    let env_lines = profile.env_exports.clone();
    let recipe = match node_kind {
        NodeKind::Gateway => ContainerRecipe {
            node_kind,
            base_image: DEFAULT_BASE_IMAGE.to_string(),
            package_installs: Vec::new(),
            env_lines,
            sync_steps: Vec::new(),
            volume_mounts: GATEWAY_VOLUME_MOUNTS
                .iter()
                .map(|(h, c)| (h.to_string(), c.to_string()))
                .collect(),
            user_setup: vec![
                "useradd hdfs".to_string(),
                "chown -R hdfs:hdfs /HiBench".to_string(),
                "USER hdfs".to_string(),
            ],
            build_command: format!("docker build -t {} .", node_kind.image_tag()),
            run_command: run_command(node_kind, &GATEWAY_VOLUME_MOUNTS),
        },
        NodeKind::Normal => {
            let source = source_node.ok_or(RecipeError::MissingSourceNode)?;
            ContainerRecipe {
                node_kind,
                base_image: DEFAULT_BASE_IMAGE.to_string(),
                package_installs: NORMAL_NODE_PACKAGES.iter().map(|p| p.to_string()).collect(),
                env_lines,
                sync_steps: SYNC_SOURCE_PATHS
                    .iter()
                    .map(|path| SyncStep {
                        source_user: DEFAULT_SYNC_USER.to_string(),
                        source_host: source.to_string(),
                        source_path: path.to_string(),
                        dest_path: "./".to_string(),
                    })
                    .collect(),
                volume_mounts: Vec::new(),
                user_setup: vec![
                    "useradd hdfs".to_string(),
                    "chown -R hdfs:hdfs HiBench".to_string(),
                    "USER hdfs".to_string(),
                ],
                build_command: format!("docker build -t {} .", node_kind.image_tag()),
                run_command: run_command(node_kind, &[]),
            }
        }
    };
    debug_assert!(recipe.validate().is_ok());
    Ok(recipe)
}

fn run_command(kind: NodeKind, mounts: &[(&str, &str)]) -> String {
    let volumes: String = mounts
        .iter()
        .map(|(host, container)| format!("-v {host}:{container} "))
        .collect();
    format!(
        "docker run --name {} --network=host -p 8080:80 {}-it {} bash",
        kind.container_name(),
        volumes,
        kind.image_tag()
    )
}

impl ContainerRecipe {
    /// Checks the per-kind shape invariants.
    pub fn validate(&self) -> Result<(), String> {
        match self.node_kind {
            NodeKind::Gateway => {
                if !self.sync_steps.is_empty() {
                    return Err("gateway recipe must not sync".into());
                }
                let expected: Vec<(String, String)> = GATEWAY_VOLUME_MOUNTS
                    .iter()
                    .map(|(h, c)| (h.to_string(), c.to_string()))
                    .collect();
                if self.volume_mounts != expected {
                    return Err("gateway recipe must carry the four canonical mounts".into());
                }
            }
            NodeKind::Normal => {
                if !self.volume_mounts.is_empty() {
                    return Err("normal recipe must not mount volumes".into());
                }
                if self.sync_steps.len() != SYNC_SOURCE_PATHS.len() {
                    return Err("normal recipe must sync the three platform trees".into());
                }
            }
        }
        let useradd = self.user_setup.iter().position(|l| l.starts_with("useradd"));
        let chown = self.user_setup.iter().position(|l| l.starts_with("chown"));
        let switch = self.user_setup.iter().position(|l| l.starts_with("USER "));
        match (useradd, chown, switch) {
            (Some(a), Some(c), Some(s)) if a < c && c < s => Ok(()),
            _ => Err("user_setup must create, chown, then switch".into()),
        }
    }
}

/// Emits the Dockerfile and run script for a recipe. Sections appear in a
/// fixed order: base image, packages, environment, syncs, user setup,
/// exposed port.
pub fn emit_recipe_text(recipe: &ContainerRecipe) -> RecipeText {
    let mut sections: Vec<String> = Vec::new();
    sections.push(format!("FROM {}", recipe.base_image));
    if !recipe.package_installs.is_empty() {
        sections.push(format!(
            "RUN apt-get update && apt-get install -y {}",
            recipe.package_installs.join(" ")
        ));
    }
    if !recipe.env_lines.is_empty() {
        let envs: Vec<String> = recipe
            .env_lines
            .iter()
            .map(|(key, value)| format!("ENV {key}={value}"))
            .collect();
        sections.push(envs.join("\n"));
    }
    if !recipe.sync_steps.is_empty() {
        let syncs: Vec<String> = recipe
            .sync_steps
            .iter()
            .map(|step| format!("RUN {}", step.command()))
            .collect();
        sections.push(syncs.join("\n"));
    }
    if !recipe.user_setup.is_empty() {
        let lines: Vec<String> = recipe
            .user_setup
            .iter()
            .map(|line| {
                if line.starts_with("USER ") {
                    line.clone()
                } else {
                    format!("RUN {line}")
                }
            })
            .collect();
        sections.push(lines.join("\n"));
    }
    sections.push("EXPOSE 80".to_string());
    let dockerfile = format!("{}\n", sections.join("\n\n"));
    let run_script = format!(
        "#!/bin/sh\n# build first with: {}\n{}\n",
        recipe.build_command, recipe.run_command
    );
    RecipeText {
        dockerfile,
        run_script,
    }
}

/// Informational deployment figures per node kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeploymentProfile {
    pub image_size: &'static str,
    pub deploy_time: &'static str,
}

/// Recorded image size and deploy time for each node kind.
pub fn deployment_profile(kind: NodeKind) -> DeploymentProfile {
    match kind {
        NodeKind::Gateway => DeploymentProfile {
            image_size: "128MB",
            deploy_time: "5 secs",
        },
        NodeKind::Normal => DeploymentProfile {
            image_size: "5.2GB",
            deploy_time: "3-4 mins",
        },
    }
}
