//! Resource-group state machine: ownership, heartbeat-based failure
//! detection, automatic and administrative failover, and virtual-name
//! connection resolution.
//!
//! Groups bundle disks, a virtual IP, and a database instance; everything
//! in a group moves between nodes as a unit. Clients address groups through
//! virtual server names, never physical node names, so a completed move is
//! invisible to an unchanged connection string.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::topology::{NodeId, Partition, Topology, VolumeId, PASSIVE_NODE};

/// Name of the group holding cluster-wide resources rather than a database.
pub const CLUSTER_GROUP: &str = "Cluster Group";

pub const CLUSTER_NAME: &str = "TkTerraClstr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Up,
    Down,
    /// Serving nothing, but heartbeats still flow: the cluster will NOT
    /// fail the node's groups over on its own.
    Hung,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeHealth {
    pub status: NodeStatus,
    pub last_heartbeat: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupState {
    Online,
    /// No healthy target was available; downtime accrues until a node
    /// recovers and the group can be placed again.
    Offline,
    Moving {
        from: Option<NodeId>,
        to: NodeId,
        started_at: u64,
        eta: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupResources {
    pub volumes: Vec<VolumeId>,
    pub virtual_ip: String,
    pub sql_instance: Option<String>,
}

/// A named bundle of resources owned by at most one node at a time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceGroup {
    pub name: String,
    /// Database partition served by this group; `None` for the cluster
    /// infrastructure group.
    pub partition: Option<Partition>,
    pub resources: GroupResources,
    pub preferred_owners: Vec<NodeId>,
    pub current_owner: Option<NodeId>,
    pub state: GroupState,
}

impl ResourceGroup {
    /// Owner visible to clients right now: none while moving or offline.
    pub fn serving_owner(&self) -> Option<&NodeId> {
        match self.state {
            GroupState::Online => self.current_owner.as_ref(),
            _ => None,
        }
    }
}

/// Virtual server name (including instance) for a partition's group.
pub fn virtual_server(partition: Partition) -> &'static str {
    match partition {
        Partition::DrgDb => "terravs1\\inst1",
        Partition::Doq0 => "terravs2\\inst1",
        Partition::Doq1 => "terravs3\\inst1",
    }
}

pub fn database_name(partition: Partition) -> &'static str {
    match partition {
        Partition::DrgDb => "ts4Drg",
        Partition::Doq0 => "ts4Doq0",
        Partition::Doq1 => "ts4Doq1",
    }
}

/// Client connection parameters; carries no physical node name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionString {
    pub server: String,
    pub database: String,
    pub network: String,
}

impl ConnectionString {
    pub fn for_partition(partition: Partition) -> Self {
        Self {
            server: virtual_server(partition).to_string(),
            database: database_name(partition).to_string(),
            network: "dbmssocn".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    /// The virtual name does not exist anywhere in the cluster.
    #[error("unknown virtual server name {0}")]
    NameError(String),
    /// The name exists but its group is moving or offline, so a new
    /// connection sees the equivalent of "server not found".
    #[error("server not found: group {0} is not online")]
    ServerNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MoveError {
    #[error("unknown group {0}")]
    UnknownGroup(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("move rejected: target {target} is {reason}")]
    MoveRejected { target: NodeId, reason: &'static str },
    #[error("group {0} is not online")]
    GroupNotOnline(String),
}

/// One completed or in-flight ownership transfer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailoverRecord {
    pub group: String,
    pub from: Option<NodeId>,
    pub to: NodeId,
    pub start: u64,
    pub duration_s: u64,
    pub planned: bool,
    pub cause: String,
}

/// Failover duration model: triangular between the observed extremes with
/// the typical outage as the mode. Scenario steps may pin exact durations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FailoverModel {
    pub min_s: u64,
    pub mode_s: u64,
    pub max_s: u64,
}

impl Default for FailoverModel {
    fn default() -> Self {
        Self {
            min_s: 29,
            mode_s: 45,
            max_s: 90,
        }
    }
}

impl FailoverModel {
    pub fn sample(&self, rng: &mut SimRng) -> u64 {
        let x = rng.triangular(self.min_s as f64, self.mode_s as f64, self.max_s as f64);
        let rounded = libm::round(x) as u64;
        rounded.clamp(self.min_s, self.max_s)
    }
}

/// Mutable cluster state. Mutations happen only on the simulation kernel's
/// single event timeline; reads are safe anywhere between events.
#[derive(Debug, Clone)]
pub struct ClusterState {
    pub nodes: BTreeMap<NodeId, NodeHealth>,
    pub groups: BTreeMap<String, ResourceGroup>,
    /// Virtual server name -> group name.
    pub virtual_names: BTreeMap<String, String>,
}

impl ClusterState {
    /// Default layout: SQL-1 owns DRG_DB, SQL-2 owns DOQ_0, SQL-3 owns
    /// DOQ_1, SQL-4 stands by; every group prefers its home node, then the
    /// passive node, then the rest in index order.
    pub fn default_layout(topology: &Topology) -> Self {
        let node_ids: Vec<NodeId> = topology.cluster_nodes().map(|n| n.id.clone()).collect();
        let mut nodes = BTreeMap::new();
        for id in &node_ids {
            nodes.insert(
                id.clone(),
                NodeHealth {
                    status: NodeStatus::Up,
                    last_heartbeat: 0,
                },
            );
        }

        let preferred = |home: &str| -> Vec<NodeId> {
            let mut order: Vec<NodeId> = Vec::new();
            order.push(NodeId(home.to_string()));
            if home != PASSIVE_NODE {
                order.push(NodeId(PASSIVE_NODE.to_string()));
            }
            for id in &node_ids {
                if !order.contains(id) {
                    order.push(id.clone());
                }
            }
            order
        };

        let mut groups = BTreeMap::new();
        let mut virtual_names = BTreeMap::new();

        groups.insert(
            CLUSTER_GROUP.to_string(),
            ResourceGroup {
                name: CLUSTER_GROUP.to_string(),
                partition: None,
                resources: GroupResources {
                    volumes: Vec::new(),
                    virtual_ip: "10.0.0.10".to_string(),
                    sql_instance: None,
                },
                preferred_owners: preferred("SQL-1"),
                current_owner: Some(NodeId("SQL-1".to_string())),
                state: GroupState::Online,
            },
        );

        let homes = [
            (Partition::DrgDb, "SQL-1", "10.0.0.11"),
            (Partition::Doq0, "SQL-2", "10.0.0.12"),
            (Partition::Doq1, "SQL-3", "10.0.0.13"),
        ];
        for (partition, home, ip) in homes {
            let volumes: Vec<VolumeId> = topology.volumes_of(partition).map(|v| v.id).collect();
            let name = partition.name().to_string();
            groups.insert(
                name.clone(),
                ResourceGroup {
                    name: name.clone(),
                    partition: Some(partition),
                    resources: GroupResources {
                        volumes,
                        virtual_ip: ip.to_string(),
                        sql_instance: Some(virtual_server(partition).to_string()),
                    },
                    preferred_owners: preferred(home),
                    current_owner: Some(NodeId(home.to_string())),
                    state: GroupState::Online,
                },
            );
            virtual_names.insert(virtual_server(partition).to_string(), name);
        }

        Self {
            nodes,
            groups,
            virtual_names,
        }
    }

    pub fn group(&self, name: &str) -> Option<&ResourceGroup> {
        self.groups.get(name)
    }

    pub fn group_mut(&mut self, name: &str) -> Option<&mut ResourceGroup> {
        self.groups.get_mut(name)
    }

    pub fn node_status(&self, node: &NodeId) -> Option<NodeStatus> {
        self.nodes.get(node).map(|n| n.status)
    }

    /// Groups currently owned by `node`, in name order.
    pub fn groups_on(&self, node: &NodeId) -> Vec<String> {
        self.groups
            .values()
            .filter(|g| g.current_owner.as_ref() == Some(node))
            .map(|g| g.name.clone())
            .collect()
    }

    /// Partition-bearing groups on `node`, in name order.
    pub fn partition_groups_on(&self, node: &NodeId) -> Vec<String> {
        self.groups
            .values()
            .filter(|g| g.partition.is_some() && g.current_owner.as_ref() == Some(node))
            .map(|g| g.name.clone())
            .collect()
    }

    /// First preferred owner that is up, not hung, and not excluded.
    pub fn next_owner(&self, group: &str, exclude: &NodeId) -> Option<NodeId> {
        let g = self.groups.get(group)?;
        g.preferred_owners
            .iter()
            .find(|n| {
                *n != exclude
                    && matches!(
                        self.nodes.get(*n).map(|h| h.status),
                        Some(NodeStatus::Up)
                    )
            })
            .cloned()
    }

    /// Resolves a connection string to the node currently serving it.
    pub fn resolve_connection(&self, cs: &ConnectionString) -> Result<NodeId, ResolveError> {
        let group_name = self
            .virtual_names
            .get(&cs.server)
            .ok_or_else(|| ResolveError::NameError(cs.server.clone()))?;
        let group = self
            .groups
            .get(group_name)
            .ok_or_else(|| ResolveError::NameError(cs.server.clone()))?;
        group
            .serving_owner()
            .cloned()
            .ok_or_else(|| ResolveError::ServerNotFound(group_name.clone()))
    }

    /// Validates and starts an administrative move. Returns `None` for the
    /// zero-second no-op of moving a group onto its current owner.
    pub fn begin_move(
        &mut self,
        group_name: &str,
        target: &NodeId,
        t: u64,
        duration_s: u64,
        planned: bool,
        cause: &str,
    ) -> Result<Option<FailoverRecord>, MoveError> {
        if !self.nodes.contains_key(target) {
            return Err(MoveError::UnknownNode(target.0.clone()));
        }
        let up = matches!(self.node_status(target), Some(NodeStatus::Up));
        let group = self
            .groups
            .get_mut(group_name)
            .ok_or_else(|| MoveError::UnknownGroup(group_name.to_string()))?;
        if group.state != GroupState::Online {
            return Err(MoveError::GroupNotOnline(group_name.to_string()));
        }
        if !up {
            return Err(MoveError::MoveRejected {
                target: target.clone(),
                reason: "not up",
            });
        }
        if !group.preferred_owners.contains(target) {
            return Err(MoveError::MoveRejected {
                target: target.clone(),
                reason: "not a preferred owner",
            });
        }
        if group.current_owner.as_ref() == Some(target) {
            return Ok(None);
        }
        let from = group.current_owner.clone();
        group.state = GroupState::Moving {
            from: from.clone(),
            to: target.clone(),
            started_at: t,
            eta: t + duration_s,
        };
        group.current_owner = None;
        Ok(Some(FailoverRecord {
            group: group_name.to_string(),
            from,
            to: target.clone(),
            start: t,
            duration_s,
            planned,
            cause: cause.to_string(),
        }))
    }

    /// Starts an automatic failover of one group off a failed node.
    pub fn begin_failover(
        &mut self,
        group_name: &str,
        target: &NodeId,
        start: u64,
        duration_s: u64,
        cause: &str,
    ) -> FailoverRecord {
        let group = self.groups.get_mut(group_name).expect("group exists");
        let from = group.current_owner.clone();
        group.state = GroupState::Moving {
            from: from.clone(),
            to: target.clone(),
            started_at: start,
            eta: start + duration_s,
        };
        group.current_owner = None;
        FailoverRecord {
            group: group_name.to_string(),
            from,
            to: target.clone(),
            start,
            duration_s,
            planned: false,
            cause: cause.to_string(),
        }
    }

    /// Finishes a move: the group comes online on its destination.
    pub fn complete_move(&mut self, group_name: &str) {
        if let Some(group) = self.groups.get_mut(group_name) {
            if let GroupState::Moving { to, .. } = &group.state {
                group.current_owner = Some(to.clone());
                group.state = GroupState::Online;
            }
        }
    }

    pub fn mark_offline(&mut self, group_name: &str) {
        if let Some(group) = self.groups.get_mut(group_name) {
            group.current_owner = None;
            group.state = GroupState::Offline;
        }
    }

    pub fn set_node_status(&mut self, node: &NodeId, status: NodeStatus, t: u64) {
        if let Some(h) = self.nodes.get_mut(node) {
            h.status = status;
            if status != NodeStatus::Down {
                h.last_heartbeat = t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_default_topology;

    fn default_cluster() -> ClusterState {
        ClusterState::default_layout(&build_default_topology())
    }

    #[test]
    fn default_ownership_resolves_drg_to_sql1() {
        let cluster = default_cluster();
        let cs = ConnectionString::for_partition(Partition::DrgDb);
        assert_eq!(cs.server, "terravs1\\inst1");
        assert_eq!(
            cluster.resolve_connection(&cs).unwrap(),
            NodeId("SQL-1".into())
        );
    }

    #[test]
    fn resolution_mid_move_is_server_not_found() {
        let mut cluster = default_cluster();
        cluster
            .begin_move("DRG_DB", &NodeId("SQL-4".into()), 100, 39, true, "admin")
            .unwrap();
        let cs = ConnectionString::for_partition(Partition::DrgDb);
        assert!(matches!(
            cluster.resolve_connection(&cs),
            Err(ResolveError::ServerNotFound(_))
        ));
        cluster.complete_move("DRG_DB");
        assert_eq!(
            cluster.resolve_connection(&cs).unwrap(),
            NodeId("SQL-4".into())
        );
    }

    #[test]
    fn unknown_virtual_name_is_name_error() {
        let cluster = default_cluster();
        let cs = ConnectionString {
            server: "terravs9\\instX".into(),
            database: "nope".into(),
            network: "dbmssocn".into(),
        };
        assert!(matches!(
            cluster.resolve_connection(&cs),
            Err(ResolveError::NameError(_))
        ));
    }

    #[test]
    fn unchanged_connection_string_survives_a_move() {
        let mut cluster = default_cluster();
        let cs = ConnectionString::for_partition(Partition::Doq0);
        let before = cluster.resolve_connection(&cs).unwrap();
        assert_eq!(before, NodeId("SQL-2".into()));
        cluster
            .begin_move("DOQ_0", &NodeId("SQL-4".into()), 10, 45, true, "admin")
            .unwrap();
        cluster.complete_move("DOQ_0");
        let after = cluster.resolve_connection(&cs).unwrap();
        assert_eq!(after, NodeId("SQL-4".into()));
    }

    #[test]
    fn move_to_current_owner_is_a_noop() {
        let mut cluster = default_cluster();
        let rec = cluster
            .begin_move("DRG_DB", &NodeId("SQL-1".into()), 50, 39, true, "admin")
            .unwrap();
        assert!(rec.is_none());
        assert_eq!(
            cluster.group("DRG_DB").unwrap().state,
            GroupState::Online
        );
    }

    #[test]
    fn move_to_down_node_is_rejected() {
        let mut cluster = default_cluster();
        cluster.set_node_status(&NodeId("SQL-4".into()), NodeStatus::Down, 5);
        let err = cluster
            .begin_move("DRG_DB", &NodeId("SQL-4".into()), 10, 39, true, "admin")
            .unwrap_err();
        assert!(matches!(err, MoveError::MoveRejected { .. }));
    }

    #[test]
    fn failed_node_groups_prefer_the_passive_node() {
        let mut cluster = default_cluster();
        cluster.set_node_status(&NodeId("SQL-1".into()), NodeStatus::Down, 100);
        let target = cluster.next_owner("DRG_DB", &NodeId("SQL-1".into()));
        assert_eq!(target, Some(NodeId("SQL-4".into())));
    }

    #[test]
    fn multi_group_ownership_is_allowed() {
        let mut cluster = default_cluster();
        // SQL-4 already owns DOQ_0, then DRG_DB lands there too.
        cluster
            .begin_move("DOQ_0", &NodeId("SQL-4".into()), 10, 40, true, "admin")
            .unwrap();
        cluster.complete_move("DOQ_0");
        cluster.set_node_status(&NodeId("SQL-1".into()), NodeStatus::Down, 100);
        let target = cluster.next_owner("DRG_DB", &NodeId("SQL-1".into())).unwrap();
        assert_eq!(target, NodeId("SQL-4".into()));
    }

    #[test]
    fn no_healthy_target_when_all_down() {
        let mut cluster = default_cluster();
        for n in ["SQL-1", "SQL-2", "SQL-3", "SQL-4"] {
            cluster.set_node_status(&NodeId(n.into()), NodeStatus::Down, 10);
        }
        assert_eq!(cluster.next_owner("DRG_DB", &NodeId("SQL-1".into())), None);
    }

    #[test]
    fn hung_node_is_not_a_failover_target() {
        let mut cluster = default_cluster();
        cluster.set_node_status(&NodeId("SQL-4".into()), NodeStatus::Hung, 10);
        cluster.set_node_status(&NodeId("SQL-1".into()), NodeStatus::Down, 20);
        // Preferred order is [SQL-1, SQL-4, SQL-2, SQL-3]; hung SQL-4 is
        // skipped.
        assert_eq!(
            cluster.next_owner("DRG_DB", &NodeId("SQL-1".into())),
            Some(NodeId("SQL-2".into()))
        );
    }

    #[test]
    fn sampled_failover_durations_stay_in_range() {
        let model = FailoverModel::default();
        let mut rng = SimRng::new(42);
        for _ in 0..1000 {
            let d = model.sample(&mut rng);
            assert!((29..=90).contains(&d), "duration {d}");
        }
    }

    #[test]
    fn groups_hold_their_partition_volumes() {
        let cluster = default_cluster();
        let drg = cluster.group("DRG_DB").unwrap();
        let letters: Vec<char> = drg.resources.volumes.iter().map(|v| v.0).collect();
        assert_eq!(letters, vec!['E', 'F', 'G', 'H', 'I', 'T']);
        assert!(cluster.group(CLUSTER_GROUP).unwrap().partition.is_none());
    }
}
