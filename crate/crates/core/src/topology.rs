//! Static hardware and network description: cluster nodes, SAN fabrics and
//! switches, storage shelf sections, triple-mirrored volumes, LANs, the web
//! tier, and the tape library. Immutable once built; every other module
//! consumes it read-only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Cluster node identifier, e.g. `SQL-1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub String);

/// SAN switch identifier, e.g. `F1-SW2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwitchId(pub String);

/// Disk controller identifier, e.g. `R1-top-A`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ControllerId(pub String);

/// Physical disk identifier, e.g. `R1-top-D03`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DiskId(pub String);

/// Shelf section identifier, e.g. `R2-mid`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SectionId(pub String);

/// Volume identifier: the Windows drive letter is the canonical id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VolumeId(pub char);

/// Web server identifier, e.g. `WEB-3` or `SOAP-1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WebServerId(pub String);

/// SAN fabric number (1 and 2 carry disk traffic, 3 carries tape).
pub type FabricId = u8;

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for ControllerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for DiskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for SectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for VolumeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for WebServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One of the three database partitions served by the cluster.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Partition {
    #[serde(rename = "DRG_DB")]
    DrgDb,
    #[serde(rename = "DOQ_0")]
    Doq0,
    #[serde(rename = "DOQ_1")]
    Doq1,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::DrgDb, Partition::Doq0, Partition::Doq1];

    pub fn name(self) -> &'static str {
        match self {
            Partition::DrgDb => "DRG_DB",
            Partition::Doq0 => "DOQ_0",
            Partition::Doq1 => "DOQ_1",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Disk speed/capacity class; also implies which data lives on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiskClass {
    #[serde(rename = "fast-18GB-15k")]
    Fast18Gb15k,
    #[serde(rename = "slow-73GB-10k")]
    Slow73Gb10k,
}

impl DiskClass {
    pub fn capacity_gb(self) -> u16 {
        match self {
            DiskClass::Fast18Gb15k => 18,
            DiskClass::Slow73Gb10k => 73,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    ClusterDb,
    Web,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum LanId {
    #[serde(rename = "HBLAN")]
    Hblan,
    #[serde(rename = "BELAN")]
    Belan,
    #[serde(rename = "FELAN")]
    Felan,
    #[serde(rename = "CORPNET")]
    CorpNet,
}

impl fmt::Display for LanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LanId::Hblan => "HBLAN",
            LanId::Belan => "BELAN",
            LanId::Felan => "FELAN",
            LanId::CorpNet => "CORPNET",
        };
        f.write_str(s)
    }
}

/// A database server in the cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub cpu_count: u8,
    pub role: NodeRole,
    /// Fabrics this node has a host bus adapter on.
    pub hba_fabrics: Vec<FabricId>,
    pub lans: BTreeSet<LanId>,
}

/// A switch within one fabric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchSpec {
    pub id: SwitchId,
    pub ports: u8,
}

/// Something plugged into a fabric switch port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    HostHba { node: NodeId },
    ControllerPort { controller: ControllerId },
    TapePort { index: u8 },
}

/// An endpoint and the switch it is cabled to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointAttachment {
    pub endpoint: Endpoint,
    pub switch: SwitchId,
}

/// One independent switched fibre-channel network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FabricSpec {
    pub id: FabricId,
    pub switches: Vec<SwitchSpec>,
    pub endpoints: Vec<EndpointAttachment>,
    /// Inter-switch trunk pairs; each trunk uses two ports on each side.
    pub trunks: Vec<(SwitchId, SwitchId)>,
    /// When set the fabric carries backup traffic only, never disk I/O.
    pub tape_only: bool,
}

pub const TRUNK_PORTS_PER_SIDE: u8 = 2;

impl FabricSpec {
    /// Ports consumed on a switch by endpoints plus trunk links.
    pub fn ports_used(&self, switch: &SwitchId) -> u8 {
        let endpoint_ports = self
            .endpoints
            .iter()
            .filter(|a| &a.switch == switch)
            .count() as u8;
        let trunk_ports = self
            .trunks
            .iter()
            .filter(|(a, b)| a == switch || b == switch)
            .count() as u8
            * TRUNK_PORTS_PER_SIDE;
        endpoint_ports + trunk_ports
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShelfLevel {
    Top,
    Mid,
    Bottom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskSpec {
    pub id: DiskId,
    pub capacity_gb: u16,
}

/// One third of a storage rack: a redundant controller pair plus its disks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShelfSectionSpec {
    pub id: SectionId,
    pub rack: u8,
    pub level: ShelfLevel,
    pub controllers: [ControllerId; 2],
    pub disk_class: DiskClass,
    pub disks: Vec<DiskSpec>,
}

/// Three physical disks holding identical copies of one logical extent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MirrorSet {
    pub disks: Vec<DiskId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContentRole {
    Meta,
    Imagery,
}

/// A striped set of triple mirrors exposed to the cluster as one drive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeSpec {
    pub id: VolumeId,
    pub disk_class: DiskClass,
    pub section: SectionId,
    pub mirror_sets: Vec<MirrorSet>,
    pub stripe_width: usize,
    /// Formatted capacity as presented to the OS, not raw disk arithmetic.
    pub exposed_capacity_gb: u32,
    pub partition: Partition,
    pub content_role: ContentRole,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LanSpec {
    pub id: LanId,
    pub redundant: bool,
    pub members: BTreeSet<String>,
}

/// Web site identifier: the interactive HTML site or the SOAP service.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Html,
    Soap,
}

impl Site {
    pub fn name(self) -> &'static str {
        match self {
            Site::Html => "html",
            Site::Soap => "soap",
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WebTierSpec {
    pub sites: BTreeMap<Site, Vec<WebServerId>>,
    /// Front-end switch each web server is cabled to.
    pub switch_assignment: BTreeMap<WebServerId, SwitchId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapeLibrarySpec {
    pub drives: u8,
    pub tape_native_capacity_gb: u32,
    pub per_drive_throughput_gb_per_h: f64,
    pub saveset_retention: u8,
    pub fabric: FabricId,
    pub ports: u8,
}

impl Default for TapeLibrarySpec {
    fn default() -> Self {
        Self {
            drives: 4,
            tape_native_capacity_gb: 100,
            per_drive_throughput_gb_per_h: 34.0,
            saveset_retention: 3,
            fabric: TAPE_FABRIC,
            ports: 2,
        }
    }
}

/// Request theme: aerial photography or topographic maps.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum Theme {
    Doq,
    Drg,
}

impl fmt::Display for Theme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theme::Doq => f.write_str("DOQ"),
            Theme::Drg => f.write_str("DRG"),
        }
    }
}

/// Theme plus UTM-zone-parity routing table, with replicated gazetteer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionMap {
    pub drg: Partition,
    pub doq_even: Partition,
    pub doq_odd: Partition,
    pub gazetteer_replicas: BTreeSet<Partition>,
    /// Imagery data sizes in terabytes.
    pub drg_tb: f64,
    pub doq0_tb: f64,
    pub doq1_tb: f64,
    /// Meta-data size per partition in gigabytes.
    pub meta_gb_per_partition: f64,
}

impl Default for PartitionMap {
    fn default() -> Self {
        let doq_total_tb = 2.5;
        let doq1_tb = 1.33;
        Self {
            drg: Partition::DrgDb,
            doq_even: Partition::Doq0,
            doq_odd: Partition::Doq1,
            gazetteer_replicas: Partition::ALL.iter().copied().collect(),
            drg_tb: 0.9,
            doq0_tb: doq_total_tb - doq1_tb,
            doq1_tb,
            meta_gb_per_partition: 30.0,
        }
    }
}

/// The complete static description consumed by the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Topology {
    pub topology_version: u32,
    pub nodes: Vec<NodeSpec>,
    pub fabrics: Vec<FabricSpec>,
    pub sections: Vec<ShelfSectionSpec>,
    pub volumes: Vec<VolumeSpec>,
    pub lans: Vec<LanSpec>,
    pub web: WebTierSpec,
    pub tape_library: Option<TapeLibrarySpec>,
    pub partition_map: PartitionMap,
}

pub const TOPOLOGY_VERSION: u32 = 1;
pub const SWITCH_PORTS: u8 = 16;
pub const TAPE_FABRIC: FabricId = 3;

pub const CLUSTER_NODES: [&str; 4] = ["SQL-1", "SQL-2", "SQL-3", "SQL-4"];
/// The hot-standby node that owns nothing in the default layout.
pub const PASSIVE_NODE: &str = "SQL-4";

impl Topology {
    pub fn node(&self, id: &NodeId) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn fabric(&self, id: FabricId) -> Option<&FabricSpec> {
        self.fabrics.iter().find(|f| f.id == id)
    }

    pub fn section(&self, id: &SectionId) -> Option<&ShelfSectionSpec> {
        self.sections.iter().find(|s| &s.id == id)
    }

    pub fn volume(&self, id: VolumeId) -> Option<&VolumeSpec> {
        self.volumes.iter().find(|v| v.id == id)
    }

    pub fn volumes_of(&self, partition: Partition) -> impl Iterator<Item = &VolumeSpec> {
        self.volumes.iter().filter(move |v| v.partition == partition)
    }

    pub fn data_fabrics(&self) -> impl Iterator<Item = &FabricSpec> {
        self.fabrics.iter().filter(|f| !f.tape_only)
    }

    pub fn cluster_nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.role == NodeRole::ClusterDb)
    }

    /// Section containing a given disk, if any.
    pub fn section_of_disk(&self, disk: &DiskId) -> Option<&ShelfSectionSpec> {
        self.sections
            .iter()
            .find(|s| s.disks.iter().any(|d| &d.id == disk))
    }

    /// Switch a controller's port is cabled to on the given fabric.
    pub fn controller_switch<'a>(
        &self,
        fabric: &'a FabricSpec,
        ctrl: &ControllerId,
    ) -> Option<&'a SwitchId> {
        fabric.endpoints.iter().find_map(|a| match &a.endpoint {
            Endpoint::ControllerPort { controller } if controller == ctrl => Some(&a.switch),
            _ => None,
        })
    }

    /// Switch a host's HBA is cabled to on the given fabric.
    pub fn host_switch<'a>(&self, fabric: &'a FabricSpec, node: &NodeId) -> Option<&'a SwitchId> {
        fabric.endpoints.iter().find_map(|a| match &a.endpoint {
            Endpoint::HostHba { node: n } if n == node => Some(&a.switch),
            _ => None,
        })
    }
}

fn section_id(rack: u8, level: ShelfLevel) -> SectionId {
    let lv = match level {
        ShelfLevel::Top => "top",
        ShelfLevel::Mid => "mid",
        ShelfLevel::Bottom => "bottom",
    };
    SectionId(format!("R{rack}-{lv}"))
}

fn make_section(rack: u8, level: ShelfLevel, class: DiskClass, disk_count: u8) -> ShelfSectionSpec {
    let id = section_id(rack, level);
    let disks = (1..=disk_count)
        .map(|i| DiskSpec {
            id: DiskId(format!("{}-D{:02}", id.0, i)),
            capacity_gb: class.capacity_gb(),
        })
        .collect();
    ShelfSectionSpec {
        controllers: [
            ControllerId(format!("{}-A", id.0)),
            ControllerId(format!("{}-B", id.0)),
        ],
        id,
        rack,
        level,
        disk_class: class,
        disks,
    }
}

/// Builds a volume striping the section's disks into 3-way mirror sets,
/// starting at `disk_offset`, consuming `sets * 3` disks.
fn make_volume(
    id: char,
    section: &ShelfSectionSpec,
    disk_offset: usize,
    sets: usize,
    exposed_gb: u32,
    partition: Partition,
    role: ContentRole,
) -> VolumeSpec {
    let mirror_sets: Vec<MirrorSet> = (0..sets)
        .map(|s| MirrorSet {
            disks: (0..3)
                .map(|m| section.disks[disk_offset + s * 3 + m].id.clone())
                .collect(),
        })
        .collect();
    VolumeSpec {
        id: VolumeId(id),
        disk_class: section.disk_class,
        section: section.id.clone(),
        stripe_width: mirror_sets.len(),
        mirror_sets,
        exposed_capacity_gb: exposed_gb,
        partition,
        content_role: role,
    }
}

fn cluster_node(id: &str, fabrics: Vec<FabricId>) -> NodeSpec {
    NodeSpec {
        id: NodeId(id.to_string()),
        cpu_count: 8,
        role: NodeRole::ClusterDb,
        hba_fabrics: fabrics,
        lans: [LanId::Hblan, LanId::Belan, LanId::CorpNet]
            .iter()
            .copied()
            .collect(),
    }
}

/// Builds a data fabric: HBAs on the first switch, controller ports spread
/// across switches rack by rack, switches trunked in a chain.
fn data_fabric(id: FabricId, switch_count: u8, racks: u8) -> FabricSpec {
    let switches: Vec<SwitchSpec> = (1..=switch_count)
        .map(|i| SwitchSpec {
            id: SwitchId(format!("F{id}-SW{i}")),
            ports: SWITCH_PORTS,
        })
        .collect();
    let mut endpoints = Vec::new();
    for node in CLUSTER_NODES {
        endpoints.push(EndpointAttachment {
            endpoint: Endpoint::HostHba {
                node: NodeId(node.to_string()),
            },
            switch: switches[0].id.clone(),
        });
    }
    // Rack -> switch placement keeps every switch under its port budget:
    // rack 1 with the HBAs, racks 2..N on the later switches.
    for rack in 1..=racks {
        let sw = match (switch_count, rack) {
            (2, 1) => 0,
            (2, _) => 1,
            (_, 1) => 0,
            (_, 2) => 1,
            _ => 2,
        };
        for level in [ShelfLevel::Top, ShelfLevel::Mid, ShelfLevel::Bottom] {
            let sid = section_id(rack, level);
            for suffix in ["A", "B"] {
                endpoints.push(EndpointAttachment {
                    endpoint: Endpoint::ControllerPort {
                        controller: ControllerId(format!("{}-{}", sid.0, suffix)),
                    },
                    switch: switches[sw].id.clone(),
                });
            }
        }
    }
    let trunks = switches
        .windows(2)
        .map(|w| (w[0].id.clone(), w[1].id.clone()))
        .collect();
    FabricSpec {
        id,
        switches,
        endpoints,
        trunks,
        tape_only: false,
    }
}

fn tape_fabric(library: &TapeLibrarySpec) -> FabricSpec {
    let switch = SwitchSpec {
        id: SwitchId(format!("F{TAPE_FABRIC}-SW1")),
        ports: SWITCH_PORTS,
    };
    let mut endpoints: Vec<EndpointAttachment> = CLUSTER_NODES
        .iter()
        .map(|node| EndpointAttachment {
            endpoint: Endpoint::HostHba {
                node: NodeId(node.to_string()),
            },
            switch: switch.id.clone(),
        })
        .collect();
    for i in 0..library.ports {
        endpoints.push(EndpointAttachment {
            endpoint: Endpoint::TapePort { index: i },
            switch: switch.id.clone(),
        });
    }
    FabricSpec {
        id: TAPE_FABRIC,
        switches: vec![switch],
        endpoints,
        trunks: Vec::new(),
        tape_only: true,
    }
}

fn lans(web_servers: &[WebServerId]) -> Vec<LanSpec> {
    let cluster: BTreeSet<String> = CLUSTER_NODES.iter().map(|n| n.to_string()).collect();
    let web: BTreeSet<String> = web_servers.iter().map(|w| w.0.clone()).collect();
    let mut belan = cluster.clone();
    belan.extend(web.iter().cloned());
    vec![
        LanSpec {
            id: LanId::Hblan,
            redundant: true,
            members: cluster.clone(),
        },
        LanSpec {
            id: LanId::Belan,
            redundant: true,
            members: belan,
        },
        LanSpec {
            id: LanId::Felan,
            redundant: true,
            members: web,
        },
        LanSpec {
            id: LanId::CorpNet,
            redundant: false,
            members: cluster,
        },
    ]
}

fn web_tier() -> WebTierSpec {
    let html: Vec<WebServerId> = (1..=6).map(|i| WebServerId(format!("WEB-{i}"))).collect();
    let soap: Vec<WebServerId> = (1..=4).map(|i| WebServerId(format!("SOAP-{i}"))).collect();
    let mut assignment = BTreeMap::new();
    for (i, s) in html.iter().enumerate() {
        let sw = if i < 3 { "FE-SW1" } else { "FE-SW2" };
        assignment.insert(s.clone(), SwitchId(sw.to_string()));
    }
    for (i, s) in soap.iter().enumerate() {
        let sw = if i < 2 { "FE-SW1" } else { "FE-SW2" };
        assignment.insert(s.clone(), SwitchId(sw.to_string()));
    }
    let mut sites = BTreeMap::new();
    sites.insert(Site::Html, html);
    sites.insert(Site::Soap, soap);
    WebTierSpec {
        sites,
        switch_assignment: assignment,
    }
}

/// The final configuration: four cluster nodes on three fabrics (two data,
/// one tape), four storage racks, volumes E through V, ten web servers, and
/// the SAN-attached tape library.
pub fn build_default_topology() -> Topology {
    let mut sections = Vec::new();
    for rack in 1..=3u8 {
        sections.push(make_section(rack, ShelfLevel::Top, DiskClass::Fast18Gb15k, 18));
        sections.push(make_section(rack, ShelfLevel::Mid, DiskClass::Slow73Gb10k, 30));
        sections.push(make_section(rack, ShelfLevel::Bottom, DiskClass::Slow73Gb10k, 30));
    }
    for level in [ShelfLevel::Top, ShelfLevel::Mid, ShelfLevel::Bottom] {
        sections.push(make_section(4, level, DiskClass::Slow73Gb10k, 30));
    }
    let volumes = volume_assignments(&sections, true);
    let library = TapeLibrarySpec::default();
    let web = web_tier();
    let web_ids: Vec<WebServerId> = web.switch_assignment.keys().cloned().collect();
    Topology {
        topology_version: TOPOLOGY_VERSION,
        nodes: CLUSTER_NODES
            .iter()
            .map(|n| cluster_node(n, vec![1, 2, TAPE_FABRIC]))
            .collect(),
        fabrics: vec![
            data_fabric(1, 3, 4),
            data_fabric(2, 3, 4),
            tape_fabric(&library),
        ],
        sections,
        volumes,
        lans: lans(&web_ids),
        web,
        tape_library: Some(library),
        partition_map: PartitionMap::default(),
    }
}

/// The pre-expansion configuration: three racks, two fabrics, no tape
/// library on the SAN, and no 678 GB volumes.
pub fn build_initial_topology() -> Topology {
    let mut sections = Vec::new();
    for rack in 1..=3u8 {
        sections.push(make_section(rack, ShelfLevel::Top, DiskClass::Fast18Gb15k, 18));
        sections.push(make_section(rack, ShelfLevel::Mid, DiskClass::Slow73Gb10k, 30));
        sections.push(make_section(rack, ShelfLevel::Bottom, DiskClass::Slow73Gb10k, 30));
    }
    let volumes = volume_assignments(&sections, false);
    let web = web_tier();
    let web_ids: Vec<WebServerId> = web.switch_assignment.keys().cloned().collect();
    Topology {
        topology_version: TOPOLOGY_VERSION,
        nodes: CLUSTER_NODES
            .iter()
            .map(|n| cluster_node(n, vec![1, 2]))
            .collect(),
        fabrics: vec![data_fabric(1, 2, 3), data_fabric(2, 2, 3)],
        sections,
        volumes,
        lans: lans(&web_ids),
        web,
        tape_library: None,
        partition_map: PartitionMap::default(),
    }
}

/// Drive-letter layout: each partition owns one fast meta volume plus
/// imagery volumes; the fourth rack adds one 678 GB volume per partition.
fn volume_assignments(sections: &[ShelfSectionSpec], with_rack4: bool) -> Vec<VolumeSpec> {
    let sec = |rack: u8, level: ShelfLevel| -> &ShelfSectionSpec {
        let id = section_id(rack, level);
        sections.iter().find(|s| s.id == id).expect("section exists")
    };
    // (letter, rack, level, half) where half selects disks 0..15 or 15..30
    // of a slow section; fast sections hold a single 18-disk volume.
    let slow = |letter: char, rack: u8, level: ShelfLevel, half: usize, part: Partition| {
        make_volume(
            letter,
            sec(rack, level),
            half * 15,
            5,
            339,
            part,
            ContentRole::Imagery,
        )
    };
    let meta = |letter: char, rack: u8, part: Partition| {
        make_volume(letter, sec(rack, ShelfLevel::Top), 0, 6, 102, part, ContentRole::Meta)
    };
    let mut volumes = vec![
        meta('E', 1, Partition::DrgDb),
        slow('F', 1, ShelfLevel::Mid, 0, Partition::DrgDb),
        slow('G', 1, ShelfLevel::Mid, 1, Partition::DrgDb),
        slow('H', 1, ShelfLevel::Bottom, 0, Partition::DrgDb),
        slow('I', 1, ShelfLevel::Bottom, 1, Partition::DrgDb),
        meta('J', 2, Partition::Doq0),
        slow('K', 2, ShelfLevel::Mid, 0, Partition::Doq0),
        slow('L', 2, ShelfLevel::Mid, 1, Partition::Doq0),
        slow('M', 2, ShelfLevel::Bottom, 0, Partition::Doq0),
        slow('N', 2, ShelfLevel::Bottom, 1, Partition::Doq0),
        meta('O', 3, Partition::Doq1),
        slow('P', 3, ShelfLevel::Mid, 0, Partition::Doq1),
        slow('Q', 3, ShelfLevel::Mid, 1, Partition::Doq1),
        slow('R', 3, ShelfLevel::Bottom, 0, Partition::Doq1),
        slow('S', 3, ShelfLevel::Bottom, 1, Partition::Doq1),
    ];
    if with_rack4 {
        volumes.extend(rack4_volumes(sections));
    }
    volumes
}

/// The three expansion volumes: ten mirror sets per section, 678 GB each.
pub fn rack4_volumes(sections: &[ShelfSectionSpec]) -> Vec<VolumeSpec> {
    let sec = |level: ShelfLevel| -> &ShelfSectionSpec {
        let id = section_id(4, level);
        sections.iter().find(|s| s.id == id).expect("rack 4 section")
    };
    vec![
        make_volume('T', sec(ShelfLevel::Top), 0, 10, 678, Partition::DrgDb, ContentRole::Imagery),
        make_volume('U', sec(ShelfLevel::Mid), 0, 10, 678, Partition::Doq0, ContentRole::Imagery),
        make_volume(
            'V',
            sec(ShelfLevel::Bottom),
            0,
            10,
            678,
            Partition::Doq1,
            ContentRole::Imagery,
        ),
    ]
}

/// A broken invariant found by [`validate_topology`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MirrorSetSize {
        volume: VolumeId,
        set_index: usize,
        size: usize,
    },
    DiskShared {
        disk: DiskId,
        first_volume: VolumeId,
        second_volume: VolumeId,
    },
    UnknownDisk {
        volume: VolumeId,
        disk: DiskId,
    },
    PortOverflow {
        fabric: FabricId,
        switch: SwitchId,
        used: u8,
        capacity: u8,
    },
    WrongDiskClass {
        volume: VolumeId,
        expected: DiskClass,
        actual: DiskClass,
    },
    VolumeSpansSections {
        volume: VolumeId,
    },
    SectionControllerFabricGap {
        controller: ControllerId,
        fabric: FabricId,
    },
    NodeFabricCount {
        node: NodeId,
        count: usize,
    },
    NodeLanMissing {
        node: NodeId,
        lan: LanId,
    },
    LanRedundancy {
        lan: LanId,
        expected_redundant: bool,
    },
    WebSplitUneven {
        site: Site,
        counts: Vec<usize>,
    },
    MetaVolumeCount {
        partition: Partition,
        count: usize,
    },
    StripeWidthMismatch {
        volume: VolumeId,
    },
    TapeFabricDiskEndpoint {
        fabric: FabricId,
        controller: ControllerId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MirrorSetSize { volume, set_index, size } => write!(
                f,
                "volume {volume} mirror set {set_index} has {size} members, expected 3"
            ),
            Violation::DiskShared { disk, first_volume, second_volume } => write!(
                f,
                "disk {disk} belongs to both volume {first_volume} and volume {second_volume}"
            ),
            Violation::UnknownDisk { volume, disk } => {
                write!(f, "volume {volume} references unknown disk {disk}")
            }
            Violation::PortOverflow { fabric, switch, used, capacity } => write!(
                f,
                "fabric {fabric} switch {switch} uses {used} ports, capacity {capacity}"
            ),
            Violation::WrongDiskClass { volume, expected, actual } => write!(
                f,
                "volume {volume} is on {actual:?} disks, its content requires {expected:?}"
            ),
            Violation::VolumeSpansSections { volume } => {
                write!(f, "volume {volume} has disks outside its shelf section")
            }
            Violation::SectionControllerFabricGap { controller, fabric } => {
                write!(f, "controller {controller} has no port on data fabric {fabric}")
            }
            Violation::NodeFabricCount { node, count } => write!(
                f,
                "cluster node {node} connects to {count} SAN fabric(s), expected at least 2"
            ),
            Violation::NodeLanMissing { node, lan } => {
                write!(f, "cluster node {node} is not a member of {lan}")
            }
            Violation::LanRedundancy { lan, expected_redundant } => write!(
                f,
                "LAN {lan} redundancy should be {expected_redundant}"
            ),
            Violation::WebSplitUneven { site, counts } => {
                write!(f, "site {site} servers split unevenly across switches: {counts:?}")
            }
            Violation::MetaVolumeCount { partition, count } => write!(
                f,
                "partition {partition} owns {count} fast meta volume(s), expected exactly 1"
            ),
            Violation::StripeWidthMismatch { volume } => {
                write!(f, "volume {volume} stripe_width disagrees with its mirror set count")
            }
            Violation::TapeFabricDiskEndpoint { fabric, controller } => write!(
                f,
                "tape-only fabric {fabric} carries disk controller {controller}"
            ),
        }
    }
}

/// Checks every structural invariant; an empty result means valid.
pub fn validate_topology(t: &Topology) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut disk_owner: BTreeMap<&DiskId, VolumeId> = BTreeMap::new();
    let known_disks: BTreeMap<&DiskId, &SectionId> = t
        .sections
        .iter()
        .flat_map(|s| s.disks.iter().map(move |d| (&d.id, &s.id)))
        .collect();

    for v in &t.volumes {
        if v.stripe_width != v.mirror_sets.len() {
            out.push(Violation::StripeWidthMismatch { volume: v.id });
        }
        let expected_class = match v.content_role {
            ContentRole::Meta => DiskClass::Fast18Gb15k,
            ContentRole::Imagery => DiskClass::Slow73Gb10k,
        };
        if v.disk_class != expected_class {
            out.push(Violation::WrongDiskClass {
                volume: v.id,
                expected: expected_class,
                actual: v.disk_class,
            });
        }
        for (i, set) in v.mirror_sets.iter().enumerate() {
            if set.disks.len() != 3 {
                out.push(Violation::MirrorSetSize {
                    volume: v.id,
                    set_index: i,
                    size: set.disks.len(),
                });
            }
            for d in &set.disks {
                match known_disks.get(d) {
                    None => out.push(Violation::UnknownDisk {
                        volume: v.id,
                        disk: d.clone(),
                    }),
                    Some(sec) => {
                        if **sec != v.section {
                            out.push(Violation::VolumeSpansSections { volume: v.id });
                        }
                    }
                }
                if let Some(prev) = disk_owner.insert(d, v.id) {
                    if prev != v.id {
                        out.push(Violation::DiskShared {
                            disk: d.clone(),
                            first_volume: prev,
                            second_volume: v.id,
                        });
                    }
                }
            }
        }
    }

    for fabric in &t.fabrics {
        for sw in &fabric.switches {
            let used = fabric.ports_used(&sw.id);
            if used > sw.ports {
                out.push(Violation::PortOverflow {
                    fabric: fabric.id,
                    switch: sw.id.clone(),
                    used,
                    capacity: sw.ports,
                });
            }
        }
        if fabric.tape_only {
            for a in &fabric.endpoints {
                if let Endpoint::ControllerPort { controller } = &a.endpoint {
                    out.push(Violation::TapeFabricDiskEndpoint {
                        fabric: fabric.id,
                        controller: controller.clone(),
                    });
                }
            }
        }
    }

    // Every section controller must reach every data fabric.
    for section in &t.sections {
        for ctrl in &section.controllers {
            for fabric in t.data_fabrics() {
                if t.controller_switch(fabric, ctrl).is_none() {
                    out.push(Violation::SectionControllerFabricGap {
                        controller: ctrl.clone(),
                        fabric: fabric.id,
                    });
                }
            }
        }
    }

    let data_fabric_ids: BTreeSet<FabricId> = t.data_fabrics().map(|f| f.id).collect();
    for node in t.cluster_nodes() {
        let data_hbas = node
            .hba_fabrics
            .iter()
            .filter(|f| data_fabric_ids.contains(f))
            .count();
        if data_hbas < 2 {
            out.push(Violation::NodeFabricCount {
                node: node.id.clone(),
                count: data_hbas,
            });
        }
        for lan in [LanId::Hblan, LanId::Belan, LanId::CorpNet] {
            if !node.lans.contains(&lan) {
                out.push(Violation::NodeLanMissing {
                    node: node.id.clone(),
                    lan,
                });
            }
        }
    }

    for lan in &t.lans {
        let expected = lan.id != LanId::CorpNet;
        if lan.redundant != expected {
            out.push(Violation::LanRedundancy {
                lan: lan.id,
                expected_redundant: expected,
            });
        }
    }

    // Front-end switch split must be even per site.
    let mut switch_ids: BTreeSet<&SwitchId> = BTreeSet::new();
    for sw in t.web.switch_assignment.values() {
        switch_ids.insert(sw);
    }
    for (site, servers) in &t.web.sites {
        let counts: Vec<usize> = switch_ids
            .iter()
            .map(|sw| {
                servers
                    .iter()
                    .filter(|s| t.web.switch_assignment.get(*s) == Some(*sw))
                    .count()
            })
            .collect();
        if counts.iter().max() != counts.iter().min() {
            out.push(Violation::WebSplitUneven {
                site: *site,
                counts,
            });
        }
    }

    for partition in Partition::ALL {
        let metas = t
            .volumes_of(partition)
            .filter(|v| v.content_role == ContentRole::Meta && v.disk_class == DiskClass::Fast18Gb15k)
            .count();
        if metas != 1 {
            out.push(Violation::MetaVolumeCount {
                partition,
                count: metas,
            });
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fabric_one_has_28_endpoints() {
        let t = build_default_topology();
        let f1 = t.fabric(1).unwrap();
        assert_eq!(f1.endpoints.len(), 28);
        let f2 = t.fabric(2).unwrap();
        assert_eq!(f2.endpoints.len(), 28);
    }

    #[test]
    fn tape_fabric_endpoint_count_is_hosts_plus_library_ports() {
        let t = build_default_topology();
        let f3 = t.fabric(TAPE_FABRIC).unwrap();
        let lib = t.tape_library.as_ref().unwrap();
        assert!(f3.tape_only);
        assert_eq!(f3.endpoints.len(), 4 + lib.ports as usize);
    }

    #[test]
    fn volume_t_is_drg_678gb() {
        let t = build_default_topology();
        let v = t.volume(VolumeId('T')).unwrap();
        assert_eq!(v.partition, Partition::DrgDb);
        assert_eq!(v.exposed_capacity_gb, 678);
        assert_eq!(v.mirror_sets.len(), 10);
    }

    #[test]
    fn default_topology_validates_clean() {
        assert_eq!(validate_topology(&build_default_topology()), vec![]);
    }

    #[test]
    fn initial_topology_validates_clean() {
        assert_eq!(validate_topology(&build_initial_topology()), vec![]);
    }

    #[test]
    fn initial_topology_has_two_fabrics_no_tape() {
        let t = build_initial_topology();
        assert_eq!(t.fabrics.len(), 2);
        assert!(t.tape_library.is_none());
        assert!(t.volume(VolumeId('T')).is_none());
    }

    #[test]
    fn initial_topology_has_four_slow_volumes_per_partition() {
        let t = build_initial_topology();
        for p in Partition::ALL {
            let slow: Vec<_> = t
                .volumes_of(p)
                .filter(|v| v.disk_class == DiskClass::Slow73Gb10k)
                .collect();
            assert_eq!(slow.len(), 4);
            assert!(slow.iter().all(|v| v.exposed_capacity_gb == 339));
        }
    }

    #[test]
    fn drive_letter_assignments_follow_layout() {
        let t = build_default_topology();
        let letters = |p: Partition| -> Vec<char> {
            t.volumes_of(p).map(|v| v.id.0).collect()
        };
        assert_eq!(letters(Partition::DrgDb), vec!['E', 'F', 'G', 'H', 'I', 'T']);
        assert_eq!(letters(Partition::Doq0), vec!['J', 'K', 'L', 'M', 'N', 'U']);
        assert_eq!(letters(Partition::Doq1), vec!['O', 'P', 'Q', 'R', 'S', 'V']);
        for meta in ['E', 'J', 'O'] {
            let v = t.volume(VolumeId(meta)).unwrap();
            assert_eq!(v.content_role, ContentRole::Meta);
            assert_eq!(v.disk_class, DiskClass::Fast18Gb15k);
            assert_eq!(v.exposed_capacity_gb, 102);
        }
    }

    #[test]
    fn two_disk_mirror_set_is_flagged() {
        let mut t = build_default_topology();
        t.volumes[0].mirror_sets[0].disks.pop();
        let violations = validate_topology(&t);
        assert!(violations.iter().any(|v| matches!(
            v,
            Violation::MirrorSetSize { set_index: 0, size: 2, .. }
        )));
    }

    #[test]
    fn shared_disk_is_flagged() {
        let mut t = build_default_topology();
        let stolen = t.volumes[0].mirror_sets[0].disks[0].clone();
        t.volumes[1].mirror_sets[0].disks[0] = stolen;
        let violations = validate_topology(&t);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::DiskShared { .. })));
        // The stolen disk also sits outside volume F's section.
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::VolumeSpansSections { .. })));
    }

    #[test]
    fn port_overflow_is_flagged_by_exhaustive_count() {
        let mut t = build_default_topology();
        // Cram every fabric-1 endpoint onto one switch: 28 endpoints plus
        // 2 trunk ports exceeds the 16-port capacity.
        let sw = t.fabrics[0].switches[0].id.clone();
        for att in &mut t.fabrics[0].endpoints {
            att.switch = sw.clone();
        }
        let violations = validate_topology(&t);
        let overflow = violations.iter().find_map(|v| match v {
            Violation::PortOverflow { switch, used, capacity, .. } if *switch == sw => {
                Some((*used, *capacity))
            }
            _ => None,
        });
        let (used, capacity) = overflow.expect("overflow reported");
        // Manual count: 28 endpoints + 2 ports for the one trunk this
        // switch participates in.
        assert_eq!(used, 30);
        assert_eq!(capacity, 16);
    }

    #[test]
    fn meta_on_slow_disks_is_flagged() {
        let mut t = build_default_topology();
        let e = t.volumes.iter_mut().find(|v| v.id == VolumeId('E')).unwrap();
        e.disk_class = DiskClass::Slow73Gb10k;
        let violations = validate_topology(&t);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::WrongDiskClass { .. })));
    }

    #[test]
    fn every_volume_sits_in_one_section_with_dual_fabric_controllers() {
        let t = build_default_topology();
        for v in &t.volumes {
            let section = t.section(&v.section).unwrap();
            for set in &v.mirror_sets {
                for d in &set.disks {
                    assert_eq!(t.section_of_disk(d).unwrap().id, section.id);
                }
            }
            for ctrl in &section.controllers {
                for fabric in t.data_fabrics() {
                    assert!(t.controller_switch(fabric, ctrl).is_some());
                }
            }
        }
    }
}
