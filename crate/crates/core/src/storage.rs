//! Volume availability under disk, controller, switch, and fabric faults;
//! deterministic SAN path selection with automatic rerouting; and the
//! calibrated I/O throughput envelope.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::topology::{
    ControllerId, DiskClass, DiskId, FabricId, NodeId, SectionId, SwitchId, Topology, VolumeSpec,
};

/// Lifecycle of one physical disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiskStatus {
    Healthy,
    Failed,
    Rebuilding,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskState {
    pub status: DiskStatus,
    pub fail_time: Option<u64>,
    pub rebuild_eta: Option<u64>,
}

impl DiskState {
    fn healthy() -> Self {
        Self {
            status: DiskStatus::Healthy,
            fail_time: None,
            rebuild_eta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("unknown disk {0}")]
    UnknownDisk(DiskId),
    #[error("disk {disk} cannot transition from {from:?} via {op}")]
    InvalidTransition {
        disk: DiskId,
        from: DiskStatus,
        op: &'static str,
    },
    #[error("unknown component {0}")]
    UnknownComponent(alloc::string::String),
    #[error("component {0} already in that state")]
    RedundantTransition(alloc::string::String),
}

/// Mutable health of every SAN component. Owned by the simulation kernel;
/// all queries against it are pure.
#[derive(Debug, Clone, Default)]
pub struct StorageState {
    pub disks: BTreeMap<DiskId, DiskState>,
    pub failed_switches: BTreeSet<SwitchId>,
    pub failed_controllers: BTreeSet<ControllerId>,
    pub failed_fabrics: BTreeSet<FabricId>,
    pub failed_hbas: BTreeSet<(NodeId, FabricId)>,
}

impl StorageState {
    pub fn new(topology: &Topology) -> Self {
        let disks = topology
            .sections
            .iter()
            .flat_map(|s| s.disks.iter())
            .map(|d| (d.id.clone(), DiskState::healthy()))
            .collect();
        Self {
            disks,
            ..Default::default()
        }
    }

    /// Registers disks added by an expansion step.
    pub fn adopt_new_disks(&mut self, topology: &Topology) {
        for section in &topology.sections {
            for d in &section.disks {
                self.disks
                    .entry(d.id.clone())
                    .or_insert_with(DiskState::healthy);
            }
        }
    }

    pub fn fail_disk(&mut self, disk: &DiskId, t: u64) -> Result<(), StorageError> {
        let state = self
            .disks
            .get_mut(disk)
            .ok_or_else(|| StorageError::UnknownDisk(disk.clone()))?;
        match state.status {
            DiskStatus::Healthy | DiskStatus::Rebuilding => {
                state.status = DiskStatus::Failed;
                state.fail_time = Some(t);
                state.rebuild_eta = None;
                Ok(())
            }
            DiskStatus::Failed => Err(StorageError::InvalidTransition {
                disk: disk.clone(),
                from: state.status,
                op: "fail",
            }),
        }
    }

    /// Swaps in a replacement; the mirror set is restored once the rebuild
    /// finishes at the returned time.
    pub fn replace_disk(
        &mut self,
        disk: &DiskId,
        t: u64,
        rebuild_duration_s: u64,
    ) -> Result<u64, StorageError> {
        let state = self
            .disks
            .get_mut(disk)
            .ok_or_else(|| StorageError::UnknownDisk(disk.clone()))?;
        if state.status != DiskStatus::Failed {
            return Err(StorageError::InvalidTransition {
                disk: disk.clone(),
                from: state.status,
                op: "replace",
            });
        }
        let eta = t + rebuild_duration_s;
        state.status = DiskStatus::Rebuilding;
        state.rebuild_eta = Some(eta);
        Ok(eta)
    }

    pub fn complete_rebuild(&mut self, disk: &DiskId) -> Result<(), StorageError> {
        let state = self
            .disks
            .get_mut(disk)
            .ok_or_else(|| StorageError::UnknownDisk(disk.clone()))?;
        if state.status != DiskStatus::Rebuilding {
            return Err(StorageError::InvalidTransition {
                disk: disk.clone(),
                from: state.status,
                op: "complete-rebuild",
            });
        }
        *state = DiskState::healthy();
        Ok(())
    }

    fn toggle<T: Ord + Clone + core::fmt::Display>(
        set: &mut BTreeSet<T>,
        item: &T,
        fail: bool,
    ) -> Result<(), StorageError> {
        let changed = if fail {
            set.insert(item.clone())
        } else {
            set.remove(item)
        };
        if changed {
            Ok(())
        } else {
            Err(StorageError::RedundantTransition(alloc::format!("{item}")))
        }
    }

    pub fn set_switch_failed(&mut self, id: &SwitchId, failed: bool) -> Result<(), StorageError> {
        Self::toggle(&mut self.failed_switches, id, failed)
    }

    pub fn set_controller_failed(
        &mut self,
        id: &ControllerId,
        failed: bool,
    ) -> Result<(), StorageError> {
        Self::toggle(&mut self.failed_controllers, id, failed)
    }

    pub fn set_fabric_failed(&mut self, id: FabricId, failed: bool) -> Result<(), StorageError> {
        Self::toggle(&mut self.failed_fabrics, &id, failed)
    }

    pub fn set_hba_failed(
        &mut self,
        node: &NodeId,
        fabric: FabricId,
        failed: bool,
    ) -> Result<(), StorageError> {
        let key = (node.clone(), fabric);
        let changed = if failed {
            self.failed_hbas.insert(key)
        } else {
            self.failed_hbas.remove(&key)
        };
        if changed {
            Ok(())
        } else {
            Err(StorageError::RedundantTransition(alloc::format!(
                "hba {node}:{fabric}"
            )))
        }
    }
}

/// Replica health of one volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeHealth {
    pub volume: crate::topology::VolumeId,
    /// Healthy replica count per mirror set.
    pub healthy_replicas: Vec<u8>,
    pub available: bool,
}

/// A volume is lost only when a single mirror set has at least `threshold`
/// members that are failed or still rebuilding.
pub fn volume_available(
    volume: &VolumeSpec,
    disks: &BTreeMap<DiskId, DiskState>,
    threshold: u8,
) -> Result<bool, StorageError> {
    Ok(volume_health(volume, disks, threshold)?.available)
}

pub fn volume_health(
    volume: &VolumeSpec,
    disks: &BTreeMap<DiskId, DiskState>,
    threshold: u8,
) -> Result<VolumeHealth, StorageError> {
    let mut healthy_replicas = Vec::with_capacity(volume.mirror_sets.len());
    let mut available = true;
    for set in &volume.mirror_sets {
        let mut healthy = 0u8;
        let mut lost = 0u8;
        for d in &set.disks {
            let state = disks
                .get(d)
                .ok_or_else(|| StorageError::UnknownDisk(d.clone()))?;
            if state.status == DiskStatus::Healthy {
                healthy += 1;
            } else {
                lost += 1;
            }
        }
        if lost >= threshold {
            available = false;
        }
        healthy_replicas.push(healthy);
    }
    Ok(VolumeHealth {
        volume: volume.id,
        healthy_replicas,
        available,
    })
}

/// A usable host-to-shelf route over the SAN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanPath {
    pub host: NodeId,
    pub fabric: FabricId,
    pub controller: ControllerId,
    pub section: SectionId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteFailure {
    #[error("no healthy path from {host} to section {section}")]
    Unreachable { host: NodeId, section: SectionId },
    #[error("unknown host {0}")]
    UnknownHost(NodeId),
    #[error("unknown section {0}")]
    UnknownSection(SectionId),
}

/// Picks a path from `host` to `section`, preferring the lowest-numbered
/// healthy data fabric and the first healthy controller of the pair. The
/// choice is a pure function of the fault state, so replays are stable.
pub fn route_san(
    topology: &Topology,
    host: &NodeId,
    section: &SectionId,
    state: &StorageState,
) -> Result<SanPath, RouteFailure> {
    let node = topology
        .node(host)
        .ok_or_else(|| RouteFailure::UnknownHost(host.clone()))?;
    let section_spec = topology
        .section(section)
        .ok_or_else(|| RouteFailure::UnknownSection(section.clone()))?;

    for fabric in topology.data_fabrics() {
        if state.failed_fabrics.contains(&fabric.id) {
            continue;
        }
        if !node.hba_fabrics.contains(&fabric.id) {
            continue;
        }
        if state.failed_hbas.contains(&(host.clone(), fabric.id)) {
            continue;
        }
        let Some(host_sw) = topology.host_switch(fabric, host) else {
            continue;
        };
        if state.failed_switches.contains(host_sw) {
            continue;
        }
        for ctrl in &section_spec.controllers {
            if state.failed_controllers.contains(ctrl) {
                continue;
            }
            let Some(ctrl_sw) = topology.controller_switch(fabric, ctrl) else {
                continue;
            };
            if state.failed_switches.contains(ctrl_sw) {
                continue;
            }
            return Ok(SanPath {
                host: host.clone(),
                fabric: fabric.id,
                controller: ctrl.clone(),
                section: section.clone(),
            });
        }
    }
    Err(RouteFailure::Unreachable {
        host: host.clone(),
        section: section.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IoKind {
    SeqRead,
    SeqWrite,
    RandRead,
    RandWrite,
}

impl IoKind {
    pub fn name(self) -> &'static str {
        match self {
            IoKind::SeqRead => "seq-read",
            IoKind::SeqWrite => "seq-write",
            IoKind::RandRead => "rand-read",
            IoKind::RandWrite => "rand-write",
        }
    }
}

/// Synthetic I/O test shape: sequential ops use 64 KB blocks, random 8 KB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoProfile {
    pub op_kind: IoKind,
    pub block_kb: u32,
    pub queue_depth: u32,
}

impl IoProfile {
    pub fn seq_read() -> Self {
        Self {
            op_kind: IoKind::SeqRead,
            block_kb: 64,
            queue_depth: 4,
        }
    }

    pub fn seq_write() -> Self {
        Self {
            op_kind: IoKind::SeqWrite,
            block_kb: 64,
            queue_depth: 4,
        }
    }

    pub fn rand_read(queue_depth: u32) -> Self {
        Self {
            op_kind: IoKind::RandRead,
            block_kb: 8,
            queue_depth,
        }
    }

    pub fn rand_write(queue_depth: u32) -> Self {
        Self {
            op_kind: IoKind::RandWrite,
            block_kb: 8,
            queue_depth,
        }
    }
}

pub const QUEUE_DEPTHS: [u32; 5] = [1, 4, 8, 16, 64];

/// Exponent chosen so an aggregate of five volumes delivers twice the
/// single-volume rate before the bandwidth cap: log(2)/log(5).
pub const AGGREGATE_SCALING_EXPONENT: f64 = 0.430_676_558_073_393_06;

/// Per-volume baseline rates and the fabric-wide bandwidth ceiling.
/// Baselines are measured at queue depth 4; other depths scale by the
/// saturation factors below.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageCalibration {
    pub san_bandwidth_cap_mbps: f64,
    pub rand_read_iops_fast: f64,
    pub rand_read_iops_slow: f64,
    pub rand_write_iops_fast: f64,
    pub rand_write_iops_slow: f64,
    pub seq_read_iops_fast: f64,
    pub seq_read_iops_slow: f64,
    pub seq_write_iops_fast: f64,
    pub seq_write_iops_slow: f64,
    /// Multipliers for queue depths 1, 4, 8, 16, 64.
    pub queue_depth_factors: [f64; 5],
    pub aggregate_scaling_exponent: f64,
}

impl Default for StorageCalibration {
    fn default() -> Self {
        Self {
            san_bandwidth_cap_mbps: 100.0,
            rand_read_iops_fast: 1200.0,
            rand_read_iops_slow: 1000.0,
            rand_write_iops_fast: 900.0,
            rand_write_iops_slow: 800.0,
            // 800 iops x 64 KB = 50 MB/s per volume, so five volumes meet
            // the 100 MB/s fabric ceiling exactly.
            seq_read_iops_fast: 800.0,
            seq_read_iops_slow: 800.0,
            seq_write_iops_fast: 640.0,
            seq_write_iops_slow: 640.0,
            queue_depth_factors: [0.45, 1.0, 1.35, 1.6, 1.85],
            aggregate_scaling_exponent: AGGREGATE_SCALING_EXPONENT,
        }
    }
}

impl StorageCalibration {
    fn base_iops(&self, kind: IoKind, class: DiskClass) -> f64 {
        match (kind, class) {
            (IoKind::RandRead, DiskClass::Fast18Gb15k) => self.rand_read_iops_fast,
            (IoKind::RandRead, DiskClass::Slow73Gb10k) => self.rand_read_iops_slow,
            (IoKind::RandWrite, DiskClass::Fast18Gb15k) => self.rand_write_iops_fast,
            (IoKind::RandWrite, DiskClass::Slow73Gb10k) => self.rand_write_iops_slow,
            (IoKind::SeqRead, DiskClass::Fast18Gb15k) => self.seq_read_iops_fast,
            (IoKind::SeqRead, DiskClass::Slow73Gb10k) => self.seq_read_iops_slow,
            (IoKind::SeqWrite, DiskClass::Fast18Gb15k) => self.seq_write_iops_fast,
            (IoKind::SeqWrite, DiskClass::Slow73Gb10k) => self.seq_write_iops_slow,
        }
    }

    fn depth_factor(&self, queue_depth: u32) -> f64 {
        QUEUE_DEPTHS
            .iter()
            .position(|d| *d == queue_depth)
            .map(|i| self.queue_depth_factors[i])
            .unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub mbps: f64,
    pub iops: f64,
}

/// Aggregate rate of the given profile across the listed volumes, clamped
/// at the SAN bandwidth cap. Zero volumes means zero demand.
pub fn throughput(
    cal: &StorageCalibration,
    profile: IoProfile,
    volume_classes: &[DiskClass],
) -> Throughput {
    let n = volume_classes.len();
    if n == 0 {
        return Throughput { mbps: 0.0, iops: 0.0 };
    }
    let factor = cal.depth_factor(profile.queue_depth);
    let raw_iops: f64 = volume_classes
        .iter()
        .map(|c| cal.base_iops(profile.op_kind, *c) * factor)
        .sum();
    // Fabric contention: n volumes deliver n^alpha times one volume.
    let scaled_iops =
        raw_iops * libm::pow(n as f64, cal.aggregate_scaling_exponent - 1.0);
    let raw_mbps = scaled_iops * profile.block_kb as f64 / 1024.0;
    if raw_mbps > cal.san_bandwidth_cap_mbps {
        let scale = cal.san_bandwidth_cap_mbps / raw_mbps;
        Throughput {
            mbps: cal.san_bandwidth_cap_mbps,
            iops: scaled_iops * scale,
        }
    } else {
        Throughput {
            mbps: raw_mbps,
            iops: scaled_iops,
        }
    }
}

/// Convenience wrapper for `count` volumes of one class.
pub fn throughput_uniform(
    cal: &StorageCalibration,
    profile: IoProfile,
    count: usize,
    class: DiskClass,
) -> Throughput {
    let classes: Vec<DiskClass> = core::iter::repeat(class).take(count).collect();
    throughput(cal, profile, &classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_default_topology, Partition, VolumeId};

    fn all_healthy(t: &Topology) -> StorageState {
        StorageState::new(t)
    }

    #[test]
    fn healthy_volume_is_available() {
        let t = build_default_topology();
        let state = all_healthy(&t);
        for v in &t.volumes {
            assert!(volume_available(v, &state.disks, 2).unwrap());
        }
    }

    #[test]
    fn one_failure_per_mirror_set_keeps_volume_available() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        let v = t.volume(VolumeId('F')).unwrap();
        for set in &v.mirror_sets {
            state.fail_disk(&set.disks[0], 10).unwrap();
        }
        assert!(volume_available(v, &state.disks, 2).unwrap());
    }

    #[test]
    fn two_failures_in_one_mirror_set_lose_the_volume() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        let v = t.volume(VolumeId('F')).unwrap();
        state.fail_disk(&v.mirror_sets[0].disks[0], 10).unwrap();
        state.fail_disk(&v.mirror_sets[0].disks[1], 20).unwrap();
        assert!(!volume_available(v, &state.disks, 2).unwrap());
        // With the threshold at 3, two failures still leave one replica.
        assert!(volume_available(v, &state.disks, 3).unwrap());
        state.fail_disk(&v.mirror_sets[0].disks[2], 30).unwrap();
        assert!(!volume_available(v, &state.disks, 3).unwrap());
    }

    #[test]
    fn unknown_disk_is_a_configuration_error() {
        let t = build_default_topology();
        let state = BTreeMap::new();
        let v = t.volume(VolumeId('E')).unwrap();
        assert!(matches!(
            volume_available(v, &state, 2),
            Err(StorageError::UnknownDisk(_))
        ));
    }

    #[test]
    fn double_fail_is_rejected() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        let d = t.sections[0].disks[0].id.clone();
        state.fail_disk(&d, 5).unwrap();
        assert!(matches!(
            state.fail_disk(&d, 6),
            Err(StorageError::InvalidTransition { .. })
        ));
    }

    #[test]
    fn replace_healthy_is_rejected() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        let d = t.sections[0].disks[0].id.clone();
        assert!(matches!(
            state.replace_disk(&d, 5, 4 * 3600),
            Err(StorageError::InvalidTransition { .. })
        ));
    }

    #[test]
    fn rebuild_counts_toward_threshold_until_complete() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        let v = t.volume(VolumeId('F')).unwrap();
        let d = v.mirror_sets[0].disks[0].clone();
        state.fail_disk(&d, 10).unwrap();
        let eta = state.replace_disk(&d, 100, 4 * 3600).unwrap();
        assert_eq!(eta, 100 + 4 * 3600);
        // Second failure in the same set during the rebuild window.
        state.fail_disk(&v.mirror_sets[0].disks[1], 200).unwrap();
        assert!(!volume_available(v, &state.disks, 2).unwrap());
        state.complete_rebuild(&d).unwrap();
        assert!(volume_available(v, &state.disks, 2).unwrap());
    }

    #[test]
    fn route_prefers_fabric_one_when_healthy() {
        let t = build_default_topology();
        let state = all_healthy(&t);
        let host = NodeId("SQL-1".into());
        for section in &t.sections {
            let path = route_san(&t, &host, &section.id, &state).unwrap();
            assert_eq!(path.fabric, 1);
            assert_eq!(path.controller, section.controllers[0]);
        }
    }

    #[test]
    fn failed_fabric_one_switch_reroutes_to_fabric_two() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        // Take out the fabric-1 switch that carries every HBA.
        state
            .set_switch_failed(&SwitchId("F1-SW1".into()), true)
            .unwrap();
        let host = NodeId("SQL-2".into());
        let section = &t.sections[0].id;
        let path = route_san(&t, &host, section, &state).unwrap();
        assert_eq!(path.fabric, 2);
    }

    #[test]
    fn failed_controller_uses_surviving_partner_same_fabric() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        let section = t.sections[0].clone();
        state
            .set_controller_failed(&section.controllers[0], true)
            .unwrap();
        let host = NodeId("SQL-1".into());
        let path = route_san(&t, &host, &section.id, &state).unwrap();
        assert_eq!(path.fabric, 1);
        assert_eq!(path.controller, section.controllers[1]);
    }

    #[test]
    fn every_single_component_fault_leaves_all_pairs_reachable() {
        let t = build_default_topology();
        let hosts: Vec<NodeId> = t.cluster_nodes().map(|n| n.id.clone()).collect();
        let mut faults: Vec<StorageState> = Vec::new();
        for f in t.data_fabrics() {
            let mut s = all_healthy(&t);
            s.set_fabric_failed(f.id, true).unwrap();
            faults.push(s);
            for sw in &f.switches {
                let mut s = all_healthy(&t);
                s.set_switch_failed(&sw.id, true).unwrap();
                faults.push(s);
            }
        }
        for section in &t.sections {
            for ctrl in &section.controllers {
                let mut s = all_healthy(&t);
                s.set_controller_failed(ctrl, true).unwrap();
                faults.push(s);
            }
        }
        for host in &hosts {
            for fabric in [1u8, 2u8] {
                let mut s = all_healthy(&t);
                s.set_hba_failed(host, fabric, true).unwrap();
                faults.push(s);
            }
        }
        for state in &faults {
            for host in &hosts {
                for section in &t.sections {
                    assert!(
                        route_san(&t, host, &section.id, state).is_ok(),
                        "unreachable under a single-component fault"
                    );
                }
            }
        }
    }

    #[test]
    fn route_is_deterministic() {
        let t = build_default_topology();
        let mut state = all_healthy(&t);
        state
            .set_switch_failed(&SwitchId("F1-SW2".into()), true)
            .unwrap();
        let host = NodeId("SQL-3".into());
        let section = &t.sections[4].id;
        let a = route_san(&t, &host, section, &state).unwrap();
        let b = route_san(&t, &host, section, &state).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequential_read_respects_bandwidth_cap() {
        let cal = StorageCalibration::default();
        for n in 1..=20 {
            let tp = throughput_uniform(&cal, IoProfile::seq_read(), n, DiskClass::Slow73Gb10k);
            assert!(tp.mbps <= cal.san_bandwidth_cap_mbps + 1e-9);
        }
    }

    #[test]
    fn five_volume_aggregate_doubles_single_volume() {
        let cal = StorageCalibration::default();
        for profile in [
            IoProfile::rand_read(4),
            IoProfile::rand_write(4),
            IoProfile::seq_read(),
        ] {
            for class in [DiskClass::Fast18Gb15k, DiskClass::Slow73Gb10k] {
                let one = throughput_uniform(&cal, profile, 1, class);
                let five = throughput_uniform(&cal, profile, 5, class);
                let ratio = five.mbps / one.mbps;
                assert!(
                    (ratio - 2.0).abs() <= 0.2,
                    "{profile:?} {class:?} ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn zero_demand_is_zero_throughput() {
        let cal = StorageCalibration::default();
        let tp = throughput(&cal, IoProfile::rand_read(4), &[]);
        assert_eq!(tp.mbps, 0.0);
        assert_eq!(tp.iops, 0.0);
    }

    #[test]
    fn pinned_rand_read_baselines() {
        let cal = StorageCalibration::default();
        let fast = throughput_uniform(&cal, IoProfile::rand_read(4), 1, DiskClass::Fast18Gb15k);
        let slow = throughput_uniform(&cal, IoProfile::rand_read(4), 1, DiskClass::Slow73Gb10k);
        assert_eq!(fast.iops, 1200.0);
        assert_eq!(slow.iops, 1000.0);
    }
}
