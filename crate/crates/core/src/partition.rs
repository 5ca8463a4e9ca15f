//! Maps tile and metadata requests to database partitions: topographic
//! maps on one partition, aerial photos interleaved across two by UTM-zone
//! parity, and the gazetteer readable from any online partition.

use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::topology::{Partition, PartitionMap, Theme};

/// Conterminous-US coverage spans UTM zones 10 through 19.
pub const UTM_ZONE_MIN: u8 = 10;
pub const UTM_ZONE_MAX: u8 = 19;

/// Average compressed tile payload in kilobytes, used to convert request
/// rates into I/O demand.
pub const TILE_PAYLOAD_KB: u32 = 10;

/// Identifies one image tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileKey {
    pub theme: Theme,
    pub utm_zone: u8,
    pub scale: u8,
    pub row: u32,
    pub col: u32,
}

/// The three broad classes of database access behind a page view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestClass {
    GazetteerSearch,
    PageMetadata,
    TileFetch,
}

impl RequestClass {
    pub fn name(self) -> &'static str {
        match self {
            RequestClass::GazetteerSearch => "gazetteer-search",
            RequestClass::PageMetadata => "page-metadata",
            RequestClass::TileFetch => "tile-fetch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteError {
    #[error("UTM zone {0} outside conterminous-US range 10..=19")]
    BadRequest(u8),
    #[error("request class requires a tile key")]
    MissingKey,
    #[error("partition {0} is offline")]
    PartitionUnavailable(Partition),
    #[error("no gazetteer replica is online")]
    NoGazetteerReplica,
}

/// Which partitions are currently serving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartitionOnline {
    pub drg_db: bool,
    pub doq_0: bool,
    pub doq_1: bool,
}

impl PartitionOnline {
    pub fn all_online() -> Self {
        Self {
            drg_db: true,
            doq_0: true,
            doq_1: true,
        }
    }

    pub fn is_online(&self, p: Partition) -> bool {
        match p {
            Partition::DrgDb => self.drg_db,
            Partition::Doq0 => self.doq_0,
            Partition::Doq1 => self.doq_1,
        }
    }
}

/// Pure parity routing for data requests: same key, same partition, always.
pub fn data_partition(map: &PartitionMap, key: &TileKey) -> Result<Partition, RouteError> {
    if !(UTM_ZONE_MIN..=UTM_ZONE_MAX).contains(&key.utm_zone) {
        return Err(RouteError::BadRequest(key.utm_zone));
    }
    Ok(match key.theme {
        Theme::Drg => map.drg,
        Theme::Doq => {
            if key.utm_zone % 2 == 0 {
                map.doq_even
            } else {
                map.doq_odd
            }
        }
    })
}

/// Routes requests to partitions. Gazetteer searches rotate round-robin
/// over the online replicas, so the router carries a cursor; data routing
/// is stateless.
#[derive(Debug, Clone)]
pub struct Router {
    pub map: PartitionMap,
    gazetteer_cursor: usize,
}

impl Router {
    pub fn new(map: PartitionMap) -> Self {
        Self {
            map,
            gazetteer_cursor: 0,
        }
    }

    pub fn route(
        &mut self,
        class: RequestClass,
        key: Option<&TileKey>,
        online: &PartitionOnline,
    ) -> Result<Partition, RouteError> {
        match class {
            RequestClass::GazetteerSearch => {
                let replicas: alloc::vec::Vec<Partition> =
                    self.map.gazetteer_replicas.iter().copied().collect();
                if replicas.is_empty() {
                    return Err(RouteError::NoGazetteerReplica);
                }
                for offset in 0..replicas.len() {
                    let candidate = replicas[(self.gazetteer_cursor + offset) % replicas.len()];
                    if online.is_online(candidate) {
                        self.gazetteer_cursor =
                            (self.gazetteer_cursor + offset + 1) % replicas.len();
                        return Ok(candidate);
                    }
                }
                Err(RouteError::NoGazetteerReplica)
            }
            RequestClass::PageMetadata | RequestClass::TileFetch => {
                let key = key.ok_or(RouteError::MissingKey)?;
                let partition = data_partition(&self.map, key)?;
                if online.is_online(partition) {
                    Ok(partition)
                } else {
                    Err(RouteError::PartitionUnavailable(partition))
                }
            }
        }
    }
}

/// Imagery data per partition, in terabytes.
pub fn partition_sizes_tb(map: &PartitionMap) -> BTreeMap<Partition, f64> {
    let mut sizes = BTreeMap::new();
    sizes.insert(map.drg, map.drg_tb);
    sizes.insert(map.doq_even, map.doq0_tb);
    sizes.insert(map.doq_odd, map.doq1_tb);
    sizes
}

/// Meta-data per partition, in gigabytes; totals under 100 GB.
pub fn meta_sizes_gb(map: &PartitionMap) -> BTreeMap<Partition, f64> {
    Partition::ALL
        .iter()
        .map(|p| (*p, map.meta_gb_per_partition))
        .collect()
}
