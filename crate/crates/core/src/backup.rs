//! SAN-attached tape library model: weekend full-backup schedule,
//! throughput and tape-count accounting, and restore verification against
//! a second library.
//!
//! Backups run online through the tape fabric and never cost the database
//! partitions any availability; the data loader simply pauses for the
//! window.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::partition::partition_sizes_tb;
use crate::topology::{Partition, PartitionMap, TapeLibrarySpec};

/// Gigabytes per terabyte in capacity math (binary units, matching how the
/// drive throughput calibration was measured).
pub const GB_PER_TB: f64 = 1024.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobStatus {
    Ok,
    Failed { cause: String },
}

/// One full backup of one partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackupJob {
    pub partition: Partition,
    pub data_tb: f64,
    pub start: u64,
    pub duration_s: u64,
    pub tapes_used: u32,
    pub status: JobStatus,
    /// The data loader pauses while the job runs.
    pub loader_paused: bool,
    pub throughput_gb_per_h: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackupError {
    #[error("restore verification requires a completed job, got {0:?}")]
    JobNotOk(JobStatus),
    #[error("negative data size")]
    NegativeData,
}

/// Duration and tape consumption for a full backup.
///
/// Each drive writes its own tape stream, so tapes are consumed per drive:
/// `drives * ceil(data / drives / tape_capacity)`. Duration divides the
/// data evenly across drives at the per-drive rate, with an optional
/// per-job throughput override.
pub fn plan_backup(
    data_tb: f64,
    library: &TapeLibrarySpec,
    throughput_gb_per_h: Option<f64>,
) -> Result<(u64, u32, f64), BackupError> {
    if data_tb < 0.0 {
        return Err(BackupError::NegativeData);
    }
    let drives = library.drives.max(1) as f64;
    let per_drive = throughput_gb_per_h.unwrap_or(library.per_drive_throughput_gb_per_h);
    let data_gb = data_tb * GB_PER_TB;
    if data_gb == 0.0 {
        return Ok((0, 0, per_drive));
    }
    let hours = data_gb / (drives * per_drive);
    let duration_s = libm::round(hours * 3600.0) as u64;
    let per_drive_gb = data_gb / drives;
    let tapes = library.drives.max(1) as u32
        * libm::ceil(per_drive_gb / library.tape_native_capacity_gb as f64) as u32;
    Ok((duration_s, tapes, per_drive))
}

/// Builds the job record for a backup starting at `start`.
pub fn run_backup(
    partition: Partition,
    data_tb: f64,
    start: u64,
    library: &TapeLibrarySpec,
    throughput_gb_per_h: Option<f64>,
) -> Result<BackupJob, BackupError> {
    let (duration_s, tapes_used, rate) = plan_backup(data_tb, library, throughput_gb_per_h)?;
    Ok(BackupJob {
        partition,
        data_tb,
        start,
        duration_s,
        tapes_used,
        status: JobStatus::Ok,
        loader_paused: true,
        throughput_gb_per_h: rate,
    })
}

/// Weekend slot offsets from Monday 00:00: Saturday 2 AM, Saturday 2 PM,
/// Sunday 2 AM.
pub const WEEKEND_SLOTS: [(Partition, u64); 3] = [
    (Partition::DrgDb, 5 * 86_400 + 2 * 3_600),
    (Partition::Doq0, 5 * 86_400 + 14 * 3_600),
    (Partition::Doq1, 6 * 86_400 + 2 * 3_600),
];

pub const SECONDS_PER_WEEK: u64 = 7 * 86_400;

/// A scheduled (not yet run) full backup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledBackup {
    pub partition: Partition,
    pub start: u64,
    pub data_tb: f64,
}

/// The three full-backup jobs for week `week` (0-based from the simulation
/// start, a Monday). Full backups only, never incremental.
pub fn schedule_weekend(week: u64, map: &PartitionMap) -> Vec<ScheduledBackup> {
    let sizes = partition_sizes_tb(map);
    WEEKEND_SLOTS
        .iter()
        .map(|(partition, offset)| ScheduledBackup {
            partition: *partition,
            start: week * SECONDS_PER_WEEK + offset,
            data_tb: sizes[partition],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestoreOutcome {
    Ok,
    Failed { cause: String },
}

/// Replays a saveset on a different library. Deterministically succeeds
/// unless a tape-labeling misconfiguration is injected.
pub fn verify_restore(job: &BackupJob, label_fault: bool) -> Result<RestoreOutcome, BackupError> {
    if job.status != JobStatus::Ok {
        return Err(BackupError::JobNotOk(job.status.clone()));
    }
    if label_fault {
        Ok(RestoreOutcome::Failed {
            cause: "tape-labeling".to_string(),
        })
    } else {
        Ok(RestoreOutcome::Ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn library() -> TapeLibrarySpec {
        TapeLibrarySpec::default()
    }

    #[test]
    fn typical_backup_takes_under_eight_hours_on_twelve_tapes() {
        let (duration_s, tapes, _) = plan_backup(1.05, &library(), None).unwrap();
        let hours = duration_s as f64 / 3600.0;
        assert!((hours - 7.9).abs() <= 0.1, "hours {hours}");
        assert_eq!(tapes, 12);
    }

    #[test]
    fn zero_bytes_is_instant_and_tapeless() {
        let (duration_s, tapes, _) = plan_backup(0.0, &library(), None).unwrap();
        assert_eq!(duration_s, 0);
        assert_eq!(tapes, 0);
    }

    #[test]
    fn halving_drives_doubles_time_but_not_tapes() {
        let two_drive = TapeLibrarySpec {
            drives: 2,
            ..library()
        };
        let (d4, t4, _) = plan_backup(1.05, &library(), None).unwrap();
        let (d2, t2, _) = plan_backup(1.05, &two_drive, None).unwrap();
        assert_eq!(d2, d4 * 2);
        // Oracle: 1.05 TB * 1024 GB / (2 * 34 GB/h) = 15.81 h, and each
        // drive's 537.6 GB stream still needs 6 tapes.
        let hours = d2 as f64 / 3600.0;
        assert!((hours - 15.81).abs() < 0.01, "hours {hours}");
        assert_eq!(t4, 12);
        assert_eq!(t2, 12);
    }

    #[test]
    fn duration_scales_linearly_with_data() {
        let (d1, _, _) = plan_backup(0.5, &library(), None).unwrap();
        let (d2, _, _) = plan_backup(1.0, &library(), None).unwrap();
        let (d4, _, _) = plan_backup(2.0, &library(), None).unwrap();
        assert_eq!(d2, d1 * 2);
        assert_eq!(d4, d2 * 2);
    }

    #[test]
    fn terabyte_class_backup_finishes_inside_eight_hours() {
        let (duration_s, _, _) = plan_backup(1.0, &library(), None).unwrap();
        assert!(duration_s < 8 * 3600);
    }

    #[test]
    fn tape_capacity_always_covers_the_data() {
        for tenths in 1..=30u32 {
            let tb = tenths as f64 / 10.0;
            let (_, tapes, _) = plan_backup(tb, &library(), None).unwrap();
            assert!(
                tapes as f64 * library().tape_native_capacity_gb as f64 >= tb * GB_PER_TB,
                "{tb} TB on {tapes} tapes"
            );
        }
    }

    #[test]
    fn weekend_schedule_is_sat_sat_sun() {
        let jobs = schedule_weekend(0, &PartitionMap::default());
        assert_eq!(jobs.len(), 3);
        assert_eq!(jobs[0].partition, Partition::DrgDb);
        assert_eq!(jobs[0].start, 5 * 86_400 + 2 * 3_600);
        assert_eq!(jobs[1].partition, Partition::Doq0);
        assert_eq!(jobs[1].start, 5 * 86_400 + 14 * 3_600);
        assert_eq!(jobs[2].partition, Partition::Doq1);
        assert_eq!(jobs[2].start, 6 * 86_400 + 2 * 3_600);
        // The largest partition backs up 1.33 TB by default.
        assert!((jobs[2].data_tb - 1.33).abs() < 1e-9);
    }

    #[test]
    fn later_weeks_shift_by_whole_weeks() {
        let week0 = schedule_weekend(0, &PartitionMap::default());
        let week5 = schedule_weekend(5, &PartitionMap::default());
        for (a, b) in week0.iter().zip(&week5) {
            assert_eq!(b.start - a.start, 5 * SECONDS_PER_WEEK);
        }
    }

    #[test]
    fn restore_passes_without_the_label_fault() {
        let job = run_backup(Partition::DrgDb, 0.9, 100, &library(), None).unwrap();
        assert_eq!(verify_restore(&job, false).unwrap(), RestoreOutcome::Ok);
        assert_eq!(
            verify_restore(&job, true).unwrap(),
            RestoreOutcome::Failed {
                cause: "tape-labeling".into()
            }
        );
    }

    #[test]
    fn restore_of_a_failed_job_is_a_precondition_error() {
        let mut job = run_backup(Partition::Doq0, 1.17, 100, &library(), None).unwrap();
        job.status = JobStatus::Failed {
            cause: "fabric".into(),
        };
        assert!(matches!(
            verify_restore(&job, false),
            Err(BackupError::JobNotOk(_))
        ));
    }

    #[test]
    fn per_job_throughput_override_reproduces_the_faster_observed_run() {
        // 1.33 TB in 8.25 h needs roughly 165 GB/h across four drives.
        let (duration_s, _, _) =
            plan_backup(1.33, &library(), Some(165.0 / 4.0)).unwrap();
        let hours = duration_s as f64 / 3600.0;
        assert!((hours - 8.25).abs() < 0.05, "hours {hours}");
    }
}
