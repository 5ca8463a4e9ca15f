//! Diurnal, time-zone-driven request generation and the front-end web tier
//! with per-switch symmetric load balancing.
//!
//! Users work their local 8 AM to 6 PM, so demand follows the sun westward
//! across the four time zones covering UTM zones 10 through 19. The
//! generator is a pure seeded function: identical (profile, day, seed)
//! inputs yield identical streams.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::partition::{RequestClass, UTM_ZONE_MAX, UTM_ZONE_MIN};
use crate::rng::SimRng;
use crate::topology::{Site, SwitchId, Theme, WebServerId, WebTierSpec};

pub const SECONDS_PER_DAY: u64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayClass {
    WeekdayPeak,
    Weekend,
    Spike,
}

/// Daily traffic shape. Tile volume is tied to page volume: every page view
/// fetches between `tiles_per_page_min` and `tiles_per_page_max` tiles with
/// a mean of tiles_per_day / pages_per_day.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub day_class: DayClass,
    pub visitors_per_day: u64,
    pub pages_per_day: u64,
    pub tiles_per_day: u64,
    pub peak_pages_per_s: f64,
    pub peak_tiles_per_s: f64,
    pub tiles_per_page_min: u8,
    pub tiles_per_page_max: u8,
    /// Share of page views against the aerial-photo theme; the rest hit
    /// the topographic maps.
    pub doq_share: f64,
    /// Share of traffic on the interactive HTML site; the rest is SOAP.
    pub html_share: f64,
    /// Gazetteer searches per page view.
    pub gazetteer_per_page: f64,
}

impl TrafficProfile {
    /// Busiest weekdays: fifty thousand visitors, 1.2 million pages, five
    /// to six million tiles.
    pub fn weekday_peak() -> Self {
        Self {
            day_class: DayClass::WeekdayPeak,
            visitors_per_day: 50_000,
            pages_per_day: 1_200_000,
            tiles_per_day: 5_500_000,
            peak_pages_per_s: 40.0,
            peak_tiles_per_s: 225.0,
            tiles_per_page_min: 2,
            tiles_per_page_max: 12,
            doq_share: 0.7,
            html_share: 0.8,
            gazetteer_per_page: 0.1,
        }
    }

    pub fn weekend() -> Self {
        Self {
            day_class: DayClass::Weekend,
            visitors_per_day: 30_000,
            pages_per_day: 700_000,
            tiles_per_day: 4_000_000,
            peak_pages_per_s: 25.0,
            peak_tiles_per_s: 145.0,
            ..Self::weekday_peak()
        }
    }

    /// Press-event days run about two and a half times the typical peak.
    pub fn spike() -> Self {
        Self {
            day_class: DayClass::Spike,
            visitors_per_day: 277_000,
            pages_per_day: 4_500_000,
            tiles_per_day: 12_000_000,
            peak_pages_per_s: 100.0,
            peak_tiles_per_s: 562.5,
            ..Self::weekday_peak()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "weekday-peak" => Some(Self::weekday_peak()),
            "weekend" => Some(Self::weekend()),
            "spike" => Some(Self::spike()),
            _ => None,
        }
    }

    pub fn mean_tiles_per_page(&self) -> f64 {
        if self.pages_per_day == 0 {
            0.0
        } else {
            self.tiles_per_day as f64 / self.pages_per_day as f64
        }
    }
}

/// Hours of lag between a zone's local clock and the site's reference
/// clock (Eastern): zones 17-19 Eastern, 14-16 Central, 12-13 Mountain,
/// 10-11 Pacific.
pub fn zone_time_offset(zone: u8) -> u8 {
    match zone {
        10 | 11 => 3,
        12 | 13 => 2,
        14..=16 => 1,
        _ => 0,
    }
}

/// Local-time activity: 10% floor overnight, ramping up from 7 AM, flat
/// through 5 PM, back down by 7 PM.
pub fn hourly_weight(local_hour: u8) -> f64 {
    match local_hour {
        7 => 0.55,
        8..=16 => 1.0,
        17 => 0.7,
        18 => 0.4,
        _ => 0.1,
    }
}

/// Activity weight of a zone at a reference-clock hour.
pub fn zone_hour_weight(zone: u8, reference_hour: u8) -> f64 {
    let local = (24 + reference_hour - zone_time_offset(zone)) % 24;
    hourly_weight(local)
}

/// One generated request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    /// Absolute simulation time in seconds.
    pub t: u64,
    pub site: Site,
    pub class: RequestClass,
    pub theme: Option<Theme>,
    pub zone: Option<u8>,
}

const ZONES: u8 = UTM_ZONE_MAX - UTM_ZONE_MIN + 1;

/// Apportions `total` across weighted cells exactly, largest remainder
/// first with index order breaking ties.
fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || total == 0 {
        return alloc::vec![0; weights.len()];
    }
    let mut counts: Vec<u64> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(weights.len());
    let mut assigned = 0u64;
    for (i, w) in weights.iter().enumerate() {
        let quota = total as f64 * w / sum;
        let base = libm::floor(quota) as u64;
        counts.push(base);
        assigned += base;
        remainders.push((i, quota - base as f64));
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = total - assigned;
    for (i, _) in remainders {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Lazy request stream for one simulated day.
pub struct RequestStream {
    rng: SimRng,
    profile: TrafficProfile,
    day_start: u64,
    /// Page counts per (hour, zone) cell.
    cells: Vec<u64>,
    cell_idx: usize,
    pages_left_in_cell: u64,
    /// Requests already produced for the current page view.
    pending: Vec<Request>,
    tiles_p: f64,
}

impl RequestStream {
    fn cell_hour_zone(idx: usize) -> (u8, u8) {
        ((idx / ZONES as usize) as u8, UTM_ZONE_MIN + (idx % ZONES as usize) as u8)
    }
}

/// Builds the deterministic stream for `day` (0-based, day 0 is a Monday).
pub fn generate(profile: &TrafficProfile, day: u64, seed: u64) -> RequestStream {
    let rng = SimRng::new(seed).fork(day.wrapping_add(0x9e37));
    let mut weights = Vec::with_capacity(24 * ZONES as usize);
    for hour in 0..24u8 {
        for zone in UTM_ZONE_MIN..=UTM_ZONE_MAX {
            weights.push(zone_hour_weight(zone, hour));
        }
    }
    let cells = apportion(profile.pages_per_day, &weights);
    let span = (profile.tiles_per_page_max - profile.tiles_per_page_min) as f64;
    let tiles_p = if span > 0.0 {
        ((profile.mean_tiles_per_page() - profile.tiles_per_page_min as f64) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    RequestStream {
        rng,
        profile: profile.clone(),
        day_start: day * SECONDS_PER_DAY,
        cells,
        cell_idx: 0,
        pages_left_in_cell: 0,
        pending: Vec::new(),
        tiles_p,
    }
}

impl Iterator for RequestStream {
    type Item = Request;

    fn next(&mut self) -> Option<Request> {
        loop {
            if let Some(req) = self.pending.pop() {
                return Some(req);
            }
            while self.pages_left_in_cell == 0 {
                if self.cell_idx >= self.cells.len() {
                    return None;
                }
                self.pages_left_in_cell = self.cells[self.cell_idx];
                self.cell_idx += 1;
            }
            self.pages_left_in_cell -= 1;

            let (hour, zone) = Self::cell_hour_zone(self.cell_idx - 1);
            let t = self.day_start + hour as u64 * 3600 + self.rng.below(3600);
            let theme = if self.rng.chance(self.profile.doq_share) {
                Theme::Doq
            } else {
                Theme::Drg
            };
            let site = if self.rng.chance(self.profile.html_share) {
                Site::Html
            } else {
                Site::Soap
            };
            let tiles = self.profile.tiles_per_page_min as u32
                + self.rng.binomial(
                    (self.profile.tiles_per_page_max - self.profile.tiles_per_page_min) as u32,
                    self.tiles_p,
                );
            // Emitted in reverse via pop: gazetteer first, then the page,
            // then its tile fetches.
            for _ in 0..tiles {
                self.pending.push(Request {
                    t,
                    site,
                    class: RequestClass::TileFetch,
                    theme: Some(theme),
                    zone: Some(zone),
                });
            }
            self.pending.push(Request {
                t,
                site,
                class: RequestClass::PageMetadata,
                theme: Some(theme),
                zone: Some(zone),
            });
            if self.rng.chance(self.profile.gazetteer_per_page) {
                self.pending.push(Request {
                    t,
                    site,
                    class: RequestClass::GazetteerSearch,
                    theme: None,
                    zone: None,
                });
            }
        }
    }
}

/// Default week: five peak weekdays then two weekend days.
pub fn default_week() -> Vec<TrafficProfile> {
    let mut days = Vec::with_capacity(7);
    for _ in 0..5 {
        days.push(TrafficProfile::weekday_peak());
    }
    for _ in 0..2 {
        days.push(TrafficProfile::weekend());
    }
    days
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LbError {
    #[error("unknown site")]
    UnknownSite,
    #[error("every web server for the site is down")]
    SiteDown,
}

#[derive(Debug, Clone)]
struct WebServerState {
    site: Site,
    switch: SwitchId,
    up: bool,
}

/// Front-end switch pair with symmetric load balancing: each switch
/// rotates over its own healthy servers and spills to the other switch's
/// servers only when its local set is empty.
#[derive(Debug, Clone)]
pub struct WebTierSim {
    servers: BTreeMap<WebServerId, WebServerState>,
    switches: Vec<SwitchId>,
    cursors: BTreeMap<(Site, SwitchId), usize>,
    rx_toggle: BTreeMap<Site, usize>,
}

impl WebTierSim {
    pub fn new(spec: &WebTierSpec) -> Self {
        let mut servers = BTreeMap::new();
        for (site, ids) in &spec.sites {
            for id in ids {
                let switch = spec
                    .switch_assignment
                    .get(id)
                    .cloned()
                    .unwrap_or_else(|| SwitchId(alloc::string::String::from("FE-SW1")));
                servers.insert(
                    id.clone(),
                    WebServerState {
                        site: *site,
                        switch,
                        up: true,
                    },
                );
            }
        }
        let switches: BTreeSet<SwitchId> =
            servers.values().map(|s| s.switch.clone()).collect();
        Self {
            servers,
            switches: switches.into_iter().collect(),
            cursors: BTreeMap::new(),
            rx_toggle: BTreeMap::new(),
        }
    }

    pub fn set_server_up(&mut self, id: &WebServerId, up: bool) -> bool {
        match self.servers.get_mut(id) {
            Some(s) => {
                s.up = up;
                true
            }
            None => false,
        }
    }

    pub fn up_count(&self, site: Site) -> usize {
        self.servers
            .values()
            .filter(|s| s.site == site && s.up)
            .count()
    }

    fn site_servers_on(&self, site: Site, switch: &SwitchId) -> Vec<WebServerId> {
        self.servers
            .iter()
            .filter(|(_, s)| s.site == site && s.up && &s.switch == switch)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Routes one request arriving at `rx_switch`.
    pub fn lb_route(&mut self, site: Site, rx_switch: &SwitchId) -> Result<WebServerId, LbError> {
        if !self.servers.values().any(|s| s.site == site) {
            return Err(LbError::UnknownSite);
        }
        let mut candidates = self.site_servers_on(site, rx_switch);
        if candidates.is_empty() {
            // Spill over to the remaining switches in id order.
            for other in self.switches.clone() {
                if &other == rx_switch {
                    continue;
                }
                candidates = self.site_servers_on(site, &other);
                if !candidates.is_empty() {
                    break;
                }
            }
        }
        if candidates.is_empty() {
            return Err(LbError::SiteDown);
        }
        let cursor = self
            .cursors
            .entry((site, rx_switch.clone()))
            .or_insert(0);
        let chosen = candidates[*cursor % candidates.len()].clone();
        *cursor = (*cursor + 1) % candidates.len().max(1);
        Ok(chosen)
    }

    /// Routes a request, alternating the receiving switch per request the
    /// way the upstream routers spray connections across the pair.
    pub fn route_next(&mut self, site: Site) -> Result<WebServerId, LbError> {
        let toggle = self.rx_toggle.entry(site).or_insert(0);
        let rx = self.switches[*toggle % self.switches.len()].clone();
        *toggle += 1;
        self.lb_route(site, &rx)
    }
}
