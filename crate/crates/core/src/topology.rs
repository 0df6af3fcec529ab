//! Sectored hexagonal site grid, UAV drops and co-site clustering.
//!
//! Sites sit on a hexagonal lattice (rows offset by half a spacing) centred
//! on the origin. Each site carries three sectors with boresights at 0°,
//! 120° and 240° measured counter-clockwise from +x; cell `3 * site + k` is
//! sector `k` of `site`. There is no wraparound.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::UavError;

pub const SECTORS_PER_SITE: usize = 3;
pub const DEFAULT_SITES: usize = 16;
pub const DEFAULT_ISD_M: f64 = 2000.0;
pub const DEFAULT_BS_HEIGHT_M: f64 = 35.0;
pub const DEFAULT_DOWNTILT_DEG: f64 = 8.5;
pub const DEFAULT_UE_HEIGHT_M: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub site: usize,
    pub azimuth_deg: f64,
    pub downtilt_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub sites: Vec<[f64; 2]>,
    pub sectors: Vec<Sector>,
    pub bs_height: f64,
    pub isd: f64,
}

impl NetworkLayout {
    pub fn n_cells(&self) -> usize {
        self.sectors.len()
    }

    pub fn site_of(&self, cell: usize) -> usize {
        self.sectors[cell].site
    }

    /// Antenna position of a cell (its site) including mast height.
    pub fn bs_position(&self, cell: usize) -> [f64; 3] {
        let [x, y] = self.sites[self.site_of(cell)];
        [x, y, self.bs_height]
    }

    /// Whether a horizontal offset from a site lies in that site's
    /// hexagon (inradius ISD/2, flat sides facing the six neighbours).
    fn in_site_hexagon(&self, dx: f64, dy: f64) -> bool {
        (0..6).all(|k| {
            let a = (60.0 * k as f64).to_radians();
            dx * a.cos() + dy * a.sin() <= self.isd / 2.0
        })
    }
}

/// Builds `n_sites` sites with three sectors each.
pub fn build_layout(n_sites: usize, isd: f64, bs_height: f64, downtilt: f64) -> Result<NetworkLayout, UavError> {
    if n_sites == 0 {
        return Err(UavError::config("topology.n_sites", "must be at least 1"));
    }
    if !(isd > 0.0 && isd.is_finite()) {
        return Err(UavError::config("topology.isd_m", format!("must be positive, got {isd}")));
    }
    if !(bs_height > 0.0 && bs_height.is_finite()) {
        return Err(UavError::config("topology.bs_height_m", format!("must be positive, got {bs_height}")));
    }
    if !downtilt.is_finite() || downtilt < 0.0 {
        return Err(UavError::config("topology.downtilt_deg", format!("must be non-negative, got {downtilt}")));
    }
    let cols = (n_sites as f64).sqrt().ceil() as usize;
    let dy = isd * 3f64.sqrt() / 2.0;
    let mut sites: Vec<[f64; 2]> = (0..n_sites)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let shift = if r % 2 == 1 { isd / 2.0 } else { 0.0 };
            [c as f64 * isd + shift, r as f64 * dy]
        })
        .collect();
    let n = n_sites as f64;
    let cx = sites.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = sites.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in &mut sites {
        p[0] -= cx;
        p[1] -= cy;
    }
    let sectors = (0..n_sites)
        .flat_map(|site| {
            (0..SECTORS_PER_SITE).map(move |k| Sector {
                site,
                azimuth_deg: 120.0 * k as f64,
                downtilt_deg: downtilt,
            })
        })
        .collect();
    Ok(NetworkLayout { sites, sectors, bs_height, isd })
}

/// The 48-cell default network.
pub fn default_layout() -> NetworkLayout {
    build_layout(DEFAULT_SITES, DEFAULT_ISD_M, DEFAULT_BS_HEIGHT_M, DEFAULT_DOWNTILT_DEG).expect("valid defaults")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeDrop {
    pub positions: Vec<[f64; 3]>,
    pub serving_cell: Vec<usize>,
    pub ue_height: f64,
}

impl UeDrop {
    pub fn n_ue(&self) -> usize {
        self.positions.len()
    }
}

/// Drops `ues_per_cell` UAVs uniformly inside each active sector's wedge of
/// its site hexagon, at the default height.
pub fn drop_ues(
    layout: &NetworkLayout,
    active_cells: &[usize],
    ues_per_cell: usize,
    rng_seed: u64,
) -> Result<UeDrop, UavError> {
    drop_ues_with(layout, active_cells, ues_per_cell, DEFAULT_UE_HEIGHT_M, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

/// [`drop_ues`] with an explicit height and random source. UEs are listed
/// cell by cell in the order of `active_cells`.
pub fn drop_ues_with<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    active_cells: &[usize],
    ues_per_cell: usize,
    ue_height: f64,
    rng: &mut R,
) -> Result<UeDrop, UavError> {
    if active_cells.is_empty() {
        return Err(UavError::config("active_cells", "at least one cell must be active"));
    }
    if ues_per_cell == 0 {
        return Err(UavError::config("ues_per_cell", "must be at least 1"));
    }
    if let Some(c) = active_cells.iter().find(|&&c| c >= layout.n_cells()) {
        return Err(UavError::config("active_cells", format!("cell {c} is not in the layout")));
    }
    if !(ue_height > 0.0) {
        return Err(UavError::config("topology.ue_height_m", "must be positive"));
    }
    let radius = layout.isd / 3f64.sqrt();
    let mut positions = Vec::with_capacity(active_cells.len() * ues_per_cell);
    let mut serving_cell = Vec::with_capacity(positions.capacity());
    for &cell in active_cells {
        let [sx, sy] = layout.sites[layout.site_of(cell)];
        let bore = layout.sectors[cell].azimuth_deg;
        for _ in 0..ues_per_cell {
            let (dx, dy) = loop {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = (bore + rng.random_range(-60.0..60.0f64)).to_radians();
                let (dx, dy) = (r * phi.cos(), r * phi.sin());
                if layout.in_site_hexagon(dx, dy) {
                    break (dx, dy);
                }
            };
            positions.push([sx + dx, sy + dy, ue_height]);
            serving_cell.push(cell);
        }
    }
    Ok(UeDrop { positions, serving_cell, ue_height })
}

/// Disjoint groups of cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMap {
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterMap {
    /// Everything in one cluster.
    pub fn single(cells: &[usize]) -> Self {
        Self { clusters: vec![cells.to_vec()] }
    }

    /// Keeps only `active` cells and drops clusters left empty.
    pub fn restrict(&self, active: &[usize]) -> Self {
        Self {
            clusters: self
                .clusters
                .iter()
                .map(|c| c.iter().copied().filter(|x| active.contains(x)).collect::<Vec<_>>())
                .filter(|c| !c.is_empty())
                .collect(),
        }
    }

    /// True when every cell of `cells` appears in exactly one cluster and
    /// nothing else does.
    pub fn is_partition_of(&self, cells: &[usize]) -> bool {
        let mut seen: Vec<usize> = self.clusters.iter().flatten().copied().collect();
        seen.sort_unstable();
        let mut want = cells.to_vec();
        want.sort_unstable();
        seen == want
    }
}

/// One cluster per site holding its three sectors.
pub fn co_site_clusters(layout: &NetworkLayout) -> ClusterMap {
    let mut clusters = vec![Vec::new(); layout.sites.len()];
    for (cell, s) in layout.sectors.iter().enumerate() {
        clusters[s.site].push(cell);
    }
    ClusterMap { clusters }
}

/// Writes `cell,site_x,site_y,boresight_deg,ue_x,ue_y,height` per UE.
pub fn write_layout_csv<W: Write>(layout: &NetworkLayout, drop: &UeDrop, out: W) -> Result<(), UavError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "site_x", "site_y", "boresight_deg", "ue_x", "ue_y", "height"])?;
    for (p, &cell) in drop.positions.iter().zip(&drop.serving_cell) {
        let [sx, sy] = layout.sites[layout.site_of(cell)];
        w.write_record(&[
            cell.to_string(),
            format!("{sx:.3}"),
            format!("{sy:.3}"),
            format!("{:.1}", layout.sectors[cell].azimuth_deg),
            format!("{:.3}", p[0]),
            format!("{:.3}", p[1]),
            format!("{:.3}", p[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
