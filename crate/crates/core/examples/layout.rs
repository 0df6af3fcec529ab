//! Hexagonal three-sector network, one UAV drop and the co-site clusters.

use uavpc::topology::{co_site_clusters, default_layout, drop_ues, write_layout_csv};

fn main() -> Result<(), uavpc::UavError> {
    let layout = default_layout();
    println!("{} sites, {} cells, ISD {} m", layout.sites.len(), layout.n_cells(), layout.isd);

    let active: Vec<usize> = (0..layout.n_cells()).step_by(4).collect();
    let drop = drop_ues(&layout, &active, 1, 42)?;
    write_layout_csv(&layout, &drop, std::io::stdout().lock())?;

    let clusters = co_site_clusters(&layout).restrict(&active);
    println!("{} clusters among the active cells: {:?}", clusters.clusters.len(), clusters.clusters);
    Ok(())
}
