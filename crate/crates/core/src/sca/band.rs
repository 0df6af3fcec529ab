use serde::{Deserialize, Serialize};

use super::SinrMatrix;

/// Contiguous column interval `[first, last]` per UE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandAllocation {
    pub ranges: Vec<Option<(usize, usize)>>,
}

impl BandAllocation {
    pub fn whole(n: usize, cols: usize) -> Self {
        Self { ranges: vec![Some((0, cols - 1)); n] }
    }

    pub fn width(&self, i: usize) -> usize {
        self.ranges[i].map_or(0, |(a, b)| b - a + 1)
    }

    pub fn contains(&self, i: usize, c: usize) -> bool {
        self.ranges[i].is_some_and(|(a, b)| a <= c && c <= b)
    }

    pub fn mask(&self, cols: usize) -> Vec<Vec<bool>> {
        (0..self.ranges.len()).map(|i| (0..cols).map(|c| self.contains(i, c)).collect()).collect()
    }
}

/// Grows an interval inside `[lo, hi]` from the best column toward the
/// better neighbour until it holds `eta` of the rate available there.
fn grow(rates: &[f64], lo: usize, hi: usize, eta: f64) -> (usize, usize) {
    let total: f64 = rates[lo..=hi].iter().sum();
    let target = eta * total * (1.0 - 1e-12);
    let start = (lo..=hi).fold(lo, |best, c| if rates[c] > rates[best] { c } else { best });
    let (mut a, mut b) = (start, start);
    let mut acc = rates[start];
    while acc < target && (a > lo || b < hi) {
        let left = (a > lo).then(|| rates[a - 1]);
        let right = (b < hi).then(|| rates[b + 1]);
        match (left, right) {
            (Some(l), Some(r)) if r > l => {
                b += 1;
                acc += r;
            }
            (Some(l), _) => {
                a -= 1;
                acc += l;
            }
            (None, Some(r)) => {
                b += 1;
                acc += r;
            }
            (None, None) => unreachable!(),
        }
    }
    (a, b)
}

/// Single-carrier band assignment from an unconstrained SINR matrix.
///
/// Columns are reordered by the SINRs of the UE holding the overall
/// weakest entry, in descending order (stable). Each UE then takes the
/// interval of reordered positions grown from its best position until it
/// collects `eta` of its total rate. Returns the bands, expressed in
/// reordered positions, together with the column order.
pub fn sc_band_allocate(gamma: &SinrMatrix, eta: f64) -> (BandAllocation, Vec<usize>) {
    let cols = gamma.gamma.first().map_or(0, Vec::len);
    let order = weakest_row_order(gamma);
    let ranges = gamma
        .gamma
        .iter()
        .map(|row| {
            let rates: Vec<f64> = order.iter().map(|&c| row[c].max(0.0).ln_1p()).collect();
            (cols > 0).then(|| grow(&rates, 0, cols - 1, eta))
        })
        .collect();
    (BandAllocation { ranges }, order)
}

/// Like [`sc_band_allocate`] without reordering, each UE confined to its own window.
pub(crate) fn sc_band_within(gamma: &SinrMatrix, eta: f64, windows: &[(usize, usize)]) -> BandAllocation {
    let ranges = gamma
        .gamma
        .iter()
        .zip(windows)
        .map(|(row, &(lo, hi))| {
            let rates: Vec<f64> = row.iter().map(|g| g.max(0.0).ln_1p()).collect();
            Some(grow(&rates, lo, hi, eta))
        })
        .collect();
    BandAllocation { ranges }
}

fn weakest_row_order(gamma: &SinrMatrix) -> Vec<usize> {
    let mut weakest: Option<(usize, usize)> = None;
    for (i, row) in gamma.gamma.iter().enumerate() {
        for (s, &g) in row.iter().enumerate() {
            if weakest.is_none_or(|(a, b)| g < gamma.gamma[a][b]) {
                weakest = Some((i, s));
            }
        }
    }
    let cols = gamma.gamma.first().map_or(0, Vec::len);
    let mut order: Vec<usize> = (0..cols).collect();
    if let Some((i, _)) = weakest {
        let row = &gamma.gamma[i];
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    }
    order
}
