#![allow(dead_code)]

//! Brute-force oracles that share no code with the library's evaluation.

use uavpc::sca::{Domain, LinkModel};

/// SE of both UEs of a two-link model, computed from first principles.
pub fn two_link_se(m: &LinkModel, p: [&[f64]; 2]) -> [f64; 2] {
    let cols = m.cols();
    let mut se = [0.0; 2];
    for i in 0..2 {
        let j = 1 - i;
        let mut bits = 0.0;
        for c in 0..cols {
            let sig = p[i][c] * m.gain(i, i, c);
            let int = if m.interferes(j, i) { p[j][c] * m.gain(j, i, c) } else { 0.0 };
            bits += (1.0 + sig / (m.noise() + int)).log2();
        }
        se[i] = m.share(i) * bits / cols as f64;
    }
    se
}

/// Candidate power rows for one UE on a grid of `levels` steps of `p_max`.
/// Frequency rows lie on the simplex `sum <= p_max`, time rows in the box.
pub fn candidate_rows(domain: Domain, cols: usize, p_max: f64, p_floor: f64, levels: usize) -> Vec<Vec<f64>> {
    let lv = |k: usize| (k as f64 / levels as f64 * p_max).max(p_floor);
    let mut out = Vec::new();
    let mut idx = vec![0usize; cols];
    loop {
        let ok = match domain {
            Domain::Frequency => idx.iter().sum::<usize>() <= levels,
            Domain::Time => true,
        };
        if ok {
            out.push(idx.iter().map(|&k| lv(k)).collect());
        }
        let mut d = 0;
        loop {
            if d == cols {
                return out;
            }
            idx[d] += 1;
            if idx[d] <= levels {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Exhaustive max-min over the power grid for two UEs.
pub fn grid_maxmin(m: &LinkModel, p_max: f64, p_floor: f64, levels: usize) -> f64 {
    assert_eq!(m.n(), 2);
    let rows = candidate_rows(m.domain(), m.cols(), p_max, p_floor, levels);
    let mut best = f64::NEG_INFINITY;
    for a in &rows {
        for b in &rows {
            let se = two_link_se(m, [a, b]);
            best = best.max(se[0].min(se[1]));
        }
    }
    best
}

/// Best max-min value over contiguous split points `k`: UE 0 gets columns
/// `[0, k)` and UE 1 gets `[k, cols)`, each at full power density.
pub fn best_split(m: &LinkModel, p_max: f64, p_floor: f64) -> (usize, f64) {
    let cols = m.cols();
    let mut best = (0, f64::NEG_INFINITY);
    for k in 1..cols {
        let a: Vec<f64> = (0..cols).map(|c| if c < k { p_max / k as f64 } else { p_floor }).collect();
        let b: Vec<f64> = (0..cols).map(|c| if c >= k { p_max / (cols - k) as f64 } else { p_floor }).collect();
        let se = two_link_se(m, [&a, &b]);
        let v = se[0].min(se[1]);
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}
