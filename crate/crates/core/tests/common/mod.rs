//! Straightforward scalar reimplementations used as reference values.

#![allow(dead_code)]

use std::collections::BTreeMap;

pub const FLOOR: f64 = 1e-12;

/// Sample weights and (raw, standardized) contributions by nested loops.
pub fn contribution_oracle(p: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = p.len();
    let m = p[0].len();
    let clamp = |v: f64| v.clamp(FLOOR, 1.0);
    let mut total = 0.0;
    let mut col = vec![0.0; m];
    for j in 0..m {
        for row in p {
            col[j] += -clamp(row[j]).ln();
        }
        total += col[j];
    }
    let w: Vec<f64> = if total < 1e-15 {
        vec![1.0 / m as f64; m]
    } else {
        col.iter().map(|c| c / total).collect()
    };
    let mut raw = vec![0.0; n];
    for i in 0..n {
        for j in 0..m {
            raw[i] += clamp(p[i][j]) * w[j];
        }
    }
    let mut max = 0.0;
    for &r in &raw {
        if r > max {
            max = r;
        }
    }
    let std = raw.iter().map(|r| r / max).collect();
    (w, raw, std)
}

/// One accumulated-reputation step written out from the formulas.
/// Returns (new Re, n_good, n_bad, alpha).
pub fn reputation_oracle(re_prev: f64, n_good: u32, n_bad: u32, re: f64) -> (f64, u32, u32, f64) {
    let (g, b) = if re >= re_prev {
        (n_good + 1, 0)
    } else {
        (0, n_bad + 1)
    };
    let h = 1.0 - 19.0 / (10.0 * std::f64::consts::PI) * (10.0 * re / std::f64::consts::PI).atan();
    let q = |n: u32| 2.0 * (1.0 - 0.25) / (1.0 + (0.5 * n as f64).exp()) + 0.25;
    let alpha = h / (h + (1.0 - h) * q(g) * q(b));
    (alpha * re + (1.0 - alpha) * re_prev, g, b, alpha)
}

/// Selection by the prefix rule: sort by b/Re (ties by id, compared by
/// cross multiplication), then keep the longest prefix whose every member
/// satisfies b_i / Re_i <= B / (sum of Re up to and including i).
/// Returns (winner ids in order, rho*, caps by id).
pub fn selection_oracle(
    bids: &[(u32, f64, f64)],
    budget: f64,
) -> (Vec<u32>, f64, BTreeMap<u32, f64>) {
    let mut idx: Vec<usize> = (0..bids.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ia, ba, ra) = bids[a];
        let (ib, bb, rb) = bids[b];
        (ba * rb).partial_cmp(&(bb * ra)).unwrap().then(ia.cmp(&ib))
    });
    let mut prefix = Vec::with_capacity(bids.len());
    let mut s = 0.0;
    for &i in &idx {
        s += bids[i].2;
        prefix.push(s);
    }
    let mut k = 0;
    while k < idx.len() {
        let (_, b, r) = bids[idx[k]];
        if b / r <= budget / prefix[k] {
            k += 1;
        } else {
            break;
        }
    }
    let sum = if k == 0 { 0.0 } else { prefix[k - 1] };
    let share = budget / sum;
    let rho = if k < idx.len() {
        let (_, b, r) = bids[idx[k]];
        (b / r).min(share)
    } else {
        share
    };
    let winners: Vec<u32> = idx[..k].iter().map(|&i| bids[i].0).collect();
    let caps = idx[..k]
        .iter()
        .map(|&i| (bids[i].0, bids[i].2 * rho))
        .collect();
    (winners, rho, caps)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
