//! Brute-force references for the classifiers.

use std::cmp::Ordering;

/// Exact best depth-1 Gini split by enumerating every feature and every
/// midpoint between distinct sorted values. Returns
/// `(feature, threshold, left leaf, right leaf)`; ties keep the lowest
/// feature, then the lowest threshold.
pub fn best_stump(rows: &[Vec<f64>], y: &[u8], min_leaf: usize) -> Option<(usize, f64, f64, f64)> {
    let p = rows.first()?.len();
    // Weighted impurity n_l*g_l + n_r*g_r = n - (l0^2+l1^2)/n_l - (r0^2+r1^2)/n_r,
    // kept as a fraction so ties compare exactly.
    let mut best: Option<((i128, i128), (usize, f64, f64, f64))> = None;
    for f in 0..p {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let mut t = w[0] + (w[1] - w[0]) / 2.0;
            if t >= w[1] {
                t = w[0];
            }
            let (mut l, mut r) = ([0i128; 2], [0i128; 2]);
            for (row, &c) in rows.iter().zip(y) {
                if row[f] <= t {
                    l[c as usize] += 1;
                } else {
                    r[c as usize] += 1;
                }
            }
            let (nl, nr) = (l[0] + l[1], r[0] + r[1]);
            if (nl as usize) < min_leaf || (nr as usize) < min_leaf {
                continue;
            }
            let n = nl + nr;
            // n - a/nl - b/nr = (n*nl*nr - a*nr - b*nl) / (nl*nr)
            let a = l[0] * l[0] + l[1] * l[1];
            let b = r[0] * r[0] + r[1] * r[1];
            let frac = (n * nl * nr - a * nr - b * nl, nl * nr);
            let leaves = (f, t, l[1] as f64 / nl as f64, r[1] as f64 / nr as f64);
            let better = match &best {
                None => true,
                Some((cur, _)) => (frac.0 * cur.1).cmp(&(cur.0 * frac.1)) == Ordering::Less,
            };
            if better {
                best = Some((frac, leaves));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Positive fraction among the `k` nearest training rows, found by sorting
/// every distance; equal distances favour the earlier row.
pub fn knn_scan(train: &[Vec<f64>], y: &[u8], k: usize, query: &[f64]) -> f64 {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d[..k].iter().filter(|(_, i)| y[*i] == 1).count() as f64 / k as f64
}

/// Indices of the `k` nearest rows to `rows[i]` other than `i` itself.
pub fn neighbours(rows: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, r)| (r.iter().zip(&rows[i]).map(|(a, b)| (a - b).powi(2)).sum(), j))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d[..k].iter().map(|(_, j)| *j).collect()
}

/// Two Gaussian clouds in `p` dimensions whose means differ by `gap` along
/// every axis. Labels alternate.
pub fn blobs(seed: u64, n: usize, p: usize, gap: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = crate::FixtureRng::new(seed);
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let rows = y
        .iter()
        .map(|&c| (0..p).map(|_| rng.normal() + gap * c as f64).collect())
        .collect();
    (rows, y)
}

/// `P(score_pos > score_neg) + P(tie) / 2` over every positive/negative pair.
pub fn pairwise_auc(y: &[u8], scores: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &yi) in y.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            if yi == 1 && yj == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
