//! Fruchterman–Reingold force-directed layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::UserGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub iterations: usize,
    /// Area of the square layout box; the side is `sqrt(area)`.
    pub area: f64,
    pub seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            iterations: 100,
            area: 1.0e6,
            seed: 0,
        }
    }
}

impl LayoutParams {
    pub fn side(&self) -> f64 {
        self.area.sqrt()
    }

    /// Ideal edge length `sqrt(area / n)`.
    pub fn ideal_distance(&self, n: usize) -> f64 {
        (self.area / n.max(1) as f64).sqrt()
    }
}

/// Positions inside `[0, side]²`. Attraction `d²/k` along edges, repulsion
/// `k²/d` between all pairs, displacement capped by a temperature that cools
/// linearly from `side/10` to zero. The result is translated so its centroid
/// sits at the box midpoint, then clamped to the box.
pub fn layout_fr(graph: &UserGraph, params: LayoutParams) -> Vec<(f64, f64)> {
    let n = graph.len();
    let side = params.side();
    let mid = side / 2.0;
    if n == 0 {
        return Vec::new();
    }
    let k = params.ideal_distance(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pos: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>() * side, rng.gen::<f64>() * side))
        .collect();
    let t0 = side / 10.0;
    let min_dist = k * 1e-6;

    for it in 0..params.iterations {
        let temp = t0 * (1.0 - it as f64 / params.iterations as f64);
        let mut disp = vec![(0.0, 0.0); n];
        for i in 0..n {
            for j in i + 1..n {
                let (mut dx, mut dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let mut d = (dx * dx + dy * dy).sqrt();
                if d < min_dist {
                    let angle = rng.gen::<f64>() * std::f64::consts::TAU;
                    dx = min_dist * angle.cos();
                    dy = min_dist * angle.sin();
                    d = min_dist;
                }
                let f = k * k / d;
                let (ux, uy) = (dx / d * f, dy / d * f);
                disp[i].0 += ux;
                disp[i].1 += uy;
                disp[j].0 -= ux;
                disp[j].1 -= uy;
            }
        }
        for (u, v, _) in graph.edges() {
            let (dx, dy) = (pos[u].0 - pos[v].0, pos[u].1 - pos[v].1);
            let d = (dx * dx + dy * dy).sqrt().max(min_dist);
            let f = d * d / k;
            let (ux, uy) = (dx / d * f, dy / d * f);
            disp[u].0 -= ux;
            disp[u].1 -= uy;
            disp[v].0 += ux;
            disp[v].1 += uy;
        }
        for (p, (dx, dy)) in pos.iter_mut().zip(disp) {
            let len = (dx * dx + dy * dy).sqrt();
            if len > 0.0 {
                let step = len.min(temp);
                p.0 = (p.0 + dx / len * step).clamp(0.0, side);
                p.1 = (p.1 + dy / len * step).clamp(0.0, side);
            }
        }
    }

    let cx = pos.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let cy = pos.iter().map(|p| p.1).sum::<f64>() / n as f64;
    pos.into_iter()
        .map(|(x, y)| ((x - cx + mid).clamp(0.0, side), (y - cy + mid).clamp(0.0, side)))
        .collect()
}
