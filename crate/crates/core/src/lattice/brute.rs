use super::{LatticeBasis, LatticePoint};
use crate::{round_half_even, Error, Result};

/// Largest box the exhaustive search will enumerate.
pub const MAX_CANDIDATES: f64 = 1e7;

/// Exhaustive nearest-point search over the integer box
/// `round(B⁻¹y) ± coord_radius`.
///
/// Candidates are visited in lexicographic order of `u` and only a strictly
/// closer candidate replaces the incumbent, so ties resolve to the
/// lexicographically smallest `u`. Intended as a test oracle.
pub fn brute_force_nearest(
    basis: &LatticeBasis,
    y: &[f64],
    coord_radius: u32,
) -> Result<LatticePoint> {
    basis.check_len(y)?;
    let n = basis.dim();
    let side = 2.0 * coord_radius as f64 + 1.0;
    let candidates = side.powi(n as i32);
    if candidates > MAX_CANDIDATES {
        return Err(Error::SearchTooLarge { candidates });
    }

    let center: Vec<i64> = basis
        .coordinates(y)
        .into_iter()
        .map(|t| round_half_even(t) as i64)
        .collect();

    // Distances are tracked through the Gram matrix: fixing u_k = t maps
    // ‖r‖² → ‖r‖² - 2t⟨r,b_k⟩ + t²⟨b_k,b_k⟩ and ⟨r,b_j⟩ → ⟨r,b_j⟩ - t⟨b_k,b_j⟩.
    let m = basis.matrix();
    let gram = m.transpose() * m;
    let rb0: Vec<f64> = (0..n)
        .map(|j| m.column(j).iter().zip(y).map(|(b, y)| b * y).sum())
        .collect();
    let rr0: f64 = y.iter().map(|v| v * v).sum();

    let mut search = Search {
        gram: (0..n)
            .map(|k| (0..n).map(|j| gram[(k, j)]).collect())
            .collect(),
        center: &center,
        radius: coord_radius as i64,
        current: vec![0; n],
        rb: vec![vec![0.0; n]; n + 1],
        best_dist: f64::INFINITY,
        best: vec![0; n],
    };
    search.rb[0] = rb0;
    search.descend(0, rr0);

    let coords = search.best;
    let embedding = basis.embed(&coords);
    Ok(LatticePoint { coords, embedding })
}

struct Search<'a> {
    gram: Vec<Vec<f64>>,
    center: &'a [i64],
    radius: i64,
    current: Vec<i64>,
    /// `rb[level][j] = ⟨y - Σ_{k<level} u_k b_k, b_j⟩`
    rb: Vec<Vec<f64>>,
    best_dist: f64,
    best: Vec<i64>,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, rr: f64) {
        let n = self.gram.len();
        let lo = self.center[level] - self.radius;
        let hi = self.center[level] + self.radius;
        let g_kk = self.gram[level][level];
        let rb_k = self.rb[level][level];

        if level + 1 == n {
            self.last_level(lo, hi, rr, rb_k, g_kk);
            return;
        }
        if level + 2 == n {
            let last = n - 1;
            let (lo_last, hi_last) = (
                self.center[last] - self.radius,
                self.center[last] + self.radius,
            );
            let g_last = self.gram[last][last];
            let g_cross = self.gram[level][last];
            let rb_last = self.rb[level][last];
            for t in lo..=hi {
                let tf = t as f64;
                let d = rr - 2.0 * tf * rb_k + tf * tf * g_kk;
                self.current[level] = t;
                self.last_level(lo_last, hi_last, d, rb_last - tf * g_cross, g_last);
            }
            return;
        }

        for t in lo..=hi {
            let tf = t as f64;
            let d = rr - 2.0 * tf * rb_k + tf * tf * g_kk;
            self.current[level] = t;
            let (head, tail) = self.rb.split_at_mut(level + 1);
            let src = &head[level][level + 1..];
            let dst = &mut tail[0][level + 1..];
            let g = &self.gram[level][level + 1..];
            for ((out, r), g) in dst.iter_mut().zip(src).zip(g) {
                *out = r - tf * g;
            }
            self.descend(level + 1, d);
        }
    }

    #[inline(always)]
    fn last_level(&mut self, lo: i64, hi: i64, rr: f64, rb: f64, g: f64) {
        for t in lo..=hi {
            let tf = t as f64;
            let d = rr - 2.0 * tf * rb + tf * tf * g;
            if d < self.best_dist {
                let last = self.current.len() - 1;
                self.best_dist = d;
                self.current[last] = t;
                self.best.copy_from_slice(&self.current);
            }
        }
    }
}
