//! Strong-bilevel-feasibility cuts between pairs of commodities.
//!
//! Pairs of commodities are ranked by how many arcs their path sets share,
//! discounted by the number of path pairs to test. For each selected pair,
//! every path pair is run through the deviation program; the pairs that fail
//! are grouped into bicliques, and each biclique `(P, Q)` yields the cut
//! `Σ_{p∈P} z_p + Σ_{q∈Q} z_q ≤ 1`.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::bifeas::{sbf_test, PathRecord};
use crate::error::Result;
use crate::instance::Instance;
use crate::lp::ZERO_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairScore {
    pub k_i: usize,
    pub k_j: usize,
    /// `+inf` when both commodities have a single path.
    pub score: f64,
}

/// Closeness `|A^i ∩ A^j| / ln²(|P^i|·|P^j|)` of every unordered commodity
/// pair, best first; ties keep the `(i, j)` order.
pub fn closeness_scores(pathsets: &[Vec<PathRecord>]) -> Vec<PairScore> {
    let arc_sets: Vec<BTreeSet<usize>> =
        pathsets.iter().map(|s| s.iter().flat_map(|r| r.arcs.iter().copied()).collect()).collect();
    let mut out = Vec::new();
    for i in 0..pathsets.len() {
        for j in i + 1..pathsets.len() {
            let shared = arc_sets[i].intersection(&arc_sets[j]).count();
            let product = (pathsets[i].len() * pathsets[j].len()) as f64;
            out.push(PairScore { k_i: i, k_j: j, score: closeness(shared, product) });
        }
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out
}

fn closeness(shared: usize, product: f64) -> f64 {
    if product <= 1.0 {
        return f64::INFINITY;
    }
    shared as f64 / product.ln().powi(2)
}

/// Incompatibility matrix of two commodities: `h[p][q]` is set when the
/// deviation program on the pair `(p, q)` has a positive optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMatrix {
    pub k_i: usize,
    pub k_j: usize,
    pub h: Vec<Vec<bool>>,
}

pub fn pair_matrix(inst: &Instance, k_i: usize, k_j: usize, pathsets: &[Vec<PathRecord>]) -> Result<PairMatrix> {
    let mut h = Vec::with_capacity(pathsets[k_i].len());
    for p in &pathsets[k_i] {
        let mut row = Vec::with_capacity(pathsets[k_j].len());
        for q in &pathsets[k_j] {
            row.push(sbf_test(inst, &[p, q])?.objective > ZERO_TOL);
        }
        h.push(row);
    }
    Ok(PairMatrix { k_i, k_j, h })
}

/// Covers the ones of `h` with all-ones submatrices. Each round seeds at the
/// uncovered one whose row and column hold the most uncovered ones, then
/// adds rows or columns that keep the block all-ones, largest number of
/// newly covered cells first (rows before columns, lower index first).
pub fn greedy_biclique_cover(h: &[Vec<bool>]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let rows = h.len();
    let cols = h.first().map_or(0, Vec::len);
    let mut open: Vec<Vec<bool>> = h.to_vec();
    let mut cover = Vec::new();
    loop {
        let row_open: Vec<usize> = open.iter().map(|r| r.iter().filter(|&&v| v).count()).collect();
        let col_open: Vec<usize> = (0..cols).map(|c| (0..rows).filter(|&r| open[r][c]).count()).collect();
        let mut seed: Option<(usize, usize, usize)> = None;
        for r in 0..rows {
            for c in 0..cols {
                if open[r][c] {
                    let s = row_open[r] + col_open[c];
                    if seed.is_none_or(|(_, _, best)| s > best) {
                        seed = Some((r, c, s));
                    }
                }
            }
        }
        let Some((r0, c0, _)) = seed else {
            break;
        };
        let mut br = vec![r0];
        let mut bc = vec![c0];
        loop {
            let mut best: Option<(usize, bool, usize)> = None;
            for r in 0..rows {
                if br.contains(&r) || !bc.iter().all(|&c| h[r][c]) {
                    continue;
                }
                let gain = bc.iter().filter(|&&c| open[r][c]).count();
                if gain > 0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, true, r));
                }
            }
            for c in 0..cols {
                if bc.contains(&c) || !br.iter().all(|&r| h[r][c]) {
                    continue;
                }
                let gain = br.iter().filter(|&&r| open[r][c]).count();
                if gain > 0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, false, c));
                }
            }
            match best {
                Some((_, true, r)) => br.push(r),
                Some((_, false, c)) => bc.push(c),
                None => break,
            }
        }
        br.sort_unstable();
        bc.sort_unstable();
        for &r in &br {
            for &c in &bc {
                open[r][c] = false;
            }
        }
        cover.push((br, bc));
    }
    cover
}

/// One cut: at most one of the listed paths of the two commodities may be
/// selected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cut {
    pub k_i: usize,
    pub k_j: usize,
    #[serde(rename = "P_hat")]
    pub p_hat: Vec<usize>,
    #[serde(rename = "Q_hat")]
    pub q_hat: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CutPool {
    pub cuts: Vec<Cut>,
    /// Commodity pairs that were tested.
    pub pairs: Vec<(usize, usize)>,
    pub millis: f64,
}

/// Tests the `n` closest commodity pairs and turns their incompatible path
/// pairs into cuts. `n = 0` yields an empty pool.
pub fn generate_cuts(inst: &Instance, pathsets: &[Vec<PathRecord>], n: usize) -> Result<CutPool> {
    let start = Instant::now();
    let mut pool = CutPool::default();
    for pair in closeness_scores(pathsets).into_iter().take(n) {
        let m = pair_matrix(inst, pair.k_i, pair.k_j, pathsets)?;
        for (p_hat, q_hat) in greedy_biclique_cover(&m.h) {
            pool.cuts.push(Cut { k_i: pair.k_i, k_j: pair.k_j, p_hat, q_hat });
        }
        pool.pairs.push((pair.k_i, pair.k_j));
    }
    pool.millis = start.elapsed().as_secs_f64() * 1000.0;
    Ok(pool)
}
