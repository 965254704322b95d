//! Exact Euclidean nearest-neighbour pairing.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{Dataset, PairSet};
use crate::error::{invalid, Result};

fn squared_distance(points: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The `k` nearest other points of row `i`, ordered by (distance, index).
fn ranked_neighbors(points: &DMatrix<f64>, i: usize, k: usize) -> Vec<usize> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for j in 0..points.nrows() {
        if j == i {
            continue;
        }
        let dist = squared_distance(points, i, j);
        if best.len() == k && dist >= best[k - 1].0 {
            continue;
        }
        // Strict comparison keeps the lower index first on ties.
        let pos = best.partition_point(|&(bd, _)| bd <= dist);
        best.insert(pos, (dist, j));
        best.truncate(k);
    }
    best.into_iter().map(|(_, j)| j).collect()
}

/// Index of each point's nearest other point (ties → lowest index).
pub fn nearest_indices(ds: &Dataset) -> Result<Vec<usize>> {
    if ds.len() < 2 {
        return Err(invalid("nearest neighbours need at least two points"));
    }
    let points = ds.points();
    Ok((0..ds.len())
        .into_par_iter()
        .map(|i| ranked_neighbors(points, i, 1)[0])
        .collect())
}

/// Pairs every point with its nearest neighbour.
pub fn nearest_neighbors(ds: &Dataset) -> Result<PairSet> {
    let idx = nearest_indices(ds)?;
    let neighbor = ds.points().select_rows(&idx);
    PairSet::nearest_neighbor(ds.points().clone(), neighbor)
}

/// Row `i` lists the `k` nearest other points of point `i`.
pub fn k_nearest_indices(ds: &Dataset, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    if ds.len() <= k {
        return Err(invalid(format!(
            "need more than {k} points for {k} distinct neighbours, got {}",
            ds.len()
        )));
    }
    let points = ds.points();
    Ok((0..ds.len())
        .into_par_iter()
        .map(|i| ranked_neighbors(points, i, k))
        .collect())
}

/// Each point repeated `k` times, its `j`-th copy paired with its `j`-th nearest neighbour.
///
/// Rows are grouped by base point: all copies of point 0, then point 1, ...
pub fn k_distinct_neighbors(ds: &Dataset, k: usize) -> Result<PairSet> {
    let ranked = k_nearest_indices(ds, k)?;
    let mut base_rows = Vec::with_capacity(ds.len() * k);
    let mut nbr_rows = Vec::with_capacity(ds.len() * k);
    for (i, nbrs) in ranked.iter().enumerate() {
        for &j in nbrs {
            base_rows.push(i);
            nbr_rows.push(j);
        }
    }
    PairSet::nearest_neighbor(
        ds.points().select_rows(&base_rows),
        ds.points().select_rows(&nbr_rows),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::isotropic_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(DMatrix::from_column_slice(xs.len(), 1, xs)).unwrap()
    }

    #[test]
    fn points_on_a_line() {
        assert_eq!(nearest_indices(&line(&[0.0, 1.0, 3.0])).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn duplicates_pair_with_each_other() {
        let pairs = nearest_neighbors(&line(&[2.0, 2.0])).unwrap();
        assert_eq!(pairs.differences(), DMatrix::zeros(2, 1));
        assert_eq!(nearest_indices(&line(&[2.0, 2.0])).unwrap(), vec![1, 0]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(nearest_indices(&line(&[-1.0, 0.0, 1.0])).unwrap()[1], 0);
    }

    #[test]
    fn too_few_points() {
        assert!(nearest_neighbors(&line(&[1.0])).is_err());
        assert!(k_distinct_neighbors(&line(&[1.0, 2.0]), 2).is_err());
    }

    #[test]
    fn matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = Dataset::new(isotropic_points(100, 5, &mut rng)).unwrap();
        let p = ds.points();
        let mut oracle = vec![0usize; 100];
        for i in 0..100 {
            let mut best = f64::INFINITY;
            for j in 0..100 {
                if i != j {
                    let d = (p.row(i) - p.row(j)).norm();
                    if d < best {
                        best = d;
                        oracle[i] = j;
                    }
                }
            }
        }
        assert_eq!(nearest_indices(&ds).unwrap(), oracle);
    }

    #[test]
    fn k_one_duplicates_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ds = Dataset::new(isotropic_points(20, 3, &mut rng)).unwrap();
        assert_eq!(k_distinct_neighbors(&ds, 1).unwrap(), nearest_neighbors(&ds).unwrap());
    }

    #[test]
    fn unit_square_corners() {
        let sq = DMatrix::from_row_slice(4, 2, &[0., 0., 1., 0., 1., 1., 0., 1.]);
        let ranked = k_nearest_indices(&Dataset::new(sq).unwrap(), 2).unwrap();
        assert_eq!(ranked, vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![0, 2]]);
    }

    #[test]
    fn collinear_second_neighbor() {
        // From 2, both 0 and 4 sit at distance 2; the lower index wins.
        let ds = line(&[0.0, 1.0, 2.0, 4.0]);
        let pairs = k_distinct_neighbors(&ds, 2).unwrap();
        assert_eq!(pairs.len(), 8);
        assert_eq!(pairs.neighbor()[(4, 0)], 1.0);
        assert_eq!(pairs.neighbor()[(5, 0)], 0.0);
        let ds = line(&[0.0, 1.0, 2.0, 3.5]);
        let pairs = k_distinct_neighbors(&ds, 2).unwrap();
        assert_eq!(pairs.neighbor()[(5, 0)], 3.5);
        assert!(pairs.base().rows(4, 2).iter().all(|&v| v == 2.0));
    }
}
