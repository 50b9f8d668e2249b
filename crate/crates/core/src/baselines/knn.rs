use super::{check_width, vote, FeatureMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// Majority label among the `k` nearest training rows by Euclidean
/// distance. Equal distances prefer the lower row index; tied votes the
/// smaller label. Inputs are expected to be standardized already.
pub fn knn_classify(train: &FeatureMatrix, queries: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 || k > train.len() {
        return Err(Error::KTooLarge { k, n: train.len() });
    }
    check_width(queries, train.n_features())?;
    let n_classes = train.n_classes();
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    Ok(queries
        .iter()
        .map(|q| {
            dist.clear();
            dist.extend(train.rows.iter().enumerate().map(|(i, r)| {
                let d: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            }));
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0; n_classes];
            dist[..k].iter().for_each(|&(_, i)| votes[train.labels[i]] += 1);
            vote(&votes)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FeatureMatrix {
        FeatureMatrix::unnamed(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![10.0, 10.0]], vec![0, 0, 1]).unwrap()
    }

    #[test]
    fn hand_distances() {
        assert_eq!(knn_classify(&toy(), &[vec![0.4, 0.0]], 3).unwrap(), [0]);
        assert_eq!(knn_classify(&toy(), &[vec![10.0, 10.0]], 1).unwrap(), [1]);
        assert!(matches!(
            knn_classify(&toy(), &[vec![0.0, 0.0]], 4),
            Err(Error::KTooLarge { k: 4, n: 3 })
        ));
    }

    #[test]
    fn distance_tie_prefers_lower_index() {
        let m = FeatureMatrix::unnamed(vec![vec![1.0], vec![-1.0]], vec![1, 0]).unwrap();
        assert_eq!(knn_classify(&m, &[vec![0.0]], 1).unwrap(), [1]);
        // One vote each; the smaller label wins.
        assert_eq!(knn_classify(&m, &[vec![0.0]], 2).unwrap(), [0]);
    }
}
