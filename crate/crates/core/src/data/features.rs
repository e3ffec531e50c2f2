use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cross-fleet features of one signal at one time, per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetFeatures {
    /// `|#{others with a larger value}/n − 0.5|`.
    pub m1: Vec<Option<f64>>,
    /// `|x − mean| / sd` with the sample standard deviation; `None` when the
    /// fleet has zero spread.
    pub m2: Vec<Option<f64>>,
}

/// M1 and M2 for a snapshot of one signal across the fleet.
///
/// Units with a missing value get `None` and do not count towards `n`.
pub fn fleet_features(snapshot: &[Option<f64>]) -> Result<FleetFeatures> {
    let present: Vec<f64> = snapshot.iter().flatten().copied().collect();
    let n = present.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "fleet features need at least 2 units with values, found {n}"
        )));
    }
    if present.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "fleet snapshot has a non-finite value".into(),
        ));
    }
    let mean = present.iter().sum::<f64>() / n as f64;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let m1 = snapshot
        .iter()
        .map(|v| {
            v.map(|x| {
                let larger = present.iter().filter(|&&o| x < o).count();
                (larger as f64 / n as f64 - 0.5).abs()
            })
        })
        .collect();
    let m2 = snapshot
        .iter()
        .map(|v| v.and_then(|x| (sd > 0.0).then(|| ((x - mean) / sd).abs())))
        .collect();
    Ok(FleetFeatures { m1, m2 })
}

/// One cross-validation split, as positions into the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random partition of `n` lifetimes into `k` test folds whose sizes differ
/// by at most one.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= k <= n for k-fold splitting, got k = {k}, n = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}
