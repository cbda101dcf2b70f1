use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit, FitParams, LearnerError, TrainingDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    /// MAE of predicting the training-fold mean for every test row.
    pub baseline_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub mean_mae: f64,
    pub mean_rmse: f64,
    pub mean_r2: f64,
    pub mean_baseline_mae: f64,
    /// Fold of every row, in dataset order.
    pub assignment: Vec<usize>,
}

impl CvReport {
    pub fn beats_baseline(&self) -> bool {
        self.mean_mae < self.mean_baseline_mae
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("fold,n_test,mae,rmse,r2,baseline_mae\n");
        for f in &self.folds {
            s.push_str(&format!("{},{},{},{},{},{}\n", f.fold, f.n_test, f.mae, f.rmse, f.r2, f.baseline_mae));
        }
        s.push_str(&format!(
            "mean,{},{},{},{},{}\n",
            self.assignment.len(),
            self.mean_mae,
            self.mean_rmse,
            self.mean_r2,
            self.mean_baseline_mae
        ));
        s
    }
}

/// R² on held-out rows; a constant test target scores 1 when matched
/// exactly and 0 otherwise.
fn r_squared(pred: &[f64], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    let sst: f64 = y.iter().map(|t| (t - mean).powi(2)).sum();
    if sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - sse / sst
}

/// Seeded shuffle into `k` folds whose sizes differ by at most one; each
/// fold is the test set once.
pub fn cross_validate(
    data: &TrainingDataset,
    schema: &[usize],
    k: usize,
    params: &FitParams,
    seed: u64,
) -> Result<CvReport, LearnerError> {
    let n = data.len();
    if k < 2 || n < k {
        return Err(LearnerError::TooFewSamples { got: n, need: k.max(2) });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for f in 0..k {
        for &row in &order[f * n / k..(f + 1) * n / k] {
            assignment[row] = f;
        }
    }

    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let test: Vec<usize> = (0..n).filter(|&r| assignment[r] == f).collect();
        let train: Vec<usize> = (0..n).filter(|&r| assignment[r] != f).collect();
        let model = fit(&data.subset(&train), schema, params)?;
        let y_test: Vec<f64> = test.iter().map(|&r| data.y[r]).collect();
        let pred: Vec<f64> = test
            .iter()
            .map(|&r| model.predict(&data.x[r]))
            .collect::<Result<_, _>>()?;
        let train_mean = train.iter().map(|&r| data.y[r]).sum::<f64>() / train.len() as f64;
        let m = test.len() as f64;
        folds.push(FoldMetrics {
            fold: f,
            n_test: test.len(),
            mae: pred.iter().zip(&y_test).map(|(p, y)| (p - y).abs()).sum::<f64>() / m,
            rmse: (pred.iter().zip(&y_test).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / m).sqrt(),
            r2: r_squared(&pred, &y_test),
            baseline_mae: y_test.iter().map(|y| (train_mean - y).abs()).sum::<f64>() / m,
        });
    }
    let mean = |g: fn(&FoldMetrics) -> f64| folds.iter().map(g).sum::<f64>() / k as f64;
    Ok(CvReport {
        k,
        seed,
        mean_mae: mean(|f| f.mae),
        mean_rmse: mean(|f| f.rmse),
        mean_r2: mean(|f| f.r2),
        mean_baseline_mae: mean(|f| f.baseline_mae),
        folds,
        assignment,
    })
}
