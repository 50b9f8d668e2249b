use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cm[i][j]` counts samples of true class `i` predicted as `j`.
pub type ConfusionMatrix = Vec<Vec<usize>>;

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut cm = vec![vec![0; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if let Some(&label) = [t, p].iter().find(|&&l| l >= n_classes) {
            return Err(Error::BadLabel { label, n_classes });
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    let total: usize = cm.iter().flatten().sum();
    let trace: usize = (0..cm.len()).map(|i| cm[i][i]).sum();
    ratio(trace, total)
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted mean over classes of per-class precision, recall and F1,
/// with every 0/0 taken as 0.
pub fn macro_prf(cm: &ConfusionMatrix) -> Prf {
    let c = cm.len();
    if c == 0 {
        return Prf {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for i in 0..c {
        let col: usize = cm.iter().map(|row| row[i]).sum();
        let row: usize = cm[i].iter().sum();
        let p = ratio(cm[i][i], col);
        let r = ratio(cm[i][i], row);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let n = c as f64;
    Prf {
        precision: p_sum / n,
        recall: r_sum / n,
        f1: f_sum / n,
    }
}

/// Pooled counts; for single-label data all three equal the accuracy.
pub fn micro_prf(cm: &ConfusionMatrix) -> Prf {
    let a = accuracy(cm);
    Prf {
        precision: a,
        recall: a,
        f1: a,
    }
}

pub fn prf(cm: &ConfusionMatrix, averaging: Averaging) -> Prf {
    match averaging {
        Averaging::Macro => macro_prf(cm),
        Averaging::Micro => micro_prf(cm),
    }
}

pub fn confusion_csv(cm: &ConfusionMatrix, class_names: &[String]) -> String {
    let mut s = String::from("true\\predicted");
    for name in class_names {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (name, row) in class_names.iter().zip(cm) {
        s.push_str(name);
        for v in row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}
