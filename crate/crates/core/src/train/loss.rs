use crate::error::{Error, Result};

/// Loss value and its gradients with respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceOutput {
    pub loss: f64,
    pub grad_queries: Vec<Vec<f64>>,
    pub grad_positives: Vec<Vec<f64>>,
    /// Present in triplet mode, shaped like the negatives.
    pub grad_negatives: Option<Vec<Vec<Vec<f64>>>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `-log softmax` of the positive logit, where `diffs` holds
/// `(s(q, d⁻) - s(q, d⁺)) / τ` for each negative. Also returns the softmax
/// weights `[p⁺, p⁻...]`.
fn row_loss(diffs: &[f64]) -> (f64, Vec<f64>) {
    let m = diffs.iter().copied().fold(0.0f64, f64::max);
    let exps: Vec<f64> = diffs.iter().map(|d| (d - m).exp()).collect();
    let pos = (-m).exp();
    let denom = pos + exps.iter().sum::<f64>();
    let loss = if m == 0.0 {
        exps.iter().sum::<f64>().ln_1p()
    } else {
        m + denom.ln()
    };
    let mut probs = Vec::with_capacity(diffs.len() + 1);
    probs.push(pos / denom);
    probs.extend(exps.iter().map(|e| e / denom));
    (loss, probs)
}

/// Mean InfoNCE loss over `N` queries with cosine similarity (dot products of
/// unit vectors) scaled by `1/τ`.
///
/// Without `negatives` the other positives of the batch act as negatives
/// (requires `N ≥ 2`); with `negatives` each query uses exactly its own list.
pub fn info_nce_loss(
    queries: &[Vec<f64>],
    positives: &[Vec<f64>],
    negatives: Option<&[Vec<Vec<f64>>]>,
    tau: f64,
) -> Result<InfoNceOutput> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {tau}")));
    }
    let n = queries.len();
    if n == 0 || positives.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} queries but {} positives",
            n,
            positives.len()
        )));
    }
    let dim = queries[0].len();
    let consistent = |v: &Vec<f64>| v.len() == dim;
    if !queries.iter().all(consistent) || !positives.iter().all(consistent) {
        return Err(Error::InvalidArgument("vector dimensions differ".into()));
    }

    let scale = 1.0 / (n as f64 * tau);
    let mut loss = 0.0;
    let mut gq = vec![vec![0.0; dim]; n];
    let mut gp = vec![vec![0.0; dim]; n];

    match negatives {
        None => {
            if n < 2 {
                return Err(Error::NoNegatives);
            }
            for i in 0..n {
                let s_pos = dot(&queries[i], &positives[i]);
                let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let diffs: Vec<f64> = others
                    .iter()
                    .map(|&j| (dot(&queries[i], &positives[j]) - s_pos) / tau)
                    .collect();
                let (l, probs) = row_loss(&diffs);
                loss += l;
                let g_pos = (probs[0] - 1.0) * scale;
                axpy(g_pos, &positives[i], &mut gq[i]);
                axpy(g_pos, &queries[i], &mut gp[i]);
                for (&j, &p) in others.iter().zip(&probs[1..]) {
                    let g = p * scale;
                    axpy(g, &positives[j], &mut gq[i]);
                    axpy(g, &queries[i], &mut gp[j]);
                }
            }
            Ok(InfoNceOutput {
                loss: loss / n as f64,
                grad_queries: gq,
                grad_positives: gp,
                grad_negatives: None,
            })
        }
        Some(negs) => {
            if negs.len() != n {
                return Err(Error::InvalidArgument("one negative list per query required".into()));
            }
            if negs.iter().any(Vec::is_empty) {
                return Err(Error::NoNegatives);
            }
            if !negs.iter().flatten().all(consistent) {
                return Err(Error::InvalidArgument("vector dimensions differ".into()));
            }
            let mut gn: Vec<Vec<Vec<f64>>> =
                negs.iter().map(|l| vec![vec![0.0; dim]; l.len()]).collect();
            for i in 0..n {
                let s_pos = dot(&queries[i], &positives[i]);
                let diffs: Vec<f64> = negs[i]
                    .iter()
                    .map(|d| (dot(&queries[i], d) - s_pos) / tau)
                    .collect();
                let (l, probs) = row_loss(&diffs);
                loss += l;
                let g_pos = (probs[0] - 1.0) * scale;
                axpy(g_pos, &positives[i], &mut gq[i]);
                axpy(g_pos, &queries[i], &mut gp[i]);
                for (h, &p) in probs[1..].iter().enumerate() {
                    let g = p * scale;
                    axpy(g, &negs[i][h], &mut gq[i]);
                    axpy(g, &queries[i], &mut gn[i][h]);
                }
            }
            Ok(InfoNceOutput {
                loss: loss / n as f64,
                grad_queries: gq,
                grad_positives: gp,
                grad_negatives: Some(gn),
            })
        }
    }
}
