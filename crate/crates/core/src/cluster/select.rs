use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{kmeans, validity_scores, ClusterError, ClusterModel, FeatureSet, ValidityScores};

/// One candidate K of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEvaluation {
    pub k: usize,
    pub wcss: Option<f64>,
    pub scores: Option<ValidityScores>,
    /// Why the candidate was disqualified, if it was.
    pub error: Option<String>,
    /// Ranks among qualified candidates: Davies-Bouldin, silhouette, Dunn.
    pub ranks: Option<[usize; 3]>,
    pub mean_rank: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KSelection {
    pub chosen_k: usize,
    pub table: Vec<KEvaluation>,
    pub model: ClusterModel,
}

/// Fits every K in `k_range` and picks the best mean rank across the three
/// indices (Davies-Bouldin ascending, silhouette and Dunn descending).
/// Rank ties share the better rank; mean-rank ties go to the smaller K.
///
/// A K whose fit or indices fail is disqualified. A single-candidate range is
/// returned as is, whatever its indices.
pub fn select_k(
    features: &FeatureSet,
    k_range: RangeInclusive<usize>,
    seed: u64,
    restarts: usize,
) -> Result<KSelection, ClusterError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    let n = features.len();
    if lo < 2 || hi < lo || hi > n.saturating_sub(1) {
        return Err(ClusterError::InvalidRange { lo, hi, n });
    }
    let mut table = Vec::new();
    let mut models = Vec::new();
    for k in k_range {
        let fit = kmeans(features, k, seed, restarts);
        let scored = fit
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|m| validity_scores(features, m));
        if let Err(e) = &scored {
            log::warn!("k = {k} disqualified: {e}");
        }
        table.push(KEvaluation {
            k,
            wcss: fit.as_ref().ok().map(|m| m.wcss),
            scores: scored.as_ref().ok().copied(),
            error: scored.as_ref().err().map(ToString::to_string),
            ranks: None,
            mean_rank: None,
        });
        models.push(fit);
    }

    let qualified: Vec<usize> = (0..table.len())
        .filter(|&i| table[i].scores.is_some())
        .collect();
    let keyed = |f: fn(&ValidityScores) -> f64| -> Vec<f64> {
        qualified
            .iter()
            .map(|&i| f(table[i].scores.as_ref().expect("qualified")))
            .collect()
    };
    let db = competition_ranks(&keyed(|s| s.davies_bouldin));
    let sil = competition_ranks(&keyed(|s| -s.silhouette));
    let dunn = competition_ranks(&keyed(|s| -s.dunn));
    for (pos, &i) in qualified.iter().enumerate() {
        let ranks = [db[pos], sil[pos], dunn[pos]];
        table[i].ranks = Some(ranks);
        table[i].mean_rank = Some(ranks.iter().sum::<usize>() as f64 / 3.0);
    }

    let chosen = qualified
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let (ra, rb) = (table[a].mean_rank.unwrap(), table[b].mean_rank.unwrap());
            ra.total_cmp(&rb).then(table[a].k.cmp(&table[b].k))
        })
        .or((lo == hi).then_some(0));
    let Some(chosen) = chosen else {
        return Err(ClusterError::NoValidK { lo, hi });
    };
    let model = models.swap_remove(chosen)?;
    Ok(KSelection {
        chosen_k: table[chosen].k,
        table,
        model,
    })
}

/// 1-based "1224" ranking of ascending values.
fn competition_ranks(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| w.total_cmp(v).is_lt()).count())
        .collect()
}
