use super::{
    Averaging, ClassScore, ConfusionMatrix, PredictionSet, Prf, Regime, Scheme, ScoreReport,
};

/// Brute-force scorer: one full scan of the rows per class (and per
/// confusion cell), with class membership decided on label strings.
/// Slow by design; it exists to cross-check [`super::score`].
pub fn oracle_score(preds: &PredictionSet, regime: Regime) -> ScoreReport {
    let rows: Vec<(String, String)> = preds
        .rows()
        .iter()
        .map(|r| (r.gold.to_string(), r.pred.to_string()))
        .collect();
    let scheme = regime.scheme;
    let class_of = |label: &str| -> String {
        match scheme {
            Scheme::Way18 => label.to_string(),
            _ => label.split('(').next().unwrap_or(label).to_string(),
        }
    };
    let mut names = scheme.class_names();
    names.push("Other".to_string());
    let other = names.len() - 1;

    let mut classes = Vec::new();
    for (c, name) in names.iter().enumerate() {
        let mut tp = 0;
        let mut gold = 0;
        let mut predicted = 0;
        for (g, p) in &rows {
            let in_gold = class_of(g) == *name;
            let in_pred = class_of(p) == *name;
            if in_gold {
                gold += 1;
            }
            if in_pred {
                predicted += 1;
            }
            let correct = match scheme {
                Scheme::Way9Undirected => in_gold && in_pred,
                _ => in_gold && g == p,
            };
            if correct {
                tp += 1;
            }
        }
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            0.0
        };
        let recall = if gold > 0 {
            tp as f64 / gold as f64
        } else {
            0.0
        };
        let f1 = if precision > 0.0 || recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        classes.push(ClassScore {
            class: name.clone(),
            tp,
            gold,
            predicted,
            prf: Prf {
                precision,
                recall,
                f1,
            },
            averaged: c != other && (regime.include_empty_classes || gold + predicted > 0),
        });
    }

    let mut counts = vec![vec![0; names.len()]; names.len()];
    for (i, gi) in names.iter().enumerate() {
        for (j, pj) in names.iter().enumerate() {
            counts[i][j] = rows
                .iter()
                .filter(|(g, p)| class_of(g) == *gi && class_of(p) == *pj)
                .count();
        }
    }

    let relation = &classes[..other];
    let sum_tp: usize = relation.iter().map(|c| c.tp).sum();
    let sum_pred: usize = relation.iter().map(|c| c.predicted).sum();
    let sum_gold: usize = relation.iter().map(|c| c.gold).sum();
    let mp = if sum_pred > 0 {
        sum_tp as f64 / sum_pred as f64
    } else {
        0.0
    };
    let mr = if sum_gold > 0 {
        sum_tp as f64 / sum_gold as f64
    } else {
        0.0
    };
    let micro = Prf {
        precision: mp,
        recall: mr,
        f1: if mp + mr > 0.0 {
            2.0 * mp * mr / (mp + mr)
        } else {
            0.0
        },
    };

    let averaged: Vec<&ClassScore> = relation.iter().filter(|c| c.averaged).collect();
    let empty = averaged.is_empty();
    let mut macro_avg = Prf::default();
    if !empty {
        for c in &averaged {
            macro_avg.precision += c.prf.precision;
            macro_avg.recall += c.prf.recall;
            macro_avg.f1 += c.prf.f1;
        }
        let k = averaged.len() as f64;
        macro_avg.precision /= k;
        macro_avg.recall /= k;
        macro_avg.f1 /= k;
    }

    ScoreReport {
        regime,
        total: rows.len(),
        f1: if regime.averaging == Averaging::Micro {
            micro.f1
        } else {
            macro_avg.f1
        },
        classes,
        micro,
        macro_avg,
        confusion: ConfusionMatrix {
            labels: names,
            counts,
        },
        empty_class_set: empty,
    }
}
