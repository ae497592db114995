//! Counterfactual consistency: does the decision survive swapping one
//! categorical feature through a set of values?

use crate::data::{ColumnKind, ColumnRole, Dataset};
use crate::error::{Error, Result};
use crate::linalg::sigmoid;
use crate::model::LinearModel;

/// Fraction of rows whose decision is identical across counterfactuals
/// that set `feature_name` to each value in `value_set` in turn.
pub fn counterfactual_consistency(
    model: &LinearModel,
    data: &Dataset,
    feature_name: &str,
    value_set: &[String],
) -> Result<f64> {
    let (_, spec) = data
        .schema
        .column(feature_name)
        .ok_or_else(|| Error::Argument(format!("unknown feature column '{feature_name}'")))?;
    if spec.kind != ColumnKind::Categorical || spec.role != ColumnRole::Feature {
        return Err(Error::Argument(format!(
            "consistency feature '{feature_name}' must be an encoded categorical feature"
        )));
    }
    if value_set.len() < 2 {
        return Err(Error::Argument(
            "consistency needs at least two values to compare".into(),
        ));
    }
    let codes: Vec<usize> = value_set
        .iter()
        .map(|v| {
            spec.categories.iter().position(|c| c == v).ok_or_else(|| {
                Error::Argument(format!(
                    "column '{feature_name}' has no category '{v}'"
                ))
            })
        })
        .collect::<Result<_>>()?;
    let block = data
        .schema
        .block_of(feature_name)
        .expect("categorical feature is encoded");
    if data.d() != model.w.len() {
        return Err(Error::Argument(format!(
            "model dimension {} does not match data dimension {}",
            model.w.len(),
            data.d()
        )));
    }

    // Only the block's contribution to the score changes, so precompute the
    // block weights once and adjust each row's logit per value.
    let block_w: Vec<f64> = (0..block.width).map(|k| model.w[block.offset + k]).collect();
    let mut consistent = 0usize;
    for i in 0..data.n() {
        let row = data.row(i);
        let base = model.logit(&row);
        let block_part: f64 = (0..block.width)
            .map(|k| block_w[k] * row[block.offset + k])
            .sum();
        let mut first: Option<u8> = None;
        let mut agree = true;
        for &code in &codes {
            let z = base - block_part + block_w[code];
            let decision = u8::from(sigmoid(z) >= model.threshold);
            match first {
                None => first = Some(decision),
                Some(f) if f != decision => {
                    agree = false;
                    break;
                }
                _ => {}
            }
        }
        if agree {
            consistent += 1;
        }
    }
    Ok(consistent as f64 / data.n() as f64)
}
