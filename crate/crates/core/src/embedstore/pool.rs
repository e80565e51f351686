use serde::{Deserialize, Serialize};

use super::{ContextId, EmbeddingRecord, Result, StoreError};

/// How an entity's per-context vectors become one probe input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy", content = "context")]
pub enum Pooling {
    /// Mean over the three template contexts, or the static vector.
    #[default]
    Mean,
    /// One named context.
    Single(ContextId),
}

/// Pools the records of a single entity.
///
/// Under [`Pooling::Mean`] the entity needs all of contexts 0, 1 and 2, or a
/// static record when it has no contextual ones. Summation runs in context-id
/// order, so the result does not depend on the order of `records`.
pub fn pool_contexts(entity: &str, records: &[&EmbeddingRecord], policy: Pooling) -> Result<Vec<f64>> {
    let find = |ctx: ContextId| records.iter().find(|r| r.context == ctx);
    match policy {
        Pooling::Single(ctx) => find(ctx)
            .map(|r| r.vector.iter().map(|&v| f64::from(v)).collect())
            .ok_or_else(|| StoreError::MissingContext {
                entity: entity.to_string(),
                context: ctx,
            }),
        Pooling::Mean => {
            let contextual: Vec<_> = ContextId::TEMPLATES.iter().map(|&c| find(c)).collect();
            if contextual.iter().all(Option::is_none) {
                if let Some(r) = find(ContextId::STATIC) {
                    return Ok(r.vector.iter().map(|&v| f64::from(v)).collect());
                }
            }
            let mut sum: Option<Vec<f64>> = None;
            for (ctx, rec) in ContextId::TEMPLATES.iter().zip(&contextual) {
                let rec = rec.ok_or_else(|| StoreError::MissingContext {
                    entity: entity.to_string(),
                    context: *ctx,
                })?;
                let acc = sum.get_or_insert_with(|| vec![0.0; rec.vector.len()]);
                for (a, &v) in acc.iter_mut().zip(&rec.vector) {
                    *a += f64::from(v);
                }
            }
            let n = ContextId::TEMPLATES.len() as f64;
            Ok(sum.unwrap_or_default().into_iter().map(|s| s / n).collect())
        }
    }
}
