use alloc::string::String;
use alloc::vec::Vec;

use super::metrics::{Metrics, Warning};
use super::strategy::Strategy;
use super::BoostContext;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: Strategy,
    /// Sorted category names joined with `+`.
    pub categories: String,
    pub metrics: Metrics,
    /// Earlier row with the same pseudo-labeled category set, if any.
    pub duplicate_of: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub category_names: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    pub fingerprint: String,
    pub warnings: Vec<Warning>,
}

impl AblationReport {
    /// Combine per-strategy metrics, given in grid order.
    pub fn assemble(ctx: &BoostContext<'_>, grid: &[Strategy], metrics: Vec<Metrics>) -> Self {
        let names = &ctx.dataset().categories;
        let mut rows: Vec<ReportRow> = Vec::with_capacity(grid.len());
        for (strategy, metrics) in grid.iter().zip(metrics) {
            let duplicate_of = rows.iter().position(|r| {
                !r.strategy.uses_random_labels()
                    && !strategy.uses_random_labels()
                    && r.strategy.categories() == strategy.categories()
            });
            rows.push(ReportRow {
                categories: strategy.category_list(names),
                strategy: strategy.clone(),
                metrics,
                duplicate_of,
            });
        }
        Self {
            category_names: names.clone(),
            rows,
            seed: ctx.config().seed,
            fingerprint: ctx.config().fingerprint(),
            warnings: ctx.warnings().to_vec(),
        }
    }
}

/// Run every strategy of the configured grid in order.
pub fn ablation_suite(ctx: &BoostContext<'_>) -> Result<AblationReport> {
    let grid = ctx.strategy_grid()?;
    let metrics = grid
        .iter()
        .map(|s| ctx.run_strategy(s).map(|r| r.metrics))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport::assemble(ctx, &grid, metrics))
}
