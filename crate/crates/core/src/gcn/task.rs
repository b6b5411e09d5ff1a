use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{CategoryId, NodeId};

/// Targets and masks of one classification task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskLabels {
    pub category: CategoryId,
    pub classes: usize,
    pub targets: BTreeMap<NodeId, usize>,
    pub train_mask: BTreeSet<NodeId>,
    pub val_mask: BTreeSet<NodeId>,
}

impl TaskLabels {
    pub fn new(
        category: CategoryId,
        classes: usize,
        targets: BTreeMap<NodeId, usize>,
        train_mask: BTreeSet<NodeId>,
        val_mask: BTreeSet<NodeId>,
    ) -> Result<Self> {
        if let Some(n) = train_mask.intersection(&val_mask).next() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "node {n} is in both the train and validation masks"
            )));
        }
        let task = Self {
            category,
            classes,
            targets,
            train_mask,
            val_mask,
        };
        task.masked(&task.train_mask)?;
        task.masked(&task.val_mask)?;
        Ok(task)
    }

    /// `(node index, target)` pairs of a mask, in node order.
    pub fn masked(&self, mask: &BTreeSet<NodeId>) -> Result<Vec<(usize, usize)>> {
        mask.iter()
            .map(|&n| {
                let t = *self
                    .targets
                    .get(&n)
                    .ok_or(Error::MissingRow { what: "target", node: n })?;
                if t >= self.classes {
                    return Err(Error::TargetOutOfRange {
                        target: t,
                        classes: self.classes,
                    });
                }
                Ok((n.0, t))
            })
            .collect()
    }
}
