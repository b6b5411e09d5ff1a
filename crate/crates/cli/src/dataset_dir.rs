//! Dataset directories: `nodes.csv`, `edges.csv`, `features.bin`, and the
//! optional `truth.csv` and `pseudo.csv`.
//!
//! Label nodes are identified as `label:<category>:<value>`. Categories are
//! ordered by their first label row in `nodes.csv`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use gcnboost_core::linalg::Matrix;
use gcnboost_core::{ArtworkRecord, Assignment, CategoryId, Dataset, LabelKey, LabelLink, Split};

use crate::binary::{decode_matrix, encode_matrix};
use crate::error::{CliError, Result};
use crate::fsutil::{read, read_csv, write_atomic, write_csv};

pub const NODES: &str = "nodes.csv";
pub const EDGES: &str = "edges.csv";
pub const FEATURES: &str = "features.bin";
pub const TRUTH: &str = "truth.csv";
pub const PSEUDO: &str = "pseudo.csv";

const NODE_HEADER: [&str; 6] = ["id", "kind", "split", "category", "value", "feature_ref"];
const EDGE_HEADER: [&str; 3] = ["src_id", "dst_id", "kind"];
const LABEL_HEADER: [&str; 3] = ["node_id", "category", "value"];

pub fn label_id(category: &str, value: &str) -> String {
    format!("label:{category}:{value}")
}

/// Label keys in category order, values by first use in assignments, then links.
fn label_keys(ds: &Dataset) -> Vec<LabelKey> {
    let mut seen = BTreeSet::new();
    let mut order: Vec<LabelKey> = Vec::new();
    let uses = ds
        .assignments
        .iter()
        .map(|a| LabelKey::new(a.category, a.value.clone()))
        .chain(ds.links.iter().flat_map(|l| [l.from.clone(), l.to.clone()]));
    for key in uses {
        if seen.insert(key.clone()) {
            order.push(key);
        }
    }
    order.sort_by_key(|k| k.category);
    order
}

pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    let name = |c: CategoryId| ds.category_name(c);
    let labels = label_keys(ds);
    let missing: Vec<&str> = (0..ds.num_categories())
        .filter(|&c| !labels.iter().any(|k| k.category.0 == c))
        .map(|c| ds.categories[c].as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::format(dir, format!("categories without labels cannot be stored: {}", missing.join(", "))));
    }

    let mut nodes: Vec<[String; 6]> = ds
        .artworks
        .iter()
        .map(|a| {
            [
                a.key.clone(),
                "artwork".into(),
                a.split.as_str().into(),
                String::new(),
                String::new(),
                a.feature_ref.map(|r| r.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    nodes.extend(labels.iter().map(|k| {
        [
            label_id(name(k.category), &k.value),
            "label".into(),
            String::new(),
            name(k.category).into(),
            k.value.clone(),
            String::new(),
        ]
    }));
    write_csv(&dir.join(NODES), &NODE_HEADER, nodes)?;

    let edges = ds
        .assignments
        .iter()
        .map(|a| [a.artwork.clone(), label_id(name(a.category), &a.value), "assignment".into()])
        .chain(ds.links.iter().map(|l| {
            [
                label_id(name(l.from.category), &l.from.value),
                label_id(name(l.to.category), &l.to.value),
                "link".into(),
            ]
        }));
    write_csv(&dir.join(EDGES), &EDGE_HEADER, edges)?;

    let features_path = dir.join(FEATURES);
    write_atomic(&features_path, &encode_matrix(&ds.features, &features_path)?)?;
    write_labels(&dir.join(TRUTH), &ds.truth, &ds.categories)?;
    if let Some(pseudo) = &ds.pseudo {
        write_labels(&dir.join(PSEUDO), pseudo, &ds.categories)?;
    }
    Ok(())
}

/// `node_id, category, value` rows, as used by `truth.csv` and `pseudo.csv`.
pub fn write_labels(path: &Path, rows: &[Assignment], categories: &[String]) -> Result<()> {
    write_csv(
        path,
        &LABEL_HEADER,
        rows.iter().map(|a| [a.artwork.as_str(), categories[a.category.0].as_str(), a.value.as_str()]),
    )
}

fn read_labels(path: &Path, categories: &[String], artworks: &BTreeSet<&str>) -> Result<Vec<Assignment>> {
    read_csv(path, &LABEL_HEADER)?
        .iter()
        .map(|r| {
            let (node, cat, value) = (&r[0], &r[1], &r[2]);
            if !artworks.contains(node) {
                return Err(CliError::format(path, format!("unknown artwork `{node}`")));
            }
            let c = categories
                .iter()
                .position(|n| n == cat)
                .ok_or_else(|| CliError::format(path, format!("unknown category `{cat}`")))?;
            Ok(Assignment::new(node, CategoryId(c), value))
        })
        .collect()
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let nodes_path = dir.join(NODES);
    let mut categories: Vec<String> = Vec::new();
    let mut artworks = Vec::new();
    let mut labels: BTreeMap<String, LabelKey> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for r in read_csv(&nodes_path, &NODE_HEADER)? {
        let id = r[0].to_string();
        if !ids.insert(id.clone()) {
            return Err(CliError::format(&nodes_path, format!("duplicate node id `{id}`")));
        }
        match &r[1] {
            "artwork" => {
                let split: Split = r[2]
                    .parse()
                    .map_err(|_| CliError::format(&nodes_path, format!("artwork `{id}` has split `{}`", &r[2])))?;
                let feature_ref = match &r[5] {
                    "" => None,
                    s => Some(s.parse().map_err(|_| {
                        CliError::format(&nodes_path, format!("artwork `{id}` has feature_ref `{s}`"))
                    })?),
                };
                artworks.push(ArtworkRecord { key: id, split, feature_ref });
            }
            "label" => {
                let cat = &r[3];
                if cat.is_empty() {
                    return Err(CliError::format(&nodes_path, format!("label `{id}` has no category")));
                }
                let c = match categories.iter().position(|n| n == cat) {
                    Some(c) => c,
                    None => {
                        categories.push(cat.into());
                        categories.len() - 1
                    }
                };
                labels.insert(id, LabelKey::new(CategoryId(c), &r[4]));
            }
            other => return Err(CliError::format(&nodes_path, format!("unknown node kind `{other}`"))),
        }
    }

    let edges_path = dir.join(EDGES);
    let keys: BTreeSet<&str> = artworks.iter().map(|a| a.key.as_str()).collect();
    let label = |id: &str| {
        labels
            .get(id)
            .ok_or_else(|| CliError::format(&edges_path, format!("`{id}` is not a label node")))
    };
    let mut assignments = Vec::new();
    let mut links = Vec::new();
    for r in read_csv(&edges_path, &EDGE_HEADER)? {
        match &r[2] {
            "assignment" => {
                if !keys.contains(&r[0]) {
                    return Err(CliError::format(&edges_path, format!("`{}` is not an artwork", &r[0])));
                }
                let to = label(&r[1])?;
                assignments.push(Assignment::new(&r[0], to.category, to.value.clone()));
            }
            "link" => links.push(LabelLink { from: label(&r[0])?.clone(), to: label(&r[1])?.clone() }),
            other => return Err(CliError::format(&edges_path, format!("unknown edge kind `{other}`"))),
        }
    }

    let features_path = dir.join(FEATURES);
    let features: Matrix = decode_matrix(&read(&features_path)?, &features_path)?;
    if let Some(a) = artworks.iter().find(|a| a.feature_ref.is_some_and(|r| r >= features.rows())) {
        return Err(CliError::format(&features_path, format!("no row for artwork `{}`", a.key)));
    }
    let optional = |file: &str| -> Result<Option<Vec<Assignment>>> {
        let p = dir.join(file);
        if p.exists() {
            read_labels(&p, &categories, &keys).map(Some)
        } else {
            Ok(None)
        }
    };
    let truth = optional(TRUTH)?.unwrap_or_default();
    let pseudo = optional(PSEUDO)?;
    Ok(Dataset { categories, artworks, assignments, links, features, truth, pseudo })
}
