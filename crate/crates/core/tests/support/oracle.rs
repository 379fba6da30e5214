//! Per-record counting oracle for classification metrics, written
//! independently of the library's implementation.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqforge::domain::{DatasetRecord, NfrSubtype, RequirementLabel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// `gold[i]` against `pred[i]`, one-vs-rest for `class`. A `None`
/// prediction never counts as a positive.
pub fn oracle_class(gold: &[String], pred: &[Option<String>], class: &str) -> Prf {
    let (mut tp, mut fp, mut fneg) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..gold.len() {
        let is_gold = gold[i] == class;
        let is_pred = pred[i].as_deref() == Some(class);
        if is_gold && is_pred {
            tp += 1.0;
        } else if is_pred {
            fp += 1.0;
        } else if is_gold {
            fneg += 1.0;
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf {
        precision,
        recall,
        f1,
        support: (tp + fneg) as usize,
    }
}

pub fn oracle_weighted(per_class: &[Prf]) -> f64 {
    let n: usize = per_class.iter().map(|p| p.support).sum();
    let mut acc = 0.0;
    for p in per_class {
        if p.support > 0 {
            acc += p.f1 * p.support as f64 / n as f64;
        }
    }
    acc
}

pub struct Case {
    pub records: Vec<DatasetRecord>,
    pub predictions: BTreeMap<String, RequirementLabel>,
}

/// Random records over at most `max_classes` labels (drawn from `pool`),
/// with roughly one prediction in eight missing.
pub fn random_case(rng: &mut ChaCha8Rng, pool: &[RequirementLabel], max_records: usize) -> Case {
    let k = rng.random_range(1..=pool.len());
    let mut classes = pool.to_vec();
    for i in 0..k {
        let j = rng.random_range(i..classes.len());
        classes.swap(i, j);
    }
    classes.truncate(k);
    let all: Vec<RequirementLabel> = RequirementLabel::all().collect();
    let n = rng.random_range(1..=max_records);
    let mut records = Vec::with_capacity(n);
    let mut predictions = BTreeMap::new();
    for i in 0..n {
        let id = format!("r{i}");
        let gold = classes[rng.random_range(0..classes.len())];
        match rng.random_range(0..8) {
            0 => {}
            1 => {
                predictions.insert(id.clone(), all[rng.random_range(0..all.len())]);
            }
            2..=4 => {
                predictions.insert(id.clone(), gold);
            }
            _ => {
                predictions.insert(id.clone(), classes[rng.random_range(0..classes.len())]);
            }
        }
        records.push(DatasetRecord {
            id,
            text: format!("text {i}"),
            gold,
        });
    }
    Case { records, predictions }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn nfr_pool() -> Vec<RequirementLabel> {
    NfrSubtype::ALL.iter().map(|s| RequirementLabel::NonFunctional(*s)).collect()
}

pub fn full_pool() -> Vec<RequirementLabel> {
    RequirementLabel::all().collect()
}

pub fn binary_name(label: RequirementLabel) -> String {
    if label.is_functional() { "F" } else { "NFR" }.to_string()
}
