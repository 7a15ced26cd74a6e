use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use voxsel_core::embeddings::{load_pool_auto, target_embedding};
use voxsel_core::plda::load_plda;
use voxsel_core::selection::{adaptation_list, rank_pool, Criterion, SelectionConfig, SelectionReport};

use super::read_selection_report;
use crate::args::{CriterionArg, SelectArgs};
use crate::error::{at_path, required, CliError, CliResult};
use crate::output::{envelope_json, write_atomic};
use crate::show;

#[derive(Serialize)]
struct Effective {
    pool: String,
    plda: String,
    target: String,
    reference: Option<String>,
    exclude_speakers: Vec<String>,
    selection: SelectionConfig,
}

fn criterion(c: CriterionArg) -> Criterion {
    match c {
        CriterionArg::Dc1 => Criterion::Dc1,
        CriterionArg::Dc2 => Criterion::Dc2,
        CriterionArg::Dc3 => Criterion::Dc3,
    }
}

/// `report.json` becomes `report.list.txt`.
pub(crate) fn default_list_path(out: &Path) -> PathBuf {
    out.with_extension("list.txt")
}

fn read_id_list(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut ids: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    ids.sort();
    ids.dedup();
    Ok(ids)
}

pub fn run(a: SelectArgs) -> CliResult<()> {
    let pool_path = required(a.pool, "select", "pool")?;
    let plda_path = required(a.plda, "select", "plda")?;
    let target_path = required(a.target, "select", "target")?;
    let out = required(a.out, "select", "out")?;
    let defaults = SelectionConfig::default();
    let cfg = SelectionConfig {
        criterion: a.criterion.map_or(defaults.criterion, criterion),
        k: a.k.unwrap_or(defaults.k),
        alpha: a.alpha.unwrap_or(defaults.alpha),
        sigmoid_c: a.sigmoid_c.unwrap_or(defaults.sigmoid_c),
        epsilon: a.epsilon.unwrap_or(defaults.epsilon),
    };
    cfg.validate()?;

    let excluded = match &a.exclude_speakers {
        Some(p) => read_id_list(p)?,
        None => Vec::new(),
    };
    let pool = at_path(&pool_path, load_pool_auto(&pool_path))?;
    let targets = at_path(&target_path, load_pool_auto(&target_path))?;
    let model = at_path(&plda_path, load_plda(&plda_path))?;
    let reference = a.reference.as_deref().map(read_selection_report).transpose()?;
    log::info!(
        "pool: {} utterances from {} speakers, dimension {}",
        pool.len(),
        pool.num_speakers(),
        pool.dimension()
    );

    let excluded_set: HashSet<String> = excluded.iter().cloned().collect();
    let unknown: Vec<&String> = excluded.iter().filter(|s| pool.utterances_of(s).is_err()).collect();
    if !unknown.is_empty() {
        log::warn!("{} excluded speaker id(s) are not in the pool", unknown.len());
    }
    let target = at_path(&target_path, target_embedding(targets.records()))?;
    let report = rank_pool(&pool, &model, &target, &cfg, &excluded_set)?;
    if cfg.k > report.ranked.len() {
        log::warn!(
            "k = {} exceeds the {} candidate utterances; selecting all of them",
            cfg.k,
            report.ranked.len()
        );
    }
    let report = match &reference {
        Some(r) => SelectionReport::from_ranked(report.ranked, cfg.k, Some(&r.selected)),
        None => report,
    };

    let effective = Effective {
        pool: show(&pool_path),
        plda: show(&plda_path),
        target: show(&target_path),
        reference: a.reference.as_deref().map(show),
        exclude_speakers: excluded,
        selection: cfg,
    };
    let json = envelope_json("select", &effective, &report)?;
    let list_path = a.list.unwrap_or_else(|| default_list_path(&out));
    let mut list = adaptation_list(&report.selected, targets.records()).join("\n");
    list.push('\n');
    write_atomic(&out, json.as_bytes())?;
    write_atomic(&list_path, list.as_bytes())?;
    log::info!(
        "selected {} utterances from {} speakers ({} suspected); list at {}",
        report.selected.len(),
        report.stats.num_speakers,
        report.stats.num_suspected,
        list_path.display()
    );
    Ok(())
}
