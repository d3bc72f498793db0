//! The bundled 40-problem fixture and the builds enumerated by hand from its
//! tag table.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use algotag::corpus::{parse_corpus, Problem};

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/forty.jsonl")
}

pub fn fixture() -> Vec<Problem> {
    parse_corpus(fixture_path()).expect("fixture parses")
}

/// After raw filtering: p29 carries only `*special`, p31 has a blank
/// statement. p19 and p30 lose their `*special` tag.
pub const FILTERED_OUT: [&str; 2] = ["p29", "p31"];

/// Tag counts over the 38 filtered problems.
pub const FILTERED_COUNTS: [(&str, usize); 8] = [
    ("greedy", 13),
    ("dp", 12),
    ("math", 9),
    ("graphs", 6),
    ("strings", 5),
    ("sortings", 3),
    ("bitmasks", 2),
    ("implementation", 2),
];

/// Expected items of the k=4 multilabel build, id to tags, in file order.
pub fn multilabel_top4() -> Vec<(&'static str, Vec<&'static str>)> {
    let mut out = Vec::new();
    for id in ["p01", "p02", "p03", "p04", "p05"] {
        out.push((id, vec!["dp"]));
    }
    out.push(("p06", vec!["greedy", "dp"]));
    out.push(("p07", vec!["dp", "math"]));
    out.push(("p08", vec!["dp", "graphs"]));
    for id in ["p09", "p10", "p11", "p12"] {
        out.push((id, vec!["greedy"]));
    }
    out.push(("p13", vec!["greedy", "math"]));
    out.push(("p14", vec!["greedy"]));
    for id in ["p15", "p16", "p17", "p18", "p19"] {
        out.push((id, vec!["math"]));
    }
    for id in ["p20", "p21", "p22"] {
        out.push((id, vec!["graphs"]));
    }
    out.push(("p23", vec!["greedy", "dp", "graphs"]));
    out.push(("p26", vec!["greedy"]));
    out.push(("p28", vec!["greedy"]));
    out.push(("p30", vec!["dp"]));
    out.push(("p33", vec!["dp"]));
    out.push(("p34", vec!["greedy"]));
    out.push(("p35", vec!["math"]));
    out.push(("p36", vec!["greedy", "dp", "math"]));
    out.push(("p37", vec!["graphs"]));
    out.push(("p40", vec!["greedy"]));
    out
}

/// Expected items of the k=2 multilabel build.
pub fn multilabel_top2() -> Vec<(&'static str, Vec<&'static str>)> {
    let both = ["p06", "p23", "p36"];
    let dp = [
        "p01", "p02", "p03", "p04", "p05", "p07", "p08", "p30", "p33",
    ];
    let greedy = [
        "p09", "p10", "p11", "p12", "p13", "p14", "p26", "p28", "p34", "p40",
    ];
    let mut out: Vec<(&str, Vec<&str>)> = both
        .iter()
        .map(|&id| (id, vec!["greedy", "dp"]))
        .chain(dp.iter().map(|&id| (id, vec!["dp"])))
        .chain(greedy.iter().map(|&id| (id, vec!["greedy"])))
        .collect();
    out.sort_by_key(|(id, _)| *id);
    out
}

/// Single-tag pool of the k=4 multilabel build, by class.
pub fn single_tag_pool() -> BTreeMap<&'static str, Vec<&'static str>> {
    BTreeMap::from([
        (
            "greedy",
            vec![
                "p09", "p10", "p11", "p12", "p14", "p26", "p28", "p34", "p40",
            ],
        ),
        ("dp", vec!["p01", "p02", "p03", "p04", "p05", "p30", "p33"]),
        ("math", vec!["p15", "p16", "p17", "p18", "p19", "p35"]),
        ("graphs", vec!["p20", "p21", "p22", "p37"]),
    ])
}

/// Catalog of the multiclass build with k=3 over that pool.
pub const MULTICLASS_TOP3: [&str; 3] = ["greedy", "dp", "math"];

use algotag::datasets::{
    build_balanced, build_multiclass, build_multilabel, default_non_algorithmic, filter_raw,
    LabeledDataset,
};

fn items_as_tags(ds: &LabeledDataset) -> Vec<(String, Vec<String>)> {
    ds.items
        .iter()
        .map(|it| {
            let tags = it
                .labels
                .iter()
                .map(|&l| ds.catalog.name(l).to_string())
                .collect();
            (it.problem.id.clone(), tags)
        })
        .collect()
}

fn owned(expected: Vec<(&str, Vec<&str>)>) -> Vec<(String, Vec<String>)> {
    expected
        .into_iter()
        .map(|(id, tags)| (id.to_string(), tags.into_iter().map(String::from).collect()))
        .collect()
}

fn density_identity(name: &str, ds: &LabeledDataset) -> Result<(), String> {
    let n = ds.len() as f64;
    let cardinality = ds.items.iter().map(|i| i.labels.len()).sum::<usize>() as f64 / n;
    let stats =
        algotag::datasets::dataset_stats(ds, &Default::default()).map_err(|e| e.to_string())?;
    if (stats.label_cardinality - cardinality).abs() > 1e-12 {
        return Err(format!(
            "{name}: cardinality {} vs {cardinality}",
            stats.label_cardinality
        ));
    }
    let product = stats.label_density * ds.n_classes() as f64;
    if (product - stats.label_cardinality).abs() > 1e-12 {
        return Err(format!(
            "{name}: density x classes = {product}, cardinality = {}",
            stats.label_cardinality
        ));
    }
    Ok(())
}

/// Every builder output against the hand enumeration. Returns the number of
/// builds compared.
pub fn check_fixture_builds() -> Result<usize, String> {
    let raw = fixture();
    if raw.len() != 40 {
        return Err(format!("fixture has {} problems", raw.len()));
    }
    let filtered = filter_raw(&raw, &default_non_algorithmic());
    let kept: Vec<&str> = filtered.iter().map(|p| p.id.as_str()).collect();
    let expected_kept: Vec<String> = raw
        .iter()
        .map(|p| p.id.clone())
        .filter(|id| !FILTERED_OUT.contains(&id.as_str()))
        .collect();
    if kept != expected_kept {
        return Err(format!("filter kept {kept:?}"));
    }
    let mut counts = BTreeMap::new();
    for p in &filtered {
        for t in &p.tags {
            *counts.entry(t.as_str()).or_insert(0usize) += 1;
        }
    }
    if counts != FILTERED_COUNTS.into_iter().collect::<BTreeMap<_, _>>() {
        return Err(format!("filtered tag counts {counts:?}"));
    }

    let mut builds = 0;
    let ml4 = build_multilabel(&filtered, 4).map_err(|e| e.to_string())?;
    if ml4.catalog.tags() != ["greedy", "dp", "math", "graphs"] {
        return Err(format!("k=4 catalog {:?}", ml4.catalog.tags()));
    }
    if items_as_tags(&ml4) != owned(multilabel_top4()) {
        return Err(format!("k=4 multilabel items {:?}", items_as_tags(&ml4)));
    }
    density_identity("multilabel k=4", &ml4)?;
    if (
        ml4.items.iter().map(|i| i.labels.len()).sum::<usize>(),
        ml4.len(),
    ) != (40, 32)
    {
        return Err("k=4 multilabel label total".into());
    }
    builds += 1;

    let ml2 = build_multilabel(&filtered, 2).map_err(|e| e.to_string())?;
    if ml2.catalog.tags() != ["greedy", "dp"] || items_as_tags(&ml2) != owned(multilabel_top2()) {
        return Err(format!("k=2 multilabel items {:?}", items_as_tags(&ml2)));
    }
    density_identity("multilabel k=2", &ml2)?;
    builds += 1;

    let pool = single_tag_pool();
    let mc4 = build_multiclass(&ml4, 4).map_err(|e| e.to_string())?;
    if mc4.catalog.tags() != ["greedy", "dp", "math", "graphs"] {
        return Err(format!("multiclass k=4 catalog {:?}", mc4.catalog.tags()));
    }
    let mut expected_mc4: Vec<(&str, Vec<&str>)> = pool
        .iter()
        .flat_map(|(tag, ids)| ids.iter().map(move |&id| (id, vec![*tag])))
        .collect();
    expected_mc4.sort_by_key(|(id, _)| *id);
    if items_as_tags(&mc4) != owned(expected_mc4.clone()) {
        return Err(format!("multiclass k=4 items {:?}", items_as_tags(&mc4)));
    }
    density_identity("multiclass k=4", &mc4)?;
    builds += 1;

    // The multiclass set is the single-tag restriction of the multilabel set.
    let restriction: Vec<(String, Vec<String>)> = items_as_tags(&ml4)
        .into_iter()
        .filter(|(_, tags)| tags.len() == 1)
        .collect();
    if restriction != items_as_tags(&mc4) {
        return Err("multiclass is not the single-tag restriction".into());
    }

    let mc3 = build_multiclass(&ml4, 3).map_err(|e| e.to_string())?;
    let expected_mc3: Vec<(&str, Vec<&str>)> = expected_mc4
        .iter()
        .filter(|(_, t)| MULTICLASS_TOP3.contains(&t[0]))
        .cloned()
        .collect();
    if mc3.catalog.tags() != MULTICLASS_TOP3 || items_as_tags(&mc3) != owned(expected_mc3) {
        return Err(format!("multiclass k=3 items {:?}", items_as_tags(&mc3)));
    }
    density_identity("multiclass k=3", &mc3)?;
    builds += 1;

    // Taking a whole class leaves no sampling freedom.
    let greedy_only = build_balanced(&mc4, 1, 9, 5).map_err(|e| e.to_string())?;
    let expected: Vec<(&str, Vec<&str>)> = pool["greedy"]
        .iter()
        .map(|&id| (id, vec!["greedy"]))
        .collect();
    if items_as_tags(&greedy_only) != owned(expected) {
        return Err(format!(
            "balanced k=1 items {:?}",
            items_as_tags(&greedy_only)
        ));
    }
    density_identity("balanced k=1", &greedy_only)?;
    builds += 1;

    for seed in 0..5 {
        let bal = build_balanced(&mc4, 4, 4, seed).map_err(|e| e.to_string())?;
        let items = items_as_tags(&bal);
        let graphs: Vec<&str> = items
            .iter()
            .filter(|(_, t)| t[0] == "graphs")
            .map(|(id, _)| id.as_str())
            .collect();
        if graphs != pool["graphs"] || bal.len() != 16 {
            return Err(format!("balanced k=4 seed {seed}: {items:?}"));
        }
        for (tag, ids) in &pool {
            let chosen: Vec<&str> = items
                .iter()
                .filter(|(_, t)| t[0] == *tag)
                .map(|(id, _)| id.as_str())
                .collect();
            if chosen.len() != 4 || !chosen.iter().all(|id| ids.contains(id)) {
                return Err(format!("balanced k=4 seed {seed}, class {tag}: {chosen:?}"));
            }
        }
        let mut sorted = items.clone();
        sorted.sort();
        if sorted != items {
            return Err("balanced items lost source order".into());
        }
        density_identity("balanced k=4", &bal)?;
        builds += 1;
    }
    if build_balanced(&mc4, 4, 5, 0).is_ok() {
        return Err("graphs has only 4 items, per_class 5 must fail".into());
    }
    Ok(builds)
}
