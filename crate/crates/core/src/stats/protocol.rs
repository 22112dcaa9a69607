//! The cohort analysis protocol: test choice by variable type, effect sizes,
//! BH correction per analysis family, optional site stratification.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fdr::bh_fdr;
use super::hypothesis::{anova_oneway, quartile_groups, spearman, ttest_ind};
use super::table::CohortTable;
use crate::output::number as cell;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Demographic variables to test; empty means every demographic column.
    pub variables: Vec<String>,
    /// `feature@scope` columns to test; empty means every feature column.
    pub features: Vec<String>,
    /// Variables treated as categorical even if their values parse as numbers.
    pub categorical: Vec<String>,
    pub site_column: String,
    /// Rows whose site is listed here are dropped before anything else.
    pub exclude_sites: Vec<String>,
    /// Run every test separately within each site.
    pub stratify_by_site: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            variables: Vec::new(),
            features: Vec::new(),
            categorical: Vec::new(),
            site_column: "site".into(),
            exclude_sites: Vec::new(),
            stratify_by_site: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Spearman,
    QuartileAnova,
    WelchT,
    Anova,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Spearman => "spearman",
            TestKind::QuartileAnova => "quartile_anova",
            TestKind::WelchT => "welch_t",
            TestKind::Anova => "anova",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectType {
    R,
    D,
    Eta2,
    Omega2,
}

impl EffectType {
    pub fn as_str(self) -> &'static str {
        match self {
            EffectType::R => "r",
            EffectType::D => "d",
            EffectType::Eta2 => "eta2",
            EffectType::Omega2 => "omega2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatResult {
    pub test: TestKind,
    pub variable: String,
    /// Feature name without the scope suffix.
    pub feature: String,
    /// `global` or a region id.
    pub scope: String,
    /// Subjects with both values present.
    pub n: usize,
    pub statistic: Option<f64>,
    pub p: Option<f64>,
    pub effect_type: EffectType,
    pub effect: Option<f64>,
    pub q: Option<f64>,
    pub flags: Vec<String>,
    /// Site value in stratified mode.
    pub stratum: Option<String>,
}

impl StatResult {
    pub fn column(&self) -> String {
        format!("{}@{}", self.feature, self.scope)
    }

    pub fn is_skipped(&self) -> bool {
        self.p.is_none()
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.q.is_some_and(|q| q < alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum VariableKind {
    Numeric,
    /// Two levels, in sorted order.
    Binary([String; 2]),
    /// Three or more levels, in sorted order.
    Multi(Vec<String>),
}

/// One variable's per-row values.
#[derive(Debug, Clone)]
enum Values {
    Numeric(Vec<Option<f64>>),
    Levels(Vec<Option<String>>),
}

fn classify(table: &CohortTable, name: &str, force_categorical: bool) -> Result<(VariableKind, Values)> {
    if !force_categorical {
        if let Some(v) = table.numeric(name)? {
            let distinct: BTreeSet<u64> = v.iter().flatten().map(|x| x.to_bits()).collect();
            if distinct.len() > 2 {
                return Ok((VariableKind::Numeric, Values::Numeric(v)));
            }
        }
    }
    let cells: Vec<Option<String>> = table.text(name)?.into_iter().map(|c| c.map(str::to_string)).collect();
    let levels: Vec<String> = cells.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let kind = match levels.len() {
        2 => VariableKind::Binary([levels[0].clone(), levels[1].clone()]),
        _ => VariableKind::Multi(levels),
    };
    Ok((kind, Values::Levels(cells)))
}

fn skipped(test: TestKind, effect_type: EffectType, n: usize, reason: impl std::fmt::Display) -> Outcome {
    Outcome {
        test,
        n,
        statistic: None,
        p: None,
        effect_type,
        effect: None,
        flags: vec![format!("skipped: {reason}")],
    }
}

struct Outcome {
    test: TestKind,
    n: usize,
    statistic: Option<f64>,
    p: Option<f64>,
    effect_type: EffectType,
    effect: Option<f64>,
    flags: Vec<String>,
}

fn numeric_tests(x: &[Option<f64>], y: &[Option<f64>]) -> Vec<Outcome> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    let n = xs.len();
    let corr = match spearman(&xs, &ys) {
        Ok(c) => Outcome {
            test: TestKind::Spearman,
            n,
            statistic: Some(c.rho),
            p: Some(c.p),
            effect_type: EffectType::R,
            effect: Some(c.rho),
            flags: Vec::new(),
        },
        Err(e) => skipped(TestKind::Spearman, EffectType::R, n, e),
    };
    let anova = match quartile_groups(&xs) {
        Ok(groups) => {
            let mut buckets = vec![Vec::new(); 4];
            for (g, v) in groups.into_iter().zip(&ys) {
                buckets[g].push(*v);
            }
            anova_outcome(TestKind::QuartileAnova, EffectType::Eta2, &buckets, n)
        }
        Err(e) => skipped(TestKind::QuartileAnova, EffectType::Eta2, n, e),
    };
    vec![corr, anova]
}

fn anova_outcome(test: TestKind, effect_type: EffectType, groups: &[Vec<f64>], n: usize) -> Outcome {
    match anova_oneway(groups) {
        Ok(a) => Outcome {
            test,
            n,
            statistic: Some(a.f),
            p: Some(a.p),
            effect_type,
            effect: Some(match effect_type {
                EffectType::Omega2 => a.omega2,
                _ => a.eta2,
            }),
            flags: a.flags,
        },
        Err(e) => skipped(test, effect_type, n, e),
    }
}

fn grouped(levels: &[String], x: &[Option<String>], y: &[Option<f64>]) -> (Vec<Vec<f64>>, usize) {
    let mut groups = vec![Vec::new(); levels.len()];
    let mut n = 0;
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            let g = levels.iter().position(|l| l == a).expect("level collected from this column");
            groups[g].push(*b);
            n += 1;
        }
    }
    (groups, n)
}

fn binary_tests(levels: &[String; 2], x: &[Option<String>], y: &[Option<f64>]) -> Vec<Outcome> {
    let (groups, n) = grouped(levels, x, y);
    let t = match ttest_ind(&groups[0], &groups[1]) {
        Ok(t) => {
            let mut flags = t.flags;
            flags.push(format!("d = mean({}) - mean({})", levels[0], levels[1]));
            Outcome {
                test: TestKind::WelchT,
                n,
                statistic: Some(t.t),
                p: Some(t.p),
                effect_type: EffectType::D,
                effect: Some(t.cohens_d),
                flags,
            }
        }
        Err(e) => skipped(TestKind::WelchT, EffectType::D, n, e),
    };
    vec![t, anova_outcome(TestKind::Anova, EffectType::Eta2, &groups, n)]
}

fn multi_tests(levels: &[String], x: &[Option<String>], y: &[Option<f64>]) -> Vec<Outcome> {
    if levels.len() < 2 {
        return vec![skipped(TestKind::Anova, EffectType::Omega2, 0, "fewer than 2 levels")];
    }
    let (groups, n) = grouped(levels, x, y);
    vec![anova_outcome(TestKind::Anova, EffectType::Omega2, &groups, n)]
}

fn split_column(column: &str) -> (String, String) {
    match column.rsplit_once('@') {
        Some((f, s)) => (f.to_string(), s.to_string()),
        None => (column.to_string(), "global".to_string()),
    }
}

fn checked(table: &CohortTable, names: &[String]) -> Result<()> {
    for name in names {
        table.column_index(name)?;
    }
    Ok(())
}

/// Runs every configured (variable, feature) test, then applies BH within
/// each (variable, test, stratum) family. Skipped tests keep `p = q = None`.
pub fn run_protocol(table: &CohortTable, config: &ProtocolConfig) -> Result<Vec<StatResult>> {
    if table.is_empty() {
        return Err(Error::Parameter("cohort table has no rows".into()));
    }
    checked(table, &config.variables)?;
    checked(table, &config.features)?;
    checked(table, &config.categorical)?;
    let has_site = table.has_column(&config.site_column);
    if (config.stratify_by_site || !config.exclude_sites.is_empty()) && !has_site {
        return Err(Error::UnknownColumn(config.site_column.clone()));
    }

    let table = if config.exclude_sites.is_empty() {
        table.clone()
    } else {
        let sites = table.text(&config.site_column)?;
        table.filter(|i| !sites[i].is_some_and(|s| config.exclude_sites.iter().any(|x| x == s)))
    };

    let mut variables = if config.variables.is_empty() {
        table.demographic_columns()
    } else {
        config.variables.clone()
    };
    let features = if config.features.is_empty() {
        table.feature_columns()
    } else {
        config.features.clone()
    };

    let strata: Vec<(Option<String>, CohortTable)> = if config.stratify_by_site {
        variables.retain(|v| *v != config.site_column);
        let sites = table.text(&config.site_column)?;
        let levels: BTreeSet<&str> = sites.iter().flatten().copied().collect();
        levels
            .into_iter()
            .map(|s| (Some(s.to_string()), table.filter(|i| sites[i] == Some(s))))
            .collect()
    } else {
        vec![(None, table.clone())]
    };

    let mut results = Vec::new();
    for (stratum, t) in &strata {
        let mut jobs = Vec::new();
        for v in &variables {
            let force = config.categorical.contains(v);
            let (kind, values) = classify(t, v, force)?;
            for f in &features {
                let y = t.numeric(f)?.ok_or_else(|| {
                    Error::Parameter(format!("feature column `{f}` holds non-numeric values"))
                })?;
                jobs.push((v, f, kind.clone(), values.clone(), y));
            }
        }
        let outcomes: Vec<Vec<StatResult>> = jobs
            .into_par_iter()
            .map(|(v, f, kind, values, y)| {
                let outs = match (&kind, &values) {
                    (VariableKind::Numeric, Values::Numeric(x)) => numeric_tests(x, &y),
                    (VariableKind::Binary(levels), Values::Levels(x)) => binary_tests(levels, x, &y),
                    (VariableKind::Multi(levels), Values::Levels(x)) => multi_tests(levels, x, &y),
                    _ => unreachable!("classification pairs kinds with value types"),
                };
                let (feature, scope) = split_column(f);
                outs.into_iter()
                    .map(|o| StatResult {
                        test: o.test,
                        variable: v.clone(),
                        feature: feature.clone(),
                        scope: scope.clone(),
                        n: o.n,
                        statistic: o.statistic,
                        p: o.p,
                        effect_type: o.effect_type,
                        effect: o.effect,
                        q: None,
                        flags: o.flags,
                        stratum: stratum.clone(),
                    })
                    .collect()
            })
            .collect();
        results.extend(outcomes.into_iter().flatten());
    }
    apply_fdr(&mut results);
    Ok(results)
}

/// BH within each (variable, test, stratum) family, over tests that ran.
fn apply_fdr(results: &mut [StatResult]) {
    let families: BTreeSet<(String, TestKind, Option<String>)> = results
        .iter()
        .map(|r| (r.variable.clone(), r.test, r.stratum.clone()))
        .collect();
    for (v, test, stratum) in families {
        let members: Vec<usize> = (0..results.len())
            .filter(|&i| {
                let r = &results[i];
                r.variable == v && r.test == test && r.stratum == stratum && r.p.is_some()
            })
            .collect();
        let p: Vec<f64> = members.iter().map(|&i| results[i].p.unwrap()).collect();
        for (&i, q) in members.iter().zip(bh_fdr(&p)) {
            results[i].q = Some(q);
        }
    }
}


pub const RESULT_COLUMNS: [&str; 12] = [
    "test",
    "variable",
    "feature",
    "scope",
    "n",
    "statistic",
    "p",
    "effect_type",
    "effect",
    "q",
    "flags",
    "stratum",
];

pub fn write_results<W: Write>(results: &[StatResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in results {
        w.write_record([
            r.test.as_str().to_string(),
            r.variable.clone(),
            r.feature.clone(),
            r.scope.clone(),
            r.n.to_string(),
            cell(r.statistic),
            cell(r.p),
            r.effect_type.as_str().to_string(),
            cell(r.effect),
            cell(r.q),
            r.flags.join("; "),
            r.stratum.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, f64, &str, &str, f64, f64)]) -> CohortTable {
        let headers = ["subject_id", "age", "sex", "site", "total_length_mm@global", "volume_mm3@global"]
            .map(String::from)
            .to_vec();
        let rows = rows
            .iter()
            .map(|(id, age, sex, site, l, v)| {
                vec![id.to_string(), age.to_string(), sex.to_string(), site.to_string(), l.to_string(), v.to_string()]
            })
            .collect();
        CohortTable::new(headers, rows).unwrap()
    }

    fn sample() -> CohortTable {
        let mut rows = Vec::new();
        for i in 0..24 {
            let id: &'static str = Box::leak(format!("s{i}").into_boxed_str());
            let sex = if i % 2 == 0 { "F" } else { "M" };
            let site = ["A", "B", "C"][i % 3];
            let wobble = ((i * 7) % 5) as f64;
            rows.push((id, 20.0 + i as f64, sex, site, 500.0 - 3.0 * i as f64, 10.0 + wobble));
        }
        table(&rows)
    }

    #[test]
    fn feature_equal_to_age_gives_rho_one() {
        let t = sample();
        let cfg = ProtocolConfig {
            variables: vec!["age".into()],
            features: vec!["total_length_mm@global".into()],
            ..Default::default()
        };
        let r = run_protocol(&t, &cfg).unwrap();
        let s = r.iter().find(|r| r.test == TestKind::Spearman).unwrap();
        assert_eq!(s.effect, Some(-1.0));
        assert!(s.q.unwrap() < 1e-6);
        assert_eq!(s.scope, "global");
        assert_eq!(s.feature, "total_length_mm");
        let a = r.iter().find(|r| r.test == TestKind::QuartileAnova).unwrap();
        assert_eq!(a.effect_type, EffectType::Eta2);
    }

    #[test]
    fn test_choice_by_variable_type() {
        let r = run_protocol(&sample(), &ProtocolConfig::default()).unwrap();
        let kinds = |v: &str| r.iter().filter(|r| r.variable == v).map(|r| (r.test, r.effect_type)).collect::<BTreeSet<_>>();
        assert_eq!(
            kinds("age").into_iter().map(|k| k.0).collect::<Vec<_>>(),
            vec![TestKind::Spearman, TestKind::QuartileAnova]
        );
        assert!(kinds("sex").contains(&(TestKind::WelchT, EffectType::D)));
        assert!(kinds("sex").contains(&(TestKind::Anova, EffectType::Eta2)));
        assert_eq!(kinds("site").into_iter().collect::<Vec<_>>(), vec![(TestKind::Anova, EffectType::Omega2)]);
    }

    #[test]
    fn forced_categorical() {
        let cfg = ProtocolConfig {
            variables: vec!["age".into()],
            categorical: vec!["age".into()],
            ..Default::default()
        };
        let r = run_protocol(&sample(), &cfg).unwrap();
        assert!(r.iter().all(|r| r.test == TestKind::Anova));
    }

    #[test]
    fn stratified_counts() {
        let t = sample();
        let vars = vec!["age".into(), "sex".into()];
        let plain = run_protocol(&t, &ProtocolConfig { variables: vars.clone(), ..Default::default() }).unwrap();
        let strat = run_protocol(
            &t,
            &ProtocolConfig {
                variables: vars,
                stratify_by_site: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(strat.len(), plain.len() * 3);
        for s in ["A", "B", "C"] {
            let here: Vec<_> = strat.iter().filter(|r| r.stratum.as_deref() == Some(s)).collect();
            assert_eq!(here.len(), plain.len());
            assert!(here.iter().all(|r| r.n <= 8));
        }
    }

    #[test]
    fn excluded_site_rows_are_dropped() {
        let cfg = ProtocolConfig {
            variables: vec!["age".into()],
            exclude_sites: vec!["C".into()],
            ..Default::default()
        };
        let r = run_protocol(&sample(), &cfg).unwrap();
        assert!(r.iter().all(|r| r.n == 16));
    }

    #[test]
    fn unknown_column_is_an_error() {
        let cfg = ProtocolConfig {
            variables: vec!["height".into()],
            ..Default::default()
        };
        assert!(matches!(run_protocol(&sample(), &cfg), Err(Error::UnknownColumn(c)) if c == "height"));
    }

    #[test]
    fn too_few_rows_is_skipped_not_fatal() {
        let t = table(&[("a", 1.0, "F", "A", 1.0, 1.0), ("b", 2.0, "M", "A", 2.0, 3.0)]);
        let r = run_protocol(&t, &ProtocolConfig { variables: vec!["age".into()], ..Default::default() }).unwrap();
        assert!(r.iter().all(|r| r.is_skipped() && r.q.is_none()));
        assert!(r[0].flags[0].starts_with("skipped: "));
    }

    #[test]
    fn results_csv_layout() {
        let r = run_protocol(&sample(), &ProtocolConfig { variables: vec!["age".into()], ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_results(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULT_COLUMNS.join(","));
        assert_eq!(lines.count(), r.len());
    }
}
