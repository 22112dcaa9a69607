//! Rank correlation, two-sample t-tests, one-way ANOVA and quartile grouping.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

fn undefined(msg: impl Into<String>) -> Error {
    Error::Undefined(msg.into())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Two-sided tail probability of Student's t.
fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Average ranks (1-based); ties share the mean of the ranks they span.
pub fn rank(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

/// Spearman's rho with the t-approximation p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Parameter(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(undefined(format!("need at least 3 pairs, got {n}")));
    }
    let rho = pearson(&rank(x), &rank(y)).ok_or_else(|| undefined("constant input"))?;
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        t_two_sided(rho * (df / (1.0 - rho * rho)).sqrt(), df)
    };
    Ok(Correlation { rho, p, n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Mean difference (a − b) over the pooled standard deviation.
    pub cohens_d: f64,
    pub flags: Vec<String>,
}

fn check_groups(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(undefined(format!(
            "each group needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn pooled_variance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0)
}

/// Welch's unequal-variance t-test with Cohen's d on the pooled SD.
pub fn ttest_ind(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_groups(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a), variance(b));
    let diff = mean(a) - mean(b);
    let se2 = va / na + vb / nb;
    let mut flags = Vec::new();
    if se2 == 0.0 {
        if diff == 0.0 {
            return Ok(TTest {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
                cohens_d: 0.0,
                flags: vec!["zero variance in both groups".into()],
            });
        }
        flags.push("zero pooled variance: effect size unbounded".into());
        let inf = f64::INFINITY.copysign(diff);
        return Ok(TTest {
            t: inf,
            df: na + nb - 2.0,
            p: 0.0,
            cohens_d: inf,
            flags,
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    Ok(TTest {
        t,
        df,
        p: t_two_sided(t, df),
        cohens_d: diff / pooled_variance(a, b).sqrt(),
        flags,
    })
}

/// Equal-variance (Student) t-test.
pub fn ttest_pooled(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_groups(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sp2 = pooled_variance(a, b);
    let diff = mean(a) - mean(b);
    let df = na + nb - 2.0;
    if sp2 == 0.0 {
        return ttest_ind(a, b);
    }
    let t = diff / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TTest {
        t,
        df,
        p: t_two_sided(t, df),
        cohens_d: diff / sp2.sqrt(),
        flags: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub eta2: f64,
    pub omega2: f64,
    pub flags: Vec<String>,
}

/// One-way ANOVA with η² = SS_b/SS_t and ω² = (SS_b − df_b·MS_w)/(SS_t + MS_w).
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<Anova> {
    if groups.len() < 2 {
        return Err(undefined(format!("need at least 2 groups, got {}", groups.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(undefined(format!("every group needs at least 2 values, one has {}", g.len())));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let ss_total = ss_between + ss_within;
    let df_between = (groups.len() - 1) as f64;
    let df_within = (n - groups.len()) as f64;
    let mut flags = Vec::new();
    if ss_total == 0.0 {
        flags.push("all values identical".into());
        return Ok(Anova {
            f: 0.0,
            df_between,
            df_within,
            p: 1.0,
            ss_between,
            ss_within,
            eta2: 0.0,
            omega2: 0.0,
            flags,
        });
    }
    let ms_within = ss_within / df_within;
    let (f, p) = if ss_within == 0.0 {
        flags.push("zero within-group variance".into());
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between) / ms_within;
        let dist = FisherSnedecor::new(df_between, df_within).expect("positive degrees of freedom");
        (f, dist.sf(f).clamp(0.0, 1.0))
    };
    let mut omega2 = (ss_between - df_between * ms_within) / (ss_total + ms_within);
    if omega2 < 0.0 {
        flags.push("omega2 clamped at 0".into());
        omega2 = 0.0;
    }
    Ok(Anova {
        f,
        df_between,
        df_within,
        p,
        ss_between,
        ss_within,
        eta2: ss_between / ss_total,
        omega2,
        flags,
    })
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartile group (0..4) of every value; values equal to a cut point go to the lower group.
pub fn quartile_groups(values: &[f64]) -> Result<Vec<usize>> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(undefined(format!(
            "quartiles need at least 4 distinct values, got {}",
            distinct.len()
        )));
    }
    let cuts = [0.25, 0.5, 0.75].map(|p| quantile(&sorted, p));
    Ok(values.iter().map(|v| cuts.iter().filter(|&&c| *v > c).count()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(rank(&[10.0, 20.0, 20.0, 40.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = spearman(&x, &[1.0, 8.0, 27.0, 64.0, 125.0]).unwrap();
        assert_eq!(up.rho, 1.0);
        assert_eq!(up.p, 0.0);
        assert_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap().rho, -1.0);
        let tied = spearman(&[1.0, 2.0, 2.0, 4.0], &[10.0, 20.0, 20.0, 40.0]).unwrap();
        assert!((tied.rho - 1.0).abs() < 1e-15);
        assert!(spearman(&x, &[3.0; 5]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_p_reference() {
        // scipy.stats.spearmanr([1,2,3,4,5,6,7,8],[2,1,4,3,6,5,8,7])
        let r = spearman(
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            &[2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0],
        )
        .unwrap();
        assert!((r.rho - 0.9047619047619048).abs() < 1e-12);
        assert!((r.p - 0.0020082755054294677).abs() < 1e-9, "{}", r.p);
    }

    #[test]
    fn ttest_examples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [3.0, 4.0, 5.0, 6.0, 7.0];
        let r = ttest_ind(&a, &b).unwrap();
        assert!((r.cohens_d + 2.0 / 2.5f64.sqrt()).abs() < 1e-12);
        assert!((r.t + 2.0).abs() < 1e-12);
        // scipy.stats.ttest_ind(a, b, equal_var=False).pvalue
        assert!((r.p - 0.08051623795726257).abs() < 1e-9, "{}", r.p);

        let same = ttest_ind(&a, &a).unwrap();
        assert_eq!((same.t, same.p, same.cohens_d), (0.0, 1.0, 0.0));

        let flat = ttest_ind(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(flat.cohens_d.is_infinite() && !flat.flags.is_empty());
        assert_eq!(flat.p, 0.0);

        assert!(ttest_ind(&[1.0], &a).is_err());
    }

    #[test]
    fn anova_examples() {
        let r = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]]).unwrap();
        assert_eq!(r.eta2, 0.5);
        assert_eq!((r.ss_between, r.ss_within), (6.0, 6.0));
        assert_eq!(r.f, 3.0);
        // scipy.stats.f_oneway(...).pvalue
        assert!((r.p - 0.125).abs() < 1e-9, "{}", r.p);
        assert!(r.omega2 <= r.eta2);

        let equal = anova_oneway(&[vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(equal.eta2, 0.0);
        assert!(equal.flags.iter().any(|f| f.contains("clamped")));

        let pure = anova_oneway(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(pure.eta2, 1.0);

        let flat = anova_oneway(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!((flat.f, flat.p, flat.eta2), (0.0, 1.0, 0.0));
    }

    #[test]
    fn f_is_t_squared() {
        let a = vec![1.2, 3.4, 2.2, 5.1, 4.4];
        let b = vec![2.9, 6.1, 5.5, 7.2, 4.8, 6.6];
        let t = ttest_pooled(&a, &b).unwrap();
        let f = anova_oneway(&[a, b]).unwrap();
        assert!((f.f - t.t * t.t).abs() <= 1e-9 * f.f);
        assert!((f.p - t.p).abs() < 1e-9);
    }

    #[test]
    fn quartiles() {
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(quartile_groups(&v).unwrap(), vec![0, 0, 1, 1, 2, 2, 3, 3]);
        assert_eq!(quartile_groups(&[4.0, 1.0, 3.0, 2.0]).unwrap(), vec![3, 0, 2, 1]);
        assert!(quartile_groups(&[5.0; 6]).is_err());
        let sorted: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(quantile(&sorted, 0.25), 2.75);
        assert_eq!(quantile(&sorted, 0.75), 6.25);
    }
}
