//! Seeded synthetic cohorts with one planted association, for checking that
//! the protocol recovers it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::table::CohortTable;

/// The planted feature column; it falls with age.
pub const PLANTED_FEATURE: &str = "total_length_mm@global";
pub const PLANTED_VARIABLE: &str = "age";

/// Noise-only feature columns, each drawn independently of the demographics.
const NOISE: [(&str, f64, f64); 5] = [
    ("bifurcation_count@global", 80.0, 12.0),
    ("fractal_dimension@global", 1.6, 0.05),
    ("mean_curvature_per_mm@global", 0.12, 0.02),
    ("arc_over_chord@global", 1.3, 0.08),
    ("volume_mm3@global", 9000.0, 1500.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCohort {
    pub subjects: usize,
    pub seed: u64,
    /// Length falls by this many mm per year of age.
    pub slope_mm_per_year: f64,
    pub noise_sd_mm: f64,
    /// Site labels assigned round-robin; empty means no site column.
    pub sites: Vec<String>,
}

impl PlantedCohort {
    pub fn new(seed: u64) -> Self {
        PlantedCohort {
            subjects: 120,
            seed,
            slope_mm_per_year: 2.5,
            noise_sd_mm: 25.0,
            sites: Vec::new(),
        }
    }

    pub fn with_sites(mut self, sites: &[&str]) -> Self {
        self.sites = sites.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Age uniform on [20, 80), sex a fair coin, length 600 − slope·age + noise.
    pub fn generate(&self) -> CohortTable {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let gauss = |rng: &mut ChaCha8Rng| std_normal.inverse_cdf(rng.gen_range(f64::EPSILON..1.0));

        let mut headers = vec!["subject_id".to_string(), "age".into(), "sex".into()];
        if !self.sites.is_empty() {
            headers.push("site".into());
        }
        headers.push(PLANTED_FEATURE.into());
        headers.extend(NOISE.iter().map(|(n, _, _)| n.to_string()));

        let rows = (0..self.subjects)
            .map(|i| {
                let age: f64 = rng.gen_range(20.0..80.0);
                let sex = if rng.gen_bool(0.5) { "F" } else { "M" };
                let length = 600.0 - self.slope_mm_per_year * age + self.noise_sd_mm * gauss(&mut rng);
                let mut row = vec![format!("syn{i:04}"), format!("{age}"), sex.to_string()];
                if !self.sites.is_empty() {
                    row.push(self.sites[i % self.sites.len()].clone());
                }
                row.push(format!("{length}"));
                for (_, mean, sd) in NOISE {
                    row.push(format!("{}", mean + sd * gauss(&mut rng)));
                }
                row
            })
            .collect();
        CohortTable::new(headers, rows).expect("rows match headers")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(PlantedCohort::new(3).generate(), PlantedCohort::new(3).generate());
        assert_ne!(PlantedCohort::new(3).generate(), PlantedCohort::new(4).generate());
    }

    #[test]
    fn shape() {
        let t = PlantedCohort::new(0).with_sites(&["A", "B", "C"]).generate();
        assert_eq!(t.len(), 120);
        assert_eq!(t.feature_columns().len(), 6);
        assert_eq!(t.demographic_columns(), vec!["age", "sex", "site"]);
    }
}
