//! Synthetic raw relations with a known price effect on SUP products.
//!
//! Offer prices follow
//! `base_ij · (1 + τ/100 · 1{SUP, bin > 0}) · exp(u_it + v_jt + ε)`
//! where `u_it` and `v_jt` are product-month and retailer-month shocks
//! (correlated within product and within retailer clusters) and `ε` is
//! offer-level noise. All three are mean-one log-normal factors with
//! standard deviations given in index points (percent).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Price;
use crate::ingest::{write_table, ClickRecord, OfferRecord, ProductRecord, RetailerRecord};
use crate::pipeline::{months_between, YearMonth, COHORT_CUTOFF_TS};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_products: usize,
    pub n_retailers: usize,
    /// Share of products named as SUP items.
    pub sup_share: f64,
    /// Share of non-SUP products named as graphics cards (strict controls).
    pub strict_share: f64,
    pub first_month: YearMonth,
    pub last_month: YearMonth,
    pub base_month: YearMonth,
    /// Effect on SUP prices in post-event bins, in index points.
    pub true_effect: f64,
    /// Offer-level noise SD, in index points.
    pub noise_sd: f64,
    /// Product-month shock SD, in index points.
    pub product_effect_sd: f64,
    /// Retailer-month shock SD, in index points.
    pub retailer_effect_sd: f64,
    /// Probability that a non-base product-retailer month has no offers.
    pub missing_rate: f64,
    /// Probability that a product is listed at a given retailer.
    pub listing_rate: f64,
    pub max_offers_per_cell: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_products: 30,
            n_retailers: 8,
            sup_share: 0.5,
            strict_share: 0.5,
            first_month: YearMonth::new(2020, 2).expect("valid"),
            last_month: YearMonth::new(2025, 2).expect("valid"),
            base_month: YearMonth::new(2022, 2).expect("valid"),
            true_effect: 10.0,
            noise_sd: 5.0,
            product_effect_sd: 2.0,
            retailer_effect_sd: 2.0,
            missing_rate: 0.1,
            listing_rate: 0.9,
            max_offers_per_cell: 3,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.n_products < 2 || self.n_retailers < 2 {
            return fail("n_products and n_retailers must be at least 2");
        }
        for (name, v) in [
            ("sup_share", self.sup_share),
            ("strict_share", self.strict_share),
            ("missing_rate", self.missing_rate),
            ("listing_rate", self.listing_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(&format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, v) in [
            ("noise_sd", self.noise_sd),
            ("product_effect_sd", self.product_effect_sd),
            ("retailer_effect_sd", self.retailer_effect_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(&format!("{name} must be finite and non-negative"));
            }
        }
        if self.first_month > self.base_month || self.base_month > self.last_month {
            return fail("base_month must lie within [first_month, last_month]");
        }
        if self.max_offers_per_cell == 0 {
            return fail("max_offers_per_cell must be positive");
        }
        if self.true_effect <= -100.0 {
            return fail("true_effect must exceed -100");
        }
        Ok(())
    }
}

/// Keywords used to name SUP products; each matches a built-in pattern,
/// in assorted casings.
const SUP_NAMES: [&str; 15] = [
    "To-Go Becher 300ml",
    "Einwegbecher 50 Stück",
    "Kunststoffbecher klar",
    "GETRÄNKEBECHER Party",
    "Takeaway Box groß",
    "Kunststoffschale rund",
    "Verpackungsfolie 30m",
    "Plastikfolie transparent",
    "Plastiktüte 20er Pack",
    "Einwegtragetasche weiß",
    "Feuchttuch Box",
    "Hygienetuch sensitiv",
    "Helium-Luftballon Set",
    "PARTYBALLON bunt",
    "Heliumballon Herz",
];

const CONTROL_NAMES: [&str; 6] = [
    "USB-C Kabel",
    "Schreibtischlampe LED",
    "Gartenschlauch 20m",
    "Bluetooth Lautsprecher",
    "Kaffeemühle",
    "Werkzeugkoffer",
];

/// The four generated relations plus the designed treatment labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub products: Vec<ProductRecord>,
    pub offers: Vec<OfferRecord>,
    pub clicks: Vec<ClickRecord>,
    pub retailers: Vec<RetailerRecord>,
    /// prod_id → whether it was designed as SUP.
    pub designed_sup: BTreeMap<String, bool>,
}

fn month_start(m: YearMonth) -> i64 {
    NaiveDate::from_ymd_opt(m.year(), m.month(), 1)
        .expect("valid month")
        .and_hms_opt(0, 0, 0)
        .expect("valid time")
        .and_utc()
        .timestamp()
}

/// Mean-one log-normal factor `exp(z − σ²/2)`, `z ~ N(0, σ²)`, σ in percent.
fn shock(rng: &mut ChaCha8Rng, sd_points: f64) -> f64 {
    if sd_points == 0.0 {
        return 1.0;
    }
    let sd = sd_points / 100.0;
    let z = Normal::new(0.0, sd).expect("finite sd").sample(rng);
    (z - 0.5 * sd * sd).exp()
}

/// Generate the four raw relations for `cfg`.
pub fn generate(cfg: &SimConfig) -> Result<SimData, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_months = months_between(cfg.last_month, cfg.first_month) + 1;
    let months: Vec<YearMonth> = (0..n_months).map(|k| cfg.first_month.offset(k)).collect();

    let n_sup = (cfg.sup_share * cfg.n_products as f64).round() as usize;
    let n_strict = (cfg.strict_share * (cfg.n_products - n_sup) as f64).round() as usize;
    let mut products = Vec::with_capacity(cfg.n_products);
    let mut designed_sup = BTreeMap::new();
    for i in 0..cfg.n_products {
        let prod_id = format!("p{:04}", i + 1);
        let is_sup = i < n_sup;
        let name = if is_sup {
            format!("{} {}", SUP_NAMES[i % SUP_NAMES.len()], i + 1)
        } else if i - n_sup < n_strict {
            format!("RTX {} Graphics Card", 3000 + 10 * (i - n_sup))
        } else {
            format!(
                "{} {}",
                CONTROL_NAMES[(i - n_sup) % CONTROL_NAMES.len()],
                i + 1
            )
        };
        designed_sup.insert(prod_id.clone(), is_sup);
        products.push(ProductRecord {
            prod_id,
            name,
            born_ts: COHORT_CUTOFF_TS + 86_400 * (i as i64 + 1),
        });
    }

    let mut retailers = Vec::new();
    for j in 0..cfg.n_retailers {
        let ret_id = format!("r{:03}", j + 1);
        let history = rng.random_range(1..=3);
        for h in 0..history {
            let ts = month_start(cfg.first_month) + 86_400 * 30 * (h as i64 * 7 + j as i64 % 5);
            let ret_name = if h + 1 == history {
                format!("Retailer {}", j + 1)
            } else {
                format!("Retailer {} (old {h})", j + 1)
            };
            retailers.push(RetailerRecord {
                ret_id: ret_id.clone(),
                ret_name,
                ts,
            });
        }
    }

    // Cluster-month shocks, drawn in a fixed order.
    let product_shocks: Vec<Vec<f64>> = (0..cfg.n_products)
        .map(|_| {
            months
                .iter()
                .map(|_| shock(&mut rng, cfg.product_effect_sd))
                .collect()
        })
        .collect();
    let retailer_shocks: Vec<Vec<f64>> = (0..cfg.n_retailers)
        .map(|_| {
            months
                .iter()
                .map(|_| shock(&mut rng, cfg.retailer_effect_sd))
                .collect()
        })
        .collect();

    let mut offers = Vec::new();
    let mut clicks = Vec::new();
    let mut offer_seq = 0u64;
    for (i, product) in products.iter().enumerate() {
        let is_sup = designed_sup[&product.prod_id];
        for (j, shocks) in retailer_shocks.iter().enumerate() {
            if rng.random::<f64>() >= cfg.listing_rate {
                continue;
            }
            let ret_id = format!("r{:03}", j + 1);
            // Base price on a 10-cent grid so noise-free prices stay exact.
            let base_micros = 100_000 * rng.random_range(10..=500) as i64;
            for (t, &month) in months.iter().enumerate() {
                let e = months_between(month, cfg.base_month);
                if month != cfg.base_month && rng.random::<f64>() < cfg.missing_rate {
                    continue;
                }
                let treated = is_sup && e.div_euclid(3) > 0;
                let effect = if treated {
                    1.0 + cfg.true_effect / 100.0
                } else {
                    1.0
                };
                let cluster = product_shocks[i][t] * shocks[t];
                let start = month_start(month);
                let span = month_start(month.offset(1)) - start;
                let n_offers = rng.random_range(1..=cfg.max_offers_per_cell);
                for _ in 0..n_offers {
                    let factor = effect * cluster * shock(&mut rng, cfg.noise_sd);
                    let price = Price::from_micros((base_micros as f64 * factor).round() as i64);
                    offer_seq += 1;
                    offers.push(OfferRecord {
                        offer_id: format!("o{offer_seq}"),
                        prod_id: product.prod_id.clone(),
                        ret_id: ret_id.clone(),
                        ts: start + rng.random_range(0..span),
                        price,
                    });
                }
                if rng.random::<f64>() < 0.7 {
                    clicks.push(ClickRecord {
                        prod_id: product.prod_id.clone(),
                        ret_id: ret_id.clone(),
                        ts: start + rng.random_range(0..span),
                        clicks: rng.random_range(0..50),
                    });
                }
            }
        }
    }
    Ok(SimData {
        products,
        offers,
        clicks,
        retailers,
        designed_sup,
    })
}

/// Write `products.csv`, `offers.csv`, `clicks.csv` and `retailers.csv`.
pub fn write_raw(dir: &Path, data: &SimData) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;
    write_table(
        BufWriter::new(File::create(dir.join("products.csv"))?),
        &data.products,
    )?;
    write_table(
        BufWriter::new(File::create(dir.join("offers.csv"))?),
        &data.offers,
    )?;
    write_table(
        BufWriter::new(File::create(dir.join("clicks.csv"))?),
        &data.clicks,
    )?;
    write_table(
        BufWriter::new(File::create(dir.join("retailers.csv"))?),
        &data.retailers,
    )?;
    Ok(())
}
