//! Seeded synthetic returns calibrated to published per-asset moments.
//!
//! Each asset's series is drawn from a market factor, an optional sector
//! factor and idiosyncratic noise, then affinely rescaled so its full-sample
//! mean and sample standard deviation match the target exactly. The
//! correlation structure is synthetic.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::data::ReturnsDataset;
use crate::error::{validation, Result};

/// Daily mean return and standard deviation for the 20 ASX large caps, 2017.
pub const ASX20_DAILY_2017: [(&str, f64, f64); 20] = [
    ("AMP", 0.000401, 0.009988),
    ("ANZ", 0.000061, 0.010024),
    ("BHP", 0.000916, 0.013465),
    ("BXB", -0.000619, 0.015910),
    ("CBA", 0.000212, 0.009201),
    ("CSL", 0.001477, 0.013156),
    ("IAG", 0.001047, 0.011216),
    ("MQG", 0.000794, 0.010052),
    ("NAB", 0.000204, 0.009193),
    ("ORG", 0.001500, 0.014958),
    ("QBE", -0.000316, 0.014433),
    ("RIO", 0.001230, 0.014854),
    ("SCG", -0.000176, 0.010974),
    ("SUN", 0.000396, 0.010007),
    ("TLS", -0.000881, 0.013377),
    ("WBC", 0.000184, 0.009907),
    ("WES", 0.000492, 0.008399),
    ("WFD", 0.000291, 0.013247),
    ("WOW", 0.000674, 0.008477),
    ("WPL", 0.000491, 0.010873),
];

/// The eight-asset subset used throughout the experiments.
pub const EXPERIMENT_ASSETS: [&str; 8] = ["AMP", "ANZ", "BHP", "BXB", "CBA", "CSL", "IAG", "MQG"];

const MARKET_LOADING: f64 = 0.5;
const SECTOR_LOADING: f64 = 0.45;

fn sector(symbol: &str) -> Option<usize> {
    match symbol {
        "ANZ" | "CBA" | "NAB" | "WBC" | "MQG" => Some(0),
        "BHP" | "RIO" | "WPL" | "ORG" => Some(1),
        "AMP" | "IAG" | "QBE" | "SUN" => Some(2),
        _ => None,
    }
}

/// ASX trading days of 2017: weekdays minus the exchange holidays.
pub fn asx_trading_days_2017() -> Vec<NaiveDate> {
    let holidays = [
        (1, 2),
        (1, 26),
        (4, 14),
        (4, 17),
        (4, 25),
        (6, 12),
        (12, 25),
        (12, 26),
    ];
    let mut day = NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date");
    let mut days = Vec::new();
    while day.year() == 2017 {
        let weekend = matches!(day.weekday(), Weekday::Sat | Weekday::Sun);
        if !weekend && !holidays.contains(&(day.month(), day.day())) {
            days.push(day);
        }
        day = day.succ_opt().expect("within calendar range");
    }
    days
}

/// Generates returns for `targets` (symbol, mean, sd) over `dates`.
pub fn generate(
    targets: &[(&str, f64, f64)],
    dates: Vec<NaiveDate>,
    seed: u64,
) -> Result<ReturnsDataset> {
    let days = dates.len();
    if days < 2 {
        return Err(validation("need at least two trading days"));
    }
    if targets.is_empty() {
        return Err(validation("need at least one asset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let market: Vec<f64> = (0..days).map(|_| normal()).collect();
    let sectors: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..days).map(|_| normal()).collect())
        .collect();

    let mut columns = Vec::with_capacity(targets.len());
    for &(symbol, mean, sd) in targets {
        let own = sector(symbol);
        let sector_w = if own.is_some() { SECTOR_LOADING } else { 0.0 };
        let idio_w = (1.0 - MARKET_LOADING.powi(2) - sector_w.powi(2)).sqrt();
        let raw: Vec<f64> = (0..days)
            .map(|t| {
                let s = own.map_or(0.0, |k| sectors[k][t]);
                MARKET_LOADING * market[t] + sector_w * s + idio_w * normal()
            })
            .collect();
        let m = raw.iter().sum::<f64>() / days as f64;
        let v = raw.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (days - 1) as f64;
        let scale = sd / v.sqrt();
        columns.push(
            raw.iter()
                .map(|x| mean + (x - m) * scale)
                .collect::<Vec<f64>>(),
        );
    }
    Ok(ReturnsDataset {
        symbols: targets.iter().map(|t| t.0.to_string()).collect(),
        dates,
        returns: (0..days)
            .map(|t| columns.iter().map(|c| c[t]).collect())
            .collect(),
    })
}

/// Full 20-asset synthetic 2017 dataset.
pub fn asx20_2017(seed: u64) -> ReturnsDataset {
    generate(&ASX20_DAILY_2017, asx_trading_days_2017(), seed).expect("static targets are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::data::{derive_statistics, MIN_MONTH_DAYS};

    #[test]
    fn calendar_has_252_days() {
        let days = asx_trading_days_2017();
        assert_eq!(days.len(), 252);
        assert_eq!(days[0], NaiveDate::from_ymd_opt(2017, 1, 3).unwrap());
    }

    #[test]
    fn moments_are_exact() {
        let ds = asx20_2017(1);
        assert_eq!((ds.n_days(), ds.n_assets()), (252, 20));
        let (mu, sigma) = derive_statistics(&ds, 0..252).unwrap();
        for (k, &(_, mean, sd)) in ASX20_DAILY_2017.iter().enumerate() {
            assert!((mu[k] - mean).abs() < 1e-12);
            assert!((sigma[k][k].sqrt() - sd).abs() < 1e-12);
        }
        assert_eq!(ds.monthly_windows(MIN_MONTH_DAYS).len(), 12);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(asx20_2017(4), asx20_2017(4));
        assert_ne!(asx20_2017(4), asx20_2017(5));
    }
}
