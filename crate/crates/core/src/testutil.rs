//! Synthetic NSL-KDD-format tables for unit tests.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{read_dataset, DatasetSchema, FlowTable};

/// One NSL-KDD row; attacks look like SYN floods against a benign mix of
/// logged-in HTTP sessions.
fn nsl_row(rng: &mut ChaCha8Rng, attack: bool) -> String {
    let mut f = vec!["0".to_string(); 43];
    f[1] = "tcp".into();
    f[2] = if attack { "private".into() } else { "http".into() };
    f[3] = if attack { "S0".into() } else { "SF".into() };
    let u = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| rng.random_range(lo..hi);
    if attack {
        f[4] = format!("{}", rng.random_range(0..5));
        f[22] = format!("{}", rng.random_range(120..300)); // count
        f[24] = format!("{:.2}", u(rng, 0.9, 1.0)); // serror_rate
        f[28] = format!("{:.2}", u(rng, 0.0, 0.1)); // same_srv_rate
        f[29] = format!("{:.2}", u(rng, 0.05, 0.1)); // diff_srv_rate
        f[32] = format!("{}", rng.random_range(1..20)); // dst_host_srv_count
        f[33] = format!("{:.2}", u(rng, 0.0, 0.1)); // dst_host_same_srv_rate
        f[37] = format!("{:.2}", u(rng, 0.9, 1.0)); // dst_host_serror_rate
        f[38] = format!("{:.2}", u(rng, 0.9, 1.0)); // dst_host_srv_serror_rate
        f[41] = "neptune".into();
    } else {
        f[4] = format!("{}", rng.random_range(150..400));
        f[5] = format!("{}", rng.random_range(1000..6000));
        f[11] = "1".into(); // logged_in
        f[22] = format!("{}", rng.random_range(1..12));
        f[28] = format!("{:.2}", u(rng, 0.9, 1.0));
        f[29] = format!("{:.2}", u(rng, 0.0, 0.05));
        f[32] = format!("{}", rng.random_range(150..256));
        f[33] = format!("{:.2}", u(rng, 0.85, 1.0));
        f[41] = "normal".into();
    }
    f[42] = "21".into();
    f.join(",")
}

/// `n` rows of which roughly `attack_rate` are attacks.
pub(crate) fn nsl_table(n: usize, attack_rate: f64, seed: u64) -> FlowTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..n {
        let attack = rng.random_bool(attack_rate);
        text.push_str(&nsl_row(&mut rng, attack));
        text.push('\n');
    }
    let schema = Arc::new(DatasetSchema::builtin("nsl-kdd").unwrap());
    read_dataset(text.as_bytes(), &schema).unwrap()
}
