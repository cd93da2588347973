//! Synthetic UNSW-NB15 and NSL-KDD exports for integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn u(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Log-uniform on `[lo, hi)`.
fn logu(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Attacks push a random subset of indicators to extremes of varying size.
fn unsw_record(rng: &mut ChaCha8Rng, key: &[String; 5], attack: bool) -> String {
    let mut f = vec!["0".to_string(); 49];
    f[..5].clone_from_slice(key);
    f[5] = if attack { "INT".into() } else { "FIN".into() };
    f[13] = if attack { "-".into() } else { "http".into() };
    if attack {
        let hit = |rng: &mut ChaCha8Rng| rng.random_bool(0.7);
        f[6] = format!("{:.4}", logu(rng, 0.001, 0.5));
        f[9] = if hit(rng) { "254".into() } else { "62".into() };
        f[12] = format!(
            "{}",
            if hit(rng) {
                logu(rng, 5.0, 200.0) as u32
            } else {
                rng.random_range(0..3)
            }
        );
        f[16] = format!(
            "{}",
            if hit(rng) {
                logu(rng, 100.0, 5000.0) as u32
            } else {
                rng.random_range(5..40)
            }
        );
        f[17] = format!(
            "{}",
            if hit(rng) {
                logu(rng, 80.0, 3000.0) as u32
            } else {
                rng.random_range(10..60)
            }
        );
        f[30] = format!(
            "{:.5}",
            if hit(rng) {
                logu(rng, 0.0005, 1.0)
            } else {
                u(rng, 20.0, 200.0)
            }
        );
        f[31] = format!(
            "{:.5}",
            if hit(rng) {
                logu(rng, 0.0005, 1.0)
            } else {
                u(rng, 20.0, 200.0)
            }
        );
        f[34] = format!(
            "{:.6}",
            if hit(rng) {
                logu(rng, 0.00001, 0.005)
            } else {
                u(rng, 0.05, 0.2)
            }
        );
        f[47] = "Exploits".into();
        f[48] = "1".into();
    } else {
        // One heavy-tailed activity level drives every benign indicator.
        let z = rng.random::<f64>().powi(4);
        let mut at = |lo: f64, hi: f64| lo + (hi - lo) * (0.85 * z + 0.15 * rng.random::<f64>());
        f[6] = format!("{:.4}", at(0.5, 5.0));
        f[12] = format!("{}", at(0.0, 3.0) as u32);
        f[16] = format!("{}", at(5.0, 40.0) as u32);
        f[17] = format!("{}", at(10.0, 60.0) as u32);
        f[30] = format!("{:.3}", at(20.0, 200.0));
        f[31] = format!("{:.3}", at(20.0, 200.0));
        f[34] = format!("{:.4}", at(0.05, 0.2));
        f[9] = if z < 0.5 { "31".into() } else { "62".into() };
        f[48] = "0".into();
    }
    f[7] = format!("{}", rng.random_range(200..20000));
    f[8] = format!("{}", rng.random_range(200..20000));
    f.join(",")
}

/// UNSW-NB15-format CSV text with `n_flows` five-tuples of 1 to 4 records
/// each; roughly `attack_rate` of the flows are attacks.
pub fn unsw_csv(n_flows: usize, attack_rate: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..n_flows {
        let attack = rng.random_bool(attack_rate);
        let key = [
            format!("10.0.{}.{}", i / 250 % 250, i % 250 + 1),
            format!("{}", 1024 + i % 60000),
            format!("192.168.{}.{}", rng.random_range(0..4), rng.random_range(1..250)),
            if attack {
                format!("{}", rng.random_range(1..1024))
            } else {
                "80".into()
            },
            "tcp".to_string(),
        ];
        for _ in 0..rng.random_range(1..=4) {
            out.push_str(&unsw_record(&mut rng, &key, attack));
            out.push('\n');
        }
    }
    out
}

fn nsl_row(rng: &mut ChaCha8Rng, attack: bool) -> String {
    let mut f = vec!["0".to_string(); 43];
    f[1] = "tcp".into();
    f[2] = if attack { "private".into() } else { "http".into() };
    f[3] = if attack { "S0".into() } else { "SF".into() };
    if attack {
        let hit = |rng: &mut ChaCha8Rng| rng.random_bool(0.7);
        f[4] = format!("{}", rng.random_range(0..5));
        f[22] = format!(
            "{}",
            if hit(rng) {
                logu(rng, 30.0, 511.0) as u32
            } else {
                rng.random_range(1..12)
            }
        );
        f[24] = format!("{:.2}", if hit(rng) { u(rng, 0.5, 1.0) } else { 0.0 });
        f[28] = format!("{:.2}", if hit(rng) { u(rng, 0.0, 0.5) } else { u(rng, 0.9, 1.0) });
        f[29] = format!("{:.2}", if hit(rng) { u(rng, 0.05, 0.8) } else { u(rng, 0.0, 0.05) });
        f[32] = format!(
            "{}",
            if hit(rng) {
                rng.random_range(1..60)
            } else {
                rng.random_range(150..256)
            }
        );
        f[33] = format!("{:.2}", if hit(rng) { u(rng, 0.0, 0.5) } else { u(rng, 0.85, 1.0) });
        f[37] = format!("{:.2}", if hit(rng) { u(rng, 0.5, 1.0) } else { 0.0 });
        f[38] = format!("{:.2}", if hit(rng) { u(rng, 0.5, 1.0) } else { 0.0 });
        f[41] = "neptune".into();
    } else {
        let z = rng.random::<f64>().powi(4);
        let mut at = |lo: f64, hi: f64| lo + (hi - lo) * (0.85 * z + 0.15 * rng.random::<f64>());
        f[4] = format!("{}", at(150.0, 400.0) as u32);
        f[5] = format!("{}", at(1000.0, 6000.0) as u32);
        f[11] = "1".into();
        f[22] = format!("{}", at(1.0, 12.0) as u32);
        f[28] = format!("{:.2}", at(0.9, 1.0));
        f[29] = format!("{:.2}", at(0.0, 0.05));
        f[32] = format!("{}", at(150.0, 256.0) as u32);
        f[33] = format!("{:.2}", at(0.85, 1.0));
        f[41] = "normal".into();
    }
    f[42] = "21".into();
    f.join(",")
}

/// NSL-KDD-format CSV text with `n` rows.
pub fn nsl_csv(n: usize, attack_rate: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..n {
        let attack = rng.random_bool(attack_rate);
        out.push_str(&nsl_row(&mut rng, attack));
        out.push('\n');
    }
    out
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}
