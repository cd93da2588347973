use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FlowTable;
use crate::error::{Error, Result};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest attack count `a <= available` with `a / (benign + a) <= target`.
fn allowed_attacks(benign: usize, available: usize, target: f64) -> usize {
    let rate = |a: usize| {
        if benign + a == 0 {
            0.0
        } else {
            a as f64 / (benign + a) as f64
        }
    };
    let guess = (target * benign as f64 / (1.0 - target)).floor();
    let mut a = (guess.max(0.0) as usize).min(available);
    while a < available && rate(a + 1) <= target {
        a += 1;
    }
    while a > 0 && rate(a) > target {
        a -= 1;
    }
    a
}

/// Indices of the items kept when attacks (`is_attack[i]`) are dropped
/// uniformly at random until the attack rate is at most `target_rate` and
/// keeping one more would exceed it. Benign items are always kept; the
/// result is ascending.
pub fn downsample_attack_indices(is_attack: &[bool], target_rate: f64, seed: u64) -> Result<Vec<usize>> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target attack rate must be in (0, 1), got {target_rate}"
        )));
    }
    let attacks: Vec<usize> = (0..is_attack.len()).filter(|&i| is_attack[i]).collect();
    let benign = is_attack.len() - attacks.len();
    let keep = allowed_attacks(benign, attacks.len(), target_rate);
    let mut kept: Vec<bool> = is_attack.iter().map(|a| !a).collect();
    if keep >= attacks.len() {
        return Ok((0..is_attack.len()).collect());
    }
    for i in index::sample(&mut rng(seed), attacks.len(), keep) {
        kept[attacks[i]] = true;
    }
    Ok((0..is_attack.len()).filter(|&i| kept[i]).collect())
}

/// Record-level [`downsample_attack_indices`]; surviving records keep their
/// order.
pub fn downsample_attacks(table: &FlowTable, target_rate: f64, seed: u64) -> Result<FlowTable> {
    let flags: Vec<bool> = table.records().iter().map(|r| r.label.is_attack()).collect();
    let indices = downsample_attack_indices(&flags, target_rate, seed)?;
    if indices.len() == table.len() {
        return Ok(table.clone());
    }
    Ok(table.select(&indices))
}

pub enum SplitMode<'a> {
    /// Draw `sample_size` rows at random; the first `train_fraction` of the
    /// draw trains, the rest tests.
    SampleThenSplit { sample_size: usize, train_fraction: f64 },
    /// The dataset ships its own split: the table passed to
    /// [`split_train_test`] is the training file and `test` is returned as is.
    Predefined { test: &'a FlowTable },
}

/// Indices for a seeded sample-then-split over `len` items.
pub fn sample_then_split_indices(
    len: usize,
    sample_size: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in [0, 1], got {train_fraction}"
        )));
    }
    if sample_size > len {
        return Err(Error::InsufficientData {
            requested: sample_size,
            available: len,
        });
    }
    let mut drawn = index::sample(&mut rng(seed), len, sample_size).into_vec();
    let n_train = (train_fraction * sample_size as f64).floor() as usize;
    let test = drawn.split_off(n_train);
    Ok((drawn, test))
}

pub fn split_train_test(table: &FlowTable, mode: SplitMode<'_>, seed: u64) -> Result<(FlowTable, FlowTable)> {
    match mode {
        SplitMode::SampleThenSplit {
            sample_size,
            train_fraction,
        } => {
            let (train, test) = sample_then_split_indices(table.len(), sample_size, train_fraction, seed)?;
            Ok((table.select(&train), table.select(&test)))
        }
        SplitMode::Predefined { test } => {
            if test.schema().id() != table.schema().id() {
                return Err(Error::SchemaMismatch(format!(
                    "train is `{}` but test is `{}`",
                    table.schema().id(),
                    test.schema().id()
                )));
            }
            Ok((table.clone(), test.clone()))
        }
    }
}

/// Uniform seeded subsample of `size` records, kept in original order.
pub fn subsample(table: &FlowTable, size: usize, seed: u64) -> Result<FlowTable> {
    if size > table.len() {
        return Err(Error::InsufficientData {
            requested: size,
            available: table.len(),
        });
    }
    let mut idx = index::sample(&mut rng(seed), table.len(), size).into_vec();
    idx.sort_unstable();
    Ok(table.select(&idx))
}
