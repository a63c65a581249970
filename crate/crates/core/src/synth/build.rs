use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{CorpusManifest, Result, Split, SynthError, UtteranceRecord};
use crate::hearing::{PatternBank, PatternSplit};

pub const TRAIN_SNRS_DB: [f64; 7] = [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0];
pub const TEST_SNRS_DB: [f64; 4] = [-6.0, 0.0, 6.0, 12.0];
pub const VAL_FRACTION: f64 = 0.1;

/// Patterns per category attached to each noisy utterance.
const PATTERNS_PER_CATEGORY: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanSource {
    pub path: String,
    pub num_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSource {
    pub name: String,
    pub path: String,
    pub num_samples: usize,
}

/// Clean utterances diverted to VAL: 10% rounded down, at least one.
pub fn val_count(num_clean: usize) -> usize {
    ((num_clean as f64 * VAL_FRACTION).floor() as usize).max(1)
}

fn digest(kind: &str, clean: &[CleanSource], noise: &[NoiseSource], bank: &PatternBank, seed: u64, snrs: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update(format!("{kind}\nseed={seed}\nval_fraction={VAL_FRACTION}\nsnrs={snrs:?}\n"));
    for c in clean {
        h.update(format!("clean\t{}\t{}\n", c.path, c.num_samples));
    }
    for n in noise {
        h.update(format!("noise\t{}\t{}\t{}\n", n.name, n.path, n.num_samples));
    }
    h.update(bank.to_text());
    hex::encode(h.finalize())
}

fn draw_offset(rng: &mut ChaCha8Rng, clean: &CleanSource, noise: &NoiseSource) -> usize {
    if noise.num_samples == 0 {
        0
    } else if noise.num_samples >= clean.num_samples {
        rng.gen_range(0..=noise.num_samples - clean.num_samples)
    } else {
        rng.gen_range(0..noise.num_samples)
    }
}

fn check_inputs(clean: &[CleanSource], noise: &[NoiseSource], bank: &PatternBank) -> Result<()> {
    if clean.is_empty() {
        return Err(SynthError::EmptyInput("clean list"));
    }
    if noise.is_empty() {
        return Err(SynthError::EmptyInput("noise list"));
    }
    if bank.is_empty() {
        return Err(SynthError::EmptyInput("pattern bank"));
    }
    Ok(())
}

/// `k` ids drawn without replacement, returned in bank order.
fn pick<'a>(rng: &mut ChaCha8Rng, ids: &[&'a str], k: usize) -> Vec<&'a str> {
    let mut chosen = index::sample(rng, ids.len(), k).into_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| ids[i]).collect()
}

fn seen_ids<'a>(bank: &'a PatternBank, split: PatternSplit) -> Result<Vec<(crate::hearing::Configuration, Vec<&'a str>)>> {
    let mut out = Vec::new();
    for c in bank.configurations() {
        let ids = bank.ids(c, split);
        if ids.len() < PATTERNS_PER_CATEGORY {
            return Err(SynthError::Bank(format!(
                "{c} has {} {} patterns, need {PATTERNS_PER_CATEGORY}",
                ids.len(),
                split.tag()
            )));
        }
        out.push((c, ids));
    }
    Ok(out)
}

/// TRAIN/VAL manifest. Each clean utterance gets one seeded (noise, SNR, offset);
/// a seeded 10% goes to VAL with one random SEEN audiogram, the rest is paired
/// with two seeded SEEN patterns from every category.
pub fn build_train_manifest(
    clean: &[CleanSource],
    noise: &[NoiseSource],
    bank: &PatternBank,
    seed: u64,
) -> Result<CorpusManifest> {
    check_inputs(clean, noise, bank)?;
    if clean.len() < 2 {
        return Err(SynthError::Cardinality("need at least 2 clean utterances to hold out VAL".into()));
    }
    let per_category = seen_ids(bank, PatternSplit::Seen)?;
    let all_seen: Vec<&str> = bank
        .entries()
        .iter()
        .filter(|e| e.split == PatternSplit::Seen)
        .map(|e| e.id.as_str())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_val = val_count(clean.len());
    let mut is_val = vec![false; clean.len()];
    for i in index::sample(&mut rng, clean.len(), n_val) {
        is_val[i] = true;
    }

    let mut records = Vec::new();
    for (ci, c) in clean.iter().enumerate() {
        let n = noise.choose(&mut rng).expect("non-empty noise list");
        let snr_db = *TRAIN_SNRS_DB.choose(&mut rng).expect("non-empty SNR set");
        let noise_offset = draw_offset(&mut rng, c, n);
        let mut push = |split: Split, audiogram_id: &str, prefix: &str| {
            records.push(UtteranceRecord {
                id: format!("{prefix}-{ci:05}-{audiogram_id}"),
                split,
                clean_path: c.path.clone(),
                noise_name: n.name.clone(),
                noise_path: n.path.clone(),
                noise_offset,
                snr_db,
                audiogram_id: audiogram_id.to_string(),
                quality: None,
                intelligibility: None,
            });
        };
        if is_val[ci] {
            let id = *all_seen.choose(&mut rng).expect("bank has seen patterns");
            push(Split::Val, id, "val");
        } else {
            for (_, ids) in &per_category {
                for id in pick(&mut rng, ids, PATTERNS_PER_CATEGORY) {
                    push(Split::Train, id, "train");
                }
            }
        }
    }

    let expected = (clean.len() - n_val) * PATTERNS_PER_CATEGORY * per_category.len();
    let manifest = CorpusManifest {
        records,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        digest: digest("train", clean, noise, bank, seed, &TRAIN_SNRS_DB),
        label_provenance: None,
    };
    if manifest.count(Split::Train) != expected || manifest.count(Split::Val) != n_val {
        return Err(SynthError::Cardinality(format!(
            "expected {expected} TRAIN and {n_val} VAL records, built {} and {}",
            manifest.count(Split::Train),
            manifest.count(Split::Val)
        )));
    }
    manifest.check_unique_ids()?;
    Ok(manifest)
}

/// TEST_SEEN/TEST_UNSEEN manifest over the full clean × noise × SNR cross product.
/// Each category contributes a fixed seeded pair of SEEN patterns and a pair of
/// UNSEEN patterns; both splits share the same noisy utterances.
pub fn build_test_manifest(
    clean: &[CleanSource],
    noise: &[NoiseSource],
    bank: &PatternBank,
    seed: u64,
) -> Result<CorpusManifest> {
    check_inputs(clean, noise, bank)?;
    let seen = seen_ids(bank, PatternSplit::Seen)?;
    let unseen = seen_ids(bank, PatternSplit::Unseen)?;
    if seen.len() != unseen.len() {
        return Err(SynthError::Bank("every category needs both SEEN and UNSEEN patterns".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen_pick = Vec::new();
    let mut unseen_pick = Vec::new();
    for ((_, s), (_, u)) in seen.iter().zip(&unseen) {
        seen_pick.extend(pick(&mut rng, s, PATTERNS_PER_CATEGORY));
        unseen_pick.extend(pick(&mut rng, u, PATTERNS_PER_CATEGORY));
    }

    let mut records = Vec::new();
    let mut noisy = 0usize;
    for (ci, c) in clean.iter().enumerate() {
        for n in noise {
            for &snr_db in &TEST_SNRS_DB {
                let noise_offset = draw_offset(&mut rng, c, n);
                noisy += 1;
                for (split, ids) in [(Split::TestSeen, &seen_pick), (Split::TestUnseen, &unseen_pick)] {
                    for id in ids.iter() {
                        records.push(UtteranceRecord {
                            id: format!("test-{ci:05}-{}-{snr_db}-{id}", n.name),
                            split,
                            clean_path: c.path.clone(),
                            noise_name: n.name.clone(),
                            noise_path: n.path.clone(),
                            noise_offset,
                            snr_db,
                            audiogram_id: id.to_string(),
                            quality: None,
                            intelligibility: None,
                        });
                    }
                }
            }
        }
    }

    let manifest = CorpusManifest {
        records,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        digest: digest("test", clean, noise, bank, seed, &TEST_SNRS_DB),
        label_provenance: None,
    };
    let expected_noisy = clean.len() * noise.len() * TEST_SNRS_DB.len();
    let per_split = expected_noisy * PATTERNS_PER_CATEGORY * seen.len();
    if noisy != expected_noisy
        || manifest.count(Split::TestSeen) != per_split
        || manifest.count(Split::TestUnseen) != per_split
    {
        return Err(SynthError::Cardinality(format!(
            "expected {per_split} records per test split from {expected_noisy} noisy utterances"
        )));
    }
    manifest.check_unique_ids()?;
    Ok(manifest)
}
