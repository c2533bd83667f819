//! Seeded random creative-writing prompts.
//!
//! A small bundled grammar produces an opening sentence; each record asks the
//! system to continue it with four coherent, creative sentences. Generation
//! is deterministic for a given seed on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::dataset::DatasetRecord;
use crate::model::Domain;

const SUBJECTS: [&str; 12] = [
    "the weary lighthouse keeper",
    "a clockwork sparrow",
    "the last cartographer",
    "an apprentice stormcaller",
    "the night librarian",
    "a retired circus lion",
    "the village glassblower",
    "an unsent letter",
    "the tide-worn fisherman",
    "a forgotten melody",
    "the midnight gardener",
    "a borrowed umbrella",
];

const VERBS: [&str; 10] = [
    "discovered",
    "buried",
    "followed",
    "repaired",
    "whispered to",
    "traded away",
    "sketched",
    "unlocked",
    "remembered",
    "chased",
];

const OBJECTS: [&str; 12] = [
    "a silver compass",
    "the frozen harbor",
    "a map of vanished streets",
    "the lantern of a sunken ship",
    "an orchard of glass apples",
    "the echo in the stairwell",
    "a key without a lock",
    "the first snow of the year",
    "a jar of captured fog",
    "the town's oldest clock",
    "a staircase into the sea",
    "the shadow of a departed train",
];

const PLACES: [&str; 10] = [
    "beneath the floorboards",
    "at the edge of the salt marsh",
    "behind the observatory",
    "in the abandoned tram depot",
    "on the longest night of winter",
    "beside the paper mill",
    "under the fairground lights",
    "within the hollow oak",
    "along the flooded causeway",
    "at the borrowed piano",
];

fn capitalize(sentence: &str) -> String {
    let mut chars = sentence.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Generate `count` creative-writing records, deterministic under `seed`.
pub fn generate_creative_prompts(count: usize, seed: u64) -> Result<Vec<DatasetRecord>> {
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(count);
    for index in 0..count {
        let subject = SUBJECTS[rng.random_range(0..SUBJECTS.len())];
        let verb = VERBS[rng.random_range(0..VERBS.len())];
        let object = OBJECTS[rng.random_range(0..OBJECTS.len())];
        let place = PLACES[rng.random_range(0..PLACES.len())];
        let opening = capitalize(&format!("{subject} {verb} {object} {place}."));
        let statement = format!(
            "Starting from this sentence: \"{opening}\" Write exactly four coherent, \
             creative sentences that continue it into a complete micro-story."
        );
        records.push(DatasetRecord {
            id: format!("creative-{seed}-{index}"),
            statement,
            domain: Domain::Creative,
            reference_answer: None,
            source: Some("generated".to_string()),
        });
    }
    Ok(records)
}
