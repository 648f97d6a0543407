use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// How generated identifiers look.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentifierStyle {
    /// `a0u`, `a0A`, `a0Kf`: an `a0` prefix with a random mixed-case suffix.
    #[default]
    RandomSuffix,
    /// Descriptive names, for readable fixtures.
    Plain,
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

pub(crate) fn random_letters(rng: &mut impl Rng, n: usize) -> String {
    (0..n)
        .map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char)
        .collect()
}

/// Names for the array function, the decoder and the payload functions.
pub(crate) struct Names {
    pub array_function: String,
    pub decoder: String,
    pub payload: Vec<String>,
}

impl Names {
    pub fn generate(style: IdentifierStyle, payload_count: usize, rng: &mut impl Rng) -> Self {
        match style {
            IdentifierStyle::Plain => Names {
                array_function: "stringTable".into(),
                decoder: "decodeString".into(),
                payload: (1..=payload_count).map(|i| format!("payload{i}")).collect(),
            },
            IdentifierStyle::RandomSuffix => {
                let mut taken = HashSet::new();
                let mut fresh = |rng: &mut _, len: usize| loop {
                    let name = format!("a0{}", random_letters(rng, len));
                    if taken.insert(name.clone()) {
                        break name;
                    }
                };
                let array_function = fresh(rng, 1);
                let decoder = fresh(rng, 1);
                let payload = (0..payload_count).map(|_| fresh(rng, 2)).collect();
                Names {
                    array_function,
                    decoder,
                    payload,
                }
            }
        }
    }
}
