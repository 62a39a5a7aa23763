//! The bundled sorting corpus, embedded at build time so tests and examples
//! do not depend on the working directory.

use crate::genome::{parse_linear, parse_tree, Genome, LinearGenome, TreeGenome};
use crate::harness::{Comparator, TestCase, TestSuite};

macro_rules! corpus_file {
    ($($p:tt)+) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/", $($p)+))
    };
}

pub const BUBBLE: &str = corpus_file!("sorting/bubble.mini");
pub const INSERTION: &str = corpus_file!("sorting/insertion.mini");
pub const MERGE: &str = corpus_file!("sorting/merge.mini");
pub const QUICK: &str = corpus_file!("sorting/quick.mini");
pub const BUBBLE_LISTING: &str = corpus_file!("sorting/bubble.lin");

/// Program name and source for each sorter.
pub const SORTERS: [(&str, &str); 4] = [
    ("bubble", BUBBLE),
    ("insertion", INSERTION),
    ("merge", MERGE),
    ("quick", QUICK),
];

macro_rules! cases {
    ($($n:literal),* $(,)?) => {
        [$(($n, corpus_file!(concat!("sorting/tests/", $n, ".in")), corpus_file!(concat!("sorting/tests/", $n, ".out")))),*]
    };
}

const CASES: [(&str, &str, &str); 10] = cases!(
    "01_empty",
    "02_single",
    "03_two_sorted",
    "04_two_reversed",
    "05_sorted",
    "06_reverse",
    "07_all_equal",
    "08_sorted_duplicates",
    "09_reverse_duplicates",
    "10_sorted_negatives",
);

pub fn sorter(name: &str) -> Option<TreeGenome> {
    SORTERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_tree(src).expect("corpus programs parse"))
}

pub fn sorter_genome(name: &str) -> Option<Genome> {
    sorter(name).map(Genome::Tree)
}

/// Bubble sort as a linear listing, lowered from the tree source.
pub fn bubble_listing() -> LinearGenome {
    parse_linear(BUBBLE_LISTING).expect("corpus listing parses")
}

/// The shared ten-case sorting suite.
pub fn sorting_suite(comparator: Comparator) -> TestSuite {
    let cases = CASES
        .iter()
        .map(|(n, i, o)| TestCase::new(*n, *i, *o))
        .collect();
    TestSuite::new(cases, comparator).expect("corpus suite is well-formed")
}
