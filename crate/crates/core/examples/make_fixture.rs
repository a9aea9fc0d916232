//! Regenerates the two-class texture fixture used by the tests.
//!
//! cargo run -p aglbp --example make_fixture -- crates/core/tests/fixtures/two_class

use std::fs;
use std::path::PathBuf;

use aglbp::raster::write_pgm;
use aglbp::synth::{two_class_fixture, Split};

/// Seed of the shipped fixture.
const SEED: u64 = 3;

fn main() -> aglbp::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "two_class".into()));
    fs::create_dir_all(&dir).map_err(|e| aglbp::Error::Data {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    let (mut train, mut test, mut all) = (String::new(), String::new(), String::new());
    for img in two_class_fixture(SEED) {
        write_pgm(&img.image, dir.join(&img.name))?;
        let line = format!("{} {}\n", img.name, img.label);
        match img.split {
            Split::Train => train.push_str(&line),
            Split::Test => test.push_str(&line),
        }
        all.push_str(&line);
    }
    for (name, text) in [("train.txt", train), ("test.txt", test), ("all.txt", all)] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| aglbp::Error::Data {
            path,
            message: e.to_string(),
        })?;
    }
    println!("wrote fixture to {}", dir.display());
    Ok(())
}
