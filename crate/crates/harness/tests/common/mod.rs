#![allow(dead_code)]

use std::path::Path;

use mssvdd::data::{synthetic, ModalDataset, SyntheticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Robot-format text: "normal" blocks follow a smooth force/torque profile,
/// failure blocks add large jitter and an offset.
pub fn robot_text(normal: usize, failures: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for b in 0..normal + failures {
        let ok = b < normal;
        let class = if ok { "normal" } else { ["collision", "obstruction"][b % 2] };
        out.push_str(class);
        out.push('\n');
        for t in 0..15 {
            let vals: Vec<String> = (0..6)
                .map(|ch| {
                    let base = 10.0 * ((t as f64) * 0.3 + ch as f64).sin();
                    let v = if ok {
                        base + rng.gen_range(-1.0..1.0)
                    } else {
                        base + 15.0 + rng.gen_range(-25.0..25.0)
                    };
                    (v.round() as i64).to_string()
                })
                .collect();
            out.push_str(&format!("\t{}\n", vals.join("\t")));
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

pub fn small_synthetic(seed: u64) -> ModalDataset {
    synthetic(&SyntheticSpec {
        dims: vec![5, 4],
        targets: 30,
        outliers: 20,
        seed,
        ..Default::default()
    })
    .unwrap()
}
