//! Reference sources used by the tests, the acceptance suite and the CLI.

use crate::state::{CQState, DensityOperator};
use crate::C64;

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn ket(re: &[f64]) -> DensityOperator {
    DensityOperator::pure(&re.iter().map(|&r| C64::new(r, 0.0)).collect::<Vec<_>>())
}

/// Uniform bit observed through a binary symmetric channel with flip probability `q`.
pub fn dsbs(q: f64) -> CQState {
    let side = vec![
        DensityOperator::diagonal(&[1.0 - q, q]).expect("valid"),
        DensityOperator::diagonal(&[q, 1.0 - q]).expect("valid"),
    ];
    CQState::new(labels(&["0", "1"]), vec![0.5, 0.5], side).expect("valid")
}

/// Uniform bit encoded in `|0⟩` or `|+⟩`.
pub fn zero_plus() -> CQState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CQState::new(labels(&["0", "1"]), vec![0.5, 0.5], vec![ket(&[1.0, 0.0]), ket(&[h, h])]).expect("valid")
}

/// Uniform bit copied into orthogonal states.
pub fn perfect_side_information() -> CQState {
    CQState::new(labels(&["0", "1"]), vec![0.5, 0.5], vec![ket(&[1.0, 0.0]), ket(&[0.0, 1.0])]).expect("valid")
}

/// Uniform bit with side information independent of it.
pub fn no_side_information() -> CQState {
    CQState::new(labels(&["0", "1"]), vec![0.5, 0.5], vec![DensityOperator::maximally_mixed(2); 2]).expect("valid")
}

/// Two uniform bits, a basis choice and a value, prepared as `|0⟩, |1⟩, |+⟩, |−⟩`.
pub fn two_bit_labels() -> CQState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CQState::new(
        labels(&["00", "01", "10", "11"]),
        vec![0.25; 4],
        vec![ket(&[1.0, 0.0]), ket(&[0.0, 1.0]), ket(&[h, h]), ket(&[h, -h])],
    )
    .expect("valid")
}

/// File stem and state for every shipped example.
pub fn shipped() -> Vec<(&'static str, CQState)> {
    vec![
        ("dsbs_q011", dsbs(0.11)),
        ("zero_plus", zero_plus()),
        ("perfect_side_information", perfect_side_information()),
        ("no_side_information", no_side_information()),
        ("two_bit_labels", two_bit_labels()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn shipped_files_match_catalog() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("states");
        for (name, state) in shipped() {
            let loaded = CQState::load(dir.join(format!("{name}.json"))).unwrap();
            assert_eq!(loaded.hash(), state.hash(), "{name}");
        }
    }
}
