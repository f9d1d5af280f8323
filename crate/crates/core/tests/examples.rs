#[path = "../examples/character_model.rs"]
mod character_model;
#[path = "../examples/counterexample.rs"]
mod counterexample;
#[path = "../examples/fin_sets.rs"]
mod fin_sets;
#[path = "../examples/intertwining_markov.rs"]
mod intertwining_markov;
#[path = "../examples/joinings.rs"]
mod joinings;
#[path = "../examples/spectral_measures.rs"]
mod spectral_measures;
#[path = "../examples/weight_sequence.rs"]
mod weight_sequence;

#[test]
fn weight_sequence_margins_shrink_with_support() {
    let margins = weight_sequence::run_example().unwrap();
    assert!(margins.iter().all(|&m| m > 0.0));
    assert!(margins.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fin_sets_counts_sets_avoiding_one() {
    // subsets of the six points of [-3, 3] other than 1
    assert_eq!(fin_sets::run_example().unwrap(), (1 << 6) - 1);
}

#[test]
fn spectral_measures_certifies() {
    assert!(spectral_measures::run_example().unwrap());
}

#[test]
fn character_model_matches_grid() {
    assert!(character_model::run_example().unwrap() <= 1e-10);
}

#[test]
fn intertwining_markov_margins_are_positive() {
    let m = intertwining_markov::run_example().unwrap();
    assert!(m.j > 0.0 && m.j_adjoint > 0.0 && m.empty_sector > 0.0);
}

#[test]
fn counterexample_residuals_halve() {
    let r = counterexample::run_example().unwrap();
    assert!(r.windows(2).all(|w| (w[0] / 2.0 - w[1]).abs() <= 1e-12));
}

#[test]
fn joinings_dimensions() {
    assert_eq!(joinings::run_example().unwrap(), (0, 3));
}
