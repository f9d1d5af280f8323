//! Finite subsets of the integers and the hat/tilde reindexing.

use quasi_similarity::finsets::{FinSet, Window};
use quasi_similarity::Result;

pub fn run_example() -> Result<usize> {
    let a = FinSet::new([-2, 0, 1, 3])?;
    let hat = a.hat();
    println!("A = {a}, hat(A) = {hat}, tilde(hat(A)) = {}", hat.tilde()?);
    assert!(!hat.contains(1));

    let (rep, offset) = a.canonical_rep();
    println!("canonical representative {rep} at offset {offset}");

    // every B avoiding 1 in [-3, 3] has exactly one preimage under hat
    let w = Window::symmetric(3);
    let mut count = 0;
    for b in w.nonempty_subsets().filter(|b| !b.contains(1)) {
        assert_eq!(b.tilde()?.hat(), b);
        count += 1;
    }
    println!("{count} sets in {w} avoid 1");

    let mask = a.to_mask(w.dilate(1)).expect("fits");
    println!("mask of A in {}: {mask:#b}", w.dilate(1));
    Ok(count)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
