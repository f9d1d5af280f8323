//! `J = sum a_n U_{I_n}`: intertwining, the Markov axioms and kernel margins.

use quasi_similarity::model::{
    markov_j, verify_intertwining, verify_markov_j, KernelMargins, Model, ModelConfig,
};
use quasi_similarity::weights::normalized_weights;
use quasi_similarity::Result;

pub fn run_example() -> Result<KernelMargins> {
    let model = Model::new(ModelConfig::default())?;
    let a = normalized_weights(model.config().k, 4096)?;
    let j = markov_j(&a, model.config())?;

    let inter = verify_intertwining(&model, &j)?;
    println!(
        "|U_T1 J - J U_T2| = {:.2e} on {} safe characters",
        inter.residual, inter.safe_dimension
    );

    let pair = verify_markov_j(&model, &a, 100, 3)?;
    println!(
        "J: |J1 - 1| {:.1e}, min image {:.4}, norm {:.12}; J*: |J*1 - 1| {:.1e}",
        pair.j.constants_deviation,
        pair.j.min_image_entry,
        pair.j.norm,
        pair.j_adjoint.constants_deviation
    );

    let margins = KernelMargins::compute(&model, &a)?;
    println!(
        "kernel margins: J {:.12}, J* {:.12}, empty sector {:.12}",
        margins.j, margins.j_adjoint, margins.empty_sector
    );
    Ok(margins)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
