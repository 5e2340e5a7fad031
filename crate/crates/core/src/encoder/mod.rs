//! Secure Transformer encoder layer, its float64 reference, weight
//! handling and the tensor archive format.

mod archive;
mod reference;
mod secure;
mod weights;

pub use archive::{read_archive, write_archive, Tensor};
pub use reference::{layernorm_rows, pooler_reference, reference_forward, softmax_rows, Magnitudes, ReferencePass};
pub use secure::{
    is_power_of_four, EncoderConfig, LayerKind, LayerRecord, ScoreScaling, Trace, BOUND_SAFETY, LAYER_TABLE,
};
pub use weights::{Dense, EncoderShape, EncoderWeights};

/// Largest magnitudes over a set of calibration inputs (each `rows x dm`).
pub fn calibrate(w: &EncoderWeights, inputs: &[Vec<f64>], eps: f64) -> Magnitudes {
    let dm = w.shape.model_dim;
    inputs.iter().fold(Magnitudes::default(), |acc, x| {
        acc.merge(&reference_forward(w, x, x.len() / dm, eps).magnitudes)
    })
}

#[cfg(test)]
mod tests;
