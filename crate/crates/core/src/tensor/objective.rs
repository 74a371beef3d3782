use super::ClipRange;
use crate::uniform::Codec;

/// Sum of squared reconstruction errors of `x` under uniform `nbits`
/// quantization with clipping range `range`, fp32 scale and bias.
///
/// This is a sum, not a mean: the searches only need an argmin.
pub fn quant_mse(x: &[f32], range: ClipRange, nbits: u32) -> f64 {
    let codec = Codec::new(range, nbits);
    x.iter()
        .map(|&v| {
            let e = v as f64 - codec.decode(codec.encode(v)) as f64;
            e * e
        })
        .sum()
}
