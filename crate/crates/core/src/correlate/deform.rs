use crate::error::{PivError, Result};
use crate::field::{GrayImage, VectorField};

/// Warps `img` by a displacement field: the output pixel centered at `p`
/// takes the bilinear sample of `img` at `p - d(p)`, where `d` is the field
/// interpolated bilinearly between node centers. Samples beyond the image
/// replicate the edge.
///
/// Content therefore moves by `+d`. To undo a measured displacement on the
/// second frame, pass the negated field.
pub fn deform_window(img: &GrayImage, field: &VectorField) -> Result<GrayImage> {
    if !field.is_complete() {
        return Err(PivError::Parameter(
            "deformation needs a field without flagged nodes".into(),
        ));
    }
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let (u, v) = field.sample(col as f64 + 0.5, row as f64 + 0.5);
            out.push(img.sample_bilinear(col as f64 - u, row as f64 - v));
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}

/// Negated copy of a field.
pub(crate) fn negated(field: &VectorField) -> VectorField {
    let mut out = field.clone();
    out.u.iter_mut().for_each(|x| *x = -*x);
    out.v.iter_mut().for_each(|x| *x = -*x);
    out
}
