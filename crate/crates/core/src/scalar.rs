//! Scalar abstraction for the numeric kernels (retrieval scores, cosine
//! similarities, probabilities). Everything that does float math is generic
//! over [`Scalar`]; the crate root fixes concrete defaults (f64 for scores
//! and metrics, f32 for embedding storage).

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64, for configuration values.
    fn from_config(v: f64) -> Self {
        Self::from_f64(v).expect("finite config value")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
