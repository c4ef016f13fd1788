//! Local Fourier analysis of scalar fields and numerical checks of the
//! identities linking derivative energy to local frequency content.
//!
//! Frequencies are in cycles per unit length, so `e^{-2πi k·y}` is the
//! transform kernel. With that convention, for `f` supported on a ball,
//!
//! ```text
//! ∫‖∇f‖²    = 4π²  ∫‖k‖² |f̂(k)|² dk
//! ∫‖H_f‖²_F = 16π⁴ ∫‖k‖⁴ |f̂(k)|² dk
//! ```
//!
//! which is what [`check_connection`] compares.

mod fft;
mod fields;
mod fsin;
mod local;
mod quad;

pub use fft::{fft, fft2, fftfreq};
pub use fields::{BesselJ0, Constant, Cos2D, Field, Gaussian1D, OneMinusCos1D, Sine1D};
pub use fsin::{f_sin_eval, f_sin_jet, FSin};
pub use local::{
    check_connection, local_fourier, uncertainty_check, ConnectionCheck, Grid, LocalSpectrum, SampledField,
    UncertaintyCheck,
};
pub use quad::{bandlimited_identities, integrate_sq_derivative, simpson, BandlimitedCheck};
