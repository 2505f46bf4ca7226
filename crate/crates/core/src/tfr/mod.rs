//! Time-frequency planes: Wigner-Ville distribution and Fourier
//! synchrosqueezed transform.

mod fft;
mod plane;
mod stft;
mod wvd;

pub use fft::{dft, Dft};
pub use plane::{read_plane_csv, write_plane_csv, Axis, Grid, TfMethod, TfPlane};
pub use stft::{fsst, stft, Stft, WindowSpec};
pub use wvd::wvd;
