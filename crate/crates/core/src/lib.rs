//! Link-level simulation of affine filter bank modulation (AFBM): chirp
//! transforms, prototype filters, the modulator and matched receiver,
//! doubly-dispersive channels, MMSE detection and SIR/BER metrics.

pub mod channel;
pub mod config;
pub mod equalize;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod metrics;
pub mod modem;
pub mod qam;
pub mod rng;
pub mod transforms;

pub use channel::{ChannelProfile, ChannelRealization, PathSpec};
pub use config::{ModulationConfig, PhaseReference};
pub use error::{AfbmError, Result};
pub use filters::{FilterFamily, Overlap, PrototypeFilter};
pub use linalg::CMat;
pub use modem::{Domain, EffectiveChannel, Modem};
pub use qam::Constellation;
