//! Supervised-learning detection for multihop relay uplinks that terminate
//! in one-bit ADCs.
//!
//! The receive chain modelled here is a data center that hears `K` sources
//! through `hops - 1` stages of amplify-and-forward relays and quantizes
//! every antenna output to a single bit per real dimension. Because the
//! effective channel is never estimated, detection is learned instead:
//! during a training phase each of the `m^K` joint messages is transmitted
//! `T` times over the (fixed) fading realization, and the resulting sign
//! patterns are used to fit per-class models.
//!
//! Module map:
//!
//! * [`netsim`] — constellation, channel draw, AF propagation and the
//!   one-bit front end; produces [`BinaryObservation`]s.
//! * [`dataset`] — labelled training collection and a compact on-disk dump.
//! * [`detectors`] — centroid, Mahalanobis, kNN and Bernoulli detectors.
//! * [`forest`] — randomized clustering trees over class signatures and
//!   the budgeted reduced-search detector built on them.
//! * [`bench`] — Monte-Carlo BER sweeps over SNR, CSV output, and the
//!   key/value config format consumed by the `slbench` binary.

pub mod bench;
pub mod dataset;
pub mod detectors;
pub mod forest;
pub mod netsim;

mod error;

pub use error::{Error, Result};
pub use netsim::{BinaryObservation, ClassIndex, SystemConfig};
