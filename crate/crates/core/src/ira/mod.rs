//! Systematic irregular repeat-accumulate codes.
//!
//! A codeword is `[info | parity]`. Check `j` joins `a` information-bit
//! edges with parity bits `p_j` and `p_{j-1}`, so
//! `p_j = p_{j-1} ⊕ (xor of the a info bits at check j)`.

mod code;
mod decoder;
mod density;

pub use code::{build_code, encode, rate_of, syndrome, CodeDescriptor, IraCodeSpec};
pub use decoder::{decode, DecodeOutput, IraDecoder, DEFAULT_DECODER_ITERS};
pub use density::{de_converges, de_threshold, DensityConfig};
