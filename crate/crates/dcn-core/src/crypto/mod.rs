//! Cryptographic primitives for the submission pipeline.
//!
//! Shamir sharing and the commitment hash are real (byte-wise GF(256) and
//! SHA-256). Signatures are *idealized*: an in-simulator registry holds every
//! party's key material and models signing as an unforgeable tagged oracle.
//! The registry is the trust boundary — corrupted nodes get a handle that can
//! only sign under their own identities, so a verifying aggregate over `f+1`
//! distinct signers always pins at least one honest signer's intent.

mod gf256;
pub mod hash;
pub mod shamir;
pub mod sig;

pub use hash::{digest, instance_hash, Digest32};
pub use shamir::{reconstruct, split, split_with_coeffs, ShamirError, Share};
pub use sig::{PartialSig, SigError, SignerRegistry, ThresholdSig, UserSig};
