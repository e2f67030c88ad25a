//! Idealized signatures: an in-simulator registry models unforgeable
//! signing oracles for committee members (threshold scheme, `f+1` of `n`)
//! and for users (plain signatures on share envelopes).
//!
//! A tag is `H(secret_identity, message)`; secrets are derived from the
//! registry's master seed and never leave this module. The simulator hands
//! corrupted nodes an adversary handle that can sign only under corrupted
//! identities, so producing a partial for an honest identity would require
//! guessing a 256-bit tag — the idealization of unforgeability.

use super::hash::{digest, Digest32};
use crate::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One committee member's signature fragment on a message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialSig {
    pub signer: NodeId,
    pub tag: Digest32,
}

/// Aggregate of `threshold` distinct verified partials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdSig {
    /// Contributing signers, strictly ascending.
    pub signers: Vec<NodeId>,
    pub tag: Digest32,
}

/// User signature over a share envelope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSig {
    pub user: u64,
    pub tag: Digest32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigError {
    #[error("need {needed} distinct valid partials, got {got}")]
    BelowThreshold { needed: usize, got: usize },
    #[error("partial from {0} does not verify against this message")]
    InvalidPartial(NodeId),
    #[error("unknown signer id {0}")]
    UnknownSigner(NodeId),
}

/// Key material for one committee plus its users.
#[derive(Debug, Clone)]
pub struct SignerRegistry {
    master: Digest32,
    n: usize,
    threshold: usize,
}

impl SignerRegistry {
    /// Registry for `n` nodes tolerating `f` faults; aggregation threshold
    /// is `f + 1`, the smallest set guaranteed to contain an honest signer.
    pub fn new(seed: u64, n: usize, f: usize) -> Self {
        SignerRegistry {
            master: digest("dcn/registry/v1", &[&seed.to_le_bytes()]),
            n,
            threshold: f + 1,
        }
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    fn node_secret(&self, v: NodeId) -> Digest32 {
        digest("dcn/key/node", &[&self.master, &(v as u64).to_le_bytes()])
    }

    fn user_secret(&self, u: u64) -> Digest32 {
        digest("dcn/key/user", &[&self.master, &u.to_le_bytes()])
    }

    /// Sign a message fragment as node `v`.
    pub fn partial_sign(&self, v: NodeId, msg: &[u8]) -> PartialSig {
        assert!(v < self.n, "signer id out of range");
        PartialSig {
            signer: v,
            tag: digest("dcn/sig/partial", &[&self.node_secret(v), msg]),
        }
    }

    pub fn partial_verify(&self, msg: &[u8], p: &PartialSig) -> bool {
        p.signer < self.n
            && p.tag == digest("dcn/sig/partial", &[&self.node_secret(p.signer), msg])
    }

    /// Combine partials on one message into a threshold signature. Invalid
    /// partials are rejected, duplicates collapse to one contribution.
    pub fn combine(&self, msg: &[u8], partials: &[PartialSig]) -> Result<ThresholdSig, SigError> {
        let mut signers: Vec<NodeId> = Vec::new();
        for p in partials {
            if p.signer >= self.n {
                return Err(SigError::UnknownSigner(p.signer));
            }
            if !self.partial_verify(msg, p) {
                return Err(SigError::InvalidPartial(p.signer));
            }
            if !signers.contains(&p.signer) {
                signers.push(p.signer);
            }
        }
        if signers.len() < self.threshold {
            return Err(SigError::BelowThreshold {
                needed: self.threshold,
                got: signers.len(),
            });
        }
        signers.sort_unstable();
        Ok(ThresholdSig {
            tag: self.aggregate_tag(msg, &signers),
            signers,
        })
    }

    /// Verify an aggregate: enough distinct known signers, and the tag
    /// matches a recomputation from their individual keys.
    pub fn verify(&self, msg: &[u8], sig: &ThresholdSig) -> bool {
        if sig.signers.len() < self.threshold {
            return false;
        }
        if sig.signers.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        if sig.signers.iter().any(|&v| v >= self.n) {
            return false;
        }
        sig.tag == self.aggregate_tag(msg, &sig.signers)
    }

    fn aggregate_tag(&self, msg: &[u8], signers: &[NodeId]) -> Digest32 {
        let mut parts: Vec<Vec<u8>> = vec![msg.to_vec()];
        for &v in signers {
            parts.push(self.partial_sign(v, msg).tag.to_vec());
        }
        let refs: Vec<&[u8]> = parts.iter().map(|p| p.as_slice()).collect();
        digest("dcn/sig/agg", &refs)
    }

    pub fn user_sign(&self, user: u64, msg: &[u8]) -> UserSig {
        UserSig {
            user,
            tag: digest("dcn/sig/user", &[&self.user_secret(user), msg]),
        }
    }

    pub fn user_verify(&self, msg: &[u8], sig: &UserSig) -> bool {
        sig.tag == digest("dcn/sig/user", &[&self.user_secret(sig.user), msg])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> SignerRegistry {
        SignerRegistry::new(42, 4, 1)
    }

    #[test]
    fn combine_and_verify_round_trip() {
        let r = registry();
        let msg = b"h||tau";
        let partials = [r.partial_sign(0, msg), r.partial_sign(2, msg)];
        let sig = r.combine(msg, &partials).unwrap();
        assert_eq!(sig.signers, vec![0, 2]);
        assert!(r.verify(msg, &sig));
        assert!(!r.verify(b"other", &sig));
    }

    #[test]
    fn below_threshold_is_rejected() {
        let r = registry();
        let msg = b"m";
        let one = [r.partial_sign(3, msg)];
        assert_eq!(
            r.combine(msg, &one),
            Err(SigError::BelowThreshold { needed: 2, got: 1 })
        );
        // Duplicates of the same signer do not count twice.
        let dup = [r.partial_sign(3, msg), r.partial_sign(3, msg)];
        assert_eq!(
            r.combine(msg, &dup),
            Err(SigError::BelowThreshold { needed: 2, got: 1 })
        );
    }

    #[test]
    fn partial_on_other_message_is_invalid() {
        let r = registry();
        let partials = [r.partial_sign(0, b"a"), r.partial_sign(1, b"b")];
        assert_eq!(r.combine(b"a", &partials), Err(SigError::InvalidPartial(1)));
    }

    #[test]
    fn tampered_aggregate_fails() {
        let r = registry();
        let msg = b"m";
        let mut sig = r
            .combine(msg, &[r.partial_sign(0, msg), r.partial_sign(1, msg)])
            .unwrap();
        sig.tag[0] ^= 1;
        assert!(!r.verify(msg, &sig));

        let mut padded = r
            .combine(msg, &[r.partial_sign(0, msg), r.partial_sign(1, msg)])
            .unwrap();
        padded.signers.push(3); // claim an extra contributor
        assert!(!r.verify(msg, &padded));
    }

    #[test]
    fn user_signatures_bind_user_and_message() {
        let r = registry();
        let sig = r.user_sign(9, b"share");
        assert!(r.user_verify(b"share", &sig));
        assert!(!r.user_verify(b"other", &sig));
        let forged = UserSig { user: 8, tag: sig.tag };
        assert!(!r.user_verify(b"share", &forged));
    }
}
