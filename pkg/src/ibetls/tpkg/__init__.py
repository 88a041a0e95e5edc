"""Threshold private key generator: shares, registry, issuance workflow."""

from .registry import (
    STATUS_ACTIVE,
    STATUS_EXPIRED,
    STATUS_REVOKED,
    Registry,
    RegistryRecord,
    load_chain,
    verify_chain,
)
from .service import (
    AlreadyIssued,
    ApprovalNotAuthorized,
    BlocklistedIdentity,
    EpochExpired,
    IdentityRequest,
    InvalidTransition,
    IssuerPolicy,
    KeyDelivery,
    PolicyViolation,
    Principal,
    RequestStatus,
    TpkgError,
    TpkgService,
    UnauthenticatedPrincipal,
    UnknownIdentity,
    UnknownRequest,
)
from .shamir import DEFAULT_PRIME, Share, ShareMismatch, ShareSet, ThresholdNotMet, reconstruct, split
from .storage import (
    load_domain,
    load_readable_shares,
    load_shares,
    readable_share_count,
    save_domain,
    save_policy,
    save_requests,
    save_state,
)
from .wire import ApiServer, IDENTITYREQUESTS_PATH, decode_message, encode_message

__all__ = [
    "Registry",
    "RegistryRecord",
    "verify_chain",
    "load_chain",
    "STATUS_ACTIVE",
    "STATUS_EXPIRED",
    "STATUS_REVOKED",
    "TpkgService",
    "TpkgError",
    "IssuerPolicy",
    "IdentityRequest",
    "RequestStatus",
    "KeyDelivery",
    "Principal",
    "PolicyViolation",
    "BlocklistedIdentity",
    "UnauthenticatedPrincipal",
    "ApprovalNotAuthorized",
    "InvalidTransition",
    "AlreadyIssued",
    "UnknownRequest",
    "UnknownIdentity",
    "EpochExpired",
    "Share",
    "ShareSet",
    "ShareMismatch",
    "ThresholdNotMet",
    "DEFAULT_PRIME",
    "split",
    "reconstruct",
    "ApiServer",
    "IDENTITYREQUESTS_PATH",
    "encode_message",
    "decode_message",
    "save_domain",
    "save_policy",
    "save_requests",
    "save_state",
    "load_domain",
    "load_shares",
    "load_readable_shares",
    "readable_share_count",
]
