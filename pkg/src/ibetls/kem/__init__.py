"""Pluggable identity-based KEM with a desk-scale lattice instantiation."""

from .codec import (
    KNOWN_SCHEME_IDS,
    SCHEME_EPHEMERAL,
    SCHEME_ID_ML_KEM,
    SCHEME_REFERENCE,
    ciphertext_size,
    decode_ciphertext,
    decode_eph_public,
    decode_master_public,
    decode_private_key,
    encode_ciphertext,
    encode_eph_public,
    encode_master_public,
    encode_private_key,
    require_reference_scheme,
)
from .ephemeral import EphemeralKeyPair, EphemeralPublicKey, eph_decaps, eph_encaps, eph_generate
from .errors import (
    DecodeError,
    EphemeralKeyReuse,
    InvalidParams,
    KemError,
    MalformedIdentity,
    MasterKeyMismatch,
    UnsupportedScheme,
)
from .identity import IdentityString
from .params import NOT_SECURE_BANNER, KemParams, ToyParametersWarning
from .sampling import HashStream
from .scheme import (
    IdentityPrivateKey,
    IdentityPublicKey,
    IdKemCiphertext,
    MasterPublicKey,
    MasterSecretKey,
    decaps,
    derive_public,
    encaps,
    extract,
    gadget_matrix,
    setup,
)

__all__ = [
    "KNOWN_SCHEME_IDS",
    "SCHEME_EPHEMERAL",
    "SCHEME_ID_ML_KEM",
    "SCHEME_REFERENCE",
    "NOT_SECURE_BANNER",
    "HashStream",
    "KemParams",
    "ToyParametersWarning",
    "IdentityString",
    "MasterPublicKey",
    "MasterSecretKey",
    "IdentityPublicKey",
    "IdentityPrivateKey",
    "IdKemCiphertext",
    "EphemeralKeyPair",
    "EphemeralPublicKey",
    "setup",
    "derive_public",
    "extract",
    "encaps",
    "decaps",
    "eph_generate",
    "eph_encaps",
    "eph_decaps",
    "gadget_matrix",
    "ciphertext_size",
    "encode_ciphertext",
    "decode_ciphertext",
    "encode_master_public",
    "decode_master_public",
    "encode_private_key",
    "decode_private_key",
    "encode_eph_public",
    "decode_eph_public",
    "require_reference_scheme",
    "KemError",
    "InvalidParams",
    "MalformedIdentity",
    "MasterKeyMismatch",
    "UnsupportedScheme",
    "DecodeError",
    "EphemeralKeyReuse",
]
