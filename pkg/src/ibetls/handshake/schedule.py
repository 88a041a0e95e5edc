"""TLS 1.3 key schedule with the KEM secrets replacing the DH share.

The handshake secret is HKDF-Extract(derived, eph || ss_s || ss_c); ss_c is
omitted in the unilateral-authentication setting. Everything downstream of
the handshake secret follows the standard schedule: handshake traffic secrets
bind th1 (hash through ServerHello), application traffic secrets bind th2
(hash through ServerFinished). There is no PSK mode; the early-secret input
is fixed to zeros.
"""

from __future__ import annotations

import hmac as _hmac

from ..hkdf import ZEROS, hkdf_expand_label, hkdf_extract, hmac_sha256

LABEL_DERIVED = b"derived"
LABEL_C_HS_TRAFFIC = b"c hs traffic"
LABEL_S_HS_TRAFFIC = b"s hs traffic"
LABEL_FINISHED = b"finished"
LABEL_C_AP_TRAFFIC = b"c ap traffic"
LABEL_S_AP_TRAFFIC = b"s ap traffic"


class ScheduleOrderError(Exception):
    """A schedule value was requested before its inputs were derived."""


class KeySchedule:
    def __init__(self) -> None:
        self.early_secret: bytes | None = None
        self.derived_secret: bytes | None = None
        self.handshake_secret: bytes | None = None
        self.client_hs_traffic_secret: bytes | None = None
        self.server_hs_traffic_secret: bytes | None = None
        self.client_finished_key: bytes | None = None
        self.server_finished_key: bytes | None = None
        self.master_secret: bytes | None = None
        self.client_app_traffic_secret_0: bytes | None = None
        self.server_app_traffic_secret_0: bytes | None = None
        self.th1: bytes | None = None
        self.th2: bytes | None = None

    def derive_early(self) -> None:
        self.early_secret = hkdf_extract(ZEROS, ZEROS)  # PSK fixed to zeros
        self.derived_secret = hkdf_expand_label(self.early_secret, LABEL_DERIVED, b"")

    def derive_handshake(self, eph: bytes, ss_s: bytes, ss_c: bytes | None = None) -> bytes:
        if self.derived_secret is None:
            raise ScheduleOrderError("derive_early must run first")
        if not eph or not ss_s:
            raise ValueError("eph and ss_s are required inputs")
        ikm = eph + ss_s + (ss_c if ss_c is not None else b"")
        self.handshake_secret = hkdf_extract(self.derived_secret, ikm)
        return self.handshake_secret

    def derive_handshake_traffic(self, th1: bytes) -> None:
        if self.handshake_secret is None:
            raise ScheduleOrderError("handshake secret not derived")
        self.th1 = th1
        self.client_hs_traffic_secret = hkdf_expand_label(
            self.handshake_secret, LABEL_C_HS_TRAFFIC, th1
        )
        self.server_hs_traffic_secret = hkdf_expand_label(
            self.handshake_secret, LABEL_S_HS_TRAFFIC, th1
        )
        self.client_finished_key = hkdf_expand_label(
            self.client_hs_traffic_secret, LABEL_FINISHED, b""
        )
        self.server_finished_key = hkdf_expand_label(
            self.server_hs_traffic_secret, LABEL_FINISHED, b""
        )

    def derive_application(self, th2: bytes) -> None:
        if self.client_hs_traffic_secret is None:
            raise ScheduleOrderError("handshake traffic secrets not derived")
        self.th2 = th2
        derived = hkdf_expand_label(self.handshake_secret, LABEL_DERIVED, b"")
        self.master_secret = hkdf_extract(derived, ZEROS)
        self.client_app_traffic_secret_0 = hkdf_expand_label(
            self.master_secret, LABEL_C_AP_TRAFFIC, th2
        )
        self.server_app_traffic_secret_0 = hkdf_expand_label(
            self.master_secret, LABEL_S_AP_TRAFFIC, th2
        )


def compute_finished(finished_key: bytes, transcript_hash: bytes) -> bytes:
    return hmac_sha256(finished_key, transcript_hash)


def verify_finished(finished_key: bytes, transcript_hash: bytes, verify_data: bytes) -> bool:
    return _hmac.compare_digest(compute_finished(finished_key, transcript_hash), verify_data)
