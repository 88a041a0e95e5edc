"""IBE-TLS 1.3: handshake state machines, codecs, key schedule, record layer."""

from .record import DirectionKeys, RecordAuthError, open_record, seal_record
from .schedule import KeySchedule, ScheduleOrderError, compute_finished, verify_finished
from .session import ClientSession, InvalidState, ServerSession, State, message_name
from .wire import (
    EXT_IBE_IDENTITY,
    EXT_IBE_IDENTITY_AUTH,
    AlertCode,
    ClientHello,
    ContentType,
    EncryptedExtensions,
    Extension,
    Finished,
    HandshakeType,
    HelloRetryRequest,
    IbeIdentity,
    IbeIdentityAuth,
    ServerHello,
    alert_record,
    decode_extension,
    record,
    split_record,
    unframe,
)

__all__ = [
    "ClientSession",
    "ServerSession",
    "State",
    "InvalidState",
    "KeySchedule",
    "ScheduleOrderError",
    "compute_finished",
    "verify_finished",
    "DirectionKeys",
    "RecordAuthError",
    "seal_record",
    "open_record",
    "AlertCode",
    "ContentType",
    "HandshakeType",
    "Extension",
    "IbeIdentity",
    "IbeIdentityAuth",
    "ClientHello",
    "ServerHello",
    "HelloRetryRequest",
    "EncryptedExtensions",
    "Finished",
    "EXT_IBE_IDENTITY",
    "EXT_IBE_IDENTITY_AUTH",
    "alert_record",
    "record",
    "split_record",
    "unframe",
    "decode_extension",
    "message_name",
]
