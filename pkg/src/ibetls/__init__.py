"""Certificate-free, identity-based TLS for private distributed systems.

Subpackages:

- ``ibetls.kem``       identity-based KEM (setup/extract/encaps/decaps) plus the
  unauthenticated ephemeral KEM used for forward secrecy
- ``ibetls.tpkg``      threshold private key generator: share-split master seed,
  identity issuance workflow, append-only registry
- ``ibetls.handshake`` IBE-TLS 1.3 state machines, extension codecs, key schedule,
  record layer
- ``ibetls.simnet``    scenario harness for the 5G core and Kubernetes flows
- ``ibetls.metrics``   handshake instrumentation and comparison reporting
- ``ibetls.cli``       operator command surface
"""

__version__ = "0.1.0"
