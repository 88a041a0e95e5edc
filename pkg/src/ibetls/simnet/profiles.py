"""Identity profile builders for the two deployment shapes."""

from __future__ import annotations

from ..kem import IdentityString


def k8s_identity(cluster: str, namespace: str, service: str, epoch: str) -> IdentityString:
    """cluster-name || namespace || service || epoch, dot-separated."""
    return IdentityString((cluster, namespace, service, epoch))


def nf_identity(plmn: str, nf_type: str, instance: str, epoch: str) -> IdentityString:
    """PLMN-ID || NF-Type || NF-Instance-ID || Epoch, dot-separated."""
    return IdentityString((plmn, nf_type, instance, epoch))


def component_identity(name: str, epoch: str) -> IdentityString:
    """Control-plane component identity, e.g. kubelet:node-01 plus epoch."""
    return IdentityString((name, epoch))
