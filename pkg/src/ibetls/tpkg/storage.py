"""On-disk layout for a trust domain.

domain-dir/
    mpk.bin            master public key (the trust anchor)
    policy.json        issuer policy, rewritten on change
    registry.jsonl     append-only hash chain
    shares/node-<i>.json   one Shamir share per T-PKG node

Identity private keys are never written here; delivery is wire-only.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..kem import decode_master_public, encode_master_public
from .registry import Registry
from .service import IdentityRequest, IssuerPolicy, TpkgService
from .shamir import Share, ShareSet


def save_domain(directory: Path, service: TpkgService, share_set: ShareSet) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "mpk.bin").write_bytes(encode_master_public(service.mpk))
    save_policy(directory, service.policy)
    shares_dir = directory / "shares"
    shares_dir.mkdir(exist_ok=True)
    for share in share_set.shares:
        (shares_dir / f"node-{share.index}.json").write_text(
            json.dumps(share.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    if service.registry.path is None:
        # rewrite the chain to its canonical file once
        path = directory / "registry.jsonl"
        with open(path, "w", encoding="utf-8") as sink:
            for record in service.registry.records:
                sink.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        service.registry.path = path


def save_policy(directory: Path, policy: IssuerPolicy) -> None:
    (Path(directory) / "policy.json").write_text(
        json.dumps(policy.to_dict(), indent=2) + "\n", encoding="utf-8"
    )


def save_requests(directory: Path, service: TpkgService) -> None:
    (Path(directory) / "requests.json").write_text(
        json.dumps([r.to_dict() for r in service.list_requests()], indent=2) + "\n",
        encoding="utf-8",
    )


def save_state(directory: Path, service: TpkgService) -> None:
    """Persist the mutable pieces after a workflow command."""
    save_policy(directory, service.policy)
    save_requests(directory, service)


def load_domain(directory: Path, authenticator=None, clock=None) -> TpkgService:
    directory = Path(directory)
    mpk = decode_master_public((directory / "mpk.bin").read_bytes())
    policy = IssuerPolicy.from_dict(json.loads((directory / "policy.json").read_text()))
    registry = Registry.load(policy.trust_domain, directory / "registry.jsonl")
    service = TpkgService(params=mpk.params, mpk=mpk, policy=policy, registry=registry,
                          authenticator=authenticator, clock=clock)
    requests_path = directory / "requests.json"
    if requests_path.exists():
        for doc in json.loads(requests_path.read_text()):
            request = IdentityRequest.from_dict(doc)
            service.requests[request.name] = request
        if service.requests:
            service._request_counter = max(
                int(name.split("-")[1]) for name in service.requests
            )
    return service


def load_shares(directory: Path, count: int | None = None) -> list[Share]:
    shares_dir = Path(directory) / "shares"
    shares = []
    for path in sorted(shares_dir.glob("node-*.json")):
        shares.append(Share.from_dict(json.loads(path.read_text())))
        if count is not None and len(shares) >= count:
            break
    return shares


def load_readable_shares(directory: Path) -> list[Share]:
    """Like load_shares, but skips unreadable or corrupt share files."""
    shares_dir = Path(directory) / "shares"
    if not shares_dir.is_dir():
        return []
    shares = []
    for path in sorted(shares_dir.glob("node-*.json")):
        try:
            shares.append(Share.from_dict(json.loads(path.read_text())))
        except (OSError, ValueError, KeyError):
            continue
    return shares


def readable_share_count(directory: Path) -> int:
    return len(load_readable_shares(directory))
