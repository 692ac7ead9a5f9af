"""Value normalizers: raw evidence cells -> canonical attribute values.

Canonical forms:
- timestamps: integer UTC epoch seconds
- ipv4: four decimal octets, no leading zeros
- mac: six lowercase hex pairs joined by colons
- ports: int in [0, 65535]; service names resolve via the bundled table
- sizes: non-negative integer bytes (decimal SI units by default)
- identities / protocols / hosts: trimmed, case-folded text
"""

from __future__ import annotations

import json
import re
from datetime import datetime, timezone
from importlib import resources
from typing import Optional

from .types import AttributeKind, BadIdentity, BadSize, BadTimestamp

DEFAULT_TIMESTAMP_FORMAT = "%d/%m/%Y %H:%M:%S"

_SIZE_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([KMGT]?B)?\s*$", re.IGNORECASE)
_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}([:-][0-9a-fA-F]{2}){5}$")

_SI_UNITS = {"B": 1, "KB": 10**3, "MB": 10**6, "GB": 10**9, "TB": 10**12}
_BINARY_UNITS = {"B": 1, "KB": 2**10, "MB": 2**20, "GB": 2**30, "TB": 2**40}


def _load_services() -> dict:
    with resources.files("evigraph.data").joinpath("services.json").open("r") as fh:
        return {k.lower(): int(v) for k, v in json.load(fh).items()}


_SERVICES: Optional[dict] = None


def service_port(name: str) -> Optional[int]:
    """Resolve a well-known service name ("ssh") to its port, or None."""
    global _SERVICES
    if _SERVICES is None:
        _SERVICES = _load_services()
    return _SERVICES.get(name.strip().lower())


def normalize_timestamp(text: str, fmt: str = DEFAULT_TIMESTAMP_FORMAT,
                        utc_offset_minutes: int = 0) -> int:
    """Parse a source-local timestamp into UTC epoch seconds.

    Source data is treated as UTC unless the source declares an offset.
    Day/month may be single- or double-digit; strptime accepts both.
    """
    text = text.strip()
    if not text:
        raise BadTimestamp("empty timestamp")
    try:
        dt = datetime.strptime(text, fmt)
    except ValueError as exc:
        raise BadTimestamp(f"{text!r} does not match {fmt!r}: {exc}") from exc
    dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp()) - utc_offset_minutes * 60


def format_timestamp(epoch: int) -> str:
    """Inverse of normalize_timestamp for the default pattern (zero-padded)."""
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%d/%m/%Y %H:%M:%S")


def format_date(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%d/%m/%Y")


def format_time(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%H:%M:%S")


def normalize_size(text: str, binary_units: bool = False) -> int:
    """Parse "4.2 GB" style sizes into integer bytes (decimal SI by default)."""
    m = _SIZE_RE.match(text if isinstance(text, str) else str(text))
    if not m:
        raise BadSize(f"unparseable size {text!r}")
    magnitude = float(m.group(1))
    unit = (m.group(2) or "B").upper()
    table = _BINARY_UNITS if binary_units else _SI_UNITS
    value = int(round(magnitude * table[unit]))
    if value < 0:
        raise BadSize(f"negative size {text!r}")
    return value


def format_size(nbytes: int) -> str:
    for unit in ("TB", "GB", "MB", "KB"):
        if nbytes >= _SI_UNITS[unit] and nbytes % _SI_UNITS[unit] == 0:
            return f"{nbytes // _SI_UNITS[unit]} {unit}"
    return f"{nbytes} B"


def normalize_identity(text: str) -> str:
    """Trim + case-fold a username; raises BadIdentity on empty input."""
    out = text.strip().casefold()
    if not out:
        raise BadIdentity("empty identity")
    return out


def extract_email_localpart(email: str) -> str:
    """Local part of an email address, normalized as a username."""
    local = email.strip().split("@", 1)[0]
    return normalize_identity(local)


def normalize_ipv4(text: str) -> Optional[str]:
    parts = text.strip().split(".")
    if len(parts) != 4:
        return None
    octets = []
    for p in parts:
        if not p.isdigit() or (len(p) > 1 and p[0] == "0") or len(p) > 3:
            return None
        n = int(p)
        if n > 255:
            return None
        octets.append(str(n))
    return ".".join(octets)


def normalize_mac(text: str) -> Optional[str]:
    text = text.strip()
    if not _MAC_RE.match(text):
        return None
    return text.lower().replace("-", ":")


def normalize_port(text: str) -> Optional[int]:
    """Port number or well-known service name -> int, None if unresolvable."""
    text = text.strip()
    if text.isdigit():
        n = int(text)
        return n if 0 <= n <= 65535 else None
    return service_port(text)


def normalize_protocol(text: str) -> str:
    return text.strip().lower()


def normalize_text(text: str) -> str:
    return text.strip().casefold()


def normalize_cell(kind: AttributeKind, text: str, timestamp_format: str,
                   utc_offset_minutes: int = 0):
    """Normalize one cell for the given attribute kind.

    Returns the canonical value, or raises ValueError-family on failure
    (BadTimestamp/BadSize/BadIdentity or plain ValueError for address kinds).
    """
    if kind == AttributeKind.TIMESTAMP:
        return normalize_timestamp(text, timestamp_format, utc_offset_minutes)
    if kind == AttributeKind.IPV4:
        v = normalize_ipv4(text)
        if v is None:
            raise ValueError(f"bad ipv4 {text!r}")
        return v
    if kind == AttributeKind.MAC:
        v = normalize_mac(text)
        if v is None:
            raise ValueError(f"bad mac {text!r}")
        return v
    if kind == AttributeKind.PORT:
        v = normalize_port(text)
        if v is None:
            raise ValueError(f"bad port {text!r}")
        return v
    if kind == AttributeKind.FILE_SIZE:
        return normalize_size(text)
    if kind in (AttributeKind.USERNAME, AttributeKind.APPLICATION_NAME,
                AttributeKind.PROCESS_NAME):
        return normalize_identity(text)
    if kind == AttributeKind.EMAIL:
        v = text.strip().lower()
        if "@" not in v:
            raise ValueError(f"bad email {text!r}")
        return v
    if kind in (AttributeKind.PROTOCOL, AttributeKind.CONNECTION_STATE,
                AttributeKind.EVENT_TYPE, AttributeKind.HOST,
                AttributeKind.DEVICE_NAME, AttributeKind.URL):
        v = normalize_text(text)
        if not v:
            raise ValueError(f"empty {kind.value}")
        return v
    # file_name, geolocation, free_text: trimmed, case preserved
    v = text.strip()
    if not v:
        raise ValueError(f"empty {kind.value}")
    return v


def render_value(kind: AttributeKind, value) -> str:
    """Human-readable rendering of a canonical value (timeline / export)."""
    if kind == AttributeKind.TIMESTAMP:
        return format_timestamp(int(value))
    if kind == AttributeKind.FILE_SIZE:
        return format_size(int(value))
    return str(value)
