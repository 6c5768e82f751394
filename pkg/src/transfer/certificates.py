"""
Bound certificates and their text / CSV serialisation
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd

import sys
sys.path.append('src')

from geometry.domains import DomainSpec
from utils.errors import ValidityError

logger = logging.getLogger(__name__)

LOWER = "lower"
UPPER = "upper"

RIGOROUS = "rigorous"
PAPER_PRINTED = "paper-printed"

THEOREM_A = "theorem-A"
THEOREM_B = "theorem-B"
THEOREM_C = "theorem-C"
P_LAPLACE_PP = "p-laplace-pp"
P_LAPLACE_RP = "p-laplace-rp"
PAYNE_WEINBERGER = "payne-weinberger"
SZEGO_WEINBERGER = "szego-weinberger"

CSV_COLUMNS = [
    "domain", "method", "variant", "p", "r", "a", "K", "M", "B",
    "base", "bound", "upper_bound", "warnings",
]

FLOAT_FORMAT = "%.17g"


@dataclass
class BoundCertificate:
    """
    An eigenvalue bound with the ledger of constants that produced it.

    Ledger keys: K, M, B, base (the constants), p, r, a (the parameters)
    and optional K_pow, M_pow, route, base_source, payne_weinberger.
    Only the keys a route uses are present.
    """

    target_domain: Optional[DomainSpec]
    bound_value: float
    direction: str
    method: str
    ledger: Dict[str, Union[float, str]] = field(default_factory=dict)
    variant: str = RIGOROUS
    notes: List[str] = field(default_factory=list)
    upper_bound: float = math.nan

    def __post_init__(self):
        if not (self.bound_value > 0 and math.isfinite(self.bound_value)):
            raise ValidityError(f"{self.method} bound is not finite positive: {self.bound_value}")
        for key, value in self.ledger.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ValidityError(f"ledger constant {key} is not finite")

    def warn(self, note: str) -> None:
        logger.warning("%s: %s", self.method, note)
        self.notes.append(note)

    def to_row(self) -> Dict[str, Union[float, str]]:
        row: Dict[str, Union[float, str]] = {
            "domain": self.target_domain.label() if self.target_domain is not None else "",
            "method": self.method,
            "variant": self.variant,
        }
        for key in ("p", "r", "a", "K", "M", "B", "base"):
            row[key] = self.ledger.get(key, math.nan)
        row["bound"] = self.bound_value
        row["upper_bound"] = self.upper_bound
        row["warnings"] = "; ".join(self.notes)
        return row


def certificate_to_text(cert: BoundCertificate) -> str:
    """Line-oriented key=value block"""
    lines = [
        f"domain={cert.target_domain.label() if cert.target_domain is not None else ''}",
        f"direction={cert.direction}",
        f"method={cert.method}",
        f"variant={cert.variant}",
        f"bound={cert.bound_value!r}",
    ]
    if not math.isnan(cert.upper_bound):
        lines.append(f"upper_bound={cert.upper_bound!r}")
    for key in sorted(cert.ledger):
        lines.append(f"{key}={cert.ledger[key]!r}" if isinstance(cert.ledger[key], float)
                     else f"{key}={cert.ledger[key]}")
    lines.append("warnings=" + "; ".join(cert.notes))
    return "\n".join(lines) + "\n"


def certificates_to_frame(certs: Sequence[BoundCertificate]) -> pd.DataFrame:
    return pd.DataFrame([c.to_row() for c in certs], columns=CSV_COLUMNS)


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_certificates(certs: Sequence[BoundCertificate], path: Optional[Union[str, Path]] = None,
                       fmt: str = "csv") -> str:
    """
    Serialise certificates.

    Args:
        certs: Certificates in output order
        path: Destination file; nothing is written when None
        fmt: csv or text

    Returns:
        The serialised content
    """
    if fmt == "csv":
        content = frame_to_csv(certificates_to_frame(certs))
    elif fmt == "text":
        content = "\n".join(certificate_to_text(c) for c in certs)
    else:
        raise ValidityError(f"unknown output format: {fmt}")
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(content, encoding="utf-8")
        logger.info("wrote %d certificate(s) to %s", len(certs), path)
    return content
