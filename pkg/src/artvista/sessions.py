"""Live painting sessions: per-region fill state and progress tracking.

A fill records what the painter chose, even when it is the wrong color;
`matches_template` flags whether it agrees with the region's printed
number, and only matching fills count toward progress. This keeps the
wrong-color case visible to UIs instead of rejecting it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .regionizer import PbnTemplate


@dataclass(frozen=True)
class Fill:
    number: int
    matches_template: bool


@dataclass(frozen=True)
class PaintSession:
    id: str
    template_id: str
    fills: dict[int, Fill]
    created_at: float
    updated_at: float
    progress: float

    @classmethod
    def new(cls, session_id: str, template_id: str, now: float | None = None) -> "PaintSession":
        ts = time.time() if now is None else now
        return cls(
            id=session_id,
            template_id=template_id,
            fills={},
            created_at=ts,
            updated_at=ts,
            progress=0.0,
        )


def apply_fill(
    session: PaintSession,
    template: PbnTemplate,
    region_id: int,
    palette_number: int,
    now: float | None = None,
) -> PaintSession:
    """Record a fill (overwriting any prior fill of that region) and
    recompute progress. Raises ValueError for unknown regions or numbers."""
    by_id = {r.id: r for r in template.regions}
    if region_id not in by_id:
        raise ValueError(f"unknown region id {region_id}")
    if not 1 <= palette_number <= len(template.palette.entries):
        raise ValueError(
            f"palette number {palette_number} out of range 1..{len(template.palette.entries)}"
        )
    fills = dict(session.fills)
    fills[region_id] = Fill(
        number=palette_number,
        matches_template=palette_number == by_id[region_id].number,
    )
    matched = sum(1 for f in fills.values() if f.matches_template)
    return replace(
        session,
        fills=fills,
        progress=matched / len(template.regions),
        updated_at=time.time() if now is None else now,
    )


def session_to_document(s: PaintSession) -> dict:
    return {
        "id": s.id,
        "template_id": s.template_id,
        "fills": {
            str(rid): {"number": f.number, "matches_template": f.matches_template}
            for rid, f in sorted(s.fills.items())
        },
        "created_at": round(s.created_at, 3),
        "updated_at": round(s.updated_at, 3),
        "progress": round(s.progress, 6),
    }


def session_from_document(doc: dict) -> PaintSession:
    return PaintSession(
        id=str(doc["id"]),
        template_id=str(doc["template_id"]),
        fills={
            int(rid): Fill(number=int(f["number"]), matches_template=bool(f["matches_template"]))
            for rid, f in doc["fills"].items()
        },
        created_at=float(doc["created_at"]),
        updated_at=float(doc["updated_at"]),
        progress=float(doc["progress"]),
    )
