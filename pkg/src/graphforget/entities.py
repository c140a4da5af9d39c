"""Deterministic, seeded generation of entity names, addresses, dates, and term values.

Every value is drawn from a child RNG keyed by (master seed, stable
identifier path), never by stream position, so regenerating any one item is
independent of all others and whole datasets are byte-reproducible.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import string
from dataclasses import dataclass
from importlib import resources
from random import Random

from .errors import InvalidParameterError
from .graphs import NodeKind

_MASK64 = (1 << 64) - 1


def _load_lexicons() -> dict:
    with resources.files("graphforget.fixtures").joinpath("lexicons.json").open("r") as fh:
        return json.load(fh)


LEXICONS = _load_lexicons()

DATE_RANGE = (datetime.date(2010, 1, 1), datetime.date(2023, 12, 31))


@dataclass(frozen=True)
class Seed:
    """Master seed; equal seeds yield byte-identical datasets."""

    master: int

    def __post_init__(self):
        if not 0 <= self.master <= _MASK64:
            raise InvalidParameterError("master seed must fit in 64 unsigned bits")


def child_seed(master: int | Seed, *path: str | int) -> int:
    """Derive a 64-bit child seed from the master and a stable identifier path.

    Hash-based (not stream-based) so generation order never matters.
    """
    if isinstance(master, Seed):
        master = master.master
    h = hashlib.blake2b(digest_size=8)
    h.update(master.to_bytes(8, "little"))
    for part in path:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def child_rng(master: int | Seed, *path: str | int) -> Random:
    return Random(child_seed(master, *path))


def _letters(rng: Random, n: int) -> str:
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(n))


def gen_company_name(rng: Random) -> str:
    """Capitalized 6-letter word plus a company suffix, e.g. 'Qzvbym LLC'."""
    word = _letters(rng, 6).capitalize()
    return f"{word} {rng.choice(LEXICONS['company_suffixes'])}"


def gen_person_name(rng: Random) -> str:
    """Two capitalized 4-letter words, e.g. 'Wxyz Abcd'."""
    first = _letters(rng, 4).capitalize()
    last = _letters(rng, 4).capitalize()
    return f"{first} {last}"


def gen_address(rng: Random) -> str:
    """3-digit number, capitalized 6-letter street name, and a street type."""
    number = rng.randint(100, 999)
    street = _letters(rng, 6).capitalize()
    return f"{number} {street} {rng.choice(LEXICONS['street_types'])}"


def gen_date(rng: Random) -> str:
    lo, hi = DATE_RANGE
    offset = rng.randint(0, (hi - lo).days)
    return (lo + datetime.timedelta(days=offset)).isoformat()


@dataclass(frozen=True)
class EntityProfile:
    kind: NodeKind
    name: str
    address: str


def gen_profile(kind: NodeKind, rng: Random) -> EntityProfile:
    name = gen_company_name(rng) if kind is NodeKind.COMPANY else gen_person_name(rng)
    return EntityProfile(kind=kind, name=name, address=gen_address(rng))


MAX_NAME_RETRIES = 64


def gen_unique_profiles(master: int | Seed, nodes: list[tuple[str, NodeKind]]) -> dict[str, EntityProfile]:
    """One profile per node label, with globally unique names.

    On a name collision the colliding node is regenerated with a retry
    counter folded into its seed path, so other nodes are unaffected.
    """
    profiles: dict[str, EntityProfile] = {}
    names: set[str] = set()
    for label, kind in nodes:
        for retry in range(MAX_NAME_RETRIES):
            profile = gen_profile(kind, child_rng(master, "entity", label, retry))
            if profile.name not in names:
                break
        else:
            raise InvalidParameterError(f"could not find a unique name for node {label!r} "
                                        f"after {MAX_NAME_RETRIES} retries")
        names.add(profile.name)
        profiles[label] = profile
    return profiles


@dataclass(frozen=True)
class TermValue:
    slot: str
    kind: str
    value: str


# Value domains per slot.  The ranges are closed integer intervals; enum
# slots draw from the lexicon lists above.
_INT_RANGES = {
    "invoice_days": (5, 60),
    "payment_days": (5, 60),
    "penalty_after_days": (5, 60),
    "defect_notice_days": (5, 60),
    "cooling_off_days": (7, 30),
    "warranty_years": (1, 5),
    "late_payment_rate": (1, 10),
    "quantity": (10, 5000),
    "unit_price": (1, 500),
    "hourly_pay": (15, 95),
    "employment_months": (6, 36),
    "holiday_days": (10, 30),
    "sick_leave_days": (5, 20),
    "confidentiality_months": (6, 36),
    "non_compete_months": (6, 24),
    "termination_notice_weeks": (1, 8),
    "change_notice_weeks": (1, 8),
}

_ENUM_SOURCES = {
    "goods": "goods",
    "position": "positions",
    "benefit": "benefits",
    "payment_frequency": "payment_frequencies",
    "shipping_decider": "shipping_roles",
    "shipping_cost_bearer": "shipping_roles",
    "governing_law": "us_states",
}

_DATE_SLOTS = {"effective_date", "start_date"}
_ADDRESS_SLOTS = {"delivery_address", "work_location"}
# Derived slots are computed from their source slots, never drawn.
DERIVED_SLOTS = {"total_price", "workday_finish_hour"}
_COPIED_SLOTS = {
    "seller_name", "seller_address", "customer_name", "customer_address",
    "employer_name", "employer_address", "employee_name", "employee_address",
}


def known_slot(slot: str) -> bool:
    return (
        slot in _INT_RANGES
        or slot in _ENUM_SOURCES
        or slot in _DATE_SLOTS
        or slot in _ADDRESS_SLOTS
        or slot in DERIVED_SLOTS
        or slot in _COPIED_SLOTS
        or slot == "workday_start_hour"
    )


def gen_term(slot: str, kind: str, rng: Random) -> TermValue:
    """Draw one attribute value uniformly from the slot's documented domain."""
    if slot in _INT_RANGES:
        lo, hi = _INT_RANGES[slot]
        n = rng.randint(lo, hi)
        value = f"{n}%" if kind == "percent" else str(n)
    elif slot in _ENUM_SOURCES:
        value = rng.choice(LEXICONS[_ENUM_SOURCES[slot]])
    elif slot in _DATE_SLOTS:
        value = gen_date(rng)
    elif slot in _ADDRESS_SLOTS:
        value = gen_address(rng)
    elif slot == "workday_start_hour":
        value = str(rng.randint(7, 10))
    else:
        raise InvalidParameterError(f"unknown or non-drawable slot {slot!r}")
    return TermValue(slot=slot, kind=kind, value=value)
