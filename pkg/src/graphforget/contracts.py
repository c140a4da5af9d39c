"""Contract schemas (20 attribute slots each) and their QA renderings.

The 20 QA questions per domain are the canonical slot set; each filled
contract yields exactly one QA pair per slot, with the bare attribute value
as the answer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from random import Random

from .entities import EntityProfile, TermValue, child_rng, gen_term
from .errors import InvalidParameterError
from .graphs import ContractDomain, Edge, NodeKind


@dataclass(frozen=True)
class SlotSpec:
    slot: str
    kind: str
    question: str


@dataclass(frozen=True)
class AttributeSchema:
    domain: ContractDomain
    slots: tuple[SlotSpec, ...]

    def slot_ids(self) -> list[str]:
        return [s.slot for s in self.slots]

    def index_of(self, slot: str) -> int:
        for i, s in enumerate(self.slots):
            if s.slot == slot:
                return i
        raise InvalidParameterError(f"unknown slot {slot!r} for domain {self.domain.value}")


def _load_schemas() -> dict[ContractDomain, AttributeSchema]:
    with resources.files("graphforget.fixtures").joinpath("question_templates.json").open("r") as fh:
        data = json.load(fh)
    out = {}
    for domain in ContractDomain:
        slots = tuple(SlotSpec(d["slot"], d["kind"], d["question"]) for d in data[domain.value])
        if len(slots) != 20:
            raise InvalidParameterError(f"{domain.value} schema must have 20 slots, found {len(slots)}")
        out[domain] = AttributeSchema(domain=domain, slots=slots)
    return out


_SCHEMAS = _load_schemas()


def schema(domain: ContractDomain) -> AttributeSchema:
    """The 20-slot attribute schema (with question templates) for a domain."""
    return _SCHEMAS[domain]


# Slot ids are disjoint across the two domains except governing_law, which
# sits at the same index in both, so id -> index is a single table.
_SLOT_POSITIONS: dict[str, int] = {}
for _domain in ContractDomain:
    for _i, _spec in enumerate(_SCHEMAS[_domain].slots):
        _SLOT_POSITIONS[_spec.slot] = _i


def slot_position(slot: str) -> int:
    """Index (0-19) of a slot id, or of a bare digit string."""
    if slot.isdigit():
        position = int(slot)
        if not 0 <= position < 20:
            raise InvalidParameterError(f"slot index {slot} outside 0-19")
        return position
    try:
        return _SLOT_POSITIONS[slot]
    except KeyError:
        raise InvalidParameterError(f"unknown slot {slot!r}") from None


@dataclass(frozen=True)
class ContractRecord:
    edge_label: str
    domain: ContractDomain
    parties: tuple[EntityProfile, EntityProfile]
    attributes: tuple[TermValue, ...]

    def value(self, slot: str) -> str:
        for term in self.attributes:
            if term.slot == slot:
                return term.value
        raise InvalidParameterError(f"contract {self.edge_label} has no slot {slot!r}")


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str
    edge: str
    slot: str


def _ordered_parties(edge: Edge, parties: tuple[EntityProfile, EntityProfile]) -> tuple[EntityProfile, EntityProfile]:
    """Sales: (seller, customer) in endpoint order.  Employment: (employer, employee)."""
    first, second = parties
    if edge.domain is ContractDomain.SALES_OF_GOODS:
        if first.kind is not NodeKind.COMPANY or second.kind is not NodeKind.COMPANY:
            raise InvalidParameterError(f"sales contract {edge.label} needs two company parties")
        return first, second
    kinds = (first.kind, second.kind)
    if sorted(k.value for k in kinds) != ["company", "person"]:
        raise InvalidParameterError(f"employment contract {edge.label} needs one company and one person")
    return (first, second) if first.kind is NodeKind.COMPANY else (second, first)


def fill_contract(edge: Edge, parties: tuple[EntityProfile, EntityProfile], master: int,
                  rng_path: tuple = ()) -> ContractRecord:
    """Fill all 20 slots of the edge's contract.

    Party name/address slots are copied from the profiles; drawable slots
    come from per-(edge, slot) child RNGs; derived slots (total price,
    workday finish hour) are computed so the contract is self-consistent.
    """
    first, second = _ordered_parties(edge, parties)
    sch = schema(edge.domain)

    copied = {
        "seller_name": first.name, "seller_address": first.address,
        "customer_name": second.name, "customer_address": second.address,
        "employer_name": first.name, "employer_address": first.address,
        "employee_name": second.name, "employee_address": second.address,
    }

    values: dict[str, TermValue] = {}
    for spec in sch.slots:
        if spec.slot in copied:
            values[spec.slot] = TermValue(spec.slot, spec.kind, copied[spec.slot])
        elif spec.slot == "total_price":
            total = int(values["quantity"].value) * int(values["unit_price"].value)
            values[spec.slot] = TermValue(spec.slot, spec.kind, str(total))
        elif spec.slot == "workday_finish_hour":
            values[spec.slot] = TermValue(spec.slot, spec.kind,
                                          str(int(values["workday_start_hour"].value) + 8))
        else:
            rng = child_rng(master, *rng_path, "contract", edge.label, spec.slot)
            values[spec.slot] = gen_term(spec.slot, spec.kind, rng)

    return ContractRecord(
        edge_label=edge.label,
        domain=edge.domain,
        parties=(first, second),
        attributes=tuple(values[s.slot] for s in sch.slots),
    )


def _placeholders(contract: ContractRecord) -> dict[str, str]:
    first, second = contract.parties
    if contract.domain is ContractDomain.SALES_OF_GOODS:
        return {
            "{seller name}": first.name,
            "{customer name}": second.name,
            "{effective date}": contract.value("effective_date"),
        }
    return {
        "{employer name}": first.name,
        "{employee name}": second.name,
        "{start date}": contract.value("start_date"),
    }


def render_qa(contract: ContractRecord) -> list[QAPair]:
    """One QA pair per slot; the answer is the attribute value verbatim."""
    subs = _placeholders(contract)
    pairs = []
    for spec, term in zip(schema(contract.domain).slots, contract.attributes):
        question = spec.question
        for key, val in subs.items():
            question = question.replace(key, val)
        pairs.append(QAPair(question=question, answer=term.value,
                            edge=contract.edge_label, slot=term.slot))
    return pairs


_SALES_TEXT = """SALES OF GOODS CONTRACT

1. PARTIES. This Sales Contract is entered into on {effective_date} (the "Effective Date") by and between {seller_name} with an address of {seller_address} (the "Seller") and {customer_name} with an address of {customer_address} (the "Customer").

2. GOODS AND PRICE. The Seller is selling the following goods to the Customer: {goods}. Quantity: {quantity}. Price per unit: {unit_price} dollars. Total price: {total_price} dollars.

3. PAYMENTS. The Seller shall provide the Customer with an invoice no later than {invoice_days} days after the time of the delivery. All invoices are to be paid in full within {payment_days} days. Any balances not paid within {penalty_after_days} days will be subject to a {late_payment_rate} late payment penalty.

4. DELIVERY AND SHIPPING. The delivery of the goods will be at {delivery_address}. The shipping method will be decided by the {shipping_decider}. The {shipping_cost_bearer} will be responsible for the costs of the shipment.

5. WARRANTIES. The Seller warrants the goods against defects in materials and workmanship under normal use for a period of {warranty_years} years from the date of delivery. In the event of a breach of this warranty, the Customer must notify the Seller in writing within {defect_notice_days} days of discovering the defect.

6. COOLING-OFF PERIOD. Either Party may terminate this Agreement, for any reason, within {cooling_off_days} days following the Effective Date.

7. GOVERNING LAW. This Agreement shall be governed by and construed in accordance with the laws of {governing_law}."""

_EMPLOYMENT_TEXT = """EMPLOYMENT CONTRACT

1. PARTIES. {employer_name} (the "Employer") with its principal place of business located at {employer_address} agrees to employ {employee_name} (the "Employee") who lives at {employee_address}.

2. START AND LENGTH OF EMPLOYMENT. The Employee will start employment on {start_date} (the "Start Date"). The Employer shall employ the Employee for {employment_months} months.

3. JOB TITLE AND PLACE OF WORK. The Employee shall be employed as {position} and shall work at {work_location}.

4. WORKING HOURS. The Employee's normal hours of work are {workday_start_hour} to {workday_finish_hour}, Monday to Friday.

5. PAY. The Employer shall pay the Employee {hourly_pay} dollars per hour, in {payment_frequency} instalments.

6. BENEFITS AND HOLIDAYS. The Employee shall be entitled to participate in {benefit} offered by the Employer, and shall receive {holiday_days} days of paid holiday leave per year.

7. CONFIDENTIALITY. For the first {confidentiality_months} months after the employment ends, the Employee will not disclose any confidential information pertaining to the business of the Employer.

8. SICK PAY. In each year of employment the Employee is entitled to paid sick leave for the first {sick_leave_days} days of absence due to sickness or injury.

9. TERMINATION. The Employee and Employer shall each provide the other with {termination_notice_weeks} weeks' written notice of termination.

10. NON-COMPETE. For {non_compete_months} months after the termination of employment, the Employee agrees not to engage in business activities that directly compete with the Employer.

11. CHANGES TO EMPLOYMENT TERMS. The Employer shall provide {change_notice_weeks} weeks' written notice of any proposed changes to this Agreement.

12. GOVERNING LAW. This Agreement shall be governed by and construed in accordance with the laws of {governing_law}."""


def render_contract_text(contract: ContractRecord) -> str:
    """Optional plain-text contract rendering (for fine-tuning corpora)."""
    template = _SALES_TEXT if contract.domain is ContractDomain.SALES_OF_GOODS else _EMPLOYMENT_TEXT
    return template.format(**{t.slot: t.value for t in contract.attributes})
