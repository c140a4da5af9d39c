"""Compile topology + seed into a QA corpus; split it by edge; read/write files.

Dataset file format: UTF-8 JSON lines with exactly the keys "question",
"answer", "edge" (split files add "split").  A sidecar manifest
(<name>.manifest.json) records the topology snapshot, seed, counts, format
version, and the dataset file digest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .contracts import ContractRecord, QAPair, fill_contract, render_qa, schema
from .entities import EntityProfile, Seed, child_rng, gen_unique_profiles
from .errors import DatasetParseError, InvalidParameterError, NotFoundError
from .graphs import KnowledgeGraph, TopologySpec

FORMAT_VERSION = 1

_DATASET_KEYS = {"question", "answer", "edge"}
_SPLIT_KEYS = {"question", "answer", "edge", "split"}


@dataclass(frozen=True)
class CompiledDataset:
    graph: KnowledgeGraph
    contracts: tuple[ContractRecord, ...]
    qa: tuple[QAPair, ...]
    seed: Seed
    spec: TopologySpec

    def contract(self, edge_label: str) -> ContractRecord:
        for c in self.contracts:
            if c.edge_label == edge_label:
                return c
        raise NotFoundError(f"no contract for edge {edge_label!r}")

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "topology": self.spec.to_dict(),
            "seed": self.seed.master,
            "counts": {
                "nodes": self.graph.node_count,
                "edges": self.graph.edge_count,
                "qa": len(self.qa),
            },
        }


def compile_dataset(spec: TopologySpec, seed: Seed | int) -> CompiledDataset:
    """Deterministically compile the full QA corpus for a topology."""
    if isinstance(seed, int):
        seed = Seed(seed)
    graph = spec.build()
    profiles = gen_unique_profiles(seed.master, [(n.label, graph.kinds[n.label]) for n in graph.nodes])

    contracts = []
    qa: list[QAPair] = []
    for edge in sorted(graph.edges, key=lambda e: e.label):
        parties = (profiles[edge.a], profiles[edge.b])
        contract = fill_contract(edge, parties, seed.master)
        contracts.append(contract)
        qa.extend(render_qa(contract))

    ds = CompiledDataset(graph=graph, contracts=tuple(contracts), qa=tuple(qa), seed=seed, spec=spec)
    expected = 20 * graph.edge_count
    if len(ds.qa) != expected:
        raise InvalidParameterError(f"compiled {len(ds.qa)} QA pairs, expected {expected}")
    return ds


@dataclass(frozen=True)
class ForgetSplit:
    forget_edges: frozenset[str]
    forget: tuple[QAPair, ...]
    retain: tuple[QAPair, ...]
    dataset: CompiledDataset | None = None


def split_forget(ds: CompiledDataset, edges) -> ForgetSplit:
    """Partition the QA corpus by edge label."""
    edges = frozenset(edges)
    known = set(ds.graph.edge_labels())
    unknown = edges - known
    if unknown:
        raise NotFoundError(
            f"unknown edge label(s) {sorted(unknown)}; valid labels: {sorted(known)}"
        )
    forget = tuple(p for p in ds.qa if p.edge in edges)
    retain = tuple(p for p in ds.qa if p.edge not in edges)
    return ForgetSplit(forget_edges=edges, forget=forget, retain=retain, dataset=ds)


def sample_forget_edge(ds: CompiledDataset, node_range: tuple[int, int], seed: int) -> str:
    """Pick one edge uniformly among edges with both endpoints in the index range."""
    lo, hi = node_range
    in_range = {n.label for n in ds.graph.nodes if lo <= n.index <= hi}
    if not in_range:
        raise InvalidParameterError(f"no nodes with index in [{lo}, {hi}]")
    candidates = [e.label for e in ds.graph.edges if e.a in in_range and e.b in in_range]
    if not candidates:
        raise InvalidParameterError(f"no edges inside node range [{lo}, {hi}]")
    return child_rng(seed, "sample-edge", lo, hi).choice(sorted(candidates))


def _qa_line(pair: QAPair, split: str | None = None) -> str:
    record = {"question": pair.question, "answer": pair.answer, "edge": pair.edge}
    if split is not None:
        record["split"] = split
    return json.dumps(record, ensure_ascii=False)


def export_dataset(ds: CompiledDataset, path: str | Path, manifest: bool = True) -> Path:
    """Write the QA corpus as JSON lines (plus the manifest sidecar)."""
    path = Path(path)
    body = "".join(_qa_line(p) + "\n" for p in ds.qa)
    path.write_text(body, encoding="utf-8")
    if manifest:
        info = ds.manifest()
        info["dataset_sha256"] = hashlib.sha256(body.encode("utf-8")).hexdigest()
        manifest_path(path).write_text(json.dumps(info, indent=2) + "\n", encoding="utf-8")
    return path


def export_split(split: ForgetSplit, forget_path: str | Path, retain_path: str | Path) -> None:
    Path(forget_path).write_text(
        "".join(_qa_line(p, "forget") + "\n" for p in split.forget), encoding="utf-8")
    Path(retain_path).write_text(
        "".join(_qa_line(p, "retain") + "\n" for p in split.retain), encoding="utf-8")


def manifest_path(dataset_path: str | Path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".manifest.json")


@dataclass(frozen=True)
class ImportedDataset:
    """QA lines read back from disk, plus the manifest when present."""

    qa: tuple[QAPair, ...]
    manifest: dict | None = None
    splits: tuple[str, ...] = ()


def import_dataset(path: str | Path) -> ImportedDataset:
    """Read a dataset or split file, validating every record.

    The wire format carries no slot ids; imported pairs get positional
    slots ("0", "1", ...) in per-edge encounter order, matching the
    canonical export order (edge label, slot index).
    """
    path = Path(path)
    pairs: list[QAPair] = []
    splits: list[str] = []
    per_edge_count: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise DatasetParseError("blank line", str(path), lineno)
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise DatasetParseError(f"invalid JSON ({err.msg})", str(path), lineno) from None
            if not isinstance(record, dict):
                raise DatasetParseError("record is not a JSON object", str(path), lineno)
            keys = set(record)
            if keys not in (_DATASET_KEYS, _SPLIT_KEYS):
                missing = sorted(_DATASET_KEYS - keys)
                extra = sorted(keys - _SPLIT_KEYS)
                what = []
                if missing:
                    what.append(f"missing field(s) {missing}")
                if extra:
                    what.append(f"unexpected field(s) {extra}")
                raise DatasetParseError("; ".join(what) or "bad fields", str(path), lineno)
            for key in keys:
                if not isinstance(record[key], str):
                    raise DatasetParseError(f"field {key!r} is not a string", str(path), lineno)
            if "split" in record:
                if record["split"] not in ("forget", "retain"):
                    raise DatasetParseError(
                        f"field 'split' must be 'forget' or 'retain', got {record['split']!r}",
                        str(path), lineno)
                splits.append(record["split"])
            edge = record["edge"]
            position = per_edge_count.get(edge, 0)
            per_edge_count[edge] = position + 1
            pairs.append(QAPair(question=record["question"], answer=record["answer"],
                                edge=edge, slot=str(position)))
    mpath = manifest_path(path)
    manifest = None
    if mpath.exists():
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    return ImportedDataset(qa=tuple(pairs), manifest=manifest, splits=tuple(splits))


def recompile_from_manifest(path: str | Path) -> CompiledDataset:
    """Rebuild the full dataset object from a file's manifest and verify the digest."""
    path = Path(path)
    mpath = manifest_path(path)
    if not mpath.exists():
        raise DatasetParseError("no manifest sidecar found", str(mpath))
    manifest = json.loads(mpath.read_text(encoding="utf-8"))
    spec = TopologySpec.from_dict(manifest["topology"])
    ds = compile_dataset(spec, Seed(manifest["seed"]))
    body = "".join(_qa_line(p) + "\n" for p in ds.qa)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != manifest.get("dataset_sha256"):
        raise DatasetParseError("dataset file digest does not match its manifest", str(path))
    return ds
