"""Small analytic-gradient memorizer with shared entity embeddings.

The model answers question (edge {u, v}, slot s) one token at a time.  The
logits for the token at position t are

    out_w @ tanh(entity[u] + entity[v] + slot[s] + pos[t]) + out_b

so every contract signed by an entity shares that entity's embedding row,
and every contract of a domain shares that domain's slot rows.  This shared
structure is what couples forget-set gradients to retained answers.

All gradients are computed in closed form; no autodiff framework involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import CompiledDataset
from .contracts import QAPair, schema, slot_position
from .errors import InvalidParameterError, NotFoundError
from .graphs import ContractDomain

EOS = "<eos>"

PARAM_NAMES = ("entity", "slot", "pos", "out_w", "out_b")


@dataclass
class EncodedBatch:
    """Per-position context rows for a list of examples.

    Row-level arrays are flat over all answer positions (EOS included);
    ``example_index`` maps each row back to its example.
    """

    u: np.ndarray
    v: np.ndarray
    s: np.ndarray
    t: np.ndarray
    target: np.ndarray
    example_index: np.ndarray
    lengths: np.ndarray
    pairs: tuple[QAPair, ...]

    def __len__(self) -> int:
        return len(self.lengths)

    def subset(self, indices) -> "EncodedBatch":
        """Batch restricted to the given example indices (duplicates allowed).

        Rows of one example are contiguous and in encounter order, so the
        selection reduces to slice arithmetic over the length prefix sums.
        """
        indices = np.asarray(indices, dtype=np.int64)
        starts = np.concatenate(([0], np.cumsum(self.lengths)))
        rows = np.concatenate(
            [np.arange(starts[i], starts[i] + self.lengths[i]) for i in indices])
        return EncodedBatch(
            u=self.u[rows], v=self.v[rows], s=self.s[rows], t=self.t[rows],
            target=self.target[rows],
            example_index=np.repeat(np.arange(len(indices)), self.lengths[indices]),
            lengths=self.lengths[indices],
            pairs=tuple(self.pairs[int(i)] for i in indices),
        )


def _concat_batches(batches: list[EncodedBatch]) -> EncodedBatch:
    offsets = np.cumsum([0] + [len(b) for b in batches[:-1]])
    return EncodedBatch(
        u=np.concatenate([b.u for b in batches]),
        v=np.concatenate([b.v for b in batches]),
        s=np.concatenate([b.s for b in batches]),
        t=np.concatenate([b.t for b in batches]),
        target=np.concatenate([b.target for b in batches]),
        example_index=np.concatenate(
            [b.example_index + off for b, off in zip(batches, offsets)]),
        lengths=np.concatenate([b.lengths for b in batches]),
        pairs=tuple(p for b in batches for p in b.pairs),
    )


class ToyMemorizer:
    """Additive-embedding model bound to one compiled dataset."""

    def __init__(self, *, vocab: list[str], node_labels: list[str],
                 slot_rows: list[tuple[str, str]], edge_endpoints: dict[str, tuple[int, int]],
                 edge_domains: dict[str, str], lmax: int, d: int = 64,
                 seed: int = 0, dtype=np.float32, params: dict | None = None):
        self.vocab = list(vocab)
        self.tok2id = {tok: i for i, tok in enumerate(self.vocab)}
        if len(self.tok2id) != len(self.vocab):
            raise InvalidParameterError("vocabulary contains duplicates")
        self.node_labels = list(node_labels)
        self.slot_rows = [tuple(x) for x in slot_rows]
        self.slot_row_index = {key: i for i, key in enumerate(self.slot_rows)}
        self.edge_endpoints = dict(edge_endpoints)
        self.edge_domains = dict(edge_domains)
        self.lmax = int(lmax)
        self.d = int(d)
        self.dtype = np.dtype(dtype)
        self.eos_id = self.tok2id[EOS]

        if params is not None:
            self.params = {k: np.array(v, dtype=self.dtype) for k, v in params.items()}
        else:
            rng = np.random.default_rng(seed)
            scale = 0.1
            self.params = {
                "entity": (scale * rng.standard_normal((len(self.node_labels), self.d))).astype(self.dtype),
                "slot": (scale * rng.standard_normal((len(self.slot_rows), self.d))).astype(self.dtype),
                "pos": (scale * rng.standard_normal((self.lmax, self.d))).astype(self.dtype),
                "out_w": (scale * rng.standard_normal((len(self.vocab), self.d))).astype(self.dtype),
                "out_b": np.zeros(len(self.vocab), dtype=self.dtype),
            }

    # ---------------------------------------------------------------- setup

    @classmethod
    def from_dataset(cls, ds: CompiledDataset, d: int = 64, seed: int = 0,
                     extra_answers=(), dtype=np.float32) -> "ToyMemorizer":
        """Build vocabulary and index tables for a compiled dataset.

        ``extra_answers`` (e.g. refusal strings) are added to the vocabulary
        and sized into the position table so they can be trained later.
        """
        if not ds.qa:
            raise InvalidParameterError("dataset has no QA pairs")
        tokens: set[str] = set()
        lmax = 0
        for pair in ds.qa:
            toks = pair.answer.split()
            tokens.update(toks)
            lmax = max(lmax, len(toks))
        for answer in extra_answers:
            toks = answer.split()
            tokens.update(toks)
            lmax = max(lmax, len(toks))
        vocab = [EOS] + sorted(tokens)

        domains = sorted({e.domain.value for e in ds.graph.edges})
        slot_rows = [
            (domain, spec.slot)
            for domain in domains
            for spec in schema(ContractDomain(domain)).slots
        ]
        edge_endpoints = {
            e.label: (ds.graph.node_index(e.a), ds.graph.node_index(e.b))
            for e in ds.graph.edges
        }
        edge_domains = {e.label: e.domain.value for e in ds.graph.edges}
        return cls(vocab=vocab, node_labels=[n.label for n in ds.graph.nodes],
                   slot_rows=slot_rows, edge_endpoints=edge_endpoints,
                   edge_domains=edge_domains, lmax=lmax + 1, d=d, seed=seed, dtype=dtype)

    def copy(self) -> "ToyMemorizer":
        return ToyMemorizer(vocab=self.vocab, node_labels=self.node_labels,
                            slot_rows=self.slot_rows, edge_endpoints=self.edge_endpoints,
                            edge_domains=self.edge_domains, lmax=self.lmax, d=self.d,
                            dtype=self.dtype, params=self.params)

    def astype(self, dtype) -> "ToyMemorizer":
        out = self.copy()
        out.dtype = np.dtype(dtype)
        out.params = {k: v.astype(dtype) for k, v in out.params.items()}
        return out

    def same_shape(self, other: "ToyMemorizer") -> bool:
        return (self.vocab == other.vocab and self.node_labels == other.node_labels
                and self.slot_rows == other.slot_rows and self.lmax == other.lmax
                and self.d == other.d)

    def finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.params.values())

    # ------------------------------------------------------------- encoding

    def _slot_row(self, edge: str, slot: str) -> int:
        try:
            domain = self.edge_domains[edge]
        except KeyError:
            raise NotFoundError(f"edge {edge!r} is not part of the bound dataset") from None
        slot_specs = schema(ContractDomain(domain)).slots
        slot_id = slot if not slot.isdigit() else slot_specs[slot_position(slot)].slot
        try:
            return self.slot_row_index[(domain, slot_id)]
        except KeyError:
            raise NotFoundError(f"slot {slot!r} unknown for edge {edge!r}") from None

    def encode(self, pairs, answers: dict | None = None) -> EncodedBatch:
        """Encode QA pairs into position rows.

        ``answers`` optionally overrides the trained answer per (edge, slot)
        key, which is how refusal-substituted examples are built.
        """
        pairs = tuple(pairs)
        u, v, s, t, target, ex_idx, lengths = [], [], [], [], [], [], []
        for i, pair in enumerate(pairs):
            ui, vi = self.edge_endpoints[pair.edge]
            si = self._slot_row(pair.edge, pair.slot)
            answer = pair.answer
            if answers is not None:
                answer = answers.get((pair.edge, pair.slot), answer)
            toks = answer.split() + [EOS]
            if len(toks) > self.lmax:
                raise InvalidParameterError(
                    f"answer for {pair.edge}/{pair.slot} exceeds position table ({len(toks)} > {self.lmax})")
            for pos, tok in enumerate(toks):
                if tok not in self.tok2id:
                    raise InvalidParameterError(f"token {tok!r} missing from model vocabulary")
                u.append(ui)
                v.append(vi)
                s.append(si)
                t.append(pos)
                target.append(self.tok2id[tok])
                ex_idx.append(i)
            lengths.append(len(toks))
        as_i = lambda xs: np.asarray(xs, dtype=np.int64)
        return EncodedBatch(u=as_i(u), v=as_i(v), s=as_i(s), t=as_i(t), target=as_i(target),
                            example_index=as_i(ex_idx), lengths=as_i(lengths), pairs=pairs)

    # -------------------------------------------------------------- forward

    def _hidden(self, batch: EncodedBatch) -> np.ndarray:
        p = self.params
        pre = p["entity"][batch.u] + p["entity"][batch.v] + p["slot"][batch.s] + p["pos"][batch.t]
        return np.tanh(pre)

    def logits_rows(self, batch: EncodedBatch) -> tuple[np.ndarray, np.ndarray]:
        """(hidden, logits) for every position row of the batch."""
        h = self._hidden(batch)
        return h, h @ self.params["out_w"].T + self.params["out_b"]

    @staticmethod
    def softmax(logits: np.ndarray) -> np.ndarray:
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def example_losses(self, batch: EncodedBatch, logits: np.ndarray | None = None) -> np.ndarray:
        """Mean cross-entropy per example (over its answer positions)."""
        if logits is None:
            _, logits = self.logits_rows(batch)
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        nll = -logp[np.arange(len(batch.target)), batch.target]
        sums = np.zeros(len(batch), dtype=logits.dtype)
        np.add.at(sums, batch.example_index, nll)
        return sums / batch.lengths

    def backward_rows(self, batch: EncodedBatch, hidden: np.ndarray,
                      dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Accumulate parameter gradients from per-row logit gradients."""
        p = self.params
        grads = {
            "out_w": dlogits.T @ hidden,
            "out_b": dlogits.sum(axis=0),
        }
        dh = dlogits @ p["out_w"]
        dpre = dh * (1.0 - hidden**2)
        g_entity = np.zeros_like(p["entity"])
        np.add.at(g_entity, batch.u, dpre)
        np.add.at(g_entity, batch.v, dpre)
        g_slot = np.zeros_like(p["slot"])
        np.add.at(g_slot, batch.s, dpre)
        g_pos = np.zeros_like(p["pos"])
        np.add.at(g_pos, batch.t, dpre)
        grads["entity"] = g_entity
        grads["slot"] = g_slot
        grads["pos"] = g_pos
        return grads

    def ce_loss_and_grads(self, batch: EncodedBatch,
                          example_weights: np.ndarray | None = None
                          ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Per-example CE losses and the gradient of sum(w_i * l_i)."""
        hidden, logits = self.logits_rows(batch)
        losses = self.example_losses(batch, logits)
        if example_weights is None:
            example_weights = np.full(len(batch), 1.0 / len(batch), dtype=logits.dtype)
        probs = self.softmax(logits)
        dlogits = probs
        dlogits[np.arange(len(batch.target)), batch.target] -= 1.0
        row_scale = (example_weights[batch.example_index]
                     / batch.lengths[batch.example_index]).astype(logits.dtype)
        dlogits *= row_scale[:, None]
        return losses, self.backward_rows(batch, hidden, dlogits)

    # -------------------------------------------------------------- decode

    def greedy_decode(self, edge: str, slot: str) -> str:
        """Argmax tokens until EOS (or the position table runs out)."""
        ui, vi = self.edge_endpoints[edge]
        si = self._slot_row(edge, slot)
        p = self.params
        pre = np.tanh(p["entity"][ui] + p["entity"][vi] + p["slot"][si] + p["pos"])
        logits = pre @ p["out_w"].T + p["out_b"]
        out = []
        for t in range(self.lmax):
            tok = int(np.argmax(logits[t]))
            if tok == self.eos_id:
                break
            out.append(self.vocab[tok])
        return " ".join(out)

    def decode_all(self, pairs) -> list:
        """GenerationRecord for every QA pair, fully vectorized."""
        from .metrics import GenerationRecord

        pairs = tuple(pairs)
        n = len(pairs)
        u = np.empty(n * self.lmax, dtype=np.int64)
        v = np.empty_like(u)
        s = np.empty_like(u)
        t = np.empty_like(u)
        for i, pair in enumerate(pairs):
            ui, vi = self.edge_endpoints[pair.edge]
            si = self._slot_row(pair.edge, pair.slot)
            sl = slice(i * self.lmax, (i + 1) * self.lmax)
            u[sl] = ui
            v[sl] = vi
            s[sl] = si
            t[sl] = np.arange(self.lmax)
        p = self.params
        pre = np.tanh(p["entity"][u] + p["entity"][v] + p["slot"][s] + p["pos"][t])
        toks = np.argmax(pre @ p["out_w"].T + p["out_b"], axis=1).reshape(n, self.lmax)
        records = []
        for i, pair in enumerate(pairs):
            words = []
            for tok in toks[i]:
                if tok == self.eos_id:
                    break
                words.append(self.vocab[int(tok)])
            records.append(GenerationRecord(edge=pair.edge, slot=pair.slot, text=" ".join(words)))
        return records

    def rank_records(self, pairs) -> list:
        """Rank of each ground-truth answer token (EOS excluded) in the logits."""
        from .metrics import RankRecord

        records = []
        batch = self.encode(pairs)
        _, logits = self.logits_rows(batch)
        target_logit = logits[np.arange(len(batch.target)), batch.target]
        ranks_rows = 1 + (logits > target_logit[:, None]).sum(axis=1)
        for i, pair in enumerate(batch.pairs):
            rows = np.flatnonzero(batch.example_index == i)
            token_rows = [r for r in rows if batch.target[r] != self.eos_id]
            records.append(RankRecord(edge=pair.edge, slot=pair.slot,
                                      target_ranks=tuple(int(ranks_rows[r]) for r in token_rows)))
        return records

    # ------------------------------------------------------------- storage

    def save(self, path) -> None:
        """Checkpoint as .npz (format version 1)."""
        edge_labels = sorted(self.edge_endpoints)
        np.savez(
            path,
            format_version=np.int64(1),
            d=np.int64(self.d),
            lmax=np.int64(self.lmax),
            vocab=np.array(self.vocab),
            node_labels=np.array(self.node_labels),
            slot_domains=np.array([dom for dom, _ in self.slot_rows]),
            slot_ids=np.array([sid for _, sid in self.slot_rows]),
            edge_labels=np.array(edge_labels),
            edge_u=np.array([self.edge_endpoints[e][0] for e in edge_labels], dtype=np.int64),
            edge_v=np.array([self.edge_endpoints[e][1] for e in edge_labels], dtype=np.int64),
            edge_domain=np.array([self.edge_domains[e] for e in edge_labels]),
            **{f"param_{k}": v for k, v in self.params.items()},
        )

    @classmethod
    def load(cls, path) -> "ToyMemorizer":
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != 1:
                raise InvalidParameterError(f"unsupported checkpoint format version {version}")
            edge_labels = [str(x) for x in data["edge_labels"]]
            params = {k: data[f"param_{k}"] for k in PARAM_NAMES}
            return cls(
                vocab=[str(x) for x in data["vocab"]],
                node_labels=[str(x) for x in data["node_labels"]],
                slot_rows=list(zip((str(x) for x in data["slot_domains"]),
                                   (str(x) for x in data["slot_ids"]))),
                edge_endpoints={e: (int(u), int(v)) for e, u, v in
                                zip(edge_labels, data["edge_u"], data["edge_v"])},
                edge_domains=dict(zip(edge_labels, (str(x) for x in data["edge_domain"]))),
                lmax=int(data["lmax"]),
                d=int(data["d"]),
                dtype=params["entity"].dtype,
                params=params,
            )
