"""Reading and writing liability networks and result files.

Edge files are CSV with header ``debtor_id,creditor_id,amount``; node files
have ``bank_id,capital`` plus optional balance-sheet columns.  Bank ids are
free-form strings and are indexed in node-file order.  Every result file
starts with a metadata block so it can be traced to its inputs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from . import __version__
from .network import BankSheet, LiabilityNetwork, LoanRecord, NetworkError

DEFAULT_P_DEF = 0.025
EDGE_COLUMNS = ("debtor_id", "creditor_id", "amount")
NODE_REQUIRED = ("bank_id", "capital")
NODE_OPTIONAL = ("total_assets", "total_liabilities", "due_from_banks", "due_to_banks",
                 "liquid_assets", "p_def")

Source = Union[str, os.PathLike, IO[str]]


class ParseError(NetworkError):
    """Malformed input; ``line`` is 1-based and counts the header."""

    def __init__(self, path: str, line: Optional[int], msg: str):
        self.path, self.line = path, line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {msg}")


@dataclass(frozen=True)
class NetworkFile:
    """A parsed network: ids in index order, the liability network and balance sheets."""

    ids: tuple
    network: LiabilityNetwork
    sheets: tuple

    @property
    def capital(self) -> np.ndarray:
        return np.array([s.capital for s in self.sheets], dtype=float)

    @property
    def p_def(self) -> np.ndarray:
        return np.array([s.default_probability for s in self.sheets], dtype=float)

    def index(self, bank_id: str) -> int:
        try:
            return self.ids.index(str(bank_id))
        except ValueError:
            raise KeyError(f"unknown bank id {bank_id!r}") from None


def _read_text(src: Source) -> tuple[str, str]:
    if hasattr(src, "read"):
        return getattr(src, "name", "<stream>"), src.read()
    with open(src, newline="", encoding="utf-8") as fh:
        return str(src), fh.read()


def _rows(name: str, text: str, required: Sequence[str], optional: Sequence[str] = ()):
    lines = [ln for ln in text.splitlines()]
    # skip a leading metadata block written by this module
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        start += 1
    reader = csv.reader(lines[start:])
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError(name, None, "empty file, header row expected") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(name, start + 1, f"missing column(s) {missing}")
    unknown = [c for c in header if c not in required and c not in optional]
    if unknown:
        raise ParseError(name, start + 1, f"unknown column(s) {unknown}")
    for k, row in enumerate(reader):
        line = start + 2 + k
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(name, line, f"expected {len(header)} fields, got {len(row)}")
        yield line, dict(zip(header, (c.strip() for c in row)))


def _number(name: str, line: int, field: str, text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(name, line, f"{field}: not a number: {text!r}") from None
    if not math.isfinite(x):
        raise ParseError(name, line, f"{field}: not finite: {text!r}")
    return x


def parse_nodes(node_csv: Source, default_p_def: float = DEFAULT_P_DEF) -> tuple[tuple, tuple]:
    name, text = _read_text(node_csv)
    ids, sheets = [], []
    seen = set()
    for line, row in _rows(name, text, NODE_REQUIRED, NODE_OPTIONAL):
        bid = row["bank_id"]
        if not bid:
            raise ParseError(name, line, "empty bank_id")
        if bid in seen:
            raise ParseError(name, line, f"duplicate bank_id {bid!r}")
        seen.add(bid)
        capital = _number(name, line, "capital", row["capital"])
        extra = {}
        for col in NODE_OPTIONAL:
            if row.get(col, "") != "":
                extra[col] = _number(name, line, col, row[col])
        p = extra.pop("p_def", default_p_def)
        try:
            sheet = BankSheet(capital=capital, liquidity=extra.get("liquid_assets", 0.0),
                              default_probability=p, **extra)
        except NetworkError as e:
            raise ParseError(name, line, str(e)) from None
        ids.append(bid)
        sheets.append(sheet)
    return tuple(ids), tuple(sheets)


def parse_edges(edge_csv: Source, ids: Sequence[str]) -> list[LoanRecord]:
    """One synthetic loan per row; loan ids follow row order."""
    name, text = _read_text(edge_csv)
    index = {b: k for k, b in enumerate(ids)}
    loans = []
    for line, row in _rows(name, text, EDGE_COLUMNS):
        ends = []
        for col in ("debtor_id", "creditor_id"):
            if row[col] not in index:
                raise ParseError(name, line, f"unknown {col} {row[col]!r}")
            ends.append(index[row[col]])
        i, j = ends
        if i == j:
            raise ParseError(name, line, f"self-edge on bank {row['debtor_id']!r}")
        amount = _number(name, line, "amount", row["amount"])
        if amount < 0:
            raise ParseError(name, line, f"negative amount {amount}")
        loans.append(LoanRecord(len(loans), i, j, amount))
    return loans


def parse_network(edge_csv: Source, node_csv: Source,
                  default_p_def: float = DEFAULT_P_DEF) -> NetworkFile:
    """Read an edge list and node table; repeated (debtor, creditor) rows add up."""
    ids, sheets = parse_nodes(node_csv, default_p_def)
    loans = parse_edges(edge_csv, ids)
    return NetworkFile(ids, LiabilityNetwork.from_loans(len(ids), loans), sheets)


# --- writing ----------------------------------------------------------------

def fmt(x: float) -> str:
    """Shortest text that reads back to the same float."""
    return repr(float(x))


def metadata(seed=None, config_hash: Optional[str] = None,
             value_weights: Optional[str] = None, **extra) -> dict:
    meta = {"version": __version__, "seed": seed, "config_hash": config_hash,
            "value_weights": value_weights}
    meta.update(extra)
    return meta


def input_hash(*paths: Source) -> str:
    """Digest of input files, used as the config hash for network commands."""
    h = hashlib.sha256()
    for p in paths:
        h.update(_read_text(p)[1].encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def csv_text(header: Sequence[str], rows: Iterable[Sequence], meta: Optional[dict] = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(c) if isinstance(c, (float, np.floating)) else c for c in row])
    return buf.getvalue()


def json_text(obj: dict, meta: Optional[dict] = None) -> str:
    body = dict(obj)
    if meta is not None:
        body["metadata"] = meta
    return json.dumps(body, sort_keys=True, indent=1, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def read_metadata(text: str) -> Optional[dict]:
    first = text.split("\n", 1)[0]
    return json.loads(first[2:]) if first.startswith("# ") else None


def write_text(path: Union[str, os.PathLike], text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def edges_csv(nf: NetworkFile, meta: Optional[dict] = None) -> str:
    """One row per nonzero matrix entry, row-major."""
    L = nf.network.liabilities
    rows = [(nf.ids[i], nf.ids[j], float(L[i, j])) for i, j in np.argwhere(L > 0)]
    return csv_text(EDGE_COLUMNS, rows, meta)


def nodes_csv(nf: NetworkFile, meta: Optional[dict] = None) -> str:
    cols = ["bank_id", "capital"] + [c for c in NODE_OPTIONAL if c != "p_def"
                                     and any(getattr(s, c) is not None for s in nf.sheets)] + ["p_def"]
    rows = []
    for bid, s in zip(nf.ids, nf.sheets):
        row = [bid, float(s.capital)]
        for c in cols[2:-1]:
            v = getattr(s, c)
            row.append("" if v is None else float(v))
        row.append(float(s.default_probability))
        rows.append(row)
    return csv_text(cols, rows, meta)


def write_network(nf: NetworkFile, edge_path, node_path, meta: Optional[dict] = None) -> None:
    write_text(edge_path, edges_csv(nf, meta))
    write_text(node_path, nodes_csv(nf, meta))


def network_file(L, capital, p_def=DEFAULT_P_DEF, ids: Optional[Sequence[str]] = None) -> NetworkFile:
    """Wrap a matrix and capitals as a :class:`NetworkFile`."""
    L = np.asarray(L, dtype=float)
    B = L.shape[0]
    ids = tuple(str(b) for b in (ids if ids is not None else range(B)))
    p = np.broadcast_to(np.asarray(p_def, dtype=float), (B,))
    sheets = tuple(BankSheet(capital=float(c), default_probability=float(q),
                             due_from_banks=float(L[:, i].sum()), due_to_banks=float(L[i].sum()))
                   for i, (c, q) in enumerate(zip(capital, p)))
    return NetworkFile(ids, LiabilityNetwork.from_matrix(L), sheets)


# --- synthetic fixtures ----------------------------------------------------

def scale_free_network(n_banks: int, seed: int = 0, mean_amount: float = 10.0,
                       capital_ratio: float = 0.25, p_def: float = DEFAULT_P_DEF) -> NetworkFile:
    """Directed scale-free liability network with lognormal exposures.

    Topology comes from networkx's directed preferential-attachment graph with
    self-loops dropped and parallel edges merged.  Each bank's capital is
    ``capital_ratio`` times its interbank assets, floored at one mean loan.
    """
    import networkx as nx

    if n_banks < 2:
        raise ValueError("need at least two banks")
    rng = np.random.default_rng(seed)
    g = nx.scale_free_graph(n_banks, seed=int(seed))
    L = np.zeros((n_banks, n_banks))
    for u, v in sorted((int(a), int(b)) for a, b in g.edges()):
        if u != v:
            L[u, v] += rng.lognormal(math.log(mean_amount) - 0.5, 1.0)
    assets = L.sum(axis=0)
    capital = np.maximum(capital_ratio * assets, mean_amount)
    return network_file(L, capital, p_def)


def chain_fixture() -> NetworkFile:
    """Three banks: 0 owes 1 ten, 1 owes 2 ten; capitals 5, 5, 20."""
    L = np.zeros((3, 3))
    L[0, 1] = L[1, 2] = 10.0
    return network_file(L, [5.0, 5.0, 20.0])
