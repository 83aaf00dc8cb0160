"""Line-oriented instance files.

::

    # Example: two-point split, p = 1/4, f = 4 on E
    horizon 2
    atom 1 Omega - 1
    atom 2 E  Omega 1/4
    atom 2 Ec Omega 3/4
    value E  4
    value Ec 0

``raw <leaf> <weight> <value>`` lines describe a terminal function finer
than the leaf partition; the weights of one leaf are conditional and must
sum to 1.  A leaf with raw cells needs no ``value`` line.  Blank lines and
``#`` comments are ignored.  Every error names the offending line.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import arith
from .decomposition import RawFunction
from .errors import FiltrationError
from .filtration import Filtration


@dataclass(frozen=True)
class Instance:
    filtration: Filtration
    f: np.ndarray
    raw: RawFunction | None = None
    sha256: str = ""
    source: str = "<text>"

    @property
    def measurable(self) -> bool:
        return self.raw is None or not self.raw.non_measurable_leaves(self.filtration)


def _num(tok: str, line: int, exact: bool):
    try:
        return arith.parse_scalar(tok, exact)
    except ValueError:
        raise FiltrationError("bad-number", f"not a number: {tok!r}", line) from None


def _close(a, b, exact: bool) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= arith.TOL_IDENTITY * max(1.0, abs(b))


def parse_instance(text: str, exact: bool = True, source: str = "<text>") -> Instance:
    horizon = None
    atoms: dict[str, tuple[int, str | None, object, int]] = {}
    order: list[str] = []
    values: dict[str, tuple[object, int]] = {}
    raws: dict[str, list[tuple[object, object, int]]] = defaultdict(list)

    for ln, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "horizon":
            if len(tok) != 2 or not tok[1].isdigit() or int(tok[1]) < 1:
                raise FiltrationError("syntax", "expected 'horizon <M>' with M >= 1", ln)
            if horizon is not None:
                raise FiltrationError("syntax", "horizon given twice", ln)
            horizon = int(tok[1])
        elif kind == "atom":
            if len(tok) != 5 or not tok[1].isdigit():
                raise FiltrationError("syntax", "expected 'atom <level> <id> <parent|-> <prob>'", ln)
            level, aid, parent = int(tok[1]), tok[2], tok[3]
            if aid in atoms:
                raise FiltrationError("duplicate-id", f"duplicate atom id {aid!r}", ln)
            p = _num(tok[4], ln, exact)
            if not p > 0:
                raise FiltrationError("nonpositive-probability", f"nonpositive atom probability for {aid!r}", ln)
            atoms[aid] = (level, None if parent == "-" else parent, p, ln)
            order.append(aid)
        elif kind == "value":
            if len(tok) != 3:
                raise FiltrationError("syntax", "expected 'value <leaf> <v>'", ln)
            if tok[1] in values:
                raise FiltrationError("duplicate-value", f"second value for leaf {tok[1]!r}", ln)
            values[tok[1]] = (_num(tok[2], ln, exact), ln)
        elif kind == "raw":
            if len(tok) != 4:
                raise FiltrationError("syntax", "expected 'raw <leaf> <weight> <value>'", ln)
            w = _num(tok[2], ln, exact)
            if not w > 0:
                raise FiltrationError("nonpositive-probability", f"nonpositive raw weight on {tok[1]!r}", ln)
            raws[tok[1]].append((w, _num(tok[3], ln, exact), ln))
        else:
            raise FiltrationError("unknown-record", f"unknown record {kind!r}", ln)

    if horizon is None:
        raise FiltrationError("missing-horizon", "no 'horizon' line", 1)

    levels: list[list[tuple]] = [[] for _ in range(horizon)]
    for aid in order:
        level, parent, p, ln = atoms[aid]
        if not 1 <= level <= horizon:
            raise FiltrationError("bad-level", f"level {level} outside 1..{horizon}", ln)
        if level == 1:
            if parent is not None:
                raise FiltrationError("missing-parent", f"level-1 atom {aid!r} cannot have a parent", ln)
        elif parent not in atoms or atoms[parent][0] != level - 1:
            raise FiltrationError("missing-parent", f"atom {aid!r}: no parent {parent!r} at level {level - 1}", ln)
        levels[level - 1].append((aid, parent, p))
    for n, lvl in enumerate(levels, start=1):
        if not lvl:
            raise FiltrationError("empty-level", f"level {n} has no atoms", 1)

    # probability bookkeeping, anchored at the first atom of each group
    one = arith.scalar(1, exact)
    first = levels[0][0][0]
    total = sum((p for _, _, p in levels[0]), arith.scalar(0, exact))
    if not _close(total, one, exact):
        raise FiltrationError("probability-sum", f"level-1 probabilities sum to {arith.fmt(total)}, not 1",
                              atoms[first][3])
    for n in range(2, horizon + 1):
        kids: dict[str, list[str]] = defaultdict(list)
        for aid, parent, _ in levels[n - 1]:
            kids[parent].append(aid)
        for pid, _, pp in levels[n - 2]:
            if pid not in kids:
                raise FiltrationError("childless-atom", f"atom {pid!r} at level {n - 1} has no children",
                                      atoms[pid][3])
            s = sum((atoms[c][2] for c in kids[pid]), arith.scalar(0, exact))
            if not _close(s, pp, exact):
                raise FiltrationError("children-sum",
                                      f"children do not partition parent {pid!r}: "
                                      f"{arith.fmt(s)} != {arith.fmt(pp)}", atoms[kids[pid][0]][3])

    leaves = [aid for aid, _, _ in levels[-1]]
    leafset = set(leaves)
    for lid, (_, ln) in values.items():
        if lid not in leafset:
            raise FiltrationError("unknown-leaf", f"value for {lid!r}, which is not a leaf", ln)
    for lid, cells in raws.items():
        if lid not in leafset:
            raise FiltrationError("unknown-leaf", f"raw cell for {lid!r}, which is not a leaf", cells[0][2])
        s = sum((w for w, _, _ in cells), arith.scalar(0, exact))
        if not _close(s, one, exact):
            raise FiltrationError("raw-weights", f"raw weights on {lid!r} sum to {arith.fmt(s)}, not 1",
                                  cells[0][2])

    filt = Filtration.from_levels(levels, exact=exact)
    f = []
    for lid in leaves:
        if lid in raws:
            mean = sum((w * v for w, v, _ in raws[lid]), arith.scalar(0, exact))
            if lid in values and not _close(values[lid][0], mean, exact):
                raise FiltrationError("raw-mismatch", f"value of {lid!r} differs from its raw mean",
                                      values[lid][1])
            f.append(mean)
        elif lid in values:
            f.append(values[lid][0])
        else:
            raise FiltrationError("missing-value", f"leaf {lid!r} has no value", atoms[lid][3])
    f = arith.array(f, exact)

    raw = None
    if raws:
        weights, vals = [], []
        for lid, v in zip(leaves, f):
            cells = raws.get(lid)
            if cells:
                weights.append(arith.array([w for w, _, _ in cells], exact))
                vals.append(arith.array([x for _, x, _ in cells], exact))
            else:
                weights.append(arith.array([one], exact))
                vals.append(arith.array([v], exact))
        raw = RawFunction(tuple(weights), tuple(vals))
    digest = hashlib.sha256(text.encode()).hexdigest()
    return Instance(filt, f, raw, digest, source)


def load_instance(path, exact: bool = True) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), exact=exact, source=str(path))


def dump_instance(filt: Filtration, f, raw: RawFunction | None = None, comment: str = "") -> str:
    out = []
    if comment:
        out += [f"# {line}" for line in comment.splitlines()]
    out.append(f"horizon {filt.horizon}")
    for n in range(1, filt.horizon + 1):
        for i, aid in enumerate(filt.ids[n]):
            parent = "-" if n == 1 else filt.ids[n - 1][filt.parents[n][i]]
            out.append(f"atom {n} {aid} {parent} {arith.fmt(filt.probs[n][i])}")
    f = filt.values(f)
    for i, (lid, v) in enumerate(zip(filt.leaf_ids, f)):
        if raw is not None and len(raw.weights[i]) > 1:
            for w, x in zip(raw.weights[i], raw.values[i]):
                out.append(f"raw {lid} {arith.fmt(w)} {arith.fmt(x)}")
        else:
            out.append(f"value {lid} {arith.fmt(v)}")
    return "\n".join(out) + "\n"
