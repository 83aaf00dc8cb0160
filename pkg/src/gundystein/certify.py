"""Check records shared by every verification routine."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import arith
from .reals import Real, UndecidedComparison, compare


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    ref: str
    relation: str
    claimed: object
    computed: object
    margin: object
    passed: bool
    expected_violation: bool = False

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.expected_violation:
            status += "(expected-violation)"
        return "\t".join([self.check_id, self.ref, f"{self.relation} {_show(self.claimed)}",
                          _show(self.computed), _show(self.margin), status])


def _show(x) -> str:
    if isinstance(x, Real):
        return f"~{x.approx!r}"
    return arith.fmt(x)


@dataclass
class Certificate:
    """Accumulates check records under one arithmetic mode.

    In exact mode every comparison is exact (quantities involving e go
    through certified interval comparisons).  In float mode identities use
    ``TOL_IDENTITY`` and inequalities ``TOL_INEQUALITY``, both scaled by
    ``max(1, |claimed|, |computed|)``.

    ``corrupt`` names check ids whose verdict is deliberately inverted; it
    exists only to self-test the harness.
    """

    exact: bool = True
    corrupt: frozenset = frozenset()
    records: list[CheckRecord] = field(default_factory=list)

    def _tol(self, a, b, tol):
        return tol * max(1.0, abs(float(a)), abs(float(b)))

    def _push(self, check_id, ref, rel, claimed, computed, margin, ok, expected=False):
        if check_id in self.corrupt:
            ok = not ok
        rec = CheckRecord(check_id, ref, rel, claimed, computed, margin, bool(ok), expected)
        self.records.append(rec)
        return rec

    def le(self, check_id: str, ref: str, computed, claimed) -> CheckRecord:
        """Record ``computed <= claimed``."""
        if isinstance(computed, Real) or isinstance(claimed, Real):
            try:
                ok = compare(computed, claimed) < 0
            except UndecidedComparison:
                ok = False
            margin = float(claimed) - float(computed)
        elif self.exact:
            ok = computed <= claimed
            margin = claimed - computed
        else:
            ok = computed <= claimed + self._tol(claimed, computed, arith.TOL_INEQUALITY)
            margin = float(claimed) - float(computed)
        return self._push(check_id, ref, "<=", claimed, computed, margin, ok)

    def ge(self, check_id: str, ref: str, computed, claimed) -> CheckRecord:
        """Record ``computed >= claimed``."""
        if isinstance(computed, Real) or isinstance(claimed, Real):
            try:
                ok = compare(computed, claimed) > 0
            except UndecidedComparison:
                ok = False
            margin = float(computed) - float(claimed)
        elif self.exact:
            ok = computed >= claimed
            margin = computed - claimed
        else:
            ok = computed >= claimed - self._tol(claimed, computed, arith.TOL_INEQUALITY)
            margin = float(computed) - float(claimed)
        return self._push(check_id, ref, ">=", claimed, computed, margin, ok)

    def lt(self, check_id: str, ref: str, computed, claimed) -> CheckRecord:
        """Record strict ``computed < claimed`` (exact modes only are strict)."""
        if isinstance(computed, Real) or isinstance(claimed, Real):
            try:
                ok = compare(computed, claimed) < 0
            except UndecidedComparison:
                ok = False
            margin = float(claimed) - float(computed)
        elif self.exact:
            ok = computed < claimed
            margin = claimed - computed
        else:
            ok = computed < claimed + self._tol(claimed, computed, arith.TOL_INEQUALITY)
            margin = float(claimed) - float(computed)
        return self._push(check_id, ref, "<", claimed, computed, margin, ok)

    def eq(self, check_id: str, ref: str, computed, claimed) -> CheckRecord:
        """Record the identity ``computed == claimed`` (scalars)."""
        if self.exact:
            ok = computed == claimed
            margin = abs(computed - claimed)
        else:
            diff = abs(float(computed) - float(claimed))
            ok = diff <= self._tol(claimed, computed, arith.TOL_IDENTITY)
            margin = diff
        return self._push(check_id, ref, "==", claimed, computed, margin, ok)

    def eq_array(self, check_id: str, ref: str, computed, claimed) -> CheckRecord:
        """Record a leafwise identity; ``computed``/``claimed`` are arrays."""
        diff = abs(computed - claimed)
        worst = diff.max() if len(diff) else arith.scalar(0, self.exact)
        if self.exact:
            ok = worst == 0
        else:
            scale = max([1.0] + [abs(float(v)) for v in claimed] + [abs(float(v)) for v in computed])
            ok = float(worst) <= arith.TOL_IDENTITY * scale
        return self._push(check_id, ref, "==", "leafwise", f"max|diff|={arith.fmt(worst)}", worst, ok)

    def flag(self, check_id: str, ref: str, ok: bool, detail: str = "",
             expected_violation: bool = False) -> CheckRecord:
        """Record a boolean property."""
        return self._push(check_id, ref, "holds", "true", detail or str(bool(ok)), "", ok,
                          expected_violation)

    # summaries ------------------------------------------------------------
    @property
    def passed(self) -> bool:
        """True when every record passes or is a declared expected violation."""
        return not self.failures

    @property
    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed and not r.expected_violation]

    def __getitem__(self, check_id: str) -> CheckRecord:
        for r in self.records:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)

    def __contains__(self, check_id: str) -> bool:
        return any(r.check_id == check_id for r in self.records)

    def extend(self, other: "Certificate", prefix: str = "") -> None:
        for r in other.records:
            self.records.append(CheckRecord(prefix + r.check_id, r.ref, r.relation, r.claimed,
                                            r.computed, r.margin, r.passed, r.expected_violation))
