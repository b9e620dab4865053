"""The live sequential auditing state machine: observe, stop, decide.

Sessions are immutable values; each observation returns a new state. Early
stopping compares the running deviation count against the calibrated band,
stage n is always terminal (full inspection decides exactly), and a truncated
design terminates at its truncation stage instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .calibration import BoundarySchedule
from .population import DeviationPath

__all__ = [
    "CONTINUE",
    "ACCEPT_H",
    "ACCEPT_K",
    "SessionState",
    "SessionDecidedError",
    "new_session",
    "observe",
    "undo",
    "run_path",
]

CONTINUE = "continue"
ACCEPT_H = "accepted_H"
ACCEPT_K = "accepted_K"

EARLY_STOP = "early_stop"
TERMINAL_FULL = "terminal_full_inspection"
TERMINAL_TRUNCATION = "terminal_truncation"


class SessionDecidedError(ValueError):
    """An observation arrived after the session already reached a decision."""


@dataclass(frozen=True)
class SessionState:
    """One auditor's session over a calibrated schedule."""

    schedule: BoundarySchedule
    history: tuple = ()
    count: int = 0
    status: str = CONTINUE
    decided_at: int | None = None
    decision_source: str | None = None

    @property
    def t(self) -> int:
        return len(self.history)

    @property
    def p_hat(self) -> float:
        return self.count / self.t if self.t else 0.0

    @property
    def decided(self) -> bool:
        return self.status != CONTINUE


def new_session(schedule: BoundarySchedule) -> SessionState:
    return SessionState(schedule=schedule)


def _decide(schedule: BoundarySchedule, t: int, s: int) -> tuple[str, str] | None:
    """Status and source if the procedure stops at stage t with count s."""
    n = schedule.n
    if t == n:
        accept_h = s <= schedule.config.full_inspection_accept_h_max
        return (ACCEPT_H if accept_h else ACCEPT_K, TERMINAL_FULL)
    if schedule.is_truncated and t == schedule.truncation.T:
        accept_k = s > schedule.truncation.c_t
        return (ACCEPT_K if accept_k else ACCEPT_H, TERMINAL_TRUNCATION)
    if t >= schedule.min_stage:
        low, high = schedule.stage_bounds(t)
        # the lower check takes precedence: at a collapsed stage (low > high)
        # every count decides, S < low as H and the rest as K
        if s < low:
            return (ACCEPT_H, EARLY_STOP)
        if s > high:
            return (ACCEPT_K, EARLY_STOP)
    return None


def observe(session: SessionState, x: int) -> SessionState:
    """Record one inspected item (0 = clean, 1 = deviation) and re-decide."""
    if session.decided:
        raise SessionDecidedError(
            f"session decided ({session.status} at stage {session.decided_at}); undo to amend"
        )
    if x not in (0, 1):
        raise ValueError(f"observation must be 0 or 1, got {x!r}")
    t = session.t + 1
    count = session.count + int(x)
    outcome = _decide(session.schedule, t, count)
    status, source = outcome if outcome else (CONTINUE, None)
    return replace(
        session,
        history=session.history + (int(x),),
        count=count,
        status=status,
        decided_at=t if outcome else None,
        decision_source=source,
    )


def undo(session: SessionState) -> SessionState:
    """Remove the last observation, reverting any decision that relied on it."""
    if not session.history:
        raise ValueError("nothing to undo: session has no observations")
    state = new_session(session.schedule)
    for x in session.history[:-1]:
        state = observe(state, x)
    return state


def run_path(schedule: BoundarySchedule, path: DeviationPath) -> tuple[int, str]:
    """Feed a full inspection order through the rule; returns (tau, decision).

    Equivalent to a session observing the path one item at a time (see the
    equivalence test), but without building intermediate states.
    """
    counts = path.prefix_counts
    if counts.size != schedule.n:
        raise ValueError(f"path length {counts.size} does not match n={schedule.n}")
    for t in range(1, schedule.n + 1):
        outcome = _decide(schedule, t, int(counts[t - 1]))
        if outcome is not None:
            return t, outcome[0]
    raise AssertionError("unreachable: stage n always decides")
