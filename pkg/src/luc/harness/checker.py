"""Brute-force linearizability checking for small histories.

Wing and Gong's search: repeatedly pick an operation that is *minimal* (its
invocation precedes every pending response), apply it to the reference
model, and backtrack when the model's return value disagrees with the
recorded one. Visited ``(linearized set, model state)`` pairs are memoized,
which prunes without ever rejecting a linearizable history.

Operations still pending at the end of the history may take effect or not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .history import HistoryEvent, Operation, operations
from .models import ReferenceModel


class SearchExhausted(RuntimeError):
    """The node budget ran out before a verdict; the result is inconclusive."""


@dataclass
class CheckResult:
    linearizable: bool
    witness: list[Operation] = field(default_factory=list)
    violating_prefix: Optional[list[HistoryEvent]] = None
    nodes: int = 0

    def __bool__(self) -> bool:
        return self.linearizable


def _search(ops: list[Operation], model: ReferenceModel, budget: int):
    complete_mask = 0
    for op in ops:
        if op.complete:
            complete_mask |= 1 << op.index
    never = float("inf")
    seen: set = set()
    order: list[Operation] = []
    nodes = 0

    def minimal(done: int) -> list[Operation]:
        # earliest response among operations not yet linearized
        first_ret = min((op.ret_index for op in ops
                         if not done >> op.index & 1 and op.complete), default=never)
        return [op for op in ops if not done >> op.index & 1 and op.inv_index < first_ret]

    def dfs(done: int, state) -> bool:
        nonlocal nodes
        if done & complete_mask == complete_mask:
            return True
        key = (done, state)
        if key in seen:
            return False
        seen.add(key)
        nodes += 1
        if nodes > budget:
            raise SearchExhausted(f"more than {budget} search nodes")
        for op in minimal(done):
            new_state, ret = model.step(state, op.opcode, op.args)
            if op.complete and ret != op.value:
                continue
            order.append(op)
            if dfs(done | 1 << op.index, new_state):
                return True
            order.pop()
        return False

    ok = dfs(0, model.initial)
    return ok, list(order), nodes


def check_linearizable(history: list[HistoryEvent], model: ReferenceModel,
                       budget: int = 2_000_000) -> CheckResult:
    """Decide whether ``history`` is linearizable with respect to ``model``.

    On success the result carries a witness order; on failure it carries the
    shortest prefix of the history that is already not linearizable.
    """
    ops = operations(history)
    ok, order, nodes = _search(ops, model, budget)
    if ok:
        return CheckResult(True, witness=order, nodes=nodes)
    prefix = None
    for k in range(1, len(history) + 1):
        sub_ok, _, _ = _search(operations(history[:k]), model, budget)
        if not sub_ok:
            prefix = history[:k]
            break
    return CheckResult(False, violating_prefix=prefix, nodes=nodes)


def brute_force_linearizable(history: list[HistoryEvent], model: ReferenceModel) -> bool:
    """Permutation enumeration with no pruning; exponential, for cross-checks only."""
    from itertools import permutations

    ops = operations(history)
    complete = [op for op in ops if op.complete]
    pending = [op for op in ops if not op.complete]
    # every subset of pending ops may take effect
    for mask in range(1 << len(pending)):
        chosen = complete + [op for i, op in enumerate(pending) if mask >> i & 1]
        for perm in permutations(chosen):
            # real-time order: a before b whenever a responded before b was invoked
            pos = {op.index: i for i, op in enumerate(perm)}
            if any(a.complete and a.ret_index < b.inv_index and pos[a.index] > pos[b.index]
                   for a in chosen for b in chosen):
                continue
            state = model.initial
            good = True
            for op in perm:
                state, ret = model.step(state, op.opcode, op.args)
                if op.complete and ret != op.value:
                    good = False
                    break
            if good:
                return True
    return False
