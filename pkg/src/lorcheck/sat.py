"""Self-contained CDCL SAT engine with assumptions, cores and a soft-clause
relaxation search (linear MaxSAT-lite)."""

from __future__ import annotations

from .cnf import Cnf, Clause, evaluate


class SatResult:
    __slots__ = ("status", "model", "core")

    def __init__(self, status, model=None, core=None):
        self.status = status
        self.model = model
        self.core = core

    def __bool__(self):
        return self.status == "sat"

    def __repr__(self):
        return "SatResult(%s)" % self.status


class RelaxResult:
    __slots__ = ("model", "falsified_soft")

    def __init__(self, model, falsified_soft):
        self.model = model
        self.falsified_soft = falsified_soft


def _luby(i):
    # Luby restart sequence, 1-based
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        k -= 1
        i -= (1 << k) - 1
    return 1 << (k - 1)


class Solver:
    """One-shot CDCL solver over signed-integer literals.

    First-UIP learning, two watched literals, decaying variable activities,
    Luby restarts.  Decisions break activity ties on lowest variable id and
    try positive polarity first, so runs are reproducible.
    """

    def __init__(self, clauses, extra_vars=()):
        self.clauses = []           # clause storage, lists of lits
        self.var_ids = set(extra_vars)
        self.ok = True
        self.units = []
        for c in clauses:
            lits = list(c.lits if isinstance(c, Clause) else c)
            self.var_ids.update(abs(l) for l in lits)
            if not lits:
                self.ok = False
            elif len(lits) == 1:
                self.units.append(lits[0])
            else:
                self.clauses.append(lits)
        self.assign = {}
        self.level = {}
        self.reason = {}
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.watches = {}
        for idx, lits in enumerate(self.clauses):
            self._watch(lits[0], idx)
            self._watch(lits[1], idx)
        self.activity = dict.fromkeys(self.var_ids, 0.0)
        self.act_inc = 1.0
        self.order = sorted(self.var_ids)
        self.n_assumed = 0

    def _register(self, vid):
        if vid not in self.var_ids:
            self.var_ids.add(vid)
            self.activity[vid] = 0.0
            self.order = sorted(self.var_ids)

    def _watch(self, lit, idx):
        # watcher lists are keyed by the literal whose falsification wakes them
        self.watches.setdefault(-lit, []).append(idx)

    def _value(self, lit):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v == (lit > 0)

    def _enqueue(self, lit, reason=None):
        vid = abs(lit)
        self.assign[vid] = lit > 0
        self.level[vid] = len(self.trail_lim)
        self.reason[vid] = reason
        self.trail.append(lit)

    def _propagate(self):
        """Exhaustive unit propagation; returns a conflict clause or None."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            pending = self.watches.pop(lit, None)
            if not pending:
                continue
            keep = []
            conflict = None
            for pos, idx in enumerate(pending):
                lits = self.clauses[idx]
                if lits[0] == -lit:
                    lits[0], lits[1] = lits[1], lits[0]
                if self._value(lits[0]) is True:
                    keep.append(idx)
                    continue
                for k in range(2, len(lits)):
                    if self._value(lits[k]) is not False:
                        lits[1], lits[k] = lits[k], lits[1]
                        self._watch(lits[1], idx)
                        break
                else:
                    keep.append(idx)
                    if self._value(lits[0]) is False:
                        keep.extend(pending[pos + 1:])
                        conflict = lits
                        break
                    self._enqueue(lits[0], idx)
            if keep:
                self.watches.setdefault(lit, []).extend(keep)
            if conflict is not None:
                return conflict
        return None

    def _bump(self, vid):
        self.activity[vid] += self.act_inc
        if self.activity[vid] > 1e100:
            for v in self.activity:
                self.activity[v] *= 1e-100
            self.act_inc *= 1e-100

    def _analyze(self, conflict):
        """First-UIP analysis; returns (learnt clause lits, backtrack level)."""
        cur = len(self.trail_lim)
        seen = set()
        learnt = []
        counter = 0
        lits = conflict
        idx = len(self.trail) - 1
        while True:
            for l in lits:
                vid = abs(l)
                if vid in seen or self.level[vid] == 0:
                    continue
                seen.add(vid)
                self._bump(vid)
                if self.level[vid] == cur:
                    counter += 1
                else:
                    learnt.append(l)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            uip = self.trail[idx]
            seen.discard(abs(uip))
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            lits = [l for l in self.clauses[self.reason[abs(uip)]] if l != uip]
        learnt.insert(0, -uip)
        if len(learnt) == 1:
            return learnt, 0
        back = max(self.level[abs(l)] for l in learnt[1:])
        for k in range(1, len(learnt)):
            if self.level[abs(learnt[k])] == back:
                learnt[1], learnt[k] = learnt[k], learnt[1]
                break
        return learnt, back

    def _backtrack(self, lvl):
        while len(self.trail_lim) > lvl:
            mark = self.trail_lim.pop()
            while len(self.trail) > mark:
                vid = abs(self.trail.pop())
                del self.assign[vid], self.level[vid], self.reason[vid]
        self.qhead = min(self.qhead, len(self.trail))
        self.n_assumed = min(self.n_assumed, lvl)

    def _decide_var(self):
        best = None
        best_act = -1.0
        for vid in self.order:
            if vid not in self.assign and self.activity[vid] > best_act:
                best, best_act = vid, self.activity[vid]
        return best

    def _analyze_final(self, start_lits, assumption_set):
        """Explain the falsity of start_lits as a set of assumption literals."""
        core = set()
        seen = set()
        for l in start_lits:
            vid = abs(l)
            if vid in self.level and self.level[vid] > 0:
                seen.add(vid)
        for lit in reversed(self.trail):
            vid = abs(lit)
            if vid not in seen:
                continue
            r = self.reason[vid]
            if r is None:
                if lit in assumption_set:
                    core.add(lit)
            else:
                for l in self.clauses[r]:
                    if abs(l) != vid and self.level[abs(l)] > 0:
                        seen.add(abs(l))
        return core

    def solve(self, assumptions=()):
        assumptions = list(assumptions)
        for a in assumptions:
            self._register(abs(a))
        if not self.ok:
            return SatResult("unsat", core=set())
        for u in self.units:
            v = self._value(u)
            if v is False:
                return SatResult("unsat", core=set())
            if v is None:
                self._enqueue(u)
        assumption_set = set(assumptions)
        conflicts = 0
        restart_num = 1
        restart_lim = 100 * _luby(restart_num)
        while True:
            conflict = self._propagate()
            if conflict is not None:
                if len(self.trail_lim) == 0:
                    return SatResult("unsat", core=set())
                if len(self.trail_lim) <= self.n_assumed:
                    core = self._analyze_final(conflict, assumption_set)
                    return SatResult("unsat", core=core)
                conflicts += 1
                learnt, back = self._analyze(conflict)
                self._backtrack(back)
                idx = len(self.clauses)
                self.clauses.append(learnt)
                if len(learnt) >= 2:
                    self._watch(learnt[0], idx)
                    self._watch(learnt[1], idx)
                    self._enqueue(learnt[0], idx)
                else:
                    self._enqueue(learnt[0])
                self.act_inc /= 0.95
                if conflicts >= restart_lim:
                    conflicts = 0
                    restart_num += 1
                    restart_lim = 100 * _luby(restart_num)
                    self._backtrack(self.n_assumed)
                continue
            if self.n_assumed < len(assumptions):
                a = assumptions[self.n_assumed]
                v = self._value(a)
                if v is False:
                    core = self._analyze_final([a], assumption_set)
                    core.add(a)
                    return SatResult("unsat", core=core)
                self.trail_lim.append(len(self.trail))
                self.n_assumed += 1
                if v is None:
                    self._enqueue(a)
                continue
            vid = self._decide_var()
            if vid is None:
                return SatResult("sat", model=dict(self.assign))
            self.trail_lim.append(len(self.trail))
            self._enqueue(vid)  # positive polarity first
        # not reached


def solve(f, assumptions=(), extra_vars=()):
    """Decide CNF f under assumption literals."""
    return Solver(f, extra_vars=extra_vars).solve(assumptions)


def implies(a, b):
    """True iff formula a implies every clause of b."""
    for c in b:
        if solve(a, assumptions=[-l for l in c]):
            return False
    return True


def max_relax_solve(hard, soft, target):
    """Satisfy hard plus the target assignment while greedily minimizing the
    set of falsified soft clauses.

    Linear search: assume one selector per soft clause, drop the lowest-index
    selector of each unsat core until sat, then try re-adding dropped
    selectors for local minimality.  Returns falsified soft-clause indices.
    """
    soft = [c if isinstance(c, Clause) else Clause(c) for c in soft]
    top = 0
    for c in list(hard) + soft:
        for l in c:
            top = max(top, abs(l))
    for v in target:
        top = max(top, abs(v))
    selectors = list(range(top + 1, top + 1 + len(soft)))
    clause_lists = [list(c.lits if isinstance(c, Clause) else c) for c in hard]
    for sel, c in zip(selectors, soft):
        clause_lists.append([-sel] + list(c.lits))
    target_lits = [vid if val else -vid for vid, val in sorted(target.items())]
    active = set(selectors)
    dropped = []
    model = None
    while True:
        res = Solver(clause_lists).solve(target_lits + sorted(active))
        if res:
            model = res.model
            break
        core_sels = sorted(s for s in res.core if s in active)
        if not core_sels:
            raise ValueError("hard formula with target is unsatisfiable")
        active.discard(core_sels[0])
        dropped.append(core_sels[0])
    for s_id in sorted(dropped):
        res = Solver(clause_lists).solve(target_lits + sorted(active | {s_id}))
        if res:
            active.add(s_id)
            model = res.model
    sel_set = set(selectors)
    model = {v: val for v, val in model.items() if v not in sel_set}
    falsified = set()
    for i, c in enumerate(soft):
        if evaluate(Cnf([c]), model) is False:
            falsified.add(i)
    return RelaxResult(model, falsified)
