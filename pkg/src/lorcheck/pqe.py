"""Production partial-quantifier-elimination solver.

take_out(task) finds a W-free A* with A* ∧ ∃W[B] ≡ ∃W[A ∧ B]: it "takes A out
of the scope of the quantifiers".  The search branches on variables, proving
clauses descended from A redundant per subspace (D-sequents), joining branch
results, and turning pairs of falsified clauses into conflict resolvents.

Every global pool mutation used here preserves ∃W-equivalence on its own:
adding an implied resolvent, skipping or deleting a subsumed clause, deleting
a blocked clause, or eliminating a quantified variable by resolution.
Branch-local discharges that cannot be grounded that way are
finalized by the last of these moves, so the answer's correctness never rests
on the order in which subspace D-sequents compose.
"""

from __future__ import annotations

import sys

from .cnf import Cnf, Clause, TAUTOLOGY, resolve, lit_sat


class PqeBudgetError(Exception):
    pass


class PqeTask:
    def __init__(self, w, a, b):
        self.w = frozenset(w)
        self.a = a if isinstance(a, Cnf) else Cnf(a)
        self.b = b if isinstance(b, Cnf) else Cnf(b)

    @property
    def v(self):
        return (self.a.variables() | self.b.variables()) - self.w


class DSequent:
    """Asserts clause redundancy in ∃W[A ∧ B] within a subspace."""

    __slots__ = ("subspace", "clause", "reason")

    def __init__(self, subspace, clause, reason):
        self.subspace = dict(subspace)
        self.clause = clause
        self.reason = reason

    def __repr__(self):
        return "DSequent(%r, %r, %s)" % (self.subspace, self.clause, self.reason)


def join(d1, d2, vid):
    """Merge two branch D-sequents for the same clause across variable vid."""
    if d1.clause != d2.clause:
        raise ValueError("join: different clauses")
    s1, s2 = d1.subspace, d2.subspace
    if vid not in s1 or vid not in s2 or s1[vid] == s2[vid]:
        raise ValueError("join: branch variable not split across the inputs")
    for v in (set(s1) & set(s2)) - {vid}:
        if s1[v] != s2[v]:
            raise ValueError("join: subspaces disagree on %d" % v)
    merged = dict(s1)
    merged.update(s2)
    del merged[vid]
    return DSequent(merged, d1.clause, "join")


def conflict_clause_dsequent(vid, falsified0, falsified1):
    """Resolvent of the two branch-falsified clauses: the special D-sequent
    that makes every clause redundant in the current subspace."""
    if not ((vid in falsified0 and -vid in falsified1)
            or (vid in falsified1 and -vid in falsified0)):
        raise ValueError("conflict clauses not resolvable on %d" % vid)
    r = resolve(falsified0, falsified1, vid)
    if r is TAUTOLOGY:
        raise ValueError("conflict resolvent is tautological")
    return r


class _PoolClause:
    __slots__ = ("clause", "tracked", "alive", "n_sat", "n_false")

    def __init__(self, clause, tracked):
        self.clause = clause
        self.tracked = tracked
        self.alive = True
        self.n_sat = 0
        self.n_false = 0


class _Solver:
    """Clause pool with an incremental branch assignment (trail)."""

    def __init__(self, task, budget):
        self.w = task.w
        self.budget = budget
        self.nodes = 0
        self.pool = []
        self.occ = {}          # literal -> pool positions (append-only)
        self.assign = {}       # current subspace q
        self.trail = []
        self.falsified = set()
        self.a_star = []
        self.dsequents = []
        self._index = {}       # lits -> alive pool position
        for c in task.b:
            self.add_clause(c, tracked=False)
        for c in task.a:
            self.add_clause(c, tracked=True)

    # ------------------------------------------------------------- pool

    def _find_subsumer(self, clause):
        """An alive clause whose literals are a subset of clause's, if any."""
        lits = set(clause.lits)
        seen = set()
        for l in clause:
            for j in self.occ.get(l, ()):
                if j in seen:
                    continue
                seen.add(j)
                pc = self.pool[j]
                if pc.alive and set(pc.clause.lits) <= lits:
                    return j
        # the empty clause shares no literal but subsumes everything
        return self._index.get(())

    def add_clause(self, clause, tracked):
        """Add a clause unless an alive clause subsumes it; returns the pool
        position of the clause or its subsumer."""
        sub = self._find_subsumer(clause)
        if sub is not None:
            return sub
        if tracked and not (clause.variables() & self.w):
            # W-free clauses are their own answer; no redundancy obligation
            self.a_star.append(clause)
            tracked = False
        pc = _PoolClause(clause, tracked)
        for l in clause:
            v = lit_sat(l, self.assign)
            if v is True:
                pc.n_sat += 1
            elif v is False:
                pc.n_false += 1
        self.pool.append(pc)
        pos = len(self.pool) - 1
        for l in clause:
            self.occ.setdefault(l, []).append(pos)
        self._index[clause.lits] = pos
        if pc.n_sat == 0 and pc.n_false == len(clause.lits):
            self.falsified.add(pos)
        return pos

    def kill(self, pos):
        pc = self.pool[pos]
        pc.alive = False
        self.falsified.discard(pos)
        if self._index.get(pc.clause.lits) == pos:
            del self._index[pc.clause.lits]

    def push(self, vid, val):
        self.assign[vid] = val
        self.trail.append(vid)
        for l, sat in ((vid, val), (-vid, not val)):
            for pos in self.occ.get(l, ()):
                pc = self.pool[pos]
                if sat:
                    pc.n_sat += 1
                else:
                    pc.n_false += 1
                    if pc.alive and pc.n_sat == 0 and pc.n_false == len(pc.clause.lits):
                        self.falsified.add(pos)

    def pop(self):
        vid = self.trail.pop()
        val = self.assign.pop(vid)
        for l, sat in ((vid, val), (-vid, not val)):
            for pos in self.occ.get(l, ()):
                pc = self.pool[pos]
                if sat:
                    pc.n_sat -= 1
                else:
                    if pc.n_sat == 0 and pc.n_false == len(pc.clause.lits):
                        self.falsified.discard(pos)
                    pc.n_false -= 1

    # ---------------------------------------------------------- queries

    def _is_obligation(self, pc):
        return pc.alive and pc.tracked and bool(pc.clause.variables() & self.w)

    def _free_lits(self, pos):
        return [l for l in self.pool[pos].clause if abs(l) not in self.assign]

    def _subsumed_now(self, pos, excluded):
        """Condition (b): a live clause's cofactor subsumes this one's."""
        rem = set(self._free_lits(pos))
        empty = self._index.get(())
        if empty is not None and empty != pos and empty not in excluded:
            return True
        seen = set()
        for l in rem:
            for j in self.occ.get(l, ()):
                if j == pos or j in seen or j in excluded:
                    continue
                seen.add(j)
                pc = self.pool[j]
                if not pc.alive or pc.n_sat > 0:
                    continue
                if all(x in rem for x in self.pool_free(j)):
                    return True
        return False

    def pool_free(self, pos):
        return (l for l in self.pool[pos].clause if abs(l) not in self.assign)

    def _blocked_now(self, pos, excluded):
        """Condition (c): an unassigned W variable of the clause admits no
        non-tautological resolvent among the live cofactored clauses."""
        c = self.pool[pos].clause
        free = set(self._free_lits(pos))
        for l in c:
            y = abs(l)
            if y not in self.w or y in self.assign:
                continue
            for j in self.occ.get(-l, ()):
                if j == pos or j in excluded:
                    continue
                pc = self.pool[j]
                if not pc.alive or pc.n_sat > 0:
                    continue
                taut = any(-x in free for x in self.pool_free(j) if x != -l)
                if not taut:
                    break
            else:
                return True
        return False

    def trivially_redundant(self, pos, excluded):
        """Returns the fired condition 'a' | 'b' | 'c', or None."""
        pc = self.pool[pos]
        if pc.n_sat > 0:
            return "a"
        if pc.n_false == len(pc.clause.lits):
            return None
        if self._subsumed_now(pos, excluded):
            return "b"
        if self._blocked_now(pos, excluded):
            return "c"
        return None

    # ------------------------------------------------- discharge by proof

    def dp_discharge(self, pos):
        """Ground the obligation of a tracked W-clause by eliminating its
        lowest W variable outright: add every resolvent on the pivot, then
        delete all clauses containing it.  Partial elimination would let
        later resolutions re-derive the deleted clause and loop; a fully
        eliminated variable can never reappear in the pool."""
        c = self.pool[pos].clause
        pivot = min(v for v in c.variables() if v in self.w)
        self.eliminate_var(pivot)

    def eliminate_var(self, pivot):
        up = [j for j in self.occ.get(pivot, ()) if self.pool[j].alive]
        dn = [j for j in self.occ.get(-pivot, ()) if self.pool[j].alive]
        new = []
        for i in up:
            for j in dn:
                self._tick()
                r = resolve(self.pool[i].clause, self.pool[j].clause, pivot)
                if r is not TAUTOLOGY:
                    new.append((r, self.pool[i].tracked or self.pool[j].tracked))
        for j in up + dn:
            if self.pool[j].tracked:
                self.dsequents.append(
                    DSequent({}, self.pool[j].clause, "resolved-out"))
            self.kill(j)
        for r, tracked in new:
            self.add_clause(r, tracked=tracked)

    # ------------------------------------------------------------ search

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise PqeBudgetError("pqe node budget exceeded")

    def _obligations(self, excluded):
        return [i for i, pc in enumerate(self.pool)
                if self._is_obligation(pc) and i not in excluded]

    def search(self):
        """Returns ('done',) or ('conflict', pool index of falsified clause)."""
        node_discharged = set()
        while True:
            self._tick()
            if self.falsified:
                return ("conflict", min(self.falsified))
            progress = True
            while progress:
                progress = False
                for i in self._obligations(node_discharged):
                    cond = self.trivially_redundant(i, node_discharged)
                    if cond:
                        node_discharged.add(i)
                        self.dsequents.append(
                            DSequent(self.assign, self.pool[i].clause, cond))
                        progress = True
            pending = self._obligations(node_discharged)
            if not pending:
                return ("done",)
            # branch on the first open obligation: its W variables first,
            # ascending variable id
            cvars = sorted(self.pool[pending[0]].clause.variables()
                           - set(self.assign))
            branch = min((v for v in cvars if v in self.w), default=None)
            if branch is None:
                branch = cvars[0]
            self.push(branch, False)
            q0 = dict(self.assign)
            r0 = self.search()
            self.pop()
            if r0[0] == "conflict" and branch not in self.pool[r0[1]].clause.variables():
                return r0
            self.push(branch, True)
            q1 = dict(self.assign)
            r1 = self.search()
            self.pop()
            if r1[0] == "conflict" and branch not in self.pool[r1[1]].clause.variables():
                return r1
            if r0[0] == "conflict" and r1[0] == "conflict":
                c0 = self.pool[r0[1]]
                c1 = self.pool[r1[1]]
                r = conflict_clause_dsequent(branch, c0.clause, c1.clause)
                pos = self.add_clause(r, tracked=c0.tracked or c1.tracked)
                # the resolvent (or its subsumer) is falsified in this subspace
                return ("conflict", pos)
            if r0[0] == "done" and r1[0] == "done":
                # every pre-branch obligation was discharged on both sides;
                # join the branch D-sequents and move on
                for i in pending:
                    if self.pool[i].alive:
                        node_discharged.add(i)
                        self.dsequents.append(
                            join(DSequent(q0, self.pool[i].clause, "branch"),
                                 DSequent(q1, self.pool[i].clause, "branch"),
                                 branch))
                continue
            # one side conflicted, the other finished
            cpos = r0[1] if r0[0] == "conflict" else r1[1]
            if not self.pool[cpos].tracked:
                # that subspace is empty modulo clauses carrying no
                # obligation, so the joined discharge stands
                for i in pending:
                    if self.pool[i].alive:
                        node_discharged.add(i)
                        self.dsequents.append(
                            DSequent(self.assign, self.pool[i].clause, "join"))
                continue
            # the conflict clause is itself an open obligation: ground it
            # by resolution and retry this node
            self.dp_discharge(cpos)

    # ------------------------------------------------------------- sweep

    def final_sweep(self):
        """Ground every still-live tracked W-clause by globally sound moves."""
        while True:
            pending = self._obligations(set())
            if not pending:
                return
            self._tick()
            acted = False
            for i in pending:
                if not self.pool[i].alive:
                    continue
                if self._subsumed_now(i, set()):
                    self.kill(i)
                    self.dsequents.append(DSequent({}, self.pool[i].clause, "b"))
                    acted = True
                elif self._blocked_now(i, set()):
                    self.kill(i)
                    self.dsequents.append(DSequent({}, self.pool[i].clause, "c"))
                    acted = True
            if not acted:
                self.dp_discharge(pending[0])

    def run(self):
        limit = sys.getrecursionlimit()
        need = 10 * (len(self.w) + len(self.pool)) + 10000
        if limit < need:
            sys.setrecursionlimit(need)
        try:
            self.search()
            self.final_sweep()
        finally:
            sys.setrecursionlimit(limit)
        return Cnf(self.a_star).normalize()


def take_out(task, budget=10 ** 6):
    """Solve a PQE task; falls back to complete enumeration if the branch
    budget runs out and the task is small enough to enumerate."""
    try:
        return _Solver(task, budget).run()
    except PqeBudgetError:
        from .qe_oracle import qe_bruteforce, OracleBudgetError
        try:
            return qe_bruteforce(task.w, task.a + task.b)
        except OracleBudgetError:
            raise PqeBudgetError("pqe-budget") from None


def trivially_redundant(c, pool, branch, w):
    """Standalone form of the three trivial-redundancy conditions for clause
    c against a clause pool within a branch assignment."""
    task = PqeTask(w, Cnf([c]), Cnf([p for p in pool if p != c]))
    s = _Solver(task, budget=1)
    for vid, val in branch.items():
        s.push(vid, val)
    pos = next((i for i, pc in enumerate(s.pool) if pc.clause == c), None)
    if pos is None:
        # subsumed outright on insertion
        return True
    return s.trivially_redundant(pos, set()) is not None
