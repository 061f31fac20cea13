"""The main checking loop: relax, make up with PQE-derived clauses, repair
the CO conditions, push clauses, and stop on an invariant or counterexample."""

from __future__ import annotations

from .cnf import Cnf, evaluate, longest_falsified_clause, rename_frame
from .sat import solve
from .boundary import FrameChain, makeup_clauses, detect_invariant, clause_implied
from .circuit import CircuitError


class CheckerError(Exception):
    """Engine failure (e.g. PQE budget); carries the partial chain."""

    def __init__(self, msg, chain=None):
        super().__init__(msg)
        self.chain = chain


class Witness:
    """Either a counterexample trace or an inductive invariant."""

    def __init__(self, kind, trace=None, invariant=None):
        self.kind = kind          # "counterexample" | "invariant"
        self.trace = trace        # [(inputs dict | None, state dict)], by name
        self.invariant = invariant  # Cnf over canonical state vars


class Options:
    def __init__(self, max_frames=None, pqe_budget=10 ** 6, guess=None,
                 seed=0, iter_hook=None, seed_with_prop=True):
        self.max_frames = max_frames
        self.pqe_budget = pqe_budget
        self.guess = guess            # e.g. ("drop", "interface")
        self.seed = seed              # recorded for reproducibility; the
                                      # engine itself is deterministic
        self.iter_hook = iter_hook    # called with the chain after each
                                      # main-loop iteration
        self.seed_with_prop = seed_with_prop


class _Unreachable(Exception):
    pass


class Checker:
    def __init__(self, ts, opts=None):
        if not ts.is_stuttered:
            raise CircuitError("checker requires a stuttered system")
        self.ts = ts
        self.opts = opts or Options()
        self.chain = FrameChain(ts, self.opts.pqe_budget)
        self.state_ids = ts.state_ids(0)

    # ------------------------------------------------------------ helpers

    def _find_bad_state(self, f):
        """A state satisfying formula f (over frame 0) but violating P."""
        for c in self.ts.prop:
            res = solve(f, assumptions=[-l for l in c], extra_vars=self.state_ids)
            if res:
                return {v: res.model[v] for v in self.state_ids}
        return None

    def _predecessor(self, k, s):
        """An H_{k-1}-state one T^rlx_{k-1,k}-transition before state s."""
        chain = self.chain
        f = chain.h_cnf(k - 1) + rename_frame(chain.trlx_cnf(k - 1),
                                              self.ts.table, {0: 0, 1: 1})
        s1 = self._shift_state(s, 1)
        res = solve(f, assumptions=[v if b else -v for v, b in sorted(s1.items())],
                    extra_vars=self.state_ids)
        if not res:
            return None
        return {v: res.model[v] for v in self.state_ids}

    def _shift_state(self, s, frame):
        table = self.ts.table
        return {table.at_frame(table.lookup(v), frame).id: b for v, b in s.items()}

    def _chain_reachable(self, k, s):
        """Is s reachable at frame k in the H-constrained relaxed unrolling?"""
        chain = self.chain
        f = chain.h_at(0, 0)
        for i in range(k):
            f = f + chain.trlx_at(i)
        for i in range(1, k + 1):
            f = f + chain.h_at(i, i)
        sk = self._shift_state(s, k)
        return bool(solve(f, assumptions=[v if b else -v for v, b in sorted(sk.items())]))

    def select_relaxation(self, k, target):
        """Clause indices to drop from T^rlx_{k-1,k} so that `target`
        becomes reachable from an H_{k-1}-state in one transition."""
        from .sat import max_relax_solve
        chain = self.chain
        kept = [i for i in range(len(chain.trans_clauses))
                if i not in chain.removed[k - 1]]
        soft = Cnf(rename_frame(Cnf([chain.trans_clauses[i]]), self.ts.table,
                                {0: 0, 1: 1}).clauses[0] for i in kept)
        hard = chain.h_cnf(k - 1)
        try:
            res = max_relax_solve(hard, soft, self._shift_state(target, 1))
        except ValueError:
            raise _Unreachable("target unreachable under any relaxation") from None
        return [kept[i] for i in sorted(res.falsified_soft)]

    def _exclude_state(self, k, s):
        """Make H_k false at s: relax step k-1→k to reach s, conjoin the PQE
        makeup clauses, and fall back to the longest falsified clause when s
        is provably unreachable in the original system."""
        chain = self.chain
        if self._predecessor(k, s) is None:
            try:
                idx = self.select_relaxation(k, s)
                g = makeup_clauses(chain, k,
                                   [chain.trans_clauses[i] for i in idx])
                chain.strengthen(k, list(g))
            except _Unreachable:
                pass
            if evaluate(chain.h_cnf(k), s) is False:
                return
            # s has no original-T predecessor inside H_{k-1} either (T
            # implies T^rlx), so s is unreachable and C_s holds on every
            # reachable state
            chain.strengthen(k, [longest_falsified_clause(s)])
            return
        # s is already one relaxed transition from H_{k-1}
        if self._chain_reachable(k, s):
            raise CheckerError("state %r is relaxed-chain reachable but must "
                               "be excluded; boundary invariant broken" % s,
                               self.chain)
        chain.strengthen(k, [longest_falsified_clause(s)])

    def _backward_walk(self, k0, s0):
        """Fig.-3 style reverse extension from an H_{k0}-state.

        Returns "reachable" if the walk connects s0 back to an initial
        state through the relaxed chain; otherwise strengthens the chain
        until s0 falsifies H_{k0} and returns None.  Only the top state is
        popped after a strengthening step."""
        if k0 == 0:
            return "reachable"
        stack = [(k0, s0)]
        while stack:
            k, s = stack[-1]
            pred = self._predecessor(k, s)
            if pred is not None:
                if k - 1 == 0:
                    return "reachable"
                stack.append((k - 1, pred))
                continue
            self._exclude_state(k, s)
            stack.pop()
        return None

    # ---------------------------------------------------- main operations

    def rem_bad_st(self, j):
        """Strengthen H_{j-1} until no bad state is one original-T
        transition away, or report a counterexample depth."""
        chain = self.chain
        ts = self.ts
        while True:
            found = None
            for c in ts.prop:
                c1 = rename_frame(Cnf([c]), ts.table, {0: 1}).clauses[0]
                f = chain.h_cnf(j - 1) + ts.trans
                res = solve(f, assumptions=[-l for l in c1],
                            extra_vars=self.state_ids)
                if res:
                    found = {v: res.model[v] for v in self.state_ids}
                    break
            if found is None:
                return None
            if self._backward_walk(j - 1, found) == "reachable":
                return j  # counterexample of j transitions exists

    def fin_rlx(self, j):
        """Create H_j and strengthen it until it implies P."""
        chain = self.chain
        chain.add_frame()
        while True:
            bad = self._find_bad_state(chain.h_cnf(j))
            if bad is None:
                return
            self._exclude_state(j, bad)

    def third_co_cond(self):
        """Repair condition 3: no H_{m-1}-state may reach a ¬H_m-state in
        one relaxed transition.  A violation source that proves reachable
        from I forces restoring dropped clauses instead."""
        chain = self.chain
        ts = self.ts
        for m in range(chain.j, 0, -1):
            while True:
                viol = None
                f = chain.h_cnf(m - 1) + rename_frame(chain.trlx_cnf(m - 1),
                                                      ts.table, {0: 0, 1: 1})
                for c in chain.h[m]:
                    c1 = rename_frame(Cnf([c]), ts.table, {0: 1}).clauses[0]
                    res = solve(f, assumptions=[-l for l in c1])
                    if res:
                        viol = res.model
                        break
                if viol is None:
                    break
                src = {v: viol[v] for v in self.state_ids}
                if self._backward_walk(m - 1, src) == "reachable":
                    self._restore_step(m - 1, viol)

    def _restore_step(self, k, model):
        """Un-relax: put back the dropped clauses of step k falsified by a
        violating transition whose source state is genuinely reachable."""
        chain = self.chain
        broken = []
        for i in sorted(chain.removed[k]):
            c = rename_frame(Cnf([chain.trans_clauses[i]]),
                             self.ts.table, {0: 0, 1: 1}).clauses[0]
            if evaluate(Cnf([c]), model) is False:
                broken.append(i)
        if not broken:
            raise CheckerError("reachable state drives a real transition out "
                               "of a boundary formula; invariant broken",
                               chain)
        chain.restore(k, broken)

    def fin_touch(self):
        """Push clauses toward frame 0 until implied, repair condition 3 if
        pushing breaks it, then look for an invariant."""
        chain = self.chain
        while True:
            for m in range(chain.j, 1, -1):
                for c in list(chain.h[m]):
                    if not clause_implied(chain, m - 1, c):
                        chain.strengthen(m - 1, [c])
            if not self._cond3_violated():
                break
            self.third_co_cond()
        return detect_invariant(chain)

    def _cond3_violated(self):
        chain = self.chain
        for m in range(1, chain.j + 1):
            f = chain.h_cnf(m - 1) + rename_frame(chain.trlx_cnf(m - 1),
                                                  self.ts.table, {0: 0, 1: 1})
            for c in chain.h[m]:
                c1 = rename_frame(Cnf([c]), self.ts.table, {0: 1}).clauses[0]
                if solve(f, assumptions=[-l for l in c1]):
                    return True
        return False

    # ------------------------------------------------------------- result

    def convert_cex(self, depth):
        """Re-derive a counterexample of the given length under the original
        T by bounded model checking; guaranteed to exist."""
        ts = self.ts
        f = rename_frame(ts.init, ts.table, {0: 0})
        for i in range(depth):
            f = f + ts.frame(i)
        for c in ts.prop:
            cd = rename_frame(Cnf([c]), ts.table, {0: depth}).clauses[0]
            res = solve(f, assumptions=[-l for l in cd],
                        extra_vars=[ts.table.at_frame(v, i).id
                                    for v in ts.state_vars + ts.input_vars
                                    for i in range(depth + 1)])
            if res:
                return self._trace_witness(res.model, depth)
        raise CheckerError("relaxed counterexample did not replay under the "
                           "original relation", self.chain)

    def _trace_witness(self, model, depth):
        ts = self.ts
        trace = []
        for i in range(depth + 1):
            state = {v.name: model[ts.table.at_frame(v, i).id]
                     for v in ts.state_vars}
            if i == 0:
                trace.append((None, state))
            else:
                inputs = {v.name: model[ts.table.at_frame(v, i - 1).id]
                          for v in ts.input_vars}
                trace.append((inputs, state))
        return Witness("counterexample", trace=trace)

    def run(self):
        ts = self.ts
        bad0 = self._find_bad_state(ts.init)
        if bad0 is not None:
            return self.convert_cex(0)
        max_frames = self.opts.max_frames or (2 ** len(ts.state_vars) + 1)
        for j in range(1, max_frames + 1):
            if self.rem_bad_st(j) is not None:
                return self.convert_cex(j)
            self.fin_rlx(j)
            self.third_co_cond()
            inv = self.fin_touch()
            if self.opts.iter_hook:
                self.opts.iter_hook(self.chain)
            if inv is not None:
                return Witness("invariant", invariant=inv)
        raise CheckerError("frame limit %d reached without a verdict"
                           % max_frames, self.chain)


def pc_lor(ts, opts=None):
    """Decide the property of a stuttered system; returns a Witness."""
    return Checker(ts, opts).run()
