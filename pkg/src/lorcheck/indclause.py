"""Inductive-clause machinery and the hybrid checker built on it: bad
states are excluded by clauses that are inductive relative to the previous
frame, and an initial relaxation can be seeded from a declarative guess
(e.g. dropping the interface-equality clauses of a miter)."""

from __future__ import annotations

from .cnf import Cnf, Clause, evaluate, longest_falsified_clause, rename_frame
from .sat import solve, implies
from .boundary import makeup_clauses
from .pclor import Checker, Options, Witness


class Cti:
    """Counterexample to induction: an F-state one transition before the
    state we tried to exclude.  target is None when the excluded state is
    itself initial."""

    __slots__ = ("state", "target", "frame")

    def __init__(self, state, target, frame):
        self.state = state
        self.target = target
        self.frame = frame


def _consecution_model(ts, f, clause, trans=None):
    """A model of F ∧ C ∧ T ∧ ¬C′, or None when C is inductive w.r.t. F."""
    c1 = rename_frame(Cnf([clause]), ts.table, {0: 1}).clauses[0]
    lhs = f + Cnf([clause]) + (trans if trans is not None else ts.trans)
    res = solve(lhs, assumptions=[-l for l in c1],
                extra_vars=ts.state_ids(0))
    return res.model if res else None


def make_inductive_clause(ts, f, s, frame=1):
    """A clause excluding state s, implied by I and inductive relative to f;
    or the Cti blocking it."""
    c = longest_falsified_clause(s)
    if not implies(ts.init, Cnf([c])):
        # s is an initial state: nothing implied by I can exclude it
        return Cti(s, None, frame)
    m = _consecution_model(ts, f, c)
    if m is not None:
        pred = {v: m[v] for v in ts.state_ids(0)}
        return Cti(pred, s, frame)
    return c


def generalize(c, f, ts):
    """Drop literals of c greedily (ascending variable order) while the
    result stays implied by I and inductive relative to f."""
    lits = list(c.lits)
    for l in sorted(lits, key=abs):
        if len(lits) == 1:
            break
        trial = Clause(x for x in lits if x != l)
        if not implies(ts.init, Cnf([trial])):
            continue
        if _consecution_model(ts, f, trial) is None:
            lits = list(trial.lits)
    return Clause(lits)


def educat_guess_rlx(chain, j, guess):
    """Seed H_j from a guessed relaxation: drop every transition clause
    matching the guess at step j-1→j and return the PQE makeup clauses."""
    kind, tag = guess
    if kind != "drop":
        raise ValueError("unknown guess kind %r" % kind)
    r = [c for i, c in enumerate(chain.trans_clauses)
         if c.tag == tag and i not in chain.removed[j - 1]]
    if not r:
        return Cnf([])
    return makeup_clauses(chain, j, r)


class IcChecker(Checker):
    """pc_lor with the backward walk strengthening frames by generalized
    inductive clauses instead of relax-and-make-up, and optional
    guess-driven seeding of each new frame."""

    def _backward_walk(self, k0, s0):
        if k0 == 0:
            return "reachable"
        chain = self.chain
        stack = [(k0, s0)]
        while stack:
            k, s = stack[-1]
            r = make_inductive_clause(self.ts, chain.h_cnf(k - 1), s, frame=k)
            if isinstance(r, Cti):
                if r.target is None or k - 1 == 0:
                    return "reachable"
                stack.append((k - 1, r.state))
                continue
            chain.strengthen(k, [generalize(r, chain.h_cnf(k - 1), self.ts)])
            stack.pop()
        return None

    def fin_rlx(self, j):
        if self.opts.guess is None or not self.opts.seed_with_prop:
            return super().fin_rlx(j)
        self.chain.add_frame()
        seed = educat_guess_rlx(self.chain, j, self.opts.guess)
        self.chain.strengthen(j, list(seed) + list(self.ts.prop))


def pc_lor_ic(ts, opts=None):
    """Decide the property with the inductive-clause hybrid; returns a
    Witness like pc_lor."""
    return IcChecker(ts, opts).run()
