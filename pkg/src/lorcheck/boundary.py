"""Boundary-formula chains: per-frame over-approximations H_0..H_j tied to
per-frame relaxed transition relations, the PQE step that converts a
relaxation into makeup clauses, and the CO-condition checker."""

from __future__ import annotations

from .cnf import Cnf, rename_frame
from .sat import implies
from .pqe import PqeTask, take_out


class CoReport:
    """Per-frame, per-condition verdicts of the four CO conditions."""

    def __init__(self, entries):
        self.entries = entries  # list of (condition number, frame, bool)

    @property
    def ok(self):
        return all(passed for _, _, passed in self.entries)

    def failures(self):
        return [(c, m) for c, m, passed in self.entries if not passed]

    def __repr__(self):
        return "CoReport(ok=%s, failures=%s)" % (self.ok, self.failures())


class FrameChain:
    """H_0..H_j plus removed-clause sets R_k defining T^rlx_{k,k+1}.

    H_k is stored over canonical (frame-0) state variables and renamed on
    demand.  R_k is a set of indices into the canonical transition clauses,
    so T = T^rlx ∧ R holds syntactically for every frame.
    """

    def __init__(self, ts, pqe_budget=10 ** 6):
        self.ts = ts
        self.trans_clauses = list(ts.trans.clauses)
        self.h = [list(ts.init)]      # H_0 = I
        self.removed = []             # removed[k]: indices dropped in T^rlx_{k,k+1}
        self.pqe_budget = pqe_budget
        self.implied_marks = set()    # (clause lits, frame) with a cached "implied" verdict

    @property
    def j(self):
        return len(self.h) - 1

    def h_cnf(self, k):
        return Cnf(self.h[k])

    def h_at(self, k, frame):
        return rename_frame(self.h_cnf(k), self.ts.table, {0: frame})

    def trlx_cnf(self, k):
        """Relaxed transition relation of step k in canonical 0→1 form."""
        r = self.removed[k]
        return Cnf(c for i, c in enumerate(self.trans_clauses) if i not in r)

    def trlx_at(self, k):
        return rename_frame(self.trlx_cnf(k), self.ts.table, {0: k, 1: k + 1})

    def removed_cnf(self, k):
        return Cnf(self.trans_clauses[i] for i in sorted(self.removed[k]))

    def add_frame(self):
        self.h.append([])
        self.removed.append(set())

    def strengthen(self, k, clauses):
        present = set(c.lits for c in self.h[k])
        for c in clauses:
            if c.lits not in present:
                self.h[k].append(c)
                present.add(c.lits)

    def relax(self, k, indices):
        self.removed[k] |= set(indices)

    def restore(self, k, indices):
        self.removed[k] -= set(indices)


def unrolled_lhs(chain, k, extra, include_hk=True):
    """The PQE task for frame k: take `extra` (canonical 0→1 transition
    clauses, instantiated at step k-1→k) out of
    I₀ ∧ H₁..H_k ∧ T^rlx_{k-1,k}, quantifying everything below frame k.
    Frames before k-1 only contribute their H conjuncts: the chain
    summarizes the prefix, so no earlier transition copies are needed and
    the task stays the same size at every depth."""
    ts = chain.ts
    a = rename_frame(Cnf(extra), ts.table, {0: k - 1, 1: k})
    b = chain.h_at(0, 0)
    top = k if include_hk else k - 1
    for i in range(1, top + 1):
        b = b + chain.h_at(i, i)
    b = b + chain.trlx_at(k - 1)
    state_k = set(ts.state_ids(k))
    w = (a.variables() | b.variables()) - state_k
    return PqeTask(w, a, b.normalize())


def makeup_clauses(chain, k, r_new):
    """Relax step k-1→k by the clauses r_new and return makeup clauses G
    over canonical state variables; conjoining G to H_k preserves the
    chain's over-approximation equality."""
    r_new = list(r_new)
    indices = []
    for c in r_new:
        idx = chain.trans_clauses.index(c)
        if idx in chain.removed[k - 1]:
            raise ValueError("clause already removed from step %d" % (k - 1))
        indices.append(idx)
    chain.relax(k - 1, indices)
    if not indices:
        return Cnf([])
    task = unrolled_lhs(chain, k, r_new)
    a_star = take_out(task, budget=chain.pqe_budget)
    return rename_frame(a_star, chain.ts.table, {k: 0})


def check_co(chain):
    """Evaluate the four CO conditions on every frame."""
    ts = chain.ts
    entries = []
    init = Cnf(chain.h[0])
    for m in range(chain.j + 1):
        entries.append((1, m, implies(init, chain.h_cnf(m))))
        entries.append((2, m, implies(chain.h_cnf(m), ts.prop)))
    for m in range(1, chain.j + 1):
        lhs = chain.h_cnf(m - 1) + rename_frame(chain.trlx_cnf(m - 1), ts.table, {0: 0, 1: 1})
        entries.append((3, m, implies(lhs, chain.h_at(m, 1))))
        entries.append((4, m, implies(chain.h_cnf(m - 1), chain.h_cnf(m))))
    return CoReport(entries)


def clause_implied(chain, m, clause):
    """Does H_m imply the clause?  Positive verdicts are cached for good:
    frames only ever gain clauses, so an implied clause stays implied."""
    key = (clause.lits, m)
    if key in chain.implied_marks:
        return True
    if implies(chain.h_cnf(m), Cnf([clause])):
        chain.implied_marks.add(key)
        return True
    return False


def detect_invariant(chain):
    """H_{m-1} is an inductive invariant as soon as H_m implies it."""
    for m in range(1, chain.j + 1):
        if all(clause_implied(chain, m, c) for c in chain.h[m - 1]):
            return chain.h_cnf(m - 1).normalize()
    return None
