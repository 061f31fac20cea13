"""Clause-level formula machinery: variables, clauses, CNF, resolution, cofactoring."""

from __future__ import annotations

# Roles a variable can play.  Next-state variables are state variables at
# frame k+1, so "state" covers both sides of the transition relation.
ROLES = ("state", "input", "internal", "free", "quant")


class Var:
    """A propositional variable with a role and an optional time frame."""

    __slots__ = ("id", "name", "role", "frame")

    def __init__(self, id, name, role, frame=None):
        if role not in ROLES:
            raise ValueError("unknown role %r" % (role,))
        self.id = id
        self.name = name
        self.role = role
        self.frame = frame

    def __repr__(self):
        if self.frame is None:
            return "Var(%d:%s)" % (self.id, self.name)
        return "Var(%d:%s@%d)" % (self.id, self.name, self.frame)


class VarTable:
    """Allocates variables and resolves (name, frame) pairs to ids."""

    def __init__(self):
        self.by_id = {}
        self.by_key = {}
        self._next = 1

    def new(self, name, role, frame=None):
        key = (name, frame)
        if key in self.by_key:
            raise ValueError("variable %r already declared at frame %r" % (name, frame))
        v = Var(self._next, name, role, frame)
        self._next += 1
        self.by_id[v.id] = v
        self.by_key[key] = v
        return v

    def get(self, name, frame=None):
        return self.by_key[(name, frame)]

    def lookup(self, vid):
        return self.by_id[vid]

    def at_frame(self, var, frame):
        """The variable with var's name at another frame, created on demand."""
        key = (var.name, frame)
        v = self.by_key.get(key)
        if v is None:
            v = self.new(var.name, var.role, frame)
        return v

    def vars(self):
        return list(self.by_id.values())


# Literals are signed ints (DIMACS style); an Assignment maps var id -> bool.


def lit_sat(lit, assignment):
    val = assignment.get(abs(lit))
    if val is None:
        return None
    return val == (lit > 0)


class Tautology:
    def __repr__(self):
        return "TAUTOLOGY"


TAUTOLOGY = Tautology()


class Clause:
    """An immutable duplicate-free disjunction of literals.

    Tautologies are rejected outright; the redundancy bookkeeping downstream
    assumes non-tautological clauses.  The optional tag marks clause origin
    (e.g. miter interface constraints) and is ignored by equality.
    """

    __slots__ = ("lits", "tag")

    def __init__(self, lits, tag=None):
        seen = {}
        for l in lits:
            if l == 0:
                raise ValueError("zero literal")
            if -l in seen:
                raise ValueError("tautological clause %r" % (list(lits),))
            seen[l] = True
        self.lits = tuple(sorted(seen, key=lambda l: (abs(l), l < 0)))
        self.tag = tag

    def __iter__(self):
        return iter(self.lits)

    def __len__(self):
        return len(self.lits)

    def __contains__(self, lit):
        return lit in self.lits

    def __eq__(self, other):
        return isinstance(other, Clause) and self.lits == other.lits

    def __hash__(self):
        return hash(self.lits)

    def __repr__(self):
        return "Clause(%s)" % (" ".join(str(l) for l in self.lits) or "empty")

    def variables(self):
        return set(abs(l) for l in self.lits)


class Cnf:
    """A sequence of clauses; duplicates allowed, removed by normalize()."""

    __slots__ = ("clauses",)

    def __init__(self, clauses=()):
        self.clauses = tuple(c if isinstance(c, Clause) else Clause(c) for c in clauses)

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self):
        return len(self.clauses)

    def __add__(self, other):
        return Cnf(self.clauses + tuple(other))

    def __eq__(self, other):
        return isinstance(other, Cnf) and self.clauses == other.clauses

    def __repr__(self):
        return "Cnf[%s]" % ", ".join(repr(c) for c in self.clauses)

    def normalize(self):
        seen = set()
        out = []
        for c in self.clauses:
            if c.lits not in seen:
                seen.add(c.lits)
                out.append(c)
        return Cnf(out)

    def variables(self):
        out = set()
        for c in self.clauses:
            out |= c.variables()
        return out


def resolve(c1, c2, vid):
    """Resolvent of c1 and c2 on variable vid, or TAUTOLOGY."""
    if vid in c1 and -vid in c2:
        pos, neg = c1, c2
    elif vid in c2 and -vid in c1:
        pos, neg = c2, c1
    else:
        raise ValueError("clauses not resolvable on %d" % vid)
    lits = [l for l in pos if l != vid] + [l for l in neg if l != -vid]
    seen = set(lits)
    for l in seen:
        if -l in seen:
            return TAUTOLOGY
    tag = pos.tag if pos.tag is not None and pos.tag == neg.tag else None
    return Clause(seen, tag=tag)


def cofactor(f, assignment):
    """f restricted to a partial assignment: satisfied clauses dropped,
    falsified literals removed.  A falsified clause becomes empty."""
    out = []
    for c in f:
        kept = []
        sat = False
        for l in c:
            v = lit_sat(l, assignment)
            if v is True:
                sat = True
                break
            if v is None:
                kept.append(l)
        if not sat:
            out.append(Clause(kept, tag=c.tag))
    return Cnf(out)


def rename_frame(f, table, shift):
    """Shift every variable's frame; shift is an int delta or a frame map."""
    delta = shift if isinstance(shift, int) else None

    def move(lit):
        var = table.lookup(abs(lit))
        if delta is not None:
            nf = var.frame + delta
        else:
            if var.frame not in shift:
                raise ValueError("frame %r not mapped" % (var.frame,))
            nf = shift[var.frame]
        nv = table.at_frame(var, nf)
        return nv.id if lit > 0 else -nv.id

    return Cnf(Clause([move(l) for l in c], tag=c.tag) for c in f)


def evaluate(f, assignment):
    """True / False / None (undetermined) under a partial assignment."""
    unknown = False
    for c in f:
        sat = False
        open_lit = False
        for l in c:
            v = lit_sat(l, assignment)
            if v is True:
                sat = True
                break
            if v is None:
                open_lit = True
        if not sat:
            if not open_lit:
                return False
            unknown = True
    return None if unknown else True


def longest_falsified_clause(state, var_ids=None):
    """The clause falsified exactly by this complete assignment."""
    if var_ids is None:
        var_ids = state.keys()
    lits = []
    for vid in sorted(var_ids):
        if vid not in state:
            raise ValueError("assignment misses variable %d" % vid)
        lits.append(-vid if state[vid] else vid)
    return Clause(lits)
