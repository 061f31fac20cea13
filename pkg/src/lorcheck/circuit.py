"""Circuit front-end: SCIRC parsing, Tseitin encoding to a transition
relation, stuttering, miter construction, time-frame instantiation."""

from __future__ import annotations

import itertools

from .cnf import Cnf, Clause, VarTable, rename_frame

# Expressions are nested tuples:
#   ('var', name) ('const', 0|1) ('not', e) ('and', a, b) ('or', a, b) ('xor', a, b)


class CircuitError(Exception):
    pass


class Latch:
    __slots__ = ("name", "init", "next")

    def __init__(self, name, init, next_expr):
        self.name = name
        self.init = init  # True / False / None (free)
        self.next = next_expr


class Circuit:
    def __init__(self):
        self.inputs = []
        self.latches = []
        self.signals = {}        # name -> expr, in declaration order
        self.outputs = {}        # name -> expr, in declaration order
        self.prop = None         # expr, or None
        self.stuttering_native = False
        # miter bookkeeping
        self.eq_input_pairs = []   # [(name_n, name_k)] constrained equal in T
        self.state_pairs = []      # [(latch_n, latch_k)] equal in I
        self.stutter_input = None  # name of the stuttering input, if added

    def latch_names(self):
        return [l.name for l in self.latches]

    def declared(self):
        names = set(self.inputs)
        names.update(self.latch_names())
        names.update(self.signals)
        names.update(self.outputs)
        return names


# ---------------------------------------------------------------- parsing

_KEYWORDS = {"NOT", "AND", "OR", "XOR"}


def _tokenize(text, lineno):
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            toks.append((ch, i))
            i += 1
        elif ch.isalnum() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append((text[i:j], i))
            i = j
        else:
            raise CircuitError("line %d col %d: bad character %r" % (lineno, i + 1, ch))
    return toks


class _ExprParser:
    def __init__(self, toks, lineno):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno

    def _err(self, msg):
        col = self.toks[self.pos - 1][1] + 1 if self.pos and self.pos <= len(self.toks) else 0
        raise CircuitError("line %d col %d: %s" % (self.lineno, col, msg))

    def _next(self):
        if self.pos >= len(self.toks):
            raise CircuitError("line %d: unexpected end of expression" % self.lineno)
        t = self.toks[self.pos]
        self.pos += 1
        return t[0]

    def term(self):
        t = self._next()
        if t == "0":
            return ("const", 0)
        if t == "1":
            return ("const", 1)
        if t == "NOT":
            return ("not", self.term())
        if t == "(":
            a = self.term()
            op = self._next()
            if op not in ("AND", "OR", "XOR"):
                self._err("expected AND/OR/XOR, got %r" % op)
            b = self.term()
            if self._next() != ")":
                self._err("expected ')'")
            return (op.lower(), a, b)
        if t in _KEYWORDS or t == ")":
            self._err("unexpected token %r" % t)
        if not (t[0].isalpha() or t[0] == "_"):
            self._err("bad name %r" % t)
        return ("var", t)

    def parse(self):
        e = self.term()
        if self.pos != len(self.toks):
            self._err("trailing tokens after expression")
        return e


def _parse_expr(text, lineno):
    return _ExprParser(_tokenize(text, lineno), lineno).parse()


def parse_circuit(text):
    """Parse SCIRC source into a validated Circuit."""
    c = Circuit()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        kind = words[0]
        if kind == "input":
            if len(words) != 2:
                raise CircuitError("line %d: input takes one name" % lineno)
            c.inputs.append(words[1])
        elif kind == "latch":
            if len(words) < 6 or words[2] != "init" or words[4] != "next":
                raise CircuitError("line %d: latch <name> init {0|1|*} next <expr>" % lineno)
            init = {"0": False, "1": True, "*": None}.get(words[3], "bad")
            if init == "bad":
                raise CircuitError("line %d: init must be 0, 1 or *" % lineno)
            expr = _parse_expr(" ".join(words[5:]), lineno)
            c.latches.append(Latch(words[1], init, expr))
        elif kind in ("signal", "output"):
            if len(words) < 4 or words[2] != "=":
                raise CircuitError("line %d: %s <name> = <expr>" % (lineno, kind))
            expr = _parse_expr(" ".join(words[3:]), lineno)
            (c.signals if kind == "signal" else c.outputs)[words[1]] = expr
        elif kind == "prop":
            c.prop = _parse_expr(" ".join(words[1:]), lineno)
        elif kind == "stuttering":
            if words[1:] != ["native"]:
                raise CircuitError("line %d: expected 'stuttering native'" % lineno)
            c.stuttering_native = True
        else:
            raise CircuitError("line %d: unknown directive %r" % (lineno, kind))
    _validate(c)
    return c


def _expr_names(e, out):
    if e[0] == "var":
        out.add(e[1])
    elif e[0] == "not":
        _expr_names(e[1], out)
    elif e[0] in ("and", "or", "xor"):
        _expr_names(e[1], out)
        _expr_names(e[2], out)


def _validate(c):
    seen = set()
    for name in itertools.chain(c.inputs, c.latch_names(), c.signals, c.outputs):
        if name in seen:
            raise CircuitError("duplicate name %r" % name)
        seen.add(name)
    declared = c.declared()
    exprs = [l.next for l in c.latches] + list(c.signals.values()) + list(c.outputs.values())
    if c.prop is not None:
        exprs.append(c.prop)
    for e in exprs:
        refs = set()
        _expr_names(e, refs)
        for r in refs - declared:
            raise CircuitError("undeclared signal %r" % r)
    # combinational acyclicity over signal definitions
    color = {}

    def visit(name):
        if name not in c.signals:
            return
        if color.get(name) == 1:
            raise CircuitError("combinational cycle through %r" % name)
        if color.get(name) == 2:
            return
        color[name] = 1
        refs = set()
        _expr_names(c.signals[name], refs)
        for r in sorted(refs):
            visit(r)
        color[name] = 2

    for name in c.signals:
        visit(name)
    # outputs may not feed anything, so no cycle check needed through them


# ------------------------------------------------------------- simulation


def eval_expr(e, env):
    op = e[0]
    if op == "var":
        return env[e[1]]
    if op == "const":
        return bool(e[1])
    if op == "not":
        return not eval_expr(e[1], env)
    a = eval_expr(e[1], env)
    b = eval_expr(e[2], env)
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    if op == "xor":
        return a != b
    raise ValueError("bad expr %r" % (e,))


def simulate(c, state, inputs):
    """One gate-level step: returns (values of all signals, next state)."""
    env = dict(state)
    env.update(inputs)
    for name, e in c.signals.items():
        env[name] = eval_expr(e, env)
    for name, e in c.outputs.items():
        env[name] = eval_expr(e, env)
    nxt = {l.name: eval_expr(l.next, env) for l in c.latches}
    return env, nxt


# --------------------------------------------------------------- encoding


class TransitionSystem:
    """CNF form of a circuit: I over S, T over S ∪ X ∪ Y ∪ S', P over S."""

    def __init__(self, table, circ, init, trans, prop,
                 state_vars, input_vars, internal_vars, stuttering_var=None):
        self.table = table
        self.circuit = circ
        self.init = init
        self.trans = trans
        self.prop = prop
        self.state_vars = state_vars        # frame-0 Vars, latch order
        self.input_vars = input_vars
        self.internal_vars = internal_vars
        self.next_vars = [table.at_frame(v, 1) for v in state_vars]
        self.stuttering_var = stuttering_var

    @property
    def is_stuttered(self):
        return self.stuttering_var is not None or self.circuit.stuttering_native

    def frame(self, j):
        return rename_frame(self.trans, self.table, {0: j, 1: j + 1})

    def at_frame(self, f, j):
        """A frame-0 state formula moved to frame j."""
        return rename_frame(f, self.table, {0: j})

    def state_ids(self, j=0):
        return [self.table.at_frame(v, j).id for v in self.state_vars]

    def state_of_model(self, model, j=0):
        return {self.table.at_frame(v, j).id: model[self.table.at_frame(v, j).id]
                for v in self.state_vars}

    def named_state(self, state, j=0):
        return {v.name: state[self.table.at_frame(v, j).id] for v in self.state_vars}


def frame(ts, j):
    """T_{j,j+1}: the transition relation instantiated at frame j."""
    if j < 0:
        raise ValueError("frame index must be non-negative")
    return ts.frame(j)


class _Encoder:
    def __init__(self, circ, table):
        self.c = circ
        self.table = table
        self.clauses = []
        self.env = {}      # name -> literal
        self.tmp = 0

    def fresh(self, hint):
        self.tmp += 1
        return self.table.new("%s~%d" % (hint, self.tmp), "internal", 0).id

    def add(self, lits, tag=None):
        self.clauses.append(Clause(lits, tag=tag))

    def gate(self, op, a, b, out):
        if b == a or b == -a:
            # equal or complementary operands: the straight Tseitin clauses
            # would be tautological, so tie the output directly
            same = b == a
            if same and op in ("and", "or"):
                self.add([-out, a])
                self.add([out, -a])
            elif op == "xor" and same or op == "and":
                self.add([-out])
            else:
                self.add([out])
            return
        if op == "and":
            self.add([-out, a])
            self.add([-out, b])
            self.add([out, -a, -b])
        elif op == "or":
            self.add([out, -a])
            self.add([out, -b])
            self.add([-out, a, b])
        elif op == "xor":
            self.add([-out, a, b])
            self.add([-out, -a, -b])
            self.add([out, a, -b])
            self.add([out, -a, b])

    def encode(self, e, target=None, hint="g"):
        """Encode expr e; returns its literal.  With target given, the
        expression's value is tied to that variable."""
        op = e[0]
        if op == "var":
            lit = self.env[e[1]]
        elif op == "const":
            lit = None  # handled by caller via constant folding
            raise ValueError("unsimplified constant")
        elif op == "not":
            lit = -self.encode(e[1], hint=hint)
        else:
            a = self.encode(e[1], hint=hint)
            b = self.encode(e[2], hint=hint)
            out = target if target is not None else self.fresh(hint)
            self.gate(op, a, b, out)
            return out
        if target is not None:
            self.add([-target, lit])
            self.add([target, -lit])
            return target
        return lit


def _simplify(e):
    """Constant folding so the encoder never sees 'const' below the top."""
    op = e[0]
    if op in ("var", "const"):
        return e
    if op == "not":
        s = _simplify(e[1])
        if s[0] == "const":
            return ("const", 1 - s[1])
        if s[0] == "not":
            return s[1]
        return ("not", s)
    a = _simplify(e[1])
    b = _simplify(e[2])
    for x, y in ((a, b), (b, a)):
        if x[0] == "const":
            if op == "and":
                return y if x[1] else ("const", 0)
            if op == "or":
                return ("const", 1) if x[1] else y
            if op == "xor":
                return ("not", y) if x[1] else y
    if op == "xor":
        # keep xor of identical operands folded; cheap and common in miters
        if a == b:
            return ("const", 0)
    return (op, a, b)


def _prop_support(c, e, acc, stack=()):
    """Latch names feeding a property expression; inputs are rejected."""
    op = e[0]
    if op == "const":
        return
    if op == "var":
        name = e[1]
        if name in c.signals:
            _prop_support(c, c.signals[name], acc, stack)
        elif name in c.outputs:
            _prop_support(c, c.outputs[name], acc, stack)
        elif name in c.inputs:
            raise CircuitError("property depends on input %r" % name)
        else:
            acc.append(name)
        return
    for sub in e[1:]:
        if isinstance(sub, tuple):
            _prop_support(c, sub, acc, stack)


def _inline(c, e):
    """Property expression with signals and outputs substituted away."""
    op = e[0]
    if op == "var":
        name = e[1]
        if name in c.signals:
            return _inline(c, c.signals[name])
        if name in c.outputs:
            return _inline(c, c.outputs[name])
        return e
    if op == "const":
        return e
    if op == "not":
        return ("not", _inline(c, e[1]))
    return (op, _inline(c, e[1]), _inline(c, e[2]))


def compile_state_predicate(expr, c, table):
    """CNF over frame-0 state vars equivalent to expr, by support enumeration.

    Canonical form: one longest-falsified clause per falsifying state of the
    support.  Fixture-scale only (support ≤ 16)."""
    support = []
    _prop_support(c, expr, support)
    names = sorted(set(support), key=c.latch_names().index)
    if len(names) > 16:
        raise CircuitError("property support too large (%d latches)" % len(names))
    inlined = _inline(c, expr)
    clauses = []
    for bits in itertools.product([False, True], repeat=len(names)):
        env = dict(zip(names, bits))
        if not eval_expr(inlined, env):
            lits = [-table.get(n, 0).id if env[n] else table.get(n, 0).id for n in names]
            clauses.append(Clause(lits))
    return Cnf(clauses)


def encode(c, prop_expr=None):
    """Compile a circuit to a TransitionSystem via Tseitin encoding."""
    table = VarTable()
    state_vars = [table.new(l.name, "state", 0) for l in c.latches]
    input_vars = [table.new(n, "input", 0) for n in c.inputs]
    next_vars = [table.at_frame(v, 1) for v in state_vars]
    enc = _Encoder(c, table)
    for v in state_vars + input_vars:
        enc.env[v.name] = v.id
    for name, e in itertools.chain(c.signals.items(), c.outputs.items()):
        e = _simplify(e)
        v = table.new(name, "internal", 0)
        if e[0] == "const":
            enc.add([v.id] if e[1] else [-v.id])
        else:
            enc.encode(e, target=v.id, hint=name)
        enc.env[name] = v.id
    for latch, nv in zip(c.latches, next_vars):
        e = _simplify(latch.next)
        if e[0] == "const":
            enc.add([nv.id] if e[1] else [-nv.id])
        else:
            enc.encode(e, target=nv.id, hint=latch.name)
    for a, b in c.eq_input_pairs:
        la, lb = enc.env[a], enc.env[b]
        enc.add([la, -lb], tag="interface")
        enc.add([-la, lb], tag="interface")
    trans = Cnf(enc.clauses)
    init_clauses = []
    for latch, v in zip(c.latches, state_vars):
        if latch.init is True:
            init_clauses.append(Clause([v.id]))
        elif latch.init is False:
            init_clauses.append(Clause([-v.id]))
    for a, b in c.state_pairs:
        va, vb = table.get(a, 0).id, table.get(b, 0).id
        init_clauses.append(Clause([va, -vb]))
        init_clauses.append(Clause([-va, vb]))
    init = Cnf(init_clauses).normalize()
    pe = prop_expr if prop_expr is not None else c.prop
    prop = compile_state_predicate(pe, c, table) if pe is not None else Cnf([])
    internal_vars = [v for v in table.vars() if v.role == "internal"]
    stut = table.get(c.stutter_input, 0) if c.stutter_input else None
    return TransitionSystem(table, c, init, trans, prop,
                            state_vars, input_vars, internal_vars, stut)


# -------------------------------------------------------------- stuttering


def add_stuttering(ts):
    """Re-encode with an extra input v: v=1 steps normally, v=0 copies the
    current state, making reachability monotone in the frame count."""
    if ts.is_stuttered:
        raise CircuitError("system already stuttered")
    old = ts.circuit
    c = Circuit()
    v = "stut"
    while v in old.declared():
        v = "_" + v
    c.inputs = list(old.inputs) + [v]
    for l in old.latches:
        guarded = ("or", ("and", ("var", v), l.next),
                   ("and", ("not", ("var", v)), ("var", l.name)))
        c.latches.append(Latch(l.name, l.init, guarded))
    c.signals = dict(old.signals)
    c.outputs = dict(old.outputs)
    c.prop = old.prop
    c.eq_input_pairs = list(old.eq_input_pairs)
    c.state_pairs = list(old.state_pairs)
    c.stutter_input = v
    return encode(c, None if old.prop is not None else _encoded_prop_expr(ts))


def _encoded_prop_expr(ts):
    # rebuild a prop expression from an already-compiled P, for systems
    # whose property was supplied programmatically rather than in SCIRC
    if len(ts.prop) == 0:
        return None
    table = ts.table
    terms = []
    for cl in ts.prop:
        lits = []
        for l in cl:
            name = table.lookup(abs(l)).name
            lits.append(("var", name) if l > 0 else ("not", ("var", name)))
        t = lits[0]
        for x in lits[1:]:
            t = ("or", t, x)
        terms.append(t)
    e = terms[0]
    for t in terms[1:]:
        e = ("and", e, t)
    return e


# ------------------------------------------------------------------ miter


def _rename_expr(e, pre):
    op = e[0]
    if op == "var":
        return ("var", pre + e[1])
    if op == "const":
        return e
    if op == "not":
        return ("not", _rename_expr(e[1], pre))
    return (op, _rename_expr(e[1], pre), _rename_expr(e[2], pre))


def build_miter(n, k):
    """Sequential-equivalence miter of circuits n and k.

    Inputs are pairwise constrained equal (clauses tagged 'interface'),
    initial states pairwise equal, and the property says the output
    difference stays 0."""
    if len(n.inputs) != len(k.inputs) or len(n.outputs) != len(k.outputs):
        raise CircuitError("input/output arity mismatch")
    m = Circuit()
    for pre, src in (("n.", n), ("k.", k)):
        m.inputs.extend(pre + x for x in src.inputs)
        for l in src.latches:
            m.latches.append(Latch(pre + l.name, l.init, _rename_expr(l.next, pre)))
        for name, e in src.signals.items():
            m.signals[pre + name] = _rename_expr(e, pre)
        for name, e in src.outputs.items():
            m.signals[pre + name] = _rename_expr(e, pre)
    m.eq_input_pairs = list(zip(("n." + x for x in n.inputs),
                                ("k." + x for x in k.inputs)))
    m.state_pairs = list(zip(("n." + l.name for l in n.latches),
                             ("k." + l.name for l in k.latches)))
    diff = None
    for zn, zk in zip(n.outputs, k.outputs):
        x = ("xor", ("var", "n." + zn), ("var", "k." + zk))
        diff = x if diff is None else ("or", diff, x)
    m.outputs["diff"] = diff if diff is not None else ("const", 0)
    m.prop = ("not", ("var", "diff"))
    return m
