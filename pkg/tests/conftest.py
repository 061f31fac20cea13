import random

import pytest

from lorcheck.circuit import parse_circuit, encode, add_stuttering, build_miter
from lorcheck.cnf import evaluate
from lorcheck.qe_oracle import reach_bruteforce

STUCK0_SRC = """\
input x
latch s init 0 next (s AND x)
prop NOT s
"""

TOGGLE_SRC = """\
input x
latch s init 0 next (s XOR x)
prop NOT s
"""

DFF_SRC = """\
input x
latch s init 0 next x
output z = s
"""

INV_DFF_SRC = """\
input x
latch s init 0 next NOT x
output z = s
"""


@pytest.fixture
def stuck0():
    return add_stuttering(encode(parse_circuit(STUCK0_SRC)))


@pytest.fixture
def toggle():
    return add_stuttering(encode(parse_circuit(TOGGLE_SRC)))


@pytest.fixture
def dff_miter():
    m = build_miter(parse_circuit(DFF_SRC), parse_circuit(DFF_SRC))
    return add_stuttering(encode(m))


def random_system_source(rng, n_latch, n_in, init_zero=True):
    """A random SCIRC source with a property over the latches."""
    names = ["s%d" % i for i in range(n_latch)]
    ins = ["x%d" % i for i in range(n_in)]
    atoms = names + ins

    def expr(d=2, ops=("AND", "AND", "OR", "XOR")):
        if d == 0 or rng.random() < 0.35:
            a = rng.choice(atoms)
            return a if rng.random() < 0.75 else "NOT %s" % a
        return "(%s %s %s)" % (expr(d - 1, ops), rng.choice(ops),
                               expr(d - 1, ops))

    lines = ["input %s" % x for x in ins]
    for nm in names:
        init = "0" if init_zero else rng.choice("01*")
        lines.append("latch %s init %s next %s" % (nm, init, expr()))
    picks = rng.sample(names, min(len(names), 2))
    if len(picks) == 2:
        lines.append("prop NOT (%s AND %s)" % tuple(picks))
    else:
        lines.append("prop NOT %s" % picks[0])
    return "\n".join(lines) + "\n"


def random_system(rng, n_latch, n_in, **kw):
    src = random_system_source(rng, n_latch, n_in, **kw)
    return add_stuttering(encode(parse_circuit(src)))


def brute_force_verdict(ts):
    """Ground-truth verdict by explicit reachability."""
    reach = reach_bruteforce(ts, 2 ** len(ts.state_vars) + 1)
    ids = ts.state_ids(0)
    for s in reach:
        if evaluate(ts.prop, dict(zip(ids, s))) is False:
            return "counterexample"
    return "invariant"


def make_rng(seed):
    return random.Random(seed)
