import pytest

from lorcheck.circuit import CircuitError, parse_circuit, encode, simulate
from lorcheck.cnf import Cnf, Clause, evaluate, rename_frame
from lorcheck.sat import implies
from lorcheck.pclor import Checker, CheckerError, Options, Witness, pc_lor
from lorcheck.boundary import check_co
from lorcheck.qe_oracle import verify_boundary
from conftest import (STUCK0_SRC, random_system, brute_force_verdict,
                      make_rng)


def replay_trace(ts, trace):
    """Assert a counterexample trace is a real execution ending in a bad
    state, using gate-level simulation only."""
    first_inputs, state = trace[0]
    assert first_inputs is None
    assert evaluate(ts.init, {ts.table.get(n, 0).id: b
                              for n, b in state.items()}) is True
    for inputs, nxt in trace[1:]:
        _, got = simulate(ts.circuit, state, inputs)
        assert got == nxt
        state = nxt
    assert evaluate(ts.prop, {ts.table.get(n, 0).id: b
                              for n, b in state.items()}) is False


def check_invariant_witness(ts, inv):
    prop = ts.prop
    inv1 = rename_frame(inv, ts.table, {0: 1})
    assert implies(ts.init, inv)
    assert implies(inv, prop)
    assert implies(inv + ts.trans, inv1)


class TestVerdicts:
    def test_stuck0_invariant(self, stuck0):
        w = pc_lor(stuck0)
        assert w.kind == "invariant"
        check_invariant_witness(stuck0, w.invariant)
        s = stuck0.state_ids(0)[0]
        assert implies(w.invariant, Cnf([Clause((-s,))]))

    def test_toggle_counterexample(self, toggle):
        w = pc_lor(toggle)
        assert w.kind == "counterexample"
        assert len(w.trace) == 2
        replay_trace(toggle, w.trace)

    def test_bad_initial_state(self):
        from lorcheck.circuit import add_stuttering
        ts = add_stuttering(encode(parse_circuit(
            "input x\nlatch s init 1 next x\nprop NOT s\n")))
        w = pc_lor(ts)
        assert w.kind == "counterexample" and len(w.trace) == 1

    def test_requires_stuttering(self):
        ts = encode(parse_circuit(STUCK0_SRC))
        with pytest.raises(CircuitError):
            Checker(ts)

    def test_frame_limit(self):
        from lorcheck.circuit import add_stuttering
        src = ("input x0\n"
               "latch s0 init 0 next ((s0 AND s2) AND x0)\n"
               "latch s1 init 0 next x0\n"
               "latch s2 init 0 next ((s0 XOR NOT s0) AND (s1 AND s0))\n"
               "prop NOT (s2 AND s0)\n")
        ts = add_stuttering(encode(parse_circuit(src)))
        with pytest.raises(CheckerError):
            pc_lor(ts, Options(max_frames=1))
        assert pc_lor(ts).kind == "invariant"


class TestChainSoundness:
    def test_co_holds_each_iteration(self, stuck0):
        reports = []
        opts = Options(iter_hook=lambda ch: reports.append(check_co(ch)))
        pc_lor(stuck0, opts)
        assert reports and all(r.ok for r in reports)

    def test_boundaries_verified(self, stuck0):
        results = []

        def hook(ch):
            for k in range(1, ch.j + 1):
                results.append(verify_boundary(
                    ch.h_cnf(k), stuck0, ch.trlx_cnf(k - 1), k))
        pc_lor(stuck0, Options(iter_hook=hook))
        assert results and all(results)


class TestDifferential:
    def test_matches_brute_force(self):
        rng = make_rng(41)
        for _ in range(25):
            ts = random_system(rng, rng.randint(1, 3), rng.randint(1, 2))
            want = brute_force_verdict(ts)
            reports = []
            w = pc_lor(ts, Options(
                iter_hook=lambda ch: reports.append(check_co(ch))))
            assert w.kind == want
            assert all(r.ok for r in reports)
            if w.kind == "counterexample":
                replay_trace(ts, w.trace)
            else:
                check_invariant_witness(ts, w.invariant)

    def test_free_initial_states(self):
        rng = make_rng(42)
        for _ in range(10):
            ts = random_system(rng, rng.randint(1, 3), 1, init_zero=False)
            w = pc_lor(ts)
            assert w.kind == brute_force_verdict(ts)
