import pytest

from lorcheck.cnf import Cnf, Clause, evaluate, rename_frame
from lorcheck.sat import implies
from lorcheck.boundary import FrameChain, check_co
from lorcheck.indclause import (Cti, make_inductive_clause, generalize,
                                educat_guess_rlx, pc_lor_ic)
from lorcheck.pclor import Options, pc_lor
from lorcheck.qe_oracle import verify_boundary
from conftest import random_system, brute_force_verdict, make_rng
from test_pclor import replay_trace, check_invariant_witness


class TestMakeInductiveClause:
    def test_excludes_unreachable_state(self, stuck0):
        s = stuck0.state_ids(0)[0]
        r = make_inductive_clause(stuck0, stuck0.init, {s: True})
        assert isinstance(r, Clause)
        assert r == Clause((-s,))

    def test_initial_state_yields_rooted_cti(self, stuck0):
        s = stuck0.state_ids(0)[0]
        r = make_inductive_clause(stuck0, stuck0.init, {s: False})
        assert isinstance(r, Cti)
        assert r.target is None

    def test_reachable_state_yields_predecessor_cti(self, toggle):
        s = toggle.state_ids(0)[0]
        r = make_inductive_clause(toggle, toggle.init, {s: True})
        assert isinstance(r, Cti)
        assert r.state == {s: False}
        assert r.target == {s: True}

    def test_clause_really_is_inductive(self):
        rng = make_rng(51)
        import itertools
        for _ in range(20):
            ts = random_system(rng, 2, 1)
            ids = ts.state_ids(0)
            f = ts.init
            for bits in itertools.product([False, True], repeat=2):
                s = dict(zip(ids, bits))
                r = make_inductive_clause(ts, f, s)
                if not isinstance(r, Clause):
                    continue
                assert evaluate(Cnf([r]), s) is False
                assert implies(ts.init, Cnf([r]))
                r1 = rename_frame(Cnf([r]), ts.table, {0: 1})
                assert implies(f + Cnf([r]) + ts.trans, r1)


class TestGeneralize:
    def test_drops_redundant_literals(self, stuck0):
        s = stuck0.state_ids(0)[0]
        stut = stuck0.stuttering_var.id
        # artificially widened clause; only ¬s is needed
        wide = Clause((-s, stut))
        g = generalize(wide, stuck0.init, stuck0)
        assert g == Clause((-s,))

    def test_result_still_inductive(self):
        rng = make_rng(52)
        for _ in range(15):
            ts = random_system(rng, 3, 1)
            ids = ts.state_ids(0)
            s = dict(zip(ids, (True, True, True)))
            r = make_inductive_clause(ts, ts.init, s)
            if not isinstance(r, Clause):
                continue
            g = generalize(r, ts.init, ts)
            assert set(g.lits) <= set(r.lits)
            assert implies(ts.init, Cnf([g]))
            g1 = rename_frame(Cnf([g]), ts.table, {0: 1})
            assert implies(ts.init + Cnf([g]) + ts.trans, g1)


class TestGuessSeeding:
    def test_interface_drop_recovers_state_equality(self, dff_miter):
        ts = dff_miter
        chain = FrameChain(ts)
        chain.add_frame()
        seed = educat_guess_rlx(chain, 1, ("drop", "interface"))
        sn, sk = ts.state_ids(0)
        eq = Cnf([Clause((sn, -sk)), Clause((-sn, sk))])
        assert implies(seed, eq) and implies(eq, seed)
        assert verify_boundary(seed, ts, chain.trlx_cnf(0), 1)

    def test_no_matching_tag_is_noop(self, dff_miter):
        chain = FrameChain(dff_miter)
        chain.add_frame()
        assert list(educat_guess_rlx(chain, 1, ("drop", "no-such-tag"))) == []
        assert chain.removed[0] == set()

    def test_unknown_kind_rejected(self, dff_miter):
        chain = FrameChain(dff_miter)
        chain.add_frame()
        with pytest.raises(ValueError):
            educat_guess_rlx(chain, 1, ("keep", "interface"))


class TestIcChecker:
    def test_stuck0_invariant(self, stuck0):
        w = pc_lor_ic(stuck0)
        assert w.kind == "invariant"
        check_invariant_witness(stuck0, w.invariant)

    def test_toggle_counterexample(self, toggle):
        w = pc_lor_ic(toggle)
        assert w.kind == "counterexample"
        replay_trace(toggle, w.trace)

    def test_sec_with_guess_converges_fast(self, dff_miter):
        frames = []
        opts = Options(guess=("drop", "interface"),
                       iter_hook=lambda ch: frames.append(ch.j))
        w = pc_lor_ic(dff_miter, opts)
        assert w.kind == "invariant"
        check_invariant_witness(dff_miter, w.invariant)
        assert max(frames) <= 2
        sn, sk = dff_miter.state_ids(0)
        eq = Cnf([Clause((sn, -sk)), Clause((-sn, sk))])
        assert implies(w.invariant, eq)

    def test_matches_plain_engine(self):
        rng = make_rng(53)
        for _ in range(20):
            ts = random_system(rng, rng.randint(1, 3), rng.randint(1, 2))
            want = brute_force_verdict(ts)
            reports = []
            w = pc_lor_ic(ts, Options(
                iter_hook=lambda ch: reports.append(check_co(ch))))
            assert w.kind == want == pc_lor(ts).kind
            assert all(r.ok for r in reports)
            if w.kind == "counterexample":
                replay_trace(ts, w.trace)
            else:
                check_invariant_witness(ts, w.invariant)
