"""Command-line surface: property checking, equivalence checking, a
standalone PQE solver, and independent witness verification.

Exit codes: 0 property holds / circuits equivalent, 1 fails / inequivalent,
2 no verdict within budgets, 3 malformed input.
"""

from __future__ import annotations

import argparse
import sys
import time

from .cnf import Cnf, Clause, evaluate, rename_frame
from .sat import solve, implies
from .circuit import (CircuitError, parse_circuit, encode, add_stuttering,
                      build_miter)
from .pqe import PqeTask, take_out, PqeBudgetError
from .pclor import pc_lor, Options, CheckerError
from .indclause import pc_lor_ic
from .boundary import check_co


class RunReport:
    def __init__(self, verdict, frames_used=0, witness_path=None,
                 clause_counts=(), seconds=0.0):
        self.verdict = verdict
        self.frames_used = frames_used
        self.witness_path = witness_path
        self.clause_counts = list(clause_counts)
        self.seconds = seconds

    def dump(self, out):
        out.write("verdict: %s\n" % self.verdict)
        out.write("frames: %d\n" % self.frames_used)
        if self.clause_counts:
            out.write("clauses: %s\n" % " ".join(
                "H%d=%d" % (k, n) for k, n in enumerate(self.clause_counts)))
        if self.witness_path:
            out.write("witness: %s\n" % self.witness_path)
        out.write("time: %.3fs\n" % self.seconds)


def _parse_guess(text):
    kind, sep, tag = text.partition(":")
    if not sep or kind != "drop" or not tag:
        raise ValueError("guess must look like drop:<tag>")
    return (kind, tag)


# ------------------------------------------------------------ witness files


def write_witness(path, ts, witness):
    with open(path, "w") as f:
        if witness.kind == "counterexample":
            f.write("counterexample\n")
            f.write("# inputs: %s\n" % " ".join(v.name for v in ts.input_vars))
            f.write("# state: %s\n" % " ".join(v.name for v in ts.state_vars))
            for i, (ins, st) in enumerate(witness.trace):
                ibits = ("-" if ins is None else
                         "".join("1" if ins[v.name] else "0"
                                 for v in ts.input_vars))
                sbits = "".join("1" if st[v.name] else "0"
                                for v in ts.state_vars)
                f.write("step %d: inputs %s state %s\n" % (i, ibits, sbits))
        else:
            f.write("invariant\n")
            idx = {}
            for n, v in enumerate(ts.state_vars, 1):
                idx[v.id] = n
                f.write("c var %d %s\n" % (n, v.name))
            clauses = list(witness.invariant)
            f.write("p cnf %d %d\n" % (len(ts.state_vars), len(clauses)))
            for c in clauses:
                f.write(" ".join(str(idx[abs(l)] * (1 if l > 0 else -1))
                                 for l in c) + " 0\n")


def _read_witness(path):
    with open(path) as f:
        lines = [l.rstrip("\n") for l in f]
    if not lines:
        raise ValueError("empty witness file")
    return lines


def verify_trace(ts, lines, report):
    input_names = []
    state_names = []
    steps = []
    for l in lines[1:]:
        if l.startswith("# inputs:"):
            input_names = l.split(":", 1)[1].split()
        elif l.startswith("# state:"):
            state_names = l.split(":", 1)[1].split()
        elif l.startswith("step "):
            head, _, rest = l.partition(":")
            words = rest.split()
            if words[0] != "inputs" or words[2] != "state":
                raise ValueError("malformed trace line: %r" % l)
            steps.append((int(head.split()[1]), words[1], words[3]))
    if not steps:
        raise ValueError("trace has no steps")
    if [i for i, _, _ in steps] != list(range(len(steps))):
        raise ValueError("trace steps are not consecutive")

    def state_assign(bits, frame):
        return {ts.table.get(n, frame).id: b == "1"
                for n, b in zip(state_names, bits)}

    st = state_assign(steps[0][2], 0)
    if evaluate(ts.init, st) is not True:
        report("step 0: state is not initial")
        return False
    for i, ibits, sbits in steps[1:]:
        cur = state_assign(steps[i - 1][2], 0)
        nxt = state_assign(sbits, 1)
        ins = {ts.table.get(n, 0).id: b == "1"
               for n, b in zip(input_names, ibits)}
        assume = [(v if b else -v) for a in (cur, ins, nxt)
                  for v, b in sorted(a.items())]
        if not solve(ts.trans, assumptions=assume):
            report("step %d: not a transition of the system" % i)
            return False
    last = state_assign(steps[-1][2], 0)
    if evaluate(ts.prop, last) is not False:
        report("final state does not violate the property")
        return False
    return True


def verify_invariant(ts, lines, report):
    names = {}
    clauses = []
    for l in lines[1:]:
        words = l.split()
        if not words or words[0] == "p":
            continue
        if words[0] == "c":
            if len(words) == 4 and words[1] == "var":
                names[int(words[2])] = words[3]
            continue
        lits = [int(x) for x in words]
        if lits[-1] != 0:
            raise ValueError("clause line missing terminating 0: %r" % l)
        clauses.append(lits[:-1])
    ids = {}
    for n, nm in names.items():
        ids[n] = ts.table.get(nm, 0).id
    inv = Cnf(Clause(tuple(ids[abs(l)] * (1 if l > 0 else -1) for l in c))
              for c in clauses)
    if not implies(ts.init, inv):
        report("condition 1: initial states do not satisfy the invariant")
        return False
    if not implies(inv, ts.prop):
        report("condition 2: invariant does not imply the property")
        return False
    inv1 = rename_frame(inv, ts.table, {0: 1})
    if not implies(inv + ts.trans, inv1):
        report("condition 3: invariant is not inductive")
        return False
    return True


# ------------------------------------------------------------ PQE DIMACS


def parse_pqe_dimacs(text):
    w = set()
    a, b = [], []
    section = a
    header = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p "):
            words = line.split()
            if len(words) != 5 or words[1] != "pqe":
                raise ValueError("expected header 'p pqe <vars> <A> <B>'")
            header = tuple(int(x) for x in words[2:])
            continue
        if line.startswith("w "):
            ids = [int(x) for x in line.split()[1:]]
            if not ids or ids[-1] != 0:
                raise ValueError("w line must end in 0")
            w.update(ids[:-1])
            continue
        if line == "%":
            section = b
            continue
        lits = [int(x) for x in line.split()]
        if not lits or lits[-1] != 0:
            raise ValueError("clause line must end in 0: %r" % raw)
        section.append(Clause(tuple(lits[:-1])))
    if header is None:
        raise ValueError("missing 'p pqe' header")
    if header[1] != len(a) or header[2] != len(b):
        raise ValueError("header clause counts do not match body")
    return PqeTask(w, Cnf(a), Cnf(b))


# ------------------------------------------------------------- commands


def _oracle_hook(ts, out):
    from .qe_oracle import verify_boundary, OracleBudgetError

    def hook(chain):
        rep = check_co(chain)
        if not rep.ok:
            raise CheckerError("oracle check: CO conditions failed: %s"
                               % rep.failures(), chain)
        for k in range(1, chain.j + 1):
            try:
                ok = verify_boundary(chain.h_cnf(k), ts,
                                     chain.trlx_cnf(k - 1), k)
            except OracleBudgetError:
                out.write("oracle check: H_%d too large to enumerate\n" % k)
                continue
            if not ok:
                raise CheckerError("oracle check: H_%d is not a boundary "
                                   "formula" % k, chain)
    return hook


def _run_engine(ts, args, err):
    guess = _parse_guess(args.guess) if args.guess else None
    opts = Options(max_frames=args.max_frames, pqe_budget=args.pqe_budget,
                   guess=guess, seed=args.seed)
    frames = [0]
    hooks = []
    if args.oracle_check:
        hooks.append(_oracle_hook(ts, err))

    def hook(chain):
        frames[0] = chain.j
        for h in hooks:
            h(chain)
    opts.iter_hook = hook
    engine = pc_lor_ic if args.engine == "lor-ic" else pc_lor
    witness = engine(ts, opts)
    return witness, frames[0]


def _finish(ts, witness, frames, path, t0, out):
    write_witness(path, ts, witness)
    verdict = "holds" if witness.kind == "invariant" else "fails"
    report = RunReport(verdict, frames, path, (), time.time() - t0)
    report.dump(out)
    return (0 if verdict == "holds" else 1), report


def cmd_check(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    t0 = time.time()
    try:
        with open(args.file) as f:
            circ = parse_circuit(f.read())
        ts = encode(circ)
    except (OSError, CircuitError) as e:
        err.write("error: %s\n" % e)
        return 3
    if not ts.is_stuttered:
        ts = add_stuttering(ts)
    try:
        witness, frames = _run_engine(ts, args, err)
    except CheckerError as e:
        err.write("no verdict: %s\n" % e)
        RunReport("unknown", 0, None, (), time.time() - t0).dump(out)
        return 2
    path = args.witness or (args.file + ".witness")
    code, _ = _finish(ts, witness, frames, path, t0, out)
    return code


def cmd_sec(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    t0 = time.time()
    try:
        with open(args.file_n) as f:
            n = parse_circuit(f.read())
        with open(args.file_k) as f:
            k = parse_circuit(f.read())
        miter = build_miter(n, k)
        ts = encode(miter)
    except (OSError, CircuitError) as e:
        err.write("error: %s\n" % e)
        return 3
    if not ts.is_stuttered:
        ts = add_stuttering(ts)
    try:
        witness, frames = _run_engine(ts, args, err)
    except CheckerError as e:
        err.write("no verdict: %s\n" % e)
        RunReport("unknown", 0, None, (), time.time() - t0).dump(out)
        return 2
    path = args.witness or (args.file_n + ".sec.witness")
    out.write("equivalent\n" if witness.kind == "invariant"
              else "inequivalent\n")
    code, _ = _finish(ts, witness, frames, path, t0, out)
    return code


def cmd_pqe(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        with open(args.file) as f:
            task = parse_pqe_dimacs(f.read())
    except (OSError, ValueError) as e:
        err.write("error: %s\n" % e)
        return 3
    try:
        a_star = take_out(task, budget=args.pqe_budget)
    except PqeBudgetError:
        err.write("no answer within budget\n")
        return 2
    for c in a_star:
        out.write(" ".join(str(l) for l in c) + " 0\n")
    if args.verify:
        from .qe_oracle import check_pqe, OracleBudgetError
        try:
            ok = check_pqe(task.w, task.a, task.b, a_star)
        except OracleBudgetError:
            err.write("task too large for the verification oracle\n")
            return 0
        if not ok:
            err.write("verification FAILED\n")
            return 1
        err.write("verified\n")
    return 0


def cmd_verify_witness(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        with open(args.circuit) as f:
            circ = parse_circuit(f.read())
        if args.miter_with:
            with open(args.miter_with) as f:
                circ = build_miter(circ, parse_circuit(f.read()))
        ts = encode(circ)
        lines = _read_witness(args.witness_file)
    except (OSError, CircuitError, ValueError) as e:
        err.write("error: %s\n" % e)
        return 3
    kind = lines[0].strip()
    try:
        if kind == "counterexample":
            # the emitting run may have added a stuttering input
            for l in lines:
                if l.startswith("# inputs:"):
                    wanted = set(l.split(":", 1)[1].split())
                    have = set(v.name for v in ts.input_vars)
                    if wanted - have and not ts.is_stuttered:
                        ts = add_stuttering(ts)
            ok = verify_trace(ts, lines, lambda m: err.write(m + "\n"))
        elif kind == "invariant":
            ok = verify_invariant(ts, lines, lambda m: err.write(m + "\n"))
        else:
            err.write("error: unknown witness kind %r\n" % kind)
            return 3
    except (ValueError, KeyError) as e:
        err.write("error: malformed witness: %s\n" % e)
        return 3
    out.write("witness %s\n" % ("accepted" if ok else "rejected"))
    return 0 if ok else 1


# ------------------------------------------------------------------ main


def _add_engine_flags(p):
    p.add_argument("--engine", choices=["lor", "lor-ic"], default=None)
    p.add_argument("--guess", default=None,
                   help="initial relaxation, e.g. drop:interface")
    p.add_argument("--max-frames", type=int, default=None)
    p.add_argument("--pqe-budget", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--witness", default=None, help="witness output path")
    p.add_argument("--oracle-check", action="store_true",
                   help="double-check every frame against enumeration oracles")


def build_parser():
    ap = argparse.ArgumentParser(prog="lorcheck",
                                 description="Safety-property model checker "
                                 "based on logic relaxation")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", help="check a circuit's safety property")
    p.add_argument("file")
    _add_engine_flags(p)
    p.set_defaults(fn=cmd_check, default_engine="lor")

    p = sub.add_parser("sec", help="sequential equivalence check")
    p.add_argument("file_n")
    p.add_argument("file_k")
    _add_engine_flags(p)
    p.set_defaults(fn=cmd_sec, default_engine="lor-ic",
                   default_guess="drop:interface")

    p = sub.add_parser("pqe", help="solve a partial-quantifier-elimination task")
    p.add_argument("file")
    p.add_argument("--pqe-budget", type=int, default=10 ** 6)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(fn=cmd_pqe)

    p = sub.add_parser("verify-witness", help="independently check a witness")
    p.add_argument("circuit")
    p.add_argument("witness_file")
    p.add_argument("--miter-with", default=None,
                   help="second circuit when the witness is for a miter")
    p.set_defaults(fn=cmd_verify_witness)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if hasattr(args, "engine") and args.engine is None:
        args.engine = args.default_engine
    if hasattr(args, "guess") and args.guess is None:
        args.guess = getattr(args, "default_guess", None)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
