"""Command-line experiment runner: ``qsampling <group> <command> ...``.

Every artifact carries the tool version, the master seed and SHA-256
digests of its input files, and nothing time-dependent, so identical
invocations produce byte-identical output.  Files given with ``--out`` are
written atomically.  Domain errors exit with status 1 and a JSON error
record on stderr; usage errors exit with status 2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import boson as bs
from . import iqp
from . import stats
from ._random import STREAM_TRIALS, make_rng
from .distribution import SampleSet
from .errors import DataError, ParameterError, QSamplingError
from .matrices import matrix_from_dict, perturb_unitary
from .permanent import THREADS_ENV, permanent_fast

TOOL = f"qsampling {__version__}"


class _Run:
    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}

    # -- inputs -------------------------------------------------------------
    def read(self, label: str, path: str) -> bytes:
        data = Path(path).read_bytes()
        self.inputs[label] = "sha256:" + hashlib.sha256(data).hexdigest()
        return data

    def read_json(self, label: str, path: str) -> dict:
        try:
            return json.loads(self.read(label, path))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc

    def instance(self) -> bs.BosonInstance:
        return bs.BosonInstance.from_dict(self.read_json("instance", self.args.instance))

    def circuit(self) -> iqp.IQPCircuit:
        return iqp.IQPCircuit.from_dict(self.read_json("circuit", self.args.circuit))

    # -- outputs ------------------------------------------------------------
    def meta(self, seed=None) -> dict:
        return {"tool": TOOL, "seed": seed, "inputs": dict(sorted(self.inputs.items()))}

    def header_lines(self, seed=None) -> list[str]:
        lines = [f"tool={TOOL}", f"seed={seed if seed is not None else 'none'}"]
        lines += [f"input.{k}={v}" for k, v in sorted(self.inputs.items())]
        return lines

    def emit(self, text: str) -> None:
        out = getattr(self.args, "out", None)
        if not out:
            sys.stdout.write(text)
            return
        target = Path(out)
        fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def emit_json(self, doc: dict, seed=None) -> None:
        doc = dict(doc)
        doc["meta"] = self.meta(seed)
        self.emit(json.dumps(doc, sort_keys=True, indent=2) + "\n")

    def emit_csv(self, header: list[str], rows: list[list], seed=None) -> None:
        lines = [f"# {h}" for h in self.header_lines(seed)]
        lines.append(",".join(header))
        lines += [",".join(_cell(v) for v in row) for row in rows]
        self.emit("\n".join(lines) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _derived_seed(seed: int, *key: int) -> int:
    return int(make_rng(seed, STREAM_TRIALS, *key).integers(0, 2**63 - 1))


def read_samples(path: str, space) -> tuple[SampleSet, dict]:
    """Load a JSON-lines sample file (optional header record first)."""
    header: dict = {}
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON ({exc})") from exc
            if isinstance(rec, dict):
                if lineno == 1:
                    header = rec
                    continue
                raise DataError(f"{path}:{lineno}: unexpected object record")
            events.append(rec)
    samples = SampleSet.from_events(space, events, header.get("seed"))
    return samples, header


# -- perm -------------------------------------------------------------------

def cmd_perm_compute(run: _Run) -> None:
    a = matrix_from_dict(run.read_json("matrix", run.args.matrix))
    p = permanent_fast(a)
    run.emit_json({"re": p.real, "im": p.imag})


# -- boson ------------------------------------------------------------------

def cmd_boson_instance(run: _Run) -> None:
    a = run.args
    if a.scattershot:
        if a.haar_seed is None:
            raise ParameterError("--scattershot needs --haar-seed")
        inst = bs.scattershot_instance(a.m, a.n, a.haar_seed)
    elif a.network:
        inst = bs.make_instance(matrix_from_dict(run.read_json("network", a.network)), a.n)
        if inst.m != a.m:
            raise ParameterError(f"network has {inst.m} modes but --m is {a.m}")
    elif a.haar_seed is not None:
        inst = bs.haar_instance(a.m, a.n, a.haar_seed)
    else:
        raise ParameterError("give --haar-seed or --network")
    run.emit_json(inst.to_dict(), a.haar_seed)


def cmd_boson_dist(run: _Run) -> None:
    inst = run.instance()
    dist = bs.distinguishable_distribution(inst) if run.args.distinguishable else bs.exact_distribution(inst)
    model = "distinguishable" if run.args.distinguishable else "indistinguishable"
    run.emit(dist.to_csv(run.header_lines() + [f"model={model}", f"instance={inst.digest()}"]))


def cmd_boson_sample(run: _Run) -> None:
    a = run.args
    inst = run.instance()
    eta = 1.0 if a.loss is None else a.loss
    samples, rate = bs.lossy_sample(inst, eta, a.count, a.seed)
    header = {
        "header": True,
        "tool": TOOL,
        "seed": a.seed,
        "instance": inst.digest(),
        "inputs": run.inputs,
        "trials": a.count,
        "eta": eta,
        "acceptance_rate": rate,
        "accepted": len(samples),
    }
    run.emit(samples.to_jsonl(header))
    sys.stderr.write(json.dumps({"acceptance_rate": rate, "accepted": len(samples)}) + "\n")


def cmd_boson_validate(run: _Run) -> None:
    inst = run.instance()
    run.read("samples", run.args.samples)
    samples, header = read_samples(run.args.samples, inst.space)
    seed = header.get("seed")
    if run.args.test == "uniform":
        verdict = stats.uniform_discriminator(samples, inst, seed=seed)
    else:
        verdict = stats.distinguishable_discriminator(samples, inst, seed=seed)
    run.emit_json(verdict.to_dict(), seed)


def cmd_boson_birthday(run: _Run) -> None:
    a = run.args
    rows = []
    for k, m in enumerate(a.modes):
        inst = bs.haar_instance(m, a.n, _derived_seed(a.seed, 0, k))
        dist = bs.exact_distribution(inst)
        samples = bs.sample(inst, a.count, _derived_seed(a.seed, 1, k), dist)
        rows.append([m, bs.collision_statistics(samples), bs.collision_probability(dist)])
    run.emit_csv(["m", "collision_fraction", "exact_collision_probability"], rows, a.seed)


def cmd_boson_perturb_sweep(run: _Run) -> None:
    a = run.args
    inst = run.instance()
    ideal = bs.exact_distribution(inst)
    rows = []
    for sigma in a.sigmas:
        noisy = bs.exact_distribution(inst.with_network(perturb_unitary(inst.network, sigma, a.seed)))
        half, full = stats.tv_distance(ideal, noisy)
        rows.append([sigma, half, full])
    run.emit_csv(["sigma", "tvd", "tvd_sum"], rows, a.seed)


# -- iqp --------------------------------------------------------------------

def cmd_iqp_random(run: _Run) -> None:
    a = run.args
    c = iqp.random_circuit(a.family, a.n, a.seed, a.budget)
    run.emit_json(c.to_dict(), a.seed)


def cmd_iqp_dist(run: _Run) -> None:
    c = run.circuit()
    run.emit(iqp.full_distribution(c).to_csv(run.header_lines() + [f"circuit={c.digest()}"]))


def cmd_iqp_prob(run: _Run) -> None:
    c = run.circuit()
    run.emit_json({"x": run.args.x, "probability": iqp.output_probability(c, run.args.x)})


def cmd_iqp_sample(run: _Run) -> None:
    a = run.args
    c = run.circuit()
    rate = a.depolarize or 0.0
    samples = iqp.depolarize_samples(c, rate, a.count, a.seed)
    header = {"header": True, "tool": TOOL, "seed": a.seed, "circuit": c.digest(), "inputs": run.inputs,
              "depolarize": rate, "count": a.count}
    run.emit(samples.to_jsonl(header, as_string=True))


def cmd_iqp_anticonc(run: _Run) -> None:
    a = run.args
    if a.trials < 1:
        raise ParameterError("need at least one circuit trial")
    circuits = iqp.ensemble(a.family if a.family not in ("1", "2") else f"family{a.family}",
                            a.n, a.trials, a.seed, a.budget)
    values = iqp.rescaled_probabilities(circuits)
    run.emit_json(
        {
            "family": circuits[0].family,
            "n": a.n,
            "trials": a.trials,
            "alpha": a.alpha,
            "fraction": float(np.mean(values > a.alpha)),
            "porter_thomas_prediction": math.exp(-a.alpha),
            "ks": stats.porter_thomas_fit(values),
        },
        a.seed,
    )


def cmd_iqp_gadget_check(run: _Run) -> None:
    a = run.args
    res = iqp.verify_hadamard_gadget(a.n, a.seed, a.gadgets)
    run.emit_json(
        {"n": res.n, "gadgets": res.gadgets, "fidelity": res.fidelity,
         "postselection_probability": res.postselection_probability},
        a.seed,
    )


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsampling", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=TOOL)
    p.add_argument("--threads", type=int, help=f"worker threads (overrides ${THREADS_ENV})")
    groups = p.add_subparsers(dest="group", required=True)

    def command(sub, name, func, help_):
        c = sub.add_parser(name, help=help_)
        c.set_defaults(func=func)
        c.add_argument("--out", help="write here (atomically) instead of stdout")
        return c

    perm = groups.add_parser("perm", help="matrix permanents").add_subparsers(dest="command", required=True)
    c = command(perm, "compute", cmd_perm_compute, "permanent of a matrix JSON file")
    c.add_argument("--matrix", required=True)

    boson = groups.add_parser("boson", help="BosonSampling").add_subparsers(dest="command", required=True)
    c = command(boson, "instance", cmd_boson_instance, "build an instance JSON")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--n", type=int, required=True)
    src = c.add_mutually_exclusive_group()
    src.add_argument("--haar-seed", type=int)
    src.add_argument("--network")
    c.add_argument("--scattershot", action="store_true")

    c = command(boson, "dist", cmd_boson_dist, "exact output distribution as CSV")
    c.add_argument("--instance", required=True)
    c.add_argument("--distinguishable", action="store_true")

    c = command(boson, "sample", cmd_boson_sample, "draw samples (JSON lines)")
    c.add_argument("--instance", required=True)
    c.add_argument("--count", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--loss", type=float, metavar="ETA", help="per-photon transmission; post-select on no loss")

    c = command(boson, "validate", cmd_boson_validate, "likelihood-ratio validation verdict")
    c.add_argument("--instance", required=True)
    c.add_argument("--samples", required=True)
    c.add_argument("--test", choices=("uniform", "distinguishable"), required=True)

    c = command(boson, "birthday", cmd_boson_birthday, "collision fraction against mode count")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--modes", type=_int_list, required=True)
    c.add_argument("--count", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)

    c = command(boson, "perturb-sweep", cmd_boson_perturb_sweep, "TVD against network element error")
    c.add_argument("--instance", required=True)
    c.add_argument("--sigmas", type=_float_list, required=True)
    c.add_argument("--seed", type=int, required=True)

    iq = groups.add_parser("iqp", help="IQP circuits").add_subparsers(dest="command", required=True)
    c = command(iq, "random", cmd_iqp_random, "random circuit JSON")
    c.add_argument("--family", choices=("1", "2", "sparse"), required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--budget", type=int)

    c = command(iq, "dist", cmd_iqp_dist, "full output distribution as CSV")
    c.add_argument("--circuit", required=True)

    c = command(iq, "prob", cmd_iqp_prob, "one output probability")
    c.add_argument("--circuit", required=True)
    c.add_argument("--x", required=True)

    c = command(iq, "sample", cmd_iqp_sample, "draw bit strings (JSON lines)")
    c.add_argument("--circuit", required=True)
    c.add_argument("--count", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--depolarize", type=float, metavar="RATE")

    c = command(iq, "anticonc", cmd_iqp_anticonc, "anti-concentration and Porter-Thomas fit")
    c.add_argument("--family", choices=("1", "2", "sparse"), required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--trials", type=int, required=True)
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--budget", type=int)

    c = command(iq, "gadget-check", cmd_iqp_gadget_check, "hadamard-gadget fidelity")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--gadgets", type=int, default=3)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ[THREADS_ENV] = str(max(1, args.threads))
    try:
        args.func(_Run(args))
    except (QSamplingError, OSError) as exc:
        kind = getattr(exc, "kind", "io")
        sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
