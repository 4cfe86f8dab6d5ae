"""Acceptance suite. Each test prints one PASS/FAIL line, then asserts.

Run alone with ``python3 -m pytest tests/test_acceptance.py -s`` to see the
summary lines (they are also shown without ``-s``).
"""

import json
import sys
import time

import numpy as np
import pytest

from conftest import kernel_pair, random_hermitian, random_traceless
from nmdistill.channels import (
    PauliChannel,
    Regime,
    apply_channel,
    classify_regime,
    computational_pair,
    model_channels,
)
from nmdistill.cli import main as cli_main
from nmdistill.distillation import (
    CoarseGrainer,
    DistillationInstance,
    coarse_grain,
    distilled_from_operators,
    evolved_differences,
    general_bound,
    undistilled_delta_d,
)
from nmdistill.ensembles import haar_unitary
from nmdistill.linalg import trace_norm
from nmdistill.optimizer import OptimizerConfig, optimize
from nmdistill.saturation import construct_saturating_map, saturation_feasible, saturation_gaps


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail, elapsed):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail} [{elapsed:.1f} s]"
        with capsys.disabled():
            sys.stdout.write("\n" + line + "\n")
        return ok

    return emit


def grid40():
    # 40 interior points of (0, 0.5), none on 0.25
    return (np.arange(40) + 0.5) / 80


def closed_form_delta_d(eps):
    return abs(1 - 4 * eps + 8 * eps**2) - abs(1 - 2 * eps)


def test_criterion_1_regime_classification(report):
    t0 = time.perf_counter()
    grid = grid40()
    wrong = [e for e in grid if classify_regime(e) is not (Regime.WEAK if e < 0.25 else Regime.ESSENTIAL)]
    elapsed = time.perf_counter() - t0
    ok = not wrong and elapsed < 1.0
    report(1, ok, f"{len(grid) - len(wrong)}/40 grid points classified correctly", elapsed)
    assert not wrong and elapsed < 1.0


def test_criterion_2_closed_form_delta_d(report):
    t0 = time.perf_counter()
    rho1, rho2 = computational_pair()
    err = max(abs(undistilled_delta_d(*model_channels(e), rho1, rho2) - closed_form_delta_d(e)) for e in grid40())
    spot = [undistilled_delta_d(*model_channels(e), rho1, rho2) for e in (0.1, 0.3)]
    elapsed = time.perf_counter() - t0
    spot_ok = abs(spot[0] + 0.12) <= 1e-10 and abs(spot[1] - 0.12) <= 1e-10
    ok = err <= 1e-10 and spot_ok and elapsed < 1.0
    report(2, ok, f"max error {err:.2e}, values at 0.1/0.3 = {spot[0]:.12f}/{spot[1]:.12f}", elapsed)
    assert ok


def test_criterion_3_strong_regime_two_copies(report):
    t0 = time.perf_counter()
    rho1, rho2 = computational_pair()
    rows = []
    for eps in (0.3, 0.35, 0.4, 0.45):
        inst = DistillationInstance.for_model(eps, rho1, rho2, 2)
        value = optimize(inst, OptimizerConfig()).best_value
        rows.append((eps, value, inst.undistilled(), inst.bounds.beta_sharp))
    elapsed = time.perf_counter() - t0
    worst = max(max(abs(v - d), abs(v - b)) for _, v, d, b in rows)
    ok = worst <= 1e-3 and elapsed < 120
    report(3, ok, "optimized vs (delta_d, beta_sharp) worst gap "
           f"{worst:.2e}; values " + ", ".join(f"{e}:{v:.6f}" for e, v, _, _ in rows), elapsed)
    assert ok


def _weak_regime(epsilons, config):
    rho1, rho2 = computational_pair()
    out = []
    for eps in epsilons:
        v2 = optimize(DistillationInstance.for_model(eps, rho1, rho2, 2), config).best_value
        v3 = optimize(DistillationInstance.for_model(eps, rho1, rho2, 3), config).best_value
        out.append((eps, v2, v3))
    return out


def test_criterion_4_weak_regime_activation(report):
    t0 = time.perf_counter()
    rows = _weak_regime((0.05, 0.1, 0.15, 0.2), OptimizerConfig())
    elapsed = time.perf_counter() - t0
    two_ok = all(v2 <= 1e-4 for _, v2, _ in rows)
    activated = sum(v3 >= 1e-4 for _, _, v3 in rows)
    ok = two_ok and activated > len(rows) / 2 and elapsed < 30 * 60
    report(4, ok, f"n=2 max {max(v2 for _, v2, _ in rows):.2e}; n=3 activated at {activated}/4 ("
           + ", ".join(f"{e}:{v3:.6f}" for e, _, v3 in rows) + ")", elapsed)
    assert ok


def test_criterion_4_smoke_variant(report):
    t0 = time.perf_counter()
    ((_, v2, v3),) = _weak_regime((0.1,), OptimizerConfig(n_restarts=4))
    elapsed = time.perf_counter() - t0
    ok = v2 <= 1e-4 and v3 >= 1e-4 and elapsed < 5 * 60
    report("4 (smoke)", ok, f"eps=0.1, 4 restarts: n=2 {v2:.2e}, n=3 {v3:.6f}", elapsed)
    assert ok


def _random_cptp_batch(rng, dim_in, count, dim_out=2):
    """Stacked Kraus isometries ``V: C^dim_in -> C^dim_out ⊗ C^env`` from Haar unitaries."""
    env = dim_in * dim_out
    return np.stack([haar_unitary(dim_out * env, rng)[:, :dim_in] for _ in range(count)])


def _batched_norms(V, M, dim_out=2):
    env = V.shape[1] // dim_out
    Y = V @ M @ V.conj().transpose(0, 2, 1)
    Y = Y.reshape(-1, dim_out, env, dim_out, env)
    out = np.einsum("kaebe->kab", Y)
    return np.abs(np.linalg.eigvalsh(0.5 * (out + out.conj().transpose(0, 2, 1)))).sum(axis=1)


def test_criterion_5_saturation_round_trip(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    feasible = infeasible = 0
    worst_gap = 0.0
    worst_attempt = -np.inf
    for k in range(200):
        dim = 2 + k % 3
        if k % 2:
            # difference with a kernel, so E₀ has room and feasible verdicts are common
            A, B = kernel_pair(rng, dim, int(rng.integers(1, dim)))
        else:
            A, B = random_traceless(rng, dim), random_traceless(rng, dim)
        rep = saturation_feasible(A, B)
        if rep.feasible:
            feasible += 1
            lam = construct_saturating_map(A, B, rep)
            worst_gap = max(worst_gap, *map(abs, saturation_gaps(lam, A, B)))
        else:
            infeasible += 1
            V = _random_cptp_batch(rng, dim, 500)
            gain = _batched_norms(V, A) - _batched_norms(V, B)
            worst_attempt = max(worst_attempt, float(np.max(gain - trace_norm(A - B))))
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-9 and worst_attempt < -1e-6 and elapsed < 120
    report(5, ok, f"{feasible} feasible (worst equality gap {worst_gap:.1e}), {infeasible} infeasible "
           f"(closest falsification attempt {worst_attempt:.3e} from saturation)", elapsed)
    assert ok


def test_criterion_6_feasibility_flip(report):
    t0 = time.perf_counter()
    rho1, rho2 = computational_pair()
    verdicts = {e: saturation_feasible(*evolved_differences(*model_channels(e), rho1, rho2, 2)).feasible
                for e in (0.1, 0.2, 0.3, 0.4)}
    elapsed = time.perf_counter() - t0
    ok = verdicts == {0.1: False, 0.2: False, 0.3: True, 0.4: True} and elapsed < 1.0
    report(6, ok, f"feasible verdicts {verdicts}", elapsed)
    assert ok


def test_criterion_7_contractivity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = -np.inf
    for k in range(1000):
        if k % 2 == 0:
            ch = PauliChannel(*rng.dirichlet(np.ones(4)))
            M = random_hermitian(rng, 2)
            out = apply_channel(ch, M)
        else:
            n = 1 + (k // 2) % 2
            cg = CoarseGrainer(n, rng.standard_normal((2**n * 4) ** 2) * rng.uniform(0.1, 3), verify=False)
            M = random_hermitian(rng, 2**n)
            out = coarse_grain(cg, M)
        worst = max(worst, trace_norm(0.5 * (out + out.conj().T)) - trace_norm(M))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 10
    report(7, ok, f"1000 trials, largest norm increase {worst:.2e}", elapsed)
    assert ok


def test_criterion_8_bound_dominance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    rho1, rho2 = computational_pair()
    cells = [(e, n) for e in (0.1, 0.3) for n in (1, 2)]
    worst = -np.inf
    for k in range(1000):
        eps, n = cells[k % 4]
        lam1, lam2 = model_channels(eps)
        A, B = evolved_differences(lam1, lam2, rho1, rho2, n)
        sharp = general_bound(lam1, lam2, rho1, rho2, n).beta_sharp
        cg = CoarseGrainer(n, rng.standard_normal((2**n * 4) ** 2) * rng.uniform(0.1, 3))
        worst = max(worst, distilled_from_operators(cg, A, B) - sharp)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 60
    report(8, ok, f"1000 maps, largest excess over beta_sharp {worst:.2e}", elapsed)
    assert ok


def test_criterion_9_pipeline_determinism(report, tmp_path, capsys):
    t0 = time.perf_counter()
    cfg = {
        "epsilon_grid": [0.1, 0.2, 0.3, 0.35, 0.4],
        "copy_numbers": [2],
        "ensemble": {"kind": "ortho", "n_pairs": 5, "seed": 0},
        "optimizer": {"n_restarts": 4},
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    runs = []
    for name in ("run_a", "run_b"):
        assert cli_main(["sweep", "--config", str(path), "--out", str(tmp_path / name)]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted((tmp_path / name).iterdir())})
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    differing = sorted(k for k in runs[0] if runs[0][k] != runs[1].get(k))
    ok = runs[0].keys() == runs[1].keys() and not differing and elapsed < 600
    report(9, ok, f"{len(runs[0])} files compared, differing: {differing or 'none'}", elapsed)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
