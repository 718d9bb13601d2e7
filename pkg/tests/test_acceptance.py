"""Acceptance suite.

One test per acceptance criterion, each printing a pass/fail line with
its runtime.  Tolerances are pinned here and nowhere else:

  1  first-argument identity      rel residual <= 1e-9, 500 instances
  2  second-argument identity     rel residual <= 1e-9, 500 instances
  3  two-term identity            rel residual <= 1e-9, 500 instances
  4  weighted-route agreement     rel difference <= 1e-11, 200 instances
  5  Schatten norm properties     1e-10, 1000 randomized checks each
  6  dyadic-norm analytic values  interval containment + dilation law
  7  ratio experiment             finite, per-dim max spread < 3
  8  p = 2 control vs p = inf     control stable, trend emitted
  9  CLI determinism              byte-identical reports
"""

import json
import math
import os
import time

import numpy as np

from opint import (
    EnsembleSpec,
    ExperimentConfig,
    besov_norm,
    difference_first_identity_check,
    difference_second_identity_check,
    dilate,
    f_of_pair,
    f_of_pair_sharp,
    full_difference_identity_check,
    lipschitz_experiment,
    p_above_2_scan,
    plane_wave,
    random_hermitian,
    schatten_norm,
    separated_pair,
    standard_test_function,
    trig_poly,
)
from opint.cli import main as cli_main

DIMS = [4, 8, 16, 32, 64]
SIGMAS = [1.0, 2.0, 4.0, 8.0]
FUNCTIONS = {s: standard_test_function(s, seed=int(s)) for s in SIGMAS}


def _announce(number, label, started, failed=0, total=0, extra=""):
    status = "PASS" if failed == 0 else f"FAIL ({failed}/{total})"
    wall = time.monotonic() - started
    print(f"[criterion {number}] {label}: {status} ({wall:.1f}s){extra}")
    assert failed == 0


def _identity_instance(i, target=0.2):
    rng = np.random.default_rng([77, i])
    ens = EnsembleSpec("gue")
    dim = DIMS[i % len(DIMS)]
    sigma = SIGMAS[(i // len(DIMS)) % len(SIGMAS)]
    A1, A2 = separated_pair(dim, ens, rng, target)
    B1, B2 = separated_pair(dim, ens, rng, target)
    return FUNCTIONS[sigma], A1, A2, B1, B2


class TestIdentities:
    def test_criterion_1_first_argument_identity(self):
        started = time.monotonic()
        failed = 0
        worst = 0.0
        for i in range(500):
            f, A1, A2, B1, _ = _identity_instance(i)
            rep = difference_first_identity_check(f, A1, A2, B1, seed=i)
            worst = max(worst, rep.relative_residual)
            failed += rep.relative_residual > 1e-9
        _announce(1, "first-argument identity", started, failed, 500,
                  extra=f" worst={worst:.2e}")

    def test_criterion_2_second_argument_identity(self):
        started = time.monotonic()
        failed = 0
        worst = 0.0
        for i in range(500):
            f, A1, _, B1, B2 = _identity_instance(i)
            rep = difference_second_identity_check(f, A1, B1, B2, seed=i)
            worst = max(worst, rep.relative_residual)
            failed += rep.relative_residual > 1e-9
        _announce(2, "second-argument identity", started, failed, 500,
                  extra=f" worst={worst:.2e}")

    def test_criterion_3_two_term_identity(self):
        started = time.monotonic()
        failed = 0
        worst = 0.0
        for i in range(500):
            f, A1, A2, B1, B2 = _identity_instance(i)
            rep = full_difference_identity_check(f, A1, A2, B1, B2, seed=i)
            worst = max(worst, rep.relative_residual)
            failed += rep.relative_residual > 1e-9
        # degenerate sub-cases collapse onto criteria 1 and 2
        for i in range(10):
            f, A1, A2, B1, B2 = _identity_instance(i)
            fixed_b = full_difference_identity_check(f, A1, A2, B1, B1, seed=i)
            first = difference_first_identity_check(f, A1, A2, B1, seed=i)
            failed += abs(fixed_b.lhs_norm - first.lhs_norm) > 1e-12 * max(first.lhs_norm, 1)
            failed += fixed_b.relative_residual > 1e-9
            fixed_a = full_difference_identity_check(f, A1, A1, B1, B2, seed=i)
            second = difference_second_identity_check(f, A1, B1, B2, seed=i)
            failed += abs(fixed_a.lhs_norm - second.lhs_norm) > 1e-12 * max(second.lhs_norm, 1)
            failed += fixed_a.relative_residual > 1e-9
        _announce(3, "two-term identity", started, failed, 540,
                  extra=f" worst={worst:.2e}")


class TestWeightedRoute:
    def test_criterion_4_weighted_route_agreement(self):
        started = time.monotonic()
        failed = 0
        worst = 0.0
        cases = []
        for i in range(100):  # moderate spectra
            cases.append(("gue", None, [4, 8, 16, 32][i % 4], i))
        for i in range(100):  # wide spectra up to radius 1e6
            radius = [10.0, 1e3, 1e6][i % 3]
            cases.append(("spread-spectrum", radius, [8, 16, 32][i % 3], 100 + i))
        for kind, radius, dim, seed in cases:
            A = random_hermitian(dim, kind, radius=radius, seed=[3, seed])
            B = random_hermitian(dim, kind, radius=radius, seed=[4, seed])
            f = FUNCTIONS[SIGMAS[seed % 4]]
            direct = f_of_pair(f, A, B)
            sharp = f_of_pair_sharp(f, A, B)
            rel = np.linalg.norm(sharp - direct) / np.linalg.norm(direct)
            worst = max(worst, rel)
            failed += rel > 1e-11
        _announce(4, "weighted-route agreement", started, failed, len(cases),
                  extra=f" worst={worst:.2e}")


class TestSchattenSuite:
    def test_criterion_5_schatten_properties(self):
        started = time.monotonic()
        rng = np.random.default_rng(4242)
        failed = 0

        def random_matrix(n):
            return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

        def random_unitary(n):
            Q, R = np.linalg.qr(random_matrix(n))
            return Q * (np.diagonal(R) / np.abs(np.diagonal(R)))

        ps = [1, 1.5, 2, 3, np.inf]
        for i in range(1000):
            n = int(rng.integers(2, 9))
            M = random_matrix(n)
            p = ps[i % len(ps)]
            # unitary invariance
            U, V = random_unitary(n), random_unitary(n)
            base = schatten_norm(M, p)
            failed += abs(schatten_norm(U @ M @ V, p) - base) > 1e-10 * max(base, 1.0)
            # monotonicity in p
            q = ps[(i + 1) % len(ps)]
            lo_p, hi_p = min(p, q), max(p, q)
            failed += schatten_norm(M, lo_p) < schatten_norm(M, hi_p) - 1e-10
            # triangle inequality
            N = random_matrix(n)
            failed += schatten_norm(M + N, p) > schatten_norm(M, p) + schatten_norm(N, p) + 1e-10
            # Hoelder with p = q = 2 -> r = 1
            failed += schatten_norm(M @ N, 1) > schatten_norm(M, 2) * schatten_norm(N, 2) + 1e-10
        _announce(5, "Schatten norm suite (4000 checks)", started, failed, 4000)


class TestBesovAnalytic:
    def test_criterion_6_analytic_values_and_dilation(self):
        started = time.monotonic()
        failed = 0
        for xi, expected in [(1, 1.0), (1.5, 1.5), (2, 2.0), (3, 3.0), (4, 4.0)]:
            iv = besov_norm(plane_wave(xi, 0))
            failed += not iv.contains(expected, slack=1e-12)
        f = trig_poly([(1.5, 0.0, 1.0), (0.0, 0.7, 0.5j)])
        base = besov_norm(f, "homogeneous")
        for lam in (2.0, 4.0):
            scaled = base.scale(lam)
            dilated = besov_norm(dilate(f, lam), "homogeneous")
            failed += not dilated.overlaps(scaled)
        _announce(6, "dyadic-norm analytic cases", started, failed, 7)


class TestRatioExperiment:
    def test_criterion_7_ratio_stability(self):
        started = time.monotonic()
        cfg = ExperimentConfig.from_doc(
            {
                "p": [1, 1.5, 2],
                "dims": DIMS,
                "trials": 200,
                "seed": 2024,
                # dimension-independent spectra isolate the dimension
                # dependence of the ratio itself
                "ensemble": {"kind": "spread-spectrum", "radius": 2.0},
                "functions": ["trig_poly:2,0,0.45,0;0,1.3,0,0.3;0.9,-0.7,0.25,0"],
                "mode": "lipschitz",
                "pert_target": 0.1,
            }
        )
        report = lipschitz_experiment(cfg)
        failed = 0
        failed += not np.isfinite(report.empirical_constant)
        spreads = []
        for p in (1.0, 1.5, 2.0):
            maxima = []
            for dim in DIMS:
                group = [
                    t.ratio / t.normalizer
                    for t in report.trials
                    if t.p == p and t.dim == dim
                ]
                failed += len(group) != 200
                maxima.append(max(group))
            spread = max(maxima) / min(maxima)
            spreads.append(spread)
            failed += not spread < 3.0
        _announce(
            7,
            "ratio experiment stability",
            started,
            failed,
            3,
            extra=f" const={report.empirical_constant:.3f} spreads="
            + ",".join(f"{s:.2f}" for s in spreads),
        )


class TestControlScan:
    def test_criterion_8_control_scan(self):
        started = time.monotonic()
        cfg = ExperimentConfig.from_doc(
            {
                "p": [2, math.inf],
                "dims": DIMS,
                "trials": 100,
                "seed": 31337,
                "ensemble": {"kind": "spread-spectrum", "radius": 2.0},
                "functions": ["trig_poly:2,0,0.45,0;0,1.3,0,0.3;0.9,-0.7,0.25,0"],
                "mode": "scan",
                "pert_target": 0.1,
            }
        )
        report = p_above_2_scan(cfg)
        failed = 0
        control = [mx for p, _, mx in report.trend if p == 2.0]
        failed += len(control) != len(DIMS)
        spread = max(control) / min(control)
        failed += not spread < 3.0
        # the operator-norm trend is emitted for inspection, not judged
        emitted = [mx for p, _, mx in report.trend if math.isinf(p)]
        failed += len(emitted) != len(DIMS)
        failed += not all(np.isfinite(v) for v in emitted)
        flags = dict(report.growth_flags)
        _announce(
            8,
            "p = 2 control vs p = inf scan",
            started,
            failed,
            4,
            extra=f" control_spread={spread:.2f} inf_growing={flags[math.inf]}",
        )


class TestDeterminism:
    def test_criterion_9_byte_identical_reports(self, tmp_path):
        started = time.monotonic()
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "p": [1, 2],
                    "dims": [4, 8],
                    "trials": 5,
                    "seed": 99,
                    "functions": ["trig_poly:1,0,0.5,0;0,2,0.25,0.25"],
                    "mode": "lipschitz",
                }
            )
        )
        id_path = tmp_path / "id.json"
        id_path.write_text(
            json.dumps(
                {
                    "dims": [4, 6],
                    "trials": 2,
                    "seed": 42,
                    "mode": "identity",
                    "functions": ["trig_poly:1,0.5,1,0;0,2,0,0.5"],
                }
            )
        )
        scan_path = tmp_path / "scan.json"
        scan_path.write_text(
            json.dumps(
                {
                    "p": [2, "inf"],
                    "dims": [4, 8],
                    "trials": 3,
                    "seed": 5,
                    "mode": "scan",
                    "functions": ["trig_poly:1,0,0.5,0;0,2,0.25,0.25"],
                }
            )
        )
        failed = 0
        for command, conf in (
            ("lipschitz", cfg_path),
            ("verify-identity", id_path),
            ("scan", scan_path),
        ):
            outputs = []
            for run in ("a", "b"):
                out = tmp_path / f"{command}-{run}"
                rc = cli_main([command, "--config", str(conf), "--out", str(out)])
                failed += rc != 0
                blob = {}
                for name in sorted(os.listdir(out)):
                    if name != "run_manifest.json":
                        blob[name] = open(out / name, "rb").read()
                outputs.append(blob)
            failed += outputs[0] != outputs[1]
            failed += not outputs[0]
        _announce(9, "byte-identical rerun reports", started, failed, 3)
