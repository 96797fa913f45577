"""End-to-end acceptance gate.

Nine criteria, each with pinned tolerances, driven by a counter-based seeded
generator so every run checks the identical instance population.  Criteria 1
and 2 share one batch of 500 random complexes through a session fixture.
"""

import contextlib
import io
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from cstarhodge import serial
from cstarhodge.algebra import AlgebraSpec
from cstarhodge.chain import random_complex, verify_chain_map
from cstarhodge.cli import main
from cstarhodge.errors import HypothesisViolated
from cstarhodge.hom import random_morphism
from cstarhodge.module import ModuleSpec, inner_product
from cstarhodge.symbol import (
    de_rham_symbol_sample,
    elliptic_scan,
    exactness_check,
    random_exact_sample,
    weighted_symbol_laplacian_check,
)
from cstarhodge.torus import (
    TorusGeometry,
    embedding_check,
    harmonic_rank_report,
    random_section,
    regularity_report,
)
from cstarhodge.util import rng_for

SEED = 20260815
TOL = 1e-8
PROJ_TOL = 1e-9
CUTOFF = 1e-10


@pytest.fixture(scope="session")
def complex_suite():
    t0 = time.time()
    batch = [random_complex(rng_for(SEED, "acceptance-complexes", i)) for i in range(500)]
    return batch, time.time() - t0


def test_criterion_1_parametrix_residuals(complex_suite):
    batch, build_time = complex_suite
    t0 = time.time()
    worst = 0.0
    for cx, _ in batch:
        for par in cx.parametrix_family(CUTOFF):
            r = par.residuals()
            worst = max(
                worst,
                r["green_laplacian_plus_projector"],
                r["laplacian_green_plus_projector"],
                r["laplacian_kills_projector"],
                r["green_kills_projector"],
            )
    elapsed = build_time + time.time() - t0
    print(f"criterion 1: 500 complexes, max parametrix residual {worst:.3e}, {elapsed:.1f}s")
    assert worst <= TOL
    assert elapsed < 60.0


def test_criterion_2_chain_map_residuals(complex_suite):
    batch, _ = complex_suite
    worst = 0.0
    for cx, _ in batch:
        rep = verify_chain_map(cx, cx.parametrix_family(CUTOFF), tol=TOL)
        for entry in rep["degrees"]:
            worst = max(
                worst,
                entry["projector_after_differential"],
                entry["green_commutes"],
                entry["laplacian_commutes"],
            )
        assert rep["passed"]
    print(f"criterion 2: max chain-map residual {worst:.3e}")
    assert worst <= TOL


def test_criterion_3_harmonic_equals_cohomology():
    worst_round = 0.0
    for i in range(100):
        rng = rng_for(SEED, "acceptance-hodge", i)
        cx, _ = random_complex(rng)
        for k in range(len(cx.modules)):
            rep = cx.cohomology_report(k, cutoff=CUTOFF)
            assert rep.harmonic_dim == rep.cohomology_dim
            ker = cx.kernel_intersection_check(k, cutoff=CUTOFF)
            assert ker["dims_match"]
            assert ker["differential_on_harmonics"] <= TOL
            assert ker["adjoint_on_harmonics"] <= TOL

            iso = cx.hodge_isomorphism(k)
            par = cx.parametrix(k, CUTOFF)
            v = cx.modules[k].random_vector(rng)
            # round trip: harmonic -> cocycle -> harmonic is the identity
            h = par.projector(v)
            h2, _ = iso.cocycle_to_harmonic(iso.harmonic_to_cocycle(h))
            r1 = (h2 - h).norm() / max(1.0, h.norm())
            # homotopy witness: any cocycle differs from its harmonic
            # representative by an exact term with computed primitive
            d_out = cx.differential(k)
            z = v - d_out.pseudoinverse(CUTOFF)(d_out(v))
            hz, w = iso.cocycle_to_harmonic(z)
            r2 = (z - hz - cx.differential(k - 1)(w)).norm() / max(1.0, z.norm())
            worst_round = max(worst_round, r1, r2)
    print(f"criterion 3: max round-trip/homotopy residual {worst_round:.3e}")
    assert worst_round <= TOL


def test_criterion_4_hodge_split():
    algebras = [(1,), (2,), (1, 2), (2, 2), (3,)]
    worst_split = 0.0
    worst_proj = 0.0
    for i in range(100):
        rng = rng_for(SEED, "acceptance-split-morphisms", i)
        alg = AlgebraSpec(algebras[i % len(algebras)])
        src = ModuleSpec(alg, 1 + i % 4)
        tgt = ModuleSpec(alg, 1 + (i // 4) % 4)
        t = random_morphism(src, tgt, rng)
        proj = t @ t.pseudoinverse(CUTOFF)
        v = tgt.random_vector(rng)
        range_part = proj(v)
        kernel_part = v - range_part
        scale = max(1.0, v.norm())
        worst_split = max(
            worst_split,
            (v - range_part - kernel_part).norm() / scale,
            inner_product(range_part, kernel_part).norm() / scale**2,
            t.adjoint()(kernel_part).norm() / (scale * max(1.0, t.norm())),
        )
        worst_proj = max(
            worst_proj,
            (proj @ proj - proj).norm(),
            (proj.adjoint() - proj).norm(),
        )
    for i in range(100):
        rng = rng_for(SEED, "acceptance-split-complexes", i)
        cx, _ = random_complex(rng)
        for k in range(len(cx.modules)):
            v = cx.modules[k].random_vector(rng)
            split = cx.hodge_decompose(k, v, cutoff=CUTOFF)
            scale = max(1.0, v.norm())
            worst_split = max(worst_split, split.reconstruction_residual / scale)
            worst_split = max(
                worst_split, max(split.orthogonality.values()) / scale**2
            )
            p = cx.parametrix(k, CUTOFF).projector
            worst_proj = max(
                worst_proj, (p @ p - p).norm(), (p.adjoint() - p).norm()
            )
    print(f"criterion 4: max split residual {worst_split:.3e}, projection residual {worst_proj:.3e}")
    assert worst_split <= TOL
    assert worst_proj <= PROJ_TOL


def test_criterion_5_symbol_ellipticity():
    worst_rel = math.inf
    for i in range(200):
        rng = rng_for(SEED, "acceptance-symbol", i)
        sample, _ = random_exact_sample(rng)
        r = exactness_check(sample, 1, CUTOFF)
        assert r.exact
        assert r.spectral_margin > TOL * r.spectral_scale
        worst_rel = min(worst_rel, r.spectral_margin / max(r.spectral_scale, 1.0))
        wrng = rng_for(SEED, "acceptance-symbol-weights", i)
        for _ in range(10):
            lam = wrng.standard_normal() + 1j * wrng.standard_normal()
            mu = wrng.standard_normal() + 1j * wrng.standard_normal()
            rep = weighted_symbol_laplacian_check(sample, 1, lam, mu, CUTOFF)
            assert rep["invertible"]
            assert rep["min_singular"] > TOL * rep["scale"]

    fiber = ModuleSpec(AlgebraSpec((2,)), 1)
    for n in (2, 3):
        rng = rng_for(SEED, "acceptance-covectors", n)
        samples = []
        for j in range(64):
            xi = rng.standard_normal(n)
            xi /= np.linalg.norm(xi)
            samples.append(de_rham_symbol_sample(n, fiber, xi, tag=f"n{n}-{j:02d}"))
        cert = elliptic_scan(samples, CUTOFF)
        assert cert.verdict == "elliptic"
        assert abs(cert.min_spectral_margin - 4 * math.pi**2) < 1e-9
    print(f"criterion 5: 200 exact samples, min relative margin {worst_rel:.3e}; "
          f"de Rham margins = 4 pi^2 within 1e-9")


def test_criterion_6_torus_harmonic_ranks():
    t0 = time.time()
    for n, r in [(1, 1), (2, 1), (2, 2), (3, 1)]:
        geo = TorusGeometry(n, 2, ModuleSpec(AlgebraSpec((2,)), r))
        reports = harmonic_rank_report(geo, CUTOFF)
        got = [rep["free_rank"] for rep in reports]
        want = [math.comb(n, k) * r for k in range(n + 1)]
        assert got == want, (n, r, got, want)
        for rep in reports:
            assert rep["passed"]
    elapsed = time.time() - t0
    print(f"criterion 6: harmonic free ranks C(n,k)*r for all four geometries, {elapsed:.1f}s")
    assert elapsed < 120.0


def test_criterion_7_embedding_inequality():
    configs = [
        (1, 2.0, [(0,), (1,)]),
        (2, 3.0, [(0, 0), (1, 0), (0, 1)]),
    ]
    fiber = ModuleSpec(AlgebraSpec((2,)), 1)
    worst = 0.0
    for n, t, alphas in configs:
        geo = TorusGeometry(n, 2, fiber)
        for i in range(500):
            s = random_section(geo, 0, rng_for(SEED, f"acceptance-embedding-n{n}", i))
            for alpha in alphas:
                rep = embedding_check(s, t, alpha)
                assert rep["passed"], (n, t, alpha, i)
                if rep["bound"] > 0:
                    worst = max(worst, rep["sup_grid"] / rep["bound"])
    for n, t, alpha in [(1, 1.0, (1,)), (2, 1.0, (0, 0)), (2, 1.5, (1, 0)), (1, 0.5, (0,))]:
        with pytest.raises(HypothesisViolated):
            embedding_check(
                random_section(TorusGeometry(n, 1, fiber), 0, rng_for(SEED, "acceptance-reject", n)),
                t,
                alpha,
            )
    print(f"criterion 7: 1000 sections x alphas all pass, worst sup/bound ratio {worst:.3f}")
    assert worst <= 1.0


def test_criterion_8_regularity_gain():
    geo = TorusGeometry(2, 4, ModuleSpec(AlgebraSpec((2,)), 1))
    worst_res = 0.0
    supports = set()
    for i in range(200):
        f = random_section(geo, 0, rng_for(SEED, "acceptance-regularity", i))
        rep = regularity_report(geo, 0, f, t_values=(-2.0, 0.0, 2.0), cutoff=CUTOFF)
        assert rep.passed
        assert rep.solve_residual <= 1e-9
        assert all(g["passed"] for g in rep.gains)
        assert rep.supports_agree and rep.kernel_is_zero_mode
        supports.add(tuple(sorted(map(tuple, rep.kernel_supports[0.0]))))
        worst_res = max(worst_res, rep.solve_residual)
    assert supports == {((0, 0),)}
    print(f"criterion 8: 200 right-hand sides, max solve residual {worst_res:.3e}")


def _run_cli(args):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(args)
    return code, buf.getvalue()


def test_criterion_9_deterministic_reports(tmp_path):
    cx, _ = random_complex(rng_for(SEED, "acceptance-determinism", 0))
    path = tmp_path / "cx.json"
    serial.save_complex(path, cx)
    serial.save_complex(tmp_path / "again.json", cx)
    assert path.read_text() == (tmp_path / "again.json").read_text()

    hodge_args = ["hodge", str(path), "--seed", "7", "--format", "json"]
    demo_args = [
        "torus-demo", "--n", "2", "--band", "1", "--fiber", "1x2",
        "--sections", "10", "--seed", "7", "--format", "json",
    ]
    for args in (hodge_args, demo_args):
        runs = [_run_cli(args) for _ in range(2)]
        assert runs[0][0] == runs[1][0] == (0 if args[0] == "hodge" else runs[0][0])
        assert runs[0][1] == runs[1][1]
        json.loads(runs[0][1])  # machine-readable

    # byte-identical across process boundaries as well
    proc = subprocess.run(
        [sys.executable, "-m", "cstarhodge"] + demo_args,
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == _run_cli(demo_args)[1]
    print("criterion 9: repeated and cross-process reports byte-identical")
