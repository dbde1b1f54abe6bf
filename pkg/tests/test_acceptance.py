"""Acceptance criteria for the whole artifact, one test per criterion.

Criteria 1, 2, 6, and 9 run against a single full-scale experiment (default
config: 18 stores, 2000 agents, 200 steps, 30 replicates, all cases) executed
once per session. Each test prints its own pass/fail line.
"""

import json

import numpy as np
import pytest
from scipy import stats

from roamlab import io
from roamlab.assimilation import (
    ParticleSet,
    StoreWeightVector,
    propose_particles,
    resample_and_select,
    update_store_weights,
    weight_particles,
)
from roamlab.cli import EXIT_OK, main
from roamlab.config import resolve_config
from roamlab.experiment import replicate_dir, run_experiment
from roamlab.metrics import build_od, discrepancy, ngram_table
from roamlab.model import BehaviorParams, choice_probabilities, store_utilities
from roamlab.numerics import log_normalize
from roamlab.twin import ObservationRecord

from conftest import TINY_OVERRIDES, make_agent, make_graph, make_world


def check(criterion: int, ok: bool, description: str):
    print(f"ACCEPTANCE {criterion} {'PASS' if ok else 'FAIL'}: {description}")
    assert ok, f"criterion {criterion} failed: {description}"


@pytest.fixture(scope="session")
def default_experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance_full")
    cfg = resolve_config({}, {})
    summary = run_experiment(cfg, out)
    return cfg, out, summary


def test_criterion_1_case3_ordering(default_experiment):
    _, _, summary = default_experiment
    d = summary["discrepancy"]
    assimilated = d["case3"]["discrepancy_mean"]
    control = d["case3_random"]["discrepancy_mean"]
    ratio = assimilated / control
    check(
        1,
        assimilated < control and ratio <= 0.85,
        f"case3 mean discrepancy {assimilated:.1f} < random-assignment "
        f"{control:.1f}, ratio {ratio:.3f} <= 0.85",
    )


def test_criterion_2_attribute_information_helps(default_experiment):
    _, _, summary = default_experiment
    d = summary["discrepancy"]
    c1 = d["case1"]["discrepancy_mean"]
    c2 = d["case2"]["discrepancy_mean"]
    check(2, c2 < c1, f"case2 mean discrepancy {c2:.1f} < case1 {c1:.1f}")


def test_criterion_3_resampling_oracle():
    w = np.array([0.5, 0.3, 0.2])
    ps = ParticleSet("next-store", np.array([0, 1, 2]), np.log(w))
    rng = np.random.default_rng(31)
    n = 100_000
    counts = np.bincount([resample_and_select(ps, rng) for _ in range(n)], minlength=3)
    sigma = np.sqrt(n * w * (1 - w))
    within = np.all(np.abs(counts - n * w) <= 3 * sigma)
    p = stats.chisquare(counts, f_exp=n * w).pvalue
    check(
        3,
        bool(within) and p > 0.001,
        f"10^5 draws from [0.5,0.3,0.2]: counts {counts.tolist()} within 3 sigma, "
        f"chi-square p={p:.3f} > 0.001",
    )


def test_criterion_4_softmax_properties():
    rng = np.random.default_rng(41)
    worst_sum = 0.0
    worst_shift = 0.0
    for _ in range(1000):
        s = int(rng.integers(2, 24))
        a = rng.uniform(0.1, 20.0, size=(1, s))
        d = rng.uniform(0.0, 5.0, size=(s, s))
        d = (d + d.T) / 2
        np.fill_diagonal(d, 0.0)
        graph = make_graph(a, d)
        params = BehaviorParams(
            omega=float(rng.uniform(-1, 1)),
            k=float(rng.uniform(-2, 2)),
            lam=float(rng.uniform(0, 8)),
        )
        congestion = rng.integers(0, 50, size=s)
        agent = make_agent(store=int(rng.integers(s)))
        world = make_world([agent], store_count=s)
        world.congestion = congestion

        p = choice_probabilities(world, graph, params, agent)
        worst_sum = max(worst_sum, abs(p.sum() - 1.0))

        u = store_utilities(graph, params, 0, congestion.astype(float))
        c = float(rng.uniform(-50, 50))
        worst_shift = max(
            worst_shift, float(np.max(np.abs(log_normalize(u + c) - log_normalize(u))))
        )

    sym_graph = make_graph([[5.0] * 18])
    agent = make_agent(store=4)
    world = make_world([agent], store_count=18)
    world.congestion = np.full(18, 7)
    p = choice_probabilities(world, sym_graph, BehaviorParams(), agent)
    candidates = p[np.arange(18) != 4]
    exact_uniform = bool(np.all(candidates == candidates[0]))

    check(
        4,
        worst_sum <= 1e-9 and worst_shift <= 1e-12 and exact_uniform,
        f"1000 random configs: max |sum-1|={worst_sum:.2e} <= 1e-9, "
        f"max log-domain shift error={worst_shift:.2e} <= 1e-12, "
        f"symmetric case exactly uniform={exact_uniform}",
    )


def test_criterion_5_uniform_likelihood_is_noop():
    graph = make_graph([[5.0, 5.0, 5.0]])
    params = BehaviorParams()
    agent = make_agent(store=0)
    world = make_world([agent], store_count=3)
    world.congestion = np.array([4, 2, 1])
    expected = choice_probabilities(world, graph, params, agent)

    uniform_obs = ObservationRecord(
        step=1, inflow=np.array([3, 3, 3]), inflow_by_attr=np.array([[3, 3, 3]])
    )
    sw = update_store_weights(StoreWeightVector.uniform(3), uniform_obs)

    rng = np.random.default_rng(51)
    n = 100_000
    draws = np.empty(n, dtype=int)
    for i in range(n):
        ps = propose_particles(agent, world, graph, params, 100, rng)
        ps = weight_particles(ps, sw)
        draws[i] = resample_and_select(ps, rng)
    counts = np.bincount(draws, minlength=3)
    cand = expected > 0
    p = stats.chisquare(counts[cand], f_exp=n * expected[cand]).pvalue
    check(
        5,
        counts[0] == 0 and p > 0.001,
        f"case-1 machinery under flat inflows matches the plain kernel: "
        f"counts {counts.tolist()}, chi-square p={p:.3f} > 0.001",
    )


def test_criterion_6_lifecycle_accounting(default_experiment):
    cfg, out, _ = default_experiment
    roles = ["truth", "baseline", "case1", "case2", "case3", "case3_random"]
    paths_file = {
        "truth": "truth_paths.csv",
        "baseline": "baseline_paths.csv",
    }
    spawn_ok = group_ok = length_ok = marginal_ok = True
    for r in range(cfg.replicate_count):
        for role in roles:
            fname = paths_file.get(role, "assim_paths.csv")
            triples = io.read_paths(replicate_dir(out, role, r) / fname)
            if len(triples) != 2000:
                spawn_ok = False
            groups = np.bincount([g for _, g, _ in triples], minlength=4)
            if not np.all(groups == 500):
                group_ok = False
            if any(len(p) > 4 for _, _, p in triples):
                length_ok = False
        observations = io.read_observations(
            replicate_dir(out, "truth", r) / "obs_counts.csv",
            replicate_dir(out, "truth", r) / "obs_counts_attr.csv",
        )
        for obs in observations:
            if not np.array_equal(obs.inflow, obs.inflow_by_attr.sum(axis=0)):
                marginal_ok = False
    check(
        6,
        spawn_ok and group_ok and length_ok and marginal_ok,
        f"all runs spawn exactly 2000 agents ({spawn_ok}), 500 per group ({group_ok}), "
        f"paths <= 4 stores ({length_ok}), inflow marginalization at every step "
        f"of every replicate ({marginal_ok})",
    )


def test_criterion_7_metric_unit_oracles():
    six = discrepancy([[1, 2], [3, 4]], [[0, 2], [5, 1]])
    a = np.array([[3, 1], [0, 9]])
    zero = discrepancy(a, a)
    grams = dict(ngram_table([[0, 1, 2, 3]], 3))
    od = build_od([[0, 1, 2, 3]], 4)
    check(
        7,
        six == 6.0 and zero == 0.0
        and grams == {(0, 1, 2): 1, (1, 2, 3): 1}
        and od.sum() == 3,
        f"discrepancy oracle={six}, self-discrepancy={zero}, "
        f"3-grams of [0,1,2,3]={grams}",
    )


def test_criterion_8_byte_identical_reruns(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps(TINY_OVERRIDES))
    outs = [tmp_path / "run_a", tmp_path / "run_b"]
    for out in outs:
        rc = main(
            ["experiment", "--config", str(cfg_file), "--out", str(out), "--jobs", "2"]
        )
        assert rc == EXIT_OK

    files_a = {p.relative_to(outs[0]).as_posix() for p in outs[0].rglob("*") if p.is_file()}
    files_b = {p.relative_to(outs[1]).as_posix() for p in outs[1].rglob("*") if p.is_file()}
    same_tree = files_a == files_b
    diverging = [
        rel
        for rel in sorted(files_a & files_b)
        if rel != "run_manifest.json"
        and (outs[0] / rel).read_bytes() != (outs[1] / rel).read_bytes()
    ]
    manifests = [json.loads((out / "run_manifest.json").read_text()) for out in outs]
    for m in manifests:
        m.pop("wall_time_s")
    check(
        8,
        same_tree and not diverging and manifests[0] == manifests[1],
        f"two experiment invocations: identical tree={same_tree}, "
        f"diverging files={diverging}, manifests equal besides wall time",
    )


def test_criterion_9_bias_correction(default_experiment):
    _, _, summary = default_experiment
    bias = summary["case3_assignment_bias"]
    weighted = bias["weighted_l1_mean"]
    random = bias["random_l1_mean"]
    check(
        9,
        weighted < random,
        f"assigned-sequence composition L1 to [0.25 x4]: likelihood {weighted:.4f} "
        f"< random {random:.4f} (mean over 30 replicates)",
    )
