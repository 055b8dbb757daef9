"""Exit criteria.  Each test is tagged with its criterion number; the
terminal summary prints one PASS/FAIL line per criterion."""

import hashlib
import io
import math
import random
import shutil
import time

import pytest

from cellsim.dse import ProcessParams, TransistorModel, execution_transistors, network_transistors
from cellsim.dse import MemoryConfig, periphery_transistors, sram_transistors, sweep
from cellsim.fabric import Chip, write_trace
from cellsim.harness import RunConfig, emit_reports, run_dynamic
from cellsim.operon import Opcode, Operon
from cellsim.workloads import SamplerConfig, WorkloadError, load_increments, schedule_stats

from conftest import random_graph

KIB = 1024

REFERENCE_INCREMENTS = {
    "edge-50K": [101682, 102012, 101772, 101916, 101634, 101254, 101809, 102076, 101645, 102239],
    "snowball-50K": [37315, 29238, 47983, 68183, 87863, 108642, 129477, 149413, 169416, 190509],
    "edge-500K": [1016373, 1016853, 1015533, 1018007, 1018340, 1017923, 1016834, 1019103, 1016846, 1018701],
    "snowball-500K": [222847, 328912, 513890, 709723, 904420, 1101941, 1297078, 1501559, 1698228, 1895915],
}
REFERENCE_TOTALS = {"edge-50K": 1018039, "snowball-50K": 1018039, "edge-500K": 10174513, "snowball-500K": 10174513}


def acceptance(criterion):
    return pytest.mark.acceptance(criterion=criterion)


def digest(*texts):
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode() if isinstance(t, str) else t)
    return h.hexdigest()


def result_digest(result, tmp):
    shutil.rmtree(tmp, ignore_errors=True)
    paths = emit_reports(result, tmp)
    return digest(paths["increments"].read_bytes(), paths["trace"].read_bytes())


# -- criterion 1/2 workloads --------------------------------------------------


def oracle_run_configs(count=50, seed=2024):
    rng = random.Random(seed)
    cfgs = []
    for i in range(count):
        w = rng.randint(4, 32)
        h = w if rng.random() < 0.6 else rng.randint(4, 32)
        if i < 2:
            n, m = 2000, 20000
        else:
            n = int(round(math.exp(rng.uniform(math.log(20), math.log(2000)))))
            m = rng.randint(n - 1, min(20000, 6 * n))
        base = random_graph(n, m, random.Random(rng.getrandbits(32)), connected=rng.random() < 0.8)
        kind = "edge" if i % 2 == 0 else "snowball"
        undirected = rng.random() < 0.75
        start = rng.choice(base).src
        sampler = SamplerConfig(kind, base, rng.randint(1, 10), seed=rng.getrandbits(16), start_vertex=start,
                                undirected=undirected)
        cfgs.append(RunConfig(
            grid=(w, h),
            chunk_cap=rng.choice([2, 4, 8, 16]),
            fifo_depth=rng.choice([1, 2, 4]),
            root=start,
            sampler=sampler,
            max_cycles=2_000_000,
        ))
    return cfgs


@pytest.fixture(scope="module")
def oracle_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("crit1")
    t0 = time.perf_counter()
    runs = []
    for i, cfg in enumerate(oracle_run_configs()):
        res = run_dynamic(cfg)
        runs.append((cfg, res, result_digest(res, tmp / str(i))))
    elapsed = time.perf_counter() - t0
    return runs, elapsed


@acceptance(1)
def test_oracle_equivalence(oracle_runs):
    runs, elapsed = oracle_runs
    assert len(runs) >= 50
    sizes = [(len(c.sampler.base_graph), c.grid, len(r.reports)) for c, r, _ in runs]
    assert max(s[0] for s in sizes) == 20000
    assert {c.sampler.kind.value for c, _, _ in runs} == {"edge", "snowball"}
    bad = [(i, len(r.mismatches)) for i, (_, r, _) in enumerate(runs) if r.mismatches]
    print(f"\ncriterion 1: {len(runs)} runs, {sum(len(r.reports) for _, r, _ in runs)} increments checked, "
          f"{len(bad)} runs with mismatches, {elapsed:.1f}s")
    assert bad == []
    assert elapsed < 300


@acceptance(2)
def test_batched_pause(oracle_runs):
    runs, _ = oracle_runs
    for cfg, res, _ in runs:
        by_cycle = {s.cycle: s for s in res.trace}
        assert len(res.boundaries) == len(res.reports)
        for b in res.boundaries:
            row = by_cycle[b]
            assert row.active_cells == 0 and row.operons_in_flight == 0, (cfg.grid, b)


# -- criterion 3 ------------------------------------------------------------------


def sampling_trials(count=10, seed=77):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(1000, 1500)
        base = random_graph(n, 3 * n, random.Random(rng.getrandbits(32)), connected=True)
        start = rng.randrange(n)
        s = rng.getrandbits(16)
        pair = []
        for kind in ("edge", "snowball"):
            pair.append(RunConfig(grid=(8, 8), root=start, sampler=SamplerConfig(kind, base, 10, seed=s, start_vertex=start)))
        out.append(tuple(pair))
    return out


@pytest.fixture(scope="module")
def sampling_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("crit3")
    out = []
    for i, (edge_cfg, snow_cfg) in enumerate(sampling_trials()):
        e, s = run_dynamic(edge_cfg), run_dynamic(snow_cfg)
        out.append((e, s, result_digest(e, tmp / f"e{i}"), result_digest(s, tmp / f"s{i}")))
    return out


@acceptance(3)
def test_edge_sampling_creates_more_actions(sampling_runs):
    ratios = []
    for e, s, _, _ in sampling_runs:
        assert e.mismatches == [] and s.mismatches == []
        ratios.append(e.totals()["actions_created"] / s.totals()["actions_created"])
    wins = sum(r > 1.0 for r in ratios)
    print(f"\ncriterion 3: edge/snowball actions_created ratios {[round(r, 3) for r in ratios]}, {wins}/10 > 1")
    assert len(ratios) == 10
    assert wins >= 9


# -- criterion 4 ------------------------------------------------------------------


def latency_samples(count=1000, seed=11):
    rng = random.Random(seed)
    chips = {}
    out = []
    for _ in range(count):
        w, h = rng.randint(1, 32), rng.randint(1, 32)
        chip = chips.get((w, h))
        if chip is None:
            chip = chips[(w, h)] = Chip(w, h, record_deliveries=True)
            for i in range(w * h):
                chip.store.get(chip.store.create_root(chip.coords[i], i)).level = 0
        src = (rng.randrange(w), rng.randrange(h))
        dst = (rng.randrange(w), rng.randrange(h))
        target = chip.store.directory[chip.index(dst)][chip.index(dst)]
        assert chip.is_quiescent()
        op = Operon(target, Opcode.BFS, 1)
        assert chip.inject(op, src)
        chip.run_until_quiescent(1000)
        (got, cycle), = chip.deliveries
        chip.deliveries.clear()
        assert got is op
        out.append((src, dst, cycle - op.injected_at))
    return out


def soak(n_operons=10_000, seed=5, guard=1_000_000):
    rng = random.Random(seed)
    chip = Chip(16, 16, record_deliveries=True)
    targets = []
    for i in range(256):
        a = chip.store.create_root(chip.coords[i], i)
        chip.store.get(a).level = 0
        targets.append(a)
    pending = [(chip.coords[rng.randrange(256)], Operon(targets[rng.randrange(256)], Opcode.BFS, 1))
               for _ in range(n_operons)]
    conserved = True
    while pending or not chip.is_quiescent():
        keep = []
        for src, op in pending:
            if not chip.inject(op, src):
                keep.append((src, op))
        pending = keep
        chip.step()
        conserved &= chip.operons_created == chip.operons_delivered + chip.operons_in_flight
        if chip.cycle > guard:
            raise AssertionError("soak exceeded guard")
    return chip, conserved


@pytest.fixture(scope="module")
def latency_data():
    return latency_samples()


@pytest.fixture(scope="module")
def soak_data():
    return soak()


@acceptance(4)
def test_latency_equals_manhattan(latency_data):
    wrong = [(s, d, lat) for s, d, lat in latency_data if lat != abs(s[0] - d[0]) + abs(s[1] - d[1])]
    print(f"\ncriterion 4a: {len(latency_data)} pairs, {len(wrong)} latency mismatches")
    assert len(latency_data) == 1000
    assert wrong == []


@acceptance(4)
def test_soak_terminates_without_drops(soak_data):
    chip, conserved = soak_data
    delivered_ids = [id(op) for op, _ in chip.deliveries]
    print(f"\ncriterion 4b: 10000 operons on 16x16 quiescent after {chip.cycle} cycles, "
          f"{chip.operons_delivered} delivered")
    assert conserved
    assert chip.is_quiescent()
    assert chip.operons_created == chip.operons_delivered == 10_000
    assert len(set(delivered_ids)) == 10_000
    assert sum(chip.actions_executed) == 10_000


# -- criterion 5 ------------------------------------------------------------------


def _star_chip(d):
    chip = Chip(8, 8)
    s = chip.store
    u = s.create_root((0, 0), 0)
    for i in range(d):
        t = s.create_root(chip.coords[1 + i % 63], 100 + i)
        s.get(t).level = 0
        s.insert_edge_local(u, t)
    return chip, u


@acceptance(5)
def test_predicate_fail_costs_one_cycle():
    chip, u = _star_chip(0)
    chip.store.get(u).level = 0
    chip.inject(Operon(u, Opcode.BFS, 3), (0, 0))
    chip.run_until_quiescent(100)
    assert chip.cycles_active[0] == 1


@acceptance(5)
@pytest.mark.parametrize("d", [0, 1, 5, 20])
def test_successful_bfs_costs(d):
    chip, u = _star_chip(d)
    chip.inject(Operon(u, Opcode.BFS, 0), (0, 0))
    for _ in range(1 + d):
        chip.step()
    assert chip.inflight[0] is not None
    chip.step()
    # occupied for exactly 2 + d consecutive cycles, then free
    assert chip.inflight[0] is None and not chip.queues[0]
    assert chip.cycles_active[0] == 2 + d
    chip.run_until_quiescent(1000)
    assert chip.cycles_active[0] == 2 + d
    assert chip.store.get(u).level == 0


# -- criterion 6 ------------------------------------------------------------------


@acceptance(6)
def test_dse_trend():
    t0 = time.perf_counter()
    sizes = [KIB << i for i in range(11)]
    proc = ProcessParams(91e6, 306)
    model = TransistorModel()
    points = sweep(sizes, proc=proc, model=model, out=io.StringIO())
    elapsed = time.perf_counter() - t0
    assert len(points) == 11 and all(p.feasible for p in points)
    for a, b in zip(points, points[1:]):
        assert b.cell_count < a.cell_count
        assert b.diameter <= a.diameter
    for p in points:
        assert p.cell_count * p.total_tx <= proc.budget
        mem = MemoryConfig(p.mem_per_cell)
        recomputed = (
            sram_transistors(mem)
            + periphery_transistors(mem, model)
            + execution_transistors(int(math.log2(p.mem_per_cell)), model)
            + network_transistors(4, model)
        )
        assert recomputed == p.total_tx == p.sram_tx + p.periph_tx + p.exec_tx + p.net_tx
    print(f"\ncriterion 6: cell counts {[p.cell_count for p in points]}, {elapsed * 1000:.1f} ms")
    assert elapsed < 1.0


# -- criterion 7 ------------------------------------------------------------------


def _write_sized(path, n, rng, n_vertices=50_000):
    with open(path, "w") as fh:
        for _ in range(n):
            fh.write(f"{rng.randrange(n_vertices)}\t{rng.randrange(n_vertices)}\n")
    return path


def test_reference_rows_sum_to_final():
    for name, row in REFERENCE_INCREMENTS.items():
        assert sum(row) == REFERENCE_TOTALS[name]


@acceptance(7)
def test_reference_edge_50k_from_files(tmp_path):
    rng = random.Random(50)
    files = [_write_sized(tmp_path / f"edge_{k + 1}.tsv", n, rng) for k, n in enumerate(REFERENCE_INCREMENTS["edge-50K"])]
    stats = schedule_stats(load_increments(files))
    assert [r.edges for r in stats.rows] == REFERENCE_INCREMENTS["edge-50K"]
    assert stats.rows[0].edges == 101_682
    assert stats.total_edges == 1_018_039


@acceptance(7)
def test_reference_snowball_50k_from_index(tmp_path):
    rng = random.Random(51)
    path = _write_sized(tmp_path / "snow.tsv", REFERENCE_TOTALS["snowball-50K"], rng)
    idx = tmp_path / "snow.idx"
    idx.write_text("".join(f"{n}\n" for n in REFERENCE_INCREMENTS["snowball-50K"]))
    stats = schedule_stats(load_increments([path], index_path=idx))
    assert [r.edges for r in stats.rows] == REFERENCE_INCREMENTS["snowball-50K"]
    assert [r.cumulative_edges for r in stats.rows][-1] == 1_018_039


@acceptance(7)
def test_corrupted_file_reports_line(tmp_path):
    rng = random.Random(52)
    path = _write_sized(tmp_path / "edge_1.tsv", 101_682, rng)
    lines = path.read_text().splitlines(keepends=True)
    lines[54_320] = "12\tnot-a-vertex\n"
    path.write_text("".join(lines))
    with pytest.raises(WorkloadError, match=r"edge_1\.tsv:54321:"):
        load_increments([path])


# -- criterion 8 ------------------------------------------------------------------


@acceptance(8)
def test_determinism_oracle_runs(oracle_runs, tmp_path):
    runs, _ = oracle_runs
    for i, (cfg, _, first) in enumerate(runs):
        assert result_digest(run_dynamic(cfg), tmp_path / str(i)) == first, f"run {i} differs"


@acceptance(8)
def test_determinism_sampling_runs(sampling_runs, tmp_path):
    for i, ((edge_cfg, snow_cfg), (_, _, de, ds)) in enumerate(zip(sampling_trials(), sampling_runs)):
        assert result_digest(run_dynamic(edge_cfg), tmp_path / f"e{i}") == de
        assert result_digest(run_dynamic(snow_cfg), tmp_path / f"s{i}") == ds


@acceptance(8)
def test_determinism_transport(latency_data, soak_data):
    assert latency_samples() == latency_data
    chip, _ = soak()
    first, _ = soak_data

    def trace_digest(c):
        buf = io.StringIO()
        write_trace(c.trace, buf)
        return digest(buf.getvalue(), repr(c.cycles_active), repr([cy for _, cy in c.deliveries]))

    assert trace_digest(chip) == trace_digest(first)
