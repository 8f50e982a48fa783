"""The nine acceptance criteria, each reported as one pass/fail line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block at
the end of the session lists every verdict. The two establishment
experiments run 20 seeds x 300 generations each and dominate the runtime.
"""

import time
from collections import Counter
from fractions import Fraction

import numpy as np

from diagself.diagonal import (
    SearchBudget, find_fitting_recursor, fits, integer_output_test, negative_diagonalize,
    select_weighted_subsequence,
)
from diagself.dsl import FALSE, TRUE, EvalContext, Kind, enumerate_codes, evaluate, lit, node, size
from diagself.engine import RunConfig, run as run_simulation
from diagself.experiments import (
    ExperimentSpec, Family, Generator, adoption_fraction, punished_after_adoption,
    reactions_after_punishment, samples_equivalent, samples_from_events,
)
from diagself.organism import (
    ActionTag, HistoryEntry, NoActiveRecursor, Organism, ProliferationFailed, RecursorEntry,
    effective_code, non_symmetric_proliferate,
)
from diagself.reward import freq_prob, weight_prob, weighted_choice
from diagself.cli import write_events

from oracles import _oracle_codes, oracle_enumeration

SEEDS = range(20)
REGS = {0: 0, 1: 0, 2: 0}
REACT = "RewardNeg -> StepBackNewestDeactivate"


def _apply(r, c, fuel=200):
    return evaluate(r, EvalContext(c, r, REGS, fuel))


# 1 ------------------------------------------------------------------------------------------

def _random_data(rng, depth=0):
    if depth >= 2 or rng.random() < 0.6:
        return lit(int(rng.integers(-3, 4)))
    return node(Kind.PAIR, _random_data(rng, depth + 1), _random_data(rng, depth + 1))


def test_c1_shortest_fit_oracle(verdict):
    rng = np.random.default_rng(1)
    pool = list(enumerate_codes(4, 2))
    oracle_pool = oracle_enumeration(4, 2, tuple(Kind))
    budget = SearchBudget(max_size=4)
    t0 = time.perf_counter()
    cases = good = 0
    while cases < 200:
        r = pool[int(rng.integers(len(pool)))]
        c = _random_data(rng)
        seq = [c]
        for _ in range(2):
            out = _apply(r, seq[-1])
            if not out.ok:
                break
            seq.append(out.value)
        if len(seq) < 3:
            continue
        cases += 1
        found = find_fitting_recursor(seq, budget)
        # brute force: first oracle candidate of size <= size(r) that fits
        truth = next(x for x in oracle_pool if size(x) <= size(r)
                     and all(_apply(x, a).value == b for a, b in zip(seq, seq[1:])))
        good += (found is not None and size(found) <= size(r) and fits(found, seq)
                 and found == truth)
    elapsed = time.perf_counter() - t0
    verdict(1, "shortest-fit oracle equivalence", good == cases and elapsed < 60,
            f"{good}/{cases} agree, {elapsed:.1f} s")


# 2 ------------------------------------------------------------------------------------------

def test_c2_enumeration_completeness(verdict):
    got = list(enumerate_codes(3, 2))
    expected = set()
    for n in (1, 2, 3):
        expected |= _oracle_codes(n, 2, tuple(Kind))
    misses = len(expected - set(got))
    dups = sum(v - 1 for v in Counter(got).values())
    extra = len(set(got) - expected)
    verdict(2, "enumeration completeness", misses == dups == extra == 0,
            f"{len(got)} codes, {misses} misses, {dups} duplicates, {extra} extra")


# 3 ------------------------------------------------------------------------------------------

def test_c3_determinism(verdict, tmp_path):
    cfg = RunConfig(seed=42, capacity=16, generations=200,
                    experiment=ExperimentSpec(Family.SEQUENCE_PREDICTION, Generator.ARITHMETIC,
                                              start=1, step=1))
    blobs = []
    for name in ("a", "b"):
        _, log = run_simulation(cfg)
        write_events(log.events(), tmp_path / f"{name}.jsonl")
        blobs.append((tmp_path / f"{name}.jsonl").read_bytes())
    verdict(3, "determinism", blobs[0] == blobs[1] and len(blobs[0]) > 0,
            f"events.jsonl {len(blobs[0])} bytes, identical={blobs[0] == blobs[1]}")


# 4 ------------------------------------------------------------------------------------------

def test_c4_punishment_reaction_establishment(verdict):
    passed = []
    for seed in SEEDS:
        cfg = RunConfig(seed=seed, capacity=16, generations=300, min_support=3,
                        p_react=Fraction(1, 2), epsilon_explore=Fraction(1, 2),
                        experiment=ExperimentSpec(Family.PUNISHMENT_ESTABLISHMENT))
        report, log = run_simulation(cfg)
        frac = adoption_fraction(report.final_population, REACT)
        follow = reactions_after_punishment(log.events(), REACT)
        ok = frac >= 0.9 and all(a == "StepBackDeactivate" for a in follow)
        passed.append(ok)
    n = sum(passed)
    verdict(4, "punishment-reaction establishment", n >= 18, f"{n}/20 seeds")


# 5 ------------------------------------------------------------------------------------------

def test_c5_negative_diagonalization(verdict):
    reference = integer_output_test().code
    equivalent = clean = 0
    for seed in SEEDS:
        cfg = RunConfig(seed=seed, capacity=16, generations=300,
                        experiment=ExperimentSpec(Family.INTEGER_SERIES))
        report, log = run_simulation(cfg)
        events = log.events()
        rejected, retained = samples_from_events(events)
        n = negative_diagonalize(rejected, retained, SearchBudget())
        if n is not None and samples_equivalent(n.code, reference, rejected + retained):
            equivalent += 1
        policies = {a[2] for a in report.adoptions if "UseTestingCode" in a[2]}
        counts = [punished_after_adoption(events, p, 50) for p in policies]
        if policies and all(trials > 0 and bad == 0 for trials, bad in counts):
            clean += 1
    verdict(5, "negative diagonalization", equivalent >= 18 and clean >= 18,
            f"equivalent testing code in {equivalent}/20 seeds, "
            f"zero punished outputs after adoption in {clean}/20 seeds")


# 6 ------------------------------------------------------------------------------------------

def test_c6_fading_memory_equivalence(verdict):
    rng = np.random.default_rng(6)
    budget = SearchBudget(max_size=3)
    agree = 0
    for _ in range(100):
        start, step = int(rng.integers(-2, 3)), int(rng.integers(1, 3))
        clean = [lit(start + i * step) for i in range(int(rng.integers(3, 7)))]
        memory = []
        for c in clean:
            memory.append(HistoryEntry(c, ActionTag.EMIT, 1))
            for _ in range(int(rng.integers(0, 4))):
                junk = lit(int(rng.integers(-9, 10))) if rng.random() < 0.5 else _random_data(rng)
                memory.append(HistoryEntry(junk, ActionTag.EMIT, -1, Fraction(0)))
        picked = select_weighted_subsequence(memory, True, rng)
        agree += find_fitting_recursor(picked, budget) == find_fitting_recursor(clean, budget)
    verdict(6, "fading-memory equivalence", agree == 100, f"{agree}/100 constructions")


# 7 ------------------------------------------------------------------------------------------

def test_c7_separation_soundness(verdict):
    rng = np.random.default_rng(7)
    budget = SearchBudget(max_size=3)
    found = sound = 0
    corpus = [([node(Kind.PAIR, lit(1), lit(2))], [lit(3)]), ([], [lit(1)]), ([lit(2)], [lit(3)])]
    for _ in range(60):
        codes = list(dict.fromkeys(_random_data(rng) for _ in range(int(rng.integers(2, 7)))))
        cut = int(rng.integers(0, len(codes) + 1))
        corpus.append((codes[:cut], codes[cut:]))
    for rejected, retained in corpus:
        n = negative_diagonalize(rejected, retained, budget)
        if n is None:
            continue
        found += 1
        sound += (all(_apply(n.code, r).value == FALSE for r in rejected)
                  and all(_apply(n.code, r).value == TRUE for r in retained))
    verdict(7, "separation soundness", found > 0 and sound == found,
            f"{sound}/{found} separations confirmed ({len(corpus)} problems)")


# 8 ------------------------------------------------------------------------------------------

def test_c8_non_symmetric_invariant(verdict):
    rng = np.random.default_rng(8)
    pool = list(enumerate_codes(3, 2))
    fuel = 200
    checked = good = 0
    while checked < 500:
        depth = int(rng.integers(1, 5))
        stack = tuple(RecursorEntry(pool[int(rng.integers(len(pool)))], bool(rng.random() < 0.8))
                      for _ in range(depth))
        o = Organism(0, _random_data(rng), stack)
        ids = iter(range(1, 3)).__next__
        try:
            a, b = non_symmetric_proliferate(o, fuel, ids)
        except (NoActiveRecursor, ProliferationFailed):
            continue
        checked += 1
        live = [e.code for e in stack if e.active]
        c = o.base
        for x in live[:-1]:
            c = _apply(x, c, fuel).value
        r = live[-1]
        c1 = _apply(r, c, fuel).value
        good += (b.base == c and b.stack == () and effective_code(b, fuel).value == c
                 and a.base == c1 and [e.code for e in a.stack] == [r])
    verdict(8, "non-symmetric proliferation", good == checked, f"{good}/{checked} organisms")


# 9 ------------------------------------------------------------------------------------------

def test_c9_probability_laws(verdict):
    exact = (freq_prob({1: 3, 2: 1}, 1) == Fraction(3, 4)
             and isinstance(freq_prob({1: 3, 2: 1}, 1), Fraction)
             and sum(freq_prob({"a": 2, "b": 5, "c": 7}, k) for k in "abc") == 1)
    table = {"a": Fraction(1), "b": Fraction(3), "c": Fraction(1, 2)}
    rng = np.random.default_rng(9)
    n = 100_000
    counts = Counter(weighted_choice(table, rng) for _ in range(n))
    worst = max(abs(counts[k] / n - float(weight_prob(table, k))) for k in table)
    verdict(9, "probability laws", exact and worst < 0.01,
            f"freq_prob exact={exact}, max frequency error {worst:.4f} over 1e5 draws")
