"""Seeded population loop.

Each generation every organism, in id order: fires adopted policies, takes
its main action (exploration with probability ``epsilon_explore``, otherwise
diagonalization over its faded memory), runs the trial, is paid, may react
to a punishment, updates memory weights, refreshes its testing code and
tries to adopt new policies. Selection then removes the dead, culls to
capacity and refills by symmetric proliferation.

All randomness is drawn from :func:`derive_stream`, keyed by
``(seed, organism id, generation)``, so results don't depend on the order in
which organisms are processed.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import diagonal as dg
from .dsl import (
    AGE, ALL_KINDS, COND_E, Code, EvalContext, EvalOutcome,
    codes_of_size, evaluate, size, to_text,
)
from .experiments import ExperimentSpec, Task, collect_samples, evaluate_trial, make_task
from .organism import (
    ActionTag, EventLog, HistoryEntry, NoActiveRecursor, Organism, ProliferationFailed,
    StepBackMode, annotate_last, effective_code, non_symmetric_proliferate, push_recursor, remember,
    step_back, symmetric_proliferate,
)
from .reward import assess_and_register, is_dead, punishment_reaction

P = dg.PolicyAction
STEP_BACK_ACTIONS = {P.STEP_BACK_NEWEST_DEACTIVATE: StepBackMode.DEACTIVATE,
                     P.STEP_BACK_NEWEST_DELETE: StepBackMode.DELETE}
# Firing precedence when several adopted policies hold at once.
PRIORITY = [P.STEP_BACK_NEWEST_DEACTIVATE, P.STEP_BACK_NEWEST_DELETE,
            P.EXCLUDE_PUNISHED_FROM_DIAGONAL, P.DIAGONALIZE_NOW]
EXPLORE_RECURSOR_SIZE = 3


class PopulationExtinct(Exception):
    pass


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    seed: int
    capacity: int
    generations: int
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    death_threshold: int = -10
    alpha: Fraction = Fraction(1, 4)
    p_react: Fraction = Fraction(1, 2)
    epsilon_explore: Fraction = Fraction(1, 5)
    max_size: int = 3
    max_candidates: int = 100_000
    fuel_per_eval: int = 200
    lit_range: int = 2
    min_support: int = 3
    max_memory: int = 256
    policy_window: int = 32
    step_back_mode: StepBackMode = StepBackMode.DEACTIVATE

    def __post_init__(self):
        for key in ("capacity", "max_size", "max_candidates", "fuel_per_eval",
                    "min_support", "max_memory", "policy_window"):
            if getattr(self, key) <= 0:
                raise ConfigError(key, "must be positive")
        if self.generations < 0:
            raise ConfigError("generations", "must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.lit_range < 0:
            raise ConfigError("lit_range", "must be non-negative")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha", "must lie strictly between 0 and 1")
        for key in ("p_react", "epsilon_explore"):
            if not 0 <= getattr(self, key) <= 1:
                raise ConfigError(key, "must be a probability")

    @property
    def budget(self) -> dg.SearchBudget:
        return dg.SearchBudget(self.max_size, self.max_candidates, self.fuel_per_eval,
                               self.lit_range, ALL_KINDS)


@dataclass
class RunReport:
    rows: list = field(default_factory=list)
    adoptions: list = field(default_factory=list)
    final_population: list = field(default_factory=list)
    extinct: bool = False
    generations_executed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def derive_stream(seed: int, organism_id: int, generation: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, organism_id, generation]))


def _explore_pool(lit_range: int) -> list[Code]:
    return [c for n in range(1, EXPLORE_RECURSOR_SIZE + 1)
            for c in codes_of_size(n, lit_range, ALL_KINDS)]


def initial_population(config: RunConfig) -> list[Organism]:
    base = config.experiment.base()
    return [Organism(id=i, base=base) for i in range(config.capacity)]


def population_digest(population, fuel: int) -> list[dict]:
    out = []
    for o in sorted(population, key=lambda o: o.id):
        eff = effective_code(o, fuel)
        out.append({"id": o.id, "points": o.points, "age": o.age,
                    "effective": str(eff), "stack": len(o.stack),
                    "policies": [str(p) for p in o.adopted_policies]})
    return out


class _Life:
    """One organism's turn within a generation."""

    def __init__(self, sim: "Simulation", o: Organism, task: Task):
        self.sim = sim
        self.cfg = sim.config
        self.g = sim.generation
        self.task = task
        self.rng = derive_stream(self.cfg.seed, o.id, self.g)
        self.stats = {"punishments": 0, "diag_success": 0}
        regs = dict(o.registers)
        regs[AGE] = o.age + 1
        regs[COND_E] = task.cond_e
        self.o = replace(o, age=o.age + 1, registers=regs)

    # -- helpers ---------------------------------------------------------------
    def emit(self, o, kind, code=None, **details):
        return self.sim.log.emit(self.g, o.id, kind, code, points=o.points, **details)

    def testing_code(self, o) -> Code | None:
        if o.registers.get(COND_E) != 1:
            return None
        for p in o.adopted_policies:
            if p.action is P.USE_TESTING_CODE and p.weight > 0 and \
                    dg.condition_holds(p.condition, o.memory[-1] if o.memory else None, 1):
                return p.testing_code.code
        return o.testing_code

    def output(self, o) -> EvalOutcome:
        fuel = self.cfg.fuel_per_eval
        eff = effective_code(o, fuel)
        if not eff.ok:
            return eff
        return evaluate(eff.value, EvalContext(self.task.input, eff.value, o.registers, fuel))

    def passes(self, o, n: Code | None) -> bool:
        """Does the testing code ``n`` accept o's effective code?"""
        if n is None:
            return True
        eff = effective_code(o, self.cfg.fuel_per_eval)
        if not eff.ok:
            return False
        try:
            return dg.behavioral_test(n, eff.value, self.cfg.fuel_per_eval) is True
        except dg.NotATestingCode:
            return False

    def record(self, o, action: ActionTag, **fields) -> Organism:
        eff = effective_code(o, self.cfg.fuel_per_eval)
        entry = HistoryEntry(
            snapshot=eff.value if eff.ok else o.base, action=action,
            cond_e=o.registers.get(COND_E, 0), testing_code=self.testing_code(o), **fields)
        return remember(o, entry, self.cfg.max_memory)

    # -- actions ---------------------------------------------------------------
    def do_step_back(self, o, mode: StepBackMode, forced: bool) -> Organism:
        tag = (ActionTag.STEP_BACK_DELETE if mode is StepBackMode.DELETE
               else ActionTag.STEP_BACK_DEACTIVATE)
        n = self.testing_code(o)
        try:
            cand = step_back(o, mode)
        except NoActiveRecursor:
            if not forced:
                return None
            self.emit(o, tag, noop=True)
            return self.record(o, tag)
        if not self.passes(cand, n):
            if not forced:
                return None
            self.emit(o, tag, noop=True, vetoed=True)
            return self.record(o, tag)
        self.emit(cand, tag, o.stack[o.active_indices()[-1]].code)
        return self.record(cand, tag)

    def try_push(self, o, r: Code) -> Organism | None:
        """Push ``r`` if it changes the phenotype and passes the testing code."""
        before = effective_code(o, self.cfg.fuel_per_eval)
        cand = push_recursor(o, r, self.g)
        after = effective_code(cand, self.cfg.fuel_per_eval)
        if after == before:
            return None
        if not self.passes(cand, self.testing_code(o)):
            return None
        return cand

    def diagonalize(self, o, exclude: bool | None, forced: bool):
        """Returns (organism, memory entries fed to a successful search)."""
        if exclude is None:
            exclude = bool(self.rng.random() < 0.5)
        assessed = [e for e in o.memory if e.assessed]
        picked = [assessed[i] for i in dg.select_weighted_indices(assessed, exclude, self.rng)]
        if len(picked) < 2 and not forced:
            self.emit(o, ActionTag.NOOP, reason="short-memory")
            return self.record(o, ActionTag.NOOP), []
        found = None
        if len(picked) >= 2:
            found = dg.find_fitting_recursor([e.snapshot for e in picked], self.cfg.budget)
        pushed = False
        if found is not None:
            self.stats["diag_success"] += 1
            cand = self.try_push(o, found)
            if cand is not None:
                o, pushed = cand, True
        self.emit(o, ActionTag.DIAGONALIZE, found, excluded_punished=exclude,
                  found=found is not None, pushed=pushed)
        o = self.record(o, ActionTag.DIAGONALIZE, excluded_punished=exclude)
        return o, (picked if found is not None else [])

    def explore(self, o):
        choice = int(self.rng.integers(4))
        if choice == 0:
            pool = self.sim.explore_pool
            r = pool[int(self.rng.integers(len(pool)))]
            cand = self.try_push(o, r)
            if cand is None:
                self.emit(o, ActionTag.NOOP, r, reason="push-rejected")
                return [self.record(o, ActionTag.NOOP)]
            self.emit(cand, ActionTag.PUSH_RECURSOR, r)
            return [self.record(cand, ActionTag.PUSH_RECURSOR)]
        if choice == 1:
            res = self.do_step_back(o, self.cfg.step_back_mode, forced=False)
            if res is None:
                self.emit(o, ActionTag.NOOP, reason="step-back-rejected")
                return [self.record(o, ActionTag.NOOP)]
            return [res]
        n = self.testing_code(o)
        try:
            if choice == 2:
                kids = non_symmetric_proliferate(o, self.cfg.fuel_per_eval, self.sim.new_id, self.g)
                tag = ActionTag.NON_SYM_PROLIFERATE
            else:
                kids = symmetric_proliferate(o, self.sim.new_id, self.g)
                tag = ActionTag.PROLIFERATE
        except (NoActiveRecursor, ProliferationFailed) as exc:
            self.emit(o, ActionTag.NOOP, reason=type(exc).__name__)
            return [self.record(o, ActionTag.NOOP)]
        if not all(self.passes(k, n) for k in kids):
            self.emit(o, ActionTag.NOOP, reason="proliferation-rejected")
            return [self.record(o, ActionTag.NOOP)]
        self.emit(o, tag, children=[k.id for k in kids])
        return [self.record(k, tag) for k in kids]

    def repair(self, o) -> Organism:
        """With a testing code in effect, step back until the effective code passes it."""
        n = self.testing_code(o)
        while n is not None and o.active_indices() and not self.passes(o, n):
            o = self.do_step_back(o, StepBackMode.DEACTIVATE, forced=True)
        return o

    def fire_policies(self, o):
        """Fire the highest-priority adopted policy whose condition holds.

        Holders of a conflicting action are overridden: their weight drops to
        zero and they stop firing.
        """
        prev = o.memory[-1] if o.memory else None
        included = []
        holding = [p for p in o.adopted_policies
                   if p.action in PRIORITY and p.weight > 0
                   and dg.condition_holds(p.condition, prev, o.registers.get(COND_E, 0))]
        if not holding:
            return o, None, included
        holding.sort(key=lambda p: PRIORITY.index(p.action))
        winner = holding[0]
        losers = {p for p in holding if p.action is not winner.action}
        if losers:
            o = replace(o, adopted_policies=tuple(
                replace(p, weight=Fraction(0)) if p in losers else p for p in o.adopted_policies))
            self.emit(o, "Override", policies=sorted(str(p) for p in losers), by=str(winner))
        if winner.action in STEP_BACK_ACTIONS:
            o = self.do_step_back(o, STEP_BACK_ACTIONS[winner.action], forced=True)
        elif winner.action is P.EXCLUDE_PUNISHED_FROM_DIAGONAL:
            o, included = self.diagonalize(o, True, forced=True)
        else:
            o, included = self.diagonalize(o, None, forced=True)
        return o, winner, included

    # -- the turn ----------------------------------------------------------------
    def live(self) -> list[Organism]:
        o, _, included = self.fire_policies(self.o)
        o = self.repair(o)
        if self.rng.random() < float(self.cfg.epsilon_explore):
            bodies = self.explore(o)
        else:
            o, more = self.diagonalize(o, None, forced=False)
            included += more
            bodies = [o]
        return [self.after_action(b, included) for b in bodies]

    def after_action(self, o, included) -> Organism:
        cfg = self.cfg
        out = self.output(o)
        a = evaluate_trial(cfg.experiment, self.task, out)
        o = assess_and_register(o, a)
        o = annotate_last(o, output=out.value)
        self.emit(o, ActionTag.EMIT, out.value, reward=a.points, reason=a.reason,
                  effective=to_text(o.memory[-1].snapshot))
        if a.points < 0:
            self.stats["punishments"] += 1
        clamp = any(p.action is P.EXCLUDE_PUNISHED_FROM_DIAGONAL and p.weight > 0
                    for p in o.adopted_policies)
        if included or clamp:
            ids = {id(e) for e in included}
            idx = [i for i, e in enumerate(o.memory) if id(e) in ids]
            o = replace(o, memory=dg.update_weights(o.memory, idx, a.points, cfg.alpha, clamp))
        o, fired, _ = self.fire_policies(o)
        if a.points < 0 and not (fired is not None and fired.action in STEP_BACK_ACTIONS):
            before = o
            o = punishment_reaction(o, cfg.p_react, self.rng, cfg.step_back_mode)
            if o is not before:
                tag = (ActionTag.STEP_BACK_DELETE if cfg.step_back_mode is StepBackMode.DELETE
                       else ActionTag.STEP_BACK_DEACTIVATE)
                self.emit(o, tag, before.stack[before.active_indices()[-1]].code, reaction=True)
                o = self.record(o, tag)
        o = self.refresh_testing_code(o)
        return self.discover(o)

    def refresh_testing_code(self, o) -> Organism:
        if o.registers.get(COND_E) != 1:
            return o
        if any(p.action is P.USE_TESTING_CODE and p.weight > 0 for p in o.adopted_policies):
            return o
        rejected, retained = collect_samples(o.memory)
        if not rejected or not retained:
            return o
        key = lambda c: to_text(c)
        n = dg.negative_diagonalize(sorted(rejected, key=key), sorted(retained, key=key),
                                    self.cfg.budget)
        code = n.code if n is not None else None
        if code != o.testing_code:
            self.emit(o, "TestingCode", code, found=n is not None)
            o = replace(o, testing_code=code)
        return o

    def discover(self, o) -> Organism:
        window = o.memory[-self.cfg.policy_window:]
        pool = [dg.TestingCode(o.testing_code)] if o.testing_code is not None else []
        have = set(o.adopted_policies)
        new = []
        for p in dg.enumerate_policies(pool):
            if p in have:
                continue
            if p.testing_code is not None and size(p.testing_code.code) > self.cfg.max_size:
                continue
            if dg.fit_policy(window, p, self.cfg.min_support):
                new.append(replace(p, adopted_at=self.g))
        for p in new:
            self.emit(o, "Adopt", policy=str(p))
            self.sim.adoptions.append([self.g, o.id, str(p)])
        if new:
            o = replace(o, adopted_policies=o.adopted_policies + tuple(new))
        return o


class Simulation:
    def __init__(self, config: RunConfig, log: EventLog | None = None):
        self.config = config
        self.log = log if log is not None else EventLog()
        self.population = initial_population(config)
        self._ids = itertools.count(len(self.population))
        self.generation = 0
        self.rows: list[dict] = []
        self.adoptions: list = []
        self.explore_pool = _explore_pool(config.lit_range)

    def new_id(self) -> int:
        return next(self._ids)

    def step_generation(self) -> list[Organism]:
        cfg = self.config
        if not self.population:
            raise PopulationExtinct("empty population")
        task = make_task(cfg.experiment, self.generation)
        survivors: list[Organism] = []
        punishments = diag_success = 0
        for o in sorted(self.population, key=lambda o: o.id):
            life = _Life(self, o, task)
            survivors += life.live()
            punishments += life.stats["punishments"]
            diag_success += life.stats["diag_success"]
        self.population = self.select(survivors)
        pop = self.population
        self.rows.append({
            "generation": self.generation, "pop": len(pop),
            "mean_points": f"{sum(o.points for o in pop) / len(pop):.6f}" if pop else "nan",
            "punishments": punishments, "diag_success": diag_success,
        })
        self.generation += 1
        if not pop:
            raise PopulationExtinct(f"population extinct at generation {self.generation - 1}")
        return pop

    def select(self, population: list[Organism]) -> list[Organism]:
        cfg = self.config
        g = self.generation
        rank = lambda o: (-o.points, o.age, o.id)
        alive = []
        for o in population:
            if is_dead(o, cfg.death_threshold):
                self.log.emit(g, o.id, "Remove", points=o.points, reason="death")
            else:
                alive.append(o)
        if not alive:
            return []
        alive.sort(key=rank)
        for o in alive[cfg.capacity:]:
            self.log.emit(g, o.id, "Remove", points=o.points, reason="cull")
        alive = alive[:cfg.capacity]
        while len(alive) < cfg.capacity:
            best = min(alive, key=rank)
            alive.remove(best)
            a, b = symmetric_proliferate(best, self.new_id, g, self.log)
            for child in (a, b):
                entry = HistoryEntry(
                    snapshot=_snapshot(child, cfg.fuel_per_eval), action=ActionTag.PROLIFERATE,
                    cond_e=child.registers.get(COND_E, 0),
                    testing_code=child.testing_code if child.registers.get(COND_E) == 1 else None)
                alive.append(remember(child, entry, cfg.max_memory))
        return sorted(alive, key=lambda o: o.id)

    def report(self, extinct: bool = False) -> RunReport:
        return RunReport(rows=list(self.rows), adoptions=list(self.adoptions),
                         final_population=population_digest(self.population, self.config.fuel_per_eval),
                         extinct=extinct, generations_executed=len(self.rows))


def _snapshot(o: Organism, fuel: int) -> Code:
    eff = effective_code(o, fuel)
    return eff.value if eff.ok else o.base


def run(config: RunConfig, log: EventLog | None = None) -> tuple[RunReport, EventLog]:
    sim = Simulation(config, log)
    try:
        for _ in range(config.generations):
            sim.step_generation()
    except PopulationExtinct:
        return sim.report(extinct=True), sim.log
    return sim.report(), sim.log
