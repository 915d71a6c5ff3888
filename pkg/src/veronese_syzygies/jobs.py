"""A file-based work queue for rank tasks.

Layout of a queue directory::

    manifest.txt          b, d, reduction flags, planned side, task ids
    config.txt            backend, primes, seed, tolerances, memory tiers, retries
    pending/<id>.task     one task per file (``key value`` lines)
    claims/<id>.claim     exclusive-create claim: worker, pid, host, time
    results/<id>.res      rank record, committed once with os.link
    failed/<id>.fail      permanent failures with a diagnostic
    matrices/<id>.mtx     optional prebuilt matrices (koszul triplet format)
    commits.log           one line per committed result (append-only)

Claims use ``O_CREAT | O_EXCL`` so two workers never run the same task at
the same time; a claim whose process is gone (or that is older than the stale
limit) is recovered by atomically renaming it away first, so only one
worker can take it over.  Results are written to a temporary file and then
hard-linked into place: the link fails if a result exists, so every task id
is committed exactly once even if a recovered task is finished twice.

A rank call that exceeds its tier's memory ceiling releases its claim with
the tier raised; after ``max_retries`` escalations the task fails for good.
"""
from __future__ import annotations

import logging
import os
import socket
import time
from dataclasses import dataclass, field
from pathlib import Path

from .betti import (BettiDatabase, apply_duality, dual_rule, fill_from_numerator, mark_complete,
                    record_job, strand_jobs, unique_tasks)
from .core import orbit
from .hilbert import RangeValidationError
from .koszul import MatrixFileError, StrandSpec, build_differential, read_matrix, write_matrix
from .rank import DEFAULT_TOLERANCES, MemoryCeilingExceeded, matrix_rank

log = logging.getLogger(__name__)

GB = 1 << 30
DEFAULT_TIERS = (1 * GB, 10 * GB, 100 * GB)
STATES = ("pending", "claimed", "done", "failed")


class QueueError(RuntimeError):
    pass


class MissingResultsError(QueueError):
    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__(f"{len(self.ids)} task(s) without results: {' '.join(self.ids[:20])}"
                         + (" ..." if len(self.ids) > 20 else ""))


# ---------------------------------------------------------------------------
# records


def _write_record(path: Path, fields: dict) -> None:
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text("".join(f"{k} {v}\n" for k, v in fields.items()), encoding="utf-8")
    os.replace(tmp, path)


def _read_record(path: Path) -> dict:
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, val = line.partition(" ")
            out[key] = val
    return out


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split()] if text.strip() else []


@dataclass
class Task:
    id: str
    spec: StrandSpec
    rows: int
    cols: int
    attempts: int = 0
    memory_tier: int = 0
    state: str = "pending"

    def fields(self) -> dict:
        s = self.spec
        return {"id": self.id, "n": s.n, "d": s.d, "b": s.b, "p": s.p, "q": s.q,
                "a": " ".join(map(str, s.a)), "artinian": int(s.artinian),
                "role": f"d{s.p}", "rows": self.rows, "cols": self.cols,
                "attempts": self.attempts, "tier": self.memory_tier}

    @classmethod
    def from_fields(cls, f: dict) -> "Task":
        spec = StrandSpec(int(f["n"]), int(f["d"]), int(f["b"]), int(f["p"]), int(f["q"]),
                          tuple(_ints(f["a"])), bool(int(f.get("artinian", 0))))
        return cls(f["id"], spec, int(f["rows"]), int(f["cols"]),
                   int(f.get("attempts", 0)), int(f.get("tier", 0)))


@dataclass
class Manifest:
    b: int
    d: int
    plan_b: int                     # side actually computed (differs from b under duality)
    tasks: list = field(default_factory=list)
    reductions_applied: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.tasks)

    def largest(self) -> Task | None:
        return max(self.tasks, key=lambda t: (t.rows * t.cols, t.id), default=None)

    def fields(self) -> dict:
        big = self.largest()
        out = {"b": self.b, "d": self.d, "plan_b": self.plan_b, "count": self.count}
        out.update({k: int(v) for k, v in sorted(self.reductions_applied.items())})
        out["largest"] = f"{big.rows} {big.cols}" if big else "0 0"
        out["warnings"] = ";".join(self.warnings) or "-"
        out["tasks"] = " ".join(t.id for t in self.tasks)
        return out


@dataclass
class QueueConfig:
    backend: str = "prime"
    primes: int = 3
    seed: int = 0
    tolerances: tuple = DEFAULT_TOLERANCES
    tiers: tuple = DEFAULT_TIERS
    max_retries: int = 2
    stale_after: float = 3600.0

    def fields(self) -> dict:
        return {"backend": self.backend, "primes": self.primes, "seed": self.seed,
                "tolerances": " ".join(repr(t) for t in self.tolerances),
                "tiers": " ".join(str(int(t)) for t in self.tiers),
                "max_retries": self.max_retries, "stale_after": self.stale_after}

    @classmethod
    def from_fields(cls, f: dict) -> "QueueConfig":
        return cls(f.get("backend", "prime"), int(f.get("primes", 3)), int(f.get("seed", 0)),
                   tuple(float(x) for x in f.get("tolerances", "").split()) or DEFAULT_TOLERANCES,
                   tuple(int(x) for x in f.get("tiers", "").split()) or DEFAULT_TIERS,
                   int(f.get("max_retries", 2)), float(f.get("stale_after", 3600.0)))

    def scaled(self, factor: float) -> "QueueConfig":
        """Same config with every memory tier multiplied by ``factor``."""
        return QueueConfig(self.backend, self.primes, self.seed, self.tolerances,
                           tuple(max(1, int(t * factor)) for t in self.tiers),
                           self.max_retries, self.stale_after)


# ---------------------------------------------------------------------------
# planning


def _tasks_for(b: int, d: int, shortcut: bool, artinian: bool, symmetry: bool) -> tuple[list, list]:
    jobs = strand_jobs(b, d, shortcut=shortcut, artinian=artinian)
    if not symmetry:
        from .betti import _job

        expanded = []
        for job in jobs:
            for a in orbit(job.a):
                expanded.append(_job(b, d, a, job.homology_at, job.positions, artinian))
        jobs = expanded
    tasks = [Task(t.id, t.spec, t.rows, t.cols) for t in unique_tasks(jobs)]
    tasks.sort(key=lambda t: (t.spec.p, tuple(-x for x in t.spec.a), t.id))
    return jobs, tasks


def plan(b: int, d: int, *, symmetry: bool = True, duality: bool = True, hilbert_shortcut: bool = True,
         artinian: bool = False) -> Manifest:
    """Rank tasks for S(b;d), one per distinct matrix.

    With ``duality`` the side (b or its dual b') with fewer tasks is planned
    (ties: smaller total area, then b itself).  If the nonvanishing table
    fails validation the full inventory is planned and a warning recorded.
    """
    warnings = []
    try:
        choices = [b]
        if duality and hilbert_shortcut:
            bd = dual_rule(b, d).b_dual
            if bd != b:
                choices.append(bd)
        best = None
        for side in choices:
            _, tasks = _tasks_for(side, d, hilbert_shortcut, artinian, symmetry)
            key = (len(tasks), sum(t.rows * t.cols for t in tasks), side != b)
            if best is None or key < best[0]:
                best = (key, side, tasks)
        _, side, tasks = best
        shortcut = hilbert_shortcut
    except RangeValidationError as exc:
        warnings.append(f"range validation failed ({exc}); planned the full inventory")
        side, shortcut = b, False
        _, tasks = _tasks_for(b, d, False, artinian, symmetry)
    flags = {"symmetry": symmetry, "duality": side != b, "hilbert_shortcut": shortcut, "artinian": artinian}
    return Manifest(b, d, side, tasks, flags, warnings)


def figure_count(b: int, d: int) -> tuple[int, tuple[int, int]]:
    """Number of middle maps d_{p,a}: C_p -> C_{p-1} over canonical a at the
    adjacent relevant pairs (both spaces nonzero), and the largest as (rows, cols).

    This is the inventory of standard strands before any sharing between
    neighbouring pairs is taken into account.
    """
    from .core import canonical_multidegrees
    from .hilbert import ambiguous_pairs
    from .koszul import differential_shape

    count, big = 0, (0, 0)
    for p, q in ambiguous_pairs(b, d):
        for a in canonical_multidegrees(2, d * (p + q) + b):
            r, c = differential_shape(StrandSpec(2, d, b, p, q, a))
            if r and c:
                count += 1
                if r * c > big[0] * big[1]:
                    big = (r, c)
    return count, big


# ---------------------------------------------------------------------------
# queue directory


class Queue:
    def __init__(self, root):
        self.root = Path(root)
        self.pending = self.root / "pending"
        self.claims = self.root / "claims"
        self.results = self.root / "results"
        self.failed = self.root / "failed"
        self.matrices = self.root / "matrices"
        self.commits = self.root / "commits.log"

    # -- setup -------------------------------------------------------------

    def init(self, manifest: Manifest, config: QueueConfig | None = None, write_matrices: bool = False) -> "Queue":
        for sub in (self.pending, self.claims, self.results, self.failed, self.matrices):
            sub.mkdir(parents=True, exist_ok=True)
        _write_record(self.root / "manifest.txt", manifest.fields())
        _write_record(self.root / "config.txt", (config or QueueConfig()).fields())
        for task in manifest.tasks:
            path = self.pending / f"{task.id}.task"
            if not path.exists():
                _write_record(path, task.fields())
            if write_matrices and not (self.matrices / f"{task.id}.mtx").exists():
                write_matrix(build_differential(task.spec), self.matrices / f"{task.id}.mtx")
        self.commits.touch()
        return self

    def manifest(self) -> dict:
        return _read_record(self.root / "manifest.txt")

    def config(self) -> QueueConfig:
        return QueueConfig.from_fields(_read_record(self.root / "config.txt"))

    def task_ids(self) -> list[str]:
        return sorted(p.stem for p in self.pending.glob("*.task"))

    def load_task(self, tid: str) -> Task:
        return Task.from_fields(_read_record(self.pending / f"{tid}.task"))

    # -- state ---------------------------------------------------------------

    def state(self, tid: str) -> str:
        if (self.results / f"{tid}.res").exists():
            return "done"
        if (self.failed / f"{tid}.fail").exists():
            return "failed"
        if (self.claims / f"{tid}.claim").exists():
            return "claimed"
        return "pending"

    def summary(self) -> dict[str, int]:
        out = {s: 0 for s in STATES}
        for tid in self.task_ids():
            out[self.state(tid)] += 1
        return out

    def result(self, tid: str) -> dict:
        return _read_record(self.results / f"{tid}.res")

    def commit_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        if self.commits.exists():
            for line in self.commits.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    tid = line.split()[0]
                    out[tid] = out.get(tid, 0) + 1
        return out

    # -- claims --------------------------------------------------------------

    def claim(self, tid: str, worker: str) -> bool:
        path = self.claims / f"{tid}.claim"
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644)
        except FileExistsError:
            return False
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(f"worker {worker}\npid {os.getpid()}\nhost {socket.gethostname()}\ntime {time.time()!r}\n")
        return True

    def release(self, tid: str) -> None:
        try:
            os.unlink(self.claims / f"{tid}.claim")
        except FileNotFoundError:
            pass

    def _claim_is_stale(self, path: Path, stale_after: float) -> bool:
        try:
            info = _read_record(path)
        except (FileNotFoundError, UnicodeDecodeError):
            return False
        if not info.get("pid"):
            # being written right now, or truncated by a crash
            try:
                return time.time() - path.stat().st_mtime > max(stale_after, 5.0)
            except FileNotFoundError:
                return False
        if info.get("host") == socket.gethostname():
            try:
                os.kill(int(info["pid"]), 0)
            except ProcessLookupError:
                return True
            except PermissionError:
                pass
        return time.time() - float(info.get("time", "0")) > stale_after

    def recover_stale(self, stale_after: float | None = None) -> list[str]:
        """Remove claims whose owner is gone; returns the recovered task ids."""
        stale_after = self.config().stale_after if stale_after is None else stale_after
        out = []
        for path in sorted(self.claims.glob("*.claim")):
            tid = path.stem
            if (self.results / f"{tid}.res").exists():
                continue
            if self._claim_is_stale(path, stale_after):
                grave = self.claims / f"{tid}.stale.{os.getpid()}.{time.monotonic_ns()}"
                try:
                    os.rename(path, grave)  # only one recoverer wins
                except FileNotFoundError:
                    continue
                os.unlink(grave)
                out.append(tid)
        return out

    # -- results ---------------------------------------------------------------

    def commit(self, tid: str, fields: dict) -> bool:
        """Write the result record once; False if another worker got there first."""
        final = self.results / f"{tid}.res"
        tmp = self.results / f".{tid}.{os.getpid()}.{time.monotonic_ns()}.tmp"
        tmp.write_text("".join(f"{k} {v}\n" for k, v in fields.items()), encoding="utf-8")
        try:
            os.link(tmp, final)
        except FileExistsError:
            return False
        finally:
            os.unlink(tmp)
        with open(self.commits, "a", encoding="utf-8") as fh:
            fh.write(f"{tid} {fields.get('rank')}\n")
        return True

    def fail(self, tid: str, reason: str) -> None:
        _write_record(self.failed / f"{tid}.fail", {"id": tid, "reason": reason.replace("\n", " ")})

    def escalate(self, task: Task) -> None:
        task.attempts += 1
        task.memory_tier += 1
        _write_record(self.pending / f"{task.id}.task", task.fields())

    def resubmit_failed(self) -> list[str]:
        """Move permanently failed tasks back to pending (their tier is kept)."""
        out = []
        for path in sorted(self.failed.glob("*.fail")):
            os.unlink(path)
            self.release(path.stem)
            out.append(path.stem)
        return out


# ---------------------------------------------------------------------------
# workers


@dataclass
class WorkerLimits:
    worker_id: str = ""
    max_tasks: int | None = None
    tiers: tuple | None = None        # overrides the queue's tiers
    stale_after: float | None = None
    chaos: float = 0.0                # probability of dying right after a claim (testing)
    chaos_seed: int | None = None
    poll: bool = False                # keep polling until no pending/claimed tasks remain
    poll_interval: float = 0.2


def run_task(queue: Queue, task: Task, config: QueueConfig, tiers) -> dict:
    """Build (or read) the matrix and rank it under the task's memory tier."""
    ceiling = tiers[min(task.memory_tier, len(tiers) - 1)]
    mpath = queue.matrices / f"{task.id}.mtx"
    m = read_matrix(mpath) if mpath.exists() else build_differential(task.spec)
    if (m.nrows, m.ncols) != (task.rows, task.cols):
        raise MatrixFileError(f"matrix is {m.nrows}x{m.ncols}, task expects {task.rows}x{task.cols}")
    if config.backend == "prime":
        from .rank import random_primes

        res = matrix_rank(m, "prime", primes=random_primes(config.primes, config.seed),
                          seed=config.seed, mem_ceiling=ceiling)
        extra = {"primes": " ".join(map(str, res.primes_used)),
                 "per_trial": " ".join(map(str, res.per_trial))}
    else:
        if m.nnz * 96 > ceiling:
            raise MemoryCeilingExceeded(f"matrix needs more than {ceiling} B")
        res = matrix_rank(m, "float", tolerances=config.tolerances)
        extra = {"tolerances": " ".join(repr(t) for t in res.tolerances_used),
                 "per_trial": " ".join(map(str, res.per_trial))}
    return {"id": task.id, "rank": res.rank, "method": res.method, **extra,
            "agreement": int(res.agreement), "rows": m.nrows, "cols": m.ncols,
            "elapsed_ms": f"{res.elapsed_ms:.3f}", "peak_mem_bytes": res.peak_mem_bytes,
            "tier": task.memory_tier}


def worker_loop(queue_dir, limits: WorkerLimits | None = None) -> dict[str, int]:
    """Claim and run pending tasks until none are left; returns counters."""
    import random

    limits = limits or WorkerLimits()
    queue = Queue(queue_dir)
    config = queue.config()
    tiers = tuple(limits.tiers or config.tiers)
    stale = config.stale_after if limits.stale_after is None else limits.stale_after
    worker = limits.worker_id or f"{socket.gethostname()}:{os.getpid()}"
    rng = random.Random(limits.chaos_seed)
    stats = {"done": 0, "escalated": 0, "failed": 0, "lost_race": 0}
    while True:
        queue.recover_stale(stale)
        progressed = False
        open_ids = []
        for tid in queue.task_ids():
            if limits.max_tasks is not None and stats["done"] >= limits.max_tasks:
                return stats
            st = queue.state(tid)
            if st in ("pending", "claimed"):
                open_ids.append(tid)
            if st != "pending" or not queue.claim(tid, worker):
                continue
            if queue.state(tid) == "done":  # finished between the check and the claim
                queue.release(tid)
                continue
            if limits.chaos and rng.random() < limits.chaos:
                os._exit(17)  # simulated crash while holding the claim
            task = queue.load_task(tid)
            try:
                record = run_task(queue, task, config, tiers)
            except MemoryCeilingExceeded as exc:
                if task.attempts >= config.max_retries:
                    queue.fail(tid, f"memory ceiling at tier {task.memory_tier}: {exc}")
                    stats["failed"] += 1
                else:
                    queue.escalate(task)
                    stats["escalated"] += 1
                    log.info("task %s escalated to tier %d", tid, task.memory_tier)
                queue.release(tid)
                progressed = True
                continue
            except (MatrixFileError, ValueError, OSError) as exc:
                queue.fail(tid, f"{type(exc).__name__}: {exc}")
                stats["failed"] += 1
                queue.release(tid)
                progressed = True
                continue
            if queue.commit(tid, record):
                stats["done"] += 1
            else:
                stats["lost_race"] += 1
            queue.release(tid)
            progressed = True
        if not progressed:
            if not limits.poll or not open_ids:
                return stats
            time.sleep(limits.poll_interval)


def run_workers(queue_dir, workers: int = 1, limits: WorkerLimits | None = None) -> list[int]:
    """Run ``workers`` worker processes to completion; returns their exit codes."""
    import multiprocessing as mp

    limits = limits or WorkerLimits()
    if workers <= 1:
        worker_loop(queue_dir, limits)
        return [0]
    ctx = mp.get_context("spawn")
    procs = []
    for i in range(workers):
        lim = WorkerLimits(f"{limits.worker_id or 'w'}{i}", limits.max_tasks, limits.tiers,
                           limits.stale_after, limits.chaos,
                           None if limits.chaos_seed is None else limits.chaos_seed + i,
                           limits.poll, limits.poll_interval)
        proc = ctx.Process(target=worker_loop, args=(str(queue_dir), lim))
        proc.start()
        procs.append(proc)
    for proc in procs:
        proc.join()
    return [proc.exitcode for proc in procs]


# ---------------------------------------------------------------------------
# aggregation


def aggregate(queue_dir, out_dir=None) -> BettiDatabase:
    """Assemble the Betti database of the requested S(b;d) from the results.

    Raises :class:`MissingResultsError` listing every task without a result.
    When the planned side is the dual module its database is saved as well,
    and the requested side receives totals through duality.  Saving is
    deterministic, so re-aggregating rewrites byte-identical files.
    """
    queue = Queue(queue_dir)
    man = queue.manifest()
    b, d, side = int(man["b"]), int(man["d"]), int(man["plan_b"])
    shortcut = bool(int(man.get("hilbert_shortcut", 1)))
    artinian = bool(int(man.get("artinian", 0)))
    symmetry = bool(int(man.get("symmetry", 1)))
    ids = man.get("tasks", "").split()
    missing = [tid for tid in ids if queue.state(tid) != "done"]
    if missing:
        raise MissingResultsError(missing)
    ranks = {tid: int(queue.result(tid)["rank"]) for tid in ids}
    jobs, _ = _tasks_for(side, d, shortcut, artinian, symmetry)
    db = BettiDatabase(side, d)
    if shortcut:
        fill_from_numerator(db)
    canonical = [job for job in jobs if job.a == tuple(sorted(job.a, reverse=True))]
    for job in canonical:
        record_job(db, job, ranks)
    if not symmetry:
        # permuted copies must reproduce the canonical representative
        from .betti import solve_job

        for job in jobs:
            for p, v in solve_job(job, ranks).items():
                if db.get(p, job.a) != v:
                    raise QueueError(f"symmetry violated at p={p}, a={job.a}")
    mark_complete(db, jobs)
    result = db
    if side != b:
        result = apply_duality(db)
        # multigraded data determined by the numerator are available on both sides
        if shortcut:
            fill_from_numerator(result)
    if out_dir is not None:
        db.save(out_dir)
        if result is not db:
            result.save(out_dir)
    return result
