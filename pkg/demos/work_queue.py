"""Running the rank computations through the file-based work queue.

The queue is what makes the larger cases feasible: a plan lists one task per
distinct matrix, workers claim tasks atomically, crashed workers leave
claims that are recovered, and aggregation only succeeds once every result is
in.  Here four workers are killed at random while they run the quartic
b=2 case; the rounds continue until every task is committed exactly once.

Run:  python demos/work_queue.py [QUEUE_DIR]
"""

import sys
import tempfile
from pathlib import Path

from veronese_syzygies.betti import format_table
from veronese_syzygies.jobs import Queue, QueueConfig, WorkerLimits, aggregate, plan, run_workers


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="vsyz-queue-"))

    manifest = plan(2, 4)
    big = manifest.largest()
    print(f"planned {manifest.count} tasks for S(2;4) (side b={manifest.plan_b}); "
          f"largest matrix {big.cols}x{big.rows}")
    queue = Queue(root / "queue").init(manifest, QueueConfig(stale_after=5))

    rounds = 0
    while queue.summary()["done"] < manifest.count:
        rounds += 1
        codes = run_workers(queue.root, 4, WorkerLimits(chaos=0.1, chaos_seed=rounds, poll=True, poll_interval=0.05))
        print(f"round {rounds}: worker exit codes {codes}, queue {queue.summary()}")
        queue.recover_stale(stale_after=0)

    counts = queue.commit_counts()
    print(f"every task committed exactly once: {set(counts.values()) == {1}}")
    db = aggregate(queue.root, root / "out")
    print(format_table(db.total_table()))
    print(f"results under {root}")


# workers are separate processes; guard the entry point so they can import this file
if __name__ == "__main__":
    main()
