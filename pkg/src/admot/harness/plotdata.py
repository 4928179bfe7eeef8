"""CSV plot data for the multi-round experiments.

Schemas (one header row, then data; floats as ``repr``):

``slots``     round, baseline, x<stability>...    slots used per round; the
              baseline is the ``n`` slots of probing every channel alone
``error``     round, x<stability>...              relative error per round
``overhead``  stability, avg_slots, baseline, saving
              (average over rounds after the first; ``saving = 1 - avg/n``)
``gains``     index, abs_re_H, abs_re_H_star      one round of one run
``rounds``    round, m, cumulative_slots, relative_error, iterations,
              residual_re, residual_im, next_m, failed
``adaptation`` round, m, step, holdout, prefix, statistic, upper, verdict,
              next_m
"""

import csv

__all__ = ["KINDS", "emit_plot_data"]

KINDS = ("slots", "error", "overhead", "gains", "rounds", "adaptation")


def _f(v):
    return repr(float(v))


def _col(x):
    return f"x{x:g}"


def _by_round(logs, value):
    logs = sorted(logs, key=lambda lg: lg.stability)
    rounds = sorted({r.round for lg in logs for r in lg.records})
    table = {lg.stability: {r.round: value(r) for r in lg.records} for lg in logs}
    return logs, rounds, table


def _slots(logs, wr):
    logs, rounds, table = _by_round(logs, lambda r: r.m)
    n = logs[0].n if logs else None
    wr.writerow(["round", "baseline"] + [_col(lg.stability) for lg in logs])
    for r in rounds:
        wr.writerow([r, n] + [table[lg.stability].get(r, "") for lg in logs])


def _error(logs, wr):
    logs, rounds, table = _by_round(logs, lambda r: _f(r.relative_error))
    wr.writerow(["round"] + [_col(lg.stability) for lg in logs])
    for r in rounds:
        wr.writerow([r] + [table[lg.stability].get(r, "") for lg in logs])


def _overhead(logs, wr):
    wr.writerow(["stability", "avg_slots", "baseline", "saving"])
    for lg in sorted(logs, key=lambda lg: lg.stability):
        if not lg.records:
            continue
        avg = lg.average_slots(skip_first=len(lg.records) > 1)
        wr.writerow([_f(lg.stability), _f(avg), lg.n, _f(1.0 - avg / lg.n)])


def _gains(logs, wr, round=None, indices=None):
    wr.writerow(["index", "abs_re_H", "abs_re_H_star"])
    if not logs or not logs[0].records:
        return
    lg = logs[0]
    pos = len(lg.records) - 1 if round is None else round - 1
    H, Hs = lg.states[pos], lg.estimates[pos]
    first, last = (1, lg.n) if indices is None else indices
    for i in range(first, last + 1):
        wr.writerow([i, _f(abs(H[i - 1].real)), _f(abs(Hs[i - 1].real))])


def _rounds(logs, wr):
    wr.writerow(["round", "m", "cumulative_slots", "relative_error", "iterations",
                 "residual_re", "residual_im", "next_m", "failed"])
    for lg in logs[:1]:
        for r in lg.records:
            wr.writerow([r.round, r.m, r.cumulative_slots, _f(r.relative_error),
                         r.iterations, _f(r.residual_re), _f(r.residual_im),
                         r.next_m, int(r.failed)])


def _adaptation(logs, wr):
    wr.writerow(["round", "m", "step", "holdout", "prefix", "statistic", "upper",
                 "verdict", "next_m"])
    for lg in logs[:1]:
        for r in lg.records:
            for j, s in enumerate(r.steps, start=1):
                wr.writerow([r.round, r.m, j, s.holdout, s.prefix, _f(s.statistic),
                             _f(s.upper), s.verdict.value, r.next_m])


_WRITERS = {"slots": _slots, "error": _error, "overhead": _overhead,
            "gains": _gains, "rounds": _rounds, "adaptation": _adaptation}


def emit_plot_data(logs, kind, path, **options):
    """Write one CSV of ``kind`` from a list of :class:`RoundLog`.

    ``rounds``, ``adaptation`` and ``gains`` use the first log only;
    ``gains`` accepts ``round`` (1-based, default last) and ``indices``
    (inclusive 1-based ``(first, last)``).  An empty list gives a
    header-only file.
    """
    if kind not in _WRITERS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    logs = list(logs)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        _WRITERS[kind](logs, wr, **options)
    return path
