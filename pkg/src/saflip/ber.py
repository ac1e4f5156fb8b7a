"""Benefit/equivalence/risk statistics over paired result matrices.

Two algorithms are compared run-against-run within each instance: entry
[i, j] of one matrix is compared with entry [i, k] of the other for all j, k,
and a score difference smaller than the threshold `delta` counts as
equivalence.  All counting is done in exact integers; division happens once
at report time.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


class PairingError(ValueError):
    """The two result matrices do not describe the same paired experiment."""


def _sorted_groups(keys):
    def order(g):
        try:
            return (0, float(g), "")
        except (TypeError, ValueError):
            return (1, 0.0, str(g))

    return sorted(set(keys), key=order)


@dataclass
class ResultMatrix:
    """l x n matrix of performance scores with instance and seed provenance."""

    instance_ids: list
    group_keys: list
    seeds: list
    scores: list
    algorithm_label: str = ""

    def __post_init__(self):
        l = len(self.instance_ids)
        if l < 1:
            raise ValueError("matrix needs at least one instance row")
        if len(self.group_keys) != l or len(self.seeds) != l or len(self.scores) != l:
            raise ValueError("per-instance field lengths disagree")
        n = len(self.scores[0])
        if n < 1:
            raise ValueError("matrix needs at least one run column")
        for row_s, row_y in zip(self.seeds, self.scores):
            if len(row_s) != n or len(row_y) != n:
                raise ValueError("ragged matrix rows")
            for y in row_y:
                if not 0.0 <= y <= 1.0:
                    raise ValueError(f"score {y} outside [0, 1]")

    @property
    def num_instances(self):
        return len(self.instance_ids)

    @property
    def num_runs(self):
        return len(self.scores[0])


def check_paired(a, b):
    """Raise PairingError unless the matrices share instances and seeds."""
    if a.instance_ids != b.instance_ids:
        raise PairingError("instance id lists differ")
    if a.num_runs != b.num_runs:
        raise PairingError(f"run counts differ: {a.num_runs} vs {b.num_runs}")
    if a.seeds != b.seeds:
        raise PairingError("seed matrices differ elementwise")
    if a.group_keys != b.group_keys:
        raise PairingError("instance group keys differ")


@dataclass(frozen=True)
class BerReport:
    delta: float
    b: float
    e: float
    r: float
    comparisons: int
    group: str = "overall"
    b_count: int = 0
    e_count: int = 0
    r_count: int = 0

    def as_dict(self):
        return {
            "group": self.group,
            "delta": self.delta,
            "b": self.b,
            "e": self.e,
            "r": self.r,
            "comparisons": self.comparisons,
        }


def _count_rows(ym_rows, y0_rows, delta):
    """Integer (b, r) counts over all within-row ordered pairs."""
    b_count = 0
    r_count = 0
    for ym_row, y0_row in zip(ym_rows, y0_rows):
        m = np.asarray(ym_row, dtype=float)[:, None]
        z = np.asarray(y0_row, dtype=float)[None, :]
        b_count += int(np.count_nonzero(m < z - delta))
        r_count += int(np.count_nonzero(m > z + delta))
    return b_count, r_count


def _make_report(ym_rows, y0_rows, delta, group):
    b_count, r_count = _count_rows(ym_rows, y0_rows, delta)
    n = len(ym_rows[0])
    total = len(ym_rows) * n * n
    e_count = total - b_count - r_count
    return BerReport(
        delta=delta,
        b=b_count / total,
        e=e_count / total,
        r=r_count / total,
        comparisons=total,
        group=group,
        b_count=b_count,
        e_count=e_count,
        r_count=r_count,
    )


def ber_pairwise(ym, y0, delta, group="overall"):
    """BER over all within-instance ordered run pairs of two paired matrices.

    b counts pairs where the first algorithm's score beats the second's by
    more than delta, r the converse, and e the remainder (so boundary ties
    land in e and the three counts sum to l*n^2 exactly).
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    check_paired(ym, y0)
    return _make_report(ym.scores, y0.scores, delta, group)


def ber_grouped(ym, y0, delta):
    """One BerReport per distinct group key (sorted) plus the overall one."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    check_paired(ym, y0)
    reports = []
    for g in _sorted_groups(ym.group_keys):
        idx = [i for i, k in enumerate(ym.group_keys) if k == g]
        reports.append(
            _make_report(
                [ym.scores[i] for i in idx],
                [y0.scores[i] for i in idx],
                delta,
                str(g),
            )
        )
    reports.append(_make_report(ym.scores, y0.scores, delta, "overall"))
    return reports


@dataclass(frozen=True)
class AggregatedScores:
    """One score per instance, e.g. a per-instance mean over runs."""

    z: tuple
    aggregator_name: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))


def aggregate_matrix(matrix, aggregator=np.mean, name="mean"):
    return AggregatedScores(
        z=tuple(float(aggregator(row)) for row in matrix.scores),
        aggregator_name=name,
    )


def ber_aggregated(zm, z0, delta, group="overall"):
    """BER over per-instance aggregated scores: one elementwise comparison
    per instance instead of the n^2 run pairs."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if len(zm.z) != len(z0.z):
        raise ValueError(f"length mismatch: {len(zm.z)} vs {len(z0.z)}")
    l = len(zm.z)
    b_count = sum(1 for a, b in zip(zm.z, z0.z) if a < b - delta)
    r_count = sum(1 for a, b in zip(zm.z, z0.z) if a > b + delta)
    e_count = l - b_count - r_count
    return BerReport(
        delta=delta,
        b=b_count / l,
        e=e_count / l,
        r=r_count / l,
        comparisons=l,
        group=group,
        b_count=b_count,
        e_count=e_count,
        r_count=r_count,
    )


def success_rate(matrix):
    """Fraction of runs with score exactly 0, per group key plus overall."""
    rates = {}
    for g in _sorted_groups(matrix.group_keys):
        idx = [i for i, k in enumerate(matrix.group_keys) if k == g]
        cells = [y for i in idx for y in matrix.scores[i]]
        rates[str(g)] = sum(1 for y in cells if y == 0.0) / len(cells)
    all_cells = [y for row in matrix.scores for y in row]
    rates["overall"] = sum(1 for y in all_cells if y == 0.0) / len(all_cells)
    return rates


def auroc_identity_check(ym, y0):
    """At delta = 0 the benefit mass is the empirical AUROC mass of strict
    wins, the equivalence mass is exactly the tie mass, and the three masses
    partition all comparisons.  Returns the masses and the exact-count check.
    """
    report = ber_pairwise(ym, y0, 0.0)
    return {
        "auroc_strict_win_mass": report.b,
        "tie_mass": report.e,
        "loss_mass": report.r,
        "counts_sum_exact": report.b_count + report.e_count + report.r_count
        == report.comparisons,
        "comparisons": report.comparisons,
    }


# ---------------------------------------------------------------------------
# Persistence

CSV_COLUMNS = ["instance_id", "group", "seed", "run_index", "algorithm", "y"]


def write_result_csv(matrix, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i, iid in enumerate(matrix.instance_ids):
            for j in range(matrix.num_runs):
                writer.writerow(
                    [
                        iid,
                        matrix.group_keys[i],
                        matrix.seeds[i][j],
                        j,
                        matrix.algorithm_label,
                        repr(matrix.scores[i][j]),
                    ]
                )


def read_result_csv(path):
    rows = {}
    order = []
    label = ""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for rec in reader:
            iid = rec["instance_id"]
            if iid not in rows:
                rows[iid] = {"group": rec["group"], "cells": {}}
                order.append(iid)
            rows[iid]["cells"][int(rec["run_index"])] = (
                int(rec["seed"]),
                float(rec["y"]),
            )
            label = rec["algorithm"]
    instance_ids, group_keys, seeds, scores = [], [], [], []
    for iid in order:
        cells = rows[iid]["cells"]
        group = rows[iid]["group"]
        instance_ids.append(iid)
        group_keys.append(int(group) if group.isdigit() else group)
        seeds.append([cells[j][0] for j in sorted(cells)])
        scores.append([cells[j][1] for j in sorted(cells)])
    return ResultMatrix(
        instance_ids=instance_ids,
        group_keys=group_keys,
        seeds=seeds,
        scores=scores,
        algorithm_label=label,
    )


def matrix_to_json(matrix, metadata=None):
    return {
        "metadata": metadata or {},
        "algorithm": matrix.algorithm_label,
        "instance_ids": list(matrix.instance_ids),
        "groups": list(matrix.group_keys),
        "seeds": [list(r) for r in matrix.seeds],
        "scores": [list(r) for r in matrix.scores],
    }


def matrix_from_json(doc):
    return ResultMatrix(
        instance_ids=list(doc["instance_ids"]),
        group_keys=list(doc["groups"]),
        seeds=[list(r) for r in doc["seeds"]],
        scores=[list(r) for r in doc["scores"]],
        algorithm_label=doc.get("algorithm", ""),
    )


def write_ber_csv(reports, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "delta", "b", "e", "r", "comparisons"])
        for rep in reports:
            writer.writerow(
                [rep.group, rep.delta, rep.b, rep.e, rep.r, rep.comparisons]
            )


def write_ber_json(reports, path):
    with open(path, "w") as fh:
        json.dump([rep.as_dict() for rep in reports], fh, indent=2)
        fh.write("\n")
