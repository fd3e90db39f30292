"""Per-iteration run traces and their CSV serialization.

One record per iteration with a fixed column set:

    t,objective,lagrangian,feas_gap,sigma,step_w,step_z,stop_metric,
    dist_w,dist_z,wall_ns

dist_w / dist_z are distances to a planted solution and stay blank when no
planted solution is known.  wall_ns is the cumulative wall time since the
start of the run.  Floats are written with repr (shortest round-trip
form), so parsing an emitted file reproduces the in-memory values exactly.
"""

import csv
from dataclasses import dataclass, field

__all__ = [
    "TraceRecord",
    "RunTrace",
    "StageInfo",
    "write_trace_csv",
    "read_trace_csv",
    "write_summary_csv",
]

TRACE_COLUMNS = (
    "t",
    "objective",
    "lagrangian",
    "feas_gap",
    "sigma",
    "step_w",
    "step_z",
    "stop_metric",
    "dist_w",
    "dist_z",
    "wall_ns",
)

SUMMARY_COLUMNS = (
    "algo",
    "final_obj",
    "final_gap",
    "iters",
    "wall_ns",
    "eta_hat",
    "plateau",
)


@dataclass
class TraceRecord:
    """State of one iteration, evaluated at the new iterate."""

    t: int
    objective: float
    lagrangian: float
    feas_gap: float
    sigma: float
    step_w: float
    step_z: float
    stop_metric: float
    dist_w: float = None
    dist_z: float = None
    wall_ns: int = 0


@dataclass
class StageInfo:
    """Multi-scale stage annotation: which records a stage produced and
    with which effective parameters."""

    index: int
    rho: float
    alpha: float
    beta: float
    first_t: int
    last_t: int


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    stages: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.t <= self.records[-1].t:
            raise ValueError("trace records must be strictly increasing in t")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name):
        """One column across all records as a plain list."""
        if name not in TRACE_COLUMNS:
            raise ValueError(f"unknown trace column {name!r}")
        return [getattr(r, name) for r in self.records]


def _format(value):
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_trace_csv(trace, path, zero_wall=False):
    """Write the trace; zero_wall=True blanks the (nondeterministic) timing
    column so that repeated runs produce byte-identical files."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace:
            row = [_format(getattr(rec, c)) for c in TRACE_COLUMNS]
            if zero_wall:
                row[-1] = "0"
            writer.writerow(row)


def read_trace_csv(path):
    """Parse a trace file back into a RunTrace (records only; stage
    annotations are in-memory metadata and are not serialized)."""
    trace = RunTrace()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(TRACE_COLUMNS):
            raise ValueError(f"unexpected trace header {header!r}")
        for row in reader:
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"malformed trace row {row!r}")
            values = {}
            for name, cell in zip(TRACE_COLUMNS, row):
                if name in ("t", "wall_ns"):
                    values[name] = int(cell)
                elif cell == "":
                    values[name] = None
                else:
                    values[name] = float(cell)
            trace.append(TraceRecord(**values))
    return trace


def write_summary_csv(rows, path):
    """Write one summary row per algorithm; rows are dicts keyed by
    SUMMARY_COLUMNS, with None for fields that do not apply."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            extra = set(row) - set(SUMMARY_COLUMNS)
            if extra:
                raise ValueError(f"unknown summary field(s) {sorted(extra)}")
            out = []
            for name in SUMMARY_COLUMNS:
                value = row.get(name)
                if name == "algo":
                    out.append("" if value is None else str(value))
                else:
                    out.append(_format(value))
            writer.writerow(out)
