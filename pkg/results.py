"""
Result records printed by the command line tool.
"""

import csv
import io
from typing import Optional

from pydantic import BaseModel, ConfigDict

from exact_counter import ExactCount
from mc_counter import McEstimate
from psi import FeasibilityResult
from scenario import Scenario, dims, render

TOOL_VERSION = "1.0.0"


class ResultRecord(BaseModel):
    """One command's result. Field order is the serialization order."""

    model_config = ConfigDict(extra="forbid")

    tool_version: str = TOOL_VERSION
    command: str
    scenario: str
    s: int
    classification: str
    psi_rows: int
    psi_cols: int
    seed: Optional[int] = None
    verdict: Optional[str] = None
    sigma_ratio: Optional[float] = None
    count: Optional[int] = None
    method: Optional[str] = None
    closed_form: Optional[int] = None
    bezout_bound: Optional[int] = None
    binomial_bound: Optional[int] = None
    mean: Optional[float] = None
    log_mean: Optional[float] = None
    std_error_rel: Optional[float] = None
    sample_std: Optional[float] = None
    n: Optional[int] = None
    nearest_integer: Optional[int] = None
    converged: Optional[bool] = None
    epsilon: Optional[float] = None
    stopping: Optional[str] = None
    all_zero: Optional[bool] = None
    wall_time_seconds: float = 0.0

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def to_csv(self) -> str:
        """Header line plus one row; absent fields are empty cells."""
        row = self.model_dump()
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow({k: "" if v is None else v for k, v in row.items()})
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"📡 {self.scenario}  ({self.command})"]
        lines.append(
            f"   s = {self.s} ({self.classification}), Psi is {self.psi_rows} x {self.psi_cols}"
        )
        if self.verdict is not None:
            mark = "✅" if self.verdict == "feasible" else "⛔"
            extra = f", sigma_min/sigma_max = {self.sigma_ratio:.3e}" if self.sigma_ratio is not None else ""
            lines.append(f"{mark} {self.verdict}{extra}")
        if self.count is not None:
            lines.append(f"🔢 {self.count} solutions ({self.method})")
            if self.closed_form is not None:
                lines.append(f"   closed form: {self.closed_form}")
        if self.bezout_bound is not None:
            lines.append(f"   Bezout bound: {self.bezout_bound}, binomial bound: {self.binomial_bound}")
        if self.mean is not None:
            lines.append(
                f"🎲 {self.mean:.6g} solutions ({self.method}), "
                f"relative standard error {100 * self.std_error_rel:.2f}% after {self.n} samples"
            )
            if self.nearest_integer is not None:
                lines.append(f"   nearest integer: {self.nearest_integer}")
            if not self.converged:
                lines.append(f"⚠️  not converged to epsilon = {self.epsilon}")
        if self.seed is not None:
            lines.append(f"   seed: {self.seed}")
        lines.append(f"   {self.wall_time_seconds:.3f}s, version {self.tool_version}")
        return "\n".join(lines)

    def render(self, fmt: str) -> str:
        return {"json": self.to_json, "csv": self.to_csv, "text": self.to_text}[fmt]()


def base_record(command: str, sc: Scenario, **fields) -> ResultRecord:
    sd = dims(sc)
    return ResultRecord(
        command=command,
        scenario=render(sc),
        s=sd.s,
        classification=sd.classification,
        psi_rows=sd.psi_rows,
        psi_cols=sd.psi_cols,
        **fields,
    )


def feasibility_fields(result: FeasibilityResult) -> dict:
    return {"verdict": result.verdict.value, "sigma_ratio": result.sigma_ratio}


def exact_fields(count: ExactCount, closed_form: Optional[ExactCount] = None) -> dict:
    return {
        "count": count.value,
        "method": count.method.value,
        "closed_form": closed_form.value if closed_form is not None else None,
    }


def estimate_fields(est: McEstimate) -> dict:
    """MC fields; an all-zero run is reported as infeasible."""
    return {
        "method": est.method,
        "mean": est.mean,
        "log_mean": est.log_mean if est.mean > 0 else None,
        "std_error_rel": est.std_error_rel,
        "sample_std": est.sample_std,
        "n": est.n,
        "nearest_integer": est.nearest_integer,
        "converged": est.converged,
        "epsilon": est.epsilon,
        "stopping": est.stopping,
        "all_zero": est.all_zero,
        "verdict": "infeasible" if est.all_zero else None,
    }
