"""
Interference-network scenarios: parsing, validation and derived dimensions.

A scenario is written the way the literature writes it, one factor per user
``(MxN,d)`` with ``M`` transmit antennas, ``N`` receive antennas and ``d``
streams, optionally raised to a power for repeated users::

    (2x2,1)^3
    (2x3,1)(3x2,1)(2x4,1)(2x2,1)
    (5x5,2)^2 (4x6,2)^2
"""

import json
import os
from dataclasses import dataclass, field
from typing import List, Tuple

from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput, VisitError


GRAMMAR = r"""
    start: factor+
    factor: "(" INT _TIMES INT "," INT ")" power?
    power: "^" INT

    _TIMES: "x"i

    %import common.INT
    %import common.WS
    %ignore WS
"""

_PARSER = Lark(GRAMMAR, parser="lalr")


class ScenarioError(ValueError):
    """Scenario text that does not parse, or a scenario violating the
    necessary feasibility bounds."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class HypothesisError(ValueError):
    """A valid scenario that falls outside an operation's hypotheses."""


@dataclass(frozen=True)
class User:
    """One transmitter/receiver pair."""
    M: int  # transmit antennas (precoder side)
    N: int  # receive antennas (decoder side)
    d: int  # streams


@dataclass(frozen=True)
class Scenario:
    """
    A K-user MIMO interference channel.

    ``links`` is the interference set: ordered pairs (k, l), k != l, with
    receiver k and transmitter l (0-based). Only the fully connected set is
    supported, but it is kept explicit.
    """
    users: Tuple[User, ...]
    links: Tuple[Tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        users = tuple(self.users)
        object.__setattr__(self, "users", users)
        full = tuple((k, l) for k in range(len(users)) for l in range(len(users)) if k != l)
        if not self.links:
            object.__setattr__(self, "links", full)
        elif tuple(self.links) != full:
            raise ScenarioError("only fully connected interference sets are supported")
        _validate(self)

    @property
    def K(self) -> int:
        return len(self.users)

    @property
    def is_single_beam(self) -> bool:
        return all(u.d == 1 for u in self.users)

    @property
    def is_square_symmetric(self) -> bool:
        first = self.users[0]
        return first.M == first.N and all(u == first for u in self.users)

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class ScenarioDims:
    """Counts derived from a scenario."""
    s: int
    psi_rows: int
    psi_cols: int
    is_square_symmetric: bool

    @property
    def classification(self) -> str:
        if self.s < 0:
            return "improper"
        return "tight" if self.s == 0 else "slack"


def _validate(sc: Scenario) -> None:
    if sc.K < 2:
        raise ScenarioError(f"a scenario needs at least 2 users, got {sc.K}")

    for k, u in enumerate(sc.users, 1):
        if min(u.M, u.N, u.d) < 1:
            raise ScenarioError(f"user {k}: antenna and stream counts must be >= 1, got {_factor(u)}")
        if u.d > u.N or u.d > u.M:
            raise ScenarioError(
                f"user {k}: streams exceed antennas in {_factor(u)} (need d <= N and d <= M)"
            )

    for k, l in sc.links:
        rx, tx = sc.users[k], sc.users[l]
        if rx.d + tx.d >= rx.N + tx.M:
            raise ScenarioError(
                f"link ({k + 1},{l + 1}): d_k + d_l = {rx.d + tx.d} must be below "
                f"N_k + M_l = {rx.N + tx.M}"
            )


class _ScenarioTransformer(Transformer):
    def start(self, factors: List[List[User]]) -> List[User]:
        return [user for group in factors for user in group]

    def factor(self, items) -> List[User]:
        m, n, d = (int(tok) for tok in items[:3])
        repeat = items[3] if len(items) > 3 else 1
        if repeat < 1:
            raise ScenarioError(f"power must be >= 1, got ^{repeat}", offset=None)
        return [User(M=m, N=n, d=d)] * repeat

    def power(self, items) -> int:
        return int(items[0])


def _byte_offset(text: str, err: UnexpectedInput) -> int:
    pos = getattr(err, "pos_in_stream", None)
    token = getattr(err, "token", None)
    if token is not None and token.type == "$END":
        pos = len(text)
    if pos is None or pos < 0:
        pos = len(text)
    return len(text[:pos].encode("utf-8"))


def parse_scenario(text: str) -> Scenario:
    """
    Parse scenario text into a validated ``Scenario``.

    Raises:
        ScenarioError: syntax errors (with ``offset``, a byte offset into
            ``text``) and violations of the per-user and per-link bounds.
    """
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as e:
        offset = _byte_offset(text, e)
        raise ScenarioError(f"syntax error at byte {offset} in {text!r}", offset=offset) from None

    try:
        users = _ScenarioTransformer().transform(tree)
    except VisitError as e:
        raise e.orig_exc from None

    return Scenario(users=tuple(users))


def _factor(u: User) -> str:
    return f"({u.M}x{u.N},{u.d})"


def render(sc: Scenario) -> str:
    """Canonical text: power form when every user is identical."""
    first = sc.users[0]
    if all(u == first for u in sc.users):
        return f"{_factor(first)}^{sc.K}"
    return "".join(_factor(u) for u in sc.users)


def dims(sc: Scenario) -> ScenarioDims:
    """Properness surplus ``s`` and the shape of the Psi matrix."""
    psi_rows = sum(sc.users[k].d * sc.users[l].d for k, l in sc.links)
    psi_cols = sum((u.M + u.N - 2 * u.d) * u.d for u in sc.users)
    return ScenarioDims(
        s=psi_cols - psi_rows,
        psi_rows=psi_rows,
        psi_cols=psi_cols,
        is_square_symmetric=sc.is_square_symmetric,
    )


def require_tight(sc: Scenario, what: str) -> ScenarioDims:
    """Return the dims of ``sc``, raising ``HypothesisError`` unless s == 0."""
    dm = dims(sc)
    if dm.s != 0:
        raise HypothesisError(f"{what} needs a tight scenario (s = 0); {render(sc)} has s = {dm.s}")
    return dm


@dataclass(frozen=True)
class CatalogEntry:
    """A published scenario with its reference solution count."""
    text: str
    group: str
    count: int
    exact: bool

    @property
    def scenario(self) -> Scenario:
        return parse_scenario(self.text)


def load_catalog(json_file: str) -> List[CatalogEntry]:
    """
    Load reference scenarios from a JSON file.

    JSON format:
    [
        {"scenario": "(2x2,1)^3", "group": "square", "count": 2, "exact": true},
        ...
    ]

    ``exact`` is false for counts that are only known approximately.
    """
    if not os.path.exists(json_file):
        raise FileNotFoundError(f"Scenario file not found: {json_file}")

    with open(json_file, "r", encoding="utf-8") as f:
        entries = json.load(f)

    return [
        CatalogEntry(
            text=entry["scenario"],
            group=entry["group"],
            count=int(entry["count"]),
            exact=bool(entry.get("exact", True)),
        )
        for entry in entries
    ]
