"""Text configuration format for prior specifications.

The format is line-oriented ``key = value``.  ``#`` starts a comment and
blank lines are ignored.  Recognised keys:

* ``base`` -- optional; one of the named priors (``wide_open``, ``prior1``,
  ``prior2``, ``prior3``) used as the starting point for unlisted entries.
  Without ``base`` every one of the 13 entries must be present.
* the 13 prior entries: ``alpha``, ``beta_0``, ``beta_1``, ``gamma_0``,
  ``gamma_1`` and ``delta_slv`` with three index digits, e.g. ``delta_010``
  for the prior on ``q[s=0][l=1][v=0]``.

Each entry value is either a pseudo-count pair ``a0 a1`` or the shorthand
``mean=M total=T``::

    base = wide_open
    alpha = 1 199
    delta_000 = mean=0.1 total=200
"""

from __future__ import annotations

from .model import BetaParams, PriorSpec, make_beta, named_prior, NAMED_PRIORS

__all__ = ["prior_to_text", "parse_prior_text", "PRIOR_KEYS"]

PRIOR_KEYS = (
    "alpha",
    "beta_0", "beta_1",
    "gamma_0", "gamma_1",
    "delta_000", "delta_001", "delta_010", "delta_011",
    "delta_100", "delta_101", "delta_110", "delta_111",
)


def prior_to_text(prior: PriorSpec) -> str:
    """Serialise all 13 entries as lossless ``a0 a1`` pseudo-count pairs."""
    lines = ["# prior specification: 13 Beta entries as 'a0 a1' pseudo-count pairs"]
    for key, entry in zip(PRIOR_KEYS, prior.flat()):
        lines.append(f"{key} = {entry.a0!r} {entry.a1!r}")
    return "\n".join(lines) + "\n"


def _parse_entry(key: str, value: str) -> BetaParams:
    tokens = value.replace(",", " ").split()
    if any("=" in t for t in tokens):
        fields = dict(t.split("=", 1) for t in tokens)
        extra = set(fields) - {"mean", "total"}
        if extra or set(fields) != {"mean", "total"}:
            raise ValueError(f"{key}: shorthand needs exactly mean=... total=..., got {value!r}")
        return make_beta(float(fields["mean"]), float(fields["total"]))
    if len(tokens) != 2:
        raise ValueError(f"{key}: expected 'a0 a1' or 'mean=M total=T', got {value!r}")
    return BetaParams(float(tokens[0]), float(tokens[1]))


def parse_prior_text(text: str) -> PriorSpec:
    """Parse the key-value prior format back into a `PriorSpec`."""
    entries: dict[str, BetaParams] = {}
    base: PriorSpec | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "base":
            if value not in NAMED_PRIORS:
                raise ValueError(f"line {lineno}: unknown base prior {value!r}")
            base = named_prior(value)
        elif key in PRIOR_KEYS:
            entries[key] = _parse_entry(key, value)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")

    if base is None:
        missing = [k for k in PRIOR_KEYS if k not in entries]
        if missing:
            raise ValueError(f"missing prior entries (and no 'base' given): {missing}")
        flat = [entries[k] for k in PRIOR_KEYS]
    else:
        flat = [entries.get(k, e) for k, e in zip(PRIOR_KEYS, base.flat())]
    return PriorSpec.from_flat(flat)
