from __future__ import annotations

from typing import TYPE_CHECKING

from ..fluents import render

if TYPE_CHECKING:
    from ..base_belief import BeliefState


def summarize_belief(belief: "BeliefState", max_factors: int = 50) -> str:
    """Produce a human-readable summary of a belief's factoring.

    Pure utility (no side effects), suitable for testing.
    """
    stats = belief.stats()
    lines: list[str] = []
    lines.append("=== BELIEF ===")
    lines.append(
        f"Representation: {stats.representation.value} | variables: {stats.n_variables} | "
        f"factors: {stats.n_factors} | stored fluents: {stats.n_complex_fluents}"
    )

    factors = belief.factors()
    if not factors:
        return "\n".join(lines + ["No factors yet (nothing observed)."])

    for factor in factors[:max_factors]:
        names = ", ".join(str(v) for v in factor.variables)
        lines.append(f"- factor {factor.id}: [{names}] ({factor.size} entries)")
    if len(factors) > max_factors:
        lines.append(f"... {len(factors) - max_factors} more factors")

    for item in belief.complex_fluents():
        lines.append(f"* stored: {render(item.fluent)} p={item.p:g}")

    return "\n".join(lines)
