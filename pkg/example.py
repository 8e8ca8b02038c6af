#!/usr/bin/env python3
"""
Example script showing how to count IA solutions programmatically.
"""

from exact_counter import closed_form_count, count_single_beam
from mc_counter import estimate_square
from psi import feasibility_test
from scenario import dims, load_catalog


def main():
    """Walk through the reference scenarios."""

    print("📚 Loading reference scenarios...")
    catalog = load_catalog("sample_scenarios.json")
    print(f"✓ Loaded {len(catalog)} scenario(s)\n")

    print("=" * 60)
    print("🔢 EXACT COUNTS (single-beam)")
    print("=" * 60)
    for entry in catalog:
        sc = entry.scenario
        if entry.group != "single-beam" or sc.K > 6:
            continue
        result = count_single_beam(sc, strategy="dp")
        closed = closed_form_count(sc)
        note = f", closed form {closed.value}" if closed else ""
        print(f"  {entry.text:<12} {result.value:>8}  (reference {entry.count}{note})")

    print("\n" + "=" * 60)
    print("🧪 FEASIBILITY")
    print("=" * 60)
    for text in ["(3x3,2)^2", "(4x4,2)^3", "(5x5,2)^4"]:
        entry = next(e for e in catalog if e.text == text)
        result = feasibility_test(entry.scenario, seed=1, draws=3)
        print(f"  {text:<12} s = {dims(entry.scenario).s:>3}  {result.verdict.value}")

    print("\n" + "=" * 60)
    print("🎲 MONTE CARLO (square symmetric)")
    print("=" * 60)
    for text in ["(2x2,1)^3", "(4x4,2)^3"]:
        entry = next(e for e in catalog if e.text == text)
        est = estimate_square(entry.scenario, epsilon=0.02, seed=7, max_samples=200_000)
        print(
            f"  {text:<12} ≈ {est.mean:.3f} ± {100 * est.relative_error_bound:.1f}% "
            f"after {est.n} samples (reference {entry.count})"
        )


if __name__ == "__main__":
    main()
