#!/usr/bin/env python3
"""Spreadsheet-style recomputation of a cost report input: one row per day, fee = sum(count * gas) * price."""

import json
import random
import sys
from fractions import Fraction
from pathlib import Path

GAS = {"SetRate": 51456, "GetRate": 42689, "GiveRightToRate": 47800, "CreateProduct": 53000}


def make_input(days, seed):
    rng = random.Random(seed)
    return {
        "counts": {name: [rng.randint(0, 400) for _ in range(days)] for name in GAS},
        "gas_price_wei": [str(rng.choice([1, 1000000000, 2000000000, 20000000000, rng.randint(1, 10**11)]))
                          for _ in range(days)],
        "ether_price": [round(rng.uniform(150, 4000), 2) for _ in range(days)],
    }


def recompute(inp):
    rows = []
    for d, price in enumerate(inp["gas_price_wei"]):
        gas = sum(inp["counts"][name][d] * GAS[name] for name in GAS)
        fee = gas * int(price)
        rows.append({"day": d + 1, "gas": gas, "fee_wei": str(fee),
                     "fee_currency": float(Fraction(fee, 10**18) * Fraction(inp["ether_price"][d]))})
    total_wei = sum(int(r["fee_wei"]) for r in rows)
    return {"days": rows, "total_gas": sum(r["gas"] for r in rows), "total_wei": str(total_wei),
            "total_currency": sum(r["fee_currency"] for r in rows)}


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests/fixtures"
    inp = make_input(16, 2024)
    (out_dir / "cost_16day.json").write_text(json.dumps(inp, indent=2) + "\n")
    (out_dir / "cost_16day.expected.json").write_text(json.dumps(recompute(inp), indent=2) + "\n")


if __name__ == "__main__":
    main()
