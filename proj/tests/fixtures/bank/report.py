"""Plain-text statements assembled from storage and the ledger."""

import storage
from account import LEDGER


def statement(names):
    lines = []
    for name in sorted(names):
        balance = storage.load(name)
        lines.append("{:<10} {:>8}".format(name, balance))
    return "\n".join(lines)


def deposit_volume():
    total = 0
    for event in LEDGER.filtered("deposit"):
        total += event["amount"]
    return total


def busiest_account(names):
    best = None
    best_count = -1
    for name in names:
        count = len([e for e in LEDGER.events if e["name"] == name])
        if count > best_count:
            best = name
            best_count = count
    return best
