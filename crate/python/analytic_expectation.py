"""Expected Success-Rate gain of full-reset (one trigger per game) against a
synthetic rogue accuser whose corrupted turns are always fatal.

Replays the scripted accuser/intel pair on each test spec of a deduction
manifest to get the number k of accuser turns in a clean game. A clean
success survives a run with probability q = (1 - eps)^k; a perfect monitor
catches the first corruption and the re-run succeeds with probability q, so
the expected gain per game is q(1 - q).

usage: python analytic_expectation.py MANIFEST.json [EPSILON]
"""

import json
import sys


def replay(spec):
    schema = spec["schema"]
    names = [a["name"] for a in schema]
    values = [a["values"] for a in schema]
    suspects = spec["suspects"]
    n = len(suspects)
    culprit = spec["culprit_id"] - 1
    limit = spec["turn_limit"]

    def val(s, a):
        return values[a].index(suspects[s]["attributes"][names[a]])

    cand = set(range(n))
    known = [set() for _ in range(n)]
    broadcast = set()
    lists = []
    turn, k = 1, 0
    while turn <= limit:
        k += 1
        confirmed = [s for s in sorted(cand) if len(known[s]) == len(names)]
        if len(cand) == 1 or confirmed:
            target = min(cand) if len(cand) == 1 else confirmed[0]
            return ("success" if target == culprit else "wrong"), k
        if not cand or len(broadcast) < len(names):
            query = None
        else:
            target = min(cand)
            attr = next(a for a in range(len(names)) if a not in known[target])
            query = (target, attr, val(culprit, attr))
        turn += 1
        if turn > limit:
            break
        if query is not None:
            target, attr, v = query
            if val(target, attr) == v:
                known[target].add(attr)
            else:
                cand.discard(target)
        else:
            cells = {}
            for s in range(n):
                cells.setdefault(tuple(s in l for l in lists), []).append(s)
            pool = [a for a in range(len(names)) if a not in broadcast] or list(range(len(names)))
            best = None
            for a in pool:
                for v in range(len(values[a])):
                    score = 0
                    for cell in cells.values():
                        x = sum(1 for s in cell if val(s, a) == v)
                        score += x * x + (len(cell) - x) ** 2
                    if best is None or score < best[0]:
                        best = (score, a, v)
            _, a, v = best
            listed = {s for s in range(n) if val(s, a) == v}
            lists.append(listed)
            broadcast.add(a)
            if val(culprit, a) == v:
                cand &= listed
                for s in listed:
                    known[s].add(a)
            else:
                cand -= listed
                if len(values[a]) == 2:
                    for s in set(range(n)) - listed:
                        known[s].add(a)
        turn += 1
    return "timeout", k


def expected_gain(specs, eps):
    total = 0.0
    for spec in specs:
        outcome, k = replay(spec)
        if outcome == "success":
            q = (1.0 - eps) ** k
            total += q * (1.0 - q)
    return total / len(specs)


def main():
    manifest = json.load(open(sys.argv[1]))
    eps = float(sys.argv[2]) if len(sys.argv) > 2 else 0.3
    specs = manifest["test"]
    print(f"{100.0 * expected_gain(specs, eps):.7f}")


if __name__ == "__main__":
    main()
