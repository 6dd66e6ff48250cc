"""Brute-force reference implementations, deliberately naive and package-free."""

from __future__ import annotations

import itertools
import random
from collections import Counter


def random_dag(rng: random.Random, max_nodes: int = 10, max_edges: int = 20):
    """Node names and an edge list that is acyclic by construction (i < j)."""
    n = rng.randint(1, max_nodes)
    nodes = [f"v{i}" for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    k = rng.randint(0, min(max_edges, len(pairs)))
    chosen = rng.sample(pairs, k)
    perm = nodes[:]
    rng.shuffle(perm)  # so names do not reveal the order
    return perm, [(perm[i], perm[j]) for i, j in chosen]


def dfs_reach(edges, start):
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    seen, stack = set(), [start]
    while stack:
        for nxt in adj.get(stack.pop(), []):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def reverse_reach(edges, target):
    return dfs_reach([(b, a) for a, b in edges], target)


def between_oracle(edges, lo, hi):
    return dfs_reach(edges, lo) & reverse_reach(edges, hi)


def all_paths(nodes, edges):
    """Every source-to-sink path, by exhaustive recursion."""
    out_deg = Counter(a for a, _ in edges)
    in_deg = Counter(b for _, b in edges)
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    paths = []

    def go(node, trail):
        if not out_deg[node]:
            paths.append(trail)
            return
        for nxt in adj[node]:
            go(nxt, trail + [nxt])

    for node in nodes:
        if not in_deg[node]:
            go(node, [node])
    return paths


def longest_path_rank(nodes, edges):
    """Rank = number of edges on the longest path ending at the node."""
    ranks = {}
    for node in nodes:
        ranks[node] = max((len(p) - 1 for p in _paths_into(node, edges)), default=0)
    return ranks


def _paths_into(node, edges):
    preds = [a for a, b in edges if b == node]
    if not preds:
        return [[node]]
    return [p + [node] for a in preds for p in _paths_into(a, edges)]


def plurality_oracle(options, choices):
    counts = {o: sum(1 for c in choices if c == o) for o in options}
    best = max(counts.values())
    return sorted(o for o in options if counts[o] == best)[0]


def pairwise_matrix(options, rankings):
    """m[x][y]: voters who list x, and list it ahead of y or do not list y."""
    m = {x: {y: 0 for y in options} for x in options}
    for r in rankings:
        for x in options:
            for y in options:
                if x == y or x not in r:
                    continue
                if y not in r or r.index(x) < r.index(y):
                    m[x][y] += 1
    return m


def condorcet_winner_oracle(options, rankings):
    """The option beating every other in pairwise majority, or None."""
    m = pairwise_matrix(options, rankings)
    for x in options:
        if all(m[x][y] > m[y][x] for y in options if y != x):
            return x
    return None


def copeland_oracle(options, rankings):
    m = pairwise_matrix(options, rankings)
    wins = {x: sum(m[x][y] > m[y][x] for y in options if y != x) for x in options}
    best = max(wins.values())
    return sorted(x for x in options if wins[x] == best)[0]


def random_profile(rng: random.Random, max_options: int = 4, max_voters: int = 5):
    options = [chr(ord("A") + i) for i in range(rng.randint(1, max_options))]
    rankings = []
    for _ in range(rng.randint(1, max_voters)):
        perm = options[:]
        rng.shuffle(perm)
        rankings.append(perm[: rng.randint(1, len(perm))])
    return options, rankings


def is_cycle_profile(options, rankings):
    """True when no option beats all others pairwise."""
    return condorcet_winner_oracle(options, rankings) is None


def orders(options):
    return [list(p) for p in itertools.permutations(options)]
