"""Small builders shared by the test modules."""

from __future__ import annotations

from chronocanvas.graph import Composition, FlowEdge, Module


def build(edges, nodes=(), comp_id="c", estimate=60.0, **kw) -> Composition:
    """Composition from an edge list; every module gets the same metadata."""
    comp = Composition(comp_id)
    for node in list(nodes) + [x for e in edges for x in e]:
        if node not in comp:
            comp.add(Module(node, author_estimate=estimate, **kw))
    for a, b in edges:
        comp.add_flow(FlowEdge(a, b))
    return comp


def contaminated_fixture(rng):
    """A genuine cluster plus bounces and left-open sessions, each at most 10%.

    Returns ``(values, (cluster_min, cluster_max))``.
    """
    centre = rng.uniform(60, 1800)
    n = rng.randint(10, 200)
    n_bounce = rng.randint(0, n // 10)
    n_open = rng.randint(0, n // 10)
    cluster = [rng.uniform(0.8 * centre, 1.2 * centre) for _ in range(n - n_bounce - n_open)]
    bounces = [rng.uniform(0.5, 5) for _ in range(n_bounce)]
    opened = [rng.uniform(86_400, 4 * 86_400) for _ in range(n_open)]
    values = cluster + bounces + opened
    rng.shuffle(values)
    return values, (min(cluster), max(cluster))
