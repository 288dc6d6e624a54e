"""
Explicit-state emptiness check for finite fair transition systems.

Used as the exact oracle on small finite problems and as the graph search
behind the abstract model in CEGAR.
"""
import itertools
import logging
from collections import deque
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from errors import AutomataError
from fts import Fts, Lasso, constant, evaluate

logger = logging.getLogger(__name__)

Edge = Tuple[object, Hashable]            # (label, destination)
FairLasso = Tuple[List[Hashable], List[object], int]


def _sccs(nodes: Sequence[Hashable], graph: Dict[Hashable, List[Edge]]) -> List[List[Hashable]]:
    """Tarjan, iterative."""
    index: Dict[Hashable, int] = {}
    low: Dict[Hashable, int] = {}
    on_stack = set()
    stack: List[Hashable] = []
    result = []
    counter = itertools.count()

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(graph.get(root, [])))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, edges = work[-1]
            advanced = False
            for _, dst in edges:
                if dst not in index:
                    index[dst] = low[dst] = next(counter)
                    stack.append(dst)
                    on_stack.add(dst)
                    work.append((dst, iter(graph.get(dst, []))))
                    advanced = True
                    break
                if dst in on_stack:
                    low[node] = min(low[node], index[dst])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                result.append(component)
    return result


def _path(graph, start, goal: Callable[[Hashable], bool], allowed) -> Optional[Tuple[List[Hashable], List[object]]]:
    """Shortest path (nodes, labels) from start to a node meeting goal, staying inside allowed."""
    if goal(start):
        return [start], []
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for label, dst in graph.get(node, []):
            if dst in parent or dst not in allowed:
                continue
            parent[dst] = (node, label)
            if goal(dst):
                nodes, labels = [dst], []
                cur = dst
                while parent[cur] is not None:
                    prev, lab = parent[cur]
                    nodes.append(prev)
                    labels.append(lab)
                    cur = prev
                return nodes[::-1], labels[::-1]
            queue.append(dst)
    return None


def find_fair_lasso(
    init: Iterable[Hashable],
    succ: Callable[[Hashable], List[Edge]],
    fair: Sequence[Callable[[Hashable], bool]],
) -> Optional[FairLasso]:
    """
    Search a finite graph for a lasso from an initial node whose loop visits
    every fairness set.

    Returns:
        (nodes, labels, loop_start) with nodes[-1] == nodes[loop_start] and
        len(labels) == len(nodes) - 1, or None when no fair lasso exists
    """
    graph: Dict[Hashable, List[Edge]] = {}
    order: List[Hashable] = []
    parent: Dict[Hashable, Optional[Tuple[Hashable, object]]] = {}
    queue = deque()
    for node in init:
        if node not in parent:
            parent[node] = None
            order.append(node)
            queue.append(node)
    while queue:
        node = queue.popleft()
        graph[node] = list(succ(node))
        for label, dst in graph[node]:
            if dst not in parent:
                parent[dst] = (node, label)
                order.append(dst)
                queue.append(dst)
    logger.debug(f"explicit graph: {len(order)} reachable nodes")

    position = {node: i for i, node in enumerate(order)}
    for component in _sccs(order, graph):
        members = set(component)
        if len(component) == 1:
            only = component[0]
            if not any(dst == only for _, dst in graph.get(only, [])):
                continue
        if not all(any(f(n) for n in component) for f in fair):
            continue

        entry = min(component, key=position.get)
        prefix_nodes, prefix_labels = [entry], []
        cur = entry
        while parent[cur] is not None:
            prev, label = parent[cur]
            prefix_nodes.append(prev)
            prefix_labels.append(label)
            cur = prev
        prefix_nodes.reverse()
        prefix_labels.reverse()

        # First edge guarantees a loop of length at least one.
        label, first = next((lab, dst) for lab, dst in graph[entry] if dst in members)
        cycle_nodes, cycle_labels = [entry, first], [label]
        for f in fair:
            nodes, labels = _path(graph, cycle_nodes[-1], f, members)
            cycle_nodes.extend(nodes[1:])
            cycle_labels.extend(labels)
        nodes, labels = _path(graph, cycle_nodes[-1], lambda n: n == entry, members)
        cycle_nodes.extend(nodes[1:])
        cycle_labels.extend(labels)

        loop_start = len(prefix_nodes) - 1
        return prefix_nodes + cycle_nodes[1:], prefix_labels + cycle_labels, loop_start
    return None


def _values(fts: Fts, var) -> tuple:
    t = var.symbol_type()
    if t.is_bool_type():
        return (False, True)
    if var in fts.domains:
        lo, hi = fts.domains[var]
        return tuple(range(lo, hi + 1))
    raise AutomataError(f"explicit check needs finite domains; {var.symbol_name()} is unbounded")


def _assignments(fts: Fts, variables) -> List[Tuple]:
    return list(itertools.product(*(_values(fts, v) for v in variables)))


def language_empty_explicit(fts: Fts) -> Optional[Lasso]:
    """
    Decide emptiness of a finite FTS by enumeration.

    Returns:
        a fair lasso, or None when the fair language is empty

    Raises:
        AutomataError: a state or input variable has an infinite domain
    """
    states = list(fts.state_vars)
    inputs = list(fts.input_vars)
    primed = [fts.primed[v] for v in states]
    candidates = _assignments(fts, states)
    input_values = _assignments(fts, inputs)
    logger.info(f"🔍 Explicit check over {len(candidates)} candidate states")

    def as_map(values):
        return dict(zip(states, values))

    initial = [s for s in candidates if evaluate(fts.init, as_map(s))]

    def succ(s):
        partial = fts.trans.substitute(
            {v: c for v, c in zip(states, _constants(states, s))}
        ).simplify()
        edges = []
        for i in input_values:
            with_inputs = partial.substitute(
                {v: c for v, c in zip(inputs, _constants(inputs, i))}
            ).simplify() if inputs else partial
            if with_inputs.is_false():
                continue
            for t in candidates:
                if evaluate(with_inputs, dict(zip(primed, t))):
                    edges.append((i, t))
        return edges

    fair = [lambda s, f=f: evaluate(f, as_map(s)) for f in fts.fairness]
    found = find_fair_lasso(initial, succ, fair)
    if found is None:
        logger.info("✅ Fair language empty")
        return None
    nodes, labels, loop_start = found
    return Lasso(
        states=[as_map(n) for n in nodes],
        inputs=[dict(zip(inputs, i)) for i in labels],
        loop_start=loop_start,
    )


def _constants(variables, values):
    return [constant(v, x) for v, x in zip(variables, values)]
