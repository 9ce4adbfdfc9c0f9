"""Classical distinguishing experiments against the hard distribution.

Trees here run over kN variables in block-major layout: global variable
(j-1)*N + i is coordinate i of z^(j). The advantage of a tree F is
E[F(uniform)] - E[F(D_{U,k})]; theory-bound evaluators give the shapes
the advantage is compared against, with unspecified big-O constants
pinned to 1 (reported, never asserted; only the 10x sanity envelope is
a hard test).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import sample_duk_batch, sample_uniform_batch
from .dtree import DecisionTree, Node, TreeMixture, random_tree
from .ortho import OrthogonalMatrix
from .rorrelation import classify_value, phi_batch, Label
from .util import derive_rng, sub_seed

__all__ = [
    "AdvantageReport",
    "MisclassificationReport",
    "global_index",
    "evaluate_batch",
    "advantage",
    "thm_main_bound",
    "conjectured_bound",
    "lower_bound_depth",
    "misclassification_rate",
    "cross_block_parity_tree",
    "within_block_parity_tree",
    "dictator_tree",
    "greedy_pair_tree",
    "standard_corpus",
]


def global_index(block: int, coord: int, n: int) -> int:
    """1-based global variable for coordinate `coord` of block `block`."""
    if block < 1 or coord < 1 or coord > n:
        raise ValueError("bad block/coordinate")
    return (block - 1) * n + coord


def evaluate_batch(tree: DecisionTree | TreeMixture, batch: np.ndarray) -> np.ndarray:
    """Tree outputs over a (m, vars) +-1 batch; mixtures give expectations."""
    if isinstance(tree, TreeMixture):
        out = np.zeros(batch.shape[0])
        for weight, component in tree.components:
            out += weight * evaluate_batch(component, batch)
        return out
    if batch.shape[1] != tree.n:
        raise ValueError(f"batch has {batch.shape[1]} variables, tree wants {tree.n}")
    out = np.empty(batch.shape[0])
    nodes = tree.nodes
    for row in range(batch.shape[0]):
        x = batch[row]
        node = nodes[tree.root]
        while not node.is_leaf:
            node = nodes[node.child_plus if x[node.query_var - 1] == 1 else node.child_minus]
        out[row] = node.output
    return out


@dataclass(frozen=True)
class AdvantageReport:
    tree_id: str
    estimate: float  # E[F(uniform)] - E[F(D_{U,k})]
    stderr: float
    theory_bound: float
    d: int
    k: int
    n: int
    samples: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "tree": self.tree_id,
                "estimate": self.estimate,
                "stderr": self.stderr,
                "theory_bound": self.theory_bound,
                "d": self.d,
                "k": self.k,
                "N": self.n,
                "samples": self.samples,
            },
            sort_keys=True,
        )


def advantage(
    tree: DecisionTree | TreeMixture,
    u: OrthogonalMatrix,
    k: int,
    samples: int,
    seed: int,
    tree_id: str = "tree",
) -> AdvantageReport:
    """Two-arm Monte-Carlo estimate of the distinguishing advantage."""
    if tree.n != k * u.n:
        raise ValueError(f"tree has {tree.n} variables, expected k*N = {k * u.n}")
    uniform = sample_uniform_batch(k, u.n, samples, sub_seed(seed, "adv-uniform"))
    chained = sample_duk_batch(u, k, samples, sub_seed(seed, "adv-duk"))
    f_uniform = evaluate_batch(tree, uniform.reshape(samples, -1))
    f_chained = evaluate_batch(tree, chained.reshape(samples, -1))
    estimate = float(f_uniform.mean() - f_chained.mean())
    stderr = float(
        math.sqrt(f_uniform.var(ddof=1) / samples + f_chained.var(ddof=1) / samples)
    )
    return AdvantageReport(
        tree_id=tree_id,
        estimate=estimate,
        stderr=stderr,
        theory_bound=thm_main_bound(max(tree.depth, 1), k, u.n),
        d=tree.depth,
        k=k,
        n=u.n,
        samples=samples,
    )


def thm_main_bound(d: int, k: int, n: int) -> float:
    """(d ln(kN))^((3k-1)/4) / N^((k-1)/2), constant pinned to 1."""
    if d < 1:
        raise ValueError("depth must be positive")
    return float((d * math.log(k * n)) ** ((3 * k - 1) / 4.0) / n ** ((k - 1) / 2.0))


def conjectured_bound(d: int, k: int, n: int) -> float:
    """(d (ln kN)^(2-1/k) / N^(1-1/k))^(k/2), constant pinned to 1."""
    if d < 1:
        raise ValueError("depth must be positive")
    inner = d * math.log(k * n) ** (2.0 - 1.0 / k) / n ** (1.0 - 1.0 / k)
    return float(inner ** (k / 2.0))


def lower_bound_depth(k: int, n: int) -> float:
    """N^(2(k-1)/(3k-1)) / (k ln(kN)), constant pinned to 1."""
    return float(n ** (2.0 * (k - 1) / (3.0 * k - 1)) / (k * math.log(k * n)))


@dataclass(frozen=True)
class MisclassificationReport:
    rate: float
    stderr: float
    samples: int
    errors: int
    yes_count: int
    no_count: int
    ambiguous_count: int


def misclassification_rate(
    tree: DecisionTree | TreeMixture,
    u: OrthogonalMatrix,
    k: int,
    samples: int,
    seed: int,
) -> MisclassificationReport:
    """Error rate of a tree on the half-uniform half-chain mixture.

    Counts an error only on promise (YES/NO) inputs; inputs in the
    promise gap never count against the tree. Tree output bit 1 is read
    as the YES claim.
    """
    rng = derive_rng(seed, "misclassify", u.n, k, samples)
    from_chain = rng.integers(0, 2, size=samples).astype(bool)
    n_chain = int(from_chain.sum())
    chain = sample_duk_batch(u, k, n_chain, sub_seed(seed, "mix-duk"))
    unif = sample_uniform_batch(k, u.n, samples - n_chain, sub_seed(seed, "mix-unif"))
    batch = np.empty((samples, k, u.n), dtype=np.int8)
    batch[from_chain] = chain
    batch[~from_chain] = unif
    values = phi_batch(u, batch)
    outputs = evaluate_batch(tree, batch.reshape(samples, -1))
    errors = 0
    yes = no = ambiguous = 0
    for value, out in zip(values, outputs):
        label = classify_value(float(value), k).tag
        if label == Label.YES:
            yes += 1
            errors += out < 0.5
        elif label == Label.NO:
            no += 1
            errors += out >= 0.5
        else:
            ambiguous += 1
    rate = errors / samples
    stderr = math.sqrt(max(rate * (1.0 - rate), 1e-12) / samples)
    return MisclassificationReport(
        rate=float(rate),
        stderr=float(stderr),
        samples=samples,
        errors=int(errors),
        yes_count=yes,
        no_count=no,
        ambiguous_count=ambiguous,
    )


# ---------------------------------------------------------------------------
# Corpus trees over the block-major layout
# ---------------------------------------------------------------------------

def dictator_tree(k: int, n: int, block: int, coord: int) -> DecisionTree:
    var = global_index(block, coord, n)
    nodes = [Node(query_var=var, child_minus=1, child_plus=2), Node(output=0), Node(output=1)]
    return DecisionTree(k * n, nodes)


def _two_var_product_tree(total_vars: int, var_a: int, var_b: int, accept_sign: int) -> DecisionTree:
    """Depth-2 tree on x_a * x_b: output 1 iff the product equals accept_sign."""
    nodes: list[Node] = []

    def leaf(bit: int) -> int:
        nodes.append(Node(output=bit))
        return len(nodes) - 1

    def inner(var: int, lo: int, hi: int) -> int:
        nodes.append(Node(query_var=var, child_minus=lo, child_plus=hi))
        return len(nodes) - 1

    sub_minus = inner(var_b, leaf(1 if -1 * -1 == accept_sign else 0),
                      leaf(1 if -1 * 1 == accept_sign else 0))
    sub_plus = inner(var_b, leaf(1 if 1 * -1 == accept_sign else 0),
                     leaf(1 if 1 * 1 == accept_sign else 0))
    root = inner(var_a, sub_minus, sub_plus)
    return DecisionTree(total_vars, nodes, root)


def within_block_parity_tree(k: int, n: int, block: int, coord_a: int, coord_b: int) -> DecisionTree:
    return _two_var_product_tree(
        k * n, global_index(block, coord_a, n), global_index(block, coord_b, n), 1
    )


def cross_block_parity_tree(k: int, n: int, coord_a: int, coord_b: int) -> DecisionTree:
    """Parity of z^(1)_a and z^(2)_b; its advantage has the arcsine closed
    form -(1/2) sign_correlation(U_ab)."""
    return _two_var_product_tree(
        k * n, global_index(1, coord_a, n), global_index(2, coord_b, n), 1
    )


def greedy_pair_tree(u: OrthogonalMatrix, k: int, pairs: int) -> DecisionTree:
    """Checks the `pairs` largest |U_ab| entries (disjoint rows/columns):
    output 1 when more than half the pairs match the sign of U_ab."""
    if pairs < 1:
        raise ValueError("need at least one pair")
    mags = np.abs(u.entries.copy())
    chosen: list[tuple[int, int, int]] = []
    for _ in range(pairs):
        a, b = np.unravel_index(int(np.argmax(mags)), mags.shape)
        sign = 1 if u.entries[a, b] >= 0 else -1
        chosen.append((int(a) + 1, int(b) + 1, sign))
        mags[a, :] = -1.0
        mags[:, b] = -1.0
    total_vars = k * u.n
    nodes: list[Node] = []

    def build(idx: int, matches: int) -> int:
        if idx == len(chosen):
            nodes.append(Node(output=1 if matches > len(chosen) / 2 else 0))
            return len(nodes) - 1
        a, b, sign = chosen[idx]
        var_a = global_index(1, a, u.n)
        var_b = global_index(2, b, u.n)
        here = len(nodes)
        nodes.append(Node())

        def on_second(first_sign: int) -> int:
            spot = len(nodes)
            nodes.append(Node())
            lo = build(idx + 1, matches + (first_sign * -1 == sign))
            hi = build(idx + 1, matches + (first_sign * 1 == sign))
            nodes[spot] = Node(query_var=var_b, child_minus=lo, child_plus=hi)
            return spot

        lo = on_second(-1)
        hi = on_second(1)
        nodes[here] = Node(query_var=var_a, child_minus=lo, child_plus=hi)
        return here

    root = build(0, 0)
    return DecisionTree(total_vars, nodes, root)


def standard_corpus(u: OrthogonalMatrix, k: int, seed: int) -> list[tuple[str, DecisionTree]]:
    """Fixed illustrative families: constants, dictators, parities within
    and across blocks, greedy top-|U| pair trees, and random trees."""
    n = u.n
    total = k * n
    corpus: list[tuple[str, DecisionTree]] = [
        ("const0", DecisionTree(total, [Node(output=0)])),
        ("const1", DecisionTree(total, [Node(output=1)])),
        ("dictator-b1", dictator_tree(k, n, 1, 1)),
        ("dictator-b2", dictator_tree(k, n, 2, min(2, n))),
        ("parity-within", within_block_parity_tree(k, n, 1, 1, min(2, n))),
        ("parity-cross", cross_block_parity_tree(k, n, 1, 1)),
        ("greedy-1", greedy_pair_tree(u, k, 1)),
        ("greedy-3", greedy_pair_tree(u, k, 3)),
    ]
    for i in range(3):
        corpus.append(
            (f"random-d6-{i}", random_tree(total, 6, sub_seed(seed, "corpus", i)))
        )
    return corpus
