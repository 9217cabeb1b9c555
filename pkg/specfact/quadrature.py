"""
Composite Gauss-Legendre quadrature on [-pi, pi] graded toward singular points.

Used for integrands with integrable singularities (|theta|^-a behaviour) where
the uniform rectangle rule on the circle grid converges too slowly.
"""

import logging
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from specfact.errors import QuadratureError

logger = logging.getLogger(__name__)

# widest panel allowed away from breakpoints
MAX_PANEL_WIDTH = np.pi / 16
# subpanels per oscillation when a phase hint is given
SUBPANELS_PER_OSCILLATION = 4
# panels touching a singular point are integrated under theta = b + w exp(-v),
# v in [0, TAIL_SPAN], split into TAIL_PIECES Gauss panels
TAIL_SPAN = 64.0
TAIL_PIECES = 8


@lru_cache(maxsize=32)
def gauss_legendre(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    nodes, weights = roots_legendre(order)
    return nodes, weights


def _singular_points(breakpoints):
    return {float(np.clip(p, -np.pi, np.pi)) for p in breakpoints}


def _uniform_edges(a, b, max_width):
    count = max(1, int(np.ceil((b - a) / max_width)))
    return list(np.linspace(a, b, count + 1))


def _graded_edges(a, b, toward_left, ratio, floor):
    """Edges on [a, b] shrinking geometrically toward a (or b) down to ``floor``."""
    length = b - a
    offsets = [length]
    while offsets[-1] / ratio > floor:
        offsets.append(offsets[-1] / ratio)
    offsets.append(0.0)
    offsets = np.array(offsets[::-1])
    if toward_left:
        return list(a + offsets)
    return list(b - offsets[::-1])


def graded_panels(breakpoints, ratio=2.0, floor=1e-12, max_width=MAX_PANEL_WIDTH):
    """
    Split [-pi, pi] into panels graded toward each breakpoint.

    Args:
        breakpoints: iterable of singular points inside [-pi, pi]
        ratio: geometric grading ratio (> 1)
        floor: width of the innermost panel next to a breakpoint
        max_width: widest panel allowed in the smooth parts

    Returns:
        (M, 2) array of panel endpoints covering [-pi, pi] without overlap
    """
    singular = _singular_points(breakpoints)
    points = sorted(singular | {-np.pi, np.pi})
    edges = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        left = (
            _graded_edges(a, mid, True, ratio, floor)
            if a in singular
            else _uniform_edges(a, mid, max_width)
        )
        right = (
            _graded_edges(mid, b, False, ratio, floor)
            if b in singular
            else _uniform_edges(mid, b, max_width)
        )
        # grading near a breakpoint leaves wide outer panels; cap them too
        for lo, hi in zip(left[:-1] + right[:-1], left[1:] + right[1:]):
            edges.extend(_uniform_edges(lo, hi, max_width)[1:])
    edges = np.array(edges)
    return np.column_stack([edges[:-1], edges[1:]])


def _subdivide(panels, phase, max_subpanels, averaged):
    """Split oscillating panels; flag panels beyond the cap for the averaged rule."""
    if phase is None:
        return panels, np.zeros(len(panels), dtype=bool)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        counts = np.abs(phase(panels[:, 1]) - phase(panels[:, 0])) / (2 * np.pi)
    # a panel touching a singular point has an unbounded phase change
    finite = np.isfinite(counts)
    over_cap = ~finite | (
        SUBPANELS_PER_OSCILLATION * np.where(finite, counts, 0.0) > max_subpanels
    )
    safe_counts = np.where(over_cap, 0.0, counts)
    pieces = np.maximum(np.ceil(SUBPANELS_PER_OSCILLATION * safe_counts), 1).astype(
        int
    )
    if np.any(over_cap) and averaged is None:
        logger.warning(
            "%d panels exceed %d subpanels and no averaged integrand was given",
            int(np.count_nonzero(over_cap)),
            max_subpanels,
        )
    pieces = np.where(over_cap, 1 if averaged is not None else max_subpanels, pieces)

    new_panels, new_flags = [], []
    for (lo, hi), count, flag in zip(panels, pieces, over_cap & (averaged is not None)):
        edges = np.linspace(lo, hi, count + 1)
        new_panels.append(np.column_stack([edges[:-1], edges[1:]]))
        new_flags.append(np.full(count, flag))
    return np.vstack(new_panels), np.concatenate(new_flags)


def _panel_rule(panels, x, w):
    """Gauss nodes and weights mapped onto each row of ``panels``."""
    centers = 0.5 * (panels[:, 0] + panels[:, 1])
    halves = 0.5 * (panels[:, 1] - panels[:, 0])
    return centers[:, None] + halves[:, None] * x[None, :], halves[:, None] * w[None, :]


def _tail_rule(panels, singular, x, w):
    """
    Nodes and weights on panels with an endpoint b at a singular point.

    Under theta = b +- width * exp(-v) a power singularity |theta - b|^-s
    becomes exp(-(1 - s) v), which Gauss-Legendre resolves in v; the part
    closer to b than width * exp(-TAIL_SPAN) is dropped.
    """
    edges = np.linspace(0.0, TAIL_SPAN, TAIL_PIECES + 1)
    v, v_weights = _panel_rule(np.column_stack([edges[:-1], edges[1:]]), x, w)
    v, v_weights = v.ravel(), v_weights.ravel()
    at_left = np.isin(panels[:, 0], singular)
    base = np.where(at_left, panels[:, 0], panels[:, 1])
    sign = np.where(at_left, 1.0, -1.0)
    scale = (panels[:, 1] - panels[:, 0])[:, None] * np.exp(-v)[None, :]
    nodes = base[:, None] + sign[:, None] * scale
    weights = scale * v_weights[None, :]
    # away from 0 the offset drops below one ulp of b and the node lands on b
    collapsed = nodes == base[:, None]
    centers = 0.5 * (panels[:, 0] + panels[:, 1])
    nodes = np.where(collapsed, centers[:, None], nodes)
    return nodes, np.where(collapsed, 0.0, weights)


def graded_mean(
    func,
    breakpoints=(0.0,),
    order=20,
    ratio=2.0,
    floor=1e-12,
    max_subpanels=4096,
    phase=None,
    averaged=None,
):
    """
    Normalized integral (1/2pi) * integral over [-pi, pi] of ``func``.

    Args:
        func: vectorized callable of the angle
        breakpoints: points where ``func`` may be singular or discontinuous
        order: Gauss-Legendre points per panel
        ratio: geometric grading ratio toward breakpoints
        floor: innermost panel width
        max_subpanels: cap on oscillation subpanels per panel
        phase: optional monotone phase of the oscillating factor; panels are
            split so each piece holds a fraction of an oscillation
        averaged: optional callable replacing ``func`` on panels whose
            oscillation count exceeds the cap (the oscillation averaged out)

    Returns:
        float (complex if ``func`` is complex-valued)
    """
    panels = graded_panels(breakpoints, ratio=ratio, floor=floor)
    panels, use_average = _subdivide(panels, phase, max_subpanels, averaged)
    singular = np.array(sorted(_singular_points(breakpoints)))
    touching = np.isin(panels[:, 0], singular) | np.isin(panels[:, 1], singular)

    x, w = gauss_legendre(order)
    total = 0.0
    for integrand, chosen in ((func, ~use_average), (averaged, use_average)):
        if not np.any(chosen):
            continue
        nodes, weights = _panel_rule(panels[chosen & ~touching], x, w)
        tail_nodes, tail_weights = _tail_rule(
            panels[chosen & touching], singular, x, w
        )
        nodes = np.concatenate([nodes.ravel(), tail_nodes.ravel()])
        weights = np.concatenate([weights.ravel(), tail_weights.ravel()])
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            values = integrand(nodes)
        total = total + np.sum(weights * values)

    logger.debug(
        "graded_mean: %d panels (%d averaged, %d at singular points), order %d",
        len(panels),
        int(np.count_nonzero(use_average)),
        int(np.count_nonzero(touching)),
        order,
    )
    return total / (2 * np.pi)


def refine_until_stable(evaluate, orders=(10, 20, 40, 80), rtol=1e-8, atol=1e-300):
    """
    Evaluate a quadrature at increasing orders until two values agree.

    Args:
        evaluate: callable taking the Gauss order and returning a number
        orders: increasing sequence of orders to try
        rtol: relative agreement required between consecutive values
        atol: absolute agreement accepted for values near zero

    Returns:
        (value, trace) with trace the list of (order, value) pairs

    Raises:
        QuadratureError: if no two consecutive values agree or a value is
            not finite
    """
    trace = []
    previous = None
    for order in orders:
        value = evaluate(order)
        trace.append((order, value))
        if not np.isfinite(value):
            raise QuadratureError(
                f"Quadrature returned {value} at order {order}.", trace
            )
        if previous is not None and abs(value - previous) <= max(
            rtol * abs(value), atol
        ):
            return value, trace
        previous = value
    raise QuadratureError(
        f"Quadrature did not settle to rtol={rtol} over orders {list(orders)}.", trace
    )
