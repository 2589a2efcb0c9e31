"""Pulse-level Monte-Carlo oracle for the analytic gain and error-rate model.

Each pulse draws a Poisson photon number k; a signal click fires with
probability 1-(1-η)^k and an independent background click with probability
Y0. Signal and background clicks are tallied separately and summed, which
mirrors the additive analytic gain. Wrong bits: e_d per signal click, e0 per
background click.

Pulses are split into fixed-size blocks; block i draws from its own PCG64
stream seeded by SeedSequence(seed).spawn(...)[i], so the estimate does not
depend on how many workers process the blocks.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple

import numpy as np

from logger import get_logger
from models import McConfig, McEstimate

logger = get_logger(__name__)

GENERATOR_NAME = "PCG64"


class BlockTally(NamedTuple):
    pulses: int
    signal: int
    background: int
    union: int
    sum_x2: int
    sum_err: int
    sum_err2: int
    sum_err_x: int


def _block_sizes(pulses: int, block_pulses: int) -> List[int]:
    full, rest = divmod(pulses, block_pulses)
    return [block_pulses] * full + ([rest] if rest else [])


def _simulate_block(cfg: McConfig, size: int, seed: np.random.SeedSequence) -> BlockTally:
    rng = np.random.Generator(np.random.PCG64(seed))
    photons = rng.poisson(cfg.n, size)
    p_signal = -np.expm1(photons * np.log1p(-cfg.eta)) if cfg.eta < 1 else (photons > 0).astype(float)
    signal = rng.random(size) < p_signal
    background = rng.random(size) < cfg.y0
    signal_err = signal & (rng.random(size) < cfg.e_d)
    background_err = background & (rng.random(size) < cfg.e0)

    x = signal.astype(np.int64) + background.astype(np.int64)
    err = signal_err.astype(np.int64) + background_err.astype(np.int64)
    return BlockTally(
        pulses=size,
        signal=int(signal.sum()),
        background=int(background.sum()),
        union=int(np.count_nonzero(x)),
        sum_x2=int((x * x).sum()),
        sum_err=int(err.sum()),
        sum_err2=int((err * err).sum()),
        sum_err_x=int((err * x).sum()),
    )


def simulate(cfg: McConfig) -> McEstimate:
    """Estimates Q and E for one (η, Y0, n) operating point; deterministic given the seed."""
    sizes = _block_sizes(cfg.pulses, cfg.block_pulses)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            tallies = list(pool.map(lambda args: _simulate_block(cfg, *args), zip(sizes, seeds)))
    else:
        tallies = [_simulate_block(cfg, size, seed) for size, seed in zip(sizes, seeds)]

    n = cfg.pulses
    signal = sum(t.signal for t in tallies)
    background = sum(t.background for t in tallies)
    clicks = signal + background
    sum_x2 = sum(t.sum_x2 for t in tallies)
    sum_err = sum(t.sum_err for t in tallies)
    sum_err2 = sum(t.sum_err2 for t in tallies)
    sum_err_x = sum(t.sum_err_x for t in tallies)

    mean_x = clicks / n
    q_hat = mean_x
    var_x = max(sum_x2 / n - mean_x ** 2, 0.0)
    stderr_q = math.sqrt(var_x / n)

    if clicks > 0:
        e_hat = sum_err / clicks
        # Delta method for the ratio of means
        residual = sum_err2 / n - 2.0 * e_hat * sum_err_x / n + e_hat ** 2 * sum_x2 / n
        delta = math.sqrt(max(residual, 0.0) / n) / mean_x
        # Binomial floor at the shrunk rate (k+½)/(m+1); the delta method
        # collapses to 0 when no error event is drawn.
        shrunk = (sum_err + 0.5) / (clicks + 1.0)
        stderr_e = max(delta, math.sqrt(shrunk * (1.0 - shrunk) / clicks))
    else:
        e_hat, stderr_e = 0.0, 0.0

    logger.debug(
        f"MC eta={cfg.eta:g} y0={cfg.y0:g} n={cfg.n:g}: {n} pulses in {len(sizes)} blocks, "
        f"Q={q_hat:.6g}±{stderr_q:.2g}, E={e_hat:.6g}±{stderr_e:.2g}"
    )
    return McEstimate(
        q_hat=q_hat,
        e_hat=e_hat,
        stderr_q=stderr_q,
        stderr_e=stderr_e,
        clicks=sum(t.union for t in tallies),
        signal_clicks=signal,
        background_clicks=background,
        pulses=n,
        generator=GENERATOR_NAME,
        block_pulses=cfg.block_pulses,
        blocks=len(sizes),
    )
