"""Independent straight-line transcription of the multi-Bernoulli update.

Deliberately written with plain Python loops and ``math`` — no shared code
with the package — so tests can compare the vectorized implementation
against an independently computed result.
"""

import math


def detection_prob(sensor, position, r0, h):
    d = math.dist(sensor, position)
    if d <= r0:
        return 1.0
    return max(0.0, 1.0 - h * (d - r0))


def range_density(z, sensor, position, sigma0, beta):
    d = math.dist(sensor, position)
    sigma = sigma0 + beta * d * d
    return math.exp(-0.5 * ((z - d) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def straight_line_update(components, measurements, sensor, sigma0, beta, r0, h, kappa):
    """Update of a predicted multi-Bernoulli density, term by term.

    ``components`` is a list of dicts with keys r, states (list of state
    lists), weights (normalized); ``measurements`` a list of scalar ranges;
    ``kappa`` the clutter intensity value.  Returns (legacy, corrected)
    where legacy is a list of (r, weights) per component and corrected a
    list of (r, weights-over-the-particle-union) per measurement.
    """
    p_d = [
        [detection_prob(sensor, s[:2], r0, h) for s in comp["states"]]
        for comp in components
    ]
    rho_l = [
        sum(w * p for w, p in zip(comp["weights"], p_d[i]))
        for i, comp in enumerate(components)
    ]

    legacy = []
    for i, comp in enumerate(components):
        r = comp["r"]
        r_l = r * (1.0 - rho_l[i]) / (1.0 - r * rho_l[i])
        raw = [w * (1.0 - p) for w, p in zip(comp["weights"], p_d[i])]
        total = sum(raw)
        legacy.append((r_l, [w / total for w in raw]))

    corrected = []
    for z in measurements:
        g = [
            [range_density(z, sensor, s[:2], sigma0, beta) for s in comp["states"]]
            for comp in components
        ]
        rho_u = [
            sum(w * p * gz for w, p, gz in zip(comp["weights"], p_d[i], g[i]))
            for i, comp in enumerate(components)
        ]
        numerator = 0.0
        denominator = kappa
        for i, comp in enumerate(components):
            r = comp["r"]
            numerator += r * (1.0 - r) * rho_u[i] / (1.0 - r * rho_l[i]) ** 2
            denominator += r * rho_u[i] / (1.0 - r * rho_l[i])
        r_u = numerator / denominator
        raw = []
        for i, comp in enumerate(components):
            r = comp["r"]
            for j, w in enumerate(comp["weights"]):
                raw.append(w * r * p_d[i][j] * g[i][j] / (1.0 - r))
        total = sum(raw)
        corrected.append((r_u, [w / total for w in raw]))
    return legacy, corrected
