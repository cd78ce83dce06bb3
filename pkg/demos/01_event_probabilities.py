"""
Event probabilities under a constant rate
=========================================

A constant hazard of 0.1 events per month, read as a Poisson process.
"""

import numpy as np

from survkit import (
    exponential_cdf,
    poisson_pmf,
    prob_at_least_one,
    prob_exactly_one,
    survival_const_rate,
)

rate = 0.1

# chance of at least one fall over a year
print(f"P(at least one fall in 12 months) = {prob_at_least_one(rate, 12):.4f}")
print(f"P(exactly one fall in 12 months)  = {prob_exactly_one(rate, 12):.4f}")

# surviving the year fall-free is the k = 0 Poisson term
print(f"S(12) = {survival_const_rate(rate, 12):.4f} = pmf(k=0) = {poisson_pmf(rate, 12, 0):.4f}")

# the waiting time to the first event is exponential with the same rate
for months in (3, 6, 12, 24):
    print(f"  by month {months:2d}: {exponential_cdf(rate, months):.3f}")

# distribution of the number of falls over two years
counts = np.arange(8)
pmf = [poisson_pmf(rate, 24, int(k)) for k in counts]
for k, p in zip(counts, pmf):
    print(f"  {k} falls: {p:.4f}  " + "#" * int(round(p * 100)))
