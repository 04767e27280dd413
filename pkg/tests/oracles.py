"""Reference computations that share no code paths with the package."""

from fractions import Fraction

import mpmath


def to_mpf(x):
    man, exp = x.as_mantissa_exp()
    return mpmath.mpf((int(man), int(exp)))


def encloses(iv, ref, rel=mpmath.mpf(2) ** -250):
    tol = rel * max(1, abs(ref))
    return to_mpf(iv.lo) - tol <= ref <= to_mpf(iv.hi) + tol


def trial_primes(n):
    out = []
    for k in range(2, n + 1):
        if all(k % p for p in out if p * p <= k):
            out.append(k)
    return out


def ca_oracle(steps, p_max=2000, a_max=40, prec=400):
    """Exponent maps of the first ``steps`` CA numbers after 1, by a global sort.

    Every candidate move (p, a -> a+1) for p <= p_max, a < a_max is scored by
    log(1 + 1/(p + ... + p^(a+1))) / log p at ``prec`` bits. The result is
    only returned if the top ``steps`` scores are pairwise separated far above
    the working precision and beat every move left out of the candidate set.
    """
    with mpmath.workprec(prec):
        primes = trial_primes(p_max)

        def score(p, a):
            s = sum(p**k for k in range(1, a + 2))
            return mpmath.log1p(mpmath.mpf(1) / s) / mpmath.log(p)

        moves = sorted(((score(p, a), p, a) for p in primes for a in range(a_max)), reverse=True)
        top = moves[: steps + 1]
        gap = min(x[0] - y[0] for x, y in zip(top, top[1:]))
        assert gap > mpmath.mpf(2) ** (-prec + 40), "oracle ordering not separated"
        next_prime = next(q for q in range(p_max + 1, 2 * p_max) if all(q % p for p in primes))
        outside = max(score(next_prime, 0), score(2, a_max))
        assert top[steps - 1][0] > outside, "candidate set too small"

    states, exps = [], {}
    for _, p, a in top[:steps]:
        assert exps.get(p, 0) == a
        exps[p] = a + 1
        states.append(dict(exps))
    return states


def sigma_over_n(exps):
    out = Fraction(1)
    for p, a in exps.items():
        out *= Fraction(p ** (a + 1) - 1, (p - 1) * p**a)
    return out
