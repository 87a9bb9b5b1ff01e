"""Independent brute-force oracles used to cross-check the engine.

Everything here is deliberately written with plain Python loops and no
shared code with the package, so the two sides can disagree.
"""
import math


def oracle_rate(flags):
    flags = list(flags)
    if not flags:
        return None
    return sum(1 for f in flags if f) / len(flags)


def oracle_spd(outcomes, in_priv):
    """outcomes/in_priv: aligned bool lists; rows with in_priv None excluded."""
    priv = [o for o, g in zip(outcomes, in_priv) if g is True]
    unpriv = [o for o, g in zip(outcomes, in_priv) if g is False]
    rp, ru = oracle_rate(priv), oracle_rate(unpriv)
    if rp is None or ru is None:
        return None
    return ru - rp


def oracle_di(outcomes, in_priv):
    priv = [o for o, g in zip(outcomes, in_priv) if g is True]
    unpriv = [o for o, g in zip(outcomes, in_priv) if g is False]
    rp, ru = oracle_rate(priv), oracle_rate(unpriv)
    if rp is None or ru is None or rp == 0:
        return None
    return ru / rp


def _tpr(pred, lab):
    tp = sum(1 for p, y in zip(pred, lab) if p and y)
    pos = sum(1 for y in lab if y)
    return tp / pos if pos else None


def _fpr(pred, lab):
    fp = sum(1 for p, y in zip(pred, lab) if p and not y)
    neg = sum(1 for y in lab if not y)
    return fp / neg if neg else None


def oracle_eqopp(pred, lab, in_priv):
    pp = [(p, y) for p, y, g in zip(pred, lab, in_priv) if g is True]
    uu = [(p, y) for p, y, g in zip(pred, lab, in_priv) if g is False]
    tp = _tpr([p for p, _ in pp], [y for _, y in pp])
    tu = _tpr([p for p, _ in uu], [y for _, y in uu])
    if tp is None or tu is None:
        return None
    return tu - tp


def oracle_avgodds(pred, lab, in_priv):
    pp = [(p, y) for p, y, g in zip(pred, lab, in_priv) if g is True]
    uu = [(p, y) for p, y, g in zip(pred, lab, in_priv) if g is False]
    tp = _tpr([p for p, _ in pp], [y for _, y in pp])
    tu = _tpr([p for p, _ in uu], [y for _, y in uu])
    fp = _fpr([p for p, _ in pp], [y for _, y in pp])
    fu = _fpr([p for p, _ in uu], [y for _, y in uu])
    if None in (tp, tu, fp, fu):
        return None
    return 0.5 * ((fu - fp) + (tu - tp))


def oracle_theil(pred, lab):
    if not pred:
        return None
    b = [int(p) - int(y) + 1 for p, y in zip(pred, lab)]
    mu = sum(b) / len(b)
    if mu == 0:
        return 0.0
    total = 0.0
    for bi in b:
        r = bi / mu
        if r > 0:
            total += r * math.log(r)
    return total / len(b)


def oracle_spd_range(rates):
    """rates: acceptance rates of the populated groups."""
    rates = [r for r in rates if r is not None]
    if len(rates) < 2:
        return 0.0
    return max(rates) - min(rates)


def oracle_pearson(a, b):
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    if va == 0 or vb == 0:
        return 1.0 if list(a) == list(b) else 0.0
    return cov / math.sqrt(va * vb)
