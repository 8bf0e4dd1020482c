"""Random expression trees with an independent float evaluator."""
import math
import random

NAMES = ("x", "y", "z")


def _leaf(rng):
    if rng.random() < 0.6:
        n = rng.choice(NAMES)
        return n, lambda p, n=n: p[n]
    c = rng.randint(-4, 4)
    return f"({c})", lambda p, c=c: float(c)


def random_tree(rng: random.Random, depth: int = 3):
    """(text, f) where f(point) evaluates the text with the math module."""
    if depth == 0 or rng.random() < 0.25:
        return _leaf(rng)
    op = rng.choice(("+", "-", "*", "*", "/", "^", "exp", "sin", "cos", "tan"))
    if op in ("exp", "sin", "cos", "tan"):
        # keep transcendental arguments to a single coordinate or a small linear form
        n = rng.choice(NAMES)
        k = rng.choice((1, -1, 2))
        fn = {"exp": math.exp, "sin": math.sin, "cos": math.cos, "tan": math.tan}[op]
        return f"{op}({k}*{n})", lambda p, fn=fn, n=n, k=k: fn(k * p[n])
    if op == "^":
        t, f = random_tree(rng, depth - 1)
        e = rng.randint(0, 3)
        return f"({t})^{e}", lambda p, f=f, e=e: f(p) ** e
    a, fa = random_tree(rng, depth - 1)
    b, fb = random_tree(rng, depth - 1)
    if op == "/":
        # shift the denominator away from zero on typical sample points
        return f"({a})/(({b})^2 + 1)", lambda p, fa=fa, fb=fb: fa(p) / (fb(p) ** 2 + 1)
    fn = {"+": lambda u, v: u + v, "-": lambda u, v: u - v, "*": lambda u, v: u * v}[op]
    return f"({a}){op}({b})", lambda p, fa=fa, fb=fb, fn=fn: fn(fa(p), fb(p))


def random_point(rng: random.Random):
    return {n: rng.uniform(-1.2, 1.2) for n in NAMES}
