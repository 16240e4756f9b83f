"""Edge labels, exact degrees in Q + Q*kappa, and multi-indices with scaling (2,1,1)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

SCALING = (2, 1, 1)
ZERO = (0, 0, 0)


def e_(j):
    """Spatial unit multi-index for direction j in {1, 2}."""
    k = [0, 0, 0]
    k[j] = 1
    return tuple(k)


def sdeg(k):
    return sum(s * n for s, n in zip(SCALING, k))


@dataclass(frozen=True, order=True)
class Deg:
    """Degree a + b*kappa with rational coefficients."""

    a: Fraction
    b: Fraction = Fraction(0)

    @staticmethod
    def of(a, b=0):
        return Deg(Fraction(a), Fraction(b))

    def __add__(self, o):
        if isinstance(o, int):
            return Deg(self.a + o, self.b)
        return Deg(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, int):
            return Deg(self.a - o, self.b)
        return Deg(self.a - o.a, self.b - o.b)

    def __neg__(self):
        return Deg(-self.a, -self.b)

    def at(self, kappa):
        return self.a + self.b * Fraction(kappa)

    def below(self, bound, interval):
        """True when self < bound for every kappa in the open interval."""
        lo, hi = (Fraction(x) for x in interval)
        d = self - bound
        vlo, vhi = d.at(lo), d.at(hi)
        return vlo <= 0 and vhi <= 0 and not (vlo == 0 and vhi == 0)

    def __str__(self):
        a, b = self.a, self.b
        if b == 0:
            return f"{a}"
        sign = "+" if b > 0 else "-"
        return f"{a}{sign}{abs(b)}*k"

    @staticmethod
    def parse(text):
        text = text.replace(" ", "")
        if "*k" not in text:
            return Deg.of(Fraction(text))
        body = text[: text.index("*k")]
        for i in range(len(body) - 1, 0, -1):
            if body[i] in "+-" and body[i - 1] not in "/":
                return Deg(Fraction(body[:i]), Fraction(body[i:]))
        return Deg(Fraction(0), Fraction(body))


@dataclass(frozen=True)
class Label:
    name: str
    kind: str  # "kernel" or "noise"
    family: str
    index: int | None
    degree: Deg

    @property
    def is_noise(self):
        return self.kind == "noise"


class LabelSet:
    def __init__(self, labels, kappa_interval, kappa=Fraction(1, 10)):
        self.labels = {lab.name: lab for lab in labels}
        self.kappa_interval = tuple(Fraction(x) for x in kappa_interval)
        self.kappa = Fraction(kappa)

    def __getitem__(self, name):
        return self.labels[name]

    def __iter__(self):
        return iter(self.labels.values())

    def kernels(self):
        return [lab for lab in self if not lab.is_noise]

    def noises(self):
        return [lab for lab in self if lab.is_noise]

    def deg(self, name):
        return self.labels[name].degree


def sym_labels(d=2):
    noise = Deg.of(-Fraction(d, 2) - 1, -1)
    labs = [Label(f"a{i}", "kernel", "a", i, Deg.of(2)) for i in range(1, d + 1)]
    labs += [Label(f"l{i}", "noise", "l", i, noise) for i in range(1, d + 1)]
    return LabelSet(labs, (0, Fraction(1, 4)))


def gauge_labels(d=2):
    noise = Deg.of(-Fraction(d, 2) - 1, -1)
    labs = []
    for i in range(1, d + 1):
        labs.append(Label(f"a{i}", "kernel", "a", i, Deg.of(2, -1)))
        labs.append(Label(f"m{i}", "kernel", "m", i, Deg.of(2, -1)))
        labs.append(Label(f"h{i}", "kernel", "h", i, Deg.of(2)))
    labs.append(Label("u", "kernel", "u", None, Deg.of(2)))
    for i in range(1, d + 1):
        labs.append(Label(f"l{i}", "noise", "l", i, noise))
        labs.append(Label(f"lb{i}", "noise", "lb", i, noise))
    return LabelSet(labs, (0, Fraction(1, 12)), kappa=Fraction(1, 20))
