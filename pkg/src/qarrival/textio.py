"""Float formatting for CSV artifacts: full round-trip precision, plain
Python repr regardless of numpy scalar types (deterministic across runs)."""


def fnum(x):
    return repr(float(x))


def fint(x):
    return str(int(x))
