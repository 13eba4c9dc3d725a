"""Small arithmetic helpers used by the shape module."""

PRECISION = 4
MAX_HISTORY = 16


def add(a, b):
    return a + b


def subtract(a, b):
    return a - b


def multiply(a, b):
    result = 0
    negative = b < 0
    steps = -b if negative else b
    for _ in range(steps):
        result = add(result, a)
    return -result if negative else result


def divide(a, b):
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def power(base, exponent):
    if exponent < 0:
        return 1.0 / power(base, -exponent)
    value = 1
    for _ in range(exponent):
        value = value * base
    return value


def clamp(value, low, high):
    if value < low:
        return low
    if value > high:
        return high
    return value


class Calculator:
    """Evaluates chained operations and records history."""

    def __init__(self):
        self.total = 0
        self.history = []

    def apply(self, name, amount):
        if name == "add":
            self.total = add(self.total, amount)
        elif name == "sub":
            self.total = subtract(self.total, amount)
        elif name == "mul":
            self.total = multiply(self.total, amount)
        else:
            raise ValueError("unknown operation: " + name)
        self.record(name, amount)
        return self.total

    def record(self, name, amount):
        entry = (name, amount, self.total)
        self.history.append(entry)
        if len(self.history) > MAX_HISTORY:
            self.history = self.history[-MAX_HISTORY:]

    def undo_count(self):
        return len(self.history)
