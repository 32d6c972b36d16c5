"""Shared collector for the acceptance criterion result lines."""
RESULTS = []


def report(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok
