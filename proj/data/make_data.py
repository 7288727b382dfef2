#!/usr/bin/env python3
"""Writes the example shape graphs in this directory."""

import json
import math
import pathlib

HERE = pathlib.Path(__file__).resolve().parent


def curve(f, edges):
    return [[round(c, 12) for c in f(i / edges)] for i in range(edges + 1)]


def adjacency(n_components, pairs):
    n = 2 * n_components
    a = [[int(i == j) for j in range(n)] for i in range(n)]
    for p, q in pairs:
        a[p][q] = a[q][p] = 1
    return a


def write(name, dim, components, pairs, weights=None):
    doc = {"dim": dim, "components": components,
           "adjacency": adjacency(len(components), pairs)}
    if weights is not None:
        doc["weights"] = weights
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n")


def arc(t):
    a = -1.0 + 2.0 * t
    return (0.5 * math.cos(a), 0.5 * math.sin(a))


def blob(t):
    a = 2 * math.pi * t
    r = 0.4 * (1 + 0.15 * math.cos(3 * a))
    return (r * math.cos(a), r * math.sin(a))


def branch(sign, angle=0.6):
    def f(t):
        a = math.pi / 2 + sign * angle * (0.3 + t)
        return (0.45 * t * math.cos(a), 0.45 * t * math.sin(a))
    return f


def main():
    write("open_arc.json", 2, [curve(arc, 60)], [])

    closed = curve(blob, 80)
    closed[-1] = closed[0]
    write("closed_blob.json", 2, [closed], [(0, 1)])

    trunk = curve(lambda t: (0.0, -0.5 + 0.5 * t), 30)
    left, right = curve(branch(-1), 30), curve(branch(1), 30)
    write("two_branch.json", 2, [trunk, left, right], [(1, 2), (1, 4), (2, 4)])
    write("one_branch.json", 2, [trunk, left], [(1, 2)])

    # Closed loop; a self-crossing curl hanging from it; two open arcs meeting
    # the end of the curl, one leaving the junction and one arriving at it.
    loop = curve(lambda t: (0.3 * math.sin(2 * math.pi * t),
                            0.3 - 0.3 * math.cos(2 * math.pi * t)), 40)
    loop[-1] = loop[0]
    curl = curve(lambda t: (0.15 * (1 - math.cos(2 * math.pi * t)),
                            -(0.6 * t + 0.15 * math.sin(2 * math.pi * t))), 40)
    leave = curve(lambda t: (-0.4 * t, -0.6 - 0.3 * t + 0.08 * math.sin(math.pi * t)), 20)
    arrive = curve(lambda t: (0.4 * (1 - t), -0.9 + 0.3 * t + 0.08 * math.sin(math.pi * t)), 20)
    write("loop_curl_fork.json", 2, [loop, curl, leave, arrive],
          [(0, 1), (0, 2), (1, 2), (3, 4), (3, 7), (4, 7)])

    helix = curve(lambda t: (0.3 * math.cos(4 * math.pi * t),
                             0.3 * math.sin(4 * math.pi * t), 0.6 * t), 60)
    stem3 = curve(lambda t: (0.3 - 0.3 * t, 0.0, -0.3 * t), 20)
    write("helix_stem.json", 3, [helix, stem3], [(0, 2)])

    config = {
        "lambda": 100.0,
        "alpha": 0.1,
        "beta_tilde": 1.0,
        "kernel": {"sigma": 0.2, "orientation": "squared"},
        "sfista": {"gamma0": 1.0, "growth": 5.0, "stages": 6},
    }
    (HERE / "config.json").write_text(json.dumps(config, indent=1) + "\n")


if __name__ == "__main__":
    main()
