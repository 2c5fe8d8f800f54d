"""JSON form of expression trees.

A document is ``{"schema": 1, "mollifier": {...}, "expr": {...}}``.  The single
mollifier applies to every embedded leaf.  Node objects carry a ``"type"``:

``smooth``        ``{"expr": "x**2"}``
``heaviside``     ``{"shift": 0.0}``; ``delta`` likewise; ``step`` adds ``"order"``
``ups``           ``{"a": 0.1, "order": 0, "sigma": 4.0}``; ``ups_prime`` fixes order 1
``power_cutoff``  ``{"n": 1, "a": 0.1, "order": 0}``  (r**-n times Ups)
``radial_power``  ``{"p": -1, "child": ...}``
``conv_embed``    ``{"f": "Heaviside(x)*x", "breakpoints": [], "order": 0}``
``sum``           ``{"terms": [...]}``; ``product`` ``{"factors": [...]}``
``scale``         ``{"factor": 2.0, "child": ...}``; ``power`` ``{"k": 2, "child": ...}``
``derivative``    ``{"child": ...}`` (expanded on load)
``compose``       ``{"outer": "sin(x)", "inner": ...}``
"""

from __future__ import annotations

import json
from typing import Any

import sympy

from . import gfunc as G
from .errors import UnsupportedNode
from .mollifier import Mollifier

SCHEMA = 1


def _expr(text: str) -> sympy.Expr:
    return sympy.sympify(text, locals={"x": G.X})


def node_from_dict(d: dict[str, Any], m: Mollifier | None) -> G.GFunc:
    kind = d.get("type")

    def need_m() -> Mollifier:
        if m is None:
            raise ValueError(f"node type {kind!r} needs a mollifier")
        return m

    sigma = float(d.get("sigma", G.DEFAULT_SIGMA))
    if kind == "smooth":
        return G.Smooth.of(_expr(str(d["expr"])))
    if kind == "heaviside":
        return G.Step(need_m(), 0, float(d.get("shift", 0.0)))
    if kind == "delta":
        return G.Step(need_m(), 1, float(d.get("shift", 0.0)))
    if kind == "step":
        return G.Step(need_m(), int(d.get("order", 0)), float(d.get("shift", 0.0)))
    if kind == "ups":
        return G.Ups(need_m(), float(d["a"]), int(d.get("order", 0)), sigma)
    if kind == "ups_prime":
        return G.Ups(need_m(), float(d["a"]), 1, sigma)
    if kind == "power_cutoff":
        return G.PowerCutoff(need_m(), int(d["n"]), float(d["a"]), int(d.get("order", 0)), sigma)
    if kind == "radial_power":
        return G.radial_power(int(d["p"]), node_from_dict(d["child"], m))
    if kind == "conv_embed":
        c = G.ConvEmbed.of(need_m(), _expr(str(d["f"])), d.get("breakpoints", ()))
        for _ in range(int(d.get("order", 0))):
            c = c.derivative()
        return c
    if kind == "sum":
        return G.add(*(node_from_dict(t, m) for t in d["terms"]))
    if kind == "product":
        return G.multiply(*(node_from_dict(t, m) for t in d["factors"]))
    if kind == "scale":
        return G.scale(float(d["factor"]), node_from_dict(d["child"], m))
    if kind == "power":
        return G.power(node_from_dict(d["child"], m), int(d["k"]))
    if kind == "derivative":
        g = node_from_dict(d["child"], m)
        for _ in range(int(d.get("order", 1))):
            g = g.derivative()
        return g
    if kind == "compose":
        return G.compose(G.Smooth.of(_expr(str(d["outer"]))), node_from_dict(d["inner"], m))
    raise ValueError(f"unknown node type {kind!r}")


def node_to_dict(g: G.GFunc) -> dict[str, Any]:
    if isinstance(g, G.Smooth):
        if g.expr is None:
            raise UnsupportedNode("smooth leaves given by callables cannot be serialized")
        return {"type": "smooth", "expr": str(g.expr)}
    if isinstance(g, G.Step):
        return {"type": "step", "order": g.order, "shift": g.shift}
    if isinstance(g, G.Ups):
        return {"type": "ups", "a": g.a, "order": g.order, "sigma": g.sigma}
    if isinstance(g, G.RadialPower):
        return {"type": "radial_power", "p": g.p, "child": node_to_dict(g.child)}
    if isinstance(g, G.ConvEmbed):
        if g.expr is None:
            raise UnsupportedNode("embedded callables cannot be serialized")
        return {"type": "conv_embed", "f": str(g.expr), "breakpoints": list(g.breakpoints),
                "order": g.kernel_order}
    if isinstance(g, G.Sum):
        return {"type": "sum", "terms": [node_to_dict(t) for t in g.terms]}
    if isinstance(g, G.Product):
        return {"type": "product", "factors": [node_to_dict(f) for f in g.factors]}
    if isinstance(g, G.Scale):
        return {"type": "scale", "factor": g.factor, "child": node_to_dict(g.child)}
    if isinstance(g, G.Power):
        return {"type": "power", "k": g.k, "child": node_to_dict(g.child)}
    if isinstance(g, G.ComposeSmooth):
        if g.outer.expr is None:
            raise UnsupportedNode("composition with a callable outer function cannot be serialized")
        return {"type": "compose", "outer": str(g.outer.expr), "inner": node_to_dict(g.inner)}
    raise UnsupportedNode(f"cannot serialize {type(g).__name__}")


def to_document(g: G.GFunc) -> dict[str, Any]:
    ms = g.mollifiers()
    if len(ms) > 1:
        raise ValueError("a document holds a single mollifier")
    doc: dict[str, Any] = {"schema": SCHEMA}
    if ms:
        doc["mollifier"] = next(iter(ms)).to_dict()
    doc["expr"] = node_to_dict(g)
    return doc


def from_document(doc: dict[str, Any], mollifier: Mollifier | None = None) -> G.GFunc:
    """Rebuild a tree; ``mollifier`` overrides the one stored in the document."""
    if int(doc.get("schema", SCHEMA)) != SCHEMA:
        raise ValueError(f"unsupported schema {doc.get('schema')!r}")
    m = mollifier
    if m is None and "mollifier" in doc:
        m = Mollifier.from_dict(doc["mollifier"])
    return node_from_dict(doc["expr"], m)


def dumps(g: G.GFunc, **kw) -> str:
    return json.dumps(to_document(g), **kw)


def loads(text: str, mollifier: Mollifier | None = None) -> G.GFunc:
    return from_document(json.loads(text), mollifier)
