"""Product-line domain model and the line-oriented model-file format.

A model file holds one statement per line::

    feature <id> "<name>"
    component <id> "<name>"
    link <feature-id> <component-id>
    vp <component-id> <vp-id> "<name>"
    variant <vp-id> <variant-id> "<name>"
    product <id> "<name>"
    include <product-id> <feature-id>
    bind <product-id> <vp-id> <variant-id>

``#`` starts a comment that runs to the end of the line. Identifiers must be
declared before they are referenced; declaration order is kept because it
drives address allocation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")
_TOKEN_RE = re.compile(r'"[^"]*"|#|[^\s"#]+|"')


class ModelError(Exception):
    """Base class for model-file and model-consistency errors."""

    def __init__(self, message: str, line: int | None = None, token: str | None = None):
        self.message = message
        self.line = line
        self.token = token
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ModelSyntaxError(ModelError):
    pass


class ModelReferenceError(ModelError):
    """Referential problem: a duplicate id or a reference to an undeclared id."""


class DuplicateIdError(ModelReferenceError):
    pass


class DanglingReferenceError(ModelReferenceError):
    pass


@dataclass(frozen=True)
class Feature:
    id: str
    name: str


@dataclass(frozen=True)
class Variant:
    id: str
    name: str


@dataclass(frozen=True)
class VariationPoint:
    id: str
    name: str
    variants: tuple[Variant, ...] = ()

    def variant_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variants)


@dataclass(frozen=True)
class Component:
    id: str
    name: str
    variation_points: tuple[VariationPoint, ...] = ()


@dataclass(frozen=True)
class ImplementsLink:
    feature: str
    component: str


@dataclass(frozen=True)
class Product:
    id: str
    name: str
    included_features: tuple[str, ...] = ()
    bindings: tuple[tuple[str, str], ...] = ()  # (vp id, variant id)


@dataclass(frozen=True)
class SplModel:
    features: tuple[Feature, ...] = ()
    components: tuple[Component, ...] = ()
    links: tuple[ImplementsLink, ...] = ()
    products: tuple[Product, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def _idx(self) -> dict:
        if self._index is None:
            vps = {}
            for c in self.components:
                for vp in c.variation_points:
                    vps[vp.id] = (c.id, vp)
            idx = {
                "features": {f.id: f for f in self.features},
                "components": {c.id: c for c in self.components},
                "products": {p.id: p for p in self.products},
                "vps": vps,
            }
            object.__setattr__(self, "_index", idx)
        return self._index

    def feature(self, fid: str) -> Feature:
        return self._idx()["features"][fid]

    def component(self, cid: str) -> Component:
        return self._idx()["components"][cid]

    def product(self, pid: str) -> Product:
        return self._idx()["products"][pid]

    def has_feature(self, fid: str) -> bool:
        return fid in self._idx()["features"]

    def has_component(self, cid: str) -> bool:
        return cid in self._idx()["components"]

    def has_product(self, pid: str) -> bool:
        return pid in self._idx()["products"]

    def has_element(self, eid: str) -> bool:
        return self.has_feature(eid) or self.has_component(eid)

    def variation_point(self, vp_id: str) -> tuple[str, VariationPoint]:
        """Return ``(host component id, variation point)``."""
        return self._idx()["vps"][vp_id]

    def has_variation_point(self, vp_id: str) -> bool:
        return vp_id in self._idx()["vps"]

    def components_of(self, fid: str) -> list[str]:
        return [l.component for l in self.links if l.feature == fid]

    def features_of(self, cid: str) -> list[str]:
        return [l.feature for l in self.links if l.component == cid]

    def has_link(self, fid: str, cid: str) -> bool:
        return ImplementsLink(fid, cid) in self.links

    # Edits used by the reconciler. Each returns a new model.

    def with_feature(self, f: Feature) -> SplModel:
        return replace(self, features=self.features + (f,))

    def with_component(self, c: Component) -> SplModel:
        return replace(self, components=self.components + (c,))

    def with_link(self, link: ImplementsLink) -> SplModel:
        return replace(self, links=self.links + (link,))

    def without_link(self, link: ImplementsLink) -> SplModel:
        return replace(self, links=tuple(l for l in self.links if l != link))

    def without_feature(self, fid: str) -> SplModel:
        products = tuple(
            replace(p, included_features=tuple(f for f in p.included_features if f != fid))
            for p in self.products
        )
        return replace(
            self,
            features=tuple(f for f in self.features if f.id != fid),
            links=tuple(l for l in self.links if l.feature != fid),
            products=products,
        )

    def without_component(self, cid: str) -> SplModel:
        comp = self.component(cid)
        dead_vps = {vp.id for vp in comp.variation_points}
        products = tuple(
            replace(p, bindings=tuple(b for b in p.bindings if b[0] not in dead_vps))
            for p in self.products
        )
        return replace(
            self,
            components=tuple(c for c in self.components if c.id != cid),
            links=tuple(l for l in self.links if l.component != cid),
            products=products,
        )


def _tokenize(line: str, lineno: int) -> list[str]:
    tokens = []
    for m in _TOKEN_RE.finditer(line):
        tok = m.group(0)
        if tok == "#":
            break
        if tok == '"':
            raise ModelSyntaxError("unterminated name", lineno, line[m.start():].strip())
        tokens.append(tok)
    return tokens


def _ident(tok: str, lineno: int) -> str:
    if not IDENT_RE.match(tok):
        raise ModelSyntaxError(f"expected identifier, got {tok!r}", lineno, tok)
    return tok


def _name(tok: str, lineno: int) -> str:
    if len(tok) < 2 or tok[0] != '"' or tok[-1] != '"':
        raise ModelSyntaxError(f"expected quoted name, got {tok!r}", lineno, tok)
    name = tok[1:-1]
    if not name.strip():
        raise ModelSyntaxError("name must be non-empty", lineno, tok)
    return name


# statement -> argument kinds ("id" or "name")
_GRAMMAR = {
    "feature": ("id", "name"),
    "component": ("id", "name"),
    "link": ("id", "id"),
    "vp": ("id", "id", "name"),
    "variant": ("id", "id", "name"),
    "product": ("id", "name"),
    "include": ("id", "id"),
    "bind": ("id", "id", "id"),
}


class _Builder:
    def __init__(self):
        self.features: dict[str, Feature] = {}
        self.components: dict[str, dict] = {}  # id -> {"name", "vps": [vp ids]}
        self.vps: dict[str, dict] = {}  # id -> {"host", "name", "variants": {id: name}}
        self.links: list[ImplementsLink] = []
        self.link_set: set[tuple[str, str]] = set()
        self.products: dict[str, dict] = {}

    def statement(self, kw: str, args: list[str], lineno: int) -> None:
        getattr(self, "_" + kw)(*args, lineno=lineno)

    def _element_taken(self, eid: str) -> bool:
        return eid in self.features or eid in self.components

    def _feature(self, fid, name, lineno):
        if self._element_taken(fid):
            raise DuplicateIdError(f"duplicate element id {fid!r}", lineno, fid)
        self.features[fid] = Feature(fid, name)

    def _component(self, cid, name, lineno):
        if self._element_taken(cid):
            raise DuplicateIdError(f"duplicate element id {cid!r}", lineno, cid)
        self.components[cid] = {"name": name, "vps": []}

    def _link(self, fid, cid, lineno):
        if fid not in self.features:
            raise DanglingReferenceError(f"undeclared feature {fid!r}", lineno, fid)
        if cid not in self.components:
            raise DanglingReferenceError(f"undeclared component {cid!r}", lineno, cid)
        if (fid, cid) in self.link_set:
            raise DuplicateIdError(f"duplicate link {fid} {cid}", lineno, cid)
        self.link_set.add((fid, cid))
        self.links.append(ImplementsLink(fid, cid))

    def _vp(self, cid, vp_id, name, lineno):
        if cid not in self.components:
            raise DanglingReferenceError(f"undeclared component {cid!r}", lineno, cid)
        if vp_id in self.vps:
            raise DuplicateIdError(f"duplicate variation point {vp_id!r}", lineno, vp_id)
        self.vps[vp_id] = {"host": cid, "name": name, "variants": {}}
        self.components[cid]["vps"].append(vp_id)

    def _variant(self, vp_id, var_id, name, lineno):
        if vp_id not in self.vps:
            raise DanglingReferenceError(f"undeclared variation point {vp_id!r}", lineno, vp_id)
        variants = self.vps[vp_id]["variants"]
        if var_id in variants:
            raise DuplicateIdError(f"duplicate variant {var_id!r} in {vp_id}", lineno, var_id)
        variants[var_id] = name

    def _product(self, pid, name, lineno):
        if pid in self.products:
            raise DuplicateIdError(f"duplicate product {pid!r}", lineno, pid)
        self.products[pid] = {"name": name, "features": [], "bindings": []}

    def _include(self, pid, fid, lineno):
        if pid not in self.products:
            raise DanglingReferenceError(f"undeclared product {pid!r}", lineno, pid)
        if fid not in self.features:
            raise DanglingReferenceError(f"undeclared feature {fid!r}", lineno, fid)
        feats = self.products[pid]["features"]
        if fid in feats:
            raise DuplicateIdError(f"feature {fid!r} already included in {pid}", lineno, fid)
        feats.append(fid)

    def _bind(self, pid, vp_id, var_id, lineno):
        if pid not in self.products:
            raise DanglingReferenceError(f"undeclared product {pid!r}", lineno, pid)
        if vp_id not in self.vps:
            raise DanglingReferenceError(f"undeclared variation point {vp_id!r}", lineno, vp_id)
        if var_id not in self.vps[vp_id]["variants"]:
            raise DanglingReferenceError(f"undeclared variant {var_id!r} of {vp_id}", lineno, var_id)
        bindings = self.products[pid]["bindings"]
        if any(b[0] == vp_id for b in bindings):
            raise DuplicateIdError(f"variation point {vp_id!r} bound twice in {pid}", lineno, vp_id)
        bindings.append((vp_id, var_id))

    def build(self) -> SplModel:
        components = []
        for cid, c in self.components.items():
            vps = []
            for vp_id in c["vps"]:
                vp = self.vps[vp_id]
                if not vp["variants"]:
                    raise ModelReferenceError(f"variation point {vp_id!r} has no variants", None, vp_id)
                variants = tuple(Variant(k, v) for k, v in vp["variants"].items())
                vps.append(VariationPoint(vp_id, vp["name"], variants))
            components.append(Component(cid, c["name"], tuple(vps)))
        products = tuple(
            Product(pid, p["name"], tuple(p["features"]), tuple(p["bindings"]))
            for pid, p in self.products.items()
        )
        return SplModel(tuple(self.features.values()), tuple(components), tuple(self.links), products)


def parse_model(text: str) -> SplModel:
    """Parse model-file text. Stops at the first error."""
    b = _Builder()
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        kw, args = tokens[0], tokens[1:]
        kinds = _GRAMMAR.get(kw)
        if kinds is None:
            raise ModelSyntaxError(f"unknown statement {kw!r}", lineno, kw)
        if len(args) != len(kinds):
            tok = args[len(kinds)] if len(args) > len(kinds) else kw
            raise ModelSyntaxError(f"{kw} takes {len(kinds)} arguments, got {len(args)}", lineno, tok)
        values = [_ident(a, lineno) if k == "id" else _name(a, lineno) for a, k in zip(args, kinds)]
        b.statement(kw, values, lineno)
    return b.build()


def serialize_model(model: SplModel) -> str:
    """Canonical model-file text; ``parse_model`` reads it back unchanged."""
    out: list[str] = []
    for f in model.features:
        out.append(f'feature {f.id} "{f.name}"')
    for c in model.components:
        out.append(f'component {c.id} "{c.name}"')
        for vp in c.variation_points:
            out.append(f'vp {c.id} {vp.id} "{vp.name}"')
            for v in vp.variants:
                out.append(f'variant {vp.id} {v.id} "{v.name}"')
    for l in model.links:
        out.append(f"link {l.feature} {l.component}")
    for p in model.products:
        out.append(f'product {p.id} "{p.name}"')
        for fid in p.included_features:
            out.append(f"include {p.id} {fid}")
        for vp_id, var_id in p.bindings:
            out.append(f"bind {p.id} {vp_id} {var_id}")
    return "".join(line + "\n" for line in out)


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def render(self) -> str:
        lines = [str(i) for i in self.issues]
        lines.append(f"{len(self.errors)} error(s), {len(self.warnings)} warning(s)")
        return "\n".join(lines) + "\n"


def _duplicates(ids: Iterable[str]) -> list[str]:
    seen, dups = set(), []
    for i in ids:
        if i in seen and i not in dups:
            dups.append(i)
        seen.add(i)
    return dups


def validate(model: SplModel) -> ValidationReport:
    """Check hard invariants (errors) and modelling smells (warnings).

    Models built by ``parse_model`` never carry errors; models assembled in
    code can.
    """
    issues: list[Issue] = []
    err = lambda msg: issues.append(Issue("error", msg))  # noqa: E731

    fids = [f.id for f in model.features]
    cids = [c.id for c in model.components]
    for d in _duplicates(fids + cids):
        err(f"duplicate element id {d}")
    for f in model.features:
        if not f.name.strip():
            err(f"feature {f.id} has an empty name")
    vp_ids = [vp.id for c in model.components for vp in c.variation_points]
    for d in _duplicates(vp_ids):
        err(f"duplicate variation point {d}")
    for c in model.components:
        for vp in c.variation_points:
            if not vp.variants:
                err(f"variation point {vp.id} has no variants")
            for d in _duplicates(vp.variant_ids()):
                err(f"duplicate variant {d} in {vp.id}")

    fset, cset = set(fids), set(cids)
    seen_links = set()
    for l in model.links:
        if l.feature not in fset:
            err(f"link references unknown feature {l.feature}")
        if l.component not in cset:
            err(f"link references unknown component {l.component}")
        if (l.feature, l.component) in seen_links:
            err(f"duplicate link {l.feature} {l.component}")
        seen_links.add((l.feature, l.component))

    vp_variants = {vp.id: set(vp.variant_ids()) for c in model.components for vp in c.variation_points}
    for d in _duplicates(p.id for p in model.products):
        err(f"duplicate product {d}")
    for p in model.products:
        for fid in p.included_features:
            if fid not in fset:
                err(f"product {p.id} includes unknown feature {fid}")
        bound = set()
        for vp_id, var_id in p.bindings:
            if vp_id not in vp_variants:
                err(f"product {p.id} binds unknown variation point {vp_id}")
            elif var_id not in vp_variants[vp_id]:
                err(f"product {p.id} binds unknown variant {var_id} of {vp_id}")
            if vp_id in bound:
                err(f"product {p.id} binds {vp_id} more than once")
            bound.add(vp_id)

    linked_f = {l.feature for l in model.links}
    linked_c = {l.component for l in model.links}
    for f in model.features:
        if f.id not in linked_f:
            issues.append(Issue("warning", f"feature {f.id} has no implementing components"))
    for c in model.components:
        if c.id not in linked_c:
            issues.append(Issue("warning", f"component {c.id} is unlinked"))
    return ValidationReport(tuple(issues))
