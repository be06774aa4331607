"""JSON round-trip for provisioning plans and validation reports."""

from __future__ import annotations

import json

from qkdplan.errors import InputError
from qkdplan.planner import EvaluatedPlan, ProvisioningPlan
from qkdplan.routing import Application, Route


def plan_to_dict(evaluated: EvaluatedPlan, applications, capacity: int | None = None,
                 metadata: dict | None = None) -> dict:
    plan = evaluated.plan
    doc = {
        "method": plan.method,
        "applications": [{"id": a.id, "src": a.src, "dst": a.dst} for a in applications],
        "reservations": {str(k): v for k, v in sorted(plan.reservations.items())},
        "routes": [{"app_id": r.app_id, "path": list(r.path), "units": r.units,
                    "wavelengths": [list(w) if isinstance(w, tuple) else w
                                    for w in r.wavelengths]}
                   for r in plan.routes],
        "cost": evaluated.cost.to_dict(),
        "per_scenario_recourse": [{"demand_units": d, "probability": p, "recourse": c}
                                  for d, p, c in evaluated.per_scenario],
    }
    if capacity is not None:
        doc["wavelengths_per_fiber"] = capacity
    if metadata:
        doc["metadata"] = metadata
    return doc


def plan_to_json(evaluated: EvaluatedPlan, applications, capacity: int | None = None,
                 metadata: dict | None = None) -> str:
    return json.dumps(plan_to_dict(evaluated, applications, capacity, metadata), indent=2)


def plan_from_dict(doc) -> tuple[ProvisioningPlan, list[Application], int | None]:
    """Plan, its applications and (if recorded) the wavelength capacity."""
    try:
        apps = [Application(int(a["id"]), int(a["src"]), int(a["dst"]))
                for a in doc["applications"]]
        reservations = {int(k): int(v) for k, v in doc["reservations"].items()}
        routes = tuple(Route(int(r["app_id"]), tuple(int(n) for n in r["path"]), int(r["units"]),
                             tuple(r.get("wavelengths", ())))
                       for r in doc["routes"])
        method = str(doc.get("method", "UNKNOWN"))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed plan document: {exc}") from exc
    return ProvisioningPlan(reservations, routes, method), apps, doc.get("wavelengths_per_fiber")


def load_plan(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"plan document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("plan document must be an object")
    return plan_from_dict(doc)


def report_to_json(violations) -> str:
    return json.dumps([v.to_dict() for v in violations], indent=2)
