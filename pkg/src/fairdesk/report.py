"""Investigation report: a deterministic JSON document plus a plain-text
rendering, produced identically by the HTTP service and the headless CLI."""
from __future__ import annotations

import json
from importlib import resources

from .errors import StateError
from .metrics import MODEL_VIEW

#: engine-choice metadata embedded in every report so readers can see which
#: formulas and thresholds produced the numbers
DECISION_NOTES = {
    "confidence_formula": "|2p - 1|",
    "theil_benefit": "prediction - label + 1",
    "privileged_default": "highest acceptance-rate group, one-vs-rest",
    "metric_predictions": "held-out test split",
    "binning": "ceil(sqrt(n)) equal-width bins, capped",
    "edge_strength": "max absolute encoded weight per feature pair",
    "edge_orientation": ("optimizer direction unless the additive-noise "
                         "heteroscedasticity test clearly disagrees; "
                         "target-adjacent edges point at the target"),
    "similarity": "Pearson correlation over the standardized encoding",
    "missing_markers": ["", "NA"],
}


def build_report(session) -> dict:
    """Assemble the full report JSON for a ready session.

    Content is a pure function of the session state: no timestamps, no
    session ids, so identically configured sessions yield identical bytes
    after key sorting.
    """
    if not session.ready:
        raise StateError("session not ready; finish the setup wizard first")
    table = session.table
    overview = session.overview("dataset")
    graph = session.compute_graph()
    has_model = session._model is not None

    sensitive_sections = []
    for feature in sorted(session.sensitive):
        entry = {
            "feature": feature,
            "privileged": session.sensitive[feature],
            "spd_range": session._spd_ranges("dataset")[feature],
            "metrics": {
                "dataset": [m.to_json() for m in
                            session.feature_metrics(feature, "dataset")],
            },
        }
        if has_model:
            entry["metrics"]["model"] = [
                m.to_json() for m in session.feature_metrics(feature, MODEL_VIEW)]
        sensitive_sections.append(entry)

    flagged_features = []
    for feature in sorted(session.unfair_features):
        flagged_features.append({
            "feature": feature,
            "spd_range": session._spd_ranges("dataset").get(feature, 0.0),
            "metrics": [m.to_json() for m in
                        session.feature_metrics(feature, "dataset")],
        })
    cards = session.combination_cards("dataset")
    flagged_subgroups = [c for c in cards if c["unfair"]]

    model_section = None
    if has_model:
        artifact = session._model
        train_rows, test_rows = session._split
        flags = session._positive_flags("model")
        labels = table.positives()
        test_correct = sum(1 for i in test_rows if flags[i] == labels[i])
        model_section = {
            "family": session.model_config["family"],
            "l2": artifact.l2,
            "split_seed": session.split_seed,
            "train_rows": len(train_rows),
            "test_rows": len(test_rows),
            "test_accuracy": test_correct / len(test_rows) if test_rows else None,
            "iterations": artifact.iterations,
            "final_loss": artifact.final_loss,
            "converged": artifact.converged,
            "importance": _importance(session),
        }

    return {
        "format": "fairdesk-report/1",
        "role": session.role,
        "dataset": {
            "source": session.dataset_source,
            "instances": overview["instances"],
            "acceptance_rate": overview["acceptance_rate"],
            "target": overview["target"],
            "positive_label": overview["positive_label"],
            "features": overview["features"],
        },
        "sensitive": sensitive_sections,
        "custom_metrics": [m.to_json() for m in session.custom_metrics],
        "chosen_metrics": list(session.chosen_metrics),
        "graph": graph.to_json(),
        "combinations": cards,
        "flags": {
            "features": flagged_features,
            "subgroups": flagged_subgroups,
        },
        "model": model_section,
        "decisions": dict(DECISION_NOTES, **{
            "omega": session.config.omega,
            "lambda": session.config.l1,
            "l2": session.config.l2,
            "k_max": session.config.k_max,
            "max_constraints": session.config.max_constraints,
            "kind_threshold": session.config.kind_threshold,
            "test_fraction": session.config.test_fraction,
        }),
    }


def _importance(session):
    from .model import feature_importance
    return feature_importance(session._model)


def report_json_bytes(report: dict) -> bytes:
    """Canonical byte form: sorted keys, stable separators."""
    return json.dumps(report, sort_keys=True, indent=2).encode("utf-8") + b"\n"


def render_text(report: dict) -> str:
    """Human-readable rendering of the report document."""
    lines = []
    dataset = report["dataset"]
    lines.append("FAIRNESS INVESTIGATION REPORT")
    lines.append("=" * 29)
    lines.append("")
    lines.append("Dataset")
    lines.append("-------")
    lines.append(f"instances: {dataset['instances']}")
    lines.append(f"target: {dataset['target']} (positive = {dataset['positive_label']})")
    lines.append(f"acceptance rate: {dataset['acceptance_rate']:.4f}")
    missing = {f["name"]: f["missing_count"] for f in dataset["features"]
               if f["missing_count"]}
    lines.append(f"features: {len(dataset['features'])}"
                 + (f"; missing cells: {missing}" if missing else "; no missing cells"))
    lines.append("")
    lines.append("Sensitive features")
    lines.append("------------------")
    if not report["sensitive"]:
        lines.append("(none marked)")
    for entry in report["sensitive"]:
        lines.append(f"* {entry['feature']} "
                     f"(privileged: {entry['privileged'] or 'auto'}, "
                     f"rate range {entry['spd_range']:.4f})")
        for view, values in entry["metrics"].items():
            for m in values:
                shown = "undefined" if m["value"] is None else f"{m['value']:+.4f}"
                lines.append(f"    {view:7s} {m['kind']:16s} {shown}")
    lines.append("")
    lines.append("Causal graph")
    lines.append("------------")
    meta = report["graph"]["meta"]
    lines.append(f"edges (omega={meta.get('omega')}, lambda={meta.get('lambda')}, "
                 f"converged={meta.get('converged')}):")
    for e in report["graph"]["edges"]:
        lines.append(f"  {e['src']} -> {e['dst']}  strength {e['strength']:.3f}")
    if not report["graph"]["edges"]:
        lines.append("  (no edges above threshold)")
    lines.append("")
    lines.append("Subgroup combinations (low to high acceptance)")
    lines.append("----------------------------------------------")
    if not report["combinations"]:
        lines.append("(none saved)")
    for card in report["combinations"]:
        constraint = " AND ".join(f"{c['feature']}={c['value']}"
                                  for c in card["constraints"])
        rate = "undefined" if card["rate"] is None else f"{card['rate']:.4f}"
        unfair = "  [flagged unfair]" if card["unfair"] else ""
        lines.append(f"* {constraint}: n={card['count']}, rate {rate}{unfair}")
    lines.append("")
    lines.append("Flags for follow-up")
    lines.append("-------------------")
    flags = report["flags"]
    if not flags["features"] and not flags["subgroups"]:
        lines.append("(nothing flagged)")
    for f in flags["features"]:
        lines.append(f"* feature {f['feature']} flagged unfair "
                     f"(rate range {f['spd_range']:.4f})")
    for c in flags["subgroups"]:
        constraint = " AND ".join(f"{x['feature']}={x['value']}"
                                  for x in c["constraints"])
        lines.append(f"* subgroup {constraint} flagged unfair (n={c['count']})")
    lines.append("")
    if report["model"]:
        m = report["model"]
        lines.append("Model")
        lines.append("-----")
        lines.append(f"family {m['family']}, l2={m['l2']}, "
                     f"split seed {m['split_seed']}")
        lines.append(f"train/test rows: {m['train_rows']}/{m['test_rows']}, "
                     f"test accuracy {m['test_accuracy']:.4f}")
        lines.append("")
    lines.append("Method notes")
    lines.append("------------")
    for key in sorted(report["decisions"]):
        lines.append(f"{key}: {report['decisions'][key]}")
    lines.append("")
    return "\n".join(lines)


def load_schema() -> dict:
    """The published JSON schema for report documents."""
    text = resources.files("fairdesk").joinpath("report.schema.json").read_text()
    return json.loads(text)
