"""Investigation sessions: the setup wizard state machine, engine caches,
mutations and every read model the UI consumes."""
from __future__ import annotations

import hashlib
import json
import threading

import numpy as np

from . import metrics as M
from .causal import (
    CausalGraph,
    StructureConfig,
    aggregate_to_features,
    drill_down,
    encode,
    learn_structure,
    same_feature_mask,
)
from .config import EngineConfig
from .data import (
    DataTable,
    filter_rows,
    group_indices,
    load_csv,
    summarize_feature,
    synth_loans,
)
from .errors import NotFoundError, StateError, ValidationError
from .expr import CustomMetricDef, bind, evaluate_column, parse
from .metrics import MODEL_VIEW, metric_suite, spd_range
from .model import (
    SplitSpec,
    contributions,
    feature_importance,
    predict_all,
    split,
    train_logistic,
)
from .similarity import SimilarityIndex, compare_pair, scatter
from .subgroups import Combination, build_card, order_cards

ROLE_DATA_SCIENTIST = "data_scientist"
ROLE_DOMAIN_EXPERT = "domain_expert"
ROLES = (ROLE_DATA_SCIENTIST, ROLE_DOMAIN_EXPERT)

STEP_DATASET = "dataset"
STEP_TARGET = "target"
STEP_MODEL = "model"
STEP_SENSITIVE = "sensitive"
STEP_METRICS = "metrics"

#: wizard step order per role: five steps for data scientists, four for
#: domain experts (model choice hidden, metric choice fixed to SPD)
ROLE_STEPS = {
    ROLE_DATA_SCIENTIST: (STEP_DATASET, STEP_TARGET, STEP_MODEL,
                          STEP_SENSITIVE, STEP_METRICS),
    ROLE_DOMAIN_EXPERT: (STEP_DATASET, STEP_TARGET, STEP_SENSITIVE,
                         STEP_METRICS),
}

VIEWS = ("dataset", "model")


def _require_view(view: str):
    if view not in VIEWS:
        raise ValidationError(f"unknown view {view!r}; expected dataset|model")


class Session:
    def __init__(self, session_id: str, role: str,
                 config: EngineConfig | None = None):
        if role not in ROLES:
            raise ValidationError(f"unknown role {role!r}")
        self.id = session_id
        self.role = role
        self.config = config or EngineConfig()
        self.version = 0
        self.table: DataTable | None = None
        self.dataset_source: dict | None = None
        self.model_config: dict | None = None
        self.sensitive: dict = {}          # feature -> privileged list | None
        self.chosen_metrics: list = []
        self.custom_metrics: list = []
        self.unfair_features: set = set()
        self.unfair_subgroups: set = set()
        self.combinations: dict = {}       # id -> Combination
        self.selected_application: int | None = None
        self.split_seed: int | None = None
        self._done_steps: set = set()
        self._model = None
        self._predictions = None
        self._split = None
        self._graph = None
        self._graph_result = None
        self._graph_fingerprint = None
        self._similarity: SimilarityIndex | None = None
        self._lock = threading.RLock()
        if role == ROLE_DOMAIN_EXPERT:
            self.chosen_metrics = [M.SPD]
            self.model_config = {"family": "logistic", "l2": self.config.l2}

    # -- wizard ------------------------------------------------------------

    def steps(self) -> list[dict]:
        out = []
        for name in ROLE_STEPS[self.role]:
            fixed = self.role == ROLE_DOMAIN_EXPERT and name == STEP_METRICS
            out.append({"step": name, "done": name in self._done_steps or fixed,
                        "fixed": fixed})
        return out

    @property
    def ready(self) -> bool:
        return all(s["done"] for s in self.steps())

    def _require_step_order(self, step: str):
        order = ROLE_STEPS[self.role]
        if step not in order:
            raise StateError(f"step {step!r} does not apply to role {self.role}")
        for previous in order[:order.index(step)]:
            done = previous in self._done_steps or (
                self.role == ROLE_DOMAIN_EXPERT and previous == STEP_METRICS)
            if not done:
                raise StateError(f"step {previous!r} must be completed first")

    def _bump(self):
        self.version += 1

    def set_dataset(self, *, synth: dict | None = None,
                    csv_text: str | bytes | None = None):
        """Wizard step 1: load an uploaded CSV or generate synthetic rows.

        Resets every downstream choice and cache.
        """
        self._require_step_order(STEP_DATASET)
        if (synth is None) == (csv_text is None):
            raise ValidationError("provide exactly one of synth or csv")
        if synth is not None:
            seed = int(synth.get("seed", 0))
            rows = int(synth.get("rows", 1000))
            if rows > self.config.max_rows:
                raise ValidationError(f"row cap is {self.config.max_rows}")
            table = synth_loans(seed, rows)
            source = {"synth": {"seed": seed, "rows": rows}}
        else:
            raw = csv_text.encode("utf-8") if isinstance(csv_text, str) else csv_text
            if len(raw) > self.config.max_upload_bytes:
                raise ValidationError("upload exceeds the 50 MB cap")
            table = load_csv(raw, self.config.kind_threshold)
            if table.n_rows > self.config.max_rows:
                raise ValidationError(f"row cap is {self.config.max_rows}")
            source = {"csv": {"rows": table.n_rows,
                              "sha256": hashlib.sha256(raw).hexdigest()}}
            table = DataTable(table.schema, table.columns, table.n_rows)
        with self._lock:
            self.table = table
            self.dataset_source = source
            self.sensitive = {}
            self.custom_metrics = []
            self.unfair_features = set()
            self.unfair_subgroups = set()
            self.combinations = {}
            self.selected_application = None
            if self.role == ROLE_DATA_SCIENTIST:
                self.chosen_metrics = []
                self.model_config = None
            self._done_steps = {STEP_DATASET}
            self._invalidate_model()
            self._invalidate_graph()
            self._similarity = None
            self._bump()

    def set_target(self, feature: str, positive_label: str):
        self._require_step_order(STEP_TARGET)
        with self._lock:
            # synthetic tables come with a pre-designated target; re-designate
            base = self.table
            if base.target is not None:
                base = DataTable(base.schema, base.columns, base.n_rows,
                                 derived=base.derived)
            self.table = base.with_target(feature, positive_label)
            self._done_steps.add(STEP_TARGET)
            self._invalidate_model()
            self._invalidate_graph()
            self._bump()

    def set_model(self, family: str = "logistic", l2: float | None = None):
        if self.role == ROLE_DOMAIN_EXPERT:
            raise StateError("model choice is not part of the domain-expert wizard")
        self._require_step_order(STEP_MODEL)
        if family != "logistic":
            raise ValidationError(
                f"unknown model family {family!r}; available: logistic")
        with self._lock:
            self.model_config = {"family": family,
                                 "l2": self.config.l2 if l2 is None else float(l2)}
            self._done_steps.add(STEP_MODEL)
            self._invalidate_model()
            self._bump()

    def set_sensitive(self, features: dict):
        """Wizard step: mark sensitive features, each with an optional
        explicit privileged value set (None = engine default)."""
        self._require_step_order(STEP_SENSITIVE)
        with self._lock:
            validated = {}
            for feature, privileged in features.items():
                self.table.column_schema(feature)  # raises on unknown
                if privileged is not None:
                    domain = set(group_indices(self.table, feature,
                                               self.config.k_max))
                    extra = set(privileged) - domain
                    if extra:
                        raise ValidationError(
                            f"privileged values {sorted(extra)} not in {feature!r}")
                    privileged = sorted(privileged)
                validated[feature] = privileged
            self.sensitive = validated
            self._done_steps.add(STEP_SENSITIVE)
            self._bump()

    def set_metrics(self, kinds) -> None:
        self._require_step_order(STEP_METRICS)
        kinds = list(kinds)
        unknown = [k for k in kinds if k not in M.ALL_KINDS]
        if unknown:
            raise ValidationError(f"unknown metric kind(s): {', '.join(unknown)}")
        if self.role == ROLE_DOMAIN_EXPERT and kinds != [M.SPD]:
            raise ValidationError("domain-expert sessions use the fixed "
                                  "metric set [SPD]")
        if not kinds:
            raise ValidationError("choose at least one metric")
        with self._lock:
            self.chosen_metrics = kinds
            self._done_steps.add(STEP_METRICS)
            self._bump()

    # -- invalidation and caches --------------------------------------------

    def _invalidate_model(self):
        self._model = None
        self._predictions = None
        self._split = None

    def _invalidate_graph(self):
        self._graph = None
        self._graph_result = None
        self._graph_fingerprint = None

    def _require_ready(self):
        if not self.ready:
            missing = [s["step"] for s in self.steps() if not s["done"]]
            raise StateError(f"session not ready; missing step(s): {', '.join(missing)}")

    def _require_model(self):
        if self._model is None:
            raise StateError("model view requires a trained model; "
                             "run train_model first")

    def graph_fingerprint(self) -> str:
        payload = {
            "source": self.dataset_source,
            "target": [self.table.target, self.table.positive_label],
            "custom": [m.to_json() for m in self.custom_metrics],
            "omega": self.config.omega,
            "l1": self.config.l1,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- long computations (wrapped in jobs by the HTTP layer) --------------

    def compute_graph(self) -> CausalGraph:
        """Learn the causal structure and cache the feature graph."""
        self._require_ready()
        fingerprint = self.graph_fingerprint()
        with self._lock:
            if self._graph is not None and self._graph_fingerprint == fingerprint:
                return self._graph
        cfg = StructureConfig(l1_penalty=self.config.l1,
                              edge_threshold=self.config.omega)
        enc = encode(self.table)
        result = learn_structure(enc, cfg, forbidden=same_feature_mask(enc))
        graph = aggregate_to_features(
            result.W, enc, self.table, cfg.edge_threshold,
            spd_ranges=self._spd_ranges("dataset"),
            sensitive=set(self.sensitive), unfair=set(self.unfair_features),
            meta={"converged": result.converged, "h": result.h,
                  "lambda": cfg.l1_penalty, "fingerprint": fingerprint})
        with self._lock:
            self._graph = graph
            self._graph_result = result
            self._graph_fingerprint = fingerprint
            self._bump()
        return graph

    def train_model(self, seed: int):
        """Fit the decision model on a stratified train split and cache
        held-out plus full-table predictions."""
        self._require_ready()
        if self.model_config is None:
            raise StateError("model configuration missing")
        spec = SplitSpec(int(seed), self.config.test_fraction)
        train_rows, test_rows = split(self.table, spec)
        artifact = train_logistic(self.table, rows=train_rows,
                                  l2=self.model_config["l2"])
        predictions = predict_all(artifact, self.table)
        with self._lock:
            self.split_seed = int(seed)
            self._split = (train_rows, test_rows)
            self._model = artifact
            self._predictions = predictions
            self._bump()
        return artifact

    # -- mutations -----------------------------------------------------------

    def toggle_sensitive(self, feature: str, value: bool):
        self._require_ready()
        self.table.column_schema(feature)
        with self._lock:
            if value:
                self.sensitive.setdefault(feature, None)
            else:
                self.sensitive.pop(feature, None)
            self._bump()

    def flag_unfair(self, kind: str, identifier: str, unfair: bool):
        self._require_ready()
        with self._lock:
            if kind == "feature":
                self.table.column_schema(identifier)
                if unfair:
                    self.unfair_features.add(identifier)
                else:
                    self.unfair_features.discard(identifier)
            elif kind == "subgroup":
                if identifier not in self.combinations:
                    raise NotFoundError(f"unknown combination id {identifier!r}")
                if unfair:
                    self.unfair_subgroups.add(identifier)
                else:
                    self.unfair_subgroups.discard(identifier)
            else:
                raise ValidationError("flag kind must be feature or subgroup")
            self._bump()

    def add_combination(self, constraints) -> Combination:
        self._require_ready()
        combo = Combination(tuple((str(f), str(v)) for f, v in constraints),
                            self.config.max_constraints)
        build_card(self.table, combo, min_support=0)  # validates the domain
        with self._lock:
            self.combinations[combo.id] = combo
            self._bump()
        return combo

    def remove_combination(self, combo_id: str):
        self._require_ready()
        with self._lock:
            if combo_id not in self.combinations:
                raise NotFoundError(f"unknown combination id {combo_id!r}")
            del self.combinations[combo_id]
            self.unfair_subgroups.discard(combo_id)
            self._bump()

    def add_custom_metric(self, name: str, source_text: str) -> CustomMetricDef:
        """Parse, bind and materialize a derived attribute column."""
        self._require_ready()
        if any(m.name == name for m in self.custom_metrics):
            raise ValidationError(f"custom metric {name!r} already exists")
        if any(s.name == name for s in self.table.schema):
            raise ValidationError(f"{name!r} collides with a dataset column")
        ast = parse(source_text)
        bind(ast, self.table)
        cells, _spec = evaluate_column(ast, self.table, self.config.k_max)
        definition = CustomMetricDef(name, source_text)
        with self._lock:
            self.table = self.table.with_derived_column(name, cells)
            self.custom_metrics.append(definition)
            self._invalidate_graph()  # the graph gains a node
            self._bump()
        return definition

    def select_application(self, row: int):
        self._require_ready()
        if not 0 <= row < self.table.n_rows:
            raise NotFoundError(f"unknown application id {row}")
        with self._lock:
            self.selected_application = row
            self._bump()

    # -- read models ----------------------------------------------------------

    def _positive_flags(self, view: str):
        """Per-row positive flags for the requested view (recorded vs
        predicted); undefined predictions count as not-positive."""
        if view == "dataset":
            return self.table.positives()
        self._require_model()
        return np.array([p.defined and p.label == self.table.positive_label
                         for p in self._predictions], dtype=bool)

    def _spd_ranges(self, view: str) -> dict:
        preds = None if view == "dataset" else self._positive_flags("model")
        out = {}
        for name in self.table.feature_names():
            if name == self.table.target:
                out[name] = 0.0
                continue
            out[name] = spd_range(self.table, name, preds, self.config.k_max)
        return out

    def overview(self, view: str = "dataset") -> dict:
        self._require_ready()
        _require_view(view)
        if view == "dataset":
            rows = self.table.n_rows
            rate = float(self.table.positives().mean())
        else:
            self._require_model()
            _train, test = self._split
            flags = self._positive_flags("model")
            rows = len(test)
            rate = float(flags[test].mean()) if test else 0.0
        return {
            "view": view,
            "instances": rows,
            "acceptance_rate": rate,
            "target": self.table.target,
            "positive_label": self.table.positive_label,
            "features": [
                {"name": s.name, "kind": s.kind, "missing_count": s.missing_count,
                 "derived": s.name in self.table.derived}
                for s in self.table.schema],
        }

    def graph_payload(self, view: str = "dataset", drill=None) -> dict:
        self._require_ready()
        _require_view(view)
        graph = self.compute_graph()
        spd_ranges = self._spd_ranges(view)
        nodes = []
        importance = feature_importance(self._model) if (
            view == MODEL_VIEW and self._model is not None) else {}
        if view == MODEL_VIEW:
            self._require_model()
        shown = graph if drill is None else drill_down(graph, drill)
        for node in shown.nodes:
            item = {
                "feature": node.feature,
                "in_degree": node.in_degree,
                "out_degree": node.out_degree,
                "spd_range": spd_ranges.get(node.feature, 0.0),
                "sensitive": node.feature in self.sensitive,
                "target": node.feature == self.table.target,
                "unfair": node.feature in self.unfair_features,
            }
            if view == MODEL_VIEW:
                item["importance"] = importance.get(node.feature, 0.0)
            nodes.append(item)
        return {
            "view": view,
            "nodes": nodes,
            "edges": [{"src": e.src, "dst": e.dst, "strength": e.strength}
                      for e in shown.edges],
            "meta": dict(graph.meta),
        }

    def feature_info(self, feature: str, view: str = "dataset") -> dict:
        self._require_ready()
        _require_view(view)
        schema = self.table.column_schema(feature)
        graph = self.compute_graph()
        node = graph.node(feature) if any(
            n.feature == feature for n in graph.nodes) else None
        preds = None
        if view == MODEL_VIEW:
            self._require_model()
            preds = self._positive_flags("model")
        summary = summarize_feature(self.table, feature, preds, self.config.k_max)
        groups = []
        confidence_by_group = {}
        if view == MODEL_VIEW:
            confidences = [p.confidence if p.defined else None
                           for p in self._predictions]
            for label, idx in group_indices(self.table, feature,
                                            self.config.k_max).items():
                vals = [confidences[i] for i in idx if confidences[i] is not None]
                confidence_by_group[label] = (
                    float(np.mean(vals)) if vals else None)
        for label, count, pos, rate in summary.groups:
            item = {"value": label, "count": count, "positive": pos, "rate": rate}
            if view == MODEL_VIEW:
                item["mean_confidence"] = confidence_by_group.get(label)
            groups.append(item)
        metric_values = self.feature_metrics(feature, view)
        return {
            "view": view,
            "feature": feature,
            "kind": schema.kind,
            "missing_count": schema.missing_count,
            "in_degree": node.in_degree if node else 0,
            "out_degree": node.out_degree if node else 0,
            "sensitive": feature in self.sensitive,
            "unfair": feature in self.unfair_features,
            "metrics": [m.to_json() for m in metric_values],
            "groups": groups,
            "overall_rate": summary.overall_rate,
        }

    def feature_metrics(self, feature: str, view: str):
        """Chosen metric suite for one feature; model view scores the
        held-out test split."""
        if feature == self.table.target:
            return []
        privileged = self.sensitive.get(feature)
        kinds = list(self.chosen_metrics) or [M.SPD]
        if view == "dataset":
            return metric_suite(self.table, feature, kinds,
                                privileged=privileged)
        self._require_model()
        _train, test = self._split
        flags = self._positive_flags("model")
        preds = [bool(flags[i]) for i in test]
        labels = [bool(b) for b in self.table.positives()[test]]
        return metric_suite(self.table, feature, kinds, view=MODEL_VIEW,
                            privileged=privileged, predictions=preds,
                            labels=labels, member_rows=test)

    def relationship_info(self, src: str, dst: str, view: str = "dataset") -> dict:
        """Stacked intersection percentages: how the effect feature's groups
        distribute within each cause group."""
        self._require_ready()
        _require_view(view)
        if src == dst:
            raise ValidationError("pick two distinct features")
        src_groups = group_indices(self.table, src, self.config.k_max)
        dst_groups = group_indices(self.table, dst, self.config.k_max)
        dst_of_row = {}
        for label, idx in dst_groups.items():
            for i in idx:
                dst_of_row[i] = label
        bars = []
        for label, idx in src_groups.items():
            counted = [dst_of_row[i] for i in idx if i in dst_of_row]
            total = len(counted)
            parts = []
            for dst_label in dst_groups:
                count = sum(1 for v in counted if v == dst_label)
                parts.append({
                    "value": dst_label,
                    "count": count,
                    "pct": 100.0 * count / total if total else 0.0,
                })
            bars.append({"value": label, "total": total, "parts": parts})
        return {"view": view, "src": src, "dst": dst, "bars": bars}

    def combination_cards(self, view: str = "dataset") -> list[dict]:
        self._require_ready()
        _require_view(view)
        preds = None if view == "dataset" else self._positive_flags("model")
        cards = []
        for combo_id, combo in self.combinations.items():
            cards.append(build_card(
                self.table, combo, predictions=preds,
                unfair=combo_id in self.unfair_subgroups,
                min_support=self.config.min_support))
        return [c.to_json() for c in order_cards(cards)]

    def dataset_page(self, view: str = "dataset", filters=(), sort: str | None = None,
                     descending: bool = False, page: int = 0,
                     page_size: int = 25) -> dict:
        self._require_ready()
        _require_view(view)
        if not 1 <= page_size <= 200:
            raise ValidationError("page_size must be between 1 and 200")
        if page < 0:
            raise ValidationError("page must be >= 0")
        rows = filter_rows(self.table, list(filters), self.config.k_max)
        if sort is not None:
            cells = self.table.columns[self.table.column_schema(sort).name]
            def sort_key(i):
                v = cells[i]
                return (v is None, v if v is not None else 0, i)
            rows = sorted(rows, key=sort_key, reverse=False)
            if descending:
                present = [i for i in rows if cells[i] is not None][::-1]
                missing = [i for i in rows if cells[i] is None]
                rows = present + missing
        total = len(rows)
        window = rows[page * page_size:(page + 1) * page_size]
        preds = None
        if view == MODEL_VIEW:
            self._require_model()
            preds = self._predictions
        names = [s.name for s in self.table.schema]
        out_rows = []
        for i in window:
            record = {"id": i,
                      "values": {n: self.table.columns[n][i] for n in names}}
            if preds is not None:
                p = preds[i]
                record["prediction"] = p.to_json()
            out_rows.append(record)
        return {"view": view, "total": total, "page": page,
                "page_size": page_size, "columns": names, "rows": out_rows}

    def application_detail(self, row: int, view: str = "dataset") -> dict:
        self._require_ready()
        _require_view(view)
        if not 0 <= row < self.table.n_rows:
            raise NotFoundError(f"unknown application id {row}")
        names = [s.name for s in self.table.schema]
        out = {"view": view, "id": row,
               "values": {n: self.table.columns[n][row] for n in names}}
        if view == MODEL_VIEW:
            self._require_model()
            pred = self._predictions[row]
            out["prediction"] = pred.to_json()
            if pred.defined:
                contrib = contributions(self._model, self.table, row)
                out["contributions"] = {
                    "intercept": contrib.intercept,
                    "logit": contrib.logit,
                    "items": [{"feature": c.feature, "value": c.value,
                               "contribution": c.contribution, "sign": c.sign,
                               "depth": c.depth} for c in contrib.items],
                }
            else:
                out["contributions"] = None
        return out

    def _similarity_index(self) -> SimilarityIndex:
        if self._similarity is None:
            self._similarity = SimilarityIndex(self.table)
        return self._similarity

    def scatter_payload(self, selected: int | None = None,
                        view: str = "dataset") -> dict:
        self._require_ready()
        _require_view(view)
        if selected is None:
            selected = self.selected_application
        if selected is None:
            raise StateError("select an application first")
        preds = None
        if view == MODEL_VIEW:
            self._require_model()
            preds = self._predictions
        points = scatter(self._similarity_index(), selected, view, preds)
        return {"view": view, "selected": selected,
                "points": [p.to_json() for p in points]}

    def compare_payload(self, row_a: int, row_b: int) -> dict:
        self._require_ready()
        return {"a": row_a, "b": row_b,
                "features": [s.to_json()
                             for s in compare_pair(self.table, row_a, row_b)]}

    # -- snapshot persistence -------------------------------------------------

    def snapshot(self) -> dict:
        """JSON-serializable persistent state (caches excluded)."""
        return {
            "id": self.id,
            "role": self.role,
            "version": self.version,
            "dataset_source": self.dataset_source,
            "target": self.table.target if self.table else None,
            "positive_label": self.table.positive_label if self.table else None,
            "model_config": self.model_config,
            "sensitive": self.sensitive,
            "chosen_metrics": self.chosen_metrics,
            "custom_metrics": [m.to_json() for m in self.custom_metrics],
            "unfair_features": sorted(self.unfair_features),
            "unfair_subgroups": sorted(self.unfair_subgroups),
            "combinations": [c.to_json() for c in self.combinations.values()],
            "selected_application": self.selected_application,
            "split_seed": self.split_seed,
            "done_steps": sorted(self._done_steps),
        }
