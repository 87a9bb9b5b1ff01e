"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them inline)."""
import json
import math
import time

import numpy as np
import pytest

import fairdesk.cli
from fairdesk.causal import (
    StructureConfig,
    acyclicity,
    acyclicity_grad,
    learn_structure,
    squared_loss,
)
from fairdesk.config import EngineConfig
from fairdesk.data import CATEGORICAL, NUMERIC, DataTable, summarize_feature, synth_loans
from fairdesk.expr import ExprSyntaxError, equivalent, evaluate_row, parse, print_expr
from fairdesk.metrics import (
    ALL_KINDS,
    AVG_ODDS_DIFF,
    DISPARATE_IMPACT,
    EQ_OPP_DIFF,
    SPD,
    THEIL,
    GroupSpec,
    average_odds_diff,
    disparate_impact,
    equal_opportunity_diff,
    metric_suite,
    spd,
    spd_range,
    theil_index,
)
from fairdesk.model import ModelArtifact, contributions, predict, train_logistic
from fairdesk.report import load_schema
from fairdesk.session import Session
from fairdesk.similarity import SimilarityIndex, row_similarity, scatter

from expr_oracle import python_eval, random_ast
from oracles import (
    oracle_avgodds,
    oracle_di,
    oracle_eqopp,
    oracle_pearson,
    oracle_spd,
    oracle_spd_range,
    oracle_theil,
)
from sem_oracle import random_dag_weights, shd, simulate_sem


def announce(name, ok):
    print(f"{'PASS' if ok else 'FAIL'}  {name}")
    assert ok, name


def random_mixed_table(rng):
    """<=200 rows, <=6 features: one categorical group feature, fillers,
    and a binary target."""
    n = int(rng.integers(20, 201))
    n_features = int(rng.integers(2, 7))
    levels = int(rng.integers(2, 5))
    group = [str(v) for v in rng.integers(0, levels, n)]
    y = [bool(v) for v in rng.random(n) < rng.uniform(0.15, 0.85)]
    if not any(y):
        y[0] = True
    if all(y):
        y[0] = False
    names = ["g"]
    kinds = {"g": CATEGORICAL}
    columns = {"g": group}
    for extra in range(n_features - 2):
        name = f"f{extra}"
        names.append(name)
        if rng.random() < 0.5:
            kinds[name] = NUMERIC
            columns[name] = rng.normal(0, 1, n).tolist()
        else:
            kinds[name] = CATEGORICAL
            columns[name] = [str(v) for v in rng.integers(0, 3, n)]
    names.append("r")
    kinds["r"] = CATEGORICAL
    columns["r"] = ["Y" if b else "N" for b in y]
    table = DataTable.build(names, kinds, columns, target="r", positive_label="Y")
    preds = [bool(v) for v in rng.random(n) < 0.5]
    return table, y, preds


class TestCriterion1MetricOracleEquivalence:
    def test_fifty_random_tables(self):
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        for _ in range(50):
            table, y, preds = random_mixed_table(rng)
            levels = sorted(set(table.columns["g"]))
            k = int(rng.integers(1, len(levels)))
            priv = frozenset(rng.choice(levels, size=k, replace=False).tolist())
            in_priv = [v in priv for v in table.columns["g"]]
            group = GroupSpec("g", priv)

            m = spd(y, table, group)
            e = oracle_spd(y, in_priv)
            assert (m.value is None) == (e is None)
            if e is not None:
                assert abs(m.value - e) <= 1e-12

            m = disparate_impact(y, table, group)
            e = oracle_di(y, in_priv)
            assert (m.value is None) == (e is None)
            if e is not None:
                assert abs(m.value - e) <= 1e-12

            m = equal_opportunity_diff(preds, y, table, group)
            e = oracle_eqopp(preds, y, in_priv)
            assert (m.value is None) == (e is None)
            if e is not None:
                assert abs(m.value - e) <= 1e-12

            m = average_odds_diff(preds, y, table, group)
            e = oracle_avgodds(preds, y, in_priv)
            assert (m.value is None) == (e is None)
            if e is not None:
                assert abs(m.value - e) <= 1e-12

            m = theil_index(preds, y)
            e = oracle_theil(preds, y)
            assert abs(m.value - e) <= 1e-9

            rates = {}
            for i, v in enumerate(table.columns["g"]):
                rates.setdefault(v, []).append(y[i])
            group_rates = [sum(r) / len(r) for r in rates.values()]
            assert abs(spd_range(table, "g") - oracle_spd_range(group_rates)) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0
        announce(f"metric oracle equivalence (50 tables, {elapsed:.2f}s)", True)


class TestCriterion2MetricAlgebra:
    def test_antisymmetry_swap(self):
        rng = np.random.default_rng(7)
        violations = 0
        for _ in range(1000):
            table, y, preds = random_mixed_table(rng)
            levels = sorted(set(table.columns["g"]))
            k = int(rng.integers(1, len(levels)))
            priv = frozenset(rng.choice(levels, size=k, replace=False).tolist())
            comp = frozenset(levels) - priv
            a = spd(y, table, GroupSpec("g", priv))
            b = spd(y, table, GroupSpec("g", comp))
            if a.defined and b.defined and abs(a.value + b.value) > 1e-12:
                violations += 1
            da = disparate_impact(y, table, GroupSpec("g", priv))
            db = disparate_impact(y, table, GroupSpec("g", comp))
            if (da.defined and db.defined and da.value > 0
                    and abs(db.value - 1.0 / da.value) > 1e-9):
                violations += 1
            ea = equal_opportunity_diff(preds, y, table, GroupSpec("g", priv))
            eb = equal_opportunity_diff(preds, y, table, GroupSpec("g", comp))
            if ea.defined and eb.defined and abs(ea.value + eb.value) > 1e-12:
                violations += 1
            oa = average_odds_diff(preds, y, table, GroupSpec("g", priv))
            ob = average_odds_diff(preds, y, table, GroupSpec("g", comp))
            if oa.defined and ob.defined and abs(oa.value + ob.value) > 1e-12:
                violations += 1
        announce(f"metric antisymmetry under privileged swap ({violations} violations)",
                 violations == 0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(8)
        violations = 0
        for _ in range(1000):
            n = int(rng.integers(10, 120))
            levels = int(rng.integers(2, 4))
            g = [str(v) for v in rng.integers(0, levels, n)]
            y = [bool(v) for v in rng.random(n) < 0.5]
            if not any(y):
                y[0] = True
            if all(y):
                y[0] = False
            preds = [bool(v) for v in rng.random(n) < 0.5]
            order = rng.permutation(n)
            def build(gg, yy):
                return DataTable.build(
                    ["g", "r"], {"g": CATEGORICAL, "r": CATEGORICAL},
                    {"g": gg, "r": ["Y" if b else "N" for b in yy]},
                    target="r", positive_label="Y")
            t1 = build(g, y)
            t2 = build([g[i] for i in order], [y[i] for i in order])
            p2 = [preds[i] for i in order]
            priv = frozenset({g[0]})
            if priv >= set(g):
                continue
            for make in (
                lambda t, yy, pp: spd(yy, t, GroupSpec("g", priv)),
                lambda t, yy, pp: disparate_impact(yy, t, GroupSpec("g", priv)),
                lambda t, yy, pp: equal_opportunity_diff(pp, yy, t, GroupSpec("g", priv)),
                lambda t, yy, pp: average_odds_diff(pp, yy, t, GroupSpec("g", priv)),
                lambda t, yy, pp: theil_index(pp, yy),
            ):
                a = make(t1, y, preds)
                b = make(t2, [y[i] for i in order], p2)
                if a.defined != b.defined:
                    violations += 1
                elif a.defined and abs(a.value - b.value) > 1e-12:
                    violations += 1
        announce(f"metric permutation invariance ({violations} violations)",
                 violations == 0)

    def test_range_bounds(self):
        rng = np.random.default_rng(9)
        violations = 0
        for _ in range(1000):
            table, y, preds = random_mixed_table(rng)
            levels = sorted(set(table.columns["g"]))
            priv = frozenset({levels[0]})
            if priv >= set(levels):
                continue
            out = [
                spd(y, table, GroupSpec("g", priv)),
                disparate_impact(y, table, GroupSpec("g", priv)),
                equal_opportunity_diff(preds, y, table, GroupSpec("g", priv)),
                average_odds_diff(preds, y, table, GroupSpec("g", priv)),
                theil_index(preds, y),
            ]
            for m in out:
                if not m.defined:
                    continue
                if m.kind in (SPD, EQ_OPP_DIFF, AVG_ODDS_DIFF):
                    if not -1.0 <= m.value <= 1.0:
                        violations += 1
                elif m.kind == DISPARATE_IMPACT and m.value < 0:
                    violations += 1
                elif m.kind == THEIL and m.value < 0:
                    violations += 1
            r = spd_range(table, "g")
            if not 0.0 <= r <= 1.0:
                violations += 1
        announce(f"metric range bounds ({violations} violations)", violations == 0)


class TestCriterion3CausalRecovery:
    def test_planted_dags(self):
        cfg = StructureConfig()
        hits = 0
        worst = 0.0
        for seed in range(10):
            rng = np.random.default_rng(1000 + seed)
            W_true, perm = random_dag_weights(rng, d=8, n_edges=8)
            X = simulate_sem(rng, W_true, perm, 1000, noise=0.5)
            start = time.perf_counter()
            result = learn_structure(X, cfg)
            elapsed = time.perf_counter() - start
            worst = max(worst, elapsed)
            W_est = result.W.copy()
            W_est[np.abs(W_est) < cfg.edge_threshold] = 0.0
            if shd(W_true, W_est) <= 2:
                hits += 1
        assert worst < 60.0
        announce(f"planted-DAG recovery ({hits}/10 seeds, worst {worst:.1f}s)",
                 hits >= 8)

    def test_independent_columns(self):
        cfg = StructureConfig()
        empty = 0
        for seed in range(10):
            rng = np.random.default_rng(2000 + seed)
            X = rng.standard_normal((1000, 8))
            result = learn_structure(X, cfg)
            W = result.W.copy()
            W[np.abs(W) < cfg.edge_threshold] = 0.0
            if (W != 0).sum() == 0:
                empty += 1
        announce(f"independent columns stay empty ({empty}/10 seeds)", empty >= 9)


class TestCriterion4AcyclicityAnalytics:
    def test_closed_forms_and_gradients(self):
        ok = acyclicity(np.zeros((5, 5))) == 0.0
        two_cycle = acyclicity(np.array([[0.0, 1.0], [1.0, 0.0]]))
        ok = ok and abs(two_cycle - (2 * math.cosh(1.0) - 2.0)) <= 1e-9
        rng = np.random.default_rng(11)
        X = rng.normal(0, 1, (80, 5))
        for _ in range(20):
            W = rng.normal(0, 0.4, (5, 5))
            _, G = acyclicity_grad(W)
            G_fd = _finite_diff(acyclicity, W)
            ok = ok and _rel_err(G, G_fd) <= 1e-5
            _, GL = squared_loss(W, X)
            GL_fd = _finite_diff(lambda M: squared_loss(M, X)[0], W)
            ok = ok and _rel_err(GL, GL_fd) <= 1e-5
        announce("acyclicity analytics and gradients", ok)


def _finite_diff(f, W, eps=1e-6):
    G = np.zeros_like(W)
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            up, down = W.copy(), W.copy()
            up[i, j] += eps
            down[i, j] -= eps
            G[i, j] = (f(up) - f(down)) / (2 * eps)
    return G


def _rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-8))


class TestCriterion5PlantedBiasPipeline:
    def test_synth_to_report(self):
        start = time.perf_counter()
        session = Session("acc5", "data_scientist", EngineConfig())
        session.set_dataset(synth={"seed": 42, "rows": 5000})
        session.set_target("result", "accepted")
        session.set_model("logistic")
        session.set_sensitive({"citizenship": None})
        session.set_metrics([SPD, DISPARATE_IMPACT])
        values = metric_suite(session.table, "citizenship", [SPD])
        spd_value = values[0].value
        from fairdesk.report import build_report
        report = build_report(session)
        elapsed = time.perf_counter() - start
        edges = {(e["src"], e["dst"]) for e in report["graph"]["edges"]}
        ok = abs(spd_value) >= 0.10
        ok = ok and ("citizenship", "credit_risk_level") in edges
        ok = ok and elapsed < 120.0
        announce(f"planted-bias pipeline (|SPD|={abs(spd_value):.3f}, "
                 f"{elapsed:.0f}s)", ok)


class TestCriterion6ModelAudit:
    def test_model_contract(self):
        xs = [-(1.0 + 0.5 * i) for i in range(25)] + \
             [1.0 + 0.5 * i for i in range(25)]
        toy = DataTable.build(
            ["x", "r"], {"x": NUMERIC, "r": CATEGORICAL},
            {"x": xs, "r": ["reject"] * 25 + ["accept"] * 25},
            target="r", positive_label="accept")
        model = train_logistic(toy)
        outcomes = toy.positives()
        correct = sum(1 for i in range(toy.n_rows)
                      if (predict(model, toy, i).label == "accept") == outcomes[i])
        ok = correct == toy.n_rows

        table = synth_loans(21, 400)
        model2 = train_logistic(table)
        rng = np.random.default_rng(3)
        for row in rng.integers(0, 400, 100):
            c = contributions(model2, table, int(row))
            total = sum(i.contribution for i in c.items) + c.intercept
            ok = ok and abs(total - c.logit) <= 1e-9

        again = train_logistic(table)
        ok = ok and np.array_equal(model2.weights, again.weights)
        ok = ok and model2.intercept == again.intercept

        flat = ModelArtifact(np.zeros_like(model2.weights), 0.0, model2.encoder,
                             model2.l2, 1, 0.0, True, model2.feature_columns)
        boundary = predict(flat, table, 0)
        ok = ok and boundary.p == 0.5 and boundary.confidence == 0.0
        announce("model audit (separable, reconstruction, determinism, "
                 "boundary confidence)", ok)


class TestCriterion7ExpressionLanguage:
    def test_round_trip_and_oracle(self):
        rng = np.random.default_rng(5)
        names = ["a", "b2", "income", "years with bank"]
        ok = True
        for _ in range(1000):
            ast = random_ast(rng, int(rng.integers(0, 6)), names)
            ok = ok and equivalent(parse(print_expr(ast)), ast)
        for _ in range(100):
            ast = random_ast(rng, int(rng.integers(1, 6)), names)
            text = print_expr(ast)
            for _ in range(100):
                env = {}
                for name in names:
                    roll = rng.random()
                    if roll < 0.08:
                        env[name] = None
                    elif roll < 0.2:
                        env[name] = 0.0
                    else:
                        env[name] = float(np.round(rng.normal(0, 3), 3))
                if evaluate_row(ast, env) != python_eval(text, env):
                    ok = False
        malformed = ["", "(", ")", "a +", "* a", "a ++ b", "((a)", "-",
                     '"x', "a 5", "@", "1 + (2", "a % b", '""']
        for text in malformed:
            try:
                parse(text)
                ok = False
            except ExprSyntaxError as exc:
                ok = ok and isinstance(exc.offset, int) and exc.offset >= 0
            except Exception:
                ok = False
        announce("expression language (round-trip, oracle, malformed inputs)", ok)


class TestCriterion8Similarity:
    def test_similarity_contracts(self):
        rng = np.random.default_rng(6)
        ok = True
        for _ in range(300):
            a = rng.normal(0, 2, int(rng.integers(2, 20)))
            b = rng.normal(0, 2, len(a))
            s = row_similarity(a, b)
            ok = ok and abs(s - oracle_pearson(a.tolist(), b.tolist())) <= 1e-12
            ok = ok and s == row_similarity(b, a)
            ok = ok and row_similarity(a, a) == 1.0
        table = synth_loans(33, 1000)
        index = SimilarityIndex(table)
        start = time.perf_counter()
        points = scatter(index, 500)
        elapsed = time.perf_counter() - start
        ok = ok and len(points) == 1000
        ok = ok and points[500].similarity == pytest.approx(1.0, abs=1e-12)
        ok = ok and elapsed < 0.1
        announce(f"similarity (oracle, symmetry, scatter {elapsed*1000:.0f}ms)", ok)


class TestCriterion9EndToEndHeadless:
    def test_cli_and_api_agree(self, tmp_path):
        csv_path = tmp_path / "loans.csv"
        out_dir = tmp_path / "out"
        code = fairdesk.cli.main(["synth", "--seed", "42", "--rows", "1000",
                                  "--out", str(csv_path)])
        ok = code == 0 and csv_path.is_file()

        code = fairdesk.cli.main([
            "report", "--data", str(csv_path), "--target", "result",
            "--positive", "accepted", "--sensitive", "citizenship,gender",
            "--metrics", ",".join(ALL_KINDS), "--train-seed", "7",
            "--out", str(out_dir)])
        ok = ok and code == 0
        report_file = out_dir / "report.json"
        ok = ok and report_file.is_file() and (out_dir / "report.txt").is_file() \
            and (out_dir / "graph.json").is_file()

        import jsonschema
        document = json.loads(report_file.read_bytes())
        jsonschema.validate(document, load_schema())

        # identical session through the HTTP API
        from fastapi.testclient import TestClient
        from fairdesk.server import create_app
        from fairdesk.store import SessionStore
        from fairdesk.report import report_json_bytes
        config = EngineConfig(data_dir=str(tmp_path / "data"))
        app = create_app(config, SessionStore(config))
        with TestClient(app) as client:
            api = "/api/v1"
            sid = client.post(f"{api}/sessions",
                              json={"role": "data_scientist"}).json()["session"]
            client.put(f"{api}/sessions/{sid}/dataset",
                       json={"csv": csv_path.read_text()})
            client.put(f"{api}/sessions/{sid}/target",
                       json={"feature": "result", "positive_label": "accepted"})
            client.put(f"{api}/sessions/{sid}/model", json={"family": "logistic"})
            client.put(f"{api}/sessions/{sid}/sensitive",
                       json={"features": {"citizenship": None, "gender": None}})
            client.put(f"{api}/sessions/{sid}/metrics",
                       json={"kinds": list(ALL_KINDS)})
            job = client.post(f"{api}/sessions/{sid}/model/train",
                              json={"seed": 7}).json()["job"]
            deadline = time.time() + 300
            while time.time() < deadline:
                status = client.get(f"{api}/jobs/{job['id']}").json()["job"]
                if status["status"] in ("done", "error"):
                    break
                time.sleep(0.05)
            ok = ok and status["status"] == "done"
            api_report = client.get(f"{api}/sessions/{sid}/report").json()
        ok = ok and report_json_bytes(api_report) == report_file.read_bytes()

        # exit-code contract
        usage = fairdesk.cli.main(["report", "--data", str(csv_path),
                                   "--positive", "accepted",
                                   "--out", str(tmp_path / "x")])
        ok = ok and usage == 1
        bad_column = fairdesk.cli.main([
            "report", "--data", str(csv_path), "--target", "nope",
            "--positive", "accepted", "--out", str(tmp_path / "y")])
        ok = ok and bad_column == 1

        g1 = tmp_path / "g1.json"
        g2 = tmp_path / "g2.json"
        for out in (g1, g2):
            code = fairdesk.cli.main([
                "graph", "--data", str(csv_path), "--target", "result",
                "--positive", "accepted", "--out", str(out)])
            ok = ok and code == 0
        ok = ok and g1.read_bytes() == g2.read_bytes()
        announce("end-to-end headless CLI equals API export", ok)
