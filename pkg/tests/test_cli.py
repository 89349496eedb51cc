"""Driver behavior: config decoding, suite execution, report contract.

Oracle notes.  Most rows here are plumbing checks tagged [TRIVIAL]; the
mathematical expectations reused from the engine suites are [DERIVED]:
the rank-one battery outcomes (all ten suites pass, twist-one class
vector (0, -1) with first Chern number -1) follow from the PBW count
dim U^d = 1 for d >= 0 and the rank-one Serre window, and the
multivariate bracket rig below is generically exact while no
module-level certificate exists over QQ[x, y], which is precisely the
inconclusive verdict.
"""

import json
import os
import subprocess
import sys

import pytest

from algebroids.cache import Cache, algebra_hash
from algebroids.algebroid import abelian
from algebroids.cli import (RunConfig, SUITE_ORDER, UsageError, build_algebroid,
                            load_config, render, run)

# ---------------------------------------------------------------------------
# fixtures and helpers

ABELIAN1_FULL = """
suites = ["validate", "pbw", "dual", "koszul", "diagonal", "gorenstein",
          "tau", "beilinson", "ktheory", "ideals"]
seed = 0

[window]
degree = 6

[algebroid]
builtin = "abelian1"

[ktheory]
twists = [0, 1]

[[ideals]]
name = "x"
generators = [ [["1", [1]] ] ]
"""

MULTIVARIATE_BRACKET = """
suites = ["koszul"]

[window]
degree = 3

[algebroid]
name = "x-nilpotent-plane"
rank = 2
variables = ["x", "y"]

[algebroid.bracket]
"1,2" = [[1, "x"]]
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def cli(*args, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    proc = subprocess.run(
        [sys.executable, "-m", "algebroids.cli", *args],
        capture_output=True, text=True, env=full_env)
    return proc.returncode, proc.stdout, proc.stderr


# ---------------------------------------------------------------------------


class TestConfigDecoding:
    def test_builtin_and_overrides(self, tmp_path):
        """[TRIVIAL] flags override config values."""
        path = write(tmp_path, ABELIAN1_FULL)
        cfg = load_config(path, {"suites": ["pbw"], "window_degree": 3,
                                 "seed": 9, "strategy": "exact",
                                 "workspace": str(tmp_path / "w")})
        assert cfg.suites == ("pbw",)
        assert cfg.window_degree == 3
        assert cfg.seed == 9
        assert cfg.workspace == str(tmp_path / "w")

    def test_custom_algebroid_table(self, tmp_path):
        """[TRIVIAL] the inline rank/bracket/anchor format decodes."""
        path = write(tmp_path, MULTIVARIATE_BRACKET)
        cfg = load_config(path)
        alg = build_algebroid(cfg.algebroid)
        assert alg.rank == 2 and alg.base.variables == ("x", "y")
        assert alg.validate().ok

    def test_stray_keys_in_algebroid_table(self, tmp_path):
        """[TRIVIAL] bare keys after [algebroid] get a pointed message."""
        path = write(tmp_path, "[algebroid]\nbuiltin = 'sl2'\nseed = 3\n")
        with pytest.raises(UsageError, match="move them above"):
            load_config(path)

    def test_unparseable_toml(self, tmp_path):
        path = write(tmp_path, "suites = [unterminated\n")
        with pytest.raises(UsageError, match="cannot parse"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError, match="cannot read"):
            load_config(str(tmp_path / "gone.toml"))

    def test_missing_algebroid_table(self, tmp_path):
        path = write(tmp_path, "suites = ['pbw']\n")
        with pytest.raises(UsageError, match="algebroid"):
            load_config(path)

    def test_workspace_env_override(self, tmp_path):
        """[TRIVIAL] env beats config; flag beats env."""
        path = write(tmp_path, "workspace = 'cfg-ws'\n" + ABELIAN1_FULL)
        os.environ["ALGEBROIDS_WORKSPACE"] = "env-ws"
        try:
            assert load_config(path).workspace == "env-ws"
            assert load_config(path, {"workspace": "flag-ws"}).workspace == \
                "flag-ws"
        finally:
            del os.environ["ALGEBROIDS_WORKSPACE"]
        assert load_config(path).workspace == "cfg-ws"


class TestInvariants:
    def base_cfg(self, **kw):
        cfg = dict(algebroid={"builtin": "abelian1"})
        cfg.update(kw)
        return RunConfig(**cfg)

    def check(self, cfg):
        cfg.check(build_algebroid(cfg.algebroid))

    def test_empty_suites(self):
        with pytest.raises(UsageError, match="no suites"):
            self.check(self.base_cfg(suites=()))

    def test_unknown_suite(self):
        with pytest.raises(UsageError, match="unknown suites"):
            self.check(self.base_cfg(suites=("pbw", "mystery")))

    def test_nonpositive_window(self):
        with pytest.raises(UsageError, match="window.degree"):
            self.check(self.base_cfg(window_degree=0))
        with pytest.raises(UsageError, match="truncation_budget"):
            self.check(self.base_cfg(truncation_budget=-1))

    def test_bad_strategy(self):
        with pytest.raises(UsageError, match="strategy"):
            self.check(self.base_cfg(strategy="gauss"))

    def test_point_base_suites_rejected_over_polynomials(self):
        """[DERIVED] graded slices over QQ[x] are infinite-dimensional,
        so the sections engines cannot run there."""
        cfg = RunConfig(algebroid={"builtin": "weyl1"}, suites=("tau",))
        with pytest.raises(UsageError, match="coefficient-field base"):
            cfg.check(build_algebroid(cfg.algebroid))

    def test_ideals_suite_needs_entries(self):
        with pytest.raises(UsageError, match="no \\[\\[ideals\\]\\]"):
            self.check(self.base_cfg(suites=("ideals",)))

    def test_bad_ideal_terms(self):
        cfg = self.base_cfg(
            suites=("ideals",),
            ideals=({"name": "broken", "generators": [[["1", [1, 2, 3]]]]},))
        with pytest.raises(UsageError, match="expected 1 or 2 exponents"):
            run(cfg)


@pytest.fixture(scope="module")
def battery(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("battery")
    path = write(tmp, ABELIAN1_FULL)
    code, out, err = cli("--config", path, "--workspace", str(tmp / "ws"))
    assert code == 0, err
    return json.loads(out), tmp


class TestReportContract:
    def test_all_suites_pass(self, battery):
        """[DERIVED] the rank-one battery holds at every gate."""
        report, _ = battery
        assert report["status"] == "pass"
        assert set(report["suites"]) == set(SUITE_ORDER)
        assert all(s["status"] == "pass" for s in report["suites"].values())

    def test_schema_and_echo(self, battery):
        report, _ = battery
        assert report["schema_version"] == 1
        assert report["algebra"]["name"] == "abelian1"
        assert report["algebra"]["rank"] == 1
        assert report["algebra"]["content_hash"] == algebra_hash(abelian(1))
        assert report["config"]["suites"][0] == "validate"
        assert report["config"]["seed"] == 0
        assert "workspace" not in report["config"]

    def test_table_records(self, battery):
        """[TRIVIAL] rows carry the record fields, not nested grids."""
        report, _ = battery
        for row in report["suites"]["pbw"]["tables"]:
            assert row["suite"] == "pbw"
            assert {"internal_degree", "rank", "strategy",
                    "certificate"} <= set(row)
        for row in report["suites"]["tau"]["tables"]:
            assert {"position", "internal_degree", "rank",
                    "certificate"} <= set(row)

    def test_ktheory_rows(self, battery):
        """[DERIVED] twist one has class vector (0, -1), so the first
        Chern number is -1; twist zero is the unit class (1, 0)."""
        report, _ = battery
        rows = {r["position"]: r for r in report["suites"]["ktheory"]["tables"]}
        assert rows[0]["class_vector"] == [1, 0]
        assert rows[1]["class_vector"] == [0, -1]
        assert rows[1]["chern"][1] == -1
        assert all(r["ok"] for r in rows.values())

    def test_workspace_artifacts(self, battery):
        report, tmp = battery
        h = report["algebra"]["content_hash"]
        ws = tmp / "ws" / h
        stored = json.loads((ws / "report.json").read_text())
        assert stored == report
        timings = json.loads((ws / "timings.json").read_text())
        assert set(timings) == set(SUITE_ORDER)

    def test_stdout_is_the_canonical_report(self, battery):
        report, _ = battery
        assert render(report) == render(
            json.loads(render(report)))  # round-trips through JSON


class TestVerdicts:
    def test_certified_failure_exits_one(self, tmp_path):
        """[DERIVED] adjoining the homogenizer to (x) misses the unit at
        degree zero, a certified saturation failure."""
        path = write(tmp_path, """
suites = ["ideals"]
[algebroid]
builtin = "abelian1"
[[ideals]]
name = "t-and-x"
generators = [ [["1", [0, 1]]], [["1", [1]]] ]
""")
        code, out, _ = cli("--config", path, "--workspace", str(tmp_path / "w"))
        assert code == 1
        report = json.loads(out)
        assert report["status"] == "fail"
        suite = report["suites"]["ideals"]
        assert suite["status"] == "fail" and "reason" not in suite
        assert suite["ideals"][0]["certified"]

    def test_inconclusive_is_not_failure(self, tmp_path):
        """[DERIVED] generically exact but uncertifiable over QQ[x, y]:
        verdict inconclusive, exit code zero, reason attached."""
        path = write(tmp_path, MULTIVARIATE_BRACKET)
        code, out, _ = cli("--config", path, "--workspace", str(tmp_path / "w"))
        assert code == 0
        report = json.loads(out)
        assert report["status"] == "inconclusive"
        suite = report["suites"]["koszul"]
        assert suite["status"] == "inconclusive"
        assert "exhausted" in suite["reason"]
        rows = [r for r in suite["tables"] if not r["ok"]]
        assert rows and all(set(r["homology"]) == {0} for r in rows)

    def test_usage_error_exits_two(self, tmp_path):
        path = write(tmp_path, ABELIAN1_FULL)
        code, out, err = cli("--config", path, "--suite", "nosuch",
                             "--workspace", str(tmp_path / "w"))
        assert code == 2 and not out and "unknown suites" in err

    def test_evaluation_metadata_carries_seed(self, tmp_path):
        """[TRIVIAL] probabilistic ranks report their sample protocol."""
        path = write(tmp_path, """
suites = ["dual"]
[algebroid]
builtin = "weyl1"
""")
        code, out, _ = cli("--config", path, "--strategy", "evaluation",
                           "--seed", "11", "--workspace", str(tmp_path / "w"))
        assert code == 0
        suite = json.loads(out)["suites"]["dual"]
        assert suite["status"] == "pass"
        assert suite["evaluation"] == {"seed": 11, "samples": 3}


class TestDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        """[TRIVIAL] a fixed (config, seed) pins the report bytes even
        across workspaces; the timing sidecar is allowed to differ."""
        path = write(tmp_path, ABELIAN1_FULL)
        outs = []
        for ws in ("w1", "w2"):
            code, out, err = cli("--config", path,
                                 "--workspace", str(tmp_path / ws))
            assert code == 0, err
            outs.append(out)
        assert outs[0] == outs[1]
        h = json.loads(outs[0])["algebra"]["content_hash"]
        r1 = (tmp_path / "w1" / h / "report.json").read_bytes()
        r2 = (tmp_path / "w2" / h / "report.json").read_bytes()
        assert r1 == r2

    def test_cache_writes_are_atomic_rename(self, tmp_path):
        """[TRIVIAL] artifacts land under the content-hash directory and
        survive a rewrite."""
        alg = abelian(1)
        cache = Cache(str(tmp_path), alg)
        p1 = cache.put("report", {"a": 1})
        p2 = cache.put("report", {"a": 2})
        assert p1 == p2
        assert cache.get("report") == {"a": 2}
        assert cache.get("absent") is None
        assert os.path.basename(os.path.dirname(p1)) == algebra_hash(alg)
