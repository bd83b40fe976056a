import numpy as np
import pytest

from lzqnd.cli import main
from lzqnd.config import Config, ConfigError, apply_overrides, load_config
from lzqnd.csvio import read_csv, stable_body, write_csv
from lzqnd.sweep import AxisSpec, SweepSpec, run_sweep


def write(path, text):
    path.write_text(text)
    return str(path)


MINI_SWEEP = """
[lz]
g2_over_eps = 1.0
[meter]
omega_c = 1.0
kappa = 1.0
x0 = 0.5
n_max = 8
n = 0.0
[run]
t_half_gu = 2.0
[sweep]
task = effective_gap
axis1 = meter.x0 linear 0.2 0.6 3
"""


class TestCsvIO:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "t.csv"
        x = np.array([0.1234567890123456789, 1e-17, 3.0])
        write_csv(path, [("x", x), ("tag", ["a", "b", "c"])],
                  metadata={"alpha": 1.5, "flag": True},
                  volatile={"stamp": "now"})
        md, vol, cols = read_csv(path)
        assert md["alpha"] == "1.5" and md["flag"] == "true"
        assert vol["stamp"] == "now"
        assert [float(v) for v in cols["x"]] == list(x)

    def test_stable_body_excludes_volatile(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        for p, stamp in ((p1, "early"), (p2, "late")):
            write_csv(p, [("x", [1.0])], metadata={"k": 1}, volatile={"t": stamp})
        assert stable_body(p1) == stable_body(p2)

    def test_commas_escaped(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, [("status", ["error:Bad, very bad"])])
        _, _, cols = read_csv(path)
        assert cols["status"] == ["error:Bad; very bad"]


class TestConfig:
    def test_defaults_and_load(self, tmp_path):
        cfg = load_config(write(tmp_path / "c.ini", MINI_SWEEP))
        assert cfg.get("lz", "g2_over_eps") == 1.0
        assert cfg.get("meter", "n_max") == 8
        lz = cfg.build_lz()
        assert lz.g == pytest.approx(1.0)

    def test_unknown_key_rejected(self, tmp_path):
        bad = MINI_SWEEP.replace("kappa = 1.0", "kappa = 1.0\nbogus = 3")
        with pytest.raises(ConfigError, match="bogus"):
            load_config(write(tmp_path / "c.ini", bad))

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="mystery"):
            load_config(write(tmp_path / "c.ini", "[mystery]\nx = 1\n"))

    def test_bad_value_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="kappa"):
            load_config(write(tmp_path / "c.ini", "[meter]\nkappa = fast\n"))

    def test_occupancy_exclusive(self, tmp_path):
        cfg = load_config(write(tmp_path / "c.ini", "[meter]\nn = 0.1\nbeta = 2.0\n"))
        with pytest.raises(ConfigError, match="one of"):
            cfg.build_meter()

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/nonexistent/really.ini")

    def test_hash_sensitivity(self, tmp_path):
        c1 = load_config(write(tmp_path / "a.ini", MINI_SWEEP))
        c2 = load_config(write(tmp_path / "b.ini", MINI_SWEEP))
        assert c1.config_hash() == c2.config_hash()
        c2.set("meter", "kappa", 2.0)
        assert c1.config_hash() != c2.config_hash()

    def test_output_path_not_hashed(self, tmp_path):
        c1 = load_config(write(tmp_path / "a.ini", MINI_SWEEP))
        c2 = load_config(write(tmp_path / "b.ini", MINI_SWEEP))
        apply_overrides(c2, out="/some/where.csv")
        assert c1.config_hash() == c2.config_hash()

    def test_overrides(self, tmp_path):
        cfg = load_config(write(tmp_path / "a.ini", MINI_SWEEP))
        apply_overrides(cfg, seed=7, workers=3, out="x.csv")
        assert cfg.get("run", "seed") == 7
        assert cfg.get("run", "workers") == 3
        assert cfg.get("output", "path") == "x.csv"

    def test_derived_gamma(self, tmp_path):
        cfg = load_config(write(tmp_path / "a.ini", "[model]\ngamma0_over_g = 2.0\n"))
        lz = cfg.build_lz()
        model = cfg.build_model(lz)
        assert model.gamma0 == pytest.approx(2.0 * lz.g)


class TestAxisSpec:
    def test_parse_and_values(self):
        ax = AxisSpec.parse("meter.kappa log 0.1 10 3")
        assert np.allclose(ax.values(), [0.1, 1.0, 10.0])
        lin = AxisSpec.parse("meter.x0 linear 0 1 5")
        assert np.allclose(lin.values(), np.linspace(0, 1, 5))

    def test_rejects_bad_specs(self):
        with pytest.raises(ConfigError):
            AxisSpec.parse("meter.kappa log 0.1 10")
        with pytest.raises(ConfigError):
            AxisSpec.parse("meter.unknown linear 0 1 5")
        with pytest.raises(ConfigError):
            AxisSpec.parse("meter.kappa log -1 10 3")


class TestSweep:
    def make_spec(self, tmp_path):
        cfg = load_config(write(tmp_path / "c.ini", MINI_SWEEP))
        return SweepSpec.from_config(cfg)

    def test_single_cell_matches_direct(self, tmp_path):
        from lzqnd.lindblad import MeterParams, effective_gap
        from lzqnd.lz import LZParams

        spec = self.make_spec(tmp_path)
        records = run_sweep(spec, workers=1)
        assert [r.status for r in records] == ["ok"] * 3
        direct = effective_gap(
            LZParams(g=1.0, eps=1.0),
            MeterParams(omega_c=1.0, kappa=1.0, x0=0.2, n_max=8, nbar=0.0),
            window_gu=2.0,
        )
        assert records[0].values["gap"] == direct

    def test_worker_count_is_observationally_pure(self, tmp_path):
        spec = self.make_spec(tmp_path)
        r1 = run_sweep(spec, workers=1)
        r2 = run_sweep(spec, workers=2)
        for a, b in zip(r1, r2):
            assert a.values == b.values and a.status == b.status

    def test_cell_failure_recorded_not_fatal(self, tmp_path):
        text = MINI_SWEEP.replace(
            "axis1 = meter.x0 linear 0.2 0.6 3",
            "axis1 = meter.kappa linear -1.0 1.0 2",
        )
        spec = SweepSpec.from_config(load_config(write(tmp_path / "c.ini", text)))
        records = run_sweep(spec, workers=1)
        assert records[0].status.startswith("error:")
        assert records[1].status == "ok"

    def test_budget_enforced(self, tmp_path):
        text = MINI_SWEEP + "\n[sweep]\nbudget = 2\n"
        with pytest.raises(ConfigError, match="budget"):
            SweepSpec.from_config(load_config(write(tmp_path / "c.ini", text)))


class TestCli:
    def test_trace_coherent(self, tmp_path):
        cfgp = write(tmp_path / "c.ini", "[trace]\nengine = coherent\n[run]\nt_half_gu = 3\n")
        out = tmp_path / "trace.csv"
        assert main(["trace", "--config", cfgp, "--out", str(out)]) == 0
        md, _, cols = read_csv(out)
        assert md["engine"] == "coherent"
        assert "config_hash" in md
        assert len(cols["t"]) > 100

    def test_trace_varied_values(self, tmp_path):
        cfgp = write(tmp_path / "c.ini", """
[trace]
engine = ame
vary = model.gamma0_over_g
values = 0.0, 1.0
[run]
t_half_gu = 2
""")
        out = tmp_path / "tr.csv"
        assert main(["trace", "--config", cfgp, "--out", str(out)]) == 0
        assert (tmp_path / "tr_gamma0_over_g_0.csv").exists()
        assert (tmp_path / "tr_gamma0_over_g_1.csv").exists()

    def test_trace_empty_values_is_config_error(self, tmp_path):
        cfgp = write(tmp_path / "c.ini",
                     "[trace]\nengine = ame\nvary = model.gamma0\nvalues =\n")
        assert main(["trace", "--config", cfgp]) == 1

    def test_bad_config_exit_code(self, tmp_path):
        cfgp = write(tmp_path / "c.ini", "[meter]\nkappa = nonsense\n")
        assert main(["trace", "--config", cfgp]) == 1

    def test_sweep_deterministic_bodies(self, tmp_path):
        cfgp = write(tmp_path / "c.ini", MINI_SWEEP)
        o1, o2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", cfgp, "--out", str(o1), "--workers", "1"]) == 0
        assert main(["sweep", "--config", cfgp, "--out", str(o2), "--workers", "2"]) == 0
        assert stable_body(o1) == stable_body(o2)

    def test_gap_and_nm_run(self, tmp_path):
        cfgp = write(tmp_path / "c.ini", """
[meter]
n_max = 8
x0 = 0.5
[run]
t_half_gu = 2
""")
        assert main(["gap", "--config", cfgp, "--out", str(tmp_path / "g.csv")]) == 0
        assert main(["nm", "--config", cfgp, "--out", str(tmp_path / "n.csv")]) == 0
        md, _, cols = read_csv(tmp_path / "n.csv")
        assert float(md["N"]) >= 0.0

    def test_strobe_and_mc(self, tmp_path):
        cfgp = write(tmp_path / "c.ini", """
[meter]
n_max = 12
x0 = 2.0
[run]
t_half_gu = 2
seed = 3
[strobe]
delta_t_gu = 1.0
amplitude_mode = x0
[noise]
tau_gu = 0.05
n_it = 3
""")
        assert main(["strobe", "--config", cfgp, "--out", str(tmp_path / "s.csv")]) == 0
        assert main(["noise-mc", "--config", cfgp, "--out", str(tmp_path / "m.csv")]) == 0
        md, _, cols = read_csv(tmp_path / "m.csv")
        assert md["n_it"] == "3"
        assert len(cols["stderr"]) == len(cols["t"])

    def test_verify_analytic_fast(self, tmp_path):
        import time

        t0 = time.time()
        assert main(["verify", "--only", "analytic", "--out", str(tmp_path / "r.csv")]) == 0
        # formula-level checksare quick even with kernel warmup
        assert time.time() - t0 < 60
        _, _, cols = read_csv(tmp_path / "r.csv")
        assert all(v == "true" for v in cols["passed"])

    def test_verify_unknown_filter(self):
        assert main(["verify", "--only", "nosuchgroup"]) == 1

    def test_example_configs_parse(self):
        from pathlib import Path

        for ini in Path(__file__).resolve().parents[1].glob("configs/*.ini"):
            cfg = load_config(ini)
            cfg.build_lz()
