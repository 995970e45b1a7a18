"""Configuration, manifests, experiment drivers, plot data, CLI."""

import json
import math

import pytest

from bandsemi.harness import cli
from bandsemi.harness.config import (
    ConfigError,
    ExperimentConfig,
    build_config,
    parse_config_text,
    resolve_bandwidth,
)
from bandsemi.harness.experiments import (
    run_aau_report,
    run_convergence,
    run_lemma_suite,
    run_oracle_comparison,
    run_variance_study,
    valid_bandwidths,
)
from bandsemi.harness.manifest import derive_seed, sha256_file
from bandsemi.harness.plotdata import emit_plot_data
from bandsemi.spectra import NumericalFailure


def tiny_config(tmp_path, **kw):
    defaults = dict(
        scheme="wigner",
        dist="standard_normal",
        n_values="16,24",
        bandwidth="n",
        replicas=3,
        moments="0,1,2",
        seed=99,
        out_dir=str(tmp_path / "run"),
    )
    defaults.update(kw)
    return build_config(None, **defaults)


class TestConfig:
    def test_parse_sections(self):
        top, sections = parse_config_text(
            """
            scheme = wigner   # comment
            replicas = 5

            [size]
            n = 10
            b = 9

            [size]
            n = 20
            """
        )
        assert top == {"scheme": "wigner", "replicas": "5"}
        assert sections == [("size", {"n": "10", "b": "9"}), ("size", {"n": "20"})]

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_config_text("scheme wigner")

    def test_build_from_file_with_cli_override(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("scheme = wigner\nn_values = 8\nreplicas = 2\nseed = 4\n")
        config = build_config(path, replicas=7, out_dir=str(tmp_path))
        assert config.replicas == 7
        assert config.seed == 4
        assert config.sizes == ((8, 8),)

    def test_size_blocks_resolve_bandwidth_rule(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "scheme = wigner\nbandwidth = gamma:0.6\n[size]\nn = 200\n[size]\nn = 800\nb = 799\n"
        )
        config = build_config(path, seed=1, out_dir=str(tmp_path))
        assert config.sizes == ((200, 23), (800, 799))

    def test_bandwidth_rules(self):
        assert resolve_bandwidth(100, "n") == 100
        assert resolve_bandwidth(200, "gamma:0.6") == 23
        assert resolve_bandwidth(800, "gamma:0.6") == 55
        assert resolve_bandwidth(3200, "gamma:0.6") == 125
        assert resolve_bandwidth(4, "gamma:0.99") == 3
        assert resolve_bandwidth(4, "gamma:2.0") == 4  # clamps to n
        assert resolve_bandwidth(10, "fixed:7") == 7
        assert resolve_bandwidth(10, "9") == 9
        with pytest.raises(ConfigError):
            resolve_bandwidth(10, "weird")

    def test_invalid_bandwidth_rejected_by_bandspec(self):
        with pytest.raises(ValueError):
            ExperimentConfig(
                scheme="wigner",
                sizes=((10, 4),),
                replicas=1,
                moments=(2,),
                seed=0,
                out_dir="x",
            )

    def test_moment_orders_validated(self, tmp_path):
        with pytest.raises(ConfigError):
            tiny_config(tmp_path, moments="2,11")

    def test_scheme_required(self, tmp_path):
        with pytest.raises(ConfigError):
            build_config(None, n_values="8", out_dir=str(tmp_path))


class TestSeeds:
    def test_deterministic_and_distinct(self):
        a = derive_seed(123, 0, 0)
        assert a == derive_seed(123, 0, 0)
        others = {derive_seed(123, c, r) for c in range(4) for r in range(50)}
        assert len(others) == 200
        assert all(0 <= s < 2**64 for s in others)

    def test_master_seed_matters(self):
        assert derive_seed(1, 0, 0) != derive_seed(2, 0, 0)


class TestConvergence:
    def test_rows_and_summary(self, tmp_path):
        config = tiny_config(tmp_path)
        result = run_convergence(config)
        assert len(result.rows) == 2 * 3 * 3  # cases * replicas * moment orders
        zeroth = [r.moment for r in result.rows if r.k == 0]
        assert all(m == 1.0 for m in zeroth)
        for entry in result.summary:
            assert entry["abs_deviation"] >= 0.0
            assert 0.0 <= entry["mean_kolmogorov"] <= 1.0

    def test_byte_identical_reruns(self, tmp_path):
        c1 = tiny_config(tmp_path, out_dir=str(tmp_path / "a"))
        c2 = tiny_config(tmp_path, out_dir=str(tmp_path / "b"))
        r1 = run_convergence(c1)
        r2 = run_convergence(c2)
        for name in ("convergence.csv", "summary.csv"):
            assert (r1.out_dir / name).read_bytes() == (r2.out_dir / name).read_bytes()

    def test_manifest_checksums_match(self, tmp_path):
        config = tiny_config(tmp_path)
        result = run_convergence(config)
        manifest = json.loads((result.out_dir / "manifest.json").read_text())
        assert manifest["master_seed"] == 99
        assert manifest["config"]["scheme"] == "wigner"
        assert len(manifest["seeds"]) == 2 * 3
        for name, digest in manifest["files"].items():
            assert sha256_file(result.out_dir / name) == digest

    def test_threads_give_same_rows(self, tmp_path):
        serial = run_convergence(tiny_config(tmp_path, out_dir=str(tmp_path / "s")))
        pooled = run_convergence(
            tiny_config(tmp_path, out_dir=str(tmp_path / "p"), threads=2)
        )
        assert (serial.out_dir / "convergence.csv").read_bytes() == (
            pooled.out_dir / "convergence.csv"
        ).read_bytes()


class TestVariance:
    def test_single_replica_rejected(self, tmp_path):
        config = tiny_config(tmp_path, replicas=1, moments="2")
        with pytest.raises(ValueError, match="variance undefined"):
            run_variance_study(config)

    def test_small_replica_warning(self, tmp_path):
        config = tiny_config(tmp_path, replicas=4, moments="2")
        with pytest.warns(UserWarning):
            run_variance_study(config)

    def test_outputs(self, tmp_path):
        config = tiny_config(
            tmp_path, n_values="16,32,48", replicas=120, moments="2"
        )
        result = run_variance_study(config)
        variances = [row["variance"] for row in result.variance_rows]
        assert all(v > 0 for v in variances)
        slope_row = result.slope_rows[0]
        assert math.isfinite(slope_row["slope"])
        assert (result.out_dir / "variance.csv").exists()
        assert (result.out_dir / "variance_summary.csv").exists()


class TestOracleComparison:
    def test_wigner_with_enumeration(self, tmp_path):
        config = tiny_config(
            tmp_path,
            scheme="wigner",
            dist="rademacher",
            n_values="3",
            replicas=4000,
            moments="1,2,3,4",
        )
        result = run_oracle_comparison(config)
        assert result.ok
        enum_rows = [r for r in result.rows if r["enum_ok"] != -1]
        assert enum_rows and all(r["enum_ok"] == 1 for r in enum_rows)

    def test_gaussian_identity_second_moment(self, tmp_path):
        config = tiny_config(
            tmp_path,
            scheme="gaussian",
            alpha=0.5,
            off_diag=0.0,
            n_values="3",
            replicas=4000,
            moments="2",
        )
        result = run_oracle_comparison(config)
        row = result.rows[0]
        assert row["exact"] == 1.0
        assert row["mc_ok"]

    def test_curie_weiss_small(self, tmp_path):
        config = tiny_config(
            tmp_path,
            scheme="curie_weiss",
            beta=0.5,
            n_values="2",
            replicas=5000,
            moments="2,4",
        )
        result = run_oracle_comparison(config)
        assert result.ok

    def test_oversized_rejected(self, tmp_path):
        config = tiny_config(tmp_path, scheme="curie_weiss", n_values="6", replicas=10)
        with pytest.raises(ValueError, match="limited"):
            run_oracle_comparison(config)


class TestLemmaSuite:
    def test_small_ranges_clean(self, tmp_path):
        result = run_lemma_suite(
            max_n=3,
            max_k=3,
            pair_max_n=3,
            pair_max_k=2,
            gaussian_n_values=(4, 8),
            gaussian_z_values=(1, 2),
            out_dir=tmp_path,
        )
        assert result.ok
        assert (tmp_path / "lemma_report.csv").exists()

    def test_valid_bandwidths(self):
        assert valid_bandwidths(1) == [1]
        assert valid_bandwidths(4) == [1, 3, 4]
        assert valid_bandwidths(5) == [1, 3, 5]


class TestAauRunner:
    def test_curie_weiss_report(self, tmp_path):
        report = run_aau_report(
            "curie_weiss", 0.5, (4, 8), max_l=2, beta=0.5, out_dir=tmp_path
        )
        assert report.decays_ok
        assert (tmp_path / "aau_report.csv").exists()

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            run_aau_report("sparse", 0.5, (4,))


class TestPlotData:
    def test_moment_vs_n(self, tmp_path):
        config = tiny_config(tmp_path, moments="2,4")
        result = run_convergence(config)
        out = emit_plot_data(
            result.out_dir / "summary.csv", "moment_vs_n", tmp_path / "m.dat", k=2
        )
        lines = out.read_text().splitlines()
        assert lines[0] == "# n mean stderr reference"
        assert len(lines) == 3  # header + two sizes
        assert float(lines[1].split()[3]) == 1.0

    def test_moment_vs_n_requires_k_when_ambiguous(self, tmp_path):
        config = tiny_config(tmp_path, moments="2,4")
        result = run_convergence(config)
        with pytest.raises(ValueError, match="pass k"):
            emit_plot_data(result.out_dir / "summary.csv", "moment_vs_n", tmp_path / "m.dat")

    def test_variance_loglog(self, tmp_path):
        config = tiny_config(tmp_path, n_values="16,32", replicas=150, moments="2")
        result = run_variance_study(config)
        out = emit_plot_data(
            result.out_dir / "variance.csv", "variance_loglog", tmp_path / "v.dat", k=2
        )
        rows = out.read_text().splitlines()
        assert rows[0] == "# log_n log_variance"
        assert len(rows) == 3

    def test_esd_histogram(self, tmp_path):
        rc = cli.main(
            [
                "sample",
                "--scheme",
                "wigner",
                "--n-values",
                "64",
                "--seed",
                "5",
                "--out-dir",
                str(tmp_path / "samp"),
            ]
        )
        assert rc == 0
        out = emit_plot_data(
            tmp_path / "samp" / "eigenvalues.csv",
            "esd_histogram",
            tmp_path / "h.dat",
        )
        rows = out.read_text().splitlines()
        assert rows[0] == "# bin_center empirical_density semicircle_density"
        assert len(rows) == 51
        total = sum(float(r.split()[1]) for r in rows[1:]) * 0.1
        assert abs(total - 1.0) <= 1e-9  # all mass inside [-2.5, 2.5]

    def test_schema_mismatch(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="missing columns"):
            emit_plot_data(bad, "moment_vs_n", tmp_path / "x.dat", k=2)

    def test_unknown_kind(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="unknown plot kind"):
            emit_plot_data(bad, "scatter", tmp_path / "x.dat")


class TestCli:
    def test_usage_error_exit_code(self):
        assert cli.main(["converge", "--no-such-flag"]) == 1

    def test_missing_scheme_exit_code(self, tmp_path):
        assert cli.main(["converge", "--n-values", "8", "--out-dir", str(tmp_path)]) == 1

    def test_variance_single_replica_exit_code(self, tmp_path):
        rc = cli.main(
            [
                "variance",
                "--scheme",
                "wigner",
                "--n-values",
                "8",
                "--replicas",
                "1",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert rc == 1

    def test_numerical_failure_exit_code(self, monkeypatch, tmp_path):
        def boom(config):
            raise NumericalFailure("replica 0 (seed 1) failed")

        monkeypatch.setattr(cli, "run_convergence", boom)
        rc = cli.main(
            [
                "converge",
                "--scheme",
                "wigner",
                "--n-values",
                "8",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert rc == 2

    def test_verify_lemmas_ok(self, tmp_path, capsys):
        rc = cli.main(
            [
                "verify-lemmas",
                "--max-n",
                "2",
                "--max-k",
                "2",
                "--pair-max-n",
                "2",
                "--pair-max-k",
                "2",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert rc == 0
        assert "all bounds hold" in capsys.readouterr().out

    def test_converge_end_to_end(self, tmp_path, capsys):
        rc = cli.main(
            [
                "converge",
                "--scheme",
                "wigner",
                "--n-values",
                "16",
                "--replicas",
                "2",
                "--moments",
                "2",
                "--seed",
                "3",
                "--out-dir",
                str(tmp_path / "out"),
            ]
        )
        assert rc == 0
        assert (tmp_path / "out" / "convergence.csv").exists()
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_verify_aau_cli(self, tmp_path):
        rc = cli.main(
            [
                "verify-aau",
                "--scheme",
                "gaussian",
                "--alpha",
                "0.5",
                "--n-values",
                "4,8",
                "--max-l",
                "2",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert rc == 0


class TestPlotRender:
    def test_histogram_svg_render(self, tmp_path):
        rc = cli.main(
            [
                "sample",
                "--scheme",
                "gaussian",
                "--alpha",
                "0.6",
                "--n-values",
                "48",
                "--seed",
                "8",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert rc == 0
        out = emit_plot_data(
            tmp_path / "eigenvalues.csv",
            "esd_histogram",
            tmp_path / "hist.dat",
            render=True,
        )
        assert out.exists()
        assert (tmp_path / "hist.svg").stat().st_size > 0
