import json
import math
import os
import subprocess
import sys

import pytest

PKG_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def run_cli(*argv, cwd=None):
    env = dict(os.environ)
    env.setdefault("OPENBLAS_NUM_THREADS", "1")
    env.setdefault("OMP_NUM_THREADS", "1")
    return subprocess.run(
        [sys.executable, "-m", "moyal.cli", *argv],
        capture_output=True,
        text=True,
        cwd=cwd or PKG_ROOT,
        env=env,
    )


def write_triples(path, rows):
    path.write_text(json.dumps({"triples": rows}))


TRIPLE_ROWS = [
    {"q1": 0.3, "p1": 0.0, "q2": 0.0, "p2": 0.2, "q": 0.1, "p": 0.1},
    {"q1": 0.0, "p1": 0.0, "q2": 0.0, "p2": 0.0, "q": 1.0, "p": 0.0},
    {"q1": 0.5, "p1": -0.2, "q2": 0.1, "p2": 0.4, "q": -0.3, "p": 0.2},
]


class TestKernelCommand:
    def test_analytic_zero_triple(self):
        r = run_cli("kernel", "--analytic", "--q1", "0", "--p1", "0",
                    "--q2", "0", "--p2", "0", "--q", "0", "--p", "0")
        assert r.returncode == 0
        payload = json.loads(r.stdout)
        assert payload["re"] == pytest.approx(0.10132118, abs=1e-8)
        assert payload["im"] == 0.0
        assert payload["err"] == 0.0
        assert payload["provenance"]["config"]["dim"] == 128

    def test_batch_csv(self, tmp_path):
        triples = tmp_path / "triples.json"
        write_triples(triples, TRIPLE_ROWS)
        out = tmp_path / "kernels.csv"
        r = run_cli("kernel", "--analytic", "--triples", str(triples), "--out", str(out))
        assert r.returncode == 0, r.stderr
        lines = out.read_text().splitlines()
        assert lines[0] == "q1,p1,q2,p2,q,p,re,im,err"
        assert len(lines) == 4
        prov = json.loads((tmp_path / "kernels.provenance.json").read_text())
        assert prov["command"] == "kernel"
        assert prov["versions"]["moyal"]
        assert prov["backend"] in ("cython", "python")

    def test_numeric_single(self):
        r = run_cli("kernel", "--numeric", "--dim", "96",
                    "--q1", "0.3", "--p1", "0", "--q2", "0", "--p2", "0.2",
                    "--q", "0.1", "--p", "0.1")
        assert r.returncode == 0
        payload = json.loads(r.stdout)
        ana = 0.10132118364233778 * complex(math.cos(0.02), math.sin(0.02))
        assert payload["re"] == pytest.approx(ana.real, abs=2e-3)
        assert payload["im"] == pytest.approx(ana.imag, abs=2e-3)
        assert payload["err"] > 0

    def test_missing_coordinates(self):
        r = run_cli("kernel", "--analytic", "--q1", "0")
        assert r.returncode == 1
        assert "q1" in r.stderr or "needs" in r.stderr

    def test_single_point_with_out_writes_csv(self, tmp_path):
        out = tmp_path / "one.csv"
        r = run_cli("kernel", "--analytic", "--q1", "0", "--p1", "0", "--q2", "0",
                    "--p2", "0", "--q", "0", "--p", "0", "--out", str(out))
        assert r.returncode == 0
        assert len(out.read_text().splitlines()) == 2
        assert (tmp_path / "one.provenance.json").exists()

    def test_divergent_single_point_strict_exit_2(self):
        # parity insertion at the all-zero triple is identity-like: the
        # damped trace cannot converge, and strict mode must notice
        r = run_cli("kernel", "--tau", "3.141592653589793", "--dim", "96",
                    "--q1", "0", "--p1", "0", "--q2", "0", "--p2", "0",
                    "--q", "0", "--p", "0", "--strict")
        assert r.returncode == 2
        assert "converge" in r.stderr


class TestVerifyDeformation:
    def test_csv_and_finding(self, tmp_path):
        triples = tmp_path / "triples.json"
        write_triples(triples, TRIPLE_ROWS)
        out = tmp_path / "deform.csv"
        r = run_cli("verify-deformation", "--triples", str(triples),
                    "--out", str(out), "--dim", "320")
        assert r.returncode == 0, r.stderr
        lines = out.read_text().splitlines()
        assert lines[0] == "q1,p1,q2,p2,q,p,mu,r_num_re,r_num_im,r_ana,abs_diff,err"
        assert len(lines) == 4
        summary = json.loads(r.stdout)
        assert summary["triples"] == 3
        # the measured ratio departs from (mu-1)^2/16; a fitted quadratic is
        # part of the report
        assert summary["max_abs_diff"] > 1e-2
        assert "finding" in summary
        fit = summary["finding"]["fit"]
        assert fit["c2"] == pytest.approx(0.25, abs=0.03)
        assert fit["c1"] == pytest.approx(-0.5, abs=0.05)

    def test_unreadable_triples(self, tmp_path):
        r = run_cli("verify-deformation", "--triples", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path / "x.csv"))
        assert r.returncode == 1
        assert "error" in r.stderr.lower()


class TestWignerSymbolStar:
    def test_wigner_vacuum(self, tmp_path):
        out = tmp_path / "w.csv"
        r = run_cli("wigner", "--state", "vacuum", "--dim", "32",
                    "--grid-points", "41", "--out", str(out))
        assert r.returncode == 0, r.stderr
        summary = json.loads(r.stdout)
        assert summary["normalization"] == pytest.approx(1.0, abs=1e-3)
        rows = out.read_text().splitlines()[1:]
        origin = [row for row in rows if row.startswith("0.0,0.0,")]
        assert len(origin) == 1
        assert float(origin[0].split(",")[2]) == pytest.approx(2.0, abs=1e-6)
        meta = json.loads((tmp_path / "w.json").read_text())
        assert meta["flags"]["real_valued"] is True

    def test_symbol_identity_like(self, tmp_path):
        out = tmp_path / "s.csv"
        r = run_cli("symbol", "--op", "fock:1", "--dim", "32",
                    "--grid-points", "21", "--grid-extent", "2", "--out", str(out))
        assert r.returncode == 0, r.stderr
        field_rows = out.read_text().splitlines()[1:]
        by_point = {tuple(row.split(",")[:2]): float(row.split(",")[2]) for row in field_rows}
        assert by_point[("0.0", "0.0")] == pytest.approx(-2.0, abs=1e-3)

    def test_star_from_states_and_csv_round_trip(self, tmp_path):
        wa = tmp_path / "a.csv"
        wb = tmp_path / "b.csv"
        for path, state in ((wa, "coherent:0.5,0"), (wb, "coherent:-0.3,0.4")):
            r = run_cli("symbol", "--op", state, "--dim", "32", "--grid-points", "41",
                        "--out", str(path))
            assert r.returncode == 0, r.stderr
        out = tmp_path / "star.csv"
        r = run_cli("star", "--in-a", str(wa), "--in-b", str(wb), "--route", "operator",
                    "--dim", "32", "--out", str(out))
        assert r.returncode == 0, r.stderr
        summary = json.loads(r.stdout)
        assert summary["max_abs"] > 0.1

    def test_star_kernel_route(self, tmp_path):
        out = tmp_path / "sk.csv"
        r = run_cli("star", "--state-a", "coherent:0.5,0", "--state-b", "coherent:-0.3,0.4",
                    "--route", "kernel", "--dim", "32", "--grid-points", "41",
                    "--out-bound", "2.0", "--out", str(out))
        assert r.returncode == 0, r.stderr

    def test_star_input_validation(self, tmp_path):
        r = run_cli("star", "--in-a", "only.csv", "--out", str(tmp_path / "x.csv"))
        assert r.returncode == 1
        assert "--in-b" in r.stderr
        r = run_cli("star", "--out", str(tmp_path / "x.csv"))
        assert r.returncode == 1


class TestKproductFosc:
    def test_kproduct_report(self, tmp_path):
        out = tmp_path / "kp.json"
        r = run_cli("kproduct", "--kdim", "16", "--count", "25", "--out", str(out))
        assert r.returncode == 0, r.stderr
        report = json.loads(out.read_text())
        assert report["max_associativity_defect_rel"] < 1e-12
        assert report["unit_law_rel_error"] < 1e-10
        assert report["sqrt_homomorphism_rel_error"] < 1e-10

    def test_fosc_spectrum_and_evolution(self, tmp_path):
        out = tmp_path / "fosc.csv"
        r = run_cli("fosc", "--f", '{"kind":"q_exact","lambda":0.1}', "--dim", "32",
                    "--out", str(out), "--evolve-a0", "1,0", "--chi", "linear:1.0",
                    "--times", "0,3.14159265358979")
        assert r.returncode == 0, r.stderr
        payload = json.loads(r.stdout)
        assert payload["max_closed_form_diff"] < 1e-10
        last = payload["evolution"][-1]
        assert last["re"] == pytest.approx(-1.0, abs=1e-6)
        lines = out.read_text().splitlines()
        assert lines[0] == "n,f,commutator,closed_form,abs_diff"


class TestConvergenceCommand:
    def test_parity_trace_sweep(self, tmp_path):
        out = tmp_path / "conv.csv"
        r = run_cli("convergence", "--target", "parity-trace", "--dims", "64,160,320",
                    "--gamma", "1,1", "--out", str(out))
        assert r.returncode == 0, r.stderr
        summary = json.loads(r.stdout)
        assert summary["rows"] == 3
        assert not summary["single_dim"]
        rows = out.read_text().splitlines()[1:]
        final = rows[-1].split(",")
        assert float(final[3]) == pytest.approx(0.5, abs=1e-3)

    def test_kernel_sweep_converges(self, tmp_path):
        out = tmp_path / "convk.csv"
        r = run_cli("convergence", "--target", "kernel", "--dims", "64,128,256",
                    "--out", str(out))
        assert r.returncode == 0, r.stderr
        rows = out.read_text().splitlines()[1:]
        diffs = [float(row.split(",")[6]) for row in rows[1:]]
        assert diffs[-1] < diffs[0]

    def test_schedule_sweep(self, tmp_path):
        out = tmp_path / "sched.csv"
        r = run_cli("convergence", "--target", "parity-trace", "--dims", "320",
                    "--schedules", "0.4,0.2,0.1,0.05;0.5,0.25,0.125,0.0625",
                    "--gamma", "0.5,0", "--out", str(out))
        assert r.returncode == 0, r.stderr
        rows = out.read_text().splitlines()[1:]
        assert len(rows) == 2
        for row in rows:
            assert float(row.split(",")[3]) == pytest.approx(0.5, abs=1e-3)

    def test_single_dim_warns(self):
        r = run_cli("convergence", "--target", "parity-trace", "--dims", "64")
        assert r.returncode == 0
        assert json.loads(r.stdout)["single_dim"] is True
        assert "warning" in r.stderr.lower()

    def test_single_dim_strict_exit_2(self):
        r = run_cli("convergence", "--target", "parity-trace", "--dims", "64", "--strict")
        assert r.returncode == 2


class TestConfigAndErrors:
    def test_unknown_flag_exits_1(self):
        r = run_cli("kernel", "--does-not-exist")
        assert r.returncode == 1
        assert "usage" in r.stderr.lower()

    def test_unknown_subcommand_exits_1(self):
        r = run_cli("transmogrify")
        assert r.returncode == 1

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dim": 32, "colour": "red"}))
        r = run_cli("kernel", "--config", str(cfg), "--analytic",
                    "--q1", "0", "--p1", "0", "--q2", "0", "--p2", "0", "--q", "0", "--p", "0")
        assert r.returncode == 1
        assert "colour" in r.stderr

    def test_config_file_with_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dim": 32, "seed": 7}))
        r = run_cli("kernel", "--config", str(cfg), "--dim", "16", "--analytic",
                    "--q1", "0", "--p1", "0", "--q2", "0", "--p2", "0", "--q", "0", "--p", "0")
        assert r.returncode == 0
        prov = json.loads(r.stdout)["provenance"]
        assert prov["config"]["dim"] == 16
        assert prov["config"]["seed"] == 7

    def test_strict_mode_truncation_warning(self, tmp_path):
        # grid corner far outside the truncation -> contract warning -> exit 2
        out = tmp_path / "w.csv"
        r = run_cli("wigner", "--state", "vacuum", "--dim", "16", "--grid-points", "21",
                    "--strict", "--out", str(out))
        assert r.returncode == 2
        assert "warning" in r.stderr.lower()

    def test_nonstrict_same_run_exits_0(self, tmp_path):
        out = tmp_path / "w.csv"
        r = run_cli("wigner", "--state", "vacuum", "--dim", "16", "--grid-points", "21",
                    "--out", str(out))
        assert r.returncode == 0


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        dirs = [tmp_path / "run1", tmp_path / "run2"]
        triples = tmp_path / "triples.json"
        write_triples(triples, TRIPLE_ROWS)
        for d in dirs:
            d.mkdir()
            (d / "triples.json").write_bytes(triples.read_bytes())
            # identical config includes identical (relative) paths
            # occupied states need the finer damping to meet the 1e-6 trace check
            r1 = run_cli("wigner", "--state", "coherent:0.7,0.3", "--dim", "32",
                         "--damping", "0.08,0.04,0.02,0.01", "--order", "3",
                         "--grid-points", "41", "--out", "w.csv", cwd=d)
            r2 = run_cli("kernel", "--numeric", "--dim", "64", "--triples", "triples.json",
                         "--out", "k.csv", cwd=d)
            assert r1.returncode == 0 and r2.returncode == 0
        for name in ("w.csv", "w.json", "w.provenance.json", "k.csv", "k.provenance.json"):
            a = (dirs[0] / name).read_bytes()
            b = (dirs[1] / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"
