import json
import subprocess
import sys

import numpy as np
import pytest

from kklab import catalog as cat
from kklab.bundle import assemble_kk_metric
from kklab.chart import scalar_curvature
from kklab.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, catalog_listing, main, run_scenario


def run(cfg, **kw):
    return run_scenario(json.dumps(cfg), **kw)


def test_curvature_example():
    code, rep, _ = run({"command": "curvature", "geometry": "s2(1.0)", "points": [[1.0472, 0]]})
    assert code == EXIT_OK
    assert rep["rows"][0]["scalar"] == pytest.approx(2.0, abs=1e-6)


def test_verify_identity_hopf():
    code, rep, _ = run({"command": "verify-identity", "geometry": "hopf"})
    assert code == EXIT_OK
    assert len(rep["rows"]) == 20
    assert max(abs(r["residual"]) for r in rep["rows"]) < 1e-5


def test_verify_identity_failure_names_point():
    code, rep, path = run({"command": "verify-identity", "geometry": "warped-su2", "points": {"random": 2, "seed": 1},
                           "tolerance": 1e-14})
    assert code == EXIT_NUMERIC and path is None
    assert "residual" in rep["error"] and "[" in rep["error"]


@pytest.mark.parametrize("text", ["{not json", json.dumps({"command": "fly", "geometry": "hopf"}),
                                  json.dumps({"command": "curvature", "geometry": "klein-bottle"}),
                                  json.dumps({"command": "curvature", "geometry": "hopf", "bogus": 1}),
                                  json.dumps({"command": "curvature", "geometry": "s2(1.0)", "points": [[0.0, 0.0]]})])
def test_malformed_configs_exit_2(tmp_path, text):
    code, rep, path = run_scenario(text, out_dir=tmp_path)
    assert code == EXIT_CONFIG
    assert path is None and not any(tmp_path.iterdir())


def test_reports_byte_identical_apart_from_timestamp(tmp_path):
    cfg = {"command": "decompose", "geometry": "warped-su2", "points": {"random": 3, "seed": 4}}
    docs = []
    for sub in ("a", "b"):
        code, _, path = run(cfg, out_dir=tmp_path / sub)
        assert code == EXIT_OK
        doc = json.loads(path.read_text())
        assert "timestamp" in doc
        doc.pop("timestamp")
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]


def test_csv_output(tmp_path):
    code, _, path = run({"command": "jacobian", "geometry": "warped-u1-line(1.0, 2)", "points": [[0.5], [1.0]]},
                        out_dir=tmp_path, fmt="csv")
    assert code == EXIT_OK and path.suffix == ".csv"
    lines = path.read_text().splitlines()
    assert len(lines) == 3


def test_hamiltonian_command():
    code, rep, _ = run({"command": "hamiltonian", "geometry": "warped-su2", "representation": "spin-1/2",
                        "points": [[1.0, 2.0]]})
    assert code == EXIT_OK
    code, rep, _ = run({"command": "hamiltonian", "geometry": "warped-su2", "representation": {"charge": 1.0}})
    assert code == EXIT_CONFIG


def test_inline_bundle():
    cfg = {
        "command": "decompose",
        "geometry": {"kind": "bundle", "group": "u1", "base_dim": 1, "base_lower": [-2], "base_upper": [2],
                     "h": [["1"]], "gamma": [["exp(2*x0)"]], "A": [["0"]]},
        "points": [[0.3]],
    }
    code, rep, _ = run(cfg)
    assert code == EXIT_OK
    assert rep["rows"][0]["J_tilde_direct"] == pytest.approx(1.0, abs=1e-6)


def test_mc_reduce_small():
    code, rep, _ = run({"command": "mc-reduce", "geometry": "flat-circle-u1",
                        "mc": {"x_a": [1.0], "x_b": [1.3], "dt": 0.01, "n_paths": 2000, "seed": 1, "t_b": 0.2}})
    assert code == EXIT_OK
    assert set(rep["rows"][0]) == {"case", "lhs", "rhs", "ratio", "stderr", "n_paths", "dt", "seed"}


def test_catalog_listing_and_check():
    lines, ok = catalog_listing(check=True)
    names = [line.split()[0] for line in lines]
    for name in ("flat-torus", "s2", "s3", "polar-plane", "hopf", "trivial-su2-product", "warped-su2", "warped-u1-line"):
        assert name in names
    assert ok and all(line.endswith("[ok]") for line in lines)


def test_warped_su2_gamma_spd():
    b = cat.warped_su2()
    g = b.gamma(cat.random_points(b, 100, seed=0))
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_hopf_total_scalar_curvature():
    b = cat.hopf()
    total = assemble_kk_metric(b)
    for x in cat.random_points(b, 5, seed=7):
        assert scalar_curvature(total, b.identity_point(x)) == pytest.approx(6.0, abs=1e-5)


def test_main_entry_point(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "curvature", "geometry": "flat-torus(2)", "points": [[1.0, 1.0]]}))
    assert main(["curvature", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "curvature.json").exists()
    assert main(["decompose", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["catalog"]) == 0
    assert "hopf" in capsys.readouterr().out


def test_console_script(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("[]")
    proc = subprocess.run([sys.executable, "-m", "kklab.cli", "curvature", "--config", str(cfg)], capture_output=True)
    assert proc.returncode == EXIT_CONFIG
