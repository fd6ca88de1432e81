import json

from spectra4.cli import main


def run(argv):
    return main([str(a) for a in argv])


def test_usage_errors(tmp_path, config_file, capsys):
    assert run(["nonsense"]) == 1
    assert run(["solve", "--config", config_file]) == 1       # missing --out
    assert run(["solve", "--config", tmp_path / "absent.json",
                "--out", tmp_path / "e.json"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"a1": -1, "a2": 1, "beta": [0,1], "delta": [1,1], '
                   '"q_left": "0", "q_right": "0"}', encoding="utf-8")
    assert run(["solve", "--config", bad, "--out", tmp_path / "e.json"]) == 1
    err = capsys.readouterr().err
    assert "a1 must be > 0" in err


def test_solve_outputs_and_manifest(tmp_path, config_file):
    out = tmp_path / "eig.json"
    rc = run(["solve", "--config", config_file, "--s-max", "4.4",
              "--positive-only", "--out", out])
    assert rc == 0
    data = json.loads(out.read_text())
    assert data["manifest"] == "eig.manifest.json"
    lams = [r["lambda_re"] for r in data["records"]]
    assert any(abs(l - 7.4665459) < 1e-4 for l in lams)
    assert any(abs(l - 121.7601264) < 1e-3 for l in lams)
    csv = (tmp_path / "eig.csv").read_text().splitlines()
    assert csv[0] == "# manifest: eig.manifest.json"
    assert csv[1].startswith("n,lambda_re,lambda_im,s_re,s_im,residual")
    manifest = json.loads((tmp_path / "eig.manifest.json").read_text())
    assert manifest["subcommand"] == "solve"
    assert "find_eigenvalues_s" in manifest["timings"]
    assert (tmp_path / "eig.png").exists()


def test_solve_no_plot(tmp_path, config_file):
    out = tmp_path / "eig.json"
    rc = run(["solve", "--config", config_file, "--s-max", "2.0",
              "--positive-only", "--no-plot", "--out", out])
    assert rc == 0
    assert not (tmp_path / "eig.png").exists()


def test_solve_determinism_across_runs_and_jobs(tmp_path, config_file):
    blobs = {}
    for tag, jobs in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / f"{tag}.json"
        rc = run(["solve", "--config", config_file, "--s-max", "6.0",
                  "--jobs", jobs, "--no-plot", "--out", out])
        assert rc == 0
        records = out.read_bytes().replace(f"{tag}.manifest".encode(),
                                           b"X.manifest")
        csv = (tmp_path / f"{tag}.csv").read_bytes().replace(
            f"{tag}.manifest".encode(), b"X.manifest")
        blobs[tag] = (records, csv)
    assert blobs["a"] == blobs["b"] == blobs["c"]


def test_charfun_csv(tmp_path, config_file):
    out = tmp_path / "w.csv"
    rc = run(["charfun", "--config", config_file, "--s-grid", "0.5:3.0:0.5",
              "--out", out])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# manifest: w.manifest.json"
    assert lines[1] == "lambda_re,lambda_im,s_re,s_im,w_scaled_re,w_scaled_im,log_scale"
    assert len(lines) == 2 + 6
    assert (tmp_path / "w.png").exists()


def test_charfun_numerical_failure_exit_2(tmp_path, config_file):
    out = tmp_path / "w.csv"
    rc = run(["charfun", "--config", config_file,
              "--s-grid", "900000:1000000:50000", "--out", out])
    assert rc == 2


def test_asym_grid_and_match(tmp_path, config_file):
    eig = tmp_path / "eig.json"
    assert run(["solve", "--config", config_file, "--s-max", "6.0",
                "--no-plot", "--out", eig]) == 0
    out = tmp_path / "grid.csv"
    rc = run(["asym", "--config", config_file, "--n-max", "6",
              "--match", eig, "--window-lo", "1", "--window-hi", "6",
              "--out", out])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "n,family,s_pred,lambda_pred"
    assert len(lines) == 2 + 12      # both families
    ann = json.loads((tmp_path / "grid.match.json").read_text())
    assert ann["median_error"] is not None
    matched = [r for r in ann["records"] if r["asym_n"] is not None]
    assert matched
    assert (tmp_path / "grid.png").exists()


def test_asym_single_family(tmp_path, config_file):
    out = tmp_path / "grid.csv"
    rc = run(["asym", "--config", config_file, "--n-max", "4",
              "--family", "prime", "--no-plot", "--out", out])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 + 4


def test_oracle_cli(tmp_path, config_file):
    out = tmp_path / "oracle.json"
    dump = tmp_path / "matrix.csv"
    rc = run(["oracle", "--config", config_file, "--n", "40", "--k", "6",
              "--dump-matrix", dump, "--out", out])
    assert rc == 0
    data = json.loads(out.read_text())
    assert len(data["eigenvalues"]) == 6
    lams = [complex(a, b) for a, b in data["eigenvalues"]]
    assert any(abs(l) < 1e-2 for l in lams)  # the zero eigenvalue
    assert dump.exists()
    assert (tmp_path / "oracle.png").exists()


def test_verify_volterra_subreport(config_file, capsys):
    rc = run(["verify", "--config", config_file, "--volterra"])
    assert rc == 0
    out = capsys.readouterr().out
    report = json.loads(out)
    assert report["variants"]["corrected"]["winner"] == "paper-eq-1.1"
    assert report["variants"]["as-printed"]["winner"] is None


def test_version_flag(capsys):
    rc = run(["--version"])
    assert rc == 0


def test_verify_failure_exit_3(tmp_path, config_file, monkeypatch):
    import spectra4.cli as cli

    def fake_verification(problem, **kw):
        return {"checks": {"stub": {"passed": False, "detail": 1.0}},
                "all_passed": False, "n_records": 0, "records": []}

    monkeypatch.setattr(cli, "run_verification", fake_verification)
    out = tmp_path / "report.json"
    rc = run(["verify", "--config", config_file, "--no-plot", "--out", out])
    assert rc == 3
    assert json.loads(out.read_text())["all_passed"] is False
