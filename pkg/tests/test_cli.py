import pytest

from bipweave import bundled
from bipweave.cli import EXIT_CONFORMANCE, EXIT_OK, EXIT_PARSE, EXIT_USAGE, EXIT_VALIDATE, EXIT_WEAVE, main
from bipweave.frontend import parse_model, render_model


def data(name):
    return bundled.data_path(name)


def test_weave_without_aspects_is_render(capsys):
    assert main(["weave", data("network.bip")]) == EXIT_OK
    out = capsys.readouterr().out
    assert out == render_model(bundled.model("network"))


def test_weave_network_with_coverage(capsys, tmp_path):
    files = [data(f"{n}.abip") for n in bundled.NETWORK_CONCERNS]
    out_file = tmp_path / "woven.bip"
    assert main(["weave", data("network.bip"), *files, "--coverage", "--out", str(out_file)]) == EXIT_OK
    err = capsys.readouterr().err
    rows = {line.split()[0]: line.split()[1:3] for line in err.splitlines()[1:]}
    assert rows["logging"] == ["10", "0"]
    assert rows["faulttolerance"] == ["0", "3"]
    woven = parse_model(out_file.read_text(), strict=False)
    assert any(a.name == "ip_auth_verify" for a in woven.interactions)


def test_strategies_differ_on_procedures(capsys):
    main(["weave", data("procedures.bip"), data("procedures.abip"), "--strategy", "serial"])
    serial = capsys.readouterr().out
    main(["weave", data("procedures.bip"), data("procedures.abip"), "--strategy", "all"])
    together = capsys.readouterr().out
    assert serial != together


def test_match(capsys):
    assert main(["match", data("procedures.bip"), data("procedures.abip")]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["a [B]: t5", "ap [B]: t6"]


def test_simulate_is_seeded(capsys):
    main(["simulate", data("dala.bip"), "--steps", "6", "--seed", "4"])
    first = capsys.readouterr().out
    main(["simulate", data("dala.bip"), "--steps", "6", "--seed", "4"])
    assert capsys.readouterr().out == first
    assert len(first.splitlines()) == 6


def test_check_passes(capsys):
    assert main(["check", data("network.bip"), data("authentication.abip")]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count(": PASS") == 3


def test_dot(capsys):
    assert main(["dot", data("pingpong.bip")]) == EXIT_OK
    assert capsys.readouterr().out.startswith('digraph "PingPong"')


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.bip"
    bad.write_text("module M atom")
    assert main(["weave", str(bad)]) == EXIT_PARSE
    invalid = tmp_path / "invalid.bip"
    invalid.write_text("module M\natom A { location L; transition t: L -> Q on p; }\n")
    assert main(["weave", str(invalid)]) == EXIT_VALIDATE
    assert main(["weave", str(tmp_path / "missing.bip")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_weave_error_exit_code(capsys):
    # weaving the same aspect twice reuses its instrumentation names
    assert main(["weave", data("procedures.bip"), data("procedures.abip"), data("procedures.abip")]) == EXIT_WEAVE
    assert "collides" in capsys.readouterr().err


def test_conformance_exit_code(tmp_path, monkeypatch, capsys):
    import bipweave.cli as cli
    from bipweave.conformance import drop_local_advice

    real = cli.weave_aspect

    def broken(c, asp):
        w, rep = real(c, asp)
        return drop_local_advice(w, asp.target, asp.aid, "after"), rep

    monkeypatch.setattr(cli, "weave_aspect", broken)
    assert main(["check", data("network.bip"), data("logging.abip")]) == EXIT_CONFORMANCE
    assert "FAIL" in capsys.readouterr().out
