import os
import subprocess
import sys

import pytest

from bess.cli import EXIT_REJECT, EXIT_USAGE, JobConfig, main, parse_config_text, UsageError
from bess.fileformat import read_trellis
from bess.oracle import enumerate_band

SHIFT_ARGS = ["--scheme", "bess-shift", "--N", "128", "--L", "129", "--M", "8", "--hi", "3",
              "--wi", "3", "--s", "1", "--nalpha", "10", "--y", "11"]


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def shift_dump(tmp_path_factory):
    path = tmp_path_factory.mktemp("dump") / "shift.bin"
    assert main(["build", *SHIFT_ARGS, "--out", str(path)]) == 0
    return path


def test_build_small_band(capsys):
    code, out, _ = run(["build", "--scheme", "bess", "--N", 7, "--L", 8, "--M", 8, "--hi", 3,
                        "--wi", 3, "--s", 1, "--mode", "exact"], capsys)
    assert code == 0
    assert "k=8" in out.splitlines()


def test_build_shift(capsys):
    code, out, _ = run(["build", *SHIFT_ARGS], capsys)
    lines = out.splitlines()
    assert code == 0
    assert "k=164" in lines
    assert "p=7 t=9" in lines
    assert "precision=(10, 8)" in lines
    assert any(l.startswith("storage=0.15 kB") for l in lines)


def test_build_dump_matrix(capsys):
    code, out, _ = run(["build", "--scheme", "ess", "--N", 3, "--L", 4, "--M", 6, "--mode", "exact",
                        "--dump-matrix"], capsys)
    assert code == 0
    assert out.splitlines()[-4:] == ["1 1 1 1", "4 3 2 1", "7 4 2 1", "11 6 3 1"]


def test_build_with_energy_and_config(tmp_path, capsys):
    cfg = tmp_path / "job.cfg"
    cfg.write_text("# small band\nscheme = bess\nN = 7\nE_max = 63\nh_i = 3\nw_i = 3\nmode = bp\n")
    code, out, _ = run(["build", "--config", cfg, "--mode", "exact"], capsys)
    assert code == 0 and "k=8" in out.splitlines()
    assert "precision" not in out


def test_build_writes_loadable_dump(shift_dump):
    tr = read_trellis(shift_dump)
    assert tr.k == 164 and tr.mode == "shift"


def test_config_parsing():
    assert parse_config_text("N = 7\nresolution=0.01 # grid\n") == {"N": 7, "resolution": 0.01}
    with pytest.raises(UsageError):
        parse_config_text("color = red")
    with pytest.raises(UsageError):
        parse_config_text("N 7")
    with pytest.raises(UsageError):
        parse_config_text("N = seven")
    with pytest.raises(UsageError):
        JobConfig(N=7, L=8, E_max=64).trellis_params()


@pytest.mark.parametrize("argv", [
    ["build", "--N", "5"],
    ["build", "--scheme", "bess", "--N", "7", "--L", "8"],
    ["build", "--scheme", "bess-shift", "--N", "7", "--L", "8", "--hi", "3", "--wi", "3", "--y", "4"],
    ["build", "--scheme", "bess", "--N", "7", "--L", "8", "--hi", "3", "--wi", "3", "--s", "2"],
    ["nope"],
    ["build", "--N", "x"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == EXIT_USAGE


@pytest.mark.parametrize("fmt", ["text", "binary"])
def test_encode_decode_roundtrip(shift_dump, tmp_path, fmt):
    data = os.urandom(41 * 20)  # 41 bytes = two 164-bit blocks
    src, amps, back = tmp_path / "in", tmp_path / "amps", tmp_path / "back"
    src.write_bytes(data)
    assert main(["encode", "--trellis", str(shift_dump), "--in", str(src), "--out", str(amps),
                 "--format", fmt]) == 0
    assert main(["decode", "--trellis", str(shift_dump), "--in", str(amps), "--out", str(back),
                 "--format", fmt]) == 0
    assert back.read_bytes() == data


def test_encode_zero_bits_gives_smallest_sequence(tmp_path, capsys):
    dump = tmp_path / "band.bin"
    main(["build", "--scheme", "bess", "--N", "7", "--L", "8", "--hi", "3", "--wi", "3",
          "--out", str(dump)])
    src, amps = tmp_path / "zeros", tmp_path / "amps"
    src.write_bytes(bytes(2))
    assert main(["encode", "--trellis", str(dump), "--in", str(src), "--out", str(amps)]) == 0
    first = ",".join(map(str, enumerate_band(7, 8, 8, 3, 3, 1)[0]))
    assert amps.read_text() == f"{first}\n{first}\n"


def test_decode_rejects_out_of_band(tmp_path, capsys):
    dump = tmp_path / "band.bin"
    main(["build", "--scheme", "bess", "--N", "7", "--L", "8", "--hi", "3", "--wi", "3",
          "--out", str(dump)])
    amps = tmp_path / "amps"
    amps.write_text("1,3,3,3,3,3,3\n7,3,1,1,1,1,1\n")
    capsys.readouterr()
    code = main(["decode", "--trellis", str(dump), "--in", str(amps), "--out", str(tmp_path / "o")])
    assert code == EXIT_REJECT
    assert "block 1" in capsys.readouterr().err


def test_encode_rejects_partial_block(shift_dump, tmp_path):
    src = tmp_path / "in"
    src.write_bytes(os.urandom(30))
    assert main(["encode", "--trellis", str(shift_dump), "--in", str(src),
                 "--out", str(tmp_path / "o")]) == EXIT_REJECT


@pytest.mark.parametrize("chunk", [1, 8, 64, 1000])
def test_stream_matches_encode(shift_dump, tmp_path, chunk):
    src = tmp_path / "in"
    src.write_bytes(os.urandom(41 * 4))
    main(["encode", "--trellis", str(shift_dump), "--in", str(src), "--out", str(tmp_path / "block")])
    main(["stream", "--trellis", str(shift_dump), "--in", str(src), "--out", str(tmp_path / "stream"),
          "--chunk-bits", str(chunk)])
    assert (tmp_path / "stream").read_bytes() == (tmp_path / "block").read_bytes()


def test_stream_empty_input(shift_dump, tmp_path):
    src = tmp_path / "in"
    src.write_bytes(b"")
    assert main(["stream", "--trellis", str(shift_dump), "--in", str(src),
                 "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o").read_bytes() == b""


def test_analyze(shift_dump, tmp_path, capsys):
    prof = tmp_path / "profile.csv"
    argv = ["analyze", "--trellis", str(shift_dump), "--samples", "200", "--seed", "3",
            "--profile", str(prof)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert "rate_loss,0" in out and "k,164" in out
    assert run(argv, capsys)[1] == out
    rows = dict(line.split(",") for line in prof.read_text().splitlines()[1:])
    assert float(rows["60"]) <= 1e-12
    assert float(rows["110"]) < 2e-5


def test_analyze_exhaustive_cap(shift_dump, capsys):
    code, _, err = run(["analyze", "--trellis", str(shift_dump)], capsys)
    assert code == EXIT_REJECT and "cap" in err


def test_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--N", "128", "--L", "129", "--hi", "3", "--wi", "3",
                 "--y-min", "1", "--y-max", "12", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "y,rho_bar,k"
    rbs = [float(l.split(",")[1]) for l in lines[1:]]
    assert len(rbs) == 12 and rbs == sorted(rbs)


def test_oracle(capsys):
    code, out, _ = run(["oracle", "--N", "3", "--L", "4", "--M", "6", "--index", "0"], capsys)
    assert code == 0 and out.splitlines() == ["count=11", "1,1,1"]
    code, out, _ = run(["oracle", "--N", "7", "--L", "8", "--hi", "3", "--wi", "3"], capsys)
    assert out.splitlines() == ["count=374"]


def test_storage_scaling_table(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["storage", "--scaling-table", "--out", str(out)]) == 0
    cells = [l.split(",")[-1] for l in out.read_text().splitlines()[1:]]
    assert cells == ["1.61 MB", "12.63 MB", "42.36 MB", "94.39 kB", "409.37 kB", "958.72 kB",
                     "23.22 kB", "104.91 kB", "221.05 kB", "4.51 kB", "4.51 kB", "4.51 kB"]


def test_storage_single_scheme(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["storage", *SHIFT_ARGS, "--out", str(out)]) == 0
    assert "rendered,0.15 kB" in out.read_text()


def test_module_entry_point_exit_codes(tmp_path):
    env = dict(os.environ)
    ok = subprocess.run([sys.executable, "-m", "bess", "oracle", "--N", "3", "--L", "4", "--M", "6"],
                        capture_output=True, text=True, env=env)
    assert ok.returncode == 0 and ok.stdout == "count=11\n"
    bad = subprocess.run([sys.executable, "-m", "bess", "build"], capture_output=True, text=True)
    assert bad.returncode == EXIT_USAGE
    worse = subprocess.run([sys.executable, "-m", "bess", "encode", "--trellis", str(tmp_path / "none")],
                           capture_output=True, text=True)
    assert worse.returncode == EXIT_REJECT
