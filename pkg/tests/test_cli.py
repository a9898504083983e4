import io
import json
import subprocess
import sys

import pytest

from guarded_saturate.cli import main

from conftest import SAMPLES


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def sample(name):
    return SAMPLES / f"{name}.gtgd"


def test_saturate_gsat():
    code, out = run("saturate", "--algo", "gsat", sample("compose_evolve"))
    assert code == 0
    lines = out.splitlines()
    assert "R(X1) -> P(X1)." in lines and "R(X1), S(X1) -> M(X1)." in lines
    assert lines[-1].startswith("% gsat:")


def test_saturate_unification_example():
    code, out = run("saturate", "--algo", "gsat", sample("unif_issue"))
    assert code == 0 and "R(X1,X2) -> P(X1)." in out.splitlines()


def test_saturate_dgsat():
    code, out = run("saturate", "--algo", "dgsat", sample("skolem_resolution"))
    assert code == 0 and "R(X1) -> T(X1)." in out.splitlines()


def test_saturate_auto_and_json():
    code, out = run("saturate", "--format", "json", sample("disjunctive_chase"))
    assert code == 0
    data = json.loads(out)
    assert "R(X1,X2) -> M(X1,X1) | M(X1,X2) | P(X2)." in data["rules"]
    assert data["stats"]["n"] == 6


def test_saturate_output_is_deterministic():
    assert run("saturate", "--algo", "ssat", sample("compose_evolve")) == \
        run("saturate", "--algo", "ssat", sample("compose_evolve"))


def test_answer():
    code, out = run("answer", sample("disjunctive_rewriting"))
    assert code == 0 and out.splitlines() == ["Q1: yes", "Q2: no"]
    for method in ("resolution", "brute"):
        assert run("answer", "--method", method, sample("disjunctive_rewriting"))[1] == out


def test_answer_disjunctive():
    code, out = run("answer", sample("disjunctive_chase"))
    assert code == 0 and out.strip() == "Q1: yes"


def test_answer_empty_rules(tmp_path):
    f = tmp_path / "p.gtgd"
    f.write_text("A(c).\n? A(c).\n")
    assert run("answer", f) == (0, "Q1: yes\n")


def test_answer_rejects_existential_query():
    assert run("answer", sample("chase_proof"))[0] == 5


def test_chase_commands():
    code, out = run("chase", sample("chase_proof"))
    assert code == 0
    q1, q2 = out.splitlines()
    assert q1.startswith("Q1: yes (") and q2 == "Q2: no (fixpoint)"
    code, out = run("chase", "--one-pass", sample("tree_like"))
    assert "one-pass: false" in out
    code, out = run("chase", sample("disjunctive_chase"))
    assert out.startswith("Q1: yes (tree of")


def test_chase_empty_rules(tmp_path):
    f = tmp_path / "p.gtgd"
    f.write_text("A(c).\n? B(c).\n")
    assert run("chase", f) == (0, "Q1: no (fixpoint)\n")


def test_chase_emit(tmp_path):
    code, out = run("chase", "--emit", "json", sample("tree_like"))
    assert code == 0
    assert "digraph" in run("chase", "--emit", "dot", sample("tree_like"))[1]


def test_verify_file_and_injection():
    code, out = run("verify", sample("compose_evolve"))
    assert code == 0 and out.rstrip().endswith("result: pass")
    code, out = run("verify", "--inject-unsound", sample("compose_evolve"))
    assert code == 1 and "FAIL" in out and "->" in out


def test_verify_random_small():
    code, out = run("verify", "--random", "5", "--seed", "7", "--class", "gtgd")
    assert code == 0 and "result: pass" in out
    assert run("verify", "--random", "5", "--seed", "7", "--class", "gtgd")[1] == out


def test_normalize():
    code, out = run("normalize", "--form", "skolem", sample("skolem_resolution"))
    assert code == 0 and "P(X,f1_1(X))" in out


@pytest.mark.parametrize("text, code", [
    ("R(X1 -> P(X1).", 2),
    ("R(X1,X2), R(X2,X3) -> P(X1).", 3),
])
def test_error_exit_codes(tmp_path, text, code):
    f = tmp_path / "bad.gtgd"
    f.write_text(text)
    assert run("saturate", f)[0] == code


def test_rule_class_error(tmp_path):
    f = tmp_path / "dis.gtgd"
    f.write_text("A(X) -> B(X) | C(X).\n")
    assert run("saturate", "--algo", "gsat", f)[0] == 4


def test_missing_file():
    assert run("saturate", "no/such/file.gtgd")[0] == 2


def test_bench_writes_report(tmp_path):
    code, out = run("bench", "--report-dir", tmp_path, "--sizes", "4,8", "--repeats", "1",
                    "--programs", "3")
    assert code == 0
    for name in ("scaling.csv", "scaling.png", "closure_sizes.csv", "closure_sizes.png"):
        assert (tmp_path / name).stat().st_size > 0
    assert "slope" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "guarded_saturate.cli", "answer",
                           str(sample("disjunctive_rewriting"))], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "Q1: yes\nQ2: no\n"
