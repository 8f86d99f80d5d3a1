import random
from fractions import Fraction as F

import numpy as np
import pytest

import ppscert as pc
from conftest import exact_linear_lfp, random_system


def brute_ceil(target: F, max_den: int) -> F:
    # exhaustive oracle: smallest p/q >= target with q <= max_den
    best = None
    for q in range(1, max_den + 1):
        p = -((-target.numerator * q) // target.denominator)  # ceil(target * q)
        cand = F(p, q)
        if best is None or cand < best:
            best = cand
    return best


def test_ceil_rational_matches_brute_force():
    rng = random.Random(31)
    for _ in range(300):
        target = F(rng.randint(0, 10_000), rng.randint(1, 10_000))
        max_den = rng.randint(2, 60)
        got = pc.ceil_rational(target, max_den)
        assert got == brute_ceil(target, max_den)
        assert got >= target and got.denominator <= max_den


def test_to_rational_dyadic_exact():
    assert pc.to_rational([0.5]) == (F(1, 2),)
    assert pc.to_rational([0.0]) == (F(0),)


def test_to_rational_binary64_point_six_at_den_ten():
    # float 0.6 is just below 3/5; the smallest admissible rational at
    # denominator bound 10 is exactly 3/5 (checked against the brute oracle)
    grain = pc.RoundingGrain(10)
    (got,) = pc.to_rational([0.6], grain)
    assert got == F(3, 5) == brute_ceil(F(0.6), 10)


def test_to_rational_round_up_property():
    rng = random.Random(32)
    for grain in (pc.RoundingGrain(7), pc.RoundingGrain(1000), pc.RoundingGrain()):
        values = [rng.uniform(0, 5) for _ in range(50)]
        out = pc.to_rational(values, grain)
        for x, q in zip(values, out):
            assert q >= F(x)
            assert q.denominator <= grain.denominator_bound


def test_to_rational_headroom():
    grain = pc.RoundingGrain(2 ** 32, headroom=F(1, 8))
    (got,) = pc.to_rational([0.25], grain)
    assert got == F(3, 8)


def test_to_rational_rejects_bad_entries():
    with pytest.raises(ValueError):
        pc.to_rational([float("nan")])
    with pytest.raises(ValueError):
        pc.to_rational([-0.25])
    with pytest.raises(ValueError):
        pc.RoundingGrain(1)


def test_check_inductive_dex(dex):
    sys, _ = pc.return_pps(dex[0])
    assert pc.check_inductive(sys, (F(3, 5), F(1, 2), F(0), F(1)))


def test_check_inductive_boundary_cases():
    sys = pc.parse_pps("x = 0.5 x^2 + 0.5\n")
    assert pc.check_inductive(sys, (F(1),))  # equality: the exact fixpoint
    assert pc.evaluate(sys, (F(9, 10),)) == (F(181, 200),)
    assert not pc.check_inductive(sys, (F(9, 10),))


def test_k_induction_subsumes_plain(dex):
    sys, _ = pc.return_pps(dex[0])
    ok, depth = pc.k_induction_check(sys, (F(3, 5), F(1, 2), F(0), F(1)), 10)
    assert ok and depth == 1


def test_k_induction_depth_two_example():
    sys = pc.parse_pps("x = 1/2 y + 1/4\ny = 1/2 x + 1/4\n")
    u = (F(1, 2), F(3, 5))
    # f(u) = (11/20, 1/2) fails plainly; the refined u min f(u) = (1/2, 1/2)
    # is a fixpoint below u, so depth 2 succeeds
    assert pc.evaluate(sys, u) == (F(11, 20), F(1, 2))
    assert pc.k_induction_check(sys, u, 1) == (False, None)
    assert pc.k_induction_check(sys, u, 10) == (True, 2)


def test_k_induction_never_rescues_sub_lfp():
    sys = pc.parse_pps("x = 0.5 x^2 + 0.5\n")
    assert pc.k_induction_check(sys, (F(9, 10),), 10) == (False, None)


def test_k_induction_soundness_on_linear_systems():
    # for x = Ax + b the fixpoint is exactly solvable; anything accepted at
    # any depth must dominate it
    rng = random.Random(33)
    for _ in range(40):
        n = rng.randint(2, 3)
        A = [[F(rng.randint(0, 3), 10) for _ in range(n)] for _ in range(n)]
        b = [F(rng.randint(1, 5), 10) for _ in range(n)]
        lfp = exact_linear_lfp(A, b)
        sys = pc.PolySystem(
            [f"v{i}" for i in range(n)],
            [
                [pc.Monomial.make(b[i])]
                + [pc.Monomial.make(A[i][j], {j: 1}) for j in range(n) if A[i][j] > 0]
                for i in range(n)
            ],
        )
        for _ in range(8):
            u = tuple(v + F(rng.randint(-2, 6), 100) for v in lfp)
            if any(x < 0 for x in u):
                continue
            ok, _ = pc.k_induction_check(sys, u, 10)
            if ok:
                assert all(ui >= li for ui, li in zip(u, lfp))


def test_rationalize_and_verify_simple():
    # system where (3/5, 1/2) is inductive; floats (0.6, 0.5) rationalize
    # to exactly those values
    sys = pc.parse_pps("a = 0.25 a^2 + 0.5\nb = 0.25 a b + 0.25 b + 0.25\n")
    assert pc.check_inductive(sys, (F(3, 5), F(1, 2)))
    cert = pc.rationalize_and_verify(sys, np.array([0.6, 0.5]))
    assert cert.upper == (F(3, 5), F(1, 2))
    assert cert.k_used == 1
    assert cert.system_fingerprint == sys.fingerprint()


def test_rationalize_identity_on_exact_dyadics():
    sys = pc.parse_pps("x = 0.5 x + 0.25\n")
    cert = pc.rationalize_and_verify(sys, np.array([0.5]))
    assert cert.upper == (F(1, 2),)
    assert cert.k_used == 1


def test_rationalize_fails_below_lfp(dex):
    sys, _ = pc.return_pps(dex[0])
    with pytest.raises(pc.ExactCheckFailed):
        pc.rationalize_and_verify(sys, np.array([0.5, 0.4, 0.0, 1.0]))


def test_verifier_accepts_hand_certificate(dex):
    sys, _ = pc.return_pps(dex[0])
    cert = pc.Certificate(
        sys.fingerprint(), sys.var_names,
        (F(3, 5), F(1, 2), F(0), F(1)), F(1, 1000), 1,
    )
    assert pc.verify_certificate_file(sys, cert).ok


def test_verifier_rejects_mutation(dex):
    sys, _ = pc.return_pps(dex[0])
    cert = pc.Certificate(
        sys.fingerprint(), sys.var_names,
        (F(11, 20), F(1, 2), F(0), F(1)), F(1, 1000), 1,
    )
    verdict = pc.verify_certificate_file(sys, cert)
    assert not verdict.ok
    assert verdict.coordinate == "q.Z.q"


def test_verifier_rejects_foreign_fingerprint(dex, fex):
    sys, _ = pc.return_pps(dex[0])
    cert = pc.solve(fex)
    verdict = pc.verify_certificate_file(sys, cert)
    assert not verdict.ok and "fingerprint" in verdict.reason


def test_verifier_idempotent(dex):
    sys, _ = pc.return_pps(dex[0])
    cert = pc.solve(sys)
    assert pc.verify_certificate_file(sys, cert) == pc.verify_certificate_file(sys, cert)


def test_certificate_file_round_trip(tmp_path, dex):
    sys, _ = pc.return_pps(dex[0])
    cert = pc.solve(sys)
    path = tmp_path / "dex.cert"
    cert.save(path)
    loaded = pc.Certificate.load(path)
    assert loaded == cert
    assert loaded.to_text() == cert.to_text()
    text = path.read_text(encoding="utf-8")
    assert text.startswith("ppscert v1\nsystem-sha256 ")
    assert "\r" not in text


def test_certificate_parse_errors(tmp_path):
    bad = tmp_path / "bad.cert"
    bad.write_text("ppscert v1\nsystem-sha256 ab\nepsilon 1/1000\nk 1\nx one/two\n")
    with pytest.raises(pc.ParseError):
        pc.Certificate.load(bad)
    bad.write_text("not a cert\n")
    with pytest.raises(pc.ParseError):
        pc.Certificate.load(bad)
    bad.write_text("ppscert v1\nsystem-sha256 ab\nepsilon 1/1000\nk 0\nx 1/2\n")
    with pytest.raises(pc.ParseError):
        pc.Certificate.load(bad)


def test_mutated_certificates_rejected():
    rng = random.Random(34)
    checked = 0
    for _ in range(20):
        sys = random_system(rng)
        cert = pc.solve(sys)
        assert pc.verify_certificate_file(sys, cert).ok
        witness = cert.lower_witness
        coords = [i for i in range(sys.n) if witness[i] > 0.01]
        if not coords:
            continue
        i = rng.choice(coords)
        # push one coordinate strictly below a known lower bound on the lfp
        mutated = list(cert.upper)
        mutated[i] = F(witness[i] / 2)
        bad = pc.Certificate(
            cert.system_fingerprint, cert.var_names, tuple(mutated),
            cert.epsilon, cert.k_used,
        )
        assert not pc.verify_certificate_file(sys, bad).ok
        checked += 1
    assert checked >= 10
